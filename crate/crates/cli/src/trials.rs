use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use collusim::experiment::{Condition, Suite, TrialResult};

use crate::format::{float, opt_float};

/// Columns before the per-seller win rates.
pub const FIXED_COLUMNS: [&str; 12] = [
    "trial",
    "condition",
    "seed",
    "rounds",
    "window",
    "cs_mean",
    "platform_rev",
    "seller_profit",
    "mean_bid_weight",
    "mean_manipulation",
    "mean_bid",
    "q_change",
];

pub fn header(n_sellers: usize) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=n_sellers).map(|i| format!("win_rate_{i}")))
        .collect()
}

/// One row per trial, grouped by condition in suite order.
pub fn to_csv(suite: &Suite) -> Result<String> {
    let n = suite.runs.first().and_then(|(_, r)| r.first()).map_or(0, |r| r.win_counts.len());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header(n))?;
    for (_, results) in &suite.runs {
        for r in results {
            let mut row = vec![
                r.trial.to_string(),
                r.condition.to_string(),
                r.seed.to_string(),
                r.rounds.to_string(),
                r.window_len().to_string(),
                float(r.cs_mean),
                float(r.platform_mean),
                float(r.seller_mean),
                float(r.mean_bid_weight),
                float(r.mean_manipulation),
                float(r.mean_bid),
                opt_float(r.q_change),
            ];
            row.extend(r.win_rates().into_iter().map(float));
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn check_header(path: &Path, got: &csv::StringRecord) -> Result<usize> {
    for (k, want) in FIXED_COLUMNS.iter().enumerate() {
        match got.get(k) {
            Some(h) if h == *want => {}
            Some(h) => bail!("{}: format error: column {} is '{h}', expected '{want}'", path.display(), k + 1),
            None => bail!("{}: format error: missing column '{want}'", path.display()),
        }
    }
    let n = got.len() - FIXED_COLUMNS.len();
    for (i, h) in got.iter().skip(FIXED_COLUMNS.len()).enumerate() {
        let want = format!("win_rate_{}", i + 1);
        if h != want {
            bail!("{}: format error: column {} is '{h}', expected '{want}'", path.display(), FIXED_COLUMNS.len() + i + 1);
        }
    }
    if n == 0 {
        bail!("{}: format error: missing column 'win_rate_1'", path.display());
    }
    Ok(n)
}

fn parse_row(rec: &csv::StringRecord, header: &[String]) -> Result<TrialResult> {
    let cell = |k: usize| rec.get(k).unwrap_or("");
    let bad = |k: usize| anyhow!("format error: bad value '{}' in column '{}'", cell(k), header[k]);
    let int = |k: usize| cell(k).parse::<u64>().map_err(|_| bad(k));
    let num = |k: usize| cell(k).parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(k));
    let rounds = int(3)? as usize;
    let window = int(4)? as usize;
    if window == 0 || window > rounds {
        return Err(bad(4));
    }
    let win_counts = (FIXED_COLUMNS.len()..header.len())
        .map(|k| {
            let c = num(k)? * window as f64;
            if c < -0.5 || c > window as f64 + 0.5 {
                return Err(bad(k));
            }
            Ok(c.round() as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult {
        trial: int(0)? as usize,
        condition: cell(1).parse::<Condition>().map_err(|_| bad(1))?,
        seed: int(2)?,
        rounds,
        window_start: rounds - window,
        cs_mean: num(5)?,
        platform_mean: num(6)?,
        seller_mean: num(7)?,
        seller_profit_means: Vec::new(),
        win_counts,
        mean_bid_weight: num(8)?,
        mean_manipulation: num(9)?,
        mean_bid: num(10)?,
        checkpoints: Vec::new(),
        q_change: if cell(11).is_empty() { None } else { Some(num(11)?) },
        series: None,
    })
}

/// Reads trial rows from one file. Returns the seller count and the rows.
pub fn read_csv(path: &Path) -> Result<(usize, Vec<TrialResult>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let hdr = rdr.headers().with_context(|| format!("{}: format error", path.display()))?.clone();
    let n = check_header(path, &hdr)?;
    let names: Vec<String> = hdr.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: format error", path.display()))?;
        let row = parse_row(&rec, &names).with_context(|| format!("{}: data row {}", path.display(), line + 1))?;
        rows.push(row);
    }
    Ok((n, rows))
}

/// Merges rows from several files into a suite paired by trial index.
/// Identical duplicate rows (such as a shared baseline) are kept once.
pub fn assemble(rows: Vec<TrialResult>) -> Result<Suite> {
    let mut by_cond: BTreeMap<Condition, BTreeMap<usize, TrialResult>> = BTreeMap::new();
    for r in rows {
        let slot = by_cond.entry(r.condition).or_default();
        match slot.get(&r.trial) {
            Some(prev) if *prev != r => bail!("conflicting rows for {} trial {}", r.condition, r.trial),
            Some(_) => {}
            None => {
                slot.insert(r.trial, r);
            }
        }
    }
    let Some(base) = by_cond.get(&Condition::Baseline) else {
        bail!("no baseline rows to pair against");
    };
    let trials: Vec<usize> = base.keys().copied().collect();
    for (c, rows) in &by_cond {
        if !rows.keys().copied().eq(trials.iter().copied()) {
            bail!("trial indices of {c} do not pair with the baseline");
        }
    }
    let runs = by_cond.into_iter().map(|(c, rows)| (c, rows.into_values().collect())).collect();
    Ok(Suite { runs })
}
