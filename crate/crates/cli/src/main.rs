mod format;
mod trials;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use collusim::analysis::{factorial_table, suite_stats, SuiteStats};
use collusim::experiment::{run_conditions, run_sweep, sweep_points, Channels, Condition, SweepAxis, SweepRow, TrialConfig};
use serde::{Deserialize, Serialize};

use crate::format::{float, json_mismatch, json_text, json_value, opt_float};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_TRIALS: usize = 100;

#[derive(Parser)]
#[command(name = "collusim", version, about = "Runs marketplace collusion experiments")]
struct Cli {
    /// Worker threads for trial execution.
    #[arg(long, global = true, env = "COLLUSIM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON file of trial configuration fields; missing fields keep their
    /// defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Matched trials of the chosen conditions; the baseline is always run.
    Run {
        #[command(flatten)]
        common: Common,
        /// Conditions to run, comma separated, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all",
              value_parser = PossibleValuesParser::new(["all", "baseline", "platform_only", "seller_only", "joint"]))]
        condition: Vec<String>,
    },
    /// All 16 on/off combinations of the four bias channels.
    Factorial {
        #[command(flatten)]
        common: Common,
    },
    /// One row per value of a single parameter.
    Sweep {
        #[arg(value_parser = PossibleValuesParser::new(SweepAxis::ALL.map(|a| a.name())))]
        axis: String,
        /// Values along the axis; the axis defaults when omitted.
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Recomputes statistics from trial CSV files.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Summary to verify against. Defaults to `summary.json` beside a
        /// single input file, when present.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Repeats the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// A bad sweep axis value.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// What produced a set of outputs, enough to produce them again.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Job {
    Run { conditions: Vec<Condition> },
    Factorial,
    Sweep { axis: SweepAxis, values: Vec<String> },
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    job: Job,
    trials: usize,
    seed_base: u64,
    config: TrialConfig,
    started_unix: u64,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
}

fn load_config(common: &Common) -> Result<TrialConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => TrialConfig::default(),
    };
    if let Some(r) = common.rounds {
        cfg.rounds = r;
    }
    if let Some(s) = common.seed_base {
        cfg.seed_base = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn conditions(names: &[String]) -> Result<Vec<Condition>> {
    let mut out = vec![Condition::Baseline];
    for n in names {
        if n == "all" {
            out.extend(Condition::ALL);
        } else {
            out.push(n.parse()?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["axis".to_string(), "value".into(), "trials".into(), "baseline_cs".into()];
    let conds = [Condition::PlatformOnly, Condition::SellerOnly, Condition::Joint];
    for c in conds {
        header.extend([format!("{c}_cs"), format!("{c}_effect"), format!("{c}_harm_rate")]);
    }
    header.extend(
        ["complementarity", "comp_ci_low", "comp_ci_high", "comp_cohens_d", "comp_p_value", "comp_positive_rate"]
            .map(String::from),
    );
    w.write_record(&header)?;
    for row in rows {
        let s = &row.stats;
        let mut rec = vec![
            row.axis.to_string(),
            row.label.clone(),
            s.trials.to_string(),
            opt_float(s.get(Condition::Baseline).map(|c| c.cs_mean)),
        ];
        for c in conds {
            let st = s.get(c);
            rec.extend([
                opt_float(st.map(|x| x.cs_mean)),
                opt_float(st.map(|x| x.effect)),
                opt_float(st.map(|x| x.harm_rate)),
            ]);
        }
        let comp = s.complementarity.as_ref();
        rec.extend([
            opt_float(comp.map(|x| x.mean)),
            opt_float(comp.and_then(|x| x.ci_low)),
            opt_float(comp.and_then(|x| x.ci_high)),
            opt_float(comp.and_then(|x| x.cohens_d)),
            opt_float(comp.and_then(|x| x.p_value)),
            opt_float(comp.map(|x| x.positive_rate)),
        ]);
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn factorial_csv(rows: &[SweepRow]) -> Result<String> {
    let cells: Vec<_> = rows
        .iter()
        .map(|r| {
            let mask = r.label.chars().fold(0u8, |m, c| m << 1 | (c != '-') as u8);
            (Channels::from_mask(mask), r.stats.clone())
        })
        .collect();
    let table = factorial_table(&cells)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record([
        "cell",
        "position",
        "endorsement",
        "manipulation",
        "decoy",
        "joint_effect",
        "complementarity",
        "cohens_d",
    ])?;
    for r in &table {
        let on = |b: bool| if b { "1" } else { "0" }.to_string();
        w.write_record([
            r.label.clone(),
            on(r.channels.position),
            on(r.channels.endorsement),
            on(r.channels.manipulation),
            on(r.channels.decoy),
            float(r.joint_effect),
            float(r.complementarity),
            opt_float(r.cohens_d),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Runs `job` and returns the output files as (name, contents).
fn execute(job: &Job, cfg: &TrialConfig, trials: usize) -> Result<Vec<(&'static str, String)>> {
    if trials == 0 {
        bail!("--trials must be positive");
    }
    match job {
        Job::Run { conditions } => {
            let suite = run_conditions(cfg, conditions, trials)?;
            let stats = suite_stats(&suite, cfg.catalog()?.quality())?;
            Ok(vec![("trials.csv", trials::to_csv(&suite)?), ("summary.json", json_text(&stats)?)])
        }
        Job::Factorial | Job::Sweep { .. } => {
            let (axis, values) = match job {
                Job::Sweep { axis, values } => (*axis, values.clone()),
                _ => (SweepAxis::Factorial, Vec::new()),
            };
            let points = sweep_points(cfg, axis, &values).map_err(|e| Usage(e.to_string()))?;
            let labels: Vec<String> = points.into_iter().map(|p| p.label).collect();
            let mut rows = Vec::with_capacity(labels.len());
            for (k, label) in labels.iter().enumerate() {
                rows.extend(run_sweep(cfg, axis, std::slice::from_ref(label), trials)?);
                eprintln!("{axis} {label}: done ({}/{})", k + 1, labels.len());
            }
            let table = if axis == SweepAxis::Factorial { factorial_csv(&rows)? } else { sweep_csv(&rows)? };
            let name = if axis == SweepAxis::Factorial { "factorial.csv" } else { "sweep.csv" };
            Ok(vec![(name, table), ("summary.json", json_text(&rows)?)])
        }
    }
}

/// Writes every file or none: on any failure the files already written are
/// removed.
fn write_all(out: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::new();
    for (name, text) in files {
        let path = out.join(name);
        if let Err(e) = fs::write(&path, text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e).with_context(|| format!("cannot write {}", path.display()));
        }
        written.push(path);
    }
    Ok(())
}

fn produce(job: Job, cfg: TrialConfig, trials: usize, out: &Path) -> Result<()> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut files = execute(&job, &cfg, trials)?;
    let manifest = Manifest {
        tool: "collusim".into(),
        version: VERSION.into(),
        job,
        trials,
        seed_base: cfg.seed_base,
        config: cfg,
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        outputs: files.iter().map(|(n, _)| n.to_string()).chain(["manifest.json".into()]).collect(),
    };
    // The manifest keeps full precision so a replay sees the same config.
    files.push(("manifest.json", serde_json::to_string_pretty(&manifest)? + "\n"));
    write_all(out, &files)?;
    for (name, _) in &files {
        println!("{}", out.join(name).display());
    }
    Ok(())
}

fn print_stats(stats: &SuiteStats) {
    println!("{:<14} {:>10} {:>10} {:>10} {:>10}", "condition", "cs_mean", "effect_%", "harm_rate", "platform");
    for c in &stats.conditions {
        println!(
            "{:<14} {:>10.4} {:>10.2} {:>10.3} {:>10.4}",
            c.condition.name(),
            c.cs_mean,
            c.effect,
            c.harm_rate,
            c.welfare.platform
        );
    }
    match &stats.complementarity {
        Some(comp) => println!(
            "complementarity {:.2} pp (95% CI {} to {}), d = {}, n = {}",
            comp.mean,
            opt_float(comp.ci_low),
            opt_float(comp.ci_high),
            opt_float(comp.cohens_d),
            comp.n
        ),
        None => println!("complementarity needs all four conditions"),
    }
}

fn report(paths: &[PathBuf], summary: Option<PathBuf>) -> Result<()> {
    let mut rows = Vec::new();
    let mut sellers = None;
    for p in paths {
        let (n, r) = trials::read_csv(p)?;
        if *sellers.get_or_insert(n) != n {
            bail!("{}: format error: {n} win-rate columns where earlier files have {}", p.display(), sellers.unwrap());
        }
        rows.extend(r);
    }
    let suite = trials::assemble(rows)?;
    let catalog = collusim::market::Catalog::with_sellers(sellers.unwrap_or(0))?;
    let stats = suite_stats(&suite, catalog.quality())?;
    print_stats(&stats);
    let summary = summary.or_else(|| match paths {
        [one] => Some(one.with_file_name("summary.json")).filter(|p| p.exists()),
        _ => None,
    });
    if let Some(s) = summary {
        let text = fs::read_to_string(&s).with_context(|| format!("cannot read {}", s.display()))?;
        let stored: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{}: format error", s.display()))?;
        if let Some(diff) = json_mismatch(&json_value(&stats)?, &stored, 1e-9, "summary") {
            bail!("recomputed statistics differ from {}: {diff}", s.display());
        }
        println!("verified against {}", s.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    match cli.command {
        Cmd::Run { common, condition } => {
            let cfg = load_config(&common)?;
            let job = Job::Run { conditions: conditions(&condition)? };
            produce(job, cfg, common.trials.unwrap_or(DEFAULT_TRIALS), &common.out)
        }
        Cmd::Factorial { common } => {
            let cfg = load_config(&common)?;
            produce(Job::Factorial, cfg, common.trials.unwrap_or(DEFAULT_TRIALS), &common.out)
        }
        Cmd::Sweep { axis, values, common } => {
            let cfg = load_config(&common)?;
            let axis: SweepAxis = axis.parse()?;
            produce(Job::Sweep { axis, values }, cfg, common.trials.unwrap_or(DEFAULT_TRIALS), &common.out)
        }
        Cmd::Report { csv, summary } => report(&csv, summary),
        Cmd::Replay { manifest, out } => {
            let text = fs::read_to_string(&manifest).with_context(|| format!("cannot read {}", manifest.display()))?;
            let m: Manifest = serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", manifest.display()))?;
            m.config.validate()?;
            produce(m.job, m.config, m.trials, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                let axes: Vec<&str> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
                eprintln!("valid axes: {}", axes.join(", "));
                return ExitCode::from(2);
            }
            ExitCode::FAILURE
        }
    }
}
