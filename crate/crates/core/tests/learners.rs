use collusim::learners::{Algorithm, Learner, LearnerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ROUNDS: usize = 20_000;

/// Fraction of the last 20% of rounds spent on arm 0, which pays +0.1
/// against -0.1 for arm 1.
fn better_arm_share(algorithm: Algorithm, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = Learner::new(LearnerConfig::with_algorithm(algorithm), 1, 2, &mut rng).unwrap();
    let tail = ROUNDS - ROUNDS / 5;
    let mut hits = 0;
    for t in 0..ROUNDS {
        let a = learner.select(0, t, &mut rng);
        let r = if a == 0 { 0.1 } else { -0.1 };
        learner.update(0, a, r, 0, t, &mut rng).unwrap();
        if t >= tail && a == 0 {
            hits += 1;
        }
    }
    learner.finish().unwrap();
    hits as f64 / (ROUNDS / 5) as f64
}

/// Brute-force oracle: the better arm is the one with the higher fixed
/// reward, so a competent learner's share of it must exceed 0.7.
#[test]
fn every_algorithm_finds_the_better_arm() {
    for a in Algorithm::ALL {
        for seed in [1, 2, 3] {
            let share = better_arm_share(a, seed);
            assert!(share > 0.7, "{a}: seed {seed} share {share}");
        }
    }
}

#[test]
fn learners_replay_identically() {
    for a in Algorithm::ALL {
        assert_eq!(better_arm_share(a, 9), better_arm_share(a, 9));
    }
}

#[test]
fn swapped_arms_are_found_too() {
    for a in Algorithm::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut learner = Learner::new(LearnerConfig::with_algorithm(a), 1, 2, &mut rng).unwrap();
        let mut last = Vec::new();
        for t in 0..ROUNDS {
            let act = learner.select(0, t, &mut rng);
            learner.update(0, act, if act == 1 { 0.1 } else { -0.1 }, 0, t, &mut rng).unwrap();
            if t >= ROUNDS - 4_000 {
                last.push(act);
            }
        }
        let share = last.iter().filter(|&&x| x == 1).count() as f64 / last.len() as f64;
        assert!(share > 0.7, "{a}: share {share}");
    }
}
