use delayed_bandit_core::{ActionSet, DelayDistribution, Environment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

#[test]
fn every_positive_is_revealed_once_after_draining() {
    let bound = 12;
    let samples: Vec<f64> = (0..=bound).map(f64::from).collect();
    for seed in 0..20 {
        let delay = DelayDistribution::empirical(&samples, 1.0).unwrap();
        let mut env = Environment::new(vec![0.3, 0.4], delay, ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let set = ActionSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]).unwrap();
        let mut picker = ChaCha8Rng::seed_from_u64(seed + 100);
        let mut seen = HashSet::new();
        let mut positive_rounds = HashSet::new();
        for _ in 0..1000 {
            let out = env.step(picker.random_range(0..3), &set).unwrap();
            if out.reward {
                positive_rounds.insert(out.round);
            }
            for e in &out.events {
                assert_eq!(e.value(), 1);
                assert!(e.round <= out.round && out.round - e.round <= bound as u64);
                assert!(seen.insert(e.round), "round {} revealed twice", e.round);
            }
        }
        for _ in 0..bound {
            for e in env.idle_step() {
                assert!(seen.insert(e.round));
            }
        }
        assert_eq!(env.pending(), 0);
        assert_eq!(seen, positive_rounds);
        assert_eq!(env.revealed(), env.positives());
    }
}

#[test]
fn zero_delay_observation_determines_reward() {
    let set = ActionSet::standard_basis(3).unwrap();
    let mut env = Environment::new(vec![0.2, 0.5, 0.8], DelayDistribution::fixed(0), ChaCha8Rng::seed_from_u64(3)).unwrap();
    for t in 0..3000u64 {
        let out = env.step((t % 3) as usize, &set).unwrap();
        assert_eq!(out.reward, !out.events.is_empty());
    }
}

#[test]
fn regret_trace_is_monotone_and_bounded() {
    let mut env = Environment::new(vec![0.5; 3], DelayDistribution::geometric(3.0).unwrap(), ChaCha8Rng::seed_from_u64(4)).unwrap();
    let mut picker = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0.0;
    let mut max_gap: f64 = 0.0;
    let horizon = 500;
    for _ in 0..horizon {
        let set = env.generate_action_set(5).unwrap();
        let r = env.regret(picker.random_range(0..5), &set).unwrap();
        assert!(r >= 0.0);
        let gap = set.iter().map(|a| a.iter().sum::<f64>() * 0.5).fold(f64::MIN, f64::max)
            - set.iter().map(|a| a.iter().sum::<f64>() * 0.5).fold(f64::MAX, f64::min);
        max_gap = max_gap.max(gap);
        total += r;
    }
    assert!(total <= horizon as f64 * max_gap + 1e-9);
}
