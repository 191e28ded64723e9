//! Round trips of the on-disk formats through the library API.

use battbank::config_file::{load_experiment, ConfigFile};
use battbank::trajectory_file::{format_trajectory, parse_trajectory};
use battbank::weights_file::{load_weights, save_weights};
use battbank::CliError;
use battbank_core::{
    feasible_actions, feature_vector, q_hat, reference, train, Action, LearnSchedule, State,
    Trajectory,
};
use proptest::prelude::*;
use tempfile::TempDir;

#[test]
fn saved_weights_reproduce_q_estimates_on_every_pair() {
    let bank = reference::bank(&[2, 3], 2);
    let chain = reference::chain();
    let schedule = LearnSchedule::default().with_steps(3_000).with_seed(5);
    let (w, _) = train(&bank, &chain, &schedule, 0, &bank.initial_occupancy_vec()).unwrap();

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("w.json");
    save_weights(&path, &bank, &chain, &w).unwrap();
    let loaded = load_weights(&path, &bank, &chain).unwrap();

    let mut pairs = 0;
    for x in 0..chain.len() {
        for b1 in 0..=2 {
            for b2 in 0..=3 {
                let s = State::new(x, vec![b1, b2]);
                for a in feasible_actions(&bank, &chain, &s) {
                    let phi = feature_vector(&bank, &chain, &s, &a);
                    assert_eq!(q_hat(&phi, &w).unwrap(), q_hat(&phi, &loaded).unwrap());
                    pairs += 1;
                }
            }
        }
    }
    assert!(pairs > 48);
}

#[test]
fn weights_for_another_chain_are_refused() {
    let bank = reference::bank(&[2, 3], 25);
    let chain = reference::chain();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("w.json");
    let (w, _) = train(
        &bank,
        &chain,
        &LearnSchedule::default().with_steps(10),
        0,
        &[1, 1],
    )
    .unwrap();
    save_weights(&path, &bank, &chain, &w).unwrap();

    let mut other = chain.clone();
    other.transition[0] = vec![0.25; 4];
    assert!(matches!(
        load_weights(&path, &bank, &other),
        Err(CliError::Validation(_))
    ));
}

#[test]
fn shipped_config_matches_reference_instance() {
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/small_exact.json");
    let exp = load_experiment(&path).unwrap();
    assert_eq!(
        exp.bank,
        reference::bank(&[2, 3], reference::UNCONSTRAINED_RAMP)
    );
    assert_eq!(exp.chain, reference::chain());
    assert_eq!(exp.schedule, LearnSchedule::default());
    let text = serde_json::to_string(&ConfigFile::from_experiment(&exp)).unwrap();
    assert_eq!(ConfigFile::parse(&text).unwrap().into_experiment(), exp);
}

proptest! {
    #[test]
    fn trajectories_round_trip(seed in any::<u64>(), path in prop::collection::vec(0usize..8, 1..200)) {
        let traj = Trajectory { seed, x_path: path };
        prop_assert_eq!(parse_trajectory(&format_trajectory(&traj)).unwrap(), traj);
    }

    #[test]
    fn solution_tuples_format_like_actions(a in prop::collection::vec(-30i64..30, 1..5)) {
        let text = battbank::reports::format_tuple(&Action(a.clone()).0);
        prop_assert_eq!(text, Action(a).to_string());
    }
}
