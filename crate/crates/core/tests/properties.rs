//! Randomised properties of the environment, policies and exact solver.

use battbank_core::{
    action_bounds, apply_action, feasible_actions, greedy_action, naive_action, reference, reward,
    Action, BackgroundChain, BankConfig, BatteryConfig, ExactModel, SolverOptions, State,
};
use proptest::prelude::*;

fn bank_strategy(max_n: usize) -> impl Strategy<Value = BankConfig> {
    prop::collection::vec((1u32..=6, 1u32..=7, 0.0f64..2.0, 0.5f64..=1.0), 1..=max_n).prop_map(
        |specs| {
            BankConfig::new(
                specs
                    .into_iter()
                    .map(|(cap, ramp, w, eta)| {
                        BatteryConfig::new(cap, ramp, w).with_dissipation(eta)
                    })
                    .collect(),
            )
        },
    )
}

/// Bank, occupancy within capacity, and a net generation value.
fn instance() -> impl Strategy<Value = (BankConfig, Vec<i64>, i64)> {
    bank_strategy(3).prop_flat_map(|bank| {
        let occ: Vec<_> = bank
            .batteries
            .iter()
            .map(|b| 0..=i64::from(b.capacity))
            .collect();
        (Just(bank), occ, -12i64..=12)
    })
}

fn constant_chain(f: i64) -> BackgroundChain {
    let mut chain = reference::chain();
    chain.net_gen = vec![f; 4];
    chain
}

fn brute_force(bank: &BankConfig, b: &[i64], total: i64) -> Vec<Action> {
    let mut out = vec![Vec::new()];
    for (bat, &occ) in bank.batteries.iter().zip(b) {
        let r = i64::from(bat.ramp);
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-r..=r).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
        out.retain(|p| (0..=i64::from(bat.capacity)).contains(&(occ + p[p.len() - 1])));
    }
    out.into_iter()
        .filter(|a| a.iter().sum::<i64>() == total)
        .map(Action)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enumeration_matches_brute_force((bank, b, f) in instance()) {
        let chain = constant_chain(f);
        let s = State::new(0, b.clone());
        let bounds = action_bounds(&bank, &chain, &s);
        prop_assert!(bounds.min_total <= 0 && 0 <= bounds.max_total);
        let actions = feasible_actions(&bank, &chain, &s);
        prop_assert!(!actions.is_empty());
        prop_assert_eq!(&actions, &brute_force(&bank, &b, bounds.target));
        prop_assert!(actions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn benchmark_policies_are_feasible((bank, b, f) in instance()) {
        let chain = constant_chain(f);
        let s = State::new(0, b);
        let actions = feasible_actions(&bank, &chain, &s);
        let greedy = greedy_action(&bank, &chain, &s);
        let naive = naive_action(&bank, &chain, &s);
        prop_assert!(actions.contains(&greedy));
        prop_assert!(actions.contains(&naive));
        let best = actions.iter().map(|a| reward(&bank, &s, a)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(reward(&bank, &s, &greedy), best);
    }

    #[test]
    fn evolution_stays_in_range((bank, b, f) in instance()) {
        let chain = constant_chain(f);
        let s = State::new(0, b);
        for a in feasible_actions(&bank, &chain, &s) {
            prop_assert!(reward(&bank, &s, &a) <= 0.0);
            let next = apply_action(&bank, &s.b, &a);
            for ((bat, &n), (&occ, &inj)) in bank.batteries.iter().zip(&next).zip(s.b.iter().zip(&a.0)) {
                prop_assert!(0 <= n && n <= occ + inj && n <= i64::from(bat.capacity));
            }
        }
    }
}

#[test]
fn optimal_values_do_not_depend_on_background_labelling() {
    let bank = reference::bank(&[2, 3], reference::CONSTRAINED_RAMP);
    let chain = reference::chain();
    let perm = [2usize, 0, 3, 1];
    let mut permuted = chain.clone();
    for (new, &old) in perm.iter().enumerate() {
        permuted.labels[new] = chain.labels[old].clone();
        permuted.net_gen[new] = chain.net_gen[old];
        for (new_to, &old_to) in perm.iter().enumerate() {
            permuted.transition[new][new_to] = chain.transition[old][old_to];
        }
    }
    let opts = SolverOptions::default().with_tol(1e-11);
    let a = ExactModel::build(&bank, &chain, opts.state_cap).unwrap();
    let b = ExactModel::build(&bank, &permuted, opts.state_cap).unwrap();
    let va = a.solve(&opts).unwrap().values();
    let vb = b.solve(&opts).unwrap().values();
    let per_x = a.space().occupancy_count();
    for (new, &old) in perm.iter().enumerate() {
        for j in 0..per_x {
            assert!((vb[new * per_x + j] - va[old * per_x + j]).abs() < 1e-8);
        }
    }
}
