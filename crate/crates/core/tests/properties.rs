mod common;

use proptest::prelude::*;

use mec_offload::metrics::{cumulative_regret, decision_count, optimal_rate, pool_size_series, RateWindow};
use mec_offload::policy::{
    bmse, bmse_sl, equipartition_split, multi_user_ucb1, BmseParams, IndexMode, MethodGroups, SlParams,
};
use mec_offload::{Environment, RunTrace, SystemConfig, World};

use common::{check_eliminations, check_monotone, NoisyTable};

fn small_config() -> impl Strategy<Value = SystemConfig> {
    (1usize..=4, 1usize..=3, any::<u64>(), any::<bool>(), 1e7f64..1e9, 1.0f64..3.0, 1e5f64..1e7).prop_map(
        |(users, servers, seed, cloud, fwd, width, bw)| SystemConfig {
            num_users: users,
            num_edge_servers: servers,
            horizon: 600,
            include_cloud: cloud,
            bandwidth_hz: bw,
            edge_capacity_bps: (1e8, 1e8 * width),
            task: mec_offload::Task::new(fwd, fwd / 10.0).unwrap(),
            seed,
            ..SystemConfig::default()
        },
    )
}

fn choices(trace: &RunTrace) -> Vec<u64> {
    trace.records.iter().map(|r| r.action_id.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_oracle_matches_exhaustive(cfg in small_config()) {
        let env = Environment::new(cfg).unwrap();
        let pool = env.space().enumerate(u64::MAX).unwrap();
        let exhaustive = env.oracle(&pool).unwrap();
        let global = env.global_oracle().unwrap();
        let d = exhaustive.best_expected_delay;
        prop_assert!((global.best_expected_delay - d).abs() <= 1e-9 * d);
        prop_assert_eq!(global.best_action.id, exhaustive.best_action.id);
        for a in &pool {
            let g = global.gap(a.id).unwrap();
            prop_assert!((g - exhaustive.gaps[&a.id]).abs() <= 1e-9 * d);
            prop_assert!(g >= 0.0);
        }
    }

    #[test]
    fn traces_are_safe_and_monotone(cfg in small_config()) {
        let xi = cfg.exploration;
        let mut env = Environment::new(cfg.clone()).unwrap();
        if let Ok(trace) = bmse(&mut env, &BmseParams::from_config(&cfg)) {
            prop_assert_eq!(trace.len() as u64, cfg.horizon);
            check_eliminations(env.space(), &trace, xi).map_err(TestCaseError::fail)?;
            check_monotone(&trace).map_err(TestCaseError::fail)?;
            for w in pool_size_series(&trace).windows(2).zip(trace.records.windows(2)) {
                if w.1[0].phase == w.1[1].phase {
                    prop_assert!(w.0[1] <= w.0[0]);
                }
            }
        }
    }

    #[test]
    fn shifting_every_delay_changes_no_choice(
        seed in any::<u64>(),
        users in 1usize..=3,
        methods in 2usize..=4,
        shift in 1.0f64..1e3,
    ) {
        let shift = shift.round();
        let base = NoisyTable::random(users, methods, seed);
        let pool = base.pool();
        let horizon = 400.max(pool.len() as u64);

        let run_ucb = |mut w: NoisyTable| multi_user_ucb1(&mut w, &pool, horizon, 1.0, IndexMode::Optimistic).unwrap();
        let a = run_ucb(NoisyTable::random(users, methods, seed));
        let b = run_ucb(NoisyTable::random(users, methods, seed).shifted(shift));
        prop_assert_eq!(choices(&a), choices(&b));

        let sl = SlParams { horizon, xi: 0.5, dropped_slots_free: false };
        let a = bmse_sl(&mut NoisyTable::random(users, methods, seed), &pool, &sl).unwrap();
        let b = bmse_sl(&mut NoisyTable::random(users, methods, seed).shifted(shift), &pool, &sl).unwrap();
        prop_assert_eq!(choices(&a), choices(&b));
        let removed = |t: &RunTrace| t.eliminations.iter().map(|e| (e.t, e.removed)).collect::<Vec<_>>();
        prop_assert_eq!(removed(&a), removed(&b));

        let params = BmseParams { horizon, xi: 0.5, ..BmseParams::from_config(&SystemConfig::default()) };
        let a = bmse(&mut NoisyTable::random(users, methods, seed), &params);
        let b = bmse(&mut NoisyTable::random(users, methods, seed).shifted(shift), &params);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(choices(&a), choices(&b));
            prop_assert_eq!(removed(&a), removed(&b));
        }
    }

    #[test]
    fn regret_and_rate_accounting(cfg in small_config()) {
        let mut env = Environment::new(cfg.clone()).unwrap();
        let oracle = env.global_oracle().unwrap();
        let pool = env.space().enumerate(u64::MAX).unwrap();
        prop_assume!(pool.len() as u64 <= cfg.horizon);
        let trace = multi_user_ucb1(&mut env, &pool, cfg.horizon, 1.0, IndexMode::Optimistic).unwrap();
        prop_assert_eq!(trace.decisions(), cfg.horizon - pool.len() as u64);

        let regret = cumulative_regret(&trace, &oracle).unwrap();
        let mut chosen = 0.0;
        for (k, r) in trace.records.iter().enumerate() {
            chosen += r.expected_delay_s;
            let direct = chosen - (k + 1) as f64 * oracle.best_expected_delay;
            prop_assert!((regret[k] - direct).abs() <= 1e-9 * chosen);
        }
        prop_assert!(regret.windows(2).all(|w| w[1] >= w[0]));

        for (k, rate) in optimal_rate(&trace, &oracle, RateWindow::Cumulative).iter().enumerate() {
            let hits = rate * (k + 1) as f64;
            prop_assert!((hits - hits.round()).abs() < 1e-6);
        }
    }

    #[test]
    fn bmse_never_decides_more_than_ucb(cfg in small_config()) {
        let mut env = Environment::new(cfg.clone()).unwrap();
        let pool = env.space().enumerate(u64::MAX).unwrap();
        prop_assume!(cfg.horizon > 2 * pool.len() as u64);
        let ucb = multi_user_ucb1(&mut env, &pool, cfg.horizon, 1.0, IndexMode::Optimistic).unwrap();
        let mut env = Environment::new(cfg.clone()).unwrap();
        if let Ok(b) = bmse(&mut env, &BmseParams::from_config(&cfg)) {
            let (u, b) = (decision_count(&ucb), decision_count(&b));
            prop_assert!(u.last() >= b.last(), "mu_ucb1 {:?} vs bmse {:?}", u.last(), b.last());
        }
    }

    #[test]
    fn batches_conserve_budget(seed in any::<u64>(), users in 1usize..=3, methods in 2usize..=5, horizon in 30u64..2000) {
        let mut world = NoisyTable::random(users, methods, seed);
        let pool = world.pool();
        prop_assume!(pool.len() as u64 <= horizon);
        let sl = SlParams { horizon, xi: 1.0, dropped_slots_free: seed % 2 == 0 };
        let trace = bmse_sl(&mut world, &pool, &sl).unwrap();
        prop_assert_eq!(trace.len() as u64, horizon);
        prop_assert_eq!(trace.batches.iter().map(|b| b.allotted).sum::<u64>(), horizon);
        for b in &trace.batches {
            prop_assert_eq!(b.pulled + b.dropped, b.allotted);
        }
        let batches = horizon.div_ceil(pool.len() as u64);
        prop_assert!(trace.decisions() <= batches);
        let dropped = trace.records.iter().filter(|r| r.dropped).count() as u64;
        prop_assert_eq!(dropped, trace.batches.iter().map(|b| b.dropped).sum::<u64>());
    }
}

#[test]
fn edge_only_pool_has_six_actions_and_contains_pool_optimum() {
    for seed in 0..5 {
        let mut env = Environment::new(SystemConfig { seed, ..SystemConfig::default() }).unwrap();
        let pool = equipartition_split(&MethodGroups::edge_only(env.space()), env.space(), 4096).unwrap();
        assert_eq!(pool.len(), 6);
        let best = env.oracle(&pool).unwrap().best_action.id;
        let sl = SlParams { horizon: 3000, xi: 1.0, dropped_slots_free: false };
        let trace = bmse_sl(&mut env, &pool, &sl).unwrap();
        assert_eq!(trace.survivor, Some(best));
    }
}
