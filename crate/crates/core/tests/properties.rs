mod common;

use noisy_duel::equilibrium::{epsilon_strategy, value_closed, value_recurrence};
use noisy_duel::pareto::{
    classify_game, compare, random_p_play, random_p_prime_play, random_play, t_play, trade_off_line, Relation,
    TPlayVariant,
};
use noisy_duel::payoff::{check_consistency, evaluate};
use noisy_duel::tgrid::{residual, solve_grid, DEFAULT_TOL};
use noisy_duel::verify::{verify_epsilon_equilibrium, Budgets};
use noisy_duel::{AccuracyProfile, DuelSpec, PayoffVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 5 => 0.05..5.0f64]
}

fn coefficients() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    (coefficient(), coefficient(), coefficient(), coefficient()).prop_map(|(a1, a2, b1, b2)| {
        let a = [
            if a1 + b1 == 0.0 { 1.0 } else { a1 },
            if a2 + b2 == 0.0 { 1.0 } else { a2 },
        ];
        (a, [b1, b2])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_are_anchored_and_nondecreasing(seed in any::<u64>()) {
        let p = common::random_profile(&mut rng(seed));
        prop_assert!(p.validate_on(2000).passed(), "{p}");
        prop_assert_eq!(p.value(0.0), 0.0);
        prop_assert_eq!(p.value(1.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=997 {
            let v = p.value(k as f64 / 997.0);
            prop_assert!(v >= prev);
            prop_assert_eq!(v.to_bits(), p.value(k as f64 / 997.0).to_bits());
            prev = v;
        }
    }

    #[test]
    fn payoffs_respect_bounds_and_outcomes(seed in any::<u64>(), m in 0usize..5, n in 0usize..5) {
        let mut r = rng(seed);
        let spec = common::random_spec(m, n, &mut r);
        for _ in 0..20 {
            let play = random_p_play(m, n, 0.3, &mut r);
            let c = check_consistency(&spec, &play).unwrap();
            prop_assert!(c.passed, "{c:?}");
            let k = c.payoff;
            prop_assert!(-spec.b[0] - 1e-12 <= k.k1 && k.k1 <= spec.a[0] + 1e-12);
            prop_assert!(-spec.b[1] - 1e-12 <= k.k2 && k.k2 <= spec.a[1] + 1e-12);
        }
    }

    #[test]
    fn antagonistic_payoffs_cancel(seed in any::<u64>(), m in 0usize..5, n in 0usize..5, a in 0.1..5.0f64, b in 0.1..5.0f64) {
        let mut r = rng(seed);
        let spec = DuelSpec::new(m, n, [a, b], [b, a], common::random_profile(&mut r), common::random_profile(&mut r)).unwrap();
        for _ in 0..20 {
            let k = evaluate(&spec, &random_play(m, n, &mut r)).unwrap();
            prop_assert!((k.k1 + k.k2).abs() <= 1e-12);
        }
    }

    #[test]
    fn payoffs_are_affine_in_coefficients(seed in any::<u64>(), (a, b) in coefficients(), (a2, b2) in coefficients(), s in 0.0..1.0f64) {
        let mut r = rng(seed);
        let (m, n) = (3, 2);
        let base = common::random_spec(m, n, &mut r);
        let with = |a: [f64; 2], b: [f64; 2]| DuelSpec::new(m, n, a, b, base.p1.clone(), base.p2.clone()).unwrap();
        let mix = |x: [f64; 2], y: [f64; 2]| [(1.0 - s) * x[0] + s * y[0], (1.0 - s) * x[1] + s * y[1]];
        let play = random_p_play(m, n, 0.3, &mut r);
        let k0 = evaluate(&with(a, b), &play).unwrap();
        let k1 = evaluate(&with(a2, b2), &play).unwrap();
        let ks = evaluate(&with(mix(a, a2), mix(b, b2)), &play).unwrap();
        prop_assert!((ks.k1 - ((1.0 - s) * k0.k1 + s * k1.k1)).abs() <= 1e-12);
        prop_assert!((ks.k2 - ((1.0 - s) * k0.k2 + s * k1.k2)).abs() <= 1e-12);
    }

    #[test]
    fn grid_is_monotone_and_solves_the_indifference_equation(seed in any::<u64>(), m in 1usize..7, n in 1usize..7) {
        let mut r = rng(seed);
        let (p1, p2) = (common::random_profile(&mut r), common::random_profile(&mut r));
        let grid = solve_grid(&p1, &p2, m, n, DEFAULT_TOL).unwrap();
        prop_assert!(grid.corridor_holds());
        prop_assert!(residual(&grid, &p1, &p2) <= DEFAULT_TOL);
    }

    #[test]
    fn grid_is_symmetric_for_equal_profiles(seed in any::<u64>(), k in 1usize..7) {
        let p = common::random_profile(&mut rng(seed));
        let grid = solve_grid(&p, &p, k, k, DEFAULT_TOL).unwrap();
        for mu in 1..=k {
            for nu in 1..mu {
                prop_assert!((grid.get(mu, nu) - grid.get(nu, mu)).abs() <= 2.0 * DEFAULT_TOL);
            }
        }
    }

    #[test]
    fn halving_tolerance_never_increases_residual(seed in any::<u64>(), tol_exp in 4i32..12) {
        let mut r = rng(seed);
        let (p1, p2) = (common::random_profile(&mut r), common::random_profile(&mut r));
        let tol = 10f64.powi(-tol_exp);
        let coarse = residual(&solve_grid(&p1, &p2, 4, 4, tol).unwrap(), &p1, &p2);
        let fine = residual(&solve_grid(&p1, &p2, 4, 4, tol / 2.0).unwrap(), &p1, &p2);
        prop_assert!(coarse <= tol);
        prop_assert!(fine <= tol / 2.0);
        prop_assert!(fine <= coarse);
    }

    #[test]
    fn value_formulas_agree(seed in any::<u64>(), m in 1usize..6, n in 1usize..6) {
        let spec = common::random_spec(m, n, &mut rng(seed));
        let grid = solve_grid(&spec.p1, &spec.p2, m, n, DEFAULT_TOL).unwrap();
        let closed = value_closed(&spec, &grid).unwrap();
        prop_assert!(value_recurrence(&spec, &grid).unwrap().max_discrepancy(&closed) <= 1e-10);
        for v in closed.iter() {
            prop_assert!(-spec.b[0] - 1e-12 <= v.v1 && v.v1 <= spec.a[0] + 1e-12);
            prop_assert!(-spec.b[1] - 1e-12 <= v.v2 && v.v2 <= spec.a[1] + 1e-12);
        }
    }

    #[test]
    fn antagonistic_values_cancel(seed in any::<u64>(), a in 0.1..5.0f64, b in 0.1..5.0f64) {
        let mut r = rng(seed);
        let spec = DuelSpec::new(4, 4, [a, b], [b, a], common::random_profile(&mut r), common::random_profile(&mut r)).unwrap();
        let grid = solve_grid(&spec.p1, &spec.p2, 4, 4, DEFAULT_TOL).unwrap();
        for v in value_closed(&spec, &grid).unwrap().iter() {
            prop_assert!((v.v1 + v.v2).abs() <= 1e-10);
        }
    }

    #[test]
    fn value_is_monotone_in_resources(seed in any::<u64>()) {
        let spec = common::random_spec(5, 5, &mut rng(seed));
        let grid = solve_grid(&spec.p1, &spec.p2, 5, 5, DEFAULT_TOL).unwrap();
        let table = value_closed(&spec, &grid).unwrap();
        let v1 = |mu, nu| table.get(mu, nu).v1;
        for mu in 1..5 {
            for nu in 1..=5 {
                prop_assert!(v1(mu + 1, nu) >= v1(mu, nu) - 1e-10, "({mu},{nu})");
            }
        }
        for mu in 1..=5 {
            for nu in 1..5 {
                prop_assert!(v1(mu, nu + 1) <= v1(mu, nu) + 1e-10, "({mu},{nu})");
            }
        }
    }

    #[test]
    fn smaller_epsilon_never_widens_support(seed in any::<u64>(), eps in 0.001..0.5f64, shrink in 0.01..1.0f64) {
        let spec = common::random_spec(3, 3, &mut rng(seed));
        let grid = solve_grid(&spec.p1, &spec.p2, 3, 3, DEFAULT_TOL).unwrap();
        let (_, _, wide) = epsilon_strategy(&spec, &grid, eps).unwrap();
        let (_, _, narrow) = epsilon_strategy(&spec, &grid, eps * shrink).unwrap();
        for mu in 1..=3 {
            for nu in 1..=3 {
                let (t, d) = (grid.get(mu, nu), narrow.delta(mu, nu));
                prop_assert!(d <= wide.delta(mu, nu));
                prop_assert!(d > 0.0 && t + d < grid.corridor_upper(mu, nu));
                let bound = narrow.lambda * narrow.epsilon;
                prop_assert!(spec.p1.value(t + d) < spec.p1.value(t) + bound);
                prop_assert!(spec.p2.value(t + d) < spec.p2.value(t) + bound);
            }
        }
    }

    #[test]
    fn t_plays_realize_the_value(seed in any::<u64>(), m in 1usize..5, n in 1usize..5) {
        let spec = common::random_spec(m, n, &mut rng(seed));
        let grid = solve_grid(&spec.p1, &spec.p2, m, n, DEFAULT_TOL).unwrap();
        let v = value_closed(&spec, &grid).unwrap().top();
        for variant in TPlayVariant::all(m, n) {
            let k = evaluate(&spec, &t_play(&grid, &spec, &variant).unwrap()).unwrap();
            prop_assert!((k.k1 - v.v1).abs() <= 1e-9 && (k.k2 - v.v2).abs() <= 1e-9, "{variant:?}");
        }
    }

    #[test]
    fn dominance_is_a_strict_partial_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = common::random_spec(2, 2, &mut r);
        let ks: Vec<PayoffVector> = (0..12).map(|_| evaluate(&spec, &random_p_play(2, 2, 0.2, &mut r)).unwrap()).collect();
        let dom = |a: PayoffVector, b: PayoffVector| compare(a, b) == Relation::Dominates;
        for &a in &ks {
            prop_assert!(!dom(a, a));
            for &b in &ks {
                if dom(a, b) {
                    prop_assert!(!dom(b, a));
                    prop_assert_eq!(compare(b, a), Relation::Dominated);
                }
                for &c in &ks {
                    if dom(a, b) && dom(b, c) {
                        prop_assert!(dom(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn tie_free_payoffs_lie_on_the_trade_off_line(seed in any::<u64>(), m in 0usize..5, n in 1usize..5, swap in any::<bool>()) {
        let (m, n) = if swap { (n, m) } else { (m, n) };
        let mut r = rng(seed);
        let spec = common::random_spec(m, n, &mut r);
        let (c, s) = trade_off_line(&spec);
        let scale = 1.0 + spec.a.iter().chain(&spec.b).fold(0.0f64, |x, &y| x.max(y));
        for _ in 0..20 {
            let k = evaluate(&spec, &random_p_prime_play(m, n, &mut r)).unwrap();
            prop_assert!((k.k2 - (c - s * k.k1)).abs() <= 1e-10 * scale * scale);
        }
    }

    #[test]
    fn quasi_antagonism_implies_opposed_stakes(a1 in 0.0..5.0f64, a2 in 0.1..5.0f64, b1 in 0.1..5.0f64) {
        let b2 = a1 * a2 / b1;
        let spec = DuelSpec::new(1, 1, [a1, a2], [b1, b2], AccuracyProfile::linear(), AccuracyProfile::linear()).unwrap();
        let g = classify_game(&spec);
        prop_assert!(g.quasi_antagonistic());
        prop_assert!(g.opposed_stakes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn verification_is_deterministic(seed in any::<u64>()) {
        let spec = common::random_spec(1, 1, &mut rng(seed));
        let budgets = Budgets { samples: 2000, grid_points: 200, seed, ..Budgets::default() };
        let first = verify_epsilon_equilibrium(&spec, 0.1, &budgets).unwrap();
        let second = verify_epsilon_equilibrium(&spec, 0.1, &budgets).unwrap();
        prop_assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&second).unwrap());
    }
}
