mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbcbs_core::graph::AgentTask;
use rbcbs_core::lowlevel::{
    arrival_profile, min_feasible_risk, rba_star, scalarized_search, warm_start, AgentConstraints,
    Constraint, Location, Polarity, SearchContext, SearchRecord, SearchSeed,
};

const H: usize = 6;

fn constraint_strategy(n: usize) -> impl Strategy<Value = Constraint> {
    (0..n, 0..n, 0..H - 1, any::<bool>(), 0..5u8).prop_map(|(u, v, t, motion, pol)| {
        let polarity = if pol == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        let location = if motion {
            Location::Motion { from: u, to: v }
        } else {
            Location::Vertex(v)
        };
        Constraint {
            agent: 0,
            location,
            time: t,
            polarity,
        }
    })
}

fn case() -> impl Strategy<Value = (u64, usize, usize, usize, Vec<Constraint>, f64)> {
    (3usize..=5).prop_flat_map(|n| {
        (
            any::<u64>(),
            Just(n),
            0..n,
            0..n,
            prop::collection::vec(constraint_strategy(n), 0..4),
            0.0f64..12.0,
        )
    })
}

/// Admissible walks of at most `H` steps, as (length, risk, walk).
fn admissible(
    g: &rbcbs_core::WaypointGraph,
    start: usize,
    goal: usize,
    cs: &[Constraint],
) -> Vec<(usize, f64, Vec<usize>)> {
    let mut out = Vec::new();
    for len in 0..=H {
        for w in common::walks_of_len(g, start, len, true) {
            if w[len] == goal && common::satisfies(&w, cs) {
                out.push((len, common::walk_risk(g, &w), w));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn constrained_search_matches_enumeration((seed, n, s, g_, cs, budget) in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, 0.45);
        let table = AgentConstraints::build(0, &cs, None);
        let ctx = SearchContext::new(&g, AgentTask::new(0, s, g_), &table).with_horizon(H);
        let all = admissible(&g, s, g_, &cs);

        let want_len = all.iter().filter(|x| x.1 <= budget).map(|x| x.0).min();
        match rba_star(ctx, budget, &SearchSeed::cold()) {
            Ok(plan) => {
                prop_assert_eq!(Some(plan.path.cost()), want_len);
                prop_assert!(plan.risk <= budget);
                prop_assert!(common::satisfies(&plan.path.vertices, &cs));
                prop_assert!((common::walk_risk(&g, &plan.path.vertices) - plan.risk).abs() < 1e-9);
                prop_assert!(plan.path.vertices.windows(2).all(|w| common::is_move(&g, w[0], w[1])));
            }
            Err(_) => prop_assert_eq!(want_len, None),
        }

        let want_risk = all.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        match min_feasible_risk(ctx, &SearchSeed::cold()) {
            Ok(plan) => prop_assert!((plan.risk - want_risk).abs() < 1e-9),
            Err(_) => prop_assert!(all.is_empty()),
        }

        for a in arrival_profile(ctx, &SearchSeed::cold()) {
            let best = all.iter().filter(|x| x.0 == a.time).map(|x| x.1).fold(f64::INFINITY, f64::min);
            prop_assert!((a.risk - best).abs() < 1e-9);
        }
    }

    #[test]
    fn warm_start_never_changes_the_answer((seed, n, s, g_, cs, budget) in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, 0.45);
        let table = AgentConstraints::build(0, &cs, None);
        let ctx = SearchContext::new(&g, AgentTask::new(0, s, g_), &table);
        let record = std::sync::Arc::new(SearchRecord::build(&g, g_, f64::INFINITY));
        let warm = warm_start(Some(&record), g_, f64::INFINITY);
        prop_assert!(!warm.is_cold());
        let a = rba_star(ctx, budget, &SearchSeed::cold()).map(|p| p.path);
        let b = rba_star(ctx, budget, &warm).map(|p| p.path);
        prop_assert_eq!(a.ok(), b.ok());
        let a = min_feasible_risk(ctx, &SearchSeed::cold()).map(|p| p.risk);
        let b = min_feasible_risk(ctx, &warm).map(|p| p.risk);
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn arrival_time_is_monotone_in_budget(seed in any::<u64>(), n in 3usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, 0.35);
        let table = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, AgentTask::new(0, 0, n - 1), &table);
        let mut last = usize::MAX;
        for b in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, f64::INFINITY] {
            if let Ok(p) = rba_star(ctx, b, &SearchSeed::cold()) {
                prop_assert!(p.path.cost() <= last);
                last = p.path.cost();
            } else {
                prop_assert_eq!(last, usize::MAX);
            }
        }
    }

    #[test]
    fn scalarized_matches_enumeration(seed in any::<u64>(), n in 3usize..6, lambda in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, 0.45);
        let table = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, AgentTask::new(0, 0, n - 1), &table).with_horizon(H);
        let outcomes = common::goal_walk_outcomes(&g, 0, n - 1, H);
        let best = outcomes.iter().map(|&(l, r)| l as f64 + lambda * r).fold(f64::INFINITY, f64::min);
        match scalarized_search(ctx, lambda, &SearchSeed::cold()) {
            Ok(p) => prop_assert!((p.path.cost() as f64 + lambda * p.risk - best).abs() < 1e-9),
            Err(_) => prop_assert!(outcomes.is_empty()),
        }
    }
}
