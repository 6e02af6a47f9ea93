//! Branch and bound against full enumeration of convex regions.

use binomial_knapsack::boundary::{BoundaryFn, NullConstraintSet, NullGrid};
use binomial_knapsack::ilp::{build_apk_model, build_mpk_model, solve, SolveOptions, SolveStatus};
use binomial_knapsack::power::{alt_power_rows, avg_power_coeffs, shifted_points};
use binomial_knapsack::prob::Design;
use binomial_knapsack::space::{IncidenceRows, SampleSpace};

mod common;
use common::{binom_u as binom, brute, staircases};

#[test]
fn staircase_count() {
    for (a, b) in [(1, 1), (3, 3), (2, 5), (6, 4)] {
        assert_eq!(staircases(a, b).len() as u64, binom((a + b + 2) as u64, (a + 1) as u64));
    }
}

#[test]
fn apk_matches_enumeration() {
    for (a, b, alpha, k) in
        [(3, 3, 0.05, 1001), (3, 3, 0.2, 1001), (4, 5, 0.05, 201), (6, 6, 0.1, 201), (8, 7, 0.05, 101)]
    {
        let space = SampleSpace::enumerate(Design::new(a, b).unwrap());
        let boundary = BoundaryFn::Identity;
        let grid = NullGrid::equidistant(&boundary, k).unwrap();
        let ncs = NullConstraintSet::build(&space, &boundary, &grid).unwrap();
        let inc = IncidenceRows::new(&space);
        let model = build_apk_model(&ncs.p_rows, &ncs.slack_rows, &avg_power_coeffs(&space), alpha, &inc).unwrap();
        let best = brute(&model, &staircases(a, b));
        let res = solve(&model, &SolveOptions::with_tol(1e-10)).unwrap();
        assert_eq!(res.status, SolveStatus::OptimalWithinTol);
        assert!(model.evaluate(&res.decision).is_some());
        assert!(
            (res.objective_value - best).abs() < 1e-10,
            "({a},{b}) alpha {alpha}: {} vs {best}",
            res.objective_value
        );
    }
}

#[test]
fn mpk_matches_enumeration() {
    for (a, b, alpha, delta) in [(3, 3, 0.05, 0.6), (5, 4, 0.1, 0.5), (6, 6, 0.05, 0.5)] {
        let space = SampleSpace::enumerate(Design::new(a, b).unwrap());
        let boundary = BoundaryFn::Identity;
        let grid = NullGrid::equidistant(&boundary, 201).unwrap();
        let ncs = NullConstraintSet::build(&space, &boundary, &grid).unwrap();
        let inc = IncidenceRows::new(&space);
        let pts = shifted_points(delta, 0.0, 1.0 - delta, 20).unwrap();
        let alt = alt_power_rows(&space, &pts).unwrap();
        let model = build_mpk_model(&ncs.p_rows, &ncs.slack_rows, &alt, alpha, &inc).unwrap();
        let best = brute(&model, &staircases(a, b));
        let res = solve(&model, &SolveOptions::with_tol(1e-10)).unwrap();
        assert_eq!(res.status, SolveStatus::OptimalWithinTol);
        assert!((res.objective_value - best).abs() < 1e-10, "({a},{b}): {} vs {best}", res.objective_value);
    }
}
