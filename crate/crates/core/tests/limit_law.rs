use convex_pmf::harness::catalog;
use convex_pmf::limit::{
    knot_cones, limit_minimizer, localized_left, localized_right, sample_limit_distribution,
    simulate_w, LIMIT_CERTIFICATE_TOL, LIMIT_STREAM,
};
use convex_pmf::pmf::{mixture_compose, KnotSet, MixtureWeights, KNOT_TOL};
use convex_pmf::projection::{is_feasible, project_convex, DykstraOptions};
use convex_pmf::seed::{rng_for, stream};

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[test]
fn pythagoras_feasibility_and_total_mass() {
    let opts = DykstraOptions::default();
    for id in ["p0", "p1", "p2", "p3"] {
        let p = catalog(id).unwrap();
        let knots = p.knots(KNOT_TOL);
        let cones = knot_cones(&knots);
        for d in sample_limit_distribution(&p, &knots, 200, 3, &opts).unwrap() {
            let r: Vec<f64> = d.w.iter().zip(&d.g_hat).map(|(w, g)| w - g).collect();
            assert!((sq(&d.w) - sq(&d.g_hat) - sq(&r)).abs() <= 1e-6, "{id}");
            assert!(is_feasible(&d.g_hat, &cones, 1e-9));
            assert!(d.g_cum[p.support_max() + 1].abs() <= 1e-8);
            assert!(d.certificate.passed());
        }
    }
}

#[test]
fn triple_knots_localize_completely() {
    let p4 = catalog("p4").unwrap();
    let knots = p4.knots(KNOT_TOL);
    let opts = DykstraOptions::default();
    for d in sample_limit_distribution(&p4, &knots, 300, 4, &opts).unwrap() {
        for s in 3..=9 {
            assert_eq!(d.g_hat[s], d.w[s], "s = {s}");
        }
    }
}

#[test]
fn triangular_limit_is_single_cone_projection() {
    let p0 = catalog("p0").unwrap();
    let knots = p0.knots(KNOT_TOL);
    assert!(knots.is_empty());
    let mut rng = rng_for(5, 0, 0);
    let w = simulate_w(&p0, &mut rng);
    let ls = limit_minimizer(&w, &knots, &DykstraOptions::default()).unwrap();
    let direct = project_convex(&w.w, knot_cones(&knots)[0]).unwrap();
    assert_eq!(ls.g_hat, direct);
}

// Means of ĝ(k) for p0 from 200000 draws, confirmed by an independent
// SLSQP solve of the same problem on 3000 draws. The projection does not
// preserve the zero mean of W.
const P0_LIMIT_MEANS: [f64; 12] = [
    0.16762, 0.00751, -0.03818, -0.05620, -0.06113, -0.05791, -0.04846, -0.03365, -0.01400,
    0.01087, 0.04205, 0.08148,
];

#[test]
fn limit_marginal_means_match_baseline() {
    let p0 = catalog("p0").unwrap();
    let draws = sample_limit_distribution(
        &p0,
        &p0.knots(KNOT_TOL),
        20_000,
        6,
        &DykstraOptions::default(),
    )
    .unwrap();
    for (k, expected) in P0_LIMIT_MEANS.iter().enumerate() {
        let mean: f64 = draws.iter().map(|d| d.g_hat[k]).sum::<f64>() / draws.len() as f64;
        assert!((mean - expected).abs() <= 0.01, "k = {k}: {mean}");
    }
}

#[test]
fn localized_solutions_agree_when_predicate_holds() {
    let w = MixtureWeights::from_pairs(&[(2, 0.3), (3, 0.3), (6, 0.4)]).unwrap();
    let p = mixture_compose(&w).unwrap();
    let knots = p.knots(KNOT_TOL);
    assert_eq!(knots.interior(), &[2, 3]);
    let opts = DykstraOptions::default();
    let draws = sample_limit_distribution(&p, &knots, 500, 7, &opts).unwrap();
    let mut held = 0;
    for (i, d) in draws.iter().enumerate() {
        let mut rng = rng_for(7, stream(LIMIT_STREAM), i as u64);
        let w = simulate_w(&p, &mut rng);
        assert_eq!(w.w, d.w);
        if d.left_localized_at(2, LIMIT_CERTIFICATE_TOL) {
            held += 1;
            let left = localized_left(&w, &knots, 2, &opts).unwrap();
            for k in 0..=2 {
                assert!((left[k] - d.g_hat[k]).abs() <= 1e-8);
            }
        }
        if d.right_localized_at(3, LIMIT_CERTIFICATE_TOL) {
            let right = localized_right(&w, &knots, 3, &opts).unwrap();
            for (i, v) in right.iter().enumerate() {
                assert!((v - d.g_hat[3 + i]).abs() <= 1e-8);
            }
        }
    }
    // a double knot at {2, 3} forces the predicate at 2
    assert_eq!(held, draws.len());
    let w = simulate_w(&p, &mut rng_for(8, 0, 0));
    assert!(localized_left(&w, &knots, 4, &opts).is_err());
}

#[test]
fn wrong_knot_set_length_is_rejected() {
    let p0 = catalog("p0").unwrap();
    let w = simulate_w(&p0, &mut rng_for(1, 1, 1));
    let knots = KnotSet::new(vec![2], 5).unwrap();
    assert!(limit_minimizer(&w, &knots, &DykstraOptions::default()).is_err());
}
