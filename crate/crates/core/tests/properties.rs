use convex_pmf::lse::{lse, Sample, DEFAULT_BUFFER};
use convex_pmf::pmf::{
    h_values, mixture_compose, mixture_decompose, MixtureWeights, Pmf, KNOT_TOL,
};
use convex_pmf::projection::{
    dykstra_project, is_feasible, kkt_oracle, project_convex, ConeSpec, DykstraOptions,
};
use proptest::prelude::*;

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weights() -> impl Strategy<Value = MixtureWeights> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01..1.0f64], 2..14).prop_filter_map(
        "needs mass beyond j = 1",
        |raw| {
            let pairs: Vec<(usize, f64)> = raw
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &v)| v > 0.0)
                .map(|(i, &v)| (i + 1, v))
                .collect();
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            if total == 0.0 {
                return None;
            }
            let pairs: Vec<(usize, f64)> = pairs.iter().map(|&(j, v)| (j, v / total)).collect();
            MixtureWeights::from_pairs(&pairs).ok()
        },
    )
}

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3..=max_len)
}

fn partitioned(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<ConeSpec>)> {
    vector(max_len).prop_flat_map(|y| {
        let len = y.len();
        prop::collection::vec(any::<bool>(), len - 2).prop_map(move |cut| {
            let mut bounds = vec![0];
            bounds.extend((1..len - 1).filter(|&k| cut[k - 1]));
            bounds.push(len - 1);
            (y.clone(), ConeSpec::partition(&bounds).unwrap())
        })
    })
}

fn small_sample() -> impl Strategy<Value = Sample> {
    prop::collection::vec(0u64..=6, 1..60).prop_map(|v| Sample::from_values(&v).unwrap())
}

proptest! {
    #[test]
    fn compose_then_decompose_is_identity(w in weights()) {
        let p = mixture_compose(&w).unwrap();
        let back = mixture_decompose(&p).unwrap();
        prop_assert_eq!(back.max_index(), w.max_index());
        prop_assert!(sup(back.as_slice(), w.as_slice()) <= 1e-12);
    }

    #[test]
    fn knots_are_the_interior_mixture_indices(w in weights()) {
        let p = mixture_compose(&w).unwrap();
        let s = p.support_max();
        let expected: Vec<usize> = (1..=s).filter(|&j| w.get(j) > 0.0).collect();
        let knots = p.knots(KNOT_TOL);
        prop_assert_eq!(knots.interior(), expected.as_slice());
        prop_assert!(p.is_convex(KNOT_TOL));
    }

    #[test]
    fn h_differences_recover_cdf_and_mass(w in weights()) {
        let p = mixture_compose(&w).unwrap();
        let h = h_values(p.mass(), 2);
        let f = p.cdf();
        for z in 0..f.len() {
            prop_assert!((h[z + 1] - h[z] - f[z]).abs() <= 1e-12);
        }
        for z in 0..p.mass().len() {
            prop_assert!((h[z + 2] - 2.0 * h[z + 1] + h[z] - p.get(z + 1)).abs() <= 1e-12);
        }
        prop_assert!((p.h(p.support_max() + 2) - h[p.support_max() + 2]).abs() <= 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_feasible(y in vector(20)) {
        let cone = ConeSpec::new(0, y.len() - 1).unwrap();
        let g = project_convex(&y, cone).unwrap();
        prop_assert!(is_feasible(&g, &[cone], 1e-9));
        let again = project_convex(&g, cone).unwrap();
        prop_assert!(sup(&g, &again) <= 1e-9);
    }

    #[test]
    fn projection_is_non_expansive_and_obtuse(a in vector(15), b in vector(15)) {
        let len = a.len().min(b.len());
        let (a, b) = (&a[..len], &b[..len]);
        let cone = ConeSpec::new(0, len - 1).unwrap();
        let pa = project_convex(a, cone).unwrap();
        let pb = project_convex(b, cone).unwrap();
        let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dist(&pa, &pb) <= dist(a, b) + 1e-9);
        // pb is in the cone, so the residual at a makes an obtuse angle with it
        let r: Vec<f64> = a.iter().zip(&pa).map(|(x, g)| x - g).collect();
        let d: Vec<f64> = pb.iter().zip(&pa).map(|(h, g)| h - g).collect();
        prop_assert!(dot(&r, &d) <= 1e-9);
        prop_assert!(dot(&r, &pa).abs() <= 1e-9);
    }

    #[test]
    fn dykstra_agrees_with_oracle((y, cones) in partitioned(10)) {
        let g = dykstra_project(&y, &cones, &DykstraOptions::default()).unwrap();
        let o = kkt_oracle(&y, &cones).unwrap();
        prop_assert!(sup(&g, &o) <= 1e-6, "gap {}", sup(&g, &o));
    }

    #[test]
    fn lse_agrees_with_oracle(sample in small_sample()) {
        let r = lse(&sample, DEFAULT_BUFFER).unwrap();
        let y = sample.empirical_pmf().padded(12);
        let o = kkt_oracle(&y, &[ConeSpec::new(0, 11).unwrap()]).unwrap();
        // the free-end projection is over a larger set; it is the estimate
        // exactly when it extends by zeros to a convex sequence on ℕ
        prop_assume!(o.iter().all(|&v| v >= -1e-12) && o[10] - 2.0 * o[11] >= -1e-12);
        for k in 0..12 {
            prop_assert!((r.get(k) - o[k]).abs() <= 1e-9, "k = {}", k);
        }
    }

    #[test]
    fn lse_certifies_and_keeps_mass_and_mean(sample in small_sample()) {
        let r = lse(&sample, DEFAULT_BUFFER).unwrap();
        prop_assert!(r.certificate.passed());
        prop_assert!((r.total_mass() - 1.0).abs() <= 1e-10);
        prop_assert!((r.mean() - r.p_n.mean()).abs() <= 1e-10);
        prop_assert!(r.p_hat.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn convex_empirical_is_its_own_estimate(w in weights(), n in 20u64..200) {
        // counts proportional to a convex pmf are not convex in general,
        // but the pmf itself, read as an empirical distribution, is
        let p = mixture_compose(&w).unwrap();
        let counts: Vec<u64> = p.mass().iter().map(|&m| (m * n as f64 * 1e6).round() as u64).collect();
        let sample = Sample::from_counts(counts).unwrap();
        let emp = sample.empirical_pmf();
        if emp.is_convex(0.0) {
            let r = lse(&sample, DEFAULT_BUFFER).unwrap();
            prop_assert!(sup(&r.p_hat, &emp.padded(r.p_hat.len())) <= 1e-9);
        }
    }
}

#[test]
fn pmf_json_round_trip() {
    let p = Pmf::new(vec![0.5, 0.3, 0.2]).unwrap();
    let text = serde_json::to_string(&p).unwrap();
    let back: Pmf = serde_json::from_str(&text).unwrap();
    assert_eq!(p, back);
}
