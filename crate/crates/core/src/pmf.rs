//! Finitely supported pmfs on `{0, …, S}` and the sequence algebra around them:
//! cdf, the double partial sum `H`, discrete Laplacian, knots, the triangular
//! mixture representation and a few named constructors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ mass = 1` when validating a pmf.
pub const SUM_TOL: f64 = 1e-12;

/// A point `k` is declared a knot of a model pmf when `Δp(k)` exceeds this.
pub const KNOT_TOL: f64 = 1e-10;

/// Weight sums within this distance of one are renormalized by
/// [`mixture_decompose`]; anything further is rejected.
pub const WEIGHT_RENORM_TOL: f64 = 1e-10;

/// Probability mass function supported on `{0, …, S}` with `p(S) > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct Pmf {
    mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    mass: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;
    fn try_from(r: PmfRepr) -> Result<Self> {
        Pmf::new(r.mass)
    }
}

impl From<Pmf> for PmfRepr {
    fn from(p: Pmf) -> Self {
        PmfRepr { mass: p.mass }
    }
}

impl Pmf {
    /// Validates `mass` as a pmf on `{0, …, S}` with `S ≥ 1`.
    ///
    /// Trailing zeros are trimmed first, so `S` is always the last point of
    /// the support.
    pub fn new(mut mass: Vec<f64>) -> Result<Self> {
        while mass.last() == Some(&0.0) {
            mass.pop();
        }
        validate_entries(&mass)?;
        if mass.len() < 2 {
            return Err(Error::InvalidPmf(
                "support must contain at least {0, 1}; Dirac masses are excluded".into(),
            ));
        }
        Ok(Pmf { mass })
    }

    /// Empirical pmf from value counts. Unlike [`Pmf::new`] this admits the
    /// point mass at zero, which an all-zero sample produces.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        let last = counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        let nf = n as f64;
        let mass: Vec<f64> = counts[..=last].iter().map(|&c| c as f64 / nf).collect();
        validate_entries(&mass)?;
        Ok(Pmf { mass })
    }

    /// Largest point of the support.
    pub fn support_max(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `p(k)`, reading zero outside the support.
    pub fn get(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    /// Mass padded with zeros to length `len` (or the support length if larger).
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.mass.clone();
        if v.len() < len {
            v.resize(len, 0.0);
        }
        v
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * m)
            .sum()
    }

    /// `F_p(k)` for `k = 0, …, S+1`. The last two entries are exactly one.
    pub fn cdf(&self) -> Vec<f64> {
        let s = self.support_max();
        let mut f = cumsum(&self.mass);
        f[s] = 1.0;
        f.push(1.0);
        f
    }

    /// `H_p(z) = Σ_{k<z} F_p(k)`, with `H_p(0) = 0`.
    pub fn h(&self, z: usize) -> f64 {
        let f = self.cdf();
        let s = self.support_max();
        if z <= s + 2 {
            f[..z].iter().sum()
        } else {
            // F is identically one past S
            f.iter().sum::<f64>() + (z - (s + 2)) as f64
        }
    }

    /// Discrete Laplacian `Δp(k)` for `k ≥ 1`.
    pub fn laplacian(&self, k: usize) -> f64 {
        laplacian_at(&self.mass, k)
    }

    /// Convex iff `Δp(k) ≥ -tol` on `1 ≤ k ≤ S+1`; the Laplacian vanishes beyond.
    pub fn is_convex(&self, tol: f64) -> bool {
        (1..=self.support_max() + 1).all(|k| self.laplacian(k) >= -tol)
    }

    /// Interior knots `{k ∈ 1..=S : Δp(k) > tol}`.
    pub fn knots(&self, tol: f64) -> KnotSet {
        let s = self.support_max();
        let interior = (1..=s).filter(|&k| self.laplacian(k) > tol).collect();
        KnotSet {
            interior,
            support_max: s,
        }
    }
}

fn validate_entries(mass: &[f64]) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::InvalidPmf("empty mass vector".into()));
    }
    if let Some((k, m)) = mass
        .iter()
        .enumerate()
        .find(|(_, m)| !m.is_finite() || **m < 0.0)
    {
        return Err(Error::InvalidPmf(format!(
            "mass[{k}] = {m} is not a probability"
        )));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidPmf(format!("masses sum to {total}, not 1")));
    }
    Ok(())
}

/// Interior knots `s_1 < … < s_m` of a pmf on `{0, …, S}`; the boundary
/// knots are `s_0 = 0` and `s_{m+1} = S + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotSet {
    interior: Vec<usize>,
    support_max: usize,
}

impl KnotSet {
    pub fn new(mut interior: Vec<usize>, support_max: usize) -> Result<Self> {
        interior.sort_unstable();
        interior.dedup();
        if let Some(&bad) = interior.iter().find(|&&k| k == 0 || k > support_max) {
            return Err(Error::InvalidArgument(format!(
                "interior knot {bad} outside 1..={support_max}"
            )));
        }
        Ok(KnotSet {
            interior,
            support_max,
        })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn support_max(&self) -> usize {
        self.support_max
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.interior.binary_search(&k).is_ok()
    }

    /// `s_0 = 0, s_1, …, s_m, s_{m+1} = S + 1`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut b = Vec::with_capacity(self.interior.len() + 2);
        b.push(0);
        b.extend_from_slice(&self.interior);
        b.push(self.support_max + 1);
        b
    }
}

/// Mixing weights `π_1, …, π_J` of the representation `p = Σ_j π_j T_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsRepr", into = "WeightsRepr")]
pub struct MixtureWeights {
    // pi[j - 1] = π_j
    pi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsRepr {
    pi: BTreeMap<usize, f64>,
}

impl TryFrom<WeightsRepr> for MixtureWeights {
    type Error = Error;
    fn try_from(r: WeightsRepr) -> Result<Self> {
        let max = r.pi.keys().copied().max().unwrap_or(0);
        if r.pi.contains_key(&0) {
            return Err(Error::InvalidWeights(
                "weights are indexed from j = 1".into(),
            ));
        }
        let mut pi = vec![0.0; max];
        for (j, w) in r.pi {
            pi[j - 1] = w;
        }
        MixtureWeights::new(pi)
    }
}

impl From<MixtureWeights> for WeightsRepr {
    fn from(w: MixtureWeights) -> Self {
        let pi =
            w.pi.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i + 1, v))
                .collect();
        WeightsRepr { pi }
    }
}

impl MixtureWeights {
    /// `pi[j - 1]` is the weight of `T_j`. Trailing zeros are trimmed.
    pub fn new(mut pi: Vec<f64>) -> Result<Self> {
        while pi.last() == Some(&0.0) {
            pi.pop();
        }
        if pi.is_empty() {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        if let Some((i, w)) = pi
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!(
                "π_{} = {w} is negative",
                i + 1
            )));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(MixtureWeights { pi })
    }

    /// Builds weights from `(j, π_j)` pairs.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let max = pairs.iter().map(|&(j, _)| j).max().unwrap_or(0);
        let mut pi = vec![0.0; max];
        for &(j, w) in pairs {
            if j == 0 {
                return Err(Error::InvalidWeights(
                    "weights are indexed from j = 1".into(),
                ));
            }
            pi[j - 1] += w;
        }
        Self::new(pi)
    }

    /// `π_j`, zero past the last component.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.pi.get(j - 1).copied().unwrap_or(0.0)
    }

    /// Index of the last positive weight, i.e. `S + 1` of the composed pmf.
    pub fn max_index(&self) -> usize {
        self.pi.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }
}

/// Sequence of partial sums.
pub fn cumsum(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `Δx(k) = x(k+1) - 2x(k) + x(k-1)` for `k ≥ 1`, reading zero past the end.
pub fn laplacian_at(x: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1);
    let at = |i: usize| x.get(i).copied().unwrap_or(0.0);
    at(k + 1) - 2.0 * at(k) + at(k - 1)
}

/// `H_x(z) = Σ_{k<z} Σ_{j≤k} x(j)` for `z = 0, …, len`, where `len = x.len() + extra`.
/// The sequence is read as zero past its end.
pub fn h_values(x: &[f64], extra: usize) -> Vec<f64> {
    let len = x.len() + extra;
    let mut out = Vec::with_capacity(len + 1);
    let (mut f, mut h) = (0.0, 0.0);
    out.push(0.0);
    for k in 0..len {
        f += x.get(k).copied().unwrap_or(0.0);
        h += f;
        out.push(h);
    }
    out
}

pub fn cdf(p: &Pmf) -> Vec<f64> {
    p.cdf()
}

pub fn h_process(p: &Pmf, z: usize) -> f64 {
    p.h(z)
}

pub fn laplacian(p: &Pmf, k: usize) -> f64 {
    p.laplacian(k)
}

pub fn knots(p: &Pmf, tol: f64) -> KnotSet {
    p.knots(tol)
}

pub fn is_convex(p: &Pmf, tol: f64) -> bool {
    p.is_convex(tol)
}

/// Triangular pmf `T_j(i) = 2(j - i)_+ / (j(j + 1))` on `{0, …, j - 1}`.
///
/// `j = 1` is the Dirac mass at zero and is rejected.
pub fn triangular(j: usize) -> Result<Pmf> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!(
            "triangular pmf needs j >= 2, got {j}"
        )));
    }
    let denom = (j * (j + 1)) as f64;
    Pmf::new((0..j).map(|i| 2.0 * (j - i) as f64 / denom).collect())
}

/// Weights `π_j = j(j+1)/2 · Δp(j)` of the unique triangular mixture.
pub fn mixture_decompose(p: &Pmf) -> Result<MixtureWeights> {
    let top = p.support_max() + 1;
    let mut pi = Vec::with_capacity(top);
    for j in 1..=top {
        let d = p.laplacian(j);
        if d < -KNOT_TOL {
            return Err(Error::NotConvex {
                index: j,
                laplacian: d,
            });
        }
        pi.push((j * (j + 1)) as f64 / 2.0 * d.max(0.0));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > WEIGHT_RENORM_TOL {
        return Err(Error::InvalidWeights(format!(
            "decomposed weights sum to {total}"
        )));
    }
    pi.iter_mut().for_each(|w| *w /= total);
    MixtureWeights::new(pi)
}

/// `p = Σ_j π_j T_j`.
pub fn mixture_compose(w: &MixtureWeights) -> Result<Pmf> {
    let top = w.max_index();
    let mut mass = vec![0.0; top];
    for (i, m) in mass.iter_mut().enumerate() {
        *m = (i + 1..=top)
            .map(|j| w.get(j) * 2.0 * (j - i) as f64 / (j * (j + 1)) as f64)
            .sum();
    }
    Pmf::new(mass)
}

/// `p(i) = q^i (1 - q) / (1 - q^{S+1})` on `{0, …, S}`; convex iff `q ≤ 1/2`.
pub fn truncated_geometric(q: f64, support_max: usize) -> Result<Pmf> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "q = {q} must lie in (0, 1)"
        )));
    }
    if support_max < 1 {
        return Err(Error::InvalidArgument("S must be at least 1".into()));
    }
    let norm = 1.0 - q.powi(support_max as i32 + 1);
    Pmf::new(
        (0..=support_max)
            .map(|i| q.powi(i as i32) * (1.0 - q) / norm)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

pub fn norm(x: &[f64], r: Norm) -> f64 {
    match r {
        Norm::L1 => x.iter().map(|v| v.abs()).sum(),
        Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Norm::Inf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cdf_of_two_point_triangle() {
        let p = Pmf::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let f = p.cdf();
        assert_eq!(f.len(), 3);
        assert!(close(f[0], 2.0 / 3.0, 1e-15));
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], 1.0);
    }

    #[test]
    fn h_process_values() {
        let p = Pmf::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(p.h(0), 0.0);
        assert!(close(p.h(2), 5.0 / 3.0, 1e-15));
        let s = p.support_max();
        assert!(close(p.h(s + 2) - p.h(s + 1), 1.0, 1e-15));
        assert!(close(p.h(10) - p.h(9), 1.0, 1e-15));
    }

    #[test]
    fn h_telescopes_to_cdf() {
        let p = triangular(7).unwrap();
        let f = p.cdf();
        for z in 0..f.len() {
            assert!(close(p.h(z + 1) - p.h(z), f[z], 1e-14));
        }
    }

    #[test]
    fn laplacian_examples() {
        let p = Pmf::new(vec![0.5, 1.0 / 3.0, 1.0 / 6.0]).unwrap();
        assert!(close(p.laplacian(1), 0.0, 1e-15));
        assert_eq!(p.laplacian(5), 0.0);
        // T_11 at its last knot: T(12) - 2T(11) + T(10) = 0 - 0 + 2/132
        let t = triangular(11).unwrap();
        assert!(close(t.laplacian(11), 1.0 / 66.0, 1e-15));
    }

    #[test]
    fn concave_bump_is_not_convex() {
        let p = Pmf::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!(close(p.laplacian(1), -0.5, 1e-15));
        assert!(!p.is_convex(KNOT_TOL));
    }

    #[test]
    fn triangular_values() {
        let t3 = triangular(3).unwrap();
        for (a, b) in t3.mass().iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!(close(*a, b, 1e-15));
        }
        let t2 = triangular(2).unwrap();
        assert!(close(t2.get(0), 2.0 / 3.0, 1e-15));
        assert!(close(t2.get(1), 1.0 / 3.0, 1e-15));
        assert!(triangular(1).is_err());
        assert!(triangular(0).is_err());
        let t11 = triangular(11).unwrap();
        assert!(t11.is_convex(KNOT_TOL));
        assert!(t11.knots(KNOT_TOL).is_empty());
        for i in 0..=10 {
            assert!(close(t11.get(i), (11 - i) as f64 / 66.0, 1e-15));
        }
    }

    #[test]
    fn pure_triangle_decomposes_to_single_weight() {
        let w = mixture_decompose(&triangular(11).unwrap()).unwrap();
        assert!(close(w.get(11), 1.0, 1e-12));
        for j in 1..11 {
            assert!(w.get(j).abs() <= 1e-12);
        }
    }

    #[test]
    fn decompose_rejects_non_convex() {
        let p = Pmf::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!(matches!(
            mixture_decompose(&p),
            Err(Error::NotConvex { index: 1, .. })
        ));
    }

    #[test]
    fn truncated_geometric_convexity_switch() {
        assert!(truncated_geometric(0.3, 10).unwrap().is_convex(KNOT_TOL));
        assert!(truncated_geometric(0.5, 10).unwrap().is_convex(KNOT_TOL));
        assert!(!truncated_geometric(0.7, 10).unwrap().is_convex(KNOT_TOL));
        assert!(truncated_geometric(0.0, 10).is_err());
        assert!(truncated_geometric(1.0, 10).is_err());
        assert!(truncated_geometric(0.5, 0).is_err());
    }

    #[test]
    fn geometric_half_has_flat_laplacian_at_s() {
        let p = truncated_geometric(0.5, 10).unwrap();
        assert!(p.laplacian(10).abs() < 1e-15);
        assert_eq!(p.knots(KNOT_TOL).interior(), &[1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn norms() {
        assert_eq!(norm(&[3.0, 4.0], Norm::L2), 5.0);
        assert_eq!(norm(&[1.0, -2.0], Norm::Inf), 2.0);
        assert!(close(
            norm(triangular(5).unwrap().mass(), Norm::L1),
            1.0,
            1e-15
        ));
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![1.2, -0.2]).is_err());
        assert!(Pmf::new(vec![1.0]).is_err());
        assert!(Pmf::new(vec![1.0, 0.0]).is_err());
        let p = Pmf::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(p.support_max(), 1);
    }

    #[test]
    fn knot_set_boundaries() {
        let k = KnotSet::new(vec![5, 2, 9], 10).unwrap();
        assert_eq!(k.boundaries(), vec![0, 2, 5, 9, 11]);
        assert!(k.contains(5));
        assert!(!k.contains(3));
        assert!(KnotSet::new(vec![11], 10).is_err());
        assert!(KnotSet::new(vec![0], 10).is_err());
    }

    #[test]
    fn json_formats() {
        let p = triangular(3).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with("{\"mass\":["));
        let back: Pmf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Pmf>("{\"mass\":[0.5,0.6]}").is_err());

        let w: MixtureWeights = serde_json::from_str(r#"{"pi": {"2": 0.5, "11": 0.5}}"#).unwrap();
        assert_eq!(w.get(2), 0.5);
        assert_eq!(w.get(11), 0.5);
        assert_eq!(w.max_index(), 11);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"pi":{"2":0.5,"11":0.5}}"#);
        assert!(serde_json::from_str::<MixtureWeights>(r#"{"pi": {"2": 0.5}}"#).is_err());
    }

    #[test]
    fn empirical_point_mass_at_zero_is_allowed() {
        let p = Pmf::from_counts(&[3]).unwrap();
        assert_eq!(p.support_max(), 0);
        assert!(Pmf::from_counts(&[0, 0]).is_err());
    }
}
