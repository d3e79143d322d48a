use rand::Rng;

use crate::error::{Error, Result};
use crate::lse::Sample;
use crate::pmf::Pmf;

/// `n` i.i.d. draws from `p` by inverting the cdf.
pub fn draw_sample<R: Rng + ?Sized>(p: &Pmf, n: u64, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    let s = p.support_max();
    let cdf = p.cdf();
    let mut counts = vec![0u64; s + 1];
    for _ in 0..n {
        let u: f64 = rng.random();
        let k = cdf[..=s].partition_point(|&f| f <= u).min(s);
        counts[k] += 1;
    }
    Sample::from_counts(counts)
}
