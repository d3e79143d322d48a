//! The named pmfs of the simulation studies, all supported on `{0, …, 10}`.
//!
//! * `p0`: triangular `T_11`, `p0(i) = (11 - i)/66`.
//! * `p1`–`p4`: triangular mixtures with the weights below.
//! * `p5`: truncated geometric with `q = 1/2`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pmf::{mixture_compose, triangular, truncated_geometric, MixtureWeights, Pmf};

pub const CATALOG_IDS: [&str; 6] = ["p0", "p1", "p2", "p3", "p4", "p5"];

/// Mixing weights `(j, π_j)` exactly as tabulated for `p1`–`p4`.
///
/// The `p3` row sums to 13/12; [`catalog_weights`] rescales it to one.
pub fn tabulated_weights(id: &str) -> Option<Vec<(usize, f64)>> {
    let row = match id {
        "p1" => vec![
            (2, 1.0 / 6.0),
            (5, 1.0 / 6.0),
            (9, 1.0 / 2.0),
            (11, 1.0 / 6.0),
        ],
        "p2" => vec![
            (4, 1.0 / 6.0),
            (6, 1.0 / 6.0),
            (8, 1.0 / 12.0),
            (10, 1.0 / 2.0),
            (11, 1.0 / 12.0),
        ],
        "p3" => vec![
            (3, 1.0 / 6.0),
            (4, 1.0 / 12.0),
            (5, 1.0 / 4.0),
            (7, 1.0 / 12.0),
            (9, 1.0 / 6.0),
            (10, 1.0 / 6.0),
            (11, 1.0 / 6.0),
        ],
        "p4" => vec![
            (2, 1.0 / 12.0),
            (3, 1.0 / 6.0),
            (4, 1.0 / 12.0),
            (5, 1.0 / 12.0),
            (6, 1.0 / 12.0),
            (7, 1.0 / 12.0),
            (8, 1.0 / 12.0),
            (9, 1.0 / 12.0),
            (10, 1.0 / 6.0),
            (11, 1.0 / 12.0),
        ],
        _ => return None,
    };
    Some(row)
}

/// Validated mixing weights of `p1`–`p4`.
pub fn catalog_weights(id: &str) -> Result<MixtureWeights> {
    let mut row = tabulated_weights(id).ok_or_else(|| Error::UnknownPmf(id.to_string()))?;
    if id == "p3" {
        let total: f64 = row.iter().map(|&(_, w)| w).sum();
        row.iter_mut().for_each(|(_, w)| *w /= total);
    }
    MixtureWeights::from_pairs(&row)
}

pub fn catalog(id: &str) -> Result<Pmf> {
    match id {
        "p0" => triangular(11),
        "p1" | "p2" | "p3" | "p4" => mixture_compose(&catalog_weights(id)?),
        "p5" => truncated_geometric(0.5, 10),
        _ => Err(Error::UnknownPmf(id.to_string())),
    }
}

/// A catalog id, or else a path to a `{"mass": […]}` file.
pub fn resolve_pmf(spec: &str) -> Result<Pmf> {
    if CATALOG_IDS.contains(&spec) {
        return catalog(spec);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::UnknownPmf(spec.to_string()));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
