//! Exhaustive evaluation of `|A_p|²` over a Cartesian parameter grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{evaluate_qudit, CascadeConfig};
use crate::error::{Error, Result};
use crate::fock::C64;

/// Default largest number of grid evaluations.
pub const DEFAULT_SCAN_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub alpha: f64,
    pub reflectivities: Vec<f64>,
    /// `|A_p|²`, empty when the configuration heralds with zero probability.
    pub pnd: Vec<f64>,
    pub success_probability: f64,
}

fn grid_size(l: usize, alpha_len: usize, r_len: usize) -> Option<u64> {
    (0..l).try_fold(alpha_len as u64, |acc, _| acc.checked_mul(r_len as u64))
}

/// Evaluates every `(α, R_1..R_l)` in `alpha_grid × r_grid^l`.
///
/// Records are ordered with `α` slowest and `R_l` fastest. Amplitudes `α`
/// are real and non-negative.
pub fn grid_scan(
    l: usize,
    alpha_grid: &[f64],
    r_grid: &[f64],
    budget: u64,
) -> Result<Vec<ScanRecord>> {
    if l == 0 {
        return Err(Error::domain("a scan needs l >= 1"));
    }
    if let Some(a) = alpha_grid.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::domain(format!("alpha grid value {a} must be >= 0")));
    }
    if let Some(r) = r_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::domain(format!("reflectivity grid value {r} outside [0, 1]")));
    }
    let total = grid_size(l, alpha_grid.len(), r_grid.len()).unwrap_or(u64::MAX);
    if total > budget {
        return Err(Error::Budget {
            requested: total,
            budget,
        });
    }
    let per_alpha = total / alpha_grid.len().max(1) as u64;
    Ok((0..total)
        .into_par_iter()
        .map(|flat| {
            let alpha = alpha_grid[(flat / per_alpha) as usize];
            let mut rest = flat % per_alpha;
            let mut reflectivities = vec![0.0; l];
            for slot in reflectivities.iter_mut().rev() {
                *slot = r_grid[(rest % r_grid.len() as u64) as usize];
                rest /= r_grid.len() as u64;
            }
            let config = CascadeConfig {
                alpha: C64::new(alpha, 0.0),
                reflectivities,
            };
            match evaluate_qudit(&config) {
                Ok(q) => ScanRecord {
                    alpha,
                    pnd: q.pnd(),
                    success_probability: q.success_probability,
                    reflectivities: config.reflectivities,
                },
                Err(_) => ScanRecord {
                    alpha,
                    pnd: Vec::new(),
                    success_probability: 0.0,
                    reflectivities: config.reflectivities,
                },
            }
        })
        .collect())
}
