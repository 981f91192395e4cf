//! Imperfect hardware: inefficient number-resolving heralding detectors and
//! single-photon sources that emit vacuum with probability `1 − η_s`.
//!
//! Every stage mixes the signal with a fresh ancilla
//! `(1−η_s)|0⟩⟨0| + η_s|1⟩⟨1|`, applies the beam splitter, weights the
//! detected mode by the POVM element `π₁ = Σ_{k≥1} k η_d (1−η_d)^{k−1} |k⟩⟨k|`,
//! traces it out and renormalizes.

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{oracle_cascade, CascadeConfig};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, BeamSplitterUnitary, DensityMatrix, C64, MIN_HERALD_PROBABILITY};
use crate::metrics::fidelity;
use nalgebra::DMatrix;

/// Heralding weight dropped by a finite `povm_terms` must stay below this
/// fraction of the kept weight.
pub const POVM_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImperfectionParams {
    pub eta_d: f64,
    pub eta_s: f64,
    /// Largest detector photon number `K` kept in the POVM sum; `None` keeps
    /// every number the truncated space can produce.
    pub povm_terms: Option<usize>,
}

impl ImperfectionParams {
    pub fn new(eta_d: f64, eta_s: f64, povm_terms: Option<usize>) -> Result<Self> {
        for (name, v) in [("eta_d", eta_d), ("eta_s", eta_s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if povm_terms == Some(0) {
            return Err(Error::domain("povm_terms must be >= 1"));
        }
        Ok(Self {
            eta_d,
            eta_s,
            povm_terms,
        })
    }

    pub fn ideal() -> Self {
        Self {
            eta_d: 1.0,
            eta_s: 1.0,
            povm_terms: None,
        }
    }
}

/// Diagonal of the one-click POVM element, `k η_d (1−η_d)^{k−1}` for `k ≥ 1`
/// and `0` at `k = 0` (no dark counts).
pub fn detector_povm(eta_d: f64, cutoff: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eta_d) {
        return Err(Error::domain(format!("eta_d = {eta_d} outside [0, 1]")));
    }
    if eta_d == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "eta_d = 0 gives an all-zero POVM element".into(),
        ));
    }
    let mut w = vec![0.0; cutoff + 1];
    let miss = 1.0 - eta_d;
    let mut miss_pow = 1.0;
    for (k, wk) in w.iter_mut().enumerate().skip(1) {
        *wk = k as f64 * eta_d * miss_pow;
        miss_pow *= miss;
    }
    Ok(w)
}

/// Per-stage bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub heralding_probability: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub hermiticity_error: f64,
    pub dropped_povm_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealisticOutput {
    pub state: DensityMatrix,
    pub success_probability: f64,
    pub stages: Vec<StageReport>,
}

/// One heralded stage applied to a normalized `ρ`; returns the unnormalized
/// output and the POVM weight dropped beyond `povm_terms`.
fn stage(
    rho: &DMatrix<C64>,
    unitary: &BeamSplitterUnitary,
    povm: &[f64],
    eta_s: f64,
    povm_terms: usize,
) -> (DMatrix<C64>, f64) {
    let dim = rho.nrows();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let mut dropped = 0.0;
    for (j, pj) in [(0usize, 1.0 - eta_s), (1usize, eta_s)] {
        if pj == 0.0 {
            continue;
        }
        // Kraus element for detector count k maps |m⟩ to |m + j − k⟩ with
        // amplitude ⟨m+j−k, k| U |m, j⟩
        for k in 1..=dim.min(povm.len() - 1) {
            let w = pj * povm[k];
            if w == 0.0 {
                continue;
            }
            let kappa: Vec<Option<(usize, f64)>> = (0..dim)
                .map(|m| {
                    let n = m + j;
                    (k <= n).then(|| (n - k, unitary.block(n)[(n - k, m)]))
                })
                .collect();
            if k > povm_terms {
                let mut lost = 0.0;
                for (m, km) in kappa.iter().enumerate() {
                    if let Some((_, a)) = km {
                        lost += w * a * a * rho[(m, m)].re;
                    }
                }
                dropped += lost;
                continue;
            }
            for (m1, k1) in kappa.iter().enumerate() {
                let Some((o1, a1)) = *k1 else { continue };
                if a1 == 0.0 {
                    continue;
                }
                for (m2, k2) in kappa.iter().enumerate() {
                    let Some((o2, a2)) = *k2 else { continue };
                    out[(o1, o2)] += rho[(m1, m2)] * (w * a1 * a2);
                }
            }
        }
    }
    (out, dropped)
}

/// Mixed-state cascade with imperfect sources and detectors.
pub fn realistic_cascade(
    config: &CascadeConfig,
    params: &ImperfectionParams,
    cutoff: usize,
) -> Result<RealisticOutput> {
    let povm = detector_povm(params.eta_d, cutoff + 1)?;
    let povm_terms = params.povm_terms.unwrap_or(cutoff + 1);
    let mut rho = coherent_state(config.alpha, cutoff)?.to_density().elements().clone();
    let mut total = 1.0;
    let mut stages = Vec::with_capacity(config.l());
    for &r in &config.reflectivities {
        let unitary = BeamSplitterUnitary::new(r, cutoff + 1)?;
        let (raw, dropped) = stage(&rho, &unitary, &povm, params.eta_s, povm_terms);
        let p = raw.trace().re;
        if !(p >= MIN_HERALD_PROBABILITY) {
            return Err(Error::DegeneratePostselection { probability: p });
        }
        if dropped > POVM_TAIL_TOL * p {
            return Err(Error::Truncation {
                cutoff: povm_terms,
                tail: dropped / p,
                tolerance: POVM_TAIL_TOL,
            });
        }
        let next = DensityMatrix::new(raw.unscale(p))?;
        stages.push(StageReport {
            heralding_probability: p,
            trace: next.trace(),
            min_eigenvalue: next.min_eigenvalue(),
            hermiticity_error: next.hermiticity_error(),
            dropped_povm_weight: dropped,
        });
        total *= p;
        rho = next.elements().clone();
    }
    Ok(RealisticOutput {
        state: DensityMatrix::new(rho)?,
        success_probability: total,
        stages,
    })
}

/// `F_R = Tr(ρ_I ρ_R)`; same implementation as [`crate::metrics::fidelity`].
pub fn realistic_fidelity(ideal: &DensityMatrix, realized: &DensityMatrix) -> Result<f64> {
    fidelity(ideal, realized)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eta_s: f64,
    pub fidelity: f64,
    pub success_probability: f64,
}

/// `F_R` and success probability over source efficiencies at fixed `η_d`;
/// the ideal reference is the pure oracle output at the same cutoff.
pub fn eta_s_sweep(
    config: &CascadeConfig,
    eta_d: f64,
    eta_s_values: &[f64],
    povm_terms: Option<usize>,
    cutoff: usize,
) -> Result<Vec<SweepPoint>> {
    let (ideal, _) = oracle_cascade(config, cutoff)?;
    let ideal = ideal.to_density();
    eta_s_values
        .par_iter()
        .map(|&eta_s| {
            let params = ImperfectionParams::new(eta_d, eta_s, povm_terms)?;
            let out = realistic_cascade(config, &params, cutoff)?;
            Ok(SweepPoint {
                eta_s,
                fidelity: realistic_fidelity(&ideal, &out.state)?,
                success_probability: out.success_probability,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockVector;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn povm_weights() {
        let w = detector_povm(1.0, 6).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let w = detector_povm(0.98, 6).unwrap();
        assert_eq!(w[0], 0.0);
        assert!((w[1] - 0.98).abs() < 1e-15);
        assert!((w[2] - 0.0392).abs() < 1e-15);
        assert!(matches!(detector_povm(0.0, 4), Err(Error::DegenerateConfiguration(_))));
        assert!(matches!(detector_povm(1.1, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn ideal_limit_matches_oracle() {
        let cfg = CascadeConfig::from_alpha_sq(5.0, vec![0.5, 0.8]).unwrap();
        let out = realistic_cascade(&cfg, &ImperfectionParams::ideal(), 45).unwrap();
        let (pure, p) = oracle_cascade(&cfg, 45).unwrap();
        let d = out.state.elements() - pure.to_density().elements();
        assert!(d.iter().all(|z| z.norm() < 1e-12));
        assert!((out.success_probability - p).abs() < 1e-14);
        let f = realistic_fidelity(&pure.to_density(), &out.state).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_source_single_stage() {
        let alpha = c(1.1);
        let r: f64 = 0.7;
        let cfg = CascadeConfig::new(alpha, vec![r]).unwrap();
        let params = ImperfectionParams::new(1.0, 0.0, None).unwrap();
        let out = realistic_cascade(&cfg, &params, 40).unwrap();
        // single block: ⟨n−1, 1|U|n, 0⟩ = −√n t^{n−1} √(1−R), so the heralded
        // state is a|√R α⟩ with probability (1−R)|α|² e^{−(1−R)|α|²}
        let t = r.sqrt();
        let coh = coherent_state(alpha * t, 40).unwrap();
        let expected = (1.0 - r) * alpha.norm_sqr() * (-(1.0 - r) * alpha.norm_sqr()).exp();
        assert!((out.success_probability - expected).abs() < 1e-12);
        let mut shifted = vec![c(0.0); 41];
        for n in 1..=40 {
            shifted[n - 1] = coh.amps()[n] * (n as f64).sqrt();
        }
        let a_coh = FockVector::new(shifted).unwrap().normalized().unwrap();
        let f = fidelity(&a_coh.to_density(), &out.state).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn povm_truncation_is_checked() {
        let cfg = CascadeConfig::from_alpha_sq(3.0, vec![0.6]).unwrap();
        let params = ImperfectionParams::new(0.5, 0.9, Some(1)).unwrap();
        assert!(matches!(
            realistic_cascade(&cfg, &params, 40),
            Err(Error::Truncation { .. })
        ));
        let params = ImperfectionParams::new(0.5, 0.9, Some(41)).unwrap();
        assert!(realistic_cascade(&cfg, &params, 40).is_ok());
    }

    /// Literal computation on the two-mode density matrix: ρ ⊗ σ_b, dense U,
    /// Tr_b[π₁ U(ρ⊗σ)U†].
    fn two_mode_stage(rho: &DMatrix<C64>, r: f64, eta_s: f64, eta_d: f64) -> DMatrix<C64> {
        let n = rho.nrows() - 1;
        let d = n + 2; // each mode 0..=n+1
        let idx = |a: usize, b: usize| a * d + b;
        let u = BeamSplitterUnitary::via_exponential(r, 2 * d).unwrap();
        let mut big_u = DMatrix::<C64>::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                for a2 in 0..d {
                    for b2 in 0..d {
                        big_u[(idx(a2, b2), idx(a, b))] = c(u.element(a2, b2, a, b));
                    }
                }
            }
        }
        let mut joint = DMatrix::<C64>::zeros(d * d, d * d);
        for (j, pj) in [(0, 1.0 - eta_s), (1, eta_s)] {
            for m1 in 0..=n {
                for m2 in 0..=n {
                    joint[(idx(m1, j), idx(m2, j))] += rho[(m1, m2)] * pj;
                }
            }
        }
        let evolved = &big_u * joint * big_u.adjoint();
        let povm = detector_povm(eta_d, d - 1).unwrap();
        let mut out = DMatrix::<C64>::zeros(n + 1, n + 1);
        for a1 in 0..=n {
            for a2 in 0..=n {
                for k in 0..d {
                    out[(a1, a2)] += evolved[(idx(a1, k), idx(a2, k))] * povm[k];
                }
            }
        }
        out
    }

    #[test]
    fn kraus_form_matches_two_mode_computation() {
        let n = 7;
        let v = crate::targets::fsns_state(&[c(0.5), C64::new(0.3, 0.4), c(-0.5), c(0.2), C64::new(0.0, 0.46)], n)
            .unwrap();
        let rho = v.to_density().elements().clone();
        for (r, eta_s, eta_d) in [(0.4, 0.9, 0.8), (0.75, 0.6, 0.98), (0.2, 1.0, 0.5)] {
            let u = BeamSplitterUnitary::new(r, n + 1).unwrap();
            let povm = detector_povm(eta_d, n + 1).unwrap();
            let (fast, dropped) = stage(&rho, &u, &povm, eta_s, n + 1);
            assert_eq!(dropped, 0.0);
            let slow = two_mode_stage(&rho, r, eta_s, eta_d);
            let diff = (&fast - &slow).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "R = {r}: {diff}");
        }
    }

    #[test]
    fn realistic_state_is_physical() {
        let cfg = CascadeConfig::from_alpha_sq(8.65, vec![0.5025, 0.7875, 0.88]).unwrap();
        let params = ImperfectionParams::new(0.9, 0.8, None).unwrap();
        let out = realistic_cascade(&cfg, &params, cfg.policy_cutoff()).unwrap();
        for s in &out.stages {
            assert!((s.trace - 1.0).abs() < 1e-10);
            assert!(s.min_eigenvalue > -1e-9);
            assert!(s.hermiticity_error < 1e-10);
        }
    }

    #[test]
    fn diagonal_mixture_fidelity() {
        let one = FockVector::number(1, 4).unwrap().to_density();
        let mut m = DMatrix::<C64>::zeros(5, 5);
        m[(0, 0)] = c(0.3);
        m[(1, 1)] = c(0.7);
        let mixed = DensityMatrix::new(m).unwrap();
        assert!((realistic_fidelity(&one, &mixed).unwrap() - 0.7).abs() < 1e-15);
    }
}
