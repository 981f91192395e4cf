//! Search for `(α, R_1..R_l)` whose qudit photon-number distribution matches
//! a target: a coarse grid scan seeds a multistart bounded simplex descent of
//! `E = Σ_p (|A_p|² − t_p)²`.

pub mod nelder_mead;
pub mod scan;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{closed_form_qudit, evaluate_qudit, CascadeConfig, QuditState};
use crate::error::{Error, Result};
use crate::fock::{FockVector, C64};
use crate::metrics::{linspace, pnd_fidelity, rotation_optimal_fidelity};

pub use nelder_mead::{Bounds, Minimum, NelderMeadOptions};
pub use scan::{grid_scan, ScanRecord, DEFAULT_SCAN_BUDGET};

/// Objective value assigned to configurations with no valid output.
pub const DEGENERATE_PENALTY: f64 = 1e6;
pub const ALPHA_MAX: f64 = 5.0;
pub const DEFAULT_RESTARTS: usize = 64;
/// Number of multistart points taken from the coarse grid scan.
pub const GRID_STARTS: usize = 8;
/// Objectives closer than this are ranked by the tie-break keys instead.
pub const TIE_TOL: f64 = 1e-12;
/// Upper limit on the coarse initial-point scan.
const COARSE_SCAN_POINTS: f64 = 50_000.0;

fn squared_error(pnd: &[f64], target: &[f64]) -> f64 {
    pnd.iter().zip(target).map(|(a, t)| (a - t).powi(2)).sum()
}

/// `E = Σ_p (|A_p|² − t_p)²`. Configurations without a valid output score
/// [`DEGENERATE_PENALTY`].
pub fn objective(config: &CascadeConfig, target: &[f64]) -> Result<f64> {
    if target.len() != config.l() + 1 {
        return Err(Error::DimensionMismatch {
            left: config.l() + 1,
            right: target.len(),
        });
    }
    Ok(match evaluate_qudit(config) {
        Ok(q) => {
            let pnd = q.pnd();
            debug_assert!((pnd.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            squared_error(&pnd, target)
        }
        Err(_) => DEGENERATE_PENALTY,
    })
}

fn config_from_params(params: &[f64]) -> CascadeConfig {
    CascadeConfig {
        alpha: C64::new(params[0], 0.0),
        reflectivities: params[1..].to_vec(),
    }
}

/// Box of the search: `α ∈ [0, 5]`, `R_i ∈ [0, 1]`.
pub fn parameter_bounds(l: usize) -> Bounds {
    let mut lower = vec![0.0; l + 1];
    let mut upper = vec![1.0; l + 1];
    lower[0] = 0.0;
    upper[0] = ALPHA_MAX;
    Bounds::new(lower, upper)
}

#[derive(Clone, Debug)]
pub struct OptimizationProblem {
    pub l: usize,
    /// Desired `|A_p|²`, `p = 0..=l`.
    pub target: Vec<f64>,
    /// Complex target amplitudes for a post-hoc phase-sensitive fidelity.
    pub target_amplitudes: Option<Vec<C64>>,
    pub restarts: usize,
    pub seed: u64,
    /// Initial values for `R_1..R_k` in every random start (warm start from a
    /// solved lower-order problem).
    pub reflectivity_prefix: Vec<f64>,
    /// Extra full starting points `[α, R_1..R_l]`, tried first.
    pub initial_points: Vec<Vec<f64>>,
    pub local: NelderMeadOptions,
}

impl OptimizationProblem {
    pub fn new(l: usize, target: Vec<f64>) -> Result<Self> {
        let p = Self {
            l,
            target,
            target_amplitudes: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            reflectivity_prefix: Vec::new(),
            initial_points: Vec::new(),
            local: NelderMeadOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_target_amplitudes(mut self, amps: Vec<C64>) -> Self {
        self.target_amplitudes = Some(amps);
        self
    }

    pub fn with_reflectivity_prefix(mut self, prefix: Vec<f64>) -> Self {
        self.reflectivity_prefix = prefix;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::domain("optimization needs l >= 1"));
        }
        if self.target.len() != self.l + 1 {
            return Err(Error::InvalidTarget(format!(
                "target has {} entries, expected l + 1 = {}",
                self.target.len(),
                self.l + 1
            )));
        }
        if self.target.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidTarget("target entries must be >= 0".into()));
        }
        let sum: f64 = self.target.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTarget(format!(
                "target sums to {sum}, expected 1"
            )));
        }
        if let Some(a) = &self.target_amplitudes {
            if a.len() != self.l + 1 {
                return Err(Error::InvalidTarget(format!(
                    "{} target amplitudes for l = {}",
                    a.len(),
                    self.l
                )));
            }
        }
        if self.reflectivity_prefix.len() > self.l
            || self.reflectivity_prefix.iter().any(|r| !(0.0..=1.0).contains(r))
        {
            return Err(Error::domain("reflectivity prefix must fit the cascade and lie in [0, 1]"));
        }
        if let Some(p) = self.initial_points.iter().find(|p| p.len() != self.l + 1) {
            return Err(Error::domain(format!(
                "initial point has {} parameters, expected {}",
                p.len(),
                self.l + 1
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StartOrigin {
    Given,
    Grid,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartTrace {
    pub index: usize,
    pub origin: StartOrigin,
    pub start: Vec<f64>,
    pub params: Vec<f64>,
    pub objective: f64,
    pub success_probability: f64,
    /// Rotation-optimal fidelity against the complex target, when given.
    pub quantum_fidelity: Option<f64>,
    pub evals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub alpha: f64,
    pub reflectivities: Vec<f64>,
    pub objective: f64,
    /// Achieved `|A_p|²`.
    pub amplitudes: Vec<f64>,
    /// `(Σ_p √(|A_p|² t_p))²`.
    pub fidelity_vs_target: f64,
    pub success_probability: f64,
    /// `max_φ |⟨target|e^{iφn}|qudit⟩|²` when complex target amplitudes are known.
    pub quantum_fidelity: Option<f64>,
    /// Phase `φ` to apply to `α` to realize [`Self::quantum_fidelity`].
    pub rotation: Option<f64>,
    pub trace: Vec<RestartTrace>,
}

impl OptimizationResult {
    /// `[α, R_1..R_l]`.
    pub fn best_params(&self) -> Vec<f64> {
        let mut p = vec![self.alpha];
        p.extend(&self.reflectivities);
        p
    }

    pub fn config(&self) -> CascadeConfig {
        config_from_params(&self.best_params())
    }
}

/// Top `GRID_STARTS` grid points for the target, ties broken by grid order.
fn grid_starts(problem: &OptimizationProblem) -> Result<Vec<Vec<f64>>> {
    let l = problem.l;
    let per_axis = (COARSE_SCAN_POINTS / 11.0).powf(1.0 / l as f64).floor() as usize;
    let per_axis = per_axis.clamp(3, 26);
    let alphas = linspace(0.0, ALPHA_MAX, 11);
    let rs = linspace(0.0, 1.0, per_axis);
    let records = grid_scan(l, &alphas, &rs, DEFAULT_SCAN_BUDGET)?;
    let mut scored: Vec<(f64, usize)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.pnd.is_empty())
        .map(|(i, r)| (squared_error(&r.pnd, &problem.target), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .iter()
        .take(GRID_STARTS)
        .map(|&(_, i)| {
            let r = &records[i];
            let mut p = vec![r.alpha];
            p.extend(&r.reflectivities);
            p
        })
        .collect())
}

fn starting_points(problem: &OptimizationProblem) -> Result<Vec<(StartOrigin, Vec<f64>)>> {
    let mut starts: Vec<(StartOrigin, Vec<f64>)> = problem
        .initial_points
        .iter()
        .map(|p| (StartOrigin::Given, p.clone()))
        .collect();
    if starts.len() < problem.restarts {
        starts.extend(grid_starts(problem)?.into_iter().map(|p| (StartOrigin::Grid, p)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    while starts.len() < problem.restarts {
        let mut p = vec![rng.random_range(0.0..=ALPHA_MAX)];
        for i in 0..problem.l {
            let r: f64 = rng.random_range(0.0..=1.0);
            p.push(problem.reflectivity_prefix.get(i).copied().unwrap_or(r));
        }
        starts.push((StartOrigin::Random, p));
    }
    starts.truncate(problem.restarts.max(1));
    Ok(starts)
}

fn reflectivity_sum(params: &[f64]) -> f64 {
    params[1..].iter().sum()
}

/// Multistart bounded simplex search; deterministic for a given seed.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    problem.validate()?;
    let bounds = parameter_bounds(problem.l);
    let starts = starting_points(problem)?;
    let target = &problem.target;
    let trace: Vec<RestartTrace> = starts
        .par_iter()
        .enumerate()
        .map(|(index, (origin, start))| {
            let f = |x: &[f64]| match evaluate_qudit(&config_from_params(x)) {
                Ok(q) => squared_error(&q.pnd(), target),
                Err(_) => DEGENERATE_PENALTY,
            };
            let m = nelder_mead::minimize(f, start, &bounds, &problem.local);
            let q = evaluate_qudit(&config_from_params(&m.x)).ok();
            let success_probability = q.as_ref().map_or(0.0, |q| q.success_probability);
            let quantum_fidelity = match (&q, &problem.target_amplitudes) {
                (Some(q), Some(t)) => qudit_rotation_fidelity(q, t).ok().map(|(f, _)| f),
                _ => None,
            };
            RestartTrace {
                index,
                origin: *origin,
                start: start.clone(),
                params: m.x,
                objective: m.f,
                success_probability,
                quantum_fidelity,
                evals: m.evals,
            }
        })
        .collect();

    // The objective ignores phases, so equally good restarts can sit on
    // different sign branches; with complex target amplitudes the branch with
    // the best phase-sensitive fidelity wins the tie.
    let best_f = trace.iter().map(|t| t.objective).fold(f64::INFINITY, f64::min);
    let phase_key = |t: &RestartTrace| t.quantum_fidelity.map_or(0, |f| (f * 1e9).round() as i64);
    let winner = trace
        .iter()
        .filter(|t| t.objective <= best_f + TIE_TOL)
        .min_by(|a, b| {
            phase_key(b)
                .cmp(&phase_key(a))
                .then(b.success_probability.total_cmp(&a.success_probability))
                .then(reflectivity_sum(&a.params).total_cmp(&reflectivity_sum(&b.params)))
                .then(a.index.cmp(&b.index))
        })
        .expect("at least one restart");

    let config = config_from_params(&winner.params);
    let q = evaluate_qudit(&config)?;
    let amplitudes = q.pnd();
    let (quantum_fidelity, rotation) = match &problem.target_amplitudes {
        Some(t) => {
            let (f, phi) = qudit_rotation_fidelity(&q, t)?;
            (Some(f), Some(phi))
        }
        None => (None, None),
    };
    Ok(OptimizationResult {
        alpha: winner.params[0],
        reflectivities: winner.params[1..].to_vec(),
        objective: winner.objective,
        fidelity_vs_target: pnd_fidelity(&amplitudes, target),
        success_probability: q.success_probability,
        amplitudes,
        quantum_fidelity,
        rotation,
        trace,
    })
}

/// Phase-sensitive fidelity of the qudit amplitudes against target amplitudes,
/// maximized over phase-space rotation.
pub fn qudit_rotation_fidelity(q: &QuditState, target: &[C64]) -> Result<(f64, f64)> {
    let dim = q.amplitudes.len().max(target.len()).max(2);
    let pad = |v: &[C64]| {
        let mut v = v.to_vec();
        v.resize(dim, C64::new(0.0, 0.0));
        FockVector::new(v)
    };
    let t = pad(target)?.normalized()?;
    rotation_optimal_fidelity(&t, &pad(&q.amplitudes)?)
}

/// Result of projecting a configuration onto a real target amplitude vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub alpha_sq: f64,
    pub reflectivities: Vec<f64>,
    /// `‖A − (A·t)t‖` at the end.
    pub residual: f64,
    pub iterations: usize,
}

fn real_amplitudes(z: &[f64]) -> Option<Vec<f64>> {
    let config = CascadeConfig::from_alpha_sq(z[0], z[1..].to_vec()).ok()?;
    closed_form_qudit(&config)
        .ok()
        .map(|q| q.amplitudes.iter().map(|a| a.re).collect())
}

fn projection_residual(z: &[f64], target: &[f64], sign: f64) -> Option<DVector<f64>> {
    let a = real_amplitudes(z)?;
    let a: Vec<f64> = a.iter().map(|x| x * sign).collect();
    let overlap: f64 = a.iter().zip(target).map(|(x, t)| x * t).sum();
    Some(DVector::from_iterator(
        a.len(),
        a.iter().zip(target).map(|(x, t)| x - overlap * t),
    ))
}

/// Minimum-norm Gauss–Newton walk from `(|α|², R)` to a nearby configuration
/// whose real qudit amplitudes are parallel to `target`.
///
/// Each step is `−J⁺ r` with a central-difference Jacobian; steps are halved
/// until they stay in the box and reduce the residual.
pub fn project_onto_amplitudes(alpha_sq: f64, reflectivities: &[f64], target: &[f64]) -> Result<Projection> {
    let l = reflectivities.len();
    if target.len() != l + 1 {
        return Err(Error::DimensionMismatch { left: l + 1, right: target.len() });
    }
    let tnorm = target.iter().map(|t| t * t).sum::<f64>().sqrt();
    let target: Vec<f64> = target.iter().map(|t| t / tnorm).collect();
    let mut z = vec![alpha_sq];
    z.extend_from_slice(reflectivities);
    let a0 = real_amplitudes(&z).ok_or_else(|| {
        Error::DegenerateConfiguration("projection start has no closed-form output".into())
    })?;
    let sign = if a0.iter().zip(&target).map(|(a, t)| a * t).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let in_box = |z: &[f64]| z[0] > 0.0 && z[0] <= ALPHA_MAX * ALPHA_MAX && z[1..].iter().all(|r| *r > 0.0 && *r <= 1.0);
    let mut r = projection_residual(&z, &target, sign).expect("start evaluated above");
    let mut iterations = 0;
    for _ in 0..60 {
        if r.norm() < 1e-15 {
            break;
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(l + 1, l + 1);
        for j in 0..=l {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let (Some(rp), Some(rm)) = (
                projection_residual(&zp, &target, sign),
                projection_residual(&zm, &target, sign),
            ) else {
                return Err(Error::DegenerateConfiguration(
                    "projection reached the edge of the closed-form domain".into(),
                ));
            };
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        let pinv = jac
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::domain(format!("pseudo-inverse failed: {e}")))?;
        let dz = -(pinv * &r);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + scale * d).collect();
            if in_box(&trial) {
                if let Some(rt) = projection_residual(&trial, &target, sign) {
                    if rt.norm() < r.norm() {
                        z = trial;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
            }
            scale *= 0.5;
        }
        if !accepted || dz.norm() * scale < 1e-14 {
            break;
        }
    }
    Ok(Projection {
        alpha_sq: z[0],
        reflectivities: z[1..].to_vec(),
        residual: r.norm(),
        iterations,
    })
}
