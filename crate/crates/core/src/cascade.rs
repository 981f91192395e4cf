//! Closed-form displaced-qudit output of an l-stage catalysis cascade and the
//! brute-force Fock-space chain it is validated against.
//!
//! With `X_k` the coefficients of `∏_i [R_i + (1−R_i)x]` and `β = α√X₀`, the
//! heralded output is `D(β) Σ_{p≤l} A_p |p⟩`. The unnormalized amplitudes are
//!
//! ```text
//! Ã_p = √p! β^p Σ_{m≥p} (−1)^m X_m Σ_{k≥p} S(m,k) C(k,p) |β|^{2(k−p)}
//! ```
//!
//! and the success probability is `e^{−|α|²(1−X₀)} / X₀ · Σ_p |Ã_p|²`.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    apply_displacement, catalysis_step, coherent_state, policy_cutoff, FockVector, C64,
};

/// Largest `n` accepted by [`stirling2`] and [`touchard`].
pub const MAX_STIRLING_N: usize = 64;

/// Exact Stirling number of the second kind `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> Result<BigUint> {
    if n > MAX_STIRLING_N || k > n {
        return Err(Error::domain(format!(
            "stirling2({n}, {k}) needs 0 <= k <= n <= {MAX_STIRLING_N}"
        )));
    }
    Ok(stirling_exact_table()[n][k].clone())
}

fn stirling_exact_table() -> &'static Vec<Vec<BigUint>> {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t: Vec<Vec<BigUint>> = Vec::with_capacity(MAX_STIRLING_N + 1);
        t.push(vec![BigUint::one()]);
        for n in 1..=MAX_STIRLING_N {
            let mut row = vec![BigUint::zero(); n + 1];
            for k in 1..=n {
                let mut v = t[n - 1][k - 1].clone();
                if k < n {
                    v += &t[n - 1][k] * BigUint::from(k);
                }
                row[k] = v;
            }
            t.push(row);
        }
        t
    })
}

/// `S(n, k)` rounded to the nearest double; exact for the small `n` the
/// closed form needs.
pub(crate) fn stirling_f64(n: usize, k: usize) -> f64 {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        stirling_exact_table()
            .iter()
            .map(|row| row.iter().map(|v| v.to_f64().unwrap_or(f64::INFINITY)).collect())
            .collect()
    });
    t[n][k]
}

/// Touchard polynomial `T_n(y) = Σ_k S(n,k) y^k`.
pub fn touchard(n: usize, y: C64) -> Result<C64> {
    if n > MAX_STIRLING_N {
        return Err(Error::domain(format!(
            "touchard order {n} exceeds {MAX_STIRLING_N}"
        )));
    }
    // Horner from the top coefficient
    let mut acc = C64::new(0.0, 0.0);
    for k in (0..=n).rev() {
        acc = acc * y + stirling_f64(n, k);
    }
    Ok(acc)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn sqrt_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * (i as f64).sqrt())
}

/// Coherent amplitude plus ordered beam-splitter reflectivities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeConfig {
    pub alpha: C64,
    pub reflectivities: Vec<f64>,
}

impl CascadeConfig {
    pub fn new(alpha: C64, reflectivities: Vec<f64>) -> Result<Self> {
        if reflectivities.is_empty() {
            return Err(Error::domain("a cascade needs at least one stage"));
        }
        if let Some(r) = reflectivities
            .iter()
            .find(|r| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::domain(format!("reflectivity {r} outside [0, 1]")));
        }
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::domain("coherent amplitude must be finite"));
        }
        Ok(Self {
            alpha,
            reflectivities,
        })
    }

    /// Real positive `α = √(|α|²)`, the form the tables quote.
    pub fn from_alpha_sq(alpha_sq: f64, reflectivities: Vec<f64>) -> Result<Self> {
        if !(alpha_sq >= 0.0) {
            return Err(Error::domain(format!("|alpha|^2 = {alpha_sq} must be >= 0")));
        }
        Self::new(C64::new(alpha_sq.sqrt(), 0.0), reflectivities)
    }

    pub fn l(&self) -> usize {
        self.reflectivities.len()
    }

    pub fn policy_cutoff(&self) -> usize {
        policy_cutoff(self.alpha.norm())
    }
}

/// Coefficients `X_0..X_l` of `∏_i [R_i + (1−R_i)x]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReflectivityPolynomial {
    pub coeffs: Vec<f64>,
}

impl ReflectivityPolynomial {
    pub fn from_reflectivities(reflectivities: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        for &r in reflectivities {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k] += r * c;
                next[k + 1] += (1.0 - r) * c;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn x0(&self) -> f64 {
        self.coeffs[0]
    }
}

pub fn reflectivity_coeffs(config: &CascadeConfig) -> ReflectivityPolynomial {
    ReflectivityPolynomial::from_reflectivities(&config.reflectivities)
}

/// `D(displacement) Σ_p amplitudes[p] |p⟩` with its heralding probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuditState {
    pub displacement: C64,
    pub amplitudes: Vec<C64>,
    pub success_probability: f64,
}

impl QuditState {
    /// Normalizes `amplitudes` and rotates the global phase so the first
    /// non-negligible amplitude is real and positive.
    pub fn new(displacement: C64, amplitudes: Vec<C64>, success_probability: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::domain("qudit needs at least one amplitude"));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegeneratePostselection {
                probability: success_probability,
            });
        }
        let largest = amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let pivot = amplitudes
            .iter()
            .find(|a| a.norm() > 1e-12 * largest)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        Ok(Self {
            displacement,
            amplitudes: amplitudes.iter().map(|a| a * phase / norm).collect(),
            success_probability,
        })
    }

    pub fn l(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// `|A_p|²` for `p = 0..=l`.
    pub fn pnd(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// The finite superposition `Σ A_p |p⟩` without the displacement.
    pub fn undisplaced(&self, cutoff: usize) -> Result<FockVector> {
        if self.l() > cutoff {
            return Err(Error::domain(format!(
                "qudit dimension {} exceeds cutoff {cutoff}",
                self.l() + 1
            )));
        }
        let mut amps = self.amplitudes.clone();
        amps.resize(cutoff.max(1) + 1, C64::new(0.0, 0.0));
        FockVector::new(amps)
    }

    /// Cutoff from the fock-core policy, widened to hold the qudit's own support.
    pub fn policy_cutoff(&self) -> usize {
        let b = self.displacement.norm();
        policy_cutoff(b) + self.l() + (2.0 * b * (self.l() as f64).sqrt()).ceil() as usize
    }
}

/// Closed-form cascade output.
///
/// `α = 0` and `X₀ = 0` make the closed form singular; both are reported as
/// [`Error::DegenerateConfiguration`] so callers can fall back to the oracle.
pub fn closed_form_qudit(config: &CascadeConfig) -> Result<QuditState> {
    let poly = reflectivity_coeffs(config);
    let x0 = poly.x0();
    if config.alpha.norm() == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "closed form requires alpha != 0".into(),
        ));
    }
    if x0 == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "closed form requires every reflectivity > 0 (X0 = 0)".into(),
        ));
    }
    let l = config.l();
    let beta = config.alpha * x0.sqrt();
    let b2 = beta.norm_sqr();
    let mut raw = Vec::with_capacity(l + 1);
    let mut beta_pow = C64::new(1.0, 0.0);
    for p in 0..=l {
        let mut sum = 0.0;
        for m in p..=l {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut inner = 0.0;
            let mut b2_pow = 1.0;
            for k in p..=m {
                inner += stirling_f64(m, k) * binomial(k, p) * b2_pow;
                b2_pow *= b2;
            }
            sum += sign * poly.coeffs[m] * inner;
        }
        raw.push(beta_pow * sqrt_factorial(p) * sum);
        beta_pow *= beta;
    }
    let norm_sqr: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
    let probability = (-config.alpha.norm_sqr() * (1.0 - x0)).exp() / x0 * norm_sqr;
    if !(probability >= crate::fock::MIN_HERALD_PROBABILITY) {
        return Err(Error::DegeneratePostselection { probability });
    }
    QuditState::new(beta, raw, probability)
}

/// Chains [`catalysis_step`] over every stage starting from `|α⟩`.
pub fn oracle_cascade(config: &CascadeConfig, cutoff: usize) -> Result<(FockVector, f64)> {
    let mut state = coherent_state(config.alpha, cutoff)?;
    let mut probability = 1.0;
    for &r in &config.reflectivities {
        let (next, p) = catalysis_step(&state, r)?;
        state = next;
        probability *= p;
    }
    Ok((state, probability))
}

/// Catalysis factor `⟨k|⟨1| U(R) |k⟩|1⟩ = t^{k−1}(R − k(1−R))`, `t = √R`.
///
/// Each stage acts diagonally on the photon number of the signal mode.
pub fn catalysis_factor(reflectivity: f64, k: usize) -> f64 {
    let t = reflectivity.sqrt();
    if k == 0 {
        return t;
    }
    t.powi(k as i32 - 1) * (reflectivity - k as f64 * (1.0 - reflectivity))
}

/// Cascade output from the diagonal stage factors:
/// `ψ_n ∝ e^{−|α|²/2} α^n/√n! ∏_i u_n(R_i)`.
///
/// Equivalent to [`oracle_cascade`] without forming any beam-splitter block.
pub fn diagonal_cascade(config: &CascadeConfig, cutoff: usize) -> Result<(FockVector, f64)> {
    let coh = coherent_state(config.alpha, cutoff)?;
    let amps: Vec<C64> = coh
        .amps()
        .iter()
        .enumerate()
        .map(|(n, a)| {
            a * config
                .reflectivities
                .iter()
                .map(|&r| catalysis_factor(r, n))
                .product::<f64>()
        })
        .collect();
    let raw = FockVector::new(amps)?;
    let probability = raw.norm_sqr();
    if !(probability >= crate::fock::MIN_HERALD_PROBABILITY) {
        return Err(Error::DegeneratePostselection { probability });
    }
    Ok((raw.normalized()?, probability))
}

/// Qudit description recovered from the Fock-space output by undoing the
/// displacement.
///
/// Covers the configurations the closed form rejects (`α = 0`, some `R_i = 0`).
/// Fails if the undisplaced state leaks beyond `l` photons by more than `1e-8`.
pub fn qudit_via_oracle(config: &CascadeConfig) -> Result<QuditState> {
    let x0 = reflectivity_coeffs(config).x0();
    let beta = config.alpha * x0.sqrt();
    let cutoff = config.policy_cutoff() + config.l();
    let (state, probability) = diagonal_cascade(config, cutoff)?;
    let back = apply_displacement(&state, -beta)?;
    let l = config.l();
    let leak = back.tail_mass(l);
    if leak > 1e-8 {
        return Err(Error::DegenerateConfiguration(format!(
            "oracle output has {leak:.2e} weight above {l} photons after undisplacement"
        )));
    }
    QuditState::new(beta, back.amps()[..=l].to_vec(), probability)
}

/// Closed form when defined, otherwise the oracle route.
pub fn evaluate_qudit(config: &CascadeConfig) -> Result<QuditState> {
    match closed_form_qudit(config) {
        Err(Error::DegenerateConfiguration(_)) => qudit_via_oracle(config),
        other => other,
    }
}

/// `D(displacement) Σ A_p |p⟩` as a normalized Fock vector.
pub fn qudit_to_fock(q: &QuditState, cutoff: usize) -> Result<FockVector> {
    let base = q.undisplaced(cutoff)?;
    apply_displacement(&base, q.displacement)?.normalized()
}

/// Closed form vs oracle on one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub fidelity: f64,
    pub closed_form_probability: f64,
    pub oracle_probability: f64,
    pub probability_relative_error: f64,
    pub cutoff: usize,
}

pub fn cross_check(config: &CascadeConfig, cutoff: usize) -> Result<CrossCheck> {
    let q = closed_form_qudit(config)?;
    let closed = qudit_to_fock(&q, cutoff)?;
    let (oracle, p_oracle) = oracle_cascade(config, cutoff)?;
    let fidelity = closed.inner(&oracle)?.norm_sqr();
    Ok(CrossCheck {
        fidelity,
        closed_form_probability: q.success_probability,
        oracle_probability: p_oracle,
        probability_relative_error: (q.success_probability - p_oracle).abs() / p_oracle,
        cutoff,
    })
}
