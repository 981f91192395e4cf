//! Target states: displaced Fock states, superpositions of coherent states on
//! a circle, finite number-state superpositions, ON states and weak cubic
//! phase states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{apply_displacement, FockVector, C64, COHERENT_TAIL_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetKind {
    /// `D(β)|n⟩`.
    Fock { n: usize, displacement: C64 },
    /// `N Σ_r e^{−i2πrh/g} |γ e^{i2πr/g}⟩`.
    Lscs { g: usize, h: usize, gamma: C64 },
    /// `Σ_p B_p |p⟩`.
    Fsns { coefficients: Vec<C64> },
    /// `(|0⟩ + a|N⟩)/√(1+|a|²)`.
    On { a: C64, n: usize },
    /// `(|0⟩ + ia√(3/2)|1⟩ + ia|3⟩)/√(1 + 5|a|²/2)`.
    Cps { a: C64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub cutoff: usize,
}

impl TargetSpec {
    pub fn new(kind: TargetKind, cutoff: usize) -> Result<Self> {
        match &kind {
            TargetKind::Lscs { g, h, .. } if *g == 0 || h >= g => {
                return Err(Error::InvalidTarget(format!(
                    "LSCS needs g >= 1 and 0 <= h < g, got g = {g}, h = {h}"
                )))
            }
            TargetKind::Fsns { coefficients } => {
                let norm: f64 = coefficients.iter().map(|b| b.norm_sqr()).sum();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidTarget(format!(
                        "FSNS coefficients have squared norm {norm}, expected 1"
                    )));
                }
            }
            TargetKind::On { n, .. } if *n == 0 => {
                return Err(Error::InvalidTarget("ON state needs N >= 1".into()))
            }
            _ => {}
        }
        Ok(Self { kind, cutoff })
    }

    pub fn state(&self) -> Result<FockVector> {
        let c = self.cutoff;
        match &self.kind {
            TargetKind::Fock { n, displacement } => displaced_fock_target(*n, *displacement, c),
            TargetKind::Lscs { g, h, gamma } => lscs_state(*g, *h, *gamma, c),
            TargetKind::Fsns { coefficients } => fsns_state(coefficients, c),
            TargetKind::On { a, n } => on_state(*a, *n, c),
            TargetKind::Cps { a } => cubic_phase_state(*a, c),
        }
    }

    /// Target amplitudes in the undisplaced frame, truncated to `p ≤ l` and
    /// renormalized. This is what a qudit's `A_p` is matched against.
    ///
    /// Displaced Fock targets contribute `|n⟩`; the displacement is a free
    /// output of the cascade.
    pub fn qudit_amplitudes(&self, l: usize) -> Result<Vec<C64>> {
        let raw: Vec<C64> = match &self.kind {
            TargetKind::Fock { n, .. } => {
                FockVector::number(*n, self.cutoff.max(*n))?.into_amps()
            }
            _ => self.state()?.into_amps(),
        };
        let mut head: Vec<C64> = raw.into_iter().take(l + 1).collect();
        head.resize(l + 1, C64::new(0.0, 0.0));
        let norm = head.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidTarget(format!(
                "target has no weight on photon numbers 0..={l}"
            )));
        }
        Ok(head.into_iter().map(|a| a / norm).collect())
    }

    /// `|B_p|²` for `p = 0..=l`, see [`TargetSpec::qudit_amplitudes`].
    pub fn qudit_pnd(&self, l: usize) -> Result<Vec<f64>> {
        Ok(self
            .qudit_amplitudes(l)?
            .iter()
            .map(|a| a.norm_sqr())
            .collect())
    }

    /// Weight lost when truncating the undisplaced target to `p ≤ l`.
    pub fn qudit_truncation_loss(&self, l: usize) -> Result<f64> {
        match &self.kind {
            TargetKind::Fock { n, .. } => Ok(if *n > l { 1.0 } else { 0.0 }),
            _ => Ok(self.state()?.tail_mass(l)),
        }
    }
}

/// Normalization of the LSCS as a closed expression:
/// `N_{g,h} = (g Σ_d e^{−i2πdh/g} e^{−|γ|²(1 − e^{i2πd/g})})^{−1/2}`.
///
/// Loses relative precision like `ε/|γ|^{2h}` as `γ → 0` with `h > 0`.
pub fn lscs_normalization(g: usize, h: usize, gamma: C64) -> Result<f64> {
    if g == 0 || h >= g {
        return Err(Error::InvalidTarget(format!(
            "LSCS needs g >= 1 and 0 <= h < g, got g = {g}, h = {h}"
        )));
    }
    let n2 = gamma.norm_sqr();
    let s: C64 = (0..g)
        .map(|d| {
            let phi = 2.0 * PI * d as f64 / g as f64;
            let w = C64::from_polar(1.0, phi);
            C64::from_polar(1.0, -phi * h as f64) * (-(n2) * (C64::new(1.0, 0.0) - w)).exp()
        })
        .sum();
    let total = g as f64 * s.re;
    if !(total > 0.0) {
        return Err(Error::InvalidTarget(format!(
            "LSCS (g = {g}, h = {h}) vanishes at |gamma|^2 = {n2}"
        )));
    }
    Ok(total.powf(-0.5))
}

/// Superposition of `g` coherent states `γe^{i2πr/g}` with phases `e^{−i2πrh/g}`.
///
/// The components interfere so only `n ≡ h (mod g)` survives; amplitudes are
/// built directly on that lattice, which makes the parity zeros exact and
/// gives the `γ → 0` limit `|h⟩` without a `0/0`.
pub fn lscs_state(g: usize, h: usize, gamma: C64, cutoff: usize) -> Result<FockVector> {
    if g == 0 || h >= g {
        return Err(Error::InvalidTarget(format!(
            "LSCS needs g >= 1 and 0 <= h < g, got g = {g}, h = {h}"
        )));
    }
    if h > cutoff {
        return Err(Error::domain(format!("LSCS support starts above cutoff {cutoff}")));
    }
    let zero = C64::new(0.0, 0.0);
    let mut amps = vec![zero; cutoff.max(1) + 1];
    if gamma.norm() == 0.0 {
        amps[h] = C64::new(1.0, 0.0);
        return FockVector::new(amps);
    }
    // γ^n/√n! relative to the n = h term, so small γ stays representable
    let mut term = C64::new(1.0, 0.0);
    let mut kept = 0.0;
    let mut n = h;
    let mut tail = 0.0;
    loop {
        if n <= cutoff {
            amps[n] = term;
            kept += term.norm_sqr();
        } else {
            tail += term.norm_sqr();
            if term.norm_sqr() < 1e-32 * kept {
                break;
            }
        }
        for k in n + 1..=n + g {
            term = term * gamma / (k as f64).sqrt();
        }
        n += g;
        if n > cutoff + 100_000 {
            break;
        }
    }
    let relative_tail = tail / (kept + tail);
    if relative_tail >= COHERENT_TAIL_TOL {
        return Err(Error::Truncation {
            cutoff,
            tail: relative_tail,
            tolerance: COHERENT_TAIL_TOL,
        });
    }
    FockVector::new(amps)?.normalized()
}

/// `Σ_p B_p |p⟩` embedded at the bottom of the truncated space, renormalized.
pub fn fsns_state(coefficients: &[C64], cutoff: usize) -> Result<FockVector> {
    if coefficients.len() > cutoff + 1 {
        return Err(Error::domain(format!(
            "{} coefficients do not fit below cutoff {cutoff}",
            coefficients.len()
        )));
    }
    let mut amps = coefficients.to_vec();
    amps.resize(cutoff.max(1) + 1, C64::new(0.0, 0.0));
    FockVector::new(amps)?
        .normalized()
        .map_err(|_| Error::InvalidTarget("FSNS coefficients are all zero".into()))
}

pub fn on_state(a: C64, n: usize, cutoff: usize) -> Result<FockVector> {
    if n == 0 {
        return Err(Error::InvalidTarget("ON state needs N >= 1".into()));
    }
    if n > cutoff {
        return Err(Error::domain(format!("ON state |{n}> exceeds cutoff {cutoff}")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
    let norm = (1.0 + a.norm_sqr()).sqrt();
    amps[0] = C64::new(1.0 / norm, 0.0);
    amps[n] = a / norm;
    FockVector::new(amps)
}

pub fn cubic_phase_state(a: C64, cutoff: usize) -> Result<FockVector> {
    if cutoff < 3 {
        return Err(Error::domain("cubic phase state needs cutoff >= 3"));
    }
    let i = C64::new(0.0, 1.0);
    let norm = (1.0 + 2.5 * a.norm_sqr()).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
    amps[0] = C64::new(1.0 / norm, 0.0);
    amps[1] = i * a * 1.5f64.sqrt() / norm;
    amps[3] = i * a / norm;
    FockVector::new(amps)
}

pub fn displaced_fock_target(n: usize, beta: C64, cutoff: usize) -> Result<FockVector> {
    apply_displacement(&FockVector::number(n, cutoff)?, beta)?.normalized()
}

/// Real coefficients `B_0..B_l` minimizing the `X̂` variance over states
/// supported on `|0⟩..|l⟩`, and that variance.
///
/// Uses `Var(X) = min_μ ⟨(X − μ)²⟩`: alternately take the lowest eigenvector of
/// `P(X − μ)²P` and reset `μ = ⟨X⟩`. Each half-step lowers the variance.
pub fn optimal_squeezing_coefficients(l: usize) -> (Vec<f64>, f64) {
    let dim = l + 2;
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let v = (n as f64 / 2.0).sqrt();
        x[(n, n - 1)] = v;
        x[(n - 1, n)] = v;
    }
    let x2 = &x * &x;
    let px = x.view((0, 0), (l + 1, l + 1)).into_owned();
    let px2 = x2.view((0, 0), (l + 1, l + 1)).into_owned();
    let variance = |v: &nalgebra::DVector<f64>| {
        let m = v.dot(&(&px * v));
        v.dot(&(&px2 * v)) - m * m
    };
    // start from a small mean displacement to break the parity symmetry
    let mut best: Option<(nalgebra::DVector<f64>, f64)> = None;
    for mu0 in [0.0, 0.3, 0.6, 1.0] {
        let mut mu = mu0;
        let mut v = nalgebra::DVector::zeros(l + 1);
        for _ in 0..500 {
            let shifted = &px2 - &px * (2.0 * mu) + DMatrix::identity(l + 1, l + 1) * (mu * mu);
            let eig = SymmetricEigen::new(shifted);
            let i = eig.eigenvalues.imin();
            v = eig.eigenvectors.column(i).into_owned();
            let next = v.dot(&(&px * &v));
            if (next - mu).abs() < 1e-15 {
                break;
            }
            mu = next;
        }
        let var = variance(&v);
        if best.as_ref().is_none_or(|(_, b)| var < *b) {
            best = Some((v, var));
        }
    }
    let (mut v, var) = best.expect("at least one start");
    let pivot = v.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
    if pivot < 0.0 {
        v.neg_mut();
    }
    (v.iter().copied().collect(), var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_state;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn lscs_with_one_component_is_coherent() {
        let gamma = C64::new(0.9, -0.4);
        let s = lscs_state(1, 0, gamma, 40).unwrap();
        let coh = coherent_state(gamma, 40).unwrap();
        assert!((s.inner(&coh).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lscs_limits_at_zero_amplitude() {
        let s = lscs_state(2, 0, c(0.0), 10).unwrap();
        assert_eq!(s.amps()[0], c(1.0));
        let s = lscs_state(2, 1, c(0.0), 10).unwrap();
        assert_eq!(s.amps()[1], c(1.0));
        let s = lscs_state(2, 1, c(1e-6), 10).unwrap();
        assert!((s.amps()[1].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn even_cat_has_exact_odd_zeros() {
        let s = lscs_state(2, 0, c(1.25f64.sqrt()), 40).unwrap();
        for (n, a) in s.amps().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(a.norm(), 0.0);
            }
        }
    }

    #[test]
    fn lscs_matches_coherent_superposition() {
        for (g, h) in [(2, 0), (2, 1), (3, 1), (4, 3)] {
            let gamma = C64::new(1.1, 0.3);
            let mut sum = vec![c(0.0); 41];
            for r in 0..g {
                let w = C64::from_polar(1.0, 2.0 * PI * r as f64 / g as f64);
                let phase = C64::from_polar(1.0, -2.0 * PI * (r * h) as f64 / g as f64);
                let coh = coherent_state(gamma * w, 40).unwrap();
                for (s, a) in sum.iter_mut().zip(coh.amps()) {
                    *s += phase * a;
                }
            }
            let direct = FockVector::new(sum).unwrap().normalized().unwrap();
            let built = lscs_state(g, h, gamma, 40).unwrap();
            assert!((direct.inner(&built).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lscs_closed_normalization() {
        // norm of the raw sum Σ_r e^{−i2πrh/g}|γω^r⟩ equals 1/N_{g,h}
        for g in 1..=4 {
            for h in 0..g {
                for &g2 in &[0.25, 0.5, 1.0, 1.5, 2.0] {
                    let gamma = c(f64::sqrt(g2));
                    let mut sum = vec![c(0.0); 61];
                    for r in 0..g {
                        let w = C64::from_polar(1.0, 2.0 * PI * r as f64 / g as f64);
                        let phase = C64::from_polar(1.0, -2.0 * PI * (r * h) as f64 / g as f64);
                        for (s, a) in sum.iter_mut().zip(coherent_state(gamma * w, 60).unwrap().amps()) {
                            *s += phase * a;
                        }
                    }
                    let norm = sum.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                    let n = lscs_normalization(g, h, gamma).unwrap();
                    assert!((n * norm - 1.0).abs() < 1e-8, "g={g} h={h} |γ|²={g2}");
                }
            }
        }
    }

    #[test]
    fn invalid_lscs_indices() {
        assert!(matches!(lscs_state(2, 2, c(1.0), 10), Err(Error::InvalidTarget(_))));
        assert!(matches!(lscs_state(0, 0, c(1.0), 10), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn fsns_examples() {
        let s = fsns_state(&[c(0.75f64.sqrt()), c(0.5)], 5).unwrap();
        assert!((s.pnd()[0] - 0.75).abs() < 1e-15);
        let s = fsns_state(&[c(1.0)], 5).unwrap();
        assert_eq!(s.amps()[0], c(1.0));
        assert!(fsns_state(&[c(1.0); 4], 2).is_err());
    }

    #[test]
    fn on_state_examples() {
        let s = on_state(c(0.0), 3, 5).unwrap();
        assert_eq!(s.amps()[0], c(1.0));
        let p = on_state(c(0.5), 3, 5).unwrap().pnd();
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[3] - 0.2).abs() < 1e-15);
        let p = on_state(c(1.0), 4, 5).unwrap().pnd();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_phase_examples() {
        assert_eq!(cubic_phase_state(c(0.0), 5).unwrap().amps()[0], c(1.0));
        let p = cubic_phase_state(c(0.5), 5).unwrap().pnd();
        let expected = [0.61538, 0.23077, 0.0, 0.15385];
        for (x, y) in p.iter().zip(expected) {
            assert!((x - y).abs() < 1e-5);
        }
        assert_eq!(p[2], 0.0);
        assert!(cubic_phase_state(c(0.5), 2).is_err());
    }

    #[test]
    fn displaced_fock_trivial() {
        let alpha = C64::new(0.5, 0.5);
        let d = displaced_fock_target(0, alpha, 30).unwrap();
        let coh = coherent_state(alpha, 30).unwrap();
        assert!((d.inner(&coh).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qudit_frame_pnds() {
        let t = TargetSpec::new(TargetKind::Fock { n: 2, displacement: c(2f64.sqrt()) }, 40).unwrap();
        assert_eq!(t.qudit_pnd(2).unwrap(), vec![0.0, 0.0, 1.0]);
        let t = TargetSpec::new(TargetKind::On { a: c(0.5), n: 3 }, 10).unwrap();
        let p = t.qudit_pnd(3).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[3] - 0.2).abs() < 1e-15);
        let t = TargetSpec::new(TargetKind::Lscs { g: 2, h: 0, gamma: c(1.0) }, 40).unwrap();
        let p = t.qudit_pnd(4).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(t.qudit_truncation_loss(4).unwrap() > 0.0);
    }

    #[test]
    fn unnormalized_fsns_spec_rejected() {
        let r = TargetSpec::new(TargetKind::Fsns { coefficients: vec![c(1.0), c(1.0)] }, 5);
        assert!(matches!(r, Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn optimal_squeezing_first_levels() {
        let (b, var) = optimal_squeezing_coefficients(1);
        assert!((var - 0.375).abs() < 1e-12);
        assert!((b[0] * b[0] - 0.75).abs() < 1e-9);
        let (_, var) = optimal_squeezing_coefficients(0);
        assert!((var - 0.5).abs() < 1e-12);
    }

    #[test]
    fn optimal_squeezing_higher_levels() {
        for (l, expected) in [(2, 0.2753), (3, 0.2297), (4, 0.1902), (5, 0.1666)] {
            let (b, var) = optimal_squeezing_coefficients(l);
            assert!((var - expected).abs() < 1e-4, "l = {l}: {var}");
            assert!((b.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let (b, _) = optimal_squeezing_coefficients(2);
        assert!((b[0] - 0.9530).abs() < 1e-3 && b[1].abs() < 1e-9 && (b[2] + 0.3030).abs() < 1e-3);
    }
}
