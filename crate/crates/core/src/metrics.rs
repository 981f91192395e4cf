//! Fidelities, Wigner functions, normally ordered moments and quadrature
//! squeezing.

use std::f64::consts::{FRAC_2_PI, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{binomial, sqrt_factorial, QuditState};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockVector, C64};

/// Largest closed-form vs numeric Wigner difference accepted as agreement.
pub const WIGNER_AGREEMENT_TOL: f64 = 1e-8;

/// `Tr(ρ_a ρ_b)`, symmetric in its arguments to the last bit.
pub fn fidelity(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch {
            left: rho_a.dim(),
            right: rho_b.dim(),
        });
    }
    let (a, b) = (rho_a.elements(), rho_b.elements());
    let n = rho_a.dim();
    let mut ab = 0.0;
    let mut ba = 0.0;
    for i in 0..n {
        for j in 0..n {
            ab += (a[(i, j)] * b[(j, i)]).re;
            ba += (b[(i, j)] * a[(j, i)]).re;
        }
    }
    Ok(0.5 * (ab + ba))
}

/// `|⟨a|b⟩|²` for pure states.
pub fn pure_fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Classical fidelity `(Σ_n √(p_n q_n))²` of two photon-number distributions;
/// the shorter one is zero-padded.
pub fn pnd_fidelity(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    s * s
}

/// `max_φ |⟨target| e^{iφn} |state⟩|²` and the maximizing `φ`.
///
/// Phase-space rotations are free for a cascade: rotating `α` by `φ` rotates
/// the output by the same angle.
pub fn rotation_optimal_fidelity(target: &FockVector, state: &FockVector) -> Result<(f64, f64)> {
    if target.cutoff() != state.cutoff() {
        return Err(Error::DimensionMismatch {
            left: target.cutoff(),
            right: state.cutoff(),
        });
    }
    let terms: Vec<C64> = target
        .amps()
        .iter()
        .zip(state.amps())
        .map(|(t, s)| t.conj() * s)
        .collect();
    let overlap = |phi: f64| -> f64 {
        terms
            .iter()
            .enumerate()
            .map(|(n, c)| c * C64::from_polar(1.0, n as f64 * phi))
            .sum::<C64>()
            .norm_sqr()
    };
    let samples = 720;
    let step = 2.0 * PI / samples as f64;
    let (mut best_phi, mut best) = (0.0, overlap(0.0));
    for k in 1..samples {
        let phi = k as f64 * step;
        let f = overlap(phi);
        if f > best {
            best = f;
            best_phi = phi;
        }
    }
    // golden-section refinement inside the bracketing cell
    let (mut lo, mut hi) = (best_phi - step, best_phi + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if overlap(a) > overlap(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let phi = 0.5 * (lo + hi);
    let f = overlap(phi);
    if f > best {
        best = f;
        best_phi = phi;
    }
    Ok((best, best_phi.rem_euclid(2.0 * PI)))
}

/// `W(x + ip)` on a rectangular grid; `values[i][j]` belongs to `(xs[i], ps[j])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    fn evaluate(xs: &[f64], ps: &[f64], f: impl Fn(C64) -> f64 + Sync) -> Self {
        let values = xs
            .par_iter()
            .map(|&x| ps.iter().map(|&p| f(C64::new(x, p))).collect())
            .collect();
        Self {
            xs: xs.to_vec(),
            ps: ps.to_vec(),
            values,
        }
    }

    pub fn max_abs_difference(&self, other: &WignerGrid) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann sum of `W` over the grid (uniform spacing assumed).
    pub fn integral(&self) -> f64 {
        let dx = spacing(&self.xs);
        let dp = spacing(&self.ps);
        self.values.iter().flatten().sum::<f64>() * dx * dp
    }

    /// `(x, p, W)` rows in x-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.xs.iter().enumerate().flat_map(move |(i, &x)| {
            self.ps
                .iter()
                .enumerate()
                .map(move |(j, &p)| (x, p, self.values[i][j]))
        })
    }
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        1.0
    } else {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Fills `d[n][m] = ⟨n|D(γ)|m⟩` for `n, m ≤ dim − 1`.
///
/// Column 0 is the coherent state; `⟨n|D|m⟩ = (√n ⟨n−1|D|m−1⟩ − γ* ⟨n|D|m−1⟩)/√m`
/// follows from `D a† = (a† − γ*) D`.
fn displacement_elements(gamma: C64, dim: usize, d: &mut [C64]) {
    let idx = |n: usize, m: usize| n * dim + m;
    d[idx(0, 0)] = C64::new((-gamma.norm_sqr() / 2.0).exp(), 0.0);
    for n in 1..dim {
        d[idx(n, 0)] = d[idx(n - 1, 0)] * gamma / (n as f64).sqrt();
    }
    for m in 1..dim {
        let inv = 1.0 / (m as f64).sqrt();
        d[idx(0, m)] = -gamma.conj() * d[idx(0, m - 1)] * inv;
        for n in 1..dim {
            d[idx(n, m)] =
                ((n as f64).sqrt() * d[idx(n - 1, m - 1)] - gamma.conj() * d[idx(n, m - 1)]) * inv;
        }
    }
}

/// Mass on the top levels that signals the state is not contained in the
/// truncated space.
const EDGE_LEVELS: usize = 3;
const EDGE_MASS_TOL: f64 = 1e-8;

/// `W(β) = (2/π) Tr[ρ D(β) Π D†(β)]` using `D(β)ΠD†(β) = D(2β)Π`.
pub fn wigner_numeric(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    let dim = rho.dim();
    let diag = rho.diagonal();
    let edge: f64 = diag[dim.saturating_sub(EDGE_LEVELS)..].iter().sum();
    if dim > EDGE_LEVELS + 1 && edge > EDGE_MASS_TOL {
        return Err(Error::Truncation {
            cutoff: rho.cutoff(),
            tail: edge,
            tolerance: EDGE_MASS_TOL,
        });
    }
    let r = rho.elements();
    Ok(WignerGrid::evaluate(xs, ps, |beta| {
        let mut d = vec![C64::new(0.0, 0.0); dim * dim];
        displacement_elements(2.0 * beta, dim, &mut d);
        // Tr[ρ D(2β) Π] = Σ_{m,n} ρ_{mn} (−1)^m ⟨n|D(2β)|m⟩
        let mut acc = 0.0;
        for m in 0..dim {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut row = C64::new(0.0, 0.0);
            for n in 0..dim {
                row += r[(m, n)] * d[n * dim + m];
            }
            acc += sign * row.re;
        }
        FRAC_2_PI * acc
    }))
}

/// Two-variable Hermite polynomials `H_{u,v}(x, y)` for `u ≤ max_u, v ≤ max_v`,
/// generating function `e^{xs + yt − st}`.
///
/// `H_{0,v} = y^v`, `H_{u,v} = x H_{u−1,v} − v H_{u−1,v−1}`.
pub fn hermite2(x: C64, y: C64, max_u: usize, max_v: usize) -> Vec<Vec<C64>> {
    let mut h = vec![vec![C64::new(0.0, 0.0); max_v + 1]; max_u + 1];
    let mut yp = C64::new(1.0, 0.0);
    for v in 0..=max_v {
        h[0][v] = yp;
        yp *= y;
    }
    for u in 1..=max_u {
        for v in 0..=max_v {
            let mut val = x * h[u - 1][v];
            if v > 0 {
                val -= v as f64 * h[u - 1][v - 1];
            }
            h[u][v] = val;
        }
    }
    h
}

/// Wigner function of `D(b) Σ_p A_p |p⟩` as a finite Hermite series.
///
/// With `C = b − 2β`:
///
/// ```text
/// W(β) = (2/π) e^{−2|β−b|²} Σ_{p,q} A_p A_q* (−1)^{p+q} / √(p! q!)
///        Σ_{u≤p} Σ_{v≤q} C(p,u) C(q,v) (b*)^{p−u} b^{q−v} H_{u,v}(C*, C)
/// ```
pub fn wigner_closed_form(q: &QuditState, xs: &[f64], ps: &[f64]) -> WignerGrid {
    let l = q.l();
    let b = q.displacement;
    let a = &q.amplitudes;
    let inv_sqrt_fact: Vec<f64> = (0..=l).map(|p| 1.0 / sqrt_factorial(p)).collect();
    let pow = |z: C64, n: usize| (0..n).fold(C64::new(1.0, 0.0), |acc, _| acc * z);
    let bc_pows: Vec<C64> = (0..=l).map(|k| pow(b.conj(), k)).collect();
    let b_pows: Vec<C64> = (0..=l).map(|k| pow(b, k)).collect();
    WignerGrid::evaluate(xs, ps, |beta| {
        let c = b - 2.0 * beta;
        let h = hermite2(c.conj(), c, l, l);
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..=l {
            for qq in 0..=l {
                let mut inner = C64::new(0.0, 0.0);
                for u in 0..=p {
                    for v in 0..=qq {
                        inner += binomial(p, u) * binomial(qq, v) * bc_pows[p - u] * b_pows[qq - v] * h[u][v];
                    }
                }
                let sign = if (p + qq) % 2 == 0 { 1.0 } else { -1.0 };
                acc += a[p] * a[qq].conj() * sign * inv_sqrt_fact[p] * inv_sqrt_fact[qq] * inner;
            }
        }
        FRAC_2_PI * (-2.0 * (beta - b).norm_sqr()).exp() * acc.re
    })
}

/// Closed-form and numeric Wigner grids of the same qudit with their largest
/// pointwise difference; a difference above [`WIGNER_AGREEMENT_TOL`] is an error.
#[derive(Clone, Debug, Serialize)]
pub struct WignerComparison {
    pub closed_form: WignerGrid,
    pub numeric: WignerGrid,
    pub max_abs_difference: f64,
}

pub fn wigner_cross_validate(
    q: &QuditState,
    xs: &[f64],
    ps: &[f64],
    cutoff: usize,
) -> Result<WignerComparison> {
    let state = crate::cascade::qudit_to_fock(q, cutoff)?;
    let numeric = wigner_numeric(&state.to_density(), xs, ps)?;
    let closed_form = wigner_closed_form(q, xs, ps);
    let max_abs_difference = closed_form.max_abs_difference(&numeric);
    if !(max_abs_difference < WIGNER_AGREEMENT_TOL) {
        return Err(Error::ConventionMismatch {
            max_diff: max_abs_difference,
        });
    }
    Ok(WignerComparison {
        closed_form,
        numeric,
        max_abs_difference,
    })
}

/// `⟨a†^t a^s⟩` of the displaced qudit. Amplitudes with negative or
/// out-of-range index count as zero.
pub fn moments(q: &QuditState, t: usize, s: usize) -> C64 {
    let l = q.l() as isize;
    let a = &q.amplitudes;
    let b = q.displacement;
    let pow = |z: C64, n: usize| (0..n).fold(C64::new(1.0, 0.0), |acc, _| acc * z);
    let mut total = C64::new(0.0, 0.0);
    for u in 0..=t {
        for v in 0..=s {
            // ⟨a†^u a^v⟩ of the undisplaced qudit
            let mut inner = C64::new(0.0, 0.0);
            for p in v..=(l.max(0) as usize) {
                let pp = p as isize - v as isize + u as isize;
                if pp < 0 || pp > l {
                    continue;
                }
                let pp = pp as usize;
                let w = sqrt_factorial(p) * sqrt_factorial(pp) / (sqrt_factorial(p - v).powi(2));
                inner += a[p] * a[pp].conj() * w;
            }
            total += binomial(t, u) * binomial(s, v) * pow(b.conj(), t - u) * pow(b, s - v) * inner;
        }
    }
    total
}

fn lower(v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for n in 1..v.len() {
        out[n - 1] = v[n] * (n as f64).sqrt();
    }
    out
}

/// `⟨ψ|a†^t a^s|ψ⟩` evaluated directly on a Fock vector.
pub fn moments_numeric(state: &FockVector, t: usize, s: usize) -> C64 {
    let mut left = state.amps().to_vec();
    let mut right = state.amps().to_vec();
    for _ in 0..t {
        left = lower(&left);
    }
    for _ in 0..s {
        right = lower(&right);
    }
    left.iter().zip(&right).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨a†^t a^s⟩` for `t, s ≤ order`; `values[t][s]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTable {
    pub order: usize,
    pub values: Vec<Vec<C64>>,
}

impl MomentTable {
    pub fn get(&self, t: usize, s: usize) -> C64 {
        self.values[t][s]
    }
}

pub fn moment_table(q: &QuditState, order: usize) -> MomentTable {
    let values = (0..=order)
        .map(|t| (0..=order).map(|s| moments(q, t, s)).collect())
        .collect();
    MomentTable { order, values }
}

/// Quadrature statistics with `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quadratures {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    /// Smallest variance over all rotated quadratures `X cos φ + P sin φ`.
    pub var_min_rotated: f64,
    /// `min(var_x, var_p) < 1/2`, with a `1e-12` rounding margin.
    pub squeezed: bool,
    /// `10 log10(0.5 / min(var_x, var_p))`; positive when squeezed.
    pub squeezing_db: f64,
}

impl Quadratures {
    pub fn min_variance(&self) -> f64 {
        self.var_x.min(self.var_p)
    }

    fn from_moments(a: C64, a2: C64, n: f64) -> Self {
        let mean_x = std::f64::consts::SQRT_2 * a.re;
        let mean_p = std::f64::consts::SQRT_2 * a.im;
        let var_x = 0.5 * (2.0 * a2.re + 2.0 * n + 1.0) - mean_x * mean_x;
        let var_p = 0.5 * (-2.0 * a2.re + 2.0 * n + 1.0) - mean_p * mean_p;
        // cov(X, P) symmetrized: Im⟨a²⟩ − 2 Re⟨a⟩ Im⟨a⟩
        let cov = a2.im - mean_x * mean_p;
        let half_sum = 0.5 * (var_x + var_p);
        let radius = (0.25 * (var_x - var_p).powi(2) + cov * cov).sqrt();
        let min = var_x.min(var_p);
        Self {
            mean_x,
            mean_p,
            var_x,
            var_p,
            var_min_rotated: half_sum - radius,
            squeezed: min < 0.5 - 1e-12,
            squeezing_db: 10.0 * (0.5 / min).log10(),
        }
    }
}

/// Quadrature variances of a displaced qudit from its moments.
pub fn quadrature_variances(q: &QuditState) -> Quadratures {
    Quadratures::from_moments(moments(q, 0, 1), moments(q, 0, 2), moments(q, 1, 1).re)
}

/// Same statistics computed directly on a Fock vector.
pub fn quadrature_variances_fock(state: &FockVector) -> Quadratures {
    Quadratures::from_moments(
        moments_numeric(state, 0, 1),
        moments_numeric(state, 0, 2),
        moments_numeric(state, 1, 1).re,
    )
}
