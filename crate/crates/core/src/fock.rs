//! Truncated Fock-space linear algebra.
//!
//! A single mode is truncated at a photon-number cutoff `N_max`, so a pure
//! state is a vector of `N_max + 1` complex amplitudes. Two-mode states use
//! the same cutoff for both modes. The beam splitter conserves total photon
//! number, so its unitary is stored as one dense block per total photon
//! number and is exact on every block that fits inside the cutoff.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest tail mass tolerated when truncating a coherent state.
pub const COHERENT_TAIL_TOL: f64 = 1e-12;
/// Largest tail mass tolerated when a displacement pushes weight past the cutoff.
pub const DISPLACEMENT_TAIL_TOL: f64 = 1e-10;
/// Heralding probabilities below this are treated as an impossible outcome.
pub const MIN_HERALD_PROBABILITY: f64 = 1e-300;

/// Default photon-number cutoff for a field of amplitude `|alpha|`.
///
/// `ceil(|α|² + 10|α| + 20)`, never below 32. Keeps the coherent tail below
/// `1e-12` over the whole `|α|² ≤ 25` optimizer box.
pub fn policy_cutoff(alpha_abs: f64) -> usize {
    let a = alpha_abs.abs();
    let n = (a * a + 10.0 * a + 20.0).ceil() as usize;
    n.max(32)
}

/// Pure single-mode state over photon numbers `0..=cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FockVector {
    amps: Vec<C64>,
}

impl FockVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::domain("a Fock vector needs cutoff >= 1"));
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::number(0, cutoff.max(1)).expect("vacuum fits in any cutoff")
    }

    /// The number state `|n⟩`.
    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::domain(format!(
                "number state |{n}> does not fit below cutoff {cutoff}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff.max(1) + 1];
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            amps: self.amps.iter().map(|a| a / norm).collect(),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::DimensionMismatch {
                left: self.amps.len(),
                right: other.amps.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Zero-pads or truncates to a new cutoff. Truncation drops amplitudes.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(cutoff.max(1) + 1, C64::new(0.0, 0.0));
        Self { amps }
    }

    /// Probability mass on photon numbers strictly above `n`.
    pub fn tail_mass(&self, n: usize) -> f64 {
        self.amps.iter().skip(n + 1).map(|a| a.norm_sqr()).sum()
    }

    pub fn pnd(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum::<f64>()
            / self.norm_sqr()
    }

    /// Multiplies every amplitude by `e^{iφ}` so the largest-modulus amplitude
    /// is real and positive. Used for phase-blind comparisons in tests and reports.
    pub fn with_canonical_phase(&self) -> Self {
        let pivot = self
            .amps
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(C64::new(1.0, 0.0));
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        let phase = pivot.conj() / pivot.norm();
        Self {
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix {
            elements: &v * v.adjoint(),
        }
    }
}

/// Photon-number distribution `|⟨n|ψ⟩|²`.
pub fn fock_projection_pnd(state: &FockVector) -> Vec<f64> {
    state.pnd()
}

/// Truncated coherent state `|α⟩`, renormalized after truncation.
///
/// Fails when the discarded tail mass exceeds [`COHERENT_TAIL_TOL`].
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<FockVector> {
    if cutoff < 1 {
        return Err(Error::domain("cutoff must be >= 1"));
    }
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(term);
    for n in 1..=cutoff {
        term = term * alpha / (n as f64).sqrt();
        amps.push(term);
    }
    // continue the Poisson series past the cutoff to measure the tail
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    let mut t = term.norm_sqr();
    loop {
        t *= alpha.norm_sqr() / n as f64;
        tail += t;
        if t < 1e-30 * tail.max(1e-300) || t == 0.0 || n > cutoff + 100_000 {
            break;
        }
        n += 1;
    }
    if tail >= COHERENT_TAIL_TOL {
        return Err(Error::Truncation {
            cutoff,
            tail,
            tolerance: COHERENT_TAIL_TOL,
        });
    }
    FockVector::new(amps)?.normalized()
}

/// Hermitian, unit-trace state over the truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(elements: DMatrix<C64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                left: elements.nrows(),
                right: elements.ncols(),
            });
        }
        if elements.nrows() < 2 {
            return Err(Error::domain("density matrix needs cutoff >= 1"));
        }
        Ok(Self { elements })
    }

    pub fn from_pure(state: &FockVector) -> Self {
        state.to_density()
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn cutoff(&self) -> usize {
        self.dim() - 1
    }

    pub fn elements(&self) -> &DMatrix<C64> {
        &self.elements
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::domain("cannot normalize a density matrix with zero trace"));
        }
        Ok(Self {
            elements: self.elements.unscale(tr),
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.elements[(i, i)].re).collect()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.elements - self.elements.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.elements + self.elements.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Eigen-decomposition `ρ = Σ λ_i |v_i⟩⟨v_i|`, keeping `λ_i > threshold`.
    pub fn pure_components(&self, threshold: f64) -> Vec<(f64, FockVector)> {
        let herm = (&self.elements + self.elements.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm);
        eig.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &lam)| lam > threshold)
            .map(|(i, &lam)| {
                let v = eig.eigenvectors.column(i).iter().copied().collect();
                (lam, FockVector { amps: v })
            })
            .collect()
    }
}

/// Two-mode pure state with amplitudes indexed by `(n_a, n_b)`, each `0..=cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    cutoff: usize,
    amps: Vec<C64>,
}

impl TwoModeState {
    pub fn zeros(cutoff: usize) -> Self {
        Self {
            cutoff,
            amps: vec![C64::new(0.0, 0.0); (cutoff + 1) * (cutoff + 1)],
        }
    }

    /// `|a⟩ ⊗ |b⟩`, embedded at the larger of the two cutoffs.
    pub fn product(a: &FockVector, b: &FockVector) -> Self {
        let cutoff = a.cutoff().max(b.cutoff());
        let mut out = Self::zeros(cutoff);
        for (na, x) in a.amps().iter().enumerate() {
            for (nb, y) in b.amps().iter().enumerate() {
                *out.amp_mut(na, nb) = x * y;
            }
        }
        out
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn index(&self, na: usize, nb: usize) -> usize {
        na * (self.cutoff + 1) + nb
    }

    pub fn amp(&self, na: usize, nb: usize) -> C64 {
        self.amps[self.index(na, nb)]
    }

    pub fn amp_mut(&mut self, na: usize, nb: usize) -> &mut C64 {
        let i = self.index(na, nb);
        &mut self.amps[i]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies the beam splitter block by block.
    ///
    /// Only blocks with total photon number `<= cutoff` lie entirely inside
    /// the truncated space; support on any larger total is a truncation error.
    pub fn apply(&self, unitary: &BeamSplitterUnitary) -> Result<TwoModeState> {
        let n_max = self.cutoff;
        let leaked: f64 = (0..=n_max)
            .flat_map(|na| (0..=n_max).map(move |nb| (na, nb)))
            .filter(|(na, nb)| na + nb > n_max)
            .map(|(na, nb)| self.amp(na, nb).norm_sqr())
            .sum();
        if leaked > 0.0 {
            return Err(Error::Truncation {
                cutoff: n_max,
                tail: leaked,
                tolerance: 0.0,
            });
        }
        if unitary.max_total() < n_max {
            return Err(Error::DimensionMismatch {
                left: unitary.max_total(),
                right: n_max,
            });
        }
        let mut out = Self::zeros(n_max);
        let mut column = Vec::with_capacity(n_max + 1);
        for total in 0..=n_max {
            column.clear();
            column.extend((0..=total).map(|k| self.amp(k, total - k)));
            if column.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let block = unitary.block(total);
            for j in 0..=total {
                let mut acc = C64::new(0.0, 0.0);
                for (k, x) in column.iter().enumerate() {
                    acc += block[(j, k)] * x;
                }
                *out.amp_mut(j, total - j) = acc;
            }
        }
        Ok(out)
    }

    /// Unnormalized mode-a state `⟨k|_b |ψ⟩`.
    pub fn project_b(&self, k: usize) -> Result<FockVector> {
        if k > self.cutoff {
            return Err(Error::domain(format!(
                "projection onto |{k}> beyond cutoff {}",
                self.cutoff
            )));
        }
        FockVector::new((0..=self.cutoff).map(|na| self.amp(na, k)).collect())
    }
}

/// Beam splitter `exp{θ(a†b − ab†)}` with `θ = arccos √R`, stored as one real
/// orthogonal block per total photon number `n = 0..=max_total`.
///
/// Block `n` is indexed by the photon number in mode `a`; entry `(j, k)` is
/// `⟨j, n−j| U |k, n−k⟩`.
#[derive(Clone, Debug)]
pub struct BeamSplitterUnitary {
    reflectivity: f64,
    theta: f64,
    blocks: Vec<DMatrix<f64>>,
}

impl BeamSplitterUnitary {
    /// Builds every block analytically from the mode transform
    /// `U a† U† = t a† − r b†`, `U b† U† = r a† + t b†` with `t = √R`, `r = √(1−R)`.
    ///
    /// Column `(k, m)` of block `k+m` is obtained from a column of block
    /// `k+m−1` by one rotated creation operator, so the whole family costs
    /// `O(max_total³)` and never forms large binomial sums.
    pub fn new(reflectivity: f64, max_total: usize) -> Result<Self> {
        check_reflectivity(reflectivity)?;
        let t = reflectivity.sqrt();
        let r = (1.0 - reflectivity).sqrt();
        let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(max_total + 1);
        blocks.push(DMatrix::from_element(1, 1, 1.0));
        let mut scratch = vec![0.0; max_total + 2];
        for n in 1..=max_total {
            let prev = &blocks[n - 1];
            let mut block = DMatrix::zeros(n + 1, n + 1);
            // |k,m⟩ = (√k a†|k−1,m⟩ + √m b†|k,m−1⟩)/n, with U a† U† = t a† − r b†
            // and U b† U† = r a† + t b†; weighting both parents keeps the
            // recursion from amplifying rounding error.
            let mut via_b = vec![0.0; n + 1];
            for k in 0..=n {
                let m = n - k;
                let mut col = vec![0.0; n + 1];
                if k > 0 {
                    create(prev.column(k - 1).as_slice(), t, -r, &mut scratch[..=n]);
                    let w = (k as f64).sqrt() / n as f64;
                    col.iter_mut().zip(&scratch[..=n]).for_each(|(c, v)| *c += w * v);
                }
                if m > 0 {
                    create(prev.column(k).as_slice(), r, t, &mut via_b);
                    let w = (m as f64).sqrt() / n as f64;
                    col.iter_mut().zip(&via_b).for_each(|(c, v)| *c += w * v);
                }
                block.set_column(k, &nalgebra::DVector::from_vec(col));
            }
            blocks.push(block);
        }
        Ok(Self {
            reflectivity,
            theta: t.acos(),
            blocks,
        })
    }

    /// Same unitary from the matrix exponential of `θ(a†b − ab†)` restricted
    /// to each block.
    pub fn via_exponential(reflectivity: f64, max_total: usize) -> Result<Self> {
        check_reflectivity(reflectivity)?;
        let theta = reflectivity.sqrt().acos();
        let blocks = (0..=max_total)
            .map(|n| (block_generator(n) * theta).exp())
            .collect();
        Ok(Self {
            reflectivity,
            theta,
            blocks,
        })
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// `⟨ja, jb| U |ka, kb⟩`; zero across different total photon numbers.
    pub fn element(&self, ja: usize, jb: usize, ka: usize, kb: usize) -> f64 {
        let n = ka + kb;
        if ja + jb != n || n > self.max_total() {
            return 0.0;
        }
        self.blocks[n][(ja, ka)]
    }

    /// Largest `max |UᵀU − I|` over all blocks.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let d = b.transpose() * b - DMatrix::identity(b.nrows(), b.ncols());
                d.iter().map(|x| x.abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference between two constructions.
    pub fn max_difference(&self, other: &BeamSplitterUnitary) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).iter().map(|x| x.abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// `beamsplitter_unitary(R, cutoff)`: blocks for every total `0..=cutoff`.
pub fn beamsplitter_unitary(reflectivity: f64, cutoff: usize) -> Result<BeamSplitterUnitary> {
    BeamSplitterUnitary::new(reflectivity, cutoff)
}

fn check_reflectivity(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("reflectivity {r} outside [0, 1]")));
    }
    Ok(())
}

/// Applies `x a† + y b†` to a block-`n−1` vector, writing the block-`n` result.
fn create(v: &[f64], x: f64, y: f64, out: &mut [f64]) {
    let n = v.len(); // out has n + 1 entries
    out.iter_mut().for_each(|o| *o = 0.0);
    for (j, &c) in v.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        out[j + 1] += x * ((j + 1) as f64).sqrt() * c;
        out[j] += y * ((n - j) as f64).sqrt() * c;
    }
}

/// `a†b − ab†` on the block of total photon number `n`.
fn block_generator(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n + 1, n + 1);
    for k in 0..=n {
        let m = n - k;
        if m > 0 {
            g[(k + 1, k)] += ((k + 1) as f64).sqrt() * (m as f64).sqrt();
        }
        if k > 0 {
            g[(k - 1, k)] -= (k as f64).sqrt() * ((m + 1) as f64).sqrt();
        }
    }
    g
}

/// One catalysis stage: `⟨1|_b U(R) |ψ⟩_a |1⟩_b`.
///
/// Returns the normalized conditional state and the heralding probability
/// (squared norm of the unnormalized projection).
pub fn catalysis_step(input: &FockVector, reflectivity: f64) -> Result<(FockVector, f64)> {
    let cutoff = input.cutoff();
    // one extra level so that |N_max⟩|1⟩ stays inside a complete block
    let work = cutoff + 1;
    let joint = TwoModeState::product(&input.resized(work), &FockVector::number(1, work)?);
    let unitary = BeamSplitterUnitary::new(reflectivity, work)?;
    let out = joint.apply(&unitary)?;
    let projected = out.project_b(1)?.resized(cutoff);
    let probability = projected.norm_sqr();
    if !(probability >= MIN_HERALD_PROBABILITY) {
        return Err(Error::DegeneratePostselection { probability });
    }
    Ok((projected.normalized()?, probability))
}

/// Matrix of `βa† − β*a` truncated at `cutoff`.
fn displacement_generator(beta: C64, cutoff: usize) -> DMatrix<C64> {
    let mut g = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        let s = (n as f64).sqrt();
        g[(n, n - 1)] = beta * s;
        g[(n - 1, n)] = -beta.conj() * s;
    }
    g
}

/// Dense `D(β)` as the matrix exponential of the truncated generator.
///
/// Entries near the cutoff carry truncation error; use a generous cutoff and
/// read only the low-photon corner.
pub fn displacement_operator(beta: C64, cutoff: usize) -> DMatrix<C64> {
    displacement_generator(beta, cutoff).exp()
}

/// `D(β)|ψ⟩` with the result truncated back to the input cutoff.
///
/// The exponential acts on a zero-padded working space by scaled Taylor
/// steps of the tridiagonal generator. Fails when more than
/// [`DISPLACEMENT_TAIL_TOL`] of the mass lands above the cutoff.
pub fn apply_displacement(state: &FockVector, beta: C64) -> Result<FockVector> {
    let cutoff = state.cutoff();
    if beta.norm() == 0.0 {
        return Ok(state.clone());
    }
    let b = beta.norm();
    let pad = (b * b + 10.0 * b + 20.0).ceil() as usize;
    let work = cutoff + pad;
    let mut v: Vec<C64> = state.amps().to_vec();
    v.resize(work + 1, C64::new(0.0, 0.0));

    let gen_norm = 2.0 * b * ((work + 1) as f64).sqrt();
    let steps = (gen_norm / 0.5).ceil().max(1.0) as usize;
    let step = beta / steps as f64;
    let sqrt_n: Vec<f64> = (0..=work + 1).map(|n| (n as f64).sqrt()).collect();
    let mut term = vec![C64::new(0.0, 0.0); work + 1];
    let mut next = vec![C64::new(0.0, 0.0); work + 1];
    for _ in 0..steps {
        term.copy_from_slice(&v);
        for k in 1..200 {
            // next = G term / k with G = step a† − step* a
            let inv_k = 1.0 / k as f64;
            let mut biggest = 0.0f64;
            for n in 0..=work {
                let mut acc = C64::new(0.0, 0.0);
                if n > 0 {
                    acc += step * sqrt_n[n] * term[n - 1];
                }
                if n < work {
                    acc -= step.conj() * sqrt_n[n + 1] * term[n + 1];
                }
                next[n] = acc * inv_k;
                biggest = biggest.max(next[n].norm_sqr());
            }
            std::mem::swap(&mut term, &mut next);
            for (x, t) in v.iter_mut().zip(&term) {
                *x += t;
            }
            if biggest < 1e-36 {
                break;
            }
        }
    }
    let edge: f64 = v[work.saturating_sub(4)..].iter().map(|a| a.norm_sqr()).sum();
    let tail: f64 = v[cutoff + 1..].iter().map(|a| a.norm_sqr()).sum::<f64>() + edge;
    if tail >= DISPLACEMENT_TAIL_TOL {
        return Err(Error::Truncation {
            cutoff,
            tail,
            tolerance: DISPLACEMENT_TAIL_TOL,
        });
    }
    v.truncate(cutoff + 1);
    FockVector::new(v)
}
