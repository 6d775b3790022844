//! Ground-state solvers: Lanczos with full reorthogonalization plus a dense
//! eigensolver fallback for small dimensions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{BasisConvention, HamiltonianMatrix};

/// Krylov depth limit; robustness over speed at desk scale.
const MAX_KRYLOV: usize = 300;
/// Restarts on Krylov breakdown before giving up.
const MAX_RESTARTS: usize = 3;
/// Two lowest Ritz values closer than this (relative to the operator norm
/// estimate) flag a degenerate ground space.
const DEGENERACY_REL_GAP: f64 = 1e-8;

/// A normalized state over the 2^N occupation basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    basis: BasisConvention,
}

impl StateVector {
    /// Wrap amplitudes, checking normalization to 1e-12.
    pub fn new(amplitudes: Vec<Complex64>, basis: BasisConvention) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "state has {} amplitudes, basis dimension is {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "state not normalized: sum |c|^2 = {norm2}"
            )));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Normalize and wrap; rejects the zero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>, basis: BasisConvention) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        for c in &mut amplitudes {
            *c /= norm;
        }
        Self::new(amplitudes, basis)
    }

    /// The all-ground product state |gg...g⟩.
    pub fn all_ground(basis: BasisConvention) -> Self {
        let mut amplitudes = vec![Complex64::default(); basis.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, basis }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> BasisConvention {
        self.basis
    }

    pub fn n_atoms(&self) -> usize {
        self.basis.n_atoms()
    }

    /// |⟨self|other⟩|^2.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Lowest eigenpair of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ground-state energy, rad/us.
    pub energy: f64,
    pub state: StateVector,
    /// ||H v - E v||.
    pub residual: f64,
    /// Set when the two lowest Ritz values are closer than 1e-8 * ||H||;
    /// entropies of a degenerate ground space are ill-defined.
    pub degenerate: bool,
}

/// Hermitian operator given by its action on a vector.
pub trait HermitianOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

impl HermitianOp for HamiltonianMatrix {
    fn dim(&self) -> usize {
        HamiltonianMatrix::dim(self)
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        HamiltonianMatrix::apply(self, x, y)
    }
}

/// Ground state of a built Hamiltonian.
///
/// The global phase is fixed so the largest-magnitude amplitude is real and
/// positive; results are deterministic given `seed`.
pub fn ground_state(h: &HamiltonianMatrix, tol: f64, seed: u64) -> Result<EigenResult> {
    let (energy, mut amplitudes, residual, gap) = lanczos_raw(h, tol, MAX_KRYLOV, seed)?;
    fix_phase(&mut amplitudes);
    let state = StateVector::normalized(amplitudes, h.basis())?;
    Ok(EigenResult {
        energy,
        state,
        residual,
        degenerate: gap < DEGENERACY_REL_GAP * h.norm_bound().max(1.0),
    })
}

/// Lowest eigenpair of an arbitrary Hermitian action (basis convention is the
/// caller's; the returned state uses a synthetic convention of matching size
/// only when `dim` is a power of two â€” use `lanczos_lowest_vec` otherwise).
pub fn lanczos_lowest(
    op: &dyn HermitianOp,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, Vec<Complex64>, f64)> {
    let (e, mut v, r, _) = lanczos_raw(op, tol, max_iter, seed)?;
    fix_phase(&mut v);
    Ok((e, v, r))
}

/// Core Lanczos iteration with full reorthogonalization.
/// Returns (energy, vector, residual, gap to the second Ritz value).
fn lanczos_raw(
    op: &dyn HermitianOp,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, Vec<Complex64>, f64, f64)> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::invalid("operator dimension is zero"));
    }
    if dim == 1 {
        let x = [Complex64::new(1.0, 0.0)];
        let mut y = [Complex64::default()];
        op.apply(&x, &mut y);
        return Ok((y[0].re, vec![Complex64::new(1.0, 0.0)], 0.0, f64::INFINITY));
    }

    let max_iter = max_iter.min(dim).max(2);
    let mut best: Option<(f64, Vec<Complex64>, f64, f64)> = None;

    for restart in 0..MAX_RESTARTS {
        // first pass starts random; later passes warm-restart from the best
        // Ritz vector so each Krylov space refines the previous one
        let v0: Vec<Complex64> = match &best {
            Some((_, v, _, _)) => v.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
                (0..dim)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            }
        };
        match lanczos_run(op, v0, tol, max_iter)? {
            LanczosOutcome::Converged(e, v, r, gap) | LanczosOutcome::Exhausted(e, v, r, gap) => {
                let converged = r <= tol;
                if best.as_ref().map_or(true, |(_, _, br, _)| r < *br) {
                    best = Some((e, v, r, gap));
                }
                if converged {
                    return Ok(best.unwrap());
                }
            }
        }
    }
    let (_, _, best_residual, _) = best.as_ref().unwrap();
    Err(Error::Convergence {
        best_residual: *best_residual,
        tol,
        iterations: max_iter * MAX_RESTARTS,
    })
}

enum LanczosOutcome {
    Converged(f64, Vec<Complex64>, f64, f64),
    Exhausted(f64, Vec<Complex64>, f64, f64),
}

fn lanczos_run(
    op: &dyn HermitianOp,
    v0: Vec<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<LanczosOutcome> {
    let dim = op.dim();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v = v0;
    normalize(&mut v)?;
    basis.push(v.clone());

    let mut w = vec![Complex64::default(); dim];
    let mut result: Option<(f64, Vec<Complex64>, f64, f64)> = None;

    for it in 0..max_iter {
        op.apply(&basis[it], &mut w);
        let alpha = dot(&basis[it], &w).re;
        alphas.push(alpha);

        // w -= alpha v_it + beta v_{it-1}, then full reorthogonalization
        for (wi, vi) in w.iter_mut().zip(&basis[it]) {
            *wi -= alpha * vi;
        }
        if it > 0 {
            let b = betas[it - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[it - 1]) {
                *wi -= b * vi;
            }
        }
        for vb in &basis {
            let c = dot(vb, &w);
            for (wi, vi) in w.iter_mut().zip(vb) {
                *wi -= c * vi;
            }
        }

        // check the current Ritz pair every few steps and at the end
        let check = it + 1 == max_iter || (it >= 10 && (it + 1) % 5 == 0) || it + 1 == dim;
        if check {
            let (theta, ritz, gap) = lowest_ritz(&alphas, &betas, &basis);
            let mut hy = vec![Complex64::default(); dim];
            op.apply(&ritz, &mut hy);
            let res = hy
                .iter()
                .zip(&ritz)
                .map(|(h, y)| (h - theta * y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            result = Some((theta, ritz, res, gap));
            if res <= tol {
                let (e, v, r, g) = result.unwrap();
                return Ok(LanczosOutcome::Converged(e, v, r, g));
            }
        }

        let beta: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if beta < 1e-14 || it + 1 == dim {
            // invariant subspace found: the Ritz pair is (numerically) exact
            let (theta, ritz, mut gap) = lowest_ritz(&alphas, &betas, &basis);
            if basis.len() < dim {
                // a random start vector only breaks down early when eigenvalues
                // repeat, so multiplicity of the lowest cannot be excluded
                gap = 0.0;
            }
            let mut hy = vec![Complex64::default(); dim];
            op.apply(&ritz, &mut hy);
            let res = hy
                .iter()
                .zip(&ritz)
                .map(|(h, y)| (h - theta * y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            return Ok(LanczosOutcome::Converged(theta, ritz, res, gap));
        }
        betas.push(beta);
        let next: Vec<Complex64> = w.iter().map(|c| c / beta).collect();
        basis.push(next);
    }

    let (e, v, r, g) = result.expect("at least one Ritz check ran");
    Ok(LanczosOutcome::Exhausted(e, v, r, g))
}

/// Lowest Ritz pair of the current tridiagonal projection.
/// Returns (value, vector in the original space, gap to the next Ritz value).
fn lowest_ritz(alphas: &[f64], betas: &[f64], basis: &[Vec<Complex64>]) -> (f64, Vec<Complex64>, f64) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lo = order[0];
    let theta = eig.eigenvalues[lo];
    let gap = if k > 1 {
        eig.eigenvalues[order[1]] - theta
    } else {
        f64::INFINITY
    };

    let dim = basis[0].len();
    let mut ritz = vec![Complex64::default(); dim];
    let col: DVector<f64> = eig.eigenvectors.column(lo).into();
    for (j, vb) in basis.iter().enumerate().take(k) {
        let c = col[j];
        for (ri, vi) in ritz.iter_mut().zip(vb) {
            *ri += c * vi;
        }
    }
    // tiny renormalization guard
    let n: f64 = ritz.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut ritz {
        *c /= n;
    }
    (theta, ritz, gap)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) -> Result<()> {
    let n: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::invalid("zero start vector"));
    }
    for c in v.iter_mut() {
        *c /= n;
    }
    Ok(())
}

/// Rotate the global phase so the largest-magnitude amplitude is real positive.
fn fix_phase(v: &mut [Complex64]) {
    let (mut best, mut mag) = (0usize, 0.0f64);
    for (i, c) in v.iter().enumerate() {
        let m = c.norm_sqr();
        if m > mag {
            mag = m;
            best = i;
        }
    }
    let phase = v[best] / v[best].norm();
    let rot = phase.conj();
    for c in v.iter_mut() {
        *c *= rot;
    }
}

/// Ground state by full dense diagonalization. Slower but free of Krylov
/// convergence issues; the fallback when interactions span many decades.
pub fn dense_ground_state(h: &HamiltonianMatrix) -> Result<EigenResult> {
    let m = h.to_dense()?;
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lo = order[0];
    let energy = eig.eigenvalues[lo];
    let gap = if k > 1 {
        eig.eigenvalues[order[1]] - energy
    } else {
        f64::INFINITY
    };
    let mut v: Vec<Complex64> = eig.eigenvectors.column(lo).iter().copied().collect();
    fix_phase(&mut v);

    let mut hv = vec![Complex64::default(); v.len()];
    h.apply(&v, &mut hv);
    let residual = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - energy * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(EigenResult {
        energy,
        state: StateVector::normalized(v, h.basis())?,
        residual,
        degenerate: gap < DEGENERACY_REL_GAP * h.norm_bound().max(1.0),
    })
}

/// Dense lowest eigenpair, used as an independent oracle in tests and as the
/// fallback for small systems.
pub fn dense_lowest(m: &DMatrix<Complex64>) -> (f64, Vec<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let k = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lo = order[0];
    let mut v: Vec<Complex64> = eig.eigenvectors.column(lo).iter().copied().collect();
    fix_phase(&mut v);
    (eig.eigenvalues[lo], v)
}
