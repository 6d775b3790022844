//! The Rydberg Hamiltonian over the 2^N occupation basis.
//!
//! H = (Ω/2) Σ_i (e^{iφ}|g_i⟩⟨r_i| + e^{-iφ}|r_i⟩⟨g_i|) − Δ Σ_i n_i + Σ_{i<j} V_ij n_i n_j
//!
//! with van der Waals interactions V_ij = Ω R_b^6 / r_ij^6. At φ = 0 the
//! drive term reduces to the plain bit-flip form. All pair terms are kept;
//! the 1/r^6 tail is not cut off.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Geometry;

/// Dense storage cap: 2^14 x 2^14 complex.
pub const DENSE_ATOM_CAP: usize = 14;
/// Matrix-free sparse cap.
pub const SPARSE_ATOM_CAP: usize = 24;

/// Drive and interaction parameters.
///
/// Units: angular frequencies in rad/us, lengths in um. The interaction
/// coefficient C6 = omega * r_b^6 is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Rabi frequency Ω, rad/us.
    pub omega: f64,
    /// Detuning Δ, rad/us.
    pub delta: f64,
    /// Drive phase φ, rad.
    pub phi: f64,
    /// Blockade radius R_b, um.
    pub r_b: f64,
}

impl DriveParams {
    pub fn new(omega: f64, delta: f64, phi: f64, r_b: f64) -> Result<Self> {
        if !(omega >= 0.0) {
            return Err(Error::invalid(format!("omega must be >= 0, got {omega}")));
        }
        if !(r_b > 0.0) {
            return Err(Error::invalid(format!("r_b must be > 0, got {r_b}")));
        }
        Ok(Self {
            omega,
            delta,
            phi,
            r_b,
        })
    }

    /// Default working point: Ω = 5π rad/us, Δ = 17.5π rad/us,
    /// φ = 0, R_b = 8.375 um.
    pub fn working_point() -> Self {
        Self {
            omega: 5.0 * std::f64::consts::PI,
            delta: 17.5 * std::f64::consts::PI,
            phi: 0.0,
            r_b: 8.375,
        }
    }

    /// Interaction coefficient C6 = Ω R_b^6, rad um^6 / us.
    pub fn c6(&self) -> f64 {
        self.omega * self.r_b.powi(6)
    }
}

/// Pair interaction V = Ω (R_b / r)^6 at distance `r_ij`.
pub fn interaction(r_ij: f64, params: &DriveParams) -> Result<f64> {
    if !(r_ij > 0.0) {
        return Err(Error::invalid(format!(
            "interaction distance must be > 0, got {r_ij}"
        )));
    }
    Ok(params.omega * (params.r_b / r_ij).powi(6))
}

/// Fixed mapping between bitstrings, atom labels and state indices.
///
/// Character `k` of a bitstring names atom `k`; 'g' is 0 (ground), 'r' is 1
/// (Rydberg); the state index is Σ_k n_k 2^(N-1-k), i.e. atom 0 is the most
/// significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisConvention {
    n_atoms: usize,
}

impl BasisConvention {
    pub fn new(n_atoms: usize) -> Self {
        Self { n_atoms }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1usize << self.n_atoms
    }

    /// Occupation of atom `k` in basis state `index`.
    pub fn occupation(&self, index: usize, atom: usize) -> bool {
        (index >> (self.n_atoms - 1 - atom)) & 1 == 1
    }

    /// Total Rydberg occupation of a basis state.
    pub fn total_occupation(&self, index: usize) -> u32 {
        (index as u64).count_ones()
    }

    /// Render a state index as a g/r string.
    pub fn index_to_string(&self, index: usize) -> String {
        (0..self.n_atoms)
            .map(|k| if self.occupation(index, k) { 'r' } else { 'g' })
            .collect()
    }

    /// Parse a g/r or 0/1 string into a state index.
    pub fn string_to_index(&self, s: &str) -> Result<usize> {
        if s.len() != self.n_atoms {
            return Err(Error::invalid(format!(
                "bitstring '{s}' has {} symbols, expected {}",
                s.len(),
                self.n_atoms
            )));
        }
        let mut index = 0usize;
        for (k, c) in s.chars().enumerate() {
            let bit = match c {
                'g' | '0' => 0,
                'r' | '1' => 1,
                other => {
                    return Err(Error::invalid(format!(
                        "bitstring '{s}' has invalid symbol '{other}' at position {k}"
                    )))
                }
            };
            index = (index << 1) | bit;
        }
        Ok(index)
    }
}

/// How the matrix is held in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Dense,
    Sparse,
}

/// A built Rydberg Hamiltonian: diagonal detuning/interaction part plus
/// Ω/2 single-bit-flip couplings.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    basis: BasisConvention,
    omega: f64,
    phi: f64,
    /// Full diagonal: −Δ Σ n_i + Σ_{i<j} V_ij n_i n_j per basis state.
    diagonal: Vec<f64>,
    dense: Option<DMatrix<Complex64>>,
}

/// Build the Hamiltonian of a geometry under the given drive.
pub fn build(geometry: &Geometry, params: &DriveParams, storage: Storage) -> Result<HamiltonianMatrix> {
    let n = geometry.n_atoms();
    let cap = match storage {
        Storage::Dense => DENSE_ATOM_CAP,
        Storage::Sparse => SPARSE_ATOM_CAP,
    };
    if n > cap {
        return Err(Error::ResourceLimit {
            what: "atom count",
            requested: n,
            cap,
        });
    }
    let basis = BasisConvention::new(n);
    let dim = basis.dim();

    // Pair energies, then the diagonal in one pass over basis states.
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            v[i * n + j] = interaction(geometry.distance(i, j), params)?;
        }
    }
    let mut diagonal = vec![0.0f64; dim];
    for (idx, d) in diagonal.iter_mut().enumerate() {
        let mut e = -params.delta * basis.total_occupation(idx) as f64;
        for i in 0..n {
            if basis.occupation(idx, i) {
                for j in (i + 1)..n {
                    if basis.occupation(idx, j) {
                        e += v[i * n + j];
                    }
                }
            }
        }
        *d = e;
    }

    let mut h = HamiltonianMatrix {
        basis,
        omega: params.omega,
        phi: params.phi,
        diagonal,
        dense: None,
    };
    if storage == Storage::Dense {
        h.dense = Some(h.materialize());
    }
    Ok(h)
}

impl HamiltonianMatrix {
    pub fn basis(&self) -> BasisConvention {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn storage(&self) -> Storage {
        if self.dense.is_some() {
            Storage::Dense
        } else {
            Storage::Sparse
        }
    }

    /// y = H x. Reentrant; no internal state.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        match &self.dense {
            Some(m) => {
                let xv = nalgebra::DVector::from_column_slice(x);
                let yv = m * xv;
                y.copy_from_slice(yv.as_slice());
            }
            None => apply_parts(
                &self.diagonal,
                self.basis.n_atoms(),
                self.omega,
                self.phi,
                x,
                y,
            ),
        }
    }

    /// The matrix as a dense array (subject to the dense cap).
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if let Some(m) = &self.dense {
            return Ok(m.clone());
        }
        if self.basis.n_atoms() > DENSE_ATOM_CAP {
            return Err(Error::ResourceLimit {
                what: "atom count",
                requested: self.basis.n_atoms(),
                cap: DENSE_ATOM_CAP,
            });
        }
        Ok(self.materialize())
    }

    fn materialize(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let n = self.basis.n_atoms();
        let mut m = DMatrix::zeros(dim, dim);
        for idx in 0..dim {
            m[(idx, idx)] = Complex64::new(self.diagonal[idx], 0.0);
        }
        // ⟨g|H|r⟩ = Ω/2 e^{iφ}: column = state with the bit set.
        let half = 0.5 * self.omega;
        let up = Complex64::from_polar(half, self.phi);
        for col in 0..dim {
            for k in 0..n {
                let bit = 1usize << (n - 1 - k);
                let row = col ^ bit;
                m[(row, col)] += if col & bit != 0 { up } else { up.conj() };
            }
        }
        m
    }

    /// An infinity-norm upper bound: max |diag| + N Ω/2.
    pub fn norm_bound(&self) -> f64 {
        let dmax = self.diagonal.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
        dmax + self.basis.n_atoms() as f64 * self.omega * 0.5
    }
}

/// Matrix-free application of diagonal + Ω/2 e^{±iφ} bit-flip couplings.
/// Shared with the time-dependent path in `dynamics`.
pub(crate) fn apply_parts(
    diagonal: &[f64],
    n_atoms: usize,
    omega: f64,
    phi: f64,
    x: &[Complex64],
    y: &mut [Complex64],
) {
    let dim = diagonal.len();
    debug_assert_eq!(x.len(), dim);
    debug_assert_eq!(y.len(), dim);
    for idx in 0..dim {
        y[idx] = x[idx] * diagonal[idx];
    }
    if omega == 0.0 {
        return;
    }
    let half = 0.5 * omega;
    let up = Complex64::from_polar(half, phi); // ⟨g|H|r⟩
    let down = up.conj();
    for idx in 0..dim {
        let xi = x[idx];
        for k in 0..n_atoms {
            let bit = 1usize << (n_atoms - 1 - k);
            let other = idx ^ bit;
            // amplitude flows from idx into the flipped state
            y[other] += if idx & bit != 0 { up * xi } else { down * xi };
        }
    }
}
