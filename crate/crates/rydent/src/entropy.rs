//! Entropy quantities of bitstring distributions and reduced density
//! matrices: the experimental Shannon entropies S_AB^X and S_A^X, the von
//! Neumann entanglement entropy of rho_A, their Renyi-2 analogues, and the
//! single-copy estimators 2 S_A^X - S_AB^X and 2 S_2A^X - S_2AB^X.
//!
//! Natural logarithms throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Partition;
use crate::spectra::StateVector;

/// A bitstring probability distribution over `n_atoms` atoms, stored sparsely
/// as (basis index, probability) sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    n_atoms: usize,
    entries: Vec<(usize, f64)>,
}

impl ProbabilityTable {
    /// Build from (index, probability) pairs. Entries must be non-negative
    /// and sum to 1 within 1e-9; duplicate indices are merged.
    pub fn new(n_atoms: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        let dim = 1usize << n_atoms;
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (idx, p) in entries {
            if idx >= dim {
                return Err(Error::invalid(format!(
                    "index {idx} out of range for {n_atoms} atoms"
                )));
            }
            if !(p >= 0.0) {
                return Err(Error::invalid(format!("negative probability {p} at index {idx}")));
            }
            match merged.last_mut() {
                Some((last, q)) if *last == idx => *q += p,
                _ => merged.push((idx, p)),
            }
        }
        let total: f64 = merged.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            n_atoms,
            entries: merged,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Entries sorted by basis index.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// The most probable entry.
    pub fn mode(&self) -> Option<(usize, f64)> {
        self.entries
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Measurement probabilities p_n = |c_n|^2 of a state.
pub fn probabilities(state: &StateVector) -> ProbabilityTable {
    let entries = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let p = c.norm_sqr();
            (p > 0.0).then_some((i, p))
        })
        .collect();
    ProbabilityTable {
        n_atoms: state.n_atoms(),
        entries,
    }
}

/// Shannon entropy -sum p ln p, with 0 ln 0 = 0.
pub fn shannon(p: &ProbabilityTable) -> f64 {
    -p.entries
        .iter()
        .filter(|e| e.1 > 0.0)
        .map(|e| e.1 * e.1.ln())
        .sum::<f64>()
}

/// Renyi-2 entropy of a distribution: -ln sum p^2.
pub fn renyi2_distribution(p: &ProbabilityTable) -> f64 {
    -p.entries.iter().map(|e| e.1 * e.1).sum::<f64>().ln()
}

/// Marginal distribution over subsystem A: p_{n_A} = sum_{n_B} p_{n_A n_B}.
pub fn reduce(p: &ProbabilityTable, partition: &Partition) -> Result<ProbabilityTable> {
    if partition.n_atoms() != p.n_atoms {
        return Err(Error::invalid(format!(
            "partition covers {} atoms, table has {}",
            partition.n_atoms(),
            p.n_atoms
        )));
    }
    let na = partition.a_indices().len();
    let mut acc = vec![0.0f64; 1usize << na];
    for &(idx, prob) in &p.entries {
        acc[sub_index(idx, p.n_atoms, partition.a_indices())] += prob;
    }
    let entries = acc
        .into_iter()
        .enumerate()
        .filter(|e| e.1 > 0.0)
        .collect();
    Ok(ProbabilityTable {
        n_atoms: na,
        entries,
    })
}

/// Index of the restriction of basis state `idx` to the given atoms, in the
/// given order (first listed atom is the most significant bit).
pub(crate) fn sub_index(idx: usize, n_atoms: usize, atoms: &[usize]) -> usize {
    let mut sub = 0usize;
    for &a in atoms {
        sub = (sub << 1) | ((idx >> (n_atoms - 1 - a)) & 1);
    }
    sub
}

/// Reduced density matrix of subsystem A, Hermitian and trace-1 of dimension
/// 2^|A|, in the basis restricted to A.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    n_atoms: usize,
}

impl DensityMatrix {
    /// Wrap a matrix, checking Hermiticity and unit trace (1e-6).
    pub fn new(matrix: DMatrix<Complex64>, n_atoms: usize) -> Result<Self> {
        let dim = 1usize << n_atoms;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::invalid(format!(
                "density matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = (&matrix - matrix.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm > 1e-9 {
            return Err(Error::invalid(format!("matrix not Hermitian: deviation {herm:.3e}")));
        }
        let trace: Complex64 = matrix.diagonal().iter().sum();
        if (trace.re - 1.0).abs() > 1e-6 || trace.im.abs() > 1e-9 {
            return Err(Error::invalid(format!("trace is {trace}, expected 1")));
        }
        Ok(Self { matrix, n_atoms })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Eigenvalues clamped to [0, 1], descending. Values below -1e-8 are a
    /// genuinely invalid matrix, not rounding, and are rejected.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        for v in &vals {
            if *v < -1e-8 {
                return Err(Error::invalid(format!(
                    "density matrix has eigenvalue {v:.3e} < -1e-8"
                )));
            }
        }
        vals.sort_by(|a, b| b.total_cmp(a));
        Ok(vals.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

/// rho_A of a pure state by the CC^dagger contraction: the amplitude vector
/// is reshaped into a 2^|A| x 2^|B| matrix C with rows indexed by A.
pub fn reduced_density_matrix(state: &StateVector, partition: &Partition) -> Result<DensityMatrix> {
    if partition.n_atoms() != state.n_atoms() {
        return Err(Error::invalid(format!(
            "partition covers {} atoms, state has {}",
            partition.n_atoms(),
            state.n_atoms()
        )));
    }
    let n = state.n_atoms();
    let na = partition.a_indices().len();
    let nb = partition.b_indices().len();
    let mut c = DMatrix::<Complex64>::zeros(1 << na, 1 << nb);
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let row = sub_index(idx, n, partition.a_indices());
        let col = sub_index(idx, n, partition.b_indices());
        c[(row, col)] = *amp;
    }
    let rho = &c * c.adjoint();
    DensityMatrix::new(rho, na)
}

/// Von Neumann entropy -sum lambda ln lambda over the eigenvalues of rho.
pub fn von_neumann(rho: &DensityMatrix) -> Result<f64> {
    Ok(-rho
        .spectrum()?
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>())
}

/// Renyi-2 entropy of a density matrix: -ln Tr rho^2.
pub fn renyi2_state(rho: &DensityMatrix) -> Result<f64> {
    // Tr rho^2 = sum |rho_ij|^2 for Hermitian rho
    let purity: f64 = rho.matrix.iter().map(|c| c.norm_sqr()).sum();
    let _ = rho.spectrum()?; // validity check
    Ok(-purity.ln())
}

/// Every entropy quantity of one state under one bipartition.
///
/// `estimator` = 2 s_a_x - s_ab_x and `estimator2` = 2 s2_a_x - s2_ab_x; any
/// display proportionality constant is applied by callers, never here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub s_ab_x: f64,
    pub s_a_x: f64,
    pub s_b_x: f64,
    pub s_vn_a: f64,
    pub estimator: f64,
    pub s2_ab_x: f64,
    pub s2_a_x: f64,
    pub s2_renyi_a: f64,
    pub estimator2: f64,
}

/// Compute the full report from one state.
pub fn report(state: &StateVector, partition: &Partition) -> Result<EntropyReport> {
    let p = probabilities(state);
    let pa = reduce(&p, partition)?;
    let pb = reduce(&p, &partition.swapped())?;
    let rho = reduced_density_matrix(state, partition)?;
    let s_ab_x = shannon(&p);
    let s_a_x = shannon(&pa);
    let s2_ab_x = renyi2_distribution(&p);
    let s2_a_x = renyi2_distribution(&pa);
    Ok(EntropyReport {
        s_ab_x,
        s_a_x,
        s_b_x: shannon(&pb),
        s_vn_a: von_neumann(&rho)?,
        estimator: 2.0 * s_a_x - s_ab_x,
        s2_ab_x,
        s2_a_x,
        s2_renyi_a: renyi2_state(&rho)?,
        estimator2: 2.0 * s2_a_x - s2_ab_x,
    })
}
