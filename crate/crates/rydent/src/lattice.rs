//! Atom geometries, bipartitions and analog-device constraint checks.
//!
//! Coordinates are 2D, in micrometers. Atom ordering conventions are fixed
//! here and every downstream bitstring depends on them: chains are ordered
//! left to right, ladders leg-major (all of leg 0, then all of leg 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An immutable set of atom positions in the plane, in micrometers.
///
/// Atom labels are implicit: atom `k` is `positions()[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    positions: Vec<(f64, f64)>,
}

impl Geometry {
    /// Build a geometry from explicit positions.
    ///
    /// Rejects empty sets and coincident atoms (pairwise distances must be
    /// strictly positive).
    pub fn new(positions: Vec<(f64, f64)>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("geometry needs at least one atom"));
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if dist(positions[i], positions[j]) <= 0.0 {
                    return Err(Error::invalid(format!(
                        "atoms {i} and {j} coincide at {:?}",
                        positions[i]
                    )));
                }
            }
        }
        Ok(Self { positions })
    }

    /// Evenly spaced chain along x: atom `i` at `(i * a_x, 0)`.
    pub fn chain(n_atoms: usize, a_x: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::invalid("chain needs at least one atom"));
        }
        if !(a_x > 0.0) {
            return Err(Error::invalid(format!("chain spacing must be positive, got {a_x}")));
        }
        Ok(Self {
            positions: (0..n_atoms).map(|i| (i as f64 * a_x, 0.0)).collect(),
        })
    }

    /// Two-leg ladder, leg-major ordering: leg 0 holds atoms `0..n_rungs` at
    /// `(i * a_x, 0)`, leg 1 holds atoms `n_rungs..2 * n_rungs` at `(i * a_x, a_y)`.
    pub fn ladder(n_rungs: usize, a_x: f64, a_y: f64) -> Result<Self> {
        if n_rungs == 0 {
            return Err(Error::invalid("ladder needs at least one rung"));
        }
        if !(a_x > 0.0) || !(a_y > 0.0) {
            return Err(Error::invalid(format!(
                "ladder spacings must be positive, got a_x = {a_x}, a_y = {a_y}"
            )));
        }
        let mut positions = Vec::with_capacity(2 * n_rungs);
        for leg in 0..2 {
            for i in 0..n_rungs {
                positions.push((i as f64 * a_x, leg as f64 * a_y));
            }
        }
        Ok(Self { positions })
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Distance between atoms `i` and `j` in micrometers.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.positions[i], self.positions[j])
    }

    /// Largest pairwise distance (0 for a single atom).
    pub fn extent(&self) -> f64 {
        self.pair_distances().fold(0.0, f64::max)
    }

    /// Smallest pairwise distance (+inf for a single atom).
    pub fn min_spacing(&self) -> f64 {
        self.pair_distances().fold(f64::INFINITY, f64::min)
    }

    fn pair_distances(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.positions.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| self.distance(i, j)))
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Which atoms form subsystem A; the complement is B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    a_indices: Vec<usize>,
    b_indices: Vec<usize>,
    n_atoms: usize,
}

/// Named bipartition modes for symmetric setups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionMode {
    /// First half of a chain: A = atoms `0..N/2`. Requires even N.
    ChainHalves,
    /// First leg of a ladder: A = atoms `0..N/2` in leg-major order. Requires even N.
    LadderLegs,
    /// Explicit atom list for A, in the given order.
    Explicit(Vec<usize>),
}

impl Partition {
    /// Bipartition a geometry. A keeps the order given (or index order for the
    /// symmetric modes); B is the complement in ascending order.
    pub fn new(geometry: &Geometry, mode: PartitionMode) -> Result<Self> {
        let n = geometry.n_atoms();
        let a_indices = match mode {
            PartitionMode::ChainHalves | PartitionMode::LadderLegs => {
                if n % 2 != 0 {
                    return Err(Error::invalid(format!(
                        "symmetric partition needs an even atom count, got {n}"
                    )));
                }
                (0..n / 2).collect::<Vec<_>>()
            }
            PartitionMode::Explicit(list) => list,
        };
        Self::from_a_indices(n, a_indices)
    }

    /// Bipartition by an explicit A list over `n_atoms` atoms.
    pub fn from_a_indices(n_atoms: usize, a_indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n_atoms];
        for &i in &a_indices {
            if i >= n_atoms {
                return Err(Error::invalid(format!(
                    "partition index {i} out of range for {n_atoms} atoms"
                )));
            }
            if seen[i] {
                return Err(Error::invalid(format!("partition repeats atom {i}")));
            }
            seen[i] = true;
        }
        if a_indices.is_empty() || a_indices.len() == n_atoms {
            return Err(Error::invalid("both subsystems must be non-empty"));
        }
        let b_indices = (0..n_atoms).filter(|&i| !seen[i]).collect();
        Ok(Self {
            a_indices,
            b_indices,
            n_atoms,
        })
    }

    pub fn a_indices(&self) -> &[usize] {
        &self.a_indices
    }

    pub fn b_indices(&self) -> &[usize] {
        &self.b_indices
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// The partition with A and B exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a_indices: self.b_indices.clone(),
            b_indices: self.a_indices.clone(),
            n_atoms: self.n_atoms,
        }
    }
}

/// Hard geometric limits of an analog device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceLimits {
    /// Largest allowed pairwise extent, micrometers.
    pub max_extent: f64,
    /// Smallest allowed pairwise spacing, micrometers.
    pub min_spacing: f64,
}

impl DeviceLimits {
    pub fn new(max_extent: f64, min_spacing: f64) -> Result<Self> {
        if !(max_extent > 0.0) || !(min_spacing > 0.0) {
            return Err(Error::invalid("device limits must be strictly positive"));
        }
        Ok(Self {
            max_extent,
            min_spacing,
        })
    }

    /// Aquila-style limits: 100 um extent, 4 um minimum spacing.
    pub fn aquila() -> Self {
        Self {
            max_extent: 100.0,
            min_spacing: 4.0,
        }
    }
}

/// A single device-constraint violation, naming the offending pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub atoms: (usize, usize),
    pub measured: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ExtentExceeded,
    SpacingTooSmall,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ViolationKind::ExtentExceeded => write!(
                f,
                "atoms {} and {} are {:.3} um apart, beyond the {:.3} um extent limit",
                self.atoms.0, self.atoms.1, self.measured, self.limit
            ),
            ViolationKind::SpacingTooSmall => write!(
                f,
                "atoms {} and {} are {:.3} um apart, closer than the {:.3} um minimum spacing",
                self.atoms.0, self.atoms.1, self.measured, self.limit
            ),
        }
    }
}

/// Check a geometry against device limits. Never fails; returns an empty list
/// iff the geometry fits the device.
pub fn validate_device(geometry: &Geometry, limits: &DeviceLimits) -> Vec<Violation> {
    let n = geometry.n_atoms();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = geometry.distance(i, j);
            if d > limits.max_extent {
                violations.push(Violation {
                    kind: ViolationKind::ExtentExceeded,
                    atoms: (i, j),
                    measured: d,
                    limit: limits.max_extent,
                });
            }
            if d < limits.min_spacing {
                violations.push(Violation {
                    kind: ViolationKind::SpacingTooSmall,
                    atoms: (i, j),
                    measured: d,
                    limit: limits.min_spacing,
                });
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn chain_positions() {
        let g = Geometry::chain(2, 8.375).unwrap();
        assert_eq!(g.positions(), &[(0.0, 0.0), (8.375, 0.0)]);
    }

    #[test]
    fn chain_extent_matches_spacing() {
        // R_b = 8.375, a_x = R_b / 1.5
        let g = Geometry::chain(10, 8.375 / 1.5).unwrap();
        assert_relative_eq!(g.extent(), 9.0 * 5.5833, epsilon = 1e-3);
    }

    #[test]
    fn single_atom_chain() {
        let g = Geometry::chain(1, 1.0).unwrap();
        assert_eq!(g.positions(), &[(0.0, 0.0)]);
        assert_eq!(g.min_spacing(), f64::INFINITY);
        assert_eq!(g.extent(), 0.0);
    }

    #[test]
    fn chain_rejects_bad_args() {
        assert!(Geometry::chain(0, 1.0).is_err());
        assert!(Geometry::chain(3, 0.0).is_err());
        assert!(Geometry::chain(3, -1.0).is_err());
        assert!(Geometry::chain(3, f64::NAN).is_err());
    }

    #[test]
    fn ladder_layout() {
        let a = 6.0;
        let g = Geometry::ladder(5, a, 0.5 * a).unwrap();
        assert_eq!(g.n_atoms(), 10);
        // leg-major: atom 0 and atom 5 share x, differ by a_y
        assert_relative_eq!(g.distance(0, 5), 3.0);
        assert_relative_eq!(g.distance(0, 1), 6.0);
    }

    #[test]
    fn ladder_one_rung() {
        let g = Geometry::ladder(1, 1.0, 1.0).unwrap();
        assert_eq!(g.n_atoms(), 2);
        assert_relative_eq!(g.distance(0, 1), 1.0);
    }

    #[test]
    fn ladder_diagonal_345() {
        let g = Geometry::ladder(2, 3.0, 4.0).unwrap();
        // atom 0 = (0,0), atom 3 = (3,4)
        assert_relative_eq!(g.distance(0, 3), 5.0);
    }

    #[test]
    fn partition_chain_halves() {
        let g = Geometry::chain(10, 1.0).unwrap();
        let p = Partition::new(&g, PartitionMode::ChainHalves).unwrap();
        assert_eq!(p.a_indices(), &[0, 1, 2, 3, 4]);
        assert_eq!(p.b_indices(), &[5, 6, 7, 8, 9]);
    }

    #[test]
    fn partition_ladder_legs() {
        let g = Geometry::ladder(5, 1.0, 1.0).unwrap();
        let p = Partition::new(&g, PartitionMode::LadderLegs).unwrap();
        assert_eq!(p.a_indices(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn partition_explicit() {
        let g = Geometry::chain(4, 1.0).unwrap();
        let p = Partition::new(&g, PartitionMode::Explicit(vec![0, 2])).unwrap();
        assert_eq!(p.a_indices(), &[0, 2]);
        assert_eq!(p.b_indices(), &[1, 3]);
    }

    #[test]
    fn partition_rejects_odd_symmetric() {
        let g = Geometry::chain(5, 1.0).unwrap();
        assert!(Partition::new(&g, PartitionMode::ChainHalves).is_err());
    }

    #[test]
    fn partition_rejects_duplicates_and_empty() {
        let g = Geometry::chain(4, 1.0).unwrap();
        assert!(Partition::new(&g, PartitionMode::Explicit(vec![1, 1])).is_err());
        assert!(Partition::new(&g, PartitionMode::Explicit(vec![])).is_err());
        assert!(Partition::new(&g, PartitionMode::Explicit(vec![0, 1, 2, 3])).is_err());
        assert!(Partition::new(&g, PartitionMode::Explicit(vec![4])).is_err());
    }

    #[test]
    fn aquila_valid_chain() {
        // R_b/a_x = 0.9 -> a_x = 9.306 um, extent 83.75 um: fits (100, 4)
        let g = Geometry::chain(10, 8.375 / 0.9).unwrap();
        assert!(validate_device(&g, &DeviceLimits::aquila()).is_empty());
    }

    #[test]
    fn spacing_violation() {
        let g = Geometry::chain(10, 3.9).unwrap();
        let v = validate_device(&g, &DeviceLimits::aquila());
        assert!(!v.is_empty());
        assert!(v
            .iter()
            .all(|x| x.kind == ViolationKind::SpacingTooSmall && x.measured < 4.0));
    }

    #[test]
    fn single_atom_always_valid() {
        let g = Geometry::chain(1, 1.0).unwrap();
        assert!(validate_device(&g, &DeviceLimits::aquila()).is_empty());
    }

    #[test]
    fn ladder_leg_reflection_maps_a_onto_b() {
        let g = Geometry::ladder(5, 2.0, 1.0).unwrap();
        let p = Partition::new(&g, PartitionMode::LadderLegs).unwrap();
        // reflecting across y = a_y/2 sends atom i to atom i +- n_rungs
        for (k, &i) in p.a_indices().iter().enumerate() {
            assert_eq!(p.b_indices()[k], i + 5);
            let (xa, ya) = g.positions()[i];
            let (xb, yb) = g.positions()[i + 5];
            assert_relative_eq!(xa, xb);
            assert_relative_eq!(ya, 1.0 - yb);
        }
    }

    #[test]
    fn geometry_json_roundtrip() {
        let g = Geometry::chain(3, 2.5).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"positions":[[0.0,0.0],[2.5,0.0],[5.0,0.0]]}"#);
        let back: Geometry = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn chain_pairwise_distances(n in 2usize..12, a in 0.1f64..50.0) {
            let g = Geometry::chain(n, a).unwrap();
            for i in 0..n {
                for j in (i + 1)..n {
                    prop_assert!((g.distance(i, j) - (j - i) as f64 * a).abs() < 1e-9 * a);
                }
            }
        }

        #[test]
        fn validation_monotone_in_limits(
            n in 1usize..8,
            a in 0.5f64..30.0,
            ext in 1.0f64..200.0,
            sp in 0.1f64..10.0,
            loosen_e in 0.0f64..50.0,
            loosen_s in 0.0f64..5.0,
        ) {
            let g = Geometry::chain(n, a).unwrap();
            let tight = DeviceLimits { max_extent: ext, min_spacing: sp };
            let loose = DeviceLimits {
                max_extent: ext + loosen_e,
                min_spacing: (sp - loosen_s).max(1e-6),
            };
            prop_assert!(validate_device(&g, &loose).len() <= validate_device(&g, &tight).len());
        }
    }
}
