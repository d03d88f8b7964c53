//! Black-box access model for sparse Hamiltonians.
//!
//! The simulated algorithms only ever see a Hamiltonian through two
//! oracles: one that returns an entry given its position, and one that
//! returns the position of the i-th nonzero in a row. A third oracle
//! covers the case where the Hamiltonian encodes a target unitary and
//! every entry query is really a query to that unitary.
//!
//! The simulator itself reads the matrix classically; the [`QueryLedger`]
//! records what the modeled quantum algorithm would have paid. Drivers
//! charge it with their closed-form counts (so many coin preparations,
//! each worth one neighbor query and two entry queries).

use std::cell::Cell;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::numerics;
use crate::scalar::{r, Real};

/// Row supports of a sparse Hermitian matrix.
///
/// On disk: `{"dim": n, "D": max_row_nonzeros, "columns": [[..], ..]}`
/// with 0-based, strictly increasing column indices per row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SparsityPattern {
    pub dim: usize,
    #[serde(rename = "D")]
    pub degree: usize,
    pub columns: Vec<Vec<usize>>,
}

impl SparsityPattern {
    /// All entries present.
    pub fn dense(dim: usize) -> Self {
        SparsityPattern {
            dim,
            degree: dim,
            columns: (0..dim).map(|_| (0..dim).collect()).collect(),
        }
    }

    /// Support of the entries with modulus above `tol`; `degree` is the
    /// widest row.
    pub fn from_matrix<R: Real>(h: &ComplexMatrix<R>, tol: R) -> Self {
        let dim = h.dim();
        let columns: Vec<Vec<usize>> = (0..dim)
            .map(|j| (0..dim).filter(|&k| h[(j, k)].norm() > tol).collect())
            .collect();
        let degree = columns.iter().map(Vec::len).max().unwrap_or(0).max(1);
        SparsityPattern { dim, degree, columns }
    }

    pub fn row(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::contract("pattern has dimension zero"));
        }
        if self.columns.len() != self.dim {
            return Err(Error::contract(format!(
                "pattern declares dim {} but has {} rows",
                self.dim,
                self.columns.len()
            )));
        }
        if self.degree == 0 || self.degree > self.dim {
            return Err(Error::contract(format!(
                "row width bound {} outside 1..={}",
                self.degree, self.dim
            )));
        }
        for (j, row) in self.columns.iter().enumerate() {
            if row.len() > self.degree {
                return Err(Error::contract(format!(
                    "row {j} has {} entries, above the bound {}",
                    row.len(),
                    self.degree
                )));
            }
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::contract(format!(
                        "row {j} columns not strictly increasing"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= self.dim {
                    return Err(Error::contract(format!(
                        "row {j} references column {last} outside dim {}",
                        self.dim
                    )));
                }
            }
            // Hermitian support must be symmetric.
            for &k in row {
                if self.columns[k].binary_search(&j).is_err() {
                    return Err(Error::contract(format!(
                        "support not symmetric: ({j},{k}) present, ({k},{j}) missing"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: SparsityPattern = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Promised norm bounds handed to the drivers. Each field may exceed the
/// measured value but never undercut it, and the chain
/// max_entry <= spectral <= one_norm <= degree * max_entry must hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBounds<R: Real> {
    /// Bound on the largest entry modulus.
    pub max_entry: R,
    /// Bound on the spectral norm.
    pub spectral: R,
    /// Bound on the induced 1-norm (max absolute column sum).
    pub one_norm: R,
    /// Bound on the number of nonzeros per row.
    pub degree: usize,
}

impl<R: Real> NormBounds<R> {
    pub fn new(max_entry: R, spectral: R, one_norm: R, degree: usize) -> Result<Self> {
        let b = NormBounds { max_entry, spectral, one_norm, degree };
        b.validate()?;
        Ok(b)
    }

    /// Tight bounds measured from the matrix itself. The entrywise norms
    /// are exact; only the eigensolver-based spectral norm gets a hair of
    /// slack so it stays a genuine upper bound.
    pub fn measured(h: &ComplexMatrix<R>, pattern: &SparsityPattern) -> Result<Self> {
        let slack = R::one() + r::<R>(1e-12);
        let spectral = (numerics::spectral_norm_hermitian(h)? * slack).min(numerics::one_norm(h));
        Self::new(
            numerics::max_norm(h),
            spectral,
            numerics::one_norm(h),
            pattern.degree,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let slack = R::one() + r::<R>(1e-9);
        let chain_ok = self.max_entry > R::zero()
            && self.max_entry <= self.spectral * slack
            && self.spectral <= self.one_norm * slack
            && self.one_norm <= r::<R>(self.degree as f64) * self.max_entry * slack;
        if !chain_ok {
            return Err(Error::precondition(format!(
                "norm bounds break the chain max_entry <= spectral <= one_norm <= degree*max_entry: \
                 {:?} {:?} {:?} degree {}",
                self.max_entry, self.spectral, self.one_norm, self.degree
            )));
        }
        Ok(())
    }
}

/// Query totals to the three oracles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    /// Entry oracle queries.
    #[serde(rename = "OH")]
    pub entry: u64,
    /// Neighbor-index oracle queries.
    #[serde(rename = "OF")]
    pub neighbor: u64,
    /// Target-unitary queries (only nonzero when the Hamiltonian encodes
    /// a unitary).
    #[serde(rename = "OU")]
    pub unitary: u64,
}

impl QueryCounts {
    pub fn total(&self) -> u64 {
        self.entry + self.neighbor + self.unitary
    }
}

impl std::ops::Add for QueryCounts {
    type Output = QueryCounts;
    fn add(self, o: QueryCounts) -> QueryCounts {
        QueryCounts {
            entry: self.entry + o.entry,
            neighbor: self.neighbor + o.neighbor,
            unitary: self.unitary + o.unitary,
        }
    }
}

/// Interior-mutable query counter, owned per trial so sweeps can run on
/// worker threads without locks.
#[derive(Debug, Default)]
pub struct QueryLedger {
    entry: Cell<u64>,
    neighbor: Cell<u64>,
    unitary: Cell<u64>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_entry(&self, n: u64) {
        self.entry.set(self.entry.get() + n);
    }

    pub fn charge_neighbor(&self, n: u64) {
        self.neighbor.set(self.neighbor.get() + n);
    }

    pub fn charge_unitary(&self, n: u64) {
        self.unitary.set(self.unitary.get() + n);
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            entry: self.entry.get(),
            neighbor: self.neighbor.get(),
            unitary: self.unitary.get(),
        }
    }

    pub fn absorb(&self, c: QueryCounts) {
        self.charge_entry(c.entry);
        self.charge_neighbor(c.neighbor);
        self.charge_unitary(c.unitary);
    }

    pub fn reset(&self) {
        self.entry.set(0);
        self.neighbor.set(0);
        self.unitary.set(0);
    }
}

/// A Hamiltonian together with its promised access model: sparsity
/// pattern, norm bounds, and the running query bill.
#[derive(Debug)]
pub struct OracleSet<R: Real> {
    h: ComplexMatrix<R>,
    pattern: SparsityPattern,
    bounds: NormBounds<R>,
    ledger: QueryLedger,
    unitary_backed: bool,
}

impl<R: Real> OracleSet<R> {
    pub fn new(h: ComplexMatrix<R>, pattern: SparsityPattern, bounds: NormBounds<R>) -> Result<Self> {
        pattern.validate()?;
        bounds.validate()?;
        if pattern.dim != h.dim() {
            return Err(Error::dim(format!(
                "pattern dim {} vs matrix dim {}",
                pattern.dim,
                h.dim()
            )));
        }
        if !h.is_hermitian(r::<R>(1e-12) * (R::one() + h.max_abs_entry())) {
            return Err(Error::precondition("Hamiltonian is not Hermitian"));
        }
        // Off-pattern entries must vanish and bounds must cover reality.
        for j in 0..h.dim() {
            let row = pattern.row(j);
            for k in 0..h.dim() {
                let present = row.binary_search(&k).is_ok();
                if !present && h[(j, k)].norm() > r::<R>(1e-13) {
                    return Err(Error::precondition(format!(
                        "entry ({j},{k}) is nonzero but missing from the pattern"
                    )));
                }
            }
        }
        let slack = R::one() + r::<R>(1e-9);
        let measured_max = numerics::max_norm(&h);
        let measured_one = numerics::one_norm(&h);
        let measured_spec = numerics::spectral_norm_hermitian(&h)?;
        if measured_max > bounds.max_entry * slack
            || measured_one > bounds.one_norm * slack
            || measured_spec > bounds.spectral * slack
        {
            return Err(Error::precondition(format!(
                "norm bounds undercut the matrix: measured (max {:?}, spec {:?}, one {:?})",
                measured_max, measured_spec, measured_one
            )));
        }
        Ok(OracleSet {
            h,
            pattern,
            bounds,
            ledger: QueryLedger::new(),
            unitary_backed: false,
        })
    }

    /// Dense pattern, measured bounds.
    pub fn from_matrix(h: ComplexMatrix<R>) -> Result<Self> {
        let pattern = SparsityPattern::from_matrix(&h, r::<R>(1e-13));
        let bounds = NormBounds::measured(&h, &pattern)?;
        Self::new(h, pattern, bounds)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix<R> {
        &self.h
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn bounds(&self) -> &NormBounds<R> {
        &self.bounds
    }

    /// Overrides the measured bounds with looser promises.
    pub fn with_bounds(mut self, bounds: NormBounds<R>) -> Result<Self> {
        bounds.validate()?;
        self.bounds = bounds;
        Ok(self)
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn unitary_backed(&self) -> bool {
        self.unitary_backed
    }

    /// Row sums of entry moduli over the pattern (the per-row weights the
    /// state preparation planner needs).
    pub fn row_abs_sums(&self) -> Vec<R> {
        (0..self.dim())
            .map(|j| {
                self.pattern
                    .row(j)
                    .iter()
                    .map(|&k| self.h[(j, k)].norm())
                    .fold(R::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// Bills `units` coin preparations: each is one neighbor query plus
    /// two entry queries (entry value in, entry value out). When the
    /// Hamiltonian encodes a unitary, every entry query also hits it.
    pub fn charge_prep_units(&self, units: u64) -> QueryCounts {
        self.ledger.charge_neighbor(units);
        self.ledger.charge_entry(2 * units);
        let unitary = if self.unitary_backed {
            self.ledger.charge_unitary(2 * units);
            2 * units
        } else {
            0
        };
        QueryCounts { entry: 2 * units, neighbor: units, unitary }
    }
}

/// Hermitian encoding of a unitary: H = [[0, U], [U^dagger, 0]].
///
/// ||H|| = 1, the pattern is the two off-diagonal blocks, and entry
/// queries are marked as passing through the unitary's own oracle.
pub fn embed_unitary<R: Real>(u: &ComplexMatrix<R>) -> Result<OracleSet<R>> {
    let n = u.dim();
    if n == 0 {
        return Err(Error::dim("cannot encode an empty unitary"));
    }
    if !u.is_unitary(r::<R>(1e-10)) {
        return Err(Error::precondition("encoding target is not unitary"));
    }
    let dim = 2 * n;
    let h = ComplexMatrix::from_fn(dim, |j, k| {
        if j < n && k >= n {
            u[(j, k - n)]
        } else if j >= n && k < n {
            u[(k, j - n)].conj()
        } else {
            num_complex::Complex::new(R::zero(), R::zero())
        }
    });
    let pattern = SparsityPattern::from_matrix(&h, r::<R>(1e-13));
    let bounds = NormBounds::measured(&h, &pattern)?;
    let mut set = OracleSet::new(h, pattern, bounds)?;
    set.unitary_backed = true;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles;
    use crate::rng::Tape;
    use num_complex::Complex64;

    #[test]
    fn pattern_roundtrip_and_validation() {
        let p = SparsityPattern {
            dim: 3,
            degree: 2,
            columns: vec![vec![0, 1], vec![0, 1], vec![2]],
        };
        let text = p.to_json().unwrap();
        assert!(text.contains("\"D\": 2"));
        let q = SparsityPattern::from_json(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn asymmetric_pattern_is_rejected() {
        let p = SparsityPattern {
            dim: 2,
            degree: 1,
            columns: vec![vec![1], vec![1]],
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn out_of_range_column_is_rejected() {
        let p = SparsityPattern {
            dim: 2,
            degree: 1,
            columns: vec![vec![3], vec![0]],
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn ledger_accumulates_and_merges() {
        let led = QueryLedger::new();
        led.charge_entry(3);
        led.charge_neighbor(2);
        led.absorb(QueryCounts { entry: 1, neighbor: 1, unitary: 5 });
        let c = led.counts();
        assert_eq!(c.entry, 4);
        assert_eq!(c.neighbor, 3);
        assert_eq!(c.unitary, 5);
        assert_eq!(c.total(), 12);
    }

    #[test]
    fn bounds_chain_violation_is_rejected() {
        // spectral promise above the 1-norm promise breaks the chain
        assert!(NormBounds::new(1.0, 5.0, 2.0, 4).is_err());
        assert!(NormBounds::new(1.0, 1.5, 2.0, 4).is_ok());
    }

    #[test]
    fn oracle_set_rejects_undercut_bounds() {
        let mut tape = Tape::new(3);
        let h = ensembles::gue::<f64>(4, &mut tape);
        let pattern = SparsityPattern::dense(4);
        let weak = NormBounds::new(0.01, 0.02, 0.03, 4).unwrap();
        assert!(OracleSet::new(h, pattern, weak).is_err());
    }

    #[test]
    fn from_matrix_measures_consistent_bounds() {
        let mut tape = Tape::new(4);
        let h = ensembles::gue::<f64>(5, &mut tape);
        let set = OracleSet::from_matrix(h).unwrap();
        assert_eq!(set.bounds().degree, 5);
        set.charge_prep_units(3);
        let c = set.ledger().counts();
        assert_eq!(c.neighbor, 3);
        assert_eq!(c.entry, 6);
        assert_eq!(c.unitary, 0);
    }

    #[test]
    fn row_abs_sums_respect_the_pattern() {
        let h = ComplexMatrix::from_rows(
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(0.5, 0.0),
            ],
        )
        .unwrap();
        let set = OracleSet::from_matrix(h).unwrap();
        let sums = set.row_abs_sums();
        assert!((sums[0] - 3.0).abs() < 1e-14);
        assert!((sums[1] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn unitary_encoding_is_hermitian_with_unit_norm() {
        let mut tape = Tape::new(6);
        let u = ensembles::haar_unitary::<f64>(3, &mut tape);
        let set = embed_unitary(&u).unwrap();
        assert_eq!(set.dim(), 6);
        assert!(set.matrix().is_hermitian(1e-13));
        let spec = crate::numerics::spectral_norm_hermitian(set.matrix()).unwrap();
        assert!((spec - 1.0).abs() < 1e-12);
        // diagonal blocks empty
        assert!(set.matrix()[(0, 1)].norm() < 1e-15);
        set.charge_prep_units(2);
        let c = set.ledger().counts();
        assert_eq!(c.unitary, 4);
        assert_eq!(c.entry, 4);
    }
}
