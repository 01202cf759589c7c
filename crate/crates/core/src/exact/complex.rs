//! Graded vector spaces and cohomology of finite cochain complexes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::linalg::{rank_of, Eliminator, Inserted, SparseMatrix, SparseVec};
use super::scalar::Q;
use crate::error::{Error, Result};

/// Ordered basis of labelled, graded vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedSpace {
    pub basis: Vec<(String, i64)>,
}

impl GradedSpace {
    pub fn new(basis: Vec<(String, i64)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (l, _) in &basis {
            if !seen.insert(l.clone()) {
                return Err(Error::Invalid(format!("duplicate basis label {l}")));
            }
        }
        Ok(GradedSpace { basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Dimension per degree.
    pub fn dims(&self) -> BTreeMap<i64, usize> {
        let mut out = BTreeMap::new();
        for (_, d) in &self.basis {
            *out.entry(*d).or_insert(0) += 1;
        }
        out
    }
}

/// A bounded cochain complex `C^lo -> ... -> C^hi` with sparse differentials.
///
/// `d[k]` maps degree `lo + k` to degree `lo + k + 1`, stored column-wise.
#[derive(Clone, Debug, Default)]
pub struct FiniteComplex {
    pub lo: i64,
    pub dims: Vec<usize>,
    pub d: Vec<Vec<SparseVec>>,
}

impl FiniteComplex {
    /// Complex with the given dimensions and zero differentials.
    pub fn new(lo: i64, dims: Vec<usize>) -> Self {
        let d = dims.iter().map(|&n| vec![Vec::new(); n]).collect();
        FiniteComplex { lo, dims, d }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.dims.len() as i64 - 1
    }

    pub fn dim(&self, k: i64) -> usize {
        self.idx(k).map_or(0, |i| self.dims[i])
    }

    fn idx(&self, k: i64) -> Option<usize> {
        if k < self.lo || k > self.hi() {
            None
        } else {
            Some((k - self.lo) as usize)
        }
    }

    /// Sets the image of basis vector `col` of degree `k`.
    pub fn set_column(&mut self, k: i64, col: usize, image: SparseVec) {
        let i = self.idx(k).expect("degree out of range");
        debug_assert!(image.iter().all(|(r, _)| *r < self.dim(k + 1)));
        self.d[i][col] = image;
    }

    /// Differential out of degree `k` as a matrix.
    pub fn differential(&self, k: i64) -> SparseMatrix {
        match self.idx(k) {
            Some(i) => SparseMatrix::from_columns(self.dim(k + 1), &self.d[i]),
            None => SparseMatrix::zero(self.dim(k + 1), 0),
        }
    }

    pub fn apply(&self, k: i64, v: &SparseVec) -> SparseVec {
        let Some(i) = self.idx(k) else {
            return Vec::new();
        };
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for (j, c) in v {
            for (r, x) in &self.d[i][*j] {
                let e = acc.entry(*r).or_insert_with(Q::zero);
                *e += c * x;
            }
        }
        acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Verifies `d ∘ d = 0` in every degree.
    pub fn check_d_squared(&self) -> Result<()> {
        for k in self.lo..self.hi() {
            let i = (k - self.lo) as usize;
            for (j, col) in self.d[i].iter().enumerate() {
                if !self.apply(k + 1, col).is_empty() {
                    return Err(Error::Malformed(format!(
                        "d∘d ≠ 0 on basis vector {j} of degree {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn rank_d(&self, k: i64) -> usize {
        match self.idx(k) {
            Some(i) if k < self.hi() => rank_of(self.dim(k + 1), &self.d[i]),
            _ => 0,
        }
    }

    /// `dim H^k` for every degree, via ranks only.
    pub fn cohomology_dims(&self) -> BTreeMap<i64, usize> {
        let ranks: Vec<usize> = (self.lo..=self.hi()).map(|k| self.rank_d(k)).collect();
        let mut out = BTreeMap::new();
        for k in self.lo..=self.hi() {
            let i = (k - self.lo) as usize;
            let below = if i == 0 { 0 } else { ranks[i - 1] };
            let h = self.dims[i] - ranks[i] - below;
            if h > 0 {
                out.insert(k, h);
            }
        }
        out
    }

    /// Kernel basis of the differential out of degree `k`.
    pub fn cocycles(&self, k: i64) -> Vec<SparseVec> {
        let n = self.dim(k);
        match self.idx(k) {
            Some(i) if k < self.hi() => {
                let cols = &self.d[i];
                let mut e = Eliminator::for_vectors(self.dim(k + 1), cols, true);
                let mut ker = Vec::new();
                for (j, c) in cols.iter().enumerate() {
                    if let Inserted::Dependent(v) = e.insert(c, Some(j)) {
                        ker.push(v);
                    }
                }
                ker
            }
            _ => (0..n).map(|j| vec![(j, Q::one())]).collect(),
        }
    }

    /// Full cohomology with representatives and projections.
    pub fn cohomology(&self) -> Cohomology {
        self.check_d_squared().expect("cohomology of a non-complex");
        let mut degrees = BTreeMap::new();
        for k in self.lo..=self.hi() {
            let n = self.dim(k);
            let mut e = Eliminator::new(n, true);
            if let Some(i) = self.idx(k - 1) {
                for c in &self.d[i] {
                    e.insert(c, None);
                }
            }
            let ker = self.cocycles(k);
            let mut reps = Vec::new();
            let mut tag_to_rep = BTreeMap::new();
            for (t, z) in ker.into_iter().enumerate() {
                if let Inserted::Pivot(_) = e.insert(&z, Some(t)) {
                    tag_to_rep.insert(t, reps.len());
                    reps.push(z);
                }
            }
            degrees.insert(
                k,
                CohomologyDegree {
                    reps,
                    elim: e,
                    tag_to_rep,
                },
            );
        }
        Cohomology { degrees }
    }
}

/// Cohomology in one degree.
#[derive(Clone, Debug)]
pub struct CohomologyDegree {
    /// Cocycle representatives of a basis of `H^k`.
    pub reps: Vec<SparseVec>,
    elim: Eliminator,
    tag_to_rep: BTreeMap<usize, usize>,
}

impl CohomologyDegree {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Coordinates of the class of cocycle `z` in the representative basis.
    pub fn project(&self, z: &SparseVec) -> Result<Vec<Q>> {
        let (res, combo) = self.elim.reduce(z);
        if !res.is_empty() {
            return Err(Error::Malformed("projection of a non-cocycle".into()));
        }
        let mut out = vec![Q::zero(); self.reps.len()];
        for (t, c) in combo {
            out[self.tag_to_rep[&t]] = c;
        }
        Ok(out)
    }

    /// Whether `z` is a coboundary (assumes `z` is a cocycle).
    pub fn is_exact(&self, z: &SparseVec) -> Result<bool> {
        Ok(self.project(z)?.iter().all(|c| c.is_zero()))
    }
}

/// Cohomology of a [`FiniteComplex`], degree by degree.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub degrees: BTreeMap<i64, CohomologyDegree>,
}

impl Cohomology {
    pub fn dims(&self) -> BTreeMap<i64, usize> {
        self.degrees
            .iter()
            .filter(|(_, h)| h.dim() > 0)
            .map(|(k, h)| (*k, h.dim()))
            .collect()
    }

    pub fn degree(&self, k: i64) -> Option<&CohomologyDegree> {
        self.degrees.get(&k)
    }

    pub fn total_dim(&self) -> usize {
        self.degrees.values().map(|h| h.dim()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acyclic_two_term() {
        let mut c = FiniteComplex::new(0, vec![1, 1]);
        c.set_column(0, 0, vec![(0, Q::one())]);
        assert!(c.cohomology_dims().is_empty());
        assert_eq!(c.cohomology().total_dim(), 0);
    }

    #[test]
    fn zero_differential() {
        let c = FiniteComplex::new(-1, vec![2, 0, 3]);
        let dims = c.cohomology_dims();
        assert_eq!(dims.get(&-1), Some(&2));
        assert_eq!(dims.get(&1), Some(&3));
    }

    #[test]
    fn three_dim_example() {
        // x, y in degree 0 and z in degree 1 with d(x) = d(y) = z
        let mut c = FiniteComplex::new(0, vec![2, 1]);
        c.set_column(0, 0, vec![(0, Q::one())]);
        c.set_column(0, 1, vec![(0, Q::one())]);
        let h = c.cohomology();
        assert_eq!(h.dims(), BTreeMap::from([(0, 1)]));
        let rep = &h.degree(0).unwrap().reps[0];
        assert!(c.apply(0, rep).is_empty());
    }

    #[test]
    fn malformed_detected() {
        let mut c = FiniteComplex::new(0, vec![1, 1, 1]);
        c.set_column(0, 0, vec![(0, Q::one())]);
        c.set_column(1, 0, vec![(0, Q::one())]);
        assert!(c.check_d_squared().is_err());
    }
}
