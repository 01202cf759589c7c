//! Sparse vectors, sparse matrices, and incremental exact elimination.

use std::collections::{BTreeMap, HashMap};

use super::scalar::Q;
use crate::error::{Error, Result};

/// Sparse vector: strictly increasing indices, no stored zeros.
pub type SparseVec = Vec<(usize, Q)>;

/// Builds a sparse vector from unsorted, possibly repeated entries.
pub fn collect_vec<I: IntoIterator<Item = (usize, Q)>>(it: I) -> SparseVec {
    let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
    for (i, c) in it {
        if c.is_zero() {
            continue;
        }
        let e = acc.entry(i).or_insert_with(Q::zero);
        *e += &c;
        if e.is_zero() {
            acc.remove(&i);
        }
    }
    acc.into_iter().collect()
}

/// `a + f·b`.
pub fn axpy(a: &SparseVec, f: &Q, b: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i].clone());
            i += 1;
        } else if take_b {
            let v = f * &b[j].1;
            if !v.is_zero() {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = &a[i].1 + &(f * &b[j].1);
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn scale(a: &SparseVec, f: &Q) -> SparseVec {
    if f.is_zero() {
        return Vec::new();
    }
    a.iter().map(|(i, c)| (*i, c * f)).collect()
}

/// Dot product of two sparse vectors.
pub fn dot(a: &SparseVec, b: &SparseVec) -> Q {
    let (mut i, mut j) = (0, 0);
    let mut s = Q::zero();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += &a[i].1 * &b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Sparse matrix stored as an association table `(row, col) -> value`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), Q>,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = SparseMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, Q::from_int(*v));
            }
        }
        m
    }

    /// Builds a matrix from column vectors.
    pub fn from_columns(rows: usize, cols: &[SparseVec]) -> Self {
        let mut m = SparseMatrix::zero(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, c) in col {
                assert!(*i < rows, "row index out of range");
                m.entries.insert((*i, j), c.clone());
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.entries.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: &Q) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.entries.iter().map(|((i, j), v)| (*i, *j, v))
    }

    pub fn columns(&self) -> Vec<SparseVec> {
        let mut cols = vec![Vec::new(); self.cols];
        for ((i, j), v) in &self.entries {
            cols[*j].push((*i, v.clone()));
        }
        cols
    }

    pub fn mul_vec(&self, x: &SparseVec) -> SparseVec {
        let xm: HashMap<usize, &Q> = x.iter().map(|(i, c)| (*i, c)).collect();
        collect_vec(
            self.entries
                .iter()
                .filter_map(|((i, j), v)| xm.get(j).map(|c| (*i, v * *c))),
        )
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let cols = other.columns();
        let prod: Vec<SparseVec> = cols.iter().map(|c| self.mul_vec(c)).collect();
        Ok(SparseMatrix::from_columns(self.rows, &prod))
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: self
                .entries
                .iter()
                .map(|((i, j), v)| ((*j, *i), v.clone()))
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        let mut e = Eliminator::for_vectors(self.rows, &self.columns(), false);
        for c in self.columns() {
            e.insert(&c, None);
        }
        e.rank()
    }

    /// Exact determinant of a square matrix.
    pub fn determinant(&self) -> Result<Q> {
        if self.rows != self.cols {
            return Err(Error::Dimension(
                "determinant of a non-square matrix".into(),
            ));
        }
        let n = self.rows;
        let mut a: Vec<Vec<Q>> = vec![vec![Q::zero(); n]; n];
        for ((i, j), v) in &self.entries {
            a[*i][*j] = v.clone();
        }
        let mut det = Q::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
                return Ok(Q::zero());
            };
            if p != col {
                a.swap(p, col);
                det = -det;
            }
            let piv = a[col][col].clone();
            det *= &piv;
            let inv = piv.inv();
            for r in col + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = &a[r][col] * &inv;
                #[allow(clippy::needless_range_loop)]
                for c in col..n {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
            }
        }
        Ok(det)
    }
}

/// Outcome of inserting a vector into an [`Eliminator`].
#[derive(Clone, Debug)]
pub enum Inserted {
    /// The vector extended the span; index of the new pivot row.
    Pivot(usize),
    /// The vector was dependent; the tagged combination summing to zero
    /// (includes the inserted vector's own tag with coefficient 1).
    Dependent(SparseVec),
}

#[derive(Clone, Debug)]
struct PivotRow {
    /// Entries keyed by elimination position; first entry is the pivot, with
    /// coefficient 1.
    v: Vec<(u32, Q)>,
    combo: SparseVec,
}

/// Incremental Gaussian elimination over a fixed ambient space.
///
/// Coordinates are eliminated in a static order that puts sparse coordinates
/// first (a Markowitz-style heuristic computed from the expected inputs).
/// Each inserted vector may carry a tag; pivot rows remember the tagged
/// combination of inputs they equal, which gives solutions and kernels.
#[derive(Clone, Debug)]
pub struct Eliminator {
    pos_of: Vec<u32>,
    coord_of: Vec<usize>,
    pivot_at: HashMap<u32, usize>,
    rows: Vec<PivotRow>,
    track: bool,
}

impl Eliminator {
    /// Identity ordering.
    pub fn new(dim: usize, track: bool) -> Self {
        Eliminator {
            pos_of: (0..dim as u32).collect(),
            coord_of: (0..dim).collect(),
            pivot_at: HashMap::new(),
            rows: Vec::new(),
            track,
        }
    }

    /// Orders coordinates by increasing occurrence count in `sample`.
    pub fn for_vectors(dim: usize, sample: &[SparseVec], track: bool) -> Self {
        let mut count = vec![0u32; dim];
        for v in sample {
            for (i, _) in v {
                count[*i] += 1;
            }
        }
        let mut coord_of: Vec<usize> = (0..dim).collect();
        coord_of.sort_by_key(|&i| (count[i], i));
        let mut pos_of = vec![0u32; dim];
        for (p, &c) in coord_of.iter().enumerate() {
            pos_of[c] = p as u32;
        }
        Eliminator {
            pos_of,
            coord_of,
            pivot_at: HashMap::new(),
            rows: Vec::new(),
            track,
        }
    }

    pub fn dim(&self) -> usize {
        self.pos_of.len()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn to_work(&self, v: &SparseVec) -> BTreeMap<u32, Q> {
        v.iter()
            .map(|(i, c)| (self.pos_of[*i], c.clone()))
            .collect()
    }

    /// Reduces `work` against the pivots; returns the accumulated tagged
    /// combination `x` with `input = residual + Σ x_t · tagged_t` modulo
    /// untagged inputs.
    fn reduce_work(
        &self,
        work: &mut BTreeMap<u32, Q>,
        track: bool,
    ) -> (Vec<(u32, Q)>, BTreeMap<usize, Q>) {
        let mut combo: BTreeMap<usize, Q> = BTreeMap::new();
        let mut residual = Vec::new();
        while let Some((p, c)) = work.pop_first() {
            match self.pivot_at.get(&p) {
                None => residual.push((p, c)),
                Some(&ri) => {
                    let row = &self.rows[ri];
                    for (q, x) in &row.v[1..] {
                        let e = work.entry(*q).or_insert_with(Q::zero);
                        *e -= &c * x;
                        if e.is_zero() {
                            work.remove(q);
                        }
                    }
                    if track {
                        for (t, x) in &row.combo {
                            let e = combo.entry(*t).or_insert_with(Q::zero);
                            *e += &c * x;
                            if e.is_zero() {
                                combo.remove(t);
                            }
                        }
                    }
                }
            }
        }
        (residual, combo)
    }

    /// Inserts a vector. With tracking enabled the returned dependency is
    /// expressed in tags.
    pub fn insert(&mut self, v: &SparseVec, tag: Option<usize>) -> Inserted {
        let mut work = self.to_work(v);
        let (residual, mut combo) = self.reduce_work(&mut work, self.track);
        // residual = v - Σ combo·tagged  =>  tagged combination for v itself
        let mut own: BTreeMap<usize, Q> = BTreeMap::new();
        if self.track {
            if let Some(t) = tag {
                own.insert(t, Q::one());
            }
            for (t, x) in std::mem::take(&mut combo) {
                let e = own.entry(t).or_insert_with(Q::zero);
                *e -= &x;
                if e.is_zero() {
                    own.remove(&t);
                }
            }
        }
        if residual.is_empty() {
            return Inserted::Dependent(own.into_iter().collect());
        }
        let lead = residual[0].1.inv();
        let v: Vec<(u32, Q)> = residual.into_iter().map(|(p, c)| (p, &c * &lead)).collect();
        let combo: SparseVec = own.into_iter().map(|(t, c)| (t, &c * &lead)).collect();
        let idx = self.rows.len();
        self.pivot_at.insert(v[0].0, idx);
        self.rows.push(PivotRow { v, combo });
        Inserted::Pivot(idx)
    }

    /// Reduces a vector: returns `(residual, coefficients)` with
    /// `v = residual + Σ coeff_t · tagged_t` (modulo untagged inserts).
    pub fn reduce(&self, v: &SparseVec) -> (SparseVec, SparseVec) {
        let mut work = self.to_work(v);
        let (residual, combo) = self.reduce_work(&mut work, self.track);
        let mut res: SparseVec = residual
            .into_iter()
            .map(|(p, c)| (self.coord_of[p as usize], c))
            .collect();
        res.sort_by_key(|e| e.0);
        (res, combo.into_iter().collect())
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        let mut work = self.to_work(v);
        self.reduce_work(&mut work, false).0.is_empty()
    }

    /// The pivot coordinates (in original indexing) of the current rows.
    pub fn pivot_coords(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|r| self.coord_of[r.v[0].0 as usize])
            .collect()
    }
}

/// Output of [`solve_linear`].
#[derive(Clone, Debug)]
pub struct LinearSolution {
    /// One solution of `A x = b`, or `None` when inconsistent.
    pub x: Option<SparseVec>,
    /// Basis of `ker A`.
    pub kernel: Vec<SparseVec>,
    /// When inconsistent: the reduced residual of `b`, a nonzero vector
    /// outside the column space (in reduced form against the pivots).
    pub residual: SparseVec,
}

/// Solves `A x = b` exactly and returns a kernel basis.
pub fn solve_linear(a: &SparseMatrix, b: &SparseVec) -> Result<LinearSolution> {
    if let Some((i, _)) = b.last() {
        if *i >= a.rows {
            return Err(Error::Dimension(format!(
                "right-hand side index {} out of range for {} rows",
                i, a.rows
            )));
        }
    }
    let cols = a.columns();
    solve_columns(a.rows, &cols, b)
}

/// Column-list variant of [`solve_linear`].
pub fn solve_columns(rows: usize, cols: &[SparseVec], b: &SparseVec) -> Result<LinearSolution> {
    let mut e = Eliminator::for_vectors(rows, cols, true);
    let mut kernel = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        if let Some((i, _)) = c.last() {
            if *i >= rows {
                return Err(Error::Dimension(format!("column {j} exceeds {rows} rows")));
            }
        }
        if let Inserted::Dependent(k) = e.insert(c, Some(j)) {
            kernel.push(k);
        }
    }
    let (residual, x) = e.reduce(b);
    if residual.is_empty() {
        Ok(LinearSolution {
            x: Some(x),
            kernel,
            residual,
        })
    } else {
        Ok(LinearSolution {
            x: None,
            kernel,
            residual,
        })
    }
}

/// Linear system whose rows are indexed by arbitrary ordered keys.
#[derive(Clone, Debug)]
pub struct KeyedSystem<K: Ord + Clone> {
    rows: BTreeMap<K, usize>,
    cols: Vec<SparseVec>,
}

impl<K: Ord + Clone> Default for KeyedSystem<K> {
    fn default() -> Self {
        KeyedSystem {
            rows: BTreeMap::new(),
            cols: Vec::new(),
        }
    }
}

impl<K: Ord + Clone> KeyedSystem<K> {
    pub fn new() -> Self {
        Self::default()
    }

    fn vector(&mut self, entries: impl IntoIterator<Item = (K, Q)>) -> SparseVec {
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for (k, c) in entries {
            let n = self.rows.len();
            let r = *self.rows.entry(k).or_insert(n);
            *acc.entry(r).or_insert_with(Q::zero) += &c;
        }
        acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Adds an unknown; returns its index.
    pub fn push_column(&mut self, entries: impl IntoIterator<Item = (K, Q)>) -> usize {
        let v = self.vector(entries);
        self.cols.push(v);
        self.cols.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Solves `Σ x_j col_j = b`.
    pub fn solve(&mut self, b: impl IntoIterator<Item = (K, Q)>) -> LinearSolution {
        let b = self.vector(b);
        solve_columns(self.rows.len(), &self.cols, &b).expect("keyed rows are always in range")
    }
}

/// Rank of a list of vectors in an ambient space of dimension `dim`.
pub fn rank_of(dim: usize, vecs: &[SparseVec]) -> usize {
    let mut e = Eliminator::for_vectors(dim, vecs, false);
    for v in vecs {
        e.insert(v, None);
    }
    e.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: &SparseVec, n: usize) -> Vec<Q> {
        let mut out = vec![Q::zero(); n];
        for (i, c) in v {
            out[*i] = c.clone();
        }
        out
    }

    #[test]
    fn identity_solve() {
        let a = SparseMatrix::identity(3);
        let b = vec![(0, Q::from(1)), (1, Q::from(2)), (2, Q::from(3))];
        let s = solve_linear(&a, &b).unwrap();
        assert_eq!(s.x.unwrap(), b);
        assert!(s.kernel.is_empty());
    }

    #[test]
    fn zero_matrix() {
        let a = SparseMatrix::zero(2, 2);
        let s = solve_linear(&a, &vec![]).unwrap();
        assert_eq!(s.x.unwrap(), vec![]);
        assert_eq!(s.kernel.len(), 2);
    }

    #[test]
    fn rank_one_system() {
        let a = SparseMatrix::from_dense(&[vec![2, 1], vec![4, 2]]);
        let b = vec![(0, Q::from(1)), (1, Q::from(2))];
        let s = solve_linear(&a, &b).unwrap();
        let x = s.x.unwrap();
        assert_eq!(a.mul_vec(&x), b);
        assert_eq!(s.kernel.len(), 1);
        assert!(a.mul_vec(&s.kernel[0]).is_empty());
        // b outside the image
        let s2 = solve_linear(&a, &vec![(0, Q::from(1))]).unwrap();
        assert!(s2.x.is_none());
        assert!(!s2.residual.is_empty());
    }

    #[test]
    fn determinant_small() {
        let a = SparseMatrix::from_dense(&[vec![0, 1], vec![-1, 0]]);
        assert_eq!(a.determinant().unwrap(), Q::one());
        let g = SparseMatrix::from_dense(&[vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 2]]);
        assert_eq!(g.determinant().unwrap(), Q::from(4));
        let _ = dense(&vec![], 0);
    }

    #[test]
    fn dimension_errors() {
        let a = SparseMatrix::identity(2);
        assert!(solve_linear(&a, &vec![(5, Q::one())]).is_err());
        assert!(a.mul(&SparseMatrix::identity(3)).is_err());
    }
}
