//! The graded zigzag algebras `A_m^n`.
//!
//! Paths are written right to left: `(k+1|k)` starts at `k` and ends at
//! `k+1`. Arrows `(k+1|k)` have degree 0, arrows `(k|k+1)` degree `n`, and the
//! loops `ℓ_k` degree `n`. The weight of a basis element equals its degree.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{SparseVec, Q};

/// Shape of a basis element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    /// `e_k` (the unit `1` when `m = 1`).
    Idem(usize),
    /// `(k+1|k)`, degree 0.
    Up(usize),
    /// `(k|k+1)`, degree `n`.
    Down(usize),
    /// `ℓ_k` (`t` when `m = 1`).
    Loop(usize),
}

/// One basis path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElem {
    pub label: String,
    pub src: usize,
    pub tgt: usize,
    pub deg: i64,
}

/// `A_m^n` with its precomputed product table.
#[derive(Clone, PartialEq, Eq)]
pub struct ZigzagAlgebra {
    pub m: usize,
    pub n: i64,
    pub basis: Vec<BasisElem>,
    kinds: Vec<Kind>,
    /// `table[x][y] = Some((z, c))` means `x·y = c·z`.
    table: Vec<Vec<Option<(usize, Q)>>>,
    idem: Vec<usize>,
    by_label: HashMap<String, usize>,
    /// For each non-unit `c`: pairs of non-units `(x, y, k)` with `x·y = k·c`.
    factorizations: Vec<Vec<(usize, usize, Q)>>,
}

impl fmt::Debug for ZigzagAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A_{}^{} (dim {})", self.m, self.n, self.dim())
    }
}

fn loop_label(m: usize, k: usize) -> String {
    if m == 1 {
        "t".into()
    } else if k < m {
        format!("({}|{}|{})", k, k + 1, k)
    } else {
        format!("({}|{}|{})", k, k - 1, k)
    }
}

impl ZigzagAlgebra {
    /// Builds `A_m^n`.
    pub fn build(m: usize, n: i64) -> Result<ZigzagAlgebra> {
        if m == 0 || n <= 0 {
            return Err(Error::Invalid(format!(
                "A_m^n needs m ≥ 1 and n ≥ 1, got m={m}, n={n}"
            )));
        }
        let mut basis = Vec::new();
        let mut kinds = Vec::new();
        for k in 1..=m {
            let label = if m == 1 {
                "1".to_string()
            } else {
                format!("e_{k}")
            };
            basis.push(BasisElem {
                label,
                src: k,
                tgt: k,
                deg: 0,
            });
            kinds.push(Kind::Idem(k));
        }
        for k in 1..m {
            basis.push(BasisElem {
                label: format!("({}|{})", k + 1, k),
                src: k,
                tgt: k + 1,
                deg: 0,
            });
            kinds.push(Kind::Up(k));
        }
        for k in 1..m {
            basis.push(BasisElem {
                label: format!("({}|{})", k, k + 1),
                src: k + 1,
                tgt: k,
                deg: n,
            });
            kinds.push(Kind::Down(k));
        }
        for k in 1..=m {
            basis.push(BasisElem {
                label: loop_label(m, k),
                src: k,
                tgt: k,
                deg: n,
            });
            kinds.push(Kind::Loop(k));
        }
        let dim = basis.len();
        let index_of = |kind: Kind| kinds.iter().position(|&x| x == kind).unwrap();
        let mut table = vec![vec![None; dim]; dim];
        for x in 0..dim {
            for y in 0..dim {
                if basis[x].src != basis[y].tgt {
                    continue;
                }
                let r = match (kinds[x], kinds[y]) {
                    (Kind::Idem(_), _) => Some(y),
                    (_, Kind::Idem(_)) => Some(x),
                    // (k|k+1)(k+1|k) = (k|k+1|k)
                    (Kind::Down(k), Kind::Up(j)) if k == j => Some(index_of(Kind::Loop(k))),
                    // (k+1|k)(k|k+1) = (k+1|k|k+1)
                    (Kind::Up(k), Kind::Down(j)) if k == j => Some(index_of(Kind::Loop(k + 1))),
                    _ => None,
                };
                table[x][y] = r.map(|z| (z, Q::one()));
            }
        }
        Ok(Self::assemble(m, n, basis, kinds, table))
    }

    fn assemble(
        m: usize,
        n: i64,
        basis: Vec<BasisElem>,
        kinds: Vec<Kind>,
        table: Vec<Vec<Option<(usize, Q)>>>,
    ) -> ZigzagAlgebra {
        let dim = basis.len();
        let idem = (1..=m)
            .map(|k| kinds.iter().position(|&x| x == Kind::Idem(k)).unwrap())
            .collect();
        let by_label = basis
            .iter()
            .enumerate()
            .map(|(i, b)| (b.label.clone(), i))
            .collect();
        let mut factorizations = vec![Vec::new(); dim];
        for x in 0..dim {
            for y in 0..dim {
                if matches!(kinds[x], Kind::Idem(_)) || matches!(kinds[y], Kind::Idem(_)) {
                    continue;
                }
                if let Some((z, c)) = &table[x][y] {
                    factorizations[*z].push((x, y, c.clone()));
                }
            }
        }
        ZigzagAlgebra {
            m,
            n,
            basis,
            kinds,
            table,
            idem,
            by_label,
            factorizations,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn kind(&self, x: usize) -> Kind {
        self.kinds[x]
    }

    pub fn deg(&self, x: usize) -> i64 {
        self.basis[x].deg
    }

    /// Weight of the canonical `C*`-action; equal to the degree.
    pub fn weight(&self, x: usize) -> i64 {
        self.basis[x].deg
    }

    pub fn src(&self, x: usize) -> usize {
        self.basis[x].src
    }

    pub fn tgt(&self, x: usize) -> usize {
        self.basis[x].tgt
    }

    pub fn label(&self, x: usize) -> &str {
        &self.basis[x].label
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    /// Basis index of `e_k`.
    pub fn idempotent(&self, k: usize) -> usize {
        self.idem[k - 1]
    }

    pub fn is_unit(&self, x: usize) -> bool {
        matches!(self.kinds[x], Kind::Idem(_))
    }

    /// Index of the arrow `(k+1|k)`.
    pub fn up(&self, k: usize) -> usize {
        self.m + k - 1
    }

    /// Index of the arrow `(k|k+1)`.
    pub fn down(&self, k: usize) -> usize {
        self.m + (self.m - 1) + k - 1
    }

    /// Index of the loop `ℓ_k`.
    pub fn loop_at(&self, k: usize) -> usize {
        self.m + 2 * (self.m - 1) + k - 1
    }

    /// Product of two basis elements: `x·y = c·z`, or `None` for zero.
    pub fn mul_basis(&self, x: usize, y: usize) -> Option<(usize, &Q)> {
        self.table[x][y].as_ref().map(|(z, c)| (*z, c))
    }

    /// Non-unit factorizations `x·y = c·z` of a basis element `z`.
    pub fn factorizations(&self, z: usize) -> &[(usize, usize, Q)] {
        &self.factorizations[z]
    }

    /// Product of general elements.
    pub fn multiply(&self, a: &SparseVec, b: &SparseVec) -> SparseVec {
        crate::exact::linalg::collect_vec(a.iter().flat_map(|(x, cx)| {
            b.iter()
                .filter_map(move |(y, cy)| self.mul_basis(*x, *y).map(|(z, c)| (z, c * &(cx * cy))))
        }))
    }

    /// Basis of `e_j A e_k`: paths from `k` to `j`.
    pub fn paths(&self, from: usize, to: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&x| self.src(x) == from && self.tgt(x) == to)
            .collect()
    }

    /// Non-unit basis elements.
    pub fn nonunits(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&x| !self.is_unit(x)).collect()
    }

    /// Exhaustive check of the algebra axioms and defining relations.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let dim = self.dim();
        let prod = |a: &SparseVec, b: &SparseVec| self.multiply(a, b);
        let unit = |x: usize| -> SparseVec { vec![(x, Q::one())] };
        // associativity
        for x in 0..dim {
            for y in 0..dim {
                let xy = prod(&unit(x), &unit(y));
                for z in 0..dim {
                    rep.checks += 1;
                    let l = prod(&xy, &unit(z));
                    let r = prod(&unit(x), &prod(&unit(y), &unit(z)));
                    if l != r {
                        return rep.fail(format!(
                            "associativity fails on ({}, {}, {})",
                            self.label(x),
                            self.label(y),
                            self.label(z)
                        ));
                    }
                }
            }
        }
        // grading, path composability
        for x in 0..dim {
            for y in 0..dim {
                rep.checks += 1;
                if let Some((z, _)) = self.mul_basis(x, y) {
                    if self.deg(z) != self.deg(x) + self.deg(y) {
                        return rep.fail(format!(
                            "grading not additive on ({}, {})",
                            self.label(x),
                            self.label(y)
                        ));
                    }
                    if self.src(x) != self.tgt(y)
                        || self.src(z) != self.src(y)
                        || self.tgt(z) != self.tgt(x)
                    {
                        return rep.fail(format!(
                            "nonzero product of non-composable paths ({}, {})",
                            self.label(x),
                            self.label(y)
                        ));
                    }
                }
            }
        }
        // idempotents: orthogonal, sum to the unit
        let one: SparseVec = (1..=self.m)
            .map(|k| (self.idempotent(k), Q::one()))
            .collect();
        let mut one = one;
        one.sort_by_key(|e| e.0);
        for x in 0..dim {
            rep.checks += 1;
            if prod(&one, &unit(x)) != unit(x) || prod(&unit(x), &one) != unit(x) {
                return rep.fail(format!("Σe_k is not a unit on {}", self.label(x)));
            }
        }
        for k in 1..=self.m {
            for l in 1..=self.m {
                rep.checks += 1;
                let p = prod(&unit(self.idempotent(k)), &unit(self.idempotent(l)));
                let want = if k == l {
                    unit(self.idempotent(k))
                } else {
                    Vec::new()
                };
                if p != want {
                    return rep.fail(format!("idempotents e_{k}, e_{l} not orthogonal"));
                }
            }
        }
        // degrees of arrows
        for k in 1..self.m {
            rep.checks += 1;
            if self.deg(self.up(k)) != 0 || self.deg(self.down(k)) != self.n {
                return rep.fail(format!("arrow degrees wrong at k = {k}"));
            }
        }
        // defining relations
        let p3 = |a: usize, b: usize, c: usize| prod(&prod(&unit(a), &unit(b)), &unit(c));
        if self.m >= 3 {
            for k in 1..self.m - 1 {
                rep.checks += 2;
                if !prod(&unit(self.down(k)), &unit(self.down(k + 1))).is_empty() {
                    return rep.fail(format!("relation ({}|{}|{}) = 0 fails", k, k + 1, k + 2));
                }
                if !prod(&unit(self.up(k + 1)), &unit(self.up(k))).is_empty() {
                    return rep.fail(format!("relation ({}|{}|{}) = 0 fails", k + 2, k + 1, k));
                }
            }
            for k in 2..self.m {
                rep.checks += 1;
                let a = prod(&unit(self.down(k)), &unit(self.up(k)));
                let b = prod(&unit(self.up(k - 1)), &unit(self.down(k - 1)));
                if a != b || a.is_empty() {
                    return rep.fail(format!(
                        "relation ({k}|{}|{k}) = ({k}|{}|{k}) fails",
                        k + 1,
                        k - 1
                    ));
                }
            }
        }
        if self.m == 2 {
            rep.checks += 2;
            if !p3(self.down(1), self.up(1), self.down(1)).is_empty() {
                return rep.fail("relation (1|2|1|2) = 0 fails".into());
            }
            if !p3(self.up(1), self.down(1), self.up(1)).is_empty() {
                return rep.fail("relation (2|1|2|1) = 0 fails".into());
            }
        }
        if self.m == 1 {
            rep.checks += 1;
            let t = self.loop_at(1);
            if !prod(&unit(t), &unit(t)).is_empty() {
                return rep.fail("relation t² = 0 fails".into());
            }
        }
        // loops are nonzero and the expected dimension holds
        rep.checks += 1;
        let want = if self.m == 1 { 2 } else { 4 * self.m - 2 };
        if dim != want {
            return rep.fail(format!("dimension {dim} ≠ {want}"));
        }
        rep
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> AlgebraJson {
        let mut products = Vec::new();
        for x in 0..self.dim() {
            for y in 0..self.dim() {
                if let Some((z, c)) = &self.table[x][y] {
                    products.push(ProductJson {
                        left: self.label(x).to_string(),
                        right: self.label(y).to_string(),
                        coeff: c.clone(),
                        result: self.label(*z).to_string(),
                    });
                }
            }
        }
        AlgebraJson {
            m: self.m,
            n: self.n,
            basis: self.basis.clone(),
            products,
        }
    }

    /// Loads an algebra file. The basis must match `build(m, n)`; the product
    /// table is taken from the file as is (run [`validate`](Self::validate)
    /// to check it).
    pub fn from_json(j: &AlgebraJson) -> Result<ZigzagAlgebra> {
        let reference = ZigzagAlgebra::build(j.m, j.n)?;
        if reference.basis != j.basis {
            return Err(Error::Invalid(
                "basis does not match the zigzag algebra".into(),
            ));
        }
        let dim = reference.dim();
        let mut table = vec![vec![None; dim]; dim];
        for p in &j.products {
            let idx = |l: &str| {
                reference
                    .index(l)
                    .ok_or_else(|| Error::Invalid(format!("unknown label {l}")))
            };
            let (x, y, z) = (idx(&p.left)?, idx(&p.right)?, idx(&p.result)?);
            if !p.coeff.is_zero() {
                table[x][y] = Some((z, p.coeff.clone()));
            }
        }
        Ok(Self::assemble(
            j.m,
            j.n,
            reference.basis.clone(),
            reference.kinds.clone(),
            table,
        ))
    }

    /// Overwrites one product entry (fault injection for tests).
    pub fn with_product(&self, x: usize, y: usize, value: Option<(usize, Q)>) -> ZigzagAlgebra {
        let mut table = self.table.clone();
        table[x][y] = value;
        Self::assemble(
            self.m,
            self.n,
            self.basis.clone(),
            self.kinds.clone(),
            table,
        )
    }
}

/// Result of an exhaustive validation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: usize,
    pub first_violation: Option<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    fn fail(mut self, msg: String) -> Self {
        self.first_violation = Some(msg);
        self
    }
}

/// On-disk algebra format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub m: usize,
    pub n: i64,
    pub basis: Vec<BasisElem>,
    pub products: Vec<ProductJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductJson {
    pub left: String,
    pub right: String,
    pub coeff: Q,
    pub result: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let a = ZigzagAlgebra::build(2, 2).unwrap();
        let labels: Vec<&str> = a.basis.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(
            labels,
            ["e_1", "e_2", "(2|1)", "(1|2)", "(1|2|1)", "(2|1|2)"]
        );
        let degs: Vec<i64> = a.basis.iter().map(|b| b.deg).collect();
        assert_eq!(degs, [0, 0, 0, 2, 2, 2]);
        let b = ZigzagAlgebra::build(1, 3).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.deg(b.index("t").unwrap()), 3);
        assert!(ZigzagAlgebra::build(0, 1).is_err());
        assert!(ZigzagAlgebra::build(2, 0).is_err());
    }

    #[test]
    fn products() {
        let a = ZigzagAlgebra::build(3, 2).unwrap();
        let i = |l: &str| a.index(l).unwrap();
        assert_eq!(
            a.mul_basis(i("(2|1)"), i("e_1")).map(|p| p.0),
            Some(i("(2|1)"))
        );
        assert_eq!(a.mul_basis(i("(3|2)"), i("(2|1)")), None);
        assert_eq!(
            a.mul_basis(i("(1|2)"), i("(2|1)")).map(|p| p.0),
            Some(i("(1|2|1)"))
        );
        assert_eq!(
            a.mul_basis(i("(2|1)"), i("(1|2)")).map(|p| p.0),
            Some(i("(2|3|2)"))
        );
        assert_eq!(
            a.mul_basis(i("(3|2)"), i("(2|3)")).map(|p| p.0),
            Some(i("(3|2|3)"))
        );
        assert_eq!(a.mul_basis(i("(2|1)"), i("(2|1)")), None);
    }

    #[test]
    fn fault_is_named() {
        let a = ZigzagAlgebra::build(2, 2).unwrap();
        let bad = a.with_product(a.down(1), a.up(1), Some((a.loop_at(2), Q::one())));
        let rep = bad.validate();
        assert!(!rep.passed());
        assert!(rep.first_violation.unwrap().contains("(1|2)"));
    }

    #[test]
    fn json_round_trip() {
        let a = ZigzagAlgebra::build(3, 2).unwrap();
        let j = a.to_json();
        let s = serde_json::to_string(&j).unwrap();
        let back: AlgebraJson = serde_json::from_str(&s).unwrap();
        assert_eq!(ZigzagAlgebra::from_json(&back).unwrap(), a);
    }
}
