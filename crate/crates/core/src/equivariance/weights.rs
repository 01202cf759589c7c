//! Weight decomposition of the induced representation on cohomology.
//!
//! `ρ^1(z) = Σ_e z^e Λ_e` is a chain map for every `z`; when the action
//! equations hold, the classes `R_e = [Λ_e]` on `H(M)` are orthogonal
//! idempotents summing to the identity, which is the statement that
//! `ρ^1` induces a rational representation of `G` on `H(M)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{FiniteComplex, SparseMatrix, Q};

use super::family::{Family, SemiFree};

/// `degree → weight → multiplicity`.
pub type WeightTable = BTreeMap<i64, BTreeMap<i64, usize>>;

/// Result of [`weight_decomposition`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightDecomposition {
    pub weights: WeightTable,
    /// `R_e R_f = δ_{ef} R_e` and `Σ_e R_e = 1` on every degree.
    pub representation: bool,
}

impl WeightDecomposition {
    /// Flat `(degree, weight)` multiset.
    pub fn multiset(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for (t, ws) in &self.weights {
            for (w, d) in ws {
                out.extend(std::iter::repeat_n((*t, *w), *d));
            }
        }
        out
    }
}

fn is_zero(m: &SparseMatrix) -> bool {
    m.entries().all(|(_, _, c)| c.is_zero())
}

fn sub(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    let mut out = a.clone();
    for (i, j, c) in b.entries() {
        out.add_to(i, j, &-c);
    }
    out
}

/// Weight spaces of the representation induced by `ρ^1` on `H(M)`.
pub fn weight_decomposition(m: &SemiFree, rho1: &Family) -> Result<WeightDecomposition> {
    if rho1.vars != 1 || rho1.deg != 0 {
        return Err(Error::Invalid(
            "ρ^1 must be a one-variable family of degree 0".into(),
        ));
    }
    let alg = &*m.alg;
    let u = m.underlying();
    let coh = u.complex.cohomology();
    let Some((lo, hi)) = rho1.exponent_range() else {
        return Err(Error::Invalid("ρ^1 is zero".into()));
    };
    let max_w = (0..alg.dim()).map(|p| alg.weight(p)).max().unwrap_or(0) as i32;
    let mut projectors: BTreeMap<i64, BTreeMap<i64, SparseMatrix>> = BTreeMap::new();
    for e in lo..=hi + max_w {
        let r = u.induced(&coh, &|i| u.apply_coefficient(alg, rho1, e, i))?;
        for (t, mat) in r {
            if !is_zero(&mat) {
                projectors.entry(t).or_default().insert(e as i64, mat);
            }
        }
    }
    let mut representation = true;
    let mut weights = WeightTable::new();
    for (&t, hd) in &coh.degrees {
        if hd.dim() == 0 {
            continue;
        }
        let empty = BTreeMap::new();
        let ps = projectors.get(&t).unwrap_or(&empty);
        let mut total = SparseMatrix::zero(hd.dim(), hd.dim());
        for (e, p) in ps {
            for (i, j, c) in p.entries() {
                total.add_to(i, j, c);
            }
            for (f, q) in ps {
                let prod = p.mul(q)?;
                let ok = if e == f {
                    is_zero(&sub(&prod, p))
                } else {
                    is_zero(&prod)
                };
                representation &= ok;
            }
            let rank = p.rank();
            if rank > 0 {
                weights.entry(t).or_default().insert(*e, rank);
            }
        }
        representation &= is_zero(&sub(&total, &SparseMatrix::identity(hd.dim())));
    }
    Ok(WeightDecomposition {
        weights,
        representation,
    })
}

/// Cohomology of a module with a known lift, split by the lift's weight
/// `i_x + w(p)`.
pub fn lift_weights(m: &SemiFree) -> Option<WeightTable> {
    let lift = m.lift.as_ref()?;
    let alg = &*m.alg;
    let u = m.underlying();
    let weight: Vec<i64> = u
        .basis
        .iter()
        .map(|&(a, p)| lift[a] + alg.weight(p))
        .collect();
    let mut by_weight: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, w) in weight.iter().enumerate() {
        by_weight.entry(*w).or_default().push(i);
    }
    let mut out = WeightTable::new();
    for (w, idx) in by_weight {
        let lo = idx.iter().map(|&i| u.deg[i]).min()?;
        let hi = idx.iter().map(|&i| u.deg[i]).max()?;
        let mut local = BTreeMap::new();
        let mut dims = vec![0usize; (hi - lo + 1) as usize];
        for &i in &idx {
            let k = (u.deg[i] - lo) as usize;
            local.insert(i, dims[k]);
            dims[k] += 1;
        }
        let mut cx = FiniteComplex::new(lo, dims);
        let d = m.differential();
        for &i in &idx {
            if u.deg[i] == hi {
                continue;
            }
            let mut col: Vec<(usize, Q)> = u
                .apply_const(alg, &d, i)
                .into_iter()
                .map(|(j, c)| {
                    (
                        *local
                            .get(&j)
                            .expect("differential preserves the lift weight"),
                        c,
                    )
                })
                .collect();
            col.sort_by_key(|e| e.0);
            cx.set_column(u.deg[i], local[&i], col);
        }
        for (t, dim) in cx.cohomology_dims() {
            if dim > 0 {
                out.entry(t).or_default().insert(w, dim);
            }
        }
    }
    Some(out)
}

/// The uniform shift `s` with `found(t, w + s) = lift(t, w)`, if any.
pub fn match_up_to_shift(found: &WeightTable, lift: &WeightTable) -> Option<i64> {
    let first = |t: &WeightTable| t.values().flat_map(|ws| ws.keys().copied()).min();
    let s = first(found)? - first(lift)?;
    let shifted: WeightTable = lift
        .iter()
        .map(|(t, ws)| (*t, ws.iter().map(|(w, d)| (w + s, *d)).collect()))
        .collect();
    (shifted == *found).then_some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::action::{naive_action, weak_action_solve, ActionOptions};
    use crate::equivariance::killing::solve_killing;
    use crate::twisted::{apply_braid, ext_table, TwistedComplex};
    use crate::zigzag::ZigzagAlgebra;
    use std::sync::Arc;

    #[test]
    fn projective_weights_are_path_degrees() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let m = SemiFree::from_twisted(&TwistedComplex::projective(&a, 1, 0, 0));
        let wd = weight_decomposition(&m, &naive_action(&m).unwrap()).unwrap();
        assert!(wd.representation);
        let mut want = WeightTable::new();
        for p in 0..a.dim() {
            if a.tgt(p) == 1 {
                *want
                    .entry(a.deg(p))
                    .or_default()
                    .entry(a.weight(p))
                    .or_default() += 1;
            }
        }
        assert_eq!(wd.weights, want);
    }

    #[test]
    fn lift_table_agrees_with_projective_probes() {
        // e_k H(C) in weight s is hom(P_k{s}, C)
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = apply_braid(
            &"1 -2".parse().unwrap(),
            &TwistedComplex::projective(&a, 1, 0, 0),
        )
        .unwrap();
        let table = lift_weights(&SemiFree::from_twisted(&c)).unwrap();
        let mut probe = WeightTable::new();
        for k in 1..=2 {
            for ((s, t), d) in ext_table(&TwistedComplex::projective(&a, k, 0, 0), &c) {
                if d > 0 {
                    *probe.entry(t).or_default().entry(s).or_default() += d;
                }
            }
        }
        assert!(
            match_up_to_shift(&table, &probe).is_some(),
            "{table:?} vs {probe:?}"
        );
    }

    #[test]
    fn solved_action_matches_lift() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = apply_braid(
            &"2 1 1".parse().unwrap(),
            &TwistedComplex::projective(&a, 2, 0, 0),
        )
        .unwrap();
        let m = SemiFree::from_twisted(&c);
        let plain = m.forget_lift();
        let alpha = solve_killing(&plain).alpha.unwrap();
        let weak = weak_action_solve(&plain, &alpha, &ActionOptions::default()).unwrap();
        let wd = weight_decomposition(&plain, &weak.rho1).unwrap();
        assert!(wd.representation);
        assert!(match_up_to_shift(&wd.weights, &lift_weights(&m).unwrap()).is_some());
    }
}
