//! Rational representations of `G = C*` and their bar and group-cochain
//! complexes in Laurent coordinates.
//!
//! A cochain of level `r` is a finite sum `Σ c · z^e ⊗ v` with `e` an
//! exponent tuple `(e_1, …, e_r)`, `e_1` belonging to the group element that
//! acts first. The merge `g_{q+1} g_q` duplicates exponent `q`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exact::{FiniteComplex, Q};
use crate::multimap::Mono;

/// Finite-dimensional rational representation: weight → multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRep {
    pub dims: BTreeMap<i64, usize>,
}

impl RationalRep {
    pub fn new(dims: impl IntoIterator<Item = (i64, usize)>) -> RationalRep {
        RationalRep {
            dims: dims.into_iter().filter(|(_, d)| *d > 0).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.values().sum()
    }

    /// Dimension of the invariants `V^G` (the weight-0 space).
    pub fn invariants(&self) -> usize {
        self.dims.get(&0).copied().unwrap_or(0)
    }

    /// Random representation with weights in `[lo, hi]`.
    pub fn random(rng: &mut impl Rng, lo: i64, hi: i64, max_dim: usize) -> RationalRep {
        let k = rng.gen_range(1..=3);
        RationalRep::new((0..k).map(|_| (rng.gen_range(lo..=hi), rng.gen_range(1..=max_dim))))
    }
}

/// Laurent cochain with values in a one-dimensional weight space.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupCochain {
    pub vars: usize,
    pub terms: BTreeMap<Mono, Q>,
}

impl GroupCochain {
    pub fn zero(vars: usize) -> GroupCochain {
        GroupCochain {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(mono: Mono, c: Q) -> GroupCochain {
        let mut g = GroupCochain::zero(mono.len());
        g.add(mono, c);
        g
    }

    pub fn add(&mut self, mono: Mono, c: Q) {
        debug_assert_eq!(mono.len(), self.vars);
        let e = self.terms.entry(mono.clone()).or_insert_with(Q::zero);
        *e += &c;
        if e.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Pullback along `g_{q+1} g_q` (1-based `q ≤ vars`).
    pub fn merge(&self, q: usize) -> GroupCochain {
        let mut out = GroupCochain::zero(self.vars + 1);
        for (mo, c) in &self.terms {
            let mut m2 = Mono::new();
            for (j, e) in mo.iter().enumerate() {
                m2.push(*e);
                if j + 1 == q {
                    m2.push(*e);
                }
            }
            out.add(m2, c.clone());
        }
        out
    }

    /// Multiplies by `g_{new}^w` for a new top variable.
    pub fn act_top(&self, w: i64) -> GroupCochain {
        let mut out = GroupCochain::zero(self.vars + 1);
        for (mo, c) in &self.terms {
            let mut m2 = mo.clone();
            m2.push(w as i32);
            out.add(m2, c.clone());
        }
        out
    }

    /// Adds a new bottom variable on which the cochain does not depend.
    pub fn drop_bottom(&self) -> GroupCochain {
        let mut out = GroupCochain::zero(self.vars + 1);
        for (mo, c) in &self.terms {
            let mut m2 = Mono::new();
            m2.push(0);
            m2.extend_from_slice(mo);
            out.add(m2, c.clone());
        }
        out
    }

    fn add_scaled(&mut self, f: &Q, other: &GroupCochain) {
        for (mo, c) in &other.terms {
            self.add(mo.clone(), f * c);
        }
    }
}

/// Bar differential on a weight-`w` component: `b` of level `r − 1` has
/// `r` variables and
/// `(δb)(g_{r+1}..g_1) = Σ_{q=1}^{r} (−1)^q b(…g_{q+1}g_q…) + (−1)^{r+1} g_{r+1}^w b(g_r..g_1)`.
pub fn bar_d(b: &GroupCochain, w: i64) -> GroupCochain {
    let r = b.vars;
    let mut out = GroupCochain::zero(r + 1);
    for q in 1..=r {
        out.add_scaled(&Q::sign(q as i64), &b.merge(q));
    }
    out.add_scaled(&Q::sign(r as i64 + 1), &b.act_top(w));
    out
}

/// Group-cochain differential on a weight-`w` component, `c` with `r − 1`
/// variables:
/// `(δc)(g_r..g_1) = c(g_r..g_2) + Σ_{q=1}^{r−1} (−1)^q c(…g_{q+1}g_q…) + (−1)^r g_r^w c(g_{r−1}..g_1)`.
pub fn cochain_d(c: &GroupCochain, w: i64) -> GroupCochain {
    let r = c.vars + 1;
    let mut out = c.drop_bottom();
    for q in 1..r {
        out.add_scaled(&Q::sign(q as i64), &c.merge(q));
    }
    out.add_scaled(&Q::sign(r as i64), &c.act_top(w));
    out
}

/// Which complex to truncate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupComplexKind {
    Bar,
    Cochain,
}

fn monomials(values: &[i32], vars: usize) -> Vec<Mono> {
    let mut out = vec![Mono::new()];
    for _ in 0..vars {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for m in &out {
            for &v in values {
                let mut m2 = m.clone();
                m2.push(v);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// Truncation of a complex for one weight `w` to exponents in `{0, w}`,
/// levels `0..=top`. Both complexes are closed under this truncation.
pub fn truncated_complex(kind: GroupComplexKind, w: i64, top: usize) -> FiniteComplex {
    let values: Vec<i32> = BTreeSet::from([0, w as i32]).into_iter().collect();
    let offset = match kind {
        GroupComplexKind::Bar => 1,
        GroupComplexKind::Cochain => 0,
    };
    let bases: Vec<Vec<Mono>> = (0..=top).map(|r| monomials(&values, r + offset)).collect();
    let index: Vec<BTreeMap<Mono, usize>> = bases
        .iter()
        .map(|b| b.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect())
        .collect();
    let mut cx = FiniteComplex::new(0, bases.iter().map(|b| b.len()).collect());
    for r in 0..top {
        for (j, m) in bases[r].iter().enumerate() {
            let c = GroupCochain::monomial(m.clone(), Q::one());
            let d = match kind {
                GroupComplexKind::Bar => bar_d(&c, w),
                GroupComplexKind::Cochain => cochain_d(&c, w),
            };
            let mut col: Vec<(usize, Q)> = d
                .terms
                .into_iter()
                .map(|(mo, c)| (index[r + 1][&mo], c))
                .collect();
            col.sort_by_key(|e| e.0);
            cx.set_column(r as i64, j, col);
        }
    }
    cx
}

/// Result of [`verify_group_cohomology`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCohomologyReport {
    /// Levels `0..certified` are certified (the top level is a truncation
    /// artifact).
    pub certified: usize,
    pub bar: BTreeMap<usize, usize>,
    pub cochain: BTreeMap<usize, usize>,
    pub expected_bar: usize,
    pub expected_cochain: usize,
    pub holds: bool,
}

/// Computes the truncated bar and cochain cohomology of `v` in levels
/// below `top` and compares with `V` and `V^G` (concentrated in level 0).
pub fn verify_group_cohomology(v: &RationalRep, top: usize) -> GroupCohomologyReport {
    let mut bar: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cochain: BTreeMap<usize, usize> = BTreeMap::new();
    for (&w, &mult) in &v.dims {
        for (kind, acc) in [
            (GroupComplexKind::Bar, &mut bar),
            (GroupComplexKind::Cochain, &mut cochain),
        ] {
            let cx = truncated_complex(kind, w, top);
            for (r, d) in cx.cohomology_dims() {
                if (r as usize) < top {
                    *acc.entry(r as usize).or_default() += d * mult;
                }
            }
        }
    }
    let expected_bar = v.dim();
    let expected_cochain = v.invariants();
    let conc = |m: &BTreeMap<usize, usize>, e: usize| {
        m.iter().all(|(r, d)| *r == 0 || *d == 0) && m.get(&0).copied().unwrap_or(0) == e
    };
    let holds = conc(&bar, expected_bar) && conc(&cochain, expected_cochain);
    GroupCohomologyReport {
        certified: top,
        bar,
        cochain,
        expected_bar,
        expected_cochain,
        holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use smallvec::smallvec;

    #[test]
    fn differentials_square_to_zero() {
        for w in [-2, 0, 3] {
            let c = GroupCochain::monomial(smallvec![1, -2], Q::from(3));
            assert!(bar_d(&bar_d(&c, w), w).is_zero());
            assert!(cochain_d(&cochain_d(&c, w), w).is_zero());
        }
    }

    #[test]
    fn invariants_only_in_weight_zero() {
        let r = verify_group_cohomology(&RationalRep::new([(0, 1)]), 4);
        assert!(r.holds);
        assert_eq!(r.cochain, BTreeMap::from([(0, 1)]));
        let r = verify_group_cohomology(&RationalRep::new([(3, 1)]), 4);
        assert!(r.holds);
        assert!(r.cochain.values().all(|d| *d == 0));
        let r = verify_group_cohomology(&RationalRep::new([(-1, 1), (0, 2), (2, 1)]), 4);
        assert!(r.holds);
        assert_eq!(r.cochain.get(&0), Some(&2));
        assert_eq!(r.bar.get(&0), Some(&4));
    }

    #[test]
    fn weight_three_contraction() {
        // a nonzero weight is acyclic below the top level
        let cx = truncated_complex(GroupComplexKind::Cochain, 3, 5);
        let dims = cx.cohomology_dims();
        assert!(dims.keys().all(|&r| r == 5));
    }

    #[test]
    fn random_reps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let v = RationalRep::random(&mut rng, -5, 5, 3);
            assert!(verify_group_cohomology(&v, 4).holds, "{v:?}");
        }
    }
}
