//! Truncated strictification of a homotopy action.
//!
//! `M^naive = ⊕_r ℂ[G]^{⊗ r+1} ⊗ M[−r]` with elements `β = (β^{r+1})`,
//! `β^{r+1}` a Laurent polynomial in `r + 1` variables with values in `M`
//! placed in degree `|m| + r`. The differential in level `r` is
//!
//! `(−1)^r [dβ^{r+1} + (−1)^{r+1} Σ_q (−1)^q m_q*β^r − Σ_q (−1)^{r+1−q} ρ^{r+1−q}∘β^q]`,
//!
//! and `G` acts by translation in the lowest variable, so the exponent
//! `e_1` is a weight. Elements with `r` above a cap or an exponent outside
//! a box form a subcomplex; the truncation is the quotient. In total
//! degrees below `lo(M) + cap` the cap does not interfere.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::linalg::rank_of;
use crate::exact::{FiniteComplex, SparseVec, Q};
use crate::multimap::Mono;

use super::action::HomotopyAction;
use super::family::{Family, SemiFree, Underlying};
use super::weights::{weight_decomposition, WeightTable};

/// Truncation parameters.
#[derive(Clone, Copy, Debug)]
pub struct StrictOptions {
    /// Highest bar level kept.
    pub bar_cap: usize,
    /// Margin added around the weights of `H(M)` and `0`.
    pub pad: i32,
}

impl Default for StrictOptions {
    fn default() -> Self {
        StrictOptions { bar_cap: 2, pad: 1 }
    }
}

/// Result of [`strictify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strictification {
    pub bar_cap: usize,
    pub exponent_box: (i32, i32),
    /// Total degrees where the truncation is certified.
    pub certified_window: (i64, i64),
    /// `H` of the truncation: degree → weight → dimension.
    pub truncated: WeightTable,
    /// `H(M)` split by the weights of the induced representation.
    pub module: WeightTable,
    pub differential_ok: bool,
    pub cohomology_matches: bool,
    /// `φ` induces an isomorphism in the certified window.
    pub phi_iso: bool,
    /// `β ↦ β^1(e)` composed with `φ` is the identity of `M`.
    pub splits: bool,
}

impl Strictification {
    pub fn passed(&self) -> bool {
        self.differential_ok && self.cohomology_matches && self.phi_iso && self.splits
    }
}

type Elem = (usize, Mono, usize);

struct Ctx<'a> {
    m: &'a SemiFree,
    u: &'a Underlying,
    rho: &'a [Family],
    cap: usize,
    lo: i32,
    hi: i32,
}

impl Ctx<'_> {
    fn in_box(&self, mono: &Mono) -> bool {
        mono.iter().all(|e| *e >= self.lo && *e <= self.hi)
    }

    /// `f` applied to `z^e ⊗ v_i`, the new variables on top.
    fn apply(&self, f: &Family, e: &Mono, i: usize, c: &Q, out: &mut BTreeMap<Elem, Q>) {
        let alg = &*self.m.alg;
        let (a, p) = self.u.basis[i];
        let shift = alg.weight(p) as i32;
        let r = e.len() + f.vars - 1;
        if r > self.cap {
            return;
        }
        for ((_, b, y), coeffs) in f.terms_from(a) {
            let Some((q, k)) = alg.mul_basis(*y, p) else {
                continue;
            };
            let j = self.u.index[&(*b, q)];
            for (mo, x) in coeffs {
                let mut m2 = e.clone();
                m2.extend(mo.iter().map(|v| v + shift));
                if self.in_box(&m2) {
                    *out.entry((r, m2, j)).or_insert_with(Q::zero) += &(&(x * k) * c);
                }
            }
        }
    }

    /// Differential of a basis element in level `r`.
    fn d(&self, (r, e, i): &Elem) -> BTreeMap<Elem, Q> {
        let mut out: BTreeMap<Elem, Q> = BTreeMap::new();
        let sign = Q::sign(*r as i64);
        for (j, c) in self.u.complex_image(*i) {
            *out.entry((*r, e.clone(), j)).or_insert_with(Q::zero) += &(&sign * &c);
        }
        if *r < self.cap {
            for q in 1..=r + 1 {
                let mut m2 = Mono::new();
                for (j, v) in e.iter().enumerate() {
                    m2.push(*v);
                    if j + 1 == q {
                        m2.push(*v);
                    }
                }
                *out.entry((r + 1, m2, *i)).or_insert_with(Q::zero) -= &Q::sign(q as i64);
            }
        }
        for k in 1..=self.rho.len() {
            let lvl = r + k;
            if lvl > self.cap {
                break;
            }
            let c = -(&Q::sign(lvl as i64) * &Q::sign(k as i64));
            self.apply(&self.rho[k - 1], e, *i, &c, &mut out);
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

impl Underlying {
    /// Differential of basis vector `i` in global coordinates.
    pub fn complex_image(&self, i: usize) -> SparseVec {
        let k = self.deg[i];
        if k >= self.complex.hi() {
            return Vec::new();
        }
        let idx = self.in_degree(k + 1);
        self.complex
            .apply(k, &vec![(self.local[i], Q::one())])
            .into_iter()
            .map(|(l, c)| (idx[l], c))
            .collect()
    }
}

fn boxes(lo: i32, hi: i32, len: usize) -> Vec<Mono> {
    let mut out = vec![Mono::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for m in &out {
            for v in lo..=hi {
                let mut m2 = m.clone();
                m2.push(v);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// Builds the truncation, compares its cohomology with `H(M)` in the
/// certified window, and checks the comparison map and its splitting.
pub fn strictify(
    m: &SemiFree,
    action: &HomotopyAction,
    opts: &StrictOptions,
) -> Result<Strictification> {
    let u = m.underlying();
    let wd = weight_decomposition(m, &action.rho[0])?;
    let (lo_m, _) = m
        .degree_range()
        .ok_or_else(|| Error::Invalid("empty module".into()))?;
    let lo_u = u.complex.lo;
    let wlo = wd
        .weights
        .values()
        .flat_map(|w| w.keys().copied())
        .min()
        .unwrap_or(0)
        .min(0) as i32;
    let whi = wd
        .weights
        .values()
        .flat_map(|w| w.keys().copied())
        .max()
        .unwrap_or(0)
        .max(0) as i32;
    let (blo, bhi) = (wlo - opts.pad, whi + opts.pad);
    let cap = opts.bar_cap;
    let top = lo_u + cap as i64;
    let certified = (lo_u, top - 1);
    if lo_m > top - 1 {
        return Err(Error::Invalid("no certified degree for this cap".into()));
    }
    let ctx = Ctx {
        m,
        u: &u,
        rho: &action.rho,
        cap,
        lo: blo,
        hi: bhi,
    };
    let coh_m = u.complex.cohomology();
    let mut truncated = WeightTable::new();
    let mut differential_ok = true;
    let mut phi_iso = true;
    for e1 in blo..=bhi {
        // basis by total degree
        let mut bases: Vec<Vec<Elem>> = vec![Vec::new(); cap + 1];
        for r in 0..=cap {
            for rest in boxes(blo, bhi, r) {
                let mut mono = Mono::from_slice(&[e1]);
                mono.extend(rest.iter().copied());
                for (i, d) in u.deg.iter().enumerate() {
                    let t = d + r as i64;
                    if t >= lo_u && t <= top {
                        bases[(t - lo_u) as usize].push((r, mono.clone(), i));
                    }
                }
            }
        }
        let index: Vec<HashMap<Elem, usize>> = bases
            .iter()
            .map(|b| b.iter().cloned().enumerate().map(|(j, x)| (x, j)).collect())
            .collect();
        let mut cx = FiniteComplex::new(lo_u, bases.iter().map(|b| b.len()).collect());
        for t in lo_u..top {
            let k = (t - lo_u) as usize;
            for (j, el) in bases[k].iter().enumerate() {
                let mut col: SparseVec = ctx
                    .d(el)
                    .into_iter()
                    .map(|(x, c)| {
                        (
                            *index[k + 1]
                                .get(&x)
                                .expect("differential raises degree by one"),
                            c,
                        )
                    })
                    .collect();
                col.sort_by_key(|x| x.0);
                cx.set_column(t, j, col);
            }
        }
        if cx.check_d_squared().is_err() {
            differential_ok = false;
            continue;
        }
        let coh = cx.cohomology();
        for t in certified.0..=certified.1 {
            let hd = coh.degree(t).map(|h| h.dim()).unwrap_or(0);
            if hd > 0 {
                truncated.entry(t).or_default().insert(e1 as i64, hd);
            }
            // images of H^t(M) under φ, restricted to this weight
            let Some(hm) = coh_m.degree(t) else {
                phi_iso &= hd == 0;
                continue;
            };
            let idx_m = u.in_degree(t);
            let mut images = Vec::new();
            for rep in &hm.reps {
                let mut acc: BTreeMap<Elem, Q> = BTreeMap::new();
                for (l, c) in rep {
                    for f in action.rho.iter() {
                        ctx.apply(f, &Mono::new(), idx_m[*l], c, &mut acc);
                    }
                }
                let k = (t - lo_u) as usize;
                let mut v: SparseVec = acc
                    .into_iter()
                    .filter(|((_, mo, _), c)| mo[0] == e1 && !c.is_zero())
                    .map(|(x, c)| (index[k][&x], c))
                    .collect();
                v.sort_by_key(|x| x.0);
                match coh.degree(t).map(|h| h.project(&v)) {
                    Some(Ok(p)) => images.push(
                        p.into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .collect::<SparseVec>(),
                    ),
                    Some(Err(_)) => phi_iso = false,
                    None => {}
                }
            }
            phi_iso &= rank_of(hd, &images) == hd;
        }
    }
    let module: WeightTable = wd
        .weights
        .iter()
        .filter(|(t, _)| **t >= certified.0 && **t <= certified.1)
        .map(|(t, w)| (*t, w.clone()))
        .collect();
    let cohomology_matches = module == truncated;
    phi_iso &= cohomology_matches;
    let splits = action.rho[0].at_identity() == m.identity();
    Ok(Strictification {
        bar_cap: cap,
        exponent_box: (blo, bhi),
        certified_window: certified,
        truncated,
        module,
        differential_ok,
        cohomology_matches,
        phi_iso,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::action::{homotopy_extend, naive_action, verify_weak, ActionOptions};
    use crate::twisted::{apply_braid, TwistedComplex};
    use crate::zigzag::ZigzagAlgebra;
    use std::sync::Arc;

    fn action(m: &SemiFree, rho1: &Family) -> HomotopyAction {
        let opts = ActionOptions::default();
        let rho2 = verify_weak(m, rho1, &opts).unwrap();
        homotopy_extend(m, rho1, &rho2, &opts).unwrap()
    }

    #[test]
    fn naive_projective() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let m = SemiFree::from_twisted(&TwistedComplex::projective(&a, 1, 0, 0));
        let act = action(&m, &naive_action(&m).unwrap());
        let s = strictify(&m, &act, &StrictOptions { bar_cap: 3, pad: 1 }).unwrap();
        assert!(s.passed(), "{s:?}");
    }

    #[test]
    fn braid_image() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = apply_braid(
            &"1 -2".parse().unwrap(),
            &TwistedComplex::projective(&a, 1, 0, 0),
        )
        .unwrap();
        let m = SemiFree::from_twisted(&c);
        let act = action(&m, &naive_action(&m).unwrap());
        let s = strictify(&m, &act, &StrictOptions::default()).unwrap();
        assert!(s.passed(), "{s:?}");
    }
}
