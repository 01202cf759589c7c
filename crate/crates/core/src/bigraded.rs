//! Bigraded modules, the collapse to total degree, and scale transfer.
//!
//! A bigraded module stores for every basis vector its total degree
//! `t = r + s` and its second degree `s` (the weight). `[1]` lowers `r`,
//! `{1}` raises `s`; structure maps have bidegree `(1 − d, 0)`, so they
//! preserve the weight of `m ⊗ a_d ⊗ … ⊗ a_1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::linalg::rank_of;
use crate::exact::SparseVec;
use crate::module::{AInfModule, HomComplex, HomSpec};
use crate::multimap::word_weight;
use crate::twisted::{ext_table, TwistedComplex};
use crate::zigzag::ZigzagAlgebra;

/// A module whose every basis vector carries a weight preserved by the
/// structure maps.
#[derive(Clone, Debug)]
pub struct BigradedModule {
    module: AInfModule,
}

impl BigradedModule {
    /// Checks that every generator has a weight and that `μ` preserves it.
    pub fn new(module: AInfModule) -> Result<BigradedModule> {
        if !module.is_bigraded() {
            return Err(Error::Invalid(
                "every basis vector needs a second degree".into(),
            ));
        }
        let alg = &*module.alg;
        for (inp, _, o, _) in module.mu.iter() {
            let w_in = module.weight(inp.m).unwrap_or(0) + word_weight(alg, &inp.word);
            if module.weight(o) != Some(w_in) {
                return Err(Error::Invalid(format!(
                    "structure map on {} changes the weight",
                    module.describe(inp)
                )));
            }
        }
        Ok(BigradedModule { module })
    }

    /// `P_k` with bidegrees `(0, |p|)`.
    pub fn projective(alg: &Arc<ZigzagAlgebra>, k: usize) -> BigradedModule {
        BigradedModule {
            module: AInfModule::projective(alg, k),
        }
    }

    pub fn from_twisted(c: &TwistedComplex) -> BigradedModule {
        BigradedModule {
            module: c.to_module(),
        }
    }

    pub fn module(&self) -> &AInfModule {
        &self.module
    }

    /// `(r, s)` of basis vector `i`.
    pub fn bidegree(&self, i: usize) -> (i64, i64) {
        let g = &self.module.gens[i];
        let s = g.weight.expect("bigraded");
        (g.deg - s, s)
    }

    /// `𝐌[t]`.
    pub fn shift(&self, t: i64) -> BigradedModule {
        BigradedModule {
            module: self.module.shift(t),
        }
    }

    /// `𝐌{s}`.
    pub fn shift_internal(&self, s: i64) -> BigradedModule {
        BigradedModule {
            module: self.module.shift_internal(s),
        }
    }

    /// The module in total degree, second grading forgotten.
    pub fn collapse(&self) -> AInfModule {
        let mut out = self.module.clone();
        for g in &mut out.gens {
            g.weight = None;
        }
        out
    }

    /// Reinterprets the second grading over `A_m^{n'}`: weights
    /// `w = r + nq ↦ r + n'q` for the common residue `r` of the weights mod
    /// `n`; `r` and structure constants unchanged.
    pub fn scale_transfer(&self, n_new: i64) -> Result<BigradedModule> {
        let alg = &self.module.alg;
        let n = alg.n;
        let target = Arc::new(ZigzagAlgebra::build(alg.m, n_new)?);
        let mut out = self.module.clone();
        out.alg = target;
        let Some(res) = self
            .module
            .gens
            .iter()
            .filter_map(|g| g.weight)
            .next()
            .map(|w| w.rem_euclid(n))
        else {
            return Ok(BigradedModule { module: out });
        };
        for g in &mut out.gens {
            let w = g.weight.expect("bigraded");
            if w.rem_euclid(n) != res {
                return Err(Error::Invalid(
                    "mixed residues: the module is decomposable".into(),
                ));
            }
            let w2 = res + n_new * (w - res).div_euclid(n);
            g.deg += w2 - w;
            g.weight = Some(w2);
        }
        let rep = out.validate();
        if let Some(v) = rep.first_violation {
            return Err(Error::CheckFailed(format!(
                "transferred structure maps fail: {v}"
            )));
        }
        BigradedModule::new(out)
    }
}

/// One total degree of [`collapse_hom_compare`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseRow {
    /// `j → dim H^{k−j}(hom(𝐌0{j}, 𝐌1))`.
    pub graded: BTreeMap<i64, usize>,
    /// Rank of the sum of the graded pieces inside `H^k(hom(M0, M1))`.
    pub image_rank: usize,
    /// `dim H^k(hom(M0, M1))` from a perfect presentation, when known.
    pub total: Option<usize>,
}

/// Comparison between bigraded and collapsed morphism spaces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub rows: BTreeMap<i64, CollapseRow>,
    pub injective: bool,
    /// Set when a perfect presentation of both sides is supplied.
    pub bijective: Option<bool>,
}

/// Longest composable non-unit word of weight `≤ w`.
fn arity_bound(alg: &ZigzagAlgebra, w: i64) -> usize {
    if w < 0 {
        return 0;
    }
    let heavy = (w / alg.n) as usize;
    heavy + (alg.m - 1) * (heavy + 1)
}

/// Compares `⊕_j H^{k−j}(hom(𝐌0{j}, 𝐌1))` with `H^k(hom(M0, M1))` for
/// `k` in `degrees` and `j` in `shifts`. With presentations of both
/// modules as twisted complexes the collapsed side is also computed from
/// the finite twisted hom complex.
pub fn collapse_hom_compare(
    b0: &BigradedModule,
    b1: &BigradedModule,
    degrees: (i64, i64),
    shifts: (i64, i64),
    presentations: Option<(&TwistedComplex, &TwistedComplex)>,
) -> CollapseReport {
    let (m0, m1) = (&b0.module, &b1.module);
    let alg = &*m0.alg;
    let wmin0 = m0.gens.iter().filter_map(|g| g.weight).min().unwrap_or(0);
    let wmax1 = m1.gens.iter().filter_map(|g| g.weight).max().unwrap_or(0);
    let bound = |j: i64| arity_bound(alg, wmax1 - wmin0 - j);
    let cap = (shifts.0..=shifts.1).map(bound).max().unwrap_or(0);
    let total = HomComplex::build(
        m0,
        m1,
        degrees.0 - 1,
        degrees.1 + 1,
        &HomSpec {
            max_arity: cap,
            weight_shift: None,
        },
    );
    let total_h = total.complex.cohomology();
    let index: Vec<BTreeMap<_, usize>> = total
        .bases
        .iter()
        .map(|b| b.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect())
        .collect();
    let twisted = presentations.map(|(c0, c1)| ext_table(c0, c1));
    let mut rep = CollapseReport {
        injective: true,
        ..Default::default()
    };
    for k in degrees.0..=degrees.1 {
        let mut row = CollapseRow::default();
        let mut images: Vec<SparseVec> = Vec::new();
        let slot = (k - total.lo) as usize;
        for j in shifts.0..=shifts.1 {
            let spec = HomSpec {
                max_arity: bound(j),
                weight_shift: Some(j),
            };
            let part = HomComplex::build(m0, m1, k - 1, k + 1, &spec);
            let h = part.complex.cohomology();
            let Some(hk) = h.degree(k) else { continue };
            if hk.dim() == 0 {
                continue;
            }
            row.graded.insert(j, hk.dim());
            for r in &hk.reps {
                let phi = part.to_map(k, r);
                let mut v: SparseVec = phi
                    .iter()
                    .map(|(inp, _, o, c)| (index[slot][&(inp.clone(), o)], c.clone()))
                    .collect();
                v.sort_by_key(|e| e.0);
                let p = total_h.degree(k).map(|t| t.project(&v));
                match p {
                    Some(Ok(p)) => images.push(
                        p.into_iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .collect(),
                    ),
                    _ => rep.injective = false,
                }
            }
        }
        let dim = total_h.degree(k).map_or(0, |t| t.dim());
        row.image_rank = rank_of(dim, &images);
        let graded_sum: usize = row.graded.values().sum();
        rep.injective &= row.image_rank == graded_sum;
        if let Some(t) = &twisted {
            let tot: usize = t
                .iter()
                .filter(|((_, tk), _)| *tk == k)
                .map(|(_, d)| d)
                .sum();
            row.total = Some(tot);
            let ok = graded_sum == tot;
            rep.bijective = Some(rep.bijective.unwrap_or(true) && ok);
        }
        rep.rows.insert(k, row);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twisted::apply_braid;

    fn alg(m: usize, n: i64) -> Arc<ZigzagAlgebra> {
        Arc::new(ZigzagAlgebra::build(m, n).unwrap())
    }

    #[test]
    fn projective_collapses_to_itself() {
        let a = alg(2, 2);
        let p = BigradedModule::projective(&a, 1);
        let c = p.collapse();
        assert_eq!(c.to_json().mu, AInfModule::projective(&a, 1).to_json().mu);
        assert!(c.gens.iter().all(|g| g.weight.is_none()));
        assert_eq!(p.bidegree(0), (0, 0));
    }

    #[test]
    fn shifts_collapse_to_degree_shifts() {
        let a = alg(2, 2);
        let p = BigradedModule::projective(&a, 2);
        let base = p.collapse();
        let s = p.shift_internal(1).collapse();
        let t = p.shift(1).collapse();
        for i in 0..base.dim() {
            assert_eq!(s.gens[i].deg, base.gens[i].deg + 1);
            assert_eq!(t.gens[i].deg, base.gens[i].deg - 1);
        }
        assert_eq!(p.shift_internal(1).bidegree(0).0, p.bidegree(0).0);
    }

    #[test]
    fn projective_hom_collapse_is_bijective() {
        let a = alg(2, 2);
        let c = TwistedComplex::projective(&a, 1, 0, 0);
        let p = BigradedModule::from_twisted(&c);
        let rep = collapse_hom_compare(&p, &p, (0, 2), (-2, 2), Some((&c, &c)));
        assert!(rep.injective);
        assert_eq!(rep.bijective, Some(true));
        let sizes: Vec<usize> = rep.rows.values().map(|r| r.graded.values().sum()).collect();
        assert_eq!(sizes, [1, 0, 1]);
    }

    #[test]
    fn braid_image_hom_collapse() {
        let a = alg(2, 3);
        let c0 = apply_braid(
            &"1".parse().unwrap(),
            &TwistedComplex::projective(&a, 2, 0, 0),
        )
        .unwrap();
        let c1 = TwistedComplex::projective(&a, 1, 0, 0);
        let rep = collapse_hom_compare(
            &BigradedModule::from_twisted(&c0),
            &BigradedModule::from_twisted(&c1),
            (-1, 3),
            (-3, 3),
            Some((&c0, &c1)),
        );
        assert!(rep.injective, "{rep:?}");
        assert_eq!(rep.bijective, Some(true), "{rep:?}");
    }

    #[test]
    fn scale_transfer_round_trip() {
        let a4 = alg(2, 4);
        let c = apply_braid(
            &"1 -2".parse().unwrap(),
            &TwistedComplex::projective(&a4, 1, 0, 0),
        )
        .unwrap();
        let b = BigradedModule::from_twisted(&c);
        let down = b.scale_transfer(2).unwrap();
        assert_eq!(down.module().alg.n, 2);
        let back = down.scale_transfer(4).unwrap();
        assert_eq!(back.module().gens, b.module().gens);
        assert_eq!(back.module().mu, b.module().mu);
    }

    #[test]
    fn mixed_residues_rejected() {
        let a4 = alg(2, 4);
        let p = BigradedModule::projective(&a4, 1);
        let q = p.module().direct_sum(&p.shift_internal(1).module().clone());
        let b = BigradedModule::new(q).unwrap();
        assert!(b.scale_transfer(2).is_err());
    }
}
