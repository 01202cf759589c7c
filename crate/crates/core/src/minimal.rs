//! Minimal models of A∞-modules by homological perturbation.
//!
//! A strong deformation retraction `(i, p, h)` of the underlying complex
//! onto its cohomology is chosen blockwise in each (vertex, weight) class,
//! so that it is a retraction of modules over the idempotents and respects
//! the second grading when one is present. With `δ` the structure maps of
//! positive arity, the transferred structure and the comparison map are
//!
//! `μ_H = Σ_k p∘δ∘(h∘δ)^k∘i`, `i_∞ = Σ_k (h∘δ)^k∘i`,
//!
//! compositions taken in the morphism convention of [`MultiMap::compose`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exact::linalg::{solve_columns, Eliminator, Inserted};
use crate::exact::{SparseVec, Q};
use crate::module::{hom_differential, AInfModule, ModGen};
use crate::multimap::{Input, Mono, MultiMap};

/// Output of [`minimal_model`].
#[derive(Clone, Debug)]
pub struct MinimalModel {
    /// The module on `H(M)`, with vanishing differential.
    pub module: AInfModule,
    /// Closed degree-0 quasi-isomorphism `H → M`.
    pub incl: MultiMap,
    /// Linear projection `M → H` (arity 0).
    pub proj: MultiMap,
    /// Linear contraction `h` of degree −1 with `i p − id = μ^1 h + h μ^1`.
    pub homotopy: MultiMap,
}

fn arity0(m: &AInfModule) -> MultiMap {
    m.mu.filter(|inp, _, _| inp.arity() == 0)
}

/// Computes a minimal model. Fails only if the iteration does not
/// terminate within `max_rounds` perturbation steps.
pub fn minimal_model(m: &AInfModule, max_rounds: usize) -> Result<MinimalModel> {
    let b1 = arity0(m);
    let delta = m.mu.filter(|inp, _, _| inp.arity() > 0);
    // basis indices per (vertex, weight) block and degree
    let mut blocks: BTreeMap<(usize, Option<i64>), BTreeMap<i64, Vec<usize>>> = BTreeMap::new();
    for (i, g) in m.gens.iter().enumerate() {
        blocks
            .entry((g.vertex, g.weight))
            .or_default()
            .entry(g.deg)
            .or_default()
            .push(i);
    }
    let image = |i: usize| -> Vec<(usize, Q)> {
        b1.terms
            .get(&Input {
                m: i as u32,
                word: Default::default(),
            })
            .map(|v| {
                v.iter()
                    .map(|((_, o), c)| (*o as usize, c.clone()))
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut hgens: Vec<ModGen> = Vec::new();
    let mut incl = MultiMap::zero(0, 0);
    let mut proj = MultiMap::zero(0, 0);
    let mut homotopy = MultiMap::zero(-1, 0);
    for ((_, _), by_deg) in &blocks {
        let local = |d: i64| -> BTreeMap<usize, usize> {
            by_deg
                .get(&d)
                .map(|v| v.iter().enumerate().map(|(l, &g)| (g, l)).collect())
                .unwrap_or_default()
        };
        // complement C_{d−1} → B_d chosen greedily by images
        let mut chosen: BTreeMap<i64, Vec<(usize, SparseVec)>> = BTreeMap::new();
        for (&d, idx) in by_deg {
            let tgt = local(d + 1);
            let mut e = Eliminator::new(tgt.len(), false);
            for &i in idx {
                let mut v: SparseVec = image(i).into_iter().map(|(o, c)| (tgt[&o], c)).collect();
                v.sort_by_key(|x| x.0);
                if v.is_empty() {
                    continue;
                }
                if let Inserted::Pivot(_) = e.insert(&v, None) {
                    chosen.entry(d + 1).or_default().push((i, v));
                }
            }
        }
        for (&d, idx) in by_deg {
            let loc = local(d);
            let next = local(d + 1);
            // cycles
            let cols: Vec<SparseVec> = idx
                .iter()
                .map(|&i| {
                    let mut v: SparseVec =
                        image(i).into_iter().map(|(o, c)| (next[&o], c)).collect();
                    v.sort_by_key(|x| x.0);
                    v
                })
                .collect();
            let kernel = solve_columns(next.len(), &cols, &Vec::new())?.kernel;
            let bvecs: Vec<(usize, SparseVec)> = chosen.get(&d).cloned().unwrap_or_default();
            let mut e = Eliminator::new(loc.len(), false);
            for (_, v) in &bvecs {
                e.insert(v, None);
            }
            let mut hvecs: Vec<SparseVec> = Vec::new();
            for z in kernel {
                if let Inserted::Pivot(_) = e.insert(&z, None) {
                    hvecs.push(z);
                }
            }
            let cvecs: Vec<usize> = chosen
                .get(&(d + 1))
                .map(|v| v.iter().map(|x| loc[&x.0]).collect())
                .unwrap_or_default();
            // columns: H | B | C
            let mut basis: Vec<SparseVec> = hvecs.clone();
            basis.extend(bvecs.iter().map(|x| x.1.clone()));
            basis.extend(cvecs.iter().map(|&l| vec![(l, Q::one())]));
            if basis.len() != loc.len() {
                return Err(Error::CheckFailed(
                    "retraction basis has the wrong size".into(),
                ));
            }
            let h0 = hgens.len();
            for (k, hv) in hvecs.iter().enumerate() {
                let g = &m.gens[idx[0]];
                hgens.push(ModGen {
                    label: format!("h{}", h0 + k),
                    deg: d,
                    vertex: g.vertex,
                    weight: g.weight,
                });
                for (l, c) in hv {
                    incl.add(
                        Input::new(h0 + k, &[]),
                        Mono::new(),
                        idx[*l] as u32,
                        c.clone(),
                    );
                }
            }
            for (l, &gi) in idx.iter().enumerate() {
                let sol = solve_columns(loc.len(), &basis, &vec![(l, Q::one())])?;
                let x = sol
                    .x
                    .ok_or_else(|| Error::CheckFailed("retraction basis is singular".into()))?;
                for (j, c) in x {
                    if j < hvecs.len() {
                        proj.add(Input::new(gi, &[]), Mono::new(), (h0 + j) as u32, c);
                    } else if j < hvecs.len() + bvecs.len() {
                        let src = bvecs[j - hvecs.len()].0;
                        homotopy.add(Input::new(gi, &[]), Mono::new(), src as u32, -c);
                    }
                }
            }
        }
    }
    let alg = &*m.alg;
    // i_∞ and μ_H
    let mut term = incl.clone();
    let mut i_inf = incl.clone();
    let mut mu_h = MultiMap::zero(1, 0);
    for round in 0.. {
        if term.is_zero() {
            break;
        }
        if round == max_rounds {
            return Err(Error::Budget(
                "perturbation series did not terminate".into(),
            ));
        }
        let dt = MultiMap::compose(alg, &delta, &term, true);
        mu_h.add_scaled(&Q::one(), &MultiMap::compose(alg, &proj, &dt, true));
        term = MultiMap::compose(alg, &homotopy, &dt, true);
        i_inf.add_scaled(&Q::one(), &term);
    }
    let module = AInfModule {
        alg: m.alg.clone(),
        gens: hgens,
        mu: mu_h,
    };
    let report = module.validate();
    if let Some(v) = report.first_violation {
        return Err(Error::CheckFailed(format!("transferred structure: {v}")));
    }
    if !hom_differential(&module, m, &i_inf).is_zero() {
        return Err(Error::CheckFailed("comparison map is not closed".into()));
    }
    Ok(MinimalModel {
        module,
        incl: i_inf,
        proj,
        homotopy,
    })
}

/// Forgets the second grading.
pub fn forget_weights(m: &AInfModule) -> AInfModule {
    let mut out = m.clone();
    for g in &mut out.gens {
        g.weight = None;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twisted::{apply_braid, TwistedComplex};
    use crate::zigzag::ZigzagAlgebra;
    use std::sync::Arc;

    #[test]
    fn minimal_models_of_braid_images() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        for (k, w) in [
            (1, "1"),
            (1, "2"),
            (2, "1 2"),
            (1, "-2 1 1"),
            (2, "1 -2 1 2"),
        ] {
            let p = TwistedComplex::projective(&a, k, 0, 0);
            let c = apply_braid(&w.parse().unwrap(), &p).unwrap();
            let m = c.to_module();
            let mm = minimal_model(&m, 64).unwrap();
            let dims: usize = m.cohomology_dims().values().sum();
            assert_eq!(mm.module.dim(), dims, "word {w}");
            assert!(mm.module.mu.filter(|i, _, _| i.arity() == 0).is_zero());
        }
    }
}
