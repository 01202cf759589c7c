//! Truncated bar tensor `M ⊗_A A` and its comparison map to `M`.
//!
//! Generators are `m ⊗ a_l ⊗ … ⊗ a_1 ⊗ p` with `a_i` non-units and `p` any
//! path, in degree `|m| + ✠(a_l..a_1) + |p|` and weight
//! `w(m) + Σ w(a_i) + w(p)`. Writing `c = (a_l, …, a_1, p)`, the
//! differential is minus the part of the bar coderivation
//!
//! `Σ_i (−1)^{✠(c_i..c_1)} b_M(m, c_L..c_{i+1}) ⊗ c_i..c_1 + Σ_i (−1)^{✠(c_i..c_1)} m ⊗ …μ²(c_{i+2}, c_{i+1})…`
//!
//! that keeps at least one factor, and the component that consumes every
//! factor is the comparison map `φ(m ⊗ c) = b_M(m, c)`.
//!
//! The differential preserves the weight, and a fixed weight bounds the
//! word length, so each weight is finite in every degree. A degree window
//! `[lo, hi]` computes cohomology exactly on `[lo + 1, hi − 1]`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::linalg::rank_of;
use crate::exact::{FiniteComplex, SparseVec, Q};
use crate::module::AInfModule;
use crate::multimap::{maltese, Input, Word};

/// Generator `m ⊗ a_l..a_1 ⊗ p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BarGen {
    pub m: usize,
    pub word: Word,
    pub p: usize,
    pub deg: i64,
    pub weight: i64,
}

/// Truncation of `M ⊗_A A` to a degree window and a weight window.
#[derive(Clone, Debug)]
pub struct BarTensor {
    pub window: (i64, i64),
    /// Degrees where the truncation does not affect cohomology.
    pub inner: (i64, i64),
    pub weights: (i64, i64),
    pub gens: Vec<BarGen>,
    /// `d(g)` as generator coordinates; terms leaving the window are dropped.
    pub d: Vec<SparseVec>,
    /// `φ(g)` in the basis of `M`.
    pub phi: Vec<SparseVec>,
}

/// Result of [`BarTensor::compare`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarComparison {
    pub d_squared: bool,
    pub chain_map: bool,
    /// `(weight, degree) → (dim H(bar), dim H(M), rank of φ)` on the inner window.
    pub dims: BTreeMap<(i64, i64), (usize, usize, usize)>,
}

impl BarComparison {
    /// `φ` induces an isomorphism on the inner window.
    pub fn iso(&self) -> bool {
        self.d_squared && self.chain_map && self.dims.values().all(|(a, b, r)| a == b && b == r)
    }
}

fn add(out: &mut BTreeMap<usize, Q>, i: usize, c: Q) {
    *out.entry(i).or_insert_with(Q::zero) += &c;
}

fn finish(out: BTreeMap<usize, Q>) -> SparseVec {
    out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Builds the truncated bar tensor of a bigraded module. The weight window
/// defaults to the weights of `M` widened by one.
pub fn bar_tensor(
    m: &AInfModule,
    window: (i64, i64),
    weights: Option<(i64, i64)>,
) -> Result<BarTensor> {
    let (lo, hi) = window;
    if hi - lo < 2 {
        return Err(Error::Invalid(format!(
            "window [{lo}, {hi}] contains no certified degree"
        )));
    }
    if !m.is_bigraded() {
        return Err(Error::Invalid("bar tensor needs a bigraded module".into()));
    }
    let alg = &*m.alg;
    let weights = match weights {
        Some(w) => w,
        None => {
            let ws = m.gens.iter().filter_map(|g| g.weight);
            let wlo = ws.clone().min().unwrap_or(0);
            let whi = ws.max().unwrap_or(0);
            (wlo - 1, whi + 1)
        }
    };
    let nonunits = alg.nonunits();
    let mut gens = Vec::new();
    for (i, g) in m.gens.iter().enumerate() {
        let w0 = g.weight.expect("bigraded");
        // depth-first over words; a fixed weight bounds the length
        let mut stack: Vec<(Word, usize, i64, i64)> = vec![(Word::new(), g.vertex, 0, 0)];
        while let Some((word, at, ww, mal)) = stack.pop() {
            for p in 0..alg.dim() {
                if alg.tgt(p) != at {
                    continue;
                }
                let deg = g.deg + mal + alg.deg(p);
                let weight = w0 + ww + alg.weight(p);
                if deg >= lo && deg <= hi && weight >= weights.0 && weight <= weights.1 {
                    gens.push(BarGen {
                        m: i,
                        word: word.clone(),
                        p,
                        deg,
                        weight,
                    });
                }
            }
            for &a in &nonunits {
                if alg.tgt(a) == at && w0 + ww + alg.weight(a) <= weights.1 {
                    let mut w2 = word.clone();
                    w2.push(a as u16);
                    stack.push((w2, alg.src(a), ww + alg.weight(a), mal + alg.deg(a) - 1));
                }
            }
        }
    }
    gens.sort();
    let index: HashMap<(usize, Word, usize), usize> = gens
        .iter()
        .enumerate()
        .map(|(j, g)| ((g.m, g.word.clone(), g.p), j))
        .collect();
    let mut d = Vec::with_capacity(gens.len());
    let mut phi = Vec::with_capacity(gens.len());
    for g in &gens {
        let l = g.word.len();
        let ps = Q::sign(alg.deg(g.p) - 1);
        let mut out = BTreeMap::new();
        // b_M on a prefix; `i` letters stay
        for i in 0..=l {
            let trailing = &g.word[l - i..];
            let s = &Q::sign(maltese(alg, trailing)) * &ps;
            let inp = Input {
                m: g.m as u32,
                word: g.word[..l - i].iter().copied().collect(),
            };
            if let Some(terms) = m.mu.terms.get(&inp) {
                for ((_, o), c) in terms {
                    if let Some(&j) =
                        index.get(&(*o as usize, trailing.iter().copied().collect(), g.p))
                    {
                        add(&mut out, j, -(&s * c));
                    }
                }
            }
        }
        // a_{j+1} a_j for j = 1..l-1; a_j sits at position l - j
        for j in 1..l {
            let (x, y) = (g.word[l - j - 1] as usize, g.word[l - j] as usize);
            let Some((z, c)) = alg.mul_basis(x, y) else {
                continue;
            };
            let s = &(&Q::sign(maltese(alg, &g.word[l - j + 1..])) * &ps) * &Q::sign(alg.deg(y));
            let mut w2 = g.word.clone();
            w2.remove(l - j);
            w2[l - j - 1] = z as u16;
            if let Some(&k) = index.get(&(g.m, w2, g.p)) {
                add(&mut out, k, -(&s * c));
            }
        }
        // a_1 p
        if l > 0 {
            if let Some((z, c)) = alg.mul_basis(g.word[l - 1] as usize, g.p) {
                let s = Q::sign(alg.deg(g.p));
                if let Some(&k) = index.get(&(g.m, g.word[..l - 1].iter().copied().collect(), z)) {
                    add(&mut out, k, -(&s * c));
                }
            }
        }
        d.push(finish(out));
        let mut img = BTreeMap::new();
        if alg.is_unit(g.p) {
            if l == 0 {
                add(&mut img, g.m, Q::one());
            }
        } else {
            let mut w = g.word.clone();
            w.push(g.p as u16);
            if let Some(terms) = m.mu.terms.get(&Input {
                m: g.m as u32,
                word: w,
            }) {
                for ((_, o), c) in terms {
                    add(&mut img, *o as usize, c.clone());
                }
            }
        }
        phi.push(finish(img));
    }
    Ok(BarTensor {
        window,
        inner: (lo + 1, hi - 1),
        weights,
        gens,
        d,
        phi,
    })
}

/// Weight-`ω` part of a finite complex: local positions per degree.
struct Piece {
    lo: i64,
    local: HashMap<usize, (i64, usize)>,
    by_deg: BTreeMap<i64, Vec<usize>>,
}

impl Piece {
    fn new(items: impl Iterator<Item = (usize, i64)>) -> Piece {
        let mut by_deg: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, t) in items {
            by_deg.entry(t).or_default().push(i);
        }
        let mut local = HashMap::new();
        for (t, v) in &by_deg {
            for (k, &i) in v.iter().enumerate() {
                local.insert(i, (*t, k));
            }
        }
        let lo = by_deg.keys().next().copied().unwrap_or(0);
        Piece { lo, local, by_deg }
    }

    fn complex(&self, hi: i64, col: &dyn Fn(usize) -> SparseVec) -> FiniteComplex {
        let hi = hi.max(self.lo);
        let dims = (self.lo..=hi)
            .map(|t| self.by_deg.get(&t).map_or(0, |v| v.len()))
            .collect();
        let mut cx = FiniteComplex::new(self.lo, dims);
        for (t, v) in &self.by_deg {
            if *t >= hi {
                continue;
            }
            for (k, &i) in v.iter().enumerate() {
                let mut c: SparseVec = col(i)
                    .into_iter()
                    .filter_map(|(j, x)| self.local.get(&j).map(|(_, l)| (*l, x)))
                    .collect();
                c.sort_by_key(|e| e.0);
                cx.set_column(*t, k, c);
            }
        }
        cx
    }

    fn coords(&self, t: i64, v: &SparseVec) -> SparseVec {
        let mut out: SparseVec = v
            .iter()
            .filter_map(|(j, x)| {
                self.local
                    .get(j)
                    .filter(|(s, _)| *s == t)
                    .map(|(_, l)| (*l, x.clone()))
            })
            .collect();
        out.sort_by_key(|e| e.0);
        out
    }
}

impl BarTensor {
    /// Checks `d² = 0`, `φ d = μ^1 φ` where the window allows, and compares
    /// cohomology weight by weight on the inner window.
    pub fn compare(&self, m: &AInfModule) -> BarComparison {
        let (_, hi) = self.window;
        let mut rep = BarComparison {
            d_squared: true,
            chain_map: true,
            dims: BTreeMap::new(),
        };
        let mu1: Vec<SparseVec> = (0..m.dim())
            .map(|i| {
                let mut out = BTreeMap::new();
                if let Some(terms) = m.mu.terms.get(&Input::new(i, &[])) {
                    for ((_, o), c) in terms {
                        add(&mut out, *o as usize, c.clone());
                    }
                }
                finish(out)
            })
            .collect();
        let apply = |cols: &[SparseVec], v: &SparseVec| {
            let mut out = BTreeMap::new();
            for (j, c) in v {
                for (k, x) in &cols[*j] {
                    add(&mut out, *k, c * x);
                }
            }
            finish(out)
        };
        for (j, g) in self.gens.iter().enumerate() {
            if g.deg + 2 <= hi && !apply(&self.d, &self.d[j]).is_empty() {
                rep.d_squared = false;
            }
            if g.deg < hi {
                let lhs = apply(&self.phi, &self.d[j]);
                let rhs = apply(&mu1, &self.phi[j]);
                if lhs != rhs {
                    rep.chain_map = false;
                }
            }
        }
        for w in self.weights.0..=self.weights.1 {
            let bar = Piece::new(
                self.gens
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.weight == w)
                    .map(|(j, g)| (j, g.deg)),
            );
            let base = Piece::new(
                m.gens
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.weight == Some(w))
                    .map(|(i, g)| (i, g.deg)),
            );
            let hb = bar.complex(hi, &|j| self.d[j].clone()).cohomology();
            let (_, mhi) = m.degree_range().unwrap_or((0, 0));
            let hm = base.complex(mhi, &|i| mu1[i].clone()).cohomology();
            for t in self.inner.0..=self.inner.1 {
                let db = hb.degree(t).map_or(0, |h| h.dim());
                let dm = hm.degree(t).map_or(0, |h| h.dim());
                if db == 0 && dm == 0 {
                    continue;
                }
                let rank = match (hb.degree(t), hm.degree(t)) {
                    (Some(b), Some(h)) => {
                        let imgs: Vec<SparseVec> = b
                            .reps
                            .iter()
                            .map(|r| {
                                let global: SparseVec = r
                                    .iter()
                                    .map(|(l, c)| (bar.by_deg[&t][*l], c.clone()))
                                    .collect();
                                let img = base.coords(t, &apply(&self.phi, &global));
                                h.project(&img)
                                    .map(|p| {
                                        p.into_iter()
                                            .enumerate()
                                            .filter(|(_, c)| !c.is_zero())
                                            .collect()
                                    })
                                    .unwrap_or_default()
                            })
                            .collect();
                        rank_of(h.dim(), &imgs)
                    }
                    _ => 0,
                };
                rep.dims.insert((w, t), (db, dm, rank));
            }
        }
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module::{cone, AInfModule};
    use crate::zigzag::ZigzagAlgebra;
    use std::sync::Arc;

    #[test]
    fn projective_bar_is_quasi_isomorphic() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let p = AInfModule::projective(&a, 1);
        let b = bar_tensor(&p, (-4, 4), None).unwrap();
        let c = b.compare(&p);
        assert!(c.iso(), "{c:?}");
        assert!(c.dims.values().any(|d| d.0 > 0));
    }

    #[test]
    fn acyclic_bar_is_acyclic() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let p = AInfModule::projective(&a, 2);
        let m = cone(&p, &p, &p.identity()).unwrap().module;
        let b = bar_tensor(&m, (-4, 4), None).unwrap();
        let c = b.compare(&m);
        assert!(c.iso(), "{c:?}");
        assert!(c.dims.is_empty());
    }

    #[test]
    fn braid_image_bar_is_quasi_isomorphic() {
        use crate::twisted::{apply_braid, TwistedComplex};
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = apply_braid(
            &"1 -2".parse().unwrap(),
            &TwistedComplex::projective(&a, 1, 0, 0),
        )
        .unwrap();
        let m = c.to_module();
        let b = bar_tensor(&m, (-5, 5), None).unwrap();
        let cmp = b.compare(&m);
        assert!(cmp.iso(), "{cmp:?}");
        let total: usize = cmp.dims.values().map(|d| d.0).sum();
        let want: usize = m
            .cohomology_dims()
            .iter()
            .filter(|(t, _)| **t >= -4 && **t <= 4)
            .map(|(_, d)| d)
            .sum();
        assert_eq!(total, want);
    }

    #[test]
    fn narrow_window_rejected() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let p = AInfModule::projective(&a, 1);
        assert!(bar_tensor(&p, (0, 1), None).is_err());
    }
}
