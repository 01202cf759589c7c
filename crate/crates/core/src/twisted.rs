//! Twisted complexes over the projectives `P_k = e_k A`, twist functors,
//! braid words, and the finite invariants of perfect objects.
//!
//! A generator `P_k{i}[j]` has its path `p` in total degree `−j + i + |p|`
//! and weight `i + |p|`. A differential entry from `g0` to `g1` is left
//! multiplication by `x ∈ e_{k1} A e_{k0}` with `|x| = i0 − i1` and
//! `j1 = j0 − 1`, so the differential has bidegree `(1, 0)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::linalg::{axpy, collect_vec, rank_of, scale, Eliminator};
use crate::exact::{Cohomology, FiniteComplex, SparseVec, Q};
use crate::module::{AInfModule, ModGen};
use crate::par::Exec;
use crate::zigzag::ZigzagAlgebra;

/// Generator `P_k{i}[j]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gen {
    pub k: usize,
    pub i: i64,
    pub j: i64,
}

impl Gen {
    pub fn new(k: usize, i: i64, j: i64) -> Gen {
        Gen { k, i, j }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P_{}{{{}}}[{}]", self.k, self.i, self.j)
    }
}

/// A finite twisted complex of shifted projectives.
#[derive(Clone, Debug)]
pub struct TwistedComplex {
    pub alg: Arc<ZigzagAlgebra>,
    pub gens: Vec<Gen>,
    /// `(from, to) → x`, never storing zero entries.
    pub diff: BTreeMap<(usize, usize), SparseVec>,
}

impl Eq for TwistedComplex {}

impl PartialEq for TwistedComplex {
    fn eq(&self, other: &Self) -> bool {
        self.alg.m == other.alg.m
            && self.alg.n == other.alg.n
            && self.gens == other.gens
            && self.diff == other.diff
    }
}

impl TwistedComplex {
    pub fn empty(alg: &Arc<ZigzagAlgebra>) -> TwistedComplex {
        TwistedComplex {
            alg: alg.clone(),
            gens: Vec::new(),
            diff: BTreeMap::new(),
        }
    }

    /// The single generator `P_k{i}[j]`.
    pub fn projective(alg: &Arc<ZigzagAlgebra>, k: usize, i: i64, j: i64) -> TwistedComplex {
        TwistedComplex {
            alg: alg.clone(),
            gens: vec![Gen::new(k, i, j)],
            diff: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Builds a complex and checks it.
    pub fn new(
        alg: &Arc<ZigzagAlgebra>,
        gens: Vec<Gen>,
        diff: BTreeMap<(usize, usize), SparseVec>,
    ) -> Result<Self> {
        let c = TwistedComplex {
            alg: alg.clone(),
            gens,
            diff: diff.into_iter().filter(|(_, v)| !v.is_empty()).collect(),
        };
        c.check()?;
        Ok(c)
    }

    /// Bidegree bookkeeping and `δ∘δ = 0`.
    pub fn check(&self) -> Result<()> {
        let alg = &*self.alg;
        for g in &self.gens {
            if g.k == 0 || g.k > alg.m {
                return Err(Error::Invalid(format!("vertex {} out of range", g.k)));
            }
        }
        for (&(a, b), x) in &self.diff {
            let (g0, g1) = (self.gens.get(a), self.gens.get(b));
            let (Some(g0), Some(g1)) = (g0, g1) else {
                return Err(Error::Invalid(format!("entry ({a}, {b}) out of range")));
            };
            if g1.j != g0.j - 1 {
                return Err(Error::Invalid(format!(
                    "entry {g0} → {g1} is not of homological degree 1"
                )));
            }
            for (y, _) in x {
                if alg.src(*y) != g0.k || alg.tgt(*y) != g1.k || alg.deg(*y) != g0.i - g1.i {
                    return Err(Error::Invalid(format!(
                        "entry {g0} → {g1} has a term {} of the wrong type",
                        alg.label(*y)
                    )));
                }
            }
        }
        let sq = self.compose_diff();
        if let Some(((a, b), _)) = sq.into_iter().next() {
            return Err(Error::Malformed(format!(
                "δ∘δ ≠ 0 from {} to {}",
                self.gens[a], self.gens[b]
            )));
        }
        Ok(())
    }

    fn compose_diff(&self) -> BTreeMap<(usize, usize), SparseVec> {
        let mut out: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
        for (&(a, b), x) in &self.diff {
            for (&(b2, c), y) in self.diff.range((b, 0)..(b + 1, 0)) {
                debug_assert_eq!(b2, b);
                let p = self.alg.multiply(y, x);
                let e = out.entry((a, c)).or_default();
                *e = axpy(e, &Q::one(), &p);
            }
        }
        out.retain(|_, v| !v.is_empty());
        out
    }

    /// Direct sum.
    pub fn direct_sum(&self, other: &TwistedComplex) -> TwistedComplex {
        let off = self.len();
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().copied());
        let mut diff = self.diff.clone();
        for (&(a, b), x) in &other.diff {
            diff.insert((a + off, b + off), x.clone());
        }
        TwistedComplex {
            alg: self.alg.clone(),
            gens,
            diff,
        }
    }

    /// `C{s}[t]`.
    pub fn shifted(&self, s: i64, t: i64) -> TwistedComplex {
        let mut c = self.clone();
        for g in &mut c.gens {
            g.i += s;
            g.j += t;
        }
        if t % 2 != 0 {
            for x in c.diff.values_mut() {
                *x = scale(x, &Q::from(-1));
            }
        }
        c
    }

    /// Class in `K_0` against `[P_1], …, [P_m]`.
    pub fn k_class(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.alg.m];
        for g in &self.gens {
            v[g.k - 1] += if (g.i + g.j).rem_euclid(2) == 0 {
                1
            } else {
                -1
            };
        }
        v
    }

    /// Realization as an A∞-module with the canonical bigrading.
    pub fn to_module(&self) -> AInfModule {
        let alg = &self.alg;
        let mut gens = Vec::new();
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (gi, g) in self.gens.iter().enumerate() {
            for p in 0..alg.dim() {
                if alg.tgt(p) == g.k {
                    index.insert((gi, p), gens.len());
                    gens.push(ModGen {
                        label: format!("{gi}:{}", alg.label(p)),
                        deg: -g.j + g.i + alg.deg(p),
                        vertex: alg.src(p),
                        weight: Some(g.i + alg.deg(p)),
                    });
                }
            }
        }
        let mut partial = vec![Vec::new(); gens.len()];
        for (&(a, b), x) in &self.diff {
            for p in 0..alg.dim() {
                if alg.tgt(p) != self.gens[a].k {
                    continue;
                }
                let img = alg.multiply(x, &vec![(p, Q::one())]);
                let col = &mut partial[index[&(a, p)]];
                let mapped: SparseVec =
                    collect_vec(img.into_iter().map(|(q, c)| (index[&(b, q)], c)));
                *col = axpy(col, &Q::one(), &mapped);
            }
        }
        for col in &mut partial {
            col.sort_by_key(|e| e.0);
        }
        let mut action = BTreeMap::new();
        for (&(gi, p), &row) in &index {
            for a in alg.nonunits() {
                if let Some((q, c)) = alg.mul_basis(p, a) {
                    action.insert((row, a), vec![(index[&(gi, q)], c.clone())]);
                }
            }
        }
        AInfModule::from_dg(alg, gens, &partial, &action)
    }

    /// `dim H` of the realization by total degree.
    pub fn cohomology_dims(&self) -> BTreeMap<i64, usize> {
        if self.is_empty() {
            return BTreeMap::new();
        }
        self.to_module().cohomology_dims()
    }

    /// Generator range of total degrees and weights, for finiteness checks.
    pub fn spread(&self) -> Option<(i64, i64)> {
        let n = self.alg.n;
        let lo = self.gens.iter().map(|g| g.i - g.j).min()?;
        let hi = self.gens.iter().map(|g| g.i - g.j + n).max()?;
        Some((lo, hi))
    }

    /// Reorders generators by position `−j`, then vertex and shift.
    pub fn canonical(&self) -> TwistedComplex {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&a| (-self.gens[a].j, self.gens[a].k, self.gens[a].i, a));
        let mut pos = vec![0; self.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        TwistedComplex {
            alg: self.alg.clone(),
            gens: order.iter().map(|&a| self.gens[a]).collect(),
            diff: self
                .diff
                .iter()
                .map(|(&(a, b), x)| ((pos[a], pos[b]), x.clone()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> TwistedJson {
        TwistedJson {
            algebra: crate::module::AlgebraRef {
                m: self.alg.m,
                n: self.alg.n,
            },
            generators: self.gens.clone(),
            differential: self
                .diff
                .iter()
                .flat_map(|(&(a, b), x)| {
                    x.iter().map(move |(y, c)| EntryJson {
                        from: a,
                        to: b,
                        elem: self.alg.label(*y).to_string(),
                        coeff: c.clone(),
                    })
                })
                .collect(),
        }
    }

    pub fn from_json(j: &TwistedJson) -> Result<TwistedComplex> {
        let alg = Arc::new(ZigzagAlgebra::build(j.algebra.m, j.algebra.n)?);
        let mut diff: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
        for e in &j.differential {
            let y = alg
                .index(&e.elem)
                .ok_or_else(|| Error::Invalid(format!("unknown algebra label {}", e.elem)))?;
            let v = diff.entry((e.from, e.to)).or_default();
            *v = axpy(v, &Q::one(), &vec![(y, e.coeff.clone())]);
        }
        TwistedComplex::new(&alg, j.generators.clone(), diff)
    }
}

/// On-disk twisted complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistedJson {
    pub algebra: crate::module::AlgebraRef,
    pub generators: Vec<Gen>,
    pub differential: Vec<EntryJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryJson {
    pub from: usize,
    pub to: usize,
    pub elem: String,
    pub coeff: Q,
}

// ---------------------------------------------------------------------------
// Morphism complexes

/// Basis element of `hom(C0, C1)`: left multiplication by the path `y`
/// from generator `g0` of `C0` to generator `g1` of `C1`.
pub type TwKey = (usize, usize, usize);

/// Element of `hom(C0, C1)` of a fixed total degree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TwMap {
    pub deg: i64,
    pub terms: BTreeMap<TwKey, Q>,
}

impl TwMap {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, key: TwKey, c: Q) {
        let e = self.terms.entry(key).or_insert_with(Q::zero);
        *e += &c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, f: &Q, other: &TwMap) {
        for (k, c) in &other.terms {
            self.add(*k, f * c);
        }
    }
}

fn key_degree(c0: &TwistedComplex, c1: &TwistedComplex, (a, b, y): TwKey) -> (i64, i64) {
    let (g0, g1) = (c0.gens[a], c1.gens[b]);
    let s = g1.i + c0.alg.deg(y) - g0.i;
    (s, s + g0.j - g1.j)
}

/// Composition `f2 ∘ f1`.
pub fn tw_compose(alg: &ZigzagAlgebra, f2: &TwMap, f1: &TwMap) -> TwMap {
    let mut out = TwMap {
        deg: f1.deg + f2.deg,
        terms: BTreeMap::new(),
    };
    let mut by_src: BTreeMap<usize, Vec<(usize, usize, &Q)>> = BTreeMap::new();
    for (&(b, c, y), q) in &f2.terms {
        by_src.entry(b).or_default().push((c, y, q));
    }
    for (&(a, b, y1), q1) in &f1.terms {
        if let Some(v) = by_src.get(&b) {
            for &(c, y2, q2) in v {
                if let Some((z, k)) = alg.mul_basis(y2, y1) {
                    out.add((a, c, z), k * &(q1 * q2));
                }
            }
        }
    }
    out
}

fn diff_map(c: &TwistedComplex) -> TwMap {
    let mut m = TwMap {
        deg: 1,
        terms: BTreeMap::new(),
    };
    for (&(a, b), x) in &c.diff {
        for (y, q) in x {
            m.add((a, b, *y), q.clone());
        }
    }
    m
}

/// `D f = δ1 ∘ f − (−1)^{|f|} f ∘ δ0`.
pub fn tw_differential(c0: &TwistedComplex, c1: &TwistedComplex, f: &TwMap) -> TwMap {
    let alg = &*c0.alg;
    let mut out = tw_compose(alg, &diff_map(c1), f);
    out.add_scaled(&-Q::sign(f.deg), &tw_compose(alg, f, &diff_map(c0)));
    out
}

/// `hom(C0, C1)` split by weight shift `s`; each block is a finite complex
/// in the total degree.
#[derive(Clone, Debug)]
pub struct TwHom {
    pub blocks: BTreeMap<i64, TwHomBlock>,
}

#[derive(Clone, Debug)]
pub struct TwHomBlock {
    pub lo: i64,
    pub bases: Vec<Vec<TwKey>>,
    pub complex: FiniteComplex,
}

impl TwHomBlock {
    pub fn to_map(&self, t: i64, v: &SparseVec) -> TwMap {
        let mut f = TwMap {
            deg: t,
            terms: BTreeMap::new(),
        };
        for (i, c) in v {
            f.add(self.bases[(t - self.lo) as usize][*i], c.clone());
        }
        f
    }

    pub fn coords(&self, f: &TwMap) -> Option<SparseVec> {
        let idx = (f.deg - self.lo) as usize;
        let basis = self.bases.get(idx)?;
        let pos: BTreeMap<&TwKey, usize> = basis.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut v = Vec::new();
        for (k, c) in &f.terms {
            v.push((*pos.get(k)?, c.clone()));
        }
        v.sort_by_key(|e| e.0);
        Some(v)
    }
}

impl TwHom {
    pub fn build(c0: &TwistedComplex, c1: &TwistedComplex) -> TwHom {
        let alg = &*c0.alg;
        let mut keys: BTreeMap<i64, BTreeMap<i64, Vec<TwKey>>> = BTreeMap::new();
        for (a, g0) in c0.gens.iter().enumerate() {
            for (b, g1) in c1.gens.iter().enumerate() {
                for y in alg.paths(g0.k, g1.k) {
                    let (s, t) = key_degree(c0, c1, (a, b, y));
                    keys.entry(s)
                        .or_default()
                        .entry(t)
                        .or_default()
                        .push((a, b, y));
                }
            }
        }
        let mut blocks = BTreeMap::new();
        for (s, by_t) in keys {
            let lo = *by_t.keys().next().unwrap() - 1;
            let hi = *by_t.keys().last().unwrap() + 1;
            let bases: Vec<Vec<TwKey>> = (lo..=hi)
                .map(|t| by_t.get(&t).cloned().unwrap_or_default())
                .collect();
            let mut complex = FiniteComplex::new(lo, bases.iter().map(|b| b.len()).collect());
            let block = TwHomBlock {
                lo,
                bases,
                complex: complex.clone(),
            };
            for t in lo..hi {
                for (col, key) in block.bases[(t - lo) as usize].iter().enumerate() {
                    let mut f = TwMap {
                        deg: t,
                        terms: BTreeMap::new(),
                    };
                    f.add(*key, Q::one());
                    let d = tw_differential(c0, c1, &f);
                    let v = TwHomBlock {
                        lo,
                        bases: block.bases.clone(),
                        complex: FiniteComplex::default(),
                    }
                    .coords(&d)
                    .expect("differential leaves the block");
                    complex.set_column(t, col, v);
                }
            }
            blocks.insert(
                s,
                TwHomBlock {
                    lo,
                    bases: block.bases,
                    complex,
                },
            );
        }
        TwHom { blocks }
    }

    /// `(weight shift, total degree) → dim H`.
    pub fn ext_table(&self) -> BTreeMap<(i64, i64), usize> {
        let mut out = BTreeMap::new();
        for (s, b) in &self.blocks {
            for (t, d) in b.complex.cohomology_dims() {
                out.insert((*s, t), d);
            }
        }
        out
    }

    /// Euler characteristic by total degree.
    pub fn euler(&self) -> i64 {
        let mut chi = 0i64;
        for b in self.blocks.values() {
            for (i, basis) in b.bases.iter().enumerate() {
                let t = b.lo + i as i64;
                chi += if t.rem_euclid(2) == 0 {
                    basis.len() as i64
                } else {
                    -(basis.len() as i64)
                };
            }
        }
        chi
    }

    /// Cohomology of one block.
    pub fn cohomology(&self, s: i64) -> Option<Cohomology> {
        self.blocks.get(&s).map(|b| b.complex.cohomology())
    }
}

/// Dimensions of `H(hom(C0{i}, C1))`, keyed by `(i, total degree)`.
pub fn ext_table(c0: &TwistedComplex, c1: &TwistedComplex) -> BTreeMap<(i64, i64), usize> {
    TwHom::build(c0, c1).ext_table()
}

/// `χ(hom(C0, C1))`.
pub fn euler_pairing(c0: &TwistedComplex, c1: &TwistedComplex) -> i64 {
    TwHom::build(c0, c1).euler()
}

/// `G_{kl} = χ(hom(P_k, P_l))`.
pub fn gram_matrix(alg: &ZigzagAlgebra) -> Vec<Vec<i64>> {
    let m = alg.m;
    let mut g = vec![vec![0i64; m]; m];
    for k in 1..=m {
        for l in 1..=m {
            g[k - 1][l - 1] = alg
                .paths(k, l)
                .iter()
                .map(|&y| if alg.deg(y) % 2 == 0 { 1 } else { -1 })
                .sum();
        }
    }
    g
}

/// Integer determinant by fraction-free elimination.
pub fn int_determinant(g: &[Vec<i64>]) -> i64 {
    let rows: Vec<Vec<i64>> = g.to_vec();
    let m = crate::exact::SparseMatrix::from_dense(&rows);
    m.determinant().ok().and_then(|d| d.to_i64()).unwrap_or(0)
}

/// `k(C0)ᵀ G k(C1)`.
pub fn gram_product(g: &[Vec<i64>], k0: &[i64], k1: &[i64]) -> i64 {
    let mut s = 0;
    for (a, row) in g.iter().enumerate() {
        for (b, x) in row.iter().enumerate() {
            s += k0[a] * x * k1[b];
        }
    }
    s
}

/// Checks `χ(hom(C0, C1)) = k(C0)ᵀ G k(C1)`.
pub fn cardy_verify(c0: &TwistedComplex, c1: &TwistedComplex) -> bool {
    let g = gram_matrix(&c0.alg);
    euler_pairing(c0, c1) == gram_product(&g, &c0.k_class(), &c1.k_class())
}

// ---------------------------------------------------------------------------
// Twists, reduction, braids

/// Closed maps `P_k → C` representing a basis of `H(hom(P_k, C))`, with
/// their `(weight shift, total degree)`.
fn classes_from_pk(k: usize, c: &TwistedComplex) -> Vec<(i64, i64, TwMap)> {
    let pk = TwistedComplex::projective(&c.alg, k, 0, 0);
    let hom = TwHom::build(&pk, c);
    let mut out = Vec::new();
    for (s, b) in &hom.blocks {
        let h = b.complex.cohomology();
        for (t, hd) in &h.degrees {
            for rep in &hd.reps {
                out.push((*s, *t, b.to_map(*t, rep)));
            }
        }
    }
    out
}

fn classes_to_pk(k: usize, c: &TwistedComplex) -> Vec<(i64, i64, TwMap)> {
    let pk = TwistedComplex::projective(&c.alg, k, 0, 0);
    let hom = TwHom::build(c, &pk);
    let mut out = Vec::new();
    for (s, b) in &hom.blocks {
        let h = b.complex.cohomology();
        for (t, hd) in &h.degrees {
            for rep in &hd.reps {
                out.push((*s, *t, b.to_map(*t, rep)));
            }
        }
    }
    out
}

/// `T_{P_k}(C)`: the cone of the evaluation map `⊕ H(hom(P_k, C)) ⊗ P_k → C`.
pub fn twist(k: usize, c: &TwistedComplex) -> TwistedComplex {
    let mut out = c.clone();
    for (s, t, f) in classes_from_pk(k, c) {
        let g = out.gens.len();
        out.gens.push(Gen::new(k, s, s - t + 1));
        for (&(_, b, y), q) in &f.terms {
            let e = out.diff.entry((g, b)).or_default();
            *e = axpy(e, &Q::one(), &vec![(y, q.clone())]);
        }
    }
    out.diff.retain(|_, v| !v.is_empty());
    debug_assert!(out.check().is_ok());
    out
}

/// `T_{P_k}^{-1}(C)`: the shifted cone of the coevaluation
/// `C → ⊕ H(hom(C, P_k))^∨ ⊗ P_k`.
pub fn untwist(k: usize, c: &TwistedComplex) -> TwistedComplex {
    let mut out = c.clone();
    for (s, t, f) in classes_to_pk(k, c) {
        let g = out.gens.len();
        out.gens.push(Gen::new(k, -s, t - s - 1));
        for (&(a, _, y), q) in &f.terms {
            let e = out.diff.entry((a, g)).or_default();
            *e = axpy(e, &Q::one(), &vec![(y, -q)]);
        }
    }
    out.diff.retain(|_, v| !v.is_empty());
    debug_assert!(out.check().is_ok());
    out
}

/// Cancels every pair of generators joined by an invertible entry,
/// correcting the differential by the zig-zag term.
pub fn reduce(c: &TwistedComplex) -> TwistedComplex {
    let alg = c.alg.clone();
    let mut gens: Vec<Option<Gen>> = c.gens.iter().map(|g| Some(*g)).collect();
    let mut diff = c.diff.clone();
    loop {
        let pick = diff.iter().find_map(|(&(a, b), x)| {
            x.iter()
                .find(|(y, _)| alg.is_unit(*y))
                .map(|(_, q)| (a, b, q.clone()))
        });
        let Some((g0, g1, cval)) = pick else { break };
        let inv = cval.inv();
        let into_g0: Vec<(usize, SparseVec)> = diff
            .iter()
            .filter(|(&(_, b), _)| b == g0)
            .map(|(&(a, _), x)| (a, x.clone()))
            .collect();
        let out_g0: Vec<(usize, SparseVec)> = diff
            .iter()
            .filter(|(&(a, _), _)| a == g0)
            .map(|(&(_, b), x)| (b, x.clone()))
            .collect();
        let into_g1: Vec<(usize, SparseVec)> = diff
            .iter()
            .filter(|(&(_, b), _)| b == g1)
            .map(|(&(a, _), x)| (a, x.clone()))
            .collect();
        let out_g1: Vec<(usize, SparseVec)> = diff
            .iter()
            .filter(|(&(a, _), _)| a == g1)
            .map(|(&(_, b), x)| (b, x.clone()))
            .collect();
        for (u, xu) in &into_g1 {
            if *u == g0 {
                continue;
            }
            for (v, xv) in &out_g0 {
                if *v == g1 {
                    continue;
                }
                let corr = alg.multiply(xv, xu);
                if corr.is_empty() {
                    continue;
                }
                let e = diff.entry((*u, *v)).or_default();
                *e = axpy(e, &-inv.clone(), &corr);
            }
        }
        for (a, _) in into_g0.iter().chain(into_g1.iter()) {
            diff.remove(&(*a, g0));
            diff.remove(&(*a, g1));
        }
        for (b, _) in out_g0.iter().chain(out_g1.iter()) {
            diff.remove(&(g0, *b));
            diff.remove(&(g1, *b));
        }
        diff.retain(|_, v| !v.is_empty());
        gens[g0] = None;
        gens[g1] = None;
    }
    let mut pos = vec![usize::MAX; gens.len()];
    let mut new_gens = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        if let Some(g) = g {
            pos[i] = new_gens.len();
            new_gens.push(*g);
        }
    }
    let diff = diff
        .into_iter()
        .map(|((a, b), x)| ((pos[a], pos[b]), x))
        .collect();
    TwistedComplex {
        alg,
        gens: new_gens,
        diff,
    }
}

/// A braid word; letters are applied right to left.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BraidWord(pub Vec<(usize, i8)>);

impl BraidWord {
    pub fn check(&self, m: usize) -> Result<()> {
        for &(k, _) in &self.0 {
            if k == 0 || k > m {
                return Err(Error::Invalid(format!(
                    "braid generator {k} out of range 1..{m}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord(self.0.iter().rev().map(|&(k, s)| (k, -s)).collect())
    }

    pub fn concat(&self, other: &BraidWord) -> BraidWord {
        BraidWord(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn power(&self, e: usize) -> BraidWord {
        BraidWord(
            std::iter::repeat_n(self.0.iter().copied(), e)
                .flatten()
                .collect(),
        )
    }

    /// The full twist `(σ_1 ⋯ σ_m)^{m+1}`.
    pub fn delta(m: usize) -> BraidWord {
        BraidWord((1..=m).map(|k| (k, 1)).collect()).power(m + 1)
    }

    /// Uniform random word.
    pub fn random(m: usize, len: usize, positive: bool, rng: &mut impl Rng) -> BraidWord {
        BraidWord(
            (0..len)
                .map(|_| {
                    let k = rng.gen_range(1..=m);
                    let s = if positive || rng.gen_bool(0.5) { 1 } else { -1 };
                    (k, s)
                })
                .collect(),
        )
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(k, s)| {
                if s > 0 {
                    k.to_string()
                } else {
                    format!("-{k}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for BraidWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<BraidWord> {
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::Invalid(format!("bad braid letter '{tok}'")))?;
            if v == 0 {
                return Err(Error::Invalid("braid letter 0".into()));
            }
            out.push((v.unsigned_abs() as usize, if v > 0 { 1 } else { -1 }));
        }
        Ok(BraidWord(out))
    }
}

/// Applies `w` to `C`, reducing after every letter.
pub fn apply_braid(w: &BraidWord, c: &TwistedComplex) -> Result<TwistedComplex> {
    w.check(c.alg.m)?;
    let mut cur = reduce(c);
    for &(k, s) in w.0.iter().rev() {
        cur = if s > 0 {
            twist(k, &cur)
        } else {
            untwist(k, &cur)
        };
        cur = reduce(&cur);
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// Quasi-isomorphisms and sphericality

/// Mapping cone of a degree-0 closed map `f: C0 → C1`.
pub fn tw_cone(c0: &TwistedComplex, c1: &TwistedComplex, f: &TwMap) -> Result<TwistedComplex> {
    if f.deg != 0 || !tw_differential(c0, c1, f).is_zero() {
        return Err(Error::Invalid("cone needs a closed degree-0 map".into()));
    }
    let s0 = c0.shifted(0, 1);
    let off = c0.len();
    let mut out = s0.direct_sum(c1);
    for (&(a, b, y), q) in &f.terms {
        let e = out.diff.entry((a, b + off)).or_default();
        *e = axpy(e, &Q::one(), &vec![(y, q.clone())]);
    }
    out.diff.retain(|_, v| !v.is_empty());
    out.check()?;
    Ok(out)
}

/// Searches for a weight-preserving closed degree-0 map inducing an
/// isomorphism. Success is certified twice: by the cone reducing to zero
/// and by exact ranks on the realizations.
pub fn quasi_iso(
    c0: &TwistedComplex,
    c1: &TwistedComplex,
    attempts: usize,
    seed: u64,
) -> Option<TwMap> {
    if c0.k_class() != c1.k_class() {
        return None;
    }
    let hom = TwHom::build(c0, c1);
    let reps: Vec<SparseVec> = match hom.blocks.get(&0) {
        Some(b) => b
            .complex
            .cohomology()
            .degree(0)
            .map(|h| h.reps.clone())
            .unwrap_or_default(),
        None => Vec::new(),
    };
    if reps.is_empty() {
        return if c0.cohomology_dims().is_empty() && c1.cohomology_dims().is_empty() {
            Some(TwMap::default())
        } else {
            None
        };
    }
    let block = &hom.blocks[&0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..attempts {
        let mut v: SparseVec = Vec::new();
        for r in &reps {
            let f = if attempt == 0 && reps.len() == 1 {
                1
            } else {
                rng.gen_range(-4i64..=4)
            };
            v = axpy(&v, &Q::from(f), r);
        }
        let f = block.to_map(0, &v);
        let Ok(cone) = tw_cone(c0, c1, &f) else {
            continue;
        };
        if reduce(&cone).is_empty() {
            debug_assert!(cone.cohomology_dims().is_empty());
            return Some(f);
        }
    }
    None
}

/// Report of [`spherical_check`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphericalReport {
    pub end_dims: BTreeMap<i64, usize>,
    pub end_pairing_ok: bool,
    pub projective_pairings_ok: bool,
    pub spherical: bool,
}

fn total_degree_classes(hom: &TwHom) -> BTreeMap<i64, Vec<TwMap>> {
    let mut out: BTreeMap<i64, Vec<TwMap>> = BTreeMap::new();
    for b in hom.blocks.values() {
        let h = b.complex.cohomology();
        for (t, hd) in &h.degrees {
            for r in &hd.reps {
                out.entry(*t).or_default().push(b.to_map(*t, r));
            }
        }
    }
    out
}

/// Coordinates of a closed map in the cohomology of its block.
fn class_coords(
    hom: &TwHom,
    c0: &TwistedComplex,
    c1: &TwistedComplex,
    f: &TwMap,
) -> BTreeMap<(i64, usize), Q> {
    let mut by_s: BTreeMap<i64, TwMap> = BTreeMap::new();
    for (k, q) in &f.terms {
        let (s, _) = key_degree(c0, c1, *k);
        by_s.entry(s)
            .or_insert_with(|| TwMap {
                deg: f.deg,
                terms: BTreeMap::new(),
            })
            .add(*k, q.clone());
    }
    let mut out = BTreeMap::new();
    for (s, part) in by_s {
        let b = &hom.blocks[&s];
        let h = b.complex.cohomology();
        let Some(hd) = h.degree(f.deg) else { continue };
        let v = b.coords(&part).expect("map outside its block");
        for (i, q) in hd
            .project(&v)
            .expect("non-closed map")
            .into_iter()
            .enumerate()
        {
            if !q.is_zero() {
                out.insert((s, i), q);
            }
        }
    }
    out
}

/// Rank of the matrix `(f, g) ↦ top(f ∘ g)`.
fn pairing_rank(
    alg: &ZigzagAlgebra,
    left: &[TwMap],
    right: &[TwMap],
    top: &dyn Fn(&TwMap) -> Q,
) -> usize {
    let rows: Vec<SparseVec> = left
        .iter()
        .map(|f| {
            right
                .iter()
                .enumerate()
                .map(|(j, g)| (j, top(&tw_compose(alg, f, g))))
                .filter(|(_, q)| !q.is_zero())
                .collect()
        })
        .collect();
    rank_of(right.len(), &rows)
}

/// `H(end C) ≅ H*(S^n)` with nondegenerate composition pairings.
pub fn spherical_check(c: &TwistedComplex) -> SphericalReport {
    let alg = &*c.alg;
    let n = alg.n;
    let end = TwHom::build(c, c);
    let classes = total_degree_classes(&end);
    let end_dims: BTreeMap<i64, usize> = classes.iter().map(|(t, v)| (*t, v.len())).collect();
    let dims_ok = end_dims == BTreeMap::from([(0, 1), (n, 1)]);
    let mut rep = SphericalReport {
        end_dims,
        ..Default::default()
    };
    if !dims_ok {
        return rep;
    }
    let top = |f: &TwMap| {
        class_coords(&end, c, c, f)
            .into_values()
            .fold(Q::zero(), |a, b| a + b)
    };
    rep.end_pairing_ok = pairing_rank(alg, &classes[&0], &classes[&n], &top) == 1
        && pairing_rank(alg, &classes[&n], &classes[&0], &top) == 1;
    let mut ok = true;
    for k in 1..=alg.m {
        let pk = TwistedComplex::projective(&c.alg, k, 0, 0);
        let to_c = total_degree_classes(&TwHom::build(&pk, c));
        let from_c = total_degree_classes(&TwHom::build(c, &pk));
        let endk = TwHom::build(&pk, &pk);
        let topk = |f: &TwMap| {
            class_coords(&endk, &pk, &pk, f)
                .into_iter()
                .filter(|((s, _), _)| *s == n)
                .fold(Q::zero(), |a, (_, b)| a + b)
        };
        for (t, fs) in &to_c {
            let gs = from_c.get(&(n - *t)).cloned().unwrap_or_default();
            if pairing_rank(alg, &gs, fs, &topk) != fs.len() || gs.len() != fs.len() {
                ok = false;
            }
        }
        let total_from: usize = from_c.values().map(|v| v.len()).sum();
        let total_to: usize = to_c.values().map(|v| v.len()).sum();
        ok &= total_from == total_to;
    }
    rep.projective_pairings_ok = ok;
    rep.spherical = rep.end_pairing_ok && ok;
    rep
}

/// Finiteness of `⊕_i H(hom(P_k{i}, C))` and of `H(C)` for every `k`.
pub fn finiteness_check(c: &TwistedComplex) -> bool {
    let total: usize = c.cohomology_dims().values().sum();
    let bound = c.len() * c.alg.dim();
    total <= bound
        && (1..=c.alg.m).all(|k| {
            let pk = TwistedComplex::projective(&c.alg, k, 0, 0);
            ext_table(&pk, c).values().sum::<usize>() <= c.len() * c.alg.dim()
        })
}

/// Outcome of an orbit search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrbitResult {
    Found {
        start: usize,
        word: BraidWord,
        object: TwistedComplex,
    },
    Exhausted {
        explored: usize,
    },
}

/// Breadth-first search over braid words up to `depth`, keeping at most
/// `beam` words per level, from the starts `P_1..P_m`.
pub fn orbit_search(
    alg: &Arc<ZigzagAlgebra>,
    starts: &[usize],
    depth: usize,
    beam: usize,
    exec: Exec,
    pred: &(dyn Fn(&TwistedComplex) -> bool + Sync),
) -> OrbitResult {
    let m = alg.m;
    let mut explored = 0;
    let mut frontier: Vec<(usize, BraidWord, TwistedComplex)> = starts
        .iter()
        .map(|&k| {
            (
                k,
                BraidWord::default(),
                TwistedComplex::projective(alg, k, 0, 0),
            )
        })
        .collect();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for d in 0..=depth {
        let hits = exec.map(&frontier, |(_, _, c)| pred(c));
        explored += frontier.len();
        if let Some(pos) = hits.iter().position(|&h| h) {
            let (k, w, c) = frontier[pos].clone();
            return OrbitResult::Found {
                start: k,
                word: w,
                object: c,
            };
        }
        if d == depth {
            break;
        }
        let mut cand = Vec::new();
        for (k, w, c) in &frontier {
            for g in 1..=m {
                for s in [1i8, -1] {
                    if w.0.first() == Some(&(g, -s)) {
                        continue;
                    }
                    let mut w2 = vec![(g, s)];
                    w2.extend(w.0.iter().copied());
                    cand.push((*k, BraidWord(w2), c.clone()));
                }
            }
        }
        let next: Vec<(usize, BraidWord, TwistedComplex)> = exec.map(&cand, |(k, w, c)| {
            let (g, s) = w.0[0];
            let img = if s > 0 { twist(g, c) } else { untwist(g, c) };
            (*k, w.clone(), reduce(&img).canonical())
        });
        frontier.clear();
        for item in next {
            let key = format!("{:?}{:?}", item.2.gens, item.2.diff);
            if seen.insert(key) {
                frontier.push(item);
                if frontier.len() >= beam {
                    break;
                }
            }
        }
    }
    OrbitResult::Exhausted { explored }
}

/// Replaces internal shifts `i = r + nq ↦ r + n'q` for a complex over
/// `A_m^n`, giving the same shape over `A_m^{n'}`. All shifts must share
/// the residue `r` mod `n`; complexes that share it keep their relative
/// position, so `ext_table` keys move by [`scale_ext_key`].
pub fn scale_transfer(c: &TwistedComplex, n_new: i64) -> Result<TwistedComplex> {
    let n = c.alg.n;
    let alg = Arc::new(ZigzagAlgebra::build(c.alg.m, n_new)?);
    let Some(r) = c.gens.first().map(|g| g.i.rem_euclid(n)) else {
        return Ok(TwistedComplex::empty(&alg));
    };
    let mut gens = Vec::new();
    for g in &c.gens {
        if g.i.rem_euclid(n) != r {
            return Err(Error::Invalid(
                "mixed residues: the complex is decomposable".into(),
            ));
        }
        gens.push(Gen::new(g.k, r + n_new * (g.i - r).div_euclid(n), g.j));
    }
    TwistedComplex::new(&alg, gens, c.diff.clone())
}

/// `(s, t) ↦ (s n'/n, t − s + s n'/n)` on ext-table keys.
pub fn scale_ext_key((s, t): (i64, i64), n: i64, n_new: i64) -> Option<(i64, i64)> {
    if s % n != 0 {
        return None;
    }
    let s2 = s / n * n_new;
    Some((s2, t - s + s2))
}

/// Closed maps representing `H^{(0,0)}` when looking for isomorphisms.
pub fn degree_zero_classes(c0: &TwistedComplex, c1: &TwistedComplex) -> Vec<TwMap> {
    let hom = TwHom::build(c0, c1);
    let Some(b) = hom.blocks.get(&0) else {
        return Vec::new();
    };
    let h = b.complex.cohomology();
    h.degree(0)
        .map(|hd| hd.reps.iter().map(|r| b.to_map(0, r)).collect())
        .unwrap_or_default()
}

/// Cocycles of `D` of weight shift 0 and degree 0 with an elimination over
/// them, for solving `D x = y` in `hom(C0, C1)`.
pub fn solve_hom(c0: &TwistedComplex, c1: &TwistedComplex, y: &TwMap) -> Option<TwMap> {
    let hom = TwHom::build(c0, c1);
    let mut by_s: BTreeMap<i64, TwMap> = BTreeMap::new();
    for (k, q) in &y.terms {
        let (s, _) = key_degree(c0, c1, *k);
        by_s.entry(s)
            .or_insert_with(|| TwMap {
                deg: y.deg,
                terms: BTreeMap::new(),
            })
            .add(*k, q.clone());
    }
    let mut out = TwMap {
        deg: y.deg - 1,
        terms: BTreeMap::new(),
    };
    for (s, part) in by_s {
        let b = hom.blocks.get(&s)?;
        let target = b.coords(&part)?;
        let t = y.deg - 1;
        let cols = b.complex.d.get((t - b.lo) as usize)?;
        let mut e = Eliminator::for_vectors(b.complex.dim(t + 1), cols, true);
        for (j, col) in cols.iter().enumerate() {
            let _ = e.insert(col, Some(j));
        }
        let (res, combo) = e.reduce(&target);
        if !res.is_empty() {
            return None;
        }
        let x = b.to_map(t, &combo);
        out.add_scaled(&Q::one(), &x);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(m: usize, n: i64) -> Arc<ZigzagAlgebra> {
        Arc::new(ZigzagAlgebra::build(m, n).unwrap())
    }

    #[test]
    fn twist_of_neighbour() {
        for n in [2, 3] {
            let a = alg(2, n);
            let p2 = TwistedComplex::projective(&a, 2, 0, 0);
            let t = reduce(&twist(1, &p2));
            assert_eq!(t.len(), 2);
            assert_eq!(t.cohomology_dims(), BTreeMap::from([(0, 1), (n - 1, 1)]));
            assert_eq!(t.k_class(), vec![-1, 1]);
            assert!(t.to_module().validate().passed());
        }
    }

    #[test]
    fn twist_of_self_is_shift() {
        let a = alg(2, 2);
        let p1 = TwistedComplex::projective(&a, 1, 0, 0);
        let t = reduce(&twist(1, &p1));
        assert_eq!(t.gens, vec![Gen::new(1, 2, 1)]);
        let u = reduce(&untwist(1, &p1));
        assert_eq!(u.gens, vec![Gen::new(1, -2, -1)]);
    }

    #[test]
    fn round_trips() {
        let a = alg(3, 2);
        let p2 = TwistedComplex::projective(&a, 2, 0, 0);
        for k in 1..=3 {
            let r = reduce(&twist(k, &reduce(&untwist(k, &p2))));
            assert_eq!(r.gens, p2.gens, "k = {k}");
            let r = reduce(&untwist(k, &reduce(&twist(k, &p2))));
            assert_eq!(r.gens, p2.gens, "k = {k}");
        }
    }

    #[test]
    fn central_shift_m2() {
        for n in [2, 3] {
            let a = alg(2, n);
            for k in 1..=2 {
                let p = TwistedComplex::projective(&a, k, 0, 0);
                let d = apply_braid(&BraidWord::delta(2), &p).unwrap();
                assert_eq!(d.gens, vec![Gen::new(k, 3 * n, 4)], "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn gram_and_cardy() {
        let a = alg(3, 2);
        assert_eq!(
            gram_matrix(&a),
            vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 2]]
        );
        assert_eq!(int_determinant(&gram_matrix(&a)), 4);
        let b = alg(2, 3);
        assert_eq!(gram_matrix(&b), vec![vec![0, 1], vec![-1, 0]]);
        let p1 = TwistedComplex::projective(&b, 1, 0, 0);
        let c = apply_braid(&"1 2 -1".parse().unwrap(), &p1).unwrap();
        assert!(cardy_verify(&c, &p1));
        assert!(cardy_verify(&p1, &c));
    }

    #[test]
    fn scale_transfer_moves_ext_keys() {
        let a = alg(2, 4);
        let cs: Vec<TwistedComplex> = ["", "1 -2", "-1 2 1 -2"]
            .iter()
            .map(|w| {
                apply_braid(
                    &w.parse().unwrap(),
                    &TwistedComplex::projective(&a, 1, 0, 0),
                )
                .unwrap()
            })
            .collect();
        for c0 in &cs {
            let d0 = scale_transfer(c0, 2).unwrap();
            assert_eq!(&scale_transfer(&d0, 4).unwrap(), c0);
            for c1 in &cs {
                let d1 = scale_transfer(c1, 2).unwrap();
                let moved: BTreeMap<_, _> = ext_table(c0, c1)
                    .into_iter()
                    .filter(|(_, d)| *d > 0)
                    .map(|(k, d)| (scale_ext_key(k, 4, 2).unwrap(), d))
                    .collect();
                let direct: BTreeMap<_, _> = ext_table(&d0, &d1)
                    .into_iter()
                    .filter(|(_, d)| *d > 0)
                    .collect();
                assert_eq!(moved, direct);
            }
        }
        let mixed = TwistedComplex::projective(&a, 1, 0, 0)
            .direct_sum(&TwistedComplex::projective(&a, 2, 1, 0));
        assert!(scale_transfer(&mixed, 2).is_err());
    }

    #[test]
    fn spherical_projectives() {
        let a = alg(2, 2);
        let p1 = TwistedComplex::projective(&a, 1, 0, 0);
        assert!(spherical_check(&p1).spherical);
        let p2 = TwistedComplex::projective(&a, 2, 0, 0);
        assert!(!spherical_check(&p1.direct_sum(&p2)).spherical);
        let c = apply_braid(&"1 2 2 1".parse().unwrap(), &p1).unwrap();
        assert!(spherical_check(&c).spherical);
    }
}
