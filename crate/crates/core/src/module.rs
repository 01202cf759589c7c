//! A∞-modules over `A_m^n`, morphism complexes, cones, and quasi-isomorphisms.
//!
//! A module is a graded space whose basis vectors sit at a vertex `v`
//! (`m = m·e_v`), with structure maps stored as one degree-1 [`MultiMap`]
//! `b_M` (arity 0 is `μ^1`, arity `d` is `μ^{d+1}`). Strict unitality
//! `μ^2(m, e_v) = m` is implicit; words never contain units.
//!
//! A classical dg-module with differential `∂` and action `m·a` becomes
//! `μ^1(m) = (−1)^{|m|} ∂m`, `μ^2(m, a) = (−1)^{|a|} m·a`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::linalg::{rank_of, Eliminator, Inserted};
use crate::exact::{FiniteComplex, SparseVec, Q};
use crate::multimap::{maltese, word_weight, Input, Mono, MultiMap, Word};
use crate::zigzag::ZigzagAlgebra;

/// Basis vector of a module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModGen {
    pub label: String,
    pub deg: i64,
    pub vertex: usize,
    /// Second grading when the module is bigraded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<i64>,
}

/// A strictly unital A∞-module.
#[derive(Clone, Debug)]
pub struct AInfModule {
    pub alg: Arc<ZigzagAlgebra>,
    pub gens: Vec<ModGen>,
    /// Structure maps as a degree-1 multilinear map `M ⊗ Ā^{⊗d} → M`.
    pub mu: MultiMap,
}

/// First failure found by [`AInfModule::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleReport {
    pub checked_terms: usize,
    pub max_arity: usize,
    pub first_violation: Option<String>,
}

impl ModuleReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

impl AInfModule {
    pub fn dim(&self) -> usize {
        self.gens.len()
    }

    pub fn deg(&self, i: u32) -> i64 {
        self.gens[i as usize].deg
    }

    pub fn vertex(&self, i: u32) -> usize {
        self.gens[i as usize].vertex
    }

    pub fn is_bigraded(&self) -> bool {
        self.gens.iter().all(|g| g.weight.is_some())
    }

    pub fn weight(&self, i: u32) -> Option<i64> {
        self.gens[i as usize].weight
    }

    pub fn degree_range(&self) -> Option<(i64, i64)> {
        let lo = self.gens.iter().map(|g| g.deg).min()?;
        let hi = self.gens.iter().map(|g| g.deg).max()?;
        Some((lo, hi))
    }

    /// The zero module.
    pub fn zero(alg: Arc<ZigzagAlgebra>) -> AInfModule {
        AInfModule {
            alg,
            gens: Vec::new(),
            mu: MultiMap::zero(1, 0),
        }
    }

    /// The projective `P_k = e_k A`: paths ending at `k`, bigraded by
    /// `(0, path degree)`.
    pub fn projective(alg: &Arc<ZigzagAlgebra>, k: usize) -> AInfModule {
        let paths: Vec<usize> = (0..alg.dim()).filter(|&p| alg.tgt(p) == k).collect();
        Self::from_paths(alg, &paths, &format!("P{k}"))
    }

    /// The free module `A`.
    pub fn free(alg: &Arc<ZigzagAlgebra>) -> AInfModule {
        let paths: Vec<usize> = (0..alg.dim()).collect();
        Self::from_paths(alg, &paths, "A")
    }

    fn from_paths(alg: &Arc<ZigzagAlgebra>, paths: &[usize], name: &str) -> AInfModule {
        let gens = paths
            .iter()
            .map(|&p| ModGen {
                label: format!("{name}:{}", alg.label(p)),
                deg: alg.deg(p),
                vertex: alg.src(p),
                weight: Some(alg.deg(p)),
            })
            .collect();
        let pos: BTreeMap<usize, usize> = paths.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut mu = MultiMap::zero(1, 0);
        for (i, &p) in paths.iter().enumerate() {
            for a in alg.nonunits() {
                if let Some((q, c)) = alg.mul_basis(p, a) {
                    if let Some(&j) = pos.get(&q) {
                        let coeff = c * &Q::sign(alg.deg(a));
                        mu.add(Input::new(i, &[a]), Mono::new(), j as u32, coeff);
                    }
                }
            }
        }
        AInfModule {
            alg: alg.clone(),
            gens,
            mu,
        }
    }

    /// Module from classical dg data: differential `∂` (column images) and
    /// right action of non-unit basis elements.
    pub fn from_dg(
        alg: &Arc<ZigzagAlgebra>,
        gens: Vec<ModGen>,
        partial: &[SparseVec],
        action: &BTreeMap<(usize, usize), SparseVec>,
    ) -> AInfModule {
        let mut mu = MultiMap::zero(1, 0);
        for (i, img) in partial.iter().enumerate() {
            let s = Q::sign(gens[i].deg);
            for (j, c) in img {
                mu.add(Input::new(i, &[]), Mono::new(), *j as u32, c * &s);
            }
        }
        for ((i, a), img) in action {
            let s = Q::sign(alg.deg(*a));
            for (j, c) in img {
                mu.add(Input::new(*i, &[*a]), Mono::new(), *j as u32, c * &s);
            }
        }
        AInfModule {
            alg: alg.clone(),
            gens,
            mu,
        }
    }

    /// `M[t]`: degrees lowered by `t`; structure maps unchanged.
    pub fn shift(&self, t: i64) -> AInfModule {
        let mut out = self.clone();
        for g in &mut out.gens {
            g.deg -= t;
        }
        out
    }

    /// `M{s}`: raises the second grading and the total degree by `s`.
    pub fn shift_internal(&self, s: i64) -> AInfModule {
        let mut out = self.clone();
        for g in &mut out.gens {
            g.deg += s;
            g.weight = g.weight.map(|w| w + s);
        }
        out
    }

    /// Direct sum; the second summand's basis follows the first.
    pub fn direct_sum(&self, other: &AInfModule) -> AInfModule {
        let off = self.dim() as u32;
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        let mut mu = self.mu.clone();
        mu.add_scaled(&Q::one(), &other.mu.relabel(&|i| i + off, &|i| i + off));
        AInfModule {
            alg: self.alg.clone(),
            gens,
            mu,
        }
    }

    /// The identity morphism.
    pub fn identity(&self) -> MultiMap {
        let mut id = MultiMap::zero(0, 0);
        for i in 0..self.dim() {
            id.add(Input::new(i, &[]), Mono::new(), i as u32, Q::one());
        }
        id
    }

    /// Checks composability, degrees, and the A∞-module relations.
    pub fn validate(&self) -> ModuleReport {
        let alg = &*self.alg;
        let mut rep = ModuleReport {
            max_arity: self.mu.max_arity(),
            ..Default::default()
        };
        if self.mu.degree != 1 || self.mu.vars != 0 {
            rep.first_violation = Some("structure maps must have degree 1".into());
            return rep;
        }
        for (inp, _, o, _) in self.mu.iter() {
            rep.checked_terms += 1;
            if let Some(msg) = check_input(self, inp) {
                rep.first_violation = Some(msg);
                return rep;
            }
            let want_vertex = end_vertex(self, inp);
            if self.vertex(o) != want_vertex {
                rep.first_violation = Some(format!(
                    "μ on {} lands at the wrong vertex",
                    self.describe(inp)
                ));
                return rep;
            }
            let want =
                self.deg(inp.m) + inp.word.iter().map(|&a| alg.deg(a as usize)).sum::<i64>() + 1
                    - inp.arity() as i64;
            if self.deg(o) != want {
                rep.first_violation =
                    Some(format!("μ on {} has the wrong degree", self.describe(inp)));
                return rep;
            }
        }
        let rel = MultiMap::compose(alg, &self.mu, &self.mu, false)
            .plus(&MultiMap::insert_product(alg, &self.mu));
        if let Some((inp, _, _, _)) = rel.iter().next() {
            rep.first_violation = Some(format!("A∞ relation fails on {}", self.describe(inp)));
        }
        rep
    }

    pub fn describe(&self, inp: &Input) -> String {
        let mut s = format!("({}", self.gens[inp.m as usize].label);
        for a in &inp.word {
            s.push_str(", ");
            s.push_str(self.alg.label(*a as usize));
        }
        s.push(')');
        s
    }

    /// The complex `(M, μ^1)`.
    pub fn underlying_complex(&self) -> (FiniteComplex, Vec<(i64, usize)>) {
        let (lo, hi) = self.degree_range().unwrap_or((0, 0));
        let mut dims = vec![0usize; (hi - lo + 1) as usize];
        let mut pos = Vec::with_capacity(self.dim());
        for g in &self.gens {
            let d = &mut dims[(g.deg - lo) as usize];
            pos.push((g.deg, *d));
            *d += 1;
        }
        let mut c = FiniteComplex::new(lo, dims);
        let mut cols: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for (inp, _, o, v) in self.mu.iter() {
            if inp.arity() == 0 {
                cols.entry(inp.m as usize)
                    .or_default()
                    .push((pos[o as usize].1, v.clone()));
            }
        }
        for (i, mut col) in cols {
            col.sort_by_key(|e| e.0);
            c.set_column(pos[i].0, pos[i].1, col);
        }
        (c, pos)
    }

    /// `dim H^k(M)` per degree.
    pub fn cohomology_dims(&self) -> BTreeMap<i64, usize> {
        if self.dim() == 0 {
            return BTreeMap::new();
        }
        self.underlying_complex().0.cohomology_dims()
    }

    /// Labels of the basis in JSON form.
    pub fn to_json(&self) -> ModuleJson {
        let mut mu = Vec::new();
        for (inp, _, o, c) in self.mu.iter() {
            mu.push(MuJson {
                d: inp.arity(),
                inputs: std::iter::once(self.gens[inp.m as usize].label.clone())
                    .chain(
                        inp.word
                            .iter()
                            .map(|&a| self.alg.label(a as usize).to_string()),
                    )
                    .collect(),
                output: self.gens[o as usize].label.clone(),
                coeff: c.clone(),
            });
        }
        ModuleJson {
            algebra: AlgebraRef {
                m: self.alg.m,
                n: self.alg.n,
            },
            basis: self.gens.clone(),
            mu,
        }
    }

    pub fn from_json(j: &ModuleJson) -> Result<AInfModule> {
        let alg = Arc::new(ZigzagAlgebra::build(j.algebra.m, j.algebra.n)?);
        let idx: BTreeMap<&str, usize> = j
            .basis
            .iter()
            .enumerate()
            .map(|(i, g)| (g.label.as_str(), i))
            .collect();
        if idx.len() != j.basis.len() {
            return Err(Error::Invalid("duplicate module labels".into()));
        }
        let mut mu = MultiMap::zero(1, 0);
        for t in &j.mu {
            if t.inputs.len() != t.d + 1 {
                return Err(Error::Invalid("arity does not match the input list".into()));
            }
            let m = *idx
                .get(t.inputs[0].as_str())
                .ok_or_else(|| Error::Invalid(format!("unknown label {}", t.inputs[0])))?;
            let mut word = Vec::new();
            for l in &t.inputs[1..] {
                let a = alg
                    .index(l)
                    .ok_or_else(|| Error::Invalid(format!("unknown algebra label {l}")))?;
                if alg.is_unit(a) {
                    return Err(Error::Invalid(
                        "structure maps with unit inputs are implicit".into(),
                    ));
                }
                word.push(a);
            }
            let o = *idx
                .get(t.output.as_str())
                .ok_or_else(|| Error::Invalid(format!("unknown label {}", t.output)))?;
            mu.add(Input::new(m, &word), Mono::new(), o as u32, t.coeff.clone());
        }
        Ok(AInfModule {
            alg,
            gens: j.basis.clone(),
            mu,
        })
    }
}

fn check_input(m: &AInfModule, inp: &Input) -> Option<String> {
    let alg = &*m.alg;
    let mut v = m.vertex(inp.m);
    for &a in &inp.word {
        let a = a as usize;
        if alg.is_unit(a) {
            return Some(format!("unit in the input {}", m.describe(inp)));
        }
        if alg.tgt(a) != v {
            return Some(format!("non-composable input {}", m.describe(inp)));
        }
        v = alg.src(a);
    }
    None
}

/// Vertex of the output of a map on `inp` (R-linearity).
fn end_vertex(m: &AInfModule, inp: &Input) -> usize {
    match inp.word.last() {
        Some(&a) => m.alg.src(a as usize),
        None => m.vertex(inp.m),
    }
}

/// JSON reference to an algebra.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraRef {
    pub m: usize,
    pub n: i64,
}

/// On-disk module format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleJson {
    pub algebra: AlgebraRef,
    pub basis: Vec<ModGen>,
    pub mu: Vec<MuJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuJson {
    pub d: usize,
    pub inputs: Vec<String>,
    pub output: String,
    pub coeff: Q,
}

// ---------------------------------------------------------------------------
// Morphism complexes

/// `μ^1` on `hom(M0, M1)`.
pub fn hom_differential(m0: &AInfModule, m1: &AInfModule, phi: &MultiMap) -> MultiMap {
    let alg = &*m0.alg;
    let t1 = MultiMap::compose(alg, &m1.mu, phi, true);
    let t2 = MultiMap::compose(alg, phi, &m0.mu, false);
    let t3 = MultiMap::insert_product(alg, phi);
    let mut out = t1;
    let s = -Q::sign(phi.degree);
    out.add_scaled(&s, &t2);
    out.add_scaled(&s, &t3);
    out.degree = phi.degree + 1;
    out
}

/// `μ^2(ψ, φ) = ψ ∘ φ`.
pub fn hom_compose(alg: &ZigzagAlgebra, psi: &MultiMap, phi: &MultiMap) -> MultiMap {
    MultiMap::compose(alg, psi, phi, true)
}

/// Converts an internal morphism to the displayed convention of the
/// module equations: multiplies `φ(m, w)` by `(−1)^{|m| + ✠(w)}`.
pub fn display_convention(m0: &AInfModule, phi: &MultiMap) -> MultiMap {
    let mut out = MultiMap::zero(phi.degree, phi.vars);
    for (inp, mo, o, c) in phi.iter() {
        let s = Q::sign(m0.deg(inp.m) + maltese(&m0.alg, &inp.word));
        out.add(inp.clone(), mo.clone(), o, c * &s);
    }
    out
}

/// Enumerates composable non-unit words of length `≤ max_len` starting at
/// vertex `v` (the first letter `a_d` must end at `v`).
pub fn words_from(alg: &ZigzagAlgebra, v: usize, max_len: usize) -> Vec<Word> {
    let nonunits = alg.nonunits();
    let mut out = vec![Word::new()];
    let mut frontier = vec![(Word::new(), v)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (w, at) in &frontier {
            for &a in &nonunits {
                if alg.tgt(a) == *at {
                    let mut w2 = w.clone();
                    w2.push(a as u16);
                    next.push((w2, alg.src(a)));
                }
            }
        }
        out.extend(next.iter().map(|(w, _)| w.clone()));
        frontier = next;
    }
    out
}

/// Basis element of a morphism space: `(input, output)`.
pub type HomKey = (Input, u32);

/// Options for enumerating morphism spaces.
#[derive(Clone, Debug)]
pub struct HomSpec {
    pub max_arity: usize,
    /// Restrict to morphisms shifting the second grading by this amount.
    pub weight_shift: Option<i64>,
}

/// Basis of `hom^k(M0, M1)` restricted to arity `≤ spec.max_arity`.
pub fn hom_basis(m0: &AInfModule, m1: &AInfModule, k: i64, spec: &HomSpec) -> Vec<HomKey> {
    let alg = &*m0.alg;
    let mut out = Vec::new();
    let mut words_at: BTreeMap<usize, Vec<Word>> = BTreeMap::new();
    for i in 0..m0.dim() {
        let v = m0.gens[i].vertex;
        let words = words_at
            .entry(v)
            .or_insert_with(|| words_from(alg, v, spec.max_arity));
        for w in words.iter() {
            let inp = Input {
                m: i as u32,
                word: w.clone(),
            };
            let end = match w.last() {
                Some(&a) => alg.src(a as usize),
                None => v,
            };
            let deg = m0.gens[i].deg + w.iter().map(|&a| alg.deg(a as usize)).sum::<i64>() + k
                - w.len() as i64;
            for (j, g) in m1.gens.iter().enumerate() {
                if g.vertex != end || g.deg != deg {
                    continue;
                }
                if let Some(s) = spec.weight_shift {
                    match (m0.gens[i].weight, g.weight) {
                        (Some(w0), Some(w1)) if w1 == w0 + word_weight(alg, w) + s => {}
                        _ => continue,
                    }
                }
                out.push((inp.clone(), j as u32));
            }
        }
    }
    out
}

/// Largest arity that can carry a nonzero morphism of degree in `ks`,
/// when degree bounds force one (requires `n > m`).
pub fn forced_max_arity(m0: &AInfModule, m1: &AInfModule, ks: (i64, i64)) -> Option<usize> {
    let alg = &*m0.alg;
    let (m, n) = (alg.m as i64, alg.n);
    if n <= m {
        return None;
    }
    let (lo0, hi0) = m0.degree_range()?;
    let (lo1, hi1) = m1.degree_range()?;
    // output degree = |m| + ✠(w) + k must lie in [lo1, hi1]
    let upper = hi1 - lo0 - ks.0;
    let lower = lo1 - hi0 - ks.1;
    // each block of m letters has ✠ ≥ n − m, a partial block ≥ −(m − 1)
    let bound = (m * (upper + m - 1)).div_euclid(n - m) + m;
    let bound = bound.max(0) as usize;
    let mut best = 0usize;
    let verts: std::collections::BTreeSet<usize> = m0.gens.iter().map(|g| g.vertex).collect();
    for v in verts {
        for w in words_from(alg, v, bound) {
            let s = maltese(alg, &w);
            if s >= lower && s <= upper {
                best = best.max(w.len());
            }
        }
    }
    Some(best)
}

/// Truncated morphism complex `hom(M0, M1)` in degrees `[lo, hi]`.
///
/// The complex is the quotient by components of arity above the cap; when
/// degree bounds force all components into the cap, `exact` is set and
/// the truncation is the honest complex.
#[derive(Clone, Debug)]
pub struct HomComplex {
    pub lo: i64,
    pub bases: Vec<Vec<HomKey>>,
    pub complex: FiniteComplex,
    pub exact: bool,
    pub max_arity: usize,
}

impl HomComplex {
    pub fn build(m0: &AInfModule, m1: &AInfModule, lo: i64, hi: i64, spec: &HomSpec) -> HomComplex {
        let forced = forced_max_arity(m0, m1, (lo, hi));
        let exact = matches!(forced, Some(f) if f <= spec.max_arity);
        let bases: Vec<Vec<HomKey>> = (lo..=hi).map(|k| hom_basis(m0, m1, k, spec)).collect();
        let index: Vec<BTreeMap<HomKey, usize>> = bases
            .iter()
            .map(|b| b.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect())
            .collect();
        let mut complex = FiniteComplex::new(lo, bases.iter().map(|b| b.len()).collect());
        for k in lo..hi {
            let i = (k - lo) as usize;
            for (j, (inp, o)) in bases[i].iter().enumerate() {
                let mut phi = MultiMap::zero(k, 0);
                phi.add(inp.clone(), Mono::new(), *o, Q::one());
                let d = hom_differential(m0, m1, &phi);
                let mut col = Vec::new();
                for (inp2, _, o2, c) in d.iter() {
                    if inp2.arity() > spec.max_arity {
                        continue;
                    }
                    if let Some(&r) = index[i + 1].get(&(inp2.clone(), o2)) {
                        col.push((r, c.clone()));
                    }
                }
                col.sort_by_key(|e| e.0);
                complex.set_column(k, j, col);
            }
        }
        HomComplex {
            lo,
            bases,
            complex,
            exact,
            max_arity: spec.max_arity,
        }
    }

    pub fn to_map(&self, k: i64, v: &SparseVec) -> MultiMap {
        let mut out = MultiMap::zero(k, 0);
        for (j, c) in v {
            let (inp, o) = &self.bases[(k - self.lo) as usize][*j];
            out.add(inp.clone(), Mono::new(), *o, c.clone());
        }
        out
    }
}

/// Exactly closed morphisms of degree `k` with arity `≤ max_arity`
/// (equations in all arities).
pub fn closed_morphisms(m0: &AInfModule, m1: &AInfModule, k: i64, spec: &HomSpec) -> Vec<MultiMap> {
    let basis = hom_basis(m0, m1, k, spec);
    let mut rows: BTreeMap<(Input, u32), usize> = BTreeMap::new();
    let mut cols = Vec::with_capacity(basis.len());
    for (inp, o) in &basis {
        let mut phi = MultiMap::zero(k, 0);
        phi.add(inp.clone(), Mono::new(), *o, Q::one());
        let d = hom_differential(m0, m1, &phi);
        let mut col = Vec::new();
        for (inp2, _, o2, c) in d.iter() {
            let n = rows.len();
            let r = *rows.entry((inp2.clone(), o2)).or_insert(n);
            col.push((r, c.clone()));
        }
        col.sort_by_key(|e| e.0);
        cols.push(col);
    }
    let mut e = Eliminator::for_vectors(rows.len(), &cols, true);
    let mut out = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        if let Inserted::Dependent(v) = e.insert(c, Some(j)) {
            let mut phi = MultiMap::zero(k, 0);
            for (t, x) in v {
                let (inp, o) = &basis[t];
                phi.add(inp.clone(), Mono::new(), *o, x);
            }
            out.push(phi);
        }
    }
    out
}

/// Mapping cone of a closed degree-0 morphism, with the triangle maps
/// `M1 → Cone` and `Cone → M0[1]`.
pub struct Cone {
    pub module: AInfModule,
    pub incl: MultiMap,
    pub proj: MultiMap,
}

pub fn cone(m0: &AInfModule, m1: &AInfModule, phi: &MultiMap) -> Result<Cone> {
    if phi.degree != 0 {
        return Err(Error::Invalid("cone needs a degree-0 morphism".into()));
    }
    if !hom_differential(m0, m1, phi).is_zero() {
        return Err(Error::Invalid("cone of a non-closed morphism".into()));
    }
    let alg = &*m0.alg;
    let off = m0.dim() as u32;
    let mut gens: Vec<ModGen> = m0
        .gens
        .iter()
        .map(|g| ModGen {
            label: format!("s{}", g.label),
            deg: g.deg - 1,
            vertex: g.vertex,
            weight: g.weight,
        })
        .collect();
    gens.extend(m1.gens.iter().cloned());
    let mut mu = m0.mu.clone();
    mu.add_scaled(&Q::one(), &m1.mu.relabel(&|i| i + off, &|i| i + off));
    for (inp, _, o, c) in phi.iter() {
        let s = Q::sign(m0.deg(inp.m) + maltese(alg, &inp.word));
        mu.add(inp.clone(), Mono::new(), o + off, c * &s);
    }
    let mut incl = MultiMap::zero(0, 0);
    for i in 0..m1.dim() {
        incl.add(Input::new(i, &[]), Mono::new(), i as u32 + off, Q::one());
    }
    let mut proj = MultiMap::zero(0, 0);
    for i in 0..m0.dim() {
        proj.add(Input::new(i, &[]), Mono::new(), i as u32, Q::one());
    }
    Ok(Cone {
        module: AInfModule {
            alg: m0.alg.clone(),
            gens,
            mu,
        },
        incl,
        proj,
    })
}

/// Matrix of the map `H(M0) → H(M1)` induced by the arity-0 part of `φ`,
/// and the dimensions of source and target in each degree.
fn induced_rank(m0: &AInfModule, m1: &AInfModule, phi: &MultiMap) -> (usize, usize, usize) {
    let (c0, pos0) = m0.underlying_complex();
    let (c1, pos1) = m1.underlying_complex();
    let h0 = c0.cohomology();
    let h1 = c1.cohomology();
    let mut total_rank = 0;
    for (k, hk) in &h0.degrees {
        let Some(hk1) = h1.degree(*k + phi.degree) else {
            continue;
        };
        let mut images = Vec::new();
        for rep in &hk.reps {
            let mut img: BTreeMap<usize, Q> = BTreeMap::new();
            for (j, c) in rep {
                let gi = pos0
                    .iter()
                    .enumerate()
                    .find(|(_, p)| p.0 == *k && p.1 == *j)
                    .unwrap()
                    .0;
                for (inp, _, o, v) in phi.iter() {
                    if inp.arity() == 0 && inp.m as usize == gi {
                        *img.entry(pos1[o as usize].1).or_insert_with(Q::zero) += c * v;
                    }
                }
            }
            let img: SparseVec = img.into_iter().filter(|(_, c)| !c.is_zero()).collect();
            images.push(hk1.project(&img).unwrap_or_default());
        }
        let vecs: Vec<SparseVec> = images
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (i, c.clone()))
                    .collect()
            })
            .collect();
        total_rank += rank_of(hk1.dim(), &vecs);
    }
    (total_rank, h0.total_dim(), h1.total_dim())
}

/// Searches for a degree-0 closed morphism inducing an isomorphism on
/// cohomology. Absence after the budget is not a proof of non-existence.
pub fn quasi_iso_search(
    m0: &AInfModule,
    m1: &AInfModule,
    attempts: usize,
    max_arity: usize,
    seed: u64,
) -> Option<MultiMap> {
    if m0.cohomology_dims() != m1.cohomology_dims() {
        return None;
    }
    let closed = closed_morphisms(
        m0,
        m1,
        0,
        &HomSpec {
            max_arity,
            weight_shift: None,
        },
    );
    if closed.is_empty() {
        return if m0.cohomology_dims().is_empty() {
            Some(MultiMap::zero(0, 0))
        } else {
            None
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..attempts {
        let mut phi = MultiMap::zero(0, 0);
        for c in &closed {
            let f = if attempt == 0 && closed.len() == 1 {
                1
            } else {
                rng.gen_range(-5i64..=5)
            };
            phi.add_scaled(&Q::from(f), c);
        }
        let (r, d0, d1) = induced_rank(m0, m1, &phi);
        if r == d0 && r == d1 {
            return Some(phi);
        }
    }
    None
}

/// Left multiplication `P_k → P_l` by `x ∈ e_l A e_k`, as the morphism
/// `m ↦ (−1)^{|x||m|} x·m` between the projective modules.
pub fn left_mult(alg: &Arc<ZigzagAlgebra>, k: usize, l: usize, x: usize) -> Result<MultiMap> {
    if alg.src(x) != k || alg.tgt(x) != l {
        return Err(Error::Invalid(format!(
            "{} does not map P{k} to P{l}",
            alg.label(x)
        )));
    }
    let src: Vec<usize> = (0..alg.dim()).filter(|&p| alg.tgt(p) == k).collect();
    let tgt: BTreeMap<usize, usize> = (0..alg.dim())
        .filter(|&p| alg.tgt(p) == l)
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    let mut phi = MultiMap::zero(alg.deg(x), 0);
    for (i, &p) in src.iter().enumerate() {
        if let Some((q, c)) = alg.mul_basis(x, p) {
            let s = Q::sign(alg.deg(x) * alg.deg(p));
            phi.add(Input::new(i, &[]), Mono::new(), tgt[&q] as u32, c * &s);
        }
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(m: usize, n: i64) -> Arc<ZigzagAlgebra> {
        Arc::new(ZigzagAlgebra::build(m, n).unwrap())
    }

    #[test]
    fn projectives_and_free_validate() {
        let a = alg(2, 2);
        assert!(AInfModule::free(&a).validate().passed());
        for k in 1..=2 {
            let p = AInfModule::projective(&a, k);
            assert!(p.validate().passed());
            assert_eq!(p.dim(), 3);
        }
    }

    #[test]
    fn sign_fault_detected() {
        let a = alg(2, 2);
        let mut p = AInfModule::projective(&a, 1);
        let (inp, mo, o, c) = {
            let (i, m, o, c) = p.mu.iter().next().unwrap();
            (i.clone(), m.clone(), o, c.clone())
        };
        p.mu.add(inp, mo, o, -(&c + &c));
        assert!(!p.validate().passed());
    }

    #[test]
    fn shift_keeps_relations() {
        let a = alg(3, 2);
        let p = AInfModule::projective(&a, 2).shift(3).shift_internal(-1);
        assert!(p.validate().passed());
    }

    fn random_morphism(m0: &AInfModule, m1: &AInfModule, k: i64, d: usize, seed: u64) -> MultiMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut phi = MultiMap::zero(k, 0);
        for (inp, o) in hom_basis(
            m0,
            m1,
            k,
            &HomSpec {
                max_arity: d,
                weight_shift: None,
            },
        ) {
            let c = rng.gen_range(-3i64..=3);
            phi.add(inp, Mono::new(), o, Q::from(c));
        }
        phi
    }

    fn sample_cone(a: &Arc<ZigzagAlgebra>) -> AInfModule {
        let p1 = AInfModule::projective(a, 1);
        let p2 = AInfModule::projective(a, 2);
        let x = (0..a.dim())
            .find(|&x| !a.is_unit(x) && a.src(x) == 1 && a.tgt(x) == 2)
            .unwrap();
        let phi = left_mult(a, 1, 2, x).unwrap();
        let phi = MultiMap { degree: 0, ..phi };
        let p1s = p1.shift_internal(0).shift(-a.deg(x));
        cone(&p1s, &p2, &phi).unwrap().module
    }

    #[test]
    fn left_mult_closed_and_cone_valid() {
        for n in [1, 2, 3] {
            let a = alg(2, n);
            let c = sample_cone(&a);
            assert!(c.validate().passed(), "n = {n}");
            assert_eq!(c.dim(), 6);
        }
    }

    #[test]
    fn hom_differential_squares_to_zero_and_leibniz() {
        let a = alg(2, 2);
        let c = sample_cone(&a);
        let p1 = AInfModule::projective(&a, 1);
        let p2 = AInfModule::projective(&a, 2);
        for k in -2..=2 {
            for seed in 0..3 {
                let phi = random_morphism(&p1, &c, k, 2, seed);
                let dd = hom_differential(&p1, &c, &hom_differential(&p1, &c, &phi));
                assert!(dd.is_zero(), "d² ≠ 0 at k = {k}");
                for l in -2..=2 {
                    let psi = random_morphism(&c, &p2, l, 2, seed + 7);
                    let lhs = hom_differential(&p1, &p2, &hom_compose(&a, &psi, &phi));
                    let mut rhs = hom_compose(&a, &hom_differential(&c, &p2, &psi), &phi);
                    rhs.add_scaled(
                        &Q::sign(l),
                        &hom_compose(&a, &psi, &hom_differential(&p1, &c, &phi)),
                    );
                    assert!(lhs.minus(&rhs).is_zero(), "Leibniz fails at ({k}, {l})");
                }
            }
        }
    }

    #[test]
    fn cone_of_identity_is_acyclic() {
        let a = alg(2, 3);
        let p = AInfModule::projective(&a, 1);
        let c = cone(&p, &p, &p.identity()).unwrap().module;
        assert!(c.validate().passed());
        assert!(c.cohomology_dims().is_empty());
        assert!(quasi_iso_search(&p, &p, 3, 1, 1).is_some());
    }

    #[test]
    fn hom_complex_between_projectives() {
        let a = alg(1, 3);
        let p = AInfModule::projective(&a, 1);
        let h = HomComplex::build(
            &p,
            &p,
            -1,
            7,
            &HomSpec {
                max_arity: 2,
                weight_shift: None,
            },
        );
        assert!(h.exact);
        let dims: BTreeMap<i64, usize> = h
            .complex
            .cohomology_dims()
            .into_iter()
            .filter(|(k, _)| *k > -1 && *k < 7)
            .collect();
        assert_eq!(dims, BTreeMap::from([(0, 1), (3, 1)]));
    }
}
