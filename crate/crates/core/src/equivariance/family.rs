//! Semi-free dg models and Laurent families of their morphisms.
//!
//! A [`SemiFree`] module is `⊕_x x·A` with a differential given on
//! generators, `d(x) = Σ y·δ_{xy}`, and only a single (total) grading.
//! Twisted complexes are the case with a compatible second grading, which
//! is kept separately as the known lift for comparison.
//!
//! A [`Family`] over `G^r` is an `A`-linear map `M → γ*N` for every
//! `g = (g_r, …, g_1)`, where `γ*N` is `N` with the action twisted by
//! `a ↦ (g_r ⋯ g_1)^{w(a)} a`. It is stored on generators, as keys
//! `(x, y, path)` with Laurent coefficients. In a composite `G∘F` the
//! variables of `F` are the lower ones, and every variable of `G` is
//! shifted by the weight of the path that `F` produced.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::linalg::{axpy, KeyedSystem};
use crate::exact::{Cohomology, FiniteComplex, SparseMatrix, SparseVec, Q};
use crate::multimap::Mono;
use crate::twisted::{TwKey, TwistedComplex};
use crate::zigzag::ZigzagAlgebra;

/// Generator of a semi-free module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeGen {
    pub vertex: usize,
    pub deg: i64,
}

/// Semi-free dg module of finite rank.
#[derive(Clone, Debug)]
pub struct SemiFree {
    pub alg: Arc<ZigzagAlgebra>,
    pub gens: Vec<FreeGen>,
    /// `(x, y) → δ_{xy} ∈ e_{v(y)} A e_{v(x)}`.
    pub diff: BTreeMap<(usize, usize), SparseVec>,
    /// Known second grading of the generators, when there is one.
    pub lift: Option<Vec<i64>>,
}

impl SemiFree {
    /// Builds and checks a module.
    pub fn new(
        alg: &Arc<ZigzagAlgebra>,
        gens: Vec<FreeGen>,
        diff: BTreeMap<(usize, usize), SparseVec>,
        lift: Option<Vec<i64>>,
    ) -> Result<SemiFree> {
        let m = SemiFree {
            alg: alg.clone(),
            gens,
            diff: diff.into_iter().filter(|(_, v)| !v.is_empty()).collect(),
            lift,
        };
        m.check()?;
        Ok(m)
    }

    /// The underlying semi-free module of a twisted complex, remembering
    /// the internal shifts as the lift.
    pub fn from_twisted(c: &TwistedComplex) -> SemiFree {
        SemiFree {
            alg: c.alg.clone(),
            gens: c
                .gens
                .iter()
                .map(|g| FreeGen {
                    vertex: g.k,
                    deg: g.i - g.j,
                })
                .collect(),
            diff: c.diff.clone(),
            lift: Some(c.gens.iter().map(|g| g.i).collect()),
        }
    }

    pub fn forget_lift(&self) -> SemiFree {
        SemiFree {
            lift: None,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Degree bookkeeping and `d² = 0`.
    pub fn check(&self) -> Result<()> {
        let alg = &*self.alg;
        for (&(a, b), x) in &self.diff {
            let (Some(g0), Some(g1)) = (self.gens.get(a), self.gens.get(b)) else {
                return Err(Error::Invalid(format!("entry ({a}, {b}) out of range")));
            };
            for (y, _) in x {
                if alg.src(*y) != g0.vertex
                    || alg.tgt(*y) != g1.vertex
                    || g0.deg + 1 != g1.deg + alg.deg(*y)
                {
                    return Err(Error::Invalid(format!(
                        "entry ({a}, {b}) has a term of the wrong type"
                    )));
                }
            }
        }
        if let Some(l) = &self.lift {
            if l.len() != self.len() {
                return Err(Error::Invalid("lift has the wrong length".into()));
            }
        }
        let d = self.differential();
        if !Family::compose(alg, &d, &d).is_zero() {
            return Err(Error::Malformed("d∘d ≠ 0".into()));
        }
        Ok(())
    }

    /// The differential as a constant family of degree 1.
    pub fn differential(&self) -> Family {
        let mut f = Family::zero(1, 0);
        for (&(a, b), x) in &self.diff {
            for (y, c) in x {
                f.add((a, b, *y), Mono::new(), c.clone());
            }
        }
        f
    }

    pub fn identity(&self) -> Family {
        let mut f = Family::zero(0, 0);
        for (a, g) in self.gens.iter().enumerate() {
            f.add((a, a, self.alg.idempotent(g.vertex)), Mono::new(), Q::one());
        }
        f
    }

    pub fn direct_sum(&self, other: &SemiFree) -> SemiFree {
        let off = self.len();
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().copied());
        let mut diff = self.diff.clone();
        for (&(a, b), x) in &other.diff {
            diff.insert((a + off, b + off), x.clone());
        }
        let lift = match (&self.lift, &other.lift) {
            (Some(a), Some(b)) => Some(a.iter().chain(b.iter()).copied().collect()),
            _ => None,
        };
        SemiFree {
            alg: self.alg.clone(),
            gens,
            diff,
            lift,
        }
    }

    /// Generator degree range.
    pub fn degree_range(&self) -> Option<(i64, i64)> {
        let lo = self.gens.iter().map(|g| g.deg).min()?;
        let hi = self.gens.iter().map(|g| g.deg).max()?;
        Some((lo, hi))
    }

    /// Spread of generator degrees.
    pub fn width(&self) -> i64 {
        self.degree_range().map(|(lo, hi)| hi - lo).unwrap_or(0)
    }

    /// The same module presented through `φ = id + N` with `N` of degree 0
    /// and strictly increasing in the generator order: `d' = φ^{-1} d φ`.
    /// The lift is dropped since the new basis need not respect it.
    pub fn conjugate(&self, n: &Family) -> Result<SemiFree> {
        if n.deg != 0 || n.vars != 0 || n.terms.keys().any(|(a, b, _)| a >= b) {
            return Err(Error::Invalid(
                "conjugation needs a strictly increasing degree-0 map".into(),
            ));
        }
        let alg = &*self.alg;
        let phi = self.identity().plus(n);
        let mut inv = self.identity();
        let mut power = self.identity();
        for k in 1..=self.len() {
            power = Family::compose(alg, n, &power);
            if power.is_zero() {
                break;
            }
            inv.add_scaled(&Q::sign(k as i64), &power);
        }
        let d = Family::compose(alg, &inv, &Family::compose(alg, &self.differential(), &phi));
        let mut diff: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
        for ((a, b, y), _, c) in d.iter() {
            diff.entry((*a, *b)).or_default().push((*y, c.clone()));
        }
        for v in diff.values_mut() {
            v.sort_by_key(|e| e.0);
        }
        SemiFree::new(&self.alg, self.gens.clone(), diff, None)
    }

    /// A random strictly increasing degree-0 map with small integer entries.
    pub fn random_unipotent(&self, rng: &mut impl rand::Rng) -> Family {
        let mut n = Family::zero(0, 0);
        for key in hom_keys(self, self, 0) {
            if key.0 < key.1 && rng.gen_bool(0.5) {
                let c = rng.gen_range(1i64..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
                n.add(key, Mono::new(), Q::from(c));
            }
        }
        n
    }

    /// The underlying complex of vector spaces.
    pub fn underlying(&self) -> Underlying {
        Underlying::build(self)
    }
}

/// Basis `(x, p)` of a semi-free module, `p` a path ending at `v(x)`.
#[derive(Clone, Debug)]
pub struct Underlying {
    pub basis: Vec<(usize, usize)>,
    pub deg: Vec<i64>,
    pub index: BTreeMap<(usize, usize), usize>,
    /// Position of each basis vector inside its degree.
    pub local: Vec<usize>,
    pub complex: FiniteComplex,
}

impl Underlying {
    fn build(m: &SemiFree) -> Underlying {
        let alg = &*m.alg;
        let mut basis = Vec::new();
        let mut deg = Vec::new();
        for (a, g) in m.gens.iter().enumerate() {
            for p in 0..alg.dim() {
                if alg.tgt(p) == g.vertex {
                    basis.push((a, p));
                    deg.push(g.deg + alg.deg(p));
                }
            }
        }
        let index: BTreeMap<(usize, usize), usize> =
            basis.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let lo = deg.iter().copied().min().unwrap_or(0);
        let hi = deg.iter().copied().max().unwrap_or(0);
        let mut dims = vec![0usize; (hi - lo + 1) as usize];
        let mut local = vec![0usize; basis.len()];
        for (i, d) in deg.iter().enumerate() {
            let k = (d - lo) as usize;
            local[i] = dims[k];
            dims[k] += 1;
        }
        let mut u = Underlying {
            basis,
            deg,
            index,
            local,
            complex: FiniteComplex::new(lo, dims),
        };
        let d = m.differential();
        let mut cols: Vec<(i64, usize, SparseVec)> = Vec::new();
        for i in 0..u.basis.len() {
            let img = u.apply_const(alg, &d, i);
            cols.push((u.deg[i], u.local[i], img));
        }
        for (k, j, img) in cols {
            if k < hi {
                let v = u.to_local(k + 1, &img);
                u.complex.set_column(k, j, v);
            }
        }
        u
    }

    /// Image of basis vector `i` under a constant family (global indices).
    pub fn apply_const(&self, alg: &ZigzagAlgebra, f: &Family, i: usize) -> SparseVec {
        let (a, p) = self.basis[i];
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for ((_, b, y), coeffs) in f.terms_from(a) {
            if let Some((q, k)) = alg.mul_basis(*y, p) {
                let j = self.index[&(*b, q)];
                for c in coeffs.values() {
                    *acc.entry(j).or_insert_with(Q::zero) += &(c * k);
                }
            }
        }
        acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Coefficient of `z^e` of the operator `m ↦ f(g)(m)` on basis vector
    /// `i`, for a one-variable family (global indices).
    pub fn apply_coefficient(
        &self,
        alg: &ZigzagAlgebra,
        f: &Family,
        e: i32,
        i: usize,
    ) -> SparseVec {
        let (a, p) = self.basis[i];
        let shift = alg.weight(p) as i32;
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for ((_, b, y), coeffs) in f.terms_from(a) {
            let Some(c) = coeffs.get(&Mono::from_slice(&[e - shift])) else {
                continue;
            };
            if let Some((q, k)) = alg.mul_basis(*y, p) {
                *acc.entry(self.index[&(*b, q)]).or_insert_with(Q::zero) += &(c * k);
            }
        }
        acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Matrix of `f(g)` on the underlying space, `point[0] = g_1`,
    /// including the twist of the input path.
    pub fn evaluate(&self, alg: &ZigzagAlgebra, f: &Family, point: &[Q]) -> SparseMatrix {
        assert_eq!(point.len(), f.vars);
        let n = self.basis.len();
        let total: Q = point.iter().fold(Q::one(), |a, b| &a * b);
        let mut mat = SparseMatrix::zero(n, n);
        for (i, &(a, p)) in self.basis.iter().enumerate() {
            let twist = total.pow(alg.weight(p) as i32);
            for ((_, b, y), coeffs) in f.terms_from(a) {
                let Some((q, k)) = alg.mul_basis(*y, p) else {
                    continue;
                };
                let j = self.index[&(*b, q)];
                for (mo, c) in coeffs {
                    let mut v = &(c * k) * &twist;
                    for (z, e) in point.iter().zip(mo.iter()) {
                        v *= &z.pow(*e);
                    }
                    mat.add_to(j, i, &v);
                }
            }
        }
        mat
    }

    /// Induced maps on cohomology of a degree-preserving chain map given
    /// on global basis vectors, in the bases of `coh`.
    pub fn induced(
        &self,
        coh: &Cohomology,
        op: &dyn Fn(usize) -> SparseVec,
    ) -> Result<BTreeMap<i64, SparseMatrix>> {
        let mut out = BTreeMap::new();
        for (&k, hd) in &coh.degrees {
            let idx = self.in_degree(k);
            let mut mat = SparseMatrix::zero(hd.dim(), hd.dim());
            for (j, rep) in hd.reps.iter().enumerate() {
                let mut img: BTreeMap<usize, Q> = BTreeMap::new();
                for (l, c) in rep {
                    for (t, v) in op(idx[*l]) {
                        *img.entry(t).or_insert_with(Q::zero) += &(c * &v);
                    }
                }
                let img: SparseVec = img.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                let local = self.to_local(k, &img);
                for (i, c) in hd.project(&local)?.into_iter().enumerate() {
                    if !c.is_zero() {
                        mat.set(i, j, c);
                    }
                }
            }
            out.insert(k, mat);
        }
        Ok(out)
    }

    /// Restricts a global vector of homogeneous degree `k` to local
    /// coordinates.
    pub fn to_local(&self, k: i64, v: &SparseVec) -> SparseVec {
        let mut out: SparseVec = v
            .iter()
            .map(|(i, c)| {
                debug_assert_eq!(self.deg[*i], k);
                (self.local[*i], c.clone())
            })
            .collect();
        out.sort_by_key(|e| e.0);
        out
    }

    /// Global indices of degree `k`, in local order.
    pub fn in_degree(&self, k: i64) -> Vec<usize> {
        (0..self.basis.len())
            .filter(|&i| self.deg[i] == k)
            .collect()
    }
}

/// Laurent family of morphisms between semi-free modules.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Family {
    pub deg: i64,
    pub vars: usize,
    pub terms: BTreeMap<TwKey, BTreeMap<Mono, Q>>,
}

impl Family {
    pub fn zero(deg: i64, vars: usize) -> Family {
        Family {
            deg,
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.terms.values().map(|v| v.len()).sum()
    }

    pub fn add(&mut self, key: TwKey, mono: Mono, c: Q) {
        debug_assert_eq!(mono.len(), self.vars);
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(key).or_default();
        let v = e.entry(mono.clone()).or_insert_with(Q::zero);
        *v += &c;
        if v.is_zero() {
            e.remove(&mono);
            if e.is_empty() {
                self.terms.remove(&key);
            }
        }
    }

    pub fn get(&self, key: &TwKey, mono: &Mono) -> Q {
        self.terms
            .get(key)
            .and_then(|v| v.get(mono))
            .cloned()
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TwKey, &Mono, &Q)> {
        self.terms
            .iter()
            .flat_map(|(k, v)| v.iter().map(move |(m, c)| (k, m, c)))
    }

    pub fn add_scaled(&mut self, f: &Q, other: &Family) {
        if f.is_zero() {
            return;
        }
        assert_eq!(self.vars, other.vars, "variable count mismatch");
        for (k, m, c) in other.iter() {
            self.add(*k, m.clone(), f * c);
        }
    }

    pub fn scaled(&self, f: &Q) -> Family {
        let mut out = Family::zero(self.deg, self.vars);
        out.add_scaled(f, self);
        out
    }

    pub fn plus(&self, other: &Family) -> Family {
        let mut out = self.clone();
        out.add_scaled(&Q::one(), other);
        out
    }

    pub fn minus(&self, other: &Family) -> Family {
        let mut out = self.clone();
        out.add_scaled(&-Q::one(), other);
        out
    }

    /// Terms whose source generator is `a`.
    pub fn terms_from(&self, a: usize) -> impl Iterator<Item = (&TwKey, &BTreeMap<Mono, Q>)> {
        self.terms.range((a, 0, 0)..(a + 1, 0, 0))
    }

    /// `outer ∘ inner`.
    pub fn compose(alg: &ZigzagAlgebra, outer: &Family, inner: &Family) -> Family {
        let mut out = Family::zero(outer.deg + inner.deg, outer.vars + inner.vars);
        for (&(a, b, y1), v1) in &inner.terms {
            let shift = alg.weight(y1) as i32;
            for (&(_, c, y2), v2) in outer.terms_from(b) {
                let Some((z, k)) = alg.mul_basis(y2, y1) else {
                    continue;
                };
                for (m1, c1) in v1 {
                    for (m2, c2) in v2 {
                        let mut mono = m1.clone();
                        mono.extend(m2.iter().map(|e| e + shift));
                        out.add((a, c, z), mono, &(c1 * c2) * k);
                    }
                }
            }
        }
        out
    }

    /// Pullback along the merge `g_{q+1} g_q` (1-based `q ≤ vars`).
    pub fn merge(&self, q: usize) -> Family {
        assert!(q >= 1 && q <= self.vars);
        let mut out = Family::zero(self.deg, self.vars + 1);
        for (k, mo, c) in self.iter() {
            let mut m2 = Mono::new();
            for (j, e) in mo.iter().enumerate() {
                m2.push(*e);
                if j + 1 == q {
                    m2.push(*e);
                }
            }
            out.add(*k, m2, c.clone());
        }
        out
    }

    /// Multiplies each coefficient by its exponent in variable `j`.
    pub fn euler(&self, j: usize) -> Family {
        let mut out = Family::zero(self.deg, self.vars);
        for (k, mo, c) in self.iter() {
            out.add(*k, mo.clone(), c * &Q::from_int(mo[j] as i64));
        }
        out
    }

    /// Multiplies each key by the weight of its path.
    pub fn path_weight(&self, alg: &ZigzagAlgebra) -> Family {
        let mut out = Family::zero(self.deg, self.vars);
        for (k, mo, c) in self.iter() {
            out.add(*k, mo.clone(), c * &Q::from_int(alg.weight(k.2)));
        }
        out
    }

    /// Evaluation at a rational point (`point[0]` is `g_1`).
    pub fn specialize(&self, point: &[Q]) -> Family {
        assert_eq!(point.len(), self.vars);
        let mut out = Family::zero(self.deg, 0);
        for (k, mo, c) in self.iter() {
            let mut v = c.clone();
            for (z, e) in point.iter().zip(mo.iter()) {
                v *= &z.pow(*e);
            }
            out.add(*k, Mono::new(), v);
        }
        out
    }

    pub fn at_identity(&self) -> Family {
        self.specialize(&vec![Q::one(); self.vars])
    }

    /// Specializes variable `q` (0-based) at the identity.
    pub fn set_one(&self, q: usize) -> Family {
        assert!(q < self.vars);
        let mut out = Family::zero(self.deg, self.vars - 1);
        for (k, mo, c) in self.iter() {
            let mut m2 = mo.clone();
            m2.remove(q);
            out.add(*k, m2, c.clone());
        }
        out
    }

    /// Whether every specialization of one variable at the identity
    /// vanishes.
    pub fn is_normalized(&self) -> bool {
        (0..self.vars).all(|q| self.set_one(q).is_zero())
    }

    /// The same family with `vars` extra variables on top, exponent `e`.
    pub fn with_top_vars(&self, extra: usize, e: i32) -> Family {
        let mut out = Family::zero(self.deg, self.vars + extra);
        for (k, mo, c) in self.iter() {
            let mut m2 = mo.clone();
            m2.extend(std::iter::repeat_n(e, extra));
            out.add(*k, m2, c.clone());
        }
        out
    }

    /// Monomials in the support.
    pub fn support(&self) -> BTreeSet<Mono> {
        self.iter().map(|(_, m, _)| m.clone()).collect()
    }

    /// Per-variable exponent range.
    pub fn exponent_range(&self) -> Option<(i32, i32)> {
        let mut it = self.iter().flat_map(|(_, m, _)| m.iter().copied());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e))))
    }

    /// Restriction to monomials satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&TwKey, &Mono) -> bool) -> Family {
        let mut out = Family::zero(self.deg, self.vars);
        for (k, mo, c) in self.iter() {
            if keep(k, mo) {
                out.add(*k, mo.clone(), c.clone());
            }
        }
        out
    }

    /// Rendering for reports: `z^(e…)·[x→y:path]` terms.
    pub fn render(&self, alg: &ZigzagAlgebra) -> Vec<String> {
        self.iter()
            .map(|((a, b, y), mo, c)| {
                let e: Vec<String> = mo.iter().map(|x| x.to_string()).collect();
                format!("{c}·z^({})·[{a}→{b}:{}]", e.join(","), alg.label(*y))
            })
            .collect()
    }
}

/// `D f = d_N ∘ f − (−1)^{|f|} f ∘ d_M`.
pub fn fam_d(m0: &SemiFree, m1: &SemiFree, f: &Family) -> Family {
    let alg = &*m0.alg;
    let mut out = Family::compose(alg, &m1.differential(), f);
    out.add_scaled(
        &-Q::sign(f.deg),
        &Family::compose(alg, f, &m0.differential()),
    );
    out.deg = f.deg + 1;
    out
}

/// Keys of `hom^t(M0, M1)`.
pub fn hom_keys(m0: &SemiFree, m1: &SemiFree, t: i64) -> Vec<TwKey> {
    let alg = &*m0.alg;
    let mut out = Vec::new();
    for (a, g0) in m0.gens.iter().enumerate() {
        for (b, g1) in m1.gens.iter().enumerate() {
            for y in alg.paths(g0.vertex, g1.vertex) {
                if g1.deg + alg.deg(y) - g0.deg == t {
                    out.push((a, b, y));
                }
            }
        }
    }
    out
}

/// Degree range of nonzero `hom(M0, M1)`.
pub fn hom_range(m0: &SemiFree, m1: &SemiFree) -> Option<(i64, i64)> {
    let alg = &*m0.alg;
    let mut range: Option<(i64, i64)> = None;
    for g0 in &m0.gens {
        for g1 in &m1.gens {
            for y in alg.paths(g0.vertex, g1.vertex) {
                let t = g1.deg + alg.deg(y) - g0.deg;
                range = Some(match range {
                    None => (t, t),
                    Some((lo, hi)) => (lo.min(t), hi.max(t)),
                });
            }
        }
    }
    range
}

/// `hom(M0, M1)` as a finite complex (constant maps).
pub fn hom_complex(m0: &SemiFree, m1: &SemiFree) -> (FiniteComplex, Vec<Vec<TwKey>>) {
    let Some((lo, hi)) = hom_range(m0, m1) else {
        return (FiniteComplex::new(0, vec![0]), vec![Vec::new()]);
    };
    let bases: Vec<Vec<TwKey>> = (lo..=hi).map(|t| hom_keys(m0, m1, t)).collect();
    let index: Vec<BTreeMap<TwKey, usize>> = bases
        .iter()
        .map(|b| b.iter().enumerate().map(|(i, k)| (*k, i)).collect())
        .collect();
    let mut cx = FiniteComplex::new(lo, bases.iter().map(|b| b.len()).collect());
    for t in lo..hi {
        let i = (t - lo) as usize;
        for (j, key) in bases[i].iter().enumerate() {
            let mut f = Family::zero(t, 0);
            f.add(*key, Mono::new(), Q::one());
            let d = fam_d(m0, m1, &f);
            let mut col: SparseVec = d
                .iter()
                .map(|(k, _, c)| (index[i + 1][k], c.clone()))
                .collect();
            col.sort_by_key(|e| e.0);
            cx.set_column(t, j, col);
        }
    }
    (cx, bases)
}

/// Block of unknowns: basis families `z^mono · key` of a fixed degree.
#[derive(Clone, Debug)]
pub struct UnknownBlock {
    pub deg: i64,
    pub vars: usize,
    pub basis: Vec<(TwKey, Mono)>,
}

impl UnknownBlock {
    pub fn new(deg: i64, vars: usize, keys: &[TwKey], monos: &BTreeSet<Mono>) -> UnknownBlock {
        let mut basis = Vec::with_capacity(keys.len() * monos.len());
        for k in keys {
            for m in monos {
                basis.push((*k, m.clone()));
            }
        }
        UnknownBlock { deg, vars, basis }
    }

    pub fn element(&self, j: usize) -> Family {
        let (k, m) = &self.basis[j];
        let mut f = Family::zero(self.deg, self.vars);
        f.add(*k, m.clone(), Q::one());
        f
    }

    pub fn assemble(&self, x: &SparseVec, offset: usize) -> Family {
        let mut f = Family::zero(self.deg, self.vars);
        for (j, c) in x {
            if *j >= offset && *j < offset + self.basis.len() {
                let (k, m) = &self.basis[j - offset];
                f.add(*k, m.clone(), c.clone());
            }
        }
        f
    }
}

/// Row key of a family-valued linear system: equation, key, monomial.
pub type RowKey = (usize, TwKey, Mono);

/// Outcome of [`solve_families`].
#[derive(Clone, Debug)]
pub struct FamilySolution {
    /// One solution per unknown block, or `None` when inconsistent.
    pub blocks: Option<Vec<Family>>,
    pub unknowns: usize,
    pub equations: usize,
    /// Size of the reduced residual when inconsistent.
    pub residual_len: usize,
}

/// Images of one basis element of one unknown block, per equation.
pub type BlockApply<'a> = dyn Fn(usize, &Family) -> Vec<(usize, Family)> + 'a;

/// Solves `Σ_blocks L_{eq,block}(x_block) = rhs_eq` for families.
/// `apply(block, basis element)` returns the images in each equation.
pub fn solve_families(
    blocks: &[UnknownBlock],
    apply: &BlockApply<'_>,
    rhs: &[(usize, Family)],
) -> FamilySolution {
    let mut sys: KeyedSystem<RowKey> = KeyedSystem::new();
    for (bi, b) in blocks.iter().enumerate() {
        for j in 0..b.basis.len() {
            let el = b.element(j);
            let mut entries = Vec::new();
            for (eq, img) in apply(bi, &el) {
                for (k, m, c) in img.iter() {
                    entries.push(((eq, *k, m.clone()), c.clone()));
                }
            }
            sys.push_column(entries);
        }
    }
    let mut b = Vec::new();
    for (eq, f) in rhs {
        for (k, m, c) in f.iter() {
            b.push(((*eq, *k, m.clone()), c.clone()));
        }
    }
    let unknowns = sys.num_columns();
    let sol = sys.solve(b);
    let equations = sys.num_rows();
    match sol.x {
        Some(x) => {
            let mut out = Vec::new();
            let mut off = 0;
            for b in blocks {
                out.push(b.assemble(&x, off));
                off += b.basis.len();
            }
            FamilySolution {
                blocks: Some(out),
                unknowns,
                equations,
                residual_len: 0,
            }
        }
        None => FamilySolution {
            blocks: None,
            unknowns,
            equations,
            residual_len: sol.residual.len(),
        },
    }
}

/// Points of the lines `e + t·(1, …, 1)` through `seeds` whose
/// coordinates all lie in `[lo, hi]`.
pub fn lines_in_box(seeds: &BTreeSet<Mono>, lo: i32, hi: i32) -> BTreeSet<Mono> {
    let mut out = BTreeSet::new();
    for s in seeds {
        let (mn, mx) = match (s.iter().min(), s.iter().max()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => {
                out.insert(s.clone());
                continue;
            }
        };
        for t in (lo - mn)..=(hi - mx) {
            out.insert(s.iter().map(|e| e + t).collect());
        }
    }
    out
}

/// Splits a monomial set by line (differences to the first coordinate).
pub fn by_line(monos: &BTreeSet<Mono>) -> BTreeMap<Mono, BTreeSet<Mono>> {
    let mut out: BTreeMap<Mono, BTreeSet<Mono>> = BTreeMap::new();
    for m in monos {
        let base = m.first().copied().unwrap_or(0);
        let key: Mono = m.iter().map(|e| e - base).collect();
        out.entry(key).or_default().insert(m.clone());
    }
    out
}

/// Line class of a monomial.
pub fn line_of(m: &Mono) -> Mono {
    let base = m.first().copied().unwrap_or(0);
    m.iter().map(|e| e - base).collect()
}

/// Sum of sparse vectors helper used by callers building operators.
pub fn add_vec(a: &SparseVec, b: &SparseVec) -> SparseVec {
    axpy(a, &Q::one(), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twisted::apply_braid;
    use smallvec::smallvec;

    fn sample() -> SemiFree {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = apply_braid(
            &"1 2".parse().unwrap(),
            &TwistedComplex::projective(&a, 1, 0, 0),
        )
        .unwrap();
        SemiFree::from_twisted(&c)
    }

    #[test]
    fn differential_squares_to_zero_on_families() {
        let m = sample();
        let keys = hom_keys(&m, &m, 0);
        let mut f = Family::zero(0, 2);
        for (i, k) in keys.iter().enumerate() {
            f.add(
                *k,
                smallvec![i as i32 % 3, 1 - i as i32],
                Q::from(i as i64 + 1),
            );
        }
        assert!(fam_d(&m, &m, &fam_d(&m, &m, &f)).is_zero());
    }

    #[test]
    fn leibniz_and_associativity() {
        let m = sample();
        let alg = &*m.alg;
        let mut fs = Vec::new();
        for (t, vars) in [(0, 1), (-1, 1), (0, 2)] {
            let mut f = Family::zero(t, vars);
            for (i, k) in hom_keys(&m, &m, t).iter().enumerate() {
                let mono: Mono = (0..vars).map(|v| (i + v) as i32 % 2).collect();
                f.add(*k, mono, Q::from(i as i64 % 5 - 2));
            }
            fs.push(f);
        }
        let (f, g, h) = (&fs[0], &fs[1], &fs[2]);
        let lhs = fam_d(&m, &m, &Family::compose(alg, g, f));
        let mut rhs = Family::compose(alg, &fam_d(&m, &m, g), f);
        rhs.add_scaled(&Q::sign(g.deg), &Family::compose(alg, g, &fam_d(&m, &m, f)));
        assert_eq!(lhs, rhs);
        let a = Family::compose(alg, &Family::compose(alg, h, g), f);
        let b = Family::compose(alg, h, &Family::compose(alg, g, f));
        assert_eq!(a, b);
    }

    #[test]
    fn hom_complex_matches_twisted_ext() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let p = TwistedComplex::projective(&a, 1, 0, 0);
        let c = apply_braid(&"2 1".parse().unwrap(), &p).unwrap();
        let m = SemiFree::from_twisted(&c);
        let (cx, _) = hom_complex(&m, &m);
        let mut want: BTreeMap<i64, usize> = BTreeMap::new();
        for ((_, t), d) in crate::twisted::ext_table(&c, &c) {
            *want.entry(t).or_default() += d;
        }
        assert_eq!(cx.cohomology_dims(), want);
    }

    #[test]
    fn lines_stay_in_box() {
        let seeds = BTreeSet::from([Mono::from_slice(&[0, 2])]);
        let pts = lines_in_box(&seeds, -1, 3);
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|m| m[1] - m[0] == 2));
    }
}
