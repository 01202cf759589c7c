//! Hochschild chains of `A_m^n`, the trace map from twisted complexes, and
//! the fundamental class of a perfect module in degree-0 Hochschild homology.
//!
//! Chains live over the category of shifted projectives: objects `(k, σ)`
//! with `σ = j − i` for `P_k{i}[j]`, morphisms the paths `y` of degree
//! `|y| + σ_src − σ_tgt`, and composition `μ^2(y2, y1) = (−1)^{σ_src(y1) + |y1|} y2·y1`.
//! The identity of `(k, σ)` is `(−1)^σ e_k`. A twisted complex becomes a
//! Maurer–Cartan element `δ_{g1 g0} = (−1)^{i_{g1}} x_{g1 g0}`.
//!
//! A chain `ā_l ⊗ … ⊗ ā_1 ⊗ a` is stored as `[a, ā_1, …, ā_l]`, each factor
//! as `(σ of its source, path)`; `a` ends where `ā_1` starts. Chains are
//! normalized: bar factors are never identities.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exact::linalg::KeyedSystem;
use crate::exact::Q;
use crate::twisted::{Gen, TwKey, TwMap, TwistedComplex};
use crate::zigzag::ZigzagAlgebra;

/// One factor: `(σ of source, path)`.
pub type Factor = (i64, u16);
pub type ChainKey = SmallVec<[Factor; 6]>;

/// A finite Hochschild chain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HochschildChain {
    pub terms: BTreeMap<ChainKey, Q>,
}

impl HochschildChain {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, key: ChainKey, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *e += &c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, f: &Q, other: &HochschildChain) {
        for (k, c) in &other.terms {
            self.add(k.clone(), f * c);
        }
    }

    pub fn minus(&self, other: &HochschildChain) -> HochschildChain {
        let mut out = self.clone();
        out.add_scaled(&Q::from(-1), other);
        out
    }

    /// Terms of total path weight `w`.
    pub fn weight_part(&self, alg: &ZigzagAlgebra, w: i64) -> HochschildChain {
        HochschildChain {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.iter().map(|f| alg.deg(f.1 as usize)).sum::<i64>() == w)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Human-readable form, `ā_l ⊗ … ⊗ ā_1 ⊗ a` with shifts.
    pub fn render(&self, alg: &ZigzagAlgebra) -> String {
        let mut parts = Vec::new();
        for (k, c) in &self.terms {
            let mut fs: Vec<String> = k
                .iter()
                .skip(1)
                .rev()
                .map(|f| factor_label(alg, f))
                .collect();
            fs.push(factor_label(alg, &k[0]));
            parts.push(format!("{c}·{}", fs.join(" ⊗ ")));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn factor_label(alg: &ZigzagAlgebra, f: &Factor) -> String {
    if f.0 == 0 {
        alg.label(f.1 as usize).to_string()
    } else {
        format!("{}[{}]", alg.label(f.1 as usize), f.0)
    }
}

/// Degree of a factor with the given target shift.
fn factor_deg(alg: &ZigzagAlgebra, f: &Factor, sigma_tgt: i64) -> i64 {
    alg.deg(f.1 as usize) + f.0 - sigma_tgt
}

fn target_sigma(key: &ChainKey, r: usize) -> i64 {
    key[(r + 1) % key.len()].0
}

/// `μ^2` over shifted objects: `y2 ∘ y1` with `y1` leaving shift `sigma1`.
pub fn mu2_shift(alg: &ZigzagAlgebra, sigma1: i64, y2: usize, y1: usize) -> Option<(usize, Q)> {
    alg.mul_basis(y2, y1)
        .map(|(z, c)| (z, c * &Q::sign(sigma1 + alg.deg(y1))))
}

/// Chain degree `|a| + Σ (|ā_r| − 1)`.
pub fn chain_degree(alg: &ZigzagAlgebra, key: &ChainKey) -> i64 {
    let l = key.len() - 1;
    (0..key.len())
        .map(|r| factor_deg(alg, &key[r], target_sigma(key, r)))
        .sum::<i64>()
        - l as i64
}

fn is_identity_factor(alg: &ZigzagAlgebra, f: &Factor, sigma_tgt: i64) -> bool {
    alg.is_unit(f.1 as usize) && f.0 == sigma_tgt
}

fn normalized(alg: &ZigzagAlgebra, key: &ChainKey) -> bool {
    (1..key.len()).all(|r| !is_identity_factor(alg, &key[r], target_sigma(key, r)))
}

/// The Hochschild differential (only `μ^2` is nonzero).
pub fn hh_differential(alg: &ZigzagAlgebra, c: &HochschildChain) -> HochschildChain {
    let mut out = HochschildChain::default();
    for (key, coeff) in &c.terms {
        if !normalized(alg, key) {
            continue;
        }
        let l = key.len() - 1;
        let d: Vec<i64> = (0..=l)
            .map(|r| factor_deg(alg, &key[r], target_sigma(key, r)))
            .collect();
        let mut push = |nk: ChainKey, s: Q| {
            if normalized(alg, &nk) {
                out.add(nk, s * coeff);
            }
        };
        // products of adjacent bar factors ā_{i+2}, ā_{i+1}
        let mut pre = d[0];
        for i in 0..l.saturating_sub(1) {
            if i > 0 {
                pre += d[i] - 1;
            }
            let (f1, f2) = (key[i + 1], key[i + 2]);
            if let Some((z, q)) = mu2_shift(alg, f1.0, f2.1 as usize, f1.1 as usize) {
                let mut nk: ChainKey = key[..=i].iter().copied().collect();
                nk.push((f1.0, z as u16));
                nk.extend(key[i + 3..].iter().copied());
                push(nk, q * Q::sign(pre));
            }
        }
        if l >= 1 {
            // −μ^2(ā_1, a)
            let (a, b1) = (key[0], key[1]);
            if let Some((z, q)) = mu2_shift(alg, a.0, b1.1 as usize, a.1 as usize) {
                let mut nk: ChainKey = SmallVec::new();
                nk.push((a.0, z as u16));
                nk.extend(key[2..].iter().copied());
                push(nk, -q);
            }
            // −(−1)^{(|ā_l|−1)(|a| + Σ_{r<l} |ā_r| + l)} μ^2(a, ā_l)
            let bl = key[l];
            if let Some((z, q)) = mu2_shift(alg, bl.0, a.1 as usize, bl.1 as usize) {
                let inner: i64 = d[0] + d[1..l].iter().sum::<i64>() + l as i64;
                let mut nk: ChainKey = SmallVec::new();
                nk.push((bl.0, z as u16));
                nk.extend(key[1..l].iter().copied());
                push(nk, -q * Q::sign((d[l] - 1) * inner));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Twisted complexes over shifted objects

/// A twisted complex with its Maurer–Cartan element in the shifted category.
#[derive(Clone, Debug)]
pub struct ShiftComplex {
    pub alg: Arc<ZigzagAlgebra>,
    pub gens: Vec<Gen>,
    pub delta: TwMap,
}

impl ShiftComplex {
    pub fn from_twisted(c: &TwistedComplex) -> ShiftComplex {
        let mut delta = TwMap {
            deg: 1,
            terms: BTreeMap::new(),
        };
        for (&(a, b), x) in &c.diff {
            for (y, q) in x {
                delta.add((a, b, *y), q * &Q::sign(c.gens[b].i));
            }
        }
        ShiftComplex {
            alg: c.alg.clone(),
            gens: c.gens.clone(),
            delta,
        }
    }

    pub fn sigma(&self, g: usize) -> i64 {
        self.gens[g].j - self.gens[g].i
    }

    pub fn identity(&self) -> TwMap {
        let mut id = TwMap {
            deg: 0,
            terms: BTreeMap::new(),
        };
        for (g, gen) in self.gens.iter().enumerate() {
            id.add((g, g, self.alg.idempotent(gen.k)), Q::sign(self.sigma(g)));
        }
        id
    }

    /// `μ^2(δ, δ) = 0`.
    pub fn maurer_cartan(&self) -> bool {
        mu2_tw(self, &self.delta, &self.delta).is_zero()
    }

    /// Back to the classical twisted complex.
    pub fn to_twisted(&self) -> Result<TwistedComplex> {
        let mut diff: BTreeMap<(usize, usize), crate::exact::SparseVec> = BTreeMap::new();
        for (&(a, b, y), q) in &self.delta.terms {
            let e = diff.entry((a, b)).or_default();
            *e = crate::exact::linalg::axpy(e, &Q::one(), &vec![(y, q * &Q::sign(self.gens[b].i))]);
        }
        TwistedComplex::new(&self.alg, self.gens.clone(), diff)
    }
}

/// `μ^2(g, f)` for `f: C0 → C1`, `g: C1 → C2` (source shifts from `C0`).
pub fn mu2_tw(c0: &ShiftComplex, g: &TwMap, f: &TwMap) -> TwMap {
    let alg = &*c0.alg;
    let mut out = TwMap {
        deg: f.deg + g.deg,
        terms: BTreeMap::new(),
    };
    let mut by_src: BTreeMap<usize, Vec<(usize, usize, &Q)>> = BTreeMap::new();
    for (&(b, c, y), q) in &g.terms {
        by_src.entry(b).or_default().push((c, y, q));
    }
    for (&(a, b, y1), q1) in &f.terms {
        if let Some(v) = by_src.get(&b) {
            for &(c, y2, q2) in v {
                if let Some((z, k)) = mu2_shift(alg, c0.sigma(a), y2, y1) {
                    out.add((a, c, z), k * (q1 * q2));
                }
            }
        }
    }
    out
}

/// `μ^1(f) = μ^2(δ1, f) + μ^2(f, δ0)`.
pub fn mu1_tw(c0: &ShiftComplex, c1: &ShiftComplex, f: &TwMap) -> TwMap {
    let mut out = mu2_tw(c0, &c1.delta, f);
    out.add_scaled(&Q::one(), &mu2_tw(c0, f, &c0.delta));
    out.deg = f.deg + 1;
    out
}

/// Basis of weight-preserving morphisms `C0 → C1` of degree `t`.
pub fn hom_keys(c0: &ShiftComplex, c1: &ShiftComplex, t: i64) -> Vec<TwKey> {
    let alg = &*c0.alg;
    let mut out = Vec::new();
    for (a, g0) in c0.gens.iter().enumerate() {
        for (b, g1) in c1.gens.iter().enumerate() {
            for y in alg.paths(g0.k, g1.k) {
                let s = g1.i + alg.deg(y) - g0.i;
                if s == 0 && g0.j - g1.j == t {
                    out.push((a, b, y));
                }
            }
        }
    }
    out
}

/// The trace map: inserts `δ`'s into every gap of a chain of morphisms
/// Terms of a differential or map grouped by source generator.
type Outgoing = BTreeMap<usize, Vec<(usize, usize, Q)>>;

/// `α_l ⊗ … ⊗ α_1 ⊗ α_0` between the complexes `X_0, …, X_l` (with
/// `α_0: X_l → X_0`, `α_r: X_{r−1} → X_r`) and sums over closed index paths.
pub fn trace(xs: &[&ShiftComplex], alphas: &[&TwMap]) -> HochschildChain {
    assert_eq!(xs.len(), alphas.len());
    let alg = &*xs[0].alg;
    let l = alphas.len() - 1;
    let mut out = HochschildChain::default();
    let deltas: Vec<Outgoing> = xs
        .iter()
        .map(|x| {
            let mut m = Outgoing::new();
            for (&(a, b, y), q) in &x.delta.terms {
                m.entry(a).or_default().push((b, y, q.clone()));
            }
            m
        })
        .collect();
    let alpha_out: Vec<Outgoing> = alphas
        .iter()
        .map(|f| {
            let mut m = Outgoing::new();
            for (&(a, b, y), q) in &f.terms {
                m.entry(a).or_default().push((b, y, q.clone()));
            }
            m
        })
        .collect();
    let src_of_alpha0 = if l == 0 { 0 } else { l };
    for (&(p, q0, y0), c0) in &alphas[0].terms {
        let start: ChainKey = SmallVec::from_slice(&[(xs[src_of_alpha0].sigma(p), y0 as u16)]);
        let mut stack = vec![(0usize, q0, start, c0.clone())];
        while let Some((r, g, key, coeff)) = stack.pop() {
            let here = xs[r];
            if r == l && g == p {
                let full = key.clone();
                if normalized(alg, &full) {
                    out.add(full, coeff.clone());
                }
            }
            if let Some(es) = deltas[r].get(&g) {
                for (g2, y, q) in es {
                    let mut k2 = key.clone();
                    k2.push((here.sigma(g), *y as u16));
                    stack.push((r, *g2, k2, &coeff * q));
                }
            }
            if r < l {
                if let Some(es) = alpha_out[r + 1].get(&g) {
                    for (g2, y, q) in es {
                        let mut k2 = key.clone();
                        k2.push((here.sigma(g), *y as u16));
                        stack.push((r + 1, *g2, k2, &coeff * q));
                    }
                }
            }
        }
    }
    out
}

/// `Tr` of `a ∈ hom(C, C)` viewed as a length-0 chain.
pub fn end_to_hh(c: &ShiftComplex, a: &TwMap) -> HochschildChain {
    trace(&[c], &[a])
}

// ---------------------------------------------------------------------------
// Classes

/// The class of a degree-0 cycle, in the basis `[e_1], …, [e_m]` of the
/// weight-0 part of `HH_0`, with an explicit chain `w` such that
/// `z_0 − Σ c_k e_k = ∂w` on the weight-0 part `z_0`.
#[derive(Clone, Debug)]
pub struct ClassVector {
    pub coords: Vec<Q>,
    pub witness: HochschildChain,
}

impl ClassVector {
    pub fn as_integers(&self) -> Option<Vec<i64>> {
        self.coords
            .iter()
            .map(|q| if q.is_integer() { q.to_i64() } else { None })
            .collect()
    }
}

/// Expresses the weight-0 part of a degree-0 cycle in the basis `[e_k]`.
pub fn weight0_class(alg: &ZigzagAlgebra, z: &HochschildChain) -> Result<ClassVector> {
    let z0 = z.weight_part(alg, 0);
    // shifts present at each vertex, always including 0
    let mut shifts: BTreeMap<usize, Vec<i64>> = (1..=alg.m).map(|k| (k, vec![0])).collect();
    for key in z0.terms.keys() {
        if key.len() != 1 || !alg.is_unit(key[0].1 as usize) {
            return Err(Error::Invalid(
                "weight-0 part of a degree-0 cycle must be a sum of units".into(),
            ));
        }
        let k = alg.src(key[0].1 as usize);
        let v = shifts.get_mut(&k).unwrap();
        if !v.contains(&key[0].0) {
            v.push(key[0].0);
        }
    }
    let mut sys: KeyedSystem<ChainKey> = KeyedSystem::new();
    let mut unknowns: Vec<Option<HochschildChain>> = Vec::new();
    for k in 1..=alg.m {
        let e = alg.idempotent(k) as u16;
        sys.push_column([(SmallVec::from_slice(&[(0, e)]), Q::one())]);
        unknowns.push(None);
    }
    for (&k, ss) in &shifts {
        let e = alg.idempotent(k) as u16;
        for &s0 in ss {
            for &s1 in ss {
                if s0 == s1 {
                    continue;
                }
                let mut w = HochschildChain::default();
                w.add(SmallVec::from_slice(&[(s1, e), (s0, e)]), Q::one());
                let d = hh_differential(alg, &w);
                sys.push_column(d.terms);
                unknowns.push(Some(w));
            }
        }
    }
    let sol = sys.solve(z0.terms.clone());
    let x = sol.x.ok_or_else(|| {
        Error::CheckFailed("weight-0 part is not in the span of units and boundaries".into())
    })?;
    let mut coords = vec![Q::zero(); alg.m];
    let mut witness = HochschildChain::default();
    for (j, c) in x {
        match &unknowns[j] {
            None => coords[j] = c,
            Some(w) => witness.add_scaled(&c, w),
        }
    }
    Ok(ClassVector { coords, witness })
}

/// `[C]_alg`: the class of the identity of `C`.
pub fn alg_class(c: &TwistedComplex) -> Result<ClassVector> {
    let s = ShiftComplex::from_twisted(c);
    let z = end_to_hh(&s, &s.identity());
    let dz = hh_differential(&c.alg, &z);
    if !dz.is_zero() {
        return Err(Error::CheckFailed(
            "trace of the identity is not a cycle".into(),
        ));
    }
    weight0_class(&c.alg, &z)
}

// ---------------------------------------------------------------------------
// Transports along quasi-isomorphisms

/// Data `b0: C → C'`, `b1: C' → C`, `c0, c1` of degree −1 with
/// `μ^2(b1, b0) + μ^1(c0) = id_C` and `μ^2(b0, b1) + μ^1(c1) = id_{C'}`.
#[derive(Clone, Debug)]
pub struct Transport {
    pub source: ShiftComplex,
    pub target: ShiftComplex,
    pub b0: TwMap,
    pub b1: TwMap,
    pub c0: TwMap,
    pub c1: TwMap,
}

fn basis_map(key: TwKey, deg: i64) -> TwMap {
    let mut f = TwMap {
        deg,
        terms: BTreeMap::new(),
    };
    f.add(key, Q::one());
    f
}

/// Given a closed `b0`, solves for `b1`, `c0`, `c1`.
pub fn complete_transport(c: &ShiftComplex, c2: &ShiftComplex, b0: &TwMap) -> Result<Transport> {
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    enum Row {
        Closed(TwKey),
        Left(TwKey),
        Right(TwKey),
    }
    let mut sys: KeyedSystem<Row> = KeyedSystem::new();
    let mut cols: Vec<(u8, TwKey)> = Vec::new();
    for key in hom_keys(c2, c, 0) {
        let b1 = basis_map(key, 0);
        let d = mu1_tw(c2, c, &b1);
        let l = mu2_tw(c, &b1, b0);
        let r = mu2_tw(c2, b0, &b1);
        let entries = d
            .terms
            .into_iter()
            .map(|(k, q)| (Row::Closed(k), q))
            .chain(l.terms.into_iter().map(|(k, q)| (Row::Left(k), q)))
            .chain(r.terms.into_iter().map(|(k, q)| (Row::Right(k), q)));
        sys.push_column(entries);
        cols.push((0, key));
    }
    for key in hom_keys(c, c, -1) {
        let d = mu1_tw(c, c, &basis_map(key, -1));
        sys.push_column(d.terms.into_iter().map(|(k, q)| (Row::Left(k), q)));
        cols.push((1, key));
    }
    for key in hom_keys(c2, c2, -1) {
        let d = mu1_tw(c2, c2, &basis_map(key, -1));
        sys.push_column(d.terms.into_iter().map(|(k, q)| (Row::Right(k), q)));
        cols.push((2, key));
    }
    let rhs = c
        .identity()
        .terms
        .into_iter()
        .map(|(k, q)| (Row::Left(k), q))
        .chain(
            c2.identity()
                .terms
                .into_iter()
                .map(|(k, q)| (Row::Right(k), q)),
        );
    let sol = sys.solve(rhs);
    let x = sol
        .x
        .ok_or_else(|| Error::CheckFailed("b0 is not a homotopy equivalence".into()))?;
    let mut b1 = TwMap {
        deg: 0,
        terms: BTreeMap::new(),
    };
    let mut c0 = TwMap {
        deg: -1,
        terms: BTreeMap::new(),
    };
    let mut c1 = TwMap {
        deg: -1,
        terms: BTreeMap::new(),
    };
    for (j, q) in x {
        let (which, key) = cols[j];
        match which {
            0 => b1.add(key, q),
            1 => c0.add(key, q),
            _ => c1.add(key, q),
        }
    }
    Ok(Transport {
        source: c.clone(),
        target: c2.clone(),
        b0: b0.clone(),
        b1,
        c0,
        c1,
    })
}

/// Conjugates `C` by a random invertible weight-preserving `b0 = id + N`.
pub fn conjugate(c: &ShiftComplex, rng: &mut impl Rng) -> Result<Transport> {
    let alg = &*c.alg;
    let mut b0 = c.identity();
    for key @ (a, b, y) in hom_keys(c, c, 0) {
        if alg.is_unit(y) && a >= b {
            continue;
        }
        let v: i64 = rng.gen_range(-2..=2);
        b0.add(key, Q::from(v));
    }
    // δ' from μ^2(δ', b0) + μ^2(b0, δ) = 0
    let mut sys: KeyedSystem<TwKey> = KeyedSystem::new();
    let keys = hom_keys(c, c, 1);
    for &key in &keys {
        let p = mu2_tw(c, &basis_map(key, 1), &b0);
        sys.push_column(p.terms);
    }
    let rhs = mu2_tw(c, &b0, &c.delta);
    let sol = sys.solve(rhs.terms.into_iter().map(|(k, q)| (k, -q)));
    let x = sol
        .x
        .ok_or_else(|| Error::CheckFailed("conjugation has no solution".into()))?;
    let mut delta = TwMap {
        deg: 1,
        terms: BTreeMap::new(),
    };
    for (j, q) in x {
        delta.add(keys[j], q);
    }
    let c2 = ShiftComplex {
        alg: c.alg.clone(),
        gens: c.gens.clone(),
        delta,
    };
    if !c2.maurer_cartan() {
        return Err(Error::CheckFailed(
            "conjugated differential fails Maurer–Cartan".into(),
        ));
    }
    complete_transport(c, &c2, &b0)
}

/// Adds a contractible pair `P_k{i}[j] → P_k{i}[j−1]` and includes `C`.
pub fn add_contractible(c: &ShiftComplex, k: usize, i: i64, j: i64) -> Result<Transport> {
    let alg = &*c.alg;
    let mut gens = c.gens.clone();
    let n = gens.len();
    gens.push(Gen::new(k, i, j));
    gens.push(Gen::new(k, i, j - 1));
    let mut delta = c.delta.clone();
    delta.add((n, n + 1, alg.idempotent(k)), Q::sign(i));
    let c2 = ShiftComplex {
        alg: c.alg.clone(),
        gens,
        delta,
    };
    let mut b0 = TwMap {
        deg: 0,
        terms: BTreeMap::new(),
    };
    for (g, gen) in c.gens.iter().enumerate() {
        b0.add((g, g, alg.idempotent(gen.k)), Q::sign(c.sigma(g)));
    }
    complete_transport(c, &c2, &b0)
}

/// Composite of two transports `C → C' → C''`.
pub fn compose_transport(t1: &Transport, t2: &Transport) -> Result<Transport> {
    let b0 = mu2_tw(&t1.source, &t2.b0, &t1.b0);
    complete_transport(&t1.source, &t2.target, &b0)
}

/// Random closed degree-0 morphism `C → C'` that is a homotopy equivalence.
pub fn random_equivalence(
    c: &ShiftComplex,
    c2: &ShiftComplex,
    rng: &mut impl Rng,
    attempts: usize,
) -> Result<Transport> {
    let keys = hom_keys(c, c2, 0);
    let mut sys: KeyedSystem<TwKey> = KeyedSystem::new();
    for &key in &keys {
        sys.push_column(mu1_tw(c, c2, &basis_map(key, 0)).terms);
    }
    let kernel = sys.solve(std::iter::empty()).kernel;
    for _ in 0..attempts {
        let mut b0 = TwMap {
            deg: 0,
            terms: BTreeMap::new(),
        };
        for v in &kernel {
            let f = Q::from(rng.gen_range(-2i64..=2));
            for (j, q) in v {
                b0.add(keys[*j], &f * q);
            }
        }
        if let Ok(t) = complete_transport(c, c2, &b0) {
            return Ok(t);
        }
    }
    Err(Error::Budget("no random equivalence found".into()))
}

/// Random transport of `C` to a conjugate of `C`, possibly with a
/// contractible pair added, along a random closed equivalence.
pub fn random_transport(c: &TwistedComplex, seed: u64) -> Result<Transport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = ShiftComplex::from_twisted(c);
    let mid = if rng.gen_bool(0.6) && !c.gens.is_empty() {
        let g = c.gens[rng.gen_range(0..c.gens.len())];
        let jj = if rng.gen_bool(0.5) { g.j } else { g.j + 1 };
        add_contractible(&s, g.k, g.i, jj)?.target
    } else {
        s.clone()
    };
    let target = conjugate(&mid, &mut rng)?.target;
    random_equivalence(&s, &target, &mut rng, 20)
}

/// Explicit coboundary for the invariance of the class along a transport.
#[derive(Clone, Debug)]
pub struct BcCertificate {
    /// `Tr(b1 ⊗ b0) + Tr(c0) − Tr(c1)`.
    pub chain: HochschildChain,
    /// `Tr(id_{C'}) − Tr(id_C)`, which equals `∂ chain`.
    pub boundary: HochschildChain,
    pub holds: bool,
}

/// Checks `∂(Tr(b1 ⊗ b0) + Tr(c0) − Tr(c1)) = Tr(id_{C'}) − Tr(id_C)`.
pub fn bc_certificate(t: &Transport) -> BcCertificate {
    let alg = &*t.source.alg;
    let mut chain = trace(&[&t.target, &t.source], &[&t.b0, &t.b1]);
    chain.add_scaled(&Q::one(), &end_to_hh(&t.source, &t.c0));
    chain.add_scaled(&Q::from(-1), &end_to_hh(&t.target, &t.c1));
    let boundary = end_to_hh(&t.target, &t.target.identity())
        .minus(&end_to_hh(&t.source, &t.source.identity()));
    let holds = hh_differential(alg, &chain) == boundary;
    BcCertificate {
        chain,
        boundary,
        holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twisted::{apply_braid, BraidWord};

    fn alg(m: usize, n: i64) -> Arc<ZigzagAlgebra> {
        Arc::new(ZigzagAlgebra::build(m, n).unwrap())
    }

    fn random_chain(a: &ZigzagAlgebra, rng: &mut ChaCha8Rng, len: usize) -> HochschildChain {
        // a random closed walk with random shifts
        let mut c = HochschildChain::default();
        for _ in 0..6 {
            let mut key: ChainKey = SmallVec::new();
            let start = rng.gen_range(1..=a.m);
            let mut v = start;
            let mut ok = true;
            for step in 0..=len {
                let choices: Vec<usize> = (0..a.dim())
                    .filter(|&y| a.src(y) == v && (step < len || a.tgt(y) == start))
                    .collect();
                if choices.is_empty() {
                    ok = false;
                    break;
                }
                let y = choices[rng.gen_range(0..choices.len())];
                key.push((rng.gen_range(-2..=2), y as u16));
                v = a.tgt(y);
            }
            if ok && v == start {
                // factors are stored [a, ā_1, …]; a walk y_0, y_1, … composes left to right
                c.add(key, Q::from(rng.gen_range(1..=3)));
            }
        }
        c
    }

    #[test]
    fn differential_squares_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (m, n) in [(1, 2), (2, 2), (2, 3), (3, 1)] {
            let a = alg(m, n);
            for len in 0..5 {
                let c = random_chain(&a, &mut rng, len);
                let dd = hh_differential(&a, &hh_differential(&a, &c));
                assert!(dd.is_zero(), "m={m} n={n} len={len}: {}", dd.render(&a));
            }
        }
    }

    #[test]
    fn two_term_boundary() {
        let a = alg(2, 2);
        let mut c = HochschildChain::default();
        c.add(
            SmallVec::from_slice(&[(0, a.down(1) as u16), (0, a.up(1) as u16)]),
            Q::one(),
        );
        let d = hh_differential(&a, &c);
        assert_eq!(d.terms.len(), 2);
    }

    #[test]
    fn classes_match_k_class() {
        let a = alg(2, 2);
        let p1 = TwistedComplex::projective(&a, 1, 0, 0);
        for w in ["1", "-2", "1 2", "2 2 -1"] {
            let c = apply_braid(&w.parse::<BraidWord>().unwrap(), &p1).unwrap();
            let cls = alg_class(&c).unwrap().as_integers().unwrap();
            assert_eq!(cls, c.k_class(), "word {w}");
        }
    }

    #[test]
    fn shift_complex_is_maurer_cartan() {
        let a = alg(3, 2);
        let p2 = TwistedComplex::projective(&a, 2, 0, 0);
        let c = apply_braid(&"1 3 -2".parse().unwrap(), &p2).unwrap();
        let s = ShiftComplex::from_twisted(&c);
        assert!(s.maurer_cartan());
        assert_eq!(s.to_twisted().unwrap(), c);
    }

    #[test]
    fn transports_preserve_class() {
        let a = alg(2, 2);
        let p1 = TwistedComplex::projective(&a, 1, 0, 0);
        let c = apply_braid(&"2 1 2".parse().unwrap(), &p1).unwrap();
        let c = c.direct_sum(&c);
        let mut nontrivial = 0;
        for seed in 0..8 {
            let t = random_transport(&c, seed).unwrap();
            let cert = bc_certificate(&t);
            assert!(cert.holds, "seed {seed}");
            if !t.c1.is_zero() && cert.chain.terms.keys().any(|k| k.len() > 1) {
                nontrivial += 1;
            }
            let tc = t.target.to_twisted().unwrap();
            assert_eq!(
                alg_class(&tc).unwrap().coords,
                alg_class(&c).unwrap().coords
            );
        }
        assert!(nontrivial > 0);
    }
}
