//! Sparse (Laurent) multilinear maps `M ⊗ Ā^{⊗d} → C[z_1^±..z_r^±] ⊗ N`.
//!
//! One representation serves module structure maps, morphisms of
//! A∞-modules, and families of morphisms over `G^r = (C*)^r`. Words never
//! contain units (structure maps are strictly unital, morphisms normalized).
//!
//! Sign conventions. For a word `w = (a_d, …, a_1)` write
//! `✠(w) = Σ (|a_i| − 1)`. Composition of `ψ` after `φ` (degree `k_φ`) is
//!
//! `(ψ∘φ)(m, a_d..a_1) = Σ_i (−1)^{k_φ·✠(a_i..a_1)} ψ(φ(m, a_d..a_{i+1}), a_i..a_1)`
//!
//! and insertion of the algebra product is
//!
//! `(φ∘b_A)(m, …) = Σ (−1)^{✠(a_i..a_1)} φ(m, …, μ^2(a_{i+2}, a_{i+1}), a_i..a_1)`
//!
//! with `μ^2(x, y) = (−1)^{|y|} x·y`.

use std::collections::BTreeMap;
use std::ops::Bound;

use smallvec::SmallVec;

use crate::exact::Q;
use crate::zigzag::ZigzagAlgebra;

/// Word of non-unit algebra basis indices, leftmost = `a_d`.
pub type Word = SmallVec<[u16; 6]>;

/// Laurent exponents, index 0 = `z_1` (lowest variable).
pub type Mono = SmallVec<[i32; 4]>;

/// Input of a multilinear map: a basis vector and a word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Input {
    pub m: u32,
    pub word: Word,
}

impl Input {
    pub fn new(m: usize, word: &[usize]) -> Input {
        Input {
            m: m as u32,
            word: word.iter().map(|&x| x as u16).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.word.len()
    }
}

/// Output coordinates: monomial and basis vector.
pub type Out = (Mono, u32);

/// Sparse multilinear map of a declared degree with `vars` Laurent variables.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MultiMap {
    pub degree: i64,
    pub vars: usize,
    pub terms: BTreeMap<Input, BTreeMap<Out, Q>>,
}

/// `✠` of a word.
pub fn maltese(alg: &ZigzagAlgebra, w: &[u16]) -> i64 {
    w.iter().map(|&a| alg.deg(a as usize) - 1).sum()
}

/// Total weight of a word.
pub fn word_weight(alg: &ZigzagAlgebra, w: &[u16]) -> i64 {
    w.iter().map(|&a| alg.weight(a as usize)).sum()
}

fn add_into(map: &mut BTreeMap<Out, Q>, key: Out, c: Q) {
    if c.is_zero() {
        return;
    }
    match map.get_mut(&key) {
        Some(v) => {
            *v += &c;
            if v.is_zero() {
                map.remove(&key);
            }
        }
        None => {
            map.insert(key, c);
        }
    }
}

impl MultiMap {
    pub fn zero(degree: i64, vars: usize) -> MultiMap {
        MultiMap {
            degree,
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

    /// Adds `c` at `(input, mono, out)`.
    pub fn add(&mut self, input: Input, mono: Mono, out: u32, c: Q) {
        debug_assert_eq!(mono.len(), self.vars);
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(input.clone()).or_default();
        add_into(e, (mono, out), c);
        if e.is_empty() {
            self.terms.remove(&input);
        }
    }

    pub fn get(&self, input: &Input, mono: &Mono, out: u32) -> Q {
        self.terms
            .get(input)
            .and_then(|v| v.get(&(mono.clone(), out)))
            .cloned()
            .unwrap_or_default()
    }

    /// Iterates `(input, mono, out, coeff)`.
    pub fn iter(&self) -> impl Iterator<Item = (&Input, &Mono, u32, &Q)> {
        self.terms
            .iter()
            .flat_map(|(i, v)| v.iter().map(move |((mo, o), c)| (i, mo, *o, c)))
    }

    /// `self + f·other`.
    pub fn add_scaled(&mut self, f: &Q, other: &MultiMap) {
        if f.is_zero() {
            return;
        }
        assert_eq!(self.vars, other.vars, "variable count mismatch");
        for (inp, mo, o, c) in other.iter() {
            self.add(inp.clone(), mo.clone(), o, f * c);
        }
    }

    pub fn scaled(&self, f: &Q) -> MultiMap {
        let mut out = MultiMap::zero(self.degree, self.vars);
        out.add_scaled(f, self);
        out
    }

    pub fn plus(&self, other: &MultiMap) -> MultiMap {
        let mut out = self.clone();
        out.add_scaled(&Q::one(), other);
        out
    }

    pub fn minus(&self, other: &MultiMap) -> MultiMap {
        let mut out = self.clone();
        out.add_scaled(&-Q::one(), other);
        out
    }

    /// Components of arity at most `d`.
    pub fn truncate_arity(&self, d: usize) -> MultiMap {
        MultiMap {
            degree: self.degree,
            vars: self.vars,
            terms: self
                .terms
                .iter()
                .filter(|(i, _)| i.arity() <= d)
                .map(|(i, v)| (i.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn max_arity(&self) -> usize {
        self.terms.keys().map(|i| i.arity()).max().unwrap_or(0)
    }

    /// Terms whose input starts with basis vector `m`.
    pub fn terms_from(&self, m: u32) -> impl Iterator<Item = (&Input, &BTreeMap<Out, Q>)> {
        let lo = Input {
            m,
            word: Word::new(),
        };
        self.terms
            .range((Bound::Included(lo), Bound::Unbounded))
            .take_while(move |(i, _)| i.m == m)
    }

    /// Composition `outer ∘ inner`; see the module docs for signs.
    ///
    /// With `twist`, the weights of the inputs consumed by `outer` beyond
    /// the first are added to every exponent of `inner`'s variables (this is
    /// the pullback along `γ`). The result has `outer.vars + inner.vars`
    /// variables with `inner`'s variables lowest.
    pub fn compose(
        alg: &ZigzagAlgebra,
        outer: &MultiMap,
        inner: &MultiMap,
        twist: bool,
    ) -> MultiMap {
        let vars = outer.vars + inner.vars;
        let mut out = MultiMap::zero(outer.degree + inner.degree, vars);
        for (inp, vals) in &inner.terms {
            for ((mono_in, x), c_in) in vals {
                for (inp2, vals2) in outer.terms_from(*x) {
                    let w2 = &inp2.word;
                    let sign = Q::sign(inner.degree * maltese(alg, w2));
                    let shift = if twist {
                        word_weight(alg, w2) as i32
                    } else {
                        0
                    };
                    let mut word = inp.word.clone();
                    word.extend_from_slice(w2);
                    let new_in = Input { m: inp.m, word };
                    let entry = out.terms.entry(new_in.clone()).or_default();
                    for ((mono_out, y), c_out) in vals2 {
                        let mut mono: Mono = mono_in.iter().map(|e| e + shift).collect();
                        mono.extend_from_slice(mono_out);
                        add_into(entry, (mono, *y), &(c_in * c_out) * &sign);
                    }
                    if entry.is_empty() {
                        out.terms.remove(&new_in);
                    }
                }
            }
        }
        out
    }

    /// `φ ∘ b_A`: inserts the algebra product in every slot of the input.
    pub fn insert_product(alg: &ZigzagAlgebra, phi: &MultiMap) -> MultiMap {
        let mut out = MultiMap::zero(phi.degree + 1, phi.vars);
        for (inp, vals) in &phi.terms {
            let w = &inp.word;
            for p in 0..w.len() {
                let tail = &w[p + 1..];
                let tail_sign = maltese(alg, tail);
                for (x, y, k) in alg.factorizations(w[p] as usize) {
                    // μ^2(x, y) = (−1)^{|y|} x·y = (−1)^{|y|} k·w[p]
                    let sign = Q::sign(tail_sign + alg.deg(*y));
                    let coeff = &sign * k;
                    let mut word: Word = w[..p].iter().copied().collect();
                    word.push(*x as u16);
                    word.push(*y as u16);
                    word.extend_from_slice(tail);
                    let key = Input { m: inp.m, word };
                    for ((mono, o), c) in vals {
                        out.add(key.clone(), mono.clone(), *o, c * &coeff);
                    }
                }
            }
        }
        out
    }

    /// Multiplies each term by `z_j^{weight(word)}` for every variable
    /// (the identification `γ*`).
    pub fn gamma_twist(&self, alg: &ZigzagAlgebra) -> MultiMap {
        let mut out = MultiMap::zero(self.degree, self.vars);
        for (inp, mo, o, c) in self.iter() {
            let s = word_weight(alg, &inp.word) as i32;
            out.add(
                inp.clone(),
                mo.iter().map(|e| e + s).collect(),
                o,
                c.clone(),
            );
        }
        out
    }

    /// Adds `vars` new variables with exponent 0 (no dependence on them).
    pub fn with_constant_vars(&self, vars: usize) -> MultiMap {
        let mut out = MultiMap::zero(self.degree, vars);
        assert!(vars >= self.vars);
        for (inp, mo, o, c) in self.iter() {
            let mut m2: Mono = mo.clone();
            m2.resize(vars, 0);
            out.add(inp.clone(), m2, o, c.clone());
        }
        out
    }

    /// Pullback along the merge `g_{q+1} g_q`: slot `q` (1-based) of a map
    /// in `vars` variables becomes the diagonal in slots `q, q+1` of the
    /// result.
    pub fn merge_pullback(&self, q: usize) -> MultiMap {
        assert!(q >= 1 && q <= self.vars);
        let mut out = MultiMap::zero(self.degree, self.vars + 1);
        for (inp, mo, o, c) in self.iter() {
            let mut m2 = Mono::new();
            for (j, e) in mo.iter().enumerate() {
                m2.push(*e);
                if j + 1 == q {
                    m2.push(*e);
                }
            }
            out.add(inp.clone(), m2, o, c.clone());
        }
        out
    }

    /// Evaluates all variables at `1` (the fibre over the identity).
    pub fn at_identity(&self) -> MultiMap {
        self.specialize(&vec![Q::one(); self.vars])
    }

    /// Evaluates the variables at rational points (`point[0]` is `z_1`).
    pub fn specialize(&self, point: &[Q]) -> MultiMap {
        assert_eq!(point.len(), self.vars);
        let mut out = MultiMap::zero(self.degree, 0);
        for (inp, mo, o, c) in self.iter() {
            let mut v = c.clone();
            for (z, e) in point.iter().zip(mo.iter()) {
                v *= &z.pow(*e);
            }
            out.add(inp.clone(), Mono::new(), o, v);
        }
        out
    }

    /// Euler operator in variable `j` (0-based): multiplies by the exponent.
    pub fn euler(&self, j: usize) -> MultiMap {
        let mut out = MultiMap::zero(self.degree, self.vars);
        for (inp, mo, o, c) in self.iter() {
            out.add(inp.clone(), mo.clone(), o, c * &Q::from_int(mo[j] as i64));
        }
        out
    }

    /// Minimal and maximal exponents per variable.
    pub fn exponent_range(&self) -> Vec<(i32, i32)> {
        let mut r = vec![(i32::MAX, i32::MIN); self.vars];
        for (_, mo, _, _) in self.iter() {
            for (j, e) in mo.iter().enumerate() {
                r[j].0 = r[j].0.min(*e);
                r[j].1 = r[j].1.max(*e);
            }
        }
        r
    }

    /// Re-indexes inputs and outputs (used for direct sums and embeddings).
    pub fn relabel(&self, src: &dyn Fn(u32) -> u32, tgt: &dyn Fn(u32) -> u32) -> MultiMap {
        let mut out = MultiMap::zero(self.degree, self.vars);
        for (inp, mo, o, c) in self.iter() {
            out.add(
                Input {
                    m: src(inp.m),
                    word: inp.word.clone(),
                },
                mo.clone(),
                tgt(o),
                c.clone(),
            );
        }
        out
    }

    /// Dense-free coordinate listing `(input, mono, out) -> coeff` restricted
    /// to a predicate.
    pub fn filter(&self, keep: impl Fn(&Input, &Mono, u32) -> bool) -> MultiMap {
        let mut out = MultiMap::zero(self.degree, self.vars);
        for (inp, mo, o, c) in self.iter() {
            if keep(inp, mo, o) {
                out.add(inp.clone(), mo.clone(), o, c.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    #[test]
    fn merge_and_specialize() {
        let mut f = MultiMap::zero(0, 2);
        f.add(Input::new(0, &[]), smallvec![2, 3], 0, Q::one());
        let g = f.merge_pullback(1);
        let (_, mo, _, _) = g.iter().next().unwrap();
        assert_eq!(mo.as_slice(), &[2, 2, 3]);
        let v = f.specialize(&[Q::from(2), Q::from(-1)]);
        assert_eq!(v.get(&Input::new(0, &[]), &Mono::new(), 0), Q::from(-4));
    }

    #[test]
    fn product_insertion_expands_loops() {
        let a = ZigzagAlgebra::build(2, 2).unwrap();
        let mut f = MultiMap::zero(0, 0);
        f.add(Input::new(0, &[a.loop_at(1)]), Mono::new(), 0, Q::one());
        let g = MultiMap::insert_product(&a, &f);
        // ℓ_1 = (1|2)(2|1): one factorization
        assert_eq!(g.nnz(), 1);
        let (inp, _, _, _) = g.iter().next().unwrap();
        assert_eq!(inp.word.as_slice(), &[a.down(1) as u16, a.up(1) as u16]);
    }
}
