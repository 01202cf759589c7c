//! Weak and homotopy `G`-actions on semi-free modules.
//!
//! A homotopy action is a sequence `ρ^r` of families in `r` variables of
//! degree `1 − r` with `ρ^1(e) = id`, normalized (`ρ^r` vanishes when any
//! `g_q = e`, `r ≥ 2`) and satisfying for every `r`
//!
//! `E_r = Dρ^r + (−1)^r Σ_q (−1)^q m_q*ρ^{r−1} − Σ_q (−1)^{r−q} ρ^{r−q}∘ρ^q = 0`,
//!
//! where `m_q*` pulls back along `g_{q+1} g_q`.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{SparseMatrix, Q};
use crate::multimap::Mono;

use super::family::{
    fam_d, hom_complex, hom_keys, hom_range, lines_in_box, solve_families, Family, SemiFree,
    Underlying, UnknownBlock,
};
use super::killing::{residue, shift_alpha};

/// Solver limits.
#[derive(Clone, Copy, Debug)]
pub struct ActionOptions {
    /// Maximal number of window doublings.
    pub max_doublings: u32,
    /// Random group elements used by [`validate`].
    pub samples: usize,
    pub seed: u64,
}

impl Default for ActionOptions {
    fn default() -> Self {
        ActionOptions {
            max_doublings: 3,
            samples: 20,
            seed: 7,
        }
    }
}

/// `H^0` and `H^1` of `end(M)`.
pub fn rigidity(m: &SemiFree) -> (usize, usize) {
    let (cx, _) = hom_complex(m, m);
    let dims = cx.cohomology_dims();
    (
        dims.get(&0).copied().unwrap_or(0),
        dims.get(&1).copied().unwrap_or(0),
    )
}

/// `∇F = z∂_z F − (path weight)F + α∘F`.
pub fn connection(m: &SemiFree, alpha: &Family, f: &Family) -> Family {
    let alg = &*m.alg;
    let mut out = f.euler(0).minus(&f.path_weight(alg));
    out.add_scaled(&Q::one(), &Family::compose(alg, alpha, f));
    out
}

/// Output of [`weak_action_solve`].
#[derive(Clone, Debug)]
pub struct WeakAction {
    /// The primitive after the residue shift.
    pub alpha: Family,
    pub residue_shift: Q,
    pub rho1: Family,
    /// Homotopy with `∇ρ^1 = Dτ`.
    pub tau: Family,
    pub window: (i32, i32),
    pub attempts: u32,
}

/// Solves for a covariantly constant `ρ^1` with `ρ^1(e) = id`.
pub fn weak_action_solve(m: &SemiFree, alpha: &Family, opts: &ActionOptions) -> Result<WeakAction> {
    let (h0, h1) = rigidity(m);
    if h0 != 1 || h1 != 0 {
        return Err(Error::Invalid(format!(
            "module is not rigid and simple: dim H^0 = {h0}, dim H^1 = {h1}"
        )));
    }
    let res = residue(m, alpha)?;
    let shift = res.fractional.clone();
    let alpha = shift_alpha(m, alpha, &shift);
    let mean = &res.mean - &shift;
    let pad = (m.width() + m.alg.n) as i32;
    let lo0 = mean.floor().try_into().unwrap_or(0i32);
    let hi0 = lo0 + if mean.is_integer() { 0 } else { 1 };
    let keys0 = hom_keys(m, m, 0);
    let keys1 = hom_keys(m, m, -1);
    let id = m.identity();
    for attempt in 0..=opts.max_doublings {
        let p = pad << attempt;
        let window = (lo0 - p, hi0 + p);
        let monos: BTreeSet<Mono> = (window.0..=window.1)
            .map(|e| Mono::from_slice(&[e]))
            .collect();
        let blocks = [
            UnknownBlock::new(0, 1, &keys0, &monos),
            UnknownBlock::new(-1, 1, &keys1, &monos),
            UnknownBlock::new(-1, 0, &keys1, &[Mono::new()].into_iter().collect()),
        ];
        let apply = |b: usize, el: &Family| -> Vec<(usize, Family)> {
            match b {
                0 => vec![
                    (0, fam_d(m, m, el)),
                    (1, connection(m, &alpha, el)),
                    (2, el.at_identity()),
                ],
                1 => vec![(1, fam_d(m, m, el).scaled(&-Q::one()))],
                _ => vec![(2, fam_d(m, m, el).scaled(&-Q::one()))],
            }
        };
        let sol = solve_families(&blocks, &apply, &[(2, id.clone())]);
        if let Some(mut x) = sol.blocks {
            let h = x.pop().expect("three blocks").with_top_vars(1, 0);
            let tau = x.pop().expect("three blocks");
            let rho = x.pop().expect("three blocks");
            let dh = fam_d(m, m, &h);
            let rho1 = rho.minus(&dh);
            let tau = tau.minus(&connection(m, &alpha, &h));
            return Ok(WeakAction {
                alpha,
                residue_shift: shift,
                rho1,
                tau,
                window,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::Budget(
        "no covariantly constant family in the Laurent window".into(),
    ))
}

/// `(−1)^s Σ_q (−1)^q m_q*ρ^{s−1} − Σ_q (−1)^{s−q} ρ^{s−q}∘ρ^q` for
/// `q = 1..s−1`, with `rho[r − 1] = ρ^r`.
pub fn error_term(m: &SemiFree, rho: &[Family], s: usize) -> Family {
    let alg = &*m.alg;
    let mut out = Family::zero(2 - s as i64, s);
    let prev = level(rho, s - 1);
    for q in 1..s {
        out.add_scaled(&Q::sign((s + q) as i64), &prev.merge(q));
    }
    for q in 1..s {
        let outer = level(rho, s - q);
        let inner = level(rho, q);
        out.add_scaled(
            &-Q::sign((s - q) as i64),
            &Family::compose(alg, &outer, &inner),
        );
    }
    out
}

fn level(rho: &[Family], r: usize) -> Family {
    rho.get(r - 1)
        .cloned()
        .unwrap_or_else(|| Family::zero(1 - r as i64, r))
}

/// `E_r` of an action.
pub fn cocycle_defect(m: &SemiFree, rho: &[Family], r: usize) -> Family {
    let cur = level(rho, r);
    let mut out = fam_d(m, m, &cur);
    if r >= 2 {
        out.add_scaled(&Q::one(), &error_term(m, rho, r));
    }
    out
}

/// Linear part of the level-`s` error in a correction `c` of `ρ^{s−1}`
/// (`s ≥ 3`).
fn error_linear(m: &SemiFree, rho1: &Family, c: &Family, s: usize) -> Family {
    let alg = &*m.alg;
    let mut out = Family::zero(c.deg + 1, s);
    for q in 1..s {
        out.add_scaled(&Q::sign((s + q) as i64), &c.merge(q));
    }
    out.add_scaled(&-Q::sign(s as i64 - 1), &Family::compose(alg, c, rho1));
    out.add_scaled(&Q::one(), &Family::compose(alg, rho1, c));
    out
}

fn normalization(f: &Family, eq0: usize) -> Vec<(usize, Family)> {
    (0..f.vars).map(|q| (eq0 + q, f.set_one(q))).collect()
}

fn candidates(seeds: &BTreeSet<Mono>, pad: i32) -> BTreeSet<Mono> {
    let lo = seeds
        .iter()
        .flat_map(|m| m.iter().copied())
        .min()
        .unwrap_or(0);
    let hi = seeds
        .iter()
        .flat_map(|m| m.iter().copied())
        .max()
        .unwrap_or(0);
    lines_in_box(seeds, lo - pad, hi + pad)
}

/// Certificate of a failed level solve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inconsistency {
    pub level: usize,
    pub unknowns: usize,
    pub equations: usize,
    pub residual_len: usize,
}

/// Solves `Dρ^s = −ε^s` with `ρ^s` normalized, over lines through the
/// support of `ε^s`.
fn solve_level(
    m: &SemiFree,
    eps: &Family,
    s: usize,
    opts: &ActionOptions,
) -> std::result::Result<Family, Inconsistency> {
    let keys = hom_keys(m, m, 1 - s as i64);
    let pad = (m.width() + m.alg.n) as i32;
    let mut last = Inconsistency {
        level: s,
        unknowns: 0,
        equations: 0,
        residual_len: 0,
    };
    let seeds = eps.support();
    for attempt in 0..=opts.max_doublings {
        let monos = if keys.is_empty() {
            BTreeSet::new()
        } else {
            candidates(&seeds, pad << attempt)
        };
        let block = UnknownBlock::new(1 - s as i64, s, &keys, &monos);
        let apply = |_: usize, el: &Family| {
            let mut v = vec![(0, fam_d(m, m, el))];
            v.extend(normalization(el, 1));
            v
        };
        let sol = solve_families(&[block], &apply, &[(0, eps.scaled(&-Q::one()))]);
        match sol.blocks {
            Some(mut b) => return Ok(b.remove(0)),
            None => {
                last = Inconsistency {
                    level: s,
                    unknowns: sol.unknowns,
                    equations: sol.equations,
                    residual_len: sol.residual_len,
                }
            }
        }
        if keys.is_empty() || eps.is_zero() {
            break;
        }
    }
    Err(last)
}

/// Solves for `ρ^2` given `ρ^1`; failure carries an exact certificate.
pub fn verify_weak(
    m: &SemiFree,
    rho1: &Family,
    opts: &ActionOptions,
) -> std::result::Result<Family, Inconsistency> {
    let eps = error_term(m, std::slice::from_ref(rho1), 2);
    solve_level(m, &eps, 2, opts)
}

/// Report of one [`obstruction_step`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub level: usize,
    pub error_closed: bool,
    pub error_zero: bool,
    /// Whether `ρ^{s−1}` had to be corrected by a closed family.
    pub corrected: bool,
    pub terms: usize,
}

/// Extends `rho = [ρ^1, …, ρ^{s−1}]` by `ρ^s`, correcting `ρ^{s−1}` by a
/// closed normalized family when the error is not exact.
pub fn obstruction_step(
    m: &SemiFree,
    rho: &mut Vec<Family>,
    s: usize,
    opts: &ActionOptions,
) -> Result<StepReport> {
    assert!(s >= 3 && rho.len() == s - 1);
    let eps = error_term(m, rho, s);
    let error_closed = fam_d(m, m, &eps).is_zero();
    if !error_closed {
        return Err(Error::CheckFailed(format!("level {s} error is not closed")));
    }
    let error_zero = eps.is_zero();
    if let Ok(next) = solve_level(m, &eps, s, opts) {
        let terms = next.nnz();
        rho.push(next);
        return Ok(StepReport {
            level: s,
            error_closed,
            error_zero,
            corrected: false,
            terms,
        });
    }
    let keys_s = hom_keys(m, m, 1 - s as i64);
    let keys_c = hom_keys(m, m, 2 - s as i64);
    let pad = (m.width() + m.alg.n) as i32;
    let rho1 = rho[0].clone();
    for attempt in 0..=opts.max_doublings {
        let c_monos = candidates(&rho[s - 2].support(), pad << attempt);
        let mut seeds = eps.support();
        for c in &c_monos {
            for q in 1..s {
                let mut t = c.clone();
                t.insert(q - 1, c[q - 1]);
                seeds.insert(t);
            }
        }
        let s_monos = if keys_s.is_empty() {
            BTreeSet::new()
        } else {
            candidates(&seeds, pad << attempt)
        };
        let blocks = [
            UnknownBlock::new(1 - s as i64, s, &keys_s, &s_monos),
            UnknownBlock::new(2 - s as i64, s - 1, &keys_c, &c_monos),
        ];
        let apply = |b: usize, el: &Family| -> Vec<(usize, Family)> {
            if b == 0 {
                let mut v = vec![(0, fam_d(m, m, el))];
                v.extend(normalization(el, 2));
                v
            } else {
                let mut v = vec![(0, error_linear(m, &rho1, el, s)), (1, fam_d(m, m, el))];
                v.extend(normalization(el, 2 + s));
                v
            }
        };
        let sol = solve_families(&blocks, &apply, &[(0, eps.scaled(&-Q::one()))]);
        if let Some(mut x) = sol.blocks {
            let c = x.pop().expect("two blocks");
            let next = x.pop().expect("two blocks");
            rho[s - 2] = rho[s - 2].plus(&c);
            let terms = next.nnz();
            rho.push(next);
            return Ok(StepReport {
                level: s,
                error_closed,
                error_zero,
                corrected: true,
                terms,
            });
        }
    }
    Err(Error::Budget(format!(
        "level {s} obstruction could not be removed in the window"
    )))
}

/// A homotopy action with termination data.
#[derive(Clone, Debug)]
pub struct HomotopyAction {
    /// `rho[r − 1] = ρ^r`, trailing zeros removed.
    pub rho: Vec<Family>,
    /// Last nonzero level.
    pub r: usize,
    /// Lowest degree of `hom(M, M)`.
    pub hom_min: i64,
    pub steps: Vec<StepReport>,
}

impl HomotopyAction {
    /// Per-level exponent windows.
    pub fn support(&self) -> Vec<Option<(i32, i32)>> {
        self.rho.iter().map(|f| f.exponent_range()).collect()
    }

    /// Levels whose equations must hold.
    pub fn top_level(&self) -> usize {
        (2 - self.hom_min).max(2) as usize
    }
}

/// Runs [`obstruction_step`] until degree bounds force `ρ^s = 0`.
pub fn homotopy_extend(
    m: &SemiFree,
    rho1: &Family,
    rho2: &Family,
    opts: &ActionOptions,
) -> Result<HomotopyAction> {
    let hom_min = hom_range(m, m).map(|r| r.0).unwrap_or(0);
    let top = (2 - hom_min).max(2) as usize;
    let mut rho = vec![rho1.clone(), rho2.clone()];
    let mut steps = Vec::new();
    for s in 3..=top {
        steps.push(obstruction_step(m, &mut rho, s, opts)?);
    }
    while rho.len() > 1 && rho.last().is_some_and(|f| f.is_zero()) {
        rho.pop();
    }
    let r = rho.len();
    Ok(HomotopyAction {
        rho,
        r,
        hom_min,
        steps,
    })
}

/// Result of [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub levels_checked: usize,
    pub coefficientwise: bool,
    pub unital: bool,
    pub normalized: bool,
    pub samples: usize,
    pub sampled: bool,
    pub first_failure: Option<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.coefficientwise && self.unital && self.normalized && self.sampled
    }
}

fn random_point(rng: &mut ChaCha8Rng, r: usize) -> Vec<Q> {
    (0..r)
        .map(|_| {
            let mut n = 0;
            while n == 0 {
                n = rng.gen_range(-4i64..=4);
            }
            Q::new(n, rng.gen_range(1i64..=3))
        })
        .collect()
}

fn lin_comb(acc: &mut SparseMatrix, f: &Q, m: &SparseMatrix) {
    for (i, j, c) in m.entries() {
        acc.add_to(i, j, &(f * c));
    }
}

/// Independent check of `E_r` at one point, from matrices of the
/// specialized families.
fn sampled_defect(m: &SemiFree, u: &Underlying, rho: &[Family], r: usize, g: &[Q]) -> Result<bool> {
    let alg = &*m.alg;
    let d = u.evaluate(alg, &m.differential(), &[]);
    let cur = level(rho, r);
    let rc = u.evaluate(alg, &cur, g);
    let n = u.basis.len();
    let mut e = SparseMatrix::zero(n, n);
    lin_comb(&mut e, &Q::one(), &d.mul(&rc)?);
    lin_comb(&mut e, &-Q::sign(cur.deg), &rc.mul(&d)?);
    if r >= 2 {
        let prev = level(rho, r - 1);
        for q in 1..r {
            // g_{q+1} g_q merged into one slot
            let mut h: Vec<Q> = Vec::with_capacity(r - 1);
            for (j, x) in g.iter().enumerate() {
                if j == q {
                    let last = h.pop().expect("slot q exists");
                    h.push(&last * x);
                } else {
                    h.push(x.clone());
                }
            }
            lin_comb(
                &mut e,
                &Q::sign((r + q) as i64),
                &u.evaluate(alg, &prev, &h),
            );
        }
        for q in 1..r {
            let inner = u.evaluate(alg, &level(rho, q), &g[..q]);
            let outer = u.evaluate(alg, &level(rho, r - q), &g[q..]);
            lin_comb(&mut e, &-Q::sign((r - q) as i64), &outer.mul(&inner)?);
        }
    }
    let zero = e.entries().all(|(_, _, c)| c.is_zero());
    Ok(zero)
}

/// Full check of an action: equations coefficient-wise up to the level
/// forced by degrees, unitality, normalization and sampled equations at
/// random group elements.
pub fn validate(
    m: &SemiFree,
    action: &HomotopyAction,
    opts: &ActionOptions,
) -> Result<ValidationReport> {
    let top = action.top_level();
    let mut first_failure = None;
    let mut coefficientwise = true;
    for r in 1..=top {
        if !cocycle_defect(m, &action.rho, r).is_zero() {
            coefficientwise = false;
            first_failure.get_or_insert(format!("equation at level {r}"));
        }
    }
    let unital = action.rho[0].at_identity() == m.identity();
    if !unital {
        first_failure.get_or_insert("ρ^1(e) ≠ id".to_string());
    }
    let normalized = action.rho.iter().skip(1).all(|f| f.is_normalized());
    if !normalized {
        first_failure.get_or_insert("higher term not normalized".to_string());
    }
    let u = m.underlying();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sampled = true;
    for i in 0..opts.samples {
        let r = 1 + i % top;
        let g = random_point(&mut rng, r);
        if !sampled_defect(m, &u, &action.rho, r, &g)? {
            sampled = false;
            first_failure.get_or_insert(format!("sampled equation at level {r}"));
        }
    }
    Ok(ValidationReport {
        levels_checked: top,
        coefficientwise,
        unital,
        normalized,
        samples: opts.samples,
        sampled,
        first_failure,
    })
}

/// The naive family `z^{i_x}·id_x` of a module with a known lift.
pub fn naive_action(m: &SemiFree) -> Option<Family> {
    let lift = m.lift.as_ref()?;
    let mut f = Family::zero(0, 1);
    for (x, g) in m.gens.iter().enumerate() {
        f.add(
            (x, x, m.alg.idempotent(g.vertex)),
            Mono::from_slice(&[lift[x] as i32]),
            Q::one(),
        );
    }
    Some(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::killing::solve_killing;
    use crate::twisted::{apply_braid, TwistedComplex};
    use crate::zigzag::ZigzagAlgebra;
    use std::sync::Arc;

    fn a22() -> Arc<ZigzagAlgebra> {
        Arc::new(ZigzagAlgebra::build(2, 2).unwrap())
    }

    fn braid(w: &str, k: usize) -> SemiFree {
        let a = a22();
        SemiFree::from_twisted(
            &apply_braid(
                &w.parse().unwrap(),
                &TwistedComplex::projective(&a, k, 0, 0),
            )
            .unwrap(),
        )
    }

    #[test]
    fn naive_action_is_strict() {
        let m = braid("1 2", 1);
        let rho1 = naive_action(&m).unwrap();
        let opts = ActionOptions::default();
        let rho2 = verify_weak(&m, &rho1, &opts).unwrap();
        assert!(rho2.is_zero());
        let act = homotopy_extend(&m, &rho1, &rho2, &opts).unwrap();
        assert_eq!(act.r, 1);
        assert!(validate(&m, &act, &opts).unwrap().passed());
    }

    #[test]
    fn connection_commutes_with_d() {
        let m = braid("2 -1", 1);
        let alpha = solve_killing(&m).alpha.unwrap();
        let mut f = Family::zero(0, 1);
        for (i, k) in hom_keys(&m, &m, 0).iter().enumerate() {
            f.add(
                *k,
                Mono::from_slice(&[i as i32 % 3 - 1]),
                Q::from(i as i64 + 1),
            );
        }
        let a = fam_d(&m, &m, &connection(&m, &alpha, &f));
        let b = connection(&m, &alpha, &fam_d(&m, &m, &f));
        assert_eq!(a, b);
    }

    #[test]
    fn projective_pipeline() {
        let m = braid("", 2).forget_lift();
        let alpha = solve_killing(&m).alpha.unwrap();
        let opts = ActionOptions::default();
        let weak = weak_action_solve(&m, &alpha, &opts).unwrap();
        let rho2 = verify_weak(&m, &weak.rho1, &opts).unwrap();
        let act = homotopy_extend(&m, &weak.rho1, &rho2, &opts).unwrap();
        assert_eq!(act.r, 1);
        assert!(validate(&m, &act, &opts).unwrap().passed());
    }

    #[test]
    fn braid_image_pipeline() {
        let m = braid("1", 2).forget_lift();
        let alpha = solve_killing(&m).alpha.unwrap();
        let opts = ActionOptions::default();
        let weak = weak_action_solve(&m, &alpha, &opts).unwrap();
        let rho2 = verify_weak(&m, &weak.rho1, &opts).unwrap();
        let act = homotopy_extend(&m, &weak.rho1, &rho2, &opts).unwrap();
        let report = validate(&m, &act, &opts).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(act.r as i64 <= m.width() + 2);
    }

    #[test]
    fn not_simple_rejected() {
        let p = braid("", 1);
        let m = p.direct_sum(&p);
        let alpha = solve_killing(&m).alpha.unwrap();
        assert!(matches!(
            weak_action_solve(&m, &alpha, &ActionOptions::default()),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn broken_unitality_fails() {
        let m = braid("1 2", 1);
        let rho1 = naive_action(&m).unwrap().scaled(&Q::from(2));
        let err = verify_weak(&m, &rho1, &ActionOptions::default()).unwrap_err();
        assert!(err.residual_len > 0);
    }

    #[test]
    fn injected_fault_is_repaired() {
        let a = a22();
        let p = TwistedComplex::projective(&a, 1, 0, 0);
        let c = p.direct_sum(&p.shifted(0, 1));
        let m = SemiFree::from_twisted(&c);
        assert_eq!(m.gens[1].deg, -1);
        let rho1 = naive_action(&m).unwrap();
        let e = a.idempotent(1);
        // normalized but not a group cocycle
        let mut fault = Family::zero(-1, 2);
        for (mono, c) in [([2, 1], 1), ([2, 0], -1), ([1, 1], -1), ([1, 0], 1)] {
            fault.add((0, 1, e), Mono::from_slice(&mono), Q::from(c));
        }
        assert!(fam_d(&m, &m, &fault).is_zero() && fault.is_normalized());
        let eps = error_term(&m, &[rho1.clone(), fault.clone()], 3);
        assert!(!eps.is_zero());
        let mut rho = vec![rho1, fault];
        let step = obstruction_step(&m, &mut rho, 3, &ActionOptions::default()).unwrap();
        assert!(step.corrected);
        let act = HomotopyAction {
            r: 3,
            rho,
            hom_min: hom_range(&m, &m).unwrap().0,
            steps: vec![step],
        };
        assert!(cocycle_defect(&m, &act.rho, 3).is_zero());
        assert!(cocycle_defect(&m, &act.rho, 2).is_zero());
    }
}
