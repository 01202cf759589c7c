//! End-to-end equivariance pipeline for a twisted complex: Killing class,
//! weak action, second-order term, homotopy action, weights and
//! truncated strictification.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Q;
use crate::twisted::TwistedComplex;

use super::action::{
    homotopy_extend, validate, verify_weak, weak_action_solve, ActionOptions, HomotopyAction,
    ValidationReport,
};
use super::family::{Family, SemiFree};
use super::killing::solve_killing;
use super::strict::{strictify, StrictOptions, Strictification};
use super::weights::{lift_weights, match_up_to_shift, weight_decomposition};

/// Pipeline settings.
#[derive(Clone, Copy, Debug, Default)]
pub struct PipelineOptions {
    pub action: ActionOptions,
    pub strict: StrictOptions,
    /// Present the module through a random unipotent change of basis.
    pub scramble: Option<u64>,
}

/// One term of a degree-0 endomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndTerm {
    pub from: usize,
    pub to: usize,
    pub path: String,
    pub coeff: Q,
}

/// Pipeline output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub module: String,
    pub ki_vanishes: bool,
    pub alpha: Vec<EndTerm>,
    /// Exponent window of each `ρ^r`.
    pub rho_support: Vec<Option<(i32, i32)>>,
    #[serde(rename = "R")]
    pub r: usize,
    /// `(degree, weight)` multiset of `H(M)`.
    pub weights: Vec<(i64, i64)>,
    pub certified_window: (i64, i64),
    #[serde(skip)]
    pub details: Option<PipelineDetails>,
}

/// Auxiliary checks behind a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineDetails {
    pub width: i64,
    pub residue_shift: Q,
    pub validation: ValidationReport,
    pub representation: bool,
    pub lift_shift: Option<i64>,
    pub strict: Strictification,
}

impl PipelineReport {
    /// Every stage succeeded and every check held.
    pub fn passed(&self) -> bool {
        let Some(d) = &self.details else { return false };
        self.ki_vanishes
            && (self.r as i64) <= d.width + 2
            && d.validation.passed()
            && d.representation
            && d.lift_shift.is_some()
            && d.strict.passed()
    }
}

fn render(m: &SemiFree, alpha: &Family) -> Vec<EndTerm> {
    alpha
        .iter()
        .map(|((a, b, y), _, c)| EndTerm {
            from: *a,
            to: *b,
            path: m.alg.label(*y).to_string(),
            coeff: c.clone(),
        })
        .collect()
}

/// Runs the pipeline on `c`, forgetting its bigrading except for the final
/// comparison.
pub fn run_pipeline(
    name: &str,
    c: &TwistedComplex,
    opts: &PipelineOptions,
) -> Result<PipelineReport> {
    run_pipeline_with_action(name, c, opts).map(|(r, _)| r)
}

/// [`run_pipeline`], also returning the module and the homotopy action when
/// the Killing class vanishes.
pub fn run_pipeline_with_action(
    name: &str,
    c: &TwistedComplex,
    opts: &PipelineOptions,
) -> Result<(PipelineReport, Option<(SemiFree, HomotopyAction)>)> {
    let lifted = SemiFree::from_twisted(c);
    let expected =
        lift_weights(&lifted).ok_or_else(|| Error::Invalid("complex has no lift".into()))?;
    let m = match opts.scramble {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            lifted.conjugate(&lifted.random_unipotent(&mut rng))?
        }
        None => lifted.forget_lift(),
    };
    let ki = solve_killing(&m);
    let Some(alpha) = ki.alpha else {
        let report = PipelineReport {
            module: name.to_string(),
            ki_vanishes: false,
            alpha: Vec::new(),
            rho_support: Vec::new(),
            r: 0,
            weights: Vec::new(),
            certified_window: (0, -1),
            details: None,
        };
        return Ok((report, None));
    };
    let weak = weak_action_solve(&m, &alpha, &opts.action)?;
    let rho2 = verify_weak(&m, &weak.rho1, &opts.action)
        .map_err(|e| Error::CheckFailed(format!("no second-order term: {e:?}")))?;
    let action = homotopy_extend(&m, &weak.rho1, &rho2, &opts.action)?;
    let validation = validate(&m, &action, &opts.action)?;
    let wd = weight_decomposition(&m, &action.rho[0])?;
    let lift_shift = match_up_to_shift(&wd.weights, &expected);
    let strict = strictify(&m, &action, &opts.strict)?;
    let report = PipelineReport {
        module: name.to_string(),
        ki_vanishes: true,
        alpha: render(&m, &weak.alpha),
        rho_support: action.support(),
        r: action.r,
        weights: wd.multiset(),
        certified_window: strict.certified_window,
        details: Some(PipelineDetails {
            width: m.width(),
            residue_shift: weak.residue_shift,
            validation,
            representation: wd.representation,
            lift_shift,
            strict,
        }),
    };
    Ok((report, Some((m, action))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twisted::apply_braid;
    use crate::zigzag::ZigzagAlgebra;
    use std::sync::Arc;

    #[test]
    fn scrambled_braid_image() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = apply_braid(
            &"1 -2 1".parse().unwrap(),
            &TwistedComplex::projective(&a, 2, 0, 0),
        )
        .unwrap();
        for scramble in [None, Some(3)] {
            let opts = PipelineOptions {
                scramble,
                ..Default::default()
            };
            let r = run_pipeline("s1 s2^-1 s1 P2", &c, &opts).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn report_keys() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let r = run_pipeline(
            "P1",
            &TwistedComplex::projective(&a, 1, 0, 0),
            &PipelineOptions::default(),
        )
        .unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "R",
                "alpha",
                "certified_window",
                "ki_vanishes",
                "module",
                "rho_support",
                "weights"
            ]
        );
    }
}
