//! On-disk formats: `*.algebra.json`, `*.module.json`, `*.twc.json` and
//! `*.action.json`.
//!
//! Files are written as pretty JSON with object keys sorted and rationals
//! as `"p/q"` strings, followed by a newline. Every object is revalidated
//! when it is loaded.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::equivariance::action::{validate, ActionOptions, HomotopyAction};
use crate::equivariance::family::{Family, FreeGen, SemiFree};
use crate::error::{Error, Result};
use crate::exact::linalg::axpy;
use crate::exact::Q;
use crate::module::{AInfModule, AlgebraRef, ModuleJson};
use crate::multimap::Mono;
use crate::twisted::{EntryJson, TwistedComplex, TwistedJson};
use crate::zigzag::{AlgebraJson, ZigzagAlgebra};

use std::collections::BTreeMap;
use std::sync::Arc;

/// Kind of a stored object, from its file suffix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectKind {
    Algebra,
    Module,
    Twisted,
    Action,
}

impl ObjectKind {
    pub fn suffix(self) -> &'static str {
        match self {
            ObjectKind::Algebra => ".algebra.json",
            ObjectKind::Module => ".module.json",
            ObjectKind::Twisted => ".twc.json",
            ObjectKind::Action => ".action.json",
        }
    }

    pub fn of_path(path: &Path) -> Option<ObjectKind> {
        let name = path.file_name()?.to_str()?;
        [
            ObjectKind::Algebra,
            ObjectKind::Module,
            ObjectKind::Twisted,
            ObjectKind::Action,
        ]
        .into_iter()
        .find(|k| name.ends_with(k.suffix()))
    }
}

/// Canonical text: sorted keys, two-space indentation, trailing newline.
pub fn to_canonical<T: Serialize>(x: &T) -> Result<String> {
    let v = serde_json::to_value(x).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed JSON: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Algebras, modules, twisted complexes

pub fn algebra_to_text(a: &ZigzagAlgebra) -> Result<String> {
    to_canonical(&a.to_json())
}

/// Parses an algebra and checks it against its own validation.
pub fn algebra_from_text(text: &str) -> Result<ZigzagAlgebra> {
    let j: AlgebraJson = parse(text)?;
    let a = ZigzagAlgebra::from_json(&j)?;
    let rep = a.validate();
    if !rep.passed() {
        return Err(Error::CheckFailed(format!(
            "stored algebra fails validation: {:?}",
            rep.first_violation
        )));
    }
    Ok(a)
}

pub fn module_to_text(m: &AInfModule) -> Result<String> {
    to_canonical(&m.to_json())
}

/// Parses a module without validating its relations.
pub fn module_from_text(text: &str) -> Result<AInfModule> {
    let j: ModuleJson = parse(text)?;
    AInfModule::from_json(&j)
}

pub fn twisted_to_text(c: &TwistedComplex) -> Result<String> {
    to_canonical(&c.to_json())
}

pub fn twisted_from_text(text: &str) -> Result<TwistedComplex> {
    let j: TwistedJson = parse(text)?;
    TwistedComplex::from_json(&j)
}

pub fn load_algebra(path: &Path) -> Result<ZigzagAlgebra> {
    algebra_from_text(&read(path)?)
}

pub fn load_module(path: &Path) -> Result<AInfModule> {
    module_from_text(&read(path)?)
}

pub fn load_twisted(path: &Path) -> Result<TwistedComplex> {
    twisted_from_text(&read(path)?)
}

// ---------------------------------------------------------------------------
// Actions

/// Semi-free module on disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiFreeJson {
    pub algebra: AlgebraRef,
    pub generators: Vec<FreeGen>,
    pub differential: Vec<EntryJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<Vec<i64>>,
}

/// One coefficient of a family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyTerm {
    pub from: usize,
    pub to: usize,
    pub elem: String,
    pub mono: Vec<i32>,
    pub coeff: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub deg: i64,
    pub vars: usize,
    pub terms: Vec<FamilyTerm>,
}

/// Homotopy action on disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionJson {
    pub module: SemiFreeJson,
    pub rho: Vec<FamilyJson>,
    #[serde(rename = "R")]
    pub r: usize,
    pub hom_min: i64,
}

pub fn semifree_to_json(m: &SemiFree) -> SemiFreeJson {
    let differential = m
        .diff
        .iter()
        .flat_map(|(&(a, b), x)| {
            x.iter().map(move |(y, c)| EntryJson {
                from: a,
                to: b,
                elem: m.alg.label(*y).to_string(),
                coeff: c.clone(),
            })
        })
        .collect();
    SemiFreeJson {
        algebra: AlgebraRef {
            m: m.alg.m,
            n: m.alg.n,
        },
        generators: m.gens.clone(),
        differential,
        lift: m.lift.clone(),
    }
}

fn label_index(alg: &ZigzagAlgebra, l: &str) -> Result<usize> {
    alg.index(l)
        .ok_or_else(|| Error::Invalid(format!("unknown algebra label {l}")))
}

pub fn semifree_from_json(j: &SemiFreeJson) -> Result<SemiFree> {
    let alg = Arc::new(ZigzagAlgebra::build(j.algebra.m, j.algebra.n)?);
    let mut diff: BTreeMap<(usize, usize), Vec<(usize, Q)>> = BTreeMap::new();
    for e in &j.differential {
        let y = label_index(&alg, &e.elem)?;
        let v = diff.entry((e.from, e.to)).or_default();
        *v = axpy(v, &Q::one(), &vec![(y, e.coeff.clone())]);
    }
    SemiFree::new(&alg, j.generators.clone(), diff, j.lift.clone())
}

pub fn family_to_json(alg: &ZigzagAlgebra, f: &Family) -> FamilyJson {
    FamilyJson {
        deg: f.deg,
        vars: f.vars,
        terms: f
            .iter()
            .map(|((a, b, y), mo, c)| FamilyTerm {
                from: *a,
                to: *b,
                elem: alg.label(*y).to_string(),
                mono: mo.to_vec(),
                coeff: c.clone(),
            })
            .collect(),
    }
}

pub fn family_from_json(alg: &ZigzagAlgebra, j: &FamilyJson) -> Result<Family> {
    let mut f = Family::zero(j.deg, j.vars);
    for t in &j.terms {
        if t.mono.len() != j.vars {
            return Err(Error::Invalid(
                "monomial length does not match the variable count".into(),
            ));
        }
        f.add(
            (t.from, t.to, label_index(alg, &t.elem)?),
            Mono::from_slice(&t.mono),
            t.coeff.clone(),
        );
    }
    Ok(f)
}

pub fn action_to_json(m: &SemiFree, a: &HomotopyAction) -> ActionJson {
    ActionJson {
        module: semifree_to_json(m),
        rho: a.rho.iter().map(|f| family_to_json(&m.alg, f)).collect(),
        r: a.r,
        hom_min: a.hom_min,
    }
}

/// Rebuilds an action and runs the full validation on it.
pub fn action_from_json(j: &ActionJson) -> Result<(SemiFree, HomotopyAction)> {
    let m = semifree_from_json(&j.module)?;
    let rho = j
        .rho
        .iter()
        .map(|f| family_from_json(&m.alg, f))
        .collect::<Result<Vec<_>>>()?;
    let action = HomotopyAction {
        rho,
        r: j.r,
        hom_min: j.hom_min,
        steps: Vec::new(),
    };
    let rep = validate(&m, &action, &ActionOptions::default())?;
    if !rep.passed() {
        return Err(Error::CheckFailed(format!(
            "stored action fails validation: {:?}",
            rep.first_failure
        )));
    }
    Ok((m, action))
}

pub fn action_to_text(m: &SemiFree, a: &HomotopyAction) -> Result<String> {
    to_canonical(&action_to_json(m, a))
}

pub fn action_from_text(text: &str) -> Result<(SemiFree, HomotopyAction)> {
    action_from_json(&parse(text)?)
}

pub fn load_action(path: &Path) -> Result<(SemiFree, HomotopyAction)> {
    action_from_text(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::action::{homotopy_extend, verify_weak, weak_action_solve};
    use crate::equivariance::killing::solve_killing;
    use crate::twisted::apply_braid;

    #[test]
    fn rationals_are_fraction_strings() {
        let s = to_canonical(&vec![Q::from(3), Q::new(-1, 2)]).unwrap();
        assert!(s.contains("\"3/1\"") && s.contains("\"-1/2\""), "{s}");
    }

    #[test]
    fn keys_are_sorted() {
        let a = ZigzagAlgebra::build(1, 3).unwrap();
        let s = algebra_to_text(&a).unwrap();
        let (b, m) = (s.find("\"basis\"").unwrap(), s.find("\"m\"").unwrap());
        assert!(b < m);
    }

    #[test]
    fn round_trips_are_identical() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let s = algebra_to_text(&a).unwrap();
        assert_eq!(algebra_to_text(&algebra_from_text(&s).unwrap()).unwrap(), s);
        let c = apply_braid(
            &"1 -2 1".parse().unwrap(),
            &TwistedComplex::projective(&a, 2, 1, 0),
        )
        .unwrap();
        let s = twisted_to_text(&c).unwrap();
        assert_eq!(twisted_to_text(&twisted_from_text(&s).unwrap()).unwrap(), s);
        let s = module_to_text(&c.to_module()).unwrap();
        assert_eq!(module_to_text(&module_from_text(&s).unwrap()).unwrap(), s);
        let m = SemiFree::from_twisted(&c).forget_lift();
        let alpha = solve_killing(&m).alpha.unwrap();
        let opts = ActionOptions::default();
        let weak = weak_action_solve(&m, &alpha, &opts).unwrap();
        let rho2 = verify_weak(&m, &weak.rho1, &opts).unwrap();
        let act = homotopy_extend(&m, &weak.rho1, &rho2, &opts).unwrap();
        let s = action_to_text(&m, &act).unwrap();
        let (m2, act2) = action_from_text(&s).unwrap();
        assert_eq!(action_to_text(&m2, &act2).unwrap(), s);
    }

    #[test]
    fn corrupted_action_rejected() {
        let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
        let c = TwistedComplex::projective(&a, 1, 0, 0);
        let m = SemiFree::from_twisted(&c);
        let opts = ActionOptions::default();
        let rho1 = crate::equivariance::action::naive_action(&m).unwrap();
        let rho2 = verify_weak(&m, &rho1, &opts).unwrap();
        let act = homotopy_extend(&m, &rho1, &rho2, &opts).unwrap();
        let mut j = action_to_json(&m, &act);
        j.rho[0].terms[0].coeff = Q::from(2);
        assert!(action_from_json(&j).is_err());
    }

    #[test]
    fn suffixes() {
        assert_eq!(
            ObjectKind::of_path(Path::new("x/P1.twc.json")),
            Some(ObjectKind::Twisted)
        );
        assert_eq!(
            ObjectKind::of_path(Path::new("a.action.json")),
            Some(ObjectKind::Action)
        );
        assert_eq!(ObjectKind::of_path(Path::new("a.json")), None);
    }
}
