//! `zigzag`: command-line front end for zigzag-core.
//!
//! Exit codes: 0 pass, 1 check failure, 2 input error, 3 budget exhausted.
//! Failures print a JSON error object on stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use zigzag_core::equivariance::pipeline::{
    run_pipeline, run_pipeline_with_action, PipelineOptions,
};
use zigzag_core::hochschild::{alg_class, bc_certificate, random_transport};
use zigzag_core::io::{self, ObjectKind};
use zigzag_core::par::{with_jobs, Exec};
use zigzag_core::suite;
use zigzag_core::twisted::{
    apply_braid, ext_table, orbit_search, quasi_iso, reduce, BraidWord, Gen, OrbitResult,
    TwistedComplex,
};
use zigzag_core::{Error, ZigzagAlgebra};

#[derive(Parser)]
#[command(
    name = "zigzag",
    version,
    about = "Exact computations over the graded zigzag algebras A_m^n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Algebra files.
    Algebra {
        #[command(subcommand)]
        action: AlgebraCmd,
    },
    /// Module files.
    Module {
        #[command(subcommand)]
        action: ModuleCmd,
    },
    /// Dimensions of H(hom(C0{s}, C1)) by weight shift s and total degree.
    Ext {
        c0: String,
        c1: String,
        #[command(flatten)]
        alg: AlgArgs,
    },
    /// Applies a braid word to a twisted complex, rightmost letter first.
    Twist {
        /// Letters k or -k separated by spaces, e.g. "1 2 -1".
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        c: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        alg: AlgArgs,
    },
    /// Checks that a power of the full twist shifts every P_k.
    CentralShift {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 2)]
        power: usize,
    },
    /// Checks the braid relations on every P_j.
    BraidRelations {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Euler pairing against the Gram form on a seeded corpus, as CSV.
    Cardy {
        #[arg(long)]
        corpus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[command(flatten)]
        jobs: JobArgs,
    },
    /// Hochschild classes.
    Hh {
        #[command(subcommand)]
        action: HhCmd,
    },
    /// Breadth-first search of the braid orbit of a projective.
    Orbit {
        /// `P1` .. `Pm`, or `all`.
        #[arg(long)]
        start: String,
        /// A `*.twc.json` file or a generator such as `P2{3}[1]`.
        #[arg(long)]
        target: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 512)]
        beam: usize,
        #[command(flatten)]
        alg: AlgArgs,
        #[command(flatten)]
        jobs: JobArgs,
    },
    /// Equivariance pipeline.
    Equivariant {
        #[command(subcommand)]
        action: EquivariantCmd,
    },
    /// Summary of the standard checks.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = 20)]
        corpus: usize,
        #[arg(long, default_value_t = 3)]
        pipeline: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum AlgebraCmd {
    /// Builds A_m^n, validates it and writes `*.algebra.json`.
    New {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModuleCmd {
    /// Validates any stored object, chosen by file suffix.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum HhCmd {
    /// Class of the identity in the weight-0 part of HH_0.
    Class {
        c: String,
        /// Random quasi-isomorphism transports to check against.
        #[arg(long, default_value_t = 0)]
        transports: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        alg: AlgArgs,
    },
}

#[derive(Subcommand)]
enum EquivariantCmd {
    /// Killing class, weak action, homotopy action, weights, strictification.
    Run {
        c: String,
        /// Writes the homotopy action to a `*.action.json` file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Presents the module through a seeded random change of basis.
        #[arg(long)]
        scramble: Option<u64>,
        #[command(flatten)]
        alg: AlgArgs,
    },
}

/// Algebra used for generator specs such as `P1`.
#[derive(clap::Args, Clone, Copy)]
struct AlgArgs {
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    n: i64,
}

#[derive(clap::Args, Clone, Copy)]
struct JobArgs {
    /// Worker threads; 0 uses the default pool, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl JobArgs {
    fn exec(self) -> Exec {
        if self.jobs == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    Fail(String),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CheckFailed(_) => 1,
        Error::Budget(_) => 3,
        Error::Dimension(_) | Error::Invalid(_) | Error::Malformed(_) => 2,
    }
}

fn error_kind(code: u8) -> &'static str {
    match code {
        1 => "check_failed",
        3 => "budget_exhausted",
        _ => "input_error",
    }
}

fn emit_error(code: u8, message: &str) {
    let v = json!({ "error": { "kind": error_kind(code), "code": code, "message": message } });
    eprintln!("{v}");
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    print!("{}", io::to_canonical(v)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            emit_error(2, &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(msg)) => {
            emit_error(1, &msg);
            ExitCode::from(1)
        }
        Err(e) => {
            let code = exit_code(&e);
            emit_error(code, &e.to_string());
            ExitCode::from(code)
        }
    }
}

fn algebra(args: AlgArgs) -> Result<Arc<ZigzagAlgebra>, Error> {
    Ok(Arc::new(ZigzagAlgebra::build(args.m, args.n)?))
}

/// `P2`, `P2{3}` or `P2{3}[1]`.
fn parse_gen(spec: &str) -> Option<Gen> {
    let rest = spec.strip_prefix('P')?;
    let (k, rest) = rest.split_at(rest.find(['{', '[']).unwrap_or(rest.len()));
    let k: usize = k.trim_start_matches('_').parse().ok()?;
    let mut i = 0;
    let mut j = 0;
    let mut rest = rest;
    if let Some(r) = rest.strip_prefix('{') {
        let end = r.find('}')?;
        i = r[..end].parse().ok()?;
        rest = &r[end + 1..];
    }
    if let Some(r) = rest.strip_prefix('[') {
        let end = r.find(']')?;
        j = r[..end].parse().ok()?;
        rest = &r[end + 1..];
    }
    rest.is_empty().then_some(Gen::new(k, i, j))
}

/// A `*.twc.json` path or a generator spec over `A_m^n`.
fn twisted_arg(spec: &str, args: AlgArgs) -> Result<TwistedComplex, Error> {
    if let Some(g) = parse_gen(spec) {
        let a = algebra(args)?;
        if g.k == 0 || g.k > a.m {
            return Err(Error::Invalid(format!(
                "vertex {} out of range 1..{}",
                g.k, a.m
            )));
        }
        return Ok(TwistedComplex::projective(&a, g.k, g.i, g.j));
    }
    let path = Path::new(spec);
    match ObjectKind::of_path(path) {
        Some(ObjectKind::Twisted) => io::load_twisted(path),
        _ => Err(Error::Invalid(format!(
            "{spec}: expected a *.twc.json file or a generator like P1{{0}}[0]"
        ))),
    }
}

fn run(cmd: Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Algebra {
            action: AlgebraCmd::New { m, n, out },
        } => {
            let a = ZigzagAlgebra::build(m, n)?;
            let rep = a.validate();
            if !rep.passed() {
                return Ok(Outcome::Fail(format!(
                    "algebra fails validation: {:?}",
                    rep.first_violation
                )));
            }
            let path = out.unwrap_or_else(|| PathBuf::from(format!("a{m}_{n}.algebra.json")));
            if ObjectKind::of_path(&path) != Some(ObjectKind::Algebra) {
                return Err(Error::Invalid(format!(
                    "{}: expected a *.algebra.json path",
                    path.display()
                )));
            }
            io::write(&path, &io::algebra_to_text(&a)?)?;
            print_json(
                &json!({ "path": path.display().to_string(), "m": m, "n": n, "dim": a.dim(), "valid": true }),
            )?;
            Ok(Outcome::Pass)
        }
        Command::Module {
            action: ModuleCmd::Validate { file },
        } => validate_file(&file),
        Command::Ext { c0, c1, alg } => {
            let (c0, c1) = (twisted_arg(&c0, alg)?, twisted_arg(&c1, alg)?);
            if (c0.alg.m, c0.alg.n) != (c1.alg.m, c1.alg.n) {
                return Err(Error::Invalid(
                    "complexes live over different algebras".into(),
                ));
            }
            let rows: Vec<Value> = ext_table(&c0, &c1)
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .map(|((s, t), d)| json!({ "shift": s, "degree": t, "dim": d }))
                .collect();
            let euler: i64 = ext_table(&c0, &c1)
                .iter()
                .map(|((_, t), d)| if t % 2 == 0 { *d as i64 } else { -(*d as i64) })
                .sum();
            print_json(&json!({ "ext": rows, "euler": euler }))?;
            Ok(Outcome::Pass)
        }
        Command::Twist { word, c, out, alg } => {
            let w: BraidWord = word.parse()?;
            let c = twisted_arg(&c, alg)?;
            let img = apply_braid(&w, &c)?.canonical();
            let text = io::twisted_to_text(&img)?;
            match out {
                Some(p) => {
                    if ObjectKind::of_path(&p) != Some(ObjectKind::Twisted) {
                        return Err(Error::Invalid(format!(
                            "{}: expected a *.twc.json path",
                            p.display()
                        )));
                    }
                    io::write(&p, &text)?;
                    print_json(
                        &json!({ "path": p.display().to_string(), "generators": img.len() }),
                    )?;
                }
                None => print!("{text}"),
            }
            Ok(Outcome::Pass)
        }
        Command::CentralShift { m, n, power } => {
            let rows = suite::central_shift(m, n, power)?;
            let pass = rows.iter().all(|r| r.passed);
            let e = rows[0].expected;
            let ks: Vec<String> = rows.iter().map(|r| r.k.to_string()).collect();
            println!(
                "P_k → P_k[{}]{{{}}} for k={}: {}",
                e.j,
                e.i,
                ks.join(","),
                if pass { "PASS" } else { "FAIL" }
            );
            for r in rows.iter().filter(|r| !r.passed) {
                let got: Vec<String> = r.image.iter().map(|g| g.to_string()).collect();
                println!("  k={}: got {}", r.k, got.join(" ⊕ "));
            }
            Ok(if pass {
                Outcome::Pass
            } else {
                Outcome::Fail("central shift mismatch".into())
            })
        }
        Command::BraidRelations { m, n, seed } => {
            let rows = suite::braid_relations(m, n, seed)?;
            for r in &rows {
                let how = match (r.quasi_iso, r.strict) {
                    (Some(true), true) => "quasi-iso (equal after reduction)",
                    (Some(true), false) => "quasi-iso",
                    (None, true) => "strict",
                    _ => "FAIL",
                };
                println!("{} = {} on P{}: {how}", r.left, r.right, r.object);
            }
            let pass = rows.iter().all(|r| r.passed());
            println!(
                "braid relations for m={m}, n={n}: {}",
                if pass { "PASS" } else { "FAIL" }
            );
            Ok(if pass {
                Outcome::Pass
            } else {
                Outcome::Fail("braid relation without witness".into())
            })
        }
        Command::Cardy {
            corpus,
            seed,
            max_len,
            jobs,
        } => {
            let rows = with_jobs(jobs.jobs, || {
                suite::cardy_corpus(corpus, seed, max_len, jobs.exec())
            })?;
            print!("{}", cardy_csv(&rows));
            let failed = rows.iter().filter(|r| !r.pass).count();
            Ok(if failed == 0 {
                Outcome::Pass
            } else {
                Outcome::Fail(format!("{failed} rows fail"))
            })
        }
        Command::Hh {
            action:
                HhCmd::Class {
                    c,
                    transports,
                    seed,
                    alg,
                },
        } => {
            let c = twisted_arg(&c, alg)?;
            let cls = alg_class(&c)?;
            let k = c.k_class();
            let equal = cls.as_integers().as_deref() == Some(k.as_slice());
            let mut checks = Vec::new();
            let mut all = equal;
            for t in 0..transports {
                let tr = random_transport(&c, seed.wrapping_add(t as u64))?;
                let c2 = tr.target.to_twisted()?;
                let cls2 = alg_class(&c2)?;
                let bc = bc_certificate(&tr);
                let ok = bc.holds && cls2.coords == cls.coords;
                all &= ok;
                checks.push(json!({
                    "generators": c2.len(),
                    "class": cls2.coords,
                    "bc_chain": bc.chain.render(&c.alg),
                    "bc_holds": bc.holds,
                    "unchanged": ok,
                }));
            }
            print_json(&json!({
                "alg_class": cls.coords,
                "k_class": k,
                "equal": equal,
                "witness": cls.witness.render(&c.alg),
                "transports": checks,
            }))?;
            Ok(if all {
                Outcome::Pass
            } else {
                Outcome::Fail("class differs from K-class or transport".into())
            })
        }
        Command::Orbit {
            start,
            target,
            depth,
            beam,
            alg,
            jobs,
        } => {
            let target = reduce(&twisted_arg(&target, alg)?).canonical();
            let a = target.alg.clone();
            let starts: Vec<usize> = if start == "all" {
                (1..=a.m).collect()
            } else {
                match parse_gen(&start) {
                    Some(g) if g.i == 0 && g.j == 0 && (1..=a.m).contains(&g.k) => vec![g.k],
                    _ => return Err(Error::Invalid(format!("bad start '{start}'"))),
                }
            };
            let (k_t, h_t) = (target.k_class(), target.cohomology_dims());
            let pred = |c: &TwistedComplex| {
                c.k_class() == k_t
                    && c.cohomology_dims() == h_t
                    && (*c == target || quasi_iso(c, &target, 8, 0).is_some())
            };
            let res = with_jobs(jobs.jobs, || {
                orbit_search(&a, &starts, depth, beam, jobs.exec(), &pred)
            });
            match res {
                OrbitResult::Found {
                    start,
                    word,
                    object,
                } => {
                    print_json(&json!({
                        "found": true,
                        "start": format!("P{start}"),
                        "word": word.to_string(),
                        "object": object.to_json(),
                    }))?;
                    Ok(Outcome::Pass)
                }
                OrbitResult::Exhausted { explored } => Err(Error::Budget(format!(
                    "target not reached within depth {depth}; explored {explored} objects"
                ))),
            }
        }
        Command::Equivariant {
            action:
                EquivariantCmd::Run {
                    c,
                    out,
                    scramble,
                    alg,
                },
        } => {
            let cx = twisted_arg(&c, alg)?;
            let opts = PipelineOptions {
                scramble,
                ..Default::default()
            };
            let (rep, action) = run_pipeline_with_action(&c, &cx, &opts)?;
            if let (Some(p), Some((m, a))) = (&out, &action) {
                if ObjectKind::of_path(p) != Some(ObjectKind::Action) {
                    return Err(Error::Invalid(format!(
                        "{}: expected a *.action.json path",
                        p.display()
                    )));
                }
                io::write(p, &io::action_to_text(m, a)?)?;
            }
            print_json(&rep)?;
            Ok(if rep.passed() {
                Outcome::Pass
            } else {
                Outcome::Fail("pipeline check failed".into())
            })
        }
        Command::Report {
            format,
            corpus,
            pipeline,
            seed,
        } => report(format, corpus, pipeline, seed),
    }
}

fn validate_file(file: &Path) -> Result<Outcome, Error> {
    let kind = ObjectKind::of_path(file)
        .ok_or_else(|| Error::Invalid(format!("{}: unknown file suffix", file.display())))?;
    let (summary, ok, why) = match kind {
        ObjectKind::Algebra => {
            let a = io::load_algebra(file)?;
            (
                json!({ "kind": "algebra", "m": a.m, "n": a.n, "dim": a.dim() }),
                true,
                String::new(),
            )
        }
        ObjectKind::Module => {
            let m = io::load_module(file)?;
            let rep = m.validate();
            let why = rep.first_violation.clone().unwrap_or_default();
            (
                json!({ "kind": "module", "dim": m.dim(), "report": rep }),
                rep.passed(),
                why,
            )
        }
        ObjectKind::Twisted => {
            let c = io::load_twisted(file)?;
            let rep = c.to_module().validate();
            let why = rep.first_violation.clone().unwrap_or_default();
            (
                json!({ "kind": "twisted", "generators": c.len(), "report": rep }),
                rep.passed(),
                why,
            )
        }
        ObjectKind::Action => {
            let (m, a) = io::load_action(file)?;
            (
                json!({ "kind": "action", "generators": m.len(), "R": a.r }),
                true,
                String::new(),
            )
        }
    };
    let mut v = summary;
    v["valid"] = json!(ok);
    print_json(&v)?;
    Ok(if ok {
        Outcome::Pass
    } else {
        Outcome::Fail(why)
    })
}

fn cardy_csv(rows: &[suite::CardyRow]) -> String {
    let join = |v: &[i64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut s = String::from("word0,word1,euler,class0,class1,gram_product,pass\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.word0,
            r.word1,
            r.euler,
            join(&r.class0),
            join(&r.class1),
            r.gram_product,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

/// One named check of the report.
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn report(format: Format, corpus: usize, pipeline: usize, seed: u64) -> Result<Outcome, Error> {
    let mut checks = Vec::new();
    for m in 1..=4 {
        for n in 1..=3 {
            let a = suite::algebra_row(m, n)?;
            let c = suite::chain_row(m, n)?;
            checks.push(Check {
                name: format!("algebra A{m}^{n}"),
                pass: a.passed() && c.passed,
                detail: format!("dim {}", a.dim),
            });
        }
    }
    for n in [2, 3] {
        let rows = suite::central_shift(2, n, 2)?;
        let e = rows[0].expected;
        checks.push(Check {
            name: format!("central shift A2^{n}"),
            pass: rows.iter().all(|r| r.passed),
            detail: format!("P_k[{}]{{{}}}", e.j, e.i),
        });
    }
    let rel = suite::braid_relations(3, 2, seed)?;
    checks.push(Check {
        name: "braid relations A3^2".into(),
        pass: rel.iter().all(|r| r.passed()),
        detail: format!("{} relation instances", rel.len()),
    });
    let rows = suite::cardy_corpus(corpus, seed, 4, Exec::Parallel)?;
    checks.push(Check {
        name: "cardy corpus".into(),
        pass: rows.iter().all(|r| r.pass),
        detail: format!("{} pairs", rows.len()),
    });
    let mut reports = BTreeMap::new();
    for img in suite::pipeline_corpus(pipeline, seed) {
        let c = img.build()?;
        let r = run_pipeline(
            &img.name(),
            &c,
            &PipelineOptions {
                scramble: Some(seed),
                ..Default::default()
            },
        )?;
        checks.push(Check {
            name: format!("pipeline {}", img.name()),
            pass: r.passed(),
            detail: format!("R = {}", r.r),
        });
        reports.insert(img.name(), r);
    }
    let pass = checks.iter().all(|c| c.pass);
    match format {
        Format::Json => {
            let list: Vec<Value> = checks
                .iter()
                .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
                .collect();
            print_json(&json!({ "checks": list, "pipeline": reports, "pass": pass }))?;
        }
        Format::Csv => {
            println!("name,pass,detail");
            for c in &checks {
                println!(
                    "{},{},{}",
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
        }
    }
    Ok(if pass {
        Outcome::Pass
    } else {
        Outcome::Fail("report has failing checks".into())
    })
}
