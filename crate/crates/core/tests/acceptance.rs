//! The ten acceptance criteria, one PASS/FAIL line each.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zigzag_core::bigraded::BigradedModule;
use zigzag_core::equivariance::action::HomotopyAction;
use zigzag_core::equivariance::family::SemiFree;
use zigzag_core::equivariance::pipeline::{
    run_pipeline_with_action, PipelineOptions, PipelineReport,
};
use zigzag_core::equivariance::strict::{strictify, StrictOptions};
use zigzag_core::equivariance::{verify_group_cohomology, RationalRep};
use zigzag_core::hochschild::{alg_class, bc_certificate, random_transport};
use zigzag_core::par::Exec;
use zigzag_core::suite::{self, BraidImage};
use zigzag_core::twisted::{
    ext_table, scale_ext_key, scale_transfer, spherical_check, TwistedComplex,
};
use zigzag_core::zigzag::ZigzagAlgebra;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn algebra_suite() -> Check {
    for m in 1..=4 {
        for n in 1..=3 {
            let r = suite::algebra_row(m, n).map_err(|e| e.to_string())?;
            ensure(
                r.passed(),
                format!("A{m}^{n}: dim {} valid {}", r.dim, r.valid),
            )?;
        }
    }
    Ok("12 algebras valid, dims 2, 6, 10, 14".into())
}

fn chain_dimensions() -> Check {
    for m in 1..=4 {
        for n in 1..=3 {
            let r = suite::chain_row(m, n).map_err(|e| e.to_string())?;
            ensure(r.passed, format!("A{m}^{n}: {:?}", r.homs))?;
        }
    }
    Ok("end P_k = {1@0, 1@n}; neighbours 1-dim; distant 0".into())
}

fn braid_relations() -> Check {
    let rows = suite::braid_relations(3, 2, 0).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure(
            r.passed(),
            format!("{} vs {} on P{}", r.left, r.right, r.object),
        )?;
    }
    let witnessed = rows.iter().filter(|r| r.quasi_iso == Some(true)).count();
    let strict = rows
        .iter()
        .filter(|r| r.quasi_iso.is_none() && r.strict)
        .count();
    Ok(format!(
        "{witnessed} quasi-isomorphisms, {strict} strict commutations"
    ))
}

fn central_shift() -> Check {
    for n in [2, 3] {
        for (power, shift, weight) in [(1, 4, 3 * n), (2, 8, 6 * n)] {
            for r in suite::central_shift(2, n, power).map_err(|e| e.to_string())? {
                ensure(
                    r.passed && r.expected.j == shift && r.expected.i == weight,
                    format!("n={n}, power {power}, P{}: {:?}", r.k, r.image),
                )?;
            }
        }
    }
    Ok("δ(P_k) = P_k[4]{3n}, δ²(P_k) = P_k[8]{6n} for n = 2, 3".into())
}

fn cardy() -> Check {
    let rows = suite::cardy_corpus(100, 5, 4, Exec::Parallel).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure(
            r.pass,
            format!(
                "{} / {}: χ = {} vs {}",
                r.word0, r.word1, r.euler, r.gram_product
            ),
        )?;
    }
    let mut dets = Vec::new();
    for m in 1..=3 {
        for n in [2, 3] {
            let (d, ok) = suite::gram_determinant_ok(m, n).map_err(|e| e.to_string())?;
            ensure(ok, format!("det G(A{m}^{n}) = {d}"))?;
            dets.push(d);
        }
    }
    Ok(format!("100 pairs; det G = {dets:?}"))
}

fn hochschild() -> Check {
    let objects: Vec<BraidImage> = suite::cardy_cases(10, 13, 4)
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    let mut transports = 0;
    for img in &objects {
        let c = img.build().map_err(|e| e.to_string())?;
        let cls = alg_class(&c).map_err(|e| e.to_string())?;
        ensure(
            cls.as_integers() == Some(c.k_class()),
            format!("{}: {:?} vs {:?}", img.name(), cls.coords, c.k_class()),
        )?;
    }
    for (i, img) in objects.iter().take(5).enumerate() {
        let c = img.build().map_err(|e| e.to_string())?;
        let cls = alg_class(&c).map_err(|e| e.to_string())?;
        for t in 0..20 {
            let tr = random_transport(&c, 100 * i as u64 + t).map_err(|e| e.to_string())?;
            let bc = bc_certificate(&tr);
            ensure(bc.holds, format!("{}: bc coboundary fails", img.name()))?;
            let c2 = tr.target.to_twisted().map_err(|e| e.to_string())?;
            let cls2 = alg_class(&c2).map_err(|e| e.to_string())?;
            ensure(
                cls2.coords == cls.coords,
                format!("{}: class moved under transport {t}", img.name()),
            )?;
            transports += 1;
        }
    }
    Ok(format!(
        "{} objects; {transports} transports with bc coboundaries",
        objects.len()
    ))
}

fn group_cohomology() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..50 {
        let v = RationalRep::random(&mut rng, -5, 5, 3);
        let r = verify_group_cohomology(&v, 4);
        ensure(r.holds, format!("rep {i}: {r:?}"))?;
    }
    Ok("50 representations; H(bar) = V, H(cochain) = V^G in levels 0..3".into())
}

struct PipelineRun {
    name: String,
    report: PipelineReport,
    action: Option<(SemiFree, HomotopyAction)>,
}

fn pipeline(runs: &mut Vec<PipelineRun>) -> Check {
    for (i, img) in suite::pipeline_corpus(10, 11).into_iter().enumerate() {
        let c = img.build().map_err(|e| e.to_string())?;
        ensure(
            spherical_check(&c).spherical,
            format!("{} is not spherical", img.name()),
        )?;
        let opts = PipelineOptions {
            scramble: Some(i as u64),
            ..Default::default()
        };
        let (report, action) = run_pipeline_with_action(&img.name(), &c, &opts)
            .map_err(|e| format!("{}: {e}", img.name()))?;
        runs.push(PipelineRun {
            name: img.name(),
            report,
            action,
        });
    }
    let mut rs = Vec::new();
    for run in runs.iter() {
        let r = &run.report;
        ensure(r.ki_vanishes, format!("{}: Ki does not vanish", run.name))?;
        let d = r
            .details
            .as_ref()
            .ok_or(format!("{}: no details", run.name))?;
        ensure(
            (r.r as i64) <= d.width + 2,
            format!("{}: R = {} > width + 2 = {}", run.name, r.r, d.width + 2),
        )?;
        ensure(
            d.validation.passed(),
            format!("{}: validation {:?}", run.name, d.validation),
        )?;
        ensure(
            d.representation,
            format!("{}: weights do not form a representation", run.name),
        )?;
        ensure(
            d.lift_shift.is_some(),
            format!(
                "{}: weights {:?} do not match the lift",
                run.name, r.weights
            ),
        )?;
        rs.push(r.r);
    }
    Ok(format!("10 objects; R = {rs:?}"))
}

fn scaling() -> Check {
    let a4 = Arc::new(ZigzagAlgebra::build(2, 4).map_err(|e| e.to_string())?);
    let objects: Vec<TwistedComplex> = suite::pipeline_corpus(10, 11)
        .into_iter()
        .map(|img| {
            zigzag_core::twisted::apply_braid(
                &img.word,
                &TwistedComplex::projective(&a4, img.k, 0, 0),
            )
            .unwrap()
        })
        .collect();
    let down: Vec<TwistedComplex> = objects
        .iter()
        .map(|c| scale_transfer(c, 2).unwrap())
        .collect();
    let mut tables = 0;
    for (c, d) in objects.iter().zip(&down) {
        ensure(
            &scale_transfer(d, 4).map_err(|e| e.to_string())? == c,
            "round trip changed a complex",
        )?;
        let b = BigradedModule::from_twisted(c);
        let back = b
            .scale_transfer(2)
            .and_then(|x| x.scale_transfer(4))
            .map_err(|e| e.to_string())?;
        ensure(
            back.module().mu == b.module().mu && back.module().gens == b.module().gens,
            "module round trip",
        )?;
    }
    for (c0, d0) in objects.iter().zip(&down) {
        for (c1, d1) in objects.iter().zip(&down) {
            let moved: Option<Vec<_>> = ext_table(c0, c1)
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .map(|(k, d)| scale_ext_key(k, 4, 2).map(|k2| (k2, d)))
                .collect();
            let direct: Vec<_> = ext_table(d0, d1)
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .collect();
            let mut moved = moved.ok_or("ext class off the weight lattice")?;
            moved.sort();
            ensure(moved == direct, "ext table changed")?;
            let back: Vec<_> = ext_table(
                &scale_transfer(d0, 4).unwrap(),
                &scale_transfer(d1, 4).unwrap(),
            )
            .into_iter()
            .filter(|(_, d)| *d > 0)
            .collect();
            let orig: Vec<_> = ext_table(c0, c1)
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .collect();
            ensure(back == orig, "ext table changed on the way back")?;
            tables += 1;
        }
    }
    Ok(format!(
        "10 objects; {tables} ext tables preserved A2^4 → A2^2 → A2^4"
    ))
}

fn strictification(runs: &[PipelineRun]) -> Check {
    let mut windows = Vec::new();
    for run in runs {
        let (m, action) = run
            .action
            .as_ref()
            .ok_or(format!("{}: no action", run.name))?;
        let s = strictify(m, action, &StrictOptions::default()).map_err(|e| e.to_string())?;
        ensure(
            s.differential_ok,
            format!("{}: d² ≠ 0 on the truncation", run.name),
        )?;
        ensure(
            s.cohomology_matches,
            format!("{}: {:?} vs {:?}", run.name, s.truncated, s.module),
        )?;
        ensure(s.phi_iso, format!("{}: φ is not an isomorphism", run.name))?;
        ensure(
            s.splits,
            format!("{}: β ↦ β¹(e) does not split φ", run.name),
        )?;
        windows.push(s.certified_window);
    }
    Ok(format!(
        "{} objects; certified windows {windows:?}",
        runs.len()
    ))
}

fn main() {
    let mut runs = Vec::new();
    let mut failed = 0;
    let mut report = |i: usize, name: &str, budget: Duration, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let res = f();
        let dt = t.elapsed();
        let (ok, detail) = match res {
            Ok(d) if dt <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {budget:?}")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {i:>2} [{name}]: {} ({:.2}s / {}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            budget.as_secs()
        );
    };
    let s = Duration::from_secs;
    report(1, "algebra suite", s(1), &mut algebra_suite);
    report(
        2,
        "spherical and chain dimensions",
        s(1),
        &mut chain_dimensions,
    );
    report(3, "braid relations", s(60), &mut braid_relations);
    report(4, "central shift", s(120), &mut central_shift);
    report(5, "cardy pairing", s(300), &mut cardy);
    report(6, "hochschild invariance", s(120), &mut hochschild);
    report(7, "group cohomology", s(30), &mut group_cohomology);
    report(8, "equivariance pipeline", s(600), &mut || {
        pipeline(&mut runs)
    });
    report(9, "scale transfer", s(60), &mut scaling);
    report(10, "strictification window", s(120), &mut || {
        strictification(&runs)
    });
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
