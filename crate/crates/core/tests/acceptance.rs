//! Quantitative acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use asymptolab::cli::{run, Command, RunConfig};
use asymptolab::criteria::{coefficient_pool, default_grid, default_scalings, liminf_probe_model, scan_f_n_sup, FnVerdict};
use asymptolab::gallery::{make_family, FamilySpec, VerifyReport};
use asymptolab::numeric::{Selector, ToleranceProfile};
use asymptolab::porosity::{default_schedule, porosity_at_infinity, RaySet};
use asymptolab::pretangent::{build_stability_graph, maximal_cliques_of, tangency_probe, TangencyVerdict};
use asymptolab::sequence::{PointSequence, ScalingSequence};
use asymptolab::Verdict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s(e: asymptolab::Error) -> String {
    e.to_string()
}

fn family(spec: FamilySpec) -> asymptolab::gallery::Family {
    make_family(&spec).expect("gallery family")
}

fn porosity_closed_forms() -> Check {
    let profile = ToleranceProfile::default();
    let schedule = default_schedule(40.0);
    let mut out = Vec::new();
    for q in [2.0, 3.0, 10.0] {
        let p = porosity_at_infinity(&RaySet::geometric(q).map_err(e2s)?, &schedule, &profile).map_err(e2s)?;
        let want = 1.0 - 1.0 / q;
        ensure((p.value_by_gap_formula - want).abs() <= 1e-3, format!("geometric({q}) gap formula {}", p.value_by_gap_formula))?;
        ensure((p.value_by_scan - want).abs() <= 5e-3, format!("geometric({q}) scan {}", p.value_by_scan))?;
        out.push(format!("q={q}: {:.6}", p.value_by_gap_formula));
    }
    for (name, set) in [("N", RaySet::integers()), ("R+", RaySet::reals())] {
        let p = porosity_at_infinity(&set, &schedule, &profile).map_err(e2s)?;
        ensure(p.value_by_gap_formula.abs() <= 1e-3 && p.value_by_scan.abs() <= 5e-3, format!("{name}: {p:?}"))?;
    }
    // component k of the factorial set is k!, so the gap after it is (20!, 21!)
    let fact = RaySet::factorial();
    let c = fact.component(20).map_err(e2s)?.ok_or("no component 20")?;
    let gap = fact.gap_after(&c).map_err(e2s)?.ok_or("no gap after 20!")?;
    ensure((gap.ratio() - (1.0 - 1.0 / 21.0)).abs() <= 1e-9 && gap.ratio() > 0.95, format!("factorial gap ratio {}", gap.ratio()))?;
    out.push(format!("factorial n=20: {:.4}", gap.ratio()));
    Ok(out.join(", "))
}

fn hierarchy(report: &VerifyReport) -> Check {
    for f in &report.families {
        let c = &f.classification;
        let (sp, csp, om) = (c.strongly_porous.verdict, c.completely_strongly_porous.verdict, c.omega_strongly_porous.verdict);
        ensure(csp != Verdict::True || om == Verdict::True, format!("{}: CSP without ω-SP", f.family))?;
        ensure(om != Verdict::True || sp == Verdict::True, format!("{}: ω-SP without SP", f.family))?;
        let all = [sp, csp, om];
        if f.family.starts_with("geometric") {
            ensure(sp == Verdict::False, format!("{} passes SP", f.family))?;
        }
        if f.family == "factorial" || f.family.starts_with("superexp") {
            ensure(all.iter().all(|v| *v == Verdict::True), format!("{}: {all:?}", f.family))?;
        }
    }
    Ok(format!("{} families", report.families.len()))
}

fn single_point_tangent() -> Check {
    let sx = family(FamilySpec::Superexp { c: 1.0 });
    let r = ScalingSequence::Exp2Poly { a: 1.0, b: 1.0, c: 0.0 };
    let pool = coefficient_pool(&default_grid(1), &r);
    let g = build_stability_graph(sx.model.as_ref(), &pool, &r, &sx.profile).map_err(e2s)?;
    ensure(g.len() == 1 && g.vertices[0].alpha0, format!("superexp mid-gap graph has {} vertices", g.len()))?;
    let t = tangency_probe(sx.model.as_ref(), &pool, &r, &[0], &Selector::battery(0), &[], &sx.profile).map_err(e2s)?;
    ensure(matches!(t, TangencyVerdict::NoCounterexample { .. }), format!("tangency: {t:?}"))?;

    let z = family(FamilySpec::Integers);
    let mut sizes = Vec::new();
    for s in default_scalings(&z.set) {
        let pool = coefficient_pool(&default_grid(1), &s);
        match build_stability_graph(z.model.as_ref(), &pool, &s, &z.profile) {
            Ok(g) => {
                ensure(g.len() > 1, format!("Z with {} gives a single point", s.name()))?;
                sizes.push(g.len());
            }
            // scalings beyond the set oracle's reach are skipped
            Err(_) => sizes.push(0),
        }
    }
    ensure(sizes.iter().any(|&n| n > 1), "no scaling evaluated on Z")?;
    Ok(format!("superexp: 1 vertex, no counterexample; Z vertex counts {sizes:?}"))
}

fn finiteness(report: &VerifyReport) -> Check {
    let mut out = Vec::new();
    for spec in [FamilySpec::Integers, FamilySpec::Superexp { c: 1.0 }, FamilySpec::Factorial] {
        let f = family(spec.clone());
        let mut cfg = f.fn_scan.clone();
        cfg.n = 2;
        let scan = scan_f_n_sup(f.model.as_ref(), &cfg, &f.profile).map_err(e2s)?;
        let last = *scan.sups.last().unwrap_or(&f64::NAN);
        match (&spec, &scan.verdict) {
            (FamilySpec::Integers, FnVerdict::BoundedAway { c }) if *c >= 0.24 => out.push(format!("Z: bounded away {c:.4}")),
            (FamilySpec::Integers, v) => return Err(format!("Z: {v:?}")),
            (_, FnVerdict::LimitZero) if last + scan.truncation <= 0.01 => {
                out.push(format!("{}: limit zero ({:.2e})", spec.name(), last + scan.truncation))
            }
            (_, v) => return Err(format!("{}: {v:?}, final sup {last}", spec.name())),
        }
        let check = report.families.iter().find(|c| c.family == spec.name()).ok_or("family missing from report")?;
        let star = &check.star;
        ensure(star.observations.len() >= 5, format!("{}: {} scalings", spec.name(), star.observations.len()))?;
        ensure(star.matches && !star.contradiction, format!("{}: star observations {:?}", spec.name(), star.observations))?;
    }
    Ok(out.join(", "))
}

fn euclidean_pretangents(report: &VerifyReport) -> Check {
    ensure(report.isometry.len() == 2, "expected Z and Z^2 checks")?;
    for iso in &report.isometry {
        let refined_ok = iso.refinements.len() >= 3 && iso.refinements.iter().all(|r| r.weights_preserved);
        ensure(
            iso.vertices >= 9
                && iso.complete
                && iso.cliques == 1
                && iso.max_weight_error <= 2e-3
                && iso.metric_violation.is_none()
                && refined_ok,
            format!("Z^{}: {iso:?}", iso.dim),
        )?;
    }
    let errs: Vec<String> = report.isometry.iter().map(|i| format!("d={} err {:.1e}", i.dim, i.max_weight_error)).collect();
    Ok(errs.join(", "))
}

fn brute_force_cliques(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let is_clique = |m: u32| (0..n).all(|i| (i + 1..n).all(|j| m >> i & 1 == 0 || m >> j & 1 == 0 || adj[i][j]));
    let mut out: Vec<Vec<usize>> = (1u32..1 << n)
        .filter(|&m| is_clique(m) && (0..n).all(|v| m >> v & 1 == 1 || !is_clique(m | 1 << v)))
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

fn clique_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for g in 0..200 {
        let n = rng.random_range(1..=12);
        let p: f64 = rng.random();
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let e = rng.random::<f64>() < p;
                adj[i][j] = e;
                adj[j][i] = e;
            }
        }
        let mut got: Vec<Vec<usize>> = maximal_cliques_of(&adj)
            .into_iter()
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        got.sort();
        ensure(got == brute_force_cliques(&adj), format!("graph {g} (n = {n}) differs"))?;
    }
    Ok("200 graphs".into())
}

fn unboundedness(report: &VerifyReport) -> Check {
    let z = family(FamilySpec::Integers);
    let probes = [0.5, 7.3, 123.4, 1e4 * std::f64::consts::PI];
    let got = liminf_probe_model(z.model.as_ref(), &ScalingSequence::linear(), &probes, &z.profile).map_err(e2s)?;
    ensure(got.iter().all(|p| p.accepted), format!("Z probes: {got:?}"))?;

    let sx = family(FamilySpec::Superexp { c: 1.0 });
    let r = ScalingSequence::Exp2Poly { a: 1.0, b: 0.0, c: 0.0 };
    let p3 = &liminf_probe_model(sx.model.as_ref(), &r, &[3.0], &sx.profile).map_err(e2s)?[0];
    let d = p3.tail_distance.ok_or(format!("probe 3 unresolved: {p3:?}"))?;
    ensure(!p3.accepted && (d - 2.0).abs() <= 1e-3, format!("probe 3: {p3:?}"))?;

    let omega = |name: &str| {
        report.families.iter().find(|f| f.family == name).map(|f| f.classification.omega_strongly_porous.verdict)
    };
    ensure(omega("integers") == Some(Verdict::False), "Z should not be ω-strongly porous")?;
    ensure(omega("superexp(1)") == Some(Verdict::True), "superexp(1) should be ω-strongly porous")?;
    Ok(format!("Z probes accepted, superexp probe 3 at distance {d:.6}"))
}

fn tangency_witness() -> Check {
    let f = family(FamilySpec::NontangentUnion);
    let r = ScalingSequence::Exp2Poly { a: 1.0, b: 0.0, c: 0.0 };
    let pool = vec![PointSequence::nearest(&[1.0], &r)];
    let extra = vec![PointSequence::nearest(&[3.0], &r)];
    let g = build_stability_graph(f.model.as_ref(), &pool, &r, &f.profile).map_err(e2s)?;
    ensure(g.len() == 2, format!("expected {{α₀, 1}}, got {} vertices", g.len()))?;
    let t = tangency_probe(f.model.as_ref(), &pool, &r, &[0, 1], &Selector::battery(0), &extra, &f.profile).map_err(e2s)?;
    match t {
        TangencyVerdict::Witness { selector: Selector::Evens, d_tilde, .. } if (d_tilde - 3.0).abs() <= 1e-3 => {
            Ok(format!("witness on evens, d̃ = {d_tilde:.6}"))
        }
        other => Err(format!("{other:?}")),
    }
}

fn verify_into(dir: &Path) -> Result<(Vec<(String, Vec<u8>)>, bool), String> {
    let config = RunConfig { command: Some(Command::Verify), seed: 11, ..RunConfig::default() };
    let outcome = run(&config, dir).map_err(e2s)?;
    let mut files = Vec::new();
    for name in outcome.files.iter().filter(|f| *f != "timings.json") {
        files.push((name.clone(), fs::read(dir.join(name)).map_err(|e| e.to_string())?));
    }
    Ok((files, outcome.flags.is_empty()))
}

fn load_report(files: &[(String, Vec<u8>)]) -> Result<VerifyReport, String> {
    let (_, bytes) = files.iter().find(|(n, _)| n == "verify.json").ok_or("verify.json missing")?;
    let v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    serde_json::from_value(v["result"].clone()).map_err(|e| e.to_string())
}

#[test]
fn acceptance_criteria() {
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = verify_into(a.path());
    let report = first.as_ref().map_err(Clone::clone).and_then(|(f, _)| load_report(f));

    let with_report = |f: fn(&VerifyReport) -> Check| -> Check {
        match &report {
            Ok(r) => f(r),
            Err(e) => Err(format!("verify report unavailable: {e}")),
        }
    };
    let determinism = || -> Check {
        let (files_a, clean) = first.clone()?;
        let (files_b, _) = verify_into(b.path())?;
        ensure(clean, "verify raised flags")?;
        ensure(files_a == files_b, "reports differ between runs")?;
        Ok(format!("{} files identical", files_a.len()))
    };

    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("porosity closed forms", Box::new(porosity_closed_forms)),
        ("porosity hierarchy", Box::new(|| with_report(hierarchy))),
        ("single-point tangent space", Box::new(single_point_tangent)),
        ("finiteness and star graphs", Box::new(|| with_report(finiteness))),
        ("Euclidean pretangent spaces", Box::new(|| with_report(euclidean_pretangents))),
        ("clique oracle", Box::new(clique_oracle)),
        ("unbounded pretangent spaces", Box::new(|| with_report(unboundedness))),
        ("tangency witness", Box::new(tangency_witness)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} [{secs:.2}s] {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} [{secs:.2}s] {why}", k + 1);
            }
        }
    }
    println!("total {:.2}s", start.elapsed().as_secs_f64());
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
