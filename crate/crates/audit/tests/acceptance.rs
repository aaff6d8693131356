//! The ten acceptance criteria. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion does.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::Command;

use rand::Rng;
use walker_audit::sampling::{admissible, admissible_away_from_v1_zero, admissible_v3_zero, point_in, sign, trial_rng};
use walker_core::connection::{
    connection_frame, connection_frame_oracle, cotton_oracle, curvature_frame, curvature_frame_from_oracle,
    is_locally_conformally_flat,
};
use walker_core::grid::{BoxGrid, ParamRect};
use walker_core::parallel::{build_surface, exponential_profile, integrate, verify_parallel_family};
use walker_core::umbilic::{
    bracket_first, bracket_second, grad_lambda_frame, v3_zero_identity, verify_curvature_gradient_lemma, NormalState,
    ObstructionRecord,
};
use walker_core::walker::Jets;
use walker_core::{Point, Sign, WalkerMetric};

const CORPUS: [&str; 5] = ["x^2*y", "exp(x)*sin(y) + x^3*y", "x^3", "3*x + y^2", "2"];
const LCF_CORPUS: [&str; 3] = ["x^2*y", "3*x + y^2", "2"];
const SIGNS: [Sign; 2] = [Sign::Plus, Sign::Minus];
const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn metric(eps: Sign, f: &str) -> WalkerMetric {
    WalkerMetric::parse(eps, f).expect("corpus metric parses")
}

fn unit_box() -> (Point, Point) {
    (Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0))
}

/// Runs `body` over every corpus metric and both ε, tracking the worst value.
fn sweep_corpus(
    corpus: &[&str],
    mut body: impl FnMut(&str, &WalkerMetric, u64) -> Result<f64, String>,
) -> Result<(f64, String), String> {
    let mut worst = (0.0, String::new());
    for (k, f) in corpus.iter().enumerate() {
        for (e, eps) in SIGNS.into_iter().enumerate() {
            let m = metric(eps, f);
            let v = body(f, &m, (k * 2 + e) as u64).map_err(|err| format!("f = {f}, eps = {}: {err}", eps.as_i64()))?;
            if !(v <= worst.0) {
                worst = (v, format!("f = {f}, eps = {}", eps.as_i64()));
            }
        }
    }
    Ok(worst)
}

fn connection_formula() -> Outcome {
    let (lo, hi) = unit_box();
    let mut unlisted: f64 = 0.0;
    let (dev, at) = sweep_corpus(&CORPUS, |_, m, stream| {
        let mut rng = trial_rng(SEED, stream);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let p = point_in(&mut rng, lo, hi);
            let table = connection_frame(m, p).map_err(|e| e.to_string())?;
            let oracle = connection_frame_oracle(m, p).map_err(|e| e.to_string())?;
            worst = worst.max(table.max_abs_diff(&oracle));
            unlisted = unlisted.max(table.unlisted_max()).max(oracle.unlisted_max());
        }
        Ok(worst)
    })?;
    let msg = format!("max deviation {dev:e} ({at}), unlisted max {unlisted:e}, tol 1e-9");
    if dev <= 1e-9 && unlisted <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn curvature_formula() -> Outcome {
    let (lo, hi) = unit_box();
    let mut symmetries: f64 = 0.0;
    let (dev, at) = sweep_corpus(&CORPUS, |_, m, stream| {
        let mut rng = trial_rng(SEED, stream);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let p = point_in(&mut rng, lo, hi);
            let closed = curvature_frame(m, p).map_err(|e| e.to_string())?;
            let oracle = curvature_frame_from_oracle(m, p).map_err(|e| e.to_string())?;
            worst = worst.max(closed.max_abs_diff(&oracle));
            symmetries = symmetries
                .max(oracle.symmetry_residuals(m.epsilon()).max())
                .max(closed.symmetry_residuals(m.epsilon()).max());
        }
        Ok(worst)
    })?;
    let msg = format!("max deviation {dev:e} ({at}), Bianchi/antisymmetry max {symmetries:e}, tol 1e-6");
    if dev <= 1e-6 && symmetries <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn curvature_gradient_lemma() -> Outcome {
    let (lo, hi) = unit_box();
    let (res, at) = sweep_corpus(&CORPUS, |_, m, stream| {
        let mut worst: f64 = 0.0;
        for i in 0..1000u64 {
            let mut rng = trial_rng(SEED + stream, i);
            let p = point_in(&mut rng, lo, hi);
            let delta = sign(&mut rng);
            let state = admissible_away_from_v1_zero(&mut rng, m.epsilon(), delta, 0.1);
            let check = verify_curvature_gradient_lemma(m, p, &state).map_err(|e| e.to_string())?;
            worst = worst.max(check.residual);
        }
        Ok(worst)
    })?;
    let msg = format!("1000 states per metric and eps, max residual {res:e} ({at}), tol 1e-9");
    if res <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gradient_closed_form() -> Outcome {
    let origin = Point::new(0.0, 0.3, -0.2);
    let state = NormalState::new(Sign::Plus, Sign::Plus, [2.0, 1.0, 2.0]).map_err(|e| e.to_string())?;
    let g = grad_lambda_frame(&metric(Sign::Plus, "2*x^2"), origin, &state).map_err(|e| e.to_string())?;
    if g != [2.0, 2.0, -3.0] {
        return Err(format!("example gave {g:?}, want (2, 2, -3)"));
    }
    // f_xx = 0: affine in x.
    let mut rng = trial_rng(SEED, 400);
    let flat = metric(Sign::Plus, "3*x + y^2");
    for _ in 0..200 {
        let delta = sign(&mut rng);
        let s = admissible(&mut rng, Sign::Plus, delta);
        let g = grad_lambda_frame(&flat, origin, &s).map_err(|e| e.to_string())?;
        if g.iter().any(|c| *c != 0.0) {
            return Err(format!("f_xx = 0 but gradient {g:?} at {:?}", s.v));
        }
    }
    // v2 = v3 forces ε v1² = δ.
    let curved = metric(Sign::Plus, "x^3");
    for _ in 0..200 {
        let p = point_in(&mut rng, Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0));
        let eps = sign(&mut rng);
        let m = metric(eps, "x^3");
        let w: f64 = rng.gen_range(-2.0..2.0);
        let v1 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s = NormalState::new(eps, eps, [v1, w, w]).map_err(|e| e.to_string())?;
        let g = grad_lambda_frame(&m, p, &s).map_err(|e| e.to_string())?;
        if g.iter().any(|c| *c != 0.0) {
            return Err(format!("v2 = v3 but gradient {g:?}"));
        }
    }
    let witness = grad_lambda_frame(&curved, Point::new(0.0, 0.5, 0.0), &state).map_err(|e| e.to_string())?;
    if witness.iter().all(|c| *c == 0.0) {
        return Err("gradient vanished with v2 != v3 and f_xx != 0".into());
    }
    Ok("(2, 2, -3) reproduced; exact zeros on 200 states with f_xx = 0 and 200 with v2 = v3".into())
}

fn bracket_obstruction() -> Outcome {
    let (lo, hi) = unit_box();
    let (res, at) = sweep_corpus(&CORPUS, |f, m, stream| {
        let mut worst: f64 = 0.0;
        let lcf = LCF_CORPUS.contains(&f);
        for i in 0..1000u64 {
            let mut rng = trial_rng(SEED + 100 + stream, i);
            let p = point_in(&mut rng, lo, hi);
            let delta = sign(&mut rng);
            let lambda: f64 = rng.gen_range(-2.0..2.0);
            let state = admissible(&mut rng, m.epsilon(), delta);
            let jets = m.jets(p).map_err(|e| e.to_string())?;
            let diff = bracket_second(&state, &jets, lambda) - bracket_first(&state, &jets, lambda);
            worst = worst.max((diff - ObstructionRecord::predicted_difference(&state, jets.fxxx)).abs());
            if lcf && diff != 0.0 {
                return Err(format!("difference {diff:e} on a conformally flat metric"));
            }
        }
        Ok(worst)
    })?;
    let s = NormalState::new(Sign::Plus, Sign::Plus, [2.0, 1.0, 2.0]).map_err(|e| e.to_string())?;
    let jets = Jets { f: 0.0, fx: 4.0, fy: 0.0, fxx: 4.0, fxy: 0.0, fxxx: 6.0, fxxy: 0.0 };
    let example = bracket_second(&s, &jets, 1.0) - bracket_first(&s, &jets, 1.0);
    let msg =
        format!("max |B - A - predicted| {res:e} ({at}), tol 1e-10; LCF differences exactly 0; x^3 example {example}");
    if res <= 1e-10 && example == -3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn v3_zero_case() -> Outcome {
    let (lo, hi) = unit_box();
    let mut states = 0usize;
    let (res, at) = sweep_corpus(&CORPUS, |_, m, stream| {
        let mut worst: f64 = 0.0;
        let mut done = 0;
        let mut i = 0u64;
        while done < 500 {
            let mut rng = trial_rng(SEED + 200 + stream, i);
            i += 1;
            let p = point_in(&mut rng, lo, hi);
            let delta = sign(&mut rng);
            let Some(state) = admissible_v3_zero(&mut rng, m.epsilon(), delta) else { continue };
            let (lhs, rhs) = v3_zero_identity(m, p, &state).map_err(|e| e.to_string())?;
            worst = worst.max((lhs - rhs).abs());
            done += 1;
        }
        states += done;
        Ok(worst)
    })?;
    let msg = format!("{states} states with v3 = 0, max residual {res:e} ({at}), tol 1e-10");
    if res <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn parallel_family() -> Outcome {
    let m = metric(Sign::Plus, "x^2");
    let grid =
        ParamRect::new((-1.0, 1.0), (0.0, 1.0)).map_err(|e| e.to_string())?.grid([3, 11]).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for (x0, dx0) in [(1.0, 0.0), (0.5, 1.0), (-0.3, 0.7)] {
        let sol = integrate(&m, Sign::Plus, 0.0, x0, dx0, (0.0, 1.0), 1e-3).map_err(|e| e.to_string())?;
        let mut closed: f64 = 0.0;
        for k in 0..=1000 {
            let v = k as f64 / 1000.0;
            let x = sol.interpolate(v).map_err(|e| e.to_string())?[0];
            closed = closed.max((x - exponential_profile(x0, dx0, 0.0, v)).abs());
        }
        let patch = build_surface(&sol, (-1.0, 1.0)).map_err(|e| e.to_string())?;
        let r = verify_parallel_family(&m, &sol, &patch, Sign::Plus, &grid, 1e-5).map_err(|e| e.to_string())?;
        ok &= closed <= 1e-7 && r.passed();
        lines.push(format!(
            "({x0}, {dx0}): closed form {closed:.1e}, rho {:.1e}, lambda spread {:.1e}, |v2-v3| {:.1e}, normal {:.1e}, max|h| {:.1e}{}",
            r.rho.worst,
            r.lambda_constant.worst,
            r.v2_equals_v3.worst,
            r.normal.worst,
            r.max_abs_h,
            if r.totally_geodesic { "" } else { " (flagged)" },
        ));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lcf_cross_check() -> Outcome {
    let grid = BoxGrid::new(Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0), [3, 7, 7])
        .map_err(|e| e.to_string())?
        .points();
    let cases = [("x^2", true), ("y*x^2 + sin(y)*x + exp(y)", true), ("x^3", false), ("exp(x)", false)];
    let mut lines = Vec::new();
    let mut ok = true;
    for (f, expect) in cases {
        let m = metric(Sign::Plus, f);
        let verdict = is_locally_conformally_flat(&m, &grid, 1e-9).map_err(|e| e.to_string())?;
        let mut cotton: f64 = 0.0;
        for &p in &grid {
            cotton = cotton.max(cotton_oracle(&m, p).map_err(|e| e.to_string())?.max_norm());
        }
        let agree = verdict.holds == expect && (cotton <= 1e-5) == expect;
        ok &= agree;
        lines.push(format!("{f}: {} cotton {cotton:.1e}", if verdict.holds { "LCF" } else { "not LCF" }));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_walker-audit")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn negative_control() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(binary())
        .args(["parallel-construct", "--config"])
        .arg(scenario("perturbed_control.toml"))
        .args(["--format", "structured", "--out"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code();
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let failed: Vec<(String, String)> = report["sections"][0]["checks"]
        .as_array()
        .into_iter()
        .flatten()
        .filter(|c| c["passed"] == false)
        .map(|c| (c["name"].as_str().unwrap_or("").to_string(), c["witness"].as_str().unwrap_or("").to_string()))
        .collect();
    let umbilic = failed.iter().find(|(n, w)| n.ends_with(".umbilic") && w.starts_with("(u, v)"));
    let msg = format!("exit {code:?}, failed checks {:?}", failed.iter().map(|f| f.0.as_str()).collect::<Vec<_>>());
    match (code, umbilic) {
        (Some(1), Some((_, w))) => Ok(format!("{msg}, witness {w}")),
        _ => Err(msg),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for format in ["text", "structured"] {
        let runs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("{format}{k}"))).collect();
        for out in &runs {
            let status = Command::new(binary())
                .args(["all", "--seed", "42", "--format", format, "--config"])
                .arg(scenario("parallel_family.toml"))
                .arg("--out")
                .arg(out)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if status.code() != Some(0) {
                return Err(format!("`all` exited with {status}"));
            }
        }
        let mut names: Vec<_> = std::fs::read_dir(&runs[0])
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.file_name()))
            .collect();
        names.sort();
        for name in names {
            let a = std::fs::read(runs[0].join(&name)).map_err(|e| e.to_string())?;
            let b = std::fs::read(runs[1].join(&name)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{format}/{} differs between runs", name.to_string_lossy()));
            }
            files.push(format!("{format}/{}", name.to_string_lossy()));
        }
    }
    Ok(format!("byte-identical: {}", files.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("connection formulas vs Koszul oracle", connection_formula),
        ("curvature formulas vs Riemann oracle", curvature_formula),
        ("curvature/gradient two-path identity", curvature_gradient_lemma),
        ("closed-form gradient of lambda", gradient_closed_form),
        ("bracket difference equals the obstruction", bracket_obstruction),
        ("v3 = 0 connection identity", v3_zero_case),
        ("parallel surface family", parallel_family),
        ("conformal flatness vs Cotton", lcf_cross_check),
        ("negative control exits 1 with a witness", negative_control),
        ("determinism of `all` with seed 42", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
