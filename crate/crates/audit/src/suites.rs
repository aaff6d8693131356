//! The checks behind each subcommand. Per-point work runs on rayon and is
//! collected in input order; reductions happen afterwards, sequentially.

use rand::Rng;
use rayon::prelude::*;
use walker_core::connection::{
    connection_frame, connection_frame_oracle, cotton_oracle, curvature_frame, curvature_frame_from_oracle,
    frame_brackets, is_flat, is_locally_conformally_flat, torsion_residual,
};
use walker_core::grid::Param;
use walker_core::parallel::{
    build_perturbed_surface, integrate, verify_parallel_family, ParallelError, ParallelReport,
};
use walker_core::surface::{scan_point, SurfacePatch, UmbilicRecord};
use walker_core::umbilic::{
    bracket_consistency, bracket_first, bracket_first_via_connection, bracket_second, case_labels, classify_records,
    grad_lambda_frame, numeric_bracket_audit, obstruction, v3_zero_identity, verify_curvature_gradient_lemma,
    ChainRuleOracle, ClassVerdict, Inconsistency, NormalState, ObstructionRecord,
};
use walker_core::walker::{contract, frame_signs, metric_matrix, Jets};
use walker_core::{EvalError, Point, Sign, WalkerMetric};

use crate::config::{OdeSurface, Scenario, SurfaceSpec};
use crate::report::{fmt_param, fmt_point, worst, PointRow, Report, Section};
use crate::sampling::{admissible_away_from_v1_zero, admissible_v3_zero, point_in, sign, trial_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    FrameCheck,
    CurvatureCheck,
    LcfTest,
    UmbilicScan,
    ParallelConstruct,
    TheoremAudit,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FrameCheck => "frame-check",
            Command::CurvatureCheck => "curvature-check",
            Command::LcfTest => "lcf-test",
            Command::UmbilicScan => "umbilic-scan",
            Command::ParallelConstruct => "parallel-construct",
            Command::TheoremAudit => "theorem-audit",
            Command::All => "all",
        }
    }
}

/// The scenario cannot support the requested subcommand.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0} needs a [surface] section")]
    NoSurface(&'static str),
    #[error("parallel-construct needs a [surface] of kind \"ode\"")]
    NotOde,
}

pub fn run(command: Command, scenario: &Scenario) -> Result<Report, RunError> {
    let mut sections = Vec::new();
    let mut points = None;
    let mut keep = |rows: Option<Vec<PointRow>>| {
        if points.is_none() {
            points = rows;
        }
    };
    match command {
        Command::FrameCheck => sections.push(frame_check(scenario)),
        Command::CurvatureCheck => sections.push(curvature_check(scenario)),
        Command::LcfTest => sections.push(lcf_test(scenario)),
        Command::TheoremAudit => sections.push(theorem_audit(scenario)),
        Command::UmbilicScan => {
            let (s, rows) = umbilic_scan(scenario).ok_or(RunError::NoSurface("umbilic-scan"))?;
            sections.push(s);
            keep(rows);
        }
        Command::ParallelConstruct => {
            let Some(SurfaceSpec::Ode(ode)) = &scenario.surface else { return Err(RunError::NotOde) };
            let (s, rows) = parallel_construct(scenario, ode);
            sections.push(s);
            keep(rows);
        }
        Command::All => {
            sections.push(frame_check(scenario));
            sections.push(curvature_check(scenario));
            sections.push(lcf_test(scenario));
            sections.push(theorem_audit(scenario));
            if let Some((s, rows)) = umbilic_scan(scenario) {
                sections.push(s);
                keep(rows);
            }
            if let Some(SurfaceSpec::Ode(ode)) = &scenario.surface {
                sections.push(parallel_construct(scenario, ode).0);
            }
        }
    }
    Ok(Report::new(command.name(), scenario, sections, points))
}

/// Evaluates `probe` at every grid point in parallel; an evaluation error
/// becomes a failing check and `None`.
fn over_grid<T: Send>(
    section: &mut Section,
    points: &[Point],
    probe: impl Fn(Point) -> Result<T, EvalError> + Sync,
) -> Option<Vec<(Point, T)>> {
    let results: Vec<Result<(Point, T), (Point, EvalError)>> =
        points.par_iter().map(|&p| probe(p).map(|t| (p, t)).map_err(|e| (p, e))).collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err((p, e)) => {
                section.failure("evaluation", format!("{e} at {}", fmt_point(p)));
                return None;
            }
        }
    }
    Some(out)
}

fn max_check<T>(section: &mut Section, name: &str, rows: &[(Point, T)], tol: f64, value: impl Fn(&T) -> f64) {
    let (v, at) = worst(rows.iter().map(|(p, t)| (*p, value(t))));
    section.at_most(name, v, tol, at.map(fmt_point));
}

struct FrameRow {
    gram: f64,
    connection: f64,
    unlisted: f64,
    compatibility: f64,
    torsion: f64,
    symmetries: f64,
}

pub fn frame_check(sc: &Scenario) -> Section {
    let mut s = Section::new("frame-check");
    let m = &sc.metric.walker;
    let tol = &sc.analysis.tolerances;
    let points = sc.metric.grid.points();
    s.note("grid_points", points.len());
    let eps = m.epsilon();
    let Some(rows) = over_grid(&mut s, &points, |p| {
        let f = m.f_at(p)?;
        let g = metric_matrix(eps, f);
        let frame = m.frame_at(p)?;
        let signs = frame_signs(eps);
        let mut gram: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { signs[i] } else { 0.0 };
                gram = gram.max((contract(&g, &frame[i].comps, &frame[j].comps) - want).abs());
            }
        }
        let table = connection_frame(m, p)?;
        let oracle = connection_frame_oracle(m, p)?;
        Ok(FrameRow {
            gram: gram / (1.0 + f * f),
            connection: table.max_abs_diff(&oracle),
            unlisted: table.unlisted_max(),
            compatibility: table.metric_compatibility_residual(eps),
            torsion: torsion_residual(&table, &frame_brackets(m, p)?),
            symmetries: curvature_frame(m, p)?.symmetry_residuals(eps).max(),
        })
    }) else {
        return s;
    };
    max_check(&mut s, "frame_orthonormality", &rows, tol.exact, |r| r.gram);
    max_check(&mut s, "connection_vs_koszul", &rows, tol.connection, |r| r.connection);
    max_check(&mut s, "connection_unlisted_entries", &rows, tol.connection, |r| r.unlisted);
    max_check(&mut s, "metric_compatibility", &rows, tol.connection, |r| r.compatibility);
    max_check(&mut s, "torsion_free", &rows, tol.connection, |r| r.torsion);
    max_check(&mut s, "curvature_symmetries", &rows, tol.connection, |r| r.symmetries);
    s
}

struct CurvatureRow {
    deviation: f64,
    closed_unlisted: f64,
    oracle_unlisted: f64,
    oracle_symmetries: f64,
}

pub fn curvature_check(sc: &Scenario) -> Section {
    let mut s = Section::new("curvature-check");
    let m = &sc.metric.walker;
    let tol = &sc.analysis.tolerances;
    let points = sc.metric.grid.points();
    s.note("grid_points", points.len());
    let Some(rows) = over_grid(&mut s, &points, |p| {
        let closed = curvature_frame(m, p)?;
        let oracle = curvature_frame_from_oracle(m, p)?;
        Ok(CurvatureRow {
            deviation: closed.max_abs_diff(&oracle),
            closed_unlisted: closed.unlisted_max(),
            oracle_unlisted: oracle.unlisted_max(),
            oracle_symmetries: oracle.symmetry_residuals(m.epsilon()).max(),
        })
    }) else {
        return s;
    };
    max_check(&mut s, "curvature_vs_riemann_oracle", &rows, tol.curvature, |r| r.deviation);
    max_check(&mut s, "curvature_unlisted_entries", &rows, tol.connection, |r| r.closed_unlisted);
    max_check(&mut s, "oracle_unlisted_entries", &rows, tol.curvature, |r| r.oracle_unlisted);
    max_check(&mut s, "oracle_symmetries", &rows, tol.curvature, |r| r.oracle_symmetries);
    match is_flat(m, &points, tol.connection) {
        Ok(v) => {
            s.note("flat", v.holds);
            s.note("max_abs_fxx", v.max_abs);
            s.note("fxx_zero_samples", format!("{}/{}", v.within_tol, v.total));
        }
        Err(e) => s.failure("evaluation", e),
    }
    s
}

pub fn lcf_test(sc: &Scenario) -> Section {
    let mut s = Section::new("lcf-test");
    let m = &sc.metric.walker;
    let tol = &sc.analysis.tolerances;
    let points = sc.metric.grid.points();
    let verdict = match is_locally_conformally_flat(m, &points, tol.lcf) {
        Ok(v) => v,
        Err(e) => {
            s.failure("evaluation", e);
            return s;
        }
    };
    let Some(rows) = over_grid(&mut s, &points, |p| Ok(cotton_oracle(m, p)?.max_norm())) else {
        return s;
    };
    let (cotton_max, at) = worst(rows.iter().map(|&(p, c)| (p, c)));
    let cotton_says = cotton_max <= tol.cotton;
    s.note("verdict", if verdict.holds { "locally conformally flat" } else { "not locally conformally flat" });
    s.note("max_abs_fxxx", verdict.max_abs);
    if let Some(w) = verdict.witness() {
        s.note("fxxx_witness", fmt_point(w));
    }
    s.note("fxxx_zero_samples", format!("{}/{}", verdict.within_tol, verdict.total));
    s.verdict(
        "cotton_agrees_with_fxxx",
        cotton_says == verdict.holds,
        cotton_max,
        Some(tol.cotton),
        at.map(|p| format!("cotton {cotton_max:e} at {}", fmt_point(p))),
    );
    s
}

/// The patch the scan runs on; ODE patches use trajectory 0 and `δ = ε`.
fn scan_target(sc: &Scenario) -> Option<Result<(SurfacePatch, Sign), ParallelError>> {
    let m = &sc.metric.walker;
    Some(match sc.surface.as_ref()? {
        SurfaceSpec::Explicit(e) => Ok((e.patch.clone(), sc.analysis.delta_sign())),
        SurfaceSpec::Ode(o) => {
            let [x0, dx0] = o.initial[0];
            integrate(m, o.eta_sign(), o.c, x0, dx0, (o.v[0], o.v[1]), o.step)
                .and_then(|sol| build_perturbed_surface(&sol, (o.u[0], o.u[1]), o.perturbation_expr.clone()))
                .map(|p| (p, m.epsilon()))
        }
    })
}

pub fn umbilic_scan(sc: &Scenario) -> Option<(Section, Option<Vec<PointRow>>)> {
    let target = scan_target(sc)?;
    let spec = sc.surface.as_ref()?;
    let mut s = Section::new("umbilic-scan");
    let m = &sc.metric.walker;
    let tol = &sc.analysis.tolerances;
    let (patch, delta) = match target {
        Ok(t) => t,
        Err(e) => {
            s.failure("surface_construction", e);
            return Some((s, None));
        }
    };
    s.note("delta", delta.as_i64());
    let grid = match spec.domain().grid(spec.resolution()) {
        Ok(g) => g,
        Err(e) => {
            s.failure("surface_grid", e);
            return Some((s, None));
        }
    };
    let records: Vec<UmbilicRecord> = grid.par_iter().map(|&q| scan_point(&patch, m, delta, q)).collect();
    let class = classify_records(&records, tol.umbilic);
    let sum = &class.summary;
    s.note("regular_points", sum.regular);
    s.note("degenerate_points", sum.degenerate);
    if sum.regular == 0 {
        s.failure("regular_points", "no regular point on the patch");
        return Some((s, Some(records.iter().map(PointRow::from).collect())));
    }
    let point_of = |q: Param| records.iter().find(|r| r.param == q).and_then(|r| r.point);
    let witness = |q: Param| match point_of(q) {
        Some(p) => format!("{} at {}", fmt_param(q), fmt_point(p)),
        None => fmt_param(q),
    };
    let (rho_max, rho_at) = worst(records.iter().filter_map(|r| r.data().map(|d| (r.param, d.rho))));
    s.at_most("umbilical", rho_max, tol.umbilic, rho_at.map(witness));
    s.at_most("shape_operator_consistency", sum.max_shape_residual, tol.shape, None);
    s.note("lambda_range", format!("[{}, {}]", sum.lambda_min, sum.lambda_max));
    s.note("max_abs_h", sum.max_abs_h);
    let (obs, obs_at) = worst(records.iter().filter_map(|r| r.data().map(|d| (r.param, d.obstruction.abs()))));
    s.note("max_abs_obstruction", obs);
    if let Some(q) = obs_at {
        s.note("max_abs_obstruction_at", fmt_param(q));
    }
    match &class.verdict {
        ClassVerdict::Classified => {
            s.note("cases", case_labels(class.firing()));
            for c in &class.cases {
                s.note(
                    &format!("case_{}", c.case.label()),
                    format!("{} on {} points, consequence max {}", c.case.description(), c.points, c.consequence_max),
                );
            }
            let first = class.inconsistencies.first().map(|i| match i {
                Inconsistency::Unexplained { param, obstruction } => {
                    format!("no case holds at {} (obstruction {obstruction})", witness(*param))
                }
                Inconsistency::Consequence { case, param, value } => {
                    format!("case {} consequence off by {value} at {}", case.label(), witness(*param))
                }
            });
            s.verdict("classification_consistent", class.consistent(), class.inconsistencies.len() as f64, None, first);
            let centre = Param::new(
                0.5 * (spec.domain().u.0 + spec.domain().u.1),
                0.5 * (spec.domain().v.0 + spec.domain().v.1),
            );
            match numeric_bracket_audit(&patch, m, delta, centre, tol.umbilic) {
                Ok(a) => {
                    s.note("bracket_audit_at", fmt_param(centre));
                    s.note("bracket_direct", a.direct);
                    s.note("bracket_closed_first", a.closed_first);
                    s.note("bracket_closed_second", a.closed_second);
                    s.at_most("bracket_audit_spread", a.max_spread(), tol.audit, Some(fmt_param(centre)));
                }
                Err(e) => s.note("bracket_audit", format!("skipped: {e}")),
            }
        }
        ClassVerdict::NotUmbilical { .. } => s.note("cases", "not classified (surface is not umbilical)"),
        ClassVerdict::Degenerate => {}
    }
    Some((s, Some(records.iter().map(PointRow::from).collect())))
}

fn trajectory(sc: &Scenario, o: &OdeSurface, k: usize) -> Result<ParallelReport, ParallelError> {
    let m = &sc.metric.walker;
    let [x0, dx0] = o.initial[k];
    let sol = integrate(m, o.eta_sign(), o.c, x0, dx0, (o.v[0], o.v[1]), o.step)?;
    let patch = build_perturbed_surface(&sol, (o.u[0], o.u[1]), o.perturbation_expr.clone())?;
    let grid = patch.domain().grid(o.resolution).map_err(|_| ParallelError::EmptyRange(o.u[0], o.u[1]))?;
    verify_parallel_family(m, &sol, &patch, m.epsilon(), &grid, sc.analysis.tolerances.parallel)
}

pub fn parallel_construct(sc: &Scenario, o: &OdeSurface) -> (Section, Option<Vec<PointRow>>) {
    let mut s = Section::new("parallel-construct");
    let tol = sc.analysis.tolerances.parallel;
    s.note("delta", format!("{} (equal to epsilon on this family)", sc.metric.epsilon));
    let reports: Vec<Result<ParallelReport, ParallelError>> =
        (0..o.initial.len()).into_par_iter().map(|k| trajectory(sc, o, k)).collect();
    let mut rows = None;
    for (k, r) in reports.into_iter().enumerate() {
        let [x0, dx0] = o.initial[k];
        let tag = format!("trajectory_{k}");
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                s.failure(&format!("{tag}.construction"), format!("x0 = {x0}, dx0 = {dx0}: {e}"));
                continue;
            }
        };
        let checks = [
            ("normal", r.normal),
            ("umbilic", r.rho),
            ("lambda_constant", r.lambda_constant),
            ("v2_equals_v3", r.v2_equals_v3),
        ];
        for (name, c) in checks {
            s.verdict(
                &format!("{tag}.{name}"),
                c.passed,
                c.worst,
                Some(tol),
                Some(c.witness.map_or("no regular point".into(), fmt_param)),
            );
        }
        s.at_most(&format!("{tag}.ode_residual"), r.ode_residual, tol, None);
        s.note(&format!("{tag}.initial"), format!("x0 = {x0}, dx0 = {dx0}"));
        s.note(&format!("{tag}.lambda"), r.summary.lambda_max);
        s.note(&format!("{tag}.max_abs_h"), r.max_abs_h);
        s.note(
            &format!("{tag}.totally_geodesic"),
            if r.totally_geodesic {
                "yes".to_string()
            } else {
                format!("no, flagged for investigation (max |h| = {})", r.max_abs_h)
            },
        );
        for row in &r.sign_table {
            let value = match row.orientation {
                Some(o) => format!("consistent, orientation {}", o.as_i64()),
                None => "inconsistent".into(),
            };
            s.note(&format!("{tag}.signs.eta{}_delta{}", row.eta.as_i64(), row.delta.as_i64()), value);
        }
        if rows.is_none() {
            rows = Some(r.records.iter().map(PointRow::from).collect());
        }
    }
    (s, rows)
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialRow {
    lemma: f64,
    identity: f64,
    first_route: f64,
    second_route: f64,
    v3_zero: Option<f64>,
    inconsistent: bool,
    obstructed: bool,
    obstruction: f64,
}

fn trial(m: &WalkerMetric, sc: &Scenario, oracle: &ChainRuleOracle, i: usize) -> Result<(Point, TrialRow), String> {
    let tol = &sc.analysis.tolerances;
    let g = &sc.metric.grid;
    let mut rng = trial_rng(sc.analysis.seed, i as u64);
    let p = point_in(&mut rng, g.lo(), g.hi());
    let delta = sign(&mut rng);
    let lambda: f64 = rng.gen_range(-2.0..2.0);
    let state = admissible_away_from_v1_zero(&mut rng, m.epsilon(), delta, 0.1);
    let zero_state = admissible_v3_zero(&mut rng, m.epsilon(), delta);
    let run = || -> Result<TrialRow, walker_core::umbilic::UmbilicError> {
        let jets = m.jets(p)?;
        let lemma = verify_curvature_gradient_lemma(m, p, &state)?.residual;
        let rec = bracket_consistency(&state, &jets, p, lambda, tol.identity);
        let identity = (rec.difference - ObstructionRecord::predicted_difference(&state, jets.fxxx)).abs();
        let first = bracket_first_via_connection(m, p, &state, lambda)?;
        let second = oracle.bracket_second(m, p, &state, lambda)?;
        let v3_zero = match zero_state {
            Some(z) => {
                let (lhs, rhs) = v3_zero_identity(m, p, &z)?;
                Some((lhs - rhs).abs())
            }
            None => None,
        };
        Ok(TrialRow {
            lemma,
            identity,
            first_route: (first - rec.first).abs() / (1.0 + rec.first.abs()),
            second_route: (second - rec.second).abs() / (1.0 + rec.second.abs()),
            v3_zero,
            inconsistent: rec.inconsistent,
            obstructed: rec.obstructed,
            obstruction: rec.obstruction,
        })
    };
    run().map(|r| (p, r)).map_err(|e| format!("trial {i} at {}: {e}", fmt_point(p)))
}

/// Hand-substituted values: `ε = δ = 1`, `v = (2, 1, 2)`, `f_x = f_xx = 4`,
/// `f_xxx = 6`, `λ = 1`.
fn worked_example(s: &mut Section, exact: f64) {
    let state = NormalState::unchecked(Sign::Plus, Sign::Plus, [2.0, 1.0, 2.0]);
    let jets = Jets { f: 0.0, fx: 4.0, fy: 0.0, fxx: 4.0, fxy: 0.0, fxxx: 6.0, fxxy: 0.0 };
    let Ok(m) = WalkerMetric::parse(Sign::Plus, "2*x^2") else { return };
    let grad = grad_lambda_frame(&m, Point::new(0.0, 0.0, 0.0), &state).unwrap_or([f64::NAN; 3]);
    let first = bracket_first(&state, &jets, 1.0);
    let second = bracket_second(&state, &jets, 1.0);
    let obs = obstruction(state.v, jets.fxxx);
    let want = [2.0, 2.0, -3.0, -4.0, -7.0, -3.0, 12.0];
    let got = [grad[0], grad[1], grad[2], first, second, second - first, obs];
    let dev = (0..7).map(|i| (got[i] - want[i]).abs()).fold(0.0, f64::max);
    s.at_most("worked_example", dev, exact, Some(format!("got {got:?}, want {want:?}")));
}

pub fn theorem_audit(sc: &Scenario) -> Section {
    let mut s = Section::new("theorem-audit");
    let m = &sc.metric.walker;
    let tol = &sc.analysis.tolerances;
    let oracle = ChainRuleOracle::new();
    s.note("trials", sc.analysis.trials);
    worked_example(&mut s, tol.exact);
    let results: Vec<Result<(Point, TrialRow), String>> =
        (0..sc.analysis.trials).into_par_iter().map(|i| trial(m, sc, &oracle, i)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                s.failure("evaluation", e);
                return s;
            }
        }
    }
    max_check(&mut s, "curvature_gradient_lemma", &rows, tol.lemma, |r| r.lemma);
    max_check(&mut s, "bracket_difference_identity", &rows, tol.identity, |r| r.identity);
    max_check(&mut s, "bracket_first_connection_route", &rows, tol.lemma, |r| r.first_route);
    max_check(&mut s, "bracket_second_chain_rule_route", &rows, tol.lemma, |r| r.second_route);
    let zero: Vec<(Point, f64)> = rows.iter().filter_map(|(p, r)| r.v3_zero.map(|v| (*p, v))).collect();
    s.note("v3_zero_trials", zero.len());
    if !zero.is_empty() {
        let (v, at) = worst(zero.iter().copied());
        s.at_most("v3_zero_identity", v, tol.v3_zero, at.map(fmt_point));
    }
    let unexplained: Vec<&(Point, TrialRow)> = rows.iter().filter(|(_, r)| r.inconsistent).collect();
    s.verdict(
        "unexplained_bracket_gaps",
        unexplained.is_empty(),
        unexplained.len() as f64,
        None,
        unexplained.first().map(|(p, _)| fmt_point(*p)),
    );
    s.note("obstructed_trials", rows.iter().filter(|(_, r)| r.obstructed).count());
    s.note("max_abs_obstruction", worst(rows.iter().map(|(p, r)| (*p, r.obstruction.abs()))).0);
    s
}
