//! Scenario files: TOML with `[metric]`, optional `[surface]`, `[analysis]`
//! and `[output]` sections. Validation errors cite file, line and key.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;
use walker_core::grid::{BoxGrid, ParamRect};
use walker_core::surface::SurfacePatch;
use walker_core::{Point, ScalarExpr, Sign, WalkerMetric};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: String,
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}: {}", self.file, l, self.key, self.message),
            None => write!(f, "{}: {}: {}", self.file, self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    metric: RawMetric,
    surface: Option<RawSurface>,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    epsilon: Spanned<i64>,
    f: Spanned<String>,
    t: Option<Spanned<[f64; 2]>>,
    x: Option<Spanned<[f64; 2]>>,
    y: Option<Spanned<[f64; 2]>>,
    resolution: Option<Spanned<[usize; 3]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    kind: Spanned<String>,
    t: Option<Spanned<String>>,
    x: Option<Spanned<String>>,
    y: Option<Spanned<String>>,
    u: Option<Spanned<[f64; 2]>>,
    v: Option<Spanned<[f64; 2]>>,
    resolution: Option<Spanned<[usize; 2]>>,
    eta: Option<Spanned<i64>>,
    c: Option<f64>,
    initial: Option<Spanned<Vec<[f64; 2]>>>,
    x0: Option<Spanned<f64>>,
    dx0: Option<Spanned<f64>>,
    step: Option<Spanned<f64>>,
    perturbation: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    delta: Option<Spanned<i64>>,
    seed: Option<u64>,
    trials: Option<Spanned<usize>>,
    #[serde(default)]
    tolerances: std::collections::BTreeMap<String, Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: Option<Spanned<String>>,
    path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Structured,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "text" => Some(Format::Text),
            "structured" | "json" => Some(Format::Structured),
            _ => None,
        }
    }
}

/// Per-suite tolerances; every key can be overridden from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub exact: f64,
    pub connection: f64,
    pub curvature: f64,
    pub cotton: f64,
    pub lcf: f64,
    pub lemma: f64,
    pub identity: f64,
    pub v3_zero: f64,
    pub umbilic: f64,
    pub shape: f64,
    pub audit: f64,
    pub parallel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-12,
            connection: 1e-9,
            curvature: 1e-6,
            cotton: 1e-5,
            lcf: 1e-9,
            lemma: 1e-9,
            identity: 1e-10,
            v3_zero: 1e-10,
            umbilic: 1e-6,
            shape: 1e-6,
            audit: 1e-4,
            parallel: 1e-5,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 12] = [
        "exact",
        "connection",
        "curvature",
        "cotton",
        "lcf",
        "lemma",
        "identity",
        "v3_zero",
        "umbilic",
        "shape",
        "audit",
        "parallel",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "exact" => &mut self.exact,
            "connection" => &mut self.connection,
            "curvature" => &mut self.curvature,
            "cotton" => &mut self.cotton,
            "lcf" => &mut self.lcf,
            "lemma" => &mut self.lemma,
            "identity" => &mut self.identity,
            "v3_zero" => &mut self.v3_zero,
            "umbilic" => &mut self.umbilic,
            "shape" => &mut self.shape,
            "audit" => &mut self.audit,
            "parallel" => &mut self.parallel,
            _ => return None,
        })
    }

    /// Sets one tolerance; the value must be positive and finite.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(format!("tolerance must be positive, got {value}"));
        }
        let slot = self.slot(key).ok_or_else(|| format!("unknown tolerance (known: {})", Self::KEYS.join(", ")))?;
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSpec {
    pub epsilon: i64,
    pub f: String,
    pub t: [f64; 2],
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub resolution: [usize; 3],
    #[serde(skip)]
    pub walker: WalkerMetric,
    #[serde(skip)]
    pub grid: BoxGrid,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplicitSurface {
    pub t: String,
    pub x: String,
    pub y: String,
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub resolution: [usize; 2],
    #[serde(skip)]
    pub patch: SurfacePatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeSurface {
    pub eta: i64,
    pub c: f64,
    pub initial: Vec<[f64; 2]>,
    pub v: [f64; 2],
    pub u: [f64; 2],
    pub step: f64,
    pub resolution: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<String>,
    #[serde(skip)]
    pub perturbation_expr: Option<ScalarExpr>,
}

impl OdeSurface {
    pub fn eta_sign(&self) -> Sign {
        Sign::from_i64(self.eta).unwrap_or(Sign::Plus)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceSpec {
    Explicit(ExplicitSurface),
    Ode(OdeSurface),
}

impl SurfaceSpec {
    pub fn domain(&self) -> ParamRect {
        let (u, v) = match self {
            SurfaceSpec::Explicit(e) => (e.u, e.v),
            SurfaceSpec::Ode(o) => (o.u, o.v),
        };
        ParamRect { u: (u[0], u[1]), v: (v[0], v[1]) }
    }

    pub fn resolution(&self) -> [usize; 2] {
        match self {
            SurfaceSpec::Explicit(e) => e.resolution,
            SurfaceSpec::Ode(o) => o.resolution,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub delta: i64,
    pub seed: u64,
    pub trials: usize,
    pub tolerances: Tolerances,
}

impl Analysis {
    pub fn delta_sign(&self) -> Sign {
        Sign::from_i64(self.delta).unwrap_or(Sign::Plus)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputSpec {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub metric: MetricSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    pub analysis: Analysis,
    #[serde(skip)]
    pub output: OutputSpec,
}

struct Ctx<'a> {
    file: &'a str,
    src: &'a str,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(
        &self,
        span: Option<std::ops::Range<usize>>,
        key: &str,
        message: impl Into<String>,
    ) -> Result<T, ConfigError> {
        Err(ConfigError {
            file: self.file.to_string(),
            line: span.map(|s| self.line(s.start)),
            key: key.to_string(),
            message: message.into(),
        })
    }

    fn sign(&self, v: &Spanned<i64>, key: &str) -> Result<Sign, ConfigError> {
        Sign::from_i64(*v.get_ref()).map_or_else(|| self.err(Some(v.span()), key, "must be 1 or -1"), Ok)
    }

    fn range(
        &self,
        v: &Option<Spanned<[f64; 2]>>,
        key: &str,
        default: Option<[f64; 2]>,
    ) -> Result<[f64; 2], ConfigError> {
        match v {
            None => default.map_or_else(|| self.err(None, key, "missing"), Ok),
            Some(r) => {
                let [lo, hi] = *r.get_ref();
                if lo < hi && lo.is_finite() && hi.is_finite() {
                    Ok([lo, hi])
                } else {
                    self.err(Some(r.span()), key, format!("range [{lo}, {hi}] is empty"))
                }
            }
        }
    }

    fn expr(&self, v: &Spanned<String>, key: &str, vars: &[&str]) -> Result<ScalarExpr, ConfigError> {
        ScalarExpr::parse(v.get_ref(), vars)
            .or_else(|e| self.err(Some(v.span()), key, format!("{e} in {:?}", v.get_ref())))
    }
}

fn resolution<const N: usize>(
    ctx: &Ctx<'_>,
    v: &Option<Spanned<[usize; N]>>,
    key: &str,
    default: [usize; N],
) -> Result<[usize; N], ConfigError> {
    match v {
        None => Ok(default),
        Some(r) if r.get_ref().iter().all(|&n| n >= 2) => Ok(*r.get_ref()),
        Some(r) => ctx.err(Some(r.span()), key, "every axis needs at least 2 samples"),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let file = path.display().to_string();
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: file.clone(),
            line: None,
            key: "-".into(),
            message: e.to_string(),
        })?;
        Scenario::parse(&file, &src)
    }

    pub fn parse(file: &str, src: &str) -> Result<Scenario, ConfigError> {
        let ctx = Ctx { file, src };
        let raw: RawScenario = toml::from_str(src).or_else(|e| ctx.err(e.span(), "toml", e.message().to_string()))?;

        let m = &raw.metric;
        let epsilon = ctx.sign(&m.epsilon, "metric.epsilon")?;
        let f = ctx.expr(&m.f, "metric.f", &["x", "y"])?;
        let walker = WalkerMetric::new(epsilon, f).or_else(|e| ctx.err(Some(m.f.span()), "metric.f", e.to_string()))?;
        let (t, x, y) = (
            ctx.range(&m.t, "metric.t", Some([-1.0, 1.0]))?,
            ctx.range(&m.x, "metric.x", Some([-1.0, 1.0]))?,
            ctx.range(&m.y, "metric.y", Some([-1.0, 1.0]))?,
        );
        let res = resolution(&ctx, &m.resolution, "metric.resolution", BoxGrid::DEFAULT_COUNTS)?;
        let grid = BoxGrid::new(Point::new(t[0], x[0], y[0]), Point::new(t[1], x[1], y[1]), res)
            .or_else(|e| ctx.err(None, "metric", e.to_string()))?;
        let metric =
            MetricSpec { epsilon: epsilon.as_i64(), f: m.f.get_ref().clone(), t, x, y, resolution: res, walker, grid };

        let surface = match &raw.surface {
            None => None,
            Some(s) => Some(parse_surface(&ctx, s)?),
        };

        let a = &raw.analysis;
        let delta = match &a.delta {
            None => Sign::Plus,
            Some(d) => ctx.sign(d, "analysis.delta")?,
        };
        let trials = match &a.trials {
            None => 1000,
            Some(t) if *t.get_ref() >= 1 => *t.get_ref(),
            Some(t) => return ctx.err(Some(t.span()), "analysis.trials", "must be at least 1"),
        };
        let mut tolerances = Tolerances::default();
        for (key, value) in &a.tolerances {
            let full = format!("analysis.tolerances.{key}");
            tolerances.set(key, *value.get_ref()).or_else(|e| ctx.err(Some(value.span()), &full, e))?;
        }
        let analysis = Analysis { delta: delta.as_i64(), seed: a.seed.unwrap_or(42), trials, tolerances };

        let format = match &raw.output.format {
            None => Format::Text,
            Some(fm) => Format::parse(fm.get_ref())
                .map_or_else(|| ctx.err(Some(fm.span()), "output.format", "expected \"text\" or \"structured\""), Ok)?,
        };
        let output = OutputSpec { format, path: raw.output.path.as_ref().map(PathBuf::from) };
        Ok(Scenario { metric, surface, analysis, output })
    }
}

fn parse_surface(ctx: &Ctx<'_>, s: &RawSurface) -> Result<SurfaceSpec, ConfigError> {
    let present = |name: &str, set: bool| -> Result<(), ConfigError> {
        if set {
            ctx.err(
                Some(s.kind.span()),
                &format!("surface.{name}"),
                format!("not allowed for kind {:?}", s.kind.get_ref()),
            )
        } else {
            Ok(())
        }
    };
    match s.kind.get_ref().as_str() {
        "explicit" => {
            for (name, set) in [
                ("eta", s.eta.is_some()),
                ("c", s.c.is_some()),
                ("initial", s.initial.is_some()),
                ("x0", s.x0.is_some()),
                ("dx0", s.dx0.is_some()),
                ("step", s.step.is_some()),
                ("perturbation", s.perturbation.is_some()),
            ] {
                present(name, set)?;
            }
            let get = |v: &Option<Spanned<String>>, key: &str| -> Result<Spanned<String>, ConfigError> {
                v.clone().map_or_else(|| ctx.err(Some(s.kind.span()), key, "missing"), Ok)
            };
            let (t, x, y) = (get(&s.t, "surface.t")?, get(&s.x, "surface.x")?, get(&s.y, "surface.y")?);
            let comps = [
                ctx.expr(&t, "surface.t", &["u", "v"])?,
                ctx.expr(&x, "surface.x", &["u", "v"])?,
                ctx.expr(&y, "surface.y", &["u", "v"])?,
            ];
            let u = ctx.range(&s.u, "surface.u", None)?;
            let v = ctx.range(&s.v, "surface.v", None)?;
            let embedding = walker_core::surface::ExprEmbedding::new(comps)
                .or_else(|e| ctx.err(Some(s.kind.span()), "surface", e.to_string()))?;
            let domain = ParamRect { u: (u[0], u[1]), v: (v[0], v[1]) };
            Ok(SurfaceSpec::Explicit(ExplicitSurface {
                t: t.into_inner(),
                x: x.into_inner(),
                y: y.into_inner(),
                u,
                v,
                resolution: resolution(ctx, &s.resolution, "surface.resolution", [11, 11])?,
                patch: SurfacePatch::new(embedding, domain),
            }))
        }
        "ode" => {
            for (name, set) in [("t", s.t.is_some()), ("x", s.x.is_some()), ("y", s.y.is_some())] {
                present(name, set)?;
            }
            let eta = match &s.eta {
                None => Sign::Plus,
                Some(e) => ctx.sign(e, "surface.eta")?,
            };
            let initial = match (&s.initial, &s.x0, &s.dx0) {
                (None, None, None) => vec![[1.0, 1.0]],
                (None, x0, dx0) => {
                    vec![[x0.as_ref().map_or(1.0, |v| *v.get_ref()), dx0.as_ref().map_or(1.0, |v| *v.get_ref())]]
                }
                (Some(i), None, None) if !i.get_ref().is_empty() => i.get_ref().clone(),
                (Some(i), None, None) => {
                    return ctx.err(Some(i.span()), "surface.initial", "needs at least one [x0, dx0] pair")
                }
                (Some(i), _, _) => return ctx.err(Some(i.span()), "surface.initial", "give either initial or x0/dx0"),
            };
            let step = match &s.step {
                None => 1e-3,
                Some(st) if *st.get_ref() > 0.0 && st.get_ref().is_finite() => *st.get_ref(),
                Some(st) => return ctx.err(Some(st.span()), "surface.step", "must be positive"),
            };
            let (perturbation, perturbation_expr) = match &s.perturbation {
                None => (None, None),
                Some(p) => (Some(p.get_ref().clone()), Some(ctx.expr(p, "surface.perturbation", &["v"])?)),
            };
            Ok(SurfaceSpec::Ode(OdeSurface {
                eta: eta.as_i64(),
                c: s.c.unwrap_or(0.0),
                initial,
                v: ctx.range(&s.v, "surface.v", Some([0.0, 1.0]))?,
                u: ctx.range(&s.u, "surface.u", Some([-1.0, 1.0]))?,
                step,
                resolution: resolution(ctx, &s.resolution, "surface.resolution", [3, 11])?,
                perturbation,
                perturbation_expr,
            }))
        }
        other => {
            ctx.err(Some(s.kind.span()), "surface.kind", format!("expected \"explicit\" or \"ode\", got {other:?}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[metric]\nepsilon = 1\nf = \"x^3\"\n";

    #[test]
    fn minimal_scenario_defaults() {
        let s = Scenario::parse("a.toml", MINIMAL).unwrap();
        assert_eq!(s.metric.resolution, [3, 11, 11]);
        assert!(s.surface.is_none());
        assert_eq!((s.analysis.seed, s.analysis.trials, s.analysis.delta), (42, 1000, 1));
        assert_eq!(s.output.format, Format::Text);
    }

    #[test]
    fn bad_expression_cites_line_and_key() {
        let e = Scenario::parse("a.toml", "[metric]\nepsilon = 1\nf = \"x^ $\"\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (Some(3), "metric.f"));
        assert!(e.to_string().starts_with("a.toml:3: metric.f:"), "{e}");
        assert!(e.message.contains("at byte 3"), "{e}");
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let e = Scenario::parse("a.toml", "[metric]\nepsilon = 1\nf = \"x\"\ncolour = 3\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = Scenario::parse("a.toml", "[metric]\nepsilon = 2\nf = \"x\"\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (Some(2), "metric.epsilon"));
        let src = format!("{MINIMAL}[analysis.tolerances]\numbilic = -1.0\n");
        let e = Scenario::parse("a.toml", &src).unwrap_err();
        assert_eq!(e.key, "analysis.tolerances.umbilic");
        let src = format!("{MINIMAL}resolution = [3, 1, 4]\n");
        assert_eq!(Scenario::parse("a.toml", &src).unwrap_err().key, "metric.resolution");
    }

    #[test]
    fn surface_kinds_are_exclusive() {
        let src = format!("{MINIMAL}[surface]\nkind = \"explicit\"\nt = \"u\"\nx = \"v\"\ny = \"0\"\nu = [0, 1]\nv = [0, 1]\neta = 1\n");
        assert_eq!(Scenario::parse("a.toml", &src).unwrap_err().key, "surface.eta");
        let src = format!("{MINIMAL}[surface]\nkind = \"ode\"\nt = \"u\"\n");
        assert_eq!(Scenario::parse("a.toml", &src).unwrap_err().key, "surface.t");
        let src =
            format!("{MINIMAL}[surface]\nkind = \"ode\"\nperturbation = \"0.01*v^2\"\ninitial = [[1, 1], [0.5, 0]]\n");
        let s = Scenario::parse("a.toml", &src).unwrap();
        let Some(SurfaceSpec::Ode(o)) = s.surface else { panic!() };
        assert_eq!(o.initial.len(), 2);
        assert!(o.perturbation_expr.is_some());
        let src = format!("{MINIMAL}[surface]\nkind = \"ode\"\nx0 = 0.5\ndx0 = -1.0\n");
        let Some(SurfaceSpec::Ode(o)) = Scenario::parse("a.toml", &src).unwrap().surface else { panic!() };
        assert_eq!(o.initial, vec![[0.5, -1.0]]);
        let src = format!("{MINIMAL}[surface]\nkind = \"ode\"\nx0 = 0.5\ninitial = [[1, 1]]\n");
        assert_eq!(Scenario::parse("a.toml", &src).unwrap_err().key, "surface.initial");
    }

    #[test]
    fn tolerance_override_keys() {
        let mut t = Tolerances::default();
        t.set("umbilic", 1e-3).unwrap();
        assert_eq!(t.umbilic, 1e-3);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("lemma", 0.0).is_err());
    }
}
