//! Run configuration and experiment dispatch for the command-line front end.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::curve::{from_shape, PolygonalCurve, ShapeSpec};
use crate::error::{Error, Result};
use crate::harness::{
    angle_convergence_study, cauchy_study, evolve_observed, evolve_to_equilibrium_observed, wulff_study,
    EquilibriumOptions, Levels, PathRule, StudySpec, DEFAULT_EPSILON, DEFAULT_MAX_STEPS,
};
use crate::metrics::ConvergenceReport;
use crate::schemes::{Scheme, SchemeParams};

pub const DEFAULT_ETA: f64 = 100.0;
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Equilibrium,
    Cauchy,
    Wulff,
    Angles,
}

/// Flat key set accepted in config files; every key has a matching flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// semi-ellipse, flower, wulff or file
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Area of a `wulff` initial shape
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    /// Node CSV for `shape = file`
    #[arg(long = "nodes-file")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes_file: Option<PathBuf>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Output times of a Cauchy study
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[arg(long = "theta-deg")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[arg(long = "theta-rad")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long = "max-steps")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[arg(long = "path-c")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_c: Option<f64>,
    #[arg(long = "path-alpha")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_alpha: Option<f64>,
    /// Step sizes of a Cauchy study
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    /// First step size of a halving sequence (with `level_count`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[arg(long = "level-count")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_count: Option<usize>,
    /// Segment counts of a Wulff or angle study
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meshes: Option<Vec<usize>>,
}

impl RawConfig {
    /// Layers `overrides` on top of `self`; set keys in `overrides` win.
    pub fn merged(self, overrides: &RawConfig) -> Result<RawConfig> {
        let to_map = |c: &RawConfig| match serde_json::to_value(c) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        let mut base = to_map(&self);
        base.extend(to_map(overrides));
        serde_json::from_value(Value::Object(base)).map_err(|e| Error::Config {
            key: "<flags>".into(),
            message: e.to_string(),
        })
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip)]
    pub shape: ShapeSpec,
    pub shape_name: String,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub tau: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    pub times: Vec<f64>,
    pub scheme: Scheme,
    /// Young angle in radians.
    pub theta: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub max_steps: usize,
    pub out: PathBuf,
    pub stride: usize,
    pub path: Option<PathRule>,
    pub levels: Option<Levels>,
}

impl RunConfig {
    pub fn sigma(&self) -> f64 {
        self.theta.cos()
    }

    fn params(&self) -> Result<SchemeParams> {
        let tau = self.tau.ok_or_else(|| missing("tau"))?;
        SchemeParams::new(tau, self.eta, self.theta)
    }

    fn initial_curve(&self) -> Result<PolygonalCurve> {
        let n = self.n.ok_or_else(|| missing("N"))?;
        from_shape(&self.shape, n)
    }

    pub fn study(&self) -> Result<StudySpec> {
        Ok(StudySpec {
            scheme: self.scheme,
            shape: self.shape.clone(),
            theta_young: self.theta,
            eta: self.eta,
            path: self.path.unwrap_or(PathRule { c: 1.0, alpha: 1.0 }),
            levels: self.levels.clone().ok_or_else(|| missing("levels"))?,
            times: self.times.clone(),
            epsilon: self.epsilon,
            max_steps: self.max_steps,
        })
    }
}

fn cfg_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn missing(key: &str) -> Error {
    cfg_err(key, "required for this command")
}

fn positive(key: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(cfg_err(key, format!("must be positive, got {x}"))),
        other => Ok(other),
    }
}

/// Parses a flat JSON object into a [`RawConfig`], rejecting unknown keys.
pub fn parse_raw(source: &str) -> Result<RawConfig> {
    serde_json::from_str(source).map_err(|e| {
        let msg = e.to_string();
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.contains("unknown field") || msg.contains("invalid"))
            .unwrap_or("<root>")
            .to_string();
        Error::Config { key, message: msg }
    })
}

/// Parses and validates a config source with defaults applied.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    validate(parse_raw(source)?)
}

pub fn validate(raw: RawConfig) -> Result<RunConfig> {
    let command = raw.command.ok_or_else(|| missing("command"))?;
    let theta = match (raw.theta_deg, raw.theta_rad) {
        (Some(_), Some(_)) => return Err(cfg_err("theta_deg", "give theta_deg or theta_rad, not both")),
        (Some(d), None) => {
            if !(d > 0.0 && d < 180.0) {
                return Err(cfg_err("theta_deg", "theta out of (0,180)"));
            }
            d.to_radians()
        }
        (None, Some(r)) => {
            if !(r > 0.0 && r < PI) {
                return Err(cfg_err("theta_rad", "theta out of (0,pi)"));
            }
            r
        }
        (None, None) => return Err(missing("theta_deg")),
    };
    let eta = positive("eta", raw.eta)?.unwrap_or(DEFAULT_ETA);
    let epsilon = positive("epsilon", raw.epsilon)?.unwrap_or(DEFAULT_EPSILON);
    let tau = positive("tau", raw.tau)?;
    let t_end = match raw.t_end {
        Some(t) if !(t >= 0.0) || !t.is_finite() => return Err(cfg_err("T", format!("must be non-negative, got {t}"))),
        t => t,
    };
    let stride = raw.stride.unwrap_or(1);
    if stride == 0 {
        return Err(cfg_err("stride", "must be at least 1"));
    }
    let max_steps = raw.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    if max_steps == 0 {
        return Err(cfg_err("max_steps", "must be at least 1"));
    }
    if let Some(n) = raw.n {
        if n < 3 {
            return Err(cfg_err("N", format!("need at least 3 segments, got {n}")));
        }
    }
    let scheme = raw.scheme.unwrap_or(Scheme::Pc);

    let shape_name = raw.shape.clone().unwrap_or_else(|| "semi-ellipse".into());
    let shape = match shape_name.as_str() {
        "semi-ellipse" => {
            let a = positive("a", raw.a)?.unwrap_or(2.0);
            let b = positive("b", raw.b)?.unwrap_or(1.0);
            ShapeSpec::SemiEllipse { a, b }
        }
        "flower" => ShapeSpec::Flower,
        "wulff" => ShapeSpec::Wulff {
            area: positive("area", raw.area)?.ok_or_else(|| missing("area"))?,
            theta_young: theta,
        },
        "file" => {
            let path = raw.nodes_file.clone().ok_or_else(|| missing("nodes_file"))?;
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let curve = PolygonalCurve::read_csv(file).map_err(|e| cfg_err("nodes_file", e.to_string()))?;
            if let Some(n) = raw.n {
                if n != curve.segment_count() {
                    return Err(cfg_err("N", format!("node file has {} segments", curve.segment_count())));
                }
            }
            ShapeSpec::Nodes(curve.into_nodes())
        }
        other => return Err(cfg_err("shape", format!("unknown shape `{other}`"))),
    };
    let n = match &shape {
        ShapeSpec::Nodes(nodes) => Some(nodes.len() - 1),
        _ => raw.n,
    };

    let path = match (raw.path_c, raw.path_alpha) {
        (Some(c), Some(alpha)) => Some(PathRule::new(c, alpha).map_err(|e| cfg_err("path_c", e.to_string()))?),
        (None, None) => None,
        (Some(_), None) => return Err(missing("path_alpha")),
        (None, Some(_)) => return Err(missing("path_c")),
    };
    let levels = match (&raw.taus, raw.tau0, raw.level_count, &raw.meshes) {
        (Some(t), None, None, None) => Some(Levels::Taus(t.clone())),
        (None, Some(t0), Some(k), None) => {
            positive("tau0", Some(t0))?;
            Some(Levels::halving(t0, k))
        }
        (None, None, None, Some(m)) => Some(match command {
            Command::Angles => Levels::FixedTau {
                tau: tau.ok_or_else(|| missing("tau"))?,
                meshes: m.clone(),
            },
            _ => Levels::Meshes(m.clone()),
        }),
        (None, None, None, None) => None,
        _ => return Err(cfg_err("levels", "give exactly one of taus, tau0 + level_count, or meshes")),
    };
    if let Some(Levels::Taus(t)) = &levels {
        if t.iter().any(|v| !(*v > 0.0)) {
            return Err(cfg_err("taus", "step sizes must be positive"));
        }
    }
    if let Some(l) = &levels {
        if l.len() < 2 {
            return Err(cfg_err("levels", "need at least two refinement levels"));
        }
    }
    let times = match (&raw.times, t_end) {
        (Some(ts), _) => ts.clone(),
        (None, Some(t)) => vec![t],
        (None, None) => Vec::new(),
    };
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(cfg_err("times", "times must be non-negative"));
    }

    match command {
        Command::Simulate => {
            n.ok_or_else(|| missing("N"))?;
            tau.ok_or_else(|| missing("tau"))?;
            t_end.ok_or_else(|| missing("T"))?;
        }
        Command::Equilibrium => {
            n.ok_or_else(|| missing("N"))?;
            tau.ok_or_else(|| missing("tau"))?;
        }
        Command::Cauchy => {
            path.ok_or_else(|| missing("path_c"))?;
            match levels {
                Some(Levels::Taus(_)) => {}
                _ => return Err(cfg_err("taus", "Cauchy studies take taus or tau0 + level_count")),
            }
            if times.is_empty() {
                return Err(missing("times"));
            }
        }
        Command::Wulff => {
            path.ok_or_else(|| missing("path_c"))?;
            levels.as_ref().ok_or_else(|| missing("meshes"))?;
        }
        Command::Angles => match levels {
            Some(Levels::FixedTau { .. }) => {}
            _ => return Err(cfg_err("meshes", "angle studies take meshes at a fixed tau")),
        },
    }

    Ok(RunConfig {
        command,
        shape,
        shape_name,
        n,
        tau,
        t_end,
        times,
        scheme,
        theta,
        eta,
        epsilon,
        max_steps,
        out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
        stride,
        path,
        levels,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_snapshot(dir: &Path, step: usize, curve: &PolygonalCurve) -> Result<()> {
    let path = dir.join(format!("curve_{step}.csv"));
    curve.write_csv(create(&path)?).map_err(|e| Error::io(&path, e))
}

fn write_report(dir: &Path, name: &str, report: &ConvergenceReport) -> Result<()> {
    report.write_csv(create(&dir.join(format!("{name}.csv")))?)
}

fn time_label(t: f64) -> String {
    format!("{t}")
}

/// Runs the configured command and returns the one-line summary.
///
/// On failure a `FAILED` marker holding the error text is left in the output
/// directory, next to whatever was written before the failure.
pub fn run(config: &RunConfig) -> Result<String> {
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let marker = config.out.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    match dispatch(config) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            // best effort: the original error matters more than a failed marker write
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

fn dispatch(config: &RunConfig) -> Result<String> {
    let out = &config.out;
    let resolved = serde_json::to_string_pretty(config).expect("config serializes");
    write_text(&out.join("config.json"), &resolved)?;
    match config.command {
        Command::Simulate => {
            let params = config.params()?;
            let curve0 = config.initial_curve()?;
            let t_end = config.t_end.ok_or_else(|| missing("T"))?;
            let rec = evolve_observed(&curve0, config.scheme, &params, t_end, config.stride, |m, c| {
                write_snapshot(out, m, c)
            })?;
            rec.write_diagnostics(create(&out.join("diagnostics.csv"))?)?;
            let last = rec.rows.last().expect("record has a row at t = 0");
            let first = rec.rows[0];
            Ok(format!(
                "t={} W/W0={:.10} dA/A0={:.3e} Psi={:.6} theta_l/pi={:.6} theta_r/pi={:.6}",
                last.t,
                last.energy / first.energy,
                last.area_loss,
                last.mesh_ratio,
                last.theta_left / PI,
                last.theta_right / PI
            ))
        }
        Command::Equilibrium => {
            let params = config.params()?;
            let curve0 = config.initial_curve()?;
            let opts = EquilibriumOptions {
                epsilon: config.epsilon,
                max_steps: config.max_steps,
                stride: config.stride,
            };
            let (_, rec, eq) =
                evolve_to_equilibrium_observed(&curve0, config.scheme, &params, &opts, |m, c| write_snapshot(out, m, c))?;
            rec.write_diagnostics(create(&out.join("diagnostics.csv"))?)?;
            write_text(
                &out.join("equilibrium.json"),
                &serde_json::to_string_pretty(&eq).expect("equilibrium serializes"),
            )?;
            Ok(format!(
                "equilibrium after {} steps (t={}) W={:.10} Psi={:.6} theta_l/pi={:.6} |cos theta_l - sigma|={:.3e}",
                eq.steps,
                eq.time,
                eq.energy,
                eq.mesh_ratio,
                eq.theta_left / PI,
                (eq.theta_left.cos() - config.sigma()).abs()
            ))
        }
        Command::Cauchy => {
            let reports = cauchy_study(&config.study()?)?;
            for r in &reports {
                if let crate::metrics::ReportTime::At(t) = r.time {
                    write_report(out, &format!("report_T{}", time_label(t)), r)?;
                }
            }
            write_text(
                &out.join("report.json"),
                &serde_json::to_string_pretty(&reports).expect("reports serialize"),
            )?;
            Ok(summarize(&reports))
        }
        Command::Wulff | Command::Angles => {
            let study = config.study()?;
            let report = if config.command == Command::Wulff {
                wulff_study(&study)?
            } else {
                angle_convergence_study(&study)?
            };
            write_report(out, "report", &report)?;
            write_text(&out.join("report.json"), &report.to_json())?;
            Ok(summarize(std::slice::from_ref(&report)))
        }
    }
}

fn summarize(reports: &[ConvergenceReport]) -> String {
    reports
        .iter()
        .map(|r| {
            let orders: Vec<String> = r.orders().iter().map(|o| format!("{o:.4}")).collect();
            format!("{} at {}: orders [{}]", r.scheme, r.time, orders.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// What a dry run reports instead of running.
pub fn plan(config: &RunConfig) -> String {
    let target = match config.command {
        Command::Simulate | Command::Equilibrium => format!(
            "N={} tau={}",
            config.n.map_or("-".into(), |n| n.to_string()),
            config.tau.map_or("-".into(), |t| t.to_string())
        ),
        _ => match config.study().and_then(|s| s.resolve_levels()) {
            Ok(levels) => levels
                .iter()
                .map(|l| format!("(tau={:.4e}, N={})", l.tau, l.n))
                .collect::<Vec<_>>()
                .join(" "),
            Err(e) => format!("invalid levels: {e}"),
        },
    };
    format!(
        "{:?} {} {} theta={:.6} rad eta={} -> {}",
        config.command,
        config.scheme,
        target,
        config.theta,
        config.eta,
        config.out.display()
    )
    .to_lowercase()
}
