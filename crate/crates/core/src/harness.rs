//! Trajectory drivers, equilibrium detection and the refinement studies.

use std::io::Write;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::equilibrium_residual;
use crate::curve::{from_shape, NodalField, PolygonalCurve, ShapeSpec};
use crate::error::{Error, Result};
use crate::metrics::{manifold_distance, wulff_shape, ConvergenceReport, ReportTime, StudyKind};
use crate::schemes::{Integrator, Scheme, SchemeParams};

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;
/// Node count of the analytic reference in Wulff studies.
pub const WULFF_REFERENCE_N: usize = 8192;

/// One sampled row of the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub area: f64,
    pub area_loss: f64,
    pub mesh_ratio: f64,
    pub theta_left: f64,
    pub theta_right: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub stride: usize,
    pub rows: Vec<DiagRow>,
    /// `W^m` after every step, `m = 0, 1, ...`, independent of the stride.
    pub energies: Vec<f64>,
    pub final_curve: PolygonalCurve,
    pub final_kappa: NodalField,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.energies.len() - 1
    }

    /// Largest one-step energy increase `W^{m+1} - W^m` from step `from` on.
    pub fn max_energy_increase(&self, from: usize) -> f64 {
        self.energies
            .windows(2)
            .skip(from)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_diagnostics<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["t", "W", "A", "dA_rel", "Psi", "theta_l", "theta_r"]).map_err(err)?;
        for r in &self.rows {
            w.write_record(
                [r.t, r.energy, r.area, r.area_loss, r.mesh_ratio, r.theta_left, r.theta_right]
                    .iter()
                    .map(|v| format!("{v:.16e}")),
            )
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

struct Recorder {
    sigma: f64,
    tau: f64,
    stride: usize,
    area0: f64,
    rows: Vec<DiagRow>,
    energies: Vec<f64>,
}

impl Recorder {
    fn new(curve0: &PolygonalCurve, params: &SchemeParams, stride: usize) -> Self {
        let mut rec = Recorder {
            sigma: params.sigma,
            tau: params.tau,
            stride,
            area0: curve0.enclosed_area(),
            rows: Vec::new(),
            energies: Vec::new(),
        };
        rec.observe(0, curve0, true);
        rec
    }

    fn observe(&mut self, step: usize, curve: &PolygonalCurve, force_row: bool) {
        let d = curve.diagnostics(self.sigma);
        self.energies.push(d.energy);
        if force_row || step % self.stride == 0 {
            self.push_row(step, curve);
        }
    }

    fn push_row(&mut self, step: usize, curve: &PolygonalCurve) {
        if self.rows.last().is_some_and(|r| r.step == step) {
            return;
        }
        let d = curve.diagnostics(self.sigma);
        self.rows.push(DiagRow {
            step,
            t: step as f64 * self.tau,
            energy: d.energy,
            area: d.area,
            area_loss: (d.area - self.area0) / self.area0,
            mesh_ratio: d.mesh_ratio,
            theta_left: d.theta_left,
            theta_right: d.theta_right,
        });
    }

    fn finish(self, stride: usize, integ: &Integrator) -> TrajectoryRecord {
        TrajectoryRecord {
            stride,
            rows: self.rows,
            energies: self.energies,
            final_curve: integ.curve().clone(),
            final_kappa: integ.kappa().clone(),
        }
    }
}

/// Number of steps to reach `t_end`, snapping to the nearest multiple of `tau`.
pub fn step_count(t_end: f64, tau: f64) -> Result<usize> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::param("T", format!("must be non-negative, got {t_end}")));
    }
    let ratio = t_end / tau;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        warn!("T = {t_end} is not a multiple of tau = {tau}; running {m} steps (T = {})", m * tau);
    }
    Ok(m as usize)
}

fn failed(integ: &Integrator, source: Error) -> Error {
    Error::TrajectoryFailed {
        completed: integ.steps(),
        last_good: Box::new(integ.curve().clone()),
        source: Box::new(source),
    }
}

/// Runs `T / tau` steps, sampling diagnostics every `stride` steps and at both
/// ends. `on_sample` sees the curve at every sampled step.
pub fn evolve_observed(
    curve0: &PolygonalCurve,
    scheme: Scheme,
    params: &SchemeParams,
    t_end: f64,
    stride: usize,
    mut on_sample: impl FnMut(usize, &PolygonalCurve) -> Result<()>,
) -> Result<TrajectoryRecord> {
    if stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let steps = step_count(t_end, params.tau)?;
    let mut integ = Integrator::new(scheme, curve0.clone(), *params)?;
    let mut rec = Recorder::new(curve0, params, stride);
    on_sample(0, curve0)?;
    for m in 1..=steps {
        if let Err(e) = integ.advance() {
            return Err(failed(&integ, e));
        }
        let last = m == steps;
        rec.observe(m, integ.curve(), last);
        if m % stride == 0 || last {
            on_sample(m, integ.curve())?;
        }
    }
    Ok(rec.finish(stride, &integ))
}

pub fn evolve(
    curve0: &PolygonalCurve,
    scheme: Scheme,
    params: &SchemeParams,
    t_end: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    evolve_observed(curve0, scheme, params, t_end, stride, |_, _| Ok(()))
}

/// Summary of a detected equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub steps: usize,
    pub time: f64,
    pub energy: f64,
    pub mesh_ratio: f64,
    pub theta_left: f64,
    pub theta_right: f64,
    /// Max-norm residual of the discrete stationary equations.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    pub epsilon: f64,
    pub max_steps: usize,
    pub stride: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            epsilon: DEFAULT_EPSILON,
            max_steps: DEFAULT_MAX_STEPS,
            stride: 1,
        }
    }
}

/// Steps until `(W^m - W^{m+1}) / tau <= epsilon`. The test is applied once the
/// scheme runs on its own history, i.e. after any multistep start-up.
pub fn evolve_to_equilibrium(
    curve0: &PolygonalCurve,
    scheme: Scheme,
    params: &SchemeParams,
    opts: &EquilibriumOptions,
) -> Result<(PolygonalCurve, TrajectoryRecord, Equilibrium)> {
    evolve_to_equilibrium_observed(curve0, scheme, params, opts, |_, _| Ok(()))
}

pub fn evolve_to_equilibrium_observed(
    curve0: &PolygonalCurve,
    scheme: Scheme,
    params: &SchemeParams,
    opts: &EquilibriumOptions,
    mut on_sample: impl FnMut(usize, &PolygonalCurve) -> Result<()>,
) -> Result<(PolygonalCurve, TrajectoryRecord, Equilibrium)> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("must be positive, got {}", opts.epsilon)));
    }
    if opts.stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let mut integ = Integrator::new(scheme, curve0.clone(), *params)?;
    let mut rec = Recorder::new(curve0, params, opts.stride);
    on_sample(0, curve0)?;
    let first_check = scheme.history_depth();
    let mut w_prev = rec.energies[0];
    let mut m = 0;
    loop {
        if m >= opts.max_steps {
            return Err(Error::NoEquilibrium { max_steps: opts.max_steps });
        }
        if let Err(e) = integ.advance() {
            return Err(failed(&integ, e));
        }
        m += 1;
        let w = integ.curve().discrete_energy(params.sigma);
        let done = m >= first_check && (w_prev - w) / params.tau <= opts.epsilon;
        rec.observe(m, integ.curve(), done);
        if m % opts.stride == 0 || done {
            on_sample(m, integ.curve())?;
        }
        if done {
            break;
        }
        w_prev = w;
    }
    let curve = integ.curve().clone();
    let d = curve.diagnostics(params.sigma);
    let eq = Equilibrium {
        steps: m,
        time: m as f64 * params.tau,
        energy: d.energy,
        mesh_ratio: d.mesh_ratio,
        theta_left: d.theta_left,
        theta_right: d.theta_right,
        residual: equilibrium_residual(&curve, &integ.stationary_kappa(), params.sigma),
    };
    debug!(
        "{scheme} equilibrium after {m} steps (t = {:.3}), Psi = {:.6}, residual {:.2e}",
        eq.time, eq.mesh_ratio, eq.residual
    );
    Ok((curve, rec.finish(opts.stride, &integ), eq))
}

/// Couples step size and mesh size along `tau = c h^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRule {
    pub c: f64,
    pub alpha: f64,
}

impl PathRule {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0) || !(alpha > 0.0) {
            return Err(Error::param("path", format!("need c > 0 and alpha > 0, got c = {c}, alpha = {alpha}")));
        }
        Ok(PathRule { c, alpha })
    }

    pub fn tau(&self, h: f64) -> f64 {
        self.c * h.powf(self.alpha)
    }

    pub fn h(&self, tau: f64) -> f64 {
        (tau / self.c).powf(1.0 / self.alpha)
    }
}

/// How refinement levels are listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Levels {
    /// Step sizes; each takes `N = round(1 / h(tau))` and keeps its `tau`.
    Taus(Vec<f64>),
    /// Segment counts; each takes `tau = c (1/N)^alpha`.
    Meshes(Vec<usize>),
    /// Segment counts at one fixed step size; the path rule is unused.
    FixedTau { tau: f64, meshes: Vec<usize> },
}

impl Levels {
    /// `count` step sizes halving from `tau0`.
    pub fn halving(tau0: f64, count: usize) -> Levels {
        Levels::Taus((0..count).map(|i| tau0 / f64::powi(2.0, i as i32)).collect())
    }

    pub fn len(&self) -> usize {
        match self {
            Levels::Taus(t) => t.len(),
            Levels::Meshes(n) | Levels::FixedTau { meshes: n, .. } => n.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A refinement level: step size and segment count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub tau: f64,
    pub n: usize,
}

impl Level {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySpec {
    pub scheme: Scheme,
    #[serde(skip)]
    pub shape: ShapeSpec,
    pub theta_young: f64,
    pub eta: f64,
    pub path: PathRule,
    pub levels: Levels,
    /// Output times for Cauchy studies; ignored by equilibrium studies.
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub max_steps: usize,
}

impl StudySpec {
    pub fn resolve_levels(&self) -> Result<Vec<Level>> {
        let levels: Vec<Level> = match &self.levels {
            Levels::Taus(taus) => taus
                .iter()
                .map(|&tau| Level {
                    tau,
                    n: (1.0 / self.path.h(tau)).round().max(1.0) as usize,
                })
                .collect(),
            Levels::Meshes(ns) => ns
                .iter()
                .map(|&n| Level {
                    tau: self.path.tau(1.0 / n as f64),
                    n,
                })
                .collect(),
            Levels::FixedTau { tau, meshes } => meshes.iter().map(|&n| Level { tau: *tau, n }).collect(),
        };
        if levels.len() < 2 {
            return Err(Error::param("levels", "need at least two refinement levels"));
        }
        for l in &levels {
            if l.n < 3 {
                return Err(Error::param("levels", format!("level tau = {} maps to N = {} < 3", l.tau, l.n)));
            }
        }
        Ok(levels)
    }

    fn params(&self, tau: f64) -> Result<SchemeParams> {
        SchemeParams::new(tau, self.eta, self.theta_young)
    }
}

fn level_rows(levels: &[Level], errors: &[f64]) -> Vec<(f64, f64, f64)> {
    levels.iter().zip(errors).map(|(l, &e)| (l.tau, l.h(), e)).collect()
}

/// Cauchy-type study: the curves of consecutive levels are compared at every
/// time in `spec.times`; one report per time.
pub fn cauchy_study(spec: &StudySpec) -> Result<Vec<ConvergenceReport>> {
    let levels = spec.resolve_levels()?;
    if spec.times.is_empty() {
        return Err(Error::param("T", "Cauchy studies need at least one time"));
    }
    let t_max = spec.times.iter().cloned().fold(0.0, f64::max);
    let runs: Vec<Vec<PolygonalCurve>> = levels
        .par_iter()
        .map(|l| -> Result<Vec<PolygonalCurve>> {
            let params = spec.params(l.tau)?;
            let curve0 = from_shape(&spec.shape, l.n)?;
            let marks: Vec<usize> = spec
                .times
                .iter()
                .map(|&t| step_count(t, l.tau))
                .collect::<Result<_>>()?;
            let mut out = vec![None; marks.len()];
            evolve_observed(&curve0, spec.scheme, &params, t_max, 1, |m, c| {
                for (slot, &mark) in out.iter_mut().zip(&marks) {
                    if mark == m {
                        *slot = Some(c.clone());
                    }
                }
                Ok(())
            })?;
            info!("{} level tau = {:.3e}, N = {} done", spec.scheme, l.tau, l.n);
            Ok(out.into_iter().map(|c| c.expect("every mark is visited")).collect())
        })
        .collect::<Result<_>>()?;
    spec.times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let errors: Vec<f64> = runs
                .windows(2)
                .map(|w| manifold_distance(&w[0][ti], &w[1][ti]))
                .collect::<Result<_>>()?;
            ConvergenceReport::from_levels(
                StudyKind::Cauchy,
                spec.scheme.name(),
                ReportTime::At(t),
                &level_rows(&levels, &errors),
                |r| r.0,
            )
        })
        .collect()
}

/// Target area of the analytic equilibrium: the exact area of the initial
/// shape when known, else the polygon area.
fn reference_area(shape: &ShapeSpec, n: usize) -> Result<f64> {
    match shape.exact_area() {
        Some(a) => Ok(a),
        None => Ok(from_shape(shape, n)?.enclosed_area()),
    }
}

fn equilibria(spec: &StudySpec, levels: &[Level]) -> Result<Vec<(PolygonalCurve, Equilibrium)>> {
    let opts = EquilibriumOptions {
        epsilon: spec.epsilon,
        max_steps: spec.max_steps,
        stride: usize::MAX,
    };
    levels
        .par_iter()
        .map(|l| {
            let params = spec.params(l.tau)?;
            let curve0 = from_shape(&spec.shape, l.n)?;
            let (curve, _, eq) = evolve_to_equilibrium(&curve0, spec.scheme, &params, &opts)?;
            info!(
                "{} level tau = {:.3e}, N = {}: equilibrium after {} steps",
                spec.scheme, l.tau, l.n, eq.steps
            );
            Ok((curve, eq))
        })
        .collect()
}

/// Distance of each level's equilibrium to the analytic Wulff shape.
pub fn wulff_study(spec: &StudySpec) -> Result<ConvergenceReport> {
    let levels = spec.resolve_levels()?;
    let area = reference_area(&spec.shape, levels[0].n)?;
    let target = wulff_shape(area, spec.theta_young, WULFF_REFERENCE_N)?;
    let errors: Vec<f64> = equilibria(spec, &levels)?
        .iter()
        .map(|(c, _)| manifold_distance(&target, c))
        .collect::<Result<_>>()?;
    ConvergenceReport::from_levels(
        StudyKind::Wulff,
        spec.scheme.name(),
        ReportTime::EQUILIBRIUM,
        &level_rows(&levels, &errors),
        |r| r.0,
    )
}

/// Equilibrium left-angle error `|cos theta_e - sigma|` per mesh; orders are in `h`.
pub fn angle_convergence_study(spec: &StudySpec) -> Result<ConvergenceReport> {
    let levels = spec.resolve_levels()?;
    let sigma = spec.theta_young.cos();
    let errors: Vec<f64> = equilibria(spec, &levels)?
        .iter()
        .map(|(_, eq)| (eq.theta_left.cos() - sigma).abs())
        .collect();
    ConvergenceReport::from_levels(
        StudyKind::Angle,
        spec.scheme.name(),
        ReportTime::EQUILIBRIUM,
        &level_rows(&levels, &errors),
        |r| r.1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(tau: f64) -> SchemeParams {
        SchemeParams::new(tau, 100.0, 5.0 * PI / 6.0).unwrap()
    }

    fn ellipse(n: usize) -> PolygonalCurve {
        from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 }, n).unwrap()
    }

    #[test]
    fn zero_time_keeps_input() {
        let c = ellipse(16);
        let rec = evolve(&c, Scheme::Bdf3, &params(0.01), 0.0, 1).unwrap();
        assert_eq!(rec.rows.len(), 1);
        assert_eq!(rec.rows[0].t, 0.0);
        assert_eq!(rec.final_curve, c);
    }

    #[test]
    fn stride_thins_rows_only() {
        let rec = evolve(&ellipse(32), Scheme::Pc, &params(0.01), 0.1, 3).unwrap();
        let steps: Vec<usize> = rec.rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 9, 10]);
        assert_eq!(rec.energies.len(), 11);
        for w in rec.rows.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn zjb_energy_and_area_loss_settle() {
        let rec = evolve(&ellipse(128), Scheme::Zjb, &params(0.01), 5.0, 1).unwrap();
        assert!(rec.max_energy_increase(0) <= 1e-12);
        let tail = &rec.rows[rec.rows.len() * 3 / 4..];
        let steady = rec.rows.last().unwrap().area_loss;
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.area_loss), hi.max(r.area_loss)));
        assert!(hi - lo <= 0.1 * steady.abs(), "variation {} vs {}", hi - lo, steady);
    }

    #[test]
    fn equilibrium_start_stops_quickly() {
        let p = params(0.01);
        let opts = EquilibriumOptions::default();
        let (eq_curve, _, _) = evolve_to_equilibrium(&ellipse(24), Scheme::Zjb, &p, &opts).unwrap();
        let (_, _, again) = evolve_to_equilibrium(&eq_curve, Scheme::Zjb, &p, &opts).unwrap();
        assert!(again.steps <= 5, "{} steps", again.steps);
    }

    #[test]
    fn max_step_guard() {
        let opts = EquilibriumOptions {
            max_steps: 3,
            ..Default::default()
        };
        let r = evolve_to_equilibrium(&ellipse(24), Scheme::Zjb, &params(0.01), &opts);
        assert!(matches!(r, Err(Error::NoEquilibrium { max_steps: 3 })));
    }

    #[test]
    fn failure_carries_last_good_curve() {
        // a huge step drives the right contact through the left one
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.05, 3.0), (0.1, 3.0), (0.15, 0.0)]).unwrap();
        let p = SchemeParams::new(1e3, 100.0, 0.2).unwrap();
        match evolve(&c, Scheme::Zjb, &p, 1e4, 1) {
            Err(Error::TrajectoryFailed { completed, last_good, .. }) => {
                assert_eq!(last_good.segment_count(), 3);
                assert!(completed < 10);
            }
            Ok(_) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn level_resolution() {
        let spec = StudySpec {
            scheme: Scheme::Bdf3,
            shape: ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 },
            theta_young: 5.0 * PI / 6.0,
            eta: 100.0,
            path: PathRule::new(0.025, 2.0 / 3.0).unwrap(),
            levels: Levels::Meshes(vec![27, 64, 125]),
            times: vec![],
            epsilon: DEFAULT_EPSILON,
            max_steps: DEFAULT_MAX_STEPS,
        };
        let l = spec.resolve_levels().unwrap();
        for (lev, inv) in l.iter().zip([360.0, 640.0, 1000.0]) {
            assert!((lev.tau * inv - 1.0).abs() < 1e-12);
        }
        let spec = StudySpec {
            path: PathRule::new(0.05, 1.0).unwrap(),
            levels: Levels::halving(1.0 / 400.0, 3),
            ..spec
        };
        let ns: Vec<usize> = spec.resolve_levels().unwrap().iter().map(|l| l.n).collect();
        assert_eq!(ns, vec![20, 40, 80]);
    }

    #[test]
    fn two_level_cauchy_has_no_order() {
        let spec = StudySpec {
            scheme: Scheme::Pc,
            shape: ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 },
            theta_young: 5.0 * PI / 6.0,
            eta: 100.0,
            path: PathRule::new(0.05, 1.0).unwrap(),
            levels: Levels::halving(1.0 / 100.0, 2),
            times: vec![0.05],
            epsilon: DEFAULT_EPSILON,
            max_steps: DEFAULT_MAX_STEPS,
        };
        let reps = cauchy_study(&spec).unwrap();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].rows.len(), 1);
        assert!(reps[0].orders().is_empty());
    }
}
