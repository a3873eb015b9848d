//! Time steppers: backward Euler (ZJB), predictor-corrector (PC-ZJB) and
//! BDFk-ZJB for k = 2, 3, 4, plus the least-squares initial curvature and the
//! multistep start-up.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, solve, KappaMode, ReferenceGeometry, StepDescriptor};
use crate::curve::{NodalField, Point, PolygonalCurve};
use crate::error::{Error, Phase, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeParams {
    pub tau: f64,
    pub eta: f64,
    /// `cos(theta_young)`, never set independently.
    pub sigma: f64,
    pub theta_young: f64,
}

impl SchemeParams {
    pub fn new(tau: f64, eta: f64, theta_young: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::param("eta", format!("must be positive, got {eta}")));
        }
        if !(theta_young > 0.0 && theta_young < std::f64::consts::PI) {
            return Err(Error::param(
                "theta",
                format!("Young angle must lie in (0, pi), got {theta_young}"),
            ));
        }
        Ok(SchemeParams {
            tau,
            eta,
            sigma: theta_young.cos(),
            theta_young,
        })
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        SchemeParams { tau, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Zjb,
    Pc,
    Bdf2,
    Bdf3,
    Bdf4,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Zjb, Scheme::Pc, Scheme::Bdf2, Scheme::Bdf3, Scheme::Bdf4];

    /// Formal order of accuracy in time.
    pub fn order(self) -> usize {
        match self {
            Scheme::Zjb => 1,
            Scheme::Pc | Scheme::Bdf2 => 2,
            Scheme::Bdf3 => 3,
            Scheme::Bdf4 => 4,
        }
    }

    /// Number of stored curves the scheme needs (`k` for BDFk).
    pub fn history_depth(self) -> usize {
        match self {
            Scheme::Zjb | Scheme::Pc => 1,
            s => s.order(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Zjb => "zjb",
            Scheme::Pc => "pc",
            Scheme::Bdf2 => "bdf2",
            Scheme::Bdf3 => "bdf3",
            Scheme::Bdf4 => "bdf4",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::param("scheme", format!("unknown scheme `{s}`")))
    }
}

/// Exact BDFk coefficients as `(numerator, denominator)` pairs: the leading
/// coefficient `a` and the extrapolation weights on `X^m, X^{m-1}, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BdfCoefficients {
    pub a: (i64, i64),
    pub weights: &'static [(i64, i64)],
}

impl BdfCoefficients {
    pub const fn of(k: usize) -> Option<BdfCoefficients> {
        match k {
            1 => Some(BdfCoefficients { a: (1, 1), weights: &[(1, 1)] }),
            2 => Some(BdfCoefficients { a: (3, 2), weights: &[(2, 1), (-1, 2)] }),
            3 => Some(BdfCoefficients { a: (11, 6), weights: &[(3, 1), (-3, 2), (1, 3)] }),
            4 => Some(BdfCoefficients {
                a: (25, 12),
                weights: &[(4, 1), (-3, 1), (4, 3), (-1, 4)],
            }),
            _ => None,
        }
    }

    pub fn a_f64(&self) -> f64 {
        self.a.0 as f64 / self.a.1 as f64
    }

    pub fn weights_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().map(|&(p, q)| p as f64 / q as f64)
    }
}

/// The most recent curves of a trajectory, oldest first.
#[derive(Debug, Clone)]
pub struct CurveHistory {
    capacity: usize,
    curves: VecDeque<PolygonalCurve>,
    kappas: VecDeque<NodalField>,
}

impl CurveHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        CurveHistory {
            capacity,
            curves: VecDeque::with_capacity(capacity + 1),
            kappas: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn push(&mut self, curve: PolygonalCurve, kappa: NodalField) {
        if let Some(first) = self.curves.front() {
            assert_eq!(first.segment_count(), curve.segment_count(), "history curves must share N");
        }
        self.curves.push_back(curve);
        self.kappas.push_back(kappa);
        while self.curves.len() > self.capacity {
            self.curves.pop_front();
            self.kappas.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// `X^{m-p}`; `p = 0` is the latest curve.
    pub fn back(&self, p: usize) -> &PolygonalCurve {
        &self.curves[self.curves.len() - 1 - p]
    }

    pub fn latest(&self) -> &PolygonalCurve {
        self.back(0)
    }

    pub fn latest_kappa(&self) -> &NodalField {
        &self.kappas[self.kappas.len() - 1]
    }

    pub fn curves(&self) -> impl Iterator<Item = &PolygonalCurve> {
        self.curves.iter()
    }

    /// `X^hat = sum_p w_p X^{m-p}` with the BDFk weights. Endpoint entries are
    /// the contact-point extrapolants.
    pub fn extrapolate(&self, k: usize) -> Result<Vec<Point>> {
        let coeffs = BdfCoefficients::of(k).ok_or_else(|| Error::param("k", format!("unsupported BDF order {k}")))?;
        if self.len() < k {
            return Err(Error::InsufficientHistory { have: self.len(), need: k });
        }
        let n = self.latest().nodes().len();
        let mut out = vec![Point::default(); n];
        for (p, w) in coeffs.weights_f64().enumerate() {
            for (o, q) in out.iter_mut().zip(self.back(p).nodes()) {
                *o = *o + w * *q;
            }
        }
        Ok(out)
    }
}

fn tagged(phase: Phase) -> impl Fn(Error) -> Error {
    move |e| e.in_phase(0, phase)
}

/// Least-squares nodal curvature of an initial curve from
/// `<kappa n, omega>^h = <d_s X, d_s omega>` over all test functions.
///
/// Each test function touches a single curvature value, so the normal
/// equations are diagonal.
pub fn initial_curvature(curve: &PolygonalCurve) -> Result<NodalField> {
    let n = curve.segment_count();
    let geo = ReferenceGeometry::of(curve);
    let nodes = curve.nodes();
    let scale = geo.lengths.iter().fold(0.0f64, |m, &l| m.max(l));
    (0..=n)
        .map(|j| {
            let om = geo.omega[j];
            let kx = geo.stiffness_apply_row(j, |k| nodes[k].x);
            let (mut num, mut den) = (om.x * kx, om.x * om.x);
            if j > 0 && j < n {
                let ky = geo.stiffness_apply_row(j, |k| nodes[k].y);
                num += om.y * ky;
                den += om.y * om.y;
            }
            if den <= 1e-28 * scale * scale {
                return Err(Error::RankDeficient { node: j });
            }
            Ok(num / den)
        })
        .collect::<Result<Vec<_>>>()
        .map(NodalField)
}

/// Solves one implicit BDF-type step `(a X - X^hat)/tau` on `reference`.
fn implicit_solve(
    reference: &PolygonalCurve,
    a: f64,
    target: &[Point],
    params: &SchemeParams,
) -> Result<(PolygonalCurve, NodalField)> {
    let system = assemble(&StepDescriptor {
        reference,
        a_coeff: a,
        target,
        kappa_mode: KappaMode::Implicit,
        params,
    })?;
    let (kappa, curve) = solve(&system)?;
    Ok((curve, kappa))
}

/// One backward-Euler step on the current curve.
pub fn zjb_step(curve: &PolygonalCurve, params: &SchemeParams) -> Result<(PolygonalCurve, NodalField)> {
    implicit_solve(curve, 1.0, curve.nodes(), params).map_err(tagged(Phase::Step))
}

/// One predictor-corrector step: a half-step ZJB prediction supplies the
/// reference curve for a trapezoidal correction over the full step.
pub fn pc_step(
    curve: &PolygonalCurve,
    kappa: &NodalField,
    params: &SchemeParams,
) -> Result<(PolygonalCurve, NodalField)> {
    let half = params.with_tau(0.5 * params.tau);
    let (predicted, _) = implicit_solve(curve, 1.0, curve.nodes(), &half).map_err(tagged(Phase::Predictor))?;
    let system = assemble(&StepDescriptor {
        reference: &predicted,
        a_coeff: 1.0,
        target: curve.nodes(),
        kappa_mode: KappaMode::Trapezoidal {
            kappa_prev: kappa,
            curve_prev: curve,
        },
        params,
    })
    .map_err(tagged(Phase::Corrector))?;
    let (kappa_new, next) = solve(&system).map_err(tagged(Phase::Corrector))?;
    Ok((next, kappa_new))
}

/// One BDFk step from the last `k` curves in `history`. The reference curve is
/// predicted by BDF(k-1), recursively down to plain ZJB.
pub fn bdf_step(history: &CurveHistory, k: usize, params: &SchemeParams) -> Result<(PolygonalCurve, NodalField)> {
    if !(2..=4).contains(&k) {
        return Err(Error::param("k", format!("BDF order must be 2, 3 or 4, got {k}")));
    }
    if history.len() < k {
        return Err(Error::InsufficientHistory { have: history.len(), need: k });
    }
    let (predicted, _) = bdf_or_zjb(history, k - 1, params).map_err(tagged(Phase::Predictor))?;
    let coeffs = BdfCoefficients::of(k).expect("k checked above");
    let target = history.extrapolate(k)?;
    implicit_solve(&predicted, coeffs.a_f64(), &target, params).map_err(tagged(Phase::Corrector))
}

fn bdf_or_zjb(history: &CurveHistory, k: usize, params: &SchemeParams) -> Result<(PolygonalCurve, NodalField)> {
    if k == 1 {
        implicit_solve(history.latest(), 1.0, history.latest().nodes(), params)
    } else {
        bdf_step(history, k, params)
    }
}

/// Number of substeps per coarse step used by [`bootstrap`] for order `k`.
///
/// The start-up runs at spacing `tau / n` with `tau / n <= tau^(k/3)`, so the
/// O(dt^3) local error of the second-order starter stays below `tau^k`.
pub fn bootstrap_substeps(tau: f64, k: usize) -> usize {
    let sub = tau.min(tau.powf(k as f64 / 3.0));
    ((tau / sub) - 1e-9).ceil().max(1.0) as usize
}

/// Builds `Gamma^0 .. Gamma^{k-1}` for a BDFk run.
///
/// A fine trajectory is integrated with spacing `tau / n`: PC-ZJB for the first
/// fine step, then BDF2, BDF3, ... up to BDF(k-1) as history accumulates.
/// Every `n`-th fine curve becomes a history entry.
pub fn bootstrap(curve0: &PolygonalCurve, k: usize, params: &SchemeParams) -> Result<CurveHistory> {
    if !(2..=4).contains(&k) {
        return Err(Error::param("k", format!("BDF order must be 2, 3 or 4, got {k}")));
    }
    let kappa0 = initial_curvature(curve0).map_err(|e| e.in_phase(0, Phase::Bootstrap))?;
    let n_sub = bootstrap_substeps(params.tau, k);
    let fine = params.with_tau(params.tau / n_sub as f64);
    let mut coarse = CurveHistory::new(k);
    coarse.push(curve0.clone(), kappa0.clone());
    let mut hist = CurveHistory::new(k.max(2));
    hist.push(curve0.clone(), kappa0);
    for s in 1..=(k - 1) * n_sub {
        let order = s.min(k - 1);
        let (next, kappa) = if s == 1 || order < 2 {
            pc_step(hist.latest(), hist.latest_kappa(), &fine)
        } else {
            bdf_step(&hist, order, &fine)
        }
        .map_err(|e| e.in_phase(s, Phase::Bootstrap))?;
        hist.push(next, kappa);
        if s % n_sub == 0 {
            coarse.push(hist.latest().clone(), hist.latest_kappa().clone());
        }
    }
    Ok(coarse)
}

/// Drives a single trajectory of any scheme, one coarse step per call.
#[derive(Debug, Clone)]
pub struct Integrator {
    scheme: Scheme,
    params: SchemeParams,
    history: CurveHistory,
    queued: VecDeque<(PolygonalCurve, NodalField)>,
    prev_kappa: Option<NodalField>,
    steps: usize,
}

impl Integrator {
    pub fn new(scheme: Scheme, curve0: PolygonalCurve, params: SchemeParams) -> Result<Self> {
        if curve0.segment_count() < 3 {
            return Err(Error::param("N", "schemes need at least 3 segments"));
        }
        let kappa0 = match scheme {
            Scheme::Zjb => initial_curvature(&curve0).unwrap_or_else(|_| NodalField::zeros(curve0.nodes().len())),
            _ => initial_curvature(&curve0)?,
        };
        let mut history = CurveHistory::new(scheme.history_depth());
        history.push(curve0, kappa0);
        Ok(Integrator {
            scheme,
            params,
            history,
            queued: VecDeque::new(),
            prev_kappa: None,
            steps: 0,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.params.tau
    }

    pub fn curve(&self) -> &PolygonalCurve {
        self.history.latest()
    }

    pub fn kappa(&self) -> &NodalField {
        self.history.latest_kappa()
    }

    /// The curvature that balances the position equations of the last step.
    /// For PC-ZJB that is the trapezoidal mean of the last two curvatures,
    /// since the scheme leaves their alternating component undamped.
    pub fn stationary_kappa(&self) -> NodalField {
        match (&self.prev_kappa, self.scheme) {
            (Some(prev), Scheme::Pc) => NodalField(
                prev.values()
                    .iter()
                    .zip(self.kappa().values())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            ),
            _ => self.kappa().clone(),
        }
    }

    /// Advances one step of size `tau`; BDF start-up curves count as steps.
    pub fn advance(&mut self) -> Result<&PolygonalCurve> {
        let step = self.steps + 1;
        let (curve, kappa) = self.next_state().map_err(|e| e.at_step(step))?;
        self.prev_kappa = Some(self.history.latest_kappa().clone());
        self.history.push(curve, kappa);
        self.steps = step;
        Ok(self.history.latest())
    }

    fn next_state(&mut self) -> Result<(PolygonalCurve, NodalField)> {
        let p = &self.params;
        match self.scheme {
            Scheme::Zjb => zjb_step(self.history.latest(), p),
            Scheme::Pc => pc_step(self.history.latest(), self.history.latest_kappa(), p),
            bdf => {
                let k = bdf.order();
                if self.steps == 0 {
                    let start = bootstrap(self.history.latest(), k, p)?;
                    self.queued = start
                        .curves
                        .into_iter()
                        .zip(start.kappas)
                        .skip(1)
                        .collect();
                }
                match self.queued.pop_front() {
                    Some(state) => Ok(state),
                    None => bdf_step(&self.history, k, p),
                }
            }
        }
    }
}

impl Error {
    /// Attaches a step index to a phase-tagged failure.
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            Error::StepFailed { phase, source, .. } => Error::StepFailed { step, phase, source },
            other => other.in_phase(step, Phase::Step),
        }
    }
}
