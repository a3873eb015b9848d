//! Finite-element inner products on a reference curve and the linear system
//! solved once per (sub)step by every time stepper.
//!
//! Unknowns are ordered `kappa_0..kappa_N`, `x_0..x_N`, `y_1..y_{N-1}`; rows
//! follow the same blocks (motion law tested with `phi_j`, curvature law tested
//! with `(phi_j, 0)` and `(0, phi_i)`). The endpoint `y` values are not
//! unknowns. The solver re-orders everything node by node, which turns the
//! system into a band matrix of half-bandwidth at most 5.

mod banded;

use std::io::Write;

use crate::curve::{NodalField, Point, PolygonalCurve, Segment};
use crate::error::{Error, Result};
use crate::schemes::SchemeParams;

pub use banded::{BandLu, BandMatrix};

/// Relative residual bound accepted from [`solve`].
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Threshold for both well-posedness conditions.
pub const WELL_POSED_TOL: f64 = 1e-14;

/// `<d_s f, d_s g>` over the reference curve for piecewise linear `f`, `g`.
pub fn stiffness_apply(reference: &PolygonalCurve, f: &NodalField, g: &NodalField) -> f64 {
    let n = reference.segment_count();
    assert!(f.len() == n + 1 && g.len() == n + 1, "field length must be N+1");
    reference
        .segment_lengths()
        .iter()
        .enumerate()
        .map(|(k, len)| (f[k + 1] - f[k]) * (g[k + 1] - g[k]) / len)
        .sum()
}

/// A factor of a lumped inner product: either continuous (one value per node)
/// or piecewise constant (one value per segment, like the discrete normal).
#[derive(Debug, Clone, Copy)]
pub enum Lumped<'a> {
    Nodal(&'a [Point]),
    PerSegment(&'a [Point]),
}

impl Lumped<'_> {
    /// Value on segment `seg` (0-based) at its start (`end = false`) or end node.
    fn at(&self, seg: usize, end: bool) -> Point {
        match *self {
            Lumped::Nodal(v) => v[seg + end as usize],
            Lumped::PerSegment(v) => v[seg],
        }
    }
}

/// Mass-lumped (trapezoidal) inner product `<u, v>^h` on the reference curve.
pub fn lumped_inner(reference: &PolygonalCurve, u: Lumped<'_>, v: Lumped<'_>) -> f64 {
    0.5 * reference
        .segment_lengths()
        .iter()
        .enumerate()
        .map(|(k, len)| len * (u.at(k, true).dot(v.at(k, true)) + u.at(k, false).dot(v.at(k, false))))
        .sum::<f64>()
}

/// True when both end-segment normals are not simultaneously horizontal-free
/// and every segment has positive length.
pub fn well_posedness_check(reference: &PolygonalCurve) -> bool {
    well_posedness_error(reference).is_none()
}

fn well_posedness_error(reference: &PolygonalCurve) -> Option<Error> {
    let nodes = reference.nodes();
    let n = reference.segment_count();
    let min_length = reference.segment_lengths().into_iter().fold(f64::INFINITY, f64::min);
    let first = Segment::between(nodes[0], nodes[1]);
    let last = Segment::between(nodes[n - 1], nodes[n]);
    let (first_nx, last_nx) = match (first, last) {
        (Some(f), Some(l)) => (f.normal.x, l.normal.x),
        _ => (0.0, 0.0),
    };
    let ok = first_nx * first_nx + last_nx * last_nx > WELL_POSED_TOL && min_length > WELL_POSED_TOL;
    (!ok).then_some(Error::IllPosed {
        first_nx,
        last_nx,
        min_length,
    })
}

/// How the curvature unknown enters the step.
#[derive(Debug, Clone, Copy)]
pub enum KappaMode<'a> {
    /// Fully implicit curvature and position stiffness (ZJB, BDFk).
    Implicit,
    /// Trapezoidal averages `(kappa + kappa_prev) / 2` and `(X + X_prev) / 2`
    /// in the stiffness and curvature terms (predictor-corrector).
    Trapezoidal {
        kappa_prev: &'a NodalField,
        curve_prev: &'a PolygonalCurve,
    },
}

/// Everything needed to assemble one semi-implicit step.
///
/// The discrete time derivative is `(a X - target) / tau`, and the contact
/// velocity is `(a x_c - target_c) / tau` at both ends.
#[derive(Debug, Clone, Copy)]
pub struct StepDescriptor<'a> {
    pub reference: &'a PolygonalCurve,
    pub a_coeff: f64,
    pub target: &'a [Point],
    pub kappa_mode: KappaMode<'a>,
    pub params: &'a SchemeParams,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists, merging duplicates.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                assert!(c < dim);
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] = v;
            }
        }
        d
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix Market `coordinate real general` format, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.dim, self.dim, self.nnz())?;
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                writeln!(out, "{} {} {:.16e}", i + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Assembled linear system of dimension `3N + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSystem {
    pub segments: usize,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// Index helpers for the block ordering.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub n: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        3 * self.n + 1
    }
    pub fn kappa(&self, j: usize) -> usize {
        j
    }
    pub fn x(&self, j: usize) -> usize {
        self.n + 1 + j
    }
    /// Interior nodes only, `1 <= j <= N-1`.
    pub fn y(&self, j: usize) -> usize {
        debug_assert!(j >= 1 && j < self.n);
        2 * self.n + 1 + j
    }
    /// Position of a block index in the node-by-node ordering.
    fn interleaved(&self, idx: usize) -> usize {
        let n = self.n;
        let node_base = |j: usize| if j == 0 { 0 } else { 2 + 3 * (j - 1) };
        if idx <= n {
            node_base(idx)
        } else if idx <= 2 * n + 1 {
            node_base(idx - n - 1) + 1
        } else {
            node_base(idx - 2 * n - 1) + 2
        }
    }
}

impl StepSystem {
    pub fn layout(&self) -> Layout {
        Layout { n: self.segments }
    }

    pub fn write_rhs<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.rhs {
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    /// Splits a solution vector into curvature and curve.
    pub fn unpack(&self, sol: &[f64]) -> Result<(NodalField, PolygonalCurve)> {
        let lay = self.layout();
        let n = lay.n;
        let kappa = NodalField(sol[..=n].to_vec());
        let nodes = (0..=n)
            .map(|j| {
                let y = if j == 0 || j == n { 0.0 } else { sol[lay.y(j)] };
                Point::new(sol[lay.x(j)], y)
            })
            .collect();
        Ok((kappa, PolygonalCurve::new(nodes)?))
    }
}

/// Per-node lumped normal weights `omega_j = <n, phi_j>^h` and segment lengths.
pub(crate) struct ReferenceGeometry {
    pub(crate) lengths: Vec<f64>,
    pub(crate) omega: Vec<Point>,
}

impl ReferenceGeometry {
    pub(crate) fn of(reference: &PolygonalCurve) -> Self {
        let nodes = reference.nodes();
        let n = reference.segment_count();
        let lengths = reference.segment_lengths();
        let scaled: Vec<Point> = nodes.windows(2).map(|w| Segment::scaled_normal(w[0], w[1])).collect();
        let omega = (0..=n)
            .map(|j| {
                let left = if j > 0 { scaled[j - 1] } else { Point::default() };
                let right = if j < n { scaled[j] } else { Point::default() };
                0.5 * (left + right)
            })
            .collect();
        ReferenceGeometry { lengths, omega }
    }

    /// Nonzero entries `(k, K_jk)` of stiffness row `j`.
    fn stiffness_row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.lengths.len();
        let left = (j > 0).then(|| 1.0 / self.lengths[j - 1]);
        let right = (j < n).then(|| 1.0 / self.lengths[j]);
        let diag = left.unwrap_or(0.0) + right.unwrap_or(0.0);
        left.map(|v| (j - 1, -v))
            .into_iter()
            .chain(std::iter::once((j, diag)))
            .chain(right.map(|v| (j + 1, -v)))
    }

    pub(crate) fn stiffness_apply_row(&self, j: usize, f: impl Fn(usize) -> f64) -> f64 {
        self.stiffness_row(j).map(|(k, v)| v * f(k)).sum()
    }
}

/// Assembles the step system; refuses references that fail [`well_posedness_check`].
pub fn assemble(desc: &StepDescriptor<'_>) -> Result<StepSystem> {
    let reference = desc.reference;
    let n = reference.segment_count();
    if n < 3 {
        return Err(Error::param("N", format!("schemes need at least 3 segments, got {n}")));
    }
    if desc.target.len() != n + 1 {
        return Err(Error::param("target", "extrapolated curve must have N+1 nodes"));
    }
    if let Some(err) = well_posedness_error(reference) {
        return Err(err);
    }
    let p = desc.params;
    let (tau, a, sigma) = (p.tau, desc.a_coeff, p.sigma);
    let contact = 1.0 / (p.eta * tau);
    let geo = ReferenceGeometry::of(reference);
    let lay = Layout { n };
    let dim = lay.dim();

    let (w, prev) = match desc.kappa_mode {
        KappaMode::Implicit => (1.0, None),
        KappaMode::Trapezoidal { kappa_prev, curve_prev } => {
            if kappa_prev.len() != n + 1 || curve_prev.segment_count() != n {
                return Err(Error::param("kappa_prev", "history must share N"));
            }
            (0.5, Some((kappa_prev, curve_prev)))
        }
    };

    let mut rows = vec![Vec::with_capacity(6); dim];
    let mut rhs = vec![0.0; dim];

    for j in 0..=n {
        let om = geo.omega[j];
        let interior = j > 0 && j < n;
        let xh = desc.target[j];

        // motion law, tested with phi_j
        let r = lay.kappa(j);
        for (k, v) in geo.stiffness_row(j) {
            rows[r].push((lay.kappa(k), w * v));
        }
        rows[r].push((lay.x(j), a / tau * om.x));
        if interior {
            rows[r].push((lay.y(j), a / tau * om.y));
        }
        rhs[r] = om.dot(xh) / tau;

        // curvature law, tested with (phi_j, 0)
        let r = lay.x(j);
        rows[r].push((lay.kappa(j), w * om.x));
        for (k, v) in geo.stiffness_row(j) {
            rows[r].push((lay.x(k), -w * v));
        }
        if j == 0 {
            rows[r].push((lay.x(j), -a * contact));
            rhs[r] = -contact * xh.x + sigma;
        } else if j == n {
            rows[r].push((lay.x(j), -a * contact));
            rhs[r] = -contact * xh.x - sigma;
        }

        // curvature law, tested with (0, phi_j)
        if interior {
            let r = lay.y(j);
            rows[r].push((lay.kappa(j), w * om.y));
            for (k, v) in geo.stiffness_row(j) {
                if k > 0 && k < n {
                    rows[r].push((lay.y(k), -w * v));
                }
            }
        }

        if let Some((kp, cp)) = prev {
            let xp = cp.nodes();
            rhs[lay.kappa(j)] -= (1.0 - w) * geo.stiffness_apply_row(j, |k| kp[k]);
            rhs[lay.x(j)] += (1.0 - w) * (-kp[j] * om.x + geo.stiffness_apply_row(j, |k| xp[k].x));
            if interior {
                rhs[lay.y(j)] += (1.0 - w) * (-kp[j] * om.y + geo.stiffness_apply_row(j, |k| xp[k].y));
            }
        }
    }

    Ok(StepSystem {
        segments: n,
        matrix: SparseMatrix::from_rows(dim, rows),
        rhs,
    })
}

/// Solves the system with a band LU in node-interleaved ordering and returns
/// the solution vector in block ordering.
pub fn solve_vector(system: &StepSystem) -> Result<Vec<f64>> {
    let lay = system.layout();
    let dim = lay.dim();
    let perm: Vec<usize> = (0..dim).map(|i| lay.interleaved(i)).collect();
    let (mut kl, mut ku) = (0usize, 0usize);
    for i in 0..dim {
        for (c, _) in system.matrix.row(i) {
            let (pi, pc) = (perm[i], perm[c]);
            if pi > pc {
                kl = kl.max(pi - pc);
            } else {
                ku = ku.max(pc - pi);
            }
        }
    }
    let mut band = BandMatrix::zeros(dim, kl, ku);
    for i in 0..dim {
        for (c, v) in system.matrix.row(i) {
            band.add(perm[i], perm[c], v);
        }
    }
    let lu = band.factor()?;

    let solve_block = |b: &[f64]| -> Vec<f64> {
        let mut work = vec![0.0; dim];
        for (i, v) in b.iter().enumerate() {
            work[perm[i]] = *v;
        }
        lu.solve_in_place(&mut work);
        (0..dim).map(|i| work[perm[i]]).collect()
    };

    let mut x = solve_block(&system.rhs);
    // one step of iterative refinement
    let r: Vec<f64> = system
        .matrix
        .mul_vec(&x)
        .iter()
        .zip(&system.rhs)
        .map(|(ax, b)| b - ax)
        .collect();
    let dx = solve_block(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }

    let b_norm = system.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = system
        .matrix
        .mul_vec(&x)
        .iter()
        .zip(&system.rhs)
        .fold(0.0f64, |m, (ax, b)| m.max((ax - b).abs()));
    let tolerance = SOLVE_RESIDUAL_TOL * (1.0 + b_norm);
    if !(residual <= tolerance) {
        return Err(Error::InaccurateSolve { residual, tolerance });
    }
    Ok(x)
}

/// Solves the system and reshapes the solution into `(kappa, curve)`.
pub fn solve(system: &StepSystem) -> Result<(NodalField, PolygonalCurve)> {
    let x = solve_vector(system)?;
    system.unpack(&x)
}

/// Residual of the stationary equations on `curve` with curvature `kappa`:
/// `max(|K kappa|_inf, |kappa omega - K X + sigma boundary|_inf)`.
pub fn equilibrium_residual(curve: &PolygonalCurve, kappa: &NodalField, sigma: f64) -> f64 {
    let n = curve.segment_count();
    let geo = ReferenceGeometry::of(curve);
    let nodes = curve.nodes();
    let mut worst = 0.0f64;
    for j in 0..=n {
        let om = geo.omega[j];
        let motion = geo.stiffness_apply_row(j, |k| kappa[k]);
        let boundary = if j == 0 {
            -sigma
        } else if j == n {
            sigma
        } else {
            0.0
        };
        let xrow = kappa[j] * om.x - geo.stiffness_apply_row(j, |k| nodes[k].x) + boundary;
        worst = worst.max(motion.abs()).max(xrow.abs());
        if j > 0 && j < n {
            let yrow = kappa[j] * om.y - geo.stiffness_apply_row(j, |k| nodes[k].y);
            worst = worst.max(yrow.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{from_shape, ShapeSpec};
    use std::f64::consts::PI;

    fn params(tau: f64) -> SchemeParams {
        SchemeParams::new(tau, 100.0, 5.0 * PI / 6.0).unwrap()
    }

    #[test]
    fn stiffness_examples() {
        let one = PolygonalCurve::from_xy(&[(0.0, 0.0), (2.0, 0.0)]).unwrap();
        let f = NodalField(vec![0.0, 1.0]);
        assert_eq!(stiffness_apply(&one, &f, &f), 0.5);
        let two = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        let c = NodalField::constant(4, 3.7);
        let g = NodalField(vec![0.3, -1.0, 2.0, 0.0]);
        assert_eq!(stiffness_apply(&two, &c, &g), 0.0);
        let two = PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap();
        let f = NodalField(vec![0.0, 1.0, 0.0]);
        assert_eq!(stiffness_apply(&two, &f, &f), 2.0);
    }

    #[test]
    fn lumped_examples() {
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 1.5), (2.0, 1.5), (2.0, 0.0)]).unwrap();
        let ones = vec![Point::new(1.0, 0.0); 4];
        let total = lumped_inner(&c, Lumped::Nodal(&ones), Lumped::Nodal(&ones));
        assert!((total - c.total_length()).abs() < 1e-15);

        let tri = PolygonalCurve::from_xy(&[(0.0, 0.0), (3.0, 4.0), (4.0, 0.0)]).unwrap();
        let u = vec![Point::new(1.0, 0.0), Point::new(0.0, 0.0), Point::new(0.0, 0.0)];
        let v = vec![Point::new(1.0, 0.0); 3];
        assert!((lumped_inner(&tri, Lumped::Nodal(&u), Lumped::Nodal(&v)) - 2.5).abs() < 1e-15);

        let flat = PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.5, 1.0), (2.0, 0.0)]).unwrap();
        let normals: Vec<Point> = flat.segment_data().iter().map(|s| s.normal).collect();
        assert_eq!(normals[0], Point::new(0.0, 1.0));
        let e0 = vec![Point::new(1.0, 0.0), Point::default(), Point::default(), Point::default()];
        assert_eq!(lumped_inner(&flat, Lumped::PerSegment(&normals), Lumped::Nodal(&e0)), 0.0);
    }

    #[test]
    fn well_posedness_examples() {
        for n in [3, 8, 64] {
            let c = from_shape(&ShapeSpec::SemiEllipse { a: 1.0, b: 1.0 }, n).unwrap();
            assert!(well_posedness_check(&c));
        }
        let box_curve = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(well_posedness_check(&box_curve));
        let flat_ends =
            PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.5, 1.0), (2.0, 0.0), (3.0, 0.0)]).unwrap();
        assert!(!well_posedness_check(&flat_ends));
    }

    #[test]
    fn assemble_refuses_ill_posed_reference() {
        let flat_ends =
            PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.5, 1.0), (2.0, 0.0), (3.0, 0.0)]).unwrap();
        let p = params(0.01);
        let desc = StepDescriptor {
            reference: &flat_ends,
            a_coeff: 1.0,
            target: flat_ends.nodes(),
            kappa_mode: KappaMode::Implicit,
            params: &p,
        };
        assert!(matches!(assemble(&desc), Err(Error::IllPosed { .. })));
    }

    #[test]
    fn dimension_is_three_n_plus_one() {
        let c = from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 }, 3).unwrap();
        let p = params(0.01);
        let sys = assemble(&StepDescriptor {
            reference: &c,
            a_coeff: 1.0,
            target: c.nodes(),
            kappa_mode: KappaMode::Implicit,
            params: &p,
        })
        .unwrap();
        assert_eq!(sys.matrix.dim(), 10);
        assert_eq!(sys.rhs.len(), 10);
    }

    #[test]
    fn diagonal_system_recovers_rhs() {
        let n = 3;
        let dim = 3 * n + 1;
        let rows = (0..dim).map(|i| vec![(i, 1.0)]).collect();
        let rhs: Vec<f64> = (0..dim).map(|i| i as f64 * 0.25 - 1.0).collect();
        let sys = StepSystem {
            segments: n,
            matrix: SparseMatrix::from_rows(dim, rows),
            rhs: rhs.clone(),
        };
        assert_eq!(solve_vector(&sys).unwrap(), rhs);
    }

    #[test]
    fn matrix_market_dump() {
        let c = from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 }, 3).unwrap();
        let p = params(0.01);
        let sys = assemble(&StepDescriptor {
            reference: &c,
            a_coeff: 1.0,
            target: c.nodes(),
            kappa_mode: KappaMode::Implicit,
            params: &p,
        })
        .unwrap();
        let mut buf = Vec::new();
        sys.matrix.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real general"));
        assert_eq!(lines.next(), Some(format!("10 10 {}", sys.matrix.nnz()).as_str()));
        assert_eq!(lines.count(), sys.matrix.nnz());
        let mut rhs = Vec::new();
        sys.write_rhs(&mut rhs).unwrap();
        assert_eq!(String::from_utf8(rhs).unwrap().lines().count(), 10);
    }
}
