//! Open polygonal film/vapor interfaces and their geometric diagnostics.
//!
//! A [`PolygonalCurve`] runs from the left contact point to the right contact
//! point, both pinned to the substrate `y = 0`. Node `j` sits at the parameter
//! value `rho_j = j / N`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x, self * rhs.y)
    }
}

/// Length, unit tangent and unit normal of one polygon edge.
///
/// The normal is the tangent rotated by +90 degrees, `(-dy, dx) / |h|`, which
/// points out of the film for a curve traversed from left to right contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub tangent: Point,
    pub normal: Point,
}

impl Segment {
    /// Returns `None` for a zero-length (or non-finite) edge.
    pub fn between(start: Point, end: Point) -> Option<Segment> {
        let d = end - start;
        let length = d.norm();
        if !(length > 0.0) || !length.is_finite() {
            return None;
        }
        let tangent = (1.0 / length) * d;
        Some(Segment {
            length,
            tangent,
            normal: Point::new(-tangent.y, tangent.x),
        })
    }

    /// `|h_j| n_j = (-dy, dx)`, exact in the node coordinates.
    pub fn scaled_normal(start: Point, end: Point) -> Point {
        Point::new(-(end.y - start.y), end.x - start.x)
    }
}

/// Ordered nodes of the interface, endpoints on the substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalCurve {
    nodes: Vec<Point>,
}

impl PolygonalCurve {
    /// Builds a curve, snapping both endpoint `y` values to exactly zero.
    ///
    /// Rejects fewer than two nodes, non-finite coordinates, crossed contact
    /// points (`x_0 > x_N`) and zero-length segments.
    pub fn new(mut nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(j) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCurve(format!("node {j} is not finite")));
        }
        let last = nodes.len() - 1;
        nodes[0].y = 0.0;
        nodes[last].y = 0.0;
        if nodes[0].x > nodes[last].x {
            return Err(Error::ContactOrder {
                left: nodes[0].x,
                right: nodes[last].x,
            });
        }
        for (j, w) in nodes.windows(2).enumerate() {
            let length = (w[1] - w[0]).norm();
            if !(length > 0.0) {
                return Err(Error::DegenerateSegment {
                    index: j + 1,
                    length,
                });
            }
        }
        Ok(PolygonalCurve { nodes })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Point> {
        self.nodes
    }

    /// Number of segments `N`.
    pub fn segment_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, j: usize) -> Point {
        self.nodes[j]
    }

    pub fn left_contact(&self) -> f64 {
        self.nodes[0].x
    }

    pub fn right_contact(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].x
    }

    /// Segment `j` (1-based, as `h_j = X(rho_j) - X(rho_{j-1})`).
    pub fn segment(&self, j: usize) -> Segment {
        Segment::between(self.nodes[j - 1], self.nodes[j])
            .expect("curve invariant: positive segment lengths")
    }

    pub fn segment_data(&self) -> Vec<Segment> {
        (1..=self.segment_count()).map(|j| self.segment(j)).collect()
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// `A = 1/2 sum_j (x_j - x_{j-1}) (y_j + y_{j-1})`.
    pub fn enclosed_area(&self) -> f64 {
        0.5 * self
            .nodes
            .windows(2)
            .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y))
            .sum::<f64>()
    }

    /// `W = sum_j |h_j| - sigma (x_N - x_0)`.
    pub fn discrete_energy(&self, sigma: f64) -> f64 {
        self.total_length() - sigma * (self.right_contact() - self.left_contact())
    }

    pub fn mesh_ratio(&self) -> f64 {
        let lengths = self.segment_lengths();
        let (lo, hi) = lengths
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
        hi / lo
    }

    /// Interior contact angles `(theta_left, theta_right)` against the substrate.
    pub fn contact_angles(&self) -> (f64, f64) {
        let first = self.segment(1);
        let last = self.segment(self.segment_count());
        let angle = |t: Point| t.y.abs().atan2(t.x);
        (angle(first.tangent), angle(last.tangent))
    }

    pub fn diagnostics(&self, sigma: f64) -> Diagnostics {
        let (theta_left, theta_right) = self.contact_angles();
        Diagnostics {
            area: self.enclosed_area(),
            energy: self.discrete_energy(sigma),
            mesh_ratio: self.mesh_ratio(),
            theta_left,
            theta_right,
            total_length: self.total_length(),
        }
    }

    pub fn translated(&self, dx: f64) -> PolygonalCurve {
        PolygonalCurve {
            nodes: self.nodes.iter().map(|p| Point::new(p.x + dx, p.y)).collect(),
        }
    }

    /// Mirror image across the y-axis, re-ordered left to right.
    pub fn reflected(&self) -> PolygonalCurve {
        PolygonalCurve {
            nodes: self.nodes.iter().rev().map(|p| Point::new(-p.x, p.y)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<PolygonalCurve> {
        PolygonalCurve::new(self.nodes.iter().map(|&p| factor * p).collect())
    }

    /// Max-norm distance between nodes of two curves with the same `N`.
    pub fn max_node_distance(&self, other: &PolygonalCurve) -> f64 {
        assert_eq!(self.nodes.len(), other.nodes.len());
        self.nodes
            .iter()
            .zip(&other.nodes)
            .map(|(a, b)| (a.x - b.x).abs().max((a.y - b.y).abs()))
            .fold(0.0, f64::max)
    }

    /// Writes the `j,x,y` snapshot format with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "j,x,y")?;
        for (j, p) in self.nodes.iter().enumerate() {
            writeln!(out, "{j},{:.16e},{:.16e}", p.x, p.y)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses a `j,x,y` snapshot. Rows must be numbered `0..=N` in order and
    /// the endpoints must already lie on the substrate.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        if headers.len() != 3 || &headers[0] != "j" || &headers[1] != "x" || &headers[2] != "y" {
            return Err(Error::Parse(format!(
                "expected header `j,x,y`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut nodes = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != 3 {
                return Err(Error::Parse(format!("row {row}: expected 3 fields")));
            }
            let j: usize = record[0]
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad index `{}`", &record[0])))?;
            if j != row {
                return Err(Error::Parse(format!("row {row}: index {j} out of sequence")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {row}: bad number `{s}`")))
            };
            nodes.push(Point::new(parse(&record[1])?, parse(&record[2])?));
        }
        if let (Some(first), Some(last)) = (nodes.first(), nodes.last()) {
            if first.y != 0.0 || last.y != 0.0 {
                return Err(Error::InvalidCurve(
                    "endpoints must lie on the substrate y = 0".into(),
                ));
            }
        }
        PolygonalCurve::new(nodes)
    }
}

/// Values attached to the nodes `rho_j = j / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField(pub Vec<f64>);

impl NodalField {
    pub fn zeros(len: usize) -> Self {
        NodalField(vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        NodalField(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub area: f64,
    pub energy: f64,
    pub mesh_ratio: f64,
    pub theta_left: f64,
    pub theta_right: f64,
    pub total_length: f64,
}

/// Initial interface shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    /// Upper half of an ellipse with semi-axes `a` (along the substrate) and `b`.
    SemiEllipse { a: f64, b: f64 },
    /// The six-petal "Curve I": `r = 2 + cos(6 theta)`, `theta in [0, pi]`.
    Flower,
    /// Circular-arc equilibrium with the given area and contact angle.
    Wulff { area: f64, theta_young: f64 },
    /// Nodes given explicitly; `N` must match.
    Nodes(Vec<Point>),
}

impl ShapeSpec {
    /// Exact area enclosed with the substrate by the continuous shape, when known.
    pub fn exact_area(&self) -> Option<f64> {
        match *self {
            ShapeSpec::SemiEllipse { a, b } => Some(PI * a * b / 2.0),
            // half the polar integral of (2 + cos 6t)^2 over [0, pi]
            ShapeSpec::Flower => Some(9.0 * PI / 4.0),
            ShapeSpec::Wulff { area, .. } => Some(area),
            ShapeSpec::Nodes(_) => None,
        }
    }
}

/// Samples `shape` with `n` segments, left contact first.
///
/// Parametric shapes use equal polar-angle steps `theta_j = pi (1 - j/N)`.
pub fn from_shape(shape: &ShapeSpec, n: usize) -> Result<PolygonalCurve> {
    if n < 2 {
        return Err(Error::param("N", format!("need at least 2 segments, got {n}")));
    }
    let polar = |r: &dyn Fn(f64) -> Point| -> Result<PolygonalCurve> {
        let nodes = (0..=n)
            .map(|j| r(PI * (1.0 - j as f64 / n as f64)))
            .collect();
        PolygonalCurve::new(nodes)
    };
    match shape {
        &ShapeSpec::SemiEllipse { a, b } => {
            if !(a > 0.0) || !(b > 0.0) {
                return Err(Error::param("shape", "semi-axes must be positive"));
            }
            polar(&|t| Point::new(a * t.cos(), b * t.sin()))
        }
        ShapeSpec::Flower => polar(&|t| {
            let r = 2.0 + (6.0 * t).cos();
            Point::new(r * t.cos(), r * t.sin())
        }),
        &ShapeSpec::Wulff { area, theta_young } => metrics::wulff_shape(area, theta_young, n),
        ShapeSpec::Nodes(nodes) => {
            if nodes.len() != n + 1 {
                return Err(Error::param(
                    "N",
                    format!("node list has {} segments, expected {n}", nodes.len() - 1),
                ));
            }
            if nodes[0].y != 0.0 || nodes[n].y != 0.0 {
                return Err(Error::InvalidCurve(
                    "endpoints must lie on the substrate y = 0".into(),
                ));
            }
            PolygonalCurve::new(nodes.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn semi_ellipse_samples_polar_angles() {
        let c = from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 }, 4).unwrap();
        let expected = [
            (-2.0, 0.0),
            (-SQRT_2, FRAC_1_SQRT_2),
            (0.0, 1.0),
            (SQRT_2, FRAC_1_SQRT_2),
            (2.0, 0.0),
        ];
        for (p, (x, y)) in c.nodes().iter().zip(expected) {
            assert!(close(p.x, x, 1e-15) && close(p.y, y, 1e-15), "{p:?}");
        }
        assert_eq!(c.node(0).y, 0.0);
        assert_eq!(c.node(4).y, 0.0);
    }

    #[test]
    fn unit_semicircle_three_points() {
        let c = from_shape(&ShapeSpec::SemiEllipse { a: 1.0, b: 1.0 }, 2).unwrap();
        assert!(close(c.node(0).x, -1.0, 1e-15) && c.node(0).y == 0.0);
        assert!(close(c.node(1).x, 0.0, 1e-15) && close(c.node(1).y, 1.0, 1e-15));
        assert!(close(c.node(2).x, 1.0, 1e-15) && c.node(2).y == 0.0);
    }

    #[test]
    fn flower_endpoints() {
        let c = from_shape(&ShapeSpec::Flower, 500).unwrap();
        assert!(close(c.node(0).x, -3.0, 1e-14) && c.node(0).y == 0.0);
        assert!(close(c.node(500).x, 3.0, 1e-14) && c.node(500).y == 0.0);
    }

    #[test]
    fn shape_errors() {
        assert!(from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 }, 1).is_err());
        assert!(from_shape(&ShapeSpec::SemiEllipse { a: -2.0, b: 1.0 }, 8).is_err());
        assert!(from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 0.0 }, 8).is_err());
        let bad = vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(from_shape(&ShapeSpec::Nodes(bad), 2).is_err());
        let off = vec![Point::new(0.0, 0.1), Point::new(0.5, 1.0), Point::new(1.0, 0.0)];
        assert!(from_shape(&ShapeSpec::Nodes(off), 2).is_err());
    }

    #[test]
    fn constructor_enforces_invariants() {
        let c = PolygonalCurve::from_xy(&[(0.0, 1e-3), (1.0, 1.0), (2.0, -1e-3)]).unwrap();
        assert_eq!(c.node(0).y, 0.0);
        assert_eq!(c.node(2).y, 0.0);
        assert!(matches!(
            PolygonalCurve::from_xy(&[(2.0, 0.0), (1.0, 1.0), (0.0, 0.0)]),
            Err(Error::ContactOrder { .. })
        ));
        assert!(matches!(
            PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 1.0), (1.0, 1.0), (2.0, 0.0)]),
            Err(Error::DegenerateSegment { index: 2, .. })
        ));
        assert!(PolygonalCurve::from_xy(&[(0.0, 0.0), (f64::NAN, 1.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn segment_examples() {
        let s = Segment::between(Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert_eq!((s.length, s.tangent, s.normal), (1.0, Point::new(1.0, 0.0), Point::new(0.0, 1.0)));
        let s = Segment::between(Point::new(0.0, 0.0), Point::new(0.0, 2.0)).unwrap();
        assert_eq!((s.length, s.tangent, s.normal), (2.0, Point::new(0.0, 1.0), Point::new(-1.0, 0.0)));
        let s = Segment::between(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        assert!(close(s.length, SQRT_2, 1e-15));
        assert!(close(s.normal.x, -FRAC_1_SQRT_2, 1e-15) && close(s.normal.y, FRAC_1_SQRT_2, 1e-15));
        assert!(Segment::between(Point::new(1.0, 1.0), Point::new(1.0, 1.0)).is_none());
    }

    #[test]
    fn area_examples() {
        let square = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(square.enclosed_area(), 1.0);
        let tri = PolygonalCurve::from_xy(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(tri.enclosed_area(), 1.0);
        let ell = from_shape(&ShapeSpec::SemiEllipse { a: 2.0, b: 1.0 }, 512).unwrap();
        assert!(((ell.enclosed_area() - PI) / PI).abs() < 1e-3);
    }

    #[test]
    fn energy_examples() {
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert!(close(c.discrete_energy(0.0), 2.0 * SQRT_2, 1e-15));
        assert!(close(c.discrete_energy(1.0), 2.0 * SQRT_2 - 2.0, 1e-15));
        assert!(close(c.discrete_energy(-1.0), 2.0 * SQRT_2 + 2.0, 1e-15));
    }

    #[test]
    fn mesh_ratio_examples() {
        let even = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(even.mesh_ratio(), 1.0);
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (2.0, 1.0), (2.0, 0.0)]).unwrap();
        assert_eq!(c.mesh_ratio(), 2.0);
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 0.5), (0.1, 0.5), (0.1, 0.1), (0.1, 0.0)]);
        // lengths 0.5, 0.1, 0.4, 0.1 -> ratio 5
        assert!(close(c.unwrap().mesh_ratio(), 5.0, 1e-12));
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (0.0, 0.5), (0.1, 0.5), (0.1, 0.1)]);
        // right endpoint snapped onto the substrate: lengths 0.5, 0.1, 0.5
        assert!(close(c.unwrap().mesh_ratio(), 5.0, 1e-12));
    }

    #[test]
    fn contact_angle_examples() {
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        let (l, r) = c.contact_angles();
        assert!(close(l, PI / 4.0, 1e-15) && close(r, PI / 4.0, 1e-15));
        let c = PolygonalCurve::from_xy(&[(0.0, 0.0), (-1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert!(close(c.contact_angles().0, 3.0 * PI / 4.0, 1e-15));
        let theta = 5.0 * PI / 6.0;
        let w = from_shape(&ShapeSpec::Wulff { area: 1.7, theta_young: theta }, 1024).unwrap();
        let (l, r) = w.contact_angles();
        assert!(close(l, theta, 5e-3) && close(r, theta, 5e-3), "{l} {r}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let c = from_shape(&ShapeSpec::Flower, 97).unwrap();
        let back = PolygonalCurve::read_csv(c.to_csv_string().as_bytes()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(PolygonalCurve::read_csv("i,x,y\n0,0,0\n1,1,0\n".as_bytes()).is_err());
        assert!(PolygonalCurve::read_csv("j,x,y\n0,0,0\n2,1,0\n".as_bytes()).is_err());
        assert!(PolygonalCurve::read_csv("j,x,y\n0,0,0\n1,abc,0\n".as_bytes()).is_err());
        assert!(PolygonalCurve::read_csv("j,x,y\n0,0,0.5\n1,1,0\n".as_bytes()).is_err());
        assert!(PolygonalCurve::read_csv("j,x,y\n".as_bytes()).is_err());
    }

    fn arb_curve() -> impl Strategy<Value = PolygonalCurve> {
        (3usize..40, -3.0f64..3.0, 0.5f64..3.0, 0.2f64..2.0, prop::collection::vec(-0.2f64..0.2, 41))
            .prop_map(|(n, x0, a, b, noise)| {
                let nodes = (0..=n)
                    .map(|j| {
                        let t = PI * (1.0 - j as f64 / n as f64);
                        let r = 1.0 + noise[j];
                        Point::new(x0 + a * r * t.cos(), b * r * t.sin())
                    })
                    .collect();
                PolygonalCurve::new(nodes).unwrap()
            })
    }

    proptest! {
        #[test]
        fn area_matches_closed_shoelace(c in arb_curve()) {
            // signed shoelace of the substrate-closed polygon, counterclockwise
            let ring: Vec<Point> = c.nodes().iter().rev().copied().collect();
            let n = ring.len();
            let shoelace: f64 = 0.5 * (0..n)
                .map(|i| {
                    let (p, q) = (ring[i], ring[(i + 1) % n]);
                    p.x * q.y - q.x * p.y
                })
                .sum::<f64>();
            prop_assert!((shoelace - c.enclosed_area()).abs() <= 1e-12 * (1.0 + shoelace.abs()));
        }

        #[test]
        fn translation_leaves_diagnostics_unchanged(c in arb_curve(), dx in -10.0f64..10.0, sigma in -1.0f64..1.0) {
            let d0 = c.diagnostics(sigma);
            let d1 = c.translated(dx).diagnostics(sigma);
            prop_assert!((d0.area - d1.area).abs() < 1e-11);
            prop_assert!((d0.energy - d1.energy).abs() < 1e-11);
            prop_assert!((d0.mesh_ratio - d1.mesh_ratio).abs() < 1e-9 * d0.mesh_ratio);
            prop_assert!((d0.theta_left - d1.theta_left).abs() < 1e-7);
            prop_assert!((d0.theta_right - d1.theta_right).abs() < 1e-7);
        }

        #[test]
        fn reflection_swaps_angles(c in arb_curve(), sigma in -1.0f64..1.0) {
            let d0 = c.diagnostics(sigma);
            let d1 = c.reflected().diagnostics(sigma);
            prop_assert!((d0.area - d1.area).abs() < 1e-12);
            prop_assert!((d0.energy - d1.energy).abs() < 1e-12);
            prop_assert!((d0.mesh_ratio - d1.mesh_ratio).abs() < 1e-12 * d0.mesh_ratio);
            prop_assert!((d0.theta_left - d1.theta_right).abs() < 1e-12);
            prop_assert!((d0.theta_right - d1.theta_left).abs() < 1e-12);
        }

        #[test]
        fn normals_are_unit_and_orthogonal(c in arb_curve()) {
            for s in c.segment_data() {
                prop_assert!(s.normal.dot(s.tangent).abs() < 1e-15);
                prop_assert!((s.normal.norm() - 1.0).abs() < 1e-15);
            }
        }

        #[test]
        fn mesh_ratio_one_iff_equal_lengths(c in arb_curve()) {
            let l = c.segment_lengths();
            let equal = l.iter().all(|v| (v - l[0]).abs() <= 1e-14 * l[0]);
            prop_assert!(c.mesh_ratio() >= 1.0);
            prop_assert_eq!(equal, (c.mesh_ratio() - 1.0).abs() <= 1e-14);
        }
    }
}
