//! Geometry of the hypercubic lattice: points, canonical nearest-neighbour
//! edges, norms, the l1 confinement ellipse and infinite cylinders.

use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lattice dimension supported by the fixed-capacity coordinates.
pub const MAX_DIM: usize = 8;

/// Extra l1 slack added to confinement budgets used for searching.
pub const CONFINEMENT_MARGIN: f64 = 2.0;

pub type Coords = ArrayVec<i64, MAX_DIM>;

/// A vertex of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Coords);

impl Point {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.len() < 2 || coords.len() > MAX_DIM {
            return Err(Error::Dimension(format!(
                "point dimension {} outside [2, {MAX_DIM}]",
                coords.len()
            )));
        }
        Ok(Point(coords.iter().copied().collect()))
    }

    /// The origin of Z^d.
    pub fn origin(dim: usize) -> Result<Self> {
        Point::new(&vec![0; dim])
    }

    /// `length * e_0`, the usual on-axis target.
    pub fn on_axis(dim: usize, length: i64) -> Result<Self> {
        let mut c = vec![0; dim];
        c[0] = length;
        Point::new(&c)
    }

    pub(crate) fn from_coords(coords: Coords) -> Self {
        debug_assert!(coords.len() >= 2);
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn l1_distance(&self, other: &Point) -> i64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    fn check_dim(&self, other: &Point) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A nearest-neighbour edge in canonical form: the lexicographically smaller
/// endpoint plus the axis along which the other endpoint lies.
///
/// The derived ordering (base, then axis) is the canonical edge key order used
/// for deterministic tie-breaking and for sorted output.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    base: Point,
    axis: usize,
}

impl Edge {
    pub fn new(base: Point, axis: usize) -> Result<Self> {
        if axis >= base.dim() {
            return Err(Error::Dimension(format!(
                "axis {axis} out of range for dimension {}",
                base.dim()
            )));
        }
        Ok(Edge { base, axis })
    }

    /// Canonical edge between two adjacent vertices.
    pub fn between(u: &Point, v: &Point) -> Result<Self> {
        u.check_dim(v)?;
        let diff = v.sub(u);
        if diff.l1_norm() != 1 {
            return Err(Error::NotAdjacent(Box::new(u.clone()), Box::new(v.clone())));
        }
        let axis = diff.coords().iter().position(|&c| c != 0).expect("unit step");
        let base = if diff.coords()[axis] > 0 { u.clone() } else { v.clone() };
        Ok(Edge { base, axis })
    }

    pub(crate) fn from_raw(base: &[i64], axis: usize) -> Self {
        Edge {
            base: Point(base.iter().copied().collect()),
            axis,
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The endpoint other than `base`.
    pub fn head(&self) -> Point {
        let mut c = self.base.0.clone();
        c[self.axis] += 1;
        Point(c)
    }

    /// Midpoint of the edge.
    pub fn center(&self) -> Vec<f64> {
        let mut c = self.base.as_f64();
        c[self.axis] += 0.5;
        c
    }

    pub fn translate(&self, shift: &Point) -> Edge {
        Edge {
            base: self.base.add(shift),
            axis: self.axis,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        *p == self.base || *p == self.head()
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+e{}", self.base, self.axis)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+e{}", self.base, self.axis)
    }
}

/// Euclidean distance between edge midpoints.
pub fn edge_center_distance(e: &Edge, f: &Edge) -> Result<f64> {
    e.base.check_dim(&f.base)?;
    Ok(center_distance_unchecked(e, f))
}

pub(crate) fn center_distance_unchecked(e: &Edge, f: &Edge) -> f64 {
    let mut s = 0.0;
    for i in 0..e.dim() {
        let mut x = (e.base.0[i] - f.base.0[i]) as f64;
        if i == e.axis {
            x += 0.5;
        }
        if i == f.axis {
            x -= 0.5;
        }
        s += x * x;
    }
    s.sqrt()
}

/// The l1 ellipse `{w : |w - source|_1 + |w - sink|_1 <= budget}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementRegion {
    pub source: Point,
    pub sink: Point,
    pub budget: f64,
}

impl ConfinementRegion {
    pub fn contains(&self, w: &Point) -> bool {
        self.contains_coords(w.coords())
    }

    pub fn contains_coords(&self, w: &[i64]) -> bool {
        let s: i64 = w
            .iter()
            .zip(self.source.coords())
            .zip(self.sink.coords())
            .map(|((x, a), b)| (x - a).abs() + (x - b).abs())
            .sum();
        (s as f64) <= self.budget
    }

    /// Same foci, budget enlarged by `extra`.
    pub fn expanded(&self, extra: f64) -> Self {
        ConfinementRegion {
            budget: self.budget + extra,
            ..self.clone()
        }
    }

    /// Per-axis inclusive bounding box of the region.
    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let slack = ((self.budget - self.source.l1_distance(&self.sink) as f64) / 2.0)
            .max(0.0)
            .floor() as i64;
        let lo = self
            .source
            .coords()
            .iter()
            .zip(self.sink.coords())
            .map(|(a, b)| a.min(b) - slack)
            .collect();
        let hi = self
            .source
            .coords()
            .iter()
            .zip(self.sink.coords())
            .map(|(a, b)| a.max(b) + slack)
            .collect();
        (lo, hi)
    }
}

/// Region guaranteed to contain every geodesic between `u` and `v` when all
/// weights lie in `[a, b]`: budget `(b/a) |u - v|_1`.
pub fn confinement_region(u: &Point, v: &Point, a: f64, b: f64) -> Result<ConfinementRegion> {
    u.check_dim(v)?;
    if !(a > 0.0) || !(b >= a) {
        return Err(Error::InvalidParameter(format!(
            "confinement needs 0 < a <= b, got a={a}, b={b}"
        )));
    }
    Ok(ConfinementRegion {
        source: u.clone(),
        sink: v.clone(),
        budget: (b / a) * u.l1_distance(v) as f64,
    })
}

/// The infinite cylinder of radius `radius` around the line through the
/// origin spanned by `direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder {
    unit: Vec<f64>,
    radius: f64,
}

impl Cylinder {
    pub fn new(direction: &Point, radius: f64) -> Result<Self> {
        Ok(Cylinder {
            unit: unit_vector(direction)?,
            radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn axis_unit(&self) -> &[f64] {
        &self.unit
    }

    pub fn contains(&self, w: &Point) -> bool {
        transversal_distance(&self.unit, w.coords()) <= self.radius
    }
}

/// `v / |v|`.
pub fn unit_vector(v: &Point) -> Result<Vec<f64>> {
    if v.is_zero() {
        return Err(Error::ZeroDirection);
    }
    let n = v.l2_norm();
    Ok(v.coords().iter().map(|&c| c as f64 / n).collect())
}

/// Inner product of `w` with a unit vector.
pub fn projection(unit: &[f64], w: &[i64]) -> f64 {
    unit.iter().zip(w).map(|(u, &x)| u * x as f64).sum()
}

/// Euclidean distance from `w` to the line spanned by `unit`.
pub fn transversal_distance(unit: &[f64], w: &[i64]) -> f64 {
    let t = projection(unit, w);
    unit.iter()
        .zip(w)
        .map(|(u, &x)| {
            let r = x as f64 - t * u;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Points `u` with `0 <= (u, v/|v|) <= ell` lying in `cyl(0, v, r)`, in input order.
pub fn cylinder_slab_filter(points: &[Point], v: &Point, ell: f64, r: f64) -> Result<Vec<Point>> {
    let unit = unit_vector(v)?;
    if !(ell > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slab filter needs ell > 0 and r >= 0, got ell={ell}, r={r}"
        )));
    }
    Ok(points
        .iter()
        .filter(|u| in_slab_cylinder(&unit, u.coords(), ell, r))
        .cloned()
        .collect())
}

pub(crate) fn in_slab_cylinder(unit: &[f64], u: &[i64], ell: f64, r: f64) -> bool {
    let t = projection(unit, u);
    (0.0..=ell).contains(&t) && transversal_distance(unit, u) <= r
}

/// All lattice edges with at least one endpoint in `cyl(0, v, r)` intersected
/// with the slab `0 <= (x, v/|v|) <= ell`, sorted canonically.
pub fn cylinder_slab_edges(v: &Point, ell: f64, r: f64) -> Result<Vec<Edge>> {
    let unit = unit_vector(v)?;
    let d = v.dim();
    // Every such point satisfies |x_i| <= ell*|unit_i| + r.
    let ext: Vec<i64> = unit
        .iter()
        .map(|u| (ell * u.abs() + r).ceil() as i64 + 1)
        .collect();
    let lo: Vec<i64> = ext.iter().map(|e| -e).collect();
    let mut edges = std::collections::BTreeSet::new();
    for_each_in_box(&lo, &ext, |c| {
        if in_slab_cylinder(&unit, c, ell, r) {
            for axis in 0..d {
                edges.insert(Edge::from_raw(c, axis));
                let mut b = c.to_vec();
                b[axis] -= 1;
                edges.insert(Edge::from_raw(&b, axis));
            }
        }
    });
    Ok(edges.into_iter().collect())
}

/// Visits every integer point of the inclusive box `[lo, hi]` in row-major order.
pub(crate) fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut cur: Vec<i64> = lo.to_vec();
    loop {
        f(&cur);
        let mut i = cur.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < hi[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = lo[i];
        }
    }
}
