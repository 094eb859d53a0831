//! Rectilinear room geometry.
//!
//! Rooms are simple polygons whose edges are all parallel to an axis. Vertices
//! are stored counterclockwise; the constructor normalizes the winding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance (mm) for on-boundary tests.
const BOUNDARY_EPS: f64 = 1e-9;
/// Offset used to probe scanlines just off a vertex row.
const SCAN_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("room needs at least 4 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("edge {0} is not parallel to an axis")]
    NotAxisAligned(usize),
    #[error("edge {0} has zero length")]
    DegenerateEdge(usize),
    #[error("edges {0} and {1} are collinear neighbours; merge them into one wall")]
    CollinearEdges(usize, usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

/// Unit direction for a bearing in degrees. Multiples of 90° are exact.
pub fn unit_vector(bearing_deg: f64) -> (f64, f64) {
    let b = bearing_deg.rem_euclid(360.0);
    if b == 0.0 {
        (1.0, 0.0)
    } else if b == 90.0 {
        (0.0, 1.0)
    } else if b == 180.0 {
        (-1.0, 0.0)
    } else if b == 270.0 {
        (0.0, -1.0)
    } else {
        let r = b.to_radians();
        (r.cos(), r.sin())
    }
}

/// An axis-aligned edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: Point,
    pub end: Point,
}

impl Edge {
    pub fn is_vertical(&self) -> bool {
        self.start.x == self.end.x
    }

    pub fn length(&self) -> f64 {
        self.start.distance(&self.end)
    }

    fn distance_to(&self, p: &Point) -> f64 {
        let (x0, x1) = minmax(self.start.x, self.end.x);
        let (y0, y1) = minmax(self.start.y, self.end.y);
        let cx = p.x.clamp(x0, x1);
        let cy = p.y.clamp(y0, y1);
        (p.x - cx).hypot(p.y - cy)
    }

    /// Ray parameter `t > 0` where `origin + t·dir` meets this edge.
    fn ray_hit(&self, origin: &Point, dir: (f64, f64)) -> Option<f64> {
        let (dx, dy) = dir;
        if self.is_vertical() {
            if dx.abs() < 1e-15 {
                return None;
            }
            let t = (self.start.x - origin.x) / dx;
            let y = origin.y + t * dy;
            let (y0, y1) = minmax(self.start.y, self.end.y);
            (t > BOUNDARY_EPS && y >= y0 - BOUNDARY_EPS && y <= y1 + BOUNDARY_EPS).then_some(t)
        } else {
            if dy.abs() < 1e-15 {
                return None;
            }
            let t = (self.start.y - origin.y) / dy;
            let x = origin.x + t * dx;
            let (x0, x1) = minmax(self.start.x, self.end.x);
            (t > BOUNDARY_EPS && x >= x0 - BOUNDARY_EPS && x <= x1 + BOUNDARY_EPS).then_some(t)
        }
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A closed rectilinear polygon in millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Room {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Room {
    type Error = GeometryError;

    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Room::new(v)
    }
}

impl From<Room> for Vec<Point> {
    fn from(r: Room) -> Self {
        r.vertices
    }
}

impl Room {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 4 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if a == b {
                return Err(GeometryError::DegenerateEdge(i));
            }
            if a.x != b.x && a.y != b.y {
                return Err(GeometryError::NotAxisAligned(i));
            }
        }
        let room = Room { vertices };
        let edges: Vec<Edge> = room.edges().collect();
        for i in 0..n {
            let j = (i + 1) % n;
            if edges[i].is_vertical() == edges[j].is_vertical() {
                return Err(GeometryError::CollinearEdges(i, j));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && edges_touch(&edges[i], &edges[j]) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        let mut room = room;
        if room.signed_area() < 0.0 {
            room.vertices.reverse();
        }
        Ok(room)
    }

    /// Axis-aligned rectangle with its min corner at the origin.
    pub fn rectangle(width: f64, height: f64) -> Result<Self, GeometryError> {
        Room::new(vec![
            Point::new(0.0, 0.0),
            Point::new(width, 0.0),
            Point::new(width, height),
            Point::new(0.0, height),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Edge {
            start: self.vertices[i],
            end: self.vertices[(i + 1) % n],
        })
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// (min corner, max corner) of the bounding box.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn boundary_distance(&self, p: &Point) -> f64 {
        self.edges()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inside test, boundary inclusive.
    pub fn contains(&self, p: &Point) -> bool {
        if !p.is_finite() {
            return false;
        }
        if self.boundary_distance(p) <= BOUNDARY_EPS {
            return true;
        }
        strictly_inside(&self.vertices, p)
    }

    /// Distance from `origin` along `bearing_deg` to the first wall.
    pub fn ray_cast(&self, origin: &Point, bearing_deg: f64) -> Option<f64> {
        let dir = unit_vector(bearing_deg);
        self.edges()
            .filter_map(|e| e.ray_hit(origin, dir))
            .fold(None, |best: Option<f64>, t| {
                Some(best.map_or(t, |b| b.min(t)))
            })
    }

    /// Dock position: bottom-most, then left-most vertex, offset inward by `standoff`.
    pub fn dock(&self, standoff: f64) -> Point {
        let v = self
            .vertices
            .iter()
            .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
            .expect("room has vertices");
        Point::new(v.x + standoff, v.y + standoff)
    }

    /// Corners in the canonical ring order: counterclockwise, starting at the
    /// vertex nearest the origin.
    pub fn canonical_corners(&self) -> Vec<Point> {
        canonical_ring(self.vertices.clone())
    }

    /// x-intervals along the scanline `y` where a square of half-width
    /// `clearance` centred on the point fits inside the room.
    pub fn clear_intervals(&self, y: f64, clearance: f64) -> Vec<(f64, f64)> {
        let lo = y - clearance;
        let hi = y + clearance;
        let mut probes = vec![lo + SCAN_EPS, hi - SCAN_EPS, y];
        for v in &self.vertices {
            if v.y > lo && v.y < hi {
                probes.push(v.y - SCAN_EPS);
                probes.push(v.y + SCAN_EPS);
            }
        }
        probes.retain(|py| self.vertices.iter().all(|v| v.y != *py));
        let mut acc: Option<Vec<(f64, f64)>> = None;
        for py in probes {
            let row = self.scanline(py);
            acc = Some(match acc {
                None => row,
                Some(prev) => intersect_intervals(&prev, &row),
            });
        }
        acc.unwrap_or_default()
            .into_iter()
            .map(|(a, b)| (a + clearance, b - clearance))
            .filter(|(a, b)| b >= a)
            .collect()
    }

    /// Inside intervals of the horizontal line at `y`, which must not pass
    /// through a vertex row.
    fn scanline(&self, y: f64) -> Vec<(f64, f64)> {
        let mut xs: Vec<f64> = self
            .edges()
            .filter(|e| e.is_vertical())
            .filter(|e| {
                let (y0, y1) = minmax(e.start.y, e.end.y);
                y > y0 && y < y1
            })
            .map(|e| e.start.x)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
    }

    /// True if every point of the axis-aligned segment keeps `clearance`
    /// from the walls.
    pub fn segment_clear(&self, a: &Point, b: &Point, clearance: f64) -> bool {
        let covered = |y: f64, x0: f64, x1: f64| {
            self.clear_intervals(y, clearance)
                .iter()
                .any(|(lo, hi)| *lo <= x0 + 1e-6 && *hi >= x1 - 1e-6)
        };
        if a.y == b.y {
            let (x0, x1) = minmax(a.x, b.x);
            covered(a.y, x0, x1)
        } else if a.x == b.x {
            let (y0, y1) = minmax(a.y, b.y);
            let mut ys = vec![y0, y1];
            for v in &self.vertices {
                for c in [v.y - clearance, v.y + clearance] {
                    for d in [-SCAN_EPS, SCAN_EPS] {
                        if c + d > y0 && c + d < y1 {
                            ys.push(c + d);
                        }
                    }
                }
            }
            ys.into_iter().all(|y| covered(y, a.x, a.x))
        } else {
            false
        }
    }
}

/// Reorders a ring counterclockwise starting at the point nearest the origin.
pub fn canonical_ring(mut ring: Vec<Point>) -> Vec<Point> {
    let (reverse, start) = canonical_order(&ring);
    if reverse {
        ring.reverse();
    }
    ring.rotate_left(start);
    ring
}

/// How [`canonical_ring`] reorders `ring`: whether it is reversed, and the
/// index (after any reversal) of the new first point.
pub fn canonical_order(ring: &[Point]) -> (bool, usize) {
    let n = ring.len();
    if n < 3 {
        return (false, 0);
    }
    let area: f64 = (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum();
    let reverse = area < 0.0;
    let at = |i: usize| if reverse { ring[n - 1 - i] } else { ring[i] };
    let origin = Point::default();
    let start = (0..n)
        .min_by(|&i, &j| {
            let (a, b) = (at(i), at(j));
            a.distance(&origin)
                .total_cmp(&b.distance(&origin))
                .then(a.y.total_cmp(&b.y))
                .then(a.x.total_cmp(&b.x))
        })
        .unwrap_or(0);
    (reverse, start)
}

fn strictly_inside(vertices: &[Point], p: &Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn edges_touch(a: &Edge, b: &Edge) -> bool {
    let (ax0, ax1) = minmax(a.start.x, a.end.x);
    let (ay0, ay1) = minmax(a.start.y, a.end.y);
    let (bx0, bx1) = minmax(b.start.x, b.end.x);
    let (by0, by1) = minmax(b.start.y, b.end.y);
    ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
}

fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}
