//! Wall reconstruction from a 2-D point cloud.
//!
//! Points are labeled vertical or horizontal from the spread of their nearest
//! neighbours, grouped into wall clusters, and each cluster is fitted with a
//! least-squares line. Horizontal walls use `y = a + b·x` and vertical walls
//! `x = a + b·y`, so slopes stay small for both. Adjacent vertical and
//! horizontal lines are intersected into corners and walked into a closed ring.

use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{canonical_order, Point, Room};
use crate::log::MissionLog;
use crate::sim::Species;

/// Scale factor from median absolute deviation to a Gaussian sigma.
const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("cannot fit a line to {n} points with no spread along the wall")]
    Degenerate { n: usize },
    #[error("fitted slope {b} is not below 1; the cluster is mislabeled")]
    SteepSlope { b: f64 },
    #[error("lines of the same orientation do not meet at a corner")]
    Parallel,
    #[error("lines are nearly parallel (det = {det})")]
    Singular { det: f64 },
    #[error("insufficient geometry: found {horizontal} horizontal and {vertical} vertical walls, need at least 2 of each")]
    InsufficientGeometry { horizontal: usize, vertical: usize },
    #[error("wall lines do not close into a ring: {0}")]
    OpenRing(String),
    #[error("topology mismatch: estimated ring has {estimated} corners, truth has {truth}")]
    TopologyMismatch { estimated: usize, truth: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    /// (independent, dependent) coordinates of `p` in this orientation's
    /// parameterization.
    pub fn coords(self, p: &Point) -> (f64, f64) {
        match self {
            Orientation::Horizontal => (p.x, p.y),
            Orientation::Vertical => (p.y, p.x),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WallParams {
    /// Neighbours used by the orientation test.
    pub k_neighbors: usize,
    /// Split clusters at gaps wider than this along the wall.
    pub gap_mm: f64,
    pub min_cluster_size: usize,
    /// Histogram bin for banding points across the wall.
    pub band_width_mm: f64,
    /// A bin joins a band when it holds this fraction of the fullest bin.
    pub band_fraction: f64,
    /// Reassign points to their nearest line and refit.
    pub refine: bool,
    pub refine_iterations: usize,
    /// Inlier cut in robust sigmas of a line's residuals.
    pub inlier_sigmas: f64,
    pub inlier_floor_mm: f64,
    /// Lines with less support than this fraction of the best are dropped.
    pub support_fraction: f64,
    /// How far a corner may sit beyond a line's extent.
    pub corner_tolerance_mm: f64,
    /// Lower quantile of a line's points used as its end for corner matching.
    pub extent_quantile: f64,
}

impl Default for WallParams {
    fn default() -> Self {
        Self {
            k_neighbors: 7,
            gap_mm: 300.0,
            min_cluster_size: 5,
            band_width_mm: 50.0,
            band_fraction: 0.1,
            refine: true,
            refine_iterations: 10,
            inlier_sigmas: 3.0,
            inlier_floor_mm: 1.0,
            support_fraction: 0.3,
            corner_tolerance_mm: 1000.0,
            extent_quantile: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub orientation: Orientation,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub clusters: Vec<Cluster>,
    pub rejected: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineModel {
    pub orientation: Orientation,
    pub a: f64,
    pub b: f64,
    pub support: usize,
    /// [min, max] of the independent coordinate.
    pub extent: [f64; 2],
}

impl LineModel {
    /// Dependent coordinate at independent coordinate `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.a + self.b * t
    }

    /// Perpendicular distance from `p` to the line.
    pub fn residual(&self, p: &Point) -> f64 {
        let (x, y) = self.orientation.coords(p);
        (y - self.at(x)).abs() / self.b.hypot(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallModel {
    /// `lines[i]` runs from `corners[i]` to `corners[i + 1]`.
    pub lines: Vec<LineModel>,
    /// Counterclockwise, starting at the corner nearest the origin.
    pub corners: Vec<Point>,
    pub wall_lengths: Vec<f64>,
}

impl WallModel {
    fn from_ring(lines: Vec<LineModel>, corners: Vec<Point>) -> Self {
        let n = corners.len();
        let wall_lengths = (0..n).map(|i| corners[i].distance(&corners[(i + 1) % n])).collect();
        Self { lines, corners, wall_lengths }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasError {
    pub x_mape_pct: f64,
    pub y_mape_pct: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Estimated lengths, in the truth ring's wall order.
    pub wall_lengths_mm: Vec<f64>,
    pub true_lengths_mm: Vec<f64>,
    pub wall_mape_pct: Vec<f64>,
    pub mean_wall_mape_pct: f64,
    pub corner_displacement_mm: Vec<f64>,
    pub gas: Option<GasError>,
}

/// Vertical/horizontal label per point from the spread of its `k` nearest
/// neighbours (and itself).
pub fn label_orientations(cloud: &[Point], k: usize) -> Vec<Orientation> {
    let n = cloud.len();
    if n < 2 {
        return vec![Orientation::Horizontal; n];
    }
    let coords: Vec<[f64; 2]> = cloud.iter().map(|p| [p.x, p.y]).collect();
    let tree: ImmutableKdTree<f64, 2> = ImmutableKdTree::new_from_slice(&coords);
    let qty = NonZero::new(k.min(n - 1) + 1).expect("at least one neighbour");
    coords
        .iter()
        .map(|q| {
            let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
            let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
            for nb in tree.nearest_n::<SquaredEuclidean>(q, qty) {
                let p = coords[nb.item as usize];
                xs = (xs.0.min(p[0]), xs.1.max(p[0]));
                ys = (ys.0.min(p[1]), ys.1.max(p[1]));
            }
            if ys.1 - ys.0 > xs.1 - xs.0 {
                Orientation::Vertical
            } else {
                Orientation::Horizontal
            }
        })
        .collect()
}

/// Labels points by orientation and splits each orientation into wall
/// clusters: first into bands across the wall, then at gaps along it.
pub fn group_points(cloud: &[Point], params: &WallParams) -> Grouping {
    let labels = label_orientations(cloud, params.k_neighbors);
    let mut out = Grouping::default();
    for orientation in [Orientation::Vertical, Orientation::Horizontal] {
        let members: Vec<Point> = cloud
            .iter()
            .zip(&labels)
            .filter(|(_, l)| **l == orientation)
            .map(|(p, _)| *p)
            .collect();
        for band in bands(&members, orientation, params, &mut out.rejected) {
            split_at_gaps(band, orientation, params, &mut out);
        }
    }
    out
}

fn bands(
    points: &[Point],
    orientation: Orientation,
    params: &WallParams,
    rejected: &mut Vec<Point>,
) -> Vec<Vec<Point>> {
    if points.is_empty() {
        return Vec::new();
    }
    let dep: Vec<f64> = points.iter().map(|p| orientation.coords(p).1).collect();
    let lo = dep.iter().copied().fold(f64::INFINITY, f64::min);
    let bin_of = |v: f64| ((v - lo) / params.band_width_mm).floor() as usize;
    let bins: Vec<usize> = dep.iter().map(|&v| bin_of(v)).collect();
    let mut counts = vec![0usize; bins.iter().max().map_or(0, |m| m + 1)];
    for &b in &bins {
        counts[b] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(0) as f64;
    let threshold = (params.min_cluster_size as f64).max(params.band_fraction * peak);
    let mut band_of = vec![None; counts.len()];
    let mut n_bands = 0;
    let mut in_band = false;
    for (i, &c) in counts.iter().enumerate() {
        if c as f64 >= threshold {
            if !in_band {
                n_bands += 1;
                in_band = true;
            }
            band_of[i] = Some(n_bands - 1);
        } else {
            in_band = false;
        }
    }
    let mut out = vec![Vec::new(); n_bands];
    for (p, b) in points.iter().zip(bins) {
        match band_of[b] {
            Some(i) => out[i].push(*p),
            None => rejected.push(*p),
        }
    }
    out
}

fn split_at_gaps(mut band: Vec<Point>, orientation: Orientation, params: &WallParams, out: &mut Grouping) {
    band.sort_by(|p, q| {
        let (a, b) = (orientation.coords(p), orientation.coords(q));
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
    });
    let flush = |run: Vec<Point>, out: &mut Grouping| {
        if run.len() >= params.min_cluster_size {
            out.clusters.push(Cluster { orientation, points: run });
        } else {
            out.rejected.extend(run);
        }
    };
    let mut run: Vec<Point> = Vec::new();
    for p in band {
        if let Some(last) = run.last() {
            if orientation.coords(&p).0 - orientation.coords(last).0 > params.gap_mm {
                flush(std::mem::take(&mut run), out);
            }
        }
        run.push(p);
    }
    flush(run, out);
}

/// Ordinary least squares in the cluster's own parameterization.
pub fn fit_line(cluster: &Cluster) -> Result<LineModel, MapError> {
    fit_points(cluster.orientation, cluster.points.iter())
}

fn fit_points<'a>(
    orientation: Orientation,
    points: impl Iterator<Item = &'a Point> + Clone,
) -> Result<LineModel, MapError> {
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut extent = [f64::INFINITY, f64::NEG_INFINITY];
    for p in points.clone() {
        let (x, y) = orientation.coords(p);
        n += 1;
        sx += x;
        sy += y;
        extent = [extent[0].min(x), extent[1].max(x)];
    }
    if n < 2 {
        return Err(MapError::Degenerate { n });
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in points {
        let (x, y) = orientation.coords(p);
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(MapError::Degenerate { n });
    }
    let b = sxy / sxx;
    if !(b.abs() < 1.0) {
        return Err(MapError::SteepSlope { b });
    }
    Ok(LineModel { orientation, a: my - b * mx, b, support: n, extent })
}

/// Corner where a horizontal and a vertical line meet.
pub fn intersect(l1: &LineModel, l2: &LineModel) -> Result<Point, MapError> {
    let (h, v) = match (l1.orientation, l2.orientation) {
        (Orientation::Horizontal, Orientation::Vertical) => (l1, l2),
        (Orientation::Vertical, Orientation::Horizontal) => (l2, l1),
        _ => return Err(MapError::Parallel),
    };
    let det = 1.0 - h.b * v.b;
    if det.abs() < 1e-9 {
        return Err(MapError::Singular { det });
    }
    let x = (v.a + v.b * h.a) / det;
    Ok(Point::new(x, h.at(x)))
}

/// A fitted line with the points it was fitted to.
#[derive(Debug, Clone)]
struct Support {
    line: LineModel,
    members: Vec<usize>,
}

fn fit_members(cloud: &[Point], orientation: Orientation, members: Vec<usize>) -> Option<Support> {
    let line = fit_points(orientation, members.iter().map(|&i| &cloud[i])).ok()?;
    Some(Support { line, members })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Reassigns every point to the closest line whose extent (padded by the gap
/// threshold) covers it, trims outliers and refits, until stable.
fn refine(cloud: &[Point], mut lines: Vec<Support>, params: &WallParams) -> Vec<Support> {
    for _ in 0..params.refine_iterations.max(1) {
        let mut assigned: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lines.len()];
        for (i, p) in cloud.iter().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for (j, s) in lines.iter().enumerate() {
                let t = s.line.orientation.coords(p).0;
                if t < s.line.extent[0] - params.gap_mm || t > s.line.extent[1] + params.gap_mm {
                    continue;
                }
                let r = s.line.residual(p);
                if best.is_none_or(|(_, rb)| r < rb) {
                    best = Some((j, r));
                }
            }
            if let Some((j, r)) = best {
                assigned[j].push((i, r));
            }
        }
        let mut next = Vec::with_capacity(lines.len());
        for (s, members) in lines.iter().zip(assigned) {
            if members.len() < params.min_cluster_size {
                continue;
            }
            let mut rs: Vec<f64> = members.iter().map(|m| m.1).collect();
            let tol = (params.inlier_sigmas * MAD_TO_SIGMA * median(&mut rs)).max(params.inlier_floor_mm);
            let keep: Vec<usize> = members.iter().filter(|m| m.1 <= tol).map(|m| m.0).collect();
            if keep.len() < params.min_cluster_size {
                continue;
            }
            if let Some(f) = fit_members(cloud, s.line.orientation, keep) {
                next.push(f);
            }
        }
        let stable = next.len() == lines.len()
            && next.iter().zip(&lines).all(|(a, b)| a.members == b.members);
        lines = next;
        if stable {
            break;
        }
    }
    lines
}

fn drop_weak(lines: &mut Vec<Support>, fraction: f64) -> bool {
    let max = lines.iter().map(|s| s.line.support).max().unwrap_or(0);
    let before = lines.len();
    lines.retain(|s| s.line.support as f64 >= fraction * max as f64);
    lines.len() != before
}

fn prune(cloud: &[Point], mut lines: Vec<Support>, params: &WallParams) -> Vec<Support> {
    drop_weak(&mut lines, params.support_fraction);
    for _ in 0..5 {
        lines = refine(cloud, lines, params);
        if !drop_weak(&mut lines, params.support_fraction) {
            break;
        }
    }
    lines
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Fitted lines with robust end positions for corner matching.
struct RingLine {
    line: LineModel,
    ends: [f64; 2],
}

fn ring_lines(cloud: &[Point], lines: Vec<Support>, params: &WallParams) -> Vec<RingLine> {
    lines
        .into_iter()
        .map(|s| {
            let mut t: Vec<f64> = s
                .members
                .iter()
                .map(|&i| s.line.orientation.coords(&cloud[i]).0)
                .collect();
            t.sort_by(f64::total_cmp);
            let q = params.extent_quantile.clamp(0.0, 0.5);
            RingLine { line: s.line, ends: [quantile(&t, q), quantile(&t, 1.0 - q)] }
        })
        .collect()
}

/// Links each line end to the best-matching perpendicular line, keeps mutual
/// links and walks them into a cycle from the best-supported line.
fn close_ring(lines: &[RingLine], tol: f64) -> Result<Vec<usize>, MapError> {
    let n = lines.len();
    let end_of = |l: &RingLine, c: &Point| -> Option<(usize, f64)> {
        let t = l.line.orientation.coords(c).0;
        let d0 = (t - l.ends[0]).abs();
        let d1 = (t - l.ends[1]).abs();
        let (e, d) = if d0 <= d1 { (0, d0) } else { (1, d1) };
        (d <= tol).then_some((e, d))
    };
    let mut best: Vec<[Option<(f64, usize)>; 2]> = vec![[None, None]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let Ok(c) = intersect(&lines[i].line, &lines[j].line) else { continue };
            let (Some((ei, di)), Some((ej, dj))) = (end_of(&lines[i], &c), end_of(&lines[j], &c)) else {
                continue;
            };
            let score = di + dj;
            for (a, e, b) in [(i, ei, j), (j, ej, i)] {
                if best[a][e].is_none_or(|(s, _)| score < s) {
                    best[a][e] = Some((score, b));
                }
            }
        }
    }
    let links = |a: usize| best[a].iter().flatten().map(|&(_, b)| b).collect::<Vec<_>>();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in links(a) {
            if links(b).contains(&a) && !adj[a].contains(&b) {
                adj[a].push(b);
            }
        }
        adj[a].sort_unstable();
    }
    let start = (0..n)
        .max_by(|&i, &j| lines[i].line.support.cmp(&lines[j].line.support).then(j.cmp(&i)))
        .ok_or_else(|| MapError::OpenRing("no lines".into()))?;
    let mut cycle = vec![start];
    let mut prev = None;
    let mut cur = start;
    loop {
        let next = adj[cur]
            .iter()
            .copied()
            .find(|&m| Some(m) != prev)
            .ok_or_else(|| MapError::OpenRing(format!("wall {} has a free end", cycle.len())))?;
        if next == start {
            break;
        }
        if cycle.contains(&next) {
            return Err(MapError::OpenRing("walls form a loop that misses the start".into()));
        }
        cycle.push(next);
        prev = Some(cur);
        cur = next;
    }
    if cycle.len() < 4 {
        return Err(MapError::OpenRing(format!("only {} walls link up", cycle.len())));
    }
    Ok(cycle)
}

/// Full pipeline: group, fit, refine, link and order.
pub fn extract_walls(cloud: &[Point], params: &WallParams) -> Result<WallModel, MapError> {
    let grouping = group_points(cloud, params);
    let mut pooled = Vec::new();
    let mut seeds = Vec::new();
    for c in &grouping.clusters {
        let members = (pooled.len()..pooled.len() + c.points.len()).collect();
        pooled.extend_from_slice(&c.points);
        if let Some(s) = fit_members(&pooled, c.orientation, members) {
            seeds.push(s);
        }
    }
    let (points, supports) = if params.refine {
        let seeds = seeds.into_iter().map(|s| Support { members: Vec::new(), ..s }).collect();
        (cloud, prune(cloud, seeds, params))
    } else {
        (pooled.as_slice(), seeds)
    };
    let count = |o| supports.iter().filter(|s| s.line.orientation == o).count();
    let (horizontal, vertical) = (count(Orientation::Horizontal), count(Orientation::Vertical));
    if horizontal < 2 || vertical < 2 {
        return Err(MapError::InsufficientGeometry { horizontal, vertical });
    }
    let rl = ring_lines(points, supports, params);
    let cycle = close_ring(&rl, params.corner_tolerance_mm)?;
    let mut ring: Vec<LineModel> = cycle.iter().map(|&i| rl[i].line).collect();
    let corners_of = |ring: &[LineModel]| -> Result<Vec<Point>, MapError> {
        (0..ring.len()).map(|i| intersect(&ring[i], &ring[(i + 1) % ring.len()])).collect()
    };
    let mut corners = corners_of(&ring)?;
    if canonical_order(&corners).0 {
        ring.reverse();
        corners = corners_of(&ring)?;
    }
    let (_, start) = canonical_order(&corners);
    corners.rotate_left(start);
    // corner i closes line i and opens line i + 1
    let shift = (start + 1) % ring.len();
    ring.rotate_left(shift);
    Ok(WallModel::from_ring(ring, corners))
}

/// Compares an estimated model with the true room after aligning the rings
/// (rotation or reflection) for minimum total corner displacement.
pub fn evaluate_map(
    estimated: &WallModel,
    truth: &Room,
    gas_truth: Option<&[Point]>,
    gas_estimated: Option<&[Point]>,
) -> Result<ErrorReport, MapError> {
    let t = truth.canonical_corners();
    let e = &estimated.corners;
    let n = t.len();
    if e.len() != n {
        return Err(MapError::TopologyMismatch { estimated: e.len(), truth: n });
    }
    let mut best: Option<(f64, Vec<Point>)> = None;
    for reflect in [false, true] {
        for r in 0..n {
            let aligned: Vec<Point> = (0..n)
                .map(|i| if reflect { e[(r + n - i) % n] } else { e[(r + i) % n] })
                .collect();
            let cost: f64 = aligned.iter().zip(&t).map(|(a, b)| a.distance(b)).sum();
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, aligned));
            }
        }
    }
    let aligned = best.map(|b| b.1).unwrap_or_default();
    let side = |ring: &[Point], i: usize| ring[i].distance(&ring[(i + 1) % n]);
    let wall_lengths_mm: Vec<f64> = (0..n).map(|i| side(&aligned, i)).collect();
    let true_lengths_mm: Vec<f64> = (0..n).map(|i| side(&t, i)).collect();
    let wall_mape_pct: Vec<f64> = wall_lengths_mm
        .iter()
        .zip(&true_lengths_mm)
        .map(|(e, t)| (e - t).abs() / t * 100.0)
        .collect();
    let mean_wall_mape_pct = wall_mape_pct.iter().sum::<f64>() / n.max(1) as f64;
    let corner_displacement_mm = aligned.iter().zip(&t).map(|(a, b)| a.distance(b)).collect();
    let gas = match (gas_truth, gas_estimated) {
        (Some(tr), Some(es)) if !tr.is_empty() && !es.is_empty() => Some(gas_error(tr, es)),
        _ => None,
    };
    Ok(ErrorReport {
        wall_lengths_mm,
        true_lengths_mm,
        wall_mape_pct,
        mean_wall_mape_pct,
        corner_displacement_mm,
        gas,
    })
}

/// Per-axis MAPE of each true source against its nearest estimated peak,
/// relative to the true coordinate.
fn gas_error(truth: &[Point], estimated: &[Point]) -> GasError {
    let (mut ex, mut ey) = (0.0, 0.0);
    for t in truth {
        let e = estimated
            .iter()
            .min_by(|a, b| a.distance(t).total_cmp(&b.distance(t)))
            .expect("non-empty");
        ex += (e.x - t.x).abs() / t.x.abs() * 100.0;
        ey += (e.y - t.y).abs() / t.y.abs() * 100.0;
    }
    let n = truth.len() as f64;
    GasError { x_mape_pct: ex / n, y_mape_pct: ey / n, pairs: truth.len() }
}

/// Sample positions that are strict local maxima of `species` over the sweep
/// grid, strongest first, then earliest.
pub fn locate_gas_peaks(log: &MissionLog, species: Species) -> Vec<Point> {
    let dx = log.meta.plan.sample_spacing_mm + 1.0;
    let dy = log.meta.plan.lane_spacing_mm + 1.0;
    let frames = &log.frames;
    let mut peaks: Vec<(f64, u64, Point)> = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        let v = f.frame.species(species);
        let mut neighbours = frames.iter().enumerate().filter(|(j, g)| {
            *j != i && (g.pose.x - f.pose.x).abs() <= dx && (g.pose.y - f.pose.y).abs() <= dy
        });
        let mut any = false;
        let strict = neighbours.all(|(_, g)| {
            any = true;
            v > g.frame.species(species)
        });
        if any && strict {
            peaks.push((v, f.frame.timestamp, f.pose.position()));
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    peaks.into_iter().map(|p| p.2).collect()
}

/// Reads whitespace- or comma-separated `x y` pairs, one per line. Blank lines
/// and `#` comments are skipped.
pub fn parse_xy(text: &str) -> Result<Vec<Point>, MapError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| MapError::Parse { line: i + 1, message };
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(parse_err(format!("expected 2 columns, found {}", fields.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("not a finite number: {s:?}")))
        };
        out.push(Point::new(num(fields[0])?, num(fields[1])?));
    }
    Ok(out)
}
