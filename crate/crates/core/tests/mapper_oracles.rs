use aeromap_core::geometry::{unit_vector, Point, Room};
use aeromap_core::mapper::*;
use aeromap_core::sim::{run_sweep, sense_distance, GasSource, Pose, Species, SweepPlan, World};
use aeromap_core::units::quantize;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn boundary(room: &Room, step: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for e in room.edges() {
        let n = (e.length() / step).round() as usize;
        for i in 0..n {
            let f = i as f64 / n as f64;
            out.push(Point::new(
                e.start.x + f * (e.end.x - e.start.x),
                e.start.y + f * (e.end.y - e.start.y),
            ));
        }
    }
    out
}

fn l_room() -> Room {
    Room::new(vec![
        Point::new(0.0, 0.0),
        Point::new(6000.0, 0.0),
        Point::new(6000.0, 2000.0),
        Point::new(3000.0, 2000.0),
        Point::new(3000.0, 4000.0),
        Point::new(0.0, 4000.0),
    ])
    .unwrap()
}

/// Normal equations solved by Cramer's rule on raw sums.
fn normal_equations(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
}

fn sse(pts: &[(f64, f64)], a: f64, b: f64) -> f64 {
    pts.iter().map(|(x, y)| (y - a - b * x).powi(2)).sum()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn ols_matches_normal_equations_and_beats_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (a0, b0) = (rng.random_range(-5000.0..5000.0), rng.random_range(-0.5..0.5));
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|_| {
                let x: f64 = rng.random_range(-1000.0..5000.0);
                (x, a0 + b0 * x + rng.random_range(-30.0..30.0))
            })
            .collect();
        let cluster = Cluster {
            orientation: Orientation::Horizontal,
            points: pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        };
        let fit = fit_line(&cluster).unwrap();
        let (a, b) = normal_equations(&pts);
        assert!(rel(fit.a, a) < 1e-9 && rel(fit.b, b) < 1e-9, "{fit:?} vs {a} {b}");
        let best = sse(&pts, fit.a, fit.b);
        for i in -100..=100 {
            for j in -100..=100 {
                let cand = sse(&pts, fit.a + i as f64 * 0.5, fit.b + j as f64 * 1e-4);
                assert!(best <= cand * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn small_fit_example_against_oracle() {
    let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)];
    let (a, b) = normal_equations(&pts);
    assert!((a - 1.0 / 6.0).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
}

/// Which wall of the 4000×3000 room a ray from its centre hits: 0 right,
/// 1 top, 2 left, 3 bottom.
fn wall_hit(bearing: f64) -> usize {
    let (c, s) = (bearing.to_radians().cos(), bearing.to_radians().sin());
    let tx = if c.abs() < 1e-12 { f64::INFINITY } else { 2000.0 / c.abs() };
    let ty = if s.abs() < 1e-12 { f64::INFINITY } else { 1500.0 / s.abs() };
    if tx < ty {
        if c > 0.0 { 0 } else { 2 }
    } else if s > 0.0 {
        1
    } else {
        3
    }
}

#[test]
fn centre_scan_clusters_match_wall_enumeration() {
    let world = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
    let pose = Pose::new(2000.0, 1500.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut expected = [0usize; 4];
    let mut pts = Vec::new();
    for b in 0..360 {
        let b = b as f64;
        expected[wall_hit(b)] += 1;
        let r = sense_distance(&world, &pose, b, false, &mut rng).unwrap();
        let (dx, dy) = unit_vector(b);
        pts.push(Point::new(quantize(2000.0 + r * dx), quantize(1500.0 + r * dy)));
    }
    assert_eq!(expected, [73, 107, 73, 107]);
    let g = group_points(&pts, &WallParams::default());
    assert!(g.rejected.is_empty());
    let mut got = [0usize; 4];
    for c in &g.clusters {
        let p = c.points[0];
        let wall = match c.orientation {
            Orientation::Vertical if p.x > 2000.0 => 0,
            Orientation::Vertical => 2,
            Orientation::Horizontal if p.y > 1500.0 => 1,
            Orientation::Horizontal => 3,
        };
        got[wall] += c.points.len();
    }
    assert_eq!(g.clusters.len(), 4);
    assert_eq!(got, expected);
}

#[test]
fn noiseless_sweep_reproduces_rectangle() {
    let world = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
    let log = run_sweep(&world, &SweepPlan::default(), false, ChaCha8Rng::seed_from_u64(1)).unwrap();
    for range in [None, Some(2000.0)] {
        let pts: Vec<Point> = log.point_cloud(range).iter().map(|p| p.position()).collect();
        let m = extract_walls(&pts, &WallParams::default()).unwrap();
        for (c, t) in m.corners.iter().zip(world.room.canonical_corners()) {
            assert!(c.distance(&t) <= 1e-3, "{c:?} vs {t:?}");
        }
        for (l, t) in m.wall_lengths.iter().zip([4000.0, 3000.0, 4000.0, 3000.0]) {
            assert!((l - t).abs() <= 1e-3);
        }
    }
}

#[test]
fn noiseless_sweep_reproduces_l_room() {
    let world = World::new(l_room());
    let log = run_sweep(&world, &SweepPlan::default(), false, ChaCha8Rng::seed_from_u64(1)).unwrap();
    let pts: Vec<Point> = log.point_cloud(None).iter().map(|p| p.position()).collect();
    let m = extract_walls(&pts, &WallParams::default()).unwrap();
    assert_eq!(m.corners.len(), 6);
    for (c, t) in m.corners.iter().zip(world.room.canonical_corners()) {
        assert!(c.distance(&t) <= 1e-3, "{c:?} vs {t:?}");
    }
}

#[test]
fn plain_clustering_without_refinement_is_exact_on_clean_boundaries() {
    let params = WallParams { refine: false, ..WallParams::default() };
    let m = extract_walls(&boundary(&Room::rectangle(4000.0, 3000.0).unwrap(), 10.0), &params).unwrap();
    assert_eq!(m.corners[2], Point::new(4000.0, 3000.0));
}

#[test]
fn evaluating_a_model_against_itself_is_zero() {
    for room in [Room::rectangle(4000.0, 3000.0).unwrap(), l_room()] {
        let m = extract_walls(&boundary(&room, 10.0), &WallParams::default()).unwrap();
        let r = evaluate_map(&m, &room, None, None).unwrap();
        assert!(r.mean_wall_mape_pct < 1e-9);
        assert!(r.corner_displacement_mm.iter().all(|d| *d < 1e-9));
    }
}

fn gas_world(sources: &[(f64, f64, Species)]) -> World {
    let mut w = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
    w.gas_sources = sources
        .iter()
        .map(|&(x, y, species)| GasSource {
            position: Point::new(x, y),
            species,
            amplitude: 600.0,
            spread_mm: 500.0,
            drift_mm: Point::default(),
        })
        .collect();
    w
}

#[test]
fn single_source_peak_is_nearest_sample() {
    let w = gas_world(&[(1130.0, 980.0, Species::Co2)]);
    let plan = SweepPlan { scan_every: 0, ..SweepPlan::default() };
    let log = run_sweep(&w, &plan, false, ChaCha8Rng::seed_from_u64(0)).unwrap();
    let peaks = locate_gas_peaks(&log, Species::Co2);
    let src = Point::new(1130.0, 980.0);
    let nearest = log
        .frames
        .iter()
        .map(|f| f.pose.position())
        .min_by(|a, b| a.distance(&src).total_cmp(&b.distance(&src)))
        .unwrap();
    assert_eq!(peaks, vec![nearest]);
    assert!(locate_gas_peaks(&log, Species::Voc).is_empty());
}

#[test]
fn two_sources_resolve_within_half_cell_diagonal() {
    let srcs = [(900.0, 800.0), (3100.0, 2200.0)];
    let w = gas_world(&[(srcs[0].0, srcs[0].1, Species::Smoke), (srcs[1].0, srcs[1].1, Species::Smoke)]);
    let plan = SweepPlan { lane_spacing_mm: 250.0, sample_spacing_mm: 250.0, scan_every: 0, scan_increment_deg: 1 };
    let log = run_sweep(&w, &plan, false, ChaCha8Rng::seed_from_u64(0)).unwrap();
    let peaks = locate_gas_peaks(&log, Species::Smoke);
    assert_eq!(peaks.len(), 2);
    for (x, y) in srcs {
        let s = Point::new(x, y);
        let d = peaks.iter().map(|p| p.distance(&s)).fold(f64::INFINITY, f64::min);
        assert!(d <= 125.0 * 2f64.sqrt(), "{d}");
    }
}

fn noisy_rectangle(w: f64, h: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    boundary(&Room::rectangle(w, h).unwrap(), 20.0)
        .into_iter()
        .map(|p| Point::new(p.x + rng.random_range(-8.0..8.0), p.y + rng.random_range(-8.0..8.0)))
        .collect()
}

fn transpose(p: &Point) -> Point {
    Point::new(p.y, p.x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transposition_swaps_orientations(w in 2000u32..6000, h in 2000u32..6000, seed in any::<u64>()) {
        let cloud = noisy_rectangle(w as f64, h as f64, seed);
        let params = WallParams::default();
        let key = |c: &Cluster| (c.orientation == Orientation::Vertical, c.points.len(), c.points[0].x.to_bits(), c.points[0].y.to_bits());
        let mut a = group_points(&cloud, &params).clusters;
        let t: Vec<Point> = cloud.iter().map(transpose).collect();
        let mut b: Vec<Cluster> = group_points(&t, &params)
            .clusters
            .into_iter()
            .map(|c| Cluster { orientation: c.orientation.other(), points: c.points.iter().map(transpose).collect() })
            .collect();
        a.sort_by_key(key);
        b.sort_by_key(key);
        prop_assert_eq!(&a, &b);
        for (ca, cb) in a.iter().zip(&b) {
            let la = fit_line(ca).unwrap();
            let transposed = Cluster { orientation: cb.orientation.other(), points: cb.points.iter().map(transpose).collect() };
            let lb = fit_line(&transposed).unwrap();
            prop_assert_eq!(la.orientation.other(), lb.orientation);
            prop_assert_eq!((la.a, la.b, la.support, la.extent), (lb.a, lb.b, lb.support, lb.extent));
        }
    }

    #[test]
    fn translation_moves_corners(
        w in 1500u32..6000, h in 1500u32..6000,
        dx in -10_000i32..10_000, dy in -10_000i32..10_000,
    ) {
        let room = Room::rectangle(w as f64, h as f64).unwrap();
        let cloud = boundary(&room, 10.0);
        let base = extract_walls(&cloud, &WallParams::default()).unwrap();
        let moved: Vec<Point> = cloud.iter().map(|p| Point::new(p.x + dx as f64, p.y + dy as f64)).collect();
        let shifted = extract_walls(&moved, &WallParams::default()).unwrap();
        // the canonical start corner can change with the origin, so compare as a set
        for c in &base.corners {
            let target = Point::new(c.x + dx as f64, c.y + dy as f64);
            let d = shifted.corners.iter().map(|s| s.distance(&target)).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-9);
        }
    }
}
