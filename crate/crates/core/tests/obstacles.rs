mod common;

use common::max_abs_diff;
use hopf_plan::oracles::fd_gradient;
use hopf_plan::{decompose_region, Motion, MovingBall, ObstacleSet, RasterRegion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scene(dim: usize, rng: &mut ChaCha8Rng) -> ObstacleSet {
    let balls = (0..4)
        .map(|_| {
            let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let radius = rng.gen_range(0.2..0.8);
            match rng.gen_range(0..3) {
                0 => MovingBall::fixed(center, radius),
                1 => MovingBall::rotating(center, radius, vec![0.3; dim], rng.gen_range(-2.0..2.0)),
                _ => MovingBall {
                    center,
                    radius,
                    motion: Motion::Linear {
                        velocity: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    },
                },
            }
        })
        .collect();
    ObstacleSet::new(dim, balls)
        .unwrap()
        .with_steepness(5.0)
        .unwrap()
}

#[test]
fn smooth_indicator_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < 1000 {
        let dim = 2 + checked % 2;
        let obs = scene(dim, &mut rng);
        let t = rng.gen_range(0.0..3.0);
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        // the max over balls is not differentiable where two balls tie
        let mut d: Vec<f64> = obs
            .balls()
            .iter()
            .map(|b| {
                let c = b.center_at(t);
                b.radius - (0..dim).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        d.sort_by(|a, b| b.total_cmp(a));
        if d[0] - d[1] < 1e-3 {
            continue;
        }
        let g = obs.smooth_gradient(&x, t);
        let fd = fd_gradient(|y| obs.smooth_indicator(y, t), &x, 1e-5);
        assert!(max_abs_diff(&g, &fd) <= 1e-4, "{g:?} vs {fd:?}");
        checked += 1;
    }
}

#[test]
fn unit_ball_gradient_points_outward() {
    let obs = ObstacleSet::new(2, vec![MovingBall::fixed(vec![0.0, 0.0], 1.0)]).unwrap();
    assert_eq!(obs.steepness(), 100.0);
    assert!((obs.smooth_indicator(&[1.0, 0.0], 0.0) - 0.5).abs() < 1e-15);
    let g = obs.smooth_gradient(&[1.0, 0.0], 0.0);
    assert!(max_abs_diff(&g, &[50.0, 0.0]) < 1e-12);
}

#[test]
fn rotating_ball_matches_static_ball_at_rotated_center() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let center = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let pivot = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let rate = rng.gen_range(-2.0..2.0);
        let t: f64 = rng.gen_range(0.0..5.0);
        let moving = ObstacleSet::new(
            2,
            vec![MovingBall::rotating(
                center.clone(),
                0.4,
                pivot.clone(),
                rate,
            )],
        )
        .unwrap();
        let (s, c) = (rate * t).sin_cos();
        let (dx, dy) = (center[0] - pivot[0], center[1] - pivot[1]);
        let rotated = vec![pivot[0] + c * dx - s * dy, pivot[1] + s * dx + c * dy];
        let fixed = ObstacleSet::new(2, vec![MovingBall::fixed(rotated, 0.4)]).unwrap();
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        assert!((moving.signed_distance(&x, t) - fixed.signed_distance(&x, 0.0)).abs() < 1e-12);
        assert!((moving.smooth_indicator(&x, t) - fixed.smooth_indicator(&x, 0.0)).abs() < 1e-12);
    }
}

#[test]
fn positive_rate_turns_counterclockwise() {
    let b = MovingBall::rotating(vec![1.0, 0.0], 0.2, vec![0.0, 0.0], 1.0);
    let c = b.center_at(std::f64::consts::FRAC_PI_2);
    assert!(c[0].abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
}

#[test]
fn indicators_agree_away_from_boundaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let obs = scene(2, &mut rng).with_steepness(100.0).unwrap();
    for _ in 0..2000 {
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let t = rng.gen_range(0.0..3.0);
        let d = obs.signed_distance(&x, t);
        if d.abs() < 0.05 {
            continue;
        }
        let smooth = obs.smooth_indicator(&x, t);
        assert!((smooth - obs.indicator(&x, t) as f64).abs() < 1e-4);
    }
}

#[test]
fn empty_set_is_free_everywhere() {
    let obs = ObstacleSet::empty(3);
    assert_eq!(obs.smooth_indicator(&[0.0, 0.0, 0.0], 1.0), 1.0);
    assert_eq!(obs.indicator(&[5.0, -1.0, 2.0], 0.0), 1);
    assert_eq!(obs.smooth_gradient(&[0.0, 0.0, 0.0], 0.0), vec![0.0; 3]);
}

#[test]
fn invalid_balls_are_rejected() {
    assert!(ObstacleSet::new(2, vec![MovingBall::fixed(vec![0.0, 0.0], -1.0)]).is_err());
    assert!(ObstacleSet::new(2, vec![MovingBall::fixed(vec![0.0, 0.0, 0.0], 1.0)]).is_err());
    assert!(ObstacleSet::empty(2).with_steepness(0.0).is_err());
}

/// Largest interior radius by brute force: distance from each occupied cell
/// center to the nearest free cell center (the grid is padded by a free
/// ring), less half a cell.
fn brute_force_max_radius(region: &RasterRegion) -> f64 {
    let dims = region.dims();
    let (nx, ny) = (dims[0] as i64, dims[1] as i64);
    let occ = |i: i64, j: i64| {
        i >= 0 && j >= 0 && i < nx && j < ny && region.occupancy()[(i + nx * j) as usize]
    };
    let mut best: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if !occ(i, j) {
                continue;
            }
            let mut d2 = f64::INFINITY;
            for b in -1..=ny {
                for a in -1..=nx {
                    if !occ(a, b) {
                        d2 = d2.min(((a - i).pow(2) + (b - j).pow(2)) as f64);
                    }
                }
            }
            best = best.max(d2.sqrt());
        }
    }
    (best - 0.5) * region.cell_size()
}

fn check_decomposition(region: &RasterRegion, balls: &[MovingBall], r_min: f64) {
    let h = region.cell_size();
    for b in balls {
        assert!(b.radius >= r_min);
        assert!(
            region.contains(&b.center),
            "center {:?} outside region",
            b.center
        );
    }
    for (i, a) in balls.iter().enumerate() {
        for b in &balls[i + 1..] {
            let d = max_dist(&a.center, &b.center);
            assert!(d >= a.radius + b.radius - 2.0 * h, "overlap: {a:?} {b:?}");
        }
    }
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn disk_gives_one_ball() {
    let region = RasterRegion::from_fn(vec![-1.5, -1.5], 0.01, vec![300, 300], |p| {
        p[0].hypot(p[1]) <= 1.0
    })
    .unwrap();
    let balls = decompose_region(&region, 0.5).unwrap();
    assert_eq!(balls.len(), 1);
    assert!((balls[0].radius - 1.0).abs() <= 0.02, "{:?}", balls[0]);
    assert!(balls[0].center[0].hypot(balls[0].center[1]) <= 0.02);
    check_decomposition(&region, &balls, 0.5);
}

#[test]
fn square_with_large_r_min_gives_one_ball() {
    let region = RasterRegion::from_fn(vec![-1.5, -1.5], 0.01, vec![300, 300], |p| {
        p[0].abs() <= 1.0 && p[1].abs() <= 1.0
    })
    .unwrap();
    let balls = decompose_region(&region, 0.9).unwrap();
    assert_eq!(balls.len(), 1);
    assert!((balls[0].radius - 1.0).abs() <= 0.02);
    check_decomposition(&region, &balls, 0.9);
}

#[test]
fn two_disks_give_two_balls() {
    let region = RasterRegion::from_fn(vec![-2.0, -1.0], 0.01, vec![400, 200], |p| {
        (p[0] + 1.0).hypot(p[1]) <= 0.5 || (p[0] - 1.0).hypot(p[1]) <= 0.5
    })
    .unwrap();
    let balls = decompose_region(&region, 0.3).unwrap();
    assert_eq!(balls.len(), 2);
    assert!((balls[0].radius - 0.5).abs() <= 0.02);
    assert!((balls[1].radius - 0.5).abs() <= 0.02);
    assert!(balls[0].center[0] * balls[1].center[0] < 0.0);
    check_decomposition(&region, &balls, 0.3);
}

#[test]
fn first_ball_matches_brute_force_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let blobs: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.5..2.5),
                    rng.gen_range(0.5..2.5),
                    rng.gen_range(0.2..0.9),
                )
            })
            .collect();
        let region = RasterRegion::from_fn(vec![0.0, 0.0], 0.1, vec![30, 30], |p| {
            blobs
                .iter()
                .any(|(x, y, r)| (p[0] - x).hypot(p[1] - y) <= *r)
        })
        .unwrap();
        let expected = brute_force_max_radius(&region);
        let balls = decompose_region(&region, 0.15).unwrap();
        if expected < 0.15 {
            assert!(balls.is_empty());
            continue;
        }
        assert!(
            (balls[0].radius - expected).abs() < 1e-9,
            "{} vs {expected}",
            balls[0].radius
        );
        assert!(balls.windows(2).all(|w| w[0].radius >= w[1].radius));
        check_decomposition(&region, &balls, 0.15);
    }
}

#[test]
fn text_raster_round_trip_through_decomposition() {
    let text = "0000000\n0111110\n0111110\n0111110\n0111110\n0111110\n0000000\n";
    let region = RasterRegion::from_text(text, vec![0.0, 0.0], 0.1).unwrap();
    let balls = decompose_region(&region, 0.15).unwrap();
    assert_eq!(balls.len(), 1);
    assert!(max_dist(&balls[0].center, &[0.35, 0.35]) < 1e-12);
    assert!((balls[0].radius - 0.25).abs() < 1e-12);
}
