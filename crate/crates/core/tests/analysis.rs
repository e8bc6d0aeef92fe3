mod common;

use common::random_frame;
use fpcam_core::analysis::{
    compression_sweep, make_chart, make_moving_scene, median_filter_3d, michelson_contrast,
    mtf_curve, noise_sweep, psnr, run_point, ssim_with_peak, ChartKind, MovingObject, SweepConfig,
    MTF_CEILING,
};
use fpcam_core::{Frame, GeometryConfig, PatternKind, SolverConfig, VideoCube};
use proptest::prelude::*;

fn cube_from(dims: (usize, usize, usize), data: &[f64]) -> VideoCube {
    let (t, r, c) = dims;
    let frames = (0..t)
        .map(|k| Frame::new(r, c, data[k * r * c..(k + 1) * r * c].to_vec()).unwrap())
        .collect();
    VideoCube::new(frames, 30.0).unwrap()
}

fn flat(cube: &VideoCube) -> Vec<f64> {
    cube.frames().iter().flat_map(|f| f.data().iter().copied()).collect()
}

/// Straight nested-loop median with clamped indices.
fn brute_median(dims: (usize, usize, usize), data: &[f64], r: (usize, usize, usize)) -> Vec<f64> {
    let (nt, nr, nc) = dims;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut out = Vec::with_capacity(data.len());
    for t in 0..nt as i64 {
        for y in 0..nr as i64 {
            for x in 0..nc as i64 {
                let mut vals = Vec::new();
                for dt in -(r.2 as i64)..=r.2 as i64 {
                    for dy in -(r.0 as i64)..=r.0 as i64 {
                        for dx in -(r.1 as i64)..=r.1 as i64 {
                            let (tt, yy, xx) = (clamp(t + dt, nt), clamp(y + dy, nr), clamp(x + dx, nc));
                            vals.push(data[(tt * nr + yy) * nc + xx]);
                        }
                    }
                }
                vals.sort_by(f64::total_cmp);
                out.push(vals[vals.len() / 2]);
            }
        }
    }
    out
}

#[test]
fn median_removes_single_impulse_and_is_idempotent() {
    let mut data = vec![0.3; 125];
    data[62] = 9.0;
    let cube = cube_from((5, 5, 5), &data);
    let once = median_filter_3d(&cube, (1, 1, 1)).unwrap();
    assert!(flat(&once).iter().all(|&v| v == 0.3));
    let twice = median_filter_3d(&once, (1, 1, 1)).unwrap();
    assert_eq!(once, twice);
}

#[test]
fn median_fixes_thick_piecewise_constant_regions() {
    let dims = (6, 8, 8);
    let data: Vec<f64> = (0..6 * 64)
        .map(|i| {
            let (t, y, x) = (i / 64, (i / 8) % 8, i % 8);
            if y < 4 && x >= 3 || t >= 3 && x < 3 { 1.0 } else { 0.2 }
        })
        .collect();
    let cube = cube_from(dims, &data);
    let out = median_filter_3d(&cube, (1, 1, 1)).unwrap();
    assert_eq!(median_filter_3d(&out, (1, 1, 1)).unwrap(), out);
}

#[test]
fn median_matches_brute_force() {
    for seed in 0..4 {
        let frames: Vec<Frame> = (0..4).map(|k| random_frame(6, 6, seed * 10 + k)).collect();
        let cube = VideoCube::new(frames, 30.0).unwrap();
        let data = flat(&cube);
        for r in [(1, 1, 1), (2, 1, 0), (0, 0, 1)] {
            let got = flat(&median_filter_3d(&cube, r).unwrap());
            assert_eq!(got, brute_median((4, 6, 6), &data, r));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn median_values_come_from_the_neighborhood(
        t in 1usize..4, r in 1usize..6, c in 1usize..6, seed in any::<u64>(),
        ry in 0usize..3, rx in 0usize..3, rt in 0usize..2,
    ) {
        let frames: Vec<Frame> = (0..t as u64).map(|k| random_frame(r, c, seed ^ k)).collect();
        let cube = VideoCube::new(frames, 10.0).unwrap();
        let data = flat(&cube);
        let out = flat(&median_filter_3d(&cube, (ry, rx, rt)).unwrap());
        for (idx, v) in out.iter().enumerate() {
            let (tt, yy, xx) = (idx / (r * c), (idx / c) % r, idx % c);
            let mut found = false;
            for k in tt.saturating_sub(rt)..(tt + rt + 1).min(t) {
                for y in yy.saturating_sub(ry)..(yy + ry + 1).min(r) {
                    for x in xx.saturating_sub(rx)..(xx + rx + 1).min(c) {
                        found |= data[(k * r + y) * c + x] == *v;
                    }
                }
            }
            prop_assert!(found);
        }
    }

    #[test]
    fn psnr_and_ssim_are_symmetric(seed in any::<u64>(), peak in 0.5f64..4.0) {
        let a = random_frame(12, 13, seed);
        let b = random_frame(12, 13, seed.wrapping_add(1));
        prop_assert_eq!(psnr(&a, &b, Some(peak)).unwrap(), psnr(&b, &a, Some(peak)).unwrap());
        let (s1, s2) = (ssim_with_peak(&a, &b, peak).unwrap(), ssim_with_peak(&b, &a, peak).unwrap());
        prop_assert!((s1 - s2).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&s1));
    }
}

/// Offset of `b` relative to `a` at the peak of their circular cross-correlation.
fn correlation_peak(a: &Frame, b: &Frame) -> (i64, i64) {
    let (r, c) = a.shape();
    let ma = a.mean();
    let mb = b.mean();
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for dy in -(r as i64) / 2..(r as i64) / 2 {
        for dx in -(c as i64) / 2..(c as i64) / 2 {
            let mut s = 0.0;
            for y in 0..r as i64 {
                for x in 0..c as i64 {
                    let yy = (y + dy).rem_euclid(r as i64) as usize;
                    let xx = (x + dx).rem_euclid(c as i64) as usize;
                    s += (a.get(y as usize, x as usize) - ma) * (b.get(yy, xx) - mb);
                }
            }
            if s > best.0 {
                best = (s, (dy, dx));
            }
        }
    }
    best.1
}

#[test]
fn moving_object_offset_follows_velocity() {
    let g = GeometryConfig::tiled(4, 4, 8, 8);
    let obj = MovingObject { height: 5, width: 7, top: 3, left: 2, intensity: 0.9, background: 0.1 };
    let velocity = (0.6, 1.3);
    let cube = make_moving_scene(&g, &obj, velocity, 8, 30.0).unwrap();
    let first = &cube.frames()[0];
    for (t, frame) in cube.frames().iter().enumerate() {
        let expected = ((velocity.0 * t as f64).round() as i64, (velocity.1 * t as f64).round() as i64);
        assert_eq!(correlation_peak(first, frame), expected);
    }
    let still = make_moving_scene(&g, &obj, (0.0, 0.0), 4, 30.0).unwrap();
    assert!(still.frames().iter().all(|f| f == first));
    assert!(make_moving_scene(&g, &obj, (0.0, 5.0), 8, 30.0).is_err());
}

#[test]
fn bar_charts_are_square_waves() {
    let g = GeometryConfig::tiled(4, 4, 8, 8);
    for period in [4usize, 8, 16] {
        let chart = make_chart(&g, ChartKind::Bars { frequency: 1.0 / period as f64 }).unwrap();
        for c in 0..32 {
            let expected = if c % period < period / 2 { 1.0 } else { 0.0 };
            assert!((0..32).all(|r| chart.get(r, c) == expected), "period {period}, column {c}");
        }
        assert_eq!(michelson_contrast(&chart), 1.0);
    }
}

fn small_sweep(kind: PatternKind, seed: u64) -> (GeometryConfig, SweepConfig) {
    let g = GeometryConfig::tiled(4, 4, 4, 4);
    let solver = SolverConfig { lambda: 1e-6, max_iters: 400, ..Default::default() };
    (g, SweepConfig::new(g, kind, solver, seed))
}

#[test]
fn full_pixel_scan_is_exact() {
    let (g, mut cfg) = small_sweep(PatternKind::PixelScan, 1);
    // the TV bias scales with λ·B⁴ on a full scan, so λ has to be tiny
    cfg.solver.lambda = 1e-12;
    let scene = random_frame(16, 16, 3);
    let (point, _) = run_point(&scene, &cfg, 16, None, 0).unwrap();
    assert!(point.relative_error <= 1e-6, "{}", point.relative_error);
    assert_eq!(point.alpha, g.n_dmd() as f64 / (16.0 * g.n_sensor() as f64));
}

#[test]
fn sweep_shapes_and_reproducibility() {
    let (g, cfg) = small_sweep(PatternKind::RandomBinary, 4);
    let scene = make_chart(&g, ChartKind::Checker { size: 4 }).unwrap();
    let a = compression_sweep(&scene, &cfg, &[2, 4, 8], None).unwrap();
    assert_eq!(a.points.len(), 3);
    assert_eq!(a.psnr().len(), 3);
    assert_eq!(a.to_csv().lines().count(), 4);
    assert_eq!(a.points.iter().map(|p| p.measurements).collect::<Vec<_>>(), vec![2, 4, 8]);

    let snrs = [None, Some(30.0), Some(10.0)];
    let n1 = noise_sweep(&scene, &cfg, &snrs, 8).unwrap();
    let n2 = noise_sweep(&scene, &cfg, &snrs, 8).unwrap();
    assert_eq!(n1.points, n2.points);
    assert_eq!(n1.to_csv(), n2.to_csv());
    let p = n1.psnr();
    assert!(p[0] >= p[1] && p[0] >= p[2]);

    let wrong = Frame::zeros(8, 8);
    assert!(compression_sweep(&wrong, &cfg, &[2], None).is_err());
}

#[test]
fn mtf_near_one_at_low_frequency_in_exact_regime() {
    let g = GeometryConfig::tiled(8, 8, 4, 4);
    let solver = SolverConfig { lambda: 1e-6, max_iters: 300, ..Default::default() };
    let cfg = SweepConfig::new(g, PatternKind::PixelScan, solver, 0);
    // bars 16 mirrors wide: four blocks
    let curve = mtf_curve(&cfg, 16, &[1.0 / 32.0], None).unwrap();
    assert!(curve.mtf[0] >= 0.95, "{:?}", curve.mtf);
    assert!(curve.mtf.iter().all(|&m| (0.0..=MTF_CEILING).contains(&m)));
    assert_eq!(curve.alpha, 1.0);
    assert!(curve.to_csv().starts_with("frequency,mtf,alpha,T\n"));
    assert!(mtf_curve(&cfg, 16, &[0.6], None).is_err());
    assert!(mtf_curve(&cfg, 16, &[], None).is_err());
}
