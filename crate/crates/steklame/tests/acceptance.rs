//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklame::config::Parametrization;
use steklame::core::disk::{disk_spectrum, scalar_steklov_disk};
use steklame::core::geometry::{omega1, unit_area_radius, Boundary, FourierBoundary};
use steklame::core::mfs::{boundary_inner, solve, MfsConfig, RigidMotion, SourceOffset, Spectrum};
use steklame::core::shape::{
    coefficient_gradient, disk_fit_distance, optimize, pair_derivative, ConstraintMode, OptConfig, OptState,
    PerturbationField,
};
use steklame::core::{LameParameters, Vector2};
use steklame::init::random_boundary;

fn params(l: f64, m: f64) -> LameParameters {
    LameParameters::new(l, m).unwrap()
}

fn unit_disk() -> Boundary {
    FourierBoundary::circle(Vector2::ZERO, unit_area_radius(), 1).unwrap().into()
}

fn loose(n: usize, tol: f64) -> MfsConfig {
    let mut cfg = MfsConfig::new(n).with_residual_tol(tol);
    cfg.spurious_tol = cfg.spurious_tol.max(tol);
    cfg
}

fn report(id: u32, pass: bool, start: Instant, limit: Duration, detail: &str) -> bool {
    let elapsed = start.elapsed();
    let pass = pass && elapsed < limit;
    // straight to stdout so the line shows even when the test passes
    let _ = writeln!(
        std::io::stdout(),
        "criterion {id}: {} ({detail}; {:.2} s of {} s allowed)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

#[test]
fn criterion_1_disk_golden_values() {
    let start = Instant::now();
    let values: Vec<f64> = disk_spectrum(1.0, &params(1.0, 0.5), 8).unwrap().iter().map(|e| e.value).collect();
    let golden = [1.0, 1.0, 1.2, 1.2, 1.8, 1.8, 2.0, 2.0];
    let max_dev = values.iter().zip(golden).map(|(v, g)| (v - g).abs()).fold(0.0, f64::max);
    let first = disk_spectrum(1.0, &params(1.0, 3.0), 2).unwrap();
    let ok = values.len() == 8
        && max_dev < 1e-14
        && (first[0].value - 4.8).abs() < 1e-14
        && first[0].multiplicity == 2;
    let detail = format!(
        "max deviation {max_dev:.1e}; mu=3 first value {} multiplicity {}",
        first[0].value, first[0].multiplicity
    );
    assert!(report(1, ok, start, Duration::from_secs(1), &detail));
}

#[test]
fn criterion_2_accuracy_at_fixed_small_offset() {
    let start = Instant::now();
    let b = unit_disk();
    let p = params(1.0, 0.5);
    let exact = disk_spectrum(unit_area_radius(), &p, 4).unwrap();
    let cfg = MfsConfig::new(100).with_m(200).with_offset(SourceOffset::Absolute(0.015));
    let detail = match solve(&b, &p, &cfg, 4) {
        Ok(s) => {
            let e1 = (s.pairs[0].value - PI.sqrt()).abs();
            let e4 = (s.pairs[3].value - exact[3].value).abs();
            let ok = e1 < 1e-6 && e4 < 1e-5;
            assert!(report(2, ok, start, Duration::from_secs(30), &format!("errors {e1:.2e} and {e4:.2e}")));
            return;
        }
        Err(e) => {
            // measure what the uncertified solve returns with every gate open
            let open = loose(100, f64::MAX).with_m(200).with_offset(SourceOffset::Absolute(0.015));
            let nearest = |target: f64, s: &Spectrum| {
                s.pairs.iter().map(|q| (q.value - target).abs()).fold(f64::INFINITY, f64::min)
            };
            match solve(&b, &p, &open, 8) {
                Ok(s) => format!(
                    "{e}; ungated values {:.4} {:.4} {:.4} {:.4}, nearest to first exact value off by {:.2e}",
                    s.pairs[0].value,
                    s.pairs[1].value,
                    s.pairs[2].value,
                    s.pairs[3].value,
                    nearest(exact[0].value, &s)
                ),
                Err(e2) => format!("{e}; ungated solve also failed: {e2}"),
            }
        }
    };
    assert!(report(2, false, start, Duration::from_secs(30), &detail));
}

#[test]
fn criterion_3_convergence_trend() {
    let start = Instant::now();
    let b = unit_disk();
    let p = params(1.0, 0.5);
    let err = |cfg: MfsConfig| (solve(&b, &p, &cfg, 1).unwrap().pairs[0].value - PI.sqrt()).abs();
    let e40 = err(loose(40, 1e-2));
    let e120 = err(MfsConfig::new(120));
    let ok = e120 <= 1e-3 * e40;
    assert!(report(3, ok, start, Duration::from_secs(120), &format!("error {e40:.2e} at N=40, {e120:.2e} at N=120")));
}

#[test]
fn criterion_4_bounds_cover_true_errors() {
    let start = Instant::now();
    let b = unit_disk();
    let p = params(1.0, 0.5);
    let exact = disk_spectrum(unit_area_radius(), &p, 20).unwrap();
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for (n, tol) in [(64, 1e-2), (100, 1e-6), (150, 1e-6)] {
        let s = solve(&b, &p, &loose(n, tol), 20).unwrap();
        for i in [0, 19] {
            let err = (s.pairs[i].value - exact[i].value).abs();
            ok &= s.pairs[i].bound >= err;
            worst = worst.min(s.pairs[i].bound / err.max(f64::MIN_POSITIVE));
        }
    }
    assert!(report(4, ok, start, Duration::from_secs(60), &format!("smallest bound/error ratio {worst:.2e} over N=64,100,150")));
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_5_scaling_laws() {
    let start = Instant::now();
    let cases: [(Boundary, LameParameters, usize); 2] =
        [(unit_disk(), params(1.0, 0.5), 100), (omega1().into(), params(1.0, 3.0), 200)];
    let mut worst = 0.0f64;
    for (b, p, n) in &cases {
        let cfg = MfsConfig::new(*n);
        let base = solve(b, p, &cfg, 6).unwrap().values();
        for t in [0.5, 2.0] {
            let scaled = solve(&b.scaled(t).unwrap(), p, &cfg, 6).unwrap().values();
            let want: Vec<f64> = base.iter().map(|v| v / t).collect();
            worst = worst.max(max_rel(&scaled, &want));
            let stiff = p.scaled(t).unwrap();
            let scaled = solve(b, &stiff, &cfg, 6).unwrap().values();
            let want: Vec<f64> = base.iter().map(|v| v * t).collect();
            worst = worst.max(max_rel(&scaled, &want));
        }
    }
    assert!(report(5, worst < 1e-6, start, Duration::from_secs(120), &format!("largest relative deviation {worst:.2e}")));
}

#[test]
fn criterion_6_orthogonality_on_omega1() {
    let start = Instant::now();
    let b: Boundary = omega1().into();
    let s = solve(&b, &params(1.0, 3.0), &MfsConfig::new(200), 10).unwrap();
    let nodes = 1024;
    let mut rigid = 0.0f64;
    let mut mutual = 0.0f64;
    for (i, u) in s.pairs.iter().enumerate() {
        let norm = boundary_inner(u, u, &b, nodes).unwrap().sqrt();
        for rm in RigidMotion::ALL {
            rigid = rigid.max((boundary_inner(u, &rm, &b, nodes).unwrap() / norm).abs());
        }
        for v in &s.pairs[..i] {
            if v.cluster != u.cluster {
                let nv = boundary_inner(v, v, &b, nodes).unwrap().sqrt();
                mutual = mutual.max((boundary_inner(u, v, &b, nodes).unwrap() / (norm * nv)).abs());
            }
        }
    }
    let ok = rigid < 1e-6 && mutual < 1e-5;
    assert!(report(6, ok, start, Duration::from_secs(60), &format!("rigid {rigid:.2e}, mutual {mutual:.2e} over 10 pairs")));
}

#[test]
fn criterion_7_shape_derivatives() {
    let start = Instant::now();
    let p = params(1.0, 0.5);
    let disk = unit_disk();
    let s = solve(&disk, &p, &MfsConfig::new(120), 20).unwrap();
    let mut dilation = 0.0f64;
    for pair in &s.pairs {
        let d = pair_derivative(&disk, pair, &PerturbationField::Dilation, 960).unwrap();
        dilation = dilation.max((d + pair.value).abs() / pair.value);
    }

    let b = random_boundary(Parametrization::Support, 3, 0.3, 7).unwrap();
    let cfg = MfsConfig::new(160);
    let spec = solve(&b, &p, &cfg, 2).unwrap();
    let g = coefficient_gradient(&b, &spec, 0, 640).unwrap();
    let h = 1e-5;
    let x = b.coefficients();
    // central differences carry about 1e-8 of rounding noise at this step
    let floor = 1e-7;
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let value = |sign: f64| {
            let mut c = x.clone();
            c[i] += sign * h;
            solve(&b.with_coefficients(&c).unwrap(), &p, &cfg, 1).unwrap().pairs[0].value
        };
        let fd = (value(1.0) - value(-1.0)) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / (1e-3 * fd.abs() + floor));
    }
    let largest = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ok = dilation < 1e-4 && worst <= 1.0;
    let detail = format!(
        "dilation relative error {dilation:.2e} over 20 values; gradient mismatch {worst:.3} of allowance over {} coefficients, largest entry {largest:.3}",
        x.len()
    );
    assert!(report(7, ok, start, Duration::from_secs(300), &detail));
}

fn first_value_run(seed: u64) -> (f64, f64, Duration) {
    let start = Instant::now();
    let p = params(1.0, 0.5);
    let b = random_boundary(Parametrization::Fourier, 6, 0.15, seed).unwrap();
    let st = optimize(OptState::new(b, p, OptConfig::new(1, ConstraintMode::Area)).unwrap()).unwrap();
    let (_, _, dev) = disk_fit_distance(&st.boundary.polygon(512).unwrap()).unwrap();
    (st.value, dev, start.elapsed())
}

#[test]
fn criterion_8_optimization() {
    let start = Instant::now();
    let target = PI.sqrt();
    let mut ok = true;
    let mut detail = Vec::new();
    for seed in [1, 2, 3] {
        let (v, dev, t) = first_value_run(seed);
        ok &= (v - target).abs() < 1e-2 * target && dev < 1e-2 && t < Duration::from_secs(1800);
        detail.push(format!("seed {seed}: {v:.6} dist {dev:.1e}"));
    }

    let p = params(1.0, 0.5);
    let mut props = 0;
    for objective in 1..=5 {
        for mode in [ConstraintMode::Area, ConstraintMode::AreaConvex] {
            let kind = match mode {
                ConstraintMode::Area => Parametrization::Fourier,
                ConstraintMode::AreaConvex => Parametrization::Support,
            };
            let b = random_boundary(kind, 6, 0.15, 10 + objective as u64).unwrap();
            let mut cfg = OptConfig::new(objective, mode);
            cfg.max_iter = 10;
            cfg.schedule = vec![64, 128];
            let run_start = Instant::now();
            let st = optimize(OptState::new(b, p, cfg).unwrap()).unwrap();
            let monotone = st.history.windows(2).all(|w| w[1].objective >= w[0].objective);
            let area = st.history.iter().all(|r| (r.area - 1.0).abs() < 1e-10);
            let margin = st.history.iter().all(|r| r.margin.is_none_or(|m| m >= -1e-10));
            let fine = monotone && area && margin && run_start.elapsed() < Duration::from_secs(1800);
            ok &= fine;
            props += fine as usize;
        }
    }
    detail.push(format!("{props}/10 property runs hold"));
    // each run has its own limit, checked above
    assert!(report(8, ok, start, Duration::from_secs(13 * 1800), &detail.join(", ")));
}

#[test]
fn criterion_9_disk_upper_bound() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    for _ in 0..20 {
        let mu = rng.random_range(0.05..5.0);
        let lambda = rng.random_range(-0.9 * mu..5.0);
        let r = rng.random_range(0.2..3.0);
        let p = params(lambda, mu);
        let spec = disk_spectrum(r, &p, 10).unwrap();
        for (i, e) in spec.iter().enumerate() {
            let n = i + 1;
            let bound = (2.0 * mu + 2.0 * lambda) * scalar_steklov_disk(r, 2 * n + 5);
            ok &= e.value <= bound;
            tightest = tightest.min(bound / e.value);
        }
    }
    assert!(report(9, ok, start, Duration::from_secs(1), &format!("smallest bound/value ratio {tightest:.3}")));
}
