//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use steklame_core::disk::{disk_spectrum, first_positive, Branch};
use steklame_core::geometry::{point_in_polygon, Boundary};
use steklame_core::mfs::{eval_eigenfunction, solve as mfs_solve, EigenPair, MfsConfig, SourceOffset, Spectrum};
use steklame_core::shape::{optimize as ascend, ConstraintMode, OptConfig, OptState, OptStatus};
use steklame_core::{LameParameters, Vector2};

use crate::config::{Constraint, ConvergeArgs, DiskArgs, OptimizeArgs, Parametrization, SolveArgs, SweepArgs};
use crate::error::{CliError, Result};
use crate::format::{config_hash, read_boundary, write_boundary, CsvOut};
use crate::init::random_boundary;

fn missing(name: &str) -> CliError {
    CliError::Config(format!("missing required setting `{name}`"))
}

fn params(lambda: Option<f64>, mu: Option<f64>) -> Result<LameParameters> {
    Ok(LameParameters::new(
        lambda.ok_or_else(|| missing("lambda"))?,
        mu.ok_or_else(|| missing("mu"))?,
    )?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn label(b: Branch) -> String {
    match b.mode() {
        Some(n) if !matches!(b, Branch::N1) => format!("{}", n),
        _ => String::new(),
    }
}

/// Closed-form disk spectrum.
pub fn disk(args: &DiskArgs) -> Result<()> {
    let (r, lambda, mu, count) = args.values()?;
    let p = LameParameters::new(lambda, mu)?;
    let spec = disk_spectrum(r, &p, count)?;
    let mut out = CsvOut::create(
        args.out.as_deref(),
        &config_hash(args),
        &["index", "value", "branch", "mode", "multiplicity"],
    )?;
    for (i, e) in spec.iter().enumerate() {
        out.row([
            (i + 1).to_string(),
            e.value.to_string(),
            e.branch.label().to_string(),
            label(e.branch),
            e.multiplicity.to_string(),
        ])?;
    }
    out.finish()
}

/// Solver settings from command arguments.
pub fn mfs_config(n: usize, m: Option<usize>, alpha: Option<f64>, relative: Option<f64>, tol: Option<f64>) -> MfsConfig {
    let mut cfg = MfsConfig::new(n);
    cfg.m = m;
    if let Some(a) = alpha {
        cfg.offset = SourceOffset::Absolute(a);
    } else if let Some(r) = relative {
        cfg.offset = SourceOffset::Relative(r);
    }
    if let Some(t) = tol {
        cfg.residual_tol = t;
        cfg.spurious_tol = cfg.spurious_tol.max(t);
    }
    cfg
}

fn spectrum_csv(path: Option<&Path>, hash: &str, spec: &Spectrum) -> Result<()> {
    let mut out = CsvOut::create(path, hash, &["index", "eigenvalue", "residual", "bound", "cluster"])?;
    for (i, p) in spec.pairs.iter().enumerate() {
        out.row([
            (i + 1).to_string(),
            p.value.to_string(),
            p.residual.to_string(),
            p.bound.to_string(),
            p.cluster.to_string(),
        ])?;
    }
    out.finish()
}

/// Samples `(x, y, u₁, u₂)` on a `g × g` grid over the bounding box, keeping
/// points inside the domain.
pub fn eigenfunction_grid(pair: &EigenPair, boundary: &Boundary, g: usize) -> Result<Vec<[f64; 4]>> {
    let poly = boundary.polygon(512)?;
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in &poly {
        lo = Vector2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vector2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let g = g.max(2);
    let pts: Vec<Vector2> = (0..g)
        .flat_map(|j| (0..g).map(move |i| (i, j)))
        .map(|(i, j)| {
            Vector2::new(
                lo.x + (hi.x - lo.x) * i as f64 / (g - 1) as f64,
                lo.y + (hi.y - lo.y) * j as f64 / (g - 1) as f64,
            )
        })
        .filter(|p| point_in_polygon(*p, &poly))
        .collect();
    let vals = eval_eigenfunction(pair, &pts)?;
    Ok(pts.iter().zip(&vals).map(|(p, u)| [p.x, p.y, u.x, u.y]).collect())
}

/// Certified spectrum of a boundary file.
pub fn solve(args: &SolveArgs) -> Result<Spectrum> {
    let path = args.boundary.as_ref().ok_or_else(|| missing("boundary"))?;
    let boundary = read_boundary(path)?;
    let p = params(args.lambda, args.mu)?;
    let n = args.n.unwrap_or(128);
    let cfg = mfs_config(n, args.m, args.alpha, args.relative_alpha, args.residual_tol);
    cfg.validate()?;
    let spec = mfs_solve(&boundary, &p, &cfg, args.count.unwrap_or(10))?;
    let hash = config_hash(args);
    match &args.out_dir {
        Some(dir) => {
            ensure_dir(dir)?;
            spectrum_csv(Some(&dir.join("spectrum.csv")), &hash, &spec)?;
            if let Some(g) = args.grid {
                for (i, pair) in spec.pairs.iter().enumerate() {
                    let mut out = CsvOut::create(
                        Some(&dir.join(format!("eigenfunction_{:03}.csv", i + 1))),
                        &hash,
                        &["x", "y", "u1", "u2"],
                    )?;
                    for row in eigenfunction_grid(pair, &boundary, g)? {
                        out.row(row.iter().map(|v| v.to_string()))?;
                    }
                    out.finish()?;
                }
            }
        }
        None => {
            if args.grid.is_some() {
                return Err(CliError::Config("eigenfunction grids need out_dir".into()));
            }
            spectrum_csv(None, &hash, &spec)?;
        }
    }
    Ok(spec)
}

/// Radius of `b` if it is a circle up to rounding.
pub fn circle_radius(b: &Boundary) -> Option<f64> {
    let tiny = |v: f64, scale: f64| v.abs() <= 1e-14 * scale;
    match b {
        Boundary::Fourier(f) => {
            let (x, y) = (f.x(), f.y());
            let r = x.a[0];
            let rest_zero = (1..f.order()).all(|k| {
                tiny(x.a[k], r) && tiny(x.b[k], r) && tiny(y.a[k], r) && tiny(y.b[k], r)
            });
            (r > 0.0 && (y.b[0] - r).abs() <= 1e-14 * r && tiny(x.b[0], r) && tiny(y.a[0], r) && rest_zero)
                .then_some(r)
        }
        Boundary::Support(s) => {
            let p = s.support();
            let r = p.a0;
            let rest_zero = (1..s.order()).all(|k| tiny(p.a[k], r) && tiny(p.b[k], r));
            rest_zero.then_some(r)
        }
    }
}

/// One row of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub index: usize,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
}

/// Error table against the closed form (circles) or a run at twice the largest N.
pub fn converge(args: &ConvergeArgs) -> Result<Vec<ConvergenceRow>> {
    let path = args.boundary.as_ref().ok_or_else(|| missing("boundary"))?;
    let boundary = read_boundary(path)?;
    let p = params(args.lambda, args.mu)?;
    let ns = args.n_list.clone().ok_or_else(|| missing("n_list"))?;
    let indices = args.indices.clone().unwrap_or_else(|| vec![1]);
    if ns.is_empty() || indices.is_empty() || indices.contains(&0) {
        return Err(CliError::Config("n_list and indices must be nonempty; indices are 1-based".into()));
    }
    let kmax = *indices.iter().max().unwrap_or(&1);
    let tol = args.residual_tol.or(Some(1e-2));
    let reference: Vec<f64> = match circle_radius(&boundary) {
        Some(r) => disk_spectrum(r, &p, kmax)?.iter().map(|e| e.value).collect(),
        None => {
            let nref = 2 * ns.iter().max().copied().unwrap_or(64);
            let cfg = mfs_config(nref, None, None, args.relative_alpha, Some(1e-6));
            mfs_solve(&boundary, &p, &cfg, kmax)?.values()
        }
    };
    let mut out = CsvOut::create(
        args.out.as_deref(),
        &config_hash(args),
        &["n", "index", "value", "reference", "error"],
    )?;
    let mut rows = Vec::new();
    for &n in &ns {
        let cfg = mfs_config(n, None, None, args.relative_alpha, tol);
        cfg.validate()?;
        let values = match mfs_solve(&boundary, &p, &cfg, kmax) {
            Ok(s) => s.values(),
            Err(steklame_core::Error::InsufficientResolution { .. }) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        for &i in &indices {
            let value = values.get(i - 1).copied().unwrap_or(f64::NAN);
            let row = ConvergenceRow {
                n,
                index: i,
                value,
                reference: reference[i - 1],
                error: (value - reference[i - 1]).abs(),
            };
            out.row([
                n.to_string(),
                i.to_string(),
                value.to_string(),
                row.reference.to_string(),
                row.error.to_string(),
            ])?;
            rows.push(row);
        }
    }
    for &i in &indices {
        let errs: Vec<f64> = rows.iter().filter(|r| r.index == i).map(|r| r.error).collect();
        let finite = errs.iter().all(|e| e.is_finite());
        let decreasing = finite && errs.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-13);
        let first_last = match (errs.first(), errs.last()) {
            (Some(a), Some(b)) if finite && *b > 0.0 => a / b,
            _ => f64::NAN,
        };
        let trend = if !finite {
            "unresolved"
        } else if decreasing {
            "decreasing"
        } else {
            "not monotone"
        };
        out.comment(&format!("trend index={i} {trend} first/last={first_last:.3e}"))?;
    }
    out.finish()?;
    Ok(rows)
}

/// Spectrum rows for each μ of the grid.
pub fn sweep(args: &SweepArgs) -> Result<()> {
    let lambda = args.lambda.ok_or_else(|| missing("lambda"))?;
    let mus = args.mu_grid()?;
    let count = args.count.unwrap_or(10);
    if count == 0 {
        return Err(CliError::Config("count must be positive".into()));
    }
    let hash = config_hash(args);
    match &args.boundary {
        None => {
            let r = args.radius.ok_or_else(|| missing("radius"))?;
            let mut out = CsvOut::create(
                args.out.as_deref(),
                &hash,
                &["mu", "index", "value", "branch", "mode", "multiplicity"],
            )?;
            let mut previous: Option<(f64, Branch)> = None;
            let mut switches = Vec::new();
            for &mu in &mus {
                let p = LameParameters::new(lambda, mu)?;
                for (i, e) in disk_spectrum(r, &p, count)?.iter().enumerate() {
                    out.row([
                        mu.to_string(),
                        (i + 1).to_string(),
                        e.value.to_string(),
                        e.branch.label().to_string(),
                        label(e.branch),
                        e.multiplicity.to_string(),
                    ])?;
                }
                let (_, b) = first_positive(r, &p)?;
                if let Some((m0, b0)) = previous {
                    if b0 != b {
                        switches.push(format!(
                            "first branch changes from {} to {} between mu={m0} and mu={mu}",
                            b0.label(),
                            b.label()
                        ));
                    }
                }
                previous = Some((mu, b));
            }
            for s in switches {
                out.comment(&s)?;
            }
            out.finish()
        }
        Some(path) => {
            let boundary = read_boundary(path)?;
            let cfg = mfs_config(args.n.unwrap_or(128), None, None, None, None);
            let mut out = CsvOut::create(args.out.as_deref(), &hash, &["mu", "index", "value", "bound", "cluster"])?;
            for &mu in &mus {
                let spec = mfs_solve(&boundary, &LameParameters::new(lambda, mu)?, &cfg, count)?;
                for (i, p) in spec.pairs.iter().enumerate() {
                    out.row([
                        mu.to_string(),
                        (i + 1).to_string(),
                        p.value.to_string(),
                        p.bound.to_string(),
                        p.cluster.to_string(),
                    ])?;
                }
            }
            out.finish()
        }
    }
}

/// Optimizer settings and starting shape from command arguments.
pub fn optimize_setup(args: &OptimizeArgs) -> Result<(Boundary, LameParameters, OptConfig)> {
    let p = params(args.lambda, args.mu)?;
    let objective = args.objective.ok_or_else(|| missing("objective"))?;
    let mode = match args.constraint.unwrap_or(Constraint::Area) {
        Constraint::Area => ConstraintMode::Area,
        Constraint::AreaConvex => ConstraintMode::AreaConvex,
    };
    let kind = args.parametrization.unwrap_or(match mode {
        ConstraintMode::Area => Parametrization::Fourier,
        ConstraintMode::AreaConvex => Parametrization::Support,
    });
    if mode == ConstraintMode::AreaConvex && kind != Parametrization::Support {
        return Err(CliError::Config("the convexity constraint needs the support parametrization".into()));
    }
    let boundary = match &args.initial {
        Some(path) => read_boundary(path)?,
        None => random_boundary(
            kind,
            args.order.unwrap_or(6),
            args.amplitude.unwrap_or(0.15),
            args.seed.unwrap_or(0),
        )?,
    };
    let mut cfg = OptConfig::new(objective, mode);
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    if let Some(v) = args.initial_step {
        cfg.initial_step = v;
    }
    if let Some(v) = &args.schedule {
        cfg.schedule = v.clone();
    }
    cfg.validate()?;
    Ok((boundary, p, cfg))
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'a str,
    objective: f64,
    iterations: usize,
    accepted: usize,
    area: f64,
    n: usize,
}

/// Runs the ascent and writes `iterations.csv`, `boundary.json`,
/// `spectrum.csv` and `summary.json` into the output directory.
pub fn optimize(args: &OptimizeArgs) -> Result<OptState> {
    let dir: PathBuf = args.out_dir.clone().ok_or_else(|| missing("out_dir"))?;
    let (boundary, p, cfg) = optimize_setup(args)?;
    let state = ascend(OptState::new(boundary, p, cfg)?)?;
    ensure_dir(&dir)?;
    let hash = config_hash(args);
    let mut it = CsvOut::create(
        Some(&dir.join("iterations.csv")),
        &hash,
        &["iterate", "objective", "area", "margin", "step", "n"],
    )?;
    for r in &state.history {
        it.row([
            r.iterate.to_string(),
            r.objective.to_string(),
            r.area.to_string(),
            r.margin.map(|m| m.to_string()).unwrap_or_default(),
            r.step.to_string(),
            r.n.to_string(),
        ])?;
    }
    it.finish()?;
    write_boundary(&dir.join("boundary.json"), &state.boundary)?;
    spectrum_csv(Some(&dir.join("spectrum.csv")), &hash, &state.spectrum)?;
    let summary = Summary {
        status: state.status.label(),
        objective: state.value,
        iterations: state.iteration,
        accepted: state.history.len().saturating_sub(1),
        area: state.boundary.area()?,
        n: state.config.schedule[state.level],
    };
    let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
    let path = dir.join("summary.json");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(state)
}

/// `true` when the run ended without an error, stalls included.
pub fn finished(status: OptStatus) -> bool {
    status != OptStatus::Running
}

#[cfg(test)]
mod tests {
    use super::*;
    use steklame_core::geometry::{omega1, FourierBoundary, SupportBoundary};

    #[test]
    fn circles_are_recognized() {
        let c: Boundary = FourierBoundary::circle(Vector2::new(0.2, -0.1), 0.7, 4).unwrap().into();
        assert_eq!(circle_radius(&c), Some(0.7));
        let s: Boundary = SupportBoundary::circle(1.5, 3).unwrap().into();
        assert_eq!(circle_radius(&s), Some(1.5));
        assert_eq!(circle_radius(&omega1().into()), None);
    }

    #[test]
    fn absolute_offset_wins() {
        let cfg = mfs_config(64, None, Some(0.1), Some(0.4), Some(1e-3));
        assert_eq!(cfg.offset, SourceOffset::Absolute(0.1));
        assert_eq!(cfg.residual_tol, 1e-3);
        let cfg = mfs_config(64, None, None, None, None);
        assert_eq!(cfg.offset, MfsConfig::new(64).offset);
    }

    #[test]
    fn grid_points_lie_inside() {
        let b: Boundary = FourierBoundary::circle(Vector2::new(0.0, 0.0), 1.0, 1).unwrap().into();
        let p = LameParameters::new(1.0, 1.0).unwrap();
        let spec = mfs_solve(&b, &p, &MfsConfig::new(100), 1).unwrap();
        let rows = eigenfunction_grid(&spec.pairs[0], &b, 21).unwrap();
        assert!(!rows.is_empty() && rows.len() < 21 * 21);
        assert!(rows.iter().all(|r| r[0].hypot(r[1]) <= 1.0 + 1e-12));
    }
}
