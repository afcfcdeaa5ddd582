//! Critical points of the reduced energy, branch traces in λ, the
//! center-of-mass comparator, stationary scans and the convexity machinery
//! behind the uniqueness argument.

use std::f64::consts::PI;

use log::{debug, warn};
use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flux::FluxReport;
use crate::metric::ConformalMetricModel;
use crate::quadrature::{integrate_sphere_vec, Resolution, SphereRule};
use crate::reduced::{ReducedEnergy, ReducedOptions};
use crate::{Error, Mat3, Result, Vec3};

/// Settings shared by the critical-point routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default)]
    pub reduced: ReducedOptions,
    /// Convergence when `|∇G| ≤ tolerance_factor·max(1, |∇G(seed)|)`.
    #[serde(default = "default_tolerance_factor")]
    pub tolerance_factor: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Step of the central-difference Hessian.
    #[serde(default = "default_hessian_step")]
    pub hessian_step: f64,
    /// Converged points closer than this are merged.
    #[serde(default = "default_dedup_distance")]
    pub dedup_distance: f64,
    /// Initial trust radius in ξ.
    #[serde(default = "default_trust_radius")]
    pub trust_radius: f64,
    #[serde(default)]
    pub mode: SearchMode,
}

/// What the Newton iteration is attracted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Any zero of `∇G`: Newton steps accepted when `|∇G|` decreases.
    #[default]
    Critical,
    /// Local minima: Newton steps with the Hessian eigenvalues replaced by
    /// their absolute values, so every step descends, accepted unless the
    /// directional derivative overshoots.
    Minimum,
}

fn default_tolerance_factor() -> f64 {
    1e-9
}
fn default_max_iterations() -> usize {
    200
}
fn default_hessian_step() -> f64 {
    1e-4
}
fn default_dedup_distance() -> f64 {
    1e-6
}
fn default_trust_radius() -> f64 {
    0.25
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            reduced: ReducedOptions::default(),
            tolerance_factor: default_tolerance_factor(),
            max_iterations: default_max_iterations(),
            hessian_step: default_hessian_step(),
            dedup_distance: default_dedup_distance(),
            trust_radius: default_trust_radius(),
            mode: SearchMode::Critical,
        }
    }
}

impl SolverOptions {
    pub fn with_resolution(mut self, res: Resolution) -> Self {
        self.reduced.resolution = res;
        self
    }
}

/// Nature of a converged point, read off the FD Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Minimum,
    Saddle,
    Maximum,
    /// Some eigenvalue is zero up to the FD noise.
    Degenerate,
    /// The iteration stopped on `|ξ| = 1 − δ`.
    BoundaryHit,
}

impl Classification {
    fn rank(self) -> u8 {
        match self {
            Classification::Minimum => 0,
            Classification::Degenerate => 1,
            Classification::Saddle => 2,
            Classification::Maximum => 3,
            Classification::BoundaryHit => 4,
        }
    }
}

/// Relative size below which a Hessian eigenvalue counts as zero.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub xi: [f64; 3],
    pub lambda: f64,
    pub grad_norm: f64,
    /// Ascending eigenvalues of the symmetrized FD Hessian.
    pub hessian_eigenvalues: [f64; 3],
    /// `max|H − Hᵀ| / max|H|` before symmetrization.
    pub hessian_asymmetry: f64,
    /// `λξ`.
    pub barycenter: [f64; 3],
    /// `ρ = λ(1 − |ξ|)`.
    pub inner_radius: f64,
    /// `Θ = λ(1 + |ξ|)`.
    pub outer_radius: f64,
    pub classification: Classification,
    pub iterations: usize,
    /// Index of the seed that first reached this point.
    pub seed_index: usize,
}

impl CriticalPoint {
    pub fn xi(&self) -> Vec3 {
        Vec3::from(self.xi)
    }

    pub fn barycenter(&self) -> Vec3 {
        Vec3::from(self.barycenter)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.hessian_eigenvalues[0] > 0.0
    }
}

/// A seed that did not converge; recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub seed: [f64; 3],
    pub last_xi: [f64; 3],
    pub last_grad_norm: f64,
    pub reason: String,
}

/// Everything a multi-seed search produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointSearch {
    pub lambda: f64,
    /// Distinct converged points in seed order.
    pub points: Vec<CriticalPoint>,
    pub failures: Vec<SeedFailure>,
}

impl CriticalPointSearch {
    /// The preferred point: interior minima before degenerate points,
    /// saddles, maxima and boundary hits, then smallest gradient norm. The
    /// choice does not depend on the seed order.
    pub fn best(&self) -> Option<&CriticalPoint> {
        self.points.iter().min_by(|a, b| {
            (a.classification.rank(), a.grad_norm, a.xi)
                .partial_cmp(&(b.classification.rank(), b.grad_norm, b.xi))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    pub fn require_best(&self) -> Result<&CriticalPoint> {
        self.best().ok_or_else(|| {
            Error::Domain(format!(
                "no seed converged at λ = {} ({} failures)",
                self.lambda,
                self.failures.len()
            ))
        })
    }
}

fn arr(v: Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Domain(format!("δ = {delta} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Central-difference Hessian of `G` from its gradient. Returns the
/// symmetrized matrix and the relative asymmetry.
pub fn fd_hessian(energy: &ReducedEnergy, xi: &Vec3, h: f64) -> Result<(Mat3, f64)> {
    let mut m = Mat3::zeros();
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        let col = (energy.gradient(&(xi + e))? - energy.gradient(&(xi - e))?) / (2.0 * h);
        m.set_column(k, &col);
    }
    let scale = m.amax();
    let asym = if scale > 0.0 {
        (m - m.transpose()).amax() / scale
    } else {
        0.0
    };
    Ok(((m + m.transpose()) * 0.5, asym))
}

fn sorted_eigenvalues(h: &Mat3) -> [f64; 3] {
    let mut ev: Vec<f64> = SymmetricEigen::new(*h)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite Hessian"));
    [ev[0], ev[1], ev[2]]
}

fn classify(ev: &[f64; 3]) -> Classification {
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || ev.iter().any(|v| v.abs() <= DEGENERACY_THRESHOLD * scale) {
        Classification::Degenerate
    } else if ev[0] > 0.0 {
        Classification::Minimum
    } else if ev[2] < 0.0 {
        Classification::Maximum
    } else {
        Classification::Saddle
    }
}

/// Newton step `−H⁺g` with eigenvalues below `1e−12·max|μ|` dropped; with
/// `absolute` the eigenvalues enter by modulus.
fn newton_step(h: &Mat3, g: &Vec3, absolute: bool) -> Vec3 {
    let eig = SymmetricEigen::new(*h);
    let scale = eig.eigenvalues.amax();
    let mut p = Vec3::zeros();
    for i in 0..3 {
        let mu = eig.eigenvalues[i];
        if mu.abs() > 1e-12 * scale {
            let mu = if absolute { mu.abs() } else { mu };
            let v = eig.eigenvectors.column(i);
            p -= v * (v.dot(g) / mu);
        }
    }
    p
}

struct SeedOutcome {
    xi: Vec3,
    grad: Vec3,
    iterations: usize,
    on_boundary: bool,
}

/// Trust-region Newton iteration on `∇G = 0` from one seed, with merit
/// `|∇G|` and iterates kept in `|ξ| ≤ 1 − δ`.
fn solve_from_seed(
    energy: &ReducedEnergy,
    seed: Vec3,
    delta: f64,
    opts: &SolverOptions,
) -> std::result::Result<SeedOutcome, (Vec3, f64, String)> {
    let limit = 1.0 - delta;
    let mut x = seed;
    let fail = |x: Vec3, gn: f64, why: String| Err((x, gn, why));
    let mut g = match energy.gradient(&x) {
        Ok(g) => g,
        Err(e) => return fail(x, f64::NAN, e.to_string()),
    };
    let tol = opts.tolerance_factor * g.norm().max(1.0);
    let mut radius = opts.trust_radius;
    let mut boundary_stalls = 0usize;
    for it in 0..opts.max_iterations {
        let on_boundary = x.norm() >= limit * (1.0 - 1e-12);
        if g.norm() <= tol {
            return Ok(SeedOutcome {
                xi: x,
                grad: g,
                iterations: it,
                on_boundary,
            });
        }
        // Near |ξ| = 1 the difference stencil must stay inside the unit ball.
        let h = opts.hessian_step.min(0.5 * (1.0 - x.norm()));
        let hess = match fd_hessian(energy, &x, h) {
            Ok((m, _)) => m,
            Err(e) => return fail(x, g.norm(), e.to_string()),
        };
        let minimize = opts.mode == SearchMode::Minimum;
        let mut p = newton_step(&hess, &g, minimize);
        if on_boundary {
            // Drop the outward component so the iterate slides along the
            // constraint.
            let n = x / x.norm();
            let out = p.dot(&n);
            if out > 0.0 {
                p -= n * out;
            }
        }
        if p.norm() > radius {
            p *= radius / p.norm();
        }
        let mut accepted = None;
        let mut step = p;
        for _ in 0..40 {
            let mut trial = x + step;
            if trial.norm() > limit {
                trial *= limit / trial.norm();
            }
            if let Ok(gt) = energy.gradient(&trial) {
                let ok = if minimize {
                    // Still descending, or past the minimum along the
                    // segment by less than the initial slope.
                    let d = trial - x;
                    let slope0 = g.dot(&d);
                    slope0 < 0.0 && gt.dot(&d) <= 0.9 * slope0.abs()
                } else {
                    gt.norm() < g.norm()
                };
                if ok {
                    accepted = Some((trial, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, gt)) => {
                let full = (trial - x).norm() >= 0.99 * p.norm();
                x = trial;
                g = gt;
                radius = if full {
                    (2.0 * radius).min(1.0)
                } else {
                    (0.5 * radius).max(1e-12)
                };
                boundary_stalls = 0;
            }
            None if on_boundary => {
                // The gradient norm cannot be reduced along the constraint:
                // the minimizer of |∇G| restricted to it has been reached.
                boundary_stalls += 1;
                if boundary_stalls >= 2 {
                    return Ok(SeedOutcome {
                        xi: x,
                        grad: g,
                        iterations: it + 1,
                        on_boundary: true,
                    });
                }
            }
            None => {
                return fail(
                    x,
                    g.norm(),
                    format!("line search stalled at |∇G| = {:e}", g.norm()),
                )
            }
        }
    }
    fail(
        x,
        g.norm(),
        format!("no convergence in {} iterations", opts.max_iterations),
    )
}

/// Critical points of `G_λ` reached from `seeds`, deduplicated.
///
/// Seeds run in parallel; the merge is by seed index so the result does not
/// depend on the thread count.
pub fn find_critical_point(
    model: &ConformalMetricModel,
    lambda: f64,
    delta: f64,
    seeds: &[Vec3],
    opts: &SolverOptions,
) -> Result<CriticalPointSearch> {
    check_delta(delta)?;
    if seeds.is_empty() {
        return Err(Error::Domain("at least one seed is required".into()));
    }
    for s in seeds {
        if !(s.norm() <= 1.0 - delta) {
            return Err(Error::Domain(format!(
                "seed {s:?} lies outside |ξ| <= 1 − δ = {}",
                1.0 - delta
            )));
        }
    }
    let energy = ReducedEnergy::new(model, lambda, opts.reduced)?;
    let outcomes: Vec<_> = seeds
        .par_iter()
        .map(|s| solve_from_seed(&energy, *s, delta, opts))
        .collect();

    let mut points: Vec<CriticalPoint> = Vec::new();
    let mut failures = Vec::new();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => {
                if points
                    .iter()
                    .any(|p| (p.xi() - o.xi).norm() < opts.dedup_distance)
                {
                    continue;
                }
                let h = opts.hessian_step.min(0.5 * (1.0 - o.xi.norm()));
                let (hess, asym) = fd_hessian(&energy, &o.xi, h)?;
                let ev = sorted_eigenvalues(&hess);
                let t = o.xi.norm();
                points.push(CriticalPoint {
                    xi: arr(o.xi),
                    lambda,
                    grad_norm: o.grad.norm(),
                    hessian_eigenvalues: ev,
                    hessian_asymmetry: asym,
                    barycenter: arr(o.xi * lambda),
                    inner_radius: lambda * (1.0 - t),
                    outer_radius: lambda * (1.0 + t),
                    classification: if o.on_boundary {
                        Classification::BoundaryHit
                    } else {
                        classify(&ev)
                    },
                    iterations: o.iterations,
                    seed_index: i,
                });
            }
            Err((x, gn, reason)) => {
                debug!("seed {i} failed at λ = {lambda}: {reason}");
                failures.push(SeedFailure {
                    seed_index: i,
                    seed: arr(seeds[i]),
                    last_xi: arr(x),
                    last_grad_norm: gn,
                    reason,
                });
            }
        }
    }
    Ok(CriticalPointSearch {
        lambda,
        points,
        failures,
    })
}

/// Seeds on the cubic grid of the given spacing inside `|ξ| ≤ radius`,
/// ordered lexicographically.
pub fn grid_points(radius: f64, spacing: f64) -> Vec<Vec3> {
    let n = (radius / spacing).floor() as i64;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let p = Vec3::new(i as f64, j as f64, k as f64) * spacing;
                if p.norm() <= radius * (1.0 + 1e-12) {
                    out.push(if p.norm() > radius {
                        p * (radius / p.norm())
                    } else {
                        p
                    });
                }
            }
        }
    }
    out
}

/// Default seeds: the origin and the points `±r·e_i` for `r ∈ {0.3, 0.6}`
/// scaled into `|ξ| ≤ 1 − δ`.
pub fn default_seeds(delta: f64) -> Vec<Vec3> {
    let mut seeds = vec![Vec3::zeros()];
    for r in [0.3, 0.6] {
        let r = r * (1.0 - delta) / 0.75;
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut e = Vec3::zeros();
                e[i] = s * r;
                seeds.push(e);
            }
        }
    }
    seeds
}

// ─── branch traces ──────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEntry {
    pub lambda: f64,
    pub point: CriticalPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrace {
    pub entries: Vec<BranchEntry>,
    /// `max − min` of each barycenter component over the trace.
    pub oscillation: [f64; 3],
    /// λ values where no seed converged, with the reason.
    pub failures: Vec<(f64, String)>,
}

impl BranchTrace {
    pub fn barycenters(&self) -> Vec<Vec3> {
        self.entries.iter().map(|e| e.point.barycenter()).collect()
    }
}

/// Follows the critical point through an increasing λ grid, warm-starting
/// each solve at the previous point and falling back on `seeds`.
pub fn trace_branch(
    model: &ConformalMetricModel,
    lambdas: &[f64],
    delta: f64,
    seeds: &[Vec3],
    opts: &SolverOptions,
) -> Result<BranchTrace> {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("λ grid must be strictly increasing".into()));
    }
    let mut entries: Vec<BranchEntry> = Vec::new();
    let mut failures = Vec::new();
    for &lambda in lambdas {
        let mut s: Vec<Vec3> = Vec::with_capacity(seeds.len() + 1);
        if let Some(prev) = entries.last() {
            s.push(prev.point.xi());
        }
        s.extend_from_slice(seeds);
        match find_critical_point(model, lambda, delta, &s, opts) {
            Ok(search) => match search.best() {
                Some(p) => entries.push(BranchEntry { lambda, point: *p }),
                None => failures.push((lambda, "no seed converged".to_string())),
            },
            Err(e) => failures.push((lambda, e.to_string())),
        }
    }
    let mut oscillation = [0.0; 3];
    for (k, osc) in oscillation.iter_mut().enumerate() {
        let vals = entries.iter().map(|e| e.point.barycenter[k]);
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if hi >= lo {
            *osc = hi - lo;
        }
    }
    Ok(BranchTrace {
        entries,
        oscillation,
        failures,
    })
}

// ─── center-of-mass comparator ──────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComComparison {
    pub lambda: f64,
    /// Extrapolated Hamiltonian center of mass.
    pub c_flux: [f64; 3],
    /// `λξ(λ)`.
    pub barycenter: [f64; 3],
    /// `(1/128π)λ³∫_{S_λ(λξ)} R ν̄ dμ̄`.
    pub curvature_term: [f64; 3],
    /// `barycenter − c_flux − curvature_term`.
    pub residual: [f64; 3],
    pub point: CriticalPoint,
    pub flux: FluxReport,
}

impl ComComparison {
    pub fn residual_norm(&self) -> f64 {
        Vec3::from(self.residual).norm()
    }

    pub fn barycenter_norm(&self) -> f64 {
        Vec3::from(self.barycenter).norm()
    }
}

/// Default flux radii for the extrapolated center of mass.
pub const DEFAULT_FLUX_RADII: [f64; 3] = [1e3, 1e4, 1e5];

/// Compares the barycenter `λξ(λ)` with the flux center corrected by the
/// curvature moment of the sphere through the critical point.
pub fn com_compare(
    model: &ConformalMetricModel,
    lambda: f64,
    delta: f64,
    seeds: &[Vec3],
    flux_radii: &[f64],
    opts: &SolverOptions,
) -> Result<ComComparison> {
    let search = find_critical_point(model, lambda, delta, seeds, opts)?;
    let point = *search.require_best()?;
    let flux = FluxReport::compute(model, flux_radii, &opts.reduced.resolution)?;
    let energy = ReducedEnergy::new(model, lambda, opts.reduced)?;
    let moment = energy.curvature_flux(&point.xi())?;
    let curvature = moment * (lambda.powi(3) / (128.0 * PI));
    let c = Vec3::new(
        flux.center_limit[0].limit,
        flux.center_limit[1].limit,
        flux.center_limit[2].limit,
    );
    let bary = point.barycenter();
    Ok(ComComparison {
        lambda,
        c_flux: arr(c),
        barycenter: arr(bary),
        curvature_term: arr(curvature),
        residual: arr(bary - c - curvature),
        point,
        flux,
    })
}

// ─── stationary scans ───────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub xi: [f64; 3],
    pub grad: [f64; 3],
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryScan {
    pub lambda: f64,
    pub delta: f64,
    pub spacing: f64,
    pub grid: Vec<ScanPoint>,
    pub min_grad_norm: f64,
    pub argmin: [f64; 3],
    /// Solver run from the grid minimum.
    pub refined: Option<CriticalPoint>,
}

impl StationaryScan {
    /// Smallest gradient norm seen, including the refinement.
    pub fn best_grad_norm(&self) -> f64 {
        self.refined
            .map_or(self.min_grad_norm, |p| p.grad_norm.min(self.min_grad_norm))
    }
}

/// `|∇G|` over a cubic grid filling `|ξ| ≤ 1 − δ`, then a Newton refinement
/// seeded at the grid minimum.
pub fn stationary_scan(
    model: &ConformalMetricModel,
    lambda: f64,
    delta: f64,
    spacing: f64,
    opts: &SolverOptions,
) -> Result<StationaryScan> {
    check_delta(delta)?;
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(Error::Domain(format!(
            "grid spacing {spacing} must lie in (0, 1)"
        )));
    }
    let energy = ReducedEnergy::new(model, lambda, opts.reduced)?;
    let pts = grid_points(1.0 - delta, spacing);
    let grid: Vec<ScanPoint> = pts
        .par_iter()
        .map(|x| {
            let g = energy.gradient(x)?;
            Ok(ScanPoint {
                xi: arr(*x),
                grad: arr(g),
                grad_norm: g.norm(),
            })
        })
        .collect::<Result<_>>()?;
    let best = grid
        .iter()
        .min_by(|a, b| a.grad_norm.partial_cmp(&b.grad_norm).expect("finite"))
        .copied()
        .expect("grid contains the origin");
    let refined = find_critical_point(model, lambda, delta, &[Vec3::from(best.xi)], opts)?
        .best()
        .copied();
    Ok(StationaryScan {
        lambda,
        delta,
        spacing,
        grid,
        min_grad_norm: best.grad_norm,
        argmin: best.xi,
        refined,
    })
}

// ─── convexity ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityMargin {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub margin: f64,
    /// Hypothesis violations found by sampling.
    pub warnings: Vec<String>,
}

/// Radial test fields for the convexity inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialField {
    /// `|x|^{−p}`.
    InversePower { p: f64 },
    /// `4(2a₁r^{−4} + a₂s^{−1}r^{−3} + a₃s^{−2}r^{−2})`: the plateau curvature of
    /// a shell at scale `s` with nonnegative amplitudes.
    ShellPlateau { a: [f64; 3], scale: f64 },
}

impl RadialField {
    pub fn eval(&self, x: &Vec3) -> f64 {
        let r = x.norm();
        match *self {
            RadialField::InversePower { p } => r.powf(-p),
            RadialField::ShellPlateau { a, scale } => {
                4.0 * (2.0 * a[0] / r.powi(4)
                    + a[1] / (scale * r.powi(3))
                    + a[2] / (scale * scale * r * r))
            }
        }
    }
}

/// Sample points on which the hypotheses `f ≥ 0` and `x·∇(|x|²f) ≤ 0` are
/// probed: the quadrature nodes of both spheres.
fn check_hypotheses<F>(f: &F, rules: &[&SphereRule]) -> Vec<String>
where
    F: Fn(&Vec3) -> f64,
{
    let mut warnings = Vec::new();
    let mut negative = 0usize;
    let mut increasing = 0usize;
    let mut worst = 0.0f64;
    for rule in rules {
        for n in rule.nodes() {
            let x = n.point;
            let v = f(&x);
            if v < 0.0 {
                negative += 1;
            }
            // d/ds [s²|x|² f(sx)] at s = 1, relative to |x|² f.
            let h = 1e-5;
            let w = |s: f64| s * s * x.norm_squared() * f(&(x * s));
            let d = (w(1.0 + h) - w(1.0 - h)) / (2.0 * h);
            let rel = d / (x.norm_squared() * v.abs()).max(f64::MIN_POSITIVE);
            if rel > 1e-6 {
                increasing += 1;
                worst = worst.max(rel);
            }
        }
    }
    if negative > 0 {
        warnings.push(format!("f < 0 at {negative} sample points"));
    }
    if increasing > 0 {
        warnings.push(format!(
            "x·∇(|x|²f) > 0 at {increasing} sample points (relative rate up to {worst:e})"
        ));
    }
    for w in &warnings {
        warn!("convexity hypothesis violated: {w}");
    }
    warnings
}

/// `∫_{S_{ξ₁,λ}} ḡ(ν̄, ξ₂ − ξ₁) f dμ̄ − ∫_{S_{ξ₂,λ}} ḡ(ν̄, ξ₂ − ξ₁) f dμ̄`, where
/// `S_{ξ,λ}` is the sphere of radius λ about λξ.
pub fn convexity_check<F>(
    f: F,
    xi1: &Vec3,
    xi2: &Vec3,
    lambda: f64,
    res: &Resolution,
) -> Result<ConvexityMargin>
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    for xi in [xi1, xi2] {
        if !(xi.norm() < 1.0) {
            return Err(Error::Domain(format!("|ξ| = {} must be < 1", xi.norm())));
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("λ = {lambda} must be positive")));
    }
    let d = xi2 - xi1;
    let r1 = SphereRule::adapted(xi1 * lambda, lambda, &[], res);
    let r2 = SphereRule::adapted(xi2 * lambda, lambda, &[], res);
    let warnings = check_hypotheses(&f, &[&r1, &r2]);
    let flux = |rule: &SphereRule| -> Result<f64> {
        Ok(integrate_sphere_vec(|n| Ok(n.normal * f(&n.point)), rule)?.dot(&d))
    };
    let lhs = flux(&r1)?;
    let rhs = flux(&r2)?;
    Ok(ConvexityMargin {
        lhs,
        rhs,
        margin: lhs - rhs,
        warnings,
    })
}

// ─── ray map ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayMap {
    pub theta: f64,
    /// `sin ζ / sin θ`.
    pub t: f64,
    /// `dθ/dζ`.
    pub theta_dot: f64,
    /// `ξ₁·e₃'` and `ξ₂·e₃'` with `e₃' = (ξ₂ − ξ₁)/|ξ₂ − ξ₁|`.
    pub a: f64,
    pub b: f64,
}

impl RayMap {
    /// Residual of `(cos ζ + b)/(cos θ + a) = sin ζ / sin θ` in product form.
    pub fn residual(&self, zeta: f64) -> f64 {
        (zeta.cos() + self.b) * self.theta.sin() - zeta.sin() * (self.theta.cos() + self.a)
    }
}

/// Solves `(cos ζ + b) sin θ = sin ζ (cos θ + a)` for `θ ∈ (0, ζ]` by
/// safeguarded Newton on a bisection bracket.
pub fn ray_map(zeta: f64, xi1: &Vec3, xi2: &Vec3) -> Result<RayMap> {
    if !(zeta > 0.0 && zeta < PI) {
        return Err(Error::Domain(format!("ζ = {zeta} must lie in (0, π)")));
    }
    for xi in [xi1, xi2] {
        if !(xi.norm() < 1.0) {
            return Err(Error::Domain(format!("|ξ| = {} must be < 1", xi.norm())));
        }
    }
    let d = xi2 - xi1;
    if d.norm() == 0.0 {
        return Err(Error::Domain("ξ₁ and ξ₂ must differ".into()));
    }
    let e = d / d.norm();
    let (a, b) = (xi1.dot(&e), xi2.dot(&e));
    let (sz, cz) = zeta.sin_cos();
    let f = |th: f64| (cz + b) * th.sin() - sz * (th.cos() + a);
    let df = |th: f64| (cz + b) * th.cos() + sz * th.sin();

    // f(0) = −sin ζ (1 + a) < 0 and f(ζ) = sin ζ (b − a) > 0.
    let (mut lo, mut hi) = (0.0, zeta);
    if !(f(lo) < 0.0 && f(hi) >= 0.0) {
        return Err(Error::RootBracketing(format!(
            "f(0) = {}, f(ζ) = {} for ζ = {zeta}",
            f(lo),
            f(hi)
        )));
    }
    let mut th = 0.5 * zeta;
    for _ in 0..200 {
        let v = f(th);
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = th;
        } else {
            hi = th;
        }
        let dv = df(th);
        let newton = th - v / dv;
        let next = if dv != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - th).abs() <= 4.0 * f64::EPSILON * th.abs().max(1e-300)
            || hi - lo <= 4.0 * f64::EPSILON * hi;
        th = next;
        if done {
            break;
        }
    }
    let t = sz / th.sin();
    let theta_dot = (th.cos() * cz + a * cz + sz * th.sin()) / (t * (1.0 + a * th.cos()));
    Ok(RayMap {
        theta: th,
        t,
        theta_dot,
        a,
        b,
    })
}
