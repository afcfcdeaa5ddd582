//! The experiment registry: E1 through E6 and user-defined traces.
//!
//! Each run collects per-λ records and a list of assertions; every assertion
//! carries its measured value and tolerance so a result file can be audited
//! without rerunning anything.

use std::f64::consts::PI;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentId, SCHEMA_VERSION};
use crate::flux::{
    hawking_mass, schwarzschild_willmore_closed_form, willmore_energy_sphere, FluxReport,
};
use crate::metric::catalog::plateau_laplacian;
use crate::metric::{laplacian_fd, ConformalMetricModel, Perturbation};
use crate::quadrature::{integrate_sphere_vec, SphereRule};
use crate::reduced::{hawking_from_g, ReducedEnergy, ReducedEnergyEval};
use crate::solver::{
    com_compare, convexity_check, find_critical_point, ray_map, stationary_scan, trace_branch,
    BranchTrace, ComComparison, CriticalPoint, RadialField, StationaryScan, DEGENERACY_THRESHOLD,
};
use crate::{Error, Result, Vec3};

/// One checked claim of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    /// Bound the measured value is compared against.
    pub tolerance: f64,
    /// `"<="` or `">="`.
    pub comparison: String,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            comparison: "<=".into(),
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured >= tolerance,
            measured,
            tolerance,
            comparison: ">=".into(),
        }
    }
}

/// What was computed at one area radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRecord {
    pub lambda: f64,
    pub point: Option<CriticalPoint>,
    pub energy: Option<ReducedEnergyEval>,
    /// `2 − G/(32πλ)` at the critical point.
    pub hawking_from_g: Option<f64>,
    /// Hawking mass of the coordinate sphere `S_λ(λξ)`.
    pub hawking_mass: Option<f64>,
    pub error: Option<String>,
}

/// One row of the shell-identity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    /// Quadrature of `λ²∫_{S_λ(λξ)} Δ̄η ν̄ dμ̄` along the sweep direction.
    pub quadrature: [f64; 3],
    /// Closed-form singular part multiplying ξ.
    pub singular: [f64; 3],
    pub residual: f64,
    /// Residual when the bracket multiplies ξ/|ξ| instead.
    pub residual_unit: f64,
}

/// One random draw of the convexity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityDraw {
    pub field: RadialField,
    pub xi1: [f64; 3],
    pub xi2: [f64; 3],
    pub lambda: f64,
    pub margin: f64,
    pub warnings: Vec<String>,
    pub zeta: f64,
    pub theta: f64,
    pub t: f64,
    pub ray_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStamp {
    pub unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub records: Vec<LambdaRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FluxReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<BranchTrace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<ComComparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scans: Vec<StationaryScan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub draws: Vec<ConvexityDraw>,
    pub assertions: Vec<Assertion>,
    /// The only field that differs between identical runs.
    pub timestamp: RunStamp,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failed_assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }
}

#[derive(Default)]
struct Outcome {
    records: Vec<LambdaRecord>,
    flux: Option<FluxReport>,
    trace: Option<BranchTrace>,
    comparisons: Vec<ComComparison>,
    scans: Vec<StationaryScan>,
    sweep: Vec<SweepRow>,
    draws: Vec<ConvexityDraw>,
    assertions: Vec<Assertion>,
}

/// Runs a configured experiment. Solver failures at individual λ are
/// recorded and the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    info!("running {} ({})", config.id, config.id.description());
    let out = match config.id {
        ExperimentId::E1 => run_e1(config)?,
        ExperimentId::E2 => run_e2(config)?,
        ExperimentId::E3 => run_e3(config)?,
        ExperimentId::E4 => run_e4(config)?,
        ExperimentId::E5 => run_e5(config)?,
        ExperimentId::E6 => run_e6(config)?,
        ExperimentId::Custom => run_custom(config)?,
    };
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: out.records,
        flux: out.flux,
        trace: out.trace,
        comparisons: out.comparisons,
        scans: out.scans,
        sweep: out.sweep,
        draws: out.draws,
        assertions: out.assertions,
        timestamp: RunStamp {
            unix_seconds,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// Record for a critical point: `G`, its Hawking-mass reading and the
/// Hawking mass of the coordinate sphere through it.
fn record_for(
    config: &ExperimentConfig,
    lambda: f64,
    point: Option<CriticalPoint>,
) -> LambdaRecord {
    let mut rec = LambdaRecord {
        lambda,
        point,
        energy: None,
        hawking_from_g: None,
        hawking_mass: None,
        error: None,
    };
    let Some(p) = point else {
        rec.error = Some("no critical point".into());
        return rec;
    };
    let opts = config.solver_options();
    let eval =
        ReducedEnergy::new(&config.model, lambda, opts.reduced).and_then(|e| e.evaluate(&p.xi()));
    match eval {
        Ok(ev) => {
            rec.hawking_from_g = Some(hawking_from_g(ev.g, lambda));
            rec.energy = Some(ev);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    match hawking_mass(&config.model, &p.barycenter(), lambda, &config.resolution) {
        Ok(m) => rec.hawking_mass = Some(m),
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn solve_records(config: &ExperimentConfig) -> Vec<LambdaRecord> {
    let opts = config.solver_options();
    config
        .lambdas
        .values()
        .into_iter()
        .map(|lambda| {
            match find_critical_point(&config.model, lambda, config.delta, &config.seeds(), &opts) {
                Ok(search) => record_for(config, lambda, search.best().copied()),
                Err(e) => LambdaRecord {
                    lambda,
                    point: None,
                    energy: None,
                    hawking_from_g: None,
                    hawking_mass: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn center_norm(flux: &FluxReport) -> f64 {
    flux.center_limit
        .iter()
        .map(|e| e.limit * e.limit)
        .sum::<f64>()
        .sqrt()
}

fn run_e1(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let flux = FluxReport::compute(&config.model, &config.flux_radii, &config.resolution)?;
    out.assertions.push(Assertion::at_most(
        "adm mass limit |m − 2|",
        (flux.mass_limit.limit - 2.0).abs(),
        1e-3,
    ));
    out.assertions.push(Assertion::at_most(
        "center of mass limit |C|",
        center_norm(&flux),
        1e-3,
    ));
    out.flux = Some(flux);
    out.records = solve_records(config);
    for rec in &out.records {
        let l = rec.lambda;
        let xi = rec.point.map_or(f64::INFINITY, |p| p.xi().norm());
        out.assertions
            .push(Assertion::at_most(format!("|ξ| at λ = {l}"), xi, 1e-9));
        let mh = rec.hawking_mass.unwrap_or(f64::NAN);
        out.assertions.push(Assertion::at_most(
            format!("|m_H − 2| at λ = {l}"),
            (mh - 2.0).abs(),
            1e-3,
        ));
        let w = willmore_energy_sphere(&config.model, &Vec3::zeros(), l, &config.resolution)?;
        let exact = schwarzschild_willmore_closed_form(l);
        out.assertions.push(Assertion::at_most(
            format!("Willmore energy relative error at λ = {l}"),
            ((w - exact) / exact).abs(),
            1e-6,
        ));
    }
    Ok(out)
}

/// `(mantissa, exponent)` with `λ = m·10^k`, `1 ≤ m < 10`.
fn decade_split(lambda: f64) -> (f64, i32) {
    let k = lambda.log10().floor() as i32;
    (lambda / 10f64.powi(k), k)
}

fn run_e2(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let opts = config.solver_options();
    let lambdas = config.lambdas.values();
    let trace = trace_branch(
        &config.model,
        &lambdas,
        config.delta,
        &config.seeds(),
        &opts,
    )?;
    for &lambda in &lambdas {
        let point = trace
            .entries
            .iter()
            .find(|e| e.lambda == lambda)
            .map(|e| e.point);
        let rec = record_for(config, lambda, point);
        let b = point.map_or(Vec3::repeat(f64::NAN), |p| p.barycenter());
        let (m, _) = decade_split(lambda);
        if (m - 4.0).abs() < 1e-9 {
            out.assertions.push(Assertion::at_most(
                format!("plateau λ = {lambda}: |λξ₃ − 1/24|·24"),
                (b[2] - 1.0 / 24.0).abs() * 24.0,
                0.15,
            ));
        } else if (m - 7.0).abs() < 1e-9 {
            out.assertions.push(Assertion::at_most(
                format!("gap λ = {lambda}: |λξ|"),
                b.norm(),
                0.02,
            ));
        }
        out.records.push(rec);
    }
    out.assertions.push(Assertion::at_least(
        "oscillation of λξ₃ over the trace",
        trace.oscillation[2],
        0.03,
    ));
    out.trace = Some(trace);

    let flux = FluxReport::compute(&config.model, &config.flux_radii, &config.resolution)?;
    out.assertions.push(Assertion::at_most(
        "flux center limit |C|",
        center_norm(&flux),
        5e-2,
    ));
    out.flux = Some(flux);

    // The comparator at the largest plateau radius.
    if let Some(&lambda) = lambdas
        .iter()
        .rev()
        .find(|l| (decade_split(**l).0 - 4.0).abs() < 1e-9)
    {
        let cmp = com_compare(
            &config.model,
            lambda,
            config.delta,
            &config.seeds(),
            &config.flux_radii,
            &opts,
        )?;
        out.assertions.push(Assertion::at_most(
            format!("comparator residual / |λξ| at λ = {lambda}"),
            cmp.residual_norm() / cmp.barycenter_norm(),
            0.15,
        ));
        out.comparisons.push(cmp);
    }
    Ok(out)
}

/// `−2π[a₁s^{−2} + (a₁+a₂)s^{−1} + (a₁−a₃)log s]` with `s = 1 − |ξ|`.
pub fn sphere_moment_bracket(a: &[f64; 4], t: f64) -> f64 {
    let s = 1.0 - t;
    -2.0 * PI * (a[0] / (s * s) + (a[0] + a[1]) / s + (a[0] - a[2]) * s.ln())
}

/// Sweep points of the shell identity.
pub const SWEEP_T: [f64; 13] = [
    0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99,
];

/// `λ²∫_{S_λ(λξ)} Δ̄η ν̄ dμ̄` for the radial part of the plateau Laplacian,
/// against its singular closed form.
pub fn shell_identity_sweep(
    a: &[f64; 4],
    lambda: f64,
    dir: &Vec3,
    res: &crate::quadrature::Resolution,
) -> Result<Vec<SweepRow>> {
    let dir = dir.normalize();
    let radial = [a[0], a[1], a[2], 0.0];
    SWEEP_T
        .iter()
        .map(|&t| {
            let xi = dir * t;
            let rule = SphereRule::adapted(xi * lambda, lambda, &[], res);
            let q = integrate_sphere_vec(
                |n| Ok(n.normal * plateau_laplacian(&radial, lambda, &n.point)),
                &rule,
            )? * (lambda * lambda);
            let bracket = sphere_moment_bracket(a, t);
            let singular = xi * bracket;
            let residual_unit = if t > 0.0 {
                (q - dir * bracket).norm()
            } else {
                q.norm()
            };
            Ok(SweepRow {
                t,
                quadrature: [q[0], q[1], q[2]],
                singular: [singular[0], singular[1], singular[2]],
                residual: (q - singular).norm(),
                residual_unit,
            })
        })
        .collect()
}

fn run_e3(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let Perturbation::Shell(shell) = config.model.perturbation else {
        return Err(Error::InvalidConfig("E3 needs a single shell model".into()));
    };
    let lambda = shell.lambda();
    let res = config.resolution;

    let sweep = shell_identity_sweep(&shell.a, lambda, &Vec3::new(1.0, -1.0, 0.5), &res)?;
    let at = |t: f64| {
        sweep
            .iter()
            .find(|r| r.t == t)
            .map_or(f64::NAN, |r| r.residual)
    };
    out.assertions.push(Assertion::at_most(
        "sweep residual growth |r(0.99)| / |r(0.9)|",
        at(0.99) / at(0.9),
        2.0,
    ));
    out.sweep = sweep;

    let a4 = shell.a[3];
    let mut worst: f64 = 0.0;
    for xi in [
        Vec3::zeros(),
        Vec3::new(0.3, -0.2, 0.1),
        Vec3::new(-0.5, 0.4, 0.6),
    ] {
        let rule = SphereRule::adapted(xi * lambda, lambda, &[], &res);
        let v = integrate_sphere_vec(
            |n| Ok(n.normal * (6.0 * a4 * n.point[2] / lambda.powi(5))),
            &rule,
        )? * (lambda * lambda);
        worst = worst.max((v - Vec3::z() * (8.0 * PI * a4)).norm());
    }
    out.assertions
        .push(Assertion::at_most("cubic moment |v − 8πa₄e₃|", worst, 1e-8));

    let (p0, p1) = shell.plateau();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let r = p0 * (p1 / p0).powf((i as f64 + 0.5) / 20.0);
        let (th, ph) = (0.2 + 0.13 * i as f64, 0.7 * i as f64);
        let x = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()) * r;
        let fd = laplacian_fd(|p| Ok(shell.eta_jet(p).value), &x)?;
        let exact = shell.laplacian_closed_form(&x)?;
        worst = worst.max((fd / exact - 1.0).abs());
    }
    out.assertions.push(Assertion::at_most(
        "FD Laplacian relative error",
        worst,
        1e-5,
    ));

    let energy = ReducedEnergy::new(&config.model, lambda, config.solver_options().reduced)?;
    let mut worst: f64 = 0.0;
    for xi in [Vec3::new(0.2, 0.1, -0.3), Vec3::new(-0.1, 0.4, 0.25)] {
        let g = energy.grad_g2(&xi)?;
        let h = 1e-4;
        let mut fd = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            fd[k] = (energy.g2(&(xi + e))?.0 - energy.g2(&(xi - e))?.0) / (2.0 * h);
        }
        worst = worst.max((fd - g).norm() / g.norm());
    }
    out.assertions
        .push(Assertion::at_most("∇G₂ vs FD of G₂, relative", worst, 1e-4));
    Ok(out)
}

fn random_xi(rng: &mut ChaCha8Rng, max: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n * rng.gen_range(0.0..max);
        }
    }
}

/// Random convexity draws cycling through the three test fields.
pub fn convexity_draws(
    samples: usize,
    seed: u64,
    lambdas: &[f64],
    res: &crate::quadrature::Resolution,
) -> Result<Vec<ConvexityDraw>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(samples);
    for i in 0..samples {
        let lambda = lambdas[i % lambdas.len()];
        let field = match i % 3 {
            0 => RadialField::InversePower { p: 4.0 },
            1 => RadialField::InversePower { p: 2.0 },
            _ => RadialField::ShellPlateau {
                a: [
                    rng.gen_range(0.0..5.0),
                    rng.gen_range(0.0..5.0),
                    rng.gen_range(0.0..5.0),
                ],
                scale: lambda,
            },
        };
        let xi1 = random_xi(&mut rng, 0.8);
        let xi2 = random_xi(&mut rng, 0.8);
        let zeta = rng.gen_range(1e-3..PI - 1e-3);
        let m = convexity_check(|x| field.eval(x), &xi1, &xi2, lambda, res)?;
        let r = ray_map(zeta, &xi1, &xi2)?;
        draws.push(ConvexityDraw {
            field,
            xi1: [xi1[0], xi1[1], xi1[2]],
            xi2: [xi2[0], xi2[1], xi2[2]],
            lambda,
            margin: m.margin,
            warnings: m.warnings,
            zeta,
            theta: r.theta,
            t: r.t,
            ray_residual: r.residual(zeta).abs(),
        });
    }
    Ok(draws)
}

fn run_e4(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let draws = convexity_draws(
        config.samples,
        config.rng_seed,
        &config.lambdas.values(),
        &config.resolution,
    )?;
    let min_margin = draws.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min);
    out.assertions.push(Assertion::at_least(
        "smallest convexity margin",
        min_margin,
        -1e-9,
    ));
    let warnings = draws.iter().filter(|d| !d.warnings.is_empty()).count();
    out.assertions.push(Assertion::at_most(
        "draws with hypothesis warnings",
        warnings as f64,
        0.0,
    ));
    let worst = draws.iter().map(|d| d.ray_residual).fold(0.0, f64::max);
    out.assertions
        .push(Assertion::at_most("largest ray-map residual", worst, 1e-10));
    out.draws = draws;
    Ok(out)
}

fn run_e5(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let opts = config.solver_options();
    let Perturbation::ShellSum(sum) = config.model.perturbation else {
        return Err(Error::InvalidConfig("E5 needs a shell-sum model".into()));
    };
    let mut control = sum;
    control.a[3] = 0.0;
    let control_model = ConformalMetricModel {
        perturbation: Perturbation::ShellSum(control),
        ..config.model.clone()
    };
    for lambda in config.lambdas.values() {
        let scan = stationary_scan(
            &config.model,
            lambda,
            config.delta,
            config.scan_spacing,
            &opts,
        )?;
        out.assertions.push(Assertion::at_least(
            format!("min grid |∇G| at λ = {lambda}"),
            scan.min_grad_norm,
            1000.0,
        ));
        let ctrl = stationary_scan(
            &control_model,
            lambda,
            config.delta,
            config.scan_spacing,
            &opts,
        )?;
        out.assertions.push(Assertion::at_most(
            format!("control (a₄ = 0) refined |∇G| at λ = {lambda}"),
            ctrl.best_grad_norm(),
            1e-6,
        ));
        out.scans.push(scan);
        out.scans.push(ctrl);
    }
    Ok(out)
}

fn run_e6(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let k = match config.model.perturbation {
        Perturbation::ShellSum(s) => s.k.unwrap_or(s.i_min) as f64,
        Perturbation::Shell(s) => s.k as f64,
        _ => return Err(Error::InvalidConfig("E6 needs a shell model".into())),
    };
    out.records = solve_records(config);
    for rec in &out.records {
        let l = rec.lambda;
        let xi = rec.point.map_or(f64::NAN, |p| p.xi().norm());
        out.assertions.push(Assertion::at_least(
            format!("|ξ| at λ = {l} (bound 1 − 2k⁻²)"),
            xi,
            1.0 - 2.0 / (k * k),
        ));
        let g = rec.energy.map_or(f64::NAN, |e| e.g);
        out.assertions
            .push(Assertion::at_most(format!("G at λ = {l}"), g, 0.0));
        out.assertions.push(Assertion::at_least(
            format!("2 − G/(32πλ) at λ = {l}"),
            rec.hawking_from_g.unwrap_or(f64::NAN),
            2.0,
        ));
        // Semidefinite up to FD noise: a local minimum, possibly degenerate.
        let ev = rec.point.map_or([f64::NAN; 3], |p| p.hessian_eigenvalues);
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        out.assertions.push(Assertion::at_least(
            format!("smallest Hessian eigenvalue / max at λ = {l} (local minimum)"),
            ev[0] / scale,
            -DEGENERACY_THRESHOLD,
        ));
        // Positive definite beyond the noise, as in the Minimum classification.
        out.assertions.push(Assertion::at_least(
            format!("smallest Hessian eigenvalue / max at λ = {l} (positive definite)"),
            ev[0] / scale,
            DEGENERACY_THRESHOLD,
        ));
    }
    Ok(out)
}

fn run_custom(config: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let opts = config.solver_options();
    let lambdas = config.lambdas.values();
    let trace = trace_branch(
        &config.model,
        &lambdas,
        config.delta,
        &config.seeds(),
        &opts,
    )?;
    for &lambda in &lambdas {
        let point = trace
            .entries
            .iter()
            .find(|e| e.lambda == lambda)
            .map(|e| e.point);
        out.records.push(record_for(config, lambda, point));
    }
    out.trace = Some(trace);
    out.flux = Some(FluxReport::compute(
        &config.model,
        &config.flux_radii,
        &config.resolution,
    )?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_passes_and_is_reproducible() {
        let cfg = ExperimentConfig::preset(ExperimentId::E1);
        let a = run_experiment(&cfg).unwrap();
        if let Some(x) = a.failed_assertions().next() {
            panic!("{x:?}");
        }
        assert_eq!(a.records.len(), 3);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.assertions, b.assertions);
    }

    #[test]
    fn decade_split_examples() {
        assert_eq!(decade_split(400.0), (4.0, 2));
        let (m, k) = decade_split(7000.0);
        assert!((m - 7.0).abs() < 1e-12 && k == 3);
    }

    #[test]
    fn assertion_directions() {
        assert!(Assertion::at_most("x", 1.0, 1.0).passed);
        assert!(!Assertion::at_most("x", f64::NAN, 1.0).passed);
        assert!(Assertion::at_least("x", 2.0, 1.0).passed);
        assert!(!Assertion::at_least("x", 0.5, 1.0).passed);
    }

    #[test]
    fn sweep_is_zero_at_origin_and_grows_with_literal_form() {
        let res = crate::quadrature::Resolution::default();
        let rows = shell_identity_sweep(&[1.0, 4.0, 4.0, 0.0], 1e4, &Vec3::x(), &res).unwrap();
        assert!(rows[0].residual < 1e-9);
        let last = rows.last().unwrap();
        // Literal form: the residual carries 2πa₁/(1 − |ξ|).
        assert!(
            (last.residual / (2.0 * PI / 0.01) - 1.0).abs() < 0.1,
            "{last:?}"
        );
        assert!(last.residual_unit < 30.0);
    }

    #[test]
    fn convexity_draws_are_seeded() {
        let res = crate::quadrature::Resolution::with_sphere(24, 48);
        let a = convexity_draws(6, 4, &[3.0, 30.0], &res).unwrap();
        let b = convexity_draws(6, 4, &[3.0, 30.0], &res).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a[2].field, RadialField::ShellPlateau { .. }));
        assert!(a.iter().all(|d| d.margin >= -1e-9));
    }
}
