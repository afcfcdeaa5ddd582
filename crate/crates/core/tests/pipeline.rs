use std::f64::consts::PI;

use approx::assert_relative_eq;
use willmore_com::config::{ExperimentConfig, ExperimentId};
use willmore_com::experiment::run_experiment;
use willmore_com::metric::{ComOscillator, ConformalMetricModel, Perturbation};
use willmore_com::quadrature::{integrate_exterior, ExteriorRule, Resolution, SupportDeclaration};
use willmore_com::reduced::{hawking_from_g, ReducedEnergy};
use willmore_com::report::{emit_report, load_result};
use willmore_com::solver::{default_seeds, find_critical_point, SolverOptions};
use willmore_com::Vec3;

#[test]
fn exterior_of_offset_ball_matches_annulus_integral() {
    // The ball lies inside |x| < 40, so the exterior integral over the
    // annulus 50 ≤ |x| ≤ 200 is 4π(1/50 − 1/200) for |x|⁻⁴.
    let rule = ExteriorRule {
        ball_center: Vec3::new(12.0, -5.0, 3.0),
        ball_radius: 25.0,
        support: SupportDeclaration::Compact {
            segments: vec![(50.0, 200.0)],
        },
        resolution: Resolution::default(),
    };
    let v = integrate_exterior(|x| Ok(x.norm().powi(-4)), &rule).unwrap();
    assert_relative_eq!(
        v.value,
        4.0 * PI * (1.0 / 50.0 - 1.0 / 200.0),
        max_relative = 1e-12
    );
    assert_eq!(v.tail_bound, 0.0);
}

#[test]
fn exterior_cutting_through_support() {
    // Ball |x − c| < ρ meets the support; integrate 1 over 10 ≤ |x| ≤ 30
    // outside the ball and compare with the volume computed by caps.
    let c = Vec3::new(0.0, 0.0, 8.0);
    let rho = 15.0;
    let rule = ExteriorRule {
        ball_center: c,
        ball_radius: rho,
        support: SupportDeclaration::Compact {
            segments: vec![(10.0, 30.0)],
        },
        resolution: Resolution::default(),
    };
    let v = integrate_exterior(|_| Ok(1.0), &rule).unwrap();
    // Volume of the shell minus its intersection with the ball, which is
    // the ball minus B₁₀(0) (the ball lies inside B₃₀(0)).
    let d: f64 = 8.0;
    let r: f64 = 10.0;
    let lens = PI
        * (rho + r - d).powi(2)
        * (d * d + 2.0 * d * r - 3.0 * r * r + 2.0 * d * rho + 6.0 * r * rho - 3.0 * rho * rho)
        / (12.0 * d);
    let ball = 4.0 / 3.0 * PI * rho.powi(3);
    let shell = 4.0 / 3.0 * PI * (30f64.powi(3) - r.powi(3));
    let expected = shell - (ball - lens);
    assert_relative_eq!(v.value, expected, max_relative = 1e-9);
}

#[test]
fn report_round_trips_through_disk() {
    let cfg = ExperimentConfig::preset(ExperimentId::E1);
    let result = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&result, dir.path()).unwrap();
    assert_eq!(load_result(&files.result_json).unwrap(), result);
}

#[test]
fn critical_point_independent_of_thread_count() {
    let model = ConformalMetricModel::with_perturbation(Perturbation::ComOscillator(
        ComOscillator::default(),
    ));
    let opts = SolverOptions::default();
    let seeds = default_seeds(0.25);
    let solve = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| find_critical_point(&model, 400.0, 0.25, &seeds, &opts).unwrap())
    };
    let a = solve(1);
    let b = solve(3);
    assert_eq!(a, b);
    let best = a.best().unwrap();
    // On the plateau the barycenter sits near e₃/24.
    assert!((best.barycenter()[2] - 1.0 / 24.0).abs() < 0.15 / 24.0);

    let e = ReducedEnergy::new(&model, 400.0, opts.reduced).unwrap();
    let ev = e.evaluate(&best.xi()).unwrap();
    assert!(ev.grad().norm() <= 1e-6 * e.gradient(&(Vec3::z() * 0.3)).unwrap().norm().max(1.0));
    assert!(hawking_from_g(ev.g, 400.0).is_finite());
}
