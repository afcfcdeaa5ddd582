use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn shell(a: [f64; 4]) -> ShellPerturbation {
    ShellPerturbation::new(2, 2, a).unwrap()
}

fn oscillator() -> ConformalMetricModel {
    ConformalMetricModel::with_perturbation(Perturbation::ComOscillator(ComOscillator::default()))
}

fn unit(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

#[test]
fn schwarzschild_is_scalar_flat() {
    let m = ConformalMetricModel::schwarzschild();
    let mut r = 2.0;
    while r <= 1e6 {
        let x = unit(0.7, 1.9) * r;
        assert!(m.scalar_curvature(&x).unwrap().abs() <= 1e-9);
        r *= 3.7;
    }
}

#[test]
fn singularity_inside_inner_boundary() {
    let m = ConformalMetricModel::schwarzschild();
    assert!(matches!(
        m.scalar_curvature(&Vec3::new(0.5, 0.0, 0.0)),
        Err(Error::Singularity { .. })
    ));
    assert!(m.metric_deviation(&Vec3::new(0.0, 0.2, 0.0)).is_err());
}

#[test]
fn oscillator_plateau_curvature() {
    let m = oscillator();
    let x = unit(0.4, 0.3) * 400.0;
    let u = m.conformal_factor(&x).unwrap().value;
    let r = x.norm();
    let leading = 4.0 * x[2] / r.powi(6);
    let got = m.scalar_curvature(&x).unwrap();
    assert_relative_eq!(got, leading / u.powi(5), max_relative = 1e-12);
    // The u^{−5} factor alone is 1 − 5/400 + … ≈ 0.9876 here.
    assert!((got / leading - 1.0).abs() < 0.013);
    assert!((got / leading - u.powi(-5)).abs() < 1e-12);
}

#[test]
fn oscillator_curvature_is_odd_at_leading_order() {
    let m = oscillator();
    for &r in &[350.0, 3500.0, 35000.0] {
        let x = unit(0.9, 2.2) * r;
        let plus = m.scalar_curvature(&x).unwrap();
        let minus = m.scalar_curvature(&-x).unwrap();
        // R(x) + R(−x) = O(|x|^{−7}) against |R| ~ |x|^{−5}.
        let ratio = (plus + minus).abs() / plus.abs();
        assert!(ratio * r < 30.0, "r={r}, ratio={ratio}");
    }
}

#[test]
fn shell_plateau_curvature() {
    let a = [1.0, 4.0, 4.0, 10.0];
    let s = shell(a);
    let m = ConformalMetricModel::with_perturbation(Perturbation::Shell(s));
    let x = unit(1.1, 0.2) * 5.3e4;
    let u = m.conformal_factor(&x).unwrap().value;
    let expected = -4.0 / u.powi(5) * catalog::plateau_laplacian(&a, s.lambda(), &x);
    assert_relative_eq!(
        m.scalar_curvature(&x).unwrap(),
        expected,
        max_relative = 1e-10
    );
}

#[test]
fn shell_laplacian_examples() {
    let x = unit(0.3, 0.8) * 2.0e4;
    let r = x.norm();
    let s = shell([1.0, 0.0, 0.0, 0.0]);
    assert_relative_eq!(
        s.laplacian_closed_form(&x).unwrap(),
        2.0 / r.powi(4),
        max_relative = 1e-14
    );
    let s = shell([0.0, 0.0, 0.0, 1.0]);
    assert_relative_eq!(
        s.laplacian_closed_form(&x).unwrap(),
        6.0 * x[2] / s.lambda().powi(5),
        max_relative = 1e-14
    );
    let s = shell([0.0, 1.0, 0.0, 0.0]);
    assert_relative_eq!(
        s.laplacian_closed_form(&x).unwrap(),
        1.0 / (s.lambda() * r.powi(3)),
        max_relative = 1e-14
    );
    assert!(matches!(
        s.laplacian_closed_form(&Vec3::new(100.0, 0.0, 0.0)),
        Err(Error::OutOfPlateau { .. })
    ));
}

#[test]
fn fd_laplacian_matches_closed_form_on_plateau() {
    for (k, l) in [(2, 2), (3, 2), (1, 2), (2, 3)] {
        let s = ShellPerturbation::new(k, l, [1.0, 4.0, 4.0, 10.0]).unwrap();
        let (p0, p1) = s.plateau();
        for i in 0..25 {
            let r = p0 * (p1 / p0).powf((i as f64 + 0.5) / 25.0);
            let x = unit(0.1 + 0.11 * i as f64, 0.37 * i as f64) * r;
            let fd = laplacian_fd(|p| Ok(s.eta_jet(p).value), &x).unwrap();
            let exact = s.laplacian_closed_form(&x).unwrap();
            assert!(
                (fd / exact - 1.0).abs() < 1e-5,
                "k={k} l={l} r={r}: {fd} vs {exact}"
            );
        }
    }
}

#[test]
fn closed_form_jets_match_finite_differences_everywhere() {
    let models = [
        oscillator(),
        ConformalMetricModel::with_perturbation(Perturbation::Shell(shell([1.0, 4.0, 4.0, 10.0]))),
        ConformalMetricModel::with_perturbation(Perturbation::ShellSum(ShellSum {
            k: Some(3),
            i_min: 1,
            i_max: 3,
            a: [2.0, 3.0, 5.0, 0.0],
        })),
        glued(),
    ];
    for m in &models {
        let support = m.perturbation.curvature_support(1e6);
        for &(a, b) in &support.segments {
            for j in 1..8 {
                let r = a + (b - a) * j as f64 / 8.0;
                let x = unit(0.3 + 0.2 * j as f64, 1.1 * j as f64) * r;
                let jet = m.perturbation_jet(&x);
                // The glued ψ is recovered as w^{1/4} − S, so its differences
                // carry O(ε) noise and need a wider stencil.
                let (step, tol) = match m.perturbation {
                    Perturbation::GluedSlowDivergence(_) => (5e-3, 2e-3),
                    _ => (1e-4, 1e-4),
                };
                let f = |p: &Vec3| m.perturbation_jet(p).value;
                // Fourth-order Richardson combination of two central stencils.
                let fd = (4.0 * laplacian_fd_step(f, &x, step * r)
                    - laplacian_fd_step(f, &x, 2.0 * step * r))
                    / 3.0;
                let scale = jet.laplacian.abs().max(1e-3 * jet.value.abs() / (r * r));
                // Rounding floor of the stencil; u − S is formed from O(1)
                // values for the glued metric.
                let magnitude = if tol > 1e-4 { 1.0 } else { jet.value.abs() };
                let noise = 64.0 * f64::EPSILON * magnitude / (step * r).powi(2);
                assert!(
                    (fd - jet.laplacian).abs() <= tol * scale + noise,
                    "{}: r={r}, fd={fd}, exact={}",
                    m.perturbation.name(),
                    jet.laplacian
                );
                let h = if tol > 1e-4 { 1e-3 * r } else { 1e-5 * r };
                for k in 0..3 {
                    let mut e = Vec3::zeros();
                    e[k] = h;
                    let d = (m.perturbation_jet(&(x + e)).value
                        - m.perturbation_jet(&(x - e)).value)
                        / (2.0 * h);
                    let g = jet.gradient[k];
                    assert!(
                        (d - g).abs()
                            <= if tol > 1e-4 { tol } else { 1e-6 }
                                * jet.gradient.norm().max(jet.value.abs() / r)
                                + 8.0 * f64::EPSILON * magnitude / h,
                        "{}: gradient r={r}: {d} vs {g}",
                        m.perturbation.name()
                    );
                }
            }
        }
    }
}

fn laplacian_fd_step(f: impl Fn(&Vec3) -> f64, x: &Vec3, h: f64) -> f64 {
    let f0 = f(x);
    let mut lap = 0.0;
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        lap += f(&(x + e)) - 2.0 * f0 + f(&(x - e));
    }
    lap / (h * h)
}

#[test]
fn fd_scalar_curvature_agrees() {
    let m = oscillator();
    let x = unit(0.6, 0.1) * 2.5e3;
    let exact = m.scalar_curvature(&x).unwrap();
    let fd = m.scalar_curvature_fd(&x).unwrap();
    assert_relative_eq!(fd, exact, max_relative = 1e-5);
}

#[test]
fn metric_deviation_examples() {
    let m = ConformalMetricModel::schwarzschild();
    let d = m.metric_deviation(&Vec3::new(3.0, 4.0, 12.0)).unwrap();
    assert_eq!(d.sigma, Mat3::zeros());
    assert!(d.dsigma.iter().all(|s| *s == Mat3::zeros()));

    let m = oscillator();
    let x = unit(0.5, 0.9) * 4.0e2;
    let r = x.norm();
    let s = 1.0 + 1.0 / r;
    let psi = -0.125 * x[2] / r.powi(4);
    let binomial =
        4.0 * s.powi(3) * psi + 6.0 * s * s * psi * psi + 4.0 * s * psi.powi(3) + psi.powi(4);
    let d = m.metric_deviation(&x).unwrap();
    assert_relative_eq!(d.sigma[(0, 0)], binomial, max_relative = 1e-9);
    assert_eq!(d.sigma[(0, 1)], 0.0);
    assert_relative_eq!(d.h[(2, 2)], (s + psi).powi(4) - 1.0, max_relative = 1e-12);
}

#[test]
fn metric_deviation_derivatives() {
    let m = oscillator();
    let x = unit(1.2, 0.4) * 2.4e3;
    let d = m.metric_deviation(&x).unwrap();
    let h = 0.5;
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        let p = m.metric_deviation(&(x + e)).unwrap();
        let q = m.metric_deviation(&(x - e)).unwrap();
        let fd = (p.sigma[(1, 1)] - q.sigma[(1, 1)]) / (2.0 * h);
        assert_relative_eq!(
            fd,
            d.dsigma[k][(1, 1)],
            max_relative = 1e-5,
            epsilon = 1e-20
        );
        let fd = (p.h[(1, 1)] - q.h[(1, 1)]) / (2.0 * h);
        assert_relative_eq!(fd, d.dh[k][(1, 1)], max_relative = 1e-6);
    }
}

#[test]
fn oscillator_deviation_decays_cubically() {
    let m = oscillator();
    for &r in &[1.0e3, 4.0e3, 4.0e4] {
        let mut sup: f64 = 0.0;
        for i in 0..40 {
            let x = unit(0.08 * i as f64, 0.5 * i as f64) * r;
            sup = sup.max(m.metric_deviation(&x).unwrap().sigma[(0, 0)].abs() * r.powi(3));
        }
        assert!(sup.is_finite() && sup <= 0.51, "r={r}: {sup}");
    }
}

#[test]
fn mean_curvature_examples() {
    let m = ConformalMetricModel::schwarzschild();
    let o = Vec3::zeros();
    let dir = unit(0.3, 2.0);
    assert!(m.mean_curvature_sphere(&o, 1.0, &dir).unwrap().abs() < 1e-15);
    let lam: f64 = 37.0;
    let expected = 2.0 / lam * (1.0 - 1.0 / lam) / (1.0 + 1.0 / lam).powi(3);
    assert_relative_eq!(
        m.mean_curvature_sphere(&o, lam, &dir).unwrap(),
        expected,
        max_relative = 1e-14
    );

    let flat = ConformalMetricModel::flat();
    assert_relative_eq!(
        flat.mean_curvature_sphere(&Vec3::new(5.0, 1.0, 0.0), 3.0, &dir)
            .unwrap(),
        2.0 / 3.0,
        max_relative = 1e-15
    );
    assert!(m.mean_curvature_sphere(&o, 0.5, &dir).is_err());
}

#[test]
fn ricci_leading_examples() {
    let r = 7.0;
    let ric = ricci_schwarzschild_leading(&Vec3::new(r, 0.0, 0.0));
    let expected = Mat3::from_diagonal(&Vec3::new(-4.0, 2.0, 2.0)) / r.powi(3);
    assert!((ric - expected).norm() < 1e-16);
    let ric = ricci_schwarzschild_leading(&Vec3::new(1.0, -2.0, 5.0));
    assert!(ric.trace().abs() < 1e-16);
}

/// Ricci tensor of `φ(x)ḡ` from finite-difference Christoffel symbols.
// Index loops mirror the Christoffel-symbol formula.
#[allow(clippy::needless_range_loop)]
fn ricci_fd(phi: impl Fn(&Vec3) -> f64, x: &Vec3, h: f64) -> Mat3 {
    let dphi = |p: &Vec3| {
        let mut g = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            g[k] = (phi(&(p + e)) - phi(&(p - e))) / (2.0 * h);
        }
        g
    };
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    // Γ^k_ij = (∂_iφ δ_jk + ∂_jφ δ_ik − ∂_kφ δ_ij)/(2φ)
    let gamma = |p: &Vec3| {
        let f = phi(p);
        let d = dphi(p);
        let mut g = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    g[k][i][j] =
                        (d[i] * delta(j, k) + d[j] * delta(i, k) - d[k] * delta(i, j)) / (2.0 * f);
                }
            }
        }
        g
    };
    let g0 = gamma(x);
    let mut dg = [[[[0.0; 3]; 3]; 3]; 3]; // dg[l][k][i][j] = ∂_l Γ^k_ij
    for l in 0..3 {
        let mut e = Vec3::zeros();
        e[l] = h;
        let gp = gamma(&(x + e));
        let gm = gamma(&(x - e));
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    dg[l][k][i][j] = (gp[k][i][j] - gm[k][i][j]) / (2.0 * h);
                }
            }
        }
    }
    let mut ric = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += dg[k][k][i][j] - dg[j][k][i][k];
                for l in 0..3 {
                    v += g0[k][k][l] * g0[l][i][j] - g0[k][j][l] * g0[l][i][k];
                }
            }
            ric[(i, j)] = v;
        }
    }
    ric
}

#[test]
fn ricci_leading_matches_finite_difference_ricci() {
    let m = ConformalMetricModel::schwarzschild();
    let x = unit(0.8, 0.6) * 50.0;
    let phi = |p: &Vec3| m.conformal_factor(p).unwrap().value.powi(4);
    let ric = ricci_fd(phi, &x, 1e-2);
    let lead = ricci_schwarzschild_leading(&x);
    let diff = (ric - lead).abs().max();
    assert!(diff <= 20.0 * 50f64.powi(-4), "diff = {diff}");
    // The difference really is next order, not noise.
    assert!(diff >= 0.1 * 50f64.powi(-4));
}

#[test]
fn shell_disjointness() {
    let s = ShellSum {
        k: None,
        i_min: 2,
        i_max: 4,
        a: [1.0, 4.0, 4.0, 10.0],
    };
    assert!(s.validate().is_ok());
    let s = ShellSum {
        k: Some(3),
        i_min: 1,
        i_max: 3,
        a: [2.0, 3.0, 5.0, 0.0],
    };
    assert!(s.validate().is_ok());
    // k = 40 pushes the i = 1 shell past 10^4/2.
    let s = ShellSum {
        k: Some(40),
        i_min: 1,
        i_max: 2,
        a: [1.0; 4],
    };
    assert!(s.validate().is_err());
}

#[test]
fn shell_lambda_and_support() {
    let s = ShellPerturbation::new(3, 2, [0.0; 4]).unwrap();
    assert_eq!(s.lambda(), 9.0e4);
    assert_eq!(s.support(), (0.5e4, 36.0e4));
    let x = Vec3::new(0.0, 0.0, 0.49e4);
    assert_eq!(s.eta_jet(&x), Jet::ZERO);
}

#[test]
fn uniform_eta_estimate_spot_check() {
    let a = [1.0, 4.0, 4.0, 10.0];
    let total: f64 = a.iter().map(|v: &f64| v.abs()).sum();
    for (k, l) in [(1, 2), (2, 2), (3, 2), (2, 3)] {
        let s = ShellPerturbation::new(k, l, a).unwrap();
        let (lo, hi) = s.support();
        let mut worst = [0.0f64; 3];
        for i in 1..200 {
            let r = lo * (hi / lo).powf(i as f64 / 200.0);
            let x = unit(0.05 + 0.015 * i as f64, 0.3 * i as f64) * r;
            let j = s.eta_jet(&x);
            worst[0] = worst[0].max(j.value.abs() * r.powi(2) / total);
            worst[1] = worst[1].max(j.gradient.norm() * r.powi(3) / total);
            worst[2] = worst[2].max(j.laplacian.abs() * r.powi(4) / total);
        }
        eprintln!("k={k} l={l}: {worst:?}");
        assert!(
            worst[0] < 200.0 && worst[1] < 2000.0 && worst[2] < 1e5,
            "{worst:?}"
        );
    }
}

fn glued() -> ConformalMetricModel {
    let shells = ShellSum {
        k: Some(3),
        i_min: 2,
        i_max: 2,
        a: [2.0, 3.0, 5.0, 0.0],
    };
    ConformalMetricModel::with_perturbation(Perturbation::GluedSlowDivergence(GluedMetric {
        components: vec![GluedComponent {
            shells,
            inner_radius: 1.0e4,
            outer_radius: 1.6e5,
        }],
    }))
}

#[test]
fn glued_metric_matches_component_between_radii() {
    let g = glued();
    let Perturbation::GluedSlowDivergence(ref gm) = g.perturbation else {
        unreachable!()
    };
    let inner =
        ConformalMetricModel::with_perturbation(Perturbation::ShellSum(gm.components[0].shells));
    for &r in &[1.2e4, 5.0e4, 1.5e5] {
        let x = unit(0.7, 0.2) * r;
        let a = g.conformal_factor(&x).unwrap();
        let b = inner.conformal_factor(&x).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-14);
        assert_relative_eq!(a.laplacian, b.laplacian, max_relative = 1e-9);
    }
    // Outside the glue support the metric is Schwarzschild.
    for &r in &[3.0e3, 5.0e5] {
        let x = unit(0.7, 0.2) * r;
        assert_eq!(g.perturbation_jet(&x), Jet::ZERO);
    }
}

#[test]
fn catalog_round_trips_through_json() {
    let models = [ConformalMetricModel::schwarzschild(), oscillator(), glued()];
    for m in models {
        let s = serde_json::to_string(&m).unwrap();
        let back: ConformalMetricModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
    let m: ConformalMetricModel =
        serde_json::from_str(r#"{"perturbation":{"kind":"shell","k":2,"l":2,"a":[1,4,4,10]}}"#)
            .unwrap();
    assert_eq!(m.mass, 2.0);
    assert!(matches!(m.perturbation, Perturbation::Shell(_)));
}

proptest! {
    #[test]
    fn conformal_factor_positive_and_decaying(r in 1.0f64..1e7, th in 0.0f64..std::f64::consts::PI, ph in 0.0f64..std::f64::consts::TAU) {
        let models = [
            oscillator(),
            ConformalMetricModel::with_perturbation(Perturbation::ShellSum(ShellSum {
                k: None, i_min: 2, i_max: 3, a: [1.0, 4.0, 4.0, 10.0],
            })),
            ConformalMetricModel::with_perturbation(Perturbation::ShellSum(ShellSum {
                k: Some(3), i_min: 1, i_max: 3, a: [2.0, 3.0, 5.0, 0.0],
            })),
            glued(),
        ];
        let x = unit(th, ph) * r;
        for m in &models {
            let u = m.conformal_factor(&x).unwrap();
            prop_assert!(u.value > 0.0);
            let psi = m.perturbation_jet(&x).value;
            prop_assert!(psi.abs() <= m.perturbation.decay_constant() / (r * r) * (1.0 + 1e-12));
        }
    }
}
