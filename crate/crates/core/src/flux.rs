//! Flux integrals over coordinate spheres: ADM mass, Hamiltonian center of
//! mass, Hawking mass, Willmore energy, and extrapolation to `λ → ∞`.
//!
//! Every integrand uses `h = g − ḡ = (u⁴ − 1)·I` and closed-form derivatives
//! of `u`. With that `h`,
//!
//! ```text
//! Σ_j x^j[∂_i h_ij − ∂_j h_ii] = −8u³ x·∇u
//! −Σ_i[x^i h_iℓ − x^ℓ h_ii]    =  2x^ℓ(u⁴ − 1)
//! ```
//!
//! The Euclidean part of the second row integrates to zero by parity, so
//! dropping it changes nothing but the rounding error.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::metric::ConformalMetricModel;
use crate::quadrature::{integrate_sphere, integrate_sphere_vec, Resolution, SphereRule};
use crate::{Error, Result, Vec3};

fn check_radius(lambda: f64) -> Result<()> {
    if !(lambda > 1.0) {
        return Err(Error::Singularity { radius: lambda });
    }
    if !(lambda > 2.0) {
        return Err(Error::Domain(format!("flux radius {lambda} must exceed 2")));
    }
    Ok(())
}

/// Radial breakpoints of the model's curvature support, used to place polar
/// panels on spheres that cut through it.
pub(crate) fn support_breaks(model: &ConformalMetricModel, r_max: f64) -> Vec<f64> {
    model
        .perturbation
        .curvature_support(r_max)
        .segments
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect()
}

fn origin_sphere(
    model: &ConformalMetricModel,
    lambda: f64,
    res: &Resolution,
) -> Result<SphereRule> {
    check_radius(lambda)?;
    model.check_sphere(&Vec3::zeros(), lambda)?;
    Ok(SphereRule::adapted(
        Vec3::zeros(),
        lambda,
        &support_breaks(model, 2.0 * lambda),
        res,
    ))
}

/// ADM flux `(1/16π)λ^{−1}∫_{S_λ(0)} Σ x^j[∂_i h_ij − ∂_j h_ii] dμ̄`.
pub fn adm_mass(model: &ConformalMetricModel, lambda: f64, res: &Resolution) -> Result<f64> {
    let rule = origin_sphere(model, lambda, res)?;
    let flux = integrate_sphere(
        |n| {
            let u = model.conformal_factor(&n.point)?;
            Ok(-8.0 * u.value.powi(3) * n.point.dot(&u.gradient))
        },
        &rule,
    )?;
    Ok(flux / (16.0 * PI * lambda))
}

/// Hamiltonian center-of-mass flux at radius λ with mass `m` in the
/// prefactor.
pub fn hamiltonian_com(
    model: &ConformalMetricModel,
    lambda: f64,
    m: f64,
    res: &Resolution,
) -> Result<Vec3> {
    if !(m > 0.0) {
        return Err(Error::Domain(format!("mass {m} must be positive")));
    }
    let rule = origin_sphere(model, lambda, res)?;
    let flux = integrate_sphere_vec(
        |n| {
            let u = model.conformal_factor(&n.point)?;
            let u3 = u.value.powi(3);
            let s = -8.0 * u3 * n.point.dot(&u.gradient) + 2.0 * (u3 * u.value - 1.0);
            Ok(n.point * s)
        },
        &rule,
    )?;
    Ok(flux / (16.0 * PI * m * lambda))
}

/// Area `∫u⁴dμ̄` and Willmore integral `∫H²dμ` of `S_radius(center)`.
pub(crate) fn sphere_area_and_h2(
    model: &ConformalMetricModel,
    center: &Vec3,
    radius: f64,
    res: &Resolution,
) -> Result<(f64, f64)> {
    model.check_sphere(center, radius)?;
    let breaks = support_breaks(model, center.norm() + 2.0 * radius);
    let rule = SphereRule::adapted(*center, radius, &breaks, res);
    let nodes = rule.nodes();
    // H²dμ = u^{−4}(H̄ + 4∂_ν̄u/u)²·u⁴dμ̄
    let h2 = crate::summation::par_sum(&nodes, |n| {
        let (hbar, dnu, u) = model.sphere_terms(center, radius, &n.normal)?;
        let h = hbar + 4.0 * dnu / u;
        Ok::<f64, Error>(h * h * n.weight)
    })?;
    let area = crate::summation::par_sum(&nodes, |n| {
        let u = model.conformal_factor(&n.point)?;
        Ok::<f64, Error>(u.value.powi(4) * n.weight)
    })?;
    Ok((area, h2))
}

/// Hawking mass `√(|S|/16π)(1 − (1/16π)∫H²dμ)` of a coordinate sphere.
pub fn hawking_mass(
    model: &ConformalMetricModel,
    center: &Vec3,
    radius: f64,
    res: &Resolution,
) -> Result<f64> {
    let (area, h2) = sphere_area_and_h2(model, center, radius, res)?;
    Ok((area / (16.0 * PI)).sqrt() * (1.0 - h2 / (16.0 * PI)))
}

/// `∫_{S_λ(λξ)} H² dμ`.
pub fn willmore_energy_sphere(
    model: &ConformalMetricModel,
    xi: &Vec3,
    lambda: f64,
    res: &Resolution,
) -> Result<f64> {
    Ok(sphere_area_and_h2(model, &(xi * lambda), lambda, res)?.1)
}

/// `∫H²dμ` of the centered sphere of radius λ in Schwarzschild with `m = 2`.
pub fn schwarzschild_willmore_closed_form(lambda: f64) -> f64 {
    16.0 * PI * ((lambda - 1.0) / (lambda + 1.0)).powi(2)
}

/// Hawking mass of the centered sphere of radius λ in Schwarzschild with
/// `m = 2`, assembled from the closed-form area and Willmore integral.
pub fn schwarzschild_hawking_closed_form(lambda: f64) -> f64 {
    let area = 4.0 * PI * lambda * lambda * (1.0 + 1.0 / lambda).powi(4);
    (area / (16.0 * PI)).sqrt() * (1.0 - schwarzschild_willmore_closed_form(lambda) / (16.0 * PI))
}

/// Extrapolated limit with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub error: f64,
}

impl Extrapolation {
    pub fn converged(&self, tolerance: f64) -> bool {
        self.error <= tolerance
    }
}

/// Value at `x = 0` of the polynomial in `x = 1/λ` through the samples.
fn lagrange_at_zero(samples: &[(f64, f64)]) -> f64 {
    let x: Vec<f64> = samples.iter().map(|s| 1.0 / s.0).collect();
    let mut acc = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let mut w = 1.0;
        for (j, xj) in x.iter().enumerate() {
            if j != i {
                w *= xj / (xj - x[i]);
            }
        }
        acc += w * s.1;
    }
    acc
}

/// Richardson extrapolation under `value = L + c₁λ^{−1} + c₂λ^{−2}`.
///
/// The limit comes from the last three samples. The error estimate is its
/// distance to the extrapolant of the preceding triple, or, with exactly
/// three samples, to the two-term extrapolant of the last pair.
pub fn extrapolate_limit(samples: &[(f64, f64)]) -> Result<Extrapolation> {
    if samples.len() < 3 {
        return Err(Error::IllConditioned(format!(
            "extrapolation needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(samples[0].0 > 0.0) {
        return Err(Error::IllConditioned(
            "extrapolation radii must be positive and strictly increasing".into(),
        ));
    }
    let n = samples.len();
    let limit = lagrange_at_zero(&samples[n - 3..]);
    let previous = if n >= 4 {
        lagrange_at_zero(&samples[n - 4..n - 1])
    } else {
        lagrange_at_zero(&samples[n - 2..])
    };
    Ok(Extrapolation {
        limit,
        error: (limit - previous).abs(),
    })
}

/// Mass and center of mass at several radii with their extrapolated limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub mass: f64,
    pub center: [f64; 3],
    pub radii: Vec<f64>,
    pub mass_samples: Vec<f64>,
    pub center_samples: Vec<[f64; 3]>,
    pub mass_limit: Extrapolation,
    pub center_limit: [Extrapolation; 3],
}

impl FluxReport {
    /// Samples the fluxes at `radii` (strictly increasing). The center flux
    /// at each radius uses the mass flux at the same radius in its prefactor.
    pub fn compute(model: &ConformalMetricModel, radii: &[f64], res: &Resolution) -> Result<Self> {
        let mass_samples = radii
            .iter()
            .map(|&l| adm_mass(model, l, res))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(f64, f64)> = radii
            .iter()
            .copied()
            .zip(mass_samples.iter().copied())
            .collect();
        let mass_limit = extrapolate_limit(&pairs)?;
        let centers = radii
            .iter()
            .zip(&mass_samples)
            .map(|(&l, &m)| hamiltonian_com(model, l, m, res))
            .collect::<Result<Vec<_>>>()?;
        let center_limit = [0, 1, 2].map(|k| {
            let pairs: Vec<(f64, f64)> = radii
                .iter()
                .copied()
                .zip(centers.iter().map(|c| c[k]))
                .collect();
            extrapolate_limit(&pairs)
        });
        let [c0, c1, c2] = center_limit;
        let center_limit = [c0?, c1?, c2?];
        Ok(Self {
            mass: mass_limit.limit,
            center: center_limit.map(|e| e.limit),
            radii: radii.to_vec(),
            mass_samples,
            center_samples: centers.iter().map(|c| [c[0], c[1], c[2]]).collect(),
            mass_limit,
            center_limit,
        })
    }

    /// Largest error estimate among the mass and center components.
    pub fn max_error(&self) -> f64 {
        self.center_limit
            .iter()
            .map(|e| e.error)
            .fold(self.mass_limit.error, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{ComOscillator, Perturbation};
    use approx::assert_relative_eq;

    fn res() -> Resolution {
        Resolution::default()
    }

    #[test]
    fn schwarzschild_mass_raw_and_extrapolated() {
        let m = ConformalMetricModel::schwarzschild();
        for &l in &[10.0, 1e3, 1e5] {
            let got = adm_mass(&m, l, &res()).unwrap();
            assert_relative_eq!(got, 2.0 * (1.0 + 1.0 / l).powi(3), max_relative = 1e-13);
        }
        let rep = FluxReport::compute(&m, &[1e3, 2e3, 4e3], &res()).unwrap();
        assert!((rep.mass - 2.0).abs() < 1e-6, "{}", rep.mass);
        assert!(Vec3::from(rep.center).norm() < 1e-9, "{:?}", rep.center);
    }

    #[test]
    fn flat_model_has_no_mass() {
        let m = ConformalMetricModel::flat();
        assert_eq!(adm_mass(&m, 100.0, &res()).unwrap(), 0.0);
        assert_relative_eq!(
            hawking_mass(&m, &Vec3::new(1.0, 2.0, 3.0), 7.0, &res()).unwrap(),
            0.0,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            willmore_energy_sphere(&m, &Vec3::new(0.3, 0.0, 0.0), 50.0, &res()).unwrap(),
            16.0 * PI,
            max_relative = 1e-13
        );
    }

    #[test]
    fn small_radius_is_rejected() {
        let m = ConformalMetricModel::schwarzschild();
        assert!(matches!(
            adm_mass(&m, 0.5, &res()),
            Err(Error::Singularity { .. })
        ));
        assert!(matches!(adm_mass(&m, 1.5, &res()), Err(Error::Domain(_))));
    }

    #[test]
    fn translated_schwarzschild_center() {
        // Brute-force oracle: the flux integral of the exact translated
        // factor on a fine plain rule; the target value is c up to O(1/λ).
        let c = Vec3::new(3.0, -2.0, 5.0);
        let m = ConformalMetricModel::schwarzschild().translated(c);
        let mass = adm_mass(&m, 1e3, &res()).unwrap();
        let got = hamiltonian_com(&m, 1e3, mass, &res()).unwrap();
        assert!((got - c).norm() < 1e-2, "{got:?}");
        let fine = Resolution::with_sphere(96, 192);
        let lam = 1e3;
        let rule = SphereRule::new(Vec3::zeros(), lam, 96, 192);
        let oracle = integrate_sphere_vec(
            |n| {
                let y = n.point - c;
                let r = y.norm();
                let u = 1.0 + 1.0 / r;
                let grad = -y / (r * r * r);
                Ok(n.point * (-8.0 * u.powi(3) * n.point.dot(&grad) + 2.0 * (u.powi(4) - 1.0)))
            },
            &rule,
        )
        .unwrap()
            / (32.0 * PI * lam);
        let at_fine = hamiltonian_com(&m, lam, 2.0, &fine).unwrap();
        assert!((at_fine - oracle).norm() < 1e-12);
        let rep = FluxReport::compute(&m, &[1e3, 2e3, 4e3], &res()).unwrap();
        assert!(
            (Vec3::from(rep.center) - c).norm() < 1e-6,
            "{:?}",
            rep.center
        );
    }

    #[test]
    fn hawking_mass_schwarzschild() {
        let m = ConformalMetricModel::schwarzschild();
        assert_relative_eq!(
            hawking_mass(&m, &Vec3::zeros(), 1.0, &res()).unwrap(),
            2.0,
            max_relative = 1e-13
        );
        for &l in &[2.0, 100.0, 1e4] {
            assert_relative_eq!(
                schwarzschild_hawking_closed_form(l),
                2.0,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                hawking_mass(&m, &Vec3::zeros(), l, &res()).unwrap(),
                2.0,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn willmore_centered_closed_form() {
        let m = ConformalMetricModel::schwarzschild();
        for &l in &[3.0, 100.0, 1e4] {
            let got = willmore_energy_sphere(&m, &Vec3::zeros(), l, &res()).unwrap();
            assert_relative_eq!(
                got,
                schwarzschild_willmore_closed_form(l),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn willmore_off_center_converges_under_refinement() {
        let m = ConformalMetricModel::schwarzschild();
        let xi = Vec3::new(0.0, 0.6, 0.0);
        let a = willmore_energy_sphere(&m, &xi, 20.0, &res()).unwrap();
        let b = willmore_energy_sphere(&m, &xi, 20.0, &res().refined(2)).unwrap();
        assert!((a - b).abs() < 1e-11 * a);
    }

    #[test]
    fn extrapolation_examples() {
        let f = |l: f64| 5.0 + 3.0 / l;
        let s: Vec<_> = [100.0, 200.0, 400.0].iter().map(|&l| (l, f(l))).collect();
        let e = extrapolate_limit(&s).unwrap();
        assert!((e.limit - 5.0).abs() < 1e-10);
        let g = |l: f64| 5.0 + 3.0 / l + 7.0 / (l * l);
        let s: Vec<_> = [100.0, 200.0, 400.0].iter().map(|&l| (l, g(l))).collect();
        assert!((extrapolate_limit(&s).unwrap().limit - 5.0).abs() < 1e-6);
        let osc: Vec<_> = (0..5)
            .map(|k| (1e3 * (k + 1) as f64, if k % 2 == 0 { 0.04 } else { 0.0 }))
            .collect();
        assert!(!extrapolate_limit(&osc).unwrap().converged(1e-3));
        assert!(matches!(
            extrapolate_limit(&[(1.0, 0.0), (1.0, 0.0), (2.0, 0.0)]),
            Err(Error::IllConditioned(_))
        ));
        assert!(extrapolate_limit(&[(1.0, 0.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn oscillator_mass_in_gap() {
        // λ = 10³ lies in the gap between the bumps on [200, 600] and
        // [2000, 6000].
        let m = ConformalMetricModel::with_perturbation(Perturbation::ComOscillator(
            ComOscillator::default(),
        ));
        let got = adm_mass(&m, 1e3, &res()).unwrap();
        assert!((got - 2.0).abs() < 1e-2, "{got}");
    }
}
