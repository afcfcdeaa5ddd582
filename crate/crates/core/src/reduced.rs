//! Reduced energy `G_λ(ξ) = G₁(ξ) + G_{2,λ}(ξ)` over translation parameters
//! `ξ ∈ B₁(0)`.
//!
//! `G₁` is the explicit Schwarzschild part. `G_{2,λ} = 2λ∫_{ℝ³∖B_λ(λξ)} R dv̄`
//! is the scalar-curvature part; moving the ball gives
//! `∇G_{2,λ} = −2λ²∫_{S_λ(λξ)} R ν̄ dμ̄`.
//!
//! The reduction also produces a term `G_{3,λ} = O(λ^{−1})` that has no
//! computable general form and is not modeled, so every value here carries
//! that model error.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::flux::support_breaks;
use crate::metric::{ConformalMetricModel, Perturbation, ShellPerturbation};
use crate::quadrature::{
    integrate_exterior, integrate_sphere_vec, ExteriorRule, Resolution, SphereRule,
    SupportDeclaration,
};
use crate::{Error, Result, Vec3};

/// Below this `|ξ|` the value of `G₁` comes from its Taylor series.
pub const G1_VALUE_SERIES_RADIUS: f64 = 1e-3;
/// Below this `|ξ|` the gradient of `G₁` comes from its Taylor series.
pub const G1_GRADIENT_SERIES_RADIUS: f64 = 0.05;

fn check_xi(xi: &Vec3) -> Result<f64> {
    let t = xi.norm();
    if !(t < 1.0) {
        return Err(Error::Domain(format!("|ξ| = {t} must be below 1")));
    }
    Ok(t)
}

/// `G₁ = π Σ_{n≥1} c_n t^{2n}` with `c_n = 32 − 96/(2n+1) + 128/n`.
fn g1_coefficient(n: u32) -> f64 {
    let nf = n as f64;
    32.0 - 96.0 / (2.0 * nf + 1.0) + 128.0 / nf
}

/// `Σ_{n=1}^{12} c(n) x^{n−1}` by Horner's rule; enough terms for
/// `x ≤ 0.0025`.
fn series(x: f64, c: impl Fn(u32) -> f64) -> f64 {
    (1..=12).rev().fold(0.0, |acc, n| acc * x + c(n))
}

/// `G₁(ξ) = 64π + 32π/(1−t²) − 48πt^{−1}log((1+t)/(1−t)) − 128π log(1−t²)`,
/// `t = |ξ|`.
pub fn g1(xi: &Vec3) -> Result<f64> {
    let t = check_xi(xi)?;
    let t2 = t * t;
    if t < G1_VALUE_SERIES_RADIUS {
        return Ok(PI * t2 * series(t2, g1_coefficient));
    }
    let log_ratio = t.ln_1p() - (-t).ln_1p();
    Ok(64.0 * PI + 32.0 * PI / (1.0 - t2) - 48.0 * PI * log_ratio / t - 128.0 * PI * (-t2).ln_1p())
}

/// `G₁'(t)/t`, so that `∇G₁(ξ) = (G₁'(t)/t)ξ`.
fn g1_radial_over_t(t: f64) -> f64 {
    let t2 = t * t;
    if t < G1_GRADIENT_SERIES_RADIUS {
        return PI * series(t2, |n| 2.0 * n as f64 * g1_coefficient(n));
    }
    let q = 1.0 - t2;
    let log_ratio = t.ln_1p() - (-t).ln_1p();
    (64.0 * PI * t / (q * q) + 48.0 * PI * log_ratio / t2 - 96.0 * PI / (t * q)
        + 256.0 * PI * t / q)
        / t
}

pub fn grad_g1(xi: &Vec3) -> Result<Vec3> {
    let t = check_xi(xi)?;
    Ok(xi * g1_radial_over_t(t))
}

/// `2π[8(1−t)^{−2} + 40(1−t)^{−1} − 24 log(1−t)]ξ`, the part of `∇G₁` that
/// diverges as `|ξ| ↗ 1`; the difference stays bounded.
pub fn g1_boundary_form(xi: &Vec3) -> Result<Vec3> {
    let t = xi.norm();
    if !(t > 0.5 && t < 1.0) {
        return Err(Error::Domain(format!(
            "boundary form needs 0.5 < |ξ| < 1, got {t}"
        )));
    }
    let s = 1.0 - t;
    Ok(xi * (2.0 * PI * (8.0 / (s * s) + 40.0 / s - 24.0 * s.ln())))
}

/// `2 − G/(32πλ)`: the Hawking mass of the surface associated with ξ, to the
/// order the reduced energy is modeled.
pub fn hawking_from_g(g: f64, lambda: f64) -> f64 {
    2.0 - g / (32.0 * PI * lambda)
}

/// Bounded remainder `8Σᵢ aᵢ fᵢ(ξ) ξ` of the shell gradient; the `fᵢ` are
/// smooth and bounded on `B₁(0)` but have no closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedRemainder {
    pub coefficients: [f64; 3],
    pub direction: [f64; 3],
}

/// Closed-form part of `∇G_{2,λ}` for a single shell on its plateau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellGradient {
    pub singular: [f64; 3],
    pub remainder: BoundedRemainder,
}

impl ShellGradient {
    pub fn singular(&self) -> Vec3 {
        Vec3::from(self.singular)
    }
}

/// `−16π[a₁(1−t)^{−2} + (a₁+a₂)(1−t)^{−1} + (a₁−a₃)log(1−t)]ξ + 64πa₄e₃`.
pub fn shell_gradient_closed_form(shell: &ShellPerturbation, xi: &Vec3) -> Result<ShellGradient> {
    let t = xi.norm();
    let limit = 1.0 - 1.0 / (shell.k as f64).powi(2);
    if !(t < limit) {
        return Err(Error::Domain(format!(
            "shell gradient needs |ξ| < 1 − k^(−2) = {limit}, got {t}"
        )));
    }
    let [a1, a2, a3, a4] = shell.a;
    let s = 1.0 - t;
    let bracket = a1 / (s * s) + (a1 + a2) / s + (a1 - a3) * s.ln();
    let v = xi * (-16.0 * PI * bracket) + Vec3::z() * (64.0 * PI * a4);
    Ok(ShellGradient {
        singular: [v[0], v[1], v[2]],
        remainder: BoundedRemainder {
            coefficients: [8.0 * a1, 8.0 * a2, 8.0 * a3],
            direction: [xi[0], xi[1], xi[2]],
        },
    })
}

/// Quadrature settings for the reduced energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedOptions {
    #[serde(default)]
    pub resolution: Resolution,
    /// Exterior integrals of decaying curvature stop at this multiple of λ;
    /// the remainder is reported as a bound.
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: f64,
}

fn default_cutoff_factor() -> f64 {
    1e4
}

impl Default for ReducedOptions {
    fn default() -> Self {
        Self {
            resolution: Resolution::default(),
            cutoff_factor: default_cutoff_factor(),
        }
    }
}

/// `G_λ` and its gradient at one ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedEnergyEval {
    pub xi: [f64; 3],
    pub lambda: f64,
    pub g1: f64,
    pub g2: f64,
    pub g: f64,
    pub grad_g1: [f64; 3],
    pub grad_g2: [f64; 3],
    pub grad_g: [f64; 3],
    /// Bound on the part of `G₂` beyond the exterior cutoff.
    pub g2_tail_bound: f64,
}

impl ReducedEnergyEval {
    pub fn grad(&self) -> Vec3 {
        Vec3::from(self.grad_g)
    }
}

/// `G_λ` for one model and area radius.
#[derive(Debug, Clone)]
pub struct ReducedEnergy<'a> {
    pub model: &'a ConformalMetricModel,
    pub lambda: f64,
    pub options: ReducedOptions,
}

fn arr(v: Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

impl<'a> ReducedEnergy<'a> {
    pub fn new(
        model: &'a ConformalMetricModel,
        lambda: f64,
        options: ReducedOptions,
    ) -> Result<Self> {
        model.validate()?;
        options.resolution.validate()?;
        if !(lambda > 2.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("λ = {lambda} must exceed 2")));
        }
        if !(options.cutoff_factor > 2.0) {
            return Err(Error::InvalidConfig(format!(
                "cutoff factor {} must exceed 2",
                options.cutoff_factor
            )));
        }
        Ok(Self {
            model,
            lambda,
            options,
        })
    }

    /// The sphere `S_λ(λξ)` must stay clear of the inner boundary, and its
    /// ball must contain it.
    fn check(&self, xi: &Vec3) -> Result<Vec3> {
        check_xi(xi)?;
        let center = xi * self.lambda;
        let inner = (center - self.model.center()).norm();
        if !(inner + 1.0 <= self.lambda) {
            return Err(Error::Singularity {
                radius: self.lambda - inner,
            });
        }
        Ok(center)
    }

    fn is_flat_curvature(&self) -> bool {
        matches!(self.model.perturbation, Perturbation::Schwarzschild)
    }

    /// `∫_{S_λ(λξ)} R ν̄ dμ̄`.
    pub fn curvature_flux(&self, xi: &Vec3) -> Result<Vec3> {
        let center = self.check(xi)?;
        if self.is_flat_curvature() {
            return Ok(Vec3::zeros());
        }
        let breaks = support_breaks(self.model, 2.0 * self.lambda + 1.0);
        let rule = SphereRule::adapted(center, self.lambda, &breaks, &self.options.resolution);
        integrate_sphere_vec(
            |n| Ok(n.normal * self.model.scalar_curvature(&n.point)?),
            &rule,
        )
    }

    pub fn grad_g2(&self, xi: &Vec3) -> Result<Vec3> {
        Ok(self.curvature_flux(xi)? * (-2.0 * self.lambda * self.lambda))
    }

    /// `G₂` and a bound on its truncated tail.
    pub fn g2(&self, xi: &Vec3) -> Result<(f64, f64)> {
        let center = self.check(xi)?;
        if self.is_flat_curvature() {
            return Ok((0.0, 0.0));
        }
        let cutoff = self.options.cutoff_factor * self.lambda;
        let probe = self.model.perturbation.curvature_support(cutoff);
        let support = match probe.decay {
            Some(d) => SupportDeclaration::Decaying {
                segments: Some(probe.segments),
                constant: d.constant,
                exponent: d.exponent,
                cutoff,
            },
            None => SupportDeclaration::Compact {
                segments: self
                    .model
                    .perturbation
                    .curvature_support(f64::INFINITY)
                    .segments,
            },
        };
        let rule = ExteriorRule {
            ball_center: center,
            ball_radius: self.lambda,
            support,
            resolution: self.options.resolution,
        };
        let out = integrate_exterior(|x| self.model.scalar_curvature(x), &rule)?;
        let scale = 2.0 * self.lambda;
        Ok((scale * out.value, scale * out.tail_bound))
    }

    pub fn gradient(&self, xi: &Vec3) -> Result<Vec3> {
        Ok(grad_g1(xi)? + self.grad_g2(xi)?)
    }

    pub fn value(&self, xi: &Vec3) -> Result<f64> {
        Ok(g1(xi)? + self.g2(xi)?.0)
    }

    pub fn evaluate(&self, xi: &Vec3) -> Result<ReducedEnergyEval> {
        let g1v = g1(xi)?;
        let (g2v, tail) = self.g2(xi)?;
        let d1 = grad_g1(xi)?;
        let d2 = self.grad_g2(xi)?;
        Ok(ReducedEnergyEval {
            xi: arr(*xi),
            lambda: self.lambda,
            g1: g1v,
            g2: g2v,
            g: g1v + g2v,
            grad_g1: arr(d1),
            grad_g2: arr(d2),
            grad_g: arr(d1 + d2),
            g2_tail_bound: tail,
        })
    }
}

pub fn g2(
    model: &ConformalMetricModel,
    xi: &Vec3,
    lambda: f64,
    options: &ReducedOptions,
) -> Result<f64> {
    Ok(ReducedEnergy::new(model, lambda, *options)?.g2(xi)?.0)
}

pub fn grad_g2(
    model: &ConformalMetricModel,
    xi: &Vec3,
    lambda: f64,
    options: &ReducedOptions,
) -> Result<Vec3> {
    ReducedEnergy::new(model, lambda, *options)?.grad_g2(xi)
}

pub fn g_total(
    model: &ConformalMetricModel,
    xi: &Vec3,
    lambda: f64,
    options: &ReducedOptions,
) -> Result<ReducedEnergyEval> {
    ReducedEnergy::new(model, lambda, *options)?.evaluate(xi)
}
