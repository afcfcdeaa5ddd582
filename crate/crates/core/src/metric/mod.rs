//! Conformally flat models `g = u⁴ḡ`, `u = 1 + m/(2|x − c|) + ψ(x)`, and
//! their pointwise geometry.

pub mod bump;
pub mod catalog;

use serde::{Deserialize, Serialize};

pub use bump::{BumpProfile, Derivs};
pub use catalog::{
    ComOscillator, Decay, GluedComponent, GluedMetric, Perturbation, RadialSupport,
    ShellPerturbation, ShellSum,
};

use crate::{Error, Mat3, Result, Vec3};

/// Value, gradient and flat Laplacian of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec3,
    pub laplacian: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet {
        value: 0.0,
        gradient: Vec3::new(0.0, 0.0, 0.0),
        laplacian: 0.0,
    };

    pub fn constant(value: f64) -> Jet {
        Jet { value, ..Jet::ZERO }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            gradient: self.gradient + o.gradient,
            laplacian: self.laplacian + o.laplacian,
        }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            value: c * self.value,
            gradient: self.gradient * c,
            laplacian: c * self.laplacian,
        }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            gradient: self.gradient * o.value + o.gradient * self.value,
            laplacian: self.laplacian * o.value
                + o.laplacian * self.value
                + 2.0 * self.gradient.dot(&o.gradient),
        }
    }

    /// `f^p` for `f > 0` (any real `p`) or integer `p`.
    pub fn powf(&self, p: f64) -> Jet {
        let f = self.value;
        let d1 = p * f.powf(p - 1.0);
        let d2 = p * (p - 1.0) * f.powf(p - 2.0);
        Jet {
            value: f.powf(p),
            gradient: self.gradient * d1,
            laplacian: d1 * self.laplacian + d2 * self.gradient.norm_squared(),
        }
    }

    pub fn powi(&self, n: i32) -> Jet {
        let f = self.value;
        let nf = n as f64;
        let d1 = nf * f.powi(n - 1);
        let d2 = if !(0..2).contains(&n) {
            nf * (nf - 1.0) * f.powi(n - 2)
        } else {
            0.0
        };
        Jet {
            value: f.powi(n),
            gradient: self.gradient * d1,
            laplacian: d1 * self.laplacian + d2 * self.gradient.norm_squared(),
        }
    }

    pub fn fourth_root(&self) -> Jet {
        self.powf(0.25)
    }
}

/// `g = u⁴ḡ` with `u = 1 + m/(2|x − c|) + ψ(x)`.
///
/// The point `c` is the center of the Schwarzschild part; ψ is evaluated in
/// the original chart. Points with `|x − c| < 1` lie inside the inner
/// boundary and are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalMetricModel {
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default)]
    pub center: [f64; 3],
    #[serde(default)]
    pub perturbation: Perturbation,
}

fn default_mass() -> f64 {
    2.0
}

/// `h = g − ḡ` and `σ = g − g_S` with first derivatives.
///
/// Both are multiples of the identity; `dh[k]` is `∂_k h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDeviation {
    pub h: Mat3,
    pub sigma: Mat3,
    pub dh: [Mat3; 3],
    pub dsigma: [Mat3; 3],
}

impl ConformalMetricModel {
    pub fn schwarzschild() -> Self {
        Self::with_perturbation(Perturbation::Schwarzschild)
    }

    /// Euclidean space (`m = 0`, ψ ≡ 0), kept for tests and baselines.
    pub fn flat() -> Self {
        Self {
            mass: 0.0,
            center: [0.0; 3],
            perturbation: Perturbation::Schwarzschild,
        }
    }

    pub fn with_perturbation(perturbation: Perturbation) -> Self {
        Self {
            mass: 2.0,
            center: [0.0; 3],
            perturbation,
        }
    }

    pub fn translated(mut self, c: Vec3) -> Self {
        self.center = [c[0], c[1], c[2]];
        self
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mass must be finite and non-negative, got {}",
                self.mass
            )));
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite center".into()));
        }
        self.perturbation.validate()
    }

    fn check_outside(&self, x: &Vec3) -> Result<f64> {
        let r = (x - self.center()).norm();
        // Admit the horizon itself up to rounding of the node coordinates.
        if !(r >= 1.0 - 1e-12) {
            return Err(Error::Singularity { radius: r });
        }
        Ok(r)
    }

    /// Jet of `S = 1 + m/(2|x − c|)`.
    pub fn schwarzschild_jet(&self, x: &Vec3) -> Jet {
        let y = x - self.center();
        let r = y.norm();
        let half = 0.5 * self.mass;
        Jet {
            value: 1.0 + half / r,
            gradient: y * (-half / (r * r * r)),
            laplacian: 0.0,
        }
    }

    /// Jet of ψ alone.
    pub fn perturbation_jet(&self, x: &Vec3) -> Jet {
        let base = self.schwarzschild_jet(x);
        self.perturbation.jet(x, &base)
    }

    /// Jet of the conformal factor `u`.
    pub fn conformal_factor(&self, x: &Vec3) -> Result<Jet> {
        self.check_outside(x)?;
        let base = self.schwarzschild_jet(x);
        let u = base.add(&self.perturbation.jet(x, &base));
        if !(u.value > 0.0) {
            return Err(Error::Domain(format!(
                "conformal factor u = {} is not positive at {x:?}",
                u.value
            )));
        }
        Ok(u)
    }

    /// `R = −8u^{−5}Δ̄u` from the closed-form Laplacian.
    pub fn scalar_curvature(&self, x: &Vec3) -> Result<f64> {
        let r = (x - self.center()).norm();
        if !(r > 1.0) {
            return Err(Error::Singularity { radius: r });
        }
        let u = self.conformal_factor(x)?;
        if u.laplacian == 0.0 {
            return Ok(0.0);
        }
        Ok(-8.0 * u.laplacian / u.value.powi(5))
    }

    /// `R` with `Δ̄ψ` replaced by a central seven-point difference with step
    /// `max(1e−4|x|, 1e−6)`. The Schwarzschild part is harmonic and is left
    /// out of the difference to avoid cancellation against `u ≈ 1`.
    pub fn scalar_curvature_fd(&self, x: &Vec3) -> Result<f64> {
        let r = (x - self.center()).norm();
        if !(r > 1.0) {
            return Err(Error::Singularity { radius: r });
        }
        let lap = laplacian_fd(|p| Ok(self.perturbation_jet(p).value), x)?;
        let u = self.conformal_factor(x)?.value;
        Ok(-8.0 * lap / u.powi(5))
    }

    pub fn metric_deviation(&self, x: &Vec3) -> Result<MetricDeviation> {
        let u = self.conformal_factor(x)?;
        let s = self.schwarzschild_jet(x);
        let psi = self.perturbation.jet(x, &s);
        let id = Mat3::identity();
        let (uv, sv) = (u.value, s.value);
        let u3 = uv.powi(3);
        // u⁴ − S⁴ and u³ − S³ factored through ψ = u − S to keep σ accurate
        // when ψ is many orders below 1.
        let sigma = psi.value * (uv + sv) * (uv * uv + sv * sv);
        let cube_gap = psi.value * (uv * uv + uv * sv + sv * sv);
        let dh = [0, 1, 2].map(|k| id * (4.0 * u3 * u.gradient[k]));
        let dsigma =
            [0, 1, 2].map(|k| id * (4.0 * (u3 * psi.gradient[k] + cube_gap * s.gradient[k])));
        Ok(MetricDeviation {
            h: id * (uv.powi(4) - 1.0),
            sigma: id * sigma,
            dh,
            dsigma,
        })
    }

    /// Mean curvature, with respect to `g` and the outward normal, of the
    /// coordinate sphere `S_radius(center)` at `center + radius·direction`:
    /// `H = u^{−2}(2/radius + 4u^{−1}∂_ν̄u)`.
    pub fn mean_curvature_sphere(
        &self,
        center: &Vec3,
        radius: f64,
        direction: &Vec3,
    ) -> Result<f64> {
        let (hbar, dnu_u, u) = self.sphere_terms(center, radius, direction)?;
        Ok((hbar + 4.0 * dnu_u / u) / (u * u))
    }

    /// `(H̄, ∂_ν̄u, u)` at a point of a coordinate sphere.
    pub(crate) fn sphere_terms(
        &self,
        center: &Vec3,
        radius: f64,
        direction: &Vec3,
    ) -> Result<(f64, f64, f64)> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!(
                "sphere radius {radius} must be positive"
            )));
        }
        let nu = direction.normalize();
        let p = center + nu * radius;
        let u = self.conformal_factor(&p)?;
        Ok((2.0 / radius, u.gradient.dot(&nu), u.value))
    }

    /// Ensures the sphere `S_radius(center)` stays outside `|x − c| < 1`.
    pub fn check_sphere(&self, center: &Vec3, radius: f64) -> Result<()> {
        let d = (center - self.center()).norm();
        let gap = if d <= radius { radius - d } else { d - radius };
        if gap < 1.0 {
            return Err(Error::Singularity { radius: gap });
        }
        Ok(())
    }
}

/// Leading term `2|x|^{−3}(δ_ij − 3x^ix^j|x|^{−2})` of the Schwarzschild
/// Ricci tensor for `m = 2`.
///
/// Callers are expected to stay in `|x| > 1`; the formula itself is finite
/// for every `x ≠ 0`.
pub fn ricci_schwarzschild_leading(x: &Vec3) -> Mat3 {
    let r = x.norm();
    let n = x / r;
    (Mat3::identity() - n * n.transpose() * 3.0) * (2.0 / (r * r * r))
}

/// Central-difference Laplacian with step `max(1e−4|x|, 1e−6)`.
pub fn laplacian_fd<F>(f: F, x: &Vec3) -> Result<f64>
where
    F: Fn(&Vec3) -> Result<f64>,
{
    let h = (1e-4 * x.norm()).max(1e-6);
    let f0 = f(x)?;
    let mut lap = 0.0;
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        lap += f(&(x + e))? - 2.0 * f0 + f(&(x - e))?;
    }
    Ok(lap / (h * h))
}

#[cfg(test)]
mod tests;
