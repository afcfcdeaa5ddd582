//! Legendre polynomials and the zonal series attached to off-center spheres.
//!
//! For a sphere `S_λ(λξ)` the leading-order graph function and the Willmore
//! operator of the coordinate sphere are zonal about `ξ`. Both are expanded
//! in `P_ℓ(s)` with `s = −⟨y, ξ⟩/|ξ|` and geometric weights `|ξ|^ℓ`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Inputs this far outside `[−1, 1]` are treated as quadrature round-off and
/// clamped; anything further is a caller bug.
pub const ARGUMENT_SLACK: f64 = 1e-12;

/// Truncation control for the `|ξ|^ℓ`-weighted series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    pub max_degree: usize,
    pub tail_tolerance: f64,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            max_degree: 400,
            tail_tolerance: 1e-10,
        }
    }
}

impl SeriesTruncation {
    pub fn new(max_degree: usize, tail_tolerance: f64) -> Result<Self> {
        if max_degree < 2 {
            return Err(Error::Domain(format!(
                "series truncation needs max_degree >= 2, got {max_degree}"
            )));
        }
        if !(tail_tolerance > 0.0) {
            return Err(Error::Domain(format!(
                "tail tolerance must be positive, got {tail_tolerance}"
            )));
        }
        Ok(Self {
            max_degree,
            tail_tolerance,
        })
    }

    /// Smallest degree `L ≤ max_degree` with `bound(L) ≤ tail_tolerance`.
    fn degree_for(&self, bound: impl Fn(usize) -> f64) -> Result<usize> {
        for l in 0..=self.max_degree {
            if bound(l) <= self.tail_tolerance {
                return Ok(l);
            }
        }
        Err(Error::NonConvergence {
            max_degree: self.max_degree,
            tail_bound: bound(self.max_degree),
            tolerance: self.tail_tolerance,
        })
    }
}

/// Geometric tail bound `t^{L+1}/(1−t)` of `Σ_{ℓ>L} t^ℓ |P_ℓ|/ℓ`.
pub fn geometric_tail_bound(t: f64, degree: usize) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t.powi(degree as i32 + 1) / (1.0 - t)
}

/// Tail bound for the cubic-weighted Willmore series.
///
/// Uses `(ℓ−1)(ℓ+1)(ℓ+2) ≤ (ℓ+2)³ ≤ (L+3)³(j+1)³` for `ℓ = L+1+j` and
/// `Σ_j (j+1)³ t^j = (1+4t+t²)/(1−t)⁴ ≤ 6/(1−t)⁴`.
pub fn cubic_tail_bound(t: f64, degree: usize) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let l3 = (degree as f64 + 3.0).powi(3);
    6.0 * l3 * t.powi(degree as i32 + 1) / (1.0 - t).powi(4)
}

fn check_argument(s: f64) -> Result<f64> {
    if !s.is_finite() || s.abs() > 1.0 + ARGUMENT_SLACK {
        return Err(Error::Domain(format!(
            "Legendre argument {s} outside [-1, 1]"
        )));
    }
    Ok(s.clamp(-1.0, 1.0))
}

/// `P_ℓ(s)` by the three-term recurrence.
pub fn legendre_eval(degree: usize, s: f64) -> Result<f64> {
    let s = check_argument(s)?;
    let mut prev = 1.0;
    if degree == 0 {
        return Ok(prev);
    }
    let mut cur = s;
    for l in 1..degree {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * s * cur - lf * prev) / (lf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `[P_0(s), …, P_L(s)]`.
pub fn legendre_table(max_degree: usize, s: f64) -> Result<Vec<f64>> {
    let s = check_argument(s)?;
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree >= 1 {
        out.push(s);
    }
    for l in 1..max_degree {
        let lf = l as f64;
        out.push(((2.0 * lf + 1.0) * s * out[l] - lf * out[l - 1]) / (lf + 1.0));
    }
    Ok(out)
}

fn check_ball(xi: &Vec3) -> Result<f64> {
    let t = xi.norm();
    if !(t < 1.0) {
        return Err(Error::Domain(format!("|ξ| = {t} must be < 1")));
    }
    Ok(t)
}

/// Leading-order graph function `−2 + 4 Σ_{ℓ≥2} (|ξ|^ℓ/ℓ) P_ℓ(s)`.
///
/// The `O(λ^{−1})` correction is not modelled.
pub fn graph_profile(xi: &Vec3, s: f64, trunc: &SeriesTruncation) -> Result<f64> {
    let t = check_ball(xi)?;
    let s = check_argument(s)?;
    if t == 0.0 {
        return Ok(-2.0);
    }
    let degree = trunc.degree_for(|l| geometric_tail_bound(t, l))?;
    let p = legendre_table(degree.max(2), s)?;
    let mut sum = 0.0;
    let mut tl = t;
    for (l, pl) in p.iter().enumerate().skip(1) {
        if l >= 2 && l <= degree {
            sum += tl / l as f64 * pl;
        }
        tl *= t;
    }
    Ok(-2.0 + 4.0 * sum)
}

/// Projection of the Willmore operator of `S_λ(λξ)` onto zonal harmonics:
/// `4λ^{−4} Σ_ℓ (ℓ−1)(ℓ+1)(ℓ+2)|ξ|^ℓ P_ℓ(s)`.
///
/// The `O(λ^{−5})` remainder is not modelled.
pub fn willmore_operator_sphere(
    xi: &Vec3,
    lambda: f64,
    s: f64,
    trunc: &SeriesTruncation,
) -> Result<f64> {
    let t = check_ball(xi)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("λ = {lambda} must be positive")));
    }
    let s = check_argument(s)?;
    let degree = trunc.degree_for(|l| cubic_tail_bound(t, l))?;
    let p = legendre_table(degree, s)?;
    let mut sum = 0.0;
    let mut tl = 1.0;
    for (l, pl) in p.iter().enumerate() {
        let lf = l as f64;
        sum += (lf - 1.0) * (lf + 1.0) * (lf + 2.0) * tl * pl;
        tl *= t;
    }
    Ok(4.0 * sum / lambda.powi(4))
}

/// Leading term `4λ^{−3}` of the Lagrange multiplier of the area-constrained
/// problem. The `O(λ^{−4})` remainder is not modelled.
pub fn lagrange_multiplier_estimate(lambda: f64) -> f64 {
    4.0 / lambda.powi(3)
}
