//! Product quadrature on spheres and exterior domains.
//!
//! Sphere rules are Gauss–Legendre in `s = cos θ` about an axis times a
//! uniform azimuth. Rules adapted to an integrand split the polar range into
//! panels at angles where the integrand changes character (radial support
//! edges, the point closest to the origin) and use Gauss–Legendre in θ on
//! each panel. Exterior integrals run over rays from the origin, each
//! integrated in `log r` from the ball boundary outward.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::summation::{par_sum, par_sum_vec3};
use crate::{Error, Result, Vec3};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Resolution parameters shared by every rule built in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    /// Gauss–Legendre nodes in `cos θ` for plain rules; also sets the widest
    /// polar panel of adapted rules to `π·panel_order/n_polar`.
    pub n_polar: usize,
    pub n_azimuth: usize,
    /// Nodes per polar panel of adapted rules.
    #[serde(default = "default_panel_order")]
    pub panel_order: usize,
    /// Geometric panels between the graded first panel and `π`.
    #[serde(default = "default_graded_panels")]
    pub graded_panels: usize,
    /// Nodes per radial panel.
    #[serde(default = "default_radial_order")]
    pub radial_order: usize,
    /// Radial panels per decade of `r`.
    #[serde(default = "default_panels_per_decade")]
    pub panels_per_decade: f64,
    /// Panels between consecutive support breakpoints, radially and in the
    /// polar angle; bump transitions need several.
    #[serde(default = "default_break_subdivisions")]
    pub break_subdivisions: usize,
}

fn default_panel_order() -> usize {
    16
}
fn default_graded_panels() -> usize {
    12
}
fn default_radial_order() -> usize {
    16
}
fn default_panels_per_decade() -> f64 {
    4.0
}
fn default_break_subdivisions() -> usize {
    4
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_polar: 48,
            n_azimuth: 96,
            panel_order: default_panel_order(),
            graded_panels: default_graded_panels(),
            radial_order: default_radial_order(),
            panels_per_decade: default_panels_per_decade(),
            break_subdivisions: default_break_subdivisions(),
        }
    }
}

impl Resolution {
    pub fn with_sphere(n_polar: usize, n_azimuth: usize) -> Self {
        Self {
            n_polar,
            n_azimuth,
            ..Self::default()
        }
    }

    /// Every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_polar: self.n_polar * factor,
            n_azimuth: self.n_azimuth * factor,
            panel_order: self.panel_order * factor,
            graded_panels: self.graded_panels,
            radial_order: self.radial_order * factor,
            panels_per_decade: self.panels_per_decade,
            break_subdivisions: self.break_subdivisions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_polar < 2 || self.n_azimuth < 3 || self.panel_order < 2 || self.radial_order < 2 {
            return Err(Error::InvalidConfig(format!(
                "quadrature resolution too small: {self:?}"
            )));
        }
        if !(self.panels_per_decade > 0.0)
            || self.graded_panels == 0
            || self.break_subdivisions == 0
        {
            return Err(Error::InvalidConfig(format!(
                "quadrature panel counts must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// One-dimensional rule in `s = cos θ`: `∫_{−1}^{1} g(s) ds ≈ Σ wᵢ g(sᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRule {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
}

impl PolarRule {
    pub fn gauss(n: usize) -> Self {
        let (s, w) = gauss_legendre(n);
        Self { s, w }
    }

    /// Gauss–Legendre in `s` on each panel `[bᵢ, bᵢ₊₁]` of `breaks ⊂ [−1, 1]`.
    pub fn composite_s(breaks: &[f64], order: usize) -> Self {
        let (x, wx) = gauss_legendre(order);
        let mut s = Vec::new();
        let mut w = Vec::new();
        for p in breaks.windows(2) {
            let (a, b) = (p[0], p[1]);
            let half = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&wx) {
                s.push(a + half * (xi + 1.0));
                w.push(half * wi);
            }
        }
        Self { s, w }
    }

    /// Gauss–Legendre in θ on each panel of `breaks ⊂ [0, π]`, weighted by
    /// `sin θ`.
    pub fn composite_theta(breaks: &[f64], order: usize) -> Self {
        let (x, wx) = gauss_legendre(order);
        let mut s = Vec::new();
        let mut w = Vec::new();
        for p in breaks.windows(2) {
            let (a, b) = (p[0], p[1]);
            let half = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&wx) {
                let th = a + half * (xi + 1.0);
                s.push(th.cos());
                w.push(half * wi * th.sin());
            }
        }
        Self { s, w }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Sorted polar breakpoints in `[0, π]`, with near-duplicates removed and
/// panels wider than `max_width` subdivided evenly.
fn polar_breaks(mut extra: Vec<f64>, max_width: f64) -> Vec<f64> {
    extra.retain(|t| *t > 1e-12 && *t < PI - 1e-12);
    extra.push(0.0);
    extra.push(PI);
    extra.sort_by(|a, b| a.partial_cmp(b).expect("finite angle"));
    extra.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut out = vec![0.0];
    for p in extra.windows(2) {
        let (a, b) = (p[0], p[1]);
        let m = ((b - a) / max_width).ceil().max(1.0) as usize;
        for j in 1..=m {
            out.push(a + (b - a) * j as f64 / m as f64);
        }
    }
    out
}

/// Radii strictly inside `(lo, hi)` at which polar panels should break:
/// the given breakpoints plus `sub − 1` evenly spaced radii between each
/// consecutive pair (with `lo` and `hi` closing the ends). Empty when no
/// breakpoint falls inside.
fn subdivided_radii(breaks: &[f64], lo: f64, hi: f64, sub: usize) -> Vec<f64> {
    let mut r: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    if r.is_empty() {
        return r;
    }
    r.push(lo);
    r.push(hi);
    r.sort_by(|a, b| a.partial_cmp(b).expect("finite radius"));
    r.dedup();
    let mut out = Vec::new();
    for w in r.windows(2) {
        for j in 1..sub {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / sub as f64);
        }
    }
    out.extend(&r[1..r.len() - 1]);
    out
}

/// Angles `θ₀q^i`, `i < panels`, growing geometrically from `θ₀ = 0.2·gap`
/// toward `π`.
fn graded_breaks(gap: f64, panels: usize) -> impl Iterator<Item = f64> {
    let first = (0.2 * gap).max(1e-8);
    let q = (PI / first).powf(1.0 / panels as f64);
    (0..panels).map(move |i| first * q.powi(i as i32))
}

/// Quadrature point on a sphere with its outward unit normal and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub point: Vec3,
    pub normal: Vec3,
    pub weight: f64,
    /// `cos θ` about the rule's axis.
    pub s: f64,
}

/// Product rule on `S_radius(center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub center: Vec3,
    pub radius: f64,
    pub axis: Vec3,
    pub polar: PolarRule,
    pub n_azimuth: usize,
}

fn frame(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis[2].abs() < 0.9 {
        Vec3::z()
    } else {
        Vec3::x()
    };
    let e1 = helper.cross(axis).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

impl SphereRule {
    /// Plain Gauss–Legendre × uniform rule about `e₃`.
    pub fn new(center: Vec3, radius: f64, n_polar: usize, n_azimuth: usize) -> Self {
        Self::aligned(center, radius, Vec3::z(), n_polar, n_azimuth)
    }

    /// Plain rule about a given axis.
    pub fn aligned(
        center: Vec3,
        radius: f64,
        axis: Vec3,
        n_polar: usize,
        n_azimuth: usize,
    ) -> Self {
        Self {
            center,
            radius,
            axis: axis.normalize(),
            polar: PolarRule::gauss(n_polar),
            n_azimuth,
        }
    }

    pub fn from_resolution(center: Vec3, radius: f64, res: &Resolution) -> Self {
        Self::new(center, radius, res.n_polar, res.n_azimuth)
    }

    /// Rule for integrands that depend sharply on `|x|` (distance from the
    /// origin).
    ///
    /// The axis points from the center toward the origin, so `θ = 0` is the
    /// point nearest the origin. Polar panels break where `|x|` crosses one
    /// of `radial_breaks`; when the sphere passes within half its radius of
    /// the origin the polar range is also graded geometrically toward
    /// `θ = 0`.
    pub fn adapted(center: Vec3, radius: f64, radial_breaks: &[f64], res: &Resolution) -> Self {
        let c = center.norm();
        let axis = if c > 0.0 { -center / c } else { Vec3::z() };
        let mut breaks = Vec::new();
        if c > 0.0 {
            let (lo, hi) = ((radius - c).abs(), radius + c);
            for b in subdivided_radii(radial_breaks, lo, hi, res.break_subdivisions) {
                let cos = (c * c + radius * radius - b * b) / (2.0 * c * radius);
                breaks.push(cos.clamp(-1.0, 1.0).acos());
            }
        }
        let gap = (radius - c).abs() / radius;
        let graded = c > 0.0 && gap < 0.5;
        if breaks.is_empty() && !graded {
            return Self::aligned(center, radius, axis, res.n_polar, res.n_azimuth);
        }
        if graded {
            breaks.extend(graded_breaks(gap, res.graded_panels));
        }
        let max_width = PI * res.panel_order as f64 / res.n_polar as f64;
        let polar = PolarRule::composite_theta(&polar_breaks(breaks, max_width), res.panel_order);
        Self {
            center,
            radius,
            axis,
            polar,
            n_azimuth: res.n_azimuth,
        }
    }

    pub fn n_polar(&self) -> usize {
        self.polar.len()
    }

    pub fn len(&self) -> usize {
        self.polar.len() * self.n_azimuth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes in polar-major order.
    pub fn nodes(&self) -> Vec<SphereNode> {
        let (e1, e2) = frame(&self.axis);
        let dphi = 2.0 * PI / self.n_azimuth as f64;
        let azimuth: Vec<(f64, f64)> = (0..self.n_azimuth)
            .map(|j| {
                let phi = dphi * j as f64;
                (phi.cos(), phi.sin())
            })
            .collect();
        let r2 = self.radius * self.radius;
        let mut out = Vec::with_capacity(self.len());
        for (&s, &w) in self.polar.s.iter().zip(&self.polar.w) {
            let sin = (1.0 - s * s).max(0.0).sqrt();
            for &(c, sn) in &azimuth {
                let normal = e1 * (sin * c) + e2 * (sin * sn) + self.axis * s;
                out.push(SphereNode {
                    point: self.center + normal * self.radius,
                    normal,
                    weight: w * dphi * r2,
                    s,
                });
            }
        }
        out
    }

    /// Same polar structure re-centered and re-scaled.
    pub fn moved(&self, center: Vec3, radius: f64) -> Self {
        Self {
            center,
            radius,
            ..self.clone()
        }
    }
}

/// `∫ f dμ̄` with compensated summation in node order.
pub fn integrate_sphere<F>(f: F, rule: &SphereRule) -> Result<f64>
where
    F: Fn(&SphereNode) -> Result<f64> + Sync + Send,
{
    let nodes = rule.nodes();
    par_sum(&nodes, |n| Ok(f(n)? * n.weight))
}

/// Vector-valued [`integrate_sphere`].
pub fn integrate_sphere_vec<F>(f: F, rule: &SphereRule) -> Result<Vec3>
where
    F: Fn(&SphereNode) -> Result<Vec3> + Sync + Send,
{
    let nodes = rule.nodes();
    par_sum_vec3(&nodes, |n| Ok(f(n)? * n.weight))
}

/// Integral over `{ sign·⟨ν̄, axis⟩ ≥ 0 }`.
///
/// The rule is rebuilt about `axis` with separate Gauss–Legendre panels on
/// each side of the equator, so no cell straddles the boundary; nodes exactly
/// on the equator count half on each side.
pub fn integrate_hemisphere<F>(f: F, rule: &SphereRule, axis: &Vec3, sign: f64) -> Result<f64>
where
    F: Fn(&SphereNode) -> Result<f64> + Sync + Send,
{
    if !(axis.norm() > 0.0) {
        return Err(Error::Domain("hemisphere axis must be nonzero".into()));
    }
    let half = rule.n_polar().div_ceil(2).max(1);
    let aligned = SphereRule {
        center: rule.center,
        radius: rule.radius,
        axis: axis.normalize(),
        polar: PolarRule::composite_s(&[-1.0, 0.0, 1.0], half),
        n_azimuth: rule.n_azimuth,
    };
    let nodes: Vec<SphereNode> = aligned
        .nodes()
        .into_iter()
        .filter_map(|mut n| {
            let side = sign * n.s;
            if side > 0.0 {
                Some(n)
            } else if side == 0.0 {
                n.weight *= 0.5;
                Some(n)
            } else {
                None
            }
        })
        .collect();
    par_sum(&nodes, |n| Ok(f(n)? * n.weight))
}

/// What an exterior integrand promises about its support.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportDeclaration {
    /// Zero outside the union of the radial `segments` (about the origin).
    Compact {
        segments: Vec<(f64, f64)>,
    },
    /// `|f| ≤ constant·|x|^{−exponent}` with `exponent > 3`. The integral is
    /// truncated at `cutoff` and the remainder reported as a bound. When
    /// `segments` is given, `f` vanishes outside them below the cutoff.
    Decaying {
        segments: Option<Vec<(f64, f64)>>,
        constant: f64,
        exponent: f64,
        cutoff: f64,
    },
    Undeclared,
}

/// Rule for `∫_{ℝ³∖B_radius(center)} f dv̄`; the ball must contain the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorRule {
    pub ball_center: Vec3,
    pub ball_radius: f64,
    pub support: SupportDeclaration,
    pub resolution: Resolution,
}

/// Truncated integral and a bound for the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorIntegral {
    pub value: f64,
    pub tail_bound: f64,
}

impl ExteriorRule {
    fn pieces(&self) -> Result<(Vec<(f64, f64)>, f64)> {
        match &self.support {
            SupportDeclaration::Undeclared => Err(Error::UnboundedSupport),
            SupportDeclaration::Compact { segments } => Ok((segments.clone(), 0.0)),
            SupportDeclaration::Decaying {
                segments,
                constant,
                exponent,
                cutoff,
            } => {
                if !(*exponent > 3.0) {
                    return Err(Error::Domain(format!(
                        "decay exponent {exponent} must exceed 3 for an integrable tail"
                    )));
                }
                let pieces = match segments {
                    Some(s) => s
                        .iter()
                        .filter(|(a, _)| a < cutoff)
                        .map(|&(a, b)| (a, b.min(*cutoff)))
                        .collect(),
                    None => vec![(0.0, *cutoff)],
                };
                let tail = 4.0 * PI * constant * cutoff.powf(3.0 - exponent) / (exponent - 3.0);
                Ok((pieces, tail))
            }
        }
    }

    /// Distance from the origin to the ball boundary along `ω`.
    fn exit_radius(&self, omega: &Vec3) -> f64 {
        let s = omega.dot(&self.ball_center);
        let c2 = self.ball_center.norm_squared();
        s + (s * s + self.ball_radius * self.ball_radius - c2).sqrt()
    }

    fn direction_rule(&self, pieces: &[(f64, f64)]) -> SphereRule {
        let res = &self.resolution;
        let c = self.ball_center.norm();
        let rho = self.ball_radius;
        if c == 0.0 {
            return SphereRule::new(Vec3::zeros(), 1.0, res.n_polar, res.n_azimuth);
        }
        let axis = self.ball_center / c;
        // exit_radius(s) = b  ⇔  s = (b² + |c|² − ρ²)/(2b|c|)
        let ends: Vec<f64> = pieces.iter().flat_map(|&(a, b)| [a, b]).collect();
        let mut breaks = Vec::new();
        for r in subdivided_radii(&ends, rho - c, rho + c, res.break_subdivisions) {
            let s = (r * r + c * c - rho * rho) / (2.0 * r * c);
            breaks.push(s.clamp(-1.0, 1.0).acos());
        }
        // The exit radius is analytic in s = cos θ except for branch points
        // at s = ±iε, ε = √(ρ² − |c|²)/|c|. When the ball nearly reaches the
        // origin, grade toward s = 0 from both sides.
        let eps = (rho * rho - c * c).sqrt() / c;
        if eps < 0.5 {
            let first = 0.2 * eps;
            let j = res.graded_panels;
            let q = (1.0 / first).powf(1.0 / j as f64);
            breaks.push(0.5 * PI);
            for i in 0..j {
                let s = first * q.powi(i as i32);
                breaks.push(s.acos());
                breaks.push((-s).acos());
            }
        }
        if breaks.is_empty() {
            return SphereRule::aligned(Vec3::zeros(), 1.0, axis, res.n_polar, res.n_azimuth);
        }
        let max_width = PI * res.panel_order as f64 / res.n_polar as f64;
        SphereRule {
            center: Vec3::zeros(),
            radius: 1.0,
            axis,
            polar: PolarRule::composite_theta(&polar_breaks(breaks, max_width), res.panel_order),
            n_azimuth: res.n_azimuth,
        }
    }
}

/// `∫ f dv̄` over the exterior of the rule's ball.
pub fn integrate_exterior<F>(f: F, rule: &ExteriorRule) -> Result<ExteriorIntegral>
where
    F: Fn(&Vec3) -> Result<f64> + Sync + Send,
{
    if rule.ball_center.norm() >= rule.ball_radius {
        return Err(Error::Domain(
            "exterior rule requires the ball to contain the origin".into(),
        ));
    }
    let (pieces, tail_bound) = rule.pieces()?;
    if pieces.is_empty() {
        return Ok(ExteriorIntegral {
            value: 0.0,
            tail_bound,
        });
    }
    let res = rule.resolution;
    let (gx, gw) = gauss_legendre(res.radial_order);
    let directions = rule.direction_rule(&pieces).nodes();
    let value = par_sum(&directions, |d| {
        let omega = d.normal;
        let lower = rule.exit_radius(&omega);
        let mut acc = 0.0;
        for &(a, b) in &pieces {
            let a = a.max(lower);
            if b <= a {
                continue;
            }
            let (la, lb) = (a.ln(), b.ln());
            let decades = (lb - la) / std::f64::consts::LN_10;
            let panels = ((decades * res.panels_per_decade).ceil() as usize)
                .max(res.break_subdivisions)
                .max(2);
            let h = (lb - la) / panels as f64;
            for p in 0..panels {
                let lo = la + h * p as f64;
                for (x, w) in gx.iter().zip(&gw) {
                    let r = (lo + 0.5 * h * (x + 1.0)).exp();
                    acc += 0.5 * h * w * r * r * r * f(&(omega * r))?;
                }
            }
        }
        Ok::<f64, Error>(acc * d.weight)
    })?;
    Ok(ExteriorIntegral { value, tail_bound })
}
