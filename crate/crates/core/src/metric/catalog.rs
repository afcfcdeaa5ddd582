//! Perturbations ψ of the Schwarzschild conformal factor.
//!
//! Every entry supplies a closed-form value, gradient and Laplacian, and
//! declares where its Laplacian (hence the scalar curvature) can be nonzero.

use serde::{Deserialize, Serialize};

use super::bump::{BumpProfile, Derivs};
use super::Jet;
use crate::{Error, Result, Vec3};

/// Radial extent of the scalar curvature.
///
/// `segments` are sorted, non-overlapping radial intervals, each smooth in
/// the radius; the curvature vanishes outside their union below the `r_max`
/// the support was requested for. When `decay` is set the curvature may be
/// nonzero beyond `r_max` and is bounded by `constant·|x|^{−exponent}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadialSupport {
    pub segments: Vec<(f64, f64)>,
    pub decay: Option<Decay>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub constant: f64,
    pub exponent: f64,
}

impl RadialSupport {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.decay.is_none()
    }

    /// Largest radius of a segment, if any.
    pub fn outer_radius(&self) -> Option<f64> {
        self.segments.last().map(|s| s.1)
    }

    fn normalize(mut self) -> Self {
        self.segments.retain(|(a, b)| b > a);
        self.segments
            .sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite radii"));
        self
    }
}

fn radial_jet(x: &Vec3, r: f64, f: Derivs) -> Jet {
    Jet {
        value: f.value,
        gradient: x * (f.d1 / r),
        laplacian: f.d2 + 2.0 * f.d1 / r,
    }
}

/// `(x³)^n` with `n ≤ 3`.
fn axial_power_jet(x: &Vec3, n: u32) -> Jet {
    let z = x[2];
    let nf = n as f64;
    let (value, dz, dzz) = match n {
        0 => (1.0, 0.0, 0.0),
        _ => (
            z.powi(n as i32),
            nf * z.powi(n as i32 - 1),
            nf * (nf - 1.0) * if n >= 2 { z.powi(n as i32 - 2) } else { 0.0 },
        ),
    };
    Jet {
        value,
        gradient: Vec3::new(0.0, 0.0, dz),
        laplacian: dzz,
    }
}

// ─── center-of-mass oscillator ──────────────────────────────────────────

/// `ψ = −(1/8) η(x) x³ |x|^{−4}` with `η = Σ_k χ(10^{−k}|x|)`, χ supported
/// in `[2, 6]` with plateau `[3, 5]`.
///
/// On the plateau `R = 4u^{−5} x³|x|^{−6}`; the flux center stays at the
/// origin while large spheres centered near the plateaus are pulled along
/// `e₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComOscillator {
    #[serde(default = "default_k_min")]
    pub k_min: u32,
    /// `None` keeps every scale (the oscillation continues to infinity).
    #[serde(default)]
    pub k_max: Option<u32>,
}

fn default_k_min() -> u32 {
    1
}

impl Default for ComOscillator {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: None,
        }
    }
}

impl ComOscillator {
    pub const AMPLITUDE: f64 = -0.125;

    fn profile() -> BumpProfile {
        BumpProfile::oscillator()
    }

    /// The unique scale `10^k` whose bump is active at radius `r`, if any.
    fn active_scale(&self, r: f64) -> Option<f64> {
        let chi = Self::profile();
        let lo = (r / chi.support.1).log10().floor() as i64;
        let hi = (r / chi.support.0).log10().ceil() as i64;
        (lo..=hi)
            .filter(|&k| k >= self.k_min as i64 && self.k_max.is_none_or(|m| k <= m as i64))
            .map(|k| 10f64.powi(k as i32))
            .find(|&l| {
                let t = r / l;
                t > chi.support.0 && t < chi.support.1
            })
    }

    pub fn jet(&self, x: &Vec3) -> Jet {
        let r = x.norm();
        let Some(scale) = self.active_scale(r) else {
            return Jet::ZERO;
        };
        let c = Self::profile().derivs(r / scale).rescaled(scale);
        // h(r) = χ(r/L) r^{−4}
        let r2 = r * r;
        let r4 = r2 * r2;
        let h = Derivs {
            value: c.value / r4,
            d1: c.d1 / r4 - 4.0 * c.value / (r4 * r),
            d2: c.d2 / r4 - 8.0 * c.d1 / (r4 * r) + 20.0 * c.value / (r4 * r2),
        };
        radial_jet(x, r, h)
            .mul(&axial_power_jet(x, 1))
            .scale(Self::AMPLITUDE)
    }

    pub fn curvature_support(&self, r_max: f64) -> RadialSupport {
        let chi = Self::profile();
        let [s0, p0, p1, s1] = chi.breakpoints();
        let mut segments = Vec::new();
        let mut k = self.k_min;
        loop {
            if self.k_max.is_some_and(|m| k > m) {
                break;
            }
            let l = 10f64.powi(k as i32);
            if s0 * l >= r_max {
                break;
            }
            for (a, b) in [(s0, p0), (p0, p1), (p1, s1)] {
                segments.push((a * l, (b * l).min(r_max)));
            }
            k += 1;
        }
        let decay = self.k_max.is_none().then(|| {
            // |Δψ| ≤ (1/8)|x|^{−5}(4 + 6τ|χ'| + τ²|χ''| + 2τ|χ'|) with τ ≤ 6,
            // R = −8u^{−5}Δψ and u ≥ 0.99 far out.
            let (b1, b2) = chi.derivative_bounds();
            let tau = chi.support.1;
            let lap = 4.0 + 8.0 * tau * b1 + tau * tau * b2;
            Decay {
                constant: lap / 0.99f64.powi(5),
                exponent: 5.0,
            }
        });
        RadialSupport { segments, decay }.normalize()
    }

    /// `|ψ| ≤ C|x|^{−2}`.
    pub fn decay_constant(&self) -> f64 {
        let r_min = Self::profile().support.0 * 10f64.powi(self.k_min as i32);
        -Self::AMPLITUDE / r_min
    }
}

// ─── shells ─────────────────────────────────────────────────────────────

/// Compactly supported shell `ψ = ½ η_{k,ℓ}` at scale `λ_{k,ℓ} = k²·10^{ℓ²}`:
///
/// `η = χ_k(10^{−ℓ²}|x|)[a₁r^{−2} + a₂λ^{−1}r^{−1}(log λ − log r)
///      + a₃λ^{−2}(log r − log λ) + a₄λ^{−5}(x³)³]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellPerturbation {
    pub k: u32,
    pub l: u32,
    pub a: [f64; 4],
}

impl ShellPerturbation {
    pub fn new(k: u32, l: u32, a: [f64; 4]) -> Result<Self> {
        let s = Self { k, l, a };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidConfig(format!(
                "shell indices must be positive, got k={}, l={}",
                self.k, self.l
            )));
        }
        if self.l > 4 {
            return Err(Error::InvalidConfig(format!(
                "shell index l={} gives radii beyond 10^16",
                self.l
            )));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite shell amplitude".into()));
        }
        Ok(())
    }

    /// `10^{ℓ²}`.
    pub fn base_scale(&self) -> f64 {
        10f64.powi((self.l * self.l) as i32)
    }

    /// `λ_{k,ℓ} = k²·10^{ℓ²}`.
    pub fn lambda(&self) -> f64 {
        let k = self.k as f64;
        k * k * self.base_scale()
    }

    /// Radial support `[½·10^{ℓ²}, 4k²·10^{ℓ²}]`.
    pub fn support(&self) -> (f64, f64) {
        (0.5 * self.base_scale(), 4.0 * self.lambda())
    }

    /// Region `k^{−2} ≤ λ^{−1}|x| ≤ 2` where `χ_k ≡ 1` and no other shell of
    /// a disjoint family is active.
    pub fn plateau(&self) -> (f64, f64) {
        (self.base_scale(), 2.0 * self.lambda())
    }

    /// `χ_k(t)`: χ below 1, one on `(1, k²)`, `χ(t/k²)` above `k²`.
    pub fn chi_k(&self, t: f64) -> Derivs {
        let chi = BumpProfile::shell();
        let k2 = (self.k * self.k) as f64;
        if t <= 1.0 {
            chi.derivs(t)
        } else if t < k2 {
            Derivs::ONE
        } else {
            chi.derivs(t / k2).rescaled(k2)
        }
    }

    /// Jet of η (not ½η).
    pub fn eta_jet(&self, x: &Vec3) -> Jet {
        let r = x.norm();
        let (lo, hi) = self.support();
        if r <= lo || r >= hi {
            return Jet::ZERO;
        }
        let base = self.base_scale();
        let cut = radial_jet(x, r, self.chi_k(r / base).rescaled(base));
        cut.mul(&self.bracket_jet(x, r))
    }

    /// Jet of the bracket multiplying `χ_k`.
    fn bracket_jet(&self, x: &Vec3, r: f64) -> Jet {
        let [a1, a2, a3, a4] = self.a;
        let lam = self.lambda();
        let lg = lam.ln() - r.ln();
        let (r2, r3) = (r * r, r * r * r);
        let f = Derivs {
            value: a1 / r2 + a2 / lam * lg / r - a3 / (lam * lam) * lg,
            d1: -2.0 * a1 / r3 - a2 / lam * (1.0 + lg) / r2 + a3 / (lam * lam * r),
            d2: 6.0 * a1 / (r2 * r2) + a2 / lam * (3.0 + 2.0 * lg) / r3 - a3 / (lam * lam * r2),
        };
        let mut jet = radial_jet(x, r, f);
        if a4 != 0.0 {
            jet = jet.add(&axial_power_jet(x, 3).scale(a4 / lam.powi(5)));
        }
        jet
    }

    /// `Δ̄η` on the plateau: `2a₁r^{−4} + a₂λ^{−1}r^{−3} + a₃λ^{−2}r^{−2} + 6a₄λ^{−5}x³`.
    pub fn laplacian_closed_form(&self, x: &Vec3) -> Result<f64> {
        let r = x.norm();
        let (p0, p1) = self.plateau();
        if r < p0 || r > p1 {
            return Err(Error::OutOfPlateau {
                radius: r,
                lower: p0,
                upper: p1,
            });
        }
        Ok(plateau_laplacian(&self.a, self.lambda(), x))
    }

    /// Smooth pieces of the support: rising edge, plateau, falling edge.
    pub fn curvature_segments(&self) -> Vec<(f64, f64)> {
        let base = self.base_scale();
        let k2 = (self.k * self.k) as f64;
        let [s0, p0, p1, s1] = BumpProfile::shell().breakpoints();
        vec![
            (s0 * base, p0 * base),
            (p0 * base, p1 * k2 * base),
            (p1 * k2 * base, s1 * k2 * base),
        ]
    }

    /// `|η| ≤ C|x|^{−2}` on the support, using `λ^{−1}r^{−1}|log r − log λ|
    /// < 100 r^{−2}` there and `r ≤ 4λ` for the cubic term.
    pub fn eta_decay_constant(&self) -> f64 {
        let [a1, a2, a3, a4] = self.a;
        a1.abs() + 100.0 * (a2.abs() + a3.abs()) + 4f64.powi(5) * a4.abs()
    }
}

/// Plateau Laplacian of η for amplitudes `a` at scale `λ`.
pub fn plateau_laplacian(a: &[f64; 4], lambda: f64, x: &Vec3) -> f64 {
    let r = x.norm();
    let [a1, a2, a3, a4] = *a;
    2.0 * a1 / r.powi(4)
        + a2 / (lambda * r.powi(3))
        + a3 / (lambda * lambda * r * r)
        + 6.0 * a4 * x[2] / lambda.powi(5)
}

/// `ψ = ½ Σ_i η_{k,i}` for `i_min ≤ i ≤ i_max`.
///
/// With `k = None` the diagonal family `η_{i,i}` is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSum {
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default = "default_i_min")]
    pub i_min: u32,
    #[serde(default = "default_i_max")]
    pub i_max: u32,
    pub a: [f64; 4],
}

fn default_i_min() -> u32 {
    2
}

fn default_i_max() -> u32 {
    3
}

impl ShellSum {
    pub fn shells(&self) -> Vec<ShellPerturbation> {
        (self.i_min..=self.i_max)
            .map(|i| ShellPerturbation {
                k: self.k.unwrap_or(i),
                l: i,
                a: self.a,
            })
            .collect()
    }

    /// Shell whose plateau contains `λ`, if any.
    pub fn shell_at_scale(&self, lambda: f64) -> Option<ShellPerturbation> {
        self.shells()
            .into_iter()
            .find(|s| (s.lambda() / lambda - 1.0).abs() < 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_min == 0 || self.i_min > self.i_max {
            return Err(Error::InvalidConfig(format!(
                "shell sum needs 1 <= i_min <= i_max, got {}..={}",
                self.i_min, self.i_max
            )));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidConfig("shell sum needs k >= 1".into()));
        }
        let shells = self.shells();
        for s in &shells {
            s.validate()?;
        }
        check_disjoint(&shells)
    }

    pub fn jet(&self, x: &Vec3) -> Jet {
        let r = x.norm();
        self.shells()
            .iter()
            .find(|s| {
                let (lo, hi) = s.support();
                r > lo && r < hi
            })
            .map_or(Jet::ZERO, |s| s.eta_jet(x).scale(0.5))
    }

    pub fn curvature_segments(&self) -> Vec<(f64, f64)> {
        self.shells()
            .iter()
            .flat_map(|s| s.curvature_segments())
            .collect()
    }
}

/// Pairwise disjointness of shell supports `[½·10^{ℓ²}, 4k²·10^{ℓ²}]`.
pub fn check_disjoint(shells: &[ShellPerturbation]) -> Result<()> {
    for (i, a) in shells.iter().enumerate() {
        for b in &shells[i + 1..] {
            let (a0, a1) = a.support();
            let (b0, b1) = b.support();
            if a0.max(b0) < a1.min(b1) {
                return Err(Error::InvalidConfig(format!(
                    "shell supports overlap: [{a0:e}, {a1:e}] and [{b0:e}, {b1:e}]"
                )));
            }
        }
    }
    Ok(())
}

// ─── glued metric ───────────────────────────────────────────────────────

/// One component of the glued metric: the shell-sum metric `g_k` restricted
/// by `γ_k`, which equals 1 on `[ρ, Θ]`, decays as `γ(t/ρ)` below ρ and as
/// `γ(t/Θ)` above Θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluedComponent {
    pub shells: ShellSum,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl GluedComponent {
    /// `γ_k(t)`.
    pub fn gamma(&self, t: f64) -> Derivs {
        let g = BumpProfile::glue();
        if t < self.inner_radius {
            g.derivs(t / self.inner_radius).rescaled(self.inner_radius)
        } else if t <= self.outer_radius {
            Derivs::ONE
        } else {
            g.derivs(t / self.outer_radius).rescaled(self.outer_radius)
        }
    }

    /// Support `[ρ/3, 3Θ]` of `γ_k`.
    pub fn support(&self) -> (f64, f64) {
        let g = BumpProfile::glue();
        (
            g.support.0 * self.inner_radius,
            g.support.1 * self.outer_radius,
        )
    }

    fn breakpoints(&self) -> [f64; 4] {
        let g = BumpProfile::glue();
        [
            g.support.0 * self.inner_radius,
            g.plateau.0 * self.inner_radius,
            g.plateau.1 * self.outer_radius,
            g.support.1 * self.outer_radius,
        ]
    }
}

/// `g = S⁴ḡ + Σ_k γ_k(|x|)(g_k − S⁴ḡ)` with `S = 1 + m/(2|x|)` and
/// `g_k = (S + ψ_k)⁴ḡ`. The result is again conformally flat with
/// `u⁴ = S⁴ + Σ_k γ_k(U_k⁴ − S⁴)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluedMetric {
    pub components: Vec<GluedComponent>,
}

impl GluedMetric {
    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            c.shells.validate()?;
            if !(c.inner_radius > 1.0 && c.inner_radius < c.outer_radius) {
                return Err(Error::InvalidConfig(format!(
                    "glue radii need 1 < ρ < Θ, got ρ={}, Θ={}",
                    c.inner_radius, c.outer_radius
                )));
            }
        }
        for (i, a) in self.components.iter().enumerate() {
            for b in &self.components[i + 1..] {
                let (a0, a1) = a.support();
                let (b0, b1) = b.support();
                if a0.max(b0) < a1.min(b1) {
                    return Err(Error::InvalidConfig(format!(
                        "glue supports overlap: [{a0:e}, {a1:e}] and [{b0:e}, {b1:e}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Jet of `u − S`, given the jet of `S`.
    pub fn jet(&self, x: &Vec3, base: &Jet) -> Jet {
        let r = x.norm();
        let Some(c) = self.components.iter().find(|c| {
            let (lo, hi) = c.support();
            r > lo && r < hi
        }) else {
            return Jet::ZERO;
        };
        let psi = c.shells.jet(x);
        if psi.value == 0.0 && psi.gradient == Vec3::zeros() && psi.laplacian == 0.0 {
            return Jet::ZERO;
        }
        let s4 = base.powi(4);
        let diff = base.add(&psi).powi(4).sub(&s4);
        let gamma = radial_jet(x, r, c.gamma(r));
        let w = s4.add(&gamma.mul(&diff));
        w.fourth_root().sub(base)
    }

    pub fn curvature_segments(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for c in &self.components {
            let (g0, g1) = c.support();
            let cuts = c.breakpoints();
            for (a, b) in c.shells.curvature_segments() {
                let (a, b) = (a.max(g0), b.min(g1));
                if b <= a {
                    continue;
                }
                let mut pts = vec![a];
                pts.extend(cuts.iter().copied().filter(|&t| t > a && t < b));
                pts.push(b);
                out.extend(pts.windows(2).map(|w| (w[0], w[1])));
            }
        }
        out
    }
}

// ─── catalog ────────────────────────────────────────────────────────────

/// Catalog of conformal perturbations, addressable by `kind` in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    /// Pure Schwarzschild, ψ ≡ 0.
    #[default]
    Schwarzschild,
    ComOscillator(ComOscillator),
    Shell(ShellPerturbation),
    ShellSum(ShellSum),
    GluedSlowDivergence(GluedMetric),
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Perturbation::Schwarzschild | Perturbation::ComOscillator(_) => Ok(()),
            Perturbation::Shell(s) => s.validate(),
            Perturbation::ShellSum(s) => s.validate(),
            Perturbation::GluedSlowDivergence(g) => g.validate(),
        }
    }

    /// Jet of ψ at `x`; `base` is the jet of the Schwarzschild factor.
    pub fn jet(&self, x: &Vec3, base: &Jet) -> Jet {
        match self {
            Perturbation::Schwarzschild => Jet::ZERO,
            Perturbation::ComOscillator(c) => c.jet(x),
            Perturbation::Shell(s) => s.eta_jet(x).scale(0.5),
            Perturbation::ShellSum(s) => s.jet(x),
            Perturbation::GluedSlowDivergence(g) => g.jet(x, base),
        }
    }

    /// Where Δψ may be nonzero, up to radius `r_max`.
    pub fn curvature_support(&self, r_max: f64) -> RadialSupport {
        let clip = |segs: Vec<(f64, f64)>| RadialSupport {
            segments: segs
                .into_iter()
                .filter(|s| s.0 < r_max)
                .map(|(a, b)| (a, b.min(r_max)))
                .collect(),
            decay: None,
        };
        match self {
            Perturbation::Schwarzschild => RadialSupport::default(),
            Perturbation::ComOscillator(c) => c.curvature_support(r_max),
            Perturbation::Shell(s) => clip(s.curvature_segments()),
            Perturbation::ShellSum(s) => clip(s.curvature_segments()),
            Perturbation::GluedSlowDivergence(g) => clip(g.curvature_segments()),
        }
        .normalize()
    }

    /// Constant `C_ψ` in `|ψ(x)| ≤ C_ψ|x|^{−2}`.
    pub fn decay_constant(&self) -> f64 {
        match self {
            Perturbation::Schwarzschild => 0.0,
            Perturbation::ComOscillator(c) => c.decay_constant(),
            Perturbation::Shell(s) => 0.5 * s.eta_decay_constant(),
            Perturbation::ShellSum(s) => s
                .shells()
                .iter()
                .map(|x| 0.5 * x.eta_decay_constant())
                .fold(0.0, f64::max),
            // u − S is bounded by |U_k − S| where γ_k = 1 and interpolates
            // between 0 and it elsewhere.
            Perturbation::GluedSlowDivergence(g) => g
                .components
                .iter()
                .flat_map(|c| c.shells.shells())
                .map(|x| 0.5 * x.eta_decay_constant())
                .fold(0.0, f64::max),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::Schwarzschild => "schwarzschild",
            Perturbation::ComOscillator(_) => "com-oscillator",
            Perturbation::Shell(_) => "shell",
            Perturbation::ShellSum(_) => "shell-sum",
            Perturbation::GluedSlowDivergence(_) => "glued-slow-divergence",
        }
    }
}
