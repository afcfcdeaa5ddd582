//! Smooth plateau functions built from the `e^{−1/x}` smooth step.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Value and first two derivatives of a one-variable function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Derivs {
    pub const ZERO: Derivs = Derivs {
        value: 0.0,
        d1: 0.0,
        d2: 0.0,
    };
    pub const ONE: Derivs = Derivs {
        value: 1.0,
        d1: 0.0,
        d2: 0.0,
    };

    /// Derivatives of `t ↦ f(t/scale)`.
    pub fn rescaled(self, scale: f64) -> Derivs {
        Derivs {
            value: self.value,
            d1: self.d1 / scale,
            d2: self.d2 / (scale * scale),
        }
    }
}

/// Smooth step `s(x) = e^{−1/x}/(e^{−1/x} + e^{−1/(1−x)})` rising from 0 at
/// `x = 0` to 1 at `x = 1`, with derivatives.
pub fn smooth_step(x: f64) -> Derivs {
    // Below this the exponential factor underflows long before 1/x² overflows.
    const EDGE: f64 = 1e-3;
    if x <= EDGE * 1e-1 {
        return Derivs::ZERO;
    }
    if x >= 1.0 - EDGE * 1e-1 {
        return Derivs::ONE;
    }
    let y = 1.0 - x;
    let phi = 1.0 / x - 1.0 / y;
    // s = 1/(1+e^φ) and s(1−s) = e^{−|φ|}/(1+e^{−|φ|})², evaluated without
    // forming e^{|φ|}.
    let e = (-phi.abs()).exp();
    let (s, s1s) = if phi > 0.0 {
        (e / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    } else {
        (1.0 / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    };
    let psi1 = 1.0 / (x * x) + 1.0 / (y * y);
    let dpsi1 = -2.0 / (x * x * x) + 2.0 / (y * y * y);
    let d1 = s1s * psi1;
    let d2 = d1 * (1.0 - 2.0 * s) * psi1 + s1s * dpsi1;
    Derivs { value: s, d1, d2 }
}

/// Plateau function: 0 outside `(s₀, s₁)`, 1 on `[p₀, p₁]`, smooth steps in
/// between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
}

impl BumpProfile {
    pub fn new(support: (f64, f64), plateau: (f64, f64)) -> Result<Self> {
        let (s0, s1) = support;
        let (p0, p1) = plateau;
        if !(s0 < p0 && p0 < p1 && p1 < s1) {
            return Err(Error::InvalidConfig(format!(
                "bump profile needs s0 < p0 < p1 < s1, got support {support:?}, plateau {plateau:?}"
            )));
        }
        Ok(Self { support, plateau })
    }

    /// Profile with support `[2, 6]` and plateau `[3, 5]` used by the
    /// center-of-mass oscillator.
    pub fn oscillator() -> Self {
        Self {
            support: (2.0, 6.0),
            plateau: (3.0, 5.0),
        }
    }

    /// Profile with support `(1/2, 4)` and plateau `[3/4, 3]` used by the
    /// shell perturbations.
    pub fn shell() -> Self {
        Self {
            support: (0.5, 4.0),
            plateau: (0.75, 3.0),
        }
    }

    /// Glue profile with support `[1/3, 3]` and plateau `[1/2, 2]`.
    pub fn glue() -> Self {
        Self {
            support: (1.0 / 3.0, 3.0),
            plateau: (0.5, 2.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivs(t).value
    }

    pub fn derivs(&self, t: f64) -> Derivs {
        let (s0, s1) = self.support;
        let (p0, p1) = self.plateau;
        if t <= s0 || t >= s1 {
            Derivs::ZERO
        } else if t < p0 {
            smooth_step((t - s0) / (p0 - s0)).rescaled(p0 - s0)
        } else if t <= p1 {
            Derivs::ONE
        } else {
            let w = s1 - p1;
            let d = smooth_step((s1 - t) / w);
            Derivs {
                value: d.value,
                d1: -d.d1 / w,
                d2: d.d2 / (w * w),
            }
        }
    }

    /// Radii at which the profile changes its piecewise definition.
    pub fn breakpoints(&self) -> [f64; 4] {
        [
            self.support.0,
            self.plateau.0,
            self.plateau.1,
            self.support.1,
        ]
    }

    /// Upper bounds for `|χ'|` and `|χ''|`, from a fine sample inflated by
    /// 10%.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let (s0, s1) = self.support;
        let n = 4000;
        let mut b1: f64 = 0.0;
        let mut b2: f64 = 0.0;
        for i in 0..=n {
            let d = self.derivs(s0 + (s1 - s0) * i as f64 / n as f64);
            b1 = b1.max(d.d1.abs());
            b2 = b2.max(d.d2.abs());
        }
        (1.1 * b1, 1.1 * b2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn shell_profile_examples() {
        let chi = BumpProfile::shell();
        assert_eq!(chi.eval(2.0), 1.0);
        assert_eq!(chi.eval(0.4), 0.0);
        let mid = chi.eval(0.6);
        assert!(mid > 0.0 && mid < 1.0);
        // s((0.6−0.5)/0.25) = s(0.4); φ = 1/0.4 − 1/0.6.
        let golden = 1.0 / (1.0 + (1.0f64 / 0.4 - 1.0 / 0.6).exp());
        assert_relative_eq!(mid, golden, max_relative = 1e-14);
    }

    #[test]
    fn smooth_step_symmetry() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let a = smooth_step(x);
            let b = smooth_step(1.0 - x);
            assert_relative_eq!(a.value + b.value, 1.0, epsilon = 1e-15);
            assert_relative_eq!(a.d1, b.d1, epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(a.d2, -b.d2, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for chi in [
            BumpProfile::shell(),
            BumpProfile::oscillator(),
            BumpProfile::glue(),
        ] {
            let (s0, s1) = chi.support;
            for i in 1..200 {
                let t = s0 + (s1 - s0) * i as f64 / 200.0;
                let h = 1e-5;
                let d = chi.derivs(t);
                let fd1 = (chi.eval(t + h) - chi.eval(t - h)) / (2.0 * h);
                let fd2 = (chi.derivs(t + h).d1 - chi.derivs(t - h).d1) / (2.0 * h);
                assert!((d.d1 - fd1).abs() <= 1e-6 * (1.0 + d.d1.abs()), "t={t}");
                assert!((d.d2 - fd2).abs() <= 1e-5 * (1.0 + d.d2.abs()), "t={t}");
            }
        }
    }

    #[test]
    fn rejects_bad_intervals() {
        assert!(BumpProfile::new((1.0, 2.0), (0.5, 1.5)).is_err());
        assert!(BumpProfile::new((0.0, 4.0), (1.0, 3.0)).is_ok());
    }

    #[test]
    fn second_differences_bounded() {
        let chi = BumpProfile::shell();
        let (_, b2) = chi.derivative_bounds();
        let h = 1e-4;
        let mut t = 0.3;
        while t < 4.2 {
            let dd = (chi.eval(t + h) - 2.0 * chi.eval(t) + chi.eval(t - h)) / (h * h);
            assert!(dd.abs() <= b2 + 1e-3);
            t += 1.3e-3;
        }
    }

    proptest! {
        #[test]
        fn values_in_unit_interval(t in -2.0f64..10.0) {
            for chi in [BumpProfile::shell(), BumpProfile::oscillator(), BumpProfile::glue()] {
                let v = chi.eval(t);
                prop_assert!((0.0..=1.0).contains(&v));
                let (s0, s1) = chi.support;
                let (p0, p1) = chi.plateau;
                if t <= s0 || t >= s1 { prop_assert_eq!(v, 0.0); }
                if t >= p0 && t <= p1 { prop_assert_eq!(v, 1.0); }
            }
        }
    }
}
