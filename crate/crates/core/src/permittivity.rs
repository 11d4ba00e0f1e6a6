//! Plate permittivity profiles and the series resistance `N_delta`.
//!
//! Values are dimensionless, in units of the permittivity of the gap below
//! the plate. The second argument `s` is the height above the bottom face of
//! the plate, `s in [0, delta]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in parametric families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileFamily {
    Constant { value: f64 },
    /// `base + slope * s`
    Affine { base: f64, slope: f64 },
    /// `(base + slope * s) * (1 + amplitude * cos(2 pi wavenumber x))`
    Modulated {
        base: f64,
        slope: f64,
        amplitude: f64,
        wavenumber: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileFlags {
    pub constant_in_s: bool,
    pub nondecreasing_in_s: bool,
    /// `sigma >= 1` everywhere on `D x [0, delta]`.
    pub at_least_one: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermittivityProfile {
    pub family: ProfileFamily,
    /// Overall multiplier; `delta * sigma` models a plate whose permittivity
    /// scales with its thickness.
    #[serde(default = "unit")]
    pub scale: f64,
    /// Declared lower bound, checked by sampling.
    pub sigma0: f64,
}

fn unit() -> f64 {
    1.0
}

const SAMPLES_X: usize = 33;
const SAMPLES_S: usize = 17;

impl PermittivityProfile {
    pub fn constant(value: f64) -> Self {
        Self::from_family(ProfileFamily::Constant { value })
    }

    pub fn affine(base: f64, slope: f64) -> Self {
        Self::from_family(ProfileFamily::Affine { base, slope })
    }

    pub fn modulated(base: f64, slope: f64, amplitude: f64, wavenumber: f64) -> Self {
        Self::from_family(ProfileFamily::Modulated {
            base,
            slope,
            amplitude,
            wavenumber,
        })
    }

    /// Profile with `sigma0` set to the family's minimum over `D x [0, 1]`.
    pub fn from_family(family: ProfileFamily) -> Self {
        let sigma0 = match family {
            ProfileFamily::Constant { value } => value,
            ProfileFamily::Affine { base, slope } => base.min(base + slope),
            ProfileFamily::Modulated {
                base,
                slope,
                amplitude,
                ..
            } => base.min(base + slope) * (1.0 - amplitude.abs()),
        };
        Self {
            family,
            scale: 1.0,
            sigma0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            family: self.family,
            scale: self.scale * factor,
            sigma0: self.sigma0 * factor,
        }
    }

    /// `sigma*(x, s)` without domain checks.
    #[inline]
    pub fn value(&self, x: f64, s: f64) -> f64 {
        self.scale
            * match self.family {
                ProfileFamily::Constant { value } => value,
                ProfileFamily::Affine { base, slope } => base + slope * s,
                ProfileFamily::Modulated {
                    base,
                    slope,
                    amplitude,
                    wavenumber,
                } => (base + slope * s) * (1.0 + amplitude * (2.0 * PI * wavenumber * x).cos()),
            }
    }

    /// Analytic `d sigma* / ds`.
    #[inline]
    pub fn ds(&self, x: f64, _s: f64) -> f64 {
        self.scale
            * match self.family {
                ProfileFamily::Constant { .. } => 0.0,
                ProfileFamily::Affine { slope, .. } => slope,
                ProfileFamily::Modulated {
                    slope,
                    amplitude,
                    wavenumber,
                    ..
                } => slope * (1.0 + amplitude * (2.0 * PI * wavenumber * x).cos()),
            }
    }

    /// Checked evaluation on `[0, 1] x [0, delta]`.
    pub fn eval(&self, x: f64, s: f64, delta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::arg(format!("x = {x} outside [0, 1]")));
        }
        if !(0.0..=delta).contains(&s) {
            return Err(Error::arg(format!("s = {s} outside [0, {delta}]")));
        }
        let v = self.value(x, s);
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidProfile(format!("sigma*({x}, {s}) = {v}")));
        }
        Ok(v)
    }

    pub fn flags(&self) -> ProfileFlags {
        let (constant_in_s, nondecreasing_in_s) = match self.family {
            ProfileFamily::Constant { .. } => (true, true),
            ProfileFamily::Affine { slope, .. } | ProfileFamily::Modulated { slope, .. } => {
                (slope == 0.0, slope >= 0.0)
            }
        };
        ProfileFlags {
            constant_in_s,
            nondecreasing_in_s,
            at_least_one: self.sigma0 >= 1.0,
        }
    }

    /// Samples `D x [0, delta]` and checks the declared bound and flags.
    pub fn validate(&self, delta: f64) -> Result<()> {
        if !(self.sigma0 > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "declared lower bound sigma0 = {} is not positive",
                self.sigma0
            )));
        }
        let flags = self.flags();
        for i in 0..SAMPLES_X {
            let x = i as f64 / (SAMPLES_X - 1) as f64;
            let mut prev = f64::NEG_INFINITY;
            for k in 0..SAMPLES_S {
                let s = delta * k as f64 / (SAMPLES_S - 1) as f64;
                let v = self.value(x, s);
                if !(v >= self.sigma0 * (1.0 - 1e-12)) || !v.is_finite() {
                    return Err(Error::InvalidProfile(format!(
                        "sigma*({x}, {s}) = {v} below declared bound {}",
                        self.sigma0
                    )));
                }
                if flags.nondecreasing_in_s && v < prev {
                    return Err(Error::InvalidProfile(format!(
                        "profile decreases in s at x = {x}"
                    )));
                }
                if flags.constant_in_s && k > 0 && v != prev {
                    return Err(Error::InvalidProfile(format!(
                        "profile varies in s at x = {x}"
                    )));
                }
                if flags.at_least_one && v < 1.0 {
                    return Err(Error::InvalidProfile(format!("sigma*({x}, {s}) = {v} < 1")));
                }
                prev = v;
            }
        }
        Ok(())
    }
}

/// Composite Simpson rule on `[a, b]` with at least `points` nodes.
///
/// An even point count is rounded up so that the number of panels is even.
pub fn simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, points: usize) -> f64 {
    if b == a {
        return 0.0;
    }
    let mut panels = points.max(3) - 1;
    if panels % 2 == 1 {
        panels += 1;
    }
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `N_delta(x) = int_0^delta dq / sigma*(x, q)` at each abscissa.
pub fn n_delta(
    profile: &PermittivityProfile,
    delta: f64,
    xs: &[f64],
    quad_points: usize,
) -> Result<Vec<f64>> {
    if !(delta >= 0.0) {
        return Err(Error::arg(format!("delta must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(vec![0.0; xs.len()]);
    }
    if quad_points < 2 {
        return Err(Error::arg("quad_points must be >= 2"));
    }
    xs.iter()
        .map(|&x| {
            let mut bad = None;
            let v = simpson(
                |q| {
                    let s = profile.value(x, q);
                    if s <= 0.0 || !s.is_finite() {
                        bad = Some((q, s));
                    }
                    1.0 / s
                },
                0.0,
                delta,
                quad_points,
            );
            match bad {
                Some((q, s)) => Err(Error::InvalidProfile(format!("sigma*({x}, {q}) = {s}"))),
                None => Ok(v),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs() -> Vec<f64> {
        (0..9).map(|i| i as f64 / 8.0).collect()
    }

    #[test]
    fn constant_profile_gives_exact_resistance() {
        let n = n_delta(&PermittivityProfile::constant(2.0), 0.1, &xs(), 33).unwrap();
        for v in n {
            assert!((v - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn affine_profile_gives_log_two() {
        let n = n_delta(&PermittivityProfile::affine(1.0, 1.0), 1.0, &xs(), 33).unwrap();
        for v in n {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn zero_thickness_gives_zero() {
        let p = PermittivityProfile::modulated(1.5, 0.7, 0.3, 2.0);
        assert!(n_delta(&p, 0.0, &xs(), 0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonpositive_profile_rejected() {
        let p = PermittivityProfile::affine(1.0, -2.0);
        assert!(matches!(
            n_delta(&p, 1.0, &xs(), 33),
            Err(Error::InvalidProfile(_))
        ));
        assert!(p.validate(1.0).is_err());
    }

    #[test]
    fn pointwise_evaluation() {
        assert_eq!(PermittivityProfile::constant(2.0).eval(0.5, 0.0, 0.2).unwrap(), 2.0);
        let a = PermittivityProfile::affine(1.0, 1.0);
        assert!((a.eval(0.3, 0.5, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(a.eval(1.5, 0.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(a.eval(0.5, 1.5, 1.0).is_err());
    }

    #[test]
    fn simpson_converges_at_fourth_order() {
        // Reference: closed-form integral of 1/(1 + q + q^2/2 ... ) is awkward,
        // so use an adaptive-refinement oracle on a smooth profile instead.
        let p = PermittivityProfile::modulated(1.0, 2.0, 0.2, 1.0);
        let f = |q: f64| 1.0 / (p.value(0.3, q) + 0.5 * q * q);
        let oracle = adaptive_oracle(&f, 0.0, 1.0, 1e-14);
        let e1 = (simpson(f, 0.0, 1.0, 9) - oracle).abs();
        let e2 = (simpson(f, 0.0, 1.0, 17) - oracle).abs();
        let ratio = e1 / e2;
        assert!(ratio > 13.0 && ratio < 19.0, "ratio {ratio}");
    }

    fn adaptive_oracle(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        let m = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        let left = (m - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m));
        let right = (b - m) / 6.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b));
        if (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            adaptive_oracle(f, a, m, 0.5 * tol) + adaptive_oracle(f, m, b, 0.5 * tol)
        }
    }

    #[test]
    fn flags_follow_family() {
        let c = PermittivityProfile::constant(2.0);
        let f = c.flags();
        assert!(f.constant_in_s && f.nondecreasing_in_s && f.at_least_one);
        c.validate(0.2).unwrap();
        let d = PermittivityProfile::affine(0.5, -0.1);
        assert!(!d.flags().nondecreasing_in_s);
        assert!(!d.flags().at_least_one);
    }

    #[test]
    fn scaling_scales_everything() {
        let p = PermittivityProfile::affine(2.0, 1.0).scaled(0.1);
        assert!((p.value(0.2, 0.5) - 0.25).abs() < 1e-15);
        assert!((p.ds(0.2, 0.5) - 0.1).abs() < 1e-15);
        assert!((p.sigma0 - 0.2).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn n_delta_monotone_in_thickness(
                base in 0.5f64..3.0, slope in -0.4f64..2.0, amp in 0.0f64..0.4,
                d1 in 0.0f64..1.0, d2 in 0.0f64..1.0,
            ) {
                let p = PermittivityProfile::modulated(base, slope, amp, 1.0);
                let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
                let xs: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
                let a = n_delta(&p, lo, &xs, 33).unwrap();
                let b = n_delta(&p, hi, &xs, 33).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!(*x >= 0.0);
                    prop_assert!(x <= &(y + 1e-15));
                }
            }
        }
    }
}
