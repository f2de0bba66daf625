//! Named integrands for the structural constants.
//!
//! Every displayed constant of the census is an integral over `H^1` (or its
//! Cayley transport from `S^3`) of one of these kernels. Naming them keeps
//! cache keys and Monte Carlo cross-checks attached to the same object.

use num_complex::Complex64;
use thiserror::Error;

use crate::heisenberg::{group_mul, HeisenbergPoint, SphereBubble, SpherePoint};
use crate::quad::{self, QuadratureError, QuadratureResult};

/// Horizontal coordinate selector for the flatness-gradient kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizontalAxis {
    X1,
    X2,
}

/// Admissible flatness orders.
pub const BETA_MIN: f64 = 2.0;
pub const BETA_MAX: f64 = 4.0;

pub fn beta_in_range(beta: f64) -> bool {
    (BETA_MIN..BETA_MAX).contains(&beta)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("flatness order must lie in [2, 4), got {0}")]
    BetaOutOfRange(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// `|1 + |z|^2 - i t|^2 = (1 + |z|^2)^2 + t^2`.
#[inline]
pub fn bubble_gauge_sq(z: Complex64, t: f64) -> f64 {
    let a = 1.0 + z.norm_sqr();
    a * a + t * t
}

/// `int_0^{2 pi} |cos phi|^beta dphi`, by one-dimensional quadrature at
/// near-machine tolerance.
pub fn abs_cos_pow_integral(beta: f64) -> f64 {
    let quarter = quad::adaptive_gk(
        &|phi: f64| phi.cos().powf(beta),
        0.0,
        std::f64::consts::FRAC_PI_2,
        &[],
        1e-15,
        5e-15,
        400,
    );
    4.0 * quarter.value
}

/// Named integrand.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Indicator of the unit gauge ball `|z|^4 + t^2 <= 1` (volume `omega_3`).
    KoranyiBallIndicator,
    /// `|1+|z|^2-it|^{-power}`; `power = 3` and `4` give `c_2/c_0^3` and `S/c_0^4`.
    BubblePower { power: i32 },
    /// `x_1^2 / |1+|z|^2-it|^4` (the diagonal constant `c`).
    HorizontalSecondMoment,
    /// `|t|^{beta/2} (1 - ||z|^2-it|^2) / |1+|z|^2-it|^6`.
    KappaNumerator { beta: f64 },
    /// `|x_1|^beta (1 - ||z|^2-it|^2) / |1+|z|^2-it|^6`.
    KappaDenominator { beta: f64 },
    /// `|t|^{beta/2} / |1+|z|^2-it|^4`.
    KappaPrimeNumerator { beta: f64 },
    /// `|x_1|^beta / |1+|z|^2-it|^4`.
    KappaPrimeDenominator { beta: f64 },
    /// `|x_k + s_k|^beta x_k (1+|z|^2) / |1+|z|^2-it|^6`, the shift acting
    /// through the group law.
    FlatnessPrincipal {
        beta: f64,
        axis: HorizontalAxis,
        shift: HeisenbergPoint,
    },
    /// `|(g s)_t|^{beta/2} (x_k (1+|z|^2) + (-1)^{k'} x_{k'} t) / |1+|z|^2-it|^6`.
    FlatnessCoupled {
        beta: f64,
        axis: HorizontalAxis,
        shift: HeisenbergPoint,
    },
    /// `|(g s)_t|^{beta/2} t / |1+|z|^2-it|^6`.
    FlatnessVertical { beta: f64, shift: HeisenbergPoint },
    /// Kernel `1` on the sphere (total contact volume, `16 pi^2`).
    SphereConstant,
    /// Fourth power of a sphere bubble (the volume-transport check).
    SphereBubbleFourth { center: SpherePoint, lambda: f64, c0: f64 },
}

/// Integration domain of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    H1,
    Sphere,
}

impl Kernel {
    pub fn domain(&self) -> Domain {
        match self {
            Kernel::SphereConstant | Kernel::SphereBubbleFourth { .. } => Domain::Sphere,
            _ => Domain::H1,
        }
    }

    /// Flatness order governing the kernel's decay, used to pick the Monte
    /// Carlo proposal tail and the radial compactification power. Kernels
    /// without a `beta` parameter decay at least as fast as the `beta = 2`
    /// family.
    pub fn beta_hint(&self) -> f64 {
        match self {
            Kernel::KappaNumerator { beta }
            | Kernel::KappaDenominator { beta }
            | Kernel::KappaPrimeNumerator { beta }
            | Kernel::KappaPrimeDenominator { beta }
            | Kernel::FlatnessPrincipal { beta, .. }
            | Kernel::FlatnessCoupled { beta, .. }
            | Kernel::FlatnessVertical { beta, .. } => *beta,
            _ => 2.0,
        }
    }

    /// Angular kink positions of the shifted flatness kernels at fixed
    /// `(r, t)`, in `[0, 2 pi)`. The horizontal argument `x_k + s_k` vanishes
    /// on up to two angles; the vertical argument
    /// `t + s_t + 2 r (s_1 sin phi - s_2 cos phi)` likewise.
    fn phi_kinks(&self, r: f64, t: f64) -> Vec<f64> {
        let tau = std::f64::consts::TAU;
        let wrap = |phi: f64| phi.rem_euclid(tau);
        match self {
            Kernel::FlatnessPrincipal { axis, shift, .. } => {
                if r == 0.0 {
                    return Vec::new();
                }
                match axis {
                    HorizontalAxis::X1 => {
                        let c = -shift.z.re / r;
                        if c.abs() <= 1.0 {
                            let a = c.acos();
                            vec![wrap(a), wrap(-a)]
                        } else {
                            Vec::new()
                        }
                    }
                    HorizontalAxis::X2 => {
                        let s = -shift.z.im / r;
                        if s.abs() <= 1.0 {
                            let a = s.asin();
                            vec![wrap(a), wrap(std::f64::consts::PI - a)]
                        } else {
                            Vec::new()
                        }
                    }
                }
            }
            Kernel::FlatnessCoupled { shift, .. } | Kernel::FlatnessVertical { shift, .. } => {
                // 2 r (s1 sin phi - s2 cos phi) = -(t + s_t)
                let a = 2.0 * r * shift.z.re;
                let b = -2.0 * r * shift.z.im;
                let c = -(t + shift.t);
                let amp = (a * a + b * b).sqrt();
                if amp == 0.0 || c.abs() > amp {
                    return Vec::new();
                }
                let delta = b.atan2(a);
                let base = (c / amp).clamp(-1.0, 1.0).asin();
                vec![
                    wrap(base - delta),
                    wrap(std::f64::consts::PI - base - delta),
                ]
            }
            _ => Vec::new(),
        }
    }

    /// Whether the angular integral needs kink-seeded adaptive panels.
    fn phi_is_kinked(&self) -> bool {
        matches!(
            self,
            Kernel::FlatnessPrincipal { .. }
                | Kernel::FlatnessCoupled { .. }
                | Kernel::FlatnessVertical { .. }
        )
    }

    /// Closed-form angular factor where the kernel's `phi`-dependence is
    /// trivial or a pure `|cos phi|^beta` profile.
    fn phi_factor(&self) -> Option<f64> {
        use std::f64::consts::TAU;
        match self {
            Kernel::KoranyiBallIndicator
            | Kernel::BubblePower { .. }
            | Kernel::KappaNumerator { .. }
            | Kernel::KappaPrimeNumerator { .. } => Some(TAU),
            Kernel::HorizontalSecondMoment => Some(abs_cos_pow_integral(2.0)),
            Kernel::KappaDenominator { beta } | Kernel::KappaPrimeDenominator { beta } => {
                Some(abs_cos_pow_integral(*beta))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let beta = self.beta_hint();
        match self {
            Kernel::KoranyiBallIndicator
            | Kernel::BubblePower { .. }
            | Kernel::HorizontalSecondMoment
            | Kernel::SphereConstant
            | Kernel::SphereBubbleFourth { .. } => Ok(()),
            _ if !beta_in_range(beta) => Err(KernelError::BetaOutOfRange(beta)),
            _ => Ok(()),
        }
    }

    /// Evaluation on `H^1` (for `Sphere`-domain kernels this is the Cayley
    /// pullback integrand without the transport weight; use
    /// [`IntegralSpec::integrate`]).
    pub fn eval_h1(&self, z: Complex64, t: f64) -> f64 {
        let gauge2 = bubble_gauge_sq(z, t);
        match self {
            Kernel::KoranyiBallIndicator => {
                if z.norm_sqr().powi(2) + t * t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::BubblePower { power } => gauge2.powf(-0.5 * *power as f64),
            Kernel::HorizontalSecondMoment => z.re * z.re / (gauge2 * gauge2),
            Kernel::KappaNumerator { beta } => {
                let sign = 1.0 - (z.norm_sqr().powi(2) + t * t);
                t.abs().powf(beta / 2.0) * sign / gauge2.powi(3)
            }
            Kernel::KappaDenominator { beta } => {
                let sign = 1.0 - (z.norm_sqr().powi(2) + t * t);
                z.re.abs().powf(*beta) * sign / gauge2.powi(3)
            }
            Kernel::KappaPrimeNumerator { beta } => {
                t.abs().powf(beta / 2.0) / (gauge2 * gauge2)
            }
            Kernel::KappaPrimeDenominator { beta } => {
                z.re.abs().powf(*beta) / (gauge2 * gauge2)
            }
            Kernel::FlatnessPrincipal { beta, axis, shift } => {
                let shifted = group_mul(HeisenbergPoint::new(z, t), *shift);
                let (xs, xk) = match axis {
                    HorizontalAxis::X1 => (shifted.z.re, z.re),
                    HorizontalAxis::X2 => (shifted.z.im, z.im),
                };
                xs.abs().powf(*beta) * xk * (1.0 + z.norm_sqr()) / gauge2.powi(3)
            }
            Kernel::FlatnessCoupled { beta, axis, shift } => {
                let shifted = group_mul(HeisenbergPoint::new(z, t), *shift);
                let weight = match axis {
                    HorizontalAxis::X1 => z.re * (1.0 + z.norm_sqr()) + z.im * t,
                    HorizontalAxis::X2 => z.im * (1.0 + z.norm_sqr()) - z.re * t,
                };
                shifted.t.abs().powf(beta / 2.0) * weight / gauge2.powi(3)
            }
            Kernel::FlatnessVertical { beta, shift } => {
                let shifted = group_mul(HeisenbergPoint::new(z, t), *shift);
                shifted.t.abs().powf(beta / 2.0) * t / gauge2.powi(3)
            }
            Kernel::SphereConstant => 1.0,
            Kernel::SphereBubbleFourth { .. } => {
                unreachable!("sphere kernels integrate through IntegralSpec")
            }
        }
    }

    /// Evaluation on the sphere (only for `Sphere`-domain kernels).
    pub fn eval_sphere(&self, zeta: &SpherePoint) -> f64 {
        match self {
            Kernel::SphereConstant => 1.0,
            Kernel::SphereBubbleFourth { center, lambda, c0 } => {
                match SphereBubble::with_c0(*center, *lambda, *c0)
                    .and_then(|b| b.eval(zeta))
                {
                    Ok(v) => v.powi(4),
                    Err(_) => 0.0,
                }
            }
            _ => unreachable!("H^1 kernels have no sphere evaluation"),
        }
    }
}

/// A kernel together with its integration request.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSpec {
    pub kernel: Kernel,
    pub tolerance: f64,
}

impl IntegralSpec {
    pub fn new(kernel: Kernel, tolerance: f64) -> Result<Self, KernelError> {
        kernel.validate()?;
        if !(tolerance > 0.0) {
            return Err(KernelError::InvalidTolerance(tolerance));
        }
        Ok(Self { kernel, tolerance })
    }

    /// Adaptive integration over the kernel's domain, with the radial
    /// compactification matched to the kernel's decay, closed-form angular
    /// factors where the kernel admits them, and kink-seeded angular panels
    /// for the shifted flatness kernels.
    pub fn integrate(&self) -> Result<QuadratureResult, QuadratureError> {
        match self.kernel.domain() {
            Domain::H1 => {
                let k = &self.kernel;
                let mode = if let Some(factor) = k.phi_factor() {
                    quad::PhiMode::Factor(factor)
                } else if k.phi_is_kinked() {
                    quad::PhiMode::Breaks(&|r, t| k.phi_kinks(r, t))
                } else {
                    quad::PhiMode::Adaptive
                };
                quad::integrate_h1_mode(|z, t| k.eval_h1(z, t), k.beta_hint(), mode, self.tolerance)
            }
            Domain::Sphere => {
                let k = &self.kernel;
                quad::integrate_sphere(|zeta| k.eval_sphere(zeta), self.tolerance)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_beta() {
        assert!(Kernel::KappaPrimeNumerator { beta: 4.0 }.validate().is_err());
        assert!(Kernel::KappaPrimeNumerator { beta: 1.9 }.validate().is_err());
        assert!(Kernel::KappaPrimeNumerator { beta: 2.0 }.validate().is_ok());
        assert!(IntegralSpec::new(Kernel::SphereConstant, -1.0).is_err());
    }

    #[test]
    fn ball_indicator_volume() {
        // omega_3 = 2 pi^2.
        let spec = IntegralSpec::new(Kernel::KoranyiBallIndicator, 1e-8).unwrap();
        let r = spec.integrate().unwrap();
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        assert!((r.value - exact).abs() < 1e-8, "got {} want {}", r.value, exact);
    }

    #[test]
    fn flatness_kernels_odd_at_zero_shift() {
        let zero = HeisenbergPoint::origin();
        for axis in [HorizontalAxis::X1, HorizontalAxis::X2] {
            for beta in [2.0, 2.7] {
                let p = IntegralSpec::new(
                    Kernel::FlatnessPrincipal { beta, axis, shift: zero },
                    1e-7,
                )
                .unwrap()
                .integrate()
                .unwrap();
                assert!(p.value.abs() < 1e-7, "principal {axis:?} beta {beta}: {}", p.value);
                let c = IntegralSpec::new(
                    Kernel::FlatnessCoupled { beta, axis, shift: zero },
                    1e-7,
                )
                .unwrap()
                .integrate()
                .unwrap();
                assert!(c.value.abs() < 1e-7, "coupled {axis:?} beta {beta}: {}", c.value);
            }
        }
        let v = IntegralSpec::new(Kernel::FlatnessVertical { beta: 2.5, shift: zero }, 1e-7)
            .unwrap()
            .integrate()
            .unwrap();
        assert!(v.value.abs() < 1e-7, "vertical: {}", v.value);
    }
}
