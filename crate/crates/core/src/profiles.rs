//! Flatness profiles of curvature critical points and their classification.
//!
//! Near each critical point the candidate curvature has the normal form
//! `K(x) = K(0) + b_1 |x_1|^beta + b_2 |x_2|^beta + b_0 |t|^{beta/2}` in
//! pseudo-hermitian normal coordinates, with all three coefficients nonzero
//! and both balance sums `b_1 + b_2 + kappa b_0`, `b_1 + b_2 + kappa' b_0`
//! nonzero. A point belongs to the degree-two family `K1` when `beta = 2` and
//! the `kappa'`-sum is negative, and to `K2` when `beta > 2` with the same
//! sign condition. The count `m` of negative coefficients (all three of
//! `b_0, b_1, b_2` participate) drives every index formula downstream.

use thiserror::Error;

use crate::constants::StructuralConstants;
use crate::heisenberg::{HeisenbergPoint, SpherePoint};
use crate::kernels;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("flatness order must lie in [2, 4), got {0}")]
    BetaOutOfRange(f64),
    #[error("constants were computed at beta = {have}, profile needs beta = {want}")]
    ConstantsMismatch { have: f64, want: f64 },
    #[error("balance sum {0:.3e} is numerically zero; profile is degenerate")]
    Degenerate(f64),
}

/// One critical point's flatness data.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointProfile {
    pub id: String,
    pub position: SpherePoint,
    pub beta: f64,
    pub b1: f64,
    pub b2: f64,
    pub b0: f64,
    /// Curvature value at the point.
    pub k_value: f64,
}

impl CriticalPointProfile {
    pub fn new(
        id: impl Into<String>,
        position: SpherePoint,
        beta: f64,
        b1: f64,
        b2: f64,
        b0: f64,
        k_value: f64,
    ) -> Self {
        Self {
            id: id.into(),
            position,
            beta,
            b1,
            b2,
            b0,
            k_value,
        }
    }

    /// Number of strictly negative coefficients among `(b_1, b_2, b_0)`.
    pub fn m(&self) -> u8 {
        [self.b1, self.b2, self.b0]
            .iter()
            .filter(|b| **b < 0.0)
            .count() as u8
    }
}

/// Which set a profile falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetLabel {
    /// `beta = 2` with negative balance sum.
    K1,
    /// `beta > 2` with negative balance sum.
    K2,
    Neither,
}

impl std::fmt::Display for SetLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SetLabel::K1 => write!(f, "K1"),
            SetLabel::K2 => write!(f, "K2"),
            SetLabel::Neither => write!(f, "neither"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub set: SetLabel,
    /// The balance sum `b_1 + b_2 + kappa'(beta) b_0`.
    pub sigma: f64,
    /// Count of negative coefficients, in `0..=3`.
    pub m: u8,
}

/// Numerical zero for the degeneracy and `beta = 2` tests.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// A single validation failure with its numeric margin.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
    pub margin: f64,
}

fn ensure_beta(p: &CriticalPointProfile, constants: &StructuralConstants) -> Result<(), ProfileError> {
    if !kernels::beta_in_range(p.beta) {
        return Err(ProfileError::BetaOutOfRange(p.beta));
    }
    if (constants.beta - p.beta).abs() > DEGENERACY_EPS {
        return Err(ProfileError::ConstantsMismatch {
            have: constants.beta,
            want: p.beta,
        });
    }
    Ok(())
}

/// Checks every profile invariant; an empty list means the profile is valid.
pub fn validate_profile(
    p: &CriticalPointProfile,
    constants: &StructuralConstants,
) -> Result<Vec<Violation>, ProfileError> {
    ensure_beta(p, constants)?;
    let mut out = Vec::new();
    for (name, b) in [("b1", p.b1), ("b2", p.b2), ("b0", p.b0)] {
        if b == 0.0 {
            out.push(Violation {
                what: format!("{name} = 0 (coefficients must be nonzero)"),
                margin: 0.0,
            });
        }
        if !b.is_finite() {
            out.push(Violation {
                what: format!("{name} is not finite"),
                margin: f64::INFINITY,
            });
        }
    }
    let sigma_k = constants.sigma_kappa(p.b1, p.b2, p.b0);
    if sigma_k.abs() <= DEGENERACY_EPS {
        out.push(Violation {
            what: "b1 + b2 + kappa b0 vanishes".into(),
            margin: sigma_k.abs(),
        });
    }
    let sigma = constants.sigma(p.b1, p.b2, p.b0);
    if sigma.abs() <= DEGENERACY_EPS {
        out.push(Violation {
            what: "b1 + b2 + kappa' b0 vanishes".into(),
            margin: sigma.abs(),
        });
    }
    if !(p.k_value > 0.0) {
        out.push(Violation {
            what: format!("curvature value must be positive, got {}", p.k_value),
            margin: p.k_value,
        });
    }
    Ok(out)
}

/// Classifies a valid profile.
pub fn classify_point(
    p: &CriticalPointProfile,
    constants: &StructuralConstants,
) -> Result<Classification, ProfileError> {
    ensure_beta(p, constants)?;
    let sigma = constants.sigma(p.b1, p.b2, p.b0);
    if sigma.abs() <= DEGENERACY_EPS {
        return Err(ProfileError::Degenerate(sigma));
    }
    let is_two = (p.beta - 2.0).abs() <= DEGENERACY_EPS;
    let set = if sigma < 0.0 {
        if is_two {
            SetLabel::K1
        } else {
            SetLabel::K2
        }
    } else {
        SetLabel::Neither
    };
    Ok(Classification {
        set,
        sigma,
        m: p.m(),
    })
}

/// Which second-order trace the local evaluation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianConvention {
    /// Horizontal directions only (`2 (b_1 + b_2)` at the point for `beta = 2`).
    #[default]
    Horizontal,
    /// Adds the vertical second derivative where it exists; on the `t = 0`
    /// axis the vertical term of a `beta > 2` profile is singular and is
    /// omitted.
    WithVertical,
}

/// Local curvature data in the profile's normal chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalField {
    pub k: f64,
    /// Gradient components along `(x_1, x_2, t)`.
    pub grad: [f64; 3],
    pub lapl: f64,
}

fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e) * x.signum()
    }
}

/// Evaluates the normal form, its gradient and its Laplacian at chart point
/// `x`. Valid for `|x|` small (the chart radius is enforced by callers).
pub fn local_field_eval(
    p: &CriticalPointProfile,
    x: HeisenbergPoint,
    convention: LaplacianConvention,
) -> LocalField {
    let beta = p.beta;
    let (x1, x2, t) = (x.z.re, x.z.im, x.t);
    let k = p.k_value
        + p.b1 * x1.abs().powf(beta)
        + p.b2 * x2.abs().powf(beta)
        + p.b0 * t.abs().powf(beta / 2.0);
    let grad = [
        beta * p.b1 * signed_pow(x1, beta - 1.0),
        beta * p.b2 * signed_pow(x2, beta - 1.0),
        (beta / 2.0) * p.b0 * signed_pow(t, beta / 2.0 - 1.0),
    ];
    let horiz = if (beta - 2.0).abs() <= DEGENERACY_EPS {
        2.0 * (p.b1 + p.b2)
    } else {
        beta * (beta - 1.0) * (p.b1 * x1.abs().powf(beta - 2.0) + p.b2 * x2.abs().powf(beta - 2.0))
    };
    let lapl = match convention {
        LaplacianConvention::Horizontal => horiz,
        LaplacianConvention::WithVertical => {
            let half = beta / 2.0;
            let vert = if t == 0.0 || (half - 1.0).abs() <= DEGENERACY_EPS {
                // beta = 2: the vertical part |t| has zero second derivative
                // away from the axis and none on it.
                0.0
            } else {
                half * (half - 1.0) * p.b0 * t.abs().powf(half - 2.0)
            };
            horiz + vert
        }
    };
    LocalField { k, grad, lapl }
}
