//! Interaction matrices of degree-two critical point tuples.
//!
//! For a tuple of distinct `K1` points, the matrix has diagonal entries
//! `-c (b_1 + b_2 + kappa' b_0) / (2 K^2)` and off-diagonal entries
//! `-c' G(xi_s, xi_t) / sqrt(K_s K_t)` with the Green kernel
//! `G = c_G / |1 - <zeta, conj(eta)>|`. Positive definiteness of every such
//! matrix is what keeps a tuple on the list of flow ends; the least
//! eigenvalue is the margin.
//!
//! The kernel normalization `c_G` is genuinely free (nothing in the problem
//! pins the Green function scale), so definiteness verdicts are always
//! reported together with `c_G` and the margin, and a sensitivity sweep is
//! available upstream.

use thiserror::Error;

use crate::constants::StructuralConstants;
use crate::heisenberg::{cr_distance_sq, SpherePoint};
use crate::profiles::{classify_point, CriticalPointProfile, ProfileError, SetLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractionError {
    #[error("green kernel normalization must be positive, got {0}")]
    BadNormalization(f64),
    #[error("coincident points (gauge distance^2 = {0:.3e})")]
    Singularity(f64),
    #[error("profile {id} is not in K1 (classified {found})")]
    NotK1 { id: String, found: SetLabel },
    #[error("profiles {a} and {b} share a position")]
    DuplicatePositions { a: String, b: String },
    #[error("least eigenvalue {rho:.3e} is inside the margin band {margin:.3e}")]
    Marginal { rho: f64, margin: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Green kernel configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenKernelConfig {
    pub c_g: f64,
}

impl Default for GreenKernelConfig {
    fn default() -> Self {
        Self { c_g: 1.0 }
    }
}

impl GreenKernelConfig {
    pub fn new(c_g: f64) -> Result<Self, InteractionError> {
        if !(c_g > 0.0) {
            return Err(InteractionError::BadNormalization(c_g));
        }
        Ok(Self { c_g })
    }
}

/// Distance-squared threshold below which points count as coincident.
pub const COINCIDENCE_EPS: f64 = 1e-12;

/// `G(zeta, eta) = c_G / |1 - <zeta, conj(eta)>|`: symmetric, positive, with
/// the inverse-square blow-up of the gauge distance at coincidence.
pub fn green_kernel(
    zeta: &SpherePoint,
    eta: &SpherePoint,
    config: &GreenKernelConfig,
) -> Result<f64, InteractionError> {
    let d2 = cr_distance_sq(zeta, eta);
    if d2 < COINCIDENCE_EPS {
        return Err(InteractionError::Singularity(d2));
    }
    Ok(config.c_g / d2)
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest asymmetry |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on the given (sorted, distinct) rows.
    pub fn principal_submatrix(&self, rows: &[usize]) -> SymMatrix {
        let mut out = SymMatrix::zeros(rows.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }
}

/// All eigenvalues (ascending) by cyclic Jacobi rotations, iterated until the
/// off-diagonal Frobenius norm falls below `1e-13 * max(1, ||A||_F)`.
pub fn jacobi_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.n();
    if n == 0 {
        return Vec::new();
    }
    let mut a = m.clone();
    let fro: f64 = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-13 * fro.max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Stable rotation choice (smaller root).
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn least_eigenvalue(m: &SymMatrix) -> f64 {
    jacobi_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Cholesky-style pivot test: true when every pivot stays strictly positive.
pub fn cholesky_pivots_positive(m: &SymMatrix) -> bool {
    let n = m.n();
    let mut a = m.clone();
    for k in 0..n {
        let pivot = a.get(k, k);
        if !(pivot > 0.0) {
            return false;
        }
        for i in (k + 1)..n {
            let f = a.get(i, k) / pivot;
            for j in (k + 1)..n {
                let v = a.get(i, j) - f * a.get(k, j);
                a.set(i, j, v);
            }
        }
    }
    true
}

/// Definiteness margin below which verdicts are refused.
pub const DEFAULT_PD_MARGIN: f64 = 1e-12;

/// True when the least eigenvalue clears `margin`; a least eigenvalue inside
/// the band `|rho| <= margin` is a marginal case and is surfaced as an error
/// rather than rounded either way.
pub fn is_positive_definite(m: &SymMatrix, margin: f64) -> Result<bool, InteractionError> {
    let rho = least_eigenvalue(m);
    if rho.abs() <= margin {
        return Err(InteractionError::Marginal { rho, margin });
    }
    let verdict = rho > margin;
    debug_assert_eq!(
        verdict,
        cholesky_pivots_positive(m),
        "eigenvalue and pivot tests disagree outside the marginal band (rho = {rho})"
    );
    Ok(verdict)
}

/// Closed-form eigenvalues (ascending) for symmetric matrices of size <= 3,
/// via the characteristic polynomial. Independent of the Jacobi path; used as
/// its oracle.
pub fn eigenvalues_closed_form(m: &SymMatrix) -> Vec<f64> {
    match m.n() {
        0 => Vec::new(),
        1 => vec![m.get(0, 0)],
        2 => {
            let (a, b, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
            let tr = a + d;
            let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
            let mut v = vec![(tr - disc) / 2.0, (tr + disc) / 2.0];
            v.sort_by(f64::total_cmp);
            v
        }
        3 => {
            let (a, b, c) = (m.get(0, 0), m.get(0, 1), m.get(0, 2));
            let (d, e, f) = (m.get(1, 1), m.get(1, 2), m.get(2, 2));
            let p1 = b * b + c * c + e * e;
            if p1 == 0.0 {
                let mut v = vec![a, d, f];
                v.sort_by(f64::total_cmp);
                return v;
            }
            let q = (a + d + f) / 3.0;
            let p2 = (a - q).powi(2) + (d - q).powi(2) + (f - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            // B = (A - qI)/p; r = det(B)/2 clamped into [-1, 1].
            let (ba, bd, bf) = ((a - q) / p, (d - q) / p, (f - q) / p);
            let (bb, bc, be) = (b / p, c / p, e / p);
            let det_b = ba * (bd * bf - be * be) - bb * (bb * bf - be * bc)
                + bc * (bb * be - bd * bc);
            let r = (det_b / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            let mut v = vec![e1, e2, e3];
            v.sort_by(f64::total_cmp);
            v
        }
        n => panic!("closed form limited to n <= 3, got {n}"),
    }
}

/// Assembled tuple matrix with its labels and least eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub labels: Vec<String>,
    pub matrix: SymMatrix,
    /// Least eigenvalue.
    pub rho: f64,
}

/// Builds the matrix of a tuple of `K1` profiles.
pub fn assemble_matrix(
    subset: &[&CriticalPointProfile],
    constants: &StructuralConstants,
    config: &GreenKernelConfig,
) -> Result<InteractionMatrix, InteractionError> {
    let p = subset.len();
    let mut sigmas = Vec::with_capacity(p);
    for profile in subset {
        let cls = classify_point(profile, constants)?;
        if cls.set != SetLabel::K1 {
            return Err(InteractionError::NotK1 {
                id: profile.id.clone(),
                found: cls.set,
            });
        }
        sigmas.push(cls.sigma);
    }
    for i in 0..p {
        for j in (i + 1)..p {
            if cr_distance_sq(&subset[i].position, &subset[j].position) < COINCIDENCE_EPS {
                return Err(InteractionError::DuplicatePositions {
                    a: subset[i].id.clone(),
                    b: subset[j].id.clone(),
                });
            }
        }
    }

    let mut m = SymMatrix::zeros(p);
    for i in 0..p {
        m.set(
            i,
            i,
            -constants.c.value * sigmas[i] / (2.0 * subset[i].k_value * subset[i].k_value),
        );
        for j in (i + 1)..p {
            let g = green_kernel(&subset[i].position, &subset[j].position, config)?;
            let v = -constants.c_prime.value * g
                / (subset[i].k_value * subset[j].k_value).sqrt();
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let rho = least_eigenvalue(&m);
    Ok(InteractionMatrix {
        labels: subset.iter().map(|s| s.id.clone()).collect(),
        matrix: m,
        rho,
    })
}
