//! Reduced pseudo-gradient dynamics of bubble ensembles.
//!
//! An ensemble is a finite list of bubbles, each carrying a weight `alpha`, a
//! chart position `a` relative to its assigned profile, and a concentration
//! scale `lambda`. The energy of the ensemble is the leading expansion
//!
//! ```text
//! J = S (sum alpha_i^2) / sqrt(sum alpha_i^4 K(a_i)) * [ 1
//!     - c/(2 S^2) sum_i (alpha_i^4 / sum alpha_k^4 K) (b_1+b_2+kappa' b_0)_i / lambda_i^2
//!     + (c_0^4 omega_3 / 4) / S^2 sum_{i != j} eps_ij (alpha_i alpha_j / sum alpha^2
//!         - 2 alpha_i^3 alpha_j K(a_i) / sum alpha^4 K) ]
//! ```
//!
//! with the interaction smallness `eps_ij = (l_i/l_j + l_j/l_i + l_i l_j d^2)^{-1}`
//! in the sphere gauge. The truncated remainders are dropped: the simulator is
//! a model of the leading dynamics and every assertion about it carries a
//! tolerance band.
//!
//! The velocity field moves `lambda` and `alpha` multiplicatively. Near a
//! profile (`lambda |a| <= mu`) the scale velocity uses the flatness form
//! `~ -(b_1+b_2+kappa' b_0)/lambda^gamma` with `gamma = 2` on degree-two
//! points and `gamma = beta` on slow-decay points, calibrated so that at
//! `gamma = 2` it is exactly the energy's own derivative; away from the
//! profile it uses the curvature form `~ -Delta K / (K lambda^2)`. The
//! position velocity near a profile comes from the flatness-gradient
//! integrals, away from it from the curvature gradient. Weights relax toward
//! the balanced state `alpha_i^2 K(a_i) = const`.

use thiserror::Error;

use crate::constants::{dk_integrals, ConstantsError, DerivativeAxis, StructuralConstants};
use crate::heisenberg::{dilate, GeometryError, HeisenbergPoint, SphereChart, SpherePoint};
use crate::profiles::{
    classify_point, local_field_eval, CriticalPointProfile, LaplacianConvention, ProfileError,
    SetLabel,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("ensemble leaves the expansion regime: {0}")]
    Regime(String),
    #[error("bubble scale {0} is below the admissible minimum {1}")]
    ScaleTooSmall(f64, f64),
    #[error("ensemble bubbles must be assigned pairwise distinct profiles")]
    DuplicateProfiles,
    #[error("profile {id} classifies as {found}; the normal form needs K1 or K2")]
    NotSlowDecay { id: String, found: SetLabel },
    #[error("unknown profile index {0}")]
    BadProfileIndex(usize),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Tunables of the reduced dynamics.
#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    /// Ensembles live above this scale (the inverse neighbourhood size).
    pub lambda_min: f64,
    /// Scale above which an end is declared blown up.
    pub blowup_threshold: f64,
    /// Chart validity radius for the positions.
    pub chart_radius: f64,
    /// Bound on pairwise scale ratios within a blow-up group.
    pub ratio_bound: f64,
    /// Flatness-regime radius: `lambda |a| <= mu` selects the flatness form.
    pub mu: f64,
    /// Free constant on the flat-regime interaction term.
    pub c4: f64,
    /// Free constant on the flat-regime scale term.
    pub c5: f64,
    /// Relaxation rate of the weight balance.
    pub alpha_relax: f64,
    /// `C'` in the regime bound `lambda |grad K| <= 2 C'`.
    pub regime_grad_bound: f64,
    /// `C` in the regime bound `sum eps <= C / lambda_min^2`.
    pub regime_eps_bound: f64,
    /// Quadrature tolerance for in-flow flatness-gradient integrals.
    pub dk_tolerance: f64,
    pub laplacian: LaplacianConvention,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            lambda_min: 10.0,
            blowup_threshold: 1e4,
            chart_radius: 0.5,
            ratio_bound: 100.0,
            mu: 0.1,
            c4: 1.0,
            c5: 1.0,
            alpha_relax: 1.0,
            regime_grad_bound: 50.0,
            regime_eps_bound: 1000.0,
            dk_tolerance: 1e-4,
            laplacian: LaplacianConvention::Horizontal,
        }
    }
}

/// One bubble of the ensemble.
#[derive(Debug, Clone, Copy)]
pub struct Bubble {
    pub alpha: f64,
    /// Chart position relative to the assigned profile.
    pub a: HeisenbergPoint,
    pub lambda: f64,
    /// Index into the profile slice.
    pub profile: usize,
}

/// A bubble ensemble at a flow time.
#[derive(Debug, Clone)]
pub struct BubbleEnsemble {
    pub bubbles: Vec<Bubble>,
    pub time: f64,
}

impl BubbleEnsemble {
    pub fn new(bubbles: Vec<Bubble>, config: &FlowConfig) -> Result<Self, FlowError> {
        for b in &bubbles {
            if b.lambda < config.lambda_min {
                return Err(FlowError::ScaleTooSmall(b.lambda, config.lambda_min));
            }
        }
        let mut seen: Vec<usize> = bubbles.iter().map(|b| b.profile).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != bubbles.len() {
            return Err(FlowError::DuplicateProfiles);
        }
        Ok(Self { bubbles, time: 0.0 })
    }

    /// Builds an ensemble with weights on the balanced state
    /// `alpha_i = K(a_i)^{-1/2}`.
    pub fn balanced(
        assignments: &[(usize, HeisenbergPoint, f64)],
        profiles: &[CriticalPointProfile],
        config: &FlowConfig,
    ) -> Result<Self, FlowError> {
        let mut bubbles = Vec::with_capacity(assignments.len());
        for &(profile, a, lambda) in assignments {
            let p = profiles
                .get(profile)
                .ok_or(FlowError::BadProfileIndex(profile))?;
            let k = local_field_eval(p, a, config.laplacian).k;
            bubbles.push(Bubble {
                alpha: k.powf(-0.5),
                a,
                lambda,
                profile,
            });
        }
        Self::new(bubbles, config)
    }
}

/// `eps_ij = (l_i/l_j + l_j/l_i + l_i l_j d^2)^{-1}`.
pub fn epsilon_ij(lambda_i: f64, lambda_j: f64, d: f64) -> f64 {
    1.0 / (lambda_i / lambda_j + lambda_j / lambda_i + lambda_i * lambda_j * d * d)
}

/// Analytic `d eps_ij / d lambda_j`.
pub fn d_epsilon_d_lambda_j(lambda_i: f64, lambda_j: f64, d: f64) -> f64 {
    let eps = epsilon_ij(lambda_i, lambda_j, d);
    let da = -lambda_i / (lambda_j * lambda_j) + 1.0 / lambda_i + lambda_i * d * d;
    -eps * eps * da
}

/// Per-evaluation cache of positions, local curvature data and interactions.
struct Workspace {
    k: Vec<f64>,
    grad: Vec<[f64; 3]>,
    lapl: Vec<f64>,
    sigma: Vec<f64>,
    gamma: Vec<f64>,
    /// Gauge distances between assigned sphere positions.
    dist: Vec<Vec<f64>>,
    eps: Vec<Vec<f64>>,
}

fn workspace(
    ens: &BubbleEnsemble,
    constants: &StructuralConstants,
    profiles: &[CriticalPointProfile],
    config: &FlowConfig,
) -> Result<Workspace, FlowError> {
    let p = ens.bubbles.len();
    let mut k = Vec::with_capacity(p);
    let mut grad = Vec::with_capacity(p);
    let mut lapl = Vec::with_capacity(p);
    let mut sigma = Vec::with_capacity(p);
    let mut gamma = Vec::with_capacity(p);
    let mut sphere: Vec<SpherePoint> = Vec::with_capacity(p);

    for b in &ens.bubbles {
        let profile = profiles
            .get(b.profile)
            .ok_or(FlowError::BadProfileIndex(b.profile))?;
        if (profile.beta - constants.beta).abs() > 1e-12 {
            return Err(ProfileError::ConstantsMismatch {
                have: constants.beta,
                want: profile.beta,
            }
            .into());
        }
        let field = local_field_eval(profile, b.a, config.laplacian);
        k.push(field.k);
        grad.push(field.grad);
        lapl.push(field.lapl);
        sigma.push(constants.sigma(profile.b1, profile.b2, profile.b0));
        gamma.push(if (profile.beta - 2.0).abs() <= 1e-12 {
            2.0
        } else {
            profile.beta
        });
        let chart = SphereChart::new(profile.position);
        sphere.push(chart.to_sphere(b.a)?);
    }

    let mut dist = vec![vec![0.0; p]; p];
    let mut eps = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in (i + 1)..p {
            let d = crate::heisenberg::cr_distance_sq(&sphere[i], &sphere[j]).sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
            let e = epsilon_ij(ens.bubbles[i].lambda, ens.bubbles[j].lambda, d);
            eps[i][j] = e;
            eps[j][i] = e;
        }
    }

    // Expansion-regime bounds.
    let lambda_min = ens
        .bubbles
        .iter()
        .map(|b| b.lambda)
        .fold(f64::INFINITY, f64::min);
    for (i, b) in ens.bubbles.iter().enumerate() {
        let gnorm = (grad[i][0].powi(2) + grad[i][1].powi(2) + grad[i][2].powi(2)).sqrt();
        if b.lambda * gnorm > 2.0 * config.regime_grad_bound {
            return Err(FlowError::Regime(format!(
                "lambda |grad K| = {:.3e} exceeds {:.3e} at bubble {i}",
                b.lambda * gnorm,
                2.0 * config.regime_grad_bound
            )));
        }
    }
    let eps_sum: f64 = (0..p)
        .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| eps[i][j])
        .sum();
    let eps_cap = config.regime_eps_bound / (lambda_min * lambda_min);
    if eps_sum > eps_cap {
        return Err(FlowError::Regime(format!(
            "sum eps = {eps_sum:.3e} exceeds {eps_cap:.3e}"
        )));
    }

    Ok(Workspace {
        k,
        grad,
        lapl,
        sigma,
        gamma,
        dist,
        eps,
    })
}

fn energy_from_workspace(
    ens: &BubbleEnsemble,
    constants: &StructuralConstants,
    ws: &Workspace,
) -> f64 {
    let p = ens.bubbles.len();
    let s = constants.s.value;
    let a2: f64 = ens.bubbles.iter().map(|b| b.alpha * b.alpha).sum();
    let a4k: f64 = ens
        .bubbles
        .iter()
        .zip(&ws.k)
        .map(|(b, k)| b.alpha.powi(4) * k)
        .sum();
    let prefactor = s * a2 / a4k.sqrt();
    let c_int = constants.c0_sq.value.powi(2) * constants.omega3.value / 4.0;

    let mut self_term = 0.0;
    for (i, b) in ens.bubbles.iter().enumerate() {
        let u = b.alpha.powi(4) / a4k;
        self_term += u * ws.sigma[i] / (b.lambda * b.lambda);
    }
    let mut inter_term = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let (ai, aj) = (ens.bubbles[i].alpha, ens.bubbles[j].alpha);
            let v = ai * aj / a2 - 2.0 * ai.powi(3) * aj * ws.k[i] / a4k;
            inter_term += ws.eps[i][j] * v;
        }
    }
    let bracket = 1.0 - constants.c.value / (2.0 * s * s) * self_term
        + c_int / (s * s) * inter_term;
    prefactor * bracket
}

/// Leading-order energy of the ensemble.
pub fn reduced_energy(
    ens: &BubbleEnsemble,
    constants: &StructuralConstants,
    profiles: &[CriticalPointProfile],
    config: &FlowConfig,
) -> Result<f64, FlowError> {
    let ws = workspace(ens, constants, profiles, config)?;
    Ok(energy_from_workspace(ens, constants, &ws))
}

/// Velocity of the ensemble: logarithmic rates for `alpha` and `lambda`,
/// linear rates for the chart positions.
#[derive(Debug, Clone)]
pub struct FieldEval {
    pub j: f64,
    pub d_log_alpha: Vec<f64>,
    pub d_a: Vec<HeisenbergPoint>,
    pub d_log_lambda: Vec<f64>,
}

/// Evaluates the pseudo-gradient field at the current state.
pub fn pseudo_gradient_field(
    ens: &BubbleEnsemble,
    constants: &StructuralConstants,
    profiles: &[CriticalPointProfile],
    config: &FlowConfig,
) -> Result<FieldEval, FlowError> {
    let p = ens.bubbles.len();
    let ws = workspace(ens, constants, profiles, config)?;
    let j = energy_from_workspace(ens, constants, &ws);

    let s = constants.s.value;
    let a2: f64 = ens.bubbles.iter().map(|b| b.alpha * b.alpha).sum();
    let a4k: f64 = ens
        .bubbles
        .iter()
        .zip(&ws.k)
        .map(|(b, k)| b.alpha.powi(4) * k)
        .sum();
    let prefactor = s * a2 / a4k.sqrt();
    let c_int = constants.c0_sq.value.powi(2) * constants.omega3.value / 4.0;
    let c0_4 = constants.c0_sq.value.powi(2);

    let mut d_log_lambda = vec![0.0; p];
    let mut d_a = vec![HeisenbergPoint::origin(); p];
    let mut d_log_alpha = vec![0.0; p];

    let balance_avg: f64 = ens
        .bubbles
        .iter()
        .zip(&ws.k)
        .map(|(b, k)| b.alpha * b.alpha * k)
        .sum::<f64>()
        / p as f64;

    for (jdx, b) in ens.bubbles.iter().enumerate() {
        let flat_regime = b.lambda * b.a.koranyi_norm() <= config.mu;
        let profile = &profiles[b.profile];

        // Interaction part of the scale velocity, through the analytic
        // eps-derivative weighted as in the energy.
        let mut interaction = 0.0;
        for i in 0..p {
            if i == jdx {
                continue;
            }
            let (ai, aj) = (ens.bubbles[i].alpha, b.alpha);
            let v_ij = ai * aj / a2 - 2.0 * ai.powi(3) * aj * ws.k[i] / a4k;
            let v_ji = aj * ai / a2 - 2.0 * aj.powi(3) * ai * ws.k[jdx] / a4k;
            let deps =
                d_epsilon_d_lambda_j(ens.bubbles[i].lambda, b.lambda, ws.dist[i][jdx]);
            interaction += (v_ij + v_ji) * b.lambda * deps;
        }
        let interaction_rate = -prefactor * c_int / (s * s) * interaction
            * if flat_regime { config.c4 } else { 1.0 };

        // Scale velocity from the curvature data.
        let curvature_rate = if flat_regime {
            let u = b.alpha.powi(4) / a4k;
            -config.c5 * prefactor * constants.c.value / (s * s) * u * ws.sigma[jdx]
                / b.lambda.powf(ws.gamma[jdx])
        } else {
            -2.0 * j * (constants.omega3.value / 24.0) * b.alpha * ws.lapl[jdx]
                / (ws.k[jdx] * b.lambda * b.lambda)
        };
        d_log_lambda[jdx] = interaction_rate + curvature_rate;

        // Position velocity.
        if flat_regime {
            let scaled_center = dilate(b.lambda, b.a)?;
            if scaled_center.koranyi_norm() > 1e-12 {
                // Flatness-gradient integrals at the shifted center. The
                // shift is small here (gauge norm <= mu), so a loose
                // tolerance is adequate for a velocity model.
                let beta = profile.beta;
                let g1 = dk_integrals(beta, scaled_center, DerivativeAxis::X1, config.dk_tolerance)?;
                let g2 = dk_integrals(beta, scaled_center, DerivativeAxis::X2, config.dk_tolerance)?;
                let gt = dk_integrals(beta, scaled_center, DerivativeAxis::T, config.dk_tolerance)?;
                let amp = 4.0 * j.powi(3) * b.alpha.powi(4) * c0_4;
                let lx = amp / b.lambda.powf(beta + 1.0);
                let lt = amp / b.lambda.powf(beta + 2.0);
                d_a[jdx] = HeisenbergPoint::from_coords(
                    lx * (profile.b1 * g1.principal + profile.b0 * g1.coupled),
                    lx * (profile.b2 * g2.principal + profile.b0 * g2.coupled),
                    lt * profile.b0 * gt.coupled,
                );
            }
        } else {
            let factor = 2.0 * j * (constants.omega3.value / 48.0) * b.alpha
                / (ws.k[jdx] * b.lambda * b.lambda);
            d_a[jdx] = HeisenbergPoint::from_coords(
                factor * ws.grad[jdx][0],
                factor * ws.grad[jdx][1],
                factor * ws.grad[jdx][2],
            );
        }

        // Weight relaxation toward the balanced state.
        d_log_alpha[jdx] =
            -config.alpha_relax * (b.alpha * b.alpha * ws.k[jdx] / balance_avg - 1.0);
    }

    Ok(FieldEval {
        j,
        d_log_alpha,
        d_a,
        d_log_lambda,
    })
}

/// Morse normal form of the energy around a single slow-decay or degree-two
/// profile: `S / sqrt(K) (1 + c (1 - mu) Gamma / lambda^gamma) + |V|^2` with
/// `Gamma = -(b_1 + b_2 + kappa' b_0) > 0` on `K1` and `K2`.
pub fn normal_form_energy(
    profile: &CriticalPointProfile,
    constants: &StructuralConstants,
    lambda_tilde: f64,
    v_norm_sq: f64,
    mu: f64,
) -> Result<f64, FlowError> {
    let cls = classify_point(profile, constants)?;
    if cls.set == SetLabel::Neither {
        return Err(FlowError::NotSlowDecay {
            id: profile.id.clone(),
            found: cls.set,
        });
    }
    let gamma = if cls.set == SetLabel::K1 {
        2.0
    } else {
        profile.beta
    };
    let big_gamma = -cls.sigma;
    let head = constants.s.value / profile.k_value.sqrt();
    Ok(head * (1.0 + constants.c.value * (1.0 - mu) * big_gamma / lambda_tilde.powf(gamma))
        + v_norm_sq)
}

/// Where a trajectory ends up.
#[derive(Debug, Clone, PartialEq)]
pub enum FateKind {
    /// The listed bubbles concentrated beyond the threshold with pairwise
    /// comparable scales.
    BlowUp(Vec<usize>),
    /// A scale fell below the admissible minimum or a position left its
    /// chart.
    Exit,
    /// Step underflow or horizon exhaustion.
    Stagnant,
}

/// One accepted step of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub time: f64,
    pub j: f64,
    /// Per bubble: `(alpha, a, lambda)`.
    pub bubbles: Vec<(f64, HeisenbergPoint, f64)>,
    /// Upper-triangle interactions `(i, j, eps_ij)`, `i < j`.
    pub eps: Vec<(usize, usize, f64)>,
}

/// Line format of the trajectory log (one record per accepted step).
pub fn trajectory_line(step: &TrajectoryStep) -> String {
    let mut out = format!("t={} J={}", step.time, step.j);
    for (i, (alpha, a, lambda)) in step.bubbles.iter().enumerate() {
        out.push_str(&format!(
            " b{i}.alpha={} b{i}.ax={} b{i}.ay={} b{i}.at={} b{i}.lambda={}",
            alpha, a.z.re, a.z.im, a.t, lambda
        ));
    }
    for (i, j, e) in &step.eps {
        out.push_str(&format!(" eps{i}_{j}={e}"));
    }
    out
}

/// Fate of a finished trajectory with its full history.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub fate: FateKind,
    pub steps_accepted: usize,
    pub trajectory: Vec<TrajectoryStep>,
}

/// Explicit integration controls.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub dt0: f64,
    pub dt_min: f64,
    pub horizon: f64,
    pub max_steps: usize,
    /// Per-step caps keeping the discrete trajectory resolved.
    pub max_dlog_lambda: f64,
    pub max_da: f64,
    pub max_dlog_alpha: f64,
    /// Acceptance slack on the descent check.
    pub j_slack: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt0: 0.05,
            dt_min: 1e-14,
            horizon: 1e30,
            max_steps: 200_000,
            max_dlog_lambda: 0.2,
            max_da: 0.05,
            max_dlog_alpha: 0.1,
            j_slack: 1e-12,
        }
    }
}

fn record(ens: &BubbleEnsemble, j: f64) -> TrajectoryStep {
    let mut eps = Vec::new();
    let p = ens.bubbles.len();
    // Distances through the charts, as in the energy.
    for i in 0..p {
        for jdx in (i + 1)..p {
            eps.push((i, jdx, f64::NAN));
        }
    }
    TrajectoryStep {
        time: ens.time,
        j,
        bubbles: ens
            .bubbles
            .iter()
            .map(|b| (b.alpha, b.a, b.lambda))
            .collect(),
        eps,
    }
}

fn fill_eps(
    step: &mut TrajectoryStep,
    ens: &BubbleEnsemble,
    profiles: &[CriticalPointProfile],
) -> Result<(), FlowError> {
    for (i, jdx, e) in step.eps.iter_mut() {
        let bi = &ens.bubbles[*i];
        let bj = &ens.bubbles[*jdx];
        let pi = SphereChart::new(profiles[bi.profile].position).to_sphere(bi.a)?;
        let pj = SphereChart::new(profiles[bj.profile].position).to_sphere(bj.a)?;
        let d = crate::heisenberg::cr_distance_sq(&pi, &pj).sqrt();
        *e = epsilon_ij(bi.lambda, bj.lambda, d);
    }
    Ok(())
}

fn advance(ens: &BubbleEnsemble, field: &FieldEval, dt: f64) -> BubbleEnsemble {
    let bubbles = ens
        .bubbles
        .iter()
        .enumerate()
        .map(|(i, b)| Bubble {
            alpha: b.alpha * (dt * field.d_log_alpha[i]).exp(),
            a: HeisenbergPoint::new(
                b.a.z + dt * field.d_a[i].z,
                b.a.t + dt * field.d_a[i].t,
            ),
            lambda: b.lambda * (dt * field.d_log_lambda[i]).exp(),
            profile: b.profile,
        })
        .collect();
    BubbleEnsemble {
        bubbles,
        time: ens.time + dt,
    }
}

fn check_fate(ens: &BubbleEnsemble, config: &FlowConfig) -> Option<FateKind> {
    for b in &ens.bubbles {
        if b.lambda < config.lambda_min {
            return Some(FateKind::Exit);
        }
        if b.a.koranyi_norm() > config.chart_radius {
            return Some(FateKind::Exit);
        }
    }
    let lambda_max = ens
        .bubbles
        .iter()
        .map(|b| b.lambda)
        .fold(0.0f64, f64::max);
    if lambda_max > config.blowup_threshold {
        let members: Vec<usize> = ens
            .bubbles
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                b.lambda > config.blowup_threshold && lambda_max / b.lambda <= config.ratio_bound
            })
            .map(|(i, _)| i)
            .collect();
        if !members.is_empty() {
            return Some(FateKind::BlowUp(members));
        }
    }
    None
}

/// Integrates the pseudo-gradient dynamics with step halving on any energy
/// increase; the recorded energy is non-increasing along every accepted step.
pub fn integrate_flow(
    ens: &BubbleEnsemble,
    constants: &StructuralConstants,
    profiles: &[CriticalPointProfile],
    config: &FlowConfig,
    control: &StepControl,
) -> Result<FlowOutcome, FlowError> {
    let mut state = ens.clone();
    let mut j = reduced_energy(&state, constants, profiles, config)?;
    let mut trajectory = Vec::new();
    let mut first = record(&state, j);
    fill_eps(&mut first, &state, profiles)?;
    trajectory.push(first);

    let mut dt = control.dt0;
    let mut accepted = 0usize;

    while accepted < control.max_steps && state.time < control.horizon {
        if let Some(kind) = check_fate(&state, config) {
            return Ok(FlowOutcome {
                fate: kind,
                steps_accepted: accepted,
                trajectory,
            });
        }
        let field = pseudo_gradient_field(&state, constants, profiles, config)?;

        // Resolution caps on the trial step.
        let mut dt_eff = dt;
        for i in 0..state.bubbles.len() {
            let dl = field.d_log_lambda[i].abs();
            if dl > 0.0 {
                dt_eff = dt_eff.min(control.max_dlog_lambda / dl);
            }
            let da = field.d_a[i].koranyi_norm();
            if da > 0.0 {
                dt_eff = dt_eff.min(control.max_da / da);
            }
            let dal = field.d_log_alpha[i].abs();
            if dal > 0.0 {
                dt_eff = dt_eff.min(control.max_dlog_alpha / dal);
            }
        }
        let trial = advance(&state, &field, dt_eff);
        let j_trial = reduced_energy(&trial, constants, profiles, config)?;
        if j_trial <= j + control.j_slack {
            state = trial;
            j = j_trial;
            accepted += 1;
            let mut step = record(&state, j);
            fill_eps(&mut step, &state, profiles)?;
            trajectory.push(step);
            dt = dt_eff * 1.3;
        } else {
            dt = dt_eff * 0.5;
            if dt < control.dt_min {
                return Ok(FlowOutcome {
                    fate: FateKind::Stagnant,
                    steps_accepted: accepted,
                    trajectory,
                });
            }
        }
    }
    Ok(FlowOutcome {
        fate: FateKind::Stagnant,
        steps_accepted: accepted,
        trajectory,
    })
}
