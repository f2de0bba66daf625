//! The census pipeline: constants (through the cache), validation and
//! classification, tuple enumeration, counting, certificate assembly, and
//! the kernel-normalization sensitivity sweep.

use std::collections::BTreeMap;

use thiserror::Error;

use cr_census::constants::{ConstantsError, StructuralConstants};
use cr_census::counting::{
    build_census_report, enumerate_k1_plus, CensusInput, CountingError, EnumerationConfig,
};
use cr_census::flow::{
    integrate_flow, BubbleEnsemble, FlowConfig, FlowError, FlowOutcome, StepControl,
};
use cr_census::interaction::GreenKernelConfig;
use cr_census::profiles::{
    classify_point, validate_profile, CriticalPointProfile, ProfileError, SetLabel,
};
use cr_census::quad::QuadratureError;

use crate::cache::ConstantsCache;
use crate::certificate::{
    Certificate, ConstantsBlock, EndRow, GateRow, PointRow, SweepRow, TupleRow,
};
use crate::config::{CensusConfig, ConfigError};
use crate::exit_codes;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("profile validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario `{0}` mixes flatness orders; an ensemble needs a single beta")]
    MixedOrders(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Validation(_) => exit_codes::CONFIG_INVALID,
            PipelineError::Constants(ConstantsError::Quadrature(
                QuadratureError::NonConvergence(_),
            )) => exit_codes::QUADRATURE_FAILED,
            PipelineError::Counting(CountingError::DegenerateInteraction { .. }) => {
                exit_codes::MARGINAL_MATRIX
            }
            _ => exit_codes::GENERAL,
        }
    }
}

fn beta_key(beta: f64) -> String {
    format!("{beta}")
}

/// Distinct flatness orders present in the config, ascending.
fn distinct_betas(points: &[CriticalPointProfile]) -> Vec<f64> {
    let mut betas: Vec<f64> = points.iter().map(|p| p.beta).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    betas
}

/// Constants at every needed flatness order, through the cache.
pub fn constants_for(
    config: &CensusConfig,
    cache: &mut ConstantsCache,
) -> Result<BTreeMap<String, StructuralConstants>, PipelineError> {
    let mut out = BTreeMap::new();
    for beta in distinct_betas(&config.points) {
        let k = cache.structural_constants(beta, config.quadrature.tolerance)?;
        out.insert(beta_key(beta), k);
    }
    Ok(out)
}

struct Classified {
    points: Vec<PointRow>,
    k1: Vec<CriticalPointProfile>,
    k2: Vec<(String, u8)>,
}

fn classify_all(
    config: &CensusConfig,
    constants: &BTreeMap<String, StructuralConstants>,
) -> Result<Classified, PipelineError> {
    // Validation pass first: every violation, not just the first.
    let mut violations = Vec::new();
    for p in &config.points {
        let k = &constants[&beta_key(p.beta)];
        match validate_profile(p, k) {
            Ok(list) => {
                for v in list {
                    violations.push(format!("point `{}`: {}", p.id, v.what));
                }
            }
            Err(e) => violations.push(format!("point `{}`: {e}", p.id)),
        }
    }
    if !violations.is_empty() {
        return Err(PipelineError::Validation(violations));
    }

    let mut points = Vec::new();
    let mut k1 = Vec::new();
    let mut k2 = Vec::new();
    for p in &config.points {
        let k = &constants[&beta_key(p.beta)];
        let cls = classify_point(p, k)?;
        points.push(PointRow {
            id: p.id.clone(),
            beta: p.beta,
            set: cls.set.to_string(),
            sigma: cls.sigma,
            m: cls.m,
        });
        match cls.set {
            SetLabel::K1 => k1.push(p.clone()),
            SetLabel::K2 => k2.push((p.id.clone(), cls.m)),
            SetLabel::Neither => {}
        }
    }
    Ok(Classified { points, k1, k2 })
}

struct CountingOutcome {
    k1plus: Vec<TupleRow>,
    ends: Vec<EndRow>,
    l_plus: usize,
    l0: u32,
    gates: Vec<GateRow>,
    full_k: u32,
    full_exists: bool,
    full_bound: u64,
}

fn run_counting(
    classified: &Classified,
    constants: &BTreeMap<String, StructuralConstants>,
    green: GreenKernelConfig,
    pd_margin: f64,
) -> Result<CountingOutcome, PipelineError> {
    let k1plus_idx = if classified.k1.is_empty() {
        Vec::new()
    } else {
        let k2const = &constants[&beta_key(2.0)];
        enumerate_k1_plus(
            &classified.k1,
            k2const,
            &EnumerationConfig { green, pd_margin },
        )?
    };
    let input = CensusInput {
        k1: classified.k1.iter().map(|p| (p.id.clone(), p.m())).collect(),
        k2: classified.k2.clone(),
        k1plus: k1plus_idx.clone(),
    };
    let report = build_census_report(&input)?;
    Ok(CountingOutcome {
        k1plus: report
            .k1plus
            .iter()
            .map(|(members, rho)| TupleRow {
                members: members.clone(),
                rho: *rho,
            })
            .collect(),
        ends: report
            .ends
            .iter()
            .map(|e| EndRow {
                kind: match e.kind {
                    cr_census::counting::EndKind::Single => "single".to_string(),
                    cr_census::counting::EndKind::Tuple => "tuple".to_string(),
                },
                members: e.members.clone(),
                index: e.index,
            })
            .collect(),
        l_plus: report.l_plus,
        l0: report.l0,
        gates: (1..=(report.l0 + 1))
            .map(|k| {
                let g = report.gates[&k];
                GateRow {
                    k,
                    sum: g.sum,
                    cond1: g.cond1,
                    cond2: g.cond2,
                    verdict: g.verdict,
                    bound: report.bounds[&k],
                    bound_as_printed: report.bounds_as_printed[&k],
                }
            })
            .collect(),
        full_k: report.full.k,
        full_exists: report.full.exists,
        full_bound: report.full.total_bound,
    })
}

fn family_string(k1plus: &[TupleRow]) -> String {
    if k1plus.is_empty() {
        return "-".to_string();
    }
    k1plus
        .iter()
        .map(|t| t.members.join("+"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Full pipeline: constants, classification, enumeration, counting,
/// certificate. Deterministic given the config and cache state.
pub fn run_census(
    config: &CensusConfig,
    cache: &mut ConstantsCache,
) -> Result<Certificate, PipelineError> {
    run_census_with_sweep(config, cache, None)
}

/// [`run_census`] plus a kernel-normalization sweep over the given grid.
pub fn run_census_with_sweep(
    config: &CensusConfig,
    cache: &mut ConstantsCache,
    grid: Option<&[f64]>,
) -> Result<Certificate, PipelineError> {
    let constants = constants_for(config, cache)?;
    let classified = classify_all(config, &constants)?;
    let counting = run_counting(
        &classified,
        &constants,
        config.green,
        config.thresholds.pd_margin,
    )?;

    let mut sweep = Vec::new();
    {
        let base_family = family_string(&counting.k1plus);
        let mut last: Option<(String, bool, u64)> = None;
        let grid_values: Vec<f64> = match grid {
            Some(g) => g.to_vec(),
            None => vec![config.green.c_g],
        };
        for c_g in grid_values {
            let outcome = if (c_g - config.green.c_g).abs() == 0.0 {
                (base_family.clone(), counting.full_exists, counting.full_bound)
            } else {
                let alt = run_counting(
                    &classified,
                    &constants,
                    GreenKernelConfig { c_g },
                    config.thresholds.pd_margin,
                )?;
                (
                    family_string(&alt.k1plus),
                    alt.full_exists,
                    alt.full_bound,
                )
            };
            let changed = match &last {
                Some(prev) => *prev != outcome,
                None => false,
            };
            sweep.push(SweepRow {
                c_g,
                family: outcome.0.clone(),
                exists: outcome.1,
                bound: outcome.2,
                changed,
            });
            last = Some(outcome);
        }
    }

    let constants_blocks: BTreeMap<String, ConstantsBlock> = constants
        .iter()
        .map(|(key, k)| {
            (
                key.clone(),
                ConstantsBlock {
                    beta: k.beta,
                    kappa: k.kappa,
                    kappa_prime: k.kappa_prime,
                    c: k.c,
                    c2: k.c2,
                    s: k.s,
                    omega3: k.omega3,
                    c_prime: k.c_prime,
                    c0_sq: k.c0_sq,
                },
            )
        })
        .collect();

    Ok(Certificate {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.config_hash,
        green_c_g: config.green.c_g,
        quadrature_tolerance: config.quadrature.tolerance,
        constants: constants_blocks,
        points: classified.points,
        k1plus: counting.k1plus,
        ends: counting.ends,
        l_plus: counting.l_plus,
        l0: counting.l0,
        gates: counting.gates,
        full_k: counting.full_k,
        full_exists: counting.full_exists,
        full_bound: counting.full_bound,
        sweep,
    })
}

/// Sensitivity table alone (reusing cached constants).
pub fn sensitivity_sweep(
    config: &CensusConfig,
    cache: &mut ConstantsCache,
    grid: &[f64],
) -> Result<Vec<SweepRow>, PipelineError> {
    Ok(run_census_with_sweep(config, cache, Some(grid))?.sweep)
}

/// Runs a named flow scenario from the config.
pub fn run_flow_scenario(
    config: &CensusConfig,
    cache: &mut ConstantsCache,
    name: &str,
) -> Result<FlowOutcome, PipelineError> {
    let scenario = config
        .scenarios
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| PipelineError::UnknownScenario(name.to_string()))?;
    let mut assignments = Vec::new();
    let mut betas = Vec::new();
    for (id, lambda, a) in &scenario.bubbles {
        let idx = config
            .points
            .iter()
            .position(|p| p.id == *id)
            .expect("validated at load");
        betas.push(config.points[idx].beta);
        assignments.push((idx, *a, *lambda));
    }
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    if betas.len() != 1 {
        return Err(PipelineError::MixedOrders(name.to_string()));
    }
    let constants = cache.structural_constants(betas[0], config.quadrature.tolerance)?;
    let flow_config = FlowConfig {
        lambda_min: config.thresholds.lambda_min,
        blowup_threshold: config.thresholds.blowup_threshold,
        chart_radius: config.thresholds.chart_radius,
        ratio_bound: config.thresholds.ratio_bound,
        mu: config.thresholds.mu,
        ..FlowConfig::default()
    };
    let ensemble = BubbleEnsemble::balanced(&assignments, &config.points, &flow_config)?;
    let control = StepControl {
        horizon: scenario.horizon,
        ..StepControl::default()
    };
    Ok(integrate_flow(
        &ensemble,
        &constants,
        &config.points,
        &flow_config,
        &control,
    )?)
}
