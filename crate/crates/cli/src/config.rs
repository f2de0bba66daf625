//! Plain-text configuration: a line-based key-value tree with bracketed
//! sections.
//!
//! ```text
//! [quadrature]
//! tolerance = 1e-8
//! mc_samples = 1000000
//! seed = 42
//!
//! [green]
//! c_g = 1.0
//!
//! [thresholds]
//! pd_margin = 1e-12
//! blowup_threshold = 1e4
//! chart_radius = 0.5
//! lambda_min = 10
//!
//! [point]
//! id = a
//! position = chart 1.0 0.0 0.0        # or: sphere re1 im1 re2 im2
//! beta = 2.0
//! b = -4.0 -4.0 -2.0                  # b1 b2 b0
//! k = 0.25
//!
//! [scenario]
//! name = single-a
//! bubble = a 12.0                     # id lambda0 [ax ay at]
//! ```
//!
//! `#` starts a comment. `[point]` and `[scenario]` repeat. Positions are
//! accepted in sphere coordinates or in the chart at the north pole and
//! converted through the Cayley correspondence. Validation collects every
//! violation, not just the first.

use num_complex::Complex64;
use thiserror::Error;

use cr_census::heisenberg::{cayley_inverse, HeisenbergPoint, SpherePoint};
use cr_census::interaction::GreenKernelConfig;
use cr_census::kernels;
use cr_census::profiles::CriticalPointProfile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub tolerance: f64,
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            mc_samples: 1_000_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub pd_margin: f64,
    pub blowup_threshold: f64,
    pub chart_radius: f64,
    pub lambda_min: f64,
    pub ratio_bound: f64,
    pub mu: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            pd_margin: 1e-12,
            blowup_threshold: 1e4,
            chart_radius: 0.5,
            lambda_min: 10.0,
            ratio_bound: 100.0,
            mu: 0.1,
        }
    }
}

/// One flow scenario: bubbles as (profile id, initial scale, chart offset).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub bubbles: Vec<(String, f64, HeisenbergPoint)>,
    pub horizon: f64,
}

#[derive(Debug, Clone)]
pub struct CensusConfig {
    pub quadrature: QuadratureSettings,
    pub green: GreenKernelConfig,
    pub thresholds: Thresholds,
    pub points: Vec<CriticalPointProfile>,
    pub scenarios: Vec<ScenarioSpec>,
    /// FNV-1a fingerprint of the raw config bytes.
    pub config_hash: u64,
}

/// FNV-1a over raw bytes; the certificate's config fingerprint.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn load_config(path: &str) -> Result<CensusConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_string(),
        source,
    })?;
    parse_config(&text)
}

struct RawPoint {
    line: usize,
    id: Option<String>,
    position: Option<SpherePoint>,
    beta: Option<f64>,
    b: Option<(f64, f64, f64)>,
    k: Option<f64>,
}

struct RawScenario {
    line: usize,
    name: Option<String>,
    bubbles: Vec<(String, f64, HeisenbergPoint)>,
    horizon: f64,
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64, ConfigError> {
    s.trim().parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("{what}: `{s}` is not a number"),
    })
}

fn parse_u64(s: &str, line: usize, what: &str) -> Result<u64, ConfigError> {
    s.trim().parse::<u64>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("{what}: `{s}` is not a nonnegative integer"),
    })
}

fn parse_numbers(s: &str, n: usize, line: usize, what: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != n {
        return Err(ConfigError::Parse {
            line,
            message: format!("{what}: expected {n} numbers, got {}", parts.len()),
        });
    }
    parts
        .iter()
        .map(|p| parse_f64(p, line, what))
        .collect()
}

pub fn parse_config(text: &str) -> Result<CensusConfig, ConfigError> {
    let mut quadrature = QuadratureSettings::default();
    let mut green = GreenKernelConfig::default();
    let mut thresholds = Thresholds::default();
    let mut raw_points: Vec<RawPoint> = Vec::new();
    let mut raw_scenarios: Vec<RawScenario> = Vec::new();

    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Quadrature,
        Green,
        Thresholds,
        Point,
        Scenario,
    }
    let mut section = Section::None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                line,
                message: "unterminated section header".into(),
            })?;
            section = match name.trim() {
                "quadrature" => Section::Quadrature,
                "green" => Section::Green,
                "thresholds" => Section::Thresholds,
                "point" => {
                    raw_points.push(RawPoint {
                        line,
                        id: None,
                        position: None,
                        beta: None,
                        b: None,
                        k: None,
                    });
                    Section::Point
                }
                "scenario" => {
                    raw_scenarios.push(RawScenario {
                        line,
                        name: None,
                        bubbles: Vec::new(),
                        horizon: 1e30,
                    });
                    Section::Scenario
                }
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown section `{other}`"),
                    })
                }
            };
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(ConfigError::Parse {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match section {
            Section::None => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`{key}` outside of any section"),
                })
            }
            Section::Quadrature => match key {
                "tolerance" => quadrature.tolerance = parse_f64(value, line, "tolerance")?,
                "mc_samples" => quadrature.mc_samples = parse_u64(value, line, "mc_samples")?,
                "seed" => quadrature.seed = parse_u64(value, line, "seed")?,
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown quadrature key `{key}`"),
                    })
                }
            },
            Section::Green => match key {
                "c_g" => {
                    green = GreenKernelConfig {
                        c_g: parse_f64(value, line, "c_g")?,
                    }
                }
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown green key `{key}`"),
                    })
                }
            },
            Section::Thresholds => match key {
                "pd_margin" => thresholds.pd_margin = parse_f64(value, line, "pd_margin")?,
                "blowup_threshold" => {
                    thresholds.blowup_threshold = parse_f64(value, line, "blowup_threshold")?
                }
                "chart_radius" => thresholds.chart_radius = parse_f64(value, line, "chart_radius")?,
                "lambda_min" => thresholds.lambda_min = parse_f64(value, line, "lambda_min")?,
                "ratio_bound" => thresholds.ratio_bound = parse_f64(value, line, "ratio_bound")?,
                "mu" => thresholds.mu = parse_f64(value, line, "mu")?,
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown thresholds key `{key}`"),
                    })
                }
            },
            Section::Point => {
                let point = raw_points.last_mut().expect("inside a point section");
                match key {
                    "id" => point.id = Some(value.to_string()),
                    "position" => {
                        let (tag, rest) =
                            value.split_once(char::is_whitespace).ok_or(ConfigError::Parse {
                                line,
                                message: "position needs a `sphere` or `chart` tag".into(),
                            })?;
                        let position = match tag {
                            "sphere" => {
                                let v = parse_numbers(rest, 4, line, "sphere position")?;
                                SpherePoint::new(
                                    Complex64::new(v[0], v[1]),
                                    Complex64::new(v[2], v[3]),
                                )
                                .map_err(|e| ConfigError::Parse {
                                    line,
                                    message: format!("bad sphere position: {e}"),
                                })?
                            }
                            "chart" => {
                                let v = parse_numbers(rest, 3, line, "chart position")?;
                                cayley_inverse(&HeisenbergPoint::from_coords(v[0], v[1], v[2]))
                                    .map_err(|e| ConfigError::Parse {
                                        line,
                                        message: format!("bad chart position: {e}"),
                                    })?
                            }
                            other => {
                                return Err(ConfigError::Parse {
                                    line,
                                    message: format!("unknown position tag `{other}`"),
                                })
                            }
                        };
                        point.position = Some(position);
                    }
                    "beta" => point.beta = Some(parse_f64(value, line, "beta")?),
                    "b" => {
                        let v = parse_numbers(value, 3, line, "b coefficients")?;
                        point.b = Some((v[0], v[1], v[2]));
                    }
                    "k" => point.k = Some(parse_f64(value, line, "k")?),
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("unknown point key `{key}`"),
                        })
                    }
                }
            }
            Section::Scenario => {
                let scenario = raw_scenarios.last_mut().expect("inside a scenario section");
                match key {
                    "name" => scenario.name = Some(value.to_string()),
                    "horizon" => scenario.horizon = parse_f64(value, line, "horizon")?,
                    "bubble" => {
                        let parts: Vec<&str> = value.split_whitespace().collect();
                        if parts.len() != 2 && parts.len() != 5 {
                            return Err(ConfigError::Parse {
                                line,
                                message: "bubble needs `id lambda0` or `id lambda0 ax ay at`"
                                    .into(),
                            });
                        }
                        let lambda = parse_f64(parts[1], line, "bubble lambda")?;
                        let a = if parts.len() == 5 {
                            HeisenbergPoint::from_coords(
                                parse_f64(parts[2], line, "bubble ax")?,
                                parse_f64(parts[3], line, "bubble ay")?,
                                parse_f64(parts[4], line, "bubble at")?,
                            )
                        } else {
                            HeisenbergPoint::origin()
                        };
                        scenario.bubbles.push((parts[0].to_string(), lambda, a));
                    }
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("unknown scenario key `{key}`"),
                        })
                    }
                }
            }
        }
    }

    // Validation: collect every violation.
    let mut violations: Vec<String> = Vec::new();
    if !(quadrature.tolerance > 0.0) {
        violations.push(format!(
            "quadrature tolerance must be positive, got {}",
            quadrature.tolerance
        ));
    }
    if !(green.c_g > 0.0) {
        violations.push(format!("green c_g must be positive, got {}", green.c_g));
    }
    for (name, v) in [
        ("pd_margin", thresholds.pd_margin),
        ("blowup_threshold", thresholds.blowup_threshold),
        ("chart_radius", thresholds.chart_radius),
        ("lambda_min", thresholds.lambda_min),
        ("ratio_bound", thresholds.ratio_bound),
        ("mu", thresholds.mu),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            violations.push(format!("threshold {name} must be positive and finite, got {v}"));
        }
    }

    let mut points: Vec<CriticalPointProfile> = Vec::new();
    for raw in &raw_points {
        let id = match &raw.id {
            Some(id) => id.clone(),
            None => {
                violations.push(format!("point at line {} has no id", raw.line));
                continue;
            }
        };
        let mut missing = Vec::new();
        if raw.position.is_none() {
            missing.push("position");
        }
        if raw.beta.is_none() {
            missing.push("beta");
        }
        if raw.b.is_none() {
            missing.push("b");
        }
        if raw.k.is_none() {
            missing.push("k");
        }
        if !missing.is_empty() {
            violations.push(format!("point `{id}`: missing {}", missing.join(", ")));
            continue;
        }
        let beta = raw.beta.unwrap();
        let (b1, b2, b0) = raw.b.unwrap();
        let k = raw.k.unwrap();
        for (what, value) in [("beta", beta), ("b1", b1), ("b2", b2), ("b0", b0), ("k", k)] {
            if !value.is_finite() {
                violations.push(format!("point `{id}`: {what} is not finite"));
            }
        }
        if !kernels::beta_in_range(beta) {
            violations.push(format!(
                "point `{id}`: beta = {beta} outside the admissible range [2, 4)"
            ));
        }
        if points.iter().any(|p| p.id == id) {
            violations.push(format!("duplicate point id `{id}`"));
        }
        points.push(CriticalPointProfile::new(
            id,
            raw.position.unwrap(),
            beta,
            b1,
            b2,
            b0,
            k,
        ));
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if cr_census::heisenberg::cr_distance_sq(&points[i].position, &points[j].position)
                < 1e-12
            {
                violations.push(format!(
                    "points `{}` and `{}` share a position",
                    points[i].id, points[j].id
                ));
            }
        }
    }

    let mut scenarios = Vec::new();
    for raw in raw_scenarios {
        let name = match raw.name {
            Some(n) => n,
            None => {
                violations.push(format!("scenario at line {} has no name", raw.line));
                continue;
            }
        };
        if raw.bubbles.is_empty() {
            violations.push(format!("scenario `{name}` has no bubbles"));
        }
        for (id, lambda, _) in &raw.bubbles {
            if !points.iter().any(|p| p.id == *id) {
                violations.push(format!("scenario `{name}`: unknown profile `{id}`"));
            }
            if *lambda < thresholds.lambda_min {
                violations.push(format!(
                    "scenario `{name}`: bubble scale {lambda} below lambda_min {}",
                    thresholds.lambda_min
                ));
            }
        }
        if scenarios.iter().any(|s: &ScenarioSpec| s.name == name) {
            violations.push(format!("duplicate scenario name `{name}`"));
        }
        scenarios.push(ScenarioSpec {
            name,
            bubbles: raw.bubbles,
            horizon: raw.horizon,
        });
    }

    if !violations.is_empty() {
        return Err(ConfigError::Validation(violations));
    }

    Ok(CensusConfig {
        quadrature,
        green,
        thresholds,
        points,
        scenarios,
        config_hash: fnv1a(text.as_bytes()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[point]
id = a
position = chart 0.0 0.0 0.0
beta = 2.0
b = -1.0 -1.0 -1.0
k = 1.0
";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.quadrature.tolerance, 1e-8);
        assert_eq!(cfg.quadrature.mc_samples, 1_000_000);
        assert_eq!(cfg.green.c_g, 1.0);
        assert_eq!(cfg.points.len(), 1);
        assert_eq!(cfg.points[0].id, "a");
    }

    #[test]
    fn duplicate_id_and_bad_beta_both_reported() {
        let text = format!(
            "{MINIMAL}\n[point]\nid = a\nposition = chart 1.0 0.0 0.0\nbeta = 4.2\nb = 1 1 1\nk = 1\n"
        );
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Validation(v) => {
                assert!(v.iter().any(|m| m.contains("duplicate point id `a`")), "{v:?}");
                assert!(
                    v.iter().any(|m| m.contains("beta = 4.2") && m.contains("[2, 4)")),
                    "{v:?}"
                );
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = parse_config("[point]\nid a\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn sphere_and_chart_positions_agree() {
        let text = "\
[point]
id = s
position = sphere 0.0 0.0 1.0 0.0
beta = 2.0
b = -1 -1 -1
k = 1

[point]
id = c
position = chart 0.0 0.0 0.0
beta = 2.0
b = -1 -1 -1
k = 1
";
        // Both specify the north pole, so they collide.
        let err = parse_config(text).unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
    }

    #[test]
    fn hash_changes_with_any_input() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(&MINIMAL.replace("k = 1.0", "k = 1.5")).unwrap();
        assert_ne!(a.config_hash, b.config_hash);
    }

    #[test]
    fn scenario_parsing() {
        let text = format!(
            "{MINIMAL}\n[scenario]\nname = single\nbubble = a 12.0\nbubble = a 15.0 0.1 0.0 0.0\nhorizon = 1e20\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.scenarios.len(), 1);
        let s = &cfg.scenarios[0];
        assert_eq!(s.bubbles.len(), 2);
        assert_eq!(s.horizon, 1e20);
        assert_eq!(s.bubbles[1].2, HeisenbergPoint::from_coords(0.1, 0.0, 0.0));
    }
}
