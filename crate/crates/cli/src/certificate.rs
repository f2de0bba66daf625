//! The machine-readable census certificate.
//!
//! Versioned line format with stable key order; identical runs emit
//! byte-identical bytes, and `parse` inverts `emit` exactly (floats are
//! printed in Rust's shortest round-trip form).

use std::collections::BTreeMap;

use thiserror::Error;

use cr_census::constants::ConstantValue;

pub const SCHEMA: &str = "cr-census-certificate/1";

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("certificate parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsBlock {
    pub beta: f64,
    pub kappa: ConstantValue,
    pub kappa_prime: ConstantValue,
    pub c: ConstantValue,
    pub c2: ConstantValue,
    pub s: ConstantValue,
    pub omega3: ConstantValue,
    pub c_prime: ConstantValue,
    pub c0_sq: ConstantValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub id: String,
    pub beta: f64,
    pub set: String,
    pub sigma: f64,
    pub m: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleRow {
    pub members: Vec<String>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndRow {
    pub kind: String,
    pub members: Vec<String>,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateRow {
    pub k: u32,
    pub sum: i64,
    pub cond1: bool,
    pub cond2: bool,
    pub verdict: bool,
    pub bound: u64,
    pub bound_as_printed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c_g: f64,
    pub family: String,
    pub exists: bool,
    pub bound: u64,
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub tool_version: String,
    pub config_hash: u64,
    pub green_c_g: f64,
    pub quadrature_tolerance: f64,
    pub constants: BTreeMap<String, ConstantsBlock>,
    pub points: Vec<PointRow>,
    pub k1plus: Vec<TupleRow>,
    pub ends: Vec<EndRow>,
    pub l_plus: usize,
    pub l0: u32,
    pub gates: Vec<GateRow>,
    pub full_k: u32,
    pub full_exists: bool,
    pub full_bound: u64,
    pub sweep: Vec<SweepRow>,
}

fn cv(v: ConstantValue) -> String {
    format!("{} {}", v.value, v.error)
}

impl Certificate {
    /// Serializes in the stable order.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("schema = {SCHEMA}"));
        line(format!("tool_version = {}", self.tool_version));
        line(format!("config_hash = {:016x}", self.config_hash));
        line(format!("green_c_g = {}", self.green_c_g));
        line(format!("quadrature_tolerance = {}", self.quadrature_tolerance));
        for (key, k) in &self.constants {
            line(format!("[constants {key}]"));
            line(format!("beta = {}", k.beta));
            line(format!("kappa = {}", cv(k.kappa)));
            line(format!("kappa_prime = {}", cv(k.kappa_prime)));
            line(format!("c = {}", cv(k.c)));
            line(format!("c2 = {}", cv(k.c2)));
            line(format!("s = {}", cv(k.s)));
            line(format!("omega3 = {}", cv(k.omega3)));
            line(format!("c_prime = {}", cv(k.c_prime)));
            line(format!("c0_sq = {}", cv(k.c0_sq)));
        }
        for p in &self.points {
            line(format!("[point {}]", p.id));
            line(format!("beta = {}", p.beta));
            line(format!("set = {}", p.set));
            line(format!("sigma = {}", p.sigma));
            line(format!("m = {}", p.m));
        }
        line("[k1plus]".to_string());
        line(format!("l_plus = {}", self.l_plus));
        for t in &self.k1plus {
            line(format!("tuple = {} | rho = {}", t.members.join(" "), t.rho));
        }
        line("[ends]".to_string());
        line(format!("l0 = {}", self.l0));
        for e in &self.ends {
            line(format!(
                "end = {} | members = {} | index = {}",
                e.kind,
                e.members.join(" "),
                e.index
            ));
        }
        for g in &self.gates {
            line(format!("[gate {}]", g.k));
            line(format!("sum = {}", g.sum));
            line(format!("cond1 = {}", g.cond1));
            line(format!("cond2 = {}", g.cond2));
            line(format!("verdict = {}", g.verdict));
            line(format!("bound = {}", g.bound));
            line(format!("bound_as_printed = {}", g.bound_as_printed));
        }
        line("[full]".to_string());
        line(format!("k = {}", self.full_k));
        line(format!("exists = {}", self.full_exists));
        line(format!("bound = {}", self.full_bound));
        line("[sweep]".to_string());
        for row in &self.sweep {
            line(format!(
                "row = c_g {} | family {} | exists {} | bound {} | changed {}",
                row.c_g, row.family, row.exists, row.bound, row.changed
            ));
        }
        out
    }

    pub fn emit_to(&self, path: &str) -> Result<(), CertificateError> {
        std::fs::write(path, self.emit())?;
        Ok(())
    }

    /// Parses text produced by [`emit`](Self::emit) back into an equal value.
    pub fn parse(text: &str) -> Result<Self, CertificateError> {
        let mut cert = Certificate {
            tool_version: String::new(),
            config_hash: 0,
            green_c_g: f64::NAN,
            quadrature_tolerance: f64::NAN,
            constants: BTreeMap::new(),
            points: Vec::new(),
            k1plus: Vec::new(),
            ends: Vec::new(),
            l_plus: 0,
            l0: 0,
            gates: Vec::new(),
            full_k: 0,
            full_exists: false,
            full_bound: 0,
            sweep: Vec::new(),
        };

        enum Section {
            Top,
            Constants(String),
            Point,
            K1Plus,
            Ends,
            Gate,
            Full,
            Sweep,
        }
        let mut section = Section::Top;

        let perr = |line: usize, message: &str| CertificateError::Parse {
            line,
            message: message.to_string(),
        };
        let f = |s: &str, line: usize| -> Result<f64, CertificateError> {
            s.trim().parse().map_err(|_| perr(line, "bad float"))
        };
        let cv_parse = |s: &str, line: usize| -> Result<ConstantValue, CertificateError> {
            let (v, e) = s
                .trim()
                .split_once(' ')
                .ok_or_else(|| perr(line, "constant needs `value error`"))?;
            Ok(ConstantValue {
                value: v.parse().map_err(|_| perr(line, "bad value"))?,
                error: e.trim().parse().map_err(|_| perr(line, "bad error"))?,
            })
        };

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| perr(line, "unterminated section"))?;
                section = if let Some(key) = header.strip_prefix("constants ") {
                    Section::Constants(key.to_string())
                } else if let Some(id) = header.strip_prefix("point ") {
                    cert.points.push(PointRow {
                        id: id.to_string(),
                        beta: f64::NAN,
                        set: String::new(),
                        sigma: f64::NAN,
                        m: 0,
                    });
                    Section::Point
                } else if header == "k1plus" {
                    Section::K1Plus
                } else if header == "ends" {
                    Section::Ends
                } else if let Some(k) = header.strip_prefix("gate ") {
                    let k: u32 = k.parse().map_err(|_| perr(line, "bad gate level"))?;
                    cert.gates.push(GateRow {
                        k,
                        sum: 0,
                        cond1: false,
                        cond2: false,
                        verdict: false,
                        bound: 0,
                        bound_as_printed: 0,
                    });
                    Section::Gate
                } else if header == "full" {
                    Section::Full
                } else if header == "sweep" {
                    Section::Sweep
                } else {
                    return Err(perr(line, "unknown section"));
                };
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| perr(line, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            match &mut section {
                Section::Top => match key {
                    "schema" => {
                        if value != SCHEMA {
                            return Err(perr(line, "unsupported schema"));
                        }
                    }
                    "tool_version" => cert.tool_version = value.to_string(),
                    "config_hash" => {
                        cert.config_hash = u64::from_str_radix(value, 16)
                            .map_err(|_| perr(line, "bad hash"))?
                    }
                    "green_c_g" => cert.green_c_g = f(value, line)?,
                    "quadrature_tolerance" => cert.quadrature_tolerance = f(value, line)?,
                    _ => return Err(perr(line, "unknown top-level key")),
                },
                Section::Constants(beta_key) => {
                    let block =
                        cert.constants
                            .entry(beta_key.clone())
                            .or_insert_with(|| ConstantsBlock {
                                beta: f64::NAN,
                                kappa: ConstantValue { value: 0.0, error: 0.0 },
                                kappa_prime: ConstantValue { value: 0.0, error: 0.0 },
                                c: ConstantValue { value: 0.0, error: 0.0 },
                                c2: ConstantValue { value: 0.0, error: 0.0 },
                                s: ConstantValue { value: 0.0, error: 0.0 },
                                omega3: ConstantValue { value: 0.0, error: 0.0 },
                                c_prime: ConstantValue { value: 0.0, error: 0.0 },
                                c0_sq: ConstantValue { value: 0.0, error: 0.0 },
                            });
                    match key {
                        "beta" => block.beta = f(value, line)?,
                        "kappa" => block.kappa = cv_parse(value, line)?,
                        "kappa_prime" => block.kappa_prime = cv_parse(value, line)?,
                        "c" => block.c = cv_parse(value, line)?,
                        "c2" => block.c2 = cv_parse(value, line)?,
                        "s" => block.s = cv_parse(value, line)?,
                        "omega3" => block.omega3 = cv_parse(value, line)?,
                        "c_prime" => block.c_prime = cv_parse(value, line)?,
                        "c0_sq" => block.c0_sq = cv_parse(value, line)?,
                        _ => return Err(perr(line, "unknown constants key")),
                    }
                }
                Section::Point => {
                    let p = cert.points.last_mut().expect("inside point section");
                    match key {
                        "beta" => p.beta = f(value, line)?,
                        "set" => p.set = value.to_string(),
                        "sigma" => p.sigma = f(value, line)?,
                        "m" => p.m = value.parse().map_err(|_| perr(line, "bad m"))?,
                        _ => return Err(perr(line, "unknown point key")),
                    }
                }
                Section::K1Plus => match key {
                    "l_plus" => {
                        cert.l_plus = value.parse().map_err(|_| perr(line, "bad l_plus"))?
                    }
                    "tuple" => {
                        let (members, rho) = value
                            .split_once("| rho =")
                            .ok_or_else(|| perr(line, "tuple needs `| rho =`"))?;
                        cert.k1plus.push(TupleRow {
                            members: members.split_whitespace().map(String::from).collect(),
                            rho: f(rho, line)?,
                        });
                    }
                    _ => return Err(perr(line, "unknown k1plus key")),
                },
                Section::Ends => match key {
                    "l0" => cert.l0 = value.parse().map_err(|_| perr(line, "bad l0"))?,
                    "end" => {
                        let parts: Vec<&str> = value.split('|').collect();
                        if parts.len() != 3 {
                            return Err(perr(line, "end needs 3 fields"));
                        }
                        let kind = parts[0].trim().to_string();
                        let members = parts[1]
                            .trim()
                            .strip_prefix("members =")
                            .ok_or_else(|| perr(line, "missing members"))?
                            .split_whitespace()
                            .map(String::from)
                            .collect();
                        let index = parts[2]
                            .trim()
                            .strip_prefix("index =")
                            .ok_or_else(|| perr(line, "missing index"))?
                            .trim()
                            .parse()
                            .map_err(|_| perr(line, "bad index"))?;
                        cert.ends.push(EndRow { kind, members, index });
                    }
                    _ => return Err(perr(line, "unknown ends key")),
                },
                Section::Gate => {
                    let g = cert.gates.last_mut().expect("inside gate section");
                    match key {
                        "sum" => g.sum = value.parse().map_err(|_| perr(line, "bad sum"))?,
                        "cond1" => g.cond1 = value == "true",
                        "cond2" => g.cond2 = value == "true",
                        "verdict" => g.verdict = value == "true",
                        "bound" => g.bound = value.parse().map_err(|_| perr(line, "bad bound"))?,
                        "bound_as_printed" => {
                            g.bound_as_printed =
                                value.parse().map_err(|_| perr(line, "bad bound"))?
                        }
                        _ => return Err(perr(line, "unknown gate key")),
                    }
                }
                Section::Full => match key {
                    "k" => cert.full_k = value.parse().map_err(|_| perr(line, "bad k"))?,
                    "exists" => cert.full_exists = value == "true",
                    "bound" => {
                        cert.full_bound = value.parse().map_err(|_| perr(line, "bad bound"))?
                    }
                    _ => return Err(perr(line, "unknown full key")),
                },
                Section::Sweep => match key {
                    "row" => {
                        let parts: Vec<&str> = value.split('|').collect();
                        if parts.len() != 5 {
                            return Err(perr(line, "sweep row needs 5 fields"));
                        }
                        let field = |i: usize, prefix: &str| -> Result<String, CertificateError> {
                            parts[i]
                                .trim()
                                .strip_prefix(prefix)
                                .map(|s| s.trim().to_string())
                                .ok_or_else(|| perr(line, "bad sweep field"))
                        };
                        cert.sweep.push(SweepRow {
                            c_g: field(0, "c_g")?.parse().map_err(|_| perr(line, "bad c_g"))?,
                            family: field(1, "family")?,
                            exists: field(2, "exists")? == "true",
                            bound: field(3, "bound")?
                                .parse()
                                .map_err(|_| perr(line, "bad bound"))?,
                            changed: field(4, "changed")? == "true",
                        });
                    }
                    _ => return Err(perr(line, "unknown sweep key")),
                },
            }
        }
        Ok(cert)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Certificate {
        let cvv = |value: f64| ConstantValue { value, error: 1e-9 };
        let mut constants = BTreeMap::new();
        constants.insert(
            "2".to_string(),
            ConstantsBlock {
                beta: 2.0,
                kappa: cvv(8.0 / std::f64::consts::PI),
                kappa_prime: cvv(8.0 / std::f64::consts::PI),
                c: cvv(4.9348),
                c2: cvv(201.06),
                s: cvv(157.91),
                omega3: cvv(19.739),
                c_prime: cvv(124.02),
                c0_sq: cvv(4.0),
            },
        );
        Certificate {
            tool_version: "0.1.0".into(),
            config_hash: 0xdeadbeef12345678,
            green_c_g: 1.0,
            quadrature_tolerance: 1e-8,
            constants,
            points: vec![PointRow {
                id: "a".into(),
                beta: 2.0,
                set: "K1".into(),
                sigma: -4.546,
                m: 3,
            }],
            k1plus: vec![TupleRow {
                members: vec!["a".into()],
                rho: 11.2,
            }],
            ends: vec![EndRow {
                kind: "tuple".into(),
                members: vec!["a".into()],
                index: 0,
            }],
            l_plus: 1,
            l0: 0,
            gates: vec![GateRow {
                k: 1,
                sum: 1,
                cond1: false,
                cond2: true,
                verdict: false,
                bound: 0,
                bound_as_printed: 0,
            }],
            full_k: 1,
            full_exists: false,
            full_bound: 0,
            sweep: vec![SweepRow {
                c_g: 1.0,
                family: "a".into(),
                exists: false,
                bound: 0,
                changed: false,
            }],
        }
    }

    #[test]
    fn emit_parse_round_trip() {
        let cert = sample();
        let text = cert.emit();
        let back = Certificate::parse(&text).unwrap();
        assert_eq!(cert, back);
        // And the emission is reproducible byte for byte.
        assert_eq!(text, back.emit());
    }

    #[test]
    fn parse_rejects_wrong_schema() {
        let text = sample().emit().replace(SCHEMA, "other/9");
        assert!(Certificate::parse(&text).is_err());
    }
}
