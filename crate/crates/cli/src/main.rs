use cr_census_cli::cache::ConstantsCache;
use cr_census_cli::{config, exit_codes, pipeline, report, verify};

const USAGE: &str = "\
cr-census: census of critical points at infinity for prescribed Webster
curvature on the CR 3-sphere.

USAGE:
    cr-census constants [--beta B] [--tol T] [--mc]
    cr-census classify CONFIG
    cr-census census CONFIG [--cg-sweep LO:HI:N] [--out FILE]
    cr-census flow CONFIG --scenario NAME [--out FILE]
    cr-census verify

Exit codes: 0 success, 2 invalid configuration, 3 quadrature failure,
4 marginal interaction matrix (non-degeneracy condition fails).

The constants cache lives in .cr-census-cache (override with the
CR_CENSUS_CACHE_DIR environment variable).";

fn fail(code: i32, msg: String) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(code);
}

fn take_flag(args: &mut Vec<String>, name: &str) -> bool {
    if let Some(pos) = args.iter().position(|a| a == name) {
        args.remove(pos);
        true
    } else {
        false
    }
}

fn take_value(args: &mut Vec<String>, name: &str) -> Option<String> {
    let pos = args.iter().position(|a| a == name)?;
    if pos + 1 >= args.len() {
        fail(
            exit_codes::GENERAL,
            format!("{name} needs a value"),
        );
    }
    let value = args.remove(pos + 1);
    args.remove(pos);
    Some(value)
}

fn parse_sweep(spec: &str) -> Vec<f64> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        fail(
            exit_codes::GENERAL,
            format!("--cg-sweep expects LO:HI:N, got `{spec}`"),
        );
    }
    let lo: f64 = parts[0].parse().unwrap_or_else(|_| {
        fail(exit_codes::GENERAL, format!("bad sweep low `{}`", parts[0]))
    });
    let hi: f64 = parts[1].parse().unwrap_or_else(|_| {
        fail(exit_codes::GENERAL, format!("bad sweep high `{}`", parts[1]))
    });
    let n: usize = parts[2].parse().unwrap_or_else(|_| {
        fail(exit_codes::GENERAL, format!("bad sweep count `{}`", parts[2]))
    });
    if n < 2 || !(lo > 0.0) || !(hi > lo) {
        fail(
            exit_codes::GENERAL,
            "sweep needs 0 < LO < HI and N >= 2".to_string(),
        );
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn load(path: &str) -> config::CensusConfig {
    match config::load_config(path) {
        Ok(cfg) => cfg,
        Err(e) => fail(exit_codes::CONFIG_INVALID, e.to_string()),
    }
}

fn pipeline_fail(e: pipeline::PipelineError) -> ! {
    fail(e.exit_code(), e.to_string())
}

fn main() {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        eprintln!("{USAGE}");
        std::process::exit(exit_codes::GENERAL);
    }
    let command = args.remove(0);
    match command.as_str() {
        "constants" => {
            let beta: f64 = take_value(&mut args, "--beta")
                .map(|v| {
                    v.parse().unwrap_or_else(|_| {
                        fail(exit_codes::GENERAL, format!("bad beta `{v}`"))
                    })
                })
                .unwrap_or(2.0);
            let tol: f64 = take_value(&mut args, "--tol")
                .map(|v| {
                    v.parse().unwrap_or_else(|_| {
                        fail(exit_codes::GENERAL, format!("bad tolerance `{v}`"))
                    })
                })
                .unwrap_or(1e-8);
            let with_mc = take_flag(&mut args, "--mc");
            let mut cache = ConstantsCache::open_default();
            let k = match cache.structural_constants(beta, tol) {
                Ok(k) => k,
                Err(e) => fail(exit_codes::QUADRATURE_FAILED, e.to_string()),
            };
            println!("constants at beta = {beta} (tolerance {tol}):");
            for (name, v) in [
                ("kappa", k.kappa),
                ("kappa'", k.kappa_prime),
                ("c", k.c),
                ("c2", k.c2),
                ("S", k.s),
                ("omega3", k.omega3),
                ("c'", k.c_prime),
                ("c0^2", k.c0_sq),
            ] {
                println!("  {name:<8} = {:>20.14e} +- {:.3e}", v.value, v.error);
            }
            if with_mc {
                use cr_census::kernels::{IntegralSpec, Kernel};
                use cr_census::monte_carlo::monte_carlo_oracle;
                println!("monte carlo cross-checks (1e6 samples):");
                for (name, kernel, reference) in [
                    ("omega3", Kernel::KoranyiBallIndicator, k.omega3.value),
                    (
                        "S/c0^4",
                        Kernel::BubblePower { power: 4 },
                        k.s.value / k.c0_sq.value.powi(2),
                    ),
                    ("c", Kernel::HorizontalSecondMoment, k.c.value),
                ] {
                    let spec = IntegralSpec::new(kernel, tol).unwrap();
                    let mc = monte_carlo_oracle(&spec, 1_000_000, 42).unwrap();
                    println!(
                        "  {name:<8} mc = {:>20.14e} +- {:.3e} ({:.2} s.e. from quadrature)",
                        mc.value,
                        mc.standard_error,
                        mc.sigmas_from(reference)
                    );
                }
            }
        }
        "classify" => {
            if args.is_empty() {
                fail(exit_codes::GENERAL, "classify needs a CONFIG path".into());
            }
            let cfg = load(&args[0]);
            let mut cache = ConstantsCache::open_default();
            let constants = match pipeline::constants_for(&cfg, &mut cache) {
                Ok(c) => c,
                Err(e) => pipeline_fail(e),
            };
            use cr_census::profiles::{classify_point, validate_profile};
            let mut bad = false;
            for p in &cfg.points {
                let k = &constants[&format!("{}", p.beta)];
                match validate_profile(p, k) {
                    Ok(v) if v.is_empty() => {
                        let cls = classify_point(p, k).unwrap_or_else(|e| {
                            fail(exit_codes::CONFIG_INVALID, format!("{}: {e}", p.id))
                        });
                        println!(
                            "{:<12} beta = {:<6} set = {:<8} sigma = {:+.6e} m = {}",
                            p.id, p.beta, cls.set, cls.sigma, cls.m
                        );
                    }
                    Ok(v) => {
                        bad = true;
                        for violation in v {
                            println!("{:<12} violation: {}", p.id, violation.what);
                        }
                    }
                    Err(e) => {
                        bad = true;
                        println!("{:<12} error: {e}", p.id);
                    }
                }
            }
            if bad {
                std::process::exit(exit_codes::CONFIG_INVALID);
            }
        }
        "census" => {
            let sweep = take_value(&mut args, "--cg-sweep").map(|s| parse_sweep(&s));
            let out = take_value(&mut args, "--out");
            if args.is_empty() {
                fail(exit_codes::GENERAL, "census needs a CONFIG path".into());
            }
            let cfg = load(&args[0]);
            let mut cache = ConstantsCache::open_default();
            let cert =
                match pipeline::run_census_with_sweep(&cfg, &mut cache, sweep.as_deref()) {
                    Ok(c) => c,
                    Err(e) => pipeline_fail(e),
                };
            print!("{}", report::render(&cert));
            let path = out.unwrap_or_else(|| "certificate.txt".to_string());
            if let Err(e) = cert.emit_to(&path) {
                fail(exit_codes::GENERAL, e.to_string());
            }
            eprintln!("certificate written to {path}");
        }
        "flow" => {
            let scenario = take_value(&mut args, "--scenario").unwrap_or_else(|| {
                fail(exit_codes::GENERAL, "flow needs --scenario NAME".into())
            });
            let out = take_value(&mut args, "--out");
            if args.is_empty() {
                fail(exit_codes::GENERAL, "flow needs a CONFIG path".into());
            }
            let cfg = load(&args[0]);
            let mut cache = ConstantsCache::open_default();
            let outcome = match pipeline::run_flow_scenario(&cfg, &mut cache, &scenario) {
                Ok(o) => o,
                Err(e) => pipeline_fail(e),
            };
            let mut log = String::new();
            for step in &outcome.trajectory {
                log.push_str(&cr_census::flow::trajectory_line(step));
                log.push('\n');
            }
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, log) {
                        fail(exit_codes::GENERAL, e.to_string());
                    }
                    eprintln!("trajectory written to {path}");
                }
                None => print!("{log}"),
            }
            eprintln!(
                "fate: {:?} after {} accepted steps",
                outcome.fate, outcome.steps_accepted
            );
        }
        "verify" => {
            if !verify::run() {
                std::process::exit(exit_codes::GENERAL);
            }
        }
        "--help" | "-h" | "help" => println!("{USAGE}"),
        other => fail(exit_codes::GENERAL, format!("unknown command `{other}`\n{USAGE}")),
    }
}
