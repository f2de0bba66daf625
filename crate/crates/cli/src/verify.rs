//! Runtime invariant suite: a condensed version of the test battery, runnable
//! in the field to check a build against its mathematical anchors.

use num_complex::Complex64;

use cr_census::constants::{compute_kappa, compute_kappa_prime, dk_integrals, DerivativeAxis};
use cr_census::counting::{
    brute_force_k1_plus, build_census_report, canonical_sum, enumerate_k1_plus, existence_gate,
    indices_at_infinity, EnumerationConfig,
};
use cr_census::flow::{integrate_flow, BubbleEnsemble, FateKind, FlowConfig, StepControl};
use cr_census::heisenberg::{self, cayley_forward, cayley_inverse, HeisenbergPoint};
use cr_census::interaction::{
    cholesky_pivots_positive, eigenvalues_closed_form, jacobi_eigenvalues, SymMatrix,
};
use cr_census::monte_carlo::monte_carlo_oracle;
use cr_census::kernels::{IntegralSpec, Kernel};
use cr_census::quad;
use cr_census::rng::SplitMix64;
use cr_census::synthetic;

use crate::cache::ConstantsCache;
use crate::config::parse_config;
use crate::pipeline::run_census;

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("[ok]   {name}: {detail}");
        } else {
            println!("[FAIL] {name}: {detail}");
            self.failures += 1;
        }
    }
}

/// Runs the whole suite; returns true when every check passes.
pub fn run() -> bool {
    let mut suite = Suite { failures: 0 };
    let pi = std::f64::consts::PI;

    // Geometry round trips.
    {
        let mut rng = SplitMix64::new(2024);
        let mut worst = 0.0f64;
        for _ in 0..20_000 {
            let g = HeisenbergPoint::from_coords(
                rng.uniform(-4.0, 4.0),
                rng.uniform(-4.0, 4.0),
                rng.uniform(-4.0, 4.0),
            );
            let back = cayley_forward(&cayley_inverse(&g).unwrap()).unwrap();
            worst = worst.max((back.z - g.z).norm()).max((back.t - g.t).abs());
        }
        suite.check(
            "cayley-round-trip",
            worst < 1e-10,
            format!("max deviation {worst:.3e}"),
        );
    }

    // Bubble amplitude ratio.
    {
        match heisenberg::c0_squared() {
            Ok(est) => suite.check(
                "bubble-ratio",
                est.rel_spread < 1e-6 && (est.value - 4.0).abs() < 1e-5,
                format!("value {:.9} spread {:.3e}", est.value, est.rel_spread),
            ),
            Err(e) => suite.check("bubble-ratio", false, format!("{e}")),
        }
    }

    // Closed-form anchors.
    {
        let ball = IntegralSpec::new(Kernel::KoranyiBallIndicator, 1e-9)
            .unwrap()
            .integrate()
            .unwrap();
        let d_ball = (ball.value - 2.0 * pi * pi).abs();
        let s4 = IntegralSpec::new(Kernel::BubblePower { power: 4 }, 1e-9)
            .unwrap()
            .integrate()
            .unwrap();
        let d_s4 = (s4.value - pi * pi).abs();
        let kp2 = compute_kappa_prime(2.0, 1e-8).unwrap();
        let k2 = compute_kappa(2.0, 1e-8).unwrap();
        let ok = d_ball < 1e-8
            && d_s4 < 1e-8
            && (kp2.value - 8.0 / pi).abs() < 1e-7
            && (k2.value - 8.0 / pi).abs() < 1e-6;
        suite.check(
            "closed-forms",
            ok,
            format!(
                "|omega3 - 2pi^2| = {d_ball:.2e}, |S/c0^4 - pi^2| = {d_s4:.2e}, kappa'(2) = {:.9}, kappa(2) = {:.9}",
                kp2.value, k2.value
            ),
        );
    }

    // Odd kernels vanish, including the flatness gradients at zero shift.
    {
        let odd = quad::integrate_h1(
            |z, t| {
                let g2 = (1.0 + z.norm_sqr()).powi(2) + t * t;
                z.re * t / g2.powi(3)
            },
            1e-8,
        )
        .unwrap();
        let dk = dk_integrals(2.5, HeisenbergPoint::origin(), DerivativeAxis::X1, 1e-7).unwrap();
        let ok = odd.value.abs() < 1e-8 && dk.principal.abs() < 1e-7 && dk.coupled.abs() < 1e-7;
        suite.check(
            "odd-kernels",
            ok,
            format!(
                "x1*t kernel {:.2e}, zero-shift gradient ({:.2e}, {:.2e})",
                odd.value, dk.principal, dk.coupled
            ),
        );
    }

    // Ratio constants positive and Monte Carlo consistent.
    {
        let mut ok = true;
        let mut detail = String::new();
        for beta in [2.0, 2.5, 3.0, 3.9] {
            let kp = compute_kappa_prime(beta, 1e-7).unwrap();
            ok &= kp.value > 0.0;
            detail.push_str(&format!("kappa'({beta}) = {:.4}; ", kp.value));
        }
        let spec = IntegralSpec::new(Kernel::KappaPrimeNumerator { beta: 3.0 }, 1e-8).unwrap();
        let q = spec.integrate().unwrap();
        let mc = monte_carlo_oracle(&spec, 200_000, 7).unwrap();
        ok &= mc.sigmas_from(q.value) < 4.0;
        detail.push_str(&format!("mc within {:.2} s.e.", mc.sigmas_from(q.value)));
        suite.check("ratio-constants", ok, detail);
    }

    // Eigenvalues: Jacobi vs closed form vs pivots.
    {
        let mut rng = SplitMix64::new(31337);
        let mut worst = 0.0f64;
        let mut pivot_disagrees = 0;
        for _ in 0..2000 {
            let n = 1 + (rng.next_u64() % 3) as usize;
            let mut m = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.uniform(-3.0, 3.0);
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let jac = jacobi_eigenvalues(&m);
            let cf = eigenvalues_closed_form(&m);
            for (a, b) in jac.iter().zip(cf.iter()) {
                worst = worst.max((a - b).abs());
            }
            let rho = jac[0];
            if rho.abs() > 1e-9 && (rho > 0.0) != cholesky_pivots_positive(&m) {
                pivot_disagrees += 1;
            }
        }
        suite.check(
            "eigenvalues",
            worst < 1e-10 && pivot_disagrees == 0,
            format!("max |jacobi - closed form| = {worst:.3e}, pivot disagreements {pivot_disagrees}"),
        );
    }

    // Enumeration pruning vs brute force.
    {
        let constants = synthetic::closed_form_constants_beta2();
        let mut rng = SplitMix64::new(404);
        let mut mismatch = 0;
        for i in 0..20 {
            let pts = synthetic::synthetic_k1_instance(&mut rng, 6);
            let config = EnumerationConfig {
                green: cr_census::interaction::GreenKernelConfig {
                    c_g: 0.5 + 0.1 * i as f64,
                },
                ..EnumerationConfig::default()
            };
            let pruned = enumerate_k1_plus(&pts, &constants, &config).unwrap();
            let brute = brute_force_k1_plus(&pts, &constants, &config).unwrap();
            if pruned != brute {
                mismatch += 1;
            }
        }
        suite.check(
            "enumeration",
            mismatch == 0,
            format!("{mismatch} mismatches over 20 instances"),
        );
    }

    // Counting identities on synthetic censuses.
    {
        let mut rng = SplitMix64::new(505);
        let mut ok = true;
        for _ in 0..30 {
            let census = synthetic::synthetic_census(&mut rng, 4, 4);
            let (ends, _, l0) = indices_at_infinity(&census);
            for k in 1..=(l0 + 1) {
                let gate = existence_gate(&census, &ends, k);
                ok &= gate.sum == canonical_sum(&ends, k);
            }
            let report = build_census_report(&census).unwrap();
            ok &= report.full.k == l0 + 1;
            for e in &ends {
                if e.kind == cr_census::counting::EndKind::Tuple {
                    let msign = if e.m_sum % 2 == 0 { 1 } else { -1 };
                    ok &= e.sign() == -msign;
                }
            }
        }
        suite.check("counting", ok, "gate selection, parity, full criterion".into());
    }

    // Flow battery.
    {
        let constants = synthetic::closed_form_constants_beta2();
        let config = FlowConfig::default();
        let control = StepControl::default();
        let mut violations = 0;
        let mut descent_bad = 0;
        let scenarios = synthetic::fate_battery(9000, 10);
        for scenario in &scenarios {
            let k = if (scenario.profiles[0].beta - 2.0).abs() < 1e-12 {
                constants
            } else {
                synthetic::closed_form_constants_at(scenario.profiles[0].beta)
            };
            let ens =
                BubbleEnsemble::balanced(&scenario.assignments, &scenario.profiles, &config)
                    .unwrap();
            let out = integrate_flow(&ens, &k, &scenario.profiles, &config, &control).unwrap();
            if matches!(out.fate, FateKind::BlowUp(_)) && !scenario.qualifies {
                violations += 1;
            }
            if scenario.qualifies && !matches!(out.fate, FateKind::BlowUp(_)) {
                violations += 1;
            }
            for w in out.trajectory.windows(2) {
                if w[1].j > w[0].j + 1e-12 {
                    descent_bad += 1;
                }
            }
        }
        suite.check(
            "flow-fates",
            violations == 0 && descent_bad == 0,
            format!("{violations} fate violations, {descent_bad} descent violations over 10 runs"),
        );
    }

    // End-to-end determinism on an in-memory config.
    {
        let text = "\
[point]
id = a
position = chart 1.0 0.0 0.0
beta = 2.0
b = -4.0 -4.0 -2.0
k = 0.25

[point]
id = b
position = chart -1.0 0.0 0.0
beta = 2.0
b = -4.0 -4.0 -2.0
k = 0.25
";
        let config = parse_config(text).unwrap();
        let dir = std::env::temp_dir().join(format!("cr-census-verify-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let mut cache = ConstantsCache::open(&dir);
        let once = run_census(&config, &mut cache).map(|c| c.emit());
        let twice = run_census(&config, &mut cache).map(|c| c.emit());
        let ok = match (&once, &twice) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        suite.check("determinism", ok, "census emitted twice, byte-identical".into());
        let _ = std::fs::remove_dir_all(&dir);
    }

    // Measure factor by exterior algebra: theta ^ dtheta = 4 dx dy dt.
    {
        let mut rng = SplitMix64::new(42);
        let mut ok = true;
        for _ in 0..50 {
            let x = rng.uniform(-2.0, 2.0);
            let y = rng.uniform(-2.0, 2.0);
            let z = Complex64::new(x, y);
            let i = Complex64::new(0.0, 1.0);
            let theta_x = (i * (z - z.conj())).re;
            let theta_y = (i * (z * (-i) - z.conj() * i)).re;
            ok &= (theta_x + 2.0 * y).abs() < 1e-14 && (theta_y - 2.0 * x).abs() < 1e-14;
            let h = 0.25;
            let d_xy = (2.0 * (x + h) - 2.0 * (x - h)) / (2.0 * h)
                - (-2.0 * (y + h) + 2.0 * (y - h)) / (2.0 * h);
            ok &= (d_xy - 4.0).abs() < 1e-12;
        }
        suite.check("measure-factor", ok, "theta ^ dtheta = 4 dx dy dt".into());
    }

    println!(
        "{}",
        if suite.failures == 0 {
            "verify: all checks passed".to_string()
        } else {
            format!("verify: {} check(s) FAILED", suite.failures)
        }
    );
    suite.failures == 0
}
