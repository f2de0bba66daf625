//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured figures (run with `--nocapture` to see them all).

use std::time::Instant;

use num_complex::Complex64;

use cr_census::constants::{
    compute_kappa_prime, dk_integrals, DerivativeAxis,
};
use cr_census::counting::{
    brute_force_k1_plus, build_census_report, canonical_sum, enumerate_k1_plus, existence_gate,
    indices_at_infinity, EnumerationConfig,
};
use cr_census::flow::{integrate_flow, BubbleEnsemble, FateKind, FlowConfig, StepControl};
use cr_census::heisenberg::{
    c0_squared, cayley_forward, cayley_inverse, HeisenbergBubble, HeisenbergPoint, SpherePoint,
};
use cr_census::interaction::{
    cholesky_pivots_positive, eigenvalues_closed_form, jacobi_eigenvalues, GreenKernelConfig,
    SymMatrix,
};
use cr_census::kernels::{IntegralSpec, Kernel};
use cr_census::monte_carlo::monte_carlo_oracle;
use cr_census::quad;
use cr_census::rng::SplitMix64;
use cr_census::synthetic;

fn random_sphere(rng: &mut SplitMix64) -> SpherePoint {
    loop {
        if let Ok(p) = SpherePoint::new(
            Complex64::new(rng.normal(), rng.normal()),
            Complex64::new(rng.normal(), rng.normal()),
        ) {
            return p;
        }
    }
}

#[test]
fn criterion_1_cayley_round_trip() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(101);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let g = HeisenbergPoint::from_coords(
            rng.uniform(-5.0, 5.0),
            rng.uniform(-5.0, 5.0),
            rng.uniform(-5.0, 5.0),
        );
        let back = cayley_forward(&cayley_inverse(&g).unwrap()).unwrap();
        worst = worst.max((back.z - g.z).norm()).max((back.t - g.t).abs());
    }
    let mut n = 0;
    while n < 100_000 {
        let zeta = random_sphere(&mut rng);
        if zeta.pole_distance() < 1e-3 {
            continue;
        }
        n += 1;
        let back = cayley_inverse(&cayley_forward(&zeta).unwrap()).unwrap();
        worst = worst
            .max((back.zeta1() - zeta.zeta1()).norm())
            .max((back.zeta2() - zeta.zeta2()).norm());
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-10, "max deviation {worst:.3e}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("[PASS] criterion 1: cayley round trips, max deviation {worst:.3e} in {elapsed:?}");
}

#[test]
fn criterion_2_bubble_ratio_spread() {
    let start = Instant::now();
    let est = c0_squared().unwrap();
    let elapsed = start.elapsed();
    assert!(
        est.rel_spread < 1e-6,
        "relative spread {:.3e}",
        est.rel_spread
    );
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 2: bubble ratio {:.12} with spread {:.3e} in {elapsed:?}",
        est.value, est.rel_spread
    );
}

#[test]
fn criterion_3_volume_transport() {
    let start = Instant::now();
    let c0 = c0_squared().unwrap().value.sqrt();
    let mut figures = Vec::new();
    for (lambda, center) in [
        (1.0, SpherePoint::north()),
        (
            1.0,
            cayley_inverse(&HeisenbergPoint::from_coords(0.3, -0.2, 0.4)).unwrap(),
        ),
        (10.0, SpherePoint::north()),
    ] {
        let sphere_side = IntegralSpec::new(
            Kernel::SphereBubbleFourth { center, lambda, c0 },
            1e-7,
        )
        .unwrap()
        .integrate()
        .unwrap();
        let g0 = cayley_forward(&center).unwrap();
        let bubble = HeisenbergBubble::with_c0(g0, lambda, c0).unwrap();
        let group_side = quad::integrate_h1(
            |z, t| bubble.eval(HeisenbergPoint::new(z, t)).powi(4),
            1e-7,
        )
        .unwrap();
        let rel = (sphere_side.value - group_side.value).abs() / group_side.value;
        assert!(
            rel < 1e-6,
            "lambda {lambda}: sphere {} vs group {} (rel {rel:.3e})",
            sphere_side.value,
            group_side.value
        );
        figures.push(format!("lambda {lambda}: rel {rel:.2e}"));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 3: volume transport, {} in {elapsed:?}",
        figures.join(", ")
    );
}

#[test]
fn criterion_4_constants_suite() {
    let start = Instant::now();
    let pi = std::f64::consts::PI;

    // omega3 by full adaptive quadrature, to 1e-8 absolute.
    let omega3 = IntegralSpec::new(Kernel::KoranyiBallIndicator, 4e-10)
        .unwrap()
        .integrate()
        .unwrap();
    let exact = 2.0 * pi * pi;
    assert!(
        (omega3.value - exact).abs() < 1e-8,
        "omega3 {} vs 2 pi^2 (diff {:.3e})",
        omega3.value,
        (omega3.value - exact).abs()
    );
    // Exact 1-D reduction: volume = 4 pi int_{-1}^{1} sqrt(1-s^2) ds.
    let reduced = quad::adaptive_gk(
        &|s: f64| (1.0 - s * s).max(0.0).sqrt(),
        -1.0,
        1.0,
        &[],
        1e-12,
        0.0,
        4000,
    );
    let reduction = 4.0 * pi * reduced.value;
    assert!((reduction - exact).abs() < 1e-9);
    assert!((omega3.value - reduction).abs() < 1e-8);
    // Monte Carlo cross-check.
    let ball_spec = IntegralSpec::new(Kernel::KoranyiBallIndicator, 1e-8).unwrap();
    let mc = monte_carlo_oracle(&ball_spec, 1_000_000, 404).unwrap();
    assert!(mc.sigmas_from(omega3.value) < 3.0);

    // Full suite against the Monte Carlo oracle, integral by integral.
    let mut worst_sigma = 0.0f64;
    let mut check = |kernel: Kernel, seed: u64| {
        let spec = IntegralSpec::new(kernel.clone(), 1e-8).unwrap();
        let q = spec.integrate().unwrap();
        let mc = monte_carlo_oracle(&spec, 400_000, seed).unwrap();
        let sigmas = mc.sigmas_from(q.value);
        assert!(
            sigmas < 3.0,
            "{kernel:?}: quadrature {} vs mc {} +- {} ({sigmas:.2} s.e.)",
            q.value,
            mc.value,
            mc.standard_error
        );
        worst_sigma = worst_sigma.max(sigmas);
    };
    let mut seed = 1000;
    for beta in [2.0, 2.5, 3.0, 3.9] {
        for kernel in [
            Kernel::KappaNumerator { beta },
            Kernel::KappaDenominator { beta },
            Kernel::KappaPrimeNumerator { beta },
            Kernel::KappaPrimeDenominator { beta },
        ] {
            seed += 1;
            check(kernel, seed);
        }
    }
    check(Kernel::HorizontalSecondMoment, 2001);
    check(Kernel::BubblePower { power: 3 }, 2002);
    check(Kernel::BubblePower { power: 4 }, 2003);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 4: omega3 = {:.12} (diff {:.2e}), suite worst deviation {worst_sigma:.2} s.e. in {elapsed:?}",
        omega3.value,
        (omega3.value - exact).abs()
    );
}

#[test]
fn criterion_5_positivity_and_odd_kernels() {
    let mut kp_values = Vec::new();
    for beta in [2.0, 2.5, 3.0, 3.9] {
        let kp = compute_kappa_prime(beta, 1e-7).unwrap();
        assert!(kp.value > 0.0, "kappa'({beta}) = {}", kp.value);
        kp_values.push(format!("kappa'({beta}) = {:.6}", kp.value));
    }
    // Odd kernels through the full machinery.
    let odd_x1 = quad::integrate_h1(
        |z, t| {
            let g2 = (1.0 + z.norm_sqr()).powi(2) + t * t;
            z.re * (1.0 + z.norm_sqr()) / g2.powi(3)
        },
        1e-8,
    )
    .unwrap();
    assert!(odd_x1.value.abs() < 1e-8, "odd-in-x1 integral {}", odd_x1.value);
    let odd_t = quad::integrate_h1(
        |z, t| {
            let g2 = (1.0 + z.norm_sqr()).powi(2) + t * t;
            t / g2.powi(2)
        },
        1e-8,
    )
    .unwrap();
    assert!(odd_t.value.abs() < 1e-8, "odd-in-t integral {}", odd_t.value);
    // Flatness gradients at zero shift, every axis, two orders.
    let mut worst = 0.0f64;
    for beta in [2.0, 2.7] {
        for axis in [DerivativeAxis::X1, DerivativeAxis::X2, DerivativeAxis::T] {
            let g = dk_integrals(beta, HeisenbergPoint::origin(), axis, 1e-7).unwrap();
            worst = worst.max(g.principal.abs()).max(g.coupled.abs());
        }
    }
    assert!(worst < 1e-7, "zero-shift gradient magnitude {worst:.3e}");
    println!(
        "[PASS] criterion 5: {}; odd kernels <= {:.2e}",
        kp_values.join(", "),
        worst
            .max(odd_x1.value.abs())
            .max(odd_t.value.abs())
    );
}

#[test]
fn criterion_6_enumeration_oracle() {
    let start = Instant::now();
    let constants = synthetic::closed_form_constants_beta2();
    let mut rng = SplitMix64::new(606);
    let mut checked = 0;
    for _ in 0..100 {
        let r = 4 + (rng.next_u64() % 7) as usize; // 4..=10
        let points = synthetic::synthetic_k1_instance(&mut rng, r);
        let config = EnumerationConfig {
            green: GreenKernelConfig {
                c_g: rng.uniform(0.5, 2.0),
            },
            ..EnumerationConfig::default()
        };
        let pruned = enumerate_k1_plus(&points, &constants, &config).unwrap();
        let brute = brute_force_k1_plus(&points, &constants, &config).unwrap();
        assert_eq!(pruned, brute, "instance with r = {r}");
        checked += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 6: pruned enumeration equals brute force on {checked} instances in {elapsed:?}"
    );
}

#[test]
fn criterion_7_counting_consistency() {
    let mut rng = SplitMix64::new(707);
    let mut censuses = 0;
    for _ in 0..100 {
        let census = synthetic::synthetic_census(&mut rng, 5, 5);
        let (ends, _, l0) = indices_at_infinity(&census);
        for k in 1..=(l0 + 1) {
            let gate = existence_gate(&census, &ends, k);
            // The statement's literal selection equals the master-identity
            // selection: sum = 1 - (1 - sum over index <= k-1).
            assert_eq!(
                gate.sum,
                canonical_sum(&ends, k),
                "census {census:?} at k = {k}"
            );
        }
        let report = build_census_report(&census).unwrap();
        let top = report.gates[&(l0 + 1)];
        assert_eq!(report.full.exists, top.verdict);
        assert_eq!(report.full.total_bound, report.bounds[&(l0 + 1)]);
        assert!(top.cond2);
        // Parity: (-1)^{4p-1-sum m} = -(-1)^{sum m} for every tuple.
        for e in ends
            .iter()
            .filter(|e| e.kind == cr_census::counting::EndKind::Tuple)
        {
            let msign = if e.m_sum % 2 == 0 { 1 } else { -1 };
            assert_eq!(e.sign(), -msign);
        }
        censuses += 1;
    }
    println!("[PASS] criterion 7: counting identities on {censuses} synthetic censuses");
}

#[test]
fn criterion_8_eigenvalue_oracle() {
    let mut rng = SplitMix64::new(808);
    let mut worst = 0.0f64;
    let mut pivot_checked = 0;
    for _ in 0..10_000 {
        let n = 1 + (rng.next_u64() % 3) as usize;
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = rng.uniform(-5.0, 5.0);
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
        if rho.abs() > 1e-10 {
            assert_eq!(rho > 0.0, cholesky_pivots_positive(&m));
            pivot_checked += 1;
        }
    }
    assert!(worst < 1e-10, "worst eigenvalue deviation {worst:.3e}");
    println!(
        "[PASS] criterion 8: jacobi vs characteristic polynomial, worst {worst:.3e}; pivot test agreed on {pivot_checked} matrices"
    );
}

#[test]
fn criterion_9_flow_properties() {
    let start = Instant::now();
    let config = FlowConfig::default();
    let control = StepControl::default();
    let beta2 = synthetic::closed_form_constants_beta2();

    // 50-run battery: descent on every accepted step; blow-up only for
    // qualifying configurations (and always for them).
    let scenarios = synthetic::fate_battery(909, 50);
    let mut blowups = 0;
    for scenario in &scenarios {
        let constants = if (scenario.profiles[0].beta - 2.0).abs() < 1e-12 {
            beta2
        } else {
            synthetic::closed_form_constants_at(scenario.profiles[0].beta)
        };
        let ens = BubbleEnsemble::balanced(&scenario.assignments, &scenario.profiles, &config)
            .unwrap();
        let out = integrate_flow(&ens, &constants, &scenario.profiles, &config, &control).unwrap();
        for w in out.trajectory.windows(2) {
            assert!(
                w[1].j <= w[0].j + 1e-12,
                "{}: energy increased {} -> {}",
                scenario.name,
                w[0].j,
                w[1].j
            );
        }
        let blew = matches!(out.fate, FateKind::BlowUp(_));
        assert_eq!(
            blew, scenario.qualifies,
            "{}: fate {:?} but qualifies = {}",
            scenario.name, out.fate, scenario.qualifies
        );
        if blew {
            blowups += 1;
        }
    }

    // Slow-decay single: energy limit at the threshold scale.
    let beta = 2.8;
    let constants = synthetic::closed_form_constants_at(beta);
    let profile = cr_census::profiles::CriticalPointProfile::new(
        "k2",
        SpherePoint::north(),
        beta,
        -0.8,
        -1.2,
        -0.5,
        1.4,
    );
    let profiles = vec![profile];
    let ens = BubbleEnsemble::balanced(
        &[(0, HeisenbergPoint::origin(), 11.0)],
        &profiles,
        &config,
    )
    .unwrap();
    let out = integrate_flow(&ens, &constants, &profiles, &config, &control).unwrap();
    assert!(matches!(out.fate, FateKind::BlowUp(_)));
    let last = out.trajectory.last().unwrap();
    assert!(last.bubbles[0].2 > config.blowup_threshold);
    let limit = constants.s.value / profiles[0].k_value.sqrt();
    let rel = (last.j - limit).abs() / limit;
    assert!(rel < 1e-3, "J = {} vs limit {} (rel {rel:.3e})", last.j, limit);

    // Constructed positive-definite pair: blow-up with bounded scale ratio.
    let pair = synthetic::decisive_pd_pair(4.0, 0.25);
    let m = cr_census::interaction::assemble_matrix(
        &pair.iter().collect::<Vec<_>>(),
        &beta2,
        &GreenKernelConfig::default(),
    )
    .unwrap();
    assert!(m.rho > 0.0);
    let ens = BubbleEnsemble::balanced(
        &[
            (0, HeisenbergPoint::origin(), 12.0),
            (1, HeisenbergPoint::origin(), 14.0),
        ],
        &pair,
        &config,
    )
    .unwrap();
    let out = integrate_flow(&ens, &beta2, &pair, &config, &control).unwrap();
    assert_eq!(out.fate, FateKind::BlowUp(vec![0, 1]));
    for step in &out.trajectory {
        let ratio = (step.bubbles[0].2 / step.bubbles[1].2).max(step.bubbles[1].2 / step.bubbles[0].2);
        assert!(ratio <= config.ratio_bound);
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 9: 50-run battery (blow-ups: {blowups}), slow-decay limit rel {rel:.2e}, pair ratio bounded, in {elapsed:?}"
    );
}

#[test]
fn criterion_10_census_determinism() {
    let config_text = "\
[quadrature]
tolerance = 1e-7

[point]
id = east
position = chart 1.0 0.0 0.0
beta = 2.0
b = -4.0 -4.0 -2.0
k = 0.25

[point]
id = west
position = chart -1.0 0.0 0.0
beta = 2.0
b = -4.0 -4.0 -2.0
k = 0.25

[point]
id = slow
position = chart 0.0 2.0 0.0
beta = 2.5
b = -1.0 -1.0 -0.5
k = 1.0
";
    let dir = std::env::temp_dir().join(format!("cr-census-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("census.cfg");
    std::fs::write(&config_path, config_text).unwrap();

    let bin = env!("CARGO_BIN_EXE_cr-census");
    let run = |out: &str| {
        let status = std::process::Command::new(bin)
            .arg("census")
            .arg(&config_path)
            .arg("--out")
            .arg(dir.join(out))
            .env("CR_CENSUS_CACHE_DIR", dir.join("cache"))
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()
            .expect("spawn census");
        assert!(status.success(), "census exited with {status:?}");
        std::fs::read(dir.join(out)).unwrap()
    };
    let first = run("cert1.txt");
    let second = run("cert2.txt");
    assert_eq!(first, second, "certificates differ between runs");
    assert!(!first.is_empty());
    let _ = std::fs::remove_dir_all(&dir);
    println!(
        "[PASS] criterion 10: census run twice, byte-identical certificates ({} bytes)",
        first.len()
    );
}
