//! Deterministic generators of synthetic census data.
//!
//! Used by the test batteries and by the `verify` command: random flatness
//! profiles with controlled sign structure, random downward-closed tuple
//! families for the counting identities, and the flow scenario battery.

use crate::constants::{compute_kappa, compute_kappa_prime, ConstantValue, StructuralConstants};
use crate::counting::CensusInput;
use crate::heisenberg::{cayley_inverse, cr_distance_sq, HeisenbergPoint};
use crate::interaction::{assemble_matrix, GreenKernelConfig};
use crate::profiles::CriticalPointProfile;
use crate::rng::SplitMix64;

/// Exact closed-form constants at `beta = 2`:
/// `omega_3 = 2 pi^2`, `c = pi^2/2`, `S = c_0^4 pi^2`, `c_2 = c_0^3 8 pi`,
/// `kappa(2) = kappa'(2) = 8/pi`, `c_0^2 = 4`.
pub fn closed_form_constants_beta2() -> StructuralConstants {
    let pi = std::f64::consts::PI;
    let cv = |value: f64| ConstantValue { value, error: 0.0 };
    StructuralConstants {
        beta: 2.0,
        kappa: cv(8.0 / pi),
        kappa_prime: cv(8.0 / pi),
        c: cv(pi * pi / 2.0),
        c2: cv(64.0 * pi),
        s: cv(16.0 * pi * pi),
        omega3: cv(2.0 * pi * pi),
        c_prime: cv(4.0 * pi.powi(3)),
        c0_sq: cv(4.0),
    }
}

/// Constants at an arbitrary flatness order: the `beta`-independent members
/// in closed form, the ratio constants by quadrature at a modest tolerance.
pub fn closed_form_constants_at(beta: f64) -> StructuralConstants {
    if (beta - 2.0).abs() <= 1e-12 {
        return closed_form_constants_beta2();
    }
    let mut out = closed_form_constants_beta2();
    out.beta = beta;
    out.kappa = compute_kappa(beta, 1e-6).expect("kappa quadrature");
    out.kappa_prime = compute_kappa_prime(beta, 1e-6).expect("kappa' quadrature");
    out
}

/// Random census data with a downward-closed tuple family. Tuple least
/// eigenvalues are placeholder positives; only the combinatorics matter here.
pub fn synthetic_census(rng: &mut SplitMix64, max_k2: usize, max_k1: usize) -> CensusInput {
    let n_k2 = (rng.next_u64() % (max_k2 as u64 + 1)) as usize;
    let n_k1 = (rng.next_u64() % (max_k1 as u64 + 1)) as usize;
    let k2 = (0..n_k2)
        .map(|i| (format!("s{i}"), (rng.next_u64() % 4) as u8))
        .collect();
    let k1 = (0..n_k1)
        .map(|i| (format!("d{i}"), (rng.next_u64() % 4) as u8))
        .collect();

    // Downward-closed family: all singletons, then a subset survives only
    // when all its facets did.
    let mut family: Vec<Vec<usize>> = (0..n_k1).map(|i| vec![i]).collect();
    for size in 2..=n_k1 {
        let mut added = Vec::new();
        for cand in subsets_of_size(n_k1, size) {
            let all_facets = facets(&cand).all(|f| family.contains(&f));
            if all_facets && rng.next_f64() < 0.6 {
                added.push(cand);
            }
        }
        if added.is_empty() {
            break;
        }
        family.extend(added);
    }
    let k1plus = family
        .into_iter()
        .map(|s| (s, rng.uniform(0.1, 2.0)))
        .collect();
    CensusInput { k1, k2, k1plus }
}

fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut cur, &mut out);
    out
}

fn facets(subset: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..subset.len()).map(move |drop| {
        subset
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != drop)
            .map(|(_, &v)| v)
            .collect()
    })
}

/// Random degree-two profiles with negative balance sums, distinct positions
/// and both side sums bounded away from zero.
pub fn synthetic_k1_instance(rng: &mut SplitMix64, r: usize) -> Vec<CriticalPointProfile> {
    let kappa = 8.0 / std::f64::consts::PI;
    let mut out: Vec<CriticalPointProfile> = Vec::with_capacity(r);
    while out.len() < r {
        let chart = HeisenbergPoint::from_coords(
            rng.uniform(-2.5, 2.5),
            rng.uniform(-2.5, 2.5),
            rng.uniform(-2.5, 2.5),
        );
        let position = match cayley_inverse(&chart) {
            Ok(p) => p,
            Err(_) => continue,
        };
        if out
            .iter()
            .any(|p| cr_distance_sq(&p.position, &position) < 1e-3)
        {
            continue;
        }
        let draw = |rng: &mut SplitMix64| {
            let v = rng.uniform(0.2, 1.5);
            if rng.next_f64() < 0.5 {
                -v
            } else {
                v
            }
        };
        let (b1, b2, b0) = (draw(rng), draw(rng), draw(rng));
        let sigma = b1 + b2 + kappa * b0;
        if sigma >= -0.05 || sigma.abs() < 0.05 {
            continue;
        }
        let k_value = rng.uniform(0.5, 2.0);
        out.push(CriticalPointProfile::new(
            format!("xi{}", out.len()),
            position,
            2.0,
            b1,
            b2,
            b0,
            k_value,
        ));
    }
    out
}

/// One flow scenario with its expected qualification: `qualifies` is true
/// exactly when the assigned profiles form a positive-definite tuple or a
/// single slow-decay/degree-two point, the only configurations allowed to
/// blow up.
#[derive(Debug, Clone)]
pub struct FlowScenario {
    pub name: String,
    pub profiles: Vec<CriticalPointProfile>,
    pub assignments: Vec<(usize, HeisenbergPoint, f64)>,
    pub qualifies: bool,
}

/// A pair of profiles whose tuple matrix is decisively positive definite at
/// the default kernel normalization: antipodal-in-gauge positions (distance
/// squared 2), strong negative coefficients and a small curvature value.
pub fn decisive_pd_pair(b_scale: f64, k_value: f64) -> Vec<CriticalPointProfile> {
    let east = cayley_inverse(&HeisenbergPoint::from_coords(1.0, 0.0, 0.0)).unwrap();
    let west = cayley_inverse(&HeisenbergPoint::from_coords(-1.0, 0.0, 0.0)).unwrap();
    vec![
        CriticalPointProfile::new("pd-a", east, 2.0, -b_scale, -b_scale, -b_scale / 2.0, k_value),
        CriticalPointProfile::new("pd-b", west, 2.0, -b_scale, -b_scale, -b_scale / 2.0, k_value),
    ]
}

/// Deterministic scenario battery cycling through the qualitative cases. The
/// `qualifies` flag is computed from the actual classification and, for
/// pairs, the actual tuple matrix at the default kernel normalization.
pub fn fate_battery(seed: u64, count: usize) -> Vec<FlowScenario> {
    let mut rng = SplitMix64::new(seed);
    let constants = closed_form_constants_beta2();
    let green = GreenKernelConfig::default();
    let mut out = Vec::with_capacity(count);
    let kappa_prime = constants.kappa_prime.value;

    let neg = |rng: &mut SplitMix64| -rng.uniform(0.3, 1.5);
    let pos = |rng: &mut SplitMix64| rng.uniform(0.3, 1.5);

    for n in 0..count {
        let kind = n % 5;
        let origin = HeisenbergPoint::origin();
        let scenario = match kind {
            0 => {
                // Single degree-two point, all coefficients negative.
                let p = CriticalPointProfile::new(
                    "k1-all-neg",
                    cayley_inverse(&origin).unwrap(),
                    2.0,
                    neg(&mut rng),
                    neg(&mut rng),
                    neg(&mut rng),
                    rng.uniform(0.6, 1.8),
                );
                FlowScenario {
                    name: format!("{n}-single-k1"),
                    profiles: vec![p],
                    assignments: vec![(0, origin, rng.uniform(11.0, 20.0))],
                    qualifies: true,
                }
            }
            1 => {
                // Single slow-decay point.
                let beta = rng.uniform(2.3, 3.4);
                let p = CriticalPointProfile::new(
                    "k2",
                    cayley_inverse(&origin).unwrap(),
                    beta,
                    neg(&mut rng),
                    neg(&mut rng),
                    neg(&mut rng),
                    rng.uniform(0.6, 1.8),
                );
                FlowScenario {
                    name: format!("{n}-single-k2"),
                    profiles: vec![p],
                    assignments: vec![(0, origin, rng.uniform(11.0, 16.0))],
                    qualifies: true,
                }
            }
            2 => {
                // Single point outside both sets (all coefficients positive).
                let p = CriticalPointProfile::new(
                    "neither",
                    cayley_inverse(&origin).unwrap(),
                    2.0,
                    pos(&mut rng),
                    pos(&mut rng),
                    pos(&mut rng),
                    rng.uniform(0.6, 1.8),
                );
                FlowScenario {
                    name: format!("{n}-single-neither"),
                    profiles: vec![p],
                    assignments: vec![(0, origin, rng.uniform(12.0, 20.0))],
                    qualifies: false,
                }
            }
            3 => {
                // Decisively positive-definite pair.
                let profiles = decisive_pd_pair(rng.uniform(3.5, 4.5), rng.uniform(0.2, 0.3));
                let m = assemble_matrix(
                    &profiles.iter().collect::<Vec<_>>(),
                    &constants,
                    &green,
                )
                .unwrap();
                FlowScenario {
                    name: format!("{n}-pair-pd"),
                    profiles,
                    assignments: vec![
                        (0, origin, rng.uniform(11.0, 14.0)),
                        (1, origin, rng.uniform(11.0, 14.0)),
                    ],
                    qualifies: m.rho > 0.0,
                }
            }
            _ => {
                // Nearly coincident pair with weak coefficients: the kernel
                // blow-up kills definiteness decisively.
                let s1 = -rng.uniform(0.05, 0.12);
                let s2 = -rng.uniform(0.05, 0.12);
                let b0 = |s: f64| (-2.0 * s - 0.3) / kappa_prime;
                let a = CriticalPointProfile::new(
                    "near-a",
                    cayley_inverse(&HeisenbergPoint::from_coords(0.5, 0.0, 0.0)).unwrap(),
                    2.0,
                    s1,
                    s1,
                    b0(s1),
                    1.0,
                );
                let b = CriticalPointProfile::new(
                    "near-b",
                    cayley_inverse(&HeisenbergPoint::from_coords(0.55, 0.0, 0.0)).unwrap(),
                    2.0,
                    s2,
                    s2,
                    b0(s2),
                    1.0,
                );
                let profiles = vec![a, b];
                let m = assemble_matrix(
                    &profiles.iter().collect::<Vec<_>>(),
                    &constants,
                    &green,
                )
                .unwrap();
                FlowScenario {
                    name: format!("{n}-pair-not-pd"),
                    profiles,
                    assignments: vec![
                        (0, origin, rng.uniform(11.0, 13.0)),
                        (1, origin, rng.uniform(11.0, 13.0)),
                    ],
                    qualifies: m.rho > 0.0,
                }
            }
        };
        out.push(scenario);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{classify_point, SetLabel};

    #[test]
    fn k1_instances_classify_k1() {
        let constants = closed_form_constants_beta2();
        let mut rng = SplitMix64::new(61);
        for _ in 0..20 {
            let pts = synthetic_k1_instance(&mut rng, 6);
            assert_eq!(pts.len(), 6);
            for p in &pts {
                let cls = classify_point(p, &constants).unwrap();
                assert_eq!(cls.set, SetLabel::K1);
            }
        }
    }

    #[test]
    fn census_family_is_downward_closed() {
        let mut rng = SplitMix64::new(62);
        for _ in 0..50 {
            let census = synthetic_census(&mut rng, 3, 5);
            for (subset, _) in &census.k1plus {
                if subset.len() >= 2 {
                    for facet in facets(subset) {
                        assert!(
                            census.k1plus.iter().any(|(s, _)| *s == facet),
                            "missing facet {facet:?} of {subset:?}"
                        );
                    }
                }
            }
        }
    }
}
