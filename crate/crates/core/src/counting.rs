//! Enumeration of the flow ends and the sign-counting that yields the
//! existence gate and the solution-count lower bound.
//!
//! The ends are: every `K2` point as a single (index `3 - m`), and every
//! tuple of distinct `K1` points whose interaction matrix is positive
//! definite (index `4p - 1 - sum m`). Positive definiteness passes to
//! principal submatrices, so the tuple family is downward closed and can be
//! enumerated level by level, never extending a subset that already failed.
//!
//! The master identity `1 = sum over ends of index <= k-1 of (-1)^index` is
//! the canonical form of both counting statements. The textbook form of the
//! multiplicity bound differs from the canonical one in a filter direction
//! and a sign; both values are computed and reported so the discrepancy
//! stays auditable instead of silently resolved.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::constants::StructuralConstants;
use crate::interaction::{
    assemble_matrix, is_positive_definite, GreenKernelConfig, InteractionError,
};
use crate::profiles::{classify_point, CriticalPointProfile, ProfileError, SetLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountingError {
    #[error("subset {subset:?} has a marginal interaction matrix (rho = {rho:.3e}); the non-degeneracy condition fails")]
    DegenerateInteraction { subset: Vec<String>, rho: f64 },
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

/// Enumeration thresholds.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationConfig {
    pub green: GreenKernelConfig,
    pub pd_margin: f64,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            green: GreenKernelConfig::default(),
            pd_margin: crate::interaction::DEFAULT_PD_MARGIN,
        }
    }
}

/// A positive-definite tuple: member indices (into the `K1` slice, ascending)
/// and the least eigenvalue of its matrix.
pub type PdTuple = (Vec<usize>, f64);

/// Enumerates all positive-definite subsets of the `K1` points, level by
/// level with pruning. The output is sorted by size, then lexicographically.
pub fn enumerate_k1_plus(
    points: &[CriticalPointProfile],
    constants: &StructuralConstants,
    config: &EnumerationConfig,
) -> Result<Vec<PdTuple>, CountingError> {
    for p in points {
        let cls = classify_point(p, constants)?;
        if cls.set != SetLabel::K1 {
            return Err(InteractionError::NotK1 {
                id: p.id.clone(),
                found: cls.set,
            }
            .into());
        }
    }

    let n = points.len();
    let mut out: Vec<PdTuple> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = Vec::new();

    let test = |subset: &[usize]| -> Result<Option<f64>, CountingError> {
        let refs: Vec<&CriticalPointProfile> = subset.iter().map(|&i| &points[i]).collect();
        let m = assemble_matrix(&refs, constants, &config.green)?;
        match is_positive_definite(&m.matrix, config.pd_margin) {
            Ok(true) => Ok(Some(m.rho)),
            Ok(false) => Ok(None),
            Err(InteractionError::Marginal { rho, .. }) => {
                Err(CountingError::DegenerateInteraction {
                    subset: subset.iter().map(|&i| points[i].id.clone()).collect(),
                    rho,
                })
            }
            Err(e) => Err(e.into()),
        }
    };

    for i in 0..n {
        if let Some(rho) = test(&[i])? {
            out.push((vec![i], rho));
            frontier.push(vec![i]);
        }
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for subset in &frontier {
            let last = *subset.last().unwrap();
            for j in (last + 1)..n {
                let mut cand = subset.clone();
                cand.push(j);
                // A subset missing a PD sub-subset cannot be PD; extending
                // only PD frontiers is exhaustive by interlacing.
                if let Some(rho) = test(&cand)? {
                    out.push((cand.clone(), rho));
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    out.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    Ok(out)
}

/// Reference implementation: tests every nonempty subset. Exponential; only
/// for cross-checking the pruned enumeration.
pub fn brute_force_k1_plus(
    points: &[CriticalPointProfile],
    constants: &StructuralConstants,
    config: &EnumerationConfig,
) -> Result<Vec<PdTuple>, CountingError> {
    let n = points.len();
    assert!(n <= 20, "brute force is exponential");
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let refs: Vec<&CriticalPointProfile> = subset.iter().map(|&i| &points[i]).collect();
        let m = assemble_matrix(&refs, constants, &config.green)?;
        match is_positive_definite(&m.matrix, config.pd_margin) {
            Ok(true) => out.push((subset, m.rho)),
            Ok(false) => {}
            Err(InteractionError::Marginal { rho, .. }) => {
                return Err(CountingError::DegenerateInteraction {
                    subset: subset.iter().map(|&i| points[i].id.clone()).collect(),
                    rho,
                })
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    Ok(out)
}

/// Classified census data, decoupled from quadrature and matrices so the
/// counting layer can run on synthetic inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusInput {
    /// `K1` points: id and negative-coefficient count.
    pub k1: Vec<(String, u8)>,
    /// `K2` points: id and negative-coefficient count.
    pub k2: Vec<(String, u8)>,
    /// Positive-definite tuples as indices into `k1`, with least eigenvalues.
    pub k1plus: Vec<PdTuple>,
}

/// Kind of flow end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    /// A `K2` point alone.
    Single,
    /// A positive-definite tuple of `K1` points (size >= 1).
    Tuple,
}

/// One critical point at infinity with its index.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalAtInfinity {
    pub kind: EndKind,
    pub index: u32,
    pub members: Vec<String>,
    /// Least eigenvalue for tuples; absent for singles.
    pub rho: Option<f64>,
    /// Sum of member `m`-counts (equals `m` itself for singles).
    pub m_sum: u32,
}

impl CriticalAtInfinity {
    pub fn sign(&self) -> i64 {
        if self.index % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// All ends with their indices, plus `l_plus` (largest tuple size) and `L_0`
/// (largest index over all ends; `0` for an empty census).
pub fn indices_at_infinity(input: &CensusInput) -> (Vec<CriticalAtInfinity>, usize, u32) {
    let mut ends = Vec::new();
    for (id, m) in &input.k2 {
        ends.push(CriticalAtInfinity {
            kind: EndKind::Single,
            index: 3 - u32::from(*m),
            members: vec![id.clone()],
            rho: None,
            m_sum: u32::from(*m),
        });
    }
    let mut l_plus = 0;
    for (subset, rho) in &input.k1plus {
        let p = subset.len();
        l_plus = l_plus.max(p);
        let m_sum: u32 = subset.iter().map(|&i| u32::from(input.k1[i].1)).sum();
        ends.push(CriticalAtInfinity {
            kind: EndKind::Tuple,
            index: 4 * p as u32 - 1 - m_sum,
            members: subset.iter().map(|&i| input.k1[i].0.clone()).collect(),
            rho: Some(*rho),
            m_sum,
        });
    }
    let l0 = ends.iter().map(|e| e.index).max().unwrap_or(0);
    (ends, l_plus, l0)
}

/// `sum over ends with index <= k-1 of (-1)^index`: the canonical selection
/// of the master identity.
pub fn canonical_sum(ends: &[CriticalAtInfinity], k: u32) -> i64 {
    ends.iter()
        .filter(|e| e.index < k)
        .map(|e| e.sign())
        .sum()
}

/// Gate evaluation at level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateResult {
    pub k: u32,
    /// The selected signed sum, in the statement's own selection form.
    pub sum: i64,
    /// First condition: the sum differs from 1.
    pub cond1: bool,
    /// Second condition: no end has index exactly `k`.
    pub cond2: bool,
    /// Both conditions; existence of a solution of index <= k follows.
    pub verdict: bool,
}

/// Existence gate at level `k >= 1`.
///
/// The sum is evaluated in the literal statement form: `K2` points with
/// `m >= 4 - k` carry `(-1)^{m+1}`, tuples with `sum m >= 4p - k` carry
/// `(-1)^{4p-1-sum m}`. This equals [`canonical_sum`] (the selections and the
/// signs coincide end by end), which the tests pin down.
pub fn existence_gate(input: &CensusInput, ends: &[CriticalAtInfinity], k: u32) -> GateResult {
    assert!(k >= 1, "gate level starts at 1");
    let mut sum: i64 = 0;
    for (_, m) in &input.k2 {
        let m = i64::from(*m);
        if m >= 4 - i64::from(k) {
            sum += if (m + 1) % 2 == 0 { 1 } else { -1 };
        }
    }
    for (subset, _) in &input.k1plus {
        let p = subset.len() as i64;
        let m_sum: i64 = subset.iter().map(|&i| i64::from(input.k1[i].1)).sum();
        if m_sum >= 4 * p - i64::from(k) {
            let index = 4 * p - 1 - m_sum;
            sum += if index % 2 == 0 { 1 } else { -1 };
        }
    }
    let cond1 = sum != 1;
    let cond2 = ends.iter().all(|e| e.index != k);
    GateResult {
        k,
        sum,
        cond1,
        cond2,
        verdict: cond1 && cond2,
    }
}

/// Solution-count lower bound at level `k`, in the canonical form
/// `|1 - sum over index <= k-1 of (-1)^index|`.
pub fn multiplicity_bound(ends: &[CriticalAtInfinity], k: u32) -> u64 {
    (1 - canonical_sum(ends, k)).unsigned_abs()
}

/// The printed form of the bound (filter `m <= 4 - k` on singles, sign
/// `(-1)^m`, and `(-1)^{sum m}` on tuples). Kept verbatim for the audit
/// column; differs from [`multiplicity_bound`] whenever the filter or sign
/// discrepancy bites.
pub fn multiplicity_bound_as_printed(input: &CensusInput, k: u32) -> u64 {
    let mut total: i64 = 1;
    for (_, m) in &input.k2 {
        let m = i64::from(*m);
        if m <= 4 - i64::from(k) {
            total += if m % 2 == 0 { 1 } else { -1 };
        }
    }
    for (subset, _) in &input.k1plus {
        let p = subset.len() as i64;
        let m_sum: i64 = subset.iter().map(|&i| i64::from(input.k1[i].1)).sum();
        if m_sum >= 4 * p - i64::from(k) {
            total -= if m_sum % 2 == 0 { 1 } else { -1 };
        }
    }
    total.unsigned_abs()
}

/// Verdict at the maximal level `k = L_0 + 1`, where the second gate
/// condition holds automatically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullCriterion {
    pub k: u32,
    pub exists: bool,
    pub total_bound: u64,
}

/// Full census over `k = 1 ..= L_0 + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub ends: Vec<CriticalAtInfinity>,
    pub k1plus: Vec<(Vec<String>, f64)>,
    pub l_plus: usize,
    pub l0: u32,
    pub gates: BTreeMap<u32, GateResult>,
    pub bounds: BTreeMap<u32, u64>,
    pub bounds_as_printed: BTreeMap<u32, u64>,
    pub full: FullCriterion,
}

/// Runs the counting layer on classified data.
pub fn build_census_report(input: &CensusInput) -> Result<CensusReport, CountingError> {
    let (ends, l_plus, l0) = indices_at_infinity(input);
    let mut gates = BTreeMap::new();
    let mut bounds = BTreeMap::new();
    let mut bounds_as_printed = BTreeMap::new();
    for k in 1..=(l0 + 1) {
        gates.insert(k, existence_gate(input, &ends, k));
        bounds.insert(k, multiplicity_bound(&ends, k));
        bounds_as_printed.insert(k, multiplicity_bound_as_printed(input, k));
    }
    let top = gates[&(l0 + 1)];
    if !top.cond2 {
        // An end of index L_0 + 1 contradicts the maximality of L_0.
        return Err(CountingError::InternalInconsistency(format!(
            "an end has index {} above the maximum {}",
            l0 + 1,
            l0
        )));
    }
    let full = FullCriterion {
        k: l0 + 1,
        exists: top.verdict,
        total_bound: bounds[&(l0 + 1)],
    };
    let k1plus = input
        .k1plus
        .iter()
        .map(|(subset, rho)| {
            (
                subset.iter().map(|&i| input.k1[i].0.clone()).collect(),
                *rho,
            )
        })
        .collect();
    Ok(CensusReport {
        ends,
        k1plus,
        l_plus,
        l0,
        gates,
        bounds,
        bounds_as_printed,
        full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(k2_ms: &[u8], k1_ms: &[u8], tuples: &[&[usize]]) -> CensusInput {
        CensusInput {
            k1: k1_ms
                .iter()
                .enumerate()
                .map(|(i, &m)| (format!("k1-{i}"), m))
                .collect(),
            k2: k2_ms
                .iter()
                .enumerate()
                .map(|(i, &m)| (format!("k2-{i}"), m))
                .collect(),
            k1plus: tuples.iter().map(|s| (s.to_vec(), 1.0)).collect(),
        }
    }

    #[test]
    fn index_formulas() {
        // K2 point with m = 0 has index 3; K1 singletons with m = 1 have 2.
        let inp = input(&[0], &[1, 1], &[&[0], &[1]]);
        let (ends, l_plus, l0) = indices_at_infinity(&inp);
        assert_eq!(l_plus, 1);
        assert_eq!(l0, 3);
        let mut idx: Vec<u32> = ends.iter().map(|e| e.index).collect();
        idx.sort();
        assert_eq!(idx, vec![2, 2, 3]);

        // Pair with m = 3, 3: index 8 - 1 - 6 = 1.
        let inp = input(&[], &[3, 3], &[&[0], &[1], &[0, 1]]);
        let (ends, _, _) = indices_at_infinity(&inp);
        let pair = ends.iter().find(|e| e.members.len() == 2).unwrap();
        assert_eq!(pair.index, 1);
    }

    #[test]
    fn parity_identity() {
        // (-1)^{4p-1-sum} = -(-1)^{sum} for every tuple.
        let inp = input(&[], &[3, 2, 1], &[&[0], &[1], &[2], &[0, 1], &[0, 1, 2]]);
        let (ends, _, _) = indices_at_infinity(&inp);
        for e in ends.iter().filter(|e| e.kind == EndKind::Tuple) {
            let tuple_sign = e.sign();
            let msum_sign = if e.m_sum % 2 == 0 { 1 } else { -1 };
            assert_eq!(tuple_sign, -msum_sign);
        }
    }

    #[test]
    fn two_singletons_and_pair_example() {
        // Two K1 points with m = 3 and their PD pair: indices 0, 0, 1.
        let inp = input(&[], &[3, 3], &[&[0], &[1], &[0, 1]]);
        let (ends, _, l0) = indices_at_infinity(&inp);
        assert_eq!(l0, 1);
        let g2 = existence_gate(&inp, &ends, 2);
        assert_eq!(g2.sum, 1);
        assert!(!g2.cond1 && !g2.verdict);
        let g1 = existence_gate(&inp, &ends, 1);
        assert_eq!(g1.sum, 2);
        assert!(g1.cond1);
        // The pair has index 1 = k, so the second condition fails.
        assert!(!g1.cond2 && !g1.verdict);
        assert_eq!(multiplicity_bound(&ends, 2), 0);
        assert_eq!(multiplicity_bound(&ends, 1), 1);
    }

    #[test]
    fn single_k2_examples() {
        // m = 0: index 3, L0 = 3, gate at k = 4 passes with bound 2.
        let inp = input(&[0], &[], &[]);
        let report = build_census_report(&inp).unwrap();
        assert_eq!(report.l0, 3);
        let g = report.gates[&4];
        assert_eq!(g.sum, -1);
        assert!(g.cond1 && g.cond2 && g.verdict);
        assert_eq!(report.bounds[&4], 2);

        // m = 3: index 0, the sum is 1 and the gate fails; bound 0.
        let inp = input(&[3], &[], &[]);
        let report = build_census_report(&inp).unwrap();
        assert_eq!(report.l0, 0);
        assert_eq!(report.full.k, 1);
        assert!(!report.full.exists);
        assert_eq!(report.full.total_bound, 0);
    }

    #[test]
    fn empty_census() {
        let inp = input(&[], &[], &[]);
        let report = build_census_report(&inp).unwrap();
        assert_eq!(report.l0, 0);
        assert_eq!(report.full.k, 1);
        let g = report.gates[&1];
        assert_eq!(g.sum, 0);
        assert!(g.verdict);
        assert_eq!(report.full.total_bound, 1);
    }

    #[test]
    fn gate_sum_equals_canonical_selection() {
        let mut rng = crate::rng::SplitMix64::new(77);
        for _ in 0..100 {
            let inp = crate::synthetic::synthetic_census(&mut rng, 4, 3);
            let (ends, _, l0) = indices_at_infinity(&inp);
            for k in 1..=(l0 + 1) {
                let gate = existence_gate(&inp, &ends, k);
                assert_eq!(
                    gate.sum,
                    canonical_sum(&ends, k),
                    "selection mismatch at k = {k}: {inp:?}"
                );
                // Monotone selection: the k+1 sum includes every k-term.
                let selected_k = ends.iter().filter(|e| e.index < k).count();
                let selected_k1 = ends.iter().filter(|e| e.index < k + 1).count();
                assert!(selected_k1 >= selected_k);
            }
            let report = build_census_report(&inp).unwrap();
            let top = report.gates[&(l0 + 1)];
            assert!(top.cond2);
            assert_eq!(report.full.exists, top.verdict);
            assert_eq!(report.full.total_bound, report.bounds[&(l0 + 1)]);
        }
    }
}
