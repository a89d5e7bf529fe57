//! Arithmetic-progression structure and essential-subset detection.
//!
//! The gap `d(P)` of a removal `P` is the gcd of the differences of the
//! surviving elements at or above a tail cutoff: the largest `d` such that
//! the tail of `A \ P` lies in one residue class mod `d`. A finite subset is
//! essential when removing it forces a gap of at least 2 while removing any
//! proper subset leaves gap 1.
//!
//! The enumerator does not try subsets blindly. If `A \ P` has gap `d ≥ 2`
//! then for every prime `p | d` the minimal such `P` is exactly the set of
//! tail elements outside one residue class mod `p`; scanning primes and
//! residue classes therefore finds every essential subset whose gap has a
//! prime factor within the scan bound.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::set::IntegerSet;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Controls where the "from some point onwards" structure starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GapParams {
    /// Elements below this are ignored when computing the gap.
    pub tail_cutoff: u64,
}

impl GapParams {
    /// Gap over the whole window: the gcd of all pairwise differences.
    pub fn whole() -> Self {
        GapParams { tail_cutoff: 0 }
    }

    /// Gap over the upper half of the window, a conservative stand-in for
    /// "from some point onwards" on a truncation.
    pub fn tail_half(set: &IntegerSet) -> Self {
        GapParams { tail_cutoff: set.limit() / 2 }
    }
}

/// Largest `d` such that all members at or above the cutoff sit in a single
/// residue class mod `d`; computed as the gcd of consecutive differences.
pub fn progression_gap(set: &IntegerSet, params: &GapParams) -> Result<u64> {
    let mut iter = set.iter_from(params.tail_cutoff);
    let first = match iter.next() {
        Some(v) => v,
        None => {
            return Err(Error::GapUndefined { cutoff: params.tail_cutoff, found: 0 });
        }
    };
    let mut prev = first;
    let mut g = 0u64;
    let mut count = 1usize;
    for e in iter {
        g = gcd(g, e - prev);
        prev = e;
        count += 1;
        if g == 1 {
            return Ok(1);
        }
    }
    if count < 2 {
        return Err(Error::GapUndefined { cutoff: params.tail_cutoff, found: count });
    }
    Ok(g)
}

/// Verdict for one candidate subset, with the gap of every tested proper
/// subset recorded as a minimality witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssentialityReport {
    pub subset: Vec<u64>,
    pub gap: u64,
    pub essential: bool,
    /// Keyed by the proper subset (comma-joined elements, "" for the empty
    /// set), value is the gap after removing just that subset.
    #[serde(rename = "witnesses")]
    pub minimality_witnesses: BTreeMap<String, u64>,
}

fn subset_key(subset: &[u64]) -> String {
    subset
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

const MAX_SUBSET_FOR_MINIMALITY: usize = 20;

/// Decides whether removing `subset` destroys the progression-gap-1
/// structure minimally: gap ≥ 2 after removing all of it, gap 1 after
/// removing any proper part of it. The empty set is never essential.
pub fn is_essential_subset(
    set: &IntegerSet,
    subset: &[u64],
    params: &GapParams,
) -> Result<EssentialityReport> {
    let mut p: Vec<u64> = subset.to_vec();
    p.sort_unstable();
    p.dedup();
    for &e in &p {
        if !set.contains(e) {
            return Err(Error::SubsetNotContained { element: e });
        }
    }
    if p.len() > MAX_SUBSET_FOR_MINIMALITY {
        return Err(Error::SubsetTooLarge { size: p.len(), max: MAX_SUBSET_FOR_MINIMALITY });
    }

    let gap = progression_gap(&set.minus(&p), params)?;
    if p.is_empty() {
        return Ok(EssentialityReport {
            subset: p,
            gap,
            essential: false,
            minimality_witnesses: BTreeMap::new(),
        });
    }

    let mut witnesses = BTreeMap::new();
    let mut minimal = true;
    for mask in 0..(1u32 << p.len()) - 1 {
        let q: Vec<u64> = p
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &v)| v)
            .collect();
        let wgap = progression_gap(&set.minus(&q), params)?;
        if wgap != 1 {
            minimal = false;
        }
        witnesses.insert(subset_key(&q), wgap);
    }

    Ok(EssentialityReport {
        subset: p,
        gap,
        essential: gap >= 2 && minimal,
        minimality_witnesses: witnesses,
    })
}

/// Knobs for the enumerator search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumParams {
    pub gap: GapParams,
    /// A candidate only counts as a finite essential subset of the
    /// truncation when its largest element stays below this; separates
    /// genuine head structure from artifacts of cutting the set off.
    pub head_bound: u64,
    /// Primes up to this bound are scanned for residue-class candidates.
    pub prime_bound: u64,
}

impl EnumParams {
    /// Defaults for a basis of the given order: whole-window gap,
    /// head bound at half the window, prime scan up to `(order*k + 1)^2`.
    pub fn for_set(set: &IntegerSet, order: u32, k: usize) -> Self {
        let b = order as u64 * k as u64 + 1;
        EnumParams {
            gap: GapParams::whole(),
            head_bound: set.limit() / 2,
            prime_bound: b * b,
        }
    }

    /// Exhaustive prime scan for the whole window; complete for any gap
    /// value realizable inside the truncation.
    pub fn exhaustive(set: &IntegerSet) -> Self {
        EnumParams {
            gap: GapParams::whole(),
            head_bound: set.limit(),
            prime_bound: set.limit().max(2),
        }
    }
}

/// All essential subsets of size at most `k` visible in the truncation,
/// sorted by gap and then lexicographically.
///
/// The caller is responsible for `set` being a basis on its window
/// (see `IntegerSet::is_basis_window`).
pub fn enumerate_essential_subsets(
    set: &IntegerSet,
    k: usize,
    params: &EnumParams,
) -> Result<Vec<EssentialityReport>> {
    let mut out = Vec::new();
    if k == 0 {
        return Ok(out);
    }
    let tail: Vec<u64> = set.iter_from(params.gap.tail_cutoff).collect();
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    for p in bounds::primes_up_to(params.prime_bound) {
        for c in 0..p {
            let mut candidate: Vec<u64> = Vec::with_capacity(k);
            let mut viable = true;
            for &e in &tail {
                if e % p != c {
                    // The candidate is forced to contain every off-class
                    // tail element, so either bound failing kills it.
                    if e > params.head_bound || candidate.len() == k {
                        viable = false;
                        break;
                    }
                    candidate.push(e);
                }
            }
            if !viable || candidate.is_empty() || !seen.insert(candidate.clone()) {
                continue;
            }
            match is_essential_subset(set, &candidate, &params.gap) {
                Ok(report) if report.essential => out.push(report),
                Ok(_) => {}
                // Removal emptied the tail; nothing to certify.
                Err(Error::GapUndefined { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    out.sort_by(|a, b| a.gap.cmp(&b.gap).then_with(|| a.subset.cmp(&b.subset)));
    Ok(out)
}

/// True iff every pair of gaps is relatively prime; vacuously true for
/// fewer than two entries.
pub fn pairwise_coprime(gaps: &[u64]) -> bool {
    for (i, &a) in gaps.iter().enumerate() {
        for &b in &gaps[i + 1..] {
            if gcd(a, b) != 1 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(limit: u64, members: &[u64]) -> IntegerSet {
        IntegerSet::from_members(limit, members.iter().copied()).unwrap()
    }

    /// 3N0 ∪ {1} truncated at 99.
    fn three_n_plus_one() -> IntegerSet {
        let mut a = IntegerSet::new(99);
        a.insert_run(0, 99, 3).unwrap();
        a.insert(1);
        a
    }

    #[test]
    fn gap_examples() {
        let whole = GapParams::whole();
        assert_eq!(progression_gap(&set(10, &[0, 4, 10]), &whole).unwrap(), 2);
        let naturals = IntegerSet::interval(100, 0, 100).unwrap();
        assert_eq!(progression_gap(&naturals, &whole).unwrap(), 1);
        let mut m3 = IntegerSet::new(99);
        m3.insert_run(0, 99, 3).unwrap();
        assert_eq!(progression_gap(&m3, &whole).unwrap(), 3);
    }

    #[test]
    fn gap_respects_cutoff() {
        // Head element 1 drops out above the cutoff.
        let a = three_n_plus_one();
        assert_eq!(progression_gap(&a, &GapParams::whole()).unwrap(), 1);
        assert_eq!(progression_gap(&a, &GapParams::tail_half(&a)).unwrap(), 3);
    }

    #[test]
    fn gap_undefined_on_small_tail() {
        let a = set(10, &[3]);
        assert!(matches!(
            progression_gap(&a, &GapParams::whole()),
            Err(Error::GapUndefined { found: 1, .. })
        ));
        let b = set(100, &[0, 1, 2]);
        assert!(matches!(
            progression_gap(&b, &GapParams { tail_cutoff: 50 }),
            Err(Error::GapUndefined { found: 0, .. })
        ));
    }

    #[test]
    fn essential_singleton() {
        let a = three_n_plus_one();
        let report = is_essential_subset(&a, &[1], &GapParams::whole()).unwrap();
        assert!(report.essential);
        assert_eq!(report.gap, 3);
        assert_eq!(report.minimality_witnesses.get(""), Some(&1));
    }

    #[test]
    fn dense_sets_have_no_essential_elements() {
        let naturals = IntegerSet::interval(100, 0, 100).unwrap();
        let report = is_essential_subset(&naturals, &[5], &GapParams::whole()).unwrap();
        assert!(!report.essential);
        assert_eq!(report.gap, 1);
    }

    #[test]
    fn empty_subset_is_never_essential() {
        let a = three_n_plus_one();
        let report = is_essential_subset(&a, &[], &GapParams::whole()).unwrap();
        assert!(!report.essential);
        assert_eq!(report.gap, 1);
    }

    #[test]
    fn non_member_subset_is_rejected() {
        let a = three_n_plus_one();
        assert!(matches!(
            is_essential_subset(&a, &[2], &GapParams::whole()),
            Err(Error::SubsetNotContained { element: 2 })
        ));
    }

    #[test]
    fn non_minimal_pair_is_not_essential() {
        // Removing {2, 3} from 6N0 ∪ {2, 3} forces gap 6, but each single
        // removal already forces a gap, so the pair is not minimal.
        let mut a = IntegerSet::new(60);
        a.insert_run(0, 60, 6).unwrap();
        a.insert(2);
        a.insert(3);
        let report = is_essential_subset(&a, &[2, 3], &GapParams::whole()).unwrap();
        assert_eq!(report.gap, 6);
        assert!(!report.essential);
        assert_eq!(report.minimality_witnesses.get("2"), Some(&3));
        assert_eq!(report.minimality_witnesses.get("3"), Some(&2));
    }

    #[test]
    fn enumerate_on_interval_is_empty() {
        let naturals = IntegerSet::interval(100, 0, 100).unwrap();
        let params = EnumParams::for_set(&naturals, 1, 3);
        assert!(enumerate_essential_subsets(&naturals, 3, &params).unwrap().is_empty());
    }

    #[test]
    fn enumerate_finds_the_spec_singleton() {
        let a = three_n_plus_one();
        let params = EnumParams::for_set(&a, 3, 1);
        let reports = enumerate_essential_subsets(&a, 1, &params).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].subset, vec![1]);
        assert_eq!(reports[0].gap, 3);
    }

    #[test]
    fn enumerate_finds_coprime_pair_structure() {
        let mut a = IntegerSet::new(60);
        a.insert_run(0, 60, 6).unwrap();
        a.insert(2);
        a.insert(3);
        let reports =
            enumerate_essential_subsets(&a, 2, &EnumParams::exhaustive(&a)).unwrap();
        let found: Vec<(Vec<u64>, u64)> =
            reports.iter().map(|r| (r.subset.clone(), r.gap)).collect();
        assert_eq!(found, vec![(vec![3], 2), (vec![2], 3)]);
        assert!(pairwise_coprime(&reports.iter().map(|r| r.gap).collect::<Vec<_>>()));
    }

    #[test]
    fn enumerate_respects_composite_gaps_via_prime_scan() {
        // Gap 6 is composite; the prime-2 scan still pins P = {1}.
        let mut a = IntegerSet::new(60);
        a.insert_run(0, 60, 6).unwrap();
        a.insert(1);
        let reports =
            enumerate_essential_subsets(&a, 1, &EnumParams::exhaustive(&a)).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].subset, vec![1]);
        assert_eq!(reports[0].gap, 6);
    }

    #[test]
    fn coprime_examples() {
        assert!(pairwise_coprime(&[2, 3, 5]));
        assert!(!pairwise_coprime(&[2, 4]));
        assert!(pairwise_coprime(&[3]));
        assert!(pairwise_coprime(&[]));
    }

    #[test]
    fn report_serializes_with_witness_map() {
        let a = three_n_plus_one();
        let report = is_essential_subset(&a, &[1], &GapParams::whole()).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"subset\":[1]"));
        assert!(json.contains("\"gap\":3"));
        assert!(json.contains("\"witnesses\":{\"\":1}"));
    }
}
