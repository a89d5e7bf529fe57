//! Oracle equivalence for the sumset kernel: the run-smeared bitset fold
//! must agree with literal enumeration of h-tuples on every small instance.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use proptest::prelude::*;

use basislab_core::IntegerSet;

/// Independent oracle: all sums of exactly `h` members (with repetition),
/// clipped to the window. Members must be sorted ascending.
fn naive_sumset(members: &[u64], h: u32, limit: u64) -> BTreeSet<u64> {
    fn rec(members: &[u64], left: u32, acc: u64, limit: u64, out: &mut BTreeSet<u64>) {
        if left == 0 {
            out.insert(acc);
            return;
        }
        for &m in members {
            if acc + m > limit {
                break;
            }
            rec(members, left - 1, acc + m, limit, out);
        }
    }
    let mut out = BTreeSet::new();
    rec(members, h, 0, limit, &mut out);
    out
}

fn arb_set_with_zero(max_limit: u64, max_len: usize) -> impl Strategy<Value = IntegerSet> {
    (2..=max_limit, proptest::collection::btree_set(1..=max_limit, 0..max_len)).prop_map(
        move |(limit, extra)| {
            let members: Vec<u64> =
                std::iter::once(0).chain(extra.into_iter().filter(|&e| e <= limit)).collect();
            IntegerSet::from_members(limit, members).unwrap()
        },
    )
}

proptest! {
    /// Bitset fold equals tuple enumeration for |A| <= 12, h <= 4.
    #[test]
    fn fold_matches_naive(set in arb_set_with_zero(60, 11), h in 1u32..=4, limit in 0u64..=120) {
        let members: Vec<u64> = set.iter().collect();
        prop_assume!(members.len() <= 12);
        let fast: Vec<u64> = set.h_fold_sumset(h, limit).unwrap().iter().collect();
        let slow: Vec<u64> = naive_sumset(&members, h, limit).into_iter().collect();
        prop_assert_eq!(fast, slow);
    }

    /// A ⊆ B implies hA ⊆ hB on any shared window.
    #[test]
    fn monotone_in_the_set(seed in arb_set_with_zero(60, 10), extra in proptest::collection::vec(1u64..=60, 0..6), h in 1u32..=4) {
        let mut bigger = seed.clone();
        for e in extra {
            if e <= bigger.limit() {
                bigger.insert(e);
            }
        }
        let sa = seed.h_fold_sumset(h, 100).unwrap();
        let sb = bigger.h_fold_sumset(h, 100).unwrap();
        for v in sa.iter() {
            prop_assert!(sb.contains(v), "{v} lost when growing the set");
        }
    }

    /// With 0 in A, fewer folds can only shrink the sumset.
    #[test]
    fn nested_in_the_fold_count(set in arb_set_with_zero(60, 10), h in 1u32..=3) {
        let small = set.h_fold_sumset(h, 100).unwrap();
        let large = set.h_fold_sumset(h + 1, 100).unwrap();
        for v in small.iter() {
            prop_assert!(large.contains(v), "{v} lost when adding a fold");
        }
    }

    /// Representations of x with at most b parts exist iff x lands in the
    /// b-fold sumset.
    #[test]
    fn representations_match_membership(set in arb_set_with_zero(40, 8), x in 0u64..=40, b in 1usize..=4) {
        prop_assume!(x <= set.limit());
        let mut any = false;
        set.visit_representations(x, b, |_| {
            any = true;
            ControlFlow::Break(())
        }).unwrap();
        let sums = set.h_fold_sumset(b as u32, x).unwrap();
        prop_assert_eq!(any, sums.contains(x));
    }

    /// Both serialization formats reproduce the set exactly.
    #[test]
    fn formats_round_trip(set in arb_set_with_zero(200, 40)) {
        let from_text = IntegerSet::from_text(&set.to_text()).unwrap();
        prop_assert_eq!(&from_text, &set);
        let from_json = IntegerSet::from_json(&set.to_json()).unwrap();
        prop_assert_eq!(&from_json, &set);
    }

    /// Run decomposition is a partition: disjoint, complete, maximal-step.
    #[test]
    fn runs_partition_the_set(set in arb_set_with_zero(200, 40)) {
        let mut rebuilt = IntegerSet::new(set.limit());
        let mut total = 0u64;
        for run in set.runs() {
            rebuilt.insert_run(run.start, run.last(), run.step).unwrap();
            total += run.count;
        }
        prop_assert_eq!(total as usize, set.len(), "runs overlap");
        prop_assert_eq!(rebuilt, set.clone());
    }
}

#[test]
fn fold_matches_naive_on_structured_sets() {
    // Dense interval, progression, and the mixed prefix shape the plans use.
    let cases: Vec<IntegerSet> = vec![
        IntegerSet::interval(9, 0, 9).unwrap(),
        {
            let mut s = IntegerSet::new(30);
            s.insert_run(0, 30, 3).unwrap();
            s
        },
        {
            let mut s = IntegerSet::new(30);
            s.insert_run(0, 2, 1).unwrap();
            s.insert_run(4, 14, 2).unwrap();
            s.insert_run(15, 30, 1).unwrap();
            s
        },
    ];
    for set in &cases {
        let members: Vec<u64> = set.iter().collect();
        for h in 1..=3u32 {
            for limit in [5u64, 31, 64, 65, 90] {
                let fast: Vec<u64> = set.h_fold_sumset(h, limit).unwrap().iter().collect();
                let slow: Vec<u64> = naive_sumset(&members, h, limit).into_iter().collect();
                assert_eq!(fast, slow, "h={h} limit={limit} set={set:?}");
            }
        }
    }
}

#[test]
fn fold_crosses_word_boundaries_cleanly() {
    // Shifts of 63/64/65 bits exercise the carry paths in the kernel.
    let set = IntegerSet::from_members(130, [0, 63, 64, 65, 127, 128]).unwrap();
    let members: Vec<u64> = set.iter().collect();
    for h in 1..=3u32 {
        for limit in [128u64, 200, 256, 300] {
            let fast: Vec<u64> = set.h_fold_sumset(h, limit).unwrap().iter().collect();
            let slow: Vec<u64> = naive_sumset(&members, h, limit).into_iter().collect();
            assert_eq!(fast, slow, "h={h} limit={limit}");
        }
    }
}
