//! Recursive block plans for bases of order `h >= 2` built so that no finite
//! removal can destroy the basis property.
//!
//! A plan alternates intervals `I_n = [r_n, R_n]` with finite arithmetic
//! progressions `J_n = [s_n, S_n] ∩ (c_n + d_n Z)`, seeded with `I_1 = [0, 2]`
//! and extended by one `(J, I)` pair per step:
//!
//!   * the progression class `(c_n, d_n)` comes from the least unconsumed
//!     triple `(c, d, t)` with `d_n <= (h-1)(R_n - r_n) + 1`, under the
//!     well-order by `(d + t, d, c)`;
//!   * `s_n` is the first number past `R_n` in the class, and `S_n` the first
//!     number past `(h+n) * s_n` in the class;
//!   * the next interval is `[S_n + 1, h (S_n + 1)]`.
//!
//! The tag `t` never enters block arithmetic; it only makes every `(c, d)`
//! pair recur infinitely often in the schedule. Endpoints grow roughly like
//! `(h+n)`-fold products, so the plan stores them as big integers and the
//! verifiers refuse to materialize windows beyond a caller-supplied memory
//! budget.
//!
//! The verifiers check on finite prefixes:
//!   * claim 1 — the h-fold sumset of `A_n = I_1..I_n ∪ J_1..J_{n-1}` equals
//!     `[0, h R_n]` exactly;
//!   * claim 2 — every representation of `S_n` by at most `h+n` members uses
//!     an element of `J_n` (elements above `S_n` cannot appear, so the
//!     truncation is exact);
//!   * bounded E4 — at least `m` progressions land inside a probed residue
//!     class `c + dZ`;
//!   * spot checks — a materialized prefix minus arbitrary removals still
//!     meets probed residue classes.

use std::collections::HashSet;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::set::IntegerSet;

/// Default cap on materialized windows: 2^31 bits.
pub const DEFAULT_MEMORY_BITS: u64 = 1 << 31;

/// A scheduling triple `(c, d, t)`: residue class `c + dZ` with occurrence
/// tag `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub residue: u64,
    pub modulus: u64,
    pub tag: u64,
}

impl Triple {
    pub fn weight(&self) -> u64 {
        self.modulus + self.tag
    }
}

/// Well-ordering of all triples by `(d + t, d, c)`: every weight class is
/// finite, so the order has type omega and least-element queries against the
/// modulus filter always terminate.
#[derive(Debug, Clone, Default)]
pub struct TripleEnumerator {
    consumed: HashSet<Triple>,
}

impl TripleEnumerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_consumed(&self, t: &Triple) -> bool {
        self.consumed.contains(t)
    }

    pub fn consumed_len(&self) -> usize {
        self.consumed.len()
    }

    fn mark(&mut self, t: Triple) -> bool {
        self.consumed.insert(t)
    }

    /// Least unconsumed triple with modulus at most `max_modulus`. The
    /// modulus-2 triples are inexhaustible, so this always returns.
    fn select_least(&mut self, max_modulus: u64) -> Triple {
        let mut weight = 3;
        loop {
            for modulus in 2..weight {
                if modulus > max_modulus {
                    break;
                }
                let tag = weight - modulus;
                for residue in 0..modulus {
                    let t = Triple { residue, modulus, tag };
                    if !self.consumed.contains(&t) {
                        self.consumed.insert(t);
                        return t;
                    }
                }
            }
            weight += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigUint,
    pub hi: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progression {
    pub start: BigUint,
    pub end: BigUint,
    pub residue: u64,
    pub modulus: u64,
    /// The growth factor `h + n` this block was sized against.
    pub ratio: u64,
    pub tag: u64,
}

impl Progression {
    pub fn triple(&self) -> Triple {
        Triple { residue: self.residue, modulus: self.modulus, tag: self.tag }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Interval(Interval),
    Progression(Progression),
}

impl Block {
    fn lower(&self) -> &BigUint {
        match self {
            Block::Interval(i) => &i.lo,
            Block::Progression(p) => &p.start,
        }
    }

    fn upper(&self) -> &BigUint {
        match self {
            Block::Interval(i) => &i.hi,
            Block::Progression(p) => &p.end,
        }
    }
}

/// Outcome of a bounded E4 probe. Exhausting the block budget is
/// inconclusive, not a structural failure: a bigger budget may still verify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum E4Outcome {
    Verified { witness_blocks: Vec<usize> },
    Inconclusive { found: usize, budget: usize },
}

impl E4Outcome {
    pub fn is_verified(&self) -> bool {
        matches!(self, E4Outcome::Verified { .. })
    }
}

impl fmt::Display for E4Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E4Outcome::Verified { witness_blocks } => {
                write!(f, "verified (witness blocks {witness_blocks:?})")
            }
            E4Outcome::Inconclusive { found, budget } => {
                write!(f, "inconclusive ({found} witness(es) within {budget}-block budget)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeCount {
    pub residue: u64,
    pub modulus: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpotCheckReport {
    pub probes: Vec<ProbeCount>,
    pub min_count: usize,
    pub passed: bool,
}

/// Least value strictly above `x` congruent to `c` mod `d`.
fn next_congruent_above(x: &BigUint, c: u64, d: u64) -> BigUint {
    let base = x + 1u32;
    let rem = (&base % d).to_u64().expect("residue fits u64");
    base + (c + d - rem) % d
}

#[derive(Debug, Clone)]
pub struct BlockPlan {
    h: u32,
    blocks: Vec<Block>,
    enumerator: TripleEnumerator,
}

impl PartialEq for BlockPlan {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h && self.blocks == other.blocks
    }
}

impl BlockPlan {
    /// Seeds the plan with `I_1 = [0, 2]`; orders below 2 are rejected.
    pub fn new(h: u32) -> Result<Self> {
        if h < 2 {
            return Err(Error::PlanOrderTooSmall(h));
        }
        Ok(BlockPlan {
            h,
            blocks: vec![Block::Interval(Interval {
                lo: BigUint::from(0u32),
                hi: BigUint::from(2u32),
            })],
            enumerator: TripleEnumerator::new(),
        })
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_intervals(&self) -> usize {
        self.blocks.len() / 2 + 1
    }

    pub fn num_progressions(&self) -> usize {
        self.blocks.len() / 2
    }

    /// The n-th interval, 1-based.
    pub fn interval(&self, n: usize) -> Option<&Interval> {
        match self.blocks.get((n.checked_sub(1)?) * 2)? {
            Block::Interval(i) => Some(i),
            Block::Progression(_) => None,
        }
    }

    /// The n-th progression, 1-based.
    pub fn progression(&self, n: usize) -> Option<&Progression> {
        match self.blocks.get(n.checked_mul(2)?.checked_sub(1)?)? {
            Block::Interval(_) => None,
            Block::Progression(p) => Some(p),
        }
    }

    pub fn covered_end(&self) -> &BigUint {
        self.blocks.last().expect("plan is never empty").upper()
    }

    pub fn enumerator(&self) -> &TripleEnumerator {
        &self.enumerator
    }

    /// Appends the next `(J_n, I_{n+1})` pair.
    pub fn next_block(&mut self) {
        let (lo, hi) = match self.blocks.last() {
            Some(Block::Interval(i)) => (i.lo.clone(), i.hi.clone()),
            _ => unreachable!("plan always ends with an interval"),
        };
        let n = self.num_progressions() as u64 + 1;
        let max_d = ((&hi - &lo) * (self.h as u64 - 1) + 1u32)
            .to_u64()
            .unwrap_or(u64::MAX);
        let triple = self.enumerator.select_least(max_d);
        let start = next_congruent_above(&hi, triple.residue, triple.modulus);
        let ratio = self.h as u64 + n;
        let end = next_congruent_above(&(&start * ratio), triple.residue, triple.modulus);
        let next_lo = &end + 1u32;
        let next_hi = &next_lo * self.h as u64;
        self.blocks.push(Block::Progression(Progression {
            start,
            end,
            residue: triple.residue,
            modulus: triple.modulus,
            ratio,
            tag: triple.tag,
        }));
        self.blocks.push(Block::Interval(Interval { lo: next_lo, hi: next_hi }));
        debug_assert!(self.validate().is_ok());
    }

    /// Extends the plan until it has at least `n` progressions.
    pub fn extend_to(&mut self, n: usize) {
        while self.num_progressions() < n {
            self.next_block();
        }
    }

    /// Union of the blocks clipped to `[0, limit]`. The plan must already
    /// cover the window and the window must fit the memory budget.
    pub fn materialize(&self, limit: u64, mem_bits: u64) -> Result<IntegerSet> {
        let need_bits = limit.saturating_add(1);
        if need_bits > mem_bits {
            return Err(Error::MemoryBudget { need_bits, budget_bits: mem_bits });
        }
        if self.covered_end() < &BigUint::from(limit) {
            return Err(Error::InsufficientCoverage {
                covered: self.covered_end().to_string(),
                needed: limit,
            });
        }
        let mut set = IntegerSet::new(limit);
        let mut prev_end: Option<BigUint> = None;
        for block in &self.blocks {
            // The interleaving makes the union disjoint; keep it checked.
            if let Some(prev) = &prev_end {
                if block.lower() <= prev {
                    return Err(Error::PlanFormat(format!(
                        "blocks overlap near {}",
                        block.lower()
                    )));
                }
            }
            prev_end = Some(block.upper().clone());
            if block.lower() > &BigUint::from(limit) {
                break;
            }
            let lo = block.lower().to_u64().expect("bounded by limit");
            let hi = block.upper().to_u64().unwrap_or(u64::MAX).min(limit);
            match block {
                Block::Interval(_) => set.insert_run(lo, hi, 1)?,
                Block::Progression(p) => set.insert_run(lo, hi, p.modulus)?,
            }
        }
        Ok(set)
    }

    fn window_to_u64(value: &BigUint, mem_bits: u64) -> Result<u64> {
        match value.to_u64() {
            Some(v) if v.saturating_add(1) <= mem_bits => Ok(v),
            _ => Err(Error::MemoryBudget {
                need_bits: value.to_u64().map(|v| v.saturating_add(1)).unwrap_or(u64::MAX),
                budget_bits: mem_bits,
            }),
        }
    }

    /// Exact check that `h A_n = [0, h R_n]` where `A_n` is the prefix
    /// through `I_n` (all blocks at or below `R_n`).
    pub fn verify_claim1(&self, n: usize, mem_bits: u64) -> Result<bool> {
        let interval = self.interval(n).ok_or(Error::PlanTooShort {
            kind: "interval",
            have: self.num_intervals(),
            need: n,
        })?;
        let window = Self::window_to_u64(&(&interval.hi * self.h as u64), mem_bits)?;
        let r_n = interval.hi.to_u64().expect("below window");
        let prefix = self.materialize(r_n, mem_bits)?;
        let sums = prefix.h_fold_sumset(self.h, window)?;
        Ok(sums.first_missing_in(0, window).is_none())
    }

    /// Exact check that every representation of `S_n` by at most `h + n`
    /// members of the prefix uses an element of `J_n`: equivalently, the
    /// prefix with `J_n` deleted admits no such representation at all.
    pub fn verify_claim2(&self, n: usize, mem_bits: u64) -> Result<bool> {
        let progression = self.progression(n).ok_or(Error::PlanTooShort {
            kind: "progression",
            have: self.num_progressions(),
            need: n,
        })?;
        let target = Self::window_to_u64(&progression.end, mem_bits)?;
        let start = progression.start.to_u64().expect("below target");
        let mut rest = self.materialize(target, mem_bits)?;
        rest.remove_run(start, target, progression.modulus);
        let size_bound = self.h as usize + n;
        let mut dodged = false;
        rest.visit_representations(target, size_bound, |_| {
            dodged = true;
            ControlFlow::Break(())
        })?;
        Ok(!dodged)
    }

    /// Counts progressions lying inside `residue + modulus*Z` (sufficient:
    /// `modulus | d_n` and `c_n ≡ residue`), extending the plan up to
    /// `max_blocks` progressions until `min_hits` are found.
    pub fn verify_e4(
        &mut self,
        residue: u64,
        modulus: u64,
        min_hits: usize,
        max_blocks: usize,
    ) -> Result<E4Outcome> {
        if modulus < 2 {
            return Err(Error::ModulusTooSmall { modulus });
        }
        if residue >= modulus {
            return Err(Error::ResidueOutOfRange { residue, modulus });
        }
        let hits = |p: &Progression| p.modulus % modulus == 0 && p.residue % modulus == residue;
        let mut witnesses: Vec<usize> = (1..=self.num_progressions())
            .filter(|&n| hits(self.progression(n).expect("counted")))
            .collect();
        while witnesses.len() < min_hits && self.num_progressions() < max_blocks {
            self.next_block();
            let n = self.num_progressions();
            if hits(self.progression(n).expect("just appended")) {
                witnesses.push(n);
            }
        }
        if witnesses.len() >= min_hits {
            witnesses.truncate(min_hits.max(witnesses.len()));
            Ok(E4Outcome::Verified { witness_blocks: witnesses })
        } else {
            Ok(E4Outcome::Inconclusive { found: witnesses.len(), budget: max_blocks })
        }
    }

    /// Checks that the materialized prefix minus `removals` still has at
    /// least `min_count` elements in every probed class `c + dZ`.
    pub fn devolved_spot_check(
        &self,
        removals: &[u64],
        probes: &[(u64, u64)],
        min_count: usize,
        limit: u64,
        mem_bits: u64,
    ) -> Result<SpotCheckReport> {
        for &(residue, modulus) in probes {
            if modulus < 2 {
                return Err(Error::ModulusTooSmall { modulus });
            }
            if residue >= modulus {
                return Err(Error::ResidueOutOfRange { residue, modulus });
            }
        }
        let set = self.materialize(limit, mem_bits)?.minus(removals);
        let mut counts = vec![0usize; probes.len()];
        for e in set.iter() {
            for (i, &(residue, modulus)) in probes.iter().enumerate() {
                if e % modulus == residue {
                    counts[i] += 1;
                }
            }
        }
        let probes = probes
            .iter()
            .zip(&counts)
            .map(|(&(residue, modulus), &count)| ProbeCount { residue, modulus, count })
            .collect::<Vec<_>>();
        let passed = probes.iter().all(|p| p.count >= min_count);
        Ok(SpotCheckReport { probes, min_count, passed })
    }

    /// Structural invariants: alternation, `r_1 = 0`, strict interleaving
    /// `r_n < R_n < s_n < S_n < r_{n+1}`, the chaining rules, the modulus
    /// admissibility bound, the growth inequality `S_n > (h+n) s_n`, and
    /// uniqueness of the scheduling triples.
    pub fn validate(&self) -> Result<()> {
        validate_blocks(self.h, &self.blocks).map(|_| ())
    }

    /// Canonical interchange form, deterministic byte-for-byte.
    pub fn to_json(&self) -> String {
        let number = |b: &BigUint| {
            Number::from_str(&b.to_str_radix(10)).expect("decimal digits parse")
        };
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|block| {
                let mut m = Map::new();
                match block {
                    Block::Interval(i) => {
                        m.insert("kind".into(), Value::String("I".into()));
                        m.insert("r".into(), Value::Number(number(&i.lo)));
                        m.insert("R".into(), Value::Number(number(&i.hi)));
                    }
                    Block::Progression(p) => {
                        m.insert("kind".into(), Value::String("J".into()));
                        m.insert("s".into(), Value::Number(number(&p.start)));
                        m.insert("S".into(), Value::Number(number(&p.end)));
                        m.insert("c".into(), Value::Number(p.residue.into()));
                        m.insert("d".into(), Value::Number(p.modulus.into()));
                        m.insert("q".into(), Value::Number(p.ratio.into()));
                        m.insert("t".into(), Value::Number(p.tag.into()));
                    }
                }
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("h".into(), Value::Number(self.h.into()));
        top.insert("blocks".into(), Value::Array(blocks));
        let mut out = serde_json::to_string_pretty(&Value::Object(top)).expect("plan serializes");
        out.push('\n');
        out
    }

    /// Parses and fully re-validates a plan. A plan ending in a progression
    /// gets its implied trailing interval appended.
    pub fn from_json(input: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(input).map_err(|e| Error::PlanFormat(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::PlanFormat("top level must be an object".into()))?;
        let h = obj
            .get("h")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::PlanFormat("missing integer field \"h\"".into()))?;
        let h = u32::try_from(h).map_err(|_| Error::PlanFormat("h out of range".into()))?;
        if h < 2 {
            return Err(Error::PlanOrderTooSmall(h));
        }
        let raw_blocks = obj
            .get("blocks")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::PlanFormat("missing array field \"blocks\"".into()))?;

        let big = |m: &Map<String, Value>, key: &str, idx: usize| -> Result<BigUint> {
            let num = m
                .get(key)
                .and_then(|v| v.as_number())
                .ok_or_else(|| Error::PlanFormat(format!("block {idx}: missing number \"{key}\"")))?;
            BigUint::from_str(&num.to_string()).map_err(|_| {
                Error::PlanFormat(format!("block {idx}: \"{key}\" is not a non-negative integer"))
            })
        };
        let small = |m: &Map<String, Value>, key: &str, idx: usize| -> Result<u64> {
            big(m, key, idx)?.to_u64().ok_or_else(|| {
                Error::PlanFormat(format!("block {idx}: \"{key}\" does not fit in 64 bits"))
            })
        };

        let mut blocks = Vec::with_capacity(raw_blocks.len());
        for (idx, raw) in raw_blocks.iter().enumerate() {
            let m = raw
                .as_object()
                .ok_or_else(|| Error::PlanFormat(format!("block {idx} must be an object")))?;
            match m.get("kind").and_then(|v| v.as_str()) {
                Some("I") => blocks.push(Block::Interval(Interval {
                    lo: big(m, "r", idx)?,
                    hi: big(m, "R", idx)?,
                })),
                Some("J") => blocks.push(Block::Progression(Progression {
                    start: big(m, "s", idx)?,
                    end: big(m, "S", idx)?,
                    residue: small(m, "c", idx)?,
                    modulus: small(m, "d", idx)?,
                    ratio: small(m, "q", idx)?,
                    tag: small(m, "t", idx)?,
                })),
                _ => {
                    return Err(Error::PlanFormat(format!(
                        "block {idx}: \"kind\" must be \"I\" or \"J\""
                    )))
                }
            }
        }

        if let Some(Block::Progression(p)) = blocks.last() {
            let lo = &p.end + 1u32;
            let hi = &lo * h as u64;
            blocks.push(Block::Interval(Interval { lo, hi }));
        }

        let enumerator = validate_blocks(h, &blocks)?;
        Ok(BlockPlan { h, blocks, enumerator })
    }
}

/// Full structural walk; returns the reconstructed enumerator state.
fn validate_blocks(h: u32, blocks: &[Block]) -> Result<TripleEnumerator> {
    let fail = |msg: String| Err(Error::PlanFormat(msg));
    let mut enumerator = TripleEnumerator::new();
    let first = match blocks.first() {
        Some(Block::Interval(i)) => i,
        _ => return fail("plan must start with an interval".into()),
    };
    if first.lo != BigUint::from(0u32) {
        return fail("the first interval must start at 0".into());
    }
    let mut prev_interval = first;
    let mut progressions = 0usize;
    for (idx, pair) in blocks.windows(2).enumerate() {
        match pair {
            [Block::Interval(i), Block::Progression(p)] => {
                progressions += 1;
                let n = progressions as u64;
                if i.lo >= i.hi {
                    return fail(format!("interval {idx} is not a proper interval"));
                }
                if p.modulus < 2 {
                    return fail(format!("block {}: modulus below 2", idx + 1));
                }
                if p.residue >= p.modulus {
                    return fail(format!("block {}: residue out of range", idx + 1));
                }
                let max_d = (&i.hi - &i.lo) * (h as u64 - 1) + 1u32;
                if BigUint::from(p.modulus) > max_d {
                    return fail(format!("block {}: modulus exceeds admissibility bound", idx + 1));
                }
                if p.ratio != h as u64 + n {
                    return fail(format!("block {}: growth factor must be h + n", idx + 1));
                }
                let s_expected = next_congruent_above(&i.hi, p.residue, p.modulus);
                if p.start != s_expected {
                    return fail(format!(
                        "block {}: start must be the first value past the interval in its class",
                        idx + 1
                    ));
                }
                let end_expected = next_congruent_above(&(&p.start * p.ratio), p.residue, p.modulus);
                if p.end != end_expected {
                    return fail(format!(
                        "block {}: end must be the first value past {} times the start in its class",
                        idx + 1,
                        p.ratio
                    ));
                }
                if !enumerator.mark(p.triple()) {
                    return fail(format!("block {}: duplicate scheduling triple", idx + 1));
                }
                prev_interval = i;
            }
            [Block::Progression(p), Block::Interval(i)] => {
                if i.lo != &p.end + 1u32 {
                    return fail(format!("block {}: interval must start right after the progression", idx + 1));
                }
                if i.hi != &i.lo * h as u64 {
                    return fail(format!("block {}: interval end must be h times its start", idx + 1));
                }
                let _ = prev_interval;
            }
            _ => return fail(format!("blocks {idx} and {} do not alternate", idx + 1)),
        }
    }
    Ok(enumerator)
}
