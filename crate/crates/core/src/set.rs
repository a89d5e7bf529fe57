//! Dense integer sets over a finite window `[0, limit]`.
//!
//! `IntegerSet` is the universal finite-truncation representation used by
//! every other module: a bit-indexed characteristic function plus the
//! inclusive window bound. The sumset kernel decomposes the set into
//! maximal constant-gap runs and applies doubling shift-ors, so interval
//! and progression shaped sets fold in `O(words * log run_len)` instead of
//! one shift per element.

use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the dense representation, independent of the caller-facing
/// memory budgets: guards against absurd window requests from parsed files.
pub const MAX_DENSE_BITS: u64 = 1 << 34;

#[derive(Clone, PartialEq, Eq)]
pub struct IntegerSet {
    limit: u64,
    words: Vec<u64>,
}

/// A maximal constant-gap run `{start, start+step, ...}` with `count` members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: u64,
    pub step: u64,
    pub count: u64,
}

impl Run {
    pub fn last(&self) -> u64 {
        self.start + (self.count - 1) * self.step
    }
}

/// A multiset of nonzero summands witnessing `target` as a bounded sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Representation {
    pub target: u64,
    /// Sorted ascending, with multiplicity.
    pub parts: Vec<u64>,
    pub size_bound: usize,
}

impl Representation {
    /// True iff the parts are nonzero members of `set`, within the size
    /// bound, and sum to the target.
    pub fn verify(&self, set: &IntegerSet) -> bool {
        self.parts.len() <= self.size_bound
            && self.parts.iter().all(|&p| p > 0 && set.contains(p))
            && self.parts.iter().sum::<u64>() == self.target
    }
}

#[derive(Serialize, Deserialize)]
struct SetJson {
    limit: u64,
    runs: Vec<[u64; 3]>,
}

fn words_for(limit: u64) -> usize {
    (limit / 64 + 1) as usize
}

impl IntegerSet {
    /// Empty set over `[0, limit]`.
    pub fn new(limit: u64) -> Self {
        assert!(
            limit < MAX_DENSE_BITS,
            "window [0, {limit}] too large for a dense set"
        );
        IntegerSet {
            limit,
            words: vec![0; words_for(limit)],
        }
    }

    pub fn from_members<I: IntoIterator<Item = u64>>(limit: u64, members: I) -> Result<Self> {
        let mut set = IntegerSet::new(limit);
        for m in members {
            if m > limit {
                return Err(Error::ElementExceedsLimit { element: m, limit });
            }
            set.words[(m / 64) as usize] |= 1 << (m % 64);
        }
        Ok(set)
    }

    /// The full interval `[lo, hi]` inside a window `[0, limit]`.
    pub fn interval(limit: u64, lo: u64, hi: u64) -> Result<Self> {
        let mut set = IntegerSet::new(limit);
        set.insert_run(lo, hi, 1)?;
        Ok(set)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, x: u64) -> bool {
        x <= self.limit && self.words[(x / 64) as usize] & (1 << (x % 64)) != 0
    }

    /// Panics if `x` exceeds the window; out-of-window members would break
    /// every downstream invariant.
    pub fn insert(&mut self, x: u64) {
        assert!(x <= self.limit, "element {x} exceeds window limit {}", self.limit);
        self.words[(x / 64) as usize] |= 1 << (x % 64);
    }

    pub fn remove(&mut self, x: u64) {
        if x <= self.limit {
            self.words[(x / 64) as usize] &= !(1 << (x % 64));
        }
    }

    /// Inserts `{a, a+step, ...} ∩ [a, b]`.
    pub fn insert_run(&mut self, a: u64, b: u64, step: u64) -> Result<()> {
        if step == 0 {
            return Err(Error::SetParse {
                line: 0,
                message: "run step must be positive".into(),
            });
        }
        if b > self.limit {
            return Err(Error::ElementExceedsLimit { element: b, limit: self.limit });
        }
        let mut v = a;
        while v <= b {
            self.words[(v / 64) as usize] |= 1 << (v % 64);
            match v.checked_add(step) {
                Some(next) => v = next,
                None => break,
            }
        }
        Ok(())
    }

    pub fn remove_run(&mut self, a: u64, b: u64, step: u64) {
        let mut v = a;
        while v <= b.min(self.limit) {
            self.remove(v);
            match v.checked_add(step) {
                Some(next) => v = next,
                None => break,
            }
        }
    }

    /// Set difference with an explicit list of elements.
    pub fn minus(&self, removals: &[u64]) -> Self {
        let mut out = self.clone();
        for &r in removals {
            out.remove(r);
        }
        out
    }

    /// Same members clipped to a new window `[0, new_limit]`.
    pub fn resized(&self, new_limit: u64) -> Self {
        let mut out = IntegerSet::new(new_limit);
        let n = out.words.len().min(self.words.len());
        out.words[..n].copy_from_slice(&self.words[..n]);
        out.mask_tail();
        out
    }

    pub fn iter(&self) -> Members<'_> {
        self.iter_from(0)
    }

    /// Ascending iteration over members `>= start`.
    pub fn iter_from(&self, start: u64) -> Members<'_> {
        let word_idx = (start / 64) as usize;
        let current = if word_idx < self.words.len() {
            self.words[word_idx] & (!0u64).checked_shl((start % 64) as u32).unwrap_or(0)
        } else {
            0
        };
        Members {
            words: &self.words,
            word_idx,
            current,
        }
    }

    pub fn first(&self) -> Option<u64> {
        self.iter().next()
    }

    pub fn last(&self) -> Option<u64> {
        for (i, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(i as u64 * 64 + 63 - w.leading_zeros() as u64);
            }
        }
        None
    }

    /// First element of `[lo, hi]` missing from the set, if any.
    pub fn first_missing_in(&self, lo: u64, hi: u64) -> Option<u64> {
        let hi = hi.min(self.limit);
        let mut x = lo;
        while x <= hi {
            let w = !self.words[(x / 64) as usize] & (!0u64 << (x % 64));
            if w != 0 {
                let candidate = (x / 64) * 64 + w.trailing_zeros() as u64;
                if candidate <= hi {
                    return Some(candidate);
                }
                return None;
            }
            x = (x / 64 + 1) * 64;
        }
        None
    }

    /// Greedy decomposition into maximal constant-gap runs.
    pub fn runs(&self) -> Vec<Run> {
        let mut runs = Vec::new();
        let mut current: Option<Run> = None;
        let mut prev = 0u64;
        for e in self.iter() {
            match current.as_mut() {
                None => current = Some(Run { start: e, step: 1, count: 1 }),
                Some(run) if run.count == 1 => {
                    run.step = e - prev;
                    run.count = 2;
                }
                Some(run) if e - prev == run.step => run.count += 1,
                Some(run) => {
                    runs.push(*run);
                    current = Some(Run { start: e, step: 1, count: 1 });
                }
            }
            prev = e;
        }
        if let Some(run) = current {
            runs.push(run);
        }
        runs
    }

    fn mask_tail(&mut self) {
        let top = self.limit % 64;
        let mask = if top == 63 { !0u64 } else { (1u64 << (top + 1)) - 1 };
        if let Some(w) = self.words.last_mut() {
            *w &= mask;
        }
    }

    /// The h-fold sumset `{a_1 + ... + a_h : a_i ∈ self}` clipped to
    /// `[0, limit]`. Requires `0 ∈ self`, which makes the result equal to
    /// all sums of at most `h` nonzero members together with 0.
    pub fn h_fold_sumset(&self, h: u32, limit: u64) -> Result<IntegerSet> {
        if h == 0 {
            return Err(Error::OrderZero);
        }
        if !self.contains(0) {
            return Err(Error::ZeroMissing);
        }
        let base = self.resized(limit);
        let runs = base.runs();
        let mut acc = base.clone();
        let mut scratch = vec![0u64; acc.words.len()];
        for _ in 1..h {
            acc = add_runs(&acc, &runs, limit, &mut scratch);
        }
        Ok(acc)
    }

    /// Finite-truncation basis test: `[lo, hi] ⊆ h_fold_sumset(self, h, hi)`.
    /// `lo` is the exceptional-set allowance below which gaps are tolerated.
    pub fn is_basis_window(&self, h: u32, lo: u64, hi: u64) -> Result<bool> {
        if lo > hi {
            return Err(Error::WindowEmpty { lo, hi });
        }
        if hi > self.limit {
            return Err(Error::WindowExceedsLimit { lo, hi, limit: self.limit });
        }
        let sums = self.h_fold_sumset(h, hi)?;
        Ok(sums.first_missing_in(lo, hi).is_none())
    }

    /// Complete, duplicate-free list of multisets of at most `size_bound`
    /// nonzero members summing to `target`.
    pub fn representations(&self, target: u64, size_bound: usize) -> Result<Vec<Representation>> {
        let mut out = Vec::new();
        self.visit_representations(target, size_bound, |parts| {
            let mut parts = parts.to_vec();
            parts.reverse();
            out.push(Representation { target, parts, size_bound });
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    /// Visits every representation without materializing the list; parts are
    /// passed sorted descending. Returning `Break` stops the walk early.
    pub fn visit_representations<F>(&self, target: u64, size_bound: usize, mut f: F) -> Result<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        if size_bound == 0 {
            return Err(Error::SizeBoundZero);
        }
        if target > self.limit {
            return Err(Error::TargetExceedsLimit { target, limit: self.limit });
        }
        let mut desc: Vec<u64> = self.iter().filter(|&m| m != 0).collect();
        desc.reverse();
        let mut parts = Vec::with_capacity(size_bound);
        descend(&desc, 0, target, size_bound, &mut parts, &mut f);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# limit: {}\n", self.limit);
        for e in self.iter() {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses one decimal integer per line, strictly ascending, `#` comments
    /// allowed. A `# limit: N` comment pins the window; otherwise the window
    /// ends at the largest member.
    pub fn from_text(input: &str) -> Result<Self> {
        let mut members: Vec<u64> = Vec::new();
        let mut explicit_limit: Option<(u64, usize)> = None;
        for (idx, raw) in input.lines().enumerate() {
            let line = idx + 1;
            let code = match raw.find('#') {
                Some(pos) => {
                    let comment = raw[pos + 1..].trim();
                    if let Some(rest) = comment.strip_prefix("limit:") {
                        let v = rest.trim().parse::<u64>().map_err(|e| Error::SetParse {
                            line,
                            message: format!("bad limit comment: {e}"),
                        })?;
                        explicit_limit = Some((v, line));
                    }
                    &raw[..pos]
                }
                None => raw,
            };
            let code = code.trim();
            if code.is_empty() {
                continue;
            }
            let v = code.parse::<u64>().map_err(|e| Error::SetParse {
                line,
                message: format!("expected a decimal integer: {e}"),
            })?;
            if let Some(&last) = members.last() {
                if v <= last {
                    return Err(Error::SetParse {
                        line,
                        message: format!("elements must be strictly ascending ({v} after {last})"),
                    });
                }
            }
            members.push(v);
        }
        let max = members.last().copied().unwrap_or(0);
        let limit = match explicit_limit {
            Some((v, line)) => {
                if v < max {
                    return Err(Error::SetParse {
                        line,
                        message: format!("declared limit {v} is below the largest element {max}"),
                    });
                }
                v
            }
            None => max,
        };
        if limit >= MAX_DENSE_BITS {
            return Err(Error::MemoryBudget { need_bits: limit.saturating_add(1), budget_bits: MAX_DENSE_BITS });
        }
        IntegerSet::from_members(limit, members)
    }

    pub fn to_json(&self) -> String {
        let runs = self
            .runs()
            .iter()
            .map(|r| [r.start, r.last(), r.step])
            .collect();
        serde_json::to_string(&SetJson { limit: self.limit, runs }).expect("set serialization")
    }

    /// Parses `{"limit": N, "runs": [[a, b, step], ...]}` where each run
    /// means `{a, a+step, ...} ∩ [a, b]`.
    pub fn from_json(input: &str) -> Result<Self> {
        let parsed: SetJson = serde_json::from_str(input).map_err(|e| Error::SetParse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if parsed.limit >= MAX_DENSE_BITS {
            return Err(Error::MemoryBudget {
                need_bits: parsed.limit.saturating_add(1),
                budget_bits: MAX_DENSE_BITS,
            });
        }
        let mut set = IntegerSet::new(parsed.limit);
        for (i, &[a, b, step]) in parsed.runs.iter().enumerate() {
            if a > b {
                return Err(Error::SetParse {
                    line: 0,
                    message: format!("run {i}: start {a} exceeds end {b}"),
                });
            }
            set.insert_run(a, b, step).map_err(|e| match e {
                Error::ElementExceedsLimit { element, limit } => Error::SetParse {
                    line: 0,
                    message: format!("run {i}: element {element} exceeds limit {limit}"),
                },
                other => other,
            })?;
        }
        Ok(set)
    }
}

impl fmt::Debug for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntegerSet(limit={}, len={})", self.limit, self.len())?;
        if self.len() <= 32 {
            write!(f, " {:?}", self.iter().collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

pub struct Members<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Members<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
        let bit = self.current.trailing_zeros() as u64;
        self.current &= self.current - 1;
        Some(self.word_idx as u64 * 64 + bit)
    }
}

/// `x + A` clipped to `[0, limit]`, with `A` given by its run decomposition.
/// Each run contributes `OR_j (x << (start + j*step))`, built with doubling
/// shift-ors so the cost is logarithmic in the run length.
fn add_runs(x: &IntegerSet, runs: &[Run], limit: u64, scratch: &mut Vec<u64>) -> IntegerSet {
    let mut acc = IntegerSet::new(limit);
    scratch.resize(acc.words.len(), 0);
    for run in runs {
        if run.start > limit {
            break;
        }
        shift_into(&x.words, run.start, scratch);
        let mut reps = 1u64;
        while reps < run.count {
            let take = reps.min(run.count - reps);
            let bits = take * run.step;
            if bits >= scratch.len() as u64 * 64 {
                break;
            }
            shift_or_in_place(scratch, bits);
            reps += take;
        }
        for (a, s) in acc.words.iter_mut().zip(scratch.iter()) {
            *a |= s;
        }
    }
    acc.mask_tail();
    acc
}

/// `dst = src << bits` over word slices (dst fully overwritten).
fn shift_into(src: &[u64], bits: u64, dst: &mut [u64]) {
    dst.fill(0);
    let word_off = (bits / 64) as usize;
    let bit_off = bits % 64;
    if word_off >= dst.len() {
        return;
    }
    for i in word_off..dst.len() {
        let j = i - word_off;
        if j > src.len() {
            break;
        }
        let mut w = if j < src.len() { src[j] << bit_off } else { 0 };
        if bit_off > 0 && j >= 1 && j - 1 < src.len() {
            w |= src[j - 1] >> (64 - bit_off);
        }
        dst[i] = w;
    }
}

/// `buf |= buf << bits`, in place. Iterates high-to-low so sources are read
/// before they are overwritten.
fn shift_or_in_place(buf: &mut [u64], bits: u64) {
    if bits == 0 {
        return;
    }
    let word_off = (bits / 64) as usize;
    let bit_off = bits % 64;
    if word_off >= buf.len() {
        return;
    }
    for i in (word_off..buf.len()).rev() {
        let j = i - word_off;
        let mut w = buf[j] << bit_off;
        if bit_off > 0 && j >= 1 {
            w |= buf[j - 1] >> (64 - bit_off);
        }
        buf[i] |= w;
    }
}

fn descend<F>(desc: &[u64], from: usize, remaining: u64, slots: usize, parts: &mut Vec<u64>, f: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[u64]) -> ControlFlow<()>,
{
    if remaining == 0 {
        return f(parts);
    }
    if slots == 0 {
        return ControlFlow::Continue(());
    }
    // First candidate small enough to matter; the slice is descending.
    let start = from + desc[from..].partition_point(|&m| m > remaining);
    for idx in start..desc.len() {
        let m = desc[idx];
        // Everything below is even smaller, so no suffix can reach the target.
        if m * (slots as u64) < remaining {
            break;
        }
        parts.push(m);
        let flow = descend(desc, idx, remaining - m, slots - 1, parts, f);
        parts.pop();
        flow?;
    }
    ControlFlow::Continue(())
}
