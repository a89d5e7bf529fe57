//! Exact evaluation of the primorial bound on essential-subset counts.
//!
//! `phi_bound(k, h)` returns the largest `phi` with
//! `(k*phi + 1)^h >= p_phi#` (the product of the first `phi` primes), found
//! by an upward scan in exact big-integer arithmetic. Termination: the
//! primorial is at least `2^phi`, and once `2^phi` alone exceeds the left
//! side it keeps exceeding it, so the scan can stop there.

use std::sync::RwLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

static PRIMES: RwLock<Vec<u64>> = RwLock::new(Vec::new());

fn sieve(bound: usize) -> Vec<u64> {
    let mut composite = vec![false; bound + 1];
    let mut primes = Vec::new();
    for p in 2..=bound {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= bound {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

fn grow_cache(need: impl Fn(&[u64]) -> bool) {
    let mut cache = PRIMES.write().expect("prime cache poisoned");
    if need(&cache) {
        return;
    }
    let mut bound = 1 << 10;
    loop {
        let primes = sieve(bound);
        if need(&primes) {
            *cache = primes;
            return;
        }
        bound *= 2;
    }
}

/// The first `n` primes, 2 first.
pub fn primes_first(n: usize) -> Vec<u64> {
    {
        let cache = PRIMES.read().expect("prime cache poisoned");
        if cache.len() >= n {
            return cache[..n].to_vec();
        }
    }
    grow_cache(|primes| primes.len() >= n);
    PRIMES.read().expect("prime cache poisoned")[..n].to_vec()
}

/// All primes `<= bound`, ascending.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    let done = |primes: &[u64]| primes.last().copied().unwrap_or(0) > bound;
    {
        let cache = PRIMES.read().expect("prime cache poisoned");
        if done(&cache) {
            let idx = cache.partition_point(|&p| p <= bound);
            return cache[..idx].to_vec();
        }
    }
    grow_cache(done);
    let cache = PRIMES.read().expect("prime cache poisoned");
    let idx = cache.partition_point(|&p| p <= bound);
    cache[..idx].to_vec()
}

/// The n-th prime, 1-indexed.
pub fn nth_prime(n: u64) -> u64 {
    primes_first(n as usize)[n as usize - 1]
}

/// Product of the first `n` primes; the empty product for `n = 0`.
pub fn primorial(n: u64) -> BigUint {
    primes_first(n as usize)
        .iter()
        .fold(BigUint::one(), |acc, &p| acc * p)
}

fn serialize_biguint<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

/// The extracted bound together with the evidence for its maximality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundResult {
    pub k: u64,
    pub h: u32,
    /// Largest phi with `(k*phi + 1)^h >= p_phi#`.
    pub phi: u64,
    #[serde(serialize_with = "serialize_biguint")]
    pub primorial_at_phi: BigUint,
    /// Smallest phi' > phi where the inequality fails.
    pub first_failure: u64,
}

fn lhs(k: u64, phi: u64, h: u32) -> BigUint {
    BigUint::from(k as u128 * phi as u128 + 1).pow(h)
}

/// Exact integer scan for the largest feasible phi; never compares through
/// floating-point roots.
pub fn phi_bound(k: u64, h: u32) -> BoundResult {
    assert!(k >= 1 && h >= 1, "phi_bound requires k >= 1 and h >= 1");
    let mut primorial = BigUint::one();
    let mut best: Option<(u64, BigUint)> = None;
    let mut failure_after_best: Option<u64> = None;
    let mut phi = 0u64;
    loop {
        phi += 1;
        primorial *= nth_prime(phi);
        let left = lhs(k, phi, h);
        if left >= primorial {
            best = Some((phi, primorial.clone()));
            failure_after_best = None;
        } else if failure_after_best.is_none() {
            failure_after_best = Some(phi);
        }
        // left < 2^phi <= p_phi#, and 2^phi keeps dominating from here on.
        if left.bits() <= phi {
            break;
        }
    }
    let (phi, primorial_at_phi) = best.expect("phi = 1 is always feasible");
    BoundResult {
        k,
        h,
        phi,
        primorial_at_phi,
        first_failure: failure_after_best.expect("scan ends infeasible"),
    }
}

/// Natural log of a big integer with relative error well below 1e-9.
fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 63 {
        return (x.to_u64().expect("fits") as f64).ln();
    }
    let shift = bits - 63;
    let top = (x >> shift).to_u64().expect("63 bits fit");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln(p_n#) / (n ln n)`, the growth diagnostic; defined for `n >= 2`.
pub fn primorial_growth_ratio(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::GrowthRatioDomain(n));
    }
    Ok(ln_biguint(&primorial(n)) / (n as f64 * (n as f64).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// Hold `h` fixed, grow `k` across the samples.
    FixedHGrowingK,
    /// Hold `k` fixed, grow `h` across the samples.
    FixedKGrowingH,
}

impl std::str::FromStr for ProbeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fixed-h-growing-k" | "fixed-h" => Ok(ProbeMode::FixedHGrowingK),
            "fixed-k-growing-h" | "fixed-k" => Ok(ProbeMode::FixedKGrowingH),
            other => Err(format!(
                "unknown probe mode {other:?}; expected fixed-h-growing-k or fixed-k-growing-h"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbeRow {
    pub parameter: u64,
    pub phi: u64,
}

/// Tabulates `phi` across one growing parameter for empirical inspection of
/// the two asymptotic regimes; makes no asymptotic claim itself.
pub fn asymptotic_probe(mode: ProbeMode, fixed: u64, samples: &[u64]) -> Result<Vec<ProbeRow>> {
    if samples.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::SamplesNotAscending);
    }
    let rows = samples
        .iter()
        .map(|&s| {
            let phi = match mode {
                ProbeMode::FixedHGrowingK => phi_bound(s, fixed as u32).phi,
                ProbeMode::FixedKGrowingH => phi_bound(fixed, s as u32).phi,
            };
            ProbeRow { parameter: s, phi }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primorial_examples() {
        assert_eq!(primorial(0), BigUint::one());
        assert_eq!(primorial(3), BigUint::from(30u64));
        assert_eq!(primorial(5), BigUint::from(2310u64));
    }

    #[test]
    fn primorial_ratio_is_next_prime() {
        // Cross-check against a test-local trial-division oracle.
        fn is_prime(x: u64) -> bool {
            (2..).take_while(|d| d * d <= x).all(|d| x % d != 0)
        }
        let mut expected = Vec::new();
        let mut x = 2;
        while expected.len() < 40 {
            if is_prime(x) {
                expected.push(x);
            }
            x += 1;
        }
        for n in 0..40u64 {
            assert_eq!(primorial(n + 1) / primorial(n), BigUint::from(expected[n as usize]));
        }
    }

    #[test]
    fn phi_bound_examples() {
        // k=1, h=2: 4 >= 2, 9 >= 6, 16 < 30.
        let r = phi_bound(1, 2);
        assert_eq!(r.phi, 2);
        assert_eq!(r.first_failure, 3);
        assert_eq!(r.primorial_at_phi, BigUint::from(6u64));

        // k=1, h=1: 2 >= 2, 3 < 6.
        let r = phi_bound(1, 1);
        assert_eq!(r.phi, 1);
        assert_eq!(r.first_failure, 2);
    }

    #[test]
    fn phi_bound_defining_inequalities() {
        for k in [1u64, 2, 3, 10, 100] {
            for h in [1u32, 2, 3, 5, 8] {
                let r = phi_bound(k, h);
                assert!(r.phi >= 1);
                assert!(lhs(k, r.phi, h) >= primorial(r.phi), "feasible at phi, k={k} h={h}");
                assert_eq!(r.first_failure, r.phi + 1);
                assert!(
                    lhs(k, r.phi + 1, h) < primorial(r.phi + 1),
                    "infeasible right after, k={k} h={h}"
                );
            }
        }
    }

    #[test]
    fn phi_bound_is_monotone() {
        for h in 1..=6u32 {
            let mut prev = 0;
            for k in 1..=30u64 {
                let phi = phi_bound(k, h).phi;
                assert!(phi >= prev, "phi not monotone in k at k={k} h={h}");
                prev = phi;
            }
        }
        for k in 1..=6u64 {
            let mut prev = 0;
            for h in 1..=30u32 {
                let phi = phi_bound(k, h).phi;
                assert!(phi >= prev, "phi not monotone in h at k={k} h={h}");
                prev = phi;
            }
        }
    }

    #[test]
    fn growth_ratio_small_values() {
        let r2 = primorial_growth_ratio(2).unwrap();
        assert!((r2 - 6f64.ln() / (2.0 * 2f64.ln())).abs() < 1e-12);
        assert!((r2 - 1.29248).abs() < 1e-5);
        let r3 = primorial_growth_ratio(3).unwrap();
        assert!((r3 - 1.03196).abs() < 1e-5);
        assert!(matches!(primorial_growth_ratio(1), Err(Error::GrowthRatioDomain(1))));
    }

    #[test]
    fn big_log_matches_summed_logs() {
        // Independent route: sum the logs of the primes directly.
        for n in [50u64, 200, 1000] {
            let summed: f64 = primes_first(n as usize).iter().map(|&p| (p as f64).ln()).sum();
            let via_big = ln_biguint(&primorial(n));
            assert!((summed - via_big).abs() / summed < 1e-9, "n={n}");
        }
    }

    #[test]
    fn probe_fixed_k_stays_under_twice_h() {
        let rows = asymptotic_probe(ProbeMode::FixedKGrowingH, 1, &[1, 2, 4, 8]).unwrap();
        assert_eq!(rows[0], ProbeRow { parameter: 1, phi: 1 });
        assert_eq!(rows[1], ProbeRow { parameter: 2, phi: 2 });
        for row in &rows {
            assert!(row.phi <= 2 * row.parameter, "phi {} above 2h at h={}", row.phi, row.parameter);
        }
    }

    #[test]
    fn probe_fixed_h_grows_sublogarithmically() {
        let samples = [10u64, 100, 10_000, 100_000_000];
        let rows = asymptotic_probe(ProbeMode::FixedHGrowingK, 2, &samples).unwrap();
        let mut prev_phi = 0;
        let mut prev_ratio = f64::INFINITY;
        for row in &rows {
            assert!(row.phi >= prev_phi);
            let ratio = row.phi as f64 / (row.parameter as f64).ln();
            assert!(ratio < prev_ratio, "phi/log k should shrink along the samples");
            prev_phi = row.phi;
            prev_ratio = ratio;
        }
    }

    #[test]
    fn probe_rejects_unsorted_samples() {
        assert!(matches!(
            asymptotic_probe(ProbeMode::FixedHGrowingK, 2, &[5, 5]),
            Err(Error::SamplesNotAscending)
        ));
    }

    #[test]
    fn bound_result_serializes_primorial_as_decimal_string() {
        let r = phi_bound(1, 2);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"k":1,"h":2,"phi":2,"primorial_at_phi":"6","first_failure":3}"#
        );
    }
}
