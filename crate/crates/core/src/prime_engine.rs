//! Prime generation and queries: a segmented odd-only sieve, exact counting,
//! deterministic 64-bit primality and Chebyshev's theta.

use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Odd entries per sieve segment. 2^18 bits is 32 KiB, which stays in L2.
pub const SEGMENT_ENTRIES: usize = 1 << 18;

/// Default ceiling on the sieve limit.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 34;

const WORDS_PER_SEGMENT: usize = SEGMENT_ENTRIES / 64;
const WORDS_PER_BLOCK: usize = 8;

/// Immutable table of the primes up to `limit`.
///
/// Bit `i` of `bits` stands for the odd number `2i + 1` and is set when that
/// number is *not* prime. Bits past `limit` are set too, so clear bits are
/// exactly the odd primes.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    bits: Vec<u64>,
    block_counts: Vec<u64>,
    count: u64,
}

/// Sieves with the default memory budget.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    sieve_primes_with_budget(limit, DEFAULT_MEMORY_BUDGET)
}

pub fn sieve_primes_with_budget(limit: u64, budget: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(LabError::InvalidArgument(format!(
            "sieve limit must be at least 2, got {limit}"
        )));
    }
    if limit > budget {
        return Err(LabError::ResourceLimit(format!(
            "sieve limit {limit} exceeds the memory budget {budget}"
        )));
    }
    let entries = (limit as usize - 1) / 2 + 1; // odd numbers 1, 3, ..., <= limit
    let words = entries.div_ceil(64);
    let base = small_odd_primes(isqrt(limit));

    let mut bits = vec![0u64; words];
    bits.par_chunks_mut(WORDS_PER_SEGMENT)
        .enumerate()
        .for_each(|(seg, chunk)| {
            sieve_segment(seg * SEGMENT_ENTRIES, chunk, &base);
        });
    bits[0] |= 1; // 1 is not prime
    let tail = entries % 64;
    if tail != 0 {
        bits[words - 1] |= !0u64 << tail;
    }

    let mut block_counts = Vec::with_capacity(words / WORDS_PER_BLOCK + 2);
    let mut running = 0u64;
    for block in bits.chunks(WORDS_PER_BLOCK) {
        block_counts.push(running);
        running += block.iter().map(|w| u64::from(w.count_zeros())).sum::<u64>();
    }
    block_counts.push(running);
    let count = running + 1; // the prime 2

    Ok(PrimeTable {
        limit,
        bits,
        block_counts,
        count,
    })
}

/// Marks odd composites in one segment whose first entry is odd index `lo`.
fn sieve_segment(lo: usize, chunk: &mut [u64], base: &[u64]) {
    let hi = lo + chunk.len() * 64; // exclusive odd index
    for &p in base {
        let p = p as usize;
        // odd multiples of p at or after p^2: odd index (p*p - 1) / 2, step p
        let mut idx = (p * p - 1) / 2;
        if idx >= hi {
            break;
        }
        if idx < lo {
            let skip = (lo - idx).div_ceil(p);
            idx += skip * p;
        }
        while idx < hi {
            let local = idx - lo;
            chunk[local >> 6] |= 1u64 << (local & 63);
            idx += p;
        }
    }
}

/// Odd primes up to `limit` by a plain sieve; used for the base primes.
fn small_odd_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    if limit < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    let mut n = 3;
    while n <= limit {
        if !composite[n] {
            out.push(n as u64);
            let mut m = n * n;
            while m <= limit {
                composite[m] = true;
                m += 2 * n;
            }
        }
        n += 2;
    }
    out
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Number of primes up to `limit`.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Exact membership for `n <= limit`; false beyond it.
    pub fn contains(&self, n: u64) -> bool {
        if n > self.limit {
            return false;
        }
        if n == 2 {
            return true;
        }
        if n < 2 || n.is_multiple_of(2) {
            return false;
        }
        let idx = (n / 2) as usize;
        self.bits[idx >> 6] & (1u64 << (idx & 63)) == 0
    }

    /// pi(x): the number of primes in [1, x].
    pub fn prime_count(&self, x: u64) -> Result<u64> {
        if x > self.limit {
            return Err(LabError::OutOfRange(format!(
                "x = {x} exceeds the table limit {}",
                self.limit
            )));
        }
        if x < 2 {
            return Ok(0);
        }
        // odd indices 0..=last cover the odd numbers <= x
        let last = ((x - 1) / 2) as usize;
        let word = last >> 6;
        let block = word / WORDS_PER_BLOCK;
        let mut odd = self.block_counts[block];
        for w in &self.bits[block * WORDS_PER_BLOCK..word] {
            odd += u64::from(w.count_zeros());
        }
        let keep = (last & 63) + 1;
        let mask = if keep == 64 { !0 } else { (1u64 << keep) - 1 };
        odd += u64::from((!self.bits[word] & mask).count_ones());
        Ok(odd + 1)
    }

    /// Ascending iterator over all primes in the table.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(2).chain(self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut free = !w;
            std::iter::from_fn(move || {
                if free == 0 {
                    return None;
                }
                let b = free.trailing_zeros() as u64;
                free &= free - 1;
                Some(2 * ((wi as u64) * 64 + b) + 1)
            })
        }))
    }

    /// Ascending primes p <= x.
    pub fn primes_up_to(&self, x: u64) -> impl Iterator<Item = u64> + '_ {
        self.primes().take_while(move |&p| p <= x)
    }

    /// theta(z) = sum of ln p over primes p <= z, summed in ascending order.
    pub fn chebyshev_theta(&self, z: f64) -> Result<f64> {
        if z.is_nan() || z < 0.0 || z > self.limit as f64 {
            return Err(LabError::OutOfRange(format!(
                "z = {z} outside [0, {}]",
                self.limit
            )));
        }
        let top = z.floor() as u64;
        Ok(self.primes_up_to(top).map(|p| (p as f64).ln()).sum())
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve primes as witnesses are
/// sufficient for every n < 2^64.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Least prime strictly greater than `x`.
pub fn next_prime_above(x: u64) -> Result<u64> {
    if x == 0 {
        return Err(LabError::InvalidArgument("next_prime_above needs x >= 1".into()));
    }
    // Bertrand: a prime lies in (x, 2x]; the search must not overflow.
    let ceiling = x.checked_mul(2).ok_or_else(|| {
        LabError::ResourceLimit(format!("prime search above {x} overflows 64 bits"))
    })?;
    let mut candidate = x + 1;
    while !is_prime(candidate) {
        candidate += 1;
    }
    assert!(candidate <= ceiling, "Bertrand's postulate violated above {x}");
    Ok(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_tables() {
        let t = sieve_primes(10).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2, 3, 5, 7]);
        let t = sieve_primes(2).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2]);
        assert_eq!(t.count(), 1);
        assert_eq!(sieve_primes(100).unwrap().count(), 25);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(matches!(sieve_primes(1), Err(LabError::InvalidArgument(_))));
        assert!(matches!(
            sieve_primes_with_budget(1000, 999),
            Err(LabError::ResourceLimit(_))
        ));
    }

    #[test]
    fn membership_matches_trial_division() {
        let limit = 100_000;
        let t = sieve_primes(limit).unwrap();
        for n in 0..=limit {
            assert_eq!(t.contains(n), trial_division(n), "n = {n}");
        }
        assert!(!t.contains(limit + 1));
    }

    #[test]
    fn segment_boundaries() {
        // limits straddling a segment edge in odd-index space
        for limit in [2 * SEGMENT_ENTRIES as u64 - 1, 2 * SEGMENT_ENTRIES as u64 + 1, 1_600_003] {
            let t = sieve_primes(limit).unwrap();
            let via_iter = t.primes().count() as u64;
            assert_eq!(via_iter, t.count());
            assert_eq!(t.prime_count(limit).unwrap(), t.count());
            for n in limit.saturating_sub(2000)..=limit {
                assert_eq!(t.contains(n), is_prime(n), "n = {n}");
            }
        }
    }

    #[test]
    fn counting() {
        let t = sieve_primes(1_000_000).unwrap();
        assert_eq!(t.prime_count(0).unwrap(), 0);
        assert_eq!(t.prime_count(1).unwrap(), 0);
        assert_eq!(t.prime_count(2).unwrap(), 1);
        assert_eq!(t.prime_count(10).unwrap(), 4);
        assert_eq!(t.prime_count(1_000_000).unwrap(), 78498);
        assert!(matches!(t.prime_count(1_000_001), Err(LabError::OutOfRange(_))));
        let mut prev = 0;
        for x in 1..20_000 {
            let c = t.prime_count(x).unwrap();
            assert_eq!(c - prev, u64::from(t.contains(x)));
            prev = c;
        }
    }

    #[test]
    fn primality() {
        assert!(!is_prime(0));
        assert!(!is_prime(1));
        assert!(is_prime(2));
        assert!(is_prime(500_009));
        assert!(trial_division(500_009));
        for n in 0..50_000 {
            assert_eq!(is_prime(n), trial_division(n));
        }
        // strong pseudoprime to bases 2..=37 would fool a short witness set
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(u64::MAX));
    }

    #[test]
    fn next_prime() {
        assert_eq!(next_prime_above(2).unwrap(), 3);
        assert_eq!(next_prime_above(10).unwrap(), 11);
        assert_eq!(next_prime_above(500_000).unwrap(), 500_009);
        assert_eq!(next_prime_above(1).unwrap(), 2);
        assert!(next_prime_above(0).is_err());
        assert!(matches!(next_prime_above(u64::MAX - 1), Err(LabError::ResourceLimit(_))));
    }

    #[test]
    fn next_prime_has_no_gap_prime() {
        let t = sieve_primes(1_000_200).unwrap();
        let mut x = 1;
        while x <= 1_000_000 {
            let p = next_prime_above(x).unwrap();
            assert!(p > x && t.contains(p));
            assert_eq!(t.prime_count(p - 1).unwrap(), t.prime_count(x).unwrap());
            x += 997;
        }
    }

    #[test]
    fn theta() {
        let t = sieve_primes(10_000_000).unwrap();
        assert_eq!(t.chebyshev_theta(1.0).unwrap(), 0.0);
        let ten = 2f64.ln() + 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((t.chebyshev_theta(10.0).unwrap() - ten).abs() < 1e-12);
        assert!((ten - 5.34711).abs() < 1e-5);
        let small = t.chebyshev_theta(3.45).unwrap();
        assert!((small - (2f64.ln() + 3f64.ln())).abs() < 1e-12);
        assert!((small - 1.79176).abs() < 1e-5);
        for z in [100.0, 1_000.0, 12_345.6, 1e5, 1e6, 1e7] {
            let r = t.chebyshev_theta(z).unwrap() / z;
            assert!((0.8..=1.2).contains(&r), "theta({z})/{z} = {r}");
        }
        assert!(t.chebyshev_theta(1e7 + 1.0).is_err());
    }

    #[test]
    fn isqrt_edges() {
        for n in [0, 1, 2, 3, 4, 15, 16, 17, u64::MAX, (1 << 52) + 1] {
            let r = isqrt(n);
            assert!(r * r <= n);
            assert!((r + 1).checked_mul(r + 1).is_none_or(|s| s > n));
        }
    }
}
