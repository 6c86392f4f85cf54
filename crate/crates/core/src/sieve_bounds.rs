//! Prime-tuple counting, local root counts, truncated singular series and
//! the sieve-side upper bounds (Klimov-type tuple bound, Brun-Titchmarsh,
//! and the L^{2k} bound for a smoothed prime indicator).
//!
//! Every `<<` bound is evaluated with implied constant 1. The absolute
//! constants are not known, so experiments report measured/bound ratios.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::prime_engine::{is_prime, sieve_primes, PrimeTable};
use crate::scalar::Scalar;
use crate::wtrick::WTrickContext;
use crate::zp_fourier::CyclicFunction;

/// Default truncation point of the singular series.
pub const DEFAULT_SERIES_CUTOFF: u64 = 1_000_000;

/// Above this value tuple counting switches from a sieve to Miller-Rabin.
const TUPLE_SIEVE_CAP: u64 = 1 << 30;

/// k linear forms W n + b_i with a common modulus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TupleSpec {
    modulus: u64,
    offsets: Vec<u64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl TupleSpec {
    pub fn new(modulus: u64, offsets: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return invalid("tuple modulus must be positive");
        }
        if offsets.is_empty() {
            return invalid("a tuple needs at least one offset");
        }
        for &b in &offsets {
            if gcd(b, modulus) != 1 {
                return invalid(format!("offset {b} is not coprime to W = {modulus}"));
            }
        }
        let mut sorted = offsets.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return invalid("offsets must be pairwise distinct");
        }
        Ok(TupleSpec { modulus, offsets })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn k(&self) -> usize {
        self.offsets.len()
    }

    fn max_offset(&self) -> u64 {
        *self.offsets.iter().max().unwrap()
    }
}

/// rho(p) = #{n in [1, p] : prod_i (W n + b_i) = 0 mod p}.
///
/// When p | W each form is constant mod p. Otherwise each form has the single
/// root n = -b_i W^{-1}, so rho(p) counts the distinct offsets mod p.
pub fn root_count_rho(p: u64, spec: &TupleSpec) -> Result<u64> {
    if !is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    Ok(rho_unchecked(p, spec))
}

fn rho_unchecked(p: u64, spec: &TupleSpec) -> u64 {
    if spec.modulus.is_multiple_of(p) {
        return if spec.offsets.iter().any(|b| b % p == 0) { p } else { 0 };
    }
    let mut residues: Vec<u64> = spec.offsets.iter().map(|b| b % p).collect();
    residues.sort_unstable();
    residues.dedup();
    residues.len() as u64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularSeries {
    pub spec: TupleSpec,
    pub cutoff: u64,
    /// prod_{p <= cutoff} (1 - rho(p)/p) (1 - 1/p)^{-k}
    pub value: f64,
    /// value * k^2 / cutoff: factors beyond the cutoff are 1 + O(k^2 / p^2).
    pub tail_estimate: f64,
}

pub fn singular_series(spec: &TupleSpec, cutoff: u64) -> Result<SingularSeries> {
    if cutoff < 100 {
        return invalid(format!("series cutoff must be at least 100, got {cutoff}"));
    }
    let table = sieve_primes(cutoff)?;
    Ok(singular_series_with(spec, cutoff, &table))
}

/// Same as [`singular_series`] with a caller-supplied table covering the cutoff.
pub fn singular_series_with(spec: &TupleSpec, cutoff: u64, table: &PrimeTable) -> SingularSeries {
    let k = spec.k() as f64;
    let mut log_sum = 0.0f64;
    let mut vanishes = false;
    for p in table.primes_up_to(cutoff) {
        let rho = rho_unchecked(p, spec);
        if rho >= p {
            vanishes = true;
            break;
        }
        let pf = p as f64;
        log_sum += (-(rho as f64) / pf).ln_1p() - k * (-1.0 / pf).ln_1p();
    }
    let value = if vanishes { 0.0 } else { log_sum.exp() };
    SingularSeries {
        spec: spec.clone(),
        cutoff,
        value,
        tail_estimate: value * k * k / cutoff as f64,
    }
}

/// #{n in [1, limit] : b_i + n W prime for every i}.
pub fn count_prime_tuples(spec: &TupleSpec, limit: u64) -> Result<u64> {
    if limit == 0 {
        return invalid("tuple count needs limit >= 1");
    }
    let top = limit
        .checked_mul(spec.modulus)
        .and_then(|v| v.checked_add(spec.max_offset()))
        .ok_or_else(|| LabError::ResourceLimit("b + P W overflows 64 bits".into()))?;
    let table = if (2..=TUPLE_SIEVE_CAP).contains(&top) {
        Some(sieve_primes(top)?)
    } else {
        None
    };
    let prime = |m: u64| match &table {
        Some(t) => t.contains(m),
        None => is_prime(m),
    };
    const CHUNK: u64 = 1 << 14;
    let chunks = limit.div_ceil(CHUNK);
    let count = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK + 1;
            let hi = ((c + 1) * CHUNK).min(limit);
            (lo..=hi)
                .filter(|&n| spec.offsets.iter().all(|&b| prime(b + n * spec.modulus)))
                .count() as u64
        })
        .sum();
    Ok(count)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlimovBound {
    /// P 3^k k! / (ln P)^k * singular series
    pub value: f64,
    /// k <= ln P / (12 ln ln P); beyond it the bound exceeds the trivial P.
    pub k_in_range: bool,
    /// ln(max b_i) <= 2 ln P
    pub offsets_hypothesis: bool,
}

pub fn klimov_upper_bound(spec: &TupleSpec, limit: u64, series_value: f64) -> Result<KlimovBound> {
    let k = spec.k();
    if k < 2 {
        return invalid(format!("the tuple bound needs k >= 2, got {k}"));
    }
    if limit < 3 {
        return invalid("the tuple bound needs P >= 3");
    }
    let ln_p = (limit as f64).ln();
    let value = limit as f64 * 3f64.powi(k as i32) * factorial(k) / ln_p.powi(k as i32) * series_value;
    let k_in_range = ln_p.ln() > 0.0 && k as f64 <= ln_p / (12.0 * ln_p.ln());
    if !k_in_range {
        log::warn!("k = {k} exceeds ln P / (12 ln ln P) at P = {limit}; bound is weaker than P");
    }
    Ok(KlimovBound {
        value,
        k_in_range,
        offsets_hypothesis: (spec.max_offset().max(1) as f64).ln() <= 2.0 * ln_p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrunTitchmarsh {
    /// 2 P W / (phi(W) ln(P / W))
    pub progression_form: f64,
    /// 12 P ln z / ln N
    pub simplified_form: f64,
    /// P / W >= N^{1/3}
    pub cube_root_condition: bool,
    /// W / phi(W) <= 2 ln z
    pub mertens_condition: bool,
    /// Set only when both conditions hold, which forces it true.
    pub form_order_holds: Option<bool>,
}

pub fn brun_titchmarsh_bound(ctx: &WTrickContext) -> Result<BrunTitchmarsh> {
    if ctx.p <= ctx.w {
        return invalid(format!("need P > W, got P = {} and W = {}", ctx.p, ctx.w));
    }
    let (p, w, phi) = (ctx.p as f64, ctx.w as f64, ctx.phi_w as f64);
    let ln_n = (ctx.n as f64).ln();
    let progression_form = 2.0 * p * w / (phi * (p / w).ln());
    let simplified_form = 12.0 * p * ctx.z.ln() / ln_n;
    let cube_root_condition = 3.0 * (p / w).ln() >= ln_n;
    let mertens_condition = w / phi <= 2.0 * ctx.z.ln();
    let form_order_holds = (cube_root_condition && mertens_condition).then(|| {
        let ok = progression_form <= simplified_form * (1.0 + 1e-12);
        assert!(ok, "progression form exceeds the simplified form under its hypotheses");
        ok
    });
    Ok(BrunTitchmarsh {
        progression_form,
        simplified_form,
        cube_root_condition,
        mertens_condition,
        form_order_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop21Bound {
    /// k + (ln N / ln z)^{1 - 1/(2k)} |Sigma|^{-1/(2k)}
    pub value: f64,
    /// 1 <= k <= (ln z)^{1/3} / 2
    pub in_range: bool,
}

/// Upper bound on ||a * sigma||_{2k}. Outside 1 <= k <= (ln z)^{1/3}/2 this is
/// a range error unless `force` is set, in which case the result is marked
/// out of range.
pub fn prop21_bound(k: u32, n: f64, z: f64, sigma_size: u64, force: bool) -> Result<Prop21Bound> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if sigma_size == 0 {
        return invalid("|Sigma| must be at least 1");
    }
    if !(z > 1.0 && n > z) {
        return invalid(format!("need N > z > 1, got N = {n}, z = {z}"));
    }
    let in_range = k as f64 <= 0.5 * z.ln().cbrt();
    if !in_range && !force {
        return Err(LabError::OutOfRange(format!(
            "k = {k} exceeds (ln z)^(1/3) / 2 = {:.4}",
            0.5 * z.ln().cbrt()
        )));
    }
    let two_k = 2.0 * k as f64;
    let ratio = n.ln() / z.ln();
    let value = k as f64 + ratio.powf(1.0 - 1.0 / two_k) * (sigma_size as f64).powf(-1.0 / two_k);
    Ok(Prop21Bound { value, in_range })
}

/// ||a * sigma||_{2k}^{2k} expanded over tuples (y_1..y_{2k}) in Sigma^{2k}
/// and split by the number of distinct coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TupleShares {
    pub k: u32,
    /// Contribution of tuples with exactly r distinct coordinates, index r.
    pub by_distinct: Vec<f64>,
    /// Number of tuples with exactly r distinct coordinates, index r.
    pub tuple_counts: Vec<u64>,
    pub total: f64,
    /// Share from r < 2k.
    pub repeated: f64,
    /// Share from r = 2k.
    pub all_distinct: f64,
}

/// Largest |Sigma|^{2k} * P handled by the explicit expansion.
pub const EXPANSION_BUDGET: u64 = 200_000_000;

pub fn distinct_coordinate_shares<T: Scalar>(
    a: &CyclicFunction<T>,
    sigma_set: &[u64],
    k: u32,
) -> Result<TupleShares> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let mut sigma: Vec<u64> = sigma_set.iter().map(|y| y % a.modulus()).collect();
    sigma.sort_unstable();
    sigma.dedup();
    if sigma.is_empty() {
        return invalid("Sigma is empty");
    }
    let m = sigma.len();
    let len = 2 * k as usize;
    (m as u64)
        .checked_pow(len as u32)
        .and_then(|t| t.checked_mul(a.modulus()))
        .filter(|&w| w <= EXPANSION_BUDGET)
        .ok_or_else(|| LabError::ResourceLimit(format!("|Sigma|^{len} P exceeds the expansion budget")))?;

    let p = a.modulus() as usize;
    let vals: Vec<f64> = a.values().iter().map(|v| v.as_f64()).collect();
    let mut by_distinct = vec![0.0f64; len + 1];
    let mut tuple_counts = vec![0u64; len + 1];
    let mut idx = vec![0usize; len];
    let mut scratch = Vec::with_capacity(len);
    loop {
        scratch.clear();
        scratch.extend_from_slice(&idx);
        scratch.sort_unstable();
        scratch.dedup();
        let r = scratch.len();
        let ys: Vec<usize> = idx.iter().map(|&i| sigma[i] as usize).collect();
        let mut mean = 0.0;
        for x in 0..p {
            let mut prod = 1.0;
            for &y in &ys {
                prod *= vals[(x + p - y) % p];
                if prod == 0.0 {
                    break;
                }
            }
            mean += prod;
        }
        by_distinct[r] += mean / p as f64;
        tuple_counts[r] += 1;

        let mut pos = 0;
        loop {
            if pos == len {
                let norm = (m as f64).powi(len as i32);
                for v in by_distinct.iter_mut() {
                    *v /= norm;
                }
                let total: f64 = by_distinct.iter().sum();
                let all_distinct = by_distinct[len];
                return Ok(TupleShares {
                    k,
                    repeated: total - all_distinct,
                    all_distinct,
                    by_distinct,
                    tuple_counts,
                    total,
                });
            }
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
