//! Bohr sets B(R, eps) = { n in Z/PZ : ||n x / P|| <= eps for all x in R },
//! their normalized indicators, and smoothing by them.
//!
//! Membership is decided in integer arithmetic with `eps` held as an exact
//! rational, so boundary residues are never misclassified.

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{invalid, LabError, Result};
use crate::scalar::Scalar;
use crate::zp_fourier::{convolve, CyclicFunction};
use crate::Radius;

const WORDS_PER_TASK: usize = 64;

#[derive(Clone, Debug)]
pub struct BohrSet {
    modulus: u64,
    frequencies: Vec<u64>,
    radius: Radius,
    bits: Vec<u64>,
    size: u64,
}

/// Parses a plain nonnegative decimal such as `0.05` or `12.5` into an exact
/// fraction. Exponent notation is rejected.
pub fn parse_decimal(text: &str) -> Result<Radius> {
    let t = text.trim();
    let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
    let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if (whole.is_empty() && frac.is_empty()) || !digits_ok(whole) || !digits_ok(frac) {
        return invalid(format!("{text:?} is not a plain decimal"));
    }
    if frac.len() > 18 {
        return invalid(format!("{text:?} has more than 18 decimal places"));
    }
    let den = 10u64.pow(frac.len() as u32);
    let w: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| LabError::InvalidArgument(format!("{text:?} overflows")))? };
    let f: u64 = if frac.is_empty() { 0 } else { frac.parse().unwrap() };
    let num = w
        .checked_mul(den)
        .and_then(|v| v.checked_add(f))
        .ok_or_else(|| LabError::InvalidArgument(format!("{text:?} overflows")))?;
    Ok(Radius::new(num, den))
}

fn radius_to_f64(r: Radius) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// ||n x / P|| <= p/q  <=>  q * min(r, P - r) <= p * P  with r = n x mod P.
#[inline]
fn within(r: u64, modulus: u64, num: u128, den: u128) -> bool {
    let dist = r.min(modulus - r) as u128;
    dist * den <= num * modulus as u128
}

pub fn build_bohr_set(modulus: u64, frequencies: &[u64], radius: Radius) -> Result<BohrSet> {
    if frequencies.is_empty() {
        return invalid("frequency set is empty");
    }
    if radius.is_zero() || radius > Radius::new(1, 2) {
        return invalid(format!("radius {radius} outside (0, 1/2]"));
    }
    if modulus < 2 {
        return invalid(format!("modulus {modulus} too small"));
    }
    if let Some(x) = frequencies.iter().find(|&&x| x >= modulus) {
        return invalid(format!("frequency {x} not reduced mod {modulus}"));
    }
    let words = usize::try_from(modulus.div_ceil(64))
        .map_err(|_| LabError::ResourceLimit(format!("modulus {modulus} too large")))?;

    let mut freqs = frequencies.to_vec();
    freqs.sort_unstable();
    freqs.dedup();
    // zero imposes nothing; ascending order puts 1 first, which prunes most n
    let active: Vec<u64> = freqs.iter().copied().filter(|&x| x != 0).collect();
    let (num, den) = (*radius.numer() as u128, *radius.denom() as u128);
    let small = modulus <= u32::MAX as u64;

    let mut bits = vec![0u64; words];
    bits.par_chunks_mut(WORDS_PER_TASK)
        .enumerate()
        .for_each(|(task, chunk)| {
            let first = (task * WORDS_PER_TASK * 64) as u64;
            for (wi, word) in chunk.iter_mut().enumerate() {
                let base = first + wi as u64 * 64;
                for b in 0..64u64 {
                    let n = base + b;
                    if n >= modulus {
                        break;
                    }
                    let ok = active.iter().all(|&x| {
                        let r = if small {
                            n * x % modulus
                        } else {
                            (n as u128 * x as u128 % modulus as u128) as u64
                        };
                        within(r, modulus, num, den)
                    });
                    if ok {
                        *word |= 1 << b;
                    }
                }
            }
        });
    let size = bits.iter().map(|w| u64::from(w.count_ones())).sum();

    let set = BohrSet {
        modulus,
        frequencies: freqs,
        radius,
        bits,
        size,
    };
    assert!(
        set.pigeonhole_holds(),
        "|B| = {} below P eps^|R| for P = {modulus}, |R| = {}, eps = {radius}",
        set.size,
        set.frequencies.len()
    );
    Ok(set)
}

impl BohrSet {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Sorted, deduplicated frequency set.
    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// mu(B) = |B| / P.
    pub fn measure(&self) -> f64 {
        self.size as f64 / self.modulus as f64
    }

    pub fn contains(&self, n: u64) -> bool {
        let n = n % self.modulus;
        self.bits[(n / 64) as usize] & (1 << (n % 64)) != 0
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as u64;
                rest &= rest - 1;
                Some(wi as u64 * 64 + b)
            })
        })
    }

    /// P eps^|R| as a float (may underflow to zero for large |R|).
    pub fn pigeonhole_bound(&self) -> f64 {
        self.modulus as f64 * radius_to_f64(self.radius).powi(self.frequencies.len() as i32)
    }

    /// log10 of P eps^|R|, finite even when the bound itself underflows.
    pub fn pigeonhole_log10(&self) -> f64 {
        (self.modulus as f64).log10() + self.frequencies.len() as f64 * radius_to_f64(self.radius).log10()
    }

    /// Exact check of |B| >= P eps^|R|, i.e. |B| q^d >= P p^d.
    pub fn pigeonhole_holds(&self) -> bool {
        let d = self.frequencies.len() as u32;
        let lhs = BigUint::from(self.size) * BigUint::from(*self.radius.denom()).pow(d);
        let rhs = BigUint::from(self.modulus) * BigUint::from(*self.radius.numer()).pow(d);
        lhs >= rhs
    }

    /// Largest |n| (as the least absolute residue) over the members.
    pub fn max_offset(&self) -> u64 {
        self.members().map(|n| n.min(self.modulus - n)).max().unwrap_or(0)
    }
}

/// sigma = (1 / mu(B)) 1_B, so that ||sigma||_1 = 1.
pub fn normalized_indicator<T: Scalar>(set: &BohrSet) -> Result<CyclicFunction<T>> {
    if set.size == 0 {
        return Err(LabError::Precondition("Bohr set is empty".into()));
    }
    let weight = T::lit(set.modulus as f64 / set.size as f64);
    let members: Vec<u64> = set.members().collect();
    if set.frequencies.binary_search(&1).is_ok() && set.radius < Radius::new(1, 4) {
        let quarter = set.modulus / 4;
        assert!(
            members.iter().all(|&n| n.min(set.modulus - n) <= quarter),
            "Bohr set with frequency 1 and eps < 1/4 escapes [-P/4, P/4]"
        );
    }
    CyclicFunction::scaled_indicator(set.modulus, &members, weight)
}

/// h = a * sigma. Every h(x) is an average of values of `a`, so the
/// transform output is clamped into [min a, max a] to strip rounding noise.
pub fn smooth<T: Scalar>(a: &CyclicFunction<T>, set: &BohrSet) -> Result<CyclicFunction<T>> {
    if a.modulus() != set.modulus {
        return invalid(format!(
            "modulus mismatch: function {} vs Bohr set {}",
            a.modulus(),
            set.modulus
        ));
    }
    let sigma = normalized_indicator::<T>(set)?;
    let raw = convolve(a, &sigma)?;
    let (lo, hi) = (a.min_value(), a.max_value());
    let values = raw.into_values().into_iter().map(|v| v.max(lo).min(hi)).collect();
    CyclicFunction::new(a.modulus(), values)
}
