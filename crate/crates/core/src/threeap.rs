//! The progression operator Lambda(f, g, h) = E_{x,d} f(x) g(x+d) h(x+2d),
//! integer 3AP counting, and progression-free fixtures.
//!
//! Two counting conventions live here side by side. Lambda runs over all
//! ordered pairs (x, d) in Z/PZ, so it includes d = 0 and sees every
//! progression in both orientations. `count_3aps_integers` counts each
//! nontrivial integer progression once (d > 0). For an indicator supported in
//! [0, P/3) the two agree as `P^2 Lambda = |A| + 2 * count`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::zp_fourier::CyclicFunction;

/// Largest modulus accepted by the O(P^2) direct evaluation.
pub const DIRECT_CEILING: u64 = 20_011;

const ROWS_PER_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APReport {
    pub lambda: f64,
    /// Contribution of d = 0.
    pub trivial_mass: f64,
    pub nontrivial_mass: f64,
    /// Number of (x, d) with a nonzero product, when all inputs are 0/1.
    pub pair_count: Option<u64>,
}

fn is_indicator<T: Scalar>(f: &CyclicFunction<T>) -> bool {
    f.values().iter().all(|v| v.is_zero() || *v == T::one())
}

fn check_moduli<T: Scalar>(f: &CyclicFunction<T>, g: &CyclicFunction<T>, h: &CyclicFunction<T>) -> Result<u64> {
    let p = f.modulus();
    if g.modulus() != p || h.modulus() != p {
        return Err(LabError::InvalidArgument(format!(
            "modulus mismatch: {p}, {}, {}",
            g.modulus(),
            h.modulus()
        )));
    }
    Ok(p)
}

/// Direct double sum. Rows `x` are split into fixed chunks whose partial
/// sums are combined in index order, so the result does not depend on the
/// thread count.
pub fn lambda_direct<T: Scalar>(
    f: &CyclicFunction<T>,
    g: &CyclicFunction<T>,
    h: &CyclicFunction<T>,
) -> Result<APReport> {
    lambda_direct_with_ceiling(f, g, h, DIRECT_CEILING)
}

pub fn lambda_direct_with_ceiling<T: Scalar>(
    f: &CyclicFunction<T>,
    g: &CyclicFunction<T>,
    h: &CyclicFunction<T>,
    ceiling: u64,
) -> Result<APReport> {
    let p = check_moduli(f, g, h)?;
    if p > ceiling {
        return Err(LabError::ResourceLimit(format!(
            "direct evaluation at P = {p} exceeds the ceiling {ceiling}; use lambda_fourier"
        )));
    }
    let n = p as usize;
    let (fv, gv, hv) = (f.values(), g.values(), h.values());
    let count_pairs = is_indicator(f) && is_indicator(g) && is_indicator(h);

    let rows: Vec<usize> = (0..n).collect();
    let partials: Vec<(f64, f64, u64)> = rows
        .par_chunks(ROWS_PER_CHUNK)
        .map(|chunk| {
            let (mut all, mut trivial, mut pairs) = (0.0f64, 0.0f64, 0u64);
            for &x in chunk {
                let fx = fv[x].as_f64();
                if fx == 0.0 {
                    continue;
                }
                trivial += fx * gv[x].as_f64() * hv[x].as_f64();
                let mut row = 0.0f64;
                let (mut y, mut z) = (x, x);
                for _ in 0..n {
                    let term = gv[y].as_f64() * hv[z].as_f64();
                    if count_pairs && term != 0.0 {
                        pairs += 1;
                    }
                    row += term;
                    y += 1;
                    if y == n {
                        y = 0;
                    }
                    z += 2;
                    if z >= n {
                        z -= n;
                    }
                }
                all += fx * row;
            }
            (all, trivial, pairs)
        })
        .collect();

    let (mut all, mut trivial, mut pairs) = (0.0, 0.0, 0u64);
    for (a, t, c) in partials {
        all += a;
        trivial += t;
        pairs += c;
    }
    let norm = (n as f64) * (n as f64);
    let lambda = all / norm;
    let trivial_mass = trivial / norm;
    Ok(APReport {
        lambda,
        trivial_mass,
        nontrivial_mass: lambda - trivial_mass,
        pair_count: count_pairs.then_some(pairs),
    })
}

/// Lambda(f, g, h) = sum_t f^(t) g^(-2t) h^(t) for the positive-sign
/// transform (orthogonality applied to x + z = 2y).
pub fn lambda_fourier<T: Scalar>(
    f: &CyclicFunction<T>,
    g: &CyclicFunction<T>,
    h: &CyclicFunction<T>,
) -> Result<f64> {
    let p = check_moduli(f, g, h)?;
    if p == 2 {
        return Err(LabError::InvalidArgument("lambda_fourier needs an odd prime modulus".into()));
    }
    let (fs, gs, hs) = (f.spectrum(), g.spectrum(), h.spectrum());
    let n = p as usize;
    let mut acc = 0.0f64;
    let mut minus_two_t = 0usize;
    for t in 0..n {
        let a = fs.coefficients()[t];
        let b = gs.coefficients()[minus_two_t];
        let c = hs.coefficients()[t];
        // real part of a * b * c, widened to f64
        let (ar, ai) = (a.re.as_f64(), a.im.as_f64());
        let (br, bi) = (b.re.as_f64(), b.im.as_f64());
        let (cr, ci) = (c.re.as_f64(), c.im.as_f64());
        let (abr, abi) = (ar * br - ai * bi, ar * bi + ai * br);
        acc += abr * cr - abi * ci;
        minus_two_t = (minus_two_t + n - 2) % n;
    }
    Ok(acc)
}

/// The d = 0 part of Lambda: (1/P^2) sum_x f(x) g(x) h(x).
pub fn trivial_mass<T: Scalar>(f: &CyclicFunction<T>, g: &CyclicFunction<T>, h: &CyclicFunction<T>) -> Result<f64> {
    let p = check_moduli(f, g, h)?;
    let s: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .zip(h.values())
        .map(|((a, b), c)| a.as_f64() * b.as_f64() * c.as_f64())
        .sum();
    Ok(s / (p as f64 * p as f64))
}

/// Number of integer progressions x < x+d < x+2d (d > 0) inside `set`.
/// Input need not be sorted; duplicates are ignored.
pub fn count_3aps_integers(set: &[u64]) -> u64 {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let Some(&max) = sorted.last() else {
        return 0;
    };
    let min = sorted[0];
    let span = (max - min) as usize + 1;
    let mut member = vec![false; span];
    for &v in &sorted {
        member[(v - min) as usize] = true;
    }
    let mut count = 0u64;
    for (i, &x) in sorted.iter().enumerate() {
        for &y in &sorted[i + 1..] {
            let z = 2 * y - x;
            if z > max {
                break;
            }
            if member[(z - min) as usize] {
                count += 1;
            }
        }
    }
    count
}

/// A progression-free subset of [1, limit] from spheres in digit space.
///
/// Integers with base-(2d-1) digits below d add without carries, so
/// x + z = 2y holds digitwise; on a sphere sum a_i^2 = r that forces
/// x = y = z by strict convexity. The largest sphere over a small search of
/// (dimension, digit bound) pairs is kept, shifted up by one.
pub fn behrend_set(limit: u64) -> Vec<u64> {
    if limit == 0 {
        return Vec::new();
    }
    let mut best: Vec<u64> = vec![0];
    for dim in 2..=40u32 {
        // past this dimension the leading digit can only be zero
        if 3u64.checked_pow(dim - 1).is_none_or(|v| v >= limit) {
            break;
        }
        // smallest digit bound whose cube of side (2d - 1) covers [0, limit)
        let mut d = 2u64;
        while (2 * d - 1).checked_pow(dim).is_some_and(|v| v < limit) {
            d += 1;
        }
        for bound in d..d + 3 {
            let candidate = largest_sphere(limit, dim, bound);
            if candidate.len() > best.len() {
                best = candidate;
            }
        }
    }
    best.iter().map(|v| v + 1).collect()
}

fn largest_sphere(limit: u64, dim: u32, bound: u64) -> Vec<u64> {
    let base = 2 * bound - 1;
    let mut spheres: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
    let Some(top) = base.checked_pow(dim - 1) else {
        return Vec::new();
    };
    fn walk(
        place: u64,
        base: u64,
        bound: u64,
        value: u64,
        norm: u64,
        limit: u64,
        out: &mut std::collections::BTreeMap<u64, Vec<u64>>,
    ) {
        for digit in 0..bound {
            let v = value + digit * place;
            if v >= limit {
                break;
            }
            let r = norm + digit * digit;
            if place == 1 {
                out.entry(r).or_default().push(v);
            } else {
                walk(place / base, base, bound, v, r, limit, out);
            }
        }
    }
    walk(top, base, bound, 0, 0, limit, &mut spheres);
    let mut best: Vec<u64> = Vec::new();
    for members in spheres.into_values() {
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}

/// Lexicographically greedy progression-free subset of [0, limit].
pub fn greedy_3ap_free(limit: u64) -> Vec<u64> {
    let mut member = vec![false; limit as usize + 1];
    let mut chosen: Vec<u64> = Vec::new();
    for c in 0..=limit {
        let blocked = chosen
            .iter()
            .any(|&a| (a + c) % 2 == 0 && member[((a + c) / 2) as usize]);
        if !blocked {
            member[c as usize] = true;
            chosen.push(c);
        }
    }
    chosen
}
