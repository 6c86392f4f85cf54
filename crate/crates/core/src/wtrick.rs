//! The W-trick: pick z, form the primorial W, keep the densest residue class
//! b mod W, and pull it back to a scaled indicator `a` on Z/PZ.

use log::warn;
use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::prime_engine::{is_prime, next_prime_above, PrimeTable};
use crate::scalar::Scalar;
use crate::zp_fourier::CyclicFunction;

/// Largest N accepted; keeps 3N/W and P far from overflow.
pub const MAX_N: u64 = 1 << 50;

/// Euler-Mascheroni constant, used only in the W/phi(W) diagnostic.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// z, W, phi(W) and P for a given N, plus the window checks that hold only
/// for large N (reported, never enforced).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WParameters {
    pub n: u64,
    pub z: f64,
    pub w: u64,
    pub phi_w: u64,
    pub p: u64,
    /// (4/5) z <= ln W <= (4/3) z
    pub log_w_window: bool,
    /// ln z <= W / phi(W) <= 2 ln z
    pub w_phi_window: bool,
    /// (W / phi(W)) / (e^gamma ln z)
    pub mertens_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidueChoice {
    pub b: u64,
    /// |{m in A : m = b mod W, m > W}|
    pub count: u64,
    /// (|A| - pi(W)) / phi(W), the averaging lower bound for `count`.
    pub averaging_floor: f64,
}

/// The assembled construction: every quantity needed to rebuild `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct WTrickContext {
    pub n: u64,
    pub z: f64,
    pub w: u64,
    pub phi_w: u64,
    pub b: u64,
    pub p: u64,
    /// ln N / ln z
    pub scale: f64,
    /// Sorted; m = b + n W for each n in A0.
    pub a0: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct SievedFunction<T: Scalar> {
    pub context: WTrickContext,
    pub a: CyclicFunction<T>,
    pub set_size: u64,
    /// |A| / pi(N)
    pub alpha: f64,
    /// scale |A0| / P
    pub l1_norm: f64,
}

/// Flags derived from one construction; none of them is enforced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsHold {
    pub log_w_window: bool,
    pub w_phi_window: bool,
    /// ||a||_1 >= alpha / 10
    pub mass: bool,
    /// alpha >= (ln N)^{-1/4}
    pub alpha_threshold: bool,
    /// chosen class count >= averaging floor
    pub averaging: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WTrickReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub z: f64,
    #[serde(rename = "W")]
    pub w: u64,
    #[serde(rename = "phiW")]
    pub phi_w: u64,
    pub b: u64,
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "|A|")]
    pub set_size: u64,
    #[serde(rename = "|A0|")]
    pub a0_size: u64,
    pub alpha: f64,
    pub scale: f64,
    #[serde(rename = "l1_norm")]
    pub l1_norm: f64,
    #[serde(rename = "mertens_ratio")]
    pub mertens_ratio: f64,
    #[serde(rename = "bounds_hold")]
    pub bounds_hold: BoundsHold,
}

fn small_primes_upto(x: u64) -> impl Iterator<Item = u64> {
    (2..=x).filter(|&q| is_prime(q))
}

pub fn compute_parameters(n: u64, z_override: Option<f64>) -> Result<WParameters> {
    if n < 100 {
        return invalid(format!("N must be at least 100, got {n}"));
    }
    if n > MAX_N {
        return Err(LabError::ResourceLimit(format!("N = {n} exceeds 2^50")));
    }
    let ln_n = (n as f64).ln();
    let z = match z_override {
        Some(z) if !(2.0..=ln_n).contains(&z) => {
            return invalid(format!("z override {z} outside [2, ln N = {ln_n:.4}]"));
        }
        Some(z) => z,
        None => ln_n / 4.0,
    };
    // W always contains 2: below N = e^8 the rule z = ln N / 4 falls under 2
    // and the empty product would leave nothing to sieve.
    let top = z.max(2.0).floor() as u64;
    let (mut w, mut phi_w) = (1u64, 1u64);
    for q in small_primes_upto(top) {
        w = w
            .checked_mul(q)
            .ok_or_else(|| LabError::ResourceLimit(format!("primorial up to {z} overflows")))?;
        phi_w *= q - 1;
    }
    if w >= n {
        return Err(LabError::DegenerateParameters(format!(
            "W = {w} is not below N = {n}; z = {z} is too large"
        )));
    }
    let p = next_prime_above(3 * n / w)?;
    let ln_w = (w as f64).ln();
    let ratio = w as f64 / phi_w as f64;
    let ln_z = z.ln();
    Ok(WParameters {
        n,
        z,
        w,
        phi_w,
        p,
        log_w_window: 0.8 * z <= ln_w && ln_w <= 4.0 / 3.0 * z,
        w_phi_window: ln_z <= ratio && ratio <= 2.0 * ln_z,
        mertens_ratio: ratio / (EULER_GAMMA.exp() * ln_z),
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The residue class mod W (coprime to W) holding the most elements of `set`
/// above W; ties go to the smallest b.
pub fn choose_residue(set: &[u64], w: u64) -> Result<ResidueChoice> {
    if set.is_empty() {
        return Err(LabError::EmptySelection("input set is empty".into()));
    }
    if w == 0 {
        return invalid("modulus W must be positive");
    }
    let mut counts = vec![0u64; w as usize];
    for &m in set {
        if m > w {
            counts[(m % w) as usize] += 1;
        }
    }
    let mut best: Option<(u64, u64)> = None;
    for b in 0..w {
        if gcd(b, w) != 1 {
            continue;
        }
        let c = counts[b as usize];
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((b, c));
        }
    }
    let (b, count) = best.expect("some residue is coprime to W");
    if count == 0 {
        return Err(LabError::EmptySelection(format!(
            "no element above W = {w} lies in a class coprime to W"
        )));
    }
    let phi = (0..w).filter(|&r| gcd(r, w) == 1).count() as f64;
    let pi_w = small_primes_upto(w).count() as f64;
    Ok(ResidueChoice {
        b,
        count,
        averaging_floor: (set.len() as f64 - pi_w) / phi,
    })
}

/// Builds a = (ln N / ln z) 1_{A0} on Z/PZ from a set of primes in [1, N].
pub fn build_sieved_function<T: Scalar>(
    set: &[u64],
    params: &WParameters,
    b: u64,
    pi_n: u64,
) -> Result<SievedFunction<T>> {
    if set.is_empty() {
        return Err(LabError::EmptySelection("input set is empty".into()));
    }
    if let Some(m) = set.iter().find(|&&m| m == 0 || m > params.n) {
        return Err(LabError::InvalidInput(format!("{m} lies outside [1, {}]", params.n)));
    }
    let w = params.w;
    let mut a0 = Vec::new();
    for &m in set {
        if m > w && m % w == b {
            if !is_prime(m) {
                return Err(LabError::InvalidInput(format!("{m} is not prime")));
            }
            a0.push((m - b) / w);
        }
    }
    a0.sort_unstable();
    a0.dedup();
    let scale = (params.n as f64).ln() / params.z.ln();
    if let Some(&top) = a0.last() {
        assert!(3 * top < params.p, "A0 escapes [0, P/3]");
    }
    let a = CyclicFunction::scaled_indicator(params.p, &a0, T::lit(scale))?;
    let set_size = {
        let mut s = set.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len() as u64
    };
    let alpha = set_size as f64 / pi_n as f64;
    if alpha < (params.n as f64).ln().powf(-0.25) {
        warn!("relative density {alpha:.4} is below (ln N)^(-1/4); proceeding");
    }
    let l1_norm = scale * a0.len() as f64 / params.p as f64;
    Ok(SievedFunction {
        context: WTrickContext {
            n: params.n,
            z: params.z,
            w,
            phi_w: params.phi_w,
            b,
            p: params.p,
            scale,
            a0,
        },
        a,
        set_size,
        alpha,
        l1_norm,
    })
}

/// Whole construction from a prime table covering [1, N].
pub fn construct<T: Scalar>(
    set: &[u64],
    n: u64,
    z_override: Option<f64>,
    table: &PrimeTable,
) -> Result<(SievedFunction<T>, ResidueChoice, WParameters)> {
    let params = compute_parameters(n, z_override)?;
    let pi_n = table.prime_count(n)?;
    let choice = choose_residue(set, params.w)?;
    let sieved = build_sieved_function(set, &params, choice.b, pi_n)?;
    Ok((sieved, choice, params))
}

impl<T: Scalar> SievedFunction<T> {
    pub fn report(&self, params: &WParameters, choice: &ResidueChoice) -> WTrickReport {
        let ctx = &self.context;
        WTrickReport {
            n: ctx.n,
            z: ctx.z,
            w: ctx.w,
            phi_w: ctx.phi_w,
            b: ctx.b,
            p: ctx.p,
            set_size: self.set_size,
            a0_size: ctx.a0.len() as u64,
            alpha: self.alpha,
            scale: ctx.scale,
            l1_norm: self.l1_norm,
            mertens_ratio: params.mertens_ratio,
            bounds_hold: BoundsHold {
                log_w_window: params.log_w_window,
                w_phi_window: params.w_phi_window,
                mass: self.l1_norm >= self.alpha / 10.0,
                alpha_threshold: self.alpha >= (ctx.n as f64).ln().powf(-0.25),
                averaging: choice.count as f64 >= choice.averaging_floor,
            },
        }
    }
}
