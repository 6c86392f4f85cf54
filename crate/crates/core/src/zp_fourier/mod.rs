//! Real functions on Z/PZ for prime P with the normalized transform
//!
//! ```text
//! f^(t) = E_x f(x) e^{+2 pi i x t / P}      f(x) = sum_t f^(t) e^{-2 pi i x t / P}
//! (f * g)(x) = E_y f(y) g(x - y)            (f * g)^ = f^ g^
//! ```
//!
//! The forward sign is positive; the inverse carries the minus sign. Getting
//! this backwards silently swaps `t` and `-t`, which breaks the closed form of
//! the progression operator.

pub mod chirp;

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{invalid, LabError, Result};
use crate::prime_engine::is_prime;
use crate::scalar::Scalar;
use chirp::{dft, Sign};

/// A function Z/PZ -> R stored densely; index `i` is the residue `i`, so a
/// negative residue `-x` lives at `P - x`.
#[derive(Clone, Debug)]
pub struct CyclicFunction<T: Scalar> {
    modulus: u64,
    values: Vec<T>,
    spectrum: OnceLock<Spectrum<T>>,
}

/// The P transform coefficients of a cyclic function; entry `t` is f^(t).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Scalar> {
    modulus: u64,
    coefficients: Vec<Complex<T>>,
}

fn check_modulus(p: u64) -> Result<()> {
    if !is_prime(p) {
        return invalid(format!("modulus {p} is not prime"));
    }
    if usize::try_from(p).is_err() {
        return Err(LabError::ResourceLimit(format!("modulus {p} does not fit in memory")));
    }
    Ok(())
}

fn check_order(k: f64) -> Result<()> {
    if k.is_nan() || k < 1.0 {
        return invalid(format!("norm exponent must be >= 1, got {k}"));
    }
    Ok(())
}

impl<T: Scalar> CyclicFunction<T> {
    pub fn new(modulus: u64, values: Vec<T>) -> Result<Self> {
        check_modulus(modulus)?;
        if values.len() as u64 != modulus {
            return invalid(format!(
                "expected {modulus} values, got {}",
                values.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("value at residue {i} is not finite"));
        }
        Ok(CyclicFunction {
            modulus,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_fn(modulus: u64, mut f: impl FnMut(u64) -> T) -> Result<Self> {
        check_modulus(modulus)?;
        Self::new(modulus, (0..modulus).map(&mut f).collect())
    }

    pub fn constant(modulus: u64, c: T) -> Result<Self> {
        Self::from_fn(modulus, |_| c)
    }

    /// `weight` on every residue in `set` (reduced mod P), zero elsewhere.
    pub fn scaled_indicator(modulus: u64, set: &[u64], weight: T) -> Result<Self> {
        check_modulus(modulus)?;
        let mut values = vec![T::zero(); modulus as usize];
        for &x in set {
            values[(x % modulus) as usize] = weight;
        }
        Self::new(modulus, values)
    }

    pub fn indicator(modulus: u64, set: &[u64]) -> Result<Self> {
        Self::scaled_indicator(modulus, set, T::one())
    }

    /// P * 1_{0}: the identity for the normalized convolution.
    pub fn point_mass(modulus: u64) -> Result<Self> {
        Self::scaled_indicator(modulus, &[0], T::from_u64(modulus).unwrap())
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, residue: u64) -> T {
        self.values[(residue % self.modulus) as usize]
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Memoized forward transform.
    pub fn spectrum(&self) -> &Spectrum<T> {
        self.spectrum.get_or_init(|| compute_forward(self))
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_count(self.values.len())
    }

    /// ||f||_{L^k} = (E_x |f(x)|^k)^{1/k}.
    pub fn lp_norm(&self, k: f64) -> Result<T> {
        check_order(k)?;
        let n = T::from_count(self.values.len());
        if k == 1.0 {
            return Ok(self.values.iter().map(|v| v.abs()).sum::<T>() / n);
        }
        if k == 2.0 {
            return Ok((self.values.iter().map(|v| *v * *v).sum::<T>() / n).sqrt());
        }
        let kt = T::lit(k);
        let mean = self.values.iter().map(|v| v.abs().powf(kt)).sum::<T>() / n;
        Ok(mean.powf(kt.recip()))
    }

    /// E_x |f(x)|^k without the final root; exact for integer k via powi.
    pub fn moment(&self, k: u32) -> T {
        let n = T::from_count(self.values.len());
        self.values.iter().map(|v| v.abs().powi(k as i32)).sum::<T>() / n
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Residues where the function is nonzero.
    pub fn support(&self) -> Vec<u64> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| i as u64)
            .collect()
    }

    /// Translate: x -> f(x - shift).
    pub fn shifted(&self, shift: u64) -> Self {
        let p = self.modulus as usize;
        let s = (shift % self.modulus) as usize;
        let values = (0..p).map(|x| self.values[(x + p - s) % p]).collect();
        CyclicFunction {
            modulus: self.modulus,
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Pointwise combination with a function of the same modulus.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        same_modulus(self.modulus, other.modulus)?;
        Self::new(
            self.modulus,
            self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        )
    }
}

fn same_modulus(p: u64, q: u64) -> Result<()> {
    if p != q {
        return invalid(format!("modulus mismatch: {p} vs {q}"));
    }
    Ok(())
}

fn compute_forward<T: Scalar>(f: &CyclicFunction<T>) -> Spectrum<T> {
    let input: Vec<Complex<T>> = f.values.iter().map(|v| Complex::new(*v, T::zero())).collect();
    let scale = T::one() / T::from_count(input.len());
    let coefficients = dft(&input, Sign::Plus).into_iter().map(|c| c * scale).collect();
    Spectrum {
        modulus: f.modulus,
        coefficients,
    }
}

/// f^(t) = (1/P) sum_x f(x) e^{+2 pi i x t / P} for every t.
pub fn forward_transform<T: Scalar>(f: &CyclicFunction<T>) -> Spectrum<T> {
    f.spectrum().clone()
}

/// f(x) = sum_t s(t) e^{-2 pi i x t / P}; imaginary parts are discarded.
pub fn inverse_transform<T: Scalar>(s: &Spectrum<T>) -> CyclicFunction<T> {
    let values = dft(&s.coefficients, Sign::Minus).into_iter().map(|c| c.re).collect();
    CyclicFunction {
        modulus: s.modulus,
        values,
        spectrum: OnceLock::new(),
    }
}

/// (f * g)(x) = E_y f(y) g(x - y), computed through the spectra.
pub fn convolve<T: Scalar>(f: &CyclicFunction<T>, g: &CyclicFunction<T>) -> Result<CyclicFunction<T>> {
    same_modulus(f.modulus, g.modulus)?;
    let product = f.spectrum().pointwise(g.spectrum());
    Ok(inverse_transform(&product))
}

pub fn lp_norm<T: Scalar>(f: &CyclicFunction<T>, k: f64) -> Result<T> {
    f.lp_norm(k)
}

pub fn spectral_lp_norm<T: Scalar>(s: &Spectrum<T>, k: f64) -> Result<T> {
    s.lp_norm(k)
}

/// Spec_delta(f) together with the adjoined frequency 1.
pub fn threshold_spectrum<T: Scalar>(s: &Spectrum<T>, delta: T) -> Result<Vec<u64>> {
    s.threshold_spectrum(delta)
}

impl<T: Scalar> Spectrum<T> {
    pub fn new(modulus: u64, coefficients: Vec<Complex<T>>) -> Result<Self> {
        check_modulus(modulus)?;
        if coefficients.len() as u64 != modulus {
            return invalid(format!(
                "expected {modulus} coefficients, got {}",
                coefficients.len()
            ));
        }
        Ok(Spectrum {
            modulus,
            coefficients,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    /// f^(t) for any integer frequency, reduced mod P.
    pub fn at(&self, t: i64) -> Complex<T> {
        self.coefficients[t.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn pointwise(&self, other: &Self) -> Self {
        debug_assert_eq!(self.modulus, other.modulus);
        Spectrum {
            modulus: self.modulus,
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// ||f^||_{l^k} = (sum_t |f^(t)|^k)^{1/k}.
    pub fn lp_norm(&self, k: f64) -> Result<T> {
        check_order(k)?;
        if k == 2.0 {
            return Ok(self.coefficients.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt());
        }
        let kt = T::lit(k);
        let sum = self.coefficients.iter().map(|c| c.norm().powf(kt)).sum::<T>();
        Ok(sum.powf(kt.recip()))
    }

    /// sum_t |f^(t)|^4, accumulated from squared moduli.
    pub fn fourth_moment(&self) -> T {
        self.coefficients
            .iter()
            .map(|c| {
                let s = c.norm_sqr();
                s * s
            })
            .sum()
    }

    /// {t : |f^(t)| >= delta}, ascending.
    pub fn large_spectrum(&self, delta: T) -> Result<Vec<u64>> {
        if !(delta > T::zero()) {
            return invalid(format!("threshold must be positive, got {delta}"));
        }
        let d2 = delta * delta;
        Ok(self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() >= d2)
            .map(|(t, _)| t as u64)
            .collect())
    }

    /// Spec_delta with 1 adjoined, ascending.
    pub fn threshold_spectrum(&self, delta: T) -> Result<Vec<u64>> {
        let mut set = self.large_spectrum(delta)?;
        if let Err(pos) = set.binary_search(&1) {
            set.insert(pos, 1);
        }
        Ok(set)
    }
}
