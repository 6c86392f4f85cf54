//! Prime-length DFT by the chirp reduction to a power-of-two cyclic
//! convolution, plus the direct O(P^2) sum used for small moduli.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Scalar;

/// Sign of the exponent: `Plus` computes sum_x v(x) e^{+2 pi i x t / P}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Below this length the direct sum is both faster and exact enough.
pub const DIRECT_CUTOFF: usize = 64;

/// Unnormalized DFT of arbitrary length with the given exponent sign.
pub fn dft<T: Scalar>(input: &[Complex<T>], sign: Sign) -> Vec<Complex<T>> {
    if input.len() < DIRECT_CUTOFF {
        dft_direct(input, sign)
    } else {
        dft_chirp(input, sign)
    }
}

fn unit(angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c, s)
}

fn to_complex<T: Scalar>((re, im): (f64, f64)) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// O(n^2) sum with exact index reduction `x t mod n` into a root table.
pub fn dft_direct<T: Scalar>(input: &[Complex<T>], sign: Sign) -> Vec<Complex<T>> {
    let n = input.len();
    let s = if sign == Sign::Plus { 1.0 } else { -1.0 };
    let roots: Vec<Complex<T>> = (0..n)
        .map(|j| to_complex(unit(s * std::f64::consts::TAU * j as f64 / n as f64)))
        .collect();
    (0..n)
        .map(|t| {
            let mut acc = Complex::zero();
            for (x, v) in input.iter().enumerate() {
                acc = acc + *v * roots[(x as u128 * t as u128 % n as u128) as usize];
            }
            acc
        })
        .collect()
}

/// e^{+ pi i k^2 / n}, with k^2 reduced mod 2n before leaving integers.
fn chirp(k: usize, n: usize) -> (f64, f64) {
    let two_n = 2 * n as u128;
    let sq = (k as u128 * k as u128) % two_n;
    unit(std::f64::consts::PI * sq as f64 / n as f64)
}

fn dft_chirp<T: Scalar>(input: &[Complex<T>], sign: Sign) -> Vec<Complex<T>> {
    let n = input.len();
    let len = (2 * n - 1).next_power_of_two();
    let ch: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let c = to_complex::<T>(chirp(k, n));
            if sign == Sign::Plus {
                c
            } else {
                c.conj()
            }
        })
        .collect();
    let twiddles = twiddles::<T>(len);

    let mut a = vec![Complex::zero(); len];
    for (slot, (v, c)) in a.iter_mut().zip(input.iter().zip(&ch)) {
        *slot = *v * *c;
    }
    let mut b = vec![Complex::zero(); len];
    b[0] = ch[0].conj();
    for k in 1..n {
        b[k] = ch[k].conj();
        b[len - k] = ch[k].conj();
    }
    fft_pow2(&mut a, &twiddles, false);
    fft_pow2(&mut b, &twiddles, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = *x * *y;
    }
    fft_pow2(&mut a, &twiddles, true);
    let scale = T::one() / T::from_count(len);
    (0..n).map(|t| a[t] * ch[t] * scale).collect()
}

/// e^{-2 pi i k / len} for k < len / 2.
fn twiddles<T: Scalar>(len: usize) -> Vec<Complex<T>> {
    (0..len / 2)
        .map(|k| to_complex(unit(-std::f64::consts::TAU * k as f64 / len as f64)))
        .collect()
}

/// In-place iterative radix-2 FFT (unnormalized); `inverse` flips the sign.
pub(crate) fn fft_pow2<T: Scalar>(buf: &mut [Complex<T>], twiddles: &[Complex<T>], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let step = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for j in 0..half {
                let mut w = twiddles[j * step];
                if inverse {
                    w = w.conj();
                }
                let u = buf[start + j];
                let v = buf[start + j + half] * w;
                buf[start + j] = u + v;
                buf[start + j + half] = u - v;
            }
        }
        half *= 2;
    }
}
