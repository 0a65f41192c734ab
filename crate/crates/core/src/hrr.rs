//! Holographic reduced representations: dense real vectors bound by circular
//! convolution.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A fixed-length real vector. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct Hrr<T> {
    values: Vec<T>,
}

impl<T: Scalar> Hrr<T> {
    /// Draws every entry i.i.d. from `Normal(0, 1/sqrt(n))`.
    ///
    /// Samples are drawn in `f64` and narrowed, so `f32` and `f64` vectors
    /// built from the same generator state agree up to rounding.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        let normal = Normal::new(0.0, 1.0 / (n as f64).sqrt()).expect("positive std");
        let values = (0..n).map(|_| T::of(normal.sample(rng))).collect();
        Ok(Self { values })
    }

    /// The delta vector `(1, 0, ..., 0)`, identity of circular convolution.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        let mut values = vec![T::zero(); n];
        values[0] = T::one();
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Self {
            values: vec![T::zero(); n],
        })
    }

    pub fn from_vec(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite HRR entry at index {i}"
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        check_len(self.len(), other.len())?;
        Ok(dot_unchecked(&self.values, &other.values))
    }

    pub fn norm(&self) -> T {
        dot_unchecked(&self.values, &self.values).sqrt()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * k).collect(),
        }
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, k: T, other: &Self) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += k * b;
        }
        Ok(())
    }

    /// `self *= k`
    pub fn scale_in_place(&mut self, k: T) {
        for v in &mut self.values {
            *v *= k;
        }
    }

    pub fn fill_zero(&mut self) {
        for v in &mut self.values {
            *v = T::zero();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        check_len(self.len(), other.len())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max(num_traits::Float::abs(a - b))))
    }
}

impl<T: Scalar> fmt::Debug for Hrr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 6;
        write!(f, "Hrr[n={}; ", self.len())?;
        for v in self.values.iter().take(SHOWN) {
            write!(f, "{v:.4} ")?;
        }
        if self.len() > SHOWN {
            write!(f, "...")?;
        }
        write!(f, "]")
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot_unchecked<T: Scalar>(a: &[T], b: &[T]) -> T {
    // four accumulators let the compiler vectorise the loop
    let mut acc = [T::zero(); 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: T = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .fold(T::zero(), |s, (&x, &y)| s + x * y);
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Forward and inverse transforms planned for one vector length.
#[derive(Clone)]
pub struct Convolver<T: Scalar> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> Convolver<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn spectrum(&self, x: &Hrr<T>) -> Result<Vec<Complex<T>>> {
        check_len(self.n, x.len())?;
        let mut buf: Vec<Complex<T>> = x.values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        Ok(buf)
    }

    /// Inverse transform of a product spectrum, keeping the real part.
    pub fn from_spectrum(&self, mut spectrum: Vec<Complex<T>>) -> Result<Hrr<T>> {
        check_len(self.n, spectrum.len())?;
        self.inverse.process(&mut spectrum);
        let scale = T::one() / T::of(self.n as f64);
        Hrr::from_vec(spectrum.into_iter().map(|c| c.re * scale).collect())
    }

    pub fn convolve(&self, a: &Hrr<T>, b: &Hrr<T>) -> Result<Hrr<T>> {
        check_len(a.len(), b.len())?;
        let mut fa = self.spectrum(a)?;
        let fb = self.spectrum(b)?;
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= *y;
        }
        self.from_spectrum(fa)
    }
}

impl<T: Scalar> fmt::Debug for Convolver<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Convolver").field("n", &self.n).finish()
    }
}

/// Circular convolution `c[j] = sum_k a[k] * b[(j - k) mod n]`, computed in
/// the frequency domain. Plans a fresh transform per call; hot paths should
/// hold a [`Convolver`].
pub fn convolve<T: Scalar>(a: &Hrr<T>, b: &Hrr<T>) -> Result<Hrr<T>> {
    check_len(a.len(), b.len())?;
    Convolver::new(a.len())?.convolve(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_dimension_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            Hrr::<f64>::random(0, &mut rng),
            Err(Error::InvalidDimension(0))
        ));
        assert!(Hrr::<f64>::identity(0).is_err());
    }

    #[test]
    fn identity_is_delta() {
        let id = Hrr::<f64>::identity(4).unwrap();
        assert_eq!(id.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(id.dot(&id).unwrap(), 1.0);
    }

    #[test]
    fn n_one_draws_standard_normal() {
        // sigma = 1/sqrt(1); over many draws the sample variance is ~1
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| Hrr::<f64>::random(1, &mut rng).unwrap().as_slice()[0])
            .collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "var = {var}");
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = Hrr::<f64>::random(64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = Hrr::<f64>::random(64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_std_at_table_length() {
        let n = 6144;
        let x = Hrr::<f64>::random(n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let mean = x.as_slice().iter().sum::<f64>() / n as f64;
        let var = x.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let ratio = var.sqrt() * (n as f64).sqrt();
        assert!((0.8..=1.2).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn small_convolutions() {
        let x = Hrr::from_vec(vec![2.0, -3.0, 5.0]).unwrap();
        let id = Hrr::from_vec(vec![1.0, 0.0, 0.0]).unwrap();
        let shift = Hrr::from_vec(vec![0.0, 1.0, 0.0]).unwrap();
        let same = convolve(&id, &x).unwrap();
        assert!(same.max_abs_diff(&x).unwrap() < 1e-12);
        let rotated = convolve(&shift, &x).unwrap();
        let expected = Hrr::from_vec(vec![5.0, 2.0, -3.0]).unwrap();
        assert!(rotated.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn mismatched_lengths() {
        let a = Hrr::<f64>::zeros(3).unwrap();
        let b = Hrr::<f64>::zeros(4).unwrap();
        assert!(matches!(
            convolve(&a, &b),
            Err(Error::DimensionMismatch { left: 3, right: 4 })
        ));
        assert!(a.dot(&b).is_err());
    }

    #[test]
    fn zero_vector_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = Hrr::<f64>::zeros(32).unwrap();
        let r = Hrr::<f64>::random(32, &mut rng).unwrap();
        assert_eq!(z.dot(&r).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Hrr::from_vec(vec![1.0, f64::NAN]).is_err());
        assert!(Hrr::from_vec(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn f32_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Hrr::<f32>::random(16, &mut rng).unwrap();
        let id = Hrr::<f32>::identity(16).unwrap();
        let c = convolve(&id, &a).unwrap();
        assert!(c.max_abs_diff(&a).unwrap() < 1e-6);
    }
}
