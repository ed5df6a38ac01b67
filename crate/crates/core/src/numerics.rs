//! Dense complex vectors, the quadratic reference DFT, and rank tracking.
//!
//! Everything here is deliberately plain: the reference transform is the
//! matrix definition `D[j][k] = ω^{jk} / √N` with `ω = e^{-2πi/N}` evaluated
//! entry by entry, and it is what every faster or symbolic routine in the
//! crate is checked against.

use std::f64::consts::PI;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thresholds used for zero tests and residual checks.
///
/// Both apply to unit-scale quantities (unit-norm vectors or relative residuals).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub zero_tol: f64,
    pub residual_tol: f64,
}

impl TolerancePolicy {
    pub const MAX: f64 = 1e-6;

    pub fn new(zero_tol: f64, residual_tol: f64) -> Result<Self> {
        let ok = |t: f64| t > 0.0 && t <= Self::MAX;
        if ok(zero_tol) && ok(residual_tol) {
            Ok(Self { zero_tol, residual_tol })
        } else {
            Err(Error::InvalidTolerance { zero_tol, residual_tol })
        }
    }

    /// Same threshold for both checks.
    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, tol)
    }
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { zero_tol: 1e-9, residual_tol: 1e-9 }
    }
}

/// A length-`n` complex vector, `n >= 1`, with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    entries: Vec<Complex64>,
}

impl DenseVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// The standard basis vector `e_j`.
    pub fn unit(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::DimensionMismatch { expected: n, found: j + 1 });
        }
        let mut v = Self::zeros(n)?;
        v.entries[j] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; kept for the `len` convention.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { entries: self.entries.iter().map(|z| z * factor).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(Self {
            entries: self.entries.iter().zip(&other.entries).map(|(x, y)| x - y).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(Self {
            entries: self.entries.iter().zip(&other.entries).map(|(x, y)| x + y).collect(),
        })
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Number of entries with magnitude strictly above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.entries.iter().filter(|z| z.norm() > threshold).count()
    }
}

impl Index<usize> for DenseVector {
    type Output = Complex64;

    fn index(&self, j: usize) -> &Complex64 {
        &self.entries[j]
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `ω^m` for `ω = e^{-2πi/n}`, with `m` reduced modulo `n` first.
pub fn omega_pow(n: usize, m: i64) -> Complex64 {
    let r = m.rem_euclid(n as i64) as f64;
    let (s, c) = (2.0 * PI * r / n as f64).sin_cos();
    Complex64::new(c, -s)
}

/// Reference DFT: `w_j = (1/√N) Σ_k ω^{jk} v_k`, evaluated directly in O(N²).
pub fn naive_dft(v: &DenseVector) -> DenseVector {
    let n = v.len();
    let scale = 1.0 / (n as f64).sqrt();
    let entries = (0..n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, x) in v.entries().iter().enumerate() {
                // Reduce the exponent exactly before going to floating point.
                let e = ((j * k) % n) as f64;
                let (s, c) = (2.0 * PI * e / n as f64).sin_cos();
                acc += x * Complex64::new(c, -s);
            }
            acc * scale
        })
        .collect();
    DenseVector { entries }
}

/// `D^j v` for `j` in `0..=3`, by repeated application of [`naive_dft`].
pub fn dft_pow(v: &DenseVector, j: u32) -> Result<DenseVector> {
    if j > 3 {
        return Err(Error::InvalidPower(j));
    }
    let mut out = v.clone();
    for _ in 0..j {
        out = naive_dft(&out);
    }
    Ok(out)
}

/// `⟨x, y⟩ = Σ_j x_j · conj(y_j)`: linear in the first argument.
pub fn inner(x: &DenseVector, y: &DenseVector) -> Result<Complex64> {
    check_dims(x.len(), y.len())?;
    Ok(inner_slices(x.entries(), y.entries()))
}

pub(crate) fn inner_slices(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// Incremental rank tracker backed by an orthonormal set of pivot vectors.
///
/// Candidates are reduced against the pivots with modified Gram-Schmidt
/// (two sweeps) and accepted when the remaining residual is not negligible
/// relative to the candidate's own norm.
#[derive(Debug, Clone)]
pub struct EliminationState {
    dim: usize,
    pivots: Vec<Vec<Complex64>>,
}

impl EliminationState {
    pub fn new(dim: usize) -> Self {
        Self { dim, pivots: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[Vec<Complex64>] {
        &self.pivots
    }

    /// Returns `true` and grows the rank by one iff `v` is independent of
    /// everything accepted so far.
    pub fn try_extend_rank(&mut self, v: &DenseVector, tol: &TolerancePolicy) -> Result<bool> {
        check_dims(self.dim, v.len())?;
        let norm = v.norm();
        if norm == 0.0 || self.rank() == self.dim {
            return Ok(false);
        }
        let mut residual = v.entries().to_vec();
        for _ in 0..2 {
            for p in &self.pivots {
                let c = inner_slices(&residual, p);
                for (r, q) in residual.iter_mut().zip(p) {
                    *r -= c * q;
                }
            }
        }
        let rnorm = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if rnorm <= tol.residual_tol * norm {
            return Ok(false);
        }
        let inv = 1.0 / rnorm;
        residual.iter_mut().for_each(|z| *z *= inv);
        self.pivots.push(residual);
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(x: &DenseVector, y: &DenseVector, tol: f64) -> bool {
        x.distance(y).unwrap() <= tol
    }

    fn random_vector(n: usize, seed: u64) -> DenseVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        DenseVector::new((0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(DenseVector::new(vec![]), Err(Error::EmptyVector)));
        assert!(matches!(
            DenseVector::new(vec![c(0.0, 0.0), c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn tolerance_bounds() {
        assert!(TolerancePolicy::new(1e-9, 1e-9).is_ok());
        assert!(TolerancePolicy::new(0.0, 1e-9).is_err());
        assert!(TolerancePolicy::new(1e-9, 1e-3).is_err());
        let d = TolerancePolicy::default();
        assert_eq!((d.zero_tol, d.residual_tol), (1e-9, 1e-9));
    }

    #[test]
    fn dft_of_e0_is_flat() {
        let w = naive_dft(&DenseVector::unit(4, 0).unwrap());
        let want = DenseVector::from_real(&[0.5; 4]).unwrap();
        assert!(close(&w, &want, 1e-15));
    }

    #[test]
    fn one_point_dft_is_identity() {
        let v = DenseVector::new(vec![c(0.3, -2.0)]).unwrap();
        assert!(close(&naive_dft(&v), &v, 1e-15));
    }

    #[test]
    fn delta_train_is_fixed_point_for_n4() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = DenseVector::from_real(&[h, 0.0, h, 0.0]).unwrap();
        assert!(close(&naive_dft(&v), &v, 1e-15));
    }

    #[test]
    fn dft_squared_reverses_indices() {
        let e1 = DenseVector::unit(4, 1).unwrap();
        let e3 = DenseVector::unit(4, 3).unwrap();
        assert!(close(&dft_pow(&e1, 2).unwrap(), &e3, 1e-15));
        let v = random_vector(7, 1);
        assert_eq!(dft_pow(&v, 0).unwrap(), v);
        let four = dft_pow(&dft_pow(&v, 2).unwrap(), 2).unwrap();
        assert!(close(&four, &v, 1e-12));
        assert!(matches!(dft_pow(&v, 4), Err(Error::InvalidPower(4))));
    }

    #[test]
    fn inner_product_convention() {
        let e0 = DenseVector::unit(2, 0).unwrap();
        let e1 = DenseVector::unit(2, 1).unwrap();
        assert_eq!(inner(&e0, &e1).unwrap(), c(0.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = DenseVector::from_real(&[h, 0.0, h, 0.0]).unwrap();
        assert!((inner(&t, &t).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let x = DenseVector::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let y = DenseVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(inner(&x, &y).unwrap(), c(0.0, 1.0));
        assert!(matches!(inner(&x, &t), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn elimination_examples() {
        let tol = TolerancePolicy::default();
        let mut st = EliminationState::new(3);
        let v = DenseVector::new(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]).unwrap();
        assert!(st.try_extend_rank(&v, &tol).unwrap());
        assert_eq!(st.rank(), 1);
        assert!(!st.try_extend_rank(&v.scaled(c(2.0, 0.0)), &tol).unwrap());
        assert_eq!(st.rank(), 1);

        let mut st = EliminationState::new(2);
        st.try_extend_rank(&DenseVector::unit(2, 0).unwrap(), &tol).unwrap();
        let e01 = DenseVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(st.try_extend_rank(&e01, &tol).unwrap());
        assert_eq!(st.rank(), 2);
        // Full rank: nothing more gets in.
        assert!(!st.try_extend_rank(&random_vector(2, 3), &tol).unwrap());
        assert!(st.try_extend_rank(&random_vector(3, 3), &tol).is_err());
    }

    proptest! {
        #[test]
        fn unitarity(n in 1usize..=128, seed in any::<u64>()) {
            let v = random_vector(n, seed);
            let w = naive_dft(&v);
            prop_assert!((w.norm() - v.norm()).abs() <= 1e-9 * v.norm().max(1.0));
        }

        #[test]
        fn fourth_power_is_identity(n in 1usize..=64, seed in any::<u64>()) {
            let v = random_vector(n, seed);
            let mut w = v.clone();
            for _ in 0..4 { w = naive_dft(&w); }
            prop_assert!(close(&w, &v, 1e-9));
        }

        #[test]
        fn parseval(n in 1usize..=64, s1 in any::<u64>(), s2 in any::<u64>()) {
            let x = random_vector(n, s1);
            let y = random_vector(n, s2);
            let lhs = inner(&naive_dft(&x), &naive_dft(&y)).unwrap();
            let rhs = inner(&x, &y).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-9);
        }

        #[test]
        fn spanning_set_reaches_full_rank(n in 1usize..=24, seed in any::<u64>()) {
            let tol = TolerancePolicy::default();
            let mut st = EliminationState::new(n);
            // Random vectors first, then the standard basis as a guaranteed spanning tail.
            for i in 0..n / 2 {
                st.try_extend_rank(&random_vector(n, seed.wrapping_add(i as u64)), &tol).unwrap();
                prop_assert!(st.rank() <= n);
            }
            for j in 0..n {
                st.try_extend_rank(&DenseVector::unit(n, j).unwrap(), &tol).unwrap();
                prop_assert!(st.rank() <= n);
            }
            prop_assert_eq!(st.rank(), n);
        }
    }
}
