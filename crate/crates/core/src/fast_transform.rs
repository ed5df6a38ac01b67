//! Change of basis through subsampled FFTs.
//!
//! `⟨v, g_{d1}(a, b)⟩` only touches the entries `v[a + d1·t]`, and as `b`
//! varies it is one `d2`-point DFT of that subsequence. Doing this for every
//! offset `a` at strides `η₁` and `η₂` gives every correlation against the
//! delta trains in `O(n log n)`; each `⟨v, F_k g⟩` is then four of those
//! values with fixed phases.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{enumerate_candidates, gram_report, EigenBasis};
use crate::delta_trains::{eta_pair, DivisorPair, ModulatedDeltaTrain};
use crate::eigenprojection::{i_pow, EigenClass};
use crate::error::{Error, Result};
use crate::numerics::{inner, DenseVector, TolerancePolicy};

/// Powers of `e^{-2πi/n}`, shared by every transform whose length divides `n`.
#[derive(Debug, Clone)]
pub struct Twiddles {
    table: Vec<Complex64>,
}

impl Twiddles {
    pub fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|m| {
                let (s, c) = (2.0 * PI * m as f64 / n as f64).sin_cos();
                Complex64::new(c, -s)
            })
            .collect();
        Self { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// `e^{-2πi m/n}` for any integer `m`.
    pub fn pow(&self, m: i64) -> Complex64 {
        self.table[m.rem_euclid(self.table.len() as i64) as usize]
    }

    /// Unnormalized forward DFT `X_k = Σ_j x_j e^{-2πi jk/L}` for `L = x.len()`,
    /// which must divide the table length.
    pub fn transform(&self, x: &[Complex64]) -> Vec<Complex64> {
        let len = x.len();
        assert!(len > 0 && self.table.len() % len == 0, "length {len} does not divide {}", self.table.len());
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        self.transform_into(x, 0, 1, len, self.table.len() / len, &mut out);
        out
    }

    // Decimation in time on the smallest prime factor; prime lengths are done directly.
    fn transform_into(
        &self,
        x: &[Complex64],
        offset: usize,
        stride: usize,
        len: usize,
        tw_stride: usize,
        out: &mut [Complex64],
    ) {
        if len == 1 {
            out[0] = x[offset];
            return;
        }
        let p = smallest_prime_factor(len);
        if p == len {
            for (k, o) in out.iter_mut().enumerate().take(len) {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..len {
                    acc += x[offset + j * stride] * self.table[(j * k % len) * tw_stride];
                }
                *o = acc;
            }
            return;
        }
        let m = len / p;
        let mut sub = vec![Complex64::new(0.0, 0.0); len];
        for (r, chunk) in sub.chunks_mut(m).enumerate() {
            self.transform_into(x, offset + r * stride, stride * p, m, tw_stride * p, chunk);
        }
        for k in 0..m {
            for s in 0..p {
                let idx = k + m * s;
                let mut acc = sub[k];
                for r in 1..p {
                    acc += self.table[(r * idx % len) * tw_stride] * sub[r * m + k];
                }
                out[idx] = acc;
            }
        }
    }
}

fn smallest_prime_factor(n: usize) -> usize {
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

/// Unitary DFT, same normalization as [`crate::numerics::naive_dft`].
pub fn fft(v: &DenseVector) -> DenseVector {
    let n = v.len();
    let tw = Twiddles::new(n);
    let scale = 1.0 / (n as f64).sqrt();
    let out = tw.transform(v.entries()).into_iter().map(|z| z * scale).collect();
    DenseVector::new(out).expect("finite input gives finite output")
}

/// `⟨v, g_{d1}(a, b)⟩` for every `0 <= a < d1`, `0 <= b < d2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    values: Vec<Complex64>,
}

impl CorrelationGrid {
    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.values[a * self.d2 + b]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

pub fn train_correlations(v: &DenseVector, d1: usize) -> Result<CorrelationGrid> {
    let n = v.len();
    if d1 == 0 || n % d1 != 0 {
        return Err(Error::InvalidStride { n, d1 });
    }
    Ok(correlations_with(v, d1, &Twiddles::new(n)))
}

fn correlations_with(v: &DenseVector, d1: usize, tw: &Twiddles) -> CorrelationGrid {
    let n = v.len();
    let d2 = n / d1;
    let scale = 1.0 / (d2 as f64).sqrt();
    let x = v.entries();
    let mut values = Vec::with_capacity(n);
    let mut lane = vec![Complex64::new(0.0, 0.0); d2];
    for a in 0..d1 {
        for (t, slot) in lane.iter_mut().enumerate() {
            *slot = x[a + d1 * t];
        }
        // ⟨v, g(a,b)⟩ = ω^{ab}/√d2 · Σ_t v[a + d1 t] ω^{d1·b·t}, and the sum is a conjugate-free
        // d2-point DFT of the lane because ω^{d1} = e^{-2πi/d2}.
        let spectrum = tw.transform(&lane);
        for (b, z) in spectrum.into_iter().enumerate() {
            values.push(z * tw.pow((a * b) as i64) * scale);
        }
    }
    CorrelationGrid { n, d1, d2, values }
}

/// `⟨v, F_k g_{η₁}(a, b)⟩` for every class and label.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTensor {
    pub n: usize,
    pub eta: DivisorPair,
    values: Vec<Complex64>,
}

impl CorrelationTensor {
    fn zeros(eta: DivisorPair) -> Self {
        Self { n: eta.n, eta, values: vec![Complex64::new(0.0, 0.0); 4 * eta.n] }
    }

    fn slot(&self, k: EigenClass, a: usize, b: usize) -> usize {
        (k.index() * self.eta.eta1 + a) * self.eta.eta2 + b
    }

    pub fn get(&self, k: EigenClass, a: usize, b: usize) -> Complex64 {
        self.values[self.slot(k, a, b)]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Largest entrywise difference from another tensor of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

pub fn analyze(v: &DenseVector) -> CorrelationTensor {
    let n = v.len();
    let eta = eta_pair(n).expect("n >= 1");
    let tw = Twiddles::new(n);
    let by_eta1 = correlations_with(v, eta.eta1, &tw);
    let by_eta2 = if eta.is_square() { None } else { Some(correlations_with(v, eta.eta2, &tw)) };
    let grid_for = |stride: usize| {
        if stride == eta.eta1 {
            &by_eta1
        } else {
            by_eta2.as_ref().expect("stride is η₂")
        }
    };

    let mut out = CorrelationTensor::zeros(eta);
    for a in 0..eta.eta1 {
        for b in 0..eta.eta2 {
            let mut train = ModulatedDeltaTrain::new(n, eta.eta1, a, b).expect("η₁ divides n");
            // ⟨v, D^j g⟩ for j = 0..3.
            let mut powers = [Complex64::new(0.0, 0.0); 4];
            for p in powers.iter_mut() {
                let grid = grid_for(train.stride());
                *p = grid.get(train.offset(), train.modulation()) * tw.pow(-(train.phase_exponent() as i64));
                train = train.dft();
            }
            for k in EigenClass::ALL {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, p) in powers.iter().enumerate() {
                    acc += i_pow(j * k.index()).conj() * 0.25 * p;
                }
                let slot = out.slot(k, a, b);
                out.values[slot] = acc;
            }
        }
    }
    out
}

/// Reference for [`analyze`]: densify each candidate and take the inner product.
pub fn analyze_naive(v: &DenseVector) -> CorrelationTensor {
    let eta = eta_pair(v.len()).expect("n >= 1");
    let mut out = CorrelationTensor::zeros(eta);
    for cand in enumerate_candidates(v.len()).expect("n >= 1") {
        let slot = out.slot(cand.label.class, cand.label.a, cand.label.b);
        out.values[slot] = inner(v, &cand.sum.densify()).expect("same n");
    }
    out
}

/// All `4n` candidate rows materialized as a dense `4n × n` matrix, conjugated,
/// so that one matrix-vector product yields the correlation tensor.
#[derive(Debug, Clone)]
pub struct DenseCorrelationMatrix {
    eta: DivisorPair,
    rows: Vec<Complex64>,
}

impl DenseCorrelationMatrix {
    pub fn new(n: usize) -> Result<Self> {
        let eta = eta_pair(n)?;
        let mut rows = Vec::with_capacity(4 * n * n);
        for cand in enumerate_candidates(n)? {
            rows.extend(cand.sum.densify().entries().iter().map(|z| z.conj()));
        }
        Ok(Self { eta, rows })
    }

    pub fn apply(&self, v: &DenseVector) -> Result<CorrelationTensor> {
        let n = self.eta.n;
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
        let x = v.entries();
        let values = self
            .rows
            .chunks_exact(n)
            .map(|row| row.iter().zip(x).map(|(r, y)| r * y).sum())
            .collect();
        Ok(CorrelationTensor { n, eta: self.eta, values })
    }
}

/// Expansion coefficients in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub n: usize,
    pub coefficients: Vec<Complex64>,
}

struct ClassBlock {
    members: Vec<usize>,
    /// Thin QR factors of the dense `n × m` block of this class.
    q: DMatrix<Complex64>,
    r: DMatrix<Complex64>,
}

impl ClassBlock {
    /// Least-squares coefficients of `v` in this block: `R⁻¹ Qᴴ v`.
    fn solve(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let y = self.q.adjoint() * v;
        self.r.solve_upper_triangular(&y).ok_or(Error::Singular)
    }
}

/// Reusable change of basis for one [`EigenBasis`].
///
/// For an orthonormal basis the coefficients are the correlations read off
/// [`analyze`]. Otherwise each class (classes are mutually orthogonal) is
/// handled by a Householder QR of its dense vectors, followed by iterative
/// refinement on the true residual.
pub struct ChangeOfBasis<'a> {
    basis: &'a EigenBasis,
    orthogonal: bool,
    blocks: Vec<ClassBlock>,
}

impl<'a> ChangeOfBasis<'a> {
    const REFINEMENT_STEPS: usize = 2;

    pub fn new(basis: &'a EigenBasis, tol: &TolerancePolicy) -> Result<Self> {
        let orthogonal = gram_report(basis, tol)?.is_orthogonal;
        let mut blocks = Vec::new();
        if !orthogonal {
            let n = basis.n;
            for class in EigenClass::ALL {
                let members: Vec<usize> =
                    (0..basis.len()).filter(|&i| basis.vectors[i].label.class == class).collect();
                if members.is_empty() {
                    continue;
                }
                let m = members.len();
                let dense = DMatrix::from_fn(n, m, |j, c| basis.vectors[members[c]].dense[j]);
                let qr = dense.qr();
                let (q, r) = qr.unpack();
                if (0..m).any(|i| r[(i, i)].norm() == 0.0) {
                    return Err(Error::Singular);
                }
                blocks.push(ClassBlock { members, q, r });
            }
        }
        Ok(Self { basis, orthogonal, blocks })
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// `⟨v, b_i⟩` for every basis vector, from the fast correlation tensor.
    pub fn correlations(&self, v: &DenseVector) -> Result<Vec<Complex64>> {
        self.check_len(v)?;
        let t = analyze(v);
        Ok(self.basis.vectors.iter().map(|r| t.get(r.label.class, r.label.a, r.label.b) * r.scale).collect())
    }

    fn check_len(&self, v: &DenseVector) -> Result<()> {
        if v.len() != self.basis.n {
            return Err(Error::BasisMismatch { basis: self.basis.n, vector: v.len() });
        }
        Ok(())
    }

    fn solve(&self, v: &DenseVector) -> Result<Vec<Complex64>> {
        let rhs = DVector::from_column_slice(v.entries());
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        for block in &self.blocks {
            let c = block.solve(&rhs)?;
            for (&i, z) in block.members.iter().zip(c.iter()) {
                out[i] = *z;
            }
        }
        Ok(out)
    }

    pub fn coefficients(&self, v: &DenseVector) -> Result<CoefficientVector> {
        if self.orthogonal {
            return Ok(CoefficientVector { n: self.basis.n, coefficients: self.correlations(v)? });
        }
        self.check_len(v)?;
        let mut c = self.solve(v)?;
        for _ in 0..Self::REFINEMENT_STEPS {
            let residual = v.sub(&synthesize_slice(&c, self.basis))?;
            let dc = self.solve(&residual)?;
            c.iter_mut().zip(dc).for_each(|(x, d)| *x += d);
        }
        Ok(CoefficientVector { n: self.basis.n, coefficients: c })
    }
}

pub fn to_coefficients(v: &DenseVector, basis: &EigenBasis, tol: &TolerancePolicy) -> Result<CoefficientVector> {
    ChangeOfBasis::new(basis, tol)?.coefficients(v)
}

fn synthesize_slice(c: &[Complex64], basis: &EigenBasis) -> DenseVector {
    let mut out = vec![Complex64::new(0.0, 0.0); basis.n];
    for (coef, rec) in c.iter().zip(&basis.vectors) {
        if *coef == Complex64::new(0.0, 0.0) {
            continue;
        }
        let w = coef * rec.scale;
        for (j, z) in rec.sum.sparse_entries() {
            out[j] += w * z;
        }
    }
    DenseVector::new(out).expect("finite coefficients")
}

/// `Σ_i c_i b_i`, accumulated over the sparse train representation.
pub fn synthesize(c: &CoefficientVector, basis: &EigenBasis) -> Result<DenseVector> {
    if c.coefficients.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), found: c.coefficients.len() });
    }
    Ok(synthesize_slice(&c.coefficients, basis))
}
