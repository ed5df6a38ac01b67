//! The four eigenspace projectors `F_k = (1/4) Σ_j i^{jk} D^j`, applied to
//! delta trains symbolically.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::delta_trains::{ModulatedDeltaTrain, TrainLabel};
use crate::error::{Error, Result};
use crate::numerics::{dft_pow, naive_dft, DenseVector, TolerancePolicy};

/// `i^m`, exact.
pub(crate) fn i_pow(m: usize) -> Complex64 {
    match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Index `k` of the eigenspace with eigenvalue `i^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EigenClass(u8);

impl EigenClass {
    pub const ALL: [EigenClass; 4] = [EigenClass(0), EigenClass(1), EigenClass(2), EigenClass(3)];

    pub fn new(k: u8) -> Result<Self> {
        if k < 4 {
            Ok(Self(k))
        } else {
            Err(Error::InvalidClass(k))
        }
    }

    pub fn k(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// `i^{-k}`: 1, −i, −1, i for k = 0..3.
    pub fn eigenvalue(self) -> Complex64 {
        i_pow(4 - self.index())
    }
}

impl fmt::Display for EigenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub train: ModulatedDeltaTrain,
}

/// A short linear combination of delta trains over the same `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSum {
    n: usize,
    terms: Vec<Term>,
}

impl TrainSum {
    pub const MAX_TERMS: usize = 4;

    pub fn empty(n: usize) -> Self {
        Self { n, terms: Vec::with_capacity(Self::MAX_TERMS) }
    }

    pub fn from_terms(n: usize, terms: Vec<Term>) -> Result<Self> {
        let mut s = Self::empty(n);
        for t in terms {
            s.push(t.coeff, t.train)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, coeff: Complex64, train: ModulatedDeltaTrain) -> Result<()> {
        if train.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: train.n() });
        }
        if self.terms.len() == Self::MAX_TERMS {
            return Err(Error::TooManyTerms(Self::MAX_TERMS));
        }
        self.terms.push(Term { coeff, train });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Each nonzero entry of each term, scaled by its coefficient. Indices repeat
    /// where term supports overlap.
    pub fn sparse_entries(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.terms
            .iter()
            .flat_map(|t| t.train.nonzeros().map(move |(j, z)| (j, t.coeff * z)))
    }

    pub fn densify(&self) -> DenseVector {
        let mut entries = vec![Complex64::new(0.0, 0.0); self.n];
        for (j, z) in self.sparse_entries() {
            entries[j] += z;
        }
        DenseVector::new(entries).expect("n >= 1 and entries are finite")
    }

    /// Sum of the term supports; an upper bound on the dense support.
    pub fn support_bound(&self) -> usize {
        self.terms.iter().map(|t| t.train.support_size()).sum()
    }

    /// Terms with identical labels combined into one coefficient (phase absorbed).
    pub fn merged(&self) -> BTreeMap<TrainLabel, Complex64> {
        let mut out = BTreeMap::new();
        for t in &self.terms {
            *out.entry(t.train.label()).or_insert(Complex64::new(0.0, 0.0)) += t.coeff * t.train.phase();
        }
        out
    }

    /// Exact-cancellation pre-check: true when every term is cancelled by a
    /// collinear partner.
    ///
    /// A `false` answer is not a certificate of a nonzero vector; terms with
    /// different labels can still cancel (see [`TrainSum::is_zero`]).
    pub fn cancels_symbolically(&self, tol: f64) -> bool {
        self.merged().values().all(|c| c.norm() <= tol)
    }

    /// Numerically zero: symbolic cancellation, or densified norm at most `residual_tol`.
    pub fn is_zero(&self, tol: &TolerancePolicy) -> bool {
        self.cancels_symbolically(tol.zero_tol) || self.densify().norm() <= tol.residual_tol
    }
}

/// `F_k g` as the four-term sum `Σ_j (1/4) i^{jk} D^j g`.
pub fn project(k: EigenClass, g: &ModulatedDeltaTrain) -> TrainSum {
    let mut s = TrainSum::empty(g.n());
    let mut train = *g;
    for j in 0..4 {
        s.push(i_pow(j * k.index()) * 0.25, train).expect("four terms over one n");
        train = train.dft();
    }
    s
}

pub fn densify_sum(s: &TrainSum) -> DenseVector {
    s.densify()
}

pub fn support_bound(s: &TrainSum) -> usize {
    s.support_bound()
}

/// `F_k v` computed from the naive DFT; reference for [`project`].
pub fn project_dense(k: EigenClass, v: &DenseVector) -> DenseVector {
    let mut acc = DenseVector::zeros(v.len()).expect("n >= 1");
    for j in 0..4u32 {
        let term = dft_pow(v, j).expect("j <= 3").scaled(i_pow(j as usize * k.index()) * 0.25);
        acc = acc.add(&term).expect("same n");
    }
    acc
}

/// Relative eigen-residual `‖Dv − i^{-k} v‖ / ‖v‖`, using the naive DFT.
pub fn verify_eigenvector(v: &DenseVector, k: EigenClass, tol: &TolerancePolicy) -> Result<f64> {
    let norm = v.norm();
    if norm <= tol.zero_tol {
        return Err(Error::ZeroVector);
    }
    let dv = naive_dft(v);
    let lv = v.scaled(k.eigenvalue());
    Ok(dv.distance(&lv)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delta_trains::{divisors, eta_pair, train_family};
    use crate::numerics::inner;
    use proptest::prelude::*;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn k(k: u8) -> EigenClass {
        EigenClass::new(k).unwrap()
    }

    fn random_vector(n: usize, seed: u64) -> DenseVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        DenseVector::new(
            (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn eigenvalues() {
        let want = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (c, (re, im)) in EigenClass::ALL.iter().zip(want) {
            assert_eq!(c.eigenvalue(), Complex64::new(re, im));
        }
        assert!(matches!(EigenClass::new(4), Err(Error::InvalidClass(4))));
    }

    #[test]
    fn projection_examples() {
        let g = ModulatedDeltaTrain::new(4, 2, 0, 0).unwrap();
        let fixed = DenseVector::from_real(&[H, 0.0, H, 0.0]).unwrap();
        assert!(project(k(0), &g).densify().distance(&fixed).unwrap() < 1e-15);
        assert!(project(k(2), &g).densify().norm() < 1e-15);
        assert!(project(k(2), &g).cancels_symbolically(1e-15));
        assert!(!project(k(0), &g).cancels_symbolically(1e-15));
    }

    #[test]
    fn densify_sum_examples() {
        assert_eq!(TrainSum::empty(3).densify(), DenseVector::zeros(3).unwrap());
        let g = ModulatedDeltaTrain::new(4, 2, 0, 0).unwrap();
        let mut s = TrainSum::empty(4);
        s.push(Complex64::new(1.0, 0.0), g).unwrap();
        assert!(s.densify().distance(&DenseVector::from_real(&[H, 0.0, H, 0.0]).unwrap()).unwrap() < 1e-15);
        assert!(s.push(Complex64::new(1.0, 0.0), ModulatedDeltaTrain::new(6, 1, 0, 0).unwrap()).is_err());
        for _ in 0..3 {
            s.push(Complex64::new(1.0, 0.0), g).unwrap();
        }
        assert!(s.push(Complex64::new(1.0, 0.0), g).is_err());
    }

    #[test]
    fn support_bound_examples() {
        let g = ModulatedDeltaTrain::new(16, 4, 1, 3).unwrap();
        for c in EigenClass::ALL {
            assert_eq!(project(c, &g).support_bound(), 16);
        }
        let g = ModulatedDeltaTrain::new(12, 3, 2, 1).unwrap();
        assert_eq!(project(k(1), &g).support_bound(), 14);
        let mut s = TrainSum::empty(5);
        s.push(Complex64::new(1.0, 0.0), ModulatedDeltaTrain::new(5, 5, 2, 0).unwrap()).unwrap();
        assert_eq!(s.support_bound(), 1);
    }

    #[test]
    fn verify_examples() {
        let tol = TolerancePolicy::default();
        let fixed = DenseVector::from_real(&[H, 0.0, H, 0.0]).unwrap();
        assert!(verify_eigenvector(&fixed, k(0), &tol).unwrap() < 1e-15);
        let v = DenseVector::from_real(&[1.0, -1.0, -1.0, -1.0]).unwrap();
        assert!(verify_eigenvector(&v, k(2), &tol).unwrap() < 1e-12);
        // Unit eigenvector tested against the wrong eigenvalue: |λ - μ| = √2.
        assert!((verify_eigenvector(&fixed, k(1), &tol).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            verify_eigenvector(&DenseVector::zeros(4).unwrap(), k(0), &tol),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn symbolic_projection_matches_dense_oracle() {
        for n in 1..=20 {
            for d1 in divisors(n) {
                for g in train_family(n, d1).unwrap() {
                    for c in EigenClass::ALL {
                        let sym = project(c, &g).densify();
                        let dense = project_dense(c, &g.densify());
                        assert!(sym.distance(&dense).unwrap() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn projections_are_eigenvectors_within_support_bound() {
        let tol = TolerancePolicy::default();
        for n in 1..=64 {
            let eta = eta_pair(n).unwrap();
            for g in train_family(n, eta.eta1).unwrap() {
                for c in EigenClass::ALL {
                    let s = project(c, &g);
                    assert_eq!(s.support_bound(), eta.support_upper_bound());
                    let v = s.densify();
                    assert!(v.support_size(tol.zero_tol) <= s.support_bound());
                    if v.norm() > tol.residual_tol {
                        assert!(verify_eigenvector(&v, c, &tol).unwrap() <= tol.residual_tol);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn projectors_are_orthogonal_idempotents(n in 1usize..=40, seed in any::<u64>()) {
            let v = random_vector(n, seed);
            for a in EigenClass::ALL {
                let fa = project_dense(a, &v);
                for b in EigenClass::ALL {
                    let fba = project_dense(b, &fa);
                    let want = if a == b { fa.clone() } else { DenseVector::zeros(n).unwrap() };
                    prop_assert!(fba.distance(&want).unwrap() <= 1e-9);
                }
            }
        }

        #[test]
        fn projectors_sum_to_identity(n in 1usize..=64, seed in any::<u64>()) {
            let v = random_vector(n, seed);
            let mut total = DenseVector::zeros(n).unwrap();
            for c in EigenClass::ALL {
                total = total.add(&project_dense(c, &v)).unwrap();
            }
            prop_assert!(total.distance(&v).unwrap() <= 1e-9);
        }

        #[test]
        fn symbolic_projections_sum_to_the_train(n in 1usize..=64, a in 0usize..64, b in 0usize..64) {
            let eta = eta_pair(n).unwrap();
            let g = ModulatedDeltaTrain::new(n, eta.eta1, a, b).unwrap();
            let mut total = DenseVector::zeros(n).unwrap();
            for c in EigenClass::ALL {
                total = total.add(&project(c, &g).densify()).unwrap();
            }
            prop_assert!(total.distance(&g.densify()).unwrap() <= 1e-12);
            let x = project(EigenClass(1), &g).densify();
            let y = project(EigenClass(3), &g).densify();
            prop_assert!(inner(&x, &y).unwrap().norm() <= 1e-12);
        }
    }
}
