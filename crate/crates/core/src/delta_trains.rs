//! Modulated delta trains: sparse vectors supported on one residue class.
//!
//! `g_{d1}(a, b)` has entries `ω^{-bj} / √d2` at every index `j ≡ a (mod d1)`
//! and zero elsewhere, where `d2 = n / d1`. Trains are kept in closed form:
//! the stride, offset and modulation are canonical residues and the unit
//! prefactor is stored as an exact exponent of `ω = e^{-2πi/n}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{omega_pow, DenseVector};

/// All positive divisors of `n` in ascending order.
pub fn divisors(n: usize) -> Vec<usize> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            low.push(d);
            if d * d != n {
                high.push(n / d);
            }
        }
        d += 1;
    }
    low.extend(high.into_iter().rev());
    low
}

/// The divisors of `n` closest to `√n` from below and above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DivisorPair {
    pub n: usize,
    pub eta1: usize,
    pub eta2: usize,
}

impl DivisorPair {
    pub fn is_square(&self) -> bool {
        self.eta1 == self.eta2
    }

    /// `(η₁ + η₂) / 2`, the smallest support any DFT eigenvector can have.
    pub fn support_lower_bound(&self) -> f64 {
        (self.eta1 + self.eta2) as f64 / 2.0
    }

    /// `2(η₁ + η₂)`.
    pub fn support_upper_bound(&self) -> usize {
        2 * (self.eta1 + self.eta2)
    }
}

pub fn eta_pair(n: usize) -> Result<DivisorPair> {
    if n == 0 {
        return Err(Error::InvalidSize { n, min: 1 });
    }
    let eta1 = divisors(n).into_iter().take_while(|d| d * d <= n).last().unwrap_or(1);
    Ok(DivisorPair { n, eta1, eta2: n / eta1 })
}

/// `(stride, offset, modulation)`: identifies a train up to its phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrainLabel {
    pub d1: usize,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModulatedDeltaTrain {
    n: usize,
    d1: usize,
    a: usize,
    b: usize,
    /// The prefactor is `ω^phase_exp`, `0 <= phase_exp < n`.
    phase_exp: usize,
}

impl ModulatedDeltaTrain {
    /// `g_{d1}(a, b)` with unit phase. `a` and `b` may be any residues.
    pub fn new(n: usize, d1: usize, a: usize, b: usize) -> Result<Self> {
        Self::from_raw(n, d1, a as i64, b as i64)
    }

    /// Builds `g_{d1}(a, b)` from arbitrary (possibly negative) integer labels,
    /// reducing them to canonical residues.
    ///
    /// Reducing `a` modulo `d1` leaves the vector unchanged. Reducing `b`
    /// modulo `d2` does not: `g(a, b + q·d2) = ω^{-q·d2·a} g(a, b)`, and that
    /// factor is folded into the phase.
    pub fn from_raw(n: usize, d1: usize, a: i64, b: i64) -> Result<Self> {
        if n == 0 || d1 == 0 || n % d1 != 0 {
            return Err(Error::InvalidStride { n, d1 });
        }
        let d2 = (n / d1) as i64;
        let a = a.rem_euclid(d1 as i64);
        let q = b.div_euclid(d2);
        let b = b.rem_euclid(d2);
        let phase_exp = (-q * d2 * a).rem_euclid(n as i64) as usize;
        Ok(Self { n, d1, a: a as usize, b: b as usize, phase_exp })
    }

    /// Multiplies the train by `ω^e`.
    pub fn times_omega(mut self, e: i64) -> Self {
        self.phase_exp = (self.phase_exp as i64 + e).rem_euclid(self.n as i64) as usize;
        self
    }

    pub fn with_phase_exponent(mut self, e: usize) -> Self {
        self.phase_exp = e % self.n;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stride(&self) -> usize {
        self.d1
    }

    /// `d2 = n / d1`, which is also the support size.
    pub fn cofactor(&self) -> usize {
        self.n / self.d1
    }

    pub fn offset(&self) -> usize {
        self.a
    }

    pub fn modulation(&self) -> usize {
        self.b
    }

    pub fn phase_exponent(&self) -> usize {
        self.phase_exp
    }

    pub fn phase(&self) -> Complex64 {
        omega_pow(self.n, self.phase_exp as i64)
    }

    pub fn label(&self) -> TrainLabel {
        TrainLabel { d1: self.d1, a: self.a, b: self.b }
    }

    pub fn support_size(&self) -> usize {
        self.cofactor()
    }

    /// The nonzero entries `(j, value)` in increasing index order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let amp = 1.0 / (self.cofactor() as f64).sqrt();
        (self.a..self.n).step_by(self.d1).map(move |j| {
            let e = self.phase_exp as i64 - (self.b as i64) * (j as i64);
            (j, omega_pow(self.n, e) * amp)
        })
    }

    pub fn densify(&self) -> DenseVector {
        let mut entries = vec![Complex64::new(0.0, 0.0); self.n];
        for (j, z) in self.nonzeros() {
            entries[j] = z;
        }
        DenseVector::new(entries).expect("n >= 1 and entries are finite")
    }

    /// The exact DFT: `D g_{d1}(a, b) = ω^{-ab} g_{d2}(b, -a)`.
    pub fn dft(&self) -> Self {
        let (a, b) = (self.a as i64, self.b as i64);
        Self::from_raw(self.n, self.cofactor(), b, -a)
            .expect("d2 divides n")
            .times_omega(self.phase_exp as i64 - a * b)
    }

    /// `D^j g` for any `j >= 0`.
    pub fn dft_pow(&self, j: u32) -> Self {
        (0..j % 4).fold(*self, |g, _| g.dft())
    }

    /// Same train up to phase.
    pub fn is_collinear_with(&self, other: &Self) -> bool {
        self.n == other.n && self.label() == other.label()
    }
}

pub fn dft_train(g: &ModulatedDeltaTrain) -> ModulatedDeltaTrain {
    g.dft()
}

pub fn densify(g: &ModulatedDeltaTrain) -> DenseVector {
    g.densify()
}

/// Smallest `x >= 0` with `x ≡ r1 (mod m1)` and `x ≡ r2 (mod m2)`, together with `lcm(m1, m2)`.
fn crt(r1: i64, m1: i64, r2: i64, m2: i64) -> Option<(i64, i64)> {
    let (g, p, _) = ext_gcd(m1, m2);
    if (r2 - r1) % g != 0 {
        return None;
    }
    let lcm = m1 / g * m2;
    let step = m2 / g;
    let t = ((r2 - r1) / g % step * (p % step)).rem_euclid(step);
    Some(((r1 + m1 * t).rem_euclid(lcm), lcm))
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// `⟨g, h⟩` in closed form.
///
/// The supports meet on an arithmetic progression `j0 + L·t` with
/// `L = lcm(d1, d1')`, and along it the product of entries is a geometric
/// sequence in `ω^{(b' - b)L}`, so the sum is either zero or `n/L` terms of
/// equal value.
pub fn train_inner(g: &ModulatedDeltaTrain, h: &ModulatedDeltaTrain) -> Result<Complex64> {
    if g.n != h.n {
        return Err(Error::DimensionMismatch { expected: g.n, found: h.n });
    }
    let n = g.n as i64;
    let Some((j0, lcm)) = crt(g.a as i64, g.d1 as i64, h.a as i64, h.d1 as i64) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let delta = h.b as i64 - g.b as i64;
    if (delta * lcm).rem_euclid(n) != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let count = (n / lcm) as f64;
    let magnitude = count / ((g.cofactor() * h.cofactor()) as f64).sqrt();
    let e = g.phase_exp as i64 - h.phase_exp as i64 + delta * j0;
    Ok(omega_pow(g.n, e) * magnitude)
}

/// Recovers `e` with `ω^e = z`, if `z` is an `n`-th root of unity within `tol`.
pub fn phase_exponent_of(n: usize, z: Complex64, tol: f64) -> Result<usize> {
    let turns = (-z.arg() / (2.0 * std::f64::consts::PI)).rem_euclid(1.0);
    let e = ((turns * n as f64).round() as usize) % n;
    if (omega_pow(n, e as i64) - z).norm() <= tol {
        Ok(e)
    } else {
        Err(Error::InvalidPhase { n, re: z.re, im: z.im })
    }
}

/// Every train with stride `d1`, ordered by `a` then `b`.
pub fn train_family(n: usize, d1: usize) -> Result<Vec<ModulatedDeltaTrain>> {
    if n == 0 || d1 == 0 || n % d1 != 0 {
        return Err(Error::InvalidStride { n, d1 });
    }
    let d2 = n / d1;
    let mut out = Vec::with_capacity(n);
    for a in 0..d1 {
        for b in 0..d2 {
            out.push(ModulatedDeltaTrain::new(n, d1, a, b)?);
        }
    }
    Ok(out)
}
