//! Selection of the sparse eigenbasis and the audits run against it.
//!
//! Candidates are the `4n` projections `F_k g_{η₁}(a, b)`. For each class `k`
//! they are scanned in `(a, b)` order and kept whenever they raise the rank of
//! the class, until the class reaches its known multiplicity.

use std::fmt;

use num_complex::Complex64;

use crate::delta_trains::{divisors, eta_pair, train_inner, DivisorPair, ModulatedDeltaTrain};
use crate::eigenprojection::{project, EigenClass, TrainSum};
use crate::error::{Error, Result};
use crate::numerics::{naive_dft, DenseVector, EliminationState, TolerancePolicy};

/// Eigenspace dimensions, indexed by class `k` (eigenvalue `i^{-k}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplicityTable {
    pub n: usize,
    pub dims: [usize; 4],
}

impl MultiplicityTable {
    pub fn dim(&self, k: EigenClass) -> usize {
        self.dims[k.index()]
    }

    /// Dimensions for the eigenvalues `1, −1, −i, i`, in that order.
    pub fn by_eigenvalue(&self) -> [usize; 4] {
        [self.dims[0], self.dims[2], self.dims[1], self.dims[3]]
    }
}

pub fn multiplicities(n: usize) -> Result<MultiplicityTable> {
    if n == 0 {
        return Err(Error::InvalidSize { n, min: 1 });
    }
    let m = n / 4;
    // (λ=1, λ=−1, λ=−i, λ=i)
    let [one, minus_one, minus_i, plus_i] = match n % 4 {
        0 => [m + 1, m, m, m - 1],
        1 => [m + 1, m, m, m],
        2 => [m + 1, m + 1, m, m],
        _ => [m + 1, m + 1, m + 1, m],
    };
    Ok(MultiplicityTable { n, dims: [one, minus_i, minus_one, plus_i] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VectorLabel {
    pub class: EigenClass,
    pub a: usize,
    pub b: usize,
}

impl fmt::Display for VectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, a={}, b={})", self.class.k(), self.a, self.b)
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: VectorLabel,
    pub sum: TrainSum,
}

/// All `4n` candidates in the order `k`, then `a`, then `b`.
pub fn enumerate_candidates(n: usize) -> Result<impl Iterator<Item = Candidate>> {
    let eta = eta_pair(n)?;
    Ok(EigenClass::ALL.into_iter().flat_map(move |class| class_candidates(eta, class)))
}

fn class_candidates(eta: DivisorPair, class: EigenClass) -> impl Iterator<Item = Candidate> {
    (0..eta.eta1).flat_map(move |a| {
        (0..eta.eta2).map(move |b| {
            let g = ModulatedDeltaTrain::new(eta.n, eta.eta1, a, b).expect("η₁ divides n");
            Candidate { label: VectorLabel { class, a, b }, sum: project(class, &g) }
        })
    })
}

/// One selected eigenvector. `dense = scale · sum.densify()` has unit norm.
#[derive(Debug, Clone)]
pub struct BasisVectorRecord {
    pub label: VectorLabel,
    pub sum: TrainSum,
    pub scale: f64,
    pub dense: DenseVector,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildDiagnostics {
    /// Candidates skipped because they project to zero.
    pub zero_candidates: usize,
    /// Candidates skipped because they were in the span of earlier picks.
    pub dependent_candidates: usize,
}

/// How candidates of one class are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Scan in enumeration order and keep every candidate that raises the rank.
    #[default]
    FirstAccepted,
    /// Repeatedly keep the candidate with the largest component orthogonal to
    /// the ones already kept (earliest wins ties). Much better conditioned for
    /// prime `n`, where consecutive low-frequency candidates are nearly dependent.
    LargestResidual,
}

impl SelectionRule {
    pub fn name(self) -> &'static str {
        match self {
            SelectionRule::FirstAccepted => "first-accepted",
            SelectionRule::LargestResidual => "largest-residual",
        }
    }
}

impl std::str::FromStr for SelectionRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "first-accepted" => Ok(SelectionRule::FirstAccepted),
            "largest-residual" => Ok(SelectionRule::LargestResidual),
            other => Err(format!("unknown selection rule {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub n: usize,
    pub eta: DivisorPair,
    pub rule: SelectionRule,
    pub vectors: Vec<BasisVectorRecord>,
    pub per_class_counts: [usize; 4],
    pub diagnostics: BuildDiagnostics,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = VectorLabel> + '_ {
        self.vectors.iter().map(|v| v.label)
    }

    /// Rescales every record to unit norm (imported unnormalized exports).
    pub fn renormalize(&mut self) -> Result<()> {
        for rec in &mut self.vectors {
            let norm = rec.dense.norm();
            if norm == 0.0 {
                return Err(Error::ZeroVector);
            }
            rec.scale /= norm;
            rec.dense = rec.dense.scaled(Complex64::new(1.0 / norm, 0.0));
        }
        Ok(())
    }
}

fn record(cand: Candidate, raw: DenseVector, tol: &TolerancePolicy) -> BasisVectorRecord {
    let scale = 1.0 / raw.norm();
    let dense = raw.scaled(Complex64::new(scale, 0.0));
    let support = dense.support_size(tol.zero_tol);
    BasisVectorRecord { label: cand.label, sum: cand.sum, scale, dense, support }
}

/// Densified candidate, or `None` when it projects to zero.
fn nonzero_candidate(cand: &Candidate, tol: &TolerancePolicy) -> Option<DenseVector> {
    if cand.sum.cancels_symbolically(tol.zero_tol) {
        return None;
    }
    let raw = cand.sum.densify();
    (raw.norm() > tol.residual_tol).then_some(raw)
}

pub fn build_basis(n: usize, tol: &TolerancePolicy) -> Result<EigenBasis> {
    build_basis_with(n, tol, SelectionRule::FirstAccepted)
}

pub fn build_basis_with(n: usize, tol: &TolerancePolicy, rule: SelectionRule) -> Result<EigenBasis> {
    let eta = eta_pair(n)?;
    let table = multiplicities(n)?;
    let mut vectors = Vec::with_capacity(n);
    let mut per_class_counts = [0usize; 4];
    let mut diagnostics = BuildDiagnostics::default();

    for class in EigenClass::ALL {
        let target = table.dim(class);
        let found = match rule {
            SelectionRule::FirstAccepted => {
                select_first_accepted(eta, class, target, tol, &mut vectors, &mut diagnostics)?
            }
            SelectionRule::LargestResidual => {
                select_largest_residual(eta, class, target, tol, &mut vectors, &mut diagnostics)
            }
        };
        if found != target {
            return Err(Error::ClassDeficient { k: class.k(), found, expected: target });
        }
        per_class_counts[class.index()] = target;
    }

    Ok(EigenBasis { n, eta, rule, vectors, per_class_counts, diagnostics })
}

fn select_first_accepted(
    eta: DivisorPair,
    class: EigenClass,
    target: usize,
    tol: &TolerancePolicy,
    out: &mut Vec<BasisVectorRecord>,
    diagnostics: &mut BuildDiagnostics,
) -> Result<usize> {
    let mut state = EliminationState::new(eta.n);
    for cand in class_candidates(eta, class) {
        if state.rank() == target {
            break;
        }
        let Some(raw) = nonzero_candidate(&cand, tol) else {
            diagnostics.zero_candidates += 1;
            continue;
        };
        if !state.try_extend_rank(&raw, tol)? {
            diagnostics.dependent_candidates += 1;
            continue;
        }
        out.push(record(cand, raw, tol));
    }
    Ok(state.rank())
}

fn select_largest_residual(
    eta: DivisorPair,
    class: EigenClass,
    target: usize,
    tol: &TolerancePolicy,
    out: &mut Vec<BasisVectorRecord>,
    diagnostics: &mut BuildDiagnostics,
) -> usize {
    // Relative window inside which residual norms count as tied.
    const TIE: f64 = 1e-9;

    let mut pool: Vec<(Candidate, DenseVector)> = Vec::new();
    for cand in class_candidates(eta, class) {
        match nonzero_candidate(&cand, tol) {
            Some(raw) => pool.push((cand, raw)),
            None => diagnostics.zero_candidates += 1,
        }
    }
    // Residuals of the unit-normalized candidates against the picks so far.
    let mut residuals: Vec<Vec<Complex64>> = pool
        .iter()
        .map(|(_, raw)| raw.normalized().expect("nonzero").into_entries())
        .collect();
    let mut taken = vec![false; pool.len()];
    let mut picked = Vec::with_capacity(target);

    while picked.len() < target {
        let norms: Vec<f64> = residuals.iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
        let best = (0..pool.len()).filter(|&i| !taken[i]).map(|i| norms[i]).fold(0.0, f64::max);
        if best <= tol.residual_tol {
            break;
        }
        let p = (0..pool.len())
            .find(|&i| !taken[i] && norms[i] >= best * (1.0 - TIE))
            .expect("the maximum is attained");
        taken[p] = true;
        picked.push(p);
        let q: Vec<Complex64> = residuals[p].iter().map(|z| z / norms[p]).collect();
        for (i, r) in residuals.iter_mut().enumerate() {
            if taken[i] {
                continue;
            }
            for _ in 0..2 {
                let c: Complex64 = r.iter().zip(&q).map(|(x, y)| x * y.conj()).sum();
                r.iter_mut().zip(&q).for_each(|(x, y)| *x -= c * y);
            }
        }
    }
    diagnostics.dependent_candidates += taken.iter().filter(|t| !**t).count();

    let found = picked.len();
    // Keep enumeration order within the class so labels stay sorted.
    picked.sort_unstable();
    let mut pool: Vec<Option<(Candidate, DenseVector)>> = pool.into_iter().map(Some).collect();
    for p in picked {
        let (cand, raw) = pool[p].take().expect("picked once");
        out.push(record(cand, raw, tol));
    }
    found
}

/// `⟨x, y⟩` of two basis vectors from their train sums, without densifying.
pub fn record_inner(x: &BasisVectorRecord, y: &BasisVectorRecord) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for s in x.sum.terms() {
        for t in y.sum.terms() {
            acc += s.coeff * t.coeff.conj() * train_inner(&s.train, &t.train)?;
        }
    }
    Ok(acc * (x.scale * y.scale))
}

/// Full Gram matrix `G[i][j] = ⟨v_i, v_j⟩` of the basis.
pub fn gram_matrix(basis: &EigenBasis) -> Result<Vec<Vec<Complex64>>> {
    let m = basis.len();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for i in 0..m {
        for j in i..m {
            let z = record_inner(&basis.vectors[i], &basis.vectors[j])?;
            g[i][j] = z;
            g[j][i] = z.conj();
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityAudit {
    pub n: usize,
    pub min_support: usize,
    pub max_support: usize,
    /// `(η₁ + η₂) / 2`.
    pub lower_bound: f64,
    /// `2(η₁ + η₂)`.
    pub upper_bound: usize,
    pub ratio_to_sparsest: f64,
    pub ratio_to_lower_bound: f64,
}

pub fn audit_sparsity(basis: &EigenBasis, tol: &TolerancePolicy) -> Result<SparsityAudit> {
    let lower_bound = basis.eta.support_lower_bound();
    let upper_bound = basis.eta.support_upper_bound();
    let fail = |label: VectorLabel, reason: String| Error::AuditFailure { label: label.to_string(), reason };

    let mut min_support = usize::MAX;
    let mut max_support = 0;
    for rec in &basis.vectors {
        let s = rec.dense.support_size(tol.zero_tol);
        if s > upper_bound {
            return Err(fail(rec.label, format!("support {s} exceeds 2(η₁+η₂) = {upper_bound}")));
        }
        if (s as f64) < lower_bound - tol.zero_tol {
            return Err(fail(rec.label, format!("support {s} below (η₁+η₂)/2 = {lower_bound}")));
        }
        min_support = min_support.min(s);
        max_support = max_support.max(s);
    }
    if basis.is_empty() {
        min_support = 0;
    }
    let ratio_to_sparsest = max_support as f64 / min_support.max(1) as f64;
    let ratio_to_lower_bound = max_support as f64 / lower_bound;
    if ratio_to_sparsest > 4.0 || ratio_to_lower_bound > 4.0 {
        let label = basis.vectors.iter().max_by_key(|r| r.support).map(|r| r.label);
        return Err(Error::AuditFailure {
            label: label.map(|l| l.to_string()).unwrap_or_default(),
            reason: format!("support ratio {ratio_to_lower_bound} exceeds 4"),
        });
    }
    Ok(SparsityAudit {
        n: basis.n,
        min_support,
        max_support,
        lower_bound,
        upper_bound,
        ratio_to_sparsest,
        ratio_to_lower_bound,
    })
}

/// Outcome of the support-size uncertainty checks for one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyReport {
    pub n: usize,
    pub support: usize,
    pub transform_support: usize,
    /// `|supp v| · |supp Dv| >= n`.
    pub product_holds: bool,
    /// For each pair of consecutive divisors `d1 < d2` bracketing `|supp v|`:
    /// `(d1, d2, required lower bound on |supp Dv|)`.
    pub brackets: Vec<(usize, usize, f64)>,
    pub brackets_hold: bool,
}

impl UncertaintyReport {
    pub fn holds(&self) -> bool {
        self.product_holds && self.brackets_hold
    }
}

pub fn uncertainty_report(v: &DenseVector, tol: &TolerancePolicy) -> Result<UncertaintyReport> {
    let norm = v.norm();
    if norm <= tol.zero_tol {
        return Err(Error::ZeroVector);
    }
    let n = v.len();
    let threshold = tol.zero_tol * norm;
    let support = v.support_size(threshold);
    let transform_support = naive_dft(v).support_size(threshold);
    let product_holds = support * transform_support >= n;

    let divs = divisors(n);
    let brackets: Vec<(usize, usize, f64)> = divs
        .windows(2)
        .filter(|w| w[0] <= support && support <= w[1])
        .map(|w| {
            let (d1, d2) = (w[0], w[1]);
            let bound = n as f64 / (d1 * d2) as f64 * (d1 + d2 - support) as f64;
            (d1, d2, bound)
        })
        .collect();
    let brackets_hold = brackets.iter().all(|&(_, _, bound)| transform_support as f64 >= bound - tol.zero_tol);

    Ok(UncertaintyReport { n, support, transform_support, product_holds, brackets, brackets_hold })
}

/// Both support uncertainty bounds: the product bound and the consecutive-divisor bound.
pub fn check_uncertainty(v: &DenseVector, tol: &TolerancePolicy) -> Result<bool> {
    Ok(uncertainty_report(v, tol)?.holds())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramWitness {
    pub first: VectorLabel,
    pub second: VectorLabel,
    pub inner: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub n: usize,
    pub is_orthogonal: bool,
    pub max_offdiag: f64,
    /// Largest `|⟨v, w⟩|` over pairs from different classes.
    pub max_cross_class: f64,
    /// Pair that is neither orthogonal nor collinear, with the largest overlap.
    pub witness: Option<GramWitness>,
}

pub fn gram_report(basis: &EigenBasis, tol: &TolerancePolicy) -> Result<GramReport> {
    let gram = gram_matrix(basis)?;
    let mut max_offdiag: f64 = 0.0;
    let mut max_cross_class: f64 = 0.0;
    let mut witness: Option<GramWitness> = None;
    for (i, row) in gram.iter().enumerate() {
        for (j, &z) in row.iter().enumerate().skip(i + 1) {
            let m = z.norm();
            max_offdiag = max_offdiag.max(m);
            let (x, y) = (basis.vectors[i].label, basis.vectors[j].label);
            if x.class != y.class {
                max_cross_class = max_cross_class.max(m);
            }
            let informative = m > tol.residual_tol && m < 1.0 - tol.residual_tol;
            if informative && witness.is_none_or(|w| m > w.inner.norm()) {
                witness = Some(GramWitness { first: x, second: y, inner: z });
            }
        }
    }
    let is_orthogonal = max_offdiag <= tol.residual_tol;
    Ok(GramReport {
        n: basis.n,
        is_orthogonal,
        max_offdiag,
        max_cross_class,
        witness: if is_orthogonal { None } else { witness },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyRow {
    pub n: usize,
    pub eta1: usize,
    pub eta2: usize,
    pub max_support: usize,
    pub lower_bound: f64,
    pub is_orthogonal: bool,
    pub max_offdiag: f64,
    pub witness: Option<GramWitness>,
}

pub fn survey_row(n: usize, tol: &TolerancePolicy) -> Result<SurveyRow> {
    survey_row_with(n, tol, SelectionRule::FirstAccepted)
}

pub fn survey_row_with(n: usize, tol: &TolerancePolicy, rule: SelectionRule) -> Result<SurveyRow> {
    let basis = build_basis_with(n, tol, rule)?;
    let audit = audit_sparsity(&basis, tol)?;
    let gram = gram_report(&basis, tol)?;
    Ok(SurveyRow {
        n,
        eta1: basis.eta.eta1,
        eta2: basis.eta.eta2,
        max_support: audit.max_support,
        lower_bound: audit.lower_bound,
        is_orthogonal: gram.is_orthogonal,
        max_offdiag: gram.max_offdiag,
        witness: gram.witness,
    })
}

/// Builds and classifies the basis for every `n` in `2..=max_n`.
pub fn orthogonality_survey(max_n: usize, tol: &TolerancePolicy) -> Result<Vec<SurveyRow>> {
    if max_n < 2 {
        return Err(Error::InvalidSize { n: max_n, min: 2 });
    }
    (2..=max_n).map(|n| survey_row(n, tol)).collect()
}
