//! Text and JSON formats: dense vectors, basis exports, survey tables.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{BasisVectorRecord, BuildDiagnostics, EigenBasis, SelectionRule, SurveyRow, VectorLabel};
use crate::delta_trains::{eta_pair, phase_exponent_of, ModulatedDeltaTrain};
use crate::eigenprojection::{EigenClass, TrainSum};
use crate::numerics::{DenseVector, TolerancePolicy};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed basis export: {0}")]
    Json(#[from] serde_json::Error),

    #[error("inconsistent basis export: {0}")]
    Invalid(String),

    #[error(transparent)]
    Basis(#[from] crate::error::Error),
}

/// One `index,re,im` line per entry.
pub fn write_vector(v: &DenseVector) -> String {
    write_complex_lines(v.entries())
}

pub fn write_complex_lines(values: &[Complex64]) -> String {
    let mut s = String::new();
    for (j, z) in values.iter().enumerate() {
        writeln!(s, "{j},{},{}", z.re, z.im).expect("writing to a String");
    }
    s
}

/// Parses the `index,re,im` format. Blank lines and `#` comments are ignored;
/// indices must run `0, 1, 2, ...` in order.
pub fn parse_vector(text: &str) -> Result<DenseVector, FormatError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| FormatError::Parse { line, message };
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `index,re,im`, found {} fields", fields.len())));
        }
        let index: usize = fields[0].parse().map_err(|e| err(format!("bad index {:?}: {e}", fields[0])))?;
        if index != entries.len() {
            return Err(err(format!("expected index {}, found {index}", entries.len())));
        }
        let re: f64 = fields[1].parse().map_err(|e| err(format!("bad real part {:?}: {e}", fields[1])))?;
        let im: f64 = fields[2].parse().map_err(|e| err(format!("bad imaginary part {:?}: {e}", fields[2])))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(err("non-finite value".into()));
        }
        entries.push(Complex64::new(re, im));
    }
    DenseVector::new(entries).map_err(|e| FormatError::Parse { line: 0, message: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExport {
    pub n: usize,
    pub d1: usize,
    pub a: usize,
    pub b: usize,
    pub phase_re: f64,
    pub phase_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermExport {
    pub coeff_re: f64,
    pub coeff_im: f64,
    pub train: TrainExport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorExport {
    pub k: u8,
    pub a: usize,
    pub b: usize,
    /// `entries = scale · Σ coeff · train`.
    pub scale: f64,
    pub support: usize,
    pub terms: Vec<TermExport>,
    /// Nonzero entries as `(index, re, im)`.
    pub entries: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisExport {
    pub format_version: u32,
    pub n: usize,
    pub eta1: usize,
    pub eta2: usize,
    #[serde(default)]
    pub rule: SelectionRule,
    pub vectors: Vec<VectorExport>,
}

impl BasisExport {
    pub fn from_basis(basis: &EigenBasis, tol: &TolerancePolicy) -> Self {
        let vectors = basis
            .vectors
            .iter()
            .map(|rec| VectorExport {
                k: rec.label.class.k(),
                a: rec.label.a,
                b: rec.label.b,
                scale: rec.scale,
                support: rec.support,
                terms: rec
                    .sum
                    .terms()
                    .iter()
                    .map(|t| {
                        let p = t.train.phase();
                        TermExport {
                            coeff_re: t.coeff.re,
                            coeff_im: t.coeff.im,
                            train: TrainExport {
                                n: t.train.n(),
                                d1: t.train.stride(),
                                a: t.train.offset(),
                                b: t.train.modulation(),
                                phase_re: p.re,
                                phase_im: p.im,
                            },
                        }
                    })
                    .collect(),
                entries: rec
                    .dense
                    .entries()
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm() > tol.zero_tol)
                    .map(|(j, z)| (j, z.re, z.im))
                    .collect(),
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            n: basis.n,
            eta1: basis.eta.eta1,
            eta2: basis.eta.eta2,
            rule: basis.rule,
            vectors,
        }
    }

    /// Rebuilds the basis. Labels, train data and dense entries are
    /// cross-checked; any inconsistency is reported as corruption.
    pub fn into_basis(self, tol: &TolerancePolicy) -> Result<EigenBasis, FormatError> {
        let invalid = |msg: String| Err(FormatError::Invalid(msg));
        if self.format_version != FORMAT_VERSION {
            return invalid(format!("unsupported format_version {}", self.format_version));
        }
        let eta = eta_pair(self.n)?;
        if (eta.eta1, eta.eta2) != (self.eta1, self.eta2) {
            return invalid(format!("eta ({}, {}) does not match n={}", self.eta1, self.eta2, self.n));
        }
        let n = self.n;
        let mut vectors = Vec::with_capacity(self.vectors.len());
        let mut per_class_counts = [0usize; 4];
        for (i, v) in self.vectors.into_iter().enumerate() {
            let class = EigenClass::new(v.k)?;
            if v.a >= eta.eta1 || v.b >= eta.eta2 {
                return invalid(format!("vector {i}: label out of range"));
            }
            let mut sum = TrainSum::empty(n);
            for t in &v.terms {
                let tr = &t.train;
                if tr.n != n {
                    return invalid(format!("vector {i}: train dimension {} != {n}", tr.n));
                }
                let canonical = ModulatedDeltaTrain::new(n, tr.d1, tr.a, tr.b)?;
                if canonical.offset() != tr.a || canonical.modulation() != tr.b {
                    return invalid(format!("vector {i}: train labels are not canonical"));
                }
                let e = phase_exponent_of(n, Complex64::new(tr.phase_re, tr.phase_im), tol.zero_tol)?;
                sum.push(Complex64::new(t.coeff_re, t.coeff_im), canonical.with_phase_exponent(e))?;
            }
            let mut dense = vec![Complex64::new(0.0, 0.0); n];
            for &(j, re, im) in &v.entries {
                if j >= n {
                    return invalid(format!("vector {i}: entry index {j} out of range"));
                }
                dense[j] = Complex64::new(re, im);
            }
            let dense = DenseVector::new(dense)?;
            let symbolic = sum.densify().scaled(Complex64::new(v.scale, 0.0));
            if symbolic.distance(&dense)? > tol.zero_tol.max(tol.residual_tol) * (n as f64).sqrt() {
                return invalid(format!("vector {i}: entries disagree with its train terms"));
            }
            per_class_counts[class.index()] += 1;
            vectors.push(BasisVectorRecord {
                label: VectorLabel { class, a: v.a, b: v.b },
                sum,
                scale: v.scale,
                support: dense.support_size(tol.zero_tol),
                dense,
            });
        }
        Ok(EigenBasis { n, eta, rule: self.rule, vectors, per_class_counts, diagnostics: BuildDiagnostics::default() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("export is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    /// One section per vector: a `vector,<ordinal>,<k>,<a>,<b>` header line,
    /// then its nonzero entries as `index,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# format_version={},n={},eta1={},eta2={},rule={}",
            self.format_version,
            self.n,
            self.eta1,
            self.eta2,
            self.rule.name()
        )
            .expect("writing to a String");
        for (i, v) in self.vectors.iter().enumerate() {
            writeln!(s, "vector,{i},{},{},{}", v.k, v.a, v.b).expect("writing to a String");
            for (j, re, im) in &v.entries {
                writeln!(s, "{j},{re},{im}").expect("writing to a String");
            }
        }
        s
    }
}

pub const SURVEY_HEADER: &str =
    "n,eta1,eta2,max_support,lower_bound,is_orthogonal,max_offdiag,witness_first,witness_second,witness_re,witness_im";

pub fn survey_csv(rows: &[SurveyRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{SURVEY_HEADER}").expect("writing to a String");
    for r in rows {
        let (first, second, re, im) = match &r.witness {
            Some(w) => (
                label_field(&w.first),
                label_field(&w.second),
                w.inner.re.to_string(),
                w.inner.im.to_string(),
            ),
            None => Default::default(),
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{:e},{first},{second},{re},{im}",
            r.n, r.eta1, r.eta2, r.max_support, r.lower_bound, r.is_orthogonal, r.max_offdiag
        )
        .expect("writing to a String");
    }
    s
}

fn label_field(l: &VectorLabel) -> String {
    format!("{}:{}:{}", l.class.k(), l.a, l.b)
}
