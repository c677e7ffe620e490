//! JSON file formats. Matrices are row-major nested arrays of `[re, im]`
//! pairs; struct fields serialize in declaration order and maps are sorted,
//! so equal reports produce identical bytes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use sylvester_core::block::BlockMatrix;
use sylvester_core::roots::{QuadraticSolveResult, RootCandidate, RootEquivalence, UnipotentCheck};
use sylvester_core::singular::{UVWitness, Verdict, VerdictStatus, DEFAULT_TOL};
use sylvester_core::ComplexMatrix;

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `c̄` by a direct solve of the vectorized system.
    #[default]
    Direct,
    /// Direct `c̄` cross-checked against the integral representation.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemOptions {
    pub alpha: f64,
    pub tol: f64,
    pub method: Method,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self {
            alpha: FRAC_PI_4,
            tol: DEFAULT_TOL,
            method: Method::Direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    #[serde(default)]
    pub options: ProblemOptions,
    /// Solvability known from the construction, for generated corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_solvable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ProblemFile {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            a,
            b,
            c,
            options: ProblemOptions::default(),
            expected_solvable: None,
            label: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "unsupported schema_version {:?}, expected {SCHEMA_VERSION:?}",
                self.schema_version
            )));
        }
        let (n, m) = (self.a.nrows(), self.b.nrows());
        if !self.a.is_square() || !self.b.is_square() {
            return Err(CliError::Schema(format!(
                "a and b must be square, got {:?} and {:?}",
                self.a.shape(),
                self.b.shape()
            )));
        }
        if n == 0 || m == 0 {
            return Err(CliError::Schema("a and b must be non-empty".into()));
        }
        if self.c.shape() != (n, m) {
            return Err(CliError::Schema(format!(
                "c must be {n}x{m}, got {:?}",
                self.c.shape()
            )));
        }
        Ok(())
    }
}

/// Parses and validates a problem file. Syntax errors carry the line and
/// column reported by the JSON reader.
pub fn parse_problem(text: &str) -> Result<ProblemFile, CliError> {
    let problem: ProblemFile = serde_json::from_str(text).map_err(CliError::from_json)?;
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// One named check with the residual and threshold that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub status: CheckStatus,
    pub residual: Option<f64>,
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckOutcome {
    /// Pass iff `residual <= threshold`.
    pub fn decide(residual: f64, threshold: f64) -> Self {
        Self {
            status: if residual <= threshold {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            residual: Some(residual),
            threshold: Some(threshold),
            note: None,
        }
    }

    pub fn skipped(note: &str) -> Self {
        Self {
            status: CheckStatus::Skipped,
            residual: None,
            threshold: None,
            note: Some(note.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol: f64,
    pub oracle_tol: f64,
    pub quadrature_tol: f64,
    pub root_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tolerances: Tolerances,
    pub lambda_shift: f64,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub schema_version: String,
    pub verdict: Verdict,
    pub witness: Option<UVWitness>,
    pub environment: Environment,
    pub checks: BTreeMap<String, CheckOutcome>,
    /// Creation time; the only field that varies between identical runs.
    pub created_unix_secs: u64,
}

impl VerdictFile {
    pub fn exit_code(&self) -> i32 {
        status_exit_code(self.verdict.status)
    }
}

pub fn status_exit_code(status: VerdictStatus) -> i32 {
    match status {
        VerdictStatus::Solvable => 0,
        VerdictStatus::Unsolvable => 1,
        VerdictStatus::IllConditioned => 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousReport {
    pub schema_version: String,
    pub lambda_shift: f64,
    pub alpha: f64,
    /// Dimension of the solutions of `a x = x b`.
    pub nullity: usize,
    /// Dimension of the solutions of `b y = y a`.
    pub adjoint_nullity: usize,
    pub basis: Vec<ComplexMatrix>,
    pub adjoint_basis: Vec<ComplexMatrix>,
    pub equivalence: RootEquivalence,
    /// Square roots of `N0^2` built from the first basis element on each
    /// side, when present.
    pub roots: Vec<RootCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnipotentEntry {
    pub q: ComplexMatrix,
    pub check: UnipotentCheck,
    /// Relative residual of `(q − q_w) b − a (q − q_w) = 0` against the
    /// witness difference `q_w = v − u`; solutions of `q b − a q = r`
    /// differ by intertwiners.
    pub witness_consistency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootsReport {
    pub schema_version: String,
    pub lambda_shift: f64,
    pub alpha: f64,
    pub cbar: ComplexMatrix,
    pub r: ComplexMatrix,
    pub quadratic: QuadraticSolveResult,
    pub unipotent: Vec<UnipotentEntry>,
    pub witness_q: Option<ComplexMatrix>,
    /// Whether a unipotent solution exists exactly when the `(u, v)` system
    /// is consistent.
    pub consistent_with_witness: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub file: String,
    pub status: Option<VerdictStatus>,
    pub certificate_residual: Option<f64>,
    pub oracle_agreement: Option<bool>,
    pub expected_agreement: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub schema_version: String,
    pub rows: Vec<BatchRow>,
    /// Fraction of rows with an oracle cross-check that agree; `None` when
    /// there are none.
    pub oracle_agreement_rate: Option<f64>,
    pub errors: usize,
}

/// Identity element helper so reports can state `Y = 1`.
pub fn is_identity(y: &BlockMatrix, tol: f64) -> bool {
    let (n, m) = y.dims();
    y.distance(&BlockMatrix::identity(n, m)) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> ComplexMatrix {
        ComplexMatrix::identity(1)
    }

    #[test]
    fn options_default_when_absent() {
        let p =
            parse_problem(r#"{"schema_version":"1","a":[[[2,0]]],"b":[[[1,0]]],"c":[[[3,0]]]}"#)
                .unwrap();
        assert_eq!(p.options, ProblemOptions::default());
        assert_eq!(p.options.alpha, FRAC_PI_4);
    }

    #[test]
    fn partial_options_keep_other_defaults() {
        let p = parse_problem(
            r#"{"schema_version":"1","a":[[[2,0]]],"b":[[[1,0]]],"c":[[[3,0]]],"options":{"method":"quadrature"}}"#,
        )
        .unwrap();
        assert_eq!(p.options.method, Method::Quadrature);
        assert_eq!(p.options.tol, DEFAULT_TOL);
    }

    #[test]
    fn validate_rejects_non_square_and_empty() {
        let rect = ComplexMatrix::zeros(1, 2);
        assert!(
            ProblemFile::new(rect.clone(), one(), ComplexMatrix::zeros(1, 1))
                .validate()
                .is_err()
        );
        let empty = ComplexMatrix::zeros(0, 0);
        assert!(ProblemFile::new(empty.clone(), empty.clone(), empty)
            .validate()
            .is_err());
        assert!(ProblemFile::new(one(), one(), one()).validate().is_ok());
    }

    #[test]
    fn decide_compares_residual_with_threshold() {
        assert_eq!(CheckOutcome::decide(1e-9, 1e-8).status, CheckStatus::Pass);
        assert_eq!(CheckOutcome::decide(1e-8, 1e-8).status, CheckStatus::Pass);
        assert_eq!(CheckOutcome::decide(2e-8, 1e-8).status, CheckStatus::Fail);
        assert_eq!(
            CheckOutcome::decide(f64::NAN, 1e-8).status,
            CheckStatus::Fail
        );
        assert_eq!(CheckOutcome::skipped("x").residual, None);
    }

    #[test]
    fn exit_codes_follow_verdicts() {
        assert_eq!(status_exit_code(VerdictStatus::Solvable), 0);
        assert_eq!(status_exit_code(VerdictStatus::Unsolvable), 1);
        assert_eq!(status_exit_code(VerdictStatus::IllConditioned), 2);
    }

    #[test]
    fn problem_file_bytes_are_stable() {
        let p = ProblemFile::new(one(), one().scale_real(0.1), one().scale_real(1.0 / 3.0));
        let text = serde_json::to_string(&p).unwrap();
        let back = parse_problem(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
