use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sylvester_core::instances::{generate, InstanceFamily, RangePlacement};
use sylvester_core::regular::{compute_r, solve_cbar_direct};
use sylvester_core::roots::{
    build_nx, homogeneous_nullspaces, root_equivalence, solve_quadratic_yny,
    verify_unipotent_solution, QuadraticOptions, RootSide, DEFAULT_ROOT_TOL,
};
use sylvester_core::singular::{
    diagnose, prepare, solve_uv_system, DiagnoseOptions, Diagnosis, VerdictStatus, WitnessEquation,
    QUADRATURE_TOL,
};
use sylvester_core::ComplexMatrix;

use crate::error::CliError;
use crate::format::{
    parse_problem, BatchRow, BatchSummary, CheckOutcome, CheckStatus, Environment,
    HomogeneousReport, Method, ProblemFile, RootsReport, Tolerances, UnipotentEntry, VerdictFile,
    SCHEMA_VERSION,
};

/// Command-line overrides of the options stored in a problem file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub oracle: bool,
    pub quadrature: bool,
    /// Also solve the quadratic block equation and require its unipotent
    /// solutions to match the verdict.
    pub roots: bool,
    pub seed: Option<u64>,
}

impl Overrides {
    fn options(&self, problem: &ProblemFile) -> DiagnoseOptions {
        DiagnoseOptions {
            alpha: self.alpha.unwrap_or(problem.options.alpha),
            tol: self.tol.unwrap_or(problem.options.tol),
            oracle: self.oracle,
            quadrature: self.quadrature || problem.options.method == Method::Quadrature,
        }
    }
}

pub fn read_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_problem(&text)
}

fn now_unix_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn equation_key(eq: WitnessEquation) -> &'static str {
    match eq {
        WitnessEquation::AvPlusUb => "witness_av_plus_ub",
        WitnessEquation::AuPlusVb => "witness_au_plus_vb",
        WitnessEquation::UPlusV => "witness_u_plus_v",
        WitnessEquation::Cubic => "witness_cubic",
        WitnessEquation::Difference => "witness_difference",
    }
}

fn verdict_checks(d: &Diagnosis, opts: &DiagnoseOptions) -> BTreeMap<String, CheckOutcome> {
    let v = &d.verdict;
    let tol = opts.tol;
    let mut checks = BTreeMap::new();
    checks.insert(
        "uv_system_consistent".to_string(),
        CheckOutcome::decide(v.uv_residual, v.uv_threshold),
    );
    match &v.witness {
        Some(w) => {
            for (eq, &res) in &w.residuals {
                checks.insert(
                    equation_key(*eq).to_string(),
                    CheckOutcome::decide(res, tol),
                );
            }
        }
        None => {
            for eq in WitnessEquation::PRIMARY
                .into_iter()
                .chain([WitnessEquation::Difference])
            {
                checks.insert(
                    equation_key(eq).to_string(),
                    CheckOutcome::skipped("no witness"),
                );
            }
        }
    }
    checks.insert(
        "particular_solution_residual".to_string(),
        match v.solution {
            Some(_) => CheckOutcome::decide(v.certificate_residual, tol),
            None => CheckOutcome::skipped("no solution"),
        },
    );
    checks.insert(
        "particular_formulas_agree".to_string(),
        match v.solution_difference {
            Some(diff) => CheckOutcome::decide(diff, tol),
            None => CheckOutcome::skipped("no solution"),
        },
    );
    checks.insert(
        "oracle_agreement".to_string(),
        match (&v.oracle, v.oracle_agreement) {
            (Some(o), Some(agree)) => CheckOutcome {
                status: if agree {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                residual: Some(o.relative_residual),
                threshold: Some(o.threshold),
                note: Some(format!("oracle consistent: {}", o.consistent)),
            },
            _ => CheckOutcome::skipped("run with --oracle"),
        },
    );
    checks.insert(
        "cbar_quadrature".to_string(),
        match v.cbar_quadrature_difference {
            Some(diff) => CheckOutcome::decide(diff, tol),
            None => CheckOutcome::skipped("run with --quadrature"),
        },
    );
    checks
}

/// Runs the unipotent-root cross-check and records it as a check.
fn roots_check(d: &Diagnosis, tol: f64) -> Result<CheckOutcome, CliError> {
    if d.verdict.status == VerdictStatus::IllConditioned {
        return Ok(CheckOutcome::skipped("ill-conditioned verdict"));
    }
    let p = &d.problem;
    let cbar = solve_cbar_direct(&p.a, &p.b, &p.c)?.cbar;
    let r = compute_r(&p.a, &p.b, &cbar)?;
    let res = solve_quadratic_yny(p, &cbar, &r, &QuadraticOptions::default())?;
    let best = res
        .yq_solutions
        .iter()
        .map(|q| verify_unipotent_solution(q, p, &cbar, &r, tol).map(|c| c.sylvester_residual))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let solvable = d.verdict.status == VerdictStatus::Solvable;
    let agrees = res.has_unipotent() == solvable && (!solvable || best <= tol);
    let out = CheckOutcome {
        status: if agrees {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        residual: best.is_finite().then_some(best),
        threshold: Some(tol),
        note: None,
    };
    Ok(out.with_note(format!(
        "unipotent solutions found: {}; verdict solvable: {solvable}",
        res.yq_solutions.len()
    )))
}

pub fn cmd_diagnose(problem: &ProblemFile, flags: &Overrides) -> Result<VerdictFile, CliError> {
    let opts = flags.options(problem);
    let d = diagnose(&problem.a, &problem.b, &problem.c, &opts)?;
    let mut checks = verdict_checks(&d, &opts);
    checks.insert(
        "unipotent_root".to_string(),
        if flags.roots {
            roots_check(&d, opts.tol)?
        } else {
            CheckOutcome::skipped("run with --roots")
        },
    );
    Ok(VerdictFile {
        schema_version: SCHEMA_VERSION.to_string(),
        witness: d.verdict.witness.clone(),
        environment: Environment {
            tolerances: Tolerances {
                tol: opts.tol,
                oracle_tol: opts.tol,
                quadrature_tol: QUADRATURE_TOL.min(opts.tol),
                root_tol: DEFAULT_ROOT_TOL,
            },
            lambda_shift: d.problem.lambda_shift,
            alpha: d.problem.alpha,
            seed: flags.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        verdict: d.verdict,
        checks,
        created_unix_secs: now_unix_secs(),
    })
}

pub fn cmd_homogeneous(
    problem: &ProblemFile,
    flags: &Overrides,
) -> Result<HomogeneousReport, CliError> {
    let opts = flags.options(problem);
    let p = prepare(&problem.a, &problem.b, &problem.c, opts.alpha)?;
    let (basis, adjoint_basis) = homogeneous_nullspaces(&p)?;
    let equivalence = root_equivalence(&p, DEFAULT_ROOT_TOL)?;
    let mut roots = Vec::new();
    if let Some(x) = basis.first() {
        roots.push(build_nx(&p, x, RootSide::Upper, DEFAULT_ROOT_TOL)?);
    }
    if let Some(y) = adjoint_basis.first() {
        roots.push(build_nx(&p, y, RootSide::Lower, DEFAULT_ROOT_TOL)?);
    }
    Ok(HomogeneousReport {
        schema_version: SCHEMA_VERSION.to_string(),
        lambda_shift: p.lambda_shift,
        alpha: p.alpha,
        nullity: basis.len(),
        adjoint_nullity: adjoint_basis.len(),
        basis,
        adjoint_basis,
        equivalence,
        roots,
    })
}

fn homogeneous_residual(q: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let r = (q * b - a * q).norm_fro();
    sylvester_core::matrix::ratio(r, (a.norm_fro() + b.norm_fro()) * q.norm_fro())
}

pub fn cmd_roots(problem: &ProblemFile, flags: &Overrides) -> Result<RootsReport, CliError> {
    let opts = flags.options(problem);
    let p = prepare(&problem.a, &problem.b, &problem.c, opts.alpha)?;
    let cbar = solve_cbar_direct(&p.a, &p.b, &p.c)?.cbar;
    let r = compute_r(&p.a, &p.b, &cbar)?;
    let quadratic = solve_quadratic_yny(&p, &cbar, &r, &QuadraticOptions::default())?;
    let uv = solve_uv_system(&p, opts.tol)?;
    let witness_q = uv.witness.as_ref().map(|w| w.q.clone());
    let unipotent = quadratic
        .yq_solutions
        .iter()
        .map(|q| {
            Ok(UnipotentEntry {
                q: q.clone(),
                check: verify_unipotent_solution(q, &p, &cbar, &r, opts.tol)?,
                witness_consistency: witness_q
                    .as_ref()
                    .map(|w| homogeneous_residual(&(q - w), &p.a, &p.b)),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(RootsReport {
        schema_version: SCHEMA_VERSION.to_string(),
        lambda_shift: p.lambda_shift,
        alpha: p.alpha,
        consistent_with_witness: quadratic.has_unipotent() == uv.consistent,
        cbar,
        r,
        quadratic,
        unipotent,
        witness_q,
    })
}

fn batch_row(path: &Path, flags: &Overrides) -> BatchRow {
    let file = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let outcome = read_problem(path).and_then(|problem| {
        let verdict = cmd_diagnose(&problem, flags)?.verdict;
        Ok((problem.expected_solvable, verdict))
    });
    match outcome {
        Ok((expected, v)) => {
            let decided = v.status != VerdictStatus::IllConditioned;
            BatchRow {
                file,
                status: Some(v.status),
                certificate_residual: Some(v.certificate_residual),
                oracle_agreement: v.oracle_agreement,
                expected_agreement: expected
                    .filter(|_| decided)
                    .map(|e| e == (v.status == VerdictStatus::Solvable)),
                error: None,
            }
        }
        Err(e) => BatchRow {
            file,
            status: None,
            certificate_residual: None,
            oracle_agreement: None,
            expected_agreement: None,
            error: Some(e.to_string()),
        },
    }
}

/// Diagnoses every `*.json` file in `dir`, in filename order, always with
/// the oracle cross-check.
pub fn cmd_batch(dir: &Path, flags: &Overrides) -> Result<BatchSummary, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let flags = Overrides {
        oracle: true,
        ..*flags
    };
    let rows: Vec<BatchRow> = paths.iter().map(|p| batch_row(p, &flags)).collect();
    let checked: Vec<bool> = rows.iter().filter_map(|r| r.oracle_agreement).collect();
    let agreement = if checked.is_empty() {
        None
    } else {
        Some(checked.iter().filter(|&&x| x).count() as f64 / checked.len() as f64)
    };
    Ok(BatchSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
        oracle_agreement_rate: agreement,
    })
}

/// Writes `count` generated problem files into `dir`, cycling through
/// regular and singular families and range placements.
pub fn cmd_generate(
    dir: &Path,
    seed: u64,
    count: usize,
    max_dim: usize,
) -> Result<Vec<PathBuf>, CliError> {
    if max_dim == 0 {
        return Err(CliError::Schema("max dimension must be positive".into()));
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let kinds = [
        (InstanceFamily::Regular, RangePlacement::Inside),
        (InstanceFamily::SharedJordan, RangePlacement::Inside),
        (InstanceFamily::SharedJordan, RangePlacement::Outside),
        (InstanceFamily::SharedSemisimple, RangePlacement::Inside),
        (InstanceFamily::SharedSemisimple, RangePlacement::Outside),
        (InstanceFamily::SharedJordan, RangePlacement::Zero),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = Vec::with_capacity(count);
    for i in 0..count {
        let (family, placement) = kinds[i % kinds.len()];
        let n = 1 + i % max_dim;
        let m = 1 + (i / max_dim) % max_dim;
        let (n, m) = match family {
            InstanceFamily::SharedJordan if n.max(m) < 2 => (2, m),
            InstanceFamily::SharedSemisimple if n + m < 3 => (n + 1, m),
            _ => (n, m),
        };
        let inst = generate(&mut rng, n, m, family, placement)?;
        let mut problem = ProblemFile::new(inst.a.clone(), inst.b.clone(), inst.c.clone());
        problem.expected_solvable = Some(inst.expected_solvable());
        problem.label = Some(format!("{}-s{seed}-{i}", inst.label));
        let path = dir.join(format!("{i:04}-{}.json", inst.label));
        let text = serde_json::to_string_pretty(&problem).expect("problem files serialize");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64) -> ProblemFile {
        let m = |x: f64| ComplexMatrix::from_real_rows(&[&[x]]).unwrap();
        ProblemFile::new(m(a), m(b), m(c))
    }

    #[test]
    fn unrequested_checks_are_skipped() {
        let v = cmd_diagnose(&scalar(2.0, 1.0, 3.0), &Overrides::default()).unwrap();
        for key in ["oracle_agreement", "cbar_quadrature", "unipotent_root"] {
            assert_eq!(v.checks[key].status, CheckStatus::Skipped, "{key}");
        }
        assert_eq!(
            v.checks["particular_solution_residual"].status,
            CheckStatus::Pass
        );
    }

    #[test]
    fn unsolvable_verdict_skips_solution_checks() {
        let v = cmd_diagnose(
            &scalar(1.0, 1.0, 1.0),
            &Overrides {
                roots: true,
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(v.exit_code(), 1);
        assert_eq!(
            v.checks["particular_solution_residual"].status,
            CheckStatus::Skipped
        );
        assert_eq!(v.checks["uv_system_consistent"].status, CheckStatus::Fail);
        assert_eq!(v.checks["unipotent_root"].status, CheckStatus::Pass);
    }

    #[test]
    fn alpha_above_quarter_pi_is_a_solver_error() {
        let err = cmd_diagnose(
            &scalar(2.0, 1.0, 3.0),
            &Overrides {
                alpha: Some(1.2),
                ..Overrides::default()
            },
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn generate_rejects_zero_dimension() {
        let dir = std::env::temp_dir().join("sylv-generate-zero");
        assert!(matches!(
            cmd_generate(&dir, 0, 1, 0),
            Err(CliError::Schema(_))
        ));
    }
}
