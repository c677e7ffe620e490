use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sylvester_cli::commands::{
    cmd_batch, cmd_diagnose, cmd_generate, cmd_homogeneous, cmd_roots, read_problem, Overrides,
};
use sylvester_cli::error::CliError;
use sylvester_cli::format::{
    BatchSummary, CheckStatus, HomogeneousReport, RootsReport, VerdictFile,
};

#[derive(Parser)]
#[command(
    name = "sylv",
    version,
    about = "Decide solvability of a x − x b = c and certify solutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide solvability and emit a verdict file.
    Diagnose {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Cross-check the verdict against unipotent solutions of the
        /// quadratic block equation.
        #[arg(long)]
        roots: bool,
    },
    /// Intertwiner spaces and the square-root equivalence checks.
    Homogeneous {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Enumerate block square roots and solutions of the quadratic equation.
    Roots {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Diagnose every problem file in a directory, with the oracle.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Write a corpus of random problem files.
    Generate {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
    },
}

#[derive(Args)]
struct Flags {
    /// Sector half-angle for the shift, at most π/4.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Attach the vectorized least-squares cross-check.
    #[arg(long)]
    oracle: bool,
    /// Validate c̄ through the integral representation.
    #[arg(long)]
    quadrature: bool,
    /// Recorded in the environment block.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report on stdout instead of a summary.
    #[arg(long)]
    json: bool,
}

impl Flags {
    fn overrides(&self, roots: bool) -> Overrides {
        Overrides {
            alpha: self.alpha,
            tol: self.tol,
            oracle: self.oracle,
            quadrature: self.quadrature,
            roots,
            seed: self.seed,
        }
    }
}

fn emit<T: Serialize>(
    report: &T,
    flags: &Flags,
    summary: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    if let Some(path) = &flags.out {
        fs::write(path, &text).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    if flags.json {
        print!("{text}");
    } else {
        println!("{}", summary());
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

fn verdict_summary(v: &VerdictFile) -> String {
    let mut lines = vec![
        format!("status: {:?}", v.verdict.status),
        format!(
            "certificate residual: {:.3e}",
            v.verdict.certificate_residual
        ),
        format!(
            "shift: {}  alpha: {}",
            v.environment.lambda_shift, v.environment.alpha
        ),
    ];
    if let Some(x) = &v.verdict.solution {
        lines.push(format!("x = {x:?}"));
    }
    for (name, check) in &v.checks {
        if check.status != CheckStatus::Skipped {
            lines.push(format!(
                "  {name}: {:?} (residual {}, threshold {})",
                check.status,
                fmt_opt(check.residual),
                fmt_opt(check.threshold)
            ));
        }
    }
    lines.extend(v.verdict.notes.iter().map(|n| format!("note: {n}")));
    lines.join("\n")
}

fn homogeneous_summary(h: &HomogeneousReport) -> String {
    let e = &h.equivalence;
    format!(
        "nullity: {}  adjoint nullity: {}\nnonzero intertwiner: {}  nonprimary root: {}  commuting unipotent: {}  consistent: {}",
        h.nullity,
        h.adjoint_nullity,
        e.nonzero_solution,
        e.nonprimary_root,
        e.commuting_unipotent,
        e.consistent()
    )
}

fn roots_summary(r: &RootsReport) -> String {
    let mut lines = vec![
        format!("roots of N1: {}", r.quadratic.roots_of_n1.len()),
        format!("Y solutions: {}", r.quadratic.y_solutions.len()),
        format!("unipotent solutions: {}", r.unipotent.len()),
    ];
    for entry in &r.unipotent {
        lines.push(format!(
            "  q residual {:.3e}, block residual {:.3e}",
            entry.check.sylvester_residual, entry.check.block_residual
        ));
    }
    lines.push(format!(
        "consistent with (u, v) witness: {}",
        r.consistent_with_witness
    ));
    lines.extend(r.quadratic.notes.iter().map(|n| format!("note: {n}")));
    lines.join("\n")
}

fn batch_summary(s: &BatchSummary) -> String {
    let mut lines: Vec<String> = s
        .rows
        .iter()
        .map(|r| match &r.error {
            Some(e) => format!("{}  ERROR  {e}", r.file),
            None => format!(
                "{}  {:?}  residual {}  oracle {}",
                r.file,
                r.status.expect("rows without errors carry a status"),
                fmt_opt(r.certificate_residual),
                r.oracle_agreement
                    .map_or("-", |a| if a { "agree" } else { "DISAGREE" })
            ),
        })
        .collect();
    lines.push(format!(
        "{} files, {} errors, oracle agreement {}",
        s.rows.len(),
        s.errors,
        s.oracle_agreement_rate
            .map_or_else(|| "-".to_string(), |r| format!("{:.1}%", 100.0 * r))
    ));
    lines.join("\n")
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Diagnose { file, flags, roots } => {
            let v = cmd_diagnose(&read_problem(&file)?, &flags.overrides(roots))?;
            emit(&v, &flags, || verdict_summary(&v))?;
            Ok(v.exit_code())
        }
        Command::Homogeneous { file, flags } => {
            let h = cmd_homogeneous(&read_problem(&file)?, &flags.overrides(false))?;
            emit(&h, &flags, || homogeneous_summary(&h))?;
            Ok(0)
        }
        Command::Roots { file, flags } => {
            let r = cmd_roots(&read_problem(&file)?, &flags.overrides(false))?;
            emit(&r, &flags, || roots_summary(&r))?;
            Ok(0)
        }
        Command::Batch { dir, flags } => {
            let s = cmd_batch(&dir, &flags.overrides(false))?;
            for row in s.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{}: {}", row.file, row.error.as_deref().unwrap_or_default());
            }
            emit(&s, &flags, || batch_summary(&s))?;
            Ok(if s.errors > 0 { 3 } else { 0 })
        }
        Command::Generate {
            dir,
            seed,
            count,
            max_dim,
        } => {
            let written = cmd_generate(&dir, seed, count, max_dim)?;
            println!("wrote {} files to {}", written.len(), dir.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
