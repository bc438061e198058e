//! The `qsd` command-line tool.
//!
//! Exit codes: 0 success, 1 input error, 2 solver did not converge,
//! 3 certification failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{best_cyclic_bound, lower_bound, BoundReport};
use crate::error::Error;
use crate::format::{
    matrices_from_pairs, parse_instance, parse_report, InstanceFile, Report, ReportMatrices,
    SolverMetadata,
};
use crate::nosignaling::{
    norm_identity_check, proposition_bound_check, steering_structure, CERTIFICATE_FACTOR,
};
use crate::quantum::{ComplexMatrix, StateEnsemble};
use crate::solver::{certificate_from_operator, solve, DiscriminationResult, SolverOptions};
use crate::steering::{
    certificate_decompositions, detector_threshold, exact_detector_probabilities,
    message_dependence, simulate_protocol, two_sample_threshold,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CERTIFICATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qsd",
    version,
    about = "Optimal minimum-error discrimination of quantum states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal POVM and write a certificate report.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the closed-form cyclic lower bound.
    Bound {
        instance: PathBuf,
        /// Also maximize over cyclic orderings (at most 8 states).
        #[arg(long)]
        best_cyclic: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-verify a solve report against its instance.
    Certify {
        instance: PathBuf,
        report: PathBuf,
        /// Overrides the tolerance recorded in the report.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Simulate the steering protocol and measure Bob's detector statistics.
    Simulate {
        instance: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iter,
            kkt_tolerance: self.tolerance,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }
}

/// A failed command: exit code and a diagnostic for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::input(e.to_string())
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> std::result::Result<(InstanceFile, StateEnsemble), Failure> {
    let file = parse_instance(&read(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let ensemble = file
        .to_ensemble()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok((file, ensemble))
}

fn emit(text: &str, output: Option<&Path>) -> std::result::Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktBlock {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub slackness_residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveBlock {
    pub value: f64,
    pub converged: bool,
    pub trace_k: f64,
    pub steering_probabilities: Vec<f64>,
    pub nosignaling_bound: f64,
    pub bound_residual: f64,
    pub kkt: KktBlock,
    pub slackness: Vec<f64>,
    pub dual_feasibility: Vec<f64>,
    pub ensemble_residual: f64,
    pub norm_identity_residual: f64,
    /// `1 − p_x`, or null where the complementary state vanishes.
    pub complementary_weights: Vec<Option<f64>>,
    pub lower_bound: f64,
}

fn solver_metadata(result: &DiscriminationResult, options: &SolverOptions) -> SolverMetadata {
    SolverMetadata {
        iterations: result.iterations,
        converged: result.converged,
        seed: options.seed,
        kkt_tolerance: options.kkt_tolerance,
        max_iterations: options.max_iterations,
        damping: options.damping,
    }
}

fn solve_report(
    file: &InstanceFile,
    ensemble: &StateEnsemble,
    options: &SolverOptions,
) -> Result<(Report, DiscriminationResult), Failure> {
    let result = solve(ensemble, options)?;
    let structure = steering_structure(ensemble, &result.certificate)?;
    let cert = &result.certificate;
    let block = SolveBlock {
        value: result.guess_probability,
        converged: result.converged,
        trace_k: cert.trace_k,
        steering_probabilities: structure.p.clone(),
        nosignaling_bound: structure.bound,
        bound_residual: proposition_bound_check(&structure, result.guess_probability),
        kkt: KktBlock {
            primal_residual: result.kkt.primal_residual,
            dual_residual: result.kkt.dual_residual,
            slackness_residual: result.kkt.slackness_residual,
            gap: result.kkt.gap,
        },
        slackness: cert.slackness.clone(),
        dual_feasibility: cert.dual_feasibility.clone(),
        ensemble_residual: structure.ensemble_residual,
        norm_identity_residual: norm_identity_check(&structure, ensemble),
        complementary_weights: structure
            .complementary
            .iter()
            .map(|c| c.as_ref().map(|c| c.weight))
            .collect(),
        lower_bound: lower_bound(ensemble, None)?.lower_bound,
    };
    let mut report = Report::new(
        "solve",
        file,
        serde_json::to_value(&block).expect("serializable"),
    );
    report.solver = Some(solver_metadata(&result, options));
    report.matrices = Some(ReportMatrices {
        povm: result
            .povm
            .elements()
            .iter()
            .map(ComplexMatrix::to_pairs)
            .collect(),
        k: cert.k_operator.to_pairs(),
        sigma: cert.sigma.iter().map(ComplexMatrix::to_pairs).collect(),
    });
    Ok((report, result))
}

fn cmd_solve(instance: &Path, args: &SolverArgs, output: Option<&Path>) -> CmdResult {
    let (file, ensemble) = load_instance(instance)?;
    let options = args.options();
    let (report, result) = solve_report(&file, &ensemble, &options)?;
    emit(&report.to_json(), output)?;
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "solver did not converge after {} iterations (KKT score {:.3e})",
            result.iterations,
            result.kkt.score()
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn bound_json(r: &BoundReport) -> serde_json::Value {
    json!({
        "lower_bound": r.lower_bound,
        "ordering": r.ordering,
        "pair_terms": r.pair_terms,
    })
}

fn cmd_bound(instance: &Path, best_cyclic: bool, output: Option<&Path>) -> CmdResult {
    let (file, ensemble) = load_instance(instance)?;
    let mut result = bound_json(&lower_bound(&ensemble, None)?);
    if best_cyclic {
        result["best_cyclic"] = bound_json(&best_cyclic_bound(&ensemble)?);
    }
    emit(&Report::new("bound", &file, result).to_json(), output)?;
    Ok(EXIT_OK)
}

struct Check {
    name: &'static str,
    residual: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

fn cmd_certify(instance: &Path, report_path: &Path, tolerance: Option<f64>) -> CmdResult {
    let (file, ensemble) = load_instance(instance)?;
    let report = parse_report(&read(report_path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", report_path.display())))?;
    let hash = file.hash();
    if report.instance.hash != hash {
        return Err(Error::HashMismatch {
            expected: report.instance.hash,
            found: hash,
        }
        .into());
    }
    let matrices = report
        .matrices
        .as_ref()
        .ok_or_else(|| Failure::input("report has no matrices; certify needs a solve report"))?;
    let tolerance = tolerance
        .or(report.solver.as_ref().map(|s| s.kkt_tolerance))
        .unwrap_or(SolverOptions::default().kkt_tolerance);
    let elements = matrices_from_pairs("matrices.povm", &matrices.povm)?;
    let k = matrices_from_pairs("matrices.k", std::slice::from_ref(&matrices.k))?.remove(0);
    let (certificate, kkt) = certificate_from_operator(&ensemble, &elements, &k)?;

    let loose = CERTIFICATE_FACTOR * tolerance;
    let mut checks = vec![
        Check {
            name: "povm validity",
            residual: kkt.primal_residual,
            tolerance,
        },
        Check {
            name: "dual feasibility",
            residual: kkt.dual_residual,
            tolerance,
        },
        Check {
            name: "slackness",
            residual: kkt.slackness_residual,
            tolerance,
        },
        Check {
            name: "duality gap",
            residual: kkt.gap.abs(),
            tolerance,
        },
    ];
    match steering_structure(&ensemble, &certificate) {
        Ok(structure) => {
            // The value is recomputed from the elements as given, valid POVM or not.
            let value: f64 = (0..ensemble.len())
                .map(|x| {
                    ensemble.prior(x) * ensemble.state(x).matrix().trace_product(&elements[x]).re
                })
                .sum();
            checks.push(Check {
                name: "ensemble identity",
                residual: structure.ensemble_residual,
                tolerance: loose,
            });
            checks.push(Check {
                name: "norm identity",
                residual: norm_identity_check(&structure, &ensemble),
                tolerance: loose,
            });
            checks.push(Check {
                name: "no-signaling bound",
                residual: proposition_bound_check(&structure, value).abs(),
                tolerance: loose,
            });
        }
        Err(e) => {
            log::warn!("steering structure unavailable: {e}");
            checks.push(Check {
                name: "steering structure",
                residual: f64::INFINITY,
                tolerance: loose,
            });
        }
    }

    println!(
        "{:<20} {:>24} {:>12}  status",
        "check", "residual", "tolerance"
    );
    for c in &checks {
        println!(
            "{:<20} {:>24.16e} {:>12.1e}  {}",
            c.name,
            c.residual,
            c.tolerance,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    if checks.iter().all(Check::passed) {
        Ok(EXIT_OK)
    } else {
        eprintln!("certification failed");
        Ok(EXIT_CERTIFICATION)
    }
}

fn cmd_simulate(
    instance: &Path,
    shots: u64,
    args: &SolverArgs,
    output: Option<&Path>,
) -> CmdResult {
    if shots == 0 {
        return Err(Failure::input("shots must be positive"));
    }
    let (file, ensemble) = load_instance(instance)?;
    let options = args.options();
    let result = solve(&ensemble, &options)?;
    if !result.converged {
        return Err(Failure {
            code: EXIT_NOT_CONVERGED,
            message: format!(
                "solver did not converge after {} iterations",
                result.iterations
            ),
        });
    }
    let structure = steering_structure(&ensemble, &result.certificate)?;
    let decompositions = certificate_decompositions(&structure, &ensemble)?;
    let stats = simulate_protocol(&decompositions, &result.povm, shots, args.seed)?;
    let exact = exact_detector_probabilities(&decompositions, &result.povm)?;
    let n = ensemble.len();
    let diagonal_sum = stats.diagonal_sum().expect("shots > 0");
    let threshold = detector_threshold(n, shots);
    let dependence = message_dependence(&stats).expect("shots > 0");
    let nosignaling_ok = diagonal_sum <= 1.0 + threshold;

    let value = json!({
        "shots_per_message": shots,
        "seed": args.seed,
        "counts": stats.counts,
        "probabilities": stats.probabilities,
        "exact_probabilities": exact,
        "diagonal_sum": diagonal_sum,
        "exact_diagonal_sum": (0..n).map(|x| exact[x][x]).sum::<f64>(),
        "threshold": threshold,
        "steering_probabilities": structure.p,
        "first_member_frequencies": stats.first_member_hits.iter().map(|&h| h as f64 / shots as f64).collect::<Vec<_>>(),
        "message_dependence": dependence,
        "two_sample_threshold": two_sample_threshold(shots),
        "value": result.guess_probability,
        "nosignaling_ok": nosignaling_ok,
    });
    let mut report = Report::new("simulate", &file, value);
    report.solver = Some(solver_metadata(&result, &options));
    emit(&report.to_json(), output)?;
    if nosignaling_ok {
        Ok(EXIT_OK)
    } else {
        eprintln!("detector statistics exceed the no-signaling threshold: {diagonal_sum} > 1 + {threshold:.3e}");
        Ok(EXIT_CERTIFICATION)
    }
}

pub fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Solve {
            instance,
            solver,
            output,
        } => cmd_solve(instance, solver, output.as_deref()),
        Command::Bound {
            instance,
            best_cyclic,
            output,
        } => cmd_bound(instance, *best_cyclic, output.as_deref()),
        Command::Certify {
            instance,
            report,
            tolerance,
        } => cmd_certify(instance, report, *tolerance),
        Command::Simulate {
            instance,
            shots,
            solver,
            output,
        } => cmd_simulate(instance, *shots, solver, output.as_deref()),
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn run() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QSD_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
