mod algebra_file;
mod error;
mod random;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use conformal_core::checks::{
    check_conformal_associativity, check_conformal_jacobi, check_quasi_symmetry, validate_presentation, CheckReport,
};
use conformal_core::coeff::check_coefficient_lie;
use conformal_core::constructions::{affinize, builtin, commutator_algebra, loop_algebra, FiniteAlgebra};
use conformal_core::embed::{admissible_threshold, build_enveloping, verify_embedding, EmbedBounds, VerifyOptions};
use conformal_core::envelope::{check_adconf, EnvelopeContext, DEFAULT_STEP_BUDGET};
use conformal_core::locality::{dong_bound, locality_table, presentation_generators, LocalityValue};
use conformal_core::{ConformalError, QPresentation, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use algebra_file::{AlgebraFile, FiniteAlgebraFile};
use error::{CliError, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS};
use report::{write_json, Report, Status};

const DEFAULT_SEED: u64 = 0x5eed_c0f1;

/// Exact computations with conformal algebras.
///
/// Wherever a presentation is expected, give a JSON file, a built-in
/// name (`sl2`, `mat2`, `gl2`, `heis3`, `abelian:k`, meaning its loop
/// algebra), or `loop:NAME` / `affine:NAME`.
///
/// Exit codes: 0 pass, 1 check failure, 2 input error, 3 inconclusive,
/// 4 budget or pipeline error.
#[derive(Parser)]
#[command(name = "conformal", version)]
struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the report or algebra file here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Axiom {
    Assoc,
    Jacobi,
    #[value(name = "qs+")]
    QsPlus,
    #[value(name = "qs-")]
    QsMinus,
    Adconf,
    CoeffLie,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Construct {
    Loop,
    Affine,
    Commutator,
}

#[derive(Subcommand)]
enum Command {
    /// Structural validation of a presentation.
    Validate { file: String },
    /// Scan conformal identities on generator triples.
    Check {
        file: String,
        #[arg(long, value_enum, required = true)]
        axiom: Vec<Axiom>,
        #[arg(long, default_value_t = 4)]
        m_max: u32,
        #[arg(long, default_value_t = 4)]
        n_max: u32,
        /// Coefficient window for `adconf` and `coeff-lie`.
        #[arg(long, default_value_t = 3)]
        window: i64,
    },
    /// Build a loop, affine or commutator algebra and print it.
    Build {
        #[arg(long, value_enum)]
        construct: Construct,
        /// Built-in name or finite-algebra file (loop, affine), or a
        /// presentation (commutator).
        input: String,
    },
    /// Locality function `S(l)` for word lengths `1..=length`.
    Locality {
        file: String,
        #[arg(long, default_value_t = 4)]
        length: usize,
        /// Largest index sum evaluated.
        #[arg(long, default_value_t = 16)]
        n_budget: u32,
    },
    /// Embed a Lie conformal algebra into its associative envelope and verify.
    Embed {
        file: String,
        /// Threshold; when omitted, the least admissible r up to `--r-max`.
        #[arg(long, allow_hyphen_values = true)]
        r: Option<i64>,
        #[arg(long, default_value_t = 8)]
        r_max: i64,
        /// `default` keeps the file's weights; one number applies to every
        /// generator; a comma-separated list gives them in order.
        #[arg(long, default_value = "default")]
        weights: String,
        #[arg(long, default_value_t = 4)]
        window: usize,
        #[arg(long, default_value_t = 3)]
        explicit_n: u32,
        #[arg(long, default_value_t = 2)]
        assoc_max: u32,
        #[arg(long, default_value_t = 8)]
        max_dpow: u32,
        #[arg(long, default_value_t = 2000)]
        max_dimension: usize,
        #[arg(long, default_value_t = 3)]
        stabilization: u32,
        #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
        step_budget: usize,
    },
    /// Commutator algebras of seeded random associative presentations must
    /// satisfy the Lie identities.
    Random {
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        m_max: u32,
    },
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|source| CliError::Json {
        path: path.to_string(),
        source,
    })
}

fn finite_algebra(input: &str) -> Result<FiniteAlgebra<Rational>, CliError> {
    if Path::new(input).exists() {
        return parse_json::<FiniteAlgebraFile>(input, &read(input)?)?.to_algebra();
    }
    Ok(builtin(input)?)
}

fn presentation(input: &str) -> Result<QPresentation, CliError> {
    if Path::new(input).exists() {
        return parse_json::<AlgebraFile>(input, &read(input)?)?.to_presentation();
    }
    if let Some(name) = input.strip_prefix("affine:") {
        return Ok(affinize(&builtin(name)?, None)?);
    }
    let name = input.strip_prefix("loop:").unwrap_or(input);
    match builtin::<Rational>(name) {
        Ok(g) => Ok(loop_algebra(&g)?),
        Err(_) => Err(CliError::Input(format!(
            "`{input}` is neither a file nor a built-in algebra"
        ))),
    }
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Pass => EXIT_PASS,
        Status::Fail | Status::Error => EXIT_FAIL,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn record_check(report: &mut Report, key: &str, r: &CheckReport) {
    report.result(key, r);
    if !r.pass {
        report.mark(Status::Fail);
    }
}

fn cmd_validate(cli: &Cli, file: &str) -> Result<u8, CliError> {
    let p = presentation(file)?;
    let mut report = Report::new("validate", json!({"file": file}));
    let r = report.timed("validate", || validate_presentation(&p));
    record_check(&mut report, "presentation", &r);
    report.emit(cli.output.as_deref())?;
    Ok(exit_code(report.status()))
}

fn cmd_check(cli: &Cli, file: &str, axioms: &[Axiom], m_max: u32, n_max: u32, window: i64) -> Result<u8, CliError> {
    let p = presentation(file)?;
    let names: Vec<String> = axioms
        .iter()
        .map(|a| {
            a.to_possible_value()
                .expect("no skipped variants")
                .get_name()
                .to_string()
        })
        .collect();
    let mut report = Report::new(
        "check",
        json!({"file": file, "axioms": names, "m_max": m_max, "n_max": n_max, "window": window}),
    );
    let valid = validate_presentation(&p);
    record_check(&mut report, "presentation", &valid);
    if valid.pass {
        for (axiom, name) in axioms.iter().zip(&names) {
            let r = report.timed(name, || -> Result<CheckReport, CliError> {
                Ok(match axiom {
                    Axiom::Assoc => check_conformal_associativity(&p, m_max, n_max),
                    Axiom::Jacobi => check_conformal_jacobi(&p, m_max, n_max),
                    Axiom::QsPlus => check_quasi_symmetry(&p, true, n_max),
                    Axiom::QsMinus => check_quasi_symmetry(&p, false, n_max),
                    Axiom::Adconf => check_adconf(&EnvelopeContext::from_generators(p.clone())?, m_max, n_max, window)?,
                    Axiom::CoeffLie => check_coefficient_lie(&p, (-window, window)),
                })
            })?;
            record_check(&mut report, name, &r);
        }
    }
    report.emit(cli.output.as_deref())?;
    Ok(exit_code(report.status()))
}

fn cmd_build(cli: &Cli, construct: Construct, input: &str) -> Result<u8, CliError> {
    let p = match construct {
        Construct::Loop => loop_algebra(&finite_algebra(input)?)?,
        Construct::Affine => affinize(&finite_algebra(input)?, None)?,
        Construct::Commutator => commutator_algebra(&presentation(input)?)?,
    };
    let valid = validate_presentation(&p);
    if !valid.pass {
        return Err(CliError::Input(format!(
            "constructed presentation is invalid: {:?}",
            valid.first_witness()
        )));
    }
    write_json(&AlgebraFile::from_presentation(&p), cli.output.as_deref())?;
    Ok(EXIT_PASS)
}

fn cmd_locality(cli: &Cli, file: &str, length: usize, n_budget: u32) -> Result<u8, CliError> {
    let p = presentation(file)?;
    let mut report = Report::new(
        "locality",
        json!({"file": file, "length": length, "n_budget": n_budget}),
    );
    let gens = presentation_generators(&p);
    let table = report.timed("locality", || locality_table(&p, &gens, length, n_budget))?;
    let n = p.max_locality();
    let rows: Vec<_> = table
        .iter()
        .map(|(l, v)| {
            if matches!(v, LocalityValue::Inconclusive { .. }) {
                report.mark(Status::Inconclusive);
            }
            let bound = dong_bound(n, *l);
            json!({
                "length": l,
                "value": v,
                "dong_bound": bound,
                "within_dong_bound": v.exact().map(|s| (s as i64) <= bound),
            })
        })
        .collect();
    report.result("max_locality", n);
    report.result("table", rows);
    report.emit(cli.output.as_deref())?;
    Ok(exit_code(report.status()))
}

fn parse_weights(arg: &str, rank: usize) -> Result<Option<Vec<u32>>, CliError> {
    if arg == "default" {
        return Ok(None);
    }
    let parts = arg
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Input(format!("bad --weights `{arg}`")))?;
    match parts.len() {
        1 => Ok(Some(vec![parts[0]; rank])),
        n if n == rank => Ok(Some(parts)),
        n => Err(CliError::Input(format!(
            "--weights has {n} entries for {rank} generators"
        ))),
    }
}

struct EmbedArgs<'a> {
    file: &'a str,
    r: Option<i64>,
    r_max: i64,
    weights: &'a str,
    opts: VerifyOptions,
    bounds: EmbedBounds,
}

fn cmd_embed(cli: &Cli, a: EmbedArgs) -> Result<u8, CliError> {
    let mut p = presentation(a.file)?;
    let weights = parse_weights(a.weights, p.rank())?;
    if let Some(w) = &weights {
        p.set_weights(w);
    }
    let mut report = Report::new(
        "embed",
        json!({
            "file": a.file,
            "r": a.r,
            "r_max": a.r_max,
            "weights": a.weights,
            "options": a.opts,
            "bounds": a.bounds,
        }),
    );
    let r = match a.r {
        Some(r) => r,
        None => match report.timed("admissible", || admissible_threshold(&p, a.r_max, &a.bounds))? {
            Some(r) => r,
            None => {
                // rerun at r_max so the report carries the violating monomial
                let err = build_enveloping(p.clone(), None, a.r_max, a.bounds).err();
                report.result(
                    "hypothesis",
                    json!({"admissible": false, "r_max": a.r_max, "witness": err.map(|e| e.to_string())}),
                );
                report.mark(Status::Fail);
                report.emit(cli.output.as_deref())?;
                return Ok(EXIT_FAIL);
            }
        },
    };
    report.result("r", r);
    let outcome = report
        .timed("build", || build_enveloping(p, None, r, a.bounds))
        .and_then(|alg| report.timed("verify", || verify_embedding(&alg, a.opts)));
    let code = match outcome {
        Ok(rep) => {
            if !rep.pass {
                report.mark(Status::Fail);
            }
            report.result("embedding", &rep);
            exit_code(report.status())
        }
        Err(e) => {
            let code = CliError::from(e.clone()).exit_code();
            if let ConformalError::HypothesisViolated { weight, witness } = &e {
                report.result(
                    "hypothesis",
                    json!({"admissible": false, "weight": weight, "witness": witness}),
                );
            }
            report.result("error", e.to_string());
            report.mark(if code == EXIT_FAIL { Status::Fail } else { Status::Error });
            code
        }
    };
    report.emit(cli.output.as_deref())?;
    Ok(code)
}

fn cmd_random(cli: &Cli, count: usize, m_max: u32) -> Result<u8, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut report = Report::new("random", json!({"seed": cli.seed, "count": count, "m_max": m_max}));
    let (mut accepted, mut rejected) = (0, 0);
    let mut failures = Vec::new();
    report.timed("scan", || {
        while accepted < count {
            let p = if rand::Rng::gen_bool(&mut rng, 0.5) {
                random::two_step(&mut rng)
            } else {
                random::free_table(&mut rng)
            };
            if !check_conformal_associativity(&p, m_max, m_max).pass {
                rejected += 1;
                continue;
            }
            accepted += 1;
            let lie = commutator_algebra(&p).expect("associative input");
            for r in [
                check_conformal_jacobi(&lie, m_max, m_max),
                check_quasi_symmetry(&lie, false, m_max),
            ] {
                if !r.pass {
                    failures.push(json!({"algebra": AlgebraFile::from_presentation(&p), "check": r}));
                }
            }
        }
    });
    if !failures.is_empty() {
        report.mark(Status::Fail);
    }
    report.result("accepted", accepted);
    report.result("rejected_non_associative", rejected);
    report.result("failures", failures);
    report.emit(cli.output.as_deref())?;
    Ok(exit_code(report.status()))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Validate { file } => cmd_validate(cli, file),
        Command::Check {
            file,
            axiom,
            m_max,
            n_max,
            window,
        } => cmd_check(cli, file, axiom, *m_max, *n_max, *window),
        Command::Build { construct, input } => cmd_build(cli, *construct, input),
        Command::Locality { file, length, n_budget } => cmd_locality(cli, file, *length, *n_budget),
        Command::Embed {
            file,
            r,
            r_max,
            weights,
            window,
            explicit_n,
            assoc_max,
            max_dpow,
            max_dimension,
            stabilization,
            step_budget,
        } => cmd_embed(
            cli,
            EmbedArgs {
                file,
                r: *r,
                r_max: *r_max,
                weights,
                opts: VerifyOptions {
                    window: *window,
                    explicit_n: *explicit_n,
                    assoc_max: *assoc_max,
                },
                bounds: EmbedBounds {
                    max_dpow: *max_dpow,
                    max_dimension: *max_dimension,
                    stabilization: *stabilization,
                    step_budget: *step_budget,
                },
            },
        ),
        Command::Random { count, m_max } => cmd_random(cli, *count, *m_max),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
