//! Batch command-line front end. Every command prints one JSON document with
//! sorted keys on success (exit 0), a JSON error object on standard error for
//! bad input (exit 2), or for internal failures (exit 1).

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::baire::{
    baire_norm_oracle_report, baire_norm_report, check_block_window, check_branch_isometry,
    check_incomparable_additivity, check_root_decomposition, BaireVector, CheckReport, ExponentP,
    ORACLE_NODE_LIMIT,
};
use crate::basis::BasisKind;
use crate::checkers::{
    abs_obstruction_falsify, bs_obstruction_check, convex_block_min, delta_family, BlockMethod,
    SamplerSpec, VectorFamily,
};
use crate::io::{BushDoc, FamilyDoc, NormDoc, VectorDoc};
use crate::lazy::{probe_wf, LazyTree};
use crate::rational::{format_rational, parse_rational};
use crate::step::{bush_check, rademacher_bush};
use crate::tree::{derived_tree, generate_tree, order_index, FiniteTree, TreeDoc, TreeFamily};
use crate::Exec;

/// Overrides the oracle node limit.
pub const ORACLE_ENV: &str = "BAIRELAB_MAX_ORACLE_NODES";

#[derive(Debug, Parser)]
#[command(
    name = "bairelab",
    version,
    about = "Exact l_p-Baire sum norms and Banach-Saks checkers"
)]
struct Cli {
    /// Split work across threads; output is identical.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Order index of a finite tree.
    Rank {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Derived tree.
    Derive {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Norm of a vector, with a witness family of segments.
    Norm(NormArgs),
    /// Generate a tree, vector, family or bush document.
    Gen(GenArgs),
    /// Banach-Saks obstruction check.
    CheckBs {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_parser = rational_arg)]
        epsilon: BigRational,
    },
    /// Sampled search for alternating sums below epsilon.
    CheckAbs {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_parser = rational_arg)]
        epsilon: BigRational,
        #[arg(long, default_value_t = 3)]
        max_level: u32,
        /// Comma-separated extra coefficient values.
        #[arg(long, value_parser = rational_arg, value_delimiter = ',')]
        grid: Option<Vec<BigRational>>,
    },
    /// Validate a finite bush.
    CheckBush {
        #[arg(long)]
        bush: PathBuf,
        #[arg(long, value_parser = rational_arg)]
        delta: BigRational,
        #[arg(long, value_parser = rational_arg)]
        bound: BigRational,
    },
    /// Check an exact norm identity.
    CheckIdentity(IdentityArgs),
    /// Probe a tree for well-foundedness up to a depth.
    ProbeWf(ProbeArgs),
    /// Minimal convex combination over a window of a family.
    BlockMin {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        len: usize,
    },
}

#[derive(Debug, Args)]
struct NormArgs {
    /// Tree file; optional when the vector file embeds its tree.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    vector: PathBuf,
    #[arg(long, value_parser = basis_arg)]
    basis: BasisKind,
    #[arg(long, value_parser = exponent_arg)]
    p: ExponentP,
    /// Use the brute-force oracle.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenFamily {
    Spine,
    FullKary,
    Random,
    RandomVector,
    RademacherBush,
    DeltaFamily,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: GenFamily,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bush depth.
    #[arg(long = "K")]
    bush_depth: Option<u32>,
    #[arg(long, value_parser = basis_arg)]
    basis: Option<BasisKind>,
    #[arg(long, value_parser = exponent_arg)]
    p: Option<ExponentP>,
    /// Also write the document to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Identity {
    Additivity,
    BranchIsometry,
    RootDecomposition,
    BlockWindow,
}

#[derive(Debug, Args)]
struct IdentityArgs {
    #[arg(long, value_enum)]
    identity: Identity,
    /// Baire family (additivity, block-window).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Comma-separated coefficients; defaults to all ones.
    #[arg(long, value_parser = rational_arg, value_delimiter = ',')]
    coeffs: Option<Vec<BigRational>>,
    /// Vector (branch-isometry, root-decomposition).
    #[arg(long)]
    vector: Option<PathBuf>,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, value_parser = basis_arg)]
    basis: Option<BasisKind>,
    #[arg(long, value_parser = exponent_arg)]
    p: Option<ExponentP>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LazyKind {
    ZeroBranch,
    Kary,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long, conflicts_with = "lazy")]
    tree: Option<PathBuf>,
    #[arg(long, value_enum)]
    lazy: Option<LazyKind>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    depth: usize,
    /// Depth budget; defaults to the probe depth.
    #[arg(long)]
    budget: Option<usize>,
}

fn rational_arg(s: &str) -> Result<BigRational, String> {
    parse_rational(s).ok_or_else(|| format!("{s:?} is not a rational \"p/q\""))
}

fn basis_arg(s: &str) -> Result<BasisKind, String> {
    s.parse()
}

fn exponent_arg(s: &str) -> Result<ExponentP, String> {
    s.parse()
        .map_err(|e: crate::baire::BaireError| e.to_string())
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Parse {
        path: String,
        location: Option<String>,
        message: String,
    },
    Validation(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            _ => 2,
        }
    }

    fn to_json(&self) -> Value {
        let error = match self {
            CliError::Parse {
                path,
                location,
                message,
            } => json!({"kind": "parse", "path": path, "location": location, "message": message}),
            CliError::Validation(message) => json!({"kind": "validation", "message": message}),
            CliError::Internal(message) => json!({"kind": "internal", "message": message}),
        };
        json!({ "error": error })
    }
}

fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

/// Runs one command line (including the program name) and captures its output.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Outcome {
                code: 0,
                stdout: e.to_string(),
                stderr: String::new(),
            };
        }
        Err(e) => return failure(CliError::Validation(e.to_string().trim_end().to_string())),
    };
    let exec = if cli.parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    };
    let result = panic::catch_unwind(AssertUnwindSafe(|| execute(cli.command, exec)));
    match result {
        Ok(Ok(value)) => Outcome {
            code: 0,
            stdout: render(&value),
            stderr: String::new(),
        },
        Ok(Err(e)) => failure(e),
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            failure(CliError::Internal(message))
        }
    }
}

fn failure(e: CliError) -> Outcome {
    Outcome {
        code: e.code(),
        stdout: String::new(),
        stderr: render(&e.to_json()),
    }
}

fn render(value: &Value) -> String {
    let mut text = serde_json::to_string(value).expect("values serialize");
    text.push('\n');
    text
}

fn to_value<T: Serialize>(doc: &T) -> Result<Value, CliError> {
    serde_json::to_value(doc).map_err(|e| CliError::Internal(e.to_string()))
}

fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: shown.clone(),
        location: None,
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: shown,
        location: Some(format!("line {} column {}", e.line(), e.column())),
        message: e.to_string(),
    })
}

fn read_tree(path: &Path) -> Result<FiniteTree, CliError> {
    FiniteTree::try_from(read_doc::<TreeDoc>(path)?).map_err(invalid)
}

fn read_vector(vector: &Path, tree: Option<&Path>) -> Result<BaireVector, CliError> {
    let tree = tree.map(read_tree).transpose()?.map(Arc::new);
    read_doc::<VectorDoc>(vector)?
        .into_vector_on(tree)
        .map_err(invalid)
}

fn read_family(path: &Path) -> Result<VectorFamily, CliError> {
    read_doc::<FamilyDoc>(path)?.into_family().map_err(invalid)
}

fn require<T>(value: Option<T>, flag: &str, command: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("{command} requires --{flag}")))
}

fn oracle_limit() -> Result<usize, CliError> {
    match std::env::var(ORACLE_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "{ORACLE_ENV} must be a natural number, got {text:?}"
            ))
        }),
        Err(_) => Ok(ORACLE_NODE_LIMIT),
    }
}

fn execute(command: Command, exec: Exec) -> Result<Value, CliError> {
    match command {
        Command::Rank { tree } => {
            let tree = read_tree(&tree)?;
            Ok(json!({ "order_index": order_index(&tree) }))
        }
        Command::Derive { tree } => to_value(&TreeDoc::from(&derived_tree(&read_tree(&tree)?))),
        Command::Norm(args) => {
            let limit = if args.oracle {
                Some(oracle_limit()?)
            } else {
                None
            };
            let x = read_vector(&args.vector, args.tree.as_deref())?;
            let report = match limit {
                Some(limit) => {
                    baire_norm_oracle_report(&x, args.basis, &args.p, limit).map_err(invalid)?
                }
                None => baire_norm_report(&x, args.basis, &args.p, exec),
            };
            to_value(&NormDoc::from(&report))
        }
        Command::Gen(args) => generate(args),
        Command::CheckBs { family, epsilon } => {
            let family = read_family(&family)?;
            to_value(&bs_obstruction_check(&family, &epsilon, exec).map_err(invalid)?)
        }
        Command::CheckAbs {
            family,
            epsilon,
            max_level,
            grid,
        } => {
            let sampler = SamplerSpec {
                max_level,
                grid: grid.unwrap_or_default(),
            };
            let family = read_family(&family)?;
            to_value(&abs_obstruction_falsify(&family, &epsilon, &sampler, exec).map_err(invalid)?)
        }
        Command::CheckBush { bush, delta, bound } => {
            let bush = read_doc::<BushDoc>(&bush)?.into_bush().map_err(invalid)?;
            to_value(&bush_check(&bush, &delta, &bound))
        }
        Command::CheckIdentity(args) => identity(args),
        Command::ProbeWf(args) => probe(args),
        Command::BlockMin { family, start, len } => {
            let family = read_family(&family)?;
            let result = convex_block_min(&family, start, len).map_err(invalid)?;
            let method = match result.method {
                BlockMethod::ExactLp => "exact_lp",
                BlockMethod::Subgradient => "subgradient",
            };
            let coeffs: Vec<String> = result.coeffs.iter().map(format_rational).collect();
            Ok(json!({
                "coeffs": coeffs,
                "functionals": result.functionals,
                "method": method,
                "value": to_value(&result.value)?,
            }))
        }
    }
}

fn generate(args: GenArgs) -> Result<Value, CliError> {
    const CMD: &str = "gen";
    let doc = match args.family {
        GenFamily::Spine => {
            let d = require(args.d, "d", CMD)?;
            to_value(&TreeDoc::from(
                &generate_tree(TreeFamily::Spine { d }).map_err(invalid)?,
            ))?
        }
        GenFamily::FullKary => {
            let k = require(args.k, "k", CMD)?;
            let d = require(args.d, "d", CMD)?;
            to_value(&TreeDoc::from(
                &generate_tree(TreeFamily::FullKary { k, d }).map_err(invalid)?,
            ))?
        }
        GenFamily::Random => {
            let n = require(args.n, "n", CMD)?;
            let tree = generate_tree(TreeFamily::Random { n, seed: args.seed }).map_err(invalid)?;
            to_value(&TreeDoc::from(&tree))?
        }
        GenFamily::RandomVector => {
            let n = require(args.n, "n", CMD)?;
            to_value(&VectorDoc::from_vector(&random_vector(n, args.seed)?))?
        }
        GenFamily::RademacherBush => {
            let k = require(args.bush_depth, "K", CMD)?;
            let bush = rademacher_bush(k).map_err(invalid)?;
            to_value(
                &BushDoc::from_bush(&bush)
                    .ok_or_else(|| invalid("bush too fine for dense output"))?,
            )?
        }
        GenFamily::DeltaFamily => {
            let n = require(args.n, "n", CMD)?;
            let n = u32::try_from(n).map_err(invalid)?;
            let kind = require(args.basis, "basis", CMD)?;
            let p = require(args.p, "p", CMD)?;
            let family = delta_family(n, kind, p).map_err(invalid)?;
            to_value(&FamilyDoc::from_family(&family).expect("baire families serialize"))?
        }
    };
    if let Some(out) = &args.out {
        fs::write(out, render(&doc))
            .map_err(|e| CliError::Validation(format!("{}: {e}", out.display())))?;
    }
    Ok(doc)
}

/// Random tree of `n` nodes with nonzero coefficients `a/b`, `|a| ≤ 4`, `b ≤ 4`.
fn random_vector(n: usize, seed: u64) -> Result<BaireVector, CliError> {
    let tree = Arc::new(generate_tree(TreeFamily::Random { n, seed }).map_err(invalid)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let entries: Vec<_> = tree
        .canonical_nodes()
        .into_iter()
        .map(|node| {
            let mut a: i64 = rng.gen_range(-4..=3);
            if a >= 0 {
                a += 1;
            }
            let b: i64 = rng.gen_range(1..=4);
            (node, BigRational::new(BigInt::from(a), BigInt::from(b)))
        })
        .collect();
    BaireVector::new(tree, entries).map_err(invalid)
}

fn identity(args: IdentityArgs) -> Result<Value, CliError> {
    const CMD: &str = "check-identity";
    let kind = require(args.basis, "basis", CMD);
    let p = require(args.p, "p", CMD);
    let (name, report): (&str, CheckReport) = match args.identity {
        Identity::Additivity | Identity::BlockWindow => {
            let family = read_family(&require(args.family, "family", CMD)?)?;
            let VectorFamily::Baire { vectors, kind, p } = family else {
                return Err(invalid("identities need a baire family"));
            };
            let coeffs = args
                .coeffs
                .unwrap_or_else(|| vec![BigRational::from_integer(1.into()); vectors.len()]);
            match args.identity {
                Identity::Additivity => (
                    "additivity",
                    check_incomparable_additivity(&vectors, &coeffs, kind, &p).map_err(invalid)?,
                ),
                _ => (
                    "block-window",
                    check_block_window(&vectors, &coeffs, kind, &p).map_err(invalid)?,
                ),
            }
        }
        Identity::BranchIsometry | Identity::RootDecomposition => {
            let (kind, p) = (kind?, p?);
            let x = read_vector(&require(args.vector, "vector", CMD)?, args.tree.as_deref())?;
            match args.identity {
                Identity::BranchIsometry => (
                    "branch-isometry",
                    check_branch_isometry(&x, kind, &p).map_err(invalid)?,
                ),
                _ => (
                    "root-decomposition",
                    check_root_decomposition(&x, kind, &p).map_err(invalid)?,
                ),
            }
        }
    };
    Ok(json!({
        "detail": report.detail,
        "identity": name,
        "lhs": to_value(&report.lhs)?,
        "passed": report.passed,
        "rhs": to_value(&report.rhs)?,
    }))
}

fn probe(args: ProbeArgs) -> Result<Value, CliError> {
    let budget = args.budget.unwrap_or(args.depth);
    let tree = match (&args.tree, args.lazy) {
        (Some(path), _) => LazyTree::from_finite(read_tree(path)?, budget),
        (None, Some(LazyKind::ZeroBranch)) => LazyTree::zero_branch(budget),
        (None, Some(LazyKind::Kary)) => LazyTree::kary(
            require(args.k, "k", "probe-wf --lazy kary")?,
            args.max_len,
            budget,
        ),
        (None, None) => return Err(invalid("probe-wf requires --tree or --lazy")),
    };
    to_value(&probe_wf(&tree, args.depth).map_err(invalid)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> Value {
        let out = run(std::iter::once("bairelab").chain(args.iter().copied()));
        assert_eq!(out.code, 0, "stderr: {}", out.stderr);
        serde_json::from_str(&out.stdout).unwrap()
    }

    #[test]
    fn gen_and_rank() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("t.json");
        let doc = run_ok(&[
            "gen",
            "--family",
            "full-kary",
            "--k",
            "2",
            "--d",
            "2",
            "--out",
            t.to_str().unwrap(),
        ]);
        assert_eq!(doc["nodes"].as_array().unwrap().len(), 7);
        assert_eq!(
            run_ok(&["rank", "--tree", t.to_str().unwrap()]),
            json!({"order_index": 3})
        );
        let spine = run_ok(&["gen", "--family", "spine", "--d", "3"]);
        assert_eq!(spine["nodes"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn errors_have_codes() {
        let out = run(["bairelab", "rank", "--tree", "/nonexistent.json"]);
        assert_eq!(out.code, 2);
        let err: Value = serde_json::from_str(&out.stderr).unwrap();
        assert_eq!(err["error"]["kind"], "parse");
        let out = run(["bairelab", "rank", "--tree", "x", "--bogus"]);
        assert_eq!(out.code, 2);
        let out = run([
            "bairelab",
            "check-bush",
            "--bush",
            "b",
            "--delta",
            "0.5",
            "--bound",
            "1",
        ]);
        assert_eq!(out.code, 2);
        assert!(out.stdout.is_empty());
        let out = run(["bairelab", "gen", "--family", "spine"]);
        assert_eq!(out.code, 2);
        let err: Value = serde_json::from_str(&out.stderr).unwrap();
        assert_eq!(err["error"]["kind"], "validation");
    }

    #[test]
    fn malformed_json_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("t.json");
        fs::write(&t, "{\"nodes\": [[], [0]\n").unwrap();
        let out = run(["bairelab", "rank", "--tree", t.to_str().unwrap()]);
        assert_eq!(out.code, 2);
        let err: Value = serde_json::from_str(&out.stderr).unwrap();
        assert_eq!(err["error"]["location"], "line 2 column 0");
    }

    #[test]
    fn help_exits_zero() {
        let out = run(["bairelab", "--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("check-bs"));
    }
}
