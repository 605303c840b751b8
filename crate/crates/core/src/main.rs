use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use finsler_quotient::harness::{self, CheckName, HarnessError, PointSpec, RunConfig};
use finsler_quotient::liegroup::{MatrixLieGroup, CATALOG_GROUPS};
use finsler_quotient::quotient::catalog_subgroup_names;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "finsler-quotient",
    version,
    about = "Invariant Finsler metrics on Lie groups and their quotients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a configuration and emit a report.
    Check(CheckArgs),
    /// Evaluate the induced metric at one point.
    Eval(EvalArgs),
    /// List groups, subgroups, norms, and checks.
    Catalog,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Overrides the config's check list; repeatable.
    #[arg(long = "check", value_parser = parse_check)]
    checks: Vec<CheckName>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    /// Inline point, e.g. '{"base_coords":[0,0,0],"mu":[2,3]}'.
    #[arg(
        long,
        conflicts_with = "point_file",
        required_unless_present = "point_file"
    )]
    point: Option<String>,
    #[arg(long)]
    point_file: Option<PathBuf>,
}

fn parse_check(s: &str) -> Result<CheckName, String> {
    CheckName::parse(s).ok_or_else(|| {
        let names: Vec<_> = CheckName::ALL.iter().map(|c| c.as_str()).collect();
        format!("unknown check `{s}`, expected one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => check(args),
        Command::Eval(args) => eval(args),
        Command::Catalog => {
            catalog();
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn check(args: CheckArgs) -> Result<ExitCode, HarnessError> {
    let mut cfg = harness::load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = args.samples {
        cfg.samples = samples;
    }
    if !args.checks.is_empty() {
        cfg.checks = args.checks;
    }
    let report = match args.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| HarnessError::invalid("workers", e.to_string()))?
            .install(|| harness::run(&cfg))?,
        None => harness::run(&cfg)?,
    };
    harness::emit_report(&report, args.json_out.as_deref())?;
    let summary = |line: String| {
        if args.json_out.is_some() {
            println!("{line}")
        } else {
            eprintln!("{line}")
        }
    };
    for rec in &report.checks {
        let verdict = if rec.pass { "PASS" } else { "FAIL" };
        summary(format!(
            "{verdict} {} max_deviation={:e} tolerance={:e}",
            rec.name, rec.max_deviation, rec.tolerance
        ));
    }
    Ok(if report.overall {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

fn eval(args: EvalArgs) -> Result<ExitCode, HarnessError> {
    let cfg: RunConfig = harness::load_config(&args.config)?;
    let (origin, text) = match (&args.point, &args.point_file) {
        (Some(p), _) => ("--point".to_string(), p.clone()),
        (None, Some(path)) => (
            path.display().to_string(),
            std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.display().to_string(),
                source: e,
            })?,
        ),
        (None, None) => unreachable!("clap requires a point"),
    };
    let point: PointSpec = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        origin,
        message: e.to_string(),
    })?;
    let value = harness::eval_point(&cfg, &point)?;
    println!("{}", harness::format_eval(value));
    Ok(ExitCode::SUCCESS)
}

fn catalog() {
    println!("groups:");
    for id in CATALOG_GROUPS {
        let group = MatrixLieGroup::from_catalog(id, Some(3)).expect("catalog ids build");
        let shown = if *id == "rn" {
            "rn (group_params.n)".to_string()
        } else {
            id.to_string()
        };
        let subgroups = catalog_subgroup_names(group.kind());
        println!(
            "  {shown}: dim {}, subgroups: {}",
            if *id == "rn" {
                "n".to_string()
            } else {
                group.dim().to_string()
            },
            subgroups.join(", ")
        );
    }
    println!("norms: euclidean {{a}}, randers {{a, b}}, quartic");
    println!("metric sides: left, right, bi");
    let names: Vec<_> = CheckName::ALL.iter().map(|c| c.as_str()).collect();
    println!("checks: {}", names.join(", "));
}
