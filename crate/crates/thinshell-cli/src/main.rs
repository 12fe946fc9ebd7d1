use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use thinshell_cli::config::{
    self, compile, parse_alpha_grid, parse_field_shorthand, parse_points_shorthand,
    parse_surface_shorthand, parse_tolerance_shorthand, CompiledConfig, ConfigError, RunConfig,
};
use thinshell_cli::report::{
    convergence_rows_to_csv, convergence_rows_to_json, operator_rows_to_csv, operator_rows_to_json,
};
use thinshell_cli::runner;

/// Exit codes: 0 all checks pass, 1 check failures, 2 configuration or
/// parse errors (operational failures count as 2 as well).
const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILURES: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "thinshell",
    version,
    about = "Verify thin-shell Laplacian identities on hypersurfaces and evaluate the boundary-condition operator family"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite and write a pass/fail report.
    Verify(RunArgs),
    /// Evaluate the interpolating-family operator (and friends) on a
    /// grid of alpha values.
    Operator(OperatorArgs),
    /// Convergence sweeps: metric expansion remainder, radial shape
    /// derivative, oracle stencil orders.
    Convergence(RunArgs),
    /// List the built-in surface catalog.
    Catalog {
        /// Describe one catalog entry in detail.
        #[arg(long)]
        describe: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; CLI flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Surface shorthand, e.g. sphere:R=1, ellipsoid:a=1,b=1.3,c=2,
    /// torus:R=2,r=0.7, graph:f=sin(u1)*cos(u2), custom:seed=7.
    #[arg(long)]
    surface: Option<String>,
    /// Boundary profile (repeatable): slip | hodge | alpha:<value>.
    #[arg(long = "profile")]
    profiles: Vec<String>,
    /// Shorthand for --profile alpha:<value> (repeatable).
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    /// Field shorthand (repeatable): "expr1;expr2" or
    /// random:count=5,seed=7.
    #[arg(long = "field")]
    fields: Vec<String>,
    /// Sample points: "u1,u2;u1,u2;..." or sobol:count=10[,seed=3].
    #[arg(long)]
    points: Option<String>,
    /// Master seed for random fields and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Domain margin (fraction per side) kept away from chart edges.
    #[arg(long)]
    margin: Option<f64>,
    /// Tolerance override <check>=<value> (repeatable); the spelling
    /// --tol.<check>=<value> works too.
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    /// Restrict the verify run to these check ids (repeatable).
    #[arg(long = "check")]
    checks: Vec<String>,
    /// Output format: json | csv.
    #[arg(long)]
    format: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the compiled config document and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct OperatorArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Alpha grid: start:end:step or a comma list. Default 0:1:0.1.
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Operators to evaluate (comma list): alpha, deformation, hodge,
    /// bochner. Default alpha.
    #[arg(long)]
    operators: Option<String>,
}

fn main() -> ExitCode {
    // support the --tol.<check>=<value> spelling by rewriting it into
    // --tol <check>=<value> before clap sees it
    let argv: Vec<String> = std::env::args()
        .flat_map(|arg| match arg.strip_prefix("--tol.") {
            Some(rest) if rest.contains('=') => {
                vec!["--tol".to_string(), rest.to_string()]
            }
            _ => vec![arg],
        })
        .collect();
    let cli = Cli::parse_from(argv);
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_CONFIG_ERROR)
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Verify(args) => {
            let (cc, format, out, dump) = prepare(&args)?;
            if dump {
                println!("{}", serde_json::to_string_pretty(&cc.document).unwrap());
                return Ok(ExitCode::from(EXIT_OK));
            }
            let started = Instant::now();
            let report = runner::run_verify(&cc);
            let body = match format.as_str() {
                "csv" => report.to_csv(cc.chart.dim()),
                _ => report.to_json(),
            };
            emit(&body, &out)?;
            eprintln!(
                "verify: {} checks, {} passed, {} failed; seed {}; config {}; wall time {:.0} ms",
                report.meta.checks_total,
                report.meta.checks_passed,
                report.meta.checks_failed,
                cc.seed,
                &cc.config_hash[..12],
                started.elapsed().as_secs_f64() * 1e3,
            );
            Ok(ExitCode::from(if report.all_pass() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILURES
            }))
        }
        Command::Operator(args) => {
            let mut run_args = args.run;
            let extra_grid = args
                .alpha_grid
                .as_deref()
                .map(parse_alpha_grid)
                .transpose()?;
            let extra_ops = args.operators.map(|s| {
                s.split(',')
                    .map(|o| o.trim().to_string())
                    .collect::<Vec<_>>()
            });
            let (mut document, format, out, dump) = build_document(&mut run_args)?;
            if let Some(grid) = extra_grid {
                document.alpha_grid = Some(grid);
            }
            if let Some(ops) = extra_ops {
                document.operators = Some(ops);
            }
            let cc = compile(&document)?;
            if dump {
                println!("{}", serde_json::to_string_pretty(&cc.document).unwrap());
                return Ok(ExitCode::from(EXIT_OK));
            }
            let rows = runner::run_operator(&cc)
                .map_err(|e| ConfigError::new("/operators", e.to_string()))?;
            let body = match format.as_str() {
                "csv" => operator_rows_to_csv(&cc.surface_label, &rows, cc.chart.dim()),
                _ => operator_rows_to_json(&cc.surface_label, &rows),
            };
            emit(&body, &out)?;
            eprintln!("operator: {} rows; seed {}", rows.len(), cc.seed);
            Ok(ExitCode::from(EXIT_OK))
        }
        Command::Convergence(args) => {
            let (cc, format, out, dump) = prepare(&args)?;
            if dump {
                println!("{}", serde_json::to_string_pretty(&cc.document).unwrap());
                return Ok(ExitCode::from(EXIT_OK));
            }
            let rows = runner::run_convergence(&cc)
                .map_err(|e| ConfigError::new("/samples", e.to_string()))?;
            let body = match format.as_str() {
                "csv" => convergence_rows_to_csv(&cc.surface_label, &rows, cc.chart.dim()),
                _ => convergence_rows_to_json(&cc.surface_label, &rows),
            };
            emit(&body, &out)?;
            eprintln!("convergence: {} rows; seed {}", rows.len(), cc.seed);
            Ok(ExitCode::from(EXIT_OK))
        }
        Command::Catalog { describe } => catalog(describe.as_deref()),
    }
}

fn build_document(
    args: &mut RunArgs,
) -> Result<(RunConfig, String, Option<PathBuf>, bool), CliError> {
    let mut document: RunConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError::new("", format!("invalid config JSON: {e}")))?
        }
        None => RunConfig::default(),
    };
    if let Some(surface) = &args.surface {
        document.surface = parse_surface_shorthand(surface)?;
    }
    if !args.profiles.is_empty() || !args.alphas.is_empty() {
        let mut profiles = args.profiles.clone();
        profiles.extend(args.alphas.iter().map(|a| format!("alpha:{a}")));
        document.profiles = profiles;
    }
    if !args.fields.is_empty() {
        document.fields = args
            .fields
            .iter()
            .map(|f| parse_field_shorthand(f))
            .collect::<Result<Vec<_>, ConfigError>>()?;
    }
    if let Some(points) = &args.points {
        document.samples = parse_points_shorthand(points)?;
    }
    if let Some(seed) = args.seed {
        document.seed = seed;
    }
    if let Some(margin) = args.margin {
        document.margin = margin;
    }
    for tol in &args.tolerances {
        let (key, value) = parse_tolerance_shorthand(tol)?;
        document.tolerances.insert(key, value);
    }
    if !args.checks.is_empty() {
        document.checks = Some(args.checks.clone());
    }
    let format = args
        .format
        .clone()
        .or_else(|| document.output.as_ref().map(|o| o.format.clone()))
        .unwrap_or_else(|| "json".to_string());
    if format != "json" && format != "csv" {
        return Err(ConfigError::new("/output/format", "format must be json or csv").into());
    }
    let out = args.out.clone().or_else(|| {
        document
            .output
            .as_ref()
            .and_then(|o| o.path.as_ref().map(PathBuf::from))
    });
    Ok((document, format, out, args.dump_config))
}

fn prepare(args: &RunArgs) -> Result<(CompiledConfig, String, Option<PathBuf>, bool), CliError> {
    let mut args_clone = RunArgs {
        config: args.config.clone(),
        surface: args.surface.clone(),
        profiles: args.profiles.clone(),
        alphas: args.alphas.clone(),
        fields: args.fields.clone(),
        points: args.points.clone(),
        seed: args.seed,
        margin: args.margin,
        tolerances: args.tolerances.clone(),
        checks: args.checks.clone(),
        format: args.format.clone(),
        out: args.out.clone(),
        dump_config: args.dump_config,
    };
    let (document, format, out, dump) = build_document(&mut args_clone)?;
    let cc = compile(&document)?;
    Ok((cc, format, out, dump))
}

fn emit(body: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn catalog(describe: Option<&str>) -> Result<ExitCode, CliError> {
    let entries = thinshell::geometry::catalog();
    match describe {
        None => {
            println!("{:<10} {:<44} domain", "name", "parameters");
            for e in &entries {
                println!("{:<10} {:<44} {}", e.name, e.parameters, e.domain);
            }
            Ok(ExitCode::from(EXIT_OK))
        }
        Some(name) => match entries.iter().find(|e| e.name == name) {
            Some(e) => {
                println!("name:       {}", e.name);
                println!("parameters: {}", e.parameters);
                println!("chart:      {}", e.chart);
                println!("domain:     {}", e.domain);
                Ok(ExitCode::from(EXIT_OK))
            }
            None => {
                let names: Vec<&str> = entries.iter().map(|e| e.name).collect();
                match config::suggest(name, &names) {
                    Some(s) => eprintln!("unknown surface `{name}` (did you mean `{s}`?)"),
                    None => eprintln!("unknown surface `{name}`"),
                }
                Ok(ExitCode::from(EXIT_CONFIG_ERROR))
            }
        },
    }
}
