use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kstab::problem;
use kstab::report::{self, CommandKind, Overrides};

#[derive(Parser)]
#[command(
    name = "kstab",
    version,
    about = "Exact K-stability tests for polarized spherical varieties from moment-polytope data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct RunArgs {
    /// Problem file path, or catalog:NAME for a bundled example.
    input: String,
    /// Denominator of the rational direction net used by the scan.
    #[arg(long)]
    net_denominator: Option<i64>,
    /// Residual tolerance of the soliton solve.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write an SVG figure to this path (envelope command).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Disable the central offset-normalizing translation.
    #[arg(long)]
    no_shift: bool,
    /// Payload written to stdout.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the polytope block and report the chamber decomposition.
    CheckConvexity(RunArgs),
    /// Report the curvature context and linear functional values.
    Futaki(RunArgs),
    /// Solve for the extremal field and the curvature candidate.
    Extremal(RunArgs),
    /// Barycenter verdict with witnesses plus the direction scan.
    Stability(RunArgs),
    /// Horospherical central fiber of a strictly semistable input.
    Degenerate(RunArgs),
    /// Crease extraction and envelope certification of the kernel element.
    Envelope(RunArgs),
    /// Damped Newton solve for the soliton field.
    Soliton(RunArgs),
    /// List bundled examples, or print one by name.
    Catalog { name: Option<String> },
}

fn load_input(input: &str) -> kstab::Result<problem::ProblemFile> {
    if let Some(name) = input.strip_prefix("catalog:") {
        match problem::catalog_entry(name) {
            Some(text) => problem::parse_str(text),
            None => Err(kstab::Error::InvalidData(format!(
                "no catalog entry named {name}"
            ))),
        }
    } else {
        problem::parse(std::path::Path::new(input))
    }
}

fn execute(kind: CommandKind, args: &RunArgs) -> ExitCode {
    let overrides = Overrides {
        net_denominator: args.net_denominator,
        tolerance: args.tolerance,
        no_shift: args.no_shift,
        want_svg: args.svg.is_some(),
    };
    let result = load_input(&args.input).and_then(|pf| report::run(kind, &pf, &overrides));
    match result {
        Ok(out) => {
            match args.format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&out.json).unwrap());
                    eprint!("{}", out.text);
                }
                Format::Text => print!("{}", out.text),
            }
            if let Some(path) = &args.svg {
                match &out.svg {
                    Some(figure) => {
                        if let Err(e) = std::fs::write(path, figure) {
                            eprintln!("could not write figure: {e}");
                            return ExitCode::from(4);
                        }
                    }
                    None => eprintln!("no figure is produced by this command"),
                }
            }
            ExitCode::from(out.exit_code.clamp(0, 255) as u8)
        }
        Err(e) => {
            match args.format {
                Format::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report::error_json(&e)).unwrap()
                    );
                }
                Format::Text => println!("error: {e}"),
            }
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::CheckConvexity(a) => execute(CommandKind::CheckConvexity, &a),
        Command::Futaki(a) => execute(CommandKind::Futaki, &a),
        Command::Extremal(a) => execute(CommandKind::Extremal, &a),
        Command::Stability(a) => execute(CommandKind::Stability, &a),
        Command::Degenerate(a) => execute(CommandKind::Degenerate, &a),
        Command::Envelope(a) => execute(CommandKind::Envelope, &a),
        Command::Soliton(a) => execute(CommandKind::Soliton, &a),
        Command::Catalog { name } => match name {
            None => {
                for (entry, _) in problem::catalog() {
                    println!("{entry}");
                }
                ExitCode::SUCCESS
            }
            Some(n) => match problem::catalog_entry(&n) {
                Some(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("error: no catalog entry named {n}");
                    ExitCode::from(4)
                }
            },
        },
    }
}
