use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conefix::cli::{self, Outcome, Scenario, EXIT_INPUT, EXIT_OK};
use conefix::contraction::SinghVariant;
use conefix::finite_oracle::GenCone;

#[derive(Parser)]
#[command(name = "conefix", version, about = "Common fixed points of commuting maps on cone metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the scenario's conditions and fit minimal constants.
    Classify(Common),
    /// Run the Jungck iteration and certify the limit.
    Solve(Common),
    /// Check the metric axioms, range inclusion and commutativity.
    Verify(Common),
    /// Write a scenario for a random finite instance.
    Gen(GenArgs),
    /// Estimate the normal constant of the scenario's cone.
    EstimateK(EstimateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for trace files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Text variant of the Singh condition.
    #[arg(long, value_enum)]
    variant: Option<Variant>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    points: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = ConeArg::Orthant)]
    cone: ConeArg,
    /// Write `instance-<seed>.toml` here instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Classic,
    AsPrinted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeArg {
    Orthant,
    SecondOrder,
}

fn load(path: &Path, seed: Option<u64>, variant: Option<Variant>) -> conefix::Result<Scenario> {
    let variant = variant.map(|v| match v {
        Variant::Classic => SinghVariant::Classic,
        Variant::AsPrinted => SinghVariant::AsPrinted,
    });
    let scn = Scenario::load(path)?.with_overrides(seed, variant);
    scn.validate()?;
    Ok(scn)
}

fn run(cli: Cli) -> conefix::Result<Outcome> {
    match cli.command {
        Command::Classify(c) => cli::classify(&load(&c.scenario, c.seed, c.variant)?),
        Command::Solve(c) => cli::solve(&load(&c.scenario, c.seed, c.variant)?, &c.out),
        Command::Verify(c) => cli::verify(&load(&c.scenario, c.seed, c.variant)?),
        Command::EstimateK(e) => cli::estimate_k(&load(&e.scenario, e.seed, None)?, e.samples),
        Command::Gen(g) => {
            let cone = match g.cone {
                ConeArg::Orthant => GenCone::Orthant,
                ConeArg::SecondOrder => GenCone::SecondOrder,
            };
            let text = cli::generate(g.seed, g.points, g.dim, cone)?.to_toml();
            match g.out {
                Some(dir) => {
                    let path = dir.join(format!("instance-{}.toml", g.seed));
                    std::fs::create_dir_all(&dir)
                        .and_then(|_| std::fs::write(&path, text))
                        .map_err(|e| conefix::Error::Scenario(format!("{}: {e}", path.display())))?;
                    Ok(Outcome {
                        report: format!("wrote = {:?}\n", path.display().to_string()),
                        exit_code: EXIT_OK,
                    })
                }
                None => Ok(Outcome {
                    report: text,
                    exit_code: EXIT_OK,
                }),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
