use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ssdr_core::kle::Mode;
use ssdr_core::pipeline::{ConfigRequest, Profile, SpaceKind, StageOutcome, StageStatus, Study};
use ssdr_core::Error;

/// Design-space reduction and subspace optimisation for propeller blades.
#[derive(Parser)]
#[command(name = "ssdr", version)]
struct Cli {
    /// JSON configuration (partial documents overlay the profile defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "run")]
    run_dir: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replace existing artifacts or a different stored configuration.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ssdr,
    Kle,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Full,
    Ssdr,
    Kle,
}

impl From<SpaceArg> for SpaceKind {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Full => SpaceKind::Full,
            SpaceArg::Ssdr => SpaceKind::Ssdr,
            SpaceArg::Kle => SpaceKind::Kle,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw the training designs.
    Sample {
        #[arg(long)]
        psi: Option<usize>,
    },
    /// Build the SSDR and/or KLE subspace.
    Reduce {
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
    },
    /// Invalid-design rates of both subspaces.
    Validity,
    /// Moment invariants of the baseline blade.
    Moments,
    /// Run the genetic optimiser.
    Optimize {
        #[arg(long, value_enum, default_value = "ssdr")]
        space: SpaceArg,
    },
    /// Decode a latent vector to a blade.
    Reconstruct {
        #[arg(long, value_enum)]
        space: SpaceArg,
        /// Comma-separated latent coordinates (default: the mean design).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        latent: Option<Vec<f64>>,
    },
    /// Write baseline meshes.
    ExportMesh,
    /// Summarise the completed stages.
    Report,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::InvalidInput(_)
        | Error::NonMonotoneRadii(_)
        | Error::RadiusOutOfRange { .. }
        | Error::LengthMismatch { .. }
        | Error::WouldOverwrite(_) => 2,
        Error::MissingStage { .. } | Error::HashMismatch { .. } => 3,
        Error::Numerical(_) | Error::NonFinite(_) | Error::NotWatertight(..) | Error::Orientation(_) => 4,
        Error::Io(_) | Error::Json(_) => 1,
    }
}

fn print(outcome: &StageOutcome) {
    let status = match outcome.status {
        StageStatus::Ran => "done",
        StageStatus::UpToDate => "up to date",
    };
    println!("{}: {status}", outcome.stage);
    if let Some(lines) = outcome.summary.get("lines").and_then(|l| l.as_array()) {
        for l in lines {
            println!("  {}", l.as_str().unwrap_or_default());
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        ssdr_core::set_threads(n)?;
    }
    let psi = match cli.command {
        Command::Sample { psi } => psi,
        _ => None,
    };
    let request = ConfigRequest {
        file: cli.config,
        profile: cli.profile.map(|p| match p {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Desk => Profile::Desk,
        }),
        seed: cli.seed,
        psi,
    };
    let mut study = Study::open(&cli.run_dir, &request, cli.force)?;
    let outcomes = match cli.command {
        Command::Sample { .. } => vec![study.sample()?],
        Command::Reduce { mode } => match mode {
            ModeArg::Ssdr => vec![study.reduce(Mode::Ssdr)?],
            ModeArg::Kle => vec![study.reduce(Mode::Kle)?],
            ModeArg::Both => vec![study.reduce(Mode::Ssdr)?, study.reduce(Mode::Kle)?],
        },
        Command::Validity => vec![study.validity()?],
        Command::Moments => vec![study.moments()?],
        Command::Optimize { space } => vec![study.optimize(space.into())?],
        Command::Reconstruct { space, latent } => vec![study.reconstruct(space.into(), latent)?],
        Command::ExportMesh => vec![study.export_mesh()?],
        Command::Report => vec![study.report()?],
    };
    for o in &outcomes {
        print(o);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
