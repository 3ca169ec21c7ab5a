use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use solvbound::harness::{merge_files, run, CampaignConfig};
use solvbound::Error;

#[derive(Parser)]
#[command(name = "solvbound", version, about = "Verification campaigns for negatively curved solvable groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML campaign configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for `<subcommand>.jsonl` and `<subcommand>.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    VerifyNorms(Common),
    Distance {
        #[command(flatten)]
        common: Common,
        /// Compare with the closed-form distance (single-block spectra).
        #[arg(long)]
        oracle: bool,
    },
    Geodesic(Common),
    Busemann(Common),
    Quasicenter(Common),
    G3(Common),
    Visual(Common),
    Parabolic(Common),
    Invert(Common),
    Sphericalize(Common),
    Relation1(Common),
    QsProfile(Common),
    Foliation(Common),
    Factorize(Common),
    MainBound(Common),
    HeightRespect(Common),
    Modulus(Common),
    All(Common),
    /// Merge JSON-lines report shards.
    Merge {
        shards: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::ConfigInvalid(_) | Error::ConfigHashMismatch(..) | Error::Parse(_) | Error::Io(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn campaign(name: &str, common: &Common, oracle: bool) -> ExitCode {
    let mut cfg = match &common.config {
        Some(p) => match CampaignConfig::load(p) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        },
        None => CampaignConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = Some(o.clone());
    }
    cfg.oracle |= oracle;
    let report = match run(name, &cfg, common.jobs) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    print!("{}", report.summary());
    if let Some(dir) = &cfg.out_dir {
        if let Err(e) = report.write(dir, name) {
            return fail(&e);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, oracle) = match &cli.command {
        Command::Merge { shards, out } => {
            return match merge_files(shards) {
                Ok(r) => {
                    print!("{}", r.summary());
                    if let Some(dir) = out {
                        if let Err(e) = r.write(dir, "merge") {
                            return fail(&e);
                        }
                    }
                    if r.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(&e),
            };
        }
        Command::Distance { common, oracle } => ("distance", common, *oracle),
        Command::VerifyNorms(c) => ("verify-norms", c, false),
        Command::Geodesic(c) => ("geodesic", c, false),
        Command::Busemann(c) => ("busemann", c, false),
        Command::Quasicenter(c) => ("quasicenter", c, false),
        Command::G3(c) => ("g3", c, false),
        Command::Visual(c) => ("visual", c, false),
        Command::Parabolic(c) => ("parabolic", c, false),
        Command::Invert(c) => ("invert", c, false),
        Command::Sphericalize(c) => ("sphericalize", c, false),
        Command::Relation1(c) => ("relation1", c, false),
        Command::QsProfile(c) => ("qs-profile", c, false),
        Command::Foliation(c) => ("foliation", c, false),
        Command::Factorize(c) => ("factorize", c, false),
        Command::MainBound(c) => ("main-bound", c, false),
        Command::HeightRespect(c) => ("height-respect", c, false),
        Command::Modulus(c) => ("modulus", c, false),
        Command::All(c) => ("all", c, false),
    };
    campaign(name, common, oracle)
}
