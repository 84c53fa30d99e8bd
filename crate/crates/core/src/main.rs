use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand, ValueEnum};

use dscert::certifier::{BoundarySearch, Mode};
use dscert::inequality::FieldMode;
use dscert::lattice::parse_extents;
use dscert::report::{run, RunConfig, Subcommand, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "dscert", version, about = "Finite-volume uniqueness certificates for the Ising model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Evaluate the uniqueness condition for one box at one inverse temperature.
    Check(CheckArgs),
    /// Bracket the threshold inverse temperature of a box.
    BetaV(BetaVArgs),
    /// Randomized sweep of the covariance inequality under arbitrary fields.
    Dss(DssArgs),
    /// Cross-check the fast distance against exact transport.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fast,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Full,
    Extremal,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Uniform,
    Zero,
}

#[derive(Args)]
struct Common {
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct BoxArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Box extents, e.g. `3x4`.
    #[arg(long)]
    extents: Extents,
    #[arg(long, value_enum, default_value = "fast")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "on")]
    symmetry: OnOff,
    /// `extremal` visits only constant boundary conditions and does not certify.
    #[arg(long, value_enum, default_value = "full")]
    search: SearchArg,
}

#[derive(Clone, Debug)]
struct Extents(Vec<usize>);

impl std::str::FromStr for Extents {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_extents(s).map(Extents).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BetaVArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_max: f64,
    /// Grid points for the monotonicity scan.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    /// Write the grid scan as CSV (default: `<out>.csv` when `--out` is set).
    #[arg(long)]
    csv: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DssArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    max_extent: usize,
    #[arg(long = "h", value_enum, default_value = "uniform")]
    fields: FieldArg,
    /// Re-run one trial: `SEED:INDEX` or a JSON trial tuple.
    #[arg(long)]
    replay: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 6)]
    max_volume: usize,
    /// Check one box instead of the default list.
    #[arg(long)]
    extents: Option<Extents>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5])]
    betas: Vec<f64>,
    /// Compare the 1×…×1 box against the single-site brute force.
    #[arg(long)]
    single_site: bool,
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn apply_box(cfg: &mut RunConfig, b: &BoxArgs) {
    cfg.dim = b.dim;
    cfg.extents = Some(b.extents.0.clone());
    cfg.mode = match b.mode {
        ModeArg::Fast => Mode::Fast,
        ModeArg::Oracle => Mode::Oracle,
    };
    cfg.symmetry = matches!(b.symmetry, OnOff::On);
    cfg.search = match b.search {
        SearchArg::Full => BoundarySearch::Full,
        SearchArg::Extremal => BoundarySearch::ExtremalOnly,
    };
}

fn apply_common(cfg: &mut RunConfig, c: &Common) {
    cfg.threads = c.threads;
    cfg.output = c.out.clone();
}

fn config(cli: Cli) -> RunConfig {
    match cli.command {
        Command::Check(a) => {
            let mut cfg = RunConfig::new(Subcommand::Check);
            apply_box(&mut cfg, &a.geometry);
            cfg.beta = Some(a.beta);
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Command::BetaV(a) => {
            let mut cfg = RunConfig::new(Subcommand::BetaV);
            apply_box(&mut cfg, &a.geometry);
            cfg.tol = a.tol;
            cfg.beta_max = a.beta_max;
            cfg.grid_points = a.grid;
            cfg.csv = a.csv;
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Command::Dss(a) => {
            let mut cfg = RunConfig::new(Subcommand::Dss);
            cfg.trials = a.trials;
            cfg.seed = a.seed;
            cfg.max_extent = a.max_extent;
            cfg.fields = match a.fields {
                FieldArg::Uniform => FieldMode::Uniform,
                FieldArg::Zero => FieldMode::Zero,
            };
            cfg.replay = a.replay;
            apply_common(&mut cfg, &a.common);
            cfg
        }
        Command::Oracle(a) => {
            let mut cfg = RunConfig::new(Subcommand::Oracle);
            cfg.max_volume = a.max_volume;
            cfg.extents = a.extents.map(|e| e.0);
            cfg.betas = a.betas;
            cfg.single_site = a.single_site;
            cfg.dim = a.dim;
            apply_common(&mut cfg, &a.common);
            cfg
        }
    }
}

fn write_file(path: &str, contents: &str) -> bool {
    match std::fs::write(path, contents) {
        Ok(()) => true,
        Err(e) => {
            eprintln!("dscert: cannot write {path}: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let cfg = config(Cli::parse());
    eprintln!("dscert: running {:?}", cfg.subcommand);
    let outcome = run(&cfg);
    let json = serde_json::to_string_pretty(&outcome.envelope).expect("report serializes");
    // a closed pipe downstream is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{json}");

    let mut ok = true;
    if let Some(path) = &cfg.output {
        ok &= write_file(path, &format!("{json}\n"));
    }
    if let Some(csv) = &outcome.csv {
        let target = cfg.csv.clone().or_else(|| {
            cfg.output
                .as_ref()
                .map(|o| Path::new(o).with_extension("csv").to_string_lossy().into_owned())
        });
        if let Some(path) = target {
            ok &= write_file(&path, csv);
        }
    }
    if let Some(err) = outcome.envelope["error"].as_str() {
        eprintln!("dscert: error: {err}");
    }
    let code = if ok { outcome.exit_code } else { EXIT_ERROR };
    ExitCode::from(code as u8)
}
