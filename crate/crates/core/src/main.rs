//! Command-line driver for the experiment harness.
//!
//! ```text
//! elastic-fds error-table --n-elements 400,1600 --epsilon 1e-8,1e-10 --out out/table1.csv
//! elastic-fds intensity-sweep --n-elements 800 --solver conv-non-bm --omega 0.5 --omega-max 8 --omega-step 0.05
//! ```

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastic_fds::harness::{run, Experiment, ExperimentConfig, SolverKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "elastic-fds", version, about = "Fast direct BEM solver for 2D elastic wave scattering: experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-level FDS error against the dense solver.
    ErrorTable(Flags),
    /// Single-level FDS error next to the multi-level error.
    #[command(alias = "single-level-table")]
    SingleLevelError(Flags),
    /// Wall time over a size ladder and fitted exponents.
    Scaling(Flags),
    /// Build once, then solve for many incident angles.
    MultiRhs(Flags),
    /// FDS and dense wall time over a frequency range.
    #[command(alias = "omega-suite")]
    OmegaTime(Flags),
    /// FDS error over a frequency range.
    OmegaError(Flags),
    /// Boundary intensity near (1, 0) over a frequency range.
    IntensitySweep(Flags),
    /// Interior residual of the integral representation.
    NullField(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Fds,
    Conv,
    ConvNonBm,
}

#[derive(Args)]
struct Flags {
    /// Element counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_elements: Option<Vec<usize>>,
    /// Dense-solver element counts for the scaling ladder.
    #[arg(long, value_delimiter = ',')]
    conv_n_elements: Option<Vec<usize>>,
    #[arg(long)]
    leaf_size: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    ell0: Option<usize>,
    /// ID tolerances, comma separated.
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_step: Option<f64>,
    #[arg(long, requires = "alpha_im")]
    alpha_re: Option<f64>,
    #[arg(long, requires = "alpha_re")]
    alpha_im: Option<f64>,
    #[arg(long)]
    incident_angle_deg: Option<f64>,
    #[arg(long)]
    rhs_count: Option<usize>,
    /// Worker threads (0: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    proxy_radius_factor: Option<f64>,
    #[arg(long)]
    proxy_m: Option<usize>,
    #[arg(long)]
    coincident_points: Option<usize>,
    #[arg(long)]
    regular_extra: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Timed repetitions for N <= 1600.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    extra_probes: Option<usize>,
    /// CSV output; the report goes next to it as JSON. Prints to stdout if
    /// absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also writes the mesh of the first size in text form.
    #[arg(long)]
    mesh_out: Option<PathBuf>,
}

impl Flags {
    fn config(self, experiment: Experiment) -> (ExperimentConfig, Option<PathBuf>) {
        let mut c = ExperimentConfig::new(experiment);
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag { $field = v; })*
            };
        }
        set! {
            n_elements => c.sizes,
            conv_n_elements => c.conv_sizes,
            leaf_size => c.leaf_size,
            ell0 => c.ell0,
            epsilon => c.epsilons,
            omega => c.omega,
            omega_step => c.omega_step,
            incident_angle_deg => c.incident_angle_deg,
            rhs_count => c.rhs_count,
            threads => c.threads,
            proxy_radius_factor => c.proxy.radius_factor,
            proxy_m => c.proxy.m_prime,
            coincident_points => c.quadrature.coincident_points,
            regular_extra => c.quadrature.regular_extra,
            repeats => c.repeats,
            seed => c.seed,
            extra_probes => c.extra_probes,
        }
        if self.levels.is_some() {
            c.levels = self.levels;
        }
        if self.omega_max.is_some() {
            c.omega_max = self.omega_max;
        }
        if let (Some(re), Some(im)) = (self.alpha_re, self.alpha_im) {
            c.alpha = Some([re, im]);
        }
        if let Some(s) = self.solver {
            c.solver = match s {
                SolverArg::Fds => SolverKind::Fds,
                SolverArg::Conv => SolverKind::Conv,
                SolverArg::ConvNonBm => SolverKind::ConvNonBm,
            };
        }
        c.out = self.out;
        (c, self.mesh_out)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::ErrorTable(f) => (Experiment::ErrorTable, f),
        Command::SingleLevelError(f) => (Experiment::SingleLevelError, f),
        Command::Scaling(f) => (Experiment::Scaling, f),
        Command::MultiRhs(f) => (Experiment::MultiRhs, f),
        Command::OmegaTime(f) => (Experiment::OmegaTime, f),
        Command::OmegaError(f) => (Experiment::OmegaError, f),
        Command::IntensitySweep(f) => (Experiment::IntensitySweep, f),
        Command::NullField(f) => (Experiment::NullField, f),
    };
    let (config, mesh_out) = flags.config(experiment);
    match execute(&config, mesh_out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(config: &ExperimentConfig, mesh_out: Option<PathBuf>) -> elastic_fds::Result<()> {
    config.validate()?;
    if let Some(path) = mesh_out {
        config.mesh(config.sizes[0])?.save(&path)?;
        log::info!("mesh written to {}", path.display());
    }
    let outcome = run(config)?;
    match &config.out {
        Some(path) => {
            let (csv, json) = outcome.write(path)?;
            log::info!("wrote {} and {}", csv.display(), json.display());
        }
        None => print!("{}", outcome.table.to_csv_string()),
    }
    for m in &outcome.report.metrics {
        log::info!("{} = {:e}", m.name, m.value);
    }
    log::info!("total {:.3} s on {} thread(s)", outcome.report.total_seconds, outcome.report.threads);
    Ok(())
}
