use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sicyig", version, about = "Design and simulation toolkit for a SiC/YIG optically detected DEER sensor")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Config file, or `paper-defaults` for the built-in defaults.
    #[arg(long, global = true, default_value = "paper-defaults")]
    pub config: PathBuf,
    /// Output directory. Without it the primary output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Format for tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Worker threads; overrides SICYIG_THREADS.
    #[arg(long, global = true, env = "SICYIG_THREADS")]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stray field of the magnetized stripe on an (x, z) grid.
    FieldMap(FieldMapArgs),
    /// Spin-wave resonance dispersion and lines at the drive frequency.
    Swr(SwrArgs),
    /// Powder EPR spectra of the configured spin systems.
    EprSpectrum(EprArgs),
    /// DEER time trace of the configured plane scenario.
    DeerSim(DeerSimArgs),
    /// Fit distance and areal density to a `td_us,V` trace.
    DeerFit(DeerFitArgs),
    /// Optical readout SNR budget.
    Snr(SnrArgs),
    /// Implantation statistics for one aperture and a device batch.
    Yield(YieldArgs),
    /// TM band diagram and gaps of the hole lattice.
    PhcBands(PhcArgs),
    /// Lattice constants and nanobeam widths for the target wavelength.
    Design(DesignArgs),
    /// Recompute every reference number and compare it with its target.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
pub struct FieldMapArgs {
    /// Print only the gradient optimum as JSON.
    #[arg(long)]
    pub xopt: bool,
    /// Distance range above the stripe centre, nm.
    #[arg(long, default_value_t = 55.0)]
    pub x_min_nm: f64,
    #[arg(long, default_value_t = 400.0)]
    pub x_max_nm: f64,
    #[arg(long, default_value_t = 70)]
    pub nx: usize,
    /// Lateral range across the width; defaults to the full stripe width.
    #[arg(long, allow_negative_numbers = true)]
    pub z_min_nm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z_max_nm: Option<f64>,
    #[arg(long, default_value_t = 41)]
    pub nz: usize,
}

#[derive(Args, Debug)]
pub struct SwrArgs {
    /// Drive frequency; defaults to the config value.
    #[arg(long)]
    pub freq_ghz: Option<f64>,
    /// Make the dispersion map the primary output.
    #[arg(long)]
    pub dispersion: bool,
}

#[derive(Args, Debug)]
pub struct EprArgs {
    /// Spin system label; repeat to select several. Default: all.
    #[arg(long = "system")]
    pub systems: Vec<String>,
    /// Shift each system by the stripe field at its position.
    #[arg(long)]
    pub gradient: bool,
}

#[derive(Args, Debug)]
pub struct DeerSimArgs {
    #[arg(long)]
    pub dx_nm: Option<f64>,
    /// Mean nearest-neighbour spacing of the target plane.
    #[arg(long, conflicts_with = "c2d_per_nm2")]
    pub spacing_nm: Option<f64>,
    #[arg(long)]
    pub c2d_per_nm2: Option<f64>,
    #[arg(long)]
    pub pump_flip: Option<f64>,
    /// Add Gaussian noise of this standard deviation (seeded).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Add Monte-Carlo oracle columns (seeded).
    #[arg(long)]
    pub mc: bool,
}

#[derive(Args, Debug)]
pub struct DeerFitArgs {
    /// CSV with `td_us` and `V` columns.
    pub trace: PathBuf,
}

#[derive(Args, Debug)]
pub struct SnrArgs {
    /// DEER signal value V during readout.
    #[arg(long, default_value_t = 0.0)]
    pub v: f64,
    /// Resonant excitation instead of off-resonant.
    #[arg(long)]
    pub resonant: bool,
}

#[derive(Args, Debug)]
pub struct YieldArgs {
    /// Profile file or `builtin:<name>`.
    #[arg(long)]
    pub profile: Option<String>,
    /// Ion dose per cm².
    #[arg(long)]
    pub dose: Option<f64>,
    #[arg(long)]
    pub aperture_nm: Option<f64>,
    #[arg(long)]
    pub decimation: Option<f64>,
    #[arg(long)]
    pub devices: Option<u64>,
    /// Depth window `z1:z2` in nm.
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Args, Debug)]
pub struct PhcArgs {
    #[arg(long)]
    pub planewaves: Option<usize>,
    #[arg(long)]
    pub bands: Option<usize>,
    #[arg(long)]
    pub k_per_segment: Option<usize>,
    /// Make the gap report the primary output.
    #[arg(long)]
    pub gaps: bool,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Normalized frequencies a/λ to design for.
    #[arg(long = "freq", value_delimiter = ',', default_values_t = [0.680, 0.467, 0.345])]
    pub freqs: Vec<f64>,
    #[arg(long)]
    pub orders: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Groups or claim ids to keep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<String>>,
}
