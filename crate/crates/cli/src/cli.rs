use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Validate computer models against noisy field data with the Fourier
/// maximum modulus test.
#[derive(Parser, Debug)]
#[command(name = "fmmt", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test field data against a simulator, globally and on subdomains
    Test(TestArgs),
    /// Monte Carlo rejection rates for a registered scenario
    Simulate(StudyArgs),
    /// Like `simulate`, over the scenario's full modulation grid, always plotting
    PowerCurve(StudyArgs),
    /// Run the shear-layer case study
    ShearLayer(ShearArgs),
    /// List the registered scenarios
    Scenarios,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Significance level
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Decay exponent of the coefficient weights (> 0.5)
    #[arg(long)]
    pub ell: Option<f64>,
    /// Largest total frequency (default floor(sqrt(n)))
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Random seed
    #[arg(long, env = "FMMT_SEED")]
    pub seed: Option<u64>,
    /// Also write SVG plots
    #[arg(long)]
    pub plots: bool,
    /// Output directory
    #[arg(long, default_value = "fmmt-out")]
    pub out: PathBuf,
    /// TOML configuration file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Delimiter-separated data file with header x1,...,xd,y
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `builtin:NAME` (a scenario's null function) or `surrogate:PATH`
    #[arg(long)]
    pub simulator: Option<String>,
    /// Domain box, `a1,b1[:a2,b2...]`
    #[arg(long)]
    pub domain: Option<String>,
    /// Equal split of the domain, `k[,k2...]`
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct StudyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scenario name (see `fmmt scenarios`)
    #[arg(long)]
    pub scenario: Option<String>,
    /// Sample size (default: the scenario's)
    #[arg(long)]
    pub n: Option<usize>,
    /// Replications per modulation value
    #[arg(long)]
    pub reps: Option<usize>,
    /// Modulation values, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Vec<f64>,
    /// Modulation grid, `from:to:step` or a comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    pub c_grid: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Truncated-normal design with noise s.d. 0.5
    #[arg(long)]
    pub comparison: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ShearArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Field measurements (default: the bundled sample)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Simulation sample to interpolate (default: the bundled sample)
    #[arg(long)]
    pub simulator: Option<PathBuf>,
}
