use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "esopt",
    version,
    about = "Option prices on an underlying tied to planetary-boundary performance"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form call and put.
    #[command(allow_negative_numbers = true)]
    Price(PriceArgs),
    /// Finite-difference solution of the heat equation, with a convergence table.
    #[command(allow_negative_numbers = true)]
    Pde(PdeArgs),
    /// Green's-function quadrature.
    #[command(allow_negative_numbers = true)]
    Quad(QuadArgs),
    /// Monte Carlo under geometric Brownian motion.
    #[command(allow_negative_numbers = true)]
    Mc(McArgs),
    /// Runs a boundary-state trajectory through the mapping and pricer.
    #[command(allow_negative_numbers = true)]
    Scenario(ScenarioArgs),
    /// Hessian of the spot over selected boundary coordinates, with classification.
    #[command(allow_negative_numbers = true)]
    Hessian(HessianArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MarketArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub spot: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub strike: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rate: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Time to expiry in years.
    #[arg(long, conflicts_with_all = ["expiry", "time"], required_unless_present = "expiry", allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Expiry date in years; valued at `--time`.
    #[arg(long, allow_negative_numbers = true)]
    pub expiry: Option<f64>,
    #[arg(long, requires = "expiry", allow_negative_numbers = true)]
    pub time: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub market: MarketArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    #[value(name = "crank-nicolson", alias = "cn")]
    CrankNicolson,
    Explicit,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::CrankNicolson)]
    pub scheme: SchemeArg,
    /// Grid overrides; all four together replace the default grid.
    #[arg(long, requires_all = ["x_max", "nx", "ntau"], allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, requires_all = ["x_min", "nx", "ntau"], allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long, requires_all = ["x_min", "x_max", "ntau"])]
    pub nx: Option<usize>,
    #[arg(long, requires_all = ["x_min", "x_max", "nx"])]
    pub ntau: Option<usize>,
    /// Rows in the convergence table; the last row is the chosen grid.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub levels: u32,
    /// Writes every time level of the call solution as `x,tau,u`.
    #[arg(long)]
    pub surface: Option<PathBuf>,
    /// Writes the final call level as `S,C`.
    #[arg(long)]
    pub slice: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Initial truncation width in standard deviations.
    #[arg(long, default_value_t = 10.0)]
    pub width: f64,
    /// Gauss-Legendre points per panel.
    #[arg(long, default_value_t = 20)]
    pub order: usize,
    /// Relative change between panel doublings at which refinement stops.
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: u64,
    #[arg(long, env = "ESOPT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub antithetic: bool,
    /// Worker threads; 0 uses every core. The result does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Every field of the scenario document has a flag; flags override the file.
#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON, or `-` for stdin. Without it the flags must describe the whole scenario.
    #[arg(long)]
    pub file: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rate: Option<f64>,
    #[arg(long, conflicts_with = "h_target")]
    pub strike: Option<f64>,
    #[arg(long)]
    pub expiry: Option<f64>,
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub reference: Option<String>,
    /// Target state for the strike.
    #[arg(long, allow_hyphen_values = true)]
    pub h_target: Option<String>,
    /// `t:h1,h2,...`; repeat for each step. Replaces the file's steps.
    #[arg(long = "step", allow_hyphen_values = true)]
    pub steps: Vec<String>,
    #[arg(long, value_parser = ["reference", "step"])]
    pub delta_mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct HessianArgs {
    /// Boundary-state JSON (`dimension`, `labels`, `h`, `g`), or `-` for stdin.
    #[arg(long)]
    pub file: String,
    /// One-based coordinates, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub coords: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s0: f64,
}
