use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "backorbit", version, about = "Backward-orbit invariants of rational maps on the Riemann sphere")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Rational map, e.g. "z^2 - 1" or "(z^2+1)/(2*z)".
    #[arg(long, global = true)]
    pub map: Option<String>,
    /// Point on the sphere: "inf", "0", "1.5-2i", ...
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Backward depth (orbit, compare) or number of c_n terms (kms).
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Inverse temperature for the kms command.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Chordal tolerance for identifying points.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Working precision of the root finder (53 or up to 106 for compensated).
    #[arg(long, global = true, default_value_t = 53)]
    pub precision_bits: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for sampled checks in `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Critical points, branch indices and the Riemann-Hurwitz check.
    Critical,
    /// The distinct preimages of --point with their branch indices.
    Fiber,
    /// Counts b_0..b_depth of the backward orbit of --point.
    Orbit {
        /// Also emit the points of every level.
        #[arg(long)]
        levels: bool,
    },
    /// KMS normalizer, c_n sequence and recovery of b_n.
    Kms {
        /// Truncation depth K of the series.
        #[arg(long, default_value_t = 40)]
        truncation: usize,
    },
    /// Parameter c_m of the quadratic family and its critical orbit.
    Family {
        #[arg(long)]
        m: u32,
    },
    /// Compare the branched-point invariants of two maps.
    Compare {
        #[arg(long)]
        map_a: String,
        #[arg(long)]
        map_b: String,
    },
    /// Run the built-in example suite.
    Verify,
}
