use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fractal_coherence::{Caps, FamilySpec, OrderSelection};

use crate::output::Failure;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "fracoh",
    version,
    about = "Network coherence of noisy consensus on fractal graphs"
)]
pub struct Cli {
    #[command(flatten)]
    pub caps: CapArgs,

    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct CapArgs {
    /// Node cap for graph generation [env: FRACOH_MAX_NODES, default 10000000].
    #[arg(long, global = true)]
    pub max_nodes: Option<usize>,

    /// Node cap for anything needing a dense eigensolve or Lyapunov solve
    /// [env: FRACOH_MAX_DENSE, default 5000].
    #[arg(long, global = true)]
    pub max_dense: Option<usize>,
}

impl CapArgs {
    /// Environment first, then flags on top.
    pub fn resolve(&self) -> Result<Caps, Failure> {
        let mut caps = Caps::from_env()?;
        if let Some(n) = self.max_nodes {
            caps.max_nodes = n;
        }
        if let Some(n) = self.max_dense {
            caps.max_dense = n;
        }
        Ok(caps)
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Emit a generated graph as an edge list.
    Generate(FamilyArgs),
    /// Laplacian eigenvalues with S and S2.
    Spectrum(SpectrumArgs),
    /// Coherence by one or more routes, with a cross-route agreement check.
    Coherence(CoherenceArgs),
    /// Monte-Carlo coherence estimate next to the analytic value.
    Simulate(SimulateArgs),
    /// Coherence over a range of generations plus a scaling fit.
    Sweep(SweepArgs),
    /// Ball-growth and spectral dimension estimates.
    Dimension(DimensionArgs),
    /// Run an identity suite and print each check.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Spectrum(_) => "spectrum",
            Command::Coherence(_) => "coherence",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Dimension(_) => "dimension",
            Command::Verify(_) => "verify",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Coherence(a) => Some(a.seed),
            Command::Simulate(a) => Some(a.seed),
            Command::Dimension(a) => Some(a.seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Tree,
    Vicsek,
    Ring,
    Path,
    Torus,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Leaves per midpoint for the tree-like family.
    #[arg(long)]
    pub m: Option<u32>,
    /// Corner count for the Vicsek family.
    #[arg(long)]
    pub v: Option<u32>,
    /// Generation for the fractal families.
    #[arg(long)]
    pub g: Option<u32>,
    /// Node count for ring and path, side length for torus.
    #[arg(long)]
    pub n: Option<u32>,
}

fn need(value: Option<u32>, flag: &str, family: &str) -> Result<u32, Failure> {
    value.ok_or_else(|| Failure::usage(format!("--family {family} needs {flag}")))
}

impl FamilyArgs {
    pub fn spec(&self) -> Result<Option<FamilySpec>, Failure> {
        let Some(family) = self.family else {
            return Ok(None);
        };
        Ok(Some(match family {
            FamilyArg::Tree => FamilySpec::tree(need(self.m, "--m", "tree")?, need(self.g, "--g", "tree")?),
            FamilyArg::Vicsek => {
                FamilySpec::vicsek(need(self.v, "--v", "vicsek")?, need(self.g, "--g", "vicsek")?)
            }
            FamilyArg::Ring => FamilySpec::ring(need(self.n, "--n", "ring")?),
            FamilyArg::Path => FamilySpec::path(need(self.n, "--n", "path")?),
            FamilyArg::Torus => FamilySpec::torus2d(need(self.n, "--n", "torus")?),
        }))
    }
}

/// A graph given either as an edge-list file or by family flags.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Edge-list file, or `-` for stdin.
    #[arg(long, short, conflicts_with = "family")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// CSV of eigenvalues instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteArg {
    Eigen,
    Recursion,
    Lyapunov,
    Simulate,
    All,
}

fn parse_orders(s: &str) -> Result<OrderSelection, String> {
    s.parse().map_err(|e: fractal_coherence::Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct CoherenceArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// first, second or both.
    #[arg(long, default_value = "both", value_parser = parse_orders)]
    pub order: OrderSelection,
    #[arg(long, value_enum, default_value = "eigen")]
    pub route: RouteArg,
    /// One CSV row per route instead of JSON.
    #[arg(long)]
    pub csv: bool,
    /// Seed for the simulation route.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replicates for the simulation route.
    #[arg(long, default_value_t = fractal_coherence::consensus::DEFAULT_REPLICATES)]
    pub replicates: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// first, second or both.
    #[arg(long, default_value = "first", value_parser = parse_orders)]
    pub order: OrderSelection,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Step size [default: 0.005 / (beta lambda_max)].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Averaging window [default: 100 relaxation times].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Discarded warm-up [default: 10 relaxation times].
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long, default_value_t = fractal_coherence::consensus::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force the noise increments to zero.
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFamily {
    Tree,
    Vicsek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepRoute {
    Recursion,
    Eigen,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: SweepFamily,
    /// m for tree, v for vicsek.
    #[arg(long)]
    pub param: u32,
    #[arg(long, default_value_t = 1)]
    pub g_min: u32,
    #[arg(long)]
    pub g_max: u32,
    /// first, second or both.
    #[arg(long, default_value = "both", value_parser = parse_orders)]
    pub order: OrderSelection,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "recursion")]
    pub route: SweepRoute,
    /// Worker threads; rows come out in generation order regardless.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the fit summary JSON here instead of a trailing comment line.
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Random extra centers for the ball-growth sensitivity report.
    #[arg(long, default_value_t = 3)]
    pub extra_centers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit the dimension and exponent table for the fractal families
    /// instead of estimating from a graph.
    #[arg(long)]
    pub table: bool,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Largest generation used by the table fits.
    #[arg(long, default_value_t = fractal_coherence::scaling::TABLE_G_MAX)]
    pub g_max: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(subcommand)]
    pub target: VerifyTarget,
    /// JSON instead of one line per check.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyTarget {
    /// Vicsek recursion identities.
    Vicsek {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 4)]
        g_max: u32,
    },
    /// Tree-like recursion identities.
    Tree {
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 5)]
        g_max: u32,
    },
}
