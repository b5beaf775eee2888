use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Parser)]
#[command(name = "freepoisson", version, about = "Free Poisson algebras, free Lévy processes and noncrossing combinatorics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Input document: a file path, inline JSON, or `-` for stdin.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Arithmetic for verbs that support both (ignored by float-only verbs).
    #[arg(long, global = true, value_enum, env = "FREEPOISSON_MODE", default_value = "float")]
    pub mode: Mode,
    /// Seed for randomized verbs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance for numerical checks.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noncrossing partitions.
    #[command(subcommand)]
    Nc(NcCmd),
    /// Finite noncommutative probability spaces and free cumulants.
    #[command(subcommand)]
    Ncps(NcpsCmd),
    /// Fields and Wick products on the full Fock space.
    #[command(subcommand)]
    Fock(FockCmd),
    /// Cauchy and cumulant transforms, free convolution.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Lévy triples.
    #[command(subcommand)]
    Levy(LevyCmd),
    /// Completely positive maps and second quantization.
    #[command(subcommand)]
    Cp(CpCmd),
    /// Isomorphism classes of free Poisson and filtration algebras.
    #[command(subcommand)]
    Classify(ClassifyCmd),
    /// Higher variation of free Lévy processes.
    #[command(subcommand)]
    Variation(VariationCmd),
}

#[derive(Debug, Subcommand)]
pub enum NcCmd {
    /// All noncrossing partitions of {1..n}.
    Enumerate {
        #[arg(long)]
        n: usize,
    },
    /// Kreweras complement of the input partition.
    Kreweras {
        #[arg(long)]
        inverse: bool,
    },
    /// Whether `{"n", "blocks"}` is a noncrossing set partition.
    Check,
    /// Refinement order on `{"sigma": …, "pi": …}`.
    Leq,
    /// Uniformly random noncrossing partitions (uses --seed, default 0).
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum NcpsCmd {
    /// Joint moment `{"space", "elements", "word"}`.
    Moment,
    /// Free cumulants of all words up to `max_len`.
    Cumulants,
    /// Moments from supplied cumulants `{"labels", "cumulants", "max_len"}`.
    Moments,
    /// Mixed-cumulant freeness test of two families.
    Freeness,
}

#[derive(Debug, Subcommand)]
pub enum FockCmd {
    /// Vacuum moment of a product of fields.
    Moments,
    /// `Ψ(ξ₁⊗…⊗ξₙ)Ω`.
    Wick,
    /// Operator norm of a product of fields on the truncated space.
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Law {
    FreePoisson,
    Semicircle,
}

#[derive(Debug, Subcommand)]
pub enum DistCmd {
    /// Closed-form density at a point.
    Density {
        #[arg(long, value_enum)]
        law: Law,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        x: f64,
    },
    /// Density of a free convolution `{"summands", "x"}`.
    Conv,
    /// Cauchy transform `{"measure", "z"}`.
    Cauchy,
    /// Cumulant transform `{"measure" | "triple", "z"}`.
    Ctransform,
}

#[derive(Debug, Subcommand)]
pub enum LevyCmd {
    /// Gaussian, compensated and compound parts.
    Split,
    /// Triple from `{"mean", "higher"}` cumulant data.
    Recover,
    /// Free cumulants κ₁..κₙ of a triple.
    Cumulants {
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum CpCmd {
    /// Admissibility report for `{"source", "target", "map"}`.
    Check,
    /// Petz dual of the map.
    Dual,
    /// `Γ(T)X Ω` for a Wick polynomial `X`.
    Gamma,
}

#[derive(Debug, Subcommand)]
pub enum ClassifyCmd {
    /// Filtration algebra at time t.
    Filtration {
        /// Triple document (path or inline JSON).
        #[arg(long, conflicts_with_all = ["b", "rho"])]
        triple: Option<String>,
        #[arg(long)]
        b: Option<f64>,
        /// Lévy atoms `[[location, weight], …]`, or `"inf"` for infinite mass.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        t: f64,
    },
    /// Free Poisson filtration at total weight α.
    Poisson {
        #[arg(long)]
        alpha: f64,
    },
    /// Factoriality of Γ(M, φ).
    Factor {
        /// Total weight, or `inf`.
        #[arg(long)]
        weight: String,
        #[arg(long)]
        trivial: bool,
        /// Modular eigenvalues `[…]`.
        #[arg(long)]
        eigenvalues: Option<String>,
    },
    /// Exact free-dimension bookkeeping for n < α ≤ n+1.
    Freedim {
        #[arg(long)]
        n: u64,
        /// Rational, e.g. `3/2`.
        #[arg(long)]
        alpha: String,
    },
    /// Γ(M, αφ) for a base algebra.
    Gamma {
        /// `trivial`, `diffuse_abelian`, or a name for a generic algebra.
        #[arg(long)]
        base: String,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum VariationCmd {
    /// Errors for every bin count and the fitted rate.
    Run {
        /// Experiment document (path or inline JSON).
        #[arg(long)]
        config: String,
        /// Also write the `(N, error)` table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}
