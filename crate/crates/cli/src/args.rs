use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exact forward-difference algebra, invariant subspaces, subgroup closures
/// and the coset constructions built on them.
///
/// JSON arguments are inline JSON, a file path, or `@id` naming an object of
/// the `--manifest` document.
#[derive(Parser, Debug)]
#[command(name = "deltaclose", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Global {
    /// Number field: {"minpoly", "interval"}, "Q" or "sqrt(n)".
    #[arg(long, global = true)]
    pub field: Option<String>,
    /// Document of named objects referenced as `@id`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[arg(long = "tolerance-atol", global = true)]
    pub atol: Option<f64>,
    #[arg(long = "tolerance-rtol", global = true)]
    pub rtol: Option<f64>,
    /// Sampling grid, "min,max,n" per axis joined by ';'.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// CSV output; geometry goes to <out>.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    #[command(subcommand)]
    Group(GroupCmd),
    #[command(subcommand)]
    Op(OpCmd),
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Solve Δ_{h_k}^{m_k} f = g_k exactly.
    Solve {
        #[arg(long)]
        system: String,
    },
    /// Polynomials annihilated by every Δ_{h_k}^{m_k}.
    Kernel {
        /// [{"h": vector, "m": n}, …]
        #[arg(long)]
        steps: String,
        /// Degree cap; defaults to max(max m_k, Σ(m_k − 1)).
        #[arg(long)]
        cap: Option<u32>,
    },
    #[command(subcommand)]
    Construct(ConstructCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
    #[command(subcommand)]
    Fit(FitCmd),
}

#[derive(Subcommand, Debug)]
pub enum GroupCmd {
    /// Closure V ⊕ Λ of the subgroup generated by vectors.
    Closure {
        #[arg(long)]
        generators: String,
        /// Basis of a hyperplane Ṽ ⊇ V to use for the frame.
        #[arg(long)]
        hyperplane: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum OpCmd {
    /// Telescoped multinomial expansion of (τ_{Σ m_k h_k} − 1)^N.
    Expand {
        #[arg(long)]
        steps: String,
        #[arg(long)]
        powers: String,
        #[arg(short = 'N')]
        n: u32,
    },
    /// Q with (τ_{ph} − 1)^n = Q·(τ_h − 1)^n.
    Divide {
        #[arg(long)]
        h: String,
        #[arg(short, allow_hyphen_values = true)]
        p: i64,
        #[arg(short)]
        n: u32,
    },
}

#[derive(Subcommand, Debug)]
pub enum SpaceCmd {
    /// Smallest superspace invariant under every operator.
    Diamond {
        #[arg(long)]
        space: String,
        /// [{"op": operator, "power": s}, …]
        #[arg(long)]
        ops: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum ConstructCmd {
    /// The h-periodic triangle wave.
    Triangle {
        #[arg(long, default_value = "1")]
        period: String,
    },
    /// f_m, with Δ_h^{m−1} f_m the triangle wave.
    Fm {
        #[arg(short)]
        m: u32,
        #[arg(long, default_value = "1")]
        period: String,
    },
    /// φ(z) = e(P_Ṽ z) + f_m(s(z)/r) for a non-dense group.
    Prop7 {
        #[arg(long)]
        generators: String,
        #[arg(short)]
        m: u32,
        /// Exponential polynomial e; zero when omitted.
        #[arg(long)]
        e: Option<String>,
        #[arg(long)]
        hyperplane: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum VerifyCmd {
    /// Apply an operator string to samples of a function.
    Grid {
        #[arg(long)]
        function: String,
        /// e.g. "delta h=1 m=2; delta h=0.5"
        #[arg(long)]
        op: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum FitCmd {
    /// Fit x ↦ f(x + λ) on V for lattice points λ.
    Cosets {
        #[arg(long)]
        function: String,
        #[arg(long)]
        closure: Option<String>,
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long)]
        space: Option<String>,
        /// [{"h": vector, "m": n}, …]
        #[arg(long)]
        orders: Option<String>,
    },
}
