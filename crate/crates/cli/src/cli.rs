use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use yamabe_core::{Shooting, SolverSettings, Stability, Tolerances};

#[derive(Parser, Debug)]
#[command(
    name = "yamabe",
    version,
    about = "Stability threshold lambda(m,n) of Yamabe minimizers on M^m x R^n",
    after_help = "Exit status: 0 success, 2 invalid input, 3 solver failure, 4 check-stability verdict Unstable."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
    /// Write the output to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Directory for cached ground-state profiles
    #[arg(long, env = "YAMABE_CACHE_DIR", global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Relative bracket width at which the f(0) bisection stops
    #[arg(long, default_value_t = 1e-12, global = true)]
    pub tol_beta: f64,
    /// Bracket width at which the lambda and alpha bisections stop
    #[arg(long, default_value_t = 1e-6, global = true)]
    pub tol_lambda: f64,
    /// Integrator relative tolerance
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub rtol: f64,
    /// Integrator absolute tolerance
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub atol: f64,
    /// Classification horizon in t (default 40 / sqrt(s_g / a_N))
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Number of grid intervals of the stored ground state
    #[arg(long, default_value_t = 4096, global = true)]
    pub grid_nodes: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Pair {
    /// Dimension of the closed factor M (>= 2)
    #[arg(long)]
    pub m: u32,
    /// Dimension of the Euclidean factor (>= 2)
    #[arg(long)]
    pub n: u32,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Shoot the radial ground state f of -a_N lap f + s_g f = s_g f^(p-1).
    ///
    /// CSV columns: schema_version,m,n,t,f,df
    GroundState {
        #[command(flatten)]
        pair: Pair,
        /// Number of uniform sample intervals on [0, T_grid] (CSV and JSON)
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Compute lambda(m,n).
    ///
    /// CSV columns: schema_version,m,n,lambda,bracket_lo,bracket_hi,iterations,horizon,beta,tol_lambda,tol_beta,rtol,atol,unresolved_probes
    Lambda {
        #[command(flatten)]
        pair: Pair,
    },
    /// Compute lambda(m,n) for a list of pairs.
    ///
    /// CSV columns: schema_version,m,n,lambda,reference,abs_deviation,error
    Table {
        /// Comma-separated pairs such as 2x2,3x2 (default: the 21 reference pairs; empty string for none)
        #[arg(long)]
        pairs: Option<String>,
        /// Also print the published values and the absolute deviations
        #[arg(long)]
        reference: bool,
        /// Worker threads (default: available parallelism)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Sample A(lambda) on a grid.
    ///
    /// CSV columns: schema_version,m,n,lambda,a,target,lower_bound,error
    ACurve {
        #[command(flatten)]
        pair: Pair,
        /// Comma-separated lambda values (>= 0)
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        lambdas: Vec<f64>,
    },
    /// Stability verdict for a closed factor with first eigenvalue lambda_1.
    ///
    /// CSV columns: schema_version,m,n,lambda_1,lambda,verdict,band,yamabe_metric_sufficient,bracket_lo,bracket_hi,tol_lambda,tol_beta,rtol,atol
    CheckStability {
        #[command(flatten)]
        pair: Pair,
        /// First positive eigenvalue of the Laplacian on M
        #[arg(long = "lambda1")]
        lambda_1: f64,
    },
    /// Integral identities of the ground state.
    ///
    /// CSV columns: schema_version,m,n,l2_sq,lp_p,grad_sq,energy,residual_gradient_l2,residual_gradient_lp,residual_l2_lp
    VerifyIdentities {
        #[command(flatten)]
        pair: Pair,
    },
    /// Restricted Yamabe constant s_g (vol_M ||f||_p^p)^(2/N) and the
    /// Gagliardo-Nirenberg best constant.
    ///
    /// CSV columns: schema_version,m,n,vol_m,lp_p,yamabe_constant,gn_constant
    YamabeConstant {
        #[command(flatten)]
        pair: Pair,
        /// Volume of (M, g)
        #[arg(long)]
        vol_m: f64,
    },
    /// Classify the linear radial solution at a single lambda.
    ///
    /// CSV columns: schema_version,m,n,lambda,class,event_t,event_u.
    /// Trajectory file columns: schema_version,t,u,du
    Classify {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Write uniformly sampled (t, u, u') rows to this CSV file
        #[arg(long)]
        trajectory: Option<std::path::PathBuf>,
        /// Sample spacing of the trajectory file
        #[arg(long, default_value_t = 0.01)]
        spacing: f64,
    },
}

impl Common {
    pub fn settings(&self) -> SolverSettings<f64> {
        let tolerances = Tolerances {
            rtol: self.rtol,
            atol: self.atol,
            ..Tolerances::default()
        };
        SolverSettings {
            shooting: Shooting {
                tol_beta: self.tol_beta,
                tolerances,
                grid_nodes: self.grid_nodes,
                ..Shooting::default()
            },
            stability: Stability {
                tol: self.tol_lambda,
                tolerances,
                horizon: self.horizon,
                ..Stability::default()
            },
        }
    }
}
