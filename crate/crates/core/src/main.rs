use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

use dfokit::cli;
use dfokit::error::Error;

#[derive(Parser)]
#[command(
    name = "dfokit",
    version,
    about = "Derivative-free optimization toolkit for fixed-structure filter synthesis \
             on discrete-time LTI systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a filter against a problem: norm, peak frequency,
    /// feasibility flags, and the D-hat-only truncation diagnostic
    Eval {
        /// Problem file (TOML)
        #[arg(long)]
        problem: PathBuf,
        /// Filter: a point/filter file path, or "lls10" / "dfo" for the
        /// built-in published filters
        #[arg(long)]
        filter: String,
    },
    /// One optimization run from one seeded random start
    Synth {
        #[arg(long)]
        problem: PathBuf,
        /// nm | nm-restart | mds | mads | cd
        #[arg(long)]
        method: String,
        /// Master seed; all randomness derives from it
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluation budget
        #[arg(long, default_value_t = 4000)]
        budget: usize,
        /// Start from this filter/point file instead of a random start
        #[arg(long)]
        from: Option<PathBuf>,
        /// Record output path (JSON lines)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multistart benchmark with a shared start set across methods
    Bench {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated method list
        #[arg(long, default_value = "nm,nm-restart,mds,mads,cd")]
        methods: String,
        #[arg(long, default_value_t = 100)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference stationarity probe at a point
    Probe {
        #[arg(long)]
        problem: PathBuf,
        /// Point/filter file to probe
        #[arg(long)]
        point: PathBuf,
        /// Random directions sampled beyond the signed coordinate set
        #[arg(long, default_value_t = 256)]
        directions: usize,
        /// Comma-separated decreasing radii
        #[arg(long, default_value = "1e-2,1e-4,1e-6")]
        radii: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Estimates at or below this classify the point as non-stationary
        #[arg(long, default_value_t = -1e-3, allow_hyphen_values = true)]
        threshold: f64,
    },
    /// Coordinate-descent stall demonstration; exits 0 only if the expected
    /// separation between coordinate descent and the joint methods holds
    StallDemo {
        #[arg(long, default_value_t = 50_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_radii(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(format!("bad radius \"{s}\": {e}")))
        })
        .collect()
}

fn main() {
    if let Ok(threads) = std::env::var("DFOKIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }

    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Eval { problem, filter } => cli::cmd_eval(&problem, &filter),
        Cmd::Synth {
            problem,
            method,
            seed,
            budget,
            from,
            out,
        } => cli::cmd_synth(&problem, &method, seed, budget, from.as_deref(), out.as_deref()),
        Cmd::Bench {
            problem,
            methods,
            starts,
            seed,
            budget,
            out,
        } => cli::cmd_bench(&problem, &methods, starts, seed, budget, out.as_deref()),
        Cmd::Probe {
            problem,
            point,
            directions,
            radii,
            seed,
            threshold,
        } => match parse_radii(&radii) {
            Ok(r) => cli::cmd_probe(&problem, &point, directions, &r, seed, threshold),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Cmd::StallDemo { budget, seed, out } => cli::cmd_stall_demo(budget, seed, out.as_deref()),
    };
    exit(code);
}
