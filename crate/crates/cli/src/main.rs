//! `graphchan` — generation, entropy computation, Gamma auditing, and the
//! experiment suite, with file-based reproducible I/O.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible budget,
//! 4 a verdict-bearing command reported failure.

mod parse;

use clap::{Parser, Subcommand};
use graphchan::engine::{self, DEFAULT_EXACT_BUDGET};
use graphchan::experiments::{self, ExperimentResult, Verdict};
use graphchan::formats;
use graphchan::gamma::{check_convexity, gamma_bruteforce, gamma_bruteforce_raw, ConvexityTol, ConvexityVerdict};
use graphchan::hypergraph::{sample_poisson, EnsembleParams, Hypergraph};
use graphchan::{rng, Error};
use parse::{parse_grid, parse_kernel, parse_nu};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERDICT: u8 = 4;

#[derive(Parser)]
#[command(name = "graphchan", version, about = "Graphical channels: planted CSPs, block models, LDGM codes")]
struct Cli {
    /// Worker thread cap (0 = all cores). Results never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance and write instance JSON (plus DIMACS for
    /// CSP kernels) with a manifest.
    Gen {
        /// Kernel spec: ksat:K | nae:K | xor:K | sbm:A:B:GAMMA | bsc:P:K |
        /// bec:E:K | @kernel.json
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n: usize,
        /// Edge density; the expected edge-copy count is alpha * n.
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Conditional entropy H(X|Y) in bits: of the empty graph (default),
    /// of a stored instance's observations, or of the Poisson ensemble.
    Entropy {
        #[arg(long)]
        kernel: String,
        /// Graph to condition on: `empty` or `@graph.json`.
        #[arg(long, default_value = "empty")]
        graph: String,
        #[arg(long, required_unless_present = "instance")]
        n: Option<usize>,
        /// Ensemble density; omit for a single empty-graph computation.
        #[arg(long)]
        alpha: Option<f64>,
        /// Graph samples for the ensemble estimate.
        #[arg(long, default_value_t = 200)]
        graphs: u64,
        /// Inner Monte Carlo samples per graph over the exact budget.
        #[arg(long, default_value_t = 200)]
        inner: u64,
        /// Compute H(X|Y=y) for this stored instance instead.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Posterior-evaluation cap for exact enumeration.
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET as u64)]
        exact_budget: u64,
    },
    /// Count satisfying assignments of a stored CSP instance.
    Count {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Evaluate Gamma_l(nu) by exact direct summation.
    Gamma {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        l: usize,
        /// uniform | point:<bits> | [json,array] | @file.json
        #[arg(long, default_value = "uniform")]
        nu: String,
    },
    /// Randomized convexity audit of Gamma_l; exits 4 when a
    /// counterexample is found.
    Convexity {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full JSON report (bit-exact witnesses) here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Subadditivity check: H^(n) <= H^(n1) + H^(n2) for the Poisson
    /// ensemble.
    Subadd {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 500)]
        graphs: u64,
        #[arg(long, default_value_t = 200)]
        inner: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Concentration of H/n across graph seeds over an n grid.
    Concentrate {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        alpha: f64,
        /// Comma-separated, e.g. 6,10,14.
        #[arg(long)]
        n_grid: String,
        #[arg(long, default_value_t = 200)]
        seeds_per_n: u64,
        #[arg(long, default_value_t = 200)]
        inner: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Canonical-path interpolation: finite-difference dH/dt vs the
    /// derivative formula.
    Interp {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        alpha: f64,
        /// Comma-separated, strictly increasing, e.g. 0,0.25,0.5,0.75,1.
        #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
        t_grid: String,
        #[arg(long, default_value_t = 500)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Block-model coupling and kernel-scale comparison.
    Sbm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Scale of the three-symbol coupling variables (needs
        /// max(a,b) <= 2*gamma_z <= n).
        #[arg(long)]
        gamma_z: f64,
        /// Kernel scales for the entropy-gap trend, e.g. 5,8,16.
        #[arg(long)]
        gamma_list: String,
        #[arg(long, default_value_t = 100)]
        graphs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// LDGM sweep: two independent routes to (1/m) I(X;Y) per alpha.
    Ldgm {
        #[arg(long)]
        k: usize,
        /// BSC crossover probability of the outer channel.
        #[arg(long, conflicts_with = "bec")]
        bsc: Option<f64>,
        /// BEC erasure probability of the outer channel.
        #[arg(long)]
        bec: Option<f64>,
        #[arg(long)]
        n: usize,
        /// Comma-separated, e.g. 0.5,1.
        #[arg(long)]
        alpha_grid: String,
        #[arg(long, default_value_t = 2000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::BudgetExceeded { .. } => EXIT_INFEASIBLE,
                _ => EXIT_CONFIG,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> graphchan::Result<u8> {
    match command {
        Command::Gen { kernel, n, alpha, seed, out } => cmd_gen(&kernel, n, alpha, seed, &out),
        Command::Entropy {
            kernel,
            graph,
            n,
            alpha,
            graphs,
            inner,
            instance,
            seed,
            exact_budget,
        } => cmd_entropy(
            &kernel,
            &graph,
            n,
            alpha,
            graphs,
            inner,
            instance.as_deref(),
            seed,
            exact_budget as u128,
        ),
        Command::Count { instance } => {
            let inst = formats::read_instance(&instance)?;
            let count = engine::count_solutions(&inst.graph, &inst.kernel, &inst.y)?;
            println!("{count}");
            Ok(0)
        }
        Command::Gamma { kernel, l, nu } => {
            let q = parse_kernel(&kernel)?;
            let dist = parse_nu(&nu, l)?;
            println!("{}", gamma_bruteforce(&q, l, &dist)?);
            Ok(0)
        }
        Command::Convexity { kernel, l, trials, seed, report } => {
            cmd_convexity(&kernel, l, trials, seed, report.as_deref())
        }
        Command::Subadd { kernel, n, n1, n2, alpha, graphs, inner, seed, out } => {
            let q = parse_kernel(&kernel)?;
            let result = experiments::subadditivity_experiment(
                n, n1, n2, q.k(), alpha, &q, graphs, inner, seed,
            )?;
            emit_experiment(&result, &out)
        }
        Command::Concentrate { kernel, alpha, n_grid, seeds_per_n, inner, seed, out } => {
            let q = parse_kernel(&kernel)?;
            let grid = parse_grid::<usize>(&n_grid, "n")?;
            let result = experiments::concentration_experiment(
                &q, alpha, q.k(), &grid, seeds_per_n, inner, seed,
            )?;
            emit_experiment(&result, &out)
        }
        Command::Interp { kernel, n1, n2, alpha, t_grid, samples, seed, out } => {
            let q = parse_kernel(&kernel)?;
            let grid = parse_grid::<f64>(&t_grid, "t")?;
            let result = experiments::interpolation_experiment(
                n1, n2, q.k(), alpha, &q, &grid, samples, seed,
            )?;
            emit_experiment(&result, &out)
        }
        Command::Sbm { n, a, b, gamma_z, gamma_list, graphs, seed, out } => {
            let gammas = parse_grid::<f64>(&gamma_list, "gamma")?;
            let result = experiments::sbm_compare(n, a, b, gamma_z, &gammas, graphs, seed)?;
            emit_experiment(&result, &out)
        }
        Command::Ldgm { k, bsc, bec, n, alpha_grid, samples, seed, out } => {
            let w = match (bsc, bec) {
                (Some(p), None) => graphchan::biso::BisoChannel::bsc(p)?,
                (None, Some(e)) => graphchan::biso::BisoChannel::bec(e)?,
                _ => {
                    return Err(Error::InvalidParameter(
                        "pick exactly one outer channel: --bsc P or --bec E".into(),
                    ))
                }
            };
            let grid = parse_grid::<f64>(&alpha_grid, "alpha")?;
            let result = experiments::ldgm_experiment(k, &w, n, &grid, samples, seed)?;
            emit_experiment(&result, &out)
        }
    }
}

fn cmd_gen(kernel_spec: &str, n: usize, alpha: f64, seed: u64, out: &Path) -> graphchan::Result<u8> {
    let kernel = parse_kernel(kernel_spec)?;
    let params = EnsembleParams { n, k: kernel.k(), alpha };
    params.validate()?;
    let mut r = rng::root(seed);
    let graph = sample_poisson(&params, &mut r)?;
    let instance = engine::sample_instance(&graph, &kernel, &mut r)?;
    std::fs::create_dir_all(out)?;

    let mut outputs = Vec::new();
    let json_path = out.join("instance.json");
    formats::write_instance(&json_path, &instance)?;
    outputs.push(hash_entry(&json_path)?);
    if kernel.tag().is_csp() {
        let cnf_path = out.join("instance.cnf");
        std::fs::write(&cnf_path, formats::to_dimacs(&instance)?)?;
        outputs.push(hash_entry(&cnf_path)?);
    }
    let manifest = formats::Manifest {
        command: "gen".into(),
        params: serde_json::json!({
            "kernel": kernel_spec, "n": n, "alpha": alpha,
        }),
        seed,
        file_hashes: outputs.clone(),
        verdicts: Vec::new(),
        outputs: outputs.iter().map(|(p, _)| p.clone()).collect(),
    };
    formats::write_manifest(&out.join("gen.manifest.json"), &manifest)?;
    println!(
        "wrote {} ({} edge copies, planted 0x{:016x})",
        json_path.display(),
        instance.graph.total_copies(),
        instance.x
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_entropy(
    kernel_spec: &str,
    graph_spec: &str,
    n: Option<usize>,
    alpha: Option<f64>,
    graphs: u64,
    inner: u64,
    instance: Option<&Path>,
    seed: u64,
    budget: u128,
) -> graphchan::Result<u8> {
    let kernel = parse_kernel(kernel_spec)?;
    if let Some(path) = instance {
        let inst = formats::read_instance(path)?;
        println!("{:?}", engine::entropy_given_y(&inst.graph, &inst.kernel, &inst.y)?);
        return Ok(0);
    }
    let n = n.expect("clap requires --n without --instance");
    match alpha {
        None => {
            let graph = if let Some(path) = graph_spec.strip_prefix('@') {
                let g: Hypergraph = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                g
            } else if graph_spec == "empty" {
                Hypergraph::empty(n, kernel.k())
            } else {
                return Err(Error::InvalidParameter(format!(
                    "graph spec `{graph_spec}`: expected empty or @file"
                )));
            };
            let est = engine::exact_conditional_entropy(&graph, &kernel, budget)?;
            println!("{:?}", est.value);
        }
        Some(alpha) => {
            let params = EnsembleParams { n, k: kernel.k(), alpha };
            let est = engine::ensemble_entropy(&params, &kernel, graphs, inner, seed, budget)?;
            println!("{:?} {:?}", est.value, est.stderr);
        }
    }
    Ok(0)
}

fn cmd_convexity(
    kernel_spec: &str,
    l: usize,
    trials: u64,
    seed: u64,
    report_path: Option<&Path>,
) -> graphchan::Result<u8> {
    let kernel = parse_kernel(kernel_spec)?;
    if kernel.k() * l > 20 {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << (kernel.k() * l),
            budget: 1 << 20,
        });
    }
    let report = check_convexity(
        |nu| gamma_bruteforce_raw(&kernel, l, nu),
        l,
        trials,
        seed,
        ConvexityTol::default(),
    );
    println!(
        "verdict: {} (trials {}, worst midpoint gap {:.3e}, worst second difference {:.3e})",
        match report.verdict {
            ConvexityVerdict::ConvexNoCounterexampleFound => "convex-no-counterexample-found",
            ConvexityVerdict::NonConvex => "non-convex",
        },
        report.trials,
        report.worst_midpoint_gap,
        report.worst_second_difference,
    );
    if let Some(path) = report_path {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(path, text)?;
        println!("report: {}", path.display());
    }
    Ok(match report.verdict {
        ConvexityVerdict::ConvexNoCounterexampleFound => 0,
        ConvexityVerdict::NonConvex => EXIT_VERDICT,
    })
}

fn hash_entry(path: &Path) -> graphchan::Result<(String, String)> {
    let bytes = std::fs::read(path)?;
    Ok((
        path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        formats::content_hash(&bytes),
    ))
}

/// Prints an experiment, writes its CSV + manifest, maps the verdict to the
/// exit code.
fn emit_experiment(result: &ExperimentResult, out: &Path) -> graphchan::Result<u8> {
    std::fs::create_dir_all(out)?;
    let csv_path = out.join(format!("{}.csv", result.name));
    let header: Vec<&str> = result.columns.iter().map(String::as_str).collect();
    formats::write_csv(&csv_path, &header, &result.csv_rows())?;
    let manifest = formats::Manifest {
        command: result.name.clone(),
        params: result.params.clone(),
        seed: result.seed,
        file_hashes: vec![hash_entry(&csv_path)?],
        verdicts: vec![format!("{:?}", result.verdict).to_lowercase()],
        outputs: vec![csv_path.file_name().unwrap().to_string_lossy().into_owned()],
    };
    formats::write_manifest(&out.join(format!("{}.manifest.json", result.name)), &manifest)?;

    println!("{}", result.columns.join(","));
    for row in result.csv_rows() {
        println!("{}", row.join(","));
    }
    for note in &result.notes {
        println!("note: {note}");
    }
    let verdict = match result.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Informational => "informational",
    };
    println!("verdict: {verdict}");
    Ok(if result.verdict == Verdict::Fail { EXIT_VERDICT } else { 0 })
}
