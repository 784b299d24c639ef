//! Desk-scale experiment drivers: subadditivity, concentration, bounded
//! differences, interpolation derivatives, block-model coupling, and the
//! LDGM identity sweep.
//!
//! Every experiment is a pure function of its parameters and a 64-bit seed;
//! trial loops parallelize by index with derived RNG streams, so result rows
//! are bit-identical regardless of worker count. Statistical verdicts use
//! 3-4 sigma bands; inequality checks that theorems guarantee report `Fail`
//! loudly, since a violation indicates an implementation bug.

use crate::biso::BisoChannel;
use crate::engine::{
    self, entropy_given_y, per_graph_entropy, posterior, sample_instance, DEFAULT_EXACT_BUDGET,
};
use crate::hypergraph::{
    random_subset, sample_inhomogeneous, sample_poisson, CanonicalPath, EnsembleParams, Hypergraph,
};
use crate::kernels::{make_encoded_kernel, Kernel, KernelTag};
use crate::rng;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Outcome of an experiment's built-in checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The experiment reports a trend without a theorem-backed direction.
    Informational,
}

/// Uniform result container: named numeric rows plus a verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    /// Full parameter echo.
    pub params: serde_json::Value,
    pub seed: u64,
    /// Column names for `rows`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub verdict: Verdict,
    /// Human-readable observations (endpoint checks, discarded draws, ...).
    pub notes: Vec<String>,
    /// Not part of the reproducible payload.
    pub wall_seconds: f64,
}

impl ExperimentResult {
    /// Rows rendered for CSV output; reproducible byte-for-byte.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|v| format!("{v}")).collect())
            .collect()
    }
}

fn elapsed(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Checks `H^(n) <= H^(n1) + H^(n2)` for the Poisson ensemble by estimating
/// all three ensemble entropies; pass iff the inequality holds within a
/// 3-sigma band.
pub fn subadditivity_experiment(
    n: usize,
    n1: usize,
    n2: usize,
    k: usize,
    alpha: f64,
    kernel: &Kernel,
    graph_samples: u64,
    inner_samples: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    if n != n1 + n2 {
        return Err(Error::InvalidParameter(format!(
            "partition mismatch: {n} != {n1} + {n2}"
        )));
    }
    let sizes = [n, n1, n2];
    let mut rows = Vec::new();
    for (j, &size) in sizes.iter().enumerate() {
        let params = EnsembleParams { n: size, k, alpha };
        let est = engine::ensemble_entropy(
            &params,
            kernel,
            graph_samples,
            inner_samples,
            rng::mix(seed, j as u64),
            DEFAULT_EXACT_BUDGET,
        )?;
        rows.push(vec![size as f64, est.value, est.stderr]);
    }
    let (h, se) = (rows[0][1], rows[0][2]);
    let (h1, se1) = (rows[1][1], rows[1][2]);
    let (h2, se2) = (rows[2][1], rows[2][2]);
    let band = 3.0 * (se * se + se1 * se1 + se2 * se2).sqrt();
    let verdict = if h <= h1 + h2 + band { Verdict::Pass } else { Verdict::Fail };
    Ok(ExperimentResult {
        name: "subadditivity".into(),
        params: json!({
            "n": n, "n1": n1, "n2": n2, "k": k, "alpha": alpha,
            "kernel": kernel, "graph_samples": graph_samples,
            "inner_samples": inner_samples,
        }),
        seed,
        columns: vec!["n".into(), "entropy".into(), "stderr".into()],
        rows,
        verdict,
        notes: vec![format!(
            "lhs {h} vs rhs {} (3-sigma band {band})",
            h1 + h2
        )],
        wall_seconds: elapsed(start),
    })
}

/// Per-`n` mean and standard deviation of `H_G(X|Y)/n` across graph seeds;
/// pass iff the std is non-increasing along the grid within 20% slack.
pub fn concentration_experiment(
    kernel: &Kernel,
    alpha: f64,
    k: usize,
    n_grid: &[usize],
    seeds_per_n: u64,
    inner_samples: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    let mut rows = Vec::new();
    for (j, &n) in n_grid.iter().enumerate() {
        let params = EnsembleParams { n, k, alpha };
        params.validate()?;
        let grid_seed = rng::mix(seed, j as u64);
        let values: Vec<f64> = (0..seeds_per_n)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(grid_seed, 2 * i);
                let graph = sample_poisson(&params, &mut r).expect("params valid");
                per_graph_entropy(
                    &graph,
                    kernel,
                    inner_samples,
                    rng::mix(grid_seed, 2 * i + 1),
                    DEFAULT_EXACT_BUDGET,
                )
                .map(|h| h / n as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var =
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        rows.push(vec![n as f64, mean, var.sqrt()]);
    }
    let verdict = if rows.windows(2).all(|w| w[1][2] <= 1.2 * w[0][2]) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ExperimentResult {
        name: "concentration".into(),
        params: json!({
            "kernel": kernel, "alpha": alpha, "k": k, "n_grid": n_grid,
            "seeds_per_n": seeds_per_n, "inner_samples": inner_samples,
        }),
        seed,
        columns: vec!["n".into(), "mean_entropy_rate".into(), "std_entropy_rate".into()],
        rows,
        verdict,
        notes: Vec::new(),
        wall_seconds: elapsed(start),
    })
}

/// Adds one random edge copy to random instances and checks the martingale
/// increment bound `|Delta H| <= log2 q`.
pub fn bounded_difference_experiment(
    kernel: &Kernel,
    n: usize,
    k: usize,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    let params = EnsembleParams { n, k, alpha };
    params.validate()?;
    let samples: Vec<(f64, u64)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, u64)> {
            // a fat Poisson tail occasionally makes exact enumeration
            // infeasible; redraw the configuration (deterministically, from
            // per-attempt streams) rather than estimate
            for attempt in 0u64.. {
                let mut r = rng::stream(rng::mix(seed, i), attempt);
                let graph = sample_poisson(&params, &mut r)?;
                let before =
                    match engine::exact_conditional_entropy(&graph, kernel, DEFAULT_EXACT_BUDGET) {
                        Err(Error::BudgetExceeded { .. }) => continue,
                        other => other?,
                    };
                let subset = random_subset(n, k, &mut r);
                let extended = graph.with_extra_copy(&subset)?;
                let after = match engine::exact_conditional_entropy(
                    &extended,
                    kernel,
                    DEFAULT_EXACT_BUDGET,
                ) {
                    Err(Error::BudgetExceeded { .. }) => continue,
                    other => other?,
                };
                return Ok((after.value - before.value, attempt));
            }
            unreachable!("the redraw loop returns")
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs = samples.iter().fold(0.0f64, |m, &(d, _)| m.max(d.abs()));
    let redraws: u64 = samples.iter().map(|&(_, a)| a).sum();
    let bound = (kernel.q() as f64).log2();
    let verdict = if max_abs <= bound + 1e-9 { Verdict::Pass } else { Verdict::Fail };
    Ok(ExperimentResult {
        name: "bounded-difference".into(),
        params: json!({
            "kernel": kernel, "n": n, "k": k, "alpha": alpha, "trials": trials,
        }),
        seed,
        columns: vec!["trials".into(), "max_abs_delta".into(), "bound".into()],
        rows: vec![vec![trials as f64, max_abs, bound]],
        verdict,
        notes: if redraws > 0 {
            vec![format!("{redraws} infeasible configurations redrawn")]
        } else {
            Vec::new()
        },
        wall_seconds: elapsed(start),
    })
}

/// One grid point of the interpolation experiment.
struct InterpPoint {
    h: f64,
    h_se: f64,
    rhs: f64,
    rhs_se: f64,
    edge_copy_mean: f64,
    crossing_edges: u64,
}

/// Verifies the canonical-path derivative formula: the centered finite
/// difference of `H(X|Y(t))` matches
/// `alpha(n E_I H(Y_I|Y) - n1 E_{I1} H(Y_{I1}|Y) - n2 E_{I2} H(Y_{I2}|Y))`
/// within 4 sigma at interior grid points. `H(Y_I|Y)` is computed through
/// the probe identity `H(Y_I|Y) = H(X|Y) - H(X|Y,Y_I) + H(Q)`.
///
/// Also asserts the endpoint laws: the edge-copy count at `t = 0` matches
/// `Poisson(alpha n)` in mean (3 sigma) and no sample at `t = 1` contains a
/// crossing edge.
pub fn interpolation_experiment(
    n1: usize,
    n2: usize,
    k: usize,
    alpha: f64,
    kernel: &Kernel,
    t_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    let path = CanonicalPath::new(n1, n2, k, alpha)?;
    let n = path.n();
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("t grid must be strictly increasing".into()));
    }
    let hq = kernel.entropy();
    let points: Vec<InterpPoint> = t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| -> Result<InterpPoint> {
            let map = path.intensity(t)?;
            let point_seed = rng::mix(seed, j as u64);
            let per_sample: Vec<(f64, f64, u64, u64)> = (0..samples)
                .into_par_iter()
                .map(|i| -> Result<(f64, f64, u64, u64)> {
                    let mut r = rng::stream(point_seed, i);
                    let graph = sample_inhomogeneous(&map, &mut r)?;
                    let crossing = graph
                        .edges
                        .iter()
                        .filter(|(s, _)| {
                            s.iter().any(|&v| v < n1) && s.iter().any(|&v| v >= n1)
                        })
                        .map(|&(_, m)| m as u64)
                        .sum();
                    let inner = |tag: u64| rng::mix(point_seed, samples + 5 * i + tag);
                    let h = per_graph_entropy(
                        &graph,
                        kernel,
                        400,
                        inner(1),
                        DEFAULT_EXACT_BUDGET,
                    )?;
                    // one probe per class, uniform within the class
                    let probe_all = random_subset(n, k, &mut r);
                    let probe_v1 = random_subset(n1, k, &mut r);
                    let mut probe_v2 = random_subset(n2, k, &mut r);
                    for v in &mut probe_v2 {
                        *v += n1;
                    }
                    let mut predictive = [0.0f64; 3];
                    for (slot, probe) in [probe_all, probe_v1, probe_v2].iter().enumerate() {
                        let extended = graph.with_extra_copy(probe)?;
                        let h_probe = per_graph_entropy(
                            &extended,
                            kernel,
                            400,
                            inner(2 + slot as u64),
                            DEFAULT_EXACT_BUDGET,
                        )?;
                        predictive[slot] = h - h_probe + hq;
                    }
                    let rhs = alpha
                        * (n as f64 * predictive[0]
                            - n1 as f64 * predictive[1]
                            - n2 as f64 * predictive[2]);
                    Ok((h, rhs, graph.total_copies() as u64, crossing))
                })
                .collect::<Result<Vec<_>>>()?;
            let hs: Vec<f64> = per_sample.iter().map(|p| p.0).collect();
            let rhss: Vec<f64> = per_sample.iter().map(|p| p.1).collect();
            let (h, h_se) = engine::mean_stderr(&hs);
            let (rhs, rhs_se) = engine::mean_stderr(&rhss);
            let edge_copy_mean = per_sample.iter().map(|p| p.2 as f64).sum::<f64>()
                / per_sample.len() as f64;
            let crossing_edges = per_sample.iter().map(|p| p.3).sum();
            Ok(InterpPoint { h, h_se, rhs, rhs_se, edge_copy_mean, crossing_edges })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut verdict = Verdict::Pass;
    let mut notes = Vec::new();
    for (j, (&t, p)) in t_grid.iter().zip(&points).enumerate() {
        let (mut fd, mut fd_sigma, mut gap_sigmas) = (f64::NAN, f64::NAN, f64::NAN);
        if j > 0 && j + 1 < points.len() {
            let span = t_grid[j + 1] - t_grid[j - 1];
            fd = (points[j + 1].h - points[j - 1].h) / span;
            fd_sigma = (points[j + 1].h_se.powi(2) + points[j - 1].h_se.powi(2)).sqrt() / span;
            let sigma = (fd_sigma.powi(2) + p.rhs_se.powi(2)).sqrt();
            gap_sigmas = (fd - p.rhs).abs() / sigma;
            if gap_sigmas > 4.0 {
                verdict = Verdict::Fail;
                notes.push(format!(
                    "derivative mismatch at t={t}: fd {fd} vs rhs {} ({gap_sigmas:.2} sigma)",
                    p.rhs
                ));
            }
        }
        rows.push(vec![t, p.h, p.h_se, p.rhs, p.rhs_se, fd, fd_sigma, gap_sigmas]);
    }
    // endpoint laws
    if let Some(first) = t_grid.first().zip(points.first()) {
        if *first.0 == 0.0 {
            let mean = first.1.edge_copy_mean;
            let expect = alpha * n as f64;
            let sigma = (expect / samples as f64).sqrt();
            if (mean - expect).abs() > 3.0 * sigma {
                verdict = Verdict::Fail;
                notes.push(format!(
                    "t=0 edge-copy mean {mean} outside 3 sigma of Poisson mean {expect}"
                ));
            } else {
                notes.push(format!("t=0 edge-copy mean {mean} matches Poisson mean {expect}"));
            }
        }
    }
    if let Some(last) = t_grid.last().zip(points.last()) {
        if *last.0 == 1.0 {
            if last.1.crossing_edges > 0 {
                verdict = Verdict::Fail;
                notes.push(format!(
                    "t=1 produced {} crossing edge copies",
                    last.1.crossing_edges
                ));
            } else {
                notes.push("t=1 crossing-edge count is 0 on every sample".into());
            }
        }
    }
    Ok(ExperimentResult {
        name: "interpolation".into(),
        params: json!({
            "n1": n1, "n2": n2, "k": k, "alpha": alpha, "kernel": kernel,
            "t_grid": t_grid, "samples": samples,
        }),
        seed,
        columns: vec![
            "t".into(),
            "entropy".into(),
            "entropy_stderr".into(),
            "rhs".into(),
            "rhs_stderr".into(),
            "finite_difference".into(),
            "fd_stderr".into(),
            "gap_sigmas".into(),
        ],
        rows,
        verdict,
        notes,
        wall_seconds: elapsed(start),
    })
}

/// A planted bisection sample: two-symbol adjacency observations, or the
/// three-symbol coupling variables `Z in {0, 1, *}` when `gamma` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbmInstance {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    /// Three-symbol scale; `None` for the plain block model.
    pub gamma: Option<f64>,
    /// Planted group assignment.
    #[serde(with = "crate::formats::hex_u64")]
    pub x: u64,
    /// One symbol per pair `i < j` in lexicographic order; symbol 2 is `*`.
    pub obs: Vec<usize>,
}

/// Pairs `i < j` of `[0, n)` in lexicographic order.
pub fn vertex_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// The complete pair graph on `[0, n)`.
pub fn complete_pair_graph(n: usize) -> Hypergraph {
    Hypergraph {
        n,
        k: 2,
        edges: vertex_pairs(n).into_iter().map(|(i, j)| (vec![i, j], 1)).collect(),
    }
}

/// Pair-observation kernel of the plain block model: symbol 1 (an edge) with
/// probability `a/n` when the endpoints agree and `b/n` otherwise. Built
/// directly so `a = 0` (no intra-group edges) stays legal.
pub fn sbm_pair_kernel(n: usize, a: f64, b: f64) -> Result<Kernel> {
    let rows = (0..4usize)
        .map(|u| {
            let p = if u & 1 == (u >> 1) & 1 { a } else { b } / n as f64;
            vec![1.0 - p, p]
        })
        .collect();
    Kernel::new(KernelTag::Sbm, 2, 2, rows)
}

/// Three-symbol coupling kernel: `1` with probability `a/n` (or `b/n`),
/// `0` with probability `(2 gamma - a)/n`, `*` with the rest.
pub fn sbm_coupling_kernel(n: usize, a: f64, b: f64, gamma: f64) -> Result<Kernel> {
    if 2.0 * gamma > n as f64 || 2.0 * gamma < a.max(b) {
        return Err(Error::InvalidParameter(format!(
            "coupling kernel needs max(a,b) <= 2*gamma <= n; got a={a}, b={b}, gamma={gamma}, n={n}"
        )));
    }
    let rows = (0..4usize)
        .map(|u| {
            let c = if u & 1 == (u >> 1) & 1 { a } else { b };
            vec![
                (2.0 * gamma - c) / n as f64,
                c / n as f64,
                1.0 - 2.0 * gamma / n as f64,
            ]
        })
        .collect();
    Kernel::new(KernelTag::Custom, 2, 3, rows)
}

impl SbmInstance {
    /// Observation kernel matching this instance's symbol alphabet.
    pub fn kernel(&self) -> Result<Kernel> {
        match self.gamma {
            None => sbm_pair_kernel(self.n, self.a, self.b),
            Some(g) => sbm_coupling_kernel(self.n, self.a, self.b, g),
        }
    }

    /// Observations regrouped for the complete pair graph.
    pub fn observation(&self) -> Vec<Vec<usize>> {
        self.obs.iter().map(|&z| vec![z]).collect()
    }

    /// Number of observed edges (symbol 1).
    pub fn edge_count(&self) -> usize {
        self.obs.iter().filter(|&&z| z == 1).count()
    }

    /// Projects three-symbol observations onto the plain model:
    /// an edge exactly where `Z = 1`.
    pub fn project(&self) -> SbmInstance {
        SbmInstance {
            n: self.n,
            a: self.a,
            b: self.b,
            gamma: None,
            x: self.x,
            obs: self.obs.iter().map(|&z| usize::from(z == 1)).collect(),
        }
    }

    /// Exact posterior entropy `H(X | obs)` in bits.
    pub fn posterior_entropy(&self) -> Result<f64> {
        let graph = complete_pair_graph(self.n);
        entropy_given_y(&graph, &self.kernel()?, &self.observation())
    }
}

/// Draws a planted bisection sample; with `gamma` set, draws the
/// three-symbol coupling variables instead.
pub fn sbm_sample(
    n: usize,
    a: f64,
    b: f64,
    gamma: Option<f64>,
    rng: &mut impl Rng,
) -> Result<SbmInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter("block model needs n >= 2".into()));
    }
    if !(0.0..=n as f64).contains(&a) || !(0.0..=n as f64).contains(&b) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= a, b <= n; got a={a}, b={b}, n={n}"
        )));
    }
    let kernel = match gamma {
        None => sbm_pair_kernel(n, a, b)?,
        Some(g) => sbm_coupling_kernel(n, a, b, g)?,
    };
    let x: u64 = rng.random::<u64>() & ((1u64 << n) - 1);
    let obs = vertex_pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let u = ((x >> i & 1) | (x >> j & 1) << 1) as usize;
            kernel.sample(u, rng)
        })
        .collect();
    Ok(SbmInstance { n, a, b, gamma, x, obs })
}

/// Compares the block model against its graphical-channel surrogates.
///
/// Per seed, draws the three-symbol coupling variables `Z` at `gamma_z` and
/// projects them to the adjacency observations `Y = 1{Z = 1}`; `X - Z - Y`
/// is a Markov chain. Two checks run on the exact posterior entropies:
/// the averaged data-processing inequality `E[H(X|Z)] <= E[H(X|Y)]` (3-sigma
/// band on the paired differences), and the pointwise comparison
/// `H(X|Z=z) <= H(X|Y=f(z))` on every seed. The pointwise form is only
/// guaranteed at the boundary `2 gamma_z = n`, where no `*` symbols occur
/// and `Z` coincides with `Y`; below the boundary an unlucky `z` (many `*`
/// erasures) can carry less evidence than `y`, and a measured violation is
/// reported, not suppressed. Separately, for each `gamma` in
/// `gamma_list`, estimates `|H(X|Y) - H(X|Y_gamma)|` where `Y_gamma` is the
/// graphical channel with ensemble `P_2(gamma, n)` and the SBM kernel, using
/// a shared planted assignment per seed; the trend in `gamma` is reported as
/// informational.
pub fn sbm_compare(
    n: usize,
    a: f64,
    b: f64,
    gamma_z: f64,
    gamma_list: &[f64],
    graph_samples: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    for &g in gamma_list {
        if g < a.max(b) {
            return Err(Error::InvalidParameter(format!(
                "kernel scale gamma={g} below max(a,b)={}",
                a.max(b)
            )));
        }
    }
    // part 1: pointwise data-processing check through the coupling
    let coupling: Vec<(f64, f64)> = (0..graph_samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut r = rng::stream(rng::mix(seed, 0), i);
            let z = sbm_sample(n, a, b, Some(gamma_z), &mut r)?;
            let h_z = z.posterior_entropy()?;
            let h_y = z.project().posterior_entropy()?;
            Ok((h_z, h_y))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_violation = coupling
        .iter()
        .fold(f64::NEG_INFINITY, |m, &(h_z, h_y)| m.max(h_z - h_y));
    let paired: Vec<f64> = coupling.iter().map(|&(h_z, h_y)| h_z - h_y).collect();
    let (gap_mean, gap_se) = engine::mean_stderr(&paired);
    let averaged_ok = gap_mean <= 3.0 * gap_se + 1e-9;
    let mut verdict = if max_violation <= 1e-9 && averaged_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut notes = vec![
        format!(
            "coupling at gamma_z={gamma_z}: max pointwise H(X|Z) - H(X|Y) = {max_violation:.3e} over {graph_samples} seeds"
        ),
        format!("averaged E[H(X|Z) - H(X|Y)] = {gap_mean:.3e} (stderr {gap_se:.3e})"),
    ];

    // part 2: per-gamma entropy gap with a shared planted assignment
    let mut rows = Vec::new();
    let pair_kernel = sbm_pair_kernel(n, a, b)?;
    let complete = complete_pair_graph(n);
    for (j, &gamma) in gamma_list.iter().enumerate() {
        let chan_kernel = sbm_pair_kernel_scaled(a, b, gamma)?;
        let gamma_seed = rng::mix(seed, 1 + j as u64);
        let diffs: Vec<f64> = (0..graph_samples)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let mut r = rng::stream(gamma_seed, i);
                let x: u64 = r.random::<u64>() & ((1u64 << n) - 1);
                // block-model observation with the shared x
                let y_sbm: Vec<Vec<usize>> = complete
                    .edges
                    .iter()
                    .map(|(s, _)| {
                        let u = engine::extract_input(x, s);
                        vec![pair_kernel.sample(u, &mut r)]
                    })
                    .collect();
                let h_sbm = entropy_given_y(&complete, &pair_kernel, &y_sbm)?;
                // graphical-channel observation with the same x
                let params = EnsembleParams { n, k: 2, alpha: gamma };
                let graph = sample_poisson(&params, &mut r)?;
                let y_chan: Vec<Vec<usize>> = graph
                    .edges
                    .iter()
                    .map(|(s, m)| {
                        let u = engine::extract_input(x, s);
                        (0..*m).map(|_| chan_kernel.sample(u, &mut r)).collect()
                    })
                    .collect();
                let h_chan = entropy_given_y(&graph, &chan_kernel, &y_chan)?;
                Ok(h_sbm - h_chan)
            })
            .collect::<Result<Vec<_>>>()?;
        let (mean, se) = engine::mean_stderr(&diffs);
        rows.push(vec![gamma, mean.abs(), se]);
    }
    for w in rows.windows(2) {
        let band = 3.0 * (w[0][2].powi(2) + w[1][2].powi(2)).sqrt();
        if w[1][1] > w[0][1] + band {
            notes.push(format!(
                "gap increased from gamma={} ({}) to gamma={} ({})",
                w[0][0], w[0][1], w[1][0], w[1][1]
            ));
            if verdict == Verdict::Pass {
                verdict = Verdict::Informational;
            }
        }
    }
    Ok(ExperimentResult {
        name: "sbm-compare".into(),
        params: json!({
            "n": n, "a": a, "b": b, "gamma_z": gamma_z, "gamma_list": gamma_list,
            "graph_samples": graph_samples,
        }),
        seed,
        columns: vec!["gamma".into(), "abs_entropy_gap".into(), "stderr".into()],
        rows,
        verdict,
        notes,
        wall_seconds: elapsed(start),
    })
}

/// SBM kernel `Q(1|u) = a/gamma` (agree) / `b/gamma` (disagree), allowing
/// `a = 0`.
fn sbm_pair_kernel_scaled(a: f64, b: f64, gamma: f64) -> Result<Kernel> {
    let rows = (0..4usize)
        .map(|u| {
            let p = if u & 1 == (u >> 1) & 1 { a } else { b } / gamma;
            vec![1.0 - p, p]
        })
        .collect();
    Kernel::new(KernelTag::Sbm, 2, 2, rows)
}

/// LDGM sweep: per `alpha`, estimates `(1/m) I(X;Y)` through two
/// independent routes — `(n - H(X|Y))/m` and `H(Y)/m - H(W)` — on disjoint
/// sample streams, and checks that they agree within 4 sigma. Graphs with
/// zero realized edge copies are discarded and counted.
pub fn ldgm_experiment(
    k: usize,
    w: &BisoChannel,
    n: usize,
    alpha_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    let kernel = make_encoded_kernel(w, k)?;
    let hw = w.entropy();
    let capacity = 1.0 - hw;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut verdict = Verdict::Pass;
    for (j, &alpha) in alpha_grid.iter().enumerate() {
        let params = EnsembleParams { n, k, alpha };
        params.validate()?;
        let alpha_seed = rng::mix(seed, j as u64);
        // route A and route B draw disjoint streams: indices 2i and 2i+1
        let per_sample: Vec<(Option<f64>, Option<f64>)> = (0..samples)
            .into_par_iter()
            .map(|i| -> Result<(Option<f64>, Option<f64>)> {
                let route = |idx: u64, by_marginal: bool| -> Result<Option<f64>> {
                    let mut r = rng::stream(alpha_seed, idx);
                    let graph = sample_poisson(&params, &mut r)?;
                    let m = graph.total_copies();
                    if m == 0 {
                        return Ok(None);
                    }
                    let inst = sample_instance(&graph, &kernel, &mut r)?;
                    let table = posterior(&graph, &kernel, &inst.y)?;
                    let value = if by_marginal {
                        // (1/m) H(Y) - H(W), with H(Y) = E[-log2 S(y)]
                        -table.log_marginal / m as f64 - hw
                    } else {
                        // (1/m)(n - H(X|Y)), with H = E[-log2 R(x|y)]
                        (n as f64 + table.weights[inst.x as usize].log2()) / m as f64
                    };
                    Ok(Some(value))
                };
                Ok((route(2 * i, false)?, route(2 * i + 1, true)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let route_a: Vec<f64> = per_sample.iter().filter_map(|p| p.0).collect();
        let route_b: Vec<f64> = per_sample.iter().filter_map(|p| p.1).collect();
        let discarded = 2 * samples as usize - route_a.len() - route_b.len();
        if discarded > 0 {
            notes.push(format!("alpha={alpha}: discarded {discarded} zero-edge draws"));
        }
        let (ia, ia_se) = engine::mean_stderr(&route_a);
        let (ib, ib_se) = engine::mean_stderr(&route_b);
        let sigma = (ia_se.powi(2) + ib_se.powi(2)).sqrt();
        let gap_sigmas = (ia - ib).abs() / sigma;
        if gap_sigmas > 4.0 {
            verdict = Verdict::Fail;
            notes.push(format!(
                "identity mismatch at alpha={alpha}: {ia} vs {ib} ({gap_sigmas:.2} sigma)"
            ));
        }
        rows.push(vec![alpha, ia, ia_se, ib, ib_se, gap_sigmas, capacity]);
    }
    Ok(ExperimentResult {
        name: "ldgm".into(),
        params: json!({
            "k": k, "channel": w.rows(), "n": n, "alpha_grid": alpha_grid,
            "samples": samples,
        }),
        seed,
        columns: vec![
            "alpha".into(),
            "info_per_obs_direct".into(),
            "direct_stderr".into(),
            "info_per_obs_marginal".into(),
            "marginal_stderr".into(),
            "gap_sigmas".into(),
            "capacity".into(),
        ],
        rows,
        verdict,
        notes,
        wall_seconds: elapsed(start),
    })
}
