//! Planted instances, posteriors, and conditional entropy computation.
//!
//! All entropies are in bits. Exact computations enumerate assignments
//! (`2^n`) and, where needed, the reachable observation space; Monte Carlo
//! estimators draw `(x, y)` from the joint law and average the posterior
//! surprisal, which is unbiased for `H(X|Y)`.

use crate::hypergraph::{EnsembleParams, Hypergraph};
use crate::kernels::Kernel;
use crate::rng;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default cap on posterior evaluations for exact enumeration.
pub const DEFAULT_EXACT_BUDGET: u128 = 1 << 24;

/// Guard for per-sample `2^n` marginal sums in Monte Carlo estimators.
pub const MAX_MC_N: usize = 26;

/// How an [`EntropyEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    ExactYEnumeration,
    McJoint,
    CspCount,
}

/// Conditional entropy value in bits with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    /// 0 for exact computations.
    pub stderr: f64,
    pub nsamples: u64,
    pub method: EntropyMethod,
}

/// `I = n - H`, with the standard error carried over.
pub fn mutual_information(est: &EntropyEstimate, n: usize) -> EntropyEstimate {
    EntropyEstimate {
        value: n as f64 - est.value,
        stderr: est.stderr,
        nsamples: est.nsamples,
        method: est.method,
    }
}

/// A hypergraph with a planted assignment and per-edge-copy observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub graph: Hypergraph,
    pub kernel: Kernel,
    /// Planted assignment, bit `i` = variable `i`; serialized as a hex
    /// bitstring.
    #[serde(with = "crate::formats::hex_u64")]
    pub x: u64,
    /// Per graph edge (same order), one symbol per copy.
    pub y: Vec<Vec<usize>>,
}

/// Extracts the `k`-bit input pattern of `x` on a sorted subset.
pub fn extract_input(x: u64, subset: &[usize]) -> usize {
    let mut u = 0usize;
    for (j, &v) in subset.iter().enumerate() {
        u |= (((x >> v) & 1) as usize) << j;
    }
    u
}

/// Flattened `(subset, symbol)` edge copies of an instance.
pub fn flatten_copies<'a>(
    graph: &'a Hypergraph,
    y: &[Vec<usize>],
) -> Vec<(&'a [usize], usize)> {
    let mut copies = Vec::new();
    for ((subset, mult), symbols) in graph.edges.iter().zip(y) {
        debug_assert_eq!(*mult as usize, symbols.len());
        for &z in symbols {
            copies.push((subset.as_slice(), z));
        }
    }
    copies
}

/// Draws a planted instance: `x` uniform, then one kernel output per edge
/// copy conditionally on `x`.
pub fn sample_instance(
    graph: &Hypergraph,
    kernel: &Kernel,
    rng: &mut impl Rng,
) -> Result<PlantedInstance> {
    if graph.k != kernel.k() {
        return Err(Error::ArityMismatch { graph_k: graph.k, kernel_k: kernel.k() });
    }
    let x: u64 = if graph.n == 64 {
        rng.random()
    } else {
        rng.random::<u64>() & ((1u64 << graph.n) - 1)
    };
    let y = graph
        .edges
        .iter()
        .map(|(subset, mult)| {
            let u = extract_input(x, subset);
            (0..*mult).map(|_| kernel.sample(u, rng)).collect()
        })
        .collect();
    Ok(PlantedInstance { graph: graph.clone(), kernel: kernel.clone(), x, y })
}

/// The full posterior over assignments given observations.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    pub n: usize,
    /// Normalized weights, one per assignment.
    pub weights: Vec<f64>,
    /// `log2 S_g(y)`, the output marginal under the uniform prior.
    pub log_marginal: f64,
}

impl PosteriorTable {
    /// Shannon entropy of the posterior, in bits.
    pub fn entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }
}

/// Log-likelihoods `ln P_g(y|x)` for all `2^n` assignments.
fn log_likelihoods(
    graph: &Hypergraph,
    kernel: &Kernel,
    copies: &[(&[usize], usize)],
) -> Vec<f64> {
    let size = 1usize << graph.n;
    let mut logw = vec![0.0f64; size];
    let mut log_rows = vec![vec![0.0f64; 1 << kernel.k()]; copies.len()];
    for (c, &(_, z)) in copies.iter().enumerate() {
        for u in 0..1usize << kernel.k() {
            let p = kernel.prob(z, u);
            log_rows[c][u] = if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
    }
    for (x, w) in logw.iter_mut().enumerate() {
        for (c, &(subset, _)) in copies.iter().enumerate() {
            *w += log_rows[c][extract_input(x as u64, subset)];
            if *w == f64::NEG_INFINITY {
                break;
            }
        }
    }
    logw
}

/// Computes the posterior `R_g(.|y)` by enumeration, with log-domain
/// accumulation and max-subtraction against underflow.
pub fn posterior(graph: &Hypergraph, kernel: &Kernel, y: &[Vec<usize>]) -> Result<PosteriorTable> {
    if graph.k != kernel.k() {
        return Err(Error::ArityMismatch { graph_k: graph.k, kernel_k: kernel.k() });
    }
    if graph.n > MAX_MC_N {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << graph.n,
            budget: 1 << MAX_MC_N,
        });
    }
    let copies = flatten_copies(graph, y);
    let logw = log_likelihoods(graph, kernel, &copies);
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroMarginal);
    }
    let mut weights: Vec<f64> = logw.iter().map(|&w| (w - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    // S(y) = 2^{-n} sum_x P(y|x)
    let log_marginal =
        (max + sum.ln()) / std::f64::consts::LN_2 - graph.n as f64;
    Ok(PosteriorTable { n: graph.n, weights, log_marginal })
}

/// `H_g(X | Y = y)` in bits.
pub fn entropy_given_y(graph: &Hypergraph, kernel: &Kernel, y: &[Vec<usize>]) -> Result<f64> {
    Ok(posterior(graph, kernel, y)?.entropy())
}

/// Per-copy bitmask over inputs `u` compatible with the observed symbol.
fn copy_masks(kernel: &Kernel, copies: &[(&[usize], usize)]) -> Vec<u64> {
    let mut cache: HashMap<usize, u64> = HashMap::new();
    copies
        .iter()
        .map(|&(_, z)| *cache.entry(z).or_insert_with(|| kernel.input_mask(z)))
        .collect()
}

/// Number of assignments satisfying every observed constraint of a CSP
/// instance: `|{x : Q(y_c | x[I_c]) > 0 for all copies c}|`.
pub fn count_solutions(graph: &Hypergraph, kernel: &Kernel, y: &[Vec<usize>]) -> Result<u64> {
    if !kernel.tag().is_csp() {
        return Err(Error::InvalidParameter(
            "solution counting requires a CSP kernel".into(),
        ));
    }
    if graph.k != kernel.k() {
        return Err(Error::ArityMismatch { graph_k: graph.k, kernel_k: kernel.k() });
    }
    if graph.n > 30 {
        return Err(Error::BudgetExceeded { needed: 1u128 << graph.n, budget: 1 << 30 });
    }
    let copies = flatten_copies(graph, y);
    let masks = copy_masks(kernel, &copies);
    let mut count = 0u64;
    for x in 0..1u64 << graph.n {
        let ok = copies
            .iter()
            .zip(&masks)
            .all(|(&(subset, _), &mask)| mask >> extract_input(x, subset) & 1 == 1);
        if ok {
            count += 1;
        }
    }
    Ok(count)
}

/// Exact `H_g(X|Y)` by one pass over the reachable observation space.
///
/// For CSP kernels the pass runs over `(x, y)` pairs with positive joint
/// probability (cost `2^n |A|^M`) and uses `H(X|Y=y) = log2 Z(y)`; otherwise
/// it enumerates reachable observation vectors and sums `S(y) H(X|Y=y)`
/// (cost `2^n prod_c q_c`).
pub fn exact_conditional_entropy(
    graph: &Hypergraph,
    kernel: &Kernel,
    budget: u128,
) -> Result<EntropyEstimate> {
    if graph.k != kernel.k() {
        return Err(Error::ArityMismatch { graph_k: graph.k, kernel_k: kernel.k() });
    }
    let copies = flatten_copies_subsets(graph);
    let m = copies.len();
    if kernel.tag().is_csp() {
        let a = kernel.authorized_size().expect("CSP kernel") as u128;
        let mut needed = 1u128 << graph.n;
        for _ in 0..m {
            needed = needed.saturating_mul(a);
        }
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        return exact_csp_entropy(graph, kernel, &copies);
    }
    let reachable = kernel.reachable_outputs();
    let mut needed = 1u128 << graph.n;
    for _ in 0..m {
        needed = needed.saturating_mul(reachable.len() as u128);
    }
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut value = 0.0;
    for_each_observation(&reachable, m, |y_flat| {
        let y = regroup(graph, y_flat);
        if let Ok(table) = posterior(graph, kernel, &y) {
            let s = 2f64.powf(table.log_marginal);
            if s > 0.0 {
                value += s * table.entropy();
            }
        }
    });
    Ok(EntropyEstimate {
        value,
        stderr: 0.0,
        nsamples: 0,
        method: EntropyMethod::ExactYEnumeration,
    })
}

fn flatten_copies_subsets(graph: &Hypergraph) -> Vec<Vec<usize>> {
    let mut copies = Vec::new();
    for (subset, mult) in &graph.edges {
        for _ in 0..*mult {
            copies.push(subset.clone());
        }
    }
    copies
}

fn regroup(graph: &Hypergraph, y_flat: &[usize]) -> Vec<Vec<usize>> {
    let mut y = Vec::with_capacity(graph.edges.len());
    let mut pos = 0;
    for (_, mult) in &graph.edges {
        y.push(y_flat[pos..pos + *mult as usize].to_vec());
        pos += *mult as usize;
    }
    y
}

fn for_each_observation(symbols: &[usize], m: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; m];
    let mut y: Vec<usize> = idx.iter().map(|&i| symbols[i]).collect();
    loop {
        f(&y);
        let mut c = 0;
        loop {
            if c == m {
                return;
            }
            idx[c] += 1;
            if idx[c] < symbols.len() {
                y[c] = symbols[idx[c]];
                break;
            }
            idx[c] = 0;
            y[c] = symbols[0];
            c += 1;
        }
        if m == 0 {
            return;
        }
    }
}

/// CSP fast path: enumerate `(x, y)` with positive joint probability,
/// aggregate the solution count per observation, and average `log2 Z`.
fn exact_csp_entropy(
    graph: &Hypergraph,
    kernel: &Kernel,
    copies: &[Vec<usize>],
) -> Result<EntropyEstimate> {
    let m = copies.len();
    let a = kernel.authorized_size().expect("CSP kernel");
    let supports: Vec<Vec<usize>> = (0..1 << kernel.k()).map(|u| kernel.support(u)).collect();
    debug_assert!(supports.iter().all(|s| s.len() == a));
    // observations pack into a u128, `bits` per copy; the inner loop runs
    // up to 2^n |A|^M times, so the per-step cost has to stay at a couple
    // of shifts and one hash-map bump
    let bits = usize::BITS - (kernel.q() - 1).leading_zeros().min(usize::BITS - 1);
    if m as u32 * bits > 128 {
        return exact_csp_entropy_wide(graph, copies, a, &supports);
    }
    let mut counts: std::collections::HashMap<u128, u64, BuildPackedKeyHasher> =
        std::collections::HashMap::default();
    let mut idx = vec![0usize; m];
    let mut inputs = vec![0usize; m];
    for x in 0..1u64 << graph.n {
        for (slot, subset) in inputs.iter_mut().zip(copies) {
            *slot = extract_input(x, subset);
        }
        // odometer over the authorized sets of each copy
        for i in idx.iter_mut() {
            *i = 0;
        }
        loop {
            let mut key = 0u128;
            for c in 0..m {
                key = key << bits | supports[inputs[c]][idx[c]] as u128;
            }
            *counts.entry(key).or_insert(0) += 1;
            let mut c = 0;
            loop {
                if c == m {
                    break;
                }
                idx[c] += 1;
                if idx[c] < a {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == m {
                break;
            }
        }
    }
    // fixed key order before summing: float addition must not follow hash
    // state, or rerun results drift in the last bits
    let mut entries: Vec<(u128, u64)> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|&(key, _)| key);
    // S(y) = Z(y) |A|^{-M} 2^{-n}; H = sum_y S(y) log2 Z(y)
    let norm = (a as f64).powi(m as i32) * (1u64 << graph.n) as f64;
    let value = entries
        .iter()
        .map(|&(_, z)| z as f64 / norm * (z as f64).log2())
        .sum();
    Ok(EntropyEstimate { value, stderr: 0.0, nsamples: 0, method: EntropyMethod::CspCount })
}

/// Multiply-fold hasher for the packed observation keys. SipHash costs more
/// than the rest of the inner loop combined; the keys are short fixed-width
/// integers, so a single 128-bit multiply mixes them fine. Results never
/// depend on hash order (entries are sorted before summation), so a weak
/// hash risks collisions in the table, never wrong answers.
#[derive(Default, Clone, Copy)]
struct PackedKeyHasher(u64);

type BuildPackedKeyHasher = std::hash::BuildHasherDefault<PackedKeyHasher>;

impl std::hash::Hasher for PackedKeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            let x = (self.0 ^ u64::from_le_bytes(word)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            self.0 = x ^ (x >> 29);
        }
    }
}

/// Fallback for observation tuples too long to pack into a `u128`
/// (only reachable for parity-type kernels with very many copies).
fn exact_csp_entropy_wide(
    graph: &Hypergraph,
    copies: &[Vec<usize>],
    a: usize,
    supports: &[Vec<usize>],
) -> Result<EntropyEstimate> {
    let m = copies.len();
    // BTreeMap keeps the summation order fixed without a separate sort
    let mut counts: std::collections::BTreeMap<Vec<u8>, u64> = std::collections::BTreeMap::new();
    let mut key = vec![0u8; m];
    let mut idx = vec![0usize; m];
    for x in 0..1u64 << graph.n {
        let inputs: Vec<usize> = copies.iter().map(|s| extract_input(x, s)).collect();
        for i in idx.iter_mut() {
            *i = 0;
        }
        loop {
            for c in 0..m {
                key[c] = supports[inputs[c]][idx[c]] as u8;
            }
            *counts.entry(key.clone()).or_insert(0) += 1;
            let mut c = 0;
            loop {
                if c == m {
                    break;
                }
                idx[c] += 1;
                if idx[c] < a {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == m {
                break;
            }
        }
    }
    let norm = (a as f64).powi(m as i32) * (1u64 << graph.n) as f64;
    let value = counts
        .values()
        .map(|&z| z as f64 / norm * (z as f64).log2())
        .sum();
    Ok(EntropyEstimate { value, stderr: 0.0, nsamples: 0, method: EntropyMethod::CspCount })
}

/// Monte Carlo `H_g(X|Y)`: the mean of the posterior surprisal
/// `-log2 R(x|y)` over i.i.d. joint draws. For CSP kernels the surprisal is
/// `log2 Z_g(y)`, which is cheaper and numerically identical.
///
/// Samples run in parallel with streams derived from `(seed, index)`, so the
/// result is independent of the worker count.
pub fn mc_conditional_entropy(
    graph: &Hypergraph,
    kernel: &Kernel,
    nsamples: u64,
    seed: u64,
) -> Result<EntropyEstimate> {
    if graph.n > MAX_MC_N {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << graph.n,
            budget: 1 << MAX_MC_N,
        });
    }
    if graph.k != kernel.k() {
        return Err(Error::ArityMismatch { graph_k: graph.k, kernel_k: kernel.k() });
    }
    let csp = kernel.tag().is_csp();
    let values: Vec<f64> = (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i);
            let instance = sample_instance(graph, kernel, &mut r).expect("arity checked");
            if csp {
                let z = count_solutions(graph, kernel, &instance.y).expect("CSP kernel");
                (z as f64).log2()
            } else {
                let table = posterior(graph, kernel, &instance.y).expect("planted y");
                -table.weights[instance.x as usize].log2()
            }
        })
        .collect();
    let (mean, stderr) = mean_stderr(&values);
    Ok(EntropyEstimate {
        value: mean,
        stderr,
        nsamples,
        method: if csp { EntropyMethod::CspCount } else { EntropyMethod::McJoint },
    })
}

pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-stage estimate of the ensemble entropy `E_G H_G(X|Y)`: graphs are
/// sampled from `P_k(alpha, n)`, each graph's entropy is computed exactly
/// when the budget allows and by inner Monte Carlo otherwise. The reported
/// standard error is the graph-level spread (which absorbs inner noise).
pub fn ensemble_entropy(
    params: &EnsembleParams,
    kernel: &Kernel,
    graph_samples: u64,
    inner_samples: u64,
    seed: u64,
    budget: u128,
) -> Result<EntropyEstimate> {
    params.validate()?;
    if params.k != kernel.k() {
        return Err(Error::ArityMismatch { graph_k: params.k, kernel_k: kernel.k() });
    }
    let per_graph: Vec<f64> = (0..graph_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, 2 * i);
            let graph = crate::hypergraph::sample_poisson(params, &mut r).expect("params valid");
            per_graph_entropy(&graph, kernel, inner_samples, rng::mix(seed, 2 * i + 1), budget)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_stderr(&per_graph);
    Ok(EntropyEstimate {
        value: mean,
        stderr,
        nsamples: graph_samples,
        method: EntropyMethod::McJoint,
    })
}

/// Exact if affordable, otherwise inner Monte Carlo.
pub fn per_graph_entropy(
    graph: &Hypergraph,
    kernel: &Kernel,
    inner_samples: u64,
    seed: u64,
    budget: u128,
) -> Result<f64> {
    match exact_conditional_entropy(graph, kernel, budget) {
        Ok(est) => Ok(est.value),
        Err(Error::BudgetExceeded { .. }) => {
            Ok(mc_conditional_entropy(graph, kernel, inner_samples, seed)?.value)
        }
        Err(e) => Err(e),
    }
}

/// Exact `H(Y_I | Y)` for one probe subset: the entropy of the predictive
/// distribution of a fresh observation on `I`, averaged over `Y`.
pub fn predictive_entropy(
    graph: &Hypergraph,
    kernel: &Kernel,
    subset: &[usize],
    budget: u128,
) -> Result<f64> {
    let copies = flatten_copies_subsets(graph);
    let reachable = kernel.reachable_outputs();
    let mut needed = 1u128 << graph.n;
    for _ in 0..copies.len() {
        needed = needed.saturating_mul(reachable.len() as u128);
    }
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let q = kernel.q();
    let mut value = 0.0;
    for_each_observation(&reachable, copies.len(), |y_flat| {
        let y = regroup(graph, y_flat);
        if let Ok(table) = posterior(graph, kernel, &y) {
            let s = 2f64.powf(table.log_marginal);
            if s <= 0.0 {
                return;
            }
            let mut pred = vec![0.0f64; q];
            for (x, &w) in table.weights.iter().enumerate() {
                if w > 0.0 {
                    let u = extract_input(x as u64, subset);
                    for (z, p) in pred.iter_mut().enumerate() {
                        *p += w * kernel.prob(z, u);
                    }
                }
            }
            let h: f64 = pred.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
            value += s * h;
        }
    });
    Ok(value)
}

/// Checks the per-edge derivative identity on a fixed graph: the left side
/// is `H(X|Y, Y_I) - H(X|Y)` with `Y_I` one extra observation on `I`; the
/// right side is `-(H(Y_I|Y) - H(Q))`. Both sides are enumerated exactly
/// through different routes and should agree to enumeration precision.
pub fn edge_derivative_check(
    graph: &Hypergraph,
    kernel: &Kernel,
    subset: &[usize],
    budget: u128,
) -> Result<(f64, f64)> {
    let before = exact_general_entropy(graph, kernel, budget)?;
    let extended = graph.with_extra_copy(subset)?;
    let after = exact_general_entropy(&extended, kernel, budget)?;
    let lhs = after - before;
    let rhs = -(predictive_entropy(graph, kernel, subset, budget)? - kernel.entropy());
    Ok((lhs, rhs))
}

/// Exact entropy via the general observation-space path (used where both
/// CSP and non-CSP kernels must share a code path).
fn exact_general_entropy(graph: &Hypergraph, kernel: &Kernel, budget: u128) -> Result<f64> {
    let copies = flatten_copies_subsets(graph);
    let reachable = kernel.reachable_outputs();
    let mut needed = 1u128 << graph.n;
    for _ in 0..copies.len() {
        needed = needed.saturating_mul(reachable.len() as u128);
    }
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut value = 0.0;
    for_each_observation(&reachable, copies.len(), |y_flat| {
        let y = regroup(graph, y_flat);
        if let Ok(table) = posterior(graph, kernel, &y) {
            let s = 2f64.powf(table.log_marginal);
            if s > 0.0 {
                value += s * table.entropy();
            }
        }
    });
    Ok(value)
}
