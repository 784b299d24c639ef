//! File formats: instance JSON, DIMACS exports, results CSV, and run
//! manifests.
//!
//! Every output file is meant to pair with a manifest holding the full
//! parameter set and seed, so any artifact can be regenerated exactly.

use crate::engine::{extract_input, PlantedInstance};
use crate::kernels::KernelTag;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};
use std::path::Path;

/// Serde adapter storing a `u64` as a `0x`-prefixed 16-digit hex bitstring.
pub mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{x:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        let digits = text.strip_prefix("0x").unwrap_or(&text);
        u64::from_str_radix(digits, 16).map_err(serde::de::Error::custom)
    }
}

/// Writes an instance as pretty-printed JSON.
pub fn write_instance(path: &Path, instance: &PlantedInstance) -> Result<()> {
    let mut text = serde_json::to_string_pretty(instance)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads an instance back from JSON.
pub fn read_instance(path: &Path) -> Result<PlantedInstance> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// True when the planted assignment has positive likelihood for every
/// observed symbol; holds by construction for sampled instances.
pub fn planted_satisfies(instance: &PlantedInstance) -> bool {
    instance
        .graph
        .edges
        .iter()
        .zip(&instance.y)
        .all(|((subset, _), symbols)| {
            let u = extract_input(instance.x, subset);
            symbols.iter().all(|&z| instance.kernel.prob(z, u) > 0.0)
        })
}

/// Renders a CSP instance in DIMACS CNF.
///
/// Conventions, one constraint line per edge copy over variables
/// `subset[j] + 1`:
/// - k-SAT: literal `j` is positive iff bit `j` of the observed symbol is 1,
///   so the clause forbids exactly the complement of the observation.
/// - XOR-SAT: an `x <lits> 0` line with all literals positive, except the
///   first is negated when the observed parity is 0.
/// - NAE-SAT: two plain clauses, forbidding the observation and its
///   complement.
///
/// The header comment `c planted <hex>` records the planted assignment.
pub fn to_dimacs(instance: &PlantedInstance) -> Result<String> {
    let kernel = &instance.kernel;
    if !kernel.tag().is_csp() {
        return Err(Error::InvalidParameter(format!(
            "DIMACS export needs a CSP kernel, got {:?}",
            kernel.tag()
        )));
    }
    let k = kernel.k();
    let mut lines: Vec<String> = Vec::new();
    for ((subset, _), symbols) in instance.graph.edges.iter().zip(&instance.y) {
        for &z in symbols {
            match kernel.tag() {
                KernelTag::Ksat => {
                    lines.push(clause_line(subset, |j| z >> j & 1 == 1));
                }
                KernelTag::Xor => {
                    let mut lits: Vec<String> = subset
                        .iter()
                        .enumerate()
                        .map(|(j, &v)| {
                            let sign = if j == 0 && z == 0 { "-" } else { "" };
                            format!("{sign}{}", v + 1)
                        })
                        .collect();
                    lits.push("0".into());
                    lines.push(format!("x {}", lits.join(" ")));
                }
                KernelTag::Nae => {
                    let complement = z ^ ((1 << k) - 1);
                    // forbid the observation and its complement
                    lines.push(clause_line(subset, |j| z >> j & 1 == 0));
                    lines.push(clause_line(subset, |j| complement >> j & 1 == 0));
                }
                _ => unreachable!("is_csp checked"),
            }
        }
    }
    let mut out = format!("c planted 0x{:016x}\n", instance.x);
    out.push_str(&format!("p cnf {} {}\n", instance.graph.n, lines.len()));
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn clause_line(subset: &[usize], positive: impl Fn(usize) -> bool) -> String {
    let mut lits: Vec<String> = subset
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let sign = if positive(j) { "" } else { "-" };
            format!("{sign}{}", v + 1)
        })
        .collect();
    lits.push("0".into());
    lits.join(" ")
}

/// Evaluates a DIMACS document produced by [`to_dimacs`] under an
/// assignment. Used to check exported formulas against the planted
/// assignment.
pub fn dimacs_satisfied(dimacs: &str, x: u64) -> Result<bool> {
    let truth = |lit: i64| -> bool {
        let var = lit.unsigned_abs() as usize - 1;
        let value = x >> var & 1 == 1;
        if lit > 0 {
            value
        } else {
            !value
        }
    };
    for line in dimacs.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('p') {
            continue;
        }
        let (xor, body) = match line.strip_prefix("x ") {
            Some(rest) => (true, rest),
            None => (false, line),
        };
        let lits: Vec<i64> = body
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("bad DIMACS literal: {e}")))?;
        if lits.last() != Some(&0) {
            return Err(Error::InvalidParameter(format!(
                "DIMACS line not 0-terminated: {line}"
            )));
        }
        let lits = &lits[..lits.len() - 1];
        let ok = if xor {
            lits.iter().filter(|&&l| truth(l)).count() % 2 == 1
        } else {
            lits.iter().any(|&l| truth(l))
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Writes one CSV file with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Run manifest: everything needed to regenerate the paired output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Command or experiment name.
    pub command: String,
    /// Full parameter set, echoed verbatim.
    pub params: serde_json::Value,
    pub seed: u64,
    /// Content hashes of input files, keyed by path.
    #[serde(default)]
    pub file_hashes: Vec<(String, String)>,
    /// Experiment verdicts, when the command produces any.
    #[serde(default)]
    pub verdicts: Vec<String>,
    /// Output files produced alongside this manifest.
    #[serde(default)]
    pub outputs: Vec<String>,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Git-style content hash: SHA-1 over `"blob <len>\0" + bytes`, hex-encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha1::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
