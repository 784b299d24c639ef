//! Parsers for the small string mini-languages used by the flags:
//! kernel specs, distribution specs, and comma-separated grids.

use graphchan::biso::BisoChannel;
use graphchan::gamma::EmpiricalDist;
use graphchan::kernels::{
    make_encoded_kernel, make_ksat_kernel, make_nae_kernel, make_sbm_kernel, make_xor_kernel,
    Kernel, SbmParams,
};
use graphchan::{Error, Result};

/// Parses a kernel spec:
/// `ksat:K`, `nae:K`, `xor:K`, `sbm:A:B:GAMMA`, `bsc:P:K` (BSC-encoded
/// parity), `bec:E:K` (BEC-encoded parity), or `@path` for a kernel JSON
/// file.
pub fn parse_kernel(spec: &str) -> Result<Kernel> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)?;
        return Ok(serde_json::from_str(&text)?);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: &str| Error::InvalidParameter(format!("kernel spec `{spec}`: {msg}"));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad("expected an integer"));
    let real = |s: &str| s.parse::<f64>().map_err(|_| bad("expected a number"));
    match parts.as_slice() {
        ["ksat", k] => make_ksat_kernel(int(k)?),
        ["nae", k] => make_nae_kernel(int(k)?),
        ["xor", k] => make_xor_kernel(int(k)?),
        ["sbm", a, b, gamma] => make_sbm_kernel(SbmParams {
            a: real(a)?,
            b: real(b)?,
            gamma: real(gamma)?,
        }),
        ["bsc", p, k] => make_encoded_kernel(&BisoChannel::bsc(real(p)?)?, int(k)?),
        ["bec", e, k] => make_encoded_kernel(&BisoChannel::bec(real(e)?)?, int(k)?),
        _ => Err(bad(
            "expected ksat:K, nae:K, xor:K, sbm:A:B:GAMMA, bsc:P:K, bec:E:K, or @file",
        )),
    }
}

/// Parses a distribution spec for `--nu`: `uniform`, `point:<bits>` with
/// `<bits>` a binary string (bit `i` = replica `i`, leftmost first), an
/// inline JSON array, or `@path` to a JSON array file.
pub fn parse_nu(spec: &str, l: usize) -> Result<EmpiricalDist> {
    if spec == "uniform" {
        return Ok(EmpiricalDist::uniform(l));
    }
    if let Some(bits) = spec.strip_prefix("point:") {
        if bits.len() != l || bits.chars().any(|c| c != '0' && c != '1') {
            return Err(Error::InvalidParameter(format!(
                "point spec `{bits}` must be {l} binary digits"
            )));
        }
        let v = bits
            .chars()
            .enumerate()
            .fold(0usize, |acc, (i, c)| acc | (usize::from(c == '1') << i));
        return Ok(EmpiricalDist::point(l, v));
    }
    let text = if let Some(path) = spec.strip_prefix('@') {
        std::fs::read_to_string(path)?
    } else if spec.starts_with('[') {
        spec.to_string()
    } else {
        return Err(Error::InvalidParameter(format!(
            "nu spec `{spec}`: expected uniform, point:<bits>, a JSON array, or @file"
        )));
    };
    let probs: Vec<f64> = serde_json::from_str(&text)?;
    EmpiricalDist::new(l, probs)
}

/// Parses a comma-separated grid, e.g. `6,10,14` or `0,0.25,0.5`.
pub fn parse_grid<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} grid entry `{s}`")))
        })
        .collect()
}
