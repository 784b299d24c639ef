//! Kernel construction: the probability table `Q(z|u)` attached to every
//! hyperedge of a graphical channel.
//!
//! Inputs are binary `k`-tuples, encoded as `k`-bit integers with bit `i`
//! holding coordinate `i` (least-significant bit = first coordinate).
//! Outputs are symbols `0..q`.

use crate::biso::BisoChannel;
use crate::{Error, Result, PROB_TOL};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Kernel family label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelTag {
    Ksat,
    Nae,
    Xor,
    Sbm,
    Encoded,
    Custom,
}

impl KernelTag {
    /// CSP kernels have rows uniform over an authorized set of constant size.
    pub fn is_csp(self) -> bool {
        matches!(self, KernelTag::Ksat | KernelTag::Nae | KernelTag::Xor)
    }
}

/// A finite channel table from `{0,1}^k` to `{0..q-1}`.
///
/// Immutable after construction; safe to share across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct Kernel {
    k: usize,
    q: usize,
    tag: KernelTag,
    /// `rows[u][z] = Q(z|u)`, one row per input pattern.
    rows: Vec<Vec<f64>>,
}

/// Wire format: `{tag, k, q, rows}`.
#[derive(Serialize, Deserialize)]
struct KernelRepr {
    tag: KernelTag,
    k: usize,
    q: usize,
    rows: Vec<Vec<f64>>,
}

impl From<Kernel> for KernelRepr {
    fn from(kernel: Kernel) -> Self {
        KernelRepr {
            tag: kernel.tag,
            k: kernel.k,
            q: kernel.q,
            rows: kernel.rows,
        }
    }
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;
    fn try_from(repr: KernelRepr) -> Result<Kernel> {
        Kernel::new(repr.tag, repr.k, repr.q, repr.rows)
    }
}

/// Parameters of the stochastic block model kernel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SbmParams {
    /// Intra-group intensity.
    pub a: f64,
    /// Inter-group intensity.
    pub b: f64,
    /// Kernel scale; rows are valid distributions when `gamma >= max(a, b)`.
    pub gamma: f64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(
                "SBM parameters a, b, gamma must be positive".into(),
            ));
        }
        if self.a > self.gamma || self.b > self.gamma {
            return Err(Error::InvalidParameter(format!(
                "SBM kernel needs gamma >= max(a, b); got a={}, b={}, gamma={}",
                self.a, self.b, self.gamma
            )));
        }
        Ok(())
    }

    /// `s = (a+b)/gamma`, the parity-channel sum parameter.
    pub fn s(&self) -> f64 {
        (self.a + self.b) / self.gamma
    }

    /// `d = (a-b)/gamma`, the parity-channel difference parameter.
    pub fn d(&self) -> f64 {
        (self.a - self.b) / self.gamma
    }
}

impl Kernel {
    /// Builds a kernel from raw rows, checking stochasticity and, for CSP
    /// tags, the constant-authorized-set property.
    pub fn new(tag: KernelTag, k: usize, q: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidKernel("arity k must be >= 1".into()));
        }
        if q == 0 {
            return Err(Error::InvalidKernel("output alphabet must be nonempty".into()));
        }
        if rows.len() != 1 << k {
            return Err(Error::InvalidKernel(format!(
                "expected {} rows, got {}",
                1usize << k,
                rows.len()
            )));
        }
        for (u, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::InvalidKernel(format!(
                    "row {u} has {} entries, expected {q}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidKernel(format!("row {u} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidKernel(format!("row {u} sums to {sum}, not 1")));
            }
        }
        let kernel = Kernel { k, q, tag, rows };
        if tag.is_csp() {
            kernel.check_csp()?;
        }
        Ok(kernel)
    }

    fn check_csp(&self) -> Result<()> {
        let mut authorized = None;
        for (u, row) in self.rows.iter().enumerate() {
            let support = row.iter().filter(|&&p| p > 0.0).count();
            if support == 0 {
                return Err(Error::InvalidKernel(format!("CSP row {u} has empty authorized set")));
            }
            let uniform = 1.0 / support as f64;
            if row
                .iter()
                .any(|&p| p > 0.0 && (p - uniform).abs() > PROB_TOL)
            {
                return Err(Error::InvalidKernel(format!(
                    "CSP row {u} is not uniform over its authorized set"
                )));
            }
            match authorized {
                None => authorized = Some(support),
                Some(a) if a != support => {
                    return Err(Error::InvalidKernel(
                        "CSP kernel has non-constant authorized set size".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn tag(&self) -> KernelTag {
        self.tag
    }

    /// `Q(z|u)` with `u` a `k`-bit input pattern.
    pub fn prob(&self, z: usize, u: usize) -> f64 {
        self.rows[u][z]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Size of the authorized set for CSP kernels.
    pub fn authorized_size(&self) -> Option<usize> {
        if !self.tag.is_csp() {
            return None;
        }
        Some(self.rows[0].iter().filter(|&&p| p > 0.0).count())
    }

    /// Bitmask over inputs `u` with `Q(z|u) > 0`.
    pub fn input_mask(&self, z: usize) -> u64 {
        let mut mask = 0u64;
        for u in 0..self.rows.len() {
            if self.rows[u][z] > 0.0 {
                mask |= 1 << u;
            }
        }
        mask
    }

    /// Output symbols reachable from some input.
    pub fn reachable_outputs(&self) -> Vec<usize> {
        (0..self.q)
            .filter(|&z| self.rows.iter().any(|row| row[z] > 0.0))
            .collect()
    }

    /// Outputs with `Q(z|u) > 0` for the given input.
    pub fn support(&self, u: usize) -> Vec<usize> {
        (0..self.q).filter(|&z| self.rows[u][z] > 0.0).collect()
    }

    /// Draws one output symbol from `Q(.|u)`.
    pub fn sample(&self, u: usize, rng: &mut impl Rng) -> usize {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        for z in 0..self.q {
            acc += self.rows[u][z];
            if r < acc {
                return z;
            }
        }
        self.q - 1
    }

    /// Channel entropy `H(Q) = -2^{-k} sum_{u,z} Q(z|u) log2 Q(z|u)`, in bits.
    pub fn entropy(&self) -> f64 {
        let norm = 1.0 / self.rows.len() as f64;
        let mut h = 0.0;
        for row in &self.rows {
            for &p in row {
                if p > 0.0 {
                    h -= p * p.log2();
                }
            }
        }
        h * norm
    }
}

/// Planted `k`-SAT kernel: outputs uniform over `{0,1}^k` minus the bitwise
/// complement of the input.
pub fn make_ksat_kernel(k: usize) -> Result<Kernel> {
    if k == 0 {
        return Err(Error::InvalidParameter("k-SAT kernel needs k >= 1".into()));
    }
    let q = 1usize << k;
    let mask = q - 1;
    let w = 1.0 / (q - 1) as f64;
    let rows = (0..q)
        .map(|u| (0..q).map(|z| if z == u ^ mask { 0.0 } else { w }).collect())
        .collect();
    Kernel::new(KernelTag::Ksat, k, q, rows)
}

/// Planted `k`-NAE-SAT kernel: outputs uniform over `{0,1}^k` minus the input
/// and its complement.
pub fn make_nae_kernel(k: usize) -> Result<Kernel> {
    if k <= 1 {
        return Err(Error::InvalidParameter(
            "NAE kernel needs k >= 2 (authorized set is empty for k = 1)".into(),
        ));
    }
    let q = 1usize << k;
    let mask = q - 1;
    let w = 1.0 / (q - 2) as f64;
    let rows = (0..q)
        .map(|u| {
            (0..q)
                .map(|z| if z == u || z == u ^ mask { 0.0 } else { w })
                .collect()
        })
        .collect();
    Kernel::new(KernelTag::Nae, k, q, rows)
}

/// Planted `k`-XOR-SAT kernel: the output is the parity of the input.
pub fn make_xor_kernel(k: usize) -> Result<Kernel> {
    if k == 0 {
        return Err(Error::InvalidParameter("XOR kernel needs k >= 1".into()));
    }
    let rows = (0..1usize << k)
        .map(|u| {
            let parity = (u.count_ones() & 1) as usize;
            (0..2).map(|z| if z == parity { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    Kernel::new(KernelTag::Xor, k, 2, rows)
}

/// Stochastic block model kernel (`k = 2`): emits 1 with probability
/// `a/gamma` when the endpoints agree and `b/gamma` otherwise.
pub fn make_sbm_kernel(params: SbmParams) -> Result<Kernel> {
    params.validate()?;
    let rows = (0..4usize)
        .map(|u| {
            let (u1, u2) = (u & 1, (u >> 1) & 1);
            let p1 = if u1 == u2 { params.a } else { params.b } / params.gamma;
            vec![1.0 - p1, p1]
        })
        .collect();
    Kernel::new(KernelTag::Sbm, 2, 2, rows)
}

/// Encoded symmetric kernel: feed the parity of the `k` inputs through a
/// BISO channel `W`, so `Q(z|u) = W(z | parity(u))`.
pub fn make_encoded_kernel(w: &BisoChannel, k: usize) -> Result<Kernel> {
    if k == 0 {
        return Err(Error::InvalidParameter("encoded kernel needs k >= 1".into()));
    }
    let wrows = w.rows();
    let q = wrows[0].len();
    let rows = (0..1usize << k)
        .map(|u| wrows[(u.count_ones() & 1) as usize].clone())
        .collect();
    Kernel::new(KernelTag::Encoded, k, q, rows)
}

/// `H(Q)` in bits; free function mirroring [`Kernel::entropy`].
pub fn kernel_entropy(q: &Kernel) -> f64 {
    q.entropy()
}
