//! Walsh-Hadamard analysis over the Boolean cube.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Unnormalized Walsh spectrum `F(f)(w) = sum_x (-1)^{x.w} f(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalshSpectrum {
    pub l: usize,
    pub coeffs: Vec<f64>,
}

/// Fast Walsh-Hadamard transform, `O(l 2^l)`; self-inverse up to a factor
/// `2^l`.
pub fn walsh_transform(f: &[f64]) -> Result<WalshSpectrum> {
    let len = f.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "transform length {len} is not a power of two"
        )));
    }
    let l = len.trailing_zeros() as usize;
    let mut coeffs = f.to_vec();
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(h * 2) {
            for i in block..block + h {
                let (a, b) = (coeffs[i], coeffs[i + h]);
                coeffs[i] = a + b;
                coeffs[i + h] = a - b;
            }
        }
        h *= 2;
    }
    Ok(WalshSpectrum { l, coeffs })
}

/// Inverse transform: `f(x) = 2^{-l} sum_w (-1)^{x.w} F(w)`.
pub fn inverse_walsh(spectrum: &WalshSpectrum) -> Vec<f64> {
    let scale = 1.0 / spectrum.coeffs.len() as f64;
    let again = walsh_transform(&spectrum.coeffs).expect("spectrum length is a power of two");
    again.coeffs.into_iter().map(|c| c * scale).collect()
}

/// `k`-fold convolution power over the group `{0,1}^l`, computed in the
/// Walsh domain as the inverse transform of `F(nu)^k`.
pub fn convolution_power(nu: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("convolution power needs k >= 1".into()));
    }
    let mut spectrum = walsh_transform(nu)?;
    for c in &mut spectrum.coeffs {
        *c = c.powi(k as i32);
    }
    Ok(inverse_walsh(&spectrum))
}
