//! Closed-form sizing and probability results with the experiments that
//! check them.

mod coxcast;
mod montecarlo;
mod tables;

pub use coxcast::{
    coxcast_decode, coxcast_encode, crt, is_prime, smallest_feasible_primes, CoxcastError,
    CoxcastLabel,
};
pub use montecarlo::{
    exhaustive_invertible_fraction, measure_encode_attempts, run_invertibility_montecarlo,
    run_valid_path_montecarlo, AttemptsReport, ProbabilityReport, DEFAULT_SAMPLES, DEFAULT_SEED,
};
pub use tables::{make_tables, render_csv, render_text, SizingReport, TableId};

use thiserror::Error;

use crate::netmodel::ClosParams;

/// Filter-index bits assumed by all label-size formulas.
pub const TABLE_EPSILON: u32 = 4;
/// Smallest filter-index width recommended for a high construction probability.
pub const RECOMMENDED_MIN_EPSILON: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("probability must lie in (0, 1], got {0}")]
    Domain(f64),
}

/// Probability that a uniform random `n × n` matrix over GF(2) is invertible:
/// `prod_{i=1..n} (1 - 2^-i)`.
pub fn sigma0(n: u32) -> f64 {
    (1..=n).map(|i| 1.0 - 0.5f64.powi(i as i32)).product()
}

/// Limit of [`sigma0`] as `n` grows.
pub fn sigma0_limit() -> f64 {
    sigma0(200)
}

/// Probability that at least one of `2^epsilon` independent square systems is
/// invertible.
pub fn sigma_eps(n: u32, epsilon: u32) -> f64 {
    let tries = 2f64.powi(epsilon as i32);
    // 1 - (1 - s)^k, kept accurate near 1
    -(tries * (-sigma0(n)).ln_1p()).exp_m1()
}

/// Mean number of Gaussian eliminations until the first success: `1 / sigma`.
pub fn expected_ge(sigma: f64) -> Result<f64, AnalysisError> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(AnalysisError::Domain(sigma));
    }
    Ok(1.0 / sigma)
}

/// Bits stored by one router: `2^epsilon × max_label_len × max_iface_len`.
pub fn storage_bits(epsilon: u32, max_label_len: u64, max_iface_len: u64) -> u64 {
    (1u64 << epsilon) * max_label_len * max_iface_len
}

pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

pub fn bits_to_bytes(bits: u64) -> u64 {
    bits.div_ceil(8)
}

/// Longest unicast path (leaf, spine, leaf) in bits, signalling included.
/// Each hop's field is rounded up to whole bits separately.
pub fn unicast_label_bits(p: ClosParams, epsilon: u32) -> u64 {
    let ports = p.ports as u64;
    let leafs = p.leafs as u64;
    2 * ceil_log2(ports - 1) + ceil_log2(leafs - 1) + u64::from(epsilon)
}

pub fn unicast_label_bytes(p: ClosParams, epsilon: u32) -> u64 {
    bits_to_bytes(unicast_label_bits(p, epsilon))
}

/// Broadcast with plain bitmaps: ingress leaf, one spine, every other leaf.
pub fn multicast_label_bits_v1(p: ClosParams, epsilon: u32) -> u64 {
    let (ports, leafs) = (p.ports as u64, p.leafs as u64);
    ports + leafs + (leafs - 1) * ports + u64::from(epsilon)
}

pub fn multicast_label_bytes_v1(p: ClosParams, epsilon: u32) -> u64 {
    bits_to_bytes(multicast_label_bits_v1(p, epsilon))
}

/// Broadcast with prefix-coded leaf labels: the ingress leaf needs the full
/// `11` form, the other leafs the edge-only `0` form.
pub fn multicast_label_bits_v2(p: ClosParams, epsilon: u32) -> u64 {
    let (ports, leafs, spines) = (p.ports as u64, p.leafs as u64, p.spines as u64);
    2 + ports + leafs + (leafs - 1) * (1 + ports - spines) + u64::from(epsilon)
}

pub fn multicast_label_bytes_v2(p: ClosParams, epsilon: u32) -> u64 {
    bits_to_bytes(multicast_label_bits_v2(p, epsilon))
}
