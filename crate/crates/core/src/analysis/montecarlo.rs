//! Sampling experiments. Trial `i` always draws from `stream_rng(seed, i)`, so
//! results do not depend on how rayon schedules the work.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use super::{sigma0, sigma_eps};
use crate::deployment::{Deployment, MulticastMode, Provisioning};
use crate::gf2::{self, BitMatrix};
use crate::netmodel::{build_clos, clos_unicast_path, ClosParams};
use crate::pathencoder::{encode, EncodeError};
use crate::routerplane::BankMode;

pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityReport {
    pub s_l: u32,
    pub sigma0: f64,
    /// `(epsilon, sigma_eps)` for epsilon = 0..=8.
    pub sigma_eps: Vec<(u32, f64)>,
    pub samples: u64,
    pub seed: u64,
    pub invertible: u64,
    pub estimate: f64,
    /// `1 / sigma0`.
    pub expected_ge: f64,
}

impl ProbabilityReport {
    /// Binomial standard deviation of the estimate under `sigma0`.
    pub fn std_error(&self) -> f64 {
        (self.sigma0 * (1.0 - self.sigma0) / self.samples as f64).sqrt()
    }
}

fn is_invertible(m: &BitMatrix) -> bool {
    gf2::rank(m) == m.rows()
}

/// Fraction of uniformly drawn `s_l × s_l` matrices that are invertible.
pub fn run_invertibility_montecarlo(s_l: u32, samples: u64, seed: u64) -> ProbabilityReport {
    let n = s_l as usize;
    let invertible = (0..samples)
        .into_par_iter()
        .filter(|&i| {
            is_invertible(&gf2::random_matrix_from(
                n,
                n,
                &mut gf2::stream_rng(seed, i),
            ))
        })
        .count() as u64;
    let s0 = sigma0(s_l);
    ProbabilityReport {
        s_l,
        sigma0: s0,
        sigma_eps: (0..=8).map(|e| (e, sigma_eps(s_l, e))).collect(),
        samples,
        seed,
        invertible,
        estimate: invertible as f64 / samples.max(1) as f64,
        expected_ge: 1.0 / s0,
    }
}

/// Fraction of trials in which at least one of `2^epsilon` independent
/// `s_l × s_l` matrices is invertible.
pub fn run_valid_path_montecarlo(s_l: u32, epsilon: u32, samples: u64, seed: u64) -> f64 {
    let n = s_l as usize;
    let hits = (0..samples)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = gf2::stream_rng(seed, i);
            (0..1u64 << epsilon).any(|_| is_invertible(&gf2::random_matrix_from(n, n, &mut rng)))
        })
        .count();
    hits as f64 / samples.max(1) as f64
}

/// Exact invertible fraction by enumerating all `2^(n²)` matrices; `n <= 4`.
pub fn exhaustive_invertible_fraction(n: usize) -> f64 {
    assert!(n <= 4, "enumeration is limited to 4x4");
    let cells = n * n;
    let total = 1u64 << cells;
    let hits = (0..total)
        .filter(|&code| {
            let mut m = BitMatrix::zeros(n, n);
            for k in 0..cells {
                if code >> k & 1 == 1 {
                    m.set(k / n, k % n, true);
                }
            }
            is_invertible(&m)
        })
        .count();
    hits as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptsReport {
    pub fabric: ClosParams,
    pub s_l: usize,
    pub epsilon: u32,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    /// Eliminations over all trials, failed ones included.
    pub total_attempts: u64,
    /// Eliminations spent by the successful trials.
    pub success_attempts: u64,
    /// Mean eliminations per successful encode.
    pub mean_attempts: f64,
    /// Invertible fraction over all eliminations performed.
    pub per_attempt_sigma: f64,
}

/// Encodes random leaf-spine-leaf paths on a `Clos(2, 4, 8)` fabric, whose
/// longest path carries `3 + 2 + 3 = 8` label bits, with freshly drawn banks
/// per trial.
pub fn measure_encode_attempts(trials: u64, seed: u64, epsilon: u32) -> AttemptsReport {
    let fabric = ClosParams::new(2, 4, 8).expect("valid fabric");
    let topology = build_clos(fabric).expect("valid fabric");
    let outcomes: Vec<(bool, u32, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = gf2::stream_rng(seed, i);
            let a = rng.random_range(0..fabric.leafs);
            let b = (a + rng.random_range(1..fabric.leafs)) % fabric.leafs;
            let src = ClosParams::edge_name(a, rng.random_range(fabric.spines..fabric.ports));
            let dst = ClosParams::edge_name(b, rng.random_range(fabric.spines..fabric.ports));
            let spine = rng.random_range(0..fabric.spines);
            let spec = clos_unicast_path(&topology, fabric, &src, &dst, spine).expect("valid path");
            let prov = Provisioning {
                epsilon,
                bank_mode: BankMode::Random {
                    seed: rng.next_u64(),
                },
                max_label_len: 8,
                multicast: MulticastMode::V1,
            };
            let d = Deployment::provision_routers(topology.clone(), prov, &spec.routers())
                .expect("provisioning");
            match encode(&spec, &d) {
                Ok(r) => (true, r.attempts, r.label_len()),
                Err(EncodeError::NoValidLabel { attempts }) => (false, attempts, 8),
                Err(e) => panic!("unexpected encode failure: {e}"),
            }
        })
        .collect();
    let successes = outcomes.iter().filter(|o| o.0).count() as u64;
    let total_attempts: u64 = outcomes.iter().map(|o| u64::from(o.1)).sum();
    let success_attempts: u64 = outcomes
        .iter()
        .filter(|o| o.0)
        .map(|o| u64::from(o.1))
        .sum();
    AttemptsReport {
        fabric,
        s_l: outcomes.first().map_or(8, |o| o.2),
        epsilon,
        trials,
        seed,
        successes,
        total_attempts,
        success_attempts,
        mean_attempts: success_attempts as f64 / successes.max(1) as f64,
        per_attempt_sigma: successes as f64 / total_attempts.max(1) as f64,
    }
}
