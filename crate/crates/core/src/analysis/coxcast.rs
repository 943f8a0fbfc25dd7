//! COXcast baseline: the path label is the Chinese-remainder solution of one
//! congruence per router, each router holding a distinct prime key.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::netmodel::{Cast, PathSpec, RouterId, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoxcastError {
    #[error("prime {prime} of {router} does not exceed residue {residue}")]
    PrimeTooSmall {
        router: RouterId,
        prime: u64,
        residue: u64,
    },
    #[error("moduli {0} and {1} are not coprime")]
    NonCoprime(u64, u64),
    #[error("no prime assigned to {0}")]
    MissingPrime(RouterId),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoxcastLabel {
    pub value: BigUint,
    /// Whole bytes needed to carry `value`.
    pub bytes: u64,
}

/// Smallest non-negative `x` with `x ≡ r (mod m)` for every pair.
pub fn crt(congruences: &[(u64, u64)]) -> Result<BigUint, CoxcastError> {
    let mut x = BigUint::zero();
    let mut modulus = BigUint::from(1u8);
    let mut seen: Vec<u64> = Vec::new();
    for &(r, m) in congruences {
        if m == 0 {
            return Err(CoxcastError::Unsupported("modulus must be positive".into()));
        }
        let m_mod = (&modulus % m).to_u64().expect("reduced below a u64");
        let g = i128::from(m_mod).extended_gcd(&i128::from(m));
        if g.gcd != 1 {
            let other = seen.iter().copied().find(|&s| s.gcd(&m) != 1).unwrap_or(m);
            return Err(CoxcastError::NonCoprime(other, m));
        }
        let inv = g.x.rem_euclid(i128::from(m)) as u128;
        let x_mod = (&x % m).to_u64().expect("reduced below a u64");
        let diff = (u128::from(r % m) + u128::from(m) - u128::from(x_mod)) % u128::from(m);
        let k = (diff * inv % u128::from(m)) as u64;
        x += &modulus * k;
        modulus *= m;
        seen.push(m);
    }
    Ok(x)
}

/// Residue read by the router holding `prime`.
pub fn coxcast_decode(label: &BigUint, prime: u64) -> u64 {
    (label % prime).to_u64().expect("reduced below a u64")
}

/// Router residues: the output port for unicast, the output bitmap
/// `sum 2^port` for multicast.
fn residues(spec: &PathSpec) -> Result<Vec<(RouterId, u64)>, CoxcastError> {
    match spec.cast() {
        Cast::Unicast => Ok(spec
            .hops()
            .unwrap_or_default()
            .iter()
            .map(|h| (h.router, h.out_port as u64))
            .collect()),
        Cast::Multicast => spec
            .outputs()
            .unwrap_or(&BTreeMap::new())
            .iter()
            .map(|(&r, ports)| {
                ports
                    .iter()
                    .try_fold(0u64, |acc, &p| (p < 64).then(|| acc | 1 << p))
                    .map(|bitmap| (r, bitmap))
                    .ok_or_else(|| CoxcastError::Unsupported(format!("{r} has ports beyond 63")))
            })
            .collect(),
    }
}

pub fn coxcast_encode(
    spec: &PathSpec,
    primes: &BTreeMap<RouterId, u64>,
) -> Result<CoxcastLabel, CoxcastError> {
    let mut congruences = Vec::new();
    for (router, residue) in residues(spec)? {
        let prime = *primes
            .get(&router)
            .ok_or(CoxcastError::MissingPrime(router))?;
        if prime <= residue {
            return Err(CoxcastError::PrimeTooSmall {
                router,
                prime,
                residue,
            });
        }
        congruences.push((residue, prime));
    }
    let value = crt(&congruences)?;
    let bytes = value.bits().div_ceil(8).max(1);
    Ok(CoxcastLabel { value, bytes })
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (u128::from(a) * u128::from(b) % u128::from(m)) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    WITNESSES.iter().all(|&a| {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            return true;
        }
        (1..s).any(|_| {
            x = mul_mod(x, x, n);
            x == n - 1
        })
    })
}

/// Distinct primes for `routers`, each the smallest unused prime above the
/// router's largest residue: `ports - 1` for unicast, `2^ports - 1` for
/// multicast.
pub fn smallest_feasible_primes(
    t: &Topology,
    routers: &[RouterId],
    cast: Cast,
) -> Result<BTreeMap<RouterId, u64>, CoxcastError> {
    let mut bounds = Vec::new();
    for &r in routers {
        let ports = t.ports(r)?;
        let bound = match cast {
            Cast::Unicast => ports.saturating_sub(1) as u64,
            Cast::Multicast if ports < 63 => (1u64 << ports) - 1,
            Cast::Multicast => {
                return Err(CoxcastError::Unsupported(format!("{r} has {ports} ports")))
            }
        };
        bounds.push((bound, r));
    }
    bounds.sort();
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (bound, r) in bounds {
        let mut p = bound + 1;
        while !is_prime(p) || used.contains(&p) {
            p += 1;
        }
        used.insert(p);
        out.insert(r, p);
    }
    Ok(out)
}
