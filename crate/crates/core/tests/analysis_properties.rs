use std::collections::BTreeMap;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;
use xsr_core::analysis::*;
use xsr_core::gf2::stream_rng;
use xsr_core::netmodel::{
    build_clos, multicast_broadcast_spec, Cast, ClosParams, PathSpec, RouterId,
};

#[test]
fn invertibility_estimates_track_the_product_formula() {
    for s_l in [1, 2, 3, 5, 8, 12, 16, 24] {
        let r = run_invertibility_montecarlo(s_l, 20_000, 100 + u64::from(s_l));
        assert!(
            (r.estimate - r.sigma0).abs() <= 3.0 * r.std_error(),
            "s_L = {s_l}: {} vs {}",
            r.estimate,
            r.sigma0
        );
    }
}

#[test]
fn valid_path_estimates_track_sigma_eps() {
    for (s_l, eps) in [(4, 1), (8, 2), (16, 3)] {
        let n = 20_000;
        let want = sigma_eps(s_l, eps);
        let est = run_valid_path_montecarlo(s_l, eps, n, 9);
        let sd = (want * (1.0 - want) / n as f64).sqrt();
        assert!(
            (est - want).abs() <= 3.0 * sd,
            "s_L = {s_l}, eps = {eps}: {est} vs {want}"
        );
    }
}

#[test]
fn encode_attempts_follow_the_geometric_law() {
    let r = measure_encode_attempts(4000, 2, 8);
    assert_eq!(r.successes, r.trials);
    let expected = 1.0 / sigma0(8);
    assert!(
        (r.mean_attempts / expected - 1.0).abs() < 0.06,
        "{} vs {expected}",
        r.mean_attempts
    );
    assert!((r.mean_attempts * r.per_attempt_sigma - 1.0).abs() < 1e-12);
}

#[test]
fn table_rows() {
    let all = make_tables();
    let uni: Vec<u64> = all
        .iter()
        .filter(|r| r.table == TableId::Unicast)
        .map(|r| r.bytes_unicast)
        .collect();
    assert_eq!(uni, [2, 2, 2, 2, 3, 3, 3, 3, 2, 3, 3, 3, 3, 2, 3, 3, 3, 3]);
    let multi: Vec<&SizingReport> = all
        .iter()
        .filter(|r| r.table == TableId::Multicast)
        .collect();
    let v1: Vec<u64> = multi.iter().map(|r| r.bytes_multicast_v1).collect();
    let v2: Vec<u64> = multi.iter().map(|r| r.bytes_multicast_v2).collect();
    assert_eq!(
        v1,
        [9, 13, 17, 26, 38, 50, 74, 146, 35, 51, 67, 99, 195, 35, 51, 67, 99, 195]
    );
    assert_eq!(
        v2,
        [9, 13, 17, 20, 32, 44, 68, 140, 26, 42, 58, 90, 186, 22, 38, 54, 86, 182]
    );
}

#[test]
fn coxcast_random_assignments_round_trip() {
    let mut rng = stream_rng(17, 0);
    for _ in 0..1000 {
        let k = rng.random_range(1..8);
        let mut primes: Vec<u64> = Vec::new();
        while primes.len() < k {
            let p = rng.random_range(2..1_000_000u64);
            if is_prime(p) && !primes.contains(&p) {
                primes.push(p);
            }
        }
        let congruences: Vec<(u64, u64)> = primes
            .iter()
            .map(|&p| (rng.random_range(0..p), p))
            .collect();
        let n = crt(&congruences).unwrap();
        let modulus: BigUint = primes.iter().map(|&p| BigUint::from(p)).product();
        assert!(n < modulus);
        for &(r, p) in &congruences {
            assert_eq!(coxcast_decode(&n, p), r);
        }
    }
}

#[test]
fn coxcast_on_paths() {
    let p = ClosParams::new(2, 4, 16).unwrap();
    let t = build_clos(p).unwrap();
    let spec = multicast_broadcast_spec(&t, p, "h0.2").unwrap();
    let primes = smallest_feasible_primes(&t, &spec.routers(), Cast::Multicast).unwrap();
    let label = coxcast_encode(&spec, &primes).unwrap();
    for (r, ports) in spec.outputs().unwrap() {
        let bitmap: u64 = ports.iter().map(|q| 1u64 << q).sum();
        assert_eq!(coxcast_decode(&label.value, primes[r]), bitmap);
    }
    assert!(label.bytes >= 9, "{}", label.bytes);

    let single =
        PathSpec::multicast(&t, "h0.2", BTreeMap::from([(p.leaf_id(0), [3, 4].into())])).unwrap();
    let label = coxcast_encode(&single, &primes).unwrap();
    assert_eq!(label.value, BigUint::from(0b11000u32));

    let mut short = primes.clone();
    short.insert(p.leaf_id(0), 3);
    assert!(matches!(
        coxcast_encode(&spec, &short),
        Err(CoxcastError::PrimeTooSmall { .. })
    ));
    short.remove(&p.leaf_id(0));
    assert!(matches!(
        coxcast_encode(&spec, &short),
        Err(CoxcastError::MissingPrime(_))
    ));
}

#[test]
fn feasible_primes_are_distinct_and_large_enough() {
    let p = ClosParams::new(6, 12, 24).unwrap();
    let t = build_clos(p).unwrap();
    let routers: Vec<RouterId> = t.routers().map(|(id, _)| id).collect();
    for cast in [Cast::Unicast, Cast::Multicast] {
        let primes = smallest_feasible_primes(&t, &routers, cast).unwrap();
        let mut seen: Vec<u64> = primes.values().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), routers.len());
        for (r, &prime) in &primes {
            assert!(is_prime(prime));
            let ports = t.ports(*r).unwrap() as u32;
            let bound = if cast == Cast::Unicast {
                u64::from(ports) - 1
            } else {
                (1u64 << ports) - 1
            };
            assert!(prime > bound);
        }
    }
}

proptest! {
    #[test]
    fn crt_agrees_with_search(r1 in 0u64..7, r2 in 0u64..11, r3 in 0u64..13) {
        let n = crt(&[(r1, 7), (r2, 11), (r3, 13)]).unwrap();
        let brute = (0u64..1001).find(|x| x % 7 == r1 && x % 11 == r2 && x % 13 == r3).unwrap();
        prop_assert_eq!(n, BigUint::from(brute));
    }

    #[test]
    fn primality_agrees_with_trial_division(n in 0u64..200_000) {
        let trial = n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        prop_assert_eq!(is_prime(n), trial);
    }

    #[test]
    fn sigma_eps_is_monotone(n in 1u32..64, eps in 0u32..11) {
        prop_assert!(sigma_eps(n, eps + 1) >= sigma_eps(n, eps));
        prop_assert!(sigma_eps(n, eps) >= sigma0(n));
        prop_assert!(sigma0(n) >= sigma0_limit());
    }
}
