#![allow(dead_code)]

use rand::Rng;
use xsr_core::deployment::{Deployment, MulticastMode, Provisioning};
use xsr_core::gf2::stream_rng;
use xsr_core::netmodel::{build_clos, clos_unicast_path, ClosParams, PathSpec, RouterId, Topology};
use xsr_core::routerplane::{unicast_label_width, BankMode};

pub struct Instance {
    pub deployment: Deployment,
    pub spec: PathSpec,
}

impl Instance {
    pub fn label_bits(&self) -> usize {
        self.spec
            .routers()
            .iter()
            .map(|r| unicast_label_width(self.deployment.topology().ports(*r).unwrap()))
            .sum()
    }
}

fn take(free: &mut [Vec<usize>], r: usize, rng: &mut impl Rng) -> usize {
    let i = rng.random_range(0..free[r].len());
    free[r].swap_remove(i)
}

/// Connected random graph: a random spanning tree plus a few extra links,
/// with edge switches on some of the remaining free ports.
pub fn random_graph(rng: &mut impl Rng) -> Topology {
    let n = rng.random_range(1..=8usize);
    let ports: Vec<usize> = (0..n).map(|_| rng.random_range(3..=9)).collect();
    let mut free: Vec<Vec<usize>> = ports.iter().map(|&p| (0..p).collect()).collect();
    let mut b = Topology::builder();
    for (i, &p) in ports.iter().enumerate() {
        b.router(RouterId(i as u64 + 1), p, None).unwrap();
    }
    for i in 1..n {
        // router i - 1 still has at least two free ports, so a candidate exists
        // and every router keeps a port for an edge switch
        let candidates: Vec<usize> = (0..i).filter(|&j| free[j].len() > 1).collect();
        let j = candidates[rng.random_range(0..candidates.len())];
        let a = take(&mut free, i, rng);
        let c = take(&mut free, j, rng);
        b.link((RouterId(i as u64 + 1), a), (RouterId(j as u64 + 1), c))
            .unwrap();
    }
    for _ in 0..rng.random_range(0..=n) {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && free[i].len() > 2 && free[j].len() > 2 {
            let a = take(&mut free, i, rng);
            let c = take(&mut free, j, rng);
            b.link((RouterId(i as u64 + 1), a), (RouterId(j as u64 + 1), c))
                .unwrap();
        }
    }
    for r in 0..n {
        // a lone router needs two edge switches to carry a path
        let min = if n == 1 { 2 } else { 1 };
        let count = rng.random_range(min..=free[r].len());
        for k in 0..count {
            let port = take(&mut free, r, rng);
            b.edge(&format!("e{}.{k}", r + 1), RouterId(r as u64 + 1), port)
                .unwrap();
        }
    }
    b.build()
}

/// Shortest router sequence between two edge switches.
fn bfs_routers(t: &Topology, from: RouterId, to: RouterId) -> Vec<RouterId> {
    use std::collections::{BTreeMap, VecDeque};
    let mut parent: BTreeMap<RouterId, RouterId> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    parent.insert(from, from);
    while let Some(r) = queue.pop_front() {
        if r == to {
            break;
        }
        for (_, next, _) in t.neighbors(r) {
            if let std::collections::btree_map::Entry::Vacant(slot) = parent.entry(next) {
                slot.insert(r);
                queue.push_back(next);
            }
        }
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(parent[path.last().unwrap()]);
    }
    path.reverse();
    path
}

pub fn random_unicast_in(t: &Topology, rng: &mut impl Rng) -> PathSpec {
    let edges: Vec<(String, RouterId, usize)> =
        t.edges().map(|(n, (r, p))| (n.to_string(), r, p)).collect();
    loop {
        let a = &edges[rng.random_range(0..edges.len())];
        let b = &edges[rng.random_range(0..edges.len())];
        if a.0 == b.0 {
            continue;
        }
        let routers = bfs_routers(t, a.1, b.1);
        return PathSpec::unicast(t, &a.0, &b.0, &routers).unwrap();
    }
}

fn random_clos_unicast(rng: &mut impl Rng) -> (Topology, PathSpec) {
    let spines = rng.random_range(1..=6usize);
    let leafs = rng.random_range(2..=12usize);
    let ports = rng.random_range(spines + 1..=spines + 30);
    let p = ClosParams::new(spines, leafs, ports).unwrap();
    let t = build_clos(p).unwrap();
    let src = ClosParams::edge_name(rng.random_range(0..leafs), rng.random_range(spines..ports));
    let dst = loop {
        let d = ClosParams::edge_name(rng.random_range(0..leafs), rng.random_range(spines..ports));
        if d != src {
            break d;
        }
    };
    let spec = clos_unicast_path(&t, p, &src, &dst, rng.random_range(0..spines)).unwrap();
    (t, spec)
}

/// Instance `index` of the stream named by `seed`: a random graph or Clos
/// fabric, a unicast path across it, and fresh random banks on the path's
/// routers.
pub fn unicast_instance(seed: u64, index: u64, epsilon: u32) -> Instance {
    let mut rng = stream_rng(seed, index);
    let (topology, spec) = if rng.random_bool(0.5) {
        let t = random_graph(&mut rng);
        let spec = random_unicast_in(&t, &mut rng);
        (t, spec)
    } else {
        random_clos_unicast(&mut rng)
    };
    let prov = Provisioning {
        epsilon,
        bank_mode: BankMode::Random { seed: rng.random() },
        max_label_len: 64,
        multicast: MulticastMode::V1,
    };
    let deployment = Deployment::provision_routers(topology, prov, &spec.routers()).unwrap();
    Instance { deployment, spec }
}
