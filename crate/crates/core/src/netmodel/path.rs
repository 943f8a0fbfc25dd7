use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Attachment, PathError, RouterId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cast {
    Unicast,
    Multicast,
}

/// One router crossing on a unicast path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub router: RouterId,
    pub in_port: usize,
    pub out_port: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnicastPath {
    pub src: String,
    pub dst: String,
    pub hops: Vec<Hop>,
}

impl UnicastPath {
    /// The same path walked from `dst` back to `src`.
    pub fn reversed(&self) -> UnicastPath {
        UnicastPath {
            src: self.dst.clone(),
            dst: self.src.clone(),
            hops: self
                .hops
                .iter()
                .rev()
                .map(|h| Hop {
                    router: h.router,
                    in_port: h.out_port,
                    out_port: h.in_port,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulticastTree {
    pub source: String,
    pub ingress: (RouterId, usize),
    pub outputs: BTreeMap<RouterId, BTreeSet<usize>>,
    /// Edge nodes reached by the tree, sorted.
    pub destinations: Vec<String>,
}

/// The routing intent handed to the encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSpec {
    Unicast(UnicastPath),
    Multicast(MulticastTree),
}

impl PathSpec {
    /// Resolves in/out ports for the router walk `routers` from edge `src` to
    /// edge `dst`. Between consecutive routers the lowest connecting port is used.
    pub fn unicast(
        t: &Topology,
        src: &str,
        dst: &str,
        routers: &[RouterId],
    ) -> Result<PathSpec, PathError> {
        let (first, src_port) = t.edge(src)?;
        let (last, dst_port) = t.edge(dst)?;
        let (Some(&head), Some(&tail)) = (routers.first(), routers.last()) else {
            return Err(PathError::Invalid("empty router list".into()));
        };
        for &r in routers {
            t.ports(r)?;
        }
        if head != first {
            return Err(PathError::Disconnected(format!(
                "edge {src} is not attached to {head}"
            )));
        }
        if tail != last {
            return Err(PathError::Disconnected(format!(
                "edge {dst} is not attached to {tail}"
            )));
        }
        let mut hops = Vec::with_capacity(routers.len());
        let mut in_port = src_port;
        for w in routers.windows(2) {
            let (a, b) = (w[0], w[1]);
            let out = *t
                .ports_towards(a, b)
                .first()
                .ok_or_else(|| PathError::Disconnected(format!("no link between {a} and {b}")))?;
            hops.push(Hop {
                router: a,
                in_port,
                out_port: out,
            });
            in_port = match t.attachment(a, out) {
                Some(Attachment::Router { port, .. }) => *port,
                _ => unreachable!("ports_towards returned a non-link port"),
            };
        }
        hops.push(Hop {
            router: tail,
            in_port,
            out_port: dst_port,
        });
        Self::unicast_from_hops(t, src, dst, hops)
    }

    /// Validates an explicit hop list against the topology.
    pub fn unicast_from_hops(
        t: &Topology,
        src: &str,
        dst: &str,
        hops: Vec<Hop>,
    ) -> Result<PathSpec, PathError> {
        let Some(first) = hops.first() else {
            return Err(PathError::Invalid("empty hop list".into()));
        };
        if t.edge(src)? != (first.router, first.in_port) {
            return Err(PathError::Disconnected(format!(
                "edge {src} is not on {} port {}",
                first.router, first.in_port
            )));
        }
        let last = hops[hops.len() - 1];
        if t.edge(dst)? != (last.router, last.out_port) {
            return Err(PathError::Disconnected(format!(
                "edge {dst} is not on {} port {}",
                last.router, last.out_port
            )));
        }
        for (i, h) in hops.iter().enumerate() {
            let ports = t.ports(h.router)?;
            if h.in_port >= ports || h.out_port >= ports {
                return Err(PathError::Invalid(format!(
                    "{} has no port {}",
                    h.router,
                    h.in_port.max(h.out_port)
                )));
            }
            if h.in_port == h.out_port {
                return Err(PathError::Invalid(format!(
                    "{} would send the packet back out of its ingress port {}",
                    h.router, h.in_port
                )));
            }
            if let Some(next) = hops.get(i + 1) {
                let expected = Attachment::Router {
                    router: next.router,
                    port: next.in_port,
                };
                if t.attachment(h.router, h.out_port) != Some(&expected) {
                    return Err(PathError::Disconnected(format!(
                        "{} port {} does not reach {} port {}",
                        h.router, h.out_port, next.router, next.in_port
                    )));
                }
            }
        }
        Ok(PathSpec::Unicast(UnicastPath {
            src: src.to_string(),
            dst: dst.to_string(),
            hops,
        }))
    }

    /// Validates that `outputs` form a delivery tree rooted at edge `source`:
    /// every reached router has an output set, no router is reached twice, no
    /// port leads nowhere, and every listed router is reached.
    pub fn multicast(
        t: &Topology,
        source: &str,
        outputs: BTreeMap<RouterId, BTreeSet<usize>>,
    ) -> Result<PathSpec, PathError> {
        let ingress = t.edge(source)?;
        for &r in outputs.keys() {
            t.ports(r)?;
        }
        let mut destinations = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([ingress]);
        seen.insert(ingress.0);
        while let Some((router, in_port)) = queue.pop_front() {
            let set = outputs.get(&router).ok_or_else(|| {
                PathError::Invalid(format!(
                    "{router} receives the packet but has no output set"
                ))
            })?;
            for &out in set {
                if out == in_port {
                    return Err(PathError::Invalid(format!(
                        "{router} forwards back out of its ingress port {out}"
                    )));
                }
                match t.attachment(router, out) {
                    None => {
                        return Err(PathError::Invalid(format!(
                            "{router} port {out} is not attached"
                        )));
                    }
                    Some(Attachment::Edge(name)) => destinations.push(name.clone()),
                    Some(Attachment::Router { router: next, port }) => {
                        if !seen.insert(*next) {
                            return Err(PathError::Invalid(format!(
                                "{next} is reached more than once"
                            )));
                        }
                        queue.push_back((*next, *port));
                    }
                }
            }
        }
        if let Some(r) = outputs.keys().find(|r| !seen.contains(r)) {
            return Err(PathError::Disconnected(format!(
                "{r} is not reachable from {source}"
            )));
        }
        destinations.sort();
        Ok(PathSpec::Multicast(MulticastTree {
            source: source.to_string(),
            ingress,
            outputs,
            destinations,
        }))
    }

    pub fn cast(&self) -> Cast {
        match self {
            PathSpec::Unicast(_) => Cast::Unicast,
            PathSpec::Multicast(_) => Cast::Multicast,
        }
    }

    pub fn hops(&self) -> Option<&[Hop]> {
        match self {
            PathSpec::Unicast(u) => Some(&u.hops),
            PathSpec::Multicast(_) => None,
        }
    }

    pub fn outputs(&self) -> Option<&BTreeMap<RouterId, BTreeSet<usize>>> {
        match self {
            PathSpec::Unicast(_) => None,
            PathSpec::Multicast(m) => Some(&m.outputs),
        }
    }

    pub fn source(&self) -> &str {
        match self {
            PathSpec::Unicast(u) => &u.src,
            PathSpec::Multicast(m) => &m.source,
        }
    }

    /// Edge nodes the packet must reach.
    pub fn destinations(&self) -> Vec<String> {
        match self {
            PathSpec::Unicast(u) => vec![u.dst.clone()],
            PathSpec::Multicast(m) => m.destinations.clone(),
        }
    }

    /// Routers carrying an interface label, in label-concatenation order.
    pub fn routers(&self) -> Vec<RouterId> {
        match self {
            PathSpec::Unicast(u) => u.hops.iter().map(|h| h.router).collect(),
            PathSpec::Multicast(m) => m.outputs.keys().copied().collect(),
        }
    }

    pub fn reversed(&self) -> Option<PathSpec> {
        match self {
            PathSpec::Unicast(u) => Some(PathSpec::Unicast(u.reversed())),
            PathSpec::Multicast(_) => None,
        }
    }
}
