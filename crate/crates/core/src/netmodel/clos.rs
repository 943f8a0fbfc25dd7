//! 2-tier leaf/spine fabric generator.
//!
//! Wiring convention: leaf ports `0..spines` are uplinks in spine order and
//! ports `spines..ports` attach edge switches; spine port `k` attaches leaf `k`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{PathError, PathSpec, Role, RouterId, Topology, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClosParams {
    pub spines: usize,
    pub leafs: usize,
    /// Ports per leaf, uplinks included.
    pub ports: usize,
}

impl ClosParams {
    pub fn new(spines: usize, leafs: usize, ports: usize) -> Result<Self, TopologyError> {
        let p = Self {
            spines,
            leafs,
            ports,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.spines < 1 || self.leafs < 2 || self.ports <= self.spines {
            return Err(TopologyError::InvalidClos(format!(
                "need spines >= 1, leafs >= 2, ports > spines (got {}, {}, {})",
                self.spines, self.leafs, self.ports
            )));
        }
        Ok(())
    }

    pub fn edge_ports(&self) -> usize {
        self.ports - self.spines
    }

    pub fn spine_id(&self, k: usize) -> RouterId {
        RouterId(k as u64 + 1)
    }

    pub fn leaf_id(&self, k: usize) -> RouterId {
        RouterId((self.spines + k) as u64 + 1)
    }

    /// Index of a leaf from its router id.
    pub fn leaf_index(&self, id: RouterId) -> Option<usize> {
        let k = (id.0 as usize).checked_sub(self.spines + 1)?;
        (k < self.leafs).then_some(k)
    }

    pub fn spine_index(&self, id: RouterId) -> Option<usize> {
        let k = (id.0 as usize).checked_sub(1)?;
        (k < self.spines).then_some(k)
    }

    /// Name of the edge switch on `port` of leaf `leaf`.
    pub fn edge_name(leaf: usize, port: usize) -> String {
        format!("h{leaf}.{port}")
    }
}

pub fn build_clos(p: ClosParams) -> Result<Topology, TopologyError> {
    p.validate()?;
    let mut b = Topology::builder();
    for s in 0..p.spines {
        b.router(p.spine_id(s), p.leafs, Some(Role::Spine))?;
    }
    for l in 0..p.leafs {
        b.router(p.leaf_id(l), p.ports, Some(Role::Leaf))?;
    }
    for s in 0..p.spines {
        for l in 0..p.leafs {
            b.link((p.leaf_id(l), s), (p.spine_id(s), l))?;
        }
    }
    for l in 0..p.leafs {
        for port in p.spines..p.ports {
            b.edge(&ClosParams::edge_name(l, port), p.leaf_id(l), port)?;
        }
    }
    b.clos(p);
    Ok(b.build())
}

/// Host-to-host unicast path: one hop when both edges share a leaf, otherwise
/// leaf, `spine`, leaf.
pub fn clos_unicast_path(
    t: &Topology,
    p: ClosParams,
    src: &str,
    dst: &str,
    spine: usize,
) -> Result<PathSpec, PathError> {
    let (src_leaf, _) = t.edge(src)?;
    let (dst_leaf, _) = t.edge(dst)?;
    if src_leaf == dst_leaf {
        PathSpec::unicast(t, src, dst, &[src_leaf])
    } else {
        if spine >= p.spines {
            return Err(PathError::Invalid(format!(
                "spine index {spine} out of range"
            )));
        }
        PathSpec::unicast(t, src, dst, &[src_leaf, p.spine_id(spine), dst_leaf])
    }
}

/// Broadcast from `source` to every other edge switch: the ingress leaf feeds its
/// other edge ports and spine 0, the spine feeds all other leafs, and those
/// leafs feed all their edge ports.
pub fn multicast_broadcast_spec(
    t: &Topology,
    p: ClosParams,
    source: &str,
) -> Result<PathSpec, PathError> {
    let (ingress, in_port) = t.edge(source)?;
    let ingress_leaf = p
        .leaf_index(ingress)
        .ok_or_else(|| PathError::Invalid(format!("edge {source} is not attached to a leaf")))?;

    let mut outputs: BTreeMap<RouterId, BTreeSet<usize>> = BTreeMap::new();
    let mut first: BTreeSet<usize> = (p.spines..p.ports).filter(|&q| q != in_port).collect();
    first.insert(0);
    outputs.insert(ingress, first);
    outputs.insert(
        p.spine_id(0),
        (0..p.leafs).filter(|&l| l != ingress_leaf).collect(),
    );
    for l in (0..p.leafs).filter(|&l| l != ingress_leaf) {
        outputs.insert(p.leaf_id(l), (p.spines..p.ports).collect());
    }
    PathSpec::multicast(t, source, outputs)
}
