//! Network topologies and the paths encoded across them.

mod clos;
mod document;
mod path;
mod topology;

pub use clos::{build_clos, clos_unicast_path, multicast_broadcast_spec, ClosParams};
pub use document::{
    parse_clos_setting, parse_topology, write_topology, ParseError, Setting, TopologyDocument,
};
pub use path::{Cast, Hop, MulticastTree, PathSpec, UnicastPath};
pub use topology::{Attachment, Role, RouterId, RouterInfo, Topology, TopologyBuilder};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("router {0} declared twice")]
    DuplicateRouter(RouterId),
    #[error("unknown router {0}")]
    UnknownRouter(RouterId),
    #[error("edge node {0:?} declared twice")]
    DuplicateEdge(String),
    #[error("unknown edge node {0:?}")]
    UnknownEdge(String),
    #[error("{router} has no port {port} (it has {ports})")]
    PortOutOfRange {
        router: RouterId,
        port: usize,
        ports: usize,
    },
    #[error("{router} port {port} is already in use")]
    PortInUse { router: RouterId, port: usize },
    #[error("invalid clos parameters: {0}")]
    InvalidClos(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("disconnected path: {0}")]
    Disconnected(String),
    #[error("invalid path: {0}")]
    Invalid(String),
}

/// The three-router example network shipped in `fixtures/example.topo`.
pub mod fixtures {
    use super::{parse_topology, Topology};

    pub const EXAMPLE_DOCUMENT: &str = include_str!("../../fixtures/example.topo");

    pub fn example_topology() -> Topology {
        parse_topology(EXAMPLE_DOCUMENT)
            .expect("bundled fixture parses")
            .topology
    }
}
