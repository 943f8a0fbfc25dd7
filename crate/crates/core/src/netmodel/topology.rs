use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ClosParams, TopologyError};

/// Unique router identifier; it also seeds the router's filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouterId(pub u64);

impl fmt::Display for RouterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// Accepts `17` as well as the displayed form `R17`.
impl FromStr for RouterId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix(['R', 'r']).unwrap_or(s);
        digits
            .parse()
            .map(RouterId)
            .map_err(|_| format!("invalid router id {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Spine,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouterInfo {
    pub ports: usize,
    pub role: Option<Role>,
}

/// What sits on the far side of a router port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attachment {
    Router { router: RouterId, port: usize },
    Edge(String),
}

/// Routers, point-to-point links and edge-node attachments.
///
/// Built through [`TopologyBuilder`]; read-only afterwards.
#[derive(Debug, Clone, Default)]
pub struct Topology {
    routers: BTreeMap<RouterId, RouterInfo>,
    attachments: BTreeMap<(RouterId, usize), Attachment>,
    edges: BTreeMap<String, (RouterId, usize)>,
    clos: Option<ClosParams>,
}

impl Topology {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    pub fn router(&self, id: RouterId) -> Option<&RouterInfo> {
        self.routers.get(&id)
    }

    pub fn routers(&self) -> impl Iterator<Item = (RouterId, &RouterInfo)> {
        self.routers.iter().map(|(id, info)| (*id, info))
    }

    pub fn router_count(&self) -> usize {
        self.routers.len()
    }

    pub fn ports(&self, id: RouterId) -> Result<usize, TopologyError> {
        self.router(id)
            .map(|r| r.ports)
            .ok_or(TopologyError::UnknownRouter(id))
    }

    pub fn attachment(&self, router: RouterId, port: usize) -> Option<&Attachment> {
        self.attachments.get(&(router, port))
    }

    /// Every link, listed once from its lower endpoint.
    pub fn links(&self) -> impl Iterator<Item = ((RouterId, usize), (RouterId, usize))> + '_ {
        self.attachments.iter().filter_map(|(&(r, p), a)| match a {
            Attachment::Router { router, port } if (r, p) < (*router, *port) => {
                Some(((r, p), (*router, *port)))
            }
            _ => None,
        })
    }

    pub fn edge(&self, name: &str) -> Result<(RouterId, usize), TopologyError> {
        self.edges
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownEdge(name.to_string()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, (RouterId, usize))> {
        self.edges.iter().map(|(n, a)| (n.as_str(), *a))
    }

    /// Ports of `a` that lead directly to `b`, ascending.
    pub fn ports_towards(&self, a: RouterId, b: RouterId) -> Vec<usize> {
        self.attachments
            .range((a, 0)..=(a, usize::MAX))
            .filter_map(|(&(_, p), att)| match att {
                Attachment::Router { router, .. } if *router == b => Some(p),
                _ => None,
            })
            .collect()
    }

    pub fn neighbors(&self, a: RouterId) -> Vec<(usize, RouterId, usize)> {
        self.attachments
            .range((a, 0)..=(a, usize::MAX))
            .filter_map(|(&(_, p), att)| match att {
                Attachment::Router { router, port } => Some((p, *router, *port)),
                Attachment::Edge(_) => None,
            })
            .collect()
    }

    pub fn edges_at(&self, a: RouterId) -> Vec<(usize, &str)> {
        self.attachments
            .range((a, 0)..=(a, usize::MAX))
            .filter_map(|(&(_, p), att)| match att {
                Attachment::Edge(name) => Some((p, name.as_str())),
                Attachment::Router { .. } => None,
            })
            .collect()
    }

    /// Fabric parameters when the topology is a generated 2-tier Clos.
    pub fn clos(&self) -> Option<ClosParams> {
        self.clos
    }
}

#[derive(Debug, Default)]
pub struct TopologyBuilder {
    inner: Topology,
}

impl TopologyBuilder {
    pub fn router(
        &mut self,
        id: RouterId,
        ports: usize,
        role: Option<Role>,
    ) -> Result<&mut Self, TopologyError> {
        if self.inner.routers.contains_key(&id) {
            return Err(TopologyError::DuplicateRouter(id));
        }
        self.inner.routers.insert(id, RouterInfo { ports, role });
        Ok(self)
    }

    fn claim(
        &mut self,
        router: RouterId,
        port: usize,
        att: Attachment,
    ) -> Result<(), TopologyError> {
        let info = self
            .inner
            .routers
            .get(&router)
            .ok_or(TopologyError::UnknownRouter(router))?;
        if port >= info.ports {
            return Err(TopologyError::PortOutOfRange {
                router,
                port,
                ports: info.ports,
            });
        }
        if self.inner.attachments.contains_key(&(router, port)) {
            return Err(TopologyError::PortInUse { router, port });
        }
        self.inner.attachments.insert((router, port), att);
        Ok(())
    }

    pub fn link(
        &mut self,
        a: (RouterId, usize),
        b: (RouterId, usize),
    ) -> Result<&mut Self, TopologyError> {
        if a == b {
            return Err(TopologyError::PortInUse {
                router: a.0,
                port: a.1,
            });
        }
        // validate both ends before claiming either
        for &(r, p) in &[a, b] {
            let info = self
                .inner
                .routers
                .get(&r)
                .ok_or(TopologyError::UnknownRouter(r))?;
            if p >= info.ports {
                return Err(TopologyError::PortOutOfRange {
                    router: r,
                    port: p,
                    ports: info.ports,
                });
            }
            if self.inner.attachments.contains_key(&(r, p)) {
                return Err(TopologyError::PortInUse { router: r, port: p });
            }
        }
        self.claim(
            a.0,
            a.1,
            Attachment::Router {
                router: b.0,
                port: b.1,
            },
        )?;
        self.claim(
            b.0,
            b.1,
            Attachment::Router {
                router: a.0,
                port: a.1,
            },
        )?;
        Ok(self)
    }

    pub fn edge(
        &mut self,
        name: &str,
        router: RouterId,
        port: usize,
    ) -> Result<&mut Self, TopologyError> {
        if self.inner.edges.contains_key(name) {
            return Err(TopologyError::DuplicateEdge(name.to_string()));
        }
        self.claim(router, port, Attachment::Edge(name.to_string()))?;
        self.inner.edges.insert(name.to_string(), (router, port));
        Ok(self)
    }

    pub fn clos(&mut self, params: ClosParams) -> &mut Self {
        self.inner.clos = Some(params);
        self
    }

    pub fn build(&mut self) -> Topology {
        std::mem::take(&mut self.inner)
    }
}
