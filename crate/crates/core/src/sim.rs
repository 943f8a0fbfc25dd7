//! Hop-by-hop forwarding of an encoded header through a deployment.
//!
//! Each router re-parses the header from the wire bytes it received and
//! forwards those same bytes; the trace records them per hop so callers can
//! check that no router rewrote the packet.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::deployment::Deployment;
use crate::gf2::BitVector;
use crate::netmodel::{Attachment, Cast, RouterId, TopologyError};
use crate::routerplane::{self, filter_label, v2_label_width, LabelKind, PacketHeader};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Anomaly {
    /// Output port does not exist or nothing is attached to it.
    BlackHole { router: RouterId, port: usize },
    /// The router could not decode the header or its label.
    Malformed { router: RouterId, reason: String },
    /// No filter bank is provisioned on the router.
    Unprovisioned { router: RouterId },
    /// The packet came back to a router it already handled.
    Revisit { router: RouterId, in_port: usize },
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anomaly::BlackHole { router, port } => write!(f, "black hole at {router} port {port}"),
            Anomaly::Malformed { router, reason } => {
                write!(f, "{router} rejected the packet: {reason}")
            }
            Anomaly::Unprovisioned { router } => write!(f, "{router} has no filter bank"),
            Anomaly::Revisit { router, in_port } => {
                write!(f, "packet re-entered {router} on port {in_port}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HopTrace {
    pub router: RouterId,
    pub in_port: usize,
    /// Filtered interface label, empty when filtering failed.
    #[serde(serialize_with = "bits_as_string")]
    pub label: BitVector,
    pub out_ports: Vec<usize>,
    #[serde(serialize_with = "bytes_as_hex")]
    pub wire: Vec<u8>,
}

fn bits_as_string<S: serde::Serializer>(v: &BitVector, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn bytes_as_hex<S: serde::Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(v))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub ingress: String,
    #[serde(serialize_with = "bytes_as_hex")]
    pub wire: Vec<u8>,
    pub hops: Vec<HopTrace>,
    /// Edge nodes reached, in arrival order.
    pub delivered: Vec<String>,
    pub anomalies: Vec<Anomaly>,
}

impl Trace {
    /// Every hop saw exactly the injected bytes.
    pub fn header_unmodified(&self) -> bool {
        self.hops.iter().all(|h| h.wire == self.wire)
    }

    pub fn is_clean(&self) -> bool {
        self.anomalies.is_empty()
    }

    /// Delivered edge names, sorted.
    pub fn delivered_sorted(&self) -> Vec<String> {
        let mut d = self.delivered.clone();
        d.sort();
        d
    }
}

enum Step {
    Outputs(BitVector, Vec<usize>),
    Stop(BitVector, Anomaly),
}

fn decide(d: &Deployment, router: RouterId, in_port: usize, wire: &[u8]) -> Step {
    let malformed =
        |reason: String| Step::Stop(BitVector::zeros(0), Anomaly::Malformed { router, reason });
    let header = match PacketHeader::from_bytes(wire, d.epsilon()) {
        Ok(h) => h,
        Err(e) => return malformed(e.to_string()),
    };
    let Some(bank) = d.bank(router) else {
        return Step::Stop(BitVector::zeros(0), Anomaly::Unprovisioned { router });
    };
    match header.cast {
        Cast::Unicast => {
            let width = match d.unicast_width(router) {
                Ok(w) => w,
                Err(e) => return malformed(e.to_string()),
            };
            let label = match filter_label(&header, bank, width, LabelKind::UnicastXor) {
                Ok(l) => l,
                Err(e) => return malformed(e.to_string()),
            };
            match routerplane::resolve_unicast_output(&label, in_port) {
                Ok(out) => Step::Outputs(label.bits, vec![out]),
                Err(e) => Step::Stop(
                    label.bits,
                    Anomaly::Malformed {
                        router,
                        reason: e.to_string(),
                    },
                ),
            }
        }
        Cast::Multicast => {
            let kind = match d.multicast_kind(router) {
                Ok(k) => k,
                Err(e) => return malformed(e.to_string()),
            };
            let width = match kind {
                LabelKind::PrefixCoded { uplinks, ports } => {
                    // the first two columns are shared by all three layouts
                    let peek = match routerplane::filter(&header, bank, 2) {
                        Ok(p) => p,
                        Err(e) => return malformed(e.to_string()),
                    };
                    v2_label_width(peek.get(0), peek.get(1), uplinks, ports).0
                }
                _ => d.topology().ports(router).unwrap_or(0),
            };
            let label = match filter_label(&header, bank, width, kind) {
                Ok(l) => l,
                Err(e) => return malformed(e.to_string()),
            };
            match routerplane::resolve_multicast_outputs(&label) {
                Ok(set) => Step::Outputs(label.bits, set.into_iter().collect()),
                Err(e) => Step::Stop(
                    label.bits,
                    Anomaly::Malformed {
                        router,
                        reason: e.to_string(),
                    },
                ),
            }
        }
    }
}

/// Injects `wire` from edge node `ingress` and follows it until every copy is
/// delivered, dropped or flagged.
pub fn walk(d: &Deployment, wire: &[u8], ingress: &str) -> Result<Trace, SimError> {
    let start = d.topology().edge(ingress)?;
    let cast = PacketHeader::from_bytes(wire, d.epsilon())
        .map(|h| h.cast)
        .ok();
    let mut trace = Trace {
        ingress: ingress.to_string(),
        wire: wire.to_vec(),
        hops: Vec::new(),
        delivered: Vec::new(),
        anomalies: Vec::new(),
    };
    let mut seen_states = BTreeSet::new();
    let mut seen_routers = BTreeSet::new();
    let mut queue = VecDeque::from([(start.0, start.1, wire.to_vec())]);

    while let Some((router, in_port, bytes)) = queue.pop_front() {
        // unicast forwarding is a function of (router, in_port), so a repeated
        // state is a loop; a multicast tree reaches each router once
        let fresh = match cast {
            Some(Cast::Multicast) => seen_routers.insert(router),
            _ => seen_states.insert((router, in_port)),
        };
        if !fresh {
            trace.anomalies.push(Anomaly::Revisit { router, in_port });
            continue;
        }
        let (label, outs) = match decide(d, router, in_port, &bytes) {
            Step::Outputs(label, outs) => (label, outs),
            Step::Stop(label, anomaly) => {
                trace.hops.push(HopTrace {
                    router,
                    in_port,
                    label,
                    out_ports: Vec::new(),
                    wire: bytes,
                });
                trace.anomalies.push(anomaly);
                continue;
            }
        };
        for &out in &outs {
            match d.topology().attachment(router, out) {
                Some(Attachment::Edge(name)) => trace.delivered.push(name.clone()),
                Some(Attachment::Router { router: next, port }) => {
                    queue.push_back((*next, *port, bytes.clone()))
                }
                None => trace
                    .anomalies
                    .push(Anomaly::BlackHole { router, port: out }),
            }
        }
        trace.hops.push(HopTrace {
            router,
            in_port,
            label,
            out_ports: outs,
            wire: bytes,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitVector;
    use crate::netmodel::{fixtures::EXAMPLE_DOCUMENT, parse_topology};

    fn fixture() -> Deployment {
        Deployment::from_document(parse_topology(EXAMPLE_DOCUMENT).unwrap()).unwrap()
    }

    fn example_wire() -> Vec<u8> {
        PacketHeader {
            cast: Cast::Unicast,
            e: 0,
            label: "11100".parse::<BitVector>().unwrap(),
        }
        .to_bytes(0)
        .unwrap()
    }

    #[test]
    fn example_forward_and_reverse() {
        let d = fixture();
        let t = walk(&d, &example_wire(), "S").unwrap();
        assert!(t.is_clean(), "{:?}", t.anomalies);
        assert_eq!(t.delivered, vec!["D"]);
        let seq: Vec<(u64, usize, Vec<usize>)> = t
            .hops
            .iter()
            .map(|h| (h.router.0, h.in_port, h.out_ports.clone()))
            .collect();
        assert_eq!(
            seq,
            vec![(17, 2, vec![0]), (11, 0, vec![1]), (29, 1, vec![2])]
        );
        assert!(t.header_unmodified());

        let back = walk(&d, &example_wire(), "D").unwrap();
        assert_eq!(back.delivered, vec!["S"]);
        assert!(back.is_clean());
    }

    #[test]
    fn corrupted_label_is_flagged() {
        let d = fixture();
        let mut outcomes = 0;
        for bit in 0..5 {
            let mut label: BitVector = "11100".parse().unwrap();
            label.flip(bit);
            let wire = PacketHeader {
                cast: Cast::Unicast,
                e: 0,
                label,
            }
            .to_bytes(0)
            .unwrap();
            let t = walk(&d, &wire, "S").unwrap();
            if t.delivered != vec!["D"] || !t.is_clean() {
                outcomes += 1;
            }
            assert!(t.header_unmodified());
        }
        assert_eq!(outcomes, 5);
    }

    #[test]
    fn garbage_wire_is_malformed() {
        let d = fixture();
        let t = walk(&d, &[0xff], "S").unwrap();
        assert!(matches!(t.anomalies[..], [Anomaly::Malformed { .. }]));
        assert!(walk(&d, &example_wire(), "nowhere").is_err());
    }
}
