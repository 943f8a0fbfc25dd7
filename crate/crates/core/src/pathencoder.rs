//! Controller-side path-label construction.
//!
//! The interface labels of all routers are concatenated into `L`, their
//! filtering submatrices into the square matrix `M = (M_1 | ... | M_p)`, and
//! `P = L · M⁻¹` satisfies `P · M_k = L_k` for every router. Filter indices
//! `e = 0, 1, ...` are tried in order until `M` is invertible.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deployment::{DeployError, Deployment};
use crate::gf2::{self, BitMatrix, BitVector, Gf2Error};
use crate::netmodel::{Cast, PathSpec, RouterId};
use crate::routerplane::{
    self, InterfaceLabel, LabelKind, PacketHeader, PlaneError, MAX_LABEL_LEN,
};
use crate::sim;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("no invertible filter matrix among {attempts} candidates")]
    NoValidLabel { attempts: u32 },
    #[error("{0} appears more than once on the path")]
    DuplicateRouter(RouterId),
    #[error("path carries no interface label")]
    EmptyPath,
    #[error("{router}: bank holds {available} label bits, path needs {needed}")]
    BankTooSmall {
        router: RouterId,
        needed: usize,
        available: usize,
    },
    #[error("no filter bank provisioned on {0}")]
    MissingBank(RouterId),
    #[error("path label of {0} bits exceeds the {MAX_LABEL_LEN}-bit length field")]
    LabelTooLong(usize),
    #[error("{router} filters {got} instead of {want}")]
    Verification {
        router: RouterId,
        want: BitVector,
        got: BitVector,
    },
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeResult {
    pub header: PacketHeader,
    /// Gaussian eliminations performed, one per filter index tried.
    pub attempts: u32,
    /// Per-router interface labels in concatenation order.
    pub labels: Vec<(RouterId, InterfaceLabel)>,
}

impl EncodeResult {
    pub fn label_len(&self) -> usize {
        self.header.label_len()
    }
}

/// Interface labels for every router of `spec`, in concatenation order:
/// path order for unicast, ascending router id for multicast.
pub fn interface_labels(
    spec: &PathSpec,
    d: &Deployment,
) -> Result<Vec<(RouterId, InterfaceLabel)>, EncodeError> {
    match spec {
        PathSpec::Unicast(u) => u
            .hops
            .iter()
            .map(|h| {
                let width = d.unicast_width(h.router)?;
                Ok((
                    h.router,
                    InterfaceLabel::unicast(h.in_port, h.out_port, width)?,
                ))
            })
            .collect(),
        PathSpec::Multicast(m) => m
            .outputs
            .iter()
            .map(|(&r, ports)| {
                let label = match d.multicast_kind(r)? {
                    LabelKind::PrefixCoded { .. } => {
                        let p = d.clos().ok_or_else(|| {
                            EncodeError::Spec("prefix coding outside a clos fabric".into())
                        })?;
                        InterfaceLabel::prefix_coded(ports, p)?
                    }
                    _ => InterfaceLabel::bitmap(
                        ports,
                        d.topology()
                            .ports(r)
                            .map_err(|e| EncodeError::Spec(e.to_string()))?,
                    )?,
                };
                Ok((r, label))
            })
            .collect(),
    }
}

/// Builds the filter matrix for index `e` and label length `s_l`.
fn system_matrix(
    labels: &[(RouterId, InterfaceLabel)],
    d: &Deployment,
    e: u32,
    s_l: usize,
) -> Result<BitMatrix, EncodeError> {
    let blocks = labels
        .iter()
        .map(|(r, l)| {
            let bank = d.bank(*r).ok_or(EncodeError::MissingBank(*r))?;
            Ok(bank.select_submatrix(e, s_l, l.len())?)
        })
        .collect::<Result<Vec<_>, EncodeError>>()?;
    Ok(BitMatrix::hconcat(&blocks)?)
}

/// Solves for a path label given the per-router labels in any order.
pub fn solve(
    labels: &[(RouterId, InterfaceLabel)],
    cast: Cast,
    d: &Deployment,
) -> Result<EncodeResult, EncodeError> {
    let mut seen = BTreeSet::new();
    for (r, _) in labels {
        if !seen.insert(*r) {
            return Err(EncodeError::DuplicateRouter(*r));
        }
    }
    let s_l: usize = labels.iter().map(|(_, l)| l.len()).sum();
    if s_l == 0 {
        return Err(EncodeError::EmptyPath);
    }
    if s_l > MAX_LABEL_LEN {
        return Err(EncodeError::LabelTooLong(s_l));
    }
    for (r, l) in labels {
        let bank = d.bank(*r).ok_or(EncodeError::MissingBank(*r))?;
        if bank.max_label_len() < s_l {
            return Err(EncodeError::BankTooSmall {
                router: *r,
                needed: s_l,
                available: bank.max_label_len(),
            });
        }
        if bank.max_iface_len() < l.len() {
            return Err(EncodeError::Spec(format!(
                "{r}: interface label of {} bits exceeds the bank's {} columns",
                l.len(),
                bank.max_iface_len()
            )));
        }
    }
    let target = BitVector::concat(labels.iter().map(|(_, l)| &l.bits));

    let mut attempts = 0;
    for e in 0..1u32 << d.epsilon() {
        attempts += 1;
        let m = system_matrix(labels, d, e, s_l)?;
        let inverse = match gf2::invert(&m) {
            Ok(inv) => inv,
            Err(Gf2Error::NotInvertible { .. }) => continue,
            Err(other) => return Err(other.into()),
        };
        let header = PacketHeader {
            cast,
            e,
            label: gf2::vec_mat_mul(&target, &inverse)?,
        };
        for (r, l) in labels {
            let got = routerplane::filter(&header, d.bank(*r).expect("checked above"), l.len())?;
            if got != l.bits {
                return Err(EncodeError::Verification {
                    router: *r,
                    want: l.bits.clone(),
                    got,
                });
            }
        }
        return Ok(EncodeResult {
            header,
            attempts,
            labels: labels.to_vec(),
        });
    }
    Err(EncodeError::NoValidLabel { attempts })
}

pub fn encode(spec: &PathSpec, d: &Deployment) -> Result<EncodeResult, EncodeError> {
    let labels = interface_labels(spec, d)?;
    solve(&labels, spec.cast(), d)
}

fn filters_match(result: &EncodeResult, d: &Deployment) -> bool {
    result.labels.iter().all(|(r, l)| {
        d.bank(*r)
            .and_then(|b| routerplane::filter(&result.header, b, l.len()).ok())
            .is_some_and(|got| got == l.bits)
    })
}

fn walk_matches(spec: &PathSpec, d: &Deployment, wire: &[u8]) -> bool {
    let Ok(trace) = sim::walk(d, wire, spec.source()) else {
        return false;
    };
    if !trace.is_clean() || !trace.header_unmodified() {
        return false;
    }
    if let Some(hops) = spec.hops() {
        let walked: Vec<(RouterId, usize, Vec<usize>)> = trace
            .hops
            .iter()
            .map(|h| (h.router, h.in_port, h.out_ports.clone()))
            .collect();
        let planned: Vec<(RouterId, usize, Vec<usize>)> = hops
            .iter()
            .map(|h| (h.router, h.in_port, vec![h.out_port]))
            .collect();
        if walked != planned {
            return false;
        }
    }
    trace.delivered_sorted() == spec.destinations()
}

/// Every router recovers its interface label and the forwarding walk reaches
/// exactly the spec's destinations.
pub fn verify_forward(spec: &PathSpec, result: &EncodeResult, d: &Deployment) -> bool {
    let Ok(expected) = interface_labels(spec, d) else {
        return false;
    };
    let mut got = result.labels.clone();
    let mut want = expected;
    got.sort_by_key(|(r, _)| *r);
    want.sort_by_key(|(r, _)| *r);
    if got != want || result.header.cast != spec.cast() || !filters_match(result, d) {
        return false;
    }
    match result.header.to_bytes(d.epsilon()) {
        Ok(wire) => walk_matches(spec, d, &wire),
        Err(_) => false,
    }
}

/// The unmodified header, injected at the destination, retraces the path back
/// to the source.
pub fn verify_reverse(
    spec: &PathSpec,
    result: &EncodeResult,
    d: &Deployment,
) -> Result<bool, EncodeError> {
    let reversed = spec.reversed().ok_or_else(|| {
        EncodeError::Spec("reverse traversal is defined for unicast paths only".into())
    })?;
    // the XOR involution: each router maps the old output port back to the old input
    for (hop, (_, label)) in spec.hops().unwrap_or_default().iter().zip(&result.labels) {
        if routerplane::resolve_unicast_output(label, hop.out_port).ok() != Some(hop.in_port) {
            return Ok(false);
        }
    }
    Ok(match result.header.to_bytes(d.epsilon()) {
        Ok(wire) => walk_matches(&reversed, d, &wire),
        Err(_) => false,
    })
}

pub const ENCODE_SCHEMA: &str = "xsr-encode/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopLabel {
    pub router: RouterId,
    #[serde(flatten)]
    pub kind: LabelKind,
    pub label: String,
}

/// Serialized form of an [`EncodeResult`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeDocument {
    pub schema: String,
    pub cast: Cast,
    pub epsilon: u32,
    pub e: u32,
    pub label_len: usize,
    pub attempts: u32,
    pub path_label: String,
    pub header_hex: String,
    pub source: String,
    pub destinations: Vec<String>,
    pub hops: Vec<HopLabel>,
}

impl EncodeDocument {
    pub fn new(spec: &PathSpec, result: &EncodeResult, epsilon: u32) -> Result<Self, EncodeError> {
        Ok(Self {
            schema: ENCODE_SCHEMA.to_string(),
            cast: result.header.cast,
            epsilon,
            e: result.header.e,
            label_len: result.label_len(),
            attempts: result.attempts,
            path_label: result.header.label.to_string(),
            header_hex: hex::encode(result.header.to_bytes(epsilon)?),
            source: spec.source().to_string(),
            destinations: spec.destinations(),
            hops: result
                .labels
                .iter()
                .map(|(r, l)| HopLabel {
                    router: *r,
                    kind: l.kind,
                    label: l.bits.to_string(),
                })
                .collect(),
        })
    }

    pub fn header(&self) -> Result<PacketHeader, EncodeError> {
        let bytes = hex::decode(&self.header_hex)
            .map_err(|e| EncodeError::Spec(format!("header_hex: {e}")))?;
        Ok(PacketHeader::from_bytes(&bytes, self.epsilon)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{MulticastMode, Provisioning};
    use crate::netmodel::{
        build_clos, clos_unicast_path, fixtures::EXAMPLE_DOCUMENT, parse_topology, ClosParams, Hop,
        Topology,
    };
    use crate::routerplane::{BankMode, FilterBank};
    use std::collections::BTreeMap;

    fn fixture() -> Deployment {
        Deployment::from_document(parse_topology(EXAMPLE_DOCUMENT).unwrap()).unwrap()
    }

    fn example_spec(d: &Deployment) -> PathSpec {
        PathSpec::unicast(
            d.topology(),
            "S",
            "D",
            &[RouterId(17), RouterId(11), RouterId(29)],
        )
        .unwrap()
    }

    #[test]
    fn example_labels() {
        let d = fixture();
        let labels = interface_labels(&example_spec(&d), &d).unwrap();
        let bits: Vec<String> = labels.iter().map(|(_, l)| l.bits.to_string()).collect();
        assert_eq!(bits, vec!["10", "1", "11"]);
    }

    #[test]
    fn example_encode() {
        let d = fixture();
        let spec = example_spec(&d);
        let r = encode(&spec, &d).unwrap();
        assert_eq!(r.header.label.to_string(), "11100");
        assert_eq!(r.header.e, 0);
        assert_eq!(r.attempts, 1);
        assert!(verify_forward(&spec, &r, &d));
        assert!(verify_reverse(&spec, &r, &d).unwrap());
    }

    #[test]
    fn single_hop_identity() {
        let mut b = Topology::builder();
        b.router(RouterId(1), 2, None).unwrap();
        b.edge("a", RouterId(1), 0).unwrap();
        b.edge("b", RouterId(1), 1).unwrap();
        let t = b.build();
        let bank = FilterBank::from_matrices(RouterId(1), 0, vec![BitMatrix::identity(1)]).unwrap();
        let d = Deployment::with_banks(
            t,
            0,
            MulticastMode::V1,
            BTreeMap::from([(RouterId(1), bank)]),
        )
        .unwrap();
        let spec = PathSpec::unicast(d.topology(), "a", "b", &[RouterId(1)]).unwrap();
        let r = encode(&spec, &d).unwrap();
        assert_eq!(r.header.label.to_string(), "1");
        assert_eq!(r.labels[0].1.bits.to_string(), "1");
        assert!(verify_forward(&spec, &r, &d));
        assert!(verify_reverse(&spec, &r, &d).unwrap());
    }

    #[test]
    fn singular_everywhere_fails() {
        let mut b = Topology::builder();
        b.router(RouterId(1), 2, None).unwrap();
        b.edge("a", RouterId(1), 0).unwrap();
        b.edge("b", RouterId(1), 1).unwrap();
        let t = b.build();
        let zero = BitMatrix::zeros(4, 1);
        let bank = FilterBank::from_matrices(RouterId(1), 1, vec![zero.clone(), zero]).unwrap();
        let d = Deployment::with_banks(
            t,
            1,
            MulticastMode::V1,
            BTreeMap::from([(RouterId(1), bank)]),
        )
        .unwrap();
        let spec = PathSpec::unicast(d.topology(), "a", "b", &[RouterId(1)]).unwrap();
        assert_eq!(
            encode(&spec, &d),
            Err(EncodeError::NoValidLabel { attempts: 2 })
        );
    }

    #[test]
    fn duplicate_router_is_rejected() {
        // a ring 1 - 2 - 1 through two parallel links
        let mut b = Topology::builder();
        b.router(RouterId(1), 4, None).unwrap();
        b.router(RouterId(2), 2, None).unwrap();
        b.link((RouterId(1), 1), (RouterId(2), 0)).unwrap();
        b.link((RouterId(2), 1), (RouterId(1), 2)).unwrap();
        b.edge("a", RouterId(1), 0).unwrap();
        b.edge("b", RouterId(1), 3).unwrap();
        let t = b.build();
        let hops = vec![
            Hop {
                router: RouterId(1),
                in_port: 0,
                out_port: 1,
            },
            Hop {
                router: RouterId(2),
                in_port: 0,
                out_port: 1,
            },
            Hop {
                router: RouterId(1),
                in_port: 2,
                out_port: 3,
            },
        ];
        let spec = PathSpec::unicast_from_hops(&t, "a", "b", hops).unwrap();
        let d = Deployment::provision(t, Provisioning::default()).unwrap();
        assert_eq!(
            encode(&spec, &d),
            Err(EncodeError::DuplicateRouter(RouterId(1)))
        );
    }

    #[test]
    fn bank_too_small() {
        let p = ClosParams::new(2, 4, 16).unwrap();
        let d = Deployment::provision(
            build_clos(p).unwrap(),
            Provisioning {
                max_label_len: 8,
                ..Provisioning::default()
            },
        )
        .unwrap();
        let spec = clos_unicast_path(d.topology(), p, "h0.2", "h1.2", 0).unwrap();
        assert!(matches!(
            encode(&spec, &d),
            Err(EncodeError::BankTooSmall { needed: 10, .. })
        ));
    }

    #[test]
    fn clos_v2_broadcast_label_sizes() {
        let p = ClosParams::new(6, 12, 16).unwrap();
        let topo = build_clos(p).unwrap();
        let prov = Provisioning {
            multicast: MulticastMode::V2,
            max_label_len: 160,
            bank_mode: BankMode::Random { seed: 4 },
            epsilon: 4,
        };
        let d = Deployment::provision(topo, prov).unwrap();
        let spec = crate::netmodel::multicast_broadcast_spec(d.topology(), p, "h0.6").unwrap();
        let labels = interface_labels(&spec, &d).unwrap();
        let ingress = &labels.iter().find(|(r, _)| *r == p.leaf_id(0)).unwrap().1;
        assert_eq!(ingress.len(), 18);
        assert_eq!(&ingress.bits.to_string()[..2], "11");
        for l in 1..12 {
            let other = &labels.iter().find(|(r, _)| *r == p.leaf_id(l)).unwrap().1;
            assert_eq!(other.len(), 11);
            assert!(!other.bits.get(0));
        }
        let total: usize = labels.iter().map(|(_, l)| l.len()).sum();
        assert_eq!(total, 2 + 16 + 12 + 11 * 11);
        assert_eq!((total + 4).div_ceil(8), 20);

        let r = encode(&spec, &d).unwrap();
        assert!(verify_forward(&spec, &r, &d));
        assert!(verify_reverse(&spec, &r, &d).is_err());
    }

    #[test]
    fn document_round_trip() {
        let d = fixture();
        let spec = example_spec(&d);
        let r = encode(&spec, &d).unwrap();
        let doc = EncodeDocument::new(&spec, &r, d.epsilon()).unwrap();
        assert_eq!(doc.header_hex, "005e00");
        let json = serde_json::to_string(&doc).unwrap();
        let back: EncodeDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.header().unwrap(), r.header);
        assert!(json.contains("\"kind\":\"unicast-xor\""));
    }

    #[test]
    fn encode_is_deterministic() {
        let p = ClosParams::new(2, 4, 16).unwrap();
        let d = Deployment::provision(build_clos(p).unwrap(), Provisioning::default()).unwrap();
        let spec = clos_unicast_path(d.topology(), p, "h0.3", "h2.9", 1).unwrap();
        assert_eq!(encode(&spec, &d).unwrap(), encode(&spec, &d).unwrap());
    }
}
