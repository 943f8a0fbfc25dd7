//! A topology together with the filter banks provisioned on its routers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{ClosParams, Role, RouterId, Topology, TopologyDocument};
use crate::routerplane::{
    make_filter_bank, unicast_label_width, BankMode, FilterBank, LabelKind, PlaneError, MAX_EPSILON,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeployError {
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error("line {line}: {message}")]
    Setting { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// How multicast interface labels are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MulticastMode {
    /// Plain port bitmaps everywhere.
    #[default]
    V1,
    /// Prefix-coded bitmaps on leafs, plain bitmaps on spines.
    V2,
}

impl FromStr for MulticastMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v1" => Ok(Self::V1),
            "v2" => Ok(Self::V2),
            _ => Err(format!("unknown multicast mode {s:?} (expected v1 or v2)")),
        }
    }
}

impl fmt::Display for MulticastMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::V1 => "v1",
            Self::V2 => "v2",
        })
    }
}

pub const DEFAULT_EPSILON: u32 = 4;
pub const DEFAULT_BANK_SEED: u64 = 1;
pub const DEFAULT_MAX_LABEL_LEN: usize = 64;

/// Provisioning knobs, as read from a topology document's `[deployment]` section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provisioning {
    pub epsilon: u32,
    pub bank_mode: BankMode,
    pub max_label_len: usize,
    pub multicast: MulticastMode,
}

impl Default for Provisioning {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            bank_mode: BankMode::Random {
                seed: DEFAULT_BANK_SEED,
            },
            max_label_len: DEFAULT_MAX_LABEL_LEN,
            multicast: MulticastMode::V1,
        }
    }
}

impl Provisioning {
    /// Reads `epsilon`, `banks`, `bank_seed`, `max_label_len` and `multicast`;
    /// missing keys keep their defaults.
    pub fn from_document(doc: &TopologyDocument) -> Result<Self, DeployError> {
        let mut p = Provisioning::default();
        let mut seed = DEFAULT_BANK_SEED;
        let mut cyclic = false;
        for (key, s) in &doc.settings {
            let bad = |message: String| DeployError::Setting {
                line: s.line,
                message,
            };
            match key.as_str() {
                "epsilon" => {
                    p.epsilon = s
                        .value
                        .parse()
                        .map_err(|_| bad(format!("bad epsilon {:?}", s.value)))?;
                    if p.epsilon > MAX_EPSILON {
                        return Err(bad(format!("epsilon must be at most {MAX_EPSILON}")));
                    }
                }
                "banks" => {
                    cyclic = match s.value.as_str() {
                        "random" => false,
                        "cyclic-id" => true,
                        other => {
                            return Err(bad(format!(
                                "unknown bank mode {other:?} (random or cyclic-id)"
                            )))
                        }
                    }
                }
                "bank_seed" => {
                    seed = s
                        .value
                        .parse()
                        .map_err(|_| bad(format!("bad bank_seed {:?}", s.value)))?
                }
                "max_label_len" => {
                    p.max_label_len = s
                        .value
                        .parse()
                        .map_err(|_| bad(format!("bad max_label_len {:?}", s.value)))?;
                }
                "multicast" => p.multicast = s.value.parse().map_err(bad)?,
                "clos" => {}
                other => return Err(bad(format!("unknown setting {other:?}"))),
            }
        }
        p.bank_mode = if cyclic {
            BankMode::CyclicId
        } else {
            BankMode::Random { seed }
        };
        Ok(p)
    }
}

#[derive(Debug, Clone)]
pub struct Deployment {
    topology: Topology,
    epsilon: u32,
    multicast: MulticastMode,
    banks: BTreeMap<RouterId, FilterBank>,
}

impl Deployment {
    /// Provisions a bank on every router of `topology`.
    pub fn provision(topology: Topology, p: Provisioning) -> Result<Self, DeployError> {
        let routers: Vec<RouterId> = topology.routers().map(|(id, _)| id).collect();
        Self::provision_routers(topology, p, &routers)
    }

    /// Provisions banks only on `routers`; packets reaching any other router are
    /// reported as anomalies by the simulator.
    pub fn provision_routers(
        topology: Topology,
        p: Provisioning,
        routers: &[RouterId],
    ) -> Result<Self, DeployError> {
        let mut d = Self::with_banks(topology, p.epsilon, p.multicast, BTreeMap::new())?;
        for &r in routers {
            let iface = d.max_iface_len(r)?;
            let bank = make_filter_bank(r, p.epsilon, p.max_label_len, iface, p.bank_mode)?;
            d.banks.insert(r, bank);
        }
        Ok(d)
    }

    pub fn with_banks(
        topology: Topology,
        epsilon: u32,
        multicast: MulticastMode,
        banks: BTreeMap<RouterId, FilterBank>,
    ) -> Result<Self, DeployError> {
        if epsilon > MAX_EPSILON {
            return Err(PlaneError::Epsilon(epsilon).into());
        }
        if multicast == MulticastMode::V2 && topology.clos().is_none() {
            return Err(DeployError::Invalid(
                "multicast v2 needs a clos fabric".into(),
            ));
        }
        for (id, bank) in &banks {
            if topology.router(*id).is_none() {
                return Err(DeployError::Invalid(format!(
                    "bank for unknown router {id}"
                )));
            }
            if bank.epsilon() != epsilon {
                return Err(DeployError::Invalid(format!(
                    "bank of {id} has epsilon {}, deployment uses {epsilon}",
                    bank.epsilon()
                )));
            }
        }
        Ok(Self {
            topology,
            epsilon,
            multicast,
            banks,
        })
    }

    pub fn from_document(doc: TopologyDocument) -> Result<Self, DeployError> {
        let p = Provisioning::from_document(&doc)?;
        Self::provision(doc.topology, p)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn epsilon(&self) -> u32 {
        self.epsilon
    }

    pub fn multicast(&self) -> MulticastMode {
        self.multicast
    }

    pub fn clos(&self) -> Option<ClosParams> {
        self.topology.clos()
    }

    pub fn bank(&self, r: RouterId) -> Option<&FilterBank> {
        self.banks.get(&r)
    }

    pub fn banks(&self) -> &BTreeMap<RouterId, FilterBank> {
        &self.banks
    }

    fn ports(&self, r: RouterId) -> Result<usize, DeployError> {
        self.topology
            .ports(r)
            .map_err(|e| DeployError::Invalid(e.to_string()))
    }

    pub fn unicast_width(&self, r: RouterId) -> Result<usize, DeployError> {
        Ok(unicast_label_width(self.ports(r)?))
    }

    /// How `r` decodes multicast labels in this deployment.
    pub fn multicast_kind(&self, r: RouterId) -> Result<LabelKind, DeployError> {
        let info = self
            .topology
            .router(r)
            .ok_or_else(|| DeployError::Invalid(format!("unknown router {r}")))?;
        match (self.multicast, info.role) {
            (MulticastMode::V1, _) | (MulticastMode::V2, Some(Role::Spine)) => {
                Ok(LabelKind::Bitmap)
            }
            (MulticastMode::V2, Some(Role::Leaf)) => {
                let p = self.clos().expect("checked at construction");
                Ok(LabelKind::PrefixCoded {
                    uplinks: p.spines,
                    ports: p.ports,
                })
            }
            (MulticastMode::V2, None) => Err(DeployError::Invalid(format!(
                "{r} is neither leaf nor spine; prefix coding applies to leafs only"
            ))),
        }
    }

    /// Widest interface label `r` can be asked to recover.
    pub fn max_iface_len(&self, r: RouterId) -> Result<usize, DeployError> {
        let ports = self.ports(r)?;
        let multicast = match self.multicast_kind(r) {
            Ok(LabelKind::PrefixCoded { ports, .. }) => 2 + ports,
            _ => ports,
        };
        Ok(multicast.max(unicast_label_width(ports)).max(1))
    }
}
