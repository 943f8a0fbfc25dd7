//! Per-router data plane built around the filtering operation `F(P) = P · M`.

use std::collections::BTreeSet;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{self, BitMatrix, BitVector, Gf2Error};
use crate::netmodel::{Cast, ClosParams, RouterId};

/// Largest supported number of filter-index bits.
pub const MAX_EPSILON: u32 = 11;
/// Width of the header's label-length field.
pub const LABEL_LEN_BITS: usize = 11;
pub const MAX_LABEL_LEN: usize = (1 << LABEL_LEN_BITS) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaneError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("filter index {e} out of range for epsilon {epsilon}")]
    FilterIndex { e: u32, epsilon: u32 },
    #[error("epsilon {0} exceeds the supported maximum {MAX_EPSILON}")]
    Epsilon(u32),
    #[error("label of {0} bits exceeds the {MAX_LABEL_LEN}-bit length field")]
    LabelTooLong(usize),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed interface label: {0}")]
    MalformedLabel(String),
    #[error("invalid filter bank: {0}")]
    Bank(String),
}

/// Unicast label width for a router with `ports` interfaces: `ceil(log2(ports))`.
pub fn unicast_label_width(ports: usize) -> usize {
    if ports <= 1 {
        0
    } else {
        (usize::BITS - (ports - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LabelKind {
    /// `in XOR out`, most significant bit first.
    UnicastXor,
    /// One bit per port; port `j` is the `j`-th bit counted from the right.
    Bitmap,
    /// `{0, 10, 11}` prefix followed by an edge-only, uplink-only or full bitmap.
    PrefixCoded { uplinks: usize, ports: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceLabel {
    pub kind: LabelKind,
    pub bits: BitVector,
}

fn bitmap_bits(
    ports: impl IntoIterator<Item = usize>,
    offset: usize,
    width: usize,
) -> Result<BitVector, PlaneError> {
    let mut v = BitVector::zeros(width);
    for p in ports {
        let j = p
            .checked_sub(offset)
            .filter(|&j| j < width)
            .ok_or_else(|| {
                PlaneError::MalformedLabel(format!(
                    "port {p} outside the {width}-bit bitmap at offset {offset}"
                ))
            })?;
        v.set(width - 1 - j, true);
    }
    Ok(v)
}

fn bitmap_ports(bits: &BitVector, offset: usize) -> BTreeSet<usize> {
    let w = bits.len();
    (0..w)
        .filter(|&i| bits.get(i))
        .map(|i| offset + (w - 1 - i))
        .collect()
}

impl InterfaceLabel {
    pub fn unicast(in_port: usize, out_port: usize, width: usize) -> Result<Self, PlaneError> {
        let value = in_port ^ out_port;
        if width < usize::BITS as usize && value >> width != 0 {
            return Err(PlaneError::MalformedLabel(format!(
                "{in_port} xor {out_port} does not fit in {width} bits"
            )));
        }
        Ok(Self {
            kind: LabelKind::UnicastXor,
            bits: BitVector::from_uint(value as u64, width),
        })
    }

    pub fn bitmap(ports: &BTreeSet<usize>, width: usize) -> Result<Self, PlaneError> {
        Ok(Self {
            kind: LabelKind::Bitmap,
            bits: bitmap_bits(ports.iter().copied(), 0, width)?,
        })
    }

    /// Shortest prefix-coded label covering `ports` at a leaf of fabric `p`.
    pub fn prefix_coded(ports: &BTreeSet<usize>, p: ClosParams) -> Result<Self, PlaneError> {
        let uplink_only = ports.iter().all(|&q| q < p.spines);
        let edge_only = ports.iter().all(|&q| q >= p.spines && q < p.ports);
        let edge_width = 1 + p.edge_ports();
        let uplink_width = 2 + p.spines;
        let (prefix, body) = if edge_only && (!uplink_only || edge_width <= uplink_width) {
            (
                "0",
                bitmap_bits(ports.iter().copied(), p.spines, p.edge_ports())?,
            )
        } else if uplink_only {
            ("10", bitmap_bits(ports.iter().copied(), 0, p.spines)?)
        } else {
            ("11", bitmap_bits(ports.iter().copied(), 0, p.ports)?)
        };
        let prefix: BitVector = prefix.parse().expect("static prefix");
        Ok(Self {
            kind: LabelKind::PrefixCoded {
                uplinks: p.spines,
                ports: p.ports,
            },
            bits: BitVector::concat([&prefix, &body]),
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Width and port range selected by a prefix-coded label's first two bits.
/// A leading `0` ignores the second bit.
pub fn v2_label_width(
    first: bool,
    second: bool,
    uplinks: usize,
    ports: usize,
) -> (usize, Range<usize>) {
    match (first, second) {
        (false, _) => (1 + ports - uplinks, uplinks..ports),
        (true, false) => (2 + uplinks, 0..uplinks),
        (true, true) => (2 + ports, 0..ports),
    }
}

/// Output port for a unicast label: `in XOR label`.
pub fn resolve_unicast_output(l: &InterfaceLabel, in_port: usize) -> Result<usize, PlaneError> {
    if l.kind != LabelKind::UnicastXor {
        return Err(PlaneError::MalformedLabel("not a unicast label".into()));
    }
    let value = l
        .bits
        .to_uint()
        .ok_or_else(|| PlaneError::MalformedLabel("label wider than 64 bits".into()))?;
    let out = in_port ^ value as usize;
    if out == in_port {
        return Err(PlaneError::MalformedLabel(format!(
            "label {} sends the packet back out of port {in_port}",
            l.bits
        )));
    }
    Ok(out)
}

/// Output ports of a multicast label. An empty set means drop.
pub fn resolve_multicast_outputs(l: &InterfaceLabel) -> Result<BTreeSet<usize>, PlaneError> {
    match l.kind {
        LabelKind::UnicastXor => Err(PlaneError::MalformedLabel("not a multicast label".into())),
        LabelKind::Bitmap => Ok(bitmap_ports(&l.bits, 0)),
        LabelKind::PrefixCoded { uplinks, ports } => {
            if l.bits.len() < 2 {
                return Err(PlaneError::MalformedLabel(
                    "prefix-coded label shorter than 2 bits".into(),
                ));
            }
            let (width, range) = v2_label_width(l.bits.get(0), l.bits.get(1), uplinks, ports);
            if l.bits.len() != width {
                return Err(PlaneError::MalformedLabel(format!(
                    "prefix announces {width} bits, label has {}",
                    l.bits.len()
                )));
            }
            let prefix_len = width - range.len();
            Ok(bitmap_ports(&l.bits.slice(prefix_len, width), range.start))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BankMode {
    /// Uniform random matrices keyed by `(seed, router, e)`.
    Random { seed: u64 },
    /// Column 0 is `router id XOR e` in binary, the other columns its
    /// successive cyclic shifts.
    CyclicId,
}

/// A router's `2^epsilon` maximal filtering matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterBank {
    router: RouterId,
    epsilon: u32,
    max_label_len: usize,
    max_iface_len: usize,
    matrices: Vec<BitMatrix>,
}

fn bank_rng(seed: u64, router: RouterId, e: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&router.0.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(u64::from(e));
    rng
}

fn cyclic_matrix(first: &BitVector, cols: usize) -> BitMatrix {
    let n = first.len();
    let mut m = BitMatrix::zeros(n, cols);
    for c in 0..cols {
        for r in 0..n {
            if first.get((r + n - c % n) % n) {
                m.set(r, c, true);
            }
        }
    }
    m
}

pub fn make_filter_bank(
    router: RouterId,
    epsilon: u32,
    max_label_len: usize,
    max_iface_len: usize,
    mode: BankMode,
) -> Result<FilterBank, PlaneError> {
    if epsilon > MAX_EPSILON {
        return Err(PlaneError::Epsilon(epsilon));
    }
    if max_label_len == 0 || max_iface_len == 0 {
        return Err(PlaneError::Bank("dimensions must be positive".into()));
    }
    let matrices = (0..1u32 << epsilon)
        .map(|e| match mode {
            BankMode::Random { seed } => gf2::random_matrix_from(
                max_label_len,
                max_iface_len,
                &mut bank_rng(seed, router, e),
            ),
            BankMode::CyclicId => {
                let first = BitVector::from_uint(router.0 ^ u64::from(e), max_label_len);
                cyclic_matrix(&first, max_iface_len)
            }
        })
        .collect();
    Ok(FilterBank {
        router,
        epsilon,
        max_label_len,
        max_iface_len,
        matrices,
    })
}

impl FilterBank {
    /// Bank from explicit matrices; there must be `2^epsilon` of identical shape.
    pub fn from_matrices(
        router: RouterId,
        epsilon: u32,
        matrices: Vec<BitMatrix>,
    ) -> Result<Self, PlaneError> {
        if epsilon > MAX_EPSILON {
            return Err(PlaneError::Epsilon(epsilon));
        }
        if matrices.len() != 1 << epsilon {
            return Err(PlaneError::Bank(format!(
                "{} matrices given, epsilon {epsilon} needs {}",
                matrices.len(),
                1u32 << epsilon
            )));
        }
        let (rows, cols) = (matrices[0].rows(), matrices[0].cols());
        if rows == 0
            || cols == 0
            || matrices
                .iter()
                .any(|m| m.rows() != rows || m.cols() != cols)
        {
            return Err(PlaneError::Bank(
                "matrices must be non-empty and share one shape".into(),
            ));
        }
        Ok(Self {
            router,
            epsilon,
            max_label_len: rows,
            max_iface_len: cols,
            matrices,
        })
    }

    pub fn router(&self) -> RouterId {
        self.router
    }

    pub fn epsilon(&self) -> u32 {
        self.epsilon
    }

    pub fn max_label_len(&self) -> usize {
        self.max_label_len
    }

    pub fn max_iface_len(&self) -> usize {
        self.max_iface_len
    }

    pub fn matrices(&self) -> &[BitMatrix] {
        &self.matrices
    }

    /// Stored size in bits.
    pub fn storage_bits(&self) -> usize {
        self.matrices.len() * self.max_label_len * self.max_iface_len
    }

    /// The first `label_len` rows and `iface_len` columns of matrix `e`.
    pub fn select_submatrix(
        &self,
        e: u32,
        label_len: usize,
        iface_len: usize,
    ) -> Result<BitMatrix, PlaneError> {
        let m = self
            .matrices
            .get(e as usize)
            .ok_or(PlaneError::FilterIndex {
                e,
                epsilon: self.epsilon,
            })?;
        Ok(m.submatrix(label_len, iface_len)?)
    }
}

/// Header carried unchanged along the whole path.
///
/// Wire layout, most significant bit first, zero-padded to a byte boundary:
/// `[cast:1][e:epsilon][label_len:11][label:label_len]`; cast is 0 for unicast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketHeader {
    pub cast: Cast,
    pub e: u32,
    pub label: BitVector,
}

impl PacketHeader {
    pub fn label_len(&self) -> usize {
        self.label.len()
    }

    pub fn wire_bits(&self, epsilon: u32) -> Result<BitVector, PlaneError> {
        if epsilon > MAX_EPSILON {
            return Err(PlaneError::Epsilon(epsilon));
        }
        if self.e >= 1 << epsilon {
            return Err(PlaneError::FilterIndex { e: self.e, epsilon });
        }
        if self.label.len() > MAX_LABEL_LEN {
            return Err(PlaneError::LabelTooLong(self.label.len()));
        }
        let cast = BitVector::from_bits(&[self.cast == Cast::Multicast]);
        let e = BitVector::from_uint(u64::from(self.e), epsilon as usize);
        let len = BitVector::from_uint(self.label.len() as u64, LABEL_LEN_BITS);
        Ok(BitVector::concat([&cast, &e, &len, &self.label]))
    }

    pub fn to_bytes(&self, epsilon: u32) -> Result<Vec<u8>, PlaneError> {
        let bits = self.wire_bits(epsilon)?;
        let mut out = vec![0u8; bits.len().div_ceil(8)];
        for i in 0..bits.len() {
            if bits.get(i) {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], epsilon: u32) -> Result<Self, PlaneError> {
        if epsilon > MAX_EPSILON {
            return Err(PlaneError::Epsilon(epsilon));
        }
        let bit = |i: usize| bytes[i / 8] & (0x80 >> (i % 8)) != 0;
        let fixed = 1 + epsilon as usize + LABEL_LEN_BITS;
        if bytes.len() * 8 < fixed {
            return Err(PlaneError::MalformedHeader(format!(
                "{} bytes is shorter than the fixed fields",
                bytes.len()
            )));
        }
        let read = |start: usize, width: usize| {
            (start..start + width).fold(0u64, |acc, i| (acc << 1) | u64::from(bit(i)))
        };
        let cast = if bit(0) {
            Cast::Multicast
        } else {
            Cast::Unicast
        };
        let e = read(1, epsilon as usize) as u32;
        let label_len = read(1 + epsilon as usize, LABEL_LEN_BITS) as usize;
        let total = fixed + label_len;
        if bytes.len() != total.div_ceil(8) {
            return Err(PlaneError::MalformedHeader(format!(
                "length field announces {total} bits but {} bytes were given",
                bytes.len()
            )));
        }
        if (total..bytes.len() * 8).any(bit) {
            return Err(PlaneError::MalformedHeader("non-zero padding".into()));
        }
        let label = BitVector::from_bits(&(fixed..total).map(bit).collect::<Vec<_>>());
        Ok(Self { cast, e, label })
    }
}

/// `P · M` with `M` the `label_len × iface_len` corner of the bank's matrix `h.e`.
pub fn filter(
    h: &PacketHeader,
    bank: &FilterBank,
    iface_len: usize,
) -> Result<BitVector, PlaneError> {
    let m = bank.select_submatrix(h.e, h.label_len(), iface_len)?;
    Ok(gf2::vec_mat_mul(&h.label, &m)?)
}

/// [`filter`], tagged with the label kind the router decodes.
pub fn filter_label(
    h: &PacketHeader,
    bank: &FilterBank,
    iface_len: usize,
    kind: LabelKind,
) -> Result<InterfaceLabel, PlaneError> {
    Ok(InterfaceLabel {
        kind,
        bits: filter(h, bank, iface_len)?,
    })
}
