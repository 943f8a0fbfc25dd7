//! The unicast and multicast label-size comparison tables.
//!
//! XSR columns are computed from the formulas; the COXcast and RDNA rows are
//! published figures carried as constants.

use std::fmt::Write as _;

use serde::Serialize;

use super::{
    multicast_label_bytes_v1, multicast_label_bytes_v2, unicast_label_bytes, TABLE_EPSILON,
};
use crate::netmodel::ClosParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    Unicast,
    Multicast,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizingReport {
    pub table: TableId,
    pub params: ClosParams,
    pub bytes_unicast: u64,
    pub bytes_multicast_v1: u64,
    pub bytes_multicast_v2: u64,
    /// Published COXcast size for this column of `table`.
    pub coxcast: u64,
    /// Published RDNA size for this column of `table`.
    pub rdna: u64,
}

const PORTS: [usize; 5] = [16, 24, 32, 48, 96];

// (spines, leafs, number of port columns)
const UNICAST_GROUPS: [(usize, usize, usize); 4] = [(2, 4, 3), (6, 12, 5), (12, 16, 5), (8, 16, 5)];
const MULTICAST_GROUPS: [(usize, usize, usize); 4] =
    [(2, 4, 3), (6, 12, 5), (6, 16, 5), (8, 16, 5)];

const UNICAST_COXCAST: [u64; 18] = [
    5, 8, 11, 5, 8, 11, 17, 35, 5, 8, 11, 17, 35, 5, 8, 11, 17, 35,
];
const UNICAST_RDNA: [u64; 18] = [2, 2, 2, 3, 3, 3, 4, 4, 3, 3, 3, 4, 4, 3, 3, 3, 4, 4];
const MULTICAST_COXCAST: [u64; 18] = [
    10, 14, 18, 36, 48, 60, 84, 156, 47, 63, 79, 111, 207, 51, 67, 83, 115, 211,
];
const MULTICAST_RDNA: [u64; 18] = [
    9, 14, 18, 26, 39, 52, 75, 154, 34, 51, 68, 100, 200, 34, 51, 68, 100, 200,
];

fn grid(groups: &[(usize, usize, usize)]) -> Vec<ClosParams> {
    groups
        .iter()
        .flat_map(|&(s, l, n)| {
            PORTS[..n]
                .iter()
                .map(move |&p| ClosParams::new(s, l, p).expect("table parameters are valid"))
        })
        .collect()
}

fn reports(
    table: TableId,
    groups: &[(usize, usize, usize)],
    coxcast: &[u64; 18],
    rdna: &[u64; 18],
) -> Vec<SizingReport> {
    grid(groups)
        .into_iter()
        .enumerate()
        .map(|(i, p)| SizingReport {
            table,
            params: p,
            bytes_unicast: unicast_label_bytes(p, TABLE_EPSILON),
            bytes_multicast_v1: multicast_label_bytes_v1(p, TABLE_EPSILON),
            bytes_multicast_v2: multicast_label_bytes_v2(p, TABLE_EPSILON),
            coxcast: coxcast[i],
            rdna: rdna[i],
        })
        .collect()
}

/// All 36 columns: 18 of the unicast table followed by 18 of the multicast table.
pub fn make_tables() -> Vec<SizingReport> {
    let mut out = reports(
        TableId::Unicast,
        &UNICAST_GROUPS,
        &UNICAST_COXCAST,
        &UNICAST_RDNA,
    );
    out.extend(reports(
        TableId::Multicast,
        &MULTICAST_GROUPS,
        &MULTICAST_COXCAST,
        &MULTICAST_RDNA,
    ));
    out
}

fn rows(table: TableId, reports: &[SizingReport]) -> Vec<(&'static str, Vec<u64>)> {
    let cols: Vec<&SizingReport> = reports.iter().filter(|r| r.table == table).collect();
    let pick = |f: fn(&SizingReport) -> u64| cols.iter().map(|r| f(r)).collect::<Vec<u64>>();
    let mut rows = vec![
        ("Spine", pick(|r| r.params.spines as u64)),
        ("Leafs", pick(|r| r.params.leafs as u64)),
        ("Ports", pick(|r| r.params.ports as u64)),
        ("COXcast", pick(|r| r.coxcast)),
        ("RDNA", pick(|r| r.rdna)),
    ];
    match table {
        TableId::Unicast => rows.push(("XSR", pick(|r| r.bytes_unicast))),
        TableId::Multicast => {
            rows.push(("XSR v1", pick(|r| r.bytes_multicast_v1)));
            rows.push(("XSR v2", pick(|r| r.bytes_multicast_v2)));
        }
    }
    rows
}

fn title(table: TableId) -> &'static str {
    match table {
        TableId::Unicast => "Path label size (bytes) for unicast",
        TableId::Multicast => "Path label size (bytes) for multicast",
    }
}

/// Aligned plain-text rendering, one block per table.
pub fn render_text(reports: &[SizingReport], tables: &[TableId]) -> String {
    let mut out = String::new();
    for (n, &t) in tables.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{}", title(t));
        for (name, values) in rows(t, reports) {
            let _ = write!(out, "{name:<8}");
            for v in values {
                let _ = write!(out, " {v:>4}");
            }
            out.push('\n');
        }
    }
    out
}

/// Comma-separated rows in the published layout: the three parameter rows,
/// then one row per scheme.
pub fn render_csv(reports: &[SizingReport], table: TableId) -> String {
    let mut out = String::new();
    for (name, values) in rows(table, reports) {
        out.push_str(name);
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
