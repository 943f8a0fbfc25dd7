//! Line-oriented topology document.
//!
//! ```text
//! # comments start with '#'
//! [deployment]
//! epsilon = 0
//! banks = cyclic-id
//!
//! [routers]
//! # id  ports  [spine|leaf]
//! 17 3
//! 11 2
//!
//! [links]
//! 17:0 11:0
//!
//! [edges]
//! S 17:2
//! ```
//!
//! The `[deployment]` section holds free-form `key = value` settings that are
//! interpreted by the caller; `clos = spines,leafs,ports` is the only key read
//! here, and marks the document as a generated Clos fabric.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{build_clos, ClosParams, Role, RouterId, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setting {
    pub line: usize,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct TopologyDocument {
    pub topology: Topology,
    pub settings: BTreeMap<String, Setting>,
}

impl TopologyDocument {
    pub fn setting(&self, key: &str) -> Option<&Setting> {
        self.settings.get(key)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Deployment,
    Routers,
    Links,
    Edges,
}

fn parse_port_ref(s: &str, line: usize) -> Result<(RouterId, usize), ParseError> {
    let (r, p) = s
        .split_once(':')
        .ok_or_else(|| ParseError::new(line, format!("expected router:port, got {s:?}")))?;
    let r = r
        .parse::<u64>()
        .map_err(|_| ParseError::new(line, format!("bad router id {r:?}")))?;
    let p = p
        .parse::<usize>()
        .map_err(|_| ParseError::new(line, format!("bad port {p:?}")))?;
    Ok((RouterId(r), p))
}

pub fn parse_clos_setting(value: &str) -> Result<ClosParams, String> {
    let parts: Vec<usize> = value
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("bad clos parameters {value:?}"))?;
    match parts.as_slice() {
        &[s, l, p] => ClosParams::new(s, l, p).map_err(|e| e.to_string()),
        _ => Err(format!("clos expects spines,leafs,ports; got {value:?}")),
    }
}

pub fn parse_topology(text: &str) -> Result<TopologyDocument, ParseError> {
    let mut section = Section::None;
    let mut settings = BTreeMap::new();
    let mut b = Topology::builder();
    let at = |line: usize| move |e: TopologyError| ParseError::new(line, e.to_string());

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "deployment" => Section::Deployment,
                "routers" => Section::Routers,
                "links" => Section::Links,
                "edges" => Section::Edges,
                other => return Err(ParseError::new(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match section {
            Section::None => {
                return Err(ParseError::new(
                    line,
                    "content before the first section header",
                ))
            }
            Section::Deployment => {
                let (k, v) = content
                    .split_once('=')
                    .ok_or_else(|| ParseError::new(line, "expected key = value"))?;
                let key = k.trim().to_string();
                if settings.contains_key(&key) {
                    return Err(ParseError::new(line, format!("duplicate setting {key:?}")));
                }
                settings.insert(
                    key,
                    Setting {
                        line,
                        value: v.trim().to_string(),
                    },
                );
            }
            Section::Routers => {
                let (id, ports, role) = match fields.as_slice() {
                    [id, ports] => (id, ports, None),
                    [id, ports, role] => (id, ports, Some(*role)),
                    _ => return Err(ParseError::new(line, "expected: id ports [spine|leaf]")),
                };
                let id = id
                    .parse::<u64>()
                    .map_err(|_| ParseError::new(line, format!("bad router id {id:?}")))?;
                let ports = ports
                    .parse::<usize>()
                    .map_err(|_| ParseError::new(line, format!("bad port count {ports:?}")))?;
                let role = match role {
                    None => None,
                    Some("spine") => Some(Role::Spine),
                    Some("leaf") => Some(Role::Leaf),
                    Some(other) => {
                        return Err(ParseError::new(line, format!("unknown role {other:?}")))
                    }
                };
                b.router(RouterId(id), ports, role).map_err(at(line))?;
            }
            Section::Links => {
                let [a, z] = fields.as_slice() else {
                    return Err(ParseError::new(line, "expected: router:port router:port"));
                };
                let a = parse_port_ref(a, line)?;
                let z = parse_port_ref(z, line)?;
                b.link(a, z).map_err(at(line))?;
            }
            Section::Edges => {
                let [name, port] = fields.as_slice() else {
                    return Err(ParseError::new(line, "expected: name router:port"));
                };
                let (r, p) = parse_port_ref(port, line)?;
                b.edge(name, r, p).map_err(at(line))?;
            }
        }
    }

    if let Some(s) = settings.get("clos") {
        let params = parse_clos_setting(&s.value).map_err(|m| ParseError::new(s.line, m))?;
        b.clos(params);
        let topology = b.build();
        check_clos_wiring(&topology, params).map_err(|m| ParseError::new(s.line, m))?;
        return Ok(TopologyDocument { topology, settings });
    }
    Ok(TopologyDocument {
        topology: b.build(),
        settings,
    })
}

fn check_clos_wiring(t: &Topology, p: ClosParams) -> Result<(), String> {
    let reference = build_clos(p).map_err(|e| e.to_string())?;
    let ours: Vec<_> = t.routers().map(|(id, r)| (id, r.ports, r.role)).collect();
    let want: Vec<_> = reference
        .routers()
        .map(|(id, r)| (id, r.ports, r.role))
        .collect();
    if ours != want {
        return Err("router list does not match the declared clos parameters".into());
    }
    if t.links().collect::<Vec<_>>() != reference.links().collect::<Vec<_>>() {
        return Err("links do not match the declared clos parameters".into());
    }
    Ok(())
}

/// Renders a topology document that [`parse_topology`] reads back.
pub fn write_topology(t: &Topology, settings: &[(&str, String)]) -> String {
    let mut out = String::new();
    out.push_str("[deployment]\n");
    for (k, v) in settings {
        let _ = writeln!(out, "{k} = {v}");
    }
    if let Some(p) = t.clos() {
        if !settings.iter().any(|(k, _)| *k == "clos") {
            let _ = writeln!(out, "clos = {},{},{}", p.spines, p.leafs, p.ports);
        }
    }
    out.push_str("\n[routers]\n");
    for (id, info) in t.routers() {
        match info.role {
            Some(Role::Spine) => {
                let _ = writeln!(out, "{} {} spine", id.0, info.ports);
            }
            Some(Role::Leaf) => {
                let _ = writeln!(out, "{} {} leaf", id.0, info.ports);
            }
            None => {
                let _ = writeln!(out, "{} {}", id.0, info.ports);
            }
        }
    }
    out.push_str("\n[links]\n");
    for ((a, ap), (z, zp)) in t.links() {
        let _ = writeln!(out, "{}:{} {}:{}", a.0, ap, z.0, zp);
    }
    out.push_str("\n[edges]\n");
    for (name, (r, p)) in t.edges() {
        let _ = writeln!(out, "{name} {}:{}", r.0, p);
    }
    out
}
