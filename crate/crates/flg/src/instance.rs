//! Line-oriented ASCII instance format and the companion placement,
//! distribution and loads files.
//!
//! ```text
//! # comments run to end of line
//! p flg <n> <m> <k>
//! v <id> <weight>        (n lines)
//! e <from> <to>          (m lines; <to> joins <from>'s shopping range)
//! ```
//!
//! Placement files hold one line `s <id_1> ... <id_k>`; distribution files
//! hold lines `d <client> <facility> <num>/<den>`; loads print as
//! `l <facility> <num>/<den>`.

use crate::distribution::{LoadVector, WeightDistribution};
use crate::graph::{HostGraph, Placement, VertexId};
use crate::rational::{format_ratio, parse_ratio};
use num_traits::Signed;
use std::collections::HashSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed header: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("missing 'p flg <n> <m> <k>' header")]
    MissingHeader,
    #[error("line {line}: vertex id {id} out of range (n = {n})")]
    VertexOutOfRange { line: usize, id: i128, n: usize },
    #[error("line {line}: facility index {index} out of range (k = {k})")]
    FacilityOutOfRange { line: usize, index: i128, k: usize },
    #[error("line {line}: negative weight {weight} for vertex {id}")]
    NegativeWeight { line: usize, id: usize, weight: i128 },
    #[error("line {line}: self-loop edge on vertex {id}")]
    SelfLoop { line: usize, id: usize },
    #[error("line {line}: duplicate edge ({from}, {to})")]
    DuplicateEdge { line: usize, from: usize, to: usize },
    #[error("line {line}: duplicate declaration of vertex {id}")]
    DuplicateVertex { line: usize, id: usize },
    #[error("vertex {id} has no 'v' line")]
    MissingVertex { id: usize },
    #[error("edge count mismatch: header promises {expected}, found {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error("line {line}: unrecognized record '{kind}'")]
    UnknownRecord { line: usize, kind: String },
    #[error("line {line}: malformed {what} record: {detail}")]
    Malformed {
        line: usize,
        what: &'static str,
        detail: String,
    },
    #[error("line {line}: placement lists {found} locations, instance has k = {expected}")]
    PlacementLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate distribution entry for client {client}, facility {facility}")]
    DuplicateEntry {
        line: usize,
        client: usize,
        facility: usize,
    },
    #[error("missing '{what}' record")]
    MissingRecord { what: &'static str },
}

/// Numbered, comment-stripped, nonblank lines.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_count(tok: &str, line: usize, detail: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| ParseError::MalformedHeader {
        line,
        detail: format!("{detail} '{tok}'"),
    })
}

fn parse_id(tok: &str, line: usize, what: &'static str, n: usize) -> Result<usize, ParseError> {
    let id: i128 = tok.parse().map_err(|_| ParseError::Malformed {
        line,
        what,
        detail: format!("bad vertex id '{tok}'"),
    })?;
    if id < 0 || id >= n as i128 {
        return Err(ParseError::VertexOutOfRange { line, id, n });
    }
    Ok(id as usize)
}

/// Parses an instance into its host graph and facility count.
pub fn parse_instance(text: &str) -> Result<(HostGraph, usize), ParseError> {
    let mut lines = records(text);
    let (hline, header) = lines.next().ok_or(ParseError::MissingHeader)?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "p" || toks[1] != "flg" {
        return Err(ParseError::MalformedHeader {
            line: hline,
            detail: format!("expected 'p flg <n> <m> <k>', got '{header}'"),
        });
    }
    let n = parse_count(toks[2], hline, "bad vertex count")?;
    let m = parse_count(toks[3], hline, "bad edge count")?;
    let k = parse_count(toks[4], hline, "bad facility count")?;

    let mut weights: Vec<Option<u64>> = vec![None; n];
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m);
    let mut seen_edges: HashSet<(u32, u32)> = HashSet::new();
    for (line, rec) in lines {
        let toks: Vec<&str> = rec.split_whitespace().collect();
        match toks[0] {
            "v" => {
                if toks.len() != 3 {
                    return Err(ParseError::Malformed {
                        line,
                        what: "vertex",
                        detail: format!("expected 'v <id> <weight>', got '{rec}'"),
                    });
                }
                let id = parse_id(toks[1], line, "vertex", n)?;
                let weight: i128 = toks[2].parse().map_err(|_| ParseError::Malformed {
                    line,
                    what: "vertex",
                    detail: format!("bad weight '{}'", toks[2]),
                })?;
                if weight < 0 {
                    return Err(ParseError::NegativeWeight { line, id, weight });
                }
                if weight > u64::MAX as i128 {
                    return Err(ParseError::Malformed {
                        line,
                        what: "vertex",
                        detail: format!("weight {weight} exceeds u64"),
                    });
                }
                if weights[id].replace(weight as u64).is_some() {
                    return Err(ParseError::DuplicateVertex { line, id });
                }
            }
            "e" => {
                if toks.len() != 3 {
                    return Err(ParseError::Malformed {
                        line,
                        what: "edge",
                        detail: format!("expected 'e <from> <to>', got '{rec}'"),
                    });
                }
                let from = parse_id(toks[1], line, "edge", n)?;
                let to = parse_id(toks[2], line, "edge", n)?;
                if from == to {
                    return Err(ParseError::SelfLoop { line, id: from });
                }
                if !seen_edges.insert((from as u32, to as u32)) {
                    return Err(ParseError::DuplicateEdge { line, from, to });
                }
                edges.push((from as u32, to as u32));
            }
            kind => {
                return Err(ParseError::UnknownRecord {
                    line,
                    kind: kind.to_string(),
                })
            }
        }
    }
    if edges.len() != m {
        return Err(ParseError::EdgeCount {
            expected: m,
            found: edges.len(),
        });
    }
    let weights: Vec<u64> = weights
        .into_iter()
        .enumerate()
        .map(|(id, w)| w.ok_or(ParseError::MissingVertex { id }))
        .collect::<Result<_, _>>()?;
    let g = HostGraph::new(weights, &edges).expect("records were validated");
    Ok((g, k))
}

/// Canonical text form; `parse_instance` of the output reproduces the graph
/// exactly (edges are emitted sorted).
pub fn serialize_instance(g: &HostGraph, k: usize) -> String {
    let mut out = String::new();
    writeln!(out, "p flg {} {} {}", g.n(), g.edge_count(), k).unwrap();
    for v in g.vertices() {
        writeln!(out, "v {} {}", v, g.weight(v)).unwrap();
    }
    for (from, to) in g.edges() {
        writeln!(out, "e {from} {to}").unwrap();
    }
    out
}

/// Parses a placement file against an instance; the location count must
/// equal the instance's k.
pub fn parse_placement(text: &str, g: &HostGraph, k: usize) -> Result<Placement, ParseError> {
    let mut lines = records(text);
    let (line, rec) = lines.next().ok_or(ParseError::MissingRecord { what: "s" })?;
    if let Some((extra, _)) = lines.next() {
        return Err(ParseError::Malformed {
            line: extra,
            what: "placement",
            detail: "trailing records after the 's' line".into(),
        });
    }
    let toks: Vec<&str> = rec.split_whitespace().collect();
    if toks[0] != "s" {
        return Err(ParseError::Malformed {
            line,
            what: "placement",
            detail: format!("expected 's <id_1> ... <id_k>', got '{rec}'"),
        });
    }
    if toks.len() - 1 != k {
        return Err(ParseError::PlacementLength {
            line,
            expected: k,
            found: toks.len() - 1,
        });
    }
    let mut locations = Vec::with_capacity(k);
    for tok in &toks[1..] {
        locations.push(VertexId(parse_id(tok, line, "placement", g.n())? as u32));
    }
    Ok(Placement::new(locations))
}

pub fn serialize_placement(s: &Placement) -> String {
    let mut out = String::from("s");
    for v in s.iter() {
        write!(out, " {v}").unwrap();
    }
    out.push('\n');
    out
}

/// Parses a distribution file (`d <client> <facility> <num>/<den>` lines).
pub fn parse_distribution(
    text: &str,
    g: &HostGraph,
    k: usize,
) -> Result<WeightDistribution, ParseError> {
    let mut sigma = WeightDistribution::new(g.n(), k);
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (line, rec) in records(text) {
        let toks: Vec<&str> = rec.split_whitespace().collect();
        if toks[0] != "d" || toks.len() != 4 {
            return Err(ParseError::Malformed {
                line,
                what: "distribution",
                detail: format!("expected 'd <client> <facility> <num>/<den>', got '{rec}'"),
            });
        }
        let client = parse_id(toks[1], line, "distribution", g.n())?;
        let facility: i128 = toks[2].parse().map_err(|_| ParseError::Malformed {
            line,
            what: "distribution",
            detail: format!("bad facility index '{}'", toks[2]),
        })?;
        if facility < 0 || facility >= k as i128 {
            return Err(ParseError::FacilityOutOfRange {
                line,
                index: facility,
                k,
            });
        }
        let weight = parse_ratio(toks[3]).map_err(|detail| ParseError::Malformed {
            line,
            what: "distribution",
            detail,
        })?;
        if weight.is_negative() {
            return Err(ParseError::Malformed {
                line,
                what: "distribution",
                detail: format!("negative weight '{}'", toks[3]),
            });
        }
        if !seen.insert((client, facility as usize)) {
            return Err(ParseError::DuplicateEntry {
                line,
                client,
                facility: facility as usize,
            });
        }
        sigma.set(VertexId(client as u32), facility as usize, weight);
    }
    Ok(sigma)
}

pub fn serialize_distribution(sigma: &WeightDistribution) -> String {
    let mut out = String::new();
    for client in 0..sigma.n() {
        let v = VertexId(client as u32);
        for (j, w) in sigma.row(v) {
            writeln!(out, "d {} {} {}", v, j, format_ratio(w)).unwrap();
        }
    }
    out
}

pub fn serialize_loads(loads: &LoadVector) -> String {
    let mut out = String::new();
    for (j, l) in loads.iter().enumerate() {
        writeln!(out, "l {} {}", j, format_ratio(l)).unwrap();
    }
    out
}

/// Parses `l <facility> <num>/<den>` lines back into a load vector.
pub fn parse_loads(text: &str, k: usize) -> Result<LoadVector, ParseError> {
    let mut loads = vec![None; k];
    for (line, rec) in records(text) {
        let toks: Vec<&str> = rec.split_whitespace().collect();
        if toks[0] != "l" || toks.len() != 3 {
            return Err(ParseError::Malformed {
                line,
                what: "loads",
                detail: format!("expected 'l <facility> <num>/<den>', got '{rec}'"),
            });
        }
        let j: i128 = toks[1].parse().map_err(|_| ParseError::Malformed {
            line,
            what: "loads",
            detail: format!("bad facility index '{}'", toks[1]),
        })?;
        if j < 0 || j >= k as i128 {
            return Err(ParseError::FacilityOutOfRange { line, index: j, k });
        }
        let value = parse_ratio(toks[2]).map_err(|detail| ParseError::Malformed {
            line,
            what: "loads",
            detail,
        })?;
        loads[j as usize] = Some(value);
    }
    let loads = loads
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(ParseError::MissingRecord { what: "l" })?;
    Ok(LoadVector::new(loads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn minimal_instance() {
        let (g, k) = parse_instance("p flg 1 0 1\nv 0 5\n").unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.weight(VertexId(0)), 5);
        assert_eq!(k, 1);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# instance\n\np flg 2 1 0   # header\nv 0 1\nv 1 2\ne 0 1\n";
        let (g, k) = parse_instance(text).unwrap();
        assert_eq!(k, 0);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(VertexId(0), VertexId(1)));
    }

    #[test]
    fn distinct_diagnostics() {
        assert_eq!(parse_instance(""), Err(ParseError::MissingHeader));
        assert!(matches!(
            parse_instance("p flg x 0 0\n"),
            Err(ParseError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_instance("p flg 1 0 0\nv 3 1\n"),
            Err(ParseError::VertexOutOfRange { id: 3, .. })
        ));
        assert!(matches!(
            parse_instance("p flg 1 0 0\nv 0 -2\n"),
            Err(ParseError::NegativeWeight { weight: -2, .. })
        ));
        assert!(matches!(
            parse_instance("p flg 1 1 0\nv 0 1\ne 0 0\n"),
            Err(ParseError::SelfLoop { id: 0, .. })
        ));
        assert!(matches!(
            parse_instance("p flg 2 2 0\nv 0 1\nv 1 1\ne 0 1\ne 0 1\n"),
            Err(ParseError::DuplicateEdge { from: 0, to: 1, .. })
        ));
        assert!(matches!(
            parse_instance("p flg 1 0 0\nv 0 1\nv 0 2\n"),
            Err(ParseError::DuplicateVertex { id: 0, .. })
        ));
        assert!(matches!(
            parse_instance("p flg 2 0 0\nv 0 1\n"),
            Err(ParseError::MissingVertex { id: 1 })
        ));
        assert!(matches!(
            parse_instance("p flg 1 1 0\nv 0 1\n"),
            Err(ParseError::EdgeCount {
                expected: 1,
                found: 0
            })
        ));
        assert!(matches!(
            parse_instance("p flg 1 0 0\nv 0 1\nq 1\n"),
            Err(ParseError::UnknownRecord { .. })
        ));
    }

    #[test]
    fn instance_round_trip() {
        let text = "p flg 3 3 2\nv 0 1\nv 1 1\nv 2 1\ne 0 1\ne 1 0\ne 2 1\n";
        let (g, k) = parse_instance(text).unwrap();
        assert_eq!(serialize_instance(&g, k), text);
    }

    #[test]
    fn placement_parsing() {
        let (g, k) = parse_instance("p flg 3 0 2\nv 0 1\nv 1 1\nv 2 1\n").unwrap();
        let s = parse_placement("s 0 2\n", &g, k).unwrap();
        assert_eq!(s.locations(), &[VertexId(0), VertexId(2)]);
        assert_eq!(serialize_placement(&s), "s 0 2\n");
        assert!(matches!(
            parse_placement("s 0\n", &g, k),
            Err(ParseError::PlacementLength {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_placement("s 0 9\n", &g, k),
            Err(ParseError::VertexOutOfRange { id: 9, .. })
        ));
        assert!(matches!(
            parse_placement("", &g, k),
            Err(ParseError::MissingRecord { what: "s" })
        ));
        // empty placement for k = 0
        let s0 = parse_placement("s\n", &g, 0).unwrap();
        assert_eq!(s0.k(), 0);
    }

    #[test]
    fn distribution_round_trip() {
        let (g, k) = parse_instance("p flg 2 2 2\nv 0 1\nv 1 3\ne 0 1\ne 1 0\n").unwrap();
        let text = "d 0 0 1/1\nd 1 0 3/2\nd 1 1 3/2\n";
        let sigma = parse_distribution(text, &g, k).unwrap();
        assert_eq!(sigma.entry(VertexId(1), 1), rat(3, 2));
        assert_eq!(serialize_distribution(&sigma), text);
        assert!(matches!(
            parse_distribution("d 0 5 1/1\n", &g, k),
            Err(ParseError::FacilityOutOfRange { index: 5, .. })
        ));
        assert!(matches!(
            parse_distribution("d 0 0 1/1\nd 0 0 1/2\n", &g, k),
            Err(ParseError::DuplicateEntry { .. })
        ));
        assert!(matches!(
            parse_distribution("d 0 0 -1/2\n", &g, k),
            Err(ParseError::Malformed { .. })
        ));
    }

    #[test]
    fn loads_round_trip() {
        let loads = LoadVector::new(vec![rat(2, 1), rat(5, 2)]);
        let text = serialize_loads(&loads);
        assert_eq!(text, "l 0 2/1\nl 1 5/2\n");
        assert_eq!(parse_loads(&text, 2).unwrap(), loads);
    }
}
