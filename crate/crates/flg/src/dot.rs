//! DOT rendering of instances for standard graph viewers.

use crate::distribution::LoadVector;
use crate::graph::{HostGraph, Placement};
use crate::rational::format_ratio;
use std::fmt::Write as _;

/// Renders the host graph; with a placement, occupied vertices are marked
/// with their facilities (and per-facility loads, when given).
pub fn export_dot(g: &HostGraph, s: Option<&Placement>, loads: Option<&LoadVector>) -> String {
    if let (Some(s), Some(l)) = (s, loads) {
        assert_eq!(s.k(), l.k(), "loads must match the placement");
    }
    let mut out = String::from("digraph flg {\n  rankdir=LR;\n");
    for v in g.vertices() {
        let mut label = format!("v{} w={}", v, g.weight(v));
        let mut occupied = false;
        if let Some(s) = s {
            for j in 0..s.k() {
                if s.location(j) == v {
                    occupied = true;
                    match loads {
                        Some(l) => {
                            write!(label, "\\nf{} {}", j, format_ratio(l.get(j))).unwrap()
                        }
                        None => write!(label, "\\nf{j}").unwrap(),
                    }
                }
            }
        }
        let shape = if occupied { ", shape=doublecircle" } else { "" };
        writeln!(out, "  v{v} [label=\"{label}\"{shape}];").unwrap();
    }
    for (from, to) in g.edges() {
        writeln!(out, "  v{from} -> v{to};").unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn renders_markers_and_loads() {
        let g = HostGraph::new(vec![2, 1], &[(1, 0)]).unwrap();
        let s = Placement::from_indices(&[0]);
        let loads = LoadVector::new(vec![rat(3, 1)]);
        let dot = export_dot(&g, Some(&s), Some(&loads));
        assert!(dot.contains("v0 [label=\"v0 w=2\\nf0 3/1\", shape=doublecircle];"));
        assert!(dot.contains("v1 -> v0;"));
        assert!(dot.starts_with("digraph flg {"));
        // plain rendering has no markers
        let plain = export_dot(&g, None, None);
        assert!(plain.contains("v0 [label=\"v0 w=2\"];"));
    }
}
