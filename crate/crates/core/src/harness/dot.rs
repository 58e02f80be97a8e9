use std::collections::HashSet;
use std::fmt::Write as _;

use crate::graph::Graph;
use crate::reconstruction::{Origin, Rec};

/// Edge class of a record in the final overlay.
pub fn edge_color(r: &Rec) -> &'static str {
    match (r.origin, r.sync) {
        (Origin::Mapped, true) => "red",
        (Origin::Mapped, false) => "black",
        (Origin::Junction, _) => "purple",
        (Origin::Attachment, _) => "green",
        (Origin::Marker, _) => "gray",
    }
}

/// Graphviz text: overlay records coloured by class, the rest of G dotted.
/// Vertices on `sequence` are numbered by position.
pub fn to_dot(g: &Graph, records: &[Rec], sequence: Option<&[usize]>) -> String {
    let mut s = String::from("graph overlay {\n  node [shape=circle];\n");
    for v in 0..g.n() {
        match sequence.and_then(|q| q.iter().position(|&x| x == v)) {
            Some(i) => {
                let _ = writeln!(s, "  {v} [xlabel=\"{i}\"];");
            }
            None => {
                let _ = writeln!(s, "  {v};");
            }
        }
    }
    let mut drawn = HashSet::new();
    for r in records.iter().filter(|r| r.alive && r.a != r.b) {
        let key = (r.a.min(r.b), r.a.max(r.b));
        if drawn.insert(key) {
            let style = if r.sync { "solid" } else { "dashed" };
            let _ = writeln!(s, "  {} -- {} [color={}, style={style}, penwidth=2];", key.0, key.1, edge_color(r));
        }
    }
    for (u, v) in g.edges() {
        if !drawn.contains(&(u, v)) {
            let _ = writeln!(s, "  {u} -- {v} [color=lightgray, style=dotted];");
        }
    }
    s.push_str("}\n");
    s
}
