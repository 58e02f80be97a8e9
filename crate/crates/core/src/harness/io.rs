use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use thiserror::Error;

use crate::graph::{Graph, GraphError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("PARSE_ERROR at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("SELF_LOOP at line {line}: vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("DUPLICATE_EDGE at line {line}: {u} {v}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("OUT_OF_RANGE at line {line}: vertex {vertex} not below {n}")]
    OutOfRange { line: usize, vertex: usize, n: usize },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Parse { .. } => "PARSE_ERROR",
            ParseError::SelfLoop { .. } => "SELF_LOOP",
            ParseError::DuplicateEdge { .. } => "DUPLICATE_EDGE",
            ParseError::OutOfRange { .. } => "OUT_OF_RANGE",
        }
    }
}

fn pair(line: usize, text: &str) -> Result<(usize, usize), ParseError> {
    let bad = |msg: String| ParseError::Parse { line, msg };
    let mut it = text.split_whitespace();
    let mut next = |what: &str| -> Result<usize, ParseError> {
        let tok = it.next().ok_or_else(|| bad(format!("missing {what}")))?;
        tok.parse().map_err(|_| bad(format!("{what} {tok:?} is not a non-negative integer")))
    };
    let a = next("first field")?;
    let b = next("second field")?;
    if let Some(extra) = it.next() {
        return Err(bad(format!("unexpected token {extra:?}")));
    }
    Ok((a, b))
}

/// Reads "n m" followed by m lines "u v". Lines starting with '#' and blank
/// lines are skipped; line numbers in errors are 1-based.
pub fn parse_edge_list(text: &str) -> Result<Graph, ParseError> {
    let mut data =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let Some((hline, header)) = data.next() else {
        return Err(ParseError::Parse { line: text.lines().count().max(1), msg: "missing \"n m\" header".into() });
    };
    let (n, m) = pair(hline, header)?;
    if n == 0 {
        return Err(ParseError::Parse { line: hline, msg: "graph needs at least one vertex".into() });
    }
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut last = hline;
    for (line, l) in data.by_ref().take(m) {
        last = line;
        let (u, v) = pair(line, l)?;
        for vertex in [u, v] {
            if vertex >= n {
                return Err(ParseError::OutOfRange { line, vertex, n });
            }
        }
        if u == v {
            return Err(ParseError::SelfLoop { line, vertex: u });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(ParseError::DuplicateEdge { line, u, v });
        }
        edges.push((u, v));
    }
    if edges.len() < m {
        return Err(ParseError::Parse { line: last, msg: format!("expected {m} edges, found {}", edges.len()) });
    }
    if let Some((line, _)) = data.next() {
        return Err(ParseError::Parse { line, msg: format!("more than the {m} declared edges") });
    }
    Graph::from_edges(n, &edges).map_err(|e| match e {
        GraphError::OutOfRange { vertex, n } => ParseError::OutOfRange { line: hline, vertex, n },
        other => ParseError::Parse { line: hline, msg: other.to_string() },
    })
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for (u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn read_graph(path: &Path) -> anyhow::Result<Graph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Parses "0,1,2" (spaces allowed).
pub fn parse_sequence(text: &str) -> Result<Vec<usize>, ParseError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim().parse().map_err(|_| ParseError::Parse { line: 1, msg: format!("{:?} is not a vertex", t.trim()) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_with_comments() {
        let g = parse_edge_list("# K3\n3 3\n0 1\n\n1 2\n# mid\n0 2\n").unwrap();
        assert_eq!((g.n(), g.m()), (3, 3));
        assert_eq!(parse_edge_list(&write_edge_list(&g)).unwrap(), g);
    }

    #[test]
    fn error_codes() {
        let code = |t: &str| parse_edge_list(t).unwrap_err().code();
        assert_eq!(code("3 1\n2 2\n"), "SELF_LOOP");
        assert_eq!(code("3 2\n0 1\n1 0\n"), "DUPLICATE_EDGE");
        assert_eq!(code("3 1\n0 3\n"), "OUT_OF_RANGE");
        assert_eq!(code("3 1\n0 x\n"), "PARSE_ERROR");
        assert_eq!(code("3 2\n0 1\n"), "PARSE_ERROR");
        assert_eq!(code(""), "PARSE_ERROR");
        assert_eq!(
            parse_edge_list("3 1\n0 1\n1 2\n").unwrap_err(),
            ParseError::Parse { line: 3, msg: "more than the 1 declared edges".into() }
        );
        assert_eq!(
            parse_edge_list("# c\n2 1\n0 1 5\n").unwrap_err().to_string(),
            "PARSE_ERROR at line 3: unexpected token \"5\""
        );
    }

    #[test]
    fn single_vertex() {
        let g = parse_edge_list("1 0\n").unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
    }

    #[test]
    fn sequences() {
        assert_eq!(parse_sequence("0, 1,2").unwrap(), vec![0, 1, 2]);
        assert!(parse_sequence("0,a").is_err());
    }
}
