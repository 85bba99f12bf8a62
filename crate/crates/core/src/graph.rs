//! Undirected simple graphs, their Laplacians, and the edge-list
//! interchange format.
//!
//! The edge-list format is a header line `N M` followed by `M` lines `u v`
//! with `u < v`, all 0-indexed and newline-terminated.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An undirected simple graph on nodes `0..num_nodes`.
///
/// Edges are stored normalized (`u < v`) and sorted, so two graphs built
/// from the same edge set compare equal regardless of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    label: String,
}

impl Graph {
    /// Validates and builds a graph. Rejects self-loops, duplicate edges
    /// (in either orientation) and out-of-range endpoints.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::TooFewNodes { min: 1, got: 0 });
        }
        let mut normalized = Vec::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::EndpointOutOfRange { node, num_nodes });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Self {
            num_nodes,
            edges: normalized,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Free-form provenance (family, parameters, generation).
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Dense `L = D - A`.
    pub fn laplacian(&self) -> Laplacian {
        let n = self.num_nodes;
        let mut m = DMatrix::zeros(n, n);
        for &(u, v) in &self.edges {
            m[(u, v)] = -1.0;
            m[(v, u)] = -1.0;
            m[(u, u)] += 1.0;
            m[(v, v)] += 1.0;
        }
        Laplacian(m)
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        bfs_from(&self.adjacency_lists(), source)
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    pub fn is_tree(&self) -> bool {
        self.num_edges() + 1 == self.num_nodes && self.is_connected()
    }

    /// Renames node `i` to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(Error::InvalidParameter(format!(
                "permutation has length {}, graph has {} nodes",
                perm.len(),
                self.num_nodes
            )));
        }
        let mut seen = vec![false; self.num_nodes];
        for &p in perm {
            if p >= self.num_nodes || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        Ok(Graph::new(self.num_nodes, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))?
            .with_label(self.label.clone()))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(12 * (self.edges.len() + 1));
        let _ = writeln!(out, "{} {}", self.num_nodes, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_edge_list().as_bytes())?;
        Ok(())
    }

    /// Parses the edge-list format. Blank lines and lines starting with `#`
    /// are skipped; anything else malformed is an error carrying the 1-based
    /// line number.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#')));

        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header \"N M\"".into(),
        })?;
        let header = header?;
        let [n, m] = parse_pair(&header, line_no)?;

        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (line_no, line) = lines.next().ok_or(Error::Parse {
                line: line_no + edges.len() + 1,
                msg: format!("expected {m} edges, found {}", edges.len()),
            })?;
            let [u, v] = parse_pair(&line?, line_no)?;
            if u >= v {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("edge \"{u} {v}\" must satisfy u < v"),
                });
            }
            edges.push((u, v));
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("trailing data after {m} edges"),
            });
        }
        Graph::new(n, edges)
    }
}

impl std::str::FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Graph::read_edge_list(s.as_bytes())
    }
}

fn parse_pair(line: &str, line_no: usize) -> Result<[usize; 2]> {
    let mut it = line.split_whitespace().map(|t| {
        t.parse::<usize>().map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("\"{t}\": {e}"),
        })
    });
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok([a?, b?]),
        _ => Err(Error::Parse {
            line: line_no,
            msg: format!("expected two integers, got \"{line}\""),
        }),
    }
}

pub(crate) fn bfs_from(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or_default();
        for &w in &adj[u] {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Dense symmetric graph Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    /// Wraps an arbitrary matrix. No structural checks are made here; the
    /// eigensolver rejects non-symmetric input.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Laplacian(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_edge() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (2, 1));
    }

    #[test]
    fn star_is_normalized() {
        let g = Graph::new(4, [(0, 1), (2, 0), (0, 3)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(Graph::new(3, [(0, 1), (1, 1)]), Err(Error::SelfLoop(1))));
        assert!(matches!(
            Graph::new(3, [(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::new(3, [(0, 3)]),
            Err(Error::EndpointOutOfRange { node: 3, num_nodes: 3 })
        ));
        assert!(Graph::new(0, []).is_err());
    }

    #[test]
    fn laplacian_small_cases() {
        let p2 = Graph::new(2, [(0, 1)]).unwrap().laplacian();
        assert_eq!(p2.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let tri = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap().laplacian();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(tri.matrix()[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }

        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap().laplacian();
        assert_eq!(star.matrix()[(0, 0)], 3.0);
        for i in 1..4 {
            assert_eq!(star.matrix()[(i, i)], 1.0);
        }
        for row in star.matrix().row_iter() {
            assert_eq!(row.sum(), 0.0);
        }
        assert_eq!(star.trace(), 6.0);
    }

    #[test]
    fn connectivity() {
        assert!(Graph::new(2, [(0, 1)]).unwrap().is_connected());
        assert!(!Graph::new(4, [(0, 1)]).unwrap().is_connected());
        assert!(Graph::new(1, []).unwrap().is_connected());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::new(4, [(0, 1), (1, 2), (0, 3)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "4 3\n0 1\n0 3\n1 2\n");
        let back: Graph = text.parse().unwrap();
        assert_eq!(back, g);

        let commented = format!("# generated\n{text}# trailer\n");
        assert_eq!(commented.parse::<Graph>().unwrap(), g);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let err = "3 2\n0 1\n2 1\n".parse::<Graph>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = "3 2\n0 1\n".parse::<Graph>().unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let err = "3 1\n0 x\n".parse::<Graph>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = "2 1\n0 1\n0 1\n".parse::<Graph>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!("".parse::<Graph>().is_err());
    }

    #[test]
    fn relabel_preserves_structure() {
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let h = g.relabeled(&[3, 2, 1, 0]).unwrap();
        assert_eq!(h.edges(), &[(0, 3), (1, 3), (2, 3)]);
        assert!(g.relabeled(&[0, 0, 1, 2]).is_err());
    }
}
