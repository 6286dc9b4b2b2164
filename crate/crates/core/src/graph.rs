//! Fusion graphs: which coefficient differences of a predictor block are
//! regularized. A graph lives on the full set of `n_levels` levels of the
//! predictor, including a reference level if one is declared.

use crate::error::{Error, Result};

/// How the edge set was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Consecutive levels: (0,1), (1,2), ...
    Chain,
    /// 2-D lattice, vertices in row-major order, edges between horizontal and
    /// vertical neighbours.
    Grid { rows: usize, cols: usize },
    /// All pairwise differences.
    Complete,
    /// User-supplied edge list.
    Explicit,
}

/// An undirected graph over the levels of one predictor.
///
/// Edges are stored canonically with `i < l`; duplicates are rejected rather
/// than merged so that configuration mistakes surface early.
#[derive(Debug, Clone)]
pub struct Graph {
    kind: GraphKind,
    n_levels: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Chain graph over `n_levels` levels (`n_levels - 1` edges).
    pub fn chain(n_levels: usize) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::InvalidGraph(format!(
                "chain graph needs at least 2 levels, got {n_levels}"
            )));
        }
        let edges = (0..n_levels - 1).map(|i| (i, i + 1)).collect();
        Ok(Self { kind: GraphKind::Chain, n_levels, edges })
    }

    /// Complete graph: all `n_levels * (n_levels - 1) / 2` pairs.
    pub fn complete(n_levels: usize) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::InvalidGraph(format!(
                "complete graph needs at least 2 levels, got {n_levels}"
            )));
        }
        let mut edges = Vec::with_capacity(n_levels * (n_levels - 1) / 2);
        for i in 0..n_levels {
            for l in i + 1..n_levels {
                edges.push((i, l));
            }
        }
        Ok(Self { kind: GraphKind::Complete, n_levels, edges })
    }

    /// 2-D grid over `rows * cols` levels in row-major order, with edges
    /// between direct horizontal and vertical neighbours
    /// (`rows*(cols-1) + cols*(rows-1)` edges).
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows * cols < 2 {
            return Err(Error::InvalidGraph(format!(
                "grid graph needs at least 2 cells, got {rows}x{cols}"
            )));
        }
        let at = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((at(r, c), at(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((at(r, c), at(r + 1, c)));
                }
            }
        }
        Ok(Self { kind: GraphKind::Grid { rows, cols }, n_levels: rows * cols, edges })
    }

    /// Graph from an explicit edge list. Edges are canonicalized to `i < l`;
    /// self-edges, duplicates and out-of-range indices are rejected.
    pub fn explicit(n_levels: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges(GraphKind::Explicit, n_levels, edges)
    }

    fn from_edges(
        kind: GraphKind,
        n_levels: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut canonical: Vec<(usize, usize)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-edge ({a}, {b})")));
            }
            let (i, l) = if a < b { (a, b) } else { (b, a) };
            if l >= n_levels {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of bounds for {n_levels} levels"
                )));
            }
            if !seen.insert((i, l)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {l})")));
            }
            canonical.push((i, l));
        }
        if canonical.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        Ok(Self { kind, n_levels, edges: canonical })
    }

    /// Parse an explicit edge list in text form: one `i,l` pair per line,
    /// zero-based level indices. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(n_levels: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<usize> {
                s.map(str::trim)
                    .ok_or_else(|| {
                        Error::InvalidGraph(format!("line {}: expected `i,l`", lineno + 1))
                    })?
                    .parse()
                    .map_err(|_| {
                        Error::InvalidGraph(format!("line {}: expected `i,l`", lineno + 1))
                    })
            };
            let i = parse(parts.next())?;
            let l = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::InvalidGraph(format!(
                    "line {}: expected exactly two indices",
                    lineno + 1
                )));
            }
            edges.push((i, l));
        }
        Self::from_edges(GraphKind::Explicit, n_levels, edges)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Number of levels (vertices) the graph is defined on.
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// Number of regularized differences.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges with `i < l`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_edge_count() {
        let g = Graph::chain(5).unwrap();
        assert_eq!(g.n_edges(), 4);
        assert_eq!(g.edges()[0], (0, 1));
        assert_eq!(g.edges()[3], (3, 4));
    }

    #[test]
    fn complete_edge_count() {
        let g = Graph::complete(4).unwrap();
        assert_eq!(g.n_edges(), 4 * 3 / 2);
    }

    #[test]
    fn grid_edge_count() {
        // rows*(cols-1) + cols*(rows-1)
        let g = Graph::grid(2, 2).unwrap();
        assert_eq!(g.n_edges(), 4);
        let g = Graph::grid(7, 10).unwrap();
        assert_eq!(g.n_edges(), 7 * 9 + 10 * 6);
    }

    #[test]
    fn out_of_bounds_edge_rejected() {
        // edge (0, 5) on a 4-level block
        let err = Graph::explicit(4, [(0usize, 5usize)]).unwrap_err();
        assert!(matches!(err, Error::InvalidGraph(_)));
    }

    #[test]
    fn self_and_duplicate_edges_rejected() {
        assert!(Graph::explicit(4, [(1usize, 1usize)]).is_err());
        // duplicates rejected even with swapped orientation
        assert!(Graph::explicit(4, [(0usize, 1usize), (1, 0)]).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list(4, "0,1\n# comment\n2 , 3\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (2, 3)]);
        assert!(Graph::parse_edge_list(4, "0,1,2").is_err());
        assert!(Graph::parse_edge_list(4, "0;1").is_err());
    }
}
