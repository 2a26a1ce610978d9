//! Collaboration topologies.
//!
//! A [`Topology`] is a directed adjacency structure over `n_nodes` sensors. An
//! edge `(n, m)` means that node `n` (the receiver) has access to the
//! observation of node `m` (the source). Every node carries a self-loop.
//!
//! Edges are kept in row-major order (by receiver, then source). That order is
//! the canonical ordering of the collaboration weight vector used throughout
//! the crate.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// A point in the unit square.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n_nodes: usize,
    /// `offsets[n]..offsets[n + 1]` indexes the sources of receiver `n`.
    offsets: Vec<usize>,
    sources: Vec<usize>,
    positions: Option<Vec<Point>>,
}

impl Topology {
    /// Builds a topology from per-receiver source lists.
    ///
    /// Each list must be strictly increasing, in range and contain the
    /// receiver itself.
    pub fn from_neighbor_lists(
        lists: Vec<Vec<usize>>,
        positions: Option<Vec<Point>>,
    ) -> Result<Self> {
        let n_nodes = lists.len();
        if n_nodes == 0 {
            return Err(Error::InvalidTopology("no nodes".into()));
        }
        if let Some(p) = &positions {
            if p.len() != n_nodes {
                return Err(Error::DimensionMismatch {
                    what: "positions",
                    expected: n_nodes,
                    actual: p.len(),
                });
            }
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        let mut sources = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        offsets.push(0);
        for (n, list) in lists.into_iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidTopology(format!(
                    "sources of node {n} are not strictly increasing"
                )));
            }
            if let Some(&m) = list.iter().find(|&&m| m >= n_nodes) {
                return Err(Error::InvalidTopology(format!(
                    "edge ({n}, {m}) out of range for {n_nodes} nodes"
                )));
            }
            if list.binary_search(&n).is_err() {
                return Err(Error::InvalidTopology(format!("node {n} lacks a self-loop")));
            }
            sources.extend(list);
            offsets.push(sources.len());
        }
        Ok(Self {
            n_nodes,
            offsets,
            sources,
            positions,
        })
    }

    /// Builds a topology from an edge list that is already in canonical
    /// (row-major, duplicate-free) order.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTopology(
                "edge list is not strictly row-major sorted".into(),
            ));
        }
        let mut lists = vec![Vec::new(); n_nodes];
        for &(n, m) in edges {
            if n >= n_nodes {
                return Err(Error::InvalidTopology(format!(
                    "edge ({n}, {m}) out of range for {n_nodes} nodes"
                )));
            }
            lists[n].push(m);
        }
        Self::from_neighbor_lists(lists, None)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of edges `L`, self-loops included.
    pub fn n_edges(&self) -> usize {
        self.sources.len()
    }

    /// Number of edges excluding self-loops.
    pub fn n_links(&self) -> usize {
        self.n_edges() - self.n_nodes
    }

    /// Sources of receiver `n`, i.e. the neighbor set including `n`.
    pub fn neighbors(&self, n: usize) -> &[usize] {
        &self.sources[self.offsets[n]..self.offsets[n + 1]]
    }

    /// Range of edge indices owned by receiver `n`.
    pub fn edge_range(&self, n: usize) -> std::ops::Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.offsets[n + 1] - self.offsets[n]
    }

    pub fn positions(&self) -> Option<&[Point]> {
        self.positions.as_deref()
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes).flat_map(move |n| self.neighbors(n).iter().map(move |&m| (n, m)))
    }

    pub fn contains(&self, n: usize, m: usize) -> bool {
        n < self.n_nodes && self.neighbors(n).binary_search(&m).is_ok()
    }

    /// True when every non-self link has its reverse.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(n, m)| self.contains(m, n))
    }

    /// True when every edge of `self` is also an edge of `other`.
    pub fn is_subset_of(&self, other: &Topology) -> bool {
        self.n_nodes == other.n_nodes && self.edges().all(|(n, m)| other.contains(n, m))
    }

    /// Plain-text edge list: `n_nodes=<N>` followed by one `n m` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n_nodes={}\n", self.n_nodes);
        for (n, m) in self.edges() {
            let _ = writeln!(out, "{n} {m}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing n_nodes header".into(),
        })?;
        let n_nodes = header
            .strip_prefix("n_nodes=")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `n_nodes=<N>`, found `{header}`"),
            })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(n)), Some(Ok(m)), None) => edges.push((n, m)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected `n m`, found `{l}`"),
                    })
                }
            }
        }
        Self::from_edges(n_nodes, &edges)
    }
}

/// Disjoint fully connected clusters of size `q`.
pub fn q_clique(n_nodes: usize, q: usize) -> Result<Topology> {
    if q == 0 || n_nodes == 0 || !n_nodes.is_multiple_of(q) {
        return Err(Error::NotDivisible { n_nodes, q });
    }
    let lists = (0..n_nodes)
        .map(|n| {
            let start = (n / q) * q;
            (start..start + q).collect()
        })
        .collect();
    Topology::from_neighbor_lists(lists, None)
}

fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Each node receives from itself and its `q - 1` nearest neighbors.
///
/// Distance ties are broken by lower node index. The result is directed.
pub fn nearest_neighbor(positions: &[Point], q: usize) -> Result<Topology> {
    let n_nodes = positions.len();
    if q == 0 || q > n_nodes {
        return Err(Error::param("q", q as f64, "must lie in 1..=n_nodes"));
    }
    check_distinct(positions)?;
    let lists = (0..n_nodes)
        .map(|n| {
            let mut others: Vec<(f64, usize)> = (0..n_nodes)
                .filter(|&m| m != n)
                .map(|m| (dist2(&positions[n], &positions[m]), m))
                .collect();
            let k = q - 1;
            if k > 0 && k < others.len() {
                others.select_nth_unstable_by(k - 1, |a, b| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                });
            }
            let mut list: Vec<usize> = others[..k].iter().map(|&(_, m)| m).collect();
            list.push(n);
            list.sort_unstable();
            list
        })
        .collect();
    Topology::from_neighbor_lists(lists, Some(positions.to_vec()))
}

fn check_distinct(positions: &[Point]) -> Result<()> {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| {
        positions[a][0]
            .total_cmp(&positions[b][0])
            .then(positions[a][1].total_cmp(&positions[b][1]))
    });
    for w in order.windows(2) {
        if positions[w[0]] == positions[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicatePosition { first, second });
        }
    }
    Ok(())
}

/// Random geometric graph: `n` and `m` collaborate iff their distance is at
/// most `radius`.
pub fn rgg(positions: &[Point], radius: f64) -> Result<Topology> {
    if !(radius >= 0.0) {
        return Err(Error::param("radius", radius, "must be nonnegative"));
    }
    let r2 = radius * radius;
    let n_nodes = positions.len();
    let mut lists: Vec<Vec<usize>> = (0..n_nodes).map(|n| vec![n]).collect();
    for n in 0..n_nodes {
        for m in n + 1..n_nodes {
            if dist2(&positions[n], &positions[m]) <= r2 {
                lists[n].push(m);
                lists[m].push(n);
            }
        }
    }
    for list in &mut lists {
        list.sort_unstable();
    }
    Topology::from_neighbor_lists(lists, Some(positions.to_vec()))
}

/// Radius at which a uniform deployment of `n_nodes` in the unit square has
/// `expected_neighbors` neighbors on average, ignoring boundary effects.
pub fn rgg_radius(n_nodes: usize, expected_neighbors: f64) -> f64 {
    (expected_neighbors / (n_nodes as f64 * PI)).sqrt()
}

/// `n_nodes` i.i.d. uniform points in `[0, 1]^2`.
pub fn uniform_positions(n_nodes: usize, seed: u64) -> Vec<Point> {
    let mut rng = rng_from_seed(seed);
    (0..n_nodes)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_of_one_is_identity() {
        let t = q_clique(4, 1).unwrap();
        assert_eq!(t.edges().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn clique_pairs() {
        let t = q_clique(4, 2).unwrap();
        let expected = vec![
            (0, 0),
            (0, 1),
            (1, 0),
            (1, 1),
            (2, 2),
            (2, 3),
            (3, 2),
            (3, 3),
        ];
        assert_eq!(t.edges().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn full_clique() {
        let t = q_clique(4, 4).unwrap();
        assert_eq!(t.n_edges(), 16);
        assert!(t.is_symmetric());
    }

    #[test]
    fn clique_rejects_non_divisor() {
        let err = q_clique(10, 3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("10") && msg.contains('3'), "{msg}");
    }

    #[test]
    fn nn_collinear_tie_break() {
        let pts = [[0.0, 0.5], [0.5, 0.5], [1.0, 0.5]];
        let t = nearest_neighbor(&pts, 2).unwrap();
        // The middle node is equidistant from both ends and picks node 0.
        assert_eq!(t.neighbors(0), &[0, 1]);
        assert_eq!(t.neighbors(1), &[0, 1]);
        assert_eq!(t.neighbors(2), &[1, 2]);
    }

    #[test]
    fn nn_q1_is_self_loops() {
        let pts = uniform_positions(10, 3);
        let t = nearest_neighbor(&pts, 1).unwrap();
        assert_eq!(t.n_links(), 0);
    }

    #[test]
    fn nn_twenty_nodes_forty_links() {
        let pts = uniform_positions(20, 11);
        let t = nearest_neighbor(&pts, 3).unwrap();
        assert_eq!(t.n_links(), 40);
    }

    #[test]
    fn nn_rejects_duplicates() {
        let pts = [[0.1, 0.1], [0.3, 0.2], [0.1, 0.1]];
        match nearest_neighbor(&pts, 2) {
            Err(Error::DuplicatePosition { first, second }) => assert_eq!((first, second), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rgg_limits() {
        let pts = uniform_positions(30, 5);
        assert_eq!(rgg(&pts, 0.0).unwrap().n_links(), 0);
        let full = rgg(&pts, 2f64.sqrt()).unwrap();
        assert_eq!(full.n_edges(), 30 * 30);
        assert!(rgg(&pts, -1.0).is_err());
    }

    #[test]
    fn rgg_mean_degree_matches_area() {
        let n = 2000;
        let r = 0.05;
        let mean: f64 = (0..20)
            .map(|s| rgg(&uniform_positions(n, 100 + s), r).unwrap().n_links() as f64 / n as f64)
            .sum::<f64>()
            / 20.0;
        let expected = n as f64 * PI * r * r;
        assert!((mean - expected).abs() < 0.1 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn uniform_positions_deterministic_and_bounded() {
        let a = uniform_positions(10_000, 42);
        assert_eq!(a, uniform_positions(10_000, 42));
        assert!(a.iter().flatten().all(|&c| (0.0..=1.0).contains(&c)));
        for axis in 0..2 {
            let mean = a.iter().map(|p| p[axis]).sum::<f64>() / a.len() as f64;
            assert!((mean - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn edge_list_text_roundtrip() {
        let t = q_clique(6, 3).unwrap();
        let text = t.to_edge_list();
        assert!(text.starts_with("n_nodes=6\n0 0\n0 1\n"));
        assert_eq!(Topology::from_edge_list(&text).unwrap(), t);
    }

    #[test]
    fn edge_list_rejects_missing_self_loop_and_unsorted() {
        assert!(Topology::from_edge_list("n_nodes=2\n0 0\n0 1\n").is_err());
        assert!(Topology::from_edge_list("n_nodes=2\n1 1\n0 0\n").is_err());
        assert!(Topology::from_edge_list("nodes=2\n").is_err());
    }
}
