//! Bipartite factor graphs of code nodes (resources) and data nodes (users).

use crate::error::{Error, Result};
use crate::signature::SignatureMatrix;
use std::collections::{BTreeSet, VecDeque};

/// An edge `(code index n, data index k)`, both zero-based.
pub type Edge = (usize, usize);

/// Factor graph with `n_code` code nodes and `n_data` data nodes.
///
/// Every node has at least one edge. Graphs are immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    n_code: usize,
    n_data: usize,
    edges: Vec<Edge>,
    code_adj: Vec<Vec<usize>>,
    data_adj: Vec<Vec<usize>>,
}

/// Connected component listing member code and data nodes in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub code_nodes: Vec<usize>,
    pub data_nodes: Vec<usize>,
}

/// Degree profile of a subgraph obtained by [`FactorGraph::delete_around_code_nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeProfile {
    /// Code nodes left with exactly one neighbour.
    pub n1: usize,
    /// Code nodes left with more than one neighbour.
    pub n2: usize,
}

impl FactorGraph {
    pub fn new(n_code: usize, n_data: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let g = Self::build(n_code, n_data, edges)?;
        if let Some(n) = g.code_adj.iter().position(Vec::is_empty) {
            return Err(Error::InvalidMatrix(format!("code node {n} has no edges")));
        }
        if let Some(k) = g.data_adj.iter().position(Vec::is_empty) {
            return Err(Error::InvalidMatrix(format!("data node {k} has no edges")));
        }
        Ok(g)
    }

    fn build(n_code: usize, n_data: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n_code == 0 || n_data == 0 {
            return Err(Error::InvalidMatrix("graph needs at least one code and one data node".into()));
        }
        let mut set = BTreeSet::new();
        for (n, k) in edges {
            if n >= n_code || k >= n_data {
                return Err(Error::InvalidMatrix(format!("edge ({n}, {k}) out of range")));
            }
            if !set.insert((n, k)) {
                return Err(Error::InvalidMatrix(format!("duplicate edge ({n}, {k})")));
            }
        }
        let edges: Vec<Edge> = set.into_iter().collect();
        let mut code_adj = vec![Vec::new(); n_code];
        let mut data_adj = vec![Vec::new(); n_data];
        for &(n, k) in &edges {
            code_adj[n].push(k);
            data_adj[k].push(n);
        }
        for adj in &mut data_adj {
            adj.sort_unstable();
        }
        Ok(FactorGraph { n_code, n_data, edges, code_adj, data_adj })
    }

    /// Graph with an edge wherever the signature entry is nonzero.
    pub fn from_signature(s: &SignatureMatrix) -> Result<Self> {
        Self::new(s.n_rows(), s.n_cols(), s.support())
    }

    pub fn n_code(&self) -> usize {
        self.n_code
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    /// Edges sorted by `(code, data)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, n: usize, k: usize) -> bool {
        self.edges.binary_search(&(n, k)).is_ok()
    }

    /// Data nodes adjacent to code node `n`, ascending.
    pub fn code_neighbors(&self, n: usize) -> &[usize] {
        &self.code_adj[n]
    }

    /// Code nodes adjacent to data node `k`, ascending.
    pub fn data_neighbors(&self, k: usize) -> &[usize] {
        &self.data_adj[k]
    }

    /// `Some(q)` when every code node has degree `q`.
    pub fn code_regular_degree(&self) -> Option<usize> {
        let q = self.code_adj[0].len();
        self.code_adj.iter().all(|a| a.len() == q).then_some(q)
    }

    // Nodes are numbered code 0..N then data N..N+K for traversal.
    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let (code, off): (&[usize], usize) = if v < self.n_code {
            (&self.code_adj[v], self.n_code)
        } else {
            (&self.data_adj[v - self.n_code], 0)
        };
        code.iter().map(move |&u| u + off)
    }

    fn n_nodes(&self) -> usize {
        self.n_code + self.n_data
    }

    /// Number of distinct simple cycles with exactly `length` edges.
    pub fn count_cycles(&self, length: usize) -> Result<u64> {
        if length < 4 || length % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "cycle length must be even and at least 4, got {length}"
            )));
        }
        let n = self.n_nodes();
        let mut on_path = vec![false; n];
        let mut closed_walks = 0u64;
        // Each cycle is rooted at its smallest node and seen once per direction.
        for start in 0..n {
            on_path[start] = true;
            self.extend_cycle(start, start, 1, length, &mut on_path, &mut closed_walks);
            on_path[start] = false;
        }
        Ok(closed_walks / 2)
    }

    fn extend_cycle(
        &self,
        start: usize,
        v: usize,
        depth: usize,
        length: usize,
        on_path: &mut [bool],
        count: &mut u64,
    ) {
        for u in self.neighbors(v) {
            if u == start && depth == length {
                *count += 1;
            } else if u > start && !on_path[u] && depth < length {
                on_path[u] = true;
                self.extend_cycle(start, u, depth + 1, length, on_path, count);
                on_path[u] = false;
            }
        }
    }

    pub fn connected_components(&self) -> Vec<Component> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            let mut comp = Component { code_nodes: Vec::new(), data_nodes: Vec::new() };
            let mut queue = VecDeque::from([root]);
            seen[root] = true;
            while let Some(v) = queue.pop_front() {
                if v < self.n_code {
                    comp.code_nodes.push(v);
                } else {
                    comp.data_nodes.push(v - self.n_code);
                }
                for u in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
            comp.code_nodes.sort_unstable();
            comp.data_nodes.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.n_edges() + 1 == self.n_nodes()
    }

    /// Longest shortest path, counted in edges. Requires a connected graph.
    pub fn diameter(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = self.n_nodes();
        let mut best = 0;
        for root in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for u in self.neighbors(v) {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        best = best.max(dist[u]);
                        queue.push_back(u);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Edges outside a breadth-first spanning tree rooted at data node 0.
    ///
    /// Neighbours are visited in index order, so the result is deterministic.
    pub fn spanning_tree_complement(&self) -> Result<EdgeSubset> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = self.n_nodes();
        let root = self.n_code;
        let mut seen = vec![false; n];
        let mut tree = BTreeSet::new();
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    tree.insert(self.edge_of(v, u));
                    queue.push_back(u);
                }
            }
        }
        let phi: Vec<Edge> = self.edges.iter().copied().filter(|e| !tree.contains(e)).collect();
        EdgeSubset::new(self, phi)
    }

    fn edge_of(&self, a: usize, b: usize) -> Edge {
        if a < self.n_code {
            (a, b - self.n_code)
        } else {
            (b, a - self.n_code)
        }
    }

    /// Graph with the given edges removed; nodes may become isolated.
    fn without(&self, removed: &[Edge]) -> FactorGraph {
        let keep = self.edges.iter().copied().filter(|e| !removed.contains(e));
        Self::build(self.n_code, self.n_data, keep).expect("subset of a valid edge set")
    }

    /// True when removing `removed` leaves a spanning tree of all nodes.
    pub fn leaves_spanning_tree(&self, removed: &EdgeSubset) -> bool {
        let rest = self.without(removed.edges());
        rest.n_edges() + 1 == rest.n_nodes() && rest.connected_components().len() == 1
    }

    /// Degree profile of the subgraph left after deleting every data node
    /// adjacent to a code node in `alpha`. Code nodes are kept.
    pub fn delete_around_code_nodes(&self, alpha: &[usize]) -> Result<DegreeProfile> {
        let mut in_alpha = vec![false; self.n_code];
        for &n in alpha {
            if n >= self.n_code {
                return Err(Error::InvalidArgument(format!("code node {n} out of range")));
            }
            in_alpha[n] = true;
        }
        if in_alpha.iter().all(|&b| b) {
            return Err(Error::InvalidArgument("alpha must be a proper subset of the code nodes".into()));
        }
        let mut deleted = vec![false; self.n_data];
        for (n, _) in in_alpha.iter().enumerate().filter(|(_, &b)| b) {
            for &k in &self.code_adj[n] {
                deleted[k] = true;
            }
        }
        let mut profile = DegreeProfile { n1: 0, n2: 0 };
        for adj in &self.code_adj {
            match adj.iter().filter(|&&k| !deleted[k]).count() {
                0 => {}
                1 => profile.n1 += 1,
                _ => profile.n2 += 1,
            }
        }
        Ok(profile)
    }
}

/// Edge set whose removal leaves the graph cycle-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSubset {
    edges: Vec<Edge>,
}

impl EdgeSubset {
    pub fn new(graph: &FactorGraph, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        if let Some(e) = edges.iter().find(|&&(n, k)| n >= graph.n_code || k >= graph.n_data || !graph.has_edge(n, k)) {
            return Err(Error::InvalidEdgeSubset(format!("edge {e:?} is not in the graph")));
        }
        let rest = graph.without(&edges);
        let comps = rest.connected_components().len();
        if rest.n_edges() + comps != rest.n_nodes() {
            return Err(Error::InvalidEdgeSubset("remaining graph still has cycles".into()));
        }
        Ok(EdgeSubset { edges })
    }

    pub fn empty() -> Self {
        EdgeSubset { edges: Vec::new() }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, n: usize, k: usize) -> bool {
        self.edges.binary_search(&(n, k)).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn fig2() -> FactorGraph {
        FactorGraph::from_signature(&presets::fig2_optimal()).unwrap()
    }

    #[test]
    fn fig2_topology() {
        let g = fig2();
        assert_eq!(g.code_regular_degree(), Some(3));
        assert!((0..6).all(|k| g.data_neighbors(k).len() == 2));
        assert_eq!(g.count_cycles(4).unwrap(), 0);
        assert_eq!(g.count_cycles(6).unwrap(), 4);
        assert!(!g.is_tree());
    }

    #[test]
    fn fig2_complement_matches_labelled_template() {
        let phi = fig2().spanning_tree_complement().unwrap();
        assert_eq!(phi.edges(), &[(2, 3), (3, 4), (3, 5)]);
    }

    #[test]
    fn single_edge_graph_is_tree() {
        let g = FactorGraph::new(1, 1, [(0, 0)]).unwrap();
        assert!(g.is_tree());
        assert!(g.spanning_tree_complement().unwrap().is_empty());
        assert_eq!(g.diameter().unwrap(), 1);
    }

    #[test]
    fn rejects_isolated_nodes_and_duplicates() {
        assert!(FactorGraph::new(2, 2, [(0, 0), (0, 1)]).is_err());
        assert!(FactorGraph::new(1, 2, [(0, 0), (0, 0), (0, 1)]).is_err());
        assert!(FactorGraph::new(1, 1, [(1, 0)]).is_err());
    }

    #[test]
    fn cycle_length_must_be_even() {
        let g = fig2();
        assert!(g.count_cycles(5).is_err());
        assert!(g.count_cycles(2).is_err());
    }

    #[test]
    fn disconnected_graph() {
        let g = FactorGraph::new(2, 2, [(0, 0), (1, 1)]).unwrap();
        assert_eq!(g.connected_components().len(), 2);
        assert!(!g.is_tree());
        assert_eq!(g.spanning_tree_complement(), Err(Error::Disconnected));
    }

    #[test]
    fn edge_subset_validation() {
        let g = fig2();
        assert!(EdgeSubset::new(&g, [(2, 3)]).is_err());
        assert!(EdgeSubset::new(&g, [(0, 5)]).is_err());
        let phi = EdgeSubset::new(&g, [(2, 3), (3, 4), (3, 5)]).unwrap();
        assert!(g.leaves_spanning_tree(&phi));
    }

    /// Hand oracle: delete the data nodes next to `alpha`, recount code degrees.
    fn profile_oracle(g: &FactorGraph, alpha: &[usize]) -> (usize, usize) {
        let dead: BTreeSet<usize> =
            alpha.iter().flat_map(|&n| g.code_neighbors(n).iter().copied()).collect();
        let mut n1 = 0;
        let mut n2 = 0;
        for n in 0..g.n_code() {
            let d = g.code_neighbors(n).iter().filter(|k| !dead.contains(k)).count();
            if d == 1 {
                n1 += 1;
            } else if d > 1 {
                n2 += 1;
            }
        }
        (n1, n2)
    }

    #[test]
    fn deletion_profiles() {
        let g = fig2();
        let p = g.delete_around_code_nodes(&[]).unwrap();
        assert_eq!((p.n1, p.n2), (0, 4));
        // code node 0 touches users 0,1,2; rows 1..3 each lose one edge
        let p = g.delete_around_code_nodes(&[0]).unwrap();
        assert_eq!((p.n1, p.n2), profile_oracle(&g, &[0]));
        assert_eq!((p.n1, p.n2), (0, 3));
        let p = g.delete_around_code_nodes(&[0, 1]).unwrap();
        assert_eq!((p.n1, p.n2), profile_oracle(&g, &[0, 1]));
        assert!(g.delete_around_code_nodes(&[0, 1, 2, 3]).is_err());

        let tree = FactorGraph::from_signature(&presets::tree_code(5).unwrap()).unwrap();
        let p = tree.delete_around_code_nodes(&[0]).unwrap();
        assert_eq!((p.n1, p.n2), profile_oracle(&tree, &[0]));
        assert_eq!((p.n1, p.n2), (1, 2));
    }
}
