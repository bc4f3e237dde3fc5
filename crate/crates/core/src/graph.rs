//! Weighted undirected graphs, induced-subgraph views with working weights,
//! and the exact shortest-path machinery everything else is built on.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::set::IdSet;
use crate::weight::{wf, Weight};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: edge weight {weight} is below the minimum of 1")]
    InvalidWeight { line: usize, weight: f64 },
    #[error("line {line}: malformed edge (self-loop, duplicate, or bad token)")]
    MalformedEdge { line: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no edges or vertices")]
    Empty,
    #[error("vertex {0} is not a member of the view")]
    NotInView(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<W> {
    pub u: u32,
    pub v: u32,
    pub w: W,
}

impl<W: Weight> Edge<W> {
    pub fn other(&self, x: u32) -> u32 {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Immutable weighted undirected graph.
///
/// Vertices are `0..n`. The adjacency list of each vertex is sorted by
/// neighbor id; the index of an entry in that list is the vertex's stable
/// *port* number for the incident edge.
#[derive(Debug, Clone)]
pub struct WeightedGraph<W> {
    n: usize,
    edges: Vec<Edge<W>>,
    adjacency: Vec<Vec<(u32, u32)>>, // (neighbor, edge id), sorted by neighbor
}

impl<W: Weight> WeightedGraph<W> {
    /// Builds a graph from an edge list, validating every invariant:
    /// weights at least 1, no self-loops or parallel edges, connected.
    pub fn new(n: usize, edges: Vec<Edge<W>>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        let one = W::one();
        for (i, e) in edges.iter().enumerate() {
            if e.u == e.v || e.u as usize >= n || e.v as usize >= n {
                return Err(GraphError::MalformedEdge { line: i + 1 });
            }
            if !(e.w >= one) || !e.w.is_finite() {
                return Err(GraphError::InvalidWeight {
                    line: i + 1,
                    weight: e.w.to_f64().unwrap_or(f64::NAN),
                });
            }
            adjacency[e.u as usize].push((e.v, i as u32));
            adjacency[e.v as usize].push((e.u, i as u32));
        }
        for (v, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0].0 == w[1].0) {
                let dup = adj.windows(2).find(|w| w[0].0 == w[1].0).unwrap();
                return Err(GraphError::MalformedEdge {
                    line: dup[1].1 as usize + 1,
                });
            }
            let _ = v;
        }
        let g = WeightedGraph { n, edges, adjacency };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Parses a whitespace-separated edge list, one `u v w` triple per line.
    /// Lines starting with `#` are comments. Vertex ids are compacted to
    /// `0..n` in order of first appearance.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut ids: Vec<i64> = Vec::new();
        let mut compact = std::collections::HashMap::new();
        let mut edges = Vec::new();
        let mut line_no = 0usize;
        for raw in text.lines() {
            line_no += 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (u, v, w) = match (it.next(), it.next(), it.next(), it.next()) {
                (Some(u), Some(v), Some(w), None) => (u, v, w),
                _ => return Err(GraphError::MalformedEdge { line: line_no }),
            };
            let parse_id = |s: &str| s.parse::<i64>().ok();
            let (u, v) = match (parse_id(u), parse_id(v)) {
                (Some(u), Some(v)) => (u, v),
                _ => return Err(GraphError::MalformedEdge { line: line_no }),
            };
            let w: f64 = w
                .parse()
                .map_err(|_| GraphError::MalformedEdge { line: line_no })?;
            if !(w >= 1.0) || !w.is_finite() {
                return Err(GraphError::InvalidWeight { line: line_no, weight: w });
            }
            let mut intern = |id: i64| -> u32 {
                *compact.entry(id).or_insert_with(|| {
                    ids.push(id);
                    (ids.len() - 1) as u32
                })
            };
            let (cu, cv) = (intern(u), intern(v));
            edges.push(Edge { u: cu, v: cv, w: wf::<W>(w) });
        }
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        // Re-validate through the constructor; map its line numbers back as-is
        // (constructor lines are edge indices, close enough for diagnostics).
        WeightedGraph::new(ids.len(), edges)
    }

    /// Serializes as the same edge-list text format `parse` accepts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!(
                "{} {} {}\n",
                e.u,
                e.v,
                crate::weight::format_weight(e.w)
            ));
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    pub fn edge(&self, id: u32) -> &Edge<W> {
        &self.edges[id as usize]
    }

    pub fn adjacency(&self, v: u32) -> &[(u32, u32)] {
        &self.adjacency[v as usize]
    }

    /// Port number of `v`'s incident edge leading to `to`, if adjacent.
    pub fn port(&self, v: u32, to: u32) -> Option<u32> {
        self.adjacency[v as usize]
            .binary_search_by_key(&to, |&(nb, _)| nb)
            .ok()
            .map(|i| i as u32)
    }

    /// Neighbor reached from `v` through port `port`.
    pub fn neighbor_at(&self, v: u32, port: u32) -> Option<u32> {
        self.adjacency[v as usize].get(port as usize).map(|&(nb, _)| nb)
    }

    pub fn edge_between(&self, u: u32, v: u32) -> Option<u32> {
        self.port(u, v)
            .map(|p| self.adjacency[u as usize][p as usize].1)
    }

    fn is_connected(&self) -> bool {
        let mut seen = IdSet::new(self.n);
        let mut stack = vec![0u32];
        seen.insert(0);
        while let Some(v) = stack.pop() {
            for &(nb, _) in &self.adjacency[v as usize] {
                if seen.insert(nb) {
                    stack.push(nb);
                }
            }
        }
        seen.len() == self.n
    }

    /// Exact diameter by one single-source run per vertex.
    pub fn diameter(&self) -> W {
        let view = SubgraphView::full(self);
        let mut best = W::zero();
        for v in 0..self.n as u32 {
            let r = view.radius(v);
            if r > best {
                best = r;
            }
        }
        best
    }

    /// Complete graph over `universe` (sorted vertex ids) with edge weights
    /// equal to shortest-path distances in `self`. Closure vertex `i`
    /// corresponds to `universe[i]`.
    pub fn metric_closure(&self, universe: &[u32]) -> WeightedGraph<W> {
        assert!(!universe.is_empty(), "metric closure of an empty set");
        debug_assert!(universe.windows(2).all(|w| w[0] < w[1]));
        let view = SubgraphView::full(self);
        let m = universe.len();
        let mut edges = Vec::with_capacity(m * (m - 1) / 2);
        for (i, &u) in universe.iter().enumerate() {
            let field = view.shortest_paths(u);
            for (j, &v) in universe.iter().enumerate().skip(i + 1) {
                edges.push(Edge {
                    u: i as u32,
                    v: j as u32,
                    w: field.dist(v),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); m];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.u as usize].push((e.v, i as u32));
            adjacency[e.v as usize].push((e.u, i as u32));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        WeightedGraph { n: m, edges, adjacency }
    }
}

/// Single-source distances inside a view, with predecessor links for path
/// extraction. Unreached vertices report an infinite distance.
#[derive(Debug, Clone)]
pub struct DistanceField<W> {
    pub source: u32,
    dist: Vec<W>,
    parent: Vec<u32>,      // predecessor vertex, u32::MAX if none
    parent_edge: Vec<u32>, // edge id towards predecessor, u32::MAX if none
}

impl<W: Weight> DistanceField<W> {
    pub fn dist(&self, v: u32) -> W {
        self.dist[v as usize]
    }

    pub fn reached(&self, v: u32) -> bool {
        self.dist[v as usize] < W::infinity()
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        let p = self.parent[v as usize];
        (p != u32::MAX).then_some(p)
    }

    pub fn parent_edge(&self, v: u32) -> Option<u32> {
        let e = self.parent_edge[v as usize];
        (e != u32::MAX).then_some(e)
    }

    /// Vertex sequence from the source to `v` (inclusive).
    pub fn path_to(&self, v: u32) -> Vec<u32> {
        assert!(self.reached(v), "no path to {v}");
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

struct HeapEntry<W>(W, u32);

impl<W: Weight> PartialEq for HeapEntry<W> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl<W: Weight> Eq for HeapEntry<W> {}
impl<W: Weight> PartialOrd for HeapEntry<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<W: Weight> Ord for HeapEntry<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: reverse on distance, then prefer the smaller vertex id.
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// View of the graph induced on a vertex subset, carrying the working
/// weights: each edge is either at its original weight or halved, never less.
#[derive(Debug, Clone)]
pub struct SubgraphView<'g, W> {
    pub graph: &'g WeightedGraph<W>,
    pub members: IdSet,
    halved: IdSet,
}

impl<'g, W: Weight> SubgraphView<'g, W> {
    pub fn full(graph: &'g WeightedGraph<W>) -> Self {
        SubgraphView {
            graph,
            members: IdSet::full(graph.n()),
            halved: IdSet::new(graph.edges().len()),
        }
    }

    pub fn of_members(graph: &'g WeightedGraph<W>, members: IdSet) -> Self {
        SubgraphView {
            graph,
            members,
            halved: IdSet::new(graph.edges().len()),
        }
    }

    /// Same working weights, restricted membership.
    pub fn restrict(&self, members: IdSet) -> Self {
        debug_assert!(members.is_subset_of(&self.members));
        SubgraphView {
            graph: self.graph,
            members,
            halved: self.halved.clone(),
        }
    }

    /// `restrict` from a borrowed member set.
    pub fn restrict_to(&self, members: &IdSet) -> Self {
        SubgraphView {
            graph: self.graph,
            members: members.clone(),
            halved: self.halved.clone(),
        }
    }

    /// Takes over the halved-edge state of another view of the same graph.
    pub fn adopt_halved(&mut self, other: &SubgraphView<'g, W>) {
        self.halved = other.halved.clone();
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn working_weight(&self, edge_id: u32) -> W {
        let w = self.graph.edge(edge_id).w;
        if self.halved.contains(edge_id) {
            w * wf::<W>(0.5)
        } else {
            w
        }
    }

    pub fn is_halved(&self, edge_id: u32) -> bool {
        self.halved.contains(edge_id)
    }

    /// Halves an edge's working weight. Each edge may be halved at most once.
    pub fn halve_edge(&mut self, edge_id: u32) {
        let fresh = self.halved.insert(edge_id);
        assert!(fresh, "edge {edge_id} halved twice");
    }

    /// Exact single-source shortest paths inside the view, under working
    /// weights. Pops and predecessor ties both break on smaller vertex id.
    pub fn shortest_paths(&self, source: u32) -> DistanceField<W> {
        self.run_dijkstra(&[(source, W::zero())], None, false, source)
    }

    /// Truncated run: vertices farther than `cutoff` are left unreached.
    pub fn shortest_paths_within(&self, source: u32, cutoff: W) -> DistanceField<W> {
        self.run_dijkstra(&[(source, W::zero())], Some(cutoff), false, source)
    }

    /// Multi-source run with per-source starting potentials; edge weights are
    /// doubled when `double_edges` is set (used by the cone-metric sweep).
    pub fn shortest_paths_multi(
        &self,
        sources: &[(u32, W)],
        double_edges: bool,
    ) -> DistanceField<W> {
        self.run_dijkstra(sources, None, double_edges, u32::MAX)
    }

    fn run_dijkstra(
        &self,
        sources: &[(u32, W)],
        cutoff: Option<W>,
        double_edges: bool,
        label: u32,
    ) -> DistanceField<W> {
        let n = self.graph.n();
        let mut dist = vec![W::infinity(); n];
        let mut parent = vec![u32::MAX; n];
        let mut parent_edge = vec![u32::MAX; n];
        let mut done = IdSet::new(n);
        let mut heap = BinaryHeap::new();
        for &(s, pot) in sources {
            assert!(self.members.contains(s), "source {s} not in view");
            if pot < dist[s as usize] {
                dist[s as usize] = pot;
                heap.push(HeapEntry(pot, s));
            }
        }
        let two = wf::<W>(2.0);
        while let Some(HeapEntry(d, v)) = heap.pop() {
            if done.contains(v) || d > dist[v as usize] {
                continue;
            }
            if let Some(c) = cutoff {
                if d > c {
                    break;
                }
            }
            done.insert(v);
            for &(nb, eid) in self.graph.adjacency(v) {
                if !self.members.contains(nb) || done.contains(nb) {
                    continue;
                }
                let mut w = self.working_weight(eid);
                if double_edges {
                    w = w * two;
                }
                let nd = d + w;
                let slot = nb as usize;
                if nd < dist[slot] {
                    dist[slot] = nd;
                    parent[slot] = v;
                    parent_edge[slot] = eid;
                    heap.push(HeapEntry(nd, nb));
                } else if nd == dist[slot] && v < parent[slot] {
                    parent[slot] = v;
                    parent_edge[slot] = eid;
                }
            }
        }
        DistanceField {
            source: label,
            dist,
            parent,
            parent_edge,
        }
    }

    /// Closed ball `{u in members : dist(v,u) <= r}`, ascending ids.
    pub fn ball(&self, v: u32, r: W) -> Vec<u32> {
        assert!(self.members.contains(v), "ball center not in view");
        let field = self.shortest_paths_within(v, r);
        self.members
            .iter()
            .filter(|&u| field.dist(u) <= r)
            .collect()
    }

    /// Radius of the view from `root` (infinite when the induced graph is
    /// disconnected).
    pub fn radius(&self, root: u32) -> W {
        assert!(self.members.contains(root), "radius root not in view");
        let field = self.shortest_paths(root);
        let mut best = W::zero();
        for v in self.members.iter() {
            let d = field.dist(v);
            if d > best {
                best = d;
            }
        }
        best
    }
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use super::*;

    pub fn p3() -> WeightedGraph<f64> {
        WeightedGraph::parse("0 1 1\n1 2 1").unwrap()
    }

    pub fn star(leaves: usize) -> WeightedGraph<f64> {
        let text: String = (1..=leaves).map(|i| format!("0 {} 1\n", i)).collect();
        WeightedGraph::parse(&text).unwrap()
    }

    /// All-pairs distances by Floyd–Warshall, an independent oracle.
    pub fn floyd_warshall(g: &WeightedGraph<f64>) -> Vec<Vec<f64>> {
        let n = g.n();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            d[i][i] = 0.0;
        }
        for e in g.edges() {
            let (u, v) = (e.u as usize, e.v as usize);
            if e.w < d[u][v] {
                d[u][v] = e.w;
                d[v][u] = e.w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let alt = d[i][k] + d[k][j];
                    if alt < d[i][j] {
                        d[i][j] = alt;
                    }
                }
            }
        }
        d
    }
}
