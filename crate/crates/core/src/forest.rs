//! Iterated spanning-tree construction: repeatedly build one low-stretch
//! tree for the still-uncovered vertices, until every vertex has a home tree
//! that pads it towards the whole graph. The union of the trees is a sparse
//! spanner in which every vertex owns one all-destinations low-stretch tree.

use crate::arith;
use crate::graph::{SubgraphView, WeightedGraph};
use crate::petal::{build_spanning_tree, PetalError, SpanningTree};
use crate::set::IdSet;
use crate::weight::Weight;

#[derive(Debug, Clone)]
pub struct ForestCollection {
    pub k: u32,
    pub n: usize,
    pub trees: Vec<SpanningTree>,
    /// Per tree: the vertices that survived its construction, ascending.
    pub survivors: Vec<Vec<u32>>,
    /// Vertex -> index of the tree where it survived.
    pub home: Vec<u32>,
    /// Per tree: edges at half weight when its construction finished.
    pub halved: Vec<IdSet>,
}

/// Stretch bound certified for `(v, u)` pairs with `v` a survivor of its
/// home tree: `2 * 8 * 2^7 * L * k`, where the leading 2 covers the
/// in-flight reweighting and `L = max(1, ceil(1 + log2 log2 n))`.
pub fn stretch_bound(n: usize, k: u32) -> u64 {
    2 * 8 * 128 * arith::petal_level_count(n as u64) as u64 * k as u64
}

/// Iterates `build_spanning_tree` with root and target fixed at vertex 0 and
/// fresh working weights per iteration, until every vertex survived once.
pub fn build_forest<W: Weight>(
    g: &WeightedGraph<W>,
    k: u32,
    with_trace: bool,
) -> Result<(ForestCollection, Vec<String>), PetalError> {
    let n = g.n();
    let mut remaining: Vec<u32> = (0..n as u32).collect();
    let mut home = vec![u32::MAX; n];
    let mut trees = Vec::new();
    let mut survivors = Vec::new();
    let mut halved = Vec::new();
    let mut trace = Vec::new();
    while !remaining.is_empty() {
        let build = build_spanning_tree(g, &remaining, k, 0, with_trace)?;
        assert!(
            arith::survival_ok(build.survivors.len() as u64, remaining.len() as u64, k),
            "survivor bound failed: {} of {}",
            build.survivors.len(),
            remaining.len()
        );
        let idx = trees.len() as u32;
        for &v in &build.survivors {
            home[v as usize] = idx;
        }
        remaining.retain(|v| home[*v as usize] == u32::MAX);
        trees.push(build.tree);
        survivors.push(build.survivors);
        halved.push(build.halved);
        if let Some(lines) = build.trace {
            trace.extend(lines);
        }
    }
    let bound = arith::recurrence_rounds(n as u64, k);
    assert!(
        trees.len() as u64 <= bound,
        "tree count {} beyond the recurrence bound {bound}",
        trees.len()
    );
    Ok((
        ForestCollection {
            k,
            n,
            trees,
            survivors,
            home,
            halved,
        },
        trace,
    ))
}

impl ForestCollection {
    pub fn home_of(&self, v: u32) -> u32 {
        self.home[v as usize]
    }

    /// De-duplicated union of all tree edges, ascending edge ids.
    pub fn spanner_union(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .trees
            .iter()
            .flat_map(|t| t.edge_ids.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Per-tree stats rows: (tree, survivor count, max stretch over
    /// survivors toward all vertices, tree radius from its root).
    pub fn stats<W: Weight>(&self, g: &WeightedGraph<W>) -> Vec<(usize, usize, f64, W)> {
        let view = SubgraphView::full(g);
        self.trees
            .iter()
            .enumerate()
            .map(|(i, tree)| {
                let radius = tree
                    .distances_from(g, tree.root, None)
                    .into_iter()
                    .fold(W::zero(), |a, b| if b > a { b } else { a });
                let mut worst = 0.0f64;
                for &v in &self.survivors[i] {
                    let in_tree = tree.distances_from(g, v, None);
                    let in_graph = view.shortest_paths(v);
                    for u in 0..self.n as u32 {
                        if u != v {
                            let ratio = (in_tree[u as usize] / in_graph.dist(u))
                                .to_f64()
                                .unwrap_or(f64::NAN);
                            worst = worst.max(ratio);
                        }
                    }
                }
                (i, self.survivors[i].len(), worst, radius)
            })
            .collect()
    }
}
