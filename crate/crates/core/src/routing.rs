//! Stateless compact routing over a tree collection. Each tree gets an
//! interval routing scheme with a heavy/light split at threshold
//! `size(v)/b`: heavy children are routed via DFS intervals stored in the
//! local table, light edges ride inside the destination label as
//! (depth, port) pairs. The packet header is the destination's label alone,
//! so every forwarding decision is a pure function of one table and that
//! label.

use thiserror::Error;

use crate::forest::ForestCollection;
use crate::graph::WeightedGraph;
use crate::petal::SpanningTree;
use crate::weight::Weight;

pub const NO_PORT: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("header does not match any table case (corrupted label?)")]
    MalformedHeader,
    #[error("hop budget exhausted after {0} steps")]
    LoopDetected(usize),
}

/// Per-vertex table for one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub dfs_in: u32,
    pub dfs_out: u32,
    pub depth: u32,
    pub parent_port: u32,
    /// Heavy children: (dfs interval start, end, port), fewer than `b`.
    pub heavy: Vec<(u32, u32, u32)>,
}

/// Per-vertex label for one tree: the DFS number plus one (depth, port)
/// entry per light edge on the root path.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLabel {
    pub dfs: u32,
    pub light: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct TreeRoutingScheme {
    pub b: u32,
    pub root: u32,
    pub tables: Vec<Table>,
    pub labels: Vec<TreeLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Deliver,
    Forward(u32),
}

/// Builds tables and labels for one tree; DFS visits children in ascending
/// vertex order, ports come from the graph's sorted adjacency.
pub fn build_tree_scheme<W: Weight>(
    g: &WeightedGraph<W>,
    tree: &SpanningTree,
    b: u32,
) -> TreeRoutingScheme {
    assert!(b >= 2, "b must be at least 2");
    let n = tree.n;
    // subtree sizes, children already ascending
    let mut size = vec![1u32; n];
    let order = {
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![tree.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(&tree.children[v as usize]);
        }
        order
    };
    for &v in order.iter().rev() {
        for &c in &tree.children[v as usize] {
            size[v as usize] += size[c as usize];
        }
    }

    // DFS numbering
    let mut dfs_in = vec![0u32; n];
    let mut dfs_out = vec![0u32; n];
    let mut depth = vec![0u32; n];
    let mut counter = 1u32;
    let mut stack: Vec<(u32, usize)> = vec![(tree.root, 0)];
    dfs_in[tree.root as usize] = 0;
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if *next < tree.children[v as usize].len() {
            let c = tree.children[v as usize][*next];
            *next += 1;
            depth[c as usize] = depth[v as usize] + 1;
            dfs_in[c as usize] = counter;
            counter += 1;
            stack.push((c, 0));
        } else {
            dfs_out[v as usize] = counter - 1;
            stack.pop();
        }
    }

    let mut tables = Vec::with_capacity(n);
    let mut labels: Vec<TreeLabel> = (0..n)
        .map(|v| TreeLabel {
            dfs: dfs_in[v],
            light: Vec::new(),
        })
        .collect();
    for v in 0..n as u32 {
        let vu = v as usize;
        let parent = tree.parent[vu];
        let parent_port = if parent == u32::MAX {
            NO_PORT
        } else {
            g.port(v, parent).expect("tree edge exists in the graph")
        };
        let mut heavy = Vec::new();
        for &c in &tree.children[vu] {
            // heavy iff size(c) >= size(v)/b, in exact integers
            if b * size[c as usize] >= size[vu] {
                let port = g.port(v, c).expect("tree edge exists in the graph");
                heavy.push((dfs_in[c as usize], dfs_out[c as usize], port));
            }
        }
        assert!((heavy.len() as u32) < b, "more than b-1 heavy children");
        tables.push(Table {
            dfs_in: dfs_in[vu],
            dfs_out: dfs_out[vu],
            depth: depth[vu],
            parent_port,
            heavy,
        });
    }

    // propagate light path entries root-down
    for &v in &order {
        for &c in &tree.children[v as usize] {
            let mut path = labels[v as usize].light.clone();
            if b * size[c as usize] < size[v as usize] {
                let port = g.port(v, c).expect("tree edge exists in the graph");
                path.push((depth[v as usize], port));
            }
            labels[c as usize].light = path;
        }
    }

    // every light edge shrinks the subtree by a factor over b
    let log_b_n = {
        let mut e = 0u32;
        let mut pow = 1u64;
        while pow < n as u64 {
            pow *= b as u64;
            e += 1;
        }
        e
    };
    for label in &labels {
        assert!(label.light.len() as u32 <= log_b_n, "light path too long");
    }

    TreeRoutingScheme {
        b,
        root: tree.root,
        tables,
        labels,
    }
}

/// The stateless forwarding decision: pure in `(table, header)`.
pub fn route_step(table: &Table, header: &TreeLabel) -> Result<Decision, RouteError> {
    let d = header.dfs;
    if d == table.dfs_in {
        return Ok(Decision::Deliver);
    }
    if d < table.dfs_in || d > table.dfs_out {
        if table.parent_port == NO_PORT {
            return Err(RouteError::MalformedHeader);
        }
        return Ok(Decision::Forward(table.parent_port));
    }
    for &(lo, hi, port) in &table.heavy {
        if lo <= d && d <= hi {
            return Ok(Decision::Forward(port));
        }
    }
    // destination is under a light child: its label recorded my depth
    match header.light.binary_search_by_key(&table.depth, |&(d, _)| d) {
        Ok(idx) => Ok(Decision::Forward(header.light[idx].1)),
        Err(_) => Err(RouteError::MalformedHeader),
    }
}

/// Combined scheme: one tree scheme per forest tree, tables for all trees at
/// every vertex, labels = (home tree, label in home tree).
#[derive(Debug, Clone)]
pub struct NetworkRoutingScheme {
    pub b: u32,
    pub k: u32,
    pub n: usize,
    pub home: Vec<u32>,
    pub trees: Vec<TreeRoutingScheme>,
}

/// Size report for one vertex, in words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeRow {
    pub vertex: u32,
    /// Sum over trees: 4 fixed words + 3 per heavy entry.
    pub table_words: u64,
    /// Maximum per-tree entry count: own interval + parent + heavy entries.
    pub max_table_entries: u64,
    /// Home label: tree id + dfs + one word per light entry.
    pub label_words: u64,
}

impl NetworkRoutingScheme {
    pub fn build<W: Weight>(g: &WeightedGraph<W>, forest: &ForestCollection, b: u32) -> Self {
        let trees = forest
            .trees
            .iter()
            .map(|t| build_tree_scheme(g, t, b))
            .collect();
        NetworkRoutingScheme {
            b,
            k: forest.k,
            n: forest.n,
            home: forest.home.clone(),
            trees,
        }
    }

    /// The label a packet towards `v` carries: home tree id plus the
    /// in-tree label.
    pub fn label_of(&self, v: u32) -> (u32, &TreeLabel) {
        let home = self.home[v as usize];
        (home, &self.trees[home as usize].labels[v as usize])
    }

    /// Routes a packet from `s` toward `t` on `t`'s home tree, one pure
    /// `route_step` per hop. Returns the vertex path (empty when `s == t`).
    pub fn simulate<W: Weight>(
        &self,
        g: &WeightedGraph<W>,
        s: u32,
        t: u32,
    ) -> Result<Vec<u32>, RouteError> {
        if s == t {
            return Ok(Vec::new());
        }
        let (home, header) = self.label_of(t);
        let scheme = &self.trees[home as usize];
        let mut path = vec![s];
        let mut cur = s;
        let budget = 2 * self.n;
        loop {
            match route_step(&scheme.tables[cur as usize], header)? {
                Decision::Deliver => return Ok(path),
                Decision::Forward(port) => {
                    cur = g
                        .neighbor_at(cur, port)
                        .ok_or(RouteError::MalformedHeader)?;
                    path.push(cur);
                }
            }
            if path.len() > budget {
                return Err(RouteError::LoopDetected(path.len()));
            }
        }
    }

    /// Per-vertex word counts.
    pub fn measure(&self) -> Vec<SizeRow> {
        (0..self.n as u32)
            .map(|v| {
                let mut table_words = 0u64;
                let mut max_entries = 0u64;
                for scheme in &self.trees {
                    let t = &scheme.tables[v as usize];
                    table_words += 4 + 3 * t.heavy.len() as u64;
                    max_entries = max_entries.max(2 + t.heavy.len() as u64);
                }
                let (_, label) = self.label_of(v);
                SizeRow {
                    vertex: v,
                    table_words,
                    max_table_entries: max_entries,
                    label_words: 2 + label.light.len() as u64,
                }
            })
            .collect()
    }
}
