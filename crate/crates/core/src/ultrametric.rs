//! Rooted labeled trees realizing ultrametrics, built from a hierarchy, plus
//! constant-time LCA via Euler tour + sparse table.

use crate::ramsey::Hierarchy;
use crate::weight::{wi, two_pow, Weight};

pub const NO_NODE: u32 = u32::MAX;

/// Rooted tree with monotone nonnegative labels; leaf distance is the label
/// of the least common ancestor.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrametricTree<W> {
    pub parent: Vec<u32>, // NO_NODE at the root
    pub label: Vec<W>,
    pub level: Vec<u32>,
    pub children: Vec<Vec<u32>>,
    /// Graph vertex -> leaf node (NO_NODE when the vertex has no leaf).
    pub leaf_of: Vec<u32>,
    pub root: u32,
}

fn cluster_label<W: Weight>(scale: W, level: u32, k: u32) -> W {
    scale * two_pow::<W>(level as i32 + 1) * (W::one() - W::one() / wi::<W>(4 * k as u64))
}

impl<W: Weight> UltrametricTree<W> {
    pub fn n_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn is_leaf(&self, node: u32) -> bool {
        self.children[node as usize].is_empty()
    }

    pub fn leaf(&self, vertex: u32) -> Option<u32> {
        match self.leaf_of.get(vertex as usize) {
            Some(&n) if n != NO_NODE => Some(n),
            _ => None,
        }
    }

    /// Ultrametric restricted to the padded set: tree nodes are the clusters
    /// containing a padded vertex, leaves are the padded level-0 singletons,
    /// and a level-`i` node carries label `scale * 2^(i+1) * (1 - 1/(4k))`.
    pub fn embed(h: &Hierarchy<W>) -> Self {
        Self::from_hierarchy(h, false)
    }

    /// Tree over every vertex: all clusters become internal nodes and every
    /// vertex hangs as a leaf under its minimal-level containing cluster.
    pub fn oracle_tree(h: &Hierarchy<W>) -> Self {
        Self::from_hierarchy(h, true)
    }

    fn from_hierarchy(h: &Hierarchy<W>, all_vertices: bool) -> Self {
        let padded_set = crate::set::IdSet::from_sorted(h.n, &h.padded);
        // node ids: clusters in (level descending, index ascending) order
        let mut node_of = vec![vec![NO_NODE; 0]; h.phi as usize + 1];
        let mut parent = Vec::new();
        let mut label = Vec::new();
        let mut level_of = Vec::new();
        for level in (0..=h.phi).rev() {
            let clusters = &h.levels[level as usize];
            node_of[level as usize] = vec![NO_NODE; clusters.len()];
            for (ci, c) in clusters.iter().enumerate() {
                let keep = all_vertices || c.members.iter().any(|&v| padded_set.contains(v));
                if !keep {
                    continue;
                }
                let id = parent.len() as u32;
                node_of[level as usize][ci] = id;
                let up = if level == h.phi {
                    NO_NODE
                } else {
                    node_of[level as usize + 1][c.parent.unwrap() as usize]
                };
                parent.push(up);
                let lb = if !all_vertices && level == 0 {
                    W::zero() // padded singletons are the leaves of the embedding
                } else {
                    cluster_label(h.scale, level, h.k)
                };
                label.push(lb);
                level_of.push(level);
            }
        }

        let mut leaf_of = vec![NO_NODE; h.n];
        if all_vertices {
            // attach every vertex below the lowest-level cluster containing it
            for v in 0..h.n as u32 {
                let (lvl, ci) = (0..=h.phi)
                    .find_map(|i| h.cluster_of(i, v).map(|ci| (i, ci)))
                    .expect("levels refine completely");
                let up = node_of[lvl as usize][ci];
                let id = parent.len() as u32;
                parent.push(up);
                label.push(W::zero());
                level_of.push(0);
                leaf_of[v as usize] = id;
            }
        } else {
            for &v in &h.padded {
                let ci = h.cluster_of(0, v).expect("padded vertex has a singleton");
                leaf_of[v as usize] = node_of[0][ci];
            }
        }

        let mut children = vec![Vec::new(); parent.len()];
        let mut root = NO_NODE;
        for (id, &p) in parent.iter().enumerate() {
            if p == NO_NODE {
                root = id as u32;
            } else {
                children[p as usize].push(id as u32);
            }
        }
        UltrametricTree {
            parent,
            label,
            level: level_of,
            children,
            leaf_of,
            root,
        }
    }

    /// Ultrametric distance between two graph vertices (label of the LCA of
    /// their leaves).
    pub fn distance(&self, idx: &LcaIndex, u: u32, v: u32) -> W {
        let (lu, lv) = (
            self.leaf(u).expect("u has a leaf"),
            self.leaf(v).expect("v has a leaf"),
        );
        self.label[idx.lca(lu, lv) as usize]
    }

    /// Parent-array + label-array text lines, for goldens and debugging.
    pub fn to_text(&self) -> String {
        let parents: Vec<String> = self
            .parent
            .iter()
            .map(|&p| if p == NO_NODE { "-".into() } else { p.to_string() })
            .collect();
        let labels: Vec<String> = self
            .label
            .iter()
            .map(|&l| crate::weight::format_weight(l))
            .collect();
        let levels: Vec<String> = self.level.iter().map(|l| l.to_string()).collect();
        let leaves: Vec<String> = self
            .leaf_of
            .iter()
            .map(|&n| if n == NO_NODE { "-".into() } else { n.to_string() })
            .collect();
        format!(
            "parent {}\nlabel {}\nlevel {}\nleaf {}\n",
            parents.join(" "),
            labels.join(" "),
            levels.join(" "),
            leaves.join(" ")
        )
    }
}

/// Euler tour + sparse table: O(n log n) preprocessing, two table probes per
/// query.
#[derive(Debug, Clone)]
pub struct LcaIndex {
    euler: Vec<u32>,
    first: Vec<u32>,
    depth: Vec<u32>,
    /// `table[j][i]`: index into `euler` of the minimum-depth node in
    /// `euler[i .. i + 2^j]`.
    table: Vec<Vec<u32>>,
}

impl LcaIndex {
    pub fn build<W: Weight>(tree: &UltrametricTree<W>) -> Self {
        Self::from_structure(&tree.parent, &tree.children, tree.root)
    }

    pub fn from_structure(parent: &[u32], children: &[Vec<u32>], root: u32) -> Self {
        let n = parent.len();
        let mut euler = Vec::with_capacity(2 * n);
        let mut first = vec![u32::MAX; n];
        let mut depth = vec![0u32; n];
        // iterative DFS, children in their stored (ascending) order
        let mut stack: Vec<(u32, usize)> = vec![(root, 0)];
        first[root as usize] = 0;
        euler.push(root);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < children[node as usize].len() {
                let child = children[node as usize][*next];
                *next += 1;
                depth[child as usize] = depth[node as usize] + 1;
                first[child as usize] = euler.len() as u32;
                euler.push(child);
                stack.push((child, 0));
            } else {
                stack.pop();
                if let Some(&(up, _)) = stack.last() {
                    euler.push(up);
                }
            }
        }

        let m = euler.len();
        let mut table = Vec::new();
        table.push((0..m as u32).collect::<Vec<_>>());
        let mut j = 1;
        while (1 << j) <= m {
            let prev = &table[j - 1];
            let mut row = Vec::with_capacity(m - (1 << j) + 1);
            for i in 0..=(m - (1 << j)) {
                let a = prev[i];
                let b = prev[i + (1 << (j - 1))];
                row.push(
                    if depth[euler[a as usize] as usize] <= depth[euler[b as usize] as usize] {
                        a
                    } else {
                        b
                    },
                );
            }
            table.push(row);
            j += 1;
        }
        LcaIndex {
            euler,
            first,
            depth,
            table,
        }
    }

    pub fn lca(&self, u: u32, v: u32) -> u32 {
        let mut steps = 0u64;
        self.lca_counted(u, v, &mut steps)
    }

    /// LCA with an operation counter, used to demonstrate O(1) query work.
    pub fn lca_counted(&self, u: u32, v: u32, steps: &mut u64) -> u32 {
        let (mut l, mut r) = (self.first[u as usize], self.first[v as usize]);
        if l > r {
            std::mem::swap(&mut l, &mut r);
        }
        let len = (r - l + 1) as usize;
        let j = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let a = self.table[j][l as usize];
        let b = self.table[j][r as usize + 1 - (1 << j)];
        *steps += 2; // two sparse-table probes
        let pick = if self.depth[self.euler[a as usize] as usize]
            <= self.depth[self.euler[b as usize] as usize]
        {
            a
        } else {
            b
        };
        self.euler[pick as usize]
    }

    pub fn depth(&self, node: u32) -> u32 {
        self.depth[node as usize]
    }
}

/// Upward-walk LCA, the independent oracle for the index.
pub fn naive_lca(parent: &[u32], mut u: u32, mut v: u32, depth_of: impl Fn(u32) -> u32) -> u32 {
    while depth_of(u) > depth_of(v) {
        u = parent[u as usize];
    }
    while depth_of(v) > depth_of(u) {
        v = parent[v as usize];
    }
    while u != v {
        u = parent[u as usize];
        v = parent[v as usize];
    }
    u
}
