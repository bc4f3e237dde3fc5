//! Approximate distance oracles over padded hierarchies: the basic
//! collection (stretch below 16k), the reduced-size variant built on metric
//! closures, and the epsilon-copy variant (stretch 8(1+eps)k, query work
//! proportional to 1/eps).

use std::collections::HashMap;

use crate::arith;
use crate::graph::WeightedGraph;
use crate::ramsey::{build_hierarchy, Hierarchy};
use crate::ultrametric::{LcaIndex, UltrametricTree};
use crate::weight::{two_pow, wi, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVariant {
    Basic,
    Reduced,
}

/// One phase of the construction: the tree for the hierarchy built on the
/// vertices that were still uncovered when the phase started.
#[derive(Debug, Clone)]
pub struct OracleRound<W> {
    pub scale: W,
    /// Vertices present as leaves, ascending original ids.
    pub universe: Vec<u32>,
    pub tree: UltrametricTree<W>,
    pub lca: LcaIndex,
    /// Original id -> leaf-index domain (identity for the basic variant).
    local_of: Option<HashMap<u32, u32>>,
    /// Kept on freshly built oracles for the property suites; not serialized.
    pub hierarchy: Option<Hierarchy<W>>,
}

impl<W: Weight> OracleRound<W> {
    pub fn new(
        scale: W,
        universe: Vec<u32>,
        tree: UltrametricTree<W>,
        hierarchy: Option<Hierarchy<W>>,
        reduced: bool,
    ) -> Self {
        let lca = LcaIndex::build(&tree);
        let local_of = reduced.then(|| {
            universe
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, i as u32))
                .collect()
        });
        OracleRound {
            scale,
            universe,
            tree,
            lca,
            local_of,
            hierarchy,
        }
    }

    /// Leaf node for an original vertex id, if this round covers it.
    pub fn leaf_node(&self, v: u32) -> Option<u32> {
        match &self.local_of {
            None => self.tree.leaf(v),
            Some(map) => map.get(&v).and_then(|&l| self.tree.leaf(l)),
        }
    }
}

/// Ordered list of rounds plus the home map.
#[derive(Debug, Clone)]
pub struct OracleCollection<W> {
    pub k: u32,
    pub variant: OracleVariant,
    pub scale: W,
    pub rounds: Vec<OracleRound<W>>,
    /// Vertex -> index of the round in which it is padded at all levels.
    pub home: Vec<u32>,
    pub n: usize,
}

impl<W: Weight> OracleCollection<W> {
    /// Repeated hierarchy construction on the whole graph, removing the
    /// padded set from the mark universe each phase.
    pub fn build_basic(g: &WeightedGraph<W>, k: u32) -> Self {
        Self::build_basic_scaled(g, k, W::one())
    }

    pub fn build_basic_scaled(g: &WeightedGraph<W>, k: u32, scale: W) -> Self {
        let n = g.n();
        let mut uncovered: Vec<u32> = (0..n as u32).collect();
        let mut home = vec![u32::MAX; n];
        let mut rounds = Vec::new();
        while !uncovered.is_empty() {
            let h = build_hierarchy(g, &uncovered, k, scale).expect("uncovered is nonempty");
            let tree = UltrametricTree::oracle_tree(&h);
            let round_idx = rounds.len() as u32;
            for &v in &h.padded {
                home[v as usize] = round_idx;
            }
            uncovered.retain(|v| home[*v as usize] == u32::MAX);
            let padded_count = h.padded.len();
            rounds.push(OracleRound::new(
                scale,
                (0..n as u32).collect(),
                tree,
                Some(h),
                false,
            ));
            debug_assert!(padded_count > 0);
        }
        OracleCollection {
            k,
            variant: OracleVariant::Basic,
            scale,
            rounds,
            home,
            n,
        }
    }

    /// Same loop over the metric closure of the uncovered set; padded
    /// vertices disappear from later rounds entirely, so trees shrink.
    pub fn build_reduced(g: &WeightedGraph<W>, k: u32) -> Self {
        let n = g.n();
        let mut uncovered: Vec<u32> = (0..n as u32).collect();
        let mut home = vec![u32::MAX; n];
        let mut rounds = Vec::new();
        while !uncovered.is_empty() {
            let closure = g.metric_closure(&uncovered);
            let locals: Vec<u32> = (0..closure.n() as u32).collect();
            let h = build_hierarchy(&closure, &locals, k, W::one()).expect("nonempty");
            let tree = UltrametricTree::oracle_tree(&h);
            let round_idx = rounds.len() as u32;
            let padded_global: Vec<u32> = h.padded.iter().map(|&l| uncovered[l as usize]).collect();
            for &v in &padded_global {
                home[v as usize] = round_idx;
            }
            let universe = uncovered.clone();
            uncovered.retain(|v| home[*v as usize] == u32::MAX);
            rounds.push(OracleRound::new(W::one(), universe, tree, Some(h), true));
        }
        OracleCollection {
            k,
            variant: OracleVariant::Reduced,
            scale: W::one(),
            rounds,
            home,
            n,
        }
    }

    pub fn home_of(&self, v: u32) -> u32 {
        self.home[v as usize]
    }

    /// Distance estimate: `scale * 2^(i+1)` where `i` is the level of the
    /// LCA of `s` and `t` in the deciding round's tree.
    pub fn query(&self, s: u32, t: u32) -> W {
        self.query_counted(s, t).0
    }

    /// Query plus a count of the elementary operations performed; the count
    /// depends only on the variant, never on the graph size.
    pub fn query_counted(&self, s: u32, t: u32) -> (W, u64) {
        let mut steps = 0u64;
        if s == t {
            return (W::zero(), 1);
        }
        let round_idx = match self.variant {
            OracleVariant::Basic => {
                steps += 1;
                self.home[s as usize]
            }
            OracleVariant::Reduced => {
                steps += 2;
                // the earlier-constructed of the two home rounds decides; the
                // roles of s and t swap so the queried side is padded there
                self.home[s as usize].min(self.home[t as usize])
            }
        };
        let round = &self.rounds[round_idx as usize];
        let ls = round.leaf_node(s).expect("s missing from its round");
        let lt = round.leaf_node(t).expect("t missing from deciding round");
        steps += 2;
        let lca = round.lca.lca_counted(ls, lt, &mut steps);
        let level = round.tree.level[lca as usize];
        steps += 1;
        (round.scale * two_pow::<W>(level as i32 + 1), steps)
    }

    /// LCA level of `(s, t)` in the round where `s` is padded (used by the
    /// epsilon copies, which estimate with their own scale factors).
    fn lca_level_counted(&self, s: u32, t: u32, steps: &mut u64) -> u32 {
        *steps += 1;
        let round = &self.rounds[self.home[s as usize] as usize];
        let ls = round.leaf_node(s).expect("s missing");
        let lt = round.leaf_node(t).expect("t missing");
        *steps += 2;
        let lca = round.lca.lca_counted(ls, lt, steps);
        *steps += 1;
        round.tree.level[lca as usize]
    }
}

/// `ceil(1/eps)` basic collections, copy `l` built with radius scale
/// `1 + l*eps`; estimates refine the power-of-two rounding.
#[derive(Debug, Clone)]
pub struct EpsilonOracle<W> {
    pub eps: W,
    pub k: u32,
    pub copies: Vec<OracleCollection<W>>,
}

impl<W: Weight> EpsilonOracle<W> {
    pub fn build(g: &WeightedGraph<W>, k: u32, eps: W) -> Self {
        assert!(
            eps > W::zero() && eps < W::one(),
            "eps must lie strictly between 0 and 1"
        );
        let copies_count = (W::one() / eps).ceil().to_u64().unwrap();
        let copies = (0..copies_count)
            .map(|l| {
                let scale = W::one() + wi::<W>(l) * eps;
                OracleCollection::build_basic_scaled(g, k, scale)
            })
            .collect();
        EpsilonOracle { eps, k, copies }
    }

    pub fn query(&self, s: u32, t: u32) -> W {
        self.query_counted(s, t).0
    }

    /// Maximum over copies of `(1 + (l+1) eps) * 2^(i_l)`, where `i_l` is the
    /// LCA level of `(s, t)` in copy `l`'s home tree of `s`. Every copy
    /// over-approximates by at most `8(1+eps)k`, and one of them does not
    /// under-approximate.
    pub fn query_counted(&self, s: u32, t: u32) -> (W, u64) {
        let mut steps = 0u64;
        if s == t {
            return (W::zero(), 1);
        }
        let mut best = W::zero();
        for (l, copy) in self.copies.iter().enumerate() {
            let level = copy.lca_level_counted(s, t, &mut steps);
            let factor = W::one() + wi::<W>(l as u64 + 1) * self.eps;
            let estimate = factor * two_pow::<W>(level as i32);
            steps += 1;
            if estimate > best {
                best = estimate;
            }
        }
        (best, steps)
    }
}

/// Worst-case phase count for a universe of `n` vertices: the fixpoint of
/// `m <- m - ceil(m^(1-1/k))`.
pub fn phase_bound(n: usize, k: u32) -> u64 {
    arith::recurrence_rounds(n as u64, k)
}
