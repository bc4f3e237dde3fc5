//! Deterministic padded hierarchical partial partitions.
//!
//! A hierarchy over `(G, U, k)` is a sequence of partitions, one per distance
//! scale `2^i`, built top-down by region growing: each cluster is carved as a
//! ball around a center that maximizes the marked-ball count, with the ball
//! radius chosen so that the marked vertices lost in the cut annulus are paid
//! for by those retained. The vertices of `U` still marked at the end — the
//! padded set — have their `rho_i`-ball inside a single cluster at every
//! level, and there are at least `|U|^(1-1/k)` of them.
//!
//! Every charging comparison runs in exact integer arithmetic, and all radii
//! at level `i` are integer multiples of `rho_i`, so ties are impossible and
//! rebuilds are bit-identical.

use thiserror::Error;

use crate::arith;
use crate::graph::{DistanceField, SubgraphView, WeightedGraph};
use crate::set::IdSet;
use crate::weight::{wi, two_pow, wf, Weight};

#[derive(Debug, Error, PartialEq)]
pub enum RamseyError {
    #[error("the universe U is empty")]
    EmptyInput,
    #[error("no marked vertex in view")]
    NoMarked,
}

/// Mutable mark state threaded through a build; marks only ever shrink.
#[derive(Debug, Clone)]
pub struct MarkState {
    marked: IdSet,
}

impl MarkState {
    pub fn from_universe(n: usize, universe: &[u32]) -> Self {
        MarkState {
            marked: IdSet::from_sorted(n, universe),
        }
    }

    pub fn is_marked(&self, v: u32) -> bool {
        self.marked.contains(v)
    }

    pub fn count(&self) -> usize {
        self.marked.len()
    }

    pub fn unmark(&mut self, v: u32) -> bool {
        self.marked.remove(v)
    }

    pub fn marked_vertices(&self) -> Vec<u32> {
        self.marked.to_vec()
    }

    pub fn any_marked_in(&self, members: &IdSet) -> bool {
        self.marked.intersects(members)
    }

    pub fn marked_in(&self, members: &IdSet) -> Vec<u32> {
        members.iter().filter(|&v| self.marked.contains(v)).collect()
    }
}

/// One carved cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub level: u32,
    pub center: u32,
    /// Growth index chosen at carving; `None` for the root.
    pub j_index: Option<u32>,
    pub members: Vec<u32>,
    /// Ball of radius `2^(i-1) + 2 j rho_i` at carve time; marked vertices
    /// that end up padded always sit here.
    pub interior: Vec<u32>,
    /// Marked vertices within `2^(i-1) + 2 (j+1) rho_i` at carve time.
    pub responsibility: Vec<u32>,
    /// Index of the containing cluster one level up.
    pub parent: Option<u32>,
}

/// Leveled partial partition with padding guarantees.
#[derive(Debug, Clone)]
pub struct Hierarchy<W> {
    pub k: u32,
    pub scale: W,
    pub phi: u32,
    /// Padding radius per level: `scale * 2^i / (4k)`.
    pub rho: Vec<W>,
    /// Strong-diameter bound per level: `4k * rho[i]` (= `scale * 2^i`).
    pub radius_bound: Vec<W>,
    /// `levels[i]` is the partition at scale `2^i`; `levels[phi]` is the root.
    pub levels: Vec<Vec<Cluster>>,
    /// Vertices of `U` marked at termination, ascending.
    pub padded: Vec<u32>,
    /// The input universe `U`, ascending.
    pub universe: Vec<u32>,
    pub n: usize,
}

impl<W: Weight> Hierarchy<W> {
    /// Index of the level-`i` cluster containing `v`.
    pub fn cluster_of(&self, level: u32, v: u32) -> Option<usize> {
        self.levels[level as usize]
            .iter()
            .position(|c| c.members.binary_search(&v).is_ok())
    }

    /// Line-oriented dump: `level center j members` per cluster, preceded by
    /// a small header. Stable across rebuilds.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("k {}\n", self.k));
        out.push_str(&format!("scale {}\n", crate::weight::format_weight(self.scale)));
        out.push_str(&format!("phi {}\n", self.phi));
        let padded: Vec<String> = self.padded.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("padded {}\n", padded.join(",")));
        for level in (0..=self.phi).rev() {
            for c in &self.levels[level as usize] {
                let members: Vec<String> = c.members.iter().map(|v| v.to_string()).collect();
                out.push_str(&format!(
                    "{} {} {} {}\n",
                    level,
                    c.center,
                    c.j_index.map_or("-".to_string(), |j| j.to_string()),
                    members.join(",")
                ));
            }
        }
        out
    }
}

/// Ball-count argmax: the vertex of the view with the largest number of
/// marked vertices within `radius`, ties to the smaller id.
pub fn pick_center<W: Weight>(
    view: &SubgraphView<W>,
    marks: &MarkState,
    radius: W,
) -> Result<(u32, u64), RamseyError> {
    let sources = marks.marked_in(&view.members);
    if sources.is_empty() {
        return Err(RamseyError::NoMarked);
    }
    let (center, count) = center_by_counts(view, &sources, radius);
    debug_assert!(count >= 1);
    Ok((center, count))
}

fn center_by_counts<W: Weight>(view: &SubgraphView<W>, sources: &[u32], radius: W) -> (u32, u64) {
    let mut counts = vec![0u64; view.graph.n()];
    for &s in sources {
        let field = view.shortest_paths_within(s, radius);
        for v in view.members.iter() {
            if field.dist(v) <= radius {
                counts[v as usize] += 1;
            }
        }
    }
    let mut best_v = u32::MAX;
    let mut best_c = 0u64;
    for v in view.members.iter() {
        if counts[v as usize] > best_c {
            best_c = counts[v as usize];
            best_v = v;
        }
    }
    if best_v == u32::MAX {
        // all counts zero: only possible for the as-if-marked remainder rule
        best_v = view.members.iter().next().unwrap();
    }
    (best_v, best_c)
}

/// Marked-ball counts around `center` at every grid radius `c * rho_i`,
/// `c = 0..=4k`, from one truncated run.
fn grid_counts<W: Weight>(
    view: &SubgraphView<W>,
    marks: &MarkState,
    center: u32,
    k: u32,
    rho_i: W,
) -> (DistanceField<W>, Vec<u64>) {
    let top = wi::<W>(4 * k as u64) * rho_i;
    let field = view.shortest_paths_within(center, top);
    let marked_dists: Vec<W> = view
        .members
        .iter()
        .filter(|&v| marks.is_marked(v))
        .map(|v| field.dist(v))
        .collect();
    let counts = (0..=4 * k)
        .map(|c| {
            let r = wi::<W>(c as u64) * rho_i;
            marked_dists.iter().filter(|&&d| d <= r).count() as u64
        })
        .collect();
    (field, counts)
}

/// Minimal growth index `j >= 0` such that the marked ball stops growing by
/// the `Z^(1/k)` factor:
/// `|B_M(v, 2^(i-1) + 2(j+1) rho)| <= |B_M(v, 2^(i-1) + 2j rho)| * Z^(1/k)`.
/// Guaranteed to be at most `k - 1`.
pub fn growth_index<W: Weight>(
    view: &SubgraphView<W>,
    marks: &MarkState,
    center: u32,
    k: u32,
    rho_i: W,
) -> u32 {
    let (_, counts) = grid_counts(view, marks, center, k, rho_i);
    growth_index_from_counts(&counts, k)
}

fn growth_index_from_counts(counts: &[u64], k: u32) -> u32 {
    let small = counts[(2 * k) as usize];
    let big = counts[(4 * k) as usize];
    for j in 0..k {
        let a_cur = counts[(2 * k + 2 * j) as usize];
        let a_next = counts[(2 * k + 2 * j + 2) as usize];
        if arith::pow_scaled_le(a_next, small, a_cur, big, k) {
            return j;
        }
    }
    unreachable!("growth index exceeds k-1; the telescoping argument is broken")
}

/// Carves level-`i` clusters out of one parent cluster. While marked vertices
/// remain, clusters are grown around marked-ball maximizers and the cut
/// annulus is unmarked; leftover unmarked vertices are then swept into
/// clusters with `j = 0` and no unmarking, so levels refine completely.
pub fn carve_level<W: Weight>(
    graph: &WeightedGraph<W>,
    parent_members: &[u32],
    parent_index: u32,
    level: u32,
    k: u32,
    rho_i: W,
    marks: &mut MarkState,
) -> Vec<Cluster> {
    let mut clusters = Vec::new();
    if level == 0 {
        // radius below 1 at the bottom scale: clusters are singletons
        for &v in parent_members {
            let responsibility = if marks.is_marked(v) { vec![v] } else { vec![] };
            clusters.push(Cluster {
                level: 0,
                center: v,
                j_index: Some(0),
                members: vec![v],
                interior: vec![v],
                responsibility,
                parent: Some(parent_index),
            });
        }
        return clusters;
    }

    let mut remaining = IdSet::from_sorted(graph.n(), parent_members);
    while marks.any_marked_in(&remaining) {
        let view = SubgraphView::of_members(graph, remaining.clone());
        let (center, _) = pick_center(&view, marks, wi::<W>(2 * k as u64) * rho_i)
            .expect("loop guard ensures a marked vertex");
        let (field, counts) = grid_counts(&view, marks, center, k, rho_i);
        let j = growth_index_from_counts(&counts, k);
        let rad = |c: u32| wi::<W>(c as u64) * rho_i;
        let member_r = rad(2 * k + 2 * j + 1);
        let interior_r = rad(2 * k + 2 * j);
        let responsibility_r = rad(2 * k + 2 * j + 2);
        let mut members = Vec::new();
        let mut interior = Vec::new();
        let mut responsibility = Vec::new();
        for v in view.members.iter() {
            let d = field.dist(v);
            if d <= member_r {
                members.push(v);
            }
            if d <= interior_r {
                interior.push(v);
            }
            if marks.is_marked(v) && d <= responsibility_r {
                responsibility.push(v);
                if d > interior_r {
                    marks.unmark(v);
                }
            }
        }
        for &v in &members {
            remaining.remove(v);
        }
        clusters.push(Cluster {
            level,
            center,
            j_index: Some(j),
            members,
            interior,
            responsibility,
            parent: Some(parent_index),
        });
    }

    // Remainder sweep: no marked vertices left; carve with j = 0, everyone
    // treated as a center candidate, nothing unmarked.
    while !remaining.is_empty() {
        let view = SubgraphView::of_members(graph, remaining.clone());
        let sources: Vec<u32> = view.members.to_vec();
        let (center, _) = center_by_counts(&view, &sources, wi::<W>(2 * k as u64) * rho_i);
        let member_r = wi::<W>(2 * k as u64 + 1) * rho_i;
        let interior_r = wi::<W>(2 * k as u64) * rho_i;
        let field = view.shortest_paths_within(center, member_r);
        let mut members = Vec::new();
        let mut interior = Vec::new();
        for v in view.members.iter() {
            let d = field.dist(v);
            if d <= member_r {
                members.push(v);
            }
            if d <= interior_r {
                interior.push(v);
            }
        }
        for &v in &members {
            remaining.remove(v);
        }
        clusters.push(Cluster {
            level,
            center,
            j_index: Some(0),
            members,
            interior,
            responsibility: Vec::new(),
            parent: Some(parent_index),
        });
    }
    clusters
}

/// Builds the full hierarchy for `(g, universe, k)` with a radius multiplier
/// `scale` in `[1, 2)` (`1` everywhere except the epsilon-copy oracles).
pub fn build_hierarchy<W: Weight>(
    g: &WeightedGraph<W>,
    universe: &[u32],
    k: u32,
    scale: W,
) -> Result<Hierarchy<W>, RamseyError> {
    assert!(k >= 1, "k must be at least 1");
    assert!(
        scale >= W::one() && scale < wf::<W>(2.0),
        "scale must lie in [1, 2)"
    );
    if universe.is_empty() {
        return Err(RamseyError::EmptyInput);
    }
    debug_assert!(universe.windows(2).all(|w| w[0] < w[1]));
    let n = g.n();
    let diameter = g.diameter();
    let mut phi: u32 = 0;
    while two_pow::<W>(phi as i32) < diameter + W::one() {
        phi += 1;
    }
    let rho: Vec<W> = (0..=phi)
        .map(|i| scale * two_pow::<W>(i as i32) / wi::<W>(4 * k as u64))
        .collect();
    let radius_bound: Vec<W> = rho.iter().map(|&r| wi::<W>(4 * k as u64) * r).collect();

    let mut marks = MarkState::from_universe(n, universe);
    let mut levels: Vec<Vec<Cluster>> = vec![Vec::new(); phi as usize + 1];

    let all: Vec<u32> = (0..n as u32).collect();
    let root_view = SubgraphView::full(g);
    let root_center = match pick_center(&root_view, &marks, wi::<W>(2 * k as u64) * rho[phi as usize]) {
        Ok((c, _)) => c,
        Err(_) => unreachable!("universe is nonempty"),
    };
    levels[phi as usize].push(Cluster {
        level: phi,
        center: root_center,
        j_index: None,
        members: all,
        interior: Vec::new(),
        responsibility: Vec::new(),
        parent: None,
    });

    for i in (0..phi).rev() {
        let mut new_level = Vec::new();
        let parent_level = std::mem::take(&mut levels[i as usize + 1]);
        for (pi, parent) in parent_level.iter().enumerate() {
            let mut carved = carve_level(
                g,
                &parent.members,
                pi as u32,
                i,
                k,
                rho[i as usize],
                &mut marks,
            );
            new_level.append(&mut carved);
        }
        levels[i as usize + 1] = parent_level;
        levels[i as usize] = new_level;
    }

    let padded = marks.marked_vertices();
    Ok(Hierarchy {
        k,
        scale,
        phi,
        rho,
        radius_bound,
        levels,
        padded,
        universe: universe.to_vec(),
        n,
    })
}

/// Structural checks shared by unit tests, the acceptance suite, and the
/// `verify` subcommand.
pub mod checks {
    use super::*;

    /// Properties (i)-(iii) plus the growth-index bound, exactly.
    pub fn partition_properties<W: Weight>(
        g: &WeightedGraph<W>,
        h: &Hierarchy<W>,
    ) -> Result<(), String> {
        for i in 0..=h.phi {
            let level = &h.levels[i as usize];
            // (i) disjoint within the level
            let mut seen = IdSet::new(h.n);
            for c in level {
                for &v in &c.members {
                    if !seen.insert(v) {
                        return Err(format!("level {i}: vertex {v} in two clusters"));
                    }
                }
            }
            if i < h.phi && seen.len() != h.n {
                return Err(format!("level {i}: partition does not cover all vertices"));
            }
            for (ci, c) in level.iter().enumerate() {
                // (ii) nested in exactly one parent
                if i < h.phi {
                    let parent = c
                        .parent
                        .and_then(|p| h.levels[i as usize + 1].get(p as usize))
                        .ok_or_else(|| format!("level {i} cluster {ci}: missing parent"))?;
                    let pset = IdSet::from_sorted(h.n, &parent.members);
                    if !c.members.iter().all(|&v| pset.contains(v)) {
                        return Err(format!("level {i} cluster {ci}: not inside its parent"));
                    }
                }
                // (iii) strong radius below scale * 2^i
                let view = SubgraphView::of_members(g, IdSet::from_sorted(h.n, &c.members));
                let r = view.radius(c.center);
                if !(r < h.radius_bound[i as usize]) {
                    return Err(format!(
                        "level {i} cluster {ci}: radius {r:?} not below {:?}",
                        h.radius_bound[i as usize]
                    ));
                }
                // growth index bound
                if let Some(j) = c.j_index {
                    if j > h.k - 1 {
                        return Err(format!("level {i} cluster {ci}: j = {j} exceeds k-1"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Property (iv): the padded count bound (exact integer form) and
    /// per-level ball containment for every padded vertex, by brute force.
    pub fn padded_property<W: Weight>(g: &WeightedGraph<W>, h: &Hierarchy<W>) -> Result<(), String> {
        if !arith::survival_ok(h.padded.len() as u64, h.universe.len() as u64, h.k) {
            return Err(format!(
                "padded set too small: {} of {} at k = {}",
                h.padded.len(),
                h.universe.len(),
                h.k
            ));
        }
        let view = SubgraphView::full(g);
        for &v in &h.padded {
            for i in 0..=h.phi {
                let rho = h.rho[i as usize];
                let ball = view.ball(v, rho);
                let ci = h
                    .cluster_of(i, v)
                    .ok_or_else(|| format!("padded {v} missing from level {i}"))?;
                let cluster = &h.levels[i as usize][ci];
                let cset = IdSet::from_sorted(h.n, &cluster.members);
                if !ball.iter().all(|&u| cset.contains(u)) {
                    return Err(format!("padded {v} not {i}-padded"));
                }
                // a padded vertex sits in the interior of its cluster
                if cluster.j_index.is_some()
                    && cluster.interior.binary_search(&v).is_err()
                {
                    return Err(format!("padded {v} outside interior at level {i}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, Family};
    use crate::graph::test_graphs::p3;

    fn all_of(g: &WeightedGraph<f64>) -> Vec<u32> {
        (0..g.n() as u32).collect()
    }

    #[test]
    fn p3_golden_hierarchy() {
        let g = p3();
        let h = build_hierarchy(&g, &all_of(&g), 2, 1.0).unwrap();
        assert_eq!(
            h.to_text(),
            "k 2\nscale 1\nphi 2\npadded 0,1,2\n\
             2 0 - 0,1,2\n\
             1 1 0 0,1,2\n\
             0 0 0 0\n0 1 0 1\n0 2 0 2\n"
        );
        checks::partition_properties(&g, &h).unwrap();
        checks::padded_property(&g, &h).unwrap();
    }

    #[test]
    fn singleton_graph() {
        let g = WeightedGraph::<f64>::new(1, vec![]).unwrap();
        let h = build_hierarchy(&g, &[0], 3, 1.0).unwrap();
        assert_eq!(h.phi, 0);
        assert_eq!(h.levels[0].len(), 1);
        assert_eq!(h.padded, vec![0]);
    }

    #[test]
    fn empty_universe_rejected() {
        let g = p3();
        assert_eq!(
            build_hierarchy(&g, &[], 2, 1.0).unwrap_err(),
            RamseyError::EmptyInput
        );
    }

    #[test]
    fn pick_center_prefers_larger_marked_ball() {
        let g = p3();
        let view = SubgraphView::full(&g);
        let marks = MarkState::from_universe(3, &[0, 1, 2]);
        // radius 1: vertex 1 sees all three
        let (c, count) = pick_center(&view, &marks, 1.0).unwrap();
        assert_eq!((c, count), (1, 3));
        // radius 2: tie at 3 everywhere, smallest id wins
        let (c, count) = pick_center(&view, &marks, 2.0).unwrap();
        assert_eq!((c, count), (0, 3));
    }

    #[test]
    fn pick_center_single_marked() {
        let g = p3();
        let view = SubgraphView::full(&g);
        let marks = MarkState::from_universe(3, &[2]);
        let (c, count) = pick_center(&view, &marks, 0.0).unwrap();
        assert_eq!((c, count), (2, 1));
        let no_marks = MarkState::from_universe(3, &[]);
        assert_eq!(
            pick_center(&view, &no_marks, 1.0).unwrap_err(),
            RamseyError::NoMarked
        );
    }

    #[test]
    fn growth_index_zero_when_counts_flat() {
        let g = p3();
        let view = SubgraphView::full(&g);
        // single marked vertex: Z = 1, so j = 0 immediately
        let marks = MarkState::from_universe(3, &[1]);
        assert_eq!(growth_index(&view, &marks, 1, 2, 0.25), 0);
        // all marked within the small ball: also flat
        let marks = MarkState::from_universe(3, &[0, 1, 2]);
        assert_eq!(growth_index(&view, &marks, 1, 2, 0.25), 0);
    }

    /// Exhaustive-scan oracle for the growth index.
    fn growth_index_by_scan(counts: &[u64], k: u32) -> Option<u32> {
        let small = counts[(2 * k) as usize];
        let big = counts[(4 * k) as usize];
        (0..k).find(|&j| {
            arith::pow_scaled_le(
                counts[(2 * k + 2 * j + 2) as usize],
                small,
                counts[(2 * k + 2 * j) as usize],
                big,
                k,
            )
        })
    }

    #[test]
    fn growth_index_matches_exhaustive_scan_on_random_graphs() {
        for seed in 0..15 {
            let g = generate(Family::Random, 40, seed).unwrap();
            let view = SubgraphView::full(&g);
            let universe = all_of(&g);
            let marks = MarkState::from_universe(g.n(), &universe);
            for k in [2u32, 3, 4] {
                for i in [2i32, 4, 6] {
                    let rho = 2f64.powi(i) / (4.0 * k as f64);
                    let (center, _) = pick_center(&view, &marks, 2.0 * k as f64 * rho).unwrap();
                    let (_, counts) = grid_counts(&view, &marks, center, k, rho);
                    let j = growth_index_from_counts(&counts, k);
                    assert_eq!(Some(j), growth_index_by_scan(&counts, k));
                    assert!(j <= k - 1);
                }
            }
        }
    }

    #[test]
    fn carve_retains_single_marked_vertex() {
        let g = generate(Family::Random, 20, 5).unwrap();
        let mut marks = MarkState::from_universe(g.n(), &[7]);
        let members = all_of(&g);
        let clusters = carve_level(&g, &members, 0, 3, 2, 1.0, &mut marks);
        assert!(marks.is_marked(7), "the only marked vertex must survive");
        let total: usize = clusters.iter().map(|c| c.members.len()).sum();
        assert_eq!(total, g.n());
    }

    #[test]
    fn carve_whole_parent_in_one_ball_no_unmarking() {
        // all of P3 lies within radius 1 of vertex 1 = 2k * rho for rho = 0.25, k = 2
        let g = p3();
        let mut marks = MarkState::from_universe(3, &[0, 1, 2]);
        let clusters = carve_level(&g, &[0, 1, 2], 0, 1, 2, 0.25, &mut marks);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members, vec![0, 1, 2]);
        assert_eq!(marks.count(), 3);
    }

    #[test]
    fn properties_hold_on_random_graphs() {
        for seed in 0..8 {
            let g = generate(Family::Random, 36, seed).unwrap();
            for k in [1u32, 2, 3] {
                let h = build_hierarchy(&g, &all_of(&g), k, 1.0).unwrap();
                checks::partition_properties(&g, &h).unwrap();
                checks::padded_property(&g, &h).unwrap();
            }
        }
    }

    #[test]
    fn properties_hold_with_scale() {
        for seed in 0..4 {
            let g = generate(Family::Random, 24, seed).unwrap();
            let h = build_hierarchy(&g, &all_of(&g), 2, 1.5).unwrap();
            checks::partition_properties(&g, &h).unwrap();
            checks::padded_property(&g, &h).unwrap();
        }
    }

    #[test]
    fn padded_majority_when_k_large() {
        // k >= log2 n implies n^(1/k) <= 2, so at least half of U is padded
        for seed in 0..5 {
            let g = generate(Family::Random, 16, seed).unwrap();
            let h = build_hierarchy(&g, &all_of(&g), 4, 1.0).unwrap();
            assert!(h.padded.len() * 2 >= g.n(), "seed {seed}: {}", h.padded.len());
        }
    }

    #[test]
    fn subset_universe_is_respected() {
        let g = generate(Family::Random, 30, 2).unwrap();
        let universe: Vec<u32> = (0..30u32).filter(|v| v % 3 == 0).collect();
        let h = build_hierarchy(&g, &universe, 2, 1.0).unwrap();
        let uset = IdSet::from_sorted(g.n(), &universe);
        assert!(h.padded.iter().all(|&v| uset.contains(v)));
        checks::partition_properties(&g, &h).unwrap();
        checks::padded_property(&g, &h).unwrap();
    }

    #[test]
    fn rebuild_is_identical() {
        let g = generate(Family::Random, 48, 11).unwrap();
        let a = build_hierarchy(&g, &all_of(&g), 3, 1.0).unwrap();
        let b = build_hierarchy(&g, &all_of(&g), 3, 1.0).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }
}
