//! Petal decomposition: recursive low-diameter partitioning of a graph into
//! cone-metric petals plus a central part, producing one spanning tree whose
//! radius stays within a constant factor of the graph radius, together with
//! the set of marked vertices that survive every cut.
//!
//! A petal `W_r(Y, x0, t)` is the union of cone-metric balls centered on the
//! `x0 -> t` shortest path. Membership admits a single-potential form:
//! `u` lies in `W_r` iff `f(u) <= r` where
//! `f(u) = min_p [ d(x0,p) + d(x0,t) + 2 d(p,u) ] - 2 d(x0,u)`
//! over path vertices `p`. The minimizing `p` automatically satisfies the
//! `d(p,t) <= r` side condition, so one multi-source run with doubled edge
//! weights evaluates every radius at once. Radii are chosen on the integer
//! grid `lo + c * (hi-lo)/(4Lk)`, and all charging inequalities are checked
//! in exact integer arithmetic.

use thiserror::Error;

use crate::arith;
use crate::graph::{DistanceField, SubgraphView, WeightedGraph};
use crate::ramsey::MarkState;
use crate::set::IdSet;
use crate::weight::{wf, wi, Weight};

#[derive(Debug, Error, PartialEq)]
pub enum PetalError {
    #[error("no radius candidate satisfies the charging inequality (m = {m})")]
    InfeasibleSelection { m: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Forward,
    Backward,
    TrivialForward,
    TrivialBackward,
}

/// Record of one radius selection.
#[derive(Debug, Clone)]
pub struct PetalCut<W> {
    pub lo: W,
    pub hi: W,
    /// `hi - lo`; `delta/8` for standard petals, `delta/4` for the first.
    pub range: W,
    /// `L = max(1, ceil(1 + log2 log2 m))` for `m` marked vertices in view.
    pub big_l: u32,
    /// Grid unit `range / (4 L k)`.
    pub unit: W,
    pub side: CutSide,
    /// Chosen interval `[a, b]` in grid units, when a charging interval was
    /// selected (cases 2 and 4).
    pub interval_grid: Option<(u32, u32)>,
    /// Chosen radius in grid units and as a weight.
    pub r_grid: u32,
    pub r: W,
    /// The petal `W_r`, ascending vertex ids.
    pub petal: Vec<u32>,
    /// Marked vertices of the cut annulus, unmarked by this petal.
    pub unmarked: Vec<u32>,
    /// The `x0 -> t` shortest path the petal was grown along.
    pub path: Vec<u32>,
    /// Marked count of the view at entry.
    pub m: u64,
}

/// Cone metric `|(d(x,u) - d(y,u)) - (d(x,v) - d(y,v))|` inside a view.
pub fn cone_dist<W: Weight>(view: &SubgraphView<W>, x: u32, y: u32, u: u32, v: u32) -> W {
    let dx = view.shortest_paths(x);
    let dy = view.shortest_paths(y);
    ((dx.dist(u) - dy.dist(u)) - (dx.dist(v) - dy.dist(v))).abs()
}

/// Petal membership potentials: `f[u] <= r` iff `u` is in `W_r(view,x0,t)`.
/// Also returns the deterministic `x0 -> t` shortest path and the distance
/// field from `x0`.
pub fn petal_potentials<W: Weight>(
    view: &SubgraphView<W>,
    x0: u32,
    t: u32,
) -> (Vec<W>, Vec<u32>, DistanceField<W>) {
    let dx0 = view.shortest_paths(x0);
    assert!(dx0.reached(t), "target unreachable inside the view");
    let path = dx0.path_to(t);
    let dxt = dx0.dist(t);
    let sources: Vec<(u32, W)> = path.iter().map(|&p| (p, dx0.dist(p) + dxt)).collect();
    let g_field = view.shortest_paths_multi(&sources, true);
    let mut f = vec![W::infinity(); view.graph.n()];
    for u in view.members.iter() {
        if g_field.reached(u) {
            f[u as usize] = g_field.dist(u) - dx0.dist(u) - dx0.dist(u);
        }
    }
    (f, path, dx0)
}

/// The petal `W_r(view, x0, t)` by direct evaluation.
pub fn petal_set<W: Weight>(view: &SubgraphView<W>, x0: u32, t: u32, r: W) -> Vec<u32> {
    let (f, _, _) = petal_potentials(view, x0, t);
    view.members
        .iter()
        .filter(|&u| f[u as usize] <= r)
        .collect()
}

/// Radius selection per the region-growing rules. Mutates `marks`: the
/// marked vertices of the annulus `(r - R/(4Lk), r + R/(4Lk)]` are unmarked.
pub fn create_petal<W: Weight>(
    view: &SubgraphView<W>,
    range: (W, W),
    x0: u32,
    t: u32,
    k: u32,
    marks: &mut MarkState,
) -> Result<PetalCut<W>, PetalError> {
    let (lo, hi) = range;
    assert!(hi > lo, "empty radius range");
    let (f, path, _) = petal_potentials(view, x0, t);

    let mut marked_f: Vec<W> = view
        .members
        .iter()
        .filter(|&v| marks.is_marked(v))
        .map(|v| f[v as usize])
        .collect();
    marked_f.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = marked_f.len() as u64;

    let big_l = arith::petal_level_count(m);
    let r_span = hi - lo;
    let unit = r_span / wi::<W>(4 * big_l as u64 * k as u64);
    let top = 4 * big_l * k; // grid index of hi
    let radius = |c: u32| lo + wi::<W>(c as u64) * unit;
    // marked count within W_{radius(c)}
    let w = |c: u32| -> u64 {
        let r = radius(c);
        marked_f.partition_point(|&x| x <= r) as u64
    };
    let q = |c: u32| m - w(c);

    let mid = 2 * big_l * k;
    let mut interval_grid = None;
    let side;
    let r_grid;
    if 2 * w(mid) <= m {
        if w(2 * k) == 0 {
            side = CutSide::TrivialForward;
            r_grid = k; // lo + R/(4L)
        } else if big_l == 1 {
            side = CutSide::TrivialForward;
            r_grid = degenerate_radius(&w, k, m, true)?;
        } else {
            let (a_c, b_c, r_c) = forward_selection(&w, big_l, k, m)?;
            side = CutSide::Forward;
            interval_grid = Some((a_c, b_c));
            r_grid = r_c;
        }
    } else if q(top - 2 * k) == 0 {
        side = CutSide::TrivialBackward;
        r_grid = top - k; // hi - R/(4L)
    } else if big_l == 1 {
        side = CutSide::TrivialBackward;
        r_grid = degenerate_radius(&w, k, m, false)?;
    } else {
        let (b_c, a_c, r_c) = backward_selection(&q, big_l, k, m)?;
        side = CutSide::Backward;
        interval_grid = Some((b_c, a_c));
        r_grid = r_c;
    }

    let r = radius(r_grid);
    let inner = radius(r_grid - 1);
    let outer = radius(r_grid + 1);
    let mut unmarked = Vec::new();
    let mut petal = Vec::new();
    for v in view.members.iter() {
        let fv = f[v as usize];
        if fv <= r {
            petal.push(v);
        }
        if marks.is_marked(v) && fv > inner && fv <= outer {
            marks.unmark(v);
            unmarked.push(v);
        }
    }
    Ok(PetalCut {
        lo,
        hi,
        range: r_span,
        big_l,
        unit,
        side,
        interval_grid,
        r_grid,
        r,
        petal,
        unmarked,
        path,
        m,
    })
}

/// Case 2: pick `[a,b]` of width `R/(2L)` inside `[lo,mid]` with
/// `m * w_a >= w_b^2`, then the first grid radius inside it whose annulus
/// charge telescopes. Returns `(a, b, r)` in grid units.
fn forward_selection(
    w: &dyn Fn(u32) -> u64,
    big_l: u32,
    k: u32,
    m: u64,
) -> Result<(u32, u32, u32), PetalError> {
    let mid = 2 * big_l * k;
    for i in 0..=(big_l - 2) {
        let b_c = mid - 2 * k * i;
        let a_c = b_c - 2 * k;
        let (wa, wb) = (w(a_c), w(b_c));
        if m * wa >= wb * wb {
            for j in 0..k {
                let e_hi = b_c - 2 * j;
                let e_lo = e_hi - 2;
                // w_{r + (b-a)/(2k)} <= w_{r - (b-a)/(2k)} * (w_b/w_a)^(1/k)
                if arith::pow_scaled_le(w(e_hi), wa, w(e_lo), wb, k) {
                    return Ok((a_c, b_c, e_hi - 1));
                }
            }
            unreachable!("a radius inside a valid interval always exists");
        }
    }
    Err(PetalError::InfeasibleSelection { m })
}

/// Case 4, the mirror image: `[b,a]` inside `[mid,hi]` with
/// `m * q_a >= q_b^2`, charging the remaining graph instead of the petal.
fn backward_selection(
    q: &dyn Fn(u32) -> u64,
    big_l: u32,
    k: u32,
    m: u64,
) -> Result<(u32, u32, u32), PetalError> {
    let mid = 2 * big_l * k;
    for i in 0..=(big_l - 2) {
        let b_c = mid + 2 * k * i;
        let a_c = b_c + 2 * k;
        let (qa, qb) = (q(a_c), q(b_c));
        if m * qa >= qb * qb {
            for j in 0..k {
                let e_lo = b_c + 2 * j;
                let e_hi = e_lo + 2;
                // q_{r - (a-b)/(2k)} <= q_{r + (a-b)/(2k)} * (q_b/q_a)^(1/k)
                if arith::pow_scaled_le(q(e_lo), qa, q(e_hi), qb, k) {
                    return Ok((b_c, a_c, e_lo + 1));
                }
            }
            unreachable!("a radius inside a valid interval always exists");
        }
    }
    Err(PetalError::InfeasibleSelection { m })
}

/// With at most two marked vertices the interval machinery degenerates
/// (`L = 1` leaves no charging interval), but each marked vertex blocks
/// exactly one odd grid point, so a radius whose annulus is empty exists for
/// `k >= 2`; for `k = 1` keeping one marked vertex on the padded side meets
/// the `m^(1-1/k) = 1` bound.
fn degenerate_radius(
    w: &dyn Fn(u32) -> u64,
    k: u32,
    m: u64,
    forward: bool,
) -> Result<u32, PetalError> {
    if m > 2 {
        return Err(PetalError::InfeasibleSelection { m });
    }
    let odd_points: Vec<u32> = (0..2 * k).map(|i| 2 * i + 1).collect();
    let scan: Box<dyn Iterator<Item = u32>> = if forward {
        Box::new(odd_points.iter().copied())
    } else {
        Box::new(odd_points.iter().rev().copied())
    };
    for c in scan {
        if w(c + 1) == w(c - 1) {
            return Ok(c);
        }
    }
    // k = 1 fallback: keep a marked vertex strictly on one side
    if forward {
        if let Some(c) = odd_points.iter().copied().find(|&c| w(c - 1) >= 1) {
            return Ok(c);
        }
    } else if let Some(c) = odd_points.iter().copied().rev().find(|&c| w(c + 1) < m) {
        return Ok(c);
    }
    Err(PetalError::InfeasibleSelection { m })
}

/// One part of a decomposition: members, its center, target, and radius
/// measured in the working weights at return time.
#[derive(Debug, Clone)]
pub struct Part<W> {
    pub members: Vec<u32>,
    pub center: u32,
    pub target: u32,
    pub delta: W,
}

/// Output of one `petal_decomposition` call.
pub struct Decomposition<'g, W> {
    /// `parts[0]` is the central cluster; petals follow in carve order.
    pub parts: Vec<Part<W>>,
    /// Views for each part, inheriting all halvings (aligned with `parts`).
    pub views: Vec<SubgraphView<'g, W>>,
    /// Connecting edges `(y_j, x_j, edge_id)` for petals `j = 1..=s`.
    pub edges: Vec<(u32, u32, u32)>,
    pub cuts: Vec<PetalCut<W>>,
}

/// Shared state of one hierarchical run.
pub struct RunContext {
    pub k: u32,
    /// Every edge halved during the run, in halving order; an edge appearing
    /// twice would be a bug and is asserted against.
    pub halved_log: Vec<u32>,
    halved_seen: IdSet,
    /// JSON-lines trace of every petal cut, when enabled.
    pub trace: Option<Vec<String>>,
    pub depth: u32,
}

impl RunContext {
    pub fn new(k: u32, edge_count: usize, with_trace: bool) -> Self {
        RunContext {
            k,
            halved_log: Vec::new(),
            halved_seen: IdSet::new(edge_count),
            trace: with_trace.then(Vec::new),
            depth: 0,
        }
    }

    pub fn halved_set(&self) -> &IdSet {
        &self.halved_seen
    }

    fn log_halved(&mut self, edge: u32) {
        assert!(
            self.halved_seen.insert(edge),
            "edge {edge} halved twice in one run"
        );
        self.halved_log.push(edge);
    }

    fn record<W: Weight>(&mut self, center: u32, target: u32, cut: &PetalCut<W>) {
        if let Some(lines) = &mut self.trace {
            let side = match cut.side {
                CutSide::Forward => "forward",
                CutSide::Backward => "backward",
                CutSide::TrivialForward => "trivial-forward",
                CutSide::TrivialBackward => "trivial-backward",
            };
            lines.push(
                serde_json::json!({
                    "depth": self.depth,
                    "center": center,
                    "target": target,
                    "lo": cut.lo.to_f64(),
                    "hi": cut.hi.to_f64(),
                    "branch": side,
                    "r": cut.r.to_f64(),
                    "petal": cut.petal.len(),
                    "unmarked": cut.unmarked.len(),
                })
                .to_string(),
            );
        }
    }
}

/// Splits `view` into a central part and petals. Distances for the loop
/// guard and target selection are fixed at entry; each petal is carved from
/// the remaining graph, its crossing edge is read off the `x0 -> t_j` path,
/// and the path suffix inside the petal has its working weights halved.
pub fn petal_decomposition<'g, W: Weight>(
    view: SubgraphView<'g, W>,
    x0: u32,
    t: u32,
    delta: W,
    marks: &mut MarkState,
    ctx: &mut RunContext,
) -> Result<Decomposition<'g, W>, PetalError> {
    let k = ctx.k;
    let entry = view.shortest_paths(x0);
    let guard = wf::<W>(0.75) * delta;
    let half = wf::<W>(0.5) * delta;
    let quarter = wf::<W>(0.25) * delta;

    let mut work = view;
    let mut petals: Vec<(Vec<u32>, u32, u32)> = Vec::new(); // members, x_j, t_j
    let mut petal_views: Vec<SubgraphView<'g, W>> = Vec::new();
    let mut edges = Vec::new();
    let mut cuts = Vec::new();
    let t0;

    let dxt = entry.dist(t);
    if dxt >= half {
        // first petal carved around the input target with the wide range
        let cut = create_petal(&work, (dxt - half, dxt - quarter), x0, t, k, marks)?;
        ctx.record(x0, t, &cut);
        let (x1, y1, eid) = crossing_edge(&work, &cut);
        let members = cut.petal.clone();
        let pset = IdSet::from_sorted(work.graph.n(), &members);
        for &v in &members {
            work.members.remove(v);
        }
        petal_views.push(work.restrict_to(&pset));
        petals.push((members, x1, t));
        edges.push((y1, x1, eid));
        cuts.push(cut);
        t0 = y1;
    } else {
        t0 = t;
    }

    loop {
        // targets live beyond 3/4 delta in the entry metric
        let mut target = u32::MAX;
        let mut best = guard;
        for v in work.members.iter() {
            let d = entry.dist(v);
            if d > best {
                best = d;
                target = v;
            }
        }
        if target == u32::MAX {
            break;
        }
        let range_hi = delta / wi::<W>(8);
        let cut = create_petal(&work, (W::zero(), range_hi), x0, target, k, marks)?;
        ctx.record(x0, target, &cut);
        let (xj, yj, eid) = crossing_edge(&work, &cut);
        // halve the spine: the path suffix from x_j to t_j inside the petal
        let pos = cut.path.iter().position(|&p| p == xj).unwrap();
        for pair in cut.path[pos..].windows(2) {
            let e = work
                .graph
                .edge_between(pair[0], pair[1])
                .expect("consecutive path vertices are adjacent");
            work.halve_edge(e);
            ctx.log_halved(e);
        }
        let members = cut.petal.clone();
        let pset = IdSet::from_sorted(work.graph.n(), &members);
        for &v in &members {
            work.members.remove(v);
        }
        petal_views.push(work.restrict_to(&pset));
        petals.push((members, xj, target));
        edges.push((yj, xj, eid));
        cuts.push(cut);
    }

    assert!(work.members.contains(x0), "center lost from the central part");
    assert!(work.members.contains(t0), "central target lost");

    // assemble parts: X0 first, then petals in carve order; radii measured
    // in the working weights now in force
    let mut parts = Vec::with_capacity(petals.len() + 1);
    let mut views = Vec::with_capacity(petals.len() + 1);
    let central_members = work.members.to_vec();
    let central_delta = work.radius(x0);
    parts.push(Part {
        members: central_members,
        center: x0,
        target: t0,
        delta: central_delta,
    });
    for ((members, xj, tj), mut pview) in petals.into_iter().zip(petal_views) {
        // petal views split off before later halvings; refresh them
        pview.adopt_halved(&work);
        let delta_j = pview.radius(xj);
        parts.push(Part {
            members,
            center: xj,
            target: tj,
            delta: delta_j,
        });
        views.push(pview);
    }
    views.insert(0, work);

    // radius control: every part stays within 3/4 of the input radius
    let slack = W::one() + wf::<W>(1e-9);
    for (idx, part) in parts.iter().enumerate() {
        assert!(
            part.delta <= guard * slack,
            "part {idx} radius {:?} exceeds (3/4) * {:?}",
            part.delta,
            delta
        );
    }

    Ok(Decomposition {
        parts,
        views,
        edges,
        cuts,
    })
}

/// Finds the unique edge of the petal-growing path crossing from the
/// remaining graph into the petal; asserts the path splits cleanly.
fn crossing_edge<W: Weight>(view: &SubgraphView<W>, cut: &PetalCut<W>) -> (u32, u32, u32) {
    let pset = IdSet::from_sorted(view.graph.n(), &cut.petal);
    let pos = cut
        .path
        .iter()
        .position(|&p| pset.contains(p))
        .expect("petal contains its target");
    assert!(pos >= 1, "petal swallowed the center");
    assert!(
        cut.path[pos..].iter().all(|&p| pset.contains(p)),
        "path re-enters the petal"
    );
    let (y, x) = (cut.path[pos - 1], cut.path[pos]);
    let eid = view
        .graph
        .edge_between(y, x)
        .expect("path vertices are adjacent");
    (x, y, eid)
}

/// Spanning tree assembled from graph edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub root: u32,
    pub n: usize,
    pub edge_ids: Vec<u32>,
    pub parent: Vec<u32>,      // parent vertex, u32::MAX at root
    pub parent_edge: Vec<u32>, // edge id towards parent
    pub children: Vec<Vec<u32>>,
}

impl SpanningTree {
    pub fn from_edge_ids<W: Weight>(g: &WeightedGraph<W>, root: u32, edge_ids: Vec<u32>) -> Self {
        let n = g.n();
        assert_eq!(edge_ids.len(), n - 1, "not a spanning edge set");
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for &eid in &edge_ids {
            let e = g.edge(eid);
            adj[e.u as usize].push((e.v, eid));
            adj[e.v as usize].push((e.u, eid));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let mut parent = vec![u32::MAX; n];
        let mut parent_edge = vec![u32::MAX; n];
        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut seen = IdSet::new(n);
        seen.insert(root);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(nb, eid) in &adj[v as usize] {
                if seen.insert(nb) {
                    parent[nb as usize] = v;
                    parent_edge[nb as usize] = eid;
                    children[v as usize].push(nb);
                    queue.push_back(nb);
                }
            }
        }
        assert_eq!(seen.len(), n, "edge set does not span the graph");
        SpanningTree {
            root,
            n,
            edge_ids,
            parent,
            parent_edge,
            children,
        }
    }

    /// Distances from `source` inside the tree; `halved` optionally applies
    /// working weights.
    pub fn distances_from<W: Weight>(
        &self,
        g: &WeightedGraph<W>,
        source: u32,
        halved: Option<&IdSet>,
    ) -> Vec<W> {
        let weight = |eid: u32| -> W {
            let w = g.edge(eid).w;
            match halved {
                Some(set) if set.contains(eid) => w * wf::<W>(0.5),
                _ => w,
            }
        };
        let mut dist = vec![W::infinity(); self.n];
        dist[source as usize] = W::zero();
        let mut stack = vec![source];
        while let Some(v) = stack.pop() {
            let around: Vec<(u32, u32)> = self.children[v as usize]
                .iter()
                .map(|&c| (c, self.parent_edge[c as usize]))
                .chain(
                    (self.parent[v as usize] != u32::MAX)
                        .then(|| (self.parent[v as usize], self.parent_edge[v as usize])),
                )
                .collect();
            for (nb, eid) in around {
                if dist[nb as usize].is_infinite() {
                    dist[nb as usize] = dist[v as usize] + weight(eid);
                    stack.push(nb);
                }
            }
        }
        dist
    }

    /// Vertex sequence of the unique tree path between two vertices.
    pub fn path_between(&self, s: u32, t: u32) -> Vec<u32> {
        let depth = |mut v: u32| {
            let mut d = 0;
            while self.parent[v as usize] != u32::MAX {
                v = self.parent[v as usize];
                d += 1;
            }
            d
        };
        let (mut a, mut b) = (s, t);
        let (mut da, mut db) = (depth(a), depth(b));
        let mut up_a = vec![a];
        let mut up_b = vec![b];
        while da > db {
            a = self.parent[a as usize];
            up_a.push(a);
            da -= 1;
        }
        while db > da {
            b = self.parent[b as usize];
            up_b.push(b);
            db -= 1;
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
            up_a.push(a);
            up_b.push(b);
        }
        // drop the duplicated meeting vertex from one side
        up_a.pop();
        up_b.reverse();
        up_a.extend(up_b);
        up_a
    }
}

/// Result of one full hierarchical run.
pub struct TreeBuild {
    pub tree: SpanningTree,
    /// The initially marked vertices still marked at the end, ascending.
    pub survivors: Vec<u32>,
    pub halved_log: Vec<u32>,
    pub halved: IdSet,
    pub trace: Option<Vec<String>>,
}

/// Recursion: decompose, recurse into every part, connect the subtrees with
/// the crossing edges.
pub fn hierarchical_petal_decomposition<W: Weight>(
    view: SubgraphView<'_, W>,
    x0: u32,
    t: u32,
    delta: W,
    marks: &mut MarkState,
    ctx: &mut RunContext,
) -> Result<Vec<u32>, PetalError> {
    if view.len() == 1 {
        return Ok(Vec::new());
    }
    ctx.depth += 1;
    let decomposition = petal_decomposition(view, x0, t, delta, marks, ctx)?;
    let mut edges: Vec<u32> = decomposition.edges.iter().map(|&(_, _, e)| e).collect();
    for (part, pview) in decomposition
        .parts
        .into_iter()
        .zip(decomposition.views)
    {
        let sub =
            hierarchical_petal_decomposition(pview, part.center, part.target, part.delta, marks, ctx)?;
        edges.extend(sub);
    }
    ctx.depth -= 1;
    Ok(edges)
}

/// Full run on a graph: marks in, spanning tree plus survivors out. The tree
/// radius from the root is checked against `4 * delta` in working weights
/// and `8 * delta` in the originals.
pub fn build_spanning_tree<W: Weight>(
    g: &WeightedGraph<W>,
    marked: &[u32],
    k: u32,
    root: u32,
    with_trace: bool,
) -> Result<TreeBuild, PetalError> {
    let view = SubgraphView::full(g);
    let delta = view.radius(root);
    let mut marks = MarkState::from_universe(g.n(), marked);
    let mut ctx = RunContext::new(k, g.edges().len(), with_trace);
    let edge_ids = hierarchical_petal_decomposition(view, root, root, delta, &mut marks, &mut ctx)?;
    let tree = SpanningTree::from_edge_ids(g, root, edge_ids);
    let halved = ctx.halved_seen.clone();

    let slack = W::one() + wf::<W>(1e-9);
    let working = tree.distances_from(g, root, Some(&halved));
    let original = tree.distances_from(g, root, None);
    let four = wi::<W>(4) * delta * slack;
    let eight = wi::<W>(8) * delta * slack;
    for v in 0..g.n() {
        assert!(working[v] <= four, "tree radius beyond 4*delta at {v}");
        assert!(original[v] <= eight, "tree radius beyond 8*delta at {v}");
    }

    let survivors = marks.marked_vertices();
    Ok(TreeBuild {
        tree,
        survivors,
        halved_log: ctx.halved_log,
        halved,
        trace: ctx.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, Family};
    use crate::graph::test_graphs::p3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_of<W: Weight>(g: &WeightedGraph<W>) -> Vec<u32> {
        (0..g.n() as u32).collect()
    }

    #[test]
    fn cone_dist_examples() {
        let g = p3();
        let view = SubgraphView::full(&g);
        assert_eq!(cone_dist(&view, 0, 0, 1, 2), 0.0);
        assert_eq!(cone_dist(&view, 0, 2, 1, 1), 0.0);
        assert_eq!(cone_dist(&view, 0, 2, 0, 2), 4.0);
    }

    #[test]
    fn petal_set_examples() {
        let g = p3();
        let view = SubgraphView::full(&g);
        assert_eq!(petal_set(&view, 0, 2, 0.0), vec![2]);
        // W_0 always contains the target
        assert!(petal_set(&view, 0, 1, 0.0).contains(&1));
    }

    #[test]
    fn petal_monotone_in_radius() {
        for seed in 0..10 {
            let g: WeightedGraph<f64> = generate(Family::Random, 40, seed).unwrap();
            let view = SubgraphView::full(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10 {
                let r1 = rng.gen_range(0.0..200.0);
                let r2 = r1 + rng.gen_range(0.0..100.0);
                let small = petal_set(&view, 0, 39, r1);
                let big = petal_set(&view, 0, 39, r2);
                let bigset = IdSet::from_sorted(g.n(), &big);
                assert!(small.iter().all(|&v| bigset.contains(v)));
            }
        }
    }

    /// The textbook petal definition: union over path vertices `p` with
    /// `d(p,t) <= r` of cone-metric balls of radius `(r - d(p,t))/2`.
    fn petal_set_naive(view: &SubgraphView<f64>, x0: u32, t: u32, r: f64) -> Vec<u32> {
        let dx0 = view.shortest_paths(x0);
        let path = dx0.path_to(t);
        let dxt = dx0.dist(t);
        let mut inside = IdSet::new(view.graph.n());
        for &p in &path {
            let dpt = dxt - dx0.dist(p);
            if dpt > r {
                continue;
            }
            let dp = view.shortest_paths(p);
            for u in view.members.iter() {
                // rho(p, u) in the cone metric of (x0, p)
                let rho = dx0.dist(p) + dp.dist(u) - dx0.dist(u);
                if rho <= (r - dpt) / 2.0 {
                    inside.insert(u);
                }
            }
        }
        inside.to_vec()
    }

    #[test]
    fn petal_matches_naive_definition() {
        for seed in 0..8 {
            let g: WeightedGraph<f64> = generate(Family::Random, 28, seed).unwrap();
            let view = SubgraphView::full(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            for _ in 0..6 {
                let t = rng.gen_range(1..g.n() as u32);
                let r = rng.gen_range(0.0..150.0);
                assert_eq!(
                    petal_set(&view, 0, t, r),
                    petal_set_naive(&view, 0, t, r),
                    "seed {seed} t {t} r {r}"
                );
            }
        }
    }

    #[test]
    fn ball_growth_fact_spot_checks() {
        // for y in W_r and l >= 0: B(y, l, Y) is inside W_{r + 4l}
        for seed in 0..5 {
            let g: WeightedGraph<f64> = generate(Family::Random, 32, seed).unwrap();
            let view = SubgraphView::full(&g);
            let t = 31;
            let (f, _, _) = petal_potentials(&view, 0, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let y = rng.gen_range(0..g.n() as u32);
                let r = f[y as usize]; // y is in W_r
                let l = rng.gen_range(0.0..50.0);
                for u in view.ball(y, l) {
                    assert!(
                        f[u as usize] <= r + 4.0 * l + 1e-9,
                        "ball growth violated at y={y} u={u}"
                    );
                }
            }
        }
    }

    #[test]
    fn create_petal_no_marked_is_trivial() {
        let g: WeightedGraph<f64> = generate(Family::Random, 20, 3).unwrap();
        let view = SubgraphView::full(&g);
        let mut marks = MarkState::from_universe(g.n(), &[]);
        let cut = create_petal(&view, (0.0, 8.0), 0, 19, 2, &mut marks).unwrap();
        assert_eq!(cut.side, CutSide::TrivialForward);
        assert_eq!(cut.big_l, 1);
        assert_eq!(cut.r_grid, 2); // lo + R/(4L) with k = 2
        assert!(cut.unmarked.is_empty());
    }

    #[test]
    fn create_petal_flat_counts_take_first_candidate() {
        // one mark at the target (f = 0), two far beyond the range: w is
        // flat at 1 across [lo, mid], so the first interval and the first
        // radius candidate are both accepted by equality
        let g: WeightedGraph<f64> = generate(Family::Path, 10, 0).unwrap();
        let mut marks = MarkState::from_universe(10, &[0, 1, 9]);
        let view = SubgraphView::full(&g);
        // petal toward 9: f(9) = 0; f(0) = 9, f(1) = 8 sit far outside
        let cut = create_petal(&view, (0.0, 2.0), 0, 9, 2, &mut marks).unwrap();
        assert_eq!(cut.side, CutSide::Forward);
        let (a, b) = cut.interval_grid.unwrap();
        assert_eq!(b, 2 * cut.big_l * 2); // first interval ends at mid
        assert_eq!(b - a, 4);
        assert_eq!(cut.r_grid, b - 1); // first radius candidate
        assert!(cut.unmarked.is_empty());
    }

    /// Re-verify a chosen cut against an independent scan of the discrete
    /// candidate grid.
    fn verify_cut_choice(cut: &PetalCut<f64>, marked_f_sorted: &[f64], k: u32) {
        let m = cut.m;
        let radius = |c: u32| cut.lo + c as f64 * cut.unit;
        let w = |c: u32| marked_f_sorted.partition_point(|&x| x <= radius(c)) as u64;
        let q = |c: u32| m - w(c);
        let big_l = cut.big_l;
        match cut.side {
            CutSide::TrivialForward => {
                if m > 2 {
                    assert_eq!(w(2 * k), 0);
                    assert_eq!(cut.r_grid, k);
                }
            }
            CutSide::TrivialBackward => {
                if m > 2 {
                    assert_eq!(q(4 * big_l * k - 2 * k), 0);
                    assert_eq!(cut.r_grid, 4 * big_l * k - k);
                }
            }
            CutSide::Forward => {
                let (a, b) = cut.interval_grid.unwrap();
                assert_eq!(b - a, 2 * k);
                assert!(m * w(a) >= w(b) * w(b), "interval charge fails");
                assert!(
                    arith::pow_scaled_le(w(cut.r_grid + 1), w(a), w(cut.r_grid - 1), w(b), k),
                    "radius charge fails"
                );
                assert!(a < cut.r_grid && cut.r_grid < b);
            }
            CutSide::Backward => {
                let (b, a) = cut.interval_grid.unwrap();
                assert_eq!(a - b, 2 * k);
                assert!(m * q(a) >= q(b) * q(b), "interval charge fails");
                assert!(
                    arith::pow_scaled_le(q(cut.r_grid - 1), q(a), q(cut.r_grid + 1), q(b), k),
                    "radius charge fails"
                );
                assert!(b < cut.r_grid && cut.r_grid < a);
            }
        }
        // the chosen radius always leaves one grid step on each side
        assert!(cut.r_grid >= 1 && cut.r_grid + 1 <= 4 * big_l * k);
    }

    #[test]
    fn create_petal_choices_verified_on_random_instances() {
        for seed in 0..15 {
            let g: WeightedGraph<f64> = generate(Family::Random, 36, seed).unwrap();
            let view = SubgraphView::full(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            for k in [1u32, 2, 3] {
                let mut universe: Vec<u32> =
                    (0..g.n() as u32).filter(|_| rng.gen_bool(0.7)).collect();
                if universe.is_empty() {
                    universe.push(0);
                }
                let mut marks = MarkState::from_universe(g.n(), &universe);
                let t = rng.gen_range(1..g.n() as u32);
                let hi = rng.gen_range(4.0..60.0f64);
                let (f, _, _) = petal_potentials(&view, 0, t);
                let mut marked_f: Vec<f64> = universe.iter().map(|&v| f[v as usize]).collect();
                marked_f.sort_by(f64::total_cmp);
                let cut = create_petal(&view, (0.0, hi), 0, t, k, &mut marks).unwrap();
                verify_cut_choice(&cut, &marked_f, k);
                // unmarked vertices are exactly the marked annulus
                for &v in &universe {
                    let fv = f[v as usize];
                    let inner = cut.lo + (cut.r_grid - 1) as f64 * cut.unit;
                    let outer = cut.lo + (cut.r_grid + 1) as f64 * cut.unit;
                    let should_die = fv > inner && fv <= outer;
                    assert_eq!(
                        cut.unmarked.contains(&v),
                        should_die,
                        "seed {seed} k {k} v {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn decomposition_without_far_vertices_is_single_part() {
        let g: WeightedGraph<f64> = generate(Family::Star, 6, 0).unwrap();
        let mut marks = MarkState::from_universe(6, &all_of(&g));
        let mut ctx = RunContext::new(2, g.edges().len(), false);
        let view = SubgraphView::full(&g);
        // radius 1 from the hub; delta = 2 puts everyone within (3/4) delta
        let d = petal_decomposition(view, 0, 0, 2.0, &mut marks, &mut ctx).unwrap();
        assert_eq!(d.parts.len(), 1);
        assert_eq!(d.parts[0].members.len(), 6);
        assert_eq!(d.parts[0].target, 0);
        assert!(d.edges.is_empty());
    }

    #[test]
    fn special_first_petal_on_a_path() {
        let g: WeightedGraph<f64> = generate(Family::Path, 5, 0).unwrap();
        let mut marks = MarkState::from_universe(5, &all_of(&g));
        let mut ctx = RunContext::new(2, g.edges().len(), false);
        let view = SubgraphView::full(&g);
        // d(0,4) = 4 = delta >= delta/2: the first petal is special
        let d = petal_decomposition(view, 0, 4, 4.0, &mut marks, &mut ctx).unwrap();
        let cut = &d.cuts[0];
        assert_eq!((cut.lo, cut.hi), (2.0, 3.0));
        assert_eq!(d.parts[1].target, 4);
        // the central target is the boundary vertex y1 just outside petal 1
        let x1 = d.parts[1].center;
        assert_eq!(d.parts[0].target, x1 - 1);
        assert_eq!(d.edges[0].0, x1 - 1);
        let parts_total: usize = d.parts.iter().map(|p| p.members.len()).sum();
        assert_eq!(parts_total, 5);
    }

    #[test]
    fn hierarchical_on_singleton_and_p3() {
        let g1 = WeightedGraph::<f64>::new(1, vec![]).unwrap();
        let b = build_spanning_tree(&g1, &[0], 2, 0, false).unwrap();
        assert_eq!(b.tree.edge_ids.len(), 0);
        assert_eq!(b.survivors, vec![0]);

        let g = p3();
        let b = build_spanning_tree(&g, &[0, 1, 2], 2, 0, false).unwrap();
        assert_eq!(b.tree.edge_ids.len(), 2);
        // any spanning tree of P3 is P3 itself; radius from 0 is 2 <= 4 * 2
        let dist = b.tree.distances_from(&g, 0, None);
        assert_eq!(dist, vec![0.0, 1.0, 2.0]);
        assert_eq!(b.survivors.len(), 3);
    }

    #[test]
    fn survivor_bound_and_edge_halving_on_random_graphs() {
        for seed in 0..8 {
            let g: WeightedGraph<f64> = generate(Family::Random, 48, seed).unwrap();
            for k in [1u32, 2, 3] {
                let marked = all_of(&g);
                let b = build_spanning_tree(&g, &marked, k, 0, false).unwrap();
                assert!(
                    arith::survival_ok(b.survivors.len() as u64, marked.len() as u64, k),
                    "seed {seed} k {k}: {} of {}",
                    b.survivors.len(),
                    marked.len()
                );
                // halve-once is asserted inside; double-check the log
                let mut sorted = b.halved_log.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), b.halved_log.len());
            }
        }
    }

    #[test]
    fn survivors_have_low_stretch() {
        for seed in 0..4 {
            let g: WeightedGraph<f64> = generate(Family::Random, 40, seed).unwrap();
            let k = 2;
            let b = build_spanning_tree(&g, &all_of(&g), k, 0, false).unwrap();
            let lmax = arith::petal_level_count(g.n() as u64);
            let bound = 2.0 * 8.0 * 128.0 * lmax as f64 * k as f64;
            let view = SubgraphView::full(&g);
            for &v in &b.survivors {
                let tree_d = b.tree.distances_from(&g, v, None);
                let graph_d = view.shortest_paths(v);
                for u in 0..g.n() as u32 {
                    if u == v {
                        continue;
                    }
                    assert!(
                        tree_d[u as usize] <= bound * graph_d.dist(u),
                        "stretch at {v},{u}: {} vs {}",
                        tree_d[u as usize],
                        graph_d.dist(u)
                    );
                }
            }
        }
    }

    #[test]
    fn decomposition_suffix_is_reproducible() {
        // carving is oblivious to removed petals: rerunning on Y_j with the
        // final central target and the original delta yields the same suffix
        for seed in 0..6 {
            let g: WeightedGraph<f64> = generate(Family::Random, 36, seed).unwrap();
            let universe = all_of(&g);
            let mut marks = MarkState::from_universe(g.n(), &universe);
            let mut ctx = RunContext::new(2, g.edges().len(), false);
            let view = SubgraphView::full(&g);
            let delta = view.radius(0);
            let d = petal_decomposition(view, 0, 0, delta, &mut marks, &mut ctx).unwrap();
            let s = d.parts.len() - 1;
            if s == 0 {
                continue;
            }
            // no special petal at the top (t = x0), so every petal is standard
            let j = 1 + (seed as usize % s);
            // marks as they stood after petal j
            let mut replay_marks = MarkState::from_universe(g.n(), &universe);
            for cut in &d.cuts[..j] {
                for &v in &cut.unmarked {
                    replay_marks.unmark(v);
                }
            }
            // Y_j = X minus petals 1..=j
            let mut members = IdSet::full(g.n());
            for part in &d.parts[1..=j] {
                for &v in &part.members {
                    members.remove(v);
                }
            }
            let re_view = SubgraphView::of_members(&g, members);
            let mut re_ctx = RunContext::new(2, g.edges().len(), false);
            let re = petal_decomposition(
                re_view,
                0,
                d.parts[0].target,
                delta,
                &mut replay_marks,
                &mut re_ctx,
            )
            .unwrap();
            // suffix parts j+1..=s and the central part match exactly
            assert_eq!(re.parts.len(), s - j + 1, "seed {seed} j {j}");
            assert_eq!(re.parts[0].members, d.parts[0].members);
            assert_eq!(re.parts[0].target, d.parts[0].target);
            for (a, b) in re.parts[1..].iter().zip(&d.parts[j + 1..]) {
                assert_eq!(a.members, b.members, "seed {seed} j {j}");
                assert_eq!(a.center, b.center);
                assert_eq!(a.target, b.target);
            }
            let re_edges: Vec<_> = re.edges.iter().collect();
            let orig_edges: Vec<_> = d.edges[j..].iter().collect();
            assert_eq!(re_edges, orig_edges);
        }
    }

    #[test]
    fn trace_records_every_petal() {
        let g: WeightedGraph<f64> = generate(Family::Random, 24, 0).unwrap();
        let b = build_spanning_tree(&g, &all_of(&g), 2, 0, true).unwrap();
        let trace = b.trace.unwrap();
        assert!(!trace.is_empty());
        for line in &trace {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["r"].is_number() && v["branch"].is_string());
        }
    }
}
