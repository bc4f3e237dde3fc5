//! Deterministic graph generators for the CLI and the property suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, GraphError, WeightedGraph};
use crate::weight::{wf, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Star,
    Grid,
    Random,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Family::Path),
            "star" => Ok(Family::Star),
            "grid" => Ok(Family::Grid),
            "random" => Ok(Family::Random),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

/// Connected graph with integer weights in `[1, 100]`, identical for a given
/// `(family, n, seed)`. Path and star use unit weights; grid and random draw
/// seeded weights.
pub fn generate<W: Weight>(family: Family, n: usize, seed: u64) -> Result<WeightedGraph<W>, GraphError> {
    assert!(n >= 1, "n must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<Edge<W>> = Vec::new();
    let push = |edges: &mut Vec<Edge<W>>, u: usize, v: usize, w: f64| {
        edges.push(Edge { u: u as u32, v: v as u32, w: wf(w) });
    };
    match family {
        Family::Path => {
            for i in 1..n {
                push(&mut edges, i - 1, i, 1.0);
            }
        }
        Family::Star => {
            for i in 1..n {
                push(&mut edges, 0, i, 1.0);
            }
        }
        Family::Grid => {
            let cols = (n as f64).sqrt().ceil() as usize;
            for i in 0..n {
                let (r, c) = (i / cols, i % cols);
                if c + 1 < cols && i + 1 < n {
                    push(&mut edges, i, i + 1, rng.gen_range(1..=100) as f64);
                }
                if (r + 1) * cols + c < n {
                    push(&mut edges, i, (r + 1) * cols + c, rng.gen_range(1..=100) as f64);
                }
            }
            // a lone trailing cell can be disconnected from a short last row
            if n > 1 && edges.iter().all(|e| e.u as usize != n - 1 && e.v as usize != n - 1) {
                push(&mut edges, n - 2, n - 1, rng.gen_range(1..=100) as f64);
            }
        }
        Family::Random => {
            // random attachment tree keeps it connected, then extra chords
            for i in 1..n {
                let j = rng.gen_range(0..i);
                push(&mut edges, j, i, rng.gen_range(1..=100) as f64);
            }
            let max_extra = n * (n - 1) / 2 - (n - 1);
            let extra = (2 * n).min(max_extra);
            let mut used: std::collections::HashSet<(usize, usize)> = edges
                .iter()
                .map(|e| (e.u.min(e.v) as usize, e.u.max(e.v) as usize))
                .collect();
            let mut added = 0;
            while added < extra {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u == v {
                    continue;
                }
                let key = (u.min(v), u.max(v));
                if used.insert(key) {
                    push(&mut edges, key.0, key.1, rng.gen_range(1..=100) as f64);
                    added += 1;
                }
            }
        }
    }
    WeightedGraph::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_is_p3() {
        let g = generate::<f64>(Family::Path, 3, 0).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.diameter(), 2.0);
    }

    #[test]
    fn star_has_unit_leaves() {
        let g = generate::<f64>(Family::Star, 5, 0).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edges().len(), 4);
        assert!(g.edges().iter().all(|e| e.w == 1.0));
    }

    #[test]
    fn random_is_seed_deterministic() {
        let a = generate::<f64>(Family::Random, 50, 7).unwrap();
        let b = generate::<f64>(Family::Random, 50, 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = generate::<f64>(Family::Random, 50, 8).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn families_connected_and_weights_in_range() {
        for family in [Family::Path, Family::Star, Family::Grid, Family::Random] {
            for n in [1usize, 2, 5, 17, 40] {
                let g = generate::<f64>(family, n, 1).unwrap();
                assert_eq!(g.n(), n);
                for e in g.edges() {
                    assert!(e.w >= 1.0 && e.w <= 100.0 && e.w.fract() == 0.0);
                }
            }
        }
    }
}
