//! 1-Wasserstein distance on the vocabulary-rank line, a pivot ball tree and
//! exact k-nearest-neighbor search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::TokenDistribution;

/// W1 between two distributions on the integer line.
///
/// Walks the merged support in increasing order and accumulates
/// `|CDF_u - CDF_v|` times the gap to the next support point.
pub fn wasserstein_1d(u: &TokenDistribution, v: &TokenDistribution) -> f64 {
    let (us, uw) = (u.support(), u.weights());
    let (vs, vw) = (v.support(), v.weights());
    let (mut i, mut j) = (0, 0);
    let (mut cdf_u, mut cdf_v) = (0.0f64, 0.0f64);
    let mut total = 0.0;
    let mut prev: Option<usize> = None;
    while i < us.len() || j < vs.len() {
        let x = match (us.get(i), vs.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total += (cdf_u - cdf_v).abs() * (x - p) as f64;
        }
        if us.get(i) == Some(&x) {
            cdf_u += uw[i];
            i += 1;
        }
        if vs.get(j) == Some(&x) {
            cdf_v += vw[j];
            j += 1;
        }
        prev = Some(x);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    /// Ascending by distance, then by index.
    fn cmp_key(&self, other: &Neighbor) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum NodeKind {
    Leaf(Vec<usize>),
    Split { near_a: usize, near_b: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    pivot: usize,
    radius: f64,
    kind: NodeKind,
}

pub const DEFAULT_LEAF_SIZE: usize = 16;

/// Binary metric tree over token distributions.
///
/// Construction is deterministic. The root's pivot is point 0. A node whose
/// points exceed `leaf_size` picks `a`, the point farthest from its pivot,
/// then `b`, the point farthest from `a` (distance ties go to the smaller
/// index), and sends every point to the nearer of the two (ties to `a`). The
/// children are pivoted on `a` and `b`. Each node's radius bounds the distance
/// from its pivot to every point below it.
#[derive(Debug, Clone, PartialEq)]
pub struct BallTree {
    points: Vec<TokenDistribution>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

fn farthest(dists: &[(usize, f64)]) -> (usize, f64) {
    // `dists` is in ascending index order; strict `>` keeps the smaller index on ties.
    let mut best = dists[0];
    for &(p, d) in &dists[1..] {
        if d > best.1 {
            best = (p, d);
        }
    }
    best
}

pub fn build_ball_tree(points: Vec<TokenDistribution>, leaf_size: usize) -> Result<BallTree> {
    BallTree::build(points, leaf_size)
}

impl BallTree {
    pub fn build(points: Vec<TokenDistribution>, leaf_size: usize) -> Result<BallTree> {
        if points.is_empty() {
            return Err(Error::InvalidInput("cannot build a ball tree over zero points".into()));
        }
        if leaf_size == 0 {
            return Err(Error::InvalidConfig("leaf_size must be positive".into()));
        }
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, pivot, member points ascending)
        let mut work: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        nodes.push(Node {
            pivot: 0,
            radius: 0.0,
            kind: NodeKind::Leaf(Vec::new()),
        });
        work.push((0, 0, (0..points.len()).collect()));

        while let Some((slot, pivot, members)) = work.pop() {
            let from_pivot: Vec<(usize, f64)> = members
                .iter()
                .map(|&p| (p, wasserstein_1d(&points[pivot], &points[p])))
                .collect();
            let (a, radius) = farthest(&from_pivot);
            if members.len() <= leaf_size || radius == 0.0 {
                nodes[slot] = Node {
                    pivot,
                    radius,
                    kind: NodeKind::Leaf(members),
                };
                continue;
            }
            let from_a: Vec<(usize, f64)> = members
                .iter()
                .map(|&p| (p, wasserstein_1d(&points[a], &points[p])))
                .collect();
            let (b, _) = farthest(&from_a);
            let mut side_a = Vec::new();
            let mut side_b = Vec::new();
            for &(p, da) in &from_a {
                let db = wasserstein_1d(&points[b], &points[p]);
                if da <= db {
                    side_a.push(p);
                } else {
                    side_b.push(p);
                }
            }
            let near_a = nodes.len();
            let near_b = near_a + 1;
            for _ in 0..2 {
                nodes.push(Node {
                    pivot: 0,
                    radius: 0.0,
                    kind: NodeKind::Leaf(Vec::new()),
                });
            }
            nodes[slot] = Node {
                pivot,
                radius,
                kind: NodeKind::Split { near_a, near_b },
            };
            work.push((near_b, b, side_b));
            work.push((near_a, a, side_a));
        }

        Ok(BallTree {
            points,
            nodes,
            leaf_size,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn points(&self) -> &[TokenDistribution] {
        &self.points
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i].kind {
                NodeKind::Leaf(_) => 1,
                NodeKind::Split { near_a, near_b } => 1 + go(nodes, near_a).max(go(nodes, near_b)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Point indices of each leaf, in tree order.
    pub fn leaves(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Leaf(ps) => Some(ps.as_slice()),
                NodeKind::Split { .. } => None,
            })
            .collect()
    }

    /// Checks the radius invariant of every node against its subtree. Used by
    /// tests and debug tooling.
    pub fn radius_violations(&self) -> usize {
        let mut bad = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            for p in self.subtree_points(i) {
                if wasserstein_1d(&self.points[node.pivot], &self.points[p]) > node.radius {
                    bad += 1;
                }
            }
        }
        bad
    }

    fn subtree_points(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            match &self.nodes[i].kind {
                NodeKind::Leaf(ps) => out.extend_from_slice(ps),
                NodeKind::Split { near_a, near_b } => {
                    stack.push(*near_a);
                    stack.push(*near_b);
                }
            }
        }
        out
    }

    /// Exact k nearest neighbors, ascending by (distance, index).
    pub fn knn(&self, query: &TokenDistribution, k: usize) -> Result<Vec<Neighbor>> {
        self.knn_excluding(query, k, None)
    }

    /// Like [`BallTree::knn`] but never returns `exclude`.
    pub fn knn_excluding(
        &self,
        query: &TokenDistribution,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<Vec<Neighbor>> {
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        if k == 0 || k > available {
            return Err(Error::InvalidInput(format!(
                "k = {k} must be in 1..={available}"
            )));
        }
        let mut best: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        let root_dist = wasserstein_1d(query, &self.points[self.nodes[0].pivot]);
        self.search(0, root_dist, query, k, exclude, &mut best);
        Ok(best.into_sorted_vec())
    }

    fn search(
        &self,
        node: usize,
        pivot_dist: f64,
        query: &TokenDistribution,
        k: usize,
        exclude: Option<usize>,
        best: &mut BinaryHeap<Neighbor>,
    ) {
        let n = &self.nodes[node];
        if best.len() == k {
            let bound = pivot_dist - n.radius;
            let worst = best.peek().expect("non-empty").distance;
            // Slack absorbs rounding in the triangle inequality; pruning must
            // never drop a point that ties the current worst.
            if bound - 1e-9 * (1.0 + bound.abs()) > worst {
                return;
            }
        }
        match &n.kind {
            NodeKind::Leaf(ps) => {
                for &p in ps {
                    if Some(p) == exclude {
                        continue;
                    }
                    let d = if p == n.pivot {
                        pivot_dist
                    } else {
                        wasserstein_1d(query, &self.points[p])
                    };
                    let cand = Neighbor { index: p, distance: d };
                    if best.len() < k {
                        best.push(cand);
                    } else if cand < *best.peek().expect("non-empty") {
                        best.pop();
                        best.push(cand);
                    }
                }
            }
            NodeKind::Split { near_a, near_b } => {
                let da = wasserstein_1d(query, &self.points[self.nodes[*near_a].pivot]);
                let db = wasserstein_1d(query, &self.points[self.nodes[*near_b].pivot]);
                if da <= db {
                    self.search(*near_a, da, query, k, exclude, best);
                    self.search(*near_b, db, query, k, exclude, best);
                } else {
                    self.search(*near_b, db, query, k, exclude, best);
                    self.search(*near_a, da, query, k, exclude, best);
                }
            }
        }
    }

    /// One k-NN query per element of `queries`; output order follows input.
    pub fn knn_batch(
        &self,
        queries: &[TokenDistribution],
        k: usize,
        exec: Execution,
    ) -> Result<Vec<Vec<Neighbor>>> {
        exec::map_slice(exec, queries, |q| self.knn(q, k))
            .into_iter()
            .collect()
    }
}

/// Exhaustive k-NN by scanning every point.
pub fn brute_force_knn(
    points: &[TokenDistribution],
    query: &TokenDistribution,
    k: usize,
    exclude: Option<usize>,
) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| Neighbor {
            index: i,
            distance: wasserstein_1d(query, p),
        })
        .collect();
    all.sort();
    all.truncate(k);
    all
}

/// Largest point count for which a dense distance matrix may be built.
pub const DENSE_MATRIX_LIMIT: usize = 5000;

/// Dense pairwise distance matrix, for small diagnostic workloads only.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(points: &[TokenDistribution], exec: Execution) -> Result<DistanceMatrix> {
        let n = points.len();
        if n > DENSE_MATRIX_LIMIT {
            return Err(Error::InvalidInput(format!(
                "dense distance matrix refused for n = {n} > {DENSE_MATRIX_LIMIT}"
            )));
        }
        let rows = exec::map_range(exec, n, |i| {
            points.iter().map(|q| wasserstein_1d(&points[i], q)).collect::<Vec<_>>()
        });
        Ok(DistanceMatrix {
            n,
            data: rows.concat(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}
