//! Exact graph edit distance between room adjacency graphs.
//!
//! Edit operations all cost 1: insert/delete a node, relabel a node whose
//! types differ, insert/delete an edge. Matching node labels and matching
//! edges are free. The distance is found with best-first search over partial
//! node assignments, guided by an admissible lower bound, so the returned
//! value is exact — and therefore symmetric — whenever it is returned at all.
//! There is no approximate fallback: pairs whose combined node count exceeds
//! [`MAX_EXACT_NODES`] are rejected instead.

use std::collections::BinaryHeap;

use floorgen_core::bubble::{extract_bubble_graph, BubbleGraph};
use floorgen_core::types::{Floorplan, RoomType, ROOM_TYPE_COUNT};

use crate::{MetricsError, Result};

/// Largest combined node count (both graphs together) accepted by the exact
/// search.
pub const MAX_EXACT_NODES: usize = 12;

/// A small undirected graph with typed nodes and compact 0-based ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub labels: Vec<RoomType>,
    /// Unordered node-id pairs, stored with the smaller id first.
    pub edges: Vec<(usize, usize)>,
}

impl LabeledGraph {
    pub fn new(labels: Vec<RoomType>, mut edges: Vec<(usize, usize)>) -> LabeledGraph {
        for e in edges.iter_mut() {
            *e = (e.0.min(e.1), e.0.max(e.1));
        }
        edges.sort_unstable();
        edges.dedup();
        LabeledGraph { labels, edges }
    }

    /// Re-keys a bubble graph's loop-index nodes to a dense 0..n range.
    pub fn from_bubble(g: &BubbleGraph) -> LabeledGraph {
        let labels: Vec<RoomType> = g.nodes.iter().map(|&(_, t)| t).collect();
        let compact = |loop_idx: usize| {
            g.nodes
                .iter()
                .position(|&(i, _)| i == loop_idx)
                .expect("bubble edge endpoint must be a node")
        };
        let edges = g.edges.iter().map(|&(a, b)| (compact(a), compact(b))).collect();
        LabeledGraph::new(labels, edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }
}

/// Room-graph distance between two plans: bubble graphs are extracted with
/// geometric slack `eps`, then compared with [`graph_edit_distance`].
pub fn compatibility(a: &Floorplan, b: &Floorplan, eps: f64) -> Result<f64> {
    let ga = LabeledGraph::from_bubble(&extract_bubble_graph(a, eps));
    let gb = LabeledGraph::from_bubble(&extract_bubble_graph(b, eps));
    Ok(graph_edit_distance(&ga, &gb)? as f64)
}

/// Search state: pred nodes `0..mapping.len()` are decided, each either
/// assigned to a distinct target node or deleted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct State {
    cost: u32,
    mapping: Vec<Option<usize>>,
}

/// Exact edit distance under unit costs.
///
/// Errors with [`MetricsError::TooLarge`] when the combined node count
/// exceeds [`MAX_EXACT_NODES`]; exactness is never traded away for size.
pub fn graph_edit_distance(a: &LabeledGraph, b: &LabeledGraph) -> Result<u32> {
    let na = a.node_count();
    let nb = b.node_count();
    if na + nb > MAX_EXACT_NODES {
        return Err(MetricsError::TooLarge {
            nodes: na + nb,
            max: MAX_EXACT_NODES,
        });
    }

    // Suffix label counts and suffix edge counts for the pred graph, used by
    // the admissible bound.
    let mut label_suffix = vec![[0u16; ROOM_TYPE_COUNT]; na + 1];
    for i in (0..na).rev() {
        label_suffix[i] = label_suffix[i + 1];
        label_suffix[i][a.labels[i].id()] += 1;
    }
    // edge_suffix[i] = edges with both endpoints >= i; stored pairs have the
    // smaller endpoint first, so that is exactly the edges whose first
    // endpoint is >= i.
    let mut edge_suffix = vec![0u32; na + 1];
    for i in (0..na).rev() {
        edge_suffix[i] =
            edge_suffix[i + 1] + a.edges.iter().filter(|&&(u, _)| u == i).count() as u32;
    }

    let bound = |depth: usize, mapping: &[Option<usize>], g: &LabeledGraph| -> u32 {
        let used: Vec<bool> = {
            let mut m = vec![false; nb];
            for j in mapping.iter().flatten() {
                m[*j] = true;
            }
            m
        };
        let ra = na - depth;
        let unused: Vec<usize> = (0..nb).filter(|&j| !used[j]).collect();
        let rb = unused.len();
        let mut b_counts = [0u16; ROOM_TYPE_COUNT];
        for &j in &unused {
            b_counts[g.labels[j].id()] += 1;
        }
        let same: u32 = (0..ROOM_TYPE_COUNT)
            .map(|t| label_suffix[depth][t].min(b_counts[t]) as u32)
            .sum();
        let node_bound =
            (ra.abs_diff(rb)) as u32 + (ra.min(rb) as u32).saturating_sub(same);
        let eb = g
            .edges
            .iter()
            .filter(|&&(u, v)| !used[u] && !used[v])
            .count() as u32;
        let edge_bound = edge_suffix[depth].abs_diff(eb);
        node_bound + edge_bound
    };

    // Cost added when pred node `i` is decided: all pred edges from `i` to
    // earlier nodes, and all target edges from its image to earlier images,
    // are settled here exactly once.
    let decide_cost = |i: usize, choice: Option<usize>, mapping: &[Option<usize>]| -> u32 {
        let mut c = 0u32;
        match choice {
            Some(j) => {
                if a.labels[i] != b.labels[j] {
                    c += 1;
                }
                for (k, mk) in mapping.iter().enumerate() {
                    let pred_edge = a.has_edge(i, k);
                    let target_edge = matches!(mk, Some(l) if b.has_edge(j, *l));
                    if pred_edge != target_edge {
                        c += 1;
                    }
                }
            }
            None => {
                c += 1;
                for k in 0..mapping.len() {
                    if a.has_edge(i, k) {
                        c += 1;
                    }
                }
            }
        }
        c
    };

    // Cost of finishing from a complete pred assignment: unused target nodes
    // are inserted, along with every target edge touching at least one of
    // them (edges between two used targets were settled during the search).
    let finish_cost = |mapping: &[Option<usize>]| -> u32 {
        let mut used = vec![false; nb];
        for j in mapping.iter().flatten() {
            used[*j] = true;
        }
        let inserts = used.iter().filter(|&&u| !u).count() as u32;
        let fresh_edges = b
            .edges
            .iter()
            .filter(|&&(u, v)| !used[u] || !used[v])
            .count() as u32;
        inserts + fresh_edges
    };

    let mut heap: BinaryHeap<std::cmp::Reverse<(u32, State)>> = BinaryHeap::new();
    let root = State {
        cost: 0,
        mapping: Vec::new(),
    };
    let f0 = bound(0, &root.mapping, b);
    heap.push(std::cmp::Reverse((f0, root)));

    while let Some(std::cmp::Reverse((_, state))) = heap.pop() {
        let depth = state.mapping.len();
        if depth == na {
            return Ok(state.cost);
        }
        // Complete states carry their exact total so popping one ends the
        // search; partial states carry g and are ordered by g + bound.
        let mut push = |choice: Option<usize>| {
            let g = state.cost + decide_cost(depth, choice, &state.mapping);
            let mut mapping = state.mapping.clone();
            mapping.push(choice);
            let (cost, f) = if mapping.len() == na {
                let total = g + finish_cost(&mapping);
                (total, total)
            } else {
                (g, g + bound(mapping.len(), &mapping, b))
            };
            heap.push(std::cmp::Reverse((f, State { cost, mapping })));
        };
        for j in 0..nb {
            if !state.mapping.contains(&Some(j)) {
                push(Some(j));
            }
        }
        push(None);
    }
    unreachable!("search space always contains the all-delete assignment")
}

/// Exhaustive reference implementation: tries every injective partial map
/// from `a`'s nodes into `b`'s and returns the cheapest total. Exponential;
/// intended only for verifying [`graph_edit_distance`] on small inputs.
pub fn ged_brute_force(a: &LabeledGraph, b: &LabeledGraph) -> u32 {
    fn total(a: &LabeledGraph, b: &LabeledGraph, mapping: &[Option<usize>]) -> u32 {
        let mut c = 0u32;
        for (i, m) in mapping.iter().enumerate() {
            match m {
                Some(j) => {
                    if a.labels[i] != b.labels[*j] {
                        c += 1;
                    }
                }
                None => c += 1,
            }
        }
        c += (b.node_count() - mapping.iter().flatten().count()) as u32;
        for &(u, v) in &a.edges {
            match (mapping[u], mapping[v]) {
                (Some(ju), Some(jv)) => {
                    if !b.has_edge(ju, jv) {
                        c += 1;
                    }
                }
                _ => c += 1,
            }
        }
        let image: Vec<Option<usize>> = (0..b.node_count())
            .map(|j| mapping.iter().position(|m| *m == Some(j)))
            .collect();
        for &(p, q) in &b.edges {
            match (image[p], image[q]) {
                (Some(u), Some(v)) => {
                    if !a.has_edge(u, v) {
                        c += 1;
                    }
                }
                _ => c += 1,
            }
        }
        c
    }

    fn recurse(a: &LabeledGraph, b: &LabeledGraph, mapping: &mut Vec<Option<usize>>, best: &mut u32) {
        if mapping.len() == a.node_count() {
            *best = (*best).min(total(a, b, mapping));
            return;
        }
        for j in 0..b.node_count() {
            if !mapping.contains(&Some(j)) {
                mapping.push(Some(j));
                recurse(a, b, mapping, best);
                mapping.pop();
            }
        }
        mapping.push(None);
        recurse(a, b, mapping, best);
        mapping.pop();
    }

    let mut best = u32::MAX;
    recurse(a, b, &mut Vec::new(), &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(labels: Vec<RoomType>, edges: Vec<(usize, usize)>) -> LabeledGraph {
        LabeledGraph::new(labels, edges)
    }

    fn random_graph(rng: &mut ChaCha8Rng) -> LabeledGraph {
        let types = [
            RoomType::LivingRoom,
            RoomType::Bedroom,
            RoomType::Kitchen,
            RoomType::Bathroom,
        ];
        let n = rng.gen_range(2..=5);
        let labels = (0..n).map(|_| types[rng.gen_range(0..types.len())]).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(1.0 / 3.0) {
                    edges.push((u, v));
                }
            }
        }
        graph(labels, edges)
    }

    #[test]
    fn identical_graphs_have_distance_zero() {
        let g = graph(
            vec![RoomType::LivingRoom, RoomType::Bedroom, RoomType::Kitchen],
            vec![(0, 1), (1, 2)],
        );
        assert_eq!(graph_edit_distance(&g, &g).unwrap(), 0);
    }

    #[test]
    fn one_removed_edge_costs_one() {
        let a = graph(
            vec![RoomType::LivingRoom, RoomType::Bedroom, RoomType::Kitchen],
            vec![(0, 1), (1, 2)],
        );
        let b = graph(
            vec![RoomType::LivingRoom, RoomType::Bedroom, RoomType::Kitchen],
            vec![(0, 1)],
        );
        assert_eq!(graph_edit_distance(&a, &b).unwrap(), 1);
    }

    #[test]
    fn one_relabeled_node_costs_one() {
        let a = graph(vec![RoomType::LivingRoom, RoomType::Bedroom], vec![(0, 1)]);
        let b = graph(vec![RoomType::LivingRoom, RoomType::Kitchen], vec![(0, 1)]);
        assert_eq!(graph_edit_distance(&a, &b).unwrap(), 1);
    }

    #[test]
    fn node_insertion_carries_its_incident_edges() {
        // Adding one connected node needs a node insert plus an edge insert.
        let a = graph(vec![RoomType::LivingRoom], vec![]);
        let b = graph(vec![RoomType::LivingRoom, RoomType::Bedroom], vec![(0, 1)]);
        assert_eq!(graph_edit_distance(&a, &b).unwrap(), 2);
    }

    #[test]
    fn matches_brute_force_on_random_small_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..120 {
            let a = random_graph(&mut rng);
            let b = random_graph(&mut rng);
            let fast = graph_edit_distance(&a, &b).unwrap();
            let slow = ged_brute_force(&a, &b);
            assert_eq!(fast, slow, "a={a:?} b={b:?}");
        }
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..60 {
            let a = random_graph(&mut rng);
            let b = random_graph(&mut rng);
            assert_eq!(
                graph_edit_distance(&a, &b).unwrap(),
                graph_edit_distance(&b, &a).unwrap()
            );
        }
    }

    #[test]
    fn oversized_pairs_are_rejected_not_approximated() {
        let labels = vec![RoomType::Bedroom; 7];
        let a = graph(labels.clone(), vec![]);
        let b = graph(labels, vec![]);
        let err = graph_edit_distance(&a, &b).unwrap_err();
        assert!(matches!(
            err,
            MetricsError::TooLarge { nodes: 14, max: MAX_EXACT_NODES }
        ));
    }

    #[test]
    fn twelve_combined_nodes_still_run_exactly() {
        let labels = vec![RoomType::Bedroom; 6];
        let mut a = graph(labels.clone(), vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let b = graph(labels, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(graph_edit_distance(&a, &b).unwrap(), 1);
        a.labels[0] = RoomType::Kitchen;
        assert_eq!(graph_edit_distance(&a, &b).unwrap(), 2);
    }

    #[test]
    fn compatibility_reads_graphs_from_plans() {
        use floorgen_core::types::{Corner, Floorplan, Loop};
        let rect = |t: RoomType, x0: u8, y0: u8, x1: u8, y1: u8| {
            Loop::new(
                t,
                vec![
                    Corner::new(x0, y0),
                    Corner::new(x1, y0),
                    Corner::new(x1, y1),
                    Corner::new(x0, y1),
                ],
            )
        };
        // Two touching rooms: adjacency via boundary proximity (no doors).
        let p = Floorplan::new(vec![
            rect(RoomType::LivingRoom, 10, 10, 80, 80),
            rect(RoomType::Bedroom, 80, 10, 150, 80),
        ])
        .unwrap();
        assert_eq!(compatibility(&p, &p, 2.0).unwrap(), 0.0);

        // Same rooms pulled apart: the adjacency edge disappears.
        let q = Floorplan::new(vec![
            rect(RoomType::LivingRoom, 10, 10, 80, 80),
            rect(RoomType::Bedroom, 120, 10, 190, 80),
        ])
        .unwrap();
        assert_eq!(compatibility(&p, &q, 2.0).unwrap(), 1.0);
    }
}
