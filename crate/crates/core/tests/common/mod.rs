//! Shared fixtures for the integration suites: an exhaustive generator of
//! small labelled DAGs and an independent d-separation decider that works
//! straight from the textbook definition — enumerate every simple undirected
//! path and test the blocking rules node by node.
//!
//! The decider shares no code with the library's reachability-based
//! implementation, which is the point: agreement between the two is evidence,
//! not tautology.

use std::collections::BTreeMap;

use nofinetune_core::{Dag, DagError, NodeId};

/// Every labelled DAG over `n` nodes named `v1..vn`, paired with its edge
/// list as index pairs `(from, to)`. Each unordered node pair independently
/// carries no edge, a forward edge, or a backward edge; cyclic orientations
/// are rejected by `Dag::build` itself.
pub fn all_dags(n: usize) -> Vec<(Dag, Vec<(usize, usize)>)> {
    assert!((1..=5).contains(&n), "generator is sized for at most five nodes");
    let names: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();

    let mut out = Vec::new();
    for code in 0..3usize.pow(pairs.len() as u32) {
        let mut rem = code;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in &pairs {
            match rem % 3 {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
            rem /= 3;
        }
        let nodes: Vec<NodeId> = names.iter().map(|s| NodeId::observed(s.as_str())).collect();
        let named: Vec<(&str, &str)> = edges
            .iter()
            .map(|&(u, v)| (names[u].as_str(), names[v].as_str()))
            .collect();
        match Dag::build(nodes, &named) {
            Ok(dag) => out.push((dag, edges)),
            Err(DagError::Cycle(_)) => {}
            Err(e) => panic!("exhaustive generator hit a non-cycle error: {e}"),
        }
    }
    out
}

/// Definition-level d-separation oracle for graphs of at most 32 nodes.
///
/// Construction enumerates, once per unordered node pair, every simple path
/// in the undirected skeleton and records its interior as `(node, collider)`
/// descriptors. A query then replays the blocking rules: a path is active
/// under conditioning set `z` iff every interior collider has a descendant
/// (or itself) in `z` and every interior non-collider is outside `z`.
pub struct PathOracle {
    index: BTreeMap<String, usize>,
    /// Descendants of each node, the node itself included.
    desc_incl: Vec<u32>,
    /// `paths[lo * n + hi]` holds the interior descriptors of every simple
    /// path between `lo < hi`; direction of travel is irrelevant.
    paths: Vec<Vec<Vec<(usize, bool)>>>,
    n: usize,
}

impl PathOracle {
    pub fn new(names: &[String], edges: &[(usize, usize)]) -> Self {
        let n = names.len();
        assert!(n <= 32, "bitmask oracle is sized for at most 32 nodes");
        let index: BTreeMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        let mut children = vec![0u32; n];
        let mut neighbours = vec![0u32; n];
        for &(u, v) in edges {
            children[u] |= 1 << v;
            neighbours[u] |= 1 << v;
            neighbours[v] |= 1 << u;
        }

        let mut desc_incl: Vec<u32> = (0..n).map(|v| 1u32 << v).collect();
        loop {
            let mut changed = false;
            for u in 0..n {
                let mut next = desc_incl[u];
                let mut cm = children[u];
                while cm != 0 {
                    let c = cm.trailing_zeros() as usize;
                    cm &= cm - 1;
                    next |= desc_incl[c];
                }
                if next != desc_incl[u] {
                    desc_incl[u] = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut paths = vec![Vec::new(); n * n];
        for lo in 0..n {
            for hi in lo + 1..n {
                let mut walks: Vec<Vec<usize>> = Vec::new();
                let mut seq = vec![lo];
                collect_walks(&neighbours, hi, lo, 1 << lo, &mut seq, &mut walks);
                paths[lo * n + hi] = walks
                    .iter()
                    .map(|w| {
                        (1..w.len() - 1)
                            .map(|i| {
                                let into_prev = children[w[i - 1]] & (1 << w[i]) != 0;
                                let into_next = children[w[i + 1]] & (1 << w[i]) != 0;
                                (w[i], into_prev && into_next)
                            })
                            .collect()
                    })
                    .collect();
            }
        }

        PathOracle { index, desc_incl, paths, n }
    }

    /// Bitmask of a statement side; names must belong to the oracle's graph.
    pub fn mask(&self, side: &[String]) -> u32 {
        side.iter().fold(0u32, |m, s| m | 1 << self.index[s.as_str()])
    }

    /// True iff no path between any `s1` node and any `s2` node is active
    /// given `z`. All three arguments are node bitmasks.
    pub fn separated_masks(&self, s1: u32, s2: u32, z: u32) -> bool {
        let mut am = s1;
        while am != 0 {
            let a = am.trailing_zeros() as usize;
            am &= am - 1;
            let mut bm = s2;
            while bm != 0 {
                let b = bm.trailing_zeros() as usize;
                bm &= bm - 1;
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                for interior in &self.paths[lo * self.n + hi] {
                    let active = interior.iter().all(|&(v, collider)| {
                        if collider {
                            self.desc_incl[v] & z != 0
                        } else {
                            z & (1 << v) == 0
                        }
                    });
                    if active {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Depth-first enumeration of simple paths `seq[0] .. target` over the
/// undirected skeleton. `visited` mirrors `seq` as a bitmask.
fn collect_walks(
    neighbours: &[u32],
    target: usize,
    cur: usize,
    visited: u32,
    seq: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if cur == target {
        out.push(seq.clone());
        return;
    }
    let mut cand = neighbours[cur] & !visited;
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        seq.push(v);
        collect_walks(neighbours, target, v, visited | (1 << v), seq, out);
        seq.pop();
    }
}
