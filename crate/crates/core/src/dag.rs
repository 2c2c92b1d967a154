//! Directed acyclic causal graphs and d-separation.
//!
//! Nodes are named and tagged observed or latent; the tag does not affect
//! graph algorithms (latent nodes are ordinary vertices here) but downstream
//! layers use it to decide what may be conditioned on or marginalized out.
//!
//! `d_separated` decides blocking by reachability rather than path
//! enumeration: a trail is traversed with a direction state, and a collider
//! may be crossed only when it is conditioned on or has a conditioned
//! descendant. The test suite keeps an independent brute-force path
//! enumerator as an oracle for this routine.

use crate::ci::{canonical_triples, CiStatement, TripleMode};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Observability tag for a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Observed,
    Latent,
}

/// A named node with its observability tag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub name: String,
    pub kind: NodeKind,
}

impl NodeId {
    pub fn observed(name: impl Into<String>) -> Self {
        NodeId { name: name.into(), kind: NodeKind::Observed }
    }

    pub fn latent(name: impl Into<String>) -> Self {
        NodeId { name: name.into(), kind: NodeKind::Latent }
    }
}

#[derive(Debug, Error)]
pub enum DagError {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("edges form a directed cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("d-separation query sets must be pairwise disjoint, but `{0}` is shared")]
    Disjointness(String),
    #[error("d-separation query sides must be nonempty")]
    EmptySide,
}

/// A validated directed acyclic graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<NodeId>,
    index: BTreeMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    /// Validate and build. Rejects duplicate node names, unknown edge
    /// endpoints, self-loops, duplicate edges, and directed cycles (the
    /// offending cycle is reported).
    pub fn build<S: AsRef<str>>(nodes: Vec<NodeId>, edges: &[(S, S)]) -> Result<Self, DagError> {
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(DagError::DuplicateNode(node.name.clone()));
            }
        }
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (from, to) in edges {
            let (from, to) = (from.as_ref(), to.as_ref());
            let f = *index.get(from).ok_or_else(|| DagError::UnknownNode(from.to_owned()))?;
            let t = *index.get(to).ok_or_else(|| DagError::UnknownNode(to.to_owned()))?;
            if f == t {
                return Err(DagError::SelfLoop(from.to_owned()));
            }
            if !seen.insert((f, t)) {
                return Err(DagError::DuplicateEdge(from.to_owned(), to.to_owned()));
            }
            children[f].push(t);
            parents[t].push(f);
        }
        for adj in parents.iter_mut().chain(children.iter_mut()) {
            adj.sort_unstable();
        }
        let dag = Dag { nodes, index, parents, children };
        if let Some(cycle) = dag.find_cycle() {
            return Err(DagError::Cycle(cycle));
        }
        Ok(dag)
    }

    /// Iterative DFS; returns a directed cycle as a name sequence
    /// `v -> ... -> v` if one exists.
    fn find_cycle(&self) -> Option<Vec<String>> {
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let n = self.nodes.len();
        let mut color = vec![WHITE; n];
        let mut parent_of = vec![usize::MAX; n];
        for root in 0..n {
            if color[root] != WHITE {
                continue;
            }
            // Stack entries: (node, next child position to try).
            let mut stack = vec![(root, 0usize)];
            color[root] = GRAY;
            while let Some(top) = stack.len().checked_sub(1) {
                let (v, next) = stack[top];
                if next < self.children[v].len() {
                    stack[top].1 += 1;
                    let c = self.children[v][next];
                    match color[c] {
                        WHITE => {
                            color[c] = GRAY;
                            parent_of[c] = v;
                            stack.push((c, 0));
                        }
                        GRAY => {
                            // Back edge v -> c closes a cycle; walk the DFS
                            // tree back from v to c to recover it.
                            let mut tmp = Vec::new();
                            let mut cur = v;
                            while cur != c {
                                tmp.push(cur);
                                cur = parent_of[cur];
                            }
                            let mut cycle = vec![self.nodes[c].name.clone()];
                            cycle.extend(tmp.iter().rev().map(|&u| self.nodes[u].name.clone()));
                            cycle.push(self.nodes[c].name.clone());
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[v] = BLACK;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in insertion order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Edges as name pairs, sorted by `(from, to)` index order of insertion
    /// order; deterministic for a given build.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (v, cs) in self.children.iter().enumerate() {
            for &c in cs {
                out.push((self.nodes[v].name.clone(), self.nodes[c].name.clone()));
            }
        }
        out.sort();
        out
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn node(&self, name: &str) -> Option<&NodeId> {
        self.index.get(name).map(|&i| &self.nodes[i])
    }

    fn resolve(&self, name: &str) -> Result<usize, DagError> {
        self.index.get(name).copied().ok_or_else(|| DagError::UnknownNode(name.to_owned()))
    }

    fn resolve_set<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<usize>, DagError> {
        names.iter().map(|s| self.resolve(s.as_ref())).collect()
    }

    /// Decide `(s1 ⫫ s2 | z)` in the graph. The three sets must be pairwise
    /// disjoint and `s1`, `s2` nonempty; `z` may be empty.
    ///
    /// Reachability with a direction state: from `s1`, a node is entered
    /// either against an edge (toward parents, `Up`) or along one (`Down`).
    /// Chains and forks are crossed only outside `z`; a collider is crossed
    /// only if it is in `z` or has a descendant in `z`. Separation holds iff
    /// no `s2` node is reached.
    pub fn d_separated<S: AsRef<str>>(&self, s1: &[S], s2: &[S], z: &[S]) -> Result<bool, DagError> {
        let s1 = self.resolve_set(s1)?;
        let s2 = self.resolve_set(s2)?;
        let z = self.resolve_set(z)?;
        if s1.is_empty() || s2.is_empty() {
            return Err(DagError::EmptySide);
        }
        for &v in &s1 {
            if s2.contains(&v) || z.contains(&v) {
                return Err(DagError::Disjointness(self.nodes[v].name.clone()));
            }
        }
        for &v in &s2 {
            if z.contains(&v) {
                return Err(DagError::Disjointness(self.nodes[v].name.clone()));
            }
        }
        Ok(self.d_separated_idx(&s1, &s2, &z))
    }

    /// Decide a canonical statement (names resolved in this graph).
    pub fn d_separated_stmt(&self, stmt: &CiStatement) -> Result<bool, DagError> {
        self.d_separated(&stmt.s1, &stmt.s2, &stmt.z)
    }

    fn d_separated_idx(&self, s1: &BTreeSet<usize>, s2: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
        let n = self.nodes.len();
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }

        // Nodes with a directed path into z (including z itself): exactly
        // the colliders that an observation can activate.
        let mut anc_z = vec![false; n];
        let mut stack: Vec<usize> = z.iter().copied().collect();
        for &v in z {
            anc_z[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc_z[p] {
                    anc_z[p] = true;
                    stack.push(p);
                }
            }
        }

        // visited[dir][node]; dir 0 = entered toward parents (Up),
        // dir 1 = entered along an edge (Down).
        let mut visited = [vec![false; n], vec![false; n]];
        let mut reached = vec![false; n];
        let mut work: Vec<(usize, u8)> = s1.iter().map(|&v| (v, 0u8)).collect();
        while let Some((v, dir)) = work.pop() {
            if visited[dir as usize][v] {
                continue;
            }
            visited[dir as usize][v] = true;
            if !in_z[v] {
                reached[v] = true;
            }
            match dir {
                0 => {
                    // Entered moving toward parents; continue through v as a
                    // chain or fork, which requires v to be unobserved.
                    if !in_z[v] {
                        for &p in &self.parents[v] {
                            work.push((p, 0));
                        }
                        for &c in &self.children[v] {
                            work.push((c, 1));
                        }
                    }
                }
                _ => {
                    // Entered along an edge. Passing straight on needs v
                    // unobserved; turning back toward parents makes v a
                    // collider, which must be activated.
                    if !in_z[v] {
                        for &c in &self.children[v] {
                            work.push((c, 1));
                        }
                    }
                    if anc_z[v] {
                        for &p in &self.parents[v] {
                            work.push((p, 0));
                        }
                    }
                }
            }
        }
        !s2.iter().any(|&v| reached[v])
    }

    /// Every canonical triple over `over` that is d-separated, in the
    /// canonical lexicographic order. `over` must name distinct nodes.
    pub fn all_d_separations<S: AsRef<str>>(
        &self,
        over: &[S],
        mode: TripleMode,
    ) -> Result<Vec<CiStatement>, DagError> {
        let set = self.resolve_set(over)?;
        if set.len() != over.len() {
            // A repeated name would silently collapse; reject it.
            let mut seen = BTreeSet::new();
            for s in over {
                if !seen.insert(s.as_ref()) {
                    return Err(DagError::DuplicateNode(s.as_ref().to_owned()));
                }
            }
        }
        let names: Vec<&str> = over.iter().map(|s| s.as_ref()).collect();
        let mut out = Vec::new();
        for stmt in canonical_triples(&names, mode) {
            if self.d_separated_stmt(&stmt)? {
                out.push(stmt);
            }
        }
        Ok(out)
    }
}

/// Parent/ancestor/descendant structure of a graph, queryable by name.
#[derive(Clone, Debug)]
pub struct Genealogy {
    parents: BTreeMap<String, BTreeSet<String>>,
    children: BTreeMap<String, BTreeSet<String>>,
    ancestors: BTreeMap<String, BTreeSet<String>>,
    descendants: BTreeMap<String, BTreeSet<String>>,
    non_descendants: BTreeMap<String, BTreeSet<String>>,
}

impl Genealogy {
    pub fn parents(&self, v: &str) -> Option<&BTreeSet<String>> {
        self.parents.get(v)
    }

    pub fn children(&self, v: &str) -> Option<&BTreeSet<String>> {
        self.children.get(v)
    }

    /// Proper ancestors: nodes with a directed path to `v`, excluding `v`.
    pub fn ancestors(&self, v: &str) -> Option<&BTreeSet<String>> {
        self.ancestors.get(v)
    }

    /// Proper descendants: nodes reachable from `v`, excluding `v`.
    pub fn descendants(&self, v: &str) -> Option<&BTreeSet<String>> {
        self.descendants.get(v)
    }

    /// All nodes except `v` and its descendants.
    pub fn non_descendants(&self, v: &str) -> Option<&BTreeSet<String>> {
        self.non_descendants.get(v)
    }
}

/// Compute the full genealogy of `g`.
pub fn genealogy(g: &Dag) -> Genealogy {
    let n = g.len();
    let names: Vec<&str> = g.nodes().iter().map(|x| x.name.as_str()).collect();
    let mut desc_idx: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    // Reverse-topological accumulation would be fine; n is small, so a
    // straightforward DFS per node keeps the code obvious.
    for v in 0..n {
        let mut stack = g.children[v].clone();
        while let Some(u) = stack.pop() {
            if desc_idx[v].insert(u) {
                stack.extend_from_slice(&g.children[u]);
            }
        }
    }
    let mut parents = BTreeMap::new();
    let mut children = BTreeMap::new();
    let mut ancestors: BTreeMap<String, BTreeSet<String>> =
        names.iter().map(|&s| (s.to_owned(), BTreeSet::new())).collect();
    let mut descendants = BTreeMap::new();
    let mut non_descendants = BTreeMap::new();
    for v in 0..n {
        let name = names[v];
        parents.insert(
            name.to_owned(),
            g.parents[v].iter().map(|&p| names[p].to_owned()).collect::<BTreeSet<_>>(),
        );
        children.insert(
            name.to_owned(),
            g.children[v].iter().map(|&c| names[c].to_owned()).collect::<BTreeSet<_>>(),
        );
        let dset: BTreeSet<String> = desc_idx[v].iter().map(|&d| names[d].to_owned()).collect();
        for &d in &desc_idx[v] {
            ancestors.get_mut(names[d]).expect("node present").insert(name.to_owned());
        }
        let nd: BTreeSet<String> = (0..n)
            .filter(|&u| u != v && !desc_idx[v].contains(&u))
            .map(|u| names[u].to_owned())
            .collect();
        descendants.insert(name.to_owned(), dset);
        non_descendants.insert(name.to_owned(), nd);
    }
    Genealogy { parents, children, ancestors, descendants, non_descendants }
}

/// The five-node common-cause graph for a two-party measurement setup:
/// settings X, Y; outcomes A, B; one latent common cause of the outcomes.
/// Edges X -> A, Y -> B, L -> A, L -> B.
pub fn bell_graph() -> Dag {
    Dag::build(
        vec![
            NodeId::observed("A"),
            NodeId::observed("B"),
            NodeId::observed("X"),
            NodeId::observed("Y"),
            NodeId::latent("L"),
        ],
        &[("X", "A"), ("Y", "B"), ("L", "A"), ("L", "B")],
    )
    .expect("statically valid graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Dag {
        Dag::build(
            vec![NodeId::observed("A"), NodeId::observed("B"), NodeId::observed("C")],
            &[("A", "B"), ("B", "C")],
        )
        .unwrap()
    }

    fn collider3() -> Dag {
        Dag::build(
            vec![NodeId::observed("A"), NodeId::observed("B"), NodeId::observed("C")],
            &[("A", "B"), ("C", "B")],
        )
        .unwrap()
    }

    #[test]
    fn build_rejects_cycles_with_the_cycle_reported() {
        let err = Dag::build(
            vec![NodeId::observed("X"), NodeId::observed("Y")],
            &[("X", "Y"), ("Y", "X")],
        )
        .unwrap_err();
        match err {
            DagError::Cycle(path) => {
                assert_eq!(path.first(), path.last());
                assert!(path.len() >= 3);
            }
            other => panic!("expected cycle error, got {other}"),
        }
    }

    #[test]
    fn build_rejects_duplicates_and_unknowns() {
        assert!(matches!(
            Dag::build(vec![NodeId::observed("X"), NodeId::observed("X")], &[] as &[(&str, &str)]),
            Err(DagError::DuplicateNode(_))
        ));
        assert!(matches!(
            Dag::build(vec![NodeId::observed("X")], &[("X", "Q")]),
            Err(DagError::UnknownNode(_))
        ));
        assert!(matches!(
            Dag::build(vec![NodeId::observed("X")], &[("X", "X")]),
            Err(DagError::SelfLoop(_))
        ));
        assert!(matches!(
            Dag::build(
                vec![NodeId::observed("X"), NodeId::observed("Y")],
                &[("X", "Y"), ("X", "Y")]
            ),
            Err(DagError::DuplicateEdge(_, _))
        ));
    }

    #[test]
    fn genealogy_on_chain() {
        let g = chain3();
        let gen = genealogy(&g);
        assert!(gen.parents("A").unwrap().is_empty());
        assert_eq!(gen.ancestors("C").unwrap().len(), 2);
        assert_eq!(gen.descendants("A").unwrap().len(), 2);
        assert!(gen.non_descendants("A").unwrap().is_empty());
        let nd_c: Vec<_> = gen.non_descendants("C").unwrap().iter().cloned().collect();
        assert_eq!(nd_c, vec!["A", "B"]);
    }

    #[test]
    fn genealogy_on_bell_graph() {
        let g = bell_graph();
        let gen = genealogy(&g);
        let pa_a: Vec<_> = gen.parents("A").unwrap().iter().cloned().collect();
        assert_eq!(pa_a, vec!["L", "X"]);
        let nd_a: Vec<_> = gen.non_descendants("A").unwrap().iter().cloned().collect();
        assert_eq!(nd_a, vec!["B", "L", "X", "Y"]);
    }

    #[test]
    fn genealogy_invariants_hold() {
        for g in [chain3(), collider3(), bell_graph()] {
            let gen = genealogy(&g);
            for node in g.nodes() {
                let v = node.name.as_str();
                let pa = gen.parents(v).unwrap();
                let an = gen.ancestors(v).unwrap();
                let de = gen.descendants(v).unwrap();
                let nd = gen.non_descendants(v).unwrap();
                assert!(pa.is_subset(an), "Pa({v}) not within An({v})");
                assert!(!an.contains(v) && !de.contains(v));
                assert!(an.is_disjoint(de), "acyclicity violated at {v}");
                assert_eq!(nd.len() + de.len() + 1, g.len());
                assert!(nd.is_disjoint(de));
            }
        }
    }

    #[test]
    fn chain_and_fork_block_on_the_middle_node() {
        let g = chain3();
        assert!(!g.d_separated(&["A"], &["C"], &[] as &[&str]).unwrap());
        assert!(g.d_separated(&["A"], &["C"], &["B"]).unwrap());
        let fork = Dag::build(
            vec![NodeId::observed("A"), NodeId::observed("B"), NodeId::observed("C")],
            &[("B", "A"), ("B", "C")],
        )
        .unwrap();
        assert!(!fork.d_separated(&["A"], &["C"], &[] as &[&str]).unwrap());
        assert!(fork.d_separated(&["A"], &["C"], &["B"]).unwrap());
    }

    #[test]
    fn collider_blocks_unless_activated() {
        let g = collider3();
        assert!(g.d_separated(&["A"], &["C"], &[] as &[&str]).unwrap());
        assert!(!g.d_separated(&["A"], &["C"], &["B"]).unwrap());

        // Activation through a descendant of the collider.
        let g = Dag::build(
            vec![
                NodeId::observed("A"),
                NodeId::observed("B"),
                NodeId::observed("C"),
                NodeId::observed("D"),
            ],
            &[("A", "B"), ("C", "B"), ("B", "D")],
        )
        .unwrap();
        assert!(g.d_separated(&["A"], &["C"], &[] as &[&str]).unwrap());
        assert!(!g.d_separated(&["A"], &["C"], &["D"]).unwrap());
    }

    #[test]
    fn bell_graph_separations() {
        let g = bell_graph();
        assert!(g.d_separated(&["A"], &["Y"], &["X"]).unwrap());
        assert!(g.d_separated(&["B"], &["X"], &["Y"]).unwrap());
        assert!(g.d_separated(&["X"], &["Y"], &[] as &[&str]).unwrap());
        // Outcomes stay dependent through the latent even given settings.
        assert!(!g.d_separated(&["A"], &["B"], &["X", "Y"]).unwrap());
        assert!(g.d_separated(&["A"], &["B"], &["X", "Y", "L"]).unwrap());
    }

    #[test]
    fn query_validation_errors() {
        let g = chain3();
        assert!(matches!(
            g.d_separated(&["A"], &["A"], &["B"]),
            Err(DagError::Disjointness(_))
        ));
        assert!(matches!(
            g.d_separated(&["A"], &["C"], &["C"]),
            Err(DagError::Disjointness(_))
        ));
        assert!(matches!(
            g.d_separated(&[] as &[&str], &["C"], &[] as &[&str]),
            Err(DagError::EmptySide)
        ));
        assert!(matches!(g.d_separated(&["A"], &["Q"], &[] as &[&str]), Err(DagError::UnknownNode(_))));
    }

    #[test]
    fn all_d_separations_on_small_graphs() {
        let empty2 = Dag::build(
            vec![NodeId::observed("A"), NodeId::observed("B")],
            &[] as &[(&str, &str)],
        )
        .unwrap();
        let seps = empty2.all_d_separations(&["A", "B"], TripleMode::FullSubsets).unwrap();
        assert_eq!(seps, vec![CiStatement::new(&["A"], &["B"], &[] as &[&str])]);

        let complete = Dag::build(
            vec![NodeId::observed("A"), NodeId::observed("B"), NodeId::observed("C")],
            &[("A", "B"), ("A", "C"), ("B", "C")],
        )
        .unwrap();
        assert!(complete.all_d_separations(&["A", "B", "C"], TripleMode::FullSubsets).unwrap().is_empty());

        let g = bell_graph();
        let seps = g.all_d_separations(&["A", "B", "X", "Y"], TripleMode::FullSubsets).unwrap();
        assert!(seps.contains(&CiStatement::new(&["A"], &["Y"], &["X"])));
        assert!(seps.contains(&CiStatement::new(&["B"], &["X"], &["Y"])));
        assert!(!seps.contains(&CiStatement::new(&["A"], &["B"], &["X", "Y"])));
    }

    #[test]
    fn d_separation_is_symmetric_in_sides() {
        let g = bell_graph();
        for stmt in canonical_triples(&["A", "B", "X", "Y", "L"], TripleMode::FullSubsets) {
            let fwd = g.d_separated(&stmt.s1, &stmt.s2, &stmt.z).unwrap();
            let rev = g.d_separated(&stmt.s2, &stmt.s1, &stmt.z).unwrap();
            assert_eq!(fwd, rev, "asymmetry on {stmt}");
        }
    }

    #[test]
    fn adding_an_edge_never_creates_a_separation() {
        // Monotonicity: separations of a graph are a superset of those of
        // any supergraph on the same nodes.
        let nodes = || {
            vec![
                NodeId::observed("A"),
                NodeId::observed("B"),
                NodeId::observed("C"),
                NodeId::observed("D"),
            ]
        };
        let base = Dag::build(nodes(), &[("A", "B"), ("C", "D")]).unwrap();
        let bigger = Dag::build(nodes(), &[("A", "B"), ("C", "D"), ("B", "C")]).unwrap();
        let names = ["A", "B", "C", "D"];
        let sep_base = base.all_d_separations(&names, TripleMode::FullSubsets).unwrap();
        let sep_big = bigger.all_d_separations(&names, TripleMode::FullSubsets).unwrap();
        for s in &sep_big {
            assert!(sep_base.contains(s), "supergraph separated {s} but base did not");
        }
    }
}
