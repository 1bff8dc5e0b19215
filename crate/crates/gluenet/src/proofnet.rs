//! Proof-structure graphs, switchings, correctness checks, and cycle search.
//!
//! A structure is the parse forest of a sequent plus the axiom links of a
//! linking. A switching keeps exactly one argument edge of every par vertex;
//! the structure is a net when every switching is acyclic and connected, and
//! a net with Mix when every switching is merely acyclic. Disjunctive-normal-
//! form structures admit a much faster check on the contracted block graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::logic::{Formula, Linking, Polarity, Sequent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetError {
    SwitchingBound { pars: usize, bound: usize },
    Acyclic,
    NotMdnf,
    InvalidCycle(String),
}

impl std::fmt::Display for NetError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NetError::SwitchingBound { pars, bound } => write!(
                f,
                "structure has {pars} par vertices; enumeration capped at {bound} \
                 (use the disjunctive-normal-form fast check)"
            ),
            NetError::Acyclic => write!(f, "structure has no switching cycle"),
            NetError::NotMdnf => write!(f, "sequent is not in disjunctive normal form"),
            NetError::InvalidCycle(msg) => write!(f, "invalid cycle: {msg}"),
        }
    }
}

impl std::error::Error for NetError {}

/// Default cap on enumerated par vertices (2^20 switchings).
pub const DEFAULT_PAR_BOUND: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Lit,
    Tensor,
    Par,
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    children: Option<(usize, usize)>,
    /// Formula index and child-step path from its root.
    formula: usize,
    path: Vec<u8>,
    occ: Option<u32>,
}

/// The parse forest of a sequent with axiom links attached to its leaves.
#[derive(Debug, Clone)]
pub struct StructureGraph {
    nodes: Vec<Node>,
    roots: Vec<usize>,
    leaf_of_occ: Vec<usize>,
    par_nodes: Vec<usize>,
    links: Vec<(u32, u32)>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Unites the two classes; false when they were already joined.
    fn unite(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

impl StructureGraph {
    pub fn new(sequent: &Sequent, linking: &Linking) -> StructureGraph {
        StructureGraph::with_links(sequent, linking.pairs().to_vec())
    }

    fn with_links(sequent: &Sequent, links: Vec<(u32, u32)>) -> StructureGraph {
        let mut nodes = Vec::new();
        let mut roots = Vec::new();
        let mut leaf_of_occ = vec![usize::MAX; sequent.literal_count() + 1];
        let mut par_nodes = Vec::new();
        let mut occ = 0u32;

        fn walk(
            f: &Formula,
            formula: usize,
            path: Vec<u8>,
            nodes: &mut Vec<Node>,
            leaf_of_occ: &mut [usize],
            par_nodes: &mut Vec<usize>,
            occ: &mut u32,
        ) -> usize {
            match f {
                Formula::Lit { .. } => {
                    *occ += 1;
                    let id = nodes.len();
                    nodes.push(Node {
                        kind: NodeKind::Lit,
                        children: None,
                        formula,
                        path,
                        occ: Some(*occ),
                    });
                    leaf_of_occ[*occ as usize] = id;
                    id
                }
                Formula::Tensor(l, r) | Formula::Par(l, r) => {
                    let kind = if matches!(f, Formula::Tensor(..)) {
                        NodeKind::Tensor
                    } else {
                        NodeKind::Par
                    };
                    let id = nodes.len();
                    nodes.push(Node {
                        kind,
                        children: None,
                        formula,
                        path: path.clone(),
                        occ: None,
                    });
                    let mut lp = path.clone();
                    lp.push(0);
                    let li = walk(l, formula, lp, nodes, leaf_of_occ, par_nodes, occ);
                    let mut rp = path;
                    rp.push(1);
                    let ri = walk(r, formula, rp, nodes, leaf_of_occ, par_nodes, occ);
                    nodes[id].children = Some((li, ri));
                    if kind == NodeKind::Par {
                        par_nodes.push(id);
                    }
                    id
                }
            }
        }

        for (k, formula) in sequent.formulas().iter().enumerate() {
            let root = walk(
                formula,
                k,
                vec![],
                &mut nodes,
                &mut leaf_of_occ,
                &mut par_nodes,
                &mut occ,
            );
            roots.push(root);
        }
        StructureGraph {
            nodes,
            roots,
            leaf_of_occ,
            par_nodes,
            links,
        }
    }

    /// The parse forest alone, with no axiom links; sufficient for tree-path
    /// queries.
    pub fn of_sequent(sequent: &Sequent) -> StructureGraph {
        StructureGraph::with_links(sequent, vec![])
    }

    pub fn par_count(&self) -> usize {
        self.par_nodes.len()
    }

    pub fn node_kind(&self, id: usize) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn leaf_of(&self, occ: u32) -> usize {
        self.leaf_of_occ[occ as usize]
    }

    /// The node at a formula index and child-step path, if any.
    pub fn node_by_path(&self, formula: usize, path: &[u8]) -> Option<usize> {
        let mut cur = *self.roots.get(formula)?;
        for &step in path {
            let (l, r) = self.nodes[cur].children?;
            cur = if step == 0 { l } else { r };
        }
        Some(cur)
    }

    pub fn children_of(&self, id: usize) -> Option<(usize, usize)> {
        self.nodes[id].children
    }

    /// Edges of one switching: parse edges with the discarded par argument
    /// removed, plus every axiom link.
    fn switching_edges(&self, mask: u64) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let Some((l, r)) = node.children else { continue };
            match node.kind {
                NodeKind::Tensor => {
                    edges.push((id, l));
                    edges.push((id, r));
                }
                NodeKind::Par => {
                    let k = self
                        .par_nodes
                        .iter()
                        .position(|&p| p == id)
                        .expect("par node registered");
                    let keep = if mask >> k & 1 == 0 { l } else { r };
                    edges.push((id, keep));
                }
                NodeKind::Lit => unreachable!(),
            }
        }
        for &(p, n) in &self.links {
            edges.push((self.leaf_of_occ[p as usize], self.leaf_of_occ[n as usize]));
        }
        edges
    }

    /// (acyclic, connected) for one switching.
    fn check_switching(&self, mask: u64) -> (bool, bool) {
        let mut uf = UnionFind::new(self.nodes.len());
        let mut acyclic = true;
        let mut components = self.nodes.len();
        for (a, b) in self.switching_edges(mask) {
            if uf.unite(a, b) {
                components -= 1;
            } else {
                acyclic = false;
            }
        }
        (acyclic, components == 1)
    }

    /// (every switching acyclic, every switching connected), by enumeration.
    pub fn switching_report(&self, par_bound: usize) -> Result<(bool, bool), NetError> {
        if self.par_nodes.len() > par_bound {
            return Err(NetError::SwitchingBound {
                pars: self.par_nodes.len(),
                bound: par_bound,
            });
        }
        let mut all_acyclic = true;
        let mut all_connected = true;
        for mask in 0..(1u64 << self.par_nodes.len()) {
            let (acyclic, connected) = self.check_switching(mask);
            all_acyclic &= acyclic;
            all_connected &= connected;
            if !all_acyclic && !all_connected {
                break;
            }
        }
        Ok((all_acyclic, all_connected))
    }

    /// The vertex partition induced by one switching, as node-id classes.
    pub fn components(&self, mask: u64) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.nodes.len());
        for (a, b) in self.switching_edges(mask) {
            uf.unite(a, b);
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for id in 0..self.nodes.len() {
            classes.entry(uf.find(id)).or_default().push(id);
        }
        classes.into_values().collect()
    }
}

/// Danos-Regnier correctness: every switching acyclic and connected.
pub fn is_mll_net(
    sequent: &Sequent,
    linking: &Linking,
    par_bound: usize,
) -> Result<bool, NetError> {
    let graph = StructureGraph::new(sequent, linking);
    let (acyclic, connected) = graph.switching_report(par_bound)?;
    Ok(acyclic && connected)
}

/// Correctness with Mix: every switching acyclic, connectivity dropped.
pub fn is_mix_net(
    sequent: &Sequent,
    linking: &Linking,
    par_bound: usize,
) -> Result<bool, NetError> {
    let graph = StructureGraph::new(sequent, linking);
    let (acyclic, _) = graph.switching_report(par_bound)?;
    Ok(acyclic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Mll,
    Mix,
}

/// The contracted block graph of a disjunctive-normal-form structure:
/// vertices are blocks, edges are axiom links as `(block, block, link)`.
pub fn block_graph(
    sequent: &Sequent,
    linking: &Linking,
) -> Result<(usize, Vec<(usize, usize, (u32, u32))>), NetError> {
    let block_of = sequent.block_of_occurrence().map_err(|_| NetError::NotMdnf)?;
    let blocks = sequent.blocks().map_err(|_| NetError::NotMdnf)?;
    let edges = linking
        .pairs()
        .iter()
        .map(|&(p, n)| (block_of[p as usize], block_of[n as usize], (p, n)))
        .collect();
    Ok((blocks.len(), edges))
}

/// The fast correctness check for disjunctive-normal-form structures: the
/// block graph must be a tree (plain) or a forest (with Mix).
pub fn mdnf_fast_check(
    sequent: &Sequent,
    linking: &Linking,
    mode: CheckMode,
) -> Result<bool, NetError> {
    let (block_count, edges) = block_graph(sequent, linking)?;
    let mut uf = UnionFind::new(block_count);
    let mut components = block_count;
    for (a, b, _) in edges {
        if a == b {
            return Ok(false);
        }
        if uf.unite(a, b) {
            components -= 1;
        } else {
            return Ok(false);
        }
    }
    Ok(match mode {
        CheckMode::Mll => components == 1,
        CheckMode::Mix => true,
    })
}

/// Connected components of the block graph, each a sorted list of block
/// indices.
pub fn block_components(
    sequent: &Sequent,
    linking: &Linking,
) -> Result<Vec<Vec<usize>>, NetError> {
    let (block_count, edges) = block_graph(sequent, linking)?;
    let mut uf = UnionFind::new(block_count);
    for (a, b, _) in edges {
        uf.unite(a, b);
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for b in 0..block_count {
        classes.entry(uf.find(b)).or_default().push(b);
    }
    Ok(classes.into_values().collect())
}

/// A switching cycle, stored as directed link traversals in cyclic order:
/// the cycle runs from `links[k].0` across that axiom link to `links[k].1`,
/// then through the parse forest to `links[k+1].0`, wrapping at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingCycle {
    pub links: Vec<(u32, u32)>,
}

impl SwitchingCycle {
    /// The unordered pair set, sorted, used for tie-breaking and comparison.
    pub fn sorted_pairs(&self) -> Vec<(u32, u32)> {
        let mut pairs: Vec<(u32, u32)> = self
            .links
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        pairs.sort();
        pairs
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Applies an occurrence permutation to every traversal endpoint.
    pub fn transport(&self, map: &[u32]) -> SwitchingCycle {
        SwitchingCycle {
            links: self
                .links
                .iter()
                .map(|&(a, b)| (map[a as usize], map[b as usize]))
                .collect(),
        }
    }
}

/// The unique tree path between two leaves of the parse forest, as node ids
/// including both endpoints. Errors when the leaves live in different
/// formulas or the path would have to cross a par vertex between its two
/// children (which no switching allows).
pub fn tree_path(
    graph: &StructureGraph,
    from_occ: u32,
    to_occ: u32,
) -> Result<Vec<usize>, NetError> {
    let a = graph.leaf_of(from_occ);
    let b = graph.leaf_of(to_occ);
    if graph.nodes[a].formula != graph.nodes[b].formula {
        return Err(NetError::InvalidCycle(format!(
            "occurrences {from_occ} and {to_occ} lie in different formulas"
        )));
    }
    if a == b {
        return Ok(vec![a]);
    }
    // Walk ancestor chains via stored paths.
    let pa = &graph.nodes[a].path;
    let pb = &graph.nodes[b].path;
    let common = pa.iter().zip(pb.iter()).take_while(|(x, y)| x == y).count();
    let root = graph.roots[graph.nodes[a].formula];
    let node_at = |path: &[u8]| -> usize {
        let mut cur = root;
        for &step in path {
            let (l, r) = graph.nodes[cur].children.expect("path stays inside the tree");
            cur = if step == 0 { l } else { r };
        }
        cur
    };
    let lca = node_at(&pa[..common]);
    if graph.nodes[lca].kind == NodeKind::Par && a != lca && b != lca {
        return Err(NetError::InvalidCycle(format!(
            "path between {from_occ} and {to_occ} crosses a par vertex between its arguments"
        )));
    }
    let mut up = Vec::new();
    for k in (common..pa.len()).rev() {
        up.push(node_at(&pa[..=k]));
    }
    up.push(lca);
    for k in common..pb.len() {
        up.push(node_at(&pb[..=k]));
    }
    Ok(up)
}

impl SwitchingCycle {
    /// All parse-forest vertices the cycle crosses, per tree segment.
    pub fn segment_vertices(&self, graph: &StructureGraph) -> Result<Vec<Vec<usize>>, NetError> {
        let mut segments = Vec::new();
        for k in 0..self.links.len() {
            let to = self.links[k].1;
            let from = self.links[(k + 1) % self.links.len()].0;
            segments.push(tree_path(graph, to, from)?);
        }
        Ok(segments)
    }

    /// Par vertices crossed anywhere along the cycle.
    pub fn par_vertices(&self, graph: &StructureGraph) -> Result<Vec<usize>, NetError> {
        let mut pars = Vec::new();
        for segment in self.segment_vertices(graph)? {
            for id in segment {
                if graph.node_kind(id) == NodeKind::Par && !pars.contains(&id) {
                    pars.push(id);
                }
            }
        }
        Ok(pars)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EdgeLabel {
    Tree,
    Link(usize),
}

/// A cycle of minimum axiom-link count over all switchings; ties broken by
/// the lexicographic order of the sorted occurrence pairs. Errors when every
/// switching is acyclic.
pub fn find_minimal_cycle(
    sequent: &Sequent,
    linking: &Linking,
    par_bound: usize,
) -> Result<SwitchingCycle, NetError> {
    let graph = StructureGraph::new(sequent, linking);
    if graph.par_nodes.len() > par_bound {
        return Err(NetError::SwitchingBound {
            pars: graph.par_nodes.len(),
            bound: par_bound,
        });
    }
    let links = &graph.links;
    let mut best: Option<SwitchingCycle> = None;

    for mask in 0..(1u64 << graph.par_nodes.len()) {
        // Adjacency with labeled edges for this switching.
        let mut adj: Vec<Vec<(usize, EdgeLabel)>> = vec![vec![]; graph.nodes.len()];
        for (id, node) in graph.nodes.iter().enumerate() {
            let Some((l, r)) = node.children else { continue };
            match node.kind {
                NodeKind::Tensor => {
                    for c in [l, r] {
                        adj[id].push((c, EdgeLabel::Tree));
                        adj[c].push((id, EdgeLabel::Tree));
                    }
                }
                NodeKind::Par => {
                    let k = graph.par_nodes.iter().position(|&p| p == id).unwrap();
                    let keep = if mask >> k & 1 == 0 { l } else { r };
                    adj[id].push((keep, EdgeLabel::Tree));
                    adj[keep].push((id, EdgeLabel::Tree));
                }
                NodeKind::Lit => {}
            }
        }
        for (e, &(p, n)) in links.iter().enumerate() {
            let (a, b) = (graph.leaf_of(p), graph.leaf_of(n));
            adj[a].push((b, EdgeLabel::Link(e)));
            adj[b].push((a, EdgeLabel::Link(e)));
        }

        // For each link, the fewest-link path between its endpoints that
        // avoids the link itself closes a candidate minimal cycle.
        for (e, &(p, n)) in links.iter().enumerate() {
            let start = graph.leaf_of(n);
            let goal = graph.leaf_of(p);
            // 0-1 BFS over link weights.
            let mut dist = vec![usize::MAX; graph.nodes.len()];
            let mut prev: Vec<Option<(usize, EdgeLabel)>> = vec![None; graph.nodes.len()];
            let mut queue = std::collections::VecDeque::new();
            dist[start] = 0;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &(w, label) in &adj[v] {
                    if label == EdgeLabel::Link(e) {
                        continue;
                    }
                    let weight = usize::from(matches!(label, EdgeLabel::Link(_)));
                    if dist[v] + weight < dist[w] {
                        dist[w] = dist[v] + weight;
                        prev[w] = Some((v, label));
                        if weight == 0 {
                            queue.push_front(w);
                        } else {
                            queue.push_back(w);
                        }
                    }
                }
            }
            if dist[goal] == usize::MAX {
                continue;
            }
            // Reconstruct traversed links from goal back to start.
            let mut travelled: Vec<(u32, u32)> = Vec::new();
            let mut cur = goal;
            while let Some((v, label)) = prev[cur] {
                if let EdgeLabel::Link(idx) = label {
                    let (lp, ln) = links[idx];
                    // Direction: from v to cur.
                    let from = graph.nodes[v].occ.unwrap();
                    let to = graph.nodes[cur].occ.unwrap();
                    debug_assert!((from, to) == (lp, ln) || (to, from) == (lp, ln));
                    travelled.push((from, to));
                }
                cur = v;
            }
            // The path ran start -> goal; reversing the backtrace gives the
            // forward order. Close with link e traversed p -> n.
            travelled.reverse();
            let mut cycle_links = vec![(p, n)];
            cycle_links.extend(travelled);
            let candidate = SwitchingCycle { links: cycle_links };
            let better = match &best {
                None => true,
                Some(b) => {
                    candidate.link_count() < b.link_count()
                        || (candidate.link_count() == b.link_count()
                            && candidate.sorted_pairs() < b.sorted_pairs())
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best.ok_or(NetError::Acyclic)
}

/// DOT rendering of a structure: blocks boxed when the sequent is in
/// disjunctive normal form, axiom links drawn as arcs above the sequent.
pub fn to_dot(sequent: &Sequent, linking: &Linking) -> String {
    let graph = StructureGraph::new(sequent, linking);
    let occs = sequent.occurrences();
    let mut out = String::new();
    let _ = writeln!(out, "graph structure {{");
    let _ = writeln!(out, "  rankdir=TB;");
    for (id, node) in graph.nodes.iter().enumerate() {
        let label = match node.kind {
            NodeKind::Tensor => "*".to_string(),
            NodeKind::Par => "|".to_string(),
            NodeKind::Lit => {
                let occ = node.occ.unwrap();
                let o = &occs[(occ - 1) as usize];
                let neg = if o.polarity == Polarity::Neg { "~" } else { "" };
                format!("{neg}{} [{occ}]", o.atom)
            }
        };
        let shape = if node.kind == NodeKind::Lit {
            "box"
        } else {
            "circle"
        };
        let _ = writeln!(out, "  n{id} [label=\"{label}\", shape={shape}];");
    }
    if let Ok(blocks) = sequent.blocks() {
        for (b, occs_in_block) in blocks.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_block{b} {{");
            let _ = writeln!(out, "    label=\"block {}\";", b + 1);
            for &o in occs_in_block {
                let _ = writeln!(out, "    n{};", graph.leaf_of(o));
            }
            let _ = writeln!(out, "  }}");
        }
    }
    for (id, node) in graph.nodes.iter().enumerate() {
        if let Some((l, r)) = node.children {
            let _ = writeln!(out, "  n{id} -- n{l};");
            let _ = writeln!(out, "  n{id} -- n{r};");
        }
    }
    for &(p, n) in linking.pairs() {
        let _ = writeln!(
            out,
            "  n{} -- n{} [constraint=false, style=bold, color=blue];",
            graph.leaf_of(p),
            graph.leaf_of(n)
        );
    }
    let _ = writeln!(out, "}}");
    out
}
