//! Store-and-forward networks and simultaneous multicast instances.
//!
//! A [`MulticastInstance`] is a simple undirected [`Graph`] plus an ordered
//! list of rooted [`MulticastTree`]s. Every tree carries one message (its
//! message id is its tree id) that starts at the root and must reach every
//! leaf. Trees are stored through parent pointers, so "rooted" is structural
//! and root-to-leaf walks are O(depth).

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identifier of a multicast tree. The tree's message shares this id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeId(pub u32);

impl fmt::Display for TreeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// Index of an edge in [`Graph::edges`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An undirected edge, stored with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: NodeId,
    hi: NodeId,
}

impl Edge {
    /// Normalizes the endpoint order. Returns `None` for a self-loop.
    pub fn new(a: NodeId, b: NodeId) -> Option<Edge> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(Edge { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn lo(self) -> NodeId {
        self.lo
    }

    pub fn hi(self) -> NodeId {
        self.hi
    }

    pub fn other(self, v: NodeId) -> NodeId {
        if v == self.lo {
            self.hi
        } else {
            self.lo
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.lo, self.hi)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("edge {0}-{1} is a self-loop")]
    SelfLoop(u32, u32),
    #[error("edge {0}-{1} has an endpoint outside [0, {2})")]
    EdgeOutOfRange(u32, u32, u32),
    #[error("edge {0} appears more than once")]
    DuplicateEdge(Edge),
    #[error("tree {tree}: {reason}")]
    Tree { tree: TreeId, reason: TreeError },
    #[error("tree id {0} is used by more than one tree")]
    DuplicateTreeId(TreeId),
    #[error("tree {tree} uses edge {parent}-{child}, which is not in the graph")]
    MissingEdge { tree: TreeId, child: NodeId, parent: NodeId },
    #[error("tree {tree} mentions node {node}, outside the graph")]
    NodeOutOfRange { tree: TreeId, node: NodeId },
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0} is its own parent")]
    SelfParent(NodeId),
    #[error("the root {0} has a parent")]
    RootHasParent(NodeId),
    #[error("node {0} has two parents")]
    DuplicateChild(NodeId),
    #[error("nodes {0:?} are not connected to the root (cycle or detached component)")]
    Unreachable(Vec<NodeId>),
}

/// Simple undirected graph with dense node ids.
#[derive(Clone, Debug)]
pub struct Graph {
    node_count: u32,
    edges: Vec<Edge>,
    index: HashMap<Edge, EdgeId>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph, rejecting self-loops, parallel edges and endpoints
    /// outside `[0, node_count)`.
    pub fn new(
        node_count: u32,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Graph, InstanceError> {
        let mut list = Vec::new();
        let mut seen = HashSet::new();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(InstanceError::EdgeOutOfRange(a, b, node_count));
            }
            let e = Edge::new(NodeId(a), NodeId(b)).ok_or(InstanceError::SelfLoop(a, b))?;
            if !seen.insert(e) {
                return Err(InstanceError::DuplicateEdge(e));
            }
            list.push(e);
        }
        list.sort_unstable();
        Ok(Self::from_sorted(node_count, list))
    }

    fn from_sorted(node_count: u32, edges: Vec<Edge>) -> Graph {
        let mut index = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); node_count as usize];
        for (i, e) in edges.iter().enumerate() {
            let id = EdgeId(i as u32);
            index.insert(*e, id);
            adjacency[e.lo.index()].push((e.hi, id));
            adjacency[e.hi.index()].push((e.lo, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph { node_count, edges, index, adjacency }
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in sorted order; position = [`EdgeId`].
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id.index()]
    }

    pub fn edge_id(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        Edge::new(a, b).and_then(|e| self.index.get(&e).copied())
    }

    /// Neighbors of `v` sorted by node id, with the connecting edge.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[v.index()]
    }

    /// Same edges, more isolated nodes.
    pub fn with_node_count(&self, node_count: u32) -> Graph {
        assert!(node_count >= self.node_count);
        Self::from_sorted(node_count, self.edges.clone())
    }
}

const NO_PARENT: u32 = u32::MAX;

/// A rooted tree over graph nodes, stored as parent pointers.
///
/// Nodes are kept in BFS order from the root; "local" indices refer to that
/// order and are what the schedulers work with internally.
#[derive(Clone, Debug)]
pub struct MulticastTree {
    id: TreeId,
    nodes: Vec<NodeId>,
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    children: Vec<u32>,
    by_node: Vec<(NodeId, u32)>,
    max_depth: u32,
}

impl PartialEq for MulticastTree {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.parent_map() == other.parent_map() && self.root() == other.root()
    }
}

impl Eq for MulticastTree {}

impl MulticastTree {
    /// Builds a tree from `(child, parent)` pairs. The pairs must describe a
    /// tree hanging from `root`; anything else is rejected.
    pub fn from_parent_map(
        id: TreeId,
        root: NodeId,
        parent_of: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<MulticastTree, TreeError> {
        let mut seen_child = HashSet::new();
        let mut kids: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        let mut entries = 0usize;
        for (child, parent) in parent_of {
            if child == parent {
                return Err(TreeError::SelfParent(child));
            }
            if child == root {
                return Err(TreeError::RootHasParent(root));
            }
            if !seen_child.insert(child) {
                return Err(TreeError::DuplicateChild(child));
            }
            kids.entry(parent).or_default().push(child);
            entries += 1;
        }
        for list in kids.values_mut() {
            list.sort_unstable();
        }

        let mut nodes = Vec::with_capacity(entries + 1);
        let mut parent = Vec::with_capacity(entries + 1);
        let mut depth = Vec::with_capacity(entries + 1);
        let mut child_start = Vec::with_capacity(entries + 2);
        let mut children = Vec::with_capacity(entries);
        nodes.push(root);
        parent.push(NO_PARENT);
        depth.push(0);
        let mut head = 0usize;
        while head < nodes.len() {
            let v = nodes[head];
            child_start.push(children.len() as u32);
            if let Some(list) = kids.get(&v) {
                for &c in list {
                    children.push(nodes.len() as u32);
                    nodes.push(c);
                    parent.push(head as u32);
                    depth.push(depth[head] + 1);
                }
            }
            head += 1;
        }
        child_start.push(children.len() as u32);

        if nodes.len() != entries + 1 {
            let reached: HashSet<NodeId> = nodes.iter().copied().collect();
            let mut missing: Vec<NodeId> =
                seen_child.into_iter().filter(|c| !reached.contains(c)).collect();
            missing.sort_unstable();
            return Err(TreeError::Unreachable(missing));
        }

        let mut by_node: Vec<(NodeId, u32)> =
            nodes.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        by_node.sort_unstable();
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        Ok(MulticastTree { id, nodes, parent, depth, child_start, children, by_node, max_depth })
    }

    /// A path `nodes[0] -> nodes[1] -> ...` rooted at `nodes[0]`.
    pub fn path(id: TreeId, nodes: &[NodeId]) -> Result<MulticastTree, TreeError> {
        assert!(!nodes.is_empty());
        Self::from_parent_map(id, nodes[0], nodes.windows(2).map(|w| (w[1], w[0])))
    }

    pub fn id(&self) -> TreeId {
        self.id
    }

    /// The message this tree multicasts; equal to the tree id.
    pub fn message(&self) -> TreeId {
        self.id
    }

    pub fn root(&self) -> NodeId {
        self.nodes[0]
    }

    /// Number of tree nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Depth of the deepest node (0 for a single-node tree).
    pub fn depth(&self) -> u32 {
        self.max_depth
    }

    /// Nodes in BFS order; position = local index.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, local: usize) -> NodeId {
        self.nodes[local]
    }

    pub fn local_index(&self, v: NodeId) -> Option<usize> {
        self.by_node
            .binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| self.by_node[i].1 as usize)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.local_index(v).is_some()
    }

    #[inline]
    pub fn parent_local(&self, local: usize) -> Option<usize> {
        match self.parent[local] {
            NO_PARENT => None,
            p => Some(p as usize),
        }
    }

    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.local_index(v).and_then(|l| self.parent_local(l)).map(|p| self.nodes[p])
    }

    #[inline]
    pub fn depth_local(&self, local: usize) -> u32 {
        self.depth[local]
    }

    pub fn depth_of(&self, v: NodeId) -> Option<u32> {
        self.local_index(v).map(|l| self.depth[l])
    }

    /// Children of a local node (local indices, ascending by node id).
    #[inline]
    pub fn children_local(&self, local: usize) -> &[u32] {
        let s = self.child_start[local] as usize;
        let e = self.child_start[local + 1] as usize;
        &self.children[s..e]
    }

    pub fn is_leaf_local(&self, local: usize) -> bool {
        self.children_local(local).is_empty()
    }

    /// Local indices of the leaves. A single-node tree's root is its leaf.
    pub fn leaves_local(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&l| self.is_leaf_local(l))
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.leaves_local().map(|l| self.nodes[l]).collect();
        out.sort_unstable();
        out
    }

    /// Tree edges as `(parent, child)` in BFS order of the child.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (1..self.nodes.len()).map(move |l| (self.nodes[self.parent[l] as usize], self.nodes[l]))
    }

    pub fn parent_map(&self) -> BTreeMap<NodeId, NodeId> {
        self.edges().map(|(p, c)| (c, p)).collect()
    }

    /// Local indices in an order where every child precedes its parent.
    pub fn post_order_locals(&self) -> impl Iterator<Item = usize> {
        (0..self.nodes.len()).rev()
    }

    /// Subtree sizes (counting the node itself), indexed by local index.
    pub fn subtree_sizes(&self) -> Vec<u32> {
        let mut size = vec![1u32; self.nodes.len()];
        for l in self.post_order_locals() {
            if let Some(p) = self.parent_local(l) {
                size[p] += size[l];
            }
        }
        size
    }

    /// Heights (edges to the deepest descendant), indexed by local index.
    pub fn heights(&self) -> Vec<u32> {
        let mut h = vec![0u32; self.nodes.len()];
        for l in self.post_order_locals() {
            if let Some(p) = self.parent_local(l) {
                h[p] = h[p].max(h[l] + 1);
            }
        }
        h
    }

    /// Local indices on the walk from the root down to `local`, root first.
    pub fn walk_from_root(&self, local: usize) -> Vec<usize> {
        let mut walk = vec![local];
        let mut cur = local;
        while let Some(p) = self.parent_local(cur) {
            walk.push(p);
            cur = p;
        }
        walk.reverse();
        walk
    }
}

/// Congestion, dilation and node count of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub congestion: u32,
    pub dilation: u32,
    pub node_count: u32,
}

/// A host graph plus an ordered list of multicast trees over it.
#[derive(Clone, Debug)]
pub struct MulticastInstance {
    graph: Graph,
    trees: Vec<MulticastTree>,
    /// Per tree, per local node: the graph edge to the parent (root slot unused).
    parent_edges: Vec<Vec<EdgeId>>,
    tree_index: HashMap<TreeId, usize>,
}

impl PartialEq for MulticastInstance {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph && self.trees == other.trees
    }
}

impl Eq for MulticastInstance {}

impl MulticastInstance {
    pub fn new(graph: Graph, trees: Vec<MulticastTree>) -> Result<Self, InstanceError> {
        let mut tree_index = HashMap::with_capacity(trees.len());
        let mut parent_edges = Vec::with_capacity(trees.len());
        for (i, t) in trees.iter().enumerate() {
            if tree_index.insert(t.id(), i).is_some() {
                return Err(InstanceError::DuplicateTreeId(t.id()));
            }
            let mut pe = Vec::with_capacity(t.len());
            if t.root().0 >= graph.node_count() {
                return Err(InstanceError::NodeOutOfRange { tree: t.id(), node: t.root() });
            }
            pe.push(EdgeId(u32::MAX));
            for l in 1..t.len() {
                let child = t.node(l);
                let parent = t.node(t.parent_local(l).expect("non-root has a parent"));
                if child.0 >= graph.node_count() {
                    return Err(InstanceError::NodeOutOfRange { tree: t.id(), node: child });
                }
                let e = graph.edge_id(child, parent).ok_or(InstanceError::MissingEdge {
                    tree: t.id(),
                    child,
                    parent,
                })?;
                pe.push(e);
            }
            parent_edges.push(pe);
        }
        Ok(MulticastInstance { graph, trees, parent_edges, tree_index })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn trees(&self) -> &[MulticastTree] {
        &self.trees
    }

    pub fn tree(&self, index: usize) -> &MulticastTree {
        &self.trees[index]
    }

    pub fn tree_index(&self, id: TreeId) -> Option<usize> {
        self.tree_index.get(&id).copied()
    }

    pub fn node_count(&self) -> u32 {
        self.graph.node_count()
    }

    /// Graph edge between `local` and its parent in tree `tree`.
    #[inline]
    pub fn parent_edge(&self, tree: usize, local: usize) -> EdgeId {
        debug_assert!(local > 0);
        self.parent_edges[tree][local]
    }

    /// Number of trees using each graph edge, indexed by [`EdgeId`].
    pub fn edge_loads(&self) -> Vec<u32> {
        let mut load = vec![0u32; self.graph.edge_count()];
        for pe in &self.parent_edges {
            for e in &pe[1..] {
                load[e.index()] += 1;
            }
        }
        load
    }

    /// Trees (by index) using each edge, indexed by [`EdgeId`]; ascending.
    pub fn trees_on_edges(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.graph.edge_count()];
        for (t, pe) in self.parent_edges.iter().enumerate() {
            for e in &pe[1..] {
                out[e.index()].push(t as u32);
            }
        }
        out
    }

    pub fn metrics(&self) -> InstanceMetrics {
        compute_metrics(self)
    }

    /// Same graph and trees plus isolated nodes up to `node_count`.
    pub fn with_node_count(&self, node_count: u32) -> MulticastInstance {
        MulticastInstance {
            graph: self.graph.with_node_count(node_count),
            trees: self.trees.clone(),
            parent_edges: self.parent_edges.clone(),
            tree_index: self.tree_index.clone(),
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.graph.node_count(),
            edges: self.graph.edges().iter().map(|e| [e.lo.0, e.hi.0]).collect(),
            trees: self
                .trees
                .iter()
                .map(|t| TreeFile {
                    id: t.id().0,
                    root: t.root().0,
                    parent: t.edges().map(|(p, c)| (c.0, p.0)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &InstanceFile) -> Result<MulticastInstance, InstanceError> {
        let report = validate_instance(file);
        if !report.is_valid() {
            return Err(InstanceError::Invalid(report));
        }
        let graph = Graph::new(file.n, file.edges.iter().map(|e| (e[0], e[1])))?;
        let trees = file
            .trees
            .iter()
            .map(|t| {
                MulticastTree::from_parent_map(
                    TreeId(t.id),
                    NodeId(t.root),
                    t.parent.iter().map(|(&c, &p)| (NodeId(c), NodeId(p))),
                )
                .map_err(|reason| InstanceError::Tree { tree: TreeId(t.id), reason })
            })
            .collect::<Result<Vec<_>, _>>()?;
        MulticastInstance::new(graph, trees)
    }

    /// Canonical compact JSON: edges sorted, parent keys sorted.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<MulticastInstance, crate::Error> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Ok(MulticastInstance::from_file(&file)?)
    }
}

/// Congestion `C = max_e |{T : e ∈ T}|`, dilation `D = max_T depth(T)`.
pub fn compute_metrics(instance: &MulticastInstance) -> InstanceMetrics {
    let congestion = instance.edge_loads().into_iter().max().unwrap_or(0);
    let dilation = instance.trees().iter().map(|t| t.depth()).max().unwrap_or(0);
    InstanceMetrics { congestion, dilation, node_count: instance.node_count() }
}

/// On-disk instance format.
///
/// `{"n": int, "edges": [[u,v],...], "trees": [{"id": int, "root": int,
/// "parent": {"child": parent, ...}}, ...]}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: u32,
    pub edges: Vec<[u32; 2]>,
    pub trees: Vec<TreeFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeFile {
    pub id: u32,
    pub root: u32,
    pub parent: BTreeMap<u32, u32>,
}

/// One violated invariant found by [`validate_instance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    SelfLoop { edge: [u32; 2] },
    EdgeOutOfRange { edge: [u32; 2] },
    DuplicateEdge { edge: [u32; 2] },
    DuplicateTreeId { tree: u32 },
    NodeOutOfRange { tree: u32, node: u32 },
    SelfParent { tree: u32, node: u32 },
    RootHasParent { tree: u32, root: u32 },
    MissingEdge { tree: u32, child: u32, parent: u32 },
    /// Nodes with a parent entry that never reach the root: a cycle or a
    /// detached component.
    NotATree { tree: u32, nodes: Vec<u32> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { edge } => write!(f, "edge {}-{} is a self-loop", edge[0], edge[1]),
            Violation::EdgeOutOfRange { edge } => {
                write!(f, "edge {}-{} has an endpoint outside the graph", edge[0], edge[1])
            }
            Violation::DuplicateEdge { edge } => {
                write!(f, "edge {}-{} is listed more than once", edge[0], edge[1])
            }
            Violation::DuplicateTreeId { tree } => write!(f, "tree id {tree} is used twice"),
            Violation::NodeOutOfRange { tree, node } => {
                write!(f, "tree {tree}: node {node} is outside the graph")
            }
            Violation::SelfParent { tree, node } => {
                write!(f, "tree {tree}: node {node} is its own parent")
            }
            Violation::RootHasParent { tree, root } => {
                write!(f, "tree {tree}: root {root} has a parent entry")
            }
            Violation::MissingEdge { tree, child, parent } => {
                write!(f, "tree {tree}: edge {parent}-{child} is not in the graph")
            }
            Violation::NotATree { tree, nodes } => {
                write!(f, "tree {tree}: nodes {nodes:?} do not reach the root (cycle or disconnected)")
            }
        }
    }
}

/// Every violation found in an instance file; empty iff the file is valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every instance invariant on the raw file form and reports all
/// violations rather than stopping at the first.
pub fn validate_instance(file: &InstanceFile) -> ValidationReport {
    let mut violations = Vec::new();
    let n = file.n;
    let mut edges = HashSet::new();
    for e in &file.edges {
        let [a, b] = *e;
        if a == b {
            violations.push(Violation::SelfLoop { edge: *e });
        } else if a >= n || b >= n {
            violations.push(Violation::EdgeOutOfRange { edge: *e });
        } else if !edges.insert((a.min(b), a.max(b))) {
            violations.push(Violation::DuplicateEdge { edge: *e });
        }
    }

    let mut ids = HashSet::new();
    for t in &file.trees {
        if !ids.insert(t.id) {
            violations.push(Violation::DuplicateTreeId { tree: t.id });
        }
        if t.root >= n {
            violations.push(Violation::NodeOutOfRange { tree: t.id, node: t.root });
        }
        for (&c, &p) in &t.parent {
            for v in [c, p] {
                if v >= n {
                    violations.push(Violation::NodeOutOfRange { tree: t.id, node: v });
                }
            }
            if c == p {
                violations.push(Violation::SelfParent { tree: t.id, node: c });
            } else if !edges.contains(&(c.min(p), c.max(p))) && c < n && p < n {
                violations.push(Violation::MissingEdge { tree: t.id, child: c, parent: p });
            }
        }
        if t.parent.contains_key(&t.root) {
            violations.push(Violation::RootHasParent { tree: t.id, root: t.root });
        }
        // Walk every node up towards the root; anything that loops or ends
        // elsewhere is not part of the rooted tree.
        let mut reaches_root: HashMap<u32, bool> = HashMap::new();
        reaches_root.insert(t.root, true);
        for &start in t.parent.keys() {
            let mut trail = Vec::new();
            let mut on_trail = HashSet::new();
            let mut cur = start;
            let verdict = loop {
                if let Some(&known) = reaches_root.get(&cur) {
                    break known;
                }
                if !on_trail.insert(cur) {
                    break false;
                }
                trail.push(cur);
                match t.parent.get(&cur) {
                    Some(&p) if p != cur => cur = p,
                    _ => break false,
                }
            };
            for v in trail {
                reaches_root.insert(v, verdict);
            }
        }
        let bad: Vec<u32> =
            t.parent.keys().copied().filter(|c| !reaches_root.get(c).copied().unwrap_or(false)).collect();
        if !bad.is_empty() {
            violations.push(Violation::NotATree { tree: t.id, nodes: bad });
        }
    }
    ValidationReport { violations }
}

/// `(child, parent)` pairs of a BFS tree from `root` over `adjacency`.
pub(crate) fn bfs_tree_from(
    root: NodeId,
    adjacency: &HashMap<NodeId, Vec<NodeId>>,
) -> Vec<(NodeId, NodeId)> {
    let mut parent = Vec::new();
    let mut seen = HashSet::new();
    seen.insert(root);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        if let Some(list) = adjacency.get(&v) {
            for &u in list {
                if seen.insert(u) {
                    parent.push((u, v));
                    queue.push_back(u);
                }
            }
        }
    }
    parent
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn congested_edge_instance() -> MulticastInstance {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let trees = (0..2)
            .map(|i| MulticastTree::path(TreeId(i), &[NodeId(0), NodeId(1)]).unwrap())
            .collect();
        MulticastInstance::new(g, trees).unwrap()
    }

    #[test]
    fn congested_edge_metrics() {
        let m = compute_metrics(&congested_edge_instance());
        assert_eq!((m.congestion, m.dilation), (2, 1));
    }

    #[test]
    fn single_path_metrics() {
        let g = Graph::new(6, (0..5).map(|i| (i, i + 1))).unwrap();
        let nodes: Vec<NodeId> = (0..6).map(NodeId).collect();
        let t = MulticastTree::path(TreeId(0), &nodes).unwrap();
        let inst = MulticastInstance::new(g, vec![t]).unwrap();
        let m = compute_metrics(&inst);
        assert_eq!((m.congestion, m.dilation, m.node_count), (1, 5, 6));
    }

    #[test]
    fn empty_and_trivial_trees() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let t = MulticastTree::from_parent_map(TreeId(4), NodeId(2), []).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.leaves(), vec![NodeId(2)]);
        let inst = MulticastInstance::new(g, vec![t]).unwrap();
        let m = compute_metrics(&inst);
        assert_eq!((m.congestion, m.dilation), (0, 0));
    }

    #[test]
    fn tree_structure() {
        // 5 -> {3, 7}, 3 -> {1}
        let t = MulticastTree::from_parent_map(
            TreeId(0),
            NodeId(5),
            [(NodeId(7), NodeId(5)), (NodeId(3), NodeId(5)), (NodeId(1), NodeId(3))],
        )
        .unwrap();
        assert_eq!(t.root(), NodeId(5));
        assert_eq!(t.nodes(), &[NodeId(5), NodeId(3), NodeId(7), NodeId(1)]);
        assert_eq!(t.depth_of(NodeId(1)), Some(2));
        assert_eq!(t.parent_of(NodeId(1)), Some(NodeId(3)));
        assert_eq!(t.leaves(), vec![NodeId(1), NodeId(7)]);
        assert_eq!(t.subtree_sizes(), vec![4, 2, 1, 1]);
        assert_eq!(t.heights(), vec![2, 1, 0, 0]);
        assert_eq!(t.walk_from_root(3), vec![0, 1, 3]);
    }

    #[test]
    fn tree_rejections() {
        let two_cycle = MulticastTree::from_parent_map(
            TreeId(0),
            NodeId(0),
            [(NodeId(1), NodeId(2)), (NodeId(2), NodeId(1))],
        );
        assert!(matches!(two_cycle, Err(TreeError::Unreachable(_))));
        let root_parent =
            MulticastTree::from_parent_map(TreeId(0), NodeId(0), [(NodeId(0), NodeId(1))]);
        assert!(matches!(root_parent, Err(TreeError::RootHasParent(_))));
    }

    #[test]
    fn graph_rejections() {
        assert!(matches!(Graph::new(2, [(1, 1)]), Err(InstanceError::SelfLoop(1, 1))));
        assert!(matches!(Graph::new(2, [(0, 2)]), Err(InstanceError::EdgeOutOfRange(..))));
        assert!(matches!(Graph::new(2, [(0, 1), (1, 0)]), Err(InstanceError::DuplicateEdge(_))));
    }

    #[test]
    fn instance_rejects_missing_edge_and_duplicate_ids() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let t = MulticastTree::path(TreeId(0), &[NodeId(0), NodeId(2)]).unwrap();
        assert!(matches!(
            MulticastInstance::new(g.clone(), vec![t]),
            Err(InstanceError::MissingEdge { .. })
        ));
        let a = MulticastTree::path(TreeId(0), &[NodeId(0), NodeId(1)]).unwrap();
        assert!(matches!(
            MulticastInstance::new(g, vec![a.clone(), a]),
            Err(InstanceError::DuplicateTreeId(_))
        ));
    }

    fn file(trees: Vec<TreeFile>) -> InstanceFile {
        InstanceFile { n: 4, edges: vec![[0, 1], [1, 2], [2, 3]], trees }
    }

    #[test]
    fn validate_well_formed() {
        let f = file(vec![TreeFile { id: 0, root: 0, parent: [(1, 0), (2, 1)].into() }]);
        assert!(validate_instance(&f).is_valid());
    }

    #[test]
    fn validate_missing_edge_names_tree_and_edge() {
        let f = file(vec![TreeFile { id: 9, root: 0, parent: [(1, 0), (3, 1)].into() }]);
        let r = validate_instance(&f);
        assert_eq!(r.violations, vec![Violation::MissingEdge { tree: 9, child: 3, parent: 1 }]);
    }

    #[test]
    fn validate_two_cycle() {
        let f = file(vec![TreeFile { id: 0, root: 0, parent: [(1, 2), (2, 1)].into() }]);
        let r = validate_instance(&f);
        assert!(r.violations.contains(&Violation::NotATree { tree: 0, nodes: vec![1, 2] }));
    }

    #[test]
    fn validate_duplicate_ids() {
        let t = TreeFile { id: 3, root: 0, parent: [(1, 0)].into() };
        let r = validate_instance(&file(vec![t.clone(), t]));
        assert_eq!(r.violations, vec![Violation::DuplicateTreeId { tree: 3 }]);
    }

    #[test]
    fn json_is_canonical() {
        let inst = congested_edge_instance();
        let text = inst.to_json();
        assert_eq!(
            text,
            r#"{"n":2,"edges":[[0,1]],"trees":[{"id":0,"root":0,"parent":{"1":0}},{"id":1,"root":0,"parent":{"1":0}}]}"#
        );
        let back = MulticastInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), text);
    }
}
