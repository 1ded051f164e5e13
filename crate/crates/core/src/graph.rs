//! The undirected attributed behavior multigraph and its edge-adjacency index.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Dense 0-based node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct NodeId(pub u32);

/// Dense 0-based edge identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct EdgeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Label {
    Normal,
    Anomalous,
    #[default]
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "normal" => Some(Label::Normal),
            "anomalous" => Some(Label::Anomalous),
            "unlabeled" => Some(Label::Unlabeled),
            _ => None,
        }
    }

    /// Positive-class indicator (anomalous = 1).
    pub fn target(self) -> Option<u8> {
        match self {
            Label::Normal => Some(0),
            Label::Anomalous => Some(1),
            Label::Unlabeled => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub entity_key: String,
    /// Empty until filled by [`node_attr_from_edges`] when the source has no
    /// node features.
    pub attr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub endpoints: (NodeId, NodeId),
    pub attr: Vec<f64>,
    pub label: Label,
}

impl Edge {
    /// The endpoint opposite `node`; a self-loop returns `node` itself.
    #[inline]
    pub fn other(&self, node: NodeId) -> NodeId {
        if self.endpoints.0 == node {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn is_loop(&self) -> bool {
        self.endpoints.0 == self.endpoints.1
    }
}

/// Input row for [`build_graph`]: `(key_a, key_b, attr, label)`.
pub type EdgeSpec = (String, String, Vec<f64>, Label);

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    incidence: Vec<Vec<EdgeId>>,
    node_dim: usize,
    edge_dim: usize,
}

impl BehaviorGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    /// Sorted incident edge ids of `node`. A self-loop is listed once.
    pub fn incident(&self, node: NodeId) -> &[EdgeId] {
        &self.incidence[node.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Width of the node attributes; 0 while no node carries attributes.
    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn node_by_key(&self, key: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.entity_key == key)
            .map(|n| n.id)
    }

    /// Returns a copy with every edge attribute replaced by `attrs[edge]`.
    pub fn with_edge_attrs(&self, attrs: Vec<Vec<f64>>) -> Result<BehaviorGraph> {
        if attrs.len() != self.edges.len() {
            return Err(Error::InconsistentDimension {
                what: "edge count",
                expected: self.edges.len(),
                found: attrs.len(),
            });
        }
        let edge_dim = attrs.first().map_or(self.edge_dim, Vec::len);
        let mut g = self.clone();
        for (edge, attr) in g.edges.iter_mut().zip(attrs) {
            if attr.len() != edge_dim {
                return Err(Error::InconsistentDimension {
                    what: "edge attr",
                    expected: edge_dim,
                    found: attr.len(),
                });
            }
            edge.attr = attr;
        }
        g.edge_dim = edge_dim;
        Ok(g)
    }

    /// Labels of all edges in id order.
    pub fn labels(&self) -> Vec<Label> {
        self.edges.iter().map(|e| e.label).collect()
    }

    /// Checks that incidence lists agree with the endpoint pairs in both
    /// directions and that attribute widths are uniform.
    pub fn validate(&self) -> Result<()> {
        for node in &self.nodes {
            if !node.attr.is_empty() && node.attr.len() != self.node_dim {
                return Err(Error::InconsistentDimension {
                    what: "node attr",
                    expected: self.node_dim,
                    found: node.attr.len(),
                });
            }
        }
        for edge in &self.edges {
            if edge.attr.len() != self.edge_dim {
                return Err(Error::InconsistentDimension {
                    what: "edge attr",
                    expected: self.edge_dim,
                    found: edge.attr.len(),
                });
            }
            for n in [edge.endpoints.0, edge.endpoints.1] {
                if self.incidence[n.index()].binary_search(&edge.id).is_err() {
                    return Err(Error::DimensionMismatch(alloc::format!(
                        "edge {} missing from incidence of node {}",
                        edge.id.0,
                        n.0
                    )));
                }
            }
        }
        for (v, list) in self.incidence.iter().enumerate() {
            for e in list {
                let (a, b) = self.edges[e.index()].endpoints;
                if a.index() != v && b.index() != v {
                    return Err(Error::DimensionMismatch(alloc::format!(
                        "node {v} lists non-incident edge {}",
                        e.0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds a graph with dense ids assigned in input order.
///
/// Node attribute vectors may be empty (meaning "derive later"); non-empty
/// ones must share one width, as must all edge attributes.
pub fn build_graph(nodes: Vec<(String, Vec<f64>)>, edges: Vec<EdgeSpec>) -> Result<BehaviorGraph> {
    let mut key_to_id: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut node_dim = None;
    let mut out_nodes = Vec::with_capacity(nodes.len());
    for (i, (key, attr)) in nodes.into_iter().enumerate() {
        if !attr.is_empty() {
            match node_dim {
                None => node_dim = Some(attr.len()),
                Some(d) if d != attr.len() => {
                    return Err(Error::InconsistentDimension {
                        what: "node attr",
                        expected: d,
                        found: attr.len(),
                    })
                }
                Some(_) => {}
            }
        }
        let id = NodeId(i as u32);
        if key_to_id.insert(key.clone(), id).is_some() {
            return Err(Error::DuplicateEntityKey(key));
        }
        out_nodes.push(Node {
            id,
            entity_key: key,
            attr,
        });
    }

    let edge_dim = edges.first().map_or(0, |e| e.2.len());
    let mut incidence = alloc::vec![Vec::new(); out_nodes.len()];
    let mut out_edges = Vec::with_capacity(edges.len());
    for (i, (key_a, key_b, attr, label)) in edges.into_iter().enumerate() {
        let lookup = |key: &str| {
            key_to_id
                .get(key)
                .copied()
                .ok_or_else(|| Error::UnknownEndpointKey {
                    edge: i,
                    key: key.to_string(),
                })
        };
        let a = lookup(&key_a)?;
        let b = lookup(&key_b)?;
        if attr.len() != edge_dim {
            return Err(Error::InconsistentDimension {
                what: "edge attr",
                expected: edge_dim,
                found: attr.len(),
            });
        }
        let id = EdgeId(i as u32);
        incidence[a.index()].push(id);
        if b != a {
            incidence[b.index()].push(id);
        }
        out_edges.push(Edge {
            id,
            endpoints: (a, b),
            attr,
            label,
        });
    }

    Ok(BehaviorGraph {
        nodes: out_nodes,
        edges: out_edges,
        incidence,
        node_dim: node_dim.unwrap_or(0),
        edge_dim,
    })
}

/// Fills every node with an empty attribute vector with
/// `[ln(1 + degree)] ++ mean(incident edge attrs)`. Isolated nodes get zeros.
/// Nodes that already carry attributes are left alone.
pub fn node_attr_from_edges(g: &BehaviorGraph) -> Result<BehaviorGraph> {
    let derived_dim = 1 + g.edge_dim;
    if g.nodes.iter().any(|n| !n.attr.is_empty()) && g.node_dim != derived_dim {
        if g.nodes.iter().all(|n| !n.attr.is_empty()) {
            return Ok(g.clone());
        }
        return Err(Error::InconsistentDimension {
            what: "node attr",
            expected: derived_dim,
            found: g.node_dim,
        });
    }
    let mut out = g.clone();
    for node in out.nodes.iter_mut().filter(|n| n.attr.is_empty()) {
        let incident = &g.incidence[node.id.index()];
        let mut attr = alloc::vec![0.0; derived_dim];
        if !incident.is_empty() {
            attr[0] = libm::log(1.0 + incident.len() as f64);
            for e in incident {
                for (acc, x) in attr[1..].iter_mut().zip(&g.edges[e.index()].attr) {
                    *acc += x;
                }
            }
            let inv = 1.0 / incident.len() as f64;
            for acc in &mut attr[1..] {
                *acc *= inv;
            }
        }
        node.attr = attr;
    }
    out.node_dim = derived_dim;
    Ok(out)
}

/// One adjacency relation seen from edge `e`: `neighbor` shares node
/// `shared` with `e`; `outer_e`/`outer_neighbor` are the far endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdjacencyEntry {
    pub neighbor: EdgeId,
    pub shared: NodeId,
    pub outer_e: NodeId,
    pub outer_neighbor: NodeId,
}

/// For each edge, the edges sharing an endpoint with it. Stored CSR-style;
/// entries of one edge are sorted by `(neighbor, shared)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAdjacencyIndex {
    offsets: Vec<usize>,
    entries: Vec<AdjacencyEntry>,
}

impl EdgeAdjacencyIndex {
    pub fn edge_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, e: EdgeId) -> &[AdjacencyEntry] {
        &self.entries[self.offsets[e.index()]..self.offsets[e.index() + 1]]
    }

    /// Range of `e`'s entries inside [`Self::entries`].
    pub fn range(&self, e: EdgeId) -> core::ops::Range<usize> {
        self.offsets[e.index()]..self.offsets[e.index() + 1]
    }

    pub fn entries(&self) -> &[AdjacencyEntry] {
        &self.entries
    }

    pub fn total_entries(&self) -> usize {
        self.entries.len()
    }

    /// Returns the index of the mirrored entry (seen from the neighbor).
    pub fn mirror(&self, e: EdgeId, entry: &AdjacencyEntry) -> Option<usize> {
        let r = self.range(entry.neighbor);
        self.entries[r.clone()]
            .binary_search_by(|x| (x.neighbor, x.shared).cmp(&(e, entry.shared)))
            .ok()
            .map(|i| r.start + i)
    }

    /// Same index with edge ids relabeled by `perm[old] = new`.
    pub fn relabeled(&self, perm: &[EdgeId]) -> EdgeAdjacencyIndex {
        let n = self.edge_count();
        let mut lists: Vec<Vec<AdjacencyEntry>> = alloc::vec![Vec::new(); n];
        for old in 0..n {
            let new = perm[old].index();
            lists[new] = self
                .neighbors(EdgeId(old as u32))
                .iter()
                .map(|a| AdjacencyEntry {
                    neighbor: perm[a.neighbor.index()],
                    ..*a
                })
                .collect();
            lists[new].sort_unstable();
        }
        Self::from_lists(lists)
    }

    fn from_lists(lists: Vec<Vec<AdjacencyEntry>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut entries = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for list in lists {
            entries.extend(list);
            offsets.push(entries.len());
        }
        Self { offsets, entries }
    }
}

/// Enumerates, for every edge, the other edges incident to each of its
/// endpoints. Parallel edges list each other once per shared endpoint.
pub fn build_edge_adjacency(g: &BehaviorGraph) -> EdgeAdjacencyIndex {
    let mut lists: Vec<Vec<AdjacencyEntry>> = alloc::vec![Vec::new(); g.edges.len()];
    for (v, incident) in g.incidence.iter().enumerate() {
        let shared = NodeId(v as u32);
        for &e in incident {
            let outer_e = g.edges[e.index()].other(shared);
            for &n in incident {
                if n == e {
                    continue;
                }
                lists[e.index()].push(AdjacencyEntry {
                    neighbor: n,
                    shared,
                    outer_e,
                    outer_neighbor: g.edges[n.index()].other(shared),
                });
            }
        }
    }
    for list in &mut lists {
        list.sort_unstable();
    }
    EdgeAdjacencyIndex::from_lists(lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn key(s: &str) -> String {
        s.to_string()
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> BehaviorGraph {
        build_graph(
            nodes.iter().map(|k| (key(k), vec![])).collect(),
            edges
                .iter()
                .map(|(a, b)| (key(a), key(b), vec![0.0], Label::Normal))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_graph() {
        let g = build_graph(
            vec![(key("a"), vec![1.0, 0.0]), (key("b"), vec![0.0, 1.0])],
            vec![(key("a"), key("b"), vec![0.5], Label::Normal)],
        )
        .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.incident(NodeId(0)), &[EdgeId(0)]);
        assert_eq!(g.incident(NodeId(1)), &[EdgeId(0)]);
        assert_eq!(g.node_dim(), 2);
        assert_eq!(g.edge_dim(), 1);
        g.validate().unwrap();
    }

    #[test]
    fn parallel_edges_are_distinct() {
        let g = graph(&["a", "b"], &[("a", "b"), ("a", "b")]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edge(EdgeId(0)).endpoints, g.edge(EdgeId(1)).endpoints);
        assert_eq!(g.incident(NodeId(0)), &[EdgeId(0), EdgeId(1)]);
    }

    #[test]
    fn unknown_endpoint() {
        let err = build_graph(
            vec![(key("a"), vec![]), (key("b"), vec![])],
            vec![(key("a"), key("c"), vec![1.0], Label::Normal)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::UnknownEndpointKey {
                edge: 0,
                key: key("c")
            }
        );
    }

    #[test]
    fn inconsistent_dims() {
        let err = build_graph(
            vec![(key("a"), vec![]), (key("b"), vec![])],
            vec![
                (key("a"), key("b"), vec![1.0], Label::Normal),
                (key("a"), key("b"), vec![1.0, 2.0], Label::Normal),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentDimension { .. }));
        let err = build_graph(vec![(key("a"), vec![1.0]), (key("b"), vec![1.0, 2.0])], vec![])
            .unwrap_err();
        assert!(matches!(err, Error::InconsistentDimension { .. }));
    }

    #[test]
    fn duplicate_key() {
        let err = build_graph(vec![(key("a"), vec![]), (key("a"), vec![])], vec![]).unwrap_err();
        assert_eq!(err, Error::DuplicateEntityKey(key("a")));
    }

    #[test]
    fn path_adjacency() {
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let adj = build_edge_adjacency(&g);
        assert_eq!(
            adj.neighbors(EdgeId(0)),
            &[AdjacencyEntry {
                neighbor: EdgeId(1),
                shared: NodeId(1),
                outer_e: NodeId(0),
                outer_neighbor: NodeId(2),
            }]
        );
        assert_eq!(adj.neighbors(EdgeId(1))[0].outer_e, NodeId(2));
        assert_eq!(adj.neighbors(EdgeId(1))[0].outer_neighbor, NodeId(0));
    }

    #[test]
    fn star_adjacency() {
        let g = graph(&["s", "x", "y", "z"], &[("s", "x"), ("s", "y"), ("s", "z")]);
        let adj = build_edge_adjacency(&g);
        // brute force: ordered pairs of distinct edges sharing a node
        let mut expected = 0;
        for e in g.edges() {
            for f in g.edges() {
                if e.id != f.id {
                    let ends = [f.endpoints.0, f.endpoints.1];
                    if ends.contains(&e.endpoints.0) || ends.contains(&e.endpoints.1) {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(expected, 6);
        assert_eq!(adj.total_entries(), 6);
        for e in g.edges() {
            assert_eq!(adj.neighbors(e.id).len(), 2);
        }
    }

    #[test]
    fn parallel_adjacency_lists_both_shared_nodes() {
        let g = graph(&["a", "b"], &[("a", "b"), ("a", "b")]);
        let adj = build_edge_adjacency(&g);
        let n0: Vec<_> = adj
            .neighbors(EdgeId(0))
            .iter()
            .map(|a| (a.neighbor, a.shared))
            .collect();
        assert_eq!(n0, vec![(EdgeId(1), NodeId(0)), (EdgeId(1), NodeId(1))]);
        assert_eq!(adj.neighbors(EdgeId(1)).len(), 2);
    }

    #[test]
    fn self_loop_adjacency() {
        let g = graph(&["x", "y"], &[("x", "x"), ("x", "y")]);
        let adj = build_edge_adjacency(&g);
        let loop_entries = adj.neighbors(EdgeId(0));
        assert_eq!(loop_entries.len(), 1);
        assert_eq!(loop_entries[0].outer_e, NodeId(0));
        assert_eq!(loop_entries[0].outer_neighbor, NodeId(1));
        assert_eq!(adj.neighbors(EdgeId(1))[0].outer_neighbor, NodeId(0));
    }

    #[test]
    fn derived_node_attrs() {
        let g = build_graph(
            vec![(key("a"), vec![]), (key("b"), vec![]), (key("c"), vec![])],
            vec![
                (key("a"), key("b"), vec![1.0, 1.0], Label::Normal),
                (key("a"), key("b"), vec![3.0, 3.0], Label::Normal),
            ],
        )
        .unwrap();
        let g = node_attr_from_edges(&g).unwrap();
        assert_eq!(g.node_dim(), 3);
        let a = &g.node(NodeId(0)).attr;
        assert!((a[0] - libm::log(3.0)).abs() < 1e-15);
        assert_eq!(&a[1..], &[2.0, 2.0]);
        assert_eq!(g.node(NodeId(2)).attr, vec![0.0, 0.0, 0.0]);

        let g = build_graph(
            vec![(key("a"), vec![]), (key("b"), vec![])],
            vec![(key("a"), key("b"), vec![2.0, 4.0], Label::Normal)],
        )
        .unwrap();
        let g = node_attr_from_edges(&g).unwrap();
        assert_eq!(g.node(NodeId(1)).attr, vec![libm::log(2.0), 2.0, 4.0]);
    }

    #[test]
    fn provided_node_attrs_untouched() {
        let g = build_graph(
            vec![(key("a"), vec![9.0, 9.0, 9.0]), (key("b"), vec![])],
            vec![(key("a"), key("b"), vec![2.0, 4.0], Label::Normal)],
        )
        .unwrap();
        let g = node_attr_from_edges(&g).unwrap();
        assert_eq!(g.node(NodeId(0)).attr, vec![9.0, 9.0, 9.0]);
        assert_eq!(g.node(NodeId(1)).attr.len(), 3);
    }
}
