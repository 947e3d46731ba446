use std::collections::HashSet;
use std::fmt;

use super::types::{GraphDataset, GraphDims, NodeKind, PoliticalGraph, MAX_OTHER_LABEL_LEN};

/// A single broken invariant, located within the graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyGraph,
    DuplicateNodeId(u64),
    NodeFeatureLength { node: u64, found: usize, expected: usize },
    NodeFeatureNotFinite { node: u64 },
    BadOtherLabel { node: u64 },
    SelfLoop { node: u64 },
    DuplicateEdge { src: u64, dst: u64 },
    DanglingEndpoint { src: u64, dst: u64, missing: u64 },
    EdgeFeatureLength { src: u64, dst: u64, found: usize, expected: usize },
    EdgeFeatureNotFinite { src: u64, dst: u64 },
    LabelLength { found: usize, expected: usize },
    LabelNotFinite,
    NodeLabelLength { found: usize, expected: usize },
    NodeLabelNotFinite { node: u64 },
    DuplicateGraphId(u64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
            Violation::DuplicateNodeId(id) => write!(f, "duplicate node id {id}"),
            Violation::NodeFeatureLength { node, found, expected } => write!(
                f,
                "node {node} has {found} features, expected m = {expected}"
            ),
            Violation::NodeFeatureNotFinite { node } => {
                write!(f, "node {node} has a non-finite feature")
            }
            Violation::BadOtherLabel { node } => write!(
                f,
                "node {node} has an empty or over-long (> {MAX_OTHER_LABEL_LEN}) kind label"
            ),
            Violation::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Violation::DuplicateEdge { src, dst } => write!(f, "duplicate edge ({src}, {dst})"),
            Violation::DanglingEndpoint { src, dst, missing } => write!(
                f,
                "edge ({src}, {dst}) references missing node {missing}"
            ),
            Violation::EdgeFeatureLength { src, dst, found, expected } => write!(
                f,
                "edge ({src}, {dst}) has {found} features, expected p = {expected}"
            ),
            Violation::EdgeFeatureNotFinite { src, dst } => {
                write!(f, "edge ({src}, {dst}) has a non-finite feature")
            }
            Violation::LabelLength { found, expected } => {
                write!(f, "graph label has length {found}, expected M = {expected}")
            }
            Violation::LabelNotFinite => write!(f, "graph label has a non-finite entry"),
            Violation::NodeLabelLength { found, expected } => write!(
                f,
                "node labels have length {found}, expected one per node ({expected})"
            ),
            Violation::NodeLabelNotFinite { node } => {
                write!(f, "node {node} has a non-finite label")
            }
            Violation::DuplicateGraphId(id) => write!(f, "duplicate graph id {id}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Reports every broken invariant of `g` against `dims`. Never fails.
pub fn validate_graph(g: &PoliticalGraph, dims: &GraphDims) -> ValidationReport {
    let mut v = Vec::new();
    if g.nodes.is_empty() {
        v.push(Violation::EmptyGraph);
    }

    let mut ids = HashSet::with_capacity(g.nodes.len());
    for node in &g.nodes {
        if !ids.insert(node.id) {
            v.push(Violation::DuplicateNodeId(node.id));
        }
        if node.features.len() != dims.m {
            v.push(Violation::NodeFeatureLength {
                node: node.id,
                found: node.features.len(),
                expected: dims.m,
            });
        }
        if node.features.iter().any(|x| !x.is_finite()) {
            v.push(Violation::NodeFeatureNotFinite { node: node.id });
        }
        if let NodeKind::Other(label) = &node.kind {
            if label.is_empty() || label.chars().count() > MAX_OTHER_LABEL_LEN {
                v.push(Violation::BadOtherLabel { node: node.id });
            }
        }
    }

    let mut pairs = HashSet::with_capacity(g.edges.len());
    for e in &g.edges {
        if e.src == e.dst {
            v.push(Violation::SelfLoop { node: e.src });
        }
        if !pairs.insert((e.src, e.dst)) {
            v.push(Violation::DuplicateEdge { src: e.src, dst: e.dst });
        }
        for end in [e.src, e.dst] {
            if !ids.contains(&end) {
                v.push(Violation::DanglingEndpoint { src: e.src, dst: e.dst, missing: end });
            }
        }
        if e.features.len() != dims.p {
            v.push(Violation::EdgeFeatureLength {
                src: e.src,
                dst: e.dst,
                found: e.features.len(),
                expected: dims.p,
            });
        }
        if e.features.iter().any(|x| !x.is_finite()) {
            v.push(Violation::EdgeFeatureNotFinite { src: e.src, dst: e.dst });
        }
    }

    if g.label.len() != dims.labels() {
        v.push(Violation::LabelLength {
            found: g.label.len(),
            expected: dims.labels(),
        });
    }
    if g.label.iter().any(|x| !x.is_finite()) {
        v.push(Violation::LabelNotFinite);
    }

    if let Some(labels) = &g.node_labels {
        if labels.len() != g.nodes.len() {
            v.push(Violation::NodeLabelLength {
                found: labels.len(),
                expected: g.nodes.len(),
            });
        }
        for (node, label) in g.nodes.iter().zip(labels) {
            if matches!(label, Some(x) if !x.is_finite()) {
                v.push(Violation::NodeLabelNotFinite { node: node.id });
            }
        }
    }

    ValidationReport { violations: v }
}

/// Validates every graph plus dataset-level invariants (unique graph ids).
pub fn validate_dataset(ds: &GraphDataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = HashSet::with_capacity(ds.graphs.len());
    for g in &ds.graphs {
        if !ids.insert(g.graph_id) {
            report.violations.push(Violation::DuplicateGraphId(g.graph_id));
        }
        report
            .violations
            .extend(validate_graph(g, &ds.dims).violations);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::types::{Edge, LabelKind, Node};

    fn dims() -> GraphDims {
        GraphDims::new(2, 1, vec![LabelKind::Binary])
    }

    fn node(id: u64, m: usize) -> Node {
        Node {
            id,
            kind: NodeKind::Legislator,
            features: vec![0.5; m],
        }
    }

    fn graph(nodes: Vec<Node>, edges: Vec<Edge>) -> PoliticalGraph {
        PoliticalGraph {
            graph_id: 0,
            nodes,
            edges,
            label: vec![1.0],
            node_labels: None,
        }
    }

    #[test]
    fn minimal_graph_is_ok() {
        let g = graph(vec![node(0, 2)], vec![]);
        assert!(validate_graph(&g, &dims()).is_ok());
    }

    #[test]
    fn self_loop_is_named() {
        let g = graph(
            vec![node(3, 2)],
            vec![Edge { src: 3, dst: 3, features: vec![1.0] }],
        );
        let r = validate_graph(&g, &dims());
        assert_eq!(r.violations, vec![Violation::SelfLoop { node: 3 }]);
        assert_eq!(r.violations[0].to_string(), "self-loop at node 3");
    }

    #[test]
    fn short_node_features_name_node_and_m() {
        let g = graph(vec![node(0, 2), node(7, 1)], vec![]);
        let r = validate_graph(&g, &dims());
        assert_eq!(
            r.violations,
            vec![Violation::NodeFeatureLength { node: 7, found: 1, expected: 2 }]
        );
        let msg = r.to_string();
        assert!(msg.contains("node 7") && msg.contains("m = 2"), "{msg}");
    }

    #[test]
    fn collects_every_violation() {
        let mut g = graph(
            vec![node(0, 2), node(0, 2)],
            vec![
                Edge { src: 0, dst: 9, features: vec![f64::NAN] },
                Edge { src: 0, dst: 9, features: vec![] },
            ],
        );
        g.label = vec![];
        g.nodes[1].kind = NodeKind::Other(String::new());
        let r = validate_graph(&g, &dims());
        assert!(r.violations.contains(&Violation::DuplicateNodeId(0)));
        assert!(r.violations.contains(&Violation::DuplicateEdge { src: 0, dst: 9 }));
        assert!(r.violations.contains(&Violation::DanglingEndpoint { src: 0, dst: 9, missing: 9 }));
        assert!(r.violations.contains(&Violation::EdgeFeatureNotFinite { src: 0, dst: 9 }));
        assert!(r.violations.contains(&Violation::LabelLength { found: 0, expected: 1 }));
        assert!(r.violations.contains(&Violation::BadOtherLabel { node: 0 }));
    }

    #[test]
    fn empty_graph_is_reported_not_panicked() {
        let g = graph(vec![], vec![]);
        assert_eq!(validate_graph(&g, &dims()).violations, vec![Violation::EmptyGraph]);
    }
}
