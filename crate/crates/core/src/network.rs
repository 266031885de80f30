//! Immutable website network model and its validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical age buckets used by the synthetic generator.
pub const DEFAULT_AGE_BUCKETS: [&str; 6] = ["18-24", "25-34", "35-44", "45-54", "55-64", "65+"];
/// Canonical income buckets used by the synthetic generator.
pub const DEFAULT_INCOME_BUCKETS: [&str; 4] = ["0-30k", "30-60k", "60-100k", "100k+"];

/// A website node.
///
/// `reach_pct` is optional because crawled sites may lack analytics data
/// until pruning removes them. Ratios are relative to the internet average
/// (1.0 = average share of that bucket).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Website {
    pub id: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach_pct: Option<f64>,
    #[serde(default)]
    pub age_ratios: BTreeMap<String, f64>,
    #[serde(default)]
    pub income_ratios: BTreeMap<String, f64>,
    #[serde(default)]
    pub banner_ads: bool,
}

impl Website {
    /// True when the node carries reach, both demographic profiles and sells
    /// banner inventory.
    pub fn is_complete(&self) -> bool {
        matches!(self.reach_pct, Some(r) if r > 0.0 && r <= 100.0)
            && !self.age_ratios.is_empty()
            && !self.income_ratios.is_empty()
            && self.banner_ads
    }
}

/// Directed upstream-traffic edge: `alpha` is the fraction of `dst`'s
/// visitors arriving from `src`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub alpha: f64,
}

impl Edge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, alpha: f64) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            alpha,
        }
    }
}

/// Directed weighted graph of websites. Nodes are kept sorted by id and edges
/// by `(src, dst)`; nothing can be changed after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WebsiteNetwork {
    nodes: Vec<Website>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl WebsiteNetwork {
    /// Builds a network and rejects it if [`validate_network`] reports anything.
    pub fn new(nodes: Vec<Website>, edges: Vec<Edge>) -> Result<Self> {
        let net = Self::from_parts(nodes, edges);
        let report = validate_network(&net);
        if report.is_valid() {
            Ok(net)
        } else {
            Err(Error::InvalidNetwork(report.to_string()))
        }
    }

    /// Builds a network without checking invariants. Use [`validate_network`]
    /// to inspect the result.
    pub fn from_parts(mut nodes: Vec<Website>, mut edges: Vec<Edge>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        edges.sort_by(|a, b| (&a.src, &a.dst).cmp(&(&b.src, &b.dst)));
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            index.entry(node.id.clone()).or_insert(i);
        }
        WebsiteNetwork {
            nodes,
            edges,
            index,
        }
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new())
    }

    pub fn nodes(&self) -> &[Website] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&Website> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    /// Position of `id` in [`WebsiteNetwork::nodes`].
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Union of age bucket labels over all nodes.
    pub fn age_buckets(&self) -> BTreeSet<String> {
        self.nodes
            .iter()
            .flat_map(|n| n.age_ratios.keys().cloned())
            .collect()
    }

    /// Union of income bucket labels over all nodes.
    pub fn income_buckets(&self) -> BTreeSet<String> {
        self.nodes
            .iter()
            .flat_map(|n| n.income_ratios.keys().cloned())
            .collect()
    }

    /// Hex SHA-256 of the canonical serialized form.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = crate::format::serialize_network(self);
        hex::encode(Sha256::digest(&bytes))
    }
}

/// One invariant violation, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    EmptyDomain { node: String },
    DuplicateNode { node: String },
    ReachOutOfRange { node: String, value: String },
    BadRatio { node: String, bucket: String, value: String },
    AlphaOutOfRange { src: String, dst: String, value: String },
    SelfLoop { node: String },
    DuplicateEdge { src: String, dst: String },
    UnknownEndpoint { src: String, dst: String, missing: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "node with empty id"),
            Violation::EmptyDomain { node } => write!(f, "node {node}: empty domain"),
            Violation::DuplicateNode { node } => write!(f, "node {node}: duplicate id"),
            Violation::ReachOutOfRange { node, value } => {
                write!(f, "node {node}: reach_pct {value} outside (0, 100]")
            }
            Violation::BadRatio {
                node,
                bucket,
                value,
            } => write!(f, "node {node}: ratio for bucket {bucket:?} is {value}"),
            Violation::AlphaOutOfRange { src, dst, value } => {
                write!(f, "edge {src}->{dst}: alpha {value} outside (0, 1]")
            }
            Violation::SelfLoop { node } => write!(f, "edge {node}->{node}: self loop"),
            Violation::DuplicateEdge { src, dst } => write!(f, "edge {src}->{dst}: duplicate"),
            Violation::UnknownEndpoint { src, dst, missing } => {
                write!(f, "edge {src}->{dst}: unknown node {missing}")
            }
        }
    }
}

/// Every violation found in a network; empty when valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every node and edge invariant. Never mutates the network.
///
/// A missing `reach_pct` is not a violation here: unpruned crawl output may
/// legitimately lack it.
pub fn validate_network(net: &WebsiteNetwork) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for node in net.nodes() {
        if node.id.is_empty() {
            violations.push(Violation::EmptyId);
        } else if !seen.insert(node.id.as_str()) {
            violations.push(Violation::DuplicateNode {
                node: node.id.clone(),
            });
        }
        if node.domain.is_empty() {
            violations.push(Violation::EmptyDomain {
                node: node.id.clone(),
            });
        }
        if let Some(r) = node.reach_pct {
            if !(r > 0.0 && r <= 100.0) {
                violations.push(Violation::ReachOutOfRange {
                    node: node.id.clone(),
                    value: r.to_string(),
                });
            }
        }
        for (bucket, &value) in node.age_ratios.iter().chain(node.income_ratios.iter()) {
            if !(value.is_finite() && value >= 0.0) {
                violations.push(Violation::BadRatio {
                    node: node.id.clone(),
                    bucket: bucket.clone(),
                    value: value.to_string(),
                });
            }
        }
    }

    let mut pairs = BTreeSet::new();
    for edge in net.edges() {
        if !(edge.alpha > 0.0 && edge.alpha <= 1.0) {
            violations.push(Violation::AlphaOutOfRange {
                src: edge.src.clone(),
                dst: edge.dst.clone(),
                value: edge.alpha.to_string(),
            });
        }
        if edge.src == edge.dst {
            violations.push(Violation::SelfLoop {
                node: edge.src.clone(),
            });
        }
        if !pairs.insert((edge.src.as_str(), edge.dst.as_str())) {
            violations.push(Violation::DuplicateEdge {
                src: edge.src.clone(),
                dst: edge.dst.clone(),
            });
        }
        for endpoint in [&edge.src, &edge.dst] {
            if !net.contains(endpoint) {
                violations.push(Violation::UnknownEndpoint {
                    src: edge.src.clone(),
                    dst: edge.dst.clone(),
                    missing: endpoint.clone(),
                });
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::abc_network;

    fn site(id: &str) -> Website {
        Website {
            id: id.into(),
            domain: format!("{id}.example"),
            reach_pct: Some(10.0),
            age_ratios: BTreeMap::from([("25-34".into(), 1.0)]),
            income_ratios: BTreeMap::from([("100k+".into(), 1.0)]),
            banner_ads: true,
        }
    }

    #[test]
    fn abc_fixture_is_valid() {
        let net = abc_network();
        assert!(validate_network(&net).is_valid());
        assert_eq!(net.len(), 3);
        assert_eq!(net.edges().len(), 6);
    }

    #[test]
    fn zero_alpha_is_one_violation() {
        let net = WebsiteNetwork::from_parts(
            vec![site("a"), site("b")],
            vec![Edge::new("a", "b", 0.0)],
        );
        let report = validate_network(&net);
        assert_eq!(report.len(), 1);
        assert!(report.to_string().contains("a->b"), "{report}");
    }

    #[test]
    fn ghost_endpoint_is_one_violation() {
        let net = WebsiteNetwork::from_parts(
            vec![site("a")],
            vec![Edge::new("ghost", "a", 0.5)],
        );
        let report = validate_network(&net);
        assert_eq!(report.len(), 1);
        assert!(report.to_string().contains("ghost"));
    }

    #[test]
    fn duplicates_and_self_loops_reported() {
        let net = WebsiteNetwork::from_parts(
            vec![site("a"), site("a"), site("b")],
            vec![
                Edge::new("a", "b", 0.5),
                Edge::new("a", "b", 0.6),
                Edge::new("b", "b", 0.1),
            ],
        );
        let report = validate_network(&net);
        assert!(report.violations.contains(&Violation::DuplicateNode { node: "a".into() }));
        assert!(report.violations.contains(&Violation::DuplicateEdge {
            src: "a".into(),
            dst: "b".into()
        }));
        assert!(report.violations.contains(&Violation::SelfLoop { node: "b".into() }));
    }

    #[test]
    fn reach_and_ratio_ranges() {
        let mut bad = site("a");
        bad.reach_pct = Some(100.5);
        bad.age_ratios.insert("18-24".into(), f64::NAN);
        let net = WebsiteNetwork::from_parts(vec![bad], vec![]);
        assert_eq!(validate_network(&net).len(), 2);

        let mut edge = site("b");
        edge.reach_pct = Some(100.0);
        assert!(validate_network(&WebsiteNetwork::from_parts(vec![edge], vec![])).is_valid());
    }

    #[test]
    fn validation_does_not_mutate() {
        let net = abc_network();
        let before = net.clone();
        let _ = validate_network(&net);
        assert_eq!(net, before);
    }

    #[test]
    fn new_rejects_invalid() {
        let err = WebsiteNetwork::new(vec![site("a")], vec![Edge::new("a", "ghost", 0.5)])
            .unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }
}
