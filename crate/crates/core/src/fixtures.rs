//! Small reference networks used by tests, examples and the CLI.

use std::collections::BTreeMap;

use crate::network::{Edge, Website, WebsiteNetwork};

/// Three sites A, B, C reaching 40%, 30% and 20% of the population. A and B
/// share 80% of their audiences in both directions; A–C and B–C share 10%.
pub fn abc_network() -> WebsiteNetwork {
    let site = |id: &str, reach: f64, young: f64, rich: f64| Website {
        id: id.into(),
        domain: format!("{}.example", id.to_ascii_lowercase()),
        reach_pct: Some(reach),
        age_ratios: BTreeMap::from([("18-24".into(), young), ("25-34".into(), 1.1)]),
        income_ratios: BTreeMap::from([("0-30k".into(), 0.9), ("100k+".into(), rich)]),
        banner_ads: true,
    };
    let nodes = vec![
        site("A", 40.0, 1.2, 1.3),
        site("B", 30.0, 0.8, 1.1),
        site("C", 20.0, 1.4, 0.7),
    ];
    let mut edges = Vec::new();
    for (a, b, pct) in [("A", "B", 80.0), ("A", "C", 10.0), ("B", "C", 10.0)] {
        edges.push(Edge::new(a, b, pct / 100.0));
        edges.push(Edge::new(b, a, pct / 100.0));
    }
    WebsiteNetwork::new(nodes, edges).expect("fixture is valid")
}

/// The A/B/C fixture in the network file format.
pub fn abc_network_json() -> String {
    String::from_utf8(crate::format::serialize_network(&abc_network())).expect("utf-8")
}
