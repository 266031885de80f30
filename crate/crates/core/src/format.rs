//! JSON network file format.
//!
//! ```json
//! { "version": 1,
//!   "nodes": [ { "id": "A", "domain": "a.example", "reach_pct": 40.0,
//!                "age_ratios": {"25-34": 1.3}, "income_ratios": {"100k+": 1.1},
//!                "banner_ads": true } ],
//!   "edges": [ { "src": "A", "dst": "B", "alpha_pct": 80.0 } ] }
//! ```
//!
//! Edge weights are percentages on disk and fractions in memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Edge, Website, WebsiteNetwork};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    version: u32,
    nodes: Vec<Website>,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    src: String,
    dst: String,
    alpha_pct: f64,
}

/// Parses a network file and rejects any invariant violation.
pub fn parse_network_file(bytes: &[u8]) -> Result<WebsiteNetwork> {
    let net = parse_network_file_unchecked(bytes)?;
    let report = crate::network::validate_network(&net);
    if report.is_valid() {
        Ok(net)
    } else {
        Err(Error::InvalidNetwork(report.to_string()))
    }
}

/// Parses the JSON and version but leaves invariant checks to the caller.
pub fn parse_network_file_unchecked(bytes: &[u8]) -> Result<WebsiteNetwork> {
    let file: NetworkFile = serde_json::from_slice(bytes).map_err(|e| Error::from_json(e, bytes))?;
    if file.version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(file.version));
    }
    let edges = file
        .edges
        .into_iter()
        .map(|e| Edge::new(e.src, e.dst, pct_to_fraction(e.alpha_pct)))
        .collect();
    Ok(WebsiteNetwork::from_parts(file.nodes, edges))
}

/// Canonical form: nodes sorted by id, edges by `(src, dst)`, pretty JSON.
pub fn serialize_network(net: &WebsiteNetwork) -> Vec<u8> {
    let file = NetworkFile {
        version: FORMAT_VERSION,
        nodes: net.nodes().to_vec(),
        edges: net
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                src: e.src.clone(),
                dst: e.dst.clone(),
                alpha_pct: fraction_to_pct(e.alpha),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("network serializes");
    out.push(b'\n');
    out
}

pub fn pct_to_fraction(pct: f64) -> f64 {
    pct / 100.0
}

/// Inverse of [`pct_to_fraction`] chosen so that parsing the output gives back
/// exactly `alpha` whenever some percentage maps onto it.
pub fn fraction_to_pct(alpha: f64) -> f64 {
    let guess = alpha * 100.0;
    if !guess.is_finite() || pct_to_fraction(guess) == alpha {
        return guess;
    }
    let mut down = guess;
    let mut up = guess;
    for _ in 0..4 {
        down = down.next_down();
        up = up.next_up();
        if pct_to_fraction(down) == alpha {
            return down;
        }
        if pct_to_fraction(up) == alpha {
            return up;
        }
    }
    guess
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{abc_network, abc_network_json};
    use proptest::prelude::*;

    #[test]
    fn abc_file_parses() {
        let net = parse_network_file(abc_network_json().as_bytes()).unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.edges().len(), 6);
        assert_eq!(net, abc_network());
        let ab = net.edges().iter().find(|e| e.src == "A" && e.dst == "B").unwrap();
        assert_eq!(ab.alpha, 0.8);
    }

    #[test]
    fn zero_alpha_rejected_naming_edge() {
        let text = abc_network_json().replacen("\"alpha_pct\": 80.0", "\"alpha_pct\": 0.0", 1);
        let err = parse_network_file(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("A->B"), "{err}");
    }

    #[test]
    fn rejects_bad_version_and_duplicates() {
        let text = abc_network_json().replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            parse_network_file(text.as_bytes()),
            Err(Error::UnsupportedVersion(2))
        ));

        let dup = r#"{"version":1,"nodes":[
            {"id":"a","domain":"a","reach_pct":1.0,"banner_ads":true},
            {"id":"b","domain":"b","reach_pct":1.0,"banner_ads":true}],
            "edges":[{"src":"a","dst":"b","alpha_pct":5},{"src":"a","dst":"b","alpha_pct":6}]}"#;
        let err = parse_network_file(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let dup_node = r#"{"version":1,"nodes":[
            {"id":"a","domain":"a","reach_pct":1.0},{"id":"a","domain":"x","reach_pct":2.0}],
            "edges":[]}"#;
        let err = parse_network_file(dup_node.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("node a: duplicate"), "{err}");
    }

    #[test]
    fn malformed_json_reports_offset() {
        let err = parse_network_file(b"{\"version\": 1, \"nodes\": [,]}").unwrap_err();
        match err {
            Error::Json { offset, .. } => assert_eq!(offset, 25),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonicalization_is_idempotent_on_fixture() {
        let once = serialize_network(&parse_network_file(abc_network_json().as_bytes()).unwrap());
        let twice = serialize_network(&parse_network_file(&once).unwrap());
        assert_eq!(once, twice);
    }

    proptest! {
        #[test]
        fn pct_round_trip_is_idempotent(pct in 1e-9f64..=100.0) {
            let alpha = pct_to_fraction(pct);
            let back = fraction_to_pct(alpha);
            prop_assert_eq!(pct_to_fraction(back), alpha);
        }

        #[test]
        fn serialize_parse_round_trip(
            reaches in proptest::collection::vec(0.001f64..=100.0, 1..8),
            alphas in proptest::collection::vec((0usize..8, 0usize..8, 0.01f64..=100.0), 0..20),
        ) {
            let nodes: Vec<Website> = reaches.iter().enumerate().map(|(i, &r)| Website {
                id: format!("n{i}"),
                domain: format!("n{i}.example"),
                reach_pct: Some(r),
                age_ratios: [("25-34".to_string(), r / 50.0)].into(),
                income_ratios: Default::default(),
                banner_ads: i % 2 == 0,
            }).collect();
            let n = nodes.len();
            let mut seen = std::collections::BTreeSet::new();
            let edges: Vec<Edge> = alphas.into_iter()
                .map(|(a, b, p)| (a % n, b % n, p))
                .filter(|&(a, b, _)| a != b && seen.insert((a, b)))
                .map(|(a, b, p)| Edge::new(format!("n{a}"), format!("n{b}"), pct_to_fraction(p)))
                .collect();
            let net = WebsiteNetwork::new(nodes, edges).unwrap();
            let bytes = serialize_network(&net);
            let parsed = parse_network_file(&bytes).unwrap();
            prop_assert_eq!(&parsed, &net);
            prop_assert_eq!(serialize_network(&parsed), bytes);
        }
    }
}
