use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use super::crawl::{CrawlRecord, CrawlRecords, Upstream, MAX_UPSTREAM};
use crate::error::{Error, Result};
use crate::format::{fraction_to_pct, pct_to_fraction};
use crate::network::{Edge, Website, WebsiteNetwork, DEFAULT_AGE_BUCKETS, DEFAULT_INCOME_BUCKETS};

// Smallest reach a synthetic site can have, in percent.
const REACH_SCALE: f64 = 0.5;

/// Shape of a generated network. Sites are split round-robin into
/// communities; audience overlap is dense inside a community and sparse across.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub node_count: usize,
    pub community_count: usize,
    pub reach_pareto_alpha: f64,
    pub intra_edge_prob: f64,
    pub inter_edge_prob: f64,
    pub missing_data_prob: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            node_count: 300,
            community_count: 6,
            reach_pareto_alpha: 1.2,
            intra_edge_prob: 0.15,
            inter_edge_prob: 0.01,
            missing_data_prob: 0.0,
        }
    }
}

impl SyntheticConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.node_count == 0 || self.community_count == 0 {
            return bad("node_count and community_count must be at least 1".into());
        }
        if self.node_count < self.community_count {
            return bad(format!(
                "node_count {} is smaller than community_count {}",
                self.node_count, self.community_count
            ));
        }
        if !(self.reach_pareto_alpha > 0.0 && self.reach_pareto_alpha.is_finite()) {
            return bad("reach_pareto_alpha must be positive".into());
        }
        for (name, p) in [
            ("intra_edge_prob", self.intra_edge_prob),
            ("inter_edge_prob", self.inter_edge_prob),
            ("missing_data_prob", self.missing_data_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Generates a network plus the crawl records that describe it.
///
/// The output is a pure function of `(cfg, rng_seed)`. Each site receives at
/// most ten upstream edges so the records stay representable. Sites drawn as
/// "missing data" carry no demographic profiles and are dropped by pruning.
pub fn generate_synthetic(
    cfg: &SyntheticConfig,
    rng_seed: u64,
) -> Result<(WebsiteNetwork, CrawlRecords)> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pareto = Pareto::new(REACH_SCALE, cfg.reach_pareto_alpha)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let n = cfg.node_count;
    let width = n.to_string().len();
    let ids: Vec<String> = (0..n).map(|i| format!("site{i:0width$}.example")).collect();

    let mut nodes = Vec::with_capacity(n);
    for id in &ids {
        let reach = loop {
            let r: f64 = pareto.sample(&mut rng);
            if r <= 100.0 {
                break r;
            }
        };
        let missing = rng.random::<f64>() < cfg.missing_data_prob;
        let mut profile = |labels: &[&str]| -> BTreeMap<String, f64> {
            labels
                .iter()
                .map(|l| (l.to_string(), rng.random_range(0.3..1.9)))
                .collect()
        };
        let age_ratios = profile(&DEFAULT_AGE_BUCKETS);
        let income_ratios = profile(&DEFAULT_INCOME_BUCKETS);
        nodes.push(Website {
            id: id.clone(),
            domain: id.clone(),
            reach_pct: Some(reach),
            age_ratios: if missing { BTreeMap::new() } else { age_ratios },
            income_ratios: if missing { BTreeMap::new() } else { income_ratios },
            banner_ads: true,
        });
    }

    let community = |i: usize| i % cfg.community_count;
    let mut edges = Vec::new();
    let mut upstream: Vec<Vec<Upstream>> = vec![Vec::new(); n];
    for dst in 0..n {
        let mut candidates: Vec<usize> = (0..n).filter(|&s| s != dst).collect();
        candidates.shuffle(&mut rng);
        let mut incoming = Vec::new();
        for src in candidates {
            let p = if community(src) == community(dst) {
                cfg.intra_edge_prob
            } else {
                cfg.inter_edge_prob
            };
            if rng.random::<f64>() < p {
                // (0, 1], snapped to a value the percentage form reproduces
                let alpha = pct_to_fraction(fraction_to_pct(1.0 - rng.random::<f64>()));
                incoming.push((src, alpha));
                if incoming.len() == MAX_UPSTREAM {
                    break;
                }
            }
        }
        // Upstream lists are ordered by traffic share, largest first.
        incoming.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (src, alpha) in incoming {
            edges.push(Edge::new(ids[src].clone(), ids[dst].clone(), alpha));
            upstream[dst].push(Upstream {
                domain: ids[src].clone(),
                alpha_pct: fraction_to_pct(alpha),
            });
        }
    }

    let records = nodes
        .iter()
        .zip(upstream)
        .map(|(node, upstream)| {
            let record = CrawlRecord {
                domain: node.id.clone(),
                upstream,
                reach_pct: node.reach_pct,
                age_ratios: (!node.age_ratios.is_empty()).then(|| node.age_ratios.clone()),
                income_ratios: (!node.income_ratios.is_empty()).then(|| node.income_ratios.clone()),
                banner_ads: node.banner_ads,
            };
            (node.id.clone(), record)
        })
        .collect();

    Ok((WebsiteNetwork::new(nodes, edges)?, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::serialize_network;
    use crate::ingestion::{build_from_crawl, prune};

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            node_count: 50,
            community_count: 5,
            intra_edge_prob: 0.4,
            inter_edge_prob: 0.02,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (a, ra) = generate_synthetic(&small(), 11).unwrap();
        let (b, rb) = generate_synthetic(&small(), 11).unwrap();
        assert_eq!(serialize_network(&a), serialize_network(&b));
        assert_eq!(ra, rb);
        let (c, _) = generate_synthetic(&small(), 12).unwrap();
        assert_ne!(serialize_network(&a), serialize_network(&c));
    }

    #[test]
    fn node_count_is_exact() {
        let (net, records) = generate_synthetic(&small(), 3).unwrap();
        assert_eq!(net.len(), 50);
        assert_eq!(records.len(), 50);
        for node in net.nodes() {
            let r = node.reach_pct.unwrap();
            assert!(r > 0.0 && r <= 100.0);
        }
        for e in net.edges() {
            assert!(e.alpha > 0.0 && e.alpha <= 1.0);
        }
    }

    #[test]
    fn all_missing_prunes_to_empty() {
        let cfg = SyntheticConfig {
            missing_data_prob: 1.0,
            ..small()
        };
        let (net, _) = generate_synthetic(&cfg, 5).unwrap();
        assert!(prune(&net).is_empty());
    }

    #[test]
    fn records_rebuild_the_network() {
        let cfg = SyntheticConfig {
            intra_edge_prob: 0.9,
            inter_edge_prob: 0.3,
            ..small()
        };
        let (net, records) = generate_synthetic(&cfg, 9).unwrap();
        let rebuilt = build_from_crawl(&records, "site00.example", 1000).unwrap();
        // Dense enough that every site is reachable upstream of the seed.
        assert_eq!(rebuilt.len(), net.len());
        assert_eq!(serialize_network(&rebuilt), serialize_network(&net));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SyntheticConfig {
            node_count: 2,
            community_count: 3,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg, 0).is_err());
        let cfg = SyntheticConfig {
            inter_edge_prob: 1.5,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg, 0).is_err());
    }
}
