use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::pct_to_fraction;
use crate::network::{Edge, Website, WebsiteNetwork};

/// Upstream lists are truncated to the top ten referrers.
pub const MAX_UPSTREAM: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Upstream {
    pub domain: String,
    pub alpha_pct: f64,
}

/// Analytics snapshot for one site: who sends it traffic and, when
/// available, its reach and demographic profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlRecord {
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub upstream: Vec<Upstream>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_ratios: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub income_ratios: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub banner_ads: bool,
}

impl CrawlRecord {
    fn check(&self) -> Result<()> {
        if self.upstream.len() > MAX_UPSTREAM {
            return Err(Error::InvalidRecord(format!(
                "{}: {} upstream sites (max {MAX_UPSTREAM})",
                self.domain,
                self.upstream.len()
            )));
        }
        for up in &self.upstream {
            if !(up.alpha_pct > 0.0 && up.alpha_pct <= 100.0) {
                return Err(Error::InvalidRecord(format!(
                    "{}: upstream {} alpha_pct {} outside (0, 100]",
                    self.domain, up.domain, up.alpha_pct
                )));
            }
        }
        Ok(())
    }

    fn to_website(&self) -> Website {
        Website {
            id: self.domain.clone(),
            domain: self.domain.clone(),
            reach_pct: self.reach_pct,
            age_ratios: self.age_ratios.clone().unwrap_or_default(),
            income_ratios: self.income_ratios.clone().unwrap_or_default(),
            banner_ads: self.banner_ads,
        }
    }
}

pub type CrawlRecords = BTreeMap<String, CrawlRecord>;

/// Parses a crawl-record file (a JSON object keyed by domain). A record whose
/// `domain` is omitted takes it from its key.
pub fn parse_crawl_file(bytes: &[u8]) -> Result<CrawlRecords> {
    let mut records: CrawlRecords =
        serde_json::from_slice(bytes).map_err(|e| Error::from_json(e, bytes))?;
    for (key, record) in records.iter_mut() {
        if record.domain.is_empty() {
            record.domain = key.clone();
        } else if record.domain != *key {
            return Err(Error::InvalidRecord(format!(
                "key {key} holds record for {}",
                record.domain
            )));
        }
        record.check()?;
    }
    Ok(records)
}

pub fn serialize_crawl_file(records: &CrawlRecords) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(records).expect("records serialize");
    out.push(b'\n');
    out
}

/// Breadth-first expansion from `seed_domain` over upstream lists.
///
/// Each dequeued site adds its upstream sites (once each, in list order) and
/// an edge `upstream -> site` weighted by the upstream share. Expansion stops
/// once `max_nodes` nodes exist or the frontier empties. Upstream sites
/// without a record are kept with empty metrics for [`prune`] to drop.
pub fn build_from_crawl(
    records: &CrawlRecords,
    seed_domain: &str,
    max_nodes: usize,
) -> Result<WebsiteNetwork> {
    if max_nodes == 0 {
        return Err(Error::InvalidArgument("max_nodes must be at least 1".into()));
    }
    let seed = records
        .get(seed_domain)
        .ok_or_else(|| Error::SeedNotFound(seed_domain.to_string()))?;

    let mut nodes = vec![seed.to_website()];
    let mut present: HashSet<String> = HashSet::from([seed_domain.to_string()]);
    let mut edges = Vec::new();
    let mut frontier = VecDeque::from([seed_domain.to_string()]);

    while nodes.len() < max_nodes {
        let Some(site) = frontier.pop_front() else {
            break;
        };
        let Some(record) = records.get(&site) else {
            continue;
        };
        record.check()?;
        let mut linked = HashSet::new();
        for up in &record.upstream {
            if up.domain == site || !linked.insert(up.domain.as_str()) {
                continue;
            }
            if !present.contains(&up.domain) {
                if nodes.len() >= max_nodes {
                    continue;
                }
                present.insert(up.domain.clone());
                nodes.push(match records.get(&up.domain) {
                    Some(r) => r.to_website(),
                    None => Website {
                        id: up.domain.clone(),
                        domain: up.domain.clone(),
                        reach_pct: None,
                        age_ratios: BTreeMap::new(),
                        income_ratios: BTreeMap::new(),
                        banner_ads: false,
                    },
                });
                frontier.push_back(up.domain.clone());
            }
            edges.push(Edge::new(up.domain.clone(), site.clone(), pct_to_fraction(up.alpha_pct)));
        }
    }
    WebsiteNetwork::new(nodes, edges)
}

/// Keeps only sites with reach, both demographic profiles and banner
/// inventory; edges touching removed sites go with them.
pub fn prune(net: &WebsiteNetwork) -> WebsiteNetwork {
    let nodes: Vec<Website> = net.nodes().iter().filter(|n| n.is_complete()).cloned().collect();
    let kept: HashSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    let edges = net
        .edges()
        .iter()
        .filter(|e| kept.contains(e.src.as_str()) && kept.contains(e.dst.as_str()))
        .cloned()
        .collect();
    WebsiteNetwork::from_parts(nodes, edges)
}
