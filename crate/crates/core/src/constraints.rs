//! Demographic targeting, the CPM cost model and impression arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::WebsiteNetwork;

pub const MIN_CPM_USD: f64 = 0.5;
pub const MAX_CPM_USD: f64 = 5.0;

/// Demographic buckets the advertiser wants over-represented. An empty set
/// disables that dimension.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Targeting {
    pub age_buckets: BTreeSet<String>,
    pub income_buckets: BTreeSet<String>,
}

impl Targeting {
    pub fn is_empty(&self) -> bool {
        self.age_buckets.is_empty() && self.income_buckets.is_empty()
    }

    /// Checks every label against the network's bucket vocabulary.
    pub fn check(&self, net: &WebsiteNetwork) -> Result<()> {
        for (dimension, wanted, known) in [
            ("age", &self.age_buckets, net.age_buckets()),
            ("income", &self.income_buckets, net.income_buckets()),
        ] {
            if let Some(label) = wanted.iter().find(|l| !known.contains(*l)) {
                return Err(Error::UnknownBucket {
                    dimension,
                    label: label.clone(),
                });
            }
        }
        Ok(())
    }
}

fn above_average(ratios: &BTreeMap<String, f64>, targeted: &BTreeSet<String>) -> bool {
    targeted.is_empty()
        || targeted
            .iter()
            .any(|b| ratios.get(b).is_some_and(|&r| r > 1.0))
}

/// Sites whose audience is above the internet average in at least one
/// targeted bucket of every enabled dimension.
pub fn demographic_filter(net: &WebsiteNetwork, targeting: &Targeting) -> Result<BTreeSet<String>> {
    targeting.check(net)?;
    Ok(net
        .nodes()
        .iter()
        .filter(|n| {
            above_average(&n.age_ratios, &targeting.age_buckets)
                && above_average(&n.income_ratios, &targeting.income_buckets)
        })
        .map(|n| n.id.clone())
        .collect())
}

/// Cost per thousand impressions for every site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub cpm_usd: BTreeMap<String, f64>,
}

impl CostModel {
    pub fn cpm(&self, id: &str) -> Result<f64> {
        self.cpm_usd
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }
}

/// CPM affine in reach, spanning [$0.5, $5] over the whole network. When every
/// site has the same reach all of them cost the midpoint, $2.75.
pub fn build_cost_model(net: &WebsiteNetwork) -> Result<CostModel> {
    if net.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let mut reaches = Vec::with_capacity(net.len());
    for node in net.nodes() {
        let reach = node.reach_pct.ok_or_else(|| Error::MissingReach(node.id.clone()))?;
        reaches.push((node.id.clone(), reach));
    }
    let min = reaches.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max = reaches.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let span = MAX_CPM_USD - MIN_CPM_USD;
    let cpm_usd = reaches
        .into_iter()
        .map(|(id, r)| {
            let cpm = if max == min {
                MIN_CPM_USD + span / 2.0
            } else {
                MIN_CPM_USD + span * ((r - min) / (max - min))
            };
            (id, cpm)
        })
        .collect();
    Ok(CostModel { cpm_usd })
}

/// Impressions bought on one site when `budget_usd` is split evenly over
/// `sites` sites.
pub fn impressions_per_site(budget_usd: f64, sites: usize, cpm_usd: f64) -> Result<f64> {
    if !(budget_usd > 0.0 && budget_usd.is_finite()) {
        return Err(Error::InvalidArgument(format!("budget_usd must be > 0, got {budget_usd}")));
    }
    if sites == 0 {
        return Err(Error::InvalidArgument("number of sites must be at least 1".into()));
    }
    if !(cpm_usd > 0.0 && cpm_usd.is_finite()) {
        return Err(Error::InvalidArgument(format!("cpm_usd must be > 0, got {cpm_usd}")));
    }
    Ok(budget_usd / sites as f64 / cpm_usd * 1000.0)
}
