//! Overlap-discounted exposure score of a site selection.
//!
//! `F(S) = sum_i w_i - sum_{i<j} O(i, j) * min(w_i, w_j)` where `w` is either
//! a site's reach or the impressions the budget buys on it. Each pair
//! discounts the audience it double counts, bounded by the smaller side.
//! Higher-order overlaps are not modelled.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::campaign::CampaignSpec;
use crate::constraints::{demographic_filter, impressions_per_site, CostModel};
use crate::error::{Error, Result};
use crate::network::WebsiteNetwork;
use crate::overlap::OverlapMatrix;

/// What a site contributes to the score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveMode {
    /// Impressions bought on the site.
    #[default]
    UniqueImpressions,
    /// Reach of the site in percent of the internet population.
    UniqueReach,
}

impl FromStr for ObjectiveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impressions" | "unique-impressions" => Ok(ObjectiveMode::UniqueImpressions),
            "reach" | "unique-reach" => Ok(ObjectiveMode::UniqueReach),
            other => Err(Error::InvalidArgument(format!("unknown objective mode {other:?}"))),
        }
    }
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveMode::UniqueImpressions => "unique-impressions",
            ObjectiveMode::UniqueReach => "unique-reach",
        })
    }
}

/// A set of site ids, kept sorted and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Selection(Vec<String>);

impl Selection {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        Selection(set.into_iter().collect())
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.binary_search_by(|x| x.as_str().cmp(id)).is_ok()
    }
}

impl From<Vec<String>> for Selection {
    fn from(ids: Vec<String>) -> Self {
        Selection::new(ids)
    }
}

impl From<Selection> for Vec<String> {
    fn from(s: Selection) -> Self {
        s.0
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

/// Gross exposures and the pairwise deduction. The net score is always
/// `gross - deduction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub gross: f64,
    pub deduction: f64,
}

impl Score {
    pub fn net(&self) -> f64 {
        self.gross - self.deduction
    }
}

/// Per-site weights for the chosen mode. In impressions mode each site gets
/// `(budget / m) / cpm * 1000`.
pub fn site_weights(
    net: &WebsiteNetwork,
    cost: &CostModel,
    mode: ObjectiveMode,
    budget_usd: f64,
    sites: usize,
) -> Result<BTreeMap<String, f64>> {
    net.nodes()
        .iter()
        .map(|node| {
            let w = match mode {
                ObjectiveMode::UniqueReach => {
                    node.reach_pct.ok_or_else(|| Error::MissingReach(node.id.clone()))?
                }
                ObjectiveMode::UniqueImpressions => {
                    impressions_per_site(budget_usd, sites, cost.cpm(&node.id)?)?
                }
            };
            Ok((node.id.clone(), w))
        })
        .collect()
}

/// Gross and deduction terms, summed in sorted-id order.
pub fn score(
    selection: &Selection,
    overlap: &OverlapMatrix,
    weights: &BTreeMap<String, f64>,
) -> Result<Score> {
    let mut rows = Vec::with_capacity(selection.len());
    for id in selection.ids() {
        let w = *weights.get(id).ok_or_else(|| Error::UnknownNode(id.clone()))?;
        let k = overlap.index_of(id).ok_or_else(|| Error::UnknownNode(id.clone()))?;
        rows.push((k, w));
    }
    let gross = rows.iter().map(|r| r.1).sum();
    let mut deduction = 0.0;
    for (a, &(i, wi)) in rows.iter().enumerate() {
        for &(j, wj) in &rows[a + 1..] {
            deduction += overlap.get(i, j) * wi.min(wj);
        }
    }
    Ok(Score { gross, deduction })
}

/// Overlap-discounted exposures of `selection`. Not clamped at zero.
pub fn fitness(
    selection: &Selection,
    overlap: &OverlapMatrix,
    weights: &BTreeMap<String, f64>,
) -> Result<f64> {
    score(selection, overlap, weights).map(|s| s.net())
}

/// Score breakdown of one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineMetrics {
    pub selection: Selection,
    pub gross_exposures: f64,
    pub overlap_deduction: f64,
    pub net_score: f64,
}

/// Headline numbers for a plan, next to the naive top-m-by-reach plan drawn
/// from the same feasible sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub gross_exposures: f64,
    pub overlap_deduction: f64,
    pub net_score: f64,
    /// Baseline deduction minus this plan's deduction.
    pub overlap_avoided: f64,
    pub naive_baseline: BaselineMetrics,
}

/// The `m` feasible sites with the largest reach, ties to the smaller id.
pub fn naive_baseline(
    net: &WebsiteNetwork,
    feasible: &BTreeSet<String>,
    sites: usize,
) -> Result<Selection> {
    if feasible.len() < sites {
        return Err(Error::Infeasible {
            requested: sites,
            feasible: feasible.len(),
        });
    }
    let mut ranked = Vec::with_capacity(feasible.len());
    for id in feasible {
        let node = net.node(id).ok_or_else(|| Error::UnknownNode(id.clone()))?;
        let reach = node.reach_pct.ok_or_else(|| Error::MissingReach(id.clone()))?;
        ranked.push((reach, id));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(Selection::new(ranked.into_iter().take(sites).map(|(_, id)| id.clone())))
}

pub fn plan_metrics(
    selection: &Selection,
    overlap: &OverlapMatrix,
    net: &WebsiteNetwork,
    cost: &CostModel,
    campaign: &CampaignSpec,
) -> Result<PlanMetrics> {
    let feasible = demographic_filter(net, &campaign.targeting)?;
    plan_metrics_with_feasible(selection, overlap, net, cost, campaign, &feasible)
}

/// [`plan_metrics`] with the baseline drawn from an explicit feasible set.
pub fn plan_metrics_with_feasible(
    selection: &Selection,
    overlap: &OverlapMatrix,
    net: &WebsiteNetwork,
    cost: &CostModel,
    campaign: &CampaignSpec,
    feasible: &BTreeSet<String>,
) -> Result<PlanMetrics> {
    let weights = site_weights(
        net,
        cost,
        campaign.objective_mode,
        campaign.budget_usd,
        campaign.num_sites,
    )?;
    let baseline = naive_baseline(net, feasible, campaign.num_sites)?;
    let ours = score(selection, overlap, &weights)?;
    let theirs = score(&baseline, overlap, &weights)?;
    Ok(PlanMetrics {
        gross_exposures: ours.gross,
        overlap_deduction: ours.deduction,
        net_score: ours.net(),
        overlap_avoided: theirs.deduction - ours.deduction,
        naive_baseline: BaselineMetrics {
            selection: baseline,
            gross_exposures: theirs.gross,
            overlap_deduction: theirs.deduction,
            net_score: theirs.net(),
        },
    })
}
