//! Campaign inputs and the prepared search problem shared by the GA and the
//! exhaustive oracle.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::constraints::{build_cost_model, demographic_filter, CostModel, Targeting};
use crate::error::{Error, Result};
use crate::ga::GaParams;
use crate::network::WebsiteNetwork;
use crate::objective::{site_weights, ObjectiveMode, Selection};
use crate::overlap::OverlapMatrix;

/// What the advertiser asks for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub budget_usd: f64,
    pub num_sites: usize,
    #[serde(default)]
    pub targeting: Targeting,
    #[serde(default)]
    pub objective_mode: ObjectiveMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga_params: Option<GaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A problem with one field of a [`CampaignSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl CampaignSpec {
    pub fn new(budget_usd: f64, num_sites: usize) -> Self {
        CampaignSpec {
            budget_usd,
            num_sites,
            targeting: Targeting::default(),
            objective_mode: ObjectiveMode::default(),
            ga_params: None,
            seed: None,
        }
    }

    pub fn with_mode(mut self, mode: ObjectiveMode) -> Self {
        self.objective_mode = mode;
        self
    }

    pub fn with_targeting(mut self, targeting: Targeting) -> Self {
        self.targeting = targeting;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_params(mut self, params: GaParams) -> Self {
        self.ga_params = Some(params);
        self
    }

    pub fn params(&self) -> GaParams {
        self.ga_params.clone().unwrap_or_default()
    }

    /// Field-level problems that make the spec unusable on any network.
    pub fn field_errors(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        let mut push = |field: &str, message: String| {
            errors.push(FieldError {
                field: field.to_string(),
                message,
            })
        };
        if !(self.budget_usd > 0.0 && self.budget_usd.is_finite()) {
            push("budget_usd", format!("must be a positive number, got {}", self.budget_usd));
        }
        if self.num_sites == 0 {
            push("num_sites", "must be at least 1".into());
        }
        if let Some(params) = &self.ga_params {
            for (field, message) in params.problems() {
                push(&format!("ga_params.{field}"), message);
            }
        }
        errors
    }

    pub fn check(&self) -> Result<()> {
        match self.field_errors().first() {
            None => Ok(()),
            Some(e) => Err(Error::InvalidArgument(format!("{}: {}", e.field, e.message))),
        }
    }
}

/// Feasible candidates with their weights and pairwise overlaps packed for
/// fast evaluation. Candidate `k` is the `k`-th feasible id in sorted order.
#[derive(Debug, Clone)]
pub struct Problem {
    candidates: Vec<String>,
    weights: Vec<f64>,
    overlap: Vec<f64>,
    sites: usize,
}

impl Problem {
    /// Filters the network with the campaign's targeting, then prepares.
    pub fn prepare(net: &WebsiteNetwork, overlap: &OverlapMatrix, campaign: &CampaignSpec) -> Result<Self> {
        let feasible = demographic_filter(net, &campaign.targeting)?;
        let cost = build_cost_model(net)?;
        Self::with_feasible(net, overlap, &feasible, &cost, campaign)
    }

    pub fn with_feasible(
        net: &WebsiteNetwork,
        overlap: &OverlapMatrix,
        feasible: &BTreeSet<String>,
        cost: &CostModel,
        campaign: &CampaignSpec,
    ) -> Result<Self> {
        campaign.check()?;
        let sites = campaign.num_sites;
        if feasible.len() < sites {
            return Err(Error::Infeasible {
                requested: sites,
                feasible: feasible.len(),
            });
        }
        let all = site_weights(net, cost, campaign.objective_mode, campaign.budget_usd, sites)?;
        let candidates: Vec<String> = feasible.iter().cloned().collect();
        let mut weights = Vec::with_capacity(candidates.len());
        let mut rows = Vec::with_capacity(candidates.len());
        for id in &candidates {
            weights.push(*all.get(id).ok_or_else(|| Error::UnknownNode(id.clone()))?);
            rows.push(overlap.index_of(id).ok_or_else(|| Error::UnknownNode(id.clone()))?);
        }
        let k = candidates.len();
        let mut packed = vec![0.0; k * k];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                packed[a * k + b] = overlap.get(i, j);
            }
        }
        Ok(Problem {
            candidates,
            weights,
            overlap: packed,
            sites,
        })
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// Net score of a sorted list of candidate indices. Matches
    /// [`crate::objective::fitness`] bit for bit on the same ids.
    pub fn evaluate(&self, genes: &[usize]) -> f64 {
        let k = self.candidates.len();
        let gross: f64 = genes.iter().map(|&g| self.weights[g]).sum();
        let mut deduction = 0.0;
        for (a, &i) in genes.iter().enumerate() {
            let wi = self.weights[i];
            for &j in &genes[a + 1..] {
                deduction += self.overlap[i * k + j] * wi.min(self.weights[j]);
            }
        }
        gross - deduction
    }

    pub fn selection(&self, genes: &[usize]) -> Selection {
        Selection::new(genes.iter().map(|&g| self.candidates[g].clone()))
    }
}
