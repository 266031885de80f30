//! Overlap-aware website selection for online media planning.
//!
//! A [`WebsiteNetwork`] links sites by upstream-traffic shares. Audience
//! overlap between two sites is the strongest chain of shares connecting
//! them ([`overlap::overlap_matrix`]). Given a budget, the number of sites
//! to buy and optional demographic targeting, [`ga::optimize`] picks the
//! sites that maximize exposures after discounting shared audiences, and
//! [`oracle`] provides exhaustive answers for small instances.

pub mod campaign;
pub mod constraints;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod ga;
pub mod ingestion;
pub mod network;
pub mod objective;
pub mod oracle;
pub mod overlap;

pub use campaign::{CampaignSpec, FieldError, Problem};
pub use constraints::{build_cost_model, demographic_filter, impressions_per_site, CostModel, Targeting};
pub use error::{Error, Result};
pub use format::{parse_network_file, serialize_network};
pub use ga::{optimize, GaParams, GenerationStats, OptimizationResult};
pub use network::{validate_network, Edge, ValidationReport, Website, WebsiteNetwork};
pub use objective::{fitness, plan_metrics, ObjectiveMode, PlanMetrics, Selection};
pub use overlap::{max_product_path, overlap_matrix, symmetrize, OverlapMatrix, PathResult};
