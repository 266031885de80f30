//! Building networks from crawl records, pruning incomplete sites, and
//! generating synthetic networks.

mod crawl;
mod synthetic;

pub use crawl::{
    build_from_crawl, parse_crawl_file, prune, serialize_crawl_file, CrawlRecord, CrawlRecords,
    Upstream, MAX_UPSTREAM,
};
pub use synthetic::{generate_synthetic, SyntheticConfig};
