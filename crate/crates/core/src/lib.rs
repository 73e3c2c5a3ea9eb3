//! Record linkage and turnover estimation for webshop identification.
//!
//! The crate links tax-filer company names against a business register with
//! approximate string matching accelerated by an LSH forest, derives
//! website-based shop features, and turns classified records into
//! bias-corrected aggregate turnover estimates with standard deviations.

pub mod normalize;
pub mod estimator;
pub mod linkage;
pub mod lshforest;
pub mod strdist;
pub mod types;
pub mod webfeat;
