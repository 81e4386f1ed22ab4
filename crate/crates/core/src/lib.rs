//! Surplus Groom Index toolkit.
//!
//! Computes a closed-form measure of marriage-market imbalance under
//! monogamy from the sex ratio at birth, mortality-adjusted fertility and
//! mean ages at marriage, and checks it against a stable-population cohort
//! oracle and a yearly matching simulation.
//!
//! - [`model`]: validated domain types
//! - [`smam`]: singulate mean age at marriage from census tables
//! - [`index`]: effective fertility, growth rate and the index itself
//! - [`oracle_sim`]: birth-series oracle and matching microsimulation
//! - [`ingest`]: CSV inputs with provenance
//! - [`report`] and [`density`]: run reports, kernel density and plots

pub mod density;
pub mod error;
pub mod index;
pub mod ingest;
pub mod model;
pub mod oracle_sim;
pub mod report;
pub mod smam;

pub use error::{Error, Result};
pub use index::{
    compute_sgi, effective_fertility, growth_rate, imbalance_condition, surplus_men, GrowthRate,
};
pub use model::{
    canonicalize_sex_ratio, FertilityInputs, MarriageTiming, RegionInputs, SexRatioAtBirth,
    SexRatioConvention, SgiResult, SurplusMen,
};
