//! Experiment orchestration behind the `commatch` binary.

pub mod campaign;
pub mod output;
pub mod scan;

pub use campaign::{run_campaign, CampaignSpec, CampaignSummary, EpsChoice, TrialRecord};
pub use scan::{scan_region, ScanRow};
