//! Seeded Monte Carlo matching campaigns.

use commatch::graphgen::{anonymize, sample_pair, Mode};
use commatch::matcher::{run_matching, MatchError, MatcherConfig};
use commatch::model::{CommunityLayout, PairedEdgeModel};
use commatch::typicality::EpsilonSchedule;
use rayon::prelude::*;
use serde::Serialize;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `i` under `master`. Independent of execution order.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    splitmix64(splitmix64(master) ^ i)
}

/// Seeds for sampling, shuffling and selection within one trial.
pub fn sub_seeds(seed: u64) -> [u64; 3] {
    [splitmix64(seed ^ 1), splitmix64(seed ^ 2), splitmix64(seed ^ 3)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsChoice {
    Fixed(f64),
    Kappa(f64),
}

impl EpsChoice {
    pub fn schedule(&self) -> EpsilonSchedule {
        match *self {
            EpsChoice::Fixed(e) => EpsilonSchedule::Fixed(e),
            EpsChoice::Kappa(k) => EpsilonSchedule::LogOverN { kappa: k },
        }
    }
}

impl Default for EpsChoice {
    fn default() -> Self {
        EpsChoice::Kappa(EpsilonSchedule::DEFAULT_KAPPA)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub model: PairedEdgeModel,
    pub layout: CommunityLayout,
    pub mode: Mode,
    pub eps: EpsChoice,
    pub trials: usize,
    pub master_seed: u64,
    pub matcher: MatcherConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    /// Ambiguity set empty: the scheme declares failure.
    Empty,
    /// Matcher refused the instance.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub mode: Mode,
    pub eps: f64,
    pub status: TrialStatus,
    /// Fraction of vertices labeled correctly; zero when matching failed.
    pub accuracy: f64,
    pub set_size: usize,
    pub truth_in_set: bool,
    pub candidate_space: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

pub fn run_trial(spec: &CampaignSpec, trial: usize) -> TrialRecord {
    let seed = trial_seed(spec.master_seed, trial as u64);
    let [sample, shuffle, select] = sub_seeds(seed);
    let eps = spec.eps.schedule().at(spec.layout.n());
    let mut record = TrialRecord {
        trial,
        seed,
        mode: spec.mode,
        eps,
        status: TrialStatus::Error,
        accuracy: 0.0,
        set_size: 0,
        truth_in_set: false,
        candidate_space: String::new(),
        runtime_ms: None,
    };
    let pair = match sample_pair(&spec.model, &spec.layout, sample) {
        Ok(p) => p,
        Err(_) => return record,
    };
    let (inst, truth) = anonymize(&pair, spec.mode, shuffle);
    match run_matching(&inst, &truth, spec.mode, eps, select, &spec.matcher) {
        Ok(out) => {
            record.status = TrialStatus::Ok;
            record.accuracy = out.accuracy;
            record.set_size = out.diagnostics.set_size;
            record.truth_in_set = out.diagnostics.truth_in_set;
            record.candidate_space = out.diagnostics.candidate_space.to_string();
            record.runtime_ms = Some(out.diagnostics.elapsed_ms);
        }
        Err(MatchError::EmptyAmbiguitySet(d)) => {
            record.status = TrialStatus::Empty;
            record.candidate_space = d.candidate_space.to_string();
            record.runtime_ms = Some(d.elapsed_ms);
        }
        Err(_) => {}
    }
    record
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub completed: usize,
    pub empty: usize,
    pub errors: usize,
    pub mean_accuracy: f64,
    pub accuracy_quantiles: Quantiles,
    pub truth_in_set_fraction: f64,
    pub mean_set_size: f64,
}

pub fn summarize(records: &[TrialRecord]) -> CampaignSummary {
    let count = |s| records.iter().filter(|r| r.status == s).count();
    let t = records.len() as f64;
    let mut acc: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
    acc.sort_by(f64::total_cmp);
    CampaignSummary {
        trials: records.len(),
        completed: count(TrialStatus::Ok),
        empty: count(TrialStatus::Empty),
        errors: count(TrialStatus::Error),
        mean_accuracy: acc.iter().sum::<f64>() / t,
        accuracy_quantiles: Quantiles {
            min: acc[0],
            q25: quantile(&acc, 0.25),
            median: quantile(&acc, 0.5),
            q75: quantile(&acc, 0.75),
            max: acc[acc.len() - 1],
        },
        truth_in_set_fraction: records.iter().filter(|r| r.truth_in_set).count() as f64 / t,
        mean_set_size: records.iter().map(|r| r.set_size as f64).sum::<f64>() / t,
    }
}

/// Runs every trial (in parallel) and returns records in trial order.
/// `runtime_ms` is cleared unless `timings` is set, so that repeated runs
/// produce identical records.
pub fn run_campaign(spec: &CampaignSpec, timings: bool) -> (Vec<TrialRecord>, CampaignSummary) {
    assert!(spec.trials >= 1, "a campaign needs at least one trial");
    let records: Vec<TrialRecord> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let mut r = run_trial(spec, i);
            if !timings {
                r.runtime_ms = None;
            }
            r
        })
        .collect();
    let summary = summarize(&records);
    (records, summary)
}
