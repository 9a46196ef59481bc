//! Matching of correlated community-structured random graphs by joint
//! typicality, with the matching-region bounds and exact checking tools.

pub mod bounds;
pub mod graphgen;
pub mod matcher;
pub mod model;
pub mod oracle;
pub mod permutation;
pub mod typicality;

pub use graphgen::{anonymize, sample_pair, CorrelatedPair, EdgeMatrix, MatchingInstance, Mode, SealedTruth};
pub use matcher::{
    ambiguity_set, ambiguity_set_csi, ambiguity_set_wsi, run_matching, select_labeling, AmbiguitySet, MatcherConfig,
};
pub use model::{CommunityLayout, EdgeAlphabet, JointDistribution, PairedEdgeModel};
pub use permutation::{from_labelings, Labeling, Permutation};
pub use typicality::{is_jointly_typical, joint_type, EpsilonSchedule, JointTypeMatrix};
