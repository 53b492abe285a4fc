//! Linkage quality against ground truth and disclosure risk under a
//! linkage attack.

mod attack;
mod quality;

pub use attack::{linkage_attack, targets_from_exposures, AttackReport, MaskedRecord};
pub use quality::{score_linkage, GroundTruth, QualityReport};
