//! Bundled data: four reference pupils and the published values their
//! assessments are compared against.

use std::collections::BTreeMap;

use rubricnet_core::cat::{StudentRecord, Variant};
use serde::Deserialize;

use crate::answers::parse_answers;

pub const PUPILS_CSV: &str = include_str!("../data/pupils.csv");
pub const EXPECTED_JSON: &str = include_str!("../data/expected.json");

/// A value as published, with the number of decimals it was printed with.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct Reported {
    pub value: f64,
    pub decimals: u32,
}

impl Reported {
    /// Whether `x` prints as the published value.
    pub fn matches(&self, x: f64) -> bool {
        let scale = 10f64.powi(self.decimals as i32);
        ((x * scale).round() - (self.value * scale).round()).abs() < 0.5
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct Expected {
    pub tolerance: f64,
    pub cat_scores: BTreeMap<String, Reported>,
    /// Published BN scores; kept for reference only, they do not follow from
    /// the published posteriors.
    pub bn_scores: BTreeMap<String, BTreeMap<String, f64>>,
    pub targets: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    pub supplementary: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    pub seconds_per_student: BTreeMap<String, f64>,
}

impl Expected {
    pub fn targets(&self, student: &str, variant: Variant) -> Option<&[f64]> {
        self.targets.get(student)?.get(&variant.to_string()).map(Vec::as_slice)
    }

    pub fn supplementary(&self, student: &str, variant: Variant) -> Option<&[f64]> {
        self.supplementary.get(student)?.get(&variant.to_string()).map(Vec::as_slice)
    }
}

pub fn pupils() -> Vec<StudentRecord> {
    parse_answers(PUPILS_CSV).expect("bundled answers parse")
}

pub fn expected() -> Expected {
    serde_json::from_str(EXPECTED_JSON).expect("bundled expectations parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        let p = pupils();
        assert_eq!(p.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["21", "33", "81", "92"]);
        let e = expected();
        assert_eq!(e.targets.len(), 4);
        assert!(e.targets("21", Variant::BC).is_some());
        assert!(e.supplementary("21", Variant::B).is_none());
    }

    #[test]
    fn display_rounding() {
        let r = Reported { value: 3.3, decimals: 1 };
        assert!(r.matches(40.0 / 12.0));
        assert!(!r.matches(3.36));
    }
}
