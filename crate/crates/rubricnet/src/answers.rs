//! Answer logs in, posteriors, scores and correlation reports out.

use std::collections::BTreeMap;

use rubricnet_core::cat::{pearson, CatOutcome, CatResult, CompetenceProfile, StudentRecord, Variant};
use rubricnet_core::rubric::target_name;
use rubricnet_core::rubric::Grid;
use serde::{Deserialize, Serialize};

use crate::FileError;

#[derive(Debug, Deserialize)]
struct AnswerRow {
    student_id: String,
    task_id: String,
    result: String,
    #[serde(default)]
    supplementary: String,
}

/// Reads `student_id,task_id,result,supplementary` rows. Students keep the
/// order of their first row.
pub fn parse_answers(text: &str) -> Result<Vec<StudentRecord>, FileError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut students: Vec<(String, Vec<CatOutcome>)> = Vec::new();
    let mut position: BTreeMap<String, usize> = BTreeMap::new();
    let headers = reader.headers().map_err(|e| FileError::Line { what: "answers", line: 1, message: e.to_string() })?.clone();
    for record in reader.records() {
        let at = |e: &csv::Error| e.position().map_or(0, |p| p.line());
        let record = record.map_err(|e| FileError::Line { what: "answers", line: at(&e), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: AnswerRow = record
            .deserialize(Some(&headers))
            .map_err(|e| FileError::Line { what: "answers", line, message: e.to_string() })?;
        let result: CatResult = row.result.parse().map_err(|e: rubricnet_core::Error| FileError::Line {
            what: "answers",
            line,
            message: e.to_string(),
        })?;
        let used = row.supplementary.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from);
        let outcome = CatOutcome::new(row.task_id, result, used);
        let i = *position.entry(row.student_id.clone()).or_insert_with(|| {
            students.push((row.student_id.clone(), Vec::new()));
            students.len() - 1
        });
        students[i].1.push(outcome);
    }
    students
        .into_iter()
        .map(|(id, outcomes)| StudentRecord::new(id, outcomes).map_err(|e| FileError::Core { what: "answers", source: e }))
        .collect()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Node names in output order: targets row-major, then supplementary skills.
pub fn node_names(profile: &CompetenceProfile) -> Vec<String> {
    let grid = Grid { rows: 3, cols: 3 };
    let mut names: Vec<String> = grid.cells().map(target_name).collect();
    if let Some(s) = &profile.supplementary {
        names.extend((1..=s.len()).map(|i| format!("S{i}")));
    }
    names
}

pub fn posteriors_csv(profiles: &[CompetenceProfile]) -> Vec<u8> {
    let rows = profiles.iter().flat_map(|p| {
        let values = p.targets.iter().chain(p.supplementary.iter().flatten());
        node_names(p)
            .into_iter()
            .zip(values)
            .map(|(node, v)| vec![p.student.clone(), p.variant.to_string(), node, format!("{v:.6}")])
            .collect::<Vec<_>>()
    });
    csv_bytes(&["student_id", "variant", "node", "probability"], rows)
}

pub fn scores_csv(profiles: &[CompetenceProfile]) -> Vec<u8> {
    let rows = profiles.iter().map(|p| {
        vec![
            p.student.clone(),
            format!("{:.4}", p.cat_score),
            format!("{:.4}", p.bn_raw),
            format!("{:.4}", p.bn_rescaled),
            p.variant.to_string(),
        ]
    });
    csv_bytes(&["student_id", "cat_score", "bn_raw", "bn_rescaled", "variant"], rows)
}

#[derive(Debug, Serialize)]
pub struct CorrelationReport {
    pub students: usize,
    /// Pearson correlation of CAT score against rescaled BN score, per
    /// variant; `null` when undefined (fewer than two students or no spread).
    pub pearson: BTreeMap<String, Option<f64>>,
}

pub fn correlation_report(profiles: &[CompetenceProfile]) -> CorrelationReport {
    let mut by_variant: BTreeMap<Variant, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in profiles {
        let entry = by_variant.entry(p.variant).or_default();
        entry.0.push(p.cat_score);
        entry.1.push(p.bn_rescaled);
    }
    let students = by_variant.values().map(|(a, _)| a.len()).max().unwrap_or(0);
    let pearson = by_variant.into_iter().map(|(v, (a, b))| (v.to_string(), pearson(&a, &b).ok())).collect();
    CorrelationReport { students, pearson }
}

pub fn report_json(report: &CorrelationReport) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_result_names_the_line() {
        let mut text = String::from("student_id,task_id,result,supplementary\n");
        text.push_str("7,T1,1D-V,S2\n7,T2,4D-V,\n");
        let err = parse_answers(&text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn incomplete_student_is_rejected() {
        let text = "student_id,task_id,result,supplementary\n7,T1,1D-V,S2\n";
        assert!(parse_answers(text).is_err());
    }
}
