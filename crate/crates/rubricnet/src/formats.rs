//! JSON formats for networks and rubrics.

use std::collections::{BTreeMap, BTreeSet};

use rubricnet_core::rubric::{Cell, RubricSpec, SkillGroup, SupplementarySkill, TaskSpec};
use rubricnet_core::{Cpt, Network, VarId, Variable};
use serde::{Deserialize, Serialize};

use crate::FileError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    variables: Vec<VariableEntry>,
    cpts: Vec<CptEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    id: u32,
    name: String,
    cardinality: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptEntry {
    child: u32,
    parents: Vec<u32>,
    values: Vec<f64>,
}

pub fn network_to_json(net: &Network) -> String {
    let file = NetworkFile {
        variables: net
            .variables()
            .iter()
            .map(|v| VariableEntry { id: v.id.0, name: v.name.clone(), cardinality: v.cardinality })
            .collect(),
        cpts: net
            .cpts()
            .iter()
            .map(|c| CptEntry {
                child: c.child().0,
                parents: c.parents().iter().map(|p| p.0).collect(),
                values: c.table().values().to_vec(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("network serializes");
    text.push('\n');
    text
}

/// Parses a network without checking its semantics; run
/// [`rubricnet_core::network::validate_network`] on the result.
///
/// Shape errors (unknown ids, wrong table length, a child listed among its
/// own parents) are reported here since they cannot be represented.
pub fn parse_network(text: &str) -> Result<Network, FileError> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| FileError::json("network", e))?;
    let mut variables = Vec::with_capacity(file.variables.len());
    let mut cards = BTreeMap::new();
    for (i, v) in file.variables.iter().enumerate() {
        let var = Variable::new(VarId(v.id), v.name.clone(), v.cardinality)
            .map_err(|e| FileError::field("network", format!("variables[{i}]"), e.to_string()))?;
        cards.insert(v.id, v.cardinality);
        variables.push(var);
    }
    let mut cpts = Vec::with_capacity(file.cpts.len());
    for (i, c) in file.cpts.iter().enumerate() {
        let field = format!("cpts[{i}]");
        if c.parents.contains(&c.child) {
            return Err(FileError::field("network", field, format!("cycle: variable {} lists itself as a parent", c.child)));
        }
        let card = |id: u32| {
            cards.get(&id).copied().ok_or_else(|| FileError::field("network", field.clone(), format!("unknown variable {id}")))
        };
        let child = (VarId(c.child), card(c.child)?);
        let parents = c.parents.iter().map(|&p| Ok((VarId(p), card(p)?))).collect::<Result<Vec<_>, FileError>>()?;
        let cpt = Cpt::unvalidated(child, parents, c.values.clone())
            .map_err(|e| FileError::field("network", field.clone(), e.to_string()))?;
        cpts.push(cpt);
    }
    Ok(Network::unchecked(variables, cpts))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Implications {
    Rule(String),
    Pairs(Vec<[[usize; 2]; 2]>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkillEntry {
    id: String,
    group: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    id: String,
    /// answer cell -> target cell -> λ
    lambda_targets: BTreeMap<String, BTreeMap<String, f64>>,
    /// skill -> answer cell -> λ
    #[serde(default)]
    lambda_supp: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    applicable: Vec<String>,
    lambda_leak: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RubricFile {
    components: Vec<String>,
    levels: Vec<String>,
    implications: Implications,
    #[serde(default)]
    supplementary: Vec<SkillEntry>,
    #[serde(default)]
    group_rows: BTreeMap<String, Vec<usize>>,
    tasks: Vec<TaskEntry>,
}

fn parse_cell(key: &str, field: impl Fn() -> String) -> Result<Cell, FileError> {
    let bad = || FileError::field("rubric", field(), format!("cell key {key:?} is not of the form \"r,c\""));
    let (r, c) = key.split_once(',').ok_or_else(bad)?;
    let r = r.trim().parse().map_err(|_| bad())?;
    let c = c.trim().parse().map_err(|_| bad())?;
    Ok(Cell::new(r, c))
}

fn cell_key(cell: Cell) -> String {
    format!("{},{}", cell.row, cell.col)
}

fn task_from_entry(t: TaskEntry) -> Result<TaskSpec, FileError> {
    let mut lambda_targets = BTreeMap::new();
    for (answer, row) in &t.lambda_targets {
        let a = parse_cell(answer, || format!("tasks[{}].lambda_targets", t.id))?;
        for (target, &lambda) in row {
            let x = parse_cell(target, || format!("tasks[{}].lambda_targets[{answer}]", t.id))?;
            lambda_targets.insert((a, x), lambda);
        }
    }
    let mut lambda_supp = BTreeMap::new();
    for (skill, row) in &t.lambda_supp {
        for (answer, &lambda) in row {
            let a = parse_cell(answer, || format!("tasks[{}].lambda_supp[{skill}]", t.id))?;
            lambda_supp.insert((skill.clone(), a), lambda);
        }
    }
    Ok(TaskSpec { id: t.id, lambda_targets, lambda_supp, applicable: t.applicable.into_iter().collect(), lambda_leak: t.lambda_leak })
}

fn task_to_entry(t: &TaskSpec) -> TaskEntry {
    let mut lambda_targets: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (&(answer, target), &lambda) in &t.lambda_targets {
        lambda_targets.entry(cell_key(answer)).or_default().insert(cell_key(target), lambda);
    }
    let mut lambda_supp: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for ((skill, answer), &lambda) in &t.lambda_supp {
        lambda_supp.entry(skill.clone()).or_default().insert(cell_key(*answer), lambda);
    }
    TaskEntry {
        id: t.id.clone(),
        lambda_targets,
        lambda_supp,
        applicable: t.applicable.iter().cloned().collect(),
        lambda_leak: t.lambda_leak,
    }
}

/// Parses and validates a rubric.
pub fn parse_rubric(text: &str) -> Result<RubricSpec, FileError> {
    let file: RubricFile = serde_json::from_str(text).map_err(|e| FileError::json("rubric", e))?;
    let rows = file.components.len();
    let cols = file.levels.len();
    let implications = match file.implications {
        Implications::Rule(rule) if rule == "consecutive" => {
            rubricnet_core::rubric::Grid { rows, cols }.consecutive_implications()
        }
        Implications::Rule(other) => {
            return Err(FileError::field("rubric", "implications".into(), format!("unknown rule {other:?}")));
        }
        Implications::Pairs(pairs) => {
            pairs.into_iter().map(|[s, i]| (Cell::new(s[0], s[1]), Cell::new(i[0], i[1]))).collect()
        }
    };
    let groups = file
        .group_rows
        .into_iter()
        .map(|(id, rows)| SkillGroup { id, rows: rows.into_iter().collect::<BTreeSet<_>>() })
        .collect();
    let spec = RubricSpec {
        components: file.components,
        levels: file.levels,
        implications,
        supplementary: file.supplementary.into_iter().map(|s| SupplementarySkill { id: s.id, group: s.group }).collect(),
        groups,
        tasks: file.tasks.into_iter().map(task_from_entry).collect::<Result<_, _>>()?,
    };
    spec.validate().map_err(|e| FileError::Core { what: "rubric", source: e })?;
    Ok(spec)
}

pub fn rubric_to_json(spec: &RubricSpec) -> String {
    let grid = spec.grid();
    let implications = if spec.implications == grid.consecutive_implications() {
        Implications::Rule("consecutive".into())
    } else {
        Implications::Pairs(spec.implications.iter().map(|(s, i)| [[s.row, s.col], [i.row, i.col]]).collect())
    };
    let file = RubricFile {
        components: spec.components.clone(),
        levels: spec.levels.clone(),
        implications,
        supplementary: spec.supplementary.iter().map(|s| SkillEntry { id: s.id.clone(), group: s.group.clone() }).collect(),
        group_rows: spec.groups.iter().map(|g| (g.id.clone(), g.rows.iter().copied().collect())).collect(),
        tasks: spec.tasks.iter().map(task_to_entry).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("rubric serializes");
    text.push('\n');
    text
}

/// Task tables overriding those of a rubric: a JSON list in the rubric's task format.
pub fn parse_task_overrides(text: &str) -> Result<Vec<TaskSpec>, FileError> {
    let entries: Vec<TaskEntry> = serde_json::from_str(text).map_err(|e| FileError::json("task override", e))?;
    entries.into_iter().map(task_from_entry).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rubricnet_core::cat::builtin_cat_spec;

    #[test]
    fn rubric_round_trip() {
        let spec = builtin_cat_spec();
        let text = rubric_to_json(&spec);
        assert!(text.contains("\"consecutive\""));
        assert_eq!(parse_rubric(&text).unwrap(), spec);
    }

    #[test]
    fn self_loop_is_reported_as_cycle() {
        let text = r#"{"variables":[{"id":0,"name":"a","cardinality":2}],
                       "cpts":[{"child":0,"parents":[0],"values":[0.5,0.5,0.5,0.5]}]}"#;
        let err = parse_network(text).unwrap_err().to_string();
        assert!(err.contains("cycle"), "{err}");
    }

    #[test]
    fn json_errors_carry_position() {
        let err = parse_network("{\"variables\": [\n  {\"id\": 0,}\n]}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
