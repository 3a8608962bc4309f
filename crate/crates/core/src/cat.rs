//! The Cross Array Task rubric: built-in specification, parameter sets for
//! the four model variants, student records, assessment and scores.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::engine::{evidence_probability, posterior, Query, INCONSISTENT_EVIDENCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::factor::Evidence;
use crate::rubric::{
    compile, encode_failure, encode_success_constrained, encode_success_unconstrained, encode_supplementary, AnswerEncoding, Cell,
    CompiledNetwork, Grid, ModelConfig, NodeKey, ParameterSource, RubricSpec, SkillGroup, SupplementaryPolicy,
    SupplementarySkill, TaskSpec,
};

pub const COMPONENTS: [&str; 3] = ["0D", "1D", "2D"];
pub const LEVELS: [&str; 3] = ["VSF", "VS", "V"];
pub const TASK_COUNT: usize = 12;
pub const SKILL_COUNT: usize = 10;

/// Inhibition of every edge in variants B, BC and BCS.
pub const DEFAULT_LAMBDA: f64 = 0.2;
/// Leak inhibition: a 0.1 chance of a correct answer without the skills.
pub const DEFAULT_LAMBDA_LEAK: f64 = 0.9;
pub const DEFAULT_PRIOR: f64 = 0.5;

/// Admissible inhibition values of the elicited parameter set.
pub const ECS_SCALE: [f64; 11] = [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60];

const GRID: Grid = Grid { rows: 3, cols: 3 };

/// Skills that cannot be used to solve T3.
const T3_EXCLUDED: [&str; 3] = ["S4", "S6", "S7"];

pub fn task_id(i: usize) -> String {
    format!("T{}", i + 1)
}

fn skill_group(i: usize) -> &'static str {
    match i {
        1 => "1",
        2..=7 => "2",
        _ => "3",
    }
}

fn builtin_applicable(task: usize) -> BTreeSet<String> {
    (1..=SKILL_COUNT)
        .map(|i| format!("S{i}"))
        .filter(|s| task != 2 || !T3_EXCLUDED.contains(&s.as_str()))
        .collect()
}

/// The CAT rubric with every inhibition at [`DEFAULT_LAMBDA`].
pub fn builtin_cat_spec() -> RubricSpec {
    let groups = [("1", [1, 2, 3].as_slice()), ("2", &[2, 3]), ("3", &[3])]
        .iter()
        .map(|(id, rows)| SkillGroup { id: id.to_string(), rows: rows.iter().copied().collect() })
        .collect();
    RubricSpec {
        components: COMPONENTS.iter().map(|s| s.to_string()).collect(),
        levels: LEVELS.iter().map(|s| s.to_string()).collect(),
        implications: GRID.consecutive_implications(),
        supplementary: (1..=SKILL_COUNT)
            .map(|i| SupplementarySkill { id: format!("S{i}"), group: skill_group(i).to_string() })
            .collect(),
        groups,
        tasks: (0..TASK_COUNT)
            .map(|t| TaskSpec::uniform(task_id(t), GRID, builtin_applicable(t), DEFAULT_LAMBDA, DEFAULT_LAMBDA_LEAK))
            .collect(),
    }
}

/// Elicited T3 inhibitions: one value per answer, growing with its
/// dimension and its autonomy level, shared by all relevant skills.
pub fn ecs_t3_lambdas() -> TaskSpec {
    let row_lambda = |answer: Cell| 0.20 + 0.05 * ((answer.row - 1) + (answer.col - 1)) as f64;
    let applicable = builtin_applicable(2);
    let mut task = TaskSpec::uniform("T3", GRID, applicable, DEFAULT_LAMBDA, DEFAULT_LAMBDA_LEAK);
    for ((answer, _), lambda) in task.lambda_targets.iter_mut() {
        *lambda = round2(row_lambda(*answer));
    }
    for ((_, answer), lambda) in task.lambda_supp.iter_mut() {
        *lambda = round2(row_lambda(*answer));
    }
    task
}

fn round2(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    B,
    BC,
    BCS,
    ECS,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::B, Variant::BC, Variant::BCS, Variant::ECS];

    pub fn constrained(self) -> bool {
        self != Variant::B
    }

    pub fn supplementary(self) -> bool {
        matches!(self, Variant::BCS | Variant::ECS)
    }

    pub fn model_config(self) -> ModelConfig {
        ModelConfig {
            constraints_enabled: self.constrained(),
            supplementary_enabled: self.supplementary(),
            parameters: ParameterSource::PerTask,
            target_prior: DEFAULT_PRIOR,
            supplementary_prior: DEFAULT_PRIOR,
            ..ModelConfig::default()
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::B => "B",
            Variant::BC => "BC",
            Variant::BCS => "BCS",
            Variant::ECS => "ECS",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b" => Ok(Variant::B),
            "bc" => Ok(Variant::BC),
            "bcs" => Ok(Variant::BCS),
            "ecs" => Ok(Variant::ECS),
            _ => Err(Error::Data(format!("unknown variant {s:?} (expected b, bc, bcs or ecs)"))),
        }
    }
}

/// Rubric plus inhibition tables for one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct CatParameterSet {
    pub variant: Variant,
    pub spec: RubricSpec,
}

impl CatParameterSet {
    /// Default tables; ECS replaces T3 with [`ecs_t3_lambdas`].
    pub fn builtin(variant: Variant) -> Self {
        let mut set = CatParameterSet { variant, spec: builtin_cat_spec() };
        if variant == Variant::ECS {
            set.override_task(ecs_t3_lambdas()).expect("T3 exists");
        }
        set
    }

    /// Replaces the task with the same id.
    pub fn override_task(&mut self, task: TaskSpec) -> Result<()> {
        let i = self.spec.task_index(&task.id).ok_or_else(|| Error::Data(format!("unknown task {}", task.id)))?;
        self.spec.tasks[i] = task;
        Ok(())
    }
}

/// Outcome of one task: the achieved cell or a failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatResult {
    Solved(Cell),
    Fail,
}

impl CatResult {
    /// Table score: dimension plus autonomy, both counted from zero; -1 for a failure.
    pub fn score(self) -> f64 {
        match self {
            CatResult::Solved(c) => ((c.row - 1) + (c.col - 1)) as f64,
            CatResult::Fail => -1.0,
        }
    }
}

impl fmt::Display for CatResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatResult::Solved(c) => write!(f, "{}-{}", COMPONENTS[c.row - 1], LEVELS[c.col - 1]),
            CatResult::Fail => f.write_str("fail"),
        }
    }
}

impl FromStr for CatResult {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("fail") {
            return Ok(CatResult::Fail);
        }
        let parsed = s.split_once('-').and_then(|(d, a)| {
            let r = COMPONENTS.iter().position(|c| c.eq_ignore_ascii_case(d))?;
            let c = LEVELS.iter().position(|l| l.eq_ignore_ascii_case(a))?;
            Some(Cell::new(r + 1, c + 1))
        });
        parsed.map(CatResult::Solved).ok_or_else(|| Error::Data(format!("unknown result {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatOutcome {
    pub task: String,
    pub result: CatResult,
    pub supplementary_used: BTreeSet<String>,
}

impl CatOutcome {
    pub fn new(task: impl Into<String>, result: CatResult, supplementary_used: impl IntoIterator<Item = impl Into<String>>) -> Self {
        CatOutcome { task: task.into(), result, supplementary_used: supplementary_used.into_iter().map(Into::into).collect() }
    }
}

/// One student's twelve outcomes, stored in task order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StudentRecord {
    pub id: String,
    outcomes: Vec<CatOutcome>,
}

impl StudentRecord {
    pub fn new(id: impl Into<String>, outcomes: Vec<CatOutcome>) -> Result<Self> {
        let id = id.into();
        let spec = builtin_cat_spec();
        let mut slots: Vec<Option<CatOutcome>> = alloc::vec![None; TASK_COUNT];
        for o in outcomes {
            let t = spec.task_index(&o.task).ok_or_else(|| Error::Data(format!("student {id}: unknown task {}", o.task)))?;
            if o.result == CatResult::Fail && !o.supplementary_used.is_empty() {
                return Err(Error::Data(format!("student {id}: task {} failed but lists supplementary skills", o.task)));
            }
            if let Some(s) = o.supplementary_used.iter().find(|s| !spec.tasks[t].applicable.contains(*s)) {
                return Err(Error::Data(format!("student {id}: skill {s} is not applicable to task {}", o.task)));
            }
            if slots[t].is_some() {
                return Err(Error::Data(format!("student {id}: task {} recorded twice", o.task)));
            }
            slots[t] = Some(o);
        }
        let outcomes = slots
            .into_iter()
            .enumerate()
            .map(|(t, o)| o.ok_or_else(|| Error::Data(format!("student {id}: no outcome for task {}", task_id(t)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(StudentRecord { id, outcomes })
    }

    pub fn outcomes(&self) -> &[CatOutcome] {
        &self.outcomes
    }
}

/// Mean table score over the twelve tasks.
pub fn cat_score(record: &StudentRecord) -> f64 {
    record.outcomes.iter().map(|o| o.result.score()).sum::<f64>() / record.outcomes.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompetenceProfile {
    pub student: String,
    pub variant: Variant,
    /// `P(X_rc = 1 | evidence)`, row-major.
    pub targets: Vec<f64>,
    /// `P(S_i = 1 | evidence)` for S1..S10 when the variant models them.
    pub supplementary: Option<Vec<f64>>,
    pub cat_score: f64,
    pub bn_raw: f64,
    pub bn_rescaled: f64,
}

/// Expected number of mastered cells, and the same on the 0..4 table scale.
pub fn bn_cat_score(targets: &[f64]) -> (f64, f64) {
    let raw: f64 = targets.iter().sum();
    (raw, raw * 4.0 / 9.0)
}

/// Product-moment correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::UndefinedCorrelation("lists differ in length"));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two pairs"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// Encoding overrides for [`CatModel::assess`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AssessOptions {
    /// Answer encoding; the variant's own when `None`.
    pub encoding: Option<AnswerEncoding>,
    /// Encoding of failed tasks only; follows `encoding` when `None`.
    pub failure_encoding: Option<AnswerEncoding>,
    pub supplementary: SupplementaryPolicy,
}

/// A variant compiled once and reused for every student.
#[derive(Clone, Debug)]
pub struct CatModel {
    params: CatParameterSet,
    compiled: CompiledNetwork,
}

impl CatModel {
    pub fn new(params: CatParameterSet) -> Result<Self> {
        let compiled = compile(&params.spec, &params.variant.model_config())?;
        Ok(CatModel { params, compiled })
    }

    pub fn variant(&self) -> Variant {
        self.params.variant
    }

    pub fn compiled(&self) -> &CompiledNetwork {
        &self.compiled
    }

    pub fn spec(&self) -> &RubricSpec {
        &self.params.spec
    }

    /// Evidence contributed by each task, in task order.
    pub fn task_evidence(&self, record: &StudentRecord, opts: &AssessOptions) -> Result<Vec<Evidence>> {
        let spec = &self.params.spec;
        let encoding = opts.encoding.unwrap_or(if self.params.variant.constrained() {
            AnswerEncoding::Constrained
        } else {
            AnswerEncoding::Unconstrained
        });
        let failure_encoding = opts.failure_encoding.unwrap_or(encoding);
        record
            .outcomes
            .iter()
            .map(|o| {
                let t = spec.task_index(&o.task).ok_or_else(|| Error::Data(format!("unknown task {}", o.task)))?;
                let answers: BTreeMap<Cell, usize> = match (o.result, encoding) {
                    (CatResult::Fail, _) => encode_failure(GRID, failure_encoding),
                    (CatResult::Solved(c), AnswerEncoding::Unconstrained) => encode_success_unconstrained(GRID, c),
                    (CatResult::Solved(c), AnswerEncoding::Constrained) => encode_success_constrained(GRID, c),
                };
                let mut e = self.compiled.answer_evidence(t, &answers)?;
                if self.params.variant.supplementary() {
                    let failed = o.result == CatResult::Fail;
                    let obs = encode_supplementary(spec, t, &o.supplementary_used, failed, opts.supplementary)?;
                    e.merge(&self.compiled.supplementary_evidence(t, &obs)?)?;
                }
                Ok(e)
            })
            .collect()
    }

    /// All evidence for `record`, including the clamped leak and constraints.
    pub fn evidence(&self, record: &StudentRecord, opts: &AssessOptions) -> Result<Evidence> {
        let mut e = self.compiled.base_evidence();
        for task in self.task_evidence(record, opts)? {
            e.merge(&task)?;
        }
        Ok(e)
    }

    pub fn assess(&self, record: &StudentRecord, opts: &AssessOptions) -> Result<CompetenceProfile> {
        let evidence = self.evidence(record, opts)?;
        let net = self.compiled.network();
        let query = |id| -> Result<f64> {
            match posterior(net, &Query::new(id, evidence.clone())?) {
                Ok(p) => Ok(p[1]),
                Err(Error::InconsistentEvidence) => Err(self.offending_task(record, opts)),
                Err(e) => Err(e),
            }
        };
        let targets = self.compiled.target_ids().into_iter().map(query).collect::<Result<Vec<_>>>()?;
        let supplementary = if self.params.variant.supplementary() {
            let ids = (0..self.params.spec.supplementary.len()).map(|i| self.compiled.id(&NodeKey::Supplementary(i)).expect("compiled"));
            Some(ids.map(query).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        let (bn_raw, bn_rescaled) = bn_cat_score(&targets);
        Ok(CompetenceProfile {
            student: record.id.clone(),
            variant: self.params.variant,
            targets,
            supplementary,
            cat_score: cat_score(record),
            bn_raw,
            bn_rescaled,
        })
    }

    /// First task whose evidence, added in order, drives the probability to zero.
    fn offending_task(&self, record: &StudentRecord, opts: &AssessOptions) -> Error {
        let per_task = match self.task_evidence(record, opts) {
            Ok(e) => e,
            Err(e) => return e,
        };
        let mut e = self.compiled.base_evidence();
        for (o, task) in record.outcomes.iter().zip(per_task) {
            if e.merge(&task).is_err() {
                return Error::InconsistentTask { task: o.task.clone() };
            }
            match evidence_probability(self.compiled.network(), &e) {
                Ok(p) if p > INCONSISTENT_EVIDENCE_THRESHOLD => {}
                _ => return Error::InconsistentTask { task: o.task.clone() },
            }
        }
        Error::InconsistentEvidence
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(result: &str) -> StudentRecord {
        let r: CatResult = result.parse().unwrap();
        StudentRecord::new("x", (0..TASK_COUNT).map(|t| CatOutcome::new(task_id(t), r, Vec::<String>::new())).collect()).unwrap()
    }

    #[test]
    fn result_labels_round_trip() {
        for r in ["0D-VSF", "1D-VS", "2D-V", "fail"] {
            assert_eq!(r.parse::<CatResult>().unwrap().to_string(), r);
        }
        assert_eq!("1D-VS".parse::<CatResult>().unwrap(), CatResult::Solved(Cell::new(2, 2)));
        assert!("3D-V".parse::<CatResult>().is_err());
    }

    #[test]
    fn table_scores() {
        assert_eq!("0D-VSF".parse::<CatResult>().unwrap().score(), 0.0);
        assert_eq!("2D-V".parse::<CatResult>().unwrap().score(), 4.0);
        assert_eq!(cat_score(&all("fail")), -1.0);
    }

    #[test]
    fn builtin_shape() {
        let spec = builtin_cat_spec();
        spec.validate().unwrap();
        assert_eq!(spec.grid().len(), 9);
        assert_eq!(spec.supplementary.len(), 10);
        assert_eq!(spec.tasks.len(), 12);
        for s in T3_EXCLUDED {
            assert!(!spec.tasks[2].applicable.contains(s));
        }
        assert_eq!(spec.required_groups(3).count(), 3);
        assert_eq!(spec.required_groups(1).count(), 1);
    }

    #[test]
    fn ecs_t3_corners() {
        let t3 = ecs_t3_lambdas();
        assert_eq!(t3.lambda_targets[&(Cell::new(1, 1), Cell::new(3, 3))], 0.20);
        assert_eq!(t3.lambda_targets[&(Cell::new(3, 3), Cell::new(3, 3))], 0.40);
        assert_eq!(t3.lambda_targets[&(Cell::new(2, 2), Cell::new(2, 3))], 0.30);
    }

    #[test]
    fn record_validation() {
        let mut outcomes: Vec<CatOutcome> = all("1D-V").outcomes().to_vec();
        outcomes.pop();
        assert!(StudentRecord::new("x", outcomes.clone()).is_err());
        outcomes.push(CatOutcome::new("T12", CatResult::Fail, ["S1"]));
        assert!(StudentRecord::new("x", outcomes.clone()).is_err());
        outcomes.pop();
        outcomes.push(CatOutcome::new("T3", "1D-V".parse().unwrap(), ["S4"]));
        assert!(StudentRecord::new("x", outcomes).is_err());
    }

    #[test]
    fn bn_score_bounds() {
        assert_eq!(bn_cat_score(&[1.0; 9]), (9.0, 4.0));
        assert_eq!(bn_cat_score(&[0.0; 9]), (0.0, 0.0));
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 3.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // centred (-1,0,1) · (-7/3,-1/3,8/3) = 5; norms sqrt(2), sqrt(38/3)
        let hand = 5.0 / (libm::sqrt(2.0) * libm::sqrt(38.0 / 3.0));
        assert!((pearson(&a, &[2.0, 4.0, 7.0]).unwrap() - hand).abs() < 1e-12);
        assert!((hand - 0.9934).abs() < 1e-4);
        assert!(matches!(pearson(&a, &[1.0; 3]), Err(Error::UndefinedCorrelation(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn model_b_has_118_variables() {
        let m = CatModel::new(CatParameterSet::builtin(Variant::B)).unwrap();
        let s = m.compiled().summary();
        assert_eq!(s.variables, 118);
        let y11 = m.compiled().id(&NodeKey::Answer { task: 0, answer: Cell::new(1, 1) }).unwrap();
        assert_eq!(m.compiled().network().cpt(y11).unwrap().parents().len(), 10);
        let bc = CatModel::new(CatParameterSet::builtin(Variant::BC)).unwrap();
        assert_eq!(bc.compiled().summary().constraints, 12);
        assert_eq!(bc.compiled().summary().variables, 130);
    }

    #[test]
    fn all_top_answers_give_high_profile() {
        let m = CatModel::new(CatParameterSet::builtin(Variant::BC)).unwrap();
        let p = m.assess(&all("2D-V"), &AssessOptions::default()).unwrap();
        assert!(p.targets.iter().all(|&x| x > 0.99), "{:?}", p.targets);
        assert_eq!(p.cat_score, 4.0);
    }
}
