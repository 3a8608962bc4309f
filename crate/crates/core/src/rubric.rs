//! Two-entry assessment rubrics (components × levels) and their compilation
//! into quantified networks, plus encoders turning observed answers into
//! evidence.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::factor::{Evidence, VarId, Variable};
use crate::gates::{and_cpt, constraint_cpt, noisy_or_cpt, prior_cpt, ConstraintSpec, NoisyOrSpec};
use crate::network::{Cpt, Network};

/// A rubric cell, 1-based: `row` indexes components, `col` indexes levels.
/// Ordering is row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Strict dominance: a higher level at a component at least as high, or
    /// the same level at a strictly higher component.
    pub fn dominates(self, other: Cell) -> bool {
        (self.col > other.col && self.row >= other.row) || (self.col == other.col && self.row > other.row)
    }

    /// Whether mastering `self` can produce the behaviour of answer `answer`.
    pub fn expresses(self, answer: Cell) -> bool {
        self.row >= answer.row && self.col >= answer.col
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

/// Grid dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub fn cells(self) -> impl Iterator<Item = Cell> {
        (1..=self.rows).flat_map(move |r| (1..=self.cols).map(move |c| Cell::new(r, c)))
    }

    pub fn contains(self, cell: Cell) -> bool {
        (1..=self.rows).contains(&cell.row) && (1..=self.cols).contains(&cell.col)
    }

    pub fn len(self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    /// Row-major position of `cell`.
    pub fn position(self, cell: Cell) -> usize {
        (cell.row - 1) * self.cols + (cell.col - 1)
    }

    /// Target parents of answer `answer`: every cell at or above it in both
    /// dimensions.
    pub fn answer_parents(self, answer: Cell) -> impl Iterator<Item = Cell> {
        self.cells().filter(move |c| c.expresses(answer))
    }

    /// Every pair of horizontally or vertically adjacent cells, as
    /// `(superior, inferior)`.
    pub fn consecutive_implications(self) -> Vec<(Cell, Cell)> {
        let mut pairs = Vec::new();
        for cell in self.cells() {
            if cell.col < self.cols {
                pairs.push((Cell::new(cell.row, cell.col + 1), cell));
            }
            if cell.row < self.rows {
                pairs.push((Cell::new(cell.row + 1, cell.col), cell));
            }
        }
        pairs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupplementarySkill {
    pub id: String,
    pub group: String,
}

/// A group of interchangeable supplementary skills and the component rows
/// whose answers need it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkillGroup {
    pub id: String,
    pub rows: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    /// `(answer cell, target cell) -> λ`.
    pub lambda_targets: BTreeMap<(Cell, Cell), f64>,
    /// `(supplementary skill id, answer cell) -> λ`.
    pub lambda_supp: BTreeMap<(String, Cell), f64>,
    /// Supplementary skills usable in this task.
    pub applicable: BTreeSet<String>,
    pub lambda_leak: f64,
}

impl TaskSpec {
    /// Fills every target and supplementary table entry with `lambda`.
    pub fn uniform(id: impl Into<String>, grid: Grid, applicable: BTreeSet<String>, lambda: f64, lambda_leak: f64) -> Self {
        let mut lambda_targets = BTreeMap::new();
        let mut lambda_supp = BTreeMap::new();
        for answer in grid.cells() {
            for parent in grid.answer_parents(answer) {
                lambda_targets.insert((answer, parent), lambda);
            }
            for skill in &applicable {
                lambda_supp.insert((skill.clone(), answer), lambda);
            }
        }
        TaskSpec { id: id.into(), lambda_targets, lambda_supp, applicable, lambda_leak }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RubricSpec {
    /// Row labels, lowest first.
    pub components: Vec<String>,
    /// Column labels, lowest first.
    pub levels: Vec<String>,
    /// `(superior, inferior)` pairs.
    pub implications: Vec<(Cell, Cell)>,
    pub supplementary: Vec<SupplementarySkill>,
    pub groups: Vec<SkillGroup>,
    pub tasks: Vec<TaskSpec>,
}

fn check_lambda(task: &str, what: impl FnOnce() -> String, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Rubric(format!("task {task}: {} = {value} is outside [0, 1]", what())))
    }
}

impl RubricSpec {
    pub fn grid(&self) -> Grid {
        Grid { rows: self.components.len(), cols: self.levels.len() }
    }

    /// `"<component>-<level>"`, e.g. `1D-VS`.
    pub fn cell_label(&self, cell: Cell) -> String {
        format!("{}-{}", self.components[cell.row - 1], self.levels[cell.col - 1])
    }

    pub fn parse_cell_label(&self, label: &str) -> Option<Cell> {
        let (row, col) = label.split_once('-')?;
        let r = self.components.iter().position(|c| c == row)?;
        let c = self.levels.iter().position(|l| l == col)?;
        Some(Cell::new(r + 1, c + 1))
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn skill_index(&self, id: &str) -> Option<usize> {
        self.supplementary.iter().position(|s| s.id == id)
    }

    fn group_index(&self, id: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.id == id)
    }

    /// Indices of the groups an answer in `row` requires, in declaration order.
    pub fn required_groups(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().enumerate().filter(move |(_, g)| g.rows.contains(&row)).map(|(i, _)| i)
    }

    /// Skills of group `group` applicable in task `task`, in declaration order.
    pub fn applicable_in_group(&self, task: usize, group: usize) -> impl Iterator<Item = usize> + '_ {
        let t = &self.tasks[task];
        let gid = &self.groups[group].id;
        self.supplementary
            .iter()
            .enumerate()
            .filter(move |(_, s)| &s.group == gid && t.applicable.contains(&s.id))
            .map(|(i, _)| i)
    }

    /// First answer, in row-major order, that requires the group of `skill`.
    pub fn topmost_answer_for(&self, skill: usize) -> Option<Cell> {
        let group = self.group_index(&self.supplementary[skill].group)?;
        self.grid().cells().find(|c| self.groups[group].rows.contains(&c.row))
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        if grid.is_empty() {
            return Err(Error::Rubric("rubric needs at least one component and one level".into()));
        }
        for (sup, inf) in &self.implications {
            if !grid.contains(*sup) || !grid.contains(*inf) {
                return Err(Error::Rubric(format!("implication ({sup}) -> ({inf}) references a cell outside the grid")));
            }
            if sup == inf {
                return Err(Error::Rubric(format!("cell ({sup}) implies itself")));
            }
        }
        self.check_implications_acyclic()?;

        let mut group_ids = BTreeSet::new();
        for g in &self.groups {
            if !group_ids.insert(g.id.as_str()) {
                return Err(Error::Rubric(format!("group {} declared twice", g.id)));
            }
            if g.rows.is_empty() {
                return Err(Error::Rubric(format!("group {} is required by no row", g.id)));
            }
            if let Some(r) = g.rows.iter().find(|&&r| r == 0 || r > grid.rows) {
                return Err(Error::Rubric(format!("group {} requires row {r}, which does not exist", g.id)));
            }
        }
        let mut skill_ids = BTreeSet::new();
        for s in &self.supplementary {
            if !skill_ids.insert(s.id.as_str()) {
                return Err(Error::Rubric(format!("supplementary skill {} declared twice", s.id)));
            }
            if !group_ids.contains(s.group.as_str()) {
                return Err(Error::Rubric(format!("skill {} belongs to unknown group {}", s.id, s.group)));
            }
        }

        let mut task_ids = BTreeSet::new();
        for t in &self.tasks {
            if !task_ids.insert(t.id.as_str()) {
                return Err(Error::Rubric(format!("task {} declared twice", t.id)));
            }
            check_lambda(&t.id, || "leak inhibition".into(), t.lambda_leak)?;
            for ((answer, target), &lambda) in &t.lambda_targets {
                if !grid.contains(*answer) || !grid.contains(*target) {
                    return Err(Error::Rubric(format!("task {}: inhibition for ({answer}) / ({target}) is outside the grid", t.id)));
                }
                if !target.expresses(*answer) {
                    return Err(Error::Rubric(format!("task {}: cell ({target}) is not a parent of answer ({answer})", t.id)));
                }
                check_lambda(&t.id, || format!("target inhibition at answer ({answer}), skill ({target})"), lambda)?;
            }
            for skill in &t.applicable {
                if !skill_ids.contains(skill.as_str()) {
                    return Err(Error::Rubric(format!("task {}: unknown supplementary skill {skill}", t.id)));
                }
            }
            for ((skill, answer), &lambda) in &t.lambda_supp {
                if !t.applicable.contains(skill) {
                    return Err(Error::Rubric(format!("task {}: inhibition given for non-applicable skill {skill}", t.id)));
                }
                if !grid.contains(*answer) {
                    return Err(Error::Rubric(format!("task {}: answer ({answer}) is outside the grid", t.id)));
                }
                check_lambda(&t.id, || format!("inhibition of {skill} at answer ({answer})"), lambda)?;
            }
        }
        Ok(())
    }

    fn check_implications_acyclic(&self) -> Result<()> {
        let grid = self.grid();
        let n = grid.len();
        let mut indegree = alloc::vec![0usize; n];
        let mut out: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (sup, inf) in &self.implications {
            out[grid.position(*sup)].push(grid.position(*inf));
            indegree[grid.position(*inf)] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = ready.pop() {
            seen += 1;
            for &j in &out[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            Err(Error::Rubric("implications contain a cycle".into()))
        }
    }
}

/// Where inhibitions come from.
#[derive(Clone, Debug, PartialEq)]
pub enum ParameterSource {
    /// One `λ` for every target and supplementary edge, one leak `λ`.
    Uniform { lambda: f64, lambda_leak: f64 },
    /// The per-task tables of the rubric.
    PerTask,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub constraints_enabled: bool,
    pub supplementary_enabled: bool,
    pub parameters: ParameterSource,
    /// Prior of every target skill without an entry in `cell_priors`.
    pub target_prior: f64,
    pub cell_priors: BTreeMap<Cell, f64>,
    pub supplementary_prior: f64,
    /// `P(D = 1)` for every configuration the constraint allows.
    pub p_star: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            constraints_enabled: false,
            supplementary_enabled: false,
            parameters: ParameterSource::PerTask,
            target_prior: 0.5,
            cell_priors: BTreeMap::new(),
            supplementary_prior: 0.5,
            p_star: 1.0,
        }
    }
}

impl ModelConfig {
    fn validate(&self, spec: &RubricSpec) -> Result<()> {
        if self.supplementary_enabled && spec.supplementary.is_empty() {
            return Err(Error::Rubric("supplementary layer requested but the rubric declares no supplementary skills".into()));
        }
        if let ParameterSource::Uniform { lambda, lambda_leak } = self.parameters {
            check_lambda("*", || "uniform inhibition".into(), lambda)?;
            check_lambda("*", || "uniform leak inhibition".into(), lambda_leak)?;
        }
        Ok(())
    }
}

/// Semantic name of a compiled node. Task and skill fields are indices into
/// the rubric's `tasks` and `supplementary` lists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKey {
    Target(Cell),
    Supplementary(usize),
    Leak,
    Constraint { superior: Cell, inferior: Cell },
    TargetGroup { task: usize, answer: Cell },
    Group { task: usize, answer: Cell, group: usize },
    And { task: usize, answer: Cell },
    Answer { task: usize, answer: Cell },
    SupplementaryAnswer { task: usize, skill: usize },
}

/// Node counts by category.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NetworkSummary {
    pub variables: usize,
    pub edges: usize,
    pub targets: usize,
    pub supplementary: usize,
    pub leaks: usize,
    pub constraints: usize,
    pub groups: usize,
    pub answers: usize,
    pub supplementary_answers: usize,
}

#[derive(Clone, Debug)]
pub struct CompiledNetwork {
    network: Network,
    index: BTreeMap<NodeKey, VarId>,
    grid: Grid,
}

impl CompiledNetwork {
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn id(&self, key: &NodeKey) -> Option<VarId> {
        self.index.get(key).copied()
    }

    pub fn index(&self) -> &BTreeMap<NodeKey, VarId> {
        &self.index
    }

    /// Target skill ids in row-major order.
    pub fn target_ids(&self) -> Vec<VarId> {
        self.grid.cells().map(|c| self.index[&NodeKey::Target(c)]).collect()
    }

    /// Supplementary root ids in declaration order (empty without the layer).
    pub fn supplementary_ids(&self) -> Vec<VarId> {
        self.index.iter().filter(|(k, _)| matches!(k, NodeKey::Supplementary(_))).map(|(_, &v)| v).collect()
    }

    pub fn constraints(&self) -> impl Iterator<Item = (Cell, Cell, VarId)> + '_ {
        self.index.iter().filter_map(|(k, &v)| match k {
            NodeKey::Constraint { superior, inferior } => Some((*superior, *inferior, v)),
            _ => None,
        })
    }

    /// Leak clamped on, every constraint node clamped to 1.
    pub fn base_evidence(&self) -> Evidence {
        let mut e = Evidence::new();
        let _ = e.insert(self.index[&NodeKey::Leak], 1);
        for (_, _, d) in self.constraints() {
            let _ = e.insert(d, 1);
        }
        e
    }

    /// Evidence over the answer nodes of `task`.
    pub fn answer_evidence(&self, task: usize, observations: &BTreeMap<Cell, usize>) -> Result<Evidence> {
        let mut e = Evidence::new();
        for (&answer, &state) in observations {
            let id = self
                .id(&NodeKey::Answer { task, answer })
                .ok_or_else(|| Error::Data(format!("no answer node ({answer}) for task index {task}")))?;
            e.insert(id, state)?;
        }
        Ok(e)
    }

    /// Evidence over the direct supplementary nodes of `task`, keyed by skill index.
    pub fn supplementary_evidence(&self, task: usize, observations: &BTreeMap<usize, usize>) -> Result<Evidence> {
        let mut e = Evidence::new();
        for (&skill, &state) in observations {
            let id = self
                .id(&NodeKey::SupplementaryAnswer { task, skill })
                .ok_or_else(|| Error::Data(format!("no supplementary observation node for skill index {skill} in task index {task}")))?;
            e.insert(id, state)?;
        }
        Ok(e)
    }

    pub fn summary(&self) -> NetworkSummary {
        let mut s = NetworkSummary {
            variables: self.network.len(),
            edges: self.network.edge_count(),
            ..NetworkSummary::default()
        };
        for key in self.index.keys() {
            match key {
                NodeKey::Target(_) => s.targets += 1,
                NodeKey::Supplementary(_) => s.supplementary += 1,
                NodeKey::Leak => s.leaks += 1,
                NodeKey::Constraint { .. } => s.constraints += 1,
                NodeKey::TargetGroup { .. } | NodeKey::Group { .. } | NodeKey::And { .. } => s.groups += 1,
                NodeKey::Answer { .. } => s.answers += 1,
                NodeKey::SupplementaryAnswer { .. } => s.supplementary_answers += 1,
            }
        }
        s
    }
}

fn cell_tag(cell: Cell) -> String {
    if cell.row < 10 && cell.col < 10 {
        format!("{}{}", cell.row, cell.col)
    } else {
        format!("{}_{}", cell.row, cell.col)
    }
}

/// Variable name of a target skill, e.g. `X23`.
pub fn target_name(cell: Cell) -> String {
    format!("X{}", cell_tag(cell))
}

#[derive(Default)]
struct Builder {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    index: BTreeMap<NodeKey, VarId>,
}

impl Builder {
    fn add(&mut self, key: NodeKey, name: String, cpt: impl FnOnce(VarId) -> Result<Cpt>) -> Result<VarId> {
        let id = VarId(self.variables.len() as u32);
        self.cpts.push(cpt(id)?);
        self.variables.push(Variable::binary(id, name));
        self.index.insert(key, id);
        Ok(id)
    }
}

struct Lambdas<'a> {
    spec: &'a RubricSpec,
    source: &'a ParameterSource,
}

impl Lambdas<'_> {
    fn target(&self, task: usize, answer: Cell, target: Cell) -> Result<f64> {
        match *self.source {
            ParameterSource::Uniform { lambda, .. } => Ok(lambda),
            ParameterSource::PerTask => {
                let t = &self.spec.tasks[task];
                t.lambda_targets.get(&(answer, target)).copied().ok_or_else(|| Error::MissingInhibition {
                    task: t.id.clone(),
                    cell: self.spec.cell_label(answer),
                    skill: target_name(target),
                })
            }
        }
    }

    fn supplementary(&self, task: usize, answer: Cell, skill: usize) -> Result<f64> {
        match *self.source {
            ParameterSource::Uniform { lambda, .. } => Ok(lambda),
            ParameterSource::PerTask => {
                let t = &self.spec.tasks[task];
                let id = &self.spec.supplementary[skill].id;
                t.lambda_supp.get(&(id.clone(), answer)).copied().ok_or_else(|| Error::MissingInhibition {
                    task: t.id.clone(),
                    cell: self.spec.cell_label(answer),
                    skill: id.clone(),
                })
            }
        }
    }

    fn leak(&self, task: usize) -> f64 {
        match *self.source {
            ParameterSource::Uniform { lambda_leak, .. } => lambda_leak,
            ParameterSource::PerTask => self.spec.tasks[task].lambda_leak,
        }
    }
}

/// Builds the network for `spec` under `cfg`.
///
/// Variable ids are assigned in a fixed order (targets, leak, supplementary
/// roots, constraints, then task by task), so equal inputs give equal networks.
pub fn compile(spec: &RubricSpec, cfg: &ModelConfig) -> Result<CompiledNetwork> {
    spec.validate()?;
    cfg.validate(spec)?;
    let grid = spec.grid();
    let lambdas = Lambdas { spec, source: &cfg.parameters };
    let mut b = Builder::default();

    for cell in grid.cells() {
        let prior = cfg.cell_priors.get(&cell).copied().unwrap_or(cfg.target_prior);
        b.add(NodeKey::Target(cell), target_name(cell), |id| prior_cpt(id, prior))?;
    }
    let target = |b: &Builder, cell: Cell| b.index[&NodeKey::Target(cell)];
    let leak = b.add(NodeKey::Leak, "leak".into(), |id| prior_cpt(id, 1.0))?;

    if cfg.supplementary_enabled {
        for (i, s) in spec.supplementary.iter().enumerate() {
            b.add(NodeKey::Supplementary(i), s.id.clone(), |id| prior_cpt(id, cfg.supplementary_prior))?;
        }
    }

    if cfg.constraints_enabled {
        for &(superior, inferior) in &spec.implications {
            let c = ConstraintSpec { superior: target(&b, superior), inferior: target(&b, inferior), p_star: cfg.p_star };
            let name = format!("D{}_{}", cell_tag(superior), cell_tag(inferior));
            b.add(NodeKey::Constraint { superior, inferior }, name, |id| constraint_cpt(&c, id))?;
        }
    }

    for (ti, task) in spec.tasks.iter().enumerate() {
        let leak_lambda = lambdas.leak(ti);
        for answer in grid.cells() {
            let mut parents = Vec::new();
            for cell in grid.answer_parents(answer) {
                parents.push((target(&b, cell), lambdas.target(ti, answer, cell)?));
            }
            let prefix = format!("{}.Y{}", task.id, cell_tag(answer));

            if !cfg.supplementary_enabled {
                parents.push((leak, leak_lambda));
                let gate = NoisyOrSpec::new(parents);
                b.add(NodeKey::Answer { task: ti, answer }, prefix, |id| noisy_or_cpt(&gate, id))?;
                continue;
            }

            let gate = NoisyOrSpec::new(parents);
            let gx = b.add(NodeKey::TargetGroup { task: ti, answer }, format!("{prefix}.GX"), |id| noisy_or_cpt(&gate, id))?;
            let mut conjuncts = alloc::vec![gx];
            for g in spec.required_groups(answer.row).collect::<Vec<_>>() {
                let mut members = Vec::new();
                for skill in spec.applicable_in_group(ti, g).collect::<Vec<_>>() {
                    members.push((b.index[&NodeKey::Supplementary(skill)], lambdas.supplementary(ti, answer, skill)?));
                }
                // a group with nothing applicable in this task imposes nothing
                if members.is_empty() {
                    continue;
                }
                let gate = NoisyOrSpec::new(members);
                let name = format!("{prefix}.G{}", spec.groups[g].id);
                conjuncts.push(b.add(NodeKey::Group { task: ti, answer, group: g }, name, |id| noisy_or_cpt(&gate, id))?);
            }
            let and = b.add(NodeKey::And { task: ti, answer }, format!("{prefix}.AND"), |id| and_cpt(&conjuncts, id))?;
            let gate = NoisyOrSpec::new(alloc::vec![(and, 0.0), (leak, leak_lambda)]);
            b.add(NodeKey::Answer { task: ti, answer }, prefix, |id| noisy_or_cpt(&gate, id))?;
        }

        if cfg.supplementary_enabled {
            for (si, skill) in spec.supplementary.iter().enumerate() {
                if !task.applicable.contains(&skill.id) {
                    continue;
                }
                let top = spec
                    .topmost_answer_for(si)
                    .ok_or_else(|| Error::Rubric(format!("skill {} is relevant to no answer", skill.id)))?;
                let lambda = lambdas.supplementary(ti, top, si)?;
                let gate = NoisyOrSpec::new(alloc::vec![(b.index[&NodeKey::Supplementary(si)], lambda), (leak, leak_lambda)]);
                let name = format!("{}.{}", task.id, skill.id);
                b.add(NodeKey::SupplementaryAnswer { task: ti, skill: si }, name, |id| noisy_or_cpt(&gate, id))?;
            }
        }
    }

    let network = Network::new(b.variables, b.cpts)?;
    Ok(CompiledNetwork { network, index: b.index, grid })
}

/// How observed answers are turned into answer-node evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnswerEncoding {
    /// Every answer comparable with the achieved cell is observed.
    Unconstrained,
    /// Only the achieved cell and its immediate successors are observed;
    /// the constraint nodes carry the rest.
    Constrained,
}

impl AnswerEncoding {
    pub fn for_config(cfg: &ModelConfig) -> Self {
        if cfg.constraints_enabled {
            AnswerEncoding::Constrained
        } else {
            AnswerEncoding::Unconstrained
        }
    }
}

/// Ones at `cell` and everything it dominates, zeros at everything
/// dominating it; incomparable cells stay unobserved.
pub fn encode_success_unconstrained(grid: Grid, cell: Cell) -> BTreeMap<Cell, usize> {
    grid.cells()
        .filter_map(|c| {
            if c == cell || cell.dominates(c) {
                Some((c, 1))
            } else if c.dominates(cell) {
                Some((c, 0))
            } else {
                None
            }
        })
        .collect()
}

/// One at `cell`, zeros at its right and lower neighbours.
pub fn encode_success_constrained(grid: Grid, cell: Cell) -> BTreeMap<Cell, usize> {
    let mut obs = BTreeMap::new();
    obs.insert(cell, 1);
    if cell.col < grid.cols {
        obs.insert(Cell::new(cell.row, cell.col + 1), 0);
    }
    if cell.row < grid.rows {
        obs.insert(Cell::new(cell.row + 1, cell.col), 0);
    }
    obs
}

/// An unsolved task: every answer false, or only the lowest one when the
/// constraints propagate it.
pub fn encode_failure(grid: Grid, encoding: AnswerEncoding) -> BTreeMap<Cell, usize> {
    match encoding {
        AnswerEncoding::Unconstrained => grid.cells().map(|c| (c, 0)).collect(),
        AnswerEncoding::Constrained => [(Cell::new(1, 1), 0)].into_iter().collect(),
    }
}

/// Treatment of applicable supplementary skills with no positive report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MissingSkillEvidence {
    Zero,
    Unobserved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SupplementaryPolicy {
    /// Applicable skills not used in a solved task.
    pub unused: MissingSkillEvidence,
    /// Applicable skills of a failed task.
    pub failed: MissingSkillEvidence,
}

impl Default for SupplementaryPolicy {
    fn default() -> Self {
        SupplementaryPolicy { unused: MissingSkillEvidence::Zero, failed: MissingSkillEvidence::Zero }
    }
}

/// Observations over the direct supplementary nodes of task `task`, keyed by
/// skill index. Used skills are 1; the rest follow `policy`.
pub fn encode_supplementary(
    spec: &RubricSpec,
    task: usize,
    used: &BTreeSet<String>,
    failed: bool,
    policy: SupplementaryPolicy,
) -> Result<BTreeMap<usize, usize>> {
    let t = &spec.tasks[task];
    if let Some(s) = used.iter().find(|s| !t.applicable.contains(*s)) {
        return Err(Error::Data(format!("skill {s} is not applicable to task {}", t.id)));
    }
    let missing = if failed { policy.failed } else { policy.unused };
    let mut obs = BTreeMap::new();
    for (i, skill) in spec.supplementary.iter().enumerate() {
        if !t.applicable.contains(&skill.id) {
            continue;
        }
        if used.contains(&skill.id) {
            obs.insert(i, 1);
        } else if missing == MissingSkillEvidence::Zero {
            obs.insert(i, 0);
        }
    }
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    const G: Grid = Grid { rows: 3, cols: 3 };

    fn c(r: usize, col: usize) -> Cell {
        Cell::new(r, col)
    }

    #[test]
    fn dominance_pattern() {
        assert!(c(2, 2).dominates(c(1, 1)));
        assert!(c(2, 2).dominates(c(2, 1)));
        assert!(c(2, 2).dominates(c(1, 2)));
        assert!(!c(2, 2).dominates(c(1, 3)));
        assert!(!c(1, 3).dominates(c(2, 2)));
        assert!(!c(3, 1).dominates(c(2, 2)));
        assert!(!c(2, 2).dominates(c(3, 1)));
    }

    #[test]
    fn unconstrained_middle_cell() {
        let obs = encode_success_unconstrained(G, c(2, 2));
        let expected: BTreeMap<Cell, usize> =
            [(c(1, 1), 1), (c(1, 2), 1), (c(2, 1), 1), (c(2, 2), 1), (c(2, 3), 0), (c(3, 2), 0), (c(3, 3), 0)].into_iter().collect();
        assert_eq!(obs, expected);
    }

    #[test]
    fn unconstrained_extremes() {
        assert!(encode_success_unconstrained(G, c(3, 3)).values().all(|&v| v == 1));
        assert_eq!(encode_success_unconstrained(G, c(3, 3)).len(), 9);
        let low = encode_success_unconstrained(G, c(1, 1));
        assert_eq!(low.len(), 9);
        assert_eq!(low.values().filter(|&&v| v == 0).count(), 8);
    }

    #[test]
    fn constrained_encodings() {
        let expected: BTreeMap<Cell, usize> = [(c(2, 2), 1), (c(2, 3), 0), (c(3, 2), 0)].into_iter().collect();
        assert_eq!(encode_success_constrained(G, c(2, 2)), expected);
        assert_eq!(encode_success_constrained(G, c(3, 3)).len(), 1);
        let expected: BTreeMap<Cell, usize> = [(c(1, 3), 1), (c(2, 3), 0)].into_iter().collect();
        assert_eq!(encode_success_constrained(G, c(1, 3)), expected);
        for cell in G.cells() {
            assert_ne!(encode_success_constrained(G, cell).get(&c(1, 1)), Some(&0));
        }
    }

    #[test]
    fn failure_encodings() {
        assert_eq!(encode_failure(G, AnswerEncoding::Constrained), [(c(1, 1), 0)].into_iter().collect());
        let all = encode_failure(G, AnswerEncoding::Unconstrained);
        assert_eq!(all.len(), 9);
        assert!(all.values().all(|&v| v == 0));
    }

    #[test]
    fn twelve_consecutive_pairs() {
        let pairs = G.consecutive_implications();
        assert_eq!(pairs.len(), 12);
        assert!(pairs.contains(&(c(1, 2), c(1, 1))));
        assert!(pairs.contains(&(c(3, 3), c(2, 3))));
    }

    fn single_cell() -> RubricSpec {
        RubricSpec {
            components: vec!["row".to_string()],
            levels: vec!["level".to_string()],
            implications: vec![],
            supplementary: vec![],
            groups: vec![],
            tasks: vec![TaskSpec::uniform("t", Grid { rows: 1, cols: 1 }, BTreeSet::new(), 0.3, 0.8)],
        }
    }

    #[test]
    fn degenerate_rubric_is_a_plain_noisy_or() {
        let compiled = compile(&single_cell(), &ModelConfig::default()).unwrap();
        assert_eq!(compiled.network().len(), 3);
        let x = compiled.id(&NodeKey::Target(c(1, 1))).unwrap();
        let leak = compiled.id(&NodeKey::Leak).unwrap();
        let y = compiled.id(&NodeKey::Answer { task: 0, answer: c(1, 1) }).unwrap();
        let direct = noisy_or_cpt(&NoisyOrSpec::new(vec![(x, 0.3), (leak, 0.8)]), y).unwrap();
        assert_eq!(compiled.network().cpt(y), Some(&direct));
    }

    #[test]
    fn out_of_range_lambda_names_task_and_cell() {
        let mut spec = single_cell();
        spec.tasks[0].lambda_targets.insert((c(1, 1), c(1, 1)), 1.3);
        let msg = compile(&spec, &ModelConfig::default()).unwrap_err().to_string();
        assert!(msg.contains("task t") && msg.contains("1,1") && msg.contains("1.3"), "{msg}");
    }

    #[test]
    fn missing_table_entry_is_reported() {
        let mut spec = single_cell();
        spec.tasks[0].lambda_targets.clear();
        assert!(matches!(compile(&spec, &ModelConfig::default()), Err(Error::MissingInhibition { .. })));
    }

    #[test]
    fn cyclic_implications_rejected() {
        let mut spec = single_cell();
        spec.levels.push("high".to_string());
        spec.tasks[0] = TaskSpec::uniform("t", spec.grid(), BTreeSet::new(), 0.3, 0.8);
        spec.implications = vec![(c(1, 2), c(1, 1)), (c(1, 1), c(1, 2))];
        assert!(matches!(spec.validate(), Err(Error::Rubric(_))));
    }

    #[test]
    fn supplementary_encoding() {
        let mut spec = single_cell();
        spec.groups = vec![SkillGroup { id: "1".into(), rows: [1].into_iter().collect() }];
        spec.supplementary = (1..=4).map(|i| SupplementarySkill { id: format!("S{i}"), group: "1".into() }).collect();
        spec.tasks[0].applicable = spec.supplementary.iter().map(|s| s.id.clone()).collect();
        let none = encode_supplementary(&spec, 0, &BTreeSet::new(), false, SupplementaryPolicy::default()).unwrap();
        assert_eq!(none.values().copied().collect::<Vec<_>>(), vec![0, 0, 0, 0]);
        let used: BTreeSet<String> = ["S2".to_string()].into_iter().collect();
        let some = encode_supplementary(&spec, 0, &used, false, SupplementaryPolicy::default()).unwrap();
        assert_eq!(some.values().copied().collect::<Vec<_>>(), vec![0, 1, 0, 0]);
        let lenient = SupplementaryPolicy { unused: MissingSkillEvidence::Unobserved, failed: MissingSkillEvidence::Unobserved };
        assert_eq!(encode_supplementary(&spec, 0, &used, false, lenient).unwrap().len(), 1);
        assert!(encode_supplementary(&spec, 0, &BTreeSet::new(), true, lenient).unwrap().is_empty());
        let bogus: BTreeSet<String> = ["S9".to_string()].into_iter().collect();
        assert!(matches!(encode_supplementary(&spec, 0, &bogus, false, lenient), Err(Error::Data(_))));
    }
}
