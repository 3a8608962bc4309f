//! Canonical CPT constructors: noisy-OR with leak, logical AND and OR,
//! implication-constraint nodes and root priors. All variables are binary;
//! state 1 means "true" (skill possessed, answer correct).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{VarId, Variable};
use crate::network::Cpt;

/// Largest parent set a materialized gate may have.
pub const MAX_GATE_PARENTS: usize = 24;

fn check_probability(what: impl FnOnce() -> alloc::string::String, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange { what: what(), value })
    }
}

/// Parents of a noisy-OR gate, each with its inhibition `λ` (the probability
/// that the parent, although true, does not turn the child on).
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyOrSpec {
    pub inhibitions: Vec<(VarId, f64)>,
    /// `λ_leak`; the child is true with probability `1 - λ_leak` when every
    /// parent is false.
    pub leak_inhibition: Option<f64>,
}

impl NoisyOrSpec {
    pub fn new(inhibitions: Vec<(VarId, f64)>) -> Self {
        NoisyOrSpec { inhibitions, leak_inhibition: None }
    }

    pub fn with_leak(mut self, leak_inhibition: f64) -> Self {
        self.leak_inhibition = Some(leak_inhibition);
        self
    }

    pub fn parents(&self) -> impl Iterator<Item = VarId> + '_ {
        self.inhibitions.iter().map(|&(v, _)| v)
    }

    fn validate(&self) -> Result<()> {
        for (i, &(var, lambda)) in self.inhibitions.iter().enumerate() {
            check_probability(|| format!("inhibition of parent {var}"), lambda)?;
            if self.inhibitions[..i].iter().any(|&(v, _)| v == var) {
                return Err(Error::Parameter(format!("parent {var} listed twice")));
            }
        }
        if let Some(leak) = self.leak_inhibition {
            check_probability(|| "leak inhibition".into(), leak)?;
        }
        if self.inhibitions.len() > MAX_GATE_PARENTS {
            return Err(Error::Parameter(format!(
                "{} parents exceed the gate limit of {MAX_GATE_PARENTS}",
                self.inhibitions.len()
            )));
        }
        Ok(())
    }
}

/// Fills a binary CPT whose `P(child = 0 | parents)` is given per parent row.
/// Parent rows are enumerated row-major, first parent slowest.
fn binary_cpt(child: VarId, parents: &[VarId], p_false: impl Fn(usize) -> f64) -> Result<Cpt> {
    let n = parents.len();
    let mut values = Vec::with_capacity(2 << n);
    for row in 0..(1usize << n) {
        let p0 = p_false(row);
        values.push(p0);
        values.push(1.0 - p0);
    }
    Cpt::new((child, 2), parents.iter().map(|&p| (p, 2)).collect(), values)
}

/// State of parent `k` (of `n`) in parent row `row`.
#[inline]
fn bit(row: usize, k: usize, n: usize) -> bool {
    (row >> (n - 1 - k)) & 1 == 1
}

/// `P(child = 0 | x) = λ_leak · Π_{i : x_i = 1} λ_i`, the leak factor being
/// present only when configured.
pub fn noisy_or_cpt(spec: &NoisyOrSpec, child: VarId) -> Result<Cpt> {
    spec.validate()?;
    let parents: Vec<VarId> = spec.parents().collect();
    if parents.contains(&child) {
        return Err(Error::Parameter(format!("gate child {child} is its own parent")));
    }
    let n = parents.len();
    let leak = spec.leak_inhibition.unwrap_or(1.0);
    binary_cpt(child, &parents, |row| {
        spec.inhibitions
            .iter()
            .enumerate()
            .filter(|&(k, _)| bit(row, k, n))
            .fold(leak, |acc, (_, &(_, lambda))| acc * lambda)
    })
}

/// Logical AND: the child is true iff every parent is true.
pub fn and_cpt(parents: &[VarId], child: VarId) -> Result<Cpt> {
    if parents.is_empty() {
        return Err(Error::Parameter("AND gate needs at least one parent".into()));
    }
    let all = (1usize << parents.len()) - 1;
    binary_cpt(child, parents, |row| if row == all { 0.0 } else { 1.0 })
}

/// Logical OR: the child is true iff some parent is true.
pub fn or_cpt(parents: &[VarId], child: VarId) -> Result<Cpt> {
    if parents.is_empty() {
        return Err(Error::Parameter("OR gate needs at least one parent".into()));
    }
    binary_cpt(child, parents, |row| if row == 0 { 1.0 } else { 0.0 })
}

/// Implication `superior ⇒ inferior`, enforced by observing the node in state 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintSpec {
    pub superior: VarId,
    pub inferior: VarId,
    /// `P(D = 1)` for the three permitted parent states.
    pub p_star: f64,
}

/// CPT over parents `[superior, inferior]` with `P(D=1 | 1, 0) = 0` and
/// `P(D=1 | ·) = p_star` elsewhere.
pub fn constraint_cpt(spec: &ConstraintSpec, node: VarId) -> Result<Cpt> {
    if !(spec.p_star > 0.0 && spec.p_star <= 1.0) {
        return Err(Error::ProbabilityOutOfRange { what: "p_star (must be > 0)".into(), value: spec.p_star });
    }
    if spec.superior == spec.inferior {
        return Err(Error::Parameter(format!("constraint {} implies itself", spec.superior)));
    }
    // rows: (sup, inf) = (0,0), (0,1), (1,0), (1,1)
    binary_cpt(node, &[spec.superior, spec.inferior], |row| if row == 0b10 { 1.0 } else { 1.0 - spec.p_star })
}

/// Parentless CPT `[1 - p_true, p_true]`.
pub fn prior_cpt(var: VarId, p_true: f64) -> Result<Cpt> {
    check_probability(|| format!("prior of {var}"), p_true)?;
    Cpt::new((var, 2), vec![], vec![1.0 - p_true, p_true])
}

/// Explicit-inhibitor form of a noisy-OR gate: one inhibitor node per parent
/// (`P(X' = 1 | X = 1) = 1 - λ`, `X' = 0` whenever `X = 0`) feeding a
/// deterministic OR. The leak becomes an always-true root with its own
/// inhibitor. Kept as an independent oracle for [`noisy_or_cpt`].
#[derive(Clone, Debug, PartialEq)]
pub struct InhibitorDecomposition {
    /// Inhibitor nodes and, when a leak is configured, the leak root.
    pub variables: Vec<Variable>,
    /// CPTs for the new variables and for the child.
    pub cpts: Vec<Cpt>,
}

/// Builds the decomposition, numbering new variables from `first_free_id`.
pub fn decompose_noisy_or(spec: &NoisyOrSpec, child: VarId, first_free_id: u32) -> Result<InhibitorDecomposition> {
    spec.validate()?;
    let mut next = first_free_id;
    let mut fresh = |name: alloc::string::String| {
        let v = Variable::binary(VarId(next), name);
        next += 1;
        v
    };
    let mut variables = Vec::new();
    let mut cpts = Vec::new();
    let mut inhibitors = Vec::new();

    let mut add_inhibitor = |source: VarId, lambda: f64, variables: &mut Vec<Variable>, cpts: &mut Vec<Cpt>, v: Variable| -> Result<()> {
        // rows: source = 0 -> [1, 0]; source = 1 -> [λ, 1 - λ]
        cpts.push(Cpt::new((v.id, 2), vec![(source, 2)], vec![1.0, 0.0, lambda, 1.0 - lambda])?);
        inhibitors.push(v.id);
        variables.push(v);
        Ok(())
    };

    for &(parent, lambda) in &spec.inhibitions {
        let v = fresh(format!("inhibitor({parent})"));
        add_inhibitor(parent, lambda, &mut variables, &mut cpts, v)?;
    }
    if let Some(leak) = spec.leak_inhibition {
        let root = fresh("leak".into());
        cpts.push(prior_cpt(root.id, 1.0)?);
        let root_id = root.id;
        variables.push(root);
        let v = fresh("inhibitor(leak)".into());
        add_inhibitor(root_id, leak, &mut variables, &mut cpts, v)?;
    }
    if inhibitors.is_empty() {
        // no parent can fire: the child is constantly false
        cpts.push(prior_cpt(child, 0.0)?);
    } else {
        cpts.push(or_cpt(&inhibitors, child)?);
    }
    Ok(InhibitorDecomposition { variables, cpts })
}
