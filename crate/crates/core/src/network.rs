//! Bayesian networks: variables, one CPT per variable, and a well-formedness report.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId, Variable};

/// Tolerance for CPT rows at construction time.
pub const CPT_TOLERANCE: f64 = 1e-12;

/// Conditional table `P(child | parents)`.
///
/// The table's scope is the parents in order followed by the child, so each
/// run of `card(child)` consecutive entries is one conditional distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    table: Factor,
}

impl Cpt {
    /// Builds a CPT and checks that every row sums to one within [`CPT_TOLERANCE`].
    pub fn new(child: (VarId, usize), parents: Vec<(VarId, usize)>, values: Vec<f64>) -> Result<Self> {
        let cpt = Self::unvalidated(child, parents, values)?;
        if let Some((states, sum)) = cpt.unnormalized_rows(CPT_TOLERANCE).into_iter().next() {
            return Err(Error::InvalidNetwork(format!(
                "CPT of {} sums to {sum} for parent states {states:?}",
                cpt.child
            )));
        }
        Ok(cpt)
    }

    /// Builds a CPT checking only the table shape. Used for reading files
    /// whose normalization is reported later by [`validate_network`].
    pub fn unvalidated(
        child: (VarId, usize),
        parents: Vec<(VarId, usize)>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let parent_ids = parents.iter().map(|p| p.0).collect();
        let mut scope = parents;
        scope.push(child);
        let table = Factor::new(scope, values)?;
        Ok(Cpt { child: child.0, parents: parent_ids, table })
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn table(&self) -> &Factor {
        &self.table
    }

    pub fn child_cardinality(&self) -> usize {
        *self.table.cardinalities().last().expect("CPT scope includes the child")
    }

    /// `P(child = child_state | parents = parent_states)`.
    pub fn probability(&self, parent_states: &[usize], child_state: usize) -> f64 {
        let card = self.child_cardinality();
        let mut row = 0;
        for (k, &s) in parent_states.iter().enumerate() {
            row = row * self.table.cardinalities()[k] + s;
        }
        self.table.values()[row * card + child_state]
    }

    /// Parent configurations whose row sum is off by more than `tol`.
    pub fn unnormalized_rows(&self, tol: f64) -> Vec<(Vec<usize>, f64)> {
        let card = self.child_cardinality();
        let parent_cards = &self.table.cardinalities()[..self.parents.len()];
        let mut out = Vec::new();
        for (row, chunk) in self.table.values().chunks(card).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > tol {
                let mut states = alloc::vec![0; parent_cards.len()];
                let mut rest = row;
                for k in (0..parent_cards.len()).rev() {
                    states[k] = rest % parent_cards[k];
                    rest /= parent_cards[k];
                }
                out.push((states, sum));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValidationIssue {
    DuplicateVariable(VarId),
    BadCardinality { var: VarId, cardinality: usize },
    MissingCpt(VarId),
    DuplicateCpt(VarId),
    CptForUnknownVariable(VarId),
    DanglingParent { child: VarId, parent: VarId },
    CardinalityMismatch { child: VarId, var: VarId, declared: usize, in_table: usize },
    /// Variables that lie on, or downstream of, a directed cycle.
    Cycle(Vec<VarId>),
    Unnormalized { child: VarId, parent_states: Vec<usize>, sum: f64 },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateVariable(v) => write!(f, "variable {v} declared twice"),
            Self::BadCardinality { var, cardinality } => {
                write!(f, "variable {var} has cardinality {cardinality}")
            }
            Self::MissingCpt(v) => write!(f, "variable {v} has no CPT"),
            Self::DuplicateCpt(v) => write!(f, "variable {v} has more than one CPT"),
            Self::CptForUnknownVariable(v) => write!(f, "CPT for undeclared variable {v}"),
            Self::DanglingParent { child, parent } => {
                write!(f, "CPT of {child} references undeclared parent {parent}")
            }
            Self::CardinalityMismatch { child, var, declared, in_table } => write!(
                f,
                "CPT of {child} uses cardinality {in_table} for {var}, declared {declared}"
            ),
            Self::Cycle(vars) => write!(f, "directed cycle through {vars:?}"),
            Self::Unnormalized { child, parent_states, sum } => {
                write!(f, "CPT of {child} sums to {sum} for parent states {parent_states:?}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Directed acyclic graph of variables with one CPT each. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    var_index: BTreeMap<VarId, usize>,
    cpt_index: BTreeMap<VarId, usize>,
}

impl Network {
    /// Builds a network and rejects it unless [`validate_network`] finds nothing.
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        let net = Self::unchecked(variables, cpts);
        let report = validate_network(&net);
        if report.is_empty() {
            Ok(net)
        } else {
            Err(Error::InvalidNetwork(format!("{report}")))
        }
    }

    /// Builds a network without checking it. Lookups resolve to the first
    /// declaration of each id.
    pub fn unchecked(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Self {
        let mut var_index = BTreeMap::new();
        for (i, v) in variables.iter().enumerate() {
            var_index.entry(v.id).or_insert(i);
        }
        let mut cpt_index = BTreeMap::new();
        for (i, c) in cpts.iter().enumerate() {
            cpt_index.entry(c.child).or_insert(i);
        }
        Network { variables, cpts, var_index, cpt_index }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variable(&self, id: VarId) -> Option<&Variable> {
        self.var_index.get(&id).map(|&i| &self.variables[i])
    }

    pub fn cpt(&self, id: VarId) -> Option<&Cpt> {
        self.cpt_index.get(&id).map(|&i| &self.cpts[i])
    }

    pub fn cardinality(&self, id: VarId) -> Result<usize> {
        self.variable(id).map(|v| v.cardinality).ok_or(Error::UnknownVariable(id))
    }

    pub fn by_name(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn edge_count(&self) -> usize {
        self.cpts.iter().map(|c| c.parents.len()).sum()
    }

    /// Product of all cardinalities.
    pub fn joint_state_count(&self) -> u128 {
        self.variables.iter().fold(1u128, |acc, v| acc.saturating_mul(v.cardinality as u128))
    }

    /// `roots` together with every ancestor of them.
    pub fn ancestral_closure(&self, roots: impl IntoIterator<Item = VarId>) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = roots.into_iter().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                if let Some(cpt) = self.cpt(v) {
                    stack.extend(cpt.parents.iter().copied());
                }
            }
        }
        seen
    }
}

/// Checks ids, CPT coverage, parent references, cardinalities, acyclicity and
/// row normalization. Never fails; every problem found is listed.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut issues = Vec::new();

    let mut declared = BTreeMap::new();
    for v in &net.variables {
        if declared.insert(v.id, v.cardinality).is_some() {
            issues.push(ValidationIssue::DuplicateVariable(v.id));
        }
        if v.cardinality < 2 {
            issues.push(ValidationIssue::BadCardinality { var: v.id, cardinality: v.cardinality });
        }
    }

    let mut covered = BTreeSet::new();
    for cpt in &net.cpts {
        if !covered.insert(cpt.child) {
            issues.push(ValidationIssue::DuplicateCpt(cpt.child));
        }
        if !declared.contains_key(&cpt.child) {
            issues.push(ValidationIssue::CptForUnknownVariable(cpt.child));
        }
        let scope = cpt.table.scope();
        for (k, &var) in scope.iter().enumerate() {
            let in_table = cpt.table.cardinalities()[k];
            match declared.get(&var) {
                None if var != cpt.child => {
                    issues.push(ValidationIssue::DanglingParent { child: cpt.child, parent: var })
                }
                Some(&card) if card != in_table => issues.push(ValidationIssue::CardinalityMismatch {
                    child: cpt.child,
                    var,
                    declared: card,
                    in_table,
                }),
                _ => {}
            }
        }
        for (parent_states, sum) in cpt.unnormalized_rows(CPT_TOLERANCE) {
            issues.push(ValidationIssue::Unnormalized { child: cpt.child, parent_states, sum });
        }
    }
    for &id in declared.keys() {
        if !covered.contains(&id) {
            issues.push(ValidationIssue::MissingCpt(id));
        }
    }

    // Kahn's algorithm over declared variables; whatever is left sits on or
    // below a cycle.
    let mut indegree: BTreeMap<VarId, usize> = declared.keys().map(|&v| (v, 0)).collect();
    let mut children: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
    for cpt in &net.cpts {
        if !declared.contains_key(&cpt.child) {
            continue;
        }
        for &p in &cpt.parents {
            if declared.contains_key(&p) {
                *indegree.get_mut(&cpt.child).unwrap() += 1;
                children.entry(p).or_default().push(cpt.child);
            }
        }
    }
    let mut ready: Vec<VarId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    while let Some(v) = ready.pop() {
        indegree.remove(&v);
        for &c in children.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(d) = indegree.get_mut(&c) {
                *d -= 1;
                if *d == 0 {
                    ready.push(c);
                }
            }
        }
    }
    if !indegree.is_empty() {
        issues.push(ValidationIssue::Cycle(indegree.keys().copied().collect()));
    }

    ValidationReport { issues }
}

/// Variables in an order where every parent precedes its children.
pub fn topological_order(net: &Network) -> Result<Vec<VarId>> {
    let mut order = Vec::with_capacity(net.len());
    let mut state: BTreeMap<VarId, u8> = BTreeMap::new();
    for v in &net.variables {
        visit(net, v.id, &mut state, &mut order)?;
    }
    Ok(order)
}

fn visit(net: &Network, v: VarId, state: &mut BTreeMap<VarId, u8>, order: &mut Vec<VarId>) -> Result<()> {
    match state.get(&v) {
        Some(2) => return Ok(()),
        Some(1) => return Err(Error::InvalidNetwork(format!("directed cycle through {v}"))),
        _ => {}
    }
    state.insert(v, 1);
    if let Some(cpt) = net.cpt(v) {
        for &p in &cpt.parents {
            visit(net, p, state, order)?;
        }
    }
    state.insert(v, 2);
    order.push(v);
    Ok(())
}

/// Human-readable name, falling back to the numeric id.
pub fn display_name(net: &Network, id: VarId) -> String {
    net.variable(id).map(|v| v.name.clone()).unwrap_or_else(|| format!("{id}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const A: VarId = VarId(0);
    const B: VarId = VarId(1);

    fn chain() -> (Vec<Variable>, Vec<Cpt>) {
        let vars = vec![Variable::binary(A, "a"), Variable::binary(B, "b")];
        let cpts = vec![
            Cpt::new((A, 2), vec![], vec![0.4, 0.6]).unwrap(),
            Cpt::new((B, 2), vec![(A, 2)], vec![0.9, 0.1, 0.3, 0.7]).unwrap(),
        ];
        (vars, cpts)
    }

    #[test]
    fn proper_chain_is_clean() {
        let (vars, cpts) = chain();
        let net = Network::unchecked(vars, cpts);
        assert!(validate_network(&net).is_empty());
        assert_eq!(topological_order(&net).unwrap(), vec![A, B]);
    }

    #[test]
    fn self_loop_is_unrepresentable() {
        // a table scope cannot hold the child twice
        assert_eq!(
            Cpt::unvalidated((A, 2), vec![(A, 2)], vec![0.5; 4]),
            Err(Error::DuplicateScopeVariable(A))
        );
    }

    #[test]
    fn two_cycle_is_reported() {
        let vars = vec![Variable::binary(A, "a"), Variable::binary(B, "b")];
        let ab = Cpt::unvalidated((A, 2), vec![(B, 2)], vec![0.5; 4]).unwrap();
        let ba = Cpt::unvalidated((B, 2), vec![(A, 2)], vec![0.5; 4]).unwrap();
        let report = validate_network(&Network::unchecked(vars, vec![ab, ba]));
        assert_eq!(report.issues, vec![ValidationIssue::Cycle(vec![A, B])]);
    }

    #[test]
    fn unnormalized_column_reports_parent_state() {
        let (vars, mut cpts) = chain();
        cpts[1] = Cpt::unvalidated((B, 2), vec![(A, 2)], vec![0.9, 0.1, 0.2, 0.7]).unwrap();
        let report = validate_network(&Network::unchecked(vars, cpts));
        assert_eq!(report.issues.len(), 1);
        match &report.issues[0] {
            ValidationIssue::Unnormalized { child, parent_states, sum } => {
                assert_eq!(*child, B);
                assert_eq!(parent_states, &vec![1]);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_parent_and_missing_cpt() {
        let vars = vec![Variable::binary(A, "a"), Variable::binary(B, "b")];
        let cpts = vec![Cpt::new((A, 2), vec![(VarId(9), 2)], vec![0.5; 4]).unwrap()];
        let report = validate_network(&Network::unchecked(vars, cpts));
        assert!(report.issues.contains(&ValidationIssue::DanglingParent { child: A, parent: VarId(9) }));
        assert!(report.issues.contains(&ValidationIssue::MissingCpt(B)));
        assert!(Network::new(
            vec![Variable::binary(A, "a")],
            vec![Cpt::new((A, 2), vec![(VarId(9), 2)], vec![0.5; 4]).unwrap()]
        )
        .is_err());
    }

    #[test]
    fn constructor_rejects_unnormalized_rows() {
        assert!(Cpt::new((A, 2), vec![], vec![0.5, 0.4]).is_err());
        assert!(Cpt::new((A, 2), vec![], vec![0.5, 0.5 + 1e-13]).is_ok());
    }
}
