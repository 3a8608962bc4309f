//! Exact inference: variable elimination for single-variable posteriors,
//! plus a brute-force joint enumeration used as a test oracle.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{Evidence, Factor, VarId};
use crate::network::Network;

/// Normalizers below this are treated as zero-probability evidence.
pub const INCONSISTENT_EVIDENCE_THRESHOLD: f64 = 1e-300;

/// Largest joint state space [`enumerate_joint`] will walk.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

/// `P(target | evidence)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    target: VarId,
    evidence: Evidence,
}

impl Query {
    pub fn new(target: VarId, evidence: Evidence) -> Result<Self> {
        if evidence.contains(target) {
            return Err(Error::TargetObserved(target));
        }
        Ok(Query { target, evidence })
    }

    pub fn target(&self) -> VarId {
        self.target
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }
}

/// Sequence in which unobserved, non-target variables are summed out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder(pub Vec<VarId>);

impl EliminationOrder {
    pub fn as_slice(&self) -> &[VarId] {
        &self.0
    }
}

fn check_evidence(net: &Network, evidence: &Evidence) -> Result<()> {
    for (&var, &state) in evidence.iter() {
        let cardinality = net.cardinality(var)?;
        if state >= cardinality {
            return Err(Error::StateOutOfRange { var, state, cardinality });
        }
    }
    Ok(())
}

fn check_query(net: &Network, q: &Query) -> Result<()> {
    net.cardinality(q.target)?;
    check_evidence(net, &q.evidence)
}

/// CPT factors of `vars`, reduced by the evidence.
fn reduced_factors(net: &Network, vars: impl IntoIterator<Item = VarId>, evidence: &Evidence) -> Result<Vec<Factor>> {
    vars.into_iter()
        .map(|v| {
            net.cpt(v)
                .map(|cpt| cpt.table().reduce(evidence))
                .ok_or_else(|| Error::InvalidNetwork(alloc::format!("variable {v} has no CPT")))
        })
        .collect()
}

/// Greedy min-degree ordering on the interaction graph of `scopes`, ties
/// broken by the smaller id. `keep` is never eliminated.
fn min_degree_order<'a>(scopes: impl Iterator<Item = &'a [VarId]>, candidates: &BTreeSet<VarId>, keep: Option<VarId>) -> Vec<VarId> {
    let mut adjacency: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for &v in candidates {
        adjacency.entry(v).or_default();
    }
    if let Some(k) = keep {
        adjacency.entry(k).or_default();
    }
    for scope in scopes {
        for &a in scope {
            let entry = adjacency.entry(a).or_default();
            for &b in scope {
                if a != b {
                    entry.insert(b);
                }
            }
        }
    }
    let mut remaining: BTreeSet<VarId> = candidates.clone();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        // BTreeSet iterates in id order, so min_by_key keeps the smallest id on ties
        let next = *remaining.iter().min_by_key(|v| adjacency[v].len()).expect("non-empty");
        remaining.remove(&next);
        let neighbors: Vec<VarId> = adjacency.remove(&next).unwrap_or_default().into_iter().collect();
        for &a in &neighbors {
            let set = adjacency.get_mut(&a).expect("symmetric adjacency");
            set.remove(&next);
            for &b in &neighbors {
                if a != b {
                    set.insert(b);
                }
            }
        }
        order.push(next);
    }
    order
}

/// Deterministic min-degree order over every variable that is neither the
/// target nor observed, with the smaller id winning ties.
pub fn choose_order(net: &Network, q: &Query) -> EliminationOrder {
    let candidates: BTreeSet<VarId> = net
        .variables()
        .iter()
        .map(|v| v.id)
        .filter(|&v| v != q.target && !q.evidence.contains(v))
        .collect();
    let scopes: Vec<Vec<VarId>> = net
        .cpts()
        .iter()
        .map(|c| c.table().scope().iter().copied().filter(|&v| !q.evidence.contains(v)).collect())
        .collect();
    EliminationOrder(min_degree_order(scopes.iter().map(Vec::as_slice), &candidates, Some(q.target)))
}

/// Sums out `order` and multiplies whatever is left.
fn eliminate(mut factors: Vec<Factor>, order: &[VarId]) -> Result<Factor> {
    for &var in order {
        let (mut touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        if touching.is_empty() {
            continue;
        }
        touching.sort_by_key(Factor::len);
        let mut iter = touching.into_iter();
        let mut acc = iter.next().expect("non-empty");
        for f in iter {
            acc = acc.product(&f)?;
        }
        factors.push(acc.marginalize(var)?);
    }
    factors.sort_by_key(Factor::len);
    let mut acc = Factor::scalar(1.0);
    for f in &factors {
        acc = acc.product(f)?;
    }
    Ok(acc)
}

fn normalized_target(result: Factor, target: VarId, cardinality: usize) -> Result<Vec<f64>> {
    let mut dist = if result.scope().is_empty() {
        // target carries no factor of its own: impossible for a valid network
        return Err(Error::InvalidNetwork(alloc::format!("no factor mentions {target}")));
    } else {
        result.aligned(&[target])?
    };
    debug_assert_eq!(dist.len(), cardinality);
    let z = dist.normalize();
    if z.is_nan() || z <= INCONSISTENT_EVIDENCE_THRESHOLD {
        return Err(Error::InconsistentEvidence);
    }
    Ok(dist.values().to_vec())
}

/// `P(target | evidence)` by variable elimination.
///
/// Variables that are neither ancestors of the target nor of the evidence
/// are dropped first (they sum to one), then the rest is eliminated in
/// min-degree order.
pub fn posterior(net: &Network, q: &Query) -> Result<Vec<f64>> {
    check_query(net, q)?;
    let relevant = net.ancestral_closure(core::iter::once(q.target).chain(q.evidence.iter().map(|(&v, _)| v)));
    let factors = reduced_factors(net, relevant.iter().copied(), &q.evidence)?;
    let candidates: BTreeSet<VarId> =
        relevant.iter().copied().filter(|&v| v != q.target && !q.evidence.contains(v)).collect();
    let order = min_degree_order(factors.iter().map(Factor::scope), &candidates, Some(q.target));
    let result = eliminate(factors, &order)?;
    normalized_target(result, q.target, net.cardinality(q.target)?)
}

/// `P(target | evidence)` eliminating in exactly the given order, without pruning.
pub fn posterior_with_order(net: &Network, q: &Query, order: &EliminationOrder) -> Result<Vec<f64>> {
    check_query(net, q)?;
    let expected: BTreeSet<VarId> = net
        .variables()
        .iter()
        .map(|v| v.id)
        .filter(|&v| v != q.target && !q.evidence.contains(v))
        .collect();
    let given: BTreeSet<VarId> = order.0.iter().copied().collect();
    if given != expected || given.len() != order.0.len() {
        return Err(Error::InvalidOrder);
    }
    let factors = reduced_factors(net, net.variables().iter().map(|v| v.id), &q.evidence)?;
    let result = eliminate(factors, &order.0)?;
    normalized_target(result, q.target, net.cardinality(q.target)?)
}

/// `P(evidence)`, summing every unobserved ancestor of the evidence out.
pub fn evidence_probability(net: &Network, evidence: &Evidence) -> Result<f64> {
    check_evidence(net, evidence)?;
    let relevant = net.ancestral_closure(evidence.iter().map(|(&v, _)| v));
    let factors = reduced_factors(net, relevant.iter().copied(), evidence)?;
    let candidates: BTreeSet<VarId> = relevant.iter().copied().filter(|&v| !evidence.contains(v)).collect();
    let order = min_degree_order(factors.iter().map(Factor::scope), &candidates, None);
    let result = eliminate(factors, &order)?;
    Ok(result.values()[0])
}

/// Largest scope (before summing out) that eliminating in `order` produces.
pub fn elimination_width(net: &Network, q: &Query, order: &EliminationOrder) -> usize {
    let mut scopes: Vec<BTreeSet<VarId>> = net
        .cpts()
        .iter()
        .map(|c| c.table().scope().iter().copied().filter(|&v| !q.evidence.contains(v)).collect())
        .collect();
    let mut width = 0;
    for &var in &order.0 {
        let (touching, rest): (Vec<_>, Vec<_>) = scopes.into_iter().partition(|s| s.contains(&var));
        scopes = rest;
        let mut merged: BTreeSet<VarId> = touching.into_iter().flatten().collect();
        width = width.max(merged.len());
        merged.remove(&var);
        scopes.push(merged);
    }
    width
}

/// Exact posterior by summing the full joint over every completion of the
/// evidence. Only for small networks.
pub fn enumerate_joint(net: &Network, q: &Query) -> Result<Vec<f64>> {
    check_query(net, q)?;
    let states = net.joint_state_count();
    if states > ENUMERATION_LIMIT {
        return Err(Error::StateSpaceTooLarge { states, limit: ENUMERATION_LIMIT });
    }
    let vars = net.variables();
    let position: BTreeMap<VarId, usize> = vars.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
    let mut assignment: Vec<usize> = vars.iter().map(|v| q.evidence.get(v.id).unwrap_or(0)).collect();
    let free: Vec<usize> = (0..vars.len()).filter(|&i| !q.evidence.contains(vars[i].id)).collect();
    let target_pos = position[&q.target];

    // each CPT as (table, positions of its scope variables)
    let tables: Vec<(&Factor, Vec<usize>)> = net
        .cpts()
        .iter()
        .map(|c| {
            let scope = c.table().scope().iter().map(|v| position.get(v).copied().ok_or(Error::UnknownVariable(*v)));
            Ok((c.table(), scope.collect::<Result<Vec<_>>>()?))
        })
        .collect::<Result<_>>()?;

    let mut dist = vec![0.0; vars[target_pos].cardinality];
    loop {
        let mut p = 1.0;
        for (table, scope) in &tables {
            p *= table.get(&scope.iter().map(|&i| assignment[i]).collect::<Vec<_>>());
            if p == 0.0 {
                break;
            }
        }
        dist[assignment[target_pos]] += p;

        // next completion, last free variable fastest
        let mut k = free.len();
        loop {
            if k == 0 {
                let z: f64 = dist.iter().sum();
                if z.is_nan() || z <= INCONSISTENT_EVIDENCE_THRESHOLD {
                    return Err(Error::InconsistentEvidence);
                }
                return Ok(dist.into_iter().map(|x| x / z).collect());
            }
            k -= 1;
            let i = free[k];
            assignment[i] += 1;
            if assignment[i] < vars[i].cardinality {
                break;
            }
            assignment[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::Variable;
    use crate::gates::{constraint_cpt, prior_cpt, ConstraintSpec};
    use crate::network::Cpt;

    const A: VarId = VarId(0);
    const B: VarId = VarId(1);
    const C: VarId = VarId(2);

    fn chain() -> Network {
        Network::new(
            vec![Variable::binary(A, "a"), Variable::binary(B, "b"), Variable::binary(C, "c")],
            vec![
                Cpt::new((A, 2), vec![], vec![0.4, 0.6]).unwrap(),
                Cpt::new((B, 2), vec![(A, 2)], vec![0.9, 0.1, 0.3, 0.7]).unwrap(),
                Cpt::new((C, 2), vec![(B, 2)], vec![0.8, 0.2, 0.25, 0.75]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_root_prior() {
        let net = Network::new(vec![Variable::binary(A, "a")], vec![prior_cpt(A, 0.5).unwrap()]).unwrap();
        let q = Query::new(A, Evidence::new()).unwrap();
        assert_eq!(posterior(&net, &q).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn constraint_pair_gives_thirds() {
        let d = VarId(2);
        let net = Network::new(
            vec![Variable::binary(A, "sup"), Variable::binary(B, "inf"), Variable::binary(d, "d")],
            vec![
                prior_cpt(A, 0.5).unwrap(),
                prior_cpt(B, 0.5).unwrap(),
                constraint_cpt(&ConstraintSpec { superior: A, inferior: B, p_star: 1.0 }, d).unwrap(),
            ],
        )
        .unwrap();
        let e: Evidence = [(d, 1)].into_iter().collect();
        let sup = posterior(&net, &Query::new(A, e.clone()).unwrap()).unwrap();
        let inf = posterior(&net, &Query::new(B, e).unwrap()).unwrap();
        assert!((sup[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((inf[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn chain_order_eliminates_a_first() {
        let q = Query::new(C, Evidence::new()).unwrap();
        assert_eq!(choose_order(&chain(), &q).0, vec![A, B]);
    }

    #[test]
    fn disconnected_order_is_id_sorted() {
        let vars: Vec<Variable> = (0..5).rev().map(|i| Variable::binary(VarId(i), "x")).collect();
        let cpts = (0..5).rev().map(|i| prior_cpt(VarId(i), 0.3).unwrap()).collect();
        let net = Network::new(vars, cpts).unwrap();
        let q = Query::new(VarId(2), Evidence::new()).unwrap();
        assert_eq!(choose_order(&net, &q).0, vec![VarId(0), VarId(1), VarId(3), VarId(4)]);
    }

    #[test]
    fn chain_matches_enumeration_and_hand_computation() {
        let net = chain();
        let e: Evidence = [(C, 1)].into_iter().collect();
        let q = Query::new(A, e).unwrap();
        let ve = posterior(&net, &q).unwrap();
        let brute = enumerate_joint(&net, &q).unwrap();
        // P(C=1|A=1) = 0.3*0.2 + 0.7*0.75 = 0.585; P(C=1|A=0) = 0.9*0.2 + 0.1*0.75 = 0.255
        let hand = 0.6 * 0.585 / (0.6 * 0.585 + 0.4 * 0.255);
        assert!((ve[1] - hand).abs() < 1e-12);
        assert!((brute[1] - hand).abs() < 1e-12);
        let order = EliminationOrder(vec![B]);
        assert!((posterior_with_order(&net, &q, &order).unwrap()[1] - hand).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_is_an_error() {
        let net = Network::new(
            vec![Variable::binary(A, "a"), Variable::binary(B, "b")],
            vec![prior_cpt(A, 0.0).unwrap(), Cpt::new((B, 2), vec![(A, 2)], vec![1.0, 0.0, 0.0, 1.0]).unwrap()],
        )
        .unwrap();
        let e: Evidence = [(B, 1)].into_iter().collect();
        let q = Query::new(A, e).unwrap();
        assert_eq!(posterior(&net, &q), Err(Error::InconsistentEvidence));
        assert_eq!(enumerate_joint(&net, &q), Err(Error::InconsistentEvidence));
    }

    #[test]
    fn deterministic_network_posterior_is_degenerate() {
        let net = Network::new(
            vec![Variable::binary(A, "a"), Variable::binary(B, "b")],
            vec![prior_cpt(A, 1.0).unwrap(), Cpt::new((B, 2), vec![(A, 2)], vec![0.0, 1.0, 1.0, 0.0]).unwrap()],
        )
        .unwrap();
        let q = Query::new(B, Evidence::new()).unwrap();
        assert_eq!(enumerate_joint(&net, &q).unwrap(), vec![1.0, 0.0]);
        assert_eq!(posterior(&net, &q).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_queries() {
        let net = chain();
        let e: Evidence = [(A, 1)].into_iter().collect();
        assert_eq!(Query::new(A, e), Err(Error::TargetObserved(A)));
        let e: Evidence = [(A, 2)].into_iter().collect();
        assert!(matches!(posterior(&net, &Query::new(B, e).unwrap()), Err(Error::StateOutOfRange { .. })));
        let q = Query::new(B, Evidence::new()).unwrap();
        assert_eq!(posterior_with_order(&net, &q, &EliminationOrder(vec![A])), Err(Error::InvalidOrder));
        assert_eq!(posterior(&net, &Query::new(VarId(7), Evidence::new()).unwrap()), Err(Error::UnknownVariable(VarId(7))));
    }

    #[test]
    fn enumeration_guard() {
        let vars: Vec<Variable> = (0..25).map(|i| Variable::binary(VarId(i), "x")).collect();
        let cpts = (0..25).map(|i| prior_cpt(VarId(i), 0.5).unwrap()).collect();
        let net = Network::new(vars, cpts).unwrap();
        let q = Query::new(VarId(0), Evidence::new()).unwrap();
        assert!(matches!(enumerate_joint(&net, &q), Err(Error::StateSpaceTooLarge { .. })));
    }

    #[test]
    fn evidence_probability_of_chain() {
        let e: Evidence = [(C, 1)].into_iter().collect();
        let p = evidence_probability(&chain(), &e).unwrap();
        assert!((p - (0.6 * 0.585 + 0.4 * 0.255)).abs() < 1e-12);
        assert!((evidence_probability(&chain(), &Evidence::new()).unwrap() - 1.0).abs() < 1e-12);
    }
}
