//! Oracle and property checks run by `rubricnet validate` and by the
//! acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rubricnet_core::cat::{builtin_cat_spec, ecs_t3_lambdas, CatModel, CatParameterSet, Variant, ECS_SCALE};
use rubricnet_core::engine::{enumerate_joint, posterior, posterior_with_order};
use rubricnet_core::gates::{decompose_noisy_or, noisy_or_cpt, or_cpt, prior_cpt, NoisyOrSpec};
use rubricnet_core::network::validate_network;
use rubricnet_core::rubric::{Cell, Grid, NodeKey};
use rubricnet_core::{EliminationOrder, Error, Evidence, Network, Query, VarId, Variable};

pub const DEFAULT_SEED: u64 = 20240917;

/// Published target priors once the ordering constraints are imposed, row-major.
pub const CONSTRAINED_PRIORS: [f64; 9] = [0.95, 0.8, 0.5, 0.8, 0.5, 0.2, 0.5, 0.2, 0.05];

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult { name, passed, detail }
    }
}

/// Random DAG over 2..=`max_vars` binary variables, each with up to three
/// earlier parents. Roughly one row in ten is deterministic.
pub fn random_network(rng: &mut impl Rng, max_vars: usize) -> Network {
    let n = rng.gen_range(2..=max_vars);
    let variables: Vec<Variable> = (0..n).map(|i| Variable::binary(VarId(i as u32), format!("v{i}"))).collect();
    let mut cpts = Vec::with_capacity(n);
    for i in 0..n {
        let k = rng.gen_range(0..=i.min(3));
        let mut parents: Vec<usize> = rand::seq::index::sample(rng, i.max(1), k).into_vec();
        if i == 0 {
            parents.clear();
        }
        parents.sort_unstable();
        let mut values = Vec::with_capacity(2 << k);
        for _ in 0..1 << k {
            let p: f64 = if rng.gen_bool(0.1) { f64::from(u8::from(rng.gen_bool(0.5))) } else { rng.gen() };
            values.extend([1.0 - p, p]);
        }
        let parents = parents.into_iter().map(|p| (VarId(p as u32), 2)).collect();
        cpts.push(rubricnet_core::Cpt::new((VarId(i as u32), 2), parents, values).expect("rows sum to one"));
    }
    Network::new(variables, cpts).expect("random network is valid")
}

/// Observes each non-target variable with probability 0.3.
pub fn random_evidence(rng: &mut impl Rng, net: &Network, target: VarId) -> Evidence {
    let mut e = Evidence::new();
    for v in net.variables() {
        if v.id != target && rng.gen_bool(0.3) {
            e.insert(v.id, rng.gen_range(0..2)).expect("fresh variable");
        }
    }
    e
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Variable elimination against full enumeration on random networks.
pub fn oracle_equivalence(seed: u64, count: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matches = 0;
    let mut worst = 0.0f64;
    let mut first_failure = None;
    for i in 0..count {
        let net = random_network(&mut rng, 16);
        let target = VarId(rng.gen_range(0..net.len()) as u32);
        let q = Query::new(target, random_evidence(&mut rng, &net, target)).expect("target unobserved");
        let ok = match (posterior(&net, &q), enumerate_joint(&net, &q)) {
            (Ok(a), Ok(b)) => {
                let d = max_abs_diff(&a, &b);
                worst = worst.max(d);
                d <= 1e-9 && (a.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            }
            (Err(Error::InconsistentEvidence), Err(Error::InconsistentEvidence)) => true,
            _ => false,
        };
        if ok {
            matches += 1;
        } else if first_failure.is_none() {
            first_failure = Some(i);
        }
    }
    let mut detail = format!("{matches}/{count} random networks match, max |diff| {worst:.1e}");
    if let Some(i) = first_failure {
        detail.push_str(&format!(", first mismatch at network {i}"));
    }
    CheckResult::new("oracle equivalence", matches == count, detail)
}

/// Min-degree against reversed-id elimination on random networks.
pub fn order_independence(seed: u64, count: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut agree = 0;
    for _ in 0..count {
        let net = random_network(&mut rng, 16);
        let target = VarId(rng.gen_range(0..net.len()) as u32);
        let q = Query::new(target, random_evidence(&mut rng, &net, target)).expect("target unobserved");
        let mut free: Vec<VarId> =
            net.variables().iter().map(|v| v.id).filter(|&v| v != target && !q.evidence().contains(v)).collect();
        free.reverse();
        match (posterior(&net, &q), posterior_with_order(&net, &q, &EliminationOrder(free))) {
            (Ok(a), Ok(b)) => {
                let d = max_abs_diff(&a, &b);
                worst = worst.max(d);
                agree += usize::from(d <= 1e-9);
            }
            (Err(a), Err(b)) if a == b => agree += 1,
            _ => {}
        }
    }
    CheckResult::new("order independence", agree == count, format!("{agree}/{count} agree, max |diff| {worst:.1e}"))
}

/// Fraction of implication-consistent configurations of the CAT grid in
/// which each cell is mastered, by direct enumeration of all 512.
pub fn down_set_priors() -> (usize, Vec<f64>) {
    let grid = Grid { rows: 3, cols: 3 };
    let pairs: Vec<(usize, usize)> =
        grid.consecutive_implications().into_iter().map(|(s, i)| (grid.position(s), grid.position(i))).collect();
    let mut count = 0usize;
    let mut mastered = [0usize; 9];
    for config in 0u32..1 << 9 {
        let has = |k: usize| config & (1 << k) != 0;
        if pairs.iter().all(|&(s, i)| !has(s) || has(i)) {
            count += 1;
            for (k, m) in mastered.iter_mut().enumerate() {
                *m += usize::from(has(k));
            }
        }
    }
    (count, mastered.iter().map(|&m| m as f64 / count as f64).collect())
}

/// Constrained CAT networks with only the clamped constraints observed.
pub fn prior_propagation() -> CheckResult {
    let (count, enumerated) = down_set_priors();
    let mut worst = max_abs_diff(&enumerated, &CONSTRAINED_PRIORS);
    let mut ok = count == 20 && worst <= 1e-12;
    for variant in [Variant::BC, Variant::BCS, Variant::ECS] {
        let model = match CatModel::new(CatParameterSet::builtin(variant)) {
            Ok(m) => m,
            Err(e) => return CheckResult::new("prior propagation", false, format!("{variant}: {e}")),
        };
        let compiled = model.compiled();
        let base = compiled.base_evidence();
        for (k, id) in compiled.target_ids().into_iter().enumerate() {
            match posterior(compiled.network(), &Query::new(id, base.clone()).expect("targets unobserved")) {
                Ok(p) => {
                    let d = (p[1] - CONSTRAINED_PRIORS[k]).abs();
                    worst = worst.max(d);
                    ok &= d <= 1e-6;
                }
                Err(_) => ok = false,
            }
        }
    }
    CheckResult::new(
        "prior propagation",
        ok,
        format!("{count} down-sets; BC, BCS and ECS priors vs published, max |diff| {worst:.1e}"),
    )
}

/// Noisy-OR tables against the explicit-inhibitor decomposition, plus the
/// deterministic-OR and guess-probability identities.
pub fn gate_identities(seed: u64, count: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a7e);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for g in 0..count {
        let n = rng.gen_range(1..=6);
        let parents: Vec<VarId> = (0..n).map(|i| VarId(i as u32)).collect();
        let child = VarId(n as u32);
        let mut spec = NoisyOrSpec::new(parents.iter().map(|&p| (p, rng.gen::<f64>())).collect());
        if rng.gen_bool(0.5) {
            spec = spec.with_leak(rng.gen());
        }
        let cpt = noisy_or_cpt(&spec, child).expect("valid gate");
        let decomposition = decompose_noisy_or(&spec, child, n as u32 + 1).expect("valid gate");
        let mut variables: Vec<Variable> = parents.iter().map(|&p| Variable::binary(p, "parent")).collect();
        variables.push(Variable::binary(child, "child"));
        variables.extend(decomposition.variables);
        let mut cpts: Vec<_> = parents.iter().map(|&p| prior_cpt(p, 0.5).expect("valid prior")).collect();
        cpts.extend(decomposition.cpts);
        let net = Network::new(variables, cpts).expect("decomposition is a valid network");
        for row in 0..1usize << n {
            let states: Vec<usize> = (0..n).map(|k| (row >> (n - 1 - k)) & 1).collect();
            let evidence: Evidence = parents.iter().copied().zip(states.iter().copied()).collect();
            let p = enumerate_joint(&net, &Query::new(child, evidence).expect("child unobserved")).expect("parents have mass");
            let d = (p[1] - cpt.probability(&states, 1)).abs();
            worst = worst.max(d);
            if d > 1e-9 {
                failures.push(format!("gate {g} row {row}"));
            }
        }
    }

    let parents: Vec<VarId> = (0..4).map(VarId).collect();
    let zero = NoisyOrSpec::new(parents.iter().map(|&p| (p, 0.0)).collect());
    let or_ok = noisy_or_cpt(&zero, VarId(9)).ok() == or_cpt(&parents, VarId(9)).ok();
    if !or_ok {
        failures.push("λ = 0 is not a deterministic OR".into());
    }
    let leak_ok = [0.9, 0.25, 0.0, 1.0].iter().all(|&l| {
        let only = noisy_or_cpt(&NoisyOrSpec::new(vec![]).with_leak(l), VarId(9)).expect("valid gate");
        let with_parent = noisy_or_cpt(&NoisyOrSpec::new(vec![(VarId(0), 0.3)]).with_leak(l), VarId(9)).expect("valid gate");
        only.probability(&[], 1) == 1.0 - l && with_parent.probability(&[0], 1) == 1.0 - l
    });
    if !leak_ok {
        failures.push("leak-only guess probability differs from 1 - λ_leak".into());
    }
    let mut detail = format!("{count} random gates vs inhibitor decomposition, max |diff| {worst:.1e}; OR and leak identities");
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(", ")));
    }
    CheckResult::new("gate identities", failures.is_empty(), detail)
}

/// Random sparse answer evidence on a compiled network.
fn random_answer_evidence(rng: &mut impl Rng, model: &CatModel) -> Evidence {
    let observable: Vec<VarId> = model
        .compiled()
        .index()
        .iter()
        .filter(|(k, _)| matches!(k, NodeKey::Answer { .. } | NodeKey::SupplementaryAnswer { .. }))
        .map(|(_, &v)| v)
        .collect();
    let mut e = model.compiled().base_evidence();
    let k = rng.gen_range(1..=8);
    for i in rand::seq::index::sample(rng, observable.len(), k) {
        e.insert(observable[i], rng.gen_range(0..2)).expect("fresh variable");
    }
    e
}

/// Posterior ordering and zero joint mass on forbidden configurations for
/// every implication of every constrained variant.
pub fn constraint_semantics(seed: u64, count: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
    let mut worst_order = f64::NEG_INFINITY;
    let mut worst_joint = 0.0f64;
    let mut errors = 0;
    let mut checked = 0;
    for variant in [Variant::BC, Variant::BCS, Variant::ECS] {
        let model = match CatModel::new(CatParameterSet::builtin(variant)) {
            Ok(m) => m,
            Err(e) => return CheckResult::new("constraint semantics", false, format!("{variant}: {e}")),
        };
        let compiled = model.compiled();
        let net = compiled.network();
        let grid = compiled.grid();
        for _ in 0..count {
            let e = random_answer_evidence(&mut rng, &model);
            let marginals: Result<Vec<f64>, Error> = compiled
                .target_ids()
                .into_iter()
                .map(|id| posterior(net, &Query::new(id, e.clone())?).map(|p| p[1]))
                .collect();
            let Ok(marginals) = marginals else {
                errors += 1;
                continue;
            };
            for (superior, inferior, _) in compiled.constraints() {
                checked += 1;
                let (ps, pi) = (marginals[grid.position(superior)], marginals[grid.position(inferior)]);
                worst_order = worst_order.max(ps - pi);
                if ps > 0.0 {
                    let sup = compiled.id(&NodeKey::Target(superior)).expect("compiled");
                    let inf = compiled.id(&NodeKey::Target(inferior)).expect("compiled");
                    let mut given = e.clone();
                    given.insert(sup, 1).expect("target unobserved");
                    match posterior(net, &Query::new(inf, given).expect("inferior unobserved")) {
                        Ok(p) => worst_joint = worst_joint.max(ps * p[0]),
                        Err(_) => errors += 1,
                    }
                }
            }
        }
    }
    let ok = errors == 0 && worst_order <= 1e-9 && worst_joint <= 1e-12;
    CheckResult::new(
        "constraint semantics",
        ok,
        format!(
            "{checked} pair checks over BC, BCS, ECS; max P(sup)-P(inf) {worst_order:.1e}, max P(sup=1,inf=0) {worst_joint:.1e}, {errors} errors"
        ),
    )
}

/// Shipped T3 table: values on the elicitation scale, non-decreasing with
/// difficulty, one value per answer.
pub fn ecs_properties() -> CheckResult {
    let t3 = ecs_t3_lambdas();
    let mut problems = Vec::new();
    let on_scale = |x: f64| ECS_SCALE.iter().any(|s| (s - x).abs() < 1e-12);
    if let Some(x) = t3.lambda_targets.values().chain(t3.lambda_supp.values()).find(|&&x| !on_scale(x)) {
        problems.push(format!("{x} is not on the scale"));
    }
    let grid = builtin_cat_spec().grid();
    let answer_lambda = |answer: Cell| -> Vec<f64> {
        let mut v: Vec<f64> = t3.lambda_targets.iter().filter(|((a, _), _)| *a == answer).map(|(_, &l)| l).collect();
        v.extend(t3.lambda_supp.iter().filter(|((_, a), _)| *a == answer).map(|(_, &l)| l));
        v
    };
    for a in grid.cells() {
        let la = answer_lambda(a);
        if la.is_empty() || la.iter().any(|&x| x != la[0]) {
            problems.push(format!("answer ({a}) mixes inhibitions"));
            continue;
        }
        for b in grid.cells().filter(|b| b.row >= a.row && b.col >= a.col) {
            if answer_lambda(b).first().is_some_and(|&lb| lb < la[0]) {
                problems.push(format!("({b}) is less inhibited than ({a})"));
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("{} T3 entries on the 0.10..0.60 scale, monotone, shared per answer", t3.lambda_targets.len() + t3.lambda_supp.len())
    } else {
        problems.join("; ")
    };
    CheckResult::new("ECS T3 table", problems.is_empty(), detail)
}

/// Structural report for a user-supplied network.
pub fn network_check(net: &Network) -> CheckResult {
    let report = validate_network(net);
    let detail = if report.is_empty() {
        format!("{} variables, {} edges, well formed", net.len(), net.edge_count())
    } else {
        report.issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
    };
    CheckResult::new("network file", report.is_empty(), detail)
}

/// The default suite.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        oracle_equivalence(seed, 200),
        order_independence(seed, 200),
        prior_propagation(),
        gate_identities(seed, 50),
        constraint_semantics(seed, 100),
        ecs_properties(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_down_sets() {
        let (count, priors) = down_set_priors();
        assert_eq!(count, 20);
        assert!((priors[0] - 19.0 / 20.0).abs() < 1e-15);
        assert!((priors[8] - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn random_networks_are_seeded() {
        let a = random_network(&mut ChaCha8Rng::seed_from_u64(3), 16);
        let b = random_network(&mut ChaCha8Rng::seed_from_u64(3), 16);
        assert_eq!(a.cpts(), b.cpts());
    }
}
