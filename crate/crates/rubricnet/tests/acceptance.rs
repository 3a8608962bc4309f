//! One line per acceptance criterion. Exits nonzero when a required
//! criterion fails. Posterior reproduction (6) is reported but only fatal
//! with `ACCEPTANCE_STRICT=1`; the performance target (8) only warns.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rubricnet::fixtures;
use rubricnet::reproduce::reproduce;
use rubricnet::validate::{self, DEFAULT_SEED};
use rubricnet_core::cat::{cat_score, pearson, AssessOptions, CatModel, CatParameterSet, Variant};
use rubricnet_core::gates::{noisy_or_cpt, or_cpt, NoisyOrSpec};
use rubricnet_core::VarId;

enum Status {
    Pass,
    Fail,
    Warn,
}

struct Line {
    id: u32,
    name: &'static str,
    status: Status,
    detail: String,
    required: bool,
}

fn line(id: u32, name: &'static str, passed: bool, detail: String) -> Line {
    Line { id, name, status: if passed { Status::Pass } else { Status::Fail }, detail, required: true }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn oracle() -> Line {
    let (c, t) = timed(|| validate::oracle_equivalence(DEFAULT_SEED, 200));
    let ok = c.passed && t < Duration::from_secs(30);
    line(1, "oracle equivalence", ok, format!("{} in {:.2} s", c.detail, t.as_secs_f64()))
}

fn priors() -> Line {
    let (c, t) = timed(validate::prior_propagation);
    let (count, fractions) = validate::down_set_priors();
    let enumerated = count == 20 && fractions.iter().zip(validate::CONSTRAINED_PRIORS).all(|(a, b)| (a - b).abs() < 1e-12);
    let ok = c.passed && enumerated && t < Duration::from_secs(5);
    line(2, "prior propagation", ok, format!("{}; {:.2} s", c.detail, t.as_secs_f64()))
}

fn gates() -> Line {
    let c = validate::gate_identities(DEFAULT_SEED, 50);
    let parents: Vec<VarId> = (0..4).map(VarId).collect();
    let deterministic = noisy_or_cpt(&NoisyOrSpec::new(parents.iter().map(|&p| (p, 0.0)).collect()), VarId(9)).ok()
        == or_cpt(&parents, VarId(9)).ok();
    let guess = [0.9, 0.25, 0.0, 1.0].into_iter().all(|l| {
        noisy_or_cpt(&NoisyOrSpec::new(vec![]).with_leak(l), VarId(0)).map(|cpt| cpt.probability(&[], 1)) == Ok(1.0 - l)
    });
    line(3, "gate identities", c.passed && deterministic && guess, c.detail)
}

fn constraints() -> Line {
    let c = validate::constraint_semantics(DEFAULT_SEED, 100);
    line(4, "constraint semantics", c.passed, c.detail)
}

fn cat_scores() -> Line {
    let expected = fixtures::expected();
    let exact = [("21", 10.0 / 3.0), ("33", 0.75), ("81", 1.75), ("92", 2.5)];
    let mut ok = true;
    let mut parts = Vec::new();
    for r in fixtures::pupils() {
        let score = cat_score(&r);
        let want = exact.iter().find(|(id, _)| *id == r.id).map(|&(_, v)| v);
        let reported = expected.cat_scores.get(&r.id);
        let hit = want.is_some_and(|w| (score - w).abs() <= 0.005) && reported.is_some_and(|p| p.matches(score));
        ok &= hit;
        parts.push(format!("{} {score:.2}", r.id));
    }
    ok &= parts.len() == 4;
    line(5, "CAT scores", ok, parts.join(", "))
}

fn reproduction() -> Line {
    let (reps, t) = timed(|| [Variant::B, Variant::BC, Variant::BCS].map(|v| reproduce(v).expect("bundled pupils assess")));
    let mut parts = Vec::new();
    let mut traceable = true;
    for r in &reps {
        let out = r.out_of_tolerance().count();
        let unexplained = r.out_of_tolerance().filter(|c| c.attribution.is_none()).count();
        traceable &= unexplained == 0;
        parts.push(format!("{} {out}/{} out ({unexplained} unexplained, max {:.3})", r.variant, r.cells.len(), r.max_deviation()));
    }
    let table = reps.iter().all(|r| !r.deviation_csv().is_empty() && r.render().contains("|dev|"));
    let fast = t < Duration::from_secs(60);
    parts.push(format!("{:.2} s", t.as_secs_f64()));
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1");
    let mut l = line(6, "posterior reproduction", traceable && table && fast, parts.join("; "));
    l.required = strict || !table || !fast;
    l
}

fn ecs() -> Line {
    let c = validate::ecs_properties();
    line(7, "ECS properties", c.passed, c.detail)
}

fn performance() -> Line {
    let records = fixtures::pupils();
    let mut ok = true;
    let mut parts = Vec::new();
    for v in Variant::ALL {
        let model = CatModel::new(CatParameterSet::builtin(v)).expect("builtin model");
        let (_, t) = timed(|| {
            for r in &records {
                model.assess(r, &AssessOptions::default()).expect("bundled pupils assess");
            }
        });
        let per = t.as_secs_f64() / records.len() as f64;
        let limit = if v.supplementary() { 5.0 } else { 1.0 };
        ok &= per < limit;
        parts.push(format!("{v} {per:.3} s"));
    }
    Line {
        id: 8,
        name: "performance",
        status: if ok { Status::Pass } else { Status::Warn },
        detail: format!("per student: {}", parts.join(", ")),
        required: false,
    }
}

fn correlation() -> Line {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let up = pearson(&a, &a.map(|x| 2.0 * x + 1.0)).ok() == Some(1.0);
    let down = pearson(&a, &a.map(|x| -x)).ok() == Some(-1.0);
    // 6 / sqrt(10 * 6)
    let hand = pearson(&a, &[2.0, 4.0, 5.0, 4.0, 5.0]).is_ok_and(|r| (r - 0.774_596_669_241_483_4).abs() < 1e-6);
    let undefined = pearson(&[1.0], &[2.0]).is_err() && pearson(&a, &[3.0; 5]).is_err();
    line(9, "pearson", up && down && hand && undefined, format!("+1 {up}, -1 {down}, hand case {hand}, undefined {undefined}"))
}

fn main() -> ExitCode {
    let lines = [oracle(), priors(), gates(), constraints(), cat_scores(), reproduction(), ecs(), performance(), correlation()];
    let mut failed = false;
    for l in &lines {
        let tag = match l.status {
            Status::Pass => "PASS",
            Status::Fail if l.required => {
                failed = true;
                "FAIL"
            }
            Status::Fail => "FAIL (known)",
            Status::Warn => "WARN",
        };
        println!("criterion {} {tag} {}: {}", l.id, l.name, l.detail);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
