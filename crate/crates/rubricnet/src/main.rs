use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rubricnet::answers::{correlation_report, parse_answers, posteriors_csv, report_json, scores_csv};
use rubricnet::formats::{network_to_json, parse_network, parse_rubric, parse_task_overrides};
use rubricnet::reproduce::reproduce_records;
use rubricnet::{fixtures, read_to_string, validate, write_atomic};
use rubricnet_core::cat::{AssessOptions, CatModel, CatParameterSet, CompetenceProfile, Variant};
use rubricnet_core::rubric::{compile, AnswerEncoding, MissingSkillEvidence};

#[derive(Parser)]
#[command(name = "rubricnet", version, about = "Rubric-based Bayesian network learner models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    B,
    Bc,
    Bcs,
    Ecs,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::B => Variant::B,
            VariantArg::Bc => Variant::BC,
            VariantArg::Bcs => Variant::BCS,
            VariantArg::Ecs => Variant::ECS,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Unconstrained,
    Constrained,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Rubric JSON; the built-in CAT rubric when omitted.
    #[arg(long)]
    rubric: Option<PathBuf>,
    /// Task tables (JSON list) replacing those of the rubric in the ECS variant.
    #[arg(long)]
    ecs_lambdas: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EncodingArgs {
    /// Leave supplementary skills of failed tasks unobserved instead of zero.
    #[arg(long)]
    fail_supplementary_unobserved: bool,
    /// Leave applicable but unused supplementary skills unobserved instead of zero.
    #[arg(long)]
    unused_supplementary_unobserved: bool,
    /// Answer encoding, overriding the variant's own.
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
}

impl EncodingArgs {
    fn options(&self) -> AssessOptions {
        let missing = |unobserved| if unobserved { MissingSkillEvidence::Unobserved } else { MissingSkillEvidence::Zero };
        let mut opts = AssessOptions {
            encoding: self.encoding.map(|e| match e {
                EncodingArg::Unconstrained => AnswerEncoding::Unconstrained,
                EncodingArg::Constrained => AnswerEncoding::Constrained,
            }),
            ..AssessOptions::default()
        };
        opts.supplementary.failed = missing(self.fail_supplementary_unobserved);
        opts.supplementary.unused = missing(self.unused_supplementary_unobserved);
        opts
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile a rubric into a network file and print its structure.
    Compile {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Posterior competence profiles for every student in an answers CSV.
    Assess {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        answers: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        encoding: EncodingArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// CAT and BN scores per student and variant, with correlations.
    Score {
        #[arg(long)]
        answers: PathBuf,
        /// Variants to score; all four when omitted.
        #[arg(long, value_enum)]
        variant: Vec<VariantArg>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        encoding: EncodingArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Assess the bundled reference pupils and compare with the published values.
    Reproduce {
        #[arg(long, value_enum)]
        variant: Vec<VariantArg>,
        #[command(flatten)]
        encoding: EncodingArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the oracle and property suites.
    Validate {
        /// Also check a network JSON file.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, default_value_t = validate::DEFAULT_SEED)]
        seed: u64,
    },
}

fn existing(path: &Path) -> Result<&Path> {
    if !path.exists() {
        bail!("{} does not exist", path.display());
    }
    Ok(path)
}

fn parameters(variant: Variant, model: &ModelArgs) -> Result<CatParameterSet> {
    let mut params = CatParameterSet::builtin(variant);
    if let Some(path) = &model.rubric {
        params.spec = parse_rubric(&read_to_string(existing(path)?)?)?;
    }
    if let Some(path) = &model.ecs_lambdas {
        if variant != Variant::ECS {
            bail!("--ecs-lambdas only applies to the ecs variant");
        }
        for task in parse_task_overrides(&read_to_string(existing(path)?)?)? {
            params.override_task(task)?;
        }
        params.spec.validate()?;
    }
    Ok(params)
}

fn assess_all(params: CatParameterSet, answers: &Path, opts: &AssessOptions) -> Result<Vec<CompetenceProfile>> {
    let records = parse_answers(&read_to_string(existing(answers)?)?)?;
    let model = CatModel::new(params)?;
    records
        .par_iter()
        .map(|r| model.assess(r, opts).with_context(|| format!("student {}", r.id)))
        .collect()
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<()> {
    write_atomic(&path, bytes)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn variant_list(args: &[VariantArg]) -> Vec<Variant> {
    if args.is_empty() {
        Variant::ALL.to_vec()
    } else {
        args.iter().map(|&v| v.into()).collect()
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Compile { variant, model, out } => {
            let variant: Variant = variant.into();
            let params = parameters(variant, &model)?;
            let compiled = compile(&params.spec, &variant.model_config())?;
            let s = compiled.summary();
            println!("variant {variant}: {} variables, {} edges", s.variables, s.edges);
            println!(
                "  skills {}  supplementary {}  leak {}  constraints {}  groups {}  answers {}  supplementary answers {}",
                s.targets, s.supplementary, s.leaks, s.constraints, s.groups, s.answers, s.supplementary_answers
            );
            let name = format!("network-{}.json", variant.to_string().to_lowercase());
            write(out.join(name), network_to_json(compiled.network()).as_bytes())?;
            Ok(true)
        }
        Command::Assess { variant, answers, model, encoding, out } => {
            let variant: Variant = variant.into();
            let profiles = assess_all(parameters(variant, &model)?, &answers, &encoding.options())?;
            let suffix = variant.to_string().to_lowercase();
            write(out.join(format!("posteriors-{suffix}.csv")), &posteriors_csv(&profiles))?;
            write(out.join(format!("scores-{suffix}.csv")), &scores_csv(&profiles))?;
            Ok(true)
        }
        Command::Score { answers, variant, model, encoding, out } => {
            let mut profiles = Vec::new();
            for v in variant_list(&variant) {
                profiles.extend(assess_all(parameters(v, &model)?, &answers, &encoding.options())?);
            }
            let report = correlation_report(&profiles);
            for (v, r) in &report.pearson {
                match r {
                    Some(r) => println!("{v}: pearson {r:.4} over {} students", report.students),
                    None => println!("{v}: pearson undefined over {} students", report.students),
                }
            }
            write(out.join("scores.csv"), &scores_csv(&profiles))?;
            write(out.join("report.json"), &report_json(&report))?;
            Ok(true)
        }
        Command::Reproduce { variant, encoding, out } => {
            let records = fixtures::pupils();
            let expected = fixtures::expected();
            let opts = encoding.options();
            let mut scores_ok = true;
            for v in variant_list(&variant) {
                let start = Instant::now();
                let rep = reproduce_records(CatParameterSet::builtin(v), &records, &expected, &opts)?;
                print!("{}", rep.render());
                println!("  ({:.2} s including switch re-runs)\n", start.elapsed().as_secs_f64());
                scores_ok &= rep.scores.iter().all(|s| s.matches);
                let suffix = v.to_string().to_lowercase();
                write(out.join(format!("deviations-{suffix}.csv")), &rep.deviation_csv())?;
                write(out.join(format!("posteriors-{suffix}.csv")), &posteriors_csv(&rep.profiles))?;
                write(out.join(format!("scores-{suffix}.csv")), &scores_csv(&rep.profiles))?;
            }
            Ok(scores_ok)
        }
        Command::Validate { network, seed } => {
            let mut checks = validate::run_all(seed);
            if let Some(path) = network {
                let net = parse_network(&read_to_string(existing(&path)?)?)?;
                checks.push(validate::network_check(&net));
            }
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
