//! Subcommands. Each reads a scenario JSON and writes JSON/CSV to the paths given.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use secest_core::estimation::{
    build_extended_error_system, check_gain, design_omega, error_bounds, gamma_perp, min_consensus_rounds,
    secure_norms, ConsensusRounds, EstimatorParams,
};
use secest_core::linalg::spectral_norm;
use secest_core::security::{CostModel, SecurityAnalysis, SecurityMeasure};
use secest_core::sim::{build_platoon, plan_with, run_scenario, AttackKind, AttackSpec, MeasureSource, ScenarioConfig};

use crate::config::{
    AlgorithmName, AttackFile, AttackKindFile, AttackSynthFile, BasisName, ModeFilterName, Overrides, ScenarioFile,
};
use crate::error::{CliError, CliResult};
use crate::report::{self, CheckStatus};
use crate::verify::verify;

#[derive(Debug, Parser)]
#[command(
    name = "secest",
    version,
    about = "Security-measure planning and resilient estimation for multi-agent systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose which agents get secure sensors under the budget.
    Plan(PlanArgs),
    /// Security index of a given measure.
    Index(IndexArgs),
    /// Estimator parameters, error bounds and hypothesis verdicts.
    Design(DesignArgs),
    /// Closed-loop run: CSV trace and summary JSON.
    Simulate(SimulateArgs),
    /// Undetectable attack against a given measure.
    AttackSynth(AttackSynthArgs),
    /// Property checks on the given instance.
    Verify(VerifyArgs),
    /// Write a platoon scenario file.
    Platoon(PlatoonArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long, value_enum)]
    pub mode_filter: Option<ModeFilterName>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisName>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmName>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Measure such as `SNSNS`; the config's `phi` when absent.
    #[arg(long)]
    pub phi: Option<String>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Measure such as `SNSNS`; planned from the costs when neither this nor the config's `phi` is given.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmName>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmName>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// CSV trace path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary JSON path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackSynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub phi: Option<String>,
    /// Number of attack steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlatoonArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub sampling: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta_w: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta_v: f64,
    #[arg(long, default_value_t = 1.0)]
    pub normal_cost: f64,
    #[arg(long, default_value_t = 30.0)]
    pub secure_cost: f64,
    #[arg(long, default_value_t = 150.0)]
    pub budget: f64,
    #[arg(long, default_value_t = 5000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Vehicle (from 1) whose outputs are zeroed for the whole run; repeatable.
    #[arg(long)]
    pub zeroing: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A completed subcommand. `late_error` is reported after the output was
/// written, when a report was produced but its verdict fails.
pub struct Outcome {
    pub late_error: Option<CliError>,
}

fn emit(value: &Value, out: Option<&Path>) -> CliResult<()> {
    let text = report::to_json_text(value);
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

struct Loaded {
    file: ScenarioFile,
    config: ScenarioConfig,
}

fn load(path: &Path, overrides: &Overrides) -> CliResult<Loaded> {
    let mut file = ScenarioFile::load(path)?;
    file.apply(overrides)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = file.to_config(base)?;
    Ok(Loaded { file, config })
}

fn overrides(analysis: &AnalysisArgs) -> Overrides {
    Overrides {
        mode_filter: analysis.mode_filter,
        basis: analysis.basis,
        ..Overrides::default()
    }
}

fn costs(config: &ScenarioConfig) -> CliResult<&CostModel> {
    config
        .costs
        .as_ref()
        .ok_or_else(|| CliError::validation("the config has no \"costs\" section"))
}

fn fixed_measure(loaded: &Loaded, what: &str) -> CliResult<SecurityMeasure> {
    match &loaded.config.measure {
        MeasureSource::Fixed(m) => Ok(m.clone()),
        MeasureSource::Plan { .. } => Err(CliError::validation(format!(
            "{what} needs --phi or a \"phi\" entry in the config"
        ))),
    }
}

fn analysis<'a>(loaded: &'a Loaded) -> CliResult<SecurityAnalysis<'a>> {
    Ok(SecurityAnalysis::new(
        &loaded.config.system,
        loaded.file.analysis.options(),
    )?)
}

pub fn cmd_plan(args: &PlanArgs) -> CliResult<Outcome> {
    let o = Overrides {
        budget: args.budget,
        algorithm: args.algorithm,
        ..overrides(&args.analysis)
    };
    let loaded = load(&args.config, &o)?;
    let costs = costs(&loaded.config)?;
    costs.check_budget()?;
    let an = analysis(&loaded)?;
    let plan = plan_with(&an, costs, loaded.file.algorithm.map(Into::into))?;
    emit(&report::plan_json(&plan, an.basis()), args.out.as_deref())?;
    Ok(Outcome { late_error: None })
}

pub fn cmd_index(args: &IndexArgs) -> CliResult<Outcome> {
    let o = Overrides {
        phi: args.phi.clone(),
        ..overrides(&args.analysis)
    };
    let loaded = load(&args.config, &o)?;
    let measure = fixed_measure(&loaded, "index")?;
    let an = analysis(&loaded)?;
    let r = an.security_index(&measure)?;
    let value = json!({
        "phi": report::phi_json(&measure),
        "index": report::index_json(r.index),
        "detectable": r.index.is_infinite(),
        "certificate_mode": report::mode_json(an.basis(), r.certificate),
    });
    emit(&value, args.out.as_deref())?;
    Ok(Outcome { late_error: None })
}

/// Measure from `phi`, else the plan for the configured costs.
fn design_measure(loaded: &Loaded) -> CliResult<SecurityMeasure> {
    match &loaded.config.measure {
        MeasureSource::Fixed(m) => Ok(m.clone()),
        MeasureSource::Plan { .. } => {
            let an = analysis(loaded)?;
            let costs = costs(&loaded.config)
                .map_err(|_| CliError::validation("design needs --phi, a \"phi\" entry or a \"costs\" section"))?;
            Ok(plan_with(&an, costs, loaded.file.algorithm.map(Into::into))?.measure)
        }
    }
}

pub fn cmd_design(args: &DesignArgs) -> CliResult<Outcome> {
    let o = Overrides {
        phi: args.phi.clone(),
        budget: args.budget,
        algorithm: args.algorithm,
        ..overrides(&args.analysis)
    };
    let loaded = load(&args.config, &o)?;
    let config = &loaded.config;
    let sys = &config.system;
    let measure = design_measure(&loaded)?;
    let secure = measure.secure_set();
    let (theta0, nu0) = secure_norms(sys, &secure)?;
    let omega = match config.estimator.omega {
        Some(w) => w,
        None => design_omega(sys.graph())?,
    };
    let gamma = gamma_perp(sys.graph())?;
    let a_norm = spectral_norm(sys.model().a());
    let l_min = min_consensus_rounds(sys, &secure)?;
    let rounds = config.estimator.rounds.or(match l_min {
        ConsensusRounds::AtLeast(l) => Some(l),
        ConsensusRounds::Any => Some(1),
        ConsensusRounds::Infeasible => None,
    });
    let gain = check_gain(sys.model(), &config.estimator.kp)?;
    let mut value = json!({
        "phi": report::phi_json(&measure),
        "omega": omega,
        "L": rounds,
        "L_min": report::rounds_json(l_min),
        "theta0": theta0,
        "nu0": nu0,
        "gamma_perp": gamma,
        "a_norm": a_norm,
        "gain_norm": gain.norm,
    });
    let mut hypotheses = json!({
        "theta_a": theta0 * a_norm,
        "theta_a_below_one": theta0 * a_norm < 1.0,
        "rounds_admissible": rounds.is_some_and(|l| l_min.admits(l)),
        "gain_contractive": gain.contractive,
    });
    let mut holds = false;
    if let Some(rounds) = rounds {
        let params = EstimatorParams {
            omega,
            rounds,
            kp: config.estimator.kp.clone(),
            theta0,
            nu0,
            gamma_perp: gamma,
        };
        let bounds = error_bounds(sys, &params, config.delta_w, config.delta_v);
        let ext = build_extended_error_system(sys, &measure, &params)?;
        value["bounds"] = report::bounds_json(&bounds);
        hypotheses["consensus_norm"] = json!(ext.consensus_norm);
        hypotheses["disagreement_norm"] = json!(ext.disagreement_norm);
        hypotheses["extended_stable"] = json!(ext.stable);
        holds = bounds.stable && ext.stable;
    } else {
        value["bounds"] = json!({ "estimation": null, "control": null });
    }
    hypotheses["bounds_hold"] = json!(holds);
    value["hypotheses"] = hypotheses;
    emit(&value, args.out.as_deref())?;
    Ok(Outcome {
        late_error: (!holds)
            .then(|| CliError::infeasible("estimator hypotheses do not hold; bounds are not certified")),
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Outcome> {
    let o = Overrides {
        seed: args.seed,
        horizon: args.horizon,
        phi: args.phi.clone(),
        budget: args.budget,
        algorithm: args.algorithm,
        ..overrides(&args.analysis)
    };
    let loaded = load(&args.config, &o)?;
    let config = &loaded.config;
    let out = run_scenario(config)?;
    let sys = &config.system;
    let theta_a = out.params.theta0 * spectral_norm(sys.model().a());
    let gain = check_gain(sys.model(), &out.params.kp)?;
    if let Some(path) = &args.trace {
        let file =
            File::create(path).map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        report::write_trace(&out.trace, sys.state_dim(), sys.input_dim(), &mut w)?;
        w.flush()?;
    }
    emit(&report::summary_json(&out, theta_a, gain.norm), args.out.as_deref())?;
    Ok(Outcome { late_error: None })
}

pub fn cmd_attack_synth(args: &AttackSynthArgs) -> CliResult<Outcome> {
    let o = Overrides {
        phi: args.phi.clone(),
        ..overrides(&args.analysis)
    };
    let loaded = load(&args.config, &o)?;
    let measure = fixed_measure(&loaded, "attack-synth")?;
    let horizon = args.horizon.unwrap_or(loaded.config.horizon);
    if horizon == 0 {
        return Err(CliError::validation("--horizon must be at least 1"));
    }
    let an = analysis(&loaded)?;
    let attack = an.synthesize_undetectable_attack(&measure, horizon, None)?;
    let sys = &loaded.config.system;
    let attacks = measure
        .normal_set()
        .into_iter()
        .filter(|&i| {
            attack
                .signal
                .iter()
                .any(|a| a.rows_range(sys.output_block(i)).amax() > 0.0)
        })
        .map(|i| AttackFile {
            target: i + 1,
            start: 0,
            end: Some(horizon - 1),
            kind: AttackKindFile::Sequence {
                values: Some(
                    attack
                        .signal
                        .iter()
                        .map(|a| a.rows_range(sys.output_block(i)).iter().copied().collect())
                        .collect(),
                ),
                file: None,
            },
        })
        .collect();
    let file = AttackSynthFile {
        phi: measure.to_string(),
        horizon,
        x1: attack.x1.iter().copied().collect(),
        x2: attack.x2.iter().copied().collect(),
        attacks,
    };
    emit(&serde_json::to_value(&file)?, args.out.as_deref())?;
    Ok(Outcome { late_error: None })
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<Outcome> {
    let o = Overrides {
        seed: args.seed,
        horizon: args.horizon,
        budget: args.budget,
        ..overrides(&args.analysis)
    };
    let loaded = load(&args.config, &o)?;
    let an = analysis(&loaded)?;
    let checks = verify(&loaded.config, &an);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .map(|c| c.name)
        .collect();
    emit(
        &json!({ "checks": checks, "passed": failed.is_empty() }),
        args.out.as_deref(),
    )?;
    Ok(Outcome {
        late_error: (!failed.is_empty()).then(|| CliError::numerical(format!("failed checks: {}", failed.join(", ")))),
    })
}

pub fn cmd_platoon(args: &PlatoonArgs) -> CliResult<Outcome> {
    let costs = CostModel::uniform(args.n, args.normal_cost, args.secure_cost, args.budget)?;
    let mut config = build_platoon(args.n, args.sampling, args.delta_w, args.delta_v, Some(costs))?;
    config.horizon = args.horizon;
    config.seed = args.seed;
    for &v in &args.zeroing {
        if v == 0 || v > args.n {
            return Err(CliError::validation(format!(
                "--zeroing {v} is not a vehicle in 1..={}",
                args.n
            )));
        }
        config.attacks.push(AttackSpec {
            target: v - 1,
            kind: AttackKind::Zeroing,
            start: 0,
            end: args.horizon - 1,
        });
    }
    config.validate()?;
    let file = ScenarioFile::from_config(&config, None);
    emit(&serde_json::to_value(&file)?, args.out.as_deref())?;
    Ok(Outcome { late_error: None })
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::validation(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Index(a) => cmd_index(a),
        Command::Design(a) => cmd_design(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::AttackSynth(a) => cmd_attack_synth(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Platoon(a) => cmd_platoon(a),
    };
    match result {
        Ok(Outcome { late_error: None }) => 0,
        Ok(Outcome { late_error: Some(err) }) | Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
