//! Scenario JSON. Agents are numbered from 1 in files and from 0 in the core.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use secest_core::model::{lift_system, BasisKind, CommGraph, LtiModel, DEFAULT_ZERO_TOL};
use secest_core::security::{AnalysisOptions, CostModel, ModeFilter, PlanAlgorithm, SecurityMeasure};
use secest_core::sim::{
    AttackKind, AttackSpec, DesiredState, EstimatorSpec, MeasureSource, ScenarioConfig, TailWindow,
};

use crate::error::{CliError, CliResult};

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B")]
    pub b: Matrix,
    #[serde(rename = "N")]
    pub n: usize,
    pub adjacency: Matrix,
    /// One `p_i x nN` matrix per agent.
    #[serde(rename = "C")]
    pub c: Vec<Matrix>,
    #[serde(default)]
    pub noise: NoiseFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostsFile>,
    /// Fixed security measure such as `"SNSNS"`. Planned from `costs` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmName>,
    #[serde(default)]
    pub analysis: AnalysisFile,
    #[serde(default)]
    pub estimator: EstimatorFile,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attacks: Vec<AttackFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired: Option<DesiredFile>,
    /// Lifted initial state, zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Initial lifted estimate of every agent, zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailFile>,
}

fn default_horizon() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    #[serde(default)]
    pub delta_w: f64,
    #[serde(default)]
    pub delta_v: f64,
}

/// A cost shared by all agents or one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Common(f64),
    Each(Vec<f64>),
}

impl PerAgent {
    fn expand(&self, n: usize, what: &str) -> CliResult<Vec<f64>> {
        match self {
            PerAgent::Common(c) => Ok(vec![*c; n]),
            PerAgent::Each(v) if v.len() == n => Ok(v.clone()),
            PerAgent::Each(v) => Err(CliError::validation(format!(
                "costs.{what} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsFile {
    pub normal: PerAgent,
    pub secure: PerAgent,
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmName {
    Bruteforce,
    Efficient,
}

impl From<AlgorithmName> for PlanAlgorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Bruteforce => PlanAlgorithm::BruteForce,
            AlgorithmName::Efficient => PlanAlgorithm::Efficient,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeFilterName {
    #[default]
    All,
    Unstable,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    #[default]
    Jordan,
    Eigen,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisFile {
    #[serde(default)]
    pub mode_filter: ModeFilterName,
    #[serde(default)]
    pub basis: BasisName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
}

impl AnalysisFile {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            basis: match self.basis {
                BasisName::Jordan => BasisKind::Jordan,
                BasisName::Eigen => BasisKind::Eigen,
            },
            filter: match self.mode_filter {
                ModeFilterName::All => ModeFilter::All,
                ModeFilterName::Unstable => ModeFilter::Unstable,
            },
            zero_tol: self.zero_tol.unwrap_or(DEFAULT_ZERO_TOL),
        }
    }
}

/// `"auto"` or an explicit value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum Auto<T> {
    #[default]
    Auto,
    Value(T),
}

impl<T> Auto<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl<T: Serialize> Serialize for Auto<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => v.serialize(s),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Auto<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Value(T),
            Keyword(String),
        }
        match Raw::deserialize(d)? {
            Raw::Value(v) => Ok(Auto::Value(v)),
            Raw::Keyword(k) if k == "auto" => Ok(Auto::Auto),
            Raw::Keyword(k) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a value, got \"{k}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorFile {
    #[serde(default)]
    pub omega: Auto<f64>,
    #[serde(rename = "L", default)]
    pub rounds: Auto<usize>,
    /// `m x n` feedback gain, zero when absent.
    #[serde(rename = "Kp", default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackFile {
    /// Agent number, starting at 1.
    pub target: usize,
    #[serde(default)]
    pub start: usize,
    /// Last active step (inclusive); the final step of the horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
    #[serde(flatten)]
    pub kind: AttackKindFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackKindFile {
    /// `a_i(k) = -C_i x(k)`.
    Zeroing,
    Bias {
        value: Vec<f64>,
    },
    /// `values[j]` is injected at step `start + j`. With `file`, the entry for
    /// the same target is read from an attack-synth output.
    Sequence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DesiredFile {
    Platoon {
        lead_position: f64,
        lead_speed: f64,
        spacing: f64,
        sampling: f64,
    },
    Autonomous {
        initial: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailFile {
    pub fraction: f64,
    pub min_steps: usize,
}

/// Output of `attack-synth`, also accepted by sequence attacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSynthFile {
    pub phi: String,
    pub horizon: usize,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub attacks: Vec<AttackFile>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub budget: Option<f64>,
    pub algorithm: Option<AlgorithmName>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub mode_filter: Option<ModeFilterName>,
    pub basis: Option<BasisName>,
    pub phi: Option<String>,
}

fn matrix(rows: &Matrix, what: &str) -> CliResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(CliError::validation(format!("{what} is empty")));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::validation(format!("{what} has rows of different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::validation(format!("{what} has a non-finite entry")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Matrix {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn vector(v: &[f64], len: usize, what: &str) -> CliResult<DVector<f64>> {
    if v.len() != len {
        return Err(CliError::validation(format!(
            "{what} has length {}, expected {len}",
            v.len()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

fn agent_index(target: usize, n: usize) -> CliResult<usize> {
    if target == 0 || target > n {
        return Err(CliError::validation(format!(
            "attack target {target} is not an agent in 1..={n}"
        )));
    }
    Ok(target - 1)
}

pub fn parse_phi(s: &str, n: usize) -> CliResult<SecurityMeasure> {
    let m: SecurityMeasure = s
        .parse()
        .map_err(|e: secest_core::Error| CliError::validation(e.to_string()))?;
    if m.agent_count() != n {
        return Err(CliError::validation(format!(
            "phi \"{s}\" has {} letters, expected {n}",
            m.agent_count()
        )));
    }
    Ok(m)
}

impl ScenarioFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(b) = o.budget {
            match &mut self.costs {
                Some(c) => c.budget = b,
                None => return Err(CliError::validation("--budget needs a \"costs\" section in the config")),
            }
        }
        if let Some(a) = o.algorithm {
            self.algorithm = Some(a);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(h) = o.horizon {
            // Windows are clipped to the new horizon; attacks starting after it are dropped.
            self.horizon = h;
            self.attacks.retain(|a| a.start < h);
            for a in &mut self.attacks {
                a.end = a.end.map(|e| e.min(h.saturating_sub(1)));
            }
        }
        if let Some(f) = o.mode_filter {
            self.analysis.mode_filter = f;
        }
        if let Some(b) = o.basis {
            self.analysis.basis = b;
        }
        if let Some(p) = &o.phi {
            self.phi = Some(p.clone());
        }
        Ok(())
    }

    pub fn cost_model(&self) -> CliResult<Option<CostModel>> {
        self.costs
            .as_ref()
            .map(|c| {
                let normal = c.normal.expand(self.n, "normal")?;
                let secure = c.secure.expand(self.n, "secure")?;
                Ok(CostModel::new(normal, secure, c.budget)?)
            })
            .transpose()
    }

    /// Builds and validates the core scenario. `base` resolves relative attack files.
    pub fn to_config(&self, base: &Path) -> CliResult<ScenarioConfig> {
        let a = matrix(&self.a, "A")?;
        let b = matrix(&self.b, "B")?;
        let model = LtiModel::new(a, b)?;
        let (n, m) = (model.state_dim(), model.input_dim());
        let adjacency = matrix(&self.adjacency, "adjacency")?;
        if adjacency.nrows() != self.n || adjacency.ncols() != self.n {
            return Err(CliError::validation(format!("adjacency must be {0}x{0}", self.n)));
        }
        let graph = CommGraph::from_adjacency(&adjacency)?;
        if self.c.len() != self.n {
            return Err(CliError::validation(format!(
                "C has {} matrices, expected N = {}",
                self.c.len(),
                self.n
            )));
        }
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(i, ci)| matrix(ci, &format!("C[{}]", i + 1)))
            .collect::<CliResult<Vec<_>>>()?;
        let system = lift_system(model, graph, c)?;
        let nn = system.lifted_dim();

        let measure = match &self.phi {
            Some(p) => MeasureSource::Fixed(parse_phi(p, self.n)?),
            None => MeasureSource::Plan {
                algorithm: self.algorithm.map(Into::into),
                options: self.analysis.options(),
            },
        };
        let kp = match &self.estimator.kp {
            Some(k) => matrix(k, "Kp")?,
            None => DMatrix::zeros(m, n),
        };
        let x0 = match &self.x0 {
            Some(x) => vector(x, nn, "x0")?,
            None => DVector::zeros(nn),
        };
        let xi0 = self
            .xi0
            .as_ref()
            .map(|all| {
                all.iter()
                    .map(|x| vector(x, nn, "xi0 entry"))
                    .collect::<CliResult<Vec<_>>>()
            })
            .transpose()?;
        let desired = match &self.desired {
            None => DesiredState::Autonomous {
                initial: DVector::zeros(nn),
            },
            Some(DesiredFile::Autonomous { initial }) => DesiredState::Autonomous {
                initial: vector(initial, nn, "desired.initial")?,
            },
            Some(DesiredFile::Platoon {
                lead_position,
                lead_speed,
                spacing,
                sampling,
            }) => DesiredState::Platoon {
                lead_position: *lead_position,
                lead_speed: *lead_speed,
                spacing: *spacing,
                sampling: *sampling,
            },
        };
        let attacks = self
            .attacks
            .iter()
            .map(|a| self.attack(a, &system, base))
            .collect::<CliResult<Vec<_>>>()?;
        let tail = self.tail.map_or_else(TailWindow::default, |t| TailWindow {
            fraction: t.fraction,
            min_steps: t.min_steps,
        });
        let config = ScenarioConfig {
            system,
            costs: self.cost_model()?,
            measure,
            estimator: EstimatorSpec {
                omega: self.estimator.omega.value(),
                rounds: self.estimator.rounds.value(),
                kp,
            },
            horizon: self.horizon,
            seed: self.seed,
            attacks,
            desired,
            delta_w: self.noise.delta_w,
            delta_v: self.noise.delta_v,
            x0,
            xi0,
            tail,
        };
        config.validate()?;
        Ok(config)
    }

    fn attack(
        &self,
        a: &AttackFile,
        system: &secest_core::model::MultiAgentSystem,
        base: &Path,
    ) -> CliResult<AttackSpec> {
        let target = agent_index(a.target, self.n)?;
        let end = a.end.unwrap_or(self.horizon.saturating_sub(1));
        let p = system.agent_output_dim(target);
        let kind = match &a.kind {
            AttackKindFile::Zeroing => AttackKind::Zeroing,
            AttackKindFile::Bias { value } => AttackKind::Bias(vector(value, p, "bias value")?),
            AttackKindFile::Sequence { values, file } => {
                let (start, values) = match (values, file) {
                    (Some(v), None) => (a.start, v.clone()),
                    (None, Some(f)) => {
                        let path = base.join(f);
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
                        let synth: AttackSynthFile = serde_json::from_str(&text)
                            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
                        let entry = synth
                            .attacks
                            .into_iter()
                            .find(|e| e.target == a.target)
                            .ok_or_else(|| {
                                CliError::validation(format!("{} has no attack on agent {}", path.display(), a.target))
                            })?;
                        match entry.kind {
                            AttackKindFile::Sequence { values: Some(v), .. } => (entry.start, v),
                            _ => {
                                return Err(CliError::validation(format!(
                                    "{} entry is not an inline sequence",
                                    path.display()
                                )))
                            }
                        }
                    }
                    _ => {
                        return Err(CliError::validation(
                            "a sequence attack needs exactly one of \"values\" or \"file\"",
                        ))
                    }
                };
                let mut seq = BTreeMap::new();
                for (j, v) in values.iter().enumerate() {
                    seq.insert(start + j, vector(v, p, "sequence value")?);
                }
                AttackKind::Sequence(seq)
            }
        };
        Ok(AttackSpec {
            target,
            kind,
            start: a.start,
            end,
        })
    }

    /// File form of a core scenario (used for generated platoon configs).
    pub fn from_config(config: &ScenarioConfig, phi: Option<String>) -> Self {
        let sys = &config.system;
        let costs = config.costs.as_ref().map(|c| {
            let per = |v: &[f64]| match v.first() {
                Some(&first) if v.iter().all(|&x| x == first) => PerAgent::Common(first),
                _ => PerAgent::Each(v.to_vec()),
            };
            CostsFile {
                normal: per(c.normal()),
                secure: per(c.secure()),
                budget: c.budget(),
            }
        });
        let desired = Some(match &config.desired {
            &DesiredState::Platoon {
                lead_position,
                lead_speed,
                spacing,
                sampling,
            } => DesiredFile::Platoon {
                lead_position,
                lead_speed,
                spacing,
                sampling,
            },
            DesiredState::Autonomous { initial } => DesiredFile::Autonomous {
                initial: initial.iter().copied().collect(),
            },
        });
        let attacks = config
            .attacks
            .iter()
            .map(|a| AttackFile {
                target: a.target + 1,
                start: a.start,
                end: Some(a.end),
                kind: match &a.kind {
                    AttackKind::Zeroing => AttackKindFile::Zeroing,
                    AttackKind::Bias(v) => AttackKindFile::Bias {
                        value: v.iter().copied().collect(),
                    },
                    AttackKind::Sequence(seq) => AttackKindFile::Sequence {
                        values: Some(seq.values().map(|v| v.iter().copied().collect()).collect()),
                        file: None,
                    },
                },
            })
            .collect();
        let tail = (config.tail != TailWindow::default()).then_some(TailFile {
            fraction: config.tail.fraction,
            min_steps: config.tail.min_steps,
        });
        let (algorithm, analysis) = match &config.measure {
            MeasureSource::Plan { algorithm, options } => (
                algorithm.map(|a| match a {
                    PlanAlgorithm::BruteForce => AlgorithmName::Bruteforce,
                    PlanAlgorithm::Efficient => AlgorithmName::Efficient,
                }),
                AnalysisFile {
                    mode_filter: match options.filter {
                        ModeFilter::All => ModeFilterName::All,
                        ModeFilter::Unstable => ModeFilterName::Unstable,
                    },
                    basis: match options.basis {
                        BasisKind::Jordan => BasisName::Jordan,
                        BasisKind::Eigen => BasisName::Eigen,
                    },
                    zero_tol: (options.zero_tol != DEFAULT_ZERO_TOL).then_some(options.zero_tol),
                },
            ),
            MeasureSource::Fixed(_) => (None, AnalysisFile::default()),
        };
        let phi = phi.or_else(|| match &config.measure {
            MeasureSource::Fixed(m) => Some(m.to_string()),
            MeasureSource::Plan { .. } => None,
        });
        ScenarioFile {
            a: to_rows(sys.model().a()),
            b: to_rows(sys.model().b()),
            n: sys.agent_count(),
            adjacency: to_rows(&sys.graph().adjacency()),
            c: sys.measurement_matrices().iter().map(to_rows).collect(),
            noise: NoiseFile {
                delta_w: config.delta_w,
                delta_v: config.delta_v,
            },
            costs,
            phi,
            algorithm,
            analysis,
            estimator: EstimatorFile {
                omega: config.estimator.omega.map_or(Auto::Auto, Auto::Value),
                rounds: config.estimator.rounds.map_or(Auto::Auto, Auto::Value),
                kp: Some(to_rows(&config.estimator.kp)),
            },
            horizon: config.horizon,
            seed: config.seed,
            attacks,
            desired,
            x0: Some(config.x0.iter().copied().collect()),
            xi0: config
                .xi0
                .as_ref()
                .map(|all| all.iter().map(|x| x.iter().copied().collect()).collect()),
            tail,
        }
    }
}
