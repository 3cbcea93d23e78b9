//! Scenario files: one JSON document per scenario, complex matrices given as
//! rows of [re, im] pairs, unknown keys rejected.

use serde::Deserialize;

use qithermo::hilbert::{PureState, SystemLayout, UnitaryOp};
use qithermo::linalg::{c, CMat};
use qithermo::measurement::MeasurementModel;
use qithermo::roof::RoofBudget;
use qithermo::scenarios;
use qithermo::thermo::{BathSpec, FinalTemperature, Step, SzilardParams, ThermoScenario};
use qithermo::{Error, Result};

/// A complex matrix literal: rows of [re, im] pairs.
pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

pub fn parse_matrix(lit: &MatrixLiteral) -> Result<CMat> {
    let rows = lit.len();
    if rows == 0 {
        return Err(Error::Invalid("empty matrix literal".into()));
    }
    let cols = lit[0].len();
    if lit.iter().any(|r| r.len() != cols) {
        return Err(Error::Invalid("ragged matrix literal".into()));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        c(lit[i][j][0], lit[i][j][1])
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub szilard: Option<SzilardConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SzilardConfig {
    pub temperature: f64,
    pub steps: usize,
    pub unit_dim: usize,
}

impl SzilardConfig {
    pub fn params(&self) -> SzilardParams {
        SzilardParams::new(self.temperature, self.steps, self.unit_dim)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub checks: Vec<String>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub baths: Vec<BathConfig>,
    #[serde(default)]
    pub prelude: Vec<StepConfig>,
    pub measurement: MeasurementConfig,
    pub feedback: FeedbackConfig,
    #[serde(default)]
    pub finale: Vec<StepConfig>,
    #[serde(default)]
    pub final_temperature: FinalTempConfig,
    #[serde(default)]
    pub roof: Option<RoofConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_system_label")]
    pub label: String,
    pub hamiltonian: MatrixLiteral,
    pub temperature: f64,
}

fn default_system_label() -> String {
    "S".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub label: String,
    pub hamiltonian: MatrixLiteral,
    pub temperature: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum StepConfig {
    /// Replace the system Hamiltonian.
    Quench(MatrixLiteral),
    /// Unitary on the named factors (system and/or baths).
    Evolve {
        labels: Vec<String>,
        matrix: MatrixLiteral,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default)]
    pub preset: Option<MeasurementPreset>,
    /// Explicit interaction on (system, probe), probe factor last.
    #[serde(default)]
    pub interaction: Option<MatrixLiteral>,
    #[serde(default)]
    pub probe_basis: ProbeBasisConfig,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementPreset {
    Cnot,
    Weak(f64),
    Haar(u64),
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeBasisConfig {
    #[default]
    Computational,
    Haar(u64),
    /// Closed-form optimal two-outcome measurement built from the prepared
    /// system state and the interaction (empty prelude, qubit system).
    AppendixOptimal,
    Explicit(Vec<MatrixLiteral>),
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FinalTempConfig {
    #[default]
    Same,
    Fixed(f64),
    MatchSpectrum,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoofConfig {
    pub ensemble_size: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<ThermoScenario> {
        let h_system = parse_hermitian(&self.system.hamiltonian, "system hamiltonian")?;
        let s_dim = h_system.nrows();
        let s_label = self.system.label.clone();
        let baths: Vec<BathSpec> = self
            .baths
            .iter()
            .map(|b| {
                Ok(BathSpec {
                    label: b.label.clone(),
                    hamiltonian: parse_hermitian(&b.hamiltonian, "bath hamiltonian")?,
                    temperature: b.temperature,
                })
            })
            .collect::<Result<_>>()?;

        let step_of = |cfg: &StepConfig| -> Result<Step> {
            match cfg {
                StepConfig::Quench(m) => Ok(Step::QuenchSystem(parse_hermitian(
                    m,
                    "quench hamiltonian",
                )?)),
                StepConfig::Evolve { labels, matrix } => {
                    let mut factors = Vec::new();
                    for l in labels {
                        let dim = if *l == s_label {
                            s_dim
                        } else {
                            baths
                                .iter()
                                .find(|b| b.label == *l)
                                .map(|b| b.dim())
                                .ok_or_else(|| Error::UnknownLabel(l.clone()))?
                        };
                        factors.push((l.clone(), dim));
                    }
                    let layout = SystemLayout::new(factors)?;
                    Ok(Step::Evolve(UnitaryOp::new(layout, parse_matrix(matrix)?)?))
                }
            }
        };
        let prelude: Vec<Step> = self.prelude.iter().map(&step_of).collect::<Result<_>>()?;
        let finale: Vec<Step> = self.finale.iter().map(&step_of).collect::<Result<_>>()?;

        let measurement = self.build_measurement(&h_system, &s_label, s_dim, prelude.is_empty())?;

        let feedback = self
            .feedback
            .build(&s_label, s_dim, &baths, measurement.num_outcomes())?;

        let roof = match &self.roof {
            Some(r) => RoofBudget::new(r.ensemble_size, r.restarts, r.seed),
            None => RoofBudget::new(4, 64, 0),
        };

        Ok(ThermoScenario {
            system_label: s_label,
            h_system,
            temperature: self.system.temperature,
            baths,
            prelude,
            measurement,
            feedback,
            finale,
            final_temperature: match self.final_temperature {
                FinalTempConfig::Same => FinalTemperature::SameAsInitial,
                FinalTempConfig::Fixed(t) => FinalTemperature::Fixed(t),
                FinalTempConfig::MatchSpectrum => FinalTemperature::MatchSpectrum,
            },
            roof,
        })
    }

    fn build_measurement(
        &self,
        h_system: &CMat,
        s_label: &str,
        s_dim: usize,
        prelude_empty: bool,
    ) -> Result<MeasurementModel> {
        let p_label = "P";
        let u_sp: UnitaryOp = match (&self.measurement.preset, &self.measurement.interaction) {
            (Some(MeasurementPreset::Cnot), None) => {
                return match &self.measurement.probe_basis {
                    ProbeBasisConfig::Computational => {
                        scenarios::cnot_measurement(s_label, p_label)
                    }
                    _ => Err(Error::Invalid(
                        "the cnot preset uses the computational probe basis".into(),
                    )),
                };
            }
            (Some(MeasurementPreset::Weak(eta)), None) => {
                return match &self.measurement.probe_basis {
                    ProbeBasisConfig::Computational => {
                        qithermo::thermo::weak_measurement(*eta, s_label, p_label)
                    }
                    _ => Err(Error::Invalid(
                        "the weak preset uses the computational probe basis".into(),
                    )),
                };
            }
            (Some(MeasurementPreset::Haar(seed)), None) => {
                let layout = SystemLayout::new(vec![(s_label, s_dim), (p_label, 2)])?;
                let mut rng = qithermo::haar::rng_for(*seed, 0);
                UnitaryOp::new(layout, qithermo::haar::random_unitary(2 * s_dim, &mut rng))?
            }
            (None, Some(m)) => {
                let layout = SystemLayout::new(vec![(s_label, s_dim), (p_label, 2)])?;
                UnitaryOp::new(layout, parse_matrix(m)?)?
            }
            _ => {
                return Err(Error::Invalid(
                    "measurement needs exactly one of `preset` or `interaction`".into(),
                ))
            }
        };
        let probe_init = PureState::basis(SystemLayout::single(p_label, 2), &[0])?;
        let projectors = match &self.measurement.probe_basis {
            ProbeBasisConfig::Computational => scenarios::computational_projectors(2),
            ProbeBasisConfig::Haar(seed) => {
                let mut rng = qithermo::haar::rng_for(*seed, 1);
                scenarios::basis_projectors(&qithermo::haar::random_unitary(2, &mut rng))
            }
            ProbeBasisConfig::Explicit(mats) => {
                mats.iter().map(parse_matrix).collect::<Result<Vec<_>>>()?
            }
            ProbeBasisConfig::AppendixOptimal => {
                if s_dim != 2 {
                    return Err(Error::Invalid(
                        "the optimal probe basis needs a two-level system".into(),
                    ));
                }
                if !prelude_empty {
                    return Err(Error::Invalid(
                        "the optimal probe basis is built from the canonical prepared state; \
                         use an empty prelude"
                            .into(),
                    ));
                }
                let s_layout = SystemLayout::single(s_label, 2);
                let rho_s = qithermo::thermo::canonical_state(
                    &s_layout,
                    h_system,
                    self.system.temperature,
                )?;
                let psi_sr = rho_s.purify("R1")?;
                let attached = probe_init.tensor(&psi_sr)?;
                let psi_psr = u_sp.apply(&attached)?.permuted(&[p_label, s_label, "R1"])?;
                let om = qithermo::measurement::optimal_probe_measurement(&psi_psr)?;
                om.operators.to_vec()
            }
        };
        MeasurementModel::new(probe_init, u_sp, projectors)
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackConfig {
    Identity,
    /// Flip the system conditioned on the excited outcome (two outcomes).
    FlipExcited,
    Haar(u64),
    Explicit(Vec<ExplicitFeedback>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitFeedback {
    pub labels: Vec<String>,
    pub matrix: MatrixLiteral,
}

impl FeedbackConfig {
    fn build(
        &self,
        s_label: &str,
        s_dim: usize,
        baths: &[BathSpec],
        outcomes: usize,
    ) -> Result<Vec<UnitaryOp>> {
        let s_layout = SystemLayout::single(s_label, s_dim);
        match self {
            FeedbackConfig::Identity => Ok((0..outcomes)
                .map(|_| UnitaryOp::identity(s_layout.clone()))
                .collect()),
            FeedbackConfig::FlipExcited => {
                if outcomes != 2 || s_dim != 2 {
                    return Err(Error::Invalid(
                        "flip-excited feedback needs a qubit system and two outcomes".into(),
                    ));
                }
                let x = CMat::from_row_slice(
                    2,
                    2,
                    &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
                );
                Ok(vec![
                    UnitaryOp::identity(s_layout.clone()),
                    UnitaryOp::new(s_layout, x)?,
                ])
            }
            FeedbackConfig::Haar(seed) => {
                let mut rng = qithermo::haar::rng_for(*seed, 2);
                Ok((0..outcomes)
                    .map(|_| {
                        UnitaryOp::new(
                            s_layout.clone(),
                            qithermo::haar::random_unitary(s_dim, &mut rng),
                        )
                        .expect("haar matrix is unitary")
                    })
                    .collect())
            }
            FeedbackConfig::Explicit(list) => {
                if list.len() != outcomes {
                    return Err(Error::Invalid(format!(
                        "{} feedback entries for {} outcomes",
                        list.len(),
                        outcomes
                    )));
                }
                list.iter()
                    .map(|f| {
                        let mut factors = Vec::new();
                        for l in &f.labels {
                            let dim = if l == s_label {
                                s_dim
                            } else {
                                baths
                                    .iter()
                                    .find(|b| b.label == *l)
                                    .map(|b| b.dim())
                                    .ok_or_else(|| Error::UnknownLabel(l.clone()))?
                            };
                            factors.push((l.clone(), dim));
                        }
                        let layout = SystemLayout::new(factors)?;
                        UnitaryOp::new(layout, parse_matrix(&f.matrix)?)
                    })
                    .collect()
            }
        }
    }
}

fn parse_hermitian(lit: &MatrixLiteral, what: &str) -> Result<CMat> {
    let m = parse_matrix(lit)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Invalid(format!("{what} must be square")));
    }
    let defect = qithermo::linalg::hermiticity_defect(&m);
    if defect > qithermo::tol::EPS_HERM * (1.0 + m.norm()) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(m)
}
