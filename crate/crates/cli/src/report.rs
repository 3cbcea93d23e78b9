//! Machine-readable verification reports: one JSON document per run, plus an
//! optional flat CSV of per-trial slacks.

use serde::Serialize;

use qithermo::thermo::{ProcessLedger, SlackReport, SzilardLedger};

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool_version: &'static str,
    pub seed: Option<u64>,
    pub generated_unix_time: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub szilard: Option<SzilardSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepReport>,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            generated_unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            scenario: None,
            szilard: None,
            sweeps: Vec::new(),
            violations: Vec::new(),
        }
    }

    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat per-trial slack rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "check,trial,slack_entanglement,slack_qc,slack_conventional,lemma1_margin,detail\n",
        );
        if let Some(s) = &self.scenario {
            out.push_str(&format!(
                "scenario,0,{},{},{},{},{}\n",
                s.slack_entanglement, s.slack_qc, s.slack_conventional, s.lemma1_margin, s.i_e
            ));
        }
        if let Some(s) = &self.szilard {
            out.push_str(&format!(
                "szilard,0,{},{},{},{},{}\n",
                s.slack_entanglement, s.slack_qc, s.slack_conventional, s.lemma1_margin, s.w_ext
            ));
        }
        for sweep in &self.sweeps {
            for row in &sweep.per_trial {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    sweep.check,
                    row.trial,
                    row.slack_entanglement,
                    row.slack_qc,
                    row.slack_conventional,
                    row.lemma1_margin,
                    row.detail
                ));
            }
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub temperature: f64,
    pub final_temperature: Option<f64>,
    pub i_e: f64,
    pub i_qc: f64,
    pub i_qc_residual: f64,
    pub ef_route: &'static str,
    pub w_ext: f64,
    /// Work in units of k_B T (T the preparation temperature).
    pub w_ext_per_kt: f64,
    pub heats: Vec<f64>,
    pub entropy_initial: f64,
    pub entropy_outcome_avg: f64,
    pub entropy_after_feedback: f64,
    pub slack_entanglement: f64,
    pub slack_qc: f64,
    pub slack_conventional: f64,
    pub slack_isothermal_work: Option<f64>,
    pub lemma1_margin: f64,
    pub energy_residual: f64,
    pub equilibrium_distance: f64,
    pub probabilities: Vec<f64>,
}

impl ScenarioSummary {
    pub fn from_ledger(ledger: &ProcessLedger, slacks: &SlackReport) -> Self {
        Self {
            temperature: ledger.temperature,
            final_temperature: ledger.final_temperature,
            i_e: ledger.i_e,
            i_qc: ledger.i_qc,
            i_qc_residual: ledger.i_qc_residual,
            ef_route: ledger.ef_route,
            w_ext: ledger.w_ext,
            w_ext_per_kt: ledger.w_ext / ledger.temperature,
            heats: ledger.heats.clone(),
            entropy_initial: ledger.entropy_i,
            entropy_outcome_avg: ledger.avg_outcome_entropy,
            entropy_after_feedback: ledger.entropy_3,
            slack_entanglement: slacks.entanglement_bound,
            slack_qc: slacks.qc_bound,
            slack_conventional: slacks.conventional,
            slack_isothermal_work: slacks.isothermal_work,
            lemma1_margin: slacks.lemma1_margin,
            energy_residual: slacks.energy_residual,
            equilibrium_distance: ledger.equilibrium_distance,
            probabilities: ledger.probabilities.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SzilardSummary {
    pub temperature: f64,
    pub steps: usize,
    pub unit_dim: usize,
    pub w_ext: f64,
    /// Work in units of k_B T.
    pub w_ext_per_kt: f64,
    pub w_target: f64,
    pub relative_deficit: f64,
    pub i_e: f64,
    pub i_qc: f64,
    pub slack_entanglement: f64,
    pub slack_qc: f64,
    pub slack_conventional: f64,
    pub slack_isothermal_work: f64,
    pub lemma1_margin: f64,
    pub energy_residual: f64,
    pub equilibrium_distance: f64,
}

impl SzilardSummary {
    pub fn from_ledger(l: &SzilardLedger) -> Self {
        Self {
            temperature: l.params.temperature,
            steps: l.params.steps,
            unit_dim: l.params.unit_dim,
            w_ext: l.w_ext,
            w_ext_per_kt: l.w_ext / l.params.temperature,
            w_target: l.w_target,
            relative_deficit: (l.w_target - l.w_ext) / l.w_target,
            i_e: l.i_e,
            i_qc: l.i_qc,
            slack_entanglement: l.slack_entanglement,
            slack_qc: l.slack_qc,
            slack_conventional: l.slack_conventional,
            slack_isothermal_work: l.slack_isothermal_work,
            lemma1_margin: l.i_e - l.i_qc,
            energy_residual: l.energy_residual,
            equilibrium_distance: l.equilibrium_distance,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub check: String,
    pub trials: usize,
    pub seed: u64,
    pub aggregates: Aggregates,
    pub per_trial: Vec<TrialRow>,
}

#[derive(Debug, Serialize, Default)]
pub struct Aggregates {
    pub min_slack_entanglement: f64,
    pub min_slack_qc: f64,
    pub min_lemma1_margin: f64,
    pub max_residual: f64,
    /// Largest absolute deviation from the check's target quantity (exact
    /// meaning depends on the check; see the per-trial detail column).
    pub max_detail: f64,
}

#[derive(Debug, Serialize, Clone)]
pub struct TrialRow {
    pub trial: usize,
    pub slack_entanglement: f64,
    pub slack_qc: f64,
    pub slack_conventional: f64,
    pub lemma1_margin: f64,
    /// Check-specific figure (identity residual, entanglement mismatch, ...).
    pub detail: f64,
}

#[derive(Debug, Serialize)]
pub struct Violation {
    pub check: String,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub message: String,
    /// Everything needed to replay the failure.
    pub replay: serde_json::Value,
}
