//! Structured run reports.
//!
//! Every numeric claim a pipeline stage makes lands in one of these types so
//! reports can be serialized (JSON or text) with stable key names and diffed
//! across runs. Serialization is fully deterministic: no timestamps, no map
//! types with unstable order.

use serde::Serialize;
use std::collections::BTreeMap;

/// One key/value entry of measured evidence.
pub type Measurements = BTreeMap<String, serde_json::Value>;

/// A pipeline-stage record: which branch ran and what was measured.
#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub branch: String,
    pub measurements: Measurements,
}

impl StageRecord {
    pub fn new(stage: impl Into<String>, branch: impl Into<String>) -> Self {
        StageRecord {
            stage: stage.into(),
            branch: branch.into(),
            measurements: Measurements::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        self.measurements
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }
}

/// Evidence backing a rank claim.
#[derive(Clone, Debug, Serialize)]
pub struct RankEvidence {
    /// "exact" for Q/F_p elimination, "svd" for the real path.
    pub method: String,
    pub rows: usize,
    pub ambient_dim: usize,
    pub rank: usize,
    /// Relative cutoff used; 0 for exact fields.
    pub tolerance: f64,
}

/// Final certified output of a pipeline run.
#[derive(Clone, Debug, Serialize)]
pub struct CertifiedReport {
    /// Measured dimension of the input (exact or tolerance-backed rank).
    pub d_measured: usize,
    /// The certified upper bound established by the run.
    pub dimension_bound: usize,
    pub stages: Vec<StageRecord>,
    pub rank_evidence: Vec<RankEvidence>,
    pub seed: u64,
    pub parameters: Measurements,
}

impl CertifiedReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("d_measured {}\n", self.d_measured));
        out.push_str(&format!("dimension_bound {}\n", self.dimension_bound));
        out.push_str(&format!("seed {}\n", self.seed));
        for (k, v) in &self.parameters {
            out.push_str(&format!("param {k} {v}\n"));
        }
        for s in &self.stages {
            out.push_str(&format!("stage {} branch {}\n", s.stage, s.branch));
            for (k, v) in &s.measurements {
                out.push_str(&format!("  {k} {v}\n"));
            }
        }
        for e in &self.rank_evidence {
            out.push_str(&format!(
                "rank {} rows {} dim {} method {} tol {}\n",
                e.rank, e.rows, e.ambient_dim, e.method, e.tolerance
            ));
        }
        out
    }
}
