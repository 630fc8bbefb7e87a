//! The CSV row schema shared by every command.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use aoii_core::sim::Estimate;
use aoii_core::{ActuationPolicy, ChannelParams, SamplingPolicy, SourceParams};

use crate::error::CliError;

pub const HEADER: [&str; 15] = [
    "policy", "N", "q", "ps", "eta", "mu", "param1", "param2", "pc1", "pc2", "analytic",
    "sim_mean", "sim_ci95", "oracle", "source",
];

/// One result. Unset fields are written as empty cells; `source` lists which
/// of the analytic, sim and oracle columns are populated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub policy: String,
    pub n: usize,
    pub q: f64,
    pub ps: f64,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub param1: Option<f64>,
    pub param2: Option<f64>,
    pub pc1: Option<f64>,
    pub pc2: Option<f64>,
    pub analytic: Option<f64>,
    pub sim: Option<Estimate>,
    pub oracle: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    pub fn new(policy: &SamplingPolicy, src: &SourceParams, ch: &ChannelParams) -> Self {
        let (param1, param2) = policy.params();
        Self {
            policy: policy.kind().name().to_string(),
            n: src.n(),
            q: src.q(),
            ps: ch.p_s(),
            param1: Some(param1),
            param2,
            ..Self::default()
        }
    }

    pub fn with_actuation(mut self, act: &ActuationPolicy) -> Self {
        self.pc1 = Some(act.p_c1);
        self.pc2 = Some(act.p_c2);
        self
    }

    pub fn source(&self) -> String {
        [
            (self.analytic.is_some(), "analytic"),
            (self.sim.is_some(), "sim"),
            (self.oracle.is_some(), "oracle"),
        ]
        .iter()
        .filter(|(set, _)| *set)
        .map(|(_, name)| *name)
        .collect::<Vec<_>>()
        .join("+")
    }

    pub fn record(&self) -> [String; 15] {
        [
            self.policy.clone(),
            self.n.to_string(),
            self.q.to_string(),
            self.ps.to_string(),
            cell(self.eta),
            cell(self.mu),
            cell(self.param1),
            cell(self.param2),
            cell(self.pc1),
            cell(self.pc2),
            cell(self.analytic),
            cell(self.sim.map(|e| e.mean)),
            cell(self.sim.map(|e| e.half_width)),
            cell(self.oracle),
            self.source(),
        ]
    }
}

pub fn write_csv<W: Write>(w: W, rows: &[Row]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes to `out` when given, standard output otherwise.
pub fn emit_csv(rows: &[Row], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::invalid(format!("output {}: {e}", path.display())))?;
            write_csv(file, rows)
        }
        None => write_csv(io::stdout().lock(), rows),
    }
}

/// Writes `text` to `out` when given, standard output otherwise.
pub fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::invalid(format!("output {}: {e}", path.display()))),
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
