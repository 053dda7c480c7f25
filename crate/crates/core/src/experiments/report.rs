use serde::Serialize;

use super::StudyError;

/// Signed relative shortfall `(opt − value) / |opt|` of a maximization; zero when both vanish.
pub fn optimality_gap(opt: f64, value: f64) -> f64 {
    if opt == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(opt - value)
        }
    } else {
        (opt - value) / opt.abs()
    }
}

/// Relative gain `(approx − exact) / exact` of one lower bound over another.
pub fn improvement(exact: f64, approx: f64) -> f64 {
    (approx - exact) / exact
}

/// Linear-interpolation quantile of `values` (the usual "type 7" rule).
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// One solve in a study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub seed: u64,
    pub eps: f64,
    pub delta: f64,
    pub n_samples: usize,
    pub model: String,
    pub objective: Option<f64>,
    pub opt_val: Option<f64>,
    pub gap: Option<f64>,
    pub reliability: Option<f64>,
    pub wall_ms: f64,
    pub status: String,
}

/// Summary of one metric over the seeds of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub cell: String,
    pub mean: f64,
    pub q20: f64,
    pub q80: f64,
}

impl AggregateRow {
    pub fn from_values(cell: String, values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Self { cell, mean, q20: quantile(values, 0.2)?, q80: quantile(values, 0.8)? })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StudyReport {
    /// Free-text notes printed above the tables.
    pub notes: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_text(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, StudyError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| StudyError::Output(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| StudyError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| StudyError::Output(e.to_string()))
}

impl StudyReport {
    fn note_lines(&self) -> String {
        self.notes.iter().map(|n| format!("# {n}\n")).collect()
    }

    /// Per-solve table, notes as leading `#` lines.
    pub fn rows_csv(&self) -> Result<String, StudyError> {
        let body = csv_text(|w| {
            w.write_record([
                "seed", "eps", "delta", "n_samples", "model", "objective", "opt_val", "gap", "reliability", "wall_ms",
                "status",
            ])?;
            for r in &self.rows {
                w.write_record([
                    r.seed.to_string(),
                    r.eps.to_string(),
                    r.delta.to_string(),
                    r.n_samples.to_string(),
                    r.model.clone(),
                    opt(r.objective),
                    opt(r.opt_val),
                    opt(r.gap),
                    opt(r.reliability),
                    r.wall_ms.to_string(),
                    r.status.clone(),
                ])?;
            }
            Ok(())
        })?;
        Ok(self.note_lines() + &body)
    }

    pub fn aggregates_csv(&self) -> Result<String, StudyError> {
        let body = csv_text(|w| {
            w.write_record(["cell", "mean", "q20", "q80"])?;
            for a in &self.aggregates {
                w.write_record([a.cell.clone(), a.mean.to_string(), a.q20.to_string(), a.q80.to_string()])?;
            }
            Ok(())
        })?;
        Ok(self.note_lines() + &body)
    }

    /// One JSON object per line: notes, then rows, then aggregates.
    pub fn to_json_lines(&self) -> Result<String, StudyError> {
        let mut out = String::new();
        let mut push = |v: serde_json::Value| -> Result<(), StudyError> {
            out.push_str(&serde_json::to_string(&v).map_err(|e| StudyError::Output(e.to_string()))?);
            out.push('\n');
            Ok(())
        };
        for n in &self.notes {
            push(serde_json::json!({ "record": "note", "text": n }))?;
        }
        for r in &self.rows {
            let mut v = serde_json::to_value(r).map_err(|e| StudyError::Output(e.to_string()))?;
            v["record"] = "row".into();
            push(v)?;
        }
        for a in &self.aggregates {
            let mut v = serde_json::to_value(a).map_err(|e| StudyError::Output(e.to_string()))?;
            v["record"] = "aggregate".into();
            push(v)?;
        }
        Ok(out)
    }

    /// Finite values of `metric` for rows matching `filter`.
    pub fn values(&self, filter: impl Fn(&ReportRow) -> bool, metric: impl Fn(&ReportRow) -> Option<f64>) -> Vec<f64> {
        self.rows.iter().filter(|r| filter(r)).filter_map(&metric).filter(|v| v.is_finite()).collect()
    }
}
