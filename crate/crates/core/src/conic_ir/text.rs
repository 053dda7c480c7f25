//! Line-oriented text form: a header record followed by one record per block,
//! each a single JSON object on its own line.
//!
//! ```text
//! {"record":"header","format":"drccp-cone-program","version":1,"n_vars":2,"sense":"Minimize","objective":{...},"binaries":[1],"names":[[0,"x[0]"]]}
//! {"record":"block","cone":"nonnegative","rows":[{"terms":[[0,1.0]],"constant":-1.0}]}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Cone, ConeProgram, IrError, LinExpr};
use crate::model::Sense;
use crate::scalar::Scalar;

const FORMAT: &str = "drccp-cone-program";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Ir { line: usize, source: IrError },
    #[error("missing header record")]
    MissingHeader,
    #[error("unsupported format {0:?}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
enum Record<T> {
    Header {
        format: String,
        version: u32,
        n_vars: usize,
        sense: Sense,
        objective: LinExpr<T>,
        binaries: Vec<usize>,
        names: Vec<(usize, String)>,
    },
    Block {
        cone: String,
        rows: Vec<LinExpr<T>>,
    },
}

impl<T: Scalar> ConeProgram<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header: Record<T> = Record::Header {
            format: FORMAT.to_string(),
            version: VERSION,
            n_vars: self.n_vars,
            sense: self.sense,
            objective: self.objective.clone(),
            binaries: self.integrality.iter().copied().collect(),
            names: self.variable_names.iter().map(|(&k, v)| (k, v.clone())).collect(),
        };
        out.push_str(&serde_json::to_string(&header).expect("serializable"));
        out.push('\n');
        for b in &self.blocks {
            let rec: Record<T> = Record::Block { cone: b.cone.tag().to_string(), rows: b.rows.clone() };
            out.push_str(&serde_json::to_string(&rec).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let mut prog: Option<ConeProgram<T>> = None;
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record<T> = serde_json::from_str(line).map_err(|source| TextError::Json { line: line_no, source })?;
            match rec {
                Record::Header { format, version, n_vars, sense, objective, binaries, names } => {
                    if format != FORMAT || version != VERSION {
                        return Err(TextError::Format(format!("{format} v{version}")));
                    }
                    let mut p = ConeProgram::new();
                    p.n_vars = n_vars;
                    p.sense = sense;
                    if let Some(v) = objective.max_var().filter(|&v| v >= n_vars) {
                        return Err(TextError::Ir { line: line_no, source: IrError::UnknownVariable { var: v, n_vars } });
                    }
                    p.objective = LinExpr::from_terms(objective.terms, objective.constant);
                    for b in binaries {
                        p.mark_binary(b).map_err(|source| TextError::Ir { line: line_no, source })?;
                    }
                    p.variable_names = names.into_iter().collect();
                    prog = Some(p);
                }
                Record::Block { cone, rows } => {
                    let p = prog.as_mut().ok_or(TextError::MissingHeader)?;
                    let cone = Cone::from_tag(&cone)
                        .ok_or_else(|| TextError::Ir { line: line_no, source: IrError::UnknownCone(cone.clone()) })?;
                    let rows = rows.into_iter().map(|r| LinExpr::from_terms(r.terms, r.constant)).collect();
                    p.add_block(rows, cone).map_err(|source| TextError::Ir { line: line_no, source })?;
                }
            }
        }
        prog.ok_or(TextError::MissingHeader)
    }
}

