use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use elk_core::audit::{CellBudget, EntropyBudget, StepDrift};

#[derive(Debug, Error)]
pub enum AuditLogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("audit log line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Violation {
    pub cell: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    pub species: Vec<f64>,
    pub total_mass: f64,
    pub total_charge: f64,
}

impl From<&StepDrift> for Drift {
    fn from(d: &StepDrift) -> Self {
        Drift {
            species: d.species.clone(),
            total_mass: d.total_mass,
            total_charge: d.total_charge,
        }
    }
}

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRecord {
    pub step: usize,
    pub time: f64,
    pub integrated: CellBudget,
    pub min_total: f64,
    pub max_total: f64,
    pub max_chemical_form_error: f64,
    pub max_split_error: f64,
    pub max_flux_form_error: f64,
    pub productive_cells: usize,
    pub violations: Vec<Violation>,
    /// Relative change since the previous record's step, absent on the first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Drift>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<CellBudget>>,
}

impl AuditRecord {
    pub fn new(step: usize, time: f64, budget: &EntropyBudget, eps: f64, per_cell: bool) -> Self {
        // cells whose whole budget is roundoff are measured against the largest cell
        let floor = 1e-12 * budget.cells.iter().map(|c| c.scale).fold(0.0, f64::max);
        let fold = |f: fn(&CellBudget) -> f64| {
            budget
                .cells
                .iter()
                .map(|c| {
                    let d = f(c).abs();
                    if c.scale.max(floor) > 0.0 {
                        d / c.scale.max(floor)
                    } else {
                        d
                    }
                })
                .fold(0.0, f64::max)
        };
        AuditRecord {
            step,
            time,
            integrated: budget.integrated.clone(),
            min_total: budget.min_total(),
            max_total: budget.max_total(),
            max_chemical_form_error: fold(|c| c.total - c.total_chemical),
            max_split_error: fold(|c| c.pure_total + c.mix_total + c.joule - c.total),
            max_flux_form_error: fold(|c| c.total - c.total_flux_form),
            productive_cells: budget.productive_cells(),
            violations: budget
                .violations(eps)
                .into_iter()
                .map(|(cell, message)| Violation { cell, message })
                .collect(),
            drift: None,
            cells: per_cell.then(|| budget.cells.clone()),
        }
    }
}

pub struct AuditLog<W: Write> {
    out: W,
}

impl<W: Write> AuditLog<W> {
    pub fn new(out: W) -> Self {
        AuditLog { out }
    }

    pub fn append(&mut self, r: &AuditRecord) -> Result<(), AuditLogError> {
        serde_json::to_writer(&mut self.out, r).map_err(|e| AuditLogError::Parse {
            line: r.step,
            message: e.to_string(),
        })?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), AuditLogError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a JSON-lines audit log; blank lines are skipped.
pub fn read_audit_log<R: BufRead>(input: R) -> Result<Vec<AuditRecord>, AuditLogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| AuditLogError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cell = CellBudget {
            total: 1.5,
            heat: -0.25,
            scale: 2.0,
            ..CellBudget::default()
        };
        let b = EntropyBudget {
            cells: vec![cell.clone(), CellBudget::default()],
            integrated: cell,
        };
        let r = AuditRecord::new(3, 0.1, &b, 1e-12, true);
        assert_eq!(r.violations.len(), 1);
        let mut buf = Vec::new();
        let mut log = AuditLog::new(&mut buf);
        log.append(&r).unwrap();
        log.append(&r).unwrap();
        let back = read_audit_log(buf.as_slice()).unwrap();
        assert_eq!(back, vec![r.clone(), r]);
    }

    #[test]
    fn bad_line_is_located() {
        match read_audit_log("\n{\"step\": 1}\n".as_bytes()) {
            Err(AuditLogError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{:?}", other),
        }
    }
}
