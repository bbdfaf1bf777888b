use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use thiserror::Error;

use elk_core::oracles::{boltzmann_profile, debye_length, heat_kernel, reaction_equilibrium_constant, OracleSpec};

use crate::auditlog::{read_audit_log, AuditLogError, AuditRecord};
use crate::run::{read_metadata, Metadata, AUDIT_FILE};
use crate::snapshot::{read_snapshot, Snapshot, SnapshotError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{0} is not a run directory (no metadata.json)")]
    Missing(String),
    #[error("cannot read run metadata: {0}")]
    Metadata(std::io::Error),
    #[error("snapshot {file}: {source}")]
    Snapshot { file: String, source: SnapshotError },
    #[error(transparent)]
    AuditLog(#[from] AuditLogError),
    #[error("run has no snapshots")]
    NoSnapshots,
    #[error("oracle comparison: {0}")]
    Oracle(String),
}

/// Result of comparing the final state with a declared oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub kind: String,
    pub expected: f64,
    pub observed: f64,
    pub relative_error: f64,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub meta: Metadata,
    pub audit: Vec<AuditRecord>,
    pub oracle: Option<OracleComparison>,
}

/// Least-squares decay length of ln|φ| against distance over [λ, 4λ] from the left wall.
pub fn fit_decay_length(x: &[f64], phi: &[f64], lambda: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(phi)
        .filter(|(xi, p)| **xi >= lambda && **xi <= 4.0 * lambda && p.abs() > 0.0)
        .map(|(xi, p)| (*xi, p.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

fn species_index(meta: &Metadata, name: Option<&String>) -> Result<usize, ReportError> {
    match name {
        None => Ok(0),
        Some(n) => meta
            .scenario
            .species
            .iter()
            .position(|s| &s.name == n)
            .ok_or_else(|| ReportError::Oracle(format!("unknown species '{}'", n))),
    }
}

fn compare(meta: &Metadata, last: &Snapshot, time: f64) -> Result<Option<OracleComparison>, ReportError> {
    let Some(decl) = &meta.scenario.oracle else {
        return Ok(None);
    };
    let c = meta.scenario.constants.resolve();
    let l = species_index(meta, decl.species.as_ref())?;
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    let cmp = match &decl.spec {
        OracleSpec::DebyeLayer {
            zeta,
            relative_permittivity,
            temperature,
            valencies,
            number_densities,
        } => {
            let lambda = debye_length(*relative_permittivity, *temperature, valencies, number_densities, &c);
            let fit = fit_decay_length(&last.x, &last.phi, lambda)
                .ok_or_else(|| ReportError::Oracle("potential does not decay over [λ, 4λ]".into()))?;
            let scaled = (c.elementary_charge * zeta / (c.boltzmann * temperature)).abs();
            OracleComparison {
                kind: "debye_layer".into(),
                expected: lambda,
                observed: fit,
                relative_error: rel(fit, lambda),
                note: format!("fitted λ_D of ln|φ| over [λ, 4λ], eζ/k_BT = {:.3}", scaled),
            }
        }
        OracleSpec::Boltzmann {
            valency,
            temperature,
            y_inf,
        } => {
            let expect = boltzmann_profile(&last.phi, *valency, *temperature, *y_inf, &c);
            let (worst, k) = expect
                .iter()
                .zip(&last.y[l])
                .enumerate()
                .map(|(k, (e, o))| (rel(*o, *e), k))
                .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
            OracleComparison {
                kind: "boltzmann".into(),
                expected: expect[k],
                observed: last.y[l][k],
                relative_error: worst,
                note: format!("worst cell {} of species {}", k, l),
            }
        }
        OracleSpec::HeatKernel {
            diffusivity,
            sigma0,
            mass,
            center,
        } => {
            let expect = heat_kernel(&last.x, time, *diffusivity, *sigma0, *mass, *center)
                .map_err(|e| ReportError::Oracle(e.to_string()))?;
            let observed: Vec<f64> = last.rho.iter().zip(&last.y[l]).map(|(r, y)| r * y).collect();
            let num: f64 = expect.iter().zip(&observed).map(|(e, o)| (e - o).powi(2)).sum();
            let den: f64 = expect.iter().map(|e| e * e).sum();
            let peak = observed.iter().cloned().fold(f64::MIN, f64::max);
            OracleComparison {
                kind: "heat_kernel".into(),
                expected: expect.iter().cloned().fold(f64::MIN, f64::max),
                observed: peak,
                relative_error: (num / den).sqrt(),
                note: format!("relative L2 error of ρ_{} at t = {:e}; values are peaks", l, time),
            }
        }
        OracleSpec::ReactionEquilibrium { equilibrium_constant } => {
            let eq = reaction_equilibrium_constant(*equilibrium_constant).map_err(|e| ReportError::Oracle(e.to_string()))?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (ya, yb) = (mean(&last.y[l]), mean(&last.y[l + 1]));
            let share = ya / (ya + yb);
            let expected = eq.y[0] / (eq.y[0] + eq.y[1]);
            OracleComparison {
                kind: "reaction_equilibrium".into(),
                expected,
                observed: share,
                relative_error: rel(share, expected),
                note: format!("share of species {} in the pair ({}, {})", l, l, l + 1),
            }
        }
    };
    Ok(Some(cmp))
}

pub fn report(dir: &Path) -> Result<Report, ReportError> {
    if !dir.join("metadata.json").is_file() {
        return Err(ReportError::Missing(dir.display().to_string()));
    }
    let meta = read_metadata(dir).map_err(ReportError::Metadata)?;
    let audit = match File::open(dir.join(AUDIT_FILE)) {
        Ok(f) => read_audit_log(BufReader::new(f))?,
        Err(_) => Vec::new(),
    };
    let oracle = match meta.snapshots.last() {
        Some(entry) => {
            let f = File::open(dir.join(&entry.file)).map_err(|e| ReportError::Snapshot {
                file: entry.file.clone(),
                source: e.into(),
            })?;
            let last = read_snapshot(BufReader::new(f)).map_err(|source| ReportError::Snapshot {
                file: entry.file.clone(),
                source,
            })?;
            compare(&meta, &last, entry.time)?
        }
        None if meta.scenario.oracle.is_some() => return Err(ReportError::NoSnapshots),
        None => None,
    };
    Ok(Report { meta, audit, oracle })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.meta;
        let mut s = String::new();
        writeln!(s, "run '{}' ({}), status {:?}", m.scenario.name, m.version, m.status)?;
        if let Some(e) = &m.error {
            writeln!(s, "  error: {}", e)?;
        }
        writeln!(
            s,
            "  {} steps to t = {:e}, {} rejected sub-steps, {} snapshots, {:.2} s wall",
            m.steps,
            m.final_time,
            m.rejections,
            m.snapshots.len(),
            m.wall_time_seconds
        )?;
        if let Some(c) = m.steady_converged {
            writeln!(s, "  steady state reached: {}", c)?;
        }
        if let Some(r) = &m.regime {
            writeln!(
                s,
                "  regime {:?}: δ_V = {:e}, δ_W = {:e}, α = {}, δ_V/δ_W = {:e}",
                r.regime,
                r.delta_v,
                r.delta_w,
                r.alpha,
                r.velocity_ratio()
            )?;
        }
        for w in &m.warnings {
            writeln!(s, "  warning {}", w)?;
        }

        writeln!(s, "conservation (max relative drift per step)")?;
        let c = &m.conservation;
        writeln!(s, "  species     {:e}", c.max_species)?;
        writeln!(s, "  total mass  {:e}", c.max_total_mass)?;
        writeln!(s, "  charge      {:e}", c.max_charge)?;
        if c.open_system {
            writeln!(s, "  (open boundaries: drifts include boundary exchange)")?;
        }

        writeln!(s, "entropy production")?;
        if self.audit.is_empty() {
            writeln!(s, "  no audit records")?;
        } else {
            let min = self.audit.iter().map(|r| r.min_total).fold(f64::INFINITY, f64::min);
            let max = self.audit.iter().map(|r| r.max_total).fold(f64::NEG_INFINITY, f64::max);
            let integ_min = self.audit.iter().map(|r| r.integrated.total).fold(f64::INFINITY, f64::min);
            let integ_max = self.audit.iter().map(|r| r.integrated.total).fold(f64::NEG_INFINITY, f64::max);
            let violations: usize = self.audit.iter().map(|r| r.violations.len()).sum();
            let id = self
                .audit
                .iter()
                .map(|r| r.max_chemical_form_error.max(r.max_split_error).max(r.max_flux_form_error))
                .fold(0.0, f64::max);
            writeln!(s, "  {} audited steps, {} violations", self.audit.len(), violations)?;
            writeln!(s, "  cell min {:e}, cell max {:e}", min, max)?;
            writeln!(s, "  integrated min {:e}, max {:e}", integ_min, integ_max)?;
            writeln!(s, "  largest formulation mismatch {:e}", id)?;
        }

        if let Some(o) = &self.oracle {
            writeln!(s, "oracle {}", o.kind)?;
            writeln!(s, "  expected {:e}, observed {:e}, relative error {:e}", o.expected, o.observed, o.relative_error)?;
            writeln!(s, "  {}", o.note)?;
        }
        f.write_str(&s)
    }
}
