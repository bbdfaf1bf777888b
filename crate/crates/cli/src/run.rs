use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use elk_core::audit::{audit_state, conservation_report, AuditContext, AuditError};
use elk_core::scaling::{Regime, ScalingRegime};
use elk_core::solvers::{advance, poisson_solve, steady_residual, update_closure, Problem, SolverError};
use elk_core::state::MixtureState;

use crate::auditlog::{AuditLog, AuditLogError, AuditRecord, Drift};
use crate::scenario::{Issue, Prepared, Scenario};
use crate::snapshot::{file_name, write_snapshot, SnapshotError};

pub const METADATA_FILE: &str = "metadata.json";
pub const AUDIT_FILE: &str = "audit.jsonl";

/// Version string in `git describe` style when built from a checkout.
pub fn version() -> String {
    match option_env!("ELK_GIT_DESCRIBE") {
        Some(d) if !d.is_empty() => format!("{}-{}", env!("CARGO_PKG_VERSION"), d),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub strict_audit: bool,
    pub force: bool,
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scaling regime is {0:?}; the electrostatic model does not apply (use --force to run anyway)")]
    Refused(Regime),
    #[error("solver failure at step {step}, t = {time:e}: {source}")]
    Solver {
        step: usize,
        time: f64,
        source: SolverError,
    },
    #[error("audit failed at step {step}: {source}")]
    Audit { step: usize, source: AuditError },
    #[error("{0} entropy audit violation(s), first at step {1}: {2}")]
    Violation(usize, usize, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    AuditLog(#[from] AuditLogError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Refused(_) => 1,
            RunError::Solver { .. } | RunError::Audit { .. } => 2,
            RunError::Violation(..) => 3,
            RunError::Io(_) | RunError::Snapshot(_) | RunError::AuditLog(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservationSummary {
    pub max_species: f64,
    pub max_total_mass: f64,
    pub max_charge: f64,
    pub open_system: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub records: usize,
    pub violations: usize,
    pub min_total: f64,
    pub max_total: f64,
    pub max_chemical_form_error: f64,
    pub max_split_error: f64,
    pub max_flux_form_error: f64,
}

impl Default for AuditSummary {
    fn default() -> Self {
        AuditSummary {
            records: 0,
            violations: 0,
            min_total: f64::MAX,
            max_total: f64::MIN,
            max_chemical_form_error: 0.0,
            max_split_error: 0.0,
            max_flux_form_error: 0.0,
        }
    }
}

impl AuditSummary {
    fn add(&mut self, r: &AuditRecord) {
        self.records += 1;
        self.violations += r.violations.len();
        self.min_total = self.min_total.min(r.min_total);
        self.max_total = self.max_total.max(r.max_total);
        self.max_chemical_form_error = self.max_chemical_form_error.max(r.max_chemical_form_error);
        self.max_split_error = self.max_split_error.max(r.max_split_error);
        self.max_flux_form_error = self.max_flux_form_error.max(r.max_flux_form_error);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    SolverFailure,
    AuditViolation,
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub scenario: Scenario,
    pub regime: Option<ScalingRegime>,
    pub warnings: Vec<Issue>,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub steps: usize,
    pub final_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_converged: Option<bool>,
    pub rejections: usize,
    pub snapshots: Vec<SnapshotEntry>,
    pub conservation: ConservationSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSummary>,
}

pub fn read_metadata(dir: &Path) -> std::io::Result<Metadata> {
    let text = fs::read_to_string(dir.join(METADATA_FILE))?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

struct Runner<'a> {
    scenario: &'a Scenario,
    problem: &'a Problem,
    out: &'a Path,
    meta: Metadata,
    audit_log: Option<AuditLog<BufWriter<File>>>,
    last_audited: Option<MixtureState>,
    strict: bool,
}

impl Runner<'_> {
    fn snapshot(&mut self, state: &MixtureState, step: usize, time: f64) -> Result<(), RunError> {
        let name = file_name(self.meta.snapshots.len());
        let f = BufWriter::new(File::create(self.out.join(&name))?);
        write_snapshot(f, state, &self.problem.mixture.species, &self.problem.constants)?;
        self.meta.snapshots.push(SnapshotEntry { file: name, step, time });
        Ok(())
    }

    fn audit(&mut self, state: &MixtureState, step: usize, time: f64) -> Result<(), RunError> {
        let Some(log) = self.audit_log.as_mut() else {
            return Ok(());
        };
        let ctx = AuditContext {
            mixture: &self.problem.mixture,
            material: &self.problem.material,
            constants: &self.problem.constants,
        };
        let spec = &self.scenario.audit;
        let budget = audit_state(state, &ctx, self.problem.boundaries.is_periodic())
            .map_err(|source| RunError::Audit { step, source })?;
        let mut record = AuditRecord::new(step, time, &budget, spec.eps, spec.per_cell);
        if let Some(prev) = &self.last_audited {
            let rep = conservation_report(
                &[prev.clone(), state.clone()],
                &self.problem.mixture,
                &self.problem.constants,
                self.problem.boundaries.is_closed(),
            );
            record.drift = rep.steps.first().map(Drift::from);
        }
        log.append(&record)?;
        self.meta.audit.get_or_insert_with(AuditSummary::default).add(&record);
        self.last_audited = Some(state.clone());
        if let Some(v) = record.violations.first() {
            let msg = format!("cell {}: {}", v.cell, v.message);
            warn!("entropy audit at step {}: {}", step, msg);
            if self.strict {
                return Err(RunError::Violation(record.violations.len(), step, msg));
            }
        }
        Ok(())
    }

    fn track(&mut self, prev: &MixtureState, next: &MixtureState) {
        let rep = conservation_report(
            &[prev.clone(), next.clone()],
            &self.problem.mixture,
            &self.problem.constants,
            self.problem.boundaries.is_closed(),
        );
        let c = &mut self.meta.conservation;
        c.max_species = c.max_species.max(rep.max_species);
        c.max_total_mass = c.max_total_mass.max(rep.max_total_mass);
        c.max_charge = c.max_charge.max(rep.max_charge);
        c.open_system = rep.open_system;
    }

    fn time_loop(&mut self, initial: MixtureState) -> Result<(), RunError> {
        let n = &self.problem.numerics;
        let audit_every = self.scenario.audit.every;
        let out_every = self.scenario.output.every;
        let steady = self.scenario.steady;
        let mut state = initial;
        let mut time = 0.0;
        let mut step = 0;
        let mut last_written = 0;
        let mut last_audited = 0;
        self.snapshot(&state, 0, 0.0)?;
        self.audit(&state, 0, 0.0)?;
        loop {
            if step >= n.max_steps || (!steady && time >= n.end_time * (1.0 - 1e-12)) {
                break;
            }
            let dt = if steady { n.dt } else { n.dt.min(n.end_time - time) };
            let (next, stats) = advance(&state, dt, self.problem).map_err(|source| RunError::Solver { step, time, source })?;
            step += 1;
            time += dt;
            self.meta.rejections += stats.rejections;
            self.track(&state, &next);
            let residual = steady_residual(&state, &next, dt, self.problem);
            state = next;
            let done = steady && residual <= n.steady_tol;
            if step % audit_every == 0 {
                self.audit(&state, step, time)?;
                last_audited = step;
            }
            if step % out_every == 0 {
                self.snapshot(&state, step, time)?;
                last_written = step;
            }
            if done {
                self.meta.steady_converged = Some(true);
                break;
            }
        }
        if steady && self.meta.steady_converged.is_none() {
            warn!("steady state not reached in {} steps", n.max_steps);
            self.meta.steady_converged = Some(false);
        }
        if last_audited != step {
            self.audit(&state, step, time)?;
        }
        if last_written != step {
            self.snapshot(&state, step, time)?;
        }
        self.meta.steps = step;
        self.meta.final_time = time;
        Ok(())
    }
}

/// Potential consistent with the initial charge and the closure fields for it.
pub fn initialize(state: &MixtureState, problem: &Problem) -> Result<MixtureState, SolverError> {
    let mut s = state.clone();
    let theta = problem.porosity();
    let rho_e: Vec<f64> = s
        .charge_density(&problem.mixture.species, &problem.constants)
        .iter()
        .map(|q| theta * q)
        .collect();
    s.phi = poisson_solve(&s.grid, &rho_e, &problem.permittivity, &problem.boundaries.potential, &problem.constants)?;
    update_closure(&mut s, problem)?;
    Ok(s)
}

/// Runs the scenario, writing snapshots, the audit log and metadata into `opts.out`.
pub fn run(scenario: &Scenario, prepared: &Prepared, opts: &RunOptions) -> Result<Metadata, RunError> {
    let started = Instant::now();
    let mut meta = Metadata {
        version: version(),
        status: RunStatus::Completed,
        error: None,
        scenario: scenario.clone(),
        regime: prepared.regime,
        warnings: prepared.warnings.clone(),
        wall_time_seconds: 0.0,
        threads: rayon::current_num_threads(),
        steps: 0,
        final_time: 0.0,
        steady_converged: None,
        rejections: 0,
        snapshots: Vec::new(),
        conservation: ConservationSummary {
            open_system: !prepared.problem.boundaries.is_closed(),
            ..Default::default()
        },
        audit: None,
    };
    for w in &prepared.warnings {
        warn!("{}", w);
    }
    fs::create_dir_all(&opts.out)?;
    let refused = match prepared.regime {
        Some(r) if r.regime != Regime::Electrostatic => Some(r.regime),
        _ => None,
    };
    if let Some(regime) = refused {
        if opts.force {
            warn!("running the electrostatic model in the {:?} regime because --force was given", regime);
        } else {
            let e = RunError::Refused(regime);
            meta.status = RunStatus::Refused;
            meta.error = Some(e.to_string());
            write_metadata(&opts.out, &meta)?;
            return Err(e);
        }
    }
    let audit_log = if scenario.audit.enabled {
        Some(AuditLog::new(BufWriter::new(File::create(opts.out.join(AUDIT_FILE))?)))
    } else {
        None
    };
    let mut runner = Runner {
        scenario,
        problem: &prepared.problem,
        out: &opts.out,
        meta,
        audit_log,
        last_audited: None,
        strict: opts.strict_audit,
    };
    info!("running '{}' into {}", scenario.name, opts.out.display());
    let result = initialize(&prepared.state, &prepared.problem)
        .map_err(|source| RunError::Solver {
            step: 0,
            time: 0.0,
            source,
        })
        .and_then(|s| runner.time_loop(s));
    if let Some(log) = runner.audit_log.as_mut() {
        log.flush()?;
    }
    let mut meta = runner.meta;
    meta.wall_time_seconds = started.elapsed().as_secs_f64();
    if let Err(e) = &result {
        meta.status = match e {
            RunError::Violation(..) => RunStatus::AuditViolation,
            _ => RunStatus::SolverFailure,
        };
        meta.error = Some(e.to_string());
    }
    write_metadata(&opts.out, &meta)?;
    result.map(|_| meta)
}

fn write_metadata(dir: &Path, meta: &Metadata) -> Result<(), RunError> {
    let f = BufWriter::new(File::create(dir.join(METADATA_FILE))?);
    serde_json::to_writer_pretty(f, meta).map_err(|e| RunError::Io(e.into()))?;
    Ok(())
}
