use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use elk_core::chemistry::{validate_network, validate_species, Mixture, ReactionNetwork, Species};
use elk_core::oracles::OracleSpec;
use elk_core::scaling::{scaling_regime, CharacteristicScales, ScalingRegime, DEFAULT_THRESHOLD};
use elk_core::solvers::{Boundaries, NumericsConfig, Problem, TransportModel, VelocityClosure};
use elk_core::state::{BoundaryCondition, FieldBoundary, Grid1D, MixtureState};
use elk_core::thermo::{HeatConductivity, MaterialParams, PhysicalConstants};

use crate::profile::Profile;

/// Solvent fraction must exceed this multiple of the solute total for the dilute check.
const DILUTE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub species: Vec<Species>,
    #[serde(default)]
    pub reactions: Vec<ReactionSpec>,
    pub domain: DomainSpec,
    pub initial: InitialSpec,
    pub boundaries: BoundarySpec,
    #[serde(default)]
    pub model: TransportModel,
    #[serde(default)]
    pub closure: ClosureSpec,
    #[serde(default)]
    pub material: MaterialSpec,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default = "unit_permittivity")]
    pub permittivity: Profile,
    #[serde(default)]
    pub numerics: NumericsConfig,
    /// Run to steady state instead of `numerics.end_time`.
    #[serde(default)]
    pub steady: bool,
    #[serde(default)]
    pub audit: AuditSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDecl>,
}

fn unit_permittivity() -> Profile {
    Profile::constant(1.0)
}

/// One reaction column with coefficients keyed by species name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    pub stoichiometry: BTreeMap<String, i64>,
    pub forward_rate: f64,
    pub backward_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default = "unit_permittivity")]
    pub density: Profile,
    /// Solutes only; the solvent takes the remainder.
    pub mass_fractions: BTreeMap<String, Profile>,
    #[serde(default = "zero_profile")]
    pub potential: Profile,
    pub temperature: Profile,
    #[serde(default = "zero_profile")]
    pub pressure: Profile,
}

fn zero_profile() -> Profile {
    Profile::constant(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// Default for every solute.
    pub species: FieldBoundary,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub species_overrides: BTreeMap<String, FieldBoundary>,
    pub potential: FieldBoundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<FieldBoundary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ClosureSpec {
    #[default]
    Rest,
    Prescribed {
        velocity: Profile,
    },
    Darcy {
        permeability: f64,
        viscosity: f64,
        porosity: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSpec {
    pub shear_viscosity: f64,
    pub bulk_viscosity: f64,
    pub heat_conductivity: HeatConductivity,
    /// Defaults to the mean initial temperature.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsPreset {
    #[default]
    Si,
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSpec {
    pub preset: ConstantsPreset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elementary_charge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boltzmann: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vacuum_permittivity: Option<f64>,
}

impl ConstantsSpec {
    pub fn resolve(&self) -> PhysicalConstants {
        let base = match self.preset {
            ConstantsPreset::Si => PhysicalConstants::default(),
            ConstantsPreset::Unit => PhysicalConstants::unit(),
        };
        PhysicalConstants {
            elementary_charge: self.elementary_charge.unwrap_or(base.elementary_charge),
            boltzmann: self.boltzmann.unwrap_or(base.boltzmann),
            vacuum_permittivity: self.vacuum_permittivity.unwrap_or(base.vacuum_permittivity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSpec {
    pub enabled: bool,
    /// Audit every n-th accepted step.
    pub every: usize,
    /// Per-cell tolerance factor ε_audit.
    pub eps: f64,
    /// Write every cell's budget, not just the integral.
    pub per_cell: bool,
}

impl Default for AuditSpec {
    fn default() -> Self {
        AuditSpec {
            enabled: true,
            every: 1,
            eps: elk_core::audit::AUDIT_EPS,
            per_cell: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Snapshot every n-th step; the initial and final states are always written.
    pub every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub e0: f64,
    pub b0: f64,
    pub length: f64,
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i0: Option<f64>,
    /// Overrides the exponent inferred from δ_W = δ_V^α.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl ScalingSpec {
    pub fn regime(&self) -> Result<ScalingRegime, elk_core::scaling::ScalingError> {
        let s = CharacteristicScales {
            e0: self.e0,
            b0: self.b0,
            length: self.length,
            time: self.time,
            rho0: self.rho0,
            i0: self.i0,
        };
        scaling_regime(&s, self.alpha, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDecl {
    /// Species compared against the oracle, where it applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<String>,
    pub spec: OracleSpec,
}

/// A validation finding tagged with the rule it broke.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub rule: String,
    pub message: String,
}

impl Issue {
    fn new(rule: &str, message: impl Into<String>) -> Self {
        Issue {
            rule: rule.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{} validation error(s):\n{}", .0.len(), join_issues(.0))]
    Invalid(Vec<Issue>),
}

fn join_issues(v: &[Issue]) -> String {
    v.iter().map(|i| format!("  {}", i)).collect::<Vec<_>>().join("\n")
}

/// Validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub state: MixtureState,
    pub warnings: Vec<Issue>,
    pub regime: Option<ScalingRegime>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Reads, parses and validates; the error lists every problem found.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Prepared), ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let scenario = parse_scenario(&text)?;
    let prepared = scenario.prepare().map_err(ScenarioError::Invalid)?;
    Ok((scenario, prepared))
}

pub fn to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl Scenario {
    fn solute_names(&self) -> Vec<&str> {
        self.species.iter().filter(|s| !s.solvent).map(|s| s.name.as_str()).collect()
    }

    fn network(&self, errors: &mut Vec<Issue>) -> Option<ReactionNetwork> {
        let names: Vec<&str> = self.species.iter().map(|s| s.name.as_str()).collect();
        let mut rows = vec![vec![0i64; self.reactions.len()]; names.len()];
        let mut ok = true;
        for (j, r) in self.reactions.iter().enumerate() {
            for (name, &s) in &r.stoichiometry {
                match names.iter().position(|n| n == name) {
                    Some(l) => rows[l][j] = s,
                    None => {
                        errors.push(Issue::new("dimension", format!("reaction {} names unknown species '{}'", j, name)));
                        ok = false;
                    }
                }
            }
        }
        if !ok {
            return None;
        }
        let kf = self.reactions.iter().map(|r| r.forward_rate).collect();
        let kb = self.reactions.iter().map(|r| r.backward_rate).collect();
        match ReactionNetwork::new(rows, kf, kb) {
            Ok(n) => Some(n),
            Err(e) => {
                errors.push(Issue::new("dimension", e.to_string()));
                None
            }
        }
    }

    fn check_chemistry(&self, errors: &mut Vec<Issue>) -> Option<Mixture> {
        let mut names: Vec<&str> = self.species.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            errors.push(Issue::new("species", "species names must be unique"));
        }
        if let Err(e) = validate_species(&self.species) {
            let rule = if self.species.iter().filter(|s| s.solvent).count() != 1 {
                "solvent"
            } else {
                "species"
            };
            errors.push(Issue::new(rule, e.to_string()));
            return None;
        }
        let network = self.network(errors)?;
        match validate_network(&self.species, &network) {
            Ok(report) => {
                for (rule, c) in [
                    ("rank", &report.rank),
                    ("mass-criterion", &report.mass),
                    ("charge-criterion", &report.charge),
                    ("rate-positivity", &report.rates),
                ] {
                    if !c.passed {
                        let cols: Vec<String> = c.columns.iter().map(|j| j.to_string()).collect();
                        let msg = if cols.is_empty() {
                            c.detail.clone()
                        } else {
                            format!("{} (column {})", c.detail, cols.join(", "))
                        };
                        errors.push(Issue::new(rule, msg));
                    }
                }
                if !report.passed() {
                    return None;
                }
            }
            Err(e) => {
                errors.push(Issue::new("dimension", e.to_string()));
                return None;
            }
        }
        match Mixture::new(self.species.clone(), network) {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(Issue::new("chemistry", e.to_string()));
                None
            }
        }
    }

    fn check_boundaries(&self, errors: &mut Vec<Issue>) -> Option<Boundaries> {
        let solutes = self.solute_names();
        for name in self.boundaries.species_overrides.keys() {
            if !solutes.contains(&name.as_str()) {
                errors.push(Issue::new("boundary", format!("override for unknown solute '{}'", name)));
            }
        }
        let species: Vec<FieldBoundary> = solutes
            .iter()
            .map(|n| {
                self.boundaries
                    .species_overrides
                    .get(*n)
                    .copied()
                    .unwrap_or(self.boundaries.species)
            })
            .collect();
        for (n, b) in solutes.iter().zip(&species) {
            for bc in [b.left, b.right] {
                if let BoundaryCondition::Dirichlet(v) = bc {
                    if !(0.0..1.0).contains(&v) {
                        errors.push(Issue::new(
                            "boundary",
                            format!("dirichlet mass fraction {} for '{}' must lie in [0, 1)", v, n),
                        ));
                    }
                }
            }
        }
        let density = self.boundaries.density.unwrap_or(if self.boundaries.potential.is_periodic() {
            FieldBoundary::periodic()
        } else {
            FieldBoundary::no_flux()
        });
        if let Some(BoundaryCondition::Dirichlet(v)) = [density.left, density.right]
            .into_iter()
            .find(|b| matches!(b, BoundaryCondition::Dirichlet(v) if !positive(*v)))
        {
            errors.push(Issue::new("boundary", format!("dirichlet density {} must be positive", v)));
        }
        let b = Boundaries {
            species,
            potential: self.boundaries.potential,
            density,
        };
        match b.validate(solutes.len()) {
            Ok(()) => Some(b),
            Err(e) => {
                errors.push(Issue::new("boundary", e.to_string()));
                None
            }
        }
    }

    fn field(&self, rule: &str, what: &str, p: &Profile, x: &[f64], errors: &mut Vec<Issue>) -> Option<Vec<f64>> {
        match p.check(x.len()) {
            Some(m) => {
                errors.push(Issue::new(rule, format!("{}: {}", what, m)));
                None
            }
            None => Some(p.evaluate(x, self.domain.length)),
        }
    }

    /// Cross-validates every section; returns all errors, or the problem, state and warnings.
    pub fn prepare(&self) -> Result<Prepared, Vec<Issue>> {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();

        let grid = match Grid1D::new(self.domain.cells, self.domain.length) {
            Ok(g) if self.domain.cells >= 3 => Some(g),
            Ok(_) => {
                errors.push(Issue::new("dimension", "at least 3 cells are required"));
                None
            }
            Err(e) => {
                errors.push(Issue::new("dimension", e.to_string()));
                None
            }
        };
        let mixture = self.check_chemistry(&mut errors);
        let boundaries = self.check_boundaries(&mut errors);
        let constants = self.constants.resolve();
        if let Err(e) = constants.validate() {
            errors.push(Issue::new("constants", e.to_string()));
        }
        if let Err(e) = self.numerics.validate() {
            errors.push(Issue::new("numerics", e.to_string()));
        }
        if self.audit.every == 0 || !(self.audit.eps >= 0.0) {
            errors.push(Issue::new("audit", "audit.every must be positive and audit.eps nonnegative"));
        }
        if self.output.every == 0 {
            errors.push(Issue::new("output", "output.every must be positive"));
        }
        let regime = match &self.scaling {
            Some(s) => match s.regime() {
                Ok(r) => Some(r),
                Err(e) => {
                    errors.push(Issue::new("scaling", e.to_string()));
                    None
                }
            },
            None => None,
        };
        if let Some(o) = &self.oracle {
            if let Err(e) = o.spec.validate() {
                errors.push(Issue::new("oracle", e.to_string()));
            }
            if let Some(n) = &o.species {
                if !self.species.iter().any(|s| &s.name == n) {
                    errors.push(Issue::new("oracle", format!("unknown species '{}'", n)));
                }
            }
        }

        let closure_problem = |m: &str| Issue::new("closure", m);
        match &self.closure {
            ClosureSpec::Darcy {
                permeability,
                viscosity,
                porosity,
            } => {
                if !(*porosity > 0.0 && *porosity <= 1.0) {
                    errors.push(Issue::new("porosity", format!("porosity {} must lie in (0, 1]", porosity)));
                }
                if !positive(*permeability) || !positive(*viscosity) {
                    errors.push(closure_problem("darcy permeability and viscosity must be positive"));
                }
            }
            ClosureSpec::Prescribed { .. } | ClosureSpec::Rest => {
                if self.model == TransportModel::Dpnp {
                    errors.push(closure_problem("the dpnp model requires the darcy closure"));
                }
            }
        }

        let x = grid.map(|g| g.centers()).unwrap_or_default();
        let n = x.len();
        let mut state = None;
        let mut permittivity = None;
        let mut velocity = None;
        let mut mean_temp = 0.0;
        if let Some(g) = grid {
            let rho = self.field("density", "initial density", &self.initial.density, &x, &mut errors);
            let temp = self.field("temperature", "initial temperature", &self.initial.temperature, &x, &mut errors);
            let phi = self.field("profile", "initial potential", &self.initial.potential, &x, &mut errors);
            let p = self.field("profile", "initial pressure", &self.initial.pressure, &x, &mut errors);
            permittivity = self.field("permittivity", "permittivity", &self.permittivity, &x, &mut errors);
            if let ClosureSpec::Prescribed { velocity: vp } = &self.closure {
                velocity = self.field("profile", "prescribed velocity", vp, &x, &mut errors);
            }
            if let Some(r) = &rho {
                if r.iter().any(|v| !positive(*v)) {
                    errors.push(Issue::new("density", "initial density must be positive"));
                }
            }
            if let Some(t) = &temp {
                if t.iter().any(|v| !positive(*v)) {
                    errors.push(Issue::new("temperature", "initial temperature must be positive"));
                }
                mean_temp = t.iter().sum::<f64>() / n as f64;
            }
            if let Some(e) = &permittivity {
                if e.iter().any(|v| !positive(*v)) {
                    errors.push(Issue::new("permittivity", "relative permittivity must be positive"));
                }
            }
            let y = self.mass_fractions(&x, &mut errors);
            if let (Some(rho), Some(temp), Some(phi), Some(p), Some(y)) = (rho, temp, phi, p, y) {
                state = Some(MixtureState {
                    grid: g,
                    rho,
                    y,
                    phi,
                    v: velocity.clone().unwrap_or_else(|| vec![0.0; n]),
                    temp,
                    pressure: p,
                });
            }
        }

        let material = {
            let mut m = MaterialParams::new(&self.species, self.material.reference_temperature.unwrap_or(mean_temp));
            m.shear_viscosity = self.material.shear_viscosity;
            m.bulk_viscosity = self.material.bulk_viscosity;
            m.heat_conductivity = self.material.heat_conductivity.clone();
            if let Err(e) = m.validate(1) {
                warnings.push(Issue::new("material", format!("{}; the audit will flag it", e)));
            }
            m
        };

        if let (Some(m), Some(s)) = (&mixture, &state) {
            if matches!(self.model, TransportModel::Pnp | TransportModel::Dpnp) {
                warnings.extend(self.pnp_assumptions(m, s));
            }
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        let (mixture, boundaries, state, permittivity) = (
            mixture.expect("checked"),
            boundaries.expect("checked"),
            state.expect("checked"),
            permittivity.expect("checked"),
        );
        let closure = match &self.closure {
            ClosureSpec::Rest => VelocityClosure::Rest,
            ClosureSpec::Prescribed { .. } => VelocityClosure::Prescribed {
                velocity: velocity.expect("checked"),
            },
            ClosureSpec::Darcy {
                permeability,
                viscosity,
                porosity,
            } => VelocityClosure::Darcy {
                permeability: *permeability,
                viscosity: *viscosity,
                porosity: *porosity,
            },
        };
        let problem = Problem {
            mixture,
            constants,
            material,
            permittivity,
            boundaries,
            model: self.model,
            closure,
            numerics: self.numerics.clone(),
        };
        if let Err(e) = problem.validate(&state) {
            return Err(vec![Issue::new("problem", e.to_string())]);
        }
        Ok(Prepared {
            problem,
            state,
            warnings,
            regime,
        })
    }

    fn mass_fractions(&self, x: &[f64], errors: &mut Vec<Issue>) -> Option<Vec<Vec<f64>>> {
        let solutes = self.solute_names();
        let mut ok = true;
        for name in self.initial.mass_fractions.keys() {
            if !solutes.contains(&name.as_str()) {
                errors.push(Issue::new(
                    "mass-fraction",
                    format!("'{}' is not a solute; the solvent fraction is the remainder", name),
                ));
                ok = false;
            }
        }
        let mut y = Vec::new();
        for name in &solutes {
            match self.initial.mass_fractions.get(*name) {
                None => {
                    errors.push(Issue::new("mass-fraction", format!("missing initial profile for '{}'", name)));
                    ok = false;
                }
                Some(p) => match self.field("profile", &format!("mass fraction of '{}'", name), p, x, errors) {
                    Some(v) => {
                        if v.iter().any(|f| !(*f >= 0.0)) {
                            errors.push(Issue::new("mass-fraction", format!("'{}' has a negative mass fraction", name)));
                            ok = false;
                        }
                        y.push(v);
                    }
                    None => ok = false,
                },
            }
        }
        if !ok {
            return None;
        }
        let solvent: Vec<f64> = (0..x.len()).map(|k| 1.0 - y.iter().map(|yl| yl[k]).sum::<f64>()).collect();
        if let Some(k) = solvent.iter().position(|v| !(*v > 0.0)) {
            errors.push(Issue::new(
                "mass-fraction",
                format!("solute fractions sum to {} at cell {}, leaving no solvent", 1.0 - solvent[k], k),
            ));
            return None;
        }
        y.push(solvent);
        Some(y)
    }

    /// Warnings for the assumptions behind the Poisson–Nernst–Planck reduction.
    fn pnp_assumptions(&self, mixture: &Mixture, state: &MixtureState) -> Vec<Issue> {
        let mut w = Vec::new();
        if !self.initial.temperature.is_constant() {
            w.push(Issue::new("PNP1", "temperature is not constant"));
        }
        let velocity_varies = match &self.closure {
            ClosureSpec::Prescribed { velocity } => !velocity.is_constant(),
            _ => false,
        };
        if !self.initial.density.is_constant() || velocity_varies {
            w.push(Issue::new("PNP2", "density or velocity is not constant in space"));
        }
        let solvent = &mixture.species[mixture.solvent()];
        if solvent.valency != 0 {
            w.push(Issue::new("PNP3", format!("solvent '{}' is charged", solvent.name)));
        }
        if mixture.network.stoichiometry()[mixture.solvent()].iter().any(|&s| s != 0) {
            w.push(Issue::new("PNP4", format!("solvent '{}' takes part in reactions", solvent.name)));
        }
        let l = mixture.solvent();
        let dense = (0..state.cells()).find(|&k| {
            let solutes: f64 = state.y[..l].iter().map(|yl| yl[k]).sum();
            state.y[l][k] < DILUTE_FACTOR * solutes
        });
        if let Some(k) = dense {
            w.push(Issue::new(
                "PNP5",
                format!("mixture is not dilute at cell {} (solvent below {} times the solutes)", k, DILUTE_FACTOR),
            ));
        }
        w
    }
}
