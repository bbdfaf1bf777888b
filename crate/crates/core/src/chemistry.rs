//! Species, stoichiometric reaction networks and mass-action kinetics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Y_MIN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChemistryError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid species set: {0}")]
    InvalidSpecies(String),
    #[error("mass fraction of species {species} is {value}, must be positive")]
    NonPositiveFraction { species: usize, value: f64 },
    #[error("network rejected: {0}")]
    Rejected(String),
    #[error("beta system residual {0:e} exceeds 1e-12")]
    BetaResidual(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Species {
    pub name: String,
    pub molecular_mass: f64,
    pub valency: i32,
    pub diffusion_coefficient: f64,
    #[serde(default)]
    pub solvent: bool,
}

impl Species {
    pub fn new(name: &str, molecular_mass: f64, valency: i32, diffusion_coefficient: f64) -> Self {
        Species {
            name: name.to_string(),
            molecular_mass,
            valency,
            diffusion_coefficient,
            solvent: false,
        }
    }

    pub fn solvent(name: &str, molecular_mass: f64, valency: i32, diffusion_coefficient: f64) -> Self {
        Species {
            solvent: true,
            ..Species::new(name, molecular_mass, valency, diffusion_coefficient)
        }
    }
}

/// Checks m > 0, D ≥ 0 and that exactly one species, the last, is the solvent.
pub fn validate_species(species: &[Species]) -> Result<(), ChemistryError> {
    if species.is_empty() {
        return Err(ChemistryError::InvalidSpecies("no species".into()));
    }
    let mut problems = Vec::new();
    for (l, s) in species.iter().enumerate() {
        if !(s.molecular_mass > 0.0) || !s.molecular_mass.is_finite() {
            problems.push(format!("species {} ({}): molecular mass must be > 0", l, s.name));
        }
        if !(s.diffusion_coefficient >= 0.0) || !s.diffusion_coefficient.is_finite() {
            problems.push(format!("species {} ({}): diffusion coefficient must be >= 0", l, s.name));
        }
    }
    let solvents: Vec<usize> = species
        .iter()
        .enumerate()
        .filter(|(_, s)| s.solvent)
        .map(|(l, _)| l)
        .collect();
    if solvents.len() != 1 {
        problems.push(format!("exactly one solvent required, found {}", solvents.len()));
    } else if solvents[0] != species.len() - 1 {
        problems.push(format!(
            "solvent must be the last species, found at index {}",
            solvents[0]
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ChemistryError::InvalidSpecies(problems.join("; ")))
    }
}

/// Reaction network with an L×J integer stoichiometric matrix (columns are reactions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    species_count: usize,
    stoichiometry: Vec<Vec<i64>>,
    forward_rates: Vec<f64>,
    backward_rates: Vec<f64>,
}

impl ReactionNetwork {
    /// `stoichiometry` holds one row per species, each of length J.
    pub fn new(
        stoichiometry: Vec<Vec<i64>>,
        forward_rates: Vec<f64>,
        backward_rates: Vec<f64>,
    ) -> Result<Self, ChemistryError> {
        let l = stoichiometry.len();
        let j = forward_rates.len();
        if backward_rates.len() != j {
            return Err(ChemistryError::Dimension(format!(
                "{} forward rates but {} backward rates",
                j,
                backward_rates.len()
            )));
        }
        for (row, s) in stoichiometry.iter().enumerate() {
            if s.len() != j {
                return Err(ChemistryError::Dimension(format!(
                    "stoichiometry row {} has {} entries, expected {}",
                    row,
                    s.len(),
                    j
                )));
            }
        }
        Ok(ReactionNetwork {
            species_count: l,
            stoichiometry,
            forward_rates,
            backward_rates,
        })
    }

    /// A network without reactions over `species_count` species.
    pub fn empty(species_count: usize) -> Self {
        ReactionNetwork {
            species_count,
            stoichiometry: vec![Vec::new(); species_count],
            forward_rates: Vec::new(),
            backward_rates: Vec::new(),
        }
    }

    pub fn species_count(&self) -> usize {
        self.species_count
    }

    pub fn reaction_count(&self) -> usize {
        self.forward_rates.len()
    }

    #[inline]
    pub fn s(&self, l: usize, j: usize) -> i64 {
        self.stoichiometry[l][j]
    }

    pub fn stoichiometry(&self) -> &[Vec<i64>] {
        &self.stoichiometry
    }

    pub fn forward_rates(&self) -> &[f64] {
        &self.forward_rates
    }

    pub fn backward_rates(&self) -> &[f64] {
        &self.backward_rates
    }

    pub fn equilibrium_constants(&self) -> Vec<f64> {
        self.forward_rates
            .iter()
            .zip(&self.backward_rates)
            .map(|(kf, kb)| kf / kb)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.reaction_count() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub passed: bool,
    pub detail: String,
    /// Offending reaction columns (zero-based).
    pub columns: Vec<usize>,
}

impl CriterionResult {
    fn pass() -> Self {
        CriterionResult {
            passed: true,
            detail: String::new(),
            columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rank: CriterionResult,
    pub mass: CriterionResult,
    pub charge: CriterionResult,
    pub rates: CriterionResult,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rank.passed && self.mass.passed && self.charge.passed && self.rates.passed
    }

    pub fn failures(&self) -> Vec<String> {
        [
            ("rank", &self.rank),
            ("mass-criterion", &self.mass),
            ("charge-criterion", &self.charge),
            ("rate-positivity", &self.rates),
        ]
        .iter()
        .filter(|(_, c)| !c.passed)
        .map(|(name, c)| format!("{}: {}", name, c.detail))
        .collect()
    }
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let m = rows.len();
    if m == 0 {
        return 0;
    }
    let n = rows[0].len();
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..n {
        if rank == m {
            break;
        }
        let Some(p) = (rank..m).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..m {
            for c in col + 1..n {
                a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    rank
}

pub fn validate_network(
    species: &[Species],
    network: &ReactionNetwork,
) -> Result<ValidationReport, ChemistryError> {
    let l_count = species.len();
    if network.species_count() != l_count {
        return Err(ChemistryError::Dimension(format!(
            "stoichiometric matrix has {} rows for {} species",
            network.species_count(),
            l_count
        )));
    }
    let j_count = network.reaction_count();

    let rank = integer_rank(network.stoichiometry());
    let rank_result = if j_count >= l_count && j_count > 0 {
        CriterionResult {
            passed: false,
            detail: format!("J = {} reactions requires J < L = {}", j_count, l_count),
            columns: Vec::new(),
        }
    } else if rank != j_count {
        CriterionResult {
            passed: false,
            detail: format!("linearly dependent reactions: rank(S) = {} < J = {}", rank, j_count),
            columns: Vec::new(),
        }
    } else {
        CriterionResult::pass()
    };

    let mut mass_cols = Vec::new();
    let mut charge_cols = Vec::new();
    for j in 0..j_count {
        let mut sum = 0.0;
        let mut scale = 0.0;
        let mut zsum: i64 = 0;
        for (l, sp) in species.iter().enumerate() {
            let s = network.s(l, j);
            let ms = sp.molecular_mass * s as f64;
            sum += ms;
            scale += ms.abs();
            zsum += sp.valency as i64 * s;
        }
        if sum.abs() > 1e-12 * scale {
            mass_cols.push(j);
        }
        if zsum != 0 {
            charge_cols.push(j);
        }
    }
    let describe = |cols: &[usize], what: &str| {
        if cols.is_empty() {
            CriterionResult::pass()
        } else {
            CriterionResult {
                passed: false,
                detail: format!(
                    "{} not conserved in reaction column(s) {}",
                    what,
                    cols.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
                ),
                columns: cols.to_vec(),
            }
        }
    };

    let mut rate_cols = Vec::new();
    for j in 0..j_count {
        let kf = network.forward_rates()[j];
        let kb = network.backward_rates()[j];
        if !(kf > 0.0 && kb > 0.0 && kf.is_finite() && kb.is_finite()) {
            rate_cols.push(j);
        }
    }

    Ok(ValidationReport {
        rank: rank_result,
        mass: describe(&mass_cols, "mass"),
        charge: describe(&charge_cols, "charge"),
        rates: describe(&rate_cols, "positive finite rate constants"),
    })
}

/// Minimum-norm solution of Sᵀβ = −ln K.
pub fn solve_betas(network: &ReactionNetwork) -> Result<Vec<f64>, ChemistryError> {
    let l = network.species_count();
    let j = network.reaction_count();
    if j == 0 {
        return Ok(vec![0.0; l]);
    }
    let s = DMatrix::from_fn(l, j, |r, c| network.s(r, c) as f64);
    let rhs = DVector::from_iterator(j, network.equilibrium_constants().iter().map(|k| -k.ln()));
    let gram = s.transpose() * &s;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| ChemistryError::Rejected("linearly dependent reactions".into()))?;
    let mut w = chol.solve(&rhs);
    // one step of iterative refinement
    let r = &rhs - &gram * &w;
    w += chol.solve(&r);
    let beta = &s * w;
    let residual = (s.transpose() * &beta - &rhs).amax();
    if residual > 1e-12 * rhs.amax().max(1.0) {
        return Err(ChemistryError::BetaResidual(residual));
    }
    Ok(beta.iter().copied().collect())
}

fn check_fractions(y: &[f64]) -> Result<(), ChemistryError> {
    for (l, &v) in y.iter().enumerate() {
        if !(v > 0.0) {
            return Err(ChemistryError::NonPositiveFraction { species: l, value: v });
        }
    }
    Ok(())
}

/// Mass-action rates R_j = k_f ∏ y^{−s} (reactants) − k_b ∏ y^{s} (products).
pub fn reaction_rates(network: &ReactionNetwork, y: &[f64]) -> Result<Vec<f64>, ChemistryError> {
    if y.len() != network.species_count() {
        return Err(ChemistryError::Dimension(format!(
            "{} mass fractions for {} species",
            y.len(),
            network.species_count()
        )));
    }
    check_fractions(y)?;
    let j_count = network.reaction_count();
    let mut rates = Vec::with_capacity(j_count);
    for j in 0..j_count {
        let mut fwd = network.forward_rates()[j];
        let mut bwd = network.backward_rates()[j];
        for (l, &yl) in y.iter().enumerate() {
            let s = network.s(l, j);
            let yl = yl.max(Y_MIN);
            if s < 0 {
                fwd *= yl.powi((-s) as i32);
            } else if s > 0 {
                bwd *= yl.powi(s as i32);
            }
        }
        rates.push(fwd - bwd);
    }
    Ok(rates)
}

/// r_l = m_l ∑_j s_lj R_j.
pub fn mass_production_rates(
    species: &[Species],
    network: &ReactionNetwork,
    y: &[f64],
) -> Result<Vec<f64>, ChemistryError> {
    let rates = reaction_rates(network, y)?;
    Ok(production_from_rates(species, network, &rates))
}

pub fn production_from_rates(species: &[Species], network: &ReactionNetwork, rates: &[f64]) -> Vec<f64> {
    species
        .iter()
        .enumerate()
        .map(|(l, sp)| {
            let tot: f64 = rates
                .iter()
                .enumerate()
                .map(|(j, r)| network.s(l, j) as f64 * r)
                .sum();
            sp.molecular_mass * tot
        })
        .collect()
}

/// |∏ y^{s_lj} − K_j| per reaction.
pub fn equilibrium_residual(network: &ReactionNetwork, y: &[f64]) -> Result<Vec<f64>, ChemistryError> {
    check_fractions(y)?;
    let k = network.equilibrium_constants();
    Ok((0..network.reaction_count())
        .map(|j| {
            let q: f64 = y
                .iter()
                .enumerate()
                .map(|(l, &yl)| yl.max(Y_MIN).powi(network.s(l, j) as i32))
                .product();
            (q - k[j]).abs()
        })
        .collect())
}

/// Reaction affinity −∑_l s_lj(β_l + ln y_l), whose sign matches R_j.
pub fn affinities(network: &ReactionNetwork, beta: &[f64], y: &[f64]) -> Vec<f64> {
    (0..network.reaction_count())
        .map(|j| {
            -y.iter()
                .enumerate()
                .map(|(l, &yl)| network.s(l, j) as f64 * (beta[l] + yl.max(Y_MIN).ln()))
                .sum::<f64>()
        })
        .collect()
}

/// Validated species set, reaction network and mixing constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub species: Vec<Species>,
    pub network: ReactionNetwork,
    pub beta: Vec<f64>,
}

impl Mixture {
    pub fn new(species: Vec<Species>, network: ReactionNetwork) -> Result<Self, ChemistryError> {
        validate_species(&species)?;
        let report = validate_network(&species, &network)?;
        if !report.passed() {
            return Err(ChemistryError::Rejected(report.failures().join("; ")));
        }
        let beta = solve_betas(&network)?;
        Ok(Mixture {
            species,
            network,
            beta,
        })
    }

    /// Species without reactions.
    pub fn nonreactive(species: Vec<Species>) -> Result<Self, ChemistryError> {
        let n = species.len();
        Mixture::new(species, ReactionNetwork::empty(n))
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn solvent(&self) -> usize {
        self.species.len() - 1
    }

    pub fn masses(&self) -> Vec<f64> {
        self.species.iter().map(|s| s.molecular_mass).collect()
    }

    pub fn average_mass(&self) -> f64 {
        self.masses().iter().sum::<f64>() / self.len() as f64
    }
}
