use std::io::{Read, Write};

use thiserror::Error;

use elk_core::chemistry::Species;
use elk_core::state::{Grid1D, MixtureState};
use elk_core::thermo::PhysicalConstants;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Format(String),
}

/// Column-major contents of one snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
    pub temp: Vec<f64>,
    pub pressure: Vec<f64>,
    pub rho_e: Vec<f64>,
}

pub fn file_name(index: usize) -> String {
    format!("snapshot_{:06}.csv", index)
}

pub fn header(species: usize) -> Vec<String> {
    let mut h = vec!["x".to_string(), "rho".to_string()];
    h.extend((1..=species).map(|l| format!("y_{}", l)));
    h.extend(["phi", "v", "T", "p", "rho_E"].map(String::from));
    h
}

/// `{:e}` prints the shortest string that parses back to the same f64.
fn fmt(v: f64) -> String {
    format!("{:e}", v)
}

pub fn write_snapshot<W: Write>(
    out: W,
    state: &MixtureState,
    species: &[Species],
    constants: &PhysicalConstants,
) -> Result<(), SnapshotError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(state.species_count()))?;
    let rho_e = state.charge_density(species, constants);
    for k in 0..state.cells() {
        let mut row = vec![fmt(state.grid.x(k)), fmt(state.rho[k])];
        row.extend(state.y.iter().map(|yl| fmt(yl[k])));
        row.extend([state.phi[k], state.v[k], state.temp[k], state.pressure[k], rho_e[k]].map(fmt));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(input: R) -> Result<Snapshot, SnapshotError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if head.len() < 8 {
        return Err(SnapshotError::Format(format!("{} columns, need at least 8", head.len())));
    }
    let species = head.len() - 7;
    if head != header(species) {
        return Err(SnapshotError::Format(format!("unexpected header {:?}", head)));
    }
    let mut cols = vec![Vec::new(); head.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != head.len() {
            return Err(SnapshotError::Format(format!("row {} has {} fields", line + 1, rec.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| SnapshotError::Format(format!("row {} column {}: '{}' is not a number", line + 1, c, field)))?;
            cols[c].push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(SnapshotError::Format("no data rows".into()));
    }
    let mut it = cols.into_iter();
    let mut next = || it.next().expect("column count checked");
    let x = next();
    let rho = next();
    let y = (0..species).map(|_| next()).collect();
    Ok(Snapshot {
        x,
        rho,
        y,
        phi: next(),
        v: next(),
        temp: next(),
        pressure: next(),
        rho_e: next(),
    })
}

impl Snapshot {
    pub fn cells(&self) -> usize {
        self.x.len()
    }

    /// Rebuilds the state on the uniform grid implied by the first cell center.
    pub fn to_state(&self) -> Result<MixtureState, SnapshotError> {
        let n = self.cells();
        let length = 2.0 * self.x[0] * n as f64;
        let grid = Grid1D::new(n, length).map_err(|e| SnapshotError::Format(e.to_string()))?;
        Ok(MixtureState {
            grid,
            rho: self.rho.clone(),
            y: self.y.clone(),
            phi: self.phi.clone(),
            v: self.v.clone(),
            temp: self.temp.clone(),
            pressure: self.pressure.clone(),
        })
    }
}
