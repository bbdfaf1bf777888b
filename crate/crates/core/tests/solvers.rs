use elk_core::chemistry::{Mixture, ReactionNetwork, Species};
use elk_core::oracles::{boltzmann_profile, heat_kernel, reaction_equilibrium_constant};
use elk_core::solvers::{
    advance, poisson_residual, poisson_solve, steady_state, Boundaries, NumericsConfig, Problem, TransportModel,
    VelocityClosure,
};
use elk_core::state::{FieldBoundary, Grid1D, MixtureState};
use elk_core::thermo::{MaterialParams, PhysicalConstants};

fn electrolyte() -> Vec<Species> {
    vec![
        Species::new("cation", 1.0, 1, 1.0),
        Species::new("anion", 1.0, -1, 1.0),
        Species::solvent("solvent", 1.0, 0, 0.0),
    ]
}

fn problem(species: Vec<Species>, net: Option<ReactionNetwork>, n: usize, bcs: Boundaries, model: TransportModel) -> Problem {
    let len = species.len();
    let mixture = match net {
        Some(net) => Mixture::new(species, net).unwrap(),
        None => Mixture::nonreactive(species).unwrap(),
    };
    let _ = len;
    let material = MaterialParams::new(&mixture.species, 1.0);
    Problem {
        mixture,
        constants: PhysicalConstants::unit(),
        material,
        permittivity: vec![1.0; n],
        boundaries: bcs,
        model,
        closure: VelocityClosure::Rest,
        numerics: NumericsConfig::default(),
    }
}

#[test]
fn boltzmann_steady_state() {
    let n = 200;
    let y_inf = 0.01;
    let lambda = (1.0f64 / (2.0 * y_inf)).sqrt();
    let grid = Grid1D::new(n, 10.0 * lambda).unwrap();
    let zeta = 1.0;
    let species_bc = FieldBoundary::new(
        elk_core::BoundaryCondition::NoFlux,
        elk_core::BoundaryCondition::Dirichlet(y_inf),
    )
    .unwrap();
    let bcs = Boundaries::uniform(2, species_bc, FieldBoundary::dirichlet(zeta, 0.0));
    let mut p = problem(electrolyte(), None, n, bcs, TransportModel::Pnp);
    p.numerics.dt = 50.0;
    p.numerics.steady_tol = 1e-13;
    p.numerics.max_steps = 2000;
    let state = MixtureState::uniform(grid, 1.0, &[y_inf, y_inf, 1.0 - 2.0 * y_inf], 1.0);
    let rep = steady_state(&state, &p).unwrap();
    assert!(rep.converged, "steps {} last {:?}", rep.steps, rep.residual_history.last());
    let s = rep.state;
    for (l, z) in [(0usize, 1i32), (1, -1)] {
        let want = boltzmann_profile(&s.phi, z, 1.0, y_inf, &p.constants);
        let err = s.y[l].iter().zip(&want).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
        println!("species {} boltzmann rel err {:e} steps {}", l, err, rep.steps);
        assert!(err <= 1e-8);
    }
}

fn l2_error(a: &[f64], b: &[f64], h: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() * h).sqrt()
}

fn diffusion_error(n: usize) -> f64 {
    let d = 1e-2;
    let sigma0 = 0.05;
    let t_end = 0.05;
    let grid = Grid1D::new(n, 1.0).unwrap();
    let species = vec![Species::new("tracer", 1.0, 0, d), Species::solvent("solvent", 1.0, 0, 0.0)];
    let bcs = Boundaries::uniform(1, FieldBoundary::no_flux(), FieldBoundary::no_flux());
    let p = problem(species, None, n, bcs, TransportModel::Pnp);
    let x = grid.centers();
    let amp = 0.01;
    let y0: Vec<f64> = heat_kernel(&x, 0.0, d, sigma0, amp, 0.5).unwrap();
    let mut s = MixtureState::uniform(grid, 1.0, &[0.0, 1.0], 1.0);
    s.y[1] = y0.iter().map(|v| 1.0 - v).collect();
    s.y[0] = y0;
    let h = grid.dx();
    let steps = (t_end / (0.5 * h * h)).round() as usize;
    let dt = t_end / steps as f64;
    for _ in 0..steps {
        s = advance(&s, dt, &p).unwrap().0;
    }
    let want = heat_kernel(&x, t_end, d, sigma0, amp, 0.5).unwrap();
    l2_error(&s.y[0], &want, h)
}

#[test]
fn diffusion_second_order() {
    let e: Vec<f64> = [50, 100, 200].iter().map(|&n| diffusion_error(n)).collect();
    let o1 = (e[0] / e[1]).log2();
    let o2 = (e[1] / e[2]).log2();
    println!("errors {:?} orders {} {}", e, o1, o2);
    assert!(o1 > 1.8 && o2 > 1.8);
}

#[test]
fn noflux_conserves_species_mass() {
    let n = 64;
    let grid = Grid1D::new(n, 1.0).unwrap();
    let bcs = Boundaries::uniform(2, FieldBoundary::no_flux(), FieldBoundary::dirichlet(0.5, -0.5));
    let mut p = problem(electrolyte(), None, n, bcs, TransportModel::General);
    p.constants = PhysicalConstants { vacuum_permittivity: 0.01, ..PhysicalConstants::unit() };
    let mut s = MixtureState::uniform(grid, 1.0, &[0.02, 0.02, 0.96], 1.0);
    for (k, x) in grid.centers().iter().enumerate() {
        s.y[0][k] = 0.02 + 0.01 * (6.0 * x).sin();
        s.y[2][k] = 1.0 - s.y[0][k] - s.y[1][k];
    }
    let mut m0 = s.species_masses();
    for _ in 0..20 {
        s = advance(&s, 1e-3, &p).unwrap().0;
        let m = s.species_masses();
        for l in 0..3 {
            let drift = ((m[l] - m0[l]) / m0[l]).abs();
            assert!(drift <= 1e-13, "species {} drift {:e}", l, drift);
        }
        m0 = m;
    }
}

#[test]
fn reaction_relaxes_to_equilibrium() {
    let n = 4;
    let grid = Grid1D::new(n, 1.0).unwrap();
    let species = vec![Species::new("A", 1.0, 0, 0.0), Species::solvent("B", 1.0, 0, 0.0)];
    let net = ReactionNetwork::new(vec![vec![-1], vec![1]], vec![4.0], vec![1.0]).unwrap();
    let bcs = Boundaries::uniform(1, FieldBoundary::no_flux(), FieldBoundary::no_flux());
    let p = problem(species, Some(net), n, bcs, TransportModel::Pnp);
    let mut s = MixtureState::uniform(grid, 1.0, &[0.5, 0.5], 1.0);
    for _ in 0..200 {
        s = advance(&s, 0.05, &p).unwrap().0;
    }
    let eq = reaction_equilibrium_constant(4.0).unwrap();
    for k in 0..n {
        assert!((s.y[0][k] - eq.y[0]).abs() <= 1e-8);
        assert!((s.y[1][k] - eq.y[1]).abs() <= 1e-8);
    }
}

#[test]
fn uniform_equilibrium_is_fixed_point() {
    let n = 16;
    let grid = Grid1D::new(n, 1.0).unwrap();
    let bcs = Boundaries::uniform(2, FieldBoundary::no_flux(), FieldBoundary::no_flux());
    let p = problem(electrolyte(), None, n, bcs, TransportModel::General);
    let s = MixtureState::uniform(grid, 1.0, &[0.1, 0.1, 0.8], 1.0);
    let next = advance(&s, 0.1, &p).unwrap().0;
    for (a, b) in s.y.iter().flatten().zip(next.y.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(next.phi.iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn uniform_charge_poisson() {
    let c = PhysicalConstants::unit();
    let mut errs = Vec::new();
    for n in [100, 200] {
        let grid = Grid1D::new(n, 1.0).unwrap();
        let phi = poisson_solve(&grid, &vec![1.0; n], &vec![1.0; n], &FieldBoundary::dirichlet(0.0, 0.0), &c).unwrap();
        let err = grid
            .centers()
            .iter()
            .zip(&phi)
            .map(|(x, p)| (p - 0.5 * x * (1.0 - x)).abs())
            .fold(0.0, f64::max);
        assert!(poisson_residual(&grid, &vec![1.0; n], &vec![1.0; n], &FieldBoundary::dirichlet(0.0, 0.0), &c, &phi) < 1e-9);
        errs.push(err);
    }
    assert!(errs[1] <= 1e-3);
    assert!((errs[0] / errs[1]).log2() > 1.9);
}
