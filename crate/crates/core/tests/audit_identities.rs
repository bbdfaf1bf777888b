use elk_core::audit::{entropy_fluxes, entropy_production, AuditContext, PointSample, AUDIT_EPS};
use elk_core::chemistry::{Mixture, ReactionNetwork, Species};
use elk_core::thermo::{HeatConductivity, MaterialParams, PhysicalConstants};
use proptest::prelude::*;

fn reactive_mixture(kf: f64, kb: f64) -> Mixture {
    let species = vec![
        Species::new("A", 1.0, 1, 0.7),
        Species::new("B", 1.0, -1, 1.3),
        Species::new("C", 2.0, 0, 0.4),
        Species::solvent("W", 1.5, 0, 0.0),
    ];
    let net = ReactionNetwork::new(vec![vec![-1], vec![-1], vec![1], vec![0]], vec![kf], vec![kb]).unwrap();
    Mixture::new(species, net).unwrap()
}

fn material(m: &Mixture, kappa: f64, eta: f64, eta_v: f64) -> MaterialParams {
    let mut mat = MaterialParams::new(&m.species, 1.3);
    mat.heat_conductivity = HeatConductivity::Scalar(kappa);
    mat.shear_viscosity = eta;
    mat.bulk_viscosity = eta_v;
    mat
}

/// Sinusoidal fields evaluated with exact derivatives at x.
fn synthetic(x: f64, a: &[f64; 8]) -> PointSample {
    let w = 2.0 * std::f64::consts::PI;
    let sy = |amp: f64, ph: f64, base: f64| (base + amp * (w * x + ph).sin(), amp * w * (w * x + ph).cos());
    let (ya, ga) = sy(0.04 * a[0], a[1], 0.05);
    let (yb, gb) = sy(0.04 * a[2], a[3], 0.06);
    let (yc, gc) = sy(0.05 * a[4], a[5], 0.1);
    let yw = 1.0 - ya - yb - yc;
    let (phi, gphi) = sy(1.5 * a[6], a[7], 0.2);
    let (t, gt) = sy(0.3 * a[0] * a[6], a[5], 1.0);
    let (rho, grho) = sy(0.2 * a[2], a[1], 1.0);
    let (p, gp) = sy(0.5 * a[4], a[3], 2.0);
    let (v, gv) = sy(a[7], a[0], 0.0);
    PointSample {
        rho,
        grad_rho: grho,
        y: vec![ya, yb, yc, yw],
        grad_y: vec![ga, gb, gc, -ga - gb - gc],
        phi,
        grad_phi: gphi,
        temp: t,
        grad_temp: gt,
        pressure: p,
        grad_pressure: gp,
        v,
        grad_v: gv,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn formulations_agree(
        a in prop::array::uniform8(-1.0f64..1.0),
        x in 0.0f64..1.0,
        kf in 0.1f64..10.0,
        kb in 0.1f64..10.0,
        kappa in 0.0f64..3.0,
        eta in 0.0f64..2.0,
        eta_v_frac in 0.0f64..3.0,
    ) {
        let m = reactive_mixture(kf, kb);
        let mat = material(&m, kappa, eta, -2.0 * eta + eta_v_frac);
        let c = PhysicalConstants::unit();
        let ctx = AuditContext { mixture: &m, material: &mat, constants: &c };
        let s = synthetic(x, &a);
        let b = entropy_production(&s, &ctx).unwrap();
        prop_assert!(b.chemical_form_error() <= 1e-10, "chem {:e}", b.chemical_form_error());
        prop_assert!(b.split_error() <= 1e-10, "split {:e}", b.split_error());
        prop_assert!(b.flux_form_error() <= 1e-10, "flux form {:e}", b.flux_form_error());
        prop_assert!(b.violations(AUDIT_EPS).is_empty(), "{:?}", b.violations(AUDIT_EPS));
        let sum = b.heat + b.viscous + b.diffusion + b.reaction;
        prop_assert!((sum - b.total).abs() <= 1e-10 * b.scale);

        let f = entropy_fluxes(&s, &ctx).unwrap();
        let fs = f.chemical.abs() + f.mix.abs() + f.pure.abs();
        prop_assert!((f.mix + f.pure - f.chemical).abs() <= 1e-12 * fs.max(1e-300));
        prop_assert!((f.electrochemical - f.chemical).abs() <= 1e-10 * fs.max(1e-300));
    }
}

#[test]
fn isothermal_single_charged_species_matches_quadratic_form() {
    let species = vec![Species::new("K", 2.0, 1, 0.8), Species::solvent("W", 1.0, 0, 0.0)];
    let m = Mixture::nonreactive(species).unwrap();
    let mat = material(&m, 0.0, 0.0, 0.0);
    let c = PhysicalConstants::unit();
    let ctx = AuditContext { mixture: &m, material: &mat, constants: &c };
    let mut s = synthetic(0.3, &[0.5, 0.1, 0.0, 0.0, 0.0, 0.0, 0.4, 0.7]);
    s.y = vec![0.1, 0.9];
    s.grad_y = vec![0.3, -0.3];
    s.grad_temp = 0.0;
    s.grad_v = 0.0;
    let b = entropy_production(&s, &ctx).unwrap();
    // ∑ m ρ_l M |∇(χ̄_1 − χ̄_L)|² with M = D/(k_B T)
    let t = s.temp;
    let g1 = t / 2.0 * 0.3 / 0.1 + 0.5 * s.grad_phi;
    let gl = t / 1.0 * (-0.3) / 0.9;
    let brute = 2.0 * s.rho * 0.1 * 0.8 / t * (g1 - gl).powi(2) / t;
    assert!((b.total - brute).abs() <= 1e-12 * brute, "{} vs {}", b.total, brute);
}
