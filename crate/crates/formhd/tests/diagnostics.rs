//! End-to-end checks of the conservation diagnostics: the local energy law
//! converges at second order, the flux-surface balance closes on a
//! motionless resistive run, and the report invariants hold over time.

mod common;

use std::f64::consts::TAU;
use std::sync::Arc;

use formhd::diagnostics::{
    self, alfven_flux_check, DiagnosticsReport, FluxBalance, FluxHistory, FluxSurface,
};
use formhd::eos::EquationOfState;
use formhd::ops;
use formhd::solver::{MhdSolver, TimeScheme};
use formhd::state::FluidState;
use formhd::thermo::{ClosureSpec, MhdCoefficients, ViscosityTriple};
use formhd::{DiscreteForm, GridMesh, VectorField};

fn dissipative_coefficients() -> MhdCoefficients {
    MhdCoefficients {
        kappa_ss: 0.8,
        kappa_nn: 0.6,
        kappa_bb: 0.5,
        kappa_ns: 0.25,
        kappa_bs: 0.3,
        kappa_bn: -0.15,
        kappa_r: 0.4,
        viscosity: ViscosityTriple {
            homothety: 0.3,
            shear: 0.4,
            rotational: 0.1,
        },
    }
}

fn eos() -> EquationOfState {
    EquationOfState {
        b1: 0.4,
        b2: 0.1,
        ..EquationOfState::default()
    }
}

/// A single-wavelength analytic scalar: mean plus a few unit-frequency
/// products with random weights and phases. Gentle enough that a 16-cell
/// grid already sits in the asymptotic range of a refinement study.
fn gentle_scalar(
    mesh: &Arc<GridMesh>,
    rng: &mut impl rand::Rng,
    mean: f64,
    amp: f64,
) -> ndarray::ArrayD<f64> {
    let n = mesh.dim();
    let terms: Vec<(f64, Vec<f64>)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
            )
        })
        .collect();
    mesh.sample(|x| {
        let mut v = 0.0;
        for (w, phases) in &terms {
            let mut t = *w;
            for (a, phase) in phases.iter().enumerate() {
                t *= (TAU * x[a] / mesh.extent(a) + phase).sin();
            }
            v += t;
        }
        mean + amp * v / 3.0
    })
}

/// The same analytic state sampled on any mesh, so refinement studies see
/// one continuum configuration at several resolutions.
fn smooth_state(mesh: &Arc<GridMesh>, seed: u64) -> FluidState {
    let mut rng = common::rng(seed);
    let mut state = FluidState::zeros(mesh).unwrap();
    let n = mesh.dim();
    state.nu1 =
        DiscreteForm::from_components(mesh, n, vec![gentle_scalar(mesh, &mut rng, 0.5, 0.18)])
            .unwrap();
    state.nu2 =
        DiscreteForm::from_components(mesh, n, vec![gentle_scalar(mesh, &mut rng, 0.8, 0.2)])
            .unwrap();
    state.s =
        DiscreteForm::from_components(mesh, n, vec![gentle_scalar(mesh, &mut rng, 0.6, 0.15)])
            .unwrap();
    state.sigma = state.s.clone();
    let ucomps = (0..n)
        .map(|_| gentle_scalar(mesh, &mut rng, 0.0, 0.15))
        .collect();
    state.u = VectorField::from_components(mesh, ucomps).unwrap();
    let bcomps = (0..state.beta.components().len())
        .map(|_| gentle_scalar(mesh, &mut rng, 0.0, 0.2))
        .collect();
    state.beta = DiscreteForm::from_components(mesh, 2, bcomps).unwrap();
    state
}

#[test]
fn local_energy_residual_refines_at_second_order() {
    // One analytic state, three meshes; the whole point of the flux
    // assembly is that this residual is consistent, not just conservative.
    let eos = eos();
    let mut norms = Vec::new();
    let mut totals = Vec::new();
    for cells in [16usize, 32] {
        let mesh = GridMesh::periodic_box(&[cells; 3], &[1.0; 3]).unwrap();
        let state = smooth_state(&mesh, 2024);
        let solver = MhdSolver::new(
            eos.clone(),
            ClosureSpec::mhd(3, &dissipative_coefficients()),
        )
        .unwrap();
        let parts = solver.assemble(&state).unwrap();
        let residual = diagnostics::local_energy_residual(&state, &parts, &eos).unwrap();
        norms.push(diagnostics::l2_norm(&residual).unwrap());
        totals.push(ops::integrate(&residual).unwrap());
    }
    let slope = (norms[0] / norms[1]).log2();
    assert!(
        (1.8..=2.2).contains(&slope),
        "residual slope {slope}, norms {norms:?}"
    );
    // Integrated residual is the global energy rate, which the scheme holds
    // at rounding level regardless of resolution.
    for (total, norm) in totals.iter().zip(&norms) {
        assert!(
            total.abs() <= 1e-10 * norm.max(1.0),
            "integrated residual {total} against norm {norm}"
        );
    }
}

#[test]
fn plane_residual_refines_at_second_order_too() {
    let eos = eos();
    let mut norms = Vec::new();
    for cells in [24usize, 48] {
        let mesh = GridMesh::periodic_box(&[cells; 2], &[1.0; 2]).unwrap();
        let state = smooth_state(&mesh, 77);
        let solver = MhdSolver::new(
            eos.clone(),
            ClosureSpec::mhd(2, &dissipative_coefficients()),
        )
        .unwrap();
        let parts = solver.assemble(&state).unwrap();
        let residual = diagnostics::local_energy_residual(&state, &parts, &eos).unwrap();
        norms.push(diagnostics::l2_norm(&residual).unwrap());
    }
    let slope = (norms[0] / norms[1]).log2();
    assert!(
        (1.8..=2.2).contains(&slope),
        "plane residual slope {slope}, norms {norms:?}"
    );
}

#[test]
fn bounded_meshes_refuse_the_local_law() {
    let mesh = GridMesh::bounded_box(&[8, 8], &[1.0, 1.0]).unwrap();
    let state = smooth_state(&mesh, 5);
    let eos = eos();
    let solver = MhdSolver::new(eos.clone(), ClosureSpec::mhd(2, &MhdCoefficients::ideal()))
        .unwrap();
    let parts = solver.assemble(&state).unwrap();
    let err = diagnostics::local_energy_residual(&state, &parts, &eos).unwrap_err();
    assert!(err.to_string().contains("periodic"));
    // The report degrades gracefully instead of failing.
    let report = DiagnosticsReport::compute(&state, &parts, &eos, &[]).unwrap();
    assert!(report.energy_residual_norm.is_none());
}

/// A resistive run whose fluid stays put: the magnetic field is tiny, so
/// the Lorentz force (quadratic in the field) cannot stir the fluid above
/// rounding scale, while the flux balance (linear in the field) is clean.
fn motionless_resistive_setup(cells: usize) -> (MhdSolver, FluidState) {
    let mesh = GridMesh::periodic_box(&[cells, cells], &[1.0, 1.0]).unwrap();
    let mut state = FluidState::zeros(&mesh).unwrap();
    state.nu1.component_mut(0).fill(0.5);
    state.nu2.component_mut(0).fill(0.8);
    state.s.component_mut(0).fill(0.6);
    state.sigma = state.s.clone();
    state.beta = DiscreteForm::sample(&mesh, 2, |x, _| {
        1e-4 * (1.0 + 0.5 * (TAU * x[0]).sin() * (TAU * x[1]).cos() + 0.3 * (TAU * x[1] + 0.7).sin())
    })
    .unwrap();
    let coeffs = MhdCoefficients {
        kappa_bb: 0.5,
        ..MhdCoefficients::ideal()
    };
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(2, &coeffs)).unwrap();
    (solver, state)
}

#[test]
fn resistive_flux_balance_closes_on_a_motionless_run() {
    let cells = 32usize;
    let (solver, mut state) = motionless_resistive_setup(cells);
    let mesh = state.mesh().clone();
    let rectangle = FluxSurface {
        axes: (0, 1),
        fixed: vec![],
        range: [(5, 20), (8, 24)],
    };
    let full = FluxSurface::cross_section(&mesh, 0, 0).unwrap();
    // Explicit diffusion: the checkerboard mode decays at
    // 2 (kappa_bb / mu0) / h^2 = 1024, and RK4 only tolerates dt * rate
    // below about 2.8. Step well inside that bound.
    let dt = 1.0 / 2048.0;
    let steps = 256usize;
    let mut history = FluxHistory::new();
    let mut full_flux = Vec::new();
    for k in 0..=steps {
        let parts = solver.assemble(&state).unwrap();
        history.record(
            state.time,
            FluxBalance {
                flux: diagnostics::surface_flux(&state.beta, &rectangle).unwrap(),
                circulation: diagnostics::oriented_circulation(
                    &parts.fluxes[formhd::thermo::MHD_INDUCTION],
                    &rectangle,
                )
                .unwrap(),
            },
        );
        full_flux.push(diagnostics::surface_flux(&state.beta, &full).unwrap());
        if k < steps {
            solver.step(&mut state, dt, TimeScheme::Rk4).unwrap();
        }
    }
    // The fluid really did stay put.
    assert!(state.u.max_norm() <= 1e-8, "u grew to {}", state.u.max_norm());
    // Resistivity moved a measurable amount of flux through the rectangle.
    let report = alfven_flux_check(&history).unwrap();
    assert!(
        report.flux_change.abs() >= 1e-7,
        "decay too weak to test: {}",
        report.flux_change
    );
    assert!(
        report.relative <= 1e-4,
        "flux balance residual {} (change {}, transported {})",
        report.relative,
        report.flux_change,
        report.transported
    );
    // The closed cross-section holds its flux to rounding.
    let scale = full_flux[0].abs().max(1e-30);
    for f in &full_flux {
        assert!(
            (f - full_flux[0]).abs() <= 1e-12 * scale,
            "full-section flux drifted: {} vs {}",
            f,
            full_flux[0]
        );
    }
}

#[test]
fn reports_keep_the_entropy_split_exact_over_a_run() {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3]).unwrap();
    let mut state = smooth_state(&mesh, 91);
    // Close the flux form so divb stays at rounding over the run.
    let alpha = DiscreteForm::sample(&mesh, 1, |x, idx| match idx[0] {
        0 => 0.1 * (TAU * x[1]).sin(),
        1 => 0.12 * (TAU * x[2] + 0.4).cos(),
        _ => 0.08 * (TAU * x[0]).sin() * (TAU * x[1]).cos(),
    })
    .unwrap();
    state.beta = ops::exterior_derivative(&alpha).unwrap();
    let eos = eos();
    let solver = MhdSolver::new(
        eos.clone(),
        ClosureSpec::mhd(3, &dissipative_coefficients()),
    )
    .unwrap();
    let dt = 0.2 * solver.cfl_advisory(&state).unwrap();
    let mut produced_last = f64::NEG_INFINITY;
    let mut exchanged = Vec::new();
    let mut energies = Vec::new();
    for _ in 0..10 {
        let parts = solver.assemble(&state).unwrap();
        let report = DiagnosticsReport::compute(&state, &parts, &eos, &[]).unwrap();
        // Split identity is exact by construction and must stay that way.
        assert_eq!(
            report.entropy_total,
            report.entropy_produced + report.entropy_exchanged
        );
        assert!(report.entropy_produced >= produced_last - 1e-12);
        produced_last = report.entropy_produced;
        assert!(report.divb_norm <= 1e-11);
        exchanged.push(report.entropy_exchanged);
        energies.push(report.energy_total);
        for _ in 0..3 {
            solver.step(&mut state, dt, TimeScheme::Rk4).unwrap();
        }
    }
    // Exchange only reshuffles: its integral stays fixed.
    for e in &exchanged {
        assert!((e - exchanged[0]).abs() <= 1e-11);
    }
    for e in &energies {
        assert!((e - energies[0]).abs() <= 1e-8 * energies[0].abs());
    }
}

#[test]
fn resistive_symbol_matches_the_centered_laplacian() {
    // Plane-wave magnetic fields on a quiescent background are exact
    // eigenvectors of the resistive update, and the growth rate must be
    // -(kappa_bb / mu0) (sin(k0 h)^2 + sin(k1 h)^2) / h^2 mode by mode.
    // This pins the dissipation strength the flux-balance test relies on,
    // and documents the stiffest rate an explicit step has to resolve.
    let cells = 32usize;
    let mesh = GridMesh::periodic_box(&[cells, cells], &[1.0, 1.0]).unwrap();
    let coeffs = MhdCoefficients {
        kappa_bb: 0.5,
        ..MhdCoefficients::ideal()
    };
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(2, &coeffs)).unwrap();
    let h = 1.0 / cells as f64;
    for (m0, m1) in [(1usize, 0usize), (4, 0), (8, 0), (8, 8), (12, 5), (16, 0)] {
        let mut state = FluidState::zeros(&mesh).unwrap();
        state.nu1.component_mut(0).fill(0.5);
        state.nu2.component_mut(0).fill(0.8);
        state.s.component_mut(0).fill(0.6);
        state.sigma = state.s.clone();
        state.beta = DiscreteForm::sample(&mesh, 2, |x, _| {
            1e-6 * (TAU * (m0 as f64 * x[0] + m1 as f64 * x[1])).cos()
        })
        .unwrap();
        let parts = solver.assemble(&state).unwrap();
        let b = state.beta.component(0);
        let db = parts.rate.dbeta.component(0);
        let mut num = 0.0;
        let mut den = 0.0;
        for (bv, dv) in b.iter().zip(db.iter()) {
            num += bv * dv;
            den += bv * bv;
        }
        let lambda = num / den;
        let s0 = (TAU * m0 as f64 * h).sin() / h;
        let s1 = (TAU * m1 as f64 * h).sin() / h;
        let expected = -0.5 * (s0 * s0 + s1 * s1);
        assert!(
            (lambda - expected).abs() <= 1e-8 * expected.abs().max(1.0),
            "mode ({m0},{m1}): rate {lambda} vs symbol {expected}"
        );
    }
}
