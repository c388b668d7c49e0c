//! Conservation and dissipation structure of the magnetofluid solver.
//!
//! The load-bearing test here evaluates the semi-discrete energy rate of a
//! single right-hand side on rough random data. Advection cancels against
//! the diamond forces, exchange fluxes against production terms and viscous
//! work against the stress divergence, all through summation by parts, so
//! the rate must vanish to rounding with dissipation fully on. Everything
//! else (drift over a time loop, monotone entropy, exact mass, resistive
//! decay against the analytic rate of the discrete operator) then probes the
//! time integration layered on top.

mod common;

use std::sync::Arc;

use formhd::boundary::WallPolicy;
use formhd::eos::EquationOfState;
use formhd::mesh::GridMesh;
use formhd::ndarray::ArrayD;
use formhd::ops;
use formhd::solver::{MhdSolver, RhsParts, TimeScheme};
use formhd::state::{dual_fields, FluidState};
use formhd::thermo::{ClosureSpec, MhdCoefficients, ViscosityTriple, MHD_HEAT};
use formhd::DiscreteForm;
use rand::Rng;

fn full_coefficients() -> MhdCoefficients {
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
        ..Default::default()
    }
}

/// State with positive densities and entropy: rough white noise riding on
/// constant means, for the machine-precision identities.
fn noisy_state(mesh: &Arc<GridMesh>, seed: u64) -> FluidState {
    let mut rng = common::rng(seed);
    let mut st = FluidState::zeros(mesh).unwrap();
    st.nu1
        .component_mut(0)
        .mapv_inplace(|_| 0.5 + rng.random_range(-0.08..0.08));
    st.nu2
        .component_mut(0)
        .mapv_inplace(|_| 0.8 + rng.random_range(-0.08..0.08));
    st.s.component_mut(0)
        .mapv_inplace(|_| 0.6 + rng.random_range(-0.05..0.05));
    st.sigma
        .component_mut(0)
        .mapv_inplace(|_| 0.55 + rng.random_range(-0.05..0.05));
    for i in 0..mesh.dim() {
        st.u
            .component_mut(i)
            .mapv_inplace(|_| rng.random_range(-0.2..0.2));
    }
    for i in 0..st.beta.components().len() {
        st.beta
            .component_mut(i)
            .mapv_inplace(|_| rng.random_range(-0.15..0.15));
    }
    st
}

/// Smooth low-harmonic state for the time-integration tests.
fn smooth_state(mesh: &Arc<GridMesh>, seed: u64) -> FluidState {
    let mut rng = common::rng(seed);
    let mut st = FluidState::zeros(mesh).unwrap();
    *st.nu1.component_mut(0) = common::smooth_scalar(mesh, &mut rng, 0.5, 0.08);
    *st.nu2.component_mut(0) = common::smooth_scalar(mesh, &mut rng, 0.8, 0.08);
    *st.s.component_mut(0) = common::smooth_scalar(mesh, &mut rng, 0.6, 0.05);
    *st.sigma.component_mut(0) = common::smooth_scalar(mesh, &mut rng, 0.55, 0.05);
    for i in 0..mesh.dim() {
        *st.u.component_mut(i) = common::smooth_scalar(mesh, &mut rng, 0.0, 0.15);
    }
    for i in 0..st.beta.components().len() {
        *st.beta.component_mut(i) = common::smooth_scalar(mesh, &mut rng, 0.0, 0.1);
    }
    st
}

fn total_energy(state: &FluidState, eos: &EquationOfState) -> f64 {
    let duals = dual_fields(state, eos).unwrap();
    let w = state.mesh().node_weights();
    let ke = state.u.norm_sq();
    let mut acc = 0.0;
    for (((wt, k), r), e) in w
        .iter()
        .zip(ke.iter())
        .zip(duals.rho.iter())
        .zip(duals.internal_energy.iter())
    {
        acc += wt * (0.5 * r * k + e);
    }
    acc + 0.5 / eos.mu0 * ops::l2_inner(&state.beta, &state.beta).unwrap()
}

/// Chain-rule energy rate of one right-hand side: kinetic bookkeeping from
/// the momentum rate, thermodynamic terms from the duals, magnetic term from
/// the flux pairing. Returns (rate, scale of the individual contributions).
fn energy_rate(state: &FluidState, parts: &RhsParts, eos: &EquationOfState) -> (f64, f64) {
    let w = state.mesh().node_weights();
    let ke = state.u.norm_sq();
    let mut drho: ArrayD<f64> = parts.rate.dnu1.component(0).clone();
    drho.mapv_inplace(|v| v * eos.m1);
    drho.zip_mut_with(parts.rate.dnu2.component(0), |o, &v| *o += eos.m2 * v);

    let kinetic = parts.momentum_rate.pair(&state.u).unwrap();
    let mut shift = 0.0;
    for ((wt, k), dr) in w.iter().zip(ke.iter()).zip(drho.iter()) {
        shift += wt * 0.5 * k * dr;
    }
    let mut internal = 0.0;
    for ((((wt, mu1), mu2), t), ((d1, d2), dsv)) in w
        .iter()
        .zip(parts.duals.dual_nu1.component(0).iter())
        .zip(parts.duals.dual_nu2.component(0).iter())
        .zip(parts.duals.temperature.iter())
        .zip(
            parts
                .rate
                .dnu1
                .component(0)
                .iter()
                .zip(parts.rate.dnu2.component(0).iter())
                .zip(parts.rate.ds.component(0).iter()),
        )
    {
        internal += wt * (mu1 * d1 + mu2 * d2 + t * dsv);
    }
    let magnetic = ops::pairing(&parts.rate.dbeta, &ops::hodge(&state.beta).unwrap()).unwrap()
        / eos.mu0;
    let rate = kinetic - shift + internal + magnetic;
    let scale = kinetic.abs() + shift.abs() + internal.abs() + magnetic.abs();
    (rate, scale.max(1.0))
}

fn meshes() -> Vec<Arc<GridMesh>> {
    vec![
        GridMesh::periodic_box(&[12, 10], &[1.0, 1.0]).unwrap(),
        GridMesh::periodic_box(&[8, 7, 6], &[1.0, 1.0, 1.0]).unwrap(),
    ]
}

#[test]
fn semi_discrete_energy_rate_vanishes_with_full_dissipation() {
    for mesh in meshes() {
        let n = mesh.dim();
        let state = noisy_state(&mesh, 41 + n as u64);
        for (label, closure) in [
            ("ideal", ClosureSpec::mhd(n, &MhdCoefficients::ideal())),
            ("dissipative", ClosureSpec::mhd(n, &full_coefficients())),
        ] {
            let solver = MhdSolver::new(eos(), closure).unwrap();
            let parts = solver.assemble(&state).unwrap();
            let (rate, scale) = energy_rate(&state, &parts, &solver.eos);
            assert!(
                rate.abs() <= 1e-12 * scale,
                "{label} energy rate {rate:.3e} against scale {scale:.3e} in {n}d"
            );
        }
    }
}

#[test]
fn rk4_energy_drift_is_time_integration_error_only() {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0, 1.0, 1.0]).unwrap();
    for (label, closure) in [
        ("ideal", ClosureSpec::mhd(3, &MhdCoefficients::ideal())),
        ("dissipative", ClosureSpec::mhd(3, &full_coefficients())),
    ] {
        let solver = MhdSolver::new(eos(), closure).unwrap();
        let mut state = smooth_state(&mesh, 7);
        let e0 = total_energy(&state, &solver.eos);
        let dt = 0.5 * solver.cfl_advisory(&state).unwrap();
        solver.run(&mut state, dt, 25, TimeScheme::Rk4).unwrap();
        let e1 = total_energy(&state, &solver.eos);
        let drift = ((e1 - e0) / e0).abs();
        assert!(
            drift <= 1e-8,
            "{label} run drifted by {drift:.3e} over 25 steps"
        );
    }
}

#[test]
fn total_mass_is_invariant_under_reaction_and_diffusion() {
    let mesh = GridMesh::periodic_box(&[8, 7, 6], &[1.0, 1.0, 1.0]).unwrap();
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(3, &full_coefficients())).unwrap();
    let state = noisy_state(&mesh, 3);
    // Rate level: the mass-weighted concentration rates integrate to zero.
    let parts = solver.assemble(&state).unwrap();
    let w = mesh.node_weights();
    let mut dm_total = 0.0;
    let mut dm_scale = 0.0;
    for ((wt, d1), d2) in w
        .iter()
        .zip(parts.rate.dnu1.component(0).iter())
        .zip(parts.rate.dnu2.component(0).iter())
    {
        dm_total += wt * (solver.eos.m1 * d1 + solver.eos.m2 * d2);
        dm_scale += wt * (solver.eos.m1 * d1.abs() + solver.eos.m2 * d2.abs());
    }
    assert!(
        dm_total.abs() <= 1e-13 * dm_scale.max(1.0),
        "mass rate {dm_total:.3e}"
    );
    // Run level: the integral of rho is constant over a smooth run.
    let mut state = smooth_state(&mesh, 11);
    let m0 = ops::integrate(&{
        let mut r = state.nu1.clone();
        r.scale(solver.eos.m1);
        r.axpy(solver.eos.m2, &state.nu2).unwrap();
        r
    })
    .unwrap();
    let dt = 0.5 * solver.cfl_advisory(&state).unwrap();
    solver.run(&mut state, dt, 20, TimeScheme::Rk4).unwrap();
    let m1 = ops::integrate(&{
        let mut r = state.nu1.clone();
        r.scale(solver.eos.m1);
        r.axpy(solver.eos.m2, &state.nu2).unwrap();
        r
    })
    .unwrap();
    assert!(
        ((m1 - m0) / m0).abs() <= 1e-13,
        "mass drifted {m0} -> {m1}"
    );
}

#[test]
fn entropy_is_monotone_and_the_split_total_is_exact() {
    let mesh = GridMesh::periodic_box(&[8, 7, 6], &[1.0, 1.0, 1.0]).unwrap();
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(3, &full_coefficients())).unwrap();
    let mut state = smooth_state(&mesh, 17);
    let dt = 0.4 * solver.cfl_advisory(&state).unwrap();
    let mut s_prev = ops::integrate(&state.s).unwrap();
    let mut sigma_prev = ops::integrate(&state.sigma).unwrap();
    let split0 = {
        let mut d = state.s.clone();
        d.axpy(-1.0, &state.sigma).unwrap();
        ops::integrate(&d).unwrap()
    };
    for step in 0..50 {
        solver.step(&mut state, dt, TimeScheme::Rk4).unwrap();
        let s_now = ops::integrate(&state.s).unwrap();
        let sigma_now = ops::integrate(&state.sigma).unwrap();
        assert!(
            s_now >= s_prev - 1e-12 * s_prev.abs().max(1.0),
            "entropy dropped at step {step}: {s_prev} -> {s_now}"
        );
        assert!(
            sigma_now >= sigma_prev - 1e-12 * sigma_prev.abs().max(1.0),
            "sigma dropped at step {step}: {sigma_prev} -> {sigma_now}"
        );
        s_prev = s_now;
        sigma_prev = sigma_now;
    }
    let split1 = {
        let mut d = state.s.clone();
        d.axpy(-1.0, &state.sigma).unwrap();
        ops::integrate(&d).unwrap()
    };
    assert!(
        (split1 - split0).abs() <= 1e-12 * split0.abs().max(1.0),
        "exchange content drifted: {split0} -> {split1}"
    );
}

#[test]
fn closed_flux_forms_stay_closed() {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0, 1.0, 1.0]).unwrap();
    let mut rng = common::rng(23);
    let mut state = smooth_state(&mesh, 29);
    // Replace beta by an exact form d(alpha) built from smooth potentials.
    let mut alpha = DiscreteForm::zeros(&mesh, 1).unwrap();
    for i in 0..3 {
        *alpha.component_mut(i) = common::smooth_scalar(&mesh, &mut rng, 0.0, 0.2);
    }
    state.beta = ops::exterior_derivative(&alpha).unwrap();
    let scale = state.beta.max_abs().max(1.0);
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(3, &full_coefficients())).unwrap();
    let dt = 0.5 * solver.cfl_advisory(&state).unwrap();
    solver.run(&mut state, dt, 15, TimeScheme::Rk4).unwrap();
    let residual = ops::exterior_derivative(&state.beta).unwrap().max_abs();
    assert!(
        residual <= 1e-11 * scale,
        "d(beta) grew to {residual:.3e}"
    );
}

#[test]
fn beltrami_field_decays_at_the_discrete_resistive_rate() {
    // B = (0, sin(2 pi x), cos(2 pi x)) is a curl eigenfield, so the Lorentz
    // force vanishes, heating is uniform and the velocity never wakes up;
    // induction reduces to a scalar decay whose exact rate is set by the
    // centered-difference symbol, kappa_bb (sin(2 pi h)/h)^2 / mu0.
    let cells = 16usize;
    let mesh = GridMesh::periodic_box(&[cells, 4, 4], &[1.0, 1.0, 1.0]).unwrap();
    let tau = std::f64::consts::TAU;
    let mut state = FluidState::zeros(&mesh).unwrap();
    state.nu1.component_mut(0).fill(0.5);
    state.nu2.component_mut(0).fill(0.8);
    state.s.component_mut(0).fill(0.6);
    state.sigma.component_mut(0).fill(0.6);
    // Components (0,1), (0,2), (1,2) hold (B_z, -B_y, B_x).
    let b0 = DiscreteForm::sample(&mesh, 2, |x, idx| match idx {
        [0, 1] => (tau * x[0]).cos(),
        [0, 2] => -(tau * x[0]).sin(),
        _ => 0.0,
    })
    .unwrap();
    state.beta = b0.clone();

    let mut coeffs = MhdCoefficients::ideal();
    coeffs.kappa_bb = 0.3;
    let solver = MhdSolver::new(EquationOfState::default(), ClosureSpec::mhd(3, &coeffs))
        .unwrap();
    let h = 1.0 / cells as f64;
    let omega = (tau * h).sin() / h;
    let lambda = coeffs.kappa_bb * omega * omega / solver.eos.mu0;

    let dt = 0.01;
    let steps = 20u64;
    solver.run(&mut state, dt, steps, TimeScheme::Rk4).unwrap();
    let factor = (-lambda * dt * steps as f64).exp();
    let mut expected = b0;
    expected.scale(factor);
    let err = common::form_distance(&state.beta, &expected);
    assert!(
        err <= 1e-6,
        "decay mismatch {err:.3e}, expected factor {factor:.6}"
    );
    assert!(
        state.u.max_norm() <= 1e-10,
        "velocity woke up in a force-free decay: {:.3e}",
        state.u.max_norm()
    );
    // The dissipated magnetic energy reappears as entropy.
    let s_total = ops::integrate(&state.s).unwrap();
    assert!(s_total > 0.6, "resistive heating missing, s = {s_total}");
}

#[test]
fn skew_couplings_transport_without_producing_entropy() {
    let mesh = GridMesh::periodic_box(&[8, 7, 6], &[1.0, 1.0, 1.0]).unwrap();
    let mut coeffs = MhdCoefficients::ideal();
    coeffs.kappa_bs = 0.4;
    coeffs.kappa_bn = -0.3;
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(3, &coeffs)).unwrap();
    let state = noisy_state(&mesh, 31);
    let parts = solver.assemble(&state).unwrap();
    // The couplings genuinely move fluxes...
    assert!(parts.fluxes[MHD_HEAT].max_abs() > 1e-3);
    // ...but the production is a pointwise zero.
    let force_scale = parts
        .forces
        .iter()
        .map(|f| f.max_abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let max_production = parts
        .production
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    assert!(
        max_production <= 1e-12 * force_scale * force_scale,
        "skew closure produced entropy: {max_production:.3e}"
    );
    // And the total entropy rate is pure transport, which integrates away.
    let w = mesh.node_weights();
    let mut ds_total = 0.0;
    let mut ds_scale = 0.0;
    for (wt, d) in w.iter().zip(parts.rate.ds.component(0).iter()) {
        ds_total += wt * d;
        ds_scale += wt * d.abs();
    }
    assert!(
        ds_total.abs() <= 1e-12 * ds_scale.max(1.0),
        "entropy total moved under a skew closure: {ds_total:.3e}"
    );
}

#[test]
fn conduction_cools_the_hottest_node() {
    let mesh = GridMesh::periodic_box(&[16, 16], &[1.0, 1.0]).unwrap();
    let tau = std::f64::consts::TAU;
    let mut state = FluidState::zeros(&mesh).unwrap();
    state.nu1.component_mut(0).fill(0.5);
    state.nu2.component_mut(0).fill(0.8);
    state.sigma.component_mut(0).fill(0.5);
    *state.s.component_mut(0) = mesh.sample(|x| {
        0.5 + 0.1 * (tau * x[0]).sin() * (tau * x[1]).sin()
    });
    let mut coeffs = MhdCoefficients::ideal();
    coeffs.kappa_ss = 0.2;
    let solver = MhdSolver::new(EquationOfState::default(), ClosureSpec::mhd(2, &coeffs))
        .unwrap();
    let parts = solver.assemble(&state).unwrap();
    let (hot, _) = state
        .s
        .component(0)
        .indexed_iter()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let rate_at_hot = parts.rate.ds.component(0)[&hot];
    assert!(
        rate_at_hot < 0.0,
        "entropy should flow out of the hot spot, rate {rate_at_hot:.3e}"
    );
    // Conduction without velocity leaves the concentrations alone.
    assert!(parts.rate.dnu1.max_abs() <= 1e-14);
}

#[test]
fn walls_pin_velocity_and_preserve_normal_flux() {
    let mesh = GridMesh::new(
        vec![6, 6, 6],
        vec![0.2, 0.2, 0.2],
        vec![false, true, true],
    )
    .unwrap();
    let mut state = smooth_state(&mesh, 37);
    // Start with the wall trace of u already zero, as the policy expects.
    for i in 0..3 {
        let nx = mesh.node_counts()[0];
        state
            .u
            .component_mut(i)
            .index_axis_mut(formhd::ndarray::Axis(0), 0)
            .fill(0.0);
        state
            .u
            .component_mut(i)
            .index_axis_mut(formhd::ndarray::Axis(0), nx - 1)
            .fill(0.0);
    }
    let normal_flux_before: Vec<f64> = state
        .beta
        .component(2) // tangential component (1,2) = B . n on the x walls
        .index_axis(formhd::ndarray::Axis(0), 0)
        .iter()
        .cloned()
        .collect();
    let s_wall_before = state.s.component(0)[[0, 2, 3]];

    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(3, &full_coefficients()))
        .unwrap()
        .with_walls(WallPolicy::default());
    let dt = 0.25 * solver.cfl_advisory(&state).unwrap();
    solver.run(&mut state, dt, 10, TimeScheme::Rk4).unwrap();

    let nx = mesh.node_counts()[0];
    for i in 0..3 {
        for slab in [0, nx - 1] {
            let max_u = state
                .u
                .component(i)
                .index_axis(formhd::ndarray::Axis(0), slab)
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            assert!(max_u == 0.0, "velocity crept onto the wall: {max_u:.3e}");
        }
    }
    let normal_flux_after: Vec<f64> = state
        .beta
        .component(2)
        .index_axis(formhd::ndarray::Axis(0), 0)
        .iter()
        .cloned()
        .collect();
    for (a, b) in normal_flux_before.iter().zip(&normal_flux_after) {
        assert!((a - b).abs() <= 1e-15, "B.n moved on the wall");
    }
    assert_eq!(state.s.component(0)[[0, 2, 3]], s_wall_before);
}

#[test]
fn lower_order_schemes_converge_toward_the_rk4_answer() {
    let mesh = GridMesh::periodic_box(&[6, 6], &[1.0, 1.0]).unwrap();
    let solver = MhdSolver::new(eos(), ClosureSpec::mhd(2, &full_coefficients())).unwrap();
    let reference = {
        let mut st = smooth_state(&mesh, 43);
        solver.run(&mut st, 0.001, 80, TimeScheme::Rk4).unwrap();
        st
    };
    let mut errors = Vec::new();
    for (steps, dt) in [(20u64, 0.004), (40, 0.002)] {
        let mut st = smooth_state(&mesh, 43);
        solver.run(&mut st, dt, steps, TimeScheme::Midpoint).unwrap();
        errors.push(common::form_distance(&st.s, &reference.s));
    }
    let slope = common::refinement_slope(errors[0], errors[1]);
    assert!(
        (1.6..2.6).contains(&slope),
        "midpoint convergence slope {slope:.2} from {errors:?}"
    );
    // Euler at the same step is strictly worse.
    let mut st = smooth_state(&mesh, 43);
    solver.run(&mut st, 0.002, 40, TimeScheme::Euler).unwrap();
    let euler_err = common::form_distance(&st.s, &reference.s);
    assert!(euler_err > errors[1]);
}
