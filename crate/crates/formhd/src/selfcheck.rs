//! Fast invariant suites behind the `selfcheck` subcommand.
//!
//! Every suite runs on an 8-cell mesh and finishes in well under a second,
//! so the whole battery is cheap enough to run after any build. The point
//! is not coverage (the test suite owns that) but a field diagnostic: a
//! quick, seed-deterministic yes/no on the identities the toolkit's
//! correctness rests on, printable as a table.
//!
//! The [`Sabotage`] hook deliberately corrupts one check so the harness
//! itself can be tested; a selfcheck that cannot fail is not evidence.

use std::f64::consts::TAU;
use std::sync::Arc;

use ndarray::ArrayD;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics;
use crate::eos::EquationOfState;
use crate::error::Result;
use crate::form::{DiscreteForm, VectorField};
use crate::mesh::GridMesh;
use crate::ops;
use crate::solver::{MhdSolver, TimeScheme};
use crate::state::FluidState;
use crate::thermo::{ClosureSpec, MhdCoefficients, ViscosityTriple};
use crate::{alt, curie};

/// Deliberate defects for testing the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sabotage {
    /// Flip the expected sign of the Hodge involution.
    HodgeSign,
}

#[derive(Debug, Clone, Copy)]
pub struct SelfcheckOptions {
    pub seed: u64,
    pub sabotage: Option<Sabotage>,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            sabotage: None,
        }
    }
}

/// One suite's verdict with the measured number behind it.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfcheckReport {
    pub seed: u64,
    pub results: Vec<SuiteResult>,
}

impl SelfcheckReport {
    pub fn ok(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    /// Fixed-width table, identical across reruns with the same seed.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{verdict}  {:<28} {}\n", r.name, r.detail));
        }
        out.push_str(&format!(
            "{} of {} suites passed (seed {})\n",
            self.results.iter().filter(|r| r.pass).count(),
            self.results.len(),
            self.seed
        ));
        out
    }
}

fn noise(mesh: &Arc<GridMesh>, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    let mut a = mesh.zeros();
    for v in a.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    a
}

fn noise_form(mesh: &Arc<GridMesh>, degree: usize, rng: &mut ChaCha8Rng) -> DiscreteForm {
    let ncomp = alt::binomial(mesh.dim(), degree);
    DiscreteForm::from_components(mesh, degree, (0..ncomp).map(|_| noise(mesh, rng)).collect())
        .expect("component count matches")
}

/// Single-wavelength random scalar; the solver suites need resolvable
/// fields, unlike the operator identities which hold for arbitrary data.
fn gentle(mesh: &Arc<GridMesh>, rng: &mut ChaCha8Rng, mean: f64, amp: f64) -> ArrayD<f64> {
    let n = mesh.dim();
    let terms: Vec<(f64, Vec<f64>)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
            )
        })
        .collect();
    mesh.sample(move |x| {
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

fn smooth_state(mesh: &Arc<GridMesh>, rng: &mut ChaCha8Rng) -> Result<FluidState> {
    let n = mesh.dim();
    let mut state = FluidState::zeros(mesh)?;
    state.nu1 = DiscreteForm::from_components(mesh, n, vec![gentle(mesh, rng, 0.5, 0.15)])?;
    state.nu2 = DiscreteForm::from_components(mesh, n, vec![gentle(mesh, rng, 0.8, 0.18)])?;
    state.s = DiscreteForm::from_components(mesh, n, vec![gentle(mesh, rng, 0.6, 0.12)])?;
    state.sigma = state.s.clone();
    state.u =
        VectorField::from_components(mesh, (0..n).map(|_| gentle(mesh, rng, 0.0, 0.1)).collect())?;
    let alpha = DiscreteForm::from_components(
        mesh,
        1,
        (0..n).map(|_| gentle(mesh, rng, 0.0, 0.05)).collect(),
    )?;
    state.beta = ops::exterior_derivative(&alpha)?;
    Ok(state)
}

fn dissipative() -> MhdCoefficients {
    MhdCoefficients {
        kappa_ss: 0.6,
        kappa_nn: 0.5,
        kappa_bb: 0.4,
        kappa_ns: 0.2,
        kappa_bs: 0.25,
        kappa_bn: -0.1,
        kappa_r: 0.3,
        viscosity: ViscosityTriple {
            homothety: 0.2,
            shear: 0.3,
            rotational: 0.1,
        },
    }
}

fn result(name: &str, pass: bool, detail: String) -> SuiteResult {
    SuiteResult {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn dd_zero(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for mesh in [
        GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?,
        GridMesh::bounded_box(&[8, 8], &[1.0; 2])?,
    ] {
        for degree in 0..=mesh.dim().saturating_sub(2) {
            let a = noise_form(&mesh, degree, rng);
            let dda = ops::exterior_derivative(&ops::exterior_derivative(&a)?)?;
            worst = worst.max(dda.max_abs());
        }
    }
    Ok(result(
        "calculus.dd_zero",
        worst <= 1e-13,
        format!("max |dd a| = {worst:.3e} on noise data"),
    ))
}

fn hodge_involution(rng: &mut ChaCha8Rng, sabotage: Option<Sabotage>) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let n = mesh.dim();
    let mut worst = 0.0f64;
    for degree in 0..=n {
        let a = noise_form(&mesh, degree, rng);
        let along = ops::hodge(&ops::hodge(&a)?)?;
        let mut sign = if (degree * (n - degree)) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        if sabotage == Some(Sabotage::HodgeSign) {
            sign = -sign;
        }
        let mut back = a.clone();
        back.axpy(-sign, &along)?;
        worst = worst.max(back.max_abs());
    }
    Ok(result(
        "calculus.hodge_involution",
        worst <= 1e-13,
        format!("max |a - sign . star star a| = {worst:.3e}"),
    ))
}

fn summation_by_parts(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let n = mesh.dim();
    let mut worst = 0.0f64;
    for degree in 0..n {
        let a = noise_form(&mesh, degree, rng);
        let b = noise_form(&mesh, n - degree - 1, rng);
        let lhs = ops::integrate(&ops::wedge(&ops::exterior_derivative(&a)?, &b)?)?;
        let rhs = ops::integrate(&ops::wedge(&a, &ops::exterior_derivative(&b)?)?)?;
        let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
        worst = worst.max((lhs + sign * rhs).abs());
    }
    Ok(result(
        "calculus.sbp",
        worst <= 1e-11,
        format!("max |<da, b> + (-1)^k <a, db>| = {worst:.3e}"),
    ))
}

fn closure_reciprocity() -> Result<SuiteResult> {
    let good = ClosureSpec::mhd(3, &dissipative()).validate();
    let mut broken = ClosureSpec::mhd(3, &dissipative());
    // Symmetrize a cross-parity coupling: reciprocity demands antisymmetry.
    broken.kappa[0][2] = broken.kappa[2][0];
    let bad = broken.validate();
    let pass = good.ok && !bad.ok;
    Ok(result(
        "thermo.reciprocity",
        pass,
        format!(
            "reference closure ok = {}, symmetrized cross coupling ok = {}",
            good.ok, bad.ok
        ),
    ))
}

fn entropy_production(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let eos = EquationOfState::default();
    let solver = MhdSolver::new(eos, ClosureSpec::mhd(3, &dissipative()))?;
    let mut min = f64::INFINITY;
    for _ in 0..3 {
        let state = smooth_state(&mesh, rng)?;
        let parts = solver.assemble(&state)?;
        min = min.min(parts.production.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    Ok(result(
        "thermo.production",
        min >= -1e-12,
        format!("min nodal production = {min:.3e} over 3 random states"),
    ))
}

fn gibbs_duhem(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let eos = EquationOfState::default();
    let state = smooth_state(&mesh, rng)?;
    let duals = crate::state::dual_fields(&state, &eos)?;
    let mut worst = 0.0f64;
    let nu1 = state.nu1.component(0);
    let nu2 = state.nu2.component(0);
    let s = state.s.component(0);
    for (idx, p) in duals.pressure.indexed_iter() {
        let rhs = duals.dual_nu1.component(0)[&idx] * nu1[&idx]
            + duals.dual_nu2.component(0)[&idx] * nu2[&idx]
            + duals.temperature[&idx] * s[&idx]
            - duals.internal_energy[&idx];
        worst = worst.max((p - rhs).abs());
    }
    Ok(result(
        "eos.gibbs_duhem",
        worst <= 1e-12,
        format!("max |p - (mu . nu + T s - e)| = {worst:.3e}"),
    ))
}

fn energy_conservation(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let eos = EquationOfState::default();
    let mut worst = 0.0f64;
    for coeffs in [MhdCoefficients::ideal(), dissipative()] {
        let solver = MhdSolver::new(eos.clone(), ClosureSpec::mhd(3, &coeffs))?;
        let mut state = smooth_state(&mesh, rng)?;
        let before = diagnostics::total_energy(&state, &eos)?;
        let dt = 0.1 * solver.cfl_advisory(&state)?;
        for _ in 0..10 {
            solver.step(&mut state, dt, TimeScheme::Rk4)?;
        }
        let after = diagnostics::total_energy(&state, &eos)?;
        worst = worst.max((after - before).abs() / before.abs());
    }
    Ok(result(
        "solver.energy",
        worst <= 1e-9,
        format!("worst relative drift over 10 steps = {worst:.3e}"),
    ))
}

fn entropy_and_divergence(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let eos = EquationOfState::default();
    let solver = MhdSolver::new(eos, ClosureSpec::mhd(3, &dissipative()))?;
    let mut state = smooth_state(&mesh, rng)?;
    let dt = 0.1 * solver.cfl_advisory(&state)?;
    let mut produced = ops::integrate(&state.sigma)?;
    let mut min_increment = f64::INFINITY;
    let mut divb = 0.0f64;
    for _ in 0..10 {
        solver.step(&mut state, dt, TimeScheme::Rk4)?;
        let now = ops::integrate(&state.sigma)?;
        min_increment = min_increment.min(now - produced);
        produced = now;
        divb = divb.max(diagnostics::divb_norm(&state)?);
    }
    let pass = min_increment >= -1e-12 && divb <= 1e-11;
    Ok(result(
        "solver.entropy",
        pass,
        format!("min step production = {min_increment:.3e}, max |d beta| = {divb:.3e}"),
    ))
}

fn curie_hodge_line(seed: u64) -> Result<SuiteResult> {
    let cosine = curie::hodge_alignment(2, 1, 60, seed)?;
    let commutant = curie::intertwiner_space(
        &curie::FiberRep::tensor(2),
        &curie::FiberRep::tensor(2),
        60,
        seed ^ 0x9e37,
    )?;
    let pass = cosine >= 1.0 - 1e-8 && commutant.dim == 3;
    Ok(result(
        "curie.hodge_line",
        pass,
        format!(
            "hodge cosine = {cosine:.12}, tensor commutant dim = {}",
            commutant.dim
        ),
    ))
}

fn entropy_split(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8, 8], &[1.0; 3])?;
    let state = smooth_state(&mesh, rng)?;
    let (total, produced, exchanged) = diagnostics::entropy_split(&state)?;
    let residual = (total - produced - exchanged).abs();
    Ok(result(
        "diagnostics.split",
        residual == 0.0,
        format!("|S - (produced + exchanged)| = {residual:.3e}"),
    ))
}

fn snapshot_roundtrip(rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let mesh = GridMesh::periodic_box(&[8, 8], &[1.0, 1.0])?;
    let a = noise_form(&mesh, 1, rng);
    let path = std::env::temp_dir().join(format!(
        "formhd_selfcheck_{}_{}.dfrm",
        std::process::id(),
        rng.random::<u64>()
    ));
    let written = crate::io::write_form(&path, &a);
    let read = written.and_then(|_| crate::io::read_form(&path));
    let _ = std::fs::remove_file(&path);
    let b = read?;
    let mut diff = 0.0f64;
    for (x, y) in a.components().iter().zip(b.components()) {
        for (u, v) in x.iter().zip(y.iter()) {
            diff = diff.max((u - v).abs());
        }
    }
    Ok(result(
        "io.roundtrip",
        diff == 0.0 && b.degree() == 1,
        format!("max reread difference = {diff:.3e}"),
    ))
}

/// Run every suite. Failures are reported, not returned as errors; an
/// `Err` here means a suite could not even run (I/O trouble and the like).
pub fn selfcheck(options: &SelfcheckOptions) -> Result<SelfcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let results = vec![
        dd_zero(&mut rng)?,
        hodge_involution(&mut rng, options.sabotage)?,
        summation_by_parts(&mut rng)?,
        closure_reciprocity()?,
        entropy_production(&mut rng)?,
        gibbs_duhem(&mut rng)?,
        energy_conservation(&mut rng)?,
        entropy_and_divergence(&mut rng)?,
        curie_hodge_line(options.seed)?,
        entropy_split(&mut rng)?,
        snapshot_roundtrip(&mut rng)?,
    ];
    Ok(SelfcheckReport {
        seed: options.seed,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_fresh_build_passes_every_suite() {
        let report = selfcheck(&SelfcheckOptions::default()).unwrap();
        assert!(report.ok(), "\n{}", report.table());
        assert_eq!(report.results.len(), 11);
    }

    #[test]
    fn the_sabotaged_hodge_check_fails_and_nothing_else() {
        let report = selfcheck(&SelfcheckOptions {
            seed: 1,
            sabotage: Some(Sabotage::HodgeSign),
        })
        .unwrap();
        assert!(!report.ok());
        for r in &report.results {
            if r.name == "calculus.hodge_involution" {
                assert!(!r.pass);
            } else {
                assert!(r.pass, "{} unexpectedly failed: {}", r.name, r.detail);
            }
        }
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let a = selfcheck(&SelfcheckOptions { seed: 7, sabotage: None }).unwrap();
        let b = selfcheck(&SelfcheckOptions { seed: 7, sabotage: None }).unwrap();
        assert_eq!(a.table(), b.table());
        let c = selfcheck(&SelfcheckOptions { seed: 8, sabotage: None }).unwrap();
        assert!(c.ok());
    }
}
