//! Conservation bookkeeping for magnetofluid runs: global functionals, the
//! produced/exchanged entropy split, a pointwise energy balance, and flux
//! accounting through fixed coordinate rectangles.
//!
//! The solver conserves the total energy to rounding on periodic meshes,
//! but that is a single number. The local balance refines it: the energy
//! density obeys a discrete continuity law up to a residual that shrinks
//! at second order, with the flux assembled from recognizable pieces of
//! transport theory. Writing `K` for the kinetic density, `e` for the
//! internal density and `p` for pressure, the outgoing flux is
//!
//! ```text
//! Theta = i_u((K + e + p) vol)                    enthalpy carried by the flow
//!       +- dual_beta ^ i_u beta                   ideal induction (Poynting)
//!       + T ^ j_heat + mu ^ j_diff                conduction and diffusion
//!       - dual_beta ^ j_ind                       resistive Poynting
//!       - i_w vol,  w_j = sum_i u_i stress_ij     viscous working
//! ```
//!
//! with the ideal induction term signed `(-1)^(n-1)`, matching the sign the
//! induction equation itself carries. The residual of the continuity law,
//! energy rate plus d(Theta), vanishes identically for uniform states,
//! integrates to zero over a periodic box to rounding, and decreases in
//! norm at second order under refinement — the discrete product rule is
//! the only thing standing between it and zero.
//!
//! Flux surfaces are blocks of cells: a rectangle is named by inclusive
//! node ranges, its geometric boundary runs along the half-index faces,
//! and the boundary line integral evaluates the integrand by two-point
//! averages across each face. With that pairing of quadratures the
//! semi-discrete transport identity
//!
//! ```text
//! d/dt (flux through S) = (-1)^(n-1) * (circulation around dS)
//! ```
//!
//! holds exactly for a motionless resistive run, so the two sides — which
//! are genuinely independent estimates of the continuum quantities — can
//! only drift apart through time integration.

use ndarray::{ArrayD, Zip};
use serde::Serialize;

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::form::DiscreteForm;
use crate::mesh::GridMesh;
use crate::ops;
use crate::solver::RhsParts;
use crate::state::FluidState;
use crate::thermo::{MHD_DIFFUSION, MHD_HEAT, MHD_INDUCTION};

/// Total energy: kinetic plus internal plus magnetic, by the grid
/// quadrature.
pub fn total_energy(state: &FluidState, eos: &EquationOfState) -> Result<f64> {
    let duals = crate::state::dual_fields(state, eos)?;
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
    Ok(acc + 0.5 / eos.mu0 * ops::l2_inner(&state.beta, &state.beta)?)
}

/// Total mass, species totals weighted by the particle masses.
pub fn total_mass(state: &FluidState, eos: &EquationOfState) -> Result<f64> {
    Ok(eos.m1 * ops::integrate(&state.nu1)? + eos.m2 * ops::integrate(&state.nu2)?)
}

/// Entropy bookkeeping: (total, produced, exchanged). The produced part is
/// the running production integral; the exchanged part is the difference,
/// which transport alone cannot change.
pub fn entropy_split(state: &FluidState) -> Result<(f64, f64, f64)> {
    let total = ops::integrate(&state.s)?;
    let produced = ops::integrate(&state.sigma)?;
    Ok((total, produced, total - produced))
}

/// Maximum component of d(beta). In the plane beta is already top degree
/// and the norm is zero by definition.
pub fn divb_norm(state: &FluidState) -> Result<f64> {
    if state.beta.degree() == state.mesh().dim() {
        return Ok(0.0);
    }
    Ok(ops::exterior_derivative(&state.beta)?.max_abs())
}

/// Pointwise chain-rule rate of the energy density under one right-hand
/// side, as a top form. Its integral is the semi-discrete dE/dt, which the
/// scheme keeps at rounding level on periodic meshes.
pub fn energy_rate_density(
    state: &FluidState,
    parts: &RhsParts,
    eos: &EquationOfState,
) -> Result<DiscreteForm> {
    let mesh = state.mesh();
    let n = mesh.dim();
    let mut r = mesh.zeros();
    // Kinetic part: u . dm - |u|^2/2 d(rho), the exact inverse of the
    // product rule the solver used to recover du.
    for i in 0..n {
        Zip::from(&mut r)
            .and(state.u.component(i))
            .and(parts.momentum_rate.component(i))
            .for_each(|o, &uv, &mv| *o += uv * mv);
    }
    let ke = state.u.norm_sq();
    let mut drho: ArrayD<f64> = parts.rate.dnu1.component(0).clone();
    drho.mapv_inplace(|v| v * eos.m1);
    drho.zip_mut_with(parts.rate.dnu2.component(0), |o, &v| *o += eos.m2 * v);
    Zip::from(&mut r)
        .and(&ke)
        .and(&drho)
        .for_each(|o, &k, &dr| *o -= 0.5 * k * dr);
    // Internal part through the duals.
    Zip::from(&mut r)
        .and(parts.duals.dual_nu1.component(0))
        .and(parts.rate.dnu1.component(0))
        .for_each(|o, &mu, &d| *o += mu * d);
    Zip::from(&mut r)
        .and(parts.duals.dual_nu2.component(0))
        .and(parts.rate.dnu2.component(0))
        .for_each(|o, &mu, &d| *o += mu * d);
    Zip::from(&mut r)
        .and(&parts.duals.temperature)
        .and(parts.rate.ds.component(0))
        .for_each(|o, &t, &d| *o += t * d);
    // Magnetic part, componentwise against the rate.
    for ci in 0..state.beta.components().len() {
        Zip::from(&mut r)
            .and(state.beta.component(ci))
            .and(parts.rate.dbeta.component(ci))
            .for_each(|o, &b, &db| *o += b * db / eos.mu0);
    }
    DiscreteForm::from_components(mesh, n, vec![r])
}

/// Outgoing energy flux through each point, an (n-1)-form. See the module
/// notes for the piece-by-piece breakdown.
pub fn energy_flux(state: &FluidState, parts: &RhsParts) -> Result<DiscreteForm> {
    let mesh = state.mesh();
    let n = mesh.dim();
    let duals = &parts.duals;
    // Enthalpy carrier: kinetic + internal + pressure, moved by the flow.
    let mut carrier = DiscreteForm::zeros(mesh, n)?;
    {
        let ke = state.u.norm_sq();
        let comp = carrier.component_mut(0);
        Zip::from(comp)
            .and(&ke)
            .and(&duals.rho)
            .and(&duals.internal_energy)
            .and(&duals.pressure)
            .for_each(|o, &k, &r, &e, &p| *o = 0.5 * r * k + e + p);
    }
    let mut theta = ops::interior_product(&state.u, &carrier)?;
    // Ideal induction transport.
    let ideal_sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let poynting = ops::wedge(&duals.dual_beta, &ops::interior_product(&state.u, &state.beta)?)?;
    theta.axpy(ideal_sign, &poynting)?;
    // Conduction and diffusion carry T and mu along with their fluxes.
    let t_form = DiscreteForm::from_components(mesh, 0, vec![duals.temperature.clone()])?;
    theta.axpy(1.0, &ops::wedge(&t_form, &parts.fluxes[MHD_HEAT])?)?;
    theta.axpy(1.0, &ops::wedge(&duals.affinity, &parts.fluxes[MHD_DIFFUSION])?)?;
    // Resistive induction transport.
    theta.axpy(-1.0, &ops::wedge(&duals.dual_beta, &parts.fluxes[MHD_INDUCTION])?)?;
    // Viscous working, flux of the stress against the velocity.
    let w = ops::tensor_contract_vector(&state.u, &parts.stress)?;
    let vol = DiscreteForm::constant(mesh, n, &[1.0])?;
    theta.axpy(-1.0, &ops::interior_product(&w, &vol)?)?;
    Ok(theta)
}

/// Residual of the local energy law: rate density plus d(flux). Exact
/// summation by parts needs every axis periodic; bounded meshes are
/// refused rather than silently reported with boundary pollution.
pub fn local_energy_residual(
    state: &FluidState,
    parts: &RhsParts,
    eos: &EquationOfState,
) -> Result<DiscreteForm> {
    if !state.mesh().is_fully_periodic() {
        return Err(Error::Unsupported(
            "local energy residual needs a fully periodic mesh".into(),
        ));
    }
    let mut residual = energy_rate_density(state, parts, eos)?;
    let divergence = ops::exterior_derivative(&energy_flux(state, parts)?)?;
    residual.axpy(1.0, &divergence)?;
    Ok(residual)
}

/// L2 norm of a form under the grid quadrature.
pub fn l2_norm(a: &DiscreteForm) -> Result<f64> {
    Ok(ops::l2_inner(a, a)?.sqrt())
}

/// An axis-aligned rectangle of whole cells for flux accounting. Node
/// ranges are inclusive; the covered region extends half a cell beyond the
/// extreme nodes, so the boundary lies on half-index faces. On a periodic
/// axis the full range `0..=dims-1` wraps into a closed cross-section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxSurface {
    /// The two axes spanning the rectangle, strictly increasing.
    pub axes: (usize, usize),
    /// Fixed node index on every remaining axis, as (axis, index).
    pub fixed: Vec<(usize, usize)>,
    /// Inclusive node ranges along `axes.0` and `axes.1`.
    pub range: [(usize, usize); 2],
}

impl FluxSurface {
    /// Full periodic cross-section plane through `fixed`, spanning the two
    /// axes other than `normal_axis` (3D) or the whole plane (2D).
    pub fn cross_section(mesh: &GridMesh, normal_axis: usize, slab: usize) -> Result<Self> {
        let n = mesh.dim();
        let (axes, fixed) = match n {
            2 => ((0, 1), Vec::new()),
            3 => {
                if normal_axis >= 3 {
                    return Err(Error::MeshAxis {
                        axis: normal_axis,
                        reason: "cross-section normal outside the mesh".into(),
                    });
                }
                let mut tang = (0..3).filter(|&a| a != normal_axis);
                let a0 = tang.next().unwrap();
                let a1 = tang.next().unwrap();
                ((a0, a1), vec![(normal_axis, slab)])
            }
            d => return Err(Error::MeshDimension(d)),
        };
        let surface = FluxSurface {
            axes,
            fixed,
            range: [
                (0, mesh.dims()[axes.0] - 1),
                (0, mesh.dims()[axes.1] - 1),
            ],
        };
        surface.validate(mesh)?;
        Ok(surface)
    }

    /// Check the rectangle against a mesh. Bounded axes must leave one node
    /// of margin so the face averages have neighbors to read.
    pub fn validate(&self, mesh: &GridMesh) -> Result<()> {
        let n = mesh.dim();
        let (a0, a1) = self.axes;
        if a0 >= a1 || a1 >= n {
            return Err(Error::Config(format!(
                "surface axes ({a0}, {a1}) must be strictly increasing and inside the mesh"
            )));
        }
        let mut seen = vec![false; n];
        seen[a0] = true;
        seen[a1] = true;
        for &(axis, index) in &self.fixed {
            if axis >= n || seen[axis] {
                return Err(Error::Config(format!(
                    "surface fixes axis {axis} twice or out of range"
                )));
            }
            if index >= mesh.dims()[axis] {
                return Err(Error::Config(format!(
                    "surface slab index {index} outside axis {axis}"
                )));
            }
            seen[axis] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Config(
                "surface leaves an axis neither spanned nor fixed".into(),
            ));
        }
        for (slot, &axis) in [a0, a1].iter().enumerate() {
            let (lo, hi) = self.range[slot];
            let len = mesh.dims()[axis];
            if lo > hi || hi >= len {
                return Err(Error::Config(format!(
                    "surface range {lo}..={hi} invalid on axis {axis}"
                )));
            }
            if !mesh.periodic()[axis] && (lo == 0 || hi + 1 >= len) {
                return Err(Error::Config(format!(
                    "surface touches the bounded edge of axis {axis}; face averages need a neighbor"
                )));
            }
        }
        Ok(())
    }
}

fn wrapped(index: isize, len: usize) -> usize {
    index.rem_euclid(len as isize) as usize
}

fn node_value(
    arr: &ArrayD<f64>,
    mesh: &GridMesh,
    surface: &FluxSurface,
    i0: isize,
    i1: isize,
) -> f64 {
    let mut idx = vec![0usize; mesh.dim()];
    for &(axis, fixed) in &surface.fixed {
        idx[axis] = fixed;
    }
    idx[surface.axes.0] = wrapped(i0, mesh.dims()[surface.axes.0]);
    idx[surface.axes.1] = wrapped(i1, mesh.dims()[surface.axes.1]);
    arr[idx.as_slice()]
}

/// Flux of a 2-form through the rectangle: uniform cell quadrature of the
/// spanning component.
pub fn surface_flux(beta: &DiscreteForm, surface: &FluxSurface) -> Result<f64> {
    let mesh = beta.mesh();
    surface.validate(mesh)?;
    if beta.degree() != 2 {
        return Err(Error::DegreeMismatch(format!(
            "flux surfaces integrate 2-forms, got degree {}",
            beta.degree()
        )));
    }
    let comp = beta.component(crate::alt::position(
        mesh.dim(),
        &[surface.axes.0, surface.axes.1],
    ));
    let (lo0, hi0) = surface.range[0];
    let (lo1, hi1) = surface.range[1];
    let h0 = mesh.spacing()[surface.axes.0];
    let h1 = mesh.spacing()[surface.axes.1];
    let mut acc = 0.0;
    for i in lo0..=hi0 {
        for j in lo1..=hi1 {
            acc += node_value(comp, mesh, surface, i as isize, j as isize);
        }
    }
    Ok(acc * h0 * h1)
}

/// Counterclockwise line integral of a 1-form around the rectangle's
/// half-index boundary, each face read by a two-point average.
pub fn boundary_circulation(j: &DiscreteForm, surface: &FluxSurface) -> Result<f64> {
    let mesh = j.mesh();
    surface.validate(mesh)?;
    if j.degree() != 1 {
        return Err(Error::DegreeMismatch(format!(
            "boundary circulation takes a 1-form, got degree {}",
            j.degree()
        )));
    }
    let (lo0, hi0) = (surface.range[0].0 as isize, surface.range[0].1 as isize);
    let (lo1, hi1) = (surface.range[1].0 as isize, surface.range[1].1 as isize);
    let h0 = mesh.spacing()[surface.axes.0];
    let h1 = mesh.spacing()[surface.axes.1];
    let j0 = j.component(surface.axes.0);
    let j1 = j.component(surface.axes.1);
    let mut acc = 0.0;
    // Right face (axis 0 at hi + 1/2) up, left face (lo - 1/2) down.
    for t in lo1..=hi1 {
        acc += 0.5
            * h1
            * (node_value(j1, mesh, surface, hi0, t) + node_value(j1, mesh, surface, hi0 + 1, t));
        acc -= 0.5
            * h1
            * (node_value(j1, mesh, surface, lo0 - 1, t) + node_value(j1, mesh, surface, lo0, t));
    }
    // Top face (axis 1 at hi + 1/2) leftward, bottom face rightward.
    for t in lo0..=hi0 {
        acc -= 0.5
            * h0
            * (node_value(j0, mesh, surface, t, hi1) + node_value(j0, mesh, surface, t, hi1 + 1));
        acc += 0.5
            * h0
            * (node_value(j0, mesh, surface, t, lo1 - 1) + node_value(j0, mesh, surface, t, lo1));
    }
    Ok(acc)
}

/// Circulation signed the way the induction equation feeds it back into
/// the flux: the transport identity reads d(flux)/dt = oriented circulation
/// for a motionless resistive run.
pub fn oriented_circulation(j: &DiscreteForm, surface: &FluxSurface) -> Result<f64> {
    let sign = if j.mesh().dim() % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * boundary_circulation(j, surface)?)
}

/// One recorded sample of the two sides of the flux balance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FluxBalance {
    pub flux: f64,
    /// Oriented circulation of the instantaneous resistive flux.
    pub circulation: f64,
}

/// Time series of flux balances over a run.
#[derive(Debug, Clone, Default)]
pub struct FluxHistory {
    pub times: Vec<f64>,
    pub samples: Vec<FluxBalance>,
}

impl FluxHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, time: f64, sample: FluxBalance) {
        self.times.push(time);
        self.samples.push(sample);
    }
}

/// End-of-run comparison of flux change against transported circulation.
#[derive(Debug, Clone, Serialize)]
pub struct FluxBalanceReport {
    pub flux_change: f64,
    pub transported: f64,
    pub residual: f64,
    pub relative: f64,
}

/// Integrate uniformly sampled values in time at fourth order: composite
/// Simpson, with a 3/8 tail when the interval count is odd.
fn integrate_time(times: &[f64], values: &[f64]) -> f64 {
    let m = times.len() - 1;
    let dt = (times[m] - times[0]) / m as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
    if !uniform || m < 2 {
        let mut acc = 0.0;
        for k in 0..m {
            acc += 0.5 * (times[k + 1] - times[k]) * (values[k] + values[k + 1]);
        }
        return acc;
    }
    let simpson_upto = if m % 2 == 0 { m } else { m - 3 };
    let mut acc = 0.0;
    let mut k = 0;
    while k + 2 <= simpson_upto {
        acc += dt / 3.0 * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
        k += 2;
    }
    if simpson_upto < m {
        // Three intervals left; Newton's 3/8 rule keeps the order.
        acc += 3.0 * dt / 8.0
            * (values[m - 3] + 3.0 * values[m - 2] + 3.0 * values[m - 1] + values[m]);
    }
    acc
}

/// Compare both sides of the flux transport identity over a recorded
/// history. Valid for runs whose velocity stays at zero; a moving surface
/// would need advected-surface tracking, which this toolkit does not do.
pub fn alfven_flux_check(history: &FluxHistory) -> Result<FluxBalanceReport> {
    if history.times.len() < 2 || history.times.len() != history.samples.len() {
        return Err(Error::Config(
            "flux history needs at least two matched samples".into(),
        ));
    }
    let circ: Vec<f64> = history.samples.iter().map(|s| s.circulation).collect();
    let flux_change = history.samples.last().unwrap().flux - history.samples[0].flux;
    let transported = integrate_time(&history.times, &circ);
    let residual = flux_change - transported;
    // When neither side moved measurably (a closed cross-section, say),
    // the identity holds vacuously and the honest yardstick is the flux
    // magnitude itself, not the rounding noise in the two differences.
    let magnitude = history
        .samples
        .iter()
        .map(|s| s.flux.abs())
        .fold(0.0f64, f64::max);
    let scale = flux_change
        .abs()
        .max(transported.abs())
        .max(1e-9 * magnitude)
        .max(f64::MIN_POSITIVE);
    Ok(FluxBalanceReport {
        flux_change,
        transported,
        residual,
        relative: residual.abs() / scale,
    })
}

/// Species totals over time, for linear-combination drift checks.
#[derive(Debug, Clone, Default)]
pub struct SpeciesHistory {
    pub times: Vec<f64>,
    pub totals: Vec<Vec<f64>>,
}

impl SpeciesHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, time: f64, totals: Vec<f64>) {
        self.times.push(time);
        self.totals.push(totals);
    }
}

/// Drift of one linear combination of species totals.
#[derive(Debug, Clone, Serialize)]
pub struct SpeciesDrift {
    pub coefficients: Vec<f64>,
    pub start: f64,
    pub end: f64,
    pub drift_per_unit_time: f64,
}

/// Evaluate combination drifts over a history. A combination annihilating
/// the reaction weights should drift at rounding level; others measure the
/// reaction throughput.
pub fn species_invariants(
    history: &SpeciesHistory,
    combinations: &[Vec<f64>],
) -> Result<Vec<SpeciesDrift>> {
    if history.times.len() < 2 || history.times.len() != history.totals.len() {
        return Err(Error::Config(
            "species history needs at least two matched samples".into(),
        ));
    }
    let width = history.totals[0].len();
    if history.totals.iter().any(|t| t.len() != width) {
        return Err(Error::Config("ragged species history".into()));
    }
    let elapsed = history.times.last().unwrap() - history.times[0];
    if elapsed <= 0.0 {
        return Err(Error::Config("species history spans no time".into()));
    }
    let mut out = Vec::with_capacity(combinations.len());
    for combo in combinations {
        if combo.len() != width {
            return Err(Error::Config(format!(
                "combination has {} coefficients for {width} species",
                combo.len()
            )));
        }
        let dot = |totals: &[f64]| -> f64 {
            combo.iter().zip(totals).map(|(c, t)| c * t).sum()
        };
        let start = dot(&history.totals[0]);
        let end = dot(history.totals.last().unwrap());
        out.push(SpeciesDrift {
            coefficients: combo.clone(),
            start,
            end,
            drift_per_unit_time: (end - start) / elapsed,
        });
    }
    Ok(out)
}

/// Snapshot of every tracked functional at one report time.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub time: f64,
    pub energy_total: f64,
    pub mass_total: f64,
    pub entropy_total: f64,
    pub entropy_produced: f64,
    pub entropy_exchanged: f64,
    pub divb_norm: f64,
    /// None on bounded meshes, where the local law is unsupported.
    pub energy_residual_norm: Option<f64>,
    pub flux_balance: Vec<FluxBalance>,
}

impl DiagnosticsReport {
    /// Evaluate every functional on one state with its assembled right-hand
    /// side.
    pub fn compute(
        state: &FluidState,
        parts: &RhsParts,
        eos: &EquationOfState,
        surfaces: &[FluxSurface],
    ) -> Result<Self> {
        let (entropy_total, entropy_produced, entropy_exchanged) = entropy_split(state)?;
        let energy_residual_norm = if state.mesh().is_fully_periodic() {
            Some(l2_norm(&local_energy_residual(state, parts, eos)?)?)
        } else {
            None
        };
        let mut flux_balance = Vec::with_capacity(surfaces.len());
        for surface in surfaces {
            flux_balance.push(FluxBalance {
                flux: surface_flux(&state.beta, surface)?,
                circulation: oriented_circulation(&parts.fluxes[MHD_INDUCTION], surface)?,
            });
        }
        Ok(DiagnosticsReport {
            time: state.time,
            energy_total: total_energy(state, eos)?,
            mass_total: total_mass(state, eos)?,
            entropy_total,
            entropy_produced,
            entropy_exchanged,
            divb_norm: divb_norm(state)?,
            energy_residual_norm,
            flux_balance,
        })
    }

    /// CSV column names for a run with `surfaces` flux surfaces.
    pub fn csv_header(surfaces: usize) -> String {
        let mut cols = vec![
            "time".to_string(),
            "energy_total".to_string(),
            "mass_total".to_string(),
            "entropy_total".to_string(),
            "entropy_produced".to_string(),
            "entropy_exchanged".to_string(),
            "divb_norm".to_string(),
            "energy_residual_norm".to_string(),
        ];
        for i in 0..surfaces {
            cols.push(format!("flux_{i}"));
            cols.push(format!("circulation_{i}"));
        }
        cols.join(",")
    }

    /// One CSV row matching `csv_header`. Floats use Rust's shortest
    /// round-trip formatting, so a reread recovers the exact values.
    pub fn csv_row(&self) -> String {
        let mut fields = vec![
            format!("{}", self.time),
            format!("{}", self.energy_total),
            format!("{}", self.mass_total),
            format!("{}", self.entropy_total),
            format!("{}", self.entropy_produced),
            format!("{}", self.entropy_exchanged),
            format!("{}", self.divb_norm),
            match self.energy_residual_norm {
                Some(v) => format!("{v}"),
                None => "nan".to_string(),
            },
        ];
        for fb in &self.flux_balance {
            fields.push(format!("{}", fb.flux));
            fields.push(format!("{}", fb.circulation));
        }
        fields.join(",")
    }
}
