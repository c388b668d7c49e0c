//! Scenario configuration and the batch runner behind the command line.
//!
//! A scenario is a single TOML document with a versioned `schema` field and
//! the blocks `mesh`, `eos`, `closure`, `initial`, `run`, `bc`, `checks`,
//! plus any number of `[[flux_surface]]` tables. Unknown keys are rejected,
//! and every configuration error names the offending field by its dotted
//! path. A minimal document looks like:
//!
//! ```toml
//! schema = 1
//!
//! [mesh]
//! dims = [16, 16]
//! spacing = [0.0625, 0.0625]
//! periodic = true
//!
//! [initial]
//! profile = "ideal_mhd_smooth"
//!
//! [run]
//! dt = 0.0078125
//! t_end = 1.0
//! ```
//!
//! Everything else has defaults: the equation of state falls back to the
//! reference two-species gas, the closure to the ideal (all-zero) one, and
//! the wall policy to insulating no-slip walls on bounded axes.
//!
//! [`run_scenario`] integrates the configured state to `t_end`, writing a
//! diagnostics row per report time into `<name>.csv`, an end-of-run JSON
//! summary with pass/fail verdicts for the configured checks into
//! `<name>_summary.json`, and optionally a final checkpoint. A numeric
//! blow-up ends the run early but keeps the partial artifacts; the summary
//! then carries the failure message instead of silently truncating.

use std::f64::consts::TAU;
use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::WallPolicy;
use crate::curie;
use crate::diagnostics::{alfven_flux_check, DiagnosticsReport, FluxHistory, FluxSurface};
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::form::{DiscreteForm, VectorField};
use crate::io::{self, StateSnapshot};
use crate::mesh::GridMesh;
use crate::ops;
use crate::solver::{MhdSolver, TimeScheme};
use crate::state::FluidState;
use crate::thermo::{ClosureSpec, ClosureReport, MhdCoefficients, Parity, ViscosityTriple};

/// The schema generation this build reads.
pub const SCHEMA_VERSION: u32 = 1;

/// Parsed scenario document. Obtain one through [`Scenario::from_toml`] or
/// [`Scenario::from_path`]; both validate the cross-field invariants, so a
/// value of this type is always runnable in principle.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub eos: EosConfig,
    #[serde(default)]
    pub closure: ClosureConfig,
    pub initial: InitialConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub bc: BcConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub flux_surface: Vec<SurfaceConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    #[serde(default)]
    pub periodic: PeriodicSpec,
}

/// `periodic = true` for all axes at once, or one flag per axis.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PeriodicSpec {
    Uniform(bool),
    PerAxis(Vec<bool>),
}

impl Default for PeriodicSpec {
    fn default() -> Self {
        PeriodicSpec::Uniform(true)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EosConfig {
    pub c0: f64,
    pub c_v: f64,
    pub b1: f64,
    pub b2: f64,
    pub m1: f64,
    pub m2: f64,
    pub mu0: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        let d = EquationOfState::default();
        Self {
            c0: d.c0,
            c_v: d.cv,
            b1: d.b1,
            b2: d.b2,
            m1: d.m1,
            m2: d.m2,
            mu0: d.mu0,
        }
    }
}

/// Named coefficients of the magnetofluid closure, with two escape hatches
/// for validation experiments: `kappa` replaces the assembled coupling
/// matrix entry for entry, and `parities` relabels the processes. The
/// runner still refuses closures that fail validation, so the overrides
/// are only useful with the `validate` subcommand.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ClosureConfig {
    pub kappa_ss: f64,
    pub kappa_nn: f64,
    pub kappa_bb: f64,
    pub kappa_ns: f64,
    pub kappa_bs: f64,
    pub kappa_bn: f64,
    pub kappa_r: f64,
    pub viscosity: ViscosityConfig,
    pub kappa: Option<Vec<Vec<f64>>>,
    pub parities: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ViscosityConfig {
    pub homothety: f64,
    pub shear: f64,
    pub rotational: f64,
}

/// Initial data: either a named analytic profile with its parameters, or a
/// checkpoint written by an earlier run. The two are mutually exclusive.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub profile: Option<ProfileName>,
    pub checkpoint: Option<PathBuf>,
    /// Perturbation scale; each profile has its own default.
    pub amplitude: Option<f64>,
    /// Seed for `random_smooth`; falls back to `run.seed`.
    pub seed: Option<u64>,
    pub nu1: Option<f64>,
    pub nu2: Option<f64>,
    pub s: Option<f64>,
    /// Constant velocity components for the `uniform` profile.
    pub u: Option<Vec<f64>>,
    /// Constant flux components (lexicographic pairs) for `uniform`.
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Uniform,
    IdealMhdSmooth,
    ReactionRelax,
    ResistiveDecay,
    RandomSmooth,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Fixed step size; give exactly one of `dt` and `cfl`.
    pub dt: Option<f64>,
    /// Step as a fraction of the solver's advisory for the initial state.
    pub cfl: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeConfig,
    /// Time between diagnostics rows; defaults to `t_end / 10`. Reports
    /// land on the first step at or past each multiple, so the cadence is
    /// independent of the step size.
    pub report_every: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Write `<name>_final.state` at the end of a healthy run.
    #[serde(default)]
    pub checkpoint_final: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeConfig {
    Euler,
    Midpoint,
    Rk4,
}

fn default_scheme() -> SchemeConfig {
    SchemeConfig::Rk4
}

impl SchemeConfig {
    pub fn to_scheme(self) -> TimeScheme {
        match self {
            SchemeConfig::Euler => TimeScheme::Euler,
            SchemeConfig::Midpoint => TimeScheme::Midpoint,
            SchemeConfig::Rk4 => TimeScheme::Rk4,
        }
    }
}

/// Wall treatment on bounded axes; ignored on fully periodic meshes.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BcConfig {
    pub pin_velocity: bool,
    pub hold_thermo: bool,
    pub hold_flux: bool,
    pub wall_temperature: Option<f64>,
}

impl Default for BcConfig {
    fn default() -> Self {
        let d = WallPolicy::default();
        Self {
            pin_velocity: d.pin_velocity,
            hold_thermo: d.hold_thermo,
            hold_flux: d.hold_flux,
            wall_temperature: d.wall_temperature,
        }
    }
}

/// Tolerances graded in the end-of-run summary. Only the checks that are
/// present are graded; an empty block means the summary reports drifts
/// without verdicts.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    /// Relative change of total energy between first and last report.
    pub energy_drift: Option<f64>,
    /// Relative change of total mass per unit time.
    pub mass_drift: Option<f64>,
    /// Largest decrease of produced entropy between consecutive reports.
    pub entropy_backstep: Option<f64>,
    /// Largest `divb_norm` over the run.
    pub divb_max: Option<f64>,
    /// Largest absolute change of the exchanged-entropy integral.
    pub exchanged_drift: Option<f64>,
    /// Largest rise of `max |affinity|` between consecutive reports.
    pub affinity_rise: Option<f64>,
    /// Worst relative flux-balance residual over the configured surfaces.
    pub flux_balance: Option<f64>,
}

/// One flux surface, in one of two styles: a full periodic cross-section
/// (`normal_axis` + `slab`), or an explicit rectangle (`axes` + `range`,
/// with `fixed` pinning the remaining axes in three dimensions).
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    pub normal_axis: Option<usize>,
    pub slab: Option<usize>,
    pub axes: Option<[usize; 2]>,
    pub range: Option<[[usize; 2]; 2]>,
    pub fixed: Vec<[usize; 2]>,
}

impl Scenario {
    /// Parse and validate a scenario document.
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let de = toml::de::Deserializer::parse(text)
            .map_err(|e| Error::Config(e.message().to_string()))?;
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            if path == "." {
                Error::Config(message)
            } else {
                Error::Config(format!("{path}: {message}"))
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Read a scenario from a file.
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text)
    }

    /// Cross-field validation with exact field paths in every message.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema: version {} unsupported (this build reads {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let n = self.mesh.dims.len();
        if !(n == 2 || n == 3) {
            return Err(Error::Config(format!(
                "mesh.dims: {n} axes given; the toolkit covers 2 and 3"
            )));
        }
        if self.mesh.spacing.len() != n {
            return Err(Error::Config(format!(
                "mesh.spacing: {} entries for {n} axes",
                self.mesh.spacing.len()
            )));
        }
        for (a, h) in self.mesh.spacing.iter().enumerate() {
            if !(*h > 0.0) {
                return Err(Error::Config(format!(
                    "mesh.spacing[{a}]: must be positive, got {h}"
                )));
            }
        }
        if let PeriodicSpec::PerAxis(flags) = &self.mesh.periodic {
            if flags.len() != n {
                return Err(Error::Config(format!(
                    "mesh.periodic: {} flags for {n} axes",
                    flags.len()
                )));
            }
        }
        for (path, v) in [
            ("eos.c0", self.eos.c0),
            ("eos.c_v", self.eos.c_v),
            ("eos.m1", self.eos.m1),
            ("eos.m2", self.eos.m2),
            ("eos.mu0", self.eos.mu0),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{path}: must be positive, got {v}")));
            }
        }
        self.stoichiometric_weights()
            .map_err(|e| Error::Config(format!("eos.m1, eos.m2: {e}")))?;
        match (self.run.dt, self.run.cfl) {
            (Some(dt), None) if dt > 0.0 => {}
            (None, Some(c)) if c > 0.0 => {}
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "run.dt, run.cfl: give exactly one of the two".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "run.dt: required (or run.cfl for an advisory-based step)".into(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "run.dt / run.cfl: step control must be positive".into(),
                ))
            }
        }
        if !(self.run.t_end > 0.0) {
            return Err(Error::Config(format!(
                "run.t_end: must be positive, got {}",
                self.run.t_end
            )));
        }
        if let Some(r) = self.run.report_every {
            if !(r > 0.0) {
                return Err(Error::Config(format!(
                    "run.report_every: must be positive, got {r}"
                )));
            }
        }
        match (&self.initial.profile, &self.initial.checkpoint) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "initial.profile, initial.checkpoint: give one or the other".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "initial.profile: required unless initial.checkpoint is set".into(),
                ))
            }
            _ => {}
        }
        if self.initial.checkpoint.is_some() {
            let parameters = self.initial.amplitude.is_some()
                || self.initial.seed.is_some()
                || self.initial.nu1.is_some()
                || self.initial.nu2.is_some()
                || self.initial.s.is_some()
                || self.initial.u.is_some()
                || self.initial.beta.is_some();
            if parameters {
                return Err(Error::Config(
                    "initial: profile parameters have no effect with a checkpoint".into(),
                ));
            }
        }
        if let Some(u) = &self.initial.u {
            if u.len() != n {
                return Err(Error::Config(format!(
                    "initial.u: {} components for {n} axes",
                    u.len()
                )));
            }
        }
        if let Some(b) = &self.initial.beta {
            let want = crate::alt::binomial(n, 2);
            if b.len() != want {
                return Err(Error::Config(format!(
                    "initial.beta: {} components, a flux form on {n} axes has {want}",
                    b.len()
                )));
            }
        }
        if self.checks.flux_balance.is_some() && self.flux_surface.is_empty() {
            return Err(Error::Config(
                "checks.flux_balance: needs at least one [[flux_surface]]".into(),
            ));
        }
        for (i, surf) in self.flux_surface.iter().enumerate() {
            let sectional = surf.normal_axis.is_some() || surf.slab.is_some();
            let explicit = surf.axes.is_some() || surf.range.is_some() || !surf.fixed.is_empty();
            if sectional && explicit {
                return Err(Error::Config(format!(
                    "flux_surface[{i}]: mix of cross-section and rectangle styles"
                )));
            }
            if sectional && (surf.normal_axis.is_none() || surf.slab.is_none()) {
                return Err(Error::Config(format!(
                    "flux_surface[{i}]: cross-section style needs both normal_axis and slab"
                )));
            }
            if !sectional && (surf.axes.is_none() || surf.range.is_none()) {
                return Err(Error::Config(format!(
                    "flux_surface[{i}]: rectangle style needs both axes and range"
                )));
            }
        }
        Ok(())
    }

    /// Mass weights `(M1, M2)` and the stoichiometric ratio `k = M1 / M2`
    /// of the interconversion reaction `1 <-> k x 2`. The ratio must be a
    /// positive integer or the reaction cannot conserve mass.
    pub fn stoichiometric_weights(&self) -> Result<(u64, [f64; 2])> {
        let k = (self.eos.m1 / self.eos.m2).round();
        let residual = self.eos.m1 - k * self.eos.m2;
        if k < 1.0 || residual.abs() > 1e-9 * self.eos.m1.abs() {
            return Err(Error::Stoichiometry(residual));
        }
        Ok((k as u64, [self.eos.m1, self.eos.m2]))
    }

    pub fn dim(&self) -> usize {
        self.mesh.dims.len()
    }

    pub fn build_mesh(&self) -> Result<Arc<GridMesh>> {
        let n = self.dim();
        let periodic = match &self.mesh.periodic {
            PeriodicSpec::Uniform(flag) => vec![*flag; n],
            PeriodicSpec::PerAxis(flags) => flags.clone(),
        };
        GridMesh::new(self.mesh.dims.clone(), self.mesh.spacing.clone(), periodic)
    }

    pub fn build_eos(&self) -> EquationOfState {
        EquationOfState {
            c0: self.eos.c0,
            cv: self.eos.c_v,
            b1: self.eos.b1,
            b2: self.eos.b2,
            m1: self.eos.m1,
            m2: self.eos.m2,
            mu0: self.eos.mu0,
            ..EquationOfState::default()
        }
    }

    pub fn build_closure(&self) -> Result<ClosureSpec> {
        let n = self.dim();
        let c = &self.closure;
        let coefficients = MhdCoefficients {
            kappa_ss: c.kappa_ss,
            kappa_nn: c.kappa_nn,
            kappa_bb: c.kappa_bb,
            kappa_ns: c.kappa_ns,
            kappa_bs: c.kappa_bs,
            kappa_bn: c.kappa_bn,
            kappa_r: c.kappa_r,
            viscosity: ViscosityTriple {
                homothety: c.viscosity.homothety,
                shear: c.viscosity.shear,
                rotational: c.viscosity.rotational,
            },
        };
        let mut spec = ClosureSpec::mhd(n, &coefficients);
        if let Some(matrix) = &c.kappa {
            if matrix.len() != 4 || matrix.iter().any(|row| row.len() != 4) {
                return Err(Error::Config(
                    "closure.kappa: expected a 4 x 4 matrix".into(),
                ));
            }
            spec.kappa = matrix.clone();
        }
        if let Some(labels) = &c.parities {
            if labels.len() != 4 {
                return Err(Error::Config(format!(
                    "closure.parities: {} labels for 4 processes",
                    labels.len()
                )));
            }
            for (i, label) in labels.iter().enumerate() {
                spec.processes[i].parity = match label.as_str() {
                    "even" => Parity::Even,
                    "odd" => Parity::Odd,
                    other => {
                        return Err(Error::Config(format!(
                            "closure.parities[{i}]: unknown parity {other:?} (even or odd)"
                        )))
                    }
                };
            }
        }
        Ok(spec)
    }

    pub fn build_walls(&self) -> WallPolicy {
        WallPolicy {
            pin_velocity: self.bc.pin_velocity,
            hold_thermo: self.bc.hold_thermo,
            hold_flux: self.bc.hold_flux,
            wall_temperature: self.bc.wall_temperature,
        }
    }

    pub fn build_surfaces(&self, mesh: &Arc<GridMesh>) -> Result<Vec<FluxSurface>> {
        let mut out = Vec::with_capacity(self.flux_surface.len());
        for (i, cfg) in self.flux_surface.iter().enumerate() {
            let with_path = |e: Error| Error::Config(format!("flux_surface[{i}]: {e}"));
            let surface = if let (Some(axis), Some(slab)) = (cfg.normal_axis, cfg.slab) {
                FluxSurface::cross_section(mesh, axis, slab).map_err(with_path)?
            } else {
                let axes = cfg.axes.unwrap();
                let range = cfg.range.unwrap();
                let surface = FluxSurface {
                    axes: (axes[0], axes[1]),
                    fixed: cfg.fixed.iter().map(|p| (p[0], p[1])).collect(),
                    range: [(range[0][0], range[0][1]), (range[1][0], range[1][1])],
                };
                surface.validate(mesh).map_err(with_path)?;
                surface
            };
            out.push(surface);
        }
        Ok(out)
    }

    /// Construct the initial state from the profile or checkpoint.
    pub fn build_state(&self, mesh: &Arc<GridMesh>) -> Result<FluidState> {
        if let Some(path) = &self.initial.checkpoint {
            return load_checkpoint(path, mesh);
        }
        let profile = self.initial.profile.expect("validated");
        let init = &self.initial;
        match profile {
            ProfileName::Uniform => uniform_state(mesh, init),
            ProfileName::IdealMhdSmooth => {
                ideal_mhd_smooth(mesh, init.amplitude.unwrap_or(0.05))
            }
            ProfileName::ReactionRelax => {
                let mut init = init.clone();
                init.nu1 = Some(init.nu1.unwrap_or(0.6));
                init.nu2 = Some(init.nu2.unwrap_or(0.9));
                init.s = Some(init.s.unwrap_or(0.5));
                uniform_state(mesh, &init)
            }
            ProfileName::ResistiveDecay => {
                resistive_decay(mesh, init, init.amplitude.unwrap_or(1e-4))
            }
            ProfileName::RandomSmooth => random_smooth(
                mesh,
                init.seed.unwrap_or(self.run.seed),
                init.amplitude.unwrap_or(0.1),
            ),
        }
    }
}

fn load_checkpoint(path: &Path, mesh: &Arc<GridMesh>) -> Result<FluidState> {
    let loaded = io::read_state(path)?;
    if !loaded.mesh.same_mesh(mesh) {
        return Err(Error::Config(format!(
            "initial.checkpoint: mesh in {} differs from [mesh]",
            path.display()
        )));
    }
    let mut state = FluidState::zeros(mesh)?;
    state.time = loaded.time;
    state.u = loaded.vector("u")?.clone();
    state.nu1 = loaded.form("nu1")?.clone();
    state.nu2 = loaded.form("nu2")?.clone();
    state.s = loaded.form("s")?.clone();
    state.sigma = loaded.form("sigma")?.clone();
    state.beta = loaded.form("beta")?.clone();
    state.validate_shapes()?;
    Ok(state)
}

fn uniform_state(mesh: &Arc<GridMesh>, init: &InitialConfig) -> Result<FluidState> {
    let n = mesh.dim();
    let mut state = FluidState::zeros(mesh)?;
    state.nu1.component_mut(0).fill(init.nu1.unwrap_or(0.5));
    state.nu2.component_mut(0).fill(init.nu2.unwrap_or(0.8));
    state.s.component_mut(0).fill(init.s.unwrap_or(0.6));
    state.sigma = state.s.clone();
    if let Some(u) = &init.u {
        state.u = VectorField::from_components(
            mesh,
            u.iter()
                .map(|&v| {
                    let mut a = mesh.zeros();
                    a.fill(v);
                    a
                })
                .collect(),
        )?;
    }
    if let Some(b) = &init.beta {
        state.beta = DiscreteForm::constant(mesh, 2, b)?;
    }
    let _ = n;
    Ok(state)
}

/// Deterministic smooth fields with a closed flux form, sized so that a
/// moderate grid resolves every mode: single-wavelength sines on gentle
/// backgrounds, velocity and field scaled by `amp`.
fn ideal_mhd_smooth(mesh: &Arc<GridMesh>, amp: f64) -> Result<FluidState> {
    let n = mesh.dim();
    let angle = |mesh: &GridMesh, a: usize, x: &[f64]| TAU * x[a] / mesh.extent(a);
    let mut state = FluidState::zeros(mesh)?;
    state.nu1 = DiscreteForm::sample(mesh, n, |x, _| {
        0.5 + 0.6 * amp * (angle(mesh, 0, x)).sin() * (angle(mesh, 1, x)).cos()
    })?;
    state.nu2 = DiscreteForm::sample(mesh, n, |x, _| {
        0.8 + 0.6 * amp * (angle(mesh, 1, x) + 0.4).cos() * (angle(mesh, n - 1, x)).sin()
    })?;
    state.s = DiscreteForm::sample(mesh, n, |x, _| {
        0.6 + 0.5 * amp * (angle(mesh, 0, x) + 0.3).sin() * (angle(mesh, n - 1, x)).cos()
    })?;
    state.sigma = state.s.clone();
    state.u = VectorField::from_components(
        mesh,
        (0..n)
            .map(|a| {
                mesh.sample(|x| {
                    amp * (angle(mesh, (a + 1) % n, x)).sin()
                        * (angle(mesh, (a + 2) % n, x)).cos()
                })
            })
            .collect(),
    )?;
    // A potential keeps the flux form exactly closed at the discrete level.
    let alpha = DiscreteForm::sample(mesh, 1, |x, idx| {
        let a = idx[0];
        amp / TAU * (angle(mesh, (a + 1) % n, x) + 0.2 * a as f64).cos()
    })?;
    state.beta = ops::exterior_derivative(&alpha)?;
    Ok(state)
}

/// Quiescent fluid with a small structured flux field: a constant
/// background of scale `amp` plus closed oscillations. The Lorentz force
/// is quadratic in the field, so the fluid stays at rest to rounding while
/// resistivity visibly moves flux.
fn resistive_decay(mesh: &Arc<GridMesh>, init: &InitialConfig, amp: f64) -> Result<FluidState> {
    let n = mesh.dim();
    let mut state = uniform_state(mesh, &InitialConfig {
        nu1: init.nu1,
        nu2: init.nu2,
        s: init.s,
        ..InitialConfig::default()
    })?;
    let angle = |mesh: &GridMesh, a: usize, x: &[f64]| TAU * x[a] / mesh.extent(a);
    let alpha = DiscreteForm::sample(mesh, 1, |x, idx| match idx[0] {
        0 => -0.5 * amp / TAU * (angle(mesh, 0, x)).sin() * (angle(mesh, 1, x)).sin(),
        1 => 0.3 * amp / TAU * (angle(mesh, n - 1, x) + 0.7).cos(),
        _ => 0.2 * amp / TAU * (angle(mesh, 0, x) + 0.4).cos(),
    })?;
    state.beta = ops::exterior_derivative(&alpha)?;
    let background: Vec<f64> = vec![amp; state.beta.components().len()];
    let constant = DiscreteForm::constant(mesh, 2, &background)?;
    state.beta.axpy(1.0, &constant)?;
    Ok(state)
}

/// Seeded random smooth fields, single wavelength per factor so the state
/// is resolved on any mesh this toolkit accepts. The flux form comes from
/// a random potential and is therefore closed.
fn random_smooth(mesh: &Arc<GridMesh>, seed: u64, amp: f64) -> Result<FluidState> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.dim();
    let mut gentle = |mean: f64, scale: f64| {
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
            mean + scale * v / 3.0
        })
    };
    let mut state = FluidState::zeros(mesh)?;
    state.nu1 = DiscreteForm::from_components(mesh, n, vec![gentle(0.5, amp)])?;
    state.nu2 = DiscreteForm::from_components(mesh, n, vec![gentle(0.8, amp)])?;
    state.s = DiscreteForm::from_components(mesh, n, vec![gentle(0.6, 0.8 * amp)])?;
    state.sigma = state.s.clone();
    state.u = VectorField::from_components(mesh, (0..n).map(|_| gentle(0.0, amp)).collect())?;
    let alpha_comps: Vec<_> = (0..n).map(|_| gentle(0.0, amp / TAU)).collect();
    let alpha = DiscreteForm::from_components(mesh, 1, alpha_comps)?;
    state.beta = ops::exterior_derivative(&alpha)?;
    Ok(state)
}

/// Output locations of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

/// Scalar drifts distilled from the report series.
#[derive(Debug, Clone, Serialize)]
pub struct DriftSummary {
    pub energy_rel: f64,
    pub mass_rate: f64,
    pub entropy_backstep: f64,
    pub divb_max: f64,
    pub exchanged_drift: f64,
    pub affinity_initial: f64,
    pub affinity_final: f64,
    pub affinity_rise: f64,
    pub flux_residual: Option<f64>,
}

/// One graded tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub value: f64,
    pub pass: bool,
}

/// End-of-run summary, serialized as `<name>_summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub schema: u32,
    pub dims: Vec<usize>,
    pub scheme: String,
    pub dt: f64,
    pub steps: u64,
    pub final_time: f64,
    /// Failure message if the run ended early in a numeric blow-up.
    pub blow_up: Option<String>,
    pub initial: DiagnosticsReport,
    #[serde(rename = "final")]
    pub final_report: DiagnosticsReport,
    pub drifts: DriftSummary,
    pub checks: Vec<CheckResult>,
    pub ok: bool,
}

/// A finished run: the summary plus where its artifacts went.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub artifacts: RunArtifacts,
}

fn is_numeric_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::BlowUp { .. }
            | Error::DensityFloor { .. }
            | Error::NonPositiveTemperature { .. }
    )
}

struct RunLog {
    csv: BufWriter<File>,
    reports: Vec<DiagnosticsReport>,
    affinity: Vec<f64>,
    histories: Vec<FluxHistory>,
}

impl RunLog {
    /// Assemble the right-hand side once and feed every observer from it.
    /// Flux histories are sampled each step (their time integral needs the
    /// full resolution); the full report, with its energy-residual field
    /// assembly, only when a CSV row is due.
    fn observe(
        &mut self,
        solver: &MhdSolver,
        state: &FluidState,
        surfaces: &[FluxSurface],
        report_due: bool,
    ) -> Result<()> {
        let parts = solver.assemble(state)?;
        if report_due {
            let report = DiagnosticsReport::compute(state, &parts, &solver.eos, surfaces)?;
            for (history, balance) in self.histories.iter_mut().zip(&report.flux_balance) {
                history.record(state.time, *balance);
            }
            writeln!(self.csv, "{}", report.csv_row())?;
            self.csv.flush()?;
            self.affinity.push(parts.duals.affinity.max_abs());
            self.reports.push(report);
        } else {
            for (history, surface) in self.histories.iter_mut().zip(surfaces) {
                history.record(
                    state.time,
                    crate::diagnostics::FluxBalance {
                        flux: crate::diagnostics::surface_flux(&state.beta, surface)?,
                        circulation: crate::diagnostics::oriented_circulation(
                            &parts.fluxes[crate::thermo::MHD_INDUCTION],
                            surface,
                        )?,
                    },
                );
            }
        }
        Ok(())
    }
}

/// Integrate a scenario to `t_end`, writing artifacts under `dir` with the
/// base name `name`. A numeric blow-up is reported inside the summary (and
/// via a failed `ok`), not as an `Err`; hard errors (I/O, configuration)
/// still abort.
pub fn run_scenario(scenario: &Scenario, name: &str, dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(dir)?;
    let mesh = scenario.build_mesh()?;
    let eos = scenario.build_eos();
    let closure = scenario.build_closure()?;
    let solver = MhdSolver::new(eos, closure)?.with_walls(scenario.build_walls());
    let mut state = scenario.build_state(&mesh)?;
    let surfaces = scenario.build_surfaces(&mesh)?;
    let scheme = scenario.run.scheme.to_scheme();

    let span = scenario.run.t_end - state.time;
    if span <= 0.0 {
        return Err(Error::Config(format!(
            "run.t_end: {} is not past the initial time {}",
            scenario.run.t_end, state.time
        )));
    }
    let dt_request = match (scenario.run.dt, scenario.run.cfl) {
        (Some(dt), _) => dt,
        (None, Some(c)) => c * solver.cfl_advisory(&state)?,
        _ => unreachable!("validated"),
    };
    // Land on t_end exactly with a uniform step, preferring the requested
    // step when it already divides the span.
    let steps = (span / dt_request - 1e-9).ceil().max(1.0) as u64;
    let dt = span / steps as f64;
    let report_every = scenario
        .run
        .report_every
        .unwrap_or(scenario.run.t_end / 10.0);

    let csv_path = dir.join(format!("{name}.csv"));
    let summary_path = dir.join(format!("{name}_summary.json"));
    let mut log = RunLog {
        csv: BufWriter::new(File::create(&csv_path)?),
        reports: Vec::new(),
        affinity: Vec::new(),
        histories: surfaces.iter().map(|_| FluxHistory::new()).collect(),
    };
    writeln!(log.csv, "{}", DiagnosticsReport::csv_header(surfaces.len()))?;
    log.observe(&solver, &state, &surfaces, true)?;

    let mut next_report = state.time + report_every;
    let mut blow_up = None;
    let mut steps_taken = 0;
    for k in 0..steps {
        let outcome = solver
            .step(&mut state, dt, scheme)
            .and_then(|_| solver.check_health(&state, k + 1))
            .and_then(|_| {
                steps_taken = k + 1;
                let due = k + 1 == steps || state.time + 1e-9 * dt >= next_report;
                if due || !surfaces.is_empty() {
                    log.observe(&solver, &state, &surfaces, due)?;
                }
                if due {
                    while state.time + 1e-9 * dt >= next_report {
                        next_report += report_every;
                    }
                }
                Ok(())
            });
        match outcome {
            Ok(()) => {}
            Err(e) if is_numeric_failure(&e) => {
                blow_up = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let drifts = summarize_drifts(&log);
    let checks = grade_checks(&scenario.checks, &drifts);
    let healthy = blow_up.is_none();
    let ok = healthy && checks.iter().all(|c| c.pass);
    let summary = RunSummary {
        scenario: name.to_string(),
        schema: scenario.schema,
        dims: scenario.mesh.dims.clone(),
        scheme: format!("{:?}", scheme).to_lowercase(),
        dt,
        steps: steps_taken,
        final_time: state.time,
        blow_up,
        initial: log.reports.first().cloned().expect("initial report"),
        final_report: log.reports.last().cloned().expect("initial report"),
        drifts,
        checks,
        ok,
    };
    let mut summary_file = BufWriter::new(File::create(&summary_path)?);
    serde_json::to_writer_pretty(&mut summary_file, &summary)
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    writeln!(summary_file)?;
    summary_file.flush()?;

    let checkpoint = if scenario.run.checkpoint_final && healthy {
        let path = dir.join(format!("{name}_final.state"));
        io::write_state(
            &path,
            &StateSnapshot {
                time: state.time,
                vectors: vec![("u", &state.u)],
                forms: vec![
                    ("nu1", &state.nu1),
                    ("nu2", &state.nu2),
                    ("s", &state.s),
                    ("sigma", &state.sigma),
                    ("beta", &state.beta),
                ],
            },
        )?;
        Some(path)
    } else {
        None
    };

    Ok(RunOutcome {
        summary,
        artifacts: RunArtifacts {
            csv: csv_path,
            summary: summary_path,
            checkpoint,
        },
    })
}

fn summarize_drifts(log: &RunLog) -> DriftSummary {
    let reports = &log.reports;
    let first = reports.first().expect("at least the initial report");
    let last = reports.last().expect("at least the initial report");
    let span = (last.time - first.time).max(f64::MIN_POSITIVE);
    let mut backstep = 0.0f64;
    let mut divb = 0.0f64;
    let mut exchanged = 0.0f64;
    for pair in reports.windows(2) {
        backstep = backstep.max(pair[0].entropy_produced - pair[1].entropy_produced);
    }
    for r in reports {
        divb = divb.max(r.divb_norm);
        exchanged = exchanged.max((r.entropy_exchanged - first.entropy_exchanged).abs());
    }
    let mut affinity_rise = 0.0f64;
    for pair in log.affinity.windows(2) {
        affinity_rise = affinity_rise.max(pair[1] - pair[0]);
    }
    let flux_residual = if log.histories.is_empty() {
        None
    } else {
        let mut worst = 0.0f64;
        for history in &log.histories {
            if let Ok(report) = alfven_flux_check(history) {
                worst = worst.max(report.relative);
            } else {
                worst = f64::INFINITY;
            }
        }
        Some(worst)
    };
    DriftSummary {
        energy_rel: (last.energy_total - first.energy_total).abs()
            / first.energy_total.abs().max(f64::MIN_POSITIVE),
        mass_rate: (last.mass_total - first.mass_total).abs()
            / (span * first.mass_total.abs().max(f64::MIN_POSITIVE)),
        entropy_backstep: backstep,
        divb_max: divb,
        exchanged_drift: exchanged,
        affinity_initial: log.affinity.first().copied().unwrap_or(0.0),
        affinity_final: log.affinity.last().copied().unwrap_or(0.0),
        affinity_rise,
        flux_residual,
    }
}

fn grade_checks(config: &ChecksConfig, drifts: &DriftSummary) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut push = |name: &str, tolerance: Option<f64>, value: f64| {
        if let Some(tolerance) = tolerance {
            out.push(CheckResult {
                name: name.to_string(),
                tolerance,
                value,
                pass: value <= tolerance,
            });
        }
    };
    push("energy_drift", config.energy_drift, drifts.energy_rel);
    push("mass_drift", config.mass_drift, drifts.mass_rate);
    push(
        "entropy_backstep",
        config.entropy_backstep,
        drifts.entropy_backstep,
    );
    push("divb_max", config.divb_max, drifts.divb_max);
    push(
        "exchanged_drift",
        config.exchanged_drift,
        drifts.exchanged_drift,
    );
    push("affinity_rise", config.affinity_rise, drifts.affinity_rise);
    push(
        "flux_balance",
        config.flux_balance,
        drifts.flux_residual.unwrap_or(f64::INFINITY),
    );
    out
}

/// Closure admissibility of a scenario without running it: the reciprocity
/// and definiteness report side by side with the isotropy pattern check.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub onsager: ClosureReport,
    pub curie: curie::PatternReport,
    pub ok: bool,
}

/// Grade the scenario's closure block. `samples` and `seed` control the
/// isotropy probe.
pub fn validate_scenario(
    scenario: &Scenario,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let spec = scenario.build_closure()?;
    let onsager = spec.validate();
    let pattern = curie::closure_pattern(&spec, &curie::mhd_force_twists(), samples, seed)?;
    let ok = onsager.ok && pattern.violations.is_empty();
    Ok(ValidationReport {
        onsager,
        curie: pattern,
        ok,
    })
}
