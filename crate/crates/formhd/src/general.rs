//! Advection-reaction-diffusion systems with any number of species.
//!
//! This is the transport companion to the magnetofluid solver: a prescribed
//! stationary velocity advects N top-degree densities, discrete reaction
//! channels interconvert them, and optional per-species diffusion smooths
//! them. There is no momentum equation; the interesting structure is the
//! bookkeeping of masses and entropy.
//!
//! Each species has a particle mass `M_a` and a quadratic energy density
//! `b_a nu_a + (g_a / 2) nu_a^2`, so its chemical potential is the affine
//! nodal field `mu_a = b_a + g_a nu_a`. A reaction channel with weights
//! `w_a` drives every density by `w_a j` off the shared flux
//! `j = -rate * A vol`, where `A = sum_a w_a mu_a` is the channel affinity.
//! Mass is then conserved exactly if and only if `sum_a w_a M_a = 0`, which
//! the constructor enforces; a violation is rejected with the offending sum
//! rather than silently integrated.
//!
//! The two-species magnetofluid reaction is the special case
//! `w = (1/m1, -1/m2)`, whose weighted mass sum telescopes to zero.
//!
//! Entropy logs the production `rate * A^2` of every channel plus the
//! quadratic production of the diffusive fluxes at unit temperature. Unlike
//! the magnetofluid, this system does not feed the dissipated energy back
//! through a temperature, so its energy decays while entropy grows; it is a
//! kinetics testbed, not a closed thermodynamic model.

use crate::error::{Error, Result};
use crate::form::{DiscreteForm, VectorField};
use crate::mesh::GridMesh;
use crate::ops;
use crate::solver::TimeScheme;
use std::sync::Arc;

/// One advected density: particle mass and the coefficients of its
/// quadratic energy. `diffusivity` is the coefficient of the Laplacian
/// acting on the chemical potential.
#[derive(Debug, Clone)]
pub struct Species {
    pub name: String,
    pub mass: f64,
    /// Constant part of the chemical potential.
    pub enthalpy: f64,
    /// Slope of the chemical potential in the density.
    pub stiffness: f64,
    pub diffusivity: f64,
}

impl Species {
    pub fn new(name: &str, mass: f64) -> Self {
        Self {
            name: name.into(),
            mass,
            enthalpy: 0.0,
            stiffness: 1.0,
            diffusivity: 0.0,
        }
    }

    pub fn with_energy(mut self, enthalpy: f64, stiffness: f64) -> Self {
        self.enthalpy = enthalpy;
        self.stiffness = stiffness;
        self
    }

    pub fn with_diffusivity(mut self, kappa: f64) -> Self {
        self.diffusivity = kappa;
        self
    }
}

/// A discrete interconversion channel: one stoichiometric weight per
/// species and a nonnegative rate coefficient.
#[derive(Debug, Clone)]
pub struct Reaction {
    pub name: String,
    pub weights: Vec<f64>,
    pub rate: f64,
}

impl Reaction {
    pub fn new(name: &str, weights: Vec<f64>, rate: f64) -> Self {
        Self {
            name: name.into(),
            weights,
            rate,
        }
    }
}

/// The validated system: species list and reaction channels.
#[derive(Debug, Clone)]
pub struct GeneralSystem {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
}

/// Densities, the advecting velocity and an entropy log.
#[derive(Debug, Clone)]
pub struct GeneralState {
    pub u: VectorField,
    pub densities: Vec<DiscreteForm>,
    pub entropy: DiscreteForm,
    pub time: f64,
}

impl GeneralState {
    /// Zero densities and entropy carried by the given velocity field.
    pub fn at_rest(mesh: &Arc<GridMesh>, count: usize) -> Result<Self> {
        let n = mesh.dim();
        Ok(Self {
            u: VectorField::zeros(mesh),
            densities: (0..count)
                .map(|_| DiscreteForm::zeros(mesh, n))
                .collect::<Result<_>>()?,
            entropy: DiscreteForm::zeros(mesh, n)?,
            time: 0.0,
        })
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        self.u.mesh()
    }
}

/// Time derivative of the densities and the entropy; the velocity is a
/// fixed background and has none.
#[derive(Debug, Clone)]
pub struct GeneralRate {
    pub densities: Vec<DiscreteForm>,
    pub entropy: DiscreteForm,
}

impl GeneralRate {
    fn zeros(mesh: &Arc<GridMesh>, count: usize) -> Result<Self> {
        let n = mesh.dim();
        Ok(Self {
            densities: (0..count)
                .map(|_| DiscreteForm::zeros(mesh, n))
                .collect::<Result<_>>()?,
            entropy: DiscreteForm::zeros(mesh, n)?,
        })
    }

    fn axpy(&mut self, scale: f64, other: &Self) -> Result<()> {
        for (a, b) in self.densities.iter_mut().zip(&other.densities) {
            a.axpy(scale, b)?;
        }
        self.entropy.axpy(scale, &other.entropy)
    }

    fn scale(&mut self, factor: f64) {
        for a in &mut self.densities {
            a.scale(factor);
        }
        self.entropy.scale(factor);
    }
}

impl GeneralSystem {
    /// Validate and build. Every reaction must have one weight per species,
    /// a nonnegative rate, and mass-conserving stoichiometry.
    pub fn new(species: Vec<Species>, reactions: Vec<Reaction>) -> Result<Self> {
        if species.is_empty() {
            return Err(Error::Config("a system needs at least one species".into()));
        }
        for sp in &species {
            if sp.mass <= 0.0 {
                return Err(Error::Config(format!(
                    "species {} has nonpositive mass {}",
                    sp.name, sp.mass
                )));
            }
            if sp.diffusivity < 0.0 || sp.stiffness < 0.0 {
                return Err(Error::ClosureInvalid(format!(
                    "species {} has a negative dissipative coefficient",
                    sp.name
                )));
            }
        }
        for r in &reactions {
            if r.weights.len() != species.len() {
                return Err(Error::Shape(format!(
                    "reaction {} has {} weights for {} species",
                    r.name,
                    r.weights.len(),
                    species.len()
                )));
            }
            if r.rate < 0.0 {
                return Err(Error::ClosureInvalid(format!(
                    "reaction {} has negative rate {}",
                    r.name, r.rate
                )));
            }
            let weighted: f64 = r
                .weights
                .iter()
                .zip(&species)
                .map(|(w, sp)| w * sp.mass)
                .sum();
            let scale: f64 = r
                .weights
                .iter()
                .zip(&species)
                .map(|(w, sp)| (w * sp.mass).abs())
                .sum();
            if weighted.abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::Stoichiometry(weighted));
            }
        }
        Ok(Self { species, reactions })
    }

    /// Nodal chemical potential of species `a`.
    fn potential(&self, a: usize, state: &GeneralState) -> DiscreteForm {
        let sp = &self.species[a];
        let mut mu = state.densities[a].component(0).clone();
        mu.mapv_inplace(|nu| sp.enthalpy + sp.stiffness * nu);
        DiscreteForm::from_components(state.mesh(), 0, vec![mu])
            .expect("density shapes were validated")
    }

    /// Right-hand side: advection, reactions, diffusion, entropy logging.
    pub fn rhs(&self, state: &GeneralState) -> Result<GeneralRate> {
        let mesh = state.mesh().clone();
        if state.densities.len() != self.species.len() {
            return Err(Error::Shape(format!(
                "{} densities for {} species",
                state.densities.len(),
                self.species.len()
            )));
        }
        let mut rate = GeneralRate::zeros(&mesh, self.species.len())?;
        let mut production = mesh.zeros();

        let potentials: Vec<DiscreteForm> = (0..self.species.len())
            .map(|a| self.potential(a, state))
            .collect();

        for (a, sp) in self.species.iter().enumerate() {
            let mut d = ops::lie_derivative(&state.u, &state.densities[a])?;
            d.scale(-1.0);
            rate.densities[a].axpy(1.0, &d)?;
            if sp.diffusivity > 0.0 {
                // Force d(-mu), flux kappa star force, entering as -d(flux):
                // together +kappa d star d mu, a plain diffusion of mu.
                let mut minus_mu = potentials[a].clone();
                minus_mu.scale(-1.0);
                let force = ops::exterior_derivative(&minus_mu)?;
                let mut flux = ops::hodge(&force)?;
                flux.scale(sp.diffusivity);
                rate.densities[a].axpy(-1.0, &ops::exterior_derivative(&flux)?)?;
                let quad = ops::wedge(&force, &flux)?;
                production.zip_mut_with(quad.component(0), |o, &v| *o += v);
            }
        }

        for r in &self.reactions {
            if r.rate == 0.0 {
                continue;
            }
            // Affinity, its force and the shared top-degree flux.
            let mut affinity = mesh.zeros();
            for (w, mu) in r.weights.iter().zip(&potentials) {
                affinity.zip_mut_with(mu.component(0), |o, &v| *o += w * v);
            }
            let mut flux = affinity.clone();
            flux.mapv_inplace(|a| -r.rate * a);
            for (a, w) in r.weights.iter().enumerate() {
                rate.densities[a]
                    .component_mut(0)
                    .zip_mut_with(&flux, |o, &j| *o += w * j);
            }
            // Production (-A) * j = rate * A^2.
            ndarray::Zip::from(&mut production)
                .and(&affinity)
                .and(&flux)
                .for_each(|o, &av, &jv| *o += -av * jv);
        }

        let mut ds = ops::lie_derivative(&state.u, &state.entropy)?;
        ds.scale(-1.0);
        ds.component_mut(0)
            .zip_mut_with(&production, |o, &v| *o += v);
        rate.entropy.axpy(1.0, &ds)?;
        Ok(rate)
    }

    /// Advance in place with the requested scheme; the velocity is frozen.
    pub fn step(&self, state: &mut GeneralState, dt: f64, scheme: TimeScheme) -> Result<()> {
        let apply = |state: &mut GeneralState, dt: f64, rate: &GeneralRate| -> Result<()> {
            for (x, d) in state.densities.iter_mut().zip(&rate.densities) {
                x.axpy(dt, d)?;
            }
            state.entropy.axpy(dt, &rate.entropy)?;
            state.time += dt;
            Ok(())
        };
        match scheme {
            TimeScheme::Euler => {
                let k1 = self.rhs(state)?;
                apply(state, dt, &k1)?;
            }
            TimeScheme::Midpoint => {
                let k1 = self.rhs(state)?;
                let mut half = state.clone();
                apply(&mut half, 0.5 * dt, &k1)?;
                let k2 = self.rhs(&half)?;
                apply(state, dt, &k2)?;
            }
            TimeScheme::Rk4 => {
                let k1 = self.rhs(state)?;
                let mut stage = state.clone();
                apply(&mut stage, 0.5 * dt, &k1)?;
                let k2 = self.rhs(&stage)?;
                stage = state.clone();
                apply(&mut stage, 0.5 * dt, &k2)?;
                let k3 = self.rhs(&stage)?;
                stage = state.clone();
                apply(&mut stage, dt, &k3)?;
                let k4 = self.rhs(&stage)?;
                let mut acc = k1;
                acc.axpy(2.0, &k2)?;
                acc.axpy(2.0, &k3)?;
                acc.axpy(1.0, &k4)?;
                acc.scale(1.0 / 6.0);
                apply(state, dt, &acc)?;
            }
        }
        Ok(())
    }

    /// Total mass `sum_a M_a integral(nu_a)`.
    pub fn total_mass(&self, state: &GeneralState) -> Result<f64> {
        let mut acc = 0.0;
        for (sp, nu) in self.species.iter().zip(&state.densities) {
            acc += sp.mass * ops::integrate(nu)?;
        }
        Ok(acc)
    }
}
