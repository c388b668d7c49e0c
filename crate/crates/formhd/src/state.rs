//! The two-species magnetofluid state bundle and its dual fields.
//!
//! State variables, all collocated on one mesh:
//!
//! * `u`: velocity vector field;
//! * `nu1`, `nu2`: species concentration densities as top-degree forms;
//! * `beta`: magnetic flux 2-form (top degree in the planar case);
//! * `s`: entropy density, top degree;
//! * `sigma`: a second entropy-like density advected and produced alongside
//!   `s` but without the exchange fluxes. `s - sigma` integrates the pure
//!   transport content, so its total is conserved exactly while `sigma`
//!   itself is nondecreasing; the pair separates reversible bookkeeping
//!   from genuine production.
//!
//! The dual bundle holds every partial derivative of the energy functional
//! the solver needs: temperature, chemical potentials, reaction affinity and
//! the magnetic dual `-(1/mu0) star beta`, plus plain nodal arrays for
//! density, pressure and internal energy.

use ndarray::{ArrayD, Dimension};

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::form::{CovectorDensity, DiscreteForm, VectorField};
use crate::mesh::GridMesh;
use crate::ops;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct FluidState {
    pub u: VectorField,
    pub nu1: DiscreteForm,
    pub nu2: DiscreteForm,
    pub beta: DiscreteForm,
    pub s: DiscreteForm,
    pub sigma: DiscreteForm,
    pub time: f64,
}

impl FluidState {
    /// Zero-initialized state on a mesh.
    pub fn zeros(mesh: &Arc<GridMesh>) -> Result<Self> {
        let n = mesh.dim();
        if n < 2 {
            return Err(Error::MeshDimension(n));
        }
        Ok(Self {
            u: VectorField::zeros(mesh),
            nu1: DiscreteForm::zeros(mesh, n)?,
            nu2: DiscreteForm::zeros(mesh, n)?,
            beta: DiscreteForm::zeros(mesh, 2)?,
            s: DiscreteForm::zeros(mesh, n)?,
            sigma: DiscreteForm::zeros(mesh, n)?,
            time: 0.0,
        })
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        self.u.mesh()
    }

    /// Check that every field lives on the same mesh with the right degree.
    pub fn validate_shapes(&self) -> Result<()> {
        let mesh = self.mesh();
        let n = mesh.dim();
        for (name, form, degree) in [
            ("nu1", &self.nu1, n),
            ("nu2", &self.nu2, n),
            ("beta", &self.beta, 2),
            ("s", &self.s, n),
            ("sigma", &self.sigma, n),
        ] {
            if !form.mesh().same_mesh(mesh) {
                return Err(Error::MeshMismatch);
            }
            if form.degree() != degree {
                return Err(Error::Shape(format!(
                    "{name} has degree {}, expected {degree}",
                    form.degree()
                )));
            }
        }
        Ok(())
    }

    /// Nodal mass density `m1 n1 + m2 n2`; no thermodynamic domain checks.
    pub fn mass_density(&self, eos: &EquationOfState) -> ArrayD<f64> {
        let mut rho = self.nu1.component(0).clone();
        rho.zip_mut_with(self.nu2.component(0), |r, &n2| {
            *r = eos.m1 * *r + eos.m2 * n2;
        });
        rho
    }

    /// Momentum covector density `rho u^flat`.
    pub fn momentum(&self, eos: &EquationOfState) -> CovectorDensity {
        let rho = self.mass_density(eos);
        let mesh = self.mesh();
        let comps = (0..mesh.dim())
            .map(|i| {
                let mut c = self.u.component(i).clone();
                c.zip_mut_with(&rho, |v, &r| *v *= r);
                c
            })
            .collect();
        CovectorDensity::from_components(mesh, comps).expect("state components share one mesh")
    }

    /// Largest absolute nodal value over all fields, for blow-up detection.
    pub fn max_field_abs(&self) -> f64 {
        self.u
            .max_norm()
            .max(self.nu1.max_abs())
            .max(self.nu2.max_abs())
            .max(self.beta.max_abs())
            .max(self.s.max_abs())
            .max(self.sigma.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite()
            && self.nu1.is_finite()
            && self.nu2.is_finite()
            && self.beta.is_finite()
            && self.s.is_finite()
            && self.sigma.is_finite()
    }

    /// In-place `self += dt * rate`, the elementary step of every explicit
    /// integrator in the solver.
    pub fn advance(&mut self, dt: f64, rate: &StateRate) -> Result<()> {
        for i in 0..self.mesh().dim() {
            let src = rate.du.component(i).clone();
            self.u
                .component_mut(i)
                .zip_mut_with(&src, |v, &d| *v += dt * d);
        }
        self.nu1.axpy(dt, &rate.dnu1)?;
        self.nu2.axpy(dt, &rate.dnu2)?;
        self.beta.axpy(dt, &rate.dbeta)?;
        self.s.axpy(dt, &rate.ds)?;
        self.sigma.axpy(dt, &rate.dsigma)?;
        self.time += dt;
        Ok(())
    }
}

/// Time derivative of a [`FluidState`].
#[derive(Debug, Clone)]
pub struct StateRate {
    pub du: VectorField,
    pub dnu1: DiscreteForm,
    pub dnu2: DiscreteForm,
    pub dbeta: DiscreteForm,
    pub ds: DiscreteForm,
    pub dsigma: DiscreteForm,
}

impl StateRate {
    pub fn zeros(mesh: &Arc<GridMesh>) -> Result<Self> {
        let n = mesh.dim();
        Ok(Self {
            du: VectorField::zeros(mesh),
            dnu1: DiscreteForm::zeros(mesh, n)?,
            dnu2: DiscreteForm::zeros(mesh, n)?,
            dbeta: DiscreteForm::zeros(mesh, 2)?,
            ds: DiscreteForm::zeros(mesh, n)?,
            dsigma: DiscreteForm::zeros(mesh, n)?,
        })
    }

    /// `self += scale * other`, used to accumulate Runge-Kutta stages.
    pub fn axpy(&mut self, scale: f64, other: &StateRate) -> Result<()> {
        for i in 0..self.du.mesh().dim() {
            let src = other.du.component(i).clone();
            self.du
                .component_mut(i)
                .zip_mut_with(&src, |v, &d| *v += scale * d);
        }
        self.dnu1.axpy(scale, &other.dnu1)?;
        self.dnu2.axpy(scale, &other.dnu2)?;
        self.dbeta.axpy(scale, &other.dbeta)?;
        self.ds.axpy(scale, &other.ds)?;
        self.dsigma.axpy(scale, &other.dsigma)?;
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for i in 0..self.du.mesh().dim() {
            self.du.component_mut(i).mapv_inplace(|v| v * factor);
        }
        self.dnu1.scale(factor);
        self.dnu2.scale(factor);
        self.dbeta.scale(factor);
        self.ds.scale(factor);
        self.dsigma.scale(factor);
    }
}

/// Partial derivatives of the energy functional at the current state,
/// together with the plain nodal thermodynamic fields.
#[derive(Debug, Clone)]
pub struct DualFields {
    pub rho: ArrayD<f64>,
    pub temperature: ArrayD<f64>,
    pub pressure: ArrayD<f64>,
    pub internal_energy: ArrayD<f64>,
    /// `de/ds` as a 0-form (the temperature again, in form clothing).
    pub dual_s: DiscreteForm,
    /// `de/dn_i` as 0-forms.
    pub dual_nu1: DiscreteForm,
    pub dual_nu2: DiscreteForm,
    /// Specific reaction affinity `mu1/m1 - mu2/m2` as a 0-form.
    pub affinity: DiscreteForm,
    /// `-(1/mu0) star beta`, degree n - 2.
    pub dual_beta: DiscreteForm,
    /// Maximum nodal sound speed, for the time-step advisory.
    pub max_sound_speed: f64,
}

/// Evaluate the equation of state over the whole mesh. The first node that
/// violates the thermodynamic domain aborts the evaluation and is reported
/// in the error.
pub fn dual_fields(state: &FluidState, eos: &EquationOfState) -> Result<DualFields> {
    let mesh = state.mesh();
    let n1 = state.nu1.component(0);
    let n2 = state.nu2.component(0);
    let sv = state.s.component(0);

    let mut rho = mesh.zeros();
    let mut temperature = mesh.zeros();
    let mut pressure = mesh.zeros();
    let mut internal_energy = mesh.zeros();
    let mut mu1 = mesh.zeros();
    let mut mu2 = mesh.zeros();
    let mut affinity = mesh.zeros();
    let mut max_cs = 0.0f64;

    for (pos, &a) in n1.indexed_iter() {
        let b = n2[&pos];
        let sval = sv[&pos];
        let pt = eos
            .evaluate(a, b, sval)
            .map_err(|f| f.at_node(pos.slice().to_vec(), eos.rho_floor))?;
        rho[&pos] = pt.rho;
        temperature[&pos] = pt.temperature;
        pressure[&pos] = pt.pressure;
        internal_energy[&pos] = pt.energy;
        mu1[&pos] = pt.mu1;
        mu2[&pos] = pt.mu2;
        affinity[&pos] = eos.affinity(&pt);
        max_cs = max_cs.max(eos.sound_speed(&pt));
    }

    let mut dual_beta = ops::hodge(&state.beta)?;
    dual_beta.scale(-1.0 / eos.mu0);

    Ok(DualFields {
        rho,
        temperature: temperature.clone(),
        pressure,
        internal_energy,
        dual_s: DiscreteForm::from_components(mesh, 0, vec![temperature])?,
        dual_nu1: DiscreteForm::from_components(mesh, 0, vec![mu1])?,
        dual_nu2: DiscreteForm::from_components(mesh, 0, vec![mu2])?,
        affinity: DiscreteForm::from_components(mesh, 0, vec![affinity])?,
        dual_beta,
        max_sound_speed: max_cs,
    })
}
