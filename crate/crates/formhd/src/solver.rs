//! Time integration of the dissipative two-species magnetofluid.
//!
//! The semi-discrete system advances velocity `u`, two concentration
//! densities `nu1`, `nu2`, the magnetic flux form `beta` and the entropy
//! pair `s`, `sigma`. Writing `L_u` for the Lie derivative, `j_a` for the
//! closure fluxes and `Pi` for the nodal entropy production, the right-hand
//! side is
//!
//! ```text
//! d/dt nu1   = -L_u nu1 + (1/m1) (j_r - d j_c)
//! d/dt nu2   = -L_u nu2 - (1/m2) (j_r - d j_c)
//! d/dt beta  = -L_u beta + (-1)^(n-1) d j_b
//! d/dt s     = -L_u s - d j_h + Pi / T
//! d/dt sigma = -L_u sigma + Pi / T
//! d/dt m     = -L_u m + sum_x (dl/dx) diamond x + div(stress)
//! ```
//!
//! with the velocity rate recovered pointwise from the momentum rate. The
//! diamond coefficients are the variational duals of the Lagrangian (kinetic
//! minus internal minus magnetic energy): `m_i |u|^2 / 2 - mu_i` for the
//! species, `-T` for the entropy and `-(1/mu0) star beta` for the flux form.
//! The thermodynamic forces handed to the closure are the differentials of
//! the same duals, with the specific affinity substituted for the species
//! pair:
//!
//! ```text
//! X_h = d(-T)     X_c = d(-mu)     X_b = d(-(1/mu0) star beta)     X_r = -mu
//! ```
//!
//! This pairing is what makes the energy bookkeeping close. On a periodic
//! mesh every advective term cancels against its diamond partner through the
//! summation-by-parts adjoint, every flux term in the state equations
//! cancels against its production term in the entropy equation, and the
//! viscous work cancels against `div(stress)` because force and production
//! share one gradient stencil. The semi-discrete energy rate is therefore
//! zero to rounding, dissipation or not, and time integration is the only
//! source of drift. The alternating sign on the induction term is not
//! decorative: moving `d` off the flux costs a sign that depends on the
//! degree of `beta`, and dropping it would turn resistive decay into growth
//! in the plane.
//!
//! `sigma` receives the production but not the exchange flux `-d j_h`, so
//! the integral of `s - sigma` is exactly conserved while both totals are
//! nondecreasing; comparing the pair isolates genuine production from
//! transport.

use ndarray::ArrayD;

use crate::boundary::WallPolicy;
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::form::{CovectorDensity, DiscreteForm, TensorField, VectorField};
use crate::ops;
use crate::state::{dual_fields, DualFields, FluidState, StateRate};
use crate::thermo::{
    viscous_stress, ClosureSpec, MHD_DIFFUSION, MHD_HEAT, MHD_INDUCTION, MHD_REACTION,
};

/// Explicit time integrators. The acceptance-grade runs use `Rk4`; the
/// lower-order schemes exist for step-size studies and debugging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    Euler,
    Midpoint,
    Rk4,
}

/// Everything one right-hand-side evaluation produces. The diagnostics
/// layer consumes the intermediate fields (forces, fluxes, stress,
/// production) that a plain time step would throw away.
#[derive(Debug, Clone)]
pub struct RhsParts {
    pub rate: StateRate,
    pub duals: DualFields,
    /// Thermodynamic forces in closure process order.
    pub forces: Vec<DiscreteForm>,
    /// Closure fluxes in the same order.
    pub fluxes: Vec<DiscreteForm>,
    pub grad_u: TensorField,
    pub stress: TensorField,
    /// Momentum rate before the pointwise conversion to a velocity rate.
    pub momentum_rate: CovectorDensity,
    /// Nodal entropy production `Pi` (coefficient of the top form),
    /// including the viscous part. Nonnegative for a valid closure.
    pub production: ArrayD<f64>,
    /// `Pi / T`, the actual source entering the entropy equations.
    pub heating: ArrayD<f64>,
}

/// The magnetofluid solver: an equation of state, a validated closure, a
/// wall policy and a blow-up guard.
#[derive(Debug, Clone)]
pub struct MhdSolver {
    pub eos: EquationOfState,
    pub closure: ClosureSpec,
    pub walls: WallPolicy,
    /// Largest tolerated nodal magnitude; beyond it the run aborts with a
    /// blow-up error instead of marching NaNs forward.
    pub blow_up_limit: f64,
}

impl MhdSolver {
    /// Build a solver, refusing closures that fail validation.
    pub fn new(eos: EquationOfState, closure: ClosureSpec) -> Result<Self> {
        closure.ensure_valid()?;
        Ok(Self {
            eos,
            closure,
            walls: WallPolicy::default(),
            blow_up_limit: 1e8,
        })
    }

    pub fn with_walls(mut self, walls: WallPolicy) -> Self {
        self.walls = walls;
        self
    }

    /// Evaluate the right-hand side and keep the intermediate fields.
    pub fn assemble(&self, state: &FluidState) -> Result<RhsParts> {
        state.validate_shapes()?;
        let mesh = state.mesh().clone();
        let n = mesh.dim();

        let mut duals = dual_fields(state, &self.eos)?;
        self.walls.apply_wall_temperature(&mut duals.dual_s);

        // Thermodynamic forces, in the process order of the closure.
        let mut minus_t = duals.dual_s.clone();
        minus_t.scale(-1.0);
        let mut minus_mu = duals.affinity.clone();
        minus_mu.scale(-1.0);
        let forces = vec![
            ops::exterior_derivative(&minus_t)?,
            ops::exterior_derivative(&minus_mu)?,
            ops::exterior_derivative(&duals.dual_beta)?,
            minus_mu,
        ];
        let fluxes = self.closure.apply(&forces)?;

        let grad_u = ops::velocity_gradient(&state.u);
        let stress = viscous_stress(&self.closure.viscosity, &grad_u);
        let viscous_force = ops::tensor_divergence(&stress);

        let mut production = self.closure.production_density(&forces, &fluxes)?;
        let viscous_production = ops::tensor_contract(&grad_u, &stress)?;
        production.zip_mut_with(&viscous_production, |o, &v| *o += v);
        let mut heating = production.clone();
        heating.zip_mut_with(&duals.temperature, |h, &t| *h /= t);

        // Species: shared reaction/diffusion exchange with opposite signs,
        // weighted so the mass density sees none of it.
        let d_jc = ops::exterior_derivative(&fluxes[MHD_DIFFUSION])?;
        let mut exchange = fluxes[MHD_REACTION].clone();
        exchange.axpy(-1.0, &d_jc)?;
        let mut dnu1 = ops::lie_derivative(&state.u, &state.nu1)?;
        dnu1.scale(-1.0);
        dnu1.axpy(1.0 / self.eos.m1, &exchange)?;
        let mut dnu2 = ops::lie_derivative(&state.u, &state.nu2)?;
        dnu2.scale(-1.0);
        dnu2.axpy(-1.0 / self.eos.m2, &exchange)?;

        // Induction, with the degree-dependent sign discussed in the module
        // documentation.
        let induction_sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let mut dbeta = ops::lie_derivative(&state.u, &state.beta)?;
        dbeta.scale(-1.0);
        dbeta.axpy(
            induction_sign,
            &ops::exterior_derivative(&fluxes[MHD_INDUCTION])?,
        )?;

        // Entropy pair: s carries the exchange flux, sigma only the source.
        let mut ds = ops::lie_derivative(&state.u, &state.s)?;
        ds.scale(-1.0);
        ds.axpy(-1.0, &ops::exterior_derivative(&fluxes[MHD_HEAT])?)?;
        ds.component_mut(0).zip_mut_with(&heating, |o, &v| *o += v);
        let mut dsigma = ops::lie_derivative(&state.u, &state.sigma)?;
        dsigma.scale(-1.0);
        dsigma.component_mut(0).zip_mut_with(&heating, |o, &v| *o += v);

        // Momentum: advection, the four diamond forces, viscous stress.
        let momentum = state.momentum(&self.eos);
        let mut dm = ops::lie_momentum(&state.u, &momentum)?;
        dm.scale(-1.0);
        let kinetic = state.u.norm_sq();
        for (mass, dual, form) in [
            (self.eos.m1, &duals.dual_nu1, &state.nu1),
            (self.eos.m2, &duals.dual_nu2, &state.nu2),
        ] {
            let mut coeff = kinetic.clone();
            coeff.zip_mut_with(dual.component(0), |o, &mu| {
                *o = 0.5 * mass * *o - mu;
            });
            let b = DiscreteForm::from_components(&mesh, 0, vec![coeff])?;
            dm.axpy(1.0, &ops::diamond(&b, form)?)?;
        }
        let mut minus_t_dual = duals.dual_s.clone();
        minus_t_dual.scale(-1.0);
        dm.axpy(1.0, &ops::diamond(&minus_t_dual, &state.s)?)?;
        dm.axpy(1.0, &ops::diamond(&duals.dual_beta, &state.beta)?)?;
        dm.axpy(1.0, &viscous_force)?;

        // Velocity rate from the momentum rate, pointwise.
        let mut drho = dnu1.component(0).clone();
        drho.mapv_inplace(|v| v * self.eos.m1);
        drho.zip_mut_with(dnu2.component(0), |o, &v| *o += self.eos.m2 * v);
        let mut du = VectorField::zeros(&mesh);
        for i in 0..n {
            ndarray::Zip::from(du.component_mut(i))
                .and(dm.component(i))
                .and(state.u.component(i))
                .and(&drho)
                .and(&duals.rho)
                .for_each(|o, &dmi, &ui, &dr, &r| *o = (dmi - ui * dr) / r);
        }

        let mut rate = StateRate {
            du,
            dnu1,
            dnu2,
            dbeta,
            ds,
            dsigma,
        };
        self.walls.apply_to_rate(&mut rate);

        Ok(RhsParts {
            rate,
            duals,
            forces,
            fluxes,
            grad_u,
            stress,
            momentum_rate: dm,
            production,
            heating,
        })
    }

    /// Right-hand side only.
    pub fn rhs(&self, state: &FluidState) -> Result<StateRate> {
        Ok(self.assemble(state)?.rate)
    }

    /// Advance one step with the chosen scheme.
    pub fn step(&self, state: &mut FluidState, dt: f64, scheme: TimeScheme) -> Result<()> {
        match scheme {
            TimeScheme::Euler => {
                let k1 = self.rhs(state)?;
                state.advance(dt, &k1)?;
            }
            TimeScheme::Midpoint => {
                let k1 = self.rhs(state)?;
                let mut half = state.clone();
                half.advance(0.5 * dt, &k1)?;
                let k2 = self.rhs(&half)?;
                state.advance(dt, &k2)?;
            }
            TimeScheme::Rk4 => {
                let k1 = self.rhs(state)?;
                let mut stage = state.clone();
                stage.advance(0.5 * dt, &k1)?;
                let k2 = self.rhs(&stage)?;
                stage = state.clone();
                stage.advance(0.5 * dt, &k2)?;
                let k3 = self.rhs(&stage)?;
                stage = state.clone();
                stage.advance(dt, &k3)?;
                let k4 = self.rhs(&stage)?;
                let mut acc = k1;
                acc.axpy(2.0, &k2)?;
                acc.axpy(2.0, &k3)?;
                acc.axpy(1.0, &k4)?;
                acc.scale(1.0 / 6.0);
                state.advance(dt, &acc)?;
            }
        }
        Ok(())
    }

    /// March `steps` steps, checking after each one that the state is
    /// finite and below the blow-up limit.
    pub fn run(
        &self,
        state: &mut FluidState,
        dt: f64,
        steps: u64,
        scheme: TimeScheme,
    ) -> Result<()> {
        for k in 0..steps {
            self.step(state, dt, scheme)?;
            self.check_health(state, k + 1)?;
        }
        Ok(())
    }

    /// Blow-up guard; identifies the worst field for the error message.
    pub fn check_health(&self, state: &FluidState, step: u64) -> Result<()> {
        let fields = [
            ("u", state.u.max_norm()),
            ("nu1", state.nu1.max_abs()),
            ("nu2", state.nu2.max_abs()),
            ("beta", state.beta.max_abs()),
            ("s", state.s.max_abs()),
            ("sigma", state.sigma.max_abs()),
        ];
        let worst = fields
            .iter()
            .max_by(|a, b| {
                let x = if a.1.is_nan() { f64::INFINITY } else { a.1 };
                let y = if b.1.is_nan() { f64::INFINITY } else { b.1 };
                x.partial_cmp(&y).unwrap()
            })
            .unwrap();
        if !state.is_finite() || worst.1 > self.blow_up_limit {
            return Err(Error::BlowUp {
                field: worst.0.to_string(),
                time: state.time,
                step,
            });
        }
        Ok(())
    }

    /// Advisory step size: `0.4 h / (|u| + c_s + v_A + diff / h)` with the
    /// fastest signal speeds over the mesh and the largest diffusion-like
    /// coefficient. A guideline rather than a guarantee; stiff closures may
    /// need smaller steps.
    pub fn cfl_advisory(&self, state: &FluidState) -> Result<f64> {
        let duals = dual_fields(state, &self.eos)?;
        let mesh = state.mesh();
        let h = mesh
            .spacing()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let mut bsq = mesh.zeros();
        for c in state.beta.components() {
            bsq.zip_mut_with(c, |o, &v| *o += v * v);
        }
        let mut alfven: f64 = 0.0;
        for (b2, r) in bsq.iter().zip(duals.rho.iter()) {
            alfven = alfven.max(b2 / (self.eos.mu0 * r));
        }
        let alfven = alfven.sqrt();
        let rho_min = duals.rho.iter().cloned().fold(f64::INFINITY, f64::min);
        let visc = self
            .closure
            .viscosity
            .homothety
            .max(self.closure.viscosity.shear)
            .max(self.closure.viscosity.rotational);
        let diffusion = (visc / rho_min)
            .max(self.closure.kappa[MHD_HEAT][MHD_HEAT])
            .max(self.closure.kappa[MHD_DIFFUSION][MHD_DIFFUSION])
            .max(self.closure.kappa[MHD_INDUCTION][MHD_INDUCTION] / self.eos.mu0);
        let speed = state.u.max_norm() + duals.max_sound_speed + alfven + diffusion / h;
        Ok(0.4 * h / speed)
    }
}
