//! Two-species equation of state.
//!
//! The internal energy density as a function of the species concentrations
//! `n1`, `n2` and the entropy density `s` is
//!
//! ```text
//! e(n1, n2, s) = c0 rho^(5/3) exp(s / (cv rho)) + b1 n1 + b2 n2,
//! rho = m1 n1 + m2 n2,
//! ```
//!
//! a monatomic ideal gas in entropy variables plus linear binding offsets
//! that make the two species chemically distinct. All derived quantities
//! come from exact partial derivatives of this expression:
//!
//! ```text
//! phi  = c0 rho^(5/3) exp(s / (cv rho))        (thermal part of e)
//! T    = de/ds  = phi / (cv rho)
//! mu_i = de/dn_i = m_i phi (5/(3 rho) - s / (cv rho^2)) + b_i
//! p    = mu1 n1 + mu2 n2 + T s - e = (2/3) phi
//! ```
//!
//! The closed form for the pressure is a Gibbs-Duhem identity of this
//! particular `e`; the validation suite recomputes `p` from the defining
//! combination and compares against `(2/3) phi` to machine precision, and
//! checks the analytic partials against central differences.

use crate::error::Error;

/// Pointwise thermodynamic evaluation at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointThermo {
    /// Internal energy density `e`.
    pub energy: f64,
    /// Thermal part `phi` of the energy density.
    pub phi: f64,
    /// Temperature `de/ds`.
    pub temperature: f64,
    /// Chemical potentials `de/dn_i`.
    pub mu1: f64,
    pub mu2: f64,
    /// Pressure `(2/3) phi`.
    pub pressure: f64,
    /// Mass density `m1 n1 + m2 n2`.
    pub rho: f64,
}

/// Why a pointwise evaluation failed; the caller supplies the node location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointFault {
    DensityBelowFloor { value: f64 },
    NonPositiveTemperature { value: f64 },
}

impl PointFault {
    /// Attach a node location to produce the crate error.
    pub fn at_node(self, node: Vec<usize>, floor: f64) -> Error {
        match self {
            PointFault::DensityBelowFloor { value } => Error::DensityFloor { node, value, floor },
            PointFault::NonPositiveTemperature { value } => {
                Error::NonPositiveTemperature { node, value }
            }
        }
    }
}

/// Coefficients of the equation of state together with the permeability
/// `mu0` of the induction energy and the density floor below which a state
/// is treated as unphysical rather than clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationOfState {
    pub c0: f64,
    pub cv: f64,
    pub b1: f64,
    pub b2: f64,
    pub m1: f64,
    pub m2: f64,
    pub mu0: f64,
    pub rho_floor: f64,
}

impl Default for EquationOfState {
    fn default() -> Self {
        Self {
            c0: 1.0,
            cv: 1.0,
            b1: 0.2,
            b2: 0.1,
            m1: 2.0,
            m2: 1.0,
            mu0: 1.0,
            rho_floor: 1e-10,
        }
    }
}

impl EquationOfState {
    pub fn rho(&self, n1: f64, n2: f64) -> f64 {
        self.m1 * n1 + self.m2 * n2
    }

    /// Full pointwise evaluation. Fails when the density sits below the
    /// floor or the derived temperature is not positive; both conditions
    /// are hard errors so that a run dies where the state went bad instead
    /// of producing silently clipped thermodynamics.
    pub fn evaluate(&self, n1: f64, n2: f64, s: f64) -> std::result::Result<PointThermo, PointFault> {
        let rho = self.rho(n1, n2);
        if !(rho >= self.rho_floor) {
            return Err(PointFault::DensityBelowFloor { value: rho });
        }
        let phi = self.c0 * rho.powf(5.0 / 3.0) * (s / (self.cv * rho)).exp();
        let temperature = phi / (self.cv * rho);
        if !(temperature > 0.0) {
            return Err(PointFault::NonPositiveTemperature { value: temperature });
        }
        let dphi_drho = phi * (5.0 / (3.0 * rho) - s / (self.cv * rho * rho));
        Ok(PointThermo {
            energy: phi + self.b1 * n1 + self.b2 * n2,
            phi,
            temperature,
            mu1: self.m1 * dphi_drho + self.b1,
            mu2: self.m2 * dphi_drho + self.b2,
            pressure: 2.0 / 3.0 * phi,
            rho,
        })
    }

    /// Specific reaction affinity `mu1/m1 - mu2/m2`, the 0-form force that
    /// drives interconversion of the species.
    pub fn affinity(&self, pt: &PointThermo) -> f64 {
        pt.mu1 / self.m1 - pt.mu2 / self.m2
    }

    /// Adiabatic sound speed, used only for the time-step advisory:
    /// `c^2 = (5/3)(5/3 - s/(cv rho)) ... ` reduces to `gamma p / rho` plus
    /// an entropy-gradient correction that we drop, so this is the usual
    /// `sqrt(gamma p / rho)` estimate.
    pub fn sound_speed(&self, pt: &PointThermo) -> f64 {
        (5.0 / 3.0 * pt.pressure / pt.rho).max(0.0).sqrt()
    }
}
