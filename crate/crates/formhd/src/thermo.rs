//! Dissipative closures and their Onsager-Casimir validation.
//!
//! A closure maps thermodynamic forces (differentials of the dual fields)
//! to fluxes through a signed scalar coupling matrix `kappa`. The operator
//! attached to entry `(a, b)` is dictated by degree bookkeeping alone:
//!
//! * Hodge star when `deg flux_a + deg force_b = n`,
//! * the identity when `deg flux_a = deg force_b`,
//! * no coupling allowed otherwise; a nonzero scalar there is a validation
//!   failure, not a silently dropped term.
//!
//! When both rules apply (middle degree in the planar case) the star wins,
//! which is what turns the resistive term into a Laplacian rather than a
//! lossless rotation.
//!
//! Validation enforces the reciprocal relations on the scalars: couplings
//! between processes of equal time-reversal parity must be symmetric,
//! couplings across parities antisymmetric, and the symmetric same-parity
//! blocks positive semidefinite. Under these conditions the pointwise
//! entropy production
//!
//! `sum_a force_a ^ flux_a`
//!
//! is nonnegative node by node, and the antisymmetric cross-parity pairs
//! cancel in it identically, not just after integration.
//!
//! Viscosity sits outside the form-valued matrix because its force and flux
//! are velocity-gradient tensors. The stress is assembled from three
//! orthogonal projections of `grad u` (homothety, symmetric trace-free,
//! skew) with one nonnegative coefficient each.

use ndarray::ArrayD;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::form::{DiscreteForm, TensorField};
use crate::mesh::GridMesh;
use crate::ops;
use std::sync::Arc;

/// Behavior of a process under time reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Continuous processes have fluxes entering the dynamics through `d`;
/// discrete ones (chemical reactions) act pointwise with top-degree fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProcessKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcessDescriptor {
    pub name: String,
    pub kind: ProcessKind,
    pub parity: Parity,
    /// Degree of the thermodynamic force this process responds to.
    pub force_degree: usize,
    /// Degree of the produced flux; always `n - force_degree` so that the
    /// production pairing `force ^ flux` is a top form.
    pub flux_degree: usize,
}

impl ProcessDescriptor {
    pub fn continuous(name: &str, n: usize, force_degree: usize, parity: Parity) -> Self {
        Self {
            name: name.into(),
            kind: ProcessKind::Continuous,
            parity,
            force_degree,
            flux_degree: n - force_degree,
        }
    }

    pub fn discrete(name: &str, n: usize, force_degree: usize, parity: Parity) -> Self {
        Self {
            name: name.into(),
            kind: ProcessKind::Discrete,
            parity,
            force_degree,
            flux_degree: n - force_degree,
        }
    }
}

/// Coefficients of the viscous stress on the three invariant projections
/// of the velocity gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViscosityTriple {
    /// Dilatational response (homothety projection).
    pub homothety: f64,
    /// Shear response (symmetric trace-free projection).
    pub shear: f64,
    /// Rotational response (skew projection).
    pub rotational: f64,
}

impl ViscosityTriple {
    pub fn zero() -> Self {
        Self {
            homothety: 0.0,
            shear: 0.0,
            rotational: 0.0,
        }
    }
}

/// Index layout of [`ClosureSpec::mhd`].
pub const MHD_HEAT: usize = 0;
pub const MHD_DIFFUSION: usize = 1;
pub const MHD_INDUCTION: usize = 2;
pub const MHD_REACTION: usize = 3;

/// A complete dissipative closure: the process list, the signed scalar
/// coupling matrix over it, and the viscous triple.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureSpec {
    pub n: usize,
    pub processes: Vec<ProcessDescriptor>,
    pub kappa: Vec<Vec<f64>>,
    pub viscosity: ViscosityTriple,
}

/// Named coefficients for the magnetofluid closure.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MhdCoefficients {
    /// Heat conduction.
    pub kappa_ss: f64,
    /// Species diffusion.
    pub kappa_nn: f64,
    /// Resistivity.
    pub kappa_bb: f64,
    /// Thermodiffusion (symmetric, both even).
    pub kappa_ns: f64,
    /// Heat-induction cross coupling (antisymmetric, even against odd).
    pub kappa_bs: f64,
    /// Diffusion-induction cross coupling (antisymmetric).
    pub kappa_bn: f64,
    /// Reaction rate.
    pub kappa_r: f64,
    pub viscosity: ViscosityTriple,
}

impl MhdCoefficients {
    pub fn ideal() -> Self {
        Self {
            kappa_ss: 0.0,
            kappa_nn: 0.0,
            kappa_bb: 0.0,
            kappa_ns: 0.0,
            kappa_bs: 0.0,
            kappa_bn: 0.0,
            kappa_r: 0.0,
            viscosity: ViscosityTriple::zero(),
        }
    }
}

impl ClosureSpec {
    /// The four-process closure of the two-species magnetofluid: heat
    /// conduction, species diffusion, resistive induction and a single
    /// interconversion reaction. Cross couplings follow the reciprocal
    /// sign pattern; entries that the degree bookkeeping forbids (reaction
    /// against everything else) are structurally zero.
    pub fn mhd(n: usize, c: &MhdCoefficients) -> Self {
        let processes = vec![
            ProcessDescriptor::continuous("heat", n, 1, Parity::Even),
            ProcessDescriptor::continuous("diffusion", n, 1, Parity::Even),
            ProcessDescriptor::continuous("induction", n, n - 1, Parity::Odd),
            ProcessDescriptor::discrete("reaction", n, 0, Parity::Even),
        ];
        let kappa = vec![
            vec![c.kappa_ss, c.kappa_ns, -c.kappa_bs, 0.0],
            vec![c.kappa_ns, c.kappa_nn, -c.kappa_bn, 0.0],
            vec![c.kappa_bs, c.kappa_bn, c.kappa_bb, 0.0],
            vec![0.0, 0.0, 0.0, c.kappa_r],
        ];
        Self {
            n,
            processes,
            kappa,
            viscosity: c.viscosity,
        }
    }

    fn operator_kind(&self, flux_degree: usize, force_degree: usize) -> Option<OperatorKind> {
        if flux_degree + force_degree == self.n {
            Some(OperatorKind::Star)
        } else if flux_degree == force_degree {
            Some(OperatorKind::Identity)
        } else {
            None
        }
    }

    /// Check reciprocity, definiteness and degree compatibility. The report
    /// is serializable for the validator front end.
    pub fn validate(&self) -> ClosureReport {
        let k = self.processes.len();
        let mut violations = Vec::new();
        let scale = self
            .kappa
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);

        if self.kappa.len() != k || self.kappa.iter().any(|row| row.len() != k) {
            violations.push(format!(
                "kappa must be {k} x {k} to match the process list"
            ));
            return ClosureReport::failed(violations);
        }
        for p in &self.processes {
            if p.force_degree > self.n || p.force_degree + p.flux_degree != self.n {
                violations.push(format!(
                    "process {} has degrees ({}, {}); the production pairing needs them complementary in dimension {}",
                    p.name, p.force_degree, p.flux_degree, self.n
                ));
            }
        }

        for a in 0..k {
            for b in 0..k {
                let v = self.kappa[a][b];
                if v != 0.0
                    && self
                        .operator_kind(self.processes[a].flux_degree, self.processes[b].force_degree)
                        .is_none()
                {
                    violations.push(format!(
                        "coupling {} <- {} is degree-incompatible (flux degree {}, force degree {}) but kappa = {v:.3e}",
                        self.processes[a].name,
                        self.processes[b].name,
                        self.processes[a].flux_degree,
                        self.processes[b].force_degree
                    ));
                }
            }
        }

        for a in 0..k {
            for b in (a + 1)..k {
                let same = self.processes[a].parity == self.processes[b].parity;
                let (lhs, rhs) = (self.kappa[a][b], self.kappa[b][a]);
                let residual = if same { lhs - rhs } else { lhs + rhs };
                if residual.abs() > 1e-12 * scale {
                    violations.push(format!(
                        "reciprocity violated between {} and {}: kappa_ab = {lhs:.6e}, kappa_ba = {rhs:.6e}, parities {:?}/{:?}",
                        self.processes[a].name,
                        self.processes[b].name,
                        self.processes[a].parity,
                        self.processes[b].parity
                    ));
                }
            }
        }

        let mut even_eigenvalues = Vec::new();
        let mut odd_eigenvalues = Vec::new();
        for (parity, out) in [
            (Parity::Even, &mut even_eigenvalues),
            (Parity::Odd, &mut odd_eigenvalues),
        ] {
            let members: Vec<usize> = (0..k)
                .filter(|&i| self.processes[i].parity == parity)
                .collect();
            if members.is_empty() {
                continue;
            }
            let m = members.len();
            let block = nalgebra::DMatrix::from_fn(m, m, |i, j| {
                0.5 * (self.kappa[members[i]][members[j]] + self.kappa[members[j]][members[i]])
            });
            let block_scale = block.amax().max(1.0);
            let eig = nalgebra::SymmetricEigen::new(block);
            let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
            vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
            if let Some(&min) = vals.first() {
                if min < -1e-10 * block_scale {
                    violations.push(format!(
                        "{parity:?} symmetric block is indefinite: smallest eigenvalue {min:.6e}"
                    ));
                }
            }
            *out = vals;
        }

        for (name, v) in [
            ("homothety", self.viscosity.homothety),
            ("shear", self.viscosity.shear),
            ("rotational", self.viscosity.rotational),
        ] {
            if v < 0.0 {
                violations.push(format!("viscosity coefficient {name} = {v:.6e} is negative"));
            }
        }

        ClosureReport {
            ok: violations.is_empty(),
            violations,
            even_eigenvalues,
            odd_eigenvalues,
            viscosity: self.viscosity,
        }
    }

    /// Same as [`validate`](Self::validate) but as a `Result`, for callers
    /// that refuse to run with an invalid closure.
    pub fn ensure_valid(&self) -> Result<ClosureReport> {
        let report = self.validate();
        if report.ok {
            Ok(report)
        } else {
            Err(Error::ClosureInvalid(report.violations.join("; ")))
        }
    }

    /// Map forces to fluxes. `forces[b]` must carry the declared force
    /// degree of process `b`; the result carries the flux degrees.
    pub fn apply(&self, forces: &[DiscreteForm]) -> Result<Vec<DiscreteForm>> {
        let k = self.processes.len();
        if forces.len() != k {
            return Err(Error::Shape(format!(
                "{} forces supplied for {k} processes",
                forces.len()
            )));
        }
        let mesh: &Arc<GridMesh> = forces
            .first()
            .map(|f| f.mesh())
            .ok_or_else(|| Error::ClosureInvalid("empty process list".into()))?;
        for (p, f) in self.processes.iter().zip(forces) {
            if f.degree() != p.force_degree {
                return Err(Error::DegreeMismatch(format!(
                    "force for {} has degree {}, declared {}",
                    p.name,
                    f.degree(),
                    p.force_degree
                )));
            }
        }
        let mut fluxes = Vec::with_capacity(k);
        for a in 0..k {
            let mut flux = DiscreteForm::zeros(mesh, self.processes[a].flux_degree)?;
            for b in 0..k {
                let v = self.kappa[a][b];
                if v == 0.0 {
                    continue;
                }
                match self.operator_kind(self.processes[a].flux_degree, forces[b].degree()) {
                    Some(OperatorKind::Star) => flux.axpy(v, &ops::hodge(&forces[b])?)?,
                    Some(OperatorKind::Identity) => flux.axpy(v, &forces[b])?,
                    None => {
                        return Err(Error::ClosureInvalid(format!(
                            "degree-incompatible coupling {} <- {}",
                            self.processes[a].name, self.processes[b].name
                        )))
                    }
                }
            }
            fluxes.push(flux);
        }
        Ok(fluxes)
    }

    /// Nodal entropy production `sum_a force_a ^ flux_a` (coefficient of
    /// the top form). For a closure that passes validation this is
    /// nonnegative at every node up to rounding.
    pub fn production_density(
        &self,
        forces: &[DiscreteForm],
        fluxes: &[DiscreteForm],
    ) -> Result<ArrayD<f64>> {
        let mesh = forces
            .first()
            .map(|f| f.mesh())
            .ok_or_else(|| Error::ClosureInvalid("empty process list".into()))?;
        let mut acc = mesh.zeros();
        for (force, flux) in forces.iter().zip(fluxes) {
            let term = ops::wedge(force, flux)?;
            if term.degree() != self.n {
                return Err(Error::DegreeMismatch(format!(
                    "production term has degree {}, expected top",
                    term.degree()
                )));
            }
            acc.zip_mut_with(term.component(0), |o, &v| *o += v);
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OperatorKind {
    Star,
    Identity,
}

/// Outcome of [`ClosureSpec::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub ok: bool,
    pub violations: Vec<String>,
    /// Eigenvalues of the symmetric even-parity block, ascending.
    pub even_eigenvalues: Vec<f64>,
    /// Eigenvalues of the symmetric odd-parity block, ascending.
    pub odd_eigenvalues: Vec<f64>,
    pub viscosity: ViscosityTriple,
}

impl ClosureReport {
    fn failed(violations: Vec<String>) -> Self {
        Self {
            ok: false,
            violations,
            even_eigenvalues: Vec::new(),
            odd_eigenvalues: Vec::new(),
            viscosity: ViscosityTriple::zero(),
        }
    }
}

/// Orthogonal decomposition of a velocity gradient into homothety,
/// symmetric trace-free and skew parts. The three add back to the input.
pub fn decompose_gradient(g: &TensorField) -> (TensorField, TensorField, TensorField) {
    let mesh = g.mesh().clone();
    let n = mesh.dim();
    let trace = g.trace();
    let mut homothety = TensorField::zeros(&mesh);
    for i in 0..n {
        let dst = homothety.entry_mut(i, i);
        dst.zip_mut_with(&trace, |o, &t| *o = t / n as f64);
    }
    let mut shear = TensorField::zeros(&mesh);
    let mut skew = TensorField::zeros(&mesh);
    for i in 0..n {
        for j in 0..n {
            let gij = g.entry(i, j).clone();
            let gji = g.entry(j, i).clone();
            let sym = shear.entry_mut(i, j);
            ndarray::Zip::from(sym).and(&gij).and(&gji).for_each(|o, &a, &b| {
                *o = 0.5 * (a + b);
            });
            let skw = skew.entry_mut(i, j);
            ndarray::Zip::from(skw).and(&gij).and(&gji).for_each(|o, &a, &b| {
                *o = 0.5 * (a - b);
            });
        }
    }
    for i in 0..n {
        let h = homothety.entry(i, i).clone();
        shear.entry_mut(i, i).zip_mut_with(&h, |o, &v| *o -= v);
    }
    (homothety, shear, skew)
}

/// Viscous stress `kappa_h H + kappa_0 S + kappa_a A` from the projections
/// of the velocity gradient.
pub fn viscous_stress(triple: &ViscosityTriple, g: &TensorField) -> TensorField {
    let (h, s, a) = decompose_gradient(g);
    let mesh = g.mesh().clone();
    let n = mesh.dim();
    let mut out = TensorField::zeros(&mesh);
    for i in 0..n {
        for j in 0..n {
            let dst = out.entry_mut(i, j);
            ndarray::Zip::from(dst)
                .and(h.entry(i, j))
                .and(s.entry(i, j))
                .and(a.entry(i, j))
                .for_each(|o, &hv, &sv, &av| {
                    *o = triple.homothety * hv + triple.shear * sv + triple.rotational * av;
                });
        }
    }
    out
}
