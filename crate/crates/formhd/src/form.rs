//! Discrete differential forms and companion field types.
//!
//! A `DiscreteForm` of degree k stores one nodal scalar field per
//! lexicographic multi-index (see [`crate::alt`]), C(n, k) components in
//! total. Vector fields, covector densities (momentum-type fields) and mixed
//! second-order tensor fields use the same nodal layout with n and n x n
//! components respectively. In the flat metric of the mesh coordinates the
//! musical isomorphisms are componentwise identities, so conversions between
//! these types never touch the data.

use std::sync::Arc;

use ndarray::ArrayD;

use crate::alt;
use crate::error::{Error, Result};
use crate::mesh::GridMesh;

fn check_shapes(mesh: &GridMesh, comps: &[ArrayD<f64>], expect: usize, what: &str) -> Result<()> {
    if comps.len() != expect {
        return Err(Error::Shape(format!(
            "{what} needs {expect} components, got {}",
            comps.len()
        )));
    }
    let shape = mesh.node_shape();
    for (i, c) in comps.iter().enumerate() {
        if c.raw_dim() != shape {
            return Err(Error::Shape(format!(
                "{what} component {i} has shape {:?}, mesh nodes are {:?}",
                c.shape(),
                mesh.node_counts()
            )));
        }
    }
    Ok(())
}

macro_rules! componentwise {
    ($ty:ident) => {
        impl $ty {
            /// In-place `self += scale * other`. Operands must share a mesh.
            pub fn axpy(&mut self, scale: f64, other: &$ty) -> Result<()> {
                self.compatible(other)?;
                for (a, b) in self.comps.iter_mut().zip(&other.comps) {
                    a.zip_mut_with(b, |x, y| *x += scale * y);
                }
                Ok(())
            }

            /// In-place multiplication by a scalar.
            pub fn scale(&mut self, factor: f64) {
                for c in &mut self.comps {
                    c.mapv_inplace(|x| x * factor);
                }
            }

            /// Largest absolute nodal value over all components.
            pub fn max_abs(&self) -> f64 {
                self.comps
                    .iter()
                    .flat_map(|c| c.iter())
                    .fold(0.0f64, |m, &v| m.max(v.abs()))
            }

            /// True when all nodal values are finite.
            pub fn is_finite(&self) -> bool {
                self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
            }

            /// Quadrature-weighted L2 norm over all components.
            pub fn l2_norm(&self) -> f64 {
                let w = self.mesh.node_weights();
                let mut acc = 0.0;
                for c in &self.comps {
                    for (v, wt) in c.iter().zip(w.iter()) {
                        acc += wt * v * v;
                    }
                }
                acc.sqrt()
            }

            pub fn mesh(&self) -> &Arc<GridMesh> {
                &self.mesh
            }

            pub fn components(&self) -> &[ArrayD<f64>] {
                &self.comps
            }

            pub fn components_mut(&mut self) -> &mut [ArrayD<f64>] {
                &mut self.comps
            }

            fn compatible(&self, other: &$ty) -> Result<()> {
                if !self.mesh.same_mesh(&other.mesh) {
                    return Err(Error::MeshMismatch);
                }
                if self.comps.len() != other.comps.len() {
                    return Err(Error::Shape(format!(
                        "component counts differ: {} vs {}",
                        self.comps.len(),
                        other.comps.len()
                    )));
                }
                Ok(())
            }
        }
    };
}

/// A k-form sampled on the mesh nodes.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    mesh: Arc<GridMesh>,
    degree: usize,
    comps: Vec<ArrayD<f64>>,
}

componentwise!(DiscreteForm);

impl DiscreteForm {
    pub fn zeros(mesh: &Arc<GridMesh>, degree: usize) -> Result<Self> {
        let n = mesh.dim();
        if degree > n {
            return Err(Error::DegreeRange { degree, n });
        }
        let comps = (0..alt::binomial(n, degree)).map(|_| mesh.zeros()).collect();
        Ok(Self {
            mesh: Arc::clone(mesh),
            degree,
            comps,
        })
    }

    pub fn from_components(
        mesh: &Arc<GridMesh>,
        degree: usize,
        comps: Vec<ArrayD<f64>>,
    ) -> Result<Self> {
        let n = mesh.dim();
        if degree > n {
            return Err(Error::DegreeRange { degree, n });
        }
        check_shapes(mesh, &comps, alt::binomial(n, degree), "form")?;
        Ok(Self {
            mesh: Arc::clone(mesh),
            degree,
            comps,
        })
    }

    /// Constant-coefficient form (useful for uniform initial data).
    pub fn constant(mesh: &Arc<GridMesh>, degree: usize, values: &[f64]) -> Result<Self> {
        let mut form = Self::zeros(mesh, degree)?;
        if values.len() != form.comps.len() {
            return Err(Error::Shape(format!(
                "expected {} constants, got {}",
                form.comps.len(),
                values.len()
            )));
        }
        for (c, &v) in form.comps.iter_mut().zip(values) {
            c.fill(v);
        }
        Ok(form)
    }

    /// Sample an analytic form: `f(x, multi_index)` returns the coefficient
    /// of `dx^multi_index` at the node with coordinates `x`.
    pub fn sample(
        mesh: &Arc<GridMesh>,
        degree: usize,
        f: impl Fn(&[f64], &[usize]) -> f64,
    ) -> Result<Self> {
        let n = mesh.dim();
        if degree > n {
            return Err(Error::DegreeRange { degree, n });
        }
        let comps = alt::multi_indices(n, degree)
            .into_iter()
            .map(|idx| mesh.sample(|x| f(x, &idx)))
            .collect();
        Ok(Self {
            mesh: Arc::clone(mesh),
            degree,
            comps,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Multi-index labels in component order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        alt::multi_indices(self.mesh.dim(), self.degree)
    }

    pub fn component(&self, i: usize) -> &ArrayD<f64> {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ArrayD<f64> {
        &mut self.comps[i]
    }

    /// Consume into the raw component vector.
    pub fn into_components(self) -> Vec<ArrayD<f64>> {
        self.comps
    }
}

/// A vector field, components `u^i` on the coordinate frame.
#[derive(Debug, Clone)]
pub struct VectorField {
    mesh: Arc<GridMesh>,
    comps: Vec<ArrayD<f64>>,
}

componentwise!(VectorField);

impl VectorField {
    pub fn zeros(mesh: &Arc<GridMesh>) -> Self {
        let comps = (0..mesh.dim()).map(|_| mesh.zeros()).collect();
        Self {
            mesh: Arc::clone(mesh),
            comps,
        }
    }

    pub fn from_components(mesh: &Arc<GridMesh>, comps: Vec<ArrayD<f64>>) -> Result<Self> {
        check_shapes(mesh, &comps, mesh.dim(), "vector field")?;
        Ok(Self {
            mesh: Arc::clone(mesh),
            comps,
        })
    }

    pub fn sample(mesh: &Arc<GridMesh>, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let comps = (0..mesh.dim()).map(|i| mesh.sample(|x| f(x, i))).collect();
        Self {
            mesh: Arc::clone(mesh),
            comps,
        }
    }

    pub fn component(&self, i: usize) -> &ArrayD<f64> {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ArrayD<f64> {
        &mut self.comps[i]
    }

    /// Pointwise squared Euclidean norm `|u|^2`.
    pub fn norm_sq(&self) -> ArrayD<f64> {
        let mut out = self.mesh.zeros();
        for c in &self.comps {
            out.zip_mut_with(c, |o, &v| *o += v * v);
        }
        out
    }

    /// Largest pointwise Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.norm_sq().iter().fold(0.0f64, |m, &v| m.max(v)).sqrt()
    }
}

/// A covector-valued density (a momentum-type field), components `m_i` of
/// `m_i dx^i (x) vol`.
#[derive(Debug, Clone)]
pub struct CovectorDensity {
    mesh: Arc<GridMesh>,
    comps: Vec<ArrayD<f64>>,
}

componentwise!(CovectorDensity);

impl CovectorDensity {
    pub fn zeros(mesh: &Arc<GridMesh>) -> Self {
        let comps = (0..mesh.dim()).map(|_| mesh.zeros()).collect();
        Self {
            mesh: Arc::clone(mesh),
            comps,
        }
    }

    pub fn from_components(mesh: &Arc<GridMesh>, comps: Vec<ArrayD<f64>>) -> Result<Self> {
        check_shapes(mesh, &comps, mesh.dim(), "covector density")?;
        Ok(Self {
            mesh: Arc::clone(mesh),
            comps,
        })
    }

    pub fn component(&self, i: usize) -> &ArrayD<f64> {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ArrayD<f64> {
        &mut self.comps[i]
    }

    /// Duality pairing with a vector field: `sum_i integral of m_i u^i`.
    pub fn pair(&self, u: &VectorField) -> Result<f64> {
        if !self.mesh.same_mesh(&u.mesh) {
            return Err(Error::MeshMismatch);
        }
        let w = self.mesh.node_weights();
        let mut acc = 0.0;
        for (mc, uc) in self.comps.iter().zip(&u.comps) {
            for ((m, u), wt) in mc.iter().zip(uc.iter()).zip(w.iter()) {
                acc += wt * m * u;
            }
        }
        Ok(acc)
    }
}

/// A mixed second-order tensor field: component `i * n + j` holds `T^j_i` in
/// the layout where row i is the force/momentum slot and column j the
/// direction slot, so the tensor divergence contracts the column index.
/// The velocity gradient `S^i_j = d u^i / d x^j` and viscous flux both live
/// here; in flat coordinates the two layouts coincide numerically.
#[derive(Debug, Clone)]
pub struct TensorField {
    mesh: Arc<GridMesh>,
    comps: Vec<ArrayD<f64>>,
}

componentwise!(TensorField);

impl TensorField {
    pub fn zeros(mesh: &Arc<GridMesh>) -> Self {
        let n = mesh.dim();
        let comps = (0..n * n).map(|_| mesh.zeros()).collect();
        Self {
            mesh: Arc::clone(mesh),
            comps,
        }
    }

    pub fn from_components(mesh: &Arc<GridMesh>, comps: Vec<ArrayD<f64>>) -> Result<Self> {
        let n = mesh.dim();
        check_shapes(mesh, &comps, n * n, "tensor field")?;
        Ok(Self {
            mesh: Arc::clone(mesh),
            comps,
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> &ArrayD<f64> {
        &self.comps[i * self.mesh.dim() + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ArrayD<f64> {
        let n = self.mesh.dim();
        &mut self.comps[i * n + j]
    }

    /// Pointwise trace.
    pub fn trace(&self) -> ArrayD<f64> {
        let n = self.mesh.dim();
        let mut out = self.mesh.zeros();
        for i in 0..n {
            out.zip_mut_with(self.entry(i, i), |o, &v| *o += v);
        }
        out
    }

    /// Pointwise transpose.
    pub fn transpose(&self) -> TensorField {
        let n = self.mesh.dim();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.comps[i * n + j] = self.comps[j * n + i].clone();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> Arc<GridMesh> {
        GridMesh::periodic_box(&[4, 4, 4], &[1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn component_counts_match_degree() {
        let m = mesh();
        for (k, expect) in [(0, 1), (1, 3), (2, 3), (3, 1)] {
            assert_eq!(
                DiscreteForm::zeros(&m, k).unwrap().components().len(),
                expect
            );
        }
        assert!(DiscreteForm::zeros(&m, 4).is_err());
    }

    #[test]
    fn axpy_requires_same_mesh() {
        let a = mesh();
        let b = GridMesh::periodic_box(&[5, 4, 4], &[1.0, 1.0, 1.0]).unwrap();
        let mut fa = DiscreteForm::zeros(&a, 1).unwrap();
        let fb = DiscreteForm::zeros(&b, 1).unwrap();
        assert!(fa.axpy(1.0, &fb).is_err());
    }

    #[test]
    fn tensor_entry_layout() {
        let m = mesh();
        let mut t = TensorField::zeros(&m);
        t.entry_mut(1, 2).fill(5.0);
        assert_eq!(t.components()[1 * 3 + 2][[0, 0, 0]], 5.0);
        assert_eq!(t.transpose().entry(2, 1)[[0, 0, 0]], 5.0);
    }
}
