//! Uniform Cartesian meshes with per-axis periodicity.

use std::sync::Arc;

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};

/// A uniform Cartesian grid on an axis-aligned box, n = 2 or 3.
///
/// `dims` counts cells per axis. A periodic axis with m cells carries m nodes
/// covering `[0, m h)`; a bounded axis carries m + 1 nodes including both
/// endpoints. All fields are collocated on these nodes. Bounded axes reserve a
/// one-node ghost reach for boundary-condition stencils (`ghost_width`);
/// derivative stencils at bounded ends are one-sided and second order, so the
/// ghost layer never stores state.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMesh {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    periodic: Vec<bool>,
}

impl GridMesh {
    /// Minimum cells per axis. Below this the one-sided boundary stencils and
    /// the centered interior stencils would overlap.
    pub const MIN_CELLS: usize = 4;

    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, periodic: Vec<bool>) -> Result<Arc<Self>> {
        let n = dims.len();
        if !(n == 2 || n == 3) {
            return Err(Error::MeshDimension(n));
        }
        if spacing.len() != n || periodic.len() != n {
            return Err(Error::Shape(format!(
                "dims/spacing/periodic lengths disagree: {}/{}/{}",
                n,
                spacing.len(),
                periodic.len()
            )));
        }
        for ax in 0..n {
            if dims[ax] < Self::MIN_CELLS {
                return Err(Error::MeshAxis {
                    axis: ax,
                    reason: format!("{} cells, need at least {}", dims[ax], Self::MIN_CELLS),
                });
            }
            if !(spacing[ax].is_finite() && spacing[ax] > 0.0) {
                return Err(Error::MeshAxis {
                    axis: ax,
                    reason: format!("spacing {} not positive and finite", spacing[ax]),
                });
            }
        }
        Ok(Arc::new(Self {
            dims,
            spacing,
            periodic,
        }))
    }

    /// Fully periodic box of the given extent per axis.
    pub fn periodic_box(dims: &[usize], extent: &[f64]) -> Result<Arc<Self>> {
        let spacing = dims
            .iter()
            .zip(extent)
            .map(|(&m, &l)| l / m as f64)
            .collect();
        Self::new(dims.to_vec(), spacing, vec![true; dims.len()])
    }

    /// Bounded box (no periodic axis) of the given extent per axis.
    pub fn bounded_box(dims: &[usize], extent: &[f64]) -> Result<Arc<Self>> {
        let spacing = dims
            .iter()
            .zip(extent)
            .map(|(&m, &l)| l / m as f64)
            .collect();
        Self::new(dims.to_vec(), spacing, vec![false; dims.len()])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    /// Nodes per axis: cells on periodic axes, cells + 1 on bounded axes.
    pub fn node_counts(&self) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.periodic)
            .map(|(&m, &p)| if p { m } else { m + 1 })
            .collect()
    }

    pub fn node_shape(&self) -> IxDyn {
        IxDyn(&self.node_counts())
    }

    pub fn node_total(&self) -> usize {
        self.node_counts().iter().product()
    }

    /// Extent of the box along `axis`.
    pub fn extent(&self, axis: usize) -> f64 {
        self.dims[axis] as f64 * self.spacing[axis]
    }

    /// Ghost reach on bounded axes (one node), zero on periodic axes.
    pub fn ghost_width(&self, axis: usize) -> usize {
        if self.periodic[axis] {
            0
        } else {
            1
        }
    }

    /// Nodal quadrature weights along one axis: the cell size on periodic
    /// axes (the summation-by-parts partner of the centered difference) and
    /// the trapezoid weights on bounded axes.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing[axis];
        if self.periodic[axis] {
            vec![h; self.dims[axis]]
        } else {
            let m = self.dims[axis] + 1;
            let mut w = vec![h; m];
            w[0] = 0.5 * h;
            w[m - 1] = 0.5 * h;
            w
        }
    }

    /// Full tensor-product quadrature weight field on the nodes.
    pub fn node_weights(&self) -> ArrayD<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_weights(a)).collect();
        let mut w = ArrayD::from_elem(self.node_shape(), 1.0);
        for (idx, v) in w.indexed_iter_mut() {
            for (a, weights) in per_axis.iter().enumerate() {
                *v *= weights[idx[a]];
            }
        }
        w
    }

    /// Coordinate of node index `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.spacing[axis]
    }

    /// Zero scalar field on the nodes.
    pub fn zeros(&self) -> ArrayD<f64> {
        ArrayD::zeros(self.node_shape())
    }

    /// Evaluate a function of the node coordinates into a scalar field.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> ArrayD<f64> {
        let n = self.dim();
        let mut out = self.zeros();
        let mut x = vec![0.0; n];
        for (idx, v) in out.indexed_iter_mut() {
            for a in 0..n {
                x[a] = idx[a] as f64 * self.spacing[a];
            }
            *v = f(&x);
        }
        out
    }

    /// True when both operands are the same mesh (same dims, spacing,
    /// periodicity). Operators require this before combining fields.
    pub fn same_mesh(&self, other: &GridMesh) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts_follow_periodicity() {
        let m = GridMesh::new(
            vec![8, 6, 4],
            vec![0.1, 0.2, 0.3],
            vec![true, false, true],
        )
        .unwrap();
        assert_eq!(m.node_counts(), vec![8, 7, 4]);
        assert_eq!(m.ghost_width(0), 0);
        assert_eq!(m.ghost_width(1), 1);
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(GridMesh::new(vec![8], vec![0.1], vec![true]).is_err());
        assert!(GridMesh::new(vec![3, 8], vec![0.1, 0.1], vec![true, true]).is_err());
        assert!(GridMesh::new(vec![8, 8], vec![0.1, -0.1], vec![true, true]).is_err());
        assert!(GridMesh::new(vec![8, 8, 8, 8], vec![0.1; 4], vec![true; 4]).is_err());
    }

    #[test]
    fn quadrature_weights_sum_to_volume() {
        let m = GridMesh::new(
            vec![8, 5, 4],
            vec![0.25, 0.2, 0.5],
            vec![true, false, false],
        )
        .unwrap();
        let total: f64 = m.node_weights().sum();
        let volume = m.extent(0) * m.extent(1) * m.extent(2);
        assert!((total - volume).abs() < 1e-12 * volume);
    }
}
