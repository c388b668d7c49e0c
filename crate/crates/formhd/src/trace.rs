//! Pullback of forms to the mesh boundary.

use ndarray::{ArrayD, Axis};

use crate::error::Result;
use crate::form::DiscreteForm;

/// Identifies one boundary face of a bounded axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceId {
    pub axis: usize,
    /// False for the low end (coordinate 0), true for the high end.
    pub upper: bool,
}

/// The tangential components of a form restricted to one boundary face.
/// Multi-indices are those of the ambient form that avoid the face normal;
/// arrays have one dimension fewer than the mesh.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    pub face: FaceId,
    pub multi_indices: Vec<Vec<usize>>,
    pub comps: Vec<ArrayD<f64>>,
}

impl FaceTrace {
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Boundary trace `i* a`, one entry per face of each bounded axis.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub faces: Vec<FaceTrace>,
}

impl BoundaryTrace {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.faces.iter().fold(0.0f64, |m, f| m.max(f.max_abs()))
    }
}

/// Restrict the purely tangential components of `a` to each bounded face.
///
/// Periodic axes contribute no boundary, so a fully periodic mesh yields an
/// empty trace; a top-degree form always carries the face normal and its
/// trace is identically empty as well.
pub fn boundary_trace(a: &DiscreteForm) -> Result<BoundaryTrace> {
    let mesh = a.mesh();
    let n = mesh.dim();
    let indices = a.multi_indices();
    let counts = mesh.node_counts();
    let mut faces = Vec::new();
    for axis in 0..n {
        if mesh.periodic()[axis] {
            continue;
        }
        let tangential: Vec<usize> = indices
            .iter()
            .enumerate()
            .filter(|(_, idx)| !idx.contains(&axis))
            .map(|(ci, _)| ci)
            .collect();
        if tangential.is_empty() {
            continue;
        }
        for upper in [false, true] {
            let slab = if upper { counts[axis] - 1 } else { 0 };
            let comps: Vec<ArrayD<f64>> = tangential
                .iter()
                .map(|&ci| a.component(ci).index_axis(Axis(axis), slab).to_owned())
                .collect();
            faces.push(FaceTrace {
                face: FaceId { axis, upper },
                multi_indices: tangential.iter().map(|&ci| indices[ci].clone()).collect(),
                comps,
            });
        }
    }
    Ok(BoundaryTrace { faces })
}

/// Overwrite the trace components of `a` on one face with a constant value
/// (used by the boundary-condition machinery for homogeneous and constant
/// Neumann traces).
pub fn set_face_trace(a: &mut DiscreteForm, face: FaceId, value: f64) {
    let mesh = a.mesh().clone();
    if mesh.periodic()[face.axis] {
        return;
    }
    let counts = mesh.node_counts();
    let slab = if face.upper { counts[face.axis] - 1 } else { 0 };
    let indices = a.multi_indices();
    for (ci, idx) in indices.iter().enumerate() {
        if idx.contains(&face.axis) {
            continue;
        }
        a.component_mut(ci)
            .index_axis_mut(Axis(face.axis), slab)
            .fill(value);
    }
}
