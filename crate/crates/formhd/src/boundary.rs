//! Wall treatment on bounded axes.
//!
//! The discretization carries boundary nodes explicitly (one-sided stencils
//! instead of ghost layers), so boundary conditions act by overwriting
//! traces: a pinned quantity has its rate zeroed on wall slabs, a Dirichlet
//! dual has its trace replaced before forces are formed. On fully periodic
//! meshes every method here is a no-op.
//!
//! The magnetic condition deserves a note: for the flux 2-form, the
//! components tangential to a face are exactly the flux through that face,
//! so freezing the tangential trace of the induction rate preserves the
//! wall-normal field `B . n` for all time.

use ndarray::Axis;

use crate::form::DiscreteForm;
use crate::state::StateRate;
use crate::trace::{set_face_trace, FaceId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallPolicy {
    /// Hold the velocity fixed on walls (no-slip against the initial trace,
    /// which the standard scenarios set to zero there).
    pub pin_velocity: bool,
    /// Hold entropy and concentrations fixed on walls.
    pub hold_thermo: bool,
    /// Freeze the wall-normal magnetic field.
    pub hold_flux: bool,
    /// Replace the temperature trace before forces are assembled
    /// (isothermal walls).
    pub wall_temperature: Option<f64>,
}

impl Default for WallPolicy {
    fn default() -> Self {
        Self {
            pin_velocity: true,
            hold_thermo: true,
            hold_flux: true,
            wall_temperature: None,
        }
    }
}

impl WallPolicy {
    /// Zero the configured rates on every wall slab.
    pub fn apply_to_rate(&self, rate: &mut StateRate) {
        let mesh = rate.du.mesh().clone();
        let counts = mesh.node_counts();
        for axis in 0..mesh.dim() {
            if mesh.periodic()[axis] {
                continue;
            }
            for upper in [false, true] {
                let slab = if upper { counts[axis] - 1 } else { 0 };
                if self.pin_velocity {
                    for i in 0..mesh.dim() {
                        rate.du
                            .component_mut(i)
                            .index_axis_mut(Axis(axis), slab)
                            .fill(0.0);
                    }
                }
                if self.hold_thermo {
                    for f in [
                        &mut rate.ds,
                        &mut rate.dsigma,
                        &mut rate.dnu1,
                        &mut rate.dnu2,
                    ] {
                        f.component_mut(0)
                            .index_axis_mut(Axis(axis), slab)
                            .fill(0.0);
                    }
                }
                if self.hold_flux {
                    set_face_trace(&mut rate.dbeta, FaceId { axis, upper }, 0.0);
                }
            }
        }
    }

    /// Overwrite the temperature trace for isothermal walls.
    pub fn apply_wall_temperature(&self, dual_s: &mut DiscreteForm) {
        let Some(t0) = self.wall_temperature else {
            return;
        };
        let mesh = dual_s.mesh().clone();
        for axis in 0..mesh.dim() {
            if mesh.periodic()[axis] {
                continue;
            }
            for upper in [false, true] {
                set_face_trace(dual_s, FaceId { axis, upper }, t0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GridMesh;
    use crate::state::StateRate;

    #[test]
    fn rates_are_zeroed_on_wall_slabs_only() {
        let mesh = GridMesh::new(
            vec![6, 6],
            vec![0.2, 0.2],
            vec![true, false],
        )
        .unwrap();
        let mut rate = StateRate::zeros(&mesh).unwrap();
        rate.du.component_mut(0).fill(1.0);
        rate.ds.component_mut(0).fill(2.0);
        rate.dbeta.component_mut(0).fill(3.0);
        WallPolicy::default().apply_to_rate(&mut rate);
        let counts = mesh.node_counts();
        for (pos, &v) in rate.du.component(0).indexed_iter() {
            let wall = pos[1] == 0 || pos[1] == counts[1] - 1;
            assert_eq!(v, if wall { 0.0 } else { 1.0 });
        }
        for (pos, &v) in rate.ds.component(0).indexed_iter() {
            let wall = pos[1] == 0 || pos[1] == counts[1] - 1;
            assert_eq!(v, if wall { 0.0 } else { 2.0 });
        }
        // In the plane the flux form is top degree: no tangential trace, so
        // the induction rate is untouched.
        assert!(rate.dbeta.component(0).iter().all(|&v| v == 3.0));
    }

    #[test]
    fn flux_trace_is_frozen_in_three_dimensions() {
        let mesh = GridMesh::new(
            vec![5, 5, 5],
            vec![0.2, 0.2, 0.2],
            vec![false, true, true],
        )
        .unwrap();
        let mut rate = StateRate::zeros(&mesh).unwrap();
        for i in 0..3 {
            rate.dbeta.component_mut(i).fill(1.0);
        }
        WallPolicy::default().apply_to_rate(&mut rate);
        let counts = mesh.node_counts();
        // Component (1,2) is tangential to the x0 walls.
        for (pos, &v) in rate.dbeta.component(2).indexed_iter() {
            let wall = pos[0] == 0 || pos[0] == counts[0] - 1;
            assert_eq!(v, if wall { 0.0 } else { 1.0 });
        }
        // Components containing axis 0 keep their rates.
        assert!(rate.dbeta.component(0).iter().all(|&v| v == 1.0));
        assert!(rate.dbeta.component(1).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn wall_temperature_overwrites_the_dual_trace() {
        let mesh = GridMesh::new(vec![5, 5], vec![0.25, 0.25], vec![false, true]).unwrap();
        let mut dual_s = DiscreteForm::constant(&mesh, 0, &[4.0]).unwrap();
        let policy = WallPolicy {
            wall_temperature: Some(1.5),
            ..Default::default()
        };
        policy.apply_wall_temperature(&mut dual_s);
        let counts = mesh.node_counts();
        for (pos, &v) in dual_s.component(0).indexed_iter() {
            let wall = pos[0] == 0 || pos[0] == counts[0] - 1;
            assert_eq!(v, if wall { 1.5 } else { 4.0 });
        }
    }
}
