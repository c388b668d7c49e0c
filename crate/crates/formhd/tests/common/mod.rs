//! Helpers shared by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use formhd::{DiscreteForm, GridMesh, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Form with independent uniform(-1, 1) nodal values, deliberately rough:
/// the structural identities must hold without any smoothness.
pub fn random_form(mesh: &Arc<GridMesh>, degree: usize, rng: &mut ChaCha8Rng) -> DiscreteForm {
    let mut a = DiscreteForm::zeros(mesh, degree).unwrap();
    for i in 0..a.components().len() {
        a.component_mut(i)
            .mapv_inplace(|_| rng.random_range(-1.0..1.0));
    }
    a
}

pub fn random_vector(mesh: &Arc<GridMesh>, rng: &mut ChaCha8Rng) -> VectorField {
    let mut u = VectorField::zeros(mesh);
    for i in 0..mesh.dim() {
        u.component_mut(i)
            .mapv_inplace(|_| rng.random_range(-1.0..1.0));
    }
    u
}

/// Smooth random periodic scalar: `mean` plus a few low harmonics with
/// random phases, scaled so the excursion stays within roughly `amp`.
pub fn smooth_scalar(
    mesh: &Arc<GridMesh>,
    rng: &mut ChaCha8Rng,
    mean: f64,
    amp: f64,
) -> formhd::ndarray::ArrayD<f64> {
    let n = mesh.dim();
    let tau = std::f64::consts::TAU;
    let terms: Vec<(f64, Vec<(f64, f64)>)> = (0..3)
        .map(|_| {
            let w = rng.random_range(-1.0..1.0);
            let axes = (0..n)
                .map(|_| {
                    let k = rng.random_range(1..3) as f64;
                    let ph = rng.random_range(0.0..tau);
                    (k, ph)
                })
                .collect();
            (w, axes)
        })
        .collect();
    let extents: Vec<f64> = (0..n).map(|a| mesh.extent(a)).collect();
    mesh.sample(|x| {
        let mut v = mean;
        for (w, axes) in &terms {
            let mut t = *w;
            for (a, &(k, ph)) in axes.iter().enumerate() {
                t *= (tau * k * x[a] / extents[a] + ph).sin();
            }
            v += amp * t / 3.0;
        }
        v
    })
}

/// Max-norm distance between two forms of the same shape.
pub fn form_distance(a: &DiscreteForm, b: &DiscreteForm) -> f64 {
    assert_eq!(a.degree(), b.degree());
    a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| {
            x.iter()
                .zip(y.iter())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Observed order of accuracy when the mesh is refined by a factor of two.
pub fn refinement_slope(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).log2()
}
