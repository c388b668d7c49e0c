//! Calculus operators on discrete forms.
//!
//! Partial derivatives are centered second-order differences on periodic
//! axes and one-sided second-order stencils at bounded ends. Because each
//! difference operator acts along its own axis they commute exactly, which
//! makes `d(d(a)) = 0` a machine-precision identity on every mesh. On
//! periodic axes the centered difference is antisymmetric under the uniform
//! nodal quadrature, so summation by parts
//!
//! `integral(df ^ eta) + (-1)^deg(f) integral(f ^ d eta) = 0`
//!
//! holds exactly as well; the energy bookkeeping of the solver leans on both
//! identities.
//!
//! Degree bookkeeping is strict: `d` of a top-degree form, interior products
//! of 0-forms and wedge products past the top degree are errors rather than
//! silent zeros, so an operator chain that drops out of range is caught at
//! the point of the mistake.

use ndarray::{ArrayD, Axis};

use crate::alt;
use crate::error::{Error, Result};
use crate::form::{CovectorDensity, DiscreteForm, TensorField, VectorField};
use crate::mesh::GridMesh;

/// Partial difference of a nodal scalar field along one axis.
pub fn diff_axis(mesh: &GridMesh, f: &ArrayD<f64>, axis: usize) -> ArrayD<f64> {
    let m = f.shape()[axis];
    let inv2h = 1.0 / (2.0 * mesh.spacing()[axis]);
    let mut out = ArrayD::zeros(f.raw_dim());
    for (src, mut dst) in f
        .lanes(Axis(axis))
        .into_iter()
        .zip(out.lanes_mut(Axis(axis)))
    {
        if mesh.periodic()[axis] {
            for i in 0..m {
                let ip = if i + 1 == m { 0 } else { i + 1 };
                let im = if i == 0 { m - 1 } else { i - 1 };
                dst[i] = (src[ip] - src[im]) * inv2h;
            }
        } else {
            dst[0] = (-3.0 * src[0] + 4.0 * src[1] - src[2]) * inv2h;
            for i in 1..m - 1 {
                dst[i] = (src[i + 1] - src[i - 1]) * inv2h;
            }
            dst[m - 1] = (3.0 * src[m - 1] - 4.0 * src[m - 2] + src[m - 3]) * inv2h;
        }
    }
    out
}

/// Exterior derivative, degree k to k + 1.
pub fn exterior_derivative(a: &DiscreteForm) -> Result<DiscreteForm> {
    let mesh = a.mesh();
    let n = mesh.dim();
    let k = a.degree();
    if k == n {
        return Err(Error::DegreeOverflow(k));
    }
    let mut out = DiscreteForm::zeros(mesh, k + 1)?;
    let indices = a.multi_indices();
    for (ci, idx) in indices.iter().enumerate() {
        for axis in 0..n {
            let Some((sign, target)) = alt::insert(idx, axis) else {
                continue;
            };
            let d = diff_axis(mesh, a.component(ci), axis);
            let t = alt::position(n, &target);
            out.component_mut(t).zip_mut_with(&d, |o, &v| *o += sign * v);
        }
    }
    Ok(out)
}

/// Pointwise wedge product. Degrees must satisfy `deg a + deg b <= n`.
pub fn wedge(a: &DiscreteForm, b: &DiscreteForm) -> Result<DiscreteForm> {
    if !a.mesh().same_mesh(b.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mesh = a.mesh();
    let n = mesh.dim();
    let (ka, kb) = (a.degree(), b.degree());
    if ka + kb > n {
        return Err(Error::DegreeMismatch(format!(
            "wedge of degrees {ka} and {kb} exceeds the mesh dimension {n}"
        )));
    }
    let mut out = DiscreteForm::zeros(mesh, ka + kb)?;
    let ia = a.multi_indices();
    let ib = b.multi_indices();
    for (ca, idx_a) in ia.iter().enumerate() {
        for (cb, idx_b) in ib.iter().enumerate() {
            let Some((sign, merged)) = alt::merge_sign(idx_a, idx_b) else {
                continue;
            };
            let t = alt::position(n, &merged);
            let (fa, fb) = (a.component(ca), b.component(cb));
            let mut term = fa.clone();
            term.zip_mut_with(fb, |x, &y| *x *= y);
            out.component_mut(t)
                .zip_mut_with(&term, |o, &v| *o += sign * v);
        }
    }
    Ok(out)
}

/// Hodge star in the flat metric of the mesh coordinates, degree k to n - k.
pub fn hodge(a: &DiscreteForm) -> Result<DiscreteForm> {
    let mesh = a.mesh();
    let n = mesh.dim();
    let mut out = DiscreteForm::zeros(mesh, n - a.degree())?;
    for (ci, idx) in a.multi_indices().iter().enumerate() {
        let sign = alt::hodge_sign(n, idx);
        let target = alt::complement(n, idx);
        let t = alt::position(n, &target);
        out.component_mut(t)
            .zip_mut_with(a.component(ci), |o, &v| *o = sign * v);
    }
    Ok(out)
}

/// Interior product `i_u a`, degree k to k - 1.
pub fn interior_product(u: &VectorField, a: &DiscreteForm) -> Result<DiscreteForm> {
    if !a.mesh().same_mesh(u.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mesh = a.mesh();
    let n = mesh.dim();
    let k = a.degree();
    if k == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let mut out = DiscreteForm::zeros(mesh, k - 1)?;
    for (ci, idx) in a.multi_indices().iter().enumerate() {
        for pos in 0..k {
            let (sign, rest) = alt::remove_at(idx, pos);
            let t = alt::position(n, &rest);
            let uc = u.component(idx[pos]);
            let ac = a.component(ci);
            let dst = out.component_mut(t);
            ndarray::Zip::from(dst).and(uc).and(ac).for_each(|o, &uv, &av| {
                *o += sign * uv * av;
            });
        }
    }
    Ok(out)
}

/// Interior product with the coordinate unit vector of `axis`; pure
/// component shuffling, shared by the diamond assembly.
pub fn interior_unit(axis: usize, a: &DiscreteForm) -> Result<DiscreteForm> {
    let mesh = a.mesh();
    let n = mesh.dim();
    let k = a.degree();
    if k == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let mut out = DiscreteForm::zeros(mesh, k - 1)?;
    for (ci, idx) in a.multi_indices().iter().enumerate() {
        let Some(pos) = idx.iter().position(|&i| i == axis) else {
            continue;
        };
        let (sign, rest) = alt::remove_at(idx, pos);
        let t = alt::position(n, &rest);
        out.component_mut(t)
            .zip_mut_with(a.component(ci), |o, &v| *o += sign * v);
    }
    Ok(out)
}

/// Lie derivative along `u` via Cartan's formula `i_u d + d i_u`, with the
/// out-of-range half dropped at the bottom and top degrees.
pub fn lie_derivative(u: &VectorField, a: &DiscreteForm) -> Result<DiscreteForm> {
    let n = a.mesh().dim();
    let k = a.degree();
    let mut out = DiscreteForm::zeros(a.mesh(), k)?;
    if k < n {
        let t = interior_product(u, &exterior_derivative(a)?)?;
        out.axpy(1.0, &t)?;
    }
    if k > 0 {
        let t = exterior_derivative(&interior_product(u, a)?)?;
        out.axpy(1.0, &t)?;
    }
    Ok(out)
}

/// Diamond product `b (*) a` of a dual variable `b` of degree n - k against a
/// state form `a` of degree k. The result is the covector density defined by
/// the adjoint relation `<b (*) a, v> = -<b, L_v a>`; componentwise it is the
/// n-form coefficient of `i_e db ^ a - b ^ i_e da` for each coordinate
/// direction `e`. On periodic meshes the adjoint relation holds to machine
/// precision because it reduces to summation by parts plus a pointwise
/// algebraic identity.
pub fn diamond(b: &DiscreteForm, a: &DiscreteForm) -> Result<CovectorDensity> {
    if !a.mesh().same_mesh(b.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mesh = a.mesh();
    let n = mesh.dim();
    let k = a.degree();
    if b.degree() + k != n {
        return Err(Error::DegreeMismatch(format!(
            "diamond needs complementary degrees, got {} and {}",
            b.degree(),
            k
        )));
    }
    let db = if b.degree() < n {
        Some(exterior_derivative(b)?)
    } else {
        None
    };
    let da = if k < n {
        Some(exterior_derivative(a)?)
    } else {
        None
    };
    let mut comps = Vec::with_capacity(n);
    for axis in 0..n {
        let mut acc = mesh.zeros();
        if let Some(db) = &db {
            let t = wedge(&interior_unit(axis, db)?, a)?;
            acc.zip_mut_with(t.component(0), |o, &v| *o += v);
        }
        if let Some(da) = &da {
            let t = wedge(b, &interior_unit(axis, da)?)?;
            acc.zip_mut_with(t.component(0), |o, &v| *o -= v);
        }
        comps.push(acc);
    }
    CovectorDensity::from_components(mesh, comps)
}

/// Integral of a top-degree form over the mesh (nodal quadrature).
pub fn integrate(a: &DiscreteForm) -> Result<f64> {
    let mesh = a.mesh();
    if a.degree() != mesh.dim() {
        return Err(Error::DegreeMismatch(format!(
            "integrate expects a top-degree form, got degree {}",
            a.degree()
        )));
    }
    let w = mesh.node_weights();
    Ok(a.component(0)
        .iter()
        .zip(w.iter())
        .map(|(v, wt)| v * wt)
        .sum())
}

/// Duality pairing `integral(b ^ a)` of forms with complementary degrees.
pub fn pairing(b: &DiscreteForm, a: &DiscreteForm) -> Result<f64> {
    if b.degree() + a.degree() != b.mesh().dim() {
        return Err(Error::DegreeMismatch(format!(
            "pairing needs complementary degrees, got {} and {}",
            b.degree(),
            a.degree()
        )));
    }
    integrate(&wedge(b, a)?)
}

/// Metric inner product of two forms of equal degree: `integral(a ^ star b)`,
/// computed componentwise since the coordinate frame is orthonormal.
pub fn l2_inner(a: &DiscreteForm, b: &DiscreteForm) -> Result<f64> {
    if !a.mesh().same_mesh(b.mesh()) {
        return Err(Error::MeshMismatch);
    }
    if a.degree() != b.degree() {
        return Err(Error::DegreeMismatch(format!(
            "inner product needs equal degrees, got {} and {}",
            a.degree(),
            b.degree()
        )));
    }
    let w = a.mesh().node_weights();
    let mut acc = 0.0;
    for (ca, cb) in a.components().iter().zip(b.components()) {
        for ((x, y), wt) in ca.iter().zip(cb.iter()).zip(w.iter()) {
            acc += wt * x * y;
        }
    }
    Ok(acc)
}

/// Index-raising on 1-forms; componentwise identity in the flat metric.
pub fn sharp(alpha: &DiscreteForm) -> Result<VectorField> {
    if alpha.degree() != 1 {
        return Err(Error::DegreeMismatch(format!(
            "sharp acts on 1-forms, got degree {}",
            alpha.degree()
        )));
    }
    VectorField::from_components(alpha.mesh(), alpha.components().to_vec())
}

/// Index-lowering on vector fields; componentwise identity in the flat metric.
pub fn flat(u: &VectorField) -> Result<DiscreteForm> {
    DiscreteForm::from_components(u.mesh(), 1, u.components().to_vec())
}

/// Lie derivative of a covector density in the discretely skew form
///
/// `(L_u m)_i = sum_j D_j(u^j m_i) + m_j D_i(u^j)`.
///
/// The grouping matters: with the advective part written as a divergence,
/// `<L_u m, u> = 0` holds to machine precision on periodic meshes (summation
/// by parts plus an index relabeling), which is what keeps the kinetic
/// energy bookkeeping of the solver exact in space.
pub fn lie_momentum(u: &VectorField, m: &CovectorDensity) -> Result<CovectorDensity> {
    if !u.mesh().same_mesh(m.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mesh = u.mesh();
    let n = mesh.dim();
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = mesh.zeros();
        for j in 0..n {
            let mut flux = u.component(j).clone();
            flux.zip_mut_with(m.component(i), |x, &y| *x *= y);
            let div = diff_axis(mesh, &flux, j);
            acc.zip_mut_with(&div, |o, &v| *o += v);
            let grad = diff_axis(mesh, u.component(j), i);
            ndarray::Zip::from(&mut acc)
                .and(m.component(j))
                .and(&grad)
                .for_each(|o, &mv, &gv| *o += mv * gv);
        }
        comps.push(acc);
    }
    CovectorDensity::from_components(mesh, comps)
}

/// Velocity gradient `S^i_j = D_j u^i` as a mixed tensor field.
pub fn velocity_gradient(u: &VectorField) -> TensorField {
    let mesh = u.mesh();
    let n = mesh.dim();
    let mut out = TensorField::zeros(mesh);
    for i in 0..n {
        for j in 0..n {
            *out.entry_mut(i, j) = diff_axis(mesh, u.component(i), j);
        }
    }
    out
}

/// Tensor divergence `(dT)_i = sum_j D_j T_i^j`, the flat-coordinate form of
/// the operator adjoint to the velocity gradient: on periodic meshes
/// `<dT, u> = -integral(S : T)` with `S = velocity_gradient(u)` holds to
/// machine precision.
pub fn tensor_divergence(t: &TensorField) -> CovectorDensity {
    let mesh = t.mesh();
    let n = mesh.dim();
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = mesh.zeros();
        for j in 0..n {
            let d = diff_axis(mesh, t.entry(i, j), j);
            acc.zip_mut_with(&d, |o, &v| *o += v);
        }
        comps.push(acc);
    }
    CovectorDensity::from_components(mesh, comps).expect("shapes preserved")
}

/// Pointwise full contraction `sum_ij S_ij T_ij` of two tensor fields.
pub fn tensor_contract(s: &TensorField, t: &TensorField) -> Result<ArrayD<f64>> {
    if !s.mesh().same_mesh(t.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mut out = s.mesh().zeros();
    for (a, b) in s.components().iter().zip(t.components()) {
        ndarray::Zip::from(&mut out).and(a).and(b).for_each(|o, &x, &y| {
            *o += x * y;
        });
    }
    Ok(out)
}

/// Pointwise Euclidean dot product of two vector fields.
pub fn vector_dot(u: &VectorField, v: &VectorField) -> Result<ArrayD<f64>> {
    if !u.mesh().same_mesh(v.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mut out = u.mesh().zeros();
    for (a, b) in u.components().iter().zip(v.components()) {
        ndarray::Zip::from(&mut out).and(a).and(b).for_each(|o, &x, &y| {
            *o += x * y;
        });
    }
    Ok(out)
}

/// Contraction `u . j` of a vector field into the first slot of a tensor
/// flux, producing the (n-1)-form with star-basis components
/// `(u . j)_j = sum_i u^i T^j_i`, returned through its vector proxy.
pub fn tensor_contract_vector(u: &VectorField, t: &TensorField) -> Result<VectorField> {
    if !u.mesh().same_mesh(t.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mesh = u.mesh();
    let n = mesh.dim();
    let mut comps = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = mesh.zeros();
        for i in 0..n {
            ndarray::Zip::from(&mut acc)
                .and(u.component(i))
                .and(t.entry(i, j))
                .for_each(|o, &uv, &tv| *o += uv * tv);
        }
        comps.push(acc);
    }
    VectorField::from_components(mesh, comps)
}
