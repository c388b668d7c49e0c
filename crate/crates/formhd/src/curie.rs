//! Numerical Curie validation: which linear couplings between form-valued
//! quantities survive the full orthogonal group.
//!
//! Every closure entry is a constant matrix between component spaces of
//! differential forms (or velocity-gradient tensors). Isotropy demands that
//! this matrix commute with the O(n) action on those spaces, so the set of
//! admissible couplings is an intertwiner space, and its dimension decides
//! whether a coupling can exist at all. Rather than trusting a symbolic
//! classification, this module computes the spaces numerically: sample
//! orthogonal matrices, stack the commutation constraints, and read the
//! null space off a singular value decomposition.
//!
//! Component spaces come in two flavors per degree: the plain action by
//! compound matrices (minors of the sample), and the pseudo action carrying
//! an extra determinant factor, which is how flux densities and magnetic
//! quantities transform under reflections. The classical answers drop out
//! of the numerics:
//!
//! * same flavor: one intertwiner exactly when the degrees agree (scalar
//!   multiples of the identity);
//! * opposite flavor: one intertwiner exactly when the degrees are
//!   complementary, and that intertwiner is the Hodge star;
//! * velocity-gradient tensors: a three-dimensional commutant, matching
//!   the three independent viscosity coefficients.
//!
//! Reflections matter: sampling only rotations enlarges several spaces and
//! admits couplings that a mirror symmetry actually forbids, so the sampler
//! alternates determinant signs to cover both components of the group.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alt;
use crate::error::{Error, Result};
use crate::thermo::{ClosureSpec, MhdCoefficients, ViscosityTriple};

/// Relative threshold below which a singular value counts as zero.
const NULL_TOL: f64 = 1e-8;
/// Relative threshold the smallest kept singular value must clear; a value
/// in between means the sample set cannot separate null from nonnull.
const GAP_TOL: f64 = 1e-4;

/// Haar-like sampler over O(n). Gaussian matrices are orthogonalized by QR
/// with the usual sign fix; a requested determinant is imposed by flipping
/// one column, which preserves the distribution on each component.
pub struct HaarSampler {
    rng: ChaCha8Rng,
    n: usize,
}

impl HaarSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
        }
    }

    fn gaussian(&mut self) -> f64 {
        // Box-Muller; the first uniform is shifted away from zero.
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// One sample from O(n), either component.
    pub fn orthogonal(&mut self) -> DMatrix<f64> {
        let n = self.n;
        let g = DMatrix::from_fn(n, n, |_, _| self.gaussian());
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                for i in 0..n {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        q
    }

    /// One sample with the requested determinant sign.
    pub fn with_det(&mut self, sign: f64) -> DMatrix<f64> {
        let mut q = self.orthogonal();
        if q.determinant() * sign < 0.0 {
            for i in 0..self.n {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        q
    }
}

/// Plain forms or determinant-twisted (pseudo) forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Twist {
    Plain,
    Pseudo,
}

impl Twist {
    pub fn opposite(self) -> Self {
        match self {
            Twist::Plain => Twist::Pseudo,
            Twist::Pseudo => Twist::Plain,
        }
    }
}

/// A finite-dimensional O(n) action on a component space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiberRep {
    /// Degree-k form components under the k-th compound matrix, optionally
    /// twisted by the determinant.
    Form {
        n: usize,
        degree: usize,
        twist: Twist,
    },
    /// Velocity-gradient tensors under the Kronecker square.
    Tensor { n: usize },
}

impl FiberRep {
    pub fn form(n: usize, degree: usize, twist: Twist) -> Self {
        FiberRep::Form { n, degree, twist }
    }

    pub fn tensor(n: usize) -> Self {
        FiberRep::Tensor { n }
    }

    pub fn ambient(&self) -> usize {
        match *self {
            FiberRep::Form { n, .. } | FiberRep::Tensor { n } => n,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            FiberRep::Form { n, degree, .. } => alt::binomial(n, degree),
            FiberRep::Tensor { n } => n * n,
        }
    }

    /// The representing matrix of one group sample.
    pub fn matrix(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        match *self {
            FiberRep::Form { n, degree, twist } => {
                let mut c = compound(r, n, degree);
                if twist == Twist::Pseudo {
                    c *= r.determinant();
                }
                c
            }
            FiberRep::Tensor { .. } => r.kronecker(r),
        }
    }
}

/// k-th compound matrix: entry (I, J) is the minor of rows I, columns J,
/// over lexicographic multi-indices. Multiplicative by the Cauchy-Binet
/// identity, hence a representation.
fn compound(r: &DMatrix<f64>, n: usize, k: usize) -> DMatrix<f64> {
    let idx = alt::multi_indices(n, k);
    let m = idx.len();
    DMatrix::from_fn(m, m, |i, j| {
        if k == 0 {
            1.0
        } else {
            DMatrix::from_fn(k, k, |a, b| r[(idx[i][a], idx[j][b])]).determinant()
        }
    })
}

/// A computed space of intertwiners from `input` to `output`.
#[derive(Debug, Clone)]
pub struct IntertwinerSpace {
    pub dim: usize,
    /// Orthonormal basis, `output.dim() x input.dim()` matrices.
    pub basis: Vec<DMatrix<f64>>,
    /// Singular values of the constraint stack, descending.
    pub singular_values: Vec<f64>,
}

/// Split a descending singular spectrum into null and kept parts, refusing
/// ambiguous gaps. The scale is the size a generically violated constraint
/// would have, not the observed maximum: when two representations are
/// outright equal the whole stack is rounding noise, and measuring against
/// its own maximum would misread that as an empty null space.
fn null_count(sorted_desc: &[f64], scale: f64) -> Result<usize> {
    let null = sorted_desc
        .iter()
        .filter(|&&s| s <= NULL_TOL * scale)
        .count();
    if null > 0 && null < sorted_desc.len() {
        // Smallest kept value sits just before the null tail.
        let smallest_kept = sorted_desc[sorted_desc.len() - null - 1];
        if smallest_kept < GAP_TOL * scale {
            return Err(Error::SampleDegeneracy(format!(
                "singular spectrum has no clear gap: kept {smallest_kept:.3e} against scale {scale:.3e}"
            )));
        }
    }
    Ok(null)
}

/// Compute the intertwiners `X` with `A_out(R) X = X A_in(R)` over a batch
/// of samples with alternating determinant signs.
pub fn intertwiner_space(
    input: &FiberRep,
    output: &FiberRep,
    samples: usize,
    seed: u64,
) -> Result<IntertwinerSpace> {
    if input.ambient() != output.ambient() {
        return Err(Error::Config(
            "intertwiner endpoints live over different dimensions".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::Config(
            "need at least two samples to cover both components of O(n)".into(),
        ));
    }
    let (d_in, d_out) = (input.dim(), output.dim());
    let dd = d_in * d_out;
    let mut sampler = HaarSampler::new(input.ambient(), seed);
    let mut stack = DMatrix::zeros(samples * dd, dd);
    let id_in = DMatrix::identity(d_in, d_in);
    let id_out = DMatrix::identity(d_out, d_out);
    for t in 0..samples {
        let r = sampler.with_det(if t % 2 == 0 { 1.0 } else { -1.0 });
        let a_in = input.matrix(&r);
        let a_out = output.matrix(&r);
        let block = id_in.kronecker(&a_out) - a_in.transpose().kronecker(&id_out);
        stack.view_mut((t * dd, 0), (dd, dd)).copy_from(&block);
    }
    let svd = nalgebra::SVD::new(stack, false, true);
    let v_t = svd.v_t.expect("V requested");
    let mut order: Vec<(usize, f64)> = svd
        .singular_values
        .iter()
        .cloned()
        .enumerate()
        .collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&(_, s)| s).collect();
    // Representing matrices are orthogonal, so each violated constraint
    // contributes order one per sample block.
    let null = null_count(&sorted, (samples as f64).sqrt())?;
    let basis = order[order.len() - null..]
        .iter()
        .map(|&(row, _)| {
            // Column-major vec: entry (r, c) sits at c * d_out + r.
            DMatrix::from_fn(d_out, d_in, |r_, c| v_t[(row, c * d_out + r_)])
        })
        .collect();
    Ok(IntertwinerSpace {
        dim: null,
        basis,
        singular_values: sorted,
    })
}

/// Component matrix of the Hodge star, degree k to n - k.
pub fn hodge_matrix(n: usize, k: usize) -> DMatrix<f64> {
    let src = alt::multi_indices(n, k);
    let rows = alt::binomial(n, n - k);
    let mut m = DMatrix::zeros(rows, src.len());
    for (j, idx) in src.iter().enumerate() {
        let sign = alt::hodge_sign(n, idx);
        let target = alt::complement(n, idx);
        m[(alt::position(n, &target), j)] = sign;
    }
    m
}

/// Cosine of the angle between the one-dimensional space
/// `Hom(plain k, pseudo n-k)` and the Hodge star.
pub fn hodge_alignment(n: usize, k: usize, samples: usize, seed: u64) -> Result<f64> {
    let space = intertwiner_space(
        &FiberRep::form(n, k, Twist::Plain),
        &FiberRep::form(n, n - k, Twist::Pseudo),
        samples,
        seed,
    )?;
    if space.dim != 1 {
        return Err(Error::SampleDegeneracy(format!(
            "expected a line of intertwiners for the star at degree {k}, got dimension {}",
            space.dim
        )));
    }
    let star = hodge_matrix(n, k);
    let basis = &space.basis[0];
    let dot: f64 = star.iter().zip(basis.iter()).map(|(a, b)| a * b).sum();
    Ok(dot.abs() / (star.norm() * basis.norm()))
}

/// Dimension table of `Hom(V^k, V^l)` for all degree pairs, one twist
/// relation fixed across the table.
pub fn hom_dimension_table(
    n: usize,
    twist_in: Twist,
    twist_out: Twist,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let mut table = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut row = Vec::with_capacity(n + 1);
        for l in 0..=n {
            let space = intertwiner_space(
                &FiberRep::form(n, k, twist_in),
                &FiberRep::form(n, l, twist_out),
                samples,
                seed.wrapping_add((k * (n + 1) + l) as u64),
            )?;
            row.push(space.dim);
        }
        table.push(row);
    }
    Ok(table)
}

/// Force twists of the magnetofluid processes, closure process order:
/// thermodynamic forces of heat, diffusion and reaction are plain forms,
/// the induction force inherits the pseudo nature of the flux 2-form.
pub fn mhd_force_twists() -> [Twist; 4] {
    [Twist::Plain, Twist::Plain, Twist::Pseudo, Twist::Plain]
}

#[derive(Debug, Clone, Serialize)]
pub struct HodgeCheck {
    pub degree: usize,
    pub cosine: f64,
}

/// Isotropy admissibility of one closure's coupling pattern.
#[derive(Debug, Clone, Serialize)]
pub struct PatternReport {
    /// Computed intertwiner dimension for entry (flux a, force b).
    pub hom_dims: Vec<Vec<usize>>,
    /// Whether a nonzero coupling is admissible at all.
    pub allowed: Vec<Vec<bool>>,
    /// Nonzero kappa entries sitting where no intertwiner exists.
    pub violations: Vec<String>,
}

/// Check a closure's nonzero pattern against computed intertwiner spaces.
/// `force_twists` gives the spatial parity of each declared force; fluxes
/// carry the opposite twist so the production pairs to a density.
pub fn closure_pattern(
    spec: &ClosureSpec,
    force_twists: &[Twist],
    samples: usize,
    seed: u64,
) -> Result<PatternReport> {
    let k = spec.processes.len();
    if force_twists.len() != k {
        return Err(Error::Config(format!(
            "{} twists for {k} processes",
            force_twists.len()
        )));
    }
    let mut hom_dims = vec![vec![0usize; k]; k];
    let mut allowed = vec![vec![false; k]; k];
    let mut violations = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let force = FiberRep::form(spec.n, spec.processes[b].force_degree, force_twists[b]);
            let flux = FiberRep::form(
                spec.n,
                spec.processes[a].flux_degree,
                force_twists[a].opposite(),
            );
            let dim = intertwiner_space(
                &force,
                &flux,
                samples,
                seed.wrapping_add((a * k + b) as u64),
            )?
            .dim;
            hom_dims[a][b] = dim;
            allowed[a][b] = dim > 0;
            if spec.kappa[a][b] != 0.0 && dim == 0 {
                violations.push(format!(
                    "kappa[{}][{}] couples {} to {} but no isotropic intertwiner exists",
                    a, b, spec.processes[b].name, spec.processes[a].name
                ));
            }
        }
    }
    Ok(PatternReport {
        hom_dims,
        allowed,
        violations,
    })
}

/// Full validation bundle for one ambient dimension, serializable for the
/// command line front end.
#[derive(Debug, Clone, Serialize)]
pub struct CurieReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// `Hom(plain k, plain l)` dimensions, (n+1) x (n+1).
    pub same_twist_dims: Vec<Vec<usize>>,
    /// `Hom(plain k, pseudo l)` dimensions.
    pub cross_twist_dims: Vec<Vec<usize>>,
    pub hodge: Vec<HodgeCheck>,
    pub tensor_commutant_dim: usize,
    pub mhd: PatternReport,
}

/// Run the whole suite: dimension tables, star recovery, the tensor
/// commutant and the magnetofluid pattern check.
pub fn curie_report(n: usize, samples: usize, seed: u64) -> Result<CurieReport> {
    if !(2..=3).contains(&n) {
        return Err(Error::MeshDimension(n));
    }
    let same_twist_dims = hom_dimension_table(n, Twist::Plain, Twist::Plain, samples, seed)?;
    let cross_twist_dims =
        hom_dimension_table(n, Twist::Plain, Twist::Pseudo, samples, seed.wrapping_add(101))?;
    let mut hodge = Vec::new();
    for k in 0..=n {
        hodge.push(HodgeCheck {
            degree: k,
            cosine: hodge_alignment(n, k, samples, seed.wrapping_add(211 + k as u64))?,
        });
    }
    let tensor = intertwiner_space(
        &FiberRep::tensor(n),
        &FiberRep::tensor(n),
        samples,
        seed.wrapping_add(307),
    )?;
    // A fully populated closure exercises every admissible entry.
    let coeffs = MhdCoefficients {
        kappa_ss: 1.0,
        kappa_nn: 1.0,
        kappa_bb: 1.0,
        kappa_ns: 0.2,
        kappa_bs: 0.2,
        kappa_bn: 0.2,
        kappa_r: 1.0,
        viscosity: ViscosityTriple::zero(),
    };
    let spec = ClosureSpec::mhd(n, &coeffs);
    let mhd = closure_pattern(&spec, &mhd_force_twists(), samples, seed.wrapping_add(401))?;
    Ok(CurieReport {
        n,
        samples,
        seed,
        same_twist_dims,
        cross_twist_dims,
        hodge,
        tensor_commutant_dim: tensor.dim,
        mhd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_produces_orthogonal_matrices_of_both_signs() {
        for n in [2usize, 3] {
            let mut sampler = HaarSampler::new(n, 5);
            for t in 0..6 {
                let want = if t % 2 == 0 { 1.0 } else { -1.0 };
                let q = sampler.with_det(want);
                let gram = &q * q.transpose();
                let id = DMatrix::identity(n, n);
                assert!((gram - id).amax() <= 1e-12);
                assert!((q.determinant() - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn compound_matrices_are_multiplicative() {
        let mut sampler = HaarSampler::new(3, 11);
        let r1 = sampler.orthogonal();
        let r2 = sampler.orthogonal();
        for k in 0..=3usize {
            let lhs = compound(&(&r1 * &r2), 3, k);
            let rhs = compound(&r1, 3, k) * compound(&r2, 3, k);
            assert!(
                (lhs - rhs).amax() <= 1e-12,
                "compound {k} not multiplicative"
            );
        }
    }

    #[test]
    fn same_twist_table_is_the_identity_pattern() {
        for n in [2usize, 3] {
            let table = hom_dimension_table(n, Twist::Plain, Twist::Plain, 8, 17).unwrap();
            for k in 0..=n {
                for l in 0..=n {
                    let expected = usize::from(k == l);
                    assert_eq!(
                        table[k][l], expected,
                        "Hom(plain {k}, plain {l}) in {n}d"
                    );
                }
            }
            // The pseudo-pseudo table must match: twisting both sides
            // cancels the determinant factors.
            let twisted = hom_dimension_table(n, Twist::Pseudo, Twist::Pseudo, 8, 19).unwrap();
            assert_eq!(table, twisted);
        }
    }

    #[test]
    fn cross_twist_table_is_the_antidiagonal_pattern() {
        for n in [2usize, 3] {
            let table = hom_dimension_table(n, Twist::Plain, Twist::Pseudo, 8, 23).unwrap();
            for k in 0..=n {
                for l in 0..=n {
                    let expected = usize::from(l == n - k);
                    assert_eq!(
                        table[k][l], expected,
                        "Hom(plain {k}, pseudo {l}) in {n}d"
                    );
                }
            }
        }
    }

    #[test]
    fn rotations_alone_overcount_the_plane_intertwiners() {
        // With only proper rotations the middle-degree space in the plane
        // doubles: SO(2) cannot tell a 1-form from its right-angle turn.
        let mut sampler = HaarSampler::new(2, 29);
        let reps = (
            FiberRep::form(2, 1, Twist::Plain),
            FiberRep::form(2, 1, Twist::Plain),
        );
        let dd = 4;
        let samples = 8;
        let mut stack = DMatrix::zeros(samples * dd, dd);
        let id = DMatrix::identity(2, 2);
        for t in 0..samples {
            let r = sampler.with_det(1.0);
            let a_in = reps.0.matrix(&r);
            let a_out = reps.1.matrix(&r);
            let block = id.kronecker(&a_out) - a_in.transpose().kronecker(&id);
            stack.view_mut((t * dd, 0), (dd, dd)).copy_from(&block);
        }
        let svd = nalgebra::SVD::new(stack, false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let null = svd
            .singular_values
            .iter()
            .filter(|&&s| s <= 1e-8 * smax)
            .count();
        assert_eq!(null, 2, "rotation-only sampling should see two");
        // The full group cuts it back to one.
        let full = intertwiner_space(&reps.0, &reps.1, 8, 29).unwrap();
        assert_eq!(full.dim, 1);
    }

    #[test]
    fn hodge_star_is_recovered_from_the_cross_twist_line() {
        for (n, k) in [(2usize, 1usize), (3, 1), (3, 2), (2, 0), (3, 0)] {
            let cosine = hodge_alignment(n, k, 8, 31).unwrap();
            assert!(
                cosine >= 1.0 - 1e-8,
                "star misaligned at (n, k) = ({n}, {k}): {cosine}"
            );
        }
    }

    #[test]
    fn tensor_commutant_has_dimension_three_with_the_classical_basis() {
        for n in [2usize, 3] {
            let space =
                intertwiner_space(&FiberRep::tensor(n), &FiberRep::tensor(n), 8, 37).unwrap();
            assert_eq!(space.dim, 3, "tensor commutant in {n}d");
            // Identity, transpose and trace projector must lie in the span.
            let d = n * n;
            let mut canon = Vec::new();
            canon.push(DMatrix::identity(d, d));
            canon.push(DMatrix::from_fn(d, d, |rc, cc| {
                let (ri, rj) = (rc / n, rc % n);
                let (ci, cj) = (cc / n, cc % n);
                f64::from(ri == cj && rj == ci)
            }));
            canon.push(DMatrix::from_fn(d, d, |rc, cc| {
                let (ri, rj) = (rc / n, rc % n);
                let (ci, cj) = (cc / n, cc % n);
                f64::from(ri == rj && ci == cj)
            }));
            for (which, m) in canon.iter().enumerate() {
                let mut residual = m.clone();
                for b in &space.basis {
                    let coeff: f64 = m.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                    let bb: f64 = b.iter().map(|y| y * y).sum();
                    residual -= b * (coeff / bb);
                }
                assert!(
                    residual.amax() <= 1e-7,
                    "canonical operator {which} outside the commutant span in {n}d"
                );
            }
        }
    }

    #[test]
    fn ambiguous_spectra_are_refused() {
        let err = null_count(&[1.0, 0.9, 1e-6, 1e-12], 1.0).unwrap_err();
        match err {
            Error::SampleDegeneracy(msg) => assert!(msg.contains("gap")),
            other => panic!("unexpected error {other}"),
        }
        assert_eq!(null_count(&[1.0, 0.9, 1e-12], 1.0).unwrap(), 1);
        assert_eq!(null_count(&[1.0, 0.9], 1.0).unwrap(), 0);
        assert_eq!(null_count(&[1e-13, 1e-14], 1.0).unwrap(), 2);
    }

    #[test]
    fn mhd_pattern_matches_the_degree_dictionary() {
        for n in [2usize, 3] {
            let report = curie_report(n, 8, 43).unwrap();
            assert!(report.mhd.violations.is_empty(), "{:?}", report.mhd.violations);
            // Continuous block fully admissible, reaction decoupled.
            for a in 0..3 {
                for b in 0..3 {
                    assert!(report.mhd.allowed[a][b], "entry ({a}, {b}) in {n}d");
                }
                assert!(!report.mhd.allowed[a][3]);
                assert!(!report.mhd.allowed[3][a]);
            }
            assert!(report.mhd.allowed[3][3]);
            assert_eq!(report.tensor_commutant_dim, 3);
            for check in &report.hodge {
                assert!(check.cosine >= 1.0 - 1e-8);
            }
        }
    }

    #[test]
    fn forbidden_couplings_are_flagged() {
        let coeffs = MhdCoefficients {
            kappa_ss: 1.0,
            kappa_nn: 1.0,
            kappa_bb: 1.0,
            kappa_ns: 0.0,
            kappa_bs: 0.0,
            kappa_bn: 0.0,
            kappa_r: 1.0,
            viscosity: ViscosityTriple::zero(),
        };
        let mut spec = ClosureSpec::mhd(3, &coeffs);
        // Force a reaction-heat coupling that no intertwiner supports.
        spec.kappa[3][0] = 0.7;
        let report = closure_pattern(&spec, &mhd_force_twists(), 8, 47).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].contains("heat"));
    }
}
