//! Small dense linear algebra for 3x3 symmetric information matrices.
//!
//! The eigen-solver uses the closed-form trigonometric solution of the
//! characteristic polynomial and falls back to cyclic Jacobi rotations when
//! two eigenvalues are close enough that the closed form loses accuracy in the
//! eigenvectors.

use nalgebra::{Matrix3, SMatrix, Vector3};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;
/// Matrix of a symmetric bilinear form on 3x3 symmetric matrices, expressed
/// in the orthonormal `svec` basis.
pub type Mat6 = SMatrix<f64, 6, 6>;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Eigen-decomposition of a symmetric 3x3 matrix, eigenvalues ascending.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen3 {
    pub values: [f64; 3],
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Mat3,
}

impl SymEigen3 {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[2]
    }

    pub fn vector(&self, k: usize) -> Vec3 {
        self.vectors.column(k).into_owned()
    }

    /// Number of eigenvalues tied with the smallest one under a relative gap
    /// threshold.
    pub fn min_multiplicity(&self, rel_gap: f64) -> usize {
        let scale = self.values[2].abs().max(self.values[0].abs()).max(f64::MIN_POSITIVE);
        1 + self.values[1..]
            .iter()
            .filter(|&&v| (v - self.values[0]) <= rel_gap * scale)
            .count()
    }
}

/// Eigenvalues and eigenvectors of a symmetric 3x3 matrix.
pub fn sym_eigen3(a: &Mat3) -> SymEigen3 {
    let a = symmetrize(a);
    analytic_eigen(&a).unwrap_or_else(|| jacobi_eigen(&a))
}

/// Smallest eigenvalue only; cheaper than the full decomposition.
pub fn min_eigenvalue(a: &Mat3) -> f64 {
    let a = symmetrize(a);
    match analytic_values(&a) {
        Some(v) => v[0],
        None => jacobi_eigen(&a).values[0],
    }
}

pub fn symmetrize(a: &Mat3) -> Mat3 {
    (a + a.transpose()) * 0.5
}

fn analytic_values(a: &Mat3) -> Option<[f64; 3]> {
    let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let mean = a.trace() / 3.0;
    if off == 0.0 {
        let mut v = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
        v.sort_by(f64::total_cmp);
        return Some(v);
    }
    let dev = (a[(0, 0)] - mean).powi(2) + (a[(1, 1)] - mean).powi(2) + (a[(2, 2)] - mean).powi(2)
        + 2.0 * off;
    let p = (dev / 6.0).sqrt();
    if !(p > 0.0) || !p.is_finite() {
        return None;
    }
    let b = (a - Mat3::identity() * mean) / p;
    let r = b.determinant() / 2.0;
    // |r| close to 1 means a (near-)double root; acos is ill-conditioned there.
    if !(r.abs() < 1.0 - 1e-10) {
        return None;
    }
    let phi = r.acos() / 3.0;
    let largest = mean + 2.0 * p * phi.cos();
    let smallest = mean + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let middle = 3.0 * mean - largest - smallest;
    Some([smallest, middle, largest])
}

fn analytic_eigen(a: &Mat3) -> Option<SymEigen3> {
    let values = analytic_values(a)?;
    let scale = values[2].abs().max(values[0].abs());
    let gap_tol = 1e-6 * scale;
    if values[1] - values[0] < gap_tol || values[2] - values[1] < gap_tol {
        return None;
    }
    let v0 = null_vector(a, values[0], scale)?;
    let v2 = null_vector(a, values[2], scale)?;
    let v1 = v2.cross(&v0).normalize();
    let v0 = orthonormal_refine(v0, &v1, &v2);
    let vectors = Mat3::from_columns(&[v0, v1, v2]);
    Some(SymEigen3 { values, vectors })
}

fn orthonormal_refine(v0: Vec3, v1: &Vec3, v2: &Vec3) -> Vec3 {
    let w = v0 - v1 * v1.dot(&v0) - v2 * v2.dot(&v0);
    w.normalize()
}

/// Unit vector spanning the kernel of `a - lambda I`, from the best-conditioned
/// cross product of its rows.
fn null_vector(a: &Mat3, lambda: f64, scale: f64) -> Option<Vec3> {
    let m = a - Mat3::identity() * lambda;
    let r0: Vec3 = m.row(0).transpose();
    let r1: Vec3 = m.row(1).transpose();
    let r2: Vec3 = m.row(2).transpose();
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = candidates
        .iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))
        .copied()?;
    let n2 = best.norm_squared();
    if !(n2 > 1e-20 * scale.powi(4)) {
        return None;
    }
    Some(best / n2.sqrt())
}

/// Cyclic Jacobi eigen-solver for symmetric 3x3 matrices.
pub fn jacobi_eigen(a: &Mat3) -> SymEigen3 {
    let mut m = symmetrize(a);
    let mut v = Mat3::identity();
    for _sweep in 0..64 {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        let diag = m[(0, 0)].powi(2) + m[(1, 1)].powi(2) + m[(2, 2)].powi(2);
        if off <= 1e-34 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Mat3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            m = rot.transpose() * m * rot;
            m[(p, q)] = 0.0;
            m[(q, p)] = 0.0;
            v *= rot;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = [m[(order[0], order[0])], m[(order[1], order[1])], m[(order[2], order[2])]];
    let vectors = Mat3::from_columns(&[
        v.column(order[0]).into_owned(),
        v.column(order[1]).into_owned(),
        v.column(order[2]).into_owned(),
    ]);
    SymEigen3 { values, vectors }
}

/// Orthonormal coordinates of a symmetric matrix: the diagonal followed by
/// `sqrt(2)` times the upper off-diagonal entries, so that the Frobenius inner
/// product becomes the Euclidean dot product.
pub fn svec(a: &Mat3) -> [f64; 6] {
    [
        a[(0, 0)],
        a[(1, 1)],
        a[(2, 2)],
        SQRT2 * a[(0, 1)],
        SQRT2 * a[(0, 2)],
        SQRT2 * a[(1, 2)],
    ]
}

pub fn smat(v: &[f64; 6]) -> Mat3 {
    let h = 1.0 / SQRT2;
    Mat3::new(
        v[0],
        v[3] * h,
        v[4] * h,
        v[3] * h,
        v[1],
        v[5] * h,
        v[4] * h,
        v[5] * h,
        v[2],
    )
}

/// The `k`-th element of the orthonormal basis used by [`svec`].
pub fn svec_basis(k: usize) -> Mat3 {
    let mut v = [0.0; 6];
    v[k] = 1.0;
    smat(&v)
}

/// Frobenius inner product.
pub fn frob(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

/// Builds the 6x6 matrix of a symmetric bilinear form given the linear map
/// `y -> H(y)` with `form(x, y) = <x, H(y)>`.
pub fn bilinear_matrix(op: impl Fn(&Mat3) -> Mat3) -> Mat6 {
    let basis: Vec<Mat3> = (0..6).map(svec_basis).collect();
    let mut out = Mat6::zeros();
    for b in 0..6 {
        let image = op(&basis[b]);
        for a in 0..6 {
            out[(a, b)] = frob(&basis[a], &image);
        }
    }
    (out + out.transpose()) * 0.5
}

/// Ratio of extreme eigenvalues; infinite when the smallest is not positive.
pub fn condition_number(e: &SymEigen3) -> f64 {
    if e.values[0] <= 0.0 {
        f64::INFINITY
    } else {
        e.values[2] / e.values[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn check_decomposition(a: &Mat3, e: &SymEigen3, tol: f64) {
        let scale = a.norm().max(1.0);
        for k in 0..3 {
            let v = e.vector(k);
            let residual = (a * v - v * e.values[k]).norm();
            assert!(residual <= tol * scale, "residual {residual} for {a}");
            assert!((v.norm() - 1.0).abs() < 1e-10);
        }
        let gram = e.vectors.transpose() * e.vectors;
        assert!((gram - Mat3::identity()).norm() < 1e-9);
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
    }

    #[test]
    fn diagonal_matrix() {
        let a = Mat3::from_diagonal(&Vec3::new(3.0, -1.0, 2.0));
        let e = sym_eigen3(&a);
        assert_eq!(e.values, [-1.0, 2.0, 3.0]);
        check_decomposition(&a, &e, 1e-12);
    }

    #[test]
    fn repeated_eigenvalue_uses_fallback() {
        // eigenvalues 1, 1, 4 with a rotated basis
        let q = Vec3::new(1.0, 1.0, 1.0).normalize();
        let a = Mat3::identity() + q * q.transpose() * 3.0;
        let e = sym_eigen3(&a);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        assert!((e.values[2] - 4.0).abs() < 1e-12);
        assert_eq!(e.min_multiplicity(1e-7), 2);
        check_decomposition(&a, &e, 1e-12);
    }

    #[test]
    fn identity_has_triple_minimum() {
        let e = sym_eigen3(&Mat3::identity());
        assert_eq!(e.min_multiplicity(1e-7), 3);
    }

    #[test]
    fn svec_is_an_isometry() {
        let a = Mat3::new(1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0);
        let b = Mat3::new(0.5, -1.0, 0.0, -1.0, 2.0, 4.0, 0.0, 4.0, -3.0);
        let va = svec(&a);
        let vb = svec(&b);
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        assert!((dot - frob(&a, &b)).abs() < 1e-12);
        assert!((smat(&va) - a).norm() < 1e-14);
    }

    fn sym_strategy() -> impl Strategy<Value = Mat3> {
        prop::array::uniform6(-10.0f64..10.0).prop_map(|v| {
            Mat3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2])
        })
    }

    proptest! {
        #[test]
        fn agrees_with_nalgebra(a in sym_strategy()) {
            let e = sym_eigen3(&a);
            let mut reference: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for k in 0..3 {
                prop_assert!((e.values[k] - reference[k]).abs() <= 1e-9 * a.norm().max(1.0));
            }
            check_decomposition(&a, &e, 1e-8);
            prop_assert!((min_eigenvalue(&a) - reference[0]).abs() <= 1e-9 * a.norm().max(1.0));
        }

        #[test]
        fn jacobi_matches_analytic(a in sym_strategy()) {
            let j = jacobi_eigen(&a);
            check_decomposition(&a, &j, 1e-10);
        }
    }
}
