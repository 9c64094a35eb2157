//! vec/Kronecker/transpose-permutation/hat/vee operators and the matrix-form
//! derivatives over the 12-vector pose view.
//!
//! All derivatives here are extrinsic: they treat the twelve entries of the top
//! 3×4 block as independent coordinates, so perturbed inputs are generally not
//! rigid transforms.

use crate::error::{Error, Result};
use crate::pose::{HomPose, Matrix12, Point3};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, SMatrix, Vector3};

/// Column-major stacking.
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            out.view_mut((i * rb, j * cb), (rb, cb)).copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

/// For an `m`×`n` matrix A, the permutation T with T·vec(A) = vec(Aᵀ)
/// (T_{n,m} in index notation).
pub fn transpose_permutation(m: usize, n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            t[(i * n + j, j * m + i)] = 1.0;
        }
    }
    t
}

pub fn hat3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub fn vee3(s: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let asym = (s + s.transpose()).norm();
    if !(asym < 1e-9) {
        return Err(Error::Domain(format!("matrix is not skew-symmetric (|S + Sᵀ| = {asym:e})")));
    }
    Ok(vee3_unchecked(s))
}

pub(crate) fn vee3_unchecked(s: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)])
}

/// ∂vec(AB)/∂vec(A) = T_Bᵀ ⊗ I₃.
#[allow(non_snake_case)]
pub fn d_compose_wrt_A(tb: &HomPose) -> Matrix12 {
    let b: &Matrix4<f64> = tb.matrix();
    let mut j = Matrix12::zeros();
    for blk_r in 0..4 {
        for blk_c in 0..4 {
            let v = b[(blk_c, blk_r)];
            for k in 0..3 {
                j[(3 * blk_r + k, 3 * blk_c + k)] = v;
            }
        }
    }
    j
}

/// ∂vec(AB)/∂vec(B) = I₄ ⊗ R_A.
#[allow(non_snake_case)]
pub fn d_compose_wrt_B(ta: &HomPose) -> Matrix12 {
    let r = ta.rotation();
    let mut j = Matrix12::zeros();
    for blk in 0..4 {
        j.fixed_view_mut::<3, 3>(3 * blk, 3 * blk).copy_from(&r);
    }
    j
}

/// ∂(A⊕p)/∂p = R_A.
pub fn d_apply_wrt_point(ta: &HomPose) -> Matrix3<f64> {
    ta.rotation()
}

/// ∂(A⊕p)/∂vec(A) = (pᵀ 1) ⊗ I₃.
pub fn d_apply_wrt_pose(p: &Point3) -> SMatrix<f64, 3, 12> {
    let coeffs = [p.x, p.y, p.z, 1.0];
    let mut j = SMatrix::<f64, 3, 12>::zeros();
    for (blk, c) in coeffs.iter().enumerate() {
        for k in 0..3 {
            j[(k, 3 * blk + k)] = *c;
        }
    }
    j
}

/// ∂vec(A⁻¹)/∂vec(A) = [[T₃,₃, 0], [I₃ ⊗ (−tᵀ), −Rᵀ]].
pub fn d_inverse_wrt_pose(ta: &HomPose) -> Matrix12 {
    let r = ta.rotation();
    let t = ta.translation();
    let mut j = Matrix12::zeros();
    for i in 0..3 {
        for k in 0..3 {
            // (Rᵀ)(i,k) sits at 3k+i and equals R(k,i), which sits at 3i+k.
            j[(3 * k + i, 3 * i + k)] = 1.0;
        }
    }
    for i in 0..3 {
        for k in 0..3 {
            j[(9 + i, 3 * i + k)] = -t[k];
        }
    }
    j.fixed_view_mut::<3, 3>(9, 9).copy_from(&(-r.transpose()));
    j
}

/// ∂(p ⊖ A)/∂p = R_Aᵀ.
pub fn d_invapply_wrt_point(ta: &HomPose) -> Matrix3<f64> {
    ta.rotation().transpose()
}

/// ∂(p ⊖ A)/∂vec(A) = [I₃ ⊗ (p − t_A)ᵀ | −R_Aᵀ].
pub fn d_invapply_wrt_pose(ta: &HomPose, p: &Point3) -> SMatrix<f64, 3, 12> {
    let d = p - ta.translation();
    let mut j = SMatrix::<f64, 3, 12>::zeros();
    for i in 0..3 {
        for k in 0..3 {
            j[(i, 3 * i + k)] = d[k];
        }
    }
    j.fixed_view_mut::<3, 3>(0, 9).copy_from(&(-ta.rotation().transpose()));
    j
}
