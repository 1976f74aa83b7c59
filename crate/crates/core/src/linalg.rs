//! Small dense complex linear algebra used by the channel model, the rate
//! engine and the beamforming block of the solver.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `v vᴴ`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `vᴴ X v`, real part. Exact for Hermitian `X`.
pub fn quad_form(v: &CVector, x: &CMatrix) -> f64 {
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for q in 0..n {
            row += x[(p, q)] * v[q];
        }
        acc += v[p].conj() * row;
    }
    acc.re
}

/// Real part of `tr(X)`.
pub fn trace_re(x: &CMatrix) -> f64 {
    x.diagonal().iter().map(|c| c.re).sum()
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(x: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for p in 0..x.nrows() {
        for q in p..x.ncols() {
            worst = worst.max((x[(p, q)] - x[(q, p)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(x: &CMatrix) -> Vec<f64> {
    if x.nrows() == 0 {
        return Vec::new();
    }
    // symmetrize first so rounding noise in the lower triangle is harmless
    let sym = (x + x.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(x: &CMatrix) -> f64 {
    hermitian_eigenvalues(x).first().copied().unwrap_or(0.0)
}

/// Lower Cholesky factor of a Hermitian positive definite matrix, `None`
/// unless every pivot is strictly positive. (nalgebra's complex Cholesky
/// takes complex square roots of negative pivots instead of failing.)
pub fn hermitian_cholesky(x: &CMatrix) -> Option<CMatrix> {
    let n = x.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = x[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut v = x[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / ljj;
        }
    }
    Some(l)
}

/// `log det X` and `X⁻¹` from the lower Cholesky factor `l`.
pub fn cholesky_logdet_inverse(l: &CMatrix) -> (f64, CMatrix) {
    let n = l.nrows();
    let log_det = 2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    // forward substitution for L⁻¹, then X⁻¹ = L⁻ᴴ L⁻¹
    let mut inv = CMatrix::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut v = if i == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for k in c..i {
                v -= l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = v / l[(i, i)].re;
        }
    }
    (log_det, inv.adjoint() * inv)
}

/// Orthonormal basis (as columns) of the span of `vectors`, by modified
/// Gram-Schmidt with one re-orthogonalization pass. Directions whose
/// residual norm falls below `rel_tol` times the largest input norm are
/// dropped.
pub fn orthonormal_basis(vectors: &[CVector], dim: usize, rel_tol: f64) -> CMatrix {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    if scale == 0.0 {
        return CMatrix::zeros(dim, 0);
    }
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for u in &basis {
                let proj = u.dotc(&r);
                r -= u * proj;
            }
        }
        let norm = r.norm();
        if norm > rel_tol * scale {
            basis.push(r / C64::new(norm, 0.0));
        }
        if basis.len() == dim {
            break;
        }
    }
    columns(&basis, dim)
}

/// Orthonormal basis of the orthogonal complement of `b` in `C^dim`.
pub fn complement_basis(b: &CVector) -> CMatrix {
    let dim = b.len();
    let mut basis: Vec<CVector> = Vec::new();
    let bn = b.norm();
    if bn > 0.0 {
        basis.push(b / C64::new(bn, 0.0));
    }
    for e in 0..dim {
        let mut r = CVector::zeros(dim);
        r[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for u in &basis {
                let proj = u.dotc(&r);
                r -= u * proj;
            }
        }
        let norm = r.norm();
        if norm > 1e-8 {
            basis.push(r / C64::new(norm, 0.0));
        }
        if basis.len() == dim {
            break;
        }
    }
    if bn > 0.0 {
        basis.remove(0);
    }
    columns(&basis, dim)
}

/// Project every vector onto the complement of `b`.
pub fn project_out(vectors: &[CVector], b: &CVector) -> Vec<CVector> {
    let bn2 = b.norm_squared();
    vectors
        .iter()
        .map(|v| {
            if bn2 == 0.0 {
                v.clone()
            } else {
                v - b * (b.dotc(v) / C64::new(bn2, 0.0))
            }
        })
        .collect()
}

fn columns(basis: &[CVector], dim: usize) -> CMatrix {
    let mut u = CMatrix::zeros(dim, basis.len());
    for (j, v) in basis.iter().enumerate() {
        u.set_column(j, v);
    }
    u
}

/// Serde adapter for complex matrices: `{"re": [[..]], "im": [[..]]}`,
/// row-major.
pub mod serde_cmatrix {
    use super::{CMatrix, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
        };
        Parts { re: rows(|c| c.re), im: rows(|c| c.im) }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let p = Parts::deserialize(d)?;
        let n = p.re.len();
        let m = p.re.first().map_or(0, Vec::len);
        if p.im.len() != n || p.re.iter().chain(&p.im).any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged complex matrix"));
        }
        Ok(CMatrix::from_fn(n, m, |r, c| C64::new(p.re[r][c], p.im[r][c])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(parts: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(parts.len(), parts.iter().map(|&(r, i)| C64::new(r, i)))
    }

    #[test]
    fn quad_form_matches_trace_of_outer_product() {
        let a = cv(&[(1.0, 2.0), (-0.5, 0.25), (0.0, -1.0)]);
        let v = cv(&[(0.3, -0.2), (1.0, 0.0), (0.5, 0.5)]);
        let x = outer(&v) + CMatrix::identity(3, 3);
        let direct = (outer(&a) * &x).trace().re;
        assert!((quad_form(&a, &x) - direct).abs() < 1e-12);
    }

    #[test]
    fn rank_one_outer_product_spectrum() {
        let b = cv(&[(1.0, 1.0), (2.0, 0.0)]);
        let ev = hermitian_eigenvalues(&outer(&b));
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[1] - b.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn basis_drops_dependent_vectors() {
        let a = cv(&[(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]);
        let b = a.clone() * C64::new(0.0, 2.0);
        let c = cv(&[(0.0, 0.0), (0.0, 0.0), (3.0, 0.0)]);
        let u = orthonormal_basis(&[a, b, c], 3, 1e-10);
        assert_eq!(u.ncols(), 2);
        let gram = u.adjoint() * &u;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_inverts() {
        let bad = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(hermitian_cholesky(&bad).is_none());
        let v = cv(&[(1.0, 0.5), (0.0, -1.0), (2.0, 0.0)]);
        let x = outer(&v) + CMatrix::identity(3, 3) * C64::new(0.5, 0.0);
        let l = hermitian_cholesky(&x).unwrap();
        assert!((&l * l.adjoint() - &x).norm() < 1e-12);
        let (log_det, inv) = cholesky_logdet_inverse(&l);
        assert!((inv * &x - CMatrix::identity(3, 3)).norm() < 1e-12);
        let ev = hermitian_eigenvalues(&x);
        assert!((log_det - ev.iter().map(|e| e.ln()).sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal_to_b() {
        let b = cv(&[(1.0, -1.0), (0.5, 0.0), (0.0, 2.0), (1.0, 1.0)]);
        let u = complement_basis(&b);
        assert_eq!(u.ncols(), 3);
        let proj = u.adjoint() * &b;
        assert!(proj.norm() < 1e-12);
    }
}
