//! Thin LAPACK wrappers for the dense Hermitian eigensolves and LU solves the
//! rest of the crate is built on. All matrices cross the FFI boundary in
//! column-major buffers; helpers convert from ndarray layouts explicitly so
//! no transpose/conjugation ambiguity can sneak in.

extern crate openblas_src;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
}

fn to_col_major(a: &Array2<Complex64>) -> Result<(Vec<Complex64>, usize), LinalgError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let n = rows;
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            buf[i + j * n] = a[(i, j)];
        }
    }
    Ok((buf, n))
}

/// Full eigendecomposition of a Hermitian matrix (ascending eigenvalues).
/// Returns eigenvalues and the matrix whose columns are eigenvectors.
pub fn eigh(a: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>), LinalgError> {
    let (mut buf, n) = to_col_major(a)?;
    let w = eigh_in_place(&mut buf, n, true)?;
    let mut vecs = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vecs[(i, j)] = buf[i + j * n];
        }
    }
    Ok((Array1::from(w), vecs))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &Array2<Complex64>) -> Result<Array1<f64>, LinalgError> {
    let (mut buf, n) = to_col_major(a)?;
    let w = eigh_in_place(&mut buf, n, false)?;
    Ok(Array1::from(w))
}

/// zheevd on a column-major buffer; overwrites `a` with eigenvectors when
/// `vectors` is set.
pub fn eigh_in_place(
    a: &mut [Complex64],
    n: usize,
    vectors: bool,
) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.len(), n * n);
    let jobz = if vectors { b'V' } else { b'N' };
    let ni = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    // workspace query
    let mut work_q = [Complex64::new(0.0, 0.0)];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0i32];
    unsafe {
        lapack::zheevd(
            jobz, b'L', ni, a, ni, &mut w, &mut work_q, -1, &mut rwork_q, -1, &mut iwork_q, -1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack {
            routine: "zheevd(query)",
            info,
        });
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack::zheevd(
            jobz, b'L', ni, a, ni, &mut w, &mut work, lwork, &mut rwork, lrwork, &mut iwork,
            liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack {
            routine: "zheevd",
            info,
        });
    }
    Ok(w)
}

/// Eigenpairs with eigenvalues in the half-open interval (vl, vu].
///
/// Assembled from zhetrd + dstebz + zstein + zunmtr rather than zheevr so the
/// eigenvector buffer is n x m instead of n x n; with a few dozen states in a
/// spectral window of a large operator that is the difference between fitting
/// in memory and not. The input buffer is column-major and is destroyed.
pub fn eigh_range_in_place(
    a: &mut [Complex64],
    n: usize,
    vl: f64,
    vu: f64,
) -> Result<(Vec<f64>, Array2<Complex64>), LinalgError> {
    assert_eq!(a.len(), n * n);
    let ni = n as i32;
    let mut info = 0i32;

    // Reduce to real symmetric tridiagonal form; Householder data stays in `a`.
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n.saturating_sub(1).max(1)];
    let mut tau = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1).max(1)];
    let mut work_q = [Complex64::new(0.0, 0.0)];
    unsafe {
        lapack::zhetrd(b'L', ni, a, ni, &mut d, &mut e, &mut tau, &mut work_q, -1, &mut info);
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zhetrd(query)", info });
    }
    let lwork = (work_q[0].re as i32).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack::zhetrd(b'L', ni, a, ni, &mut d, &mut e, &mut tau, &mut work, lwork, &mut info);
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zhetrd", info });
    }

    // Bisection count + eigenvalues inside the window, grouped by block.
    let mut m = 0i32;
    let mut nsplit = [0i32; 1];
    let mut w = vec![0.0f64; n];
    let mut iblock = vec![0i32; n];
    let mut isplit = vec![0i32; n];
    let mut rwork = vec![0.0f64; 4 * n];
    let mut iwork = vec![0i32; 3 * n];
    let abstol = 2.0 * f64::MIN_POSITIVE;
    unsafe {
        lapack::dstebz(
            b'V', b'B', ni, vl, vu, 0, 0, abstol, &d, &e, &mut m, &mut nsplit, &mut w,
            &mut iblock, &mut isplit, &mut rwork, &mut iwork, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "dstebz", info });
    }
    let m = m as usize;
    if m == 0 {
        return Ok((Vec::new(), Array2::zeros((n, 0))));
    }

    // Inverse iteration for the tridiagonal eigenvectors.
    let mut z = vec![Complex64::new(0.0, 0.0); n * m];
    let mut work5 = vec![0.0f64; 5 * n];
    let mut iwork1 = vec![0i32; n];
    let mut ifail = vec![0i32; m];
    unsafe {
        lapack::zstein(
            ni, &d, &e, m as i32, &w, &iblock, &isplit, &mut z, ni, &mut work5, &mut iwork1,
            &mut ifail, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zstein", info });
    }

    // Back-transform to eigenvectors of the original matrix.
    let mut work_q = [Complex64::new(0.0, 0.0)];
    unsafe {
        lapack::zunmtr(
            b'L', b'L', b'N', ni, m as i32, a, ni, &tau, &mut z, ni, &mut work_q, -1, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zunmtr(query)", info });
    }
    let lwork = (work_q[0].re as i32).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack::zunmtr(
            b'L', b'L', b'N', ni, m as i32, a, ni, &tau, &mut z, ni, &mut work, lwork, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zunmtr", info });
    }

    // dstebz with order 'B' groups by block; restore ascending order.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    let mut vals = Vec::with_capacity(m);
    let mut vecs = Array2::zeros((n, m));
    for (col, &src) in order.iter().enumerate() {
        vals.push(w[src]);
        for i in 0..n {
            vecs[(i, col)] = z[i + src * n];
        }
    }
    Ok((vals, vecs))
}

/// Windowed eigensolve of an ndarray Hermitian matrix.
pub fn eigh_range(
    a: &Array2<Complex64>,
    vl: f64,
    vu: f64,
) -> Result<(Vec<f64>, Array2<Complex64>), LinalgError> {
    let (mut buf, n) = to_col_major(a)?;
    eigh_range_in_place(&mut buf, n, vl, vu)
}

/// Eigenpairs of a Hermitian tridiagonal matrix with eigenvalues in
/// (vl, vu], via phase reduction to a real symmetric tridiagonal problem
/// followed by bisection and inverse iteration. Cost is O(n·m), which is what
/// makes fine one-dimensional grids cheap.
pub fn tridiag_eigh_range(
    diag: &[f64],
    off: &[Complex64],
    vl: f64,
    vu: f64,
) -> Result<(Vec<f64>, Array2<Complex64>), LinalgError> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    // unitary diagonal phases making the off-diagonal real nonnegative
    let mut phase = vec![Complex64::new(1.0, 0.0); n];
    let mut e = vec![0.0f64; n.saturating_sub(1).max(1)];
    for i in 0..n - 1 {
        let a = off[i];
        let r = a.norm();
        e[i] = r;
        let rot = if r > 0.0 {
            a / r
        } else {
            Complex64::new(1.0, 0.0)
        };
        // T'[i, i+1] = conj(p_i) a p_{i+1} must equal |a|: p_{i+1} = p_i conj(a)/|a| ... p_i a
        phase[i + 1] = phase[i] * rot.conj();
    }
    let ni = n as i32;
    let mut info = 0i32;
    let mut m = 0i32;
    let mut nsplit = [0i32; 1];
    let mut w = vec![0.0f64; n];
    let mut iblock = vec![0i32; n];
    let mut isplit = vec![0i32; n];
    let mut work = vec![0.0f64; 4 * n];
    let mut iwork = vec![0i32; 3 * n];
    unsafe {
        lapack::dstebz(
            b'V',
            b'B',
            ni,
            vl,
            vu,
            0,
            0,
            2.0 * f64::MIN_POSITIVE,
            diag,
            &e,
            &mut m,
            &mut nsplit,
            &mut w,
            &mut iblock,
            &mut isplit,
            &mut work,
            &mut iwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack {
            routine: "dstebz",
            info,
        });
    }
    let m = m as usize;
    if m == 0 {
        return Ok((Vec::new(), Array2::zeros((n, 0))));
    }
    let mut z = vec![0.0f64; n * m];
    let mut work5 = vec![0.0f64; 5 * n];
    let mut iwork1 = vec![0i32; n];
    let mut ifail = vec![0i32; m];
    unsafe {
        lapack::dstein(
            ni, diag, &e, m as i32, &w, &iblock, &isplit, &mut z, ni, &mut work5, &mut iwork1,
            &mut ifail, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack {
            routine: "dstein",
            info,
        });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    let mut vals = Vec::with_capacity(m);
    let mut vecs = Array2::zeros((n, m));
    for (col, &src) in order.iter().enumerate() {
        vals.push(w[src]);
        for i in 0..n {
            vecs[(i, col)] = phase[i] * z[i + src * n];
        }
    }
    Ok((vals, vecs))
}

/// LU factorization of a general complex matrix, reusable across many
/// right-hand sides.
pub struct LuFactor {
    n: usize,
    lu: Vec<Complex64>,
    ipiv: Vec<i32>,
}

impl LuFactor {
    pub fn new(a: &Array2<Complex64>) -> Result<Self, LinalgError> {
        let (mut lu, n) = to_col_major(a)?;
        let mut ipiv = vec![0i32; n];
        let mut info = 0i32;
        unsafe {
            lapack::zgetrf(n as i32, n as i32, &mut lu, n as i32, &mut ipiv, &mut info);
        }
        if info != 0 {
            return Err(LinalgError::Lapack {
                routine: "zgetrf",
                info,
            });
        }
        Ok(LuFactor { n, lu, ipiv })
    }

    pub fn solve(&self, b: &Array1<Complex64>) -> Result<Array1<Complex64>, LinalgError> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<Complex64> = b.to_vec();
        let mut info = 0i32;
        unsafe {
            lapack::zgetrs(
                b'N',
                self.n as i32,
                1,
                &self.lu,
                self.n as i32,
                &self.ipiv,
                &mut x,
                self.n as i32,
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Lapack {
                routine: "zgetrs",
                info,
            });
        }
        Ok(Array1::from(x))
    }
}

/// Largest deviation from Hermiticity, max |A - A^H|.
pub fn hermiticity_residual(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Complex inner product conj(a)·b.
pub fn cdot(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_hermitian_eig() {
        let a = array![
            [c(1.0, 0.0), c(0.0, 1.0)],
            [c(0.0, -1.0), c(2.0, 0.0)]
        ];
        let (w, v) = eigh(&a).unwrap();
        let golden = 1.5 - (1.25f64).sqrt();
        assert!((w[0] - golden).abs() < 1e-12);
        assert!((w[1] - (3.0 - golden)).abs() < 1e-12);
        // residual ||A v - w v||
        for j in 0..2 {
            for i in 0..2 {
                let av: Complex64 = (0..2).map(|k| a[(i, k)] * v[(k, j)]).sum();
                assert!((av - v[(i, j)] * w[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn range_matches_full() {
        let n = 40;
        let mut a = Array2::zeros((n, n));
        let mut s: u64 = 99;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64) / (2f64.powi(31)) - 1.0
        };
        for i in 0..n {
            for j in 0..=i {
                let re = rnd();
                let im = if i == j { 0.0 } else { rnd() };
                a[(i, j)] = c(re, im);
                a[(j, i)] = c(re, -im);
            }
        }
        let full = eigvalsh(&a).unwrap();
        let (sub, vecs) = eigh_range(&a, -0.5, 0.5).unwrap();
        let expect: Vec<f64> = full.iter().copied().filter(|&x| x > -0.5 && x <= 0.5).collect();
        assert_eq!(sub.len(), expect.len());
        for (g, e) in sub.iter().zip(expect.iter()) {
            assert!((g - e).abs() < 1e-10);
        }
        assert_eq!(vecs.ncols(), sub.len());
    }

    #[test]
    fn lu_solves() {
        let a = array![
            [c(2.0, 0.0), c(1.0, 1.0)],
            [c(0.0, -1.0), c(3.0, 0.0)]
        ];
        let lu = LuFactor::new(&a).unwrap();
        let b = Array1::from(vec![c(1.0, 0.0), c(0.0, 2.0)]);
        let x = lu.solve(&b).unwrap();
        for i in 0..2 {
            let ax: Complex64 = (0..2).map(|k| a[(i, k)] * x[k]).sum();
            assert!((ax - b[i]).norm() < 1e-12);
        }
    }
}
