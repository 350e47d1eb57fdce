//! Dense complex linear algebra on top of LAPACK.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, EigValsh, Inverse, Solve, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;

pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    check_square(a)?;
    let w = a.eigvals().map_err(|e| Error::Eigensolver(e.to_string()))?;
    Ok(w.to_vec())
}

/// Eigenvalues and right eigenvectors (as columns).
pub fn eigenpairs(a: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    check_square(a)?;
    let (w, v) = a.eig().map_err(|e| Error::Eigensolver(e.to_string()))?;
    Ok((w.to_vec(), v))
}

/// Eigenvalues of the Hermitian part stored in the lower triangle, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    check_square(a)?;
    let w = a.eigvalsh(UPLO::Lower).map_err(|e| Error::Eigensolver(e.to_string()))?;
    Ok(w.to_vec())
}

pub fn solve(a: &CMatrix, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    check_square(a)?;
    Ok(a.solve(b)?)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    Ok(a.inv()?)
}

fn check_square(a: &CMatrix) -> Result<()> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::SizeMismatch { expected: r, got: c });
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::LinearAlgebra("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Upper Hessenberg matrix similar to `aᵀ` (hence with the spectrum and
/// resolvent trace of `a`), stored densely in column-major order.
#[derive(Clone, Debug)]
pub struct Hessenberg {
    n: usize,
    data: Vec<Complex64>,
}

impl Hessenberg {
    pub fn new(a: &CMatrix) -> Result<Self> {
        check_square(a)?;
        let n = a.nrows();
        // row-major storage read as column-major is the transpose
        let mut data: Vec<Complex64> = a.iter().copied().collect();
        if n > 2 {
            let ni = n as i32;
            let mut tau = vec![Complex64::new(0.0, 0.0); n - 1];
            let mut info = 0i32;
            let mut query = [Complex64::new(0.0, 0.0)];
            let lwork = -1i32;
            unsafe {
                lapack_sys::zgehrd_(
                    &ni,
                    &1,
                    &ni,
                    data.as_mut_ptr() as *mut _,
                    &ni,
                    tau.as_mut_ptr() as *mut _,
                    query.as_mut_ptr() as *mut _,
                    &lwork,
                    &mut info,
                );
            }
            let lwork = (query[0].re as i32).max(1);
            let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
            unsafe {
                lapack_sys::zgehrd_(
                    &ni,
                    &1,
                    &ni,
                    data.as_mut_ptr() as *mut _,
                    &ni,
                    tau.as_mut_ptr() as *mut _,
                    work.as_mut_ptr() as *mut _,
                    &lwork,
                    &mut info,
                );
            }
            if info != 0 {
                return Err(Error::LinearAlgebra(format!("zgehrd failed with info = {info}")));
            }
            for j in 0..n {
                for i in j + 2..n {
                    data[i + j * n] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + j * self.n]
    }

    /// `tr (ζ − H)^{-1} = d/dζ log det(ζ − H)`, from an `O(n²)` pivoted LU of
    /// the Hessenberg matrix carried out in dual numbers.
    pub fn resolvent_trace(&self, zeta: Complex64) -> Result<Complex64> {
        let n = self.n;
        let zero = Dual::constant(Complex64::new(0.0, 0.0));
        let entry = |i: usize, j: usize| -> Dual {
            let v = -self.get(i, j);
            if i == j {
                Dual { v: v + zeta, d: Complex64::new(1.0, 0.0) }
            } else {
                Dual::constant(v)
            }
        };
        let mut active: Vec<Dual> = (0..n).map(|j| entry(0, j)).collect();
        let mut trace = Complex64::new(0.0, 0.0);
        let mut next = vec![zero; n];
        for k in 0..n {
            if k + 1 == n {
                let u = active[k];
                if u.v == Complex64::new(0.0, 0.0) {
                    return Err(Error::LinearAlgebra("ζ is an eigenvalue".into()));
                }
                trace += u.d / u.v;
                break;
            }
            for j in k..n {
                next[j] = entry(k + 1, j);
            }
            let (pivot, other) = if active[k].v.norm() >= next[k].v.norm() {
                (&active, &next)
            } else {
                (&next, &active)
            };
            let u = pivot[k];
            if u.v == Complex64::new(0.0, 0.0) {
                return Err(Error::LinearAlgebra("ζ is an eigenvalue".into()));
            }
            trace += u.d / u.v;
            let l = other[k].div(u);
            let mut reduced = vec![zero; n];
            for j in k + 1..n {
                reduced[j] = other[j].sub(l.mul(pivot[j]));
            }
            active = reduced;
        }
        Ok(trace)
    }
}

#[derive(Clone, Copy, Debug)]
struct Dual {
    v: Complex64,
    d: Complex64,
}

impl Dual {
    fn constant(v: Complex64) -> Self {
        Self { v, d: Complex64::new(0.0, 0.0) }
    }
    fn mul(self, o: Self) -> Self {
        Self { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d: self.d - o.d }
    }
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Self { v: q, d: (self.d - q * o.d) * inv }
    }
}

/// Largest singular value of `a` (any shape).
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 || a.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::LinearAlgebra("matrix has non-finite entries".into()));
    }
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.iter().copied().fold(0.0, f64::max))
}

/// Solves a complex tridiagonal system with partial pivoting.
pub fn tridiagonal_solve(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) || rhs.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: rhs.len() });
    }
    let mut dl = lower.to_vec();
    let mut d = diag.to_vec();
    let mut du = upper.to_vec();
    let mut b = rhs.to_vec();
    let (ni, nrhs) = (n as i32, 1i32);
    let mut info = 0i32;
    unsafe {
        lapack_sys::zgtsv_(
            &ni,
            &nrhs,
            dl.as_mut_ptr() as *mut _,
            d.as_mut_ptr() as *mut _,
            du.as_mut_ptr() as *mut _,
            b.as_mut_ptr() as *mut _,
            &ni.max(1),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::LinearAlgebra(format!("tridiagonal solve failed with info = {info}")));
    }
    Ok(b)
}

/// Eigenvalues in `(lo, hi]` of the real symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e`, ascending, by bisection.
pub fn symmetric_tridiagonal_eigenvalues(d: &[f64], e: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if e.len() + 1 != n {
        return Err(Error::SizeMismatch { expected: n - 1, got: e.len() });
    }
    let ni = n as i32;
    let (mut m, mut nsplit, mut info) = (0i32, 0i32, 0i32);
    let mut w = vec![0.0; n];
    let mut iblock = vec![0i32; n];
    let mut isplit = vec![0i32; n];
    let mut work = vec![0.0; 4 * n];
    let mut iwork = vec![0i32; 3 * n];
    let (range, order) = (b'V' as std::ffi::c_char, b'E' as std::ffi::c_char);
    let abstol = 0.0f64;
    unsafe {
        lapack_sys::dstebz_(
            &range,
            &order,
            &ni,
            &lo,
            &hi,
            &0,
            &0,
            &abstol,
            d.as_ptr(),
            e.as_ptr(),
            &mut m,
            &mut nsplit,
            w.as_mut_ptr(),
            iblock.as_mut_ptr(),
            isplit.as_mut_ptr(),
            work.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver(format!("bisection failed with info = {info}")));
    }
    w.truncate(m as usize);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn hessenberg_preserves_resolvent_trace() {
        let a = random_matrix(40, 3);
        let h = Hessenberg::new(&a).unwrap();
        for i in 0..40usize {
            for j in 0..i.saturating_sub(1) {
                assert_eq!(h.get(i, j), Complex64::new(0.0, 0.0));
            }
        }
        let zeta = Complex64::new(0.7, 2.1);
        let mut shifted = -a.clone();
        for i in 0..40 {
            shifted[[i, i]] += zeta;
        }
        let inv = inverse(&shifted).unwrap();
        let direct: Complex64 = (0..40).map(|i| inv[[i, i]]).sum();
        let fast = h.resolvent_trace(zeta).unwrap();
        assert!((direct - fast).norm() < 1e-10 * direct.norm().max(1.0));
    }

    #[test]
    fn resolvent_trace_of_diagonal() {
        let mut a = CMatrix::zeros((5, 5));
        for i in 0..5 {
            a[[i, i]] = Complex64::new(i as f64, 0.0);
        }
        let h = Hessenberg::new(&a).unwrap();
        let z = Complex64::new(0.5, 0.5);
        let want: Complex64 = (0..5).map(|i| 1.0 / (z - i as f64)).sum();
        assert!((h.resolvent_trace(z).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn spectral_norm_matches_known_cases() {
        let mut d = CMatrix::zeros((4, 4));
        for (i, v) in [1.0, -3.0, 2.0, 0.5].iter().enumerate() {
            d[[i, i]] = Complex64::new(*v, 0.0);
        }
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-13);
        let u = Array1::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0), Complex64::new(-1.0, 0.0)]);
        let v = Array1::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, -1.0)]);
        let rank1 = Array2::from_shape_fn((3, 2), |(i, j)| u[i] * v[j].conj());
        let want = (7.0f64).sqrt() * (1.25f64).sqrt();
        assert!((spectral_norm(&rank1).unwrap() - want).abs() < 1e-10);
        assert_eq!(spectral_norm(&CMatrix::zeros((3, 3))).unwrap(), 0.0);
    }

    #[test]
    fn tridiagonal_helpers() {
        let n = 50;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let w = symmetric_tridiagonal_eigenvalues(&d, &e, -1.0, 0.5).unwrap();
        let want: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos())
            .filter(|&x| x <= 0.5)
            .collect();
        assert_eq!(w.len(), want.len());
        let mut want = want;
        want.sort_by(f64::total_cmp);
        for (a, b) in w.iter().zip(&want) {
            assert!((a - b).abs() < 1e-13);
        }
        let lower = vec![Complex64::new(0.0, 1.0); 3];
        let upper = vec![Complex64::new(1.0, 0.0); 3];
        let diag = vec![Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(3.0, 1.0), Complex64::new(2.0, 0.0)];
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 2.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, -1.0)];
        let mut b = vec![Complex64::new(0.0, 0.0); 4];
        for i in 0..4 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += upper[i] * x[i + 1];
            }
        }
        let got = tridiagonal_solve(&lower, &diag, &upper, &b).unwrap();
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenpairs_have_small_residuals() {
        let a = random_matrix(30, 9);
        let (w, v) = eigenpairs(&a).unwrap();
        for (k, lambda) in w.iter().enumerate() {
            let col = v.column(k).to_owned();
            let r = a.dot(&col) - col.mapv(|c| c * lambda);
            let nr = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(nr < 1e-12);
        }
    }
}
