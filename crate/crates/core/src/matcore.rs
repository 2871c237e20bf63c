//! Dense complex matrix kernel.
//!
//! [`CMatrix`] is the operand type for everything else in the crate. Storage is
//! delegated to `nalgebra`; the public surface speaks row-major entries and
//! returns [`Error`] on shape mismatches. The `std::ops` impls on references
//! panic on mismatched shapes and are meant for internal code that has already
//! validated its inputs; use the `checked_*` methods at API boundaries.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default relative tolerance for the linear-solve residual check.
pub const TOL_LIN: f64 = 1e-10;
/// Default per-dimension factor for the eigenvalue residual check.
pub const TOL_EIG_PER_DIM: f64 = 1e-8;
/// Relative accuracy promised by [`op_norm`].
pub const TOL_NORM: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    inner: DMatrix<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.get(i, j);
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Self {
        CMatrix { inner }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_inner(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_inner(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dim(
                "from_row_major",
                format!("{} entries for a {rows}x{cols} matrix", entries.len()),
            ));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                what: "matrix entries",
            });
        }
        Ok(Self::from_inner(DMatrix::from_row_slice(
            rows, cols, &entries,
        )))
    }

    /// Builds a matrix from a list of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::dim("from_rows", "ragged rows"));
        }
        let entries = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), ncols, entries)
    }

    /// Real-valued convenience constructor. Panics on ragged input.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&r).expect("well-formed real matrix")
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_inner(DMatrix::from_fn(rows, cols, f))
    }

    pub fn diag(d: &[C64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let z: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&z)
    }

    pub fn scalar(z: C64) -> Self {
        Self::diag(&[z])
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn entries_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows().min(self.cols()))
            .map(|i| self.inner[(i, i)])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn checked_add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_shape("add", other)?;
        Ok(Self::from_inner(&self.inner + &other.inner))
    }

    pub fn checked_sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_shape("sub", other)?;
        Ok(Self::from_inner(&self.inner - &other.inner))
    }

    pub fn checked_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::dim(
                "mul",
                format!(
                    "{}x{} times {}x{}",
                    self.rows(),
                    self.cols(),
                    other.rows(),
                    other.cols()
                ),
            ));
        }
        Ok(Self::from_inner(&self.inner * &other.inner))
    }

    fn same_shape(&self, op: &'static str, other: &CMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(
                op,
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(())
    }

    pub fn scale(&self, z: C64) -> CMatrix {
        Self::from_inner(&self.inner * z)
    }

    pub fn scale_real(&self, x: f64) -> CMatrix {
        self.scale(C64::new(x, 0.0))
    }

    /// `self - λI`. Requires a square matrix.
    pub fn shift(&self, lambda: C64) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::dim("shift", "matrix must be square"));
        }
        let mut m = self.inner.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= lambda;
        }
        Ok(Self::from_inner(m))
    }

    pub fn adjoint(&self) -> CMatrix {
        Self::from_inner(self.inner.adjoint())
    }

    pub fn transpose(&self) -> CMatrix {
        Self::from_inner(self.inner.transpose())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols())
            .map(|j| self.inner.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Integer power by repeated squaring. `k = 0` gives the identity.
    pub fn powi(&self, k: usize) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::dim("powi", "matrix must be square"));
        }
        let mut result = CMatrix::identity(self.rows());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Copy of the `nr x nc` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        Self::from_inner(self.inner.view((r0, c0), (nr, nc)).into_owned())
    }

    /// Assembles `[[tl, tr], [bl, br]]`.
    pub fn from_blocks(tl: &CMatrix, tr: &CMatrix, bl: &CMatrix, br: &CMatrix) -> Result<CMatrix> {
        if tl.rows() != tr.rows()
            || bl.rows() != br.rows()
            || tl.cols() != bl.cols()
            || tr.cols() != br.cols()
        {
            return Err(Error::dim("from_blocks", "blocks do not tile"));
        }
        let (m, n) = (tl.rows(), tl.cols());
        let rows = m + bl.rows();
        let cols = n + tr.cols();
        let mut out = DMatrix::zeros(rows, cols);
        out.view_mut((0, 0), tl.shape()).copy_from(&tl.inner);
        out.view_mut((0, n), tr.shape()).copy_from(&tr.inner);
        out.view_mut((m, 0), bl.shape()).copy_from(&bl.inner);
        out.view_mut((m, n), br.shape()).copy_from(&br.inner);
        Ok(Self::from_inner(out))
    }

    /// Block upper-triangular `[[a, c], [0, b]]`.
    pub fn upper_block(a: &CMatrix, c: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
        let zero = CMatrix::zeros(b.rows(), a.cols());
        Self::from_blocks(a, c, &zero, b)
    }

    /// `a ⊕ b`.
    pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let tr = CMatrix::zeros(a.rows(), b.cols());
        let bl = CMatrix::zeros(b.rows(), a.cols());
        Self::from_blocks(a, &tr, &bl, b).expect("direct sum blocks tile")
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        Self::from_inner(a.inner.kronecker(&b.inner))
    }

    /// Column-major vectorisation `vec(X)`.
    pub fn vec(&self) -> CMatrix {
        let data: Vec<C64> = self.inner.iter().copied().collect();
        Self::from_inner(DMatrix::from_column_slice(data.len(), 1, &data))
    }

    /// Inverse of [`CMatrix::vec`].
    pub fn unvec(v: &CMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
        if v.cols() != 1 || v.rows() != rows * cols {
            return Err(Error::dim(
                "unvec",
                format!("{:?} into {rows}x{cols}", v.shape()),
            ));
        }
        let data: Vec<C64> = v.inner.iter().copied().collect();
        Ok(Self::from_inner(DMatrix::from_column_slice(
            rows, cols, &data,
        )))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows())
            .all(|i| (0..i.min(self.cols())).all(|j| self.inner[(i, j)] == C64::new(0.0, 0.0)))
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        self.checked_add(rhs).expect("shape mismatch in +")
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        self.checked_sub(rhs).expect("shape mismatch in -")
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        self.checked_mul(rhs).expect("shape mismatch in *")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix::from_inner(-&self.inner)
    }
}

/// Singular values in descending order.
pub fn singular_values(t: &CMatrix) -> Vec<f64> {
    if t.rows() == 0 || t.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = t.inner.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Induced 2-norm (largest singular value).
pub fn op_norm(t: &CMatrix) -> f64 {
    singular_values(t).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square matrix; equals `1/‖t⁻¹‖` when invertible.
pub fn smallest_singular_value(t: &CMatrix) -> f64 {
    singular_values(t).last().copied().unwrap_or(0.0)
}

/// 2-norm condition number estimate from the singular values.
pub fn condition_number(t: &CMatrix) -> f64 {
    let s = singular_values(t);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Solves `a x = rhs` with the default residual tolerance.
pub fn solve_linear(a: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    solve_linear_with_tol(a, rhs, TOL_LIN)
}

/// Solves `a x = rhs` by partial-pivoting LU plus one refinement step.
///
/// Fails with [`Error::Singular`] when `a` is singular to working precision or
/// when the residual `‖a x − rhs‖_F ≤ tol·‖a‖·‖x‖_F` cannot be met.
pub fn solve_linear_with_tol(a: &CMatrix, rhs: &CMatrix, tol: f64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::dim(
            "solve_linear",
            "coefficient matrix must be square",
        ));
    }
    if a.rows() != rhs.rows() {
        return Err(Error::dim(
            "solve_linear",
            format!(
                "{}x{} system with {} rhs rows",
                a.rows(),
                a.cols(),
                rhs.rows()
            ),
        ));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(rhs.clone());
    }
    let s = singular_values(a);
    let (hi, lo) = (s[0], s[n - 1]);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(lo > (n as f64) * f64::EPSILON * hi) {
        return Err(Error::Singular { condition: cond });
    }
    let lu = a.inner.clone().lu();
    let mut x = lu
        .solve(&rhs.inner)
        .ok_or(Error::Singular { condition: cond })?;
    let r = &rhs.inner - &a.inner * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let x = CMatrix::from_inner(x);
    if !x.is_finite() {
        return Err(Error::Singular { condition: cond });
    }
    let resid = (&(a * &x) - rhs).frobenius_norm();
    if resid > tol * hi * x.frobenius_norm() && resid > tol * rhs.frobenius_norm() {
        return Err(Error::Singular { condition: cond });
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve_linear(a, &CMatrix::identity(a.rows()))
}

/// Computed eigenvalues of a square matrix, with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub source: String,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_modulus(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

/// Eigenvalues via the complex Schur form, each verified by
/// `σ_min(λI − T) ≤ tol_eig·‖T‖` with `tol_eig = 1e-8·n`.
pub fn eigenvalues(t: &CMatrix) -> Result<Spectrum> {
    eigenvalues_with_tol(t, TOL_EIG_PER_DIM)
}

pub fn eigenvalues_with_tol(t: &CMatrix, tol_per_dim: f64) -> Result<Spectrum> {
    if !t.is_square() {
        return Err(Error::dim("eigenvalues", "matrix must be square"));
    }
    let n = t.rows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            source: "matrix".into(),
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite {
            what: "eigenvalue input",
        });
    }
    let eigs = if t.is_upper_triangular() {
        t.diagonal()
    } else {
        let max_iter = 100 * n.max(10);
        let schur = Schur::try_new(t.inner.clone(), f64::EPSILON, max_iter).ok_or(
            Error::NoConvergence {
                what: "Schur QR iteration",
                iterations: max_iter,
            },
        )?;
        let (_, tri) = schur.unpack();
        (0..n).map(|i| tri[(i, i)]).collect()
    };
    let tol = tol_per_dim * n as f64 * op_norm(t);
    for &lambda in &eigs {
        let shifted = t.shift(lambda)?;
        if smallest_singular_value(&shifted) > tol {
            return Err(Error::NoConvergence {
                what: "eigenvalue verification",
                iterations: 0,
            });
        }
    }
    Ok(Spectrum {
        eigenvalues: eigs,
        source: "matrix".into(),
    })
}

// Padé coefficients and thresholds for scaling and squaring (Higham 2005).
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm(t: &CMatrix) -> Result<CMatrix> {
    if !t.is_square() {
        return Err(Error::dim("expm", "matrix must be square"));
    }
    let n = t.rows();
    let norm = t.norm_one();
    if !norm.is_finite() {
        return Err(Error::Range("expm input norm is not finite".into()));
    }
    let id = CMatrix::identity(n);
    if norm == 0.0 {
        return Ok(id);
    }
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let (u, v) = pade_low(t, coeffs);
            return pade_solve(&u, &v);
        }
    }
    let s = (norm / THETA13).log2().ceil().max(0.0);
    if s > 1000.0 {
        return Err(Error::Range(format!("expm scaling exponent {s} too large")));
    }
    let scaled = t.scale_real(0.5f64.powi(s as i32));
    let (u, v) = pade13(&scaled);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s as usize {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::Range("expm overflowed".into()));
    }
    Ok(r)
}

fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let a2 = a * a;
    let mut u_even = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    let mut pow = CMatrix::identity(n);
    for k in (0..b.len()).step_by(2) {
        v = &v + &pow.scale_real(b[k]);
        if k + 1 < b.len() {
            u_even = &u_even + &pow.scale_real(b[k + 1]);
        }
        pow = &pow * &a2;
    }
    (a * &u_even, v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = &PADE13;
    let n = a.rows();
    let id = CMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMatrix {
        let mut m = a6.scale_real(c6);
        m = &m + &a4.scale_real(c4);
        m = &m + &a2.scale_real(c2);
        &m + &id.scale_real(c0)
    };
    let u_hi = lin(b[13], b[11], b[9], 0.0);
    let u_inner = &(&a6 * &u_hi) + &lin(b[7], b[5], b[3], b[1]);
    let u = a * &u_inner;
    let v_hi = lin(b[12], b[10], b[8], 0.0);
    let v = &(&a6 * &v_hi) + &lin(b[6], b[4], b[2], b[0]);
    (u, v)
}

fn pade_solve(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    let lu = q.inner.clone().lu();
    let x = lu
        .solve(&p.inner)
        .ok_or_else(|| Error::Range("Padé denominator singular".into()))?;
    let r = CMatrix::from_inner(x);
    if !r.is_finite() {
        return Err(Error::Range("expm overflowed".into()));
    }
    Ok(r)
}
