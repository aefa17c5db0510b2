//! Dense complex-matrix arithmetic and the decompositions the rest of the
//! crate is built on: numerical rank, Moore-Penrose inverse, eigenvalues,
//! spectral radius and polynomial evaluation.
//!
//! Everything here works on square matrices of modest size (n <= 32).
//! Rectangular matrices only ever appear as internal SVD factors.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::linalg::{Schur, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Maximum number of sweeps handed to the iterative SVD and Schur kernels.
const MAX_ITER: usize = 10_000;
const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);

/// Below this largest singular value a matrix is treated as exactly zero.
pub const ABS_RANK_FLOOR: f64 = 1e-280;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix dimension must be positive")]
    EmptyMatrix,
    #[error("expected {expected} entries for an {n}x{n} matrix, found {found}")]
    EntryCount {
        n: usize,
        expected: usize,
        found: usize,
    },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("matrix is numerically singular")]
    Singular,
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error("arithmetic overflow while evaluating {0}")]
    Overflow(&'static str),
    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),
}

/// Numerical knobs shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff, applied as `rank_rtol * sigma_max * n`.
    pub rank_rtol: f64,
    /// Largest acceptable scaled residual.
    pub residual_tol: f64,
    /// Number of analytic terms kept when evaluating a resolvent series.
    pub series_terms: usize,
    /// Fraction of the validity radius at which spectral parameters are drawn.
    pub lambda_radius_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rtol: 100.0 * f64::EPSILON,
            residual_tol: 1e-8,
            series_terms: 60,
            lambda_radius_factor: 0.1,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), MatError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rank_rtol) {
            return Err(MatError::InvalidTolerances("rank_rtol must be > 0".into()));
        }
        if !positive(self.residual_tol) {
            return Err(MatError::InvalidTolerances(
                "residual_tol must be > 0".into(),
            ));
        }
        if self.series_terms == 0 {
            return Err(MatError::InvalidTolerances(
                "series_terms must be >= 1".into(),
            ));
        }
        if !positive(self.lambda_radius_factor) || self.lambda_radius_factor >= 1.0 {
            return Err(MatError::InvalidTolerances(
                "lambda_radius_factor must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Dense square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl ComplexMatrix {
    /// Builds an `n x n` matrix from row-major entries.
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self, MatError> {
        if n == 0 {
            return Err(MatError::EmptyMatrix);
        }
        if entries.len() != n * n {
            return Err(MatError::EntryCount {
                n,
                expected: n * n,
                found: entries.len(),
            });
        }
        if let Some(k) = entries
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(MatError::NonFinite {
                row: k / n,
                col: k % n,
            });
        }
        Ok(Self(DMatrix::from_row_slice(n, n, &entries)))
    }

    /// Builds a real matrix from rows. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let entries = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), n, "rows must form a square matrix");
                r.iter().map(|&v| Complex64::new(v, 0.0))
            })
            .collect();
        Self::new(n, entries).expect("literal matrix must be finite and non-empty")
    }

    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self, MatError> {
        if m.nrows() != m.ncols() {
            return Err(MatError::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        let n = m.nrows();
        let entries: Vec<Complex64> = m.transpose().iter().copied().collect();
        Self::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        Self(m)
    }

    /// Block-diagonal matrix with the given blocks along the diagonal.
    pub fn block_diag(blocks: &[ComplexMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n()).sum();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let k = b.n();
            m.view_mut((off, off), (k, k)).copy_from(&b.0);
            off += k;
        }
        Self(m)
    }

    /// Wraps an already validated nalgebra matrix. Entries produced by
    /// arithmetic on finite matrices are trusted here.
    pub(crate) fn wrap(m: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        self.0.transpose().iter().copied().collect()
    }

    pub fn fro_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    /// `c * 1 + self`.
    pub fn add_scalar(&self, c: Complex64) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.n() {
            m[(i, i)] += c;
        }
        Self(m)
    }

    /// `c * 1 - self`, the resolvent factor at `c`.
    pub fn scalar_minus(&self, c: Complex64) -> Self {
        (-self).add_scalar(c)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::identity(self.n());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Ordinary inverse through LU; fails on exact singularity or overflow.
    pub fn try_inverse(&self) -> Result<Self, MatError> {
        let inv = self
            .0
            .clone()
            .lu()
            .try_inverse()
            .ok_or(MatError::Singular)?;
        let inv = Self(inv);
        if inv.is_finite() {
            Ok(inv)
        } else {
            Err(MatError::Singular)
        }
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<(), MatError> {
        if self.n() == other.n() {
            Ok(())
        } else {
            Err(MatError::DimensionMismatch {
                left: self.n(),
                right: other.n(),
            })
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op &rhs.0)
            }
        }
        impl $tr<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

pub(crate) fn svd(
    a: &DMatrix<Complex64>,
    vectors: bool,
) -> Result<SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>, MatError> {
    SVD::try_new(a.clone(), vectors, vectors, f64::EPSILON, MAX_ITER)
        .ok_or(MatError::NoConvergence("SVD"))
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>, MatError> {
    let mut s: Vec<f64> = svd(&a.0, false)?.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Number of singular values above an absolute cutoff.
pub fn rank_with_cutoff(a: &ComplexMatrix, cutoff: f64) -> Result<usize, MatError> {
    let s = singular_values(a)?;
    if s.first().copied().unwrap_or(0.0) < ABS_RANK_FLOOR {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > cutoff).count())
}

/// Numerical rank: singular values with `sigma > rank_rtol * sigma_max * n`.
pub fn rank(a: &ComplexMatrix, tol: &Tolerances) -> Result<usize, MatError> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax < ABS_RANK_FLOOR {
        return Ok(0);
    }
    let cutoff = tol.rank_rtol * smax * a.n() as f64;
    Ok(s.iter().filter(|&&v| v > cutoff).count())
}

/// Moore-Penrose inverse with singular values at or below `cutoff` dropped.
pub fn pinv_with_cutoff(a: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix, MatError> {
    let d = svd(&a.0, true)?;
    let u = d.u.as_ref().ok_or(MatError::NoConvergence("SVD"))?;
    let v_t = d.v_t.as_ref().ok_or(MatError::NoConvergence("SVD"))?;
    let smax = d.singular_values.iter().copied().fold(0.0, f64::max);
    let n = a.n();
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    if smax < ABS_RANK_FLOOR {
        return Ok(ComplexMatrix(acc));
    }
    for (k, &s) in d.singular_values.iter().enumerate() {
        if s > cutoff {
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k).adjoint();
            acc += (vk * uk) * Complex64::new(1.0 / s, 0.0);
        }
    }
    let out = ComplexMatrix(acc);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(MatError::Overflow("pseudoinverse"))
    }
}

/// Moore-Penrose inverse using the same relative cutoff as [`rank`].
pub fn pinv(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix, MatError> {
    let smax = singular_values(a)?.first().copied().unwrap_or(0.0);
    pinv_with_cutoff(a, tol.rank_rtol * smax * a.n() as f64)
}

/// Horner evaluation of `sum coeffs[i] * x^i`, with `x^0` the identity.
pub fn poly_eval(coeffs: &[Complex64], x: &ComplexMatrix) -> Result<ComplexMatrix, MatError> {
    let (last, rest) = coeffs.split_last().ok_or(MatError::EmptyPolynomial)?;
    let mut acc = ComplexMatrix::zeros(x.n()).add_scalar(*last);
    for c in rest.iter().rev() {
        acc = (&acc * x).add_scalar(*c);
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(MatError::Overflow("polynomial"))
    }
}

/// Eigenvalues through a complex Schur decomposition.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>, MatError> {
    if a.n() == 1 {
        return Ok(vec![a.get(0, 0)]);
    }
    // Nearly scalar inputs can stall the QR iteration at machine epsilon;
    // removing the mean eigenvalue and relaxing the deflation test helps.
    let n = a.n();
    let shift = a.trace() / n as f64;
    let shifted = a.0.clone() - DMatrix::identity(n, n) * shift;
    for (m, s, eps) in [
        (&a.0, ZERO_C, f64::EPSILON),
        (&shifted, shift, f64::EPSILON),
        (&shifted, shift, 16.0 * f64::EPSILON),
    ] {
        if let Some(schur) = Schur::try_new(m.clone(), eps, MAX_ITER) {
            let (_, t) = schur.unpack();
            return Ok((0..n).map(|i| t[(i, i)] + s).collect());
        }
    }
    Err(MatError::NoConvergence("Schur"))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64, MatError> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Roots of `sum coeffs[i] * z^i` via the companion matrix. Trailing zero
/// leading coefficients are dropped; a constant polynomial has no roots.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, MatError> {
    let deg = coeffs
        .iter()
        .rposition(|c| *c != Complex64::new(0.0, 0.0))
        .ok_or(MatError::EmptyPolynomial)?;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    eigenvalues(&ComplexMatrix(comp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn arb_matrix(max_n: usize) -> impl Strategy<Value = ComplexMatrix> {
        (1..=max_n).prop_flat_map(|n| {
            prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n * n).prop_map(move |v| {
                ComplexMatrix::new(n, v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap()
            })
        })
    }

    #[test]
    fn new_rejects_bad_input() {
        assert_eq!(ComplexMatrix::new(0, vec![]), Err(MatError::EmptyMatrix));
        assert!(matches!(
            ComplexMatrix::new(2, vec![c(0.0, 0.0); 3]),
            Err(MatError::EntryCount { .. })
        ));
        let mut v = vec![c(0.0, 0.0); 4];
        v[3] = c(f64::NAN, 0.0);
        assert_eq!(
            ComplexMatrix::new(2, v),
            Err(MatError::NonFinite { row: 1, col: 1 })
        );
    }

    #[test]
    fn tolerances_validate() {
        assert!(tol().validate().is_ok());
        let bad = Tolerances {
            lambda_radius_factor: 1.0,
            ..tol()
        };
        assert!(bad.validate().is_err());
        let bad = Tolerances {
            series_terms: 0,
            ..tol()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&ComplexMatrix::identity(3), &tol()).unwrap(), 3);
        assert_eq!(rank(&ComplexMatrix::zeros(2), &tol()).unwrap(), 0);
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(rank(&a, &tol()).unwrap(), 1);
    }

    #[test]
    fn pinv_examples() {
        let i = ComplexMatrix::identity(3);
        assert!(pinv(&i, &tol()).unwrap().dist(&i) < 1e-14);
        let d = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let want = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.0]]);
        assert!(pinv(&d, &tol()).unwrap().dist(&want) < 1e-14);

        // Normal-equations oracle: for a = v v^T with v = (1, 1), a^+ = a / |v|^4.
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let want = a.scale(c(0.25, 0.0));
        assert!(pinv(&a, &tol()).unwrap().dist(&want) < 1e-14);
    }

    #[test]
    fn poly_eval_examples() {
        let f = [c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]; // a(a-1)
        let p = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert!(poly_eval(&f, &p).unwrap().fro_norm() < 1e-15);

        let sq = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let j2 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(poly_eval(&sq, &j2).unwrap().fro_norm(), 0.0);

        let p = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let q = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let got = poly_eval(&f, &(&p + &q)).unwrap();
        let want = &p * &q + &q * &p;
        assert!(got.dist(&want) < 1e-15);

        assert_eq!(poly_eval(&[], &p), Err(MatError::EmptyPolynomial));
        let huge = [c(0.0, 0.0), c(0.0, 0.0), c(1e300, 0.0)];
        let big = ComplexMatrix::identity(2).scale(c(1e200, 0.0));
        assert_eq!(
            poly_eval(&huge, &big),
            Err(MatError::Overflow("polynomial"))
        );
    }

    #[test]
    fn spectral_radius_examples() {
        assert!((spectral_radius(&ComplexMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let j2 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(spectral_radius(&j2).unwrap(), 0.0);
        let d = ComplexMatrix::from_real_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        assert!((spectral_radius(&d).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn roots_of_companion() {
        // (z - 2)(z^2 + 1)
        let mut r = poly_roots(&[c(-2.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)]).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-12);
        assert!((r[2] - c(0.0, 1.0)).norm() < 1e-12);
        assert!(poly_roots(&[c(3.0, 0.0)]).unwrap().is_empty());
    }

    #[test]
    fn block_diag_and_pow() {
        let j2 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = ComplexMatrix::block_diag(&[ComplexMatrix::from_real_rows(&[&[2.0]]), j2]);
        assert_eq!(b.n(), 3);
        assert_eq!(b.get(0, 0), c(2.0, 0.0));
        assert_eq!(b.get(1, 2), c(1.0, 0.0));
        let b2 = b.pow(2);
        assert_eq!(b2.get(0, 0), c(4.0, 0.0));
        assert_eq!(b2.get(1, 2), c(0.0, 0.0));
        assert_eq!(b.pow(0), ComplexMatrix::identity(3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pinv_is_an_involution(a in arb_matrix(6)) {
            let t = tol();
            let b = pinv(&a, &t).unwrap();
            let bb = pinv(&b, &t).unwrap();
            prop_assert!(bb.dist(&a) <= t.residual_tol * a.fro_norm().max(1.0));
            prop_assert_eq!(rank(&a, &t).unwrap(), rank(&b, &t).unwrap());
            // Penrose equations.
            let s = a.fro_norm().max(b.fro_norm()).max(1.0);
            prop_assert!((&(&a * &b) * &a).dist(&a) / s < 1e-10);
            prop_assert!((&(&b * &a) * &b).dist(&b) / (s * s) < 1e-10);
            let ab = &a * &b;
            prop_assert!(ab.dist(&ab.adjoint()) < 1e-10);
        }

        #[test]
        fn spectral_radius_of_powers(a in arb_matrix(6), k in 1usize..=4) {
            let r = spectral_radius(&a).unwrap();
            let rk = spectral_radius(&a.pow(k)).unwrap();
            prop_assert!((rk - r.powi(k as i32)).abs() <= 1e-6 * r.powi(k as i32).max(1e-300) + 1e-12);
        }

        #[test]
        fn poly_eval_respects_products(
            a in arb_matrix(4),
            f in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=4),
            g in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=3),
        ) {
            let f: Vec<Complex64> = f.into_iter().map(|(r, i)| c(r, i)).collect();
            let g: Vec<Complex64> = g.into_iter().map(|(r, i)| c(r, i)).collect();
            let mut fg = vec![c(0.0, 0.0); f.len() + g.len() - 1];
            for (i, x) in f.iter().enumerate() {
                for (j, y) in g.iter().enumerate() {
                    fg[i + j] += x * y;
                }
            }
            let lhs = &poly_eval(&f, &a).unwrap() * &poly_eval(&g, &a).unwrap();
            let rhs = poly_eval(&fg, &a).unwrap();
            prop_assert!(lhs.dist(&rhs) <= 1e-8 * rhs.fro_norm().max(1.0));
        }
    }
}
