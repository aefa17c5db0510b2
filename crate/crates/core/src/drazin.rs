//! Drazin index and inverse of a square complex matrix, the residuals of the
//! three defining equations, and truncated Laurent expansions of the
//! resolvent around zero.
//!
//! Both the index and the inverse start from a unitary core-nilpotent
//! reduction. Repeatedly compressing the numerical null space of the leading
//! block by an SVD gives `a = Q [[C, 0], [X, N]] Q*` with `C` invertible and
//! `N` nilpotent; the number of compression steps is the index. The inverse
//! is first formed as `a^k (a^(2k+1))^+ a^k`, keeping exactly `rank(C)`
//! singular values of the middle power. When that product misses the
//! residual tolerance (high index, poorly conditioned similarity) the
//! closed form `Q [[C^-1, 0], [Z, 0]] Q*` is used instead, where
//! `Z = sum_j N^j X C^-(j+2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{self, ComplexMatrix, MatError, Tolerances, ABS_RANK_FLOOR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrazinError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("defining-equation residuals {0:?} exceed tolerance {1:e}")]
    Audit(Residuals, f64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Scaled residuals of `ab = ba`, `bab = b` and `(a(1 - ab))^k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub commutation: f64,
    pub inner_inverse: f64,
    pub nilpotency: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.commutation
            .max(self.inner_inverse)
            .max(self.nilpotency)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.commutation, self.inner_inverse, self.nilpotency]
    }

    pub fn within(&self, tol: f64) -> bool {
        self.commutation <= tol && self.inner_inverse <= tol && self.nilpotency <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrazinResult {
    pub inverse: ComplexMatrix,
    /// Zero for invertible inputs.
    pub index: usize,
    pub residuals: Residuals,
}

/// `a = q t q*` with `t[..core, core..]` exactly zero, `t[..core, ..core]`
/// invertible and `t[core.., core..]` strictly block lower triangular.
struct CoreNilpotent {
    q: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
    core: usize,
    index: usize,
}

fn core_nilpotent(
    a: &ComplexMatrix,
    scale: f64,
    tol: &Tolerances,
) -> Result<CoreNilpotent, DrazinError> {
    let n = a.n();
    let mut t = a.as_dmatrix().clone();
    let mut q = DMatrix::<Complex64>::identity(n, n);
    let smax = matcore::singular_values(a)?[0].max(scale);
    let cutoff = (tol.rank_rtol * n as f64 * smax).max(ABS_RANK_FLOOR);
    let mut m = n;
    let mut index = 0;
    while m > 0 {
        let lead = t.view((0, 0), (m, m)).into_owned();
        let d = matcore::svd(&lead, true)?;
        let v_t = d.v_t.as_ref().ok_or(MatError::NoConvergence("SVD"))?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| d.singular_values[j].total_cmp(&d.singular_values[i]));
        let r = order
            .iter()
            .filter(|&&i| d.singular_values[i] > cutoff)
            .count();
        if r == m {
            break;
        }
        index += 1;
        let v = DMatrix::from_fn(m, m, |row, col| v_t[(order[col], row)].conj());
        let top = v.adjoint() * t.view((0, 0), (m, n));
        t.view_mut((0, 0), (m, n)).copy_from(&top);
        let left = t.view((0, 0), (n, m)) * &v;
        t.view_mut((0, 0), (n, m)).copy_from(&left);
        let ql = q.view((0, 0), (n, m)) * &v;
        q.view_mut((0, 0), (n, m)).copy_from(&ql);
        t.view_mut((0, r), (m, m - r))
            .fill(Complex64::new(0.0, 0.0));
        m = r;
    }
    Ok(CoreNilpotent {
        q,
        t,
        core: m,
        index,
    })
}

/// Smallest `k >= 0` with `rank(a^k) = rank(a^(k+1))`.
pub fn drazin_index(a: &ComplexMatrix, tol: &Tolerances) -> Result<usize, DrazinError> {
    Ok(core_nilpotent(a, 0.0, tol)?.index)
}

fn power_route(a: &ComplexMatrix, index: usize, core: usize) -> Result<ComplexMatrix, DrazinError> {
    let n = a.n();
    if core == 0 {
        return Ok(ComplexMatrix::zeros(n));
    }
    let ak = a.pow(index);
    let big = a.pow(2 * index + 1);
    let s = matcore::singular_values(&big)?;
    let cutoff = if core < n {
        (s[core - 1] * s[core]).sqrt()
    } else {
        0.0
    };
    let mid = matcore::pinv_with_cutoff(&big, cutoff)?;
    Ok(&(&ak * &mid) * &ak)
}

fn closed_form(cn: &CoreNilpotent) -> Result<ComplexMatrix, DrazinError> {
    let n = cn.t.nrows();
    let m = cn.core;
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    if m > 0 {
        let c_inv = ComplexMatrix::wrap(cn.t.view((0, 0), (m, m)).into_owned())
            .try_inverse()?
            .into_dmatrix();
        if m < n {
            let x = cn.t.view((m, 0), (n - m, m)).into_owned();
            let nil = cn.t.view((m, m), (n - m, n - m)).into_owned();
            let mut term = &x * &c_inv * &c_inv;
            let mut z = term.clone();
            for _ in 1..cn.index {
                term = &nil * term * &c_inv;
                z += &term;
            }
            d.view_mut((m, 0), (n - m, m)).copy_from(&z);
        }
        d.view_mut((0, 0), (m, m)).copy_from(&c_inv);
    }
    Ok(ComplexMatrix::wrap(&cn.q * d * cn.q.adjoint()))
}

/// Drazin inverse, index and verified residuals.
pub fn drazin_inverse(a: &ComplexMatrix, tol: &Tolerances) -> Result<DrazinResult, DrazinError> {
    drazin_inverse_scaled(a, 0.0, tol)
}

/// As [`drazin_inverse`], with ranks measured against `max(|a|_2, scale)`.
/// For a matrix formed by sums or products of larger operands, `scale` is
/// their magnitude; singular values that are roundoff at that magnitude then
/// count as zero even when `a` itself is tiny.
pub fn drazin_inverse_scaled(
    a: &ComplexMatrix,
    scale: f64,
    tol: &Tolerances,
) -> Result<DrazinResult, DrazinError> {
    let cn = core_nilpotent(a, scale, tol)?;
    let index = cn.index;
    let k = index.max(1);
    let mut inverse = if index == 0 {
        a.try_inverse()
            .or_else(|_| matcore::pinv(a, tol))
            .map_err(DrazinError::from)?
    } else {
        power_route(a, index, cn.core)?
    };
    let mut residuals = residuals_at_index(a, &inverse, k);
    if !inverse.is_finite() || !residuals.within(tol.residual_tol) {
        let alt = closed_form(&cn)?;
        let alt_res = residuals_at_index(a, &alt, k);
        if alt.is_finite() && (!inverse.is_finite() || alt_res.max() < residuals.max()) {
            inverse = alt;
            residuals = alt_res;
        }
    }
    if !inverse.is_finite() {
        return Err(MatError::Overflow("Drazin inverse").into());
    }
    if !residuals.within(tol.residual_tol) {
        return Err(DrazinError::Audit(residuals, tol.residual_tol));
    }
    Ok(DrazinResult {
        inverse,
        index,
        residuals,
    })
}

/// Measures how well `b` satisfies the defining equations for `a`, using
/// the power `k = drazin_index(a)` (or 1 when `a` is invertible).
pub fn verify_drazin(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<Residuals, DrazinError> {
    verify_drazin_scaled(a, b, 0.0, tol)
}

/// As [`verify_drazin`], with the index found as in [`drazin_inverse_scaled`].
pub fn verify_drazin_scaled(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    scale: f64,
    tol: &Tolerances,
) -> Result<Residuals, DrazinError> {
    a.check_same_dim(b)?;
    let k = core_nilpotent(a, scale, tol)?.index.max(1);
    Ok(residuals_at_index(a, b, k))
}

fn residuals_at_index(a: &ComplexMatrix, b: &ComplexMatrix, k: usize) -> Residuals {
    let s = 1f64.max(a.fro_norm()).max(b.fro_norm());
    let ab = a * b;
    let ba = b * a;
    let commutation = ab.dist(&ba) / s;
    let inner_inverse = (&ba * b).dist(b) / s;
    let core_part = a - &(&ab * a);
    let nilpotency = core_part.pow(k).fro_norm() / s;
    Residuals {
        commutation,
        inner_inverse,
        nilpotency,
    }
}

/// Radius of the punctured disc on which the Laurent expansion converges:
/// `1 / sp(x^d)`, or infinity when the Drazin inverse is zero.
pub fn validity_radius(dres: &DrazinResult) -> Result<f64, DrazinError> {
    if dres.inverse.fro_norm() == 0.0 {
        return Ok(f64::INFINITY);
    }
    let sp = matcore::spectral_radius(&dres.inverse)?;
    Ok(if sp == 0.0 { f64::INFINITY } else { 1.0 / sp })
}

/// Truncated Laurent expansion of `(lambda - x)^-1` around zero:
/// a principal part with `i(x)` terms and `terms + 1` analytic terms.
pub fn resolvent_series_eval(
    x: &ComplexMatrix,
    dres: &DrazinResult,
    lambda: Complex64,
    terms: usize,
) -> Result<ComplexMatrix, DrazinError> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(DrazinError::Domain("lambda must be nonzero".into()));
    }
    if terms == 0 {
        return Err(DrazinError::Domain(
            "at least one series term is required".into(),
        ));
    }
    x.check_same_dim(&dres.inverse)?;
    let radius = validity_radius(dres)?;
    if lambda.norm() >= radius {
        return Err(DrazinError::Domain(format!(
            "|lambda| = {} lies outside the validity disc of radius {}",
            lambda.norm(),
            radius
        )));
    }
    let n = x.n();
    let xd = &dres.inverse;
    let spectral_proj = (x * xd).scalar_minus(Complex64::new(1.0, 0.0));

    let mut principal = ComplexMatrix::zeros(n);
    let mut xpow = ComplexMatrix::identity(n);
    let inv_lambda = lambda.inv();
    let mut lpow = inv_lambda;
    for _ in 1..=dres.index {
        principal = principal + (&xpow * &spectral_proj).scale(lpow);
        xpow = &xpow * x;
        lpow *= inv_lambda;
    }

    let mut analytic = ComplexMatrix::zeros(n);
    let mut dpow = xd.clone();
    let mut lam = Complex64::new(1.0, 0.0);
    for _ in 0..=terms {
        analytic = analytic + dpow.scale(lam);
        dpow = &dpow * xd;
        lam *= lambda;
    }
    let out = principal - analytic;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(MatError::Overflow("resolvent series").into())
    }
}
