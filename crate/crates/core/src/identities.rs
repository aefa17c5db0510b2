//! Closed-form identities for constrained triples and pairs, the scalar
//! substitutions that turn them into resolvent statements, and the
//! idempotent-pair formulas. Each check returns a scaled residual; nothing
//! here decides pass or fail except [`equivalence_audit`].

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubic;
use crate::drazin::{self, DrazinError, DrazinResult};
use crate::instances::{
    self, alternating_product, ConstraintForm, ConstraintParams, InstanceError, Lead, Triple,
};
use crate::matcore::{self, ComplexMatrix, MatError, Tolerances};
use crate::record::{IdentityId, TrialRecord, Verdict};
use crate::sampling;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative smallest-singular-value threshold below which a matrix is
/// treated as singular.
pub const INVERTIBILITY_RTOL: f64 = 1e-10;
/// Attempts at drawing an admissible spectral parameter.
pub const LAMBDA_RETRIES: usize = 50;
/// Residual bound in the contract of the Cardano substitutions.
pub const SUBSTITUTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentityError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Drazin(#[from] DrazinError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("precondition violated: {what} (residual {residual:e})")]
    Precondition { what: &'static str, residual: f64 },
    #[error("no admissible spectral parameter after {0} draws")]
    NotAdmissible(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Where a residual was measured.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualContext {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Complex64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity_id: IdentityId,
    pub residual: f64,
    pub context: ResidualContext,
}

fn precheck(
    triple: &Triple,
    params: &ConstraintParams,
    form: ConstraintForm,
    tol: &Tolerances,
) -> Result<(), IdentityError> {
    let (r1, r2) = instances::verify_triple_constraints(triple, params, form)?;
    let residual = r1.max(r2);
    if !(residual <= tol.residual_tol) {
        let what = match form {
            ConstraintForm::Sum => "sum-form constraints",
            ConstraintForm::Product => "product-form constraints",
        };
        return Err(IdentityError::Precondition { what, residual });
    }
    Ok(())
}

fn factor_product(triple: &Triple, lambda: Complex64) -> (ComplexMatrix, f64) {
    let f: Vec<ComplexMatrix> = triple
        .members()
        .iter()
        .map(|x| x.scalar_minus(lambda))
        .collect();
    let scale = f.iter().map(|m| m.fro_norm()).product::<f64>().max(1.0);
    (&(&f[0] * &f[1]) * &f[2], scale)
}

/// `(l - x1)(l - x2)(l - x3) = l^3 + l a1 - (x1 + x2 + x3)(l^2 - l a2 + beta)`
/// for a sum-form triple.
pub fn cubic_identity_sum(
    triple: &Triple,
    params: &ConstraintParams,
    lambda: Complex64,
    tol: &Tolerances,
) -> Result<f64, IdentityError> {
    precheck(triple, params, ConstraintForm::Sum, tol)?;
    let (lhs, scale) = factor_product(triple, lambda);
    let q = lambda * lambda - lambda * params.alpha2 + params.beta;
    let rhs = triple
        .sum()
        .scale(-q)
        .add_scalar(lambda.powi(3) + lambda * params.alpha1);
    Ok(lhs.dist(&rhs) / scale)
}

/// `(l - x1)(l - x2)(l - x3) = l^3 - l^2 a1 - (l^2 a2 - l + beta)(x1x2 + x1x3 + x2x3)`
/// for a product-form triple.
pub fn cubic_identity_prod(
    triple: &Triple,
    params: &ConstraintParams,
    lambda: Complex64,
    tol: &Tolerances,
) -> Result<f64, IdentityError> {
    precheck(triple, params, ConstraintForm::Product, tol)?;
    let (lhs, scale) = factor_product(triple, lambda);
    let q = lambda * lambda * params.alpha2 - lambda + params.beta;
    let rhs = triple
        .pairwise()
        .scale(-q)
        .add_scalar(lambda.powi(3) - lambda * lambda * params.alpha1);
    Ok(lhs.dist(&rhs) / scale)
}

/// Scalar factor and substituted spectral value of the resolvent identity:
/// `(q, mu)` with `mu = num / q`.
fn substitution(
    params: &ConstraintParams,
    lambda: Complex64,
    form: ConstraintForm,
) -> (Complex64, Complex64, f64) {
    let l2 = lambda * lambda;
    let (q, num, qscale) = match form {
        ConstraintForm::Sum => (
            l2 - lambda * params.alpha2 + params.beta,
            l2 * lambda + lambda * params.alpha1,
            l2.norm() + (lambda * params.alpha2).norm() + params.beta.norm(),
        ),
        ConstraintForm::Product => (
            l2 * params.alpha2 - lambda + params.beta,
            l2 * lambda - l2 * params.alpha1,
            (l2 * params.alpha2).norm() + lambda.norm() + params.beta.norm(),
        ),
    };
    (q, num / q, qscale)
}

fn well_conditioned(m: &ComplexMatrix) -> Result<bool, MatError> {
    let s = matcore::singular_values(m)?;
    let (max, min) = (s[0], s[s.len() - 1]);
    Ok(max > 0.0 && min > INVERTIBILITY_RTOL * max)
}

/// `(mu - E)^-1 = q (l - x3)^-1 (l - x2)^-1 (l - x1)^-1` where `E` is the sum
/// (sum form) or pairwise sum (product form), `q` the scalar factor of the
/// corresponding cubic identity and `mu = (l^3 + l a1) / q` resp.
/// `(l^3 - l^2 a1) / q`.
///
/// Fails with [`IdentityError::NotAdmissible`] when `lambda` is zero or any
/// inverse involved is numerically singular.
pub fn resolvent_product_identity(
    triple: &Triple,
    params: &ConstraintParams,
    lambda: Complex64,
    form: ConstraintForm,
    tol: &Tolerances,
) -> Result<f64, IdentityError> {
    precheck(triple, params, form, tol)?;
    if lambda == ZERO {
        return Err(IdentityError::NotAdmissible(1));
    }
    let (q, mu, qscale) = substitution(params, lambda, form);
    if !(q.norm() > 1e-12 * qscale.max(1e-300)) || !mu.is_finite() {
        return Err(IdentityError::NotAdmissible(1));
    }
    let e = match form {
        ConstraintForm::Sum => triple.sum(),
        ConstraintForm::Product => triple.pairwise(),
    };
    let left = e.scalar_minus(mu);
    let factors: Vec<ComplexMatrix> = triple
        .members()
        .iter()
        .map(|x| x.scalar_minus(lambda))
        .collect();
    if !well_conditioned(&left)? {
        return Err(IdentityError::NotAdmissible(1));
    }
    for f in &factors {
        if !well_conditioned(f)? {
            return Err(IdentityError::NotAdmissible(1));
        }
    }
    let lhs = left.try_inverse()?;
    let inverses = factors
        .iter()
        .map(|f| f.try_inverse())
        .collect::<Result<Vec<_>, _>>()?;
    let rhs = &(&inverses[2].scale(q) * &inverses[1]) * &inverses[0];
    // The product can be far smaller than its factors, so its rounding error
    // is measured against the product of their norms.
    let factor_scale = q.norm() * inverses.iter().map(|m| m.fro_norm()).product::<f64>();
    let scale = lhs.fro_norm().max(factor_scale).max(1.0);
    Ok(lhs.dist(&rhs) / scale)
}

/// Largest admissible modulus for resolvent samples: `factor` times the
/// smallest validity radius among the given Drazin data, capped at `factor`.
pub fn lambda_radius(data: &[&DrazinResult], tol: &Tolerances) -> Result<f64, IdentityError> {
    let mut r: f64 = 1.0;
    for d in data {
        r = r.min(drazin::validity_radius(d)?);
    }
    Ok(tol.lambda_radius_factor * r)
}

/// Draws `lambda` with modulus in `[radius / 2, radius]` and uniform phase
/// until `check` accepts it.
pub fn sample_admissible<R, T, F>(
    rng: &mut R,
    radius: f64,
    mut check: F,
) -> Result<(Complex64, T), IdentityError>
where
    R: Rng + ?Sized,
    F: FnMut(Complex64) -> Result<T, IdentityError>,
{
    for _ in 0..LAMBDA_RETRIES {
        let lambda = sampling::annulus_point(rng, 0.5 * radius, radius);
        match check(lambda) {
            Err(IdentityError::NotAdmissible(_)) => continue,
            other => return other.map(|v| (lambda, v)),
        }
    }
    Err(IdentityError::NotAdmissible(LAMBDA_RETRIES))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootBranch {
    /// The displayed expression with principal square and cube roots.
    Principal,
    /// Principal cube root of the other square-root sign; used when the
    /// displayed expression divides by zero or loses accuracy.
    AlternateSqrt,
    /// Vanishing discriminants: the triple root.
    TripleRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRoot {
    /// Returned root after Newton refinement.
    pub lambda: Complex64,
    /// The unrefined closed-form value on the reported branch.
    pub unrefined: Complex64,
    pub branch: RootBranch,
}

impl SubstitutionRoot {
    pub fn is_degenerate(&self) -> bool {
        self.branch == RootBranch::TripleRoot
    }
}

/// Monic cubic `z^3 + a2 z^2 + a1 z + a0` in coefficient form.
#[derive(Debug, Clone, Copy)]
struct Monic {
    a2: Complex64,
    a1: Complex64,
    a0: Complex64,
}

impl Monic {
    fn eval(&self, z: Complex64) -> Complex64 {
        ((z + self.a2) * z + self.a1) * z + self.a0
    }

    fn residual(&self, z: Complex64) -> f64 {
        self.eval(z).norm() / z.norm().powi(3).max(1.0)
    }

    fn refine(&self, z: Complex64) -> Complex64 {
        cubic::polish(self.a2, self.a1, self.a0, z)
    }
}

fn sum_cubic(mu: Complex64, p: &ConstraintParams) -> Monic {
    Monic {
        a2: -mu,
        a1: p.alpha1 + mu * p.alpha2,
        a0: -mu * p.beta,
    }
}

fn prod_cubic(mu: Complex64, p: &ConstraintParams) -> Monic {
    Monic {
        a2: -(p.alpha1 + mu * p.alpha2),
        a1: mu,
        a0: -mu * p.beta,
    }
}

/// `|l^3 - mu l^2 + (a1 + mu a2) l - mu beta| / max(1, |l|^3)`.
pub fn cubic_residual_sum(lambda: Complex64, mu: Complex64, params: &ConstraintParams) -> f64 {
    sum_cubic(mu, params).residual(lambda)
}

/// `|l^3 - (a1 + mu a2) l^2 + mu l - mu beta| / max(1, |l|^3)`.
pub fn cubic_residual_prod(lambda: Complex64, mu: Complex64, params: &ConstraintParams) -> f64 {
    prod_cubic(mu, params).residual(lambda)
}

/// Evaluates a Cardano-type expression `closed(C)` for both square-root
/// signs of `(d1 +- sqrt(d1^2 - 4 d0^3)) / 2`, preferring the principal one.
fn cardano_select(
    cubic: Monic,
    d0: Complex64,
    d1: Complex64,
    triple_root: Complex64,
    closed: impl Fn(Complex64) -> Complex64,
) -> SubstitutionRoot {
    let disc = (d1 * d1 - 4.0 * d0 * d0 * d0).sqrt();
    let principal = cubic::cbrt((d1 + disc) / 2.0);
    let alternate = cubic::cbrt((d1 - disc) / 2.0);
    let accept = |c: Complex64, branch| {
        let unrefined = closed(c);
        unrefined.is_finite().then(|| SubstitutionRoot {
            lambda: cubic.refine(unrefined),
            unrefined,
            branch,
        })
    };
    let first = if principal != ZERO {
        accept(principal, RootBranch::Principal)
    } else {
        None
    };
    if let Some(r) = first {
        if cubic.residual(r.lambda) <= 1e-12 {
            return r;
        }
    }
    let second = if alternate != ZERO {
        accept(alternate, RootBranch::AlternateSqrt)
    } else {
        None
    };
    match (first, second) {
        (Some(a), Some(b)) => {
            if cubic.residual(b.lambda) < cubic.residual(a.lambda) {
                b
            } else {
                a
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => SubstitutionRoot {
            lambda: cubic.refine(triple_root),
            unrefined: triple_root,
            branch: RootBranch::TripleRoot,
        },
    }
}

/// Root of `l^3 - mu l^2 + (a1 + mu a2) l - mu beta = 0` from
/// `l = -(1/3)(-mu + A + D0 / A)` with `D0 = mu^2 - 3 mu a2 - 3 a1`,
/// `D1 = -2 mu^3 + 9 mu^2 a2 + mu (9 a1 - 27 beta)` and `A` the principal
/// cube root of `(D1 + sqrt(D1^2 - 4 D0^3)) / 2`.
pub fn cardano_lambda_sum(mu: Complex64, params: &ConstraintParams) -> SubstitutionRoot {
    let (a1, a2, b) = (params.alpha1, params.alpha2, params.beta);
    let d0 = mu * mu - 3.0 * mu * a2 - 3.0 * a1;
    let d1 = -2.0 * mu.powi(3) + 9.0 * mu * mu * a2 + mu * (9.0 * a1 - 27.0 * b);
    cardano_select(sum_cubic(mu, params), d0, d1, mu / 3.0, |a| {
        -(-mu + a + d0 / a) / 3.0
    })
}

/// Root of `l^3 - (a1 + mu a2) l^2 + mu l - mu beta = 0` from
/// `l = -(1/3)(-a1 - mu a2 - w B - D00 / (w B))` with `w = (1 + sqrt(-3)) / 2`,
/// `D00 = mu^2 a2^2 + mu (2 a1 a2 - 3) + a1^2`,
/// `D10 = -2 (a1 + mu a2)^3 + mu (9 a1 - 27 beta + 9 mu a2)` and `B` the
/// principal cube root of `(D10 + sqrt(D10^2 - 4 D00^3)) / 2`.
pub fn cardano_lambda_prod(mu: Complex64, params: &ConstraintParams) -> SubstitutionRoot {
    let (a1, a2, b) = (params.alpha1, params.alpha2, params.beta);
    let w = Complex64::new(1.0, 3f64.sqrt()) / 2.0;
    let s = a1 + mu * a2;
    let d00 = mu * mu * a2 * a2 + mu * (2.0 * a1 * a2 - 3.0) + a1 * a1;
    let d10 = -2.0 * s.powi(3) + mu * (9.0 * a1 - 27.0 * b + 9.0 * mu * a2);
    cardano_select(prod_cubic(mu, params), d00, d10, s / 3.0, |bb| {
        -(-s - w * bb - (2.0 / (2.0 * w)) * d00 / bb) / 3.0
    })
}

/// `l = (mu + sqrt(mu^2 - 4 mu alpha)) / 2`, principal square root.
pub fn quadratic_lambda(mu: Complex64, alpha: Complex64) -> Complex64 {
    (mu + (mu * mu - 4.0 * mu * alpha).sqrt()) / 2.0
}

/// `|l^2 - mu (l - alpha)| / max(1, |mu|^2)`.
pub fn quadratic_residual(lambda: Complex64, mu: Complex64, alpha: Complex64) -> f64 {
    (lambda * lambda - mu * (lambda - alpha)).norm() / mu.norm_sqr().max(1.0)
}

fn pair_precheck(
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    alpha: Complex64,
    tol: &Tolerances,
) -> Result<(), IdentityError> {
    x1.check_same_dim(x2)?;
    let residual = instances::alpha_pair_residual(x1, x2, alpha);
    if !(residual <= tol.residual_tol) {
        return Err(IdentityError::Precondition {
            what: "x1 x2 = alpha (x1 + x2)",
            residual,
        });
    }
    Ok(())
}

/// `(l - x1)(l - x2) = (l - alpha)(l^2 / (l - alpha) - (x1 + x2))` for a pair
/// with `x1 x2 = alpha (x1 + x2)`, `l != alpha`.
pub fn pair_factor_identity(
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    alpha: Complex64,
    lambda: Complex64,
    tol: &Tolerances,
) -> Result<f64, IdentityError> {
    pair_precheck(x1, x2, alpha, tol)?;
    let d = lambda - alpha;
    if d == ZERO {
        return Err(IdentityError::Precondition {
            what: "lambda != alpha",
            residual: 0.0,
        });
    }
    let f1 = x1.scalar_minus(lambda);
    let f2 = x2.scalar_minus(lambda);
    let lhs = &f1 * &f2;
    let rhs = (x1 + x2).scalar_minus(lambda * lambda / d).scale(d);
    Ok(lhs.dist(&rhs) / (f1.fro_norm() * f2.fro_norm()).max(1.0))
}

fn one_minus_xxd(x: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
    (x * d).scalar_minus(ONE)
}

/// The displayed expression for `(x1 + x2)^d` of a pair with
/// `x1 x2 = alpha (x1 + x2)`, evaluated term by term:
///
/// ```text
///   sum_{n=1}^{i(x2)} (1 - x2 x2^d) x2^(n-1) (x1^d)^n
/// + sum_{n=1}^{i(x1)} (x2^d)^n x1^(n-1) (1 - x1 x1^d)
/// - 2 alpha ( sum_{n=1}^{i(x2)} (1 - x2 x2^d) x2^(n-1) (x1^d)^(n+1)
///           + sum_{n=1}^{i(x1)} (x2^d)^(n+1) x1^(n-1) (1 - x1 x1^d) )
/// ```
///
/// This is not asserted to be the Drazin inverse of the sum. It agrees with
/// it for `alpha = 0`; for `alpha != 0` the harness records the comparison.
pub fn thm41_sum_formula(
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    alpha: Complex64,
    d1: &DrazinResult,
    d2: &DrazinResult,
    tol: &Tolerances,
) -> Result<ComplexMatrix, IdentityError> {
    pair_precheck(x1, x2, alpha, tol)?;
    let n = x1.n();
    d1.inverse.check_same_dim(x1)?;
    d2.inverse.check_same_dim(x2)?;
    let (y1, y2) = (&d1.inverse, &d2.inverse);
    let pi2 = one_minus_xxd(x2, y2);
    let pi1 = one_minus_xxd(x1, y1);

    let mut s1 = ComplexMatrix::zeros(n);
    let mut s3 = ComplexMatrix::zeros(n);
    let mut x2_pow = ComplexMatrix::identity(n);
    let mut y1_pow = y1.clone();
    for _ in 1..=d2.index {
        let head = &pi2 * &x2_pow;
        s1 = s1 + &head * &y1_pow;
        let y1_next = &y1_pow * y1;
        s3 = s3 + &head * &y1_next;
        y1_pow = y1_next;
        x2_pow = &x2_pow * x2;
    }

    let mut s2 = ComplexMatrix::zeros(n);
    let mut s4 = ComplexMatrix::zeros(n);
    let mut x1_pow = ComplexMatrix::identity(n);
    let mut y2_pow = y2.clone();
    for _ in 1..=d1.index {
        let tail = &x1_pow * &pi1;
        s2 = s2 + &y2_pow * &tail;
        let y2_next = &y2_pow * y2;
        s4 = s4 + &y2_next * &tail;
        y2_pow = y2_next;
        x1_pow = &x1_pow * x1;
    }

    Ok(&(s1 + s2) - &(s3 + s4).scale(2.0 * alpha))
}

/// Candidate for `x2^d` from `s = x1 + x2` and `s^d`:
/// `s^d - (s^d)^2 x1` when `alpha = 0`, `(1 / alpha) s^d x1` otherwise.
pub fn thm41_recover(
    x1: &ComplexMatrix,
    s: &ComplexMatrix,
    alpha: Complex64,
    ds: &DrazinResult,
) -> Result<ComplexMatrix, IdentityError> {
    x1.check_same_dim(s)?;
    ds.inverse.check_same_dim(s)?;
    let sd = &ds.inverse;
    Ok(if alpha == ZERO {
        sd - &(&(sd * sd) * x1)
    } else {
        (sd * x1).scale(alpha.inv())
    })
}

/// Scaled residuals of the four blocks of
/// `X = 1 - pq + sum_{i=2}^m ((pq)^(i-1) p - (pq)^i)` relative to `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockResiduals {
    /// `(1 - p) X p`, which must vanish.
    pub lower_left: f64,
    /// `(1 - p) X (1 - p) - (1 - p)`.
    pub lower_right: f64,
    /// `p X p - (p - (pqp)^m)`.
    pub upper_left: f64,
    /// `p X (1 - p) + sum_{i=1}^m (pqp)^(i-1) pq (1 - p)`.
    pub upper_right: f64,
}

impl BlockResiduals {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.lower_left,
            self.lower_right,
            self.upper_left,
            self.upper_right,
        ]
    }
}

fn check_idempotent(
    p: &ComplexMatrix,
    what: &'static str,
    tol: &Tolerances,
) -> Result<(), IdentityError> {
    let residual = (p * p).dist(p) / p.fro_norm().powi(2).max(1.0);
    if !(residual <= tol.residual_tol) {
        return Err(IdentityError::Precondition { what, residual });
    }
    Ok(())
}

fn check_m(m: usize) -> Result<(), IdentityError> {
    if m == 0 {
        return Err(IdentityError::InvalidArgument(
            "m must be at least 1".into(),
        ));
    }
    Ok(())
}

pub fn cor32_block_invariant(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    m: usize,
    tol: &Tolerances,
) -> Result<BlockResiduals, IdentityError> {
    p.check_same_dim(q)?;
    check_m(m)?;
    check_idempotent(p, "p idempotent", tol)?;
    check_idempotent(q, "q idempotent", tol)?;
    let n = p.n();
    let pq = p * q;
    let mut x = pq.scalar_minus(ONE);
    let mut pq_pow = pq.clone();
    for _ in 2..=m {
        let next = &pq_pow * &pq;
        x = &x + &(&(&pq_pow * p) - &next);
        pq_pow = next;
    }
    let cp = p.scalar_minus(ONE);
    let pqp = &pq * p;
    let q2 = &pq * &cp;
    let mut ur = ComplexMatrix::zeros(n);
    let mut pqp_pow = ComplexMatrix::identity(n);
    for _ in 1..=m {
        ur = ur + &pqp_pow * &q2;
        pqp_pow = &pqp_pow * &pqp;
    }
    let scale = (cp.fro_norm().max(p.fro_norm()).powi(2) * x.fro_norm()).max(1.0);
    Ok(BlockResiduals {
        lower_left: (&(&cp * &x) * p).fro_norm() / scale,
        lower_right: (&(&cp * &x) * &cp).dist(&cp) / scale,
        upper_left: (&(p * &x) * p).dist(&(p - &pqp_pow)) / scale,
        upper_right: (&(&(p * &x) * &cp) + &ur).fro_norm() / scale,
    })
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(base: &[Complex64], k: usize) -> Vec<Complex64> {
    (0..k).fold(vec![ONE], |acc, _| poly_mul(&acc, base))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Residuals of, with `s = p + q` and `c_k = (pq)_k + (qp)_k`,
/// `f1(s) = c_m` for `f1(a) = a (a - 1)^(m-1)`,
/// `f2(s) = sum_i C(m-1, i) c_(i+2)` for `f2(a) = a^m (a - 1)` and
/// `f3(s) = sum_i C(m-1, i) c_(m+1+i)` for `f3(a) = a^m (a - 1)^m`.
pub fn prop34_identities(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    m: usize,
    tol: &Tolerances,
) -> Result<[f64; 3], IdentityError> {
    p.check_same_dim(q)?;
    check_m(m)?;
    check_idempotent(p, "p idempotent", tol)?;
    check_idempotent(q, "q idempotent", tol)?;
    let s = p + q;
    let c = |k: usize| -> Result<ComplexMatrix, IdentityError> {
        Ok(alternating_product(p, q, k, Lead::P)? + alternating_product(p, q, k, Lead::Q)?)
    };
    let x = [ZERO, ONE];
    let xm1 = [-ONE, ONE];
    let f1 = poly_mul(&x, &poly_pow(&xm1, m - 1));
    let f2 = poly_mul(&poly_pow(&x, m), &xm1);
    let f3 = poly_mul(&poly_pow(&x, m), &poly_pow(&xm1, m));

    let mut rhs2 = ComplexMatrix::zeros(p.n());
    let mut rhs3 = ComplexMatrix::zeros(p.n());
    for i in 0..m {
        let w = Complex64::new(binomial(m - 1, i), 0.0);
        rhs2 = rhs2 + c(i + 2)?.scale(w);
        rhs3 = rhs3 + c(m + 1 + i)?.scale(w);
    }
    let snorm = s.fro_norm();
    let residual = |f: &[Complex64], rhs: &ComplexMatrix| -> Result<f64, IdentityError> {
        let scale = f
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm() * snorm.powi(i as i32))
            .sum::<f64>()
            .max(1.0);
        Ok(matcore::poly_eval(f, &s)?.dist(rhs) / scale)
    };
    Ok([
        residual(&f1, &c(m)?)?,
        residual(&f2, &rhs2)?,
        residual(&f3, &rhs3)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma33Report {
    pub roots: Vec<Complex64>,
    /// `sigma_min` of `f(x)` over `max(sigma_max, sum |f_i| |x|^i)`.
    pub f_sigma_ratio: f64,
    /// `sigma_min` of each `delta_k - x` over `max(sigma_max, |x| + |delta_k|)`.
    pub delta_sigma_ratios: Vec<f64>,
    pub f_invertible: bool,
    pub deltas_invertible: bool,
    pub equivalent: bool,
}

/// `sigma_min(m) / max(sigma_max(m), scale)`. The floor `scale` is the size
/// `m` would have without cancellation; it keeps a roundoff-sized `m` (a 1x1
/// one in particular) from looking well conditioned.
fn sigma_ratio(m: &ComplexMatrix, scale: f64) -> Result<f64, MatError> {
    let s = matcore::singular_values(m)?;
    let max = s[0].max(scale);
    Ok(if max == 0.0 {
        0.0
    } else {
        s[s.len() - 1] / max
    })
}

/// Compares invertibility of `f(x)` with that of every `delta - x` over the
/// roots `delta` of `f` (computed when `deltas` is `None`).
pub fn lemma33_invertibility_check(
    x: &ComplexMatrix,
    f: &[Complex64],
    deltas: Option<&[Complex64]>,
) -> Result<Lemma33Report, IdentityError> {
    let degree = f.iter().rposition(|c| *c != ZERO).unwrap_or(0);
    if degree == 0 {
        return Err(IdentityError::InvalidArgument(
            "f must be nonconstant".into(),
        ));
    }
    let roots = match deltas {
        Some(d) => d.to_vec(),
        None => matcore::poly_roots(f)?,
    };
    let xnorm = matcore::singular_values(x)?[0];
    let f_scale = f
        .iter()
        .zip(0..)
        .map(|(c, i)| c.norm() * xnorm.powi(i))
        .sum::<f64>();
    let f_sigma_ratio = sigma_ratio(&matcore::poly_eval(f, x)?, f_scale)?;
    let delta_sigma_ratios = roots
        .iter()
        .map(|&d| sigma_ratio(&x.scalar_minus(d), xnorm + d.norm()))
        .collect::<Result<Vec<_>, _>>()?;
    let f_invertible = f_sigma_ratio > INVERTIBILITY_RTOL;
    let deltas_invertible = delta_sigma_ratios.iter().all(|&r| r > INVERTIBILITY_RTOL);
    Ok(Lemma33Report {
        roots,
        f_sigma_ratio,
        delta_sigma_ratios,
        f_invertible,
        deltas_invertible,
        equivalent: f_invertible == deltas_invertible,
    })
}

/// Coefficients (ascending) of the monic polynomial with the given roots.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    roots
        .iter()
        .fold(vec![ONE], |acc, &r| poly_mul(&acc, &[-r, ONE]))
}

/// Drazin data for the three members and the sum (sum form) or pairwise sum
/// (product form), plus the resolvent identity at eight admissible spectral
/// parameters drawn from `seed`.
pub fn equivalence_audit(
    triple: &Triple,
    params: &ConstraintParams,
    form: ConstraintForm,
    tol: &Tolerances,
    seed: u64,
) -> TrialRecord {
    let start = Instant::now();
    let id = match form {
        ConstraintForm::Sum => IdentityId::Eq5,
        ConstraintForm::Product => IdentityId::Eq8,
    };
    let mut rec = TrialRecord::new(id, seed, triple.n(), params.clone());
    if let Err(e) = audit_into(&mut rec, triple, params, form, tol, seed) {
        rec.verdict = match e {
            IdentityError::Precondition { .. } => Verdict::PreconditionViolation,
            _ => Verdict::Fail,
        };
        rec.error = Some(e.to_string());
    }
    rec.wall_time = start.elapsed().as_secs_f64() * 1e3;
    rec
}

const MEMBER_NAMES: [&str; 4] = ["x1", "x2", "x3", "e"];

fn audit_into(
    rec: &mut TrialRecord,
    triple: &Triple,
    params: &ConstraintParams,
    form: ConstraintForm,
    tol: &Tolerances,
    seed: u64,
) -> Result<(), IdentityError> {
    precheck(triple, params, form, tol)?;
    let fourth = match form {
        ConstraintForm::Sum => triple.sum(),
        ConstraintForm::Product => triple.pairwise(),
    };
    let [a, b, c] = triple.members();
    let member_scale = match form {
        ConstraintForm::Sum => a.fro_norm() + b.fro_norm() + c.fro_norm(),
        ConstraintForm::Product => {
            a.fro_norm() * b.fro_norm() + b.fro_norm() * c.fro_norm() + a.fro_norm() * c.fro_norm()
        }
    };
    let mut data = Vec::with_capacity(4);
    for (k, (name, x)) in MEMBER_NAMES.iter().zip([a, b, c, &fourth]).enumerate() {
        let scale = if k == 3 { member_scale } else { 0.0 };
        let d = drazin::drazin_inverse_scaled(x, scale, tol)?;
        rec.observe(format!("index_{name}"), d.index as f64);
        rec.residuals.extend(d.residuals.to_vec());
        data.push(d);
    }
    let radius = lambda_radius(&data.iter().collect::<Vec<_>>(), tol)?;
    let mut rng = sampling::rng_from_seed(seed);
    for _ in 0..8 {
        let (lambda, r) = sample_admissible(&mut rng, radius, |l| {
            resolvent_product_identity(triple, params, l, form, tol)
        })?;
        rec.spectral_params.push(lambda);
        rec.residuals.push(r);
    }
    rec.verdict = Verdict::from_residuals(&rec.residuals, tol.residual_tol);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{triple_from_idempotents, triple_sum_form, RandomSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn p2() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])
    }

    fn q2() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]])
    }

    fn zero_triple(n: usize) -> Triple {
        Triple {
            x1: ComplexMatrix::zeros(n),
            x2: ComplexMatrix::zeros(n),
            x3: ComplexMatrix::zeros(n),
        }
    }

    fn scalar_triple() -> (Triple, ConstraintParams) {
        let params = ConstraintParams::triple(c(1.0, 0.0), ZERO, c(1.0, 0.0));
        let spec = RandomSpec::new(1, 1, 0);
        (
            triple_sum_form(&params, &[c(2.0, 0.0)], &spec, &tol(), false).unwrap(),
            params,
        )
    }

    fn idem_triple() -> (Triple, ConstraintParams) {
        let params = ConstraintParams::combo(vec![c(2.0, 0.0)], c(3.0, 0.0));
        let t = triple_from_idempotents(&p2(), &q2(), &params, &tol()).unwrap();
        (t, params.idempotent_triple_params())
    }

    #[test]
    fn cubic_identities_on_examples() {
        let z = zero_triple(2);
        let p0 = ConstraintParams::default();
        assert_eq!(
            cubic_identity_sum(&z, &p0, c(2.0, 0.0), &tol()).unwrap(),
            0.0
        );
        assert_eq!(
            cubic_identity_prod(&z, &p0, c(2.0, 0.0), &tol()).unwrap(),
            0.0
        );

        let (t, p) = scalar_triple();
        assert!(cubic_identity_sum(&t, &p, c(0.6, 0.8), &tol()).unwrap() < 1e-12);
        let (t, p) = idem_triple();
        assert!(cubic_identity_prod(&t, &p, c(0.3, -0.7), &tol()).unwrap() < 1e-12);
    }

    #[test]
    fn perturbed_triple_is_a_precondition_violation() {
        let (mut t, p) = scalar_triple();
        t.x1 = t.x1.add_scalar(c(0.1, 0.0));
        let err = cubic_identity_sum(&t, &p, c(1.0, 0.0), &tol()).unwrap_err();
        assert!(matches!(err, IdentityError::Precondition { residual, .. } if residual > 0.0));
    }

    #[test]
    fn resolvent_identities_on_examples() {
        let (t, p) = scalar_triple();
        assert!(
            resolvent_product_identity(&t, &p, c(0.01, 0.0), ConstraintForm::Sum, &tol()).unwrap()
                < 1e-8
        );
        let (t, p) = idem_triple();
        let r = resolvent_product_identity(&t, &p, c(0.01, 0.01), ConstraintForm::Product, &tol())
            .unwrap();
        assert!(r < 1e-8);
        let (x1, x2) = (
            ComplexMatrix::from_real_rows(&[&[3.0]]),
            ComplexMatrix::from_real_rows(&[&[1.5]]),
        );
        let (t, p) = instances::triple_from_pair(&x1, &x2, ONE);
        assert!(
            resolvent_product_identity(&t, &p, c(0.05, 0.02), ConstraintForm::Sum, &tol()).unwrap()
                < 1e-8
        );
        assert!(matches!(
            resolvent_product_identity(&t, &p, ZERO, ConstraintForm::Sum, &tol()),
            Err(IdentityError::NotAdmissible(_))
        ));
    }

    #[test]
    fn cardano_sum_examples() {
        let p0 = ConstraintParams::default();
        let r = cardano_lambda_sum(c(2.0, 0.0), &p0);
        assert!(cubic_residual_sum(r.lambda, c(2.0, 0.0), &p0) < 1e-12);
        // Principal cube root of -8 is 1 + i sqrt 3, which lands on the double root 0.
        assert!(r.lambda.norm() < 1e-12 || (r.lambda - c(2.0, 0.0)).norm() < 1e-12);

        let p = ConstraintParams::triple(ONE, ZERO, c(0.7, -0.2));
        let r = cardano_lambda_sum(ZERO, &p);
        assert!([ZERO, c(0.0, 1.0), c(0.0, -1.0)]
            .iter()
            .any(|z| (z - r.lambda).norm() < 1e-12));
    }

    #[test]
    fn cardano_prod_examples() {
        let p0 = ConstraintParams::default();
        let r = cardano_lambda_prod(ZERO, &p0);
        assert_eq!(r.lambda, ZERO);
        assert!(r.is_degenerate());

        let p = ConstraintParams::triple(c(2.0, 0.0), ZERO, ZERO);
        let r = cardano_lambda_prod(ONE, &p);
        assert!(r.lambda.norm() < 1e-8 || (r.lambda - ONE).norm() < 1e-7);
        assert!(cubic_residual_prod(r.lambda, ONE, &p) < 1e-12);
    }

    #[test]
    fn cardano_random_draws() {
        let mut rng = sampling::rng_from_seed(5);
        for _ in 0..2000 {
            let mu = sampling::disc_point(&mut rng);
            let p = ConstraintParams::triple(
                sampling::disc_point(&mut rng),
                sampling::disc_point(&mut rng),
                sampling::disc_point(&mut rng),
            );
            let r = cardano_lambda_sum(mu, &p);
            assert!(cubic_residual_sum(r.lambda, mu, &p) <= 1e-10);
            let r = cardano_lambda_prod(mu, &p);
            assert!(cubic_residual_prod(r.lambda, mu, &p) <= 1e-10);
        }
    }

    #[test]
    fn quadratic_examples() {
        let a = c(0.4, -0.3);
        let l = quadratic_lambda(4.0 * a, a);
        assert!((l - 2.0 * a).norm() < 1e-15);
        assert_eq!(quadratic_lambda(c(0.3, 0.0), ZERO), c(0.3, 0.0));
        let mut rng = sampling::rng_from_seed(8);
        for _ in 0..1000 {
            let (mu, al) = (
                sampling::complex_normal(&mut rng) * 3.0,
                sampling::complex_normal(&mut rng),
            );
            assert!(quadratic_residual(quadratic_lambda(mu, al), mu, al) <= 1e-12);
        }
    }

    #[test]
    fn pair_factor_examples() {
        let x1 = p2();
        let x2 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(pair_factor_identity(&x1, &x2, ZERO, c(0.5, 0.0), &tol()).unwrap() < 1e-12);
        let (y1, y2) = (
            ComplexMatrix::from_real_rows(&[&[3.0]]),
            ComplexMatrix::from_real_rows(&[&[1.5]]),
        );
        assert!(pair_factor_identity(&y1, &y2, ONE, c(3.0, 0.0), &tol()).unwrap() < 1e-12);
        let z = ComplexMatrix::zeros(2);
        assert_eq!(
            pair_factor_identity(&z, &z, ZERO, ONE, &tol()).unwrap(),
            0.0
        );
        assert!(matches!(
            pair_factor_identity(&y1, &y2, ONE, ONE, &tol()),
            Err(IdentityError::Precondition { .. })
        ));
    }

    #[test]
    fn sum_formula_examples() {
        let x1 = p2();
        let x2 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let d1 = drazin::drazin_inverse(&x1, &tol()).unwrap();
        let d2 = drazin::drazin_inverse(&x2, &tol()).unwrap();
        let f = thm41_sum_formula(&x1, &x2, ZERO, &d1, &d2, &tol()).unwrap();
        assert!(f.dist(&ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[1.0, 0.0]])) < 1e-12);

        let z = ComplexMatrix::zeros(2);
        let dz = drazin::drazin_inverse(&z, &tol()).unwrap();
        let f = thm41_sum_formula(&x1, &z, ZERO, &d1, &dz, &tol()).unwrap();
        assert!(f.dist(&d1.inverse) < 1e-12);

        let (y1, y2) = (
            ComplexMatrix::from_real_rows(&[&[3.0]]),
            ComplexMatrix::from_real_rows(&[&[1.5]]),
        );
        let e1 = drazin::drazin_inverse(&y1, &tol()).unwrap();
        let e2 = drazin::drazin_inverse(&y2, &tol()).unwrap();
        let f = thm41_sum_formula(&y1, &y2, ONE, &e1, &e2, &tol()).unwrap();
        assert!(f.fro_norm() < 1e-15);
        let es = drazin::drazin_inverse(&(&y1 + &y2), &tol()).unwrap();
        assert!((es.inverse.get(0, 0) - c(2.0 / 9.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn recover_examples() {
        let (y1, s) = (
            ComplexMatrix::from_real_rows(&[&[3.0]]),
            ComplexMatrix::from_real_rows(&[&[4.5]]),
        );
        let ds = drazin::drazin_inverse(&s, &tol()).unwrap();
        let r = thm41_recover(&y1, &s, ONE, &ds).unwrap();
        assert!((r.get(0, 0) - c(2.0 / 3.0, 0.0)).norm() < 1e-14);

        let x1 = p2();
        let s = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let ds = drazin::drazin_inverse(&s, &tol()).unwrap();
        assert!(thm41_recover(&x1, &s, ZERO, &ds).unwrap().fro_norm() < 1e-12);

        let r = thm41_recover(&ComplexMatrix::zeros(2), &s, ZERO, &ds).unwrap();
        assert!(r.dist(&ds.inverse) < 1e-15);
    }

    #[test]
    fn block_invariant_examples() {
        for m in 1..=6 {
            let r = cor32_block_invariant(&p2(), &p2(), m, &tol()).unwrap();
            assert!(r.to_vec().iter().all(|&v| v < 1e-14));
            let r = cor32_block_invariant(&p2(), &ComplexMatrix::zeros(2), m, &tol()).unwrap();
            assert!(r.to_vec().iter().all(|&v| v < 1e-14));
            let r = cor32_block_invariant(&p2(), &q2(), m, &tol()).unwrap();
            assert!(r.to_vec().iter().all(|&v| v < 1e-14));
        }
        let spec = RandomSpec::new(4, 4, 2).with_cond_bound(10.0);
        let p = instances::random_idempotent(&spec, &tol()).unwrap();
        let q =
            instances::random_idempotent(&RandomSpec::new(5, 4, 3).with_cond_bound(10.0), &tol())
                .unwrap();
        let r = cor32_block_invariant(&p, &q, 3, &tol()).unwrap();
        assert!(r.to_vec().iter().all(|&v| v < 1e-10), "{r:?}");
    }

    #[test]
    fn prop34_examples() {
        let spec = RandomSpec::new(21, 3, 1).with_cond_bound(10.0);
        let p = instances::random_idempotent(&spec, &tol()).unwrap();
        let q =
            instances::random_idempotent(&RandomSpec::new(22, 3, 2).with_cond_bound(10.0), &tol())
                .unwrap();
        let [a, b, _] = prop34_identities(&p, &q, 1, &tol()).unwrap();
        assert!(a < 1e-14 && b < 1e-13);
        for m in 1..=5 {
            assert!(prop34_identities(&p2(), &q2(), m, &tol())
                .unwrap()
                .iter()
                .all(|&r| r < 1e-12));
            assert!(prop34_identities(&p, &q, m, &tol())
                .unwrap()
                .iter()
                .all(|&r| r < 1e-10));
        }
    }

    #[test]
    fn lemma33_examples() {
        let x = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]]);
        assert!(
            lemma33_invertibility_check(&x, &[ZERO, ONE], None)
                .unwrap()
                .equivalent
        );
        let r = lemma33_invertibility_check(&p2(), &[ZERO, -ONE, ONE], None).unwrap();
        assert!(r.equivalent && !r.f_invertible && !r.deltas_invertible);
        let r = lemma33_invertibility_check(&p2(), &[c(-2.0, 0.0), ONE], None).unwrap();
        assert!(r.equivalent && r.f_invertible);
        assert!(lemma33_invertibility_check(&x, &[ONE], None).is_err());
    }

    #[test]
    fn audit_examples() {
        let (t, p) = idem_triple();
        let rec = equivalence_audit(&t, &p, ConstraintForm::Product, &tol(), 3);
        assert_eq!(rec.verdict, Verdict::Pass, "{rec:?}");

        let (t, p) = scalar_triple();
        let rec = equivalence_audit(&t, &p, ConstraintForm::Sum, &tol(), 3);
        assert_eq!(rec.verdict, Verdict::Pass, "{rec:?}");
        for name in ["index_x1", "index_x2", "index_x3"] {
            assert_eq!(rec.observations[name], 0.0);
        }

        let rec = equivalence_audit(
            &zero_triple(3),
            &ConstraintParams::default(),
            ConstraintForm::Sum,
            &tol(),
            3,
        );
        assert_eq!(rec.verdict, Verdict::Pass, "{rec:?}");
        for name in ["index_x1", "index_x2", "index_x3"] {
            assert_eq!(rec.observations[name], 1.0);
        }
        assert_eq!(rec.spectral_params.len(), 8);
    }
}
