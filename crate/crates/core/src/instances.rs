//! Generators for matrices that satisfy the side conditions of each audited
//! identity: idempotents, pairs with `x1 x2 = alpha (x1 + x2)`, constrained
//! triples in sum and product form, and combinations of two idempotents.
//!
//! Every generator checks its own output and reports a construction error
//! instead of handing back an instance that misses its constraint.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubic;
use crate::matcore::{self, ComplexMatrix, MatError, Tolerances};
use crate::sampling::{self, SeededRng};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MAX_RETRIES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("invalid random spec: {0}")]
    InvalidSpec(String),
    #[error("parameters (alpha1, alpha2, beta) = ({0}, {1}, {2}) lie in the excluded set")]
    ExcludedParameters(Complex64, Complex64, Complex64),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("construction produced residual {residual:e} for {what}")]
    Construction { what: &'static str, residual: f64 },
    #[error("gave up after {0} attempts to draw a well-conditioned instance")]
    RetriesExhausted(usize),
}

/// Scalar parameters tied to the hypotheses of each identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintParams {
    pub alpha: Complex64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta: Complex64,
    pub lambdas: Vec<Complex64>,
    pub gamma1: Complex64,
    pub m: usize,
}

impl Default for ConstraintParams {
    fn default() -> Self {
        Self {
            alpha: ZERO,
            alpha1: ZERO,
            alpha2: ZERO,
            beta: ZERO,
            lambdas: vec![ONE],
            gamma1: ONE,
            m: 1,
        }
    }
}

impl ConstraintParams {
    pub fn triple(alpha1: Complex64, alpha2: Complex64, beta: Complex64) -> Self {
        Self {
            alpha1,
            alpha2,
            beta,
            ..Self::default()
        }
    }

    pub fn combo(lambdas: Vec<Complex64>, gamma1: Complex64) -> Self {
        Self {
            m: lambdas.len(),
            lambdas,
            gamma1,
            ..Self::default()
        }
    }

    /// Membership in `{(a1, a2, 0) : a1 a2 != 0} U {(a1, 0, 0) : a1 != 0}`,
    /// which simplifies to `beta = 0, alpha1 != 0`.
    pub fn in_excluded_set(&self) -> bool {
        let a1a2 = self.alpha1 * self.alpha2;
        self.beta == ZERO && (a1a2 != ZERO || (self.alpha1 != ZERO && self.alpha2 == ZERO))
    }

    /// The product-form parameters every idempotent-derived triple satisfies.
    pub fn idempotent_triple_params(&self) -> Self {
        Self {
            alpha1: self.gamma1,
            alpha2: self.gamma1.inv(),
            beta: ZERO,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub n: usize,
    /// Target rank for idempotents; for pairs and structured matrices, the
    /// size of the regular block.
    pub rank_r: usize,
    pub cond_bound: f64,
}

impl RandomSpec {
    pub fn new(seed: u64, n: usize, rank_r: usize) -> Self {
        Self {
            seed,
            n,
            rank_r,
            cond_bound: 100.0,
        }
    }

    pub fn with_cond_bound(mut self, cond_bound: f64) -> Self {
        self.cond_bound = cond_bound;
        self
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.n == 0 {
            return Err(InstanceError::InvalidSpec("n must be >= 1".into()));
        }
        if self.rank_r > self.n {
            return Err(InstanceError::InvalidSpec(format!(
                "rank {} exceeds n = {}",
                self.rank_r, self.n
            )));
        }
        if !(self.cond_bound >= 1.0) || !self.cond_bound.is_finite() {
            return Err(InstanceError::InvalidSpec(
                "cond_bound must be a finite value >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn rng(&self) -> SeededRng {
        sampling::rng_from_seed(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintForm {
    /// `e2 = a1 + a2 e1`, `e3 = beta e1`.
    Sum,
    /// `e1 = a1 + a2 e2`, `e3 = beta e2`.
    Product,
}

/// Ordered triple `(x1, x2, x3)`; products are always taken in this order.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub x1: ComplexMatrix,
    pub x2: ComplexMatrix,
    pub x3: ComplexMatrix,
}

impl Triple {
    pub fn n(&self) -> usize {
        self.x1.n()
    }

    pub fn members(&self) -> [&ComplexMatrix; 3] {
        [&self.x1, &self.x2, &self.x3]
    }

    /// `x1 + x2 + x3`.
    pub fn sum(&self) -> ComplexMatrix {
        &(&self.x1 + &self.x2) + &self.x3
    }

    /// `x1 x2 + x1 x3 + x2 x3`.
    pub fn pairwise(&self) -> ComplexMatrix {
        &(&(&self.x1 * &self.x2) + &(&self.x1 * &self.x3)) + &(&self.x2 * &self.x3)
    }

    /// `x1 x2 x3`.
    pub fn product(&self) -> ComplexMatrix {
        &(&self.x1 * &self.x2) * &self.x3
    }

    pub(crate) fn check_dims(&self) -> Result<(), MatError> {
        self.x1.check_same_dim(&self.x2)?;
        self.x1.check_same_dim(&self.x3)
    }
}

fn idempotency_residual(p: &ComplexMatrix) -> f64 {
    (p * p).dist(p) / p.fro_norm().max(1.0)
}

/// `p = S diag(I_r, 0) S^-1` with `cond(S) <= cond_bound`.
pub fn random_idempotent(
    spec: &RandomSpec,
    tol: &Tolerances,
) -> Result<ComplexMatrix, InstanceError> {
    spec.validate()?;
    let n = spec.n;
    if spec.rank_r == 0 {
        return Ok(ComplexMatrix::zeros(n));
    }
    if spec.rank_r == n {
        return Ok(ComplexMatrix::identity(n));
    }
    let mut rng = spec.rng();
    idempotent_from_rng(&mut rng, n, spec.rank_r, spec.cond_bound, tol)
}

pub(crate) fn idempotent_from_rng(
    rng: &mut SeededRng,
    n: usize,
    rank: usize,
    cond_bound: f64,
    tol: &Tolerances,
) -> Result<ComplexMatrix, InstanceError> {
    if rank == 0 {
        return Ok(ComplexMatrix::zeros(n));
    }
    if rank == n {
        return Ok(ComplexMatrix::identity(n));
    }
    let (s, sinv) = sampling::similarity(rng, n, cond_bound);
    let diag: Vec<Complex64> = (0..n).map(|i| if i < rank { ONE } else { ZERO }).collect();
    let p = &(&s * &ComplexMatrix::from_diagonal(&diag)) * &sinv;
    let residual = (&p * &p).dist(&p);
    if residual > tol.residual_tol * p.fro_norm() {
        return Err(InstanceError::Construction {
            what: "idempotent",
            residual,
        });
    }
    Ok(p)
}

/// A matrix with a regular block of size `spec.rank_r` and a nilpotent
/// part split into Jordan blocks of size at most `max_block`, conjugated by a
/// random similarity. Returns the matrix and its Drazin index by
/// construction.
pub fn random_jordan_structured(
    spec: &RandomSpec,
    max_block: usize,
) -> Result<(ComplexMatrix, usize), InstanceError> {
    spec.validate()?;
    let mut rng = spec.rng();
    let blocks = sampling::partition(&mut rng, spec.n - spec.rank_r, max_block);
    let core = sampling::regular_plus_nilpotent(&mut rng, spec.rank_r, &blocks);
    let (s, sinv) = sampling::similarity(&mut rng, spec.n, spec.cond_bound);
    let index = blocks.iter().copied().max().unwrap_or(0);
    Ok((&(&s * &core) * &sinv, index))
}

/// Pair with `x1 x2 = 0`. In a common basis `S`,
/// `x1 = S [[A, 0], [0, 0]] S^-1` and `x2 = S [[0, 0], [C, D]] S^-1` where
/// `A` is `rank_r x rank_r`; both `A` and `D` may carry nilpotent Jordan
/// blocks, so either factor can have index above one. `x2 x1 = S [[0, 0],
/// [C A, 0]] S^-1` is generically nonzero.
pub fn pair_zero_product(
    spec: &RandomSpec,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, ComplexMatrix), InstanceError> {
    spec.validate()?;
    let n = spec.n;
    let r = spec.rank_r;
    if r == n {
        return Err(InstanceError::InvalidSpec(
            "rank_r = n leaves no null space for x2; use rank_r < n".into(),
        ));
    }
    let mut rng = spec.rng();
    let mut x1b = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    let mut x2b = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    if r > 0 {
        let a = structured_block(&mut rng, r);
        x1b.view_mut((0, 0), (r, r)).copy_from(a.as_dmatrix());
    }
    let d = structured_block(&mut rng, n - r);
    for i in r..n {
        for j in 0..r {
            x2b[(i, j)] = sampling::complex_normal(&mut rng) * 0.5;
        }
    }
    x2b.view_mut((r, r), (n - r, n - r))
        .copy_from(d.as_dmatrix());
    let (s, sinv) = sampling::similarity(&mut rng, n, spec.cond_bound.sqrt());
    let x1 = &(&s * &ComplexMatrix::wrap(x1b)) * &sinv;
    let x2 = &(&s * &ComplexMatrix::wrap(x2b)) * &sinv;
    let residual = (&x1 * &x2).fro_norm();
    if residual > tol.residual_tol * (x1.fro_norm() * x2.fro_norm()).max(1.0) {
        return Err(InstanceError::Construction {
            what: "zero-product pair",
            residual,
        });
    }
    Ok((x1, x2))
}

/// Square block whose nilpotent part (possibly empty) has Jordan blocks of
/// size at most 3. `size` must be positive.
fn structured_block(rng: &mut SeededRng, size: usize) -> ComplexMatrix {
    let nil = rng.random_range(0..=size);
    let blocks = sampling::partition(rng, nil, 3);
    sampling::regular_plus_nilpotent(rng, size - nil, &blocks)
}

/// `x1 = alpha + u`, `x2 = alpha + alpha^2 u^-1`, which satisfy
/// `x1 x2 = alpha (x1 + x2)` for any invertible `u`.
pub fn alpha_pair_from(
    u: &ComplexMatrix,
    alpha: Complex64,
) -> Result<(ComplexMatrix, ComplexMatrix), InstanceError> {
    if alpha == ZERO {
        return Err(InstanceError::InvalidParameters(
            "alpha must be nonzero".into(),
        ));
    }
    let uinv = u.try_inverse()?;
    Ok((
        u.add_scalar(alpha),
        uinv.scale(alpha * alpha).add_scalar(alpha),
    ))
}

/// Residual of `x1 x2 = alpha (x1 + x2)`, scaled by `max(1, |x1| |x2|)`.
pub fn alpha_pair_residual(x1: &ComplexMatrix, x2: &ComplexMatrix, alpha: Complex64) -> f64 {
    let lhs = x1 * x2;
    let rhs = (x1 + x2).scale(alpha);
    lhs.dist(&rhs) / (x1.fro_norm() * x2.fro_norm()).max(1.0)
}

/// Pair with `x1 x2 = alpha (x1 + x2)`, `alpha != 0`. The invertible `u`
/// carries Jordan blocks at `-alpha` on its last `n - rank_r` coordinates, so
/// both `x1` and `x2` are singular there.
pub fn pair_alpha_product(
    spec: &RandomSpec,
    alpha: Complex64,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, ComplexMatrix), InstanceError> {
    spec.validate()?;
    if alpha == ZERO {
        return Err(InstanceError::InvalidParameters(
            "alpha must be nonzero".into(),
        ));
    }
    let n = spec.n;
    let mut rng = spec.rng();
    let a = alpha.norm();
    for _ in 0..MAX_RETRIES {
        let diag: Vec<Complex64> = (0..spec.rank_r)
            .map(|_| loop {
                let d = sampling::annulus_point(&mut rng, 0.5 * a, 2.0 * a);
                if (d + alpha).norm() >= 0.3 * a {
                    break d;
                }
            })
            .collect();
        let blocks = sampling::partition(&mut rng, n - spec.rank_r, 3);
        let mut parts = Vec::new();
        if !diag.is_empty() {
            parts.push(sampling::upper_with_diagonal(&mut rng, &diag, 0.3 * a));
        }
        if !blocks.is_empty() {
            parts.push(
                sampling::jordan_nilpotent(&blocks)
                    .scale(Complex64::new(a, 0.0))
                    .add_scalar(-alpha),
            );
        }
        let core = ComplexMatrix::block_diag(&parts);
        let (s, sinv) = sampling::similarity(&mut rng, n, spec.cond_bound.sqrt());
        let sv = matcore::singular_values(&(&(&s * &core) * &sinv))?;
        if sv[n - 1] == 0.0 || sv[0] / sv[n - 1] > spec.cond_bound {
            continue;
        }
        // Conjugating after the shift keeps the nilpotent parts exactly
        // nilpotent instead of leaving roundoff at -alpha + alpha.
        let Ok(core_inv) = core.try_inverse() else {
            continue;
        };
        let c1 = core.add_scalar(alpha);
        let c2 = (&c1 * &core_inv).scale(alpha);
        let x1 = &(&s * &c1) * &sinv;
        let x2 = &(&s * &c2) * &sinv;
        let residual = alpha_pair_residual(&x1, &x2, alpha);
        if residual > tol.residual_tol {
            return Err(InstanceError::Construction {
                what: "alpha pair",
                residual,
            });
        }
        return Ok((x1, x2));
    }
    Err(InstanceError::RetriesExhausted(MAX_RETRIES))
}

fn commuting_triple_from_slots(
    slots: Vec<[Complex64; 3]>,
    spec: &RandomSpec,
) -> Result<Triple, InstanceError> {
    let mut rng = spec.rng();
    let mut cols: [Vec<Complex64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for mut roots in slots {
        roots.shuffle(&mut rng);
        for (c, r) in cols.iter_mut().zip(roots) {
            c.push(r);
        }
    }
    let n = spec.n;
    let (s, sinv) = sampling::similarity(&mut rng, n, spec.cond_bound.sqrt());
    let conj = |d: &[Complex64]| &(&s * &ComplexMatrix::from_diagonal(d)) * &sinv;
    Ok(Triple {
        x1: conj(&cols[0]),
        x2: conj(&cols[1]),
        x3: conj(&cols[2]),
    })
}

fn check_slot_count(len: usize, spec: &RandomSpec) -> Result<(), InstanceError> {
    if len != spec.n {
        return Err(InstanceError::InvalidParameters(format!(
            "expected {} slot parameters, got {len}",
            spec.n
        )));
    }
    Ok(())
}

fn ensure_constraints(
    triple: &Triple,
    params: &ConstraintParams,
    form: ConstraintForm,
    tol: &Tolerances,
    what: &'static str,
) -> Result<(), InstanceError> {
    let (r1, r2) = verify_triple_constraints(triple, params, form)?;
    let residual = r1.max(r2);
    if !(residual <= tol.residual_tol) {
        return Err(InstanceError::Construction { what, residual });
    }
    Ok(())
}

/// Commuting triple for the sum-form hypotheses: in each diagonal slot the
/// three entries are the roots of `z^3 - t z^2 + (a1 + a2 t) z - beta t`.
/// Parameters in the excluded set are refused unless `audit_mode` is set.
pub fn triple_sum_form(
    params: &ConstraintParams,
    t_values: &[Complex64],
    spec: &RandomSpec,
    tol: &Tolerances,
    audit_mode: bool,
) -> Result<Triple, InstanceError> {
    spec.validate()?;
    if params.in_excluded_set() && !audit_mode {
        return Err(InstanceError::ExcludedParameters(
            params.alpha1,
            params.alpha2,
            params.beta,
        ));
    }
    check_slot_count(t_values.len(), spec)?;
    let slots = t_values
        .iter()
        .map(|&t| cubic::cubic_roots(-t, params.alpha1 + params.alpha2 * t, -params.beta * t))
        .collect();
    let triple = commuting_triple_from_slots(slots, spec)?;
    ensure_constraints(&triple, params, ConstraintForm::Sum, tol, "sum-form triple")?;
    Ok(triple)
}

/// Commuting triple for the product-form hypotheses: slot entries are the
/// roots of `z^3 - (a1 + a2 s) z^2 + s z - beta s`.
pub fn triple_prod_form(
    params: &ConstraintParams,
    s_values: &[Complex64],
    spec: &RandomSpec,
    tol: &Tolerances,
) -> Result<Triple, InstanceError> {
    spec.validate()?;
    check_slot_count(s_values.len(), spec)?;
    let slots = s_values
        .iter()
        .map(|&s| cubic::cubic_roots(-(params.alpha1 + params.alpha2 * s), s, -params.beta * s))
        .collect();
    let triple = commuting_triple_from_slots(slots, spec)?;
    ensure_constraints(
        &triple,
        params,
        ConstraintForm::Product,
        tol,
        "product-form triple",
    )?;
    Ok(triple)
}

/// Embeds a pair with `x1 x2 = alpha (x1 + x2)` as the sum-form triple
/// `(x1, x2, 0)` with parameters `(0, alpha, 0)`.
pub fn triple_from_pair(
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    alpha: Complex64,
) -> (Triple, ConstraintParams) {
    let triple = Triple {
        x1: x1.clone(),
        x2: x2.clone(),
        x3: ComplexMatrix::zeros(x1.n()),
    };
    let params = ConstraintParams {
        alpha,
        ..ConstraintParams::triple(ZERO, alpha, ZERO)
    };
    (triple, params)
}

fn ensure_idempotent(
    p: &ComplexMatrix,
    name: &'static str,
    tol: &Tolerances,
) -> Result<(), InstanceError> {
    let residual = idempotency_residual(p);
    if residual > tol.residual_tol {
        return Err(InstanceError::Construction {
            what: name,
            residual,
        });
    }
    Ok(())
}

/// `x1 = l1 (1 - p)`, `x2 = ` [`idempotent_combo`], `x3 = g1 (1 - q)`. The
/// triple satisfies the product-form hypotheses with `a1 = g1`,
/// `a2 = 1 / g1`, `beta = 0`, which is checked before returning.
pub fn triple_from_idempotents(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    params: &ConstraintParams,
    tol: &Tolerances,
) -> Result<Triple, InstanceError> {
    p.check_same_dim(q)?;
    ensure_idempotent(p, "idempotent p", tol)?;
    ensure_idempotent(q, "idempotent q", tol)?;
    let l1 = *params
        .lambdas
        .first()
        .ok_or_else(|| InstanceError::InvalidParameters("lambdas must be nonempty".into()))?;
    if l1 * params.gamma1 == ZERO {
        return Err(InstanceError::InvalidParameters(
            "lambda1 * gamma1 must be nonzero".into(),
        ));
    }
    let combo = idempotent_combo(p, q, params)?;
    let triple = Triple {
        x1: p.scalar_minus(ONE).scale(l1),
        x2: combo.element,
        x3: q.scalar_minus(ONE).scale(params.gamma1),
    };
    ensure_constraints(
        &triple,
        &params.idempotent_triple_params(),
        ConstraintForm::Product,
        tol,
        "idempotent-derived triple",
    )?;
    Ok(triple)
}

/// The two elements whose Drazin invertibility is equivalent.
#[derive(Debug, Clone, PartialEq)]
pub struct IdempotentCombo {
    /// `l1 p + g1 q - l1 pq + sum_{i>=2} l_i ((pq)^(i-1) p - (pq)^i)`.
    pub element: ComplexMatrix,
    /// `l1 - l1 pq + sum_{i>=2} l_i ((pq)^(i-1) p - (pq)^i)`.
    pub companion: ComplexMatrix,
}

pub fn idempotent_combo(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    params: &ConstraintParams,
) -> Result<IdempotentCombo, InstanceError> {
    p.check_same_dim(q)?;
    let (&l1, rest) = params
        .lambdas
        .split_first()
        .ok_or_else(|| InstanceError::InvalidParameters("lambdas must be nonempty".into()))?;
    let pq = p * q;
    let mut tail = ComplexMatrix::zeros(p.n());
    let mut pq_prev = pq.clone();
    for &li in rest {
        let lead = &pq_prev * p;
        let next = &pq_prev * &pq;
        tail = tail + (&lead - &next).scale(li);
        pq_prev = next;
    }
    let base = &tail - &pq.scale(l1);
    Ok(IdempotentCombo {
        element: &(&base + &p.scale(l1)) + &q.scale(params.gamma1),
        companion: base.add_scalar(l1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lead {
    P,
    Q,
}

/// Alternating word of length `k` in `p` and `q` starting with `lead`.
pub fn alternating_product(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    k: usize,
    lead: Lead,
) -> Result<ComplexMatrix, InstanceError> {
    p.check_same_dim(q)?;
    if k == 0 {
        return Err(InstanceError::InvalidParameters(
            "alternating product needs k >= 1".into(),
        ));
    }
    let (first, second) = match lead {
        Lead::P => (p, q),
        Lead::Q => (q, p),
    };
    let mut acc = first.clone();
    for i in 1..k {
        acc = &acc * if i % 2 == 1 { second } else { first };
    }
    Ok(acc)
}

/// Scaled residuals of the two constraint equations of `form`.
pub fn verify_triple_constraints(
    triple: &Triple,
    params: &ConstraintParams,
    form: ConstraintForm,
) -> Result<(f64, f64), MatError> {
    triple.check_dims()?;
    let norms: Vec<f64> = triple.members().iter().map(|x| x.fro_norm()).collect();
    let pair_scale = norms[0] * norms[1] + norms[0] * norms[2] + norms[1] * norms[2];
    let sum_scale = norms.iter().sum::<f64>();
    let prod_scale = norms[0] * norms[1] * norms[2];
    let sqrt_n = (triple.n() as f64).sqrt();
    let e1 = triple.sum();
    let e2 = triple.pairwise();
    let e3 = triple.product();
    let (a1, a2, b) = (params.alpha1, params.alpha2, params.beta);
    Ok(match form {
        ConstraintForm::Sum => {
            let r1 = e2.dist(&e1.scale(a2).add_scalar(a1));
            let s1 = 1f64
                .max(pair_scale)
                .max(a1.norm() * sqrt_n)
                .max(a2.norm() * sum_scale);
            let r2 = e3.dist(&e1.scale(b));
            let s2 = 1f64.max(prod_scale).max(b.norm() * sum_scale);
            (r1 / s1, r2 / s2)
        }
        ConstraintForm::Product => {
            let r1 = e1.dist(&e2.scale(a2).add_scalar(a1));
            let s1 = 1f64
                .max(sum_scale)
                .max(a1.norm() * sqrt_n)
                .max(a2.norm() * pair_scale);
            let r2 = e3.dist(&e2.scale(b));
            let s2 = 1f64.max(prod_scale).max(b.norm() * pair_scale);
            (r1 / s1, r2 / s2)
        }
    })
}
