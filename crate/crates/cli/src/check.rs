use std::collections::BTreeMap;

use drazin_lab::drazin;
use drazin_lab::harness;
use drazin_lab::identities::{self, IdentityResidual, ResidualContext};
use drazin_lab::instances::{self, ConstraintForm, ConstraintParams, Triple};
use drazin_lab::matcore::{ComplexMatrix, Tolerances};
use drazin_lab::matfile::{self, MatrixFile};
use drazin_lab::record::{IdentityId, Verdict};
use drazin_lab::report::to_json_sig17;
use drazin_lab::sampling;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::args::CheckArgs;
use crate::error::{CliError, EXIT_IDENTITY_FAILED, EXIT_OK, EXIT_OTHER, EXIT_PRECONDITION};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Serialize)]
struct CheckOutput {
    #[serde(flatten)]
    result: IdentityResidual,
    verdict: Verdict,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    values: BTreeMap<String, Value>,
}

/// Residual plus anything worth printing next to it.
struct Outcome {
    residual: f64,
    context: ResidualContext,
    limit: f64,
    under_audit: bool,
    values: BTreeMap<String, Value>,
}

impl Outcome {
    fn new(residual: f64, n: usize, limit: f64) -> Self {
        Self {
            residual,
            context: ResidualContext {
                n,
                ..Default::default()
            },
            limit,
            under_audit: false,
            values: BTreeMap::new(),
        }
    }
}

pub fn run(args: &CheckArgs) -> Result<u8, CliError> {
    let tol = args.tol.checked()?;
    let params = args.params.constraint_params();
    let mats = args
        .inputs
        .iter()
        .map(|p| matfile::read_matrix(p))
        .collect::<Result<Vec<_>, _>>()?;
    let out = evaluate(args, &params, &mats, &tol)?;
    let verdict = if out.under_audit {
        Verdict::UnderAudit
    } else {
        Verdict::from_residuals(&[out.residual], out.limit)
    };
    let printed = CheckOutput {
        result: IdentityResidual {
            identity_id: args.identity,
            residual: out.residual,
            context: out.context,
        },
        verdict,
        values: out.values,
    };
    println!(
        "{}",
        to_json_sig17(&printed).map_err(|e| CliError::new(EXIT_OTHER, e.to_string()))?
    );
    Ok(match verdict {
        Verdict::Fail => EXIT_IDENTITY_FAILED,
        Verdict::PreconditionViolation => EXIT_PRECONDITION,
        Verdict::Pass | Verdict::UnderAudit => EXIT_OK,
    })
}

fn expect_files<'a>(
    mats: &'a [ComplexMatrix],
    want: usize,
    names: &str,
    id: IdentityId,
) -> Result<&'a [ComplexMatrix], CliError> {
    if mats.len() != want {
        return Err(CliError::parse(format!(
            "{id} expects {want} matrix file(s) ({names}), got {}",
            mats.len()
        )));
    }
    let n = mats[0].n();
    if let Some(m) = mats.iter().find(|m| m.n() != n) {
        return Err(CliError::parse(format!(
            "matrix files disagree in size: {n} vs {}",
            m.n()
        )));
    }
    Ok(mats)
}

fn triple_of(mats: &[ComplexMatrix], id: IdentityId) -> Result<Triple, CliError> {
    let m = expect_files(mats, 3, "x1 x2 x3", id)?;
    Ok(Triple {
        x1: m[0].clone(),
        x2: m[1].clone(),
        x3: m[2].clone(),
    })
}

fn matrix_value(m: &ComplexMatrix) -> Value {
    serde_json::to_value(MatrixFile::from_matrix(m)).expect("matrix files serialize")
}

fn rel_dist(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.dist(b) / b.fro_norm().max(1.0)
}

/// Worst residual over the given spectral parameters.
fn worst_over<F>(points: &[Complex64], n: usize, limit: f64, mut f: F) -> Result<Outcome, CliError>
where
    F: FnMut(Complex64) -> Result<f64, CliError>,
{
    let mut out = Outcome::new(f64::NEG_INFINITY, n, limit);
    for &l in points {
        let r = f(l)?;
        if r > out.residual || out.context.lambda.is_none() {
            out.residual = out.residual.max(r);
            out.context.lambda = Some(l);
        }
    }
    Ok(out)
}

fn evaluate(
    args: &CheckArgs,
    params: &ConstraintParams,
    mats: &[ComplexMatrix],
    tol: &Tolerances,
) -> Result<Outcome, CliError> {
    let id = args.identity;
    let lambdas = &args.params.lambdas;
    let rtol = tol.residual_tol;
    match id {
        IdentityId::Eq3 | IdentityId::Eq7 => {
            let t = triple_of(mats, id)?;
            let points = if lambdas.is_empty() {
                let mut rng = sampling::rng_from_seed(args.seed);
                (0..8).map(|_| sampling::unit_phase(&mut rng)).collect()
            } else {
                lambdas.clone()
            };
            worst_over(&points, t.n(), rtol, |l| {
                Ok(if id == IdentityId::Eq3 {
                    identities::cubic_identity_sum(&t, params, l, tol)?
                } else {
                    identities::cubic_identity_prod(&t, params, l, tol)?
                })
            })
        }
        IdentityId::Eq5 | IdentityId::Eq8 => {
            let t = triple_of(mats, id)?;
            let form = if id == IdentityId::Eq5 {
                ConstraintForm::Sum
            } else {
                ConstraintForm::Product
            };
            if !lambdas.is_empty() {
                return worst_over(lambdas, t.n(), rtol, |l| {
                    Ok(identities::resolvent_product_identity(
                        &t, params, l, form, tol,
                    )?)
                });
            }
            let rec = identities::equivalence_audit(&t, params, form, tol, args.seed);
            match (rec.verdict, rec.error) {
                (Verdict::PreconditionViolation, Some(e)) => {
                    Err(CliError::new(EXIT_PRECONDITION, e))
                }
                (_, Some(e)) => Err(CliError::new(EXIT_OTHER, e)),
                _ => {
                    // The resolvent residuals close the record, one per sample.
                    let tail = &rec.residuals[rec.residuals.len() - rec.spectral_params.len()..];
                    let mut samples = rec.spectral_params.iter().zip(tail);
                    worst_over(&rec.spectral_params, t.n(), rtol, |_| {
                        Ok(*samples.next().expect("one residual per sample").1)
                    })
                }
            }
        }
        IdentityId::CardanoSum | IdentityId::CardanoProd | IdentityId::QuadSub => {
            if args.mus.is_empty() {
                return Err(CliError::guard(format!("{id} needs at least one --mu")));
            }
            let pair = match mats.len() {
                0 => None,
                _ if id == IdentityId::QuadSub => {
                    let m = expect_files(mats, 2, "x1 x2", id)?;
                    Some((m[0].clone(), m[1].clone()))
                }
                _ => {
                    return Err(CliError::parse(format!("{id} takes no matrix files")));
                }
            };
            let mut out = Outcome::new(
                f64::NEG_INFINITY,
                pair.as_ref().map_or(1, |p| p.0.n()),
                if id == IdentityId::QuadSub {
                    rtol
                } else {
                    identities::SUBSTITUTION_TOL
                },
            );
            for &mu in &args.mus {
                let (lambda, mut r) = match id {
                    IdentityId::CardanoSum => {
                        let root = identities::cardano_lambda_sum(mu, params);
                        (
                            root.lambda,
                            identities::cubic_residual_sum(root.lambda, mu, params),
                        )
                    }
                    IdentityId::CardanoProd => {
                        let root = identities::cardano_lambda_prod(mu, params);
                        (
                            root.lambda,
                            identities::cubic_residual_prod(root.lambda, mu, params),
                        )
                    }
                    _ => {
                        let l = identities::quadratic_lambda(mu, params.alpha);
                        (l, identities::quadratic_residual(l, mu, params.alpha))
                    }
                };
                if let Some((x1, x2)) = &pair {
                    r = r.max(identities::pair_factor_identity(
                        x1,
                        x2,
                        params.alpha,
                        lambda,
                        tol,
                    )?);
                }
                if r > out.residual {
                    out.residual = r;
                    out.context.lambda = Some(lambda);
                    out.context.mu = Some(mu);
                }
            }
            Ok(out)
        }
        IdentityId::Thm41Sum => {
            let m = expect_files(mats, 2, "x1 x2", id)?;
            let (x1, x2) = (&m[0], &m[1]);
            let alpha = params.alpha;
            let (f, ds) = harness::sum_formula_vs_engine(x1, x2, alpha, tol)?;
            let s = x1 + x2;
            if alpha == ZERO {
                let verify =
                    drazin::verify_drazin_scaled(&s, &f, harness::pair_scale(x1, x2), tol)?;
                let mut out =
                    Outcome::new(rel_dist(&f, &ds.inverse).max(verify.max()), s.n(), rtol);
                out.values.insert("formula".into(), matrix_value(&f));
                Ok(out)
            } else {
                let mut out = Outcome::new(rel_dist(&f, &ds.inverse), s.n(), rtol);
                out.under_audit = true;
                out.values.insert("formula".into(), matrix_value(&f));
                out.values
                    .insert("engine".into(), matrix_value(&ds.inverse));
                Ok(out)
            }
        }
        IdentityId::Thm41Recover => {
            let m = expect_files(mats, 2, "x1 x2", id)?;
            let (x1, x2) = (&m[0], &m[1]);
            let alpha = params.alpha;
            let hyp = instances::alpha_pair_residual(x1, x2, alpha);
            if !(hyp <= rtol) {
                return Err(CliError::new(
                    EXIT_PRECONDITION,
                    format!("precondition violated: x1 x2 = alpha (x1 + x2) has residual {hyp:e}"),
                ));
            }
            let s = x1 + x2;
            let ds = drazin::drazin_inverse_scaled(&s, harness::pair_scale(x1, x2), tol)?;
            let cand = identities::thm41_recover(x1, &s, alpha, &ds)?;
            let r = drazin::verify_drazin(x2, &cand, tol)?;
            let mut out = Outcome::new(r.max(), s.n(), rtol);
            out.values.insert("recovered".into(), matrix_value(&cand));
            Ok(out)
        }
        IdentityId::Cor32Block | IdentityId::Prop34 => {
            let m = expect_files(mats, 2, "p q", id)?;
            let k = params.m;
            if k == 0 {
                return Err(CliError::guard("--m must be at least 1"));
            }
            let r = if id == IdentityId::Cor32Block {
                identities::cor32_block_invariant(&m[0], &m[1], k, tol)?
                    .to_vec()
                    .into_iter()
                    .fold(0.0, f64::max)
            } else {
                identities::prop34_identities(&m[0], &m[1], k, tol)?
                    .into_iter()
                    .fold(0.0, f64::max)
            };
            Ok(Outcome::new(r, m[0].n(), rtol))
        }
        IdentityId::Lemma33Inv => {
            let m = expect_files(mats, 1, "x", id)?;
            if args.coeffs.is_empty() {
                return Err(CliError::guard("LEMMA33_INV needs --coeff values"));
            }
            let rep = identities::lemma33_invertibility_check(&m[0], &args.coeffs, None)?;
            let mut out = Outcome::new(if rep.equivalent { 0.0 } else { 1.0 }, m[0].n(), rtol);
            out.values.insert(
                "report".into(),
                serde_json::to_value(&rep).expect("report serializes"),
            );
            Ok(out)
        }
    }
}
