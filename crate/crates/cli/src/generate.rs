use std::path::{Path, PathBuf};

use drazin_lab::instances::{self, ConstraintForm, ConstraintParams, RandomSpec, Triple};
use drazin_lab::matcore::ComplexMatrix;
use drazin_lab::matfile;
use drazin_lab::sampling::{self, SeededRng};
use num_complex::Complex64;

use crate::args::{GenerateArgs, Kind};
use crate::error::{CliError, EXIT_OK, EXIT_OTHER};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn run(args: &GenerateArgs) -> Result<u8, CliError> {
    let tol = args.tol.checked()?;
    let n = args.n;
    if n == 0 {
        return Err(CliError::guard("--n must be at least 1"));
    }
    let mut params = args.params.constraint_params();
    let mut rng = sampling::rng_from_seed(args.seed);
    let (files, residual): (Vec<(&str, ComplexMatrix)>, f64) = match args.kind {
        Kind::Idempotent => {
            let spec = RandomSpec::new(args.seed, n, args.rank.unwrap_or(n / 2));
            let p = instances::random_idempotent(&spec, &tol)?;
            let r = (&p * &p).dist(&p) / p.fro_norm().max(1.0);
            (vec![("p", p)], r)
        }
        Kind::Pair0 => {
            let spec = RandomSpec::new(args.seed, n, args.rank.unwrap_or(n / 2));
            let (x1, x2) = instances::pair_zero_product(&spec, &tol)?;
            let r = instances::alpha_pair_residual(&x1, &x2, ZERO);
            (vec![("x1", x1), ("x2", x2)], r)
        }
        Kind::PairAlpha => {
            let alpha = params.alpha;
            if alpha == ZERO {
                return Err(CliError::guard("pair-alpha needs a nonzero --alpha"));
            }
            let spec = RandomSpec::new(args.seed, n, args.rank.unwrap_or(n.div_ceil(2)));
            let (x1, x2) = instances::pair_alpha_product(&spec, alpha, &tol)?;
            let r = instances::alpha_pair_residual(&x1, &x2, alpha);
            (vec![("x1", x1), ("x2", x2)], r)
        }
        Kind::TripleSum => {
            let t = slot_values(&mut rng, n, |t| {
                drazin_lab::cubic::cubic_roots(
                    -t,
                    params.alpha1 + params.alpha2 * t,
                    -params.beta * t,
                )
            });
            let spec = RandomSpec::new(args.seed, n, 0);
            let triple = instances::triple_sum_form(&params, &t, &spec, &tol, args.audit_mode)?;
            let r = constraint_residual(&triple, &params, ConstraintForm::Sum)?;
            (triple_files(triple), r)
        }
        Kind::TripleProd => {
            let s = slot_values(&mut rng, n, |s| {
                drazin_lab::cubic::cubic_roots(
                    -(params.alpha1 + params.alpha2 * s),
                    s,
                    -params.beta * s,
                )
            });
            let spec = RandomSpec::new(args.seed, n, 0);
            let triple = instances::triple_prod_form(&params, &s, &spec, &tol)?;
            let r = constraint_residual(&triple, &params, ConstraintForm::Product)?;
            (triple_files(triple), r)
        }
        Kind::TripleIdem => {
            let rank_p = args.rank.unwrap_or(n / 2);
            let p = instances::random_idempotent(&RandomSpec::new(args.seed, n, rank_p), &tol)?;
            let q = instances::random_idempotent(
                &RandomSpec::new(args.seed.wrapping_add(1), n, n.div_ceil(2)),
                &tol,
            )?;
            let triple = instances::triple_from_idempotents(&p, &q, &params, &tol)?;
            params = params.idempotent_triple_params();
            let r = constraint_residual(&triple, &params, ConstraintForm::Product)?;
            let mut files = vec![("p", p), ("q", q)];
            files.extend(triple_files(triple));
            (files, r)
        }
    };
    std::fs::create_dir_all(&args.out).map_err(|e| {
        CliError::new(
            EXIT_OTHER,
            format!("cannot create {}: {e}", args.out.display()),
        )
    })?;
    for (name, m) in &files {
        let path = file_path(&args.out, name);
        matfile::write_matrix(&path, m).map_err(|e| CliError::new(EXIT_OTHER, e.to_string()))?;
        eprintln!("wrote {}", path.display());
    }
    if matches!(
        args.kind,
        Kind::TripleSum | Kind::TripleProd | Kind::TripleIdem
    ) {
        println!(
            "params alpha1={} alpha2={} beta={}",
            flag_value(params.alpha1),
            flag_value(params.alpha2),
            flag_value(params.beta)
        );
    }
    println!("constraint residual {residual:.3e}");
    if residual > tol.residual_tol {
        return Err(CliError::new(
            EXIT_OTHER,
            format!(
                "constraint residual {residual:e} exceeds tolerance {:e}",
                tol.residual_tol
            ),
        ));
    }
    Ok(EXIT_OK)
}

/// `z` in the form the parameter flags accept, e.g. `0.5-2i`.
fn flag_value(z: Complex64) -> String {
    let re = z.re + 0.0;
    let im = z.im + 0.0;
    if im == 0.0 {
        format!("{re}")
    } else if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

fn file_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.json"))
}

fn triple_files(t: Triple) -> Vec<(&'static str, ComplexMatrix)> {
    vec![("x1", t.x1), ("x2", t.x2), ("x3", t.x3)]
}

fn constraint_residual(
    triple: &Triple,
    params: &ConstraintParams,
    form: ConstraintForm,
) -> Result<f64, CliError> {
    let (r1, r2) = instances::verify_triple_constraints(triple, params, form)?;
    Ok(r1.max(r2))
}

/// Slot parameters drawn from the disc of radius 1.5, skipping those whose
/// cubic has a root close to (but not at) zero.
fn slot_values(
    rng: &mut SeededRng,
    n: usize,
    roots: impl Fn(Complex64) -> [Complex64; 3],
) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let mut t = sampling::disc_point(rng) * 1.5;
            for _ in 0..100 {
                if roots(t).iter().all(|r| *r == ZERO || r.norm() >= 0.05) {
                    break;
                }
                t = sampling::disc_point(rng) * 1.5;
            }
            t
        })
        .collect()
}
