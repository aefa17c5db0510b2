use drazin_lab::drazin::{self, Residuals};
use drazin_lab::matcore::Tolerances;
use drazin_lab::matfile::{self, MatrixFile};
use drazin_lab::report::to_json_sig17;
use serde::Serialize;

use crate::args::ComputeArgs;
use crate::error::{CliError, EXIT_IDENTITY_FAILED, EXIT_OK, EXIT_OTHER};

#[derive(Serialize)]
struct ComputeOutput {
    inverse: MatrixFile,
    index: usize,
    residuals: Residuals,
}

pub fn run(args: &ComputeArgs) -> Result<u8, CliError> {
    let tol = args.tol.checked()?;
    let a = matfile::read_matrix(&args.input)?;
    // Compute without the built-in audit so the residuals can be shown even
    // when they miss the tolerance.
    let relaxed = Tolerances {
        residual_tol: f64::INFINITY,
        ..tol
    };
    let d = drazin::drazin_inverse(&a, &relaxed)?;
    let out = ComputeOutput {
        inverse: MatrixFile::from_matrix(&d.inverse),
        index: d.index,
        residuals: d.residuals,
    };
    println!(
        "{}",
        to_json_sig17(&out).map_err(|e| CliError::new(EXIT_OTHER, e.to_string()))?
    );
    if d.residuals.within(tol.residual_tol) {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "defining-equation residual {:e} exceeds tolerance {:e}",
            d.residuals.max(),
            tol.residual_tol
        );
        Ok(EXIT_IDENTITY_FAILED)
    }
}
