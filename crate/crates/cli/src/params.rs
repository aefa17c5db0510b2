use drazin_lab::instances::ConstraintParams;
use drazin_lab::matcore::Tolerances;
use num_complex::Complex64;

use crate::args::{ParamArgs, TolArgs};
use crate::error::CliError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl ParamArgs {
    /// Constraint parameters with unset scalars at zero, `gamma1` at one and
    /// `lambdas` at `[1]`. `m` defaults to the number of lambdas.
    pub fn constraint_params(&self) -> ConstraintParams {
        let lambdas = if self.lambdas.is_empty() {
            vec![ONE]
        } else {
            self.lambdas.clone()
        };
        ConstraintParams {
            alpha: self.alpha.unwrap_or(ZERO),
            alpha1: self.alpha1.unwrap_or(ZERO),
            alpha2: self.alpha2.unwrap_or(ZERO),
            beta: self.beta.unwrap_or(ZERO),
            m: self.m.unwrap_or(lambdas.len()),
            lambdas,
            gamma1: self.gamma1.unwrap_or(ONE),
        }
    }
}

impl TolArgs {
    pub fn checked(&self) -> Result<Tolerances, CliError> {
        let tol = self.tolerances();
        tol.validate()
            .map_err(|e| CliError::parse(format!("--tol: {e}")))?;
        Ok(tol)
    }
}
