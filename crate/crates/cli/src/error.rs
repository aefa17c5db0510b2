use std::fmt;

use drazin_lab::drazin::DrazinError;
use drazin_lab::harness::HarnessError;
use drazin_lab::identities::IdentityError;
use drazin_lab::instances::InstanceError;
use drazin_lab::matcore::MatError;
use drazin_lab::matfile::MatFileError;
use drazin_lab::report::ReportError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_IDENTITY_FAILED: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_GUARD: u8 = 4;
pub const EXIT_PRECONDITION: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, message)
    }

    pub fn guard(message: impl Into<String>) -> Self {
        Self::new(EXIT_GUARD, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<MatFileError> for CliError {
    fn from(e: MatFileError) -> Self {
        // An unreadable input file is reported like a malformed one.
        Self::parse(e.to_string())
    }
}

impl From<MatError> for CliError {
    fn from(e: MatError) -> Self {
        match e {
            MatError::DimensionMismatch { .. } => Self::parse(e.to_string()),
            _ => Self::new(EXIT_OTHER, e.to_string()),
        }
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::Mat(m) => m.into(),
            InstanceError::InvalidSpec(_)
            | InstanceError::ExcludedParameters(..)
            | InstanceError::InvalidParameters(_) => Self::guard(e.to_string()),
            _ => Self::new(EXIT_OTHER, e.to_string()),
        }
    }
}

impl From<DrazinError> for CliError {
    fn from(e: DrazinError) -> Self {
        match e {
            DrazinError::Mat(m) => m.into(),
            DrazinError::Audit(..) => Self::new(EXIT_IDENTITY_FAILED, e.to_string()),
            DrazinError::Domain(_) => Self::guard(e.to_string()),
        }
    }
}

impl From<IdentityError> for CliError {
    fn from(e: IdentityError) -> Self {
        match e {
            IdentityError::Mat(m) => m.into(),
            IdentityError::Drazin(d) => d.into(),
            IdentityError::Instance(i) => i.into(),
            IdentityError::Precondition { .. } => Self::new(EXIT_PRECONDITION, e.to_string()),
            IdentityError::NotAdmissible(_) | IdentityError::InvalidArgument(_) => {
                Self::guard(e.to_string())
            }
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        Self::new(EXIT_OTHER, e.to_string())
    }
}
