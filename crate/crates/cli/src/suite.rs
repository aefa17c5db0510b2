use std::path::PathBuf;

use drazin_lab::harness::{self, SuiteConfig, Summary};
use drazin_lab::report::{self, ReportFormat};

use crate::args::SuiteArgs;
use crate::error::{CliError, EXIT_IDENTITY_FAILED, EXIT_OK, EXIT_OTHER};

pub fn run(args: &SuiteArgs) -> Result<u8, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::new(EXIT_OTHER, format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str::<SuiteConfig>(&text)
                .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(t) = args.trials {
        cfg.trials_per_identity = t;
    }
    if let Some(d) = &args.dims {
        cfg.dims = d.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed_base = s;
    }
    if let Some(t) = args.tol {
        cfg.tolerances.residual_tol = t;
    }
    cfg.include_under_audit |= args.audit_mode;
    cfg.validate()?;
    let records = harness::run_suite(&cfg)?;
    let out = args.out.clone().unwrap_or_else(|| {
        PathBuf::from(match args.format {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
        })
    });
    report::emit_report(&records, args.format, &out)?;
    let summary = Summary::of(&records);
    println!("{summary}");
    Ok(if summary.failed == 0 {
        EXIT_OK
    } else {
        EXIT_IDENTITY_FAILED
    })
}
