//! Audit records and their verdicts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::instances::ConstraintParams;

/// Every identity the audit suite exercises, in suite order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IdentityId {
    Eq3,
    Eq5,
    Eq7,
    Eq8,
    CardanoSum,
    CardanoProd,
    QuadSub,
    Thm41Sum,
    Thm41Recover,
    Cor32Block,
    Prop34,
    Lemma33Inv,
}

impl IdentityId {
    pub const ALL: [IdentityId; 12] = [
        IdentityId::Eq3,
        IdentityId::Eq5,
        IdentityId::Eq7,
        IdentityId::Eq8,
        IdentityId::CardanoSum,
        IdentityId::CardanoProd,
        IdentityId::QuadSub,
        IdentityId::Thm41Sum,
        IdentityId::Thm41Recover,
        IdentityId::Cor32Block,
        IdentityId::Prop34,
        IdentityId::Lemma33Inv,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityId::Eq3 => "EQ3",
            IdentityId::Eq5 => "EQ5",
            IdentityId::Eq7 => "EQ7",
            IdentityId::Eq8 => "EQ8",
            IdentityId::CardanoSum => "CARDANO_SUM",
            IdentityId::CardanoProd => "CARDANO_PROD",
            IdentityId::QuadSub => "QUAD_SUB",
            IdentityId::Thm41Sum => "THM41_SUM",
            IdentityId::Thm41Recover => "THM41_RECOVER",
            IdentityId::Cor32Block => "COR32_BLOCK",
            IdentityId::Prop34 => "PROP34",
            IdentityId::Lemma33Inv => "LEMMA33_INV",
        }
    }

    /// Position in [`IdentityId::ALL`]; feeds the seed mixer.
    pub fn ordinal(&self) -> u64 {
        IdentityId::ALL.iter().position(|i| i == self).unwrap() as u64
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IdentityId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown identity `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    PreconditionViolation,
    /// Reserved for comparisons of the two-element sum formula at `alpha != 0`.
    UnderAudit,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::PreconditionViolation => "precondition-violation",
            Verdict::UnderAudit => "under-audit",
        }
    }

    /// `pass` iff every residual is finite and within `tol`.
    pub fn from_residuals(residuals: &[f64], tol: f64) -> Verdict {
        if residuals.iter().all(|r| *r <= tol) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One randomized audit of one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub identity_id: IdentityId,
    pub seed: u64,
    pub n: usize,
    pub params_echo: ConstraintParams,
    pub residuals: Vec<f64>,
    pub verdict: Verdict,
    /// Milliseconds.
    pub wall_time: f64,
    /// Spectral parameters (lambda or mu) at which the identity was evaluated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spectral_params: Vec<Complex64>,
    /// Named auxiliary measurements (indices, norms, compared values).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observations: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn new(
        identity_id: IdentityId,
        seed: u64,
        n: usize,
        params_echo: ConstraintParams,
    ) -> Self {
        Self {
            identity_id,
            seed,
            n,
            params_echo,
            residuals: Vec::new(),
            verdict: Verdict::Pass,
            wall_time: 0.0,
            spectral_params: Vec::new(),
            observations: BTreeMap::new(),
            error: None,
        }
    }

    pub fn max_residual(&self) -> Option<f64> {
        self.residuals.iter().copied().reduce(f64::max)
    }

    pub fn observe(&mut self, name: impl Into<String>, value: f64) {
        self.observations.insert(name.into(), value);
    }
}
