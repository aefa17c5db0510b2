//! Drazin inverses of complex matrices and randomized audits of identities
//! for constrained pairs and triples.

pub mod cubic;
pub mod drazin;
pub mod harness;
pub mod identities;
pub mod instances;
pub mod matcore;
pub mod matfile;
pub mod record;
pub mod report;
pub mod sampling;
