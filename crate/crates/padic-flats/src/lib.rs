//! Expected numbers of k-dimensional flats on random complete intersections
//! in p-adic projective space.
//!
//! The expected count factors as the measure of the space of candidate flats
//! times the expectation of |det| of a structured random matrix built from
//! the coefficients of the defining forms. This crate provides the pieces:
//!
//! - [`rational`] / [`bracket`]: exact rational arithmetic and rigorous
//!   enclosures for quantities only known to finite precision;
//! - [`padic`]: truncated p-adic arithmetic (residues mod p^m) with censored
//!   valuations;
//! - [`linalg`]: matrices over Z/p^m, diagonalization by unit transforms,
//!   and Haar volumes of matrix and flag sets;
//! - [`jacobian`]: the symbolic template of the structured Jacobian for a
//!   given degree profile;
//! - [`expectation`]: exact and Monte Carlo engines for E|det| and the
//!   expected flat count, plus known closed forms;
//! - [`counting`]: brute-force census routines over Z/p^m used as oracles;
//! - [`volkenborn`]: normalized Riemann sums of polynomial integrands and
//!   p-adic limit checks;
//! - [`sampling`]: seeded, thread-count-independent random streams;
//! - [`verify`] / [`report`]: identity suites comparing formulas against
//!   enumeration, and serializable result records.

pub mod bracket;
pub mod counting;
pub mod error;
pub mod expectation;
pub mod jacobian;
pub mod linalg;
pub mod padic;
pub mod rational;
pub mod report;
pub mod sampling;
pub mod verify;
pub mod volkenborn;

pub use bracket::{BracketedValue, McEstimate};
pub use counting::{MinorMapReport, ProjectivePoint};
pub use error::{Error, Result};
pub use expectation::{
    ClosedForm, DetExpectation, FlatCountResult, MethodSpec, DEFAULT_GUARD,
};
pub use jacobian::{DegreeProfile, JacobianTemplate, TemplateCell, TemplateVar};
pub use linalg::{PadicMatrix, SmithDecomposition, VolumeTable};
pub use padic::{PadicApprox, PadicContext, Valuation};
pub use rational::ExactRational;
pub use report::{flat_count_record, scan_csv, scan_rows, FlatCountRecord, ScanRow, VolkenbornRecord};
pub use sampling::{CoefficientAssignment, SeededStream};
pub use verify::{run_suite, IdentityRecord, Suite};
pub use volkenborn::{PolynomialIntegrand, VolkenbornPartial};
