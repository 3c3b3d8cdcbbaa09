use thiserror::Error;

/// Every failure the numerical routines can report.
///
/// Variants carry enough context to say where things went wrong; none of them
/// are recoverable by retrying with the same input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate lattice: periods are real-collinear (Im tau = {im_tau:e})")]
    DegenerateLattice { im_tau: f64 },
    #[error("point {z} is within the guard radius of a lattice point")]
    PoleAtLatticePoint { z: crate::C64 },
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("operator has {m} lower and {n} upper bands; symmetrization needs M = N")]
    NotSquareBands { m: usize, n: usize },
    #[error("alpha collision at site {n}: |alpha1 - alpha2| = {sep:e}")]
    AlphaCollision { n: i64, sep: f64 },
    #[error("degenerate Tyurin data at site {n}: {what}")]
    DegenerateGamma { n: i64, what: String },
    #[error("denominator collision at site {n}: {what}")]
    DenominatorCollision { n: i64, what: String },
    #[error("index {n} outside data window [{lo}, {hi}]")]
    IndexOutOfData { n: i64, lo: i64, hi: i64 },
    #[error("no commuting partner: nullity {nullity} < 3")]
    NoPartner { nullity: usize },
    #[error("ill-conditioned fit: condition number {cond:e}")]
    IllConditionedFit { cond: f64 },
    #[error("non-generic data at site {n}: {what}")]
    NonGenericData { n: i64, what: String },
    #[error("rank-deficient operator fit at site {n}: condition number {cond:e}")]
    RankDeficientFit { n: i64, cond: f64 },
    #[error("Baker-Akhiezer matrix is singular at z = {z}")]
    SingularPsiHat { z: crate::C64 },
    #[error("jet order too low: need exponent {need}, have {have}")]
    InsufficientJetOrder { need: i32, have: i32 },
    #[error("expected 2 zeros of det chi, found {found}")]
    ZeroCountMismatch { found: usize },
    #[error("invariants need a periodic boundary")]
    RequiresPeriodic,
    #[error("a_(1,n-1) vanishes at site {n}")]
    ZeroLeadingA { n: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
