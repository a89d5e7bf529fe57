use thiserror::Error;

/// Errors shared by every module of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("set must contain 0 to generate sums")]
    ZeroMissing,

    #[error("fold count h must be at least 1")]
    OrderZero,

    #[error("window [{lo}, {hi}] exceeds the set truncation limit {limit}")]
    WindowExceedsLimit { lo: u64, hi: u64, limit: u64 },

    #[error("window is empty: lo {lo} > hi {hi}")]
    WindowEmpty { lo: u64, hi: u64 },

    #[error("target {target} exceeds the set truncation limit {limit}")]
    TargetExceedsLimit { target: u64, limit: u64 },

    #[error("element {element} exceeds the set truncation limit {limit}")]
    ElementExceedsLimit { element: u64, limit: u64 },

    #[error("size bound must be at least 1")]
    SizeBoundZero,

    #[error("gap undefined on near-empty tail: {found} element(s) at or above cutoff {cutoff}, need at least 2")]
    GapUndefined { cutoff: u64, found: usize },

    #[error("candidate subset contains {element}, which is not a member of the set")]
    SubsetNotContained { element: u64 },

    #[error("subset of size {size} is too large for exhaustive minimality testing (max {max})")]
    SubsetTooLarge { size: usize, max: usize },

    #[error("residue {residue} out of range for modulus {modulus}")]
    ResidueOutOfRange { residue: u64, modulus: u64 },

    #[error("modulus {modulus} must be at least 2")]
    ModulusTooSmall { modulus: u64 },

    #[error("basis order must be at least 2 to build a block plan, got {0}")]
    PlanOrderTooSmall(u32),

    #[error("plan covers [0, {covered}] but [0, {needed}] was requested; extend the plan first")]
    InsufficientCoverage { covered: String, needed: u64 },

    #[error("plan has {have} {kind} block(s) but {need} are required")]
    PlanTooShort { kind: &'static str, have: usize, need: usize },

    #[error("materializing {need_bits} bits exceeds the memory budget of {budget_bits} bits")]
    MemoryBudget { need_bits: u64, budget_bits: u64 },

    #[error("line {line}: {message}")]
    SetParse { line: usize, message: String },

    #[error("invalid plan: {0}")]
    PlanFormat(String),

    #[error("samples must be ascending")]
    SamplesNotAscending,

    #[error("growth ratio requires n >= 2, got {0}")]
    GrowthRatioDomain(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
