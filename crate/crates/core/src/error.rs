use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid residue ring: {0}")]
    InvalidRing(String),

    #[error("{value} is not a unit modulo {modulus}")]
    NonUnit { value: u64, modulus: u64 },

    #[error("{value} has no square root modulo {modulus} with the given base root")]
    NotASquare { value: u64, modulus: u64 },

    #[error("operands live in different residue rings ({left} vs {right})")]
    RingMismatch { left: String, right: String },

    #[error("character is not primitive")]
    NotPrimitive,

    #[error("arity mismatch: expected {expected} variables, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("polynomial value is divisible by p")]
    NonUnitValue,

    #[error("log-Hessian is singular modulo {p} (rank {rank} < {n})")]
    SingularHessian { p: u64, rank: usize, n: usize },

    #[error("enumeration needs {needed} terms but the budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("linear form has no unit coefficient")]
    NoUnitCoefficient,

    #[error("degree {d} is divisible by p = {p}")]
    DegreeDivisible { p: u64, d: u32 },

    #[error("composite modulus {0} is even")]
    EvenModulus(u64),

    #[error("critical point is degenerate modulo p")]
    DegenerateCritical,

    #[error("degenerate critical point found at {point:?} modulo {p}")]
    DegenerateCriticalFound { p: u64, point: Vec<u64> },

    #[error("not a Bernstein-Sato pair: {0}")]
    NotBernsteinPair(String),

    #[error("p = {p} is flagged bad for instance {instance}")]
    BadPrime { instance: String, p: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("catalogue error: {0}")]
    Catalogue(String),

    #[error("{0}")]
    Invalid(String),
}
