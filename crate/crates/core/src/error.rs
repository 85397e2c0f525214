use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("modulus {0} is outside the supported range")]
    ModulusTooLarge(u64),
    #[error("matrix is not invertible mod {modulus} (determinant {det})")]
    NotInvertible { det: u64, modulus: u64 },
    #[error("{target} does not divide {source_modulus} (or the primes differ)")]
    NotDivisor { target: u64, source_modulus: u64 },
    #[error("enumeration exceeded the cap of {cap} elements")]
    CapExceeded { cap: u64 },
    #[error("search budget of {budget} exhausted during {stage}")]
    BudgetExhausted { budget: u64, stage: &'static str },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
