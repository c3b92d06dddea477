use std::fmt;
use std::str::FromStr;

use segver::jets::{Limits, RankConfig};
use segver::{Error, PrimeField, DEFAULT_PRIME};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const DEFECT_SUSPECTED: u8 = 2;
    pub const VERIFICATION_FAILED: u8 = 3;
    pub const RESOURCE_REFUSAL: u8 = 4;
}

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure {
            code: exit::USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn io(e: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: exit::USAGE,
            error: e.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceLimit { .. } => exit::RESOURCE_REFUSAL,
            Error::Singular(_) | Error::CertificateFailed(_) => exit::VERIFICATION_FAILED,
            _ => exit::USAGE,
        };
        Failure { code, error: e.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// `--prime`: a fixed modulus or `auto` for a fresh random 62-bit prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimeChoice {
    Fixed(u64),
    Auto,
}

impl Default for PrimeChoice {
    fn default() -> Self {
        PrimeChoice::Fixed(DEFAULT_PRIME)
    }
}

impl FromStr for PrimeChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PrimeChoice::Auto);
        }
        s.parse().map(PrimeChoice::Fixed).map_err(|_| format!("expected a prime or `auto`, got {s:?}"))
    }
}

impl PrimeChoice {
    pub fn field(self) -> Result<PrimeField, Failure> {
        match self {
            PrimeChoice::Fixed(p) => Ok(PrimeField::new(p)?),
            PrimeChoice::Auto => Ok(PrimeField::random_62_bit(&mut rand::thread_rng())),
        }
    }
}

/// Size caps shared by the commands.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub limits: Limits,
    pub max_lambda: usize,
}

impl Budget {
    pub fn rank_config(&self, field: PrimeField, seed: u64, trials: u32) -> RankConfig {
        RankConfig {
            field,
            seed,
            trials,
            limits: self.limits,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            limits: Limits::default(),
            max_lambda: segver::osculation::DEFAULT_LAMBDA_BUDGET,
        }
    }
}
