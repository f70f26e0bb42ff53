//! Correlation, contingency, t and Granger tests plus the special functions
//! behind their p-values.

mod granger;
mod hypothesis;
mod ols;
mod series;
pub mod special;
mod trigram;

use thiserror::Error;

pub use granger::{granger_test, granger_test_values, GrangerLag, LagOutcome};
pub use hypothesis::{
    chi_square_gof, chi_square_test, cohens_kappa, pearson, t_test, Alternative,
    ContingencyTable, Df, TestResult,
};
pub use ols::{ols_fit, Design, OlsFit};
pub use series::TimeSeries;
pub use special::{chi2_cdf, f_cdf, t_cdf};
pub use trigram::{trigram_stance_correlation, CorrelationMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid degrees of freedom {0}")]
    InvalidDf(f64),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("zero row or column total in contingency table")]
    ZeroMarginal,
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("kappa undefined: chance agreement is 1")]
    UndefinedKappa,
    #[error("singular design matrix")]
    Singular,
    #[error("non-finite or negative input")]
    NonFinite,
    #[error("inconsistent table or matrix shape")]
    Shape,
    #[error("series do not cover the same dates")]
    Misaligned,
    #[error("empty group `{0}`")]
    EmptyGroup(String),
}
