//! Significance test for the quadratic term in scalar-on-function
//! regression.
//!
//! A scalar response is modeled on a functional predictor through a
//! linear integral term plus a quadratic one. The test projects the
//! centered predictors onto their leading principal components, fits the
//! projected quadratic model by least squares, and rejects the linear
//! submodel when the statistic built from the quadratic coefficient
//! block exceeds a chi-square quantile with `p(p+1)/2` degrees of
//! freedom.
//!
//! The crate ships the discrete function layer ([`grid`]), the dense
//! numerical kernels ([`linalg`]), functional principal components
//! ([`fpca`]), the fit and test itself ([`quadratic`]), a reproducible
//! Monte Carlo size/power harness ([`simulate`]), and the spectra
//! ingestion path ([`tecator`]).

pub mod error;
pub mod fpca;
pub mod grid;
pub mod linalg;
pub mod quadratic;
pub mod simulate;
pub mod tecator;

pub use error::{Error, Result, Stage};
pub use fpca::{
    choose_p_by_variance, compute_fpca, sample_covariance, sample_mean, FpcaBasis,
    FunctionalDataset,
};
pub use grid::{inner_product, natural_cubic_spline, Curve, Grid};
pub use linalg::{chi2_upper_tail, solve_least_squares, sym_eig, Matrix, SymMatrix};
pub use quadratic::{
    build_design, compute_scores, fit_quadratic, run_test, u_statistic, PSelection, QuadFit,
    TestResult, VechIndex,
};
pub use simulate::{
    derive_stream, generate_response, run_power_study, simulate_brownian, simulate_chebyshev_t5,
    Design, PowerRow, SimScenario, Stream,
};
pub use tecator::{load_spectra_csv, run_tecator_analysis, to_functional_dataset, SpectraTable};
