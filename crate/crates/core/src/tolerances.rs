//! Tolerance ledger shared by the library checks, the CLI and the test suites.
//!
//! | Constant | Value | Used for |
//! |----------|-------|----------|
//! | [`ALGEBRA`] | 1e-12 | single polynomial operations, moment tables, orthogonality |
//! | [`REGRADE`] | 1e-10 | basis changes, kernel-level identities, second-moment formula |
//! | [`END_TO_END`] | 1e-9 | isometries and square decompositions through several operators |

/// Round-off budget for one exact-in-principle algebraic operation at desk scale.
pub const ALGEBRA: f64 = 1e-12;

/// Regrading into the orthogonal product basis and kernel identities.
pub const REGRADE: f64 = 1e-10;

/// Chains of operators (isometry, square decomposition).
pub const END_TO_END: f64 = 1e-9;

/// Riemann-sum error at the finest mesh, relative to `E[Z^2]`.
pub const RIEMANN_RELATIVE: f64 = 1e-3;

/// Allowed spread (max/min) of `E|dZ|^4 / gap^2` across gaps.
pub const MOMENT_RATIO_SPREAD: f64 = 3.0;

/// Accepted window for the log-log slope of `E|dZ|^4` against the gap.
pub const MOMENT_SLOPE: (f64, f64) = (1.9, 2.1);

/// Number of standard errors for Monte Carlo agreement checks.
pub const MC_SIGMAS: f64 = 3.0;

/// Relative confidence half-width above which an estimate is flagged undersampled.
pub const UNDERSAMPLED_HALF_WIDTH: f64 = 0.5;

/// Two-sided 95% normal quantile used for confidence intervals.
pub const Z95: f64 = 1.959_963_984_540_054;
