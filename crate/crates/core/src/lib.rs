//! Large-degree Jacobi polynomials `P_n^(alpha,beta)(x)` through two
//! asymptotic expansions with explicit error certificates:
//!
//! * outer region, `x = cosh(gamma) > 1`, where `P_n` grows like `e^{n gamma}`;
//! * oscillatory region, `x = cos(gamma)`, `0 < gamma <= pi/2`.
//!
//! Each truncated expansion comes with a bound on its remainder, and an exact
//! three-term-recurrence oracle is provided to check those bounds.
//!
//! ```
//! use jacobi_asym::{evaluate_outer, jacobi_recurrence_scaled, Parameters};
//!
//! let params = Parameters::new(0.0, -0.5).unwrap();
//! let r = evaluate_outer(200, 0.5, params, 3).unwrap();
//! let exact = jacobi_recurrence_scaled(200, params, 0.5f64.cosh());
//! let zeta = exact.ratio(r.prefactor) - r.normalized_sum;
//! assert!(zeta.abs() <= r.bundle.certified_bound);
//! ```

pub mod bounds;
pub mod certify;
pub mod coeffs;
pub mod error;
pub mod expand;
pub mod oracle;
pub mod params;
pub mod scaled;

pub use bounds::{
    beta_fn, c_hat_osc, c_hat_outer, c_p_osc, c_p_outer, coeff_magnitude_bound_outer, delta_of,
    gamma_half, BoundBundle,
};
pub use certify::{
    certify_point, convergence_slope, sweep, write_csv, CertificateRecord, GridSpec, OracleMode,
    SweepReport, SweepSummary,
};
pub use coeffs::{
    a_coeff, b_coeff, coefficient_fit_oracle, expansion_coefficients, q_stack, rising_factorial,
    CoefficientTable, DensePolynomial, Precision,
};
pub use error::{Error, Result};
pub use expand::{
    evaluate, evaluate_general, evaluate_osc, evaluate_outer, optimal_truncation, prefactor_osc,
    prefactor_outer, Convention, ExpansionResult, Flag,
};
pub use oracle::{jacobi_recurrence_rational, jacobi_recurrence_scaled, RationalOracle};
pub use params::{
    canonicalize, validate_oscillatory, validate_outer, Canonical, Parameters, Region, RegionPoint,
    ValidityReport,
};
pub use scaled::ScaledReal;
