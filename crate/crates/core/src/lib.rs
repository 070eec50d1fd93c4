//! Generalized position-momentum uncertainty bounds for mixed quantum states.
//!
//! For a statistical mixture described by a density matrix, the product of the
//! position and wave-vector spreads is bounded from below by a function of the
//! effective number of pure states `N_eff` present in the mixture. This crate
//! evaluates that boundary in closed form, constructs the minimizing
//! density-operator spectrum in the harmonic-oscillator eigenbasis, and checks
//! every closed-form result against independent brute-force numerical oracles.
//!
//! Module map:
//!
//! * [`shells`] — exact shell degeneracies, cumulative mode counts, log-gamma.
//! * [`spectrum`] — admissible layer counts and the minimizing eigenvalue
//!   spectrum for a requested `N_eff`.
//! * [`bounds`] — the strict boundary, its smooth approximation, the inverse
//!   (largest `N_eff` at a given spread product), and packing coefficients.
//! * [`oscillator`] — oscillator eigenfunctions, sampled density-matrix grids
//!   and quadrature moments for cross-checking the analytic results.
//! * [`oracle`] — constrained minimizers and randomized audits that validate
//!   the closed forms without using them.
//! * [`verify`] — runnable invariant suites backing the CLI `verify` command.

pub mod bounds;
pub mod error;
pub mod numfmt;
pub mod oracle;
pub mod oscillator;
pub mod shells;
pub mod spectrum;
pub mod verify;

pub use bounds::{ApproxBound, BoundEvaluation, CurvePoint, CurveRequest, CurveRow};
pub use error::{Error, Result};
pub use oracle::{AuditReport, MatrixProblem, MatrixSolution, ShellProblem, ShellSolution};
pub use oscillator::{DensityMatrixGrid, OscillatorBasis, QuadratureMoments, UniformGrid};
pub use shells::ShellTable;
pub use spectrum::{LayerInterval, ModeSpectrum, SpectrumMoments, SpectrumRequest};

/// Compensated (Kahan) summation; keeps long reductions accurate to a few ulp.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
