//! Every numerical tolerance used by the library, in one place.
//!
//! Contracts elsewhere reference these constants by name instead of repeating
//! magic numbers. Loosening one of them is an API-visible change.

/// Max allowed |a_ij - conj(a_ji)| for a density matrix.
pub const HERMITICITY: f64 = 1e-12;

/// Max allowed |tr(rho) - 1| for a density matrix.
pub const TRACE: f64 = 1e-12;

/// Eigenvalues of a density matrix may undershoot zero by at most this much.
pub const POSITIVITY: f64 = 1e-10;

/// Hermiticity requirement on eigensolver input.
pub const EIG_INPUT: f64 = 1e-10;

/// Eigensolver reconstruction error budget, per unit of dimension.
pub const EIG_RECONSTRUCTION_PER_DIM: f64 = 1e-10;

/// Bloch vectors may exceed unit norm by this much before reconstruction
/// is rejected as unphysical.
pub const BLOCH_NORM: f64 = 1e-9;

/// Hermiticity/trace slack accepted by `devectorize`.
pub const DEVECTORIZE: f64 = 1e-9;

/// Unit-norm requirement on stochastic-generator rotation axes.
pub const AXIS_NORM: f64 = 1e-9;

/// Completeness requirement on a Kraus set, max-entry norm of
/// sum K_i^dag K_i - 1.
pub const KRAUS_COMPLETENESS: f64 = 1e-10;

/// Window in which a slightly negative radicand in the Kraus closed forms is
/// clamped to zero; larger violations are rejected.
pub const KRAUS_CLAMP: f64 = 1e-12;

/// Slack on the complete-positivity constraints lambda_par <= 1 and
/// 2 lambda_perp <= 1 + lambda_par.
pub const CP_SLACK: f64 = 1e-12;

/// Eigenvalue-pair floor in the Fisher-information spectral sum: terms with
/// q_i + q_j at or below this are dropped.
pub const QFI_NULL_SPACE: f64 = 1e-12;

/// A dropped Fisher term must have a matrix element at or below this, or the
/// state/derivative pair is reported as inconsistent.
pub const QFI_NULL_ELEMENT: f64 = 1e-8;

/// Variance floor below which an observable sensitivity is indeterminate
/// rather than divergent.
pub const VARIANCE_FLOOR: f64 = 1e-14;

/// Probability floor in the classical Fisher information sum.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// A dropped classical-Fisher outcome must have |dp/dphi| at or below this.
pub const PROBABILITY_SLOPE_FLOOR: f64 = 1e-12;

/// Relative agreement across one step halving that qualifies a numerical
/// derivative as converged.
pub const DERIV_STABLE: f64 = 1e-7;

/// Relative step-halving change beyond which a numerical derivative is
/// flagged as unstable.
pub const DERIV_FLAG: f64 = 1e-5;

/// Base step for finite-difference derivatives of evolved states; paired
/// with a half-step stencil and Richardson-combined, so truncation is sixth
/// order while rounding stays at the 1e-4 level.
pub const STATE_DERIV_STEP: f64 = 1e-4;

/// Default tolerance on the phase-covariance checks in process tomography.
pub const COVARIANCE: f64 = 1e-6;

/// Denominator floor for the closed-form sensitivities and the parallel QFI.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

/// Smallest phase accepted by the closed-form parallel QFI.
pub const PHI_MIN_PARALLEL: f64 = 1e-3;

/// Slack accepted on X-state diagonal entries and the corner positivity
/// condition d_first * d_last >= |corner|^2.
pub const XSTATE_POSITIVITY: f64 = 1e-12;

/// Max deviation of ancilla-state marginals from the maximally mixed state.
pub const ANCILLA_MARGINAL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::assertions_on_constants)]
    fn floors_are_ordered() {
        assert!(QFI_NULL_SPACE < QFI_NULL_ELEMENT);
        assert!(PROBABILITY_FLOOR < PROBABILITY_SLOPE_FLOOR);
        assert!(DERIV_STABLE < DERIV_FLAG);
        assert!(HERMITICITY <= EIG_INPUT);
    }
}
