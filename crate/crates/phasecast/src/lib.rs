//! Phase estimation with two-level probes under unital phase-covariant noise.
//!
//! A phase `phi` is imprinted on a qubit by a unitary whose rotation axis is
//! random, drawn from a von Mises-Fisher distribution on the sphere. Averaging
//! over the axis turns the phase shift into a noisy channel. This crate builds
//! that channel three independent ways and provides the full estimation
//! toolbox on top of it:
//!
//! - [`channel`]: Monte Carlo averaging over the stochastic generator, the
//!   exact four-operator Kraus set, the 4x4 Liouville matrix, the Bloch-ball
//!   distortion map, and process tomography. All representations are
//!   cross-checked against one another by the validation suite.
//! - [`estimation`]: quantum Fisher information and the symmetric logarithmic
//!   derivative from a state/derivative pair, sensitivities of fixed
//!   observables, closed forms for the sequential protocol, the tight lower
//!   bound `f_N`, and the optimal round count `N_opt = round(-1/ln lambda_perp)`.
//! - [`settings`]: the three estimation architectures — N sequential rounds on
//!   one probe, sequential rounds with a passive ancilla, and a single round
//!   on an N-qubit GHZ state — with exact evolved states and closed-form QFIs.
//! - [`linalg`]: the dense complex matrix arithmetic, Hermitian Jacobi
//!   eigensolver, and vectorization convention everything else relies on.
//!
//! Every closed form ships with an independent oracle (brute-force
//! eigendecomposition, Monte Carlo, or quadrature) exercised by `cargo test`
//! and by the `phasecast validate` CLI subcommand.
//!
//! ```
//! use phasecast::channel::{channel_params_vmf, kraus_vmf};
//! use phasecast::estimation::{lower_bound_f, n_opt_estimate, qfi_sequential_vmf};
//! use phasecast::vmf::VmfParams;
//!
//! let p = VmfParams::new(0.1, 1.0).unwrap();
//! let c = channel_params_vmf(&p).unwrap();
//!
//! // The lower bound never exceeds the QFI, and its maximizer is cheap to locate.
//! let n_opt = n_opt_estimate(&c).unwrap();
//! assert_eq!(n_opt, 85);
//! let f = lower_bound_f(n_opt, &c).unwrap();
//! let qfi = qfi_sequential_vmf(n_opt, &c).unwrap();
//! assert!(f <= qfi + 1e-12);
//!
//! // The Kraus set realizes the same channel exactly.
//! assert!(kraus_vmf(&p).is_ok());
//! ```

pub mod channel;
pub mod deriv;
pub mod estimation;
pub mod linalg;
pub mod rng;
pub mod settings;
pub mod tol;
pub mod validate;
pub mod vmf;

pub use num_complex::Complex64;

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {max_asymmetry:.3e}")]
    NonHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("trace deviates from 1 by {deviation:.3e}")]
    TraceDeviation { deviation: f64 },

    #[error("state has negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },

    #[error("Bloch vector has unphysical norm {norm}")]
    UnphysicalBloch { norm: f64 },

    #[error("vectorized state violates Hermiticity/trace by {deviation:.3e}")]
    InvalidVectorization { deviation: f64 },

    #[error("concentration parameter must satisfy {requirement}, got {kappa}")]
    InvalidKappa {
        kappa: f64,
        requirement: &'static str,
    },

    #[error("rotation axis must be a unit vector, |n| = {norm}")]
    NonUnitAxis { norm: f64 },

    #[error("sample count must be positive")]
    NoSamples,

    #[error("Kraus construction left its domain: {detail}")]
    KrausDomain { detail: String },

    #[error(
        "complete-positivity violated: lambda_par = {lambda_par}, lambda_perp = {lambda_perp}"
    )]
    CpViolation { lambda_par: f64, lambda_perp: f64 },

    #[error("operation requires a strictly contractive channel, lambda_perp = {lambda_perp}")]
    NotContractive { lambda_perp: f64 },

    #[error("numerical derivative unstable: relative change {rel_change:.3e} across step halving")]
    DerivativeUnstable { rel_change: f64 },

    #[error("channel violates unital phase covariance by {deviation:.3e}")]
    CovarianceViolation { deviation: f64 },

    #[error("invalid state/derivative pair: {detail}")]
    InvalidStatePair { detail: String },

    #[error("projectors do not resolve the identity: deviation {deviation:.3e}")]
    IncompleteProjectors { deviation: f64 },

    #[error("mixing weight out of range: alpha = {alpha}")]
    AlphaOutOfRange { alpha: f64 },

    #[error(
        "closed form unreliable this close to phi = 0; use phi >= {min} or the brute-force path"
    )]
    PhiTooSmall { min: f64 },

    #[error("closed-form denominator vanished: {detail}")]
    DegenerateDenominator { detail: String },

    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    EigNoConvergence { sweeps: usize },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
