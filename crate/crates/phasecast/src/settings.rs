//! The three estimation architectures.
//!
//! - sequential: N channel applications on one probe prepared in |+>;
//! - ancilla-assisted: the probe is half of a Bell pair, only the probe
//!   traverses the channel, and the pair is interrogated jointly;
//! - parallel-entangled: one channel application per qubit of an N-qubit
//!   GHZ state, whose output keeps an X-shaped matrix (diagonal plus the
//!   extreme anti-corner) that admits a closed-form eigensystem.
//!
//! Every closed form here is checked against a dense brute-force
//! construction at small sizes; the closed forms themselves evaluate in log
//! space and stay finite far beyond where the dense path gives out.

use num_complex::Complex64;

use crate::channel::{kraus_vmf, liouville_vmf, ChannelParams, KrausSet, LiouvilleMatrix};
use crate::estimation::{
    observable_sensitivity, sld, state_with_numeric_derivative, Sensitivity, StateWithDerivative,
};
use crate::linalg::{
    bloch_from_state, hermitian_eig, kron, pauli_x, BlochVector, ComplexMatrix, DensityMatrix,
};
use crate::tol;
use crate::vmf::{kappa_coth_minus_one, VmfParams};
use crate::{Error, Result};

/// N-fold application of a single-qubit channel.
pub fn evolve_sequential(rho0: &DensityMatrix, n: u32, kraus: &KrausSet) -> Result<DensityMatrix> {
    if rho0.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho0.dim(),
        });
    }
    let mut m = rho0.matrix().clone();
    for _ in 0..n {
        m = kraus.apply_matrix(&m);
    }
    DensityMatrix::new(m.hermitize())
}

/// Sign of the Bell preparation (|00> ± |11>)/sqrt(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellSign {
    Plus,
    Minus,
}

/// Probe-ancilla pair after N one-sided channel applications.
///
/// Both single-qubit marginals stay maximally mixed for every N; the
/// constructor enforces that.
#[derive(Debug, Clone)]
pub struct AncillaState {
    rho: DensityMatrix,
}

impl AncillaState {
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: rho.dim(),
            });
        }
        let m = rho.matrix();
        let mixed = DensityMatrix::maximally_mixed(2);
        let dev = ptrace_second(m)
            .max_abs_diff(mixed.matrix())
            .max(ptrace_first(m).max_abs_diff(mixed.matrix()));
        if dev > tol::ANCILLA_MARGINAL {
            return Err(Error::InvalidStatePair {
                detail: format!("ancilla marginals deviate from 1/2 by {dev:.3e}"),
            });
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }
}

/// Trace out the second qubit of a two-qubit matrix.
pub fn ptrace_second(m: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(m.dim(), 4);
    let mut out = ComplexMatrix::zeros(2);
    for a in 0..2 {
        for b in 0..2 {
            out[(a, b)] = m[(2 * a, 2 * b)] + m[(2 * a + 1, 2 * b + 1)];
        }
    }
    out
}

/// Trace out the first qubit of a two-qubit matrix.
pub fn ptrace_first(m: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(m.dim(), 4);
    let mut out = ComplexMatrix::zeros(2);
    for a in 0..2 {
        for b in 0..2 {
            out[(a, b)] = m[(a, b)] + m[(2 + a, 2 + b)];
        }
    }
    out
}

fn bell_projector(sign: BellSign) -> DensityMatrix {
    let s = match sign {
        BellSign::Plus => 1.0,
        BellSign::Minus => -1.0,
    };
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::pure(&[
        Complex64::new(inv, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(s * inv, 0.0),
    ])
    .expect("Bell ket is normalized")
}

fn evolve_ancilla_matrix(n: u32, channel: &LiouvilleMatrix, sign: BellSign) -> ComplexMatrix {
    // The two-qubit superoperator is the one-qubit Liouville matrix
    // tensored with the identity on the ancilla indices: for each fixed
    // ancilla index pair (a, a'), the probe sector transforms by K^N.
    let kn = channel.pow(n);
    let bell = bell_projector(sign);
    let mut out = ComplexMatrix::zeros(4);
    for a in 0..2 {
        for a_prime in 0..2 {
            let sector: Vec<Complex64> = (0..4)
                .map(|qq| {
                    let (q, q_prime) = (qq / 2, qq % 2);
                    bell.matrix()[(2 * q + a, 2 * q_prime + a_prime)]
                })
                .collect();
            let image = kn.apply_vec(&sector);
            for (qq, value) in image.into_iter().enumerate() {
                let (q, q_prime) = (qq / 2, qq % 2);
                out[(2 * q + a, 2 * q_prime + a_prime)] = value;
            }
        }
    }
    out.hermitize()
}

/// (channel ⊗ 1)^N on a Bell pair; only the first qubit is noisy.
pub fn evolve_with_ancilla(
    n: u32,
    channel: &LiouvilleMatrix,
    sign: BellSign,
) -> Result<AncillaState> {
    AncillaState::new(DensityMatrix::new(evolve_ancilla_matrix(n, channel, sign))?)
}

/// lambda_par^n with explicit sign tracking, finite for any magnitude.
fn signed_pow(base: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if base == 0.0 {
        return 0.0;
    }
    let mag = (n as f64 * base.abs().ln()).exp();
    if base < 0.0 && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Closed-form QFI of the ancilla-assisted protocol.
///
/// Four additive pieces: two population/coherence mixtures `D_+` and `D_-`,
/// a rotation term carried by the Bell coherence, and a longitudinal term
/// that vanishes identically for channels with no population leakage.
pub fn qfi_ancilla_closed(n: u32, c: &ChannelParams) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let lp = c.lambda_perp;
    if !(lp > 0.0 && lp <= 1.0 + tol::CP_SLACK) {
        return Err(Error::NotContractive { lambda_perp: lp });
    }
    let nf = n as f64;
    let lpar_n = signed_pow(c.lambda_par, n);
    let lpar_n_minus_1 = signed_pow(c.lambda_par, n - 1);
    let lp_n = lp.powi(n as i32);
    let lp_n_minus_1 = lp.powi(n as i32 - 1);

    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let numerator =
            (2.0 * lp_n_minus_1 * c.d_lambda_perp + sign * lpar_n_minus_1 * c.d_lambda_par).powi(2);
        let denominator = 1.0 + sign * 2.0 * lp_n + lpar_n;
        if denominator.abs() <= tol::DENOMINATOR_FLOOR {
            if numerator <= tol::DENOMINATOR_FLOOR {
                continue;
            }
            return Err(Error::DegenerateDenominator {
                detail: format!("D_{sign} term at N = {n}"),
            });
        }
        total += numerator / denominator;
    }

    total += 8.0 * lp_n * lp_n * c.d_g * c.d_g / (1.0 + lpar_n);

    let longitudinal_gap = 1.0 - lpar_n;
    if longitudinal_gap.abs() <= tol::KRAUS_CLAMP {
        if c.d_lambda_par != 0.0 {
            // The gap collapses only at lambda_par = 1; expand it to leading
            // order there rather than dividing by a rounding residue.
            let linear_gap = nf * (1.0 - c.lambda_par);
            if linear_gap.abs() <= tol::DENOMINATOR_FLOOR {
                return Err(Error::DegenerateDenominator {
                    detail: format!(
                        "longitudinal term with lambda_par = {} at N = {n}",
                        c.lambda_par
                    ),
                });
            }
            total += 2.0 * lpar_n_minus_1 * lpar_n_minus_1 * c.d_lambda_par * c.d_lambda_par
                / linear_gap;
        }
    } else {
        total += 2.0 * lpar_n_minus_1 * lpar_n_minus_1 * c.d_lambda_par * c.d_lambda_par
            / longitudinal_gap;
    }

    Ok(0.25 * nf * nf * total)
}

/// The joint Bell observable |Psi+><Psi+| - |Psi-><Psi-| = |00><11| + |11><00|.
pub fn bell_observable() -> ComplexMatrix {
    let mut o = ComplexMatrix::zeros(4);
    o[(0, 3)] = Complex64::new(1.0, 0.0);
    o[(3, 0)] = Complex64::new(1.0, 0.0);
    o
}

fn ancilla_pair(n: u32, p: &VmfParams) -> Result<StateWithDerivative> {
    let kappa = p.kappa;
    state_with_numeric_derivative(
        move |x| {
            let channel = liouville_vmf(&VmfParams::new(x, kappa)?)?;
            Ok(evolve_ancilla_matrix(n, &channel, BellSign::Plus))
        },
        p.phi,
    )
}

/// Sensitivity of the joint Bell-projector difference on the evolved
/// probe-ancilla pair.
pub fn bell_observable_sensitivity(n: u32, p: &VmfParams) -> Result<Sensitivity> {
    observable_sensitivity(&ancilla_pair(n, p)?, &bell_observable())
}

/// Sensitivity of the separable sigma_x ⊗ sigma_x measurement on the
/// evolved probe-ancilla pair; coincides with the unassisted single-qubit
/// sigma_x sensitivity.
pub fn separable_sensitivity_ancilla(n: u32, p: &VmfParams) -> Result<Sensitivity> {
    let o = kron(&pauli_x(), &pauli_x());
    observable_sensitivity(&ancilla_pair(n, p)?, &o)
}

/// N-qubit X-state: a real diagonal plus one complex anti-corner element.
#[derive(Debug, Clone, PartialEq)]
pub struct XStateN {
    n_qubits: u32,
    diagonal: Vec<f64>,
    corner: Complex64,
}

impl XStateN {
    pub fn new(n_qubits: u32, diagonal: Vec<f64>, corner: Complex64) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if diagonal.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: diagonal.len(),
            });
        }
        if let Some(&bad) = diagonal.iter().find(|&&d| d < -tol::XSTATE_POSITIVITY) {
            return Err(Error::NegativeEigenvalue { value: bad });
        }
        let trace: f64 = diagonal.iter().sum();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::TraceDeviation {
                deviation: (trace - 1.0).abs(),
            });
        }
        if diagonal[0] * diagonal[dim - 1] < corner.norm_sqr() - tol::XSTATE_POSITIVITY {
            return Err(Error::NegativeEigenvalue {
                value: diagonal[0] * diagonal[dim - 1] - corner.norm_sqr(),
            });
        }
        Ok(Self {
            n_qubits,
            diagonal,
            corner,
        })
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn corner(&self) -> Complex64 {
        self.corner
    }

    /// Dense matrix; exponential in the qubit count, intended for the
    /// brute-force cross-checks at small N.
    pub fn to_dense(&self) -> ComplexMatrix {
        let dim = self.diagonal.len();
        let mut m = ComplexMatrix::zeros(dim);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m[(0, dim - 1)] = self.corner;
        m[(dim - 1, 0)] = self.corner.conj();
        m
    }
}

/// Bit-flip weight from the channel triple: alpha = (1 - lambda_par)/2.
pub fn alpha_from_channel(c: &ChannelParams) -> f64 {
    c.alpha()
}

/// The same weight straight from the distribution parameters:
/// `2 (kappa coth kappa - 1) sin^2(phi) / kappa^2`.
pub fn alpha_vmf(p: &VmfParams) -> Result<f64> {
    if p.kappa < 0.0 {
        return Err(Error::InvalidKappa {
            kappa: p.kappa,
            requirement: "kappa >= 0",
        });
    }
    let ratio = if p.kappa < 1e-3 {
        // (kappa coth kappa - 1)/kappa^2 -> 1/3 at the uniform point
        1.0 / 3.0 - p.kappa * p.kappa / 45.0
    } else {
        kappa_coth_minus_one(p.kappa) / (p.kappa * p.kappa)
    };
    Ok(2.0 * ratio * p.phi.sin().powi(2))
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if !(-tol::XSTATE_POSITIVITY..=1.0 + tol::XSTATE_POSITIVITY).contains(&alpha) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    Ok(alpha.clamp(0.0, 1.0))
}

/// Output of one channel application per qubit of an N-qubit GHZ state.
///
/// Each diagonal entry mixes the two GHZ branches with binomial weights in
/// alpha; the anti-corner carries S^N. Memory is 2^N, so this is the exact
/// state for moderate N — the closed-form QFI below never materializes it.
pub fn ghz_output_state(n: u32, c: &ChannelParams) -> Result<XStateN> {
    assert!(n >= 1, "the parallel setting needs at least one probe");
    let alpha = check_alpha(c.alpha())?;
    let dim = 1usize << n;
    let mut diagonal = Vec::with_capacity(dim);
    for m in 0..dim {
        let h = (m as u64).count_ones() as i32;
        let d = 0.5
            * (alpha.powi(n as i32 - h) * (1.0 - alpha).powi(h)
                + alpha.powi(h) * (1.0 - alpha).powi(n as i32 - h));
        diagonal.push(d);
    }
    let corner = 0.5 * Complex64::from_polar(c.s.norm().powi(n as i32), n as f64 * c.s.arg());
    XStateN::new(n, diagonal, corner)
}

/// `sum_i (1 ⊗ K_i ⊗ 1) m (1 ⊗ K_i ⊗ 1)^dag` with the 2x2 operators acting
/// on one qubit of an n-qubit matrix, by mixing index pairs in place
/// instead of forming the 2^n x 2^n lifted operators.
fn apply_kraus_on_qubit(
    m: &ComplexMatrix,
    n_qubits: u32,
    qubit: u32,
    kraus: &KrausSet,
) -> ComplexMatrix {
    let dim = 1usize << n_qubits;
    debug_assert_eq!(m.dim(), dim);
    // Qubit 0 is the leftmost tensor factor, i.e. the highest bit.
    let mask = 1usize << (n_qubits - 1 - qubit);
    let mut out = ComplexMatrix::zeros(dim);
    let mut sandwich = ComplexMatrix::zeros(dim);
    for k in kraus.operators() {
        let (k00, k01, k10, k11) = (k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]);
        // rows: sandwich = K m
        for r in 0..dim {
            if r & mask != 0 {
                continue;
            }
            let r_hi = r | mask;
            for c in 0..dim {
                let lo = m[(r, c)];
                let hi = m[(r_hi, c)];
                sandwich[(r, c)] = k00 * lo + k01 * hi;
                sandwich[(r_hi, c)] = k10 * lo + k11 * hi;
            }
        }
        // columns: out += sandwich K^dag
        for c in 0..dim {
            if c & mask != 0 {
                continue;
            }
            let c_hi = c | mask;
            for r in 0..dim {
                let lo = sandwich[(r, c)];
                let hi = sandwich[(r, c_hi)];
                out[(r, c)] += lo * k00.conj() + hi * k01.conj();
                out[(r, c_hi)] += lo * k10.conj() + hi * k11.conj();
            }
        }
    }
    out
}

/// Dense reference evolution: the channel applied qubit-by-qubit to the
/// full 2^N x 2^N GHZ projector. The oracle for [`ghz_output_state`] and
/// [`qfi_parallel_closed`].
pub fn evolve_ghz_brute(n: u32, kraus: &KrausSet) -> Result<DensityMatrix> {
    assert!(n >= 1);
    let mut m = DensityMatrix::ghz(n as usize).matrix().clone();
    for qubit in 0..n {
        m = apply_kraus_on_qubit(&m, n, qubit, kraus);
    }
    DensityMatrix::new(m.hermitize())
}

/// Eigensystem of an X-state without dense diagonalization.
///
/// The interior basis states are already eigenvectors; only the 2x2 corner
/// block mixes |0...0> with |1...1>.
#[derive(Debug, Clone)]
pub struct XStateEigensystem {
    /// All 2^N eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// The two corner eigenpairs as (eigenvalue, amplitudes on
    /// (|0...0>, |1...1>)), lower eigenvalue first.
    pub corner_pairs: [(f64, [Complex64; 2]); 2],
}

pub fn xstate_eigensystem(x: &XStateN) -> XStateEigensystem {
    let dim = x.diagonal.len();
    let d_first = x.diagonal[0];
    let d_last = x.diagonal[dim - 1];
    let mid = 0.5 * (d_first + d_last);
    let radius = (0.25 * (d_first - d_last).powi(2) + x.corner.norm_sqr()).sqrt();
    let lo = mid - radius;
    let hi = mid + radius;

    let corner_vec = |eigenvalue: f64| -> [Complex64; 2] {
        if x.corner.norm() <= f64::EPSILON {
            if (eigenvalue - d_first).abs() <= (eigenvalue - d_last).abs() {
                return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            }
            return [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        }
        let v0 = x.corner;
        let v1 = Complex64::new(eigenvalue - d_first, 0.0);
        let norm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        [v0 / norm, v1 / norm]
    };

    let mut eigenvalues: Vec<f64> = Vec::with_capacity(dim);
    eigenvalues.extend(x.diagonal[1..dim - 1].iter().copied());
    eigenvalues.push(lo);
    eigenvalues.push(hi);
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());

    XStateEigensystem {
        eigenvalues,
        corner_pairs: [(lo, corner_vec(lo)), (hi, corner_vec(hi))],
    }
}

/// Closed-form QFI of the parallel-entangled GHZ protocol.
///
/// The corner block contributes a sequential-like term built from `S^N`;
/// the interior diagonal contributes a binomial sum that grows linearly in
/// N and survives at large N. Both are evaluated in log space, so the
/// expression stays exact far beyond the reach of the dense oracle.
pub fn qfi_parallel_closed(n: u32, c: &ChannelParams) -> Result<f64> {
    assert!(n >= 1);
    let alpha = check_alpha(c.alpha())?;
    let s_mag = c.s.norm();
    if !(s_mag > 0.0 && s_mag < 1.0) {
        return Err(Error::NotContractive { lambda_perp: s_mag });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        // alpha hits 0 only at phi = 0 where the corner denominators vanish
        return Err(Error::PhiTooSmall {
            min: tol::PHI_MIN_PARALLEL,
        });
    }
    let nf = n as f64;
    let d_alpha = c.d_alpha();
    let ln_a = alpha.ln();
    let ln_b = (1.0 - alpha).ln();

    // Corner block: eigenvalues d0 ± |corner| with d0 = ((1-a)^N + a^N)/2.
    let pow_a_n = (nf * ln_a).exp();
    let pow_b_n = (nf * ln_b).exp();
    let d0 = 0.5 * (pow_b_n + pow_a_n);
    let half_s_n = 0.5 * s_mag.powi(n as i32);
    let p_plus = d0 + half_s_n;
    let p_minus = d0 - half_s_n;
    if p_minus <= tol::DENOMINATOR_FLOOR || d0 <= tol::DENOMINATOR_FLOOR {
        return Err(Error::PhiTooSmall {
            min: tol::PHI_MIN_PARALLEL,
        });
    }
    let d_d0 = 0.5 * d_alpha * nf * (((nf - 1.0) * ln_a).exp() - ((nf - 1.0) * ln_b).exp());
    let coherence_rate = 0.5 * nf * s_mag.powi(n as i32 - 1) * c.d_s_mag();
    let relative = c.nu - c.mu;
    let along = coherence_rate * relative.cos();
    let across = coherence_rate * relative.sin();
    let corner = (d_d0 + along).powi(2) / p_plus
        + (d_d0 - along).powi(2) / p_minus
        + 2.0 * across * across / d0;

    // Interior diagonal, grouped by Hamming weight k with binomial
    // multiplicity. Everything is scaled by exp(ln C(N,k) + max exponent)
    // so no intermediate ever overflows or underflows.
    let mut interior = 0.0;
    let mut ln_choose = (nf).ln(); // ln C(N, 1)
    for k in 1..n {
        let kf = k as f64;
        let ln_w1 = (nf - kf - 1.0) * ln_a + (kf - 1.0) * ln_b;
        let ln_w2 = (kf - 1.0) * ln_a + (nf - kf - 1.0) * ln_b;
        let ln_max = ln_w1.max(ln_w2);
        let r1 = (ln_w1 - ln_max).exp();
        let r2 = (ln_w2 - ln_max).exp();
        let c1 = (nf - kf) - nf * alpha;
        let c2 = kf - nf * alpha;
        let scale = (ln_choose + ln_max).exp();
        interior += scale * d_alpha * d_alpha * (r1 * c1 + r2 * c2).powi(2)
            / (2.0 * alpha * (1.0 - alpha) * (r1 + r2));
        ln_choose += ((nf - kf) / (kf + 1.0)).ln();
    }

    Ok(corner + interior)
}

/// Sensitivity of the separable sigma_x^(⊗N) measurement, from the X-state
/// matrix elements: the expectation is carried entirely by the anti-corner,
/// `<O> = Re(S^N)`, and `O^2 = 1`.
pub fn sigma_x_tensor_sensitivity(n: u32, c: &ChannelParams) -> Result<Sensitivity> {
    assert!(n >= 1);
    let s_mag = c.s.norm();
    if s_mag > 1.0 + tol::CP_SLACK {
        return Err(Error::NotContractive { lambda_perp: s_mag });
    }
    check_alpha(c.alpha())?;
    let nf = n as f64;
    let mean = s_mag.min(1.0).powi(n as i32) * (nf * c.mu).cos();
    let slope =
        nf * s_mag.min(1.0).powi(n as i32 - 1) * c.d_s_mag() * ((nf - 1.0) * c.mu + c.nu).cos();
    let variance = 1.0 - mean * mean;
    if variance <= tol::VARIANCE_FLOOR {
        if slope.abs() <= tol::PROBABILITY_SLOPE_FLOOR {
            return Ok(Sensitivity::Value(0.0));
        }
        return Ok(Sensitivity::Indeterminate);
    }
    Ok(Sensitivity::Value(slope * slope / variance))
}

/// One row of the sequential-probe trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryPoint {
    pub n: u32,
    pub bloch: BlochVector,
    /// Equatorial angle of the SLD's positive eigenvector; 0 by convention
    /// where the state carries no phase information yet.
    pub sld_angle: f64,
}

/// Bloch-plane trajectory of the sequential probe with the optimal
/// measurement direction at every round.
///
/// The probe spirals toward the center while the optimal basis rotates
/// with it; a fixed sigma_x basis periodically aligns with and crosses it,
/// which is exactly the oscillation of the sigma_x sensitivity.
pub fn bloch_trajectory(n_max: u32, p: &VmfParams) -> Result<Vec<TrajectoryPoint>> {
    let h = tol::STATE_DERIV_STEP;
    let offsets = [-2.0 * h, -h, -0.5 * h, 0.0, 0.5 * h, h, 2.0 * h];
    let mut kraus_sets = Vec::with_capacity(offsets.len());
    for off in offsets {
        kraus_sets.push(kraus_vmf(&VmfParams::new(p.phi + off, p.kappa)?)?);
    }
    let mut states: Vec<ComplexMatrix> = (0..offsets.len())
        .map(|_| DensityMatrix::plus_state().matrix().clone())
        .collect();

    let mut points = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        if n > 0 {
            for (state, kraus) in states.iter_mut().zip(&kraus_sets) {
                *state = kraus.apply_matrix(state);
            }
        }
        let rho = DensityMatrix::new(states[3].hermitize())?;
        let bloch = bloch_from_state(&rho)?;
        // Same Richardson pair of stencils as numeric_state_derivative,
        // applied to the seven states advanced in lockstep.
        let coarse = states[5]
            .sub(&states[1])
            .scale(Complex64::new(8.0 / (12.0 * h), 0.0))
            .add(
                &states[0]
                    .sub(&states[6])
                    .scale(Complex64::new(1.0 / (12.0 * h), 0.0)),
            );
        let fine = states[4]
            .sub(&states[2])
            .scale(Complex64::new(8.0 / (6.0 * h), 0.0))
            .add(
                &states[1]
                    .sub(&states[5])
                    .scale(Complex64::new(1.0 / (6.0 * h), 0.0)),
            );
        let mut drho = fine
            .scale(Complex64::new(16.0 / 15.0, 0.0))
            .sub(&coarse.scale(Complex64::new(1.0 / 15.0, 0.0)))
            .hermitize();
        let excess = drho.trace().re / 2.0;
        drho[(0, 0)] -= Complex64::new(excess, 0.0);
        drho[(1, 1)] -= Complex64::new(excess, 0.0);

        let sld_angle = if drho.max_abs() < 1e-12 {
            0.0
        } else {
            let pair = StateWithDerivative::new(rho, drho)?;
            let l = sld(&pair)?;
            let (_, v) = hermitian_eig(&l)?;
            // positive eigenvector = last column (ascending order)
            let a = v[(0, 1)];
            let b = v[(1, 1)];
            let coherence = a * b.conj();
            (-2.0 * coherence.im).atan2(2.0 * coherence.re)
        };
        points.push(TrajectoryPoint {
            n,
            bloch,
            sld_angle,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_params_vmf, liouville_from_params};
    use crate::estimation::{qfi_eigen, qfi_sequential_vmf, sigma_x_sensitivity_closed};
    use crate::linalg::vectorize;

    fn reference() -> (VmfParams, ChannelParams, KrausSet) {
        let p = VmfParams::new(0.1, 1.0).unwrap();
        let c = channel_params_vmf(&p).unwrap();
        let k = kraus_vmf(&p).unwrap();
        (p, c, k)
    }

    /// Dense reference for the one-sided evolution: kron(K_i, 1) applied
    /// round by round.
    fn evolve_ancilla_kraus(n: u32, kraus: &KrausSet, sign: BellSign) -> ComplexMatrix {
        let id = ComplexMatrix::identity(2);
        let lifted: Vec<ComplexMatrix> = kraus.operators().iter().map(|k| kron(k, &id)).collect();
        let mut m = bell_projector(sign).matrix().clone();
        for _ in 0..n {
            let mut next = ComplexMatrix::zeros(4);
            for op in &lifted {
                next = next.add(&op.mul(&m).mul(&op.dagger()));
            }
            m = next;
        }
        m.hermitize()
    }

    #[test]
    fn ancilla_liouville_sectors_match_the_kraus_oracle() {
        let (p, _, k) = reference();
        let channel = liouville_vmf(&p).unwrap();
        for n in [0u32, 1, 4, 19] {
            let fast = evolve_with_ancilla(n, &channel, BellSign::Plus).unwrap();
            let dense = evolve_ancilla_kraus(n, &k, BellSign::Plus);
            assert!(fast.rho().matrix().max_abs_diff(&dense) < 1e-12, "n={n}");
        }
    }

    fn ghz_pair_brute(n: u32, p: &VmfParams) -> StateWithDerivative {
        let kappa = p.kappa;
        state_with_numeric_derivative(
            move |x| {
                let kraus = kraus_vmf(&VmfParams::new(x, kappa)?)?;
                Ok(evolve_ghz_brute(n, &kraus)?.matrix().clone())
            },
            p.phi,
        )
        .unwrap()
    }

    #[test]
    fn sequential_zero_rounds_is_identity() {
        let (_, _, k) = reference();
        let rho = DensityMatrix::plus_state();
        let out = evolve_sequential(&rho, 0, &k).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn sequential_fixes_maximally_mixed_and_loses_purity() {
        let (_, _, k) = reference();
        let mixed = DensityMatrix::maximally_mixed(2);
        let out = evolve_sequential(&mixed, 7, &k).unwrap();
        assert!(out.matrix().max_abs_diff(mixed.matrix()) < 1e-12);

        let mut purity_prev = 1.0;
        for n in 1..=30 {
            let purity = evolve_sequential(&DensityMatrix::plus_state(), n, &k)
                .unwrap()
                .purity();
            assert!(purity <= purity_prev + 1e-12, "n={n}");
            purity_prev = purity;
        }
    }

    #[test]
    fn sequential_coherence_follows_the_liouville_power() {
        let (_, c, k) = reference();
        for n in [1u32, 5, 40, 120] {
            let out = evolve_sequential(&DensityMatrix::plus_state(), n, &k).unwrap();
            let expect = 0.5 * Complex64::from_polar(c.s.norm().powi(n as i32), n as f64 * c.mu);
            assert!(
                (out.matrix()[(0, 1)] - expect).norm() < 1e-10,
                "n={n}: {} vs {expect}",
                out.matrix()[(0, 1)]
            );
            // and the full map equals the n-th Liouville power
            let liou_n = liouville_from_params(&c).unwrap().pow(n);
            let vec_in = vectorize(&DensityMatrix::plus_state()).unwrap();
            let vec_out = liou_n.apply_vec(&vec_in.v);
            assert!((vec_out[1] - out.matrix()[(0, 1)]).norm() < 1e-9);
        }
    }

    #[test]
    fn ancilla_zero_rounds_is_the_bell_projector() {
        let (p, _, _) = reference();
        let channel = liouville_vmf(&p).unwrap();
        let out = evolve_with_ancilla(0, &channel, BellSign::Plus).unwrap();
        assert!(
            out.rho()
                .matrix()
                .max_abs_diff(bell_projector(BellSign::Plus).matrix())
                < 1e-15
        );
    }

    #[test]
    fn ancilla_marginals_stay_maximally_mixed() {
        let (p, _, _) = reference();
        let channel = liouville_vmf(&p).unwrap();
        for n in [1u32, 3, 17, 60] {
            let out = evolve_with_ancilla(n, &channel, BellSign::Plus).unwrap();
            let mixed = DensityMatrix::maximally_mixed(2).matrix().clone();
            assert!(ptrace_first(out.rho().matrix()).max_abs_diff(&mixed) < 1e-10);
            assert!(ptrace_second(out.rho().matrix()).max_abs_diff(&mixed) < 1e-10);
        }
    }

    #[test]
    fn ancilla_corner_coherence_is_half_s_to_the_n() {
        let (p, c, _) = reference();
        let channel = liouville_vmf(&p).unwrap();
        for (sign, expected_sign) in [(BellSign::Plus, 1.0), (BellSign::Minus, -1.0)] {
            let out = evolve_with_ancilla(9, &channel, sign).unwrap();
            let expect =
                expected_sign * 0.5 * Complex64::from_polar(c.s.norm().powi(9), 9.0 * c.mu);
            assert!((out.rho().matrix()[(0, 3)] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn ancilla_closed_form_matches_the_dense_oracle() {
        let (p, c, _) = reference();
        for n in [1u32, 2, 7, 23, 60] {
            let closed = qfi_ancilla_closed(n, &c).unwrap();
            let brute = qfi_eigen(&ancilla_pair(n, &p).unwrap()).unwrap();
            assert!((closed - brute).abs() < 1e-6, "n={n}: {closed} vs {brute}");
        }
    }

    #[test]
    fn ancilla_closed_form_noiseless_limit() {
        let c = ChannelParams::new(1.0, 1.0, 0.3, 0.0, 0.0, 2.0).unwrap();
        for n in [1u32, 5, 12] {
            let f = qfi_ancilla_closed(n, &c).unwrap();
            assert!((f - 4.0 * (n as f64).powi(2)).abs() < 1e-9, "n={n}: {f}");
        }
    }

    #[test]
    fn ancilla_dominates_the_single_probe() {
        let (_, c, _) = reference();
        let mut max_anc = 0.0f64;
        let mut max_seq = 0.0f64;
        for n in 1..=200 {
            max_anc = max_anc.max(qfi_ancilla_closed(n, &c).unwrap());
            max_seq = max_seq.max(qfi_sequential_vmf(n, &c).unwrap());
            assert!(
                qfi_ancilla_closed(n, &c).unwrap() >= qfi_sequential_vmf(n, &c).unwrap() - 1e-9
            );
        }
        assert!(max_anc > max_seq);
    }

    #[test]
    fn bell_sensitivity_matches_the_matrix_element_algebra() {
        let (p, c, _) = reference();
        let channel = liouville_vmf(&p).unwrap();
        let n = 11u32;
        let out = evolve_with_ancilla(n, &channel, BellSign::Plus).unwrap();
        let o = bell_observable();
        let mean = out.rho().matrix().trace_product(&o).re;
        let expect_mean = c.s.norm().powi(n as i32) * (n as f64 * c.mu).cos();
        assert!((mean - expect_mean).abs() < 1e-10);
        let second = out.rho().matrix().trace_product(&o.mul(&o)).re;
        let lpar_n = c.lambda_par.powi(n as i32);
        assert!((second - (1.0 + lpar_n) / 2.0).abs() < 1e-10);

        // and it stays between the separable value and the QFI
        for n in [2u32, 9, 30, 80] {
            let bell = bell_observable_sensitivity(n, &p).unwrap().expect_value();
            let separable = separable_sensitivity_ancilla(n, &p).unwrap().expect_value();
            let qfi = qfi_ancilla_closed(n, &c).unwrap();
            assert!(bell >= separable - 1e-9, "n={n}");
            assert!(bell <= qfi + 1e-9, "n={n}");
        }
    }

    #[test]
    fn bell_sensitivity_is_zero_before_any_round() {
        let (p, _, _) = reference();
        let s = bell_observable_sensitivity(0, &p).unwrap();
        assert_eq!(s, Sensitivity::Value(0.0));
    }

    #[test]
    fn separable_ancilla_equals_single_qubit_sigma_x() {
        let (p, c, _) = reference();
        for n in [1u32, 4, 21, 60] {
            let pair_value = separable_sensitivity_ancilla(n, &p).unwrap().expect_value();
            let single = sigma_x_sensitivity_closed(n, &c).unwrap().expect_value();
            assert!(
                (pair_value - single).abs() < 1e-8,
                "n={n}: {pair_value} vs {single}"
            );
        }
    }

    #[test]
    fn ghz_single_probe_reduces_to_the_sequential_state() {
        let (_, c, k) = reference();
        let x = ghz_output_state(1, &c).unwrap();
        let sequential = evolve_sequential(&DensityMatrix::plus_state(), 1, &k).unwrap();
        assert!(x.to_dense().max_abs_diff(sequential.matrix()) < 1e-12);
    }

    #[test]
    fn ghz_identity_channel_leaves_the_projector() {
        let x = ghz_output_state(5, &ChannelParams::identity()).unwrap();
        assert!(x.to_dense().max_abs_diff(DensityMatrix::ghz(5).matrix()) < 1e-14);
    }

    #[test]
    fn ghz_closed_state_matches_the_brute_force_evolution() {
        let (_, c, k) = reference();
        for n in [2u32, 4] {
            let x = ghz_output_state(n, &c).unwrap();
            let brute = evolve_ghz_brute(n, &k).unwrap();
            assert!(x.to_dense().max_abs_diff(brute.matrix()) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn ghz_trace_and_positivity_hold_up_to_twenty_qubits() {
        // constructor enforces entry positivity and the corner block
        // condition; re-check the trace over a parameter grid
        for &phi in &[0.05, 0.1, 0.3] {
            for &kappa in &[0.5, 1.0, 2.0] {
                let c = channel_params_vmf(&VmfParams::new(phi, kappa).unwrap()).unwrap();
                for n in [1u32, 5, 10, 20] {
                    let x = ghz_output_state(n, &c).unwrap();
                    let trace: f64 = x.diagonal().iter().sum();
                    assert!((trace - 1.0).abs() < 1e-10, "phi={phi} kappa={kappa} n={n}");
                }
            }
        }
    }

    #[test]
    fn alpha_routes_agree() {
        let p = VmfParams::new(0.1, 1.0).unwrap();
        let c = channel_params_vmf(&p).unwrap();
        assert!((alpha_vmf(&p).unwrap() - alpha_from_channel(&c)).abs() < 1e-10);
        assert_eq!(alpha_vmf(&VmfParams::new(0.0, 2.0).unwrap()).unwrap(), 0.0);
        let uniform =
            alpha_vmf(&VmfParams::new(std::f64::consts::FRAC_PI_2, 1e-4).unwrap()).unwrap();
        assert!((uniform - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn parallel_single_probe_equals_sequential_single_round() {
        let (_, c, _) = reference();
        let parallel = qfi_parallel_closed(1, &c).unwrap();
        let sequential = qfi_sequential_vmf(1, &c).unwrap();
        assert!(
            (parallel - sequential).abs() < 1e-9,
            "{parallel} vs {sequential}"
        );
    }

    #[test]
    fn parallel_closed_form_matches_the_dense_oracle_small_n() {
        let (p, c, _) = reference();
        for n in [2u32, 3, 5] {
            let closed = qfi_parallel_closed(n, &c).unwrap();
            let brute = qfi_eigen(&ghz_pair_brute(n, &p)).unwrap();
            assert!((closed - brute).abs() < 1e-6, "n={n}: {closed} vs {brute}");
        }
    }

    #[test]
    fn parallel_scaling_turns_linear() {
        let (_, c, _) = reference();
        let ratio = qfi_parallel_closed(1600, &c).unwrap() / qfi_parallel_closed(800, &c).unwrap();
        assert!((ratio - 2.0).abs() < 0.05, "ratio = {ratio}");
    }

    #[test]
    fn parallel_overtakes_sequential_past_the_peak() {
        let (_, c, _) = reference();
        for n in [200u32, 400, 1000] {
            assert!(
                qfi_parallel_closed(n, &c).unwrap() > qfi_sequential_vmf(n, &c).unwrap(),
                "n={n}"
            );
        }
    }

    #[test]
    fn parallel_rejects_the_identity_point() {
        assert!(matches!(
            qfi_parallel_closed(4, &ChannelParams::identity()),
            Err(Error::NotContractive { .. }) | Err(Error::PhiTooSmall { .. })
        ));
    }

    #[test]
    fn xstate_eigensystem_corner_and_interior() {
        // corner = 0: eigenvalues are exactly the diagonal
        let x = XStateN::new(2, vec![0.4, 0.3, 0.2, 0.1], Complex64::new(0.0, 0.0)).unwrap();
        let eig = xstate_eigensystem(&x);
        for (got, expect) in eig.eigenvalues.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((got - expect).abs() < 1e-15);
        }

        // pure |+> at one qubit: eigenvalues (0, 1)
        let plus = XStateN::new(1, vec![0.5, 0.5], Complex64::new(0.5, 0.0)).unwrap();
        let eig = xstate_eigensystem(&plus);
        assert!(eig.eigenvalues[0].abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xstate_eigensystem_matches_the_dense_solver() {
        let (_, c, _) = reference();
        let x = ghz_output_state(6, &c).unwrap();
        let fast = xstate_eigensystem(&x);
        let (dense, _) = hermitian_eig(&x.to_dense()).unwrap();
        for (a, b) in fast.eigenvalues.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        // corner eigenvectors satisfy the eigen equation
        let m = x.to_dense();
        let dim = m.dim();
        for (val, vec) in fast.corner_pairs {
            let full = {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[0] = vec[0];
                v[dim - 1] = vec[1];
                v
            };
            let image = m.apply_vec(&full);
            for (i, out) in image.iter().enumerate() {
                assert!((out - val * full[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn xstate_rejects_invalid_data() {
        assert!(matches!(
            XStateN::new(2, vec![0.5, 0.5], Complex64::new(0.0, 0.0)),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            XStateN::new(1, vec![0.5, 0.5], Complex64::new(0.6, 0.0)),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn tensor_sigma_x_equals_the_sequential_closed_form() {
        let (_, c, _) = reference();
        for n in 1..=10u32 {
            let tensor = sigma_x_tensor_sensitivity(n, &c).unwrap().expect_value();
            let single = sigma_x_sensitivity_closed(n, &c).unwrap().expect_value();
            assert!((tensor - single).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn tensor_sigma_x_matches_direct_evaluation_on_the_xstate() {
        let (p, c, _) = reference();
        for n in [2u32, 4, 6] {
            let closed = sigma_x_tensor_sensitivity(n, &c).unwrap().expect_value();
            // direct: sigma_x^{⊗n} expectation on the dense evolved state
            let pair = ghz_pair_brute(n, &p);
            let mut o = pauli_x();
            for _ in 1..n {
                o = kron(&o, &pauli_x());
            }
            let direct = observable_sensitivity(&pair, &o).unwrap().expect_value();
            assert!(
                (closed - direct).abs() < 1e-7,
                "n={n}: {closed} vs {direct}"
            );
        }
    }

    #[test]
    fn trajectory_starts_at_plus_and_decays_like_s() {
        let (p, c, _) = reference();
        let points = bloch_trajectory(40, &p).unwrap();
        assert_eq!(points[0].n, 0);
        assert!((points[0].bloch.x - 1.0).abs() < 1e-12);
        assert!(points[0].bloch.y.abs() < 1e-12);
        assert!(points[0].bloch.z.abs() < 1e-12);
        assert_eq!(points[0].sld_angle, 0.0);
        for point in &points {
            let expect = c.s.norm().powi(point.n as i32);
            assert!((point.bloch.norm() - expect).abs() < 1e-10, "n={}", point.n);
        }
        // norms never increase
        for pair in points.windows(2) {
            assert!(pair[1].bloch.norm() <= pair[0].bloch.norm() + 1e-12);
        }
    }

    #[test]
    fn trajectory_sld_angle_advances_by_the_coherence_phase() {
        let (p, c, _) = reference();
        let points = bloch_trajectory(1500, &p).unwrap();
        let wrap = |x: f64| {
            let mut y = x;
            while y > std::f64::consts::PI {
                y -= 2.0 * std::f64::consts::PI;
            }
            while y < -std::f64::consts::PI {
                y += 2.0 * std::f64::consts::PI;
            }
            y
        };
        let advance = wrap(points[1400].sld_angle - points[1399].sld_angle);
        assert!(
            (advance + c.mu).abs() < 1e-6,
            "advance = {advance}, -mu = {}",
            -c.mu
        );
    }
}
