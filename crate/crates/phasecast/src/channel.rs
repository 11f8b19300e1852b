//! The noisy phase-imprinting channel, built three independent ways.
//!
//! One application of the channel rotates the probe by `phi` about an axis
//! drawn from the von Mises-Fisher distribution and averages over the draw:
//!
//! - [`apply_channel_mc`] performs that average literally, by Monte Carlo;
//! - [`kraus_vmf`] realizes the same map exactly through four Kraus
//!   operators in closed form;
//! - [`liouville_from_params`] gives the 4x4 matrix acting on vectorized
//!   states, parameterized by the phase-covariant triple
//!   `(lambda_par, lambda_perp, g)`.
//!
//! [`channel_params_vmf`] extracts that triple together with its phase
//! derivatives, which is all the Fisher-information machinery downstream
//! ever needs. [`process_tomography`] recovers the same data from a black-box
//! channel. The three routes are cross-checked against each other by the
//! test suite and by `validate`.

use num_complex::Complex64;

use crate::deriv;
use crate::linalg::{bloch_from_state, devectorize, ComplexMatrix, DensityMatrix, VectorizedState};
use crate::rng::SplitMix64;
use crate::tol;
use crate::vmf::{check_axis, kappa_coth_minus_one, kappa_csch, sample_vmf, VmfParams};
use crate::{Error, Result};

const SHARDS: usize = 32;

/// U = exp(-i phi n.sigma) = cos(phi) 1 - i sin(phi) (n.sigma).
pub fn generator_unitary(n: &[f64; 3], phi: f64) -> Result<ComplexMatrix> {
    check_axis(n)?;
    let c = phi.cos();
    let s = phi.sin();
    Ok(ComplexMatrix::from_vec(
        2,
        vec![
            Complex64::new(c, -s * n[2]),
            Complex64::new(-s * n[1], -s * n[0]),
            Complex64::new(s * n[1], -s * n[0]),
            Complex64::new(c, s * n[2]),
        ],
    ))
}

fn mc_accumulate(
    rho: &ComplexMatrix,
    p: &VmfParams,
    count: u64,
    rng: &mut SplitMix64,
) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(2);
    for _ in 0..count {
        let axis = sample_vmf(p.kappa, rng).expect("kappa validated by caller");
        let u = generator_unitary(&axis, p.phi).expect("sampled axis is unit");
        acc = acc.add(&u.mul(rho).mul(&u.dagger()));
    }
    acc
}

/// Monte Carlo estimate of the channel action: the sample mean of
/// `U_n rho U_n^dag` over i.i.d. axes.
pub fn apply_channel_mc(
    rho: &DensityMatrix,
    p: &VmfParams,
    samples: u64,
    rng: &mut SplitMix64,
) -> Result<DensityMatrix> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if rho.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho.dim(),
        });
    }
    let acc = mc_accumulate(rho.matrix(), p, samples, rng);
    let mean = acc.scale(Complex64::new(1.0 / samples as f64, 0.0));
    DensityMatrix::new(mean.hermitize())
}

/// Sharded Monte Carlo channel action.
///
/// The sample budget is divided over a fixed number of shards, each seeded by
/// splitting the parent generator, and partial sums are combined in shard
/// order — the result depends only on `(p, samples, seed)`, never on thread
/// scheduling.
pub fn apply_channel_mc_sharded(
    rho: &DensityMatrix,
    p: &VmfParams,
    samples: u64,
    seed: u64,
) -> Result<DensityMatrix> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if rho.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho.dim(),
        });
    }
    let mut parent = SplitMix64::new(seed);
    let mut shard_rngs: Vec<SplitMix64> = (0..SHARDS).map(|_| parent.split()).collect();
    let base = samples / SHARDS as u64;
    let rem = samples % SHARDS as u64;
    let partials: Vec<ComplexMatrix> = std::thread::scope(|scope| {
        let handles: Vec<_> = shard_rngs
            .iter_mut()
            .enumerate()
            .map(|(i, rng)| {
                let count = base + u64::from((i as u64) < rem);
                let rho = rho.matrix();
                scope.spawn(move || mc_accumulate(rho, p, count, rng))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut acc = ComplexMatrix::zeros(2);
    for partial in partials {
        acc = acc.add(&partial);
    }
    let mean = acc.scale(Complex64::new(1.0 / samples as f64, 0.0));
    DensityMatrix::new(mean.hermitize())
}

/// Operator-sum representation: a set `{K_i}` with `sum K_i^dag K_i = 1`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        assert!(!operators.is_empty(), "a Kraus set needs operators");
        let dim = operators[0].dim();
        let mut sum = ComplexMatrix::zeros(dim);
        for k in &operators {
            if k.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: k.dim(),
                });
            }
            sum = sum.add(&k.dagger().mul(k));
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > tol::KRAUS_COMPLETENESS {
            return Err(Error::KrausDomain {
                detail: format!("completeness violated by {dev:.3e}"),
            });
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// sum K_i m K_i^dag on a raw matrix, no state validation.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(m.dim());
        for k in &self.operators {
            acc = acc.add(&k.mul(m).mul(&k.dagger()));
        }
        acc
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.operators[0].dim() {
            return Err(Error::Dimension {
                expected: self.operators[0].dim(),
                got: rho.dim(),
            });
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()).hermitize())
    }
}

/// The three real scalar functions entering the Kraus closed forms.
///
/// `big_a` and `big_b` are evaluated through `kappa coth(kappa) - 1` and
/// `kappa csch(kappa)`, which are algebraically identical to the direct
/// hyperbolic expressions but immune to both the `cosh(2 kappa)` overflow
/// beyond kappa ~ 354 and the catastrophic cancellation below kappa ~ 1e-3.
fn vmf_abc(phi: f64, kappa: f64) -> (f64, f64, Complex64) {
    let p = kappa_coth_minus_one(kappa);
    let sin_phi_sq = phi.sin() * phi.sin();
    let sin_2phi = (2.0 * phi).sin();

    // A = 1 + k^2 - cos(2 phi) - 2 k coth(k) sin^2(phi) = k^2 - 2 P sin^2(phi)
    let big_a = kappa * kappa - 2.0 * p * sin_phi_sq;

    // B^2 = 2 k^2 (cosh(2k) - 2k^2 - 1) csch^2(k) sin^2(2 phi)
    //     = 4 k^2 sin^2(2 phi) (1 - (k csch k)^2)
    let one_minus_kcsch_sq = if kappa < 1e-3 {
        let k2 = kappa * kappa;
        k2 / 3.0 - k2 * k2 / 15.0
    } else {
        let kc = kappa_csch(kappa);
        1.0 - kc * kc
    };
    let big_b = 2.0 * kappa * sin_2phi.abs() * one_minus_kcsch_sq.max(0.0).sqrt();

    // The numerator and denominator of C share a factor sinh(kappa); with it
    // cancelled, C = sqrt(4A^2 - B^2) / (sqrt(2) D) where
    // D = k^2 cos(2 phi) + 2 P sin^2(phi) + i k P sin(2 phi).
    let d = Complex64::new(
        kappa * kappa * (2.0 * phi).cos() + 2.0 * p * sin_phi_sq,
        kappa * p * sin_2phi,
    );
    let disc = (4.0 * big_a * big_a - big_b * big_b).max(0.0);
    let big_c = Complex64::new(disc.sqrt() / std::f64::consts::SQRT_2, 0.0) / d;

    (big_a, big_b, big_c)
}

fn require_positive_kappa(kappa: f64) -> Result<()> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::InvalidKappa {
            kappa,
            requirement: "kappa > 0 (use a small proxy such as 1e-4 for the uniform limit)",
        });
    }
    Ok(())
}

/// Exact Kraus set of the von Mises-Fisher phase-imprinting channel.
pub fn kraus_vmf(p: &VmfParams) -> Result<KrausSet> {
    require_positive_kappa(p.kappa)?;
    let (phi, kappa) = (p.phi, p.kappa);
    let (big_a, big_b, big_c) = vmf_abc(phi, kappa);
    if !big_c.is_finite() {
        return Err(Error::KrausDomain {
            detail: "denominator of C vanished".into(),
        });
    }

    let flip = std::f64::consts::SQRT_2 * phi.sin() * kappa_coth_minus_one(kappa).sqrt() / kappa;

    let plus = 2.0 * big_a + big_b;
    let mut minus = 2.0 * big_a - big_b;
    if minus < 0.0 {
        if minus < -tol::KRAUS_CLAMP * (2.0 * big_a.abs()).max(1.0) {
            return Err(Error::KrausDomain {
                detail: format!("2A - B = {minus:.3e} below the clamp window"),
            });
        }
        minus = 0.0;
    }
    let root_plus = plus.max(0.0).sqrt();
    let root_minus = minus.sqrt();
    let norm = 2.0 * std::f64::consts::SQRT_2 * kappa;
    let k3_11 = (root_plus + root_minus) / norm;
    let k4_11 = (root_plus - root_minus) / norm;
    let corner = big_c / std::f64::consts::SQRT_2;
    let k3_00 = corner * k3_11;
    let k4_00 = -corner * k4_11;

    let zero = Complex64::new(0.0, 0.0);
    let k1 = ComplexMatrix::from_vec(2, vec![zero, zero, Complex64::new(flip, 0.0), zero]);
    let k2 = ComplexMatrix::from_vec(2, vec![zero, Complex64::new(flip, 0.0), zero, zero]);
    let k3 = ComplexMatrix::from_vec(2, vec![k3_00, zero, zero, Complex64::new(k3_11, 0.0)]);
    let k4 = ComplexMatrix::from_vec(2, vec![k4_00, zero, zero, Complex64::new(k4_11, 0.0)]);
    KrausSet::new(vec![k1, k2, k3, k4])
}

/// Phase-covariant channel triple `(lambda_par, lambda_perp, g)` with its
/// phase derivatives and the coherence multiplier `S = lambda_perp e^{-i g}`.
///
/// `mu = arg S` and `nu = arg S'` are the only angles the compact Fisher
/// formulas need; both live on the principal branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub lambda_par: f64,
    pub lambda_perp: f64,
    pub g: f64,
    pub d_lambda_par: f64,
    pub d_lambda_perp: f64,
    pub d_g: f64,
    pub s: Complex64,
    pub mu: f64,
    pub nu: f64,
}

impl ChannelParams {
    /// Assemble params from the triple and its derivatives, deriving the
    /// coherence multiplier and its phases.
    pub fn new(
        lambda_par: f64,
        lambda_perp: f64,
        g: f64,
        d_lambda_par: f64,
        d_lambda_perp: f64,
        d_g: f64,
    ) -> Result<Self> {
        let rotor = Complex64::new(0.0, -g).exp();
        let s = lambda_perp * rotor;
        let s_prime = Complex64::new(d_lambda_perp, -lambda_perp * d_g) * rotor;
        let params = Self {
            lambda_par,
            lambda_perp,
            g,
            d_lambda_par,
            d_lambda_perp,
            d_g,
            s,
            mu: s.arg(),
            nu: s_prime.arg(),
        };
        params.check_cp()?;
        Ok(params)
    }

    fn check_cp(&self) -> Result<()> {
        if self.lambda_par > 1.0 + tol::CP_SLACK
            || 2.0 * self.lambda_perp > 1.0 + self.lambda_par + tol::CP_SLACK
            || self.lambda_perp < 0.0
        {
            return Err(Error::CpViolation {
                lambda_par: self.lambda_par,
                lambda_perp: self.lambda_perp,
            });
        }
        Ok(())
    }

    /// The identity channel with no phase dependence.
    pub fn identity() -> Self {
        Self::new(1.0, 1.0, 0.0, 0.0, 0.0, 0.0).expect("identity channel is CP")
    }

    /// dS/dphi, reconstructed from the stored magnitudes and `nu`.
    pub fn s_prime(&self) -> Complex64 {
        let mag = self.d_s_mag();
        mag * Complex64::new(0.0, self.nu).exp()
    }

    /// |S'| = sqrt((d lambda_perp)^2 + lambda_perp^2 (d g)^2).
    pub fn d_s_mag(&self) -> f64 {
        (self.d_lambda_perp * self.d_lambda_perp
            + self.lambda_perp * self.lambda_perp * self.d_g * self.d_g)
            .sqrt()
    }

    /// Per-qubit bit-flip weight alpha = (1 - lambda_par)/2.
    pub fn alpha(&self) -> f64 {
        0.5 * (1.0 - self.lambda_par)
    }

    pub fn d_alpha(&self) -> f64 {
        -0.5 * self.d_lambda_par
    }
}

fn vmf_s(phi: f64, kappa: f64) -> Complex64 {
    // S = sqrt(4A^2 - B^2) C / (2 sqrt(2) k^2)
    let (big_a, big_b, big_c) = vmf_abc(phi, kappa);
    let disc = (4.0 * big_a * big_a - big_b * big_b).max(0.0);
    big_c * (disc.sqrt() / (2.0 * std::f64::consts::SQRT_2 * kappa * kappa))
}

fn vmf_lambda_par(phi: f64, kappa: f64) -> f64 {
    // 1 - 2 K_{2,01}^2
    let flip_sq = 2.0 * phi.sin() * phi.sin() * kappa_coth_minus_one(kappa) / (kappa * kappa);
    1.0 - 2.0 * flip_sq
}

/// Channel triple, derivatives and coherence phases for the vMF channel.
pub fn channel_params_vmf(p: &VmfParams) -> Result<ChannelParams> {
    require_positive_kappa(p.kappa)?;
    let (phi, kappa) = (p.phi, p.kappa);
    let s = vmf_s(phi, kappa);
    let lambda_perp = s.norm();
    let g = -s.arg();
    let lambda_par = vmf_lambda_par(phi, kappa);

    let d_lambda_par = deriv::derivative(|x| vmf_lambda_par(x, kappa), phi)?;
    let d_lambda_perp = deriv::derivative(|x| vmf_s(x, kappa).norm(), phi)?;
    let d_g = -deriv::derivative_angle(|x| vmf_s(x, kappa).arg(), phi)?;
    let s_prime = deriv::derivative_complex(|x| vmf_s(x, kappa), phi)?;

    let params = ChannelParams {
        lambda_par,
        lambda_perp,
        g,
        d_lambda_par,
        d_lambda_perp,
        d_g,
        s,
        mu: s.arg(),
        nu: s_prime.arg(),
    };
    params.check_cp()?;
    Ok(params)
}

/// 4x4 matrix acting on vectorized single-qubit states.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleMatrix {
    k: ComplexMatrix,
}

impl LiouvilleMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.k
    }

    pub fn apply(&self, vs: &VectorizedState) -> VectorizedState {
        let out = self.k.apply_vec(&vs.v);
        VectorizedState {
            v: [out[0], out[1], out[2], out[3]],
        }
    }

    /// N-fold application as a matrix power.
    pub fn pow(&self, n: u32) -> ComplexMatrix {
        self.k.pow(n)
    }
}

/// The phase-covariant Liouville matrix: populations mix through
/// `(1 ± lambda_par)/2` in the corners, coherences pick up
/// `lambda_perp e^{∓ i g}`.
pub fn liouville_from_params(c: &ChannelParams) -> Result<LiouvilleMatrix> {
    c.check_cp()?;
    let zero = Complex64::new(0.0, 0.0);
    let hi = Complex64::new(0.5 * (1.0 + c.lambda_par), 0.0);
    let lo = Complex64::new(0.5 * (1.0 - c.lambda_par), 0.0);
    let s = c.lambda_perp * Complex64::new(0.0, -c.g).exp();
    let k = ComplexMatrix::from_vec(
        4,
        vec![
            hi,
            zero,
            zero,
            lo, //
            zero,
            s,
            zero,
            zero, //
            zero,
            zero,
            s.conj(),
            zero, //
            lo,
            zero,
            zero,
            hi,
        ],
    );
    Ok(LiouvilleMatrix { k })
}

/// Liouville matrix of the vMF channel straight from the scalar closed
/// forms, without touching the derivative machinery.
pub fn liouville_vmf(p: &VmfParams) -> Result<LiouvilleMatrix> {
    require_positive_kappa(p.kappa)?;
    let s = vmf_s(p.phi, p.kappa);
    let lambda_par = vmf_lambda_par(p.phi, p.kappa);
    let zero = Complex64::new(0.0, 0.0);
    let hi = Complex64::new(0.5 * (1.0 + lambda_par), 0.0);
    let lo = Complex64::new(0.5 * (1.0 - lambda_par), 0.0);
    let k = ComplexMatrix::from_vec(
        4,
        vec![
            hi,
            zero,
            zero,
            lo, //
            zero,
            s,
            zero,
            zero, //
            zero,
            zero,
            s.conj(),
            zero, //
            lo,
            zero,
            zero,
            hi,
        ],
    );
    Ok(LiouvilleMatrix { k })
}

/// Liouville matrix of an arbitrary Kraus set on one qubit:
/// `sum_i K_i ⊗ conj(K_i)` in the row-major vectorization.
pub fn liouville_of_kraus(kraus: &KrausSet) -> LiouvilleMatrix {
    let mut k = ComplexMatrix::zeros(4);
    for op in kraus.operators() {
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        k[(2 * a + b, 2 * c + d)] += op[(a, c)] * op[(b, d)].conj();
                    }
                }
            }
        }
    }
    LiouvilleMatrix { k }
}

/// The 3x3 Bloch-ball distortion: a rotation by `g` in the equatorial plane
/// scaled by `lambda_perp`, and a scaling by `lambda_par` along z.
pub fn bloch_map(c: &ChannelParams) -> [[f64; 3]; 3] {
    let (cos_g, sin_g) = (c.g.cos(), c.g.sin());
    [
        [c.lambda_perp * cos_g, -c.lambda_perp * sin_g, 0.0],
        [c.lambda_perp * sin_g, c.lambda_perp * cos_g, 0.0],
        [0.0, 0.0, c.lambda_par],
    ]
}

/// Choi matrix from a Kraus set: `sum_i (K_i ⊗ 1)|Psi+><Psi+|(K_i ⊗ 1)^dag`.
pub fn choi_from_kraus(kraus: &KrausSet) -> ComplexMatrix {
    let mut choi = ComplexMatrix::zeros(4);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for op in kraus.operators() {
        // (K ⊗ 1)|Psi+> has component K_{ab}/sqrt(2) on |a b>.
        let v = [
            op[(0, 0)] * inv_sqrt2,
            op[(0, 1)] * inv_sqrt2,
            op[(1, 0)] * inv_sqrt2,
            op[(1, 1)] * inv_sqrt2,
        ];
        for i in 0..4 {
            for j in 0..4 {
                choi[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    choi
}

/// Monte Carlo Choi matrix: the sample mean of
/// `(U_n ⊗ 1)|Psi+><Psi+|(U_n ⊗ 1)^dag`, sharded deterministically.
pub fn choi_mc(p: &VmfParams, samples: u64, seed: u64) -> Result<ComplexMatrix> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if p.kappa < 0.0 {
        return Err(Error::InvalidKappa {
            kappa: p.kappa,
            requirement: "kappa >= 0",
        });
    }
    let mut parent = SplitMix64::new(seed);
    let mut shard_rngs: Vec<SplitMix64> = (0..SHARDS).map(|_| parent.split()).collect();
    let base = samples / SHARDS as u64;
    let rem = samples % SHARDS as u64;
    let partials: Vec<ComplexMatrix> = std::thread::scope(|scope| {
        let handles: Vec<_> = shard_rngs
            .iter_mut()
            .enumerate()
            .map(|(i, rng)| {
                let count = base + u64::from((i as u64) < rem);
                scope.spawn(move || {
                    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
                    let mut acc = ComplexMatrix::zeros(4);
                    for _ in 0..count {
                        let axis = sample_vmf(p.kappa, rng).expect("kappa checked");
                        let u = generator_unitary(&axis, p.phi).expect("unit axis");
                        let v = [
                            u[(0, 0)] * inv_sqrt2,
                            u[(0, 1)] * inv_sqrt2,
                            u[(1, 0)] * inv_sqrt2,
                            u[(1, 1)] * inv_sqrt2,
                        ];
                        for row in 0..4 {
                            for col in 0..4 {
                                acc[(row, col)] += v[row] * v[col].conj();
                            }
                        }
                    }
                    acc
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut acc = ComplexMatrix::zeros(4);
    for partial in partials {
        acc = acc.add(&partial);
    }
    Ok(acc.scale(Complex64::new(1.0 / samples as f64, 0.0)))
}

/// Static triple recovered from a black-box channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCovariantTriple {
    pub lambda_par: f64,
    pub lambda_perp: f64,
    pub g: f64,
}

/// Tomograph a single channel instance.
///
/// Probes the images of the maximally mixed state, |0><0|, |+><+| and the
/// +y eigenstate, reads the triple off their Bloch vectors, and rejects the
/// channel if any image contradicts unital phase covariance by more than
/// `covariance_tol` (use [`tol::COVARIANCE`] for exact channels, a looser
/// value for sampled ones).
pub fn tomograph_triple<F>(mut transform: F, covariance_tol: f64) -> Result<PhaseCovariantTriple>
where
    F: FnMut(&DensityMatrix) -> Result<DensityMatrix>,
{
    let mut violation: f64 = 0.0;

    let mixed_img = bloch_from_state(&transform(&DensityMatrix::maximally_mixed(2))?)?;
    violation = violation.max(mixed_img.norm());

    let z_img = bloch_from_state(&transform(&DensityMatrix::basis_state(2, 0))?)?;
    violation = violation.max(z_img.x.hypot(z_img.y));
    let lambda_par = z_img.z;

    let x_img = bloch_from_state(&transform(&DensityMatrix::plus_state())?)?;
    violation = violation.max(x_img.z.abs());
    let lambda_perp = x_img.x.hypot(x_img.y);
    let g = x_img.y.atan2(x_img.x);

    // +y eigenstate: (1 + sigma_y)/2
    let y_state = devectorize(&VectorizedState {
        v: [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.5, 0.0),
        ],
    })?;
    let y_img = bloch_from_state(&transform(&y_state)?)?;
    violation = violation.max((y_img.x + lambda_perp * g.sin()).abs());
    violation = violation.max((y_img.y - lambda_perp * g.cos()).abs());
    violation = violation.max(y_img.z.abs());

    if violation > covariance_tol {
        return Err(Error::CovarianceViolation {
            deviation: violation,
        });
    }
    Ok(PhaseCovariantTriple {
        lambda_par,
        lambda_perp,
        g,
    })
}

/// Full process tomography of a phase-parametrized channel family.
///
/// Tomographs the channel on a five-point stencil around `phi` and fills the
/// derivative fields by fourth-order central differences (the `g` samples
/// are unwrapped across the stencil first).
pub fn process_tomography<F>(mut family: F, phi: f64, covariance_tol: f64) -> Result<ChannelParams>
where
    F: FnMut(f64, &DensityMatrix) -> Result<DensityMatrix>,
{
    let h = 1e-3 * phi.abs().max(1.0);
    let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut triples = Vec::with_capacity(offsets.len());
    for off in offsets {
        let x = phi + off * h;
        triples.push(tomograph_triple(|rho| family(x, rho), covariance_tol)?);
    }
    let center = triples[2];

    // Unwrap g relative to the center sample before differencing.
    let gs: Vec<f64> = triples
        .iter()
        .map(|t| {
            let mut g = t.g;
            while g - center.g > std::f64::consts::PI {
                g -= 2.0 * std::f64::consts::PI;
            }
            while center.g - g > std::f64::consts::PI {
                g += 2.0 * std::f64::consts::PI;
            }
            g
        })
        .collect();

    let stencil = |f: [f64; 5]| (-f[4] + 8.0 * f[3] - 8.0 * f[1] + f[0]) / (12.0 * h);
    let d_lambda_par = stencil([
        triples[0].lambda_par,
        triples[1].lambda_par,
        triples[2].lambda_par,
        triples[3].lambda_par,
        triples[4].lambda_par,
    ]);
    let d_lambda_perp = stencil([
        triples[0].lambda_perp,
        triples[1].lambda_perp,
        triples[2].lambda_perp,
        triples[3].lambda_perp,
        triples[4].lambda_perp,
    ]);
    let d_g = stencil([gs[0], gs[1], gs[2], gs[3], gs[4]]);

    ChannelParams::new(
        center.lambda_par,
        center.lambda_perp,
        center.g,
        d_lambda_par,
        d_lambda_perp,
        d_g,
    )
}
