//! The oracle cross-check suite behind `phasecast validate`.
//!
//! Every check pits one construction against an independent route to the
//! same quantity — Monte Carlo against Kraus, closed forms against dense
//! eigendecompositions, bounds against the quantities they bound — and
//! reports the measured deviation next to its tolerance. A report line is
//! a contract: these are the same invariants the unit tests pin down, run
//! as one reproducible batch from a single seed.

use num_complex::Complex64;

use crate::channel::{
    apply_channel_mc, channel_params_vmf, choi_from_kraus, choi_mc, kraus_vmf,
    liouville_from_params, liouville_vmf, process_tomography, ChannelParams, KrausSet,
};
use crate::estimation::{
    eta_eigenvalues, lower_bound_f, n_opt_estimate, qfi_eigen, qfi_sequential_general,
    qfi_sequential_vmf, sigma_x_sensitivity_closed, state_with_numeric_derivative,
    StateWithDerivative,
};
use crate::linalg::{
    bloch_from_state, hermitian_eig, state_from_bloch, vectorize, BlochVector, ComplexMatrix,
    DensityMatrix,
};
use crate::rng::SplitMix64;
use crate::settings::{
    evolve_ghz_brute, evolve_sequential, evolve_with_ancilla, ghz_output_state, qfi_ancilla_closed,
    qfi_parallel_closed, separable_sensitivity_ancilla, sigma_x_tensor_sensitivity,
    xstate_eigensystem, BellSign,
};
use crate::vmf::{langevin, vmf_density, VmfParams};
use crate::Result;

/// One executed check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.deviation.is_finite() && self.deviation <= self.tolerance
    }
}

const REFERENCE_PHI: f64 = 0.1;
const REFERENCE_KAPPA: f64 = 1.0;

fn reference() -> (VmfParams, ChannelParams, KrausSet) {
    let p = VmfParams::new(REFERENCE_PHI, REFERENCE_KAPPA).expect("valid");
    let c = channel_params_vmf(&p).expect("reference params");
    let k = kraus_vmf(&p).expect("reference kraus");
    (p, c, k)
}

fn random_qubit_state(rng: &mut SplitMix64) -> DensityMatrix {
    loop {
        let r = BlochVector {
            x: rng.next_f64() * 2.0 - 1.0,
            y: rng.next_f64() * 2.0 - 1.0,
            z: rng.next_f64() * 2.0 - 1.0,
        };
        if r.norm() <= 1.0 {
            return state_from_bloch(&r).expect("inside the ball");
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn check_vmf_normalization() -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 1.0, 5.0, 50.0] {
        let integral = simpson(
            |theta| 2.0 * std::f64::consts::PI * vmf_density(theta, kappa).unwrap() * theta.sin(),
            0.0,
            std::f64::consts::PI,
            4_000,
        );
        worst = worst.max((integral - 1.0).abs());
    }
    Ok(CheckReport {
        name: "vmf-normalization-quadrature",
        deviation: worst,
        tolerance: 1e-8,
    })
}

fn check_vmf_langevin_moment() -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 1.0, 5.0] {
        let mean = simpson(
            |theta| {
                2.0 * std::f64::consts::PI
                    * theta.cos()
                    * vmf_density(theta, kappa).unwrap()
                    * theta.sin()
            },
            0.0,
            std::f64::consts::PI,
            4_000,
        );
        worst = worst.max((mean - langevin(kappa)).abs());
    }
    Ok(CheckReport {
        name: "vmf-langevin-moment-quadrature",
        deviation: worst,
        tolerance: 1e-8,
    })
}

fn check_unitality(seed: u64) -> Result<Vec<CheckReport>> {
    let (p, c, k) = reference();
    let mixed = DensityMatrix::maximally_mixed(2);

    let kraus_dev = k.apply(&mixed)?.matrix().max_abs_diff(mixed.matrix());

    let liou = liouville_from_params(&c)?;
    let v = vectorize(&mixed)?;
    let image = liou.apply(&v);
    let liou_dev = image
        .v
        .iter()
        .zip(v.v.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut rng = SplitMix64::new(seed);
    let mc = apply_channel_mc(&mixed, &p, 20_000, &mut rng)?;
    let mc_dev = mc.matrix().max_abs_diff(mixed.matrix());

    Ok(vec![
        CheckReport {
            name: "unitality-kraus",
            deviation: kraus_dev,
            tolerance: 1e-10,
        },
        CheckReport {
            name: "unitality-liouville",
            deviation: liou_dev,
            tolerance: 1e-12,
        },
        CheckReport {
            name: "unitality-monte-carlo",
            deviation: mc_dev,
            tolerance: 1e-12,
        },
    ])
}

fn check_contractivity(seed: u64) -> Result<CheckReport> {
    let mut rng = SplitMix64::new(seed);
    let mut worst = f64::NEG_INFINITY;
    for &kappa in &[0.3, 1.0, 5.0] {
        for &phi in &[0.05, 0.4, 1.2] {
            let k = kraus_vmf(&VmfParams::new(phi, kappa)?)?;
            for _ in 0..20 {
                let rho = random_qubit_state(&mut rng);
                let before = bloch_from_state(&rho)?.norm();
                let after = bloch_from_state(&k.apply(&rho)?)?.norm();
                worst = worst.max(after - before);
            }
        }
    }
    Ok(CheckReport {
        name: "contractivity-bloch-norm",
        deviation: worst.max(0.0),
        tolerance: 1e-12,
    })
}

fn check_phase_covariance(seed: u64) -> Result<CheckReport> {
    let (_, c, _) = reference();
    let k = liouville_from_params(&c)?;
    let mut rng = SplitMix64::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let xi = rng.next_f64() * 2.0 * std::f64::consts::PI;
        let mut rot = ComplexMatrix::identity(4);
        rot[(1, 1)] = Complex64::new(0.0, -2.0 * xi).exp();
        rot[(2, 2)] = Complex64::new(0.0, 2.0 * xi).exp();
        let commutator = k.matrix().mul(&rot).sub(&rot.mul(k.matrix()));
        worst = worst.max(commutator.max_abs());
    }
    Ok(CheckReport {
        name: "phase-covariance-commutant",
        deviation: worst,
        tolerance: 1e-12,
    })
}

fn check_kraus_vs_liouville(seed: u64) -> Result<CheckReport> {
    let (_, c, k) = reference();
    let liou = liouville_from_params(&c)?;
    let mut rng = SplitMix64::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let rho = random_qubit_state(&mut rng);
        let via_kraus = k.apply(&rho)?;
        let image = liou.apply(&vectorize(&rho)?);
        let direct = [
            via_kraus.matrix()[(0, 0)],
            via_kraus.matrix()[(0, 1)],
            via_kraus.matrix()[(1, 0)],
            via_kraus.matrix()[(1, 1)],
        ];
        for (a, b) in direct.iter().zip(image.v.iter()) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(CheckReport {
        name: "representation-kraus-vs-liouville",
        deviation: worst,
        tolerance: 1e-10,
    })
}

fn check_kraus_vs_monte_carlo(seed: u64) -> Result<CheckReport> {
    let (p, _, k) = reference();
    let exact = choi_from_kraus(&k);
    let sampled = choi_mc(&p, 1_000_000, seed)?;
    Ok(CheckReport {
        name: "representation-kraus-vs-monte-carlo-choi",
        deviation: exact.max_abs_diff(&sampled),
        tolerance: 5e-3,
    })
}

fn check_cp_constraints() -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    for &kappa in &[0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        for i in 0..=24 {
            let phi = std::f64::consts::PI * i as f64 / 24.0;
            let c = channel_params_vmf(&VmfParams::new(phi, kappa)?)?;
            worst = worst.max(c.lambda_par - 1.0);
            worst = worst.max(2.0 * c.lambda_perp - 1.0 - c.lambda_par);
            worst = worst.max(c.lambda_perp - 1.0);
        }
    }
    Ok(CheckReport {
        name: "cp-constraints-grid",
        deviation: worst.max(0.0),
        tolerance: 1e-12,
    })
}

fn check_semigroup(seed: u64) -> Result<CheckReport> {
    let (_, c, k) = reference();
    let liou = liouville_from_params(&c)?;
    let mut rng = SplitMix64::new(seed);
    let rho = random_qubit_state(&mut rng);
    let mut worst: f64 = 0.0;
    for n in [1u32, 2, 10, 50, 200] {
        let repeated = evolve_sequential(&rho, n, &k)?;
        let power = liou.pow(n);
        let image = power.apply_vec(&vectorize(&rho)?.v);
        let direct = [
            repeated.matrix()[(0, 0)],
            repeated.matrix()[(0, 1)],
            repeated.matrix()[(1, 0)],
            repeated.matrix()[(1, 1)],
        ];
        for (a, b) in direct.iter().zip(image.iter()) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(CheckReport {
        name: "semigroup-kraus-vs-liouville-power",
        deviation: worst,
        tolerance: 1e-9,
    })
}

fn check_bound_dominance() -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    for &phi in &[0.05, 0.1, 0.3, 1.0] {
        for &kappa in &[0.5, 1.0, 2.0, 5.0] {
            let c = channel_params_vmf(&VmfParams::new(phi, kappa)?)?;
            for n in 1..=500 {
                worst = worst.max(lower_bound_f(n, &c)? - qfi_sequential_general(n, &c)?);
            }
        }
    }
    Ok(CheckReport {
        name: "bound-dominance-grid",
        deviation: worst.max(0.0),
        tolerance: 1e-12,
    })
}

fn sequential_pair(n: u32, p: &VmfParams) -> Result<StateWithDerivative> {
    let kappa = p.kappa;
    state_with_numeric_derivative(
        move |x| {
            let kraus = kraus_vmf(&VmfParams::new(x, kappa)?)?;
            let mut m = DensityMatrix::plus_state().matrix().clone();
            for _ in 0..n {
                m = kraus.apply_matrix(&m);
            }
            Ok(m)
        },
        p.phi,
    )
}

fn check_sequential_closed_vs_eigen() -> Result<CheckReport> {
    let (p, c, _) = reference();
    let mut worst: f64 = 0.0;
    for n in [1u32, 2, 5, 10, 25, 50, 100, 200] {
        let closed = qfi_sequential_vmf(n, &c)?;
        let brute = qfi_eigen(&sequential_pair(n, &p)?)?;
        worst = worst.max((closed - brute).abs());
    }
    Ok(CheckReport {
        name: "sequential-closed-vs-eigendecomposition",
        deviation: worst,
        tolerance: 1e-6,
    })
}

fn check_ancilla_closed_vs_eigen() -> Result<CheckReport> {
    let (p, c, _) = reference();
    let kappa = p.kappa;
    let mut worst: f64 = 0.0;
    for n in [1u32, 5, 20, 45, 60] {
        let closed = qfi_ancilla_closed(n, &c)?;
        let pair = state_with_numeric_derivative(
            |x| {
                let channel = liouville_vmf(&VmfParams::new(x, kappa)?)?;
                Ok(evolve_with_ancilla(n, &channel, BellSign::Plus)?
                    .rho()
                    .matrix()
                    .clone())
            },
            p.phi,
        )?;
        worst = worst.max((closed - qfi_eigen(&pair)?).abs());
    }
    Ok(CheckReport {
        name: "ancilla-closed-vs-eigendecomposition",
        deviation: worst,
        tolerance: 1e-6,
    })
}

fn check_parallel_closed_vs_eigen() -> Result<CheckReport> {
    let (p, c, _) = reference();
    let kappa = p.kappa;
    let mut worst: f64 = 0.0;
    for n in [2u32, 3, 4, 5, 6] {
        let closed = qfi_parallel_closed(n, &c)?;
        let pair = state_with_numeric_derivative(
            |x| {
                let kraus = kraus_vmf(&VmfParams::new(x, kappa)?)?;
                Ok(evolve_ghz_brute(n, &kraus)?.matrix().clone())
            },
            p.phi,
        )?;
        worst = worst.max((closed - qfi_eigen(&pair)?).abs());
    }
    Ok(CheckReport {
        name: "parallel-closed-vs-eigendecomposition",
        deviation: worst,
        tolerance: 1e-6,
    })
}

/// Deviation normalized by the values' own scale: finite differences
/// through an N-step evolution cannot certify absolute agreement finer
/// than ~1e-8 per unit of magnitude, and the sensitivities reach several
/// hundred on this grid.
fn scaled_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn check_separable_equivalence() -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for &phi in &[0.05, 0.1, 0.3] {
        for &kappa in &[0.5, 1.0, 2.0] {
            let p = VmfParams::new(phi, kappa)?;
            let c = channel_params_vmf(&p)?;
            for n in 1..=60 {
                let single = sigma_x_sensitivity_closed(n, &c)?.value();
                let pair = separable_sensitivity_ancilla(n, &p)?.value();
                let tensor = sigma_x_tensor_sensitivity(n, &c)?.value();
                match (single, pair, tensor) {
                    (Some(a), Some(b), Some(t)) => {
                        worst = worst.max(scaled_gap(a, b)).max(scaled_gap(a, t));
                    }
                    _ => {
                        worst = f64::INFINITY;
                    }
                }
            }
        }
    }
    Ok(CheckReport {
        name: "separable-measurement-equivalence",
        deviation: worst,
        tolerance: 1e-8,
    })
}

fn check_eta_vs_matrix_power() -> Result<CheckReport> {
    let (p, c, _) = reference();
    let kappa = p.kappa;
    let liou_at = |x: f64| -> Result<ComplexMatrix> {
        Ok(
            liouville_from_params(&channel_params_vmf(&VmfParams::new(x, kappa)?)?)?
                .matrix()
                .clone(),
        )
    };
    let mut worst: f64 = 0.0;
    for n in [1u32, 5, 20, 85, 200] {
        // fourth-order stencil for d(K^N)/dphi
        let h = 1e-4;
        let power = |x: f64| -> Result<ComplexMatrix> { Ok(liou_at(x)?.pow(n)) };
        let d = power(p.phi + h)?
            .sub(&power(p.phi - h)?)
            .scale(Complex64::new(8.0 / (12.0 * h), 0.0))
            .add(
                &power(p.phi - 2.0 * h)?
                    .sub(&power(p.phi + 2.0 * h)?)
                    .scale(Complex64::new(1.0 / (12.0 * h), 0.0)),
            );
        let gram = d.dagger().mul(&d);
        let (evals, _) = hermitian_eig(&gram)?;
        let top = evals.last().copied().unwrap_or(0.0);
        let eta = eta_eigenvalues(n, &c);
        worst = worst.max((top - eta.eta2.max(eta.eta34)).abs());
    }
    Ok(CheckReport {
        name: "eta-vs-liouville-power-norm",
        deviation: worst,
        tolerance: 1e-6,
    })
}

fn check_tomography_roundtrip() -> Result<CheckReport> {
    let (p, c, _) = reference();
    let kappa = p.kappa;
    let fitted = process_tomography(
        |x, rho| kraus_vmf(&VmfParams::new(x, kappa)?)?.apply(rho),
        p.phi,
        crate::tol::COVARIANCE,
    )?;
    let deviation = (fitted.lambda_par - c.lambda_par)
        .abs()
        .max((fitted.lambda_perp - c.lambda_perp).abs())
        .max((fitted.g - c.g).abs())
        .max((fitted.d_lambda_par - c.d_lambda_par).abs())
        .max((fitted.d_lambda_perp - c.d_lambda_perp).abs())
        .max((fitted.d_g - c.d_g).abs());
    Ok(CheckReport {
        name: "process-tomography-roundtrip",
        deviation,
        tolerance: 1e-8,
    })
}

fn check_xstate_eigensystem() -> Result<CheckReport> {
    let (_, c, _) = reference();
    let x = ghz_output_state(6, &c)?;
    let fast = xstate_eigensystem(&x);
    let (dense, _) = hermitian_eig(&x.to_dense())?;
    let mut worst: f64 = 0.0;
    for (a, b) in fast.eigenvalues.iter().zip(dense.iter()) {
        worst = worst.max((a - b).abs());
    }
    Ok(CheckReport {
        name: "xstate-eigensystem-vs-dense",
        deviation: worst,
        tolerance: 1e-10,
    })
}

fn check_nopt_reference() -> Result<CheckReport> {
    let (_, c, _) = reference();
    let n_opt = n_opt_estimate(&c)?;
    Ok(CheckReport {
        name: "n-opt-reference-point",
        deviation: (n_opt as f64 - 85.0).abs(),
        tolerance: 0.5,
    })
}

fn check_oscillation_frequency() -> Result<CheckReport> {
    let (_, c, _) = reference();
    // Count sign changes of cos(nu + (N-1) mu), the zero-crossing factor of
    // the sigma_x sensitivity, across N in [1, 120].
    let mut crossings = 0u32;
    let mut prev = (c.nu).cos();
    for n in 2..=120u32 {
        let value = (c.nu + (n as f64 - 1.0) * c.mu).cos();
        if value.signum() != prev.signum() {
            crossings += 1;
        }
        prev = value;
    }
    let expected = 119.0 * c.mu.abs() / std::f64::consts::PI;
    Ok(CheckReport {
        name: "sigma-x-oscillation-frequency",
        deviation: (crossings as f64 - expected).abs(),
        tolerance: 1.0,
    })
}

/// Run every registered check with sub-seeds split from `seed`.
pub fn run_all(seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = SplitMix64::new(seed);
    let mut seeds = [0u64; 8];
    for s in &mut seeds {
        *s = rng.next_u64();
    }
    let mut reports = Vec::new();
    reports.push(check_vmf_normalization()?);
    reports.push(check_vmf_langevin_moment()?);
    reports.extend(check_unitality(seeds[0])?);
    reports.push(check_contractivity(seeds[1])?);
    reports.push(check_phase_covariance(seeds[2])?);
    reports.push(check_kraus_vs_liouville(seeds[3])?);
    reports.push(check_kraus_vs_monte_carlo(seeds[4])?);
    reports.push(check_cp_constraints()?);
    reports.push(check_semigroup(seeds[5])?);
    reports.push(check_bound_dominance()?);
    reports.push(check_sequential_closed_vs_eigen()?);
    reports.push(check_ancilla_closed_vs_eigen()?);
    reports.push(check_parallel_closed_vs_eigen()?);
    reports.push(check_separable_equivalence()?);
    reports.push(check_eta_vs_matrix_power()?);
    reports.push(check_tomography_roundtrip()?);
    reports.push(check_xstate_eigensystem()?);
    reports.push(check_nopt_reference()?);
    reports.push(check_oscillation_frequency()?);
    Ok(reports)
}

/// Like [`run_all`], but optionally corrupts one tolerance so failure
/// handling can be exercised end to end.
pub fn run_all_with(seed: u64, inject_failure: bool) -> Result<Vec<CheckReport>> {
    let mut reports = run_all(seed)?;
    if inject_failure {
        if let Some(first) = reports.first_mut() {
            first.tolerance = -1.0;
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_with_the_default_seed() {
        let reports = run_all(0).unwrap();
        assert!(!reports.is_empty());
        for report in &reports {
            assert!(
                report.passed(),
                "{}: deviation {:.3e} > tolerance {:.3e}",
                report.name,
                report.deviation,
                report.tolerance
            );
        }
    }

    #[test]
    fn injected_failure_fails_exactly_one_check() {
        let reports = run_all_with(0, true).unwrap();
        let failed = reports.iter().filter(|r| !r.passed()).count();
        assert_eq!(failed, 1);
    }

    #[test]
    fn report_count_is_stable() {
        // The CLI prints one line per registered check; keep the count in
        // sync with the registry.
        assert_eq!(run_all(7).unwrap().len(), 21);
    }
}
