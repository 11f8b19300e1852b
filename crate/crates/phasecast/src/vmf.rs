//! The von Mises-Fisher distribution on the unit sphere.
//!
//! The rotation axis of the stochastic phase generator is drawn from
//! `p_kappa(theta) = kappa e^{kappa cos(theta)} / (4 pi sinh(kappa))`, an
//! axially symmetric distribution concentrated around +z. `kappa -> 0` is
//! the uniform sphere, `kappa -> inf` pins the axis to +z and recovers the
//! noiseless phase shift.

use crate::rng::SplitMix64;
use crate::tol;
use crate::{Error, Result};

/// Concentration and phase of one channel instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfParams {
    pub phi: f64,
    pub kappa: f64,
}

impl VmfParams {
    pub fn new(phi: f64, kappa: f64) -> Result<Self> {
        if kappa.is_nan() || kappa < 0.0 {
            return Err(Error::InvalidKappa {
                kappa,
                requirement: "kappa >= 0",
            });
        }
        Ok(Self { phi, kappa })
    }
}

/// coth(kappa), safe against overflow for any positive argument.
pub(crate) fn coth(kappa: f64) -> f64 {
    // (1 + e^{-2k}) / (1 - e^{-2k}); e^{-2k} underflows harmlessly to 0.
    let e = (-2.0 * kappa).exp();
    (1.0 + e) / (1.0 - e)
}

/// kappa / sinh(kappa), safe against overflow.
pub(crate) fn kappa_csch(kappa: f64) -> f64 {
    // 2 k e^{-k} / (1 - e^{-2k})
    2.0 * kappa * (-kappa).exp() / (1.0 - (-2.0 * kappa).exp())
}

/// kappa * coth(kappa) - 1; strictly positive for kappa > 0 and ~ kappa^2/3
/// near zero, where the direct expression loses all precision.
pub(crate) fn kappa_coth_minus_one(kappa: f64) -> f64 {
    if kappa < 1e-3 {
        let k2 = kappa * kappa;
        k2 / 3.0 - k2 * k2 / 45.0
    } else {
        kappa * coth(kappa) - 1.0
    }
}

/// Mean of cos(theta) under the distribution: coth(kappa) - 1/kappa.
pub fn langevin(kappa: f64) -> f64 {
    if kappa == 0.0 {
        0.0
    } else {
        kappa_coth_minus_one(kappa) / kappa
    }
}

/// Probability density at polar angle `theta`.
///
/// `kappa = 0` returns the uniform limit `1/(4 pi)` exactly; negative
/// concentrations are rejected.
pub fn vmf_density(theta: f64, kappa: f64) -> Result<f64> {
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::InvalidKappa {
            kappa,
            requirement: "kappa >= 0",
        });
    }
    if kappa == 0.0 {
        return Ok(1.0 / (4.0 * std::f64::consts::PI));
    }
    // kappa e^{kappa(cos t - 1)} / (2 pi (1 - e^{-2 kappa})), the
    // sinh form rewritten so large kappa cannot overflow; expm1 keeps the
    // denominator accurate down to the uniform limit.
    let density = kappa * (kappa * (theta.cos() - 1.0)).exp()
        / (2.0 * std::f64::consts::PI * (-(-2.0 * kappa).exp_m1()));
    Ok(density)
}

/// Draw a unit axis; cos(theta) by inverse CDF, azimuth uniform.
pub fn sample_vmf(kappa: f64, rng: &mut SplitMix64) -> Result<[f64; 3]> {
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::InvalidKappa {
            kappa,
            requirement: "kappa >= 0",
        });
    }
    let u = rng.next_f64();
    let cos_theta = if kappa == 0.0 {
        2.0 * u - 1.0
    } else {
        // cos(theta) = 1 + ln(u + (1-u) e^{-2 kappa}) / kappa
        (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0)
    };
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let azimuth = 2.0 * std::f64::consts::PI * rng.next_f64();
    Ok([
        sin_theta * azimuth.cos(),
        sin_theta * azimuth.sin(),
        cos_theta,
    ])
}

/// Check a sampled axis against the unit-norm contract.
pub(crate) fn check_axis(n: &[f64; 3]) -> Result<()> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > tol::AXIS_NORM {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of f over [a, b].
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

    #[test]
    fn density_uniform_limit() {
        let d = vmf_density(0.0, 0.0).unwrap();
        assert!((d - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        // kappa -> 0+ approaches the same value
        let d = vmf_density(1.0, 1e-9).unwrap();
        assert!((d - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-9);
    }

    #[test]
    fn density_normalizes_by_quadrature() {
        for kappa in [0.5, 1.0, 5.0, 50.0] {
            let integral = simpson(
                |theta| {
                    2.0 * std::f64::consts::PI * vmf_density(theta, kappa).unwrap() * theta.sin()
                },
                0.0,
                std::f64::consts::PI,
                4_000,
            );
            assert!((integral - 1.0).abs() < 1e-8, "kappa={kappa}: {integral}");
        }
    }

    #[test]
    fn density_mean_matches_langevin_by_quadrature() {
        let kappa = 1.0;
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
        // coth(1) - 1 = 0.31303528549933...
        assert!((mean - langevin(1.0)).abs() < 1e-8);
        assert!((langevin(1.0) - 0.3130352854993313).abs() < 1e-14);
    }

    #[test]
    fn density_rejects_negative_kappa() {
        assert!(matches!(
            vmf_density(0.3, -1.0),
            Err(Error::InvalidKappa { .. })
        ));
        let mut rng = SplitMix64::new(1);
        assert!(matches!(
            sample_vmf(-0.5, &mut rng),
            Err(Error::InvalidKappa { .. })
        ));
    }

    #[test]
    fn samples_are_unit_vectors() {
        let mut rng = SplitMix64::new(11);
        for kappa in [0.0, 0.3, 2.0, 100.0] {
            for _ in 0..200 {
                let n = sample_vmf(kappa, &mut rng).unwrap();
                let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_samples_have_zero_mean_axis() {
        let mut rng = SplitMix64::new(2024);
        let n_samples = 1_000_000usize;
        let mut mean = [0.0f64; 3];
        for _ in 0..n_samples {
            let n = sample_vmf(0.0, &mut rng).unwrap();
            mean[0] += n[0];
            mean[1] += n[1];
            mean[2] += n[2];
        }
        // Each component has variance 1/3; 3 sigma of the mean.
        let three_sigma = 3.0 * (1.0f64 / 3.0 / n_samples as f64).sqrt();
        for c in mean {
            assert!((c / n_samples as f64).abs() < three_sigma);
        }
    }

    #[test]
    fn concentrated_samples_match_langevin_moment() {
        let mut rng = SplitMix64::new(4096);
        let n_samples = 400_000usize;
        for kappa in [1.0, 100.0] {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n_samples {
                let n = sample_vmf(kappa, &mut rng).unwrap();
                sum += n[2];
                sum_sq += n[2] * n[2];
            }
            let mean = sum / n_samples as f64;
            let var = (sum_sq / n_samples as f64 - mean * mean).max(0.0);
            let three_sigma = 3.0 * (var / n_samples as f64).sqrt();
            let expect = langevin(kappa);
            assert!(
                (mean - expect).abs() < three_sigma.max(1e-6),
                "kappa={kappa}: mean={mean}, langevin={expect}"
            );
            if kappa == 100.0 {
                assert!(mean > 0.98);
            }
        }
    }

    #[test]
    fn stable_hyperbolics_match_naive_forms() {
        for kappa in [0.1, 1.0, 10.0, 300.0] {
            assert!((coth(kappa) - 1.0 / kappa.tanh()).abs() < 1e-12);
            if kappa < 300.0 {
                assert!((kappa_csch(kappa) - kappa / kappa.sinh()).abs() < 1e-12);
            }
        }
        // No overflow far beyond f64's exp range.
        assert!(coth(2000.0).is_finite());
        assert_eq!(kappa_csch(2000.0), 0.0);
        assert!((kappa_coth_minus_one(1e-6) - 1e-12 / 3.0).abs() < 1e-24);
    }
}
