//! Monte Carlo oracle checks that are too sample-hungry for unit tests:
//! the stochastic-generator average is the ground truth the exact
//! representations must reproduce within statistical error.

use phasecast::channel::{
    apply_channel_mc_sharded, channel_params_vmf, choi_mc, kraus_vmf, tomograph_triple,
};
use phasecast::linalg::DensityMatrix;
use phasecast::vmf::VmfParams;

const PHI: f64 = 0.1;
const KAPPA: f64 = 1.0;

#[test]
fn monte_carlo_action_matches_kraus_entrywise() {
    let p = VmfParams::new(PHI, KAPPA).unwrap();
    let kraus = kraus_vmf(&p).unwrap();
    let plus = DensityMatrix::plus_state();
    let exact = kraus.apply(&plus).unwrap();
    let sampled = apply_channel_mc_sharded(&plus, &p, 1_000_000, 2024).unwrap();
    let deviation = exact.matrix().max_abs_diff(sampled.matrix());
    assert!(deviation < 5e-3, "deviation {deviation:.3e}");
}

#[test]
fn monte_carlo_tomography_recovers_the_triple() {
    let p = VmfParams::new(PHI, KAPPA).unwrap();
    let direct = channel_params_vmf(&p).unwrap();
    // covariance violations of a 1e7-sample channel sit at the 1e-4 level,
    // far under the 2e-3 agreement this checks
    let mut stream = 0u64;
    let fitted = tomograph_triple(
        |rho| {
            stream += 1;
            apply_channel_mc_sharded(rho, &p, 10_000_000, 0x70B0 ^ stream)
        },
        5e-3,
    )
    .unwrap();
    assert!((fitted.lambda_par - direct.lambda_par).abs() < 2e-3);
    assert!((fitted.lambda_perp - direct.lambda_perp).abs() < 2e-3);
    assert!((fitted.g - direct.g).abs() < 2e-3);
}

#[test]
fn monte_carlo_choi_derivative_spot_checks_the_coherence_rate() {
    // The (1,2) Choi entry is S(phi)/2; differencing two common-random-number
    // estimates isolates dS/dphi up to O(h^2) truncation and shared noise.
    let h = 5e-3;
    let lo = choi_mc(&VmfParams::new(PHI - h, KAPPA).unwrap(), 2_000_000, 77).unwrap();
    let hi = choi_mc(&VmfParams::new(PHI + h, KAPPA).unwrap(), 2_000_000, 77).unwrap();
    let estimate = (hi[(0, 3)] - lo[(0, 3)]) * (2.0 / (2.0 * h)); // corner = S/2
    let exact = channel_params_vmf(&VmfParams::new(PHI, KAPPA).unwrap())
        .unwrap()
        .s_prime();
    assert!(
        (estimate - exact).norm() < 5e-3,
        "estimate {estimate}, exact {exact}"
    );
}
