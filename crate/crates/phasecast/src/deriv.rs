//! Numerical differentiation with step-halving convergence control.
//!
//! Channel parameters enter the Fisher-information formulas only through
//! their first phase derivatives. The closed-form parameter expressions are
//! unwieldy to differentiate symbolically, so derivatives are taken with a
//! fourth-order central stencil over a fixed step ladder: the adjacent rung
//! pair that agrees best under halving is Richardson-combined and returned.
//! Well-behaved inputs converge to [`tol::DERIV_STABLE`] or better; if even
//! the best pair disagrees beyond [`tol::DERIV_FLAG`] the derivative is
//! rejected rather than silently returned.

use num_complex::Complex64;

use crate::tol;
use crate::{Error, Result};

// Geometric step ladder. Phases here live on [0, 2 pi], so the steps are
// absolute. The smallest rung still sits far above the rounding floor
// (~1e-16/h), while reaching functions with curvature scales of ~1e-2 —
// arg(S) sweeps that fast where S passes near the origin.
const LADDER: [f64; 9] = [
    4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4, 1.5625e-4,
];

fn stencil<T, F>(f: &F, x: f64, h: f64) -> T
where
    T: Copy
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<f64, Output = T>,
    F: Fn(f64) -> T,
{
    // (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / (12 h)
    (f(x + h) - f(x - h)) * (8.0 / (12.0 * h))
        + (f(x - 2.0 * h) - f(x + 2.0 * h)) * (1.0 / (12.0 * h))
}

fn converge<T, F, N>(f: F, x: f64, norm: N) -> Result<T>
where
    T: Copy
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<f64, Output = T>,
    F: Fn(f64) -> T,
    N: Fn(T) -> f64,
{
    let mut prev: Option<T> = None;
    let mut best: Option<(f64, T)> = None;
    for h in LADDER {
        let d = stencil(&f, x, h);
        if let Some(p) = prev {
            let rel = norm(d - p) / norm(d).max(1.0);
            // Richardson combination of the adjacent rungs: the stencil is
            // fourth order, so (16 D(h/2) - D(h))/15 cancels the leading
            // truncation term.
            let refined = d * (16.0 / 15.0) - p * (1.0 / 15.0);
            match best {
                Some((r, _)) if r <= rel => {}
                _ => best = Some((rel, refined)),
            }
        }
        prev = Some(d);
    }
    // The most-converged rung pair wins; merely "first stable" rungs still
    // carry the truncation error of a coarse step.
    match best {
        Some((rel, d)) if rel <= tol::DERIV_FLAG => Ok(d),
        Some((rel, _)) => Err(Error::DerivativeUnstable { rel_change: rel }),
        None => unreachable!("ladder has more than one step"),
    }
}

/// d/dx of a real-valued function.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    converge(f, x, f64::abs)
}

/// d/dx of a complex-valued function.
pub fn derivative_complex(f: impl Fn(f64) -> Complex64, x: f64) -> Result<Complex64> {
    converge(f, x, |z: Complex64| z.norm())
}

/// d/dx of an angle-valued function.
///
/// The samples are unwrapped along the stencil before differencing, so a
/// branch cut of the underlying `atan2` between stencil points does not
/// corrupt the derivative.
pub fn derivative_angle(f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let center = f(x);
    let unwrapped = move |t: f64| {
        let mut a = f(t);
        while a - center > std::f64::consts::PI {
            a -= 2.0 * std::f64::consts::PI;
        }
        while center - a > std::f64::consts::PI {
            a += 2.0 * std::f64::consts::PI;
        }
        a
    };
    converge(unwrapped, x, f64::abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_sine() {
        let d = derivative(f64::sin, 0.3).unwrap();
        assert!((d - 0.3f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn derivative_of_complex_exponential() {
        let d = derivative_complex(|t| Complex64::new(0.0, 2.0 * t).exp(), 0.4).unwrap();
        let expect = Complex64::new(0.0, 2.0) * Complex64::new(0.0, 0.8).exp();
        assert!((d - expect).norm() < 1e-9);
    }

    #[test]
    fn angle_derivative_crosses_branch_cut() {
        // arg(e^{i(3t)}) wraps at |angle| = pi; near t = pi/3 the raw samples
        // straddle the cut but the unwrapped derivative stays 3.
        let f = |t: f64| Complex64::new(0.0, 3.0 * t).exp().arg();
        let d = derivative_angle(f, std::f64::consts::PI / 3.0 - 1e-3).unwrap();
        assert!((d - 3.0).abs() < 1e-8, "d = {d}");
    }

    #[test]
    fn unstable_derivative_is_flagged() {
        // A coin-flip discontinuity can never pass step-halving agreement.
        let f = |t: f64| {
            if t.to_bits().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        };
        assert!(matches!(
            derivative(f, 0.5),
            Err(Error::DerivativeUnstable { .. })
        ));
    }
}
