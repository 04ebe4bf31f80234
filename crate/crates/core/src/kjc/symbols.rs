//! Fourier-Laplace symbols of the flow problem with the mixed boundary
//! condition: the characteristic polynomial D, the zero-order multiplier m,
//! and its one-dimensional reduction r.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Frequency-domain evaluation point: spatial frequencies, Laplace variable
/// tau = sigma + i beta, and flow speed.
#[derive(Debug, Clone, Copy)]
pub struct SymbolPoint {
    pub eta_x: f64,
    pub eta_y: f64,
    pub tau: Complex64,
    pub flow_speed: f64,
}

/// D(eta, tau) = tau^2 + 2 U i eta_x tau + (1 - U^2) eta_x^2 + eta_y^2.
pub fn symbol_d(pt: &SymbolPoint) -> Complex64 {
    let u = pt.flow_speed;
    pt.tau * pt.tau
        + Complex64::new(0.0, 2.0 * u * pt.eta_x) * pt.tau
        + Complex64::new((1.0 - u * u) * pt.eta_x * pt.eta_x + pt.eta_y * pt.eta_y, 0.0)
}

/// m(eta, tau) = -sqrt(D) / (tau + i U eta_x), principal branch.
///
/// Exactly 0-homogeneous: m(s*eta, s*tau) = m(eta, tau) for s > 0.
pub fn multiplier_m(pt: &SymbolPoint) -> Result<Complex64> {
    let den = pt.tau + Complex64::new(0.0, pt.flow_speed * pt.eta_x);
    if den.norm() == 0.0 {
        return Err(Error::Domain(
            "multiplier m is singular: tau + i U eta_x = 0".into(),
        ));
    }
    Ok(-symbol_d(pt).sqrt() / den)
}

/// One-dimensional reduction of the multiplier:
/// r(z, eta) = sqrt(D1) / (z - i alpha/eta) with
/// D1 = -alpha^2/eta^2 - 1 + z^2 - 2 i (alpha/eta) z,
/// where z stands for z_U = beta/eta + U and alpha is the Laplace real part.
pub fn r_symbol(z: f64, eta: f64, alpha_lp: f64) -> Result<Complex64> {
    if eta == 0.0 {
        return Err(Error::Domain("r symbol requires eta != 0".into()));
    }
    let a = alpha_lp / eta;
    let d1 = Complex64::new(z * z - a * a - 1.0, -2.0 * a * z);
    let den = Complex64::new(z, -a);
    Ok(d1.sqrt() / den)
}

/// Hilbert-transform factor m0(eta) = -i sgn(eta); the 1D multiplier splits
/// as m = m0 * r.
pub fn hilbert_factor(eta: f64) -> Complex64 {
    if eta > 0.0 {
        Complex64::new(0.0, -1.0)
    } else if eta < 0.0 {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_at_origin_frequencies() {
        let pt = SymbolPoint {
            eta_x: 0.0,
            eta_y: 0.0,
            tau: Complex64::new(1.0, 0.0),
            flow_speed: 2.0,
        };
        assert_eq!(symbol_d(&pt), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn d_without_flow_is_tau_sq_plus_eta_sq() {
        let pt = SymbolPoint {
            eta_x: 1.5,
            eta_y: -2.0,
            tau: Complex64::new(0.3, 0.7),
            flow_speed: 0.0,
        };
        let expect = pt.tau * pt.tau + Complex64::new(1.5f64.powi(2) + 4.0, 0.0);
        assert!((symbol_d(&pt) - expect).norm() < 1e-15);
    }

    #[test]
    fn m_at_rest_on_positive_real_axis() {
        let pt = SymbolPoint {
            eta_x: 0.0,
            eta_y: 0.0,
            tau: Complex64::new(2.5, 0.0),
            flow_speed: 0.0,
        };
        let m = multiplier_m(&pt).unwrap();
        assert!((m - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn m_singular_denominator_rejected() {
        let pt = SymbolPoint {
            eta_x: 1.0,
            eta_y: 0.0,
            tau: Complex64::new(0.0, -2.0),
            flow_speed: 2.0,
        };
        assert!(multiplier_m(&pt).is_err());
    }

    #[test]
    fn r_limits_at_large_z() {
        // symbolic limits: +1 as z -> +inf, -1 as z -> -inf
        let r_pos = r_symbol(1e6, 10.0, 1.0).unwrap();
        assert!((r_pos - Complex64::new(1.0, 0.0)).norm() < 1e-4);
        let r_neg = r_symbol(-1e6, 10.0, 1.0).unwrap();
        assert!((r_neg - Complex64::new(-1.0, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn r_rejects_zero_eta() {
        assert!(r_symbol(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn r_at_z_zero_is_constant_in_z_and_nonzero() {
        // at fixed eta the symbol tends to a nonzero constant as |z| -> 0
        let eta = 5.0;
        let a = 1.0;
        let r0 = r_symbol(0.0, eta, a).unwrap();
        let r1 = r_symbol(1e-9, eta, a).unwrap();
        assert!((r0 - r1).norm() < 1e-6);
        assert!(r0.norm() > 0.1);
        // |r(0, eta)| = sqrt(1 + eta^2/alpha^2)
        let expect = (1.0 + eta * eta / (a * a)).sqrt();
        assert!((r0.norm() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn r_half_derivative_loss_on_characteristic() {
        // at z_U = 1 the symbol behaves like sqrt(2 alpha / eta):
        // |r| sqrt(eta) stays near sqrt(2 alpha) across four decades
        let a = 1.0;
        let target = (2.0 * a).sqrt();
        for eta in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let r = r_symbol(1.0, eta, a).unwrap();
            let scaled = r.norm() * eta.sqrt();
            assert!(
                (scaled - target).abs() < 0.05 * target,
                "eta {eta}: |r| sqrt(eta) = {scaled}"
            );
        }
    }
}
