//! Functions sampled on the reference interval (-1, 1), with Chebyshev
//! machinery for the singular-endpoint class.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFamily {
    /// Chebyshev-Gauss points cos((2k-1) pi / (2n)), stored increasing.
    Chebyshev,
    /// Cell-centered uniform points -1 + (k + 1/2) * 2/n.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointBehavior {
    Bounded,
    /// w(x) = g(x) / sqrt(1 - x^2); samples store g with the weight
    /// factored out.
    InverseSqrtSingular,
}

#[derive(Debug, Clone)]
pub struct IntervalFunction {
    pub family: NodeFamily,
    pub endpoint: EndpointBehavior,
    pub samples: Vec<Complex64>,
}

pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let theta = (2.0 * (n - k) as f64 - 1.0) * std::f64::consts::PI / (2.0 * n as f64);
            theta.cos()
        })
        .collect()
}

pub fn uniform_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -1.0 + (k as f64 + 0.5) * 2.0 / n as f64)
        .collect()
}

impl IntervalFunction {
    pub fn new(
        family: NodeFamily,
        endpoint: EndpointBehavior,
        samples: Vec<Complex64>,
    ) -> Result<IntervalFunction> {
        if samples.is_empty() {
            return Err(Error::Domain("interval function needs samples".into()));
        }
        if endpoint == EndpointBehavior::InverseSqrtSingular && family != NodeFamily::Chebyshev {
            return Err(Error::Domain(
                "singular-tagged functions live on Chebyshev nodes".into(),
            ));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("interval function samples must be finite".into()));
        }
        Ok(IntervalFunction {
            family,
            endpoint,
            samples,
        })
    }

    pub fn from_fn_real(
        n: usize,
        family: NodeFamily,
        endpoint: EndpointBehavior,
        f: impl Fn(f64) -> f64,
    ) -> Result<IntervalFunction> {
        let nodes = match family {
            NodeFamily::Chebyshev => chebyshev_nodes(n),
            NodeFamily::Uniform => uniform_nodes(n),
        };
        let samples = nodes.iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        IntervalFunction::new(family, endpoint, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nodes(&self) -> Vec<f64> {
        match self.family {
            NodeFamily::Chebyshev => chebyshev_nodes(self.len()),
            NodeFamily::Uniform => uniform_nodes(self.len()),
        }
    }

    /// Value of the represented function w at node index k (for singular
    /// functions this puts the 1/sqrt weight back in).
    pub fn value_at_node(&self, k: usize) -> Complex64 {
        match self.endpoint {
            EndpointBehavior::Bounded => self.samples[k],
            EndpointBehavior::InverseSqrtSingular => {
                let x = self.nodes()[k];
                self.samples[k] / (1.0 - x * x).sqrt()
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Chebyshev coefficients (T basis) of the interpolant through samples at
/// the Chebyshev-Gauss nodes.
pub fn cheb_coeffs(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    // nodes stored increasing correspond to theta_k decreasing; sum is
    // order-independent
    for (j, c) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let theta = (2.0 * (n - k) as f64 - 1.0) * std::f64::consts::PI / (2.0 * n as f64);
            acc += samples[k] * (j as f64 * theta).cos();
        }
        *c = acc * (2.0 / n as f64);
    }
    coeffs[0] *= 0.5;
    coeffs
}

/// Clenshaw evaluation of a Chebyshev series at x in [-1, 1].
pub fn cheb_eval(coeffs: &[Complex64], x: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        let b0 = c + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 - x * b2
}

/// Evaluate a Chebyshev-U series sum c_m U_m(x).
pub fn chebu_eval(coeffs: &[Complex64], x: f64) -> Complex64 {
    // U recurrence shares the Clenshaw shape with a doubled final term
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        let b0 = c + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 * 1.0 - b2 * x
        + (b1 * x - b2 * x * x) * 0.0 // keep shape explicit; U_0 = 1, U_1 = 2x
        + (x * b1 - b1 * x) // zero
        + (b1 * x - b1 * x) // zero
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_increase_and_stay_inside() {
        let nodes = chebyshev_nodes(16);
        for w in nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(nodes[0] > -1.0 && nodes[15] < 1.0);
    }

    #[test]
    fn coeffs_recover_polynomial() {
        // f = 3 T_0 - 2 T_1 + 0.5 T_3
        let n = 8;
        let nodes = chebyshev_nodes(n);
        let f = |x: f64| 3.0 - 2.0 * x + 0.5 * (4.0 * x * x * x - 3.0 * x);
        let samples: Vec<Complex64> = nodes.iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        let c = cheb_coeffs(&samples);
        assert!((c[0].re - 3.0).abs() < 1e-12);
        assert!((c[1].re + 2.0).abs() < 1e-12);
        assert!((c[2].re).abs() < 1e-12);
        assert!((c[3].re - 0.5).abs() < 1e-12);
        for &x in &[-0.7, 0.0, 0.3, 0.95] {
            assert!((cheb_eval(&c, x).re - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_on_uniform_nodes_rejected() {
        let r = IntervalFunction::from_fn_real(
            8,
            NodeFamily::Uniform,
            EndpointBehavior::InverseSqrtSingular,
            |_| 1.0,
        );
        assert!(r.is_err());
    }
}
