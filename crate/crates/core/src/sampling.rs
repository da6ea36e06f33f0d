//! Exact Beta and Dirichlet variates built from Gamma variates.
//!
//! Gamma draws are returned on the log scale. Posterior parameters can sit at
//! the `1e-3` floor, where a Gamma(shape) draw is routinely smaller than the
//! smallest normal `f64`; normalising in log space keeps Beta and Dirichlet
//! draws well defined there.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::{exp, ln, log_sum_exp, sqrt};

/// Uniform on (0, 1].
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// `ln X` with `X ~ Gamma(shape, 1)`, via Marsaglia–Tsang. Shapes below one
/// use `X = Y U^(1/shape)` with `Y ~ Gamma(shape + 1)`.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && shape.is_finite());
    if shape < 1.0 {
        let boosted = ln_gamma_variate(shape + 1.0, rng);
        return boosted + ln(open_unit(rng)) / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / sqrt(9.0 * d);
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = open_unit(rng);
        if ln(u) < 0.5 * x * x + d - d * v + d * ln(v) {
            return ln(d) + ln(v);
        }
    }
}

/// One draw from Beta(a, b).
pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let x = ln_gamma_variate(a, rng);
    let y = ln_gamma_variate(b, rng);
    // x / (x + y) = 1 / (1 + exp(ln y - ln x))
    1.0 / (1.0 + exp(y - x))
}

/// One draw from Dirichlet(alpha).
pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let logs: Vec<f64> = alpha.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    logs.iter().map(|&l| exp(l - norm)).collect()
}
