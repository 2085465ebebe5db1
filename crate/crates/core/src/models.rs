//! The supported spectrally negative Levy surplus processes.
//!
//! Both families have a rational Laplace exponent, so the scale functions of
//! [`crate::scale`] are combinations of two exponentials with roots given by
//! a quadratic. `phi` is computed from the explicit root formula rather than
//! by iterative root-finding.

use crate::{Error, Result};

/// A spectrally negative Levy surplus process.
///
/// Values are validated at construction; evaluators assume valid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyModel {
    /// `X_t = mu t + sigma B_t` with a standard Brownian motion `B`.
    BrownianDrift { mu: f64, sigma: f64 },
    /// Cramer-Lundberg process `X_t = mu t - S_t` where `S` is compound
    /// Poisson with arrival rate `lambda` and Exp(`beta`) claim sizes.
    CramerLundbergExp { mu: f64, lambda: f64, beta: f64 },
}

impl LevyModel {
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        let m = LevyModel::BrownianDrift { mu, sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn cramer_lundberg(mu: f64, lambda: f64, beta: f64) -> Result<Self> {
        let m = LevyModel::CramerLundbergExp { mu, lambda, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyModel::BrownianDrift { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() {
                    return Err(Error::domain("brownian parameters must be finite"));
                }
                if sigma <= 0.0 {
                    return Err(Error::domain("brownian sigma must be > 0"));
                }
            }
            LevyModel::CramerLundbergExp { mu, lambda, beta } => {
                if !mu.is_finite() || !lambda.is_finite() || !beta.is_finite() {
                    return Err(Error::domain("cramer-lundberg parameters must be finite"));
                }
                if mu <= 0.0 || lambda <= 0.0 || beta <= 0.0 {
                    return Err(Error::domain(
                        "cramer-lundberg requires mu > 0, lambda > 0, beta > 0",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Laplace exponent `psi(s) = log E exp(s X_1)` for `s >= 0`.
    pub fn laplace_exponent(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::domain(format!(
                "laplace exponent needs s >= 0, got {s}"
            )));
        }
        Ok(match *self {
            LevyModel::BrownianDrift { mu, sigma } => mu * s + 0.5 * sigma * sigma * s * s,
            LevyModel::CramerLundbergExp { mu, lambda, beta } => mu * s - lambda * s / (s + beta),
        })
    }

    /// Right inverse of the Laplace exponent: the largest root of
    /// `psi(s) = q` for `q >= 0`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0) {
            return Err(Error::domain(format!("phi needs q >= 0, got {q}")));
        }
        let (rho1, _) = self.scale_roots(q);
        // rho1 >= 0 exactly in exact arithmetic; clamp rounding noise.
        Ok(rho1.max(0.0))
    }

    /// Density of the Levy measure at `y > 0`. Identically zero for the
    /// Brownian family.
    pub fn levy_measure_density(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!(
                "levy measure density needs y > 0, got {y}"
            )));
        }
        Ok(match *self {
            LevyModel::BrownianDrift { .. } => 0.0,
            LevyModel::CramerLundbergExp { lambda, beta, .. } => lambda * beta * (-beta * y).exp(),
        })
    }

    /// Whether the sample paths have bounded variation, i.e. `W(0) > 0`.
    pub fn is_bounded_variation(&self) -> bool {
        matches!(self, LevyModel::CramerLundbergExp { .. })
    }

    /// Roots `(rho1, rho2)` with `rho1 >= rho2` of the quadratic whose
    /// solutions are the exponents of `W^(q)`:
    ///
    /// * Brownian: `D s^2 + mu s - q = 0` with `D = sigma^2 / 2`;
    /// * Cramer-Lundberg: `mu s^2 + (mu beta - lambda - q) s - q beta = 0`.
    pub(crate) fn scale_roots(&self, q: f64) -> (f64, f64) {
        let (a, b, c) = match *self {
            LevyModel::BrownianDrift { mu, sigma } => (0.5 * sigma * sigma, mu, -q),
            LevyModel::CramerLundbergExp { mu, lambda, beta } => {
                (mu, mu * beta - lambda - q, -q * beta)
            }
        };
        solve_quadratic(a, b, c)
    }
}

/// Roots of `a x^2 + b x + c = 0` with `a > 0`, returned as
/// `(larger, smaller)`. Uses the cancellation-free formulation and keeps
/// zero roots exact when `c == 0`.
fn solve_quadratic(a: f64, b: f64, c: f64) -> (f64, f64) {
    debug_assert!(a > 0.0);
    if c == 0.0 {
        let other = -b / a;
        return if other >= 0.0 {
            (other, 0.0)
        } else {
            (0.0, other)
        };
    }
    let disc = b * b - 4.0 * a * c;
    let sq = disc.max(0.0).sqrt();
    let t = -0.5 * (b + b.signum() * sq);
    // t cannot vanish here: c != 0 implies both roots are nonzero.
    let r1 = t / a;
    let r2 = c / t;
    if r1 >= r2 {
        (r1, r2)
    } else {
        (r2, r1)
    }
}
