//! Closed-form scale functions `W^(q)`, `Z^(q)` for the two supported
//! families.
//!
//! For both models `W^(q)` restricted to `[0, inf)` is a combination of at
//! most two exponentials, `sum_m (c_m + d_m v) e^(rho_m v)`; the linear
//! factor only appears in the confluent (repeated-root) case. That shape is
//! kept explicit in [`ExpPoly`] because the Volterra solver uses it to update
//! convolution sums in O(1) per node.
//!
//! Public evaluation goes through cancellation-free `exp_m1` forms rather
//! than the raw coefficient sums, which lose digits when the two roots are
//! close.

use crate::models::LevyModel;
use crate::{Error, Result};

/// One term `(coeff + slope * v) * exp(rho * v)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExpTerm {
    pub coeff: f64,
    pub slope: f64,
    pub rho: f64,
}

/// A short sum of exponential-polynomial terms, valid for `v >= 0`.
#[derive(Debug, Clone)]
pub(crate) struct ExpPoly {
    pub terms: Vec<ExpTerm>,
}

impl ExpPoly {
    #[cfg(test)]
    pub fn eval(&self, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.coeff + t.slope * v) * (t.rho * v).exp())
            .sum()
    }

    pub fn derivative(&self) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: t.coeff * t.rho + t.slope,
                    slope: t.slope * t.rho,
                    rho: t.rho,
                })
                .collect(),
        }
    }
}

/// Threshold on `rho1 - rho2` below which the two-exponential form is
/// collapsed to the repeated-root limit. The switch error is
/// O((delta * x)^2 / 24), i.e. far below every tolerance in the crate.
const CONFLUENT_ROOT_GAP: f64 = 1e-7;

/// Precomputed roots and coefficients for evaluating `W^(q)`, `W^(q)'` and
/// `Z^(q)` of one `(model, q)` pair.
///
/// Immutable after construction; evaluators are pure.
#[derive(Debug, Clone)]
pub struct ScaleEval {
    model: LevyModel,
    q: f64,
    rho1: f64,
    rho2: f64,
    w_at_zero: f64,
    confluent: bool,
    w_kernel: ExpPoly,
    w_prime_kernel: ExpPoly,
}

impl ScaleEval {
    /// Builds the evaluator. Roots solve the family quadratic to relative
    /// residual below 1e-12; an exactly repeated root falls through to the
    /// confluent limiting form.
    pub fn new(model: LevyModel, q: f64) -> Result<Self> {
        model.validate()?;
        if !(q >= 0.0) {
            return Err(Error::domain(format!(
                "scale functions need q >= 0, got {q}"
            )));
        }
        let (rho1, rho2) = model.scale_roots(q);
        let confluent = rho1 - rho2 < CONFLUENT_ROOT_GAP;
        let rho_bar = 0.5 * (rho1 + rho2);

        let w_kernel = match model {
            LevyModel::BrownianDrift { sigma, .. } => {
                let big_d = 0.5 * sigma * sigma;
                if confluent {
                    ExpPoly {
                        terms: vec![ExpTerm {
                            coeff: 0.0,
                            slope: 1.0 / big_d,
                            rho: rho_bar,
                        }],
                    }
                } else {
                    let c = 1.0 / (big_d * (rho1 - rho2));
                    ExpPoly {
                        terms: vec![
                            ExpTerm {
                                coeff: c,
                                slope: 0.0,
                                rho: rho1,
                            },
                            ExpTerm {
                                coeff: -c,
                                slope: 0.0,
                                rho: rho2,
                            },
                        ],
                    }
                }
            }
            LevyModel::CramerLundbergExp { mu, beta, .. } => {
                if confluent {
                    ExpPoly {
                        terms: vec![ExpTerm {
                            coeff: 1.0 / mu,
                            slope: (beta + rho_bar) / mu,
                            rho: rho_bar,
                        }],
                    }
                } else {
                    ExpPoly {
                        terms: vec![
                            ExpTerm {
                                coeff: (beta + rho1) / (mu * (rho1 - rho2)),
                                slope: 0.0,
                                rho: rho1,
                            },
                            ExpTerm {
                                coeff: (beta + rho2) / (mu * (rho2 - rho1)),
                                slope: 0.0,
                                rho: rho2,
                            },
                        ],
                    }
                }
            }
        };
        let w_prime_kernel = w_kernel.derivative();

        let w_at_zero = match model {
            LevyModel::BrownianDrift { .. } => 0.0,
            LevyModel::CramerLundbergExp { mu, .. } => 1.0 / mu,
        };

        let se = ScaleEval {
            model,
            q,
            rho1,
            rho2,
            w_at_zero,
            confluent,
            w_kernel,
            w_prime_kernel,
        };
        se.check_roots()?;
        Ok(se)
    }

    fn check_roots(&self) -> Result<()> {
        for rho in [self.rho1, self.rho2] {
            if !rho.is_finite() {
                return Err(Error::numerical("scale roots are not finite"));
            }
            let s = rho.max(0.0);
            if rho >= 0.0 {
                let psi = self.model.laplace_exponent(s)?;
                if (psi - self.q).abs() > 1e-12 * self.q.max(1.0) {
                    return Err(Error::numerical(format!(
                        "root residual too large: psi({rho}) = {psi}, q = {}",
                        self.q
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn model(&self) -> LevyModel {
        self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Larger root; equals `phi(model, q)`.
    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    /// The atom `W(0)`: zero for Brownian, `1/mu` for Cramer-Lundberg.
    /// Stored explicitly so Stieltjes atoms are bit-exact downstream.
    pub fn w_at_zero(&self) -> f64 {
        self.w_at_zero
    }

    /// `W^(q)(x)`; zero for `x < 0`.
    pub fn eval_w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let (r1, r2) = (self.rho1, self.rho2);
        let delta = r1 - r2;
        match self.model {
            LevyModel::BrownianDrift { sigma, .. } => {
                let big_d = 0.5 * sigma * sigma;
                if self.confluent {
                    let rho = 0.5 * (r1 + r2);
                    x * (rho * x).exp() / big_d
                } else {
                    // (e^(r1 x) - e^(r2 x)) / (D delta), cancellation-free.
                    (r2 * x).exp() * (delta * x).exp_m1() / (big_d * delta)
                }
            }
            LevyModel::CramerLundbergExp { mu, beta, .. } => {
                if self.confluent {
                    let rho = 0.5 * (r1 + r2);
                    (rho * x).exp() * (1.0 + (beta + rho) * x) / mu
                } else {
                    (r2 * x).exp() * ((beta + r1) * (delta * x).exp_m1() / delta + 1.0) / mu
                }
            }
        }
    }

    /// Exact derivative of the closed form, for `x > 0`.
    pub fn eval_w_prime(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("eval_w_prime needs x > 0, got {x}")));
        }
        Ok(self.w_prime_right(x))
    }

    /// One-sided derivative value, defined for all `x >= 0` (the value at 0
    /// is the right limit `W'(0+)`).
    pub fn w_prime_right(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        let (r1, r2) = (self.rho1, self.rho2);
        let delta = r1 - r2;
        match self.model {
            LevyModel::BrownianDrift { sigma, .. } => {
                let big_d = 0.5 * sigma * sigma;
                if self.confluent {
                    let rho = 0.5 * (r1 + r2);
                    (1.0 + rho * x) * (rho * x).exp() / big_d
                } else {
                    (r2 * x).exp() * (r1 * (delta * x).exp_m1() / delta + 1.0) / big_d
                }
            }
            LevyModel::CramerLundbergExp { mu, beta, .. } => {
                if self.confluent {
                    let rho = 0.5 * (r1 + r2);
                    (rho * x).exp() * (rho + (beta + rho) * (1.0 + rho * x)) / mu
                } else {
                    (r2 * x).exp()
                        * ((beta + r1) * r1 * (delta * x).exp_m1() / delta + beta + r1 + r2)
                        / mu
                }
            }
        }
    }

    /// `Z^(q)(x)`; identically 1 for `x <= 0` and for `q = 0`.
    pub fn eval_z(&self, x: f64) -> f64 {
        if x <= 0.0 || self.q == 0.0 {
            return 1.0;
        }
        let (r1, r2) = (self.rho1, self.rho2);
        let delta = r1 - r2;
        // q > 0 implies distinct roots for both families.
        debug_assert!(!self.confluent);
        match self.model {
            LevyModel::BrownianDrift { .. } => {
                (r2 * x).exp() * (1.0 - r2 * (delta * x).exp_m1() / delta)
            }
            LevyModel::CramerLundbergExp { beta, .. } => {
                (r2 * x).exp() * (1.0 - r2 * (beta + r1) * (delta * x).exp_m1() / (beta * delta))
            }
        }
    }

    pub(crate) fn w_kernel(&self) -> &ExpPoly {
        &self.w_kernel
    }

    pub(crate) fn w_prime_kernel(&self) -> &ExpPoly {
        &self.w_prime_kernel
    }
}
