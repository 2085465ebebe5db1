//! Right-continuous step weights on `[0, inf)`.
//!
//! A weight assigns a nonnegative killing rate to each drawdown level. Step
//! functions are the only supported shape: they are what the closed-form
//! recursions of [`crate::recursion`] can validate, and they cover the
//! interval-occupation weights the library exists for.

use crate::{Error, Result};

/// A nonnegative step weight, right-continuous with left limits.
///
/// For `GeneralStep`, `breakpoints` are strictly decreasing and positive and
/// `levels` are ordered outermost-first: `levels[0]` applies on
/// `[breakpoints[0], inf)`, `levels[k]` on `[breakpoints[k], breakpoints[k-1])`,
/// and the last level on `[0, breakpoints[n-1])`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFunction {
    Constant {
        q: f64,
    },
    /// `q` on `[0, a)` and `p` on `[a, inf)`.
    OneStep {
        q: f64,
        p: f64,
        a: f64,
    },
    GeneralStep {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
}

impl WeightFunction {
    pub fn constant(q: f64) -> Result<Self> {
        let w = WeightFunction::Constant { q };
        w.validate()?;
        Ok(w)
    }

    pub fn one_step(q: f64, p: f64, a: f64) -> Result<Self> {
        let w = WeightFunction::OneStep { q, p, a };
        w.validate()?;
        Ok(w)
    }

    pub fn general_step(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let w = WeightFunction::GeneralStep {
            breakpoints,
            levels,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFunction::Constant { q } => {
                if !q.is_finite() || *q < 0.0 {
                    return Err(Error::domain("constant weight must be finite and >= 0"));
                }
            }
            WeightFunction::OneStep { q, p, a } => {
                if !q.is_finite() || !p.is_finite() || *q < 0.0 || *p < 0.0 {
                    return Err(Error::domain("one-step levels must be finite and >= 0"));
                }
                if !a.is_finite() || *a <= 0.0 {
                    return Err(Error::domain("one-step breakpoint must be > 0"));
                }
            }
            WeightFunction::GeneralStep {
                breakpoints,
                levels,
            } => {
                if levels.len() != breakpoints.len() + 1 {
                    return Err(Error::domain(
                        "general step needs exactly one more level than breakpoints",
                    ));
                }
                if levels.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::domain("step levels must be finite and >= 0"));
                }
                if breakpoints.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                    return Err(Error::domain("step breakpoints must be > 0"));
                }
                if breakpoints.windows(2).any(|w| w[0] <= w[1]) {
                    return Err(Error::domain(
                        "step breakpoints must be strictly decreasing",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Right-continuous value at `z >= 0`.
    pub fn value(&self, z: f64) -> f64 {
        debug_assert!(z >= 0.0);
        match self {
            WeightFunction::Constant { q } => *q,
            WeightFunction::OneStep { q, p, a } => {
                if z < *a {
                    *q
                } else {
                    *p
                }
            }
            WeightFunction::GeneralStep {
                breakpoints,
                levels,
            } => {
                for (k, a) in breakpoints.iter().enumerate() {
                    if z >= *a {
                        return levels[k];
                    }
                }
                *levels.last().unwrap()
            }
        }
    }

    /// Left limit at `z > 0` (equals `value(z)` away from breakpoints).
    pub fn value_left(&self, z: f64) -> f64 {
        debug_assert!(z > 0.0);
        match self {
            WeightFunction::Constant { q } => *q,
            WeightFunction::OneStep { q, p, a } => {
                if z <= *a {
                    *q
                } else {
                    *p
                }
            }
            WeightFunction::GeneralStep {
                breakpoints,
                levels,
            } => {
                for (k, a) in breakpoints.iter().enumerate() {
                    if z > *a {
                        return levels[k];
                    }
                }
                *levels.last().unwrap()
            }
        }
    }

    /// Breakpoints in increasing order (empty for a constant weight).
    pub fn breakpoints_ascending(&self) -> Vec<f64> {
        match self {
            WeightFunction::Constant { .. } => vec![],
            WeightFunction::OneStep { a, .. } => vec![*a],
            WeightFunction::GeneralStep { breakpoints, .. } => {
                let mut b = breakpoints.clone();
                b.reverse();
                b
            }
        }
    }

    /// Levels paired with `breakpoints_ascending`: `levels()[0]` on
    /// `[0, b_1)`, ..., last level on `[b_m, inf)`.
    pub fn levels_ascending(&self) -> Vec<f64> {
        match self {
            WeightFunction::Constant { q } => vec![*q],
            WeightFunction::OneStep { q, p, .. } => vec![*q, *p],
            WeightFunction::GeneralStep { levels, .. } => {
                let mut l = levels.clone();
                l.reverse();
                l
            }
        }
    }

    /// Largest level.
    pub fn max_level(&self) -> f64 {
        self.levels_ascending().into_iter().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.levels_ascending().iter().all(|&p| p == 0.0)
    }

    /// Exact integral over `[lo, hi]` within `[0, inf)`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let bps = self.breakpoints_ascending();
        let levels = self.levels_ascending();
        let mut acc = 0.0;
        let mut left = lo;
        for (k, b) in bps.iter().enumerate() {
            if *b <= left {
                continue;
            }
            if *b >= hi {
                break;
            }
            acc += levels[k] * (b - left);
            left = *b;
        }
        // Level in force on [left, hi).
        acc + self.value(left) * (hi - left)
    }

    /// The weight `omega + delta`.
    pub fn plus_constant(&self, delta: f64) -> Result<WeightFunction> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::domain("weight shift must be finite and >= 0"));
        }
        Ok(match self.clone() {
            WeightFunction::Constant { q } => WeightFunction::Constant { q: q + delta },
            WeightFunction::OneStep { q, p, a } => WeightFunction::OneStep {
                q: q + delta,
                p: p + delta,
                a,
            },
            WeightFunction::GeneralStep {
                breakpoints,
                levels,
            } => WeightFunction::GeneralStep {
                breakpoints,
                levels: levels.into_iter().map(|p| p + delta).collect(),
            },
        })
    }

    /// The reflected weight `z -> omega(u - z)` restricted to `[0, u]`,
    /// extended beyond `u` by `omega(0)` (those values are never read by the
    /// reflection identity, which only evaluates arguments in `[0, u]`).
    pub fn reflected(&self, u: f64) -> Result<WeightFunction> {
        if !(u > 0.0) {
            return Err(Error::domain("reflection level must be > 0"));
        }
        let inner: Vec<f64> = self
            .breakpoints_ascending()
            .into_iter()
            .filter(|&a| a < u)
            .collect();
        if inner.is_empty() {
            // Constant on [0, u].
            return WeightFunction::constant(self.value(u * 0.5));
        }
        // Reflected breakpoints, descending as required by GeneralStep.
        let mut rbps: Vec<f64> = inner.iter().map(|&a| u - a).collect();
        rbps.sort_by(|x, y| y.partial_cmp(x).unwrap());
        // Level on [rbps[0], inf) corresponds to original arguments below the
        // smallest kept breakpoint; sample each piece at its midpoint.
        let mut levels = Vec::with_capacity(rbps.len() + 1);
        for k in 0..=rbps.len() {
            let (lo, hi) = if k == 0 {
                (rbps[0], rbps[0] + 1.0)
            } else if k == rbps.len() {
                (0.0, rbps[k - 1])
            } else {
                (rbps[k], rbps[k - 1])
            };
            let mid = 0.5 * (lo + hi);
            let arg = (u - mid).max(0.0);
            levels.push(self.value(arg));
        }
        WeightFunction::general_step(rbps, levels)
    }
}
