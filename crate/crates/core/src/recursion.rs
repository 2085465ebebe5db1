//! Closed-form routes to `W^(omega)` and `Zhat^(omega)` for step weights.
//!
//! These evaluate the layer-by-layer recursions that express the
//! omega-scale functions of a step weight through ordinary scale functions:
//! starting from the outermost level `p_0`,
//!
//! ```text
//! W_{n+1}(x, y) = W_n(x, y) + (p_{n+1} - p_n) int_y^{a_{n+1}} W_n(x, z) W^(p_{n+1})(z - y) dz
//! ```
//!
//! and identically for `Zhat` with `Zhat_0 = Z^(p_0)(x - y)`. The recursion
//! never touches the Volterra solver, so it serves as an independent oracle
//! for [`crate::omega`].
//!
//! The module also provides the two-step auxiliary family
//! `W^(p,q)_(a2)`, `W^(p,q,p)_(a2,a1)`, `Zhat^(q,p)_(a1)`,
//! `Zhat^(p,q,p)_(a2,a1)` by direct quadrature, and the fully explicit
//! four-exponential expressions available for a single step.

use crate::models::LevyModel;
use crate::omega::OmegaScaleGrid;
use crate::quad::{integrate_smooth, integrate_with_breakpoints};
use crate::scale::ScaleEval;
use crate::weight::WeightFunction;
use crate::{Error, Result};

/// `(W^(omega)(x, y), Zhat^(omega)(x, y))` for a step weight, by the layer
/// recursion. Each layer integral uses the product trapezoid rule on a
/// breakpoint-aligned grid at two resolutions, combined by Richardson
/// extrapolation, so the result is accurate to roughly `h^4`.
pub fn step_scale_recursion(
    model: LevyModel,
    weight: &WeightFunction,
    x: f64,
    y: f64,
) -> Result<(f64, f64)> {
    model.validate()?;
    weight.validate()?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::domain("recursion arguments must be finite"));
    }

    // Outermost-first layering: the base level applies above the largest
    // breakpoint, each further level peels one region inward.
    let bps_desc: Vec<f64> = {
        let mut b = weight.breakpoints_ascending();
        b.reverse();
        b
    };
    let mut levels_out_first = weight.levels_ascending();
    levels_out_first.reverse();

    let coarse = recursion_pass(model, &bps_desc, &levels_out_first, x, y, 1e-3)?;
    if bps_desc.is_empty() || y >= bps_desc[0] {
        // No active layer: the pass already returned exact closed forms.
        return Ok(coarse);
    }
    let fine = recursion_pass(model, &bps_desc, &levels_out_first, x, y, 0.5e-3)?;
    Ok((
        (4.0 * fine.0 - coarse.0) / 3.0,
        (4.0 * fine.1 - coarse.1) / 3.0,
    ))
}

fn recursion_pass(
    model: LevyModel,
    bps_desc: &[f64],
    levels_out_first: &[f64],
    x: f64,
    y: f64,
    h: f64,
) -> Result<(f64, f64)> {
    let p0 = levels_out_first[0];
    let base = ScaleEval::new(model, p0)?;
    if bps_desc.is_empty() || y >= bps_desc[0] {
        return Ok((base.eval_w(x - y), base.eval_z(x - y)));
    }

    // Grid over [y, a_1], segment-aligned to the breakpoints in range and
    // to the evaluation point x (each layer integral is cut at x).
    let top = bps_desc[0];
    let mut boundaries: Vec<f64> = vec![y];
    for &a in bps_desc.iter().rev() {
        if a > y && a < top {
            boundaries.push(a);
        }
    }
    if x > y && x < top {
        boundaries.push(x);
    }
    boundaries.sort_by(|u, v| u.partial_cmp(v).unwrap());
    boundaries.dedup_by(|u, v| (*u - *v).abs() < 1e-12);
    boundaries.push(top);
    let mut nodes = vec![y];
    for seg in boundaries.windows(2) {
        let n = ((seg[1] - seg[0]) / h).ceil().max(1.0) as usize;
        let hs = (seg[1] - seg[0]) / n as f64;
        for k in 1..=n {
            nodes.push(if k == n {
                seg[1]
            } else {
                seg[0] + k as f64 * hs
            });
        }
    }

    let mut w_layer: Vec<f64> = nodes.iter().map(|&z| base.eval_w(x - z)).collect();
    let mut z_layer: Vec<f64> = nodes.iter().map(|&z| base.eval_z(x - z)).collect();

    for (k, &a) in bps_desc.iter().enumerate() {
        let p_next = levels_out_first[k + 1];
        let p_cur = levels_out_first[k];
        let dp = p_next - p_cur;
        if dp == 0.0 {
            continue;
        }
        let kernel_scale = ScaleEval::new(model, p_next)?;
        // The layer integral runs over [z, min(x, a)]: beyond x the W layer
        // vanishes and the Zhat layer is identically 1, and the defining
        // identity cuts both integrals at x.
        let upper = a.min(top).min(x);
        if upper <= y {
            continue;
        }
        let i_up = nodes
            .iter()
            .position(|&z| (z - upper).abs() < 1e-12 * upper.max(1.0))
            .ok_or_else(|| Error::numerical("recursion grid misses a breakpoint"))?;
        let w_int = kernel_convolution_below(&nodes, &w_layer, &kernel_scale, i_up);
        let z_int = kernel_convolution_below(&nodes, &z_layer, &kernel_scale, i_up);
        for j in 0..i_up {
            w_layer[j] += dp * w_int[j];
            z_layer[j] += dp * z_int[j];
        }
    }

    Ok((w_layer[0], z_layer[0]))
}

/// For every grid index `j < i_up`, the trapezoid value of
/// `int_{z_j}^{z_{i_up}} f(z) K(z - z_j) dz` where `K` is the scale kernel
/// of `kernel_scale`. Updated in O(1) per step by tracking per-exponent
/// partial sums while the lower endpoint walks down the grid.
fn kernel_convolution_below(
    nodes: &[f64],
    f: &[f64],
    kernel_scale: &ScaleEval,
    i_up: usize,
) -> Vec<f64> {
    let kernel = kernel_scale.w_kernel();
    let m = kernel.terms.len();
    let mut b = vec![0.0; m];
    let mut c = vec![0.0; m];
    let mut out = vec![0.0; nodes.len()];
    for j in (0..i_up).rev() {
        let h = nodes[j + 1] - nodes[j];
        let half = 0.5 * h;
        for bm in b.iter_mut() {
            *bm += half * f[j + 1];
        }
        for (t, (bm, cm)) in kernel.terms.iter().zip(b.iter_mut().zip(c.iter_mut())) {
            let decay = (t.rho * h).exp();
            *cm = decay * (*cm + h * *bm);
            *bm *= decay;
        }
        for bm in b.iter_mut() {
            *bm += half * f[j];
        }
        let mut total = 0.0;
        for (t, (bm, cm)) in kernel.terms.iter().zip(b.iter().zip(c.iter())) {
            total += t.coeff * bm + t.slope * cm;
        }
        out[j] = total;
    }
    out
}

/// The two-step auxiliary family evaluated at `(x, y)`.
#[derive(Debug, Clone, Copy)]
pub struct TwoStepValues {
    /// `W^(p,q)_(a2)(x)`: weight `p` on `[0, a2)`, `q` on `[a2, inf)`.
    pub w_pq_a2: f64,
    /// `W^(p,q,p)_(a2,a1)(x)`: weight `p + (q - p) 1[a2, a1)`.
    pub w_pqp: f64,
    /// `Zhat^(q,p)_(a1)(x, y)`: weight `q` on `[0, a1)`, `p` on `[a1, inf)`.
    pub zhat_qp_a1: f64,
    /// `Zhat^(p,q,p)_(a2,a1)(x, y)`.
    pub zhat_pqp: f64,
}

/// Evaluates the displayed integral forms of the two-step family with panel
/// Gauss quadrature split at the integrand kinks.
pub fn two_step_family(
    model: LevyModel,
    p: f64,
    q: f64,
    a2: f64,
    a1: f64,
    x: f64,
    y: f64,
) -> Result<TwoStepValues> {
    model.validate()?;
    if !(p >= 0.0 && q >= 0.0) {
        return Err(Error::domain("two-step levels must be >= 0"));
    }
    if !(0.0 <= a2 && a2 < a1) {
        return Err(Error::domain("two-step needs 0 <= a2 < a1"));
    }
    Ok(TwoStepValues {
        w_pq_a2: w_pq(model, p, q, a2, x)?,
        w_pqp: w_pqp(model, p, q, a2, a1, x)?,
        zhat_qp_a1: zhat_qp(model, p, q, a1, x, y)?,
        zhat_pqp: zhat_pqp(model, p, q, a2, a1, x, y)?,
    })
}

/// `W^(p,q)_(a2)(x) = W^(p)(x) + (q - p) int_{a2}^x W^(q)(x - z) W^(p)(z) dz`.
pub fn w_pq(model: LevyModel, p: f64, q: f64, a2: f64, x: f64) -> Result<f64> {
    let wp = ScaleEval::new(model, p)?;
    if p == q || x <= a2 {
        return Ok(wp.eval_w(x));
    }
    let wq = ScaleEval::new(model, q)?;
    let int = integrate_smooth(|z| wq.eval_w(x - z) * wp.eval_w(z), a2.max(0.0), x);
    Ok(wp.eval_w(x) + (q - p) * int)
}

/// `W^(p,q,p)_(a2,a1)(x) = W^(p,q)_(a2)(x) + (p - q) int_{a1}^x W^(p)(x - z) W^(p,q)_(a2)(z) dz`.
pub fn w_pqp(model: LevyModel, p: f64, q: f64, a2: f64, a1: f64, x: f64) -> Result<f64> {
    let head = w_pq(model, p, q, a2, x)?;
    if p == q || x <= a1 {
        return Ok(head);
    }
    let wp = ScaleEval::new(model, p)?;
    let int = integrate_smooth(
        |z| wp.eval_w(x - z) * w_pq(model, p, q, a2, z).unwrap_or(f64::NAN),
        a1,
        x,
    );
    if !int.is_finite() {
        return Err(Error::numerical("two-step outer integral failed"));
    }
    Ok(head + (p - q) * int)
}

/// `Zhat^(q,p)_(a1)(x, y) = Z^(p)(x - y) + (q - p) int_y^{a1} Z^(p)(x - z) W^(q)(z - y) dz`.
pub fn zhat_qp(model: LevyModel, p: f64, q: f64, a1: f64, x: f64, y: f64) -> Result<f64> {
    let zp = ScaleEval::new(model, p)?;
    if p == q || y >= a1 {
        return Ok(zp.eval_z(x - y));
    }
    let wq = ScaleEval::new(model, q)?;
    // Z^(p)(x - z) has a kink at z = x when x lies inside the range.
    let int = integrate_with_breakpoints(|z| zp.eval_z(x - z) * wq.eval_w(z - y), y, a1, &[x]);
    Ok(zp.eval_z(x - y) + (q - p) * int)
}

/// `Zhat^(p,q,p)_(a2,a1)(x, y) = Zhat^(q,p)_(a1)(x, y)
///   + (p - q) int_y^{a2} Zhat^(q,p)_(a1)(x, z) W^(p)(z - y) dz`.
pub fn zhat_pqp(model: LevyModel, p: f64, q: f64, a2: f64, a1: f64, x: f64, y: f64) -> Result<f64> {
    let head = zhat_qp(model, p, q, a1, x, y)?;
    if p == q || y >= a2 {
        return Ok(head);
    }
    let wp = ScaleEval::new(model, p)?;
    let int = integrate_with_breakpoints(
        |z| zhat_qp(model, p, q, a1, x, z).unwrap_or(f64::NAN) * wp.eval_w(z - y),
        y,
        a2,
        &[x],
    );
    if !int.is_finite() {
        return Err(Error::numerical("two-step Zhat outer integral failed"));
    }
    Ok(head + (p - q) * int)
}

/// Fully explicit one-step `W^(q,p)_(a)(t)` (weight `q` on `[0, a)`, `p` on
/// `[a, inf)`): the four-exponential expression when all roots are distinct,
/// falling back to quadrature in degenerate corners.
pub fn one_step_w(model: LevyModel, q: f64, p: f64, a: f64, t: f64) -> Result<f64> {
    let wq = ScaleEval::new(model, q)?;
    if (p - q).abs() < 1e-12 || t <= a {
        return Ok(wq.eval_w(t));
    }
    let wp = ScaleEval::new(model, p)?;
    let (r1, r2) = (wq.rho1(), wq.rho2());
    let (e1, e2) = (wp.rho1(), wp.rho2());
    if r1 - r2 < 1e-6 || e1 - e2 < 1e-6 {
        let int = integrate_smooth(|s| wp.eval_w(t - s) * wq.eval_w(s), a, t);
        return Ok(wq.eval_w(t) + (p - q) * int);
    }

    let value = match model {
        LevyModel::BrownianDrift { sigma, .. } => {
            let big_d = 0.5 * sigma * sigma;
            let pref = (p - q) / (big_d * big_d * (r1 - r2) * (e1 - e2));
            pref * (piece(r1, e1, a, t) - piece(r2, e1, a, t) - piece(r1, e2, a, t)
                + piece(r2, e2, a, t))
        }
        LevyModel::CramerLundbergExp { mu, beta, .. } => {
            let pref = (p - q) / (mu * mu * (r1 - r2) * (e1 - e2));
            pref * ((beta + e1) * (beta + r1) * piece(r1, e1, a, t)
                - (beta + e1) * (beta + r2) * piece(r2, e1, a, t)
                - (beta + e2) * (beta + r1) * piece(r1, e2, a, t)
                + (beta + e2) * (beta + r2) * piece(r2, e2, a, t))
        }
    };
    Ok(wq.eval_w(t) + value)
}

/// Fully explicit one-step `Zhat^(q,p)_(a)(t)`.
pub fn one_step_zhat(model: LevyModel, q: f64, p: f64, a: f64, t: f64) -> Result<f64> {
    let zq = ScaleEval::new(model, q)?;
    if (p - q).abs() < 1e-12 || t <= a {
        return Ok(zq.eval_z(t));
    }
    let wq = ScaleEval::new(model, q)?;
    let zp = ScaleEval::new(model, p)?;
    let (r1, r2) = (wq.rho1(), wq.rho2());
    let (e1, e2) = (zp.rho1(), zp.rho2());
    if r1 - r2 < 1e-6 || e1 - e2 < 1e-6 {
        let int = integrate_with_breakpoints(|s| zp.eval_z(t - s) * wq.eval_w(s), a, t, &[t]);
        return Ok(zq.eval_z(t) + (p - q) * int);
    }

    let value = match model {
        LevyModel::BrownianDrift { sigma, .. } => {
            let big_d = 0.5 * sigma * sigma;
            let pref = (p - q) / (big_d * (e2 - e1) * (r1 - r2));
            pref * (e2 * piece(r1, e1, a, t) - e2 * piece(r2, e1, a, t) - e1 * piece(r1, e2, a, t)
                + e1 * piece(r2, e2, a, t))
        }
        LevyModel::CramerLundbergExp { mu, beta, .. } => {
            let pref = (q - p) / (mu * beta * (e1 - e2) * (r1 - r2));
            pref * (e2 * (beta + e1) * (beta + r1) * piece(r1, e1, a, t)
                - e2 * (beta + e1) * (beta + r2) * piece(r2, e1, a, t)
                - e1 * (beta + e2) * (beta + r1) * piece(r1, e2, a, t)
                + e1 * (beta + e2) * (beta + r2) * piece(r2, e2, a, t))
        }
    };
    Ok(zq.eval_z(t) + value)
}

/// `int_a^t e^(eta (t - s)) e^(rho s) ds = (e^(rho t) - e^(rho a + eta (t - a))) / (rho - eta)`.
#[inline]
fn piece(rho: f64, eta: f64, a: f64, t: f64) -> f64 {
    ((rho * t).exp() - (rho * a + eta * (t - a)).exp()) / (rho - eta)
}

/// Residual `|W^(omega_u)(u - y, u - x) - W^(omega)(x, y)|` of the
/// reflection identity, both sides solved independently at spacing `h`.
pub fn reflected_weight_check(
    model: LevyModel,
    weight: &WeightFunction,
    u: f64,
    x: f64,
    y: f64,
    h: f64,
) -> Result<f64> {
    if !(u >= x && x >= y && y >= 0.0) {
        return Err(Error::domain("reflection check needs u >= x >= y >= 0"));
    }
    let direct = OmegaScaleGrid::solve(model, weight, u, h)?;
    let reflected = OmegaScaleGrid::solve(model, &weight.reflected(u)?, u, h)?;
    let lhs = reflected.value(u - y, u - x)?;
    let rhs = direct.value(x, y)?;
    Ok((lhs - rhs).abs())
}
