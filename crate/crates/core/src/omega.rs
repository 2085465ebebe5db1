//! The two-argument omega-scale function `W^(omega)(x, y)` and companions.
//!
//! For a fixed lower argument `y`, `W^(omega)(., y)` solves the second-kind
//! Volterra equation
//!
//! ```text
//! W^(omega)(x, y) = W(x - y) + int_y^x W(x - z) omega(z) W^(omega)(z, y) dz
//! ```
//!
//! with `W = W^(0)`. The solver marches in `x` with a product trapezoidal
//! rule; the diagonal node is treated implicitly because the kernel value
//! `W(0)` is nonzero for bounded-variation models. Because `W` restricted to
//! `[0, inf)` is an exponential-polynomial sum, the convolution sums are
//! updated in O(1) per node (multiply the per-exponent partial sums by the
//! cell decay factor, fold in the new endpoint), which makes the whole
//! triangle O(n^2).
//!
//! The same trick runs the second pass that fills the `y`-partial
//! `W^(omega)_2` and the dual-equation residual, both of which need, for
//! every node `(x_i, y_j)`, an integral of the row `W^(omega)(x_i, .)`
//! against a difference kernel.

use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::models::LevyModel;
use crate::scale::{ExpPoly, ScaleEval};
use crate::weight::WeightFunction;
use crate::{Error, Result};

/// Lower triangle (`j <= i`) of node values, row-major.
#[derive(Debug, Clone)]
struct Triangle {
    data: Vec<f64>,
}

impl Triangle {
    fn zeros(n: usize) -> Self {
        Triangle {
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    #[inline]
    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(j <= i);
        i * (i + 1) / 2 + j
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[Self::idx(i, j)]
    }

    fn row(&self, i: usize) -> &[f64] {
        let off = Self::idx(i, 0);
        &self.data[off..off + i + 1]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let off = Self::idx(i, 0);
        &mut self.data[off..off + i + 1]
    }
}

/// Per-exponent partial sums of a product-trapezoid convolution.
///
/// Holds, for each exponent `rho_m` of the kernel,
/// `b_m = sum_k w_k e^(rho_m v_k) f_k` and
/// `c_m = sum_k w_k v_k e^(rho_m v_k) f_k`
/// over the nodes accumulated so far, where `v_k` is the distance from the
/// moving integration endpoint. `advance` shifts every `v_k` by a cell
/// width; `add_at_zero` folds in a new node at distance zero. The value of
/// the convolution against any kernel sharing the exponents is then a dot
/// product with the kernel coefficients.
struct ConvAccum {
    rhos: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ConvAccum {
    fn new(kernel: &ExpPoly) -> Self {
        let rhos: Vec<f64> = kernel.terms.iter().map(|t| t.rho).collect();
        let m = rhos.len();
        ConvAccum {
            rhos,
            b: vec![0.0; m],
            c: vec![0.0; m],
        }
    }

    #[inline]
    fn add_at_zero(&mut self, weighted_value: f64) {
        for bm in self.b.iter_mut() {
            *bm += weighted_value;
        }
    }

    /// Fold in a node at distance `dist` from the endpoint;
    /// `dist_decay[m] = exp(rho_m * dist)`.
    #[inline]
    fn add_at_distance(&mut self, weighted_value: f64, dist: f64, dist_decay: &[f64]) {
        for ((bm, cm), d) in self.b.iter_mut().zip(self.c.iter_mut()).zip(dist_decay) {
            let v = weighted_value * d;
            *bm += v;
            *cm += v * dist;
        }
    }

    /// Shift all accumulated distances by `h`; `decay[m] = exp(rho_m * h)`.
    #[inline]
    fn advance(&mut self, h: f64, decay: &[f64]) {
        for ((bm, cm), d) in self.b.iter_mut().zip(self.c.iter_mut()).zip(decay) {
            *cm = d * (*cm + h * *bm);
            *bm *= d;
        }
    }

    /// Convolution value against a kernel with the same exponent list.
    #[inline]
    fn total(&self, kernel: &ExpPoly) -> f64 {
        let mut acc = 0.0;
        for (m, t) in kernel.terms.iter().enumerate() {
            debug_assert_eq!(t.rho, self.rhos[m]);
            acc += t.coeff * self.b[m] + t.slope * self.c[m];
        }
        acc
    }
}

/// Per-cell decay factors `exp(rho_m * width(cell))` for the kernel
/// exponents, precomputed so the inner loops stay multiply-add only.
fn cell_decays(mesh: &Mesh, rhos: &[f64]) -> Vec<Vec<f64>> {
    (0..mesh.len() - 1)
        .map(|k| rhos.iter().map(|&r| (r * mesh.width(k)).exp()).collect())
        .collect()
}

/// Half-cell decay factors `exp(rho_m * width(cell) / 2)`.
fn cell_mid_decays(mesh: &Mesh, rhos: &[f64]) -> Vec<Vec<f64>> {
    (0..mesh.len() - 1)
        .map(|k| {
            rhos.iter()
                .map(|&r| (0.5 * r * mesh.width(k)).exp())
                .collect()
        })
        .collect()
}

/// Triangular grid of `W^(omega)`, its `y`-partial, and derived sections on
/// a breakpoint-aligned mesh over `[0, x_max]`.
///
/// Construction is the only expensive step; a built grid is immutable and
/// all queries are cheap and pure.
#[derive(Debug, Clone)]
pub struct OmegaScaleGrid {
    model: LevyModel,
    weight: WeightFunction,
    mesh: Mesh,
    scale0: ScaleEval,
    w: Triangle,
    w2: Triangle,
    residual: Triangle,
    max_dual_residual: f64,
    max_w: f64,
    sec_w1: Vec<f64>,
    sec_zhat: Vec<f64>,
    sec_zhat2: Vec<f64>,
}

/// Node-count ceiling: the grid stores three O(n^2/2) triangles, so this
/// caps memory at roughly 1.5 GB.
const MAX_NODES: usize = 11_000;

impl OmegaScaleGrid {
    /// Solves the defining Volterra equation column by column.
    ///
    /// Requires `x_max > 0` and `0 < h <= x_max / 10`; the mesh builder also
    /// rejects spacings coarser than the narrowest breakpoint gap. A weight
    /// large enough to overflow the march reports a numerical failure.
    pub fn solve(
        model: LevyModel,
        weight: &WeightFunction,
        x_max: f64,
        h: f64,
    ) -> Result<OmegaScaleGrid> {
        model.validate()?;
        weight.validate()?;
        let mesh = Mesh::build(weight, x_max, h)?;
        let scale0 = ScaleEval::new(model, 0.0)?;
        let n = mesh.len();
        if n > MAX_NODES {
            return Err(Error::config(format!(
                "mesh of {n} nodes exceeds the {MAX_NODES}-node limit (triangle storage is quadratic); coarsen the mesh or shrink the range"
            )));
        }
        let w0 = scale0.w_at_zero();

        let w_kernel = scale0.w_kernel().clone();
        let wp_kernel = scale0.w_prime_kernel().clone();
        let rhos: Vec<f64> = w_kernel.terms.iter().map(|t| t.rho).collect();
        let decays = cell_decays(&mesh, &rhos);

        // Phase 1: independent y-columns of W^(omega).
        let columns: Vec<Result<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut col = vec![0.0; n - j];
                col[0] = w0;
                let mut acc = ConvAccum::new(&w_kernel);
                let yj = mesh.node(j);
                for i in (j + 1)..n {
                    let cell = i - 1;
                    let hw = mesh.width(cell);
                    let half = 0.5 * hw * mesh.cell_omega(cell);
                    acc.add_at_zero(half * col[i - 1 - j]);
                    acc.advance(hw, &decays[cell]);
                    let drive = scale0.eval_w(mesh.node(i) - yj);
                    let denom = 1.0 - half * w0;
                    if denom <= 0.5 {
                        return Err(Error::config(
                            "mesh too coarse for the weight magnitude (implicit step unstable)",
                        ));
                    }
                    let g = (drive + acc.total(&w_kernel)) / denom;
                    if !g.is_finite() {
                        return Err(Error::numerical(format!(
                            "omega-scale solve overflowed at x = {} (weight * range too large)",
                            mesh.node(i)
                        )));
                    }
                    col[i - j] = g;
                    acc.add_at_zero(half * g);
                }
                Ok(col)
            })
            .collect();

        let mut w = Triangle::zeros(n);
        for (j, col) in columns.into_iter().enumerate() {
            let col = col?;
            for (offset, v) in col.into_iter().enumerate() {
                let i = j + offset;
                w.row_mut(i)[j] = v;
            }
        }

        // Phase 2: per-row integrals give the y-partial and the residual of
        // the dual equation, marching the lower endpoint downward.
        //
        // The residual integral uses a staggered product rule (kernel at
        // cell midpoints). Evaluating the dual with the solver's own
        // trapezoid weights would return pure rounding noise: the discrete
        // primal solution satisfies that form of the dual identically, by
        // the push-through identity of the discrete resolvent. The
        // staggered rule makes the residual an order-h^2 error indicator.
        let wp_at0 = scale0.w_prime_right(0.0);
        let mid_decays = cell_mid_decays(&mesh, &rhos);
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = w.row(i);
                let xi = mesh.node(i);
                let mut w2_row = vec![0.0; i + 1];
                let mut res_row = vec![0.0; i + 1];
                w2_row[i] = -wp_at0 - row[i] * mesh.node_omega(i) * w0;
                let mut acc = ConvAccum::new(&w_kernel);
                let mut acc_mid = ConvAccum::new(&w_kernel);
                for j in (0..i).rev() {
                    let hw = mesh.width(j);
                    let half = 0.5 * hw * mesh.cell_omega(j);
                    acc.add_at_zero(half * row[j + 1]);
                    acc.advance(hw, &decays[j]);
                    acc.add_at_zero(half * row[j]);
                    acc_mid.advance(hw, &decays[j]);
                    acc_mid.add_at_distance(half * (row[j] + row[j + 1]), 0.5 * hw, &mid_decays[j]);
                    let v = xi - mesh.node(j);
                    let i1 = acc.total(&wp_kernel);
                    let i2 = acc_mid.total(&w_kernel);
                    w2_row[j] = -scale0.w_prime_right(v) - row[j] * mesh.node_omega(j) * w0 - i1;
                    res_row[j] = (row[j] - scale0.eval_w(v) - i2).abs();
                }
                (w2_row, res_row)
            })
            .collect();

        let mut w2 = Triangle::zeros(n);
        let mut residual = Triangle::zeros(n);
        let mut max_dual_residual = 0.0f64;
        for (i, (w2_row, res_row)) in rows.into_iter().enumerate() {
            w2.row_mut(i).copy_from_slice(&w2_row);
            for &r in &res_row {
                max_dual_residual = max_dual_residual.max(r);
            }
            residual.row_mut(i).copy_from_slice(&res_row);
        }

        let max_w = w.data.iter().copied().fold(0.0, f64::max);

        let mut grid = OmegaScaleGrid {
            model,
            weight: weight.clone(),
            mesh,
            scale0,
            w,
            w2,
            residual,
            max_dual_residual,
            max_w,
            sec_w1: Vec::new(),
            sec_zhat: Vec::new(),
            sec_zhat2: Vec::new(),
        };
        grid.fill_sections(&wp_kernel, &decays, wp_at0);
        Ok(grid)
    }

    #[allow(clippy::needless_range_loop)]
    fn fill_sections(&mut self, wp_kernel: &ExpPoly, decays: &[Vec<f64>], wp_at0: f64) {
        let n = self.mesh.len();
        let w0 = self.scale0.w_at_zero();

        // W^(omega)_1(x, 0) by forward march over the y = 0 column.
        let mut sec_w1 = vec![0.0; n];
        sec_w1[0] = wp_at0 + w0 * self.mesh.node_omega(0) * self.sec_w(0);
        let mut acc = ConvAccum::new(wp_kernel);
        for i in 1..n {
            let cell = i - 1;
            let hw = self.mesh.width(cell);
            let half = 0.5 * hw * self.mesh.cell_omega(cell);
            acc.add_at_zero(half * self.sec_w(i - 1));
            acc.advance(hw, &decays[cell]);
            let integral = acc.total(wp_kernel) + half * wp_at0 * self.sec_w(i);
            sec_w1[i] = self.scale0.w_prime_right(self.mesh.node(i))
                + integral
                + w0 * self.mesh.node_omega(i) * self.sec_w(i);
            acc.add_at_zero(half * self.sec_w(i));
        }

        // Zhat(x, 0) and Zhat_2(x, 0) as cumulative cell sums. Both
        // integrands are continuous in the integration variable (it is the
        // first argument of W and W2); only the weight factor jumps, and it
        // enters per cell.
        let mut sec_zhat = vec![1.0; n];
        let mut sec_zhat2 = vec![0.0; n];
        sec_zhat2[0] = -self.mesh.node_omega(0) * w0;
        for i in 1..n {
            let cell = i - 1;
            let half = 0.5 * self.mesh.width(cell) * self.mesh.cell_omega(cell);
            sec_zhat[i] = sec_zhat[i - 1] + half * (self.sec_w(i - 1) + self.sec_w(i));
            sec_zhat2[i] = sec_zhat2[i - 1] + half * (self.sec_w2(i - 1) + self.sec_w2(i));
        }

        self.sec_w1 = sec_w1;
        self.sec_zhat = sec_zhat;
        self.sec_zhat2 = sec_zhat2;
    }

    pub fn model(&self) -> LevyModel {
        self.model
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// The q = 0 scale evaluator the grid is built on.
    pub fn scale0(&self) -> &ScaleEval {
        &self.scale0
    }

    /// Largest dual-equation residual over all nodes.
    pub fn max_dual_residual(&self) -> f64 {
        self.max_dual_residual
    }

    /// Largest `W^(omega)` node value (scale for residual bounds).
    pub fn max_w(&self) -> f64 {
        self.max_w
    }

    /// `W^(omega)` at node indices (`j <= i`).
    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.w.get(i, j)
    }

    /// `W^(omega)_2` at node indices (`j <= i`; the diagonal holds the
    /// right limit in `y`).
    pub fn partial_w2_at(&self, i: usize, j: usize) -> f64 {
        self.w2.get(i, j)
    }

    /// `W^(omega)(x, y)` for mesh-node arguments; 0 when `x < y`.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        if x < y {
            return Ok(0.0);
        }
        let i = self.mesh.index_of(x)?;
        let j = self.mesh.index_of(y)?;
        Ok(self.w.get(i, j))
    }

    /// `W^(omega)_2(x, y)` for mesh-node arguments with `x > y`.
    pub fn partial_w2(&self, x: f64, y: f64) -> Result<f64> {
        let i = self.mesh.index_of(x)?;
        let j = self.mesh.index_of(y)?;
        if i <= j {
            return Err(Error::domain(format!(
                "partial_w2 needs x > y, got x={x}, y={y}"
            )));
        }
        Ok(self.w2.get(i, j))
    }

    /// `Zhat^(omega)(x, y)`; equals 1 for `x <= y`.
    pub fn z_hat(&self, x: f64, y: f64) -> Result<f64> {
        if x <= y {
            return Ok(1.0);
        }
        let i = self.mesh.index_of(x)?;
        let j = self.mesh.index_of(y)?;
        let mut acc = 1.0;
        for k in j..i {
            let half = 0.5 * self.mesh.width(k) * self.mesh.cell_omega(k);
            acc += half * (self.w.get(k, j) + self.w.get(k + 1, j));
        }
        Ok(acc)
    }

    /// Right partial derivatives `(Zhat_1, Zhat_2)` at mesh nodes.
    pub fn z_hat_partials(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let i = self.mesh.index_of(x)?;
        let j = self.mesh.index_of(y)?;
        if i < j {
            return Err(Error::domain(format!(
                "z_hat partials need x >= y, got x={x}, y={y}"
            )));
        }
        let z1 = self.mesh.node_omega(i) * self.w.get(i, j);
        let mut z2 = -self.mesh.node_omega(j) * self.scale0.w_at_zero();
        for k in j..i {
            let half = 0.5 * self.mesh.width(k) * self.mesh.cell_omega(k);
            z2 += half * (self.w2.get(k, j) + self.w2.get(k + 1, j));
        }
        Ok((z1, z2))
    }

    /// Residuals of the dual equation along row `i` (index `j <= i`),
    /// evaluated with a staggered product rule during the solve.
    pub fn dual_residual_row(&self, i: usize) -> Vec<f64> {
        self.residual.row(i).to_vec()
    }

    /// Dual residual at one node.
    pub fn dual_residual_at(&self, i: usize, j: usize) -> f64 {
        self.residual.get(i, j)
    }

    // Sections along y = 0, indexed by node.

    /// `W^(omega)(x_i, 0)`.
    pub fn sec_w(&self, i: usize) -> f64 {
        self.w.get(i, 0)
    }

    /// `W^(omega)_1(x_i, 0)`.
    pub fn sec_w1(&self, i: usize) -> f64 {
        self.sec_w1[i]
    }

    /// `W^(omega)_2(x_i, 0)`. Continuous in `x_i`; the section's jumps in
    /// the second argument never enter the `y = 0` pipelines.
    pub fn sec_w2(&self, i: usize) -> f64 {
        self.w2.get(i, 0)
    }

    /// `Zhat^(omega)(x_i, 0)`.
    pub fn sec_zhat(&self, i: usize) -> f64 {
        self.sec_zhat[i]
    }

    /// `Zhat^(omega)_1(x_i, 0) = omega(x_i) W^(omega)(x_i, 0)`.
    pub fn sec_zhat1(&self, i: usize) -> f64 {
        self.mesh.node_omega(i) * self.sec_w(i)
    }

    /// Left limit of `Zhat_1` at node `i`.
    pub fn sec_zhat1_left(&self, i: usize) -> f64 {
        self.mesh.node_omega_left(i) * self.sec_w(i)
    }

    /// `Zhat^(omega)_2(x_i, 0)`.
    pub fn sec_zhat2(&self, i: usize) -> f64 {
        self.sec_zhat2[i]
    }

    /// Left limit of the `W1` section at node `i` (the weight's point value
    /// enters through the `W(0) omega(x)` term).
    pub fn sec_w1_left(&self, i: usize) -> f64 {
        self.sec_w1[i]
            + self.scale0.w_at_zero()
                * (self.mesh.node_omega_left(i) - self.mesh.node_omega(i))
                * self.sec_w(i)
    }

    /// Linear interpolation of the `W^(omega)(., 0)` section; 0 below 0.
    pub fn sec_w_interp(&self, v: f64) -> f64 {
        self.interp(
            |i| self.sec_w(i),
            |i| self.sec_w(i),
            v,
            self.scale0.w_at_zero(),
        )
    }

    /// Linear interpolation of the `W1` section; 0 below 0. `W1` carries
    /// the weight's point value through its `W(0) omega(x)` term, so inside
    /// a cell the interpolation uses the one-sided values valid there.
    pub fn sec_w1_interp(&self, v: f64) -> f64 {
        self.interp(
            |i| self.sec_w1(i),
            |i| self.sec_w1_left(i),
            v,
            self.sec_w1[0],
        )
    }

    /// Linear interpolation of the `W2` section; 0 below 0. The section is
    /// continuous in its argument, so plain interpolation applies.
    pub fn sec_w2_interp(&self, v: f64) -> f64 {
        self.interp(|i| self.sec_w2(i), |i| self.sec_w2(i), v, self.sec_w2(0))
    }

    fn interp<R: Fn(usize) -> f64, L: Fn(usize) -> f64>(
        &self,
        right: R,
        left: L,
        v: f64,
        at_zero: f64,
    ) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        if v == 0.0 {
            return at_zero;
        }
        let nodes = self.mesh.nodes();
        let n = nodes.len();
        if v >= nodes[n - 1] {
            return right(n - 1);
        }
        let i = match nodes.binary_search_by(|x| x.partial_cmp(&v).unwrap()) {
            Ok(i) => return right(i),
            Err(i) => i,
        };
        let (x0, x1) = (nodes[i - 1], nodes[i]);
        let t = (v - x0) / (x1 - x0);
        // Within cell (i-1, i): right value at the left end, left limit at
        // the right end.
        right(i - 1) * (1.0 - t) + left(i) * t
    }
}
