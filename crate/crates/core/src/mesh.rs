//! Breakpoint-aligned meshes on `[0, x_max]`.
//!
//! Every weight breakpoint inside the range becomes a node, and the
//! requested spacing is shrunk per segment to the largest value that divides
//! the segment exactly. Cells therefore never straddle a discontinuity of
//! the weight, which keeps the product quadrature at full order.

use crate::weight::WeightFunction;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mesh {
    /// Node coordinates, `nodes[0] = 0`, strictly increasing to `x_max`.
    nodes: Vec<f64>,
    /// Width of cell `k = [nodes[k], nodes[k+1]]`.
    widths: Vec<f64>,
    /// Weight level on the open cell `(nodes[k], nodes[k+1])`.
    cell_omega: Vec<f64>,
    /// Right-continuous weight value at each node.
    node_omega: Vec<f64>,
    /// Left limit of the weight at each node (differs from `node_omega`
    /// exactly at breakpoint nodes).
    node_omega_left: Vec<f64>,
    /// Indices of nodes that are weight breakpoints (segment boundaries,
    /// excluding 0 and x_max).
    segment_nodes: Vec<usize>,
    x_max: f64,
    requested_h: f64,
}

impl Mesh {
    /// Builds the mesh for a weight on `[0, x_max]` with requested spacing
    /// `h`. Fails if `h` is not positive, exceeds a tenth of the range, or
    /// is coarser than the narrowest inter-breakpoint gap.
    pub fn build(weight: &WeightFunction, x_max: f64, h: f64) -> Result<Mesh> {
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::config(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::config(format!(
                "mesh spacing must be positive, got {h}"
            )));
        }
        if h > x_max / 10.0 {
            return Err(Error::config(format!(
                "mesh spacing {h} too coarse for range {x_max}; need h <= x_max / 10"
            )));
        }
        let bps: Vec<f64> = weight
            .breakpoints_ascending()
            .into_iter()
            .filter(|&b| b > 0.0 && b < x_max)
            .collect();

        let mut boundaries = Vec::with_capacity(bps.len() + 2);
        boundaries.push(0.0);
        boundaries.extend_from_slice(&bps);
        boundaries.push(x_max);
        for gap in boundaries.windows(2) {
            let g = gap[1] - gap[0];
            if g < h {
                return Err(Error::config(format!(
                    "mesh spacing {h} too coarse for breakpoint gap {g}; refine the mesh"
                )));
            }
        }

        let mut nodes = vec![0.0];
        let mut widths = Vec::new();
        let mut cell_omega = Vec::new();
        let mut segment_nodes = Vec::new();
        for seg in boundaries.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            // Tolerant ceil: a gap that is an exact multiple of h up to
            // representation noise keeps the exact cell count, so lattice
            // coordinates stay lattice nodes.
            let ratio = (hi - lo) / h;
            let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
                ratio.round().max(1.0) as usize
            } else {
                ratio.ceil().max(1.0) as usize
            };
            let hs = (hi - lo) / n as f64;
            let level = weight.value(0.5 * (lo + hi.min(lo + hs)));
            for k in 1..=n {
                // Exact endpoint at the segment boundary.
                let x = if k == n { hi } else { lo + k as f64 * hs };
                nodes.push(x);
                widths.push(x - nodes[nodes.len() - 2]);
                cell_omega.push(level);
            }
            if hi < x_max {
                segment_nodes.push(nodes.len() - 1);
            }
        }

        let node_omega: Vec<f64> = nodes.iter().map(|&x| weight.value(x)).collect();
        let node_omega_left: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                if x > 0.0 {
                    weight.value_left(x)
                } else {
                    weight.value(0.0)
                }
            })
            .collect();

        Ok(Mesh {
            nodes,
            widths,
            cell_omega,
            node_omega,
            node_omega_left,
            segment_nodes,
            x_max,
            requested_h: h,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Never true: construction guarantees at least eleven nodes.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn requested_h(&self) -> f64 {
        self.requested_h
    }

    /// Largest actual cell width (<= requested spacing).
    pub fn max_width(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.widths[cell]
    }

    pub fn cell_omega(&self, cell: usize) -> f64 {
        self.cell_omega[cell]
    }

    pub fn node_omega(&self, i: usize) -> f64 {
        self.node_omega[i]
    }

    pub fn node_omega_left(&self, i: usize) -> f64 {
        self.node_omega_left[i]
    }

    pub fn is_breakpoint_node(&self, i: usize) -> bool {
        self.segment_nodes.binary_search(&i).is_ok()
    }

    /// Index of the node equal to `x` (within a tight tolerance).
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let i = self.nearest_index(x);
        let d = (self.nodes[i] - x).abs();
        if d <= 1e-9 * x.abs().max(1.0) {
            Ok(i)
        } else {
            Err(Error::domain(format!(
                "{x} is not a mesh node (nearest is {} at distance {d:.3e})",
                self.nodes[i]
            )))
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        match self.nodes.binary_search_by(|n| n.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.nodes.len() => self.nodes.len() - 1,
            Err(i) => {
                if (self.nodes[i] - x).abs() < (x - self.nodes[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }
}
