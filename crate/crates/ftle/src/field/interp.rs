//! Separable interpolation kernels on uniform grids.
//!
//! Two modes: bilinear (C⁰, 2-point stencil per axis) and bicubic
//! (cubic-convolution / Catmull-Rom kernel: C¹, 4-point stencil per axis,
//! third-order accurate). Both reproduce node values exactly; edge stencils
//! clamp node indices, which replicates edge rows without disturbing
//! node-exactness. Derivative weights come from differentiating the kernel,
//! so gradients are the analytic derivatives of the interpolant.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    Bilinear,
    Bicubic,
}

impl InterpMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InterpMode::Bilinear => "bilinear",
            InterpMode::Bicubic => "bicubic",
        }
    }

    pub fn parse(s: &str) -> crate::Result<Self> {
        match s {
            "bilinear" => Ok(InterpMode::Bilinear),
            "bicubic" => Ok(InterpMode::Bicubic),
            other => Err(crate::FtleError::InvalidArgument(format!(
                "unknown interpolation mode '{other}' (expected bilinear or bicubic)"
            ))),
        }
    }
}

/// Weights and clamped node indices for one axis at one query position.
#[derive(Debug, Clone, Copy)]
pub struct AxisStencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
    /// d(weight)/d(coordinate); already divided by the grid spacing.
    pub dw: [f64; 4],
    pub len: usize,
}

/// Build the stencil for a continuous index `u = (x - origin) / dx` on an axis
/// with `n` nodes. `u` outside [0, n-1] is clamped (edge extrapolation).
pub fn axis_stencil(mode: InterpMode, u: f64, n: usize, dx: f64) -> AxisStencil {
    debug_assert!(n >= 2);
    let u = u.clamp(0.0, (n - 1) as f64);
    // Cell index so that s in [0, 1]; the top node maps to cell n-2, s = 1.
    let cell = (u.floor() as usize).min(n - 2);
    let s = u - cell as f64;
    match mode {
        InterpMode::Bilinear => {
            let mut st = AxisStencil {
                idx: [cell, cell + 1, 0, 0],
                w: [1.0 - s, s, 0.0, 0.0],
                dw: [-1.0 / dx, 1.0 / dx, 0.0, 0.0],
                len: 2,
            };
            // Exactly at the top node both weights collapse onto it anyway.
            if st.idx[1] > n - 1 {
                st.idx[1] = n - 1;
            }
            st
        }
        InterpMode::Bicubic => {
            let s2 = s * s;
            let s3 = s2 * s;
            // Catmull-Rom weights over nodes cell-1 .. cell+2.
            let w = [
                0.5 * (-s3 + 2.0 * s2 - s),
                0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
                0.5 * (-3.0 * s3 + 4.0 * s2 + s),
                0.5 * (s3 - s2),
            ];
            let dw = [
                0.5 * (-3.0 * s2 + 4.0 * s - 1.0) / dx,
                0.5 * (9.0 * s2 - 10.0 * s) / dx,
                0.5 * (-9.0 * s2 + 8.0 * s + 1.0) / dx,
                0.5 * (3.0 * s2 - 2.0 * s) / dx,
            ];
            let lo = cell as isize - 1;
            let mut idx = [0usize; 4];
            for (k, slot) in idx.iter_mut().enumerate() {
                *slot = (lo + k as isize).clamp(0, n as isize - 1) as usize;
            }
            AxisStencil {
                idx,
                w,
                dw,
                len: 4,
            }
        }
    }
}

/// Tensor-product evaluation of value and gradient of a scalar lattice.
/// `node(i, j)` returns the stored value at column `i`, row `j`.
pub fn eval_scalar<F: Fn(usize, usize) -> f64>(
    sx: &AxisStencil,
    sy: &AxisStencil,
    node: F,
) -> (f64, f64, f64) {
    let mut v = 0.0;
    let mut gx = 0.0;
    let mut gy = 0.0;
    for b in 0..sy.len {
        let j = sy.idx[b];
        // inner sum over x first: value and d/dx lines at row j
        let mut line = 0.0;
        let mut dline = 0.0;
        for a in 0..sx.len {
            let g = node(sx.idx[a], j);
            line += sx.w[a] * g;
            dline += sx.dw[a] * g;
        }
        v += sy.w[b] * line;
        gx += sy.w[b] * dline;
        gy += sy.dw[b] * line;
    }
    (v, gx, gy)
}

/// Same tensor product for a 2-component lattice (velocity nodes). Returns
/// (u, v, du/dx, du/dy, dv/dx, dv/dy).
#[allow(clippy::too_many_arguments)]
pub fn eval_pair<F: Fn(usize, usize) -> (f64, f64)>(
    sx: &AxisStencil,
    sy: &AxisStencil,
    node: F,
) -> ([f64; 2], [f64; 4]) {
    let mut val = [0.0; 2];
    let mut grad = [0.0; 4]; // ux, uy, vx, vy
    for b in 0..sy.len {
        let j = sy.idx[b];
        let mut line = [0.0; 2];
        let mut dline = [0.0; 2];
        for a in 0..sx.len {
            let (u, v) = node(sx.idx[a], j);
            line[0] += sx.w[a] * u;
            line[1] += sx.w[a] * v;
            dline[0] += sx.dw[a] * u;
            dline[1] += sx.dw[a] * v;
        }
        val[0] += sy.w[b] * line[0];
        val[1] += sy.w[b] * line[1];
        grad[0] += sy.w[b] * dline[0];
        grad[2] += sy.w[b] * dline[1];
        grad[1] += sy.dw[b] * line[0];
        grad[3] += sy.dw[b] * line[1];
    }
    (val, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(i: usize, j: usize) -> f64 {
        // smooth test surface sampled on a 9x9 unit-spaced grid
        let (x, y) = (i as f64, j as f64);
        0.3 * x * x - 0.1 * x * y + 0.05 * y * y + x - 2.0 * y + 1.0
    }

    #[test]
    fn weights_sum_to_one() {
        for mode in [InterpMode::Bilinear, InterpMode::Bicubic] {
            for q in [0.0, 0.25, 3.99, 7.5, 8.0] {
                let st = axis_stencil(mode, q, 9, 1.0);
                let sum: f64 = st.w[..st.len].iter().sum();
                assert!((sum - 1.0).abs() < 1e-14, "{mode:?} at {q}");
                let dsum: f64 = st.dw[..st.len].iter().sum();
                assert!(dsum.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn node_exact_both_modes() {
        for mode in [InterpMode::Bilinear, InterpMode::Bicubic] {
            for i in 0..9 {
                for j in 0..9 {
                    let sx = axis_stencil(mode, i as f64, 9, 1.0);
                    let sy = axis_stencil(mode, j as f64, 9, 1.0);
                    let (v, _, _) = eval_scalar(&sx, &sy, lattice);
                    assert!(
                        (v - lattice(i, j)).abs() < 1e-12,
                        "{mode:?} node ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn bicubic_reproduces_quadratics_inside() {
        // Catmull-Rom is exact on cubics per axis; the quadratic test surface
        // must interpolate exactly away from the clamped edge stencils.
        for (qx, qy) in [(2.3, 4.7), (5.5, 1.01), (3.25, 6.75)] {
            let sx = axis_stencil(InterpMode::Bicubic, qx, 9, 1.0);
            let sy = axis_stencil(InterpMode::Bicubic, qy, 9, 1.0);
            let (v, gx, gy) = eval_scalar(&sx, &sy, lattice);
            let exact = 0.3 * qx * qx - 0.1 * qx * qy + 0.05 * qy * qy + qx - 2.0 * qy + 1.0;
            assert!((v - exact).abs() < 1e-12);
            assert!((gx - (0.6 * qx - 0.1 * qy + 1.0)).abs() < 1e-12);
            assert!((gy - (-0.1 * qx + 0.1 * qy - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn bicubic_is_c1_across_cell_boundaries() {
        let eps = 1e-9;
        for edge in [2.0, 5.0] {
            let below = axis_stencil(InterpMode::Bicubic, edge - eps, 9, 1.0);
            let above = axis_stencil(InterpMode::Bicubic, edge + eps, 9, 1.0);
            let sy = axis_stencil(InterpMode::Bicubic, 3.4, 9, 1.0);
            let (vb, gb, _) = eval_scalar(&below, &sy, lattice);
            let (va, ga, _) = eval_scalar(&above, &sy, lattice);
            assert!((vb - va).abs() < 1e-7);
            assert!((gb - ga).abs() < 1e-6);
        }
    }

    #[test]
    fn bilinear_gradient_is_cell_slope() {
        let sx = axis_stencil(InterpMode::Bilinear, 2.5, 9, 1.0);
        let sy = axis_stencil(InterpMode::Bilinear, 4.5, 9, 1.0);
        let (_, gx, _) = eval_scalar(&sx, &sy, lattice);
        // FD slope of node values across the cell at the mid row
        let expect = 0.5
            * ((lattice(3, 4) - lattice(2, 4)) + (lattice(3, 5) - lattice(2, 5)));
        assert!((gx - expect).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_clamps_to_edge() {
        for mode in [InterpMode::Bilinear, InterpMode::Bicubic] {
            let inside = axis_stencil(mode, 8.0, 9, 1.0);
            let beyond = axis_stencil(mode, 9.7, 9, 1.0);
            let sy = axis_stencil(mode, 0.0, 9, 1.0);
            let (vi, _, _) = eval_scalar(&inside, &sy, lattice);
            let (vb, _, _) = eval_scalar(&beyond, &sy, lattice);
            assert!((vi - vb).abs() < 1e-12);
        }
    }
}
