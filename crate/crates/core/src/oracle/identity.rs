//! Discretized operator identity `AS − SA* = i∫₀ˡ (I + ψ(x)ψ(t)*) · dt` with
//! `(Af)(x) = i∫₀ˣ f`, `(A*f)(x) = −i∫ₓˡ f`, and `ψ = s`.
//!
//! All operators act on nodal values of the trapezoid grid; integrals are
//! cumulative trapezoid sums, so the `ψ = 0` case holds to rounding.

use crate::matrix::{CMatrix, C64, I};
use crate::oracle::nystrom::snapped_nodes;
use crate::transform::KernelModel;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct IdentityResidual {
    pub intervals: usize,
    /// Discrete Hilbert–Schmidt norm of the residual kernel.
    pub residual: f64,
    /// `residual / (1 + ‖K‖_HS)`.
    pub relative: f64,
}

/// Row-block operation `M ↦ L M`, `L` the cumulative trapezoid from the left.
fn cumulative_left(m: &CMatrix, nodes: &[f64], p: usize) -> CMatrix {
    let mut out = CMatrix::zeros(m.rows(), m.cols());
    for i in 1..nodes.len() {
        let h = 0.5 * (nodes[i] - nodes[i - 1]);
        for a in 0..p {
            let (r, prev, lo) = (i * p + a, (i - 1) * p + a, (i - 1) * p + a);
            for c in 0..m.cols() {
                out[(r, c)] = out[(prev, c)] + (m[(lo, c)] + m[(r, c)]) * h;
            }
        }
    }
    out
}

/// Column-block operation `M ↦ M L_R`, `L_R` the cumulative trapezoid from the right:
/// `(M L_R)_{·j} = (h_j/2)[j < N] Σ_{k≤j} M_{·k} + (h_{j−1}/2)[j ≥ 1] Σ_{k≤j−1} M_{·k}`.
fn times_cumulative_right(m: &CMatrix, nodes: &[f64], p: usize) -> CMatrix {
    let count = nodes.len();
    let mut out = CMatrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        for b in 0..p {
            let mut prefix = C64::default();
            let mut prev_prefix = C64::default();
            for j in 0..count {
                prefix += m[(r, j * p + b)];
                let mut acc = C64::default();
                if j + 1 < count {
                    acc += prefix * (0.5 * (nodes[j + 1] - nodes[j]));
                }
                if j >= 1 {
                    acc += prev_prefix * (0.5 * (nodes[j] - nodes[j - 1]));
                }
                out[(r, j * p + b)] = acc;
                prev_prefix = prefix;
            }
        }
    }
    out
}

/// Residual of the identity on `[0, l]` with `intervals` trapezoid intervals.
pub fn operator_identity_residual(
    km: &KernelModel,
    l: f64,
    intervals: usize,
) -> Result<IdentityResidual> {
    let nodes = snapped_nodes(km, l, intervals);
    let count = nodes.len();
    let p = km.p();
    let mut weights = vec![0.0; count];
    for (k, pair) in nodes.windows(2).enumerate() {
        weights[k] += 0.5 * (pair[1] - pair[0]);
        weights[k + 1] += 0.5 * (pair[1] - pair[0]);
    }
    let kernel = km.kernel_on_nodes(&nodes)?;
    let psi: Vec<CMatrix> = nodes.iter().map(|&x| km.s(x)).collect::<Result<_>>()?;

    // S = I + K W on nodal values
    let dim = p * count;
    let mut s = CMatrix::identity(dim);
    let mut rhs = CMatrix::zeros(dim, dim);
    for i in 0..count {
        for j in 0..count {
            let kb = &kernel[i * count + j];
            let gram = &psi[i] * &psi[j].adjoint();
            for a in 0..p {
                for b in 0..p {
                    s[(i * p + a, j * p + b)] += kb[(a, b)] * weights[j];
                    let id = if a == b { 1.0 } else { 0.0 };
                    rhs[(i * p + a, j * p + b)] = I * (gram[(a, b)] + id) * weights[j];
                }
            }
        }
    }
    // A S − S A* − RHS, with A = iL and A* = −iL_R
    let a_s = cumulative_left(&s, &nodes, p).scale(I);
    let s_a_adj = times_cumulative_right(&s, &nodes, p).scale(-I);
    let res = &(&a_s - &s_a_adj) - &rhs;

    // kernel-level HS norm: entry (i, j) carries the weight w_j
    let hs = |m: &CMatrix, skip_identity: bool| -> f64 {
        let mut acc = 0.0;
        for i in 0..count {
            for j in 0..count {
                for a in 0..p {
                    for b in 0..p {
                        let mut z = m[(i * p + a, j * p + b)];
                        if skip_identity && i == j && a == b {
                            z -= 1.0;
                        }
                        acc += z.norm_sqr() * weights[i] / weights[j];
                    }
                }
            }
        }
        acc.sqrt()
    };
    let residual = hs(&res, false);
    let k_norm = hs(&s, true);
    Ok(IdentityResidual {
        intervals,
        residual,
        relative: residual / (1.0 + k_norm),
    })
}
