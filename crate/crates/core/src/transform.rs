//! The transform `s(x)` of the Weyl data, its derivative `k(x)`, and the
//! semiseparable kernel `K(x, t)` of the operator `S_l = I + ∫K`.

use crate::matrix::{exp_integral, mat_exp, solve_sylvester, CMatrix, C64, I};
use crate::quadrature::GaussLegendre;
use crate::weyl::{DelayStructure, WeylData};
use crate::{Error, NumericalPolicy, Result};

/// Which one-sided limit to take where `k` jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `s(x) = C(x)R`; column `m` of `C` vanishes for `x ≤ d_m` and equals
/// `2θ₁*(∫₀^{x−d_m} e^{2itβ}dt)θ₂,m` beyond.
pub fn s_of_x(w: &WeylData, x: f64) -> Result<CMatrix> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("s(x) needs x ≥ 0, got {x}")));
    }
    let (n, p) = (w.n(), w.p());
    let gen = w.beta.scale(2.0 * I);
    let theta1_adj = w.theta1.adjoint().scale_real(2.0);
    let mut c = CMatrix::zeros(p, p);
    for (m, &d) in w.delays.iter().enumerate() {
        if x <= d {
            continue;
        }
        let integral = exp_integral(&gen, x - d)?;
        let col = &theta1_adj * &(&integral * &w.theta2.block(0, m, n, 1));
        c.set_block(0, m, &col);
    }
    Ok(c * &w.r)
}

fn k_with_mask(w: &WeylData, x: f64, active: impl Fn(f64) -> bool) -> Result<CMatrix> {
    let p = w.p();
    let mut chi = CMatrix::zeros(p, p);
    let mut any = false;
    for (m, &d) in w.delays.iter().enumerate() {
        if active(d) {
            chi[(m, m)] = C64::new(1.0, 0.0);
            any = true;
        }
    }
    if !any {
        return Ok(CMatrix::zeros(p, p));
    }
    let e = mat_exp(&w.beta.scale(2.0 * I * x))?;
    let nu = delayed_theta2(w)?;
    Ok((&w.theta1.adjoint() * &e * &nu * &chi * &w.r).scale_real(2.0))
}

/// `k(x) = s′(x) = 2θ₁*e^{2ixβ}νχ(x)R` with `χ_m(x) = 1` for `x > d_m`.
///
/// Positive delays are jump points and are rejected; `x = 0` is taken as the
/// right limit since the half-axis has only one side there.
pub fn k_of_x(w: &WeylData, x: f64) -> Result<CMatrix> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("k(x) needs x ≥ 0, got {x}")));
    }
    if x > 0.0 && w.delays.contains(&x) {
        return Err(Error::OnBreakpoint { x });
    }
    k_one_sided(w, x, Side::Right)
}

/// One-sided limit of `k` at `x`; equal to [`k_of_x`] away from delays.
pub fn k_one_sided(w: &WeylData, x: f64, side: Side) -> Result<CMatrix> {
    match side {
        Side::Left => k_with_mask(w, x, |d| d < x),
        Side::Right => k_with_mask(w, x, |d| d <= x),
    }
}

/// `ν`: column `m` is `e^{−2id_mβ}θ₂,m`.
pub fn delayed_theta2(w: &WeylData) -> Result<CMatrix> {
    let (n, p) = (w.n(), w.p());
    let mut nu = CMatrix::zeros(n, p);
    for (m, &d) in w.delays.iter().enumerate() {
        let col = w.theta2.block(0, m, n, 1);
        let shifted = if d == 0.0 {
            col
        } else {
            &mat_exp(&w.beta.scale(-2.0 * I * d))? * &col
        };
        nu.set_block(0, m, &shifted);
    }
    Ok(nu)
}

/// Sylvester jump data of the kernel, fixed once per Weyl data.
#[derive(Debug, Clone)]
pub struct KernelModel {
    pub weyl: WeylData,
    pub delays: DelayStructure,
    pub policy: NumericalPolicy,
    pub nu: CMatrix,
    /// `Q_j = νP_jν*`, `j = 1..=k` (stored from index 0).
    pub q: Vec<CMatrix>,
    /// Hermitian solutions of `i(βX_j − X_jβ*) = Q_j`.
    pub x: Vec<CMatrix>,
    /// `Z_m = Σ_{j≤m} X_j` for `m = 0..=k`.
    pub z: Vec<CMatrix>,
    /// `Z̃_m = Σ_{j≤m} e^{2id̃_jβ}X_je^{−2id̃_jβ*}` for `m = 0..=k`.
    pub z_tilde: Vec<CMatrix>,
}

impl KernelModel {
    pub fn build(weyl: &WeylData, policy: &NumericalPolicy) -> Result<Self> {
        let delays = weyl.validate(policy)?;
        let (n, p) = (weyl.n(), weyl.p());
        let nu = delayed_theta2(weyl)?;
        let mut q = Vec::with_capacity(delays.count());
        let mut x = Vec::with_capacity(delays.count());
        let mut z = vec![CMatrix::zeros(n, n)];
        let mut z_tilde = vec![CMatrix::zeros(n, n)];
        for j in 1..=delays.count() {
            let qj = (&nu * &delays.projector(j, p) * &nu.adjoint()).hermitian_part();
            let xj = solve_sylvester(&weyl.beta, &qj, policy.spectral_gap_tol)?;
            let e = mat_exp(&weyl.beta.scale(2.0 * I * delays.distinct(j)))?;
            let shifted = (&e * &xj * &e.adjoint()).hermitian_part();
            z.push(z.last().unwrap() + &xj);
            z_tilde.push(z_tilde.last().unwrap() + &shifted);
            q.push(qj);
            x.push(xj);
        }
        Ok(Self {
            weyl: weyl.clone(),
            delays,
            policy: *policy,
            nu,
            q,
            x,
            z,
            z_tilde,
        })
    }

    pub fn n(&self) -> usize {
        self.weyl.n()
    }

    pub fn p(&self) -> usize {
        self.weyl.p()
    }

    /// `√2 θ₁* e^{2ixβ}`: the row factor shared by `K`, `C(x)` and the recovery.
    pub fn left_factor(&self, x: f64) -> Result<CMatrix> {
        let e = mat_exp(&self.weyl.beta.scale(2.0 * I * x))?;
        Ok((&self.weyl.theta1.adjoint() * &e).scale_real(std::f64::consts::SQRT_2))
    }

    /// `√2 (Z_m e^{−2itβ*} − e^{−2itβ}Z̃_m) θ₁`, so that `K(x, t)` for `x > t` is
    /// `left_factor(x) · right_factor(t, m(t))`.
    pub fn right_factor(&self, t: f64, m: usize) -> Result<CMatrix> {
        let n = self.n();
        if m == 0 {
            return Ok(CMatrix::zeros(n, self.p()));
        }
        let e_minus = mat_exp(&self.weyl.beta.scale(-2.0 * I * t))?;
        // e^{−2itβ*} = (e^{2itβ})*
        let e_plus_adj = mat_exp(&self.weyl.beta.scale(2.0 * I * t))?.adjoint();
        let inner = &(&self.z[m] * &e_plus_adj) - &(&e_minus * &self.z_tilde[m]);
        Ok((&inner * &self.weyl.theta1).scale_real(std::f64::consts::SQRT_2))
    }

    /// `K(x, t)`; for `x < t` the Hermitian reflection `K(t, x)*`, and on the
    /// diagonal the limit from `x > t`.
    pub fn kernel_k(&self, x: f64, t: f64) -> Result<CMatrix> {
        if x < t {
            return Ok(self.kernel_k(t, x)?.adjoint());
        }
        let m = self.delays.segment_index(t);
        if m == 0 {
            return Ok(CMatrix::zeros(self.p(), self.p()));
        }
        Ok(&self.left_factor(x)? * &self.right_factor(t, m)?)
    }

    /// Kernel blocks on a node set, row-major (`out[i * N + j] = K(x_i, x_j)`).
    /// Each exponential is computed once per node.
    pub fn kernel_on_nodes(&self, nodes: &[f64]) -> Result<Vec<CMatrix>> {
        let n_nodes = nodes.len();
        let left: Vec<CMatrix> = nodes
            .iter()
            .map(|&x| self.left_factor(x))
            .collect::<Result<_>>()?;
        let right: Vec<CMatrix> = nodes
            .iter()
            .map(|&t| self.right_factor(t, self.delays.segment_index(t)))
            .collect::<Result<_>>()?;
        let p = self.p();
        let mut out = vec![CMatrix::zeros(p, p); n_nodes * n_nodes];
        for i in 0..n_nodes {
            for j in 0..=i {
                let block = &left[i] * &right[j];
                if i != j {
                    out[j * n_nodes + i] = block.adjoint();
                }
                out[i * n_nodes + j] = block;
            }
        }
        Ok(out)
    }

    pub fn k(&self, x: f64) -> Result<CMatrix> {
        k_of_x(&self.weyl, x)
    }

    pub fn k_one_sided(&self, x: f64, side: Side) -> Result<CMatrix> {
        k_one_sided(&self.weyl, x, side)
    }

    pub fn s(&self, x: f64) -> Result<CMatrix> {
        s_of_x(&self.weyl, x)
    }
}

/// `K(x, t) = ½∫_{|x−t|}^{x+t} k((r+x−t)/2) k((r+t−x)/2)* dr` by adaptive
/// Gauss–Legendre, split wherever either argument crosses a delay.
pub fn kernel_k_direct(w: &WeylData, x: f64, t: f64, abs_tol: f64) -> Result<CMatrix> {
    let p = w.p();
    let (lo, hi) = ((x - t).abs(), x + t);
    if hi <= lo {
        return Ok(CMatrix::zeros(p, p));
    }
    let mut breaks = vec![lo, hi];
    for &d in &w.delays {
        for r in [2.0 * d - (x - t), 2.0 * d + (x - t)] {
            if r > lo && r < hi {
                breaks.push(r);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let rule = GaussLegendre::new(10);
    let mut failure = None;
    let mut integrand = |r: f64| {
        let a = k_one_sided(w, 0.5 * (r + x - t), Side::Right);
        let b = k_one_sided(w, 0.5 * (r + t - x), Side::Right);
        match (a, b) {
            (Ok(a), Ok(b)) => &a * &b.adjoint(),
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                CMatrix::zeros(p, p)
            }
        }
    };
    let mut total = CMatrix::zeros(p, p);
    let pieces = (breaks.len() - 1) as f64;
    for pair in breaks.windows(2) {
        total += &rule.integrate_adaptive(pair[0], pair[1], abs_tol / pieces, &mut integrand);
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(total.scale_real(0.5)),
    }
}
