//! Explicit inversion of `S_l = I + ∫K`: the fundamental solution `U(x)` of
//! `U′ = B(x)C(x)U`, the projector `P^×`, and the resolvent kernel `T(x, t)`.
//!
//! All `2n × 2n` matrices use the block split `[[·₁₁, ·₁₂], [·₂₁, ·₂₂]]` with
//! `n × n` blocks.

use std::f64::consts::SQRT_2;

use crate::matrix::{mat_exp, CMatrix, Lu, I};
use crate::transform::KernelModel;
use crate::{Error, Result};

/// `J = [[0, −I], [I, 0]]`.
pub fn j_matrix(n: usize) -> CMatrix {
    let id = CMatrix::identity(n);
    CMatrix::block2(&CMatrix::zeros(n, n), &(-&id), &id, &CMatrix::zeros(n, n))
}

/// `U⁻¹ = JU*J*` for J-unitary `U`.
pub fn j_inverse(u: &CMatrix) -> CMatrix {
    let n = u.rows() / 2;
    let j = j_matrix(n);
    &j * &u.adjoint() * &j.adjoint()
}

/// Data of one delay segment `[d̃_m, d̃_{m+1}]`.
#[derive(Debug, Clone)]
pub struct SegmentData {
    pub index: usize,
    pub start: f64,
    /// Next distinct delay, or `+∞` on the last segment.
    pub end: f64,
    /// `𝒜_m^× = 𝒜 + 2Y_m`, `Y_m = [Z̃_m; I]θ₁θ₁*[I, −Z̃_m]`.
    pub a_cross: CMatrix,
    /// `Ω_m = [[I, −Z_m], [0, I]]`.
    pub omega: CMatrix,
    /// `Ξ_m = Ω_m e^{−d̃_m𝒜} e^{d̃_m𝒜_m^×}`.
    pub xi: CMatrix,
    /// `Ξ_m⁻¹ = e^{−d̃_m𝒜_m^×} e^{d̃_m𝒜} Ω_m⁻¹`, formed without a solve.
    pub xi_inv: CMatrix,
    /// `U(d̃_m)`.
    pub u_start: CMatrix,
    /// `e^{d̃_m𝒜} Ω_m⁻¹ U(d̃_m)`, so `U(x) = Ω_m e^{−x𝒜} e^{(x−d̃_m)𝒜_m^×} · local_start`.
    local_start: CMatrix,
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution<'a> {
    km: &'a KernelModel,
    segments: Vec<SegmentData>,
    l: f64,
}

impl<'a> FundamentalSolution<'a> {
    pub fn new(km: &'a KernelModel, l: f64) -> Result<Self> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "endpoint l must be finite and ≥ 0, got {l}"
            )));
        }
        let mut fs = Self {
            km,
            segments: Vec::new(),
            l: 0.0,
        };
        fs.push_segment(0, CMatrix::identity(2 * km.n()))?;
        fs.extend_to(l)?;
        Ok(fs)
    }

    pub fn kernel_model(&self) -> &'a KernelModel {
        self.km
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn segments(&self) -> &[SegmentData] {
        &self.segments
    }

    /// The same solution viewed on `[0, l]` for `l` within the current range.
    pub fn restricted(&self, l: f64) -> Result<Self> {
        if !(0.0..=self.l).contains(&l) {
            return Err(Error::OutOfRange { x: l, l: self.l });
        }
        let keep = self.km.delays.segment_index(l) + 1;
        Ok(Self {
            km: self.km,
            segments: self.segments[..keep].to_vec(),
            l,
        })
    }

    /// Extends coverage to `[0, l]`; earlier segments are reused unchanged.
    pub fn extend_to(&mut self, l: f64) -> Result<()> {
        if l < self.l {
            return Err(Error::InvalidArgument(format!(
                "cannot shrink from {} to {l}",
                self.l
            )));
        }
        let needed = self.km.delays.segment_index(l);
        while self.segments.len() <= needed {
            let m = self.segments.len();
            let start = self.km.delays.distinct(m);
            let u_start = self.eval_in(&self.segments[m - 1], start)?;
            self.push_segment(m, u_start)?;
        }
        self.l = l;
        Ok(())
    }

    fn push_segment(&mut self, m: usize, u_start: CMatrix) -> Result<()> {
        let km = self.km;
        let n = km.n();
        let start = km.delays.distinct(m);
        let end = if m < km.delays.count() {
            km.delays.distinct(m + 1)
        } else {
            f64::INFINITY
        };
        let id = CMatrix::identity(n);
        let zt = &km.z_tilde[m];
        let theta = &km.weyl.theta1;
        let left = zt.vstack(&id);
        let right = id.hstack(&(-zt));
        let y = &left * &(theta * &theta.adjoint()) * &right;
        let a_cross = &self.a_matrix() + &y.scale_real(2.0);
        let omega = CMatrix::block2(&id, &(-&km.z[m]), &CMatrix::zeros(n, n), &id);
        let omega_inv = CMatrix::block2(&id, &km.z[m], &CMatrix::zeros(n, n), &id);
        let e_cross = mat_exp(&a_cross.scale_real(start))?;
        let e_cross_inv = mat_exp(&a_cross.scale_real(-start))?;
        let xi = &omega * &self.exp_a(-start)? * &e_cross;
        let xi_inv = &e_cross_inv * &self.exp_a(start)? * &omega_inv;
        let local_start = &self.exp_a(start)? * &omega_inv * &u_start;
        self.segments.push(SegmentData {
            index: m,
            start,
            end,
            a_cross,
            omega,
            xi,
            xi_inv,
            u_start,
            local_start,
        });
        Ok(())
    }

    /// `𝒜 = 2i diag(β, β*)`.
    pub fn a_matrix(&self) -> CMatrix {
        let beta = &self.km.weyl.beta;
        let n = beta.rows();
        CMatrix::block2(
            &beta.scale(2.0 * I),
            &CMatrix::zeros(n, n),
            &CMatrix::zeros(n, n),
            &beta.adjoint().scale(2.0 * I),
        )
    }

    /// `e^{s𝒜} = diag(e^{2isβ}, (e^{−2isβ})*)`.
    fn exp_a(&self, s: f64) -> Result<CMatrix> {
        let beta = &self.km.weyl.beta;
        let n = beta.rows();
        let top = mat_exp(&beta.scale(2.0 * I * s))?;
        let bottom = mat_exp(&beta.scale(-2.0 * I * s))?.adjoint();
        Ok(CMatrix::block2(
            &top,
            &CMatrix::zeros(n, n),
            &CMatrix::zeros(n, n),
            &bottom,
        ))
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if !(0.0..=self.l).contains(&x) {
            return Err(Error::OutOfRange { x, l: self.l });
        }
        Ok(())
    }

    pub fn segment_at(&self, x: f64) -> &SegmentData {
        &self.segments[self.km.delays.segment_index(x)]
    }

    fn eval_in(&self, seg: &SegmentData, x: f64) -> Result<CMatrix> {
        // paired order: the growing factor acts on the stored columns first
        let inner = &mat_exp(&seg.a_cross.scale_real(x - seg.start))? * &seg.local_start;
        Ok(&seg.omega * &(&self.exp_a(-x)? * &inner))
    }

    pub fn u_at(&self, x: f64) -> Result<CMatrix> {
        self.check_range(x)?;
        self.eval_in(self.segment_at(x), x)
    }

    /// `U(x)` by the segment formula exactly as written,
    /// `Ω_m e^{−x𝒜} e^{x𝒜_m^×} Ξ_m⁻¹ U(d̃_m)`.
    pub fn u_at_literal(&self, x: f64) -> Result<CMatrix> {
        self.check_range(x)?;
        let seg = self.segment_at(x);
        let e = mat_exp(&seg.a_cross.scale_real(x))?;
        Ok(&seg.omega * &self.exp_a(-x)? * &e * &seg.xi_inv * &seg.u_start)
    }

    pub fn u_inv_at(&self, x: f64) -> Result<CMatrix> {
        Ok(j_inverse(&self.u_at(x)?))
    }

    /// `B(x) = √2 [e^{−2ixβ}Z̃_m − Z_m e^{−2ixβ*}; e^{−2ixβ*}] θ₁`.
    pub fn b_of(&self, x: f64) -> Result<CMatrix> {
        let km = self.km;
        let m = km.delays.segment_index(x);
        let beta = &km.weyl.beta;
        let e_minus = mat_exp(&beta.scale(-2.0 * I * x))?;
        let e_minus_adj = mat_exp(&beta.scale(2.0 * I * x))?.adjoint();
        let top = &(&e_minus * &km.z_tilde[m]) - &(&km.z[m] * &e_minus_adj);
        Ok((top.vstack(&e_minus_adj) * &km.weyl.theta1).scale_real(SQRT_2))
    }

    /// `C(x) = √2 θ₁* [e^{2ixβ}, e^{2ixβ}Z_m − Z̃_m e^{2ixβ*}]`.
    pub fn c_of(&self, x: f64) -> Result<CMatrix> {
        let km = self.km;
        let m = km.delays.segment_index(x);
        let beta = &km.weyl.beta;
        let e_plus = mat_exp(&beta.scale(2.0 * I * x))?;
        let e_plus_adj = mat_exp(&beta.scale(-2.0 * I * x))?.adjoint();
        let right = &(&e_plus * &km.z[m]) - &(&km.z_tilde[m] * &e_plus_adj);
        Ok((&km.weyl.theta1.adjoint() * &e_plus.hstack(&right)).scale_real(SQRT_2))
    }

    /// `H(x) = B(x)C(x)`.
    pub fn h_at(&self, x: f64) -> Result<CMatrix> {
        Ok(&self.b_of(x)? * &self.c_of(x)?)
    }

    /// `F̃(x) = √2 θ₁* [I, −Z̃_m] e^{x𝒜_m^×} Ξ_m⁻¹ U(d̃_m)`.
    pub fn f_tilde(&self, x: f64) -> Result<CMatrix> {
        self.check_range(x)?;
        let km = self.km;
        let seg = self.segment_at(x);
        let row = CMatrix::identity(km.n()).hstack(&(-&km.z_tilde[seg.index]));
        let e = mat_exp(&seg.a_cross.scale_real(x))?;
        Ok((&km.weyl.theta1.adjoint() * &row * &e * &seg.xi_inv * &seg.u_start).scale_real(SQRT_2))
    }

    /// `G̃(t) = √2 U(d̃_m)⁻¹ Ξ_m e^{−t𝒜_m^×} [Z̃_m; I] θ₁`.
    pub fn g_tilde(&self, t: f64) -> Result<CMatrix> {
        self.check_range(t)?;
        let km = self.km;
        let seg = self.segment_at(t);
        let col = km.z_tilde[seg.index].vstack(&CMatrix::identity(km.n()));
        let e = mat_exp(&seg.a_cross.scale_real(-t))?;
        Ok((&j_inverse(&seg.u_start) * &seg.xi * &e * &col * &km.weyl.theta1).scale_real(SQRT_2))
    }

    /// `G̃(t) = U(t)⁻¹B(t)`, the same quantity without the large factor `e^{−t𝒜_m^×}`.
    pub fn g_tilde_stable(&self, t: f64) -> Result<CMatrix> {
        Ok(&self.u_inv_at(t)? * &self.b_of(t)?)
    }

    /// `‖U(x)*JU(x) − J‖` (Frobenius). The product is formed in doubled
    /// precision: for large `U` a plain product would add rounding of order
    /// `ε‖U‖²` that is not present in `U` itself.
    pub fn j_unitarity_defect(&self, x: f64) -> Result<f64> {
        let u = self.u_at(x)?;
        let j = j_matrix(self.km.n());
        Ok((&u.adjoint_mul_compensated(&(&j * &u)) - &j).norm_fro())
    }
}

/// Inverse of `S_l` in closed form.
#[derive(Debug, Clone)]
pub struct ResolventModel<'a> {
    fs: FundamentalSolution<'a>,
    u_l: CMatrix,
    p_cross: CMatrix,
    /// `√2 θ₁* e^{2ilβ} (U₂₂(l)*)⁻¹`, the nonzero block of `F̃(l)(I − P^×)`.
    endpoint_left: CMatrix,
    u22_rcond: f64,
}

impl<'a> ResolventModel<'a> {
    pub fn new(fs: FundamentalSolution<'a>) -> Result<Self> {
        let l = fs.l();
        let n = fs.kernel_model().n();
        let u_l = fs.u_at(l)?;
        let u21 = u_l.block(n, 0, n, n);
        let u22 = u_l.block(n, n, n, n);
        let min_rcond = fs.kernel_model().policy.u22_rcond_min;
        let lu = Lu::new(&u22).map_err(|e| match e {
            crate::matrix::LinalgError::Singular { rcond } => Error::U22Singular { l, rcond },
            other => other.into(),
        })?;
        let u22_rcond = lu.rcond();
        if u22_rcond < min_rcond {
            return Err(Error::U22Singular {
                l,
                rcond: u22_rcond,
            });
        }
        let lower = lu.solve(&u21)?;
        let p_cross = CMatrix::block2(
            &CMatrix::zeros(n, n),
            &CMatrix::zeros(n, n),
            &lower,
            &CMatrix::identity(n),
        );
        // c U₂₂^{-*} = (U₂₂⁻¹ c*)*
        let c1 = fs.kernel_model().left_factor(l)?;
        let endpoint_left = lu.solve(&c1.adjoint())?.adjoint();
        Ok(Self {
            fs,
            u_l,
            p_cross,
            endpoint_left,
            u22_rcond,
        })
    }

    pub fn fundamental(&self) -> &FundamentalSolution<'a> {
        &self.fs
    }

    pub fn l(&self) -> f64 {
        self.fs.l()
    }

    pub fn u_l(&self) -> &CMatrix {
        &self.u_l
    }

    pub fn p_cross(&self) -> &CMatrix {
        &self.p_cross
    }

    pub fn u22_rcond(&self) -> f64 {
        self.u22_rcond
    }

    pub fn endpoint_left(&self) -> &CMatrix {
        &self.endpoint_left
    }

    /// `T(x, t) = F̃(x)(I − P^×)G̃(t)` for `x > t` and `−F̃(x)P^×G̃(t)` for `x < t`;
    /// the diagonal takes the `x > t` branch.
    pub fn kernel_t(&self, x: f64, t: f64) -> Result<CMatrix> {
        let f = self.fs.f_tilde(x)?;
        let g = self.fs.g_tilde(t)?;
        let n2 = self.p_cross.rows();
        if x >= t {
            let proj = &CMatrix::identity(n2) - &self.p_cross;
            Ok(&f * &proj * &g)
        } else {
            Ok(-&(&f * &self.p_cross * &g))
        }
    }

    /// `T(l, t)` from the reduced endpoint factor: only the top block of
    /// `G̃(t)` survives `(I − P^×)`.
    pub fn endpoint_row(&self, t: f64) -> Result<CMatrix> {
        let n = self.fs.kernel_model().n();
        let g = self.fs.g_tilde_stable(t)?;
        Ok(&self.endpoint_left * &g.block(0, 0, n, g.cols()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::matrix::C64;
    use crate::weyl::WeylData;
    use crate::NumericalPolicy;

    fn model(w: &WeylData) -> KernelModel {
        KernelModel::build(w, &NumericalPolicy::default()).unwrap()
    }

    fn random_models() -> Vec<KernelModel> {
        let policy = NumericalPolicy::default();
        (0..10)
            .map(|s| {
                KernelModel::build(
                    &cases::random_pseudo_exponential(s)
                        .to_weyl(&policy)
                        .unwrap(),
                    &policy,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_theta1_gives_identity() {
        let mut w = cases::two_delay();
        w.theta1 = CMatrix::zeros(2, 2);
        let km = model(&w);
        let fs = FundamentalSolution::new(&km, 1.5).unwrap();
        for x in [0.0, 0.3, 0.9, 1.5] {
            assert!(fs.u_at(x).unwrap().max_abs_diff(&CMatrix::identity(4)) < 1e-13);
        }
        let rm = ResolventModel::new(fs).unwrap();
        let want = CMatrix::block2(
            &CMatrix::zeros(2, 2),
            &CMatrix::zeros(2, 2),
            &CMatrix::zeros(2, 2),
            &CMatrix::identity(2),
        );
        assert!(rm.p_cross().max_abs_diff(&want) < 1e-13);
        assert!(rm.kernel_t(0.8, 0.2).unwrap().norm_max() < 1e-13);
    }

    #[test]
    fn segments_and_continuity() {
        let km = model(&cases::two_delay());
        let mut fs = FundamentalSolution::new(&km, 0.5).unwrap();
        assert_eq!(fs.segments().len(), 2);
        fs.extend_to(2.0).unwrap();
        assert_eq!(fs.segments().len(), 3);
        assert!(fs.extend_to(1.0).is_err());
        assert_eq!(fs.u_at(0.0).unwrap(), CMatrix::identity(4));
        for seg in &fs.segments()[1..] {
            let d = seg.start;
            let below = fs.u_at(d - 1e-12).unwrap();
            let above = fs.u_at(d + 1e-12).unwrap();
            assert!(below.max_abs_diff(&above) < 1e-10);
            // Ω_m is unit block upper triangular with inverse [[I, Z], [0, I]]
            let omega_inv = CMatrix::block2(
                &CMatrix::identity(2),
                &km.z[seg.index],
                &CMatrix::zeros(2, 2),
                &CMatrix::identity(2),
            );
            assert!((&seg.omega * &omega_inv).max_abs_diff(&CMatrix::identity(4)) < 1e-15);
            assert!((&seg.xi * &seg.xi_inv).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        }
        assert!(matches!(fs.u_at(2.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn first_segment_is_plain_product() {
        let km = model(&cases::scalar(0.5));
        let fs = FundamentalSolution::new(&km, 0.4).unwrap();
        let seg = &fs.segments()[0];
        assert_eq!(seg.xi, CMatrix::identity(2));
        let x = 0.3;
        let want = &mat_exp(&fs.a_matrix().scale_real(-x)).unwrap()
            * &mat_exp(&seg.a_cross.scale_real(x)).unwrap();
        assert!(fs.u_at(x).unwrap().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn u_solves_the_differential_equation() {
        let km = model(&cases::two_delay());
        let fs = FundamentalSolution::new(&km, 2.0).unwrap();
        for x in [0.1, 0.5, 1.0, 1.7] {
            let h = 1e-4;
            let fd = (fs.u_at(x + h).unwrap() - fs.u_at(x - h).unwrap()).scale_real(0.5 / h);
            let rhs = &fs.h_at(x).unwrap() * &fs.u_at(x).unwrap();
            assert!(
                fd.max_abs_diff(&rhs) < 1e-6 * (1.0 + rhs.norm_max()),
                "x={x}: {:e}",
                fd.max_abs_diff(&rhs)
            );
        }
    }

    #[test]
    fn b_and_c_scalar_values() {
        let km = model(&cases::scalar(0.0));
        let fs = FundamentalSolution::new(&km, 1.0).unwrap();
        // x = 0 is on segment 0 by the strict rule, where Z₀ = Z̃₀ = 0
        let b0 = fs.b_of(0.0).unwrap();
        assert!(
            (b0[(0, 0)]).norm() < 1e-15
                && (b0[(1, 0)] - C64::new(2.0 * SQRT_2, 0.0)).norm() < 1e-14
        );
        // just inside segment 1: Z̃₁ − Z₁ = 0 at x = 0
        let b = fs.b_of(1e-14).unwrap();
        assert!(
            b[(0, 0)].norm() < 1e-12 && (b[(1, 0)] - C64::new(2.0 * SQRT_2, 0.0)).norm() < 1e-12
        );

        let km = model(&cases::scalar(0.5));
        let fs = FundamentalSolution::new(&km, 1.0).unwrap();
        let x = 0.2;
        let c = fs.c_of(x).unwrap();
        assert_eq!(c[(0, 1)], C64::new(0.0, 0.0));
        let want = C64::new(2.0 * SQRT_2 * (-3.0 * x).exp(), 0.0);
        assert!((c[(0, 0)] - want).norm() < 1e-14);
    }

    #[test]
    fn h_has_j_symmetry() {
        let km = model(&cases::two_delay());
        let fs = FundamentalSolution::new(&km, 2.0).unwrap();
        let j = j_matrix(2);
        for x in [0.1, 0.45, 0.9, 1.8] {
            let h = fs.h_at(x).unwrap();
            let lhs = &j * &h.adjoint() * &j.adjoint();
            assert!((&lhs + &h).norm_max() < 1e-10 * (1.0 + h.norm_max()));
        }
    }

    #[test]
    fn literal_and_local_segment_forms_agree() {
        let km = model(&cases::two_delay());
        let fs = FundamentalSolution::new(&km, 2.0).unwrap();
        for x in [0.2, 0.5, 1.3, 2.0] {
            let a = fs.u_at(x).unwrap();
            let b = fs.u_at_literal(x).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10 * a.norm_max());
            let g = fs.g_tilde(x).unwrap();
            let gs = fs.g_tilde_stable(x).unwrap();
            assert!(g.max_abs_diff(&gs) < 1e-10 * (1.0 + g.norm_max()));
            let f = fs.f_tilde(x).unwrap();
            let fc = &fs.c_of(x).unwrap() * &a;
            assert!(f.max_abs_diff(&fc) < 1e-10 * (1.0 + f.norm_max()));
        }
    }

    #[test]
    fn j_unitarity_and_inverse() {
        let km = model(&cases::two_delay());
        let fs = FundamentalSolution::new(&km, 2.0).unwrap();
        for k in 0..=20 {
            let x = 0.1 * k as f64;
            assert!(fs.j_unitarity_defect(x).unwrap() < 1e-10);
            let prod = &fs.u_inv_at(x).unwrap() * &fs.u_at(x).unwrap();
            assert!(prod.max_abs_diff(&CMatrix::identity(4)) < 1e-10);
        }
        for km in random_models() {
            let fs = FundamentalSolution::new(&km, 2.0).unwrap();
            for k in 0..=20 {
                let d = fs.j_unitarity_defect(0.1 * k as f64).unwrap();
                assert!(d < 1e-9, "n={} defect {d:e}", km.n());
            }
        }
    }

    #[test]
    fn projector_and_endpoint_factor() {
        for km in [model(&cases::two_delay()), model(&cases::scalar(0.0))] {
            let fs = FundamentalSolution::new(&km, 1.2).unwrap();
            let rm = ResolventModel::new(fs).unwrap();
            let p = rm.p_cross();
            assert!((p * p).max_abs_diff(p) < 1e-10);
            let n = km.n();
            let lit = &rm.fundamental().f_tilde(1.2).unwrap() * &(&CMatrix::identity(2 * n) - p);
            assert!(lit.block(0, n, km.p(), n).norm_max() < 1e-10);
            assert!(lit.block(0, 0, km.p(), n).max_abs_diff(rm.endpoint_left()) < 1e-10);
            for t in [0.1, 0.5, 0.9] {
                let a = rm.kernel_t(1.2, t).unwrap();
                let b = rm.endpoint_row(t).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-10, "{:e}", a.max_abs_diff(&b));
            }
        }
    }

    #[test]
    fn resolvent_kernel_is_hermitian() {
        let km = model(&cases::two_delay());
        let rm = ResolventModel::new(FundamentalSolution::new(&km, 1.5).unwrap()).unwrap();
        for &(x, t) in &[(1.2, 0.4), (0.9, 0.2), (1.4, 1.0)] {
            let a = rm.kernel_t(x, t).unwrap();
            let b = rm.kernel_t(t, x).unwrap().adjoint();
            assert!(a.max_abs_diff(&b) < 1e-8, "{:e}", a.max_abs_diff(&b));
        }
    }

    #[test]
    fn resolvent_identity_holds() {
        // K(x,t) + T(x,t) + ∫ T(x,r)K(r,t) dr = 0
        let km = model(&cases::two_delay());
        let l = 1.5;
        let rm = ResolventModel::new(FundamentalSolution::new(&km, l).unwrap()).unwrap();
        let rule = crate::quadrature::GaussLegendre::new(16);
        for &(x, t) in &[(1.1, 0.4), (0.5, 1.2), (1.5, 0.8)] {
            let mut breaks = vec![0.0, 0.3, 0.7, l, x, t];
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let integral = rule
                .integrate_panels(&breaks, 0.1, |r| {
                    &rm.kernel_t(x, r).unwrap() * &km.kernel_k(r, t).unwrap()
                })
                .unwrap();
            let total = km.kernel_k(x, t).unwrap() + rm.kernel_t(x, t).unwrap() + integral;
            assert!(total.norm_max() < 1e-7, "({x},{t}): {:e}", total.norm_max());
        }
    }
}
