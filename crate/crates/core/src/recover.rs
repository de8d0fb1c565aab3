//! Recovery of the potential `v(l) = (S_l⁻¹k)(l)` from the Weyl data, in
//! closed form and by quadrature of the resolvent kernel.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;

use crate::matrix::{mat_exp, CMatrix};
use crate::quadrature::GaussLegendre;
use crate::semisep::{j_inverse, FundamentalSolution, ResolventModel};
use crate::transform::{KernelModel, Side};
use crate::weyl::WeylData;
use crate::{Error, NumericalPolicy, Result};

fn reject_breakpoint(km: &KernelModel, l: f64) -> Result<()> {
    if km.delays.is_breakpoint(l) {
        return Err(Error::BreakpointL { l });
    }
    Ok(())
}

/// The point where `v` is actually evaluated for a requested `l`: delays are
/// replaced by the right limit `l + ε`, `ε = shift·(1 + l)`.
pub fn evaluation_point(km: &KernelModel, l: f64) -> f64 {
    if km.delays.is_breakpoint(l) {
        l + km.policy.breakpoint_shift * (1.0 + l)
    } else {
        l
    }
}

/// Endpoints `d̂_1 < … < d̂_{N+1} = l` of the recovery sum, `N = #{d̃_j < l}`.
fn sum_nodes(km: &KernelModel, l: f64) -> Vec<f64> {
    let big_n = km.delays.segment_index(l);
    let mut nodes: Vec<f64> = (1..=big_n).map(|m| km.delays.distinct(m)).collect();
    nodes.push(l);
    nodes
}

/// `v(l)` in closed form.
///
/// Uses `U(d)⁻¹[I; 0] = [U₂₂(d)*; −U₂₁(d)*]` on each segment and the reduced
/// endpoint factor `F̃(l)(I − P^×) = [√2θ₁*e^{2ilβ}U₂₂(l)^{-*}, 0]`, so the
/// sum becomes
/// `v(l) = k(l) + 2θ₁*e^{2ilβ}U₂₂(l)^{-*} Σ_m (U₂₂(d̂_m) − U₂₂(d̂_{m+1}))* ν Σ_{j≤m}P_j R`.
/// This avoids the large factors `e^{±d𝒜_m^×}` of the term-by-term form.
pub fn recover_v_closed(rm: &ResolventModel) -> Result<CMatrix> {
    let fs = rm.fundamental();
    let km = fs.kernel_model();
    let l = rm.l();
    reject_breakpoint(km, l)?;
    let (n, p) = (km.n(), km.p());
    let k_l = km.k_one_sided(l, Side::Right)?;
    let nodes = sum_nodes(km, l);
    if nodes.len() == 1 {
        return Ok(k_l);
    }
    let u22: Vec<CMatrix> = nodes
        .iter()
        .map(|&d| Ok(fs.u_at(d)?.block(n, n, n, n)))
        .collect::<Result<_>>()?;
    let mut sum = CMatrix::zeros(n, p);
    for m in 1..nodes.len() {
        let jump = (&u22[m - 1] - &u22[m]).adjoint();
        sum += &(&jump * &km.nu * &km.delays.cumulative_mask(m, p));
    }
    Ok(k_l + (rm.endpoint_left() * &sum * &km.weyl.r).scale_real(SQRT_2))
}

/// `v(l)` by the closed-form sum evaluated term by term:
/// `k(l) + F̃(l)(I−P^×) Σ_m √2 U(d̂_m)⁻¹Ξ_m(e^{−d̂_m𝒜_m^×}e^{d̂_m𝒜} − e^{−d̂_{m+1}𝒜_m^×}e^{d̂_{m+1}𝒜})[I;0] ν Σ_{j≤m}P_j R`.
/// Accurate only while `U` stays moderately conditioned; kept as a cross-check.
pub fn recover_v_closed_literal(rm: &ResolventModel) -> Result<CMatrix> {
    let fs = rm.fundamental();
    let km = fs.kernel_model();
    let l = rm.l();
    reject_breakpoint(km, l)?;
    let (n, p) = (km.n(), km.p());
    let k_l = km.k_one_sided(l, Side::Right)?;
    let nodes = sum_nodes(km, l);
    if nodes.len() == 1 {
        return Ok(k_l);
    }
    let a = fs.a_matrix();
    let top = CMatrix::identity(n).vstack(&CMatrix::zeros(n, n));
    let mut sum = CMatrix::zeros(2 * n, p);
    for m in 1..nodes.len() {
        let seg = &fs.segments()[m];
        let pair = |d: f64| -> Result<CMatrix> {
            Ok(&mat_exp(&seg.a_cross.scale_real(-d))? * &mat_exp(&a.scale_real(d))?)
        };
        let diff = &pair(nodes[m - 1])? - &pair(nodes[m])?;
        let term = &j_inverse(&seg.u_start)
            * &seg.xi
            * &diff
            * &top
            * &km.nu
            * &km.delays.cumulative_mask(m, p);
        sum += &term.scale_real(SQRT_2);
    }
    let proj = &CMatrix::identity(2 * n) - rm.p_cross();
    Ok(k_l + &fs.f_tilde(l)? * &proj * &sum * &km.weyl.r)
}

/// `v(l) = k(l) + ∫₀ˡ T(l, t)k(t) dt`, integrated piecewise between delays.
pub fn recover_v_quadrature(rm: &ResolventModel) -> Result<CMatrix> {
    let fs = rm.fundamental();
    let km = fs.kernel_model();
    let l = rm.l();
    reject_breakpoint(km, l)?;
    let p = km.p();
    let k_l = km.k_one_sided(l, Side::Right)?;
    let mut breaks = vec![0.0];
    breaks.extend(km.delays.breakpoints().filter(|&d| d < l));
    breaks.push(l);

    let rule = GaussLegendre::new(12);
    let mut failure = None;
    let mut integrand = |t: f64| match (rm.endpoint_row(t), km.k_one_sided(t, Side::Right)) {
        (Ok(row), Ok(k)) => &row * &k,
        (Err(e), _) | (_, Err(e)) => {
            failure.get_or_insert(e);
            CMatrix::zeros(p, p)
        }
    };
    let mut total = CMatrix::zeros(p, p);
    for pair in breaks.windows(2) {
        if pair[1] <= pair[0] {
            continue;
        }
        let coarse = rule.integrate(pair[0], pair[1], &mut integrand);
        let tol = km.policy.quadrature_tol * (1.0 + coarse.norm_max());
        total += &rule.integrate_adaptive(pair[0], pair[1], tol, &mut integrand);
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(k_l + total),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileOptions {
    /// Also run the quadrature path and record the two-path residual.
    pub quadrature: bool,
    /// Build the fundamental solution once up to the last grid point and
    /// restrict it per point; otherwise every point starts from scratch.
    pub reuse_segments: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            quadrature: true,
            reuse_segments: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSample {
    pub l: f64,
    /// Differs from `l` only when `l` is a delay.
    pub evaluated_at: f64,
    pub v_closed: Option<CMatrix>,
    pub v_quad: Option<CMatrix>,
    /// `‖v_closed − v_quad‖_F`.
    pub residual: Option<f64>,
    pub error: Option<Error>,
}

#[derive(Debug, Clone)]
pub struct PotentialGrid {
    pub samples: Vec<PotentialSample>,
}

impl PotentialGrid {
    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.l).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = (f64, &Error)> {
        self.samples
            .iter()
            .filter_map(|s| s.error.as_ref().map(|e| (s.l, e)))
    }

    /// Largest `‖v_closed − v_quad‖ / (1 + ‖v_closed‖)` over the grid.
    pub fn max_relative_residual(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| Some(s.residual? / (1.0 + s.v_closed.as_ref()?.norm_fro())))
            .reduce(f64::max)
    }

    /// Closed-form values; failed points are `None`.
    pub fn closed_values(&self) -> Vec<Option<&CMatrix>> {
        self.samples.iter().map(|s| s.v_closed.as_ref()).collect()
    }
}

fn sample_at(fs: &FundamentalSolution, l: f64, at: f64, quadrature: bool) -> PotentialSample {
    let mut sample = PotentialSample {
        l,
        evaluated_at: at,
        v_closed: None,
        v_quad: None,
        residual: None,
        error: None,
    };
    let rm = match fs.restricted(at).and_then(ResolventModel::new) {
        Ok(rm) => rm,
        Err(e) => {
            sample.error = Some(e);
            return sample;
        }
    };
    match recover_v_closed(&rm) {
        Ok(v) => sample.v_closed = Some(v),
        Err(e) => sample.error = Some(e),
    }
    if quadrature {
        match recover_v_quadrature(&rm) {
            Ok(v) => sample.v_quad = Some(v),
            Err(e) => {
                sample.error.get_or_insert(e);
            }
        }
    }
    if let (Some(a), Some(b)) = (&sample.v_closed, &sample.v_quad) {
        sample.residual = Some((a - b).norm_fro());
    }
    sample
}

/// Recovers `v` on an increasing grid, in parallel over grid points. A failure
/// at one point is recorded on that sample and the rest of the grid proceeds.
pub fn recover_profile(
    km: &KernelModel,
    grid: &[f64],
    options: ProfileOptions,
) -> Result<PotentialGrid> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.first().is_some_and(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument(
            "grid must be nonnegative and strictly increasing".into(),
        ));
    }
    let points: Vec<(f64, f64)> = grid.iter().map(|&l| (l, evaluation_point(km, l))).collect();
    let samples = if options.reuse_segments {
        let l_max = points.last().map_or(0.0, |p| p.1);
        let fs = FundamentalSolution::new(km, l_max)?;
        points
            .par_iter()
            .map(|&(l, at)| sample_at(&fs, l, at, options.quadrature))
            .collect()
    } else {
        points
            .par_iter()
            .map(|&(l, at)| match FundamentalSolution::new(km, at) {
                Ok(fs) => sample_at(&fs, l, at, options.quadrature),
                Err(e) => PotentialSample {
                    l,
                    evaluated_at: at,
                    v_closed: None,
                    v_quad: None,
                    residual: None,
                    error: Some(e),
                },
            })
            .collect()
    };
    Ok(PotentialGrid { samples })
}

/// Convenience wrapper: builds the kernel model and recovers on `grid`.
pub fn recover_from_weyl(
    w: &WeylData,
    policy: &NumericalPolicy,
    grid: &[f64],
    options: ProfileOptions,
) -> Result<PotentialGrid> {
    let km = KernelModel::build(w, policy)?;
    recover_profile(&km, grid, options)
}

/// `v(l)` for a single `l` (with the breakpoint rule applied).
pub fn recover_at(km: &KernelModel, l: f64) -> Result<CMatrix> {
    let at = evaluation_point(km, l);
    let rm = ResolventModel::new(FundamentalSolution::new(km, at)?)?;
    recover_v_closed(&rm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    fn model(w: &WeylData) -> KernelModel {
        KernelModel::build(w, &NumericalPolicy::default()).unwrap()
    }

    fn scalar_v(l: f64) -> f64 {
        20.0 / (4.0 * (5.0 * l).exp() + (-5.0 * l).exp())
    }

    fn rm_at(km: &KernelModel, l: f64) -> ResolventModel<'_> {
        ResolventModel::new(FundamentalSolution::new(km, l).unwrap()).unwrap()
    }

    #[test]
    fn scalar_round_trip_closed_form() {
        let km = model(&cases::scalar(0.0));
        for l in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let v = recover_v_closed(&rm_at(&km, l)).unwrap()[(0, 0)];
            assert!(
                (v - scalar_v(l)).norm() < 1e-10,
                "l={l}: {v} vs {}",
                scalar_v(l)
            );
        }
    }

    #[test]
    fn delayed_scalar_vanishes_then_shifts() {
        let km = model(&cases::scalar(0.5));
        for l in [0.1, 0.3, 0.49] {
            assert!(recover_v_closed(&rm_at(&km, l)).unwrap().norm_max() < 1e-12);
        }
        for l in [0.6, 1.0, 1.7] {
            let v = recover_v_closed(&rm_at(&km, l)).unwrap()[(0, 0)];
            assert!((v - scalar_v(l - 0.5)).norm() < 1e-9, "l={l}");
        }
        assert_eq!(
            recover_v_closed(&rm_at(&km, 0.5)).unwrap_err().name(),
            "BreakpointL"
        );
        let v = recover_at(&km, 0.5).unwrap()[(0, 0)];
        assert!((v - scalar_v(0.0)).norm() < 1e-6);
    }

    #[test]
    fn zero_data_recovers_zero() {
        let mut w = cases::two_delay();
        w.theta2 = CMatrix::zeros(2, 2);
        let km = model(&w);
        assert_eq!(recover_v_closed(&rm_at(&km, 1.1)).unwrap().norm_max(), 0.0);
        let mut w = cases::two_delay();
        w.theta1 = CMatrix::zeros(2, 2);
        let km = model(&w);
        assert_eq!(
            recover_v_quadrature(&rm_at(&km, 1.1)).unwrap().norm_max(),
            0.0
        );
    }

    #[test]
    fn literal_and_reduced_closed_forms_agree() {
        let km = model(&cases::two_delay());
        for l in [0.2, 0.5, 0.9, 1.4] {
            let rm = rm_at(&km, l);
            let a = recover_v_closed(&rm).unwrap();
            let b = recover_v_closed_literal(&rm).unwrap();
            assert!(
                a.max_abs_diff(&b) < 1e-9 * (1.0 + a.norm_max()),
                "l={l}: {:e}",
                a.max_abs_diff(&b)
            );
        }
    }

    #[test]
    fn closed_and_quadrature_agree() {
        for w in [cases::scalar(0.0), cases::scalar(0.5), cases::two_delay()] {
            let km = model(&w);
            for l in [0.25, 0.8, 1.3] {
                let rm = rm_at(&km, l);
                let a = recover_v_closed(&rm).unwrap();
                let b = recover_v_quadrature(&rm).unwrap();
                assert!(
                    (&a - &b).norm_fro() < 1e-9 * (1.0 + a.norm_fro()),
                    "l={l}: {:e}",
                    (&a - &b).norm_fro()
                );
            }
        }
    }

    #[test]
    fn profile_reuse_matches_scratch() {
        let km = model(&cases::two_delay());
        let grid: Vec<f64> = (1..=15).map(|k| 0.1 * k as f64).collect();
        let shared = recover_profile(
            &km,
            &grid,
            ProfileOptions {
                quadrature: true,
                reuse_segments: true,
            },
        )
        .unwrap();
        let scratch = recover_profile(
            &km,
            &grid,
            ProfileOptions {
                quadrature: false,
                reuse_segments: false,
            },
        )
        .unwrap();
        assert_eq!(shared.failures().count(), 0);
        // 0.3 and 0.7 are delays: evaluated just to their right
        assert!(shared.samples[2].evaluated_at > 0.3);
        for (a, b) in shared.samples.iter().zip(&scratch.samples) {
            let (a, b) = (a.v_closed.as_ref().unwrap(), b.v_closed.as_ref().unwrap());
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        assert!(shared.max_relative_residual().unwrap() < 1e-7);
        let single = recover_profile(&km, &[0.9], ProfileOptions::default()).unwrap();
        let direct = recover_v_closed(&rm_at(&km, 0.9)).unwrap();
        assert!(
            single.samples[0]
                .v_closed
                .as_ref()
                .unwrap()
                .max_abs_diff(&direct)
                < 1e-14
        );
        assert!(recover_profile(&km, &[0.5, 0.4], ProfileOptions::default()).is_err());
    }
}
