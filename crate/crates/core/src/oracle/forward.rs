//! Forward integration of `u′ = (iλj + jV)u`, `u(0) = I`, with a sampled
//! potential, and the boundedness test that defines a Weyl function.

use crate::matrix::{CMatrix, C64, I};
use crate::weyl::WeylData;
use crate::{Error, Result};

/// A potential sampled on a nondecreasing grid and linearly interpolated
/// between samples. A repeated point carries a jump: its first sample is the
/// left limit and its second the right limit.
#[derive(Debug, Clone)]
pub struct SampledPotential {
    pub xs: Vec<f64>,
    pub values: Vec<CMatrix>,
}

impl SampledPotential {
    pub fn new(xs: Vec<f64>, values: Vec<CMatrix>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(Error::InvalidArgument(
                "potential needs at least two samples, one per point".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] >= w[0])) || xs.windows(3).any(|w| w[0] == w[2]) {
            return Err(Error::InvalidArgument(
                "sample points must be nondecreasing with at most two samples per point".into(),
            ));
        }
        if xs[0] == xs[1] || xs[xs.len() - 2] == xs[xs.len() - 1] {
            return Err(Error::InvalidArgument(
                "jumps are allowed at interior points only".into(),
            ));
        }
        Ok(Self { xs, values })
    }

    /// Samples `count` equispaced points of `[0, l]`. At grid points within
    /// `1e-12` of an entry of `jumps` both one-sided values `f(x ∓ δ)`,
    /// `δ = shift·(1 + x)`, are stored.
    pub fn from_fn(
        l: f64,
        count: usize,
        jumps: &[f64],
        shift: f64,
        mut f: impl FnMut(f64) -> Result<CMatrix>,
    ) -> Result<Self> {
        let mut xs = Vec::with_capacity(count + jumps.len());
        let mut values = Vec::with_capacity(count + jumps.len());
        for i in 0..count {
            let x = l * i as f64 / (count - 1) as f64;
            if i > 0 && i + 1 < count && jumps.iter().any(|&d| (d - x).abs() < 1e-12) {
                let delta = shift * (1.0 + x);
                xs.extend([x, x]);
                values.push(f(x - delta)?);
                values.push(f(x + delta)?);
            } else {
                xs.push(x);
                values.push(f(x)?);
            }
        }
        Self::new(xs, values)
    }

    pub fn p(&self) -> usize {
        self.values[0].rows()
    }

    pub fn negated(&self) -> Self {
        Self {
            xs: self.xs.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    fn interpolate(&self, k: usize, x: f64) -> CMatrix {
        let k = k.clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        if x1 == x0 {
            return self.values[k].clone();
        }
        let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        &self.values[k - 1].scale_real(1.0 - s) + &self.values[k].scale_real(s)
    }

    /// Value at `x`, taking the right limit at a jump.
    pub fn at(&self, x: f64) -> CMatrix {
        self.interpolate(self.xs.partition_point(|&y| y <= x), x)
    }

    /// Value at `x`, taking the left limit at a jump.
    pub fn at_left(&self, x: f64) -> CMatrix {
        self.interpolate(self.xs.partition_point(|&y| y < x), x)
    }
}

/// `iλj + jV` with `j = diag(I_p, −I_p)` and `V = [[0, v], [v*, 0]]`.
fn generator(lambda: C64, v: &CMatrix) -> CMatrix {
    let p = v.rows();
    let mut g = CMatrix::zeros(2 * p, 2 * p);
    for a in 0..p {
        g[(a, a)] = I * lambda;
        g[(p + a, p + a)] = -I * lambda;
    }
    g.set_block(0, p, v);
    g.set_block(p, 0, &(-&v.adjoint()));
    g
}

/// Classical fourth-order Runge–Kutta with `steps` equal steps on `[0, l]`.
/// Returns `u` at the `steps + 1` grid points. Each step sees one-sided
/// values of `v` at its ends, so jumps on the grid do not spoil the order.
pub fn forward_solve(
    v: &SampledPotential,
    lambda: C64,
    l: f64,
    steps: usize,
) -> Result<Vec<CMatrix>> {
    if steps == 0 || !(l > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need l > 0 and at least one step (l = {l}, steps = {steps})"
        )));
    }
    let h = l / steps as f64;
    if h < 1e-12 * l {
        return Err(Error::InvalidArgument("step size underflow".into()));
    }
    let p = v.p();
    let mut u = CMatrix::identity(2 * p);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u.clone());
    for k in 0..steps {
        let x = k as f64 * h;
        let g0 = generator(lambda, &v.at(x));
        let gm = generator(lambda, &v.at(x + 0.5 * h));
        let g1 = generator(lambda, &v.at_left(x + h));
        let k1 = &g0 * &u;
        let k2 = &gm * &(&u + &k1.scale_real(0.5 * h));
        let k3 = &gm * &(&u + &k2.scale_real(0.5 * h));
        let k4 = &g1 * &(&u + &k3.scale_real(h));
        let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
        u += &incr.scale_real(h / 6.0);
        out.push(u.clone());
    }
    Ok(out)
}

/// Allowed deviation from the free solution below the first delay.
const FREE_SOLUTION_TOL: f64 = 1e-6;

/// Boundedness test at one spectral point.
#[derive(Debug, Clone)]
pub struct WeylCheck {
    pub lambda: C64,
    /// `Im λ < −M − 1`.
    pub admissible: bool,
    /// `max_x g(x) / g(0)` with `g(x) = ‖e^{ixλ}u(x,λ)[φ(λ); I]‖`.
    pub growth_ratio: f64,
    /// Same ratio for the free solution on `[0, d₁]`.
    pub delay_ratio: f64,
    /// `max_{x ≤ d₁} ‖u(x,λ) − e^{ixλj}‖`, zero when `d₁ = 0`.
    pub delay_deviation: f64,
    pub passed: bool,
}

/// Integrates with the sampled potential and checks `max g ≤ bound·g(0)`,
/// plus the same bound for the free solution below the first delay, where the
/// integrated solution must also coincide with the free one.
pub fn weyl_check(
    w: &WeylData,
    v: &SampledPotential,
    lambda: C64,
    l: f64,
    steps: usize,
    bound: f64,
    halfplane: f64,
) -> Result<WeylCheck> {
    let p = w.p();
    let phi = w.eval_phi(lambda)?;
    let column = phi.vstack(&CMatrix::identity(p));
    let u = forward_solve(v, lambda, l, steps)?;
    let h = l / steps as f64;
    let g: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, uk)| (&uk.scale((I * lambda * (k as f64 * h)).exp()) * &column).norm_fro())
        .collect();
    let growth_ratio = g.iter().cloned().fold(0.0, f64::max) / g[0];

    let d1 = w.delays.first().copied().unwrap_or(0.0).min(l);
    let mut delay_ratio: f64 = 1.0;
    let mut delay_deviation: f64 = 0.0;
    for (k, uk) in u.iter().enumerate() {
        let x = k as f64 * h;
        if x > d1 {
            break;
        }
        let mut free = CMatrix::zeros(2 * p, 2 * p);
        for a in 0..p {
            free[(a, a)] = (I * lambda * x).exp();
            free[(p + a, p + a)] = (-I * lambda * x).exp();
        }
        let gf = (&free.scale((I * lambda * x).exp()) * &column).norm_fro();
        delay_ratio = delay_ratio.max(gf / g[0]);
        delay_deviation = delay_deviation.max((uk - &free).norm_fro());
    }
    Ok(WeylCheck {
        lambda,
        admissible: lambda.im < -halfplane - 1.0,
        growth_ratio,
        delay_ratio,
        delay_deviation,
        passed: growth_ratio <= bound
            && delay_ratio <= bound
            && delay_deviation <= FREE_SOLUTION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::recover::recover_at;
    use crate::transform::KernelModel;
    use crate::NumericalPolicy;

    #[test]
    fn zero_potential_gives_free_solution() {
        let v = SampledPotential::new(vec![0.0, 2.0], vec![CMatrix::zeros(2, 2); 2]).unwrap();
        let lambda = C64::new(1.0, -4.0);
        let u = forward_solve(&v, lambda, 2.0, 400).unwrap();
        let x = 2.0;
        for a in 0..2 {
            assert!((u[400][(a, a)] - (I * lambda * x).exp()).norm() < 1e-7 * (4.0 * x).exp());
            assert!((u[400][(a + 2, a + 2)] - (-I * lambda * x).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn real_spectral_parameter_keeps_u_unitary() {
        let v = SampledPotential::from_fn(1.0, 201, &[0.5], 0.0, |x| {
            Ok(CMatrix::from_rows(&[[C64::new(
                x.cos() + if x > 0.5 { 1.0 } else { 0.0 },
                x,
            )]]))
        })
        .unwrap();
        assert_eq!(v.xs.len(), 202);
        let u = forward_solve(&v, C64::new(0.7, 0.0), 1.0, 100).unwrap();
        let last = &u[100];
        let d = (&last.adjoint() * last).max_abs_diff(&CMatrix::identity(2));
        // linear interpolation kinks at the step midpoints limit the order
        assert!(d < 1e-5, "{d:e}");
    }

    #[test]
    fn one_sided_values_at_jumps() {
        let one = CMatrix::identity(1);
        let v = SampledPotential::new(
            vec![0.0, 0.5, 0.5, 1.0],
            vec![
                one.scale_real(0.0),
                one.clone(),
                one.scale_real(3.0),
                one.scale_real(3.0),
            ],
        )
        .unwrap();
        assert_eq!(v.at_left(0.5), one);
        assert_eq!(v.at(0.5), one.scale_real(3.0));
        assert_eq!(v.at(0.25), one.scale_real(0.5));
        assert_eq!(v.at_left(0.0), one.scale_real(0.0));
        assert_eq!(v.at(1.0), one.scale_real(3.0));
    }

    #[test]
    fn zero_data_gives_constant_profile() {
        let mut w = cases::scalar(0.0);
        w.theta1 = CMatrix::zeros(1, 1);
        let v = SampledPotential::new(vec![0.0, 1.0], vec![CMatrix::zeros(1, 1); 2]).unwrap();
        let r = weyl_check(&w, &v, C64::new(0.5, -3.0), 1.0, 200, 10.0, 1.0).unwrap();
        assert!((r.growth_ratio - 1.0).abs() < 1e-9 && r.passed, "{r:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampledPotential::new(vec![0.0, 0.0], vec![CMatrix::zeros(1, 1); 2]).is_err());
        assert!(SampledPotential::new(
            vec![0.0, 0.5, 0.5, 0.5, 1.0],
            vec![CMatrix::zeros(1, 1); 5]
        )
        .is_err());
        assert!(SampledPotential::new(vec![1.0, 0.5], vec![CMatrix::zeros(1, 1); 2]).is_err());
        let v = SampledPotential::new(vec![0.0, 1.0], vec![CMatrix::zeros(1, 1); 2]).unwrap();
        assert!(forward_solve(&v, C64::new(0.0, 0.0), 1.0, 0).is_err());
    }

    #[test]
    fn recovered_potential_passes_and_negation_fails() {
        let policy = NumericalPolicy::default();
        let w = cases::scalar(0.5);
        let km = KernelModel::build(&w, &policy).unwrap();
        let (l, steps) = (2.0, 1000);
        let jumps: Vec<f64> = km.delays.breakpoints().collect();
        let v = SampledPotential::from_fn(l, 2 * steps + 1, &jumps, policy.breakpoint_shift, |x| {
            recover_at(&km, x)
        })
        .unwrap();
        let m = w.halfplane_bound().unwrap();
        for lambda in [C64::new(0.0, -3.0), C64::new(1.0, -4.0)] {
            let good = weyl_check(&w, &v, lambda, l, steps, 10.0, m).unwrap();
            assert!(good.admissible && good.passed, "{good:?}");
            assert!(good.delay_deviation < 1e-9);
            let bad = weyl_check(&w, &v.negated(), lambda, l, steps, 10.0, m).unwrap();
            assert!(!bad.passed, "{bad:?}");
        }
    }
}
