//! Generalized Weyl data `φ(λ) = iθ₁*(λI − β)⁻¹θ₂ e^{−2iλD} R` and the
//! pseudo-exponential forward map used as a round-trip reference.

use rand::Rng;

use crate::matrix::{
    conjugate_spectral_gap, diag_exp, mat_exp, spectrum, CMatrix, LinalgError, Lu, C64, I, ONE,
};
use crate::quadrature::GaussLegendre;
use crate::{Error, NumericalPolicy, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeylData {
    pub beta: CMatrix,
    pub theta1: CMatrix,
    pub theta2: CMatrix,
    pub delays: Vec<f64>,
    pub r: CMatrix,
}

/// Delays grouped by exact equality.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayGroup {
    pub delay: f64,
    /// First column of the group in `θ₂` and `R`.
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayStructure {
    pub groups: Vec<DelayGroup>,
}

impl DelayStructure {
    fn from_sorted(delays: &[f64]) -> Self {
        let mut groups: Vec<DelayGroup> = Vec::new();
        for (m, &d) in delays.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if g.delay == d => g.len += 1,
                _ => groups.push(DelayGroup {
                    delay: d,
                    start: m,
                    len: 1,
                }),
            }
        }
        Self { groups }
    }

    /// Number of distinct delays.
    pub fn count(&self) -> usize {
        self.groups.len()
    }

    /// Distinct delay `d̃_j` for `j = 1..=count`; `d̃_0 = 0`.
    pub fn distinct(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.groups[j - 1].delay
        }
    }

    pub fn first_delay(&self) -> f64 {
        self.groups.first().map_or(0.0, |g| g.delay)
    }

    /// `m(x) = #{j : d̃_j < x}`, so a point on a delay belongs to the lower segment.
    pub fn segment_index(&self, x: f64) -> usize {
        self.groups.iter().take_while(|g| g.delay < x).count()
    }

    /// Positive delays, i.e. the points where `k` may jump.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().map(|g| g.delay).filter(|&d| d > 0.0)
    }

    pub fn is_breakpoint(&self, x: f64) -> bool {
        self.breakpoints().any(|d| d == x)
    }

    /// `Σ_{j≤m} P_j` as a diagonal mask over the `p` columns.
    pub fn cumulative_mask(&self, m: usize, p: usize) -> CMatrix {
        let end = if m == 0 {
            0
        } else {
            let g = &self.groups[m - 1];
            g.start + g.len
        };
        CMatrix::diag(
            &(0..p)
                .map(|c| if c < end { ONE } else { C64::default() })
                .collect::<Vec<_>>(),
        )
    }

    /// `P_j` as a diagonal mask (`j ≥ 1`).
    pub fn projector(&self, j: usize, p: usize) -> CMatrix {
        let g = &self.groups[j - 1];
        CMatrix::diag(
            &(0..p)
                .map(|c| {
                    if (g.start..g.start + g.len).contains(&c) {
                        ONE
                    } else {
                        C64::default()
                    }
                })
                .collect::<Vec<_>>(),
        )
    }
}

fn check_shape(what: &'static str, m: &CMatrix, expected: (usize, usize)) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::Shape {
            what,
            expected,
            got: m.shape(),
        });
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{what} has non-finite entries"
        )));
    }
    Ok(())
}

impl WeylData {
    /// Checks shapes only; call [`WeylData::validate`] for the admissibility conditions.
    pub fn new(
        beta: CMatrix,
        theta1: CMatrix,
        theta2: CMatrix,
        delays: Vec<f64>,
        r: CMatrix,
    ) -> Result<Self> {
        let n = beta.rows();
        let p = theta1.cols();
        check_shape("beta", &beta, (n, n))?;
        check_shape("theta1", &theta1, (n, p))?;
        check_shape("theta2", &theta2, (n, p))?;
        check_shape("R", &r, (p, p))?;
        if delays.len() != p {
            return Err(Error::Shape {
                what: "D",
                expected: (p, 1),
                got: (delays.len(), 1),
            });
        }
        Ok(Self {
            beta,
            theta1,
            theta2,
            delays,
            r,
        })
    }

    pub fn n(&self) -> usize {
        self.beta.rows()
    }

    pub fn p(&self) -> usize {
        self.theta1.cols()
    }

    pub fn validate(&self, policy: &NumericalPolicy) -> Result<DelayStructure> {
        let p = self.p();
        let defect = (&(&self.r.adjoint() * &self.r) - &CMatrix::identity(p)).norm_fro();
        if defect > policy.unitary_tol {
            return Err(Error::NonUnitaryR { defect });
        }
        let mut prev = 0.0;
        for (index, &value) in self.delays.iter().enumerate() {
            if !value.is_finite() || value < prev {
                return Err(Error::UnsortedDelays { index, value });
            }
            prev = value;
        }
        let (gap, mu, nu) = conjugate_spectral_gap(&self.beta)?;
        if gap < policy.spectral_gap_tol {
            return Err(Error::SpectraOverlap { mu, nu, gap });
        }
        Ok(DelayStructure::from_sorted(&self.delays))
    }

    /// `exp(−2iλD)` as a diagonal matrix.
    pub fn delay_factor(&self, lambda: C64) -> CMatrix {
        diag_exp(
            &self
                .delays
                .iter()
                .map(|&d| -2.0 * I * lambda * d)
                .collect::<Vec<_>>(),
        )
    }

    pub fn eval_phi(&self, lambda: C64) -> Result<CMatrix> {
        let n = self.n();
        let shifted = &CMatrix::identity(n).scale(lambda) - &self.beta;
        let lu = Lu::new(&shifted).map_err(|e| match e {
            LinalgError::Singular { .. } => Error::ResolventSingular { lambda },
            other => other.into(),
        })?;
        let resolvent_theta2 = lu.solve(&self.theta2)?;
        Ok((&self.theta1.adjoint() * &resolvent_theta2).scale(I)
            * self.delay_factor(lambda)
            * &self.r)
    }

    fn min_imag_eigenvalue(&self) -> Result<f64> {
        Ok(spectrum(&self.beta)?
            .iter()
            .map(|z| z.im)
            .fold(f64::INFINITY, f64::min))
    }

    /// `M = max(0, −min Im σ(β)) + 1`, so `σ(β + iMI)` lies in the upper halfplane with margin 1.
    pub fn halfplane_bound(&self) -> Result<f64> {
        Ok((-self.min_imag_eigenvalue()?).max(0.0) + 1.0)
    }

    /// A constant `c` with `∫ e^{−cx}‖k(x)‖ dx < ∞`: `k` grows at most like
    /// `‖e^{2ixβ}‖`, whose exponential rate is `2·max(0, −min Im σ(β))`.
    pub fn growth_witness(&self) -> Result<f64> {
        Ok(2.0 * (-self.min_imag_eigenvalue()?).max(0.0) + 1.0)
    }
}

/// Parameters `(α, θ₁, θ₂)` of a pseudo-exponential potential, tied by
/// `α − α* = i(θ₁θ₁* + θ₂θ₂*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoExpParams {
    pub alpha: CMatrix,
    pub theta1: CMatrix,
    pub theta2: CMatrix,
}

impl PseudoExpParams {
    pub fn new(alpha: CMatrix, theta1: CMatrix, theta2: CMatrix) -> Result<Self> {
        let n = alpha.rows();
        let p = theta1.cols();
        check_shape("alpha", &alpha, (n, n))?;
        check_shape("theta1", &theta1, (n, p))?;
        check_shape("theta2", &theta2, (n, p))?;
        let out = Self {
            alpha,
            theta1,
            theta2,
        };
        let defect = out.identity_defect();
        if defect > 1e-12 * (1.0 + out.alpha.norm_fro()) {
            return Err(Error::IdentityViolated { defect });
        }
        Ok(out)
    }

    pub fn identity_defect(&self) -> f64 {
        let lhs = &self.alpha - &self.alpha.adjoint();
        let rhs = (&(&self.theta1 * &self.theta1.adjoint())
            + &(&self.theta2 * &self.theta2.adjoint()))
            .scale(I);
        (lhs - rhs).norm_fro()
    }

    /// Random admissible parameters: entries of `θ₁`, `θ₂` and of a Hermitian `H`
    /// have modulus at most 1, and `α = H + (i/2)(θ₁θ₁* + θ₂θ₂*)`. Draws whose
    /// `β = α − iθ₂θ₂*` has conjugate spectral gap below `min_gap` are rejected.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize, min_gap: f64) -> Self {
        let unit_disc = |rng: &mut R| {
            C64::from_polar(rng.gen::<f64>(), rng.gen_range(0.0..std::f64::consts::TAU))
        };
        loop {
            let theta1 = CMatrix::from_fn(n, p, |_, _| unit_disc(rng));
            let theta2 = CMatrix::from_fn(n, p, |_, _| unit_disc(rng));
            let mut h = CMatrix::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
                for j in i + 1..n {
                    let z = unit_disc(rng);
                    h[(i, j)] = z;
                    h[(j, i)] = z.conj();
                }
            }
            let gram = &(&theta1 * &theta1.adjoint()) + &(&theta2 * &theta2.adjoint());
            let alpha = h + gram.scale(C64::new(0.0, 0.5));
            let params = Self {
                alpha,
                theta1,
                theta2,
            };
            if let Ok((gap, _, _)) = conjugate_spectral_gap(&params.beta()) {
                if gap >= min_gap {
                    return params;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.alpha.rows()
    }

    pub fn p(&self) -> usize {
        self.theta1.cols()
    }

    /// `β = α − iθ₂θ₂*`.
    pub fn beta(&self) -> CMatrix {
        &self.alpha - &(&self.theta2 * &self.theta2.adjoint()).scale(I)
    }

    /// Weyl data of the pseudo-exponential potential: `D = 0`, `R = I`.
    pub fn to_weyl(&self, policy: &NumericalPolicy) -> Result<WeylData> {
        let beta = self.beta();
        let lhs = &beta - &beta.adjoint();
        let rhs = (&(&self.theta1 * &self.theta1.adjoint())
            - &(&self.theta2 * &self.theta2.adjoint()))
            .scale(I);
        let defect = (lhs - rhs).norm_fro();
        if defect > 1e-10 * (1.0 + beta.norm_fro()) {
            return Err(Error::IdentityViolated { defect });
        }
        let p = self.p();
        let w = WeylData::new(
            beta,
            self.theta1.clone(),
            self.theta2.clone(),
            vec![0.0; p],
            CMatrix::identity(p),
        )?;
        w.validate(policy)?;
        Ok(w)
    }

    /// `Λ(t) j Λ(t)* = e^{−itα}θ₁θ₁*e^{itα*} − e^{itα}θ₂θ₂*e^{−itα*}`.
    fn sigma_integrand(&self, t: f64) -> Result<CMatrix> {
        let e_minus = mat_exp(&self.alpha.scale(-I * t))?;
        let e_plus = mat_exp(&self.alpha.scale(I * t))?;
        let a = &e_minus * &self.theta1;
        let b = &e_plus * &self.theta2;
        Ok(&(&a * &a.adjoint()) - &(&b * &b.adjoint()))
    }

    fn sigma_increment(&self, rule: &GaussLegendre, a: f64, b: f64) -> Result<CMatrix> {
        // coarse pass to fix the scale of the absolute tolerance
        let mut failure = None;
        let mut eval = |t: f64| match self.sigma_integrand(t) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                CMatrix::zeros(self.n(), self.n())
            }
        };
        let coarse = rule.integrate(a, b, &mut eval);
        let tol = 1e-13 * (1.0 + coarse.norm_max());
        let fine = rule.integrate_adaptive(a, b, tol, &mut eval);
        match failure {
            Some(e) => Err(e),
            None => Ok(fine),
        }
    }

    fn potential_from_sigma(&self, x: f64, sigma: &CMatrix) -> Result<CMatrix> {
        let lu = Lu::new(sigma).map_err(|e| match e {
            LinalgError::Singular { rcond } => Error::SigmaSingular { x, rcond },
            other => other.into(),
        })?;
        let left = &self.theta1.adjoint() * &mat_exp(&self.alpha.adjoint().scale(I * x))?;
        let right = &mat_exp(&self.alpha.scale(I * x))? * &self.theta2;
        Ok((left * lu.solve(&right)?).scale_real(2.0))
    }

    /// `v(x) = 2θ₁*e^{ixα*}Σ(x)⁻¹e^{ixα}θ₂` with `Σ(x) = I + ∫₀ˣ ΛjΛ*`.
    pub fn potential(&self, x: f64) -> Result<CMatrix> {
        Ok(self.potential_profile(&[x])?.remove(0))
    }

    /// Potential on a nondecreasing list of points; `Σ` is accumulated
    /// interval by interval.
    pub fn potential_profile(&self, xs: &[f64]) -> Result<Vec<CMatrix>> {
        let rule = GaussLegendre::new(12);
        let mut sigma = CMatrix::identity(self.n());
        let mut at = 0.0;
        let mut out = Vec::with_capacity(xs.len());
        for &x in xs {
            if !(x >= at) {
                return Err(Error::InvalidArgument(format!(
                    "potential points must be nonnegative and nondecreasing (got {x} after {at})"
                )));
            }
            // panels of unit width keep the exponential growth per panel moderate
            while at < x {
                let next = (at + 0.5).min(x);
                sigma += &self.sigma_increment(&rule, at, next)?;
                at = next;
            }
            out.push(self.potential_from_sigma(x, &sigma)?);
        }
        Ok(out)
    }
}
