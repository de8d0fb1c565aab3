//! Gauss–Legendre rules for matrix-valued integrands.

use crate::matrix::CMatrix;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `order`-point rule on [-1, 1]; nodes by Newton iteration on P_order.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if order == 1 { x } else { p1 };
                let pm1 = if order == 1 { 1.0 } else { p0 };
                dp = n * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if order == 1 {
                dp = 1.0;
                x = 0.0;
            }
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> CMatrix
    where
        F: FnMut(f64) -> CMatrix,
    {
        let mut acc: Option<CMatrix> = None;
        for (x, w) in self.mapped(a, b) {
            let term = f(x).scale_real(w);
            match acc.as_mut() {
                Some(s) => *s += &term,
                None => acc = Some(term),
            }
        }
        acc.expect("rule has at least one node")
    }

    /// Composite rule: each interval between consecutive `breaks` is split into
    /// panels no wider than `max_panel`.
    pub fn integrate_panels<F>(&self, breaks: &[f64], max_panel: f64, mut f: F) -> Option<CMatrix>
    where
        F: FnMut(f64) -> CMatrix,
    {
        let mut acc: Option<CMatrix> = None;
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for k in 0..panels {
                let lo = a + k as f64 * h;
                let hi = if k + 1 == panels { b } else { lo + h };
                let part = self.integrate(lo, hi, &mut f);
                match acc.as_mut() {
                    Some(s) => *s += &part,
                    None => acc = Some(part),
                }
            }
        }
        acc
    }

    /// Adaptive bisection: accept a panel when the one-panel and two-half-panel
    /// estimates agree to `abs_tol` scaled by the panel's share of [a, b].
    pub fn integrate_adaptive<F>(&self, a: f64, b: f64, abs_tol: f64, mut f: F) -> CMatrix
    where
        F: FnMut(f64) -> CMatrix,
    {
        let whole = self.integrate(a, b, &mut f);
        self.refine(a, b, whole, abs_tol, 0, &mut f)
    }

    fn refine<F>(
        &self,
        a: f64,
        b: f64,
        whole: CMatrix,
        tol: f64,
        depth: usize,
        f: &mut F,
    ) -> CMatrix
    where
        F: FnMut(f64) -> CMatrix,
    {
        const MAX_DEPTH: usize = 40;
        let mid = 0.5 * (a + b);
        let left = self.integrate(a, mid, &mut *f);
        let right = self.integrate(mid, b, &mut *f);
        let halves = &left + &right;
        if depth >= MAX_DEPTH || (&halves - &whole).norm_max() <= tol {
            return halves;
        }
        let l = self.refine(a, mid, left, 0.5 * tol, depth + 1, f);
        let r = self.refine(mid, b, right, 0.5 * tol, depth + 1, f);
        l + r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    fn scalar(x: f64) -> CMatrix {
        CMatrix::scalar(C64::new(x, 0.0))
    }

    #[test]
    fn exact_for_polynomials_of_degree_2n_minus_1() {
        for order in 1..=12 {
            let rule = GaussLegendre::new(order);
            let deg = 2 * order - 1;
            let got = rule.integrate(0.0, 2.0, |x| scalar(x.powi(deg as i32)))[(0, 0)].re;
            let want = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!(
                (got - want).abs() < 1e-12 * want,
                "order {order}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for order in [1, 2, 5, 16, 32] {
            let rule = GaussLegendre::new(order);
            let s: f64 = rule.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
            assert!((s - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn adaptive_handles_steep_exponential() {
        let rule = GaussLegendre::new(8);
        let got =
            rule.integrate_adaptive(0.0, 3.0, 1e-12, |x| scalar((-20.0 * x).exp()))[(0, 0)].re;
        let want = (1.0 - (-60f64).exp()) / 20.0;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn panels_respect_breaks() {
        let rule = GaussLegendre::new(4);
        // step function integrates exactly when the jump is a break
        let got = rule
            .integrate_panels(&[0.0, 0.3, 1.0], 0.1, |x| {
                scalar(if x < 0.3 { 1.0 } else { 2.0 })
            })
            .unwrap()[(0, 0)]
            .re;
        assert!((got - 1.7).abs() < 1e-14);
        assert!(rule
            .integrate_panels(&[1.0, 1.0], 0.1, |_| scalar(1.0))
            .is_none());
    }
}
