//! Dense trapezoid discretization of `S_l = I + ∫₀ˡ K(·, t) · dt`.

use crate::matrix::{hermitian_eigenvalues, CMatrix, Lu};
use crate::transform::{kernel_k_direct, KernelModel, Side};
use crate::{Error, Result};

/// Where kernel values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSource {
    /// The semiseparable closed form.
    Explicit,
    /// Quadrature of `½∫ k k* dr`; slow, for deep verification.
    Direct,
}

/// `N` trapezoid intervals on `[0, l]`; the node nearest each delay inside
/// `(0, l)` is moved onto the delay.
pub fn snapped_nodes(km: &KernelModel, l: f64, intervals: usize) -> Vec<f64> {
    let h = l / intervals as f64;
    let mut nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
    nodes[intervals] = l;
    for d in km.delays.breakpoints().filter(|&d| d < l) {
        let i = (d / h).round() as usize;
        if i > 0 && i < intervals {
            nodes[i] = d;
        }
    }
    nodes
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    for (k, pair) in nodes.windows(2).enumerate() {
        let h = pair[1] - pair[0];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w
}

#[derive(Debug, Clone)]
pub struct NystromOperator<'a> {
    km: &'a KernelModel,
    pub l: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Raw kernel blocks, row-major over node pairs.
    kernel: Vec<CMatrix>,
    /// `I + W^{1/2} K W^{1/2}`: similar to `I + KW` and Hermitian by construction.
    pub s_dense: CMatrix,
}

impl<'a> NystromOperator<'a> {
    pub fn build(
        km: &'a KernelModel,
        l: f64,
        intervals: usize,
        source: KernelSource,
    ) -> Result<Self> {
        if intervals < 16 || !(l > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Nyström discretization needs N ≥ 16 and l > 0 (got N = {intervals}, l = {l})"
            )));
        }
        let nodes = snapped_nodes(km, l, intervals);
        let weights = trapezoid_weights(&nodes);
        let count = nodes.len();
        let p = km.p();
        let kernel = match source {
            KernelSource::Explicit => km.kernel_on_nodes(&nodes)?,
            KernelSource::Direct => {
                let tol = km.policy.quadrature_tol;
                let mut out = vec![CMatrix::zeros(p, p); count * count];
                for i in 0..count {
                    for j in 0..=i {
                        let block = kernel_k_direct(&km.weyl, nodes[i], nodes[j], tol)?;
                        if i != j {
                            out[j * count + i] = block.adjoint();
                        }
                        out[i * count + j] = block;
                    }
                }
                out
            }
        };
        let mut s_dense = CMatrix::identity(p * count);
        for i in 0..count {
            for j in 0..count {
                let scale = (weights[i] * weights[j]).sqrt();
                let block = &kernel[i * count + j];
                for a in 0..p {
                    for b in 0..p {
                        s_dense[(i * p + a, j * p + b)] += block[(a, b)] * scale;
                    }
                }
            }
        }
        Ok(Self {
            km,
            l,
            nodes,
            weights,
            kernel,
            s_dense,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn kernel_block(&self, i: usize, j: usize) -> &CMatrix {
        &self.kernel[i * self.nodes.len() + j]
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.s_dense.hermitian_defect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.s_dense)?[0])
    }

    /// Nodal samples of `k` for the trapezoid rule: at an interior delay the
    /// two one-sided limits are averaged with the adjacent interval lengths,
    /// and at `l` the left limit is used.
    fn k_samples(&self) -> Result<Vec<CMatrix>> {
        let count = self.nodes.len();
        (0..count)
            .map(|i| {
                let x = self.nodes[i];
                if i == count - 1 {
                    return self.km.k_one_sided(x, Side::Left);
                }
                if i > 0 && self.km.delays.is_breakpoint(x) {
                    let hl = x - self.nodes[i - 1];
                    let hr = self.nodes[i + 1] - x;
                    let left = self.km.k_one_sided(x, Side::Left)?.scale_real(hl);
                    let right = self.km.k_one_sided(x, Side::Right)?.scale_real(hr);
                    return Ok((left + right).scale_real(1.0 / (hl + hr)));
                }
                self.km.k_one_sided(x, Side::Right)
            })
            .collect()
    }

    /// Discrete `v(l) = (S_l⁻¹k)(l)`: solves `(I + KW)c = k` and evaluates the
    /// Nyström interpolant `k(l) − Σ_j w_j K(l, x_j) c_j` with the right limit
    /// of `k` at `l`.
    pub fn oracle_v(&self) -> Result<CMatrix> {
        let count = self.nodes.len();
        let p = self.km.p();
        let samples = self.k_samples()?;
        // (I + W^{1/2}KW^{1/2}) y = W^{1/2} k,  c = W^{-1/2} y
        let mut rhs = CMatrix::zeros(p * count, p);
        for (i, k) in samples.iter().enumerate() {
            rhs.set_block(i * p, 0, &k.scale_real(self.weights[i].sqrt()));
        }
        let y = Lu::new(&self.s_dense)?.solve(&rhs)?;
        let last = count - 1;
        let mut v = self.km.k_one_sided(self.l, Side::Right)?;
        for j in 0..count {
            let c_j = y
                .block(j * p, 0, p, p)
                .scale_real(1.0 / self.weights[j].sqrt());
            v -= &(self.kernel_block(last, j) * &c_j).scale_real(self.weights[j]);
        }
        Ok(v)
    }

    /// Discrete resolvent kernel: `(S⁻¹ − I)` block `(i, j)` divided by `w_j`,
    /// for each requested node pair.
    pub fn resolvent_kernel(&self, pairs: &[(usize, usize)]) -> Result<Vec<CMatrix>> {
        let p = self.km.p();
        let inv = Lu::new(&self.s_dense)?.inverse();
        Ok(pairs
            .iter()
            .map(|&(i, j)| {
                let mut block = inv.block(i * p, j * p, p, p);
                if i == j {
                    block -= &CMatrix::identity(p);
                }
                // S_full⁻¹ = W^{-1/2} S_sym⁻¹ W^{1/2}
                block.scale_real(1.0 / (self.weights[i] * self.weights[j]).sqrt())
            })
            .collect())
    }

    /// Index of the node at `x`, if there is one within `1e-12`.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        self.nodes.iter().position(|&y| (y - x).abs() < 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::recover::recover_at;
    use crate::semisep::{FundamentalSolution, ResolventModel};
    use crate::NumericalPolicy;

    fn model(w: &crate::weyl::WeylData) -> KernelModel {
        KernelModel::build(w, &NumericalPolicy::default()).unwrap()
    }

    #[test]
    fn zero_kernel_gives_identity() {
        let mut w = cases::two_delay();
        w.theta1 = CMatrix::zeros(2, 2);
        let km = model(&w);
        let op = NystromOperator::build(&km, 1.0, 20, KernelSource::Explicit).unwrap();
        assert_eq!(op.s_dense, CMatrix::identity(2 * 21));
    }

    #[test]
    fn zero_theta2_gives_zero_potential() {
        let mut w = cases::two_delay();
        w.theta2 = CMatrix::zeros(2, 2);
        let km = model(&w);
        let op = NystromOperator::build(&km, 1.0, 32, KernelSource::Explicit).unwrap();
        assert!(op.oracle_v().unwrap().norm_max() < 1e-15);
    }

    #[test]
    fn rejects_coarse_grids() {
        let km = model(&cases::scalar(0.0));
        assert!(NystromOperator::build(&km, 1.0, 8, KernelSource::Explicit).is_err());
    }

    #[test]
    fn nodes_snap_onto_delays() {
        let km = model(&cases::two_delay());
        let nodes = snapped_nodes(&km, 1.0, 32);
        assert!(nodes.contains(&0.3) && nodes.contains(&0.7));
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        let total: f64 = trapezoid_weights(&nodes).iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_and_positive() {
        let km = model(&cases::two_delay());
        let op = NystromOperator::build(&km, 1.0, 60, KernelSource::Explicit).unwrap();
        assert!(op.hermitian_defect() < 1e-12);
        let km = model(&cases::scalar(0.0));
        let op = NystromOperator::build(&km, 1.0, 200, KernelSource::Explicit).unwrap();
        assert!(op.min_eigenvalue().unwrap() >= 1.0 - 1e-3);
    }

    #[test]
    fn direct_and_explicit_sources_agree() {
        let km = model(&cases::two_delay());
        let a = NystromOperator::build(&km, 1.0, 16, KernelSource::Explicit).unwrap();
        let b = NystromOperator::build(&km, 1.0, 16, KernelSource::Direct).unwrap();
        assert!(a.s_dense.max_abs_diff(&b.s_dense) < 1e-8);
    }

    #[test]
    fn oracle_potential_converges_at_second_order() {
        for w in [cases::scalar(0.0), cases::two_delay()] {
            let km = model(&w);
            let exact = recover_at(&km, 1.0).unwrap();
            let errs: Vec<f64> = [100, 200, 400]
                .iter()
                .map(|&n| {
                    let op = NystromOperator::build(&km, 1.0, n, KernelSource::Explicit).unwrap();
                    op.oracle_v().unwrap().max_abs_diff(&exact)
                })
                .collect();
            assert!(errs[2] < 5e-4);
            let ratio = errs[1] / errs[2];
            assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn resolvent_kernel_converges_at_second_order() {
        let km = model(&cases::two_delay());
        let rm = ResolventModel::new(FundamentalSolution::new(&km, 1.0).unwrap()).unwrap();
        let points: Vec<f64> = (0..=5).map(|k| 0.2 * k as f64).collect();
        let errs: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| {
                let op = NystromOperator::build(&km, 1.0, n, KernelSource::Explicit).unwrap();
                let mut pairs = Vec::new();
                let mut exact = Vec::new();
                for &x in &points {
                    for &t in &points {
                        if x == t {
                            continue;
                        }
                        pairs.push((op.node_index(x).unwrap(), op.node_index(t).unwrap()));
                        exact.push(rm.kernel_t(x, t).unwrap());
                    }
                }
                let approx = op.resolvent_kernel(&pairs).unwrap();
                approx
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| a.max_abs_diff(b))
                    .fold(0.0, f64::max)
            })
            .collect();
        let ratio = errs[1] / errs[2];
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }
}
