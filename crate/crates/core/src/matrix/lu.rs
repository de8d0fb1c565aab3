use super::{CMatrix, LinalgError, C64, ONE, ZERO};

/// Pivots whose reciprocal condition falls below this are reported as singular.
const SINGULAR_RCOND: f64 = 1e-15;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    norm_one: f64,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self, LinalgError> {
        let n = a.ensure_square()?;
        let norm_one = a.norm_one();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot_mag) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_mag == 0.0 {
                return Err(LinalgError::Singular { rcond: 0.0 });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        let out = Self { lu, perm, norm_one };
        let rcond = out.rcond();
        if rcond < SINGULAR_RCOND {
            return Err(LinalgError::Singular { rcond });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    fn solve_in_place(&self, x: &mut [C64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
    }

    /// Solves `A^* y = b` using the same factors.
    fn solve_adjoint_in_place(&self, x: &mut [C64]) {
        let n = self.dim();
        // U^* z = b
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(j, i)].conj() * x[j];
            }
            x[i] = acc / self.lu[(i, i)].conj();
        }
        // L^* w = z
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(j, i)].conj() * x[j];
            }
            x[i] = acc;
        }
        // y = P^T w
        let w = x.to_vec();
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix, LinalgError> {
        let n = self.dim();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "solve",
                lhs: (n, n),
                rhs: b.shape(),
            });
        }
        let mut out = CMatrix::zeros(n, b.cols());
        let mut col = vec![ZERO; n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(self.perm[i], j)];
            }
            self.solve_in_place(&mut col);
            for (i, &c) in col.iter().enumerate() {
                out[(i, j)] = c;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.dim()))
            .expect("identity has matching rows")
    }

    /// Reciprocal condition number in the 1-norm, with `‖A⁻¹‖₁` estimated by
    /// Hager's method (a few solves, never forms the inverse).
    pub fn rcond(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        if self.norm_one == 0.0 {
            return 0.0;
        }
        if (0..n).any(|i| self.lu[(i, i)] == ZERO) {
            return 0.0;
        }
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve_vec(&x);
            let y_norm: f64 = y.iter().map(|z| z.norm()).sum();
            if !y_norm.is_finite() {
                return 0.0;
            }
            estimate = f64::max(estimate, y_norm);
            let mut xi: Vec<C64> = y
                .iter()
                .map(|z| if z.norm() > 0.0 { z / z.norm() } else { ONE })
                .collect();
            self.solve_adjoint_in_place(&mut xi);
            let (jmax, zmax) = xi
                .iter()
                .enumerate()
                .map(|(j, z)| (j, z.norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            let zx: f64 = xi.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx {
                break;
            }
            x = vec![ZERO; n];
            x[jmax] = ONE;
        }
        1.0 / (self.norm_one * estimate)
    }
}

/// Solves `A X = B`. The singular error carries the condition estimate.
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    Lu::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::I;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = CMatrix::from_rows(&[[re(1.0), I], [re(-2.0), re(3.5)]]);
        let x = solve_linear(&CMatrix::identity(2), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn scalar_and_hand_inverse() {
        let x = solve_linear(&CMatrix::scalar(re(2.0)), &CMatrix::scalar(re(1.0))).unwrap();
        assert_eq!(x[(0, 0)], re(0.5));
        let a = CMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let inv = solve_linear(&a, &CMatrix::identity(2)).unwrap();
        let expected = CMatrix::from_real_rows(&[[1.0, -1.0], [0.0, 1.0]]);
        assert!(inv.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn singular_reports_rcond() {
        let a = CMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        match solve_linear(&a, &CMatrix::identity(2)) {
            Err(LinalgError::Singular { rcond }) => assert!(rcond < 1e-15),
            other => panic!("expected Singular, got {other:?}"),
        }
        assert!(matches!(
            solve_linear(&CMatrix::zeros(2, 3), &CMatrix::zeros(2, 1)),
            Err(LinalgError::NonSquare { .. })
        ));
    }

    #[test]
    fn rcond_close_to_exact_for_diagonal() {
        let a = CMatrix::diag(&[re(1.0), re(1e-3), re(10.0)]);
        let rc = Lu::new(&a).unwrap().rcond();
        assert!((rc - 1e-4).abs() < 1e-12, "rcond {rc}");
    }

    #[test]
    fn adjoint_solve_matches_explicit_adjoint() {
        let a = CMatrix::from_rows(&[
            [re(2.0), I, re(0.5)],
            [re(-1.0), re(3.0), C64::new(0.2, 0.7)],
            [I, re(0.0), re(1.5)],
        ]);
        let lu = Lu::new(&a).unwrap();
        let mut b = vec![re(1.0), I, re(-2.0)];
        lu.solve_adjoint_in_place(&mut b);
        let direct = solve_linear(
            &a.adjoint(),
            &CMatrix::from_vec(3, 1, vec![re(1.0), I, re(-2.0)]).unwrap(),
        )
        .unwrap();
        for (i, z) in b.iter().enumerate() {
            assert!((z - direct[(i, 0)]).norm() < 1e-14);
        }
    }
}
