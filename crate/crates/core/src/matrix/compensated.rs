//! Twice-working-precision dot products (error-free transformations).

use super::{CMatrix, C64};

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `Σ aᵢbᵢ` evaluated as if in doubled precision, then rounded once.
pub fn dot2(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in pairs {
        let (p, ep) = two_prod(a, b);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

impl CMatrix {
    /// `self* · rhs` with every entry computed by [`dot2`].
    pub fn adjoint_mul_compensated(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.rows(),
            rhs.rows(),
            "adjoint product dimension mismatch"
        );
        let mut out = CMatrix::zeros(self.cols(), rhs.cols());
        for a in 0..self.cols() {
            for b in 0..rhs.cols() {
                let col = || (0..self.rows()).map(move |i| (self[(i, a)], rhs[(i, b)]));
                // conj(x)·y = (xr·yr + xi·yi) + i(xr·yi − xi·yr)
                let re = dot2(col().flat_map(|(x, y)| [(x.re, y.re), (x.im, y.im)]));
                let im = dot2(col().flat_map(|(x, y)| [(x.re, y.im), (-x.im, y.re)]));
                out[(a, b)] = C64::new(re, im);
            }
        }
        out
    }
}
