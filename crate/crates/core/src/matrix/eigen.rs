use super::{CMatrix, LinalgError, C64, ONE, ZERO};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Unitary reduction to upper Hessenberg form by Householder reflections.
fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2vv*) H
        for j in k..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, j)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * dot * 2.0;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(j, vj)| h[(i, k + 1 + j)] * vj)
                .sum();
            for (j, vj) in v.iter().enumerate() {
                h[(i, k + 1 + j)] -= dot * vj.conj() * 2.0;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn givens(a: C64, b: C64) -> (C64, C64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (ONE, ZERO)
    } else {
        (a / r, b / r)
    }
}

/// All eigenvalues of a square matrix (Hessenberg reduction followed by
/// single-shift QR with Wilkinson shifts). Order is unspecified.
pub fn spectrum(a: &CMatrix) -> Result<Vec<C64>, LinalgError> {
    let n = a.ensure_square()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut rotations: Vec<(C64, C64)> = Vec::with_capacity(n);

    loop {
        if hi == 0 {
            eigs.push(h[(0, 0)]);
            break;
        }
        // deflation search
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(LinalgError::NoConvergence { iterations: iter });
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        rotations.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c.conj() * x + s.conj() * y;
                h[(k + 1, j)] = -s * x + c * y;
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            for i in lo..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s;
                h[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(eigs)
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle's
/// Hessenberg image is used, so small non-Hermitian noise is ignored.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = a.ensure_square()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = hessenberg(&a.hermitian_part());
    let mut d: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    // a diagonal unitary scaling makes the sub-diagonal real and nonnegative
    let mut e: Vec<f64> = (0..n)
        .map(|i| if i + 1 < n { h[(i + 1, i)].norm() } else { 0.0 })
        .collect();
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Implicit QL with Wilkinson shifts on a real symmetric tridiagonal matrix.
/// `e[i]` couples `d[i]` and `d[i + 1]`; eigenvalues overwrite `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(LinalgError::NoConvergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::I;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_and_zero() {
        let e = sorted(spectrum(&CMatrix::diag(&[ONE, I * 2.0])).unwrap());
        assert!((e[0] - I * 2.0).norm() < 1e-15 && (e[1] - ONE).norm() < 1e-15);
        let z = spectrum(&CMatrix::zeros(3, 3)).unwrap();
        assert!(z.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn rotation_generator() {
        let a = CMatrix::from_real_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        let e = sorted(spectrum(&a).unwrap());
        assert!((e[0] + I).norm() < 1e-14, "{e:?}");
        assert!((e[1] - I).norm() < 1e-14, "{e:?}");
    }

    #[test]
    fn companion_matrix_roots() {
        // roots 1, 2, 3, 4 + i
        let roots = [
            ONE,
            C64::new(2.0, 0.0),
            C64::new(3.0, 0.0),
            C64::new(4.0, 1.0),
        ];
        let mut coeffs = vec![ONE];
        for r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let mut comp = CMatrix::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -coeffs[j + 1];
        }
        for i in 1..n {
            comp[(i, i - 1)] = ONE;
        }
        let e = spectrum(&comp).unwrap();
        for r in roots {
            let best = e.iter().map(|z| (z - r).norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-9, "root {r} missed: {e:?}");
        }
    }

    #[test]
    fn backward_error_via_trace_and_determinant() {
        let a = CMatrix::from_rows(&[
            [C64::new(0.2, 1.0), C64::new(-0.4, 0.3), C64::new(1.1, 0.0)],
            [C64::new(0.7, -0.2), C64::new(-1.3, 0.5), C64::new(0.0, 0.9)],
            [C64::new(0.1, 0.1), C64::new(0.6, 0.0), C64::new(0.5, -0.8)],
        ]);
        let e = spectrum(&a).unwrap();
        let sum: C64 = e.iter().sum();
        assert!((sum - a.trace()).norm() < 1e-13);
        for z in &e {
            let shifted = &a - &CMatrix::identity(3).scale(*z);
            let lu = crate::matrix::Lu::new(&shifted);
            assert!(lu.is_err() || lu.unwrap().rcond() < 1e-12);
        }
    }

    #[test]
    fn hermitian_matches_general_route() {
        let b = CMatrix::from_fn(6, 6, |i, j| {
            C64::new(
                ((i * 7 + j * 3) % 5) as f64 - 2.0,
                ((i + 2 * j) % 3) as f64 - 1.0,
            )
        });
        let h = (&b + &b.adjoint()).scale_real(0.5);
        let herm = hermitian_eigenvalues(&h).unwrap();
        let mut general: Vec<f64> = spectrum(&h).unwrap().iter().map(|z| z.re).collect();
        general.sort_by(f64::total_cmp);
        for (a, b) in herm.iter().zip(&general) {
            assert!((a - b).abs() < 1e-12, "{herm:?} vs {general:?}");
        }
        let tr: f64 = herm.iter().sum();
        assert!((tr - h.trace().re).abs() < 1e-12);
    }
}
