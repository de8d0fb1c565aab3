//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005, Algorithm 2.3), plus `∫₀ʸ exp(tB) dt` via block augmentation.

use super::{CMatrix, LinalgError, C64};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn lincomb(terms: &[(f64, &CMatrix)], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for &(c, m) in terms {
        out += &m.scale_real(c);
    }
    out
}

/// U and V of the degree-m approximant r_m = (V - U)^{-1}(V + U), m ≤ 9.
fn pade_low(a: &CMatrix, coeffs: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let a2 = a * a;
    let mut powers = vec![CMatrix::identity(n), a2.clone()];
    while powers.len() < coeffs.len() / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut odd = CMatrix::zeros(n, n);
    let mut even = CMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        even += &p.scale_real(coeffs[2 * k]);
        odd += &p.scale_real(coeffs[2 * k + 1]);
    }
    (a * &odd, even)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let b = &PADE_13;
    let id = CMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * &lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n)
        + lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n);
    let u = a * &u_inner;
    let v = &a6 * &lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n)
        + lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);
    (u, v)
}

/// `exp(A)` for square `A`. Non-finite output is reported as overflow.
pub fn mat_exp(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = a.ensure_square()?;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(LinalgError::Overflow { norm });
    }
    if n == 1 {
        let z = a[(0, 0)].exp();
        return if z.is_finite() {
            Ok(CMatrix::scalar(z))
        } else {
            Err(LinalgError::Overflow { norm })
        };
    }

    let (u, v, squarings) = match THETA.iter().find(|(_, theta)| norm <= *theta) {
        Some(&(m, _)) => {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let (u, v) = pade_low(a, coeffs);
            (u, v, 0)
        }
        None => {
            let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
            let scaled = a.scale_real(2f64.powi(-s));
            let (u, v) = pade_13(&scaled);
            (u, v, s)
        }
    };

    let mut r =
        super::solve_linear(&(&v - &u), &(&v + &u)).map_err(|_| LinalgError::Overflow { norm })?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.is_finite() {
        Ok(r)
    } else {
        Err(LinalgError::Overflow { norm })
    }
}

/// `∫₀ʸ exp(tB) dt`, read off the top-right block of `exp(y [[B, I], [0, 0]])`.
/// Exact for singular `B`.
pub fn exp_integral(b: &CMatrix, y: f64) -> Result<CMatrix, LinalgError> {
    let n = b.ensure_square()?;
    if y < 0.0 || y.is_nan() {
        return Err(LinalgError::NegativeLength(y));
    }
    if y == 0.0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let mut aug = CMatrix::zeros(2 * n, 2 * n);
    aug.set_block(0, 0, &b.scale_real(y));
    aug.set_block(0, n, &CMatrix::identity(n).scale_real(y));
    let e = mat_exp(&aug)?;
    Ok(e.block(0, n, n, n))
}

/// `exp(z)` on each diagonal entry, for diagonal factors like `exp(-2iλD)`.
pub fn diag_exp(entries: &[C64]) -> CMatrix {
    CMatrix::diag(&entries.iter().map(|z| z.exp()).collect::<Vec<_>>())
}
