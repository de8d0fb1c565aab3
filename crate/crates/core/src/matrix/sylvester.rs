use super::{spectrum, CMatrix, LinalgError, Lu, C64, I};

/// Residual bound relative to `1 + ‖Q‖`.
const RESIDUAL_TOL: f64 = 1e-10;

/// Smallest `|μ − conj(ν)|` over eigenvalue pairs of `beta`, with the pair.
pub fn conjugate_spectral_gap(beta: &CMatrix) -> Result<(f64, C64, C64), LinalgError> {
    let eigs = spectrum(beta)?;
    let mut best = (f64::INFINITY, C64::default(), C64::default());
    for &mu in &eigs {
        for &nu in &eigs {
            let gap = (mu - nu.conj()).norm();
            if gap < best.0 {
                best = (gap, mu, nu);
            }
        }
    }
    Ok(best)
}

/// Solves `i(βX − Xβ*) = Q` for Hermitian `Q`, returning the Hermitian solution.
///
/// The equation is uniquely solvable iff no eigenvalue of `β` is the conjugate
/// of another, which is checked against `gap_tol` first. The Kronecker system
/// `i(I⊗β − conj(β)⊗I) vec(X) = vec(Q)` is solved densely.
pub fn solve_sylvester(beta: &CMatrix, q: &CMatrix, gap_tol: f64) -> Result<CMatrix, LinalgError> {
    let n = beta.ensure_square()?;
    if q.shape() != (n, n) {
        return Err(LinalgError::DimensionMismatch {
            op: "sylvester",
            lhs: beta.shape(),
            rhs: q.shape(),
        });
    }
    let q_norm = q.norm_fro();
    let defect = q.hermitian_defect();
    if defect > RESIDUAL_TOL * (1.0 + q_norm) {
        return Err(LinalgError::NonHermitianQ { defect });
    }
    let (gap, mu, nu) = conjugate_spectral_gap(beta)?;
    if gap < gap_tol {
        return Err(LinalgError::SpectraOverlap { mu, nu, gap });
    }
    if q_norm == 0.0 {
        return Ok(CMatrix::zeros(n, n));
    }

    // column-major vec: index(i, j) = i + j n
    let nn = n * n;
    let mut system = CMatrix::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for k in 0..n {
                system[(row, k + j * n)] += I * beta[(i, k)];
                system[(row, i + k * n)] -= I * beta[(j, k)].conj();
            }
        }
    }
    let rhs: Vec<C64> = (0..nn).map(|idx| q[(idx % n, idx / n)]).collect();
    let lu = Lu::new(&system)?;
    let sol = lu.solve_vec(&rhs);
    let x = CMatrix::from_fn(n, n, |i, j| sol[i + j * n]).hermitian_part();

    let residual = (&(beta * &x) - &(&x * &beta.adjoint())).scale(I) - q;
    if residual.norm_fro() > RESIDUAL_TOL * (1.0 + q_norm) {
        return Err(LinalgError::Singular { rcond: lu.rcond() });
    }
    Ok(x)
}
