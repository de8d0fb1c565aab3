//! Every numerical threshold the solver and its checks use, in one place.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalPolicy {
    /// Residual bound for Sylvester and linear solves.
    pub solve_tol: f64,
    /// Default tolerance for identity-type acceptance checks, including the
    /// closed-form vs quadrature recovery agreement (relative to `1 + ‖v‖`).
    pub acceptance_tol: f64,
    /// Minimum `|μ − conj(ν)|` over eigenvalue pairs of beta.
    pub spectral_gap_tol: f64,
    /// Bound on `‖R*R − I‖`.
    pub unitary_tol: f64,
    /// Reciprocal condition of `U₂₂(l)` below which the operator is reported non-invertible.
    pub u22_rcond_min: f64,
    /// Absolute error target for adaptive quadrature.
    pub quadrature_tol: f64,
    /// Relative offset used to evaluate one-sided limits at delay breakpoints.
    pub breakpoint_shift: f64,
    /// Pseudo-exponential round trip (relative to the potential's scale).
    pub roundtrip_tol: f64,
    /// Bound on `‖U*JU − J‖`.
    pub j_unitary_tol: f64,
    /// Bound on `‖v‖` before the first delay.
    pub delay_zero_tol: f64,
}

impl Default for NumericalPolicy {
    fn default() -> Self {
        Self {
            solve_tol: 1e-10,
            acceptance_tol: 1e-8,
            spectral_gap_tol: 1e-8,
            unitary_tol: 1e-12,
            u22_rcond_min: 1e-12,
            quadrature_tol: 1e-10,
            breakpoint_shift: 1e-9,
            roundtrip_tol: 1e-6,
            j_unitary_tol: 1e-9,
            delay_zero_tol: 1e-9,
        }
    }
}
