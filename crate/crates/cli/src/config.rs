//! Problem description read from JSON. Complex entries are `[re, im]` pairs,
//! matrices are arrays of rows.

use std::path::Path;

use dirac_isp::cases;
use dirac_isp::matrix::{CMatrix, C64};
use dirac_isp::weyl::WeylData;
use dirac_isp::NumericalPolicy;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub type ComplexRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub p: usize,
    pub beta: ComplexRows,
    pub theta1: ComplexRows,
    pub theta2: ComplexRows,
    #[serde(rename = "R")]
    pub r: ComplexRows,
    #[serde(rename = "D")]
    pub delays: Vec<f64>,
    /// Pseudo-exponential `α`, required by the round-trip check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ComplexRows>,
    /// Seed the parameters were generated from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: GridConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub l_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default)]
    pub nystrom: NystromCheck,
    #[serde(default)]
    pub forward: ForwardCheck,
    #[serde(default)]
    pub identity: bool,
    #[serde(default)]
    pub roundtrip: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NystromCheck {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_nystrom_n")]
    pub n: usize,
}

fn default_nystrom_n() -> usize {
    200
}

impl Default for NystromCheck {
    fn default() -> Self {
        Self {
            enabled: false,
            n: default_nystrom_n(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardCheck {
    #[serde(default)]
    pub enabled: bool,
    /// Spectral points `[re, im]`; empty means two points chosen below the halfplane bound.
    #[serde(default)]
    pub lambdas: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub acceptance: Option<f64>,
    pub solve: Option<f64>,
    pub spectral_gap: Option<f64>,
    pub unitary: Option<f64>,
    pub u22_rcond_min: Option<f64>,
    pub quadrature: Option<f64>,
    pub breakpoint_shift: Option<f64>,
    pub roundtrip: Option<f64>,
    pub j_unitary: Option<f64>,
    pub delay_zero: Option<f64>,
    /// Nyström endpoint value vs closed form, relative to `1 + ‖v‖`.
    pub nystrom: Option<f64>,
    /// Allowed growth factor in the forward boundedness test.
    pub weyl_bound: Option<f64>,
}

/// Tolerances of the checks that live outside the solver policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTolerances {
    pub nystrom: f64,
    pub weyl_bound: f64,
}

impl ToleranceOverrides {
    pub fn apply(&self, policy: &mut NumericalPolicy) -> CheckTolerances {
        let set = |field: &mut f64, value: Option<f64>| {
            if let Some(v) = value {
                *field = v;
            }
        };
        set(&mut policy.acceptance_tol, self.acceptance);
        set(&mut policy.solve_tol, self.solve);
        set(&mut policy.spectral_gap_tol, self.spectral_gap);
        set(&mut policy.unitary_tol, self.unitary);
        set(&mut policy.u22_rcond_min, self.u22_rcond_min);
        set(&mut policy.quadrature_tol, self.quadrature);
        set(&mut policy.breakpoint_shift, self.breakpoint_shift);
        set(&mut policy.roundtrip_tol, self.roundtrip);
        set(&mut policy.j_unitary_tol, self.j_unitary);
        set(&mut policy.delay_zero_tol, self.delay_zero);
        CheckTolerances {
            nystrom: self.nystrom.unwrap_or(5e-4),
            weyl_bound: self.weyl_bound.unwrap_or(10.0),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let all = [
            ("acceptance", self.acceptance),
            ("solve", self.solve),
            ("spectral_gap", self.spectral_gap),
            ("unitary", self.unitary),
            ("u22_rcond_min", self.u22_rcond_min),
            ("quadrature", self.quadrature),
            ("breakpoint_shift", self.breakpoint_shift),
            ("roundtrip", self.roundtrip),
            ("j_unitary", self.j_unitary),
            ("delay_zero", self.delay_zero),
            ("nystrom", self.nystrom),
            ("weyl_bound", self.weyl_bound),
        ];
        for (name, value) in all {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::field(
                        format!("tolerances.{name}"),
                        format!("must be positive and finite, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn to_rows(m: &CMatrix) -> ComplexRows {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn to_matrix(
    field: &str,
    rows: &ComplexRows,
    expected: (usize, usize),
) -> Result<CMatrix, CliError> {
    if rows.len() != expected.0 {
        return Err(CliError::field(
            field,
            format!("expected {} rows, got {}", expected.0, rows.len()),
        ));
    }
    let mut m = CMatrix::zeros(expected.0, expected.1);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != expected.1 {
            return Err(CliError::field(
                format!("{field}[{i}]"),
                format!("expected {} entries, got {}", expected.1, row.len()),
            ));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(CliError::field(
                    format!("{field}[{i}][{j}]"),
                    "entry is not finite",
                ));
            }
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.check_shape()?;
        Ok(config)
    }

    fn check_shape(&self) -> Result<(), CliError> {
        if self.n == 0 || self.p == 0 {
            return Err(CliError::field("n, p", "dimensions must be positive"));
        }
        if self.delays.len() != self.p {
            return Err(CliError::field(
                "D",
                format!("expected {} delays, got {}", self.p, self.delays.len()),
            ));
        }
        if !(self.grid.l_max > 0.0 && self.grid.l_max.is_finite()) {
            return Err(CliError::field(
                "grid.l_max",
                format!("must be positive, got {}", self.grid.l_max),
            ));
        }
        if self.grid.points < 2 {
            return Err(CliError::field(
                "grid.points",
                format!("need at least 2 points, got {}", self.grid.points),
            ));
        }
        if self.checks.nystrom.n < 16 {
            return Err(CliError::field(
                "checks.nystrom.n",
                format!("need at least 16 intervals, got {}", self.checks.nystrom.n),
            ));
        }
        self.tolerances.validate()?;
        self.weyl_data()?;
        if let Some(alpha) = &self.alpha {
            to_matrix("alpha", alpha, (self.n, self.n))?;
        }
        Ok(())
    }

    pub fn weyl_data(&self) -> Result<WeylData, CliError> {
        let (n, p) = (self.n, self.p);
        let beta = to_matrix("beta", &self.beta, (n, n))?;
        let theta1 = to_matrix("theta1", &self.theta1, (n, p))?;
        let theta2 = to_matrix("theta2", &self.theta2, (n, p))?;
        let r = to_matrix("R", &self.r, (p, p))?;
        Ok(WeylData::new(beta, theta1, theta2, self.delays.clone(), r)?)
    }

    pub fn alpha(&self) -> Result<Option<CMatrix>, CliError> {
        self.alpha
            .as_ref()
            .map(|a| to_matrix("alpha", a, (self.n, self.n)))
            .transpose()
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let count = self.grid.points;
        (0..count)
            .map(|i| self.grid.l_max * i as f64 / (count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExampleKind {
    Scalar,
    RandomPe,
    Delayed,
}

fn all_checks(lambdas: Vec<[f64; 2]>, roundtrip: bool) -> ChecksConfig {
    ChecksConfig {
        nystrom: NystromCheck {
            enabled: true,
            n: default_nystrom_n(),
        },
        forward: ForwardCheck {
            enabled: true,
            lambdas,
        },
        identity: true,
        roundtrip,
    }
}

/// A ready-to-run configuration for one of the built-in examples.
pub fn generate_example(kind: ExampleKind, seed: u64) -> Result<ProblemConfig, CliError> {
    let grid = GridConfig {
        l_max: 2.0,
        points: 50,
    };
    let fixed_lambdas = vec![[0.0, -3.0], [1.0, -4.0]];
    let config = match kind {
        ExampleKind::Scalar | ExampleKind::Delayed => {
            let delayed = kind == ExampleKind::Delayed;
            let w = cases::scalar(if delayed { 0.5 } else { 0.0 });
            ProblemConfig {
                n: 1,
                p: 1,
                beta: to_rows(&w.beta),
                theta1: to_rows(&w.theta1),
                theta2: to_rows(&w.theta2),
                r: to_rows(&w.r),
                delays: w.delays.clone(),
                alpha: (!delayed).then(|| to_rows(&cases::scalar_pseudo_exponential().alpha)),
                seed: None,
                grid,
                checks: all_checks(fixed_lambdas, !delayed),
                tolerances: ToleranceOverrides::default(),
            }
        }
        ExampleKind::RandomPe => {
            let pe = cases::random_pseudo_exponential(seed);
            let w = pe.to_weyl(&NumericalPolicy::default())?;
            let m = w.halfplane_bound()?;
            ProblemConfig {
                n: pe.n(),
                p: pe.p(),
                beta: to_rows(&w.beta),
                theta1: to_rows(&w.theta1),
                theta2: to_rows(&w.theta2),
                r: to_rows(&w.r),
                delays: w.delays.clone(),
                alpha: Some(to_rows(&pe.alpha)),
                seed: Some(seed),
                grid,
                checks: all_checks(vec![[0.0, -m - 2.0], [1.0, -m - 3.0]], true),
                tolerances: ToleranceOverrides::default(),
            }
        }
    };
    Ok(config)
}
