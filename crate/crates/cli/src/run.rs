//! One configured run: recovery on the grid, the enabled checks, and the
//! two output files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use dirac_isp::matrix::{CMatrix, C64};
use dirac_isp::oracle::{
    operator_identity_residual, weyl_check, KernelSource, NystromOperator, SampledPotential,
};
use dirac_isp::recover::{
    evaluation_point, recover_at, recover_profile, PotentialGrid, ProfileOptions,
};
use dirac_isp::semisep::FundamentalSolution;
use dirac_isp::transform::KernelModel;
use dirac_isp::weyl::{PseudoExpParams, WeylData};
use dirac_isp::NumericalPolicy;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CheckTolerances, GridConfig, ProblemConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CheckName {
    /// Closed form vs quadrature of the resolvent kernel.
    TwoPath,
    /// `v` vanishes before the first delay.
    Delay,
    /// Recovered vs explicit pseudo-exponential potential.
    Roundtrip,
    /// Dense Nyström oracle at the right end of the grid.
    Nystrom,
    /// Forward integration and the boundedness test.
    Forward,
    /// Discretized operator identity under refinement.
    Identity,
}

impl CheckName {
    fn label(self) -> &'static str {
        match self {
            CheckName::TwoPath => "two-path",
            CheckName::Delay => "delay",
            CheckName::Roundtrip => "roundtrip",
            CheckName::Nystrom => "nystrom",
            CheckName::Forward => "forward",
            CheckName::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checks: Option<Vec<CheckName>>,
    pub nystrom_n: Option<usize>,
    pub env_tolerance: Option<f64>,
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub status: Status,
    /// The quantity compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub details: Value,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub status: Status,
    pub n: usize,
    pub p: usize,
    pub delays: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: GridConfig,
    /// Halfplane margin `M`: `Im λ < −M` keeps `λ` off the spectrum of `β` with margin 1.
    pub halfplane_bound: f64,
    /// `c` with `∫ e^{−cx}‖k(x)‖ dx < ∞`.
    pub growth_witness: f64,
    pub policy: Value,
    pub recovery: Value,
    pub diagnostics: Value,
    pub checks: Vec<CheckReport>,
    pub timings: Value,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

fn policy_json(policy: &NumericalPolicy, tols: &CheckTolerances) -> Value {
    json!({
        "solve": policy.solve_tol,
        "acceptance": policy.acceptance_tol,
        "spectral_gap": policy.spectral_gap_tol,
        "unitary": policy.unitary_tol,
        "u22_rcond_min": policy.u22_rcond_min,
        "quadrature": policy.quadrature_tol,
        "breakpoint_shift": policy.breakpoint_shift,
        "roundtrip": policy.roundtrip_tol,
        "j_unitary": policy.j_unitary_tol,
        "delay_zero": policy.delay_zero_tol,
        "nystrom": tols.nystrom,
        "weyl_bound": tols.weyl_bound,
    })
}

/// `x,Re v_11,Im v_11,…` with 17 significant digits.
pub fn potential_csv(xs: &[f64], values: &[&CMatrix], p: usize) -> String {
    let mut out = String::from("x");
    for a in 1..=p {
        for b in 1..=p {
            write!(out, ",Re v_{a}{b},Im v_{a}{b}").unwrap();
        }
    }
    out.push('\n');
    for (x, v) in xs.iter().zip(values) {
        write!(out, "{x:.16e}").unwrap();
        for a in 0..p {
            for b in 0..p {
                write!(out, ",{:.16e},{:.16e}", v[(a, b)].re, v[(a, b)].im).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

struct Context<'a> {
    config: &'a ProblemConfig,
    w: &'a WeylData,
    km: &'a KernelModel,
    grid: &'a PotentialGrid,
    values: &'a [&'a CMatrix],
    tols: CheckTolerances,
    nystrom_n: usize,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn two_path(ctx: &Context) -> (Status, f64, f64, Value) {
    let tol = ctx.km.policy.acceptance_tol;
    let worst = ctx.grid.max_relative_residual().unwrap_or(0.0);
    (
        status(worst <= tol),
        worst,
        tol,
        json!({ "max_relative_residual": worst }),
    )
}

fn delay(ctx: &Context) -> Option<(Status, f64, f64, Value)> {
    let d1 = ctx.km.delays.first_delay();
    if d1 <= 0.0 {
        return None;
    }
    let tol = ctx.km.policy.delay_zero_tol;
    let below: Vec<f64> = ctx
        .grid
        .samples
        .iter()
        .zip(ctx.values)
        .filter(|(s, _)| s.l < d1)
        .map(|(_, v)| v.norm_fro())
        .collect();
    let worst = below.iter().cloned().fold(0.0, f64::max);
    Some((
        status(worst <= tol),
        worst,
        tol,
        json!({ "first_delay": d1, "points": below.len(), "max_norm": worst }),
    ))
}

fn roundtrip(ctx: &Context) -> Result<(Status, f64, f64, Value), CliError> {
    let alpha = ctx.config.alpha()?.ok_or_else(|| {
        CliError::field(
            "alpha",
            "the roundtrip check needs pseudo-exponential parameters",
        )
    })?;
    let pe = PseudoExpParams::new(alpha, ctx.w.theta1.clone(), ctx.w.theta2.clone())?;
    let expected = pe.to_weyl(&ctx.km.policy)?;
    let mismatch = expected
        .beta
        .max_abs_diff(&ctx.w.beta)
        .max(expected.r.max_abs_diff(&ctx.w.r));
    if mismatch > 1e-10 * (1.0 + ctx.w.beta.norm_max()) || ctx.w.delays.iter().any(|&d| d != 0.0) {
        return Err(CliError::field(
            "alpha",
            "does not match beta, R = I and D = 0 of a pseudo-exponential potential",
        ));
    }
    let xs = ctx.grid.xs();
    let truth = pe.potential_profile(&xs)?;
    let scale = truth
        .iter()
        .map(CMatrix::norm_fro)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let worst = ctx
        .values
        .iter()
        .zip(&truth)
        .map(|(got, want)| (*got - want).norm_fro() / scale)
        .fold(0.0, f64::max);
    let tol = ctx.km.policy.roundtrip_tol;
    Ok((
        status(worst <= tol),
        worst,
        tol,
        json!({ "max_relative_error": worst, "scale": scale }),
    ))
}

fn nystrom(ctx: &Context) -> Result<(Status, f64, f64, Value), CliError> {
    let l = ctx.config.grid.l_max;
    let op = NystromOperator::build(ctx.km, l, ctx.nystrom_n, KernelSource::Explicit)?;
    let min_eig = op.min_eigenvalue()?;
    let oracle = op.oracle_v()?;
    let exact = recover_at(ctx.km, l)?;
    let err = (&oracle - &exact).norm_fro() / (1.0 + exact.norm_fro());
    let tol = ctx.tols.nystrom;
    let ok = err <= tol && min_eig >= 0.99;
    Ok((
        status(ok),
        err,
        tol,
        json!({
            "intervals": ctx.nystrom_n,
            "l": l,
            "relative_error": err,
            "min_eigenvalue": min_eig,
            "hermitian_defect": op.hermitian_defect(),
        }),
    ))
}

fn identity(ctx: &Context) -> Result<(Status, f64, f64, Value), CliError> {
    let l = ctx.config.grid.l_max;
    let coarse = operator_identity_residual(ctx.km, l, ctx.nystrom_n)?;
    let fine = operator_identity_residual(ctx.km, l, 2 * ctx.nystrom_n)?;
    let ratio = coarse.relative / fine.relative.max(f64::MIN_POSITIVE);
    Ok((
        status(fine.relative < coarse.relative || fine.residual == 0.0),
        fine.relative,
        coarse.relative,
        json!({
            "intervals": [coarse.intervals, fine.intervals],
            "relative_residual": [coarse.relative, fine.relative],
            "refinement_ratio": ratio,
        }),
    ))
}

fn forward(ctx: &Context, m: f64) -> Result<(Status, f64, f64, Value), CliError> {
    let l = ctx.config.grid.l_max;
    let lambdas: Vec<C64> = if ctx.config.checks.forward.lambdas.is_empty() {
        vec![C64::new(0.0, -m - 2.0), C64::new(1.0, -m - 3.0)]
    } else {
        ctx.config
            .checks
            .forward
            .lambdas
            .iter()
            .map(|&[re, im]| C64::new(re, im))
            .collect()
    };
    if let Some(bad) = lambdas.iter().find(|z| !(z.im < -m - 1.0)) {
        return Err(CliError::field(
            "checks.forward.lambdas",
            format!("λ = {bad} needs Im λ < −M − 1 = {}", -m - 1.0),
        ));
    }
    // at least 8 steps per unit of ‖iλj + jV‖
    let v_max = ctx.values.iter().map(|v| v.norm_fro()).fold(0.0, f64::max);
    let lam_max = lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let steps = (8.0 * l * (lam_max + v_max))
        .ceil()
        .max(2000.0 * l)
        .max(4000.0) as usize;
    let jumps: Vec<f64> = ctx.km.delays.breakpoints().collect();
    let v = SampledPotential::from_fn(
        l,
        2 * steps + 1,
        &jumps,
        ctx.km.policy.breakpoint_shift,
        |x| recover_at(ctx.km, x),
    )?;
    let bound = ctx.tols.weyl_bound;
    let mut worst = 0.0f64;
    let mut all_passed = true;
    let mut per_lambda = Vec::new();
    for &lambda in &lambdas {
        let r = weyl_check(ctx.w, &v, lambda, l, steps, bound, m)?;
        let control = weyl_check(ctx.w, &v.negated(), lambda, l, steps, bound, m)?;
        worst = worst.max(r.growth_ratio.max(r.delay_ratio));
        all_passed &= r.passed;
        per_lambda.push(json!({
            "lambda": [lambda.re, lambda.im],
            "growth_ratio": r.growth_ratio,
            "delay_ratio": r.delay_ratio,
            "delay_deviation": r.delay_deviation,
            "passed": r.passed,
            "negated_potential_growth_ratio": control.growth_ratio,
            "negated_potential_passed": control.passed,
        }));
    }
    Ok((
        status(all_passed),
        worst,
        bound,
        json!({ "steps": steps, "lambdas": per_lambda }),
    ))
}

fn selected(options: &RunOptions, config: &ProblemConfig) -> Vec<CheckName> {
    if let Some(list) = &options.checks {
        let mut list = list.clone();
        list.dedup();
        return list;
    }
    let mut out = vec![CheckName::TwoPath, CheckName::Delay];
    let c = &config.checks;
    if c.roundtrip {
        out.push(CheckName::Roundtrip);
    }
    if c.nystrom.enabled {
        out.push(CheckName::Nystrom);
    }
    if c.forward.enabled {
        out.push(CheckName::Forward);
    }
    if c.identity {
        out.push(CheckName::Identity);
    }
    out
}

pub fn run(config: &ProblemConfig, options: &RunOptions, out: &Path) -> Result<Report, CliError> {
    let started = Instant::now();
    let mut policy = NumericalPolicy::default();
    let tols = config.tolerances.apply(&mut policy);
    if let Some(tol) = options.env_tolerance {
        policy.acceptance_tol = tol;
    }
    let w = config.weyl_data()?;
    let km = KernelModel::build(&w, &policy)?;
    let m = w.halfplane_bound()?;
    let c = w.growth_witness()?;
    let checks = selected(options, config);
    let nystrom_n = options.nystrom_n.unwrap_or(config.checks.nystrom.n);
    if nystrom_n < 16 {
        return Err(CliError::field(
            "--nystrom-n",
            format!("need at least 16 intervals, got {nystrom_n}"),
        ));
    }

    let xs = config.grid_points();
    let t = Instant::now();
    let with_quadrature = checks.contains(&CheckName::TwoPath);
    let grid = recover_profile(
        &km,
        &xs,
        ProfileOptions {
            quadrature: with_quadrature,
            reuse_segments: true,
        },
    )?;
    if let Some((_, e)) = grid.failures().next() {
        return Err(e.clone().into());
    }
    let recovery_seconds = t.elapsed().as_secs_f64();
    let values: Vec<&CMatrix> = grid
        .closed_values()
        .into_iter()
        .map(|v| v.expect("failures handled above"))
        .collect();
    if options.verbose {
        eprintln!(
            "recovered v at {} points in {recovery_seconds:.3}s",
            xs.len()
        );
    }

    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    write_file(
        &out.join("potential.csv"),
        &potential_csv(&xs, &values, config.p),
    )?;

    // J-unitarity of the fundamental solution on the grid, for information
    let l_eval = evaluation_point(&km, config.grid.l_max);
    let fs = FundamentalSolution::new(&km, l_eval)?;
    let mut j_defect = 0.0f64;
    for s in &grid.samples {
        j_defect = j_defect.max(fs.j_unitarity_defect(s.evaluated_at)?);
    }
    let shifted = grid
        .samples
        .iter()
        .filter(|s| s.evaluated_at != s.l)
        .count();

    let ctx = Context {
        config,
        w: &w,
        km: &km,
        grid: &grid,
        values: &values,
        tols,
        nystrom_n,
    };
    let mut reports = Vec::new();
    for name in checks {
        let t = Instant::now();
        let outcome = match name {
            CheckName::TwoPath => Some(two_path(&ctx)),
            CheckName::Delay => delay(&ctx),
            CheckName::Roundtrip => Some(roundtrip(&ctx)?),
            CheckName::Nystrom => Some(nystrom(&ctx)?),
            CheckName::Forward => Some(forward(&ctx, m)?),
            CheckName::Identity => Some(identity(&ctx)?),
        };
        let Some((status, value, tolerance, details)) = outcome else {
            if options.verbose {
                eprintln!("{}: not applicable", name.label());
            }
            continue;
        };
        reports.push(CheckReport {
            name: name.label(),
            status,
            value,
            tolerance,
            details,
            seconds: t.elapsed().as_secs_f64(),
        });
    }

    let all_pass = reports.iter().all(|r| r.status == Status::Pass);
    let report = Report {
        status: status(all_pass),
        n: config.n,
        p: config.p,
        delays: config.delays.clone(),
        seed: config.seed,
        grid: config.grid,
        halfplane_bound: m,
        growth_witness: c,
        policy: policy_json(&policy, &tols),
        recovery: json!({
            "points": xs.len(),
            "shifted_to_right_limit": shifted,
            "max_norm": values.iter().map(|v| v.norm_fro()).fold(0.0, f64::max),
        }),
        diagnostics: json!({
            "j_unitarity_max_defect": j_defect,
            "j_unitarity_tolerance": policy.j_unitary_tol,
        }),
        checks: reports,
        timings: json!({ "recovery_s": recovery_seconds, "total_s": started.elapsed().as_secs_f64() }),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&out.join("report.json"), &text)?;
    Ok(report)
}
