//! Argument definitions and subcommand implementations.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qst_core::haar::{
    estimate_first_moment, estimate_second_moment, estimate_twirl, sample_channel,
};
use qst_core::power::power_from_objective;
use qst_core::sweep::{bound_sweep, grid_max_f};
use qst_core::{
    canonical_decompose, canonical_gate, check_agreement, closed_form_power, extract_pauli_tensors,
    frame_from_angles, max_f_closed_form, mc_average, objective_g, optimize_power,
    power_of_unitary, sample_su2, tensor, unitary_channel, BlochVector, CanonicalParams, Mat2,
    McEstimate, Method, OptimizerConfig, PowerResult, RandomSource, RotationFrame,
};
use serde::Serialize;

use crate::error::CliError;
use crate::registry::{from_kraus_file, registry_lookup, InputEcho, ResolvedChannel};
use crate::report::{to_json, to_plain, to_table};

/// Stream used by Monte-Carlo checks; the optimizer uses `(seed, start)`.
const MC_STREAM: u64 = 1 << 32;
const SWEEP_STREAM: u64 = (1 << 32) + 1;
/// Haar moment checks pass within this many standard errors.
const HAAR_SIGMAS: f64 = 4.0;
const POWER_BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "qst",
    version,
    about = "Quantum-state-transfer power of two-qubit channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Named gate or channel followed by its parameters.
    #[arg(
        long,
        global = true,
        num_args = 1..,
        value_name = "NAME [PARAMS]",
        allow_negative_numbers = true
    )]
    pub gate: Option<Vec<String>>,
    /// Channel description file (JSON with `dim` and `kraus`).
    #[arg(long, global = true, value_name = "FILE")]
    pub kraus: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Optimizer starts.
    #[arg(long, global = true, default_value_t = 32)]
    pub starts: usize,
    /// Monte-Carlo samples.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Use the closed form (unitaries only).
    #[arg(long, global = true)]
    pub closed_form: bool,
    /// Add a Monte-Carlo cross-check of the power.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// JSON output (the default).
    #[arg(long, global = true, overrides_with = "plain")]
    pub json: bool,
    /// Human-readable output.
    #[arg(long, global = true, overrides_with = "json")]
    pub plain: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QST power of a channel.
    Power,
    /// Canonical parameters and local factors of a unitary.
    Canonical,
    /// Monte-Carlo transfer probability at a given frame and Bloch vector.
    Oracle {
        /// Frame angles; defaults to the computed maximizer.
        #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["THETA", "PHI", "OMEGA"])]
        frame: Option<Vec<f64>>,
        /// Unit Bloch vector of B's initial state; defaults to the maximizer.
        #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["X", "Y", "Z"])]
        bloch: Option<Vec<f64>>,
    },
    /// Haar moment and twirl statistics.
    HaarCheck,
    /// Parameter sweeps as a table.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepKind::Dz)]
        kind: SweepKind,
        /// Rows to compute; the default depends on the kind.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
        dx: f64,
        #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
        dy: f64,
        /// Local dressings per channel for `invariance`.
        #[arg(long, default_value_t = 5)]
        dressings: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Optimized power against d_z at fixed (d_x, d_y).
    Dz,
    /// Optimizer against closed form on random canonical triples.
    ClosedForm,
    /// Power of random channels.
    Range,
    /// Power before and after random local dressings.
    Invariance,
    /// Worst violations of the f bounds and grid maxima of f.
    Bounds,
}

impl SweepKind {
    fn default_points(self) -> usize {
        match self {
            SweepKind::Dz => 9,
            SweepKind::ClosedForm => 50,
            SweepKind::Range => 100,
            SweepKind::Invariance => 20,
            SweepKind::Bounds => 20,
        }
    }
}

/// Rendered report plus an optional failure that turns the exit code to 1.
pub struct Outcome {
    pub text: String,
    pub failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct FrameAngles {
    pub theta: f64,
    pub phi: f64,
    pub omega: f64,
}

#[derive(Debug, Serialize)]
pub struct Maximizer {
    pub t: [f64; 3],
    pub frame_angles: FrameAngles,
    /// Row `l` holds the components of the rotated `σ_l`.
    pub frame_matrix: [[f64; 3]; 3],
}

impl Maximizer {
    fn new(frame: &RotationFrame, t: &BlochVector) -> Self {
        let m = frame.matrix;
        Self {
            t: t.components(),
            frame_angles: FrameAngles {
                theta: frame.theta,
                phi: frame.phi,
                omega: frame.omega,
            },
            frame_matrix: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)])),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OptimizerStats {
    pub starts: usize,
    pub starts_converged_to_best: usize,
    pub iterations: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Serialize)]
pub struct McCheck {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    /// Distance from the analytic value in standard errors.
    pub sigmas: f64,
    pub agrees: bool,
}

impl McCheck {
    fn new(analytic: f64, est: &McEstimate) -> Self {
        Self {
            mean: est.mean,
            std_error: est.std_error,
            n_samples: est.n_samples,
            sigmas: sigmas(est.mean - analytic, est.std_error),
            agrees: check_agreement(analytic, est).is_ok(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PowerReport {
    pub input: InputEcho,
    pub seed: u64,
    pub method: Method,
    pub power: f64,
    pub maximizer: Maximizer,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_check: Option<McCheck>,
    pub timing_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ComplexMatrix(pub Vec<Vec<[f64; 2]>>);

impl ComplexMatrix {
    fn from_mat2(m: &Mat2) -> Self {
        Self(
            (0..2)
                .map(|r| (0..2).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Serialize)]
pub struct LocalFactorsReport {
    pub u_a: ComplexMatrix,
    pub u_b: ComplexMatrix,
    pub v_a: ComplexMatrix,
    pub v_b: ComplexMatrix,
    pub global_phase: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct CanonicalReport {
    pub input: InputEcho,
    pub canonical: [f64; 3],
    pub closed_form_power: f64,
    pub reconstruction_residual: f64,
    pub local_factors: LocalFactorsReport,
    pub timing_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub input: InputEcho,
    pub seed: u64,
    pub point: Maximizer,
    /// `1/2 + g/24` at the same point.
    pub analytic: f64,
    pub mc: McCheck,
    pub timing_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub std_error: f64,
    pub sigmas: f64,
    pub status: &'static str,
}

#[derive(Debug, Serialize)]
pub struct HaarReport {
    pub seed: u64,
    pub n_samples: u64,
    pub threshold_sigmas: f64,
    pub checks: Vec<CheckRow>,
    pub all_pass: bool,
    pub timing_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct SummaryItem {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub seed: u64,
    pub summary: Vec<SummaryItem>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub timing_seconds: f64,
}

fn sigmas(dev: f64, se: f64) -> f64 {
    if se > 0.0 {
        dev.abs() / se
    } else if dev.abs() <= 1e-15 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn optimizer_config(opts: &GlobalOpts) -> OptimizerConfig {
    OptimizerConfig {
        n_starts: opts.starts,
        seed: opts.seed,
        ..OptimizerConfig::default()
    }
}

fn resolve(opts: &GlobalOpts) -> Result<ResolvedChannel, CliError> {
    match (&opts.gate, &opts.kraus) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--gate and --kraus are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "this command needs --gate NAME [PARAMS] or --kraus FILE".into(),
        )),
        (Some(g), None) => registry_lookup(&g[0], &g[1..]),
        (None, Some(path)) => from_kraus_file(path),
    }
}

fn require_unitary(resolved: &ResolvedChannel, what: &str) -> Result<qst_core::Mat4, CliError> {
    resolved.unitary.ok_or_else(|| {
        CliError::Usage(format!("{what} requires a unitary (single Kraus operator)"))
    })
}

fn render<T: Serialize>(report: &T, plain: bool) -> String {
    if plain {
        to_plain(report)
    } else {
        to_json(report)
    }
}

/// Power by closed form or optimizer.
fn compute_power(
    resolved: &ResolvedChannel,
    opts: &GlobalOpts,
) -> Result<(PowerResult, Option<CanonicalParams>), CliError> {
    if opts.closed_form {
        let u = require_unitary(resolved, "--closed-form")?;
        let (result, d, _) = power_of_unitary(&u)?;
        return Ok((result, Some(d)));
    }
    let result = optimize_power(&resolved.channel, &optimizer_config(opts))?;
    let d = match resolved.unitary {
        Some(u) => Some(canonical_decompose(&u)?.0),
        None => None,
    };
    Ok((result, d))
}

pub fn power(opts: &GlobalOpts, elapsed: impl Fn() -> f64) -> Result<Outcome, CliError> {
    let resolved = resolve(opts)?;
    let (result, d) = compute_power(&resolved, opts)?;
    let mut failure = None;
    let mc_check = if opts.oracle {
        let mut rng = RandomSource::new(opts.seed, MC_STREAM);
        let s = result.best_frame.to_su2();
        let est = mc_average(
            &resolved.channel,
            &s,
            &result.best_t,
            opts.samples,
            &mut rng,
        )?;
        if let Err(e) = check_agreement(result.power, &est) {
            failure = Some(e.to_string());
        }
        Some(McCheck::new(result.power, &est))
    } else {
        None
    };
    if !(0.5 - POWER_BOUND_TOL..=1.0 + POWER_BOUND_TOL).contains(&result.power) {
        failure = Some(format!("power {} outside [1/2, 1]", result.power));
    }
    let optimizer = (result.method == Method::AnalyticOptimizer).then(|| OptimizerStats {
        starts: opts.starts,
        starts_converged_to_best: result.starts_converged_to_best,
        iterations: result.iterations,
        low_confidence: result.low_confidence(),
    });
    let report = PowerReport {
        input: resolved.echo,
        seed: opts.seed,
        method: result.method,
        power: result.power,
        maximizer: Maximizer::new(&result.best_frame, &result.best_t),
        optimizer,
        canonical: d.map(|d| d.as_array()),
        mc_check,
        timing_seconds: elapsed(),
    };
    Ok(Outcome {
        text: render(&report, opts.plain),
        failure,
    })
}

pub fn canonical(opts: &GlobalOpts, elapsed: impl Fn() -> f64) -> Result<Outcome, CliError> {
    let resolved = resolve(opts)?;
    let u = require_unitary(&resolved, "canonical")?;
    let (d, f) = canonical_decompose(&u)?;
    let residual = qst_core::quantum::max_abs(&(f.reconstruct(&d) - u));
    let report = CanonicalReport {
        input: resolved.echo,
        canonical: d.as_array(),
        closed_form_power: closed_form_power(&d)?,
        reconstruction_residual: residual,
        local_factors: LocalFactorsReport {
            u_a: ComplexMatrix::from_mat2(&f.u_a),
            u_b: ComplexMatrix::from_mat2(&f.u_b),
            v_a: ComplexMatrix::from_mat2(&f.v_a),
            v_b: ComplexMatrix::from_mat2(&f.v_b),
            global_phase: [f.global_phase.re, f.global_phase.im],
        },
        timing_seconds: elapsed(),
    };
    Ok(Outcome {
        text: render(&report, opts.plain),
        failure: None,
    })
}

pub fn oracle(
    opts: &GlobalOpts,
    frame: Option<&[f64]>,
    bloch: Option<&[f64]>,
    elapsed: impl Fn() -> f64,
) -> Result<Outcome, CliError> {
    let resolved = resolve(opts)?;
    let (frame, t) = match (frame, bloch) {
        (Some(f), Some(b)) => (
            frame_from_angles(f[0], f[1], f[2]),
            BlochVector::unit(b[0], b[1], b[2])?,
        ),
        (f, b) => {
            let (best, _) = compute_power(&resolved, opts)?;
            let frame = f.map_or(best.best_frame, |f| frame_from_angles(f[0], f[1], f[2]));
            let t = match b {
                Some(b) => BlochVector::unit(b[0], b[1], b[2])?,
                None => best.best_t,
            };
            (frame, t)
        }
    };
    let tensors = extract_pauli_tensors(&resolved.channel)?;
    let analytic = power_from_objective(objective_g(&tensors, &frame, &t));
    let mut rng = RandomSource::new(opts.seed, MC_STREAM);
    let est = mc_average(
        &resolved.channel,
        &frame.to_su2(),
        &t,
        opts.samples,
        &mut rng,
    )?;
    let failure = check_agreement(analytic, &est).err().map(|e| e.to_string());
    let report = OracleReport {
        input: resolved.echo,
        seed: opts.seed,
        point: Maximizer::new(&frame, &t),
        analytic,
        mc: McCheck::new(analytic, &est),
        timing_seconds: elapsed(),
    };
    Ok(Outcome {
        text: render(&report, opts.plain),
        failure,
    })
}

fn check_row(name: String, value: f64, target: f64, se: f64) -> CheckRow {
    let s = sigmas(value - target, se);
    CheckRow {
        name,
        value,
        target,
        std_error: se,
        sigmas: s,
        status: if s <= HAAR_SIGMAS { "PASS" } else { "FAIL" },
    }
}

pub fn haar_check(opts: &GlobalOpts, elapsed: impl Fn() -> f64) -> Result<Outcome, CliError> {
    if opts.samples < 2 {
        return Err(CliError::Usage("haar-check needs --samples >= 2".into()));
    }
    let axes = ["x", "y", "z"];
    let mut rng = RandomSource::new(opts.seed, MC_STREAM);
    let first = estimate_first_moment(&mut rng, opts.samples);
    let second = estimate_second_moment(&mut rng, opts.samples);
    let twirl = estimate_twirl(&mut rng, opts.samples);

    let mut checks = Vec::new();
    for (m, axis) in axes.iter().enumerate() {
        checks.push(check_row(
            format!("<Rz_{axis}>"),
            first.mean[m],
            0.0,
            first.std_error[m],
        ));
    }
    for m in 0..3 {
        for n in 0..3 {
            checks.push(check_row(
                format!("<Rz_{} Rz_{}>", axes[m], axes[n]),
                second.mean[(m, n)],
                if m == n { 1.0 / 3.0 } else { 0.0 },
                second.std_error[(m, n)],
            ));
        }
    }
    for r in 0..2 {
        for c in 0..2 {
            let target = if r == c { 0.5 } else { 0.0 };
            let z = twirl.mean[(r, c)];
            checks.push(check_row(
                format!("Re twirl[{r}{c}]"),
                z.re,
                target,
                twirl.std_error_re[(r, c)],
            ));
            checks.push(check_row(
                format!("Im twirl[{r}{c}]"),
                z.im,
                0.0,
                twirl.std_error_im[(r, c)],
            ));
        }
    }
    let all_pass = checks.iter().all(|c| c.status == "PASS");
    let report = HaarReport {
        seed: opts.seed,
        n_samples: opts.samples as u64,
        threshold_sigmas: HAAR_SIGMAS,
        checks,
        all_pass,
        timing_seconds: elapsed(),
    };
    let text = if opts.plain {
        haar_table(&report)
    } else {
        to_json(&report)
    };
    Ok(Outcome {
        text,
        failure: (!all_pass).then(|| "Haar moment check failed".to_string()),
    })
}

fn haar_table(report: &HaarReport) -> String {
    let mut out = format!(
        "{:<18} {:>14} {:>10} {:>12} {:>8}  status\n",
        "check", "value", "target", "std_error", "sigmas"
    );
    for c in &report.checks {
        out.push_str(&format!(
            "{:<18} {:>14.8} {:>10.6} {:>12.3e} {:>8.3}  {}\n",
            c.name, c.value, c.target, c.std_error, c.sigmas, c.status
        ));
    }
    out.push_str(&format!(
        "samples {}  seed {}  {}\n",
        report.n_samples,
        report.seed,
        if report.all_pass {
            "ALL PASS"
        } else {
            "FAILED"
        }
    ));
    out
}

fn random_local(rng: &mut RandomSource) -> qst_core::Mat4 {
    tensor(&sample_su2(rng), &sample_su2(rng))
}

pub fn sweep(
    opts: &GlobalOpts,
    kind: SweepKind,
    points: Option<usize>,
    dx: f64,
    dy: f64,
    dressings: usize,
    elapsed: impl Fn() -> f64,
) -> Result<Outcome, CliError> {
    let n = points.unwrap_or_else(|| kind.default_points());
    if n == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    let cfg = optimizer_config(opts);
    let mut rng = RandomSource::new(opts.seed, SWEEP_STREAM);
    let mut rows = Vec::with_capacity(n);
    let mut summary = Vec::new();
    let columns: &[&str] = match kind {
        SweepKind::Dz => {
            for i in 0..n {
                let dz = if n == 1 {
                    0.0
                } else {
                    -dy + 2.0 * dy * i as f64 / (n - 1) as f64
                };
                let d = CanonicalParams::new(dx, dy, dz);
                d.check_ordering()?;
                let ch = unitary_channel(&canonical_gate(&d))?;
                let p = optimize_power(&ch, &cfg)?.power;
                rows.push(vec![dz, p, closed_form_power(&d)?]);
            }
            let (lo, hi) = min_max(rows.iter().map(|r| r[1]));
            summary.push(SummaryItem {
                name: "spread",
                value: hi - lo,
            });
            summary.push(SummaryItem {
                name: "max_abs_diff",
                value: max_of(rows.iter().map(|r| (r[1] - r[2]).abs())),
            });
            &["dz", "optimizer_power", "closed_form_power"]
        }
        SweepKind::ClosedForm => {
            for _ in 0..n {
                let d = CanonicalParams::sample(&mut rng);
                let ch = unitary_channel(&canonical_gate(&d))?;
                let p = optimize_power(&ch, &cfg)?.power;
                let c = closed_form_power(&d)?;
                rows.push(vec![d.dx, d.dy, d.dz, p, c, (p - c).abs()]);
            }
            summary.push(SummaryItem {
                name: "max_abs_diff",
                value: max_of(rows.iter().map(|r| r[5])),
            });
            &[
                "dx",
                "dy",
                "dz",
                "optimizer_power",
                "closed_form_power",
                "abs_diff",
            ]
        }
        SweepKind::Range => {
            for i in 0..n {
                let k = 1 + i % 4;
                let ch = sample_channel(&mut rng, k);
                rows.push(vec![i as f64, k as f64, optimize_power(&ch, &cfg)?.power]);
            }
            let (lo, hi) = min_max(rows.iter().map(|r| r[2]));
            summary.push(SummaryItem {
                name: "min",
                value: lo,
            });
            summary.push(SummaryItem {
                name: "max",
                value: hi,
            });
            &["channel", "n_kraus", "power"]
        }
        SweepKind::Invariance => {
            for i in 0..n {
                let ch = sample_channel(&mut rng, 1 + i % 4);
                let base = optimize_power(&ch, &cfg)?.power;
                for j in 0..dressings {
                    let dressed = ch.dressed(&random_local(&mut rng), &random_local(&mut rng))?;
                    let p = optimize_power(&dressed, &cfg)?.power;
                    rows.push(vec![i as f64, j as f64, base, p, (p - base).abs()]);
                }
            }
            summary.push(SummaryItem {
                name: "max_abs_diff",
                value: max_of(rows.iter().map(|r| r[4])),
            });
            &["channel", "dressing", "power", "dressed_power", "abs_diff"]
        }
        SweepKind::Bounds => {
            let sw = bound_sweep(&mut rng, opts.samples);
            for _ in 0..n {
                let d = CanonicalParams::sample(&mut rng);
                let closed = max_f_closed_form(&d)?;
                let grid = grid_max_f(&d, 8, 8);
                rows.push(vec![d.dx, d.dy, d.dz, closed, grid, (grid - closed).abs()]);
            }
            summary.extend([
                SummaryItem {
                    name: "samples",
                    value: sw.samples as f64,
                },
                SummaryItem {
                    name: "f2_minus_a_plus_b",
                    value: sw.f2_vs_a_plus_b,
                },
                SummaryItem {
                    name: "f2_minus_scaled_bound",
                    value: sw.f2_vs_scaled,
                },
                SummaryItem {
                    name: "scaled_samples",
                    value: sw.scaled_samples as f64,
                },
                SummaryItem {
                    name: "f1_minus_bound",
                    value: sw.f1_vs_bound,
                },
                SummaryItem {
                    name: "grid_max_abs_diff",
                    value: max_of(rows.iter().map(|r| r[5])),
                },
            ]);
            &[
                "dx",
                "dy",
                "dz",
                "closed_form_max_f",
                "grid_max_f",
                "abs_diff",
            ]
        }
    };
    let report = SweepReport {
        kind,
        seed: opts.seed,
        summary,
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
        timing_seconds: elapsed(),
    };
    let text = if opts.plain {
        let mut out: String = report
            .summary
            .iter()
            .map(|s| format!("# {} {:.16e}\n", s.name, s.value))
            .collect();
        out.push_str(&to_table(&report.columns, &report.rows));
        out
    } else {
        to_json(&report)
    };
    Ok(Outcome {
        text,
        failure: None,
    })
}

fn min_max(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}
