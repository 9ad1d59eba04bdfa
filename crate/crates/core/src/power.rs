//! QST power of an arbitrary two-qubit channel.
//!
//! The power is `1/2 + max_{S,T} g(S, T) / 24` with
//!
//! ```text
//! g(S, T) = Σ_{l,n} E0[l][n] S_l^n + Σ_{l,m,n} E1[l][m][n] T^m S_l^n
//! ```
//!
//! where `S` ranges over SO(3) frames (rows `S_l`) and `T` over the unit
//! sphere. `g` is linear in each argument separately, so both subproblems
//! have exact solutions: a normalized vector for `T` and a determinant
//! corrected SVD (orthogonal Procrustes) for `S`. The optimizer alternates
//! between them from many random starts.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{frame_of_unchecked, sample_su2, RandomSource};
use crate::oracle::McEstimate;
use crate::quantum::{
    pauli, tensor, BipartiteChannel, BlochVector, Mat2, PauliIndex, C64, PAULI_AXES,
};

const IMAG_TOL: f64 = 1e-8;
const ZERO_VECTOR_TOL: f64 = 1e-14;
const DEGENERACY_TOL: f64 = 1e-10;
/// Two starts count as reaching the same optimum when their objectives
/// differ by less than this.
pub const CONVERGED_TOL: f64 = 1e-8;

/// Channel coefficients `E0[l][n]` and `E1[l][m][n]`.
///
/// `l` indexes the Pauli inserted on A, `m` the Pauli inserted on B and `n`
/// the Pauli measured on B after the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTensors {
    /// `e0[(l, n)]`.
    pub e0: Matrix3<f64>,
    /// `e1[l][(m, n)]`.
    pub e1: [Matrix3<f64>; 3],
}

impl PauliTensors {
    pub fn zero() -> Self {
        Self {
            e0: Matrix3::zeros(),
            e1: [Matrix3::zeros(); 3],
        }
    }

    pub fn e1(&self, l: usize, m: usize, n: usize) -> f64 {
        self.e1[l][(m, n)]
    }

    /// `A[(l, n)] = E0[l][n] + Σ_m E1[l][m][n] T^m`: the linear functional
    /// in `S` for fixed `T`.
    pub fn frame_coefficients(&self, t: &BlochVector) -> Matrix3<f64> {
        let tv = t.components();
        Matrix3::from_fn(|l, n| {
            self.e0[(l, n)] + (0..3).map(|m| self.e1[l][(m, n)] * tv[m]).sum::<f64>()
        })
    }

    /// `(c, v)` with `g = c + v.T` for a fixed frame.
    pub fn bloch_coefficients(&self, s: &RotationFrame) -> (f64, Vector3<f64>) {
        let sm = &s.matrix;
        let c = self.e0.component_mul(sm).sum();
        let v = Vector3::from_fn(|m, _| {
            (0..3)
                .map(|l| (0..3).map(|n| self.e1[l][(m, n)] * sm[(l, n)]).sum::<f64>())
                .sum()
        });
        (c, v)
    }

    pub fn is_zero(&self) -> bool {
        self.e0.iter().all(|x| *x == 0.0) && self.e1.iter().all(|m| m.iter().all(|x| *x == 0.0))
    }
}

/// Computes the Pauli tensors of `ch`; fails if any trace has an imaginary
/// part above 1e-8.
pub fn extract_pauli_tensors(ch: &BipartiteChannel) -> Result<PauliTensors> {
    let sig = PAULI_AXES.map(pauli);
    let id = pauli(PauliIndex::I);
    let measure = sig.map(|s| tensor(&id, &s));
    let names = ["x", "y", "z"];
    let real = |z: C64, label: &dyn Fn() -> String| -> Result<f64> {
        if z.im.abs() > IMAG_TOL {
            return Err(Error::NonRealCoefficient {
                label: label(),
                imag: z.im,
            });
        }
        Ok(z.re)
    };

    let mut out = PauliTensors::zero();
    for l in 0..3 {
        let image = ch.apply(&tensor(&sig[l], &id));
        for n in 0..3 {
            out.e0[(l, n)] = real((image * measure[n]).trace(), &|| {
                format!("E0[{}][{}]", names[l], names[n])
            })?;
        }
        for m in 0..3 {
            let image = ch.apply(&tensor(&sig[l], &sig[m]));
            for n in 0..3 {
                out.e1[l][(m, n)] = real((image * measure[n]).trace(), &|| {
                    format!("E1[{}][{}][{}]", names[l], names[m], names[n])
                })?;
            }
        }
    }
    Ok(out)
}

/// An identification frame: the SO(3) image of `S = exp(-i ω n.σ / 2)` with
/// axis `n = (sinθ cosφ, sinθ sinφ, cosθ)`. Row `l` of `matrix` is `S_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationFrame {
    pub theta: f64,
    pub phi: f64,
    pub omega: f64,
    pub matrix: Matrix3<f64>,
}

impl RotationFrame {
    pub fn identity() -> Self {
        frame_from_angles(0.0, 0.0, 0.0)
    }

    /// Axis-angle chart of a rotation matrix in frame (row) convention.
    ///
    /// Angles come from the quaternion of the matrix, which stays accurate
    /// near `ω = π`; the stored matrix is rebuilt from the angles.
    pub fn from_matrix(frame: &Matrix3<f64>) -> Self {
        // The frame matrix is the transpose of the usual active rotation.
        let m = frame.transpose();
        let tr = m.trace();
        let (w, x, y, z);
        if tr >= m[(0, 0)] && tr >= m[(1, 1)] && tr >= m[(2, 2)] {
            let s = 2.0 * (1.0 + tr).max(0.0).sqrt();
            w = 0.25 * s;
            x = (m[(2, 1)] - m[(1, 2)]) / s;
            y = (m[(0, 2)] - m[(2, 0)]) / s;
            z = (m[(1, 0)] - m[(0, 1)]) / s;
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).max(0.0).sqrt();
            w = (m[(2, 1)] - m[(1, 2)]) / s;
            x = 0.25 * s;
            y = (m[(0, 1)] + m[(1, 0)]) / s;
            z = (m[(0, 2)] + m[(2, 0)]) / s;
        } else if m[(1, 1)] >= m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).max(0.0).sqrt();
            w = (m[(0, 2)] - m[(2, 0)]) / s;
            x = (m[(0, 1)] + m[(1, 0)]) / s;
            y = 0.25 * s;
            z = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = 2.0 * (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).max(0.0).sqrt();
            w = (m[(1, 0)] - m[(0, 1)]) / s;
            x = (m[(0, 2)] + m[(2, 0)]) / s;
            y = (m[(1, 2)] + m[(2, 1)]) / s;
            z = 0.25 * s;
        }
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        let (w, v) = (sign * w, Vector3::new(sign * x, sign * y, sign * z));
        let vn = v.norm();
        if vn < 1e-300 {
            return Self::identity();
        }
        let omega = 2.0 * vn.atan2(w);
        let axis = v / vn;
        let theta = axis.z.clamp(-1.0, 1.0).acos();
        let phi = axis.y.atan2(axis.x).rem_euclid(2.0 * std::f64::consts::PI);
        frame_from_angles(theta, phi, omega)
    }

    pub fn axis(&self) -> Vector3<f64> {
        Vector3::new(
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        )
    }

    /// The SU(2) element `exp(-i ω n.σ / 2)` whose frame this is.
    pub fn to_su2(&self) -> Mat2 {
        let n = self.axis();
        let (s, c) = (self.omega / 2.0).sin_cos();
        let gen = pauli(PauliIndex::X).scale(n.x)
            + pauli(PauliIndex::Y).scale(n.y)
            + pauli(PauliIndex::Z).scale(n.z);
        pauli(PauliIndex::I).scale(c) - gen * C64::new(0.0, s)
    }
}

/// Builds the frame matrix entrywise from the axis-angle chart.
pub fn frame_from_angles(theta: f64, phi: f64, omega: f64) -> RotationFrame {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let (so, co) = omega.sin_cos();
    let (ct2, st2) = (ct * ct, st * st);
    let (cp2, sp2) = (cp * cp, sp * sp);

    let xx = (sp2 + ct2 * cp2) * co + cp2 * st2;
    let xy = cp * sp + ct * so - cp * ct2 * sp - co * cp * sp + co * cp * ct2 * sp;
    let xz = st * (cp * ct * (1.0 - co) - so * sp);
    let yx = cp * sp - ct * so - cp * ct2 * sp - co * cp * sp + co * cp * ct2 * sp;
    let yy = (cp2 + ct2 * sp2) * co + st2 * sp2;
    let yz = st * (cp * so + (1.0 - co) * ct * sp);
    let zx = st * (so * sp + (1.0 - co) * cp * ct);
    let zy = st * ((1.0 - co) * ct * sp - cp * so);
    let zz = ct2 + co * st2;

    RotationFrame {
        theta,
        phi,
        omega,
        matrix: Matrix3::new(xx, xy, xz, yx, yy, yz, zx, zy, zz),
    }
}

/// `(sinα cosβ, sinα sinβ, cosα)`.
pub fn bloch_from_angles(alpha: f64, beta: f64) -> BlochVector {
    BlochVector::new(
        alpha.sin() * beta.cos(),
        alpha.sin() * beta.sin(),
        alpha.cos(),
    )
}

/// Polar angles `(α, β)` of a Bloch vector, `α ∈ [0, π]`, `β ∈ [0, 2π)`.
pub fn bloch_angles(t: &BlochVector) -> (f64, f64) {
    let n = t.norm().max(f64::MIN_POSITIVE);
    let alpha = (t.z / n).clamp(-1.0, 1.0).acos();
    let beta = t.y.atan2(t.x).rem_euclid(2.0 * std::f64::consts::PI);
    (alpha, beta)
}

/// The unnormalized objective `g(S, T)`.
pub fn objective_g(t: &PauliTensors, s: &RotationFrame, bloch: &BlochVector) -> f64 {
    t.frame_coefficients(bloch).component_mul(&s.matrix).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSolution {
    pub frame: RotationFrame,
    pub value: f64,
    /// Set when the maximizer is not unique (σ2 ≈ σ3 with det A < 0).
    pub degenerate: bool,
}

/// Maximizes `Σ_{l,n} S_l^n A_ln` over SO(3).
///
/// With `A = U Σ V^T` the optimum is `σ1 + σ2 + sign(det A) σ3`, reached at
/// `S = U diag(1, 1, ±1) V^T` where the sign flip lands on the smallest
/// singular value.
pub fn maximize_linear_over_rotations(a: &Matrix3<f64>) -> FrameSolution {
    let svd = a.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let sv = svd.singular_values;
    if sv.max() < ZERO_VECTOR_TOL {
        return FrameSolution {
            frame: RotationFrame::identity(),
            value: 0.0,
            degenerate: false,
        };
    }
    let det_sign = (u * vt).determinant().signum();
    let smallest = sv.imin();
    let mut d = Vector3::new(1.0, 1.0, 1.0);
    d[smallest] = det_sign;
    let s = u * Matrix3::from_diagonal(&d) * vt;

    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|x, y| y.total_cmp(x));
    let degenerate = det_sign < 0.0 && (sorted[1] - sorted[2]).abs() <= DEGENERACY_TOL;

    let frame = RotationFrame::from_matrix(&s);
    FrameSolution {
        value: a.component_mul(&frame.matrix).sum(),
        frame,
        degenerate,
    }
}

/// Best frame for a fixed receiver state.
pub fn best_frame_given_t(t: &PauliTensors, bloch: &BlochVector) -> FrameSolution {
    maximize_linear_over_rotations(&t.frame_coefficients(bloch))
}

/// Best receiver state for a fixed frame; `(0, 0, 1)` when `g` does not
/// depend on `T`.
pub fn best_t_given_frame(t: &PauliTensors, s: &RotationFrame) -> (BlochVector, f64) {
    let (c, v) = t.bloch_coefficients(s);
    let norm = v.norm();
    if norm > ZERO_VECTOR_TOL {
        (BlochVector::from_vector(&(v / norm)), c + norm)
    } else {
        (BlochVector::new(0.0, 0.0, 1.0), c)
    }
}

/// One alternating run from a given starting frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternationRun {
    pub value: f64,
    pub frame: RotationFrame,
    pub bloch: BlochVector,
    pub iterations: usize,
    /// Objective after each half-step, starting with the initial T update.
    pub history: Vec<f64>,
}

pub fn alternate_from(
    t: &PauliTensors,
    start: RotationFrame,
    max_iters: usize,
    tol: f64,
) -> AlternationRun {
    let (mut bloch, mut value) = best_t_given_frame(t, &start);
    let mut frame = start;
    let mut history = vec![value];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let fs = best_frame_given_t(t, &bloch);
        let (next_bloch, next_value) = best_t_given_frame(t, &fs.frame);
        history.push(fs.value);
        history.push(next_value);
        let gain = next_value - value;
        // Guard against a rounding-level loss from the angle round trip.
        if next_value >= value {
            frame = fs.frame;
            bloch = next_bloch;
            value = next_value;
        }
        if gain < tol {
            break;
        }
    }
    AlternationRun {
        value,
        frame,
        bloch,
        iterations,
        history,
    }
}

/// Rotation matrix `exp([w]_x)`.
fn rodrigues(w: &Vector3<f64>) -> Matrix3<f64> {
    nalgebra::Rotation3::new(*w).into_inner()
}

/// Damped Newton refinement of a converged alternation.
///
/// Alternation slows to a crawl when singular values of the frame
/// subproblem are nearly degenerate; the joint objective is smooth in local
/// exponential coordinates `S = S0 exp([a]), T = exp([b]) T0`, so a few
/// Levenberg-damped Newton steps on finite-difference derivatives close the
/// remaining gap. Steps are accepted only if they increase `g`.
fn polish(t: &PauliTensors, run: AlternationRun) -> AlternationRun {
    const H: f64 = 1e-4;
    let s0 = run.frame.matrix;
    let t0 = run.bloch.to_vector();
    let eval = |s: &Matrix3<f64>, tv: &Vector3<f64>, x: &nalgebra::Vector6<f64>| {
        let a = Vector3::new(x[0], x[1], x[2]);
        let b = Vector3::new(x[3], x[4], x[5]);
        let sm = s * rodrigues(&a);
        let bl = BlochVector::from_vector(&(rodrigues(&b) * tv));
        t.frame_coefficients(&bl).component_mul(&sm).sum()
    };

    let (mut s, mut tv, mut value) = (s0, t0, run.value);
    let mut history = run.history;
    let mut extra = 0;
    for _ in 0..30 {
        let zero = nalgebra::Vector6::zeros();
        let f0 = eval(&s, &tv, &zero);
        let e = |i: usize| {
            let mut v = nalgebra::Vector6::zeros();
            v[i] = H;
            v
        };
        let grad = nalgebra::Vector6::from_fn(|i, _| {
            (eval(&s, &tv, &e(i)) - eval(&s, &tv, &(-e(i)))) / (2.0 * H)
        });
        let mut hess = nalgebra::Matrix6::zeros();
        for i in 0..6 {
            hess[(i, i)] = (eval(&s, &tv, &e(i)) - 2.0 * f0 + eval(&s, &tv, &(-e(i)))) / (H * H);
            for j in 0..i {
                let v = (eval(&s, &tv, &(e(i) + e(j)))
                    - eval(&s, &tv, &(e(i) - e(j)))
                    - eval(&s, &tv, &(e(j) - e(i)))
                    + eval(&s, &tv, &(-e(i) - e(j))))
                    / (4.0 * H * H);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let scale = hess.abs().max().max(1e-12);
        let mut mu = 1e-8 * scale;
        let mut accepted = false;
        while mu < 1e3 * scale {
            let lhs = -hess + nalgebra::Matrix6::identity() * mu;
            if let Some(step) = lhs.cholesky().map(|c| c.solve(&grad)) {
                let candidate = eval(&s, &tv, &step);
                if candidate > value {
                    s *= rodrigues(&Vector3::new(step[0], step[1], step[2]));
                    tv = rodrigues(&Vector3::new(step[3], step[4], step[5])) * tv;
                    tv /= tv.norm();
                    let gain = candidate - value;
                    value = candidate;
                    history.push(value);
                    extra += 1;
                    accepted = gain > 1e-15;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    if extra == 0 {
        return AlternationRun { history, ..run };
    }
    // Re-project onto SO(3) and the chart; keep the run if rounding costs
    // anything.
    let frame = RotationFrame::from_matrix(&nearest_rotation(&s));
    let bloch = BlochVector::from_vector(&tv);
    let final_value = objective_g(t, &frame, &bloch);
    if final_value < run.value {
        return AlternationRun { history, ..run };
    }
    history.push(final_value);
    AlternationRun {
        value: final_value,
        frame,
        bloch,
        iterations: run.iterations + extra,
        history,
    }
}

/// Closest rotation to `m` (polar factor).
fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    u * vt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    pub tol_objective: f64,
    /// Start `k` draws from the sub-stream `(seed, k)`.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_starts: 32,
            max_iters: 200,
            tol_objective: 1e-10,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig(
                "n_starts and max_iters must be positive".into(),
            ));
        }
        if self.tol_objective.is_nan() || self.tol_objective <= 0.0 {
            return Err(Error::InvalidConfig(
                "tol_objective must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    AnalyticOptimizer,
    ClosedForm,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::AnalyticOptimizer => "analytic-optimizer",
            Method::ClosedForm => "closed-form",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub power: f64,
    pub best_t: BlochVector,
    pub best_frame: RotationFrame,
    pub method: Method,
    pub iterations: usize,
    pub starts_converged_to_best: usize,
    /// Monte-Carlo estimate at the maximizer, when one was run.
    pub mc_check: Option<McEstimate>,
}

impl PowerResult {
    /// Fewer than two starts agreed on the best objective.
    pub fn low_confidence(&self) -> bool {
        self.method == Method::AnalyticOptimizer && self.starts_converged_to_best < 2
    }
}

/// `1/2 + g/24`.
pub fn power_from_objective(g: f64) -> f64 {
    0.5 + g / 24.0
}

fn random_start(rng: &mut RandomSource) -> RotationFrame {
    RotationFrame::from_matrix(&frame_of_unchecked(&sample_su2(rng)).0)
}

/// Multi-start alternating maximization of `g` for fixed tensors.
pub fn optimize_tensors(t: &PauliTensors, cfg: &OptimizerConfig) -> Result<PowerResult> {
    cfg.validate()?;
    let runs: Vec<AlternationRun> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomSource::new(cfg.seed, k as u64);
            let run = alternate_from(t, random_start(&mut rng), cfg.max_iters, cfg.tol_objective);
            polish(t, run)
        })
        .collect();
    // Strict comparison keeps the lowest start index on ties.
    let best = runs
        .iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("n_starts >= 1");
    let converged = runs
        .iter()
        .filter(|r| (best.value - r.value).abs() <= CONVERGED_TOL)
        .count();
    Ok(PowerResult {
        power: power_from_objective(best.value),
        best_t: best.bloch,
        best_frame: best.frame,
        method: Method::AnalyticOptimizer,
        iterations: best.iterations,
        starts_converged_to_best: converged,
        mc_check: None,
    })
}

/// QST power of `ch` by the analytic objective.
pub fn optimize_power(ch: &BipartiteChannel, cfg: &OptimizerConfig) -> Result<PowerResult> {
    optimize_tensors(&extract_pauli_tensors(ch)?, cfg)
}
