//! Canonical (Cartan) form of two-qubit unitaries,
//! `U = phase · (U_A ⊗ U_B) · U_d · (V_A ⊗ V_B)` with
//! `U_d = exp(-(i/2) Σ_m d_m σ_m ⊗ σ_m)` and `|d_z| <= d_y <= d_x <= π/2`,
//! and the closed-form QST power of unitaries.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{frame_of_unchecked, RandomSource};
use crate::power::{
    bloch_angles, bloch_from_angles, frame_from_angles, Method, PowerResult, RotationFrame,
};
use crate::quantum::{
    check_unitary4, max_abs, pauli, tensor, BlochVector, Mat2, Mat4, PauliIndex, C64, PAULI_AXES,
};

const ORDER_TOL: f64 = 1e-12;
/// Max reconstruction residual accepted from [`canonical_decompose`].
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
const DIAGONAL_TOL: f64 = 1e-9;
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl CanonicalParams {
    pub const fn new(dx: f64, dy: f64, dz: f64) -> Self {
        Self { dx, dy, dz }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn is_ordered(&self) -> bool {
        self.dz.abs() <= self.dy + ORDER_TOL
            && self.dy <= self.dx + ORDER_TOL
            && self.dx <= FRAC_PI_2 + ORDER_TOL
    }

    pub fn check_ordering(&self) -> Result<()> {
        if self.is_ordered() {
            Ok(())
        } else {
            Err(Error::OrderingViolated {
                dx: self.dx,
                dy: self.dy,
                dz: self.dz,
            })
        }
    }

    /// Uniform sample from the admissible region `|d_z| <= d_y <= d_x <= π/2`.
    pub fn sample(rng: &mut RandomSource) -> Self {
        let mut v = [0.0; 3].map(|_: f64| FRAC_PI_2 * rng.uniform());
        v.sort_by(|a, b| b.total_cmp(a));
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        Self::new(v[0], v[1], sign * v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFactors {
    pub u_a: Mat2,
    pub u_b: Mat2,
    pub v_a: Mat2,
    pub v_b: Mat2,
    pub global_phase: C64,
}

impl LocalFactors {
    pub fn identity() -> Self {
        Self {
            u_a: Mat2::identity(),
            u_b: Mat2::identity(),
            v_a: Mat2::identity(),
            v_b: Mat2::identity(),
            global_phase: C64::new(1.0, 0.0),
        }
    }

    /// `phase · (U_A ⊗ U_B) · U_d · (V_A ⊗ V_B)`.
    pub fn reconstruct(&self, d: &CanonicalParams) -> Mat4 {
        tensor(&self.u_a, &self.u_b)
            * canonical_gate(d)
            * tensor(&self.v_a, &self.v_b)
            * self.global_phase
    }
}

/// Columns are the magic basis: Φ+, iΦ-, iΨ+, Ψ-.
fn magic_basis() -> Mat4 {
    let h = FRAC_1_SQRT_2;
    let (r, i, z) = (C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, 0.0));
    Matrix4::new(
        r, i, z, z, //
        z, z, i, r, //
        z, z, i, -r, //
        r, -i, z, z,
    )
}

/// `signs[k][m]`: eigenvalue of `σ_m ⊗ σ_m` on magic basis vector `k`.
fn magic_signs() -> [[f64; 3]; 4] {
    let b = magic_basis();
    let bd = b.adjoint();
    let mut s = [[0.0; 3]; 4];
    for (m, p) in PAULI_AXES.iter().enumerate() {
        let sig = pauli(*p);
        let diag = bd * tensor(&sig, &sig) * b;
        for (k, row) in s.iter_mut().enumerate() {
            row[m] = diag[(k, k)].re.round();
        }
    }
    s
}

/// `exp(-(i/2) Σ_m d_m σ_m ⊗ σ_m)`, exact in the magic basis.
pub fn canonical_gate(d: &CanonicalParams) -> Mat4 {
    let b = magic_basis();
    let signs = magic_signs();
    let dv = d.as_array();
    let mut diag = Mat4::zeros();
    for (k, s) in signs.iter().enumerate() {
        let lambda = 0.5 * (s[0] * dv[0] + s[1] * dv[1] + s[2] * dv[2]);
        diag[(k, k)] = C64::from_polar(1.0, -lambda);
    }
    b * diag * b.adjoint()
}

/// Single-qubit `v` with `v σ_a v^dag = ±σ_b` and `v σ_b v^dag = ±σ_a`.
fn axis_exchange(a: usize, b: usize) -> Mat2 {
    let h = FRAC_1_SQRT_2;
    match (a.min(b), a.max(b)) {
        // S gate: X -> Y, Y -> -X.
        (0, 1) => Mat2::new(
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 1.0),
        ),
        // Hadamard: X <-> Z.
        (0, 2) => Mat2::new(
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
        ),
        // exp(-iπX/4): Y -> Z, Z -> -Y.
        (1, 2) => Mat2::new(
            C64::new(h, 0.0),
            C64::new(0.0, -h),
            C64::new(0.0, -h),
            C64::new(h, 0.0),
        ),
        _ => unreachable!("distinct axes"),
    }
}

/// Working state of the normalization: `U ∝ k1 · U_d(c) · k2`.
struct Normalizer {
    k1: Mat4,
    k2: Mat4,
    c: [f64; 3],
}

impl Normalizer {
    /// `U_d(c) = U_d(c - kπ e_m) · (σ_m ⊗ σ_m)^k` up to phase.
    fn shift(&mut self, m: usize, k: i64) {
        if k == 0 {
            return;
        }
        self.c[m] -= k as f64 * PI;
        if k.rem_euclid(2) == 1 {
            let sig = pauli(PAULI_AXES[m]);
            self.k2 = tensor(&sig, &sig) * self.k2;
        }
    }

    fn exchange(&mut self, a: usize, b: usize) {
        let v = axis_exchange(a, b);
        let vv = tensor(&v, &v);
        self.k1 *= vv.adjoint();
        self.k2 = vv * self.k2;
        self.c.swap(a, b);
    }

    /// Conjugating by `σ ⊗ I` negates the two coefficients whose axes
    /// anticommute with `σ`.
    fn flip_pair(&mut self, a: usize, b: usize) {
        let keep = 3 - a - b;
        let sig = pauli(PAULI_AXES[keep]);
        let v = tensor(&sig, &pauli(PauliIndex::I));
        self.k1 *= v;
        self.k2 = v * self.k2;
        self.c[a] = -self.c[a];
        self.c[b] = -self.c[b];
    }

    fn normalize(&mut self) {
        for m in 0..3 {
            let k = ((self.c[m] + FRAC_PI_2) / PI).floor() as i64;
            self.shift(m, k);
        }
        // Sort by magnitude, largest first.
        for _ in 0..2 {
            for m in 0..2 {
                if self.c[m].abs() < self.c[m + 1].abs() {
                    self.exchange(m, m + 1);
                }
            }
        }
        match (self.c[0] < 0.0, self.c[1] < 0.0) {
            (true, true) => self.flip_pair(0, 1),
            (true, false) => self.flip_pair(0, 2),
            (false, true) => self.flip_pair(1, 2),
            (false, false) => {}
        }
        // On the d_x = π/2 face the sign of d_z is a local choice.
        if self.c[2] < 0.0 && (self.c[0] - FRAC_PI_2).abs() <= BOUNDARY_TOL {
            self.flip_pair(0, 2);
            self.shift(0, -1);
        }
    }
}

/// Splits a 4x4 product operator into `a ⊗ b` with `b ∈ SU(2)`.
fn factor_product(k: &Mat4) -> (Mat2, Mat2) {
    let block = |i: usize, j: usize| Mat2::from_fn(|r, c| k[(2 * i + r, 2 * j + c)]);
    let (bi, bj) = (0..4)
        .map(|idx| (idx / 2, idx % 2))
        .max_by(|x, y| block(x.0, x.1).norm().total_cmp(&block(y.0, y.1).norm()))
        .expect("four blocks");
    let big = block(bi, bj);
    let b = big / big.determinant().sqrt();
    let bd = b.adjoint();
    let a = Mat2::from_fn(|i, j| (bd * block(i, j)).trace() / 2.0);
    (a, b)
}

/// Unit phase `p` minimizing `|p·recon - target|`.
fn fit_phase(recon: &Mat4, target: &Mat4) -> C64 {
    let overlap = (recon.adjoint() * target).trace();
    if overlap.norm() < 1e-300 {
        C64::new(1.0, 0.0)
    } else {
        overlap / overlap.norm()
    }
}

/// Real orthogonal `P` (det +1) diagonalizing the complex symmetric unitary
/// `m` by congruence, `P^T m P = diag`.
fn diagonalize_symmetric_unitary(m: &Mat4) -> Option<Matrix4<f64>> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    // Re and Im commute; a generic real combination shares their
    // eigenvectors. Fixed weights keep degenerate cases reproducible.
    const WEIGHTS: [(f64, f64); 6] = [
        (1.0, 0.0),
        (0.0, 1.0),
        (0.8660254037844386, 0.5),
        (0.3090169943749474, 0.9510565162951535),
        (0.6234898018587336, -0.7818314824680298),
        (0.1411200080598672, 0.9899924966004454),
    ];
    for (wr, wi) in WEIGHTS {
        let h = re * wr + im * wi;
        let h = (h + h.transpose()) * 0.5;
        let mut p = SymmetricEigen::new(h).eigenvectors;
        if p.determinant() < 0.0 {
            p.column_mut(0).neg_mut();
        }
        let pc = p.map(|x| C64::new(x, 0.0));
        let d = pc.transpose() * m * pc;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .fold(0.0_f64, |acc, (r, c)| acc.max(d[(r, c)].norm()));
        if off < DIAGONAL_TOL {
            return Some(p);
        }
    }
    None
}

/// Decomposes a two-qubit unitary into canonical parameters and local
/// factors. The result reconstructs `u` to within 1e-8 entrywise.
pub fn canonical_decompose(u: &Mat4) -> Result<(CanonicalParams, LocalFactors)> {
    check_unitary4(u)?;
    let b = magic_basis();
    let bd = b.adjoint();
    let su = u / u.determinant().powf(0.25);
    let up = bd * su * b;
    let m = up.transpose() * up;

    let p = diagonalize_symmetric_unitary(&m).ok_or(Error::DecompositionFailed {
        residual: f64::INFINITY,
    })?;
    let pc = p.map(|x| C64::new(x, 0.0));
    let lambda = pc.transpose() * m * pc;
    let mut d: [C64; 4] = std::array::from_fn(|k| lambda[(k, k)].sqrt());

    let left = |d: &[C64; 4]| {
        let inv = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| d[k].inv()));
        (up * pc * inv).map(|z| z.re)
    };
    let mut o1 = left(&d);
    if o1.determinant() < 0.0 {
        d[0] = -d[0];
        o1 = left(&d);
    }

    let signs = magic_signs();
    let theta: [f64; 4] = d.map(|z| z.arg());
    let c: [f64; 3] =
        std::array::from_fn(|mi| -0.5 * (0..4).map(|k| signs[k][mi] * theta[k]).sum::<f64>());

    let o1c = o1.map(|x| C64::new(x, 0.0));
    let mut norm = Normalizer {
        k1: b * o1c * bd,
        k2: b * pc.transpose() * bd,
        c,
    };
    norm.normalize();

    let params = CanonicalParams::new(norm.c[0], norm.c[1], norm.c[2]);
    let (u_a, u_b) = factor_product(&norm.k1);
    let (v_a, v_b) = factor_product(&norm.k2);
    let mut locals = LocalFactors {
        u_a,
        u_b,
        v_a,
        v_b,
        global_phase: C64::new(1.0, 0.0),
    };
    // Move the phases of the A factors into the global phase.
    for f in [&mut locals.u_a, &mut locals.v_a] {
        *f /= f.determinant().sqrt();
    }
    let recon = locals.reconstruct(&params);
    locals.global_phase = fit_phase(&recon, u);
    let residual = max_abs(&(locals.reconstruct(&params) - u));
    if residual > RECONSTRUCTION_TOL || !params.is_ordered() {
        return Err(Error::DecompositionFailed { residual });
    }
    Ok((params, locals))
}

/// `sin d_x + sin d_y + sin d_x sin d_y`, the maximum of `f` over frames and
/// receiver states.
pub fn max_f_closed_form(d: &CanonicalParams) -> Result<f64> {
    d.check_ordering()?;
    let (sx, sy) = (d.dx.sin(), d.dy.sin());
    Ok(sx + sy + sx * sy)
}

/// `1/2 + (sin d_x + sin d_y + sin d_x sin d_y)/6`.
pub fn closed_form_power(d: &CanonicalParams) -> Result<f64> {
    Ok(0.5 + max_f_closed_form(d)? / 6.0)
}

/// Angles `(α, β)` of the receiver state and `(θ, φ, ω)` of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveAngles {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub phi: f64,
    pub omega: f64,
}

impl ObjectiveAngles {
    pub fn frame(&self) -> RotationFrame {
        frame_from_angles(self.theta, self.phi, self.omega)
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_from_angles(self.alpha, self.beta)
    }

    pub fn from_frame_and_bloch(frame: &RotationFrame, t: &BlochVector) -> Self {
        let (alpha, beta) = bloch_angles(t);
        Self {
            alpha,
            beta,
            theta: frame.theta,
            phi: frame.phi,
            omega: frame.omega,
        }
    }
}

/// `f = f1 + f2` for the canonical gate: `f1` holds the three diagonal frame
/// terms, `f2` the six terms coupling T to the off-diagonal frame entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FValue {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
}

pub fn f_from_frame(d: &CanonicalParams, s: &Matrix3<f64>, t: &BlochVector) -> FValue {
    let (sx, sy, sz) = (d.dx.sin(), d.dy.sin(), d.dz.sin());
    let (cx, cy, cz) = (d.dx.cos(), d.dy.cos(), d.dz.cos());
    let f1 = sy * sz * s[(0, 0)] + sz * sx * s[(1, 1)] + sx * sy * s[(2, 2)];
    let f2 = cy * t.y * sx * s[(0, 2)] + cz * t.z * sy * s[(1, 0)] + cx * t.x * sz * s[(2, 1)]
        - cz * t.z * sx * s[(0, 1)]
        - cx * t.x * sy * s[(1, 2)]
        - cy * t.y * sz * s[(2, 0)];
    FValue { f: f1 + f2, f1, f2 }
}

pub fn f_value(d: &CanonicalParams, ang: &ObjectiveAngles) -> FValue {
    f_from_frame(d, &ang.frame().matrix, &ang.bloch())
}

/// Angles at which `f` reaches [`max_f_closed_form`].
///
/// For `d_z >= 0` the candidates are `ω = π/2 - d_z`, `β = φ = 0` and
/// `(α, θ) ∈ {(π, 0), (0, π)}`; the first branch attaining the closed form
/// is returned. Negative `d_z` maps through `(S_x, S_y, S_z, T) ->
/// (-S_x, -S_y, S_z, -T)`.
pub fn closed_form_maximizer(d: &CanonicalParams) -> Result<ObjectiveAngles> {
    let target = max_f_closed_form(d)?;
    let mirrored = CanonicalParams::new(d.dx, d.dy, d.dz.abs());
    let omega = FRAC_PI_2 - mirrored.dz;
    let mut best: Option<(ObjectiveAngles, f64)> = None;
    for (alpha, theta) in [(PI, 0.0), (0.0, PI)] {
        let ang = ObjectiveAngles {
            alpha,
            beta: 0.0,
            theta,
            phi: 0.0,
            omega,
        };
        let v = f_value(&mirrored, &ang).f;
        if best.is_none_or(|(_, bv)| v > bv + 1e-9) {
            best = Some((ang, v));
        }
    }
    let (ang, v) = best.expect("two branches");
    if v < target - 1e-6 {
        return Err(Error::MaximizerNotAttained {
            attained: v,
            expected: target,
        });
    }
    if d.dz >= 0.0 {
        return Ok(ang);
    }
    let flip = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
    let frame = RotationFrame::from_matrix(&(flip * ang.frame().matrix));
    let t = ang.bloch();
    let t = BlochVector::new(-t.x, -t.y, -t.z);
    let ang = ObjectiveAngles::from_frame_and_bloch(&frame, &t);
    let v = f_value(d, &ang).f;
    if v < target - 1e-6 {
        return Err(Error::MaximizerNotAttained {
            attained: v,
            expected: target,
        });
    }
    Ok(ang)
}

/// Bloch vector of `v^dag ρ(t) v`.
fn conjugate_bloch(v: &Mat2, t: &BlochVector) -> BlochVector {
    let rho = v.adjoint() * t.to_operator() * v;
    let comp = PAULI_AXES.map(|p| (rho * pauli(p)).trace().re);
    BlochVector::new(comp[0], comp[1], comp[2])
}

/// Closed-form QST power of a two-qubit unitary, with the maximizing frame
/// and receiver state carried back through the local factors.
pub fn power_of_unitary(u: &Mat4) -> Result<(PowerResult, CanonicalParams, LocalFactors)> {
    let (d, locals) = canonical_decompose(u)?;
    let power = closed_form_power(&d)?;
    let ang = closed_form_maximizer(&d)?;
    // With U = (U_A ⊗ U_B) U_d (V_A ⊗ V_B), a maximizer (S', ξ') of U_d maps
    // to S = U_B S' V_A and P_ξ = V_B^dag P_ξ' V_B.
    let s = locals.u_b * ang.frame().to_su2() * locals.v_a;
    let frame = RotationFrame::from_matrix(&frame_of_unchecked(&s).0);
    let t = conjugate_bloch(&locals.v_b, &ang.bloch());
    let result = PowerResult {
        power,
        best_t: t,
        best_frame: frame,
        method: Method::ClosedForm,
        iterations: 0,
        starts_converged_to_best: 0,
        mc_check: None,
    };
    Ok((result, d, locals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::sample_unitary4;
    use crate::power::{extract_pauli_tensors, objective_g};
    use crate::quantum::{gates, unitary_channel};
    use std::f64::consts::FRAC_PI_4;

    fn phase_fitted_distance(a: &Mat4, b: &Mat4) -> f64 {
        max_abs(&(a * fit_phase(a, b) - b))
    }

    #[test]
    fn magic_basis_is_unitary_and_diagonalizes() {
        let b = magic_basis();
        assert!(max_abs(&(b.adjoint() * b - Mat4::identity())) < 1e-15);
        let s = magic_signs();
        for row in s {
            assert_eq!(row[0] * row[1] * row[2], -1.0);
        }
    }

    #[test]
    fn canonical_gate_examples() {
        let id = canonical_gate(&CanonicalParams::new(0.0, 0.0, 0.0));
        assert!(max_abs(&(id - Mat4::identity())) < 1e-15);

        let swapish = canonical_gate(&CanonicalParams::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2));
        assert!(phase_fitted_distance(&swapish, &gates::swap()) < 1e-10);

        // Direct series check of the exponential on a generic triple.
        let d = CanonicalParams::new(0.9, 0.4, -0.2);
        let gen = PAULI_AXES
            .iter()
            .zip(d.as_array())
            .fold(Mat4::zeros(), |acc, (p, dm)| {
                acc + tensor(&pauli(*p), &pauli(*p)) * C64::new(0.0, -0.5 * dm)
            });
        let mut term = Mat4::identity();
        let mut series = Mat4::identity();
        for k in 1..40 {
            term = term * gen / C64::new(k as f64, 0.0);
            series += term;
        }
        assert!(max_abs(&(series - canonical_gate(&d))) < 1e-13);
    }

    #[test]
    fn cnot_is_in_the_dx_class() {
        let (d, locals) = canonical_decompose(&gates::cnot()).unwrap();
        assert!((d.dx - FRAC_PI_2).abs() < 1e-9, "{d:?}");
        assert!(d.dy.abs() < 1e-9 && d.dz.abs() < 1e-9);
        assert!(max_abs(&(locals.reconstruct(&d) - gates::cnot())) < 1e-8);
        let cnot_class = canonical_gate(&CanonicalParams::new(FRAC_PI_2, 0.0, 0.0));
        let (d2, _) = canonical_decompose(&cnot_class).unwrap();
        assert!((d2.dx - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn identity_decomposes_trivially() {
        let (d, locals) = canonical_decompose(&Mat4::identity()).unwrap();
        assert!(d.as_array().iter().all(|x| x.abs() < 1e-12));
        let locals_only = tensor(&locals.u_a, &locals.u_b)
            * tensor(&locals.v_a, &locals.v_b)
            * locals.global_phase;
        assert!(max_abs(&(locals_only - Mat4::identity())) < 1e-12);
    }

    #[test]
    fn swap_and_iswap_classes() {
        let (d, _) = canonical_decompose(&gates::swap()).unwrap();
        for x in d.as_array() {
            assert!((x - FRAC_PI_2).abs() < 1e-9, "{d:?}");
        }
        let (d, _) = canonical_decompose(&gates::iswap()).unwrap();
        assert!((d.dx - FRAC_PI_2).abs() < 1e-9 && (d.dy - FRAC_PI_2).abs() < 1e-9);
        assert!(d.dz.abs() < 1e-9, "{d:?}");
        let (d, _) = canonical_decompose(&gates::sqrt_swap()).unwrap();
        for x in d.as_array() {
            assert!((x - FRAC_PI_4).abs() < 1e-9, "{d:?}");
        }
    }

    #[test]
    fn random_unitaries_round_trip() {
        let mut rng = RandomSource::new(17, 0);
        for _ in 0..200 {
            let u = sample_unitary4(&mut rng);
            let (d, locals) = canonical_decompose(&u).unwrap();
            assert!(d.is_ordered(), "{d:?}");
            assert!(max_abs(&(locals.reconstruct(&d) - u)) <= 1e-8);
        }
    }

    #[test]
    fn canonical_gates_round_trip_their_parameters() {
        let mut rng = RandomSource::new(18, 0);
        for _ in 0..100 {
            let d = CanonicalParams::sample(&mut rng);
            let (got, _) = canonical_decompose(&canonical_gate(&d)).unwrap();
            for (a, b) in got.as_array().iter().zip(d.as_array()) {
                assert!((a - b).abs() < 1e-7, "{got:?} vs {d:?}");
            }
        }
    }

    #[test]
    fn decompose_rejects_non_unitary() {
        let mut m = Mat4::identity();
        m[(3, 3)] = C64::new(2.0, 0.0);
        assert!(matches!(
            canonical_decompose(&m),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn closed_form_examples() {
        let cnot = CanonicalParams::new(FRAC_PI_2, 0.0, 0.0);
        assert!((closed_form_power(&cnot).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for dz in [-FRAC_PI_2, -0.3, 0.0, 1.0, FRAC_PI_2] {
            let d = CanonicalParams::new(FRAC_PI_2, FRAC_PI_2, dz);
            assert!((closed_form_power(&d).unwrap() - 1.0).abs() < 1e-15);
        }
        let zero = CanonicalParams::new(0.0, 0.0, 0.0);
        assert_eq!(closed_form_power(&zero).unwrap(), 0.5);
        let q = CanonicalParams::new(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4);
        assert!((closed_form_power(&q).unwrap() - 0.8190355937288492).abs() < 1e-12);
        let bad = CanonicalParams::new(0.1, 0.5, 0.0);
        assert!(matches!(
            closed_form_power(&bad),
            Err(Error::OrderingViolated { .. })
        ));
    }

    #[test]
    fn max_f_examples() {
        assert_eq!(
            max_f_closed_form(&CanonicalParams::new(FRAC_PI_2, 0.0, 0.0)).unwrap(),
            1.0
        );
        assert_eq!(
            max_f_closed_form(&CanonicalParams::new(0.0, 0.0, 0.0)).unwrap(),
            0.0
        );
        let v = max_f_closed_form(&CanonicalParams::new(PI / 3.0, PI / 6.0, 0.1)).unwrap();
        assert!((v - 1.799038105676658).abs() < 1e-12);
    }

    #[test]
    fn f_vanishes_without_interaction() {
        let mut rng = RandomSource::new(19, 0);
        for _ in 0..50 {
            let ang = random_angles(&mut rng);
            assert_eq!(f_value(&CanonicalParams::new(0.0, 0.0, 0.0), &ang).f, 0.0);
        }
    }

    fn random_angles(rng: &mut RandomSource) -> ObjectiveAngles {
        ObjectiveAngles {
            alpha: PI * rng.uniform(),
            beta: 2.0 * PI * rng.uniform(),
            theta: PI * rng.uniform(),
            phi: 2.0 * PI * rng.uniform(),
            omega: PI * rng.uniform(),
        }
    }

    #[test]
    fn g_is_four_f() {
        let mut rng = RandomSource::new(20, 0);
        for _ in 0..100 {
            let d = CanonicalParams::sample(&mut rng);
            let ang = random_angles(&mut rng);
            let t = extract_pauli_tensors(&unitary_channel(&canonical_gate(&d)).unwrap()).unwrap();
            let g = objective_g(&t, &ang.frame(), &ang.bloch());
            assert!((g / 4.0 - f_value(&d, &ang).f).abs() < 1e-10);
        }
    }

    #[test]
    fn maximizer_examples() {
        let d = CanonicalParams::new(FRAC_PI_2, FRAC_PI_2, 0.0);
        let ang = closed_form_maximizer(&d).unwrap();
        assert!((ang.omega - FRAC_PI_2).abs() < 1e-15);
        assert!((f_value(&d, &ang).f - 3.0).abs() < 1e-12);

        let d = CanonicalParams::new(0.0, 0.0, 0.0);
        assert!(f_value(&d, &closed_form_maximizer(&d).unwrap()).f.abs() < 1e-15);

        let d = CanonicalParams::new(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4);
        let ang = closed_form_maximizer(&d).unwrap();
        assert!((ang.omega - FRAC_PI_4).abs() < 1e-15);
        assert!((f_value(&d, &ang).f - (2f64.sqrt() + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn maximizer_attains_closed_form_on_random_params() {
        let mut rng = RandomSource::new(21, 0);
        for _ in 0..200 {
            let d = CanonicalParams::sample(&mut rng);
            let ang = closed_form_maximizer(&d).unwrap();
            let target = max_f_closed_form(&d).unwrap();
            assert!((f_value(&d, &ang).f - target).abs() < 1e-9, "{d:?}");
        }
    }

    #[test]
    fn sign_symmetry_of_f() {
        let mut rng = RandomSource::new(22, 0);
        let flip = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        for _ in 0..100 {
            let d = CanonicalParams::sample(&mut rng);
            let neg = CanonicalParams::new(d.dx, d.dy, -d.dz);
            let ang = random_angles(&mut rng);
            let t = ang.bloch();
            let lhs = f_from_frame(
                &neg,
                &(flip * ang.frame().matrix),
                &BlochVector::new(-t.x, -t.y, -t.z),
            );
            assert!((lhs.f - f_value(&d, &ang).f).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_power_examples() {
        let (res, _, _) = power_of_unitary(&gates::cz()).unwrap();
        assert!((res.power - 2.0 / 3.0).abs() < 1e-12);
        let (res, d, _) = power_of_unitary(&gates::iswap()).unwrap();
        assert!((res.power - 1.0).abs() < 1e-12, "{d:?}");
        let (res, _, _) = power_of_unitary(&Mat4::identity()).unwrap();
        assert_eq!(res.power, 0.5);
        assert_eq!(res.method, Method::ClosedForm);
    }

    #[test]
    fn unitary_maximizer_is_carried_through_locals() {
        let mut rng = RandomSource::new(23, 0);
        for _ in 0..50 {
            let u = sample_unitary4(&mut rng);
            let (res, _, _) = power_of_unitary(&u).unwrap();
            let t = extract_pauli_tensors(&unitary_channel(&u).unwrap()).unwrap();
            let g = objective_g(&t, &res.best_frame, &res.best_t);
            assert!((0.5 + g / 24.0 - res.power).abs() < 1e-9);
        }
    }
}
