//! One- and two-qubit linear algebra and Kraus-form channels.
//!
//! Two-qubit operators use the basis |00>, |01>, |10>, |11> with qubit A as
//! the left (slow) Kronecker factor. A single-qubit operator `x` acting on B
//! alone is `tensor(&I, &x)`.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Max entrywise anti-Hermitian part tolerated in a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Max entrywise deviation of `sum K^dag K` from the identity.
pub const CPTP_TOL: f64 = 1e-8;
/// Max entrywise deviation of `U^dag U` from the identity.
pub const UNITARY_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const UNIT_NORM_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I_UNIT: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliIndex {
    I,
    X,
    Y,
    Z,
}

/// The three traceless Paulis in x, y, z order.
pub const PAULI_AXES: [PauliIndex; 3] = [PauliIndex::X, PauliIndex::Y, PauliIndex::Z];

pub fn pauli(index: PauliIndex) -> Mat2 {
    match index {
        PauliIndex::I => Mat2::identity(),
        PauliIndex::X => Mat2::new(ZERO, ONE, ONE, ZERO),
        PauliIndex::Y => Mat2::new(ZERO, -I_UNIT, I_UNIT, ZERO),
        PauliIndex::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// Kronecker product `a ⊗ b` with `a` acting on qubit A.
pub fn tensor(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Traces out qubit A, leaving the reduced operator on B.
pub fn partial_trace_a(op: &Mat4) -> Mat2 {
    Mat2::from_fn(|r, c| op[(r, c)] + op[(r + 2, c + 2)])
}

/// Traces out qubit B, leaving the reduced operator on A.
pub fn partial_trace_b(op: &Mat4) -> Mat2 {
    Mat2::from_fn(|r, c| op[(2 * r, 2 * c)] + op[(2 * r + 1, 2 * c + 1)])
}

/// Largest entrywise modulus of a complex matrix.
pub fn max_abs<R, C, S>(m: &nalgebra::Matrix<C64, R, C, S>) -> f64
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<C64, R, C>,
{
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Max entrywise deviation of `U^dag U` from the identity.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)))
}

pub fn check_unitary2(u: &Mat2) -> Result<()> {
    let deviation = max_abs(&(u.adjoint() * u - Mat2::identity()));
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

pub fn check_unitary4(u: &Mat4) -> Result<()> {
    let deviation = max_abs(&(u.adjoint() * u - Mat4::identity()));
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// A validated density matrix on one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if !(n == 2 || n == 4) || matrix.ncols() != n {
            return Err(Error::WrongDimension {
                expected: if n == 4 { 4 } else { 2 },
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::NotDensityMatrix {
                reason: format!("not Hermitian (deviation {herm:e})"),
            });
        }
        let trace = matrix.trace();
        if (trace - ONE).norm() > TRACE_TOL {
            return Err(Error::NotDensityMatrix {
                reason: format!("trace {trace} != 1"),
            });
        }
        let sym = (&matrix + matrix.adjoint()).scale(0.5);
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::NotDensityMatrix {
                reason: format!("negative eigenvalue {min_eig:e}"),
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The 2x2 matrix, if this is a single-qubit state.
    pub fn as_mat2(&self) -> Option<Mat2> {
        (self.dim() == 2).then(|| Mat2::from_fn(|r, c| self.matrix[(r, c)]))
    }

    pub fn as_mat4(&self) -> Option<Mat4> {
        (self.dim() == 4).then(|| Mat4::from_fn(|r, c| self.matrix[(r, c)]))
    }
}

/// Real 3-vector with `rho = (I + T.sigma)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Pure-state Bloch vector; rejects anything off the unit sphere.
    pub fn unit(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self::new(x, y, z);
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(v)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// `(I + T.sigma)/2` without the unit-norm check; mixed for |T| < 1.
    pub fn to_operator(self) -> Mat2 {
        let half = 0.5;
        (pauli(PauliIndex::I)
            + pauli(PauliIndex::X).scale(self.x)
            + pauli(PauliIndex::Y).scale(self.y)
            + pauli(PauliIndex::Z).scale(self.z))
        .scale(half)
    }
}

/// Rank-one projector onto the pure state with Bloch vector `t`.
pub fn bloch_to_pure(t: BlochVector) -> Result<DensityMatrix> {
    let norm = t.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitVector { norm });
    }
    let m = t.to_operator();
    DensityMatrix::new(DMatrix::from_fn(2, 2, |r, c| m[(r, c)]))
}

/// A CPTP map on two qubits in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteChannel {
    kraus: Vec<Mat4>,
}

impl BipartiteChannel {
    /// Builds a channel from 4x4 Kraus operators, checking completeness.
    pub fn from_kraus(kraus: Vec<Mat4>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::EmptyKrausSet);
        }
        let deviation = completeness_deviation(&kraus);
        if deviation > CPTP_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { kraus })
    }

    pub fn identity() -> Self {
        Self {
            kraus: vec![Mat4::identity()],
        }
    }

    /// `rho -> (1 - lambda) rho + lambda Tr(rho) I/4`.
    pub fn depolarizing(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidConfig(format!(
                "depolarizing strength {lambda} outside [0, 1]"
            )));
        }
        let all = [PauliIndex::I, PauliIndex::X, PauliIndex::Y, PauliIndex::Z];
        let mut kraus = Vec::with_capacity(16);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let weight = if i == 0 && j == 0 {
                    1.0 - lambda + lambda / 16.0
                } else {
                    lambda / 16.0
                };
                if weight > 0.0 {
                    kraus.push(tensor(&pauli(*a), &pauli(*b)).scale(weight.sqrt()));
                }
            }
        }
        Self::from_kraus(kraus)
    }

    /// The product channel `E_A ⊗ E_B` from single-qubit Kraus sets.
    pub fn product(kraus_a: &[Mat2], kraus_b: &[Mat2]) -> Result<Self> {
        let mut kraus = Vec::with_capacity(kraus_a.len() * kraus_b.len());
        for a in kraus_a {
            for b in kraus_b {
                kraus.push(tensor(a, b));
            }
        }
        Self::from_kraus(kraus)
    }

    pub fn kraus(&self) -> &[Mat4] {
        &self.kraus
    }

    /// `sum_k K op K^dag`, extended linearly to arbitrary operators.
    pub fn apply(&self, op: &Mat4) -> Mat4 {
        self.kraus
            .iter()
            .fold(Mat4::zeros(), |acc, k| acc + k * op * k.adjoint())
    }

    /// `(post) ∘ self ∘ (pre)` for unitaries `pre` and `post`.
    pub fn dressed(&self, post: &Mat4, pre: &Mat4) -> Result<Self> {
        check_unitary4(post)?;
        check_unitary4(pre)?;
        Self::from_kraus(self.kraus.iter().map(|k| post * k * pre).collect())
    }
}

/// Applies `ch` to `op`; see [`BipartiteChannel::apply`].
pub fn apply_channel(ch: &BipartiteChannel, op: &Mat4) -> Mat4 {
    ch.apply(op)
}

fn completeness_deviation(kraus: &[Mat4]) -> f64 {
    let sum = kraus
        .iter()
        .fold(Mat4::zeros(), |acc, k| acc + k.adjoint() * k);
    max_abs(&(sum - Mat4::identity()))
}

/// Validates a dynamically sized Kraus list as a two-qubit CPTP map.
pub fn validate_cptp(kraus: &[DMatrix<C64>]) -> Result<BipartiteChannel> {
    if kraus.is_empty() {
        return Err(Error::EmptyKrausSet);
    }
    let fixed = kraus
        .iter()
        .map(|k| {
            if k.nrows() != 4 || k.ncols() != 4 {
                Err(Error::WrongDimension {
                    expected: 4,
                    rows: k.nrows(),
                    cols: k.ncols(),
                })
            } else {
                Ok(Mat4::from_fn(|r, c| k[(r, c)]))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BipartiteChannel::from_kraus(fixed)
}

/// Single-Kraus channel `rho -> U rho U^dag`.
pub fn unitary_channel(u: &Mat4) -> Result<BipartiteChannel> {
    check_unitary4(u)?;
    Ok(BipartiteChannel { kraus: vec![*u] })
}

/// Named two-qubit gates (A is the control where one exists).
pub mod gates {
    use super::*;

    fn real4(rows: [[f64; 4]; 4]) -> Mat4 {
        Mat4::from_fn(|r, c| C64::new(rows[r][c], 0.0))
    }

    pub fn cnot() -> Mat4 {
        real4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
    }

    pub fn cz() -> Mat4 {
        real4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ])
    }

    pub fn swap() -> Mat4 {
        real4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    pub fn iswap() -> Mat4 {
        let mut m = real4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        m[(1, 2)] = I_UNIT;
        m[(2, 1)] = I_UNIT;
        m
    }

    pub fn sqrt_swap() -> Mat4 {
        let p = C64::new(0.5, 0.5);
        let q = C64::new(0.5, -0.5);
        let mut m = Mat4::zeros();
        m[(0, 0)] = ONE;
        m[(3, 3)] = ONE;
        m[(1, 1)] = p;
        m[(2, 2)] = p;
        m[(1, 2)] = q;
        m[(2, 1)] = q;
        m
    }

    pub fn hadamard() -> Mat2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Mat2::new(
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
        )
    }
}
