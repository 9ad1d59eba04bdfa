//! Haar sampling on SU(2) (and U(4) for test channels), the SO(3) frame of
//! an SU(2) element, and Monte-Carlo estimates of its low moments.

use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quantum::{
    check_unitary2, pauli, BipartiteChannel, Mat2, Mat4, PauliIndex, C64, PAULI_AXES,
};
use crate::stats::{chunked_stats, RunningStats};

/// Seeded generator; `(seed, stream)` fixes the sequence bit-exactly.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent source on the same seed with a different stream id.
    pub fn substream(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    /// Fresh seed for deriving a family of sub-streams.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Complex Gaussian with independent N(0,1) real and imaginary parts.
    pub fn complex_normal(&mut self) -> C64 {
        C64::new(self.normal(), self.normal())
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Orthonormalizes the columns of `m` in order (modified Gram-Schmidt).
///
/// This is the QR factor with a positive real diagonal in R, which makes the
/// factorization unique and the output Haar-distributed for Gaussian input.
fn orthonormalize_columns(mut m: DMatrix<C64>) -> DMatrix<C64> {
    for j in 0..m.ncols() {
        for k in 0..j {
            let proj = m.column(k).dotc(&m.column(j));
            let qk = m.column(k).clone_owned();
            m.column_mut(j).axpy(-proj, &qk, C64::new(1.0, 0.0));
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    m
}

fn gaussian(rng: &mut RandomSource, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.complex_normal())
}

/// Haar-random element of SU(2).
pub fn sample_su2(rng: &mut RandomSource) -> Mat2 {
    let q = orthonormalize_columns(gaussian(rng, 2, 2));
    let u = Mat2::from_fn(|r, c| q[(r, c)]);
    let det = u.determinant();
    u / det.sqrt()
}

/// Haar-random element of U(4).
pub fn sample_unitary4(rng: &mut RandomSource) -> Mat4 {
    let q = orthonormalize_columns(gaussian(rng, 4, 4));
    Mat4::from_fn(|r, c| q[(r, c)])
}

/// Random two-qubit channel with `n_kraus` operators, cut from a random
/// `4n x 4` isometry so completeness holds by construction.
pub fn sample_channel(rng: &mut RandomSource, n_kraus: usize) -> BipartiteChannel {
    let v = orthonormalize_columns(gaussian(rng, 4 * n_kraus, 4));
    let kraus = (0..n_kraus)
        .map(|k| Mat4::from_fn(|r, c| v[(4 * k + r, c)]))
        .collect();
    BipartiteChannel::from_kraus(kraus).expect("isometry blocks are complete")
}

/// Random single-qubit Kraus set with `n_kraus` operators.
pub fn sample_qubit_kraus(rng: &mut RandomSource, n_kraus: usize) -> Vec<Mat2> {
    let v = orthonormalize_columns(gaussian(rng, 2 * n_kraus, 2));
    (0..n_kraus)
        .map(|k| Mat2::from_fn(|r, c| v[(2 * k + r, c)]))
        .collect()
}

/// Rows are the frame vectors: `R[(n, m)] = Tr(R σ_n R^dag σ_m)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameComponents(pub Matrix3<f64>);

impl FrameComponents {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// The image of σ_z, whose components are R_z^m.
    pub fn z_row(&self) -> [f64; 3] {
        [self.0[(2, 0)], self.0[(2, 1)], self.0[(2, 2)]]
    }
}

pub fn frame_of(r: &Mat2) -> Result<FrameComponents> {
    check_unitary2(r)?;
    Ok(frame_of_unchecked(r))
}

pub(crate) fn frame_of_unchecked(r: &Mat2) -> FrameComponents {
    let sig = PAULI_AXES.map(pauli);
    let rd = r.adjoint();
    FrameComponents(Matrix3::from_fn(|n, m| {
        (r * sig[n] * rd * sig[m]).trace().re / 2.0
    }))
}

/// Sample means and standard errors of a vector-valued quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorEstimate {
    pub mean: [f64; 3],
    pub std_error: [f64; 3],
    pub n_samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixEstimate {
    pub mean: Matrix3<f64>,
    pub std_error: Matrix3<f64>,
    pub n_samples: u64,
}

/// Haar average of `R P0 R^dag`, entrywise with real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwirlEstimate {
    pub mean: Mat2,
    /// Standard errors of the real parts.
    pub std_error_re: nalgebra::Matrix2<f64>,
    /// Standard errors of the imaginary parts.
    pub std_error_im: nalgebra::Matrix2<f64>,
    pub n_samples: u64,
}

impl TwirlEstimate {
    /// Max over entries of `|mean - I/2|` measured in standard errors
    /// (real and imaginary parts separately); entries with zero spread must
    /// match exactly up to 1e-15.
    pub fn max_sigma_deviation(&self) -> f64 {
        let target = Mat2::identity() * C64::new(0.5, 0.0);
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                let d = self.mean[(r, c)] - target[(r, c)];
                for (dev, se) in [
                    (d.re.abs(), self.std_error_re[(r, c)]),
                    (d.im.abs(), self.std_error_im[(r, c)]),
                ] {
                    let s = if se > 0.0 {
                        dev / se
                    } else if dev <= 1e-15 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    worst = worst.max(s);
                }
            }
        }
        worst
    }
}

/// Estimates `<R_z^m>` over Haar-random R.
pub fn estimate_first_moment(rng: &mut RandomSource, n_samples: usize) -> VectorEstimate {
    let stats = chunked_stats::<3, _>(rng, n_samples, |r| {
        frame_of_unchecked(&sample_su2(r)).z_row()
    });
    VectorEstimate {
        mean: stats.map(|s| s.mean()),
        std_error: stats.map(|s| s.std_error()),
        n_samples: n_samples as u64,
    }
}

/// Estimates `<R_z^m R_z^n>` over Haar-random R.
pub fn estimate_second_moment(rng: &mut RandomSource, n_samples: usize) -> MatrixEstimate {
    let stats = chunked_stats::<9, _>(rng, n_samples, |r| {
        let z = frame_of_unchecked(&sample_su2(r)).z_row();
        std::array::from_fn(|k| z[k / 3] * z[k % 3])
    });
    MatrixEstimate {
        mean: Matrix3::from_fn(|m, n| stats[3 * m + n].mean()),
        std_error: Matrix3::from_fn(|m, n| stats[3 * m + n].std_error()),
        n_samples: n_samples as u64,
    }
}

/// Estimates the twirl `∫ dμ(R) R P0 R^dag`, which should equal I/2.
pub fn estimate_twirl(rng: &mut RandomSource, n_samples: usize) -> TwirlEstimate {
    let p0 = (Mat2::identity() + pauli(PauliIndex::Z)).scale(0.5);
    let stats = chunked_stats::<8, _>(rng, n_samples, |r| {
        let u = sample_su2(r);
        let m = u * p0 * u.adjoint();
        std::array::from_fn(|k| {
            let z = m[(k / 4, (k / 2) % 2)];
            if k % 2 == 0 {
                z.re
            } else {
                z.im
            }
        })
    });
    let entry = |s: &RunningStats| s.mean();
    TwirlEstimate {
        mean: Mat2::from_fn(|r, c| {
            let k = 4 * r + 2 * c;
            C64::new(entry(&stats[k]), entry(&stats[k + 1]))
        }),
        std_error_re: nalgebra::Matrix2::from_fn(|r, c| stats[4 * r + 2 * c].std_error()),
        std_error_im: nalgebra::Matrix2::from_fn(|r, c| stats[4 * r + 2 * c + 1].std_error()),
        n_samples: n_samples as u64,
    }
}
