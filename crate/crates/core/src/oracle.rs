//! Direct Monte-Carlo evaluation of the Haar-averaged transfer probability,
//! kept independent of the Pauli-tensor route so the two can be compared.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{sample_su2, RandomSource};
use crate::power::{optimize_power, Method, OptimizerConfig, PowerResult};
use crate::quantum::{
    bloch_to_pure, check_unitary2, partial_trace_a, pauli, tensor, BipartiteChannel, BlochVector,
    Mat2, PauliIndex,
};
use crate::stats::chunked_stats;

const IMAG_TOL: f64 = 1e-10;
const CLAMP_TOL: f64 = 1e-9;
/// Smallest sample count accepted by [`mc_average`].
pub const MIN_SAMPLES: usize = 100;
/// `mc_power` fails when the estimate is further than this many standard
/// errors from the analytic value.
pub const MISMATCH_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

fn p0() -> Mat2 {
    (pauli(PauliIndex::I) + pauli(PauliIndex::Z)).scale(0.5)
}

/// `Tr[E(R P0 R^dag ⊗ P_ξ) (I ⊗ S R P0 R^dag S^dag)]` before any checks.
fn raw_probability(ch: &BipartiteChannel, r: &Mat2, s: &Mat2, xi: &Mat2) -> num_complex::Complex64 {
    let psi = r * p0() * r.adjoint();
    let out = ch.apply(&tensor(&psi, xi));
    let target = s * psi * s.adjoint();
    (partial_trace_a(&out) * target).trace()
}

/// Probability that B ends in `S R|0>` when A starts in `R|0>` and B in the
/// pure state with Bloch vector `t`.
pub fn transfer_probability(
    ch: &BipartiteChannel,
    r: &Mat2,
    s: &Mat2,
    t: &BlochVector,
) -> Result<f64> {
    check_unitary2(r)?;
    check_unitary2(s)?;
    let xi = bloch_to_pure(*t)?.as_mat2().expect("single-qubit state");
    let p = raw_probability(ch, r, s, &xi);
    if p.im.abs() > IMAG_TOL {
        return Err(Error::NonRealProbability { imag: p.im });
    }
    if p.re < -CLAMP_TOL || p.re > 1.0 + CLAMP_TOL {
        return Err(Error::OutOfRange { value: p.re });
    }
    Ok(p.re.clamp(0.0, 1.0))
}

/// Haar average of [`transfer_probability`] over `R` for fixed `S` and `T`.
pub fn mc_average(
    ch: &BipartiteChannel,
    s: &Mat2,
    t: &BlochVector,
    n_samples: usize,
    rng: &mut RandomSource,
) -> Result<McEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    check_unitary2(s)?;
    let xi = bloch_to_pure(*t)?.as_mat2().expect("single-qubit state");
    let [stats] = chunked_stats::<1, _>(rng, n_samples, |src| {
        let r = sample_su2(src);
        [raw_probability(ch, &r, s, &xi).re.clamp(0.0, 1.0)]
    });
    Ok(McEstimate {
        mean: stats.mean(),
        std_error: stats.std_error(),
        n_samples: n_samples as u64,
    })
}

/// Fails with `ValidationMismatch` when `est` misses `analytic` by more than
/// `MISMATCH_SIGMAS` standard errors.
pub fn check_agreement(analytic: f64, est: &McEstimate) -> Result<()> {
    // A zero-variance estimator (e.g. SWAP) still carries rounding noise.
    let allowed = (MISMATCH_SIGMAS * est.std_error).max(1e-12);
    if (est.mean - analytic).abs() > allowed {
        return Err(Error::ValidationMismatch {
            analytic,
            mc_mean: est.mean,
            std_error: est.std_error,
        });
    }
    Ok(())
}

/// Analytic optimizer followed by a Monte-Carlo check at its maximizer.
pub fn mc_power(
    ch: &BipartiteChannel,
    cfg: &OptimizerConfig,
    n_samples: usize,
    rng: &mut RandomSource,
) -> Result<PowerResult> {
    let analytic = optimize_power(ch, cfg)?;
    let s = analytic.best_frame.to_su2();
    let est = mc_average(ch, &s, &analytic.best_t, n_samples, rng)?;
    check_agreement(analytic.power, &est)?;
    Ok(PowerResult {
        method: Method::MonteCarlo,
        mc_check: Some(est),
        ..analytic
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{sample_channel, sample_qubit_kraus};
    use crate::power::{
        extract_pauli_tensors, frame_from_angles, objective_g, power_from_objective,
    };
    use crate::quantum::gates;
    use crate::quantum::unitary_channel;

    #[test]
    fn swap_transfers_perfectly() {
        let swap = unitary_channel(&gates::swap()).unwrap();
        let mut rng = RandomSource::new(1, 0);
        for _ in 0..100 {
            let r = sample_su2(&mut rng);
            let t = BlochVector::new(0.0, 0.6, 0.8);
            let p = transfer_probability(&swap, &r, &Mat2::identity(), &t).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_channel_with_b_in_zero() {
        let p = transfer_probability(
            &BipartiteChannel::identity(),
            &Mat2::identity(),
            &Mat2::identity(),
            &BlochVector::new(0.0, 0.0, 1.0),
        )
        .unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn depolarized_output_gives_one_half() {
        let dep = BipartiteChannel::depolarizing(1.0).unwrap();
        let mut rng = RandomSource::new(2, 0);
        for _ in 0..20 {
            let (r, s) = (sample_su2(&mut rng), sample_su2(&mut rng));
            let p = transfer_probability(&dep, &r, &s, &BlochVector::new(1.0, 0.0, 0.0)).unwrap();
            assert!((p - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let id = BipartiteChannel::identity();
        let two = Mat2::identity().scale(2.0);
        let t = BlochVector::new(0.0, 0.0, 1.0);
        assert!(transfer_probability(&id, &two, &Mat2::identity(), &t).is_err());
        assert!(transfer_probability(
            &id,
            &Mat2::identity(),
            &Mat2::identity(),
            &BlochVector::new(0.0, 0.0, 0.9)
        )
        .is_err());
        let mut rng = RandomSource::new(0, 0);
        assert!(mc_average(&id, &Mat2::identity(), &t, 99, &mut rng).is_err());
    }

    #[test]
    fn swap_estimator_has_no_spread() {
        let swap = unitary_channel(&gates::swap()).unwrap();
        let est = mc_average(
            &swap,
            &Mat2::identity(),
            &BlochVector::new(1.0, 0.0, 0.0),
            10_000,
            &mut RandomSource::new(3, 0),
        )
        .unwrap();
        assert!((est.mean - 1.0).abs() < 1e-12);
        assert!(est.std_error < 1e-12);
    }

    #[test]
    fn mc_matches_pauli_objective() {
        let mut rng = RandomSource::new(4, 0);
        for k in 1..=3 {
            let ch = sample_channel(&mut rng, k);
            let frame = frame_from_angles(1.0, 2.0, 0.5 * k as f64);
            let t = BlochVector::new(0.0, 0.6, -0.8);
            let g = objective_g(&extract_pauli_tensors(&ch).unwrap(), &frame, &t);
            let est = mc_average(&ch, &frame.to_su2(), &t, 50_000, &mut rng).unwrap();
            let expected = power_from_objective(g);
            assert!(
                (est.mean - expected).abs() <= 4.0 * est.std_error,
                "{est:?} vs {expected}"
            );
        }
    }

    #[test]
    fn local_channel_never_beats_one_half() {
        let mut rng = RandomSource::new(5, 0);
        let ka = sample_qubit_kraus(&mut rng, 2);
        let kb = sample_qubit_kraus(&mut rng, 3);
        let ch = BipartiteChannel::product(&ka, &kb).unwrap();
        let res = mc_power(&ch, &OptimizerConfig::default(), 50_000, &mut rng).unwrap();
        let est = res.mc_check.unwrap();
        assert!((est.mean - 0.5).abs() <= 4.0 * est.std_error);
        assert_eq!(res.method, Method::MonteCarlo);
    }

    #[test]
    fn std_error_scales_as_inverse_sqrt() {
        let ch = unitary_channel(&gates::cnot()).unwrap();
        let s = frame_from_angles(0.4, 1.0, 1.0).to_su2();
        let t = BlochVector::new(0.0, 0.0, 1.0);
        let se: Vec<f64> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&n| {
                mc_average(&ch, &s, &t, n, &mut RandomSource::new(6, 0))
                    .unwrap()
                    .std_error
            })
            .collect();
        for w in se.windows(2) {
            let ratio = w[0] / w[1] / 10f64.sqrt();
            assert!((1.0 / 1.5..=1.5).contains(&ratio), "{se:?}");
        }
    }
}
