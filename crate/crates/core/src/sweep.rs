//! Numerical checks of the maximization of `f` for canonical gates: random
//! sweeps of the bounds on `f1` and `f2`, and a grid search with local
//! refinement that estimates `max f` without using the closed form.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cartan::{f_value, CanonicalParams, ObjectiveAngles};
use crate::haar::RandomSource;

/// Largest observed violation of each bound (positive means violated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub samples: u64,
    /// `max (f2 - (a + b))` over all samples.
    pub f2_vs_a_plus_b: f64,
    /// `max (f2 - (a + b) sin ω)` over samples with `ω <= π/2`.
    pub f2_vs_scaled: f64,
    pub scaled_samples: u64,
    /// `max (f1 - f1max(ω))`.
    pub f1_vs_bound: f64,
}

impl BoundSweep {
    pub fn holds(&self, tol: f64) -> bool {
        self.f2_vs_a_plus_b <= tol && self.f2_vs_scaled <= tol && self.f1_vs_bound <= tol
    }
}

fn sample_angles(rng: &mut RandomSource) -> ObjectiveAngles {
    ObjectiveAngles {
        alpha: PI * rng.uniform(),
        beta: 2.0 * PI * rng.uniform(),
        theta: PI * rng.uniform(),
        phi: 2.0 * PI * rng.uniform(),
        omega: PI * rng.uniform(),
    }
}

/// Samples `n` random `(d, angles)` pairs with `0 <= d_z <= d_y <= d_x <= π/2`
/// and records the worst violation of each bound.
pub fn bound_sweep(rng: &mut RandomSource, n: usize) -> BoundSweep {
    let seed = rng.next_seed();
    const CHUNK: usize = 4096;
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Vec<BoundSweep> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut src = RandomSource::new(seed, chunk as u64);
            let len = CHUNK.min(n - chunk * CHUNK);
            let mut out = BoundSweep {
                samples: 0,
                f2_vs_a_plus_b: f64::NEG_INFINITY,
                f2_vs_scaled: f64::NEG_INFINITY,
                scaled_samples: 0,
                f1_vs_bound: f64::NEG_INFINITY,
            };
            for _ in 0..len {
                let d = CanonicalParams::sample(&mut src);
                let d = CanonicalParams::new(d.dx, d.dy, d.dz.abs());
                let ang = sample_angles(&mut src);
                let fv = f_value(&d, &ang);
                let (sx, sy, sz, cz) = (d.dx.sin(), d.dy.sin(), d.dz.sin(), d.dz.cos());
                let ab = cz * sx + cz * sy;
                let f1max = sx * sy + ang.omega.cos() * (sx + sy) * sz;
                out.samples += 1;
                out.f2_vs_a_plus_b = out.f2_vs_a_plus_b.max(fv.f2 - ab);
                out.f1_vs_bound = out.f1_vs_bound.max(fv.f1 - f1max);
                if ang.omega <= FRAC_PI_2 {
                    out.scaled_samples += 1;
                    out.f2_vs_scaled = out.f2_vs_scaled.max(fv.f2 - ab * ang.omega.sin());
                }
            }
            out
        })
        .collect();
    parts.into_iter().fold(
        BoundSweep {
            samples: 0,
            f2_vs_a_plus_b: f64::NEG_INFINITY,
            f2_vs_scaled: f64::NEG_INFINITY,
            scaled_samples: 0,
            f1_vs_bound: f64::NEG_INFINITY,
        },
        |a, b| BoundSweep {
            samples: a.samples + b.samples,
            f2_vs_a_plus_b: a.f2_vs_a_plus_b.max(b.f2_vs_a_plus_b),
            f2_vs_scaled: a.f2_vs_scaled.max(b.f2_vs_scaled),
            scaled_samples: a.scaled_samples + b.scaled_samples,
            f1_vs_bound: a.f1_vs_bound.max(b.f1_vs_bound),
        },
    )
}

fn angles_from(x: &[f64; 5]) -> ObjectiveAngles {
    ObjectiveAngles {
        alpha: x[0],
        beta: x[1],
        theta: x[2],
        phi: x[3],
        omega: x[4],
    }
}

/// Compass search in the five angles, halving the step down to `min_step`.
fn refine(d: &CanonicalParams, mut x: [f64; 5], mut step: f64, min_step: f64) -> f64 {
    let eval = |x: &[f64; 5]| f_value(d, &angles_from(x)).f;
    let mut best = eval(&x);
    while step > min_step {
        let mut improved = false;
        for k in 0..5 {
            for dir in [1.0, -1.0] {
                let mut y = x;
                y[k] += dir * step;
                let v = eval(&y);
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Grid-plus-refinement estimate of `max f` over all five angles.
///
/// `points` grid points per axis; the best `seeds` grid points are refined.
pub fn grid_max_f(d: &CanonicalParams, points: usize, seeds: usize) -> f64 {
    let spans = [PI, 2.0 * PI, PI, 2.0 * PI, PI];
    let coord = |k: usize, i: usize| spans[k] * i as f64 / points as f64;
    let total = points.pow(5);
    let mut scored: Vec<(f64, [f64; 5])> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let x: [f64; 5] = std::array::from_fn(|k| {
                let i = rest % points;
                rest /= points;
                coord(k, i)
            });
            (f_value(d, &angles_from(&x)).f, x)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let step = PI / points as f64;
    scored
        .par_iter()
        .take(seeds)
        .map(|(_, x)| refine(d, *x, step, 1e-10))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}
