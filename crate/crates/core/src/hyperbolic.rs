//! Hyperbolic random graphs in the native polar model and through the
//! 1-dimensional GIRG sampler.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::error::{GirgError, Result};
use crate::geometry::Positions;
use crate::graph::Graph;
use crate::model::{Alpha, GirgParams, WeightSequence};
use crate::rng::{substream, Stream};
use crate::sampler::{sample_edges_observed, sample_naive_with, EdgeModel, NoTrials, SamplerOptions};

/// Largest `alpha_H * R` for which `cosh` stays finite with room to spare.
const MAX_COSH_ARG: f64 = 700.0;

/// Doublings of `c_upper` tried by the fast path before giving up.
const MAX_DOUBLINGS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicParams {
    pub n: usize,
    pub alpha_h: f64,
    pub c_h: f64,
    /// Temperature; 0 is the threshold model.
    pub t_h: f64,
    /// Disk radius `2 ln n + C_H`.
    pub radius: f64,
}

impl HyperbolicParams {
    pub fn new(n: usize, alpha_h: f64, c_h: f64, t_h: f64) -> Result<Self> {
        if n == 0 {
            return Err(GirgError::usage("n must be positive"));
        }
        let hp = HyperbolicParams {
            n,
            alpha_h,
            c_h,
            t_h,
            radius: 2.0 * (n as f64).ln() + c_h,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_h > 0.5 && self.alpha_h.is_finite()) {
            return Err(GirgError::usage(format!("alpha_H must exceed 1/2, got {}", self.alpha_h)));
        }
        if !(self.t_h >= 0.0 && self.t_h.is_finite()) {
            return Err(GirgError::usage(format!("T_H must be non-negative, got {}", self.t_h)));
        }
        if !self.c_h.is_finite() {
            return Err(GirgError::usage("C_H must be finite"));
        }
        let expected = 2.0 * (self.n as f64).ln() + self.c_h;
        if (self.radius - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(GirgError::usage(format!(
                "radius {} inconsistent with n and C_H (expected {expected})",
                self.radius
            )));
        }
        if !(self.radius > 0.0) {
            return Err(GirgError::usage(format!("disk radius {} must be positive", self.radius)));
        }
        if self.alpha_h * self.radius > MAX_COSH_ARG {
            return Err(GirgError::usage("alpha_H * R too large for double precision"));
        }
        Ok(())
    }

    /// Power-law exponent `2 alpha_H + 1` of the induced weights.
    pub fn beta(&self) -> f64 {
        2.0 * self.alpha_h + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPoint {
    pub r: f64,
    pub phi: f64,
}

impl PolarPoint {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) || !(0.0..TAU).contains(&phi) {
            return Err(GirgError::usage(format!("polar point ({r}, {phi}) out of range")));
        }
        Ok(PolarPoint { r, phi })
    }
}

/// Radius with density `alpha sinh(alpha r) / (cosh(alpha R) - 1)` on `[0, R]`,
/// by inversion of `u` in `[0, 1)`.
pub fn radius_from_uniform(u: f64, hp: &HyperbolicParams) -> f64 {
    let a = hp.alpha_h;
    let y = 1.0 + u * ((a * hp.radius).cosh() - 1.0);
    (y.acosh() / a).min(hp.radius)
}

pub fn sample_radius<R: Rng + ?Sized>(hp: &HyperbolicParams, rng: &mut R) -> f64 {
    radius_from_uniform(rng.gen::<f64>(), hp)
}

/// `Pr[r <= x] = (cosh(alpha x) - 1) / (cosh(alpha R) - 1)`.
pub fn radius_cdf(x: f64, hp: &HyperbolicParams) -> f64 {
    let a = hp.alpha_h;
    ((a * x.clamp(0.0, hp.radius)).cosh() - 1.0) / ((a * hp.radius).cosh() - 1.0)
}

pub fn hyperbolic_distance(p: &PolarPoint, q: &PolarPoint) -> f64 {
    let half = (p.phi - q.phi) / 2.0;
    // 1 - cos x = 2 sin^2(x / 2), accurate for small angles.
    let one_minus_cos = 2.0 * half.sin().powi(2);
    let arg = (p.r - q.r).cosh() + one_minus_cos * p.r.sinh() * q.r.sinh();
    arg.max(1.0).acosh()
}

pub fn connection_prob(dist: f64, hp: &HyperbolicParams) -> f64 {
    if hp.t_h == 0.0 {
        if dist <= hp.radius {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 / (1.0 + ((dist - hp.radius) / (2.0 * hp.t_h)).exp())
    }
}

/// The angle `phi_0` at which `d((r_u, phi_0), (r_v, 0)) = R`, by bisection.
/// Returns `pi` when even antipodal points are within distance `R`.
pub fn critical_angle(r_u: f64, r_v: f64, hp: &HyperbolicParams) -> Result<f64> {
    let big_r = hp.radius;
    let tol = 1e-12 * big_r;
    if !(0.0..=big_r + tol).contains(&r_u) || !(0.0..=big_r + tol).contains(&r_v) {
        return Err(GirgError::usage("radii must lie in [0, R]"));
    }
    if r_u + r_v < big_r - tol {
        return Err(GirgError::usage("critical angle needs r_u + r_v >= R"));
    }
    let dist = |phi: f64| hyperbolic_distance(&PolarPoint { r: r_u, phi }, &PolarPoint { r: r_v, phi: 0.0 });
    if dist(PI) <= big_r {
        return Ok(PI);
    }
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) <= big_r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Radii first, then angles, each from its own stream.
pub fn sample_points(hp: &HyperbolicParams, seed: u64) -> Vec<PolarPoint> {
    let mut radii = substream(seed, Stream::Radii, 0);
    let mut angles = substream(seed, Stream::Angles, 0);
    let r: Vec<f64> = (0..hp.n).map(|_| sample_radius(hp, &mut radii)).collect();
    r.into_iter()
        .map(|r| PolarPoint {
            r,
            phi: angles.gen::<f64>() * TAU,
        })
        .filter_map(|mut p| {
            // gen::<f64>() * TAU can round up to TAU.
            if p.phi >= TAU {
                p.phi = 0.0;
            }
            Some(p)
        })
        .collect()
}

/// Native edge law on fixed points.
struct NativeModel<'a> {
    hp: &'a HyperbolicParams,
    points: &'a [PolarPoint],
}

impl EdgeModel for NativeModel<'_> {
    #[inline]
    fn probability(&self, u: u32, v: u32) -> f64 {
        connection_prob(
            hyperbolic_distance(&self.points[u as usize], &self.points[v as usize]),
            self.hp,
        )
    }
}

fn check_points(hp: &HyperbolicParams, points: &[PolarPoint]) -> Result<()> {
    hp.validate()?;
    if points.len() != hp.n {
        return Err(GirgError::usage(format!("{} points for n = {}", points.len(), hp.n)));
    }
    let tol = 1e-12 * hp.radius;
    if let Some(p) = points
        .iter()
        .find(|p| !(p.r >= 0.0 && p.r <= hp.radius + tol) || !(0.0..TAU).contains(&p.phi))
    {
        return Err(GirgError::usage(format!("point ({}, {}) outside the disk", p.r, p.phi)));
    }
    Ok(())
}

/// One coin per pair with the native connection probability.
pub fn sample_hrg_edges_naive(hp: &HyperbolicParams, points: &[PolarPoint], seed: u64) -> Result<Graph> {
    check_points(hp, points)?;
    Ok(sample_naive_with(&NativeModel { hp, points }, points.len(), seed))
}

#[derive(Debug, Clone)]
pub struct HrgSample {
    pub points: Vec<PolarPoint>,
    pub graph: Graph,
}

pub fn sample_hrg_naive(hp: &HyperbolicParams, seed: u64) -> Result<HrgSample> {
    hp.validate()?;
    let points = sample_points(hp, seed);
    let graph = sample_hrg_edges_naive(hp, &points, seed)?;
    Ok(HrgSample { points, graph })
}

/// Weights `e^((R - r)/2)` and positions `phi / (2 pi)` of a 1-dimensional
/// GIRG, with `alpha = 1/T_H` (infinite at `T_H = 0`) and
/// `beta = 2 alpha_H + 1`. The returned parameters carry `c_upper = 16` and,
/// for `T_H = 0`, a threshold constant covering every hyperbolic edge.
pub fn map_to_girg(
    hp: &HyperbolicParams,
    points: &[PolarPoint],
) -> Result<(GirgParams, WeightSequence, Positions)> {
    check_points(hp, points)?;
    let weights: Vec<f64> = points
        .iter()
        .map(|p| ((hp.radius - p.r.min(hp.radius)) / 2.0).exp())
        .collect();
    let ws = WeightSequence::new(weights)?;
    let coords: Vec<f64> = points.iter().map(|p| (p.phi / TAU).min(1.0 - f64::EPSILON / 2.0)).collect();
    let positions = Positions::new(1, coords)?;
    let beta = hp.beta();
    let params = if hp.t_h == 0.0 {
        // d <= R forces phi <= pi e^((R - r_u - r_v)/2), i.e. a torus distance
        // of at most (w_u w_v / W) * W e^(-R/2) / 2.
        let tau = 1.01 * ws.total() * (-hp.radius / 2.0).exp() / 2.0;
        GirgParams::new(1, Alpha::Infinite, beta)?.with_tau(tau)?
    } else {
        GirgParams::new(1, Alpha::Finite(1.0 / hp.t_h), beta)
            .map_err(|_| GirgError::usage(format!("fast path needs 0 <= T_H < 1, got {}", hp.t_h)))?
            .with_c_upper(16.0)?
    };
    Ok((params, ws, positions))
}

/// Inverse of the mapping: `r = R - 2 ln w`, `phi = 2 pi x`.
pub fn girg_to_polar(hp: &HyperbolicParams, weight: f64, x: f64) -> PolarPoint {
    PolarPoint {
        r: hp.radius - 2.0 * weight.ln(),
        phi: x * TAU,
    }
}

/// Outcome details of the fast path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FastPathInfo {
    /// Final `c_upper` (finite temperature) after doublings.
    pub c_upper: f64,
    /// Number of sampler runs, including the successful one.
    pub attempts: u32,
}

/// Native edge law sampled through the GIRG sampler on the mapped instance.
/// For finite temperature `c_upper` starts at 16 and doubles, with a fresh
/// random stream, whenever a candidate exceeds the bound.
pub fn sample_hrg_edges_fast(
    hp: &HyperbolicParams,
    points: &[PolarPoint],
    seed: u64,
    options: &SamplerOptions,
) -> Result<(Graph, FastPathInfo)> {
    let (mut params, ws, positions) = map_to_girg(hp, points)?;
    let model = NativeModel { hp, points };
    let mut attempt = 0;
    loop {
        let opts = SamplerOptions {
            attempt,
            ..*options
        };
        match sample_edges_observed(&params, &ws, &positions, &model, seed, &opts, &mut NoTrials) {
            Ok((graph, _)) => {
                return Ok((
                    graph,
                    FastPathInfo {
                        c_upper: params.c_upper,
                        attempts: attempt + 1,
                    },
                ))
            }
            Err(GirgError::ModelConfig(msg)) if !params.alpha.is_infinite() => {
                if attempt >= MAX_DOUBLINGS {
                    return Err(GirgError::ModelConfig(format!(
                        "c_upper still too small after {MAX_DOUBLINGS} doublings: {msg}"
                    )));
                }
                params.c_upper *= 2.0;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn sample_hrg_fast(hp: &HyperbolicParams, seed: u64, options: &SamplerOptions) -> Result<HrgSample> {
    hp.validate()?;
    let points = sample_points(hp, seed);
    let (graph, _) = sample_hrg_edges_fast(hp, &points, seed, options)?;
    Ok(HrgSample { points, graph })
}
