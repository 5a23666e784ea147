//! Model parameters, power-law weight sequences and the concrete edge
//! probability function.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GirgError, Result};
use crate::geometry::{check_dim, torus_distance_unchecked};

/// Decay exponent of the edge probability. `Infinite` is the threshold model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl Alpha {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Alpha::Infinite)
    }

    /// Parses a decimal value or `inf`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Alpha::Infinite);
        }
        t.parse::<f64>()
            .map(Alpha::Finite)
            .map_err(|_| GirgError::usage(format!("cannot parse alpha from {s:?}")))
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinite => write!(f, "inf"),
        }
    }
}

/// Parameters of a geometric inhomogeneous random graph.
///
/// For finite `alpha` an edge `{u, v}` at torus distance `r` is present with
/// probability `min(p_scale * (w_u w_v / (W r^d))^alpha, 1)`. For infinite
/// `alpha` it is present with probability `min(p_scale, 1)` iff
/// `r < tau_threshold * (w_u w_v / W)^(1/d)`.
///
/// `c_upper` is the constant of the upper bound the fast sampler relies on;
/// it must dominate `p_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirgParams {
    pub d: usize,
    pub alpha: Alpha,
    pub beta: f64,
    pub c_upper: f64,
    pub p_scale: f64,
    pub tau_threshold: f64,
}

impl GirgParams {
    /// Parameters with `p_scale = c_upper = tau_threshold = 1`.
    pub fn new(d: usize, alpha: Alpha, beta: f64) -> Result<Self> {
        let p = GirgParams {
            d,
            alpha,
            beta,
            c_upper: 1.0,
            p_scale: 1.0,
            tau_threshold: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Sets `p_scale` and raises `c_upper` to it if needed.
    pub fn with_p_scale(mut self, p_scale: f64) -> Result<Self> {
        self.p_scale = p_scale;
        self.c_upper = self.c_upper.max(p_scale);
        self.validate()?;
        Ok(self)
    }

    pub fn with_c_upper(mut self, c_upper: f64) -> Result<Self> {
        self.c_upper = c_upper;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau_threshold = tau;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        match self.alpha {
            Alpha::Finite(a) if !(a > 1.0 && a.is_finite()) => {
                return Err(GirgError::usage(format!(
                    "alpha must exceed 1 (or be inf), got {a}"
                )))
            }
            _ => {}
        }
        if !(self.beta > 2.0 && self.beta.is_finite()) {
            return Err(GirgError::usage(format!(
                "beta must exceed 2, got {}",
                self.beta
            )));
        }
        for (name, v) in [
            ("p_scale", self.p_scale),
            ("c_upper", self.c_upper),
            ("tau_threshold", self.tau_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GirgError::usage(format!("{name} must be positive, got {v}")));
            }
        }
        if self.p_scale > self.c_upper {
            return Err(GirgError::usage(format!(
                "p_scale {} exceeds c_upper {}",
                self.p_scale, self.c_upper
            )));
        }
        Ok(())
    }
}

/// A positive weight per vertex, with cached total and minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    weights: Vec<f64>,
    total: f64,
    w_min: f64,
}

impl WeightSequence {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(GirgError::usage("empty weight sequence"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(GirgError::usage(format!("weight {w} is not positive")));
        }
        let total = weights.iter().sum();
        let w_min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(WeightSequence {
            weights,
            total,
            w_min,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    pub fn w_max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

/// `w_v = delta * (n / v)^(1 / (beta - 1))` for `v = 1..=n`.
pub fn make_weights_fixed(n: usize, beta: f64, delta: f64) -> Result<WeightSequence> {
    if n == 0 {
        return Err(GirgError::usage("n must be at least 1"));
    }
    if !(beta > 2.0) || !(delta > 0.0) {
        return Err(GirgError::usage(format!(
            "fixed weights need beta > 2 and delta > 0, got beta={beta} delta={delta}"
        )));
    }
    let exp = 1.0 / (beta - 1.0);
    let nf = n as f64;
    let weights = (1..=n).map(|v| delta * (nf / v as f64).powf(exp)).collect();
    WeightSequence::new(weights)
}

/// Inverse of the Pareto CDF `F(z) = 1 - (z / w_min)^(1 - beta)`.
#[inline]
pub fn pareto_from_uniform(u: f64, beta: f64, w_min: f64) -> f64 {
    w_min * (1.0 - u).powf(1.0 / (1.0 - beta))
}

/// I.i.d. Pareto weights with minimum `w_min` and tail exponent `beta`.
pub fn sample_weights<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    w_min: f64,
    rng: &mut R,
) -> Result<WeightSequence> {
    if n == 0 {
        return Err(GirgError::usage("n must be at least 1"));
    }
    if !(beta > 2.0) || !(w_min > 0.0) {
        return Err(GirgError::usage(format!(
            "sampled weights need beta > 2 and w_min > 0, got beta={beta} w_min={w_min}"
        )));
    }
    let weights = (0..n)
        .map(|_| pareto_from_uniform(rng.gen::<f64>(), beta, w_min))
        .collect();
    WeightSequence::new(weights)
}

/// How a weight sequence is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    /// `delta * (n / v)^(1/(beta-1))`.
    Fixed { delta: f64 },
    /// I.i.d. Pareto with minimum `w_min`.
    Sampled { w_min: f64 },
}

impl WeightSpec {
    /// Builds `n` weights; sampled weights draw from the seed's weight stream.
    pub fn build(&self, n: usize, beta: f64, seed: u64) -> Result<WeightSequence> {
        match *self {
            WeightSpec::Fixed { delta } => make_weights_fixed(n, beta, delta),
            WeightSpec::Sampled { w_min } => {
                let mut rng = crate::rng::substream(seed, crate::rng::Stream::Weights, 0);
                sample_weights(n, beta, w_min, &mut rng)
            }
        }
    }
}

#[inline]
fn ipow(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= x;
    }
    acc
}

/// `x^alpha`, with repeated multiplication for small integral exponents.
#[inline]
fn pow_alpha(x: f64, alpha: f64) -> f64 {
    if alpha == alpha.trunc() && alpha <= 16.0 {
        ipow(x, alpha as u32)
    } else {
        x.powf(alpha)
    }
}

/// Edge probability as a function of the torus distance `r`.
#[inline]
pub fn edge_probability_at(w_u: f64, w_v: f64, r: f64, total: f64, params: &GirgParams) -> f64 {
    let ratio = w_u * w_v / total;
    match params.alpha {
        Alpha::Finite(alpha) => {
            let denom = ipow(r, params.d as u32);
            if denom == 0.0 {
                return 1.0;
            }
            (params.p_scale * pow_alpha(ratio / denom, alpha)).min(1.0)
        }
        Alpha::Infinite => {
            // r < tau ratio^(1/d), compared in the d-th power.
            if ipow(r, params.d as u32) < ipow(params.tau_threshold, params.d as u32) * ratio {
                params.p_scale.min(1.0)
            } else {
                0.0
            }
        }
    }
}

pub fn edge_probability(
    w_u: f64,
    w_v: f64,
    x_u: &[f64],
    x_v: &[f64],
    total: f64,
    params: &GirgParams,
) -> Result<f64> {
    if x_u.len() != params.d || x_v.len() != params.d {
        return Err(GirgError::usage("point dimension differs from params.d"));
    }
    if !(w_u > 0.0 && w_v > 0.0 && total > 0.0) {
        return Err(GirgError::usage("weights and total weight must be positive"));
    }
    Ok(edge_probability_at(
        w_u,
        w_v,
        torus_distance_unchecked(x_u, x_v),
        total,
        params,
    ))
}

/// `min(c_upper * (w_u w_v / W)^alpha / r^(alpha d), 1)`, the bound the fast
/// sampler uses for separated cell pairs. Finite `alpha` only.
#[inline]
pub fn probability_upper_bound(weight_ratio: f64, r: f64, alpha: f64, d: usize, c_upper: f64) -> f64 {
    let denom = ipow(r, d as u32);
    if denom == 0.0 {
        return 1.0;
    }
    (c_upper * pow_alpha(weight_ratio / denom, alpha)).min(1.0)
}

/// Outcome of [`PowerLawCheck::verify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawReport {
    pub ok: bool,
    /// Minimum over the lower-bound range of `#{w_v >= w} / (n w^(1-beta-eta))`.
    pub worst_ratio_low: f64,
    /// Maximum over the scan of `#{w_v >= w} / (n w^(1-beta+eta))`.
    pub worst_ratio_high: f64,
    pub thresholds: usize,
    /// Largest threshold where the lower bound was enforced. The asymptotic
    /// cutoff cannot be checked at fixed `n`; this finite proxy stands in.
    pub lower_bound_limit: f64,
}

/// Finite-`n` check of the power-law tail condition with configurable bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawCheck {
    pub c_low: f64,
    pub c_high: f64,
    pub grid_factor: f64,
}

impl Default for PowerLawCheck {
    fn default() -> Self {
        PowerLawCheck {
            c_low: 0.1,
            c_high: 10.0,
            grid_factor: 2.0,
        }
    }
}

impl PowerLawCheck {
    /// Scans thresholds `w_min * f^k` up to `n^(1/(beta-1))`. The upper
    /// bound is checked on every threshold; the lower bound only up to
    /// `(n / ln^2 n)^(1/(beta-1))`, where the expected tail count is still
    /// `ln^2 n` for a genuine power law.
    pub fn verify(&self, ws: &WeightSequence, beta: f64, eta: f64) -> Result<PowerLawReport> {
        if ws.is_empty() {
            return Err(GirgError::usage("empty weight sequence"));
        }
        if !(eta > 0.0) || !(beta > 1.0) || !(self.grid_factor > 1.0) {
            return Err(GirgError::usage("power-law check needs eta > 0, beta > 1"));
        }
        let n = ws.len() as f64;
        let mut sorted = ws.weights().to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let count_at_least = |w: f64| sorted.len() - sorted.partition_point(|&x| x < w);

        let top = n.powf(1.0 / (beta - 1.0)).max(ws.w_min());
        let ln_n = n.ln().max(1.0);
        let lower_limit = (n / (ln_n * ln_n)).powf(1.0 / (beta - 1.0)).max(ws.w_min());

        let mut worst_low = f64::INFINITY;
        let mut worst_high: f64 = 0.0;
        let mut thresholds = 0;
        let mut w = ws.w_min();
        while w <= top * (1.0 + 1e-12) {
            let count = count_at_least(w) as f64;
            thresholds += 1;
            worst_high = worst_high.max(count / (n * w.powf(1.0 - beta + eta)));
            if w <= lower_limit {
                worst_low = worst_low.min(count / (n * w.powf(1.0 - beta - eta)));
            }
            w *= self.grid_factor;
        }
        Ok(PowerLawReport {
            ok: worst_low >= self.c_low && worst_high <= self.c_high,
            worst_ratio_low: worst_low,
            worst_ratio_high: worst_high,
            thresholds,
            lower_bound_limit: lower_limit,
        })
    }
}

/// [`PowerLawCheck::verify`] with the default bands `[0.1, 10]`.
pub fn verify_power_law(ws: &WeightSequence, beta: f64, eta: f64) -> Result<PowerLawReport> {
    PowerLawCheck::default().verify(ws, beta, eta)
}

/// Sum of all weights `>= w`.
pub fn partial_weight_sum_above(ws: &WeightSequence, w: f64) -> f64 {
    ws.weights().iter().filter(|&&x| x >= w).sum()
}
