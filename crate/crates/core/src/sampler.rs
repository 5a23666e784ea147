//! Expected-linear-time sampling.
//!
//! Vertices are split into weight layers of doubling weight. For every pair
//! of layers `i <= j` the torus product is partitioned into cell pairs
//! (see [`crate::spatial_index`]) of volume about `w_i w_j / W`. Touching
//! pairs at that volume have edge probabilities of order one and are
//! enumerated exhaustively. Separated pairs share one probability upper bound
//! `p_bar`; candidate pairs are drawn with geometric jumps at rate `p_bar`
//! and accepted with probability `p_uv / p_bar`. The resulting law is exactly
//! the independent-coin model.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GirgError, Result};
use crate::geometry::{cell_distance_unchecked, level_for_volume, torus_distance_unchecked, Positions};
use crate::graph::Graph;
use crate::model::{edge_probability_at, probability_upper_bound, Alpha, GirgParams, WeightSequence, WeightSpec};
use crate::rng::{layer_pair_key, substream, Stream};
use crate::spatial_index::{walk_partition, PairKind, PartitionVisitor, PointIndex, RankedCell};

/// Relative slack when comparing `p_uv` against `p_bar`, absorbing rounding
/// in the two formulas.
const BOUND_SLACK: f64 = 1e-9;

/// Number of Bernoulli(`p`) trials up to and including the first success.
pub fn geometric_variate<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(GirgError::usage(format!("geometric parameter {p} outside (0, 1]")));
    }
    Ok(geometric_with_log(log_failure(p), rng))
}

/// `ln(1 - p)`, accurate for tiny `p`.
#[inline]
fn log_failure(p: f64) -> f64 {
    (-p).ln_1p()
}

/// `ceil(ln(U) / ln(1 - p))` for `U` uniform in `(0, 1)`, saturating at
/// `u64::MAX`.
#[inline]
fn geometric_with_log<R: Rng + ?Sized>(log_q: f64, rng: &mut R) -> u64 {
    if log_q == f64::NEG_INFINITY {
        return 1;
    }
    let u = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let g = (u.ln() / log_q).ceil();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        (g as u64).max(1)
    }
}

/// Vertices grouped by dyadic weight bands `[w_min 2^k, w_min 2^(k+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightLayers {
    w0: f64,
    layers: Vec<Vec<u32>>,
}

impl WeightLayers {
    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// Number of layers `L`, including empty intermediate ones.
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Vertices of layer `k` (0-based; covers weights `[lower(k), upper(k))`).
    pub fn layer(&self, k: usize) -> &[u32] {
        &self.layers[k]
    }

    pub fn lower(&self, k: usize) -> f64 {
        self.w0 * (k as f64).exp2()
    }

    pub fn upper(&self, k: usize) -> f64 {
        self.w0 * ((k + 1) as f64).exp2()
    }
}

/// Single pass bucketing by `floor(log2(w_v / w_min))`.
pub fn build_weight_layers(ws: &WeightSequence) -> WeightLayers {
    let w0 = ws.w_min();
    let band = |w: f64| -> usize {
        let mut k = (w / w0).log2().floor().max(0.0) as usize;
        while k > 0 && w < w0 * (k as f64).exp2() {
            k -= 1;
        }
        while w >= w0 * ((k + 1) as f64).exp2() {
            k += 1;
        }
        k
    };
    let mut layers: Vec<Vec<u32>> = Vec::new();
    for (v, &w) in ws.weights().iter().enumerate() {
        let k = band(w);
        if k >= layers.len() {
            layers.resize_with(k + 1, Vec::new);
        }
        layers[k].push(v as u32);
    }
    WeightLayers { w0, layers }
}

/// An edge probability for concrete vertex pairs.
pub trait EdgeModel: Sync {
    fn probability(&self, u: u32, v: u32) -> f64;
}

/// The concrete model: probabilities from [`edge_probability_at`].
#[derive(Debug, Clone, Copy)]
pub struct GirgEdgeModel<'a> {
    pub params: &'a GirgParams,
    pub weights: &'a WeightSequence,
    pub positions: &'a Positions,
}

impl EdgeModel for GirgEdgeModel<'_> {
    #[inline]
    fn probability(&self, u: u32, v: u32) -> f64 {
        let w = self.weights.weights();
        let r = torus_distance_unchecked(
            self.positions.point(u as usize),
            self.positions.point(v as usize),
        );
        edge_probability_at(w[u as usize], w[v as usize], r, self.weights.total(), self.params)
    }
}

/// Hooks for instrumentation. Every coin flip is reported exactly once.
pub trait TrialObserver {
    /// A coin with success probability `p` was flipped for `{u, v}`.
    /// `bound` is `Some(p_bar)` for candidates of a separated cell pair.
    fn coin(&mut self, u: u32, v: u32, p: f64, bound: Option<f64>);
}

/// Observer that does nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTrials;

impl TrialObserver for NoTrials {
    #[inline]
    fn coin(&mut self, _: u32, _: u32, _: f64, _: Option<f64>) {}
}

/// Work counters of one sampler run.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplerCounters {
    pub layers: usize,
    pub layer_pairs: usize,
    pub type1_pairs: usize,
    pub type2_pairs: usize,
    pub coins: usize,
    pub candidates: usize,
}

impl SamplerCounters {
    fn add(&mut self, o: &SamplerCounters) {
        self.layer_pairs += o.layer_pairs;
        self.type1_pairs += o.type1_pairs;
        self.type2_pairs += o.type2_pairs;
        self.coins += o.coins;
        self.candidates += o.candidates;
    }
}

/// Options for [`sample_edges`].
#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    /// Worker threads for layer pairs; 1 runs sequentially.
    pub threads: usize,
    /// Distinguishes retries of the same seed (fresh substreams per attempt).
    pub attempt: u32,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            threads: 1,
            attempt: 0,
        }
    }
}

struct LayerPairTask<'a, M, O> {
    model: &'a M,
    left: &'a PointIndex,
    right: &'a PointIndex,
    same_layer: bool,
    weight_ratio: f64,
    alpha: Alpha,
    d: usize,
    c_upper: f64,
    rng: ChaCha8Rng,
    edges: Vec<(u32, u32)>,
    observer: &'a mut O,
    counters: SamplerCounters,
    violation: Option<(u32, u32, f64, f64)>,
}

impl<M: EdgeModel, O: TrialObserver> LayerPairTask<'_, M, O> {
    #[inline]
    fn coin(&mut self, u: u32, v: u32, p: f64) {
        self.counters.coins += 1;
        self.observer.coin(u, v, p, None);
        if p >= 1.0 || (p > 0.0 && self.rng.gen::<f64>() < p) {
            self.edges.push((u.min(v), u.max(v)));
        }
    }

    fn exhaustive(&mut self, a: &[u32], b: &[u32]) {
        for &u in a {
            for &v in b {
                if self.same_layer && u >= v {
                    continue;
                }
                let p = self.model.probability(u, v);
                self.coin(u, v, p);
            }
        }
    }

    fn skip_sample(&mut self, a: &[u32], b: &[u32], dist: f64) {
        let Alpha::Finite(alpha) = self.alpha else {
            return;
        };
        let p_bar = probability_upper_bound(self.weight_ratio, dist, alpha, self.d, self.c_upper);
        if !(p_bar > 0.0) {
            return;
        }
        let log_q = log_failure(p_bar);
        let cols = b.len() as u64;
        let total = a.len() as u64 * cols;
        let mut r = geometric_with_log(log_q, &mut self.rng);
        while r <= total {
            let idx = r - 1;
            let u = a[(idx / cols) as usize];
            let v = b[(idx % cols) as usize];
            r = r.saturating_add(geometric_with_log(log_q, &mut self.rng));
            if self.same_layer && u > v {
                continue;
            }
            self.counters.candidates += 1;
            let p = self.model.probability(u, v);
            self.counters.coins += 1;
            self.observer.coin(u, v, p, Some(p_bar));
            if p > p_bar * (1.0 + BOUND_SLACK) {
                self.violation.get_or_insert((u, v, p, p_bar));
                continue;
            }
            if self.rng.gen::<f64>() * p_bar < p {
                self.edges.push((u.min(v), u.max(v)));
            }
        }
    }
}

impl<M: EdgeModel, O: TrialObserver> PartitionVisitor for LayerPairTask<'_, M, O> {
    #[inline]
    fn keep(&mut self, a: &RankedCell, b: &RankedCell) -> bool {
        !self.left.range_by_rank(a.cell.level(), a.rank).is_empty()
            && !self.right.range_by_rank(b.cell.level(), b.rank).is_empty()
    }

    fn visit(&mut self, a: &RankedCell, b: &RankedCell, kind: PairKind) {
        let left = self.left;
        let right = self.right;
        let pa = left.points_in(left.range_by_rank(a.cell.level(), a.rank));
        let pb = right.points_in(right.range_by_rank(b.cell.level(), b.rank));
        match kind {
            PairKind::TypeI => {
                self.counters.type1_pairs += 1;
                self.exhaustive(pa, pb);
            }
            PairKind::TypeII => {
                if self.alpha.is_infinite() {
                    return;
                }
                self.counters.type2_pairs += 1;
                self.skip_sample(pa, pb, cell_distance_unchecked(&a.cell, &b.cell));
            }
        }
    }
}

/// Per-layer point indices and layer bookkeeping shared by all layer pairs.
struct Plan<'a, M> {
    params: &'a GirgParams,
    model: &'a M,
    layers: WeightLayers,
    indices: Vec<Option<PointIndex>>,
    total: f64,
    threshold_scale: f64,
    seed: u64,
    attempt: u32,
}

impl<M: EdgeModel> Plan<'_, M> {
    fn pairs(&self) -> Vec<(usize, usize)> {
        let l = self.layers.len();
        (0..l)
            .flat_map(|i| (i..l).map(move |j| (i, j)))
            .filter(|&(i, j)| self.indices[i].is_some() && self.indices[j].is_some())
            .collect()
    }

    fn run_pair<O: TrialObserver>(
        &self,
        i: usize,
        j: usize,
        observer: &mut O,
    ) -> Result<(Vec<(u32, u32)>, SamplerCounters)> {
        let d = self.params.d;
        let weight_ratio = self.layers.upper(i) * self.layers.upper(j) / self.total;
        let nu = (self.threshold_scale * weight_ratio).min(1.0);
        let base = level_for_volume(nu, d)?;
        let mut task = LayerPairTask {
            model: self.model,
            left: self.indices[i].as_ref().expect("nonempty layer"),
            right: self.indices[j].as_ref().expect("nonempty layer"),
            same_layer: i == j,
            weight_ratio,
            alpha: self.params.alpha,
            d,
            c_upper: self.params.c_upper,
            rng: substream(self.seed, Stream::LayerPair, layer_pair_key(i, j, self.attempt)),
            edges: Vec::new(),
            observer,
            counters: SamplerCounters {
                layer_pairs: 1,
                ..Default::default()
            },
            violation: None,
        };
        walk_partition(d, base, &mut task);
        if let Some((u, v, p, p_bar)) = task.violation {
            return Err(GirgError::ModelConfig(format!(
                "edge probability {p} of ({u}, {v}) exceeds the sampler bound {p_bar}; increase c_upper"
            )));
        }
        Ok((task.edges, task.counters))
    }
}

fn check_inputs(params: &GirgParams, ws: &WeightSequence, positions: &Positions) -> Result<()> {
    params.validate()?;
    let n = ws.len();
    if positions.len() != n || positions.dim() != params.d {
        return Err(GirgError::usage(format!(
            "{} positions of dimension {} for {n} weights in dimension {}",
            positions.len(),
            positions.dim(),
            params.d
        )));
    }
    if n > u32::MAX as usize {
        return Err(GirgError::usage("too many vertices"));
    }
    Ok(())
}

/// Samples the edge set for fixed weights and positions, with an arbitrary
/// edge model bounded as the parameters declare: for finite `alpha`,
/// `p_uv <= min(c_upper (w_u w_v / W)^alpha / r^(alpha d), 1)`; for infinite
/// `alpha`, `p_uv = 0` whenever `r >= max(1, tau) (w_u w_v / W)^(1/d)`.
///
/// The observer sees every coin. It is only used when `options.threads == 1`.
/// Returns [`GirgError::ModelConfig`] if a candidate's probability exceeds
/// the bound.
pub fn sample_edges_observed<M: EdgeModel, O: TrialObserver>(
    params: &GirgParams,
    ws: &WeightSequence,
    positions: &Positions,
    model: &M,
    seed: u64,
    options: &SamplerOptions,
    observer: &mut O,
) -> Result<(Graph, SamplerCounters)> {
    check_inputs(params, ws, positions)?;
    let n = ws.len();
    let d = params.d;
    let total = ws.total();
    let layers = build_weight_layers(ws);
    let w0 = layers.w0();
    let indices: Vec<Option<PointIndex>> = (0..layers.len())
        .map(|k| {
            if layers.layer(k).is_empty() {
                Ok(None)
            } else {
                let nu = (layers.upper(k) * w0 / total).min(1.0);
                PointIndex::build(positions, layers.layer(k), nu).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let threshold_scale = match params.alpha {
        Alpha::Infinite => params.tau_threshold.max(1.0).powi(d as i32),
        Alpha::Finite(_) => 1.0,
    };
    let plan = Plan {
        params,
        model,
        layers,
        indices,
        total,
        threshold_scale,
        seed,
        attempt: options.attempt,
    };
    let pairs = plan.pairs();

    let results: Vec<(Vec<(u32, u32)>, SamplerCounters)> = if options.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| GirgError::usage(format!("thread pool: {e}")))?;
        pool.install(|| {
            pairs
                .par_iter()
                .map(|&(i, j)| plan.run_pair(i, j, &mut NoTrials))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        pairs
            .iter()
            .map(|&(i, j)| plan.run_pair(i, j, observer))
            .collect::<Result<Vec<_>>>()?
    };

    let mut counters = SamplerCounters {
        layers: plan.layers.len(),
        ..Default::default()
    };
    let mut edges = Vec::with_capacity(results.iter().map(|r| r.0.len()).sum());
    for (e, c) in results {
        edges.extend(e);
        counters.add(&c);
    }
    edges.sort_unstable();
    debug_assert!(edges.windows(2).all(|w| w[0] != w[1]), "pair sampled twice");
    Ok((Graph::from_sorted_unique(n, edges), counters))
}

/// Fast edge sampling for fixed positions under the GIRG probability.
pub fn sample_girg_edges(
    params: &GirgParams,
    ws: &WeightSequence,
    positions: &Positions,
    seed: u64,
    options: &SamplerOptions,
) -> Result<Graph> {
    let model = GirgEdgeModel {
        params,
        weights: ws,
        positions,
    };
    sample_edges_observed(params, ws, positions, &model, seed, options, &mut NoTrials).map(|r| r.0)
}

/// `n` i.i.d. uniform points of the torus from the seed's position stream.
pub fn sample_positions(n: usize, d: usize, seed: u64) -> Result<Positions> {
    crate::geometry::check_dim(d)?;
    let mut rng = substream(seed, Stream::Positions, 0);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>()).collect();
    Ok(Positions::from_raw(d, coords))
}

/// Positions together with the sampled graph.
#[derive(Debug, Clone)]
pub struct GirgSample {
    pub positions: Positions,
    pub graph: Graph,
}

/// Draws positions and then edges with the fast sampler.
pub fn sample_girg(
    params: &GirgParams,
    ws: &WeightSequence,
    seed: u64,
    options: &SamplerOptions,
) -> Result<GirgSample> {
    params.validate()?;
    let positions = sample_positions(ws.len(), params.d, seed)?;
    let graph = sample_girg_edges(params, ws, &positions, seed, options)?;
    Ok(GirgSample { positions, graph })
}

/// One coin per unordered pair, in `(u, v)` lexicographic order.
pub fn sample_naive_with<M: EdgeModel>(model: &M, n: usize, seed: u64) -> Graph {
    let mut rng = substream(seed, Stream::Naive, 0);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            let p = model.probability(u, v);
            if p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_sorted_unique(n, edges)
}

/// The quadratic reference sampler.
pub fn sample_girg_naive(
    params: &GirgParams,
    ws: &WeightSequence,
    positions: &Positions,
    seed: u64,
) -> Result<Graph> {
    check_inputs(params, ws, positions)?;
    let model = GirgEdgeModel {
        params,
        weights: ws,
        positions,
    };
    Ok(sample_naive_with(&model, ws.len(), seed))
}

/// One measured size of [`expected_runtime_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    /// Best wall time over the repetitions, in seconds.
    pub seconds: f64,
    pub edges: usize,
    /// `seconds / previous seconds`; absent for the first row.
    pub time_ratio: Option<f64>,
}

/// Times [`sample_girg`] (positions and edges; weights excluded) for each
/// `n`, keeping the minimum over `repetitions` runs.
pub fn expected_runtime_probe(
    n_values: &[usize],
    params: &GirgParams,
    weights: &WeightSpec,
    seed: u64,
    repetitions: usize,
    options: &SamplerOptions,
) -> Result<Vec<ProbeRow>> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GirgError::usage("n values must be strictly increasing"));
    }
    let mut rows: Vec<ProbeRow> = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let ws = weights.build(n, params.beta, seed)?;
        let mut best = f64::INFINITY;
        let mut edges = 0;
        for rep in 0..repetitions.max(1) {
            let start = Instant::now();
            let s = sample_girg(params, &ws, seed.wrapping_add(rep as u64), options)?;
            best = best.min(start.elapsed().as_secs_f64());
            edges = s.graph.num_edges();
        }
        let time_ratio = rows.last().map(|r| best / r.seconds);
        rows.push(ProbeRow {
            n,
            seconds: best,
            edges,
            time_ratio,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_weights_fixed;
    use std::collections::HashMap;

    #[test]
    fn geometric_certain_success() {
        let mut rng = substream(3, Stream::Misc, 0);
        for _ in 0..100 {
            assert_eq!(geometric_variate(1.0, &mut rng).unwrap(), 1);
        }
        assert!(geometric_variate(0.0, &mut rng).is_err());
        assert!(geometric_variate(1.5, &mut rng).is_err());
    }

    #[test]
    fn geometric_pmf_and_mean() {
        let mut rng = substream(4, Stream::Misc, 0);
        let draws = 1_000_000;
        let twos = (0..draws)
            .filter(|_| geometric_variate(0.5, &mut rng).unwrap() == 2)
            .count() as f64;
        let p = 0.25;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((twos / draws as f64 - p).abs() < 3.0 * se);

        let sum: f64 = (0..draws)
            .map(|_| geometric_variate(0.1, &mut rng).unwrap() as f64)
            .sum();
        // Geo(0.1) variance (1 - p) / p^2 = 90.
        let se = (90.0 / draws as f64).sqrt();
        assert!((sum / draws as f64 - 10.0).abs() < 3.0 * se);
    }

    #[test]
    fn tiny_probabilities_saturate() {
        let mut rng = substream(5, Stream::Misc, 0);
        let g = geometric_variate(1e-300, &mut rng).unwrap();
        assert!(g > 1 << 60);
    }

    #[test]
    fn weight_layer_examples() {
        let ws = WeightSequence::new(vec![1.0, 1.5, 2.0, 3.9, 4.0]).unwrap();
        let l = build_weight_layers(&ws);
        assert_eq!(l.len(), 3);
        assert_eq!(l.layer(0), &[0, 1]);
        assert_eq!(l.layer(1), &[2, 3]);
        assert_eq!(l.layer(2), &[4]);

        let ws = WeightSequence::new(vec![2.0; 7]).unwrap();
        let l = build_weight_layers(&ws);
        assert_eq!(l.len(), 1);
        assert_eq!(l.layer(0).len(), 7);

        let ws = make_weights_fixed(10_000, 2.5, 1.0).unwrap();
        let l = build_weight_layers(&ws);
        assert!(l.len() as f64 <= 1.0 + ws.w_max().log2());
        let mut seen = vec![false; ws.len()];
        for k in 0..l.len() {
            for &v in l.layer(k) {
                let w = ws.weights()[v as usize];
                assert!(l.lower(k) <= w && w < l.upper(k));
                assert!(!seen[v as usize]);
                seen[v as usize] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn single_vertex_has_no_edges() {
        let params = GirgParams::new(2, Alpha::Finite(2.0), 2.5).unwrap();
        let ws = WeightSequence::new(vec![1.0]).unwrap();
        let s = sample_girg(&params, &ws, 1, &SamplerOptions::default()).unwrap();
        assert_eq!(s.graph.num_edges(), 0);
        assert_eq!(s.positions.len(), 1);
    }

    #[test]
    fn huge_weights_give_triangle() {
        let params = GirgParams::new(1, Alpha::Finite(2.0), 2.5).unwrap();
        let ws = WeightSequence::new(vec![1e6; 3]).unwrap();
        let pos = Positions::new(1, vec![0.0, 0.3, 0.6]).unwrap();
        let g = sample_girg_naive(&params, &ws, &pos, 9).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        let g = sample_girg_edges(&params, &ws, &pos, 9, &SamplerOptions::default()).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn far_apart_threshold_graph_is_empty() {
        let params = GirgParams::new(1, Alpha::Infinite, 2.5).unwrap();
        let ws = WeightSequence::new(vec![1.0; 4]).unwrap();
        // Threshold radius is w^2 / W = 1/4; all gaps are exactly 1/4.
        let pos = Positions::new(1, vec![0.0, 0.25, 0.5, 0.75]).unwrap();
        assert_eq!(sample_girg_naive(&params, &ws, &pos, 1).unwrap().num_edges(), 0);
        let g = sample_girg_edges(&params, &ws, &pos, 1, &SamplerOptions::default()).unwrap();
        assert_eq!(g.num_edges(), 0);
    }

    struct Recorder {
        counts: HashMap<(u32, u32), u32>,
        worst_ratio: f64,
        min_ratio: f64,
    }

    impl TrialObserver for Recorder {
        fn coin(&mut self, u: u32, v: u32, p: f64, bound: Option<f64>) {
            *self.counts.entry((u.min(v), u.max(v))).or_default() += 1;
            if let Some(b) = bound {
                self.worst_ratio = self.worst_ratio.max(p / b);
                self.min_ratio = self.min_ratio.min(p / b);
            }
        }
    }

    fn record(params: &GirgParams, n: usize, seed: u64) -> Recorder {
        let ws = WeightSpec::Sampled { w_min: 1.0 }.build(n, params.beta, seed).unwrap();
        let pos = sample_positions(n, params.d, seed).unwrap();
        let model = GirgEdgeModel {
            params,
            weights: &ws,
            positions: &pos,
        };
        let mut rec = Recorder {
            counts: HashMap::new(),
            worst_ratio: 0.0,
            min_ratio: 1.0,
        };
        sample_edges_observed(params, &ws, &pos, &model, seed, &SamplerOptions::default(), &mut rec)
            .unwrap();
        rec
    }

    #[test]
    fn no_pair_flipped_twice_and_ratio_bounded() {
        for d in [1, 2, 3] {
            for alpha in [Alpha::Finite(1.5), Alpha::Finite(3.0), Alpha::Infinite] {
                let params = GirgParams::new(d, alpha, 2.5).unwrap();
                let rec = record(&params, 3000, 11 + d as u64);
                assert!(rec.counts.values().all(|&c| c == 1), "d={d} {alpha}");
                assert!(rec.worst_ratio <= 1.0 + 1e-9);
                assert!(rec.min_ratio > 0.0);
            }
        }
    }

    #[test]
    fn exhaustive_for_small_n_covers_all_pairs() {
        // With every layer pair at the root volume all pairs are TYPE_I.
        let params = GirgParams::new(2, Alpha::Finite(2.0), 2.5).unwrap();
        let rec = record(&params, 3, 2);
        assert_eq!(rec.counts.len(), 3);
    }

    #[test]
    fn threshold_edges_respect_radius() {
        for d in [1, 2] {
            let params = GirgParams::new(d, Alpha::Infinite, 2.5)
                .unwrap()
                .with_tau(1.7)
                .unwrap();
            let ws = WeightSpec::Sampled { w_min: 1.0 }.build(20_000, 2.5, 5).unwrap();
            let s = sample_girg(&params, &ws, 5, &SamplerOptions::default()).unwrap();
            assert!(s.graph.num_edges() > 0);
            let w = ws.weights();
            for &(u, v) in s.graph.edges() {
                let r = torus_distance_unchecked(s.positions.point(u as usize), s.positions.point(v as usize));
                let limit = 1.7 * (w[u as usize] * w[v as usize] / ws.total()).powf(1.0 / d as f64);
                assert!(r < limit);
            }
        }
    }

    #[test]
    fn threshold_fast_equals_naive_edge_set() {
        // With p_scale = 1 the threshold model is deterministic given positions.
        for d in [1, 2, 3] {
            let params = GirgParams::new(d, Alpha::Infinite, 2.5).unwrap().with_tau(0.6).unwrap();
            let ws = WeightSpec::Sampled { w_min: 1.0 }.build(2000, 2.5, 8).unwrap();
            let pos = sample_positions(2000, d, 8).unwrap();
            let fast = sample_girg_edges(&params, &ws, &pos, 8, &SamplerOptions::default()).unwrap();
            let naive = sample_girg_naive(&params, &ws, &pos, 8).unwrap();
            assert_eq!(fast.edges(), naive.edges());
        }
    }

    #[test]
    fn undersized_c_upper_is_reported() {
        struct Greedy;
        impl EdgeModel for Greedy {
            fn probability(&self, _: u32, _: u32) -> f64 {
                1.0
            }
        }
        let params = GirgParams::new(1, Alpha::Finite(2.0), 2.5).unwrap();
        let ws = WeightSequence::new(vec![1.0; 500]).unwrap();
        let pos = sample_positions(500, 1, 1).unwrap();
        let err = sample_edges_observed(&params, &ws, &pos, &Greedy, 1, &SamplerOptions::default(), &mut NoTrials)
            .unwrap_err();
        assert!(matches!(err, GirgError::ModelConfig(_)));
    }

    #[test]
    fn parallel_matches_sequential() {
        let params = GirgParams::new(2, Alpha::Finite(2.0), 2.5).unwrap();
        let ws = WeightSpec::Sampled { w_min: 1.0 }.build(20_000, 2.5, 3).unwrap();
        let a = sample_girg(&params, &ws, 3, &SamplerOptions::default()).unwrap();
        let b = sample_girg(
            &params,
            &ws,
            3,
            &SamplerOptions {
                threads: 3,
                attempt: 0,
            },
        )
        .unwrap();
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn mean_degree_tracks_weight() {
        // Slope of log mean degree against log mean weight across layers.
        let n = 100_000;
        let params = GirgParams::new(2, Alpha::Finite(2.0), 2.5).unwrap();
        let ws = WeightSpec::Sampled { w_min: 1.0 }.build(n, 2.5, 21).unwrap();
        let s = sample_girg(&params, &ws, 21, &SamplerOptions::default()).unwrap();
        let layers = build_weight_layers(&ws);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..layers.len() {
            let l = layers.layer(k);
            if l.len() < 30 {
                continue;
            }
            let mw = l.iter().map(|&v| ws.weights()[v as usize]).sum::<f64>() / l.len() as f64;
            let md = l.iter().map(|&v| s.graph.degree(v as usize) as f64).sum::<f64>() / l.len() as f64;
            xs.push(mw.ln());
            ys.push(md.ln());
        }
        assert!(xs.len() >= 4);
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope - 1.0).abs() <= 0.15, "slope {slope}");
    }
}
