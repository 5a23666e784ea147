//! Structural statistics: clustering, degree tail, components, distances and
//! grid cuts.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{GirgError, Result};
use crate::geometry::Positions;
use crate::graph::Graph;
use crate::model::Alpha;
use crate::rng::{substream, Stream};

/// Fewest tail samples accepted by [`tail_exponent_estimate`].
pub const MIN_TAIL_SAMPLES: usize = 50;

/// Targets measured per breadth-first search in [`average_distance_sample`].
const TARGETS_PER_SOURCE: usize = 32;

fn check_vertex(g: &Graph, v: usize) -> Result<()> {
    if v >= g.n() {
        return Err(GirgError::usage(format!("vertex {v} outside 0..{}", g.n())));
    }
    Ok(())
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Closed wedges over all wedges at `v`; 0 below degree 2.
pub fn local_clustering(g: &Graph, v: usize) -> Result<f64> {
    check_vertex(g, v)?;
    let nb = g.neighbors(v);
    let k = nb.len();
    if k < 2 {
        return Ok(0.0);
    }
    let twice: usize = nb.iter().map(|&u| sorted_intersection(nb, g.neighbors(u as usize))).sum();
    Ok(twice as f64 / (k * (k - 1)) as f64)
}

/// Triangles through each vertex, by forward enumeration along a
/// degree order.
pub fn triangles_per_vertex(g: &Graph) -> Vec<u64> {
    let n = g.n();
    let key = |v: usize| (g.degree(v), v);
    let out: Vec<Vec<u32>> = (0..n)
        .map(|v| {
            g.neighbors(v)
                .iter()
                .copied()
                .filter(|&u| key(u as usize) > key(v))
                .collect()
        })
        .collect();
    let mut tri = vec![0u64; n];
    let mut mark = vec![u32::MAX; n];
    for u in 0..n {
        for &v in &out[u] {
            mark[v as usize] = u as u32;
        }
        for &v in &out[u] {
            for &w in &out[v as usize] {
                if mark[w as usize] == u as u32 {
                    tri[u] += 1;
                    tri[v as usize] += 1;
                    tri[w as usize] += 1;
                }
            }
        }
    }
    tri
}

/// Mean of the local coefficients over all vertices.
pub fn global_clustering(g: &Graph) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    let tri = triangles_per_vertex(g);
    let sum: f64 = (0..g.n())
        .map(|v| {
            let k = g.degree(v) as f64;
            if k < 2.0 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (k * (k - 1.0))
            }
        })
        .sum();
    sum / g.n() as f64
}

/// Approximate discrete maximum-likelihood exponent of the degrees
/// `>= k_min`: `1 + m / sum ln(k / (k_min - 1/2))`.
pub fn tail_exponent_from_degrees(degrees: &[usize], k_min: usize) -> Result<f64> {
    if k_min == 0 {
        return Err(GirgError::usage("k_min must be at least 1"));
    }
    let shift = k_min as f64 - 0.5;
    let (count, sum) = degrees
        .iter()
        .filter(|&&k| k >= k_min)
        .fold((0usize, 0.0f64), |(c, s), &k| (c + 1, s + (k as f64 / shift).ln()));
    if count < MIN_TAIL_SAMPLES {
        return Err(GirgError::InsufficientData(format!(
            "{count} degrees at or above {k_min}, need {MIN_TAIL_SAMPLES}"
        )));
    }
    if sum <= 0.0 {
        return Err(GirgError::InsufficientData("degenerate degree tail".into()));
    }
    Ok(1.0 + count as f64 / sum)
}

pub fn tail_exponent_estimate(g: &Graph, k_min: usize) -> Result<f64> {
    tail_exponent_from_degrees(&g.degrees(), k_min)
}

/// Union-find with path halving and union by size.
struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Component label per vertex (the root of its set).
fn component_roots(g: &Graph) -> Vec<u32> {
    let mut dsu = Dsu::new(g.n());
    for &(u, v) in g.edges() {
        dsu.union(u, v);
    }
    (0..g.n() as u32).map(|v| dsu.find(v)).collect()
}

/// Component sizes, largest first.
pub fn connected_components(g: &Graph) -> Vec<usize> {
    let roots = component_roots(g);
    let mut count = vec![0usize; g.n()];
    for &r in &roots {
        count[r as usize] += 1;
    }
    let mut sizes: Vec<usize> = count.into_iter().filter(|&c| c > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Vertices of a largest component (smallest root on ties), ascending.
pub fn giant_component(g: &Graph) -> Vec<u32> {
    let roots = component_roots(g);
    let mut count = vec![0usize; g.n()];
    for &r in &roots {
        count[r as usize] += 1;
    }
    let Some(best) = (0..g.n()).max_by_key(|&r| (count[r], std::cmp::Reverse(r))) else {
        return Vec::new();
    };
    (0..g.n() as u32).filter(|&v| roots[v as usize] == best as u32).collect()
}

fn bfs(g: &Graph, source: u32, dist: &mut [u32], queue: &mut VecDeque<u32>) {
    dist.fill(u32::MAX);
    queue.clear();
    dist[source as usize] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in g.neighbors(u as usize) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
}

fn nontrivial_giant(g: &Graph) -> Result<Vec<u32>> {
    let giant = giant_component(g);
    if giant.len() < 2 {
        return Err(GirgError::InsufficientData(
            "largest component has fewer than 2 vertices".into(),
        ));
    }
    Ok(giant)
}

/// Mean shortest-path length over `pairs` random ordered pairs of distinct
/// vertices of the largest component. Pairs share sources in groups of 32,
/// one breadth-first search per source.
pub fn average_distance_sample(g: &Graph, pairs: usize, seed: u64) -> Result<f64> {
    if pairs == 0 {
        return Err(GirgError::usage("need at least one pair"));
    }
    let giant = nontrivial_giant(g)?;
    let mut rng = substream(seed, Stream::Misc, 1);
    let mut dist = vec![u32::MAX; g.n()];
    let mut queue = VecDeque::new();
    let mut total = 0u64;
    let mut left = pairs;
    while left > 0 {
        let source = *giant.choose(&mut rng).unwrap();
        bfs(g, source, &mut dist, &mut queue);
        for _ in 0..left.min(TARGETS_PER_SOURCE) {
            let target = loop {
                let t = *giant.choose(&mut rng).unwrap();
                if t != source {
                    break t;
                }
            };
            total += dist[target as usize] as u64;
        }
        left -= left.min(TARGETS_PER_SOURCE);
    }
    Ok(total as f64 / pairs as f64)
}

/// Mean shortest-path length over all pairs of the largest component.
pub fn average_distance_exact(g: &Graph) -> Result<f64> {
    let giant = nontrivial_giant(g)?;
    let mut dist = vec![u32::MAX; g.n()];
    let mut queue = VecDeque::new();
    let mut total = 0u64;
    for &s in &giant {
        bfs(g, s, &mut dist, &mut queue);
        total += giant.iter().map(|&t| dist[t as usize] as u64).sum::<u64>();
    }
    let k = giant.len() as f64;
    Ok(total as f64 / (k * (k - 1.0)))
}

/// Edges whose endpoints lie in different cells of the grid of side `1/mu`.
pub fn grid_cut_count(g: &Graph, positions: &Positions, mu: u64) -> Result<usize> {
    if positions.len() != g.n() {
        return Err(GirgError::usage("one position per vertex required"));
    }
    let d = positions.dim() as i32;
    if mu == 0 || (mu as f64).powi(d) > g.n().max(1) as f64 {
        return Err(GirgError::usage(format!(
            "grid resolution {mu} outside 1..=n^(1/d)"
        )));
    }
    let m = mu as f64;
    let cell = |x: f64| ((x * m) as u64).min(mu - 1);
    Ok(g
        .edges()
        .iter()
        .filter(|&&(u, v)| {
            positions
                .point(u as usize)
                .iter()
                .zip(positions.point(v as usize))
                .any(|(&a, &b)| cell(a) != cell(b))
        })
        .count())
}

/// The grid-cut bound with every hidden constant set to 1:
/// `n (n/mu^d)^(2-beta+eta) + (n^(2-alpha) mu^(d(alpha-1)) + n^(1-1/d) mu) (1 + ln(n/mu^d))`.
pub fn grid_cut_bound(n: f64, mu: f64, alpha: Alpha, beta: f64, d: usize, eta: f64) -> Result<f64> {
    if !(n >= 1.0 && mu >= 1.0 && eta > 0.0 && beta > 2.0 && d >= 1) {
        return Err(GirgError::usage("grid_cut_bound needs n, mu >= 1, eta > 0, beta > 2, d >= 1"));
    }
    let df = d as f64;
    let cells = mu.powf(df);
    let per_cell = n / cells;
    let weight_term = n * per_cell.powf(2.0 - beta + eta);
    let decay_term = match alpha {
        Alpha::Finite(a) => n.powf(2.0 - a) * mu.powf(df * (a - 1.0)),
        Alpha::Infinite => 0.0,
    };
    let boundary_term = n.powf(1.0 - 1.0 / df) * mu;
    Ok(weight_term + (decay_term + boundary_term) * (1.0 + per_cell.max(1.0).ln()))
}

/// Random double-edge swaps `{a,b},{c,d} -> {a,d},{c,b}` keeping the graph
/// simple; `swaps_per_edge * m` attempts.
pub fn degree_preserving_shuffle(g: &Graph, swaps_per_edge: usize, seed: u64) -> Graph {
    let mut edges: Vec<(u32, u32)> = g.edges().to_vec();
    let m = edges.len();
    if m < 2 {
        return g.clone();
    }
    let key = |a: u32, b: u32| ((a.min(b) as u64) << 32) | a.max(b) as u64;
    let mut present: HashSet<u64> = edges.iter().map(|&(a, b)| key(a, b)).collect();
    let mut rng = substream(seed, Stream::Misc, 2);
    for _ in 0..swaps_per_edge * m {
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (c, d) = if rng.gen::<bool>() { edges[j] } else { (edges[j].1, edges[j].0) };
        if a == d || c == b || present.contains(&key(a, d)) || present.contains(&key(c, b)) {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, d));
        present.insert(key(a, d));
        present.insert(key(c, b));
        edges[i] = (a, d);
        edges[j] = (c, b);
    }
    let mut canon: Vec<(u32, u32)> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    canon.sort_unstable();
    Graph::from_sorted_unique(g.n(), canon)
}

/// Which statistics [`compute_stats`] evaluates.
#[derive(Debug, Clone)]
pub struct StatsOptions {
    pub clustering: bool,
    /// Tail estimate from degrees at or above this value.
    pub tail_k_min: Option<usize>,
    pub components: bool,
    /// Number of sampled pairs for the average distance.
    pub distance_pairs: Option<usize>,
    /// Grid resolutions for cut counting; needs positions.
    pub grid_mu: Vec<u64>,
    pub seed: u64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            clustering: true,
            tail_k_min: Some(10),
            components: true,
            distance_pairs: Some(1000),
            grid_mu: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub schema: u32,
    pub n: usize,
    pub m: usize,
    pub global_cc: Option<f64>,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub tail_k_min: Option<usize>,
    pub tail_exponent: Option<f64>,
    /// Why the tail estimate is missing, when it was requested.
    pub tail_error: Option<String>,
    pub giant_fraction: Option<f64>,
    pub component_sizes: Option<Vec<usize>>,
    pub avg_distance_sample: Option<f64>,
    pub grid_cut: BTreeMap<u64, usize>,
}

/// Component sizes listed in the key-value output.
const KV_COMPONENTS: usize = 10;

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat `key=value` lines, starting with `schema=1`.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        line("schema", self.schema.to_string());
        line("n", self.n.to_string());
        line("m", self.m.to_string());
        if let Some(cc) = self.global_cc {
            line("global_cc", cc.to_string());
        }
        let hist: Vec<String> = self.degree_histogram.iter().map(|(k, c)| format!("{k}:{c}")).collect();
        line("degree_histogram", hist.join(","));
        if let Some(k) = self.tail_k_min {
            line("tail_k_min", k.to_string());
            match (self.tail_exponent, &self.tail_error) {
                (Some(t), _) => line("tail_exponent", t.to_string()),
                (None, Some(e)) => line("tail_exponent", format!("none ({e})")),
                _ => {}
            }
        }
        if let Some(f) = self.giant_fraction {
            line("giant_fraction", f.to_string());
        }
        if let Some(sizes) = &self.component_sizes {
            line("components", sizes.len().to_string());
            let top: Vec<String> = sizes.iter().take(KV_COMPONENTS).map(|s| s.to_string()).collect();
            line("component_sizes_top", top.join(","));
        }
        if let Some(d) = self.avg_distance_sample {
            line("avg_distance_sample", d.to_string());
        }
        for (mu, c) in &self.grid_cut {
            line(&format!("grid_cut.{mu}"), c.to_string());
        }
        out
    }
}

pub fn compute_stats(g: &Graph, positions: Option<&Positions>, opts: &StatsOptions) -> Result<StatsReport> {
    let mut degree_histogram = BTreeMap::new();
    for v in 0..g.n() {
        *degree_histogram.entry(g.degree(v)).or_insert(0) += 1;
    }
    let (tail_exponent, tail_error) = match opts.tail_k_min {
        None => (None, None),
        Some(k) => match tail_exponent_estimate(g, k) {
            Ok(t) => (Some(t), None),
            Err(GirgError::InsufficientData(msg)) => (None, Some(msg)),
            Err(e) => return Err(e),
        },
    };
    let component_sizes = opts.components.then(|| connected_components(g));
    let giant_fraction = component_sizes
        .as_ref()
        .map(|s| s.first().map_or(0.0, |&c| c as f64 / g.n() as f64));
    let avg_distance_sample = match opts.distance_pairs {
        None => None,
        Some(p) => match average_distance_sample(g, p, opts.seed) {
            Ok(d) => Some(d),
            Err(GirgError::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        },
    };
    let mut grid_cut = BTreeMap::new();
    if !opts.grid_mu.is_empty() {
        let pos = positions.ok_or_else(|| GirgError::usage("grid cuts need vertex positions"))?;
        for &mu in &opts.grid_mu {
            grid_cut.insert(mu, grid_cut_count(g, pos, mu)?);
        }
    }
    Ok(StatsReport {
        schema: 1,
        n: g.n(),
        m: g.num_edges(),
        global_cc: opts.clustering.then(|| global_clustering(g)),
        degree_histogram,
        tail_k_min: opts.tail_k_min,
        tail_exponent,
        tail_error,
        giant_fraction,
        component_sizes,
        avg_distance_sample,
        grid_cut,
    })
}
