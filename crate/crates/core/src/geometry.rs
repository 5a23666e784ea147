//! Points on the torus `T^d`, dyadic cells and their geometric ordering.
//!
//! A cell of level `l` is the half-open cube
//! `[x_1 2^-l, (x_1+1) 2^-l) x ... x [x_d 2^-l, (x_d+1) 2^-l)`.
//! Cells of one level are enumerated in Morton order: the children of a cell
//! form one digit of `d` bits, coordinate 0 being the most significant bit.
//! The descendants of any coarser cell therefore form a contiguous block,
//! which is what the point index and the vertex renumbering rely on.

use crate::error::{GirgError, Result};

/// Largest supported dimension. Sampling cost grows like `4^d`, so this is
/// far beyond anything practical.
pub const MAX_DIM: usize = 8;

/// Deepest supported cell level; cell indices are stored as `u32`.
pub const MAX_LEVEL: u32 = 31;

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(GirgError::usage(format!(
            "dimension must be in 1..={MAX_DIM}, got {d}"
        )));
    }
    Ok(())
}

/// A point of the torus, every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(GirgError::usage(format!(
                "torus coordinate {c} outside [0, 1)"
            )));
        }
        Ok(TorusPoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl AsRef<[f64]> for TorusPoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Flat storage for `n` points of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    dim: usize,
    coords: Vec<f64>,
}

impl Positions {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coords.len() % dim != 0 {
            return Err(GirgError::usage(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(GirgError::usage(format!(
                "torus coordinate {c} outside [0, 1)"
            )));
        }
        Ok(Positions { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[TorusPoint]) -> Result<Self> {
        check_dim(dim)?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(GirgError::usage("points of mixed dimension"));
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(Positions { dim, coords })
    }

    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len() % dim, 0);
        Positions { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.coords
    }
}

#[inline]
fn circle_distance(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    diff.min(1.0 - diff)
}

/// L-infinity distance on the torus without dimension checks.
#[inline]
pub fn torus_distance_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| circle_distance(a, b))
        .fold(0.0, f64::max)
}

/// `max_i min(|x_i - y_i|, 1 - |x_i - y_i|)`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(GirgError::usage(format!(
            "distance between points of dimension {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(torus_distance_unchecked(x, y))
}

/// A dyadic cell `(level, x_1, ..., x_d)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId {
    level: u32,
    dim: u8,
    idx: [u32; MAX_DIM],
}

impl std::fmt::Debug for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}", self.level)?;
        for x in self.indices() {
            write!(f, ",{x}")?;
        }
        write!(f, ")")
    }
}

impl CellId {
    pub fn new(level: u32, indices: &[u32]) -> Result<Self> {
        check_dim(indices.len())?;
        if level > MAX_LEVEL {
            return Err(GirgError::usage(format!("cell level {level} too deep")));
        }
        let side = 1u64 << level;
        if let Some(x) = indices.iter().find(|&&x| u64::from(x) >= side) {
            return Err(GirgError::usage(format!(
                "cell index {x} out of range for level {level}"
            )));
        }
        let mut idx = [0; MAX_DIM];
        idx[..indices.len()].copy_from_slice(indices);
        Ok(CellId {
            level,
            dim: indices.len() as u8,
            idx,
        })
    }

    /// The whole torus.
    pub fn root(dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        CellId {
            level: 0,
            dim: dim as u8,
            idx: [0; MAX_DIM],
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn indices(&self) -> &[u32] {
        &self.idx[..self.dim as usize]
    }

    /// Side length `2^-level`.
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Volume `2^(-level * d)`.
    pub fn volume(&self) -> f64 {
        (-((self.level as usize * self.dim()) as f64)).exp2()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && cell_of_point_unchecked(x, self.level) == *self
    }

    /// Rank of this cell in the geometric ordering of its level.
    pub fn geometric_rank(&self) -> u64 {
        let d = self.dim();
        let mut m = 0u64;
        for t in (0..self.level).rev() {
            for k in 0..d {
                m = (m << 1) | u64::from((self.idx[k] >> t) & 1);
            }
        }
        m
    }

    /// Inverse of [`CellId::geometric_rank`].
    pub fn from_geometric_rank(level: u32, dim: usize, rank: u64) -> Self {
        let mut idx = [0u32; MAX_DIM];
        let mut bit = (level as usize * dim) as u32;
        for t in (0..level).rev() {
            for slot in idx.iter_mut().take(dim) {
                bit -= 1;
                *slot |= (((rank >> bit) & 1) as u32) << t;
            }
        }
        CellId {
            level,
            dim: dim as u8,
            idx,
        }
    }

    /// The `2^d` cells of the next level inside this one, in geometric order.
    pub fn children(&self) -> impl Iterator<Item = CellId> + '_ {
        let d = self.dim();
        (0u32..1 << d).map(move |digit| {
            let mut child = CellId {
                level: self.level + 1,
                dim: self.dim,
                idx: [0; MAX_DIM],
            };
            for k in 0..d {
                let b = (digit >> (d - 1 - k)) & 1;
                child.idx[k] = (self.idx[k] << 1) | b;
            }
            child
        })
    }
}

/// Cell of the given level containing `x`; `floor(x_i 2^level)` clamped to
/// `2^level - 1` against round-up of coordinates just below 1.
#[inline]
pub fn cell_of_point_unchecked(x: &[f64], level: u32) -> CellId {
    let scale = (1u64 << level) as f64;
    let max = ((1u64 << level) - 1) as u32;
    let mut idx = [0u32; MAX_DIM];
    for (slot, &c) in idx.iter_mut().zip(x) {
        *slot = ((c * scale) as u32).min(max);
    }
    CellId {
        level,
        dim: x.len() as u8,
        idx,
    }
}

pub fn cell_of_point(x: &[f64], level: u32) -> Result<CellId> {
    check_dim(x.len())?;
    if level > MAX_LEVEL {
        return Err(GirgError::usage(format!("cell level {level} too deep")));
    }
    Ok(cell_of_point_unchecked(x, level))
}

/// Geometric rank of the level-`level` cell containing `x`, computed without
/// materializing the cell.
#[inline]
pub(crate) fn point_rank(x: &[f64], level: u32) -> u64 {
    cell_of_point_unchecked(x, level).geometric_rank()
}

/// Level `l` of [`ceil_cell_volume`], i.e. the deepest level whose cells have
/// volume at least `x`.
pub fn level_for_volume(x: f64, d: usize) -> Result<u32> {
    check_dim(d)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(GirgError::usage(format!("volume {x} outside (0, 1]")));
    }
    // Start from the floating-point guess and fix it up exactly, since the
    // volumes 2^(-l d) are exact binary fractions.
    let guess = (-x.log2() / d as f64).floor().max(0.0) as u32;
    let mut level = guess.min(MAX_LEVEL);
    while level > 0 && volume_at(level, d) < x {
        level -= 1;
    }
    while level < MAX_LEVEL && volume_at(level + 1, d) >= x {
        level += 1;
    }
    Ok(level)
}

#[inline]
fn volume_at(level: u32, d: usize) -> f64 {
    (-((level as usize * d) as f64)).exp2()
}

/// `min { 2^(-l d) : 2^(-l d) >= x }` for `0 < x <= 1`.
pub fn ceil_cell_volume(x: f64, d: usize) -> Result<f64> {
    Ok(volume_at(level_for_volume(x, d)?, d))
}

/// All cells of one level in geometric order. Each step is the successor
/// link of the ordering.
#[derive(Debug, Clone)]
pub struct GeometricOrder {
    level: u32,
    dim: usize,
    next: u64,
    end: u64,
}

impl Iterator for GeometricOrder {
    type Item = CellId;

    fn next(&mut self) -> Option<CellId> {
        if self.next == self.end {
            return None;
        }
        let cell = CellId::from_geometric_rank(self.level, self.dim, self.next);
        self.next += 1;
        Some(cell)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = (self.end - self.next) as usize;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for GeometricOrder {}

pub fn geometric_order(level: u32, d: usize) -> Result<GeometricOrder> {
    check_dim(d)?;
    if level as usize * d > 40 {
        return Err(GirgError::usage(format!(
            "refusing to enumerate 2^{} cells",
            level as usize * d
        )));
    }
    Ok(GeometricOrder {
        level,
        dim: d,
        next: 0,
        end: 1u64 << (level as usize * d),
    })
}

/// Circular gap, in index units, between two cells of one level along one axis.
#[inline]
fn axis_gap(a: u32, b: u32, level: u32) -> u64 {
    let side = 1u64 << level;
    let diff = (i64::from(a) - i64::from(b)).unsigned_abs();
    let circ = diff.min(side - diff);
    circ.saturating_sub(1)
}

/// Whether two cells of the same level are equal or share boundary points.
#[inline]
pub fn touching(a: &CellId, b: &CellId) -> bool {
    a.indices()
        .iter()
        .zip(b.indices())
        .all(|(&x, &y)| axis_gap(x, y, a.level) == 0)
}

#[inline]
pub(crate) fn cell_distance_unchecked(a: &CellId, b: &CellId) -> f64 {
    let gap = a
        .indices()
        .iter()
        .zip(b.indices())
        .map(|(&x, &y)| axis_gap(x, y, a.level))
        .max()
        .unwrap_or(0);
    gap as f64 * a.side()
}

/// `inf { ||a - b|| : a in A, b in B }` for cells of equal level.
pub fn cell_distance(a: &CellId, b: &CellId) -> Result<f64> {
    if a.level != b.level || a.dim != b.dim {
        return Err(GirgError::usage(format!(
            "cell distance needs equal levels and dimensions, got {a:?} and {b:?}"
        )));
    }
    Ok(cell_distance_unchecked(a, b))
}

pub fn parent(c: &CellId) -> Result<CellId> {
    if c.level == 0 {
        return Err(GirgError::usage("the root cell has no parent"));
    }
    let mut p = *c;
    p.level -= 1;
    for x in p.idx.iter_mut().take(c.dim()) {
        *x >>= 1;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(level: u32, idx: &[u32]) -> CellId {
        CellId::new(level, idx).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert!((torus_distance(&[0.9], &[0.1]).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(torus_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = torus_distance(&[0.1, 0.9], &[0.9, 0.2]).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
        assert!(matches!(
            torus_distance(&[0.1], &[0.1, 0.2]),
            Err(GirgError::Usage(_))
        ));
    }

    #[test]
    fn torus_point_rejects_out_of_range() {
        assert!(TorusPoint::new(vec![1.0]).is_err());
        assert!(TorusPoint::new(vec![-0.1]).is_err());
        assert!(TorusPoint::new(vec![]).is_err());
        assert!(TorusPoint::new(vec![0.0, 0.999]).is_ok());
    }

    #[test]
    fn cell_of_point_examples() {
        assert_eq!(cell_of_point(&[0.3, 0.6], 1).unwrap(), cell(1, &[0, 1]));
        assert_eq!(cell_of_point(&[0.3, 0.6, 0.9], 0).unwrap(), cell(0, &[0, 0, 0]));
        assert_eq!(cell_of_point(&[0.5], 1).unwrap(), cell(1, &[1]));
        // rounding guard
        let just_below_one = 1.0 - f64::EPSILON / 2.0;
        assert_eq!(cell_of_point(&[just_below_one], 30).unwrap().indices()[0], (1 << 30) - 1);
    }

    #[test]
    fn ceil_cell_volume_examples() {
        assert_eq!(ceil_cell_volume(0.2, 1).unwrap(), 0.25);
        for d in 1..=4 {
            assert_eq!(ceil_cell_volume(1.0, d).unwrap(), 1.0);
        }
        assert_eq!(ceil_cell_volume(0.25, 1).unwrap(), 0.25);
        assert_eq!(ceil_cell_volume(0.2, 2).unwrap(), 0.25);
        assert_eq!(ceil_cell_volume(0.24, 2).unwrap(), 0.25);
        assert_eq!(ceil_cell_volume(0.26, 2).unwrap(), 1.0);
        assert!(ceil_cell_volume(0.0, 1).is_err());
        assert!(ceil_cell_volume(1.5, 1).is_err());
    }

    #[test]
    fn ceil_cell_volume_is_identity_on_cell_volumes() {
        for d in 1..=3 {
            for l in 0..=MAX_LEVEL.min(40 / d as u32) {
                let v = volume_at(l, d);
                assert_eq!(ceil_cell_volume(v, d).unwrap(), v);
                assert_eq!(level_for_volume(v, d).unwrap(), l);
            }
        }
    }

    #[test]
    fn geometric_order_examples() {
        let root: Vec<_> = geometric_order(0, 3).unwrap().collect();
        assert_eq!(root, vec![CellId::root(3)]);
        let l1: Vec<_> = geometric_order(1, 1).unwrap().collect();
        assert_eq!(l1, vec![cell(1, &[0]), cell(1, &[1])]);
        let l2: Vec<_> = geometric_order(2, 1).unwrap().collect();
        let under = |p: CellId| -> Vec<usize> {
            l2.iter()
                .enumerate()
                .filter(|(_, c)| parent(c).unwrap() == p)
                .map(|(i, _)| i + 1)
                .collect()
        };
        assert_eq!(under(cell(1, &[0])), vec![1, 2]);
        assert_eq!(under(cell(1, &[1])), vec![3, 4]);
    }

    #[test]
    fn geometric_order_children_start_low_end_high() {
        let kids: Vec<_> = CellId::root(2).children().collect();
        assert_eq!(kids.first().unwrap(), &cell(1, &[0, 0]));
        assert_eq!(kids.last().unwrap(), &cell(1, &[1, 1]));
    }

    #[test]
    fn geometric_order_is_bijective_and_contiguous() {
        for d in 1..=3usize {
            for level in 0..=4u32 {
                if level as usize * d > 12 {
                    continue;
                }
                let cells: Vec<_> = geometric_order(level, d).unwrap().collect();
                let total = 1usize << (level as usize * d);
                assert_eq!(cells.len(), total);
                let distinct: std::collections::HashSet<_> = cells.iter().collect();
                assert_eq!(distinct.len(), total);
                for (i, c) in cells.iter().enumerate() {
                    assert_eq!(c.geometric_rank(), i as u64);
                }
                // every ancestor level: descendants occupy one contiguous range
                for up in 0..level {
                    let mut seen = std::collections::HashMap::new();
                    let mut last: Option<CellId> = None;
                    for c in &cells {
                        let mut a = *c;
                        for _ in 0..(level - up) {
                            a = parent(&a).unwrap();
                        }
                        if last != Some(a) {
                            assert!(seen.insert(a, ()).is_none(), "ancestor {a:?} split");
                            last = Some(a);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cell_distance_examples() {
        let a = cell(2, &[0]);
        assert_eq!(cell_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(cell_distance(&a, &cell(2, &[2])).unwrap(), 0.25);
        assert_eq!(cell_distance(&a, &cell(2, &[3])).unwrap(), 0.0);
        assert!(cell_distance(&a, &cell(1, &[0])).is_err());
        assert_eq!(
            cell_distance(&cell(3, &[0, 0]), &cell(3, &[1, 4])).unwrap(),
            3.0 / 8.0
        );
    }

    #[test]
    fn parent_examples() {
        assert_eq!(parent(&cell(1, &[0])).unwrap(), cell(0, &[0]));
        assert_eq!(parent(&cell(2, &[3])).unwrap(), cell(1, &[1]));
        assert_eq!(parent(&cell(2, &[1, 2])).unwrap(), cell(1, &[0, 1]));
        assert!(parent(&CellId::root(2)).is_err());
    }

    #[test]
    fn children_have_parent() {
        let c = cell(3, &[5, 2, 7]);
        for child in c.children() {
            assert_eq!(parent(&child).unwrap(), c);
        }
    }

    fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..1.0f64, d)
    }

    proptest! {
        #[test]
        fn distance_is_a_metric((x, y, z) in (1usize..=4).prop_flat_map(|d| (point(d), point(d), point(d)))) {
            let xy = torus_distance(&x, &y).unwrap();
            let yx = torus_distance(&y, &x).unwrap();
            prop_assert_eq!(xy, yx);
            prop_assert!((0.0..=0.5).contains(&xy));
            let xz = torus_distance(&x, &z).unwrap();
            let zy = torus_distance(&z, &y).unwrap();
            prop_assert!(xy <= xz + zy + 1e-12);
        }

        #[test]
        fn coarse_cell_is_iterated_parent(x in (1usize..=4).prop_flat_map(point), l in 0u32..8, extra in 0u32..8) {
            let fine = cell_of_point(&x, l + extra).unwrap();
            let mut c = fine;
            for _ in 0..extra {
                c = parent(&c).unwrap();
            }
            prop_assert_eq!(c, cell_of_point(&x, l).unwrap());
            prop_assert!(fine.contains(&x));
        }

        #[test]
        fn rank_round_trips(x in (1usize..=4).prop_flat_map(point), l in 0u32..8) {
            let c = cell_of_point(&x, l).unwrap();
            prop_assert_eq!(CellId::from_geometric_rank(l, x.len(), c.geometric_rank()), c);
        }

        #[test]
        fn ceil_volume_bounds(x in 1e-9..=1.0f64, d in 1usize..=4) {
            let v = ceil_cell_volume(x, d).unwrap();
            prop_assert!(v >= x);
            prop_assert!(v < (d as f64).exp2() * x);
        }

        #[test]
        fn cell_distance_matches_point_sampling(
            (a, b) in (1usize..=3, 1u32..5).prop_flat_map(|(d, l)| {
                let side = 1u32 << l;
                (prop::collection::vec(0..side, d), prop::collection::vec(0..side, d))
                    .prop_map(move |(a, b)| (CellId::new(l, &a).unwrap(), CellId::new(l, &b).unwrap()))
            }),
            fracs in prop::collection::vec(0.0..1.0f64, 6),
        ) {
            let dist = cell_distance(&a, &b).unwrap();
            prop_assert_eq!(dist == 0.0, touching(&a, &b));
            if dist > 0.0 {
                prop_assert!(dist >= a.side() - 1e-15);
            }
            // points inside the cells are never closer than the cell distance
            let d = a.dim();
            let pa: Vec<f64> = (0..d).map(|k| (a.indices()[k] as f64 + fracs[k]) * a.side()).collect();
            let pb: Vec<f64> = (0..d).map(|k| (b.indices()[k] as f64 + fracs[3 + k]) * b.side()).collect();
            prop_assert!(torus_distance(&pa, &pb).unwrap() + 1e-12 >= dist);
        }
    }
}
