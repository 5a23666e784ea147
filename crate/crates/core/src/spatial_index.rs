//! Cell point index and the cell-pair partition of `T^d x T^d`.

use std::ops::Range;

use crate::error::{GirgError, Result};
use crate::geometry::{
    cell_distance_unchecked, check_dim, level_for_volume, point_rank, touching, CellId, Positions,
};

/// Points bucketed by the cells of one base level, sorted in geometric cell
/// order. Any coarser cell covers a contiguous range of the ordering, so
/// counts and k-th lookups for all cells of volume at least the base volume
/// take O(1).
///
/// Within a base cell, points keep their input order.
#[derive(Debug, Clone)]
pub struct PointIndex {
    dim: usize,
    base_level: u32,
    ordered: Vec<u32>,
    /// `offsets[r]` is the position of the first point of the base cell of
    /// geometric rank `r`; one extra entry at the end.
    offsets: Vec<u32>,
    cost: BuildCost,
}

/// Work counters recorded while building a [`PointIndex`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildCost {
    pub point_ops: usize,
    pub cell_ops: usize,
}

impl PointIndex {
    /// Indexes the points `ids` (indices into `positions`) for cells of volume
    /// at least `nu`.
    pub fn build(positions: &Positions, ids: &[u32], nu: f64) -> Result<Self> {
        let dim = positions.dim();
        let base_level = level_for_volume(nu, dim)?;
        if base_level as usize * dim > 36 {
            return Err(GirgError::usage(format!(
                "nu = {nu} needs 2^{} cells",
                base_level as usize * dim
            )));
        }
        if ids.len() >= u32::MAX as usize {
            return Err(GirgError::usage("too many points for one index"));
        }
        let cells = 1usize << (base_level as usize * dim);
        let mut offsets = vec![0u32; cells + 1];
        let ranks: Vec<u64> = ids
            .iter()
            .map(|&id| point_rank(positions.point(id as usize), base_level))
            .collect();
        for &r in &ranks {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..cells {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets[..cells].to_vec();
        let mut ordered = vec![0u32; ids.len()];
        for (&id, &r) in ids.iter().zip(&ranks) {
            let slot = &mut cursor[r as usize];
            ordered[*slot as usize] = id;
            *slot += 1;
        }
        Ok(PointIndex {
            dim,
            base_level,
            ordered,
            offsets,
            cost: BuildCost {
                point_ops: 3 * ids.len(),
                cell_ops: 2 * cells,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_level(&self) -> u32 {
        self.base_level
    }

    /// Volume of the finest indexed cells.
    pub fn base_volume(&self) -> f64 {
        (-((self.base_level as usize * self.dim) as f64)).exp2()
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }

    /// Point ids in index order.
    pub fn ordered_points(&self) -> &[u32] {
        &self.ordered
    }

    /// Number of base-level cells, i.e. stored prefix entries minus one.
    pub fn stored_cells(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn build_cost(&self) -> BuildCost {
        self.cost
    }

    /// Range in [`PointIndex::ordered_points`] of the cell with the given
    /// level and geometric rank. No bounds checks.
    #[inline]
    pub(crate) fn range_by_rank(&self, level: u32, rank: u64) -> Range<usize> {
        let shift = (self.base_level - level) as usize * self.dim;
        let lo = self.offsets[(rank << shift) as usize] as usize;
        let hi = self.offsets[((rank + 1) << shift) as usize] as usize;
        lo..hi
    }

    #[inline]
    pub(crate) fn points_in(&self, range: Range<usize>) -> &[u32] {
        &self.ordered[range]
    }

    fn checked_range(&self, cell: &CellId) -> Result<Range<usize>> {
        if cell.dim() != self.dim {
            return Err(GirgError::usage("cell dimension differs from the index"));
        }
        if cell.level() > self.base_level {
            return Err(GirgError::usage(format!(
                "cell {cell:?} is finer than the index base level {}",
                self.base_level
            )));
        }
        Ok(self.range_by_rank(cell.level(), cell.geometric_rank()))
    }

    /// `|C ∩ P|`.
    pub fn count_in_cell(&self, cell: &CellId) -> Result<usize> {
        Ok(self.checked_range(cell)?.len())
    }

    /// The `k`-th point of the cell, counting from 1.
    pub fn kth_in_cell(&self, cell: &CellId, k: usize) -> Result<u32> {
        let range = self.checked_range(cell)?;
        if k == 0 || k > range.len() {
            return Err(GirgError::usage(format!(
                "k = {k} out of range 1..={} for cell {cell:?}",
                range.len()
            )));
        }
        Ok(self.ordered[range.start + k - 1])
    }

    /// All points of the cell in index order.
    pub fn cell_points(&self, cell: &CellId) -> Result<&[u32]> {
        let range = self.checked_range(cell)?;
        Ok(&self.ordered[range])
    }
}

/// Convenience constructor taking explicit `(id, point)` pairs.
pub fn build_point_index(points: &[(u32, Vec<f64>)], dim: usize, nu: f64) -> Result<PointIndex> {
    check_dim(dim)?;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(GirgError::usage(format!("nu = {nu} outside (0, 1]")));
    }
    let max_id = points.iter().map(|(id, _)| *id as usize + 1).max().unwrap_or(0);
    let mut coords = vec![0.0; max_id * dim];
    for (id, p) in points {
        if p.len() != dim {
            return Err(GirgError::usage("point dimension differs"));
        }
        coords[*id as usize * dim..(*id as usize + 1) * dim].copy_from_slice(p);
    }
    let positions = Positions::new(dim, coords)?;
    let ids: Vec<u32> = points.iter().map(|(id, _)| *id).collect();
    PointIndex::build(&positions, &ids, nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    /// Equal or touching cells of the base volume; enumerated exhaustively.
    TypeI,
    /// Separated cells whose parents touch; distance at least the side length.
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartitionPair {
    pub a: CellId,
    pub b: CellId,
    pub kind: PairKind,
}

impl PartitionPair {
    pub fn distance(&self) -> f64 {
        cell_distance_unchecked(&self.a, &self.b)
    }
}

/// A cell together with its geometric rank, carried through the partition
/// recursion so ranks never need recomputing.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RankedCell {
    pub cell: CellId,
    pub rank: u64,
}

impl RankedCell {
    fn root(dim: usize) -> Self {
        RankedCell {
            cell: CellId::root(dim),
            rank: 0,
        }
    }

    fn children(&self) -> impl Iterator<Item = RankedCell> + '_ {
        let d = self.cell.dim();
        self.cell.children().enumerate().map(move |(digit, cell)| RankedCell {
            cell,
            rank: (self.rank << d) | digit as u64,
        })
    }
}

/// Callbacks for [`walk_partition`].
pub(crate) trait PartitionVisitor {
    /// Whether any pair in `a x b` can matter; `false` prunes the pair and,
    /// for touching pairs, everything below it.
    fn keep(&mut self, _a: &RankedCell, _b: &RankedCell) -> bool {
        true
    }

    fn visit(&mut self, a: &RankedCell, b: &RankedCell, kind: PairKind);
}

/// Enumerates the partition for base level `base_level`: every touching pair
/// of equal-level cells is refined until the base level, where it becomes a
/// type I pair; a non-touching child pair of a touching pair is type II.
pub(crate) fn walk_partition<V: PartitionVisitor>(dim: usize, base_level: u32, visitor: &mut V) {
    let root = RankedCell::root(dim);
    refine(&root, &root, base_level, visitor);
}

fn refine<V: PartitionVisitor>(a: &RankedCell, b: &RankedCell, base_level: u32, visitor: &mut V) {
    if !visitor.keep(a, b) {
        return;
    }
    if a.cell.level() == base_level {
        visitor.visit(a, b, PairKind::TypeI);
        return;
    }
    for ca in a.children() {
        for cb in b.children() {
            if touching(&ca.cell, &cb.cell) {
                refine(&ca, &cb, base_level, visitor);
            } else if visitor.keep(&ca, &cb) {
                visitor.visit(&ca, &cb, PairKind::TypeII);
            }
        }
    }
}

/// The partition of `T^d x T^d` into type I and type II cell products for
/// volume bound `nu`. Ordered pairs: `(A, B)` and `(B, A)` both appear.
pub fn build_partition(nu: f64, d: usize) -> Result<Vec<PartitionPair>> {
    let base_level = level_for_volume(nu, d)?;
    if base_level as usize * d > 24 {
        return Err(GirgError::usage(format!(
            "partition for nu = {nu} is too large to materialize"
        )));
    }
    struct Collect(Vec<PartitionPair>);
    impl PartitionVisitor for Collect {
        fn visit(&mut self, a: &RankedCell, b: &RankedCell, kind: PairKind) {
            self.0.push(PartitionPair {
                a: a.cell,
                b: b.cell,
                kind,
            });
        }
    }
    let mut out = Collect(Vec::new());
    walk_partition(d, base_level, &mut out);
    Ok(out.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cell_of_point, parent, torus_distance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn example_index() -> PointIndex {
        // ids 0..4 at 0.1, 0.6, 0.9, 0.3
        let pts = vec![(0, vec![0.1]), (1, vec![0.6]), (2, vec![0.9]), (3, vec![0.3])];
        build_point_index(&pts, 1, 0.25).unwrap()
    }

    fn cell(level: u32, idx: &[u32]) -> CellId {
        CellId::new(level, idx).unwrap()
    }

    #[test]
    fn empty_index() {
        let idx = build_point_index(&[], 2, 1.0).unwrap();
        assert!(idx.is_empty());
        assert_eq!(idx.count_in_cell(&CellId::root(2)).unwrap(), 0);
        assert!(idx.kth_in_cell(&CellId::root(2), 1).is_err());
    }

    #[test]
    fn example_placement() {
        let idx = example_index();
        assert_eq!(idx.base_level(), 2);
        assert_eq!(idx.ordered_points(), &[0, 3, 1, 2]);
        assert_eq!(idx.cell_points(&cell(2, &[0])).unwrap(), &[0]);
        assert_eq!(idx.cell_points(&cell(2, &[1])).unwrap(), &[3]);
        assert_eq!(idx.cell_points(&cell(1, &[0])).unwrap(), &[0, 3]);
    }

    #[test]
    fn counts_and_kth() {
        let idx = example_index();
        assert_eq!(idx.count_in_cell(&CellId::root(1)).unwrap(), 4);
        assert_eq!(idx.count_in_cell(&cell(1, &[0])).unwrap(), 2);
        let empty = build_point_index(&[(0, vec![0.1])], 1, 0.25).unwrap();
        assert_eq!(empty.count_in_cell(&cell(2, &[3])).unwrap(), 0);
        assert_eq!(idx.kth_in_cell(&cell(1, &[0]), 1).unwrap(), 0);
        assert_eq!(idx.kth_in_cell(&cell(1, &[0]), 2).unwrap(), 3);
        assert_eq!(idx.kth_in_cell(&cell(2, &[3]), 1).unwrap(), 2);
        assert!(idx.kth_in_cell(&cell(2, &[3]), 2).is_err());
        assert!(idx.count_in_cell(&cell(3, &[0])).is_err());
        let all: HashSet<u32> = (1..=4)
            .map(|k| idx.kth_in_cell(&CellId::root(1), k).unwrap())
            .collect();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn index_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=3usize {
            let n = 500;
            let coords: Vec<f64> = (0..n * d).map(|_| rng.gen()).collect();
            let pos = Positions::new(d, coords).unwrap();
            // a subset of ids, in scrambled order
            let ids: Vec<u32> = (0..n as u32).rev().filter(|i| i % 3 != 0).collect();
            for nu in [1.0, 0.3, 0.01, 0.001] {
                let idx = PointIndex::build(&pos, &ids, nu).unwrap();
                let mut sorted = idx.ordered_points().to_vec();
                sorted.sort_unstable();
                let mut expect = ids.clone();
                expect.sort_unstable();
                assert_eq!(sorted, expect);
                for level in 0..=idx.base_level() {
                    for rank in 0..(1u64 << (level as usize * d)) {
                        let c = CellId::from_geometric_rank(level, d, rank);
                        let mut got = idx.cell_points(&c).unwrap().to_vec();
                        got.sort_unstable();
                        let mut brute: Vec<u32> = ids
                            .iter()
                            .copied()
                            .filter(|&id| c.contains(pos.point(id as usize)))
                            .collect();
                        brute.sort_unstable();
                        assert_eq!(got, brute);
                    }
                }
            }
        }
    }

    #[test]
    fn index_ordering_only_depends_on_points_and_nu() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<f64> = (0..400).map(|_| rng.gen()).collect();
        let pos = Positions::new(2, coords).unwrap();
        let ids: Vec<u32> = (0..200).collect();
        let a = PointIndex::build(&pos, &ids, 0.01).unwrap();
        let b = PointIndex::build(&pos, &ids, 0.01).unwrap();
        assert_eq!(a.ordered_points(), b.ordered_points());
    }

    #[test]
    fn index_cost_is_linear_in_points_and_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let coords: Vec<f64> = (0..20_000).map(|_| rng.gen()).collect();
        let pos = Positions::new(2, coords).unwrap();
        let ids: Vec<u32> = (0..10_000).collect();
        let mut prev: Option<BuildCost> = None;
        for k in 2..8 {
            let nu = 4f64.powi(-k);
            let idx = PointIndex::build(&pos, &ids, nu).unwrap();
            let cost = idx.build_cost();
            assert!(cost.point_ops <= 3 * ids.len());
            assert!(cost.cell_ops as f64 <= 2.0 * 4.0 / nu + 2.0);
            if let Some(p) = prev {
                // nu shrinks by 4 = 2^d, cells grow by at most 2^d * 2
                assert!(cost.cell_ops <= 8 * p.cell_ops);
            }
            prev = Some(cost);
        }
    }

    #[test]
    fn rejects_bad_nu() {
        assert!(build_point_index(&[], 1, 0.0).is_err());
        assert!(build_point_index(&[], 1, 1.5).is_err());
        assert!(build_partition(0.0, 1).is_err());
        assert!(build_partition(2.0, 1).is_err());
    }

    #[test]
    fn partition_d1_quarter() {
        let pairs = build_partition(0.25, 1).unwrap();
        assert_eq!(pairs.len(), 16);
        let type1 = pairs.iter().filter(|p| p.kind == PairKind::TypeI).count();
        let type2: Vec<_> = pairs.iter().filter(|p| p.kind == PairKind::TypeII).collect();
        assert_eq!(type1, 12);
        assert_eq!(type2.len(), 4);
        let opposite: HashSet<(u32, u32)> = type2
            .iter()
            .map(|p| (p.a.indices()[0], p.b.indices()[0]))
            .collect();
        let expect: HashSet<(u32, u32)> = [(0, 2), (2, 0), (1, 3), (3, 1)].into_iter().collect();
        assert_eq!(opposite, expect);
    }

    #[test]
    fn partition_of_whole_space() {
        for d in 1..=3 {
            let pairs = build_partition(1.0, d).unwrap();
            assert_eq!(pairs.len(), 1);
            assert_eq!(pairs[0].a, CellId::root(d));
            assert_eq!(pairs[0].kind, PairKind::TypeI);
        }
    }

    #[test]
    fn partition_pair_invariants_and_size() {
        for d in 1..=3usize {
            for k in 0..=(12 / d as i32) {
                let nu = 2f64.powi(-k * d as i32) * 0.9;
                let mu = crate::geometry::ceil_cell_volume(nu, d).unwrap();
                let pairs = build_partition(nu, d).unwrap();
                let k_const = 3f64.powi(d as i32) * (1.0 + 2.0 * 2f64.powi(d as i32));
                assert!(
                    pairs.len() as f64 <= k_const * 2f64.powi(d as i32) / nu,
                    "d={d} nu={nu}: {} pairs",
                    pairs.len()
                );
                let set: HashSet<_> = pairs.iter().map(|p| (p.a, p.b)).collect();
                assert_eq!(set.len(), pairs.len());
                for p in &pairs {
                    assert_eq!(p.a.level(), p.b.level());
                    assert!(p.a.volume() >= nu);
                    let dist = crate::geometry::cell_distance(&p.a, &p.b).unwrap();
                    match p.kind {
                        PairKind::TypeI => {
                            assert_eq!(dist, 0.0);
                            assert_eq!(p.a.volume(), mu);
                        }
                        PairKind::TypeII => {
                            assert!(dist >= p.a.volume().powf(1.0 / d as f64) - 1e-15);
                        }
                    }
                    assert!(set.contains(&(p.b, p.a)), "missing reverse of {p:?}");
                }
            }
        }
    }

    /// For every pair of base cells, exactly one ancestor pair must be in the
    /// partition.
    #[test]
    fn partition_is_exact_exhaustive() {
        for d in 1..=2usize {
            for k in 0..=(8 / d as u32) {
                let nu = 2f64.powi(-((k as usize * d) as i32));
                let base = level_for_volume(nu, d).unwrap();
                let pairs = build_partition(nu, d).unwrap();
                let set: HashSet<_> = pairs.iter().map(|p| (p.a, p.b)).collect();
                let cells = 1u64 << (base as usize * d);
                for ra in 0..cells {
                    for rb in 0..cells {
                        let mut a = CellId::from_geometric_rank(base, d, ra);
                        let mut b = CellId::from_geometric_rank(base, d, rb);
                        let mut hits = usize::from(set.contains(&(a, b)));
                        while a.level() > 0 {
                            a = parent(&a).unwrap();
                            b = parent(&b).unwrap();
                            hits += usize::from(set.contains(&(a, b)));
                        }
                        assert_eq!(hits, 1, "d={d} nu={nu} ranks {ra},{rb}");
                    }
                }
            }
        }
    }

    #[test]
    fn partition_membership_random_draws() {
        let pairs = build_partition(1.0 / 16.0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let hits = pairs
                .iter()
                .filter(|p| p.a.contains(&[x]) && p.b.contains(&[y]))
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn type2_distance_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 1..=2usize {
            let pairs = build_partition(2f64.powi(-6), d).unwrap();
            for p in pairs.iter().filter(|p| p.kind == PairKind::TypeII) {
                let dist = p.distance();
                for _ in 0..5 {
                    let pick = |c: &CellId, rng: &mut ChaCha8Rng| -> Vec<f64> {
                        c.indices()
                            .iter()
                            .map(|&i| (i as f64 + rng.gen::<f64>()) * c.side())
                            .collect()
                    };
                    let x = pick(&p.a, &mut rng);
                    let y = pick(&p.b, &mut rng);
                    assert_eq!(cell_of_point(&x, p.a.level()).unwrap(), p.a);
                    let r = torus_distance(&x, &y).unwrap();
                    assert!(r >= dist - 1e-12 && r <= 3.0 * dist + 1e-12);
                }
            }
        }
    }

    #[test]
    fn partition_size_scales_inversely_with_nu() {
        // Every base cell has 3^d touching partners, and every touching parent
        // pair has at most 4^d separated child pairs.
        for d in 1..=3usize {
            let bound = 3f64.powi(d as i32) * (1.0 + 4f64.powi(d as i32));
            for l in 1..=(18 / d as i32) {
                let nu = 2f64.powi(-l * d as i32);
                let count = build_partition(nu, d).unwrap().len();
                assert!(count as f64 * nu <= bound, "d={d} l={l}: {count}");
            }
        }
    }
}
