use std::io::{Read, Write};

use super::bitvector::{BitVector, BitWriter};
use super::coding::{read_signed, write_signed};
use crate::error::{GirgError, Result};
use crate::geometry::{point_rank, Positions, MAX_LEVEL};
use crate::graph::Graph;

const MAGIC: &[u8; 8] = b"GIRGCMP1";

/// A vertex renumbering: `order[new] = old` and `rank[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexOrder {
    pub order: Vec<u32>,
    pub rank: Vec<u32>,
}

impl VertexOrder {
    fn from_order(order: Vec<u32>) -> Result<Self> {
        let n = order.len();
        let mut rank = vec![u32::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            let slot = rank
                .get_mut(old as usize)
                .ok_or_else(|| GirgError::corrupt(format!("permutation entry {old} out of range")))?;
            if *slot != u32::MAX {
                return Err(GirgError::corrupt(format!("permutation repeats {old}")));
            }
            *slot = new as u32;
        }
        Ok(VertexOrder { order, rank })
    }
}

/// Level `floor(log2(n) / d)` used for the renumbering.
pub(crate) fn order_level(n: usize, d: usize) -> u32 {
    if n <= 1 {
        return 0;
    }
    let log2n = usize::BITS - 1 - n.leading_zeros();
    (log2n / d as u32).min(MAX_LEVEL)
}

/// Vertices sorted by the geometric order of their cell at level
/// `floor(log2(n) / d)`; vertices sharing a cell keep id order.
pub fn geometric_vertex_order(positions: &Positions) -> Result<VertexOrder> {
    let n = positions.len();
    if n > u32::MAX as usize {
        return Err(GirgError::usage("too many vertices"));
    }
    let level = order_level(n, positions.dim());
    let mut keyed: Vec<(u64, u32)> = positions
        .iter()
        .enumerate()
        .map(|(v, x)| (point_rank(x, level), v as u32))
        .collect();
    keyed.sort_unstable();
    VertexOrder::from_order(keyed.into_iter().map(|(_, v)| v).collect())
}

/// Difference-coded adjacency with rank/select markers.
///
/// Vertex ids in queries are the renumbered ids `0..n`; [`Self::order`]
/// translates back. Every vertex block starts with a dummy payload bit, and
/// one extra marked bit after the last block closes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedGraph {
    n: usize,
    order: VertexOrder,
    payload: BitVector,
    vertex_marks: BitVector,
    edge_marks: BitVector,
}

/// Appends `len` zero bits.
fn push_zeros(w: &mut BitWriter, mut len: usize) {
    while len > 0 {
        let k = len.min(64);
        w.push_bits(0, k as u32);
        len -= k;
    }
}

/// Renumbers `g` geometrically and encodes it.
pub fn encode_graph(g: &Graph, positions: &Positions) -> Result<CompressedGraph> {
    if positions.len() != g.n() {
        return Err(GirgError::usage(format!(
            "{} positions for {} vertices",
            positions.len(),
            g.n()
        )));
    }
    let order = geometric_vertex_order(positions)?;
    Ok(CompressedGraph::encode_with_order(g, order))
}

impl CompressedGraph {
    /// Encodes `g` under an explicit renumbering.
    pub fn encode_with_order(g: &Graph, order: VertexOrder) -> CompressedGraph {
        let n = g.n();
        let mut payload = BitWriter::new();
        let mut vm = BitWriter::new();
        let mut em = BitWriter::new();
        let mut nbrs: Vec<u32> = Vec::new();
        for i in 0..n {
            let old = order.order[i] as usize;
            nbrs.clear();
            nbrs.extend(g.neighbors(old).iter().map(|&u| order.rank[u as usize]));
            nbrs.sort_unstable();
            payload.push(false);
            vm.push(true);
            em.push(true);
            for &j in &nbrs {
                let before = payload.len();
                write_signed(&mut payload, i as i64 - j as i64);
                let len = payload.len() - before;
                em.push(true);
                push_zeros(&mut em, len - 1);
                push_zeros(&mut vm, len);
            }
        }
        payload.push(false);
        vm.push(true);
        em.push(true);
        CompressedGraph {
            n,
            order,
            payload: payload.finish(),
            vertex_marks: vm.finish(),
            edge_marks: em.finish(),
        }
    }

    /// Assembles and validates stored parts.
    pub fn from_parts(
        order: Vec<u32>,
        payload: BitVector,
        vertex_marks: BitVector,
        edge_marks: BitVector,
    ) -> Result<Self> {
        let n = order.len();
        let order = VertexOrder::from_order(order)?;
        let len = payload.len();
        if vertex_marks.len() != len || edge_marks.len() != len {
            return Err(GirgError::corrupt("bit sequences differ in length"));
        }
        if vertex_marks.count_ones() != n + 1 {
            return Err(GirgError::corrupt(format!(
                "{} vertex marks for {n} vertices",
                vertex_marks.count_ones()
            )));
        }
        if len == 0 || !vertex_marks.get(1) || !vertex_marks.get(len) || !edge_marks.get(len) {
            return Err(GirgError::corrupt("missing block boundary marks"));
        }
        if vertex_marks
            .words()
            .iter()
            .zip(edge_marks.words())
            .any(|(v, e)| v & !e != 0)
        {
            return Err(GirgError::corrupt("vertex mark without edge mark"));
        }
        if (edge_marks.count_ones() - (n + 1)) % 2 != 0 {
            return Err(GirgError::corrupt("odd number of stored adjacencies"));
        }
        Ok(CompressedGraph {
            n,
            order,
            payload,
            vertex_marks,
            edge_marks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> &VertexOrder {
        &self.order
    }

    pub fn payload(&self) -> &BitVector {
        &self.payload
    }

    pub fn vertex_marks(&self) -> &BitVector {
        &self.vertex_marks
    }

    pub fn edge_marks(&self) -> &BitVector {
        &self.edge_marks
    }

    pub fn num_edges(&self) -> usize {
        (self.edge_marks.count_ones() - self.n - 1) / 2
    }

    /// Bits of the three sequences; the permutation is not counted.
    pub fn size_bits(&self) -> usize {
        3 * self.payload.len()
    }

    fn check_vertex(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(GirgError::usage(format!("vertex {i} outside 0..{}", self.n)));
        }
        Ok(())
    }

    /// Degree of renumbered vertex `i` from the markers alone.
    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_vertex(i)?;
        let start = self.edge_marks.rank_unchecked(self.vertex_marks.select_unchecked(i + 1));
        let end = self.edge_marks.rank_unchecked(self.vertex_marks.select_unchecked(i + 2));
        (end - start)
            .checked_sub(1)
            .ok_or_else(|| GirgError::corrupt("empty vertex block"))
    }

    /// The `s`-th neighbor (0-based, ascending) of renumbered vertex `i`.
    pub fn neighbor(&self, i: usize, s: usize) -> Result<usize> {
        let deg = self.degree(i)?;
        if s >= deg {
            return Err(GirgError::usage(format!(
                "neighbor index {s} out of range for degree {deg}"
            )));
        }
        let b = self.vertex_marks.select_unchecked(i + 1);
        let k = self.edge_marks.rank_unchecked(b);
        let b1 = self.edge_marks.select_unchecked(k + s + 1);
        let b2 = self.edge_marks.select_unchecked(k + s + 2);
        let (diff, used) = read_signed(&self.payload, b1)?;
        if used != b2 - b1 {
            return Err(GirgError::corrupt(format!("code at position {b1} misaligned with its marks")));
        }
        let j = i as i64 - diff;
        if j < 0 || j as usize >= self.n || j as usize == i {
            return Err(GirgError::corrupt(format!("decoded neighbor {j} of {i} out of range")));
        }
        Ok(j as usize)
    }

    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        (0..self.degree(i)?).map(|s| self.neighbor(i, s)).collect()
    }

    /// Full sequential decode in the renumbered labeling, validating every
    /// code and the symmetry of the stored adjacencies.
    pub fn decode_renumbered(&self) -> Result<Graph> {
        let len = self.payload.len();
        let mut forward: Vec<(u32, u32)> = Vec::new();
        let mut backward: Vec<(u32, u32)> = Vec::new();
        let mut b = 1;
        for i in 0..self.n {
            if !self.vertex_marks.get(b) || self.payload.get(b) {
                return Err(GirgError::corrupt(format!("vertex block {i} malformed at {b}")));
            }
            b += 1;
            let mut prev: Option<i64> = None;
            while b < len && !self.vertex_marks.get(b) {
                if !self.edge_marks.get(b) {
                    return Err(GirgError::corrupt(format!("unmarked code start at {b}")));
                }
                let (diff, used) = read_signed(&self.payload, b)?;
                if (b + 1..b + used).any(|p| p > len || self.edge_marks.get(p)) {
                    return Err(GirgError::corrupt(format!("code at {b} misaligned")));
                }
                b += used;
                let j = i as i64 - diff;
                if j < 0 || j as usize >= self.n || j as usize == i || prev.is_some_and(|p| p >= j) {
                    return Err(GirgError::corrupt(format!("invalid neighbor {j} of vertex {i}")));
                }
                prev = Some(j);
                let (i, j) = (i as u32, j as u32);
                if i < j {
                    forward.push((i, j));
                } else {
                    backward.push((j, i));
                }
            }
        }
        if b != len {
            return Err(GirgError::corrupt("trailing data after the last vertex block"));
        }
        backward.sort_unstable();
        if forward != backward {
            return Err(GirgError::corrupt("adjacency is not symmetric"));
        }
        Ok(Graph::from_sorted_unique(self.n, forward))
    }

    /// Full decode in the original labeling.
    pub fn decode(&self) -> Result<Graph> {
        Ok(self.decode_renumbered()?.relabel(&self.order.order))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.payload.len() as u64).to_le_bytes())?;
        for &v in &self.order.order {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for bv in [&self.payload, &self.vertex_marks, &self.edge_marks] {
            w.write_all(&(bv.len() as u64).to_le_bytes())?;
            for &word in bv.words() {
                w.write_all(&word.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    /// Reads the binary format; malformed or truncated input is a
    /// [`GirgError::Corruption`].
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(GirgError::corrupt("bad magic"));
        }
        let n = read_u64(&mut r)?;
        let payload_len = read_u64(&mut r)?;
        if n > u32::MAX as u64 {
            return Err(GirgError::corrupt(format!("vertex count {n} too large")));
        }
        let mut order = Vec::with_capacity((n as usize).min(1 << 24));
        for _ in 0..n {
            let v = read_u64(&mut r)?;
            if v >= n {
                return Err(GirgError::corrupt(format!("permutation entry {v} out of range")));
            }
            order.push(v as u32);
        }
        let mut parts = Vec::with_capacity(3);
        for _ in 0..3 {
            let len = read_u64(&mut r)?;
            if len != payload_len {
                return Err(GirgError::corrupt("bit sequence length disagrees with header"));
            }
            let words = len.div_ceil(64);
            let mut ws = Vec::with_capacity((words as usize).min(1 << 24));
            for _ in 0..words {
                ws.push(read_u64(&mut r)?);
            }
            parts.push(BitVector::from_words(ws, len as usize)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(GirgError::corrupt("trailing bytes"));
        }
        let e = parts.pop().unwrap();
        let v = parts.pop().unwrap();
        let b = parts.pop().unwrap();
        Self::from_parts(order, b, v, e)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            GirgError::corrupt("truncated file")
        } else {
            GirgError::Io(e)
        }
    })
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> Positions {
        Positions::new(1, (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()).unwrap()
    }

    fn bits(bv: &BitVector) -> String {
        (1..=bv.len()).map(|b| if bv.get(b) { '1' } else { '0' }).collect()
    }

    #[test]
    fn order_examples() {
        let one = Positions::new(2, vec![0.3, 0.3]).unwrap();
        assert_eq!(geometric_vertex_order(&one).unwrap().order, vec![0]);
        let p = Positions::new(1, vec![0.9, 0.1, 0.6, 0.3]).unwrap();
        let o = geometric_vertex_order(&p).unwrap();
        // 1-based: vertices 2, 4, 3, 1.
        assert_eq!(o.order, vec![1, 3, 2, 0]);
        assert_eq!(o.rank, vec![3, 0, 2, 1]);
        let tied = Positions::new(1, vec![0.9, 0.1, 0.12, 0.11, 0.95]).unwrap();
        assert_eq!(geometric_vertex_order(&tied).unwrap().order, vec![1, 2, 3, 0, 4]);
    }

    #[test]
    fn edgeless_encoding() {
        let cg = encode_graph(&Graph::empty(3), &line(3)).unwrap();
        // Three dummy bits plus the closing bit.
        assert_eq!(bits(cg.payload()), "0000");
        assert_eq!(bits(cg.vertex_marks()), "1111");
        assert_eq!(bits(cg.edge_marks()), "1111");
        for i in 0..3 {
            assert_eq!(cg.degree(i).unwrap(), 0);
        }
        assert_eq!(cg.decode().unwrap(), Graph::empty(3));
    }

    #[test]
    fn path_encoding() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let cg = encode_graph(&g, &line(3)).unwrap();
        // Blocks: [0 | 1 1] [0 | 0 1 | 1 1] [0 | 0 1] [0]; vertex 1 stores +1, -1.
        assert_eq!(bits(cg.payload()), "011" .to_string() + "00111" + "001" + "0");
        assert_eq!(bits(cg.vertex_marks()), "100100001001");
        assert_eq!(bits(cg.edge_marks()), "110110101101");
        assert_eq!(cg.degree(1).unwrap(), 2);
        assert_eq!(cg.neighbor(1, 0).unwrap(), 0);
        assert_eq!(cg.neighbor(1, 1).unwrap(), 2);
        assert!(matches!(cg.neighbor(1, 2), Err(GirgError::Usage(_))));
        assert_eq!(cg.decode().unwrap(), g);
    }

    #[test]
    fn small_graph_families_round_trip() {
        for n in 1..=8usize {
            let mut complete = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    complete.push((u, v));
                }
            }
            let star: Vec<(u32, u32)> = (1..n as u32).map(|v| (0, v)).collect();
            let pos = Positions::new(1, (0..n).map(|i| ((i * 37) % 97) as f64 / 97.0).collect()).unwrap();
            for edges in [complete, star, Vec::new()] {
                let g = Graph::from_edges(n, edges).unwrap();
                let cg = encode_graph(&g, &pos).unwrap();
                assert_eq!(cg.decode().unwrap(), g);
                assert_eq!(CompressedGraph::from_bytes(&cg.to_bytes()).unwrap(), cg);
            }
        }
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 3)]).unwrap();
        let cg = encode_graph(&g, &line(4)).unwrap();
        let bytes = cg.to_bytes();
        assert!(matches!(CompressedGraph::from_bytes(&bytes[..bytes.len() - 3]), Err(GirgError::Corruption(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(CompressedGraph::from_bytes(&bad), Err(GirgError::Corruption(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(CompressedGraph::from_bytes(&extra).is_err());
        // Flip every payload bit in turn: each result is either rejected or
        // decodes to some graph, never panics.
        let payload_start = 8 + 16 + 8 * 4 + 8;
        for k in 0..cg.payload().len() {
            let mut flipped = bytes.clone();
            flipped[payload_start + k / 8] ^= 1 << (k % 8);
            if let Ok(c) = CompressedGraph::from_bytes(&flipped) {
                let _ = c.decode();
                for i in 0..c.n() {
                    if let Ok(d) = c.degree(i) {
                        for s in 0..d {
                            let _ = c.neighbor(i, s);
                        }
                    }
                }
            }
        }
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, Positions)> {
        (1usize..40).prop_flat_map(|n| {
            let pairs = proptest::collection::vec((0..n as u32, 0..n as u32), 0..120);
            let pos = proptest::collection::vec(0.0f64..1.0, 2 * n);
            (Just(n), pairs, pos).prop_map(|(n, pairs, pos)| {
                let mut edges: Vec<(u32, u32)> = pairs
                    .into_iter()
                    .filter(|(u, v)| u != v)
                    .map(|(u, v)| (u.min(v), u.max(v)))
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                (Graph::from_edges(n, edges).unwrap(), Positions::new(2, pos).unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_queries((g, pos) in arb_graph()) {
            let cg = encode_graph(&g, &pos).unwrap();
            prop_assert_eq!(cg.decode().unwrap(), g.clone());
            prop_assert_eq!(cg.num_edges(), g.num_edges());
            prop_assert_eq!(cg.vertex_marks().count_ones(), g.n() + 1);
            prop_assert_eq!(cg.edge_marks().count_ones(), g.n() + 2 * g.num_edges() + 1);
            let ren = cg.decode_renumbered().unwrap();
            for i in 0..g.n() {
                let v = cg.vertex_marks();
                let e = cg.edge_marks();
                let marker = e.rank(v.select(i + 2).unwrap()).unwrap() - e.rank(v.select(i + 1).unwrap()).unwrap();
                prop_assert_eq!(marker, cg.degree(i).unwrap() + 1);
                let old = cg.order().order[i] as usize;
                prop_assert_eq!(cg.degree(i).unwrap(), g.degree(old));
                let got: Vec<u32> = cg.neighbors(i).unwrap().into_iter().map(|j| j as u32).collect();
                prop_assert_eq!(&got[..], ren.neighbors(i));
                let mut orig: Vec<u32> = got.iter().map(|&j| cg.order().order[j as usize]).collect();
                orig.sort_unstable();
                prop_assert_eq!(&orig[..], g.neighbors(old));
            }
            prop_assert_eq!(CompressedGraph::from_bytes(&cg.to_bytes()).unwrap(), cg);
        }
    }
}
