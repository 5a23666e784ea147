//! Succinct adjacency storage: geometric renumbering, difference coding and
//! constant-time degree and neighbor queries through rank/select markers.

mod bitvector;
mod coding;
mod compressed;

pub use bitvector::{BitVector, BitWriter};
pub use coding::{gamma_len, read_signed, write_signed};
pub use compressed::{encode_graph, geometric_vertex_order, CompressedGraph, VertexOrder};
