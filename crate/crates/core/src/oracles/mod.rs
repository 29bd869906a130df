//! Independent brute-force references: homogeneous-matrix group arithmetic,
//! shortest-path distances on the lattice, and dense small-scale transport.

mod dense;
mod dijkstra;
mod matrix;

pub use dense::{dense_ot_small, exact_ot, DenseOt, EXACT_OT_MAX_CELLS};
pub use dijkstra::{dijkstra_distance_map, geodesic_path, GeodesicGraph};
pub use matrix::Mat3;
