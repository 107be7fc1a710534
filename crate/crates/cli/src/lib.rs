//! Library side of the `pedcc` command-line tool: the point-set file format,
//! the benchmark harness and table rendering. The binary in `main.rs` is a
//! thin argument-parsing layer over these.

pub mod bench;
pub mod pointset;
pub mod table;
