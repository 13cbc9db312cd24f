//! Desk-scale numerical laboratory for the maximal truncated rough singular
//! integral on the plane: shifted dyadic grids, the Calderón–Zygmund
//! decomposition, smooth dyadic kernel pieces, microlocal sector
//! decompositions, the cube layerings that linearize the maximal operator,
//! and the experiment drivers that measure all of it.

pub mod czd;
pub mod dyadic;
pub mod error;
pub mod fft;
pub mod grid;
pub mod kernel;
pub mod lab;
pub mod layering;
pub mod microlocal;
pub mod operator;
pub mod sphere;

pub use czd::{cz_decompose, default_root_level, verify_cz, BadCube, CZDecomposition, Check, CzReport};
pub use dyadic::{cover_count, cubes_meeting, DyadicCube, RealBox, Relation, Shift};
pub use error::{Error, Result};
pub use grid::{GridFunction, Rect};
pub use layering::{active_cubes, build_f_levels, partition_i_sharp, rm_check, select_layers, ActiveCube, CellSet, RmReport};
pub use sphere::{KernelSpec, SphereFunction};
