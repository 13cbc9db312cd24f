//! Fixtures shared by the benchmarks.

use roughmax_core::lab::suite::{self, rng};
use roughmax_core::{cz_decompose, CZDecomposition, GridFunction, KernelSpec, SphereFunction};

pub fn cosine() -> SphereFunction {
    KernelSpec::Cos.build(1024, true).expect("cosine kernel")
}

/// Unit-mass spikes on the unit square.
pub fn spikes(mesh: u32, n: usize) -> GridFunction {
    suite::spike_train(mesh, n, &mut rng(11, 0))
}

/// A deep tower and its decomposition, as used by the layering experiments.
pub fn tower(mesh: u32) -> (GridFunction, CZDecomposition) {
    let f = suite::tower(mesh, 2, 1, (mesh - 1) as usize, 1.0, &mut rng(11, 1)).expect("tower");
    let dec = cz_decompose(&f, 1.0, 1).expect("decomposition");
    (f, dec)
}
