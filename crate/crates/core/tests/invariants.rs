use std::collections::BTreeMap;

use proptest::prelude::*;
use roughmax_core::dyadic::{cover_count, DyadicCube, Relation, Shift};
use roughmax_core::kernel::min_resolvable_level;
use roughmax_core::layering::{
    brute_force_sup, check_layers, layer_betas, layers_nested, linearized_sup, rm_check, select_layers,
};
use roughmax_core::operator::DyadicOperator;
use roughmax_core::{cz_decompose, GridFunction, KernelSpec, Rect, SphereFunction};

fn grid_fn(mesh: u32, rect: Rect, vals: &[f64]) -> GridFunction {
    let mut g = GridFunction::zeros(mesh, rect);
    for ((x, y), v) in rect.points().zip(vals.iter().cycle()) {
        g.set(x, y, *v);
    }
    g
}

fn shift() -> impl Strategy<Value = Shift> {
    (0usize..4).prop_map(|i| Shift::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_cubes_cover_once(mesh in 4u32..11, dl in 1i32..8, x in -5000i64..5000, y in -5000i64..5000) {
        let level = dl - mesh as i32;
        prop_assert_eq!(cover_count(x, y, level, mesh), 1);
    }

    #[test]
    fn standard_cubes_nest_or_miss(la in -6i32..2, lb in -6i32..2, a in (-20i64..20, -20i64..20), b in (-20i64..20, -20i64..20)) {
        let p = DyadicCube::standard(la, a.0, a.1);
        let q = DyadicCube::standard(lb, b.0, b.1);
        prop_assert_ne!(p.relation(&q), Relation::Overlap);
    }

    #[test]
    fn tk_output_stays_in_k(
        w in shift(),
        dl in 0i32..2,
        i in -2i64..3,
        j in -2i64..3,
        corner in (-40i64..40, -40i64..40),
        vals in prop::collection::vec(-1.0f64..1.0, 1..64),
    ) {
        let mesh = 6;
        let cube = DyadicCube::new(w, min_resolvable_level(mesh) + dl, i, j);
        let g = grid_fn(mesh, Rect::square(corner.0, corner.1, 24), &vals);
        let mut op = DyadicOperator::new(KernelSpec::Cos.build(256, true).unwrap(), mesh);
        let out = op.tk(&cube, &g).unwrap();
        let k = cube.lattice_rect(mesh).unwrap();
        prop_assert!(out.nonzeros().all(|(x, y, _)| k.contains_point(x, y)));
    }

    #[test]
    fn layering_reproduces_level_sweep(
        cubes in prop::collection::vec((-4i32..=0, 0i64..16, 0i64..16), 1..24),
        vals in prop::collection::vec(-1.0f64..1.0, 1..32),
    ) {
        let mesh = 5;
        let mut part: Vec<DyadicCube> = cubes
            .iter()
            .map(|&(l, i, j)| {
                let n = 1i64 << (-l);
                DyadicCube::standard(l, i % n, j % n)
            })
            .collect();
        part.sort();
        part.dedup();
        let mut tk = BTreeMap::new();
        for (n, k) in part.iter().enumerate() {
            let r = k.lattice_rect(mesh).unwrap();
            let rot: Vec<f64> = vals.iter().cycle().skip(n).take(vals.len()).copied().collect();
            tk.insert(*k, grid_fn(mesh, r, &rot));
        }
        let layers = select_layers(&part);
        prop_assert!(check_layers(&part, &layers).is_ok());
        prop_assert!(layers_nested(&layers));
        let beta = layer_betas(&layers, &tk, mesh).unwrap();
        let lin = linearized_sup(&part, &layers, &beta).unwrap();
        let brute = brute_force_sup(&part, &tk, mesh).unwrap();
        prop_assert_eq!(lin.max_abs_diff(&brute), 0.0);
    }

    #[test]
    fn maximal_partial_sums_obey_sign_bound(
        n in 1usize..9,
        vals in prop::collection::vec(-1.0f64..1.0, 8..64),
        offsets in prop::collection::vec((-3i64..3, -3i64..3), 8),
    ) {
        let fs: Vec<GridFunction> = (0..n)
            .map(|i| {
                let rot: Vec<f64> = vals.iter().cycle().skip(3 * i).take(vals.len()).copied().collect();
                grid_fn(3, Rect::square(offsets[i].0, offsets[i].1, 6), &rot)
            })
            .collect();
        let rep = rm_check(&fs, 10, 0).unwrap();
        prop_assert!(rep.exhaustive);
        prop_assert!(rep.ratio <= 1.0 + 1e-12, "ratio {}", rep.ratio);
    }

    #[test]
    fn split_is_exact(vals in prop::collection::vec(-50.0f64..50.0, 16), s in 1u32..16, eta in 0.01f64..1.0) {
        let om = SphereFunction::new(vals).unwrap();
        let (a, b) = om.split(s, eta);
        for ((x, y), z) in a.values().iter().zip(b.values()).zip(om.values()) {
            prop_assert!(x + y == *z);
            prop_assert!(*x == 0.0 || *y == 0.0);
        }
        let t = om.split_threshold(s, eta);
        prop_assert!(b.linf_norm() < t || om.l1_norm() == 0.0);
    }

    #[test]
    fn decomposition_commutes_with_scaling(
        pts in prop::collection::vec((0i64..32, 0i64..32, 0.5f64..40.0), 1..12),
        alpha in 0.5f64..4.0,
    ) {
        let mesh = 5;
        let mut f = GridFunction::zeros(mesh, Rect::square(0, 0, 32));
        for &(x, y, v) in &pts {
            f.add_at(x, y, v);
        }
        let root = roughmax_core::default_root_level(&f, alpha).unwrap().max(0);
        let a = cz_decompose(&f, alpha, root).unwrap();
        let b = cz_decompose(&f.scaled(2.0), 2.0 * alpha, root).unwrap();
        prop_assert_eq!(a.bad.len(), b.bad.len());
        for (p, q) in a.bad.iter().zip(&b.bad) {
            prop_assert_eq!(p.cube, q.cube);
            prop_assert_eq!(p.bq.scaled(2.0).max_abs_diff(&q.bq), 0.0);
        }
    }
}
