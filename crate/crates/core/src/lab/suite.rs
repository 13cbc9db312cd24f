//! Seeded test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::czd::cz_decompose;
use crate::dyadic::{cubes_meeting, DyadicCube, Shift};
use crate::error::Result;
use crate::grid::{GridFunction, Rect};

/// A named input function.
#[derive(Clone, Debug)]
pub struct Input {
    pub name: String,
    pub f: GridFunction,
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Lattice box of the unit square.
pub fn unit_box(mesh: u32) -> Rect {
    Rect::square(0, 0, 1 << mesh)
}

fn normalized(f: GridFunction) -> GridFunction {
    let n = f.l1_norm();
    if n > 0.0 {
        f.scaled(1.0 / n)
    } else {
        f
    }
}

/// `n` single-cell spikes with masses in `[0.5, 1.5)`, unit total mass.
pub fn spike_train(mesh: u32, n: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    let side = 1i64 << mesh;
    let mut f = GridFunction::zeros(mesh, unit_box(mesh));
    for _ in 0..n {
        let (x, y) = (rng.gen_range(0..side), rng.gen_range(0..side));
        f.add_at(x, y, rng.gen_range(0.5..1.5));
    }
    normalized(f)
}

/// Bad part of a noisy Gaussian mixture, unit mass.
pub fn blob_bad_part(mesh: u32, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let centers: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8), rng.gen_range(0.01..0.05)))
        .collect();
    let noise: Vec<f64> = (0..1usize << (2 * mesh)).map(|_| rng.gen_range(0.5..1.5)).collect();
    let side = 1usize << mesh;
    let smooth = GridFunction::from_fn(mesh, unit_box(mesh), |x, y| {
        centers.iter().map(|&(cx, cy, w)| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp()).sum()
    });
    let f = normalized(GridFunction::from_fn(mesh, unit_box(mesh), |x, y| {
        let (i, j) = ((x * side as f64).round() as usize, (y * side as f64).round() as usize);
        smooth.get(i as i64, j as i64) * noise[j * side + i]
    }));
    let dec = cz_decompose(&f, 4.0, 0)?;
    Ok(normalized(dec.bad_part()))
}

/// Smooth compactly supported bump, unit mass.
pub fn bump(mesh: u32, rng: &mut ChaCha8Rng) -> GridFunction {
    let (cx, cy, r) = (rng.gen_range(0.35..0.65), rng.gen_range(0.35..0.65), rng.gen_range(0.1..0.3));
    normalized(GridFunction::from_fn(mesh, unit_box(mesh), |x, y| {
        let t = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
        if t < 1.0 {
            (1.0 - t).powi(3)
        } else {
            0.0
        }
    }))
}

/// Inputs of the weak-type experiment.
pub fn weak_suite(mesh: u32, seed: u64) -> Result<Vec<Input>> {
    let mut out = Vec::new();
    for (i, n) in [1usize, 4, 4, 16].into_iter().enumerate() {
        let f = spike_train(mesh, n, &mut rng(seed, 100 + i as u64));
        out.push(Input { name: format!("spikes{n}_{i}"), f });
    }
    for i in 0..2 {
        out.push(Input { name: format!("blob_{i}"), f: blob_bad_part(mesh, &mut rng(seed, 200 + i))? });
    }
    for i in 0..2 {
        out.push(Input { name: format!("bump_{i}"), f: bump(mesh, &mut rng(seed, 300 + i)) });
    }
    Ok(out)
}

/// Spikes whose isolated decomposition cubes sit at levels in `[q_lo, q_hi]`,
/// each carrying mass in `(α|Q|, 4α|Q|)`.
pub fn multilevel_spikes(mesh: u32, n: usize, q_lo: i32, q_hi: i32, alpha: f64, rng: &mut ChaCha8Rng) -> GridFunction {
    let side = 1i64 << mesh;
    let h2 = (-2.0 * mesh as f64).exp2();
    let mut f = GridFunction::zeros(mesh, unit_box(mesh));
    for _ in 0..n {
        let q = rng.gen_range(q_lo..=q_hi);
        let mass = alpha * (2.0 * q as f64).exp2() * rng.gen_range(1.2..3.6);
        let (x, y) = (rng.gen_range(0..side), rng.gen_range(0..side));
        f.add_at(x, y, mass / h2);
    }
    f
}

/// Adds one chain `K_0 ⊋ K_1 ⊋ …` of standard cubes starting at `top`.
///
/// Each `K_i` receives a spike in a cube `Q_i` of level `l(K_i) − s` inside
/// `½K_i \ K_{i+1}` with average `2α`, so that `Q_i` is a stopping cube and
/// `K_i` is active for `s`. Returns the chain.
fn add_chain(f: &mut GridFunction, top: DyadicCube, s: i32, depth: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Result<Vec<DyadicCube>> {
    let mesh = f.mesh();
    let h2 = f.cell_area();
    let mut k = top;
    let mut chain = Vec::new();
    for _ in 0..depth {
        let q_level = k.level - s;
        if q_level < 1 - mesh as i32 {
            break;
        }
        let next = k.children()[rng.gen_range(0..4)];
        let half = k.half_rect(mesh)?;
        let next_rect = next.lattice_rect(mesh)?;
        let mut spots = Vec::new();
        for c in cubes_meeting(&half, q_level, Shift::ZERO, mesh) {
            let r = c.lattice_rect(mesh)?;
            if half.contains_rect(&r) && !next_rect.intersects(&r) {
                spots.push((c, r));
            }
        }
        let (q, r) = spots[rng.gen_range(0..spots.len())];
        let (x, y) = (rng.gen_range(r.x0..r.x1), rng.gen_range(r.y0..r.y1));
        f.add_at(x, y, 2.0 * alpha * q.measure() / h2);
        chain.push(k);
        k = next;
    }
    Ok(chain)
}

/// Nested-cube stress input on the standard cube of level `box_level` at the
/// origin: one chain from the whole box and a second from a free quadrant.
pub fn tower(mesh: u32, s: u32, box_level: i32, depth: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let root = DyadicCube::standard(box_level, 0, 0);
    let mut f = GridFunction::zeros(mesh, root.lattice_rect(mesh)?);
    let chain = add_chain(&mut f, root, s as i32, depth, alpha, rng)?;
    // quadrants of the root untouched by the first chain's top spike and its next cube
    let spike_cells: Vec<(i64, i64)> = f.nonzeros().map(|(x, y, _)| (x, y)).collect();
    let free: Vec<DyadicCube> = root
        .children()
        .into_iter()
        .filter(|c| {
            let r = c.lattice_rect(mesh).expect("on lattice");
            chain.get(1).map_or(true, |k1| k1 != c) && !spike_cells.iter().any(|&(x, y)| r.contains_point(x, y))
        })
        .collect();
    if let Some(&start) = free.get(rng.gen_range(0..free.len().max(1))) {
        add_chain(&mut f, start, s as i32, depth.saturating_sub(1), alpha, rng)?;
    }
    Ok(f)
}

/// `count` seeded towers.
pub fn tower_suite(mesh: u32, s: u32, box_level: i32, depth: usize, alpha: f64, seed: u64, count: usize) -> Result<Vec<Input>> {
    (0..count)
        .map(|i| {
            let f = tower(mesh, s, box_level, depth, alpha, &mut rng(seed, 400 + i as u64))?;
            Ok(Input { name: format!("tower_{i}"), f })
        })
        .collect()
}
