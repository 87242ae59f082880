//! Small named instances and seeded generators used by tests, the
//! acceptance run and the command line examples.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::*;
use crate::normalize::{normalize, RawDrawing};
use crate::rat::Rat;

/// Cluster of [`plus_cluster`] where the two strands cross.
pub const PLUS_CENTER: ClusterId = ClusterId(0);

/// Pipe expanded by the [`weight2_parallel`] and [`weight2_crossing`] tests.
pub const MIDDLE_PIPE: PipeId = PipeId(0);

/// Host with cluster `i` at `points[i]` and pipe `j` joining `pipes[j]`.
pub fn host(points: &[Point], pipes: &[(u32, u32)]) -> HostGraph {
    HostGraph {
        clusters: points
            .iter()
            .enumerate()
            .map(|(i, p)| (ClusterId(i as u32), p.clone()))
            .collect(),
        pipes: pipes
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| (PipeId(j as u32), Pipe::straight(ClusterId(a), ClusterId(b))))
            .collect(),
    }
}

/// A guest cycle following the closed cluster walk `walk`: vertex `i` sits
/// at `walk[i]` and edge `i` joins vertices `i` and `i + 1`.
pub fn cycle_on(host: HostGraph, walk: &[u32]) -> Instance {
    let by_ends: BTreeMap<(ClusterId, ClusterId), PipeId> = host
        .pipes
        .iter()
        .map(|(&id, p)| (p.canonical(), id))
        .collect();
    let n = walk.len();
    let mut inst = Instance {
        host,
        ..Default::default()
    };
    for (i, &c) in walk.iter().enumerate() {
        inst.guest.vertices.insert(VertexId(i as u32));
        inst.map.vertex_map.insert(VertexId(i as u32), ClusterId(c));
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let e = EdgeId(i as u32);
        inst.guest
            .edges
            .insert(e, (VertexId(i as u32), VertexId(j as u32)));
        let key = canonical_pair(ClusterId(walk[i]), ClusterId(walk[j]));
        let p = by_ends
            .get(&key)
            .copied()
            .unwrap_or_else(|| panic!("no pipe between {} and {}", key.0, key.1));
        inst.map.edge_map.insert(e, p);
    }
    inst
}

/// `k` clusters in convex position on the parabola `y = x²`, joined in order.
fn convex_polygon(k: usize) -> HostGraph {
    let points: Vec<Point> = (0..k as i64).map(|i| Point::int(i, i * i)).collect();
    let pipes: Vec<(u32, u32)> = (0..k as u32).map(|i| (i, (i + 1) % k as u32)).collect();
    host(&points, &pipes)
}

/// `C_{k·times}` winding `times` times around a crossing-free `k`-gon.
pub fn winding_cycle(k: usize, times: usize) -> Instance {
    let walk: Vec<u32> = (0..k * times).map(|i| (i % k) as u32).collect();
    cycle_on(convex_polygon(k), &walk)
}

/// The identity map of `C_k` onto a crossing-free `k`-gon.
pub fn identity_cycle(k: usize) -> Instance {
    winding_cycle(k, 1)
}

/// `C₆` wound twice around a crossing-free triangle.
pub fn tri6() -> Instance {
    winding_cycle(3, 2)
}

/// A `k`-gon drawn with one bend per side, normalized: a winding-1 cycle
/// on a host of `2k` clusters.
pub fn subdivided_cycle(k: usize) -> Instance {
    let mut raw = RawDrawing::default();
    // vertices on the parabola at even x, bends at odd x below the chords
    for i in 0..k as i64 {
        raw.vertices
            .insert(VertexId(i as u32), Point::int(2 * i, 4 * i * i));
    }
    for i in 0..k as u32 {
        let j = (i + 1) % k as u32;
        let bends = if j == 0 {
            // closing side runs above the polygon
            let x = k as i64 - 1;
            vec![Point::int(x, 4 * x * x + 1)]
        } else {
            let x = 2 * i as i64 + 1;
            vec![Point::int(x, x * x)]
        };
        raw.edges.push((VertexId(i), VertexId(j), bends));
    }
    normalize(&raw).expect("valid drawing")
}

/// A triangle guest on three corners of a square host; the fourth corner
/// carries no guest vertex.
pub fn with_idle_cluster() -> Instance {
    let points = [
        Point::int(0, 0),
        Point::int(2, 0),
        Point::int(2, 2),
        Point::int(0, 2),
    ];
    let h = host(&points, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 0)]);
    cycle_on(h, &[0, 1, 2])
}

/// A figure eight through a degree-4 cluster: one visit goes east-west,
/// the other north-south, so the strands must cross once.
pub fn plus_cluster() -> Instance {
    let points = [
        Point::int(0, 0),
        Point::int(2, 0),
        Point::int(2, 2),
        Point::int(0, 2),
        Point::int(-2, 0),
        Point::int(-2, -2),
        Point::int(0, -2),
    ];
    // 0 center, 1 east, 2 north-east, 3 north, 4 west, 5 south-west, 6 south
    let h = host(
        &points,
        &[
            (0, 1),
            (0, 3),
            (0, 4),
            (0, 6),
            (1, 2),
            (2, 3),
            (6, 5),
            (5, 4),
        ],
    );
    cycle_on(h, &[0, 1, 2, 3, 0, 6, 5, 4])
}

/// Two triangles sharing the pipe `AB`, traversed once per triangle in the
/// same direction. The host has clusters of degree 3.
pub fn theta_cycle() -> Instance {
    let points = [
        Point::int(0, 0),
        Point::int(2, 0),
        Point::int(1, 2),
        Point::int(1, -2),
    ];
    let h = host(&points, &[(0, 1), (1, 2), (2, 0), (1, 3), (3, 0)]);
    cycle_on(h, &[0, 1, 2, 0, 1, 3])
}

/// `C₈` winding twice around a square; [`MIDDLE_PIPE`] carries two
/// parallel strands.
pub fn weight2_parallel() -> Instance {
    let points = [
        Point::int(0, 0),
        Point::int(2, 0),
        Point::int(2, 2),
        Point::int(0, 2),
    ];
    let h = host(&points, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    cycle_on(h, &[0, 1, 2, 3, 0, 1, 2, 3])
}

/// [`MIDDLE_PIPE`] carries two strands that enter on opposite sides and
/// leave swapped.
pub fn weight2_crossing() -> Instance {
    // 0 u, 1 v, 2 north-west, 3 south-west, 4 north-east, 5 south-east
    let points = [
        Point::int(0, 0),
        Point::int(2, 0),
        Point::int(-1, 1),
        Point::int(-1, -1),
        Point::int(3, 1),
        Point::int(3, -1),
    ];
    let h = host(
        &points,
        &[(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 4), (3, 5)],
    );
    cycle_on(h, &[0, 1, 5, 3, 0, 1, 4, 2])
}

/// A path `a b c` whose two edges share one pipe: `b` is a spur.
pub fn spur_path() -> Instance {
    let h = host(&[Point::int(0, 0), Point::int(1, 0)], &[(0, 1)]);
    let mut inst = Instance {
        host: h,
        ..Default::default()
    };
    for (v, c) in [(0, 0), (1, 1), (2, 0)] {
        inst.guest.vertices.insert(VertexId(v));
        inst.map.vertex_map.insert(VertexId(v), ClusterId(c));
    }
    for (e, a, b) in [(0, 0, 1), (1, 1, 2)] {
        inst.guest
            .edges
            .insert(EdgeId(e), (VertexId(a), VertexId(b)));
        inst.map.edge_map.insert(EdgeId(e), PipeId(0));
    }
    inst
}

/// A 4-cycle folded onto a host path, with spurs at both turning points.
pub fn spur_cycle() -> Instance {
    let h = host(
        &[Point::int(0, 0), Point::int(1, 0), Point::int(2, 1)],
        &[(0, 1), (1, 2)],
    );
    cycle_on(h, &[0, 1, 2, 1])
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, side: i64) -> Vec<Point> {
    let mut all: Vec<(i64, i64)> = (0..side)
        .flat_map(|x| (0..side).map(move |y| (x, y)))
        .collect();
    all.shuffle(rng);
    all.truncate(n);
    all.into_iter().map(|(x, y)| Point::int(x, y)).collect()
}

/// A random connected host drawing: `n` clusters on a small grid, a random
/// spanning tree plus `extra` further pipes, some with a bend. The drawing
/// may be degenerate; callers filter with the geometry checks. The guest is
/// empty.
pub fn random_drawn_host(seed: u64, n: usize, extra: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = random_points(&mut rng, n, 7);
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for i in 1..n as u32 {
        pairs.push((rng.gen_range(0..i), i));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        let key = (a.min(b), a.max(b));
        if a != b && !pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
            pairs.push((a, b));
        }
    }
    let mut h = host(&points, &pairs);
    for pipe in h.pipes.values_mut() {
        if rng.gen_bool(0.3) {
            let bend = Point::new(
                Rat::new(rng.gen_range(0..14), 2),
                Rat::new(rng.gen_range(0..14), 2),
            );
            if bend != h.clusters[&pipe.u] && bend != h.clusters[&pipe.v] {
                pipe.bends.push(bend);
            }
        }
    }
    Instance {
        host: h,
        ..Default::default()
    }
}

/// A random spur-free guest cycle on a random drawn host, or `None` when the
/// seed gives a degenerate drawing, no closed walk, or an order space above
/// `budget`.
pub fn random_spur_free_cycle(seed: u64, budget: u64) -> Option<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(3..=6);
    let extra = rng.gen_range(1..=4);
    let base = random_drawn_host(seed, n, extra);
    let adj = base.host.skeleton().incident();
    let ends = |p: &PipeId| base.host.pipes[p].ends();
    let neighbors = |c: u32| -> Vec<u32> {
        adj.get(&ClusterId(c))
            .map(|ps| {
                ps.iter()
                    .map(|p| {
                        let (a, b) = ends(p);
                        if a.0 == c {
                            b.0
                        } else {
                            a.0
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    let max_len = rng.gen_range(3..=12);
    let mut found = None;
    'tries: for _ in 0..20 {
        let start = rng.gen_range(0..n as u32);
        let mut walk = vec![start];
        while walk.len() < 16 {
            let cur = *walk.last().unwrap();
            let prev = if walk.len() >= 2 {
                Some(walk[walk.len() - 2])
            } else {
                None
            };
            let options: Vec<u32> = neighbors(cur)
                .into_iter()
                .filter(|&c| Some(c) != prev)
                .collect();
            let Some(&next) = options.choose(&mut rng) else {
                continue 'tries;
            };
            if next == start
                && walk.len() >= 3
                && walk[1] != cur
                && (walk.len() >= max_len || rng.gen_bool(0.5))
            {
                found = Some(walk);
                break 'tries;
            }
            walk.push(next);
        }
    }
    let walk = found?;
    let inst = cycle_on(base.host, &walk).pruned();
    let weights = inst.map.weights();
    let mut size: u64 = 1;
    for &w in weights.values() {
        for k in 2..=w {
            size = size.saturating_mul(k);
        }
    }
    if size > budget || !validate(&inst).is_clean() || Embedded::from_instance(&inst).is_err() {
        return None;
    }
    Some(inst)
}

/// Point at half-step `h` along the boundary of the lens
/// `x² ≤ y ≤ 2n² − x²`, counterclockwise from `(−n, n²)`.
fn lens_point(h: i64, n: i64) -> Point {
    if h <= 4 * n {
        let x2 = h - 2 * n; // twice x
        Point::new(Rat::new(x2, 2), Rat::new(x2 * x2, 4))
    } else {
        let x2 = 2 * n - (h - 4 * n);
        Point::new(Rat::new(x2, 2), Rat::new(8 * n * n - x2 * x2, 4))
    }
}

/// Crossing-free ring of `4n` clusters with an ear cluster next to every
/// side, all in convex position. The guest winds `laps` times, taking
/// either the side or its ear at every step. Its crossing number is
/// `laps − 1`.
pub fn lens_ring(n: usize, laps: usize, seed: u64) -> Instance {
    let n = n.max(1) as i64;
    let ring = 4 * n;
    let points: Vec<Point> = (0..2 * ring).map(|h| lens_point(h, n)).collect();
    // cluster h is the point at half-step h; even ones form the ring
    let mut pipes = Vec::new();
    for i in 0..ring {
        let (a, e, b) = (2 * i, 2 * i + 1, (2 * i + 2) % (2 * ring));
        pipes.push((a as u32, b as u32));
        pipes.push((a as u32, e as u32));
        pipes.push((e as u32, b as u32));
    }
    // the first `ears[i]` laps take the ear at step i, so the laps stay
    // nested and only the spiral seam forces crossings
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ears: Vec<usize> = (0..ring).map(|_| rng.gen_range(0..=laps)).collect();
    let mut walk = Vec::new();
    for lap in 0..laps {
        for i in 0..ring {
            walk.push((2 * i) as u32);
            if lap < ears[i as usize] {
                walk.push((2 * i + 1) as u32);
            }
        }
    }
    cycle_on(host(&points, &pipes), &walk).pruned()
}

/// A [`lens_ring`] with about `edges` guest edges.
pub fn perf_instance(edges: usize, laps: usize, seed: u64) -> Instance {
    // one lap has 4n steps of 1.5 edges on average
    lens_ring(edges / (6 * laps), laps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::crossing_ledger;

    #[test]
    fn named_instances_are_admissible() {
        for inst in [
            tri6(),
            identity_cycle(5),
            winding_cycle(4, 3),
            subdivided_cycle(5),
            with_idle_cluster(),
            plus_cluster(),
            theta_cycle(),
            weight2_parallel(),
            weight2_crossing(),
            lens_ring(3, 2, 1),
        ] {
            let report = validate(&inst);
            assert!(report.is_clean(), "{report}");
            assert_eq!(inst.guest.shape(), Shape::Cycle);
            assert_eq!(crossing_ledger(&inst).unwrap().cr2, 0);
        }
        assert!(!validate(&spur_path()).spurs.is_empty());
        assert!(!validate(&spur_cycle()).spurs.is_empty());
    }

    #[test]
    fn subdivided_cycle_doubles_clusters() {
        let inst = subdivided_cycle(4);
        assert_eq!(inst.host.clusters.len(), 8);
        assert_eq!(inst.guest.edges.len(), 8);
    }

    #[test]
    fn random_cycles_are_spur_free() {
        let found: Vec<Instance> = (0..60)
            .filter_map(|s| random_spur_free_cycle(s, 1_000_000))
            .collect();
        assert!(found.len() > 20, "only {} instances", found.len());
        assert!(found.iter().any(|i| crossing_ledger(i).unwrap().cr2 > 0));
        for inst in &found {
            assert_eq!(inst.guest.shape(), Shape::Cycle);
            assert!(spurs(&inst.guest, &inst.map).is_empty());
        }
    }

    #[test]
    fn perf_instance_size() {
        let inst = perf_instance(6_000, 4, 7);
        let e = inst.guest.edges.len();
        assert!((4_500..7_500).contains(&e), "{e}");
    }
}
