//! Exact geodesics in a seeded environment, cross-checked against the
//! bidirectional search and the brute-force oracle.

use fpp_lab::geodesic::{
    brute_force_passage_time, geodesic_tie_diagnostic, shortest_path, shortest_path_with, SearchMode, SearchOptions,
};
use fpp_lab::lattice::Point;
use fpp_lab::weights::{EdgeEnvironment, WeightDistribution};

fn main() -> fpp_lab::Result<()> {
    let env = EdgeEnvironment::new(WeightDistribution::default(), 2024);
    let o = Point::origin(2)?;
    let v = Point::new(&[40, 7])?;

    let g = shortest_path(&env, &o, &v)?;
    println!("T(0, {v}) = {:.6} over {} edges (|v|_1 = {})", g.time, g.len(), v.l1_norm());

    let bi = SearchOptions {
        mode: SearchMode::Bidirectional,
        ..SearchOptions::default()
    };
    let h = shortest_path_with(&env, &o, &v, &bi)?;
    println!("bidirectional agrees: {}", h.vertices == g.vertices);

    let near_tie = geodesic_tie_diagnostic(&env, &o, &v, 1e-3)?;
    println!("second-best path within 1e-3: {near_tie}");

    let w = Point::new(&[3, 2])?;
    let patch: Vec<Point> = (0..4).flat_map(|x| (0..4).map(move |y| Point::new(&[x, y]).unwrap())).collect();
    let opts = SearchOptions {
        clip: Some((vec![0, 0], vec![3, 3])),
        ..SearchOptions::default()
    };
    let fast = shortest_path_with(&env, &o, &w, &opts)?.time;
    let (slow, path) = brute_force_passage_time(&env, &o, &w, &patch)?;
    println!("4x4 patch: dijkstra {fast:.6}, exhaustive {slow:.6} via {} vertices", path.len());
    Ok(())
}
