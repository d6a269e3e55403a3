//! Points, canonical edges, the confinement ellipse and cylinder slabs.

use fpp_lab::lattice::{
    confinement_region, cylinder_slab_edges, cylinder_slab_filter, edge_center_distance, Cylinder, Edge, Point,
};

fn main() -> fpp_lab::Result<()> {
    let o = Point::origin(2)?;
    let v = Point::new(&[10, 0])?;

    let e = Edge::between(&Point::new(&[1, 0])?, &o)?;
    let f = Edge::new(Point::new(&[3, 4])?, 1)?;
    println!("{e} has base {} and axis {}", e.base(), e.axis());
    println!("center distance {e} -> {f}: {:.4}", edge_center_distance(&e, &f)?);

    for (a, b) in [(1.0, 2.0), (1.0, 1.0), (0.5, 3.0)] {
        let r = confinement_region(&o, &v, a, b)?;
        let (lo, hi) = r.bounding_box();
        println!("[a, b] = [{a}, {b}]: budget {}, box {lo:?}..{hi:?}", r.budget);
    }

    let cyl = Cylinder::new(&v, 2.0)?;
    let probes = [[5, 1], [5, 3], [-40, 2]].map(|c| Point::new(&c).unwrap());
    for p in &probes {
        println!("{p} in cyl(0, v, 2): {}", cyl.contains(p));
    }

    let pts: Vec<Point> = (-2..=12).flat_map(|x| (-3..=3).map(move |y| Point::new(&[x, y]).unwrap())).collect();
    let slab = cylinder_slab_filter(&pts, &v, 10.0, 1.5)?;
    println!("{} of {} patch points lie in the slab but outside r = 1.5", slab.len(), pts.len());
    println!("|E(10, 1.5)| = {}", cylinder_slab_edges(&v, 10.0, 1.5)?.len());
    Ok(())
}
