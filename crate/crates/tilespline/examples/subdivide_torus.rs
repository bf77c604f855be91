//! Bear-4 subdivision of a deformed periodic torus, exported as a closed quad mesh.

use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::subdivision::{mesh_export, run_scheme, BoundaryMode, ControlNet};

fn main() -> tilespline::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-output".into()));
    fs::create_dir_all(&out)?;
    let n = 16;
    let net = ControlNet::from_box(&[n, n], 3, BoundaryMode::Periodic, |j| {
        let (u, v) = (j[0] as f64 * TAU / n as f64, j[1] as f64 * TAU / n as f64);
        let r = 1.0 + 0.25 * (3.0 * u).cos();
        vec![(3.0 + r * v.cos()) * u.cos(), (3.0 + r * v.cos()) * u.sin(), r * v.sin()]
    })?;
    let (m, d) = Preset::Bear.system();
    let mask = bspline_mask(&m, &d, 3)?;
    for q in 0..=4 {
        let s = run_scheme(&mask, &net, q)?;
        let path = out.join(format!("torus_q{q}.obj"));
        mesh_export(&s, BufWriter::new(File::create(&path)?))?;
        println!("q = {q}: {} vertices and quads -> {}", s.len(), path.display());
    }
    Ok(())
}
