//! A catenoid strip refined with held boundary rows: the boundary control points stay put.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::subdivision::{mesh_export, run_scheme, BoundaryMode, ControlNet};

fn main() -> tilespline::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-output".into()));
    fs::create_dir_all(&out)?;
    let net = ControlNet::from_box(&[12, 6], 3, BoundaryMode::Held, |j| {
        let u = j[0] as f64 * std::f64::consts::PI / 11.0;
        let v = j[1] as f64 * 0.4 - 1.0;
        vec![v.cosh() * u.cos(), v.cosh() * u.sin(), v]
    })?;
    let (m, d) = Preset::Bear.system();
    let mask = bspline_mask(&m, &d, 2)?;
    let q = 4;
    let s = run_scheme(&mask, &net, q)?;
    let mut moved: f64 = 0.0;
    for k in net.held() {
        let mut img = k.clone();
        for _ in 0..q {
            img = m.apply(&img);
        }
        let (a, b) = (net.get(k).unwrap(), s.get(&img).unwrap());
        moved = moved.max(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    println!("{} held boundary nodes, largest displacement after {q} steps: {moved:e}", net.held().len());
    let path = out.join("catenoid.obj");
    mesh_export(&s, BufWriter::new(File::create(&path)?))?;
    println!("{} vertices -> {}", s.len(), path.display());
    Ok(())
}
