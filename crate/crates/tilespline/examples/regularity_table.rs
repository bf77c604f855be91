//! Hölder exponents in L2 and C of the two-digit tile B-splines.

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::regularity::{holder_c, holder_l2};

fn main() -> tilespline::Result<()> {
    println!("{:<8}{:>4}{:>10}   C interval (depth 14)", "tile", "n", "L2");
    for p in Preset::TWO_TILES {
        let (m, d) = p.system();
        for n in 0..=3 {
            let mask = bspline_mask(&m, &d, n)?;
            let l2 = holder_l2(&mask)?;
            let c = if n == 0 {
                "-".to_string()
            } else {
                let h = holder_c(&mask, 14)?;
                format!("[{:.5}, {:.5}]", h.lo, h.hi)
            };
            println!("{:<8}{n:>4}{l2:>10.5}   {c}", p.name());
        }
    }
    Ok(())
}
