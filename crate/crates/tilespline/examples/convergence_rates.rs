//! Certified smoothness of tile subdivision schemes next to measured contraction rates.

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::subdivision::{convergence_report, empirical_rate};

fn main() -> tilespline::Result<()> {
    for p in Preset::TWO_TILES {
        let (m, d) = p.system();
        for n in 1..=3 {
            let mask = bspline_mask(&m, &d, n)?;
            let r = convergence_report(&mask, 12)?;
            let e = empirical_rate(&mask, 0, 16)?;
            println!(
                "{:<9}: rate [{:.4}, {:.4}], converges in C^{}, measured sample rate {:.3}{}",
                format!("{}-{}", p.name(), n + 1),
                r.rate.0,
                r.rate.1,
                r.smoothness.map_or("-".into(), |k| k.to_string()),
                e.rate,
                if e.monotone { "" } else { " (non-monotone)" }
            );
        }
    }
    Ok(())
}
