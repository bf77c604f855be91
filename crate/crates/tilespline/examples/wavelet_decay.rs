//! Wavelet of Bear-2: sign rule, decay exponent, tail bounds, truncation and a raster of ψ.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use tilespline::lattice::Preset;
use tilespline::mask::bspline_mask;
use tilespline::ortho::{inv_sqrt_fourier, ortho_mask, phi_coeffs};
use tilespline::refine::{integer_values, refine_values, transition_family};
use tilespline::tile::omega_set;
use tilespline::wavelet::{
    find_q, render_samples, tail_bounds, truncate_coeffs, verify_qmf, wavelet_coeffs, wavelet_samples, Norm,
};

fn main() -> tilespline::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-output".into()));
    fs::create_dir_all(&out)?;
    let (m, d) = Preset::Bear.system();
    let mask = bspline_mask(&m, &d, 1)?;
    let phi = phi_coeffs(&mask)?;
    let c = ortho_mask(&mask, &phi, 256)?;
    let ws = wavelet_coeffs(&c, &m)?;
    println!("ψ = Σ ε_k c_k φ_1(Mx + k − {:?}), ε_k = {}", ws.shift, ws.sign_rule);
    let (d1, d2) = verify_qmf(&ws, 256);
    println!("QMF deviations {d1:.1e} {d2:.1e}");
    let q = find_q(&phi, &m)?;
    println!("coefficients decay like q^|k|_1 with q = {} (zero-free up to {:.5})", q.q, q.q_star);
    for (qq, cut) in [(q.q, 22), (0.7, 22), (0.7, 30)] {
        let (h1, h2) = tail_bounds(qq, 1.0, cut);
        println!("  q = {qq:.3}, m = {cut}: H1 = {h1:.5}, H2 = {h2:.5}");
    }
    for (norm, cut) in [(Norm::L2, 22), (Norm::L1, 32)] {
        let t = truncate_coeffs(&ws.psi, 0.005, norm, cut);
        println!("{norm:?} truncation in window {cut}: {} coefficients remain, removed {:.5}", t.kept.len(), t.removed);
    }
    let omega = omega_set(&mask, &d)?;
    let tf = transition_family(&mask, &d, &omega);
    let v = integer_values(&tf)?;
    let b = inv_sqrt_fourier(&phi, 256)?;
    let s = wavelet_samples(&ws, &b, &refine_values(&tf, &v, 7), &refine_values(&tf, &v, 8), 1e-5)?;
    println!("‖φ_1‖² ≈ {:.4}, ‖ψ‖² ≈ {:.4}", s.phi1.inner(&s.phi1, &[0, 0]), s.psi.inner(&s.psi, &[0, 0]));
    let img = render_samples(&s.psi, [-2.5, -2.0], [2.5, 3.0], 400, 400)?;
    img.write_pgm(BufWriter::new(File::create(out.join("bear2_psi.pgm"))?))?;
    println!("wrote {}", out.join("bear2_psi.pgm").display());
    Ok(())
}
