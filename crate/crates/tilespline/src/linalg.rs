//! Dense helpers shared by the numerical modules.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_EPS: [f64; 3] = [1e-14, 1e-12, 1e-10];
const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues through a bounded Schur iteration on the matrix scaled to unit norm,
/// loosening the deflation threshold when the iteration stalls.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); m.nrows()]);
    }
    let a = m / scale;
    for eps in SCHUR_EPS {
        if let Some(schur) = Schur::try_new(a.clone(), eps, SCHUR_MAX_ITER) {
            return Ok(schur.complex_eigenvalues().iter().map(|z| z * scale).collect());
        }
    }
    Err(Error::NoConvergence {
        what: "Schur decomposition",
        residual: f64::NAN,
    })
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Roots of `Σ_i coeffs[i] z^i`. Vanishing leading coefficients lower the degree; vanishing
/// trailing ones give roots at the origin, which are returned as zeros.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let tol = scale * 1e-13;
    let hi = coeffs.iter().rposition(|c| c.norm() > tol).unwrap_or(0);
    let lo = coeffs.iter().position(|c| c.norm() > tol).unwrap_or(0);
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    let deg = hi - lo;
    if deg == 0 {
        return Ok(roots);
    }
    let lead = coeffs[hi];
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -coeffs[hi - 1 - j] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eig = SCHUR_EPS
        .iter()
        .find_map(|&eps| Schur::try_new(comp.clone(), eps, SCHUR_MAX_ITER).and_then(|s| s.eigenvalues()));
    match eig {
        Some(e) => roots.extend(e.iter().copied()),
        None => roots.extend(aberth(&coeffs[lo..=hi])?),
    }
    Ok(roots)
}

/// Aberth–Ehrlich iteration for all roots of a polynomial with nonzero constant and leading terms.
fn aberth(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    const CAP: usize = 2_000;
    let deg = coeffs.len() - 1;
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    // initial radius from the geometric mean of the roots
    let radius = (coeffs[0].norm() / coeffs[deg].norm()).powf(1.0 / deg as f64);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|i| Complex64::from_polar(radius, std::f64::consts::TAU * (i as f64 + 0.25) / deg as f64))
        .collect();
    let mut change = f64::INFINITY;
    for _ in 0..CAP {
        change = 0.0;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            z[i] -= step;
            change = change.max(step.norm() / z[i].norm().max(1e-300));
        }
        if change < 1e-14 {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence {
        what: "polynomial roots",
        residual: change,
    })
}
