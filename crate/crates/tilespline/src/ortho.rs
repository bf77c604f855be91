//! Orthogonalization of shifts: `Φ`, Fourier coefficients of `Φ^{-1/2}`, and the orthogonalized mask.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lattice::{DilationMatrix, IVec};
use crate::mask::{symmetrize, Mask};
use crate::refine::{integer_values, transition_family};
use crate::tile::omega_set;

/// Coefficients below this magnitude are dropped from a [`CoeffField`].
pub const KEEP_TOL: f64 = 1e-12;
/// Grid used for the positivity certificate of `Φ`.
pub const POSITIVITY_GRID: usize = 512;

/// Default transform size: 4096 on the line, 256 per axis otherwise.
pub fn default_grid(dim: usize) -> usize {
    if dim == 1 {
        4096
    } else {
        256
    }
}

/// Real trigonometric polynomial `Φ(ξ) = Σ Φ_k e^{−2πi(k,ξ)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub dim: usize,
    pub coeffs: BTreeMap<IVec, f64>,
}

impl TrigPoly {
    pub fn one(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::from([(vec![0; dim], 1.0)]),
        }
    }

    pub fn get(&self, k: &[i64]) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let t: f64 = k.iter().zip(xi).map(|(&a, b)| a as f64 * b).sum();
                c * (std::f64::consts::TAU * t).cos()
            })
            .sum()
    }

    /// Largest `|Φ_k − Φ_{−k}|`.
    pub fn asymmetry(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let neg: IVec = k.iter().map(|x| -x).collect();
                (c - self.get(&neg)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Minimum of `Φ` over the `n^d` grid.
    pub fn min_on_grid(&self, n: usize) -> f64 {
        sample_grid(self.dim, n, |j| self.eval_grid(j, n, None).re)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// `Φ(Mᵀξ)` at `ξ = j/n` (or `Φ(ξ)` without a matrix), with exact roots of unity.
    fn eval_grid(&self, j: &[i64], n: usize, m: Option<&DilationMatrix>) -> Complex64 {
        let n = n as i64;
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let mk = m.map_or_else(|| k.clone(), |m| m.apply(k));
                let t: i64 = mk.iter().zip(j).map(|(a, b)| a * b).sum();
                root(t.rem_euclid(n), n) * c
            })
            .sum()
    }
}

fn root(t: i64, n: i64) -> Complex64 {
    Complex64::from_polar(1.0, -std::f64::consts::TAU * t as f64 / n as f64)
}

/// Grid indices of an `n^d` grid in row-major order.
pub(crate) fn grid_index(dim: usize, n: usize, flat: usize) -> IVec {
    let mut j = vec![0; dim];
    let mut r = flat;
    for slot in j.iter_mut().rev() {
        *slot = (r % n) as i64;
        r /= n;
    }
    j
}

pub(crate) fn sample_grid<T: Send>(dim: usize, n: usize, f: impl Fn(&[i64]) -> T + Sync) -> Vec<T> {
    (0..n.pow(dim as u32))
        .into_par_iter()
        .map(|i| f(&grid_index(dim, n, i)))
        .collect()
}

/// In-place `d`-dimensional DFT along every axis (`inverse` uses `e^{+2πi}`, unnormalized).
pub(crate) fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..total {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[start + i * stride];
            }
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// Centered index in `(−n/2, n/2]` of a grid position.
fn centered(j: &[i64], n: usize) -> IVec {
    let n = n as i64;
    j.iter().map(|&x| if x > n / 2 { x - n } else { x }).collect()
}

/// Decay certificate `|c_k| ≤ C q^{|k|_1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decay {
    pub q: f64,
    pub c: f64,
}

/// Finitely many real coefficients indexed by `Z^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffField {
    pub dim: usize,
    pub coeffs: BTreeMap<IVec, f64>,
    pub decay: Option<Decay>,
    /// `(ℓ1, ℓ2)` norm of coefficients dropped so far.
    pub dropped: (f64, f64),
}

impl CoeffField {
    pub fn new(dim: usize, coeffs: BTreeMap<IVec, f64>) -> Self {
        let mut f = Self {
            dim,
            coeffs: BTreeMap::new(),
            decay: None,
            dropped: (0.0, 0.0),
        };
        let mut l2 = 0.0;
        for (k, c) in coeffs {
            if c.abs() > KEEP_TOL {
                f.coeffs.insert(k, c);
            } else {
                f.dropped.0 += c.abs();
                l2 += c * c;
            }
        }
        f.dropped.1 = l2.sqrt();
        f
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: &[i64]) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.values().sum()
    }

    /// Entries ordered by decreasing magnitude, ties by index.
    pub fn sorted_by_magnitude(&self) -> Vec<(IVec, f64)> {
        let mut v: Vec<_> = self.coeffs.iter().map(|(k, c)| (k.clone(), *c)).collect();
        v.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// `Σ c_k e^{−2πi(k,ξ)}`.
    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let t: f64 = k.iter().zip(xi).map(|(&a, b)| a as f64 * b).sum();
                Complex64::from_polar(*c, -std::f64::consts::TAU * t)
            })
            .sum()
    }

    /// Symbol on the grid `(j + offset)/n` via one FFT; indices are reduced mod `n`.
    pub fn symbol_on_grid(&self, n: usize, offset: f64) -> Vec<Complex64> {
        let mut data = vec![Complex64::new(0.0, 0.0); n.pow(self.dim as u32)];
        for (k, c) in &self.coeffs {
            let flat = k
                .iter()
                .fold(0usize, |acc, &x| acc * n + x.rem_euclid(n as i64) as usize);
            let t: f64 = k.iter().map(|&x| x as f64).sum::<f64>() * offset / n as f64;
            data[flat] += Complex64::from_polar(*c, -std::f64::consts::TAU * t);
        }
        fft_nd(&mut data, self.dim, n, false);
        data
    }

    /// `max_k |c_k| / q^{|k|_1}`.
    pub fn fit_decay_constant(&self, q: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c.abs() / q.powi(k.iter().map(|x| x.abs() as i32).sum()))
            .fold(0.0, f64::max)
    }

    /// True when every stored coefficient obeys the certificate.
    pub fn satisfies_decay(&self, d: Decay) -> bool {
        self.coeffs
            .iter()
            .all(|(k, c)| c.abs() <= d.c * d.q.powi(k.iter().map(|x| x.abs() as i32).sum()) * (1.0 + 1e-12))
    }

    /// CSV with columns `k1..kd,c`, sorted by decreasing magnitude.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|i| format!("k{i}")).collect();
        writeln!(w, "{},c", header.join(","))?;
        for (k, c) in self.sorted_by_magnitude() {
            let idx: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{:.12e}", idx.join(","), c)?;
        }
        Ok(())
    }
}

/// `Φ_k = (φ * φ(−·))(−k)` from the integer values of the symmetrized mask's refinable function.
pub fn phi_coeffs(mask: &Mask) -> Result<TrigPoly> {
    let sym = symmetrize(mask);
    let omega = omega_set(&sym, sym.digits())?;
    let tf = transition_family(&sym, sym.digits(), &omega);
    let v = integer_values(&tf)?;
    let coeffs = omega
        .elems()
        .iter()
        .zip(v.iter())
        .filter(|(_, x)| x.abs() > 1e-15)
        .map(|(a, x)| (a.iter().map(|t| -t).collect(), *x))
        .collect();
    Ok(TrigPoly {
        dim: mask.dim(),
        coeffs,
    })
}

fn check_grid(n: usize) -> Result<()> {
    if n < 64 || !n.is_power_of_two() {
        return Err(Error::Config(format!("grid size {n} must be a power of two >= 64")));
    }
    Ok(())
}

fn check_positive(phi: &TrigPoly, n: usize) -> Result<()> {
    let min = phi.min_on_grid(n.max(POSITIVITY_GRID));
    if min <= 0.0 {
        return Err(Error::NotRiesz(min));
    }
    Ok(())
}

/// Fourier coefficients `b_k` of `Φ^{-1/2}` on an `n^d` grid, `|k_i| ≤ n/2`.
pub fn inv_sqrt_fourier(phi: &TrigPoly, n: usize) -> Result<CoeffField> {
    check_grid(n)?;
    check_positive(phi, n)?;
    let d = phi.dim;
    let mut data = sample_grid(d, n, |j| Complex64::new(1.0 / phi.eval_grid(j, n, None).re.sqrt(), 0.0));
    fft_nd(&mut data, d, n, true);
    let scale = 1.0 / data.len() as f64;
    let coeffs = data
        .iter()
        .enumerate()
        .map(|(i, c)| (centered(&grid_index(d, n, i), n), c.re * scale))
        .collect();
    Ok(CoeffField::new(d, coeffs))
}

/// Mask symbol `a(ξ)` on the grid `j/n` with exact phases.
fn mask_on_grid(mask: &Mask, n: usize) -> Vec<Complex64> {
    let coeffs = mask.coeffs_f64();
    let m = mask.m() as f64;
    let ni = n as i64;
    sample_grid(mask.dim(), n, |j| {
        coeffs
            .iter()
            .map(|(k, c)| {
                let t: i64 = k.iter().zip(j).map(|(a, b)| a * b).sum();
                root(t.rem_euclid(ni), ni) * *c
            })
            .sum::<Complex64>()
            / m
    })
}

/// Refinement coefficients of `φ_1` from `a_1(ξ) = a(ξ) √Φ(ξ) / √Φ(Mᵀξ)`, summing to `m`.
pub fn ortho_mask(mask: &Mask, phi: &TrigPoly, n: usize) -> Result<CoeffField> {
    check_grid(n)?;
    check_positive(phi, n)?;
    let d = mask.dim();
    let a = mask_on_grid(mask, n);
    let m = mask.matrix();
    let mut data: Vec<Complex64> = sample_grid(d, n, |j| {
        let p = phi.eval_grid(j, n, None).re;
        let pm = phi.eval_grid(j, n, Some(m)).re;
        (p / pm).sqrt()
    })
    .into_iter()
    .zip(a)
    .map(|(r, a)| a * r)
    .collect();
    fft_nd(&mut data, d, n, true);
    let scale = mask.m() as f64 / data.len() as f64;
    let coeffs = data
        .iter()
        .enumerate()
        .map(|(i, c)| (centered(&grid_index(d, n, i), n), c.re * scale))
        .collect();
    Ok(CoeffField::new(d, coeffs))
}

/// `max |B(ξ)|² Φ(ξ) − 1|` over the half-cell-offset `n^d` grid.
pub fn gram_check(b: &CoeffField, phi: &TrigPoly, n: usize) -> f64 {
    let bs = b.symbol_on_grid(n, 0.5);
    let ps = phi_on_offset_grid(phi, n);
    bs.iter()
        .zip(ps)
        .map(|(bv, p)| (bv.norm_sqr() * p - 1.0).abs())
        .fold(0.0, f64::max)
}

fn phi_on_offset_grid(phi: &TrigPoly, n: usize) -> Vec<f64> {
    let as_field = CoeffField {
        dim: phi.dim,
        coeffs: phi.coeffs.clone(),
        decay: None,
        dropped: (0.0, 0.0),
    };
    as_field.symbol_on_grid(n, 0.5).iter().map(|z| z.re).collect()
}
