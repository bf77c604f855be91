//! Wavelets of two-digit orthogonalized splines: sign rule, QMF identities, decay exponent,
//! tail bounds, truncation and lattice samples of `φ_1` and `ψ`.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{canonical_digits, dual_digits, DilationMatrix, IVec, IntMatrix};
use crate::linalg::poly_roots;
use crate::ortho::{CoeffField, TrigPoly};
use crate::refine::{nearest_node, LatticeFunction};

/// Resolution of the reported decay exponent.
pub const Q_STEP: f64 = 0.005;

/// `ψ(x) = Σ_k ε_k c_k φ_1(Mx + k − w)` with `ε_k = e^{2πi(k,v)} = ±1`.
#[derive(Clone, Debug)]
pub struct WaveletSystem {
    pub matrix: DilationMatrix,
    /// Refinement coefficients `c_k` of `φ_1`.
    pub phi1: CoeffField,
    /// Signed coefficients `ε_k c_k`.
    pub psi: CoeffField,
    /// Offset `w ∉ M Z^d`.
    pub shift: IVec,
    /// `u ∉ Mᵀ Z^d`.
    pub u: IVec,
    /// `v = M^{-T} u`.
    pub v: Vec<f64>,
    /// `ε_k = (−1)^{(k, parity)}`.
    pub parity: IVec,
    pub q: Option<f64>,
    pub sign_rule: String,
}

impl WaveletSystem {
    pub fn sign(&self, k: &[i64]) -> f64 {
        sign_of(&self.parity, k)
    }
}

fn sign_of(parity: &[i64], k: &[i64]) -> f64 {
    let t: i64 = parity.iter().zip(k).map(|(a, b)| a * b).sum();
    if t.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn describe_rule(parity: &[i64]) -> String {
    let terms: Vec<String> = parity
        .iter()
        .enumerate()
        .filter(|(_, &p)| p.rem_euclid(2) == 1)
        .map(|(i, _)| format!("k{}", i + 1))
        .collect();
    if terms.is_empty() {
        "+1".into()
    } else {
        format!("(-1)^({})", terms.join("+"))
    }
}

/// Builds the wavelet from the refinement coefficients of an orthonormal `φ_1`.
pub fn wavelet_coeffs(phi1: &CoeffField, m: &DilationMatrix) -> Result<WaveletSystem> {
    if m.m() != 2 {
        return Err(Error::Unsupported(format!(
            "wavelets are built for two digits only, |det M| = {}",
            m.m()
        )));
    }
    let shift = canonical_digits(m).get(1).to_vec();
    let u = dual_digits(m).get(1).to_vec();
    let adj_t = m.matrix().transpose().adjugate();
    // (k, M^{-T}u) = (k, adj(Mᵀ) u) / det with |det| = 2
    let parity: IVec = adj_t.mul_vec(&u).iter().map(|x| x.rem_euclid(2)).collect();
    let det = m.det() as f64;
    let v: Vec<f64> = adj_t.mul_vec(&u).iter().map(|&x| x as f64 / det).collect();
    let psi = CoeffField {
        dim: phi1.dim,
        coeffs: phi1
            .coeffs
            .iter()
            .map(|(k, c)| (k.clone(), sign_of(&parity, k) * c))
            .collect(),
        decay: phi1.decay,
        dropped: phi1.dropped,
    };
    Ok(WaveletSystem {
        matrix: m.clone(),
        phi1: phi1.clone(),
        psi,
        shift,
        u,
        v,
        sign_rule: describe_rule(&parity),
        parity,
        q: phi1.decay.map(|d| d.q),
    })
}

/// Deviations `max |a_1(s)|² + |a_1(s+v)|² − 1|` and `max |p(s) ā_1(s) + p(s+v) ā_1(s+v)|`
/// over the half-cell-offset `n^d` grid, `p(s) = e^{−2πi(w,s)} ā_1(s+v)`.
pub fn verify_qmf(ws: &WaveletSystem, n: usize) -> (f64, f64) {
    let d = ws.phi1.dim;
    let m = ws.matrix.m() as f64;
    let a: Vec<Complex64> = ws.phi1.symbol_on_grid(n, 0.5).iter().map(|z| z / m).collect();
    let nv: IVec = ws.v.iter().map(|x| (x * n as f64).round() as i64).collect();
    let flat = |j: &[i64]| -> usize {
        j.iter()
            .fold(0usize, |acc, &x| acc * n + x.rem_euclid(n as i64) as usize)
    };
    let mut dev1: f64 = 0.0;
    let mut dev2: f64 = 0.0;
    for i in 0..a.len() {
        let j = crate::ortho::grid_index(d, n, i);
        let jv: IVec = j.iter().zip(&nv).map(|(a, b)| a + b).collect();
        let a_s = a[i];
        let a_sv = a[flat(&jv)];
        dev1 = dev1.max((a_s.norm_sqr() + a_sv.norm_sqr() - 1.0).abs());
        let s: Vec<f64> = j.iter().map(|&x| (x as f64 + 0.5) / n as f64).collect();
        let ws_dot: f64 = ws.shift.iter().zip(&s).map(|(&w, x)| w as f64 * x).sum();
        let wv_dot: f64 = ws.shift.iter().zip(&ws.v).map(|(&w, x)| w as f64 * x).sum();
        let tau = std::f64::consts::TAU;
        let p_s = Complex64::from_polar(1.0, -tau * ws_dot) * a_sv.conj();
        let p_sv = Complex64::from_polar(1.0, -tau * (ws_dot + wv_dot)) * a_s.conj();
        dev2 = dev2.max((p_s * a_s.conj() + p_sv * a_sv.conj()).norm());
    }
    (dev1, dev2)
}

/// Zero-free region of `L(z) = Σ Φ_k z^{Mk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QEstimate {
    /// Reported exponent: the smallest multiple of [`Q_STEP`] above `q_star`.
    pub q: f64,
    /// `exp(−min max_j |ln |z_j||)` over the zeros found.
    pub q_star: f64,
    /// Moduli `(|z_1|, …)` of the zero realizing `q_star`.
    pub witness: Vec<f64>,
}

const RADII: usize = 64;
const ANGLES: usize = 512;
const REFINE_PASSES: usize = 4;
const RADIUS_FLOOR: f64 = 0.005;

/// Scans radii and angles of one variable and solves exactly in the other.
fn scan(
    terms: &[(IVec, f64)],
    fixed: usize,
    radii: &[f64],
    angles: &[f64],
) -> Result<Option<(f64, f64, f64, f64)>> {
    let free = 1 - fixed;
    let lo = terms.iter().map(|(e, _)| e[free]).min().unwrap_or(0);
    let hi = terms.iter().map(|(e, _)| e[free]).max().unwrap_or(0);
    let results: Vec<Option<(f64, f64, f64, f64)>> = radii
        .par_iter()
        .map(|&r| -> Result<Option<(f64, f64, f64, f64)>> {
            let mut best: Option<(f64, f64, f64, f64)> = None;
            for &th in angles {
                let z = Complex64::from_polar(r, th);
                let mut coef = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
                for (e, c) in terms {
                    coef[(e[free] - lo) as usize] += z.powi(e[fixed] as i32) * c;
                }
                for root in poly_roots(&coef)? {
                    let rr = root.norm();
                    if rr == 0.0 || !rr.is_finite() {
                        continue;
                    }
                    let val = r.ln().abs().max(rr.ln().abs());
                    if best.is_none_or(|b| val < b.0) {
                        best = Some((val, r, th, rr));
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0)))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Decay exponent from the zeros of `Φ(Mᵀξ)` continued to `z_j = e^{−2πiξ_j}`.
///
/// Planar case: for each modulus-angle pair of one variable on a log grid the Laurent polynomial
/// in the other is solved by a companion matrix; both variable orders are scanned and the best
/// cell is refined. The line reduces to one root-finding step.
pub fn find_q(phi: &TrigPoly, m: &DilationMatrix) -> Result<QEstimate> {
    let mut merged: BTreeMap<IVec, f64> = BTreeMap::new();
    for (k, c) in &phi.coeffs {
        *merged.entry(m.apply(k)).or_insert(0.0) += c;
    }
    let terms: Vec<(IVec, f64)> = merged.into_iter().filter(|(_, c)| c.abs() > 1e-15).collect();
    let best_val = match phi.dim {
        1 => {
            let lo = terms.iter().map(|(e, _)| e[0]).min().unwrap_or(0);
            let hi = terms.iter().map(|(e, _)| e[0]).max().unwrap_or(0);
            let mut coef = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
            for (e, c) in &terms {
                coef[(e[0] - lo) as usize] += c;
            }
            poly_roots(&coef)?
                .iter()
                .filter(|z| z.norm() > 0.0)
                .map(|z| (z.norm().ln().abs(), vec![z.norm()]))
                .min_by(|a, b| a.0.total_cmp(&b.0))
        }
        2 => {
            let angles: Vec<f64> = (0..ANGLES)
                .map(|i| std::f64::consts::TAU * i as f64 / ANGLES as f64)
                .collect();
            let radii = log_grid(RADIUS_FLOOR, 1.0, RADII);
            let mut best: Option<(f64, usize, f64, f64, f64)> = None;
            for fixed in 0..2 {
                if let Some((val, r, th, rr)) = scan(&terms, fixed, &radii, &angles)? {
                    if best.is_none_or(|b| val < b.0) {
                        best = Some((val, fixed, r, th, rr));
                    }
                }
            }
            if let Some(mut b) = best {
                let mut dr = (1.0 / RADIUS_FLOOR).ln() / (RADII - 1) as f64;
                let mut dth = std::f64::consts::TAU / ANGLES as f64;
                for _ in 0..REFINE_PASSES {
                    let r_lo = (b.2 * (-dr).exp()).max(RADIUS_FLOOR);
                    let r_hi = (b.2 * dr.exp()).min(1.0);
                    let radii = log_grid(r_lo, r_hi, RADII);
                    let angles: Vec<f64> = (0..RADII).map(|i| b.3 - dth + 2.0 * dth * i as f64 / (RADII - 1) as f64).collect();
                    if let Some((val, r, th, rr)) = scan(&terms, b.1, &radii, &angles)? {
                        if val < b.0 {
                            b = (val, b.1, r, th, rr);
                        }
                    }
                    dr *= 4.0 / RADII as f64;
                    dth *= 4.0 / RADII as f64;
                }
                let witness = if b.1 == 0 { vec![b.2, b.4] } else { vec![b.4, b.2] };
                Some((b.0, witness))
            } else {
                None
            }
        }
        d => {
            return Err(Error::Unsupported(format!(
                "decay scan is implemented for d <= 2, got d = {d}"
            )))
        }
    };
    let Some((val, witness)) = best_val else {
        return Ok(QEstimate {
            q: Q_STEP,
            q_star: 0.0,
            witness: Vec::new(),
        });
    };
    let q_star = (-val).exp();
    let steps = (q_star / Q_STEP + 1e-9).floor() as i64 + 1;
    let q = steps as f64 * Q_STEP;
    if q >= 1.0 {
        return Err(Error::NearSingular(q_star));
    }
    Ok(QEstimate { q, q_star, witness })
}

/// `(H_1, H_2)`: `ℓ1` and `ℓ2` bounds on `Σ_{|k|_1 > m} |c_k|` under `|c_k| ≤ C q^{|k|_1}`.
pub fn tail_bounds(q: f64, c: f64, m_cut: usize) -> (f64, f64) {
    let m = m_cut as f64;
    let qm = q.powf(m + 1.0);
    let h1 = 4.0 * c * qm * (1.0 + m - m * q) / (1.0 - q).powi(2);
    let h2 = 2.0 * c * qm * (1.0 + m - m * q * q).sqrt() / (1.0 - q * q);
    (h1, h2)
}

/// Smallest window `m` with tail bound at most `budget`.
pub fn window_for_budget(q: f64, c: f64, budget: f64, norm: Norm) -> usize {
    (0..)
        .find(|&m| {
            let (h1, h2) = tail_bounds(q, c, m);
            match norm {
                Norm::L1 => h1 <= budget,
                Norm::L2 => h2 <= budget,
            }
        })
        .expect("tail bounds tend to zero")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            _ => Err(Error::Parse(format!("unknown norm `{s}` (expected l1 or l2)"))),
        }
    }
}

/// Survivors of window-then-greedy truncation.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub kept: CoeffField,
    /// Norm of the coefficients removed inside the window.
    pub removed: f64,
    /// `removed` plus the tail bound outside the window (with `C = 1` unless a decay is stored).
    pub certificate: f64,
}

/// Keeps the window `|k|_1 ≤ m_cut`, then removes smallest coefficients while their norm stays
/// within `budget`.
pub fn truncate_coeffs(field: &CoeffField, budget: f64, norm: Norm, m_cut: usize) -> Truncation {
    let mut inside: Vec<(IVec, f64)> = field
        .coeffs
        .iter()
        .filter(|(k, _)| k.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>() <= m_cut)
        .map(|(k, c)| (k.clone(), *c))
        .collect();
    inside.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then_with(|| a.0.cmp(&b.0)));
    let mut acc = 0.0;
    let mut cut = 0;
    for (_, c) in &inside {
        let next = match norm {
            Norm::L1 => acc + c.abs(),
            Norm::L2 => acc + c * c,
        };
        let value = if norm == Norm::L2 { next.sqrt() } else { next };
        if value > budget {
            break;
        }
        acc = next;
        cut += 1;
    }
    let removed = if norm == Norm::L2 { acc.sqrt() } else { acc };
    let kept: BTreeMap<IVec, f64> = inside[cut..].iter().cloned().collect();
    let (q, c) = field.decay.map_or((None, 1.0), |d| (Some(d.q), d.c));
    let tail = q.map_or(0.0, |q| {
        let (h1, h2) = tail_bounds(q, c, m_cut);
        if norm == Norm::L1 {
            h1
        } else {
            h2
        }
    });
    Truncation {
        kept: CoeffField {
            dim: field.dim,
            coeffs: kept,
            decay: field.decay,
            dropped: field.dropped,
        },
        removed,
        certificate: removed + tail,
    }
}

/// Samples of a function on `M^{-depth} Z^d` over a box of indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSamples {
    pub depth: usize,
    pub matrix: DilationMatrix,
    pub lo: IVec,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn matrix_power(m: &DilationMatrix, p: usize) -> IntMatrix {
    (0..p).fold(IntMatrix::identity(m.dim()), |acc, _| m.matrix().mul(&acc))
}

impl LatticeSamples {
    pub fn from_lattice(lf: &LatticeFunction) -> Self {
        let d = lf.matrix.dim();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for j in lf.values.keys() {
            for i in 0..d {
                lo[i] = lo[i].min(j[i]);
                hi[i] = hi[i].max(j[i]);
            }
        }
        let mut s = Self::zeros(lf.depth, &lf.matrix, lo, &hi);
        for (j, v) in &lf.values {
            let f = s.flat(j).expect("index inside its own box");
            s.data[f] = *v;
        }
        s
    }

    fn zeros(depth: usize, m: &DilationMatrix, lo: IVec, hi: &[i64]) -> Self {
        let shape: Vec<usize> = lo.iter().zip(hi).map(|(l, h)| (h - l + 1).max(0) as usize).collect();
        Self {
            depth,
            matrix: m.clone(),
            data: vec![0.0; shape.iter().product()],
            lo,
            shape,
        }
    }

    fn flat(&self, j: &[i64]) -> Option<usize> {
        let mut f = 0usize;
        for ((x, l), s) in j.iter().zip(&self.lo).zip(&self.shape) {
            let o = x - l;
            if o < 0 || o as usize >= *s {
                return None;
            }
            f = f * s + o as usize;
        }
        Some(f)
    }

    fn index(&self, mut f: usize) -> IVec {
        let mut j = vec![0; self.lo.len()];
        for i in (0..j.len()).rev() {
            j[i] = self.lo[i] + (f % self.shape[i]) as i64;
            f /= self.shape[i];
        }
        j
    }

    pub fn get(&self, j: &[i64]) -> f64 {
        self.flat(j).map_or(0.0, |f| self.data[f])
    }

    pub fn iter(&self) -> impl Iterator<Item = (IVec, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(f, v)| (self.index(f), *v))
    }

    /// Riemann sum `m^{-depth} Σ f`.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() / (self.matrix.m() as f64).powi(self.depth as i32)
    }

    /// Riemann sum of `f(x) g(x + t)` for an integer translate `t`.
    pub fn inner(&self, other: &LatticeSamples, t: &[i64]) -> f64 {
        let shift = matrix_power(&self.matrix, self.depth).mul_vec(t);
        let s: f64 = self
            .iter()
            .map(|(j, v)| {
                let jj: IVec = j.iter().zip(&shift).map(|(a, b)| a + b).collect();
                v * other.get(&jj)
            })
            .sum();
        s / (self.matrix.m() as f64).powi(self.depth as i32)
    }

    /// `Σ_t w_t f(· − t)` on the same lattice, translates given in lattice units.
    pub fn superpose(&self, terms: &[(IVec, f64)]) -> Self {
        let d = self.lo.len();
        if terms.is_empty() || self.data.is_empty() {
            return Self::zeros(self.depth, &self.matrix, vec![0; d], &vec![-1; d]);
        }
        let lo: IVec = (0..d)
            .map(|i| self.lo[i] + terms.iter().map(|(t, _)| t[i]).min().unwrap_or(0))
            .collect();
        let hi: IVec = (0..d)
            .map(|i| {
                self.lo[i] + self.shape[i] as i64 - 1 + terms.iter().map(|(t, _)| t[i]).max().unwrap_or(0)
            })
            .collect();
        let mut out = Self::zeros(self.depth, &self.matrix, lo, &hi);
        let src: Vec<(IVec, f64)> = self.iter().collect();
        for (t, w) in terms {
            for (j, v) in &src {
                let jj: IVec = j.iter().zip(t).map(|(a, b)| a + b).collect();
                let f = out.flat(&jj).expect("target box covers every translate");
                out.data[f] += w * v;
            }
        }
        out
    }

    /// Value at the lattice node nearest to `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.get(&nearest_node(&self.matrix, x, self.depth))
    }
}

/// `φ_1 = Σ_j b_j φ(· − j)` and `ψ` sampled on `M^{-depth} Z^d`, built from lattice values of `φ`.
#[derive(Clone, Debug)]
pub struct WaveletSamples {
    pub phi1: LatticeSamples,
    pub psi: LatticeSamples,
}

/// Assembles `φ_1` and `ψ` from samples of `φ` at depths `p − 1` and `p`; coefficients of `b`
/// and of the wavelet below `tol` are skipped.
pub fn wavelet_samples(
    ws: &WaveletSystem,
    b: &CoeffField,
    phi_coarse: &LatticeFunction,
    phi_fine: &LatticeFunction,
    tol: f64,
) -> Result<WaveletSamples> {
    let p = phi_fine.depth;
    if p == 0 || phi_coarse.depth + 1 != p {
        return Err(Error::Config("φ samples must be at consecutive depths p − 1 and p".into()));
    }
    let m = &ws.matrix;
    let b_terms = |depth: usize| -> Vec<(IVec, f64)> {
        let mp = matrix_power(m, depth);
        b.coeffs
            .iter()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(j, c)| (mp.mul_vec(j), *c))
            .collect()
    };
    let phi1_fine = LatticeSamples::from_lattice(phi_fine).superpose(&b_terms(p));
    let phi1_coarse = LatticeSamples::from_lattice(phi_coarse).superpose(&b_terms(p - 1));
    // ψ(M^{-p} i) = Σ_k ψ_k φ_1(M^{-(p-1)}(i + M^{p-1}(k − w)))
    let mp1 = matrix_power(m, p - 1);
    let psi_terms: Vec<(IVec, f64)> = ws
        .psi
        .coeffs
        .iter()
        .filter(|(_, c)| c.abs() > tol)
        .map(|(k, c)| {
            let kw: IVec = k.iter().zip(&ws.shift).map(|(a, b)| a - b).collect();
            (mp1.mul_vec(&kw).iter().map(|x| -x).collect(), *c)
        })
        .collect();
    let mut psi = phi1_coarse.superpose(&psi_terms);
    psi.depth = p;
    Ok(WaveletSamples {
        phi1: phi1_fine,
        psi,
    })
}

/// `ψ(x)` at the nearest depth-`p` node.
pub fn eval_wavelet(samples: &WaveletSamples, x: &[f64]) -> f64 {
    samples.psi.eval(x)
}

/// 8-bit grayscale image, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }
}

/// Planar samples on the window `[lo, hi]`, mid-gray at zero and saturating at `±max |f|`.
pub fn render_samples(s: &LatticeSamples, lo: [f64; 2], hi: [f64; 2], width: usize, height: usize) -> Result<GrayImage> {
    if s.matrix.dim() != 2 {
        return Err(Error::Unsupported("rendering needs planar samples".into()));
    }
    if width == 0 || height == 0 || hi[0] <= lo[0] || hi[1] <= lo[1] {
        return Err(Error::Config("raster window must be non-empty".into()));
    }
    let mut vals = Vec::with_capacity(width * height);
    for r in 0..height {
        let y = hi[1] - (r as f64 + 0.5) * (hi[1] - lo[1]) / height as f64;
        for c in 0..width {
            let x = lo[0] + (c as f64 + 0.5) * (hi[0] - lo[0]) / width as f64;
            vals.push(s.eval(&[x, y]));
        }
    }
    let peak = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if peak > 0.0 { 127.0 / peak } else { 0.0 };
    let data = vals.iter().map(|v| (128.0 + v * scale).round().clamp(0.0, 255.0) as u8).collect();
    Ok(GrayImage { width, height, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Preset;
    use crate::mask::bspline_mask;
    use crate::ortho::{ortho_mask, phi_coeffs};
    use approx::assert_abs_diff_eq;

    fn field(dim: usize, c: &[(IVec, f64)]) -> CoeffField {
        CoeffField::new(dim, c.iter().cloned().collect())
    }

    #[test]
    fn sign_rules_of_presets() {
        let c = field(2, &[(vec![0, 0], 1.0), (vec![1, 0], 1.0)]);
        let bear = wavelet_coeffs(&c, &Preset::Bear.matrix()).unwrap();
        assert_eq!(bear.shift, vec![0, 1]);
        assert_eq!(bear.u, vec![0, 1]);
        assert_eq!(bear.v, vec![-0.5, 0.5]);
        let sq = wavelet_coeffs(&c, &Preset::Square.matrix()).unwrap();
        assert_eq!(sq.shift, vec![1, 0]);
        assert_eq!(sq.v, vec![-0.5, 0.0]);
        let dr = wavelet_coeffs(&c, &Preset::Dragon.matrix()).unwrap();
        assert_eq!(dr.shift, vec![0, 1]);
        assert_eq!(dr.v, vec![0.5, 0.5]);
        for k1 in -4..5 {
            for k2 in -4..5 {
                let k = [k1, k2];
                let pm = |e: i64| if e.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                assert_eq!(bear.sign(&k), pm(k2 - k1));
                assert_eq!(dr.sign(&k), pm(k2 - k1));
                assert_eq!(sq.sign(&k), pm(k1));
            }
        }
        assert_eq!(bear.psi.get(&[1, 0]), -1.0);
    }

    #[test]
    fn line_is_quadrature_mirror() {
        let c = field(1, &[(vec![0], 1.0), (vec![1], 1.0)]);
        let ws = wavelet_coeffs(&c, &Preset::Unit1d.matrix()).unwrap();
        assert_eq!(ws.u, vec![1]);
        assert_eq!(ws.v, vec![0.5]);
        assert_eq!(ws.psi.get(&[1]), -1.0);
        let (d1, d2) = verify_qmf(&ws, 256);
        assert!(d1 < 1e-15 && d2 < 1e-15, "{d1} {d2}");
    }

    #[test]
    fn needs_two_digits() {
        let c = field(2, &[(vec![0, 0], 3.0)]);
        let m = DilationMatrix::new(&[vec![2, 1], vec![-1, 1]]).unwrap();
        assert!(matches!(wavelet_coeffs(&c, &m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bear_pipeline_is_orthogonal() {
        let (m, d) = Preset::Bear.system();
        for n in [1, 3] {
            let mk = bspline_mask(&m, &d, n).unwrap();
            let phi = phi_coeffs(&mk).unwrap();
            let c = ortho_mask(&mk, &phi, 256).unwrap();
            let ws = wavelet_coeffs(&c, &m).unwrap();
            let (d1, d2) = verify_qmf(&ws, 256);
            assert!(d1 < 1e-6 && d2 < 1e-6, "{n}: {d1} {d2}");
        }
    }

    #[test]
    fn tail_bound_values() {
        let (_, h2) = tail_bounds(0.7, 1.0, 22);
        assert_abs_diff_eq!(h2, 0.00375, epsilon = 5e-6);
        let (h1, _) = tail_bounds(0.7, 1.0, 32);
        assert_abs_diff_eq!(h1, 0.0036, epsilon = 5e-5);
        let (_, h2) = tail_bounds(0.85, 1.0, 53);
        assert_abs_diff_eq!(h2, 0.0044, epsilon = 5e-5);
        for m in 1..60 {
            let (a1, a2) = tail_bounds(0.7, 1.0, m);
            let (b1, b2) = tail_bounds(0.7, 1.0, m + 1);
            assert!(b1 < a1 && b2 < a2);
        }
        assert_eq!(window_for_budget(0.7, 1.0, 0.00376, Norm::L2), 22);
    }

    #[test]
    fn truncation_identity_and_greedy() {
        let f = field(2, &[(vec![0, 0], 1.0), (vec![1, 0], 0.003), (vec![0, 1], -0.004), (vec![5, 5], 0.5)]);
        let t = truncate_coeffs(&f, 0.0, Norm::L2, 100);
        assert_eq!(t.kept.coeffs, f.coeffs);
        let t = truncate_coeffs(&f, 0.005, Norm::L2, 100);
        assert_eq!(t.kept.len(), 2);
        assert_abs_diff_eq!(t.removed, 0.005, epsilon = 1e-15);
        let t = truncate_coeffs(&f, 0.005, Norm::L1, 100);
        assert_eq!(t.kept.len(), 3);
        let t = truncate_coeffs(&f, 0.0, Norm::L1, 5);
        assert!(t.kept.get(&[5, 5]) == 0.0 && t.kept.len() == 3);
    }

    #[test]
    fn trivial_phi_has_no_zeros() {
        let q = find_q(&TrigPoly::one(2), &Preset::Bear.matrix()).unwrap();
        assert_eq!(q.q, Q_STEP);
    }

    #[test]
    fn line_decay_exponent() {
        // Φ(2ξ) for the hat: (4 + z² + z^{-2})/6 vanishes at |z|² = 2 − √3
        let phi = phi_coeffs(&bspline_mask(&Preset::Unit1d.matrix(), &Preset::Unit1d.digits(), 1).unwrap()).unwrap();
        let q = find_q(&phi, &Preset::Unit1d.matrix()).unwrap();
        assert_abs_diff_eq!(q.q_star, (2.0 - 3f64.sqrt()).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.q, 0.52, epsilon = 1e-12);
    }

    #[test]
    fn lattice_samples_ops() {
        let m = Preset::Unit1d.matrix();
        let lf = LatticeFunction {
            depth: 1,
            matrix: m.clone(),
            values: BTreeMap::from([(vec![0], 1.0), (vec![1], 2.0)]),
        };
        let s = LatticeSamples::from_lattice(&lf);
        assert_abs_diff_eq!(s.integral(), 1.5, epsilon = 1e-15);
        let t = s.superpose(&[(vec![2], 1.0), (vec![0], -1.0)]);
        assert_eq!(t.get(&[0]), -1.0);
        assert_eq!(t.get(&[3]), 2.0);
        assert_abs_diff_eq!(s.inner(&t, &[1]), 2.5, epsilon = 1e-15);
    }
}
