//! Hölder exponents in `C` and `L_2` from transition matrices restricted to the
//! subspaces `W_k ⊥ {(P(a))_{a∈Ω} : deg P ≤ k}`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::mask::{sum_rules_order, symmetrize, Mask};
use crate::refine::{transition_family, TransitionFamily};
use crate::tile::omega_closure;

/// Largest polynomial degree for which `W_k` is built.
pub const MAX_K: usize = 12;
/// Largest product length enumerated by [`jsr_bracket`].
pub const MAX_DEPTH: usize = 24;
const INVARIANCE_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-9;
const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 100_000;
const BALANCE_PASSES: usize = 50;
const SELECT_DEPTH: usize = 10;

/// Transition matrices restricted to `W_k`, in an orthonormal basis of `W_k`.
#[derive(Clone, Debug)]
pub struct RestrictedPair {
    pub mats: Vec<DMatrix<f64>>,
    pub k: usize,
    /// Columns span `W_k`.
    pub basis: DMatrix<f64>,
}

impl RestrictedPair {
    pub fn from_mats(mats: Vec<DMatrix<f64>>) -> Self {
        let n = mats.first().map_or(0, |a| a.nrows());
        Self {
            mats,
            k: 0,
            basis: DMatrix::identity(n, n),
        }
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.mats[0]
    }

    pub fn a1(&self) -> &DMatrix<f64> {
        &self.mats[1]
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mats: self.mats.iter().map(|a| a * c).collect(),
            k: self.k,
            basis: self.basis.clone(),
        }
    }
}

fn monomial_exponents(dim: usize, max_deg: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                let used: u32 = p.iter().sum();
                (0..=(max_deg as u32 - used)).map(move |e| {
                    let mut q = p.clone();
                    q.push(e);
                    q
                })
            })
            .collect();
    }
    out
}

/// Orthonormal basis of `W_k`, the orthogonal complement of the monomial vectors.
pub fn wk_basis(tf: &TransitionFamily, k: usize) -> DMatrix<f64> {
    let omega = tf.omega().elems();
    let n = omega.len();
    let mut q: Vec<nalgebra::DVector<f64>> = Vec::new();
    for alpha in monomial_exponents(tf.matrix().dim(), k) {
        let mut v = nalgebra::DVector::from_iterator(
            n,
            omega
                .iter()
                .map(|a| a.iter().zip(&alpha).map(|(&x, &e)| (x as f64).powi(e as i32)).product()),
        );
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        v /= norm0;
        for _ in 0..2 {
            for b in &q {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let r = v.norm();
        if r > RANK_TOL {
            q.push(v / r);
        }
    }
    let mut proj = DMatrix::<f64>::identity(n, n);
    for b in &q {
        proj -= b * b.transpose();
    }
    let eig = proj.symmetric_eigen();
    let cols: Vec<_> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Restricts every `T_Δ` to `W_k`, checking `‖(I − P) T_Δ P‖ < 1e−8`.
pub fn restrict_to_wk(tf: &TransitionFamily, k: usize) -> Result<RestrictedPair> {
    if k > MAX_K {
        return Err(Error::Budget {
            what: "polynomial degree of W_k",
            needed: k as f64,
            limit: MAX_K as f64,
        });
    }
    let basis = wk_basis(tf, k);
    if basis.ncols() == 0 {
        return Err(Error::Degenerate(format!(
            "W_{k} = {{0}} on an index set of size {}",
            tf.size()
        )));
    }
    let n = tf.size();
    let proj = &basis * basis.transpose();
    let comp = DMatrix::<f64>::identity(n, n) - &proj;
    for t in tf.mats() {
        let residual = (&comp * t * &proj).norm();
        if residual >= INVARIANCE_TOL {
            return Err(if k == 0 {
                Error::SumRuleViolation(format!("W_0 is not invariant (residual {residual:.3e})"))
            } else {
                Error::Degenerate(format!("W_{k} is not invariant (residual {residual:.3e})"))
            });
        }
    }
    let mats = tf
        .mats()
        .iter()
        .map(|t| basis.transpose() * t * &basis)
        .collect();
    Ok(RestrictedPair { mats, k, basis })
}

/// Degree `k` used for a mask: its sum-rule order.
pub fn regularity_degree(mask: &Mask) -> Result<usize> {
    sum_rules_order(mask)
        .ok_or_else(|| Error::SumRuleViolation("the symbol does not vanish at the dual digits".into()))
}

/// Transition family over the closed index set and its restriction to `W_k`, `k` = sum-rule order.
pub fn restricted_pair(mask: &Mask) -> Result<(TransitionFamily, RestrictedPair)> {
    let k = regularity_degree(mask)?;
    let omega = omega_closure(mask, mask.digits());
    let tf = transition_family(mask, mask.digits(), &omega);
    let pair = restrict_to_wk(&tf, k)?;
    Ok((tf, pair))
}

/// `ρ_2 = sqrt(λ_max((1/m) Σ A_Δ ⊗ A_Δ))` by power iteration on `X ↦ (1/m) Σ A_Δᵀ X A_Δ`.
///
/// The operator keeps the cone of positive semidefinite matrices, so `λ_max` is an eigenvalue;
/// iterating `X ↦ 𝒜X + σX` with `σ > 0` makes it the only dominant one.
pub fn l2_radius(pair: &RestrictedPair) -> Result<f64> {
    let n = pair.dim();
    let m = pair.mats.len() as f64;
    let apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        pair.mats
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, a| acc + a.transpose() * x * a)
            / m
    };
    let mut x = DMatrix::<f64>::identity(n, n);
    x /= x.norm();
    let sigma = apply(&x).norm();
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_CAP {
        let ax = apply(&x);
        let y = &ax + &x * sigma;
        let mu = y.norm();
        let lambda = mu - sigma;
        residual = (&ax - &x * lambda).norm() / sigma;
        x = y / mu;
        if residual <= POWER_TOL {
            return Ok(lambda.max(0.0).sqrt());
        }
    }
    Err(Error::NoConvergence {
        what: "L2 power iteration",
        residual,
    })
}

/// `(m^{-s} Σ_{|σ|=s} ‖A_σ‖_F²)^{1/2s}`, evaluated as `tr(𝒜^s I)^{1/2s}`.
pub fn l2_average(pair: &RestrictedPair, s: usize) -> f64 {
    let n = pair.dim();
    let m = pair.mats.len() as f64;
    let mut x = DMatrix::<f64>::identity(n, n);
    let mut log_scale = 0.0;
    for _ in 0..s {
        x = pair
            .mats
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, a| acc + a.transpose() * &x * a)
            / m;
        let nx = x.norm();
        if nx == 0.0 {
            return 0.0;
        }
        x /= nx;
        log_scale += nx.ln();
    }
    ((x.trace().ln() + log_scale) / (2 * s) as f64).exp()
}

/// Bounds on the joint spectral radius.
#[derive(Clone, Debug, PartialEq)]
pub struct JsrBracket {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
}

impl JsrBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)].abs();
    }
    a.clone().svd(false, false).singular_values.max()
}

/// `min_{s≤t} max_{|σ|=s} ‖A_σ‖^{1/s}` by full enumeration.
fn upper_bound(mats: &[DMatrix<f64>], t: usize) -> f64 {
    let n = mats[0].nrows();
    let mut level = vec![DMatrix::<f64>::identity(n, n)];
    let mut best = f64::INFINITY;
    for s in 1..=t {
        level = level
            .iter()
            .flat_map(|p| mats.iter().map(move |a| p * a))
            .collect();
        let mx = level.iter().map(spectral_norm).fold(0.0, f64::max);
        best = best.min(mx.powf(1.0 / s as f64));
    }
    best
}

fn all_products(mats: &[DMatrix<f64>], t: usize) -> Vec<Vec<DMatrix<f64>>> {
    let n = mats[0].nrows();
    let mut level = vec![DMatrix::<f64>::identity(n, n)];
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        level = level
            .iter()
            .flat_map(|p| mats.iter().map(move |a| p * a))
            .collect();
        out.push(level.clone());
    }
    out
}

fn similar(mats: &[DMatrix<f64>], s: &DMatrix<f64>, s_inv: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    mats.iter().map(|a| s * a * s_inv).collect()
}

/// Diagonal similarity by coordinate descent on the depth-2 upper bound.
fn balance(mats: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = mats[0].nrows();
    let mut diag = vec![1.0; n];
    let apply = |diag: &[f64]| -> Vec<DMatrix<f64>> {
        mats.iter()
            .map(|a| DMatrix::from_fn(n, n, |i, j| a[(i, j)] * diag[i] / diag[j]))
            .collect()
    };
    let depth = 2;
    let mut best = upper_bound(mats, depth);
    for _ in 0..BALANCE_PASSES {
        let mut improved = false;
        for i in 0..n {
            for f in [2.0, 0.5, 1.1, 1.0 / 1.1] {
                let mut trial = diag.clone();
                trial[i] *= f;
                let u = upper_bound(&apply(&trial), depth);
                if u < best * (1.0 - 1e-12) {
                    best = u;
                    diag = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    apply(&diag)
}

/// Ellipsoidal norm `‖x‖² = xᵀ P x`, `P = I + Σ_{|σ|≤len} (A_σ/r^{|σ|})ᵀ(A_σ/r^{|σ|})`.
fn ellipsoid(levels: &[Vec<DMatrix<f64>>], r: f64, len: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = levels[0][0].nrows();
    let mut p = DMatrix::<f64>::identity(n, n);
    for (l, lev) in levels.iter().take(len).enumerate() {
        let scale = r.powi(l as i32 + 1);
        for x in lev {
            let y = x / scale;
            p += y.transpose() * &y;
        }
    }
    let eig = p.symmetric_eigen();
    let v = &eig.eigenvectors;
    let sq = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| w.max(f64::MIN_POSITIVE).sqrt()));
    let isq = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| 1.0 / w.max(f64::MIN_POSITIVE).sqrt()));
    (v * sq * v.transpose(), v * isq * v.transpose())
}

/// True when `w` is the lexicographically smallest of its rotations.
fn is_min_rotation(w: &[u8]) -> bool {
    let l = w.len();
    (1..l).all(|r| {
        for i in 0..l {
            let (a, b) = (w[(i + r) % l], w[i]);
            if a != b {
                return a > b;
            }
        }
        true
    })
}

#[derive(Clone)]
struct Stats {
    lower: f64,
    max_norm: Vec<f64>,
}

impl Stats {
    fn new(t: usize) -> Self {
        Self {
            lower: 0.0,
            max_norm: vec![0.0; t + 1],
        }
    }

    fn merge(mut self, o: Stats) -> Self {
        self.lower = self.lower.max(o.lower);
        for (a, b) in self.max_norm.iter_mut().zip(o.max_norm) {
            *a = a.max(b);
        }
        self
    }
}

fn visit(mats: &[DMatrix<f64>], prod: &DMatrix<f64>, word: &mut Vec<u8>, t: usize, st: &mut Stats) -> Result<()> {
    let l = word.len();
    st.max_norm[l] = st.max_norm[l].max(spectral_norm(prod));
    if is_min_rotation(word) {
        st.lower = st.lower.max(spectral_radius(prod)?.powf(1.0 / l as f64));
    }
    if l < t {
        for (i, a) in mats.iter().enumerate() {
            word.push(i as u8);
            visit(mats, &(prod * a), word, t, st)?;
            word.pop();
        }
    }
    Ok(())
}

/// Depth-`t` bracket of the joint spectral radius. The upper bound uses the best of a
/// balanced diagonal norm and a few ellipsoidal norms built from short products.
pub fn jsr_bracket(pair: &RestrictedPair, t: usize) -> Result<JsrBracket> {
    if t == 0 || t > MAX_DEPTH {
        return Err(Error::Budget {
            what: "JSR product length",
            needed: t as f64,
            limit: MAX_DEPTH as f64,
        });
    }
    if pair.dim() == 0 || pair.mats.is_empty() {
        return Err(Error::Degenerate("empty matrix family".into()));
    }
    let balanced = balance(&pair.mats);
    let sel = t.min(SELECT_DEPTH);
    let levels = all_products(&balanced, sel);
    let lower0 = levels
        .iter()
        .enumerate()
        .map(|(l, lev)| {
            lev.iter()
                .map(|p| spectral_radius(p).map(|r| r.powf(1.0 / (l + 1) as f64)))
                .try_fold(0.0, |acc: f64, r| r.map(|r| acc.max(r)))
        })
        .try_fold(0.0, |acc: f64, r| r.map(|r| acc.max(r)))?;

    let mut best_mats = balanced.clone();
    let mut best_upper = upper_bound(&balanced, sel);
    if lower0 > 0.0 {
        for len in [4, 8, 10].into_iter().filter(|&l| l <= sel) {
            for fac in [1.0001, 1.001, 1.01] {
                let (s, s_inv) = ellipsoid(&levels, lower0 * fac, len);
                let cand = similar(&balanced, &s, &s_inv);
                let u = upper_bound(&cand, sel);
                if u < best_upper {
                    best_upper = u;
                    best_mats = cand;
                }
            }
        }
    }

    let n = pair.dim();
    let split = t.min(6);
    let m = best_mats.len();
    let prefixes: Vec<Vec<u8>> = (0..m.pow(split as u32))
        .map(|mut code| {
            let mut w = vec![0u8; split];
            for slot in w.iter_mut().rev() {
                *slot = (code % m) as u8;
                code /= m;
            }
            w
        })
        .collect();
    // products shorter than the split are visited once, from the all-zero-tail prefixes
    let mut head = Stats::new(t);
    {
        let mut level: Vec<(Vec<u8>, DMatrix<f64>)> = vec![(vec![], DMatrix::identity(n, n))];
        for _ in 1..split {
            level = level
                .iter()
                .flat_map(|(w, p)| {
                    best_mats.iter().enumerate().map(move |(i, a)| {
                        let mut w2 = w.clone();
                        w2.push(i as u8);
                        (w2, p * a)
                    })
                })
                .collect();
            for (w, p) in &level {
                let l = w.len();
                head.max_norm[l] = head.max_norm[l].max(spectral_norm(p));
                if is_min_rotation(w) {
                    head.lower = head.lower.max(spectral_radius(p)?.powf(1.0 / l as f64));
                }
            }
        }
    }
    let stats = prefixes
        .par_iter()
        .map(|w| -> Result<Stats> {
            let mut st = Stats::new(t);
            let prod = w
                .iter()
                .fold(DMatrix::<f64>::identity(n, n), |p, &i| p * &best_mats[i as usize]);
            let mut word = w.clone();
            visit(&best_mats, &prod, &mut word, t, &mut st)?;
            Ok(st)
        })
        .try_reduce(|| Stats::new(t), |a, b| Ok(a.merge(b)))?
        .merge(head);

    let upper = stats
        .max_norm
        .iter()
        .enumerate()
        .skip(1)
        .map(|(s, &v)| v.powf(1.0 / s as f64))
        .fold(f64::INFINITY, f64::min);
    Ok(JsrBracket {
        lower: stats.lower,
        upper: upper.max(stats.lower),
        depth: t,
    })
}

/// Hölder exponent in `C` as an interval `[−log_ρ upper, −log_ρ lower]`, `ρ = ρ(M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderInterval {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
    pub bracket: JsrBracket,
}

impl HolderInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

pub fn holder_c(mask: &Mask, depth: usize) -> Result<HolderInterval> {
    let (_, pair) = restricted_pair(mask)?;
    let bracket = jsr_bracket(&pair, depth)?;
    let base = mask.matrix().spectral_radius().ln();
    Ok(HolderInterval {
        lo: -bracket.upper.ln() / base,
        hi: -bracket.lower.ln() / base,
        k: pair.k,
        bracket,
    })
}

/// `L_2` Hölder exponent `−log_{ρ(M)} ρ_2`. Masks with `k = 0` go through [`holder_l2_symmetrized`].
pub fn holder_l2(mask: &Mask) -> Result<f64> {
    if regularity_degree(mask)? == 0 {
        return holder_l2_symmetrized(mask);
    }
    let (_, pair) = restricted_pair(mask)?;
    let rho2 = l2_radius(&pair)?;
    Ok(-rho2.ln() / mask.matrix().spectral_radius().ln())
}

/// `L_2` exponent from the autocorrelation: `−½ log_{ρ(M)} ρ(T̃_0|_{W_k̃})` with `k̃` the sum-rule
/// order of the symmetrized mask.
pub fn holder_l2_symmetrized(mask: &Mask) -> Result<f64> {
    let sym = symmetrize(mask);
    let k = regularity_degree(&sym)?;
    let omega = omega_closure(&sym, sym.digits());
    let tf = transition_family(&sym, sym.digits(), &omega);
    let pair = restrict_to_wk(&tf, k)?;
    let rho = spectral_radius(pair.a0())?;
    Ok(-0.5 * rho.ln() / mask.matrix().spectral_radius().ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Preset;
    use crate::mask::bspline_mask;
    use crate::tile::omega_set;
    use approx::assert_abs_diff_eq;

    fn bspline(p: Preset, n: usize) -> Mask {
        let (m, d) = p.system();
        bspline_mask(&m, &d, n).unwrap()
    }

    fn scalar_pair(a: f64, b: f64) -> RestrictedPair {
        RestrictedPair::from_mats(vec![DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)])
    }

    #[test]
    fn hat_on_minimal_omega() {
        let mk = bspline(Preset::Unit1d, 1);
        let om = omega_set(&mk, mk.digits()).unwrap();
        let tf = transition_family(&mk, mk.digits(), &om);
        let pair = restrict_to_wk(&tf, 0).unwrap();
        assert_eq!(pair.dim(), 1);
        assert_abs_diff_eq!(pair.a0()[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.a1()[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(l2_radius(&pair).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn indicator_on_single_point_is_degenerate() {
        let mk = bspline(Preset::Unit1d, 0);
        let om = omega_set(&mk, mk.digits()).unwrap();
        let tf = transition_family(&mk, mk.digits(), &om);
        assert!(matches!(restrict_to_wk(&tf, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cardinal_splines() {
        // Sobolev exponent n + 1/2 and Hölder exponent n of the degree-n cardinal spline
        for n in 1..4 {
            let mk = bspline(Preset::Unit1d, n);
            assert_abs_diff_eq!(holder_l2(&mk).unwrap(), n as f64 + 0.5, epsilon = 1e-9);
            let c = holder_c(&mk, 10).unwrap();
            assert!((c.lo - n as f64).abs() < 1e-9 && (c.hi - n as f64).abs() < 1e-9, "{n}: {c:?}");
        }
        assert_abs_diff_eq!(holder_l2(&bspline(Preset::Unit1d, 0)).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn scalar_brackets() {
        let b = jsr_bracket(&scalar_pair(0.5, 0.5), 1).unwrap();
        assert_abs_diff_eq!(b.lower, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.upper, 0.5, epsilon = 1e-15);
        assert!(matches!(jsr_bracket(&scalar_pair(0.5, 0.5), 25), Err(Error::Budget { .. })));
    }

    #[test]
    fn classic_pair() {
        let a0 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]) / 2.0;
        let a1 = a0.transpose() / 2.0;
        let pair = RestrictedPair::from_mats(vec![a0, a1]);
        let b = jsr_bracket(&pair, 12).unwrap();
        let brute = all_products(&pair.mats, 12)
            .iter()
            .enumerate()
            .flat_map(|(l, lev)| lev.iter().map(move |p| spectral_radius(p).unwrap().powf(1.0 / (l + 1) as f64)))
            .fold(0.0, f64::max);
        assert!(b.lower <= b.upper);
        assert_abs_diff_eq!(b.lower, brute, epsilon = 1e-12);
    }

    #[test]
    fn l2_radius_matches_brute_force() {
        let a0 = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, 0.2, 0.5]);
        let a1 = DMatrix::from_row_slice(2, 2, &[-0.4, 0.1, 0.6, 0.35]);
        let pair = RestrictedPair::from_mats(vec![a0, a1]);
        let s = 20;
        let mut level = vec![DMatrix::<f64>::identity(2, 2)];
        for _ in 0..s {
            level = level.iter().flat_map(|p| pair.mats.iter().map(move |a| p * a)).collect();
        }
        let brute = (level.iter().map(|p| p.norm_squared()).sum::<f64>() / 2f64.powi(s)).powf(1.0 / (2 * s) as f64);
        assert_abs_diff_eq!(brute, l2_average(&pair, s as usize), epsilon = 1e-12);
        assert_abs_diff_eq!(l2_radius(&pair).unwrap(), brute, epsilon = 2e-2);
        let kron = (pair.mats[0].kronecker(&pair.mats[0]) + pair.mats[1].kronecker(&pair.mats[1])) / 2.0;
        let dense = spectral_radius(&kron).unwrap().sqrt();
        assert_abs_diff_eq!(l2_radius(&pair).unwrap(), dense, epsilon = 1e-9);
    }

    #[test]
    fn scale_invariance() {
        let (_, pair) = restricted_pair(&bspline(Preset::Dragon, 1)).unwrap();
        let b = jsr_bracket(&pair, 8).unwrap();
        let b3 = jsr_bracket(&pair.scaled(3.0), 8).unwrap();
        assert_abs_diff_eq!(b3.lower / b.lower, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b3.upper / b.upper, 3.0, epsilon = 1e-9);
        let r = l2_radius(&pair).unwrap();
        assert_abs_diff_eq!(l2_radius(&pair.scaled(3.0)).unwrap() / r, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn sum_rule_degree_matches_order() {
        for p in Preset::TWO_TILES {
            for n in 1..4 {
                let (_, pair) = restricted_pair(&bspline(p, n)).unwrap();
                assert_eq!(pair.k, n, "{p}");
            }
        }
    }

    #[test]
    fn l2_routes_agree() {
        // the symmetrized mask of B_4 has sum-rule order 10, past the old degree cap
        for p in Preset::TWO_TILES {
            for n in 1..5 {
                let mk = bspline(p, n);
                let a = holder_l2(&mk).unwrap();
                let b = holder_l2_symmetrized(&mk).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn definitional_average_is_close() {
        for p in Preset::TWO_TILES {
            for n in 1..4 {
                let (_, pair) = restricted_pair(&bspline(p, n)).unwrap();
                let r = l2_radius(&pair).unwrap();
                let avg = l2_average(&pair, 512);
                assert!(avg >= r - 1e-12 && avg - r < 5e-3, "{p} {n}: {avg} vs {r}");
            }
        }
    }

    #[test]
    fn monotone_in_order() {
        for p in Preset::TWO_TILES {
            let vals: Vec<f64> = (0..4).map(|n| holder_l2(&bspline(p, n)).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "{p}: {vals:?}");
        }
    }
}
