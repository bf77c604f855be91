//! Refinement masks with exact rational coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::{Ratio, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dual_digits, DigitSet, DilationMatrix, IVec};

/// Tolerance for vanishing symbol derivatives, relative to the size of the moments involved.
pub const SUM_RULE_TOL: f64 = 1e-8;

const MAX_SUM_RULE_ORDER: usize = 24;

/// Finitely supported mask `c_k` of `φ(x) = Σ c_k φ(Mx − k)`, with `Σ c_k = m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    matrix: DilationMatrix,
    digits: DigitSet,
    coeffs: BTreeMap<IVec, Rational64>,
    order: Option<usize>,
}

impl Mask {
    /// Builds a mask, dropping zero coefficients and checking `Σ c_k = m`.
    pub fn new(
        matrix: DilationMatrix,
        digits: DigitSet,
        coeffs: BTreeMap<IVec, Rational64>,
    ) -> Result<Self> {
        if let Some(k) = coeffs.keys().find(|k| k.len() != matrix.dim()) {
            return Err(Error::Dimension {
                expected: matrix.dim(),
                got: k.len(),
            });
        }
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let total: Rational64 = coeffs.values().copied().sum();
        if total != Rational64::from_integer(matrix.m() as i64) {
            return Err(Error::InvalidDigits(format!(
                "mask coefficients sum to {total}, expected {}",
                matrix.m()
            )));
        }
        Ok(Self {
            matrix,
            digits,
            coeffs,
            order: None,
        })
    }

    pub fn with_order(mut self, n: usize) -> Self {
        self.order = Some(n);
        self
    }

    pub fn matrix(&self) -> &DilationMatrix {
        &self.matrix
    }

    pub fn digits(&self) -> &DigitSet {
        &self.digits
    }

    pub fn coeffs(&self) -> &BTreeMap<IVec, Rational64> {
        &self.coeffs
    }

    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn m(&self) -> usize {
        self.matrix.m()
    }

    /// Number of nonzero coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: &[i64]) -> Rational64 {
        self.coeffs.get(k).copied().unwrap_or_else(Rational64::zero)
    }

    pub fn get_f64(&self, k: &[i64]) -> f64 {
        self.coeffs.get(k).map_or(0.0, ratio_to_f64)
    }

    pub fn coeffs_f64(&self) -> BTreeMap<IVec, f64> {
        self.coeffs
            .iter()
            .map(|(k, c)| (k.clone(), ratio_to_f64(c)))
            .collect()
    }

    pub fn to_json(&self) -> MaskJson {
        MaskJson {
            matrix: self.matrix.rows(),
            digits: self.digits.digits().to_vec(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, c)| CoeffJson {
                    k: k.clone(),
                    c: c.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &MaskJson) -> Result<Self> {
        let matrix = DilationMatrix::new(&j.matrix)?;
        let digits = DigitSet::new(&matrix, j.digits.clone())?;
        let mut coeffs = BTreeMap::new();
        for e in &j.coeffs {
            let c: Rational64 = e
                .c
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rational coefficient `{}`", e.c)))?;
            *coeffs.entry(e.k.clone()).or_insert_with(Rational64::zero) += c;
        }
        Mask::new(matrix, digits, coeffs)
    }
}

/// Mask JSON document: rational coefficients are strings such as `"3/4"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskJson {
    pub matrix: Vec<Vec<i64>>,
    pub digits: Vec<IVec>,
    pub coeffs: Vec<CoeffJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffJson {
    pub k: IVec,
    pub c: String,
}

pub(crate) fn ratio_to_f64(r: &Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn add_vec(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Tile B-spline mask of order `n`: the `(n+1)`-fold convolution of the digit indicator,
/// scaled by `m^{-n}`.
pub fn bspline_mask(m: &DilationMatrix, digits: &DigitSet, n: usize) -> Result<Mask> {
    DigitSet::new(m, digits.digits().to_vec())?;
    let scale = Rational64::new(1, m.m() as i64);
    let mut c: BTreeMap<IVec, Rational64> = digits
        .digits()
        .iter()
        .map(|d| (d.clone(), Rational64::one()))
        .collect();
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (k, v) in &c {
            for d in digits.digits() {
                *next.entry(add_vec(k, d)).or_insert_with(Rational64::zero) += *v * scale;
            }
        }
        c = next;
    }
    Ok(Mask::new(m.clone(), digits.clone(), c)?.with_order(n))
}

/// Mask of the autocorrelation `φ * φ(−·)`: `out_k = (1/m) Σ_j c_j c_{j+k}`.
pub fn symmetrize(mask: &Mask) -> Mask {
    let inv_m = Rational64::new(1, mask.m() as i64);
    let mut out = BTreeMap::new();
    for (j, cj) in &mask.coeffs {
        for (jk, cjk) in &mask.coeffs {
            let k: IVec = jk.iter().zip(j).map(|(a, b)| a - b).collect();
            *out.entry(k).or_insert_with(Rational64::zero) += *cj * *cjk * inv_m;
        }
    }
    let mut s = Mask::new(mask.matrix.clone(), mask.digits.clone(), out)
        .expect("the autocorrelation of a mask summing to m sums to m");
    s.order = mask.order.map(|n| 2 * n + 1);
    s
}

/// Symbol `a(ξ) = (1/m) Σ c_k e^{−2πi(k,ξ)}`.
pub fn mask_eval(mask: &Mask, xi: &[f64]) -> Complex64 {
    let tau = std::f64::consts::TAU;
    let s: Complex64 = mask
        .coeffs
        .iter()
        .map(|(k, c)| {
            let phase: f64 = k.iter().zip(xi).map(|(&a, b)| a as f64 * b).sum();
            Complex64::from_polar(ratio_to_f64(c), -tau * phase)
        })
        .sum();
    s / mask.m() as f64
}

fn multi_indices(dim: usize, total: usize) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![total as u32]];
    }
    (0..=total)
        .flat_map(|first| {
            multi_indices(dim - 1, total - first)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first as u32);
                    rest
                })
        })
        .collect()
}

/// Largest `n` such that every derivative of `a` of order `≤ n` vanishes at all points
/// `M^{-T}Δ_*`, `Δ_* ∈ D_* \ {0}`; `None` when `a` itself does not vanish there.
///
/// At those points every exponential is an `m`-th root of unity, so derivatives reduce
/// to exact rational moments combined with `m` roots of unity.
pub fn sum_rules_order(mask: &Mask) -> Option<usize> {
    let m = mask.matrix();
    let det = m.det();
    let md = det.unsigned_abs() as i64;
    let adj = m.matrix().adjugate();
    let dual = dual_digits(m);
    let coeffs: Vec<(IVec, Ratio<i128>)> = mask
        .coeffs
        .iter()
        .map(|(k, c)| (k.clone(), Ratio::new(*c.numer() as i128, *c.denom() as i128)))
        .collect();

    let a0: Ratio<i128> = coeffs.iter().map(|(_, c)| *c).sum();
    if a0 != Ratio::from_integer(md as i128) {
        return None;
    }

    let phases: Vec<Vec<usize>> = dual.digits()[1..]
        .iter()
        .map(|ds| {
            coeffs
                .iter()
                .map(|(k, _)| {
                    let t: i64 = adj.mul_vec(k).iter().zip(ds).map(|(a, b)| a * b).sum();
                    (t * det.signum()).rem_euclid(md) as usize
                })
                .collect()
        })
        .collect();

    let mut order = None;
    for n in 0..=MAX_SUM_RULE_ORDER {
        for alpha in multi_indices(mask.dim(), n) {
            let moments: Vec<Ratio<i128>> = coeffs
                .iter()
                .map(|(k, c)| {
                    let mono: i128 = k
                        .iter()
                        .zip(&alpha)
                        .map(|(&x, &a)| (x as i128).pow(a))
                        .product();
                    *c * mono
                })
                .collect();
            for ph in &phases {
                let mut by_phase = vec![Ratio::<i128>::zero(); md as usize];
                for (p, mo) in ph.iter().zip(&moments) {
                    by_phase[*p] += *mo;
                }
                let scale: f64 = by_phase
                    .iter()
                    .map(|s| s.abs().to_f64().unwrap_or(f64::INFINITY))
                    .sum::<f64>()
                    .max(1.0);
                let value: Complex64 = by_phase
                    .iter()
                    .enumerate()
                    .map(|(p, s)| {
                        let w = -std::f64::consts::TAU * p as f64 / md as f64;
                        Complex64::from_polar(s.to_f64().unwrap_or(f64::INFINITY), w)
                    })
                    .sum();
                if value.norm() > SUM_RULE_TOL * scale {
                    return order;
                }
            }
        }
        order = Some(n);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Preset;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn binom(n: i64, k: i64) -> i64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn mask_1d(c: &[(i64, i64, i64)]) -> Mask {
        let (m, d) = Preset::Unit1d.system();
        Mask::new(m, d, c.iter().map(|&(k, p, q)| (vec![k], r(p, q))).collect()).unwrap()
    }

    #[test]
    fn bear_order_one() {
        let (m, d) = Preset::Bear.system();
        let mk = bspline_mask(&m, &d, 1).unwrap();
        assert_eq!(mk.get(&[0, 0]), r(1, 2));
        assert_eq!(mk.get(&[1, 0]), r(1, 1));
        assert_eq!(mk.get(&[2, 0]), r(1, 2));
        assert_eq!(mk.len(), 3);
    }

    #[test]
    fn order_zero_is_digit_indicator() {
        for p in Preset::ALL {
            let (m, d) = p.system();
            let mk = bspline_mask(&m, &d, 0).unwrap();
            assert_eq!(mk.len(), m.m());
            for dg in d.digits() {
                assert_eq!(mk.get(dg), r(1, 1));
            }
        }
    }

    #[test]
    fn example2_order_one_counts_pairs() {
        let (m, d) = Preset::Example2.system();
        let mk = bspline_mask(&m, &d, 1).unwrap();
        // Brute force over the 9 ordered digit pairs, each weighted 1/3.
        let mut oracle: BTreeMap<IVec, Rational64> = BTreeMap::new();
        for a in d.digits() {
            for b in d.digits() {
                *oracle.entry(add_vec(a, b)).or_insert_with(Rational64::zero) += r(1, 3);
            }
        }
        assert_eq!(mk.coeffs(), &oracle);
        assert_eq!(mk.get(&[1, 1]), r(2, 3));
        assert_eq!(mk.get(&[0, 2]), r(1, 3));
    }

    #[test]
    fn two_digit_binomial_formula() {
        for p in Preset::TWO_TILES {
            let (m, d) = p.system();
            for n in 0..=6usize {
                let mk = bspline_mask(&m, &d, n).unwrap();
                assert_eq!(mk.len(), n + 2);
                for k in 0..=(n as i64 + 1) {
                    assert_eq!(mk.get(&[k, 0]), r(binom(n as i64 + 1, k), 1 << n));
                }
            }
        }
    }

    #[test]
    fn symmetrize_examples() {
        let b0 = mask_1d(&[(0, 1, 1), (1, 1, 1)]);
        let s = symmetrize(&b0);
        assert_eq!(s.get(&[-1]), r(1, 2));
        assert_eq!(s.get(&[0]), r(1, 1));
        assert_eq!(s.get(&[1]), r(1, 2));

        let (m, d) = Preset::Bear.system();
        let s = symmetrize(&bspline_mask(&m, &d, 0).unwrap());
        assert_eq!(s.len(), 3);
        assert_eq!(s.get(&[-1, 0]), r(1, 2));
        assert_eq!(s.get(&[0, 0]), r(1, 1));
        assert_eq!(s.get(&[1, 0]), r(1, 2));
    }

    #[test]
    fn symbol_values() {
        let b0 = mask_1d(&[(0, 1, 1), (1, 1, 1)]);
        assert!(mask_eval(&b0, &[0.5]).norm() < 1e-15);
        let (m, d) = Preset::Bear.system();
        let b1 = bspline_mask(&m, &d, 1).unwrap();
        assert!((mask_eval(&b1, &[0.0, 0.0]) - 1.0).norm() < 1e-15);
        assert!(mask_eval(&b1, &[0.5, 0.0]).norm() < 1e-15);
    }

    #[test]
    fn sum_rule_examples() {
        let b0 = mask_1d(&[(0, 1, 1), (1, 1, 1)]);
        assert_eq!(sum_rules_order(&b0), Some(0));
        let b2 = mask_1d(&[(0, 1, 4), (1, 3, 4), (2, 3, 4), (3, 1, 4)]);
        assert_eq!(sum_rules_order(&b2), Some(2));
        let not_refinable = mask_1d(&[(0, 3, 2), (1, 1, 2)]);
        assert_eq!(sum_rules_order(&not_refinable), None);
        for p in Preset::TWO_TILES {
            let (m, d) = p.system();
            for n in 0..=5 {
                let mk = bspline_mask(&m, &d, n).unwrap();
                assert!(sum_rules_order(&mk).unwrap() >= n, "{p} n={n}");
                assert!(sum_rules_order(&symmetrize(&mk)).unwrap() > 2 * n);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let (m, d) = Preset::Example2.system();
        let mk = bspline_mask(&m, &d, 2).unwrap();
        let text = serde_json::to_string(&mk.to_json()).unwrap();
        let back = Mask::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.coeffs(), mk.coeffs());
        assert!(serde_json::from_str::<MaskJson>(r#"{"matrix":[[2]],"digits":[[0],[1]],"coeffs":[],"x":1}"#).is_err());
    }

    #[test]
    fn coefficient_sums_are_exact() {
        for p in Preset::ALL {
            let (m, d) = p.system();
            for n in 0..=6 {
                let mk = bspline_mask(&m, &d, n).unwrap();
                let s: Rational64 = mk.coeffs().values().copied().sum();
                assert_eq!(s, Rational64::from_integer(m.m() as i64));
            }
        }
    }

    proptest! {
        #[test]
        fn symmetrized_symbol_is_squared_modulus(p in 0usize..3, n in 0usize..4, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let (m, d) = Preset::TWO_TILES[p].system();
            let mk = bspline_mask(&m, &d, n).unwrap();
            let s = symmetrize(&mk);
            let a = mask_eval(&mk, &[x, y]);
            prop_assert!((mask_eval(&s, &[x, y]) - a.norm_sqr()).norm() < 1e-12);
            let a0 = mask_eval(&bspline_mask(&m, &d, 0).unwrap(), &[x, y]);
            prop_assert!((mask_eval(&s, &[x, y]) - a0.norm_sqr().powi(n as i32 + 1)).norm() < 1e-12);
        }
    }
}
