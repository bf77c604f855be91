//! Transition matrices, values at integer points and refinement onto `M^{-q} Z^d`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::{coset_index, DigitSet, DilationMatrix, IVec};
use crate::mask::Mask;
use crate::tile::OmegaSet;

const UNIT_EIGEN_TOL: f64 = 1e-10;
const EIGENSPACE_TOL: f64 = 1e-9;
const INVERSE_ITER_CAP: usize = 200;
const INVERSE_ITER_TOL: f64 = 1e-12;

/// Matrices `(T_Δ)_{a,b} = c_{Ma−b+Δ}` over `a, b ∈ Ω`, one per digit of `D_0`.
#[derive(Clone, Debug)]
pub struct TransitionFamily {
    matrix: DilationMatrix,
    omega: OmegaSet,
    digits0: DigitSet,
    mats: Vec<DMatrix<f64>>,
    index: HashMap<IVec, usize>,
}

impl TransitionFamily {
    pub fn omega(&self) -> &OmegaSet {
        &self.omega
    }

    pub fn digits0(&self) -> &DigitSet {
        &self.digits0
    }

    pub fn matrix(&self) -> &DilationMatrix {
        &self.matrix
    }

    pub fn mats(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn size(&self) -> usize {
        self.omega.len()
    }

    pub fn index_of(&self, a: &[i64]) -> Option<usize> {
        self.index.get(a).copied()
    }

    /// `(1/m) Σ_Δ T_Δ`, whose unit eigenvector holds the integrals of `φ` over `a + G_0`.
    pub fn average(&self) -> DMatrix<f64> {
        let n = self.size();
        let sum = self
            .mats
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, t| acc + t);
        sum / self.mats.len() as f64
    }
}

/// Builds the transition matrices in the order of `omega`.
pub fn transition_family(mask: &Mask, digits0: &DigitSet, omega: &OmegaSet) -> TransitionFamily {
    let m = mask.matrix();
    let n = omega.len();
    let coeffs = mask.coeffs_f64();
    let mats = digits0
        .digits()
        .iter()
        .map(|delta| {
            DMatrix::from_fn(n, n, |i, j| {
                let ma = m.apply(&omega.elems()[i]);
                let k: IVec = ma
                    .iter()
                    .zip(&omega.elems()[j])
                    .zip(delta)
                    .map(|((x, b), d)| x - b + d)
                    .collect();
                coeffs.get(&k).copied().unwrap_or(0.0)
            })
        })
        .collect();
    TransitionFamily {
        matrix: m.clone(),
        omega: omega.clone(),
        digits0: digits0.clone(),
        mats,
        index: omega.index_map(),
    }
}

/// Eigenvector of `t` for the simple eigenvalue 1, normalized to unit coordinate sum.
pub(crate) fn unit_eigenvector(t: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = t.nrows();
    let scale = t.norm().max(1.0);
    let distance = crate::linalg::eigenvalues(t)?
        .iter()
        .map(|z| (z - 1.0).norm())
        .fold(f64::INFINITY, f64::min);
    if distance > UNIT_EIGEN_TOL * scale {
        return Err(Error::MissingUnitEigenvalue { distance });
    }
    let shifted = t - DMatrix::identity(n, n);
    let sv = shifted.clone().svd(false, false).singular_values;
    let dim = sv.iter().filter(|&&s| s < EIGENSPACE_TOL * scale).count();
    if dim > 1 {
        return Err(Error::AmbiguousEigenspace { dim });
    }

    let lu = (t - DMatrix::identity(n, n) * (1.0 + 1e-10)).lu();
    let mut x = DVector::from_element(n, 1.0);
    let mut residual = f64::INFINITY;
    for _ in 0..INVERSE_ITER_CAP {
        x = lu.solve(&x).ok_or(Error::NoConvergence {
            what: "inverse iteration",
            residual,
        })?;
        let norm = x.amax();
        x /= norm;
        residual = (t * &x - &x).amax();
        if residual <= INVERSE_ITER_TOL {
            break;
        }
    }
    if residual > INVERSE_ITER_TOL * 1e2 {
        return Err(Error::NoConvergence {
            what: "inverse iteration",
            residual,
        });
    }
    let s = x.sum();
    if s.abs() < 1e-12 {
        return Err(Error::Degenerate(
            "the unit eigenvector has zero coordinate sum".into(),
        ));
    }
    Ok(x / s)
}

/// Values `φ(a)`, `a ∈ Ω`: the unit eigenvector of `T_0` with `Σ_a v_a = 1`.
pub fn integer_values(tf: &TransitionFamily) -> Result<DVector<f64>> {
    unit_eigenvector(&tf.mats[0])
}

/// Samples `φ(M^{-q} j)` of a refinable function.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    pub depth: usize,
    pub matrix: DilationMatrix,
    pub values: BTreeMap<IVec, f64>,
}

impl LatticeFunction {
    pub fn get(&self, j: &[i64]) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }

    /// Physical position `M^{-q} j` of a node.
    pub fn position(&self, j: &[i64]) -> Vec<f64> {
        let inv = self.matrix.inverse_f64().pow(self.depth as u32);
        let v = DVector::from_iterator(j.len(), j.iter().map(|&x| x as f64));
        (inv * v).iter().copied().collect()
    }

    /// CSV with columns `j_1..j_d,value`, values with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.matrix.dim();
        let header: Vec<String> = (1..=d).map(|i| format!("j{i}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (j, v) in &self.values {
            let idx: Vec<String> = j.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{:.16e}", idx.join(","), v)?;
        }
        Ok(())
    }
}

/// Largest `|Σ_k φ(M^{-q} j − k) − 1|` over all nodes `j`, grouping nodes by cosets of `M^q Z^d`.
pub fn partition_of_unity_deviation(lf: &LatticeFunction) -> f64 {
    if lf.depth == 0 {
        let total: f64 = lf.values.values().sum();
        return (total - 1.0).abs();
    }
    let mut mq = lf.matrix.matrix().clone();
    for _ in 1..lf.depth {
        mq = lf.matrix.matrix().mul(&mq);
    }
    let mq = DilationMatrix::from_matrix(mq).expect("powers of a dilation are dilations");
    let mut sums: BTreeMap<IVec, f64> = BTreeMap::new();
    for (j, v) in &lf.values {
        *sums.entry(mq.coset_key(j)).or_default() += v;
    }
    let missing = (sums.len() as u128) < mq.m() as u128;
    sums.values()
        .map(|s| (s - 1.0).abs())
        .fold(if missing { 1.0 } else { 0.0 }, f64::max)
}

/// Values on `M^{-q} Z^d`: the `Ω`-vector at `M^{-1}(y + Δ)` is `T_Δ` times the one at `y`.
pub fn refine_values(tf: &TransitionFamily, v: &DVector<f64>, q: usize) -> LatticeFunction {
    let m = &tf.matrix;
    let d = m.dim();
    let digits = tf.digits0.digits();
    // Level ℓ holds (Σ_{k≤ℓ} M^{ℓ−k} Δ_k, T_{Δ_1}⋯T_{Δ_ℓ} v) for every digit string.
    let mut level: Vec<(IVec, DVector<f64>)> = vec![(vec![0; d], v.clone())];
    let mut mpow = vec![vec![0i64; d]; d];
    for (i, row) in mpow.iter_mut().enumerate() {
        row[i] = 1;
    }
    for _ in 0..q {
        let mut next = Vec::with_capacity(level.len() * digits.len());
        for (t, delta) in tf.mats.iter().zip(digits) {
            let shift: IVec = (0..d)
                .map(|i| (0..d).map(|k| mpow[i][k] * delta[k]).sum())
                .collect();
            for (j, vec) in &level {
                let jj: IVec = j.iter().zip(&shift).map(|(a, b)| a + b).collect();
                next.push((jj, t * vec));
            }
        }
        level = next;
        mpow = (0..d)
            .map(|i| (0..d).map(|k| (0..d).map(|l| m.matrix().get(i, l) * mpow[l][k]).sum()).collect())
            .collect();
    }
    let mut values = BTreeMap::new();
    for (j, vec) in &level {
        for (a, val) in tf.omega.elems().iter().zip(vec.iter()) {
            let ma: IVec = (0..d)
                .map(|i| (0..d).map(|k| mpow[i][k] * a[k]).sum())
                .collect();
            let node: IVec = j.iter().zip(&ma).map(|(x, y)| x + y).collect();
            values.insert(node, *val);
        }
    }
    LatticeFunction {
        depth: q,
        matrix: m.clone(),
        values,
    }
}

/// Value at one node `j` of `M^{-q} Z^d`, following the base-`M` expansion of `j`.
pub fn value_at_node(tf: &TransitionFamily, v: &DVector<f64>, j: &[i64], q: usize) -> f64 {
    let m = &tf.matrix;
    let mut cur = j.to_vec();
    let mut path = Vec::with_capacity(q);
    for _ in 0..q {
        let i = coset_index(m, &tf.digits0, &cur);
        let r: IVec = cur.iter().zip(tf.digits0.get(i)).map(|(a, b)| a - b).collect();
        cur = m.solve_integral(&r).expect("residual lies in M Z^d");
        path.push(i);
    }
    let Some(a) = tf.index_of(&cur) else {
        return 0.0;
    };
    let mut vec = v.clone();
    for &i in &path {
        vec = &tf.mats[i] * vec;
    }
    vec[a]
}

/// Value at the depth-`q` node nearest to `x` (ties go to the lexicographically smaller index).
pub fn eval_point(tf: &TransitionFamily, v: &DVector<f64>, x: &[f64], q: usize) -> f64 {
    let j = nearest_node(&tf.matrix, x, q);
    value_at_node(tf, v, &j, q)
}

pub(crate) fn nearest_node(m: &DilationMatrix, x: &[f64], q: usize) -> IVec {
    let d = m.dim();
    let mq = m.to_f64().pow(q as u32);
    let inv = m.inverse_f64().pow(q as u32);
    let xv = DVector::from_column_slice(x);
    let guess: IVec = (&mq * &xv).iter().map(|t| t.round() as i64).collect();
    let mut best: Option<(f64, IVec)> = None;
    for off in crate::lattice::box_points(d, 3) {
        let cand: IVec = guess.iter().zip(&off).map(|(a, b)| a + b).collect();
        let p = &inv * DVector::from_iterator(d, cand.iter().map(|&c| c as f64));
        let dist = (p - &xv).norm();
        let better = match &best {
            None => true,
            Some((bd, bj)) => dist < *bd - 1e-15 || ((dist - bd).abs() <= 1e-15 && cand < *bj),
        };
        if better {
            best = Some((dist, cand));
        }
    }
    best.expect("candidate box is nonempty").1
}
