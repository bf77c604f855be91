//! Integer linear algebra for dilation matrices, the cosets `Z^d / M Z^d`
//! and digit sets.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Integer vector in `Z^d`.
pub type IVec = Vec<i64>;

const EXPANSION_TOL: f64 = 1e-9;

/// Square integer matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
            });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::NotSquare {
                    row,
                    len: r.len(),
                    dim,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut data = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.get(i, j);
            }
        }
        Self { dim: d, data }
    }

    pub fn mul_vec(&self, v: &[i64]) -> IVec {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim;
        let mut data = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = (0..d).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        IntMatrix { dim: d, data }
    }

    /// Exact determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> i64 {
        let d = self.dim;
        let mut a: Vec<i128> = self.data.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..d {
            if a[k * d + k] == 0 {
                match (k + 1..d).find(|&r| a[r * d + k] != 0) {
                    Some(r) => {
                        for c in 0..d {
                            a.swap(k * d + c, r * d + c);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    a[i * d + j] = (a[i * d + j] * a[k * d + k] - a[i * d + k] * a[k * d + j]) / prev;
                }
            }
            prev = a[k * d + k];
        }
        (sign * a[(d - 1) * d + (d - 1)]) as i64
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> IntMatrix {
        let d = self.dim;
        let mut data = Vec::with_capacity((d - 1) * (d - 1));
        for i in (0..d).filter(|&i| i != skip_row) {
            for j in (0..d).filter(|&j| j != skip_col) {
                data.push(self.get(i, j));
            }
        }
        IntMatrix { dim: d - 1, data }
    }

    /// Adjugate, so that `M · adj(M) = det(M) · I`.
    pub fn adjugate(&self) -> IntMatrix {
        let d = self.dim;
        if d == 1 {
            return IntMatrix::identity(1);
        }
        let mut data = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                let s = if (i + j) % 2 == 0 { 1 } else { -1 };
                data[i * d + j] = s * self.minor(j, i).det();
            }
        }
        IntMatrix { dim: d, data }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j) as f64)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> i64 {
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().map(|x| x.abs()).sum::<i64>())
            .max()
            .unwrap_or(0)
    }
}

fn eigen_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    m.complex_eigenvalues().iter().map(|z| z.norm()).collect()
}

/// True iff every eigenvalue of the square matrix has modulus above `1 + 1e-9`.
pub fn is_expanding(rows: &[Vec<i64>]) -> Result<bool> {
    let m = IntMatrix::from_rows(rows)?;
    Ok(eigen_moduli(&m.to_f64())
        .iter()
        .all(|&r| r > 1.0 + EXPANSION_TOL))
}

/// Expanding integer matrix with `m = |det M| >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DilationMatrix {
    mat: IntMatrix,
    det: i64,
    adj: IntMatrix,
}

impl DilationMatrix {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_matrix(IntMatrix::from_rows(rows)?)
    }

    pub fn from_matrix(mat: IntMatrix) -> Result<Self> {
        let det = mat.det();
        if det.abs() < 2 {
            return Err(Error::SmallDeterminant(det));
        }
        let min_modulus = eigen_moduli(&mat.to_f64())
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_modulus <= 1.0 + EXPANSION_TOL {
            return Err(Error::NotExpanding { min_modulus });
        }
        let adj = mat.adjugate();
        Ok(Self { mat, det, adj })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    /// `m = |det M|`, the number of cosets and digits.
    pub fn m(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.mat
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.mat.rows()
    }

    pub fn transpose(&self) -> DilationMatrix {
        DilationMatrix {
            mat: self.mat.transpose(),
            det: self.det,
            adj: self.adj.transpose(),
        }
    }

    pub fn apply(&self, v: &[i64]) -> IVec {
        self.mat.mul_vec(v)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.mat.to_f64()
    }

    pub fn inverse_f64(&self) -> DMatrix<f64> {
        self.adj.to_f64() / self.det as f64
    }

    /// Spectral radius `ρ(M)`.
    pub fn spectral_radius(&self) -> f64 {
        eigen_moduli(&self.to_f64()).into_iter().fold(0.0, f64::max)
    }

    /// `M^{-1} k` when it is an integer vector, decided exactly.
    pub fn solve_integral(&self, k: &[i64]) -> Option<IVec> {
        let a = self.adj.mul_vec(k);
        if a.iter().all(|x| x % self.det == 0) {
            Some(a.into_iter().map(|x| x / self.det).collect())
        } else {
            None
        }
    }

    /// A key that is equal for two vectors exactly when they lie in the same coset.
    pub fn coset_key(&self, k: &[i64]) -> IVec {
        let m = self.det.abs();
        self.adj
            .mul_vec(k)
            .into_iter()
            .map(|x| x.rem_euclid(m))
            .collect()
    }

    pub fn same_coset(&self, a: &[i64], b: &[i64]) -> bool {
        let diff: IVec = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.solve_integral(&diff).is_some()
    }
}

impl fmt::Display for DilationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

/// Complete set of coset representatives of `Z^d / M Z^d` with the zero digit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitSet {
    digits: Vec<IVec>,
}

impl DigitSet {
    pub fn new(m: &DilationMatrix, digits: Vec<IVec>) -> Result<Self> {
        if digits.len() != m.m() {
            return Err(Error::InvalidDigits(format!(
                "expected {} digits, got {}",
                m.m(),
                digits.len()
            )));
        }
        if let Some(d) = digits.iter().find(|d| d.len() != m.dim()) {
            return Err(Error::Dimension {
                expected: m.dim(),
                got: d.len(),
            });
        }
        if digits[0].iter().any(|&x| x != 0) {
            return Err(Error::InvalidDigits("the first digit must be 0".into()));
        }
        let mut seen = HashMap::new();
        for (i, d) in digits.iter().enumerate() {
            if let Some(j) = seen.insert(m.coset_key(d), i) {
                return Err(Error::InvalidDigits(format!(
                    "digits {:?} and {:?} lie in the same coset",
                    digits[j], d
                )));
            }
        }
        Ok(Self { digits })
    }

    pub fn digits(&self) -> &[IVec] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i64] {
        &self.digits[i]
    }

    pub fn max_norm(&self) -> f64 {
        self.digits
            .iter()
            .map(|d| d.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Index `i` of the digit with `k ≡ digits[i] (mod M Z^d)`.
pub fn coset_index(m: &DilationMatrix, digits: &DigitSet, k: &[i64]) -> usize {
    digits
        .digits
        .iter()
        .position(|d| m.same_coset(k, d))
        .expect("a valid digit set covers every coset")
}

/// All integer vectors with sup-norm at most `r`, in lexicographic order.
pub(crate) fn box_points(dim: usize, r: i64) -> Vec<IVec> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

pub(crate) fn sup_norm(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).max().unwrap_or(0)
}

/// Ordering used for deterministic representatives: sup-norm first, then
/// componentwise with nonnegative entries ahead of negative ones of equal modulus.
pub(crate) fn canonical_order(a: &[i64], b: &[i64]) -> std::cmp::Ordering {
    let key = |v: &[i64]| -> Vec<(bool, i64)> { v.iter().map(|&x| (x < 0, x.abs())).collect() };
    sup_norm(a).cmp(&sup_norm(b)).then_with(|| key(a).cmp(&key(b)))
}

/// One minimal sup-norm representative per coset, zero first; ties follow [`canonical_order`].
pub fn canonical_digits(m: &DilationMatrix) -> DigitSet {
    let r = m.matrix().inf_norm() * m.dim() as i64;
    let mut pts = box_points(m.dim(), r);
    pts.sort_by(|a, b| canonical_order(a, b));
    let mut seen = HashMap::new();
    let mut digits = Vec::with_capacity(m.m());
    for p in pts {
        if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(m.coset_key(&p)) {
            e.insert(());
            digits.push(p);
            if digits.len() == m.m() {
                break;
            }
        }
    }
    DigitSet::new(m, digits).expect("the enumeration box meets every coset")
}

/// Canonical digit set of `M^T`.
pub fn dual_digits(m: &DilationMatrix) -> DigitSet {
    canonical_digits(&m.transpose())
}

/// Named dilation matrices and digit sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Square,
    Dragon,
    Bear,
    Example2,
    Unit1d,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Square,
        Preset::Dragon,
        Preset::Bear,
        Preset::Example2,
        Preset::Unit1d,
    ];

    /// The three planar two-digit tiles.
    pub const TWO_TILES: [Preset; 3] = [Preset::Square, Preset::Dragon, Preset::Bear];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Square => "square",
            Preset::Dragon => "dragon",
            Preset::Bear => "bear",
            Preset::Example2 => "example2",
            Preset::Unit1d => "unit1d",
        }
    }

    pub fn rows(self) -> Vec<Vec<i64>> {
        match self {
            Preset::Square => vec![vec![0, -2], vec![1, 0]],
            Preset::Dragon => vec![vec![1, 1], vec![-1, 1]],
            Preset::Bear => vec![vec![1, -2], vec![1, 0]],
            Preset::Example2 => vec![vec![1, 2], vec![1, -1]],
            Preset::Unit1d => vec![vec![2]],
        }
    }

    pub fn digit_vectors(self) -> Vec<IVec> {
        match self {
            Preset::Square | Preset::Dragon | Preset::Bear => vec![vec![0, 0], vec![1, 0]],
            Preset::Example2 => vec![vec![0, 0], vec![1, 0], vec![0, 1]],
            Preset::Unit1d => vec![vec![0], vec![1]],
        }
    }

    pub fn matrix(self) -> DilationMatrix {
        DilationMatrix::new(&self.rows()).expect("preset matrices are expanding")
    }

    pub fn digits(self) -> DigitSet {
        DigitSet::new(&self.matrix(), self.digit_vectors()).expect("preset digits are valid")
    }

    pub fn system(self) -> (DilationMatrix, DigitSet) {
        (self.matrix(), self.digits())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
