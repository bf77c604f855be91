//! Subdivision schemes `[Su](k) = Σ_j c_{k−Mj} u(j)` acting on control nets.
//!
//! After each step indices live on `Z^d` again; the net remembers how many steps were taken and
//! the accumulated parameter shift, so [`ControlNet::position`] places node `k` at
//! `M^{-q} k + origin` in the coordinates of the initial net.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{canonical_digits, DilationMatrix, IVec, IntMatrix};
use crate::mask::{sum_rules_order, Mask};
use crate::regularity::{holder_c, HolderInterval};

/// Largest number of nodes a net may reach.
pub const MAX_NET_POINTS: usize = 1 << 24;

/// Smallest period allowed along each axis of a periodic net.
pub const MIN_PERIOD: i64 = 3;

/// Boundary treatment requested for a net built on a box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Values outside the net are zero.
    Zero,
    /// Zero padding, but the nodes on the boundary of the initial box keep their values.
    Held,
    /// The box is a fundamental domain of a periodic net.
    Periodic,
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(BoundaryMode::Zero),
            "held" => Ok(BoundaryMode::Held),
            "periodic" => Ok(BoundaryMode::Periodic),
            _ => Err(Error::Parse(format!(
                "unknown boundary `{s}` (expected zero, held or periodic)"
            ))),
        }
    }
}

/// Sublattice `H Z^d` of periods, with `H` in lower-triangular Hermite normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodLattice {
    h: Vec<Vec<i64>>,
}

impl PeriodLattice {
    /// Axis-parallel periods `P_1, …, P_d`, each at least [`MIN_PERIOD`].
    pub fn rect(period: &[i64]) -> Result<Self> {
        if let Some(p) = period.iter().find(|&&p| p < MIN_PERIOD) {
            return Err(Error::Config(format!(
                "periodic nets need every period >= {MIN_PERIOD}, got {p}"
            )));
        }
        let d = period.len();
        let cols = (0..d)
            .map(|i| (0..d).map(|r| if r == i { period[i] } else { 0 }).collect())
            .collect();
        Self::from_columns(cols)
    }

    /// Lattice spanned by the given integer columns.
    pub fn from_columns(cols: Vec<IVec>) -> Result<Self> {
        let d = cols.len();
        if let Some(c) = cols.iter().find(|c| c.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: c.len(),
            });
        }
        // a[r][c] = cols[c][r]
        let mut a: Vec<Vec<i64>> = (0..d).map(|r| (0..d).map(|c| cols[c][r]).collect()).collect();
        let col_axpy = |a: &mut Vec<Vec<i64>>, dst: usize, src: usize, f: i64| {
            for row in a.iter_mut() {
                row[dst] -= f * row[src];
            }
        };
        for i in 0..d {
            for j in i + 1..d {
                while a[i][j] != 0 {
                    let f = a[i][i] / a[i][j];
                    col_axpy(&mut a, i, j, f);
                    for row in a.iter_mut() {
                        row.swap(i, j);
                    }
                }
            }
            if a[i][i] == 0 {
                return Err(Error::Config("period vectors are linearly dependent".into()));
            }
            if a[i][i] < 0 {
                for row in a.iter_mut() {
                    row[i] = -row[i];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                let f = a[i][j].div_euclid(a[i][i]);
                col_axpy(&mut a, j, i, f);
            }
        }
        Ok(Self { h: a })
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// Hermite normal form, row-major.
    pub fn hnf(&self) -> &[Vec<i64>] {
        &self.h
    }

    /// Number of cosets `|Z^d / H Z^d|`.
    pub fn index(&self) -> usize {
        (0..self.dim()).map(|i| self.h[i][i] as usize).product()
    }

    /// Axis periods when the lattice is diagonal.
    pub fn box_shape(&self) -> Option<Vec<i64>> {
        let d = self.dim();
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || self.h[i][j] == 0));
        diagonal.then(|| (0..d).map(|i| self.h[i][i]).collect())
    }

    /// Representative of `j` with `0 ≤ r_i < H_ii`.
    pub fn reduce(&self, j: &[i64]) -> IVec {
        let mut r = j.to_vec();
        for i in 0..self.dim() {
            let f = r[i].div_euclid(self.h[i][i]);
            for (row, x) in self.h.iter().zip(r.iter_mut()).skip(i) {
                *x -= f * row[i];
            }
        }
        r
    }

    /// All representatives in lexicographic order.
    pub fn representatives(&self) -> Vec<IVec> {
        let mut out = vec![vec![]];
        for i in 0..self.dim() {
            out = out
                .into_iter()
                .flat_map(|p: IVec| {
                    (0..self.h[i][i]).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// The image lattice `M H Z^d`.
    pub fn dilated(&self, m: &IntMatrix) -> Self {
        let d = self.dim();
        let cols = (0..d)
            .map(|c| {
                let col: IVec = (0..d).map(|r| self.h[r][c]).collect();
                m.mul_vec(&col)
            })
            .collect();
        Self::from_columns(cols).expect("a dilation keeps the lattice full rank")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Topology {
    Finite,
    Periodic(PeriodLattice),
}

/// Control data `u: Z^d → R^c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlNet {
    dims: usize,
    channels: usize,
    values: BTreeMap<IVec, Vec<f64>>,
    topology: Topology,
    held: BTreeSet<IVec>,
    matrix: Option<DilationMatrix>,
    level: usize,
    origin: Vec<f64>,
}

impl ControlNet {
    /// Finitely supported net; absent indices are zero.
    pub fn finite(dims: usize, channels: usize, values: BTreeMap<IVec, Vec<f64>>) -> Result<Self> {
        check_entries(dims, channels, &values)?;
        Ok(Self {
            dims,
            channels,
            values,
            topology: Topology::Finite,
            held: BTreeSet::new(),
            matrix: None,
            level: 0,
            origin: vec![0.0; dims],
        })
    }

    /// Net periodic modulo `lattice`; indices are reduced and missing representatives are zero.
    pub fn periodic(
        channels: usize,
        lattice: PeriodLattice,
        values: BTreeMap<IVec, Vec<f64>>,
    ) -> Result<Self> {
        let dims = lattice.dim();
        check_entries(dims, channels, &values)?;
        let mut reduced: BTreeMap<IVec, Vec<f64>> = lattice
            .representatives()
            .into_iter()
            .map(|r| (r, vec![0.0; channels]))
            .collect();
        for (k, v) in values {
            reduced.insert(lattice.reduce(&k), v);
        }
        Ok(Self {
            dims,
            channels,
            values: reduced,
            topology: Topology::Periodic(lattice),
            held: BTreeSet::new(),
            matrix: None,
            level: 0,
            origin: vec![0.0; dims],
        })
    }

    /// The unit impulse `δ` in dimension `dims`.
    pub fn delta(dims: usize) -> Self {
        let values = BTreeMap::from([(vec![0; dims], vec![1.0])]);
        Self::finite(dims, 1, values).expect("well-formed impulse")
    }

    /// Net on the box `Π [0, shape_i)` with values `f(j)`.
    pub fn from_box<F>(shape: &[usize], channels: usize, mode: BoundaryMode, f: F) -> Result<Self>
    where
        F: Fn(&[i64]) -> Vec<f64>,
    {
        let mut values = BTreeMap::new();
        for j in box_indices(shape) {
            values.insert(j.clone(), f(&j));
        }
        match mode {
            BoundaryMode::Periodic => {
                let period: Vec<i64> = shape.iter().map(|&s| s as i64).collect();
                Self::periodic(channels, PeriodLattice::rect(&period)?, values)
            }
            BoundaryMode::Zero => Self::finite(shape.len(), channels, values),
            BoundaryMode::Held => {
                let mut net = Self::finite(shape.len(), channels, values)?;
                net.held = net
                    .values
                    .keys()
                    .filter(|j| j.iter().zip(shape).any(|(&x, &s)| x == 0 || x == s as i64 - 1))
                    .cloned()
                    .collect();
                Ok(net)
            }
        }
    }

    /// Reads a CSV with header `j1,…,jd,v1,…,vc`.
    pub fn read_csv<R: BufRead>(r: R, mode: BoundaryMode) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty control-net CSV".into()))??;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dims = cols.iter().take_while(|c| c.starts_with('j')).count();
        let channels = cols.len() - dims;
        if dims == 0 || channels == 0 {
            return Err(Error::Parse(
                "control-net CSV needs index columns j1.. followed by value columns".into(),
            ));
        }
        let mut values = BTreeMap::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!("line {}: expected {} fields", n + 2, cols.len())));
            }
            let parse_err = |e: &dyn std::fmt::Display| Error::Parse(format!("line {}: {e}", n + 2));
            let j = fields[..dims]
                .iter()
                .map(|s| s.parse::<i64>().map_err(|e| parse_err(&e)))
                .collect::<Result<IVec>>()?;
            let v = fields[dims..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| parse_err(&e)))
                .collect::<Result<Vec<f64>>>()?;
            values.insert(j, v);
        }
        from_entries(dims, channels, values, mode)
    }

    /// Reads OBJ vertices laid out row-major on an `n1 × n2` grid. The grid comes from `grid` or
    /// from a `# grid n1 n2` comment.
    pub fn read_obj<R: BufRead>(r: R, grid: Option<(usize, usize)>, mode: BoundaryMode) -> Result<Self> {
        let mut verts = Vec::new();
        let mut shape = grid;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let v = it
                        .take(3)
                        .map(|s| {
                            s.parse::<f64>()
                                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    if v.len() != 3 {
                        return Err(Error::Parse(format!("line {}: vertex needs 3 coordinates", n + 1)));
                    }
                    verts.push(v);
                }
                Some("#") if shape.is_none() => {
                    let rest: Vec<&str> = it.collect();
                    if rest.len() >= 3 && rest[0] == "grid" {
                        let a = rest[1].parse().map_err(|_| Error::Parse("bad grid comment".into()))?;
                        let b = rest[2].parse().map_err(|_| Error::Parse("bad grid comment".into()))?;
                        shape = Some((a, b));
                    }
                }
                _ => {}
            }
        }
        let (n1, n2) = shape.ok_or_else(|| {
            Error::Parse("OBJ control net needs a grid size (flag or `# grid n1 n2` comment)".into())
        })?;
        if n1 * n2 != verts.len() {
            return Err(Error::Parse(format!(
                "grid {n1}x{n2} does not match {} vertices",
                verts.len()
            )));
        }
        let values = verts
            .into_iter()
            .enumerate()
            .map(|(i, v)| (vec![(i / n2) as i64, (i % n2) as i64], v))
            .collect();
        from_entries(2, 3, values, mode)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of subdivision steps applied so far.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Stored entries; for periodic nets one per coset, in lexicographic order.
    pub fn values(&self) -> &BTreeMap<IVec, Vec<f64>> {
        &self.values
    }

    /// Nodes pinned by the held boundary mode.
    pub fn held(&self) -> &BTreeSet<IVec> {
        &self.held
    }

    /// Value at any index; zero outside a finite net.
    pub fn get(&self, k: &[i64]) -> Option<&[f64]> {
        match &self.topology {
            Topology::Finite => self.values.get(k).map(Vec::as_slice),
            Topology::Periodic(l) => self.values.get(&l.reduce(k)).map(Vec::as_slice),
        }
    }

    /// First channel at `k`, zero when absent.
    pub fn scalar(&self, k: &[i64]) -> f64 {
        self.get(k).map_or(0.0, |v| v[0])
    }

    /// Parameter position `M^{-q} k + origin` in the index coordinates of the initial net.
    pub fn position(&self, k: &[i64]) -> Vec<f64> {
        let kv = DVector::from_iterator(self.dims, k.iter().map(|&x| x as f64));
        let p = match &self.matrix {
            Some(m) if self.level > 0 => m.inverse_f64().pow(self.level as u32) * kv,
            _ => kv,
        };
        p.iter().zip(&self.origin).map(|(a, b)| a + b).collect()
    }

    /// Writes `x,y,z` rows (position, first channel) or `x1..xd,value` outside the plane.
    pub fn write_heightfield_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::Unsupported(format!(
                "heightfields have one channel, this net has {}",
                self.channels
            )));
        }
        if self.dims == 2 {
            writeln!(w, "x,y,z")?;
        } else {
            let names: Vec<String> = (1..=self.dims).map(|i| format!("x{i}")).collect();
            writeln!(w, "{},value", names.join(","))?;
        }
        for (k, v) in &self.values {
            let p: Vec<String> = self.position(k).iter().map(|x| format!("{x:.12e}")).collect();
            writeln!(w, "{},{:.12e}", p.join(","), v[0])?;
        }
        Ok(())
    }
}

fn check_entries(dims: usize, channels: usize, values: &BTreeMap<IVec, Vec<f64>>) -> Result<()> {
    if dims == 0 || channels == 0 {
        return Err(Error::Config("control nets need dims >= 1 and channels >= 1".into()));
    }
    for (k, v) in values {
        if k.len() != dims {
            return Err(Error::Dimension {
                expected: dims,
                got: k.len(),
            });
        }
        if v.len() != channels {
            return Err(Error::Dimension {
                expected: channels,
                got: v.len(),
            });
        }
    }
    Ok(())
}

fn from_entries(
    dims: usize,
    channels: usize,
    values: BTreeMap<IVec, Vec<f64>>,
    mode: BoundaryMode,
) -> Result<ControlNet> {
    if values.is_empty() {
        return Err(Error::Parse("control net has no entries".into()));
    }
    let lo: IVec = (0..dims).map(|i| values.keys().map(|k| k[i]).min().unwrap()).collect();
    let hi: IVec = (0..dims).map(|i| values.keys().map(|k| k[i]).max().unwrap()).collect();
    let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
    if mode != BoundaryMode::Zero && values.len() != shape.iter().product::<usize>() {
        return Err(Error::Config(format!(
            "{mode:?} boundary needs a full box of indices, got {} of {}",
            values.len(),
            shape.iter().product::<usize>()
        )));
    }
    if mode == BoundaryMode::Zero {
        return ControlNet::finite(dims, channels, values);
    }
    let shifted: BTreeMap<IVec, Vec<f64>> = values
        .into_iter()
        .map(|(k, v)| (k.iter().zip(&lo).map(|(a, b)| a - b).collect(), v))
        .collect();
    ControlNet::from_box(&shape, channels, mode, |j| shifted[j].clone())
}

fn box_indices(shape: &[usize]) -> Vec<IVec> {
    let mut out = vec![vec![]];
    for &s in shape {
        out = out
            .into_iter()
            .flat_map(|p: IVec| {
                (0..s as i64).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Parameter shift `s = −M^{-1} μ`, `μ = (1/m) Σ c_t t`: linear data `ℓ(j)` go to `ℓ(M^{-1}k + s)`.
pub fn mask_shift(mask: &Mask) -> Vec<f64> {
    let d = mask.dim();
    let m = mask.m() as f64;
    let mut mu = DVector::zeros(d);
    for (t, c) in mask.coeffs_f64() {
        for i in 0..d {
            mu[i] += c * t[i] as f64 / m;
        }
    }
    (-(mask.matrix().inverse_f64() * mu)).iter().copied().collect()
}

/// Tensor product of masks `c_k = Π c^{(i)}_{k_i}` with the diagonal dilation `diag(m_i)`.
pub fn tensor_mask(factors: &[Mask]) -> Result<Mask> {
    if let Some(f) = factors.iter().find(|f| f.dim() != 1) {
        return Err(Error::Dimension {
            expected: 1,
            got: f.dim(),
        });
    }
    let d = factors.len();
    let rows: Vec<IVec> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { factors[i].matrix().det() } else { 0 }).collect())
        .collect();
    let matrix = DilationMatrix::new(&rows)?;
    let digits = canonical_digits(&matrix);
    let mut coeffs = BTreeMap::from([(IVec::new(), num_rational::Rational64::from_integer(1))]);
    for f in factors {
        let mut next = BTreeMap::new();
        for (k, a) in &coeffs {
            for (t, b) in f.coeffs() {
                let mut kk = k.clone();
                kk.push(t[0]);
                next.insert(kk, a * b);
            }
        }
        coeffs = next;
    }
    Mask::new(matrix, digits, coeffs)
}

/// One application of `S`. Finite nets grow by the mask support, periodic nets go from period
/// lattice `L` to `ML`, held nodes `j` move to `Mj` with their values.
pub fn subdivide_step(mask: &Mask, net: &ControlNet) -> Result<ControlNet> {
    if mask.dim() != net.dims {
        return Err(Error::Dimension {
            expected: net.dims,
            got: mask.dim(),
        });
    }
    if let Some(prev) = &net.matrix {
        if prev.rows() != mask.matrix().rows() {
            return Err(Error::Unsupported(
                "a net cannot be refined by two different dilation matrices".into(),
            ));
        }
    }
    let m = mask.matrix();
    let needed = net.len() as f64 * m.m() as f64;
    if needed > MAX_NET_POINTS as f64 {
        return Err(Error::Budget {
            what: "control net nodes",
            needed,
            limit: MAX_NET_POINTS as f64,
        });
    }
    let coeffs: Vec<(IVec, f64)> = mask.coeffs_f64().into_iter().collect();
    let (targets, topology) = match &net.topology {
        Topology::Periodic(l) => {
            let l2 = l.dilated(m.matrix());
            (l2.representatives(), Topology::Periodic(l2))
        }
        Topology::Finite => {
            let mut set = BTreeSet::new();
            for j in net.values.keys() {
                let mj = m.apply(j);
                for (t, _) in &coeffs {
                    set.insert(mj.iter().zip(t).map(|(a, b)| a + b).collect::<IVec>());
                }
            }
            (set.into_iter().collect::<Vec<_>>(), Topology::Finite)
        }
    };
    let c = net.channels;
    let computed: Vec<Vec<f64>> = targets
        .par_iter()
        .map(|k| {
            let mut acc = vec![0.0; c];
            for (t, ct) in &coeffs {
                let r: IVec = k.iter().zip(t).map(|(a, b)| a - b).collect();
                if let Some(j) = m.solve_integral(&r) {
                    if let Some(u) = net.get(&j) {
                        for (a, x) in acc.iter_mut().zip(u) {
                            *a += ct * x;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut values: BTreeMap<IVec, Vec<f64>> = targets.into_iter().zip(computed).collect();
    let mut held = BTreeSet::new();
    for j in &net.held {
        let mj = m.apply(j);
        let v = net.values.get(j).cloned().unwrap_or_else(|| vec![0.0; c]);
        values.insert(mj.clone(), v);
        held.insert(mj);
    }
    let s = DVector::from_vec(mask_shift(mask));
    let step = m.inverse_f64().pow(net.level as u32) * s;
    let origin = net.origin.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    Ok(ControlNet {
        dims: net.dims,
        channels: c,
        values,
        topology,
        held,
        matrix: Some(m.clone()),
        level: net.level + 1,
        origin,
    })
}

/// `q` steps of [`subdivide_step`]; `q = 0` returns the net unchanged.
pub fn run_scheme(mask: &Mask, net: &ControlNet, q: usize) -> Result<ControlNet> {
    let needed = net.len() as f64 * (mask.m() as f64).powi(q as i32);
    if needed > MAX_NET_POINTS as f64 {
        return Err(Error::Budget {
            what: "control net nodes",
            needed,
            limit: MAX_NET_POINTS as f64,
        });
    }
    let mut cur = net.clone();
    for _ in 0..q {
        cur = subdivide_step(mask, &cur)?;
    }
    Ok(cur)
}

/// Convergence prerequisites and the certified smoothness of the limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub sum_rules: Option<usize>,
    pub holder: HolderInterval,
    /// Bracket of `τ_k = ρ · m^{k/d}`.
    pub tau: (f64, f64),
    /// Bracket of the generalized rate of convergence; equals the Hölder interval for stable schemes.
    pub rate: (f64, f64),
    /// Largest `n` with certified `C^n` convergence.
    pub smoothness: Option<usize>,
}

pub fn convergence_report(mask: &Mask, depth: usize) -> Result<ConvergenceReport> {
    if mask.m() != 2 {
        return Err(Error::Unsupported(format!(
            "convergence reports need a two-digit mask, got |det M| = {}",
            mask.m()
        )));
    }
    let sum_rules = sum_rules_order(mask);
    let holder = holder_c(mask, depth)?;
    let d = mask.dim() as f64;
    let m = mask.m() as f64;
    let lift = m.powf(holder.k as f64 / d);
    let b = &holder.bracket;
    let rate = (holder.lo, holder.hi);
    let smoothness = (rate.0 > 0.0).then(|| {
        let n = rate.0.ceil() as usize - 1;
        n.min(sum_rules.unwrap_or(0))
    });
    Ok(ConvergenceReport {
        sum_rules,
        tau: (b.lower * lift, b.upper * lift),
        rate,
        smoothness,
        holder,
    })
}

/// Successive-difference decay of `S^q δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    /// `‖f_{q+1} − f_q‖` on shared nodes, `q = 0, …, q_max − 1`.
    pub diffs: Vec<f64>,
    /// Per-step contraction `τ`, from a least-squares fit of `ln diffs` over `q ≥ 3`.
    pub tau: f64,
    /// `log_{ρ(M)} τ`, directly comparable with Hölder exponents.
    pub rate: f64,
    /// False when the fitted differences do not decrease monotonically.
    pub monotone: bool,
}

/// Fits the decay of successive differences of order-`r` derivatives (`r > 0` only in 1D).
pub fn empirical_rate(mask: &Mask, r: usize, q_max: usize) -> Result<RateEstimate> {
    let d = mask.dim();
    if r > 0 && d > 1 {
        return Err(Error::Unsupported(
            "derivative rates are measured on the line only".into(),
        ));
    }
    if let Some(order) = sum_rules_order(mask) {
        if r > order {
            return Err(Error::Unsupported(format!(
                "derivative order {r} exceeds the sum-rule order {order}"
            )));
        }
    }
    if q_max < 5 {
        return Err(Error::Config("empirical_rate needs q_max >= 5".into()));
    }
    let m = mask.matrix();
    let scale = m.spectral_radius();
    let derivative = |net: &ControlNet| -> BTreeMap<IVec, f64> {
        let mut f: BTreeMap<IVec, f64> = net.values.iter().map(|(k, v)| (k.clone(), v[0])).collect();
        let h = scale.powi(net.level as i32);
        for _ in 0..r {
            let keys: BTreeSet<IVec> = f.keys().flat_map(|k| [k.clone(), vec![k[0] - 1]]).collect();
            f = keys
                .into_iter()
                .map(|k| {
                    let v = f.get(&vec![k[0] + 1]).copied().unwrap_or(0.0)
                        - f.get(&k).copied().unwrap_or(0.0);
                    (k, v * h)
                })
                .collect();
        }
        f
    };
    let mut net = ControlNet::delta(d);
    let mut prev = derivative(&net);
    let mut diffs = Vec::with_capacity(q_max);
    for _ in 0..q_max {
        net = subdivide_step(mask, &net)?;
        let cur = derivative(&net);
        let mut diff: f64 = 0.0;
        for (k, v) in &prev {
            diff = diff.max((cur.get(&m.apply(k)).copied().unwrap_or(0.0) - v).abs());
        }
        for (k, v) in &cur {
            if let Some(j) = m.solve_integral(k) {
                diff = diff.max((prev.get(&j).copied().unwrap_or(0.0) - v).abs());
            }
        }
        diffs.push(diff);
        prev = cur;
    }
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .skip(3)
        .filter(|(_, &x)| x > 0.0)
        .map(|(q, &x)| (q as f64, x.ln()))
        .collect();
    let monotone = diffs[3..].windows(2).all(|w| w[1] <= w[0]);
    let tau = if pts.len() < 2 {
        f64::INFINITY
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (-sxy / sxx).exp()
    };
    let rate = tau.ln() / scale.ln();
    Ok(RateEstimate {
        diffs,
        tau,
        rate,
        monotone,
    })
}

/// OBJ with one vertex per node in index order and a quad `(k, k+e1, k+e1+e2, k+e2)` for every
/// node whose four corners exist. Periodic nets wrap around.
pub fn mesh_export<W: Write>(net: &ControlNet, mut w: W) -> Result<()> {
    if net.dims != 2 || net.channels != 3 {
        return Err(Error::Unsupported(format!(
            "meshes need a 2-dimensional net with 3 channels, got dims {} channels {}",
            net.dims, net.channels
        )));
    }
    let index: BTreeMap<&IVec, usize> = net.values.keys().enumerate().map(|(i, k)| (k, i + 1)).collect();
    match &net.topology {
        Topology::Periodic(l) => {
            if let Some(s) = l.box_shape() {
                writeln!(w, "# grid {} {}", s[0], s[1])?;
            }
        }
        Topology::Finite => {
            let lo0 = net.values.keys().map(|k| k[0]).min().unwrap_or(0);
            let hi0 = net.values.keys().map(|k| k[0]).max().unwrap_or(-1);
            let lo1 = net.values.keys().map(|k| k[1]).min().unwrap_or(0);
            let hi1 = net.values.keys().map(|k| k[1]).max().unwrap_or(-1);
            let (n1, n2) = ((hi0 - lo0 + 1) as usize, (hi1 - lo1 + 1) as usize);
            if n1 * n2 == net.len() {
                writeln!(w, "# grid {n1} {n2}")?;
            }
        }
    }
    for v in net.values.values() {
        writeln!(w, "v {:.12e} {:.12e} {:.12e}", v[0], v[1], v[2])?;
    }
    let lookup = |k: IVec| -> Option<usize> {
        match &net.topology {
            Topology::Finite => index.get(&k).copied(),
            Topology::Periodic(l) => index.get(&l.reduce(&k)).copied(),
        }
    };
    for k in net.values.keys() {
        let corners = [[0, 0], [1, 0], [1, 1], [0, 1]].map(|o| lookup(vec![k[0] + o[0], k[1] + o[1]]));
        if let [Some(a), Some(b), Some(c), Some(d)] = corners {
            writeln!(w, "f {a} {b} {c} {d}")?;
        }
    }
    Ok(())
}

/// Dense matrix of the first channel over the index box of a planar net (rows `k_1`, columns `k_2`).
pub fn to_dense(net: &ControlNet) -> Option<(IVec, DMatrix<f64>)> {
    if net.dims != 2 || net.is_empty() {
        return None;
    }
    let lo: IVec = (0..2).map(|i| net.values.keys().map(|k| k[i]).min().unwrap()).collect();
    let hi: IVec = (0..2).map(|i| net.values.keys().map(|k| k[i]).max().unwrap()).collect();
    let mut out = DMatrix::zeros((hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize);
    for (k, v) in &net.values {
        out[((k[0] - lo[0]) as usize, (k[1] - lo[1]) as usize)] = v[0];
    }
    Some((lo, out))
}
