//! Self-affine tiles, their point clouds and rasters, and the index set `Ω`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::{DigitSet, DilationMatrix, IVec};
use crate::mask::Mask;
use crate::refine::{transition_family, unit_eigenvector};

/// Largest point cloud `tile_points` will build.
pub const MAX_TILE_POINTS: usize = 1 << 24;

/// Cell integrals below this are treated as zero when pruning `Ω`.
const PRUNE_TOL: f64 = 1e-12;

/// Axis-aligned box, one interval per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

/// Points stored row by row in a flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// CSV with header `x,y` (or `x1..xd` outside the plane), shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = if self.dim == 2 {
            "x,y".to_string()
        } else {
            (1..=self.dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
        };
        writeln!(w, "{header}")?;
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `G_p = {Σ_{k=1}^p M^{-k} Δ_k}` with an enclosing box of the full tile.
#[derive(Clone, Debug)]
pub struct TileApprox {
    pub depth: usize,
    pub cloud: PointCloud,
    pub bbox: BBox,
}

/// Box around the attractor `{Σ_{k≥1} M^{-k} s_k : s_k ∈ S}`, with a rigorous tail bound.
pub fn attractor_bbox(m: &DilationMatrix, s: &[IVec]) -> BBox {
    const TERMS: usize = 64;
    let d = m.dim();
    let inv = m.inverse_f64();
    let smax = s
        .iter()
        .map(|v| v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    let mut p = inv.clone();
    for _ in 0..TERMS {
        for i in 0..d {
            let vals = s.iter().map(|v| (0..d).map(|k| p[(i, k)] * v[k] as f64).sum::<f64>());
            let (mn, mx) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            lo[i] += mn;
            hi[i] += mx;
        }
        p = &inv * p;
    }
    // ‖Σ_{k>K} M^{-k} s_k‖ ≤ smax Σ_{j≥0} ‖M^{-K-1-j}‖, bounded by blocks of the submultiplicative norm.
    let mut tail = 0.0;
    let mut q = p.clone();
    for _ in 0..TERMS {
        tail += q.norm();
        q = &inv * q;
    }
    let block = q.norm() / p.norm().max(f64::MIN_POSITIVE);
    let tail = smax * tail / (1.0 - block.min(0.5)) + 1e-12;
    BBox {
        lo: lo.iter().map(|x| x - tail).collect(),
        hi: hi.iter().map(|x| x + tail).collect(),
    }
}

/// Depth-`p` point cloud of the tile `G`.
pub fn tile_points(m: &DilationMatrix, digits: &DigitSet, p: usize) -> Result<TileApprox> {
    let count = (m.m() as f64).powi(p as i32);
    if count > MAX_TILE_POINTS as f64 {
        return Err(Error::Budget {
            what: "tile point cloud",
            needed: count,
            limit: MAX_TILE_POINTS as f64,
        });
    }
    let d = m.dim();
    let inv = m.inverse_f64();
    let dig: Vec<DVector<f64>> = digits
        .digits()
        .iter()
        .map(|v| DVector::from_iterator(d, v.iter().map(|&x| x as f64)))
        .collect();
    let mut pts: Vec<DVector<f64>> = vec![DVector::zeros(d)];
    for _ in 0..p {
        let mut next = Vec::with_capacity(pts.len() * dig.len());
        for delta in &dig {
            for x in &pts {
                next.push(&inv * (x + delta));
            }
        }
        pts = next;
    }
    let coords = pts.iter().flat_map(|v| v.iter().copied()).collect();
    Ok(TileApprox {
        depth: p,
        cloud: PointCloud { dim: d, coords },
        bbox: attractor_bbox(m, digits.digits()),
    })
}

/// Occupancy raster, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub bbox: BBox,
    pub data: Vec<bool>,
}

impl Raster {
    pub fn occupied(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Occupied pixels times pixel area.
    pub fn area(&self) -> f64 {
        self.occupied() as f64 * self.bbox.volume() / (self.width * self.height) as f64
    }

    /// Binary PGM, 255 for occupied pixels.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Rasterizes a planar depth-`p` cloud over the tile's bounding box.
pub fn render_tile(
    m: &DilationMatrix,
    digits: &DigitSet,
    width: usize,
    height: usize,
    p: usize,
) -> Result<Raster> {
    if m.dim() != 2 {
        return Err(Error::Unsupported("rendering needs a planar tile".into()));
    }
    if width == 0 || height == 0 {
        return Err(Error::Config("raster size must be positive".into()));
    }
    let tile = tile_points(m, digits, p)?;
    let bbox = tile.bbox;
    let mut data = vec![false; width * height];
    let sx = width as f64 / (bbox.hi[0] - bbox.lo[0]);
    let sy = height as f64 / (bbox.hi[1] - bbox.lo[1]);
    for pt in tile.cloud.iter() {
        let c = (((pt[0] - bbox.lo[0]) * sx) as usize).min(width - 1);
        let r = (((pt[1] - bbox.lo[1]) * sy) as usize).min(height - 1);
        data[(height - 1 - r) * width + c] = true;
    }
    Ok(Raster {
        width,
        height,
        bbox,
        data,
    })
}

/// Result of testing `Σ_k 1_G(x − k) = 1` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionCheck {
    /// Largest `|coverage − 1|` over interior cells.
    pub max_deviation: f64,
    pub interior_cells: usize,
    pub total_cells: usize,
}

/// Covers the unit cell with a `grid^d` raster and counts how many integer translates of the
/// depth-`p` cloud occupy each cell; cells whose 5-neighbourhood sees a change of owners are
/// boundary cells and skipped.
pub fn partition_of_unity_check(
    m: &DilationMatrix,
    digits: &DigitSet,
    grid: usize,
    p: usize,
) -> Result<PartitionCheck> {
    let d = m.dim();
    let n = grid as i64;
    let tile = tile_points(m, digits, p)?;
    let mut occupied: HashSet<IVec> = HashSet::new();
    for pt in tile.cloud.iter() {
        occupied.insert(pt.iter().map(|x| (x * grid as f64).floor() as i64).collect());
    }
    // residue cell → list of integer translates k with r + k n occupied
    let mut by_residue: HashMap<IVec, Vec<IVec>> = HashMap::new();
    for g in &occupied {
        let r: IVec = g.iter().map(|x| x.rem_euclid(n)).collect();
        let k: IVec = g.iter().map(|x| x.div_euclid(n)).collect();
        by_residue.entry(r).or_default().push(k);
    }
    let owners = |g: &[i64]| -> BTreeSet<IVec> {
        let r: IVec = g.iter().map(|x| x.rem_euclid(n)).collect();
        let q: IVec = g.iter().map(|x| x.div_euclid(n)).collect();
        by_residue
            .get(&r)
            .map(|ks| ks.iter().map(|k| q.iter().zip(k).map(|(a, b)| a - b).collect()).collect())
            .unwrap_or_default()
    };
    let offsets = crate::lattice::box_points(d, 2);
    let mut total = 0;
    let mut interior = 0;
    let mut max_dev: f64 = 0.0;
    for r in crate::lattice::box_points(d, n).into_iter().filter(|r| r.iter().all(|&x| (0..n).contains(&x))) {
        total += 1;
        let own = owners(&r);
        let constant = offsets.iter().all(|o| {
            let g: IVec = r.iter().zip(o).map(|(a, b)| a + b).collect();
            owners(&g) == own
        });
        if constant {
            interior += 1;
            max_dev = max_dev.max((own.len() as f64 - 1.0).abs());
        }
    }
    Ok(PartitionCheck {
        max_deviation: max_dev,
        interior_cells: interior,
        total_cells: total,
    })
}

/// Center `c` with `G = 2c − G`, when the digit set is symmetric (`D = δ − D`).
pub fn symmetry_center(m: &DilationMatrix, digits: &DigitSet) -> Option<Vec<f64>> {
    let d = m.dim();
    let set: HashSet<&[i64]> = digits.digits().iter().map(|v| v.as_slice()).collect();
    let delta = digits.digits().iter().map(|v| -> IVec { v.iter().zip(digits.get(0)).map(|(a, b)| a + b).collect() }).find(|delta| {
        digits
            .digits()
            .iter()
            .all(|v| set.contains(delta.iter().zip(v).map(|(a, b)| a - b).collect::<IVec>().as_slice()))
    })?;
    // c = ½ Σ_{k≥1} M^{-k} δ = ½ (M − I)^{-1} δ
    let shifted = m.to_f64() - DMatrix::identity(d, d);
    let half = DVector::from_iterator(d, delta.iter().map(|&x| x as f64 / 2.0));
    shifted.lu().solve(&half).map(|c| c.iter().copied().collect())
}

/// True when every reflected point `2c − x` lies within `tol` of a cloud point.
pub fn is_symmetric(cloud: &PointCloud, center: &[f64], tol: f64) -> bool {
    let key = |x: &[f64]| -> IVec { x.iter().map(|v| (v / tol).floor() as i64).collect() };
    let mut cells: HashMap<IVec, Vec<usize>> = HashMap::new();
    for (i, p) in cloud.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    let near = crate::lattice::box_points(cloud.dim, 1);
    cloud.iter().all(|p| {
        let r: Vec<f64> = p.iter().zip(center).map(|(x, c)| 2.0 * c - x).collect();
        let k = key(&r);
        near.iter().any(|o| {
            let kk: IVec = k.iter().zip(o).map(|(a, b)| a + b).collect();
            cells.get(&kk).is_some_and(|ids| {
                ids.iter().any(|&i| {
                    cloud.point(i).iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= tol
                })
            })
        })
    })
}

/// Index set of integer translates used by the transition matrices, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaSet {
    elems: Vec<IVec>,
}

impl OmegaSet {
    pub fn new(mut elems: Vec<IVec>) -> Self {
        elems.sort();
        elems.dedup();
        Self { elems }
    }

    pub fn elems(&self) -> &[IVec] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, a: &[i64]) -> bool {
        self.elems.binary_search_by(|e| e.as_slice().cmp(a)).is_ok()
    }

    pub fn index_map(&self) -> HashMap<IVec, usize> {
        self.elems.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect()
    }
}

/// All `b` with `(b + G_0) ∩ K ≠ ∅`, where `G_0` is the tile of `D_0` and `K ⊇ supp φ`.
///
/// Computed as the greatest subset `X` of a candidate box with
/// `b ∈ X ⇒ ∃ Δ ∈ D_0, s ∈ supp c : Mb + Δ − s ∈ X`. The set is invariant under every `T_Δ`.
pub fn omega_closure(mask: &Mask, digits0: &DigitSet) -> OmegaSet {
    let m = mask.matrix();
    let d = m.dim();
    let support: Vec<IVec> = mask.coeffs().keys().cloned().collect();
    let kb = attractor_bbox(m, &support);
    let gb = attractor_bbox(m, digits0.digits());
    let lo: Vec<i64> = (0..d).map(|i| (kb.lo[i] - gb.hi[i]).floor() as i64 - 1).collect();
    let hi: Vec<i64> = (0..d).map(|i| (kb.hi[i] - gb.lo[i]).ceil() as i64 + 1).collect();
    let mut x: HashSet<IVec> = HashSet::new();
    let mut cur = lo.clone();
    'outer: loop {
        x.insert(cur.clone());
        for i in (0..d).rev() {
            if cur[i] < hi[i] {
                cur[i] += 1;
                continue 'outer;
            }
            cur[i] = lo[i];
        }
        break;
    }
    loop {
        let keep: HashSet<IVec> = x
            .iter()
            .filter(|b| {
                let mb = m.apply(b);
                digits0.digits().iter().any(|delta| {
                    support.iter().any(|s| {
                        let t: IVec = (0..d).map(|i| mb[i] + delta[i] - s[i]).collect();
                        x.contains(&t)
                    })
                })
            })
            .cloned()
            .collect();
        if keep.len() == x.len() {
            break;
        }
        x = keep;
    }
    OmegaSet::new(x.into_iter().collect())
}

/// Smallest `Ω` carrying `φ` on `G_0`: the closure pruned to translates where
/// `∫_{G_0} φ(b + y) dy > 0`. Masks with a negative coefficient keep the closure.
pub fn omega_set(mask: &Mask, digits0: &DigitSet) -> Result<OmegaSet> {
    let closure = omega_closure(mask, digits0);
    if mask.coeffs().values().any(|c| *c < num_rational::Rational64::from_integer(0)) {
        return Ok(closure);
    }
    let tf = transition_family(mask, digits0, &closure);
    let integrals = unit_eigenvector(&tf.average())?;
    let scale = integrals.amax();
    let elems = closure
        .elems()
        .iter()
        .zip(integrals.iter())
        .filter(|(_, &v)| v > PRUNE_TOL * scale)
        .map(|(a, _)| a.clone())
        .collect();
    Ok(OmegaSet::new(elems))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Preset;
    use crate::mask::bspline_mask;

    #[test]
    fn point_counts_and_box() {
        for p in Preset::TWO_TILES {
            let (m, d) = p.system();
            let t = tile_points(&m, &d, 10).unwrap();
            assert_eq!(t.cloud.len(), 1024);
            assert!(t.cloud.iter().all(|x| t.bbox.contains(x, 1e-9)));
        }
        let (m, d) = Preset::Square.system();
        let bb = attractor_bbox(&m, d.digits());
        for (l, h) in bb.lo.iter().zip(&bb.hi) {
            assert!((h - l - 1.0).abs() < 1e-6 && (l + 2.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn budget_guard() {
        let (m, d) = Preset::Bear.system();
        assert!(matches!(tile_points(&m, &d, 30), Err(Error::Budget { .. })));
    }

    #[test]
    fn unit_interval_is_a_tile() {
        let (m, d) = Preset::Unit1d.system();
        let chk = partition_of_unity_check(&m, &d, 64, 12).unwrap();
        assert_eq!(chk.max_deviation, 0.0);
        assert!(chk.interior_cells >= 60);
    }

    #[test]
    fn two_tiles_partition_unity() {
        for p in Preset::TWO_TILES {
            let (m, d) = p.system();
            let chk = partition_of_unity_check(&m, &d, 64, 18).unwrap();
            assert_eq!(chk.max_deviation, 0.0, "{p}");
            assert!(chk.interior_cells * 4 > chk.total_cells, "{p}: {chk:?}");
        }
    }

    #[test]
    fn raster_area_is_one() {
        for p in Preset::TWO_TILES {
            let (m, d) = p.system();
            let r = render_tile(&m, &d, 512, 512, 18).unwrap();
            assert!((r.area() - 1.0).abs() < 0.05, "{p}: {}", r.area());
        }
    }

    #[test]
    fn pgm_header() {
        let (m, d) = Preset::Dragon.system();
        let r = render_tile(&m, &d, 8, 4, 8).unwrap();
        let mut out = Vec::new();
        r.write_pgm(&mut out).unwrap();
        assert!(out.starts_with(b"P5\n8 4\n255\n"));
        assert_eq!(out.len(), 11 + 32);
    }

    #[test]
    fn centrally_symmetric_tiles() {
        for p in Preset::TWO_TILES {
            let (m, d) = p.system();
            let c = symmetry_center(&m, &d).unwrap();
            let t = tile_points(&m, &d, 12).unwrap();
            let shift = m.inverse_f64().pow(12);
            let e = DVector::from_iterator(2, d.get(1).iter().map(|&x| x as f64));
            // finite-depth center differs from the limit by ½ Σ_{k>p} M^{-k} e
            let tail = (&shift * (m.to_f64() - DMatrix::identity(2, 2)).lu().solve(&e).unwrap()) / 2.0;
            let cp: Vec<f64> = c.iter().zip(tail.iter()).map(|(a, b)| a - b).collect();
            assert!(is_symmetric(&t.cloud, &cp, 1e-9), "{p}");
        }
    }

    #[test]
    fn omega_sizes() {
        let expect = [
            (Preset::Square, [(9, 1), (9, 9), (16, 16), (36, 16)]),
            (Preset::Dragon, [(7, 1), (22, 10), (27, 27), (42, 42)]),
            (Preset::Bear, [(7, 1), (12, 12), (26, 14), (36, 28)]),
        ];
        for (p, sizes) in expect {
            let (m, d) = p.system();
            for (n, (full, min)) in sizes.into_iter().enumerate() {
                let mk = bspline_mask(&m, &d, n).unwrap();
                assert_eq!(omega_closure(&mk, &d).len(), full, "{p} n={n}");
                assert_eq!(omega_set(&mk, &d).unwrap().len(), min, "{p} n={n}");
            }
        }
    }

    #[test]
    fn omega_1d_is_support_minus_one() {
        let (m, d) = Preset::Unit1d.system();
        for n in 0..5 {
            let mk = bspline_mask(&m, &d, n).unwrap();
            let om = omega_set(&mk, &d).unwrap();
            let want: Vec<IVec> = (0..=n as i64).map(|k| vec![k]).collect();
            assert_eq!(om.elems(), want.as_slice());
        }
    }

    #[test]
    fn csv_dump() {
        let (m, d) = Preset::Unit1d.system();
        let t = tile_points(&m, &d, 1).unwrap();
        let mut out = Vec::new();
        t.cloud.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x1\n0\n0.5\n");
    }
}
