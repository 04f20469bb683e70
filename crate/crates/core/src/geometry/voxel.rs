//! Voxelized domains: occupancy grids with exact Euclidean distance data.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::bvh::BoxTree;
use super::pointset::koch_snowflake;
use super::{Aabb, Coverage, DomainModel, DyadicCube, Point};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `[0,1]^n`
    UnitCube,
    /// `[0,1]^2` minus `[1/2,1]^2`
    LShape,
    /// Koch snowflake of side 1 centred at the origin.
    Koch,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-cube" | "unit-square" | "square" | "cube" => Ok(Preset::UnitCube),
            "l-shape" => Ok(Preset::LShape),
            "koch" | "koch-snowflake" => Ok(Preset::Koch),
            _ => Err(invalid("preset", format!("unknown preset {s:?}"))),
        }
    }
}

/// A union of closed voxels of side `2^-J`. Voxel `(i0,i1,i2)` of the grid is
/// the dyadic cube of generation `J` with index `origin + i`.
#[derive(Clone, Debug)]
pub struct VoxelDomain {
    n: usize,
    j: i32,
    origin: [i64; 3],
    dims: [usize; 3],
    occ: Vec<bool>,
    sat: Vec<u32>,
    count: usize,
    dist: Vec<f64>,
    complement: BoxTree<Aabb>,
    center: Point,
}

impl VoxelDomain {
    pub fn preset(preset: Preset, n: usize, j: i32) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(invalid("n", format!("dimension must be 2 or 3, got {n}")));
        }
        if !(0..=12).contains(&j) {
            return Err(invalid("J", format!("resolution must lie in 0..=12, got {j}")));
        }
        let side = 1usize << j;
        match preset {
            Preset::UnitCube => {
                let dims = [side, side, if n == 3 { side } else { 1 }];
                let occ = vec![true; dims.iter().product()];
                Self::from_occupancy(n, j, [0; 3], dims, occ)
            }
            Preset::LShape => {
                if n != 2 {
                    return Err(invalid("n", "the L-shape preset is planar"));
                }
                if j < 1 {
                    return Err(invalid("J", "the L-shape needs J >= 1"));
                }
                let half = side / 2;
                let dims = [side, side, 1];
                let occ = (0..side * side)
                    .map(|i| !(i % side >= half && i / side >= half))
                    .collect();
                Self::from_occupancy(n, j, [0; 3], dims, occ)
            }
            Preset::Koch => {
                if n != 2 {
                    return Err(invalid("n", "the Koch preset is planar"));
                }
                let level = koch_level_for(j);
                let poly = koch_snowflake(level);
                let dims = [2 * side, 2 * side, 1];
                let origin = [-(side as i64), -(side as i64), 0];
                let h = 1.0 / side as f64;
                let mut occ = vec![false; dims[0] * dims[1]];
                let mut xs = Vec::new();
                for row in 0..dims[1] {
                    let y = (origin[1] as f64 + row as f64 + 0.5) * h;
                    xs.clear();
                    for e in 0..poly.len() {
                        let a = poly[e];
                        let b = poly[(e + 1) % poly.len()];
                        if (a[1] > y) != (b[1] > y) {
                            xs.push(a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]));
                        }
                    }
                    xs.sort_by(f64::total_cmp);
                    for pair in xs.chunks_exact(2) {
                        for col in 0..dims[0] {
                            let x = (origin[0] as f64 + col as f64 + 0.5) * h;
                            if x > pair[0] && x < pair[1] {
                                occ[col + dims[0] * row] = true;
                            }
                        }
                    }
                }
                let mut d = Self::from_occupancy(n, j, origin, dims, occ)?;
                d.center = [0.0; 3];
                Ok(d)
            }
        }
    }

    /// Reads an ASCII (P1) or binary (P4) portable bitmap; black pixels are
    /// occupied. The top image row maps to the largest second coordinate.
    pub fn from_pbm(bytes: &[u8], j: i32) -> Result<Self> {
        let (w, h, bits) = parse_pbm(bytes)?;
        let mut occ = vec![false; w * h];
        for r in 0..h {
            for c in 0..w {
                occ[c + w * (h - 1 - r)] = bits[c + w * r];
            }
        }
        Self::from_occupancy(2, j, [0; 3], [w, h, 1], occ)
    }

    pub fn from_occupancy(
        n: usize,
        j: i32,
        origin: [i64; 3],
        dims: [usize; 3],
        occ: Vec<bool>,
    ) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(invalid("n", format!("dimension must be 2 or 3, got {n}")));
        }
        if n == 2 && dims[2] != 1 {
            return Err(invalid("dims", "planar grids need dims[2] == 1"));
        }
        if occ.len() != dims.iter().product::<usize>() {
            return Err(invalid("occupancy", "length does not match the grid"));
        }
        let count = occ.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::EmptyDomain);
        }
        let mut d = VoxelDomain {
            n,
            j,
            origin,
            dims,
            occ,
            sat: Vec::new(),
            count,
            dist: Vec::new(),
            complement: BoxTree::build(Vec::new()),
            center: [0.0; 3],
        };
        d.check_connected()?;
        d.sat = d.summed_table();
        d.dist = d.exact_edt();
        d.complement = BoxTree::build(d.complement_boundary_voxels());
        let mut c = [0.0; 3];
        for idx in d.occupied() {
            let p = d.voxel_center(idx);
            for a in 0..n {
                c[a] += p[a];
            }
        }
        for x in c.iter_mut() {
            *x /= count as f64;
        }
        d.center = c;
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn resolution(&self) -> i32 {
        self.j
    }
    pub fn h(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn origin(&self) -> [i64; 3] {
        self.origin
    }
    pub fn occupancy(&self) -> &[bool] {
        &self.occ
    }
    pub fn voxel_count(&self) -> usize {
        self.count
    }
    pub fn set_center(&mut self, c: Point) {
        self.center = c;
    }

    /// Distance from each voxel centre to the complement (zero for empty voxels).
    pub fn dist_field(&self) -> &[f64] {
        &self.dist
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        i[0] + self.dims[0] * (i[1] + self.dims[1] * i[2])
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx % self.dims[0], (idx / self.dims[0]) % self.dims[1], idx / (self.dims[0] * self.dims[1])]
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.occ.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn voxel_cube(&self, idx: usize) -> DyadicCube {
        let c = self.coords(idx);
        let mut k = [0i64; 3];
        for a in 0..self.n {
            k[a] = self.origin[a] + c[a] as i64;
        }
        DyadicCube::new(self.j, k)
    }

    pub fn voxel_center(&self, idx: usize) -> Point {
        self.voxel_cube(idx).center(self.n)
    }

    /// Grid index of the voxel containing `p`, if inside the grid.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        let cube = DyadicCube::containing(p, self.j, self.n);
        let mut c = [0usize; 3];
        for a in 0..self.n {
            let off = cube.k[a] - self.origin[a];
            if off < 0 || off >= self.dims[a] as i64 {
                return None;
            }
            c[a] = off as usize;
        }
        Some(self.index(c))
    }

    fn check_connected(&self) -> Result<()> {
        let first = self.occupied().next().ok_or(Error::EmptyDomain)?;
        let mut seen = vec![false; self.occ.len()];
        let mut queue = VecDeque::from([first]);
        seen[first] = true;
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for nb in self.face_neighbors(i).into_iter().flatten() {
                if self.occ[nb] && !seen[nb] {
                    seen[nb] = true;
                    reached += 1;
                    queue.push_back(nb);
                }
            }
        }
        if reached == self.count {
            return Ok(());
        }
        let other = self.occupied().find(|&i| !seen[i]).unwrap_or(first);
        let key = |i: usize| self.voxel_cube(i).k[..self.n].to_vec();
        Err(Error::Disconnected { a: key(first), b: key(other) })
    }

    fn face_neighbors(&self, idx: usize) -> [Option<usize>; 6] {
        let c = self.coords(idx);
        let mut out = [None; 6];
        for a in 0..self.n {
            if c[a] > 0 {
                let mut d = c;
                d[a] -= 1;
                out[2 * a] = Some(self.index(d));
            }
            if c[a] + 1 < self.dims[a] {
                let mut d = c;
                d[a] += 1;
                out[2 * a + 1] = Some(self.index(d));
            }
        }
        out
    }

    fn summed_table(&self) -> Vec<u32> {
        let [dx, dy, dz] = self.dims;
        let (sx, sy) = (dx + 1, dy + 1);
        let mut t = vec![0u32; sx * sy * (dz + 1)];
        for z in 0..dz {
            for y in 0..dy {
                for x in 0..dx {
                    let v = self.occ[x + dx * (y + dy * z)] as u32;
                    let at = |x: usize, y: usize, z: usize| x + sx * (y + sy * z);
                    // inclusion-exclusion over the three lower faces
                    let s = v as i64 + t[at(x, y + 1, z + 1)] as i64 + t[at(x + 1, y, z + 1)] as i64
                        + t[at(x + 1, y + 1, z)] as i64
                        - t[at(x, y, z + 1)] as i64
                        - t[at(x, y + 1, z)] as i64
                        - t[at(x + 1, y, z)] as i64
                        + t[at(x, y, z)] as i64;
                    t[at(x + 1, y + 1, z + 1)] = s as u32;
                }
            }
        }
        t
    }

    /// Number of occupied voxels with grid coordinates in `[lo, hi)`.
    pub fn count_in(&self, lo: [i64; 3], hi: [i64; 3]) -> u64 {
        let mut l = [0usize; 3];
        let mut u = [0usize; 3];
        for a in 0..3 {
            let lim = self.dims[a] as i64;
            l[a] = lo[a].clamp(0, lim) as usize;
            u[a] = hi[a].clamp(0, lim) as usize;
            if u[a] <= l[a] {
                return 0;
            }
        }
        let (sx, sy) = (self.dims[0] + 1, self.dims[1] + 1);
        let t = |x: usize, y: usize, z: usize| self.sat[x + sx * (y + sy * z)] as i64;
        let v = t(u[0], u[1], u[2]) - t(l[0], u[1], u[2]) - t(u[0], l[1], u[2]) - t(u[0], u[1], l[2])
            + t(l[0], l[1], u[2])
            + t(l[0], u[1], l[2])
            + t(u[0], l[1], l[2])
            - t(l[0], l[1], l[2]);
        v as u64
    }

    /// Occupied voxel count and total voxel count inside a dyadic cube that is
    /// no finer than the grid.
    fn cube_counts(&self, c: &DyadicCube) -> (u64, u64) {
        let sh = (self.j - c.j) as u32;
        let mut lo = [0i64; 3];
        let mut hi = [1i64; 3];
        for a in 0..self.n {
            lo[a] = (c.k[a] << sh) - self.origin[a];
            hi[a] = lo[a] + (1i64 << sh);
        }
        (self.count_in(lo, hi), 1u64 << (sh as usize * self.n))
    }

    /// Exact squared-distance transform. The result for voxel `x` is
    /// `min_y sum_a g(x_a - y_a)` over empty voxels `y` (including a ring of
    /// padding), where `g(0) = 0` and `g(d) = (2|d|-1)^2`: the squared
    /// distance from the centre of `x` to the closed voxel `y`, in units of
    /// `(h/2)^2`.
    fn exact_edt(&self) -> Vec<f64> {
        const INF: u64 = u64::MAX / 4;
        let n = self.n;
        let mut pd = [1usize; 3];
        for a in 0..n {
            pd[a] = self.dims[a] + 2;
        }
        let pidx = |c: [usize; 3]| c[0] + pd[0] * (c[1] + pd[1] * c[2]);
        let total: usize = pd.iter().product();
        let mut f = vec![0u64; total];
        for idx in self.occupied() {
            let c = self.coords(idx);
            let mut p = [0usize; 3];
            for a in 0..n {
                p[a] = c[a] + 1;
            }
            f[pidx(p)] = INF;
        }
        let g = |d: usize| -> u64 {
            if d == 0 {
                0
            } else {
                let t = 2 * d as u64 - 1;
                t * t
            }
        };
        let mut line = Vec::new();
        for axis in 0..n {
            let len = pd[axis];
            let stride: usize = (0..axis).map(|a| pd[a]).product();
            for base in 0..total {
                // visit each line once, from its first element
                if !(base / stride).is_multiple_of(len) {
                    continue;
                }
                line.clear();
                line.extend((0..len).map(|t| f[base + t * stride]));
                for x in 0..len {
                    let mut best = line[x];
                    for d in 1..len {
                        let gd = g(d);
                        if gd >= best {
                            break;
                        }
                        if x >= d {
                            best = best.min(gd.saturating_add(line[x - d]));
                        }
                        if x + d < len {
                            best = best.min(gd.saturating_add(line[x + d]));
                        }
                    }
                    f[base + x * stride] = best;
                }
            }
        }
        let half = 0.5 * self.h();
        (0..self.occ.len())
            .map(|idx| {
                if !self.occ[idx] {
                    return 0.0;
                }
                let c = self.coords(idx);
                let mut p = [0usize; 3];
                for a in 0..n {
                    p[a] = c[a] + 1;
                }
                half * (f[pidx(p)] as f64).sqrt()
            })
            .collect()
    }

    /// Empty voxels (padding included) sharing a face with an occupied one.
    /// Every boundary point of the domain lies on one of them.
    fn complement_boundary_voxels(&self) -> Vec<Aabb> {
        let n = self.n;
        let mut out = Vec::new();
        let mut lo = [0i64; 3];
        let mut hi = [1i64; 3];
        for a in 0..n {
            lo[a] = -1;
            hi[a] = self.dims[a] as i64 + 1;
        }
        let occupied = |c: [i64; 3]| -> bool {
            for a in 0..n {
                if c[a] < 0 || c[a] >= self.dims[a] as i64 {
                    return false;
                }
            }
            self.occ[self.index([c[0] as usize, c[1] as usize, c[2] as usize])]
        };
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                for x in lo[0]..hi[0] {
                    let c = [x, y, z];
                    if occupied(c) {
                        continue;
                    }
                    let touches = (0..n).any(|a| {
                        [-1i64, 1].iter().any(|&s| {
                            let mut d = c;
                            d[a] += s;
                            occupied(d)
                        })
                    });
                    if touches {
                        let mut k = [0i64; 3];
                        for a in 0..n {
                            k[a] = self.origin[a] + c[a];
                        }
                        out.push(DyadicCube::new(self.j, k).aabb(n));
                    }
                }
            }
        }
        out
    }

    pub fn to_file(&self, with_dist: bool) -> VoxelDomainFile {
        let mut rle = Vec::new();
        let mut cur = false;
        let mut run = 0u64;
        for &b in &self.occ {
            if b == cur {
                run += 1;
            } else {
                rle.push(run);
                cur = b;
                run = 1;
            }
        }
        rle.push(run);
        VoxelDomainFile {
            n: self.n,
            resolution: self.j,
            origin: self.origin,
            dims: self.dims,
            bbox: self.bbox(),
            center: self.center,
            occupancy_rle: rle,
            dist_field: with_dist.then(|| self.dist.clone()),
        }
    }

    pub fn from_file(f: &VoxelDomainFile) -> Result<Self> {
        let total: usize = f.dims.iter().product();
        let mut occ = Vec::with_capacity(total);
        let mut cur = false;
        for &run in &f.occupancy_rle {
            occ.extend(std::iter::repeat_n(cur, run as usize));
            cur = !cur;
        }
        if occ.len() != total {
            return Err(Error::Parse("occupancy runs do not cover the grid".into()));
        }
        let mut d = Self::from_occupancy(f.n, f.resolution, f.origin, f.dims, occ)?;
        d.center = f.center;
        Ok(d)
    }
}

/// On-disk form of a voxel domain. Occupancy is run-length encoded as
/// alternating run lengths, starting with a run of empty voxels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VoxelDomainFile {
    pub n: usize,
    #[serde(rename = "J")]
    pub resolution: i32,
    pub origin: [i64; 3],
    pub dims: [usize; 3],
    pub bbox: Aabb,
    pub center: Point,
    pub occupancy_rle: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dist_field: Option<Vec<f64>>,
}

fn koch_level_for(j: i32) -> u32 {
    // segment length 3^-level should sit well below the voxel side
    let mut level = 0;
    while level < 7 && 3f64.powi(-(level as i32)) > 0.25 * (-(j as f64)).exp2() {
        level += 1;
    }
    level
}

fn parse_pbm(bytes: &[u8]) -> Result<(usize, usize, Vec<bool>)> {
    let bad = |m: &str| Error::Parse(format!("pbm: {m}"));
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let w: usize = token()?.parse().map_err(|_| bad("width"))?;
    let h: usize = token()?.parse().map_err(|_| bad("height"))?;
    if w == 0 || h == 0 {
        return Err(bad("zero-sized image"));
    }
    let mut bits = Vec::with_capacity(w * h);
    match magic.as_str() {
        "P1" => {
            for &b in &bytes[pos..] {
                match b {
                    b'0' => bits.push(false),
                    b'1' => bits.push(true),
                    _ => {}
                }
                if bits.len() == w * h {
                    break;
                }
            }
        }
        "P4" => {
            let data = &bytes[(pos + 1).min(bytes.len())..];
            let row = w.div_ceil(8);
            if data.len() < row * h {
                return Err(bad("truncated raster"));
            }
            for r in 0..h {
                for c in 0..w {
                    bits.push(data[r * row + c / 8] & (0x80 >> (c % 8)) != 0);
                }
            }
        }
        _ => return Err(bad("unsupported magic number")),
    }
    if bits.len() != w * h {
        return Err(bad("truncated raster"));
    }
    Ok((w, h, bits))
}

impl DomainModel for VoxelDomain {
    fn dim(&self) -> usize {
        self.n
    }

    fn bbox(&self) -> Aabb {
        let mut lo = [0i64; 3];
        lo[..self.n].copy_from_slice(&self.origin[..self.n]);
        let mut b = DyadicCube::new(self.j, lo).aabb(self.n);
        let h = self.h();
        for a in 0..self.n {
            b.hi[a] = b.lo[a] + self.dims[a] as f64 * h;
        }
        b
    }

    fn contains(&self, p: &Point) -> bool {
        self.locate(p).is_some_and(|i| self.occ[i])
    }

    fn boundary_dist(&self, p: &Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        self.complement.nearest_point(p).sqrt()
    }

    fn box_dist2(&self, b: &Aabb) -> f64 {
        self.complement.nearest_box(b)
    }

    fn coverage(&self, c: &DyadicCube) -> Coverage {
        if c.j >= self.j {
            let v = c.ancestor(self.j, self.n);
            return match self.locate(&v.center(self.n)) {
                Some(i) if self.occ[i] => Coverage::Full,
                _ => Coverage::Empty,
            };
        }
        match self.cube_counts(c) {
            (0, _) => Coverage::Empty,
            (a, b) if a == b => Coverage::Full,
            _ => Coverage::Mixed,
        }
    }

    fn measure_in(&self, c: &DyadicCube) -> f64 {
        if c.j >= self.j {
            return match self.coverage(c) {
                Coverage::Full => c.volume(self.n),
                _ => 0.0,
            };
        }
        self.cube_counts(c).0 as f64 * self.h().powi(self.n as i32)
    }

    fn measure(&self) -> f64 {
        self.count as f64 * self.h().powi(self.n as i32)
    }

    fn center(&self) -> Point {
        self.center
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Distance from a voxel centre to the union of closed empty voxels,
    /// padding included, by direct enumeration.
    fn brute_dist(d: &VoxelDomain, idx: usize) -> f64 {
        let p = d.voxel_center(idx);
        let n = d.n();
        let dims = d.dims();
        let mut best = f64::INFINITY;
        let r = |a: usize| if a < n { -1..dims[a] as i64 + 1 } else { 0..1 };
        for z in r(2) {
            for y in r(1) {
                for x in r(0) {
                    let c = [x, y, z];
                    let inside = (0..n).all(|a| c[a] >= 0 && c[a] < dims[a] as i64)
                        && d.occupancy()[d.index([x as usize, y as usize, z as usize])];
                    if inside {
                        continue;
                    }
                    let mut k = [0i64; 3];
                    for a in 0..n {
                        k[a] = d.origin()[a] + c[a];
                    }
                    best = best.min(DyadicCube::new(d.resolution(), k).aabb(n).dist2_point(&p));
                }
            }
        }
        best.sqrt()
    }

    #[test]
    fn preset_sizes() {
        assert_eq!(VoxelDomain::preset(Preset::LShape, 2, 3).unwrap().voxel_count(), 48);
        assert_eq!(VoxelDomain::preset(Preset::UnitCube, 2, 2).unwrap().voxel_count(), 16);
        assert_eq!(VoxelDomain::preset(Preset::UnitCube, 3, 2).unwrap().voxel_count(), 64);
    }

    #[test]
    fn edt_matches_brute_force() {
        for d in [
            VoxelDomain::preset(Preset::LShape, 2, 4).unwrap(),
            VoxelDomain::preset(Preset::UnitCube, 3, 2).unwrap(),
            VoxelDomain::preset(Preset::Koch, 2, 4).unwrap(),
        ] {
            for idx in d.occupied() {
                let b = brute_dist(&d, idx);
                assert!((d.dist_field()[idx] - b).abs() < 1e-15, "{idx}: {} vs {b}", d.dist_field()[idx]);
                let t = d.boundary_dist(&d.voxel_center(idx));
                assert!((t - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn l_shape_reentrant_corner() {
        let d = VoxelDomain::preset(Preset::LShape, 2, 3).unwrap();
        let idx = d.locate(&[7.0 / 16.0, 7.0 / 16.0, 0.0]).unwrap();
        assert!((d.dist_field()[idx] - 2f64.sqrt() / 16.0).abs() < 1e-15);
    }

    #[test]
    fn koch_area() {
        let d = VoxelDomain::preset(Preset::Koch, 2, 8).unwrap();
        let exact = 2.0 * 3f64.sqrt() / 5.0;
        assert!((d.measure() - exact).abs() / exact < 0.01, "{}", d.measure());
    }

    #[test]
    fn disconnected_pbm_reports_witnesses() {
        let pbm = b"P1\n3 1\n1 0 1\n";
        match VoxelDomain::from_pbm(pbm, 2) {
            Err(Error::Disconnected { a, b }) => {
                assert_eq!(a, vec![0, 0]);
                assert_eq!(b, vec![2, 0]);
            }
            other => panic!("expected disconnection, got {other:?}"),
        }
    }

    #[test]
    fn pbm_p4_and_p1_agree() {
        let p1 = b"P1\n# comment\n4 2\n1 1 0 0\n1 1 1 1\n";
        let p4 = [b"P4\n4 2\n".as_slice(), &[0b1100_0000, 0b1111_0000]].concat();
        let a = VoxelDomain::from_pbm(p1, 2).unwrap();
        let b = VoxelDomain::from_pbm(&p4, 2).unwrap();
        assert_eq!(a.occupancy(), b.occupancy());
        assert!(a.contains(&[0.1, 0.3, 0.0]));
        assert!(!a.contains(&[0.8, 0.3, 0.0]));
    }

    #[test]
    fn coverage_and_measure() {
        let d = VoxelDomain::preset(Preset::LShape, 2, 3).unwrap();
        assert_eq!(d.coverage(&DyadicCube::new(1, [1, 1, 0])), Coverage::Empty);
        assert_eq!(d.coverage(&DyadicCube::new(1, [0, 0, 0])), Coverage::Full);
        assert_eq!(d.coverage(&DyadicCube::new(0, [0, 0, 0])), Coverage::Mixed);
        assert_eq!(d.measure_in(&DyadicCube::new(0, [0, 0, 0])), 0.75);
    }

    #[test]
    fn file_round_trip() {
        let d = VoxelDomain::preset(Preset::LShape, 2, 3).unwrap();
        let f = d.to_file(true);
        let s = serde_json::to_string(&f).unwrap();
        let g = VoxelDomain::from_file(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(d.occupancy(), g.occupancy());
        assert_eq!(d.dist_field(), g.dist_field());
    }
}
