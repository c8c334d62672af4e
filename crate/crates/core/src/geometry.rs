//! Angular partitions of the plane and of higher-dimensional space.
//!
//! The reduction step only ever subtracts two vectors that share a region,
//! so every partition here must keep same-region vectors within 60 degrees
//! of each other. In the plane that is the six half-open sectors
//! `[k·60°, (k+1)·60°)`. In `R^n` it is a Voronoi partition of the sphere
//! induced by a [`ConeCover`] whose covering radius is at most 30 degrees.

use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative slack allowed by [`difference_shrinks`] for rounding.
pub const SHRINK_TOLERANCE: f64 = 1e-12;

/// A point of `R^d` with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    components: Vec<f64>,
}

impl Vector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("vector must have at least one coordinate"));
        }
        if let Some(bad) = components.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain(format!("non-finite coordinate {bad}")));
        }
        Ok(Vector { components })
    }

    /// Planar vector. Panics on non-finite input; use [`Vector::new`] for
    /// untrusted data.
    pub fn xy(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite coordinate");
        Vector {
            components: vec![x, y],
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector {
            components: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_one(&self) -> f64 {
        self.components.iter().map(|c| c.abs()).sum()
    }

    pub fn norm_max(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0.0)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self += sign * other`
    pub fn add_scaled(&mut self, sign: f64, other: &Vector) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            *a += sign * b;
        }
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.sub(other).norm()
    }

    pub(crate) fn normalized(&self) -> Vector {
        let n = self.norm();
        Vector {
            components: self.components.iter().map(|c| c / n).collect(),
        }
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", fmt_real(*c))?;
        }
        Ok(())
    }
}

/// Decimal with 17 significant digits; round-trips every `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_pair(u: &Vector, v: &Vector) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Angle between two nonzero vectors, in `[0, π]`.
pub fn angle_between(u: &Vector, v: &Vector) -> Result<f64> {
    check_pair(u, v)?;
    if u.is_zero() || v.is_zero() {
        return Err(Error::domain("angle undefined for the zero vector"));
    }
    let cos = u.dot(v) / (u.norm() * v.norm());
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Whether `||u - v|| <= max(||u||, ||v||)` up to [`SHRINK_TOLERANCE`].
///
/// Holds whenever the angle between `u` and `v` is at most 60 degrees.
pub fn difference_shrinks(u: &Vector, v: &Vector) -> bool {
    if u.dim() != v.dim() {
        return false;
    }
    u.sub(v).norm() <= u.norm().max(v.norm()) * (1.0 + SHRINK_TOLERANCE)
}

/// Sector `0..6` of a nonzero planar vector; sector `k` is `[k·60°, (k+1)·60°)`.
///
/// Decided by sign tests against the boundary lines rather than by
/// `atan2`, so the axis directions 0° and 180° land exactly on sectors 0
/// and 3.
pub fn sector_index(v: &Vector) -> Result<usize> {
    if v.dim() != 2 {
        return Err(Error::domain(format!(
            "sector lookup needs a planar vector, got dim {}",
            v.dim()
        )));
    }
    if v.is_zero() {
        return Err(Error::domain("sector undefined for the zero vector"));
    }
    let (x, y) = (v.components()[0], v.components()[1]);
    let upper = y > 0.0 || (y == 0.0 && x > 0.0);
    Ok(if upper {
        upper_sector(x, y)
    } else {
        3 + upper_sector(-x, -y)
    })
}

/// Sector of a vector with angle in `[0°, 180°)`.
fn upper_sector(x: f64, y: f64) -> usize {
    let tan60 = 3f64.sqrt();
    if y < tan60 * x {
        0
    } else if y > -tan60 * x {
        1
    } else {
        2
    }
}

/// Something that assigns nonzero vectors to finitely many regions such
/// that same-region vectors subtend at most 60 degrees.
pub trait RegionMap: Sync {
    fn dim(&self) -> usize;

    /// Number of regions. The reduction stops once at most this many nodes
    /// remain, since one more forces a same-region pair.
    fn region_count(&self) -> usize;

    fn region_of(&self, v: &Vector) -> Result<usize>;
}

/// The six 60-degree sectors of the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SectorPartition2D;

impl SectorPartition2D {
    pub const SECTOR_COUNT: usize = 6;
    pub const SECTOR_WIDTH_DEGREES: f64 = 60.0;
}

impl RegionMap for SectorPartition2D {
    fn dim(&self) -> usize {
        2
    }

    fn region_count(&self) -> usize {
        Self::SECTOR_COUNT
    }

    fn region_of(&self, v: &Vector) -> Result<usize> {
        sector_index(v)
    }
}

/// Finite set of unit directions; a vector's region is its nearest center.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeCover {
    dim: usize,
    centers: Vec<Vector>,
    half_angle: f64,
    verified_radius: Option<f64>,
}

impl ConeCover {
    pub fn new(dim: usize, centers: Vec<Vector>, half_angle: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain("cone cover needs dim >= 2"));
        }
        if centers.is_empty() {
            return Err(Error::domain("cone cover needs at least one center"));
        }
        if !(half_angle > 0.0 && half_angle < PI) {
            return Err(Error::domain(format!("half angle {half_angle} out of range")));
        }
        for c in &centers {
            if c.dim() != dim {
                return Err(Error::domain(format!(
                    "center of dim {} in a dim-{dim} cover",
                    c.dim()
                )));
            }
            if (c.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("center {c} is not unit-norm")));
            }
        }
        Ok(ConeCover {
            dim,
            centers,
            half_angle,
            verified_radius: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centers(&self) -> &[Vector] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn verified_radius(&self) -> Option<f64> {
        self.verified_radius
    }

    /// Index of the nearest center by angle, lowest index on ties.
    pub fn region_index(&self, v: &Vector) -> Result<usize> {
        if v.dim() != self.dim {
            return Err(Error::domain(format!(
                "vector of dim {} against a dim-{} cover",
                v.dim(),
                self.dim
            )));
        }
        if v.is_zero() {
            return Err(Error::domain("region undefined for the zero vector"));
        }
        Ok(nearest_center(&self.centers, v).0)
    }

    /// Header line followed by one line of coordinates per center.
    pub fn to_text(&self) -> String {
        let verified = match self.verified_radius {
            Some(r) => fmt_real(r),
            None => "none".to_string(),
        };
        let mut out = format!(
            "dim={} half_angle={} verified={}\n",
            self.dim,
            fmt_real(self.half_angle),
            verified
        );
        for c in &self.centers {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::domain("empty cover file"))?;
        let mut dim = None;
        let mut half_angle = None;
        let mut verified = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("bad cover header field {field:?}")))?;
            let bad = || Error::domain(format!("bad cover header value {field:?}"));
            match key {
                "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad())?),
                "half_angle" => half_angle = Some(value.parse::<f64>().map_err(|_| bad())?),
                "verified" => {
                    verified = Some(if value == "none" {
                        None
                    } else {
                        Some(value.parse::<f64>().map_err(|_| bad())?)
                    })
                }
                _ => return Err(Error::domain(format!("unknown cover header key {key:?}"))),
            }
        }
        let (Some(dim), Some(half_angle), Some(verified)) = (dim, half_angle, verified) else {
            return Err(Error::domain(
                "cover header must set dim, half_angle and verified",
            ));
        };
        let mut centers = Vec::new();
        for (i, line) in lines {
            let coords = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::domain(format!("cover line {}: {e}", i + 1)))?;
            if coords.len() != dim {
                return Err(Error::domain(format!(
                    "cover line {}: expected {dim} coordinates, got {}",
                    i + 1,
                    coords.len()
                )));
            }
            centers.push(Vector::new(coords)?);
        }
        let mut cover = ConeCover::new(dim, centers, half_angle)?;
        if let Some(r) = verified {
            cover.set_verified_radius(r)?;
        }
        Ok(cover)
    }

    fn set_verified_radius(&mut self, radius: f64) -> Result<()> {
        if radius > self.half_angle {
            return Err(Error::domain(format!(
                "verified radius {radius} exceeds half angle {}",
                self.half_angle
            )));
        }
        self.verified_radius = Some(radius);
        Ok(())
    }
}

impl RegionMap for ConeCover {
    fn dim(&self) -> usize {
        self.dim
    }

    fn region_count(&self) -> usize {
        self.centers.len()
    }

    fn region_of(&self, v: &Vector) -> Result<usize> {
        self.region_index(v)
    }
}

/// (index, cosine) of the center with the largest cosine to `v`.
fn nearest_center(centers: &[Vector], v: &Vector) -> (usize, f64) {
    let n = v.norm();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let cos = c.dot(v) / n;
        if cos > best.1 {
            best = (i, cos);
        }
    }
    best
}

const SAMPLE_CHUNK: usize = 4096;

/// Uniform unit vectors on the sphere of `R^dim`. Chunk `c` draws from
/// stream `c` of a ChaCha generator, so the output does not depend on how
/// the chunks are scheduled.
pub fn sample_sphere(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = SAMPLE_CHUNK.min(count - chunk * SAMPLE_CHUNK);
            (0..len)
                .map(|_| loop {
                    let coords: Vec<f64> =
                        (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let v = Vector { components: coords };
                    let n = v.norm();
                    if n > 1e-12 {
                        break v.normalized();
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Centers at angles `(2j+1)·π/k` for the smallest `k` with `π/k <= half_angle`.
/// The lower half mirrors the upper half bit-for-bit so that boundary
/// directions tie exactly.
fn planar_bisector_centers(half_angle: f64) -> Vec<Vector> {
    let k = ((PI / half_angle) - 1e-9).ceil().max(2.0) as usize;
    let mut centers = vec![Vector::zeros(2); k];
    for j in 0..k {
        let mirror = k - 1 - j;
        if mirror < j {
            let c = centers[mirror].components().to_vec();
            centers[j] = Vector::xy(c[0], -c[1]);
        } else if mirror == j {
            centers[j] = Vector::xy(-1.0, 0.0);
        } else {
            let theta = (2 * j + 1) as f64 * PI / k as f64;
            centers[j] = Vector::xy(theta.cos(), theta.sin()).normalized();
        }
    }
    centers
}

/// Greedy farthest-point selection over `samples` until each lies within
/// `target` of a center.
fn greedy_centers(samples: &[Vector], target: f64) -> Vec<Vector> {
    let cos_target = target.cos();
    let mut centers = vec![samples[0].clone()];
    let mut best_cos: Vec<f64> = samples.par_iter().map(|s| s.dot(&samples[0])).collect();
    loop {
        let (far, far_cos) = best_cos
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &c)| if c < acc.1 { (i, c) } else { acc });
        if far_cos >= cos_target {
            return centers;
        }
        let center = samples[far].clone();
        best_cos
            .par_iter_mut()
            .zip(samples.par_iter())
            .for_each(|(b, s)| *b = b.max(s.dot(&center)));
        centers.push(center);
    }
}

const COVER_ATTEMPTS: usize = 8;

/// Surface area of `S^{d-1}` over the volume of the unit `(d-1)`-ball.
fn sphere_to_ball_ratio(dim: usize) -> f64 {
    // r(2) = π, r(3) = 4, r(d + 2) = r(d)·(d + 1)/d
    let mut r = if dim.is_multiple_of(2) { PI } else { 4.0 };
    let mut d = if dim.is_multiple_of(2) { 2 } else { 3 };
    while d < dim {
        r *= (d + 1) as f64 / d as f64;
        d += 2;
    }
    r
}

/// Angular radius within which `count` uniform sphere samples leave no
/// gap, with high probability: caps of this radius around the samples
/// cover the sphere about `1.5^(d-1)·ln(count)` times over.
pub fn sample_mesh_radius(dim: usize, count: usize) -> f64 {
    let n = count.max(2) as f64;
    1.5 * (sphere_to_ball_ratio(dim) * n.ln() / n).powf(1.0 / (dim - 1) as f64)
}

/// Builds a cone cover of `R^dim` with covering radius at most `half_angle`.
///
/// In the plane the result is exact: `k` bisector directions of equal
/// sectors. In higher dimensions, greedy farthest-point selection runs
/// over `sample_budget` seeded sphere samples until each sample lies within
/// `half_angle` minus the sample mesh radius of some center, so directions
/// between samples stay within `half_angle`. The result is then checked
/// against an equally large independent sample; on an overshoot the
/// target shrinks by the excess and the selection reruns. The build fails
/// when the budget is too small for the mesh to fit inside `half_angle`, or
/// when the retries run out. The returned cover is not marked verified;
/// see [`verify_cover`].
pub fn build_cone_cover(
    dim: usize,
    half_angle: f64,
    sample_budget: usize,
    seed: u64,
) -> Result<ConeCover> {
    if dim < 2 {
        return Err(Error::domain("cone cover needs dim >= 2"));
    }
    if !(half_angle > 0.0 && half_angle <= PI / 2.0) {
        return Err(Error::domain(format!(
            "half angle {half_angle} must lie in (0, π/2]"
        )));
    }
    if dim == 2 {
        return ConeCover::new(2, planar_bisector_centers(half_angle), half_angle);
    }
    let mesh = sample_mesh_radius(dim, sample_budget);
    if sample_budget == 0 || mesh >= half_angle {
        return Err(Error::CoverBudget {
            achieved: mesh.min(PI),
            requested: half_angle,
        });
    }

    let pool = sample_sphere(dim, sample_budget, seed);
    let probe = sample_sphere(dim, sample_budget, seed ^ 0x5eed_c0de_0000_0001);
    let mut target = half_angle - mesh;
    let mut achieved = PI;
    for _ in 0..COVER_ATTEMPTS {
        let centers = greedy_centers(&pool, target);
        let radius = covering_radius(&centers, &probe);
        if radius <= half_angle {
            return ConeCover::new(dim, centers, half_angle);
        }
        achieved = achieved.min(radius);
        target -= (radius - half_angle) + 1e-3 * half_angle;
        if target <= 0.0 {
            break;
        }
    }
    Err(Error::CoverBudget {
        achieved,
        requested: half_angle,
    })
}

fn covering_radius(centers: &[Vector], samples: &[Vector]) -> f64 {
    let min_cos = samples
        .par_iter()
        .map(|s| nearest_center(centers, s).1)
        .reduce(|| f64::INFINITY, f64::min);
    min_cos.clamp(-1.0, 1.0).acos()
}

/// Largest sampled angular distance to the nearest center. Records it as
/// the cover's verified radius when it does not exceed the half angle.
pub fn verify_cover(cover: &mut ConeCover, sample_count: usize, seed: u64) -> f64 {
    let samples = sample_sphere(cover.dim, sample_count.max(1), seed);
    let radius = covering_radius(&cover.centers, &samples);
    if radius <= cover.half_angle {
        cover.verified_radius = Some(radius);
    } else {
        cover.verified_radius = None;
    }
    radius
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn polar(d: f64) -> Vector {
        Vector::xy(deg(d).cos(), deg(d).sin())
    }

    #[test]
    fn angle_examples() {
        let e1 = Vector::xy(1.0, 0.0);
        assert!((angle_between(&e1, &Vector::xy(0.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(angle_between(&e1, &e1).unwrap(), 0.0);
        let a = angle_between(&e1, &polar(59.0)).unwrap();
        assert!((a - deg(59.0)).abs() < 1e-12);
    }

    #[test]
    fn angle_rejects_bad_input() {
        let e1 = Vector::xy(1.0, 0.0);
        assert!(angle_between(&e1, &Vector::zeros(2)).is_err());
        assert!(angle_between(&e1, &Vector::new(vec![1.0, 0.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![]).is_err());
    }

    #[test]
    fn sector_examples() {
        assert_eq!(sector_index(&Vector::xy(1.0, 0.0)).unwrap(), 0);
        assert_eq!(sector_index(&Vector::xy(0.0, 1.0)).unwrap(), 1);
        assert_eq!(sector_index(&Vector::xy(-1.0, -1.0)).unwrap(), 3);
        assert_eq!(sector_index(&Vector::xy(-1.0, 0.0)).unwrap(), 3);
        assert_eq!(sector_index(&Vector::xy(1.0, -1e-300)).unwrap(), 5);
        assert!(sector_index(&Vector::zeros(2)).is_err());
    }

    #[test]
    fn shrink_examples() {
        // 2 - 2cos 59° = 0.96995..., sqrt = 0.98485
        let u = Vector::xy(1.0, 0.0);
        let v = polar(59.0);
        assert!((u.sub(&v).norm() - (2.0 - 2.0 * deg(59.0).cos()).sqrt()).abs() < 1e-15);
        assert!(difference_shrinks(&u, &v));
        let u = Vector::xy(0.8, 0.1);
        let v = Vector::xy(0.7, 0.2);
        assert!((u.sub(&v).norm() - 0.02f64.sqrt()).abs() < 1e-15);
        assert!(difference_shrinks(&u, &v));
        assert!(!difference_shrinks(&Vector::xy(1.0, 0.0), &Vector::xy(-1.0, 0.0)));
    }

    #[test]
    fn planar_cover_is_six_bisectors() {
        let cover = build_cone_cover(2, PI / 6.0, 0, 0).unwrap();
        assert_eq!(cover.len(), 6);
        for (j, c) in cover.centers().iter().enumerate() {
            let expected = polar(30.0 + 60.0 * j as f64);
            assert!(c.distance(&expected) < 1e-15, "center {j}: {c}");
        }
        #[allow(clippy::approx_constant)]
        let cover = build_cone_cover(2, 0.5236, 0, 0).unwrap();
        assert_eq!(cover.len(), 6);
        assert_eq!(build_cone_cover(2, PI / 2.0, 0, 0).unwrap().len(), 2);
    }

    #[test]
    fn planar_region_ties_go_low() {
        let cover = build_cone_cover(2, PI / 6.0, 0, 0).unwrap();
        assert_eq!(cover.region_index(&Vector::xy(1.0, 0.0)).unwrap(), 0);
        assert_eq!(cover.region_index(&Vector::xy(0.0, 1.0)).unwrap(), 1);
        assert!(cover.region_index(&Vector::zeros(2)).is_err());
    }

    #[test]
    fn cover_rejects_bad_half_angle() {
        assert!(build_cone_cover(3, 0.0, 100, 0).is_err());
        assert!(build_cone_cover(3, PI / 2.0 + 1e-9, 100, 0).is_err());
        assert!(build_cone_cover(1, 0.5, 100, 0).is_err());
    }

    #[test]
    fn verify_planar_covers() {
        let mut cover = build_cone_cover(2, PI / 6.0, 0, 0).unwrap();
        let r = verify_cover(&mut cover, 100_000, 7);
        assert!(r <= PI / 6.0 + 1e-9);
        assert_eq!(cover.verified_radius(), Some(r));

        let mut single = ConeCover::new(2, vec![Vector::xy(1.0, 0.0)], PI / 6.0).unwrap();
        let r = verify_cover(&mut single, 100_000, 7);
        assert!(r > deg(179.0));
        assert_eq!(single.verified_radius(), None);
    }

    #[test]
    fn three_dim_cover_certifies_and_is_deterministic() {
        let a = build_cone_cover(3, PI / 6.0, 20_000, 3).unwrap();
        let b = build_cone_cover(3, PI / 6.0, 20_000, 3).unwrap();
        assert_eq!(a, b);
        let mut a = a;
        let r = verify_cover(&mut a, 100_000, 99);
        assert!(r <= PI / 6.0, "radius {r}");
        for (i, c) in a.centers().iter().enumerate() {
            assert_eq!(a.region_index(c).unwrap(), i);
        }
    }

    #[test]
    fn mesh_ratio_matches_closed_forms() {
        assert!((sphere_to_ball_ratio(2) - PI).abs() < 1e-15);
        assert_eq!(sphere_to_ball_ratio(3), 4.0);
        // S^3 area 2π², unit 3-ball volume 4π/3
        assert!((sphere_to_ball_ratio(4) - 1.5 * PI).abs() < 1e-12);
        // S^4 area 8π²/3, unit 4-ball volume π²/2
        assert!((sphere_to_ball_ratio(5) - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_budget_fails_with_radius() {
        match build_cone_cover(3, PI / 6.0, 50, 0) {
            Err(Error::CoverBudget { achieved, requested }) => {
                assert!(achieved >= requested);
            }
            other => panic!("expected budget failure, got {other:?}"),
        }
    }

    #[test]
    fn sphere_sampling_is_chunk_stable() {
        let long = sample_sphere(3, 10_000, 5);
        let short = sample_sphere(3, 5_000, 5);
        assert_eq!(&long[..5_000], &short[..]);
        assert!(long.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cover_text_round_trip() {
        let mut cover = build_cone_cover(3, PI / 6.0, 5_000, 1).unwrap();
        verify_cover(&mut cover, 20_000, 2);
        let text = cover.to_text();
        assert!(text.starts_with("dim=3 half_angle="));
        let back = ConeCover::from_text(&text).unwrap();
        assert_eq!(back, cover);

        let unverified = build_cone_cover(2, PI / 6.0, 0, 0).unwrap();
        assert!(unverified.to_text().lines().next().unwrap().ends_with("verified=none"));
        assert_eq!(ConeCover::from_text(&unverified.to_text()).unwrap(), unverified);
    }

    #[test]
    fn cover_text_rejects_garbage() {
        assert!(ConeCover::from_text("").is_err());
        assert!(ConeCover::from_text("dim=2 half_angle=0.5\n1 0\n").is_err());
        assert!(ConeCover::from_text("dim=2 half_angle=0.5 verified=none\n1 0 0\n").is_err());
        assert!(ConeCover::from_text("dim=2 half_angle=0.5 verified=none\n2 0\n").is_err());
    }
}
