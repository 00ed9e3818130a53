//! Sampled geometry: shape descriptors, deterministic point clouds, and
//! metric helpers.
//!
//! Shapes are sampled by center-anchored lattices (interiors) plus explicit
//! boundary rings, so reruns are bit-identical and nested shapes share
//! lattice points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two points closer than this are considered duplicates.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("invalid mesh {0}: must be positive and finite")]
    BadMesh(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sample set '{0}' is empty")]
    EmptySet(String),
    #[error("duplicate points (within {tol}) in set '{label}'")]
    DuplicatePoints { label: String, tol: f64 },
    #[error("invalid scene: {0}")]
    BadScene(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// A point of R^2 or R^3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    xs: [f64; 3],
    dim: u8,
}

impl Point {
    pub fn d2(x: f64, y: f64) -> Self {
        Point { xs: [x, y, 0.0], dim: 2 }
    }

    pub fn d3(x: f64, y: f64, z: f64) -> Self {
        Point { xs: [x, y, z], dim: 3 }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self, GeometryError> {
        match coords {
            [x, y] => Ok(Point::d2(*x, *y)),
            [x, y, z] => Ok(Point::d3(*x, *y, *z)),
            _ => Err(GeometryError::DimensionMismatch(format!(
                "point must have 2 or 3 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.xs[..self.dim as usize]
    }

    pub fn x(&self) -> f64 {
        self.xs[0]
    }

    pub fn y(&self) -> f64 {
        self.xs[1]
    }

    pub fn z(&self) -> f64 {
        self.xs[2]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim as usize {
            let d = self.xs[i] - other.xs[i];
            s += d * d;
        }
        s.sqrt()
    }

    pub fn translate(&self, v: &[f64]) -> Point {
        let mut p = *self;
        for i in 0..self.dim as usize {
            p.xs[i] += v[i];
        }
        p
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&coords).map_err(serde::de::Error::custom)
    }
}

/// Constructible shapes. `disk`/`circle` with a 3-coordinate center denote
/// the solid ball and the sphere; `dilation` records δ-neighborhood
/// provenance and is produced internally by [`delta_neighborhood`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ShapeDescriptor {
    Disk { center: Vec<f64>, radius: f64 },
    Circle { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    Rectangle { min: Vec<f64>, max: Vec<f64> },
    FinitePoints { points: Vec<Vec<f64>> },
    UnionOf { parts: Vec<ShapeDescriptor> },
    Dilation { of: Box<ShapeDescriptor>, by: f64 },
}

impl ShapeDescriptor {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::DegenerateShape(msg));
        match self {
            ShapeDescriptor::Disk { center, radius }
            | ShapeDescriptor::Circle { center, radius } => {
                Point::from_slice(center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("radius {radius} must be positive"));
                }
                Ok(())
            }
            ShapeDescriptor::Annulus { center, inner, outer } => {
                let c = Point::from_slice(center)?;
                if c.dim() != 2 {
                    return bad("annulus is 2D only".into());
                }
                if !(inner.is_finite() && outer.is_finite() && *inner > 0.0 && inner < outer) {
                    return bad(format!("annulus radii inner={inner} outer={outer}"));
                }
                Ok(())
            }
            ShapeDescriptor::Segment { a, b } => {
                let pa = Point::from_slice(a)?;
                let pb = Point::from_slice(b)?;
                if pa.dim() != pb.dim() {
                    return Err(GeometryError::DimensionMismatch(
                        "segment endpoints".into(),
                    ));
                }
                if pa.dist(&pb) <= DEDUP_TOL {
                    return bad("segment endpoints coincide".into());
                }
                Ok(())
            }
            ShapeDescriptor::Rectangle { min, max } => {
                let lo = Point::from_slice(min)?;
                let hi = Point::from_slice(max)?;
                if lo.dim() != 2 || hi.dim() != 2 {
                    return bad("rectangle is 2D only".into());
                }
                if !(lo.x() < hi.x() && lo.y() < hi.y()) {
                    return bad("rectangle min must be strictly below max".into());
                }
                Ok(())
            }
            ShapeDescriptor::FinitePoints { points } => {
                if points.is_empty() {
                    return bad("finite_points needs at least one point".into());
                }
                let d0 = Point::from_slice(&points[0])?.dim();
                for p in points {
                    if Point::from_slice(p)?.dim() != d0 {
                        return Err(GeometryError::DimensionMismatch(
                            "finite_points".into(),
                        ));
                    }
                }
                Ok(())
            }
            ShapeDescriptor::UnionOf { parts } => {
                if parts.is_empty() {
                    return bad("union_of needs at least one part".into());
                }
                let d0 = parts[0].dim()?;
                for p in parts {
                    p.validate()?;
                    if p.dim()? != d0 {
                        return Err(GeometryError::DimensionMismatch("union_of".into()));
                    }
                }
                Ok(())
            }
            ShapeDescriptor::Dilation { of, by } => {
                of.validate()?;
                if !(by.is_finite() && *by > 0.0) {
                    return bad(format!("dilation radius {by}"));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> Result<usize, GeometryError> {
        match self {
            ShapeDescriptor::Disk { center, .. } | ShapeDescriptor::Circle { center, .. } => {
                Ok(Point::from_slice(center)?.dim())
            }
            ShapeDescriptor::Annulus { .. } | ShapeDescriptor::Rectangle { .. } => Ok(2),
            ShapeDescriptor::Segment { a, .. } => Ok(Point::from_slice(a)?.dim()),
            ShapeDescriptor::FinitePoints { points } => Ok(Point::from_slice(&points[0])?.dim()),
            ShapeDescriptor::UnionOf { parts } => parts[0].dim(),
            ShapeDescriptor::Dilation { of, .. } => of.dim(),
        }
    }

    /// Signed margin to the shape: positive inside a solid region (distance
    /// to its boundary), negative outside (minus the gap), zero on curves.
    pub fn signed_margin(&self, p: &Point) -> f64 {
        match self {
            ShapeDescriptor::Disk { center, radius } => {
                let c = Point::from_slice(center).expect("validated");
                radius - c.dist(p)
            }
            ShapeDescriptor::Circle { center, radius } => {
                let c = Point::from_slice(center).expect("validated");
                -((c.dist(p) - radius).abs())
            }
            ShapeDescriptor::Annulus { center, inner, outer } => {
                let c = Point::from_slice(center).expect("validated");
                let r = c.dist(p);
                (r - inner).min(outer - r)
            }
            ShapeDescriptor::Segment { a, b } => {
                let pa = Point::from_slice(a).expect("validated");
                let pb = Point::from_slice(b).expect("validated");
                -segment_distance(p, &pa, &pb)
            }
            ShapeDescriptor::Rectangle { min, max } => {
                let dx = (p.x() - min[0]).min(max[0] - p.x());
                let dy = (p.y() - min[1]).min(max[1] - p.y());
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    // Outside: Euclidean gap to the box.
                    let gx = (min[0] - p.x()).max(p.x() - max[0]).max(0.0);
                    let gy = (min[1] - p.y()).max(p.y() - max[1]).max(0.0);
                    -(gx * gx + gy * gy).sqrt()
                }
            }
            ShapeDescriptor::FinitePoints { points } => {
                let mut best = f64::INFINITY;
                for q in points {
                    let q = Point::from_slice(q).expect("validated");
                    best = best.min(q.dist(p));
                }
                -best
            }
            ShapeDescriptor::UnionOf { parts } => parts
                .iter()
                .map(|s| s.signed_margin(p))
                .fold(f64::NEG_INFINITY, f64::max),
            ShapeDescriptor::Dilation { of, by } => of.signed_margin(p) + by,
        }
    }

    /// Membership with tolerance: true when the point is inside the region
    /// or within `tol` of it.
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.signed_margin(p) >= -tol
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ShapeDescriptor::Disk { center, radius } | ShapeDescriptor::Circle { center, radius } => {
                let lo = center.iter().map(|c| c - radius).collect();
                let hi = center.iter().map(|c| c + radius).collect();
                (lo, hi)
            }
            ShapeDescriptor::Annulus { center, outer, .. } => {
                let lo = center.iter().map(|c| c - outer).collect();
                let hi = center.iter().map(|c| c + outer).collect();
                (lo, hi)
            }
            ShapeDescriptor::Segment { a, b } => {
                let lo = a.iter().zip(b).map(|(x, y)| x.min(*y)).collect();
                let hi = a.iter().zip(b).map(|(x, y)| x.max(*y)).collect();
                (lo, hi)
            }
            ShapeDescriptor::Rectangle { min, max } => (min.clone(), max.clone()),
            ShapeDescriptor::FinitePoints { points } => {
                let d = points[0].len();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in points {
                    for i in 0..d {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                (lo, hi)
            }
            ShapeDescriptor::UnionOf { parts } => {
                let (mut lo, mut hi) = parts[0].bounding_box();
                for p in &parts[1..] {
                    let (l, h) = p.bounding_box();
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(l[i]);
                        hi[i] = hi[i].max(h[i]);
                    }
                }
                (lo, hi)
            }
            ShapeDescriptor::Dilation { of, by } => {
                let (lo, hi) = of.bounding_box();
                (
                    lo.into_iter().map(|c| c - by).collect(),
                    hi.into_iter().map(|c| c + by).collect(),
                )
            }
        }
    }
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let dim = a.dim();
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..dim {
        let ab = b.coords()[i] - a.coords()[i];
        ab2 += ab * ab;
        ap_ab += (p.coords()[i] - a.coords()[i]) * ab;
    }
    let t = (ap_ab / ab2).clamp(0.0, 1.0);
    let mut d2 = 0.0;
    for i in 0..dim {
        let proj = a.coords()[i] + t * (b.coords()[i] - a.coords()[i]);
        let d = p.coords()[i] - proj;
        d2 += d * d;
    }
    d2.sqrt()
}

/// Finite point-cloud stand-in for a compact set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledSet {
    pub label: String,
    pub points: Vec<Point>,
    pub source: ShapeDescriptor,
    pub mesh: f64,
}

impl SampledSet {
    pub fn new(
        label: impl Into<String>,
        points: Vec<Point>,
        source: ShapeDescriptor,
        mesh: f64,
    ) -> Result<Self, GeometryError> {
        let label = label.into();
        if points.is_empty() {
            return Err(GeometryError::EmptySet(label));
        }
        let dim = points[0].dim();
        for p in &points {
            if p.dim() != dim {
                return Err(GeometryError::DimensionMismatch(label));
            }
            if !p.is_finite() {
                return Err(GeometryError::BadParameter(format!(
                    "non-finite point in '{label}'"
                )));
            }
        }
        if has_duplicates(&points, DEDUP_TOL) {
            return Err(GeometryError::DuplicatePoints { label, tol: DEDUP_TOL });
        }
        Ok(SampledSet { label, points, source, mesh })
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset of this set's points kept by `pred`, as a new set.
    pub fn filter(
        &self,
        label: impl Into<String>,
        source: ShapeDescriptor,
        pred: impl Fn(&Point) -> bool,
    ) -> Result<SampledSet, GeometryError> {
        let pts: Vec<Point> = self.points.iter().copied().filter(|p| pred(p)).collect();
        SampledSet::new(label, pts, source, self.mesh)
    }

    /// CSV export, one point per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.dim() {
            2 => out.push_str("x,y\n"),
            _ => out.push_str("x,y,z\n"),
        }
        for p in &self.points {
            let coords: Vec<String> = p.coords().iter().map(|c| format!("{c}")).collect();
            out.push_str(&coords.join(","));
            out.push('\n');
        }
        out
    }
}

/// Minimum Euclidean distance from `x` to the points of `s`.
pub fn set_distance(x: &Point, s: &SampledSet) -> f64 {
    debug_assert_eq!(x.dim(), s.dim());
    s.points
        .iter()
        .map(|p| p.dist(x))
        .fold(f64::INFINITY, f64::min)
}

fn has_duplicates(points: &[Point], tol: f64) -> bool {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .coords()
            .partial_cmp(points[b].coords())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in 0..idx.len() {
        for v in (w + 1)..idx.len() {
            if points[idx[v]].x() - points[idx[w]].x() > tol {
                break;
            }
            if points[idx[w]].dist(&points[idx[v]]) <= tol {
                return true;
            }
        }
    }
    false
}

/// Removes points within `tol` of an earlier point, keeping first occurrences.
fn dedup_points(points: Vec<Point>, tol: f64) -> Vec<Point> {
    let mut keep = vec![true; points.len()];
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .coords()
            .partial_cmp(points[b].coords())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in 0..idx.len() {
        if !keep[idx[w]] {
            continue;
        }
        for v in (w + 1)..idx.len() {
            if points[idx[v]].x() - points[idx[w]].x() > tol {
                break;
            }
            if keep[idx[v]] && points[idx[w]].dist(&points[idx[v]]) <= tol {
                // Keep whichever came first in the original order.
                if idx[w] < idx[v] {
                    keep[idx[v]] = false;
                } else {
                    keep[idx[w]] = false;
                    break;
                }
            }
        }
    }
    points
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| if keep[i] { Some(p) } else { None })
        .collect()
}

/// Deterministic quasi-uniform samples of a shape: boundary rings plus a
/// center-anchored lattice for interiors, spacing at most `mesh`.
pub fn sample_shape(shape: &ShapeDescriptor, mesh: f64) -> Result<SampledSet, GeometryError> {
    shape.validate()?;
    if !(mesh.is_finite() && mesh > 0.0) {
        return Err(GeometryError::BadMesh(mesh));
    }
    let pts = sample_points(shape, mesh)?;
    let pts = dedup_points(pts, DEDUP_TOL);
    SampledSet::new(shape_label(shape), pts, shape.clone(), mesh)
}

fn shape_label(shape: &ShapeDescriptor) -> String {
    match shape {
        ShapeDescriptor::Disk { center, .. } if center.len() == 3 => "ball".into(),
        ShapeDescriptor::Disk { .. } => "disk".into(),
        ShapeDescriptor::Circle { center, .. } if center.len() == 3 => "sphere".into(),
        ShapeDescriptor::Circle { .. } => "circle".into(),
        ShapeDescriptor::Annulus { .. } => "annulus".into(),
        ShapeDescriptor::Segment { .. } => "segment".into(),
        ShapeDescriptor::Rectangle { .. } => "rectangle".into(),
        ShapeDescriptor::FinitePoints { .. } => "finite_points".into(),
        ShapeDescriptor::UnionOf { .. } => "union".into(),
        ShapeDescriptor::Dilation { .. } => "dilation".into(),
    }
}

fn sample_points(shape: &ShapeDescriptor, mesh: f64) -> Result<Vec<Point>, GeometryError> {
    match shape {
        ShapeDescriptor::Circle { center, radius } => {
            let c = Point::from_slice(center)?;
            Ok(match c.dim() {
                2 => circle_ring(&c, *radius, mesh),
                _ => sphere_shell(&c, *radius, mesh),
            })
        }
        ShapeDescriptor::Disk { center, radius } => {
            let c = Point::from_slice(center)?;
            let mut pts = match c.dim() {
                2 => circle_ring(&c, *radius, mesh),
                _ => sphere_shell(&c, *radius, mesh),
            };
            // Interior lattice, inset half a mesh from the boundary ring.
            let inset = radius - mesh / 2.0;
            pts.extend(lattice(&c, c.dim(), *radius, mesh, |p| c.dist(p) <= inset));
            Ok(pts)
        }
        ShapeDescriptor::Annulus { center, inner, outer } => {
            let c = Point::from_slice(center)?;
            let mut pts = circle_ring(&c, *inner, mesh);
            pts.extend(circle_ring(&c, *outer, mesh));
            pts.extend(lattice(&c, 2, *outer, mesh, |p| {
                let r = c.dist(p);
                r >= inner + mesh / 2.0 && r <= outer - mesh / 2.0
            }));
            Ok(pts)
        }
        ShapeDescriptor::Segment { a, b } => {
            let pa = Point::from_slice(a)?;
            let pb = Point::from_slice(b)?;
            let n = (pa.dist(&pb) / mesh).ceil().max(1.0) as usize;
            let mut pts = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let t = k as f64 / n as f64;
                let coords: Vec<f64> = pa
                    .coords()
                    .iter()
                    .zip(pb.coords())
                    .map(|(x, y)| x + t * (y - x))
                    .collect();
                pts.push(Point::from_slice(&coords)?);
            }
            Ok(pts)
        }
        ShapeDescriptor::Rectangle { min, max } => {
            let c = Point::d2((min[0] + max[0]) / 2.0, (min[1] + max[1]) / 2.0);
            let corners = [
                Point::d2(min[0], min[1]),
                Point::d2(max[0], min[1]),
                Point::d2(max[0], max[1]),
                Point::d2(min[0], max[1]),
            ];
            let mut pts = Vec::new();
            for i in 0..4 {
                let a = corners[i];
                let b = corners[(i + 1) % 4];
                let n = (a.dist(&b) / mesh).ceil().max(1.0) as usize;
                for k in 0..n {
                    let t = k as f64 / n as f64;
                    pts.push(Point::d2(
                        a.x() + t * (b.x() - a.x()),
                        a.y() + t * (b.y() - a.y()),
                    ));
                }
            }
            let half = ((max[0] - min[0]).max(max[1] - min[1])) / 2.0;
            pts.extend(lattice(&c, 2, half, mesh, |p| {
                p.x() >= min[0] + mesh / 2.0
                    && p.x() <= max[0] - mesh / 2.0
                    && p.y() >= min[1] + mesh / 2.0
                    && p.y() <= max[1] - mesh / 2.0
            }));
            Ok(pts)
        }
        ShapeDescriptor::FinitePoints { points } => {
            points.iter().map(|p| Point::from_slice(p)).collect()
        }
        ShapeDescriptor::UnionOf { parts } => {
            let mut pts = Vec::new();
            for part in parts {
                pts.extend(sample_points(part, mesh)?);
            }
            Ok(pts)
        }
        ShapeDescriptor::Dilation { of, by } => {
            // Sample the base, then grow it through the generic lattice path.
            let base = sample_points(of, mesh)?;
            let base_set = SampledSet::new("base", dedup_points(base, DEDUP_TOL), (**of).clone(), mesh)?;
            let grown = delta_neighborhood(&base_set, *by, mesh)?;
            Ok(grown.points)
        }
    }
}

fn circle_ring(c: &Point, radius: f64, mesh: f64) -> Vec<Point> {
    let n = ((2.0 * std::f64::consts::PI * radius / mesh).ceil() as usize).max(8);
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point::d2(c.x() + radius * t.cos(), c.y() + radius * t.sin())
        })
        .collect()
}

fn sphere_shell(c: &Point, radius: f64, mesh: f64) -> Vec<Point> {
    let n_lat = ((std::f64::consts::PI * radius / mesh).ceil() as usize).max(4);
    let mut pts = Vec::new();
    for i in 0..=n_lat {
        let theta = std::f64::consts::PI * i as f64 / n_lat as f64;
        let ring_r = radius * theta.sin();
        let z = radius * theta.cos();
        let n_lon = ((2.0 * std::f64::consts::PI * ring_r / mesh).ceil() as usize).max(1);
        for j in 0..n_lon {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_lon as f64;
            pts.push(Point::d3(
                c.x() + ring_r * phi.cos(),
                c.y() + ring_r * phi.sin(),
                c.z() + z,
            ));
        }
    }
    pts
}

/// Lattice of pitch `mesh` anchored at `c`, restricted to `|p - c| <= half`
/// componentwise and filtered by `keep`.
fn lattice(
    c: &Point,
    dim: usize,
    half: f64,
    mesh: f64,
    keep: impl Fn(&Point) -> bool,
) -> Vec<Point> {
    let n = (half / mesh).floor() as i64;
    let mut pts = Vec::new();
    let range = -n..=n;
    if dim == 2 {
        for i in range.clone() {
            for j in range.clone() {
                let p = Point::d2(c.x() + i as f64 * mesh, c.y() + j as f64 * mesh);
                if keep(&p) {
                    pts.push(p);
                }
            }
        }
    } else {
        for i in range.clone() {
            for j in range.clone() {
                for k in range.clone() {
                    let p = Point::d3(
                        c.x() + i as f64 * mesh,
                        c.y() + j as f64 * mesh,
                        c.z() + k as f64 * mesh,
                    );
                    if keep(&p) {
                        pts.push(p);
                    }
                }
            }
        }
    }
    pts
}

/// Samples the open δ-neighborhood `{x : dist(x, K) < delta}`. Every point
/// of `k` is included; lattice points are anchored at the bounding-box
/// center of `k`.
pub fn delta_neighborhood(
    k: &SampledSet,
    delta: f64,
    mesh: f64,
) -> Result<SampledSet, GeometryError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(GeometryError::BadParameter(format!(
            "delta {delta} must be positive"
        )));
    }
    if !(mesh.is_finite() && mesh > 0.0) {
        return Err(GeometryError::BadMesh(mesh));
    }
    let dim = k.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in &k.points {
        for i in 0..dim {
            lo[i] = lo[i].min(p.coords()[i]);
            hi[i] = hi[i].max(p.coords()[i]);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (a + b) / 2.0).collect();
    let c = Point::from_slice(&center)?;
    let half = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) / 2.0)
        .fold(0.0f64, f64::max)
        + delta;
    let mut pts = lattice(&c, dim, half, mesh, |p| set_distance(p, k) < delta);
    pts.extend(k.points.iter().copied());
    let pts = dedup_points(pts, DEDUP_TOL);
    let source = ShapeDescriptor::Dilation { of: Box::new(k.source.clone()), by: delta };
    SampledSet::new(format!("{}_delta_nbhd", k.label), pts, source, mesh)
}

/// Axis-aligned nx-by-ny grid over the shape's bounding box (inset half a
/// cell), keeping points inside the shape's region. 2D only.
pub fn grid_in_shape(
    shape: &ShapeDescriptor,
    nx: usize,
    ny: usize,
) -> Result<Vec<Point>, GeometryError> {
    if shape.dim()? != 2 {
        return Err(GeometryError::DimensionMismatch("grid_in_shape is 2D".into()));
    }
    if nx < 2 || ny < 2 {
        return Err(GeometryError::BadParameter("grid needs nx, ny >= 2".into()));
    }
    let (lo, hi) = shape.bounding_box();
    let dx = (hi[0] - lo[0]) / nx as f64;
    let dy = (hi[1] - lo[1]) / ny as f64;
    let mut pts = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let p = Point::d2(
                lo[0] + (i as f64 + 0.5) * dx,
                lo[1] + (j as f64 + 0.5) * dy,
            );
            if shape.contains(&p, 1e-9) {
                pts.push(p);
            }
        }
    }
    Ok(pts)
}

/// A uniqueness scene: compact K with zero set E inside domain D, with a
/// guaranteed margin `delta` between K and the complement of D.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scene {
    pub k: SampledSet,
    pub e: SampledSet,
    pub d: SampledSet,
    pub delta: f64,
}

impl Scene {
    pub fn new(k: SampledSet, e: SampledSet, d: SampledSet, delta: f64) -> Result<Self, GeometryError> {
        if e.is_empty() {
            return Err(GeometryError::BadScene("E is empty".into()));
        }
        for p in &e.points {
            if set_distance(p, &k) > DEDUP_TOL {
                return Err(GeometryError::BadScene(
                    "E must be a subset of K's samples".into(),
                ));
            }
        }
        // Compact containment as a numeric margin check, tolerance mesh/2.
        let tol = k.mesh / 2.0;
        for p in &k.points {
            if d.source.signed_margin(p) < delta - tol {
                return Err(GeometryError::BadScene(format!(
                    "margin from K to the complement of D is below delta={delta} at ({:?})",
                    p.coords()
                )));
            }
        }
        Ok(Scene { k, e, d, delta })
    }

    /// Builds a scene whose domain is the δ-neighborhood of K and whose E is
    /// the subset of K's samples lying in `e_shape`.
    pub fn with_neighborhood(
        k: SampledSet,
        e_shape: &ShapeDescriptor,
        delta: f64,
        d_mesh: f64,
    ) -> Result<Self, GeometryError> {
        e_shape.validate()?;
        let e = k.filter("E", e_shape.clone(), |p| e_shape.contains(p, 1e-9))?;
        let d = delta_neighborhood(&k, delta, d_mesh)?;
        Scene::new(k, e, d, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circle(mesh: f64) -> SampledSet {
        sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 1.0 },
            mesh,
        )
        .unwrap()
    }

    #[test]
    fn circle_sampling_count_and_radius() {
        let s = unit_circle(0.1);
        assert!(s.len() >= 62, "got {}", s.len());
        for p in &s.points {
            assert!((p.dist(&Point::d2(0.0, 0.0)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_points_identity() {
        let s = sample_shape(
            &ShapeDescriptor::FinitePoints { points: vec![vec![0.0, 0.0]] },
            0.5,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.points[0], Point::d2(0.0, 0.0));
    }

    #[test]
    fn disk_count_matches_grid_fill_oracle() {
        let mesh = 0.05;
        let s = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 1.0 },
            mesh,
        )
        .unwrap();
        // Brute-force grid fill: lattice points of pitch `mesh` inside the disk.
        let n = (1.0 / mesh).ceil() as i64 + 1;
        let mut oracle = 0usize;
        for i in -n..=n {
            for j in -n..=n {
                let (x, y) = (i as f64 * mesh, j as f64 * mesh);
                if (x * x + y * y).sqrt() <= 1.0 {
                    oracle += 1;
                }
            }
        }
        let ratio = s.len() as f64 / oracle as f64;
        assert!((ratio - 1.0).abs() < 0.10, "count {} vs oracle {}", s.len(), oracle);
    }

    #[test]
    fn disk_covers_with_mesh_spacing() {
        let mesh = 0.1;
        let s = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 1.0 },
            mesh,
        )
        .unwrap();
        // Probe points in the disk are all within `mesh` of a sample.
        for i in 0..20 {
            for j in 0..20 {
                let p = Point::d2(-0.95 + 0.1 * i as f64, -0.95 + 0.1 * j as f64);
                if p.dist(&Point::d2(0.0, 0.0)) <= 1.0 {
                    assert!(set_distance(&p, &s) <= mesh, "gap at {:?}", p.coords());
                }
            }
        }
    }

    #[test]
    fn neighborhood_of_point_is_ball() {
        let k = sample_shape(
            &ShapeDescriptor::FinitePoints { points: vec![vec![0.5, -0.25]] },
            0.1,
        )
        .unwrap();
        let u = delta_neighborhood(&k, 1.0, 0.1).unwrap();
        let c = Point::d2(0.5, -0.25);
        assert!(u.len() > 200);
        for p in &u.points {
            assert!(p.dist(&c) < 1.0);
        }
    }

    #[test]
    fn neighborhood_of_circle_stays_in_annulus() {
        let k = unit_circle(0.1);
        let u = delta_neighborhood(&k, 0.2, 0.05).unwrap();
        let c = Point::d2(0.0, 0.0);
        for p in &u.points {
            let r = p.dist(&c);
            assert!(r > 0.8 - 1e-12 && r < 1.2 + 1e-12, "radius {r}");
        }
    }

    #[test]
    fn neighborhood_count_matches_membership_scan() {
        let k = unit_circle(0.1);
        let delta = 0.2;
        let mesh = 0.05;
        let u = delta_neighborhood(&k, delta, mesh).unwrap();
        // Independent membership scan over the same lattice region.
        let mut oracle = 0usize;
        let n = ((1.0 + delta) / mesh).floor() as i64;
        for i in -n..=n {
            for j in -n..=n {
                let p = Point::d2(i as f64 * mesh, j as f64 * mesh);
                let d = k.points.iter().map(|q| q.dist(&p)).fold(f64::INFINITY, f64::min);
                if d < delta {
                    oracle += 1;
                }
            }
        }
        let ratio = u.len() as f64 / oracle as f64;
        assert!((ratio - 1.0).abs() < 0.10, "count {} vs oracle {}", u.len(), oracle);
    }

    #[test]
    fn set_distance_matches_pairwise_scan() {
        let s = unit_circle(0.157);
        let probes = [Point::d2(2.0, 0.0), Point::d2(0.3, 0.3), Point::d2(-1.5, 0.2)];
        for x in &probes {
            let brute = s.points.iter().map(|p| p.dist(x)).fold(f64::INFINITY, f64::min);
            assert_eq!(set_distance(x, &s), brute);
        }
        // Member point has distance zero; (2,0) sits ~1 away from the circle.
        assert_eq!(set_distance(&s.points[3], &s), 0.0);
        let d = set_distance(&Point::d2(2.0, 0.0), &s);
        assert!((d - 1.0).abs() < 0.02, "distance {d}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_shape(
            &ShapeDescriptor::Annulus { center: vec![0.1, 0.2], inner: 0.5, outer: 1.0 },
            0.07,
        )
        .unwrap();
        let b = sample_shape(
            &ShapeDescriptor::Annulus { center: vec![0.1, 0.2], inner: 0.5, outer: 1.0 },
            0.07,
        )
        .unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn nested_disks_share_lattice() {
        let small = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 0.5 },
            0.1,
        )
        .unwrap();
        let big = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 1.0 },
            0.1,
        )
        .unwrap();
        for p in &small.points {
            assert!(set_distance(p, &big) <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn delta_neighborhood_monotone_in_delta() {
        let k = unit_circle(0.15);
        let u1 = delta_neighborhood(&k, 0.1, 0.05).unwrap();
        for p in &u1.points {
            assert!(set_distance(p, &k) < 0.3);
        }
    }

    #[test]
    fn ball_sampling_has_surface_and_interior() {
        let s = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0, 0.0], radius: 1.0 },
            0.25,
        )
        .unwrap();
        let c = Point::d3(0.0, 0.0, 0.0);
        let on_surface = s.points.iter().filter(|p| (p.dist(&c) - 1.0).abs() < 1e-9).count();
        let interior = s.points.iter().filter(|p| p.dist(&c) < 0.9).count();
        assert!(on_surface > 50);
        assert!(interior > 30);
        assert_eq!(s.dim(), 3);
    }

    #[test]
    fn degenerate_shapes_error() {
        assert!(sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: -1.0 },
            0.1
        )
        .is_err());
        assert!(sample_shape(
            &ShapeDescriptor::Annulus { center: vec![0.0, 0.0], inner: 1.0, outer: 0.5 },
            0.1
        )
        .is_err());
        assert!(sample_shape(
            &ShapeDescriptor::Segment { a: vec![0.0, 0.0], b: vec![0.0, 0.0] },
            0.1
        )
        .is_err());
        let circle = ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 1.0 };
        assert!(matches!(
            sample_shape(&circle, 0.0),
            Err(GeometryError::BadMesh(_))
        ));
    }

    #[test]
    fn shape_descriptor_json_round_trip() {
        let shape = ShapeDescriptor::UnionOf {
            parts: vec![
                ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 1.0 },
                ShapeDescriptor::Segment { a: vec![0.0, -1.0], b: vec![0.0, 1.0] },
            ],
        };
        let json = serde_json::to_string(&shape).unwrap();
        assert!(json.contains("\"kind\":\"union_of\""));
        assert!(json.contains("\"params\""));
        let back: ShapeDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(shape, back);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let s = sample_shape(
            &ShapeDescriptor::FinitePoints { points: vec![vec![1.0, 2.0], vec![3.0, 4.0]] },
            0.1,
        )
        .unwrap();
        let csv = s.to_csv();
        assert_eq!(csv, "x,y\n1,2\n3,4\n");
    }

    #[test]
    fn scene_validates_membership_and_margin() {
        let k = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 1.0 },
            0.1,
        )
        .unwrap();
        let e_shape = ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 0.5 };
        let scene = Scene::with_neighborhood(k.clone(), &e_shape, 0.3, 0.1).unwrap();
        assert!(!scene.e.is_empty());
        assert!(scene.d.len() > scene.k.len());

        // E not drawn from K's samples is rejected.
        let rogue = sample_shape(
            &ShapeDescriptor::FinitePoints { points: vec![vec![0.013, 0.027]] },
            0.1,
        )
        .unwrap();
        let d = delta_neighborhood(&k, 0.3, 0.1).unwrap();
        assert!(Scene::new(k, rogue, d, 0.3).is_err());
    }

    #[test]
    fn grid_in_shape_respects_region() {
        let disk = ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 1.0 };
        let grid = grid_in_shape(&disk, 10, 10).unwrap();
        assert!(grid.len() > 60 && grid.len() < 100);
        for p in &grid {
            assert!(p.dist(&Point::d2(0.0, 0.0)) <= 1.0 + 1e-9);
        }
    }
}
