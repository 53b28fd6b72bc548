//! Planar geometry in a local meter frame: projection from geographic
//! coordinates, point/segment/polyline distances and fire-set queries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used by the local equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate out of range: lat={lat}, lon={lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polyline needs at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polyline has repeated consecutive vertex at index {0}")]
    RepeatedVertex(usize),
    #[error("polygon ring needs at least three distinct vertices, got {0}")]
    DegeneratePolygon(usize),
    #[error("polygon ring self-intersects (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

/// A point in the local planar frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    fn sub(self, other: Point) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

/// Geographic origin of the local frame, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoOrigin {
    pub lat: f64,
    pub lon: f64,
}

fn check_coords(lat: f64, lon: f64) -> Result<(), GeometryError> {
    if !lat.is_finite() || !lon.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if lat.abs() > 90.0 || lon.abs() > 180.0 {
        return Err(GeometryError::CoordinateOutOfRange { lat, lon });
    }
    Ok(())
}

/// Equirectangular projection about `origin`.
pub fn project(lat: f64, lon: f64, origin: GeoOrigin) -> Result<Point, GeometryError> {
    check_coords(lat, lon)?;
    check_coords(origin.lat, origin.lon)?;
    let rad = std::f64::consts::PI / 180.0;
    let x = EARTH_RADIUS_M * (lon - origin.lon) * (origin.lat * rad).cos() * rad;
    let y = EARTH_RADIUS_M * (lat - origin.lat) * rad;
    Ok(Point::new(x, y))
}

/// Inverse of [`project`]; returns `(lat, lon)`.
pub fn unproject(p: Point, origin: GeoOrigin) -> (f64, f64) {
    let rad = std::f64::consts::PI / 180.0;
    let lat = origin.lat + p.y / (EARTH_RADIUS_M * rad);
    let cos0 = (origin.lat * rad).cos();
    let lon = if cos0.abs() < 1e-12 {
        origin.lon
    } else {
        origin.lon + p.x / (EARTH_RADIUS_M * rad * cos0)
    };
    (lat, lon)
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
/// A degenerate segment (`a == b`) is treated as a point.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = b.sub(a);
    let len_sq = abx * abx + aby * aby;
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let (apx, apy) = p.sub(a);
    let t = ((apx * abx + apy * aby) / len_sq).clamp(0.0, 1.0);
    let foot = Point::new(a.x + t * abx, a.y + t * aby);
    // never above the endpoint distances
    p.dist(foot).min(p.dist(a)).min(p.dist(b))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True if closed segments `[a, b]` and `[c, d]` share at least one point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

pub fn dist_segment_segment(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    dist_point_segment(a, c, d)
        .min(dist_point_segment(b, c, d))
        .min(dist_point_segment(c, a, b))
        .min(dist_point_segment(d, a, b))
}

/// An ordered road geometry with at least one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if !(w[0].x.is_finite() && w[0].y.is_finite() && w[1].x.is_finite() && w[1].y.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
            if w[0] == w[1] {
                return Err(GeometryError::RepeatedVertex(i + 1));
            }
        }
        Ok(Polyline { vertices })
    }

    /// Builds a polyline after dropping consecutive duplicate vertices.
    pub fn dedup(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        vertices.dedup();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn first(&self) -> Point {
        self.vertices[0]
    }

    pub fn last(&self) -> Point {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Polyline { vertices }
    }

    /// Minimum distance from `p` to any segment.
    pub fn dist_to_point(&self, p: Point) -> f64 {
        self.segments()
            .map(|(a, b)| dist_point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<Point>> for Polyline {
    type Error = GeometryError;
    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point> {
    fn from(p: Polyline) -> Self {
        p.vertices
    }
}

/// A closed circular disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::BadRadius(radius));
        }
        if !(center.x.is_finite() && center.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Circle { center, radius })
    }

    pub fn contains(&self, p: Point) -> bool {
        self.center.dist_sq(p) <= self.radius * self.radius
    }

    pub fn dist_to_polyline(&self, line: &Polyline) -> f64 {
        (line.dist_to_point(self.center) - self.radius).max(0.0)
    }

    pub fn dist_to_point(&self, p: Point) -> f64 {
        (self.center.dist(p) - self.radius).max(0.0)
    }

    /// `n` evenly spaced boundary points, counter-clockwise from angle zero.
    pub fn boundary_points(&self, n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                Point::new(
                    self.center.x + self.radius * a.cos(),
                    self.center.y + self.radius * a.sin(),
                )
            })
            .collect()
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bbox {
    min: Point,
    max: Point,
}

impl Bbox {
    fn of(points: impl IntoIterator<Item = Point>) -> Self {
        let mut b = Bbox { min: Point::new(f64::INFINITY, f64::INFINITY), max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY) };
        for p in points {
            b.min = Point::new(b.min.x.min(p.x), b.min.y.min(p.y));
            b.max = Point::new(b.max.x.max(p.x), b.max.y.max(p.y));
        }
        b
    }

    fn segment(a: Point, b: Point) -> Self {
        Bbox { min: Point::new(a.x.min(b.x), a.y.min(b.y)), max: Point::new(a.x.max(b.x), a.y.max(b.y)) }
    }

    /// Distance between the boxes; a lower bound on the distance between their contents.
    fn gap(&self, o: &Bbox) -> f64 {
        let dx = (o.min.x - self.max.x).max(self.min.x - o.max.x).max(0.0);
        let dy = (o.min.y - self.max.y).max(self.min.y - o.max.y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    fn gap_to_point(&self, p: Point) -> f64 {
        self.gap(&Bbox { min: p, max: p })
    }
}

/// A simple polygon without holes; the ring is stored open (first vertex not repeated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    ring: Vec<Point>,
    bbox: Bbox,
}

impl Polygon {
    pub fn new(mut ring: Vec<Point>) -> Result<Self, GeometryError> {
        if ring.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        ring.dedup();
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeometryError::DegeneratePolygon(ring.len()));
        }
        let m = ring.len();
        let boxes: Vec<Bbox> = (0..m).map(|i| Bbox::segment(ring[i], ring[(i + 1) % m])).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| boxes[i].min.x.total_cmp(&boxes[j].min.x));
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[k + 1..] {
                if boxes[j].min.x > boxes[i].max.x {
                    break;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                // skip neighbours in the ring and disjoint boxes
                if hi == lo + 1 || (lo == 0 && hi == m - 1) || boxes[i].gap(&boxes[j]) > 0.0 {
                    continue;
                }
                if segments_intersect(ring[lo], ring[(lo + 1) % m], ring[hi], ring[(hi + 1) % m]) {
                    return Err(GeometryError::SelfIntersecting(lo, hi));
                }
            }
        }
        let bbox = Bbox::of(ring.iter().copied());
        Ok(Polygon { ring, bbox })
    }

    pub fn ring(&self) -> &[Point] {
        &self.ring
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let m = self.ring.len();
        (0..m).map(move |i| (self.ring[i], self.ring[(i + 1) % m]))
    }

    fn on_boundary(&self, p: Point) -> bool {
        self.edges()
            .any(|(a, b)| Bbox::segment(a, b).gap_to_point(p) <= BOUNDARY_EPS && dist_point_segment(p, a, b) <= BOUNDARY_EPS)
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.bbox.gap_to_point(p) > BOUNDARY_EPS {
            return false;
        }
        if self.on_boundary(p) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn dist_to_point(&self, p: Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges().map(|(a, b)| dist_point_segment(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    pub fn dist_to_polyline(&self, line: &Polyline) -> f64 {
        let own = self.bbox;
        let reach = Bbox::of(line.vertices().iter().copied());
        if own.gap(&reach) <= BOUNDARY_EPS && line.vertices().iter().any(|&v| self.contains(v)) {
            return 0.0;
        }
        let segments: Vec<(Point, Point, Bbox)> = line.segments().map(|(a, b)| (a, b, Bbox::segment(a, b))).collect();
        let mut best = f64::INFINITY;
        for (c, d) in self.edges() {
            let edge = Bbox::segment(c, d);
            if edge.gap(&reach) >= best {
                continue;
            }
            for &(a, b, ref seg) in &segments {
                if seg.gap(&edge) >= best {
                    continue;
                }
                let dist = dist_segment_segment(a, b, c, d);
                if dist == 0.0 {
                    return 0.0;
                }
                best = best.min(dist);
            }
        }
        best
    }
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.ring
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FireComponent {
    Circle(Circle),
    Polygon { ring: Polygon },
}

impl FireComponent {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            FireComponent::Circle(c) => c.contains(p),
            FireComponent::Polygon { ring } => ring.contains(p),
        }
    }

    pub fn dist_to_polyline(&self, line: &Polyline) -> f64 {
        match self {
            FireComponent::Circle(c) => c.dist_to_polyline(line),
            FireComponent::Polygon { ring } => ring.dist_to_polyline(line),
        }
    }

    pub fn dist_to_point(&self, p: Point) -> f64 {
        match self {
            FireComponent::Circle(c) => c.dist_to_point(p),
            FireComponent::Polygon { ring } => ring.dist_to_point(p),
        }
    }

    /// Points on the component boundary; circles are sampled at `circle_samples` points.
    pub fn boundary_samples(&self, circle_samples: usize) -> Vec<Point> {
        match self {
            FireComponent::Circle(c) => c.boundary_points(circle_samples),
            FireComponent::Polygon { ring } => ring.ring().to_vec(),
        }
    }
}

/// The burnt region at one time instance: a union of closed circles and polygons.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FireSet {
    pub components: Vec<FireComponent>,
}

impl FireSet {
    pub fn empty() -> Self {
        FireSet::default()
    }

    pub fn from_circles(circles: impl IntoIterator<Item = Circle>) -> Self {
        FireSet {
            components: circles.into_iter().map(FireComponent::Circle).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn union(&self, other: &FireSet) -> FireSet {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        FireSet { components }
    }
}

/// Membership of `p` in the closed fire set.
pub fn contains(fire: &FireSet, p: Point) -> bool {
    fire.components.iter().any(|c| c.contains(p))
}

/// Distance from a road geometry to the fire set; `None` when the set is empty.
pub fn dist_polyline_fireset(line: &Polyline, fire: &FireSet) -> Option<f64> {
    if fire.is_empty() {
        return None;
    }
    let mut best = f64::INFINITY;
    for c in &fire.components {
        best = best.min(c.dist_to_polyline(line));
        if best == 0.0 {
            break;
        }
    }
    Some(best)
}
