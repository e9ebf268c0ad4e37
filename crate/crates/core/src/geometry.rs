//! Core vector and polygon types shared by every other module: points in
//! 3-space, open polygonal arcs, closed polygons with per-edge lengths, and
//! the seeded RNG stream contract used to keep campaigns reproducible.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use std::io::{BufRead, Write};
use thiserror::Error;

/// Relative tolerance for edge-length and closure validation.
pub const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("empty point set")]
    EmptyPoints,
    #[error("zero-length axis vector")]
    ZeroAxis,
    #[error("arc needs at least 2 vertices, got {0}")]
    ArcTooShort(usize),
    #[error("polygon needs at least 3 vertices, got {0}")]
    PolygonTooSmall(usize),
    #[error("edge {index} has length {actual} but {expected} was required")]
    EdgeLengthMismatch {
        index: usize,
        actual: f64,
        expected: f64,
    },
    #[error("non-finite coordinate encountered")]
    NonFinite,
    #[error("bad record: {0}")]
    BadRecord(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A point or vector in 3-space. Edge length 1 is the unit of length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Any unit vector orthogonal to `self` (which must be nonzero).
    pub fn any_orthonormal(self) -> Vec3 {
        let pick = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Vec3::new(1.0, 0.0, 0.0)
        } else if self.y.abs() <= self.z.abs() {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        self.cross(pick).normalized()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// An open polygonal chain of k unit edges (k+1 vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct OpenArc {
    vertices: Vec<Vec3>,
}

impl OpenArc {
    /// Validates unit edges to relative tolerance [`EDGE_TOL`]. Rejects rather
    /// than renormalizes: silently fixing lengths would bias samplers built on
    /// top of this type.
    pub fn new(vertices: Vec<Vec3>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::ArcTooShort(vertices.len()));
        }
        for v in &vertices {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite);
            }
        }
        for i in 0..vertices.len() - 1 {
            let d = vertices[i].dist(vertices[i + 1]);
            if (d - 1.0).abs() > EDGE_TOL {
                return Err(GeometryError::EdgeLengthMismatch {
                    index: i,
                    actual: d,
                    expected: 1.0,
                });
            }
        }
        Ok(OpenArc { vertices })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Number of edges k.
    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn first(&self) -> Vec3 {
        self.vertices[0]
    }

    pub fn last(&self) -> Vec3 {
        *self.vertices.last().unwrap()
    }
}

/// End-to-end distance of an arc: |first vertex - last vertex|.
pub fn end_to_end(arc: &OpenArc) -> f64 {
    arc.first().dist(arc.last())
}

/// A closed polygon in 3-space, vertices interpreted cyclically. Edge i runs
/// from vertex i to vertex (i+1) mod n and has length `edge_lengths[i]`; in
/// the equilateral case all lengths are 1, while closure intermediates and
/// simplified polygons carry mixed lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon3 {
    vertices: Vec<Vec3>,
    edge_lengths: Vec<f64>,
}

impl Polygon3 {
    /// Validates each cyclic consecutive distance against `edge_lengths`
    /// (relative tolerance [`EDGE_TOL`]).
    pub fn new(vertices: Vec<Vec3>, edge_lengths: Vec<f64>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::PolygonTooSmall(vertices.len()));
        }
        assert_eq!(vertices.len(), edge_lengths.len(), "one length per edge");
        for v in &vertices {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite);
            }
        }
        let n = vertices.len();
        for i in 0..n {
            let d = vertices[i].dist(vertices[(i + 1) % n]);
            let want = edge_lengths[i];
            if (d - want).abs() > EDGE_TOL * want.max(1.0) {
                return Err(GeometryError::EdgeLengthMismatch {
                    index: i,
                    actual: d,
                    expected: want,
                });
            }
        }
        Ok(Polygon3 {
            vertices,
            edge_lengths,
        })
    }

    /// Equilateral constructor: all edges length 1.
    pub fn equilateral(vertices: Vec<Vec3>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        Polygon3::new(vertices, vec![1.0; n])
    }

    /// Builds from vertices alone, measuring each edge length from the
    /// coordinates. Used where edges are legitimately non-unit (e.g. after
    /// geometric simplification or ray closure).
    pub fn from_vertices_measured(vertices: Vec<Vec3>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::PolygonTooSmall(vertices.len()));
        }
        let n = vertices.len();
        let lengths: Vec<f64> = (0..n)
            .map(|i| vertices[i].dist(vertices[(i + 1) % n]))
            .collect();
        Polygon3::new(vertices, lengths)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mirror image through the xy-plane (negates z).
    pub fn mirrored(&self) -> Polygon3 {
        let vs = self
            .vertices
            .iter()
            .map(|v| Vec3::new(v.x, v.y, -v.z))
            .collect();
        Polygon3 {
            vertices: vs,
            edge_lengths: self.edge_lengths.clone(),
        }
    }
}

/// Supporting-hyperplane height of a point set in direction `w`:
/// max over points of w . p. A polygon's hull is its vertex hull, so the
/// vertex maximum suffices.
pub fn support_height(points: &[Vec3], w: Vec3) -> Result<f64, GeometryError> {
    debug_assert!((w.norm() - 1.0).abs() < 1e-12, "w must be unit");
    points
        .iter()
        .map(|p| w.dot(*p))
        .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |a| a.max(h))))
        .ok_or(GeometryError::EmptyPoints)
}

/// Rigid rotation of `points` by `angle` radians about the axis through
/// `axis_point` with unit direction `axis_dir` (Rodrigues' formula).
pub fn rotate_about_axis(
    points: &[Vec3],
    axis_point: Vec3,
    axis_dir: Vec3,
    angle: f64,
) -> Result<Vec<Vec3>, GeometryError> {
    let n2 = axis_dir.norm2();
    if n2 == 0.0 || !n2.is_finite() {
        return Err(GeometryError::ZeroAxis);
    }
    let k = axis_dir.normalized();
    let (s, c) = angle.sin_cos();
    Ok(points
        .iter()
        .map(|&p| {
            let v = p - axis_point;
            let rot = v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
            axis_point + rot
        })
        .collect())
}

/// A seeded, splittable random stream. Identical `(seed, stream_id)` pairs
/// reproduce identical value sequences; distinct stream ids are statistically
/// independent. Backed by ChaCha8 with the stream id in the nonce, so streams
/// can be derived in any order on any number of workers.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Deterministically derives a child stream. Children of distinct ids,
    /// and children of distinct parents, land on distinct ChaCha streams.
    pub fn derive(&self, id: u64) -> RngStream {
        RngStream::new(
            self.seed,
            mix64(self.stream_id ^ mix64(id.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        )
    }

    /// Uniform point on the unit sphere.
    pub fn unit_vector(&mut self) -> Vec3 {
        let v: [f64; 3] = rand_distr::UnitSphere.sample(&mut self.rng);
        Vec3::new(v[0], v[1], v[2])
    }

    pub fn angle(&mut self) -> f64 {
        self.rng.gen_range(0.0..std::f64::consts::TAU)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// SplitMix64 finalizer; used to spread structured ids across stream space.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One NDJSON record: either a closed polygon or an open arc.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Polygon(Polygon3),
    Arc(OpenArc),
}

fn fmt_coord(x: f64) -> String {
    // 17 significant digits round-trip any f64 exactly.
    format!("{:.16e}", x)
}

/// Serializes a record as one NDJSON line:
/// `{"kind":"polygon"|"arc","vertices":[[x,y,z],...]}` with floats at 17
/// significant digits.
pub fn record_to_line(rec: &Record) -> String {
    let (kind, verts): (&str, &[Vec3]) = match rec {
        Record::Polygon(p) => ("polygon", p.vertices()),
        Record::Arc(a) => ("arc", a.vertices()),
    };
    let mut s = String::with_capacity(verts.len() * 72 + 32);
    s.push_str("{\"kind\":\"");
    s.push_str(kind);
    s.push_str("\",\"vertices\":[");
    for (i, v) in verts.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push('[');
        s.push_str(&fmt_coord(v.x));
        s.push(',');
        s.push_str(&fmt_coord(v.y));
        s.push(',');
        s.push_str(&fmt_coord(v.z));
        s.push(']');
    }
    s.push_str("]}");
    s
}

pub fn record_from_line(line: &str) -> Result<Record, GeometryError> {
    let v: serde_json::Value =
        serde_json::from_str(line).map_err(|e| GeometryError::BadRecord(e.to_string()))?;
    let kind = v
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| GeometryError::BadRecord("missing kind".into()))?;
    let verts = v
        .get("vertices")
        .and_then(|x| x.as_array())
        .ok_or_else(|| GeometryError::BadRecord("missing vertices".into()))?;
    let mut pts = Vec::with_capacity(verts.len());
    for t in verts {
        let t = t
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| GeometryError::BadRecord("vertex is not a 3-tuple".into()))?;
        let c: Vec<f64> = t.iter().filter_map(|x| x.as_f64()).collect();
        if c.len() != 3 {
            return Err(GeometryError::BadRecord("non-numeric coordinate".into()));
        }
        pts.push(Vec3::new(c[0], c[1], c[2]));
    }
    match kind {
        "polygon" => Ok(Record::Polygon(Polygon3::from_vertices_measured(pts)?)),
        "arc" => Ok(Record::Arc(OpenArc::new(pts)?)),
        k => Err(GeometryError::BadRecord(format!("unknown kind {k:?}"))),
    }
}

pub fn write_records<W: Write>(w: &mut W, recs: &[Record]) -> Result<(), GeometryError> {
    for r in recs {
        writeln!(w, "{}", record_to_line(r))?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<Record>, GeometryError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(record_from_line(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn straight_arc(k: usize) -> OpenArc {
        OpenArc::new((0..=k).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect()).unwrap()
    }

    #[test]
    fn end_to_end_straight_three_edges() {
        assert_eq!(end_to_end(&straight_arc(3)), 3.0);
    }

    #[test]
    fn end_to_end_closed_loop_is_zero() {
        // Unit rhombus traversed as an open arc returning to its start.
        let a = OpenArc::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.5, 3f64.sqrt() / 2.0, 0.0),
            Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(end_to_end(&a), 0.0);
    }

    #[test]
    fn end_to_end_right_angle_bend() {
        let a = OpenArc::new(vec![
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ])
        .unwrap();
        assert!((end_to_end(&a) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn support_height_unit_cube() {
        let pts: Vec<Vec3> = (0..8)
            .map(|i| {
                Vec3::new(
                    (i & 1) as f64,
                    ((i >> 1) & 1) as f64,
                    ((i >> 2) & 1) as f64,
                )
            })
            .collect();
        assert_eq!(
            support_height(&pts, Vec3::new(0.0, 0.0, 1.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn support_height_single_point() {
        let p = Vec3::new(0.3, -0.7, 2.0);
        let w = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(support_height(&[p], w).unwrap(), w.dot(p));
    }

    #[test]
    fn support_height_planar_triangle() {
        let pts = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-0.5, 0.75f64.sqrt(), 0.0),
            Vec3::new(-0.5, -(0.75f64.sqrt()), 0.0),
        ];
        let h = support_height(&pts, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!(h.abs() < 1e-15);
    }

    #[test]
    fn support_height_empty_errors() {
        assert!(support_height(&[], Vec3::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn rotate_zero_angle_is_identity() {
        let pts = vec![Vec3::new(0.2, 0.4, -1.0), Vec3::new(3.0, -2.0, 0.5)];
        let out = rotate_about_axis(&pts, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 0.0).unwrap();
        assert_eq!(pts, out);
    }

    #[test]
    fn rotate_quarter_turn_about_z() {
        let out = rotate_about_axis(
            &[Vec3::new(1.0, 0.0, 0.0)],
            Vec3::ZERO,
            Vec3::new(0.0, 0.0, 1.0),
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        assert!(out[0].dist(Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn rotate_full_turn_returns() {
        let pts = vec![Vec3::new(0.3, 1.0, -2.0)];
        let out = rotate_about_axis(
            &pts,
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(0.0, 1.0, 0.0),
            std::f64::consts::TAU,
        )
        .unwrap();
        assert!(out[0].dist(pts[0]) < 1e-12);
    }

    #[test]
    fn rotate_zero_axis_errors() {
        assert!(rotate_about_axis(&[Vec3::ZERO], Vec3::ZERO, Vec3::ZERO, 1.0).is_err());
    }

    #[test]
    fn arc_constructor_rejects_bad_edge() {
        let r = OpenArc::new(vec![Vec3::ZERO, Vec3::new(1.5, 0.0, 0.0)]);
        assert!(matches!(r, Err(GeometryError::EdgeLengthMismatch { .. })));
    }

    #[test]
    fn polygon_constructor_rejects_bad_closure() {
        // Edges 0 and 1 are unit but the closing edge is not.
        let r = Polygon3::equilateral(vec![
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn rng_stream_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let va: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let vc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }

    #[test]
    fn derived_streams_differ_from_parent() {
        let parent = RngStream::new(1, 0);
        let mut c0 = parent.derive(0);
        let mut c1 = parent.derive(1);
        assert_ne!(c0.next_u64(), c1.next_u64());
    }

    #[test]
    fn ndjson_roundtrip() {
        let mut rng = RngStream::new(42, 0);
        let tri = Polygon3::equilateral(vec![
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 0.75f64.sqrt(), 0.0),
        ])
        .unwrap();
        let arc = OpenArc::new(vec![Vec3::ZERO, rng.unit_vector()]).unwrap();
        for rec in [Record::Polygon(tri), Record::Arc(arc)] {
            let line = record_to_line(&rec);
            let back = record_from_line(&line).unwrap();
            assert_eq!(rec, back);
        }
    }

    #[test]
    fn ndjson_line_has_17_digit_floats() {
        let line = record_to_line(&Record::Arc(straight_arc(1)));
        assert!(line.contains("1.0000000000000000e0"));
    }

    proptest! {
        #[test]
        fn rotation_preserves_pairwise_distances(
            seed in 0u64..1000,
            angle in -10.0f64..10.0,
        ) {
            let mut rng = RngStream::new(seed, 0);
            let pts: Vec<Vec3> = (0..6).map(|_| rng.unit_vector() * 3.0).collect();
            let axis = rng.unit_vector();
            let origin = rng.unit_vector();
            let out = rotate_about_axis(&pts, origin, axis, angle).unwrap();
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    prop_assert!((pts[i].dist(pts[j]) - out[i].dist(out[j])).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn support_height_dominates_all_points(seed in 0u64..1000) {
            let mut rng = RngStream::new(seed, 1);
            let pts: Vec<Vec3> = (0..10).map(|_| rng.unit_vector() * 2.0).collect();
            let w = rng.unit_vector();
            let h = support_height(&pts, w).unwrap();
            let mut attained = false;
            for p in &pts {
                prop_assert!(w.dot(*p) <= h + 1e-12);
                if (w.dot(*p) - h).abs() < 1e-12 { attained = true; }
            }
            prop_assert!(attained);
        }

        #[test]
        fn end_to_end_rigid_invariant(seed in 0u64..1000, angle in -6.0f64..6.0) {
            let mut rng = RngStream::new(seed, 2);
            let mut vs = vec![Vec3::ZERO];
            for _ in 0..5 {
                let d = rng.unit_vector();
                vs.push(*vs.last().unwrap() + d);
            }
            let arc = OpenArc::new(vs.clone()).unwrap();
            let moved = rotate_about_axis(&vs, rng.unit_vector(), rng.unit_vector(), angle)
                .unwrap()
                .into_iter()
                .map(|p| p + Vec3::new(1.0, -2.0, 0.5))
                .collect::<Vec<_>>();
            let arc2 = OpenArc::new(moved).unwrap();
            prop_assert!((end_to_end(&arc) - end_to_end(&arc2)).abs() < 1e-12);
        }
    }
}
