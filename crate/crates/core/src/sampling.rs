//! Uniform sampling of closed equilateral polygons, open arcs, and closure
//! arcs with a prescribed end-to-end distance.
//!
//! Closed polygons are sampled in action-angle coordinates: the fan diagonals
//! from vertex 0 live in a convex "moment polytope" cut out by triangle
//! inequalities, the dihedral angles about the diagonals are independent and
//! uniform, and the product of Lebesgue measure on the polytope with uniform
//! angles equals the uniform measure on closed polygons with those edge
//! lengths. Sampling the polytope is done directly (no Markov chain): the
//! chain of diagonals is Markov under the uniform measure, and the exact
//! conditional densities are piecewise polynomials computed once per size by
//! a transfer recursion and then inverted numerically per draw.

use crate::geometry::{end_to_end, rotate_about_axis, GeometryError, OpenArc, Polygon3, RngStream, Vec3};
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("moment polytope is empty for these edge lengths")]
    EmptyPolytope,
    #[error("polytope sampling only supports edge lengths (l, 1, 1, ..., 1)")]
    UnsupportedEdgeLengths,
    #[error("closure arc infeasible: need 0 < l <= m, got l={ell}, m={m}")]
    InfeasibleClosure { ell: f64, m: usize },
    #[error("action-angle coordinates violate the polytope inequalities at index {0}")]
    InequalityViolation(usize),
    #[error("end-to-end distances differ by {0}, beyond the 1e-6 gluing tolerance")]
    MismatchedEnds(f64),
    #[error("glued polygon would have fewer than 3 vertices")]
    DegenerateGlue,
    #[error("gap between arc endpoints is numerically zero; no gluing axis")]
    ZeroGap,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Fan-triangulation coordinates of a closed polygon: the n-3 diagonal
/// lengths from vertex 0 and the n-3 dihedral angles about those diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAngleCoords {
    pub diagonals: Vec<f64>,
    pub dihedrals: Vec<f64>,
}

/// The diagonal polytope of a closed polygon with edge lengths
/// `(l, 1, 1, ..., 1)`: the first edge may have any positive length, all
/// remaining edges are unit.
#[derive(Debug, Clone)]
pub struct MomentPolytope {
    edge_lengths: Vec<f64>,
}

impl MomentPolytope {
    pub fn new(edge_lengths: Vec<f64>) -> Self {
        MomentPolytope { edge_lengths }
    }

    pub fn equilateral(n: usize) -> Self {
        MomentPolytope {
            edge_lengths: vec![1.0; n],
        }
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn dimension(&self) -> usize {
        self.edge_lengths.len().saturating_sub(3)
    }

    /// Nonempty iff the polygon inequality holds: the longest edge is at most
    /// the sum of the others.
    pub fn is_empty(&self) -> bool {
        let total: f64 = self.edge_lengths.iter().sum();
        let longest = self.edge_lengths.iter().cloned().fold(0.0, f64::max);
        longest > total - longest + 1e-12
    }

    fn supported(&self) -> bool {
        self.edge_lengths.len() >= 3
            && self.edge_lengths[1..].iter().all(|&r| (r - 1.0).abs() < 1e-12)
    }

    /// Checks the triangle-inequality chain; boundary contact within 1e-12
    /// counts as inside.
    pub fn contains(&self, diagonals: &[f64]) -> bool {
        let n = self.edge_lengths.len();
        if diagonals.len() != n - 3 {
            return false;
        }
        self.violation_index(diagonals).is_none()
    }

    fn violation_index(&self, diagonals: &[f64]) -> Option<usize> {
        const TOL: f64 = 1e-12;
        let n = self.edge_lengths.len();
        let r = &self.edge_lengths;
        if n == 3 {
            return None;
        }
        let g = |i: usize| -> f64 {
            // chord |v0 - v_i|: g(1) = r0, g(n-1) = r_{n-1}, else diagonal
            if i == 1 {
                r[0]
            } else if i == n - 1 {
                r[n - 1]
            } else {
                diagonals[i - 2]
            }
        };
        for i in 1..n - 1 {
            // triangle (v0, v_i, v_{i+1}) with sides g(i), r[i], g(i+1)
            let (a, b, c) = (g(i), r[i], g(i + 1));
            if c > a + b + TOL || c < (a - b).abs() - TOL {
                return Some(i - 1);
            }
        }
        None
    }
}

// --- transfer densities -----------------------------------------------------
//
// F_0 = indicator of [0, 2]; F_{j+1}(d) = integral of F_j over
// [ |d-1|, d+1 ], the interval of diagonal values compatible with d across
// one unit edge. F_j is the (unnormalized) conditional density of a diagonal
// with j more unit steps and a final two-unit-edge closing triangle ahead of
// it. Pieces are stored as local polynomials on [k, k+1]; each level is
// normalized to unit mass to keep magnitudes tame.

struct Level {
    /// pieces[k] = density coefficients in t = d - k on [k, k+1]
    pieces: Vec<Vec<f64>>,
    /// antiderivative of each piece (same local coordinate), constant term 0
    anti: Vec<Vec<f64>>,
    /// cum[k] = integral of the density over [0, k]; cum[len] = total = 1
    cum: Vec<f64>,
}

impl Level {
    fn build(pieces: Vec<Vec<f64>>) -> Level {
        let mut anti = Vec::with_capacity(pieces.len());
        let mut cum = vec![0.0];
        for p in &pieces {
            let a = integrate_local(p);
            let mass = eval_poly(&a, 1.0);
            cum.push(cum.last().unwrap() + mass);
            anti.push(a);
        }
        let total = *cum.last().unwrap();
        let mut lv = Level { pieces, anti, cum };
        if total > 0.0 {
            for p in lv.pieces.iter_mut().chain(lv.anti.iter_mut()) {
                for c in p.iter_mut() {
                    *c /= total;
                }
            }
            for c in lv.cum.iter_mut() {
                *c /= total;
            }
        }
        lv
    }

    fn top(&self) -> f64 {
        self.pieces.len() as f64
    }

    /// Cumulative distribution at x, clamped outside the support.
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.top() {
            return 1.0;
        }
        let k = (x.floor() as usize).min(self.pieces.len() - 1);
        self.cum[k] + eval_poly(&self.anti[k], x - k as f64)
    }

    fn density(&self, x: f64) -> f64 {
        if x < 0.0 || x >= self.top() {
            return 0.0;
        }
        let k = (x.floor() as usize).min(self.pieces.len() - 1);
        eval_poly(&self.pieces[k], x - k as f64)
    }

    /// Draws from the density restricted to [a, b] by CDF inversion.
    fn sample_restricted(&self, a: f64, b: f64, rng: &mut RngStream) -> f64 {
        let a = a.max(0.0);
        let b = b.min(self.top());
        if b - a < 1e-12 {
            return 0.5 * (a + b);
        }
        let (wa, wb) = (self.cdf(a), self.cdf(b));
        let span = wb - wa;
        if span <= 1e-300 {
            return 0.5 * (a + b);
        }
        let target = wa + rng.uniform() * span;
        // bisection on the monotone CDF
        let (mut lo, mut hi) = (a, b);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn eval_poly(c: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for &ci in c.iter().rev() {
        acc = acc * t + ci;
    }
    acc
}

fn integrate_local(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (i, &c) in p.iter().enumerate() {
        out[i + 1] = c / (i as f64 + 1.0);
    }
    out
}

/// q(t) = p(1 - t)
fn compose_one_minus_t(p: &[f64]) -> Vec<f64> {
    let deg = p.len();
    let mut out = vec![0.0; deg];
    // (1-t)^i expanded via Pascal's triangle
    let mut binom = vec![0.0f64; deg];
    for (i, &ci) in p.iter().enumerate() {
        binom[0] = 1.0;
        for m in (1..=i).rev() {
            binom[m] = binom[m] + binom[m - 1];
        }
        let mut sign = 1.0;
        for (m, item) in binom.iter().enumerate().take(i + 1) {
            out[m] += ci * item * sign;
            sign = -sign;
        }
        for b in binom.iter_mut().take(i + 1) {
            *b = 0.0;
        }
    }
    out
}

fn next_level(prev: &Level) -> Level {
    let prev_pieces = prev.pieces.len();
    let new_pieces = prev_pieces + 1;
    let total = 1.0; // prev is normalized
    let mut pieces = Vec::with_capacity(new_pieces);
    for k in 0..new_pieces {
        // F_new on [k, k+1] = A_prev(d+1) - A_prev(|d-1|), local t = d - k
        let upper: Vec<f64> = if k + 1 >= prev_pieces {
            vec![total]
        } else {
            let mut u = prev.anti[k + 1].clone();
            u[0] += prev.cum[k + 1];
            u
        };
        let lower: Vec<f64> = if k == 0 {
            // |d-1| = 1-t on this piece; A_prev piece 0 composed with (1-t)
            let mut l = prev.anti[0].clone();
            l[0] += prev.cum[0];
            compose_one_minus_t(&l)
        } else if k - 1 >= prev_pieces {
            vec![total]
        } else {
            let mut l = prev.anti[k - 1].clone();
            l[0] += prev.cum[k - 1];
            l
        };
        let deg = upper.len().max(lower.len());
        let mut piece = vec![0.0; deg];
        for (i, item) in piece.iter_mut().enumerate() {
            let u = upper.get(i).copied().unwrap_or(0.0);
            let l = lower.get(i).copied().unwrap_or(0.0);
            *item = u - l;
        }
        pieces.push(piece);
    }
    Level::build(pieces)
}

fn level(j: usize) -> Arc<Level> {
    static LEVELS: OnceLock<Mutex<Vec<Arc<Level>>>> = OnceLock::new();
    let levels = LEVELS.get_or_init(|| {
        Mutex::new(vec![Arc::new(Level::build(vec![vec![1.0], vec![1.0]]))])
    });
    let mut guard = levels.lock().unwrap();
    while guard.len() <= j {
        let next = next_level(guard.last().unwrap());
        guard.push(Arc::new(next));
    }
    guard[j].clone()
}

/// Draws a uniform (Lebesgue) point from the diagonal polytope.
pub fn sample_polytope_uniform(
    pt: &MomentPolytope,
    rng: &mut RngStream,
) -> Result<Vec<f64>, SamplingError> {
    if !pt.supported() {
        return Err(SamplingError::UnsupportedEdgeLengths);
    }
    if pt.is_empty() {
        return Err(SamplingError::EmptyPolytope);
    }
    let n = pt.edge_lengths.len();
    let ell = pt.edge_lengths[0];
    let count = n - 3;
    let mut diagonals = Vec::with_capacity(count);
    if count == 0 {
        return Ok(diagonals);
    }
    let mut lo = (ell - 1.0).abs();
    let mut hi = ell + 1.0;
    for i in 0..count {
        let lv = level(count - 1 - i);
        let d = lv.sample_restricted(lo, hi, rng);
        diagonals.push(d);
        lo = (d - 1.0).abs();
        hi = d + 1.0;
    }
    Ok(diagonals)
}

fn clamped_acos(x: f64) -> Option<f64> {
    if x > 1.0 + 1e-9 || x < -1.0 - 1e-9 {
        return None;
    }
    Some(x.clamp(-1.0, 1.0).acos())
}

/// Rebuilds a closed polygon from fan diagonals and dihedral angles. Vertex 0
/// sits at the origin and vertex 1 on the +x axis; the zero-dihedral polygon
/// is the planar fan in the xy-plane.
pub fn polygon_from_action_angle(
    coords: &ActionAngleCoords,
    edge_lengths: &[f64],
) -> Result<Polygon3, SamplingError> {
    let n = edge_lengths.len();
    assert!(n >= 3, "polygon needs at least 3 edges");
    assert_eq!(coords.diagonals.len(), n - 3);
    assert_eq!(coords.dihedrals.len(), n - 3);
    let pt = MomentPolytope::new(edge_lengths.to_vec());
    if let Some(idx) = pt.violation_index(&coords.diagonals) {
        return Err(SamplingError::InequalityViolation(idx));
    }
    let r = edge_lengths;
    let chord = |i: usize| -> f64 {
        if i == 1 {
            r[0]
        } else if i == n - 1 {
            r[n - 1]
        } else {
            coords.diagonals[i - 2]
        }
    };
    let mut dirs: Vec<Vec3> = Vec::with_capacity(n);
    let xhat = Vec3::new(1.0, 0.0, 0.0);
    let yhat = Vec3::new(0.0, 1.0, 0.0);
    let zhat = Vec3::new(0.0, 0.0, 1.0);
    dirs.push(xhat);
    let mut normal = zhat;
    let mut e_prev = xhat;
    for i in 1..n - 1 {
        let (gi, gi1) = (chord(i), chord(i + 1));
        let cos_a = if gi > 0.0 && gi1 > 0.0 {
            (gi * gi + gi1 * gi1 - r[i] * r[i]) / (2.0 * gi * gi1)
        } else {
            return Err(SamplingError::InequalityViolation(i.saturating_sub(1)));
        };
        let alpha =
            clamped_acos(cos_a).ok_or(SamplingError::InequalityViolation(i.saturating_sub(1)))?;
        let in_plane = normal.cross(e_prev);
        let mut e_next = e_prev * alpha.cos() + in_plane * alpha.sin();
        if i >= 2 {
            let theta = coords.dihedrals[i - 2];
            e_next = e_prev * alpha.cos()
                + (in_plane * theta.cos() + normal * theta.sin()) * alpha.sin();
        }
        let cross = e_prev.cross(e_next);
        normal = if cross.norm() > 1e-12 {
            cross.normalized()
        } else {
            // collinear triangle; keep a consistent frame
            normal
        };
        e_prev = e_next.normalized();
        dirs.push(e_prev);
    }
    let mut vertices = Vec::with_capacity(n);
    vertices.push(Vec3::ZERO);
    for (i, d) in dirs.iter().enumerate() {
        vertices.push(*d * chord(i + 1));
        if i + 1 == n - 1 {
            break;
        }
    }
    // first placed point used yhat implicitly via in_plane = z x x = y
    debug_assert_eq!(vertices.len(), n);
    let _ = yhat;
    Ok(Polygon3::new(vertices, edge_lengths.to_vec())?)
}

/// Measures the fan diagonals and dihedral angles of a closed polygon,
/// inverse to [`polygon_from_action_angle`] up to rigid motion.
pub fn measure_action_angle(poly: &Polygon3) -> ActionAngleCoords {
    let vs = poly.vertices();
    let n = vs.len();
    let v0 = vs[0];
    let mut diagonals = Vec::with_capacity(n.saturating_sub(3));
    for v in vs.iter().take(n - 1).skip(2) {
        diagonals.push(v0.dist(*v));
    }
    let mut dihedrals = Vec::with_capacity(n.saturating_sub(3));
    let mut normal: Option<Vec3> = None;
    for i in 1..n - 2 {
        let e_i = (vs[i] - v0).normalized();
        let e_next = (vs[i + 1] - v0).normalized();
        if let Some(nrm) = normal {
            // angle of e_next around e_i measured from the previous triangle
            let w = e_next - e_i * e_next.dot(e_i);
            let p = nrm.cross(e_i);
            let theta = w.dot(nrm).atan2(w.dot(p));
            dihedrals.push(theta.rem_euclid(std::f64::consts::TAU));
        }
        let cross = e_i.cross(e_next);
        if cross.norm() > 1e-12 {
            normal = Some(cross.normalized());
        }
    }
    ActionAngleCoords {
        diagonals,
        dihedrals,
    }
}

/// k independent uniform unit edge directions accumulated from the origin.
pub fn sample_open_arc(k: usize, rng: &mut RngStream) -> OpenArc {
    assert!(k >= 1, "arc needs at least one edge");
    let mut vs = Vec::with_capacity(k + 1);
    vs.push(Vec3::ZERO);
    for _ in 0..k {
        let d = rng.unit_vector();
        vs.push(*vs.last().unwrap() + d);
    }
    OpenArc::new(vs).expect("unit steps build a valid arc")
}

/// Uniform closed equilateral n-gon: uniform polytope point, independent
/// uniform dihedrals, rebuild.
pub fn sample_closed_equilateral(n: usize, rng: &mut RngStream) -> Polygon3 {
    assert!(n >= 3);
    let pt = MomentPolytope::equilateral(n);
    let diagonals = sample_polytope_uniform(&pt, rng).expect("equilateral polytope is nonempty");
    let dihedrals: Vec<f64> = (0..n - 3).map(|_| rng.angle()).collect();
    polygon_from_action_angle(
        &ActionAngleCoords {
            diagonals,
            dihedrals,
        },
        &vec![1.0; n],
    )
    .expect("sampled coordinates satisfy the polytope inequalities")
}

/// An m-edge unit arc whose end-to-end distance is `ell`, distributed as the
/// closing-arc conditional: equivalently a closed (m+1)-gon with one edge of
/// length `ell` and m unit edges, minus the `ell` edge.
pub fn sample_closure_arc(
    m: usize,
    ell: f64,
    rng: &mut RngStream,
) -> Result<OpenArc, SamplingError> {
    if m == 0 || !(ell > 1e-12) || ell > m as f64 - if m >= 2 { 1e-12 } else { 0.0 } {
        if m == 1 && (ell - 1.0).abs() <= 1e-9 {
            // rigid: a single unit edge
            return Ok(OpenArc::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]).unwrap());
        }
        return Err(SamplingError::InfeasibleClosure { ell, m });
    }
    if m == 1 {
        if (ell - 1.0).abs() <= 1e-9 {
            return Ok(OpenArc::new(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]).unwrap());
        }
        return Err(SamplingError::InfeasibleClosure { ell, m });
    }
    let n = m + 1;
    let mut lengths = vec![1.0; n];
    lengths[0] = ell;
    let pt = MomentPolytope::new(lengths.clone());
    if pt.is_empty() {
        return Err(SamplingError::InfeasibleClosure { ell, m });
    }
    let diagonals = sample_polytope_uniform(&pt, rng)?;
    let dihedrals: Vec<f64> = (0..n - 3).map(|_| rng.angle()).collect();
    let poly = polygon_from_action_angle(
        &ActionAngleCoords {
            diagonals,
            dihedrals,
        },
        &lengths,
    )?;
    // drop the ell edge (w0 -> w1): arc runs w1, w2, ..., wm, w0
    let vs = poly.vertices();
    let mut arc: Vec<Vec3> = vs[1..].to_vec();
    arc.push(vs[0]);
    Ok(OpenArc::new(arc)?)
}

/// Rigidly places `b` so its endpoints coincide with `a`'s (b runs from a's
/// last vertex back to a's first), applies a uniform random rotation of b
/// about the endpoint-joining axis, and returns the closed (k+m)-gon that
/// contains `a` as a subarc verbatim.
pub fn glue_closure(
    a: &OpenArc,
    b: &OpenArc,
    rng: &mut RngStream,
) -> Result<Polygon3, SamplingError> {
    let (ea, eb) = (end_to_end(a), end_to_end(b));
    if (ea - eb).abs() > 1e-6 {
        return Err(SamplingError::MismatchedEnds((ea - eb).abs()));
    }
    let (k, m) = (a.edge_count(), b.edge_count());
    if k + m < 3 {
        return Err(SamplingError::DegenerateGlue);
    }
    if ea < 1e-9 {
        return Err(SamplingError::ZeroGap);
    }
    let target = a.first() - a.last(); // direction b must span
    let source = b.last() - b.first();
    let t_hat = target.normalized();
    let s_hat = source.normalized();
    // rotation taking s_hat to t_hat
    let axis = s_hat.cross(t_hat);
    let sin_a = axis.norm();
    let cos_a = s_hat.dot(t_hat);
    let interior: Vec<Vec3> = b.vertices()[..].iter().map(|v| *v - b.first()).collect();
    let rotated = if sin_a > 1e-12 {
        rotate_about_axis(&interior, Vec3::ZERO, axis.normalized(), sin_a.atan2(cos_a))?
    } else if cos_a > 0.0 {
        interior
    } else {
        // antiparallel: rotate half-turn about any perpendicular
        rotate_about_axis(
            &interior,
            Vec3::ZERO,
            s_hat.any_orthonormal(),
            std::f64::consts::PI,
        )?
    };
    let placed: Vec<Vec3> = rotated.into_iter().map(|v| v + a.last()).collect();
    // uniform rotation about the gap axis
    let theta = rng.angle();
    let spun = rotate_about_axis(&placed, a.last(), t_hat, theta)?;
    let mut vertices: Vec<Vec3> = a.vertices().to_vec();
    vertices.extend_from_slice(&spun[1..m]);
    Ok(Polygon3::equilateral(vertices)?)
}
