//! Truncated wedge domains Ω(j): geodesic triangles 0–p₁–q_j with labeled
//! boundary, graded toward the data-jump corners, plus refinement sweeps and
//! a plain-text mesh format.

pub mod delaunay;

use crate::hypgeom::{
    angle_between, conformal_factor, geodesic_through, hyp_distance, hyp_midpoint, DiskPoint,
    Geodesic, HypError, IdealPoint, ModelPoint,
};
use crate::scalar::{lit, Real};
use delaunay::{Delaunay, MeshBuildError, Refiner, Segment};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid wedge spec: {0}")]
    InvalidSpec(String),
    #[error("mesh capacity exceeded ({vertices} vertices); suggested coarser target_h ≈ {suggested_target_h:.4}")]
    Capacity {
        vertices: usize,
        suggested_target_h: f64,
    },
    #[error(transparent)]
    Hyp(#[from] HypError),
    #[error(transparent)]
    Build(#[from] MeshBuildError),
    #[error("mesh validation failed: {0}")]
    Validation(String),
    #[error("mesh format error: {0}")]
    Format(String),
}

/// Labels for the three geodesic sides of the wedge (plus a reserved tag for
/// alternative truncations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundaryTag {
    L1,
    L2,
    GammaCap,
    Trunc,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::L1 => "L1",
            BoundaryTag::L2 => "L2",
            BoundaryTag::GammaCap => "GAMMA_CAP",
            BoundaryTag::Trunc => "TRUNC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "L1" => Some(BoundaryTag::L1),
            "L2" => Some(BoundaryTag::L2),
            "GAMMA_CAP" => Some(BoundaryTag::GammaCap),
            "TRUNC" => Some(BoundaryTag::Trunc),
            _ => None,
        }
    }
}

/// Marked corner vertices of a wedge mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corners {
    pub origin: u32,
    pub p1: u32,
    pub qj: u32,
}

/// Conforming triangulation of the wedge with tagged boundary edges.
#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    pub vertices: Vec<DiskPoint<T>>,
    pub triangles: Vec<[u32; 3]>,
    pub boundary: Vec<(u32, u32, BoundaryTag)>,
    pub corners: Option<Corners>,
}

/// Mesh generation knobs beyond the spec-level fields.
#[derive(Debug, Clone)]
pub struct MeshOptions<T> {
    /// Hyperbolic radius over which corner grading acts.
    pub grade_radius: T,
    /// Smallest size factor reached at the graded corners.
    pub floor_ratio: T,
    /// Size factor near the cap geodesic (boundary-layer resolution).
    pub cap_grade_ratio: T,
    /// Hyperbolic radius over which cap grading acts.
    pub cap_grade_radius: T,
    pub max_vertices: usize,
    /// Quality rule: circumradius / shortest edge bound.
    pub ratio_bound: T,
}

impl<T: Real> Default for MeshOptions<T> {
    fn default() -> Self {
        Self {
            grade_radius: lit(1.0),
            floor_ratio: lit(1.0 / 16.0),
            cap_grade_ratio: lit(0.55),
            cap_grade_radius: lit(0.6),
            max_vertices: 80_000,
            ratio_bound: lit(1.19), // min angle ≈ 25°
        }
    }
}

/// Geometry of the truncated wedge Ω(j).
#[derive(Debug, Clone)]
pub struct WedgeSpec<T: Real> {
    pub k: u32,
    pub alpha: T,
    /// Truncation vertex q_j on Γ (the geodesic from p₁ to the ideal e^{iπ/k}).
    pub cap_point: DiskPoint<T>,
    /// Target hyperbolic edge length away from the graded corners.
    pub target_h: T,
    /// Grading exponent toward the corners (default 2).
    pub grading_exponent: T,
    pub opts: MeshOptions<T>,
}

impl<T: Real> WedgeSpec<T> {
    /// Standard construction: truncate at Euclidean distance `trunc` from p₂.
    pub fn new(k: u32, alpha: T, trunc: T, target_h: T) -> Result<Self, MeshError> {
        let cap_point = cap_point_at_euclidean_distance(k, alpha, trunc)?;
        let spec = Self {
            k,
            alpha,
            cap_point,
            target_h,
            grading_exponent: lit(2.0),
            opts: MeshOptions::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn p1(&self) -> DiskPoint<T> {
        DiskPoint::new(self.alpha, T::zero())
    }

    pub fn p2(&self) -> IdealPoint<T> {
        IdealPoint::new(T::PI() / T::from_u32(self.k).unwrap())
    }

    pub fn gamma(&self) -> Result<Geodesic<T>, HypError> {
        geodesic_through(self.p1(), self.p2())
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.k < 2 {
            return Err(MeshError::InvalidSpec(format!("k must be ≥ 2, got {}", self.k)));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(MeshError::InvalidSpec("alpha must lie in (0,1)".into()));
        }
        if !(self.target_h > T::zero()) {
            return Err(MeshError::InvalidSpec("target_h must be positive".into()));
        }
        if self.cap_point.norm_sq() >= T::one() {
            return Err(MeshError::InvalidSpec("cap point not interior".into()));
        }
        let gamma = self.gamma()?;
        let res = gamma.residual(self.cap_point.to_complex());
        if res > lit::<T>(1e-10) {
            return Err(MeshError::InvalidSpec(format!(
                "cap point is not on Γ (residual {:.3e})",
                res.as_f64()
            )));
        }
        if hyp_distance(self.p1(), self.cap_point) < lit::<T>(1e-9) {
            return Err(MeshError::InvalidSpec(
                "degenerate truncation: q_j coincides with p1".into(),
            ));
        }
        Ok(())
    }

    /// Local target hyperbolic edge length.
    pub fn sizing(&self, z: DiskPoint<T>) -> T {
        let o = &self.opts;
        let d_corner = hyp_distance(z, self.p1()).min(hyp_distance(z, self.cap_point));
        let f_corner = (d_corner / o.grade_radius)
            .powf(self.grading_exponent)
            .max(o.floor_ratio)
            .min(T::one());
        let f_cap = match self.gamma() {
            Ok(g) => (g.signed_distance(z).abs() / o.cap_grade_radius)
                .max(o.cap_grade_ratio)
                .min(T::one()),
            Err(_) => T::one(),
        };
        self.target_h * f_corner.min(f_cap)
    }
}

/// The α(k) for which the geodesic 0p₁ meets p₁p₂ at a right angle at p₁
/// (angle of parallelism: tanh d(0,α) = cos(π/k)).
pub fn alpha_min<T: Real>(k: u32) -> Result<T, MeshError> {
    if k < 3 {
        return Err(MeshError::InvalidSpec(format!(
            "alpha_min requires k ≥ 3, got {k}"
        )));
    }
    let c = (T::PI() / T::from_u32(k).unwrap()).cos();
    // α = tanh( artanh(cos π/k) / 2 )
    let d = lit::<T>(0.5) * (c.ln_1p() - (-c).ln_1p());
    Ok((d * lit::<T>(0.5)).tanh())
}

/// Point on Γ at Euclidean distance `dist` from the ideal vertex p₂.
pub fn cap_point_at_euclidean_distance<T: Real>(
    k: u32,
    alpha: T,
    dist: T,
) -> Result<DiskPoint<T>, MeshError> {
    if k < 2 {
        return Err(MeshError::InvalidSpec(format!("k must be ≥ 2, got {k}")));
    }
    if !(dist > T::zero()) {
        return Err(MeshError::InvalidSpec(
            "truncation distance must be positive".into(),
        ));
    }
    let p1 = DiskPoint::new(alpha, T::zero());
    let p2 = IdealPoint::new(T::PI() / T::from_u32(k).unwrap());
    let g = geodesic_through(p1, p2)?;
    match g.shape {
        crate::hypgeom::GeodesicShape::Arc { center, radius } => {
            let zp2 = p2.to_complex();
            let u = zp2 - center;
            let phi2 = u.im.atan2(u.re);
            let dphi = lit::<T>(2.0) * (dist / (lit::<T>(2.0) * radius)).asin();
            // walk from p₂ toward p₁ along the arc
            let v1 = p1.to_complex() - center;
            let phi1 = v1.im.atan2(v1.re);
            let mut delta = phi1 - phi2;
            let tau = T::PI() + T::PI();
            while delta > T::PI() {
                delta -= tau;
            }
            while delta < -T::PI() {
                delta += tau;
            }
            let sign = if delta >= T::zero() { T::one() } else { -T::one() };
            let phi = phi2 + sign * dphi;
            let q = center + num_complex::Complex::from_polar(radius, phi);
            Ok(DiskPoint::from_complex(q))
        }
        crate::hypgeom::GeodesicShape::Diameter { .. } => Err(MeshError::InvalidSpec(
            "Γ degenerated to a diameter".into(),
        )),
    }
}

/// The visual angle ∠p₂0q_j at the origin (goes to zero as q_j → p₂).
pub fn corner_angle_at_origin<T: Real>(k: u32, cap_point: DiskPoint<T>) -> Result<T, MeshError> {
    let p2 = IdealPoint::new(T::PI() / T::from_u32(k).unwrap());
    let axis = geodesic_through(DiskPoint::origin(), p2)?;
    let ray = geodesic_through(DiskPoint::origin(), cap_point)?;
    Ok(angle_between(DiskPoint::origin(), &axis, &ray)?)
}

/// Build and triangulate the wedge.
pub fn build_wedge<T: Real>(spec: &WedgeSpec<T>) -> Result<TriMesh<T>, MeshError> {
    spec.validate()?;
    let p1 = spec.p1();
    let qj = spec.cap_point;
    let gamma = spec.gamma()?;
    let origin = DiskPoint::origin();
    let map_capacity = |e: MeshBuildError, target_h: f64| match e {
        MeshBuildError::Capacity(v, _) => MeshError::Capacity {
            vertices: v,
            suggested_target_h: 2.0 * target_h,
        },
        other => MeshError::Build(other),
    };
    let th = spec.target_h.as_f64();

    // --- boundary sampling -------------------------------------------------
    let sizing = |z: DiskPoint<T>| spec.sizing(z);
    let l1_len = hyp_distance(origin, p1);
    let l2_len = hyp_distance(origin, qj);
    let cap_len = hyp_distance(p1, qj);
    let qhat = {
        let n = qj.to_complex().norm();
        qj.to_complex() / n
    };
    let l1_eval = |s: T| DiskPoint::new((s * lit::<T>(0.5)).tanh(), T::zero());
    let l2_eval = |s: T| DiskPoint::from_complex(qhat * (s * lit::<T>(0.5)).tanh());
    let qj_model: ModelPoint<T> = ModelPoint::Interior(qj);
    let cap_eval = |s: T| gamma.point_at_arclength(p1, &qj_model, s);

    // March inward from both endpoints so that near-corner sample distances
    // are identical across the chains meeting there (keeps the thin-corner
    // ladder Delaunay-conforming), then fill the middle by local sizing.
    fn sample<T: Real>(
        total: T,
        eval: &dyn Fn(T) -> DiskPoint<T>,
        sizing: &dyn Fn(DiskPoint<T>) -> T,
        stop: T,
    ) -> Vec<T> {
        let half = total * lit::<T>(0.5);
        let march = |from_end: bool| -> Vec<T> {
            let mut d = T::zero();
            let mut out = Vec::new();
            for _ in 0..100_000 {
                let pos = if from_end { total - d } else { d };
                let step = sizing(eval(pos))
                    .min(d.max(stop) * lit::<T>(0.6))
                    .max(stop)
                    .max(lit::<T>(1e-7));
                d += step;
                if d > half {
                    break;
                }
                out.push(if from_end { total - d } else { d });
            }
            out
        };
        let mut params = vec![T::zero(), total];
        params.extend(march(false));
        params.extend(march(true));
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        params.dedup_by(|a, b| (*a - *b).abs() < lit::<T>(1e-12));
        // subdivide any oversized middle gap
        let mut filled = Vec::with_capacity(params.len() * 2);
        for w in params.windows(2) {
            let (a, b) = (w[0], w[1]);
            filled.push(a);
            let gap = b - a;
            let target = sizing(eval((a + b) * lit::<T>(0.5))).max(stop);
            if gap > target * lit::<T>(1.4) {
                let n = (gap / target).as_f64().ceil() as usize;
                for i in 1..n {
                    filled.push(a + gap * T::from_usize(i).unwrap() / T::from_usize(n).unwrap());
                }
            }
        }
        filled.push(total);
        filled
    }

    let stop = spec.opts.floor_ratio * spec.target_h * lit::<T>(0.5);
    let l1_s = sample(l1_len, &l1_eval, &sizing, stop);
    let l2_s = sample(l2_len, &l2_eval, &sizing, stop);
    let cap_s = sample(cap_len, &cap_eval, &sizing, stop);

    // --- Delaunay of the boundary ------------------------------------------
    let mut dt = Delaunay::<T>::with_budget(spec.opts.max_vertices);
    let vo = dt.insert(origin).map_err(|e| map_capacity(e, th))?;
    let vp1 = dt.insert(p1).map_err(|e| map_capacity(e, th))?;
    let vqj = dt.insert(qj).map_err(|e| map_capacity(e, th))?;
    let mut segments: Vec<Segment> = Vec::new();
    let mut add_chain = |dt: &mut Delaunay<T>,
                         params: &[T],
                         eval: &dyn Fn(T) -> DiskPoint<T>,
                         first: u32,
                         last: u32,
                         chain: u32|
     -> Result<(), MeshError> {
        let mut prev = first;
        for (i, &s) in params.iter().enumerate() {
            if i == 0 || i + 1 == params.len() {
                continue;
            }
            let v = dt.insert(eval(s)).map_err(|e| map_capacity(e, th))?;
            segments.push(Segment { a: prev, b: v, chain });
            prev = v;
        }
        segments.push(Segment { a: prev, b: last, chain });
        Ok(())
    };
    add_chain(&mut dt, &l1_s, &l1_eval, vo, vp1, 0)?;
    add_chain(&mut dt, &l2_s, &l2_eval, vo, vqj, 1)?;
    add_chain(&mut dt, &cap_s, &cap_eval, vp1, vqj, 2)?;

    // --- interior refinement -----------------------------------------------
    let qj_c = qj.to_complex();
    let inside = move |z: DiskPoint<T>| -> bool {
        // the sector/Γ tests below are only meaningful inside the model disk
        if z.norm_sq() >= T::one() {
            return false;
        }
        if z.y <= T::zero() {
            return false;
        }
        if z.x * qj_c.im - z.y * qj_c.re <= T::zero() {
            return false;
        }
        gamma.signed_distance(z) > T::zero()
    };
    {
        let mut refiner = Refiner {
            dt: &mut dt,
            segments,
            sizing: Box::new(sizing),
            inside: Box::new(inside),
            exempt_corners: vec![vqj],
            cluster_corners: vec![vo, vp1, vqj],
            max_vertices: spec.opts.max_vertices,
            ratio_bound: spec.opts.ratio_bound,
            min_feature: lit::<T>(0.75) * spec.opts.floor_ratio * spec.target_h,
        };
        refiner.refine().map_err(|e| map_capacity(e, th))?;
        segments = refiner.segments;
    }

    // --- extraction ----------------------------------------------------------
    let mut seg_tag: std::collections::BTreeMap<(u32, u32), BoundaryTag> =
        std::collections::BTreeMap::new();
    for s in &segments {
        let key = (s.a.min(s.b), s.a.max(s.b));
        let tag = match s.chain {
            0 => BoundaryTag::L1,
            1 => BoundaryTag::L2,
            _ => BoundaryTag::GammaCap,
        };
        seg_tag.insert(key, tag);
    }
    let mut keep: Vec<[u32; 3]> = Vec::new();
    for tv in dt.alive_triangles() {
        let a = dt.points[tv[0] as usize];
        let b = dt.points[tv[1] as usize];
        let c = dt.points[tv[2] as usize];
        let cx = (a.x + b.x + c.x) / lit::<T>(3.0);
        let cy = (a.y + b.y + c.y) / lit::<T>(3.0);
        if inside(DiskPoint::new(cx, cy)) {
            keep.push(tv);
        }
    }
    // compact vertex indices
    let mut remap = vec![u32::MAX; dt.points.len()];
    let mut vertices: Vec<DiskPoint<T>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for tv in keep {
        let mut nv = [0u32; 3];
        for (i, &v) in tv.iter().enumerate() {
            if remap[v as usize] == u32::MAX {
                remap[v as usize] = vertices.len() as u32;
                vertices.push(dt.points[v as usize]);
            }
            nv[i] = remap[v as usize];
        }
        triangles.push(nv);
    }
    // boundary edges: edges used exactly once
    let mut edge_count: std::collections::BTreeMap<(u32, u32), usize> =
        std::collections::BTreeMap::new();
    for t in &triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let inv_remap: std::collections::BTreeMap<u32, u32> = remap
        .iter()
        .enumerate()
        .filter(|(_, &n)| n != u32::MAX)
        .map(|(old, &n)| (n, old as u32))
        .collect();
    let mut boundary = Vec::new();
    for (&(a, b), &cnt) in &edge_count {
        if cnt == 1 {
            let oa = inv_remap[&a];
            let ob = inv_remap[&b];
            let key = (oa.min(ob), oa.max(ob));
            let tag = seg_tag.get(&key).copied().ok_or_else(|| {
                MeshError::Validation("untagged boundary edge after refinement".into())
            })?;
            boundary.push((a, b, tag));
        }
    }
    if remap[vo as usize] == u32::MAX
        || remap[vp1 as usize] == u32::MAX
        || remap[vqj as usize] == u32::MAX
    {
        return Err(MeshError::Validation("corner vertex lost in extraction".into()));
    }
    let corners = Corners {
        origin: remap[vo as usize],
        p1: remap[vp1 as usize],
        qj: remap[vqj as usize],
    };
    let mesh = TriMesh {
        vertices,
        triangles,
        boundary,
        corners: Some(corners),
    };
    mesh.validate()?;
    Ok(mesh)
}

impl<T: Real> TriMesh<T> {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// FNV-1a over the mesh content; keys solution fields to their mesh.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for v in &self.vertices {
            feed(&v.x.as_f64().to_bits().to_le_bytes());
            feed(&v.y.as_f64().to_bits().to_le_bytes());
        }
        for t in &self.triangles {
            for &i in t {
                feed(&i.to_le_bytes());
            }
        }
        for &(a, b, tag) in &self.boundary {
            feed(&a.to_le_bytes());
            feed(&b.to_le_bytes());
            feed(&[tag.as_str().as_bytes()[0], tag.as_str().len() as u8]);
        }
        h
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for &(i, j, _) in &self.boundary {
            b[i as usize] = true;
            b[j as usize] = true;
        }
        b
    }

    /// Tags attached to each vertex through its boundary edges.
    pub fn vertex_tags(&self) -> Vec<Vec<BoundaryTag>> {
        let mut tags: Vec<Vec<BoundaryTag>> = vec![Vec::new(); self.vertices.len()];
        for &(i, j, t) in &self.boundary {
            for v in [i, j] {
                if !tags[v as usize].contains(&t) {
                    tags[v as usize].push(t);
                }
            }
        }
        tags
    }

    /// Euclidean (coordinate) area of a triangle.
    pub fn triangle_area_euclid(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a as usize];
        let pb = self.vertices[b as usize];
        let pc = self.vertices[c as usize];
        ((pb.x - pa.x) * (pc.y - pa.y) - (pb.y - pa.y) * (pc.x - pa.x)) * lit::<T>(0.5)
    }

    /// Hyperbolic area via 3-point (edge midpoint) quadrature of λ².
    pub fn triangle_area_hyp(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a as usize];
        let pb = self.vertices[b as usize];
        let pc = self.vertices[c as usize];
        let ae = self.triangle_area_euclid(t);
        let mids = [
            DiskPoint::new((pa.x + pb.x) * lit::<T>(0.5), (pa.y + pb.y) * lit::<T>(0.5)),
            DiskPoint::new((pb.x + pc.x) * lit::<T>(0.5), (pb.y + pc.y) * lit::<T>(0.5)),
            DiskPoint::new((pc.x + pa.x) * lit::<T>(0.5), (pc.y + pa.y) * lit::<T>(0.5)),
        ];
        let mut s = T::zero();
        for m in mids {
            let lam = conformal_factor(m).unwrap_or_else(|_| T::zero());
            s += lam * lam;
        }
        ae * s / lit::<T>(3.0)
    }

    pub fn total_area_hyp(&self) -> T {
        (0..self.triangles.len())
            .map(|t| self.triangle_area_hyp(t))
            .sum()
    }

    /// Minimum Euclidean interior angle of a triangle (radians).
    pub fn triangle_min_angle(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a as usize].to_complex();
        let pb = self.vertices[b as usize].to_complex();
        let pc = self.vertices[c as usize].to_complex();
        let ang =
            |u: num_complex::Complex<T>, v: num_complex::Complex<T>, w: num_complex::Complex<T>| {
                let e1 = v - u;
                let e2 = w - u;
                let dot = e1.re * e2.re + e1.im * e2.im;
                let cross = (e1.re * e2.im - e1.im * e2.re).abs();
                cross.atan2(dot)
            };
        ang(pa, pb, pc).min(ang(pb, pc, pa)).min(ang(pc, pa, pb))
    }

    /// Ordered boundary chain for a tag: path of vertex indices from the
    /// canonical start corner to the end corner.
    pub fn chain(&self, tag: BoundaryTag) -> Result<Vec<u32>, MeshError> {
        let edges: Vec<(u32, u32)> = self
            .boundary
            .iter()
            .filter(|&&(_, _, t)| t == tag)
            .map(|&(a, b, _)| (a, b))
            .collect();
        if edges.is_empty() {
            return Err(MeshError::Validation(format!(
                "no boundary edges tagged {}",
                tag.as_str()
            )));
        }
        let mut adj: std::collections::BTreeMap<u32, Vec<u32>> = std::collections::BTreeMap::new();
        for &(a, b) in &edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let ends: Vec<u32> = adj
            .iter()
            .filter(|(_, n)| n.len() == 1)
            .map(|(&v, _)| v)
            .collect();
        if ends.len() != 2 {
            return Err(MeshError::Validation(format!(
                "{} chain is not a simple path",
                tag.as_str()
            )));
        }
        // canonical starts: L1 and L2 from the origin corner; cap from p1
        let start = if let Some(c) = self.corners {
            match tag {
                BoundaryTag::L1 | BoundaryTag::L2 => {
                    if ends.contains(&c.origin) {
                        c.origin
                    } else {
                        ends[0]
                    }
                }
                BoundaryTag::GammaCap => {
                    if ends.contains(&c.p1) {
                        c.p1
                    } else {
                        ends[0]
                    }
                }
                BoundaryTag::Trunc => ends[0],
            }
        } else {
            ends[0]
        };
        let mut path = vec![start];
        let mut prev = u32::MAX;
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|&n| n != prev);
            match next {
                Some(nx) => {
                    path.push(nx);
                    prev = cur;
                    cur = nx;
                    if adj[&cur].len() == 1 {
                        break;
                    }
                }
                None => break,
            }
        }
        if path.len() != edges.len() + 1 {
            return Err(MeshError::Validation(format!(
                "{} chain walk incomplete",
                tag.as_str()
            )));
        }
        Ok(path)
    }

    /// Uniform 1→4 subdivision; new boundary vertices are placed at the
    /// hyperbolic midpoint of their edge, which lies on the tagged geodesic.
    pub fn refine(&self) -> TriMesh<T> {
        let mut vertices = self.vertices.clone();
        let mut boundary_edges: std::collections::BTreeMap<(u32, u32), BoundaryTag> =
            std::collections::BTreeMap::new();
        for &(a, b, t) in &self.boundary {
            boundary_edges.insert((a.min(b), a.max(b)), t);
        }
        let mut midpoint: std::collections::BTreeMap<(u32, u32), u32> =
            std::collections::BTreeMap::new();
        {
            let mut get_mid = |vertices: &mut Vec<DiskPoint<T>>, a: u32, b: u32| -> u32 {
                let key = (a.min(b), a.max(b));
                if let Some(&m) = midpoint.get(&key) {
                    return m;
                }
                let pa = vertices[a as usize];
                let pb = vertices[b as usize];
                let m = if boundary_edges.contains_key(&key) {
                    hyp_midpoint(pa, pb)
                } else {
                    DiskPoint::new((pa.x + pb.x) * lit::<T>(0.5), (pa.y + pb.y) * lit::<T>(0.5))
                };
                let idx = vertices.len() as u32;
                vertices.push(m);
                midpoint.insert(key, idx);
                idx
            };
            let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
            for &[a, b, c] in &self.triangles {
                let mab = get_mid(&mut vertices, a, b);
                let mbc = get_mid(&mut vertices, b, c);
                let mca = get_mid(&mut vertices, c, a);
                triangles.push([a, mab, mca]);
                triangles.push([mab, b, mbc]);
                triangles.push([mca, mbc, c]);
                triangles.push([mab, mbc, mca]);
            }
            let mut boundary = Vec::with_capacity(self.boundary.len() * 2);
            for (&(a, b), &t) in &boundary_edges {
                let m = midpoint[&(a, b)];
                boundary.push((a, m, t));
                boundary.push((m, b, t));
            }
            TriMesh {
                vertices,
                triangles,
                boundary,
                corners: self.corners,
            }
        }
    }

    /// Structural checks: conforming, consistently oriented, non-degenerate,
    /// tagged boundary partitioning.
    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.vertices.len() as u32;
        let mut directed: std::collections::BTreeMap<(u32, u32), usize> =
            std::collections::BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(MeshError::Validation(format!("triangle {ti} out of range")));
            }
            if self.triangle_area_euclid(ti) <= T::zero() {
                return Err(MeshError::Validation(format!(
                    "triangle {ti} is degenerate or mis-oriented"
                )));
            }
            for e in 0..3 {
                let key = (t[e], t[(e + 1) % 3]);
                *directed.entry(key).or_insert(0) += 1;
                if directed[&key] > 1 {
                    return Err(MeshError::Validation(format!(
                        "directed edge {key:?} repeated: inconsistent orientation"
                    )));
                }
            }
        }
        // each undirected edge appears once (boundary) or twice (interior)
        let mut boundary_set: std::collections::BTreeSet<(u32, u32)> =
            std::collections::BTreeSet::new();
        for &(a, b, _) in &self.boundary {
            boundary_set.insert((a.min(b), a.max(b)));
        }
        let mut undirected: std::collections::BTreeMap<(u32, u32), usize> =
            std::collections::BTreeMap::new();
        for (&(a, b), _) in &directed {
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        for (&e, &cnt) in &undirected {
            match cnt {
                1 => {
                    if !boundary_set.contains(&e) {
                        return Err(MeshError::Validation(format!(
                            "untagged boundary edge {e:?}"
                        )));
                    }
                }
                2 => {
                    if boundary_set.contains(&e) {
                        return Err(MeshError::Validation(format!(
                            "interior edge {e:?} carries a boundary tag"
                        )));
                    }
                }
                _ => {
                    return Err(MeshError::Validation(format!(
                        "edge {e:?} shared by {cnt} triangles"
                    )))
                }
            }
        }
        // quality: > 5° except in the protection ball at the truncation
        // corner, whose own interior angle can be arbitrarily small.
        let five_deg = lit::<T>(5.0f64.to_radians());
        let tenth_deg = lit::<T>(0.1f64.to_radians());
        let protect = self.corners.map(|c| {
            let qj = self.vertices[c.qj as usize];
            let r = hyp_distance(self.vertices[c.p1 as usize], qj) * lit::<T>(0.25);
            (qj, r)
        });
        for (ti, t) in self.triangles.iter().enumerate() {
            let min_ang = self.triangle_min_angle(ti);
            let in_ball = protect
                .map(|(qj, r)| {
                    t.iter()
                        .all(|&v| hyp_distance(self.vertices[v as usize], qj) < r)
                })
                .unwrap_or(false);
            let bound = if in_ball { tenth_deg } else { five_deg };
            if min_ang <= bound {
                return Err(MeshError::Validation(format!(
                    "triangle {ti} min angle {:.2}° below bound",
                    min_ang.as_f64().to_degrees()
                )));
            }
        }
        Ok(())
    }
}

// --- plain-text mesh format --------------------------------------------------

/// Serialize: `v x y`, `t i j k`, `b i j TAG` lines.
pub fn dump_mesh<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        s.push_str(&format!("v {:.17e} {:.17e}\n", v.x.as_f64(), v.y.as_f64()));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
    }
    for &(a, b, tag) in &mesh.boundary {
        s.push_str(&format!("b {} {} {}\n", a, b, tag.as_str()));
    }
    s
}

/// Parse the plain-text format; corners are recovered from tag incidences.
pub fn load_mesh<T: Real>(text: &str) -> Result<TriMesh<T>, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut boundary = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let kind = it.next().unwrap();
        let parse_err = |what: &str| MeshError::Format(format!("line {}: {}", ln + 1, what));
        match kind {
            "v" => {
                let x: f64 = it
                    .next()
                    .ok_or_else(|| parse_err("missing x"))?
                    .parse()
                    .map_err(|_| parse_err("bad x"))?;
                let y: f64 = it
                    .next()
                    .ok_or_else(|| parse_err("missing y"))?
                    .parse()
                    .map_err(|_| parse_err("bad y"))?;
                vertices.push(DiskPoint::new(lit::<T>(x), lit::<T>(y)));
            }
            "t" => {
                let mut idx = [0u32; 3];
                for v in idx.iter_mut() {
                    *v = it
                        .next()
                        .ok_or_else(|| parse_err("missing index"))?
                        .parse()
                        .map_err(|_| parse_err("bad index"))?;
                }
                triangles.push(idx);
            }
            "b" => {
                let a: u32 = it
                    .next()
                    .ok_or_else(|| parse_err("missing index"))?
                    .parse()
                    .map_err(|_| parse_err("bad index"))?;
                let b: u32 = it
                    .next()
                    .ok_or_else(|| parse_err("missing index"))?
                    .parse()
                    .map_err(|_| parse_err("bad index"))?;
                let tag = BoundaryTag::parse(it.next().ok_or_else(|| parse_err("missing tag"))?)
                    .ok_or_else(|| parse_err("unknown tag"))?;
                boundary.push((a, b, tag));
            }
            _ => return Err(parse_err("unknown record")),
        }
    }
    let mut mesh = TriMesh {
        vertices,
        triangles,
        boundary,
        corners: None,
    };
    // recover corners from tag incidences
    let tags = mesh.vertex_tags();
    let find = |t1: BoundaryTag, t2: BoundaryTag| {
        tags.iter()
            .position(|ts| ts.contains(&t1) && ts.contains(&t2))
            .map(|i| i as u32)
    };
    if let (Some(origin), Some(p1), Some(qj)) = (
        find(BoundaryTag::L1, BoundaryTag::L2),
        find(BoundaryTag::L1, BoundaryTag::GammaCap),
        find(BoundaryTag::L2, BoundaryTag::GammaCap),
    ) {
        mesh.corners = Some(Corners { origin, p1, qj });
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn alpha_min_values() {
        // bisection oracle on the perpendicularity condition at p1
        let oracle = |k: u32| -> f64 {
            let mut lo = 0.05f64;
            let mut hi = 0.95f64;
            let angle_at_p1 = |alpha: f64| -> f64 {
                let p1 = DiskPoint::new(alpha, 0.0);
                let to_origin = geodesic_through(p1, DiskPoint::origin()).unwrap();
                let to_p2 = geodesic_through(p1, IdealPoint::new(PI / k as f64)).unwrap();
                angle_between(p1, &to_origin, &to_p2).unwrap()
            };
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                // angle decreases from ~π toward 0 as alpha grows
                if angle_at_p1(mid) > PI / 2.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let a3: f64 = alpha_min(3).unwrap();
        let a4: f64 = alpha_min(4).unwrap();
        assert_relative_eq!(a3, oracle(3), epsilon = 1e-9);
        assert_relative_eq!(a4, oracle(4), epsilon = 1e-9);
        // closed forms: tan(π/12) = 2−√3 and tan(π/8) = √2−1
        assert_relative_eq!(a3, 0.2679491924311227, epsilon = 1e-12);
        assert_relative_eq!(a4, std::f64::consts::SQRT_2 - 1.0, epsilon = 1e-12);
        // defining property: right angle at p1 for the returned alpha
        for (k, a) in [(3u32, a3), (4, a4)] {
            let p1 = DiskPoint::new(a, 0.0);
            let g1 = geodesic_through(p1, DiskPoint::origin()).unwrap();
            let g2 = geodesic_through(p1, IdealPoint::new(PI / k as f64)).unwrap();
            let ang = angle_between(p1, &g1, &g2).unwrap();
            assert_relative_eq!(ang, PI / 2.0, epsilon = 1e-9);
        }
        assert!(alpha_min::<f64>(2).is_err());
    }

    fn default_wedge() -> TriMesh<f64> {
        let spec = WedgeSpec::new(2, 0.5f64, 0.1, 0.12).unwrap();
        build_wedge(&spec).unwrap()
    }

    #[test]
    fn wedge_mesh_is_valid_and_tagged() {
        let mesh = default_wedge();
        assert!(mesh.n_vertices() > 50);
        mesh.validate().unwrap();
        // all three chains exist and connect the right corners
        let c = mesh.corners.unwrap();
        let l1 = mesh.chain(BoundaryTag::L1).unwrap();
        assert_eq!(*l1.first().unwrap(), c.origin);
        assert_eq!(*l1.last().unwrap(), c.p1);
        let l2 = mesh.chain(BoundaryTag::L2).unwrap();
        assert_eq!(*l2.first().unwrap(), c.origin);
        assert_eq!(*l2.last().unwrap(), c.qj);
        let cap = mesh.chain(BoundaryTag::GammaCap).unwrap();
        assert_eq!(*cap.first().unwrap(), c.p1);
        assert_eq!(*cap.last().unwrap(), c.qj);
    }

    #[test]
    fn corner_angle_at_origin_matches_oracle() {
        let spec = WedgeSpec::new(2, 0.5f64, 0.1, 0.12).unwrap();
        let mesh = build_wedge(&spec).unwrap();
        let c = mesh.corners.unwrap();
        // corner angle at the origin: π/2 − ∠p₂0q_j for k = 2
        let ang_target = PI / 2.0 - corner_angle_at_origin(2, spec.cap_point).unwrap();
        // sum of triangle angles at the origin corner
        let mut sum = 0.0;
        for t in &mesh.triangles {
            if let Some(i) = t.iter().position(|&v| v == c.origin) {
                let u = mesh.vertices[t[(i + 1) % 3] as usize].to_complex();
                let w = mesh.vertices[t[(i + 2) % 3] as usize].to_complex();
                let p = mesh.vertices[c.origin as usize].to_complex();
                let e1 = u - p;
                let e2 = w - p;
                let dot = e1.re * e2.re + e1.im * e2.im;
                let cross = (e1.re * e2.im - e1.im * e2.re).abs();
                sum += cross.atan2(dot);
            }
        }
        assert!(
            (sum - ang_target).abs() < 1e-3,
            "corner angle {sum} vs {ang_target}"
        );
    }

    #[test]
    fn area_matches_gauss_bonnet_defect() {
        // hyperbolic triangle area = π − (sum of corner angles), K = −1
        let spec = WedgeSpec::new(2, 0.5f64, 0.1, 0.12).unwrap();
        let mesh = build_wedge(&spec).unwrap();
        let p1 = spec.p1();
        let qj = spec.cap_point;
        let o = DiskPoint::origin();
        let ang = |at: DiskPoint<f64>, u: DiskPoint<f64>, w: DiskPoint<f64>| {
            let g1 = geodesic_through(at, u).unwrap();
            let g2 = geodesic_through(at, w).unwrap();
            angle_between(at, &g1, &g2).unwrap()
        };
        let defect = PI - (ang(o, p1, qj) + ang(p1, o, qj) + ang(qj, o, p1));
        let area = mesh.total_area_hyp();
        assert!(
            (area - defect).abs() / defect < 0.02,
            "area {area} vs defect {defect}"
        );
    }

    #[test]
    fn degenerate_cap_point_rejected() {
        // trunc = 0 places q_j at the ideal vertex: invalid
        assert!(WedgeSpec::new(2, 0.5f64, 0.0, 0.1).is_err());
        // q_j = p1 is degenerate (Euclidean distance from p2 = i to p1 = 0.5)
        let d: f64 = (0.25f64 + 1.0).sqrt();
        assert!(WedgeSpec::new(2, 0.5, d, 0.1).is_err());
    }

    #[test]
    fn refine_quadruples_and_projects_boundary() {
        let spec = WedgeSpec::new(2, 0.5f64, 0.15, 0.18).unwrap();
        let mesh = build_wedge(&spec).unwrap();
        let fine = mesh.refine();
        assert_eq!(fine.n_triangles(), 4 * mesh.n_triangles());
        fine.validate().unwrap();
        // boundary vertices lie on their geodesics
        let gamma = spec.gamma().unwrap();
        let l1 = geodesic_through(DiskPoint::origin(), spec.p1()).unwrap();
        let l2 = geodesic_through(DiskPoint::origin(), spec.cap_point).unwrap();
        for &(a, b, tag) in &fine.boundary {
            let g = match tag {
                BoundaryTag::L1 => &l1,
                BoundaryTag::L2 => &l2,
                BoundaryTag::GammaCap => &gamma,
                BoundaryTag::Trunc => continue,
            };
            for v in [a, b] {
                let r = g.residual(fine.vertices[v as usize].to_complex());
                assert!(r < 1e-12, "boundary residual {r}");
            }
        }
        // area is mesh-independent up to discretization
        let a0 = mesh.total_area_hyp();
        let a1 = fine.total_area_hyp();
        assert!((a0 - a1).abs() / a0 < 1e-3, "{a0} vs {a1}");
    }

    #[test]
    fn grading_is_monotone_toward_qj() {
        let spec = WedgeSpec::new(2, 0.5f64, 0.1, 0.12).unwrap();
        let mesh = build_wedge(&spec).unwrap();
        let qj = spec.cap_point;
        let max_edge_at = |r: f64| -> f64 {
            let mut m: f64 = 0.0;
            for t in &mesh.triangles {
                for e in 0..3 {
                    let a = mesh.vertices[t[e] as usize];
                    let b = mesh.vertices[t[(e + 1) % 3] as usize];
                    if hyp_distance(a, qj) < r && hyp_distance(b, qj) < r {
                        m = m.max(delaunay::edge_hyp_len(a, b));
                    }
                }
            }
            m
        };
        let radii = [1.2, 0.6, 0.3, 0.15];
        let mut last = f64::INFINITY;
        for r in radii {
            let m = max_edge_at(r);
            assert!(m > 0.0);
            assert!(m <= last + 1e-12, "grading not monotone at r={r}");
            last = m;
        }
    }

    #[test]
    fn interior_sizes_near_target() {
        let spec = WedgeSpec::new(2, 0.5f64, 0.1, 0.12).unwrap();
        let mesh = build_wedge(&spec).unwrap();
        // away from the graded corners, edges ≈ target_h
        let mut count = 0;
        for t in &mesh.triangles {
            for e in 0..3 {
                let a = mesh.vertices[t[e] as usize];
                let b = mesh.vertices[t[(e + 1) % 3] as usize];
                let far = hyp_distance(a, spec.cap_point) > 1.0
                    && hyp_distance(a, spec.p1()) > 1.0
                    && spec.gamma().unwrap().signed_distance(a).abs() > 0.6;
                if far {
                    let l = delaunay::edge_hyp_len(a, b);
                    assert!(l < 2.2 * 0.12, "oversized edge {l}");
                    count += 1;
                }
            }
        }
        assert!(count > 10);
    }

    #[test]
    fn convexity_of_boundary() {
        // every interior angle of the polygonal boundary ≤ π (+ tol)
        let mesh = default_wedge();
        let is_b = mesh.is_boundary_vertex();
        for (v, &b) in is_b.iter().enumerate() {
            if !b {
                continue;
            }
            let mut sum = 0.0;
            for t in &mesh.triangles {
                if let Some(i) = t.iter().position(|&w| w == v as u32) {
                    let p = mesh.vertices[v].to_complex();
                    let u = mesh.vertices[t[(i + 1) % 3] as usize].to_complex();
                    let w = mesh.vertices[t[(i + 2) % 3] as usize].to_complex();
                    let e1 = u - p;
                    let e2 = w - p;
                    let dot = e1.re * e2.re + e1.im * e2.im;
                    let cross = (e1.re * e2.im - e1.im * e2.re).abs();
                    sum += cross.atan2(dot);
                }
            }
            assert!(sum <= PI + 0.05, "reflex boundary angle {sum} at {v}");
        }
    }

    #[test]
    fn dump_load_roundtrip() {
        let mesh = default_wedge();
        let text = dump_mesh(&mesh);
        let back: TriMesh<f64> = load_mesh(&text).unwrap();
        assert_eq!(back.n_vertices(), mesh.n_vertices());
        assert_eq!(back.n_triangles(), mesh.n_triangles());
        assert_eq!(back.corners, mesh.corners);
        assert_eq!(back.checksum(), mesh.checksum());
        // malformed line reports its number
        let bad = format!("{}\nv oops 0.3\n", text);
        match load_mesh::<f64>(&bad) {
            Err(MeshError::Format(msg)) => assert!(msg.contains("line")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn capacity_error_suggests_coarser() {
        let mut spec = WedgeSpec::new(2, 0.5, 0.05, 0.01).unwrap();
        spec.opts.max_vertices = 500;
        match build_wedge(&spec) {
            Err(MeshError::Capacity {
                vertices,
                suggested_target_h,
            }) => {
                assert!(vertices >= 500);
                assert!(suggested_target_h > 0.01);
            }
            Ok(m) => panic!("expected capacity error, got mesh with {} vertices", m.n_vertices()),
            Err(other) => panic!("expected capacity error, got {other:?}"),
        }
    }
}
