//! Immersed surfaces in H²×ℝ and their discrete differential geometry:
//! fundamental forms, the angle function ν, the tangential vertical field T,
//! shape operator, Gauss curvature via the product-space Gauss equation
//! K = det S − (1 − |T|²), total curvature, and the Gauss–Bonnet audit of a
//! capped piece.
//!
//! Geometry is extracted by local quadratic fits of positions in normal
//! coordinates of the product metric, so it applies to graphs and to
//! integrated (non-graph) immersions alike.

use crate::graphsolve::ScalarField;
use crate::hypgeom::product::{product_distance, product_exp, product_log, FrameVec};
use crate::hypgeom::{DiskPoint, SpaceIsometry, SpacePoint};
use crate::linalg::{solve_dense_sym, sym3_smallest_eigvec, Mat3};
use crate::meshdom::{BoundaryTag, TriMesh};
use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfError {
    #[error("invalid immersion: {0}")]
    Invalid(String),
    #[error("field/mesh mismatch")]
    Mismatch,
    #[error("degenerate triangle metric at triangle {0}")]
    DegenerateMetric(usize),
    #[error("boundary decomposition inconsistent: {0}")]
    BadBoundary(String),
}

/// Labels for the boundary arcs of a piece (γ₁..γ₅ of a capped solve).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcLabel {
    /// γ₁: horizontal geodesic at height 0 from the origin to p₁ (on L₁).
    FloorL1,
    /// γ₂: vertical segment at p₁ from height 0 to the cap height.
    WallP1,
    /// γ₃: horizontal geodesic at cap height over p₁q_j.
    Cap,
    /// γ₄: vertical segment at q_j from cap height down to 0.
    WallQj,
    /// γ₅: horizontal geodesic at height 0 from q_j back to the origin (L₂).
    FloorL2,
    /// unlabeled boundary (custom immersions).
    Free,
}

#[derive(Debug, Clone)]
pub struct BoundaryChain {
    pub label: ArcLabel,
    pub verts: Vec<u32>,
}

/// Immersed triangulated surface in H²×ℝ.
#[derive(Debug, Clone)]
pub struct Immersion<T> {
    pub positions: Vec<SpacePoint<T>>,
    pub triangles: Vec<[u32; 3]>,
    /// per-triangle first fundamental form (g11, g12, g22) of the edge basis
    /// (P₁→P₂, P₁→P₃), from ambient geodesic distances
    pub fff: Vec<[T; 3]>,
    pub chains: Vec<BoundaryChain>,
    /// vertex index of the distinguished basepoint (origin corner), if any
    pub basepoint: Option<u32>,
}

fn fff_from_positions<T: Real>(
    positions: &[SpacePoint<T>],
    triangles: &[[u32; 3]],
) -> Result<Vec<[T; 3]>, SurfError> {
    let mut fff = Vec::with_capacity(triangles.len());
    for (ti, t) in triangles.iter().enumerate() {
        let a = positions[t[0] as usize];
        let b = positions[t[1] as usize];
        let c = positions[t[2] as usize];
        let l12 = product_distance(a, b);
        let l13 = product_distance(a, c);
        let l23 = product_distance(b, c);
        let g11 = l12 * l12;
        let g22 = l13 * l13;
        let g12 = (g11 + g22 - l23 * l23) * lit::<T>(0.5);
        let det = g11 * g22 - g12 * g12;
        if !(det > T::zero()) || !(g11 > T::zero()) {
            return Err(SurfError::DegenerateMetric(ti));
        }
        fff.push([g11, g12, g22]);
    }
    Ok(fff)
}

impl<T: Real> Immersion<T> {
    /// Direct position input (ruled test patches, integrated immersions).
    pub fn from_positions(
        triangles: Vec<[u32; 3]>,
        positions: Vec<SpacePoint<T>>,
        chains: Vec<BoundaryChain>,
        basepoint: Option<u32>,
    ) -> Result<Self, SurfError> {
        let fff = fff_from_positions(&positions, &triangles)?;
        Ok(Self {
            positions,
            triangles,
            fff,
            chains,
            basepoint,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let g = self.fff[t];
        (g[0] * g[2] - g[1] * g[1]).max(T::zero()).sqrt() * lit::<T>(0.5)
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Interior angle of triangle `t` at its local vertex `i`, in the
    /// immersed metric (law of cosines on ambient side lengths).
    pub fn corner_angle(&self, t: usize, i: usize) -> T {
        let tv = self.triangles[t];
        let p = self.positions[tv[i] as usize];
        let q = self.positions[tv[(i + 1) % 3] as usize];
        let r = self.positions[tv[(i + 2) % 3] as usize];
        let b = product_distance(p, q);
        let c = product_distance(p, r);
        let a = product_distance(q, r);
        let cosv = ((b * b + c * c - a * a) / (lit::<T>(2.0) * b * c))
            .max(-T::one())
            .min(T::one());
        cosv.acos()
    }

    /// Sum of incident triangle angles at a vertex (one-ring development).
    pub fn angle_sum(&self, v: u32) -> T {
        let mut s = T::zero();
        for (ti, t) in self.triangles.iter().enumerate() {
            if let Some(i) = t.iter().position(|&w| w == v) {
                s += self.corner_angle(ti, i);
            }
        }
        s
    }

    /// Apply an ambient isometry to every vertex position.
    pub fn transformed(&self, iso: &SpaceIsometry<T>) -> Result<Self, SurfError> {
        let positions: Vec<SpacePoint<T>> =
            self.positions.iter().map(|&p| iso.apply(p)).collect();
        // reflections reverse orientation; flip triangles to keep them valid
        let (_, conj, eps) = iso.frame_derivative(DiskPoint::origin());
        let flip = conj ^ (eps < T::zero());
        let triangles: Vec<[u32; 3]> = if flip {
            self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect()
        } else {
            self.triangles.clone()
        };
        let fff = fff_from_positions(&positions, &triangles)?;
        Ok(Self {
            positions,
            triangles,
            fff,
            chains: self.chains.clone(),
            basepoint: self.basepoint,
        })
    }
}

/// Graph immersion (x, y) ↦ (x, y, u(x, y)).
pub fn immerse<T: Real>(mesh: &TriMesh<T>, u: &ScalarField<T>) -> Result<Immersion<T>, SurfError> {
    u.check(mesh).map_err(|_| SurfError::Mismatch)?;
    let positions: Vec<SpacePoint<T>> = mesh
        .vertices
        .iter()
        .zip(&u.values)
        .map(|(&p, &t)| SpacePoint::new(p, t))
        .collect();
    let fff = fff_from_positions(&positions, &mesh.triangles)?;
    let mut chains = Vec::new();
    for (tag, label) in [
        (BoundaryTag::L1, ArcLabel::FloorL1),
        (BoundaryTag::GammaCap, ArcLabel::Cap),
        (BoundaryTag::L2, ArcLabel::FloorL2),
    ] {
        if let Ok(path) = mesh.chain(tag) {
            chains.push(BoundaryChain { label, verts: path });
        }
    }
    Ok(Immersion {
        positions,
        triangles: mesh.triangles.clone(),
        fff,
        chains,
        basepoint: mesh.corners.map(|c| c.origin),
    })
}

/// Graph immersion of a capped solve with the two vertical data-jump
/// segments resolved as triangle fans, so the boundary decomposes into the
/// five geodesic arcs γ₁..γ₅.
pub fn immerse_capped<T: Real>(
    mesh: &TriMesh<T>,
    u: &ScalarField<T>,
    cap: T,
    wall_subdiv: usize,
) -> Result<Immersion<T>, SurfError> {
    u.check(mesh).map_err(|_| SurfError::Mismatch)?;
    let corners = mesh
        .corners
        .ok_or_else(|| SurfError::Invalid("capped immersion needs marked corners".into()))?;
    let m = wall_subdiv.max(1);
    let mut positions: Vec<SpacePoint<T>> = mesh
        .vertices
        .iter()
        .zip(&u.values)
        .map(|(&p, &t)| SpacePoint::new(p, t))
        .collect();
    let mut triangles = mesh.triangles.clone();
    let cap_chain = mesh
        .chain(BoundaryTag::GammaCap)
        .map_err(|e| SurfError::BadBoundary(e.to_string()))?;
    if cap_chain.len() < 3 {
        return Err(SurfError::BadBoundary("cap chain too short for fans".into()));
    }
    let p1 = corners.p1;
    let qj = corners.qj;
    let w = cap_chain[1]; // first cap vertex after p1
    let wq = cap_chain[cap_chain.len() - 2]; // last cap vertex before qj
    let p1_pos = mesh.vertices[p1 as usize];
    let qj_pos = mesh.vertices[qj as usize];

    // wall at p1: V_0 = p1 (height 0), V_1..V_m stacked to the cap height
    let mut wall_p1 = vec![p1];
    for j in 1..=m {
        let t = cap * T::from_usize(j).unwrap() / T::from_usize(m).unwrap();
        positions.push(SpacePoint::new(p1_pos, t));
        wall_p1.push((positions.len() - 1) as u32);
    }
    for j in 0..m {
        triangles.push([w, wall_p1[j], wall_p1[j + 1]]);
    }
    // wall at qj: W_0 = qj (height 0), W_1..W_m up to cap height
    let mut wall_qj = vec![qj];
    for j in 1..=m {
        let t = cap * T::from_usize(j).unwrap() / T::from_usize(m).unwrap();
        positions.push(SpacePoint::new(qj_pos, t));
        wall_qj.push((positions.len() - 1) as u32);
    }
    for j in 0..m {
        triangles.push([wq, wall_qj[j + 1], wall_qj[j]]);
    }

    let fff = fff_from_positions(&positions, &triangles)?;
    let l1 = mesh
        .chain(BoundaryTag::L1)
        .map_err(|e| SurfError::BadBoundary(e.to_string()))?;
    let l2 = mesh
        .chain(BoundaryTag::L2)
        .map_err(|e| SurfError::BadBoundary(e.to_string()))?;
    // γ₃ runs from the wall top at p1 over the cap chain interior to the
    // wall top at qj
    let mut cap_arc = vec![*wall_p1.last().unwrap()];
    cap_arc.extend(&cap_chain[1..cap_chain.len() - 1]);
    cap_arc.push(*wall_qj.last().unwrap());
    let mut l2_rev = l2.clone();
    l2_rev.reverse();
    let chains = vec![
        BoundaryChain {
            label: ArcLabel::FloorL1,
            verts: l1,
        },
        BoundaryChain {
            label: ArcLabel::WallP1,
            verts: wall_p1,
        },
        BoundaryChain {
            label: ArcLabel::Cap,
            verts: cap_arc,
        },
        BoundaryChain {
            label: ArcLabel::WallQj,
            verts: wall_qj.into_iter().rev().collect(),
        },
        BoundaryChain {
            label: ArcLabel::FloorL2,
            verts: l2_rev,
        },
    ];
    Ok(Immersion {
        positions,
        triangles,
        fff,
        chains,
        basepoint: Some(corners.origin),
    })
}

/// Per-vertex and per-triangle differential geometry.
#[derive(Debug, Clone)]
pub struct GeometryFields<T> {
    /// per-vertex adapted frame (a₁, a₂, N) in ambient frame components
    pub vertex_frame: Vec<[FrameVec<T>; 3]>,
    /// per-vertex angle function ν = ⟨N, ∂t⟩
    pub nu: Vec<T>,
    /// per-vertex tangential part of ∂t (ambient frame components)
    pub t_field: Vec<FrameVec<T>>,
    /// per-triangle shape operator (s11, s12, s22) in the fitted frame
    pub shape: Vec<[T; 3]>,
    /// per-triangle Gauss curvature K = det S − (1 − |T|²)
    pub k: Vec<T>,
    /// per-triangle ν at the fit point
    pub tri_nu: Vec<T>,
    /// per-triangle area (from the first fundamental form)
    pub area: Vec<T>,
    /// per-triangle unit normal (ambient frame components at the fit point)
    pub tri_normal: Vec<FrameVec<T>>,
}

struct Fit<T> {
    normal: FrameVec<T>,
    frame: [FrameVec<T>; 2],
    hessian: [T; 3],
}

/// Weighted quadratic fit of the surface over its tangent plane in product
/// normal coordinates at `base`. `orient` fixes the normal sign.
fn local_fit<T: Real>(
    base: SpacePoint<T>,
    stencil: &[SpacePoint<T>],
    orient: FrameVec<T>,
) -> Option<Fit<T>> {
    if stencil.len() < 5 {
        return None;
    }
    let logs: Vec<FrameVec<T>> = stencil.iter().map(|&p| product_log(base, p)).collect();
    let scale = logs
        .iter()
        .map(|v| v.norm())
        .fold(T::zero(), |a, b| a.max(b))
        .max(lit(1e-12));
    let sig2 = scale * scale;
    let weights: Vec<T> = logs
        .iter()
        .map(|v| (-v.dot(v) / sig2).exp())
        .collect();
    // PCA normal
    let mut mom = Mat3([T::zero(); 9]);
    for (v, &w) in logs.iter().zip(&weights) {
        let x = v.xyz();
        for i in 0..3 {
            for j in 0..3 {
                mom.0[i * 3 + j] += w * x[i] * x[j];
            }
        }
    }
    let n0 = sym3_smallest_eigvec(mom);
    let mut normal = FrameVec::from_xyz(n0[0], n0[1], n0[2]).normalized();
    if normal.dot(&orient) < T::zero() {
        normal = normal.scale(-T::one());
    }
    // two fit passes with frame update
    let mut hess = [T::zero(); 3];
    let mut frame = [FrameVec::zero(), FrameVec::zero()];
    for pass in 0..2 {
        // in-plane frame: project the smaller-|component| axis
        let seed = if normal.h.re.abs() < lit::<T>(0.9) {
            FrameVec::from_xyz(T::one(), T::zero(), T::zero())
        } else {
            FrameVec::from_xyz(T::zero(), T::one(), T::zero())
        };
        let a1 = seed
            .sub(&normal.scale(seed.dot(&normal)))
            .normalized();
        let a2 = normal.cross(&a1);
        // LS for [d1, d2, a, b, c, e]
        let mut ata = [T::zero(); 36];
        let mut atb = [T::zero(); 6];
        for (v, &w) in logs.iter().zip(&weights) {
            let e1 = v.dot(&a1);
            let e2 = v.dot(&a2);
            let z = v.dot(&normal);
            let row = [
                e1,
                e2,
                e1 * e1 * lit::<T>(0.5),
                e1 * e2,
                e2 * e2 * lit::<T>(0.5),
                T::one(),
            ];
            for i in 0..6 {
                for j in 0..6 {
                    ata[i * 6 + j] += w * row[i] * row[j];
                }
                atb[i] += w * row[i] * z;
            }
        }
        if solve_dense_sym(6, &mut ata, &mut atb).is_err() {
            return None;
        }
        let (d1, d2) = (atb[0], atb[1]);
        hess = [atb[2], atb[3], atb[4]];
        frame = [a1, a2];
        if pass == 0 {
            // tilt the normal by the fitted gradient and refit
            let newn = normal
                .sub(&a1.scale(d1))
                .sub(&a2.scale(d2));
            normal = newn.normalized();
        }
    }
    Some(Fit {
        normal,
        frame,
        hessian: hess,
    })
}

/// Compute the geometry fields of an immersion.
pub fn geometry<T: Real>(imm: &Immersion<T>) -> Result<GeometryFields<T>, SurfError> {
    let n = imm.n_vertices();
    let nt = imm.triangles.len();
    // adjacency
    let mut ring: Vec<Vec<u32>> = vec![Vec::new(); n];
    for t in &imm.triangles {
        for i in 0..3 {
            let a = t[i];
            let b = t[(i + 1) % 3];
            if !ring[a as usize].contains(&b) {
                ring[a as usize].push(b);
            }
            if !ring[b as usize].contains(&a) {
                ring[b as usize].push(a);
            }
        }
    }
    for r in ring.iter_mut() {
        r.sort_unstable();
    }
    // crude per-triangle normals for orientation
    let tri_n0: Vec<FrameVec<T>> = imm
        .triangles
        .iter()
        .map(|t| {
            let a = imm.positions[t[0] as usize];
            let b = imm.positions[t[1] as usize];
            let c = imm.positions[t[2] as usize];
            let u = product_log(a, b);
            let v = product_log(a, c);
            u.cross(&v).normalized()
        })
        .collect();
    let mut vert_orient: Vec<FrameVec<T>> = vec![FrameVec::zero(); n];
    for (ti, t) in imm.triangles.iter().enumerate() {
        for &v in t {
            vert_orient[v as usize] = vert_orient[v as usize].add(&tri_n0[ti]);
        }
    }

    let stencil_of = |center: u32| -> Vec<u32> {
        let mut s: Vec<u32> = ring[center as usize].clone();
        for _ in 0..4 {
            if s.len() >= 8 {
                break;
            }
            let mut ext = s.clone();
            for &u in &s {
                for &w in &ring[u as usize] {
                    if w != center && !ext.contains(&w) {
                        ext.push(w);
                    }
                }
            }
            ext.sort_unstable();
            if ext.len() == s.len() {
                break;
            }
            s = ext;
        }
        s
    };

    let mut vertex_frame = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    let mut t_field = Vec::with_capacity(n);
    for v in 0..n {
        let base = imm.positions[v];
        let pts: Vec<SpacePoint<T>> = stencil_of(v as u32)
            .iter()
            .map(|&u| imm.positions[u as usize])
            .collect();
        let fit = local_fit(base, &pts, vert_orient[v]).ok_or_else(|| {
            SurfError::Invalid(format!("vertex {v}: geometry fit failed (thin stencil)"))
        })?;
        let e3 = FrameVec::from_xyz(T::zero(), T::zero(), T::one());
        let nv = fit.normal.v; // ν = ⟨N, ∂t⟩
        let tvec = e3.sub(&fit.normal.scale(nv));
        vertex_frame.push([fit.frame[0], fit.frame[1], fit.normal]);
        nu.push(nv);
        t_field.push(tvec);
    }

    let mut shape = Vec::with_capacity(nt);
    let mut k = Vec::with_capacity(nt);
    let mut tri_nu = Vec::with_capacity(nt);
    let mut area = Vec::with_capacity(nt);
    let mut tri_normal = Vec::with_capacity(nt);
    for (ti, t) in imm.triangles.iter().enumerate() {
        // fit base: triangle midpoint via the exponential map from vertex 0
        let a = imm.positions[t[0] as usize];
        let b = imm.positions[t[1] as usize];
        let c = imm.positions[t[2] as usize];
        let vb = product_log(a, b);
        let vc = product_log(a, c);
        let mid = product_exp(a, vb.add(&vc).scale(lit::<T>(1.0 / 3.0)));
        let mut sten: Vec<u32> = Vec::new();
        for &v in t {
            for u in stencil_of(v) {
                if !sten.contains(&u) {
                    sten.push(u);
                }
            }
            if !sten.contains(&v) {
                sten.push(v);
            }
        }
        sten.sort_unstable();
        let pts: Vec<SpacePoint<T>> = sten.iter().map(|&u| imm.positions[u as usize]).collect();
        let fit = local_fit(mid, &pts, tri_n0[ti])
            .ok_or_else(|| SurfError::Invalid(format!("triangle {ti}: geometry fit failed")))?;
        let s = fit.hessian;
        let nv = fit.normal.v;
        let t2 = (T::one() - nv * nv).max(T::zero());
        let det_s = s[0] * s[2] - s[1] * s[1];
        shape.push(s);
        k.push(det_s - (T::one() - t2));
        tri_nu.push(nv);
        area.push(imm.triangle_area(ti));
        tri_normal.push(fit.normal);
    }
    Ok(GeometryFields {
        vertex_frame,
        nu,
        t_field,
        shape,
        k,
        tri_nu,
        area,
        tri_normal,
    })
}

/// Total curvature ∫K dA (sum of per-triangle K times area).
pub fn total_curvature<T: Real>(imm: &Immersion<T>, fields: &GeometryFields<T>) -> T {
    let _ = imm;
    fields
        .k
        .iter()
        .zip(&fields.area)
        .map(|(&k, &a)| k * a)
        .sum()
}

/// Gauss–Bonnet bookkeeping of a capped piece with boundary γ₁..γ₅.
#[derive(Debug, Clone)]
pub struct GbAudit<T> {
    pub integral_k: T,
    /// discrete geodesic-curvature integral per arc (turning of the
    /// developed boundary at interior chain vertices)
    pub arc_kg: Vec<(ArcLabel, T)>,
    /// exterior angles at the five corners v₁..v₅
    pub exterior_angles: [T; 5],
    /// 2π − ∫K − Σ∫k_g − Σθ
    pub closure_residual: T,
}

pub fn gauss_bonnet_audit<T: Real>(
    imm: &Immersion<T>,
    fields: &GeometryFields<T>,
) -> Result<GbAudit<T>, SurfError> {
    let order = [
        ArcLabel::FloorL1,
        ArcLabel::WallP1,
        ArcLabel::Cap,
        ArcLabel::WallQj,
        ArcLabel::FloorL2,
    ];
    let mut arcs = Vec::new();
    for lbl in order {
        let chain = imm
            .chains
            .iter()
            .find(|c| c.label == lbl)
            .ok_or_else(|| SurfError::BadBoundary(format!("missing arc {lbl:?}")))?;
        arcs.push(chain);
    }
    // chain endpoints must link up into a loop
    for i in 0..5 {
        let cur = arcs[i];
        let nxt = arcs[(i + 1) % 5];
        if cur.verts.last() != nxt.verts.first() {
            return Err(SurfError::BadBoundary(format!(
                "arc {:?} does not connect to {:?}",
                cur.label, nxt.label
            )));
        }
    }
    let mut arc_kg = Vec::new();
    for chain in &arcs {
        let mut kg = T::zero();
        for &v in &chain.verts[1..chain.verts.len() - 1] {
            kg += T::PI() - imm.angle_sum(v);
        }
        arc_kg.push((chain.label, kg));
    }
    let mut exterior = [T::zero(); 5];
    for (i, chain) in arcs.iter().enumerate() {
        let corner = chain.verts[0];
        exterior[i] = T::PI() - imm.angle_sum(corner);
    }
    let ik = total_curvature(imm, fields);
    let total_kg: T = arc_kg.iter().map(|&(_, v)| v).sum();
    let total_th: T = exterior.iter().copied().sum();
    let closure = T::PI() + T::PI() - ik - total_kg - total_th;
    Ok(GbAudit {
        integral_k: ik,
        arc_kg,
        exterior_angles: exterior,
        closure_residual: closure,
    })
}

/// CSV with one row per triangle: index, K, area, detS, nu.
pub fn curvature_csv<T: Real>(fields: &GeometryFields<T>) -> String {
    let mut s = String::from("triangle,k,area,det_s,nu\n");
    for i in 0..fields.k.len() {
        let sh = fields.shape[i];
        let det = sh[0] * sh[2] - sh[1] * sh[1];
        s.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            i,
            fields.k[i].as_f64(),
            fields.area[i].as_f64(),
            det.as_f64(),
            fields.tri_nu[i].as_f64()
        ));
    }
    s
}

/// Summary row for a Gauss–Bonnet audit.
pub fn audit_csv<T: Real>(audit: &GbAudit<T>) -> String {
    let mut s = String::from(
        "integral_k,theta1,theta2,theta3,theta4,theta5,kg1,kg2,kg3,kg4,kg5,closure\n",
    );
    s.push_str(&format!(
        "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n",
        audit.integral_k.as_f64(),
        audit.exterior_angles[0].as_f64(),
        audit.exterior_angles[1].as_f64(),
        audit.exterior_angles[2].as_f64(),
        audit.exterior_angles[3].as_f64(),
        audit.exterior_angles[4].as_f64(),
        audit.arc_kg[0].1.as_f64(),
        audit.arc_kg[1].1.as_f64(),
        audit.arc_kg[2].1.as_f64(),
        audit.arc_kg[3].1.as_f64(),
        audit.arc_kg[4].1.as_f64(),
        audit.closure_residual.as_f64()
    ));
    s
}

/// Ruled vertical-plane patch over a geodesic through two disk points:
/// positions (γ(s), t) on an (ns+1)×(nt+1) grid. A totally geodesic, flat
/// test surface (not a graph).
pub fn vertical_plane_patch<T: Real>(
    a: DiskPoint<T>,
    b: DiskPoint<T>,
    t_range: (T, T),
    ns: usize,
    nt: usize,
) -> Result<Immersion<T>, SurfError> {
    use crate::hypgeom::{geodesic_through, h2_exp, h2_log};
    let g = geodesic_through(a, b).map_err(|e| SurfError::Invalid(e.to_string()))?;
    let _ = g;
    let dir = h2_log(a, b);
    let len = dir.norm();
    let mut positions = Vec::new();
    for i in 0..=ns {
        let s = len * T::from_usize(i).unwrap() / T::from_usize(ns).unwrap();
        let p = h2_exp(a, dir / len * s);
        for j in 0..=nt {
            let t = t_range.0
                + (t_range.1 - t_range.0) * T::from_usize(j).unwrap() / T::from_usize(nt).unwrap();
            positions.push(SpacePoint::new(p, t));
        }
    }
    let idx = |i: usize, j: usize| (i * (nt + 1) + j) as u32;
    let mut triangles = Vec::new();
    for i in 0..ns {
        for j in 0..nt {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Immersion::from_positions(triangles, positions, Vec::new(), Some(0))
}
