//! Incremental Delaunay triangulation (Bowyer–Watson) with Ruppert-style
//! quality/size refinement on a curved-boundary domain.
//!
//! Boundary segments live on known geodesics, so segment splits insert the
//! hyperbolic midpoint of the endpoints, which lies on the curve exactly.

use crate::hypgeom::{conformal_factor, hyp_midpoint, DiskPoint};
use crate::scalar::{lit, Real};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [u32; 3],
    /// neighbor across the edge opposite v[i]
    n: [u32; 3],
    alive: bool,
}

/// A constrained boundary subsegment carrying its chain id.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: u32,
    pub b: u32,
    pub chain: u32,
}

pub struct Delaunay<T> {
    pub points: Vec<DiskPoint<T>>,
    tris: Vec<Tri>,
    hint: u32,
    pub max_vertices: usize,
    /// live multiplicity of each undirected edge
    edges: std::collections::BTreeMap<(u32, u32), u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum MeshBuildError {
    #[error("vertex budget exceeded: {0} vertices (target size too fine near the truncation corner; try coarser target_h ≥ {1:.4})")]
    Capacity(usize, f64),
    #[error("point location failed; degenerate configuration")]
    Location,
    #[error("boundary segment could not be recovered")]
    SegmentRecovery,
}

#[inline]
fn orient<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
fn in_circumcircle<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2], p: [T; 2]) -> bool {
    let adx = a[0] - p[0];
    let ady = a[1] - p[1];
    let bdx = b[0] - p[0];
    let bdy = b[1] - p[1];
    let cdx = c[0] - p[0];
    let cdy = c[1] - p[1];
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    let det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx);
    det > T::zero()
}

fn circumcenter<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> Option<[T; 2]> {
    let d = lit::<T>(2.0) * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d.abs() < lit::<T>(1e-300) {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    Some([ux, uy])
}

impl<T: Real> Delaunay<T> {
    /// Start from a super-triangle enclosing the unit disk.
    pub fn new() -> Self {
        Self::with_budget(usize::MAX)
    }

    pub fn with_budget(max_vertices: usize) -> Self {
        let s = lit::<T>(4.0);
        let points = vec![
            DiskPoint::new(-s, -s),
            DiskPoint::new(s, -s),
            DiskPoint::new(T::zero(), s),
        ];
        let tris = vec![Tri {
            v: [0, 1, 2],
            n: [NONE, NONE, NONE],
            alive: true,
        }];
        let mut edges = std::collections::BTreeMap::new();
        edges.insert((0u32, 1u32), 1u32);
        edges.insert((1, 2), 1);
        edges.insert((0, 2), 1);
        Self {
            points,
            tris,
            hint: 0,
            max_vertices,
            edges,
        }
    }

    fn edge_inc(&mut self, a: u32, b: u32) {
        *self.edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }

    fn edge_dec(&mut self, a: u32, b: u32) {
        let key = (a.min(b), a.max(b));
        if let Some(c) = self.edges.get_mut(&key) {
            *c -= 1;
            if *c == 0 {
                self.edges.remove(&key);
            }
        }
    }

    #[inline]
    fn xy(&self, i: u32) -> [T; 2] {
        let p = self.points[i as usize];
        [p.x, p.y]
    }

    fn locate(&self, p: [T; 2]) -> Option<u32> {
        let mut t = self.hint;
        if t as usize >= self.tris.len() || !self.tris[t as usize].alive {
            t = self
                .tris
                .iter()
                .rposition(|tr| tr.alive)
                .map(|i| i as u32)?;
        }
        let mut steps = 0usize;
        let max_steps = 4 * self.tris.len() + 64;
        loop {
            let tr = self.tris[t as usize];
            let a = self.xy(tr.v[0]);
            let b = self.xy(tr.v[1]);
            let c = self.xy(tr.v[2]);
            // find an edge that strictly separates p
            let mut moved = false;
            for i in 0..3 {
                let (u, w) = match i {
                    0 => (b, c),
                    1 => (c, a),
                    _ => (a, b),
                };
                if orient(u, w, p) < T::zero() {
                    let nb = tr.n[i];
                    if nb == NONE {
                        return None;
                    }
                    t = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Some(t);
            }
            steps += 1;
            if steps > max_steps {
                return self.locate_scan(p);
            }
        }
    }

    /// Tolerant linear scan: best triangle by worst signed orientation.
    fn locate_scan(&self, p: [T; 2]) -> Option<u32> {
        let mut best: Option<(u32, T)> = None;
        for (i, tr) in self.tris.iter().enumerate() {
            if !tr.alive {
                continue;
            }
            let a = self.xy(tr.v[0]);
            let b = self.xy(tr.v[1]);
            let c = self.xy(tr.v[2]);
            let m = orient(b, c, p).min(orient(c, a, p)).min(orient(a, b, p));
            if best.map(|(_, bm)| m > bm).unwrap_or(true) {
                best = Some((i as u32, m));
            }
        }
        match best {
            Some((i, m)) if m > lit::<T>(-1e-12) => Some(i),
            _ => None,
        }
    }

    /// Insert a point, returning its vertex index.
    pub fn insert(&mut self, p: DiskPoint<T>) -> Result<u32, MeshBuildError> {
        if self.points.len() >= self.max_vertices {
            return Err(MeshBuildError::Capacity(self.points.len(), 0.0));
        }
        let xy = [p.x, p.y];
        let t0 = self.locate(xy).ok_or_else(|| {
            if std::env::var("H2XR_MESH_DEBUG").is_ok() {
                eprintln!(
                    "locate failed for ({:.17e}, {:.17e}); {} alive tris",
                    p.x.as_f64(),
                    p.y.as_f64(),
                    self.tris.iter().filter(|t| t.alive).count()
                );
            }
            MeshBuildError::Location
        })?;
        // cavity BFS
        let mut cavity = vec![t0];
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(t0);
        let mut stack = vec![t0];
        while let Some(t) = stack.pop() {
            let tr = self.tris[t as usize];
            for i in 0..3 {
                let nb = tr.n[i];
                if nb == NONE || seen.contains(&nb) {
                    continue;
                }
                let nt = self.tris[nb as usize];
                let a = self.xy(nt.v[0]);
                let b = self.xy(nt.v[1]);
                let c = self.xy(nt.v[2]);
                if in_circumcircle(a, b, c, xy) {
                    seen.insert(nb);
                    cavity.push(nb);
                    stack.push(nb);
                }
            }
        }
        // boundary edges of the cavity (CCW oriented within each dead tri);
        // expand the cavity where a fan triangle would be degenerate (point
        // numerically on a cavity boundary edge)
        let mut boundary: Vec<(u32, u32, u32)> = Vec::new(); // (a, b, outside neighbor)
        let tol = lit::<T>(1e-13);
        'rebuild: loop {
            boundary.clear();
            for &t in &cavity {
                let tr = self.tris[t as usize];
                for i in 0..3 {
                    let nb = tr.n[i];
                    if nb == NONE || !seen.contains(&nb) {
                        let a = tr.v[(i + 1) % 3];
                        let b = tr.v[(i + 2) % 3];
                        if orient(self.xy(a), self.xy(b), xy) <= tol {
                            // degenerate fan: absorb the outside neighbor
                            if nb != NONE {
                                seen.insert(nb);
                                cavity.push(nb);
                                continue 'rebuild;
                            }
                            return Err(MeshBuildError::Location);
                        }
                        boundary.push((a, b, nb));
                    }
                }
            }
            break;
        }
        for &t in &cavity {
            self.tris[t as usize].alive = false;
            let tv = self.tris[t as usize].v;
            self.edge_dec(tv[0], tv[1]);
            self.edge_dec(tv[1], tv[2]);
            self.edge_dec(tv[2], tv[0]);
        }
        let vi = self.points.len() as u32;
        self.points.push(p);
        // fan triangulation of the cavity
        let mut edge_to_tri: std::collections::BTreeMap<(u32, u32), u32> =
            std::collections::BTreeMap::new();
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outer) in &boundary {
            let ti = self.tris.len() as u32;
            self.tris.push(Tri {
                v: [a, b, vi],
                n: [NONE, NONE, outer],
            // neighbor layout: n[0] across (b, vi), n[1] across (vi, a), n[2] across (a, b)
                alive: true,
            });
            self.edge_inc(a, b);
            self.edge_inc(b, vi);
            self.edge_inc(vi, a);
            if outer != NONE {
                let ot = &mut self.tris[outer as usize];
                for j in 0..3 {
                    let oa = ot.v[(j + 1) % 3];
                    let ob = ot.v[(j + 2) % 3];
                    if (oa == b && ob == a) || (oa == a && ob == b) {
                        ot.n[j] = ti;
                    }
                }
            }
            edge_to_tri.insert((a, vi), ti); // directed edge (vi, a) reversed
            edge_to_tri.insert((vi, b), ti); // directed edge (b, vi) reversed
            created.push(ti);
        }
        // link fan neighbors: tri (a,b,vi) has edge (b,vi) shared with tri whose directed (vi,b)... use reversed lookup
        for &ti in &created {
            let tv = self.tris[ti as usize].v;
            let (a, b) = (tv[0], tv[1]);
            // across (b, vi): the triangle registered under (b, vi)
            if let Some(&other) = edge_to_tri.get(&(b, vi)) {
                self.tris[ti as usize].n[0] = other;
            }
            // across (vi, a)
            if let Some(&other) = edge_to_tri.get(&(vi, a)) {
                self.tris[ti as usize].n[1] = other;
            }
        }
        self.hint = *created.last().unwrap_or(&self.hint);
        Ok(vi)
    }

    /// Check whether the (undirected) edge exists in the triangulation.
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edges.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn alive_triangles(&self) -> impl Iterator<Item = [u32; 3]> + '_ {
        self.tris.iter().filter(|t| t.alive).map(|t| t.v)
    }

    pub fn alive_indices(&self) -> Vec<u32> {
        self.tris
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive)
            .map(|(i, _)| i as u32)
            .collect()
    }

    #[inline]
    pub fn is_alive(&self, i: u32) -> bool {
        self.tris[i as usize].alive
    }

    #[inline]
    pub fn tri_verts(&self, i: u32) -> [u32; 3] {
        self.tris[i as usize].v
    }
}

/// Hyperbolic length of a Euclidean segment, estimated at its midpoint.
pub fn edge_hyp_len<T: Real>(p: DiskPoint<T>, q: DiskPoint<T>) -> T {
    let mx = (p.x + q.x) * lit::<T>(0.5);
    let my = (p.y + q.y) * lit::<T>(0.5);
    let lam = conformal_factor(DiskPoint::new(mx, my)).unwrap_or_else(|_| lit::<T>(1e12));
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    lam * (dx * dx + dy * dy).sqrt()
}

/// Ruppert-style refinement driver.
pub struct Refiner<'a, T: Real> {
    pub dt: &'a mut Delaunay<T>,
    pub segments: Vec<Segment>,
    /// local target hyperbolic edge length
    pub sizing: Box<dyn Fn(DiskPoint<T>) -> T + 'a>,
    /// interior test for the (open) domain
    pub inside: Box<dyn Fn(DiskPoint<T>) -> bool + 'a>,
    /// vertices whose incident triangles are exempt from the angle-quality rule
    pub exempt_corners: Vec<u32>,
    /// domain corner vertices for small-angle cluster immunity
    pub cluster_corners: Vec<u32>,
    pub max_vertices: usize,
    /// circumradius-to-shortest-edge bound (quality rule)
    pub ratio_bound: T,
    /// smallest feature the quality rule may create (hyperbolic length);
    /// quality splits of already-finer triangles are skipped so the thin
    /// corner cannot cascade indefinitely
    pub min_feature: T,
}

impl<'a, T: Real> Refiner<'a, T> {
    fn split_segment(&mut self, si: usize) -> Result<u32, MeshBuildError> {
        let seg = self.segments[si];
        let pa = self.dt.points[seg.a as usize];
        let pb = self.dt.points[seg.b as usize];
        let m = hyp_midpoint(pa, pb);
        let vi = self.dt.insert(m)?;
        self.segments[si] = Segment {
            a: seg.a,
            b: vi,
            chain: seg.chain,
        };
        self.segments.push(Segment {
            a: vi,
            b: seg.b,
            chain: seg.chain,
        });
        Ok(vi)
    }

    /// Corner protection: segments already much finer than the local target
    /// stop responding to encroachment (prevents the small-angle ping-pong
    /// between the two chains meeting at a thin corner).
    fn frozen(&self, si: usize) -> bool {
        let seg = self.segments[si];
        let a = self.dt.points[seg.a as usize];
        let b = self.dt.points[seg.b as usize];
        let m = hyp_midpoint(a, b);
        edge_hyp_len(a, b) <= lit::<T>(0.25) * (self.sizing)(m)
    }

    fn encroached_by(&self, si: usize, p: [T; 2]) -> bool {
        let seg = self.segments[si];
        let a = self.dt.points[seg.a as usize];
        let b = self.dt.points[seg.b as usize];
        if (a.x == p[0] && a.y == p[1]) || (b.x == p[0] && b.y == p[1]) {
            return false;
        }
        if (a.x - p[0]) * (b.x - p[0]) + (a.y - p[1]) * (b.y - p[1]) >= T::zero() {
            return false;
        }
        // small-angle cluster immunity: if the segment touches a domain
        // corner, points at the same distance scale from that corner (on the
        // other chain) do not count as encroaching
        for &cv in &self.cluster_corners {
            if seg.a == cv || seg.b == cv {
                let c = self.dt.points[cv as usize];
                let far = if seg.a == cv { b } else { a };
                let seg_scale = ((far.x - c.x) * (far.x - c.x)
                    + (far.y - c.y) * (far.y - c.y))
                    .sqrt();
                let p_dist = ((p[0] - c.x) * (p[0] - c.x) + (p[1] - c.y) * (p[1] - c.y)).sqrt();
                if p_dist < seg_scale * lit::<T>(2.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Segment index encroached by `p`, if any.
    fn find_encroached(&self, p: [T; 2]) -> Option<usize> {
        (0..self.segments.len()).find(|&si| self.encroached_by(si, p))
    }

    /// Ensure every constrained segment appears as an edge; split until true.
    pub fn recover_segments(&mut self) -> Result<(), MeshBuildError> {
        let mut guard = 0usize;
        loop {
            let missing: Vec<usize> = (0..self.segments.len())
                .filter(|&si| {
                    let s = self.segments[si];
                    !self.dt.has_edge(s.a, s.b)
                })
                .collect();
            if missing.is_empty() {
                return Ok(());
            }
            for si in missing {
                if self.dt.points.len() >= self.max_vertices {
                    return Err(MeshBuildError::Capacity(
                        self.dt.points.len(),
                        suggest_coarser::<T>(),
                    ));
                }
                self.split_segment(si)?;
            }
            guard += 1;
            if guard > 64 {
                return Err(MeshBuildError::SegmentRecovery);
            }
        }
    }

    /// Also split segments encroached by existing vertices (worklist).
    pub fn split_encroached_segments(&mut self) -> Result<(), MeshBuildError> {
        let mut work: Vec<usize> = (0..self.segments.len()).collect();
        while let Some(si) = work.pop() {
            if self.frozen(si) {
                continue;
            }
            let encroached = (0..self.dt.points.len()).any(|vi| {
                let s = self.segments[si];
                if vi as u32 == s.a || vi as u32 == s.b {
                    return false;
                }
                let p = self.dt.points[vi];
                self.encroached_by(si, [p.x, p.y])
            });
            if encroached {
                if self.dt.points.len() >= self.max_vertices {
                    return Err(MeshBuildError::Capacity(
                        self.dt.points.len(),
                        suggest_coarser::<T>(),
                    ));
                }
                self.split_segment(si)?;
                work.push(si);
                work.push(self.segments.len() - 1);
            }
        }
        self.recover_segments()
    }

    /// Main refinement loop: split triangles violating the size or quality
    /// rule, inserting circumcenters (or splitting encroached segments).
    pub fn refine(&mut self) -> Result<(), MeshBuildError> {
        self.recover_segments()?;
        self.split_encroached_segments()?;
        let mut pass = 0usize;
        loop {
            pass += 1;
            if pass > 200 {
                break;
            }
            let mut worked = false;
            let tri_list = self.dt.alive_indices();
            for ti in tri_list {
                if !self.dt.is_alive(ti) {
                    continue;
                }
                let tv = self.dt.tri_verts(ti);
                if self.dt.points.len() >= self.max_vertices {
                    return Err(MeshBuildError::Capacity(
                        self.dt.points.len(),
                        suggest_coarser::<T>(),
                    ));
                }
                let pa = self.dt.points[tv[0] as usize];
                let pb = self.dt.points[tv[1] as usize];
                let pc = self.dt.points[tv[2] as usize];
                let cx = (pa.x + pb.x + pc.x) / lit::<T>(3.0);
                let cy = (pa.y + pb.y + pc.y) / lit::<T>(3.0);
                let centroid = DiskPoint::new(cx, cy);
                if !(self.inside)(centroid) {
                    continue;
                }
                let l_ab = edge_hyp_len(pa, pb);
                let l_bc = edge_hyp_len(pb, pc);
                let l_ca = edge_hyp_len(pc, pa);
                let lmax = l_ab.max(l_bc).max(l_ca);
                let target = (self.sizing)(centroid);
                let size_bad = lmax > lit::<T>(1.45) * target;
                let quality_bad = if tv.iter().any(|v| self.exempt_corners.contains(v)) {
                    false
                } else {
                    // Euclidean ratio test (angles are conformal invariants)
                    let ea = [pa.x, pa.y];
                    let eb = [pb.x, pb.y];
                    let ec = [pc.x, pc.y];
                    match circumcenter(ea, eb, ec) {
                        Some(cc) => {
                            let r = ((cc[0] - ea[0]) * (cc[0] - ea[0])
                                + (cc[1] - ea[1]) * (cc[1] - ea[1]))
                                .sqrt();
                            let dmin = |u: [T; 2], w: [T; 2]| {
                                ((u[0] - w[0]) * (u[0] - w[0]) + (u[1] - w[1]) * (u[1] - w[1]))
                                    .sqrt()
                            };
                            let lmin = dmin(ea, eb).min(dmin(eb, ec)).min(dmin(ec, ea));
                            let lam = crate::hypgeom::conformal_factor(centroid)
                                .unwrap_or_else(|_| T::zero());
                            let r_hyp = r * lam;
                            r / lmin > self.ratio_bound && r_hyp > self.min_feature
                        }
                        None => false,
                    }
                };
                if !(size_bad || quality_bad) {
                    continue;
                }
                let ea = [pa.x, pa.y];
                let eb = [pb.x, pb.y];
                let ec = [pc.x, pc.y];
                let cc = match circumcenter(ea, eb, ec) {
                    Some(c) => c,
                    None => continue,
                };
                let ccp = DiskPoint::new(cc[0], cc[1]);
                if let Some(si) = self.find_encroached([ccp.x, ccp.y]) {
                    if self.frozen(si) {
                        // protected corner region: leave the triangle alone
                        continue;
                    }
                    if std::env::var("H2XR_MESH_TRACE").is_ok() {
                        eprintln!("SEGSPLIT sz={} q={} cc=({:.6},{:.6}) lmax={:.3e} tgt={:.3e}", size_bad, quality_bad, ccp.x.as_f64(), ccp.y.as_f64(), lmax.as_f64(), target.as_f64());
                    }
                    self.split_segment(si)?;
                    self.recover_segments()?;
                    worked = true;
                } else if (self.inside)(ccp) {
                    if std::env::var("H2XR_MESH_TRACE").is_ok() {
                        eprintln!("CC sz={} q={} cc=({:.6},{:.6}) lmax={:.3e} tgt={:.3e}", size_bad, quality_bad, ccp.x.as_f64(), ccp.y.as_f64(), lmax.as_f64(), target.as_f64());
                    }
                    self.dt.insert(ccp)?;
                    worked = true;
                } else if size_bad {
                    // oversized cell whose circumcenter escaped the domain:
                    // shrink via the centroid instead
                    if std::env::var("H2XR_MESH_TRACE").is_ok() {
                        eprintln!("CENTROID cc=({:.6},{:.6}) lmax={:.3e} tgt={:.3e}", centroid.x.as_f64(), centroid.y.as_f64(), lmax.as_f64(), target.as_f64());
                    }
                    self.dt.insert(centroid)?;
                    worked = true;
                }
            }
            if !worked {
                break;
            }
        }
        Ok(())
    }
}

fn suggest_coarser<T: Real>() -> f64 {
    0.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delaunay_of_grid_is_consistent() {
        let mut dt = Delaunay::<f64>::new();
        for i in 0..6 {
            for j in 0..6 {
                dt.insert(DiskPoint::new(
                    -0.5 + 0.2 * i as f64 + 0.013 * j as f64,
                    -0.5 + 0.2 * j as f64,
                ))
                .unwrap();
            }
        }
        // every alive triangle is empty of other points (Delaunay property)
        let pts: Vec<_> = dt.points.clone();
        for tv in dt.alive_triangles() {
            let a = [pts[tv[0] as usize].x, pts[tv[0] as usize].y];
            let b = [pts[tv[1] as usize].x, pts[tv[1] as usize].y];
            let c = [pts[tv[2] as usize].x, pts[tv[2] as usize].y];
            assert!(orient(a, b, c) > 0.0, "CCW orientation");
            for (k, p) in pts.iter().enumerate().skip(3) {
                if tv.contains(&(k as u32)) {
                    continue;
                }
                assert!(
                    !in_circumcircle(a, b, c, [p.x, p.y]),
                    "non-Delaunay pair tri={tv:?} p={k}"
                );
            }
        }
    }
}
