//! Sparse and small dense linear algebra used by the solvers.
//!
//! The element systems here are symmetric positive definite, so a skyline
//! (envelope) LDLᵀ factorization with reverse-Cuthill–McKee ordering is
//! enough, keeps everything deterministic, and avoids external solver
//! dependencies. A CSR copy of the assembled matrix supports matvec for
//! iterative refinement.

use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {0:.3e} at row {1})")]
    NotPositiveDefinite(f64, usize),
    #[error("envelope too large: {0} entries exceeds budget {1}")]
    EnvelopeBudget(usize, usize),
    #[error("dimension mismatch")]
    Dimension,
}

/// Symmetric sparse matrix assembled from triplets (both halves or one half;
/// duplicates are summed, symmetry is enforced by storing max(i,j) row).
pub struct SymTriplets<T> {
    n: usize,
    entries: Vec<(u32, u32, T)>,
}

impl<T: Real> SymTriplets<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        self.entries.push((a as u32, b as u32, v));
    }

    /// Combine duplicates into lower-triangular CSR-like rows.
    fn combined(mut self) -> (usize, Vec<Vec<(u32, T)>>) {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); self.n];
        for (i, j, v) in self.entries {
            let row = &mut rows[i as usize];
            match row.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => row.push((j, v)),
            }
        }
        (self.n, rows)
    }
}

/// Reverse Cuthill–McKee ordering of the adjacency graph (deterministic:
/// start from the minimum-degree vertex with lowest index, neighbors visited
/// in degree-then-index order). Returns `perm` mapping new index -> old.
fn rcm(n: usize, adj: &[Vec<u32>]) -> Vec<u32> {
    let mut visited = vec![false; n];
    let mut perm: Vec<u32> = Vec::with_capacity(n);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by_key(|&v| (adj[v as usize].len(), v));
    let mut queue = std::collections::VecDeque::new();
    for &start in &order {
        if visited[start as usize] {
            continue;
        }
        visited[start as usize] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            perm.push(v);
            let mut nb: Vec<u32> = adj[v as usize]
                .iter()
                .copied()
                .filter(|&u| !visited[u as usize])
                .collect();
            nb.sort_unstable_by_key(|&u| (adj[u as usize].len(), u));
            for u in nb {
                visited[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
    perm.reverse();
    perm
}

/// Skyline LDLᵀ factorization of an SPD matrix.
pub struct SkylineLdl<T> {
    n: usize,
    perm: Vec<u32>,
    row_start: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<T>,
    diag: Vec<T>,
    /// CSR (full symmetric) copy for matvec / refinement.
    csr_ptr: Vec<usize>,
    csr_idx: Vec<u32>,
    csr_val: Vec<T>,
}

pub const DEFAULT_ENVELOPE_BUDGET: usize = 80_000_000;

impl<T: Real> SkylineLdl<T> {
    /// Build and factor. `trip` must describe an SPD matrix.
    pub fn factor(trip: SymTriplets<T>) -> Result<Self, LinalgError> {
        Self::factor_with_budget(trip, DEFAULT_ENVELOPE_BUDGET)
    }

    pub fn factor_with_budget(
        trip: SymTriplets<T>,
        budget: usize,
    ) -> Result<Self, LinalgError> {
        let (n, rows) = trip.combined();
        // full symmetric CSR
        let mut counts = vec![0usize; n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                counts[i] += 1;
                if j as usize != i {
                    counts[j as usize] += 1;
                }
            }
        }
        let mut csr_ptr = vec![0usize; n + 1];
        for i in 0..n {
            csr_ptr[i + 1] = csr_ptr[i] + counts[i];
        }
        let nnz = csr_ptr[n];
        let mut csr_idx = vec![0u32; nnz];
        let mut csr_val = vec![T::zero(); nnz];
        let mut cursor = csr_ptr.clone();
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                csr_idx[cursor[i]] = j;
                csr_val[cursor[i]] = v;
                cursor[i] += 1;
                if j as usize != i {
                    csr_idx[cursor[j as usize]] = i as u32;
                    csr_val[cursor[j as usize]] = v;
                    cursor[j as usize] += 1;
                }
            }
        }
        // adjacency (off-diagonal pattern) for RCM
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for i in 0..n {
            for k in csr_ptr[i]..csr_ptr[i + 1] {
                let j = csr_idx[k] as usize;
                if j != i {
                    adj[i].push(j as u32);
                }
            }
        }
        let perm = rcm(n, &adj);
        let mut iperm = vec![0u32; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old as usize] = new as u32;
        }
        // envelope extents
        let mut row_start = vec![0usize; n];
        for new in 0..n {
            let old = perm[new] as usize;
            let mut lo = new;
            for &u in &adj[old] {
                let nu = iperm[u as usize] as usize;
                if nu < lo {
                    lo = nu;
                }
            }
            row_start[new] = lo;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - row_start[i]);
        }
        let env = offsets[n];
        if env > budget {
            return Err(LinalgError::EnvelopeBudget(env, budget));
        }
        let mut data = vec![T::zero(); env];
        let mut diag = vec![T::zero(); n];
        // scatter values into the envelope
        for i in 0..n {
            for k in csr_ptr[i]..csr_ptr[i + 1] {
                let j = csr_idx[k] as usize;
                let (pi, pj) = (iperm[i] as usize, iperm[j] as usize);
                if pi == pj {
                    diag[pi] = csr_val[k];
                } else if pi > pj {
                    let off = offsets[pi] + (pj - row_start[pi]);
                    data[off] = csr_val[k];
                }
            }
        }
        let mut me = Self {
            n,
            perm,
            row_start,
            offsets,
            data,
            diag,
            csr_ptr,
            csr_idx,
            csr_val,
        };
        me.factor_in_place()?;
        Ok(me)
    }

    fn factor_in_place(&mut self) -> Result<(), LinalgError> {
        let n = self.n;
        for i in 0..n {
            let si = self.row_start[i];
            // work on row i: columns si..i
            for j in si..i {
                let sj = self.row_start[j];
                let lo = si.max(sj);
                let mut sum = self.data[self.offsets[i] + (j - si)];
                // dot of factored parts of rows i and j
                let oi = self.offsets[i] + (lo - si);
                let oj = self.offsets[j] + (lo - sj);
                for k in 0..(j - lo) {
                    sum -= self.data[oi + k] * self.diag[lo + k] * self.data[oj + k];
                }
                self.data[self.offsets[i] + (j - si)] = sum / self.diag[j];
            }
            let mut d = self.diag[i];
            let oi = self.offsets[i];
            for k in si..i {
                let l = self.data[oi + (k - si)];
                d -= l * l * self.diag[k];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite(d.as_f64(), i));
            }
            self.diag[i] = d;
        }
        Ok(())
    }

    fn solve_permuted(&self, b: &mut [T]) {
        let n = self.n;
        // forward: L y = b
        for i in 0..n {
            let si = self.row_start[i];
            let oi = self.offsets[i];
            let mut s = b[i];
            for k in si..i {
                s -= self.data[oi + (k - si)] * b[k];
            }
            b[i] = s;
        }
        for i in 0..n {
            b[i] /= self.diag[i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let si = self.row_start[i];
            let oi = self.offsets[i];
            let bi = b[i];
            for k in si..i {
                b[k] -= self.data[oi + (k - si)] * bi;
            }
        }
    }

    /// Solve `A x = b` in the original index order.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut pb: Vec<T> = (0..self.n).map(|i| b[self.perm[i] as usize]).collect();
        self.solve_permuted(&mut pb);
        let mut x = vec![T::zero(); self.n];
        for new in 0..self.n {
            x[self.perm[new] as usize] = pb[new];
        }
        x
    }

    /// Matvec with the assembled matrix (original index order).
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let mut s = T::zero();
            for k in self.csr_ptr[i]..self.csr_ptr[i + 1] {
                s += self.csr_val[k] * x[self.csr_idx[k] as usize];
            }
            y[i] = s;
        }
    }

    /// Solve with a fixed number of iterative-refinement steps.
    pub fn solve_refined(&self, b: &[T], refine_steps: usize) -> Vec<T> {
        let mut x = self.solve(b);
        let mut r = vec![T::zero(); self.n];
        for _ in 0..refine_steps {
            self.matvec(&x, &mut r);
            for i in 0..self.n {
                r[i] = b[i] - r[i];
            }
            let dx = self.solve(&r);
            for i in 0..self.n {
                x[i] += dx[i];
            }
        }
        x
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// In-place Cholesky solve of a small dense symmetric system (row-major
/// `n×n`), with a ridge fallback for near-singular fits.
pub fn solve_dense_sym<T: Real>(n: usize, a: &mut [T], b: &mut [T]) -> Result<(), LinalgError> {
    if a.len() != n * n || b.len() != n {
        return Err(LinalgError::Dimension);
    }
    let mut trace = T::zero();
    for i in 0..n {
        trace += a[i * n + i];
    }
    let ridge = trace.abs().max(T::one()) * lit::<T>(1e-13);
    for attempt in 0..2 {
        let mut l = a.to_vec();
        let mut ok = true;
        for i in 0..n {
            for j in 0..=i {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        ok = false;
                        break;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            // forward/backward
            let mut y = b.to_vec();
            for i in 0..n {
                let mut s = y[i];
                for k in 0..i {
                    s -= l[i * n + k] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in i + 1..n {
                    s -= l[k * n + i] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            b.copy_from_slice(&y);
            return Ok(());
        }
        if attempt == 0 {
            for i in 0..n {
                a[i * n + i] += ridge;
            }
        }
    }
    Err(LinalgError::NotPositiveDefinite(0.0, 0))
}

/// Minimal 3×3 matrix (row-major) helpers for frames and fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [T; 9]);

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let o = T::one();
        let z = T::zero();
        Mat3([o, z, z, z, o, z, z, z, o])
    }

    pub fn from_cols(c0: [T; 3], c1: [T; 3], c2: [T; 3]) -> Self {
        Mat3([
            c0[0], c1[0], c2[0], c0[1], c1[1], c2[1], c0[2], c1[2], c2[2],
        ])
    }

    pub fn col(&self, j: usize) -> [T; 3] {
        [self.0[j], self.0[3 + j], self.0[6 + j]]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = &self.0;
        let b = &o.0;
        let mut r = [T::zero(); 9];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s += a[i * 3 + k] * b[k * 3 + j];
                }
                r[i * 3 + j] = s;
            }
        }
        Mat3(r)
    }

    pub fn mulv(&self, v: [T; 3]) -> [T; 3] {
        let a = &self.0;
        [
            a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
            a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2],
        ]
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = [T::zero(); 9];
        for i in 0..9 {
            r[i] = self.0[i] + o.0[i];
        }
        Mat3(r)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut r = [T::zero(); 9];
        for i in 0..9 {
            r[i] = self.0[i] * s;
        }
        Mat3(r)
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.abs() < lit::<T>(1e-300) {
            return None;
        }
        let m = &self.0;
        let inv = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        let mut r = [T::zero(); 9];
        for i in 0..9 {
            r[i] = inv[i] / d;
        }
        Some(Mat3(r))
    }

    /// Rodrigues rotation from an axis-angle vector.
    pub fn rotation_from_axis_angle(w: [T; 3]) -> Self {
        let th = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if th < lit::<T>(1e-300) {
            return Self::identity();
        }
        let k = [w[0] / th, w[1] / th, w[2] / th];
        let (s, c) = (th.sin(), th.cos());
        let one = T::one();
        let kx = Mat3([
            T::zero(),
            -k[2],
            k[1],
            k[2],
            T::zero(),
            -k[0],
            -k[1],
            k[0],
            T::zero(),
        ]);
        let kx2 = kx.mul(&kx);
        Self::identity().add(&kx.scale(s)).add(&kx2.scale(one - c))
    }

    /// Axis-angle logarithm of a rotation matrix.
    pub fn axis_angle(&self) -> [T; 3] {
        let m = &self.0;
        let tr = m[0] + m[4] + m[8];
        let c = ((tr - T::one()) * lit::<T>(0.5)).max(-T::one()).min(T::one());
        let th = c.acos();
        if th < lit::<T>(1e-12) {
            // first-order: skew part
            return [
                (m[7] - m[5]) * lit::<T>(0.5),
                (m[2] - m[6]) * lit::<T>(0.5),
                (m[3] - m[1]) * lit::<T>(0.5),
            ];
        }
        let s = lit::<T>(0.5) / th.sin() * th;
        [
            (m[7] - m[5]) * s,
            (m[2] - m[6]) * s,
            (m[3] - m[1]) * s,
        ]
    }

    /// Project a near-rotation matrix to SO(3) by the orthogonal polar factor
    /// (Newton iteration `X ← (X + X⁻ᵀ)/2`).
    pub fn orthonormalize(&self) -> Self {
        let mut x = *self;
        for _ in 0..20 {
            let xit = match x.inverse() {
                Some(inv) => inv.transpose(),
                None => return Self::identity(),
            };
            let next = x.add(&xit).scale(lit::<T>(0.5));
            let mut diff = T::zero();
            for i in 0..9 {
                diff = diff.max((next.0[i] - x.0[i]).abs());
            }
            x = next;
            if diff < lit::<T>(1e-15) {
                break;
            }
        }
        x
    }
}

/// Smallest-eigenvalue eigenvector of a symmetric 3×3 matrix (cyclic Jacobi).
pub fn sym3_smallest_eigvec<T: Real>(a: Mat3<T>) -> [T; 3] {
    let mut m = a;
    let mut v = Mat3::identity();
    for _ in 0..30 {
        // find largest off-diagonal
        let md = &m.0;
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        let mut best = (0, 1);
        let mut mag = T::zero();
        for &(p, q) in &pairs {
            let x = md[p * 3 + q].abs();
            if x > mag {
                mag = x;
                best = (p, q);
            }
        }
        if mag < lit::<T>(1e-16) {
            break;
        }
        let (p, q) = best;
        let app = m.0[p * 3 + p];
        let aqq = m.0[q * 3 + q];
        let apq = m.0[p * 3 + q];
        let tau = (aqq - app) / (lit::<T>(2.0) * apq);
        let t = if tau >= T::zero() {
            T::one() / (tau + (T::one() + tau * tau).sqrt())
        } else {
            -T::one() / (-tau + (T::one() + tau * tau).sqrt())
        };
        let c = T::one() / (T::one() + t * t).sqrt();
        let s = t * c;
        let mut r = Mat3::identity();
        r.0[p * 3 + p] = c;
        r.0[q * 3 + q] = c;
        r.0[p * 3 + q] = s;
        r.0[q * 3 + p] = -s;
        m = r.transpose().mul(&m).mul(&r);
        v = v.mul(&r);
    }
    let d = [m.0[0], m.0[4], m.0[8]];
    let mut imin = 0;
    if d[1] < d[imin] {
        imin = 1;
    }
    if d[2] < d[imin] {
        imin = 2;
    }
    v.col(imin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn skyline_matches_dense_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [5usize, 23, 60] {
            // random sparse SPD: diagonally dominant banded + random couplings
            let mut trip = SymTriplets::<f64>::new(n);
            let mut dense = vec![0.0f64; n * n];
            for i in 0..n {
                for j in (i.saturating_sub(3))..i {
                    if rng.gen_bool(0.7) {
                        let v = rng.gen_range(-1.0..1.0);
                        trip.push(i, j, v);
                        dense[i * n + j] += v;
                        dense[j * n + i] += v;
                    }
                }
                let d = 8.0 + rng.gen_range(0.0..2.0);
                trip.push(i, i, d);
                dense[i * n + i] += d;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ldl = SkylineLdl::factor(trip).unwrap();
            let x = ldl.solve_refined(&b, 1);
            // residual check against dense matvec
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += dense[i * n + j] * x[j];
                }
                assert!((s - b[i]).abs() < 1e-10, "row {i}: {}", (s - b[i]).abs());
            }
        }
    }

    #[test]
    fn dense_sym_solver() {
        let mut a = vec![4.0f64, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let mut b = vec![1.0f64, 2.0, 3.0];
        let a0 = a.clone();
        let b0 = b.clone();
        solve_dense_sym(3, &mut a, &mut b).unwrap();
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += a0[i * 3 + j] * b[j];
            }
            assert!((s - b0[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_log_exp_roundtrip() {
        let w = [0.3f64, -0.2, 0.15];
        let r = Mat3::rotation_from_axis_angle(w);
        let w2 = r.axis_angle();
        for i in 0..3 {
            assert!((w[i] - w2[i]).abs() < 1e-12);
        }
        let r2 = r.mul(&Mat3([1.0f64, 1e-4, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]));
        let o = r2.orthonormalize();
        let should_be_id = o.transpose().mul(&o);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((should_be_id.0[i * 3 + j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sym3_smallest_eigvec_finds_normal() {
        // points spread in the z=0 plane: smallest eigenvector ~ ±e_z
        let m = Mat3([5.0f64, 0.3, 0.0, 0.3, 4.0, 0.0, 0.0, 0.0, 0.01]);
        let v = sym3_smallest_eigvec(m);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((v[2].abs() / n) > 0.999);
    }
}
