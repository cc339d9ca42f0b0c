//! Bowyer-Watson Delaunay triangulation.
//!
//! Points are normalized to a unit bounding box before any predicate is
//! evaluated, so the tolerances below are relative to the point-set span.
//! The super-triangle is symbolic: every hull edge is closed by a triangle
//! through a single vertex at infinity whose "circumcircle" is the open
//! half-plane beyond the edge, so the hull is recovered exactly. A final
//! Lawson pass cleans up tolerance-band leftovers and cocircular quads are
//! resolved toward the lexicographically smaller diagonal.

use std::collections::{HashMap, HashSet};

use crate::{Error, Result};

/// Counter-clockwise vertex triple indexing the input point list.
pub type Triangle = [usize; 3];

/// Band (on the normalized in-circle determinant) treated as cocircular.
pub const INCIRCLE_TOL: f64 = 1e-12;
/// Band (on the normalized orientation determinant) treated as collinear.
pub const ORIENT_TOL: f64 = 1e-13;

type Pt = (f64, f64);

/// Twice the signed area of `abc`; positive when counter-clockwise.
pub fn orient(a: Pt, b: Pt, c: Pt) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `abc`.
pub fn incircle(a: Pt, b: Pt, c: Pt, d: Pt) -> f64 {
    let (adx, ady) = (a.0 - d.0, a.1 - d.1);
    let (bdx, bdy) = (b.0 - d.0, b.1 - d.1);
    let (cdx, cdy) = (c.0 - d.0, c.1 - d.1);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    ad * (bdx * cdy - cdx * bdy) + bd * (cdx * ady - adx * cdy) + cd * (adx * bdy - bdx * ady)
}

struct Mesh {
    pts: Vec<Pt>,
    /// Id of the vertex at infinity closing every hull edge.
    ghost: usize,
    tris: Vec<Triangle>,
    alive: Vec<bool>,
    edges: HashMap<(usize, usize), usize>,
}

impl Mesh {
    fn add(&mut self, t: Triangle) -> usize {
        let id = self.tris.len();
        self.tris.push(t);
        self.alive.push(true);
        for k in 0..3 {
            self.edges.insert((t[k], t[(k + 1) % 3]), id);
        }
        id
    }

    fn remove(&mut self, id: usize) {
        let t = self.tris[id];
        self.alive[id] = false;
        for k in 0..3 {
            let e = (t[k], t[(k + 1) % 3]);
            if self.edges.get(&e) == Some(&id) {
                self.edges.remove(&e);
            }
        }
    }

    fn p(&self, i: usize) -> Pt {
        self.pts[i]
    }

    fn is_ghost(&self, t: Triangle) -> bool {
        t.contains(&self.ghost)
    }

    /// Hull edge `u -> v` of a ghost triangle; the finite mesh lies on its right.
    fn hull_edge(&self, t: Triangle) -> (usize, usize) {
        let k = t
            .iter()
            .position(|&v| v == self.ghost)
            .expect("ghost triangle");
        (t[(k + 1) % 3], t[(k + 2) % 3])
    }

    fn contains(&self, t: Triangle, q: Pt) -> bool {
        (0..3).all(|k| orient(self.p(t[k]), self.p(t[(k + 1) % 3]), q) >= -ORIENT_TOL)
    }

    fn in_circle(&self, t: Triangle, q: Pt) -> f64 {
        incircle(self.p(t[0]), self.p(t[1]), self.p(t[2]), q)
    }

    /// Whether `q` lies in the open circumdisk of `t`. For a ghost triangle
    /// the disk degenerates to the open half-plane beyond its hull edge plus
    /// the open edge itself.
    fn conflicts(&self, t: Triangle, q: Pt) -> bool {
        if !self.is_ghost(t) {
            return self.in_circle(t, q) > INCIRCLE_TOL;
        }
        let (u, v) = self.hull_edge(t);
        let (pu, pv) = (self.p(u), self.p(v));
        let o = orient(pu, pv, q);
        if o > ORIENT_TOL {
            return true;
        }
        if o < -ORIENT_TOL {
            return false;
        }
        let dot = (q.0 - pu.0) * (pv.0 - pu.0) + (q.1 - pu.1) * (pv.1 - pu.1);
        let len2 = (pv.0 - pu.0).powi(2) + (pv.1 - pu.1).powi(2);
        dot > 0.0 && dot < len2
    }

    fn locate(&self, q: Pt) -> Option<usize> {
        let alive = (0..self.tris.len()).filter(|&i| self.alive[i]);
        alive
            .clone()
            .find(|&i| !self.is_ghost(self.tris[i]) && self.contains(self.tris[i], q))
            .or_else(|| {
                alive
                    .clone()
                    .find(|&i| self.is_ghost(self.tris[i]) && self.conflicts(self.tris[i], q))
            })
    }

    fn insert(&mut self, v: usize) -> Result<()> {
        let q = self.p(v);
        let start = self
            .locate(q)
            .ok_or_else(|| Error::DegeneratePointSet("point could not be located".into()))?;

        let mut cavity: HashSet<usize> = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            let tri = self.tris[t];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if let Some(&u) = self.edges.get(&(b, a)) {
                    if !cavity.contains(&u) && self.conflicts(self.tris[u], q) {
                        cavity.insert(u);
                        stack.push(u);
                    }
                }
            }
        }

        // grow the cavity until every new finite triangle is positively oriented
        let boundary = loop {
            let mut boundary = Vec::new();
            let mut grow = None;
            let mut ids: Vec<usize> = cavity.iter().copied().collect();
            ids.sort_unstable();
            for &t in &ids {
                let tri = self.tris[t];
                for k in 0..3 {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    let twin = self.edges.get(&(b, a)).copied();
                    if twin.is_some_and(|u| cavity.contains(&u)) {
                        continue;
                    }
                    let finite = a != self.ghost && b != self.ghost;
                    if finite && orient(self.p(a), self.p(b), q) <= ORIENT_TOL {
                        match twin {
                            Some(u) => grow = Some(u),
                            None => {
                                return Err(Error::DegeneratePointSet(
                                    "open cavity boundary".into(),
                                ))
                            }
                        }
                    }
                    boundary.push((a, b));
                }
            }
            match grow {
                Some(u) => {
                    cavity.insert(u);
                }
                None => break boundary,
            }
        };

        let mut ids: Vec<usize> = cavity.into_iter().collect();
        ids.sort_unstable();
        for t in ids {
            self.remove(t);
        }
        for (a, b) in boundary {
            self.add([a, b, v]);
        }
        Ok(())
    }

    fn alive_ids(&self) -> Vec<usize> {
        (0..self.tris.len()).filter(|&i| self.alive[i]).collect()
    }

    /// For the interior edge `a -> b`, returns `(t1, c, t2, d)` where
    /// `t1 = [a, b, c]` and `t2 = [b, a, d]`.
    fn quad(&self, a: usize, b: usize) -> Option<(usize, usize, usize, usize)> {
        let t1 = *self.edges.get(&(a, b))?;
        let t2 = *self.edges.get(&(b, a))?;
        let opposite =
            |t: usize, x: usize, y: usize| self.tris[t].iter().copied().find(|&v| v != x && v != y);
        Some((t1, opposite(t1, a, b)?, t2, opposite(t2, a, b)?))
    }

    fn flip(
        &mut self,
        a: usize,
        b: usize,
        t1: usize,
        c: usize,
        t2: usize,
        d: usize,
    ) -> [(usize, usize); 4] {
        self.remove(t1);
        self.remove(t2);
        self.add([a, d, c]);
        self.add([b, c, d]);
        [(a, d), (d, b), (b, c), (c, a)]
    }

    fn interior_edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .edges
            .keys()
            .filter(|&&(a, b)| a < b && self.edges.contains_key(&(b, a)))
            .copied()
            .collect();
        out.sort_unstable();
        out
    }

    fn lawson(&mut self) {
        let mut stack = self.interior_edges();
        let mut budget = 64 * self.tris.len() + 1024;
        while let Some((a, b)) = stack.pop() {
            budget = match budget.checked_sub(1) {
                Some(b) => b,
                None => return,
            };
            let Some((t1, c, t2, d)) = self.quad(a, b) else {
                continue;
            };
            if self.in_circle(self.tris[t1], self.p(d)) > INCIRCLE_TOL {
                stack.extend(self.flip(a, b, t1, c, t2, d));
            }
        }
    }

    /// Resolves cocircular quads toward the smaller `(min, max)` diagonal,
    /// with `rank` mapping mesh vertices to caller indices.
    fn break_ties(&mut self, rank: &[usize]) {
        let key = |x: usize, y: usize| {
            let (rx, ry) = (rank[x], rank[y]);
            (rx.min(ry), rx.max(ry))
        };
        for _ in 0..8 {
            let mut flipped = false;
            for (a, b) in self.interior_edges() {
                let Some((t1, c, t2, d)) = self.quad(a, b) else {
                    continue;
                };
                let ic = self.in_circle(self.tris[t1], self.p(d));
                if ic.abs() > INCIRCLE_TOL || key(c, d) >= key(a, b) {
                    continue;
                }
                let convex = orient(self.p(a), self.p(d), self.p(c)) > ORIENT_TOL
                    && orient(self.p(b), self.p(c), self.p(d)) > ORIENT_TOL;
                if convex {
                    self.flip(a, b, t1, c, t2, d);
                    flipped = true;
                }
            }
            if !flipped {
                return;
            }
        }
    }
}

/// Delaunay triangulation of `points`.
///
/// Exact duplicates are dropped (the lowest index is kept). Fails with
/// [`Error::DegeneratePointSet`] when fewer than three distinct points remain
/// or all of them are collinear.
pub fn delaunay_triangulate(points: &[Pt]) -> Result<Vec<Triangle>> {
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegeneratePointSet("non-finite coordinate".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .partial_cmp(&points[j])
            .expect("finite")
            .then(i.cmp(&j))
    });
    order.dedup_by(|j, i| points[*i] == points[*j]);
    // restore ascending index order so insertion is reproducible
    order.sort_unstable();
    if order.len() < 3 {
        return Err(Error::DegeneratePointSet(format!(
            "{} distinct points, need at least 3",
            order.len()
        )));
    }

    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &i in &order {
        let (x, y) = points[i];
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0);
    let norm: Vec<Pt> = order
        .iter()
        .map(|&i| ((points[i].0 - x0) / span, (points[i].1 - y0) / span))
        .collect();

    let far = (1..norm.len())
        .max_by(|&i, &j| {
            let di = (norm[i].0 - norm[0].0).hypot(norm[i].1 - norm[0].1);
            let dj = (norm[j].0 - norm[0].0).hypot(norm[j].1 - norm[0].1);
            di.partial_cmp(&dj).expect("finite")
        })
        .expect("at least 3 points");
    if norm
        .iter()
        .all(|&q| orient(norm[0], norm[far], q).abs() <= ORIENT_TOL)
    {
        return Err(Error::DegeneratePointSet("all points collinear".into()));
    }

    let n = norm.len();
    let third = (0..n)
        .max_by(|&i, &j| {
            let oi = orient(norm[0], norm[far], norm[i]).abs();
            let oj = orient(norm[0], norm[far], norm[j]).abs();
            oi.partial_cmp(&oj).expect("finite")
        })
        .expect("non-collinear");
    let seed = if orient(norm[0], norm[far], norm[third]) > 0.0 {
        [0, far, third]
    } else {
        [0, third, far]
    };
    let ghost = n;
    let mut mesh = Mesh {
        pts: norm,
        ghost,
        tris: Vec::new(),
        alive: Vec::new(),
        edges: HashMap::new(),
    };
    mesh.add(seed);
    for k in 0..3 {
        mesh.add([seed[(k + 1) % 3], seed[k], ghost]);
    }
    for v in (0..n).filter(|v| !seed.contains(v)) {
        mesh.insert(v)?;
    }
    for t in mesh.alive_ids() {
        if mesh.is_ghost(mesh.tris[t]) {
            mesh.remove(t);
        }
    }
    mesh.lawson();
    mesh.break_ties(&order);

    let mut out: Vec<Triangle> = mesh
        .alive_ids()
        .into_iter()
        .map(|t| {
            let [a, b, c] = mesh.tris[t].map(|v| order[v]);
            // rotate so the smallest index leads; keeps CCW order
            if a < b && a < c {
                [a, b, c]
            } else if b < c {
                [b, c, a]
            } else {
                [c, a, b]
            }
        })
        .collect();
    if out.is_empty() {
        return Err(Error::DegeneratePointSet("no triangles produced".into()));
    }
    out.sort_unstable();
    Ok(out)
}

/// Unique undirected edges `(min, max)` of a triangle list, sorted.
pub fn triangle_edges(tris: &[Triangle]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle() {
        let t = delaunay_triangulate(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        assert_eq!(t, vec![[0, 1, 2]]);
    }

    #[test]
    fn unit_square_uses_smaller_diagonal() {
        // both diagonals are Delaunay; (0,3) beats (1,2) lexicographically
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let t = delaunay_triangulate(&pts).unwrap();
        assert_eq!(t.len(), 2);
        let e = triangle_edges(&t);
        assert_eq!(e.len(), 5);
        assert!(e.contains(&(0, 3)));
        assert!(!e.contains(&(1, 2)));

        // relabel so that (1,2) is now the smaller diagonal
        let pts = [(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        let e = triangle_edges(&delaunay_triangulate(&pts).unwrap());
        assert!(e.contains(&(0, 1)));
    }

    #[test]
    fn collinear_points_are_rejected() {
        let pts: Vec<Pt> = (0..5).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let err = delaunay_triangulate(&pts).unwrap_err();
        assert!(err.to_string().contains("degenerate point set"));
    }

    #[test]
    fn duplicates_are_dropped() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0)];
        let t = delaunay_triangulate(&pts).unwrap();
        assert_eq!(t, vec![[0, 1, 2]]);
        assert!(delaunay_triangulate(&[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn grid_with_collinear_hull_covers_hull() {
        // 5x4 lattice: every hull side carries collinear points
        let pts: Vec<Pt> = (0..20).map(|i| ((i % 5) as f64, (i / 5) as f64)).collect();
        let t = delaunay_triangulate(&pts).unwrap();
        let h = 2 * (5 + 4) - 4;
        assert_eq!(t.len(), 2 * pts.len() - h - 2);
    }
}
