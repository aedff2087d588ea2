//! Level-vertex insertion, padding, and the affine extension of `g` over cells.
//!
//! A [`RefinedComplex`] keeps the original vertices under their original ids and
//! appends inserted vertices. Every split edge keeps its current: a piece from
//! `x` to `y` of an original edge `(u, v)` gets conductance
//! `c(u,v) (g(v) - g(u)) / (g(y) - g(x))`. Faces are cut along level chords,
//! which become zero-conductance level edges.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::complex::{BoundarySpec, CellComplex, Point, Role, VertexId};
use crate::error::{Error, Result};
use crate::morse::LEVEL_TOL;
use crate::network::{key, Network};

/// Cuts per edge: the value of each new vertex and its kind.
type SplitPlan = Vec<((VertexId, VertexId), Vec<(f64, VertexKind)>)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    Original,
    /// On a level crossing.
    TypeI,
    /// Padding vertex.
    TypeII,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AddedVertex {
    pub id: VertexId,
    /// Endpoints of the edge that was split (refined ids).
    pub host_edge: (VertexId, VertexId),
    /// Position along the host edge, in `(0, 1)`.
    pub t: f64,
    pub kind: VertexKind,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RefinedComplex {
    base_vertices: usize,
    k: f64,
    positions: Vec<Point>,
    values: Vec<f64>,
    roles: Vec<Role>,
    kinds: Vec<VertexKind>,
    added: Vec<AddedVertex>,
    edges: BTreeMap<(VertexId, VertexId), f64>,
    base_edges: HashSet<(VertexId, VertexId)>,
    level_edges: BTreeMap<(VertexId, VertexId), f64>,
    faces: Vec<Vec<VertexId>>,
    loops: Vec<Vec<VertexId>>,
    levels: Vec<f64>,
    network: Network,
}

impl RefinedComplex {
    /// Starts from the unrefined complex carrying the values `g`.
    pub fn new(cx: &CellComplex, spec: &BoundarySpec, g: &[f64]) -> Result<Self> {
        let n = cx.vertex_count();
        if g.len() != n {
            return Err(Error::Validation(
                "value count differs from vertex count".into(),
            ));
        }
        let edges: BTreeMap<_, _> = cx
            .network()
            .edges()
            .iter()
            .map(|e| (key(e.a, e.b), e.c))
            .collect();
        let mut rc = RefinedComplex {
            base_vertices: n,
            k: spec.k(),
            positions: cx.positions().to_vec(),
            values: g.to_vec(),
            roles: spec.roles().to_vec(),
            kinds: vec![VertexKind::Original; n],
            added: Vec::new(),
            base_edges: edges.keys().copied().collect(),
            edges,
            level_edges: BTreeMap::new(),
            faces: cx.cells().to_vec(),
            loops: cx.loops().to_vec(),
            levels: Vec::new(),
            network: Network::new(0),
        };
        rc.rebuild_network();
        Ok(rc)
    }

    fn rebuild_network(&mut self) {
        let mut net = Network::new(self.positions.len());
        for (&(a, b), &c) in &self.edges {
            net.add_edge(a, b, c);
        }
        self.network = net;
    }

    pub fn tolerance(&self) -> f64 {
        LEVEL_TOL * self.k
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn base_vertex_count(&self) -> usize {
        self.base_vertices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, v: VertexId) -> f64 {
        self.values[v]
    }

    pub fn position(&self, v: VertexId) -> Point {
        self.positions[v]
    }

    pub fn role(&self, v: VertexId) -> Role {
        self.roles[v]
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.kinds[v]
    }

    pub fn added_vertices(&self) -> &[AddedVertex] {
        &self.added
    }

    /// Conducting edges (original and split pieces).
    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Level chords, with their level value.
    pub fn level_edges(&self) -> &BTreeMap<(VertexId, VertexId), f64> {
        &self.level_edges
    }

    pub fn is_level_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.level_edges.contains_key(&key(a, b))
    }

    /// Edges whose conductance was created by a split.
    pub fn modified_conductances(&self) -> Vec<((VertexId, VertexId), f64)> {
        self.edges
            .iter()
            .filter(|(e, _)| !self.base_edges.contains(e))
            .map(|(&e, &c)| (e, c))
            .collect()
    }

    /// Polygonal faces, counterclockwise.
    pub fn faces(&self) -> &[Vec<VertexId>] {
        &self.faces
    }

    pub fn loops(&self) -> &[Vec<VertexId>] {
        &self.loops
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.roles[v] != Role::Interior
    }

    /// Levels inserted so far, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `V - E + F` counting conducting and level edges.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - (self.edges.len() + self.level_edges.len()) as i64
            + self.faces.len() as i64
    }

    fn at_level(&self, v: VertexId, s: f64) -> bool {
        (self.values[v] - s).abs() <= self.tolerance()
    }

    /// Splits every edge listed in `plan` at the given values, in one pass.
    fn split_edges(&mut self, plan: SplitPlan) {
        let mut chains: HashMap<(VertexId, VertexId), Vec<VertexId>> = HashMap::new();
        for ((a, b), mut cuts) in plan {
            let c = self.edges[&key(a, b)];
            let (ga, gb) = (self.values[a], self.values[b]);
            let (pa, pb) = (self.positions[a], self.positions[b]);
            cuts.sort_by(|x, y| {
                let tx = (x.0 - ga) / (gb - ga);
                let ty = (y.0 - ga) / (gb - ga);
                tx.partial_cmp(&ty).unwrap()
            });
            let mut chain = vec![a];
            for (value, kind) in cuts {
                let t = (value - ga) / (gb - ga);
                let id = self.positions.len();
                self.positions
                    .push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
                self.values.push(value);
                let on_boundary = self.roles[a] != Role::Interior
                    && self.roles[b] != Role::Interior
                    && self.face_count_of_side(a, b) == 1;
                self.roles.push(if on_boundary {
                    Role::Neumann
                } else {
                    Role::Interior
                });
                self.kinds.push(kind);
                self.added.push(AddedVertex {
                    id,
                    host_edge: (a, b),
                    t,
                    kind,
                    value,
                });
                chain.push(id);
            }
            chain.push(b);
            self.edges.remove(&key(a, b));
            let current = c * (gb - ga);
            for w in chain.windows(2) {
                let drop = self.values[w[1]] - self.values[w[0]];
                self.edges.insert(key(w[0], w[1]), current / drop);
            }
            let mut rev = chain.clone();
            rev.reverse();
            chains.insert((a, b), chain);
            chains.insert((b, a), rev);
        }
        let expand = |poly: &Vec<VertexId>| -> Vec<VertexId> {
            let m = poly.len();
            let mut out = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                match chains.get(&(a, b)) {
                    Some(chain) => out.extend_from_slice(&chain[..chain.len() - 1]),
                    None => out.push(a),
                }
            }
            out
        };
        self.faces = self.faces.iter().map(expand).collect();
        self.loops = self.loops.iter().map(expand).collect();
        self.rebuild_network();
    }

    fn face_count_of_side(&self, a: VertexId, b: VertexId) -> usize {
        self.faces
            .iter()
            .filter(|f| {
                let m = f.len();
                (0..m).any(|i| {
                    let (x, y) = (f[i], f[(i + 1) % m]);
                    (x == a && y == b) || (x == b && y == a)
                })
            })
            .count()
    }

    /// Adds a type I vertex at every transversal crossing of each level and
    /// cuts the faces along the level chords. Levels at or outside `[0, k]`
    /// boundaries are skipped.
    pub fn insert_levels(&mut self, levels: &[f64]) -> Result<()> {
        let tol = self.tolerance();
        let mut levels: Vec<f64> = levels
            .iter()
            .copied()
            .filter(|&s| s > tol && s < self.k - tol)
            .filter(|&s| self.levels.iter().all(|&l| (l - s).abs() > tol))
            .collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup_by(|a, b| (*a - *b).abs() <= tol);
        if levels.is_empty() {
            return Ok(());
        }

        let mut plan = Vec::new();
        for &(a, b) in self.edges.keys() {
            let (ga, gb) = (self.values[a], self.values[b]);
            for &s in &levels {
                if (ga - s).abs() <= tol && (gb - s).abs() <= tol {
                    return Err(Error::DegenerateLevel {
                        level: s,
                        reason: format!("edge ({a}, {b}) lies on the level"),
                    });
                }
            }
            let (lo, hi) = (ga.min(gb), ga.max(gb));
            let cuts: Vec<(f64, VertexKind)> = levels
                .iter()
                .filter(|&&s| s > lo + tol && s < hi - tol)
                .map(|&s| (s, VertexKind::TypeI))
                .collect();
            if !cuts.is_empty() {
                plan.push(((a, b), cuts));
            }
        }
        self.split_edges(plan);

        for &s in &levels {
            self.cut_faces(s)?;
        }
        self.levels.extend(levels);
        self.levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(())
    }

    fn cut_faces(&mut self, s: f64) -> Result<()> {
        let tol = self.tolerance();
        let mut out = Vec::with_capacity(self.faces.len());
        for face in std::mem::take(&mut self.faces) {
            let m = face.len();
            let on: Vec<usize> = (0..m).filter(|&i| self.at_level(face[i], s)).collect();
            let above = face.iter().any(|&v| self.values[v] > s + tol);
            let below = face.iter().any(|&v| self.values[v] < s - tol);
            if !(above && below) || on.len() < 2 {
                out.push(face);
                continue;
            }
            if on.len() > 2 {
                return Err(Error::DegenerateLevel {
                    level: s,
                    reason: format!("level meets a cell in {} points", on.len()),
                });
            }
            let (i, j) = (on[0], on[1]);
            if j == i + 1 || (i == 0 && j == m - 1) {
                return Err(Error::DegenerateLevel {
                    level: s,
                    reason: format!("edge ({}, {}) lies on the level", face[i], face[j]),
                });
            }
            out.push(face[i..=j].to_vec());
            let mut rest = face[j..].to_vec();
            rest.extend_from_slice(&face[..=i]);
            out.push(rest);
            self.level_edges.insert(key(face[i], face[j]), s);
        }
        self.faces = out;
        Ok(())
    }

    /// Inserts a midpoint type II vertex on every conducting edge that joins
    /// vertices of two different levels. Returns the number inserted.
    pub fn pad_combinatorial_distance(&mut self, levels: &[f64]) -> usize {
        let tol = self.tolerance();
        let level_of = |v: VertexId| {
            levels
                .iter()
                .position(|&s| (self.values[v] - s).abs() <= tol)
        };
        let plan: Vec<_> = self
            .edges
            .keys()
            .filter_map(|&(a, b)| match (level_of(a), level_of(b)) {
                (Some(x), Some(y)) if x != y => {
                    let mid = 0.5 * (self.values[a] + self.values[b]);
                    Some(((a, b), vec![(mid, VertexKind::TypeII)]))
                }
                _ => None,
            })
            .collect();
        let count = plan.len();
        self.split_edges(plan);
        count
    }

    /// Splits one conducting edge at parameter `t` (a type II vertex).
    pub fn subdivide_edge(&mut self, a: VertexId, b: VertexId, t: f64) -> Result<VertexId> {
        if !self.edges.contains_key(&key(a, b)) {
            return Err(Error::Validation(format!(
                "({a}, {b}) is not a conducting edge"
            )));
        }
        if !(t > 0.0 && t < 1.0) || self.values[a] == self.values[b] {
            return Err(Error::Validation(
                "cannot subdivide a level edge or at an endpoint".into(),
            ));
        }
        let value = self.values[a] + t * (self.values[b] - self.values[a]);
        self.split_edges(vec![((a, b), vec![(value, VertexKind::TypeII)])]);
        Ok(self.positions.len() - 1)
    }

    /// Largest `|Δg|` over the inserted vertices.
    pub fn max_added_laplacian(&self) -> f64 {
        self.added
            .iter()
            .map(|a| {
                crate::bvp::laplacian_at(&self.network, &self.values, a.id, None)
                    .unwrap_or(f64::INFINITY)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest gap between the current carried by any split piece and that of
    /// its host edge.
    pub fn max_current_defect(&self, cx: &CellComplex) -> f64 {
        let base = cx.network();
        let mut worst: f64 = 0.0;
        for (&(a, b), &c) in &self.edges {
            let current = (c * (self.values[a] - self.values[b])).abs();
            // follow the chain back to an original edge
            if let Some(orig) = self.origin_edge(a, b) {
                let e = base.edge(base.edge_between(orig.0, orig.1).expect("origin edge"));
                let host = (e.c * (self.values[e.a] - self.values[e.b])).abs();
                worst = worst.max((current - host).abs());
            }
        }
        worst
    }

    /// The original edge a conducting piece lies on.
    pub fn origin_edge(&self, a: VertexId, b: VertexId) -> Option<(VertexId, VertexId)> {
        let end = |mut v: VertexId, mut from: VertexId| -> VertexId {
            while v >= self.base_vertices {
                let next = self
                    .network
                    .neighbors(v)
                    .iter()
                    .map(|&(w, _)| w)
                    .find(|&w| w != from)
                    .expect("chain vertex has two conducting neighbours");
                from = v;
                v = next;
            }
            v
        };
        let x = end(a, b);
        let y = end(b, a);
        (x != y).then(|| (x.min(y), x.max(y)))
    }
}

/// Value of the affine extension of `g` at `point`. Triangles interpolate
/// barycentrically; quadrilaterals are cut along the diagonal from their
/// lowest-id vertex.
pub fn affine_value_at(cx: &CellComplex, g: &[f64], point: Point) -> Result<f64> {
    for cell in cx.cells() {
        let tris: Vec<[VertexId; 3]> = if cell.len() == 3 {
            vec![[cell[0], cell[1], cell[2]]]
        } else {
            let r = (0..4).min_by_key(|&i| cell[i]).unwrap();
            let q = |i: usize| cell[(r + i) % 4];
            vec![[q(0), q(1), q(2)], [q(0), q(2), q(3)]]
        };
        for tri in tris {
            if let Some(w) = barycentric(tri.map(|v| cx.position(v)), point) {
                return Ok(w[0] * g[tri[0]] + w[1] * g[tri[1]] + w[2] * g[tri[2]]);
            }
        }
    }
    Err(Error::OutsideComplex(point[0], point[1]))
}

fn barycentric(p: [Point; 3], x: Point) -> Option<[f64; 3]> {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let l1 =
        ((x[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (x[1] - p[0][1])) / det;
    let l2 =
        ((p[1][0] - p[0][0]) * (x[1] - p[0][1]) - (x[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    let l0 = 1.0 - l1 - l2;
    let eps = -1e-12;
    (l0 >= eps && l1 >= eps && l2 >= eps).then_some([l0, l1, l2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::{dirichlet_energy, solve_dnbvp, solve_network};
    use crate::fixtures;

    fn quad_refined() -> (CellComplex, BoundarySpec, RefinedComplex) {
        let (cx, spec) = fixtures::quad();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let rc = RefinedComplex::new(&cx, &spec, g.values()).unwrap();
        (cx, spec, rc)
    }

    #[test]
    fn affine_values() {
        let (cx, spec) = fixtures::quad();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let v = affine_value_at(&cx, g.values(), [0.5, 0.0]).unwrap();
        assert!((v - 7.0 / 22.0).abs() < 1e-12);
        assert!(matches!(
            affine_value_at(&cx, g.values(), [5.0, 5.0]),
            Err(Error::OutsideComplex(..))
        ));
    }

    #[test]
    fn symmetric_split_of_one_edge() {
        let labels = vec![0, 1, 2];
        let pos = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let cx = CellComplex::new(
            labels,
            pos,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
            vec![vec![0, 1, 2]],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let spec = BoundarySpec::new(&cx, 1.0, vec![vec![0]], vec![vec![2]]).unwrap();
        let g = crate::bvp::solve_dnbvp(&cx, &spec).unwrap();
        assert_eq!(g.values()[0], 1.0);
        let mut rc = RefinedComplex::new(&cx, &spec, g.values()).unwrap();
        rc.insert_levels(&[0.5]).unwrap();
        let x = rc
            .added_vertices()
            .iter()
            .find(|a| a.host_edge == (0, 1))
            .unwrap()
            .id;
        assert!((rc.network().conductance(0, x).unwrap() - 2.0).abs() < 1e-12);
        assert!((rc.network().conductance(x, 1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_level_on_quad() {
        let (cx, _, mut rc) = quad_refined();
        rc.insert_levels(&[0.25]).unwrap();
        assert_eq!(rc.added_vertices().len(), 2);
        assert_eq!(rc.level_edges().len(), 1);
        let v10 = fixtures::grid_vertex(&cx, 1, 0);
        let on_bottom = rc.added_vertices().iter().find(|a| {
            let (h0, h1) = a.host_edge;
            key(h0, h1) == key(0, v10)
        });
        let x = on_bottom.unwrap().id;
        let expect = (7.0 / 11.0) / (7.0 / 11.0 - 0.25);
        assert!((rc.network().conductance(x, v10).unwrap() - expect).abs() < 1e-12);
        assert!(rc.max_added_laplacian() < 1e-12);
        assert_eq!(rc.euler_characteristic(), cx.euler_characteristic());
        assert_eq!(rc.role(x), Role::Neumann);
    }

    #[test]
    fn boundary_levels_are_ignored() {
        let (_, _, mut rc) = quad_refined();
        rc.insert_levels(&[1.0, 0.0]).unwrap();
        assert!(rc.added_vertices().is_empty());
    }

    #[test]
    fn padding_preserves_energy_and_harmonicity() {
        let (cx, _, mut rc) = quad_refined();
        let levels = [7.0 / 11.0, 6.0 / 11.0];
        rc.insert_levels(&levels).unwrap();
        let padded = rc.pad_combinatorial_distance(&levels);
        assert!(padded > 0);
        let e0 = dirichlet_energy(cx.network(), &rc.values()[..cx.vertex_count()]);
        let e1 = dirichlet_energy(rc.network(), rc.values());
        assert!((e0 - e1).abs() < 1e-12);
        assert!(rc.max_added_laplacian() < 1e-12);
        assert!(rc.max_current_defect(&cx) < 1e-12);
    }

    #[test]
    fn resolving_the_refinement_reproduces_g() {
        let (cx, spec) = fixtures::annulus();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let mut rc = RefinedComplex::new(&cx, &spec, g.values()).unwrap();
        rc.insert_levels(&[0.3, 0.6]).unwrap();
        let fixed: Vec<Option<f64>> = (0..rc.vertex_count())
            .map(|v| match rc.role(v) {
                Role::Top => Some(1.0),
                Role::Ground => Some(0.0),
                _ => None,
            })
            .collect();
        let (again, _) = solve_network(rc.network(), &fixed, 1e-12).unwrap();
        for v in 0..rc.vertex_count() {
            assert!((again[v] - rc.value(v)).abs() < 1e-10);
        }
        assert_eq!(rc.euler_characteristic(), 0);
    }
}
