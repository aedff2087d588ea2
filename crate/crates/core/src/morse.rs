//! Sign-change indices, the boundary index formula, level curves and flux lengths.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::complex::{BoundarySpec, CellComplex, Point, Role, VertexId};
use crate::error::{Error, Result};
use crate::refine::RefinedComplex;

/// An exact half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub fn from_halves(halves: i64) -> Self {
        HalfInt(halves)
    }

    pub fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

impl std::iter::Sum for HalfInt {
    fn sum<I: Iterator<Item = HalfInt>>(iter: I) -> HalfInt {
        HalfInt(iter.map(|h| h.0).sum())
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// How equal neighbour values are treated when reading signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum TiePolicy {
    /// Equal adjacent values are an error.
    #[default]
    Strict,
    /// Break ties by comparing `(g, vertex id)` lexicographically.
    Perturb,
}

/// Relative tolerance (times `k`) under which two values count as equal.
pub const LEVEL_TOL: f64 = 1e-9;

/// Sign of `g(w) - g(v)` under the tie policy; `Err(())` on an unresolved tie.
pub(crate) fn compare(
    values: &[f64],
    v: VertexId,
    w: VertexId,
    tol: f64,
    policy: TiePolicy,
) -> std::result::Result<i8, ()> {
    let d = values[w] - values[v];
    if d.abs() > tol {
        return Ok(if d > 0.0 { 1 } else { -1 });
    }
    match policy {
        TiePolicy::Strict => Err(()),
        TiePolicy::Perturb => Ok(if w > v { 1 } else { -1 }),
    }
}

/// Number of sign alternations in a sign sequence, cyclic or open.
pub fn count_alternations(signs: &[i8], cyclic: bool) -> usize {
    if signs.len() < 2 {
        return 0;
    }
    let open = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if cyclic && signs[0] != signs[signs.len() - 1] {
        open + 1
    } else {
        open
    }
}

fn fan_signs(
    cx: &CellComplex,
    values: &[f64],
    v: VertexId,
    tol: f64,
    policy: TiePolicy,
) -> Result<Vec<i8>> {
    let star = cx.vertex_star(v)?;
    let mut signs = Vec::with_capacity(star.len());
    let mut ties = Vec::new();
    for &w in star {
        match compare(values, v, w, tol, policy) {
            Ok(s) => signs.push(s),
            Err(()) => ties.push((v.min(w), v.max(w))),
        }
    }
    if ties.is_empty() {
        Ok(signs)
    } else {
        Err(Error::Tie(ties))
    }
}

/// `Sgc(v)`: sign changes of `g(w) - g(v)` around the star of `v`
/// (cyclic for interior vertices, along the open fan on the boundary).
pub fn sign_changes(
    cx: &CellComplex,
    values: &[f64],
    v: VertexId,
    tol: f64,
    policy: TiePolicy,
) -> Result<usize> {
    let signs = fan_signs(cx, values, v, tol, policy)?;
    Ok(count_alternations(&signs, !cx.is_boundary(v)))
}

/// `1 - Sgc/2` at interior vertices, `(1 - Sgc)/2` on the boundary.
pub fn index_from_sgc(sgc: usize, boundary: bool) -> HalfInt {
    if boundary {
        HalfInt::from_halves(1 - sgc as i64)
    } else {
        HalfInt::from_halves(2 - sgc as i64)
    }
}

pub fn vertex_index(
    cx: &CellComplex,
    values: &[f64],
    v: VertexId,
    tol: f64,
    policy: TiePolicy,
) -> Result<HalfInt> {
    let sgc = sign_changes(cx, values, v, tol, policy)?;
    Ok(index_from_sgc(sgc, cx.is_boundary(v)))
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VertexIndex {
    pub vertex: VertexId,
    pub label: u64,
    pub value: f64,
    pub boundary: bool,
    pub sgc: usize,
    pub index: HalfInt,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexReport {
    /// Vertices off the constant boundary arcs, with their indices.
    pub per_vertex: Vec<VertexIndex>,
    pub interior_singular: Vec<VertexId>,
    pub boundary_singular: Vec<VertexId>,
    pub total_index: HalfInt,
    /// Endpoints of maximal proper constant boundary arcs.
    pub arc_endpoint_count: usize,
    pub euler_characteristic: i64,
    pub expected: HalfInt,
    pub tie_policy: TiePolicy,
}

impl IndexReport {
    pub fn singular(&self) -> impl Iterator<Item = &VertexIndex> {
        self.per_vertex.iter().filter(|v| v.index != HalfInt::ZERO)
    }
}

/// Computes every index and checks `Σ Ind = χ(Ω) - t/4`.
pub fn index_report(
    cx: &CellComplex,
    spec: &BoundarySpec,
    values: &[f64],
    policy: TiePolicy,
) -> Result<IndexReport> {
    let tol = LEVEL_TOL * spec.k();
    let mut per_vertex = Vec::new();
    let mut ties = Vec::new();
    for v in 0..cx.vertex_count() {
        if spec.role(v).is_dirichlet() {
            continue;
        }
        match sign_changes(cx, values, v, tol, policy) {
            Ok(sgc) => {
                let boundary = cx.is_boundary(v);
                per_vertex.push(VertexIndex {
                    vertex: v,
                    label: cx.label(v),
                    value: values[v],
                    boundary,
                    sgc,
                    index: index_from_sgc(sgc, boundary),
                });
            }
            Err(Error::Tie(pairs)) => ties.extend(pairs),
            Err(e) => return Err(e),
        }
    }
    if !ties.is_empty() {
        ties.sort_unstable();
        ties.dedup();
        return Err(Error::Tie(ties));
    }
    let t = spec
        .arcs()
        .iter()
        .filter(|a| a.role.is_dirichlet() && !a.closed)
        .count()
        * 2;
    let chi = cx.euler_characteristic();
    let expected = HalfInt::from_halves(2 * chi - t as i64 / 2);
    let total: HalfInt = per_vertex.iter().map(|v| v.index).sum();
    let singular = |boundary: bool| {
        per_vertex
            .iter()
            .filter(|v| v.boundary == boundary && v.index != HalfInt::ZERO)
            .map(|v| v.vertex)
            .collect()
    };
    Ok(IndexReport {
        interior_singular: singular(false),
        boundary_singular: singular(true),
        per_vertex,
        total_index: total,
        arc_endpoint_count: t,
        euler_characteristic: chi,
        expected,
        tie_policy: policy,
    })
}

/// [`index_report`], failing with `IndexMismatch` when the identity does not hold.
pub fn index_formula_check(
    cx: &CellComplex,
    spec: &BoundarySpec,
    values: &[f64],
    policy: TiePolicy,
) -> Result<IndexReport> {
    let report = index_report(cx, spec, values, policy)?;
    if report.total_index != report.expected {
        return Err(Error::IndexMismatch {
            total: report.total_index.to_string(),
            expected: report.expected.to_string(),
        });
    }
    Ok(report)
}

/// Side of a level curve from which flux is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Above,
    Below,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelComponent {
    /// Walk order for a simple path or cycle, sorted otherwise.
    pub vertices: Vec<VertexId>,
    pub points: Vec<Point>,
    pub segments: Vec<(VertexId, VertexId)>,
    /// No vertex on the boundary.
    pub closed: bool,
    pub singular: Vec<VertexId>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelCurve {
    pub value: f64,
    pub components: Vec<LevelComponent>,
    pub singular_vertices: Vec<VertexId>,
}

/// Components of `{g = s}` in a complex already refined at `s`.
pub fn trace_level_curve(rc: &RefinedComplex, s: f64) -> Result<LevelCurve> {
    let tol = rc.tolerance();
    let at = |v: VertexId| (rc.value(v) - s).abs() <= tol;
    let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &(a, b) in rc.level_edges().keys() {
        if at(a) && at(b) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    if adj.is_empty() {
        return Err(Error::DegenerateLevel {
            level: s,
            reason: "no level segments at this value; refine first".into(),
        });
    }
    let mut seen = BTreeSet::new();
    let mut components = Vec::new();
    let mut singular_vertices = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut members = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adj[&v] {
                if seen.insert(w) {
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        let mut segments: Vec<(VertexId, VertexId)> = Vec::new();
        for &v in &members {
            for &w in &adj[&v] {
                if v < w {
                    segments.push((v, w));
                }
            }
        }
        let singular: Vec<VertexId> = members
            .iter()
            .copied()
            .filter(|&v| {
                let d = adj[&v].len();
                if rc.is_boundary(v) {
                    d >= 2 && rc.role(v) == Role::Neumann
                } else {
                    d >= 3
                }
            })
            .collect();
        let closed = !members.iter().any(|&v| rc.is_boundary(v));
        let vertices = if members.iter().all(|v| adj[v].len() <= 2) {
            let first = members
                .iter()
                .copied()
                .find(|v| adj[v].len() == 1)
                .unwrap_or(members[0]);
            let mut order = vec![first];
            let mut prev = usize::MAX;
            let mut cur = first;
            loop {
                match adj[&cur].iter().copied().find(|&w| w != prev && w != first) {
                    Some(n) if order.len() < members.len() => {
                        order.push(n);
                        prev = cur;
                        cur = n;
                    }
                    _ => break,
                }
            }
            order
        } else {
            members
        };
        singular_vertices.extend(singular.iter().copied());
        components.push(LevelComponent {
            points: vertices.iter().map(|&v| rc.position(v)).collect(),
            vertices,
            segments,
            closed,
            singular,
        });
    }
    singular_vertices.sort_unstable();
    Ok(LevelCurve {
        value: s,
        components,
        singular_vertices,
    })
}

/// `|Σ ∂g/∂n|` over `vertices` at level `s`, taken from one side.
pub fn flux_length(rc: &RefinedComplex, vertices: &[VertexId], s: f64, side: Side) -> Result<f64> {
    let tol = rc.tolerance();
    if side == Side::Above && s >= rc.k() - tol {
        return Err(Error::SideUndefined(format!(
            "nothing lies above level {s}"
        )));
    }
    if side == Side::Below && s <= tol {
        return Err(Error::SideUndefined(format!(
            "nothing lies below level {s}"
        )));
    }
    let net = rc.network();
    let mut total = 0.0;
    for &v in vertices {
        for &(w, e) in net.neighbors(v) {
            let gw = rc.value(w);
            let on_side = match side {
                Side::Above => gw > s + tol,
                Side::Below => gw < s - tol,
            };
            if on_side {
                total += net.edge(e).c * (gw - rc.value(v));
            }
        }
    }
    Ok(total.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::solve_dnbvp;
    use crate::fixtures;

    #[test]
    fn alternation_counts() {
        assert_eq!(count_alternations(&[1, -1, 1, -1], true), 4);
        assert_eq!(count_alternations(&[1, -1, -1], false), 1);
        assert_eq!(count_alternations(&[1, -1, 1], false), 2);
        assert_eq!(count_alternations(&[1, 1, 1], true), 0);
        assert_eq!(index_from_sgc(4, false), HalfInt::from_int(-1));
        assert_eq!(index_from_sgc(2, true), HalfInt::from_halves(-1));
        assert_eq!(index_from_sgc(1, true), HalfInt::ZERO);
    }

    #[test]
    fn half_int_display() {
        assert_eq!(HalfInt::from_halves(-3).to_string(), "-3/2");
        assert_eq!(HalfInt::from_halves(-4).to_string(), "-2");
        assert_eq!(HalfInt::ZERO.to_string(), "0");
    }

    #[test]
    fn quad_vertex_index() {
        let (cx, spec) = fixtures::quad();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let v = fixtures::grid_vertex(&cx, 1, 0);
        let tol = LEVEL_TOL;
        assert_eq!(
            sign_changes(&cx, g.values(), v, tol, TiePolicy::Strict).unwrap(),
            1
        );
        assert_eq!(
            vertex_index(&cx, g.values(), v, tol, TiePolicy::Strict).unwrap(),
            HalfInt::ZERO
        );
        let report = index_formula_check(&cx, &spec, g.values(), TiePolicy::Strict).unwrap();
        assert_eq!(report.total_index, HalfInt::ZERO);
        assert_eq!(report.arc_endpoint_count, 4);
        assert!(report.singular().next().is_none());
    }

    #[test]
    fn ties_are_reported() {
        let (cx, spec) = fixtures::quad();
        let mut g = solve_dnbvp(&cx, &spec).unwrap().values().to_vec();
        let a = fixtures::grid_vertex(&cx, 1, 0);
        let b = fixtures::grid_vertex(&cx, 1, 1);
        g[b] = g[a];
        assert!(matches!(
            index_report(&cx, &spec, &g, TiePolicy::Strict),
            Err(Error::Tie(_))
        ));
        assert!(index_report(&cx, &spec, &g, TiePolicy::Perturb).is_ok());
    }

    #[test]
    fn quad_level_length_matches_height() {
        let (cx, spec) = fixtures::quad();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        for s in [0.25, 0.5, 0.8] {
            let mut rc = RefinedComplex::new(&cx, &spec, g.values()).unwrap();
            rc.insert_levels(&[s]).unwrap();
            let curve = trace_level_curve(&rc, s).unwrap();
            assert_eq!(curve.components.len(), 1);
            let comp = &curve.components[0];
            assert!(!comp.closed);
            assert!(curve.singular_vertices.is_empty());
            for side in [Side::Above, Side::Below] {
                let l = flux_length(&rc, &comp.vertices, s, side).unwrap();
                assert!((l - 13.0 / 11.0).abs() < 1e-10, "s={s} {side:?} {l}");
            }
        }
    }

    #[test]
    fn annulus_singular_level_and_alpha_arc() {
        let (cx, spec) = fixtures::annulus();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let report = index_formula_check(&cx, &spec, g.values(), TiePolicy::Strict).unwrap();
        let us = report.boundary_singular[0];
        let s = g.value(us);
        let mut rc = RefinedComplex::new(&cx, &spec, g.values()).unwrap();
        rc.insert_levels(&[s]).unwrap();
        let curve = trace_level_curve(&rc, s).unwrap();
        assert_eq!(curve.singular_vertices, vec![us]);
        let comp = curve
            .components
            .iter()
            .find(|c| c.vertices.contains(&us))
            .unwrap();
        assert_eq!(
            comp.segments
                .iter()
                .filter(|e| e.0 == us || e.1 == us)
                .count(),
            2
        );
        let above = flux_length(&rc, &comp.vertices, s, Side::Above).unwrap();
        let below = flux_length(&rc, &comp.vertices, s, Side::Below).unwrap();
        assert!((above - below).abs() < 1e-9 * above);

        let alpha: Vec<VertexId> = spec.alpha_arcs().iter().flatten().copied().collect();
        let c = crate::bvp::alpha_flux(&cx, &spec, g.values()).unwrap();
        let l = flux_length(&rc, &alpha, spec.k(), Side::Below).unwrap();
        assert!((l - c).abs() < 1e-9 * c);
        assert!(matches!(
            flux_length(&rc, &alpha, spec.k(), Side::Above),
            Err(Error::SideUndefined(_))
        ));
    }
}
