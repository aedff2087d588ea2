//! Weighted planar cell complexes and their boundary data.
//!
//! A [`CellComplex`] is immutable once built: every structural invariant is
//! checked in [`CellComplex::new`], and the rotation system (the ccw order of
//! neighbours around every vertex) is derived from the planar coordinates.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{BoundaryRecord, EdgeRecord, MeshDocument, Real, VertexRecord};
use crate::network::{key, Network};

pub type VertexId = usize;

pub type Point = [f64; 2];

const ANGLE_TOL: f64 = 1e-9;

/// Counterclockwise angle of `to - from`, in `[0, 2π)`.
pub fn direction(from: Point, to: Point) -> f64 {
    let a = (to[1] - from[1]).atan2(to[0] - from[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Counterclockwise sweep from angle `a` to angle `b`, in `[0, 2π)`.
pub fn sweep(a: f64, b: f64) -> f64 {
    let d = b - a;
    if d < 0.0 {
        d + 2.0 * PI
    } else {
        d
    }
}

pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let p = points[i];
            let q = points[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        / 2.0
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

#[derive(Debug, Clone)]
pub struct CellComplex {
    labels: Vec<u64>,
    positions: Vec<Point>,
    network: Network,
    cells: Vec<Vec<VertexId>>,
    loops: Vec<Vec<VertexId>>,
    /// `(loop, position in loop)` for boundary vertices.
    loop_slot: Vec<Option<(usize, usize)>>,
    stars: Vec<Vec<VertexId>>,
    edge_cells: Vec<usize>,
}

impl CellComplex {
    /// Builds and validates a complex. Vertices are indexed `0..labels.len()`;
    /// `edges` are `(a, b, c)` index triples; `loops` list boundary cycles with
    /// the outermost first (either orientation is accepted and normalized so the
    /// region lies to the left).
    pub fn new(
        labels: Vec<u64>,
        positions: Vec<Point>,
        edges: &[(VertexId, VertexId, f64)],
        cells: Vec<Vec<VertexId>>,
        loops: Vec<Vec<VertexId>>,
    ) -> Result<Self> {
        let n = positions.len();
        if labels.len() != n {
            return Err(invalid("label and position counts differ"));
        }
        if n == 0 {
            return Err(invalid("complex has no vertices"));
        }
        if positions
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(invalid("non-finite vertex coordinate"));
        }

        let mut network = Network::new(n);
        for &(a, b, c) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(a.max(b)));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid(format!(
                    "edge ({}, {}) has non-positive conductance",
                    labels[a], labels[b]
                )));
            }
            if network.add_edge(a, b, c).is_none() {
                return Err(invalid(format!(
                    "graph is not simple at edge ({}, {})",
                    labels[a], labels[b]
                )));
            }
        }
        if !network.is_connected() {
            return Err(invalid("graph is disconnected"));
        }

        // Cells: orientation, convexity, sides are edges, manifold edges.
        let mut edge_cells = vec![0usize; network.edge_count()];
        let mut side_owner: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        for (ci, cell) in cells.iter().enumerate() {
            if cell.len() != 3 && cell.len() != 4 {
                return Err(invalid(format!(
                    "cell {ci} is not a triangle or quadrilateral"
                )));
            }
            if cell.iter().any(|&v| v >= n) {
                return Err(invalid(format!("cell {ci} references an unknown vertex")));
            }
            let distinct: HashSet<_> = cell.iter().collect();
            if distinct.len() != cell.len() {
                return Err(invalid(format!("cell {ci} repeats a vertex")));
            }
            let pts: Vec<Point> = cell.iter().map(|&v| positions[v]).collect();
            if signed_area(&pts) <= 0.0 {
                return Err(invalid(format!(
                    "inconsistent orientation: cell {ci} is not counterclockwise"
                )));
            }
            if cell.len() == 4 && !strictly_convex(&pts) {
                return Err(invalid(format!(
                    "quadrilateral cell {ci} is not strictly convex"
                )));
            }
            for i in 0..cell.len() {
                let a = cell[i];
                let b = cell[(i + 1) % cell.len()];
                let e = network.edge_between(a, b).ok_or_else(|| {
                    invalid(format!(
                        "side ({}, {}) of cell {ci} is not an edge",
                        labels[a], labels[b]
                    ))
                })?;
                edge_cells[e] += 1;
                if edge_cells[e] > 2 {
                    return Err(invalid(format!(
                        "non-manifold edge ({}, {})",
                        labels[a], labels[b]
                    )));
                }
                if side_owner.insert((a, b), ci).is_some() {
                    return Err(invalid(format!(
                        "inconsistent orientation at edge ({}, {})",
                        labels[a], labels[b]
                    )));
                }
            }
        }
        for (e, &count) in edge_cells.iter().enumerate() {
            if count == 0 {
                let edge = network.edge(e);
                return Err(invalid(format!(
                    "dangling edge ({}, {}) lies in no cell",
                    labels[edge.a], labels[edge.b]
                )));
            }
        }

        // Boundary loops.
        let mut loops = loops;
        let mut loop_slot = vec![None; n];
        let mut covered = HashSet::new();
        for (li, lp) in loops.iter_mut().enumerate() {
            if lp.len() >= 2 && lp.first() == lp.last() {
                lp.pop();
            }
            if lp.len() < 3 {
                return Err(invalid(format!(
                    "boundary loop {li} has fewer than 3 vertices"
                )));
            }
            let m = lp.len();
            let mut forward = 0;
            for i in 0..m {
                let (a, b) = (lp[i], lp[(i + 1) % m]);
                if a >= n || b >= n {
                    return Err(invalid(format!(
                        "boundary loop {li} references an unknown vertex"
                    )));
                }
                let e = network.edge_between(a, b).ok_or_else(|| {
                    invalid(format!(
                        "boundary loop {li} step ({}, {}) is not an edge",
                        labels[a], labels[b]
                    ))
                })?;
                if edge_cells[e] != 1 {
                    return Err(invalid(format!(
                        "boundary loop {li} uses interior edge ({}, {})",
                        labels[a], labels[b]
                    )));
                }
                if side_owner.contains_key(&(a, b)) {
                    forward += 1;
                }
            }
            if forward == 0 {
                lp.reverse();
            } else if forward != m {
                return Err(invalid(format!(
                    "inconsistent orientation along boundary loop {li}"
                )));
            }
            for i in 0..m {
                let v = lp[i];
                if loop_slot[v].is_some() {
                    return Err(invalid(format!(
                        "boundary vertex {} appears twice in the boundary loops",
                        labels[v]
                    )));
                }
                loop_slot[v] = Some((li, i));
                covered.insert(key(lp[i], lp[(i + 1) % m]));
            }
        }
        let boundary_edges = edge_cells.iter().filter(|&&c| c == 1).count();
        if covered.len() != boundary_edges {
            return Err(invalid("boundary loops do not cover every boundary edge"));
        }
        if loops.is_empty() {
            return Err(invalid("no boundary loops declared"));
        }
        for (li, lp) in loops.iter().enumerate() {
            let pts: Vec<Point> = lp.iter().map(|&v| positions[v]).collect();
            let area = signed_area(&pts);
            if li == 0 && area <= 0.0 {
                return Err(invalid("first boundary loop is not the outermost loop"));
            }
            if li > 0 && area >= 0.0 {
                return Err(invalid(format!("boundary loop {li} is not an inner loop")));
            }
        }

        let chi = n as i64 - network.edge_count() as i64 + cells.len() as i64;
        if chi != 2 - loops.len() as i64 {
            return Err(invalid(format!(
                "V - E + F = {chi} does not match a planar region with {} boundary loops",
                loops.len()
            )));
        }

        let mut cx = CellComplex {
            labels,
            positions,
            network,
            cells,
            loops,
            loop_slot,
            stars: Vec::new(),
            edge_cells,
        };
        cx.stars = cx.build_stars()?;
        Ok(cx)
    }

    /// Derives the rotation system and checks it against the cell corners.
    fn build_stars(&self) -> Result<Vec<Vec<VertexId>>> {
        let n = self.vertex_count();
        // corners[v] = (next, prev) for each cell corner at v
        let mut corners: Vec<Vec<(VertexId, VertexId)>> = vec![Vec::new(); n];
        for cell in &self.cells {
            let m = cell.len();
            for i in 0..m {
                corners[cell[i]].push((cell[(i + 1) % m], cell[(i + m - 1) % m]));
            }
        }
        let mut stars = Vec::with_capacity(n);
        for v in 0..n {
            let label = self.labels[v];
            if corners[v].is_empty() {
                return Err(invalid(format!("dangling vertex {label}")));
            }
            let by_next: HashMap<VertexId, VertexId> = corners[v].iter().copied().collect();
            if by_next.len() != corners[v].len() {
                return Err(invalid(format!("cells overlap around vertex {label}")));
            }
            let here = self.positions[v];
            let total: f64 = corners[v]
                .iter()
                .map(|&(nx, pv)| {
                    sweep(
                        direction(here, self.positions[nx]),
                        direction(here, self.positions[pv]),
                    )
                })
                .sum();
            let star = match self.loop_slot[v] {
                None => {
                    if (total - 2.0 * PI).abs() > ANGLE_TOL {
                        return Err(invalid(format!("cells overlap around vertex {label}")));
                    }
                    if corners[v].len() != self.network.degree(v) {
                        return Err(invalid(format!("rotation system broken at vertex {label}")));
                    }
                    let start = corners[v][0].0;
                    let mut cycle = vec![start];
                    let mut cur = by_next[&start];
                    while cur != start {
                        if cycle.len() > corners[v].len() {
                            return Err(invalid(format!(
                                "rotation system broken at vertex {label}"
                            )));
                        }
                        cycle.push(cur);
                        cur = *by_next.get(&cur).ok_or_else(|| {
                            invalid(format!("rotation system broken at vertex {label}"))
                        })?;
                    }
                    if cycle.len() != corners[v].len() {
                        return Err(invalid(format!(
                            "vertex {label} has a non-disk neighbourhood"
                        )));
                    }
                    // Canonical start: the neighbour with the smallest angle.
                    let (offset, _) = cycle
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| (i, direction(here, self.positions[w])))
                        .fold(
                            (0, f64::INFINITY),
                            |best, cur| if cur.1 < best.1 { cur } else { best },
                        );
                    cycle.rotate_left(offset);
                    cycle
                }
                Some((li, pos)) => {
                    if total >= 2.0 * PI - ANGLE_TOL {
                        return Err(invalid(format!(
                            "cells overlap around boundary vertex {label}"
                        )));
                    }
                    let lp = &self.loops[li];
                    let next = lp[(pos + 1) % lp.len()];
                    let prev = lp[(pos + lp.len() - 1) % lp.len()];
                    let mut fan = vec![next];
                    let mut cur = next;
                    while cur != prev {
                        cur = *by_next.get(&cur).ok_or_else(|| {
                            invalid(format!("vertex {label} has a non-disk neighbourhood"))
                        })?;
                        fan.push(cur);
                        if fan.len() > corners[v].len() + 1 {
                            return Err(invalid(format!(
                                "rotation system broken at vertex {label}"
                            )));
                        }
                    }
                    if fan.len() != corners[v].len() + 1 || fan.len() != self.network.degree(v) {
                        return Err(invalid(format!(
                            "vertex {label} has a non-disk neighbourhood"
                        )));
                    }
                    fan
                }
            };
            // The chained order must agree with the angular order.
            let base = direction(here, self.positions[star[0]]);
            let angles: Vec<f64> = star
                .iter()
                .map(|&w| sweep(base, direction(here, self.positions[w])))
                .collect();
            if angles.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(format!(
                    "rotation system at vertex {label} disagrees with cell orientation"
                )));
            }
            stars.push(star);
        }
        Ok(stars)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.network.edge_count()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn label(&self, v: VertexId) -> u64 {
        self.labels[v]
    }

    pub fn vertex_by_label(&self, label: u64) -> Option<VertexId> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, v: VertexId) -> Point {
        self.positions[v]
    }

    pub fn cells(&self) -> &[Vec<VertexId>] {
        &self.cells
    }

    /// Boundary loops with the region on their left; the outer loop is first.
    pub fn loops(&self) -> &[Vec<VertexId>] {
        &self.loops
    }

    pub fn loop_slot(&self, v: VertexId) -> Option<(usize, usize)> {
        self.loop_slot[v]
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.loop_slot[v].is_some()
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_cells[edge] == 1
    }

    /// `V - E + F`, counting 2-cells only.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.cell_count() as i64
    }

    /// Neighbours of `v` in counterclockwise order. Interior vertices start at the
    /// neighbour of smallest angle; boundary vertices give the open fan from the
    /// next boundary vertex round to the previous one.
    pub fn vertex_star(&self, v: VertexId) -> Result<&[VertexId]> {
        self.stars
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownVertex(v))
    }
}

fn strictly_convex(pts: &[Point]) -> bool {
    let n = pts.len();
    (0..n).all(|i| {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let c = pts[(i + 2) % n];
        (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) > 0.0
    })
}

/// Boundary role of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Role {
    Interior,
    /// Dirichlet value `k` (on an α-arc).
    Top,
    /// Dirichlet value 0.
    Ground,
    /// Zero normal derivative.
    Neumann,
}

impl Role {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, Role::Top | Role::Ground)
    }
}

/// A maximal run of boundary vertices sharing one role, in loop order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub id: usize,
    pub role: Role,
    #[serde(rename = "loop")]
    pub loop_index: usize,
    pub vertices: Vec<VertexId>,
    /// The arc is a whole boundary loop.
    pub closed: bool,
}

#[derive(Debug, Clone)]
pub struct BoundarySpec {
    k: f64,
    alpha_arcs: Vec<Vec<VertexId>>,
    beta_arcs: Vec<Vec<VertexId>>,
    roles: Vec<Role>,
    arcs: Vec<BoundaryArc>,
}

impl BoundarySpec {
    /// Assigns roles: α vertices get `k`; β vertices are Neumann; the remaining
    /// outer-loop vertices are Neumann when inner loops exist; every other
    /// boundary vertex is grounded. On a single-loop region the β-arcs lie on
    /// the outer loop and the remainder is the ground set.
    pub fn new(
        cx: &CellComplex,
        k: f64,
        alpha_arcs: Vec<Vec<VertexId>>,
        beta_arcs: Vec<Vec<VertexId>>,
    ) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid("k must be positive"));
        }
        let n = cx.vertex_count();
        let mut roles = vec![Role::Interior; n];
        for &v in cx.loops().iter().flatten() {
            roles[v] = Role::Ground;
        }
        let multiply_connected = cx.loops().len() > 1;
        if multiply_connected {
            for &v in &cx.loops()[0] {
                roles[v] = Role::Neumann;
            }
        }
        let mut claimed = vec![false; n];
        let alpha_arcs: Vec<Vec<VertexId>> = alpha_arcs
            .into_iter()
            .map(|p| normalize_path(cx, p, Some(0), "alpha"))
            .collect::<Result<_>>()?;
        let beta_arcs: Vec<Vec<VertexId>> = beta_arcs
            .into_iter()
            .map(|p| normalize_path(cx, p, None, "beta"))
            .collect::<Result<_>>()?;
        for (arcs, role) in [(&alpha_arcs, Role::Top), (&beta_arcs, Role::Neumann)] {
            for arc in arcs {
                for &v in arc {
                    if claimed[v] {
                        return Err(invalid(format!(
                            "overlapping arcs at vertex {}",
                            cx.label(v)
                        )));
                    }
                    claimed[v] = true;
                    roles[v] = role;
                }
            }
        }
        if alpha_arcs.is_empty() || !roles.contains(&Role::Top) {
            return Err(invalid(
                "no α-arc: at least one Dirichlet-k vertex is required",
            ));
        }
        if !roles.contains(&Role::Ground) {
            return Err(invalid(
                "empty ground set: at least one Dirichlet-0 vertex is required",
            ));
        }

        let mut arcs = Vec::new();
        for (li, lp) in cx.loops().iter().enumerate() {
            let m = lp.len();
            let start = (0..m).find(|&i| roles[lp[i]] != roles[lp[(i + m - 1) % m]]);
            match start {
                None => arcs.push(BoundaryArc {
                    id: arcs.len(),
                    role: roles[lp[0]],
                    loop_index: li,
                    vertices: lp.clone(),
                    closed: true,
                }),
                Some(s) => {
                    let mut current: Vec<VertexId> = Vec::new();
                    for step in 0..m {
                        let v = lp[(s + step) % m];
                        if let Some(&last) = current.last() {
                            if roles[last] != roles[v] {
                                arcs.push(BoundaryArc {
                                    id: arcs.len(),
                                    role: roles[last],
                                    loop_index: li,
                                    vertices: std::mem::take(&mut current),
                                    closed: false,
                                });
                            }
                        }
                        current.push(v);
                    }
                    let role = roles[current[0]];
                    arcs.push(BoundaryArc {
                        id: arcs.len(),
                        role,
                        loop_index: li,
                        vertices: current,
                        closed: false,
                    });
                }
            }
        }

        Ok(BoundarySpec {
            k,
            alpha_arcs,
            beta_arcs,
            roles,
            arcs,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn alpha_arcs(&self) -> &[Vec<VertexId>] {
        &self.alpha_arcs
    }

    pub fn beta_arcs(&self) -> &[Vec<VertexId>] {
        &self.beta_arcs
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, v: VertexId) -> Role {
        self.roles[v]
    }

    /// Maximal same-role boundary runs.
    pub fn arcs(&self) -> &[BoundaryArc] {
        &self.arcs
    }

    /// Fixed value of a Dirichlet vertex.
    pub fn dirichlet_value(&self, v: VertexId) -> Option<f64> {
        match self.roles[v] {
            Role::Top => Some(self.k),
            Role::Ground => Some(0.0),
            _ => None,
        }
    }

    pub fn ground_set(&self) -> Vec<VertexId> {
        (0..self.roles.len())
            .filter(|&v| self.roles[v] == Role::Ground)
            .collect()
    }
}

/// Checks that `path` runs along one loop (either direction) and returns it.
fn normalize_path(
    cx: &CellComplex,
    mut path: Vec<VertexId>,
    required_loop: Option<usize>,
    what: &str,
) -> Result<Vec<VertexId>> {
    if path.is_empty() {
        return Err(invalid(format!("empty {what} arc")));
    }
    if path.len() >= 2 && path.first() == path.last() {
        path.pop();
    }
    let slots: Vec<(usize, usize)> = path
        .iter()
        .map(|&v| {
            cx.loop_slot(v).ok_or_else(|| {
                invalid(format!(
                    "{what} arc vertex {} is not on the boundary",
                    cx.label(v)
                ))
            })
        })
        .collect::<Result<_>>()?;
    let li = slots[0].0;
    if slots.iter().any(|s| s.0 != li) {
        return Err(invalid(format!("{what} arc spans several boundary loops")));
    }
    if let Some(req) = required_loop {
        if li != req {
            return Err(invalid(format!("{what} arc is not on the outer loop")));
        }
    }
    let m = cx.loops()[li].len();
    let distinct: HashSet<_> = path.iter().collect();
    if distinct.len() != path.len() {
        return Err(invalid(format!("{what} arc repeats a vertex")));
    }
    let step_ok = |dir: usize| slots.windows(2).all(|w| (w[0].1 + dir) % m == w[1].1);
    if path.len() > 1 && !step_ok(1) && !step_ok(m - 1) {
        return Err(invalid(format!(
            "{what} arc is not a contiguous boundary path"
        )));
    }
    Ok(path)
}

/// Parses and validates a JSON mesh document.
pub fn load_complex(text: &str) -> Result<(CellComplex, BoundarySpec)> {
    let doc = MeshDocument::from_json(text)?;
    complex_from_document(&doc)
}

pub fn complex_from_document(doc: &MeshDocument) -> Result<(CellComplex, BoundarySpec)> {
    let mut index = HashMap::new();
    for (i, v) in doc.vertices.iter().enumerate() {
        if index.insert(v.id, i).is_some() {
            return Err(invalid(format!("duplicate vertex id {}", v.id)));
        }
    }
    let lookup = |id: u64| -> Result<VertexId> {
        index
            .get(&id)
            .copied()
            .ok_or_else(|| invalid(format!("unknown vertex id {id}")))
    };
    let labels = doc.vertices.iter().map(|v| v.id).collect();
    let positions = doc.vertices.iter().map(|v| [v.x.0, v.y.0]).collect();
    let edges: Vec<(VertexId, VertexId, f64)> = doc
        .edges
        .iter()
        .map(|e| Ok((lookup(e.u)?, lookup(e.v)?, e.c.0)))
        .collect::<Result<_>>()?;
    let map_all = |lists: &[Vec<u64>]| -> Result<Vec<Vec<VertexId>>> {
        lists
            .iter()
            .map(|l| l.iter().map(|&id| lookup(id)).collect())
            .collect()
    };
    let cells = map_all(&doc.cells)?;
    let loops = map_all(&doc.boundary.loops)?;
    let cx = CellComplex::new(labels, positions, &edges, cells, loops)?;
    let spec = BoundarySpec::new(
        &cx,
        doc.boundary.k.0,
        map_all(&doc.boundary.alpha_arcs)?,
        map_all(&doc.boundary.beta_arcs)?,
    )?;
    Ok((cx, spec))
}

/// Writes a complex back to the document schema.
pub fn to_document(cx: &CellComplex, spec: &BoundarySpec) -> MeshDocument {
    let lab = |v: &VertexId| cx.label(*v);
    MeshDocument {
        vertices: (0..cx.vertex_count())
            .map(|v| VertexRecord {
                id: cx.label(v),
                x: Real(cx.position(v)[0]),
                y: Real(cx.position(v)[1]),
            })
            .collect(),
        edges: cx
            .network()
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                u: cx.label(e.a),
                v: cx.label(e.b),
                c: Real(e.c),
            })
            .collect(),
        cells: cx
            .cells()
            .iter()
            .map(|c| c.iter().map(lab).collect())
            .collect(),
        boundary: BoundaryRecord {
            loops: cx
                .loops()
                .iter()
                .map(|l| l.iter().map(lab).collect())
                .collect(),
            alpha_arcs: spec
                .alpha_arcs()
                .iter()
                .map(|a| a.iter().map(lab).collect())
                .collect(),
            beta_arcs: spec
                .beta_arcs()
                .iter()
                .map(|a| a.iter().map(lab).collect())
                .collect(),
            k: Real(spec.k()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> String {
        r#"{
            "vertices": [{"id":0,"x":0,"y":0},{"id":1,"x":1,"y":0},{"id":2,"x":1,"y":1},{"id":3,"x":0,"y":1}],
            "edges": [{"u":0,"v":1,"c":1},{"u":1,"v":2,"c":1},{"u":2,"v":3,"c":1},{"u":3,"v":0,"c":1}],
            "cells": [[0,1,2,3]],
            "boundary": {"loops":[[0,1,2,3]], "alphaArcs":[[1,2]], "betaArcs":[], "k":1}
        }"#
        .to_string()
    }

    #[test]
    fn minimal_square() {
        let (cx, spec) = load_complex(&unit_square()).unwrap();
        assert_eq!(cx.vertex_count(), 4);
        assert_eq!(cx.edge_count(), 4);
        assert_eq!(cx.cell_count(), 1);
        assert_eq!(cx.loops().len(), 1);
        assert_eq!(cx.euler_characteristic(), 1);
        assert_eq!(spec.role(1), Role::Top);
        assert_eq!(spec.role(0), Role::Ground);
        // corner with one incident cell: fan of two neighbours
        assert_eq!(cx.vertex_star(0).unwrap(), &[1, 3]);
    }

    #[test]
    fn reversed_loop_is_normalized() {
        let text = unit_square().replace(r#""loops":[[0,1,2,3]]"#, r#""loops":[[3,2,1,0]]"#);
        let (cx, _) = load_complex(&text).unwrap();
        let lp = &cx.loops()[0];
        let i = lp.iter().position(|&v| v == 0).unwrap();
        assert_eq!(lp[(i + 1) % 4], 1);
    }

    #[test]
    fn non_manifold_edge_rejected() {
        // three triangles on edge (0,1)
        let text = r#"{
            "vertices": [{"id":0,"x":0,"y":0},{"id":1,"x":1,"y":0},{"id":2,"x":0.5,"y":1},{"id":3,"x":0.5,"y":-1},{"id":4,"x":0.5,"y":2}],
            "edges": [{"u":0,"v":1,"c":1},{"u":1,"v":2,"c":1},{"u":2,"v":0,"c":1},{"u":1,"v":3,"c":1},{"u":3,"v":0,"c":1},{"u":1,"v":4,"c":1},{"u":4,"v":0,"c":1}],
            "cells": [[0,1,2],[1,0,3],[0,1,4]],
            "boundary": {"loops":[[0,3,1,4]], "alphaArcs":[[1]], "betaArcs":[], "k":1}
        }"#;
        let err = load_complex(text).unwrap_err();
        assert!(err.to_string().contains("non-manifold edge"), "{err}");
    }

    #[test]
    fn clockwise_cell_rejected() {
        let text = unit_square().replace("[[0,1,2,3]],", "[[3,2,1,0]],");
        let err = load_complex(&text).unwrap_err();
        assert!(err.to_string().contains("orientation"), "{err}");
    }

    #[test]
    fn disconnected_graph_rejected() {
        let text = r#"{
            "vertices": [{"id":0,"x":0,"y":0},{"id":1,"x":1,"y":0},{"id":2,"x":0,"y":1},{"id":9,"x":5,"y":5}],
            "edges": [{"u":0,"v":1,"c":1},{"u":1,"v":2,"c":1},{"u":2,"v":0,"c":1}],
            "cells": [[0,1,2]],
            "boundary": {"loops":[[0,1,2]], "alphaArcs":[[1]], "betaArcs":[], "k":1}
        }"#;
        let err = load_complex(text).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
    }

    #[test]
    fn overlapping_arcs_rejected() {
        let text = unit_square().replace(r#""betaArcs":[]"#, r#""betaArcs":[[2,3]]"#);
        let err = load_complex(&text).unwrap_err();
        assert!(err.to_string().contains("overlapping arcs"), "{err}");
    }

    #[test]
    fn non_convex_quad_rejected() {
        let text = unit_square().replace(r#"{"id":2,"x":1,"y":1}"#, r#"{"id":2,"x":0.3,"y":0.3}"#);
        let err = load_complex(&text).unwrap_err();
        assert!(err.to_string().contains("convex"), "{err}");
    }

    #[test]
    fn document_round_trip() {
        let (cx, spec) = load_complex(&unit_square()).unwrap();
        let doc = to_document(&cx, &spec);
        let (cx2, spec2) = complex_from_document(&doc).unwrap();
        assert_eq!(to_document(&cx2, &spec2), doc);
    }
}
