//! Slicing along singular levels, wedge splitting, classification and gluing.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::complex::{BoundarySpec, CellComplex, VertexId};
use crate::error::{Error, Result};
use crate::morse::{count_alternations, index_from_sgc, HalfInt, IndexReport};
use crate::network::key;
use crate::refine::RefinedComplex;

/// `{0, p_1, …, p_{n-1}, k}`: the distinct values at singular vertices,
/// bracketed by the boundary values.
pub fn singular_values(report: &IndexReport, k: f64) -> Vec<f64> {
    let tol = crate::morse::LEVEL_TOL * k;
    let mut values: Vec<f64> = report.singular().map(|v| v.value).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = vec![0.0];
    for v in values {
        if (v - out[out.len() - 1]).abs() > tol && v < k - tol {
            out.push(v);
        }
    }
    out.push(k);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    Quadrilateral,
    SlicedQuadrilateral,
    Annulus,
}

/// One wedge of a vertex inside a component.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VertexCopy {
    pub vertex: VertexId,
    /// Neighbours in counterclockwise order; an open fan for boundary copies.
    pub fan: Vec<VertexId>,
    /// Faces of the wedge, in fan order.
    pub faces: Vec<usize>,
    pub on_boundary: bool,
    /// Lies on a constant run of the component boundary.
    pub constant: bool,
}

/// Maximal constant piece of a component boundary loop.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstantRun {
    pub value: f64,
    /// Copy indices in loop order.
    pub copies: Vec<usize>,
    pub closed: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Component {
    pub id: usize,
    pub band: usize,
    pub low: f64,
    pub high: f64,
    pub faces: Vec<usize>,
    pub copies: Vec<VertexCopy>,
    /// Boundary loops as copy indices, region on the left.
    pub loops: Vec<Vec<usize>>,
    pub runs: Vec<ConstantRun>,
    pub euler_characteristic: i64,
    pub arc_endpoint_count: usize,
    pub kind: ComponentKind,
    /// Vertices with more than one copy, with the copy indices.
    pub identified: Vec<(VertexId, Vec<usize>)>,
}

impl Component {
    pub fn energy(&self, d: &Decomposition) -> f64 {
        d.component_edges(self.id)
            .iter()
            .map(|&(a, b)| {
                let c = d.refined.network().conductance(a, b).unwrap();
                c * (d.refined.value(a) - d.refined.value(b)).powi(2)
            })
            .sum()
    }

    /// Flux into this component through the copies of a run.
    pub fn run_flux(&self, d: &Decomposition, run: &ConstantRun) -> f64 {
        run.copies
            .iter()
            .map(|&c| d.copy_flux(self, &self.copies[c]))
            .sum::<f64>()
            .abs()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Subdomain {
    pub index: usize,
    pub low: f64,
    pub high: f64,
    pub components: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub levels: Vec<f64>,
    pub refined: RefinedComplex,
    pub subdomains: Vec<Subdomain>,
    pub components: Vec<Component>,
    pub singular: Vec<VertexId>,
    face_component: Vec<usize>,
    edge_component: HashMap<(VertexId, VertexId), usize>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Refines `g` at the singular values and splits the region into components.
pub fn decompose(
    cx: &CellComplex,
    spec: &BoundarySpec,
    g: &[f64],
    report: &IndexReport,
) -> Result<Decomposition> {
    let levels = singular_values(report, spec.k());
    let mut rc = RefinedComplex::new(cx, spec, g)?;
    rc.insert_levels(&levels[1..levels.len() - 1])?;
    let singular: Vec<VertexId> = report.singular().map(|v| v.vertex).collect();
    extract_subdomains(rc, &levels, singular)
}

/// Components of the faces strictly between consecutive levels, with every
/// vertex split into one copy per wedge.
pub fn extract_subdomains(
    rc: RefinedComplex,
    levels: &[f64],
    singular: Vec<VertexId>,
) -> Result<Decomposition> {
    let tol = rc.tolerance();
    let faces = rc.faces();
    let band_of = |f: &Vec<VertexId>| -> Result<usize> {
        let avg = f.iter().map(|&v| rc.value(v)).sum::<f64>() / f.len() as f64;
        let last = levels.len() - 2;
        if (avg - levels[0]).abs() <= tol {
            return Ok(0);
        }
        if (avg - levels[last + 1]).abs() <= tol {
            return Ok(last);
        }
        (0..=last)
            .find(|&i| avg > levels[i] && avg < levels[i + 1])
            .ok_or_else(|| Error::DegenerateLevel {
                level: avg,
                reason: "face lies on an interior level".into(),
            })
    };
    let bands: Vec<usize> = faces.iter().map(band_of).collect::<Result<_>>()?;

    // directed side -> face
    let mut side_face: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for i in 0..f.len() {
            side_face.insert((f[i], f[(i + 1) % f.len()]), fi);
        }
    }
    let mut dsu = Dsu::new(faces.len());
    for (&(a, b), &fi) in &side_face {
        if let Some(&fj) = side_face.get(&(b, a)) {
            if bands[fi] == bands[fj] && !rc.is_level_edge(a, b) {
                dsu.union(fi, fj);
            }
        }
    }
    let mut root_id: BTreeMap<usize, usize> = BTreeMap::new();
    let mut face_component = vec![0; faces.len()];
    for fi in 0..faces.len() {
        let r = dsu.find(fi);
        let next = root_id.len();
        face_component[fi] = *root_id.entry(r).or_insert(next);
    }
    let count = root_id.len();
    let mut comp_faces: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (fi, &c) in face_component.iter().enumerate() {
        comp_faces[c].push(fi);
    }

    let mut edge_component = HashMap::new();
    for (&(a, b), &fi) in &side_face {
        if rc.network().edge_between(a, b).is_some() {
            edge_component.insert(key(a, b), face_component[fi]);
        }
    }

    let mut components = Vec::with_capacity(count);
    for (id, cf) in comp_faces.into_iter().enumerate() {
        let band = bands[cf[0]];
        components.push(build_component(
            &rc,
            id,
            band,
            levels[band],
            levels[band + 1],
            cf,
            tol,
        )?);
    }

    let subdomains = (0..levels.len() - 1)
        .map(|i| Subdomain {
            index: i,
            low: levels[i],
            high: levels[i + 1],
            components: components
                .iter()
                .filter(|c| c.band == i)
                .map(|c| c.id)
                .collect(),
        })
        .collect();

    Ok(Decomposition {
        levels: levels.to_vec(),
        refined: rc,
        subdomains,
        components,
        singular,
        face_component,
        edge_component,
    })
}

fn build_component(
    rc: &RefinedComplex,
    id: usize,
    band: usize,
    low: f64,
    high: f64,
    faces: Vec<usize>,
    tol: f64,
) -> Result<Component> {
    let all = rc.faces();
    // corners at each vertex: (face, next, prev)
    let mut corners: BTreeMap<VertexId, Vec<(usize, VertexId, VertexId)>> = BTreeMap::new();
    let mut sides: HashSet<(VertexId, VertexId)> = HashSet::new();
    let mut undirected: HashSet<(VertexId, VertexId)> = HashSet::new();
    for &fi in &faces {
        let f = &all[fi];
        let m = f.len();
        for i in 0..m {
            corners
                .entry(f[i])
                .or_default()
                .push((fi, f[(i + 1) % m], f[(i + m - 1) % m]));
            sides.insert((f[i], f[(i + 1) % m]));
            undirected.insert(key(f[i], f[(i + 1) % m]));
        }
    }

    let mut copies: Vec<VertexCopy> = Vec::new();
    // (vertex, prev of the last corner) -> copy, for open fans
    let mut by_incoming: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut first_next: Vec<Option<VertexId>> = Vec::new();
    for (&v, cs) in &corners {
        let by_next: HashMap<VertexId, usize> =
            cs.iter().enumerate().map(|(i, c)| (c.1, i)).collect();
        let mut used = vec![false; cs.len()];
        // open fans first: a corner whose next side is not shared within the component
        let mut starts: Vec<usize> = (0..cs.len())
            .filter(|&i| !cs.iter().any(|c| c.2 == cs[i].1))
            .collect();
        starts.sort_by_key(|&i| cs[i].1);
        let emit = |start: usize, used: &mut Vec<bool>, open: bool| {
            let mut order = vec![start];
            used[start] = true;
            let mut cur = start;
            while let Some(&nx) = by_next.get(&cs[cur].2) {
                if used[nx] {
                    break;
                }
                used[nx] = true;
                order.push(nx);
                cur = nx;
            }
            let mut fan: Vec<VertexId> = order.iter().map(|&i| cs[i].1).collect();
            if open {
                fan.push(cs[*order.last().unwrap()].2);
            }
            let faces = order.iter().map(|&i| cs[i].0).collect();
            (fan, faces, *order.last().unwrap())
        };
        for s in starts {
            let (fan, fcs, last) = emit(s, &mut used, true);
            let idx = copies.len();
            by_incoming.insert((v, cs[last].2), idx);
            first_next.push(Some(cs[s].1));
            copies.push(VertexCopy {
                vertex: v,
                fan,
                faces: fcs,
                on_boundary: true,
                constant: false,
            });
        }
        while let Some(s) = (0..cs.len()).find(|&i| !used[i]) {
            let (fan, fcs, _) = emit(s, &mut used, false);
            first_next.push(None);
            copies.push(VertexCopy {
                vertex: v,
                fan,
                faces: fcs,
                on_boundary: false,
                constant: false,
            });
        }
    }

    // Boundary loops: follow the outgoing side of each open fan.
    let mut loops: Vec<Vec<usize>> = Vec::new();
    let mut visited = vec![false; copies.len()];
    for start in 0..copies.len() {
        if !copies[start].on_boundary || visited[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut cur = start;
        loop {
            visited[cur] = true;
            lp.push(cur);
            let v = copies[cur].vertex;
            let n = first_next[cur].expect("open fan");
            cur = *by_incoming
                .get(&(n, v))
                .ok_or_else(|| Error::UnclassifiableComponent {
                    component: id,
                    reason: format!("boundary walk broke at side ({v}, {n})"),
                })?;
            if cur == start {
                break;
            }
            if visited[cur] {
                return Err(Error::UnclassifiableComponent {
                    component: id,
                    reason: "boundary walk is not a simple loop".into(),
                });
            }
        }
        loops.push(lp);
    }

    let constant_side = |a: VertexId, b: VertexId| (rc.value(a) - rc.value(b)).abs() <= tol;
    let at_band_value =
        |v: VertexId| (rc.value(v) - low).abs() <= tol || (rc.value(v) - high).abs() <= tol;
    let mut runs = Vec::new();
    for lp in &loops {
        let m = lp.len();
        let side_const: Vec<bool> = (0..m)
            .map(|i| constant_side(copies[lp[i]].vertex, copies[lp[(i + 1) % m]].vertex))
            .collect();
        for &c in lp {
            if at_band_value(copies[c].vertex) {
                copies[c].constant = true;
            }
        }
        for i in 0..m {
            if side_const[i] {
                copies[lp[i]].constant = true;
                copies[lp[(i + 1) % m]].constant = true;
            }
        }
        if side_const.iter().all(|&s| s) {
            runs.push(ConstantRun {
                value: rc.value(copies[lp[0]].vertex),
                copies: lp.clone(),
                closed: true,
            });
            continue;
        }
        // rotate to start just after a non-constant side
        let s0 = (0..m).find(|&i| !side_const[i]).unwrap();
        let mut current: Vec<usize> = Vec::new();
        for step in 1..=m {
            let i = (s0 + step) % m;
            let c = lp[i];
            if copies[c].constant {
                current.push(c);
            }
            if !side_const[i] && !current.is_empty() {
                runs.push(ConstantRun {
                    value: rc.value(copies[current[0]].vertex),
                    copies: std::mem::take(&mut current),
                    closed: false,
                });
            }
        }
    }

    let euler = copies.len() as i64 - undirected.len() as i64 + faces.len() as i64;
    let t = runs.iter().filter(|r| !r.closed).count() * 2;
    let mut multi: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for (i, c) in copies.iter().enumerate() {
        multi.entry(c.vertex).or_default().push(i);
    }
    let identified: Vec<(VertexId, Vec<usize>)> =
        multi.into_iter().filter(|(_, c)| c.len() > 1).collect();

    let is_high = |r: &ConstantRun| (r.value - high).abs() <= tol;
    let is_low = |r: &ConstantRun| (r.value - low).abs() <= tol;
    let fail = |reason: String| Error::UnclassifiableComponent {
        component: id,
        reason,
    };
    let kind = if euler == 1 && loops.len() == 1 && t == 4 {
        let highs = runs.iter().filter(|r| is_high(r)).count();
        let lows = runs.iter().filter(|r| is_low(r)).count();
        if highs != 1 || lows != 1 {
            return Err(fail(format!(
                "quadrilateral with {highs} high and {lows} low runs"
            )));
        }
        if identified.is_empty() {
            ComponentKind::Quadrilateral
        } else {
            ComponentKind::SlicedQuadrilateral
        }
    } else if euler == 0 && loops.len() == 2 && t == 0 {
        if runs.len() != 2 || !runs.iter().any(is_high) || !runs.iter().any(is_low) {
            return Err(fail(
                "annulus boundaries are not one high and one low curve".into(),
            ));
        }
        ComponentKind::Annulus
    } else {
        return Err(fail(format!(
            "chi = {euler}, {} boundary loops, t = {t}",
            loops.len()
        )));
    };

    let comp = Component {
        id,
        band,
        low,
        high,
        faces,
        copies,
        loops,
        runs,
        euler_characteristic: euler,
        arc_endpoint_count: t,
        kind,
        identified,
    };
    check_component_index(rc, &comp, tol)?;
    Ok(comp)
}

/// Index identity on one component: every non-constant copy must be regular.
fn check_component_index(rc: &RefinedComplex, comp: &Component, tol: f64) -> Result<()> {
    let mut total = HalfInt::ZERO;
    for c in comp.copies.iter().filter(|c| !c.constant) {
        let v = c.vertex;
        let signs: Vec<i8> = c
            .fan
            .iter()
            .map(|&w| {
                let d = rc.value(w) - rc.value(v);
                if d.abs() <= tol {
                    0
                } else if d > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        if signs.contains(&0) {
            return Err(Error::UnclassifiableComponent {
                component: comp.id,
                reason: format!("flat neighbour at non-constant vertex {v}"),
            });
        }
        total = total + index_from_sgc(count_alternations(&signs, !c.on_boundary), c.on_boundary);
    }
    let expected =
        HalfInt::from_halves(2 * comp.euler_characteristic - comp.arc_endpoint_count as i64 / 2);
    if total != expected || expected != HalfInt::ZERO {
        return Err(Error::UnclassifiableComponent {
            component: comp.id,
            reason: format!("component index total {total}, expected {expected}"),
        });
    }
    Ok(())
}

impl Decomposition {
    pub fn face_component(&self, face: usize) -> usize {
        self.face_component[face]
    }

    /// Component holding a conducting edge.
    pub fn edge_component(&self, a: VertexId, b: VertexId) -> Option<usize> {
        self.edge_component.get(&key(a, b)).copied()
    }

    /// Conducting edges of a component, as ordered pairs.
    pub fn component_edges(&self, comp: usize) -> Vec<(VertexId, VertexId)> {
        let mut edges: Vec<_> = self
            .edge_component
            .iter()
            .filter(|(_, &c)| c == comp)
            .map(|(&e, _)| e)
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Flux leaving a vertex copy into its component.
    pub fn copy_flux(&self, comp: &Component, copy: &VertexCopy) -> f64 {
        let v = copy.vertex;
        let net = self.refined.network();
        let mut seen = HashSet::new();
        copy.fan
            .iter()
            .filter(|&&w| seen.insert(w))
            .filter(|&&w| self.edge_component(v, w) == Some(comp.id))
            .map(|&w| {
                net.conductance(v, w).unwrap() * (self.refined.value(v) - self.refined.value(w))
            })
            .sum()
    }

    /// Flux leaving `v` along the conducting edges of component `comp`.
    pub fn vertex_flux_into(&self, v: VertexId, comp: usize) -> f64 {
        let net = self.refined.network();
        net.neighbors(v)
            .iter()
            .filter(|&&(w, _)| self.edge_component(v, w) == Some(comp))
            .map(|&(w, e)| net.edge(e).c * (self.refined.value(v) - self.refined.value(w)))
            .sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.components.iter().map(|c| c.energy(self)).sum()
    }
}

/// A seam between two components along a level curve.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GluingEdge {
    pub seam: usize,
    pub level: f64,
    pub vertices: Vec<VertexId>,
    pub side_a: usize,
    pub side_b: usize,
    pub length_a: f64,
    pub length_b: f64,
}

/// Flux of a junction vertex (where seams meet) into each incident component.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Junction {
    pub vertex: VertexId,
    pub level: f64,
    pub sector_flux: Vec<(usize, f64)>,
}

/// Flux through one connected level curve, from above and from below.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CurveBalance {
    pub level: f64,
    pub vertices: Vec<VertexId>,
    pub from_above: f64,
    pub from_below: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GluingReport {
    pub seams: Vec<GluingEdge>,
    pub junctions: Vec<Junction>,
    pub curves: Vec<CurveBalance>,
}

/// Builds every seam and compares its flux length from both sides.
pub fn verify_gluing(d: &Decomposition, tol_rel: f64) -> Result<GluingReport> {
    let rc = &d.refined;
    let mut side_face: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    for (fi, f) in rc.faces().iter().enumerate() {
        for i in 0..f.len() {
            side_face.insert((f[i], f[(i + 1) % f.len()]), fi);
        }
    }
    let singular: HashSet<VertexId> = d.singular.iter().copied().collect();

    // level edges grouped by the component pair they separate
    let mut pairs: BTreeMap<(usize, usize), Vec<(VertexId, VertexId)>> = BTreeMap::new();
    for &(a, b) in rc.level_edges().keys() {
        let (Some(&fa), Some(&fb)) = (side_face.get(&(a, b)), side_face.get(&(b, a))) else {
            continue;
        };
        let (ca, cb) = (d.face_component(fa), d.face_component(fb));
        if ca != cb {
            pairs
                .entry((ca.min(cb), ca.max(cb)))
                .or_default()
                .push((a, b));
        }
    }

    let mut seams = Vec::new();
    let mut junction_set: BTreeMap<VertexId, f64> = BTreeMap::new();
    for (&(ca, cb), edges) in &pairs {
        let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for &(a, b) in edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let is_junction = |v: VertexId| singular.contains(&v) || adj[&v].len() != 2;
        for &v in adj.keys() {
            if is_junction(v) {
                junction_set.insert(v, rc.value(v));
            }
        }
        let mut used: HashSet<(VertexId, VertexId)> = HashSet::new();
        let mut chains: Vec<Vec<VertexId>> = Vec::new();
        let walk = |start: VertexId, first: VertexId, used: &mut HashSet<(VertexId, VertexId)>| {
            let mut chain = vec![start, first];
            used.insert(key(start, first));
            let (mut prev, mut cur) = (start, first);
            while !is_junction(cur) {
                let next = adj[&cur]
                    .iter()
                    .copied()
                    .find(|&w| w != prev && !used.contains(&key(cur, w)));
                match next {
                    Some(n) => {
                        used.insert(key(cur, n));
                        chain.push(n);
                        prev = cur;
                        cur = n;
                    }
                    None => break,
                }
            }
            chain
        };
        for (&v, nbrs) in &adj {
            if !is_junction(v) {
                continue;
            }
            for &w in nbrs {
                if !used.contains(&key(v, w)) {
                    chains.push(walk(v, w, &mut used));
                }
            }
        }
        // closed curves with no junction
        for (&v, nbrs) in &adj {
            for &w in nbrs {
                if !used.contains(&key(v, w)) {
                    let mut chain = walk(v, w, &mut used);
                    // close the loop
                    if let Some(&last) = chain.last() {
                        if last != v && adj[&last].contains(&v) && used.insert(key(last, v)) {
                            chain.push(v);
                        }
                    }
                    chains.push(chain);
                }
            }
        }
        for chain in chains {
            let mut members: Vec<VertexId> = chain.clone();
            if members.len() > 1 && members.first() == members.last() {
                members.pop();
            }
            let counted: Vec<VertexId> = members
                .iter()
                .copied()
                .filter(|&v| !(is_junction(v) && (singular.contains(&v) || adj[&v].len() > 2)))
                .collect();
            let la = counted
                .iter()
                .map(|&v| d.vertex_flux_into(v, ca))
                .sum::<f64>()
                .abs();
            let lb = counted
                .iter()
                .map(|&v| d.vertex_flux_into(v, cb))
                .sum::<f64>()
                .abs();
            let seam = seams.len();
            if (la - lb).abs() > tol_rel * la.max(lb).max(f64::MIN_POSITIVE) {
                return Err(Error::GluingMismatch {
                    seam,
                    length_a: la,
                    length_b: lb,
                });
            }
            seams.push(GluingEdge {
                seam,
                level: rc.value(chain[0]),
                vertices: chain,
                side_a: ca,
                side_b: cb,
                length_a: la,
                length_b: lb,
            });
        }
    }

    let junctions = junction_set
        .into_iter()
        .filter(|(v, _)| singular.contains(v) || level_degree(rc, *v) > 2)
        .map(|(v, level)| {
            let mut comps: Vec<usize> = rc
                .network()
                .neighbors(v)
                .iter()
                .filter_map(|&(w, _)| d.edge_component(v, w))
                .collect();
            comps.sort_unstable();
            comps.dedup();
            Junction {
                vertex: v,
                level,
                sector_flux: comps
                    .into_iter()
                    .map(|c| (c, d.vertex_flux_into(v, c)))
                    .collect(),
            }
        })
        .collect();

    Ok(GluingReport {
        seams,
        junctions,
        curves: curve_balances(rc),
    })
}

fn level_degree(rc: &RefinedComplex, v: VertexId) -> usize {
    rc.level_edges()
        .keys()
        .filter(|&&(a, b)| a == v || b == v)
        .count()
}

/// Total flux through each connected level curve, measured from each side.
pub fn curve_balances(rc: &RefinedComplex) -> Vec<CurveBalance> {
    let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &(a, b) in rc.level_edges().keys() {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut stack = vec![start];
        let mut members = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adj[&v] {
                if seen.insert(w) {
                    stack.push(w);
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        let s = rc.value(start);
        let (mut above, mut below) = (0.0, 0.0);
        for &v in &members {
            for &(w, e) in rc.network().neighbors(v) {
                let flux = rc.network().edge(e).c * (rc.value(v) - rc.value(w));
                if rc.value(w) > s {
                    above += flux;
                } else {
                    below += flux;
                }
            }
        }
        out.push(CurveBalance {
            level: s,
            vertices: members,
            from_above: above.abs(),
            from_below: below.abs(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::{dirichlet_energy, solve_dnbvp};
    use crate::fixtures;
    use crate::morse::{index_formula_check, TiePolicy};

    fn run(name: &str) -> Decomposition {
        let (cx, spec) = fixtures::by_name(name).unwrap();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let report = index_formula_check(&cx, &spec, g.values(), TiePolicy::Strict).unwrap();
        decompose(&cx, &spec, g.values(), &report).unwrap()
    }

    fn kinds(d: &Decomposition) -> Vec<ComponentKind> {
        let mut k: Vec<_> = d.components.iter().map(|c| c.kind).collect();
        k.sort_by_key(|k| *k as u8);
        k
    }

    #[test]
    fn quad_is_one_quadrilateral() {
        let d = run("FIX-QUAD");
        assert_eq!(d.levels, vec![0.0, 1.0]);
        assert_eq!(kinds(&d), vec![ComponentKind::Quadrilateral]);
        assert!(verify_gluing(&d, 1e-9).unwrap().seams.is_empty());
    }

    #[test]
    fn annulus_splits_in_two() {
        let d = run("FIX-ANN");
        assert_eq!(d.levels.len(), 3);
        assert_eq!(
            kinds(&d),
            vec![ComponentKind::SlicedQuadrilateral, ComponentKind::Annulus]
        );
        let sliced = d
            .components
            .iter()
            .find(|c| c.kind == ComponentKind::SlicedQuadrilateral)
            .unwrap();
        assert_eq!(sliced.identified.len(), 1);
        assert_eq!(sliced.identified[0].0, d.singular[0]);
        let report = verify_gluing(&d, 1e-9).unwrap();
        assert!(!report.seams.is_empty());
        for b in &report.curves {
            assert!((b.from_above - b.from_below).abs() < 1e-9 * b.from_above);
        }
    }

    #[test]
    fn energy_partitions() {
        for name in ["FIX-ANN", "FIX-PANTS1"] {
            let (cx, spec) = fixtures::by_name(name).unwrap();
            let g = solve_dnbvp(&cx, &spec).unwrap();
            let d = run(name);
            let e = dirichlet_energy(cx.network(), g.values());
            assert!((d.total_energy() - e).abs() < 1e-12 * e.max(1.0), "{name}");
            let covered: usize = d.components.iter().map(|c| c.faces.len()).sum();
            assert_eq!(covered, d.refined.faces().len());
        }
    }
}
