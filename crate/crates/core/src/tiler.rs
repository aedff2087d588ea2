//! Rectangle tilings of the components, coverage checks and the glued surface.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::complex::VertexId;
use crate::decomp::{Component, ComponentKind, Decomposition, GluingReport, VertexCopy};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Target {
    /// `[x0, x1] × [0, height]`.
    #[serde(rename_all = "camelCase")]
    Rectangle { x0: f64, x1: f64, height: f64 },
    /// `[x0, x1] × (R mod circumference)`.
    #[serde(rename_all = "camelCase")]
    Cylinder {
        x0: f64,
        x1: f64,
        circumference: f64,
    },
    /// A rectangle with the listed vertical segments identified.
    #[serde(rename_all = "camelCase")]
    SlicedRectangle {
        x0: f64,
        x1: f64,
        height: f64,
        identified: Vec<IdentifiedPoint>,
    },
}

impl Target {
    pub fn x_range(&self) -> (f64, f64) {
        match *self {
            Target::Rectangle { x0, x1, .. }
            | Target::Cylinder { x0, x1, .. }
            | Target::SlicedRectangle { x0, x1, .. } => (x0, x1),
        }
    }

    /// Height of a rectangle, or the circumference of a cylinder.
    pub fn extent(&self) -> f64 {
        match *self {
            Target::Rectangle { height, .. } | Target::SlicedRectangle { height, .. } => height,
            Target::Cylinder { circumference, .. } => circumference,
        }
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(self, Target::Cylinder { .. })
    }

    pub fn area(&self) -> f64 {
        let (x0, x1) = self.x_range();
        (x1 - x0) * self.extent()
    }
}

/// Copies of one vertex in a chart, each a vertical segment `(x, y0, y1)`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IdentifiedPoint {
    pub vertex: VertexId,
    pub segments: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RectTile {
    /// `(u, v)` with `g(u) > g(v)`.
    pub edge: (VertexId, VertexId),
    pub width: f64,
    pub height: f64,
    pub x: [f64; 2],
    /// On a cylinder `y[0]` is reduced mod the circumference and `y[1] = y[0] + height`.
    pub y: [f64; 2],
    pub embedded: bool,
}

impl RectTile {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Top side of a tile.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Marker {
    pub edge: (VertexId, VertexId),
    pub level: f64,
    pub left: [f64; 2],
    pub right: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub resolution: usize,
    pub samples: usize,
    pub seam_samples: usize,
    pub gaps: usize,
    pub overlaps: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TiledComponent {
    pub component: usize,
    pub kind: ComponentKind,
    pub target: Target,
    pub tiles: Vec<RectTile>,
    pub markers: Vec<Marker>,
    /// Edges with no potential drop; they carry no tile.
    pub degenerate: usize,
    pub tile_area: f64,
    pub energy: f64,
    /// Largest relative deviation of a vertical cross-section from the extent.
    pub cross_section_defect: f64,
    /// Boundary edges whose tile misses the matching side of the target.
    pub boundary_violations: Vec<(VertexId, VertexId)>,
    pub coverage: Option<CoverageReport>,
}

struct Chart<'a> {
    d: &'a Decomposition,
    comp: &'a Component,
    side_face: HashMap<(VertexId, VertexId), usize>,
    psi: HashMap<usize, f64>,
}

impl<'a> Chart<'a> {
    fn new(d: &'a Decomposition, comp: &'a Component) -> Self {
        let faces = d.refined.faces();
        let mut side_face = HashMap::new();
        for &fi in &comp.faces {
            let f = &faces[fi];
            for i in 0..f.len() {
                side_face.insert((f[i], f[(i + 1) % f.len()]), fi);
            }
        }
        Chart {
            d,
            comp,
            side_face,
            psi: HashMap::new(),
        }
    }

    fn current(&self, u: VertexId, w: VertexId) -> f64 {
        let rc = &self.d.refined;
        match rc.network().conductance(u, w) {
            Some(c) if !rc.is_level_edge(u, w) => c * (rc.value(w) - rc.value(u)),
            _ => 0.0,
        }
    }

    /// Conjugate values on faces: crossing from the face left of `u→w` to the
    /// face on its right lowers `ψ` by the current `c (g(w) - g(u))`.
    fn stream_function(&mut self, origin: usize, period: Option<f64>) -> Result<()> {
        let faces = self.d.refined.faces();
        let tol = 1e-9 * self.comp.run_scale(self.d);
        let mut psi = HashMap::new();
        psi.insert(origin, 0.0);
        let mut queue = VecDeque::from([origin]);
        while let Some(fi) = queue.pop_front() {
            let f = &faces[fi];
            let here = psi[&fi];
            for i in 0..f.len() {
                let (u, w) = (f[i], f[(i + 1) % f.len()]);
                let Some(&gi) = self.side_face.get(&(w, u)) else {
                    continue;
                };
                let value = here - self.current(u, w);
                match psi.get(&gi) {
                    None => {
                        psi.insert(gi, value);
                        queue.push_back(gi);
                    }
                    Some(&old) => {
                        let mut gap = old - value;
                        if let Some(c) = period {
                            gap -= (gap / c).round() * c;
                        }
                        if gap.abs() > tol {
                            return Err(Error::MarkerInconsistency(format!(
                                "component {}: conjugate value off by {gap:e} across ({u}, {w})",
                                self.comp.id
                            )));
                        }
                    }
                }
            }
        }
        self.psi = psi;
        Ok(())
    }

    /// Bottom of the tile of `lo → hi`, before normalisation.
    fn tile_bottom(&self, lo: VertexId, hi: VertexId) -> f64 {
        match self.side_face.get(&(hi, lo)) {
            Some(r) => self.psi[r],
            None => self.psi[&self.side_face[&(lo, hi)]] - self.current(lo, hi),
        }
    }

    /// The vertical segment covered by a copy, from a walk around its fan.
    fn copy_segment(&self, copy: &VertexCopy) -> [f64; 3] {
        let v = copy.vertex;
        let x = self.d.refined.value(v);
        let r = copy.faces.len();
        let mut ys = Vec::with_capacity(r + 2);
        let mut y = self.psi[&copy.faces[0]];
        if copy.on_boundary {
            ys.push(y - self.current(v, copy.fan[0]));
        }
        ys.push(y);
        for i in 1..r {
            y -= self.current(copy.fan[i], v);
            ys.push(y);
        }
        if copy.on_boundary {
            ys.push(y - self.current(copy.fan[r], v));
        }
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        [x, lo, hi]
    }
}

impl Component {
    /// Flux of the first constant run, used to scale tolerances.
    pub fn run_scale(&self, d: &Decomposition) -> f64 {
        self.runs
            .first()
            .map(|r| self.run_flux(d, r))
            .unwrap_or(1.0)
            .max(f64::MIN_POSITIVE)
    }
}

/// Tiles and markers of a component, in chart coordinates.
pub fn place_markers(
    d: &Decomposition,
    comp: &Component,
) -> Result<(Target, Vec<Marker>, Vec<RectTile>, usize)> {
    let rc = &d.refined;
    let mut chart = Chart::new(d, comp);
    let extent = comp.run_scale(d);
    let tol = 1e-9 * extent;
    let period = (comp.kind == ComponentKind::Annulus).then_some(extent);
    let origin = if period.is_some() {
        let high = comp
            .runs
            .iter()
            .find(|r| (r.value - comp.high).abs() <= rc.tolerance())
            .expect("annulus has a high curve");
        let first = high
            .copies
            .iter()
            .copied()
            .min_by_key(|&c| comp.copies[c].vertex)
            .unwrap();
        comp.copies[first].faces[0]
    } else {
        *comp.faces.iter().min().unwrap()
    };
    chart.stream_function(origin, period)?;

    let identified: std::collections::HashSet<VertexId> =
        comp.identified.iter().map(|(v, _)| *v).collect();
    let mut tiles = Vec::new();
    let mut degenerate = 0;
    for (a, b) in d.component_edges(comp.id) {
        if rc.is_level_edge(a, b) {
            continue;
        }
        let (hi, lo) = if rc.value(a) > rc.value(b) {
            (a, b)
        } else {
            (b, a)
        };
        let width = rc.value(hi) - rc.value(lo);
        if width <= rc.tolerance() {
            degenerate += 1;
            continue;
        }
        let height = chart.current(lo, hi);
        let y0 = chart.tile_bottom(lo, hi);
        tiles.push(RectTile {
            edge: (hi, lo),
            width,
            height,
            x: [rc.value(lo), rc.value(hi)],
            y: [y0, y0 + height],
            embedded: !(identified.contains(&hi) || identified.contains(&lo)),
        });
    }

    let shift = match period {
        Some(_) => 0.0,
        None => tiles.iter().map(|t| t.y[0]).fold(f64::INFINITY, f64::min),
    };
    for t in &mut tiles {
        let mut y0 = t.y[0] - shift;
        if let Some(c) = period {
            y0 = y0.rem_euclid(c);
            if c - y0 <= tol {
                y0 = 0.0;
            }
        }
        t.y = [y0, y0 + t.height];
    }
    if period.is_none() {
        let top = tiles.iter().map(|t| t.y[1]).fold(0.0, f64::max);
        if (top - extent).abs() > tol {
            return Err(Error::MarkerInconsistency(format!(
                "component {}: tiles reach height {top}, boundary flux is {extent}",
                comp.id
            )));
        }
    }
    check_vertex_consistency(&chart, &tiles, tol)?;

    let segments = |v: VertexId, copies: &[usize]| IdentifiedPoint {
        vertex: v,
        segments: copies
            .iter()
            .map(|&c| {
                let [x, y0, y1] = chart.copy_segment(&comp.copies[c]);
                match period {
                    Some(p) => [x, (y0).rem_euclid(p), (y0).rem_euclid(p) + (y1 - y0)],
                    None => [x, y0 - shift, y1 - shift],
                }
            })
            .collect(),
    };
    let (x0, x1) = (comp.low, comp.high);
    let target = match comp.kind {
        ComponentKind::Quadrilateral => Target::Rectangle {
            x0,
            x1,
            height: extent,
        },
        ComponentKind::Annulus => Target::Cylinder {
            x0,
            x1,
            circumference: extent,
        },
        ComponentKind::SlicedQuadrilateral => Target::SlicedRectangle {
            x0,
            x1,
            height: extent,
            identified: comp
                .identified
                .iter()
                .map(|(v, c)| segments(*v, c))
                .collect(),
        },
    };
    let markers = tiles
        .iter()
        .map(|t| Marker {
            edge: t.edge,
            level: t.x[1],
            left: [t.x[0], t.y[1]],
            right: [t.x[1], t.y[1]],
        })
        .collect();
    Ok((target, markers, tiles, degenerate))
}

/// At every vertex off the constant curves, the tiles ending on its left and
/// those starting on its right must stack to the same height.
fn check_vertex_consistency(chart: &Chart, tiles: &[RectTile], tol: f64) -> Result<()> {
    let mut below: BTreeMap<VertexId, f64> = BTreeMap::new();
    let mut above: BTreeMap<VertexId, f64> = BTreeMap::new();
    for t in tiles {
        *below.entry(t.edge.0).or_default() += t.height;
        *above.entry(t.edge.1).or_default() += t.height;
    }
    for copy in chart.comp.copies.iter().filter(|c| !c.constant) {
        let v = copy.vertex;
        let (l, r) = (
            below.get(&v).copied().unwrap_or(0.0),
            above.get(&v).copied().unwrap_or(0.0),
        );
        let [_, y0, y1] = chart.copy_segment(copy);
        if (l - r).abs() > tol || (l - (y1 - y0)).abs() > tol {
            return Err(Error::MarkerInconsistency(format!(
                "vertex {v}: {l} arrives, {r} leaves, segment {}",
                y1 - y0
            )));
        }
    }
    Ok(())
}

/// Samples an `n × n` grid over the target. A sample is a gap when no tile,
/// grown by `eps`, contains it; an overlap when two tiles shrunk by `eps` do.
pub fn check_coverage(tc: &TiledComponent, n: usize) -> Result<CoverageReport> {
    let (x0, x1) = tc.target.x_range();
    let extent = tc.target.extent();
    let eps = 1e-9 * (x1 - x0).max(extent);
    let (dx, dy) = ((x1 - x0) / n as f64, extent / n as f64);
    // open interval (a, b) of sample centres, as an index range
    let span = |a: f64, b: f64, step: f64, origin: f64| -> (i64, i64) {
        let lo = ((a - origin) / step - 0.5).floor() as i64 + 1;
        let hi = ((b - origin) / step - 0.5).ceil() as i64 - 1;
        (lo.max(0), hi.min(n as i64 - 1))
    };
    let mut inner = vec![0i32; n * (n + 1)];
    let mut outer = vec![0i32; n * (n + 1)];
    let cyclic = tc.target.is_cyclic();
    let add = |grid: &mut Vec<i32>, t: &RectTile, grow: f64| {
        let (c0, c1) = span(t.x[0] - grow, t.x[1] + grow, dx, x0);
        let mut pieces = vec![(t.y[0] - grow, t.y[1] + grow)];
        if cyclic {
            let (a, b) = pieces[0];
            pieces = if b - a >= extent {
                vec![(-1.0, extent + 1.0)]
            } else if b > extent {
                vec![(a, extent + 1.0), (-1.0, b - extent)]
            } else if a < 0.0 {
                vec![(a + extent, extent + 1.0), (-1.0, b)]
            } else {
                vec![(a, b)]
            };
        }
        for (a, b) in pieces {
            let (r0, r1) = span(a, b, dy, 0.0);
            if r0 > r1 {
                continue;
            }
            for c in c0..=c1 {
                let base = c as usize * (n + 1);
                grid[base + r0 as usize] += 1;
                grid[base + r1 as usize + 1] -= 1;
            }
        }
    };
    for t in &tc.tiles {
        add(&mut inner, t, -eps);
        add(&mut outer, t, eps);
    }
    let (mut gaps, mut overlaps, mut seam) = (0, 0, 0);
    let mut first_gap = None;
    let mut first_overlap = None;
    for c in 0..n {
        let base = c * (n + 1);
        let (mut a, mut b) = (0, 0);
        for r in 0..n {
            a += inner[base + r];
            b += outer[base + r];
            let at = (x0 + (c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy);
            if b == 0 {
                gaps += 1;
                first_gap.get_or_insert(at);
            } else if a >= 2 {
                overlaps += 1;
                first_overlap.get_or_insert(at);
            } else if a != b {
                seam += 1;
            }
        }
    }
    if let Some((x, y)) = first_gap {
        return Err(Error::CoverageGap {
            component: tc.component,
            samples: gaps,
            x,
            y,
        });
    }
    if let Some((x, y)) = first_overlap {
        return Err(Error::OverlapDetected {
            component: tc.component,
            samples: overlaps,
            x,
            y,
        });
    }
    Ok(CoverageReport {
        resolution: n,
        samples: n * n,
        seam_samples: seam,
        gaps,
        overlaps,
    })
}

/// Largest relative deviation of `Σ height` along vertical lines from the extent.
pub fn cross_section_defect(tiles: &[RectTile], target: &Target, samples: usize) -> f64 {
    let (x0, x1) = target.x_range();
    let extent = target.extent();
    let mut cuts: Vec<f64> = tiles.iter().flat_map(|t| t.x).collect();
    cuts.push(x0);
    cuts.push(x1);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (x1 - x0));
    // midpoints between consecutive tile sides, plus evenly spaced probes
    let mut xs: Vec<f64> = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    xs.extend((0..samples).map(|j| x0 + (j as f64 + 0.5) / samples as f64 * (x1 - x0)));
    xs.iter()
        .filter(|&&x| !cuts.iter().any(|&c| (c - x).abs() <= 1e-12 * (x1 - x0)))
        .map(|&x| {
            let h: f64 = tiles
                .iter()
                .filter(|t| t.x[0] < x && x < t.x[1])
                .map(|t| t.height)
                .sum();
            (h - extent).abs() / extent
        })
        .fold(0.0, f64::max)
}

/// Tiles of Neumann boundary edges must reach the bottom or top of the chart.
fn boundary_violations(
    d: &Decomposition,
    comp: &Component,
    tiles: &[RectTile],
    target: &Target,
) -> Vec<(VertexId, VertexId)> {
    if target.is_cyclic() {
        return Vec::new();
    }
    let extent = target.extent();
    let tol = 1e-9 * extent;
    let rc = &d.refined;
    let mut neumann = std::collections::HashSet::new();
    for lp in &comp.loops {
        for i in 0..lp.len() {
            let (a, b) = (
                comp.copies[lp[i]].vertex,
                comp.copies[lp[(i + 1) % lp.len()]].vertex,
            );
            if (rc.value(a) - rc.value(b)).abs() > rc.tolerance() {
                neumann.insert(crate::network::key(a, b));
            }
        }
    }
    tiles
        .iter()
        .filter(|t| neumann.contains(&crate::network::key(t.edge.0, t.edge.1)))
        .filter(|t| t.y[0] > tol && t.y[1] < extent - tol)
        .map(|t| t.edge)
        .collect()
}

/// Tiles one component into its target chart; `raster` enables the coverage check.
pub fn tile_component(
    d: &Decomposition,
    comp: &Component,
    raster: Option<usize>,
) -> Result<TiledComponent> {
    let (target, markers, tiles, degenerate) = place_markers(d, comp)?;
    let tile_area = tiles.iter().map(RectTile::area).sum();
    let cross = cross_section_defect(&tiles, &target, 64);
    let boundary = boundary_violations(d, comp, &tiles, &target);
    let mut tc = TiledComponent {
        component: comp.id,
        kind: comp.kind,
        target,
        tiles,
        markers,
        degenerate,
        tile_area,
        energy: comp.energy(d),
        cross_section_defect: cross,
        boundary_violations: boundary,
        coverage: None,
    };
    if let Some(n) = raster {
        tc.coverage = Some(check_coverage(&tc, n)?);
    }
    Ok(tc)
}

pub fn tile_quadrilateral(
    d: &Decomposition,
    comp: &Component,
    raster: Option<usize>,
) -> Result<TiledComponent> {
    debug_assert_eq!(comp.kind, ComponentKind::Quadrilateral);
    tile_component(d, comp, raster)
}

pub fn tile_annulus(
    d: &Decomposition,
    comp: &Component,
    raster: Option<usize>,
) -> Result<TiledComponent> {
    debug_assert_eq!(comp.kind, ComponentKind::Annulus);
    tile_component(d, comp, raster)
}

pub fn tile_sliced_quadrilateral(
    d: &Decomposition,
    comp: &Component,
    raster: Option<usize>,
) -> Result<TiledComponent> {
    debug_assert_eq!(comp.kind, ComponentKind::SlicedQuadrilateral);
    tile_component(d, comp, raster)
}

/// A point whose total angle differs from the flat value (π on the
/// boundary of the region, 2π inside). Angles are in quarter turns (π/2).
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConePoint {
    pub vertex: VertexId,
    pub position: [f64; 2],
    pub boundary: bool,
    pub quarter_turns: i64,
    pub angle: f64,
    pub copies: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Doubling {
    pub boundary_components: usize,
    pub genus: usize,
    pub area: f64,
    pub cones: Vec<(VertexId, f64)>,
    /// `Σ (2π - θ)` over the doubled cones, divided by `2π`.
    pub curvature_over_two_pi: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SurfaceNet {
    pub components: Vec<TiledComponent>,
    pub gluing: GluingReport,
    pub cones: Vec<ConePoint>,
    pub energy: f64,
    pub total_area: f64,
    /// Turning excess `Σ_∂ (π - θ) + Σ_int (2π - θ)` in quarter turns; equals `4χ`.
    pub gauss_bonnet: i64,
    pub euler_characteristic: i64,
}

/// Angle of one copy in its chart, in quarter turns. A copy that is a whole
/// open run by itself spans a chart side and carries its two corners apart.
fn copy_turns(comp: &Component, idx: usize) -> (i64, bool) {
    let copy = &comp.copies[idx];
    if !copy.on_boundary {
        return (4, false);
    }
    let mut ends = 0;
    for r in comp.runs.iter().filter(|r| !r.closed) {
        if r.copies.first() == Some(&idx) {
            ends += 1;
        }
        if r.copies.last() == Some(&idx) {
            ends += 1;
        }
    }
    match ends {
        0 => (2, false),
        1 => (1, false),
        _ => (2, true),
    }
}

/// Glues the tiled components and collects cone angles.
pub fn assemble_surface(
    d: &Decomposition,
    components: Vec<TiledComponent>,
    gluing: GluingReport,
) -> SurfaceNet {
    let rc = &d.refined;
    // per vertex: (turns, copies, whether it is a lone chart side)
    let mut turns: BTreeMap<VertexId, (i64, usize, bool)> = BTreeMap::new();
    for comp in &d.components {
        for i in 0..comp.copies.len() {
            let (q, lone) = copy_turns(comp, i);
            let e = turns.entry(comp.copies[i].vertex).or_default();
            e.0 += q;
            e.1 += 1;
            e.2 |= lone;
        }
    }
    let mut points: Vec<(VertexId, i64, usize)> = Vec::new();
    for (&v, &(q, copies, lone)) in &turns {
        if lone && copies == 1 {
            points.push((v, 1, 1));
            points.push((v, 1, 1));
        } else {
            points.push((v, q, copies));
        }
    }
    let mut cones = Vec::new();
    let mut excess = 0;
    for (v, q, copies) in points {
        let boundary = rc.is_boundary(v);
        let flat = if boundary { 2 } else { 4 };
        excess += flat - q;
        if q != flat {
            cones.push(ConePoint {
                vertex: v,
                position: rc.position(v),
                boundary,
                quarter_turns: q,
                angle: q as f64 * std::f64::consts::FRAC_PI_2,
                copies,
            });
        }
    }
    SurfaceNet {
        total_area: components.iter().map(|c| c.target.area()).sum(),
        energy: d.total_energy(),
        components,
        gluing,
        cones,
        gauss_bonnet: excess,
        euler_characteristic: rc.euler_characteristic(),
    }
}

/// Doubles the surface across its boundary.
pub fn doubling_report(net: &SurfaceNet, boundary_components: usize, energy: f64) -> Doubling {
    let mut cones = Vec::new();
    for c in &net.cones {
        if c.boundary {
            cones.push((c.vertex, 2.0 * c.angle));
        } else {
            cones.push((c.vertex, c.angle));
            cones.push((c.vertex, c.angle));
        }
    }
    let two_pi = std::f64::consts::TAU;
    let curvature = cones.iter().map(|&(_, a)| (two_pi - a) / two_pi).sum();
    Doubling {
        boundary_components,
        genus: boundary_components.saturating_sub(1),
        area: 2.0 * energy,
        cones,
        curvature_over_two_pi: curvature,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::{dirichlet_energy, solve_dnbvp};
    use crate::decomp::{decompose, extract_subdomains, verify_gluing};
    use crate::fixtures;
    use crate::morse::{index_formula_check, TiePolicy};
    use crate::network::key;
    use crate::refine::RefinedComplex;

    fn pipeline(name: &str) -> (Decomposition, f64, usize) {
        let (cx, spec) = fixtures::by_name(name).unwrap();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let report = index_formula_check(&cx, &spec, g.values(), TiePolicy::Strict).unwrap();
        let d = decompose(&cx, &spec, g.values(), &report).unwrap();
        (
            d,
            dirichlet_energy(cx.network(), g.values()),
            cx.loops().len(),
        )
    }

    #[test]
    fn quad_tiles_match_edge_formula() {
        let (d, e, _) = pipeline("FIX-QUAD");
        let tc = tile_component(&d, &d.components[0], Some(200)).unwrap();
        assert_eq!(tc.tiles.len(), 5);
        assert_eq!(tc.degenerate, 2);
        let mut sizes: Vec<(i64, i64)> = tc
            .tiles
            .iter()
            .map(|t| {
                (
                    (t.width * 11.0).round() as i64,
                    (t.height * 11.0).round() as i64,
                )
            })
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![(1, 1), (4, 8), (5, 5), (6, 6), (7, 7)]);
        assert!((tc.tile_area - 13.0 / 11.0).abs() < 1e-12);
        assert!((tc.target.area() - e).abs() < 1e-12);
        assert!(tc.boundary_violations.is_empty());
        assert!(tc.cross_section_defect < 1e-12);
    }

    #[test]
    fn square_annulus_is_one_cylinder() {
        let (d, e, _) = pipeline("FIX-SQUARE-ANN");
        assert_eq!(d.components.len(), 1);
        let tc = tile_annulus(&d, &d.components[0], Some(400)).unwrap();
        assert!(tc.target.is_cyclic());
        assert!((tc.target.area() - e).abs() < 1e-9 * e);
        assert_eq!(tc.coverage.unwrap().gaps, 0);
    }

    #[test]
    fn subdivision_reconstitutes_tiles() {
        let (cx, spec) = fixtures::quad();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let base = RefinedComplex::new(&cx, &spec, g.values()).unwrap();
        let levels = [0.0, spec.k()];
        let d0 = extract_subdomains(base.clone(), &levels, Vec::new()).unwrap();
        let t0 = tile_component(&d0, &d0.components[0], None).unwrap();
        for tile in &t0.tiles {
            let (a, b) = tile.edge;
            let mut rc = base.clone();
            rc.subdivide_edge(a, b, 0.37).unwrap();
            let d = extract_subdomains(rc, &levels, Vec::new()).unwrap();
            let t = tile_component(&d, &d.components[0], Some(100)).unwrap();
            let pieces: Vec<&RectTile> = t
                .tiles
                .iter()
                .filter(|p| d.refined.origin_edge(p.edge.0, p.edge.1) == Some(key(a, b)))
                .collect();
            assert_eq!(pieces.len(), 2);
            let x0 = pieces.iter().map(|p| p.x[0]).fold(f64::INFINITY, f64::min);
            let x1 = pieces
                .iter()
                .map(|p| p.x[1])
                .fold(f64::NEG_INFINITY, f64::max);
            for p in &pieces {
                assert!((p.y[0] - tile.y[0]).abs() < 1e-12 && (p.y[1] - tile.y[1]).abs() < 1e-12);
            }
            assert!((x0 - tile.x[0]).abs() < 1e-12 && (x1 - tile.x[1]).abs() < 1e-12);
            assert!((pieces[0].width + pieces[1].width - tile.width).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_angles_and_gauss_bonnet() {
        for name in fixtures::NAMES {
            let (d, e, m) = pipeline(name);
            let gluing = verify_gluing(&d, 1e-9).unwrap();
            let tiles = d
                .components
                .iter()
                .map(|c| tile_component(&d, c, None).unwrap())
                .collect();
            let net = assemble_surface(&d, tiles, gluing);
            assert_eq!(net.gauss_bonnet, 4 * net.euler_characteristic, "{name}");
            for c in &net.cones {
                assert!(
                    c.quarter_turns == 1 || c.quarter_turns == 2 || c.quarter_turns % 4 == 0,
                    "{name}"
                );
            }
            let dbl = doubling_report(&net, m, e);
            assert_eq!(dbl.genus, m - 1);
            let chi = 2.0 - 2.0 * dbl.genus as f64;
            assert!((dbl.curvature_over_two_pi - chi).abs() < 1e-12, "{name}");
            assert!((net.total_area - e).abs() < 1e-9 * e, "{name}");
        }
    }

    #[test]
    fn annulus_cone_at_singular_vertex() {
        let (d, _, _) = pipeline("FIX-ANN");
        let gluing = verify_gluing(&d, 1e-9).unwrap();
        let tiles: Vec<TiledComponent> = d
            .components
            .iter()
            .map(|c| tile_component(&d, c, None).unwrap())
            .collect();
        let sliced = tiles
            .iter()
            .find(|t| t.kind == ComponentKind::SlicedQuadrilateral)
            .unwrap();
        assert!(sliced.tiles.iter().any(|t| !t.embedded));
        let Target::SlicedRectangle {
            identified, height, ..
        } = &sliced.target
        else {
            panic!("expected a sliced rectangle")
        };
        assert_eq!(identified[0].segments.len(), 2);
        let ys: Vec<f64> = identified[0]
            .segments
            .iter()
            .flat_map(|s| [s[1], s[2]])
            .collect();
        assert!(
            ys.iter().any(|&y| y.abs() < 1e-9) && ys.iter().any(|&y| (y - height).abs() < 1e-9)
        );
        let net = assemble_surface(&d, tiles, gluing);
        let us = d.singular[0];
        let cone = net.cones.iter().find(|c| c.vertex == us).unwrap();
        assert_eq!(cone.quarter_turns, 4);
    }
}
