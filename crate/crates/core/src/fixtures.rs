//! Deterministic test complexes built on integer grids.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{signed_area, BoundarySpec, CellComplex, VertexId};
use crate::error::{Error, Result};

/// Cell shapes of a grid: plain squares, or squares cut along a diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonal {
    /// From `(i, j)` to `(i + 1, j + 1)`.
    Up,
    /// From `(i + 1, j)` to `(i, j + 1)`.
    Down,
}

/// A rectangular grid of `nx × ny` points with rectangular holes of removed
/// cells; each hole is `[i0, j0, i1, j1)` in cell coordinates.
pub struct Grid<'a> {
    pub nx: usize,
    pub ny: usize,
    pub holes: Vec<[usize; 4]>,
    pub diagonal: Option<&'a dyn Fn(usize, usize) -> Diagonal>,
    pub conductance: &'a dyn Fn([usize; 2], [usize; 2]) -> f64,
}

impl Grid<'_> {
    fn in_hole(&self, i: usize, j: usize) -> bool {
        self.holes
            .iter()
            .any(|h| i >= h[0] && i < h[2] && j >= h[1] && j < h[3])
    }

    /// Builds the complex. Vertex labels are assigned row by row.
    pub fn build(&self) -> Result<CellComplex> {
        let mut used = vec![false; self.nx * self.ny];
        let id = |i: usize, j: usize| j * self.nx + i;
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                if !self.in_hole(i, j) {
                    for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                        used[id(a, b)] = true;
                    }
                }
            }
        }
        let mut index = vec![usize::MAX; used.len()];
        let mut coords = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if used[id(i, j)] {
                    index[id(i, j)] = coords.len();
                    coords.push([i, j]);
                }
            }
        }
        let vx = |i: usize, j: usize| index[id(i, j)];
        let mut cells = Vec::new();
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                if self.in_hole(i, j) {
                    continue;
                }
                let (a, b, c, d) = (vx(i, j), vx(i + 1, j), vx(i + 1, j + 1), vx(i, j + 1));
                match self.diagonal.map(|f| f(i, j)) {
                    None => cells.push(vec![a, b, c, d]),
                    Some(Diagonal::Up) => {
                        cells.push(vec![a, b, c]);
                        cells.push(vec![a, c, d]);
                    }
                    Some(Diagonal::Down) => {
                        cells.push(vec![a, b, d]);
                        cells.push(vec![b, c, d]);
                    }
                }
            }
        }
        let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::new();
        let mut side_count: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        for cell in &cells {
            for s in 0..cell.len() {
                let (a, b) = (cell[s], cell[(s + 1) % cell.len()]);
                let key = (a.min(b), a.max(b));
                let count = side_count.entry(key).or_insert(0);
                if *count == 0 {
                    edges.push((a, b, (self.conductance)(coords[a], coords[b])));
                }
                *count += 1;
            }
        }
        edges.sort_by_key(|e| (e.0.min(e.1), e.0.max(e.1)));

        // Boundary sides in cell orientation, chained into loops.
        let mut next: HashMap<VertexId, VertexId> = HashMap::new();
        for cell in &cells {
            for s in 0..cell.len() {
                let (a, b) = (cell[s], cell[(s + 1) % cell.len()]);
                if side_count[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                    return Err(Error::Validation("grid holes touch at a corner".into()));
                }
            }
        }
        let mut starts: Vec<VertexId> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = vec![false; coords.len()];
        let mut loops: Vec<Vec<VertexId>> = Vec::new();
        for s in starts {
            if seen[s] {
                continue;
            }
            let mut lp = vec![s];
            seen[s] = true;
            let mut cur = next[&s];
            while cur != s {
                seen[cur] = true;
                lp.push(cur);
                cur = next[&cur];
            }
            loops.push(lp);
        }
        let pos = |v: VertexId| [coords[v][0] as f64, coords[v][1] as f64];
        let area =
            |lp: &Vec<VertexId>| signed_area(&lp.iter().map(|&v| pos(v)).collect::<Vec<_>>());
        loops.sort_by(|a, b| area(b).partial_cmp(&area(a)).unwrap());

        let labels = (0..coords.len() as u64).collect();
        let positions = (0..coords.len()).map(pos).collect();
        CellComplex::new(labels, positions, &edges, cells, loops)
    }
}

fn unit(_: [usize; 2], _: [usize; 2]) -> f64 {
    1.0
}

/// Vertex at integer grid point `(i, j)`.
pub fn grid_vertex(cx: &CellComplex, i: usize, j: usize) -> VertexId {
    let p = [i as f64, j as f64];
    (0..cx.vertex_count())
        .find(|&v| cx.position(v) == p)
        .unwrap_or_else(|| panic!("no vertex at ({i}, {j})"))
}

/// Boundary path along loop `loop_index` (region on the left) from `from` to `to`.
pub fn loop_path(cx: &CellComplex, from: [usize; 2], to: [usize; 2]) -> Vec<VertexId> {
    let a = grid_vertex(cx, from[0], from[1]);
    let b = grid_vertex(cx, to[0], to[1]);
    let (li, start) = cx.loop_slot(a).expect("path start is not on the boundary");
    let lp = &cx.loops()[li];
    let mut path = Vec::new();
    let mut pos = start;
    loop {
        path.push(lp[pos]);
        if lp[pos] == b {
            break;
        }
        pos = (pos + 1) % lp.len();
        assert!(pos != start, "path end is not on the same loop");
    }
    path
}

pub fn quad() -> (CellComplex, BoundarySpec) {
    let cond = |a: [usize; 2], b: [usize; 2]| {
        if (a == [1, 0] && b == [2, 0]) || (a == [2, 0] && b == [1, 0]) {
            2.0
        } else {
            1.0
        }
    };
    let cx = Grid {
        nx: 3,
        ny: 2,
        holes: vec![],
        diagonal: None,
        conductance: &cond,
    }
    .build()
    .expect("quad fixture");
    let alpha = vec![loop_path(&cx, [2, 0], [2, 1])];
    let beta = vec![vec![grid_vertex(&cx, 1, 0)], vec![grid_vertex(&cx, 1, 1)]];
    let spec = BoundarySpec::new(&cx, 1.0, alpha, beta).expect("quad boundary");
    (cx, spec)
}

fn alternating(i: usize, j: usize) -> Diagonal {
    if (i * 7 + j * 3) % 5 < 2 {
        Diagonal::Down
    } else {
        Diagonal::Up
    }
}

fn annulus_grid() -> CellComplex {
    Grid {
        nx: 8,
        ny: 8,
        holes: vec![[3, 2, 5, 4]],
        diagonal: Some(&alternating),
        conductance: &unit,
    }
    .build()
    .expect("annulus fixture")
}

/// Annulus, α-arc on the outer boundary, rest of the outer boundary Neumann,
/// inner boundary grounded.
pub fn annulus() -> (CellComplex, BoundarySpec) {
    let cx = annulus_grid();
    let alpha = vec![loop_path(&cx, [6, 7], [1, 7])];
    let spec = BoundarySpec::new(&cx, 1.0, alpha, vec![]).expect("annulus boundary");
    (cx, spec)
}

/// Annulus, whole outer boundary at `k`, Neumann arc on the inner boundary.
pub fn annulus_inner() -> (CellComplex, BoundarySpec) {
    let cx = annulus_grid();
    let outer = cx.loops()[0].clone();
    let beta = vec![loop_path(&cx, [5, 4], [3, 4])];
    let spec = BoundarySpec::new(&cx, 1.0, vec![outer], beta).expect("annulus boundary");
    (cx, spec)
}

/// Annulus with an α-arc on the outer boundary and a β-arc on the inner one.
pub fn annulus_both() -> (CellComplex, BoundarySpec) {
    let cx = annulus_grid();
    let alpha = vec![loop_path(&cx, [6, 7], [1, 7])];
    let beta = vec![loop_path(&cx, [3, 4], [3, 2])];
    let spec = BoundarySpec::new(&cx, 1.0, alpha, beta).expect("annulus boundary");
    (cx, spec)
}

/// Pair of pants, one α-arc on the outer boundary.
pub fn pants_one_arc() -> (CellComplex, BoundarySpec) {
    let cx = Grid {
        nx: 11,
        ny: 8,
        holes: vec![[2, 2, 4, 4], [6, 3, 8, 5]],
        diagonal: Some(&alternating),
        conductance: &unit,
    }
    .build()
    .expect("pants fixture");
    let alpha = vec![loop_path(&cx, [8, 7], [3, 7])];
    let spec = BoundarySpec::new(&cx, 1.0, alpha, vec![]).expect("pants boundary");
    (cx, spec)
}

/// Mirror-symmetric diagonals under `j ↦ ny - 2 - j` on an odd-height grid.
fn mirrored(ny: usize) -> impl Fn(usize, usize) -> Diagonal {
    move |i, j| {
        let half = (ny - 1) / 2;
        if j < half {
            alternating(i, j)
        } else {
            match alternating(i, ny - 2 - j) {
                Diagonal::Up => Diagonal::Down,
                Diagonal::Down => Diagonal::Up,
            }
        }
    }
}

/// Pair of pants with α-arcs on the left and right sides; top–bottom mirror
/// symmetry puts the two boundary saddles on one level.
fn pants_two_arcs(holes: Vec<[usize; 4]>, nx: usize, ny: usize) -> (CellComplex, BoundarySpec) {
    let diag = mirrored(ny);
    let cx = Grid {
        nx,
        ny,
        holes,
        diagonal: Some(&diag),
        conductance: &unit,
    }
    .build()
    .expect("pants fixture");
    let alpha = vec![
        loop_path(&cx, [nx - 1, 2], [nx - 1, ny - 3]),
        loop_path(&cx, [0, ny - 2], [0, 1]),
    ];
    let spec = BoundarySpec::new(&cx, 1.0, alpha, vec![]).expect("pants boundary");
    (cx, spec)
}

/// Two outer arcs; the holes sit close together so the interior saddle is
/// below the boundary saddles.
pub fn pants_two_arcs_joined() -> (CellComplex, BoundarySpec) {
    pants_two_arcs(vec![[4, 7, 7, 9], [4, 3, 7, 5]], 12, 13)
}

/// Two outer arcs; the holes sit near the top and bottom so the interior
/// saddle is above the boundary saddles.
pub fn pants_two_arcs_split() -> (CellComplex, BoundarySpec) {
    pants_two_arcs(vec![[4, 9, 7, 11], [4, 1, 7, 3]], 12, 13)
}

/// Square annulus with the outer boundary at `k` and the inner grounded.
pub fn square_annulus() -> (CellComplex, BoundarySpec) {
    let cx = Grid {
        nx: 7,
        ny: 7,
        holes: vec![[2, 2, 4, 4]],
        diagonal: None,
        conductance: &unit,
    }
    .build()
    .expect("square annulus fixture");
    let outer = cx.loops()[0].clone();
    let spec = BoundarySpec::new(&cx, 1.0, vec![outer], vec![]).expect("square annulus boundary");
    (cx, spec)
}

/// Topologies accepted by [`random`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Quad,
    Annulus,
    Pants,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" | "quadrilateral" => Ok(Topology::Quad),
            "annulus" => Ok(Topology::Annulus),
            "pants" => Ok(Topology::Pants),
            other => Err(Error::UnknownFixture(format!("random topology '{other}'"))),
        }
    }
}

/// Seeded instance: random diagonals and conductances in `[0.5, 2]` on a fixed
/// topology.
pub fn random(seed: u64, topology: Topology) -> (CellComplex, BoundarySpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, ny, holes): (usize, usize, Vec<[usize; 4]>) = match topology {
        Topology::Quad => (6, 5, vec![]),
        Topology::Annulus => (7, 7, vec![[2, 2, 4, 4]]),
        Topology::Pants => (10, 7, vec![[2, 2, 4, 4], [6, 2, 8, 4]]),
    };
    let diags: Vec<Diagonal> = (0..nx * ny)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Diagonal::Up
            } else {
                Diagonal::Down
            }
        })
        .collect();
    let mut cond_table: HashMap<([usize; 2], [usize; 2]), f64> = HashMap::new();
    for j in 0..ny {
        for i in 0..nx {
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                if i + di < nx && j + dj < ny {
                    cond_table.insert(([i, j], [i + di, j + dj]), rng.gen_range(0.5..=2.0));
                }
            }
            if i + 1 < nx && j + 1 < ny {
                cond_table.insert(([i + 1, j], [i, j + 1]), rng.gen_range(0.5..=2.0));
            }
        }
    }
    let diag = move |i: usize, j: usize| diags[j * nx + i];
    let cond = |a: [usize; 2], b: [usize; 2]| {
        cond_table
            .get(&(a, b))
            .or_else(|| cond_table.get(&(b, a)))
            .copied()
            .unwrap_or(1.0)
    };
    let cx = Grid {
        nx,
        ny,
        holes,
        diagonal: Some(&diag),
        conductance: &cond,
    }
    .build()
    .expect("random fixture");
    let spec = match topology {
        Topology::Quad => {
            let alpha = vec![loop_path(&cx, [nx - 1, 0], [nx - 1, ny - 1])];
            let beta = vec![
                loop_path(&cx, [1, 0], [nx - 2, 0]),
                loop_path(&cx, [nx - 2, ny - 1], [1, ny - 1]),
            ];
            BoundarySpec::new(&cx, 1.0, alpha, beta)
        }
        Topology::Annulus | Topology::Pants => {
            let alpha = vec![loop_path(&cx, [nx - 2, ny - 1], [1, ny - 1])];
            BoundarySpec::new(&cx, 1.0, alpha, vec![])
        }
    }
    .expect("random boundary");
    (cx, spec)
}

/// Named fixtures.
pub fn by_name(name: &str) -> Result<(CellComplex, BoundarySpec)> {
    let upper = name.to_ascii_uppercase();
    if let Some(rest) = upper.strip_prefix("RANDOM:") {
        let mut parts = rest.split(':');
        let seed = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnknownFixture(name.into()))?;
        let topology = parts
            .next()
            .unwrap_or("quad")
            .to_ascii_lowercase()
            .parse()?;
        return Ok(random(seed, topology));
    }
    match upper.as_str() {
        "FIX-QUAD" => Ok(quad()),
        "FIX-ANN" => Ok(annulus()),
        "FIX-ANN-INNER" => Ok(annulus_inner()),
        "FIX-ANN-BOTH" => Ok(annulus_both()),
        "FIX-PANTS1" => Ok(pants_one_arc()),
        "FIX-PANTS2" => Ok(pants_two_arcs_joined()),
        "FIX-PANTS2-SPLIT" => Ok(pants_two_arcs_split()),
        "FIX-SQUARE-ANN" => Ok(square_annulus()),
        _ => Err(Error::UnknownFixture(name.into())),
    }
}

pub const NAMES: &[&str] = &[
    "FIX-QUAD",
    "FIX-ANN",
    "FIX-ANN-INNER",
    "FIX-ANN-BOTH",
    "FIX-PANTS1",
    "FIX-PANTS2",
    "FIX-PANTS2-SPLIT",
    "FIX-SQUARE-ANN",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_counts_and_fan() {
        let (cx, spec) = quad();
        assert_eq!(
            (cx.vertex_count(), cx.edge_count(), cx.cell_count()),
            (6, 7, 2)
        );
        let v = grid_vertex(&cx, 1, 0);
        let fan = cx.vertex_star(v).unwrap();
        let expected = [
            grid_vertex(&cx, 2, 0),
            grid_vertex(&cx, 1, 1),
            grid_vertex(&cx, 0, 0),
        ];
        assert_eq!(fan, expected);
        assert_eq!(spec.ground_set().len(), 2);
    }

    #[test]
    fn interior_star_starts_east() {
        let cx = Grid {
            nx: 3,
            ny: 3,
            holes: vec![],
            diagonal: None,
            conductance: &unit,
        }
        .build()
        .unwrap();
        let c = grid_vertex(&cx, 1, 1);
        let star: Vec<VertexId> = cx.vertex_star(c).unwrap().to_vec();
        let expect = [
            grid_vertex(&cx, 2, 1),
            grid_vertex(&cx, 1, 2),
            grid_vertex(&cx, 0, 1),
            grid_vertex(&cx, 1, 0),
        ];
        assert_eq!(star, expect);
    }

    #[test]
    fn euler_characteristics() {
        assert_eq!(quad().0.euler_characteristic(), 1);
        assert_eq!(annulus().0.euler_characteristic(), 0);
        assert_eq!(pants_one_arc().0.euler_characteristic(), -1);
        assert_eq!(pants_one_arc().0.loops().len(), 3);
    }

    #[test]
    fn random_is_deterministic() {
        let a = crate::complex::to_document(
            &random(1, Topology::Annulus).0,
            &random(1, Topology::Annulus).1,
        );
        let b = crate::complex::to_document(
            &random(1, Topology::Annulus).0,
            &random(1, Topology::Annulus).1,
        );
        assert_eq!(a, b);
    }

    #[test]
    fn all_named_fixtures_build() {
        for name in NAMES {
            by_name(name).unwrap();
        }
        assert!(matches!(by_name("FIX-NOPE"), Err(Error::UnknownFixture(_))));
    }
}
