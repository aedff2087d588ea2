//! Mixed Dirichlet–Neumann problem: Laplacian, energy, flux and the solver.

use std::collections::HashSet;

use log::{debug, warn};
use serde::Serialize;
use sprs::{CsMat, TriMat};
use sprs_ldl::Ldl;

use crate::complex::{BoundarySpec, CellComplex, Role, VertexId};
use crate::error::{Error, Result};
use crate::network::Network;

/// Relative residual required of every solve.
pub const SOLVE_TOL: f64 = 1e-12;

/// Relative tolerance for downstream equality checks.
pub const CHECK_TOL: f64 = 1e-9;

/// Solved vertex function `g` with its boundary data.
#[derive(Debug, Clone, Serialize)]
pub struct Potential {
    values: Vec<f64>,
    k: f64,
    residual_norm: f64,
}

impl Potential {
    pub fn new(values: Vec<f64>, k: f64, residual_norm: f64) -> Self {
        Potential {
            values,
            k,
            residual_norm,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, v: VertexId) -> f64 {
        self.values[v]
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Relative residual `|L_UU x - b| / |b|` of the final solve.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexFlux {
    pub vertex: VertexId,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcFlux {
    pub arc: usize,
    pub role: Role,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxReport {
    pub per_vertex: Vec<VertexFlux>,
    pub total: f64,
    pub arc_totals: Vec<ArcFlux>,
}

fn value_of(values: &[f64], v: VertexId) -> Result<f64> {
    match values.get(v) {
        Some(x) if x.is_finite() => Ok(*x),
        _ => Err(Error::MissingValue(v)),
    }
}

/// `Δu(v) = Σ c(v,y)(u(v) - u(y))`, optionally over neighbours in `restrict_to` only.
pub fn laplacian_at(
    net: &Network,
    values: &[f64],
    v: VertexId,
    restrict_to: Option<&HashSet<VertexId>>,
) -> Result<f64> {
    if v >= net.vertex_count() {
        return Err(Error::UnknownVertex(v));
    }
    let uv = value_of(values, v)?;
    let mut sum = 0.0;
    for &(y, e) in net.neighbors(v) {
        if restrict_to.is_some_and(|f| !f.contains(&y)) {
            continue;
        }
        sum += net.edge(e).c * (uv - value_of(values, y)?);
    }
    Ok(sum)
}

/// `E(u) = Σ_edges c (u(x) - u(y))²`.
pub fn dirichlet_energy(net: &Network, values: &[f64]) -> f64 {
    net.edges()
        .iter()
        .map(|e| e.c * (values[e.a] - values[e.b]).powi(2))
        .sum()
}

/// Solves the network problem with `fixed[v] = Some(value)` pinned and
/// `Δu = 0` over the full star of every free vertex.
pub fn solve_network(net: &Network, fixed: &[Option<f64>], tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = net.vertex_count();
    if fixed.len() != n {
        return Err(Error::Validation(
            "boundary data length differs from vertex count".into(),
        ));
    }
    check_reachable(net, fixed)?;

    let mut slot = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for v in 0..n {
        if fixed[v].is_none() {
            slot[v] = unknowns.len();
            unknowns.push(v);
        }
    }
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if unknowns.is_empty() {
        return Ok((values, 0.0));
    }

    let m = unknowns.len();
    let mut tri = TriMat::new((m, m));
    let mut rhs = vec![0.0; m];
    for (i, &v) in unknowns.iter().enumerate() {
        let mut diag = 0.0;
        for &(y, e) in net.neighbors(v) {
            let c = net.edge(e).c;
            diag += c;
            match fixed[y] {
                Some(val) => rhs[i] += c * val,
                None => tri.add_triplet(i, slot[y], -c),
            }
        }
        tri.add_triplet(i, i, diag);
    }
    let mat: CsMat<f64> = tri.to_csc();

    let scale = norm(&rhs).max(f64::MIN_POSITIVE);
    let factor = if m > 1 {
        Ldl::new().numeric(mat.view()).map_err(|e| e.to_string())
    } else {
        Err("1x1".into())
    };
    let mut x = match factor {
        Ok(ldl) => {
            let mut x = ldl.solve(&rhs);
            for _ in 0..3 {
                let r = residual(&mat, &x, &rhs);
                if norm(&r) / scale <= tol {
                    break;
                }
                let dx = ldl.solve(&r);
                x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            }
            x
        }
        Err(_) if m == 1 => vec![rhs[0] / mat.get(0, 0).copied().unwrap_or(1.0)],
        Err(err) => {
            warn!("sparse factorisation failed ({err}); falling back to conjugate gradients");
            conjugate_gradient(&mat, &rhs, tol, 20 * m + 100)
        }
    };
    let mut rel = norm(&residual(&mat, &x, &rhs)) / scale;
    if rel > tol {
        debug!("direct solve residual {rel:e}; polishing with conjugate gradients");
        let polished = conjugate_gradient_from(&mat, &rhs, x.clone(), tol, 20 * m + 100);
        let prel = norm(&residual(&mat, &polished, &rhs)) / scale;
        if prel < rel {
            x = polished;
            rel = prel;
        }
    }
    if rel > tol {
        return Err(Error::SolverDivergence {
            residual: rel,
            tolerance: tol,
        });
    }
    for (i, &v) in unknowns.iter().enumerate() {
        values[v] = x[i];
    }
    Ok((values, rel))
}

/// Every free vertex must reach a pinned vertex through free vertices.
fn check_reachable(net: &Network, fixed: &[Option<f64>]) -> Result<()> {
    let n = net.vertex_count();
    let mut seen: Vec<bool> = fixed.iter().map(Option::is_some).collect();
    let mut stack: Vec<VertexId> = (0..n).filter(|&v| fixed[v].is_some()).collect();
    if stack.is_empty() {
        return Err(Error::SingularSystem("no Dirichlet vertex".into()));
    }
    while let Some(v) = stack.pop() {
        for &(y, _) in net.neighbors(v) {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    match (0..n).find(|&v| !seen[v]) {
        Some(v) => Err(Error::SingularSystem(format!(
            "vertex {v} cannot reach a Dirichlet vertex"
        ))),
        None => Ok(()),
    }
}

fn residual(mat: &CsMat<f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = mul(mat, x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn mul(mat: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mat.rows()];
    for (col, col_vec) in mat.outer_iterator().enumerate() {
        for (row, &val) in col_vec.iter() {
            out[row] += val * x[col];
        }
    }
    out
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(mat: &CsMat<f64>, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    conjugate_gradient_from(mat, b, vec![0.0; b.len()], tol, max_iter)
}

/// Jacobi-preconditioned conjugate gradients.
fn conjugate_gradient_from(
    mat: &CsMat<f64>,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let diag: Vec<f64> = (0..b.len())
        .map(|i| mat.get(i, i).copied().unwrap_or(1.0))
        .collect();
    let scale = norm(b).max(f64::MIN_POSITIVE);
    let mut r = residual(mat, &x, b);
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if norm(&r) / scale <= tol * 0.1 {
            break;
        }
        let ap = mul(mat, &p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Solves the mixed problem: `g = k` on α vertices, `g = 0` on the ground set,
/// `Δg = 0` at interior and Neumann vertices.
pub fn solve_dnbvp(cx: &CellComplex, spec: &BoundarySpec) -> Result<Potential> {
    solve_dnbvp_with(cx, spec, SOLVE_TOL)
}

pub fn solve_dnbvp_with(cx: &CellComplex, spec: &BoundarySpec, tol: f64) -> Result<Potential> {
    let fixed: Vec<Option<f64>> = (0..cx.vertex_count())
        .map(|v| spec.dirichlet_value(v))
        .collect();
    let (values, residual) = solve_network(cx.network(), &fixed, tol)?;
    debug!(
        "solved {} vertices, relative residual {residual:e}",
        values.len()
    );
    Ok(Potential::new(values, spec.k(), residual))
}

/// Flux leaving `arc` through each of its vertices. On a constant (Dirichlet)
/// arc the edges inside the arc are skipped; on a Neumann arc every incident
/// edge counts.
pub fn normal_derivative(
    cx: &CellComplex,
    spec: &BoundarySpec,
    values: &[f64],
    arc: &[VertexId],
) -> Result<(Vec<VertexFlux>, f64)> {
    for &v in arc {
        if v >= cx.vertex_count() {
            return Err(Error::UnknownVertex(v));
        }
        if !cx.is_boundary(v) {
            return Err(Error::NotBoundary(v));
        }
    }
    let first = arc.first().map(|&v| spec.role(v));
    let constant =
        first.is_some_and(|r| r.is_dirichlet() && arc.iter().all(|&v| spec.role(v) == r));
    let members: HashSet<VertexId> = arc.iter().copied().collect();
    let outside: HashSet<VertexId> = (0..cx.vertex_count())
        .filter(|v| !members.contains(v))
        .collect();
    let mut per_vertex = Vec::with_capacity(arc.len());
    let mut total = 0.0;
    for &v in arc {
        let flux = laplacian_at(cx.network(), values, v, constant.then_some(&outside))?;
        total += flux;
        per_vertex.push(VertexFlux { vertex: v, flux });
    }
    Ok((per_vertex, total))
}

/// Per-arc and total boundary flux; errors when the total does not vanish.
pub fn check_consistency(
    cx: &CellComplex,
    spec: &BoundarySpec,
    values: &[f64],
) -> Result<FluxReport> {
    check_consistency_with(cx, spec, values, CHECK_TOL)
}

pub fn check_consistency_with(
    cx: &CellComplex,
    spec: &BoundarySpec,
    values: &[f64],
    tol: f64,
) -> Result<FluxReport> {
    let report = flux_report(cx, spec, values)?;
    let scale: f64 = report.per_vertex.iter().map(|f| f.flux.abs()).sum();
    let tolerance = tol * scale.max(spec.k() * f64::EPSILON);
    if report.total.abs() > tolerance {
        return Err(Error::ConsistencyViolation {
            total: report.total,
            tolerance,
        });
    }
    Ok(report)
}

/// Boundary flux of `values` over the derived arcs, without checking the total.
pub fn flux_report(cx: &CellComplex, spec: &BoundarySpec, values: &[f64]) -> Result<FluxReport> {
    let mut per_vertex = Vec::new();
    let mut arc_totals = Vec::new();
    for arc in spec.arcs() {
        let (fluxes, total) = normal_derivative(cx, spec, values, &arc.vertices)?;
        per_vertex.extend(fluxes);
        arc_totals.push(ArcFlux {
            arc: arc.id,
            role: arc.role,
            total,
        });
    }
    let total = per_vertex.iter().map(|f| f.flux).sum();
    Ok(FluxReport {
        per_vertex,
        total,
        arc_totals,
    })
}

/// Total current entering the network through the α vertices.
pub fn alpha_flux(cx: &CellComplex, spec: &BoundarySpec, values: &[f64]) -> Result<f64> {
    Ok(flux_report(cx, spec, values)?
        .arc_totals
        .iter()
        .filter(|a| a.role == Role::Top)
        .map(|a| a.total)
        .sum())
}

/// `|LHS - RHS|` of the first Green identity over the vertex set `f`:
/// `Σ_{Ē} c du dv = Σ_F Δu·v + Σ_{δF} ∂u/∂n(F)·v`, where `Ē` holds the edges
/// with an endpoint in `f` and `δF` the outside neighbours of `f`.
pub fn green_identity_residual(net: &Network, f: &[VertexId], u: &[f64], v: &[f64]) -> Result<f64> {
    let n = net.vertex_count();
    if f.is_empty() {
        return Err(Error::BadSubset("empty vertex set".into()));
    }
    let inside: HashSet<VertexId> = f.iter().copied().collect();
    if inside.len() != f.len() {
        return Err(Error::BadSubset("repeated vertex".into()));
    }
    if let Some(&bad) = f.iter().find(|&&x| x >= n) {
        return Err(Error::BadSubset(format!(
            "vertex {bad} is not in the network"
        )));
    }
    if u.len() != n || v.len() != n {
        return Err(Error::BadSubset(
            "vertex functions do not cover the network".into(),
        ));
    }
    let mut rim: HashSet<VertexId> = HashSet::new();
    for &x in f {
        for &(y, _) in net.neighbors(x) {
            if !inside.contains(&y) {
                rim.insert(y);
            }
        }
    }
    let lhs: f64 = net
        .edges()
        .iter()
        .filter(|e| inside.contains(&e.a) || inside.contains(&e.b))
        .map(|e| e.c * (u[e.a] - u[e.b]) * (v[e.a] - v[e.b]))
        .sum();
    let mut rhs = 0.0;
    for &x in f {
        rhs += laplacian_at(net, u, x, None)? * v[x];
    }
    for &x in &rim {
        rhs += laplacian_at(net, u, x, Some(&inside))? * v[x];
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn laplacian_of_star() {
        let mut net = Network::new(4);
        for y in 1..4 {
            net.add_edge(0, y, 1.0);
        }
        let g = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(laplacian_at(&net, &g, 0, None).unwrap(), 3.0);
        assert_eq!(laplacian_at(&net, &[2.0; 4], 1, None).unwrap(), 0.0);
        assert!(matches!(
            laplacian_at(&net, &g, 9, None),
            Err(Error::UnknownVertex(9))
        ));
        assert!(matches!(
            laplacian_at(&net, &[1.0, f64::NAN, 0.0, 0.0], 0, None),
            Err(Error::MissingValue(1))
        ));
    }

    #[test]
    fn divider_and_pinned_edge() {
        let mut net = Network::new(3);
        net.add_edge(0, 1, 1.0);
        net.add_edge(1, 2, 1.0);
        let (g, _) = solve_network(&net, &[Some(1.0), None, Some(0.0)], SOLVE_TOL).unwrap();
        assert!((g[1] - 0.5).abs() < 1e-14);

        let mut edge = Network::new(2);
        edge.add_edge(0, 1, 2.0);
        let (g, res) = solve_network(&edge, &[Some(1.0), Some(0.0)], SOLVE_TOL).unwrap();
        assert_eq!(g, vec![1.0, 0.0]);
        assert_eq!(res, 0.0);
        assert_eq!(dirichlet_energy(&edge, &g), 2.0);
    }

    #[test]
    fn unpinned_network_is_singular() {
        let mut net = Network::new(2);
        net.add_edge(0, 1, 1.0);
        assert!(matches!(
            solve_network(&net, &[None, None], SOLVE_TOL),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn quad_fixture_values() {
        let (cx, spec) = fixtures::quad();
        let g = solve_dnbvp(&cx, &spec).unwrap();
        let v10 = fixtures::grid_vertex(&cx, 1, 0);
        let v11 = fixtures::grid_vertex(&cx, 1, 1);
        assert!((g.value(v10) - 7.0 / 11.0).abs() < 1e-12);
        assert!((g.value(v11) - 6.0 / 11.0).abs() < 1e-12);
        assert!(
            laplacian_at(cx.network(), g.values(), v10, None)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!((dirichlet_energy(cx.network(), g.values()) - 13.0 / 11.0).abs() < 1e-12);
        let report = check_consistency(&cx, &spec, g.values()).unwrap();
        assert!(report.total.abs() < 1e-12);
    }

    #[test]
    fn random_values_violate_consistency() {
        // every vertex of the quad fixture is on the boundary, so use one with an interior
        let (cx, spec) = fixtures::annulus();
        let mut g: Vec<f64> = (0..cx.vertex_count())
            .map(|v| ((v * 37) % 11) as f64 / 11.0)
            .collect();
        for v in 0..cx.vertex_count() {
            if let Some(d) = spec.dirichlet_value(v) {
                g[v] = d;
            }
        }
        assert!(matches!(
            check_consistency(&cx, &spec, &g),
            Err(Error::ConsistencyViolation { .. })
        ));
    }

    #[test]
    fn green_with_zero_test_function() {
        let (cx, _) = fixtures::quad();
        let u: Vec<f64> = (0..cx.vertex_count()).map(|v| v as f64 * 0.37).collect();
        let zero = vec![0.0; u.len()];
        let r = green_identity_residual(cx.network(), &[1, 4], &u, &zero).unwrap();
        assert_eq!(r, 0.0);
        assert!(matches!(
            green_identity_residual(cx.network(), &[], &u, &zero),
            Err(Error::BadSubset(_))
        ));
    }
}
