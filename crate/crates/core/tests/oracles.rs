mod common;

use common::*;
use harmtile::bvp::{self, solve_network};
use harmtile::fixtures::{self, grid_vertex, Topology};

#[test]
fn quad_matches_exact_rationals() {
    let (cx, spec) = fixtures::quad();
    let exact = exact_solve(cx.network(), &fixed_values(&cx, &spec));
    assert_eq!(exact[grid_vertex(&cx, 1, 0)], ratio(7, 11));
    assert_eq!(exact[grid_vertex(&cx, 1, 1)], ratio(6, 11));
    assert_eq!(exact_energy(cx.network(), &exact), ratio(13, 11));
    let g = solve(&cx, &spec);
    for (v, x) in exact.iter().enumerate() {
        assert!((g[v] - to_f64(x)).abs() < 1e-14, "vertex {v}");
    }
    let e = bvp::dirichlet_energy(cx.network(), &g);
    assert!((e - 13.0 / 11.0).abs() < 1e-14);
    let h = bvp::alpha_flux(&cx, &spec, &g).unwrap();
    assert!((h - 13.0 / 11.0).abs() < 1e-14);
}

#[test]
fn sparse_solve_matches_dense_on_small_networks() {
    for seed in 0..40 {
        let n = 5 + (seed as usize % 26);
        let net = random_network(seed, n, n);
        let mut fixed = vec![None; n];
        fixed[0] = Some(0.0);
        fixed[n - 1] = Some(1.0);
        if n > 8 {
            fixed[n / 2] = Some(1.0);
        }
        let (sparse, _) = solve_network(&net, &fixed, 1e-12).unwrap();
        let dense = dense_solve(&net, &fixed);
        for v in 0..n {
            assert!(
                (sparse[v] - dense[v]).abs() <= 1e-10,
                "seed {seed} vertex {v}"
            );
        }
    }
}

#[test]
fn fixture_solves_match_dense() {
    for topology in [Topology::Quad, Topology::Annulus] {
        for seed in 0..5 {
            let (cx, spec) = fixtures::random(seed, topology);
            if cx.vertex_count() > 60 {
                continue;
            }
            let dense = dense_solve(cx.network(), &fixed_values(&cx, &spec));
            let g = solve(&cx, &spec);
            for v in 0..cx.vertex_count() {
                assert!((g[v] - dense[v]).abs() <= 1e-10);
            }
        }
    }
}
