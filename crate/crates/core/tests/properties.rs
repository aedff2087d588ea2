mod common;

use common::*;
use harmtile::bvp::{self, green_identity_residual};
use harmtile::complex::{complex_from_document, to_document};
use harmtile::fixtures::{self, Topology};
use harmtile::io::MeshDocument;
use harmtile::morse::{index_formula_check, TiePolicy};
use harmtile::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![
        Just(Topology::Quad),
        Just(Topology::Annulus),
        Just(Topology::Pants)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn green_identity_holds(seed in any::<u64>(), n in 2usize..200, extra in 0usize..300) {
        let net = random_network(seed, n, extra);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut f: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if f.is_empty() {
            f.push(0);
        }
        let scale: f64 = net.edges().iter().map(|e| e.c * ((u[e.a] - u[e.b]) * (v[e.a] - v[e.b])).abs()).sum();
        let r = green_identity_residual(&net, &f, &u, &v).unwrap();
        prop_assert!(r <= 1e-12 * scale.max(1.0), "residual {r}");
    }

    #[test]
    fn maximum_principle(seed in 0u64..10_000, topo in topology()) {
        let (cx, spec) = fixtures::random(seed, topo);
        let g = solve(&cx, &spec);
        let k = spec.k();
        for v in 0..cx.vertex_count() {
            prop_assert!(g[v] >= -1e-12 && g[v] <= k + 1e-12);
            if cx.is_boundary(v) {
                continue;
            }
            let nb = cx.network().neighbors(v);
            prop_assert!(!nb.iter().all(|&(w, _)| g[w] < g[v]), "strict maximum at {v}");
            prop_assert!(!nb.iter().all(|&(w, _)| g[w] > g[v]), "strict minimum at {v}");
        }
    }

    #[test]
    fn index_identity(seed in 0u64..10_000, topo in topology()) {
        let (cx, spec) = fixtures::random(seed, topo);
        let g = solve(&cx, &spec);
        match index_formula_check(&cx, &spec, &g, TiePolicy::Strict) {
            Ok(r) => prop_assert_eq!(r.total_index, r.expected),
            Err(Error::Tie(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn boundary_flux_balances(seed in 0u64..10_000, topo in topology()) {
        let (cx, spec) = fixtures::random(seed, topo);
        let g = solve(&cx, &spec);
        let e = bvp::dirichlet_energy(cx.network(), &g);
        let report = bvp::flux_report(&cx, &spec, &g).unwrap();
        prop_assert!(report.total.abs() <= 1e-10 * e / spec.k());
        let alpha = bvp::alpha_flux(&cx, &spec, &g).unwrap();
        prop_assert!((alpha * spec.k() - e).abs() <= 1e-9 * e);
    }

    #[test]
    fn documents_round_trip(seed in 0u64..10_000, topo in topology()) {
        let (cx, spec) = fixtures::random(seed, topo);
        let text = to_document(&cx, &spec).to_json();
        let (cx2, spec2) = complex_from_document(&MeshDocument::from_json(&text).unwrap()).unwrap();
        prop_assert_eq!(to_document(&cx2, &spec2).to_json(), text);
        prop_assert_eq!(cx2.positions(), cx.positions());
        prop_assert_eq!(spec2.roles(), spec.roles());
    }
}
