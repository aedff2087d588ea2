//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use harmtile::bvp;
use harmtile::network::Network;
use harmtile::{BoundarySpec, CellComplex};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixed_values(cx: &CellComplex, spec: &BoundarySpec) -> Vec<Option<f64>> {
    (0..cx.vertex_count())
        .map(|v| spec.dirichlet_value(v))
        .collect()
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Gaussian elimination over the rationals on `Δu = 0` at free vertices.
pub fn exact_solve(net: &Network, fixed: &[Option<f64>]) -> Vec<BigRational> {
    let n = net.vertex_count();
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let slot: Vec<Option<usize>> = {
        let mut s = vec![None; n];
        for (i, &v) in free.iter().enumerate() {
            s[v] = Some(i);
        }
        s
    };
    let m = free.len();
    let mut a = vec![vec![BigRational::zero(); m + 1]; m];
    for (i, &v) in free.iter().enumerate() {
        for &(w, e) in net.neighbors(v) {
            let c = rational(net.edge(e).c);
            a[i][i] += c.clone();
            match slot[w] {
                Some(j) => a[i][j] -= c,
                None => a[i][m] += c * rational(fixed[w].unwrap()),
            }
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !a[r][col].is_zero())
            .expect("nonsingular");
        a.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for x in a[col].iter_mut() {
            *x *= inv.clone();
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=m {
                    let t = a[col][j].clone() * f.clone();
                    a[r][j] -= t;
                }
            }
        }
    }
    (0..n)
        .map(|v| match slot[v] {
            Some(i) => a[i][m].clone(),
            None => rational(fixed[v].unwrap()),
        })
        .collect()
}

pub fn exact_energy(net: &Network, u: &[BigRational]) -> BigRational {
    let mut e = BigRational::zero();
    for edge in net.edges() {
        let d = u[edge.a].clone() - u[edge.b].clone();
        e += rational(edge.c) * d.clone() * d;
    }
    e
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn to_f64(x: &BigRational) -> f64 {
    let (n, d) = (x.numer().clone(), x.denom().clone());
    let scale = BigInt::from(10u64).pow(30);
    let q: BigInt = n * scale.clone() / d;
    q.to_string().parse::<f64>().unwrap() / 1e30
}

pub fn abs_diff(a: &BigRational, b: &BigRational) -> BigRational {
    (a - b).abs()
}

/// Dense LU solve of the same reduced system.
pub fn dense_solve(net: &Network, fixed: &[Option<f64>]) -> Vec<f64> {
    let n = net.vertex_count();
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        slot[v] = i;
    }
    let m = free.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &v) in free.iter().enumerate() {
        for &(w, e) in net.neighbors(v) {
            let c = net.edge(e).c;
            a[(i, i)] += c;
            if fixed[w].is_none() {
                a[(i, slot[w])] -= c;
            } else {
                b[i] += c * fixed[w].unwrap();
            }
        }
    }
    let x = a.lu().solve(&b).expect("nonsingular");
    (0..n)
        .map(|v| fixed[v].unwrap_or_else(|| x[slot[v]]))
        .collect()
}

/// A connected random network: a random spanning tree plus extra edges.
pub fn random_network(seed: u64, n: usize, extra: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(n);
    for v in 1..n {
        let w = rng.gen_range(0..v);
        net.add_edge(v, w, rng.gen_range(0.1..10.0));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && net.edge_between(a, b).is_none() {
            net.add_edge(a, b, rng.gen_range(0.1..10.0));
        }
    }
    net
}

pub fn solve(cx: &CellComplex, spec: &BoundarySpec) -> Vec<f64> {
    bvp::solve_dnbvp(cx, spec).unwrap().values().to_vec()
}
