//! Weighted undirected graph used by both the input complex and its refinements.

use std::collections::HashMap;

use crate::complex::VertexId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    pub c: f64,
}

impl Edge {
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

/// A finite network: vertices `0..n`, edges with positive conductance.
#[derive(Debug, Clone, Default)]
pub struct Network {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, usize)>>,
    index: HashMap<(VertexId, VertexId), usize>,
}

pub(crate) fn key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Network {
    pub fn new(vertex_count: usize) -> Self {
        Network {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); vertex_count],
            index: HashMap::new(),
        }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.adjacency.push(Vec::new());
        self.adjacency.len() - 1
    }

    /// Adds an edge and returns its index. Returns `None` for self-loops and duplicates.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId, c: f64) -> Option<usize> {
        if a == b || self.index.contains_key(&key(a, b)) {
            return None;
        }
        let id = self.edges.len();
        self.edges.push(Edge { a, b, c });
        self.adjacency[a].push((b, id));
        self.adjacency[b].push((a, id));
        self.index.insert(key(a, b), id);
        Some(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<usize> {
        self.index.get(&key(a, b)).copied()
    }

    pub fn conductance(&self, a: VertexId, b: VertexId) -> Option<f64> {
        self.edge_between(a, b).map(|e| self.edges[e].c)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Current along `a -> b`: `c(a,b) (u(a) - u(b))`.
    pub fn current(&self, edge: usize, from: VertexId, values: &[f64]) -> f64 {
        let e = &self.edges[edge];
        let to = e.other(from);
        e.c * (values[from] - values[to])
    }
}
