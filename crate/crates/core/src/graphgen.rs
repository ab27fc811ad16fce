//! Sampling the bipartite attribute–actor graph and projecting it onto the
//! actors.
//!
//! Attribute `i` (weight `X_i`) links actor `j` (weight `Y_j`) independently
//! with probability `min(1, X_i Y_j / sqrt(n m))`. Random streams are keyed
//! by `(seed, stream id)`: stream 0 draws the attribute weights, stream 1
//! the actor weights and stream `2 + i` the links of attribute `i`, so
//! generation can run in parallel over attributes and still be a pure
//! function of the seed.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::ModelParams;

/// Default cap on clique-pair insertions during projection.
pub const DEFAULT_EDGE_BUDGET: u64 = 500_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// One uniform draw per attribute–actor pair.
    #[default]
    Reference,
    /// Geometric skipping within weight buckets plus thinning.
    Fast,
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "reference" => Ok(Generator::Reference),
            "fast" => Ok(Generator::Fast),
            other => Err(Error::Config(format!(
                "unknown generator '{other}' (reference|fast)"
            ))),
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Generator::Reference => "reference",
            Generator::Fast => "fast",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteSample {
    /// Attribute weights, length `m`.
    pub x: Vec<f64>,
    /// Actor weights, length `n`.
    pub y: Vec<f64>,
    /// Per attribute, the sorted actor indices it links.
    pub links: Vec<Vec<u32>>,
    pub seed: u64,
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn sample_weights(params: &ModelParams, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rx = stream(seed, 0);
    let x = (0..params.m)
        .map(|_| params.x_law.sample(&mut rx))
        .collect();
    let mut ry = stream(seed, 1);
    let y = (0..params.n)
        .map(|_| params.y_law.sample(&mut ry))
        .collect();
    (x, y)
}

fn link_probability(x: f64, y: f64, norm: f64) -> f64 {
    (x * y / norm).min(1.0)
}

pub fn sample_links_reference(x: &[f64], y: &[f64], seed: u64) -> Vec<Vec<u32>> {
    let norm = ((x.len() as f64) * (y.len() as f64)).sqrt();
    x.par_iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut rng = stream(seed, 2 + i as u64);
            let mut out = Vec::new();
            for (j, &yj) in y.iter().enumerate() {
                let u: f64 = rng.gen();
                if u < link_probability(xi, yj, norm) {
                    out.push(j as u32);
                }
            }
            out
        })
        .collect()
}

/// Actors with positive weight, by decreasing weight, cut into buckets whose
/// weights lie within a factor two of the bucket's largest weight.
struct Buckets {
    order: Vec<u32>,
    /// `(start, end, max weight)` ranges into `order`.
    ranges: Vec<(usize, usize, f64)>,
}

impl Buckets {
    fn new(y: &[f64]) -> Self {
        let mut order: Vec<u32> = (0..y.len() as u32)
            .filter(|&j| y[j as usize] > 0.0)
            .collect();
        order.sort_by(|&a, &b| y[b as usize].total_cmp(&y[a as usize]).then(a.cmp(&b)));
        let mut ranges = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let top = y[order[start] as usize];
            let mut end = start + 1;
            while end < order.len() && y[order[end] as usize] > 0.5 * top {
                end += 1;
            }
            ranges.push((start, end, top));
            start = end;
        }
        Buckets { order, ranges }
    }
}

pub fn sample_links_fast(x: &[f64], y: &[f64], seed: u64) -> Vec<Vec<u32>> {
    let norm = ((x.len() as f64) * (y.len() as f64)).sqrt();
    let buckets = Buckets::new(y);
    x.par_iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut out = Vec::new();
            if xi <= 0.0 {
                return out;
            }
            let mut rng = stream(seed, 2 + i as u64);
            for &(start, end, top) in &buckets.ranges {
                let p_max = link_probability(xi, top, norm);
                let len = end - start;
                let ln_miss = (-p_max).ln_1p();
                let mut pos = 0usize;
                loop {
                    if p_max < 1.0 {
                        // failures before the next candidate: Geometric(p_max)
                        let u: f64 = 1.0 - rng.gen::<f64>();
                        let skip = (u.ln() / ln_miss).floor();
                        if skip >= (len - pos) as f64 {
                            break;
                        }
                        pos += skip as usize;
                    }
                    if pos >= len {
                        break;
                    }
                    let j = buckets.order[start + pos];
                    let p = link_probability(xi, y[j as usize], norm);
                    if p >= p_max || rng.gen::<f64>() * p_max < p {
                        out.push(j);
                    }
                    pos += 1;
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

pub fn sample_bipartite(params: &ModelParams, seed: u64, generator: Generator) -> BipartiteSample {
    let (x, y) = sample_weights(params, seed);
    let links = match generator {
        Generator::Reference => sample_links_reference(&x, &y, seed),
        Generator::Fast => sample_links_fast(&x, &y, seed),
    };
    BipartiteSample { x, y, links, seed }
}

/// Simple undirected graph as sorted, deduplicated neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProjectedGraph {
    pub adjacency: Vec<Vec<u32>>,
}

impl ProjectedGraph {
    /// Builds from an edge list over `0..n`; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                adjacency[u as usize].push(v);
                adjacency[v as usize].push(u);
            }
        }
        adjacency.par_iter_mut().for_each(|a| {
            a.sort_unstable();
            a.dedup();
        });
        ProjectedGraph { adjacency }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&(v as u32)).is_ok()
    }

    /// Symmetric, loop-free, sorted and deduplicated.
    pub fn validate(&self) -> Result<()> {
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "neighbors of {u} not strictly sorted"
                )));
            }
            for &v in nbrs {
                if v as usize == u || v as usize >= self.n() || !self.has_edge(v as usize, u) {
                    return Err(Error::InvalidParameter(format!("bad edge {u}-{v}")));
                }
            }
        }
        Ok(())
    }

    /// `u v` per line, `u < v`, 0-based ids.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            for &v in nbrs.iter().filter(|&&v| v as usize > u) {
                writeln!(w, "{u} {v}")?;
            }
        }
        Ok(())
    }
}

/// Actors sharing an attribute become adjacent. Fails if the clique pairs to
/// insert exceed `edge_budget`.
pub fn project(sample: &BipartiteSample, edge_budget: u64) -> Result<ProjectedGraph> {
    let needed: u64 = sample
        .links
        .iter()
        .map(|l| {
            let len = l.len() as u64;
            len * len.saturating_sub(1) / 2
        })
        .sum();
    if needed > edge_budget {
        return Err(Error::EdgeBudget {
            budget: edge_budget,
        });
    }
    let n = sample.y.len();
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for clique in &sample.links {
        for (a, &u) in clique.iter().enumerate() {
            for &v in &clique[a + 1..] {
                adjacency[u as usize].push(v);
                adjacency[v as usize].push(u);
            }
        }
    }
    adjacency.par_iter_mut().for_each(|a| {
        a.sort_unstable();
        a.dedup();
    });
    Ok(ProjectedGraph { adjacency })
}
