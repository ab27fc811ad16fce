//! Degree-conditioned clustering of a simple graph: per-vertex triangle
//! counts, per-degree triangle and cherry sums, `c(k)` and the cumulative
//! `C(k)`.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::ProjectedGraph;

pub const CSV_HEADER: &str = "k,n_vertices,tri_sum,cherry_sum,c_k,cum_tri,cum_cherry,C_k";

/// Unordered triangles through each vertex.
///
/// Edges are oriented from lower to higher `(degree, id)`; each triangle is
/// found once, at its lowest vertex, by intersecting sorted out-lists.
pub fn triangle_counts(g: &ProjectedGraph) -> Vec<u64> {
    let n = g.n();
    let rank = |v: usize| (g.degree(v), v);
    let out: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|u| {
            g.adjacency[u]
                .iter()
                .copied()
                .filter(|&v| rank(v as usize) > rank(u))
                .collect()
        })
        .collect();
    let counts: Vec<AtomicU64> = (0..n).map(|_| AtomicU64::new(0)).collect();
    (0..n).into_par_iter().for_each(|u| {
        let nu = &out[u];
        for &v in nu {
            let nv = &out[v as usize];
            let (mut i, mut j) = (0, 0);
            while i < nu.len() && j < nv.len() {
                match nu[i].cmp(&nv[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        counts[u].fetch_add(1, Ordering::Relaxed);
                        counts[v as usize].fetch_add(1, Ordering::Relaxed);
                        counts[nu[i] as usize].fetch_add(1, Ordering::Relaxed);
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    });
    counts.into_iter().map(AtomicU64::into_inner).collect()
}

fn cherries(d: u64) -> u64 {
    d * d.saturating_sub(1) / 2
}

/// Per-degree sums, indexed by degree `k`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusteringSpectrum {
    pub n_vertices: Vec<u64>,
    pub tri_sum: Vec<u64>,
    pub cherry_sum: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub k: usize,
    pub n_vertices: u64,
    pub tri_sum: u64,
    pub cherry_sum: u64,
    pub c_k: Option<f64>,
    pub cum_tri: u64,
    pub cum_cherry: u64,
    pub big_c_k: Option<f64>,
}

impl ClusteringSpectrum {
    pub fn with_len(len: usize) -> Self {
        ClusteringSpectrum {
            n_vertices: vec![0; len],
            tri_sum: vec![0; len],
            cherry_sum: vec![0; len],
        }
    }

    /// Builds from per-vertex degrees and triangle counts.
    pub fn from_counts(degrees: &[usize], triangles: &[u64]) -> Self {
        let len = degrees.iter().max().map_or(0, |&d| d + 1);
        let mut s = Self::with_len(len);
        for (&d, &t) in degrees.iter().zip(triangles) {
            s.n_vertices[d] += 1;
            s.tri_sum[d] += t;
            s.cherry_sum[d] += cherries(d as u64);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.n_vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_vertices.iter().all(|&c| c == 0)
    }

    fn resize(&mut self, len: usize) {
        if len > self.len() {
            self.n_vertices.resize(len, 0);
            self.tri_sum.resize(len, 0);
            self.cherry_sum.resize(len, 0);
        }
    }

    pub fn add(&mut self, other: &ClusteringSpectrum) {
        self.resize(other.len());
        for k in 0..other.len() {
            self.n_vertices[k] += other.n_vertices[k];
            self.tri_sum[k] += other.tri_sum[k];
            self.cherry_sum[k] += other.cherry_sum[k];
        }
    }

    /// `c(k)`; `None` when no cherries sit at degree `k`.
    pub fn c(&self, k: usize) -> Option<f64> {
        let ch = *self.cherry_sum.get(k)?;
        (ch > 0).then(|| self.tri_sum[k] as f64 / ch as f64)
    }

    /// `(Σ_{j>=k} tri_sum, Σ_{j>=k} cherry_sum)`.
    pub fn cumulative(&self, k: usize) -> (u64, u64) {
        let k = k.min(self.len());
        (
            self.tri_sum[k..].iter().sum(),
            self.cherry_sum[k..].iter().sum(),
        )
    }

    /// `C(k)`; `None` when no cherries sit at degree `>= k`.
    pub fn big_c(&self, k: usize) -> Option<f64> {
        let (t, ch) = self.cumulative(k);
        (ch > 0).then(|| t as f64 / ch as f64)
    }

    /// Rows for every degree with at least one cherry.
    pub fn rows(&self) -> Vec<SpectrumRow> {
        let mut rows = Vec::new();
        let (mut cum_tri, mut cum_cherry) = (0u64, 0u64);
        for k in (0..self.len()).rev() {
            cum_tri += self.tri_sum[k];
            cum_cherry += self.cherry_sum[k];
            if self.cherry_sum[k] == 0 {
                continue;
            }
            rows.push(SpectrumRow {
                k,
                n_vertices: self.n_vertices[k],
                tri_sum: self.tri_sum[k],
                cherry_sum: self.cherry_sum[k],
                c_k: self.c(k),
                cum_tri,
                cum_cherry,
                big_c_k: Some(cum_tri as f64 / cum_cherry as f64),
            });
        }
        rows.reverse();
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.k,
                r.n_vertices,
                r.tri_sum,
                r.cherry_sum,
                fmt_opt(r.c_k),
                r.cum_tri,
                r.cum_cherry,
                fmt_opt(r.big_c_k)
            );
        }
        out
    }

    /// Pooled ratios over geometric degree bins `[lo, lo·factor)`, for display.
    pub fn binned(&self, factor: f64) -> Vec<DegreeBin> {
        let mut bins = Vec::new();
        let mut lo = 1usize;
        while lo < self.len() {
            let hi = ((lo as f64 * factor).ceil() as usize)
                .max(lo + 1)
                .min(self.len());
            let tri: u64 = self.tri_sum[lo..hi].iter().sum();
            let ch: u64 = self.cherry_sum[lo..hi].iter().sum();
            if ch > 0 {
                bins.push(DegreeBin {
                    k_lo: lo,
                    k_hi: hi,
                    c: tri as f64 / ch as f64,
                });
            }
            lo = hi;
        }
        bins
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeBin {
    pub k_lo: usize,
    pub k_hi: usize,
    pub c: f64,
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn spectrum(g: &ProjectedGraph) -> ClusteringSpectrum {
    ClusteringSpectrum::from_counts(&g.degrees(), &triangle_counts(g))
}

/// Ratio-of-sums pooling in list order.
pub fn pool(spectra: &[ClusteringSpectrum]) -> ClusteringSpectrum {
    spectra
        .iter()
        .fold(ClusteringSpectrum::default(), |mut acc, s| {
            acc.add(s);
            acc
        })
}

/// Reads `u v` lines with 0-based ids; `#` comments and blank lines are
/// skipped, self-loops and repeated edges ignored. Vertices are `0..=max id`.
pub fn read_edge_list<R: BufRead>(reader: R, path: &Path) -> Result<ProjectedGraph> {
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let mut fields = body.split_whitespace();
        let mut id = || -> Result<u32> {
            let f = fields
                .next()
                .ok_or_else(|| err("expected two vertex ids".into()))?;
            f.parse().map_err(|_| err(format!("bad vertex id '{f}'")))
        };
        let (u, v) = (id()?, id()?);
        if fields.next().is_some() {
            return Err(err("expected two vertex ids".into()));
        }
        n = n.max(u as usize + 1).max(v as usize + 1);
        edges.push((u, v));
    }
    Ok(ProjectedGraph::from_edges(n, &edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete(n: u32) -> ProjectedGraph {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        ProjectedGraph::from_edges(n as usize, &edges)
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> ProjectedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        ProjectedGraph::from_edges(n, &edges)
    }

    fn brute_triangles(g: &ProjectedGraph) -> Vec<u64> {
        let n = g.n();
        let mut t = vec![0; n];
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c) {
                        t[a] += 1;
                        t[b] += 1;
                        t[c] += 1;
                    }
                }
            }
        }
        t
    }

    #[test]
    fn small_graphs() {
        assert_eq!(triangle_counts(&complete(3)), vec![1, 1, 1]);
        let p3 = ProjectedGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(triangle_counts(&p3), vec![0, 0, 0]);
        let k4 = spectrum(&complete(4));
        assert_eq!(k4.c(3), Some(1.0));
        assert_eq!(k4.big_c(2), Some(1.0));
        assert_eq!(k4.tri_sum[3], 12);
        let star = ProjectedGraph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let s = spectrum(&star);
        assert_eq!(s.c(5), Some(0.0));
        assert_eq!(s.c(1), None);
        assert_eq!(s.rows().len(), 1);
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..10 {
            let g = random_graph(25, 0.3, seed);
            let t = triangle_counts(&g);
            assert_eq!(t, brute_triangles(&g));
            let s = spectrum(&g);
            let total: u64 = t.iter().sum::<u64>() / 3;
            assert_eq!(s.tri_sum.iter().sum::<u64>(), 3 * total);
            for k in 0..s.len() {
                assert!(s.tri_sum[k] <= s.cherry_sum[k]);
                assert_eq!(s.cherry_sum[k], s.n_vertices[k] * cherries(k as u64));
            }
        }
    }

    #[test]
    fn pooling() {
        let s = spectrum(&random_graph(30, 0.2, 5));
        assert_eq!(pool(std::slice::from_ref(&s)), s);
        let zero = ClusteringSpectrum::with_len(3);
        let p = pool(&[s.clone(), zero]);
        for k in 0..s.len() {
            assert_eq!(p.c(k), s.c(k));
            assert_eq!(p.big_c(k), s.big_c(k));
        }
        let t = spectrum(&random_graph(40, 0.2, 6));
        let both = pool(&[s.clone(), t.clone()]);
        let k = 4;
        let want =
            (s.tri_sum[k] + t.tri_sum[k]) as f64 / (s.cherry_sum[k] + t.cherry_sum[k]) as f64;
        assert_eq!(both.c(k), Some(want));
    }

    #[test]
    fn csv_layout() {
        let csv = spectrum(&complete(4)).to_csv();
        assert_eq!(csv, format!("{CSV_HEADER}\n3,4,12,12,1,12,12,1\n"));
    }

    #[test]
    fn edge_list_import() {
        let text = "# header\n0 1\n\n1 2 # trailing\n2 0\n3 3\n";
        let g = read_edge_list(text.as_bytes(), Path::new("g.txt")).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 3);
        let bad = "0 1\n1 x\n";
        match read_edge_list(bad.as_bytes(), Path::new("g.txt")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(read_edge_list("0 1 2\n".as_bytes(), Path::new("g.txt")).is_err());
        let empty = read_edge_list("".as_bytes(), Path::new("g.txt")).unwrap();
        assert!(spectrum(&empty).is_empty());
    }

    #[test]
    fn binning_pools_ratios() {
        let s = spectrum(&random_graph(30, 0.4, 2));
        let bins = s.binned(2.0);
        let tri: u64 = s.tri_sum.iter().sum();
        let ch: u64 = s.cherry_sum.iter().sum();
        assert!(!bins.is_empty());
        assert!(bins.windows(2).all(|w| w[0].k_hi <= w[1].k_lo));
        assert!(tri <= ch);
    }
}
