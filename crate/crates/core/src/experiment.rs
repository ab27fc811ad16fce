//! Configured Monte Carlo runs: replicate graphs, pooled spectra, theory
//! curves and the comparison report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graphgen::{
    self, project, sample_bipartite, Generator, ProjectedGraph, DEFAULT_EDGE_BUDGET,
};
use crate::spectrum::{fmt_opt, pool, spectrum, ClusteringSpectrum};
use crate::theory::{
    delta_exponent, negative_delta_warning, CurveOptions, CurveSource, Interval, ModelParams,
    TheoryCurve, DEFAULT_CROSSOVER_WIDTH,
};
use crate::weights::WeightLaw;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_CSV_HEADER: &str =
    "k,n_vertices,tri_sum,cherry_sum,c_hat,c_hat_se,C_hat,C_hat_se,c_pred,C_pred_lo,C_pred_hi,c_gap,C_gap,source";

/// Pooled cherries a degree needs to enter the default fit window.
pub const MIN_FIT_CHERRIES: u64 = 30;

pub const CALIBRATION_NOTE: &str =
    "The limit theorem gives no convergence rate: the graph size, replicate count \
and gap tolerances used to judge agreement are calibration choices, not derived quantities.";

/// Keys accepted in config files, in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "n",
    "m",
    "beta",
    "x_law",
    "y_law",
    "replicates",
    "seed",
    "k_min",
    "k_max",
    "pmf_k_max",
    "tol",
    "crossover_width",
    "generator",
    "edge_budget",
    "fit_k_lo",
    "fit_k_hi",
    "save_replicates",
    "output_dir",
];

/// Keys left out of the config hash: they choose where results go, not what
/// they are.
const UNHASHED_KEYS: &[&str] = &["output_dir"];

/// Raw `key = value` settings. Later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(pub BTreeMap<String, String>);

impl ConfigMap {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut map = ConfigMap::default();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            map.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value for {key}: '{v}'")))
            })
            .transpose()
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub replicates: usize,
    pub master_seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub pmf_k_max: usize,
    pub tol: f64,
    pub crossover_width: f64,
    pub generator: Generator,
    pub edge_budget: u64,
    /// Explicit fit window; the default is chosen from the data.
    pub fit_window: Option<(f64, f64)>,
    pub save_replicates: bool,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let n: usize = map.require("n")?;
        let m: usize = map.require("m")?;
        let beta = match map.get::<f64>("beta")? {
            Some(b) => b,
            None if n > 0 => m as f64 / n as f64,
            None => return Err(Error::Config("beta needed when n = 0".into())),
        };
        let x_law: WeightLaw = map.require("x_law")?;
        let y_law: WeightLaw = map.require("y_law")?;
        let fit_window = match (map.get::<f64>("fit_k_lo")?, map.get::<f64>("fit_k_hi")?) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => return Err(Error::Config("fit_k_lo and fit_k_hi go together".into())),
        };
        let config = ExperimentConfig {
            params: ModelParams::new(n, m, beta, x_law, y_law)?,
            replicates: map.get("replicates")?.unwrap_or(1),
            master_seed: map.get("seed")?.unwrap_or(0),
            k_min: map.get("k_min")?.unwrap_or(2),
            k_max: map.get("k_max")?.unwrap_or(20),
            pmf_k_max: map.get("pmf_k_max")?.unwrap_or(1024),
            tol: map.get("tol")?.unwrap_or(1e-10),
            crossover_width: map
                .get("crossover_width")?
                .unwrap_or(DEFAULT_CROSSOVER_WIDTH),
            generator: map.get("generator")?.unwrap_or_default(),
            edge_budget: map.get("edge_budget")?.unwrap_or(DEFAULT_EDGE_BUDGET),
            fit_window,
            save_replicates: map.get("save_replicates")?.unwrap_or(false),
            output_dir: map.get::<String>("output_dir")?.map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.k_min < 2 || self.k_max < self.k_min {
            return Err(Error::Config(format!(
                "need 2 <= k_min <= k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.pmf_k_max < 2 {
            return Err(Error::Config("pmf_k_max must be >= 2".into()));
        }
        if let Some((lo, hi)) = self.fit_window {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Config(format!("bad fit window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Every key with its effective value.
    pub fn to_map(&self) -> ConfigMap {
        let p = &self.params;
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("n", p.n.to_string());
        put("m", p.m.to_string());
        put("beta", p.beta.to_string());
        put("x_law", p.x_law.to_string());
        put("y_law", p.y_law.to_string());
        put("replicates", self.replicates.to_string());
        put("seed", self.master_seed.to_string());
        put("k_min", self.k_min.to_string());
        put("k_max", self.k_max.to_string());
        put("pmf_k_max", self.pmf_k_max.to_string());
        put("tol", self.tol.to_string());
        put("crossover_width", self.crossover_width.to_string());
        put("generator", self.generator.to_string());
        put("edge_budget", self.edge_budget.to_string());
        if let Some((lo, hi)) = self.fit_window {
            put("fit_k_lo", lo.to_string());
            put("fit_k_hi", hi.to_string());
        }
        put("save_replicates", self.save_replicates.to_string());
        if let Some(dir) = &self.output_dir {
            put("output_dir", dir.display().to_string());
        }
        ConfigMap(map)
    }

    /// `key = value` lines in canonical key order.
    pub fn canonical_text(&self, include_unhashed: bool) -> String {
        let map = self.to_map();
        let mut out = String::new();
        for key in CONFIG_KEYS {
            if !include_unhashed && UNHASHED_KEYS.contains(key) {
                continue;
            }
            if let Some(v) = map.0.get(*key) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }

    /// SHA-256 of the canonical text, output location excluded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text(false).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            k_min: self.k_min,
            k_max: self.k_max,
            pmf_k_max: self.pmf_k_max,
            tol: self.tol,
            crossover_width: self.crossover_width,
        }
    }
}

/// Seed of replicate `index`: a pure function of `(master_seed, index)`.
pub fn replicate_seed(master_seed: u64, index: usize) -> u64 {
    graphgen::stream(master_seed, index as u64).next_u64()
}

pub fn sample_graph(config: &ExperimentConfig, index: usize) -> Result<ProjectedGraph> {
    let seed = replicate_seed(config.master_seed, index);
    let b = sample_bipartite(&config.params, seed, config.generator);
    project(&b, config.edge_budget)
}

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Per replicate, `None` if it hit the edge budget.
    pub spectra: Vec<Option<ClusteringSpectrum>>,
    pub pooled: ClusteringSpectrum,
}

impl Simulation {
    pub fn succeeded(&self) -> Vec<&ClusteringSpectrum> {
        self.spectra.iter().flatten().collect()
    }

    pub fn failed(&self) -> usize {
        self.spectra.iter().filter(|s| s.is_none()).count()
    }
}

pub fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    let spectra: Vec<Option<ClusteringSpectrum>> = (0..config.replicates)
        .into_par_iter()
        .map(|i| match sample_graph(config, i) {
            Ok(g) => Ok(Some(spectrum(&g))),
            Err(Error::EdgeBudget { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let ok: Vec<ClusteringSpectrum> = spectra.iter().flatten().cloned().collect();
    if ok.is_empty() {
        return Err(Error::AllReplicatesFailed(config.replicates));
    }
    Ok(Simulation {
        pooled: pool(&ok),
        spectra,
    })
}

/// Pooled ratio `Σ t_i / Σ h_i` with its replicate-level standard error.
/// `parts` holds `(numerator, denominator)` per replicate.
pub fn ratio_estimate(parts: &[(u64, u64)]) -> Option<(f64, Option<f64>)> {
    let t: f64 = parts.iter().map(|p| p.0 as f64).sum();
    let h: f64 = parts.iter().map(|p| p.1 as f64).sum();
    if h == 0.0 {
        return None;
    }
    let ratio = t / h;
    let r = parts.len() as f64;
    if parts.len() < 2 {
        return Some((ratio, None));
    }
    let h_bar = h / r;
    let ss: f64 = parts
        .iter()
        .map(|&(ti, hi)| (ti as f64 - ratio * hi as f64).powi(2))
        .sum();
    Some((ratio, Some((ss / (r * (r - 1.0))).sqrt() / h_bar)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares of `ln value` on `ln k` over `k ∈ [lo, hi]`.
pub fn fit_delta(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerFit> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(k, _)| k >= window.0 && k <= window.1)
        .collect();
    if inside.len() < 3 {
        return Err(Error::Fit(format!(
            "{} points in window [{}, {}], need 3",
            inside.len(),
            window.0,
            window.1
        )));
    }
    if let Some(&(k, v)) = inside
        .iter()
        .find(|&&(k, v)| !(v > 0.0 && v.is_finite()) || !(k > 0.0))
    {
        return Err(Error::Fit(format!(
            "nonpositive or infinite point ({k}, {v}) in window"
        )));
    }
    let logs: Vec<(f64, f64)> = inside.iter().map(|&(k, v)| (k.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all k in the window coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerFit {
        slope,
        intercept,
        r2,
        points: logs.len(),
    })
}

/// Upper half of the degrees carrying at least [`MIN_FIT_CHERRIES`] pooled
/// cherries.
pub fn default_fit_window(pooled: &ClusteringSpectrum) -> Option<(f64, f64)> {
    let k_hi = (0..pooled.len())
        .rev()
        .find(|&k| pooled.cherry_sum[k] >= MIN_FIT_CHERRIES)?;
    Some(((k_hi as f64 / 2.0).ceil().max(2.0), k_hi as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub k: usize,
    pub n_vertices: u64,
    pub tri_sum: u64,
    pub cherry_sum: u64,
    pub c_hat: Option<f64>,
    pub c_hat_se: Option<f64>,
    pub big_c_hat: Option<f64>,
    pub big_c_hat_se: Option<f64>,
    pub c_pred: Option<f64>,
    pub big_c_pred: Interval,
    pub c_gap: Option<f64>,
    pub big_c_gap: Option<f64>,
    pub source: CurveSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub theory: Option<f64>,
    /// Slope of `ln((1/Ĉ(k) − 1)/√β)` against `ln k`, the empirical
    /// counterpart of `B(k)/A(k)`.
    pub estimate: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub fit: Option<PowerFit>,
    pub fit_error: Option<String>,
    /// Slope of the predicted `B(k)/A(k)` over the same window, where the
    /// theory curve covers at least three of its degrees.
    pub theory_window_slope: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    pub replicates_requested: usize,
    pub replicates_succeeded: usize,
    pub replicates_failed: usize,
    pub max_c_gap: Option<f64>,
    pub max_big_c_gap: Option<f64>,
    pub delta: DeltaSummary,
    pub calibration_note: String,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub simulate_seconds: f64,
    pub theory_seconds: f64,
}

fn max_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten()
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

pub fn compare(
    config: &ExperimentConfig,
    sim: &Simulation,
    curve: &TheoryCurve,
) -> ComparisonReport {
    let ok = sim.succeeded();
    let mut rows = Vec::new();
    for t in &curve.rows {
        let k = t.k;
        let at = |s: &ClusteringSpectrum| {
            (
                s.tri_sum.get(k).copied().unwrap_or(0),
                s.cherry_sum.get(k).copied().unwrap_or(0),
            )
        };
        let local: Vec<(u64, u64)> = ok.iter().map(|s| at(s)).collect();
        let cum: Vec<(u64, u64)> = ok.iter().map(|s| s.cumulative(k)).collect();
        let c = ratio_estimate(&local);
        let big_c = ratio_estimate(&cum);
        let c_hat = c.map(|x| x.0);
        let big_c_hat = big_c.map(|x| x.0);
        rows.push(ReportRow {
            k,
            n_vertices: sim.pooled.n_vertices.get(k).copied().unwrap_or(0),
            tri_sum: sim.pooled.tri_sum.get(k).copied().unwrap_or(0),
            cherry_sum: sim.pooled.cherry_sum.get(k).copied().unwrap_or(0),
            c_hat,
            c_hat_se: c.and_then(|x| x.1),
            big_c_hat,
            big_c_hat_se: big_c.and_then(|x| x.1),
            c_pred: t.c_pred,
            big_c_pred: t.big_c_pred,
            c_gap: c_hat.zip(t.c_pred).map(|(e, p)| (p - e).abs()),
            big_c_gap: big_c_hat.map(|e| (t.big_c_pred.mid() - e).abs()),
            source: t.source,
        });
    }

    let window = config
        .fit_window
        .or_else(|| default_fit_window(&sim.pooled));
    let points: Vec<(f64, f64)> = (0..sim.pooled.len())
        .filter(|&k| k >= 2 && sim.pooled.cherry_sum[k] >= MIN_FIT_CHERRIES)
        .filter_map(|k| {
            let c = sim.pooled.big_c(k)?;
            Some((k as f64, (1.0 / c - 1.0) / config.params.beta.sqrt()))
        })
        .collect();
    let fit = match window {
        Some(w) => fit_delta(&points, w),
        None => Err(Error::Fit("no degree has enough pooled cherries".into())),
    };
    let theory = config
        .params
        .pareto_indices()
        .ok()
        .map(|(a, g)| delta_exponent(a, g));
    let delta = DeltaSummary {
        theory,
        estimate: fit.as_ref().ok().map(|f| f.slope),
        window,
        fit: fit.as_ref().ok().copied(),
        fit_error: fit.err().map(|e| e.to_string()),
        theory_window_slope: window.and_then(|w| {
            let ratios: Vec<(f64, f64)> = curve
                .rows
                .iter()
                .map(|r| (r.k as f64, r.big_b.mid() / r.big_a.mid()))
                .collect();
            fit_delta(&ratios, w).ok().map(|f| f.slope)
        }),
        warning: theory.and_then(negative_delta_warning),
    };

    ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        config: config
            .to_map()
            .0
            .into_iter()
            .filter(|(k, _)| !UNHASHED_KEYS.contains(&k.as_str()))
            .collect(),
        replicates_requested: config.replicates,
        replicates_succeeded: ok.len(),
        replicates_failed: sim.failed(),
        max_c_gap: max_opt(rows.iter().map(|r| r.c_gap)),
        max_big_c_gap: max_opt(rows.iter().map(|r| r.big_c_gap)),
        delta,
        calibration_note: CALIBRATION_NOTE.to_string(),
        rows,
    }
}

/// Simulation, theory and comparison.
pub fn run(config: &ExperimentConfig) -> Result<(ComparisonReport, Simulation, Timing)> {
    config.validate()?;
    let start = Instant::now();
    let sim = simulate(config)?;
    let simulate_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let curve = TheoryCurve::compute(&config.params, &config.curve_options())?;
    let theory_seconds = start.elapsed().as_secs_f64();
    Ok((
        compare(config, &sim, &curve),
        sim,
        Timing {
            simulate_seconds,
            theory_seconds,
        },
    ))
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                r.n_vertices,
                r.tri_sum,
                r.cherry_sum,
                fmt_opt(r.c_hat),
                fmt_opt(r.c_hat_se),
                fmt_opt(r.big_c_hat),
                fmt_opt(r.big_c_hat_se),
                fmt_opt(r.c_pred),
                r.big_c_pred.lo,
                r.big_c_pred.hi,
                fmt_opt(r.c_gap),
                fmt_opt(r.big_c_gap),
                match r.source {
                    CurveSource::Pmf => "pmf",
                    CurveSource::Asymptotic => "asymptotic",
                }
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes `report.csv`, `report.json`, `timing.json` and, when asked,
    /// `replicates/rep_NNNN.csv`.
    pub fn write(
        &self,
        dir: &Path,
        sim: &Simulation,
        timing: &Timing,
        save_replicates: bool,
    ) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.to_csv())?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        fs::write(
            dir.join("timing.json"),
            serde_json::to_string_pretty(timing)? + "\n",
        )?;
        if save_replicates {
            let rep_dir = dir.join("replicates");
            fs::create_dir_all(&rep_dir)?;
            for (i, s) in sim.spectra.iter().enumerate() {
                if let Some(s) = s {
                    fs::write(rep_dir.join(format!("rep_{i:04}.csv")), s.to_csv())?;
                }
            }
        }
        Ok(())
    }
}

/// Reads `(k, value)` pairs from a CSV with a header naming both columns.
/// Rows with an empty value are skipped.
pub fn read_points(text: &str, path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        names
            .iter()
            .position(|&h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("no column '{name}'"),
            })
    };
    let (ki, vi) = (find("k")?, find(column)?);
    let mut points = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let (Some(k), Some(v)) = (fields.get(ki), fields.get(vi)) else {
            return Err(err("missing field".into()));
        };
        if v.is_empty() {
            continue;
        }
        let k: f64 = k.parse().map_err(|_| err(format!("bad k '{k}'")))?;
        let v: f64 = v.parse().map_err(|_| err(format!("bad value '{v}'")))?;
        points.push((k, v));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke_config() -> ExperimentConfig {
        let text = "n = 50\nm = 50\nx_law = degenerate(1)\ny_law = degenerate(1)\nk_max = 6\npmf_k_max = 64\n";
        ExperimentConfig::from_map(&ConfigMap::parse(text, Path::new("c.txt")).unwrap()).unwrap()
    }

    #[test]
    fn config_parsing() {
        let text = "# comment\nn = 10\nm = 20\nx_law = pareto(1, 7)\ny_law = finite([(1, 0.5), (2, 0.5)])\n\nseed=5\n";
        let c = ExperimentConfig::from_map(&ConfigMap::parse(text, Path::new("c.txt")).unwrap())
            .unwrap();
        assert_eq!(c.params.beta, 2.0);
        assert_eq!(c.master_seed, 5);
        assert_eq!(c.generator, Generator::Reference);
        let back = ConfigMap::parse(&c.canonical_text(true), Path::new("c.txt")).unwrap();
        assert_eq!(ExperimentConfig::from_map(&back).unwrap(), c);

        match ConfigMap::parse("n = 1\nbogus = 2\n", Path::new("c.txt")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let mut map = ConfigMap::parse(text, Path::new("c.txt")).unwrap();
        map.set("k_min", "1").unwrap();
        assert!(ExperimentConfig::from_map(&map).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut c = smoke_config();
        let h = c.hash();
        c.output_dir = Some(PathBuf::from("/tmp/elsewhere"));
        assert_eq!(c.hash(), h);
        c.master_seed = 1;
        assert_ne!(c.hash(), h);
        assert_eq!(h.len(), 64);
    }

    #[test]
    fn smoke_run_is_deterministic() {
        let mut c = smoke_config();
        c.replicates = 3;
        let (r1, _, _) = run(&c).unwrap();
        let (r2, _, _) = run(&c).unwrap();
        assert_eq!(r1.to_json().unwrap(), r2.to_json().unwrap());
        assert_eq!(r1.to_csv(), r2.to_csv());
        assert_eq!(r1.replicates_succeeded, 3);
        assert_eq!(r1.rows.len(), 5);
    }

    #[test]
    fn budget_failures_are_counted() {
        let mut c = smoke_config();
        c.params = ModelParams::new(
            50,
            50,
            1.0,
            WeightLaw::degenerate(50.0).unwrap(),
            WeightLaw::degenerate(1.0).unwrap(),
        )
        .unwrap();
        c.edge_budget = 10;
        c.replicates = 2;
        assert!(matches!(simulate(&c), Err(Error::AllReplicatesFailed(2))));
    }

    #[test]
    fn replicate_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| replicate_seed(7, i)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(replicate_seed(7, 3), s[3]);
    }

    #[test]
    fn ratio_estimator() {
        assert_eq!(ratio_estimate(&[(0, 0)]), None);
        assert_eq!(ratio_estimate(&[(1, 4)]), Some((0.25, None)));
        let (r, se) = ratio_estimate(&[(1, 4), (3, 4)]).unwrap();
        assert_eq!(r, 0.5);
        // residuals ±1, h̄ = 4: sqrt(2 / 2) / 4
        assert!((se.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fits() {
        let pts: Vec<(f64, f64)> = (1..50)
            .map(|k| (k as f64, 7.0 * (k as f64).powf(0.4)))
            .collect();
        let f = fit_delta(&pts, (1.0, 49.0)).unwrap();
        assert!((f.slope - 0.4).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (1..10).map(|k| (k as f64, 3.0)).collect();
        assert_eq!(fit_delta(&flat, (1.0, 9.0)).unwrap().slope, 0.0);
        assert!(fit_delta(&pts, (1.0, 2.0)).is_err());
        let mut bad = pts.clone();
        bad[3].1 = 0.0;
        assert!(matches!(fit_delta(&bad, (1.0, 49.0)), Err(Error::Fit(_))));
        bad[3].1 = f64::INFINITY;
        assert!(matches!(fit_delta(&bad, (1.0, 49.0)), Err(Error::Fit(_))));
    }

    #[test]
    fn points_from_csv() {
        let text = "k,C_hat,x\n2,0.5,1\n3,,1\n4,0.25,1\n";
        let pts = read_points(text, Path::new("r.csv"), "C_hat").unwrap();
        assert_eq!(pts, vec![(2.0, 0.5), (4.0, 0.25)]);
        assert!(read_points(text, Path::new("r.csv"), "nope").is_err());
    }
}
