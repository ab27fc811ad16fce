//! Truncated probability mass functions on `{0, 1, 2, ...}`.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probabilities `mass[0..=k_max]` plus `tail_mass`, an upper bound on the
/// probability not represented in `mass`. All of the unrepresented mass lies
/// above the truncation point of at least one ingredient, so
/// `P(X >= k) ∈ [Σ_{s>=k} mass[s], Σ_{s>=k} mass[s] + tail_mass]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub mass: Vec<f64>,
    pub tail_mass: f64,
}

impl Pmf {
    pub fn new(mass: Vec<f64>, tail_mass: f64) -> Self {
        Pmf { mass, tail_mass }
    }

    pub fn point(k: usize) -> Self {
        let mut mass = vec![0.0; k + 1];
        mass[k] = 1.0;
        Pmf {
            mass,
            tail_mass: 0.0,
        }
    }

    /// Closed-form Poisson(`rate`) on `0..=k_max`.
    pub fn poisson(rate: f64, k_max: usize) -> Self {
        if rate == 0.0 {
            let mut p = Pmf::point(0);
            p.mass.resize(k_max + 1, 0.0);
            return p;
        }
        let ln_rate = rate.ln();
        let mass = (0..=k_max)
            .map(|s| {
                let s = s as f64;
                (s * ln_rate - rate - ln_gamma(s + 1.0)).exp()
            })
            .collect();
        let tail_mass = gamma_lr((k_max + 1) as f64, rate);
        Pmf { mass, tail_mass }
    }

    pub fn k_max(&self) -> usize {
        self.mass.len().saturating_sub(1)
    }

    pub fn get(&self, s: usize) -> f64 {
        self.mass.get(s).copied().unwrap_or(0.0)
    }

    pub fn represented(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Checks entrywise nonnegativity and `|Σ mass + tail_mass − 1| <= 1e-9`.
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.mass.iter().position(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "negative or NaN mass at {s}"
            )));
        }
        if !(self.tail_mass >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad tail mass {}",
                self.tail_mass
            )));
        }
        let total = self.represented() + self.tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParameter(format!(
                "pmf total {total} is not 1"
            )));
        }
        Ok(())
    }

    /// `(lower, upper)` bounds on `P(X >= k)`.
    pub fn tail_bounds(&self, k: usize) -> (f64, f64) {
        let lower: f64 = self.mass.iter().skip(k).sum();
        if k == 0 {
            return (lower, 1.0);
        }
        (lower, (lower + self.tail_mass).min(1.0))
    }

    /// Suffix sums `S[k] = Σ_{s>=k} mass[s]`, summed from the top so small
    /// tail probabilities keep their relative precision.
    pub fn suffix_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.mass.len() + 1];
        for s in (0..self.mass.len()).rev() {
            out[s] = out[s + 1] + self.mass[s];
        }
        out
    }

    /// Mean of the represented part; a lower bound on the true mean.
    pub fn partial_mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(s, &p)| s as f64 * p)
            .sum()
    }

    /// Drops entries above `k_max`, moving their mass to `tail_mass`.
    pub fn truncated(&self, k_max: usize) -> Pmf {
        if self.mass.len() <= k_max + 1 {
            return self.clone();
        }
        let dropped: f64 = self.mass[k_max + 1..].iter().sum();
        Pmf {
            mass: self.mass[..=k_max].to_vec(),
            tail_mass: self.tail_mass + dropped,
        }
    }

    /// Total variation distance to an empirical histogram of `total` draws.
    /// Histogram bins past `k_max` and the unrepresented mass are compared as
    /// one overflow cell.
    pub fn total_variation_to_counts(&self, counts: &[u64], total: u64) -> f64 {
        let n = total as f64;
        let mut tv = 0.0;
        let mut emp_over = 0.0;
        for (s, &c) in counts.iter().enumerate() {
            let e = c as f64 / n;
            if s < self.mass.len() {
                tv += (self.mass[s] - e).abs();
            } else {
                emp_over += e;
            }
        }
        for s in counts.len()..self.mass.len() {
            tv += self.mass[s];
        }
        tv += (self.tail_mass - emp_over).abs();
        0.5 * tv
    }

    /// `s,mass` rows followed by a `tail_mass,<value>` record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,mass\n");
        for (s, p) in self.mass.iter().enumerate() {
            let _ = writeln!(out, "{s},{p:e}");
        }
        let _ = writeln!(out, "tail_mass,{:e}", self.tail_mass);
        out
    }

    pub fn from_csv_reader<R: BufRead>(reader: R, path: &Path) -> Result<Pmf> {
        let mut mass = Vec::new();
        let mut tail = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "s,mass") {
                continue;
            }
            let (key, value) = line
                .split_once(',')
                .ok_or_else(|| err("expected two fields".into()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("bad mass '{value}'")))?;
            if key == "tail_mass" {
                tail = Some(value);
                continue;
            }
            let s: usize = key
                .trim()
                .parse()
                .map_err(|_| err(format!("bad index '{key}'")))?;
            if s != mass.len() {
                return Err(err(format!("expected index {}, got {s}", mass.len())));
            }
            mass.push(value);
        }
        let tail_mass = tail.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "missing tail_mass record".into(),
        })?;
        Ok(Pmf { mass, tail_mass })
    }
}
