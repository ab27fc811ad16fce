//! Nonnegative weight laws for actors and attributes.
//!
//! A [`WeightLaw`] is one of a Pareto power law, a point mass or a finite
//! discrete law. Every quantity downstream (mixed Poisson laws, limit
//! clustering curves, tail asymptotics) is expressed through the exact
//! moments and truncated moments computed here.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightLaw {
    /// `P(Z > t) = (x_min / t)^tail_index` for `t >= x_min`.
    Pareto {
        x_min: f64,
        tail_index: f64,
    },
    Degenerate {
        value: f64,
    },
    /// Atoms `(value, probability)`.
    Finite {
        atoms: Vec<(f64, f64)>,
    },
}

impl WeightLaw {
    pub fn pareto(x_min: f64, tail_index: f64) -> Result<Self> {
        if !(x_min > 0.0 && x_min.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "pareto x_min must be positive, got {x_min}"
            )));
        }
        if !(tail_index > 0.0 && tail_index.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "pareto tail index must be positive, got {tail_index}"
            )));
        }
        Ok(WeightLaw::Pareto { x_min, tail_index })
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "degenerate value must be >= 0, got {value}"
            )));
        }
        Ok(WeightLaw::Degenerate { value })
    }

    pub fn finite(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw(
                "finite law needs at least one atom".into(),
            ));
        }
        for &(v, p) in &atoms {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidLaw(format!(
                    "atom value must be >= 0, got {v}"
                )));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidLaw(format!(
                    "atom probability out of range: {p}"
                )));
            }
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidLaw(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        Ok(WeightLaw::Finite { atoms })
    }

    /// Tail index, `None` for bounded laws (all moments finite).
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            WeightLaw::Pareto { tail_index, .. } => Some(*tail_index),
            _ => None,
        }
    }

    /// The constant `c` in `P(Z > t) ~ c t^{-tail_index}`; exact for Pareto.
    pub fn tail_constant(&self) -> Option<f64> {
        match self {
            WeightLaw::Pareto { x_min, tail_index } => Some(x_min.powf(*tail_index)),
            _ => None,
        }
    }

    pub fn is_pareto(&self) -> bool {
        matches!(self, WeightLaw::Pareto { .. })
    }

    fn check_order(&self, r: u32) -> Result<()> {
        if let WeightLaw::Pareto { tail_index, .. } = self {
            if f64::from(r) >= *tail_index {
                return Err(Error::InfiniteMoment {
                    order: r,
                    tail_index: *tail_index,
                });
            }
        }
        Ok(())
    }

    /// `E Z^r`.
    pub fn moment(&self, r: u32) -> Result<f64> {
        self.check_order(r)?;
        if r == 0 {
            return Ok(1.0);
        }
        Ok(match self {
            WeightLaw::Pareto { x_min, tail_index } => {
                let gap = tail_index - f64::from(r);
                if gap < 0.1 {
                    (tail_index.ln() + f64::from(r) * x_min.ln() - gap.ln()).exp()
                } else {
                    tail_index * x_min.powi(r as i32) / gap
                }
            }
            WeightLaw::Degenerate { value } => value.powi(r as i32),
            WeightLaw::Finite { atoms } => atoms.iter().map(|&(v, p)| p * v.powi(r as i32)).sum(),
        })
    }

    /// `P(Z > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            WeightLaw::Pareto { x_min, tail_index } => {
                if t < *x_min {
                    1.0
                } else {
                    (x_min / t).powf(*tail_index)
                }
            }
            WeightLaw::Degenerate { value } => {
                if *value > t {
                    1.0
                } else {
                    0.0
                }
            }
            WeightLaw::Finite { atoms } => atoms
                .iter()
                .filter(|&&(v, _)| v > t)
                .map(|&(_, p)| p)
                .sum::<f64>()
                .min(1.0),
        }
    }

    /// `E(Z^r 1{Z > t})`.
    pub fn truncated_moment(&self, r: u32, t: f64) -> Result<f64> {
        self.check_order(r)?;
        Ok(match self {
            WeightLaw::Pareto { x_min, tail_index } => {
                if t < *x_min {
                    return self.moment(r);
                }
                let gap = tail_index - f64::from(r);
                let log = tail_index.ln() - gap.ln() + tail_index * x_min.ln() - gap * t.ln();
                log.exp()
            }
            WeightLaw::Degenerate { value } => {
                if *value > t {
                    value.powi(r as i32)
                } else {
                    0.0
                }
            }
            WeightLaw::Finite { atoms } => atoms
                .iter()
                .filter(|&&(v, _)| v > t)
                .map(|&(v, p)| p * v.powi(r as i32))
                .sum(),
        })
    }

    /// The order-`r` size-biased law, `dF_r(z) = z^r dF(z) / E Z^r`.
    pub fn size_biased(&self, r: u32) -> Result<WeightLaw> {
        self.check_order(r)?;
        if r == 0 {
            return Ok(self.clone());
        }
        match self {
            WeightLaw::Pareto { x_min, tail_index } => {
                WeightLaw::pareto(*x_min, tail_index - f64::from(r))
            }
            WeightLaw::Degenerate { value } => {
                if *value == 0.0 {
                    return Err(Error::InvalidLaw(
                        "cannot size-bias a point mass at zero".into(),
                    ));
                }
                Ok(self.clone())
            }
            WeightLaw::Finite { atoms } => {
                let norm = self.moment(r)?;
                if norm <= 0.0 {
                    return Err(Error::InvalidLaw(
                        "cannot size-bias a law concentrated at zero".into(),
                    ));
                }
                let biased: Vec<(f64, f64)> = atoms
                    .iter()
                    .map(|&(v, p)| (v, p * v.powi(r as i32) / norm))
                    .collect();
                let total: f64 = biased.iter().map(|&(_, p)| p).sum();
                Ok(WeightLaw::Finite {
                    atoms: biased.into_iter().map(|(v, p)| (v, p / total)).collect(),
                })
            }
        }
    }

    /// Points where the distribution function is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            WeightLaw::Pareto { x_min, .. } => vec![*x_min],
            WeightLaw::Degenerate { value } => vec![*value],
            WeightLaw::Finite { atoms } => atoms.iter().map(|&(v, _)| v).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Pareto { x_min, tail_index } => {
                // u in (0, 1]
                let u = 1.0 - rng.gen::<f64>();
                x_min * u.powf(-1.0 / tail_index)
            }
            WeightLaw::Degenerate { value } => *value,
            WeightLaw::Finite { atoms } => {
                let u = rng.gen::<f64>();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms.last().map(|&(v, _)| v).unwrap_or(0.0)
            }
        }
    }
}

impl fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightLaw::Pareto { x_min, tail_index } => write!(f, "pareto({x_min}, {tail_index})"),
            WeightLaw::Degenerate { value } => write!(f, "degenerate({value})"),
            WeightLaw::Finite { atoms } => {
                write!(f, "finite([")?;
                for (i, (v, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({v}, {p})")?;
                }
                write!(f, "])")
            }
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidLaw(format!("not a number: '{}'", s.trim())))
}

impl FromStr for WeightLaw {
    type Err = Error;

    /// Grammar: `pareto(x_min, alpha)`, `degenerate(v)`, `finite([(v1, p1), ...])`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::InvalidLaw(format!("expected name(args), got '{s}'")))?;
        if !s.ends_with(')') {
            return Err(Error::InvalidLaw(format!(
                "missing closing parenthesis in '{s}'"
            )));
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let args = &s[open + 1..s.len() - 1];
        match name.as_str() {
            "pareto" => {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::InvalidLaw(format!(
                        "pareto takes 2 arguments, got '{args}'"
                    )));
                }
                WeightLaw::pareto(parse_num(parts[0])?, parse_num(parts[1])?)
            }
            "degenerate" => WeightLaw::degenerate(parse_num(args)?),
            "finite" => {
                let inner = args.trim();
                let inner = inner
                    .strip_prefix('[')
                    .and_then(|x| x.strip_suffix(']'))
                    .ok_or_else(|| {
                        Error::InvalidLaw(format!("finite expects a [..] list, got '{args}'"))
                    })?;
                let mut atoms = Vec::new();
                let mut rest = inner.trim();
                while !rest.is_empty() {
                    let body = rest
                        .strip_prefix('(')
                        .ok_or_else(|| Error::InvalidLaw(format!("expected '(' in '{rest}'")))?;
                    let close = body
                        .find(')')
                        .ok_or_else(|| Error::InvalidLaw(format!("unclosed atom in '{rest}'")))?;
                    let pair: Vec<&str> = body[..close].split(',').collect();
                    if pair.len() != 2 {
                        return Err(Error::InvalidLaw(format!(
                            "atom needs (value, prob): '{}'",
                            &body[..close]
                        )));
                    }
                    atoms.push((parse_num(pair[0])?, parse_num(pair[1])?));
                    rest = body[close + 1..].trim_start();
                    if let Some(r) = rest.strip_prefix(',') {
                        rest = r.trim_start();
                    }
                }
                WeightLaw::finite(atoms)
            }
            other => Err(Error::InvalidLaw(format!("unknown law '{other}'"))),
        }
    }
}
