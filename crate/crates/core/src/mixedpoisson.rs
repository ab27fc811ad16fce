//! Mixed Poisson laws `Λ^{(r)}` and the offspring law `τ`.
//!
//! `P(Λ^{(r)} = s) = E[e^{-λ} λ^{s+r}] / (s! E λ^r)` with `λ = scale · W`.
//! For Pareto mixing the expectation is an integral evaluated by adaptive
//! Gauss–Kronrod quadrature in log-space; discrete mixing laws reduce to
//! finite sums. The unrepresented tail `P(Λ^{(r)} > K)` is computed directly
//! through `P(Poisson(λ) > K) = P(G_{K+1} <= λ)`, `G_{K+1} ~ Gamma(K+1, 1)`,
//! which keeps it accurate even when it is far below machine epsilon.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::quad;
use crate::theory::ModelParams;
use crate::weights::WeightLaw;

pub const DEFAULT_K_MAX: usize = 4096;
pub const HARD_K_CAP: usize = 1 << 20;
/// Auto-extension stops once the unrepresented mass is below this.
pub const EXTEND_TARGET: f64 = 1e-8;
const REL_TOL: f64 = 1e-12;
/// Log-integrand drop at which the integration range is cut.
const LOG_CUTOFF: f64 = 60.0;

/// `λ = scale · W`, `W ~ law`, size-biased to order `bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSpec {
    pub law: WeightLaw,
    pub scale: f64,
    pub bias: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// `λ_0 = Y β^{1/2} a_1`
    Actor,
    /// `λ_k = X_k β^{-1/2} b_1`
    Attribute,
}

impl MixingSpec {
    pub fn new(law: WeightLaw, scale: f64, bias: u32) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mixing scale must be positive, got {scale}"
            )));
        }
        law.moment(bias)?;
        Ok(MixingSpec { law, scale, bias })
    }

    /// `E λ^r`.
    pub fn biased_norm(&self) -> Result<f64> {
        Ok(self.scale.powi(self.bias as i32) * self.law.moment(self.bias)?)
    }

    /// `E Λ^{(r)} = E λ^{r+1} / E λ^r`.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.scale * self.law.moment(self.bias + 1)? / self.law.moment(self.bias)?)
    }
}

pub fn lambda_spec(params: &ModelParams, role: Role, r: u32) -> Result<MixingSpec> {
    let root_beta = params.beta.sqrt();
    match role {
        Role::Actor => {
            MixingSpec::new(params.y_law.clone(), root_beta * params.x_law.moment(1)?, r)
        }
        Role::Attribute => {
            MixingSpec::new(params.x_law.clone(), params.y_law.moment(1)? / root_beta, r)
        }
    }
}

fn log_poisson_kernel(u: f64, power: f64, s: usize) -> f64 {
    -u + power * u.ln() - ln_gamma(s as f64 + 1.0)
}

/// One entry `P(Λ^{(r)} = s)` with its quadrature error bound.
fn entry(spec: &MixingSpec, norm: f64, s: usize, tol: f64) -> Result<(f64, f64)> {
    let r = f64::from(spec.bias);
    match &spec.law {
        WeightLaw::Pareto { x_min, tail_index } => {
            let alpha = *tail_index;
            let lo = spec.scale * x_min;
            let ln_const = alpha.ln() + alpha * lo.ln() - norm.ln() - ln_gamma(s as f64 + 1.0);
            // integrand in u = λ: exp(ln_const - u + c ln u), c = s + r - α - 1
            let c = s as f64 + r - alpha - 1.0;
            let log_f = |u: f64| ln_const - u + c * u.ln();
            let peak = c.max(lo);
            let width = c.max(1.0).sqrt();
            let top = log_f(peak);
            let mut hi = peak + 10.0 * width + 10.0;
            while log_f(hi) > top - LOG_CUTOFF {
                hi = peak + 2.0 * (hi - peak);
            }
            let mut points = vec![lo];
            for p in [
                c - 8.0 * width,
                c - 2.0 * width,
                c,
                c + 2.0 * width,
                c + 8.0 * width,
            ] {
                if p > lo && p < hi {
                    points.push(p);
                }
            }
            points.push(hi);
            let est = quad::integrate(|u| log_f(u).exp(), &points, 1e-300, REL_TOL)?;
            if est.error > tol {
                return Err(Error::Quadrature {
                    achieved: est.error,
                    requested: tol,
                });
            }
            Ok((est.value, est.error))
        }
        WeightLaw::Degenerate { value } => {
            Ok((discrete_term(spec.scale * value, s, r) / norm, 0.0))
        }
        WeightLaw::Finite { atoms } => {
            let v = atoms
                .iter()
                .map(|&(w, p)| p * discrete_term(spec.scale * w, s, r))
                .sum::<f64>()
                / norm;
            Ok((v, 0.0))
        }
    }
}

/// `e^{-u} u^{s+r} / s!`
fn discrete_term(u: f64, s: usize, r: f64) -> f64 {
    if u == 0.0 {
        return if s == 0 && r == 0.0 { 1.0 } else { 0.0 };
    }
    log_poisson_kernel(u, s as f64 + r, s).exp()
}

/// Upper bound on `P(Λ^{(r)} > k_max)`.
pub fn mixed_poisson_tail(spec: &MixingSpec, k_max: usize) -> Result<f64> {
    let shape = (k_max + 1) as f64;
    let moment = spec.law.moment(spec.bias)?;
    let ln_norm = ln_gamma(shape);
    // Gamma(K+1, 1) density times the size-biased survival function of λ.
    let f = |g: f64| {
        if g <= 0.0 {
            return 0.0;
        }
        let dens = ((shape - 1.0) * g.ln() - g - ln_norm).exp();
        if dens == 0.0 {
            return 0.0;
        }
        let surv = spec
            .law
            .truncated_moment(spec.bias, g / spec.scale)
            .unwrap_or(0.0)
            / moment;
        dens * surv
    };
    let sd = shape.sqrt();
    let lo = (shape - 40.0 * sd - 40.0).max(0.0);
    let hi = shape + 40.0 * sd + 80.0;
    let mut points = vec![lo, hi];
    for p in [
        shape - 4.0 * sd,
        shape - sd,
        shape,
        shape + sd,
        shape + 4.0 * sd,
    ] {
        points.push(p);
    }
    points.extend(spec.law.breakpoints().iter().map(|b| b * spec.scale));
    points.retain(|&p| p >= lo && p <= hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let est = quad::integrate(f, &points, 1e-300, REL_TOL)?;
    Ok((est.value + est.error).min(1.0))
}

fn entries(
    spec: &MixingSpec,
    norm: f64,
    range: std::ops::RangeInclusive<usize>,
    tol: f64,
) -> Result<Vec<f64>> {
    let pairs: Vec<(f64, f64)> = range
        .into_par_iter()
        .map(|s| entry(spec, norm, s, tol))
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().map(|(v, _)| v).collect())
}

/// Pmf of `Λ^{(r)}` on `0..=K` with `K >= k_max`, doubling `K` (up to
/// 2^20) until the unrepresented mass drops below 1e-8. `tol` bounds the
/// absolute quadrature error of every entry.
pub fn pmf_mixed_poisson(spec: &MixingSpec, k_max: usize, tol: f64) -> Result<Pmf> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let norm = spec.biased_norm()?;
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter(
            "E λ^r vanishes; size-biased law undefined".into(),
        ));
    }
    let mut mass = entries(spec, norm, 0..=k_max, tol)?;
    let mut tail = mixed_poisson_tail(spec, k_max)?;
    let mut k = k_max;
    while tail > EXTEND_TARGET && k < HARD_K_CAP {
        let next = (2 * k).clamp(k + 1, HARD_K_CAP);
        mass.extend(entries(spec, norm, k + 1..=next, tol)?);
        k = next;
        tail = mixed_poisson_tail(spec, k)?;
    }
    Ok(Pmf::new(mass, tail))
}

/// One exact draw from `Λ^{(r)}`: Poisson mixed over the size-biased rate.
pub fn sample_biased<R: Rng + ?Sized>(spec: &MixingSpec, rng: &mut R) -> Result<u64> {
    let biased = spec.law.size_biased(spec.bias)?;
    let rate = spec.scale * biased.sample(rng);
    Ok(poisson_draw(rate, rng))
}

pub(crate) fn poisson_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    match Poisson::new(rate) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// `P(τ = s) = (s+1) P(Λ_1 = s+1) / E Λ_1`.
pub fn pmf_tau(params: &ModelParams, k_max: usize, tol: f64) -> Result<Pmf> {
    let spec = lambda_spec(params, Role::Attribute, 0)?;
    let mean = params.x_law.moment(1)? * params.y_law.moment(1)? / params.beta.sqrt();
    if !(mean > 0.0) {
        return Err(Error::InvalidParameter(
            "E Λ_1 = 0: offspring law undefined".into(),
        ));
    }
    let lambda1 = pmf_mixed_poisson(&spec, k_max + 1, tol)?;
    let mass: Vec<f64> = lambda1
        .mass
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &p)| j as f64 * p / mean)
        .collect();
    // τ has the law of Λ_1^{(1)}, whose tail is computed directly.
    let biased = MixingSpec { bias: 1, ..spec };
    let tail = mixed_poisson_tail(&biased, mass.len() - 1)?;
    Ok(Pmf::new(mass, tail))
}
