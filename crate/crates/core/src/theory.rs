//! Limit clustering curves and their power-law asymptotics.
//!
//! For `k >= 2` the limiting clustering coefficients are
//! `c(k) = 1 / (1 + β^{1/2} b(k) / a(k))` and
//! `C(k) = 1 / (1 + β^{1/2} B(k) / A(k))`, with
//!
//! ```text
//! a(k) = a_3 b_1^3       P(d_*^(1) + Λ_1^(3)              =  k-2)
//! b(k) = a_2^2 b_1^2 b_2 P(d_*^(2) + Λ_1^(2) + Λ_2^(2)    =  k-2)
//! A(k), B(k): the same with ">= k-2"
//! ```
//!
//! where `d_*^(r)` is the stopped sum of `Λ_0^(r)` copies of `τ`. For Pareto
//! weights with tail indices `α` (attributes) and `γ` (actors) every
//! ingredient has a power-law tail; combining the dominant terms gives
//! `B(k)/A(k) ≈ c k^δ` with `δ = clamp(α − γ − 1, −1, 1)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixedpoisson::{lambda_spec, pmf_mixed_poisson, pmf_tau, Role};
use crate::pmf::Pmf;
use crate::stoppedsum::{convolve, pmf_stopped_sum_thinned, StoppedSumSpec};
use crate::weights::WeightLaw;

/// Relative tolerance for detecting `α = γ` and `α = γ + 2`.
pub const TIE_TOL: f64 = 1e-9;
/// Default relative interval width beyond which the pmf route hands over
/// to the asymptotic route.
pub const DEFAULT_CROSSOVER_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of actors.
    pub n: usize,
    /// Number of attributes.
    pub m: usize,
    /// Limit of `m / n`.
    pub beta: f64,
    /// Attribute weight law `P_X`.
    pub x_law: WeightLaw,
    /// Actor weight law `P_Y`.
    pub y_law: WeightLaw,
    a: [Option<f64>; 5],
    b: [Option<f64>; 5],
}

impl ModelParams {
    pub fn new(n: usize, m: usize, beta: f64, x_law: WeightLaw, y_law: WeightLaw) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let a = std::array::from_fn(|r| x_law.moment(r as u32).ok());
        let b = std::array::from_fn(|r| y_law.moment(r as u32).ok());
        Ok(ModelParams {
            n,
            m,
            beta,
            x_law,
            y_law,
            a,
            b,
        })
    }

    /// `a_r = E X^r`, cached for `r <= 4`.
    pub fn a(&self, r: u32) -> Result<f64> {
        match self.a.get(r as usize) {
            Some(Some(v)) => Ok(*v),
            _ => self.x_law.moment(r),
        }
    }

    /// `b_r = E Y^r`, cached for `r <= 4`.
    pub fn b(&self, r: u32) -> Result<f64> {
        match self.b.get(r as usize) {
            Some(Some(v)) => Ok(*v),
            _ => self.y_law.moment(r),
        }
    }

    /// Fourth moments of both laws must be finite for the limit curves.
    pub fn check_limit_theory(&self) -> Result<()> {
        self.a(4)?;
        self.b(4)?;
        Ok(())
    }

    /// Both laws Pareto with tail indices above 5.
    pub fn pareto_indices(&self) -> Result<(f64, f64)> {
        match (&self.x_law, &self.y_law) {
            (
                WeightLaw::Pareto {
                    tail_index: alpha, ..
                },
                WeightLaw::Pareto {
                    tail_index: gamma, ..
                },
            ) => {
                if *alpha <= 5.0 || *gamma <= 5.0 {
                    return Err(Error::InvalidParameter(format!(
                        "tail indices must exceed 5, got alpha={alpha}, gamma={gamma}"
                    )));
                }
                Ok((*alpha, *gamma))
            }
            _ => Err(Error::NotPareto {
                what: "power-law asymptotics",
            }),
        }
    }

    pub fn prefactor_a(&self) -> Result<f64> {
        Ok(self.a(3)? * self.b(1)?.powi(3))
    }

    pub fn prefactor_b(&self) -> Result<f64> {
        Ok(self.a(2)?.powi(2) * self.b(1)?.powi(2) * self.b(2)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Width relative to the midpoint; infinite for an empty interval at 0.
    pub fn relative_width(&self) -> f64 {
        let mid = self.mid();
        if mid > 0.0 {
            self.width() / mid
        } else {
            f64::INFINITY
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Interval {
            lo: self.lo * f,
            hi: self.hi * f,
        }
    }
}

/// The pmfs behind `a, b, A, B`, computed once on `0..=k_max`.
#[derive(Debug, Clone)]
pub struct LimitLaws {
    pub tau: Pmf,
    pub dstar1: Pmf,
    pub dstar2: Pmf,
    pub lambda2: Pmf,
    pub lambda3: Pmf,
    /// `d_*^(1) + Λ_1^(3)`
    pub sum_a: Pmf,
    /// `d_*^(2) + Λ_1^(2) + Λ_2^(2)`
    pub sum_b: Pmf,
    pub prefactor_a: f64,
    pub prefactor_b: f64,
    pub beta: f64,
    sum_a_suffix: Vec<f64>,
    sum_b_suffix: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbTerms {
    pub k: usize,
    pub a: Interval,
    pub b: Interval,
    pub big_a: Interval,
    pub big_b: Interval,
}

impl LimitLaws {
    pub fn new(params: &ModelParams, k_max: usize, tol: f64) -> Result<Self> {
        params.check_limit_theory()?;
        let tau = pmf_tau(params, k_max, tol)?.truncated(k_max);
        let stopped = |r: u32| -> Result<Pmf> {
            let count = pmf_mixed_poisson(&lambda_spec(params, Role::Actor, r)?, k_max, tol)?;
            let spec = StoppedSumSpec {
                count_pmf: count,
                summand_pmf: tau.clone(),
            };
            Ok(pmf_stopped_sum_thinned(&spec, k_max))
        };
        let dstar1 = stopped(1)?;
        let dstar2 = stopped(2)?;
        let lambda = |r: u32| -> Result<Pmf> {
            Ok(
                pmf_mixed_poisson(&lambda_spec(params, Role::Attribute, r)?, k_max, tol)?
                    .truncated(k_max),
            )
        };
        let lambda2 = lambda(2)?;
        let lambda3 = lambda(3)?;
        let sum_a = convolve(&dstar1, &lambda3, k_max);
        let sum_b = convolve(&convolve(&dstar2, &lambda2, k_max), &lambda2, k_max);
        let sum_a_suffix = sum_a.suffix_sums();
        let sum_b_suffix = sum_b.suffix_sums();
        Ok(LimitLaws {
            tau,
            dstar1,
            dstar2,
            lambda2,
            lambda3,
            sum_a,
            sum_b,
            prefactor_a: params.prefactor_a()?,
            prefactor_b: params.prefactor_b()?,
            beta: params.beta,
            sum_a_suffix,
            sum_b_suffix,
        })
    }

    pub fn k_max(&self) -> usize {
        self.sum_a.k_max().min(self.sum_b.k_max())
    }

    fn tail(p: &Pmf, suffix: &[f64], s: usize) -> Interval {
        let lo = suffix.get(s).copied().unwrap_or(0.0);
        Interval {
            lo,
            hi: (lo + p.tail_mass).min(1.0),
        }
    }

    fn point(p: &Pmf, s: usize) -> Interval {
        let lo = p.get(s);
        Interval {
            lo,
            hi: (lo + p.tail_mass).min(1.0),
        }
    }

    /// `a(k), b(k), A(k), B(k)` for `k >= 2`.
    pub fn terms(&self, k: usize) -> Result<AbTerms> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
        }
        let s = k - 2;
        Ok(AbTerms {
            k,
            a: Self::point(&self.sum_a, s).scaled(self.prefactor_a),
            b: Self::point(&self.sum_b, s).scaled(self.prefactor_b),
            big_a: Self::tail(&self.sum_a, &self.sum_a_suffix, s).scaled(self.prefactor_a),
            big_b: Self::tail(&self.sum_b, &self.sum_b_suffix, s).scaled(self.prefactor_b),
        })
    }
}

/// `a(k), b(k), A(k), B(k)` in one call.
pub fn ab_terms(params: &ModelParams, k: usize, k_max: usize, tol: f64) -> Result<AbTerms> {
    LimitLaws::new(params, k_max.max(k), tol)?.terms(k)
}

/// `1 / (1 + β^{1/2} b / a)`.
pub fn predict_c(beta: f64, a: f64, b: f64, k: usize) -> Result<f64> {
    if a > 0.0 {
        Ok(1.0 / (1.0 + beta.sqrt() * b / a))
    } else if b > 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Unreachable(k))
    }
}

/// Interval version of [`predict_c`]: the prediction decreases in `b / a`.
pub fn predict_c_interval(beta: f64, a: Interval, b: Interval, k: usize) -> Result<Interval> {
    let lo = predict_c(beta, a.lo, b.hi, k).or_else(|_| predict_c(beta, a.hi, b.hi, k))?;
    let hi = predict_c(beta, a.hi, b.lo, k).or_else(|_| predict_c(beta, a.hi, b.hi, k))?;
    Ok(Interval {
        lo: lo.min(hi),
        hi: hi.max(lo),
    })
}

/// `δ = clamp(α − γ − 1, −1, 1)`.
pub fn delta_exponent(alpha: f64, gamma: f64) -> f64 {
    (alpha - gamma - 1.0).clamp(-1.0, 1.0)
}

/// Message for parameter sets whose exponent falls below the advertised
/// range `0 <= δ <= 1`; the formula is still applied as written.
pub fn negative_delta_warning(delta: f64) -> Option<String> {
    (delta < 0.0).then(|| {
        format!(
            "delta = {delta} < 0: outside the range 0 <= delta <= 1; formula applied as written"
        )
    })
}

/// `coef · k^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn eval(&self, k: f64) -> f64 {
        self.coef * k.powf(self.exponent)
    }
}

fn pareto_parts(law: &WeightLaw, what: &'static str) -> Result<(f64, f64)> {
    match law {
        WeightLaw::Pareto { tail_index, .. } => {
            Ok((law.tail_constant().unwrap_or(0.0), *tail_index))
        }
        _ => Err(Error::NotPareto { what }),
    }
}

/// Leading term of `P(d_*^(r) >= k)`, `r ∈ {1, 2}`.
pub fn dstar_tail_term(params: &ModelParams, r: u32) -> Result<PowerTerm> {
    let (c_y, gamma) = pareto_parts(&params.y_law, "stopped-sum tail asymptotics")?;
    let (a2, b1) = (params.a(2)?, params.b(1)?);
    match r {
        1 => Ok(PowerTerm {
            coef: c_y * gamma / (gamma - 1.0) * a2.powf(gamma - 1.0) * b1.powf(gamma - 2.0),
            exponent: 1.0 - gamma,
        }),
        2 => Ok(PowerTerm {
            coef: c_y * gamma / (gamma - 2.0) * a2.powf(gamma - 2.0) * b1.powf(gamma - 2.0)
                / params.b(2)?,
            exponent: 2.0 - gamma,
        }),
        _ => Err(Error::InvalidParameter(format!(
            "stopped-sum order must be 1 or 2, got {r}"
        ))),
    }
}

/// Leading term of `P(Λ_1^(r) >= k)`, `r ∈ {2, 3}`.
pub fn lambda_tail_term(params: &ModelParams, r: u32) -> Result<PowerTerm> {
    let (c_x, alpha) = pareto_parts(&params.x_law, "mixed Poisson tail asymptotics")?;
    if !(2..=3).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "bias order must be 2 or 3, got {r}"
        )));
    }
    let rf = f64::from(r);
    Ok(PowerTerm {
        coef: c_x * alpha / (alpha - rf)
            * params.beta.powf((rf - alpha) / 2.0)
            * params.b(1)?.powf(alpha - rf)
            / params.a(r)?,
        exponent: rf - alpha,
    })
}

pub fn asymptotic_tail_dstar(params: &ModelParams, r: u32, k: f64) -> Result<f64> {
    Ok(dstar_tail_term(params, r)?.eval(k))
}

pub fn asymptotic_tail_lambda(params: &ModelParams, r: u32, k: f64) -> Result<f64> {
    Ok(lambda_tail_term(params, r)?.eval(k))
}

fn ties(x: f64, y: f64) -> bool {
    (x - y).abs() <= TIE_TOL * x.abs().max(y.abs()).max(1.0)
}

/// Tail of a sum of independent power-law variables: the terms with the
/// heaviest tail (largest exponent) survive, tied terms add their constants.
pub fn combine_tails(terms: &[PowerTerm]) -> PowerTerm {
    let top = terms
        .iter()
        .map(|t| t.exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    let coef = terms
        .iter()
        .filter(|t| ties(t.exponent, top))
        .map(|t| t.coef)
        .sum();
    PowerTerm {
        coef,
        exponent: top,
    }
}

/// Dominant terms of `Ã(k) = P(d_*^(1) + Λ_1^(3) >= k)` and
/// `B̃(k) = P(d_*^(2) + Λ_1^(2) + Λ_2^(2) >= k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticAB {
    pub a_tilde: PowerTerm,
    pub b_tilde: PowerTerm,
}

impl AsymptoticAB {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.pareto_indices()?;
        let d1 = dstar_tail_term(params, 1)?;
        let d2 = dstar_tail_term(params, 2)?;
        let l2 = lambda_tail_term(params, 2)?;
        let l3 = lambda_tail_term(params, 3)?;
        Ok(AsymptoticAB {
            a_tilde: combine_tails(&[d1, l3]),
            b_tilde: combine_tails(&[d2, l2, l2]),
        })
    }

    pub fn at(&self, k: f64) -> (f64, f64) {
        (self.a_tilde.eval(k), self.b_tilde.eval(k))
    }

    /// Exponent of `B̃/Ã`.
    pub fn delta(&self) -> f64 {
        self.b_tilde.exponent - self.a_tilde.exponent
    }
}

/// `(Ã(k), B̃(k))`.
pub fn asymptotic_ab(params: &ModelParams, k: f64) -> Result<(f64, f64)> {
    Ok(AsymptoticAB::new(params)?.at(k))
}

/// The constant `c` in `B(k)/A(k) ≈ c k^δ`: the prefactor ratio times the
/// ratio of the dominant tail constants. At the ties `α = γ` and
/// `α = γ + 2` the dominant constants are sums of two contributions.
pub fn ratio_constant(params: &ModelParams) -> Result<f64> {
    let asym = AsymptoticAB::new(params)?;
    Ok(params.prefactor_b()? / params.prefactor_a()? * asym.b_tilde.coef / asym.a_tilde.coef)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    Pmf,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryRow {
    pub k: usize,
    /// `None` where the asymptotic route is used (no local asymptotics).
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub big_a: Interval,
    pub big_b: Interval,
    pub c_pred: Option<f64>,
    pub big_c_pred: Interval,
    pub source: CurveSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCurve {
    pub rows: Vec<TheoryRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct CurveOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub pmf_k_max: usize,
    pub tol: f64,
    /// Relative width of the `A` or `B` interval above which rows switch to
    /// the asymptotic route (when the laws are Pareto).
    pub crossover_width: f64,
}

impl TheoryCurve {
    pub fn compute(params: &ModelParams, opts: &CurveOptions) -> Result<Self> {
        let laws = LimitLaws::new(params, opts.pmf_k_max, opts.tol)?;
        Self::from_laws(params, &laws, opts)
    }

    pub fn from_laws(params: &ModelParams, laws: &LimitLaws, opts: &CurveOptions) -> Result<Self> {
        let asym = AsymptoticAB::new(params).ok();
        let mut rows = Vec::new();
        for k in opts.k_min.max(2)..=opts.k_max {
            let t = laws.terms(k)?;
            let reliable = t.big_a.relative_width() <= opts.crossover_width
                && t.big_b.relative_width() <= opts.crossover_width;
            let row = match (&asym, reliable) {
                (Some(asym), false) => {
                    let (at, bt) = asym.at((k - 2).max(1) as f64);
                    let big_a = Interval::point(laws.prefactor_a * at);
                    let big_b = Interval::point(laws.prefactor_b * bt);
                    TheoryRow {
                        k,
                        a: None,
                        b: None,
                        big_a,
                        big_b,
                        c_pred: None,
                        big_c_pred: predict_c_interval(params.beta, big_a, big_b, k)?,
                        source: CurveSource::Asymptotic,
                    }
                }
                _ => {
                    let c_pred = match predict_c(params.beta, t.a.lo, t.b.lo, k) {
                        Ok(c) => Some(c),
                        Err(Error::Unreachable(_)) => None,
                        Err(e) => return Err(e),
                    };
                    TheoryRow {
                        k,
                        a: Some(t.a.lo),
                        b: Some(t.b.lo),
                        big_a: t.big_a,
                        big_b: t.big_b,
                        c_pred,
                        big_c_pred: predict_c_interval(params.beta, t.big_a, t.big_b, k)?,
                        source: CurveSource::Pmf,
                    }
                }
            };
            rows.push(row);
        }
        Ok(TheoryCurve { rows })
    }

    pub fn row(&self, k: usize) -> Option<&TheoryRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// `k, a, b, A_lo, A_hi, B_lo, B_hi, c_pred, C_pred_lo, C_pred_hi`;
    /// local columns are empty on asymptotic rows.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from("k,a,b,A_lo,A_hi,B_lo,B_hi,c_pred,C_pred_lo,C_pred_hi\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e},{},{:e},{:e}\n",
                r.k,
                opt(r.a),
                opt(r.b),
                r.big_a.lo,
                r.big_a.hi,
                r.big_b.lo,
                r.big_b.hi,
                opt(r.c_pred),
                r.big_c_pred.lo,
                r.big_c_pred.hi
            ));
        }
        out
    }
}
