//! Randomly stopped sums `Σ_{j=1}^{N} τ_j` and truncated convolution.

use crate::pmf::Pmf;

pub const DEFAULT_COUNT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct StoppedSumSpec {
    /// Law of the number of summands.
    pub count_pmf: Pmf,
    /// Law of each summand.
    pub summand_pmf: Pmf,
}

/// Truncated convolution on `0..=k_max`. The unrepresented mass of the
/// result is accounted exactly from the inputs' tails and the mass pushed
/// past `k_max`.
pub fn convolve(p: &Pmf, q: &Pmf, k_max: usize) -> Pmf {
    let out_len = (p.mass.len() + q.mass.len())
        .saturating_sub(1)
        .min(k_max + 1)
        .max(1);
    let mut out = vec![0.0; out_len];
    for (i, &pi) in p.mass.iter().enumerate().take(out_len) {
        if pi == 0.0 {
            continue;
        }
        let n = q.mass.len().min(out_len - i);
        for (o, &qj) in out[i..i + n].iter_mut().zip(&q.mass[..n]) {
            *o += pi * qj;
        }
    }
    let q_suffix = q.suffix_sums();
    let pushed: f64 = p
        .mass
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let first_out = out_len.saturating_sub(i);
            pi * q_suffix.get(first_out).copied().unwrap_or(0.0)
        })
        .sum();
    let q_total = q.represented() + q.tail_mass;
    let tail = p.tail_mass * q_total + p.represented() * q.tail_mass + pushed;
    Pmf::new(out, tail)
}

/// Baseline: `Σ_i P(N = i) τ^{*i}`, iterating convolution powers and
/// stopping once `P(N > i) < tol`; the dropped count mass joins the tail.
pub fn pmf_stopped_sum(spec: &StoppedSumSpec, k_max: usize, tol: f64) -> Pmf {
    let count = &spec.count_pmf;
    let summand = &spec.summand_pmf;
    let count_suffix = count.suffix_sums();
    let mut acc = vec![0.0; k_max + 1];
    let mut tail = count.tail_mass;
    let mut power = Pmf::point(0);
    for (i, &w) in count.mass.iter().enumerate() {
        if w > 0.0 {
            for (a, &m) in acc.iter_mut().zip(&power.mass) {
                *a += w * m;
            }
            tail += w * power.tail_mass;
        }
        let beyond = count_suffix[i + 1];
        if beyond + count.tail_mass < tol {
            tail += beyond;
            break;
        }
        power = convolve(&power, summand, k_max);
        if power.mass.iter().all(|&m| m == 0.0) {
            tail += beyond;
            break;
        }
    }
    Pmf::new(acc, tail)
}

/// Same law as [`pmf_stopped_sum`], computed exactly (no count truncation)
/// by first discarding zero summands: with `q = P(τ > 0)` the sum equals
/// `Σ_{j=1}^{N'} τ'_j`, where `N' | N ~ Binomial(N, q)` and `τ' = τ | τ > 0`.
/// Since `τ' >= 1`, only `N' <= k_max` reaches the represented range, and
/// `τ'^{*j}` lives on `[j, k_max]`, so the cost is about `k_max^3 / 6`.
pub fn pmf_stopped_sum_thinned(spec: &StoppedSumSpec, k_max: usize) -> Pmf {
    let count = &spec.count_pmf;
    let summand = &spec.summand_pmf;
    let zero = summand.get(0);
    let q: f64 = summand.mass.iter().skip(1).sum::<f64>() + summand.tail_mass;
    if q <= 0.0 {
        let mut mass = vec![0.0; k_max + 1];
        mass[0] = count.represented();
        return Pmf::new(mass, count.tail_mass);
    }

    let (thinned, mut tail) = thin_count(count, q, zero, k_max);

    let mut step: Vec<f64> = summand.mass.iter().map(|&m| m / q).collect();
    step[0] = 0.0;
    let step = Pmf::new(step, summand.tail_mass / q);
    let step_suffix = step.suffix_sums();
    let step_total = step.represented() + step.tail_mass;

    let mut acc = vec![0.0; k_max + 1];
    let mut power = vec![0.0; k_max + 1];
    power[0] = 1.0;
    let mut power_tail = 0.0;
    let mut next = vec![0.0; k_max + 1];
    let thinned_suffix = thinned.suffix_sums();
    for j in 0..=k_max {
        let w = thinned.get(j);
        if w > 0.0 {
            for s in j..=k_max {
                acc[s] += w * power[s];
            }
            tail += w * power_tail;
        }
        let remaining = thinned_suffix.get(j + 1).copied().unwrap_or(0.0);
        if remaining == 0.0 {
            break;
        }
        // power ⊛ step, supported on [j + 1, k_max]
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut pushed = 0.0;
        let mut represented = 0.0;
        for s0 in j..=k_max {
            let ps = power[s0];
            if ps == 0.0 {
                continue;
            }
            represented += ps;
            let n = (k_max - s0).min(step.mass.len() - 1);
            for (o, &t) in next[s0 + 1..=s0 + n].iter_mut().zip(&step.mass[1..=n]) {
                *o += ps * t;
            }
            pushed += ps * step_suffix.get(k_max - s0 + 1).copied().unwrap_or(0.0);
        }
        power_tail = power_tail * step_total + represented * step.tail_mass + pushed;
        std::mem::swap(&mut power, &mut next);
        if power.iter().all(|&m| m == 0.0) {
            tail += remaining;
            break;
        }
    }
    Pmf::new(acc, tail)
}

/// Binomial thinning of the count law, restricted to `0..=k_max`; returns
/// the thinned pmf and the count mass it does not represent.
fn thin_count(count: &Pmf, q: f64, zero: f64, k_max: usize) -> (Pmf, f64) {
    let mut out = vec![0.0; k_max + 1];
    let mut dropped = count.tail_mass;
    if zero == 0.0 {
        for (i, &w) in count.mass.iter().enumerate() {
            if i <= k_max {
                out[i] = w;
            } else {
                dropped += w;
            }
        }
        return (Pmf::new(out, 0.0), dropped);
    }
    let n = count.mass.len();
    let mut ln_fact = vec![0.0; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let (ln_q, ln_zero) = (q.ln(), zero.ln());
    for (i, &w) in count.mass.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let mean = i as f64 * q;
        let spread = 40.0 * (mean * (1.0 - q)).sqrt() + 40.0;
        let lo = (mean - spread).max(0.0) as usize;
        let hi = ((mean + spread) as usize).min(i);
        let ln_w = w.ln();
        let mut kept = 0.0;
        for j in lo..=hi.min(k_max) {
            let term = (ln_w + ln_fact[i] - ln_fact[j] - ln_fact[i - j]
                + j as f64 * ln_q
                + (i - j) as f64 * ln_zero)
                .exp();
            out[j] += term;
            kept += term;
        }
        if hi > k_max {
            dropped += (w - kept).max(0.0);
        }
    }
    (Pmf::new(out, 0.0), dropped)
}

/// `(lower, upper)` bounds on `P(X >= k)`.
pub fn tail_from_pmf(p: &Pmf, k: usize) -> (f64, f64) {
    p.tail_bounds(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    fn close(a: &Pmf, b: &Pmf, tol: f64) {
        let n = a.mass.len().max(b.mass.len());
        for s in 0..n {
            assert!(
                (a.get(s) - b.get(s)).abs() <= tol,
                "s={s}: {} vs {}",
                a.get(s),
                b.get(s)
            );
        }
    }

    /// Compound Poisson(rate) of Poisson(mu) summands, by summing over the
    /// count in closed form: Σ_i e^{-rate} rate^i / i! · Poisson(i mu)(s).
    fn compound_poisson_oracle(rate: f64, mu: f64, k_max: usize) -> Vec<f64> {
        let mut out = vec![0.0; k_max + 1];
        for i in 0..400usize {
            let w = (i as f64 * rate.ln() - rate - ln_gamma(i as f64 + 1.0)).exp();
            for (s, o) in out.iter_mut().enumerate() {
                let lam = i as f64 * mu;
                let p = if lam == 0.0 {
                    if s == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (s as f64 * lam.ln() - lam - ln_gamma(s as f64 + 1.0)).exp()
                };
                *o += w * p;
            }
        }
        out
    }

    #[test]
    fn convolution_identities() {
        let q = Pmf::poisson(2.0, 50);
        close(&convolve(&Pmf::point(0), &q, 50), &q, 0.0);
        let five = convolve(&Pmf::point(2), &Pmf::point(3), 10);
        close(&five, &Pmf::point(5), 0.0);
        let sum = convolve(&Pmf::poisson(1.0, 80), &Pmf::poisson(2.0, 80), 80);
        close(&sum, &Pmf::poisson(3.0, 80), 1e-12);
        sum.validate().unwrap();
    }

    #[test]
    fn convolution_tracks_pushed_mass() {
        let c = convolve(&Pmf::point(4), &Pmf::point(5), 6);
        assert_eq!(c.represented(), 0.0);
        assert!((c.tail_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stopped_sum_trivial_counts() {
        let tau = Pmf::poisson(2.0, 60);
        let spec = StoppedSumSpec {
            count_pmf: Pmf::point(0),
            summand_pmf: tau.clone(),
        };
        close(&pmf_stopped_sum(&spec, 60, 1e-10), &Pmf::point(0), 0.0);
        close(&pmf_stopped_sum_thinned(&spec, 60), &Pmf::point(0), 0.0);
        let spec = StoppedSumSpec {
            count_pmf: Pmf::point(1),
            summand_pmf: tau.clone(),
        };
        close(&pmf_stopped_sum(&spec, 60, 1e-10), &tau, 1e-15);
        close(&pmf_stopped_sum_thinned(&spec, 60), &tau, 1e-15);
    }

    #[test]
    fn compound_poisson_matches_oracle() {
        let k = 120;
        let oracle = compound_poisson_oracle(1.5, 2.0, k);
        let spec = StoppedSumSpec {
            count_pmf: Pmf::poisson(1.5, 200),
            summand_pmf: Pmf::poisson(2.0, k),
        };
        let base = pmf_stopped_sum(&spec, k, 1e-16);
        let fast = pmf_stopped_sum_thinned(&spec, k);
        for (s, &want) in oracle.iter().enumerate() {
            assert!((base.mass[s] - want).abs() < 1e-12, "s={s}");
            assert!((fast.mass[s] - want).abs() < 1e-12, "s={s}");
        }
        base.validate().unwrap();
        fast.validate().unwrap();
    }

    #[test]
    fn thinned_matches_baseline_on_heavy_tails() {
        use crate::mixedpoisson::{pmf_mixed_poisson, MixingSpec};
        use crate::weights::WeightLaw;
        let law = WeightLaw::pareto(1.0, 6.0).unwrap();
        let count =
            pmf_mixed_poisson(&MixingSpec::new(law.clone(), 1.4, 2).unwrap(), 300, 1e-12).unwrap();
        let tau = pmf_mixed_poisson(&MixingSpec::new(law, 1.2, 1).unwrap(), 300, 1e-12).unwrap();
        let spec = StoppedSumSpec {
            count_pmf: count,
            summand_pmf: tau,
        };
        let base = pmf_stopped_sum(&spec, 300, 1e-14);
        let fast = pmf_stopped_sum_thinned(&spec, 300);
        close(&base, &fast, 1e-10);
        fast.validate().unwrap();
        let (lo, hi) = tail_from_pmf(&fast, 250);
        assert!(lo > 0.0 && hi >= lo);
    }

    #[test]
    fn tail_from_pmf_examples() {
        let p = Pmf::poisson(2.0, 40);
        let (lo, hi) = tail_from_pmf(&p, 0);
        assert!((lo - p.represented()).abs() < 1e-15 && hi == 1.0);
        assert_eq!(tail_from_pmf(&Pmf::point(5), 6), (0.0, 0.0));
        let (lo, _) = tail_from_pmf(&p, 3);
        assert!((lo - (1.0 - (-2.0f64).exp() * 5.0)).abs() < 1e-12);
        assert!((lo - 0.3233).abs() < 1e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_pmf() -> impl Strategy<Value = Pmf> {
            prop::collection::vec(0.0f64..1.0, 1..12).prop_map(|raw| {
                let total: f64 = raw.iter().sum::<f64>() + 1e-3;
                Pmf::new(raw.iter().map(|x| x / total).collect(), 1e-3 / total)
            })
        }

        proptest! {
            #[test]
            fn commutative_and_associative(a in small_pmf(), b in small_pmf(), c in small_pmf(), k in 3usize..30) {
                let ab = convolve(&a, &b, k);
                let ba = convolve(&b, &a, k);
                for s in 0..=k { prop_assert!((ab.get(s) - ba.get(s)).abs() < 1e-12); }
                prop_assert!((ab.tail_mass - ba.tail_mass).abs() < 1e-12);
                let l = convolve(&ab, &c, k);
                let r = convolve(&a, &convolve(&b, &c, k), k);
                for s in 0..=k { prop_assert!((l.get(s) - r.get(s)).abs() < 1e-12); }
                prop_assert!((l.represented() + l.tail_mass - 1.0).abs() < 1e-12);
            }

            #[test]
            fn tail_lower_bound_nonincreasing(p in small_pmf(), k in 0usize..12) {
                prop_assert!(p.tail_bounds(k + 1).0 <= p.tail_bounds(k).0);
            }

            #[test]
            fn wald_mean_identity(rate in 0.2f64..3.0, mu in 0.2f64..3.0) {
                let k = 150;
                let spec = StoppedSumSpec { count_pmf: Pmf::poisson(rate, 120), summand_pmf: Pmf::poisson(mu, 120) };
                let d = pmf_stopped_sum_thinned(&spec, k);
                prop_assert!((d.partial_mean() - rate * mu).abs() < 1e-9 + k as f64 * d.tail_mass);
            }
        }
    }
}
