use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::quotient::{lower_bound_from_volumes, pair_volumes, InvariantMeasure, QuotientChart};
use crate::spectral::{summarize, LogBase, SpectralSummary};
use crate::system::LinearSystem;

use super::cover::{r_inv_estimate, Budgets, CoverMethod, SpanningResult};
use super::pair::{certify_admissible, AdmissiblePair};

/// Least-squares growth rate of `log count` against `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t interval for the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    /// `max (1/n) log count` over the window's `n ≥ 1`.
    pub limsup_surrogate: f64,
    pub points: usize,
    pub base: LogBase,
}

impl GrowthFit {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_growth(samples: &[(usize, f64)], base: LogBase) -> Result<GrowthFit> {
    if samples.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: samples.len() });
    }
    if samples.iter().any(|&(_, c)| !(c > 0.0)) {
        return Err(Error::Config("growth fit needs positive counts".into()));
    }
    let m = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, c)| base.log(c)).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { needed: 2, got: 1 });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let df = m - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(format!("t distribution: {e}")))?
        .inverse_cdf(0.975);
    let limsup_surrogate = samples
        .iter()
        .filter(|&&(n, _)| n >= 1)
        .map(|&(n, c)| base.log(c) / n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthFit {
        slope,
        intercept,
        ci_low: slope - t * se,
        ci_high: slope + t * se,
        limsup_surrogate,
        points: samples.len(),
        base,
    })
}

/// Fit over the results whose horizon lies in `window` (inclusive).
pub fn h_inv_estimate(results: &[SpanningResult], window: (usize, usize), base: LogBase) -> Result<GrowthFit> {
    let samples: Vec<(usize, f64)> = results
        .iter()
        .filter(|r| r.n >= window.0 && r.n <= window.1)
        .map(|r| (r.n, r.r_inv as f64))
        .collect();
    fit_growth(&samples, base)
}

/// `r_inv(n)` for every `n` in `n_range`, evaluated in parallel.
pub fn r_inv_series(
    sys: &LinearSystem,
    pair: &AdmissiblePair,
    n_range: (usize, usize),
    method: CoverMethod,
    budgets: Budgets,
) -> Result<Vec<SpanningResult>> {
    let cert = certify_admissible(sys, pair, n_range.1)?;
    (n_range.0..=n_range.1)
        .into_par_iter()
        .map(|n| r_inv_estimate(sys, pair, &cert, n, method, budgets))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRun {
    pub eps: f64,
    pub results: Vec<SpanningResult>,
    pub fit: GrowthFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterSweep {
    pub runs: Vec<EpsilonRun>,
    /// Largest fitted slope over the sweep.
    pub sup: f64,
}

pub fn outer_entropy_sweep(
    sys: &LinearSystem,
    pair: &AdmissiblePair,
    eps_list: &[f64],
    n_range: (usize, usize),
    method: CoverMethod,
    budgets: Budgets,
    base: LogBase,
) -> Result<OuterSweep> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("eps_list must be nonempty and strictly decreasing".into()));
    }
    let mut runs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = pair.with_eps(eps)?;
        let results = r_inv_series(sys, &p, n_range, method, budgets)?;
        let fit = h_inv_estimate(&results, n_range, base)?;
        runs.push(EpsilonRun { eps, results, fit });
    }
    let sup = runs.iter().map(|r| r.fit.slope).fold(f64::NEG_INFINITY, f64::max);
    Ok(OuterSweep { runs, sup })
}

/// Allowed distance of the estimate from the two bounds; `lower: None`
/// disables the lower-side check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichTolerance {
    pub upper: f64,
    pub lower: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSeries {
    pub values: Vec<(usize, f64)>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub base: LogBase,
    pub estimate: f64,
    pub upper: f64,
    pub lower: Option<f64>,
    /// `upper + tol − estimate`; negative means failure.
    pub upper_margin: f64,
    pub lower_margin: Option<f64>,
    pub lower_unavailable: Option<String>,
    pub pass: bool,
}

/// Slope of `log μ(π K)/μ(N_ε π Q) + n log|det|` over `n_range`.
pub fn lower_bound_series(
    sys: &LinearSystem,
    spectral: &SpectralSummary,
    pair: &AdmissiblePair,
    n_range: (usize, usize),
    base: LogBase,
    seed: u64,
) -> Result<LowerBoundSeries> {
    let chart = QuotientChart::new(sys, spectral)?;
    let measure = InvariantMeasure::for_chart(&chart);
    let (mu_k, mu_q, mk, mq) = pair_volumes(&chart, measure, (&pair.k.lo, &pair.k.hi), (&pair.q.lo, &pair.q.hi), pair.eps, seed)?;
    let d = &spectral.differential.matrix;
    let mut values = Vec::new();
    for n in n_range.0..=n_range.1 {
        let b = lower_bound_from_volumes(&chart, d, mu_k, mu_q, mk, mq, pair.eps, n, base)?;
        values.push((n, b.log_value));
    }
    let slope = if values.len() >= 2 {
        let (n0, v0) = values[0];
        let (n1, v1) = values[values.len() - 1];
        (v1 - v0) / (n1 - n0) as f64
    } else {
        0.0
    };
    Ok(LowerBoundSeries { values, slope })
}

pub fn sandwich_verdict(
    estimate: f64,
    upper: f64,
    lower: std::result::Result<f64, String>,
    tol: SandwichTolerance,
    base: LogBase,
) -> TheoremVerdict {
    let upper_margin = upper + tol.upper - estimate;
    let (lower_v, lower_margin, lower_unavailable) = match lower {
        Ok(l) => (Some(l), tol.lower.map(|t| estimate - (l - t)), None),
        Err(why) => (None, None, Some(why)),
    };
    let pass = upper_margin >= 0.0 && lower_margin.is_none_or(|m| m >= 0.0);
    TheoremVerdict {
        base,
        estimate,
        upper,
        lower: lower_v,
        upper_margin,
        lower_margin,
        lower_unavailable,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCheck {
    pub sweep: OuterSweep,
    pub lower: Option<LowerBoundSeries>,
    pub verdict: TheoremVerdict,
}

/// Full pipeline: spectral bound, volume bound (when the quotient exists),
/// `r_inv` sweep, and the sandwich verdict on the sweep's supremum.
#[allow(clippy::too_many_arguments)]
pub fn theorem_check(
    sys: &LinearSystem,
    pair: &AdmissiblePair,
    eps_list: &[f64],
    n_range: (usize, usize),
    method: CoverMethod,
    budgets: Budgets,
    base: LogBase,
    tol: SandwichTolerance,
) -> Result<TheoremCheck> {
    let spectral = summarize(sys, &Tolerances::default())?;
    let upper = base.from_nats(spectral.bowen_nats);
    let smallest = pair.with_eps(*eps_list.last().ok_or_else(|| Error::Config("empty eps_list".into()))?)?;
    let lower = lower_bound_series(sys, &spectral, &smallest, n_range, base, crate::quotient::MC_SEED);
    let sweep = outer_entropy_sweep(sys, pair, eps_list, n_range, method, budgets, base)?;
    let verdict = sandwich_verdict(
        sweep.sup,
        upper,
        lower.as_ref().map(|l| l.slope).map_err(|e| e.root().to_string()),
        tol,
        base,
    );
    Ok(TheoremCheck { sweep, lower: lower.ok(), verdict })
}
