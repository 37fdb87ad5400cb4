//! Scenario-driven runs: spectral bound, quotient bound, entropy sweep and verdicts.

pub mod emit;
pub mod scenario;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Tolerances;
use crate::entropy::{
    certify_admissible, check_separated, fit_growth, h_inv_estimate, lower_bound_series, r_inv_estimate, sandwich_verdict,
    separated_set, verify_cover, AdmissiblePair, CoverMethod, GrowthFit, LowerBoundSeries, SpanningResult, TheoremVerdict,
};
use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::presets;
use crate::quotient::QuotientChart;
use crate::spectral::{
    bracket_closure_check, growth_constants, summarize, trace_ad_check, BracketReport, Closedness, Eigenvalue, GrowthBounds,
    LogBase, SpectralSummary, TraceAdReport,
};

pub use scenario::{Estimator, Overrides, PairSpec, Scenario, ScenarioFile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub crate_name: &'static str,
    pub crate_version: &'static str,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub estimator: Estimator,
    pub method: CoverMethod,
    pub log_base: LogBase,
    pub eps_list: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub delta: f64,
    pub alphabet_size: usize,
    pub rho: f64,
    pub grid_points: usize,
    pub budget: u64,
    pub node_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub bounds: Option<GrowthBounds>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub differential: Vec<Vec<f64>>,
    pub fd_discrepancy: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    pub max_residual: f64,
    /// `(dim g⁺, dim g⁰, dim g⁻)`.
    pub dims: [usize; 3],
    pub bowen_base2: f64,
    pub bowen_nats: f64,
    /// Bound in the scenario's log base.
    pub bowen: f64,
    pub documented_entropy: Option<f64>,
    pub log_base_note: Option<String>,
    pub closedness: Closedness,
    pub growth: GrowthReport,
    pub bracket: BracketReport,
    pub trace_ad: TraceAdReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientReport {
    pub available: bool,
    pub note: Option<String>,
    pub lower_bound: Option<LowerBoundSeries>,
}

/// One `(n, ε)` cell of an entropy table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub estimator: Estimator,
    pub method: Option<CoverMethod>,
    pub n: usize,
    pub eps: f64,
    pub count: usize,
    pub log2_count: f64,
    pub ln_count: f64,
    pub evaluations: Option<u64>,
    pub universe_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub estimator: Estimator,
    pub method: Option<CoverMethod>,
    pub eps: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub fit: GrowthFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub system: String,
    pub group: String,
    pub provenance: Provenance,
    pub settings: Settings,
    pub spectral: SpectralReport,
    pub quotient: QuotientReport,
    /// Horizon certified for admissibility, when the spanning estimator ran.
    pub admissible_horizon: Option<usize>,
    pub cells: Vec<Cell>,
    pub fits: Vec<FitRow>,
    pub exact_check: Vec<Cell>,
    pub theorem: Option<TheoremVerdict>,
    pub verdicts: Vec<Verdict>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// 0 when every verdict passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Exit status for a failed run.
pub const EXIT_ERROR: i32 = 2;

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn cell(estimator: Estimator, method: Option<CoverMethod>, n: usize, eps: f64, count: usize) -> Cell {
    let c = count as f64;
    Cell {
        estimator,
        method,
        n,
        eps,
        count,
        log2_count: c.log2(),
        ln_count: c.ln(),
        evaluations: None,
        universe_size: None,
    }
}

fn spanning_cell(eps: f64, r: &SpanningResult) -> Cell {
    Cell {
        evaluations: Some(r.evaluations),
        universe_size: Some(r.universe_size),
        ..cell(Estimator::Spanning, Some(r.method), r.n, eps, r.r_inv)
    }
}

/// Both values of the bound, and which one a documented value matches.
pub fn log_base_note(s: &SpectralSummary, documented: Option<f64>) -> Option<String> {
    if s.bowen_nats == 0.0 {
        return None;
    }
    let mut note = format!(
        "bound is {:.6} in base 2 and {:.6} in base e",
        s.bowen_base2, s.bowen_nats
    );
    if let Some(v) = documented {
        let close = |x: f64| (x - v).abs() <= 1e-6 * v.abs().max(1.0);
        let which = match (close(s.bowen_base2), close(s.bowen_nats)) {
            (true, _) => "base 2",
            (_, true) => "natural log only, inconsistent with a base-2 convention",
            _ => "neither base",
        };
        note.push_str(&format!("; documented value {v} matches {which}"));
    }
    Some(note)
}

fn spectral_report(sc: &Scenario, s: &SpectralSummary) -> SpectralReport {
    let tol = Tolerances::default();
    let d = &s.differential.matrix;
    let growth = match growth_constants(d, &s.split, sc.file.n_max.max(1)) {
        Ok(bounds) => GrowthReport { bounds, note: None },
        Err(e) => GrowthReport { bounds: None, note: Some(e.to_string()) },
    };
    let (p, z, m) = s.split.dims();
    let documented = sc.file.preset.as_deref().and_then(presets::documented_entropy);
    SpectralReport {
        differential: (0..d.nrows()).map(|i| d.row(i).iter().cloned().collect()).collect(),
        fd_discrepancy: s.differential.fd_discrepancy,
        eigenvalues: s.split.spectrum.eigenvalues.clone(),
        max_residual: s.split.spectrum.max_residual,
        dims: [p, z, m],
        bowen_base2: s.bowen_base2,
        bowen_nats: s.bowen_nats,
        bowen: sc.base.from_nats(s.bowen_nats),
        documented_entropy: documented,
        log_base_note: log_base_note(s, documented),
        closedness: s.closedness.clone(),
        growth,
        bracket: bracket_closure_check(&sc.system.group, &s.split, &tol),
        trace_ad: trace_ad_check(&sc.system.group, &s.split, &tol),
    }
}

/// Outcome of the quotient stage: errors that only mean "no bound here" become notes.
fn quotient_stage(sc: &Scenario, s: &SpectralSummary, pair: Option<&AdmissiblePair>) -> Result<QuotientReport> {
    let soft = |e: &Error| {
        matches!(e.root(), Error::StableSubgroupNotClosed | Error::UnsupportedQuotient(_) | Error::ZeroMeasureK)
    };
    if let Err(e) = QuotientChart::new(&sc.system, s) {
        if soft(&e) {
            return Ok(QuotientReport { available: false, note: Some(format!("{:?}: {e}", Kind(e.root()))), lower_bound: None });
        }
        return Err(e.at("quotient"));
    }
    let Some(pair) = pair else {
        return Ok(QuotientReport { available: true, note: Some("no Q given; volume bound skipped".into()), lower_bound: None });
    };
    match lower_bound_series(&sc.system, s, pair, sc.n_range(), sc.base, sc.file.seed) {
        Ok(l) => Ok(QuotientReport { available: true, note: None, lower_bound: Some(l) }),
        Err(e) if soft(&e) => Ok(QuotientReport { available: true, note: Some(format!("{:?}: {e}", Kind(e.root()))), lower_bound: None }),
        Err(e) => Err(e.at("quotient bound")),
    }
}

/// Prints only the variant name of an error.
struct Kind<'a>(&'a Error);

impl std::fmt::Debug for Kind<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = format!("{:?}", self.0);
        let end = s.find(|c: char| !c.is_alphanumeric()).unwrap_or(s.len());
        f.write_str(&s[..end])
    }
}

struct SpanningOutput {
    horizon: usize,
    cells: Vec<Cell>,
    fits: Vec<FitRow>,
    exact: Vec<Cell>,
    theorem: TheoremVerdict,
    verdicts: Vec<Verdict>,
}

fn run_spanning(sc: &Scenario, s: &SpectralSummary, base_pair: &AdmissiblePair, quotient: &QuotientReport) -> Result<SpanningOutput> {
    let (n_min, n_max) = sc.n_range();
    let exact_hi = sc.file.exact_check.map_or(0, |[_, hi]| hi);
    let horizon = n_max.max(exact_hi);
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    let mut replay_failures = Vec::new();
    let mut smallest: Option<(AdmissiblePair, Vec<SpanningResult>)> = None;
    for &eps in &sc.file.eps_list {
        let pair = base_pair.with_eps(eps)?;
        let t = Instant::now();
        let cert = certify_admissible(&sc.system, &pair, horizon).map_err(|e| e.at("admissibility"))?;
        log::info!("eps {eps}: admissibility to horizon {horizon} in {:.2?}", t.elapsed());
        let t = Instant::now();
        let results = (n_min..=n_max)
            .into_par_iter()
            .map(|n| r_inv_estimate(&sc.system, &pair, &cert, n, sc.method, sc.budgets))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at("r_inv sweep"))?;
        log::info!("eps {eps}: r_inv for n = {n_min}..={n_max} in {:.2?}", t.elapsed());
        for r in &results {
            if let Some((p, j)) = verify_cover(&sc.system, &pair, r)? {
                replay_failures.push(format!("eps {eps}, n {}: point {p} leaves N_eps(Q) at step {j}", r.n));
            }
            cells.push(spanning_cell(eps, r));
        }
        let fit = h_inv_estimate(&results, (n_min, n_max), sc.base).map_err(|e| e.at("fit"))?;
        fits.push(FitRow { estimator: Estimator::Spanning, method: Some(sc.method), eps, n_min, n_max, fit });
        smallest = Some((pair, results));
    }
    let (pair, results) = smallest.expect("eps_list is nonempty");

    let mut verdicts = Vec::new();
    let sup = fits.iter().map(|f| f.fit.slope).fold(f64::NEG_INFINITY, f64::max);
    let upper = sc.base.from_nats(s.bowen_nats);
    let lower = match (&quotient.lower_bound, &quotient.note) {
        (Some(l), _) => Ok(l.slope),
        (None, Some(note)) => Err(note.clone()),
        (None, None) => Err("quotient bound unavailable".to_string()),
    };
    let theorem = sandwich_verdict(sup, upper, lower, sc.tolerance, sc.base);
    verdicts.push(Verdict {
        name: "sandwich".into(),
        pass: theorem.pass,
        detail: format!(
            "estimate {:.4} vs upper {:.4} (tol {}){}",
            theorem.estimate,
            theorem.upper,
            sc.tolerance.upper,
            match (theorem.lower, sc.tolerance.lower) {
                (Some(l), Some(t)) => format!(", lower {l:.4} (tol {t})"),
                (Some(l), None) => format!(", lower {l:.4} (not checked)"),
                _ => ", lower unavailable".into(),
            }
        ),
    });
    if let Some(l) = &quotient.lower_bound {
        let gap = (l.slope - upper).abs();
        verdicts.push(Verdict {
            name: "lower_bound_slope".into(),
            pass: gap <= 1e-9,
            detail: format!("slope {:.12} vs bound {:.12}", l.slope, upper),
        });
    }
    verdicts.push(Verdict {
        name: "cover_replay".into(),
        pass: replay_failures.is_empty(),
        detail: if replay_failures.is_empty() {
            format!("{} spanning sets replayed", cells.len())
        } else {
            replay_failures.join("; ")
        },
    });

    let mut exact = Vec::new();
    if let Some([lo, hi]) = sc.file.exact_check {
        let cert = certify_admissible(&sc.system, &pair, horizon).map_err(|e| e.at("admissibility"))?;
        let eps = pair.eps;
        let greedy_at = |n: usize| -> Result<usize> {
            match results.iter().find(|r| r.n == n && r.method == CoverMethod::Greedy) {
                Some(r) => Ok(r.r_inv),
                None => Ok(r_inv_estimate(&sc.system, &pair, &cert, n, CoverMethod::Greedy, sc.budgets)?.r_inv),
            }
        };
        let mut worst: f64 = 1.0;
        let mut ok = true;
        for n in lo..=hi {
            let e = r_inv_estimate(&sc.system, &pair, &cert, n, CoverMethod::Exact, sc.budgets).map_err(|e| e.at("exact check"))?;
            let g = greedy_at(n).map_err(|e| e.at("exact check"))?;
            ok &= e.r_inv <= g && g <= 2 * e.r_inv;
            worst = worst.max(g as f64 / e.r_inv as f64);
            exact.push(spanning_cell(eps, &e));
            exact.push(cell(Estimator::Spanning, Some(CoverMethod::Greedy), n, eps, g));
        }
        verdicts.push(Verdict {
            name: "exact_vs_greedy".into(),
            pass: ok,
            detail: format!("n = {lo}..={hi}: exact <= greedy <= 2 exact, worst ratio {worst:.3}"),
        });
    }
    Ok(SpanningOutput { horizon, cells, fits, exact, theorem, verdicts })
}

struct SeparatedOutput {
    cells: Vec<Cell>,
    fits: Vec<FitRow>,
    verdicts: Vec<Verdict>,
}

fn run_separated(sc: &Scenario, s: &SpectralSummary) -> Result<SeparatedOutput> {
    let (n_min, n_max) = sc.n_range();
    let group = &sc.system.group;
    let grid = sc
        .k
        .grid(sc.file.pair.rho)
        .into_iter()
        .map(|p| group.point(p))
        .collect::<Result<Vec<GroupPoint>>>()?;
    let upper = sc.base.from_nats(s.bowen_nats);
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    let mut verdicts = Vec::new();
    for &eps in &sc.file.eps_list {
        let t = Instant::now();
        let results: Vec<_> = (n_min..=n_max).into_par_iter().map(|n| separated_set(&sc.system, &grid, n, eps)).collect();
        log::info!("eps {eps}: separated sets for n = {n_min}..={n_max} in {:.2?}", t.elapsed());
        let samples: Vec<(usize, f64)> = results.iter().map(|r| (r.n, r.s_n as f64)).collect();
        let fit = fit_growth(&samples, sc.base).map_err(|e| e.at("fit"))?;
        let check = check_separated(&sc.system, &grid, results.last().unwrap()).map_err(|e| e.at("separated check"))?;
        for r in &results {
            cells.push(cell(Estimator::Separated, None, r.n, eps, r.s_n));
        }
        verdicts.push(Verdict {
            name: format!("topological_entropy eps={eps}"),
            pass: (fit.slope - upper).abs() <= sc.tolerance.upper,
            detail: format!("slope {:.4} vs bound {:.4} (tol {})", fit.slope, upper, sc.tolerance.upper),
        });
        verdicts.push(Verdict {
            name: format!("separated_spanning eps={eps}"),
            pass: check.separated && check.spanning,
            detail: format!(
                "n = {n_max}: separated {}, spanning {}, {} pairs checked",
                check.separated, check.spanning, check.pairs_checked
            ),
        });
        fits.push(FitRow { estimator: Estimator::Separated, method: None, eps, n_min, n_max, fit });
    }
    Ok(SeparatedOutput { cells, fits, verdicts })
}

/// Executes a validated scenario end to end.
pub fn run(sc: &Scenario) -> Result<RunReport> {
    let start = Instant::now();
    let spectral = summarize(&sc.system, &Tolerances::default())?;
    let spectral_report = spectral_report(sc, &spectral);
    log::info!("spectral stage in {:.2?}", start.elapsed());

    let pair = match &sc.q {
        Some(q) => Some(
            AdmissiblePair::new(&sc.system.group, sc.k.clone(), q.clone(), *sc.file.eps_list.last().unwrap(), sc.file.pair.rho)
                .map_err(|e| e.at("pair"))?,
        ),
        None => None,
    };
    let quotient = quotient_stage(sc, &spectral, pair.as_ref())?;

    let mut verdicts = vec![
        Verdict {
            name: "bracket_closure".into(),
            pass: spectral_report.bracket.passed,
            detail: format!("worst residual {:e}", spectral_report.bracket.worst_residual),
        },
        Verdict {
            name: "trace_ad".into(),
            pass: spectral_report.trace_ad.passed,
            detail: format!("max |tr ad| {:e}", spectral_report.trace_ad.max_abs_trace),
        },
    ];
    let grid_points;
    let (cells, fits, exact, theorem, horizon) = match sc.file.estimator {
        Estimator::Spanning => {
            let pair = pair.as_ref().expect("validated: spanning runs have Q");
            grid_points = pair.len();
            let out = run_spanning(sc, &spectral, pair, &quotient)?;
            verdicts.extend(out.verdicts);
            (out.cells, out.fits, out.exact, Some(out.theorem), Some(out.horizon))
        }
        Estimator::Separated => {
            grid_points = sc.k.grid(sc.file.pair.rho).len();
            let out = run_separated(sc, &spectral)?;
            verdicts.extend(out.verdicts);
            (out.cells, out.fits, Vec::new(), None, None)
        }
    };
    log::info!("run {} finished in {:.2?}", sc.file.name, start.elapsed());

    Ok(RunReport {
        name: sc.file.name.clone(),
        system: sc.system.name.clone(),
        group: sc.system.group.name(),
        provenance: Provenance {
            config_sha256: config_hash(&sc.source),
            crate_name: env!("CARGO_PKG_NAME"),
            crate_version: env!("CARGO_PKG_VERSION"),
            seed: sc.file.seed,
        },
        settings: Settings {
            estimator: sc.file.estimator,
            method: sc.method,
            log_base: sc.base,
            eps_list: sc.file.eps_list.clone(),
            n_min: sc.file.n_min,
            n_max: sc.file.n_max,
            delta: sc.system.control.delta(),
            alphabet_size: sc.system.control.alphabet().len(),
            rho: sc.file.pair.rho,
            grid_points,
            budget: sc.budgets.evaluations,
            node_budget: sc.budgets.nodes,
        },
        spectral: spectral_report,
        quotient,
        admissible_horizon: horizon,
        cells,
        fits,
        exact_check: exact,
        theorem,
        verdicts,
    })
}

/// Exit code for the outcome of [`run`].
pub fn exit_code(outcome: &Result<RunReport>) -> i32 {
    match outcome {
        Ok(r) => r.exit_code(),
        Err(_) => EXIT_ERROR,
    }
}
