//! Spectral data of the uncontrolled automorphism.
//!
//! Everything here is derived from `D = (df₀)_e`: its eigenvalues (computed by
//! a real Schur decomposition and then clustered, so that defective eigenvalues
//! are reported by their well-conditioned cluster mean), the real generalized
//! eigenspaces grouped into unstable / center / stable parts, the entropy bound
//! `Σ_{|λ|>1} log|λ|`, empirical growth constants, and the algebraic side
//! checks on brackets and `tr ad`.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::group::{GroupKind, GroupSpec};
use crate::system::LinearSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            other => Err(Error::Config(format!("log base must be \"2\" or \"e\", got {other:?}"))),
        }
    }

    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }

    /// Converts a natural-log quantity into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Two => nats / LN_2,
            LogBase::E => nats,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        }
    }
}

/// `(df₀)_e` in the chart basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Differential {
    pub matrix: DMatrix<f64>,
    /// Max-abs difference between the analytic and finite-difference matrices.
    pub fd_discrepancy: f64,
}

/// Central finite-difference Jacobian of `f₀ᵏ` at the identity.
pub fn fd_jacobian(sys: &LinearSystem, k: usize, h: f64) -> Result<DMatrix<f64>> {
    let g = &sys.group;
    let d = g.dimension();
    let e = g.identity();
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut plus = e.0.clone();
        let mut minus = e.0.clone();
        plus[j] += h;
        minus[j] -= h;
        let fp = sys.f0_pow(&g.point(plus)?, k)?;
        let fm = sys.f0_pow(&g.point(minus)?, k)?;
        let diff = g.chart_difference(&fm.0, &fp.0);
        for i in 0..d {
            jac[(i, j)] = diff[i] / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Analytic differential when the system provides one (cross-checked against
/// finite differences), finite differences otherwise.
pub fn differential_at_identity(sys: &LinearSystem, tol: &Tolerances) -> Result<Differential> {
    let fd = fd_jacobian(sys, 1, tol.fd_step)?;
    let (matrix, fd_discrepancy) = match &sys.analytic_differential {
        Some(a) => {
            let disc = (a - &fd).amax();
            // relative to the size of the entries, since f₀ may be strongly expanding
            if disc > tol.fd_agreement * a.amax().max(1.0) {
                return Err(Error::Config(format!(
                    "analytic differential disagrees with finite differences by {disc:e}"
                )));
            }
            (a.clone(), disc)
        }
        None => (fd, 0.0),
    };
    let det = matrix.determinant();
    if det.abs() <= tol.singular_det {
        return Err(Error::SingularDifferential { det });
    }
    Ok(Differential { matrix, fd_discrepancy })
}

/// One eigenvalue cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl Eigenvalue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn modulus(&self) -> f64 {
        self.value().norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Clusters sorted by decreasing modulus, then decreasing imaginary part.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Largest `σ_min(D − λI)` over the clusters.
    pub max_residual: f64,
}

impl Spectrum {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    /// Eigenvalues repeated by multiplicity.
    pub fn flat(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value(), e.multiplicity))
            .collect()
    }
}

fn smallest_singular_value_complex(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn eigen(d: &DMatrix<f64>, tol: &Tolerances) -> Result<Spectrum> {
    let n = d.nrows();
    if n == 0 || n != d.ncols() {
        return Err(Error::ConvergenceFailure("matrix must be square and nonempty".into()));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::ConvergenceFailure("matrix has non-finite entries".into()));
    }
    let schur = d
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::ConvergenceFailure("Schur iteration did not converge".into()))?;
    let raw: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();

    // single-linkage clustering
    let mut cluster_of: Vec<usize> = (0..raw.len()).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for i in 0..raw.len() {
        for j in (i + 1)..raw.len() {
            let scale = raw[i].norm().max(raw[j].norm()).max(1.0);
            if (raw[i] - raw[j]).norm() <= tol.eigen_cluster * scale {
                let (a, b) = (find(&mut cluster_of, i), find(&mut cluster_of, j));
                if a != b {
                    cluster_of[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (i, &v) in raw.iter().enumerate() {
        let r = find(&mut cluster_of, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, vs)) => vs.push(v),
            None => groups.push((r, vec![v])),
        }
    }
    let mut eigenvalues: Vec<Eigenvalue> = groups
        .into_iter()
        .map(|(_, vs)| {
            let m = vs.len();
            let mean = vs.iter().sum::<Complex64>() / m as f64;
            let im = if mean.im.abs() <= tol.eigen_cluster * mean.norm().max(1.0) {
                0.0
            } else {
                mean.im
            };
            Eigenvalue { re: mean.re, im, multiplicity: m }
        })
        .collect();
    eigenvalues.sort_by(|a, b| {
        b.modulus()
            .total_cmp(&a.modulus())
            .then(b.im.total_cmp(&a.im))
            .then(b.re.total_cmp(&a.re))
    });

    let dc: DMatrix<Complex64> = d.map(|x| Complex64::new(x, 0.0));
    let scale = d.amax().max(1.0);
    let mut max_residual: f64 = 0.0;
    for ev in &eigenvalues {
        let shifted = &dc - DMatrix::<Complex64>::identity(n, n) * ev.value();
        let r = smallest_singular_value_complex(&shifted);
        max_residual = max_residual.max(r);
        if r > tol.eigen_residual * scale {
            return Err(Error::ConvergenceFailure(format!(
                "eigenpair residual {r:e} for {}+{}i exceeds tolerance",
                ev.re, ev.im
            )));
        }
    }
    Ok(Spectrum { eigenvalues, max_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Unstable,
    Center,
    Stable,
}

/// Real generalized eigenspace of a real eigenvalue or of a conjugate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBlock {
    /// Representative eigenvalue (imaginary part ≥ 0).
    pub value: Complex64,
    pub is_pair: bool,
    /// Algebraic multiplicity of `value` alone.
    pub multiplicity: usize,
    pub class: Stability,
    /// Orthonormal columns spanning the real generalized eigenspace.
    pub basis: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubalgebraSplit {
    pub spectrum: Spectrum,
    pub blocks: Vec<EigenBlock>,
    pub plus: DMatrix<f64>,
    pub zero: DMatrix<f64>,
    pub minus: DMatrix<f64>,
    pub eta: f64,
    /// Largest `‖Dv − P(Dv)‖` over basis columns of the three parts.
    pub invariance_residual: f64,
}

impl SubalgebraSplit {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.plus.ncols(), self.zero.ncols(), self.minus.ncols())
    }

    /// Basis of the center-unstable part `g⁺ ⊕ g⁰`.
    pub fn center_unstable(&self) -> DMatrix<f64> {
        concat_columns(&[&self.plus, &self.zero], self.plus.nrows())
    }
}

pub fn classify(value: Complex64, eta: f64) -> Result<Stability> {
    let gap = value.norm() - 1.0;
    if gap.abs() <= eta * 1e-3 {
        Ok(Stability::Center)
    } else if gap.abs() <= eta {
        Err(Error::AmbiguousClassification { re: value.re, im: value.im, eta })
    } else if gap > 0.0 {
        Ok(Stability::Unstable)
    } else {
        Ok(Stability::Stable)
    }
}

pub(crate) fn concat_columns(parts: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        for j in 0..p.ncols() {
            out.set_column(c, &p.column(j));
            c += 1;
        }
    }
    out
}

/// Right singular vectors of the `k` smallest singular values.
fn null_basis(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    // SVD of a square matrix returns min(rows, cols) vectors; rows == cols here
    let mut out = DMatrix::zeros(n, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let qr = m.clone().qr();
    qr.q().columns(0, m.ncols()).into_owned()
}

/// Distance of `v` from the span of the orthonormal columns of `q`.
pub(crate) fn off_span(q: &DMatrix<f64>, v: &nalgebra::DVector<f64>) -> f64 {
    if q.ncols() == 0 {
        return v.norm();
    }
    let proj = q * (q.transpose() * v);
    (v - proj).norm()
}

pub fn split_subalgebras(d: &DMatrix<f64>, tol: &Tolerances) -> Result<SubalgebraSplit> {
    let spectrum = eigen(d, tol)?;
    let n = d.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut blocks = Vec::new();
    for ev in &spectrum.eigenvalues {
        if ev.im < 0.0 {
            continue;
        }
        let value = ev.value();
        let class = classify(value, tol.unit_modulus)?;
        let is_pair = ev.im != 0.0;
        let factor = if is_pair {
            d * d - d * (2.0 * value.re) + &eye * value.norm_sqr()
        } else {
            d - &eye * value.re
        };
        let mut q = eye.clone();
        for _ in 0..ev.multiplicity {
            q = &q * &factor;
        }
        let dim = if is_pair { 2 * ev.multiplicity } else { ev.multiplicity };
        let basis = null_basis(&q, dim);
        blocks.push(EigenBlock {
            value,
            is_pair,
            multiplicity: ev.multiplicity,
            class,
            basis,
        });
    }
    let pick = |c: Stability| {
        let parts: Vec<&DMatrix<f64>> = blocks.iter().filter(|b| b.class == c).map(|b| &b.basis).collect();
        orthonormalize(&concat_columns(&parts, n))
    };
    let plus = pick(Stability::Unstable);
    let zero = pick(Stability::Center);
    let minus = pick(Stability::Stable);
    if plus.ncols() + zero.ncols() + minus.ncols() != n {
        return Err(Error::ConvergenceFailure("generalized eigenspaces do not sum to the full dimension".into()));
    }
    let all = concat_columns(&[&plus, &zero, &minus], n);
    let sv = all.clone().svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < tol.invariance {
        return Err(Error::ConvergenceFailure(format!(
            "generalized eigenspaces are not independent (σ_min = {smin:e})"
        )));
    }
    let mut invariance_residual: f64 = 0.0;
    for part in [&plus, &zero, &minus] {
        for j in 0..part.ncols() {
            let dv = d * part.column(j);
            invariance_residual = invariance_residual.max(off_span(part, &dv));
        }
    }
    if invariance_residual > tol.invariance * d.amax().max(1.0) {
        return Err(Error::InvarianceViolated { residual: invariance_residual });
    }
    Ok(SubalgebraSplit {
        spectrum,
        blocks,
        plus,
        zero,
        minus,
        eta: tol.unit_modulus,
        invariance_residual,
    })
}

/// `Σ_{|λ|>1} log|λ|` with multiplicity.
pub fn bowen_entropy(spectrum: &Spectrum, base: LogBase) -> f64 {
    spectrum
        .eigenvalues
        .iter()
        .filter(|e| e.modulus() > 1.0)
        .map(|e| e.multiplicity as f64 * base.log(e.modulus()))
        .fold(0.0, |a, b| a + b)
}

/// Constants with `|DⁿX| ≥ cσ⁻ⁿ|X|` on unstable and `|DⁿY| ≤ c⁻¹σⁿ|Y|` on
/// stable basis vectors for `1 ≤ n ≤ horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub c: f64,
    pub sigma: f64,
    pub horizon: usize,
}

/// Smallest σ on a grid above the spectral rate for which a `c ≥ 1` exists.
/// Returns `None` when both `g⁺` and `g⁻` are trivial.
pub fn growth_constants(d: &DMatrix<f64>, split: &SubalgebraSplit, horizon: usize) -> Result<Option<GrowthBounds>> {
    if split.plus.ncols() == 0 && split.minus.ncols() == 0 {
        return Ok(None);
    }
    let mut sigma0: f64 = 0.0;
    for b in &split.blocks {
        let m = b.value.norm();
        match b.class {
            Stability::Unstable => sigma0 = sigma0.max(1.0 / m),
            Stability::Stable => sigma0 = sigma0.max(m),
            Stability::Center => {}
        }
    }
    // log|DⁿX|/|X| per basis vector and n
    let mut up: Vec<Vec<f64>> = Vec::new();
    let mut down: Vec<Vec<f64>> = Vec::new();
    for (part, sink) in [(&split.plus, &mut up), (&split.minus, &mut down)] {
        // iterate the restriction so that rounding never leaks into other parts
        let m = part.transpose() * d * part;
        for j in 0..part.ncols() {
            let mut x = nalgebra::DVector::<f64>::zeros(part.ncols());
            x[j] = 1.0;
            let mut logs = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                x = &m * x;
                logs.push(x.norm().ln());
            }
            sink.push(logs);
        }
    }
    let slack = 1e-12;
    let steps = 2000;
    for s in 0..steps {
        let sigma = sigma0 + (1.0 - sigma0) * s as f64 / steps as f64;
        if sigma <= 0.0 || sigma >= 1.0 {
            continue;
        }
        let ls = sigma.ln();
        // unstable: ln c ≤ log|DⁿX| + n ln σ ; stable: ln c ≤ −log|DⁿY| + n ln σ
        let mut ln_c = f64::INFINITY;
        for logs in &up {
            for (i, l) in logs.iter().enumerate() {
                ln_c = ln_c.min(l + (i + 1) as f64 * ls);
            }
        }
        for logs in &down {
            for (i, l) in logs.iter().enumerate() {
                ln_c = ln_c.min(-l + (i + 1) as f64 * ls);
            }
        }
        if ln_c >= -slack {
            return Ok(Some(GrowthBounds { c: ln_c.max(0.0).exp(), sigma, horizon }));
        }
    }
    Err(Error::FitFailure(format!(
        "no σ in [{sigma0}, 1) admits c ≥ 1 over n ≤ {horizon}"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub pairs_checked: usize,
    pub worst_residual: f64,
    pub passed: bool,
}

/// Checks `[g_α, g_β] ⊂ g_{αβ}` on all pairs of block basis vectors. For
/// conjugate pairs the real blocks are compared against the sum of the blocks
/// of all products `α^± β^±`.
pub fn bracket_closure_check(group: &GroupSpec, split: &SubalgebraSplit, tol: &Tolerances) -> BracketReport {
    let n = group.dimension();
    let values_of = |b: &EigenBlock| -> Vec<Complex64> {
        if b.is_pair {
            vec![b.value, b.value.conj()]
        } else {
            vec![b.value]
        }
    };
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for a in &split.blocks {
        for b in &split.blocks {
            let mut targets: Vec<&DMatrix<f64>> = Vec::new();
            for va in values_of(a) {
                for vb in values_of(b) {
                    let prod = va * vb;
                    for t in &split.blocks {
                        let hit = values_of(t).iter().any(|vt| {
                            (vt - prod).norm() <= tol.eigen_cluster * prod.norm().max(1.0)
                        });
                        if hit && !targets.iter().any(|x| std::ptr::eq(*x, &t.basis)) {
                            targets.push(&t.basis);
                        }
                    }
                }
            }
            let target = orthonormalize(&concat_columns(&targets, n));
            for i in 0..a.basis.ncols() {
                for j in 0..b.basis.ncols() {
                    let x: Vec<f64> = a.basis.column(i).iter().cloned().collect();
                    let y: Vec<f64> = b.basis.column(j).iter().cloned().collect();
                    let br = nalgebra::DVector::from_vec(group.bracket(&x, &y));
                    worst = worst.max(off_span(&target, &br));
                    pairs += 1;
                }
            }
        }
    }
    BracketReport {
        pairs_checked: pairs,
        worst_residual: worst,
        passed: worst <= tol.invariance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceAdReport {
    pub vectors_checked: usize,
    pub max_abs_trace: f64,
    /// Largest entry of `ad(X)^d` over the checked vectors.
    pub max_nilpotency_residual: f64,
    pub passed: bool,
}

/// `tr ad(X) = 0` and `ad(X)` nilpotent for basis vectors of `g⁻` and `g⁺`.
pub fn trace_ad_check(group: &GroupSpec, split: &SubalgebraSplit, tol: &Tolerances) -> TraceAdReport {
    let n = group.dimension();
    let mut max_trace: f64 = 0.0;
    let mut max_nil: f64 = 0.0;
    let mut count = 0;
    for part in [&split.minus, &split.plus] {
        for j in 0..part.ncols() {
            let x: Vec<f64> = part.column(j).iter().cloned().collect();
            let ad = group.ad_matrix(&x);
            max_trace = max_trace.max(ad.trace().abs());
            let mut p = DMatrix::<f64>::identity(n, n);
            for _ in 0..n {
                p = &p * &ad;
            }
            max_nil = max_nil.max(p.amax());
            count += 1;
        }
    }
    TraceAdReport {
        vectors_checked: count,
        max_abs_trace: max_trace,
        max_nilpotency_residual: max_nil,
        passed: max_trace <= tol.invariance && max_nil <= tol.invariance,
    }
}

/// Times at which the line flow `t ↦ t·v mod ℤ²` (unit speed) first comes
/// within `eps` of each target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityWitness {
    pub eps: f64,
    pub t_max: f64,
    pub targets: Vec<[f64; 2]>,
    pub times: Vec<f64>,
}

/// Targets `(i/m, j/m)` for `0 ≤ i, j < m`.
pub fn target_grid(m: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push([i as f64 / m as f64, j as f64 / m as f64]);
        }
    }
    out
}

fn first_approach(v: [f64; 2], target: [f64; 2], eps: f64, t_max: f64) -> Option<f64> {
    let dx = crate::group::wrap_centered(target[0]);
    let dy = crate::group::wrap_centered(target[1]);
    if (dx * dx + dy * dy).sqrt() < eps {
        return Some(0.0);
    }
    // segment breakpoints where a coordinate of t·v crosses an integer
    let mut cuts = vec![0.0, t_max];
    for &c in &v {
        if c != 0.0 {
            let step = 1.0 / c.abs();
            let mut t = step;
            while t < t_max {
                cuts.push(t);
                t += step;
            }
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    for w in cuts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if tb <= ta {
            continue;
        }
        let mid = 0.5 * (ta + tb);
        let cell = [(mid * v[0]).floor(), (mid * v[1]).floor()];
        let start = [ta * v[0] - cell[0], ta * v[1] - cell[1]];
        let len = tb - ta;
        let mut best: Option<f64> = None;
        for sx in [-1.0, 0.0, 1.0] {
            for sy in [-1.0, 0.0, 1.0] {
                let p = [target[0] + sx - start[0], target[1] + sy - start[1]];
                let s = (p[0] * v[0] + p[1] * v[1]).clamp(0.0, len);
                let dx = p[0] - s * v[0];
                let dy = p[1] - s * v[1];
                if (dx * dx + dy * dy).sqrt() < eps {
                    // earliest parameter within eps on this segment
                    let perp2 = {
                        let s0 = p[0] * v[0] + p[1] * v[1];
                        let qx = p[0] - s0 * v[0];
                        let qy = p[1] - s0 * v[1];
                        (qx * qx + qy * qy, s0)
                    };
                    let half = (eps * eps - perp2.0).max(0.0).sqrt();
                    let s_first = (perp2.1 - half).clamp(0.0, len);
                    let t = ta + s_first;
                    best = Some(best.map_or(t, |b: f64| b.min(t)));
                }
            }
        }
        if let Some(t) = best {
            return Some(t);
        }
    }
    None
}

pub fn density_witness_torus(direction: [f64; 2], eps: f64, t_max: f64, targets: &[[f64; 2]]) -> Result<DensityWitness> {
    let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if !(norm > 0.0) || !(eps > 0.0) || !(t_max >= 0.0) {
        return Err(Error::Config("density witness needs a nonzero direction and positive eps".into()));
    }
    let v = [direction[0] / norm, direction[1] / norm];
    let times: Vec<Option<f64>> = targets
        .par_iter()
        .map(|&t| first_approach(v, t, eps, t_max))
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for (t, target) in times.into_iter().zip(targets) {
        match t {
            Some(t) => out.push(t),
            None => {
                return Err(Error::WitnessNotFound { target: target.to_vec(), t_max });
            }
        }
    }
    Ok(DensityWitness {
        eps,
        t_max,
        targets: targets.to_vec(),
        times: out,
    })
}

/// Whether the stable subgroup `G⁻` is known to be closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Closedness {
    /// `G` simply connected, or `g⁻ = {0}`.
    Closed { reason: String },
    /// A stable direction on the torus whose line flow is numerically dense.
    NotClosed { eps: f64, t_max: f64, targets: usize },
    Unknown,
}

impl Closedness {
    pub fn is_closed(&self) -> bool {
        matches!(self, Closedness::Closed { .. })
    }
}

pub fn stable_closedness(group: &GroupSpec, split: &SubalgebraSplit) -> Closedness {
    if split.minus.ncols() == 0 {
        return Closedness::Closed { reason: "trivial stable subalgebra".into() };
    }
    if group.simply_connected() {
        return Closedness::Closed { reason: "simply connected group".into() };
    }
    if group.kind() == GroupKind::Torus2 && split.minus.ncols() == 1 {
        let v = [split.minus[(0, 0)], split.minus[(1, 0)]];
        let (eps, t_max) = (0.05, 1e4);
        if density_witness_torus(v, eps, t_max, &target_grid(20)).is_ok() {
            return Closedness::NotClosed { eps, t_max, targets: 400 };
        }
    }
    Closedness::Unknown
}

/// `f₀ⁿ(exp X)` versus `exp(DⁿX)` in the group distance.
pub fn exp_conjugation_gap(sys: &LinearSystem, d: &DMatrix<f64>, x: &[f64], n: usize) -> Result<f64> {
    let g = &sys.group;
    let lhs = sys.f0_pow(&g.exp_map(&crate::group::AlgebraVector(x.to_vec()))?, n)?;
    let mut v = nalgebra::DVector::from_column_slice(x);
    for _ in 0..n {
        v = d * v;
    }
    let rhs = g.exp_map(&crate::group::AlgebraVector(v.iter().cloned().collect()))?;
    Ok(g.distance(&lhs, &rhs))
}

/// Convenience: spectral data needed by the runner.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub differential: Differential,
    pub split: SubalgebraSplit,
    pub bowen_base2: f64,
    pub bowen_nats: f64,
    pub closedness: Closedness,
}

pub fn summarize(sys: &LinearSystem, tol: &Tolerances) -> Result<SpectralSummary> {
    let differential = differential_at_identity(sys, tol).map_err(|e| e.at("differential"))?;
    let split = split_subalgebras(&differential.matrix, tol).map_err(|e| e.at("eigen/split"))?;
    let bowen_base2 = bowen_entropy(&split.spectrum, LogBase::Two);
    let bowen_nats = bowen_entropy(&split.spectrum, LogBase::E);
    let closedness = stable_closedness(&sys.group, &split);
    Ok(SpectralSummary {
        differential,
        split,
        bowen_base2,
        bowen_nats,
        closedness,
    })
}

/// Unit eigenvector direction of a real block, normalized to a positive last
/// nonzero coordinate.
pub fn block_direction(block: &EigenBlock) -> Vec<f64> {
    let col: Vec<f64> = block.basis.column(0).iter().cloned().collect();
    let sign = col.iter().rev().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
    col.into_iter().map(|x| x * sign).collect()
}
