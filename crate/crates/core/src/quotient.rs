//! Induced systems on `G/G⁻` and the volume lower bound for `r_inv`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupKind, GroupPoint, GroupSpec};
use crate::spectral::{concat_columns, LogBase, SpectralSummary};
use crate::system::{ControlWord, LinearSystem};

#[derive(Debug, Clone, PartialEq)]
enum Projection {
    /// `g⁻ = {0}`: the quotient is `G` itself.
    Identity,
    /// Coordinates along `g⁺⁰` in the basis `[V⁻ | V⁺⁰]`.
    Linear {
        stable: DMatrix<f64>,
        complement: DMatrix<f64>,
        /// Rows of `[V⁻ | V⁺⁰]⁻¹` belonging to `V⁺⁰`.
        p: DMatrix<f64>,
        /// Rows belonging to `V⁻`.
        p_stable: DMatrix<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientChart {
    group: GroupSpec,
    projection: Projection,
}

impl QuotientChart {
    pub fn new(sys: &LinearSystem, spectral: &SpectralSummary) -> Result<Self> {
        if !spectral.closedness.is_closed() {
            return Err(Error::StableSubgroupNotClosed);
        }
        let split = &spectral.split;
        let d = sys.dimension();
        if split.minus.ncols() == 0 {
            return Ok(QuotientChart { group: sys.group.clone(), projection: Projection::Identity });
        }
        if !matches!(sys.group.kind(), GroupKind::Euclidean(_)) {
            return Err(Error::UnsupportedQuotient(format!(
                "no linear quotient chart for {} with nontrivial stable part",
                sys.group.name()
            )));
        }
        let stable = split.minus.clone();
        let complement = split.center_unstable();
        let basis = concat_columns(&[&stable, &complement], d);
        let inv = basis
            .try_inverse()
            .ok_or_else(|| Error::ConvergenceFailure("stable and center-unstable bases are dependent".into()))?;
        let s = stable.ncols();
        let p_stable = inv.rows(0, s).into_owned();
        let p = inv.rows(s, d - s).into_owned();
        Ok(QuotientChart {
            group: sys.group.clone(),
            projection: Projection::Linear { stable, complement, p, p_stable },
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.projection, Projection::Identity)
    }

    pub fn dimension(&self) -> usize {
        match &self.projection {
            Projection::Identity => self.group.dimension(),
            Projection::Linear { p, .. } => p.nrows(),
        }
    }

    /// Origin of the quotient chart, `π(e)`.
    pub fn origin(&self) -> Vec<f64> {
        match &self.projection {
            Projection::Identity => self.group.identity().0,
            Projection::Linear { p, .. } => vec![0.0; p.nrows()],
        }
    }

    pub fn project(&self, g: &GroupPoint) -> Result<Vec<f64>> {
        self.group.check(&g.0)?;
        Ok(self.project_raw(&g.0))
    }

    fn project_raw(&self, g: &[f64]) -> Vec<f64> {
        match &self.projection {
            Projection::Identity => g.to_vec(),
            Projection::Linear { p, .. } => (p * DVector::from_column_slice(g)).iter().cloned().collect(),
        }
    }

    /// A lift of `q` (the one with zero stable coordinates).
    pub fn lift(&self, q: &[f64]) -> Result<GroupPoint> {
        match &self.projection {
            Projection::Identity => self.group.point(q.to_vec()),
            Projection::Linear { complement, .. } => {
                let g = complement * DVector::from_column_slice(q);
                self.group.point(g.iter().cloned().collect())
            }
        }
    }

    /// `exp(Y)` for `Y` in the stable subalgebra, given in stable coordinates.
    pub fn stable_element(&self, t: &[f64]) -> Result<GroupPoint> {
        match &self.projection {
            Projection::Identity => Ok(self.group.identity()),
            Projection::Linear { stable, .. } => {
                let y = stable * DVector::from_column_slice(t);
                self.group.point(y.iter().cloned().collect())
            }
        }
    }

    pub fn stable_dimension(&self) -> usize {
        match &self.projection {
            Projection::Identity => 0,
            Projection::Linear { stable, .. } => stable.ncols(),
        }
    }

    /// `f̄(q, u)` computed on the quotient itself.
    pub fn induced_step(&self, sys: &LinearSystem, q: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        match &self.projection {
            Projection::Identity => Ok(sys.step(&self.group.point(q.to_vec())?, u)?.0),
            Projection::Linear { complement, p, .. } => {
                let m = p * sys_matrix(sys)? * complement;
                let bu = sys.translation(u)?;
                let next = &m * DVector::from_column_slice(q) + p * DVector::from_vec(bu.0);
                Ok(next.iter().cloned().collect())
            }
        }
    }

    /// Projects a box of `G` (given in chart coordinates) and tests membership.
    pub fn in_projected_box(&self, q: &[f64], lo: &[f64], hi: &[f64]) -> bool {
        match &self.projection {
            Projection::Identity => q.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| *a <= *x && *x <= *b),
            Projection::Linear { stable, complement, .. } => {
                let base = complement * DVector::from_column_slice(q);
                box_feasible(&base, stable, lo, hi)
            }
        }
    }

    /// Axis-aligned bounding box of `π(box)`.
    pub fn projected_bounds(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.projection {
            Projection::Identity => (lo.to_vec(), hi.to_vec()),
            Projection::Linear { p, .. } => {
                let mut out_lo = vec![0.0; p.nrows()];
                let mut out_hi = vec![0.0; p.nrows()];
                for i in 0..p.nrows() {
                    for j in 0..p.ncols() {
                        let (a, b) = (p[(i, j)] * lo[j], p[(i, j)] * hi[j]);
                        out_lo[i] += a.min(b);
                        out_hi[i] += a.max(b);
                    }
                }
                (out_lo, out_hi)
            }
        }
    }
}

fn sys_matrix(sys: &LinearSystem) -> Result<DMatrix<f64>> {
    match &sys.f0 {
        crate::system::Automorphism::Linear(a) => Ok(a.clone()),
        _ => Err(Error::UnsupportedQuotient("linear quotient needs a matrix automorphism".into())),
    }
}

/// Whether `base + V t` meets the box for some `t`.
fn box_feasible(base: &DVector<f64>, v: &DMatrix<f64>, lo: &[f64], hi: &[f64]) -> bool {
    let s = v.ncols();
    if s == 1 {
        let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..base.len() {
            let c = v[(i, 0)];
            if c.abs() < 1e-15 {
                if base[i] < lo[i] || base[i] > hi[i] {
                    return false;
                }
            } else {
                let (a, b) = ((lo[i] - base[i]) / c, (hi[i] - base[i]) / c);
                t_lo = t_lo.max(a.min(b));
                t_hi = t_hi.min(a.max(b));
            }
        }
        return t_lo <= t_hi;
    }
    // coordinate descent on the squared box violation
    let violation = |x: &DVector<f64>| -> f64 {
        (0..x.len())
            .map(|i| {
                let e = (lo[i] - x[i]).max(0.0) + (x[i] - hi[i]).max(0.0);
                e * e
            })
            .sum()
    };
    let mut t = DVector::<f64>::zeros(s);
    let mut x = base.clone();
    for _ in 0..500 {
        for k in 0..s {
            // exact 1-D minimisation over a piecewise quadratic by bisection on the derivative
            let col = v.column(k).into_owned();
            let deriv = |dt: f64| -> f64 {
                (0..x.len())
                    .map(|i| {
                        let xi = x[i] + dt * col[i];
                        let g = if xi < lo[i] {
                            xi - lo[i]
                        } else if xi > hi[i] {
                            xi - hi[i]
                        } else {
                            0.0
                        };
                        g * col[i]
                    })
                    .sum()
            };
            let (mut a, mut b) = (-1e6, 1e6);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if deriv(m) > 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let dt = 0.5 * (a + b);
            t[k] += dt;
            x += col * dt;
        }
        if violation(&x) <= 1e-24 {
            return true;
        }
    }
    violation(&x) <= 1e-20
}

/// `φ̄(k, q, w)` for `0 ≤ j ≤ k`.
pub fn induced_trajectory(
    chart: &QuotientChart,
    sys: &LinearSystem,
    k: usize,
    q: &[f64],
    w: &ControlWord,
) -> Result<Vec<Vec<f64>>> {
    if w.len() < k {
        return Err(Error::WordTooShort { len: w.len(), needed: k });
    }
    let mut out = Vec::with_capacity(k + 1);
    out.push(q.to_vec());
    for j in 0..k {
        let next = chart.induced_step(sys, &out[j], &w.0[j])?;
        out.push(next);
    }
    Ok(out)
}

/// `Dᵏ` restricted to the center-unstable complement, in its basis.
pub fn quotient_differential(chart: &QuotientChart, d: &DMatrix<f64>, k: usize, invariance_tol: f64) -> Result<DMatrix<f64>> {
    let m = match &chart.projection {
        Projection::Identity => d.clone(),
        Projection::Linear { complement, p, p_stable, .. } => {
            let dv = d * complement;
            let leak = (p_stable * &dv).amax();
            if leak > invariance_tol * d.amax().max(1.0) {
                return Err(Error::InvarianceViolated { residual: leak });
            }
            p * dv
        }
    };
    let n = m.nrows();
    let mut out = DMatrix::<f64>::identity(n, n);
    for _ in 0..k {
        out = &out * &m;
    }
    Ok(out)
}

/// Left-invariant volume on the quotient chart, up to scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantMeasure {
    Lebesgue,
    /// `dx dy / x²` on the affine group chart.
    AffLeftHaar,
}

impl InvariantMeasure {
    pub fn for_chart(chart: &QuotientChart) -> Self {
        if chart.is_identity() && chart.group.kind() == GroupKind::AffPlus {
            InvariantMeasure::AffLeftHaar
        } else {
            InvariantMeasure::Lebesgue
        }
    }

    pub fn density(self, q: &[f64]) -> f64 {
        match self {
            InvariantMeasure::Lebesgue => 1.0,
            InvariantMeasure::AffLeftHaar => 1.0 / (q[0] * q[0]),
        }
    }
}

/// Density-weighted count of cell centres inside the set, cells of side ≤ `h`.
pub fn volume_box_count<F>(measure: InvariantMeasure, lo: &[f64], hi: &[f64], h: f64, member: F) -> f64
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let dim = lo.len();
    let mut counts = Vec::with_capacity(dim);
    let mut widths = Vec::with_capacity(dim);
    for i in 0..dim {
        let extent = hi[i] - lo[i];
        if !(extent > 0.0) {
            return 0.0;
        }
        let n = (extent / h).ceil().max(1.0) as usize;
        counts.push(n);
        widths.push(extent / n as f64);
    }
    let cell: f64 = widths.iter().product();
    let inner: usize = counts[1..].iter().product();
    let slabs: Vec<f64> = (0..counts[0])
        .into_par_iter()
        .map(|i0| {
            let mut q = vec![0.0; dim];
            q[0] = lo[0] + (i0 as f64 + 0.5) * widths[0];
            let mut total = 0.0;
            for flat in 0..inner {
                let mut r = flat;
                for axis in (1..dim).rev() {
                    let idx = r % counts[axis];
                    r /= counts[axis];
                    q[axis] = lo[axis] + (idx as f64 + 0.5) * widths[axis];
                }
                if member(&q) {
                    total += measure.density(&q);
                }
            }
            total
        })
        .collect();
    slabs.iter().sum::<f64>() * cell
}

/// Monte Carlo estimate over the bounding box, in fixed-size batches with
/// one ChaCha stream per batch.
pub fn volume_monte_carlo<F>(measure: InvariantMeasure, lo: &[f64], hi: &[f64], samples: usize, seed: u64, member: F) -> f64
where
    F: Fn(&[f64]) -> bool + Sync,
{
    const BATCH: usize = 4096;
    let dim = lo.len();
    let box_vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if !(box_vol > 0.0) || samples == 0 {
        return 0.0;
    }
    let batches = samples.div_ceil(BATCH);
    let sums: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = BATCH.min(samples - b * BATCH);
            let mut q = vec![0.0; dim];
            let mut total = 0.0;
            for _ in 0..n {
                for i in 0..dim {
                    q[i] = rng.gen_range(lo[i]..hi[i]);
                }
                if member(&q) {
                    total += measure.density(&q);
                }
            }
            total
        })
        .collect();
    sums.iter().sum::<f64>() / samples as f64 * box_vol
}

pub const MC_SAMPLES: usize = 100_000;
pub const MC_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub n: usize,
    pub eps: f64,
    pub mu_k: f64,
    pub mu_q: f64,
    /// `|det(D|g⁺⁰)|`.
    pub det: f64,
    pub value: f64,
    /// `log(value)` in the requested base.
    pub log_value: f64,
    pub mu_k_monte_carlo: f64,
    pub mu_q_monte_carlo: f64,
}

/// Volumes of `π(K)` and `π(N_ε(Q))`, where `N_ε(Q)` is `Q` inflated by `ε`
/// in every chart coordinate.
pub fn pair_volumes(
    chart: &QuotientChart,
    measure: InvariantMeasure,
    k_box: (&[f64], &[f64]),
    q_box: (&[f64], &[f64]),
    eps: f64,
    seed: u64,
) -> Result<(f64, f64, f64, f64)> {
    let h = eps / 4.0;
    let q_lo: Vec<f64> = q_box.0.iter().map(|x| x - eps).collect();
    let q_hi: Vec<f64> = q_box.1.iter().map(|x| x + eps).collect();
    let vol = |lo: &[f64], hi: &[f64]| -> (f64, f64) {
        let (blo, bhi) = chart.projected_bounds(lo, hi);
        let member = |q: &[f64]| chart.in_projected_box(q, lo, hi);
        (
            volume_box_count(measure, &blo, &bhi, h, member),
            volume_monte_carlo(measure, &blo, &bhi, MC_SAMPLES, seed, member),
        )
    };
    let (mu_k, mu_k_mc) = vol(k_box.0, k_box.1);
    if !(mu_k > 0.0) {
        return Err(Error::ZeroMeasureK);
    }
    let (mu_q, mu_q_mc) = vol(&q_lo, &q_hi);
    Ok((mu_k, mu_q, mu_k_mc, mu_q_mc))
}

/// `μ(π(K)) / μ(N_ε(π(Q))) · |det(D|g⁺⁰)|ⁿ`.
#[allow(clippy::too_many_arguments)]
pub fn measure_lower_bound(
    chart: &QuotientChart,
    measure: InvariantMeasure,
    d: &DMatrix<f64>,
    k_box: (&[f64], &[f64]),
    q_box: (&[f64], &[f64]),
    eps: f64,
    n: usize,
    base: LogBase,
) -> Result<LowerBound> {
    let (mu_k, mu_q, mu_k_mc, mu_q_mc) = pair_volumes(chart, measure, k_box, q_box, eps, MC_SEED)?;
    lower_bound_from_volumes(chart, d, mu_k, mu_q, mu_k_mc, mu_q_mc, eps, n, base)
}

#[allow(clippy::too_many_arguments)]
pub fn lower_bound_from_volumes(
    chart: &QuotientChart,
    d: &DMatrix<f64>,
    mu_k: f64,
    mu_q: f64,
    mu_k_mc: f64,
    mu_q_mc: f64,
    eps: f64,
    n: usize,
    base: LogBase,
) -> Result<LowerBound> {
    let det = quotient_differential(chart, d, 1, 1e-9)?.determinant().abs();
    let ratio = mu_k / mu_q;
    Ok(LowerBound {
        n,
        eps,
        mu_k,
        mu_q,
        det,
        value: ratio * det.powi(n as i32),
        log_value: base.from_nats(ratio.ln() + n as f64 * det.ln()),
        mu_k_monte_carlo: mu_k_mc,
        mu_q_monte_carlo: mu_q_mc,
    })
}

/// Volume of the left translate `g·A` of a chart box, by box counting.
pub fn translated_box_volume(chart: &QuotientChart, measure: InvariantMeasure, g: &GroupPoint, lo: &[f64], hi: &[f64], h: f64) -> Result<f64> {
    let group = &chart.group;
    let shift = chart.project(g)?;
    let linear = !chart.is_identity();
    // bounding box from the images of the corners (the actions here are multi-affine)
    let dim = lo.len();
    let mut blo = vec![f64::INFINITY; dim];
    let mut bhi = vec![f64::NEG_INFINITY; dim];
    for mask in 0..(1usize << dim) {
        let corner: Vec<f64> = (0..dim).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
        let img = if linear {
            corner.iter().zip(&shift).map(|(a, b)| a + b).collect()
        } else {
            let mut out = vec![0.0; dim];
            group.mul_into(&g.0, &corner, &mut out);
            out
        };
        for i in 0..dim {
            blo[i] = blo[i].min(img[i]);
            bhi[i] = bhi[i].max(img[i]);
        }
    }
    let g_inv = group.inverse_raw(&g.0);
    let member = |q: &[f64]| -> bool {
        let pre: Vec<f64> = if linear {
            q.iter().zip(&shift).map(|(a, b)| a - b).collect()
        } else {
            let mut out = vec![0.0; dim];
            group.mul_into(&g_inv, q, &mut out);
            out
        };
        pre.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    };
    Ok(volume_box_count(measure, &blo, &bhi, h, member))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::presets;
    use crate::spectral::summarize;
    use crate::system::ControlRange;

    fn diag_system() -> LinearSystem {
        LinearSystem::euclidean(
            "diag",
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 3.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            ControlRange::new(vec![-1.0], vec![1.0], 0.5).unwrap(),
        )
        .unwrap()
    }

    fn chart_for(sys: &LinearSystem) -> Result<(QuotientChart, SpectralSummary)> {
        let s = summarize(sys, &Tolerances::default())?;
        Ok((QuotientChart::new(sys, &s)?, s))
    }

    #[test]
    fn diag_projection_is_second_coordinate() {
        let sys = diag_system();
        let (chart, _) = chart_for(&sys).unwrap();
        assert_eq!(chart.dimension(), 1);
        let q = chart.project(&GroupPoint(vec![5.0, -2.0])).unwrap();
        let sign = chart.lift(&[1.0]).unwrap().0[1].signum();
        assert!((q[0] * sign + 2.0).abs() < 1e-12);
        assert_eq!(chart.project(&GroupPoint(vec![0.0, 0.0])).unwrap(), vec![0.0]);
    }

    #[test]
    fn aff_and_heisenberg_quotients_are_identity() {
        for sys in [presets::aff_example(), presets::heisenberg_example()] {
            let (chart, _) = chart_for(&sys).unwrap();
            assert!(chart.is_identity());
            let g = sys.group.point(vec![1.5, 0.25, 0.5].into_iter().take(sys.dimension()).collect()).unwrap();
            assert_eq!(chart.project(&g).unwrap(), g.0);
            assert_eq!(chart.origin(), sys.group.identity().0);
        }
    }

    #[test]
    fn torus_quotient_is_refused() {
        assert!(matches!(chart_for(&presets::torus_cat()), Err(Error::StableSubgroupNotClosed)));
    }

    #[test]
    fn diag_induced_system_is_unstable_block() {
        let sys = diag_system();
        let (chart, _) = chart_for(&sys).unwrap();
        let w = ControlWord::from_scalars(&[1.0, -0.5, 0.5]);
        let g = GroupPoint(vec![0.3, 0.2]);
        let q0 = chart.project(&g).unwrap();
        let traj = induced_trajectory(&chart, &sys, 3, &q0, &w).unwrap();
        let full = sys.trajectory_direct(3, &g, &w).unwrap();
        for (q, x) in traj.iter().zip(&full) {
            assert!((q[0] - chart.project(x).unwrap()[0]).abs() < 1e-12);
        }
        // second coordinate evolves as y ↦ 3y + u
        let sign = chart.lift(&[1.0]).unwrap().0[1].signum();
        assert!((traj[1][0] * sign - (0.6 + 1.0)).abs() < 1e-12);
        assert_eq!(induced_trajectory(&chart, &sys, 0, &q0, &w).unwrap(), vec![q0]);
    }

    #[test]
    fn lifts_differing_by_stable_elements_agree() {
        let sys = diag_system();
        let (chart, _) = chart_for(&sys).unwrap();
        let g = GroupPoint(vec![0.3, 0.2]);
        let h = chart.stable_element(&[0.7]).unwrap();
        let gh = sys.group.product(&g, &h).unwrap();
        let w = ControlWord::from_scalars(&[1.0, 0.0, -1.0, 0.5]);
        let a = induced_trajectory(&chart, &sys, 4, &chart.project(&g).unwrap(), &w).unwrap();
        let b = induced_trajectory(&chart, &sys, 4, &chart.project(&gh).unwrap(), &w).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x[0] - y[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn quotient_differentials() {
        let sys = diag_system();
        let (chart, s) = chart_for(&sys).unwrap();
        let m = quotient_differential(&chart, &s.differential.matrix, 3, 1e-9).unwrap();
        assert!((m[(0, 0)] - 27.0).abs() < 1e-9);
        let id = quotient_differential(&chart, &s.differential.matrix, 0, 1e-9).unwrap();
        assert_eq!(id, DMatrix::identity(1, 1));

        let aff = presets::aff_example();
        let (chart, s) = chart_for(&aff).unwrap();
        let m = quotient_differential(&chart, &s.differential.matrix, 2, 1e-9).unwrap();
        assert!((m[(1, 1)] - 4f64.exp()).abs() < 1e-9);
        assert_eq!(m[(0, 0)], 1.0);
    }

    #[test]
    fn euclidean_lower_bound_example() {
        let sys = presets::euclid_ab();
        let (chart, s) = chart_for(&sys).unwrap();
        let m = InvariantMeasure::for_chart(&chart);
        let k: (&[f64], &[f64]) = (&[-1.0], &[1.0]);
        for n in 0..6 {
            let b = measure_lower_bound(&chart, m, &s.differential.matrix, k, k, 0.1, n, LogBase::Two).unwrap();
            let want = 2.0 / 2.2 * 2f64.powi(n as i32);
            assert!((b.value - want).abs() < 1e-9 * want, "{} vs {}", b.value, want);
            assert!((b.mu_q_monte_carlo - 2.2).abs() < 1e-9);
        }
    }

    #[test]
    fn projected_box_volume_in_a_sheared_splitting() {
        // A = [[3, 1], [0, 1/2]]: stable direction (−0.4, 1)·c, unstable e1
        let sys = LinearSystem::euclidean(
            "shear",
            DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 0.5]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            ControlRange::new(vec![-1.0], vec![1.0], 0.5).unwrap(),
        )
        .unwrap();
        let (chart, s) = chart_for(&sys).unwrap();
        // projection along (−0.4, 1) of the unit square onto e1 coords: x + 0.4 y ∈ [0, 1.4]
        let (lo, hi) = ([0.0, 0.0], [1.0, 1.0]);
        let (blo, bhi) = chart.projected_bounds(&lo, &hi);
        let v = volume_box_count(InvariantMeasure::Lebesgue, &blo, &bhi, 1e-3, |q| chart.in_projected_box(q, &lo, &hi));
        let scale = chart.lift(&[1.0]).unwrap().0[0].abs();
        assert!((v * scale - 1.4).abs() < 1e-2, "{v}");
        let m = quotient_differential(&chart, &s.differential.matrix, 1, 1e-9).unwrap();
        assert!((m[(0, 0)] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn aff_haar_volume_is_left_invariant() {
        let sys = presets::aff_example();
        let (chart, _) = chart_for(&sys).unwrap();
        let m = InvariantMeasure::for_chart(&chart);
        assert_eq!(m, InvariantMeasure::AffLeftHaar);
        let (lo, hi) = ([0.5, -0.5], [2.0, 0.5]);
        let base = translated_box_volume(&chart, m, &sys.group.identity(), &lo, &hi, 1e-3).unwrap();
        // ∫∫ dx dy / x² = (1/0.5 − 1/2)·1
        assert!((base - 1.5).abs() < 1e-5);
        let g = GroupPoint(vec![1.7, 0.3]);
        let moved = translated_box_volume(&chart, m, &g, &lo, &hi, 1e-3).unwrap();
        assert!((moved - base).abs() < 1e-2);
    }

    #[test]
    fn zero_measure_k_is_rejected() {
        let sys = presets::euclid_ab();
        let (chart, s) = chart_for(&sys).unwrap();
        let r = measure_lower_bound(
            &chart,
            InvariantMeasure::Lebesgue,
            &s.differential.matrix,
            (&[0.2], &[0.2]),
            (&[-1.0], &[1.0]),
            0.1,
            1,
            LogBase::Two,
        );
        assert!(matches!(r, Err(Error::ZeroMeasureK)));
    }
}
