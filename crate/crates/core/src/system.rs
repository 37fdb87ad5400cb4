//! Discrete-time linear control systems `g_{k+1} = f_{u_k}(e) · f₀(g_k)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{wrap_unit, GroupKind, GroupPoint, GroupSpec};

/// Box-shaped control range together with its finite grid alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRange {
    lo: Vec<f64>,
    hi: Vec<f64>,
    delta: f64,
    alphabet: Vec<Vec<f64>>,
}

fn axis_grid(lo: f64, hi: f64, delta: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let steps = ((hi - lo) / delta + 1e-9).floor() as usize;
    for i in 0..=steps {
        pts.push(lo + i as f64 * delta);
    }
    if (hi - pts[pts.len() - 1]).abs() > 1e-12 * (1.0 + hi.abs()) {
        pts.push(hi);
    } else {
        let last = pts.len() - 1;
        pts[last] = hi;
    }
    // snap a grid point onto 0 if one is within rounding, else insert 0
    match pts.iter().position(|x| x.abs() < 1e-12) {
        Some(i) => pts[i] = 0.0,
        None => pts.push(0.0),
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts
}

impl ControlRange {
    /// Uniform grid of step `delta` on the box `[lo, hi]`, with 0 always included.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, delta: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Config("control box bounds must have equal positive length".into()));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!("control step must be positive, got {delta}")));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite()) || l > h || *l > 0.0 || *h < 0.0 {
                return Err(Error::Config(format!(
                    "control box [{l}, {h}] must be finite and contain 0"
                )));
            }
        }
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| if l == h { vec![0.0] } else { axis_grid(l, h, delta) })
            .collect();
        // cartesian product, lexicographic in coordinates
        let mut alphabet: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            alphabet = alphabet
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        Ok(ControlRange { lo, hi, delta, alphabet })
    }

    /// The degenerate range `U = {0}` in ℝᵐ.
    pub fn zero(m: usize) -> Self {
        ControlRange {
            lo: vec![0.0; m],
            hi: vec![0.0; m],
            delta: 1.0,
            alphabet: vec![vec![0.0; m]],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alphabet(&self) -> &[Vec<f64>] {
        &self.alphabet
    }

    pub fn zero_index(&self) -> usize {
        self.alphabet
            .iter()
            .position(|u| u.iter().all(|&x| x == 0.0))
            .expect("alphabet always contains 0")
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.lo.len()
            && u
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| x.is_finite() && *x >= l - 1e-12 && *x <= h + 1e-12)
    }
}

/// A finite control sequence `u₀, …, u_{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlWord(pub Vec<Vec<f64>>);

impl ControlWord {
    pub fn zeros(len: usize, m: usize) -> Self {
        ControlWord(vec![vec![0.0; m]; len])
    }

    pub fn from_scalars(values: &[f64]) -> Self {
        ControlWord(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops the first `k` letters.
    pub fn shift(&self, k: usize) -> ControlWord {
        ControlWord(self.0[k.min(self.0.len())..].to_vec())
    }
}

/// The uncontrolled automorphism `f₀`, in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum Automorphism {
    /// `x ↦ A x` on ℝᵈ, or `x ↦ A x mod 1` on the torus (A integral, det ±1).
    Linear(DMatrix<f64>),
    /// `(x, y) ↦ (x, s·y)` on `aff_plus`.
    AffScale(f64),
    /// `(x₁, x₂, x₃) ↦ (x₁ + x₂ + x₂²/2, x₂, x₂ + x₃)` on `heisenberg3`.
    HeisenbergShear,
}

/// The control translation `u ↦ f_u(e)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Translation {
    /// `u ↦ B u` on ℝᵈ.
    Linear(DMatrix<f64>),
    /// `u ↦ (eᵘ, u)` on `aff_plus`.
    AffExample,
    /// `u ↦ (−u/2 − u²/3, u, −u/2)` on `heisenberg3`.
    HeisenbergExample,
    /// `u ↦ e`.
    Trivial,
}

/// A linear control system on one of the built-in groups.
///
/// `f_u(g)` is never stored; it is always evaluated as `b(u) · f₀(g)`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub name: String,
    pub group: GroupSpec,
    pub f0: Automorphism,
    pub b: Translation,
    pub control: ControlRange,
    /// Closed-form `(df₀)_e`, when known.
    pub analytic_differential: Option<DMatrix<f64>>,
}

impl LinearSystem {
    pub fn new(
        name: impl Into<String>,
        group: GroupSpec,
        f0: Automorphism,
        b: Translation,
        control: ControlRange,
    ) -> Result<Self> {
        let d = group.dimension();
        let ok = match (&f0, group.kind()) {
            (Automorphism::Linear(a), GroupKind::Euclidean(_) | GroupKind::Torus2) => {
                a.nrows() == d && a.ncols() == d
            }
            (Automorphism::AffScale(s), GroupKind::AffPlus) => *s > 0.0,
            (Automorphism::HeisenbergShear, GroupKind::Heisenberg3) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::Config(format!("automorphism does not fit group {group}")));
        }
        if let (Automorphism::Linear(a), GroupKind::Torus2) = (&f0, group.kind()) {
            let integral = a.iter().all(|x| x.fract() == 0.0);
            if !integral || (a.determinant().abs() - 1.0).abs() > 1e-12 {
                return Err(Error::Config("torus automorphism must be integral with det ±1".into()));
            }
        }
        let m = control.dim();
        let ok = match (&b, group.kind()) {
            (Translation::Linear(bm), GroupKind::Euclidean(_)) => bm.nrows() == d && bm.ncols() == m,
            (Translation::AffExample, GroupKind::AffPlus) => m == 1,
            (Translation::HeisenbergExample, GroupKind::Heisenberg3) => m == 1,
            (Translation::Trivial, _) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::Config(format!("control translation does not fit group {group}")));
        }
        let analytic_differential = match &f0 {
            Automorphism::Linear(a) => Some(a.clone()),
            Automorphism::AffScale(s) => Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, *s])),
            Automorphism::HeisenbergShear => Some(DMatrix::from_row_slice(
                3,
                3,
                &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0],
            )),
        };
        Ok(LinearSystem {
            name: name.into(),
            group,
            f0,
            b,
            control,
            analytic_differential,
        })
    }

    /// Euclidean system `x ↦ A x + B u`.
    pub fn euclidean(
        name: impl Into<String>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        control: ControlRange,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::Config("A must be square and nonempty".into()));
        }
        let g = GroupSpec::euclidean(a.nrows());
        Self::new(name, g, Automorphism::Linear(a), Translation::Linear(b), control)
    }

    pub fn dimension(&self) -> usize {
        self.group.dimension()
    }

    pub(crate) fn f0_into(&self, g: &[f64], out: &mut [f64]) {
        match &self.f0 {
            Automorphism::Linear(a) => {
                let d = g.len();
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += a[(i, j)] * g[j];
                    }
                    out[i] = s;
                }
                if self.group.kind() == GroupKind::Torus2 {
                    for o in out.iter_mut() {
                        *o = wrap_unit(*o);
                    }
                }
            }
            Automorphism::AffScale(s) => {
                out[0] = g[0];
                out[1] = s * g[1];
            }
            Automorphism::HeisenbergShear => {
                let v = [g[0] + g[1] + 0.5 * g[1] * g[1], g[1], g[1] + g[2]];
                out.copy_from_slice(&v);
            }
        }
    }

    pub(crate) fn b_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.b {
            Translation::Linear(bm) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..u.len()).map(|j| bm[(i, j)] * u[j]).sum();
                }
            }
            Translation::AffExample => {
                out[0] = u[0].exp();
                out[1] = u[0];
            }
            Translation::HeisenbergExample => {
                let u = u[0];
                out[0] = -u / 2.0 - u * u / 3.0;
                out[1] = u;
                out[2] = -u / 2.0;
            }
            Translation::Trivial => out.copy_from_slice(&self.group.identity().0),
        }
    }

    /// One step `b(u) · f₀(g)` on raw coordinates, without validation.
    /// `scratch` must hold at least `2d` values.
    pub(crate) fn step_into(&self, g: &[f64], u: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let d = g.len();
        let (fg, bu) = scratch[..2 * d].split_at_mut(d);
        self.f0_into(g, fg);
        self.b_into(u, bu);
        self.group.mul_into(bu, fg, out);
    }

    pub fn f0(&self, g: &GroupPoint) -> Result<GroupPoint> {
        self.group.check(&g.0)?;
        let mut out = vec![0.0; g.0.len()];
        self.f0_into(&g.0, &mut out);
        Ok(GroupPoint(out))
    }

    /// `f₀ᵏ(g)`.
    pub fn f0_pow(&self, g: &GroupPoint, k: usize) -> Result<GroupPoint> {
        self.group.check(&g.0)?;
        let mut cur = g.0.clone();
        let mut next = vec![0.0; cur.len()];
        for _ in 0..k {
            self.f0_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(GroupPoint(cur))
    }

    /// `f_u(e)`.
    pub fn translation(&self, u: &[f64]) -> Result<GroupPoint> {
        self.check_control(u)?;
        let mut out = vec![0.0; self.dimension()];
        self.b_into(u, &mut out);
        Ok(GroupPoint(out))
    }

    fn check_control(&self, u: &[f64]) -> Result<()> {
        if self.control.contains(u) {
            Ok(())
        } else {
            Err(Error::ControlOutOfRange { control: u.to_vec() })
        }
    }

    pub fn step(&self, g: &GroupPoint, u: &[f64]) -> Result<GroupPoint> {
        self.group.check(&g.0)?;
        self.check_control(u)?;
        let d = self.dimension();
        let mut scratch = vec![0.0; 2 * d];
        let mut out = vec![0.0; d];
        self.step_into(&g.0, u, &mut scratch, &mut out);
        Ok(GroupPoint(out))
    }

    /// `φ(j, g, w)` for `j = 0..=k` by iterating `f_{u_j}`.
    pub fn trajectory_direct(&self, k: usize, g: &GroupPoint, w: &ControlWord) -> Result<Vec<GroupPoint>> {
        if w.len() < k {
            return Err(Error::WordTooShort { len: w.len(), needed: k });
        }
        let mut out = Vec::with_capacity(k + 1);
        out.push(g.clone());
        for u in &w.0[..k] {
            let next = self.step(out.last().unwrap(), u)?;
            out.push(next);
        }
        Ok(out)
    }

    /// `φ(j, g, w) = φ(j, e, w) · f₀ʲ(g)`.
    pub fn trajectory_translated(&self, k: usize, g: &GroupPoint, w: &ControlWord) -> Result<Vec<GroupPoint>> {
        let from_e = self.trajectory_direct(k, &self.group.identity(), w)?;
        let mut out = Vec::with_capacity(k + 1);
        let mut fg = g.clone();
        for (j, base) in from_e.iter().enumerate() {
            if j > 0 {
                fg = self.f0(&fg)?;
            }
            out.push(self.group.product(base, &fg)?);
        }
        Ok(out)
    }
}
