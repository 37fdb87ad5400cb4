//! Concrete Lie groups in global charts.
//!
//! Four groups are supported, each with a closed-form product, inverse,
//! exponential chart and a left-invariant distance:
//!
//! | group         | chart                  | product                                   |
//! |---------------|------------------------|-------------------------------------------|
//! | `euclidean:d` | ℝᵈ                     | `a + b`                                   |
//! | `aff_plus`    | (x, y), x > 0          | `(x₁x₂, x₁y₂ + y₁)`                        |
//! | `heisenberg3` | ℝ³                     | `(x₁ + y₁ + x₂y₃, x₂ + y₂, x₃ + y₃)`       |
//! | `torus2`      | [0, 1)²                | `a + b mod 1`                             |
//!
//! The Lie algebra of every group is identified with ℝᵈ through the chart at
//! the identity; for all four the exponential map has identity differential at
//! zero, so chart Jacobians at `e` are matrices in the Lie algebra basis.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of `c_{ij}^k` in a flattened `d × d × d` table.
fn constant_index(d: usize, i: usize, j: usize, k: usize) -> usize {
    (i * d + j) * d + k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    Euclidean(usize),
    AffPlus,
    Heisenberg3,
    Torus2,
}

/// A point of the group in its global chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint(pub Vec<f64>);

/// A Lie algebra element in chart coordinates at the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVector(pub Vec<f64>);

impl GroupPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl AlgebraVector {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn zeros(d: usize) -> Self {
        AlgebraVector(vec![0.0; d])
    }
}

/// Immutable description of one of the built-in groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    kind: GroupKind,
    dimension: usize,
    /// `c[(i*d + j)*d + k]` is the coefficient of `e_k` in `[e_i, e_j]`.
    structure_constants: Vec<f64>,
    simply_connected: bool,
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Wraps a coordinate into [0, 1).
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `x mod 1` in [-1/2, 1/2).
pub(crate) fn wrap_centered(x: f64) -> f64 {
    let r = wrap_unit(x + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

impl GroupSpec {
    pub fn euclidean(d: usize) -> Self {
        assert!(d > 0, "euclidean group needs positive dimension");
        GroupSpec {
            kind: GroupKind::Euclidean(d),
            dimension: d,
            structure_constants: vec![0.0; d * d * d],
            simply_connected: true,
        }
    }

    pub fn aff_plus() -> Self {
        // [e1, e2] = e2
        let mut c = vec![0.0; 8];
        c[constant_index(2, 0, 1, 1)] = 1.0;
        c[constant_index(2, 1, 0, 1)] = -1.0;
        GroupSpec {
            kind: GroupKind::AffPlus,
            dimension: 2,
            structure_constants: c,
            simply_connected: true,
        }
    }

    pub fn heisenberg3() -> Self {
        // [e2, e3] = e1
        let mut c = vec![0.0; 27];
        c[constant_index(3, 1, 2, 0)] = 1.0;
        c[constant_index(3, 2, 1, 0)] = -1.0;
        GroupSpec {
            kind: GroupKind::Heisenberg3,
            dimension: 3,
            structure_constants: c,
            simply_connected: true,
        }
    }

    pub fn torus2() -> Self {
        GroupSpec {
            kind: GroupKind::Torus2,
            dimension: 2,
            structure_constants: vec![0.0; 8],
            simply_connected: false,
        }
    }

    /// Parses `"euclidean:d"`, `"aff_plus"`, `"heisenberg3"` or `"torus2"`.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some(d) = name.strip_prefix("euclidean:") {
            let d: usize = d
                .parse()
                .map_err(|_| Error::Config(format!("bad euclidean dimension in {name:?}")))?;
            if d == 0 {
                return Err(Error::Config("euclidean dimension must be positive".into()));
            }
            return Ok(Self::euclidean(d));
        }
        match name {
            "aff_plus" => Ok(Self::aff_plus()),
            "heisenberg3" => Ok(Self::heisenberg3()),
            "torus2" => Ok(Self::torus2()),
            other => Err(Error::Config(format!("unknown group {other:?}"))),
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            GroupKind::Euclidean(d) => format!("euclidean:{d}"),
            GroupKind::AffPlus => "aff_plus".into(),
            GroupKind::Heisenberg3 => "heisenberg3".into(),
            GroupKind::Torus2 => "torus2".into(),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn simply_connected(&self) -> bool {
        self.simply_connected
    }

    pub fn is_abelian(&self) -> bool {
        self.structure_constants.iter().all(|&c| c == 0.0)
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.structure_constants
    }

    pub fn identity(&self) -> GroupPoint {
        match self.kind {
            GroupKind::AffPlus => GroupPoint(vec![1.0, 0.0]),
            _ => GroupPoint(vec![0.0; self.dimension]),
        }
    }

    /// Builds a validated point. Torus coordinates are wrapped into [0, 1).
    pub fn point(&self, mut coords: Vec<f64>) -> Result<GroupPoint> {
        if self.kind == GroupKind::Torus2 {
            for c in coords.iter_mut() {
                if c.is_finite() {
                    *c = wrap_unit(*c);
                }
            }
        }
        self.check(&coords)?;
        Ok(GroupPoint(coords))
    }

    /// Verifies the chart constraints for raw coordinates.
    pub fn check(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: coords.len(),
            });
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(self.violation(format!("non-finite coordinate {bad}")));
        }
        match self.kind {
            GroupKind::AffPlus if coords[0] <= 0.0 => {
                Err(self.violation(format!("first coordinate {} must be positive", coords[0])))
            }
            GroupKind::Torus2 if coords.iter().any(|&c| !(0.0..1.0).contains(&c)) => {
                Err(self.violation(format!("coordinates {coords:?} outside [0,1)")))
            }
            _ => Ok(()),
        }
    }

    fn violation(&self, detail: String) -> Error {
        Error::ChartViolation {
            group: self.name(),
            detail,
        }
    }

    pub fn product(&self, a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
        self.check(&a.0)?;
        self.check(&b.0)?;
        let mut out = vec![0.0; self.dimension];
        self.mul_into(&a.0, &b.0, &mut out);
        Ok(GroupPoint(out))
    }

    /// Unchecked product on raw coordinates.
    pub(crate) fn mul_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self.kind {
            GroupKind::Euclidean(_) => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = x + y;
                }
            }
            GroupKind::AffPlus => {
                let (x, y) = (a[0] * b[0], a[0] * b[1] + a[1]);
                out[0] = x;
                out[1] = y;
            }
            GroupKind::Heisenberg3 => {
                let v = [a[0] + b[0] + a[1] * b[2], a[1] + b[1], a[2] + b[2]];
                out.copy_from_slice(&v);
            }
            GroupKind::Torus2 => {
                out[0] = wrap_unit(a[0] + b[0]);
                out[1] = wrap_unit(a[1] + b[1]);
            }
        }
    }

    pub fn inverse(&self, a: &GroupPoint) -> Result<GroupPoint> {
        self.check(&a.0)?;
        Ok(GroupPoint(self.inverse_raw(&a.0)))
    }

    pub(crate) fn inverse_raw(&self, a: &[f64]) -> Vec<f64> {
        match self.kind {
            GroupKind::Euclidean(_) => a.iter().map(|x| -x).collect(),
            GroupKind::AffPlus => vec![1.0 / a[0], -a[1] / a[0]],
            GroupKind::Heisenberg3 => vec![-a[0] + a[1] * a[2], -a[1], -a[2]],
            GroupKind::Torus2 => a.iter().map(|&x| wrap_unit(-x)).collect(),
        }
    }

    pub fn exp_map(&self, x: &AlgebraVector) -> Result<GroupPoint> {
        if x.0.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.0.len(),
            });
        }
        let v = &x.0;
        let coords = match self.kind {
            GroupKind::Euclidean(_) => v.clone(),
            GroupKind::AffPlus => {
                let (a, b) = (v[0], v[1]);
                vec![a.exp(), b * exprel(a)]
            }
            GroupKind::Heisenberg3 => vec![v[0] + 0.5 * v[1] * v[2], v[1], v[2]],
            GroupKind::Torus2 => v.iter().map(|&c| wrap_unit(c)).collect(),
        };
        self.point(coords)
    }

    /// Inverse of [`exp_map`](Self::exp_map). On the torus the chart is the
    /// open square (-1/2, 1/2)²; points on its boundary have two preimages.
    pub fn log_map(&self, g: &GroupPoint) -> Result<AlgebraVector> {
        self.check(&g.0)?;
        let v = &g.0;
        let coords = match self.kind {
            GroupKind::Euclidean(_) => v.clone(),
            GroupKind::AffPlus => {
                let a = v[0].ln();
                vec![a, v[1] / exprel(a)]
            }
            GroupKind::Heisenberg3 => vec![v[0] - 0.5 * v[1] * v[2], v[1], v[2]],
            GroupKind::Torus2 => {
                let c: Vec<f64> = v.iter().map(|&x| wrap_centered(x)).collect();
                if c.iter().any(|&x| x == -0.5) {
                    return Err(Error::OutsideChart {
                        group: self.name(),
                        detail: format!("{v:?} lies on the boundary of the fundamental domain"),
                    });
                }
                c
            }
        };
        Ok(AlgebraVector(coords))
    }

    /// Left-invariant distance.
    ///
    /// Euclidean and torus use the flat metric, `aff_plus` the hyperbolic
    /// metric of its simply transitive action `z ↦ xz + y` on the upper half
    /// plane, and `heisenberg3` the norm of `log(a⁻¹b)`.
    pub fn distance(&self, a: &GroupPoint, b: &GroupPoint) -> f64 {
        self.distance_raw(&a.0, &b.0)
    }

    pub(crate) fn distance_raw(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            GroupKind::Euclidean(_) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            GroupKind::Torus2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = (x - y).abs();
                    let d = d.min(1.0 - d);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            GroupKind::AffPlus => {
                let dx = b[0] - a[0];
                let dy = b[1] - a[1];
                let s = ((dx * dx + dy * dy) / (4.0 * a[0] * b[0])).sqrt();
                2.0 * s.asinh()
            }
            GroupKind::Heisenberg3 => {
                // log(a⁻¹b) = (Δ₁ − ½(a₂ + b₂)Δ₃, Δ₂, Δ₃)
                let d1 = b[0] - a[0];
                let d2 = b[1] - a[1];
                let d3 = b[2] - a[2];
                let t = d1 - 0.5 * (a[1] + b[1]) * d3;
                (t * t + d2 * d2 + d3 * d3).sqrt()
            }
        }
    }

    /// Chart difference `b − a`, wrapped into [-1/2, 1/2) on the torus.
    pub fn chart_difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| match self.kind {
                GroupKind::Torus2 => wrap_centered(y - x),
                _ => y - x,
            })
            .collect()
    }

    /// Lie bracket from the structure constants.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dimension;
        let mut out = vec![0.0; d];
        for (i, xi) in x.iter().enumerate().take(d) {
            for (j, yj) in y.iter().enumerate().take(d) {
                let xy = xi * yj;
                if xy == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += xy * self.structure_constants[(i * d + j) * d + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad(X) = [X, ·]` in the chart basis.
    pub fn ad_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dimension;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut ej = vec![0.0; d];
            ej[j] = 1.0;
            let col = self.bracket(x, &ej);
            for k in 0..d {
                m[(k, j)] = col[k];
            }
        }
        m
    }
}

/// `(eᵃ − 1)/a`, continuous at 0.
fn exprel(a: f64) -> f64 {
    if a.abs() < 1e-5 {
        1.0 + a / 2.0 + a * a / 6.0
    } else {
        a.exp_m1() / a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aff_product_example() {
        let g = GroupSpec::aff_plus();
        let p = g
            .product(&GroupPoint(vec![2.0, 3.0]), &GroupPoint(vec![4.0, 5.0]))
            .unwrap();
        assert_eq!(p.0, vec![8.0, 13.0]);
    }

    #[test]
    fn heisenberg_product_example() {
        let g = GroupSpec::heisenberg3();
        let p = g
            .product(&GroupPoint(vec![1.0, 2.0, 3.0]), &GroupPoint(vec![4.0, 5.0, 6.0]))
            .unwrap();
        assert_eq!(p.0, vec![17.0, 7.0, 9.0]);
    }

    #[test]
    fn identity_is_neutral() {
        for g in [
            GroupSpec::euclidean(3),
            GroupSpec::aff_plus(),
            GroupSpec::heisenberg3(),
            GroupSpec::torus2(),
        ] {
            let e = g.identity();
            let x = match g.kind() {
                GroupKind::AffPlus => GroupPoint(vec![0.7, -1.3]),
                GroupKind::Torus2 => GroupPoint(vec![0.3, 0.9]),
                _ => GroupPoint((0..g.dimension()).map(|i| i as f64 - 0.4).collect()),
            };
            assert_eq!(g.product(&e, &x).unwrap(), x);
            assert_eq!(g.product(&x, &e).unwrap(), x);
            assert_eq!(g.inverse(&e).unwrap(), e);
        }
    }

    #[test]
    fn inverse_examples() {
        let aff = GroupSpec::aff_plus();
        assert_eq!(aff.inverse(&GroupPoint(vec![2.0, 3.0])).unwrap().0, vec![0.5, -1.5]);
        let t = GroupSpec::torus2();
        let inv = t.inverse(&GroupPoint(vec![0.25, 0.75])).unwrap();
        assert_eq!(inv.0, vec![0.75, 0.25]);
    }

    #[test]
    fn chart_violations() {
        let aff = GroupSpec::aff_plus();
        let bad = GroupPoint(vec![0.0, 1.0]);
        assert!(matches!(
            aff.product(&bad, &aff.identity()),
            Err(Error::ChartViolation { .. })
        ));
        assert!(matches!(aff.inverse(&GroupPoint(vec![-1.0, 0.0])), Err(Error::ChartViolation { .. })));
        let t = GroupSpec::torus2();
        assert!(matches!(
            t.product(&GroupPoint(vec![1.0, 0.0]), &t.identity()),
            Err(Error::ChartViolation { .. })
        ));
        assert!(matches!(
            GroupSpec::euclidean(2).product(&GroupPoint(vec![f64::NAN, 0.0]), &GroupPoint(vec![0.0, 0.0])),
            Err(Error::ChartViolation { .. })
        ));
    }

    #[test]
    fn torus_log_boundary_is_outside_chart() {
        let t = GroupSpec::torus2();
        let err = t.log_map(&GroupPoint(vec![0.5, 0.1])).unwrap_err();
        assert!(matches!(err, Error::OutsideChart { .. }));
        let x = t.log_map(&GroupPoint(vec![0.75, 0.1])).unwrap();
        assert!((x.0[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn exp_zero_is_identity() {
        for g in [
            GroupSpec::euclidean(2),
            GroupSpec::aff_plus(),
            GroupSpec::heisenberg3(),
            GroupSpec::torus2(),
        ] {
            let e = g.exp_map(&AlgebraVector::zeros(g.dimension())).unwrap();
            assert_eq!(e, g.identity());
        }
        let x = AlgebraVector(vec![1.5, -2.0]);
        assert_eq!(GroupSpec::euclidean(2).exp_map(&x).unwrap().0, x.0);
    }

    #[test]
    fn aff_exp_small_argument_is_continuous() {
        let g = GroupSpec::aff_plus();
        let a = g.exp_map(&AlgebraVector(vec![1e-6, 2.0])).unwrap();
        let b = g.exp_map(&AlgebraVector(vec![2e-5, 2.0])).unwrap();
        assert!((a.0[1] - 2.0).abs() < 1e-5);
        assert!((b.0[1] - 2.0 * (2e-5f64).exp_m1() / 2e-5).abs() < 1e-12);
    }

    #[test]
    fn brackets() {
        let h = GroupSpec::heisenberg3();
        assert_eq!(h.bracket(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(h.bracket(&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]), vec![-1.0, 0.0, 0.0]);
        let a = GroupSpec::aff_plus();
        assert_eq!(a.bracket(&[1.0, 0.0], &[0.0, 1.0]), vec![0.0, 1.0]);
        assert!(GroupSpec::euclidean(3).is_abelian());
        assert!(!h.is_abelian());
    }

    #[test]
    fn distance_basics() {
        let e = GroupSpec::euclidean(2);
        assert_eq!(e.distance(&GroupPoint(vec![0.0, 0.0]), &GroupPoint(vec![3.0, 4.0])), 5.0);
        let t = GroupSpec::torus2();
        let d = t.distance(&GroupPoint(vec![0.05, 0.0]), &GroupPoint(vec![0.95, 0.0]));
        assert!((d - 0.1).abs() < 1e-12);
        let a = GroupSpec::aff_plus();
        let g = GroupPoint(vec![1.7, 0.3]);
        assert_eq!(a.distance(&g, &g), 0.0);
    }

    #[test]
    fn group_names_round_trip() {
        for name in ["euclidean:4", "aff_plus", "heisenberg3", "torus2"] {
            assert_eq!(GroupSpec::from_name(name).unwrap().name(), name);
        }
        assert!(GroupSpec::from_name("euclidean:0").is_err());
        assert!(GroupSpec::from_name("so3").is_err());
    }
}
