use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupPoint, GroupSpec};
use crate::system::{ControlWord, LinearSystem};

/// Axis-aligned box in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Config(format!("box bounds {lo:?} / {hi:?} are not ordered")));
        }
        Ok(BoxSet { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn contains_box(&self, other: &BoxSet) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn inflate(&self, eps: f64) -> BoxSet {
        BoxSet {
            lo: self.lo.iter().map(|x| x - eps).collect(),
            hi: self.hi.iter().map(|x| x + eps).collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Grid with spacing at most `rho` per axis, endpoints included; a
    /// degenerate axis contributes its single value.
    pub fn grid(&self, rho: f64) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| {
                let extent = b - a;
                if extent <= 0.0 {
                    return vec![a];
                }
                let n = (extent / rho - 1e-9).ceil().max(1.0) as usize;
                (0..=n).map(|i| if i == n { b } else { a + extent * i as f64 / n as f64 }).collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &v in axis {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

/// A compact `K ⊆ Q` sampled on a grid, together with the inflation radius
/// used for `N_ε(Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissiblePair {
    pub k: BoxSet,
    pub q: BoxSet,
    pub eps: f64,
    pub rho: f64,
    pub k_grid: Vec<GroupPoint>,
    q_eps: BoxSet,
}

impl AdmissiblePair {
    pub fn new(group: &GroupSpec, k: BoxSet, q: BoxSet, eps: f64, rho: f64) -> Result<Self> {
        let d = group.dimension();
        if k.dim() != d || q.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: k.dim().min(q.dim()) });
        }
        if !(eps > 0.0) || !(rho > 0.0) {
            return Err(Error::Config("eps and rho must be positive".into()));
        }
        if rho > eps / 4.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!("grid resolution rho = {rho} exceeds eps/4 = {}", eps / 4.0)));
        }
        if !q.contains_box(&k) {
            return Err(Error::Config("K is not contained in Q".into()));
        }
        let q_eps = q.inflate(eps);
        group
            .check(&q_eps.lo)
            .map_err(|_| Error::Config(format!("N_eps(Q) leaves the chart of {}", group.name())))?;
        let k_grid = k
            .grid(rho)
            .into_iter()
            .map(|p| group.point(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(AdmissiblePair { k, q, eps, rho, k_grid, q_eps })
    }

    /// Same `K`, `Q` and grid with a different inflation radius.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || self.rho > eps / 4.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!("grid resolution rho = {} exceeds eps/4 = {}", self.rho, eps / 4.0)));
        }
        let mut out = self.clone();
        out.eps = eps;
        out.q_eps = self.q.inflate(eps);
        Ok(out)
    }

    pub fn q_eps(&self) -> &BoxSet {
        &self.q_eps
    }

    pub fn len(&self) -> usize {
        self.k_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_grid.is_empty()
    }
}

/// One word per grid point keeping its trajectory in `Q` for `horizon` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityCertificate {
    pub horizon: usize,
    pub words: Vec<ControlWord>,
}

/// Search nodes allowed per grid point before it is declared a failure.
pub const CERTIFY_NODE_BUDGET: u64 = 1_000_000;

fn quantize(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * 1e9).round() as i64).collect()
}

struct Certifier<'a> {
    sys: &'a LinearSystem,
    q: &'a BoxSet,
    center: Vec<f64>,
    horizon: usize,
    dead: HashSet<(usize, Vec<i64>)>,
    nodes: u64,
    budget: u64,
    scratch: Vec<f64>,
}

impl Certifier<'_> {
    fn search(&mut self, depth: usize, x: &[f64], word: &mut Vec<usize>) -> Option<bool> {
        if depth == self.horizon {
            return Some(true);
        }
        let key = (depth, quantize(x));
        if self.dead.contains(&key) {
            return Some(false);
        }
        let d = x.len();
        let alphabet = self.sys.control.alphabet();
        let mut children: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(alphabet.len());
        for (i, u) in alphabet.iter().enumerate() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return None;
            }
            let mut next = vec![0.0; d];
            self.sys.step_into(x, u, &mut self.scratch, &mut next);
            if self.q.contains(&next) {
                let dist: f64 = next.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
                children.push((dist, i, next));
            }
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, i, next) in children {
            word.push(i);
            match self.search(depth + 1, &next, word) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
            word.pop();
        }
        self.dead.insert(key);
        Some(false)
    }
}

/// Depth-first search with controls ordered by the distance of the next
/// state to the centre of `Q`, and a memo of states known to fail.
pub fn certify_admissible(sys: &LinearSystem, pair: &AdmissiblePair, horizon: usize) -> Result<AdmissibilityCertificate> {
    certify_with_budget(sys, pair, horizon, CERTIFY_NODE_BUDGET)
}

pub fn certify_with_budget(sys: &LinearSystem, pair: &AdmissiblePair, horizon: usize, budget: u64) -> Result<AdmissibilityCertificate> {
    let d = sys.dimension();
    let alphabet = sys.control.alphabet();
    let mut cert = Certifier {
        sys,
        q: &pair.q,
        center: pair.q.center(),
        horizon,
        dead: HashSet::new(),
        nodes: 0,
        budget,
        scratch: vec![0.0; 2 * d],
    };
    let mut words = Vec::with_capacity(pair.len());
    let mut failed = Vec::new();
    for (idx, g) in pair.k_grid.iter().enumerate() {
        if !pair.q.contains(&g.0) {
            failed.push(idx);
            continue;
        }
        cert.nodes = 0;
        let mut word = Vec::with_capacity(horizon);
        match cert.search(0, &g.0, &mut word) {
            Some(true) => words.push(ControlWord(word.iter().map(|&i| alphabet[i].clone()).collect())),
            _ => failed.push(idx),
        }
    }
    if failed.is_empty() {
        Ok(AdmissibilityCertificate { horizon, words })
    } else {
        Err(Error::NotAdmissibleAtResolution {
            failed: failed.len(),
            total: pair.len(),
            horizon,
            points: failed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::system::ControlRange;
    use nalgebra::DMatrix;

    fn scalar(a: f64, delta: f64) -> LinearSystem {
        LinearSystem::euclidean(
            "scalar",
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
            ControlRange::new(vec![-1.0], vec![1.0], delta).unwrap(),
        )
        .unwrap()
    }

    fn interval(lo: f64, hi: f64) -> BoxSet {
        BoxSet::new(vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = interval(-0.5, 0.5).grid(0.01);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], vec![-0.5]);
        assert_eq!(g[100], vec![0.5]);
        let b = BoxSet::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.grid(0.25).len(), 5);
    }

    #[test]
    fn pair_validation() {
        let g = GroupSpec::euclidean(1);
        assert!(AdmissiblePair::new(&g, interval(-0.5, 0.5), interval(-1.0, 1.0), 0.05, 0.02).is_err());
        assert!(AdmissiblePair::new(&g, interval(-1.5, 0.5), interval(-1.0, 1.0), 0.05, 0.01).is_err());
        let p = AdmissiblePair::new(&g, interval(-0.5, 0.5), interval(-1.0, 1.0), 0.05, 0.0125).unwrap();
        assert_eq!(p.q_eps().hi, vec![1.05]);
    }

    #[test]
    fn equilibrium_is_certified_by_the_zero_word() {
        let sys = presets::aff_example();
        let e = sys.group.identity().0;
        let k = BoxSet::new(e.clone(), e).unwrap();
        let q = BoxSet::new(vec![0.5, -1.0], vec![1.5, 1.0]).unwrap();
        let pair = AdmissiblePair::new(&sys.group, k, q, 0.1, 0.025).unwrap();
        let c = certify_admissible(&sys, &pair, 20).unwrap();
        assert!(c.words[0].0.iter().all(|u| u == &vec![0.0]));
    }

    #[test]
    fn saturating_feedback_region_is_admissible() {
        let sys = scalar(2.0, 0.25);
        let g = GroupSpec::euclidean(1);
        let pair = AdmissiblePair::new(&g, interval(-0.4, 0.4), interval(-1.0, 1.0), 0.1, 0.025).unwrap();
        let c = certify_admissible(&sys, &pair, 12).unwrap();
        for (w, x) in c.words.iter().zip(&pair.k_grid) {
            let traj = sys.trajectory_direct(12, x, w).unwrap();
            assert!(traj.iter().all(|p| p.0[0].abs() <= 1.0));
        }
    }

    #[test]
    fn escaping_point_is_reported() {
        let sys = scalar(3.0, 0.25);
        let g = GroupSpec::euclidean(1);
        let pair = AdmissiblePair::new(&g, interval(0.0, 0.9), interval(-1.0, 1.0), 0.4, 0.1).unwrap();
        match certify_admissible(&sys, &pair, 4) {
            Err(Error::NotAdmissibleAtResolution { points, total, .. }) => {
                assert_eq!(total, 10);
                assert!(points.contains(&9));
                assert!(!points.contains(&0));
            }
            other => panic!("{other:?}"),
        }
    }
}
