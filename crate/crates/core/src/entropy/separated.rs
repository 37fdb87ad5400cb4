use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::{GroupKind, GroupPoint, GroupSpec};
use crate::system::LinearSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedResult {
    pub n: usize,
    pub eps: f64,
    pub s_n: usize,
    /// Grid indices of the members, in insertion order.
    pub points: Vec<usize>,
    /// For every rejected grid point, the member that was within `eps` of it
    /// at all times `0..=n`.
    pub witnesses: Vec<(usize, usize)>,
}

/// Orbits of the uncontrolled map, `orbits[i][j·d..(j+1)·d] = f₀ʲ(x_i)`.
fn orbits(sys: &LinearSystem, grid: &[GroupPoint], n: usize) -> Vec<Vec<f64>> {
    let d = sys.dimension();
    grid.iter()
        .map(|g| {
            let mut out = Vec::with_capacity((n + 1) * d);
            out.extend_from_slice(&g.0);
            let mut next = vec![0.0; d];
            for j in 0..n {
                sys.f0_into(&out[j * d..(j + 1) * d], &mut next);
                out.extend_from_slice(&next);
            }
            out
        })
        .collect()
}

fn within_for_all_times(group: &GroupSpec, a: &[f64], b: &[f64], n: usize, d: usize, eps: f64) -> bool {
    (0..=n).rev().all(|j| group.distance_raw(&a[j * d..(j + 1) * d], &b[j * d..(j + 1) * d]) <= eps)
}

/// Uniform grid of cells of side at least `eps` on final-time positions.
struct CellHash {
    torus_cells: Option<i64>,
    size: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CellHash {
    fn new(kind: GroupKind, eps: f64) -> Self {
        match kind {
            GroupKind::Torus2 => {
                let m = ((1.0 / eps).floor() as i64).max(1);
                CellHash { torus_cells: Some(m), size: 1.0 / m as f64, cells: HashMap::new() }
            }
            _ => CellHash { torus_cells: None, size: eps, cells: HashMap::new() },
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .map(|v| {
                let c = (v / self.size).floor() as i64;
                match self.torus_cells {
                    Some(m) => c.rem_euclid(m),
                    None => c,
                }
            })
            .collect()
    }

    fn insert(&mut self, x: &[f64], id: usize) {
        let k = self.key(x);
        self.cells.entry(k).or_default().push(id);
    }

    /// Ids in the 3ᵈ neighbourhood of `x`'s cell, newest first per cell.
    fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let base = self.key(x);
        let d = base.len();
        let mut keys: Vec<Vec<i64>> = Vec::with_capacity(3usize.pow(d as u32));
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let k: Vec<i64> = base
                .iter()
                .map(|&b| {
                    let off = (c % 3) as i64 - 1;
                    c /= 3;
                    match self.torus_cells {
                        Some(m) => (b + off).rem_euclid(m),
                        None => b + off,
                    }
                })
                .collect();
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut out = Vec::new();
        for k in keys {
            if let Some(ids) = self.cells.get(&k) {
                out.extend(ids.iter().rev());
            }
        }
        out
    }
}

fn flat(kind: GroupKind) -> bool {
    matches!(kind, GroupKind::Euclidean(_) | GroupKind::Torus2)
}

/// Greedy maximal `(n, ε)`-separated subset of the grid under `f₀`, points
/// inserted in grid order.
pub fn separated_set(sys: &LinearSystem, grid: &[GroupPoint], n: usize, eps: f64) -> SeparatedResult {
    let d = sys.dimension();
    let group = &sys.group;
    let orb = orbits(sys, grid, n);
    let mut members: Vec<usize> = Vec::new();
    let mut witnesses = Vec::new();
    let mut hash = flat(group.kind()).then(|| CellHash::new(group.kind(), eps));
    for (i, o) in orb.iter().enumerate() {
        let last = &o[n * d..(n + 1) * d];
        let candidates: Vec<usize> = match &hash {
            Some(h) => h.neighbours(last),
            None => (0..members.len()).rev().collect(),
        };
        let blocker = candidates
            .into_iter()
            .map(|m| members[m])
            .find(|&y| within_for_all_times(group, o, &orb[y], n, d, eps));
        match blocker {
            Some(y) => witnesses.push((i, y)),
            None => {
                if let Some(h) = hash.as_mut() {
                    h.insert(last, members.len());
                }
                members.push(i);
            }
        }
    }
    SeparatedResult { n, eps, s_n: members.len(), points: members, witnesses }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedCheck {
    /// Every pair of members is `(n, ε)`-separated.
    pub separated: bool,
    /// Every grid point lies within `ε` of some member at all times.
    pub spanning: bool,
    pub pairs_checked: usize,
}

/// Re-verifies both defining properties with the public distance. Pairs of
/// members farther than `ε` apart at time `n` are separated by definition;
/// for flat groups only closer pairs are examined.
pub fn check_separated(sys: &LinearSystem, grid: &[GroupPoint], result: &SeparatedResult) -> Result<SeparatedCheck> {
    let group = &sys.group;
    let (n, eps) = (result.n, result.eps);
    let traj: HashMap<usize, Vec<GroupPoint>> = result
        .points
        .iter()
        .map(|&i| Ok((i, orbit_points(sys, &grid[i], n)?)))
        .collect::<Result<_>>()?;
    let close_all = |a: &[GroupPoint], b: &[GroupPoint]| a.iter().zip(b).all(|(x, y)| group.distance(x, y) <= eps);

    let mut pairs = 0;
    let mut separated = true;
    if flat(group.kind()) {
        let mut hash = CellHash::new(group.kind(), eps);
        for (k, &i) in result.points.iter().enumerate() {
            let last = &traj[&i][n].0;
            for m in hash.neighbours(last) {
                pairs += 1;
                if close_all(&traj[&i], &traj[&result.points[m]]) {
                    separated = false;
                }
            }
            hash.insert(last, k);
        }
    } else {
        for (k, &i) in result.points.iter().enumerate() {
            for &j in &result.points[..k] {
                pairs += 1;
                if close_all(&traj[&i], &traj[&j]) {
                    separated = false;
                }
            }
        }
    }

    let mut rejected = vec![false; grid.len()];
    let mut spanning = true;
    for &(i, y) in &result.witnesses {
        rejected[i] = true;
        let ti = orbit_points(sys, &grid[i], n)?;
        if !close_all(&ti, &traj[&y]) {
            spanning = false;
        }
    }
    for &i in &result.points {
        rejected[i] = true;
    }
    if rejected.iter().any(|r| !r) {
        spanning = false;
    }
    Ok(SeparatedCheck { separated, spanning, pairs_checked: pairs })
}

fn orbit_points(sys: &LinearSystem, g: &GroupPoint, n: usize) -> Result<Vec<GroupPoint>> {
    let mut out = vec![g.clone()];
    for _ in 0..n {
        let next = sys.f0(out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn segment(lo: [f64; 2], hi: [f64; 2], count: usize) -> Vec<GroupPoint> {
        (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                GroupPoint(vec![lo[0] + t * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])])
            })
            .collect()
    }

    #[test]
    fn huge_eps_gives_one_point() {
        let sys = presets::torus_cat();
        let grid = segment([0.1, 0.3], [0.3, 0.3], 200);
        let r = separated_set(&sys, &grid, 5, 2.0);
        assert_eq!(r.s_n, 1);
        let c = check_separated(&sys, &grid, &r).unwrap();
        assert!(c.separated && c.spanning);
    }

    #[test]
    fn cat_map_separated_sets_grow() {
        let sys = presets::torus_cat();
        let grid = segment([0.1, 0.3], [0.3, 0.3], 20_000);
        let s: Vec<usize> = (2..=6).map(|n| separated_set(&sys, &grid, n, 0.05).s_n).collect();
        for w in s.windows(2) {
            let ratio = w[1] as f64 / w[0] as f64;
            assert!(ratio > 2.0 && ratio < 3.3, "{s:?}");
        }
        let r = separated_set(&sys, &grid, 6, 0.05);
        let c = check_separated(&sys, &grid, &r).unwrap();
        assert!(c.separated && c.spanning);
    }

    #[test]
    fn identity_map_does_not_grow() {
        let sys = presets::heisenberg_example();
        // f₀ fixes the x1 axis pointwise
        let grid: Vec<GroupPoint> = (0..50).map(|i| GroupPoint(vec![i as f64 / 49.0, 0.0, 0.0])).collect();
        let a = separated_set(&sys, &grid, 1, 0.1).s_n;
        let b = separated_set(&sys, &grid, 8, 0.1).s_n;
        assert_eq!(a, b);
        let r = separated_set(&sys, &grid, 8, 0.1);
        let c = check_separated(&sys, &grid, &r).unwrap();
        assert!(c.separated && c.spanning);
    }
}
