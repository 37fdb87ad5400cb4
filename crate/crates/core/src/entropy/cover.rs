use std::collections::BinaryHeap;
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_BUDGET, DEFAULT_NODE_BUDGET};
use crate::error::{Error, Result};
use crate::system::{ControlWord, LinearSystem};

use super::pair::{AdmissibilityCertificate, AdmissiblePair};
use super::spanning::{coverage_universe, CoverageUniverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMethod {
    Greedy,
    Exact,
}

impl CoverMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(CoverMethod::Greedy),
            "exact" => Ok(CoverMethod::Exact),
            other => Err(Error::Config(format!("mode must be \"greedy\" or \"exact\", got {other:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CoverMethod::Greedy => "greedy",
            CoverMethod::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// `(word, point)` evaluations during enumeration.
    pub evaluations: u64,
    /// Branch-and-bound nodes in exact mode.
    pub nodes: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { evaluations: DEFAULT_BUDGET, nodes: DEFAULT_NODE_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningResult {
    pub n: usize,
    pub r_inv: usize,
    pub cover: Vec<(ControlWord, Vec<usize>)>,
    pub method: CoverMethod,
    /// Maximal coverage sets the cover was chosen from.
    pub universe_size: usize,
    pub evaluations: u64,
}

fn uncovered_point(u: &CoverageUniverse) -> Option<usize> {
    let mut hit = vec![false; u.n_points];
    for s in &u.sets {
        for &p in &s.points {
            hit[p as usize] = true;
        }
    }
    hit.iter().position(|h| !h)
}

/// Lazy greedy: most newly covered points first, earliest set on ties.
pub fn greedy_cover(u: &CoverageUniverse) -> Result<Vec<usize>> {
    if let Some(p) = uncovered_point(u) {
        return Err(Error::InfeasibleCover { point: p, n: u.n });
    }
    let mut covered = vec![false; u.n_points];
    let mut remaining = u.n_points;
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> =
        u.sets.iter().enumerate().map(|(i, s)| (s.points.len(), Reverse(i))).collect();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let (stale, Reverse(i)) = heap.pop().expect("feasible instance");
        let fresh = u.sets[i].points.iter().filter(|&&p| !covered[p as usize]).count();
        if fresh == 0 {
            continue;
        }
        if fresh < stale {
            heap.push((fresh, Reverse(i)));
            continue;
        }
        for &p in &u.sets[i].points {
            if !covered[p as usize] {
                covered[p as usize] = true;
                remaining -= 1;
            }
        }
        chosen.push(i);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

struct Exact<'a> {
    u: &'a CoverageUniverse,
    sets_of: Vec<Vec<usize>>,
    max_size: usize,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Exact<'_> {
    fn lower_bound(&self, covered: &[bool], remaining: usize, order: &[usize]) -> usize {
        let by_size = remaining.div_ceil(self.max_size);
        // uncovered points with pairwise disjoint candidate sets need distinct sets
        let mut blocked = vec![false; self.u.sets.len()];
        let mut packing = 0;
        for &p in order {
            if covered[p] {
                continue;
            }
            if self.sets_of[p].iter().all(|&s| !blocked[s]) {
                packing += 1;
                for &s in &self.sets_of[p] {
                    blocked[s] = true;
                }
            }
        }
        by_size.max(packing)
    }

    fn search(&mut self, covered: &mut Vec<bool>, remaining: usize, chosen: &mut Vec<usize>, order: &[usize]) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        if remaining == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return Ok(());
        }
        if chosen.len() + self.lower_bound(covered, remaining, order) >= self.best.len() {
            return Ok(());
        }
        // branch on the uncovered point with the fewest candidate sets
        let p = *order.iter().find(|&&p| !covered[p]).expect("remaining > 0");
        let mut cands: Vec<(usize, usize)> = self.sets_of[p]
            .iter()
            .map(|&s| (self.u.sets[s].points.iter().filter(|&&q| !covered[q as usize]).count(), s))
            .collect();
        cands.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, s) in cands {
            let newly: Vec<usize> = self.u.sets[s]
                .points
                .iter()
                .map(|&q| q as usize)
                .filter(|&q| !covered[q])
                .collect();
            for &q in &newly {
                covered[q] = true;
            }
            chosen.push(s);
            self.search(covered, remaining - newly.len(), chosen, order)?;
            chosen.pop();
            for &q in &newly {
                covered[q] = false;
            }
        }
        Ok(())
    }
}

/// Minimum set cover by branch and bound, seeded with the greedy solution.
pub fn exact_cover(u: &CoverageUniverse, node_budget: u64) -> Result<Vec<usize>> {
    let greedy = greedy_cover(u)?;
    let mut sets_of = vec![Vec::new(); u.n_points];
    for (i, s) in u.sets.iter().enumerate() {
        for &p in &s.points {
            sets_of[p as usize].push(i);
        }
    }
    let mut order: Vec<usize> = (0..u.n_points).collect();
    order.sort_by_key(|&p| (sets_of[p].len(), p));
    let max_size = u.sets.iter().map(|s| s.points.len()).max().unwrap_or(1).max(1);
    let mut ex = Exact { u, sets_of, max_size, best: greedy, nodes: 0, budget: node_budget };
    let mut covered = vec![false; u.n_points];
    let mut chosen = Vec::new();
    ex.search(&mut covered, u.n_points, &mut chosen, &order)?;
    let mut best = ex.best;
    best.sort_unstable();
    Ok(best)
}

/// `r_inv(n, K_grid, N_ε(Q))` over the discretized alphabet.
pub fn r_inv_estimate(
    sys: &LinearSystem,
    pair: &AdmissiblePair,
    cert: &AdmissibilityCertificate,
    n: usize,
    method: CoverMethod,
    budgets: Budgets,
) -> Result<SpanningResult> {
    if cert.horizon < n || cert.words.len() != pair.len() {
        return Err(Error::Config(format!(
            "admissibility certificate has horizon {} but n = {n} was requested",
            cert.horizon
        )));
    }
    let universe = coverage_universe(sys, pair, n, budgets.evaluations)?;
    let chosen = match method {
        CoverMethod::Greedy => greedy_cover(&universe)?,
        CoverMethod::Exact => exact_cover(&universe, budgets.nodes)?,
    };
    let alphabet = sys.control.alphabet();
    let cover = chosen
        .iter()
        .map(|&i| {
            let c = &universe.sets[i];
            let w = ControlWord(c.word.iter().map(|&l| alphabet[l].clone()).collect());
            (w, c.points.iter().map(|&p| p as usize).collect())
        })
        .collect();
    Ok(SpanningResult {
        n,
        r_inv: chosen.len(),
        cover,
        method,
        universe_size: universe.sets.len(),
        evaluations: universe.evaluations,
    })
}

/// Replays every cover word through `trajectory_direct` and checks the
/// definition of a spanning set. Returns the first violation.
pub fn verify_cover(sys: &LinearSystem, pair: &AdmissiblePair, result: &SpanningResult) -> Result<Option<(usize, usize)>> {
    let mut hit = vec![false; pair.len()];
    for (w, points) in &result.cover {
        for &p in points {
            let traj = sys.trajectory_direct(result.n, &pair.k_grid[p], w)?;
            if let Some(j) = traj.iter().position(|x| !pair.q_eps().contains(&x.0)) {
                return Ok(Some((p, j)));
            }
            hit[p] = true;
        }
    }
    Ok(hit.iter().position(|h| !h).map(|p| (p, 0)))
}
