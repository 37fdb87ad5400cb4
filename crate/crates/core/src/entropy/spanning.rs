//! Enumeration of the distinct coverage sets of control words of length `n`.
//!
//! A word covers a grid point when the point's trajectory under the word stays
//! in `N_ε(Q)` at every step. Prefixes are explored depth-first in
//! lexicographic alphabet order; each prefix carries the set of grid points it
//! still serves and their current positions, so a `(word, point)` pair is
//! discarded at its first exit. The future of a prefix depends only on its
//! depth, `φ(j, e, w)` and the surviving set; a prefix whose surviving set is
//! contained in that of an earlier prefix with the same depth and offset can
//! only produce coverage sets dominated by ones already found, so it is
//! skipped.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::system::LinearSystem;

use super::pair::AdmissiblePair;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    /// Alphabet indices of the lexicographically first word with this coverage.
    pub word: Vec<usize>,
    /// Sorted grid indices.
    pub points: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageUniverse {
    pub n: usize,
    pub n_points: usize,
    /// Maximal coverage sets in order of their representative words.
    pub sets: Vec<Coverage>,
    /// `(word, point)` step evaluations spent.
    pub evaluations: u64,
    pub memo_hits: u64,
    pub dominance_prunes: u64,
}

#[derive(Hash, PartialEq, Eq)]
struct MemoKey {
    depth: usize,
    offset: Vec<i64>,
}

/// Surviving sets remembered per memo key.
const VISITS_KEPT: usize = 4;

struct Search<'a> {
    sys: &'a LinearSystem,
    lo: &'a [f64],
    hi: &'a [f64],
    n: usize,
    d: usize,
    budget: u64,
    evaluations: u64,
    memo: HashMap<MemoKey, Vec<Vec<u32>>>,
    memo_hits: u64,
    dominance_prunes: u64,
    finals: Vec<Coverage>,
    seen: HashMap<Vec<u32>, usize>,
    /// point -> indices into `finals` containing it
    index: Vec<Vec<u32>>,
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

const DOMINANCE_PROBES: usize = 8;

impl Search<'_> {
    fn dominated(&self, s: &[u32]) -> bool {
        let probe = [s[0], s[s.len() / 2], s[s.len() - 1]];
        let list = probe
            .iter()
            .map(|&p| &self.index[p as usize])
            .min_by_key(|l| l.len())
            .expect("nonempty probe");
        list.iter()
            .rev()
            .take(DOMINANCE_PROBES)
            .any(|&f| is_subset(s, &self.finals[f as usize].points))
    }

    fn record(&mut self, word: &[usize], points: Vec<u32>) {
        if self.seen.contains_key(&points) {
            return;
        }
        let id = self.finals.len() as u32;
        for &p in &points {
            self.index[p as usize].push(id);
        }
        self.seen.insert(points.clone(), id as usize);
        self.finals.push(Coverage { word: word.to_vec(), points });
    }

    fn expand(&mut self, depth: usize, s: &[u32], pos: &[f64], offset: &[f64], word: &mut Vec<usize>) -> Result<()> {
        let d = self.d;
        let alphabet = self.sys.control.alphabet();
        let mut scratch = vec![0.0; 2 * d];
        let mut child_s: Vec<u32> = Vec::with_capacity(s.len());
        let mut child_pos: Vec<f64> = Vec::with_capacity(pos.len());
        let mut next = vec![0.0; d];
        let mut child_off = vec![0.0; d];
        for (letter, u) in alphabet.iter().enumerate() {
            self.evaluations += s.len() as u64;
            if self.evaluations > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            child_s.clear();
            child_pos.clear();
            for (i, &p) in s.iter().enumerate() {
                self.sys.step_into(&pos[i * d..(i + 1) * d], u, &mut scratch, &mut next);
                let inside = next
                    .iter()
                    .zip(self.lo.iter().zip(self.hi))
                    .all(|(v, (a, b))| *a <= *v && *v <= *b);
                if inside {
                    child_s.push(p);
                    child_pos.extend_from_slice(&next);
                }
            }
            if child_s.is_empty() {
                continue;
            }
            word.push(letter);
            if depth + 1 == self.n {
                self.record(word, child_s.clone());
            } else {
                self.sys.step_into(offset, u, &mut scratch, &mut child_off);
                let key = MemoKey {
                    depth: depth + 1,
                    offset: child_off.iter().map(|v| (v * 1e9).round() as i64).collect(),
                };
                let visits = self.memo.entry(key).or_default();
                let covered = visits.iter().any(|v| is_subset(&child_s, v));
                if !covered && visits.len() < VISITS_KEPT {
                    visits.push(child_s.clone());
                }
                if covered {
                    self.memo_hits += 1;
                } else if !self.finals.is_empty() && self.dominated(&child_s) {
                    self.dominance_prunes += 1;
                } else {
                    let (cs, cp, co) = (child_s.clone(), child_pos.clone(), child_off.clone());
                    self.expand(depth + 1, &cs, &cp, &co, word)?;
                }
            }
            word.pop();
        }
        Ok(())
    }
}

/// Keeps only sets not contained in another set; among equal sets the first.
pub fn dominance_filter(sets: Vec<Coverage>, n_points: usize) -> Vec<Coverage> {
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[b].points.len().cmp(&sets[a].points.len()).then(a.cmp(&b)));
    let mut index: Vec<Vec<usize>> = vec![Vec::new(); n_points];
    let mut keep = vec![false; sets.len()];
    for &i in &order {
        let s = &sets[i].points;
        let list = s.iter().map(|&p| &index[p as usize]).min_by_key(|l| l.len());
        let dominated = match list {
            Some(l) => l.iter().any(|&k| is_subset(s, &sets[k].points)),
            None => true,
        };
        if !dominated {
            keep[i] = true;
            for &p in s {
                index[p as usize].push(i);
            }
        }
    }
    sets.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect()
}

/// All maximal coverage sets of words of length `n ≥ 1` over the alphabet.
pub fn coverage_universe(sys: &LinearSystem, pair: &AdmissiblePair, n: usize, budget: u64) -> Result<CoverageUniverse> {
    let d = sys.dimension();
    let n_points = pair.len();
    let q = pair.q_eps();
    let root_s: Vec<u32> = (0..n_points as u32).filter(|&i| q.contains(&pair.k_grid[i as usize].0)).collect();
    if n == 0 {
        let sets = if root_s.is_empty() { Vec::new() } else { vec![Coverage { word: Vec::new(), points: root_s }] };
        return Ok(CoverageUniverse { n, n_points, sets, evaluations: 0, memo_hits: 0, dominance_prunes: 0 });
    }
    let root_pos: Vec<f64> = root_s.iter().flat_map(|&i| pair.k_grid[i as usize].0.iter().cloned()).collect();
    let e = sys.group.identity().0;
    let alphabet = sys.control.alphabet();

    // one independent search per first letter, merged in letter order
    let parts: Vec<Result<Search>> = (0..alphabet.len())
        .into_par_iter()
        .map(|first| {
            let mut search = Search {
                sys,
                lo: &q.lo,
                hi: &q.hi,
                n,
                d,
                budget,
                evaluations: 0,
                memo: HashMap::new(),
                memo_hits: 0,
                dominance_prunes: 0,
                finals: Vec::new(),
                seen: HashMap::new(),
                index: vec![Vec::new(); n_points],
            };
            let u = &alphabet[first];
            let mut scratch = vec![0.0; 2 * d];
            let mut next = vec![0.0; d];
            let mut s = Vec::new();
            let mut pos = Vec::new();
            search.evaluations += root_s.len() as u64;
            for (i, &p) in root_s.iter().enumerate() {
                sys.step_into(&root_pos[i * d..(i + 1) * d], u, &mut scratch, &mut next);
                if q.contains(&next) {
                    s.push(p);
                    pos.extend_from_slice(&next);
                }
            }
            if s.is_empty() {
                return Ok(search);
            }
            let mut word = vec![first];
            if n == 1 {
                search.record(&word, s);
            } else {
                let mut off = vec![0.0; d];
                sys.step_into(&e, u, &mut scratch, &mut off);
                search.expand(1, &s, &pos, &off, &mut word)?;
            }
            Ok(search)
        })
        .collect();

    let mut evaluations = 0u64;
    let mut memo_hits = 0;
    let mut dominance_prunes = 0;
    let mut all = Vec::new();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for part in parts {
        let part = part?;
        evaluations += part.evaluations;
        memo_hits += part.memo_hits;
        dominance_prunes += part.dominance_prunes;
        for c in part.finals {
            if seen.insert(c.points.clone()) {
                all.push(c);
            }
        }
    }
    if evaluations > budget {
        return Err(Error::BudgetExceeded { budget });
    }
    let sets = dominance_filter(all, n_points);
    Ok(CoverageUniverse { n, n_points, sets, evaluations, memo_hits, dominance_prunes })
}
