//! Exhaustive ground truth for small instances: every m-subset for the
//! optimizer, every simple path for overlap. Both refuse inputs beyond their
//! guards instead of sampling.

use crate::campaign::{CampaignSpec, Problem};
use crate::error::{Error, Result};
use crate::network::WebsiteNetwork;
use crate::objective::Selection;
use crate::overlap::{OverlapMatrix, SymmetricGraph};

/// Largest number of subsets [`exhaustive_optimize`] will enumerate.
pub const MAX_COMBINATIONS: u128 = 1_000_000;
/// Largest graph [`enumerate_path_overlap`] will walk.
pub const MAX_PATH_NODES: usize = 12;

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn combinations(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Best m-subset of a prepared problem by full enumeration, ties to the
/// lexicographically smallest sorted id list.
pub fn exhaustive_search(problem: &Problem) -> Result<(Selection, f64)> {
    let n = problem.candidates().len();
    let m = problem.sites();
    let count = combinations(n, m);
    if count > MAX_COMBINATIONS {
        return Err(Error::GuardExceeded(format!(
            "C({n}, {m}) = {count} subsets exceeds {MAX_COMBINATIONS}; use the genetic optimizer"
        )));
    }
    let mut genes: Vec<usize> = (0..m).collect();
    let mut best = (genes.clone(), problem.evaluate(&genes));
    // Lexicographic order of index combinations, so strict improvement
    // keeps the smallest tied subset.
    while next_combination(&mut genes, n) {
        let f = problem.evaluate(&genes);
        if f > best.1 {
            best = (genes.clone(), f);
        }
    }
    Ok((problem.selection(&best.0), best.1))
}

fn next_combination(genes: &mut [usize], n: usize) -> bool {
    let m = genes.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if genes[i] < n - m + i {
            genes[i] += 1;
            for j in i + 1..m {
                genes[j] = genes[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive counterpart of [`crate::ga::optimize`].
pub fn exhaustive_optimize(
    net: &WebsiteNetwork,
    overlap: &OverlapMatrix,
    feasible: &std::collections::BTreeSet<String>,
    campaign: &CampaignSpec,
) -> Result<(Selection, f64)> {
    let cost = crate::constraints::build_cost_model(net)?;
    let problem = Problem::with_feasible(net, overlap, feasible, &cost, campaign)?;
    exhaustive_search(&problem)
}

/// Largest product of weights over all simple paths between `from` and `to`,
/// found by depth-first enumeration.
pub fn enumerate_path_overlap(g: &SymmetricGraph, from: &str, to: &str) -> Result<f64> {
    if g.len() > MAX_PATH_NODES {
        return Err(Error::GuardExceeded(format!(
            "{} nodes exceeds the path enumeration limit of {MAX_PATH_NODES}",
            g.len()
        )));
    }
    let source = g.index_of(from).ok_or_else(|| Error::UnknownNode(from.to_string()))?;
    let target = g.index_of(to).ok_or_else(|| Error::UnknownNode(to.to_string()))?;
    if source == target {
        return Ok(1.0);
    }
    let mut on_path = vec![false; g.len()];
    on_path[source] = true;
    let mut best = 0.0;
    walk(g, source, target, 1.0, &mut on_path, &mut best);
    Ok(best)
}

fn walk(g: &SymmetricGraph, at: usize, target: usize, product: f64, on_path: &mut [bool], best: &mut f64) {
    for &(next, w) in g.neighbors(at) {
        if on_path[next] {
            continue;
        }
        let p = product * w;
        if next == target {
            if p > *best {
                *best = p;
            }
            continue;
        }
        on_path[next] = true;
        walk(g, next, target, p, on_path, best);
        on_path[next] = false;
    }
}
