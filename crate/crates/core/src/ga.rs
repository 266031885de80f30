//! Genetic-algorithm subset selection.
//!
//! A chromosome is a sorted set of `m` distinct feasible candidates, so every
//! individual is feasible by construction and no penalty terms are needed.
//! Each generation copies the elites, then fills the population with
//! children of tournament winners: crossover keeps the parents' common sites
//! and samples the rest from their symmetric difference, and mutation swaps
//! one member for an outsider. All random draws come from a single seeded
//! ChaCha8 stream in a fixed order.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignSpec, Problem};
use crate::constraints::build_cost_model;
use crate::error::{Error, Result};
use crate::network::WebsiteNetwork;
use crate::objective::{plan_metrics_with_feasible, PlanMetrics, Selection};
use crate::overlap::OverlapMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population_size: usize,
    pub max_generations: usize,
    /// Stop once the best fitness has not improved for this many generations.
    pub stall_generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-offspring probability of one swap.
    pub mutation_rate: f64,
    pub elite_count: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 100,
            max_generations: 200,
            stall_generations: 50,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            elite_count: 2,
        }
    }
}

impl GaParams {
    /// `(field, message)` for every out-of-range parameter.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.population_size < 2 {
            out.push(("population_size", "must be at least 2".to_string()));
        }
        if self.max_generations < 1 {
            out.push(("max_generations", "must be at least 1".to_string()));
        }
        if self.stall_generations < 1 {
            out.push(("stall_generations", "must be at least 1".to_string()));
        }
        if self.tournament_size < 1 {
            out.push(("tournament_size", "must be at least 1".to_string()));
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                out.push((name, format!("must lie in [0, 1], got {rate}")));
            }
        }
        if self.elite_count >= self.population_size {
            out.push(("elite_count", "must be smaller than population_size".to_string()));
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        match self.problems().first() {
            None => Ok(()),
            Some((field, msg)) => Err(Error::InvalidArgument(format!("{field} {msg}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub selection: Selection,
    pub fitness: f64,
    pub history: Vec<GenerationStats>,
    pub metrics: PlanMetrics,
    pub seed: u64,
    pub params: GaParams,
}

/// Outcome of [`evolve`] in candidate-index space.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub genes: Vec<usize>,
    pub fitness: f64,
    pub history: Vec<GenerationStats>,
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<usize>,
    fitness: f64,
}

// Higher fitness first; equal fitness goes to the smaller gene sequence,
// which is the smaller sorted id sequence because candidates are sorted.
fn rank(a: &Individual, b: &Individual) -> Ordering {
    b.fitness.total_cmp(&a.fitness).then_with(|| a.genes.cmp(&b.genes))
}

/// Child of two equal-size sorted parents: their intersection plus a uniform
/// sample (without replacement) of the symmetric difference. The child is
/// sorted and has the parents' size.
pub fn crossover<T: Ord + Clone, R: Rng + ?Sized>(a: &[T], b: &[T], rng: &mut R) -> Vec<T> {
    let left: BTreeSet<&T> = a.iter().collect();
    let right: BTreeSet<&T> = b.iter().collect();
    let mut child: Vec<T> = left.intersection(&right).map(|&x| x.clone()).collect();
    let pool: Vec<&T> = left.symmetric_difference(&right).copied().collect();
    let need = a.len().saturating_sub(child.len()).min(pool.len());
    for i in sample(rng, pool.len(), need) {
        child.push(pool[i].clone());
    }
    child.sort();
    child
}

/// With probability `rate`, replaces one uniformly chosen member of `s` with a
/// uniformly chosen element of `feasible` outside `s`. Identity when no
/// outsider exists.
pub fn mutate<T: Ord + Clone, R: Rng + ?Sized>(s: &[T], feasible: &[T], rate: f64, rng: &mut R) -> Vec<T> {
    let mut out = s.to_vec();
    if !rng.random_bool(rate.clamp(0.0, 1.0)) {
        return out;
    }
    let members: BTreeSet<&T> = s.iter().collect();
    let outsiders: Vec<&T> = feasible.iter().filter(|x| !members.contains(x)).collect();
    if outsiders.is_empty() || out.is_empty() {
        return out;
    }
    let slot = rng.random_range(0..out.len());
    let incoming = outsiders[rng.random_range(0..outsiders.len())].clone();
    out[slot] = incoming;
    out.sort();
    out
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Individual], size: usize, rng: &mut R) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let other = &pop[rng.random_range(0..pop.len())];
        if rank(other, best) == Ordering::Less {
            best = other;
        }
    }
    best
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let best = pop.iter().map(|i| i.fitness).fold(f64::NEG_INFINITY, f64::max);
    let mean = pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64;
    GenerationStats {
        generation,
        best_fitness: best,
        mean_fitness: mean,
    }
}

/// Runs the GA on a prepared problem, reporting each generation to
/// `on_generation` as it completes. Returns the best individual ever seen.
pub fn evolve(
    problem: &Problem,
    params: &GaParams,
    seed: u64,
    mut on_generation: impl FnMut(&GenerationStats),
) -> Result<Evolution> {
    params.check()?;
    let n = problem.candidates().len();
    let m = problem.sites();
    if m == 0 {
        return Err(Error::InvalidArgument("number of sites must be at least 1".into()));
    }
    if n < m {
        return Err(Error::Infeasible {
            requested: m,
            feasible: n,
        });
    }

    if n == m {
        let genes: Vec<usize> = (0..n).collect();
        let fitness = problem.evaluate(&genes);
        let only = [Individual {
            genes: genes.clone(),
            fitness,
        }];
        let first = stats(0, &only);
        on_generation(&first);
        return Ok(Evolution {
            genes,
            fitness,
            history: vec![first],
        });
    }

    let universe: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut population: Vec<Individual> = (0..params.population_size)
        .map(|_| {
            let mut genes = sample(&mut rng, n, m).into_vec();
            genes.sort_unstable();
            let fitness = problem.evaluate(&genes);
            Individual { genes, fitness }
        })
        .collect();
    population.sort_by(rank);

    let mut best = population[0].clone();
    let mut history = vec![stats(0, &population)];
    on_generation(&history[0]);
    let mut stall = 0;

    for generation in 1..params.max_generations {
        let mut next: Vec<Individual> = population[..params.elite_count].to_vec();
        while next.len() < params.population_size {
            let a = tournament(&population, params.tournament_size, &mut rng);
            let b = tournament(&population, params.tournament_size, &mut rng);
            let child = if rng.random_bool(params.crossover_rate) {
                crossover(&a.genes, &b.genes, &mut rng)
            } else {
                a.genes.clone()
            };
            let genes = mutate(&child, &universe, params.mutation_rate, &mut rng);
            next.push(Individual { genes, fitness: f64::NAN });
        }
        for individual in &mut next[params.elite_count..] {
            individual.fitness = problem.evaluate(&individual.genes);
        }
        next.sort_by(rank);
        population = next;

        let current = stats(generation, &population);
        on_generation(&current);
        history.push(current);

        let leader = &population[0];
        if leader.fitness > best.fitness {
            best = leader.clone();
            stall = 0;
        } else {
            if rank(leader, &best) == Ordering::Less {
                best = leader.clone();
            }
            stall += 1;
            if stall >= params.stall_generations {
                break;
            }
        }
    }

    Ok(Evolution {
        genes: best.genes,
        fitness: best.fitness,
        history,
    })
}

/// Selects `campaign.num_sites` sites from `feasible` maximizing the
/// overlap-discounted score. Deterministic for fixed inputs and seed.
pub fn optimize(
    net: &WebsiteNetwork,
    overlap: &OverlapMatrix,
    feasible: &BTreeSet<String>,
    campaign: &CampaignSpec,
    params: &GaParams,
    seed: u64,
) -> Result<OptimizationResult> {
    optimize_with_progress(net, overlap, feasible, campaign, params, seed, |_| {})
}

pub fn optimize_with_progress(
    net: &WebsiteNetwork,
    overlap: &OverlapMatrix,
    feasible: &BTreeSet<String>,
    campaign: &CampaignSpec,
    params: &GaParams,
    seed: u64,
    on_generation: impl FnMut(&GenerationStats),
) -> Result<OptimizationResult> {
    if campaign.num_sites == 0 {
        return Err(Error::InvalidArgument("number of sites must be at least 1".into()));
    }
    if feasible.len() < campaign.num_sites {
        return Err(Error::Infeasible {
            requested: campaign.num_sites,
            feasible: feasible.len(),
        });
    }
    let cost = build_cost_model(net)?;
    let problem = Problem::with_feasible(net, overlap, feasible, &cost, campaign)?;
    let run = evolve(&problem, params, seed, on_generation)?;
    let selection = problem.selection(&run.genes);
    let metrics = plan_metrics_with_feasible(&selection, overlap, net, &cost, campaign, feasible)?;
    Ok(OptimizationResult {
        selection,
        fitness: run.fitness,
        history: run.history,
        metrics,
        seed,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{demographic_filter, Targeting};
    use crate::fixtures::abc_network;
    use crate::objective::ObjectiveMode;
    use crate::overlap::overlap_matrix;
    use proptest::prelude::*;

    fn abc_run(seed: u64) -> OptimizationResult {
        let net = abc_network();
        let o = overlap_matrix(&net);
        let feasible = demographic_filter(&net, &Targeting::default()).unwrap();
        let spec = CampaignSpec::new(100.0, 2).with_mode(ObjectiveMode::UniqueReach);
        optimize(&net, &o, &feasible, &spec, &GaParams::default(), seed).unwrap()
    }

    #[test]
    fn abc_picks_a_and_c() {
        for seed in 0..10 {
            let r = abc_run(seed);
            assert_eq!(r.selection, Selection::new(["A", "C"]));
            assert_eq!(r.fitness, 58.0);
        }
    }

    #[test]
    fn whole_feasible_set_returned_at_generation_zero() {
        let net = abc_network();
        let o = overlap_matrix(&net);
        let feasible = demographic_filter(&net, &Targeting::default()).unwrap();
        let spec = CampaignSpec::new(100.0, 3).with_mode(ObjectiveMode::UniqueReach);
        let r = optimize(&net, &o, &feasible, &spec, &GaParams::default(), 1).unwrap();
        assert_eq!(r.selection, Selection::new(["A", "B", "C"]));
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0].generation, 0);
    }

    #[test]
    fn infeasible_and_zero_sites() {
        let net = abc_network();
        let o = overlap_matrix(&net);
        let feasible: BTreeSet<String> = ["A".to_string()].into();
        let spec = CampaignSpec::new(100.0, 2);
        let err = optimize(&net, &o, &feasible, &spec, &GaParams::default(), 1).unwrap_err();
        assert!(err.to_string().starts_with("infeasible"), "{err}");
        let spec = CampaignSpec::new(100.0, 0);
        assert!(optimize(&net, &o, &feasible, &spec, &GaParams::default(), 1).is_err());
    }

    #[test]
    fn same_seed_same_result() {
        assert_eq!(abc_run(42), abc_run(42));
    }

    #[test]
    fn crossover_keeps_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let child = crossover(&["A", "B"], &["A", "C"], &mut rng);
            assert_eq!(child.len(), 2);
            assert_eq!(child[0], "A");
            assert!(child[1] == "B" || child[1] == "C");
        }
        assert_eq!(crossover(&["A", "B"], &["A", "B"], &mut rng), vec!["A", "B"]);
    }

    #[test]
    fn crossover_of_disjoint_parents_covers_the_union() {
        let mut seen = BTreeSet::new();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let child = crossover(&[1, 2], &[3, 4], &mut rng);
            assert_eq!(child.len(), 2);
            assert!(child[0] < child[1]);
            assert!(child.iter().all(|g| (1..=4).contains(g)));
            seen.insert(child);
        }
        // All C(4, 2) children appear.
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn mutation_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(mutate(&[1, 2, 3], &[1, 2, 3], 1.0, &mut rng), vec![1, 2, 3]);
            assert_eq!(mutate(&[1, 2], &[1, 2, 3, 4], 0.0, &mut rng), vec![1, 2]);
        }
        let mut swapped = BTreeSet::new();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = mutate(&[1, 2, 3], &[1, 2, 3, 4], 1.0, &mut rng);
            assert!(out.contains(&4));
            assert_eq!(out.len(), 3);
            let dropped: Vec<i32> = [1, 2, 3].into_iter().filter(|g| !out.contains(g)).collect();
            assert_eq!(dropped.len(), 1);
            swapped.insert(dropped[0]);
        }
        assert_eq!(swapped.len(), 3);
    }

    #[test]
    fn params_validation() {
        assert!(GaParams::default().check().is_ok());
        let p = GaParams {
            elite_count: 100,
            ..Default::default()
        };
        assert!(p.check().is_err());
        let p = GaParams {
            mutation_rate: 1.5,
            ..Default::default()
        };
        assert_eq!(p.problems()[0].0, "mutation_rate");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn crossover_and_mutation_yield_valid_sets(
            seed in any::<u64>(),
            n in 4usize..30,
            m_frac in 0.1f64..0.9,
        ) {
            let m = ((n as f64 * m_frac) as usize).max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let universe: Vec<usize> = (0..n).collect();
            let mut a = sample(&mut rng, n, m).into_vec();
            let mut b = sample(&mut rng, n, m).into_vec();
            a.sort();
            b.sort();
            let child = crossover(&a, &b, &mut rng);
            for g in a.iter().filter(|g| b.contains(g)) {
                prop_assert!(child.contains(g));
            }
            prop_assert!(child.iter().all(|g| a.contains(g) || b.contains(g)));
            let mutant = mutate(&child, &universe, 0.5, &mut rng);
            for genes in [&child, &mutant] {
                prop_assert_eq!(genes.len(), m);
                prop_assert!(genes.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(genes.iter().all(|&g| g < n));
            }
            prop_assert!(mutant.iter().filter(|g| !child.contains(g)).count() <= 1);
        }
    }
}
