//! Node mapping with the load-balanced hybrid genetic algorithm.
//!
//! Chromosomes hold one substrate node per virtual node. Fitness is the
//! embedding price with link costs estimated from an all-pairs distance
//! matrix. Crossover probability adapts to the parents' fitness relative to
//! the population, and a per-node pheromone table steers which genes mutate.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeId, SubstrateNetwork, VirtualNetworkRequest};
use crate::pathing::{all_pairs_estimate, compute_weights, DistanceMatrix, WeightView};

/// Lower bound kept on every pheromone quantity.
pub const PHEROMONE_FLOOR: f64 = 1e-6;

/// Attempts made to build a random feasible chromosome before giving up.
const RANDOM_INDIVIDUAL_ATTEMPTS: usize = 32;

/// Pair draws allowed per population slot before parents that fail the
/// crossover gate are copied unchanged into the offspring.
const MAX_PAIR_DRAWS_PER_SLOT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LbhgaError {
    #[error("gene {gene} has no feasible replacement node")]
    NoFeasibleTarget { gene: usize },
    #[error("no feasible individual could be constructed")]
    NoFeasibleIndividual,
    #[error("request rejected: no feasible node mapping")]
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbhgaParams {
    pub population_size: usize,
    pub max_iterations: usize,
    pub mutation_probability: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Load-balancing intensity for link weights.
    pub lambda: f64,
    /// Pheromone dissipation factor.
    pub rho: f64,
    pub mutation_genes: usize,
    /// Ranked individuals tried during link mapping before refusing.
    pub retry_limit: usize,
}

impl Default for LbhgaParams {
    fn default() -> Self {
        Self {
            population_size: 40,
            max_iterations: 50,
            mutation_probability: 0.2,
            lambda1: 1.2,
            lambda2: 0.8,
            lambda: 1.0,
            rho: 0.1,
            mutation_genes: 1,
            retry_limit: 5,
        }
    }
}

impl LbhgaParams {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let lam = |v: f64| v > 0.0 && v <= 2.0;
        if self.population_size == 0 {
            return Err(("population_size", "must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(("mutation_probability", "must lie in [0, 1]".into()));
        }
        if !lam(self.lambda1) {
            return Err(("lambda1", "must lie in (0, 2]".into()));
        }
        if !lam(self.lambda2) {
            return Err(("lambda2", "must lie in (0, 2]".into()));
        }
        if !lam(self.lambda) {
            return Err(("lambda", "must lie in (0, 2]".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(("rho", "must lie in (0, 1)".into()));
        }
        if self.mutation_genes == 0 {
            return Err(("mutation_genes", "must be positive".into()));
        }
        if self.retry_limit == 0 {
            return Err(("retry_limit", "must be positive".into()));
        }
        Ok(())
    }
}

/// A node-mapping chromosome: `genes[j]` hosts virtual node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<NodeId>,
    pub fitness: f64,
}

/// Ascending fitness, then gene sequence, so rankings are reproducible.
pub fn rank_order(a: &Individual, b: &Individual) -> Ordering {
    a.fitness.total_cmp(&b.fitness).then_with(|| a.genes.cmp(&b.genes))
}

/// Everything fitness evaluation needs for one request, frozen for the
/// duration of a run.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub net: &'a SubstrateNetwork,
    pub vnr: &'a VirtualNetworkRequest,
    pub dm: DistanceMatrix,
    penalty: f64,
    /// Per virtual node: substrate nodes with enough residual CPU, ascending.
    candidates: Vec<Vec<NodeId>>,
}

impl<'a> Evaluator<'a> {
    /// Builds the distance matrix under `view`.
    pub fn new(net: &'a SubstrateNetwork, vnr: &'a VirtualNetworkRequest, view: &WeightView) -> Self {
        Self::with_matrix(net, vnr, all_pairs_estimate(net, view))
    }

    /// Load-balanced weights with the request's smallest bandwidth demand
    /// as the exclusion threshold.
    pub fn load_balanced(net: &'a SubstrateNetwork, vnr: &'a VirtualNetworkRequest, lambda: f64) -> Self {
        Self::new(net, vnr, &compute_weights(net, lambda, vnr.min_bw()))
    }

    pub fn with_matrix(
        net: &'a SubstrateNetwork,
        vnr: &'a VirtualNetworkRequest,
        dm: DistanceMatrix,
    ) -> Self {
        let penalty = infeasible_penalty(net, vnr, &dm);
        let candidates = vnr
            .cpu_demands
            .iter()
            .map(|&d| {
                net.nodes()
                    .iter()
                    .filter(|n| n.cpu_residual >= d)
                    .map(|n| n.id)
                    .collect()
            })
            .collect();
        Self { net, vnr, dm, penalty, candidates }
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn fitness(&self, genes: &[NodeId]) -> f64 {
        fitness_with_penalty(genes, self.vnr, &self.dm, self.net, self.penalty)
    }

    pub fn evaluate(&self, genes: Vec<NodeId>) -> Individual {
        let fitness = self.fitness(&genes);
        Individual { genes, fitness }
    }

    pub fn candidates(&self, virtual_node: usize) -> &[NodeId] {
        &self.candidates[virtual_node]
    }

    /// True when genes are pairwise distinct and every host has enough CPU.
    pub fn is_feasible(&self, genes: &[NodeId]) -> bool {
        let mut seen = BTreeSet::new();
        genes.len() == self.vnr.node_count()
            && genes.iter().enumerate().all(|(j, &g)| {
                g.index() < self.net.node_count()
                    && self.net.node(g).cpu_residual >= self.vnr.cpu_demands[j]
                    && seen.insert(g)
            })
    }
}

/// Price charged to an individual whose virtual link has no estimated path:
/// total demand times the largest node price or link weight times the link
/// count. Any feasible estimate is bounded by this value.
pub fn infeasible_penalty(net: &SubstrateNetwork, vnr: &VirtualNetworkRequest, dm: &DistanceMatrix) -> f64 {
    let demand = (vnr.total_cpu() + vnr.total_bw()) as f64;
    let price = (net.max_node_price() as f64).max(dm.max_link_weight());
    demand * price * net.link_count().max(1) as f64
}

/// Estimated price of a node mapping: CPU cost at host prices plus bandwidth
/// times estimated path cost. Each unroutable virtual link adds one
/// `penalty` on top of a base `penalty`, so infeasible mappings always rank
/// below feasible ones and fewer broken links rank higher.
pub fn fitness(genes: &[NodeId], vnr: &VirtualNetworkRequest, dm: &DistanceMatrix, net: &SubstrateNetwork) -> f64 {
    let penalty = infeasible_penalty(net, vnr, dm);
    fitness_with_penalty(genes, vnr, dm, net, penalty)
}

fn fitness_with_penalty(
    genes: &[NodeId],
    vnr: &VirtualNetworkRequest,
    dm: &DistanceMatrix,
    net: &SubstrateNetwork,
    penalty: f64,
) -> f64 {
    let nodes: f64 = genes
        .iter()
        .zip(&vnr.cpu_demands)
        .map(|(&g, &d)| (d * net.node(g).cpu_unit_price) as f64)
        .sum();
    let mut links = 0.0;
    let mut broken = 0usize;
    for l in &vnr.links {
        match dm.get(genes[l.a], genes[l.b]) {
            Some(cost) => links += l.bw as f64 * cost,
            None => broken += 1,
        }
    }
    if broken > 0 {
        penalty * (1 + broken) as f64
    } else {
        nodes + links
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl PopulationStats {
    pub fn from_fitness(values: impl IntoIterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        assert!(n > 0, "statistics of an empty population");
        // rounding can push the mean a hair outside [min, max]
        let mean = (sum / n as f64).clamp(min, max);
        Self { mean, min, max }
    }

    pub fn of(pop: &[Individual]) -> Self {
        Self::from_fitness(pop.iter().map(|i| i.fitness))
    }
}

/// Crossover probability of a parent pair with fitness `f1`, `f2`.
///
/// Both parents at or above the mean: `l1 * (lo - mean) / (max - mean)`.
/// Both at or below: `l2 * (1 - (mean - hi) / (mean - min))`.
/// Straddling the mean: compare the normalized distances of the worse parent
/// above (`s_max`) and the better parent below (`s_min`); the larger decides
/// between `l1 * s_max` and `l2 * (1 - s_min)`.
///
/// A population with no spread on either side of the mean yields 0.5.
pub fn crossover_probability(f1: f64, f2: f64, stats: &PopulationStats, lambda1: f64, lambda2: f64) -> f64 {
    let PopulationStats { mean, min, max } = *stats;
    let above = max - mean;
    let below = mean - min;
    if above <= 0.0 || below <= 0.0 {
        return 0.5;
    }
    let lo = f1.min(f2);
    let hi = f1.max(f2);
    let p = if lo >= mean {
        lambda1 * (lo - mean) / above
    } else if hi <= mean {
        lambda2 * (1.0 - (mean - hi) / below)
    } else {
        let s_max = (hi - mean) / above;
        let s_min = (mean - lo) / below;
        if s_max > s_min {
            lambda1 * s_max
        } else {
            lambda2 * (1.0 - s_min)
        }
    };
    p.clamp(0.0, 1.0)
}

/// Per-substrate-node pheromone quantities for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    tau: Vec<f64>,
    rho: f64,
}

impl PheromoneTable {
    pub fn new(node_count: usize, rho: f64) -> Self {
        Self { tau: vec![PHEROMONE_FLOOR; node_count], rho }
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.tau[node.index()]
    }

    pub fn set(&mut self, node: NodeId, value: f64) {
        self.tau[node.index()] = value.max(PHEROMONE_FLOOR);
    }

    pub fn values(&self) -> &[f64] {
        &self.tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Each individual deposits `(worst fitness - its fitness) / gene count`
    /// on every node it uses.
    fn deposit(&mut self, pop: &[Individual]) {
        let Some(worst) = pop.iter().map(|i| i.fitness).reduce(f64::max) else {
            return;
        };
        for ind in pop {
            if ind.genes.is_empty() {
                continue;
            }
            let amount = (worst - ind.fitness) / ind.genes.len() as f64;
            for &g in &ind.genes {
                self.tau[g.index()] += amount;
            }
        }
    }

    fn apply_floor(&mut self) {
        for t in &mut self.tau {
            *t = t.max(PHEROMONE_FLOOR);
        }
    }

    /// Resets the table to the deposits of the initial population.
    pub fn init(&mut self, pop: &[Individual]) {
        self.tau.iter_mut().for_each(|t| *t = 0.0);
        self.deposit(pop);
        self.apply_floor();
    }

    /// Evaporates every quantity by `rho`, then lets the new offspring deposit.
    pub fn crossover_update(&mut self, offspring: &[Individual]) {
        for t in &mut self.tau {
            *t *= 1.0 - self.rho;
        }
        self.deposit(offspring);
        self.apply_floor();
    }

    /// Pheromone change after a mutation that moved genes from `old` to `new`
    /// hosts. Improvement takes `delta` from old hosts and gives it to new
    /// ones; deterioration does the opposite.
    pub fn mutation_update(&mut self, old: &[NodeId], new: &[NodeId], before: f64, after: f64) {
        if before == after || old.is_empty() {
            return;
        }
        let delta = (after - before).abs() / old.len() as f64;
        let sign = if before > after { 1.0 } else { -1.0 };
        for &n in old {
            self.set(n, self.get(n) - sign * delta);
        }
        for &n in new {
            self.set(n, self.get(n) + sign * delta);
        }
    }
}

/// Picks `count` distinct gene positions by roulette without replacement.
/// A gene's weight is the complement of its host's pheromone share among the
/// remaining genes, normalized over them, so low-pheromone genes are favoured.
pub fn select_mutation_genes<R: Rng + ?Sized>(
    ind: &Individual,
    table: &PheromoneTable,
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..ind.genes.len()).collect();
    let count = count.min(remaining.len());
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        if remaining.len() == 1 {
            picked.push(remaining.pop().unwrap());
            break;
        }
        let taus: Vec<f64> = remaining.iter().map(|&i| table.get(ind.genes[i])).collect();
        let total: f64 = taus.iter().sum();
        let denom = (remaining.len() - 1) as f64;
        let weights: Vec<f64> = taus.iter().map(|t| (1.0 - t / total) / denom).collect();
        let wsum: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * wsum;
        let mut chosen = remaining.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                chosen = k;
                break;
            }
            u -= w;
        }
        picked.push(remaining.remove(chosen));
    }
    picked
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationOutcome {
    pub before: f64,
    pub after: f64,
    pub old_nodes: Vec<NodeId>,
    pub new_nodes: Vec<NodeId>,
}

/// Moves each gene in `gene_set` to a uniformly random CPU-sufficient node
/// not in the chromosome. Returns the old and new hosts, or leaves `genes`
/// untouched on error.
pub fn reassign_genes<R: Rng + ?Sized>(
    genes: &mut [NodeId],
    gene_set: &[usize],
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<(Vec<NodeId>, Vec<NodeId>), LbhgaError> {
    let mut next = genes.to_vec();
    let mut old_nodes = Vec::with_capacity(gene_set.len());
    let mut new_nodes = Vec::with_capacity(gene_set.len());
    for &j in gene_set {
        let options: Vec<NodeId> = eval
            .candidates(j)
            .iter()
            .copied()
            .filter(|c| !next.contains(c))
            .collect();
        if options.is_empty() {
            return Err(LbhgaError::NoFeasibleTarget { gene: j });
        }
        let target = options[rng.random_range(0..options.len())];
        old_nodes.push(next[j]);
        new_nodes.push(target);
        next[j] = target;
    }
    genes.copy_from_slice(&next);
    Ok((old_nodes, new_nodes))
}

/// Reassigns the selected genes, recomputes fitness and applies the
/// mutation pheromone rule. On error nothing changes.
pub fn mutate<R: Rng + ?Sized>(
    ind: &mut Individual,
    gene_set: &[usize],
    eval: &Evaluator<'_>,
    table: &mut PheromoneTable,
    rng: &mut R,
) -> Result<MutationOutcome, LbhgaError> {
    let (old_nodes, new_nodes) = reassign_genes(&mut ind.genes, gene_set, eval, rng)?;
    let before = ind.fitness;
    let after = eval.fitness(&ind.genes);
    table.mutation_update(&old_nodes, &new_nodes, before, after);
    ind.fitness = after;
    Ok(MutationOutcome { before, after, old_nodes, new_nodes })
}

/// A uniformly drawn feasible chromosome, or `NoFeasibleIndividual`.
pub fn random_individual<R: Rng + ?Sized>(eval: &Evaluator<'_>, rng: &mut R) -> Result<Vec<NodeId>, LbhgaError> {
    let n = eval.vnr.node_count();
    // most constrained virtual nodes first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| (eval.candidates(j).len(), j));
    let capable: BTreeSet<NodeId> = (0..n).flat_map(|j| eval.candidates(j).iter().copied()).collect();
    if capable.len() < n {
        return Err(LbhgaError::NoFeasibleIndividual);
    }
    'attempt: for _ in 0..RANDOM_INDIVIDUAL_ATTEMPTS {
        let mut genes = vec![NodeId(u32::MAX); n];
        let mut used = BTreeSet::new();
        for &j in &order {
            let options: Vec<NodeId> = eval
                .candidates(j)
                .iter()
                .copied()
                .filter(|c| !used.contains(c))
                .collect();
            if options.is_empty() {
                continue 'attempt;
            }
            let pick = options[rng.random_range(0..options.len())];
            used.insert(pick);
            genes[j] = pick;
        }
        return Ok(genes);
    }
    Err(LbhgaError::NoFeasibleIndividual)
}

/// Redraws duplicate and CPU-violating genes from unused feasible nodes.
/// The first valid occurrence of a host is kept. Falls back to a fresh random
/// chromosome if a gene cannot be repaired.
pub fn feasibility_repair<R: Rng + ?Sized>(
    genes: Vec<NodeId>,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<Vec<NodeId>, LbhgaError> {
    let n = eval.vnr.node_count();
    if genes.len() != n {
        return random_individual(eval, rng);
    }
    let mut kept = BTreeSet::new();
    let mut broken = Vec::new();
    for (j, &g) in genes.iter().enumerate() {
        let valid = g.index() < eval.net.node_count()
            && eval.net.node(g).cpu_residual >= eval.vnr.cpu_demands[j];
        if valid && kept.insert(g) {
            continue;
        }
        broken.push(j);
    }
    if broken.is_empty() {
        return Ok(genes);
    }
    let mut genes = genes;
    for j in broken {
        let options: Vec<NodeId> = eval
            .candidates(j)
            .iter()
            .copied()
            .filter(|c| !kept.contains(c))
            .collect();
        if options.is_empty() {
            return random_individual(eval, rng);
        }
        let pick = options[rng.random_range(0..options.len())];
        kept.insert(pick);
        genes[j] = pick;
    }
    Ok(genes)
}

/// Swaps a random number (between 1 and half the length, rounded up) of
/// randomly chosen positions between two chromosomes.
pub fn exchange_alleles<R: Rng + ?Sized>(a: &mut [NodeId], b: &mut [NodeId], rng: &mut R) {
    let n = a.len().min(b.len());
    if n == 0 {
        return;
    }
    let count = rng.random_range(1..=n.div_ceil(2));
    for pos in rand::seq::index::sample(rng, n, count) {
        std::mem::swap(&mut a[pos], &mut b[pos]);
    }
}

/// Keeps the best `keep` individuals, preferring distinct chromosomes.
/// Copies of an already kept chromosome only fill slots left over once
/// every distinct one is in.
pub fn elite_select(pop: &mut Vec<Individual>, keep: usize) {
    pop.sort_by(rank_order);
    let mut distinct = Vec::with_capacity(pop.len());
    let mut copies = Vec::new();
    for ind in pop.drain(..) {
        if distinct.last().is_some_and(|last: &Individual| last.genes == ind.genes) {
            copies.push(ind);
        } else {
            distinct.push(ind);
        }
    }
    distinct.extend(copies);
    distinct.truncate(keep);
    distinct.sort_by(rank_order);
    *pop = distinct;
}

/// Result of one genetic run.
#[derive(Debug, Clone)]
pub struct GaOutcome {
    /// Final population, best first.
    pub ranked: Vec<Individual>,
    /// Best fitness seen so far, recorded after initialisation and after every
    /// iteration.
    pub best_history: Vec<f64>,
    pub cataclysms: usize,
}

impl GaOutcome {
    pub fn best(&self) -> &Individual {
        &self.ranked[0]
    }
}

/// Runs the hybrid GA for one request with load-balanced distance estimates.
pub fn run<R: Rng + ?Sized>(
    vnr: &VirtualNetworkRequest,
    net: &SubstrateNetwork,
    params: &LbhgaParams,
    rng: &mut R,
) -> Result<GaOutcome, LbhgaError> {
    let eval = Evaluator::load_balanced(net, vnr, params.lambda);
    run_with(&eval, params, rng, |_, _| {})
}

/// Same as [`run`] over a prepared evaluator. `observe` sees the population
/// and pheromone table at the start of every iteration.
pub fn run_with<R, F>(
    eval: &Evaluator<'_>,
    params: &LbhgaParams,
    rng: &mut R,
    mut observe: F,
) -> Result<GaOutcome, LbhgaError>
where
    R: Rng + ?Sized,
    F: FnMut(&[Individual], &PheromoneTable),
{
    let size = params.population_size.max(1);
    let mut pop = Vec::with_capacity(size);
    for _ in 0..size {
        let genes = random_individual(eval, rng).map_err(|_| LbhgaError::Rejected)?;
        pop.push(eval.evaluate(genes));
    }

    let mut table = PheromoneTable::new(eval.net.node_count(), params.rho);
    table.init(&pop);

    let mut best = pop.iter().map(|i| i.fitness).fold(f64::INFINITY, f64::min);
    let mut history = vec![best];
    let mut stagnant = 0usize;
    let cataclysm_after = (0.6 * params.max_iterations as f64).ceil() as usize;
    let elite_size = size.div_ceil(2);
    let survivors = size.div_ceil(3);
    let mut cataclysms = 0;

    for _ in 0..params.max_iterations {
        observe(&pop, &table);
        elite_select(&mut pop, elite_size);
        let stats = PopulationStats::of(&pop);

        let mut offspring: Vec<Vec<NodeId>> = Vec::with_capacity(size - pop.len());
        let mut draws = 0;
        while pop.len() + offspring.len() < size {
            let i = rng.random_range(0..pop.len());
            let mut j = rng.random_range(0..pop.len());
            if pop.len() > 1 {
                while j == i {
                    j = rng.random_range(0..pop.len());
                }
            }
            draws += 1;
            let pc = crossover_probability(pop[i].fitness, pop[j].fitness, &stats, params.lambda1, params.lambda2);
            let mut c1 = pop[i].genes.clone();
            let mut c2 = pop[j].genes.clone();
            if rng.random::<f64>() < pc {
                exchange_alleles(&mut c1, &mut c2, rng);
            } else if draws <= MAX_PAIR_DRAWS_PER_SLOT * size {
                // the pair produces no offspring
                continue;
            }
            for (child, parent) in [(c1, i), (c2, j)] {
                if pop.len() + offspring.len() >= size {
                    break;
                }
                let repaired = feasibility_repair(child, eval, rng).unwrap_or_else(|_| pop[parent].genes.clone());
                offspring.push(repaired);
            }
        }
        let mut offspring: Vec<Individual> = offspring.into_iter().map(|g| eval.evaluate(g)).collect();

        table.crossover_update(&offspring);
        for child in &mut offspring {
            if rng.random::<f64>() < params.mutation_probability {
                let genes = select_mutation_genes(child, &table, params.mutation_genes, rng);
                // a gene without an alternative host simply stays put
                let _ = mutate(child, &genes, eval, &mut table, rng);
            }
        }
        pop.extend(offspring);

        let current = pop.iter().map(|i| i.fitness).fold(f64::INFINITY, f64::min);
        if current < best {
            best = current;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= cataclysm_after {
                elite_select(&mut pop, survivors);
                while pop.len() < size {
                    match random_individual(eval, rng) {
                        Ok(genes) => pop.push(eval.evaluate(genes)),
                        Err(_) => {
                            let copy = pop[rng.random_range(0..pop.len())].clone();
                            pop.push(copy);
                        }
                    }
                }
                cataclysms += 1;
                stagnant = 0;
            }
        }
        history.push(best);
    }

    pop.sort_by(rank_order);
    Ok(GaOutcome { ranked: pop, best_history: history, cataclysms })
}
