//! Traditional GA baseline with static probabilities and price-only
//! shortest-path link mapping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lbhga::{
    exchange_alleles, feasibility_repair, random_individual, rank_order, reassign_genes, Evaluator,
    GaOutcome, Individual, LbhgaError,
};
use crate::model::{EmbeddingPlan, NodeId, SubstrateNetwork, VirtualNetworkRequest};
use crate::pathing::{shortest_path, WeightView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TgaParams {
    pub population_size: usize,
    pub max_iterations: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub mutation_genes: usize,
    /// Ranked individuals tried during link mapping before refusing.
    pub retry_limit: usize,
}

impl Default for TgaParams {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_iterations: 50,
            crossover_probability: 0.7,
            mutation_probability: 0.03,
            mutation_genes: 1,
            retry_limit: 1,
        }
    }
}

impl TgaParams {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.population_size == 0 {
            return Err(("population_size", "must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(("crossover_probability", "must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(("mutation_probability", "must lie in [0, 1]".into()));
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

/// Fitness-proportionate pick on inverse fitness.
fn roulette<R: Rng + ?Sized>(pop: &[Individual], rng: &mut R) -> usize {
    let weights: Vec<f64> = pop.iter().map(|i| 1.0 / i.fitness.max(f64::MIN_POSITIVE)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    pop.len() - 1
}

/// Runs the baseline GA. Fitness uses unit-price distances with no
/// bandwidth exclusions. Generations are replaced wholesale; the best
/// individual ever seen is reported first in the ranking.
pub fn tga_run<R: Rng + ?Sized>(
    vnr: &VirtualNetworkRequest,
    net: &SubstrateNetwork,
    params: &TgaParams,
    rng: &mut R,
) -> Result<GaOutcome, LbhgaError> {
    let eval = Evaluator::new(net, vnr, &WeightView::unit_prices(net));
    tga_run_with(&eval, params, rng)
}

pub fn tga_run_with<R: Rng + ?Sized>(
    eval: &Evaluator<'_>,
    params: &TgaParams,
    rng: &mut R,
) -> Result<GaOutcome, LbhgaError> {
    let size = params.population_size.max(1);
    let mut pop = Vec::with_capacity(size);
    for _ in 0..size {
        let genes = random_individual(eval, rng).map_err(|_| LbhgaError::Rejected)?;
        pop.push(eval.evaluate(genes));
    }
    let mut best = pop.iter().min_by(|a, b| rank_order(a, b)).cloned().unwrap();
    let mut history = vec![best.fitness];
    let gene_count = eval.vnr.node_count();

    for _ in 0..params.max_iterations {
        let mut next = Vec::with_capacity(size);
        while next.len() < size {
            let i = roulette(&pop, rng);
            let j = roulette(&pop, rng);
            let mut c1 = pop[i].genes.clone();
            let mut c2 = pop[j].genes.clone();
            if rng.random::<f64>() < params.crossover_probability {
                exchange_alleles(&mut c1, &mut c2, rng);
            }
            for (child, parent) in [(c1, i), (c2, j)] {
                if next.len() >= size {
                    break;
                }
                let mut genes = feasibility_repair(child, eval, rng).unwrap_or_else(|_| pop[parent].genes.clone());
                if rng.random::<f64>() < params.mutation_probability {
                    let count = params.mutation_genes.min(gene_count);
                    let picks: Vec<usize> = rand::seq::index::sample(rng, gene_count, count).into_vec();
                    let _ = reassign_genes(&mut genes, &picks, eval, rng);
                }
                next.push(eval.evaluate(genes));
            }
        }
        pop = next;
        if let Some(top) = pop.iter().min_by(|a, b| rank_order(a, b)) {
            if top.fitness < best.fitness {
                best = top.clone();
            }
        }
        history.push(best.fitness);
    }

    pop.sort_by(rank_order);
    if pop[0] != best {
        pop.insert(0, best);
    }
    Ok(GaOutcome { ranked: pop, best_history: history, cataclysms: 0 })
}

/// Routes every virtual link over its cheapest path by unit price, ignoring
/// residual bandwidth. Whether the plan actually fits is only discovered
/// when it is allocated.
pub fn tga_map_links(vnr: &VirtualNetworkRequest, node_map: &[NodeId], net: &SubstrateNetwork) -> Option<EmbeddingPlan> {
    let view = WeightView::unit_prices(net);
    let mut paths = Vec::with_capacity(vnr.links.len());
    for vl in &vnr.links {
        paths.push(shortest_path(net, &view, node_map[vl.a], node_map[vl.b])?.links);
    }
    Some(EmbeddingPlan::new(net, vnr, node_map, paths))
}
