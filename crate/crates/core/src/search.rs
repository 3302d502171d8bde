//! Permutation search on top of the decoder: the sorted constructive search
//! with random restarts, and a genetic algorithm with swap crossover.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{cluster_affinity, Decoder, JobOrder};
use crate::error::{Error, Result};
use crate::evaluator::Schedule;
use crate::model::{Instance, Objective, Time};
use crate::rng::{derived_rng, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SPConfig {
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SPConfig {
    fn default() -> Self {
        SPConfig { max_iterations: 1000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub pop_size: usize,
    pub max_generations: usize,
    pub stall_window: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig { pop_size: 100, max_generations: 500, stall_window: 50, stall_tolerance: 1e-6, seed: 0 }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Config("population size must be at least 2".into()));
        }
        if self.stall_window == 0 || self.stall_window > self.max_generations {
            return Err(Error::Config("stall window must lie in 1..=max_generations".into()));
        }
        Ok(())
    }
}

/// Result of a search run. `trace[i]` is the best value after iteration
/// (or generation) `i + 1`.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub order: JobOrder,
    pub schedule: Schedule,
    pub value: Time,
    pub trace: Vec<Time>,
    /// True when the GA stopped on the stall rule.
    pub stalled: bool,
}

/// `d / w` ascending, compared exactly; zero weights sort last.
fn due_ratio_cmp(d1: Time, w1: Time, d2: Time, w2: Time) -> Ordering {
    match (w1 > 0, w2 > 0) {
        (true, true) => (d1 as i128 * w2 as i128).cmp(&(d2 as i128 * w1 as i128)),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => d1.cmp(&d2),
    }
}

/// Jobs by ascending ready time, then ascending due/weight, then descending
/// cluster affinity, then job id.
pub fn sp_initial_order(instance: &Instance) -> JobOrder {
    let affinity: Vec<usize> = (0..instance.n()).map(|k| cluster_affinity(instance, k)).collect();
    let mut order: JobOrder = (0..instance.n()).collect();
    order.sort_by(|&a, &b| {
        let (ja, jb) = (&instance.jobs[a], &instance.jobs[b]);
        ja.ready
            .cmp(&jb.ready)
            .then_with(|| due_ratio_cmp(ja.due, ja.weight, jb.due, jb.weight))
            .then_with(|| affinity[b].cmp(&affinity[a]))
            .then_with(|| ja.id.cmp(&jb.id))
    });
    order
}

/// Swaps the positions of values `a` and `b` in `order`.
fn swap_values(order: &mut [usize], a: usize, b: usize) {
    let pa = order.iter().position(|&x| x == a).expect("value in permutation");
    let pb = order.iter().position(|&x| x == b).expect("value in permutation");
    order.swap(pa, pb);
}

/// Both children of swap crossover at position `r` (0-based): the values
/// `u[r]` and `v[r]` trade places in each parent.
pub fn crossover_children(u: &[usize], v: &[usize], r: usize) -> (JobOrder, JobOrder) {
    let (a, b) = (u[r], v[r]);
    let mut cu = u.to_vec();
    let mut cv = v.to_vec();
    if a != b {
        swap_values(&mut cu, a, b);
        swap_values(&mut cv, a, b);
    }
    (cu, cv)
}

/// Swap crossover at a uniform position; one of the two children is
/// returned at random.
pub fn crossover(u: &[usize], v: &[usize], rng: &mut Rng) -> JobOrder {
    if u.is_empty() {
        return Vec::new();
    }
    let r = rng.gen_range(0..u.len());
    let (cu, cv) = crossover_children(u, v, r);
    if u[r] == v[r] || rng.gen_bool(0.5) {
        cu
    } else {
        cv
    }
}

/// Swaps two distinct uniformly drawn positions.
pub fn mutate(u: &[usize], rng: &mut Rng) -> JobOrder {
    let mut out = u.to_vec();
    if out.len() >= 2 {
        let i = rng.gen_range(0..out.len());
        let mut j = rng.gen_range(0..out.len() - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Random-key shuffle: each element draws a uniform key and the set is
/// sorted by key.
fn key_shuffle(items: &mut [usize], rng: &mut Rng) {
    let mut keyed: Vec<(f64, usize)> = items.iter().map(|&x| (rng.gen::<f64>(), x)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (slot, (_, x)) in items.iter_mut().zip(keyed) {
        *slot = x;
    }
}

/// Constructive search: decode the sorted order, then random swaps applied
/// cumulatively for the first half of the iterations, then ready-time
/// partition shuffles for the rest. The best decoded schedule is returned.
pub fn run_sp(instance: &Instance, kind: Objective, config: &SPConfig) -> Result<SearchOutcome> {
    if config.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be positive".into()));
    }
    let n = instance.n();
    let mut decoder = Decoder::new(instance)?;
    let mut rng = derived_rng(config.seed, &[0x5350]);

    let mut order = sp_initial_order(instance);
    let mean_ready = instance.jobs.iter().map(|j| j.ready as f64).sum::<f64>() / n.max(1) as f64;
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for &k in &order {
        let r = instance.jobs[k].ready;
        if r == 0 {
            x.push(k);
        } else if (r as f64) < mean_ready {
            y.push(k);
        } else {
            z.push(k);
        }
    }

    let mut best_value = decoder.value(&order, kind)?;
    let mut best_order = order.clone();
    let mut trace = vec![best_value];
    for itr in 2..=config.max_iterations {
        if itr <= config.max_iterations / 2 {
            order = mutate(&order, &mut rng);
        } else {
            for part in [&mut x, &mut y, &mut z] {
                key_shuffle(part, &mut rng);
            }
            order.clear();
            order.extend(x.iter().chain(&y).chain(&z));
        }
        let value = decoder.value(&order, kind)?;
        if value < best_value {
            best_value = value;
            best_order.clone_from(&order);
        }
        trace.push(best_value);
    }
    let schedule = decoder.schedule(&best_order)?;
    Ok(SearchOutcome { order: best_order, schedule, value: best_value, trace, stalled: false })
}

/// Mean relative change over the last `window` steps of `series`, or `None`
/// if the series is too short.
pub fn mean_relative_change(series: &[Time], window: usize) -> Option<f64> {
    if window == 0 || series.len() < window + 1 {
        return None;
    }
    let tail = &series[series.len() - window - 1..];
    let total: f64 = tail
        .windows(2)
        .map(|w| {
            let (prev, cur) = (w[0] as f64, w[1] as f64);
            if prev == 0.0 {
                if cur == 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                ((cur - prev) / prev).abs()
            }
        })
        .sum();
    Some(total / window as f64)
}

fn tournament(fitness: &[Time], rng: &mut Rng) -> usize {
    let a = rng.gen_range(0..fitness.len());
    let b = rng.gen_range(0..fitness.len());
    match fitness[a].cmp(&fitness[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => a.min(b),
    }
}

fn evaluate(instance: &Instance, kind: Objective, orders: &[JobOrder]) -> Result<Vec<Time>> {
    orders
        .par_iter()
        .map_init(|| Decoder::new(instance).expect("instance checked by caller"), |dec, order| dec.value(order, kind))
        .collect()
}

/// Genetic algorithm. The initial population is the sorted order plus random
/// permutations; each offspring comes from two tournament-selected parents,
/// swap crossover and swap mutation. Randomness for slot `i` of generation
/// `g` is drawn from a stream keyed by `(seed, g, i)`, so results do not
/// depend on thread scheduling.
pub fn run_ga(instance: &Instance, kind: Objective, config: &GAConfig) -> Result<SearchOutcome> {
    config.validate()?;
    Decoder::new(instance)?;
    let n = instance.n();
    let mut population: Vec<JobOrder> = Vec::with_capacity(config.pop_size);
    population.push(sp_initial_order(instance));
    for slot in 1..config.pop_size {
        let mut rng = derived_rng(config.seed, &[0, slot as u64]);
        let mut order: JobOrder = (0..n).collect();
        order.shuffle(&mut rng);
        population.push(order);
    }
    let mut fitness = evaluate(instance, kind, &population)?;
    let (mut best_slot, mut best_value) = argmin(&fitness);
    let mut best_order = population[best_slot].clone();

    let mut trace = Vec::new();
    let mut stalled = false;
    for generation in 1..=config.max_generations {
        let offspring: Vec<JobOrder> = (0..config.pop_size)
            .into_par_iter()
            .map(|slot| {
                let mut rng = derived_rng(config.seed, &[generation as u64, slot as u64]);
                let u = &population[tournament(&fitness, &mut rng)];
                let v = &population[tournament(&fitness, &mut rng)];
                let child = crossover(u, v, &mut rng);
                mutate(&child, &mut rng)
            })
            .collect();
        fitness = evaluate(instance, kind, &offspring)?;
        population = offspring;
        (best_slot, _) = argmin(&fitness);
        if fitness[best_slot] < best_value {
            best_value = fitness[best_slot];
            best_order.clone_from(&population[best_slot]);
        }
        trace.push(best_value);
        if mean_relative_change(&trace, config.stall_window).is_some_and(|c| c <= config.stall_tolerance) {
            stalled = true;
            break;
        }
    }
    let schedule = Decoder::new(instance)?.schedule(&best_order)?;
    Ok(SearchOutcome { order: best_order, schedule, value: best_value, trace, stalled })
}

fn argmin(values: &[Time]) -> (usize, Time) {
    let (slot, &value) = values.iter().enumerate().min_by_key(|&(i, &v)| (v, i)).expect("nonempty population");
    (slot, value)
}
