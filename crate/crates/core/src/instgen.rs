//! Random instances following the experimental design of the photolithography
//! study: Bernoulli stage requirements with fixed stage times, ready times
//! and due dates scaled by an estimated makespan, and two equipment levels.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Job, Machine, Stage, Time, ToolClass, STAGE_COUNT};
use crate::rng::{rng_from, Rng};

/// Stage times when a stage is required.
pub const STAGE_TIMES: [Time; STAGE_COUNT] = [40, 20, 75, 45, 30, 45];

/// Probability that each stage is required.
pub const STAGE_PROBABILITY: [f64; STAGE_COUNT] = [0.8, 1.0, 1.0, 0.2, 1.0, 0.5];

/// Expose is the bottleneck stage.
pub const BOTTLENECK: Stage = Stage::EXPOSE;

/// Job counts of the reproduction grid.
pub const GRID_JOB_COUNTS: [usize; 3] = [5, 15, 25];
pub const GRID_TARDINESS: [f64; 2] = [0.3, 0.6];
pub const GRID_RANGE: [f64; 2] = [0.5, 2.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReadyScenario {
    /// Every job is ready at time zero.
    AllZero,
    /// 30% of jobs ready at zero, the rest spread over two thirds of the
    /// estimated makespan.
    Mixed30_70,
}

impl ReadyScenario {
    /// Flag used in result patterns: 0 for all-zero, 1 for mixed.
    pub fn flag(self) -> u8 {
        match self {
            ReadyScenario::AllZero => 0,
            ReadyScenario::Mixed30_70 => 1,
        }
    }
}

impl fmt::Display for ReadyScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReadyScenario::AllZero => "zero",
            ReadyScenario::Mixed30_70 => "mixed",
        })
    }
}

impl FromStr for ReadyScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "0" | "allzero" => Ok(ReadyScenario::AllZero),
            "mixed" | "1" | "mixed30_70" => Ok(ReadyScenario::Mixed30_70),
            _ => Err(Error::Parse(format!("unknown ready scenario {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquipmentScenario {
    Scenario1,
    Scenario2,
}

impl EquipmentScenario {
    pub fn number(self) -> u8 {
        match self {
            EquipmentScenario::Scenario1 => 1,
            EquipmentScenario::Scenario2 => 2,
        }
    }

    /// Machine counts per class, in [`ToolClass::ALL`] order.
    pub fn counts(self) -> [usize; 9] {
        match self {
            EquipmentScenario::Scenario1 => [4, 2, 4, 2, 3, 2, 2, 2, 1],
            EquipmentScenario::Scenario2 => [2, 1, 2, 1, 2, 1, 1, 1, 1],
        }
    }
}

impl fmt::Display for EquipmentScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for EquipmentScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(EquipmentScenario::Scenario1),
            "2" => Ok(EquipmentScenario::Scenario2),
            _ => Err(Error::Parse(format!("unknown equipment scenario {s:?} (expected 1 or 2)"))),
        }
    }
}

/// One cell of the experimental design plus the seed of one replication.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub ready: ReadyScenario,
    /// Tardiness factor T.
    pub tardiness: f64,
    /// Due-date range R.
    pub range: f64,
    pub equipment: EquipmentScenario,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("job count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.tardiness) {
            return Err(Error::Config(format!("tardiness factor {} outside [0, 1)", self.tardiness)));
        }
        if !(self.range >= 0.0) {
            return Err(Error::Config(format!("due-date range {} must be nonnegative", self.range)));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "n={};ready={};T={};R={};equipment={};seed={}",
            self.n, self.ready, self.tardiness, self.range, self.equipment, self.seed
        )
    }
}

/// Estimated makespan `1.5 * (n * p_bn / m_ibn + p_nbn)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmaxEstimate {
    pub n: usize,
    pub value: f64,
    /// Processing time of the bottleneck stage.
    pub p_bn: Time,
    /// Machines able to process the bottleneck stage.
    pub m_ibn: usize,
    /// Sum of the non-bottleneck stage times.
    pub p_nbn: Time,
}

impl CmaxEstimate {
    /// `floor(2/3 * value)`, computed exactly.
    pub fn ready_upper(&self) -> Time {
        self.p_nbn + (self.n as Time * self.p_bn) / self.m_ibn as Time
    }
}

pub fn equipment(scenario: EquipmentScenario) -> Vec<Machine> {
    ToolClass::ALL
        .into_iter()
        .zip(scenario.counts())
        .flat_map(|(class, count)| (1..=count).map(move |i| Machine { id: format!("{class}{i}"), class }))
        .collect()
}

pub fn gen_processing(rng: &mut Rng) -> [Time; STAGE_COUNT] {
    let mut p = [0; STAGE_COUNT];
    for (slot, t) in p.iter_mut().enumerate() {
        let prob = STAGE_PROBABILITY[slot];
        if prob >= 1.0 || rng.gen_bool(prob) {
            *t = STAGE_TIMES[slot];
        }
    }
    p
}

pub fn estimate_cmax(n: usize, machines: &[Machine]) -> Result<CmaxEstimate> {
    let m_ibn = machines.iter().filter(|m| m.class.covers(BOTTLENECK)).count();
    if m_ibn == 0 {
        return Err(Error::Config("no machine processes the bottleneck stage".into()));
    }
    let p_bn = STAGE_TIMES[BOTTLENECK.slot()];
    let p_nbn: Time = Stage::ALL.iter().filter(|&&s| s != BOTTLENECK).map(|s| STAGE_TIMES[s.slot()]).sum();
    let value = 1.5 * (n as f64 * p_bn as f64 / m_ibn as f64 + p_nbn as f64);
    Ok(CmaxEstimate { n, value, p_bn, m_ibn, p_nbn })
}

/// Number of zero ready times under the mixed scenario: 30% of `n`, with
/// halves rounded up.
pub fn mixed_zero_count(n: usize) -> usize {
    (3 * n + 5) / 10
}

pub fn gen_ready(rng: &mut Rng, scenario: ReadyScenario, estimate: &CmaxEstimate, n: usize) -> Vec<Time> {
    match scenario {
        ReadyScenario::AllZero => vec![0; n],
        ReadyScenario::Mixed30_70 => {
            let mut slots: Vec<usize> = (0..n).collect();
            slots.shuffle(rng);
            let zeros = mixed_zero_count(n);
            let upper = estimate.ready_upper().max(1);
            let mut ready = vec![0; n];
            for &k in &slots[zeros..] {
                ready[k] = rng.gen_range(1..=upper);
            }
            ready
        }
    }
}

/// Bounds of the due-date draw: `round(mu * (1 -+ R/2))` with
/// `mu = value * (1 - T)`, lower bound clamped at zero.
pub fn due_bounds(tardiness: f64, range: f64, estimate: &CmaxEstimate) -> (Time, Time) {
    let mu = estimate.value * (1.0 - tardiness);
    let lo = (mu * (1.0 - 0.5 * range)).round().max(0.0) as Time;
    let hi = (mu * (1.0 + 0.5 * range)).round().max(0.0) as Time;
    (lo, hi.max(lo))
}

pub fn gen_due(rng: &mut Rng, tardiness: f64, range: f64, estimate: &CmaxEstimate) -> Time {
    let (lo, hi) = due_bounds(tardiness, range, estimate);
    rng.gen_range(lo..=hi)
}

pub fn gen_weights(rng: &mut Rng, n: usize) -> Vec<Time> {
    (0..n).map(|_| rng.gen_range(1..=5)).collect()
}

/// Generates the instance for `config`. Identical configs give identical
/// instances.
pub fn generate_instance(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    let machines = equipment(config.equipment);
    let estimate = estimate_cmax(config.n, &machines)?;
    let mut rng = rng_from(config.seed);
    let processing: Vec<_> = (0..config.n).map(|_| gen_processing(&mut rng)).collect();
    let ready = gen_ready(&mut rng, config.ready, &estimate, config.n);
    let due: Vec<_> = (0..config.n).map(|_| gen_due(&mut rng, config.tardiness, config.range, &estimate)).collect();
    let weights = gen_weights(&mut rng, config.n);
    let jobs = (0..config.n)
        .map(|k| Job { id: k as u32 + 1, p: processing[k], ready: ready[k], due: due[k], weight: weights[k] })
        .collect();
    Instance::new(config.label(), machines, jobs)
}

/// Every cell of the reproduction grid for the given job counts, ordered by
/// (n, ready, T, R, equipment).
pub fn design_cells(job_counts: &[usize]) -> Vec<(usize, ReadyScenario, f64, f64, EquipmentScenario)> {
    let mut cells = Vec::new();
    for &n in job_counts {
        for ready in [ReadyScenario::AllZero, ReadyScenario::Mixed30_70] {
            for t in GRID_TARDINESS {
                for r in GRID_RANGE {
                    for eq in [EquipmentScenario::Scenario1, EquipmentScenario::Scenario2] {
                        cells.push((n, ready, t, r, eq));
                    }
                }
            }
        }
    }
    cells
}
