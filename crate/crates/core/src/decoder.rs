//! Greedy list decoder: turns a job permutation into a feasible schedule.
//!
//! Jobs are placed one at a time in list order. For every needed stage not
//! yet covered by a cluster stay, the decoder looks at the machines that can
//! host the job's next visit under its remaining route families. Machines
//! already free when the job reaches the stage are "available"; if none is,
//! the machines that free up first are. Among those it takes the one covering
//! the most stages, then the earliest free, then the lowest index. Each visit
//! is appended to its machine, so the timing is semi-active for the resulting
//! machine orders.

use crate::error::{Error, Result};
use crate::evaluator::Schedule;
use crate::model::{Instance, Objective, PlannedVisit, RouteFamily, Stage, StageSet, Time, STAGE_COUNT};

/// A permutation of job indices (positions in `Instance::jobs`).
pub type JobOrder = Vec<usize>;

/// Checks that `order` is a permutation of `0..n`.
pub fn validate_order(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::Sequence(format!("order has {} entries for {n} jobs", order.len())));
    }
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::Sequence(format!("order is not a permutation (entry {k})")));
        }
    }
    Ok(())
}

/// Number of cluster machines the job could visit under its route families.
pub fn cluster_affinity(instance: &Instance, job: usize) -> usize {
    crate::model::route_options(&instance.jobs[job])
        .into_iter()
        .filter_map(RouteFamily::cluster)
        .map(|class| instance.machines_of(class).count())
        .sum()
}

struct JobPlan {
    /// Realizable families, each with its visits indexed by entry stage slot.
    families: Vec<[Option<PlannedVisit>; STAGE_COUNT]>,
}

/// Precomputed route plans plus reusable buffers; decode many orders of one
/// instance without reallocating.
pub struct Decoder<'a> {
    instance: &'a Instance,
    plans: Vec<JobPlan>,
    /// Machines per tool class, indexed like `ToolClass::ALL`.
    by_class: Vec<Vec<usize>>,
    free: Vec<Time>,
}

fn class_slot(class: crate::model::ToolClass) -> usize {
    crate::model::ToolClass::ALL.iter().position(|&c| c == class).expect("known class")
}

struct Placement {
    machine: usize,
    stages: StageSet,
}

impl<'a> Decoder<'a> {
    pub fn new(instance: &'a Instance) -> Result<Self> {
        let mut plans = Vec::with_capacity(instance.n());
        for job in &instance.jobs {
            let routes = instance.realizable_routes(job);
            if routes.is_empty() {
                let stage = Stage::ALL
                    .into_iter()
                    .find(|&s| job.needs(s) && instance.eligible_machines(s).is_empty())
                    .unwrap_or(Stage::COAT);
                return Err(Error::NoEligibleMachine { job: job.id, stage: stage.number() });
            }
            let families = routes
                .into_iter()
                .map(|family| {
                    let mut by_entry = [None; STAGE_COUNT];
                    for visit in family.visits(job) {
                        by_entry[visit.stages.first().expect("nonempty visit").slot()] = Some(visit);
                    }
                    by_entry
                })
                .collect();
            plans.push(JobPlan { families });
        }
        let by_class = crate::model::ToolClass::ALL.iter().map(|&c| instance.machines_of(c).collect()).collect();
        Ok(Decoder { instance, plans, by_class, free: vec![0; instance.machines.len()] })
    }

    /// Chooses the machine for the visit entering at `stage`, given the job's
    /// still-consistent families (`mask` bits index `plan.families`) and the
    /// time `t` the job becomes ready for the stage.
    fn place(&self, job: usize, stage: Stage, mask: u8, t: Time) -> Option<Placement> {
        let plan = &self.plans[job];
        // Best candidate so far as (coverage, free, index, stages).
        let mut best: Option<(usize, Time, usize, StageSet)> = None;
        let mut earliest = Time::MAX;
        let mut any_available = false;
        let mut seen_class = 0u16;
        for (f, visits) in plan.families.iter().enumerate() {
            if mask & (1 << f) == 0 {
                continue;
            }
            let Some(visit) = visits[stage.slot()] else { continue };
            let cs = class_slot(visit.class);
            if seen_class & (1 << cs) != 0 {
                continue;
            }
            seen_class |= 1 << cs;
            for &j in &self.by_class[cs] {
                earliest = earliest.min(self.free[j]);
                any_available |= self.free[j] <= t;
            }
        }
        seen_class = 0;
        for (f, visits) in plan.families.iter().enumerate() {
            if mask & (1 << f) == 0 {
                continue;
            }
            let Some(visit) = visits[stage.slot()] else { continue };
            let cs = class_slot(visit.class);
            if seen_class & (1 << cs) != 0 {
                continue;
            }
            seen_class |= 1 << cs;
            let coverage = visit.class.covered_stages().len();
            for &j in &self.by_class[cs] {
                let free = self.free[j];
                let eligible = if any_available { free <= t } else { free == earliest };
                if !eligible {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bc, bf, bj, _)) => (coverage, -free, usize::MAX - j) > (bc, -bf, usize::MAX - bj),
                };
                if better {
                    best = Some((coverage, free, j, visit.stages));
                }
            }
        }
        best.map(|(_, _, machine, stages)| Placement { machine, stages })
    }

    /// Decodes `order` into `completion`, calling `sink(job, stage, machine)`
    /// for every processed operation in placement order.
    fn run(
        &mut self,
        order: &[usize],
        completion: &mut Vec<[Time; STAGE_COUNT]>,
        mut sink: impl FnMut(usize, Stage, usize),
    ) -> Result<()> {
        let instance = self.instance;
        validate_order(order, instance.n())?;
        self.free.iter_mut().for_each(|f| *f = 0);
        completion.clear();
        completion.resize(instance.n(), [0; STAGE_COUNT]);
        for &k in order {
            let job = &instance.jobs[k];
            let mut mask: u8 = (1u8 << self.plans[k].families.len()) - 1;
            let mut t = job.ready;
            let mut held: Option<(usize, StageSet)> = None;
            for stage in Stage::ALL {
                if !job.needs(stage) {
                    completion[k][stage.slot()] = t;
                    continue;
                }
                let machine = match held {
                    Some((j, stages)) if stages.contains(stage) => {
                        t += job.time(stage);
                        if stages.last() == Some(stage) {
                            self.free[j] = t;
                            held = None;
                        }
                        j
                    }
                    _ => {
                        let Some(placed) = self.place(k, stage, mask, t) else {
                            return Err(Error::NoEligibleMachine { job: job.id, stage: stage.number() });
                        };
                        let class = instance.machines[placed.machine].class;
                        for (f, visits) in self.plans[k].families.iter().enumerate() {
                            if visits[stage.slot()].map(|v| v.class) != Some(class) {
                                mask &= !(1 << f);
                            }
                        }
                        let j = placed.machine;
                        t = t.max(self.free[j]) + job.time(stage);
                        if placed.stages.len() > 1 {
                            held = Some((j, placed.stages));
                        } else {
                            self.free[j] = t;
                        }
                        j
                    }
                };
                completion[k][stage.slot()] = t;
                sink(k, stage, machine);
            }
        }
        Ok(())
    }

    /// Decodes `order` into a full schedule.
    pub fn schedule(&mut self, order: &[usize]) -> Result<Schedule> {
        let n = self.instance.n();
        let mut assign = vec![[None; STAGE_COUNT]; n];
        let mut sequences = vec![Vec::new(); self.instance.machines.len()];
        let mut completion = Vec::with_capacity(n);
        self.run(order, &mut completion, |k, stage, j| {
            assign[k][stage.slot()] = Some(j);
            sequences[j].push((k, stage));
        })?;
        Ok(Schedule { assign, completion, sequences })
    }

    /// Objective value of the decoded `order` without materializing the
    /// schedule.
    pub fn value(&mut self, order: &[usize], kind: Objective) -> Result<Time> {
        let mut completion = Vec::with_capacity(self.instance.n());
        self.run(order, &mut completion, |_, _, _| {})?;
        Ok(objective_of(self.instance, &completion, kind))
    }
}

/// Objective value from completion rows (last column is each job's finish).
pub fn objective_of(instance: &Instance, completion: &[[Time; STAGE_COUNT]], kind: Objective) -> Time {
    let finish = completion.iter().map(|row| row[STAGE_COUNT - 1]);
    match kind {
        Objective::Cmax => finish.max().unwrap_or(0),
        Objective::Wct => finish.zip(&instance.jobs).map(|(c, j)| j.weight * c).sum(),
        Objective::Twt => finish.zip(&instance.jobs).map(|(c, j)| j.weight * (c - j.due).max(0)).sum(),
    }
}

/// Decodes `order` and returns the schedule with its objective value.
pub fn decode(instance: &Instance, order: &[usize], kind: Objective) -> Result<(Schedule, Time)> {
    let schedule = Decoder::new(instance)?.schedule(order)?;
    let value = objective_of(instance, &schedule.completion, kind);
    Ok((schedule, value))
}
