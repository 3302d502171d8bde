//! Schedule representation, feasibility checking and objective evaluation.
//!
//! Feasibility follows the mixed-integer model of the line: stage chaining
//! with ready times, assignment exactly where a stage is processed, cluster
//! tools held for their whole span, bake ovens shared between both bake
//! stages, and a single precedence decision per job pair that every shared
//! machine must respect. Machines are single timelines across every stage they
//! serve, so one non-overlap rule covers stand-alone tools, cluster spans and
//! the reentrant bake pool together.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Objective, Stage, StageSet, Time, ToolClass, STAGE_COUNT};
use crate::timing::{Reservation, TimingWorkspace};

/// Per job, the machine index processing each stage (`None` where skipped).
pub type Assignment = Vec<[Option<usize>; STAGE_COUNT]>;

/// Per machine, the time-ordered (job index, stage) visits.
pub type Sequences = Vec<Vec<(usize, Stage)>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub assign: Assignment,
    /// Completion time per job and stage. Skipped stages carry the previous
    /// stage's completion; a skipped first stage carries the ready time.
    pub completion: Vec<[Time; STAGE_COUNT]>,
    pub sequences: Sequences,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    ReadyTime,
    StageChain,
    MachineOverlap,
    MissingAssign,
    ForbiddenAssign,
    ClusterSpan,
    ClusterExclusive,
    BakeShared,
    /// Two jobs ordered one way on one shared machine and the other way on
    /// another.
    PairOrder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleMetrics {
    pub cmax: Time,
    pub wct: Time,
    pub twt: Time,
    /// Tardiness per job, in instance order.
    pub tardiness: Vec<Time>,
}

impl ScheduleMetrics {
    pub fn value(&self, kind: Objective) -> Time {
        match kind {
            Objective::Cmax => self.cmax,
            Objective::Wct => self.wct,
            Objective::Twt => self.twt,
        }
    }
}

/// A machine occupation interval derived from a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occupation {
    pub job: usize,
    pub stages: StageSet,
    pub start: Time,
    pub end: Time,
}

impl Schedule {
    pub fn start(&self, instance: &Instance, job: usize, stage: Stage) -> Time {
        self.completion[job][stage.slot()] - instance.jobs[job].time(stage)
    }

    /// Completion of the job's last processed stage.
    pub fn finish(&self, job: usize) -> Time {
        self.completion[job][STAGE_COUNT - 1]
    }

    /// Occupation intervals per machine, sorted by start. A job's stages on a
    /// cluster tool merge into one interval from the first stage's start to
    /// the last stage's completion.
    pub fn occupations(&self, instance: &Instance) -> Vec<Vec<Occupation>> {
        let mut out: Vec<Vec<Occupation>> = vec![Vec::new(); instance.machines.len()];
        for (k, row) in self.assign.iter().enumerate() {
            for stage in Stage::ALL {
                let Some(j) = row[stage.slot()] else { continue };
                if j >= instance.machines.len() || !instance.jobs[k].needs(stage) {
                    continue;
                }
                let start = self.start(instance, k, stage);
                let end = self.completion[k][stage.slot()];
                let cluster = instance.machines[j].class.is_cluster();
                match out[j].iter_mut().find(|o| cluster && o.job == k) {
                    Some(o) => {
                        o.stages = o.stages.with(stage);
                        o.start = o.start.min(start);
                        o.end = o.end.max(end);
                    }
                    None => out[j].push(Occupation { job: k, stages: StageSet::EMPTY.with(stage), start, end }),
                }
            }
        }
        for list in &mut out {
            list.sort_by_key(|o| (o.start, o.end, o.job));
        }
        out
    }
}

fn job_name(instance: &Instance, k: usize) -> String {
    format!("job {}", instance.jobs[k].id)
}

fn machine_name(instance: &Instance, j: usize) -> &str {
    &instance.machines[j].id
}

/// Lists every constraint violation of `schedule`; empty means feasible.
pub fn check_feasibility(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, detail: String| out.push(Violation { kind, detail });
    let n = instance.jobs.len();
    let machines = instance.machines.len();

    if schedule.assign.len() != n || schedule.completion.len() != n {
        push(
            ViolationKind::MissingAssign,
            format!(
                "schedule covers {} assignment rows and {} completion rows for {n} jobs",
                schedule.assign.len(),
                schedule.completion.len()
            ),
        );
        return out;
    }

    // Assignment exactly where a stage is processed, on an eligible machine.
    for (k, job) in instance.jobs.iter().enumerate() {
        let name = job_name(instance, k);
        for stage in Stage::ALL {
            match (job.needs(stage), schedule.assign[k][stage.slot()]) {
                (true, None) => push(
                    ViolationKind::MissingAssign,
                    format!("{name} stage {stage} has no machine"),
                ),
                (false, Some(j)) => push(
                    ViolationKind::ForbiddenAssign,
                    format!("{name} skips stage {stage} but is assigned to machine #{j}"),
                ),
                (true, Some(j)) if j >= machines => push(
                    ViolationKind::MissingAssign,
                    format!("{name} stage {stage} refers to unknown machine #{j}"),
                ),
                (true, Some(j)) if !instance.machines[j].class.covers(stage) => push(
                    ViolationKind::ForbiddenAssign,
                    format!(
                        "{name} stage {stage} on {} whose class {} does not serve it",
                        machine_name(instance, j),
                        instance.machines[j].class
                    ),
                ),
                _ => {}
            }
        }
        if job.needs(Stage::BAKE_PRE) {
            if let Some(j) = schedule.assign[k][Stage::COAT.slot()].filter(|&j| j < machines) {
                if matches!(instance.machines[j].class, ToolClass::CED | ToolClass::CEDB) {
                    push(
                        ViolationKind::ForbiddenAssign,
                        format!(
                            "{name} needs the pre-develop bake but enters cluster {}",
                            machine_name(instance, j)
                        ),
                    );
                }
            }
        }
        // Cluster span: a cluster used at any stage is used at all its stages.
        let mut clusters: Vec<usize> = schedule.assign[k]
            .iter()
            .flatten()
            .copied()
            .filter(|&j| j < machines && instance.machines[j].class.is_cluster())
            .collect();
        clusters.dedup();
        for j in clusters {
            let class = instance.machines[j].class;
            for &stage in class.covered_stages() {
                if schedule.assign[k][stage.slot()] != Some(j) {
                    push(
                        ViolationKind::ClusterSpan,
                        format!(
                            "{name} uses cluster {} but not for its stage {stage}",
                            machine_name(instance, j)
                        ),
                    );
                }
            }
        }
    }

    // Sequences must list exactly the assigned visits.
    let mut listed = vec![[0u8; STAGE_COUNT]; n];
    for (j, seq) in schedule.sequences.iter().enumerate() {
        for &(k, stage) in seq {
            if k >= n || schedule.assign[k][stage.slot()] != Some(j) {
                push(
                    ViolationKind::MissingAssign,
                    format!("sequence of machine #{j} lists a visit (#{k}, stage {stage}) not assigned there"),
                );
            } else {
                listed[k][stage.slot()] += 1;
            }
        }
    }
    for k in 0..n {
        for stage in Stage::ALL {
            let assigned = schedule.assign[k][stage.slot()].is_some_and(|j| j < machines);
            if assigned && listed[k][stage.slot()] != 1 && !schedule.sequences.is_empty() {
                push(
                    ViolationKind::MissingAssign,
                    format!(
                        "{} stage {stage} appears {} times in machine sequences",
                        job_name(instance, k),
                        listed[k][stage.slot()]
                    ),
                );
            }
        }
    }

    // Ready times and stage chaining.
    for (k, job) in instance.jobs.iter().enumerate() {
        let name = job_name(instance, k);
        let mut prev: Option<(Stage, Time)> = None;
        for stage in Stage::ALL.into_iter().filter(|&s| job.needs(s)) {
            let start = schedule.start(instance, k, stage);
            match prev {
                None if start < job.ready => push(
                    ViolationKind::ReadyTime,
                    format!("{name} starts stage {stage} at {start} before its ready time {}", job.ready),
                ),
                Some((ps, pc)) if start < pc => push(
                    ViolationKind::StageChain,
                    format!("{name} starts stage {stage} at {start} before stage {ps} completes at {pc}"),
                ),
                _ => {}
            }
            prev = Some((stage, schedule.completion[k][stage.slot()]));
        }
    }

    // Machine timelines and pairwise precedence.
    let occupations = schedule.occupations(instance);
    let mut orientation: BTreeMap<(usize, usize), (bool, usize)> = BTreeMap::new();
    for (j, occ) in occupations.iter().enumerate() {
        let class = instance.machines[j].class;
        let mname = machine_name(instance, j);
        for a in 0..occ.len() {
            for b in a + 1..occ.len() {
                let (x, y) = (occ[a], occ[b]);
                if x.job == y.job {
                    continue;
                }
                if x.start < y.end && y.start < x.end {
                    let kind = if class.is_cluster() {
                        ViolationKind::ClusterExclusive
                    } else if class == ToolClass::B && x.stages != y.stages {
                        ViolationKind::BakeShared
                    } else {
                        ViolationKind::MachineOverlap
                    };
                    push(
                        kind,
                        format!(
                            "{} [{}, {}) and {} [{}, {}) overlap on {mname}",
                            job_name(instance, x.job),
                            x.start,
                            x.end,
                            job_name(instance, y.job),
                            y.start,
                            y.end
                        ),
                    );
                }
            }
        }
        // Per job pair on this machine: does one job finish all its visits
        // before the other starts any?
        let mut jobs: Vec<usize> = occ.iter().map(|o| o.job).collect();
        jobs.sort_unstable();
        jobs.dedup();
        for (ai, &k) in jobs.iter().enumerate() {
            for &l in &jobs[ai + 1..] {
                let span = |job: usize| {
                    let it = occ.iter().filter(move |o| o.job == job);
                    (it.clone().map(|o| o.start).min().unwrap(), it.map(|o| o.end).max().unwrap())
                };
                let (ks, ke) = span(k);
                let (ls, le) = span(l);
                let k_first = if ke <= ls {
                    Some(true)
                } else if le <= ks {
                    Some(false)
                } else {
                    None
                };
                match k_first {
                    Some(first) => match orientation.get(&(k, l)) {
                        Some(&(prev, pj)) if prev != first => push(
                            ViolationKind::PairOrder,
                            format!(
                                "{} and {} are ordered differently on {} and {mname}",
                                job_name(instance, k),
                                job_name(instance, l),
                                machine_name(instance, pj)
                            ),
                        ),
                        Some(_) => {}
                        None => {
                            orientation.insert((k, l), (first, j));
                        }
                    },
                    None => {
                        let overlapping = occ.iter().filter(|o| o.job == k).any(|x| {
                            occ.iter().filter(|o| o.job == l).any(|y| x.start < y.end && y.start < x.end)
                        });
                        if !overlapping {
                            push(
                                ViolationKind::BakeShared,
                                format!(
                                    "{} and {} interleave their visits on {mname}",
                                    job_name(instance, k),
                                    job_name(instance, l)
                                ),
                            );
                        }
                    }
                }
            }
        }
    }
    out
}

/// Objective values of a schedule, without checking feasibility.
pub fn metrics(instance: &Instance, schedule: &Schedule) -> ScheduleMetrics {
    let mut cmax = 0;
    let mut wct = 0;
    let mut twt = 0;
    let mut tardiness = Vec::with_capacity(instance.jobs.len());
    for (k, job) in instance.jobs.iter().enumerate() {
        let c = schedule.finish(k);
        let t = (c - job.due).max(0);
        cmax = cmax.max(c);
        wct += job.weight * c;
        twt += job.weight * t;
        tardiness.push(t);
    }
    ScheduleMetrics { cmax, wct, twt, tardiness }
}

/// Objective value of a feasible schedule; infeasible schedules are refused
/// with their violation list.
pub fn objective(instance: &Instance, schedule: &Schedule, kind: Objective) -> Result<Time> {
    let violations = check_feasibility(instance, schedule);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    Ok(metrics(instance, schedule).value(kind))
}

/// Converts per-machine visit lists into reservations, merging a job's
/// consecutive stages on a cluster tool.
pub fn reservations(instance: &Instance, assign: &Assignment, sequences: &Sequences) -> Result<Vec<Vec<Reservation>>> {
    let n = instance.jobs.len();
    if assign.len() != n {
        return Err(Error::Sequence(format!("assignment has {} rows for {n} jobs", assign.len())));
    }
    if sequences.len() != instance.machines.len() {
        return Err(Error::Sequence(format!(
            "{} machine sequences for {} machines",
            sequences.len(),
            instance.machines.len()
        )));
    }
    let mut seen = vec![[false; STAGE_COUNT]; n];
    let mut orders = Vec::with_capacity(sequences.len());
    for (j, seq) in sequences.iter().enumerate() {
        let cluster = instance.machines[j].class.is_cluster();
        let mut order: Vec<Reservation> = Vec::new();
        for &(k, stage) in seq {
            if k >= n || assign[k][stage.slot()] != Some(j) || !instance.jobs[k].needs(stage) {
                return Err(Error::Sequence(format!(
                    "machine {} lists visit (#{k}, stage {stage}) that is not assigned to it",
                    instance.machines[j].id
                )));
            }
            if std::mem::replace(&mut seen[k][stage.slot()], true) {
                return Err(Error::Sequence(format!("visit (#{k}, stage {stage}) listed twice")));
            }
            match order.last_mut() {
                Some(last) if cluster && last.job == k => {
                    if last.stages.last().is_some_and(|s| s >= stage) {
                        return Err(Error::Sequence(format!(
                            "job #{k} stages out of order on {}",
                            instance.machines[j].id
                        )));
                    }
                    last.stages = last.stages.with(stage);
                }
                _ => {
                    if cluster && order.iter().any(|r| r.job == k) {
                        return Err(Error::Sequence(format!(
                            "job #{k} leaves and re-enters cluster {}",
                            instance.machines[j].id
                        )));
                    }
                    order.push(Reservation { job: k, stages: StageSet::EMPTY.with(stage) });
                }
            }
        }
        orders.push(order);
    }
    for (k, job) in instance.jobs.iter().enumerate() {
        for stage in Stage::ALL {
            if job.needs(stage) && !seen[k][stage.slot()] {
                return Err(Error::Sequence(format!("job {} stage {stage} is not sequenced", job.id)));
            }
        }
    }
    Ok(orders)
}

/// Earliest (semi-active) completion times for a fixed assignment and fixed
/// machine sequences.
pub fn earliest_completion(instance: &Instance, assign: &Assignment, sequences: &Sequences) -> Result<Schedule> {
    let orders = reservations(instance, assign, sequences)?;
    let mut ws = TimingWorkspace::new();
    let completion = ws.compute(instance, &orders).map_err(|cycle| {
        let names: Vec<String> = cycle
            .0
            .iter()
            .map(|&(k, s)| format!("job {} stage {s}", instance.jobs[k].id))
            .collect();
        Error::Cycle(names.join(" -> "))
    })?;
    Ok(Schedule { assign: assign.clone(), completion: completion.to_vec(), sequences: sequences.clone() })
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    job_id: u32,
    stage: u8,
    machine_id: String,
    start: Time,
    completion: Time,
}

/// Writes one CSV row per visit, sorted by machine then start.
pub fn write_schedule_csv<W: Write>(instance: &Instance, schedule: &Schedule, out: W) -> Result<()> {
    let mut rows = Vec::new();
    for (k, row) in schedule.assign.iter().enumerate() {
        for stage in Stage::ALL {
            if let Some(j) = row[stage.slot()] {
                rows.push((j, schedule.start(instance, k, stage), stage, k));
            }
        }
    }
    rows.sort();
    let mut writer = csv::Writer::from_writer(out);
    for (j, start, stage, k) in rows {
        writer.serialize(ScheduleRow {
            job_id: instance.jobs[k].id,
            stage: stage.number(),
            machine_id: instance.machines[j].id.clone(),
            start,
            completion: schedule.completion[k][stage.slot()],
        })?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a schedule file. Rows must match the instance's jobs, machines and
/// processing times; missing or misplaced visits are left for
/// [`check_feasibility`] to report.
pub fn read_schedule_csv<R: Read>(instance: &Instance, input: R) -> Result<Schedule> {
    let n = instance.jobs.len();
    let mut assign: Assignment = vec![[None; STAGE_COUNT]; n];
    let mut done: Vec<[Option<Time>; STAGE_COUNT]> = vec![[None; STAGE_COUNT]; n];
    let mut visits: Vec<Vec<(Time, Stage, usize)>> = vec![Vec::new(); instance.machines.len()];
    let mut reader = csv::Reader::from_reader(input);
    for row in reader.deserialize() {
        let row: ScheduleRow = row?;
        let k = instance
            .job_index(row.job_id)
            .ok_or_else(|| Error::Parse(format!("unknown job id {}", row.job_id)))?;
        let j = instance
            .machine_index(&row.machine_id)
            .ok_or_else(|| Error::Parse(format!("unknown machine id {:?}", row.machine_id)))?;
        let stage = Stage::new(row.stage).ok_or_else(|| Error::Parse(format!("bad stage {}", row.stage)))?;
        let p = instance.jobs[k].time(stage);
        if row.completion - row.start != p {
            return Err(Error::Parse(format!(
                "job {} stage {stage}: interval [{}, {}] does not match processing time {p}",
                row.job_id, row.start, row.completion
            )));
        }
        if assign[k][stage.slot()].replace(j).is_some() {
            return Err(Error::Parse(format!("job {} stage {stage} listed twice", row.job_id)));
        }
        done[k][stage.slot()] = Some(row.completion);
        visits[j].push((row.start, stage, k));
    }
    let completion = instance
        .jobs
        .iter()
        .zip(&done)
        .map(|(job, row)| {
            let mut last = job.ready;
            let mut out = [0; STAGE_COUNT];
            for stage in Stage::ALL {
                if let Some(c) = row[stage.slot()] {
                    last = c;
                }
                out[stage.slot()] = last;
            }
            out
        })
        .collect();
    let sequences = visits
        .into_iter()
        .map(|mut v| {
            v.sort();
            v.into_iter().map(|(_, s, k)| (k, s)).collect()
        })
        .collect();
    Ok(Schedule { assign, completion, sequences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Job, Machine};

    fn machines(ids: &[(&str, ToolClass)]) -> Vec<Machine> {
        ids.iter().map(|&(id, class)| Machine { id: id.into(), class }).collect()
    }

    fn line() -> Vec<Machine> {
        machines(&[
            ("S1", ToolClass::S),
            ("C1", ToolClass::C),
            ("E1", ToolClass::E),
            ("D1", ToolClass::D),
            ("B1", ToolClass::B),
            ("B2", ToolClass::B),
            ("CED1", ToolClass::CED),
            ("CEDB1", ToolClass::CEDB),
            ("ED1", ToolClass::ED),
        ])
    }

    fn job(id: u32, p: [Time; 6], ready: Time, due: Time, weight: Time) -> Job {
        Job { id, p, ready, due, weight }
    }

    fn single_job_schedule() -> (Instance, Schedule) {
        let inst = Instance::new("one", line(), vec![job(1, [40, 20, 75, 0, 30, 45], 0, 200, 3)]).unwrap();
        let assign = vec![[Some(0), Some(1), Some(2), None, Some(3), Some(4)]];
        let sequences = vec![
            vec![(0, Stage::SINK)],
            vec![(0, Stage::COAT)],
            vec![(0, Stage::EXPOSE)],
            vec![(0, Stage::DEVELOP)],
            vec![(0, Stage::BAKE_POST)],
            vec![],
            vec![],
            vec![],
            vec![],
        ];
        let schedule = earliest_completion(&inst, &assign, &sequences).unwrap();
        (inst, schedule)
    }

    #[test]
    fn single_job_individual_route_is_feasible() {
        let (inst, s) = single_job_schedule();
        assert_eq!(s.completion[0], [40, 60, 135, 135, 165, 210]);
        assert!(check_feasibility(&inst, &s).is_empty());
        let m = metrics(&inst, &s);
        assert_eq!((m.cmax, m.wct, m.twt), (210, 630, 30));
        let mut late = inst.clone();
        late.jobs[0].due = 250;
        assert_eq!(objective(&late, &s, Objective::Twt).unwrap(), 0);
    }

    #[test]
    fn weighted_completion_sums_jobs() {
        let inst = Instance::new(
            "two",
            line(),
            vec![job(1, [40, 20, 75, 0, 30, 45], 0, 0, 1), job(2, [0, 20, 75, 0, 30, 45], 0, 0, 5)],
        )
        .unwrap();
        let schedule = Schedule {
            assign: vec![
                [Some(0), Some(1), Some(2), None, Some(3), Some(4)],
                [None, Some(7), Some(7), None, Some(7), Some(7)],
            ],
            completion: vec![[40, 60, 135, 135, 165, 210], [0, 20, 95, 95, 125, 170]],
            sequences: Vec::new(),
        };
        assert!(check_feasibility(&inst, &schedule).is_empty());
        assert_eq!(objective(&inst, &schedule, Objective::Wct).unwrap(), 1060);
    }

    #[test]
    fn cluster_run_accumulates() {
        let inst = Instance::new("c", line(), vec![job(1, [0, 20, 75, 0, 30, 45], 0, 0, 1)]).unwrap();
        let mut assign = vec![[None; 6]];
        for s in [Stage::COAT, Stage::EXPOSE, Stage::DEVELOP, Stage::BAKE_POST] {
            assign[0][s.slot()] = Some(7);
        }
        let mut seq: Sequences = vec![Vec::new(); 9];
        seq[7] = vec![(0, Stage::COAT), (0, Stage::EXPOSE), (0, Stage::DEVELOP), (0, Stage::BAKE_POST)];
        let s = earliest_completion(&inst, &assign, &seq).unwrap();
        assert_eq!(s.completion[0], [0, 20, 95, 95, 125, 170]);
    }

    #[test]
    fn overlapping_cluster_spans_are_exclusive_violations() {
        let p = [0, 20, 75, 0, 30, 45];
        let inst = Instance::new("c2", line(), vec![job(1, p, 0, 0, 1), job(2, p, 0, 0, 1)]).unwrap();
        let cedb = [None, Some(7), Some(7), None, Some(7), Some(7)];
        let schedule = Schedule {
            assign: vec![cedb, cedb],
            completion: vec![[0, 20, 95, 95, 125, 170], [0, 120, 195, 195, 225, 270]],
            sequences: Vec::new(),
        };
        let v = check_feasibility(&inst, &schedule);
        assert!(v.iter().any(|v| v.kind == ViolationKind::ClusterExclusive), "{v:?}");
    }

    #[test]
    fn bake_pre_job_may_not_enter_ced() {
        let inst = Instance::new("b", line(), vec![job(1, [0, 20, 75, 45, 30, 0], 0, 0, 1)]).unwrap();
        let schedule = Schedule {
            assign: vec![[None, Some(6), Some(6), Some(4), Some(6), None]],
            completion: vec![[0, 20, 95, 140, 170, 170]],
            sequences: Vec::new(),
        };
        let v = check_feasibility(&inst, &schedule);
        assert!(v.iter().any(|v| v.kind == ViolationKind::ForbiddenAssign), "{v:?}");
    }

    #[test]
    fn ed_cluster_held_through_bake() {
        let inst = Instance::new("ed", line(), vec![job(1, [0, 20, 75, 45, 30, 0], 0, 0, 1)]).unwrap();
        let assign = vec![[None, Some(1), Some(8), Some(4), Some(8), None]];
        let mut seq: Sequences = vec![Vec::new(); 9];
        seq[1] = vec![(0, Stage::COAT)];
        seq[8] = vec![(0, Stage::EXPOSE), (0, Stage::DEVELOP)];
        seq[4] = vec![(0, Stage::BAKE_PRE)];
        let s = earliest_completion(&inst, &assign, &seq).unwrap();
        assert_eq!(s.completion[0], [0, 20, 95, 140, 170, 170]);
        assert!(check_feasibility(&inst, &s).is_empty());
        let occ = s.occupations(&inst);
        assert_eq!((occ[8][0].start, occ[8][0].end), (20, 170));
    }

    #[test]
    fn machine_sequence_precedence() {
        let p = [0, 20, 75, 0, 30, 0];
        let inst = Instance::new("two", line(), vec![job(1, p, 0, 0, 1), job(2, p, 0, 0, 1)]).unwrap();
        let row = [None, Some(1), Some(2), None, Some(3), None];
        let mut seq: Sequences = vec![Vec::new(); 9];
        for (j, s) in [(1, Stage::COAT), (2, Stage::EXPOSE), (3, Stage::DEVELOP)] {
            seq[j] = vec![(0, s), (1, s)];
        }
        let s = earliest_completion(&inst, &vec![row, row], &seq).unwrap();
        assert_eq!(s.start(&inst, 1, Stage::COAT), s.completion[0][Stage::COAT.slot()]);
        assert!(check_feasibility(&inst, &s).is_empty());
    }

    #[test]
    fn cyclic_sequences_are_reported() {
        // Both jobs bake before and after develop. Oven B1 runs job 1's second
        // bake before job 2's first; oven B2 runs job 2's second bake before
        // job 1's first. Each job then waits on the other.
        let p = [0, 20, 75, 45, 30, 45];
        let inst = Instance::new("cyc", line(), vec![job(1, p, 0, 0, 1), job(2, p, 0, 0, 1)]).unwrap();
        let a = [None, Some(1), Some(2), Some(5), Some(3), Some(4)];
        let b = [None, Some(1), Some(2), Some(4), Some(3), Some(5)];
        let mut seq: Sequences = vec![Vec::new(); 9];
        seq[1] = vec![(0, Stage::COAT), (1, Stage::COAT)];
        seq[2] = vec![(0, Stage::EXPOSE), (1, Stage::EXPOSE)];
        seq[3] = vec![(0, Stage::DEVELOP), (1, Stage::DEVELOP)];
        seq[4] = vec![(0, Stage::BAKE_POST), (1, Stage::BAKE_PRE)];
        seq[5] = vec![(1, Stage::BAKE_POST), (0, Stage::BAKE_PRE)];
        match earliest_completion(&inst, &vec![a, b], &seq) {
            Err(Error::Cycle(names)) => assert!(names.contains("stage 4"), "{names}"),
            other => panic!("expected a cycle, got {other:?}"),
        }
    }

    #[test]
    fn split_cluster_stay_is_rejected() {
        let p = [0, 20, 75, 0, 30, 0];
        let inst = Instance::new("split", line(), vec![job(1, p, 0, 0, 1), job(2, p, 0, 0, 1)]).unwrap();
        let ced = [None, Some(6), Some(6), None, Some(6), None];
        let mut seq: Sequences = vec![Vec::new(); 9];
        seq[6] = vec![(0, Stage::COAT), (1, Stage::COAT), (0, Stage::EXPOSE), (1, Stage::EXPOSE), (0, Stage::DEVELOP), (1, Stage::DEVELOP)];
        assert!(matches!(earliest_completion(&inst, &vec![ced, ced], &seq), Err(Error::Sequence(_))));
    }

    #[test]
    fn inconsistent_pair_order_is_reported() {
        let p = [0, 20, 75, 0, 30, 0];
        let inst = Instance::new("po", line(), vec![job(1, p, 0, 0, 1), job(2, p, 0, 0, 1)]).unwrap();
        let row = [None, Some(1), Some(2), None, Some(3), None];
        let mut seq: Sequences = vec![Vec::new(); 9];
        seq[1] = vec![(0, Stage::COAT), (1, Stage::COAT)];
        seq[2] = vec![(1, Stage::EXPOSE), (0, Stage::EXPOSE)];
        seq[3] = vec![(0, Stage::DEVELOP), (1, Stage::DEVELOP)];
        let s = earliest_completion(&inst, &vec![row, row], &seq).unwrap();
        let v = check_feasibility(&inst, &s);
        assert!(!v.is_empty() && v.iter().all(|v| v.kind == ViolationKind::PairOrder), "{v:?}");
    }

    #[test]
    fn interleaved_bake_visits_violate_shared_oven() {
        // Job 2's first bake sits between job 1's two bakes on the same oven.
        let p = [0, 20, 75, 45, 30, 45];
        let inst = Instance::new("bake", line(), vec![job(1, p, 0, 0, 1), job(2, p, 0, 0, 1)]).unwrap();
        let row1 = [None, Some(1), Some(2), Some(4), Some(3), Some(4)];
        let row2 = [None, Some(1), Some(8), Some(4), Some(8), Some(5)];
        let mut seq: Sequences = vec![Vec::new(); 9];
        seq[1] = vec![(1, Stage::COAT), (0, Stage::COAT)];
        seq[8] = vec![(1, Stage::EXPOSE), (1, Stage::DEVELOP)];
        seq[2] = vec![(0, Stage::EXPOSE)];
        seq[3] = vec![(0, Stage::DEVELOP)];
        seq[4] = vec![(0, Stage::BAKE_PRE), (1, Stage::BAKE_PRE), (0, Stage::BAKE_POST)];
        seq[5] = vec![(1, Stage::BAKE_POST)];
        let s = earliest_completion(&inst, &vec![row1, row2], &seq).unwrap();
        let v = check_feasibility(&inst, &s);
        assert!(v.iter().any(|v| v.kind == ViolationKind::BakeShared), "{v:?}");
    }

    #[test]
    fn csv_round_trip_preserves_schedule() {
        let (inst, s) = single_job_schedule();
        let mut buf = Vec::new();
        write_schedule_csv(&inst, &s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("job_id,stage,machine_id,start,completion\n"));
        assert!(text.contains("1,3,E1,60,135"));
        let back = read_schedule_csv(&inst, buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_rows_become_missing_assign() {
        let (inst, _) = single_job_schedule();
        let text = "job_id,stage,machine_id,start,completion\n1,1,S1,0,40\n";
        let s = read_schedule_csv(&inst, text.as_bytes()).unwrap();
        let v = check_feasibility(&inst, &s);
        assert_eq!(v.iter().filter(|v| v.kind == ViolationKind::MissingAssign).count(), 4);
    }

    #[test]
    fn early_start_is_a_ready_time_violation() {
        let mut inst = single_job_schedule().0;
        inst.jobs[0].ready = 10;
        let s = single_job_schedule().1;
        let v = check_feasibility(&inst, &s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ReadyTime);
    }
}
