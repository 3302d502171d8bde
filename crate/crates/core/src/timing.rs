//! Semi-active timing for a fixed machine assignment and machine order.
//!
//! Operations are the (job, stage) pairs with positive processing time. Each
//! machine processes an ordered list of reservations; a reservation is one
//! job's stay and covers one stage, or several stages for a cluster tool. The
//! machine is held from the start of the reservation's first stage until the
//! completion of its last stage. Earliest start of an operation is the
//! maximum of the job's ready time, the completion of its previous stage and,
//! for the first stage of a reservation, the completion of the preceding
//! reservation on the same machine.

use crate::model::{Instance, Stage, StageSet, Time, STAGE_COUNT};

/// One job's stay on a machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reservation {
    pub job: usize,
    pub stages: StageSet,
}

const NONE: usize = usize::MAX;

/// Reusable buffers for repeated timing passes.
#[derive(Debug, Default)]
pub struct TimingWorkspace {
    job_pred: Vec<usize>,
    job_succ: Vec<usize>,
    mach_pred: Vec<usize>,
    mach_succ: Vec<usize>,
    indeg: Vec<u8>,
    active: Vec<bool>,
    queue: Vec<usize>,
    finish: Vec<Time>,
    completion: Vec<[Time; STAGE_COUNT]>,
}

fn op(job: usize, stage: Stage) -> usize {
    job * STAGE_COUNT + stage.slot()
}

fn op_parts(op: usize) -> (usize, Stage) {
    (op / STAGE_COUNT, Stage::from_slot(op % STAGE_COUNT))
}

/// A precedence cycle, listed as (job index, stage) pairs in cycle order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleError(pub Vec<(usize, Stage)>);

impl TimingWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Computes earliest completion times. Jobs with no reservation at all are
    /// left out; their rows in the result are zero. Completion times of
    /// skipped stages carry the previous stage's completion (the ready time
    /// before the first stage).
    ///
    /// The caller guarantees that every needed stage of an included job lies
    /// in exactly one reservation.
    pub fn compute(
        &mut self,
        instance: &Instance,
        orders: &[Vec<Reservation>],
    ) -> Result<&[[Time; STAGE_COUNT]], CycleError> {
        let n = instance.jobs.len();
        let ops = n * STAGE_COUNT;
        self.job_pred.clear();
        self.job_pred.resize(ops, NONE);
        self.job_succ.clear();
        self.job_succ.resize(ops, NONE);
        self.mach_pred.clear();
        self.mach_pred.resize(ops, NONE);
        self.mach_succ.clear();
        self.mach_succ.resize(ops, NONE);
        self.indeg.clear();
        self.indeg.resize(ops, 0);
        self.active.clear();
        self.active.resize(n, false);
        self.finish.clear();
        self.finish.resize(ops, 0);
        self.completion.clear();
        self.completion.resize(n, [0; STAGE_COUNT]);

        for order in orders {
            for (q, res) in order.iter().enumerate() {
                self.active[res.job] = true;
                if q > 0 {
                    let prev = order[q - 1];
                    let from = op(prev.job, prev.stages.last().expect("empty reservation"));
                    let to = op(res.job, res.stages.first().expect("empty reservation"));
                    self.mach_succ[from] = to;
                    self.mach_pred[to] = from;
                    self.indeg[to] += 1;
                }
            }
        }

        self.queue.clear();
        for (k, job) in instance.jobs.iter().enumerate() {
            if !self.active[k] {
                continue;
            }
            let mut prev = NONE;
            for stage in Stage::ALL.into_iter().filter(|&s| job.needs(s)) {
                let o = op(k, stage);
                if prev != NONE {
                    self.job_succ[prev] = o;
                    self.job_pred[o] = prev;
                    self.indeg[o] += 1;
                }
                prev = o;
            }
            for stage in Stage::ALL.into_iter().filter(|&s| job.needs(s)) {
                let o = op(k, stage);
                if self.indeg[o] == 0 {
                    self.queue.push(o);
                }
            }
        }

        let mut done = 0usize;
        let mut head = 0usize;
        while head < self.queue.len() {
            let o = self.queue[head];
            head += 1;
            done += 1;
            let (k, stage) = op_parts(o);
            let job = &instance.jobs[k];
            let mut begin = job.ready;
            if self.job_pred[o] != NONE {
                begin = begin.max(self.finish[self.job_pred[o]]);
            }
            if self.mach_pred[o] != NONE {
                begin = begin.max(self.finish[self.mach_pred[o]]);
            }
            self.finish[o] = begin + job.time(stage);
            for succ in [self.job_succ[o], self.mach_succ[o]] {
                if succ != NONE {
                    self.indeg[succ] -= 1;
                    if self.indeg[succ] == 0 {
                        self.queue.push(succ);
                    }
                }
            }
        }

        let expected: usize = instance
            .jobs
            .iter()
            .enumerate()
            .filter(|(k, _)| self.active[*k])
            .map(|(_, j)| j.p.iter().filter(|&&t| t > 0).count())
            .sum();
        if done < expected {
            return Err(self.find_cycle());
        }

        for (k, job) in instance.jobs.iter().enumerate() {
            if !self.active[k] {
                continue;
            }
            let mut last = job.ready;
            for stage in Stage::ALL {
                if job.needs(stage) {
                    last = self.finish[op(k, stage)];
                }
                self.completion[k][stage.slot()] = last;
            }
        }
        Ok(&self.completion)
    }

    fn find_cycle(&self) -> CycleError {
        let stuck = |o: usize| o != NONE && self.indeg[o] > 0;
        let Some(mut cur) = (0..self.indeg.len()).find(|&o| stuck(o)) else {
            return CycleError(Vec::new());
        };
        // Walk unfinished predecessors until an operation repeats.
        let mut seen: Vec<usize> = Vec::new();
        loop {
            if let Some(pos) = seen.iter().position(|&o| o == cur) {
                let mut cycle: Vec<_> = seen[pos..].iter().map(|&o| op_parts(o)).collect();
                cycle.reverse();
                return CycleError(cycle);
            }
            seen.push(cur);
            cur = if stuck(self.job_pred[cur]) { self.job_pred[cur] } else { self.mach_pred[cur] };
            if cur == NONE {
                return CycleError(seen.iter().map(|&o| op_parts(o)).collect());
            }
        }
    }
}
