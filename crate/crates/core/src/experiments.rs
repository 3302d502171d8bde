//! Experiment harness: instance grid, heuristic and exact runs, and
//! performance/heuristic ratio tables.
//!
//! Records hold objective values only; runtimes go to a separate timing
//! list so that a rerun with the same master seed reproduces the record file
//! byte for byte (provided no exact run is cut by the wall-clock limit; use
//! the node limit for reproducible truncation).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{solve_exact_with, ExactConfig, ExactStatus};
use crate::instgen::{generate_instance, EquipmentScenario, GenConfig, ReadyScenario, GRID_RANGE, GRID_TARDINESS};
use crate::model::{Objective, Time};
use crate::rng::derive_seed;
use crate::search::{run_ga, run_sp, GAConfig, SPConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverSet {
    pub sp: bool,
    pub ga: bool,
    pub exact: bool,
}

impl Default for SolverSet {
    fn default() -> Self {
        SolverSet { sp: true, ga: true, exact: true }
    }
}

fn default_counts() -> Vec<usize> {
    vec![5]
}
fn default_ready() -> Vec<ReadyScenario> {
    vec![ReadyScenario::AllZero, ReadyScenario::Mixed30_70]
}
fn default_tardiness() -> Vec<f64> {
    GRID_TARDINESS.to_vec()
}
fn default_range() -> Vec<f64> {
    GRID_RANGE.to_vec()
}
fn default_equipment() -> Vec<EquipmentScenario> {
    vec![EquipmentScenario::Scenario1, EquipmentScenario::Scenario2]
}
fn default_replications() -> usize {
    10
}
fn default_objectives() -> Vec<Objective> {
    Objective::ALL.to_vec()
}
fn default_sp_iterations() -> usize {
    SPConfig::default().max_iterations
}
fn default_ga() -> GAConfig {
    GAConfig::default()
}
fn default_time_limit() -> f64 {
    60.0
}

/// A grid of design cells, replications and solver settings. Every field
/// has a default, so `{}` is a valid grid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_counts")]
    pub job_counts: Vec<usize>,
    #[serde(default = "default_ready")]
    pub ready: Vec<ReadyScenario>,
    #[serde(default = "default_tardiness")]
    pub tardiness: Vec<f64>,
    #[serde(default = "default_range")]
    pub range: Vec<f64>,
    #[serde(default = "default_equipment")]
    pub equipment: Vec<EquipmentScenario>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<Objective>,
    #[serde(default)]
    pub solvers: SolverSet,
    #[serde(default = "default_sp_iterations")]
    pub sp_iterations: usize,
    /// GA settings; the seed field is ignored (seeds derive from the master
    /// seed).
    #[serde(default = "default_ga")]
    pub ga: GAConfig,
    #[serde(default = "default_time_limit")]
    pub exact_time_limit_secs: f64,
    #[serde(default)]
    pub exact_node_limit: Option<u64>,
}

impl GridConfig {
    pub fn new(master_seed: u64) -> Self {
        GridConfig { master_seed, ..serde_json::from_str("{}").expect("defaults deserialize") }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.job_counts.iter().any(|&n| n == 0) {
            return Err(Error::Config("job counts must be positive".into()));
        }
        if !(self.exact_time_limit_secs >= 0.0) {
            return Err(Error::Config("exact time limit must be nonnegative".into()));
        }
        if self.solvers.ga {
            self.ga.validate()?;
        }
        if self.solvers.sp && self.sp_iterations == 0 {
            return Err(Error::Config("sp_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Design cells in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.job_counts {
            for &ready in &self.ready {
                for &tardiness in &self.tardiness {
                    for &range in &self.range {
                        for &equipment in &self.equipment {
                            cells.push(Cell { n, ready, tardiness, range, equipment });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub ready: ReadyScenario,
    pub tardiness: f64,
    pub range: f64,
    pub equipment: EquipmentScenario,
}

impl Cell {
    /// Seed of replication `rep`, derived from the cell key.
    pub fn seed(&self, master: u64, rep: usize) -> u64 {
        derive_seed(
            master,
            &[
                self.n as u64,
                self.ready.flag() as u64,
                self.tardiness.to_bits(),
                self.range.to_bits(),
                self.equipment.number() as u64,
                rep as u64,
            ],
        )
    }

    pub fn gen_config(&self, seed: u64) -> GenConfig {
        GenConfig {
            n: self.n,
            ready: self.ready,
            tardiness: self.tardiness,
            range: self.range,
            equipment: self.equipment,
            seed,
        }
    }
}

/// Objective values of one (instance, objective) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub ready: u8,
    #[serde(rename = "T")]
    pub tardiness: f64,
    #[serde(rename = "R")]
    pub range: f64,
    pub mc: u8,
    pub rep: usize,
    pub seed: u64,
    pub objective: Objective,
    pub sp: Option<Time>,
    pub ga: Option<Time>,
    pub exact: Option<Time>,
    pub exact_status: Option<ExactStatus>,
    /// Failure messages of solvers that did not return, `;`-separated.
    pub error: Option<String>,
}

/// Wall-clock seconds per solver for one record, in record order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordTiming {
    pub n: usize,
    pub ready: u8,
    #[serde(rename = "T")]
    pub tardiness: f64,
    #[serde(rename = "R")]
    pub range: f64,
    pub mc: u8,
    pub rep: usize,
    pub objective: Objective,
    pub sp_secs: Option<f64>,
    pub ga_secs: Option<f64>,
    pub exact_secs: Option<f64>,
    pub exact_nodes: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct GridResults {
    pub records: Vec<ExperimentRecord>,
    pub timings: Vec<RecordTiming>,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> (Result<T>, f64) {
    let t0 = Instant::now();
    let r = f();
    (r, t0.elapsed().as_secs_f64())
}

fn run_task(grid: &GridConfig, cell: &Cell, rep: usize) -> Vec<(ExperimentRecord, RecordTiming)> {
    let seed = cell.seed(grid.master_seed, rep);
    let instance = generate_instance(&cell.gen_config(seed));
    let mut out = Vec::new();
    for (oi, &kind) in grid.objectives.iter().enumerate() {
        let mut record = ExperimentRecord {
            n: cell.n,
            ready: cell.ready.flag(),
            tardiness: cell.tardiness,
            range: cell.range,
            mc: cell.equipment.number(),
            rep,
            seed,
            objective: kind,
            sp: None,
            ga: None,
            exact: None,
            exact_status: None,
            error: None,
        };
        let mut timing = RecordTiming {
            n: cell.n,
            ready: record.ready,
            tardiness: cell.tardiness,
            range: cell.range,
            mc: record.mc,
            rep,
            objective: kind,
            sp_secs: None,
            ga_secs: None,
            exact_secs: None,
            exact_nodes: None,
        };
        let mut errors = Vec::new();
        match &instance {
            Err(e) => errors.push(format!("generate: {e}")),
            Ok(instance) => {
                let solver_seed = |id: u64| derive_seed(seed, &[oi as u64, id]);
                if grid.solvers.sp {
                    let cfg = SPConfig { max_iterations: grid.sp_iterations, seed: solver_seed(1) };
                    let (r, secs) = timed(|| run_sp(instance, kind, &cfg));
                    timing.sp_secs = Some(secs);
                    match r {
                        Ok(o) => record.sp = Some(o.value),
                        Err(e) => errors.push(format!("sp: {e}")),
                    }
                }
                if grid.solvers.ga {
                    let cfg = GAConfig { seed: solver_seed(2), ..grid.ga };
                    let (r, secs) = timed(|| run_ga(instance, kind, &cfg));
                    timing.ga_secs = Some(secs);
                    match r {
                        Ok(o) => record.ga = Some(o.value),
                        Err(e) => errors.push(format!("ga: {e}")),
                    }
                }
                if grid.solvers.exact {
                    let cfg = ExactConfig {
                        node_limit: grid.exact_node_limit,
                        ..ExactConfig::with_limit(Duration::from_secs_f64(grid.exact_time_limit_secs))
                    };
                    let (r, secs) = timed(|| solve_exact_with(instance, kind, &cfg));
                    timing.exact_secs = Some(secs);
                    match r {
                        Ok(o) => {
                            record.exact = Some(o.value);
                            record.exact_status = Some(o.status);
                            timing.exact_nodes = Some(o.nodes);
                        }
                        Err(e) => errors.push(format!("exact: {e}")),
                    }
                }
            }
        }
        if !errors.is_empty() {
            record.error = Some(errors.join("; "));
        }
        out.push((record, timing));
    }
    out
}

/// Runs every (cell, replication) of the grid. Tasks run in parallel;
/// results come back in grid order.
pub fn run_grid(grid: &GridConfig) -> Result<GridResults> {
    grid.validate()?;
    let tasks: Vec<(Cell, usize)> =
        grid.cells().into_iter().flat_map(|c| (0..grid.replications).map(move |r| (c, r))).collect();
    let rows: Vec<Vec<(ExperimentRecord, RecordTiming)>> =
        tasks.par_iter().map(|(cell, rep)| run_task(grid, cell, *rep)).collect();
    let mut results = GridResults::default();
    for (record, timing) in rows.into_iter().flatten() {
        results.records.push(record);
        results.timings.push(timing);
    }
    Ok(results)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Heuristic {
    Sp,
    Ga,
}

impl Heuristic {
    pub fn value(self, record: &ExperimentRecord) -> Option<Time> {
        match self {
            Heuristic::Sp => record.sp,
            Heuristic::Ga => record.ga,
        }
    }
}

/// Which exact status a ratio is defined for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioKind {
    /// Heuristic over proven optimum.
    Performance,
    /// Heuristic over the time-limited incumbent.
    Heuristic,
}

impl RatioKind {
    fn status(self) -> ExactStatus {
        match self {
            RatioKind::Performance => ExactStatus::Optimal,
            RatioKind::Heuristic => ExactStatus::TimedOut,
        }
    }
}

fn ratio(record: &ExperimentRecord, heuristic: Heuristic, kind: RatioKind) -> Option<f64> {
    if record.exact_status != Some(kind.status()) {
        return None;
    }
    let (h, e) = (heuristic.value(record)?, record.exact?);
    (e > 0).then(|| h as f64 / e as f64)
}

/// `OF_heuristic / OF_exact` for records solved to optimality with a
/// nonzero optimum.
pub fn performance_ratio(record: &ExperimentRecord, heuristic: Heuristic) -> Option<f64> {
    ratio(record, heuristic, RatioKind::Performance)
}

/// `OF_heuristic / OF_incumbent` for records whose exact run was cut short
/// with a nonzero incumbent. May be below one.
pub fn heuristic_ratio(record: &ExperimentRecord, heuristic: Heuristic) -> Option<f64> {
    ratio(record, heuristic, RatioKind::Heuristic)
}

/// A `(n, r_k, T, R, mc)` pattern; `None` matches anything.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pattern {
    pub n: Option<usize>,
    pub ready: Option<u8>,
    pub tardiness: Option<f64>,
    pub range: Option<f64>,
    pub mc: Option<u8>,
}

impl Pattern {
    pub fn matches(&self, r: &ExperimentRecord) -> bool {
        self.n.map_or(true, |v| v == r.n)
            && self.ready.map_or(true, |v| v == r.ready)
            && self.tardiness.map_or(true, |v| v == r.tardiness)
            && self.range.map_or(true, |v| v == r.range)
            && self.mc.map_or(true, |v| v == r.mc)
    }
}

fn field<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "*".to_string(), T::to_string)
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{},{})",
            field(&self.n),
            field(&self.ready),
            field(&self.tardiness),
            field(&self.range),
            field(&self.mc)
        )
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("pattern {s:?} needs five fields")));
        }
        fn opt<T: FromStr>(p: &str, s: &str) -> Result<Option<T>> {
            if p == "*" {
                return Ok(None);
            }
            p.parse().map(Some).map_err(|_| Error::Parse(format!("bad pattern field {p:?} in {s:?}")))
        }
        Ok(Pattern {
            n: opt(parts[0], s)?,
            ready: opt(parts[1], s)?,
            tardiness: opt(parts[2], s)?,
            range: opt(parts[3], s)?,
            mc: opt(parts[4], s)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub pattern: Pattern,
    /// Mean ratio, `None` when no record contributes.
    pub mean: Option<f64>,
    pub count: usize,
    /// Records with the required status but a zero exact value, split by
    /// whether the heuristic also reached zero.
    pub zero_matched: usize,
    pub zero_unmatched: usize,
}

impl AggregateRow {
    /// `1.02 (80)` style cell, `N/A` without contributions.
    pub fn cell(&self) -> String {
        match self.mean {
            Some(m) => format!("{m:.2} ({})", self.count),
            None => "N/A".to_string(),
        }
    }
}

/// Mean ratio of `heuristic` over records matching `pattern` for
/// `objective`.
pub fn aggregate(
    records: &[ExperimentRecord],
    pattern: &Pattern,
    objective: Objective,
    heuristic: Heuristic,
    kind: RatioKind,
) -> AggregateRow {
    let mut sum = 0.0;
    let mut row = AggregateRow { pattern: *pattern, mean: None, count: 0, zero_matched: 0, zero_unmatched: 0 };
    for r in records.iter().filter(|r| r.objective == objective && pattern.matches(r)) {
        if let Some(x) = ratio(r, heuristic, kind) {
            sum += x;
            row.count += 1;
        } else if r.exact_status == Some(kind.status()) && r.exact == Some(0) {
            match heuristic.value(r) {
                Some(0) => row.zero_matched += 1,
                Some(_) => row.zero_unmatched += 1,
                None => {}
            }
        }
    }
    if row.count > 0 {
        row.mean = Some(sum / row.count as f64);
    }
    row
}

/// The eight factor patterns reported per job count.
pub fn table_patterns(n: usize, grid_t: &[f64], grid_r: &[f64], grid_mc: &[u8]) -> Vec<Pattern> {
    let base = Pattern { n: Some(n), ..Pattern::default() };
    let mut out = vec![Pattern { ready: Some(0), ..base }, Pattern { ready: Some(1), ..base }];
    out.extend(grid_t.iter().map(|&t| Pattern { tardiness: Some(t), ..base }));
    out.extend(grid_r.iter().map(|&r| Pattern { range: Some(r), ..base }));
    out.extend(grid_mc.iter().map(|&m| Pattern { mc: Some(m), ..base }));
    out
}

/// Text table in the layout of the published ratio tables: one row per
/// pattern, GA then SP columns for Cmax, WCT and TWT.
pub fn format_table(records: &[ExperimentRecord], kind: RatioKind, grid: &GridConfig) -> String {
    let title = match kind {
        RatioKind::Performance => "Performance ratio",
        RatioKind::Heuristic => "Heuristic ratio",
    };
    let columns = [Objective::Cmax, Objective::Wct, Objective::Twt];
    let mut out = format!("{title}\n");
    out.push_str(&format!("{:<16}", "n,r_k,T,R,mc"));
    for h in ["GA", "SP"] {
        for c in columns {
            out.push_str(&format!("{:<14}", format!("{h} {c}")));
        }
    }
    out.push('\n');
    let mcs: Vec<u8> = grid.equipment.iter().map(|e| e.number()).collect();
    let mut zero_notes = Vec::new();
    for &n in &grid.job_counts {
        for pattern in table_patterns(n, &grid.tardiness, &grid.range, &mcs) {
            out.push_str(&format!("{:<16}", pattern.to_string()));
            for h in [Heuristic::Ga, Heuristic::Sp] {
                for c in columns {
                    let row = aggregate(records, &pattern, c, h, kind);
                    out.push_str(&format!("{:<14}", row.cell()));
                    // Zero-valued exact results cannot form a ratio; report them.
                    if row.zero_matched + row.zero_unmatched > 0 && pattern.ready.is_some() {
                        zero_notes.push(format!(
                            "{pattern} {h:?} {c}: {} zero-valued exact results excluded ({} matched by the heuristic)",
                            row.zero_matched + row.zero_unmatched,
                            row.zero_matched
                        ));
                    }
                }
            }
            out = out.trim_end().to_string();
            out.push('\n');
        }
    }
    for note in zero_notes {
        out.push_str(&note);
        out.push('\n');
    }
    out
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_timings_csv<W: Write>(timings: &[RecordTiming], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in timings {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}
