//! Domain types for the six-stage photolithography line.
//!
//! A job visits up to six stages in fixed order (sink, coat, expose,
//! pre-develop bake, develop, post-develop bake). Each stage is served by
//! individual tools or by cluster tools that perform several consecutive
//! stages while holding the job. Bake ovens form one pool serving both bake
//! stages, which makes the flow reentrant.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer time in minutes.
pub type Time = i64;

/// Number of processing stages on the line.
pub const STAGE_COUNT: usize = 6;

/// Instance file format version written by this crate.
pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// One of the six processing stages, numbered 1..=6 in processing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Stage(u8);

impl Stage {
    pub const SINK: Stage = Stage(1);
    pub const COAT: Stage = Stage(2);
    pub const EXPOSE: Stage = Stage(3);
    pub const BAKE_PRE: Stage = Stage(4);
    pub const DEVELOP: Stage = Stage(5);
    pub const BAKE_POST: Stage = Stage(6);

    pub const ALL: [Stage; STAGE_COUNT] = [
        Stage::SINK,
        Stage::COAT,
        Stage::EXPOSE,
        Stage::BAKE_PRE,
        Stage::DEVELOP,
        Stage::BAKE_POST,
    ];

    pub fn new(index: u8) -> Option<Stage> {
        (1..=STAGE_COUNT as u8).contains(&index).then_some(Stage(index))
    }

    /// 1-based stage number.
    pub fn number(self) -> u8 {
        self.0
    }

    /// 0-based array slot.
    pub fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn from_slot(slot: usize) -> Stage {
        Stage::ALL[slot]
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "sink",
            2 => "coat",
            3 => "expose",
            4 => "bake-pre",
            5 => "develop",
            _ => "bake-post",
        }
    }

    /// The individual (single-stage) tool class serving this stage.
    pub fn individual_class(self) -> ToolClass {
        match self.0 {
            1 => ToolClass::S,
            2 => ToolClass::C,
            3 => ToolClass::E,
            4 | 6 => ToolClass::B,
            _ => ToolClass::D,
        }
    }
}

impl TryFrom<u8> for Stage {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        Stage::new(value).ok_or_else(|| format!("stage {value} outside 1..=6"))
    }
}

impl From<Stage> for u8 {
    fn from(stage: Stage) -> u8 {
        stage.0
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Small ordered set of stages, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StageSet(u8);

impl StageSet {
    pub const EMPTY: StageSet = StageSet(0);

    pub fn of(stages: &[Stage]) -> StageSet {
        stages.iter().fold(StageSet::EMPTY, |set, &s| set.with(s))
    }

    pub fn with(self, stage: Stage) -> StageSet {
        StageSet(self.0 | 1 << stage.slot())
    }

    pub fn contains(self, stage: Stage) -> bool {
        self.0 & (1 << stage.slot()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn first(self) -> Option<Stage> {
        self.iter().next()
    }

    pub fn last(self) -> Option<Stage> {
        self.iter().last()
    }

    pub fn iter(self) -> impl Iterator<Item = Stage> {
        Stage::ALL.into_iter().filter(move |&s| self.contains(s))
    }
}

/// Tool classes on the line. `B` ovens serve both bake stages; `CE`, `CED`,
/// `CEDB` and `ED` are cluster tools.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ToolClass {
    S,
    C,
    E,
    D,
    B,
    CE,
    CED,
    CEDB,
    ED,
}

impl ToolClass {
    /// Table order used for equipment listings and machine numbering.
    pub const ALL: [ToolClass; 9] = [
        ToolClass::S,
        ToolClass::C,
        ToolClass::E,
        ToolClass::D,
        ToolClass::B,
        ToolClass::CE,
        ToolClass::CED,
        ToolClass::CEDB,
        ToolClass::ED,
    ];

    pub fn covered_stages(self) -> &'static [Stage] {
        use Stage as St;
        match self {
            ToolClass::S => &[St::SINK],
            ToolClass::C => &[St::COAT],
            ToolClass::E => &[St::EXPOSE],
            ToolClass::D => &[St::DEVELOP],
            ToolClass::B => &[St::BAKE_PRE, St::BAKE_POST],
            ToolClass::CE => &[St::COAT, St::EXPOSE],
            ToolClass::CED => &[St::COAT, St::EXPOSE, St::DEVELOP],
            ToolClass::CEDB => &[St::COAT, St::EXPOSE, St::DEVELOP, St::BAKE_POST],
            ToolClass::ED => &[St::EXPOSE, St::DEVELOP],
        }
    }

    pub fn stage_set(self) -> StageSet {
        StageSet::of(self.covered_stages())
    }

    pub fn covers(self, stage: Stage) -> bool {
        self.covered_stages().contains(&stage)
    }

    /// Cluster tools hold a job for their whole covered span.
    pub fn is_cluster(self) -> bool {
        matches!(self, ToolClass::CE | ToolClass::CED | ToolClass::CEDB | ToolClass::ED)
    }

    /// First stage a job performs on a cluster tool.
    pub fn entry_stage(self) -> Stage {
        self.covered_stages()[0]
    }

    pub fn name(self) -> &'static str {
        match self {
            ToolClass::S => "S",
            ToolClass::C => "C",
            ToolClass::E => "E",
            ToolClass::D => "D",
            ToolClass::B => "B",
            ToolClass::CE => "CE",
            ToolClass::CED => "CED",
            ToolClass::CEDB => "CEDB",
            ToolClass::ED => "ED",
        }
    }
}

impl fmt::Display for ToolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ToolClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ToolClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown tool class {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub id: String,
    pub class: ToolClass,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: u32,
    /// Processing time per stage; zero means the stage is skipped.
    pub p: [Time; STAGE_COUNT],
    #[serde(rename = "r")]
    pub ready: Time,
    #[serde(rename = "d")]
    pub due: Time,
    #[serde(rename = "w")]
    pub weight: Time,
}

impl Job {
    pub fn time(&self, stage: Stage) -> Time {
        self.p[stage.slot()]
    }

    pub fn needs(&self, stage: Stage) -> bool {
        self.time(stage) > 0
    }

    pub fn total_time(&self) -> Time {
        self.p.iter().sum()
    }

    pub fn last_stage(&self) -> Option<Stage> {
        Stage::ALL.into_iter().rev().find(|&s| self.needs(s))
    }
}

/// The three regular objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Cmax,
    Wct,
    Twt,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Cmax, Objective::Wct, Objective::Twt];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Cmax => "cmax",
            Objective::Wct => "wct",
            Objective::Twt => "twt",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown objective {s:?}")))
    }
}

/// How a job's coat/expose/develop stages are split between individual and
/// cluster tools.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouteFamily {
    Individual,
    CE,
    CED,
    CEDB,
    ED,
}

impl RouteFamily {
    pub const ALL: [RouteFamily; 5] = [
        RouteFamily::Individual,
        RouteFamily::CE,
        RouteFamily::CED,
        RouteFamily::CEDB,
        RouteFamily::ED,
    ];

    pub fn cluster(self) -> Option<ToolClass> {
        match self {
            RouteFamily::Individual => None,
            RouteFamily::CE => Some(ToolClass::CE),
            RouteFamily::CED => Some(ToolClass::CED),
            RouteFamily::CEDB => Some(ToolClass::CEDB),
            RouteFamily::ED => Some(ToolClass::ED),
        }
    }

    /// Tool-class visits of `job` along this route, ordered by entry stage.
    pub fn visits(self, job: &Job) -> Vec<PlannedVisit> {
        let cluster = self.cluster();
        let mut visits: Vec<PlannedVisit> = Vec::with_capacity(STAGE_COUNT);
        for stage in Stage::ALL {
            if !job.needs(stage) {
                continue;
            }
            match cluster {
                Some(c) if c.covers(stage) => {
                    if stage == c.entry_stage() {
                        visits.push(PlannedVisit { class: c, stages: c.stage_set() });
                    }
                }
                _ => visits.push(PlannedVisit {
                    class: stage.individual_class(),
                    stages: StageSet::EMPTY.with(stage),
                }),
            }
        }
        visits
    }
}

impl fmt::Display for RouteFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cluster() {
            None => f.write_str("individual"),
            Some(c) => f.write_str(c.name()),
        }
    }
}

/// One stay of a job on a machine of `class`, covering `stages`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlannedVisit {
    pub class: ToolClass,
    pub stages: StageSet,
}

/// Route families consistent with the cluster entry rules for `job`.
///
/// A cluster family needs every covered stage to be processed. Jobs that need
/// the pre-develop bake cannot use `CED` or `CEDB`. `CE` is left before that
/// bake, and `ED` stays allowed with the job held through the oven visit.
pub fn route_options(job: &Job) -> Vec<RouteFamily> {
    let bake_pre = job.needs(Stage::BAKE_PRE);
    RouteFamily::ALL
        .into_iter()
        .filter(|family| match family.cluster() {
            None => true,
            Some(class) => {
                let all_needed = class.covered_stages().iter().all(|&s| job.needs(s));
                let bake_ok = !bake_pre || !matches!(class, ToolClass::CED | ToolClass::CEDB);
                all_needed && bake_ok
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub label: String,
    pub machines: Vec<Machine>,
    pub jobs: Vec<Job>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    label: String,
    machines: Vec<Machine>,
    jobs: Vec<Job>,
}

impl Instance {
    /// Builds and validates an instance.
    pub fn new(label: impl Into<String>, machines: Vec<Machine>, jobs: Vec<Job>) -> Result<Self> {
        let instance = Instance { label: label.into(), machines, jobs };
        instance.validate()?;
        Ok(instance)
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for m in &self.machines {
            if !ids.insert(m.id.as_str()) {
                return Err(Error::InvalidInstance(format!("duplicate machine id {:?}", m.id)));
            }
        }
        let mut job_ids = HashSet::new();
        for job in &self.jobs {
            if !job_ids.insert(job.id) {
                return Err(Error::InvalidInstance(format!("duplicate job id {}", job.id)));
            }
            if job.p.iter().any(|&t| t < 0) || job.ready < 0 || job.due < 0 || job.weight < 0 {
                return Err(Error::InvalidInstance(format!("job {} has a negative field", job.id)));
            }
            for stage in Stage::ALL.into_iter().filter(|&s| job.needs(s)) {
                if self.eligible_machines(stage).is_empty() {
                    return Err(Error::NoEligibleMachine { job: job.id, stage: stage.number() });
                }
            }
            if self.realizable_routes(job).is_empty() {
                return Err(Error::InvalidInstance(format!(
                    "job {} has no route realizable with the available tools",
                    job.id
                )));
            }
        }
        Ok(())
    }

    /// Indices of machines whose class covers `stage`.
    pub fn eligible_machines(&self, stage: Stage) -> Vec<usize> {
        self.machines
            .iter()
            .enumerate()
            .filter(|(_, m)| m.class.covers(stage))
            .map(|(j, _)| j)
            .collect()
    }

    pub fn machines_of(&self, class: ToolClass) -> impl Iterator<Item = usize> + '_ {
        self.machines.iter().enumerate().filter(move |(_, m)| m.class == class).map(|(j, _)| j)
    }

    pub fn has_class(&self, class: ToolClass) -> bool {
        self.machines.iter().any(|m| m.class == class)
    }

    /// Route families of `job` for which every visited tool class exists.
    pub fn realizable_routes(&self, job: &Job) -> Vec<RouteFamily> {
        route_options(job)
            .into_iter()
            .filter(|family| family.visits(job).iter().all(|v| self.has_class(v.class)))
            .collect()
    }

    pub fn machine_index(&self, id: &str) -> Option<usize> {
        self.machines.iter().position(|m| m.id == id)
    }

    pub fn job_index(&self, id: u32) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile {
            version: INSTANCE_FORMAT_VERSION,
            label: self.label.clone(),
            machines: self.machines.clone(),
            jobs: self.jobs.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.version != INSTANCE_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported instance version {}", file.version)));
        }
        Instance::new(file.label, file.machines, file.jobs)
    }
}

/// Disjunctive big-M: the sum of all processing times in the instance.
pub fn big_m(instance: &Instance) -> Time {
    instance.jobs.iter().map(Job::total_time).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(p: [Time; 6]) -> Job {
        Job { id: 1, p, ready: 0, due: 0, weight: 1 }
    }

    fn machines(counts: &[(ToolClass, usize)]) -> Vec<Machine> {
        let mut out = Vec::new();
        for &(class, count) in counts {
            for i in 1..=count {
                out.push(Machine { id: format!("{class}{i}"), class });
            }
        }
        out
    }

    fn scenario(counts: [usize; 9]) -> Instance {
        let pairs: Vec<_> = ToolClass::ALL.into_iter().zip(counts).collect();
        Instance::new("t", machines(&pairs), vec![job([40, 20, 75, 0, 30, 45])]).unwrap()
    }

    #[test]
    fn eligible_machines_by_stage() {
        let s1 = scenario([4, 2, 4, 2, 3, 2, 2, 2, 1]);
        let classes = |inst: &Instance, stage| -> Vec<ToolClass> {
            inst.eligible_machines(stage).into_iter().map(|j| inst.machines[j].class).collect()
        };
        assert_eq!(classes(&s1, Stage::BAKE_PRE), vec![ToolClass::B; 3]);
        assert_eq!(classes(&s1, Stage::SINK), vec![ToolClass::S; 4]);
        let s2 = scenario([2, 1, 2, 1, 2, 1, 1, 1, 1]);
        assert_eq!(s2.eligible_machines(Stage::EXPOSE).len(), 6);
        let stage6: HashSet<_> = classes(&s2, Stage::BAKE_POST).into_iter().collect();
        assert_eq!(stage6, HashSet::from([ToolClass::B, ToolClass::CEDB]));
        let stage5: HashSet<_> = classes(&s2, Stage::DEVELOP).into_iter().collect();
        assert_eq!(
            stage5,
            HashSet::from([ToolClass::D, ToolClass::CED, ToolClass::CEDB, ToolClass::ED])
        );
    }

    #[test]
    fn route_options_follow_bake_rules() {
        use RouteFamily::*;
        assert_eq!(route_options(&job([40, 20, 75, 0, 30, 45])), vec![Individual, CE, CED, CEDB, ED]);
        assert_eq!(route_options(&job([40, 20, 75, 45, 30, 0])), vec![Individual, CE, ED]);
        assert_eq!(route_options(&job([0, 20, 75, 0, 30, 0])), vec![Individual, CE, CED, ED]);
    }

    #[test]
    fn route_visits_skip_covered_stages() {
        let j = job([40, 20, 75, 45, 30, 45]);
        let ed: Vec<_> = RouteFamily::ED.visits(&j).iter().map(|v| v.class).collect();
        assert_eq!(ed, vec![ToolClass::S, ToolClass::C, ToolClass::ED, ToolClass::B, ToolClass::B]);
        let j = job([0, 20, 75, 0, 30, 45]);
        let cedb = RouteFamily::CEDB.visits(&j);
        assert_eq!(cedb.len(), 1);
        assert_eq!(cedb[0].stages.len(), 4);
    }

    #[test]
    fn big_m_sums_processing_times() {
        let mut inst = scenario([1, 1, 1, 1, 1, 0, 0, 0, 0]);
        inst.jobs = vec![job([40, 20, 75, 45, 30, 45])];
        assert_eq!(big_m(&inst), 255);
        inst.jobs = vec![job([0, 20, 75, 0, 30, 0])];
        assert_eq!(big_m(&inst), 125);
        let mut a = job([40, 20, 75, 0, 30, 45]);
        let mut b = a.clone();
        a.id = 1;
        b.id = 2;
        inst.jobs = vec![a, b];
        assert_eq!(big_m(&inst), 420);
    }

    #[test]
    fn validation_rejects_missing_tools() {
        let err = Instance::new("x", machines(&[(ToolClass::C, 1)]), vec![job([0, 20, 75, 0, 30, 0])]);
        assert!(matches!(err, Err(Error::NoEligibleMachine { stage: 3, .. })));
        // Bake-pre job cannot reach coat through a cluster when no C exists.
        let err = Instance::new(
            "x",
            machines(&[(ToolClass::CED, 1), (ToolClass::B, 1)]),
            vec![job([0, 20, 75, 45, 30, 0])],
        );
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = scenario([1, 1, 1, 1, 1, 1, 1, 1, 1]);
        let text = inst.to_json().unwrap();
        assert!(text.contains("\"version\": 1"));
        assert!(text.contains("\"class\": \"CEDB\""));
        assert_eq!(Instance::from_json(&text).unwrap(), inst);
    }
}
