//! The mixed-integer model as explicit rows, an LP-format writer, and a
//! literal row checker for schedules converted to variable values.
//!
//! Variables: `C_i_k` per stage and job, `Cmax`, `T_k` per job, `x_i_j_k`
//! for every machine `j` able to process stage `i`, and `y_k_l` for every
//! ordered job pair (including `k = l`). Both the makespan rows and the
//! tardiness rows are always present; only the objective changes with the
//! objective kind. The disjunctive rows read `y_k_l = 1` as "k before l".

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::evaluator::Schedule;
use crate::model::{big_m, Instance, Objective, Stage, Time, ToolClass, STAGE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

/// One linear row `sum(coef * var) <sense> rhs`, tagged with the constraint
/// group it instantiates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub group: u8,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelCounts {
    pub constraints: usize,
    pub continuous: usize,
    pub binary: usize,
    pub total: usize,
}

/// A row that fails under given variable values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowViolation {
    pub name: String,
    pub group: u8,
    pub lhs: i128,
    pub rhs: i64,
}

#[derive(Clone, Debug)]
pub struct MilpModel {
    pub kind: Objective,
    pub big_m: Time,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, i64)>,
    n: usize,
    /// `x[k][slot][machine]`
    x: Vec<[Vec<Option<usize>>; STAGE_COUNT]>,
    y_base: usize,
    t_base: usize,
    cmax: usize,
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

struct Builder {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind) -> usize {
        self.variables.push(Variable { name, kind });
        self.variables.len() - 1
    }

    fn row(&mut self, group: u8, name: String, terms: Vec<(usize, i64)>, sense: Sense, rhs: i64) {
        self.constraints.push(Constraint { name, group, terms, sense, rhs });
    }
}

impl MilpModel {
    /// Instantiates the model for `instance`. The big-M constant is the total
    /// processing time plus the largest ready time, enough to relax every
    /// disjunctive row for any semi-active schedule.
    pub fn build(instance: &Instance, kind: Objective) -> MilpModel {
        let n = instance.n();
        let m = big_m(instance) + instance.jobs.iter().map(|j| j.ready).max().unwrap_or(0);
        let mut b = Builder { variables: Vec::new(), constraints: Vec::new() };
        let jid: Vec<u32> = instance.jobs.iter().map(|j| j.id).collect();
        let mids: Vec<String> = instance.machines.iter().map(|mc| sanitize(&mc.id)).collect();

        let c_var: Vec<[usize; STAGE_COUNT]> = (0..n)
            .map(|k| std::array::from_fn(|slot| b.var(format!("C_{}_{}", slot + 1, jid[k]), VarKind::Continuous)))
            .collect();
        let cmax = b.var("Cmax".into(), VarKind::Continuous);
        let t_base = b.variables.len();
        for &id in &jid {
            b.var(format!("T_{id}"), VarKind::Continuous);
        }
        let eligible: Vec<Vec<usize>> = Stage::ALL.iter().map(|&s| instance.eligible_machines(s)).collect();
        let mut x = Vec::with_capacity(n);
        for k in 0..n {
            let row: [Vec<Option<usize>>; STAGE_COUNT] = std::array::from_fn(|slot| {
                let mut v = vec![None; instance.machines.len()];
                for &j in &eligible[slot] {
                    v[j] = Some(b.var(format!("x_{}_{}_{}", slot + 1, mids[j], jid[k]), VarKind::Binary));
                }
                v
            });
            x.push(row);
        }
        let y_base = b.variables.len();
        for &k in &jid {
            for &l in &jid {
                b.var(format!("y_{k}_{l}"), VarKind::Binary);
            }
        }
        let y = |k: usize, l: usize| y_base + k * n + l;
        let xv = |k: usize, s: Stage, j: usize| x[k][s.slot()][j].expect("eligible machine");
        let p = |k: usize, s: Stage| instance.jobs[k].time(s);
        let c = |k: usize, s: Stage| c_var[k][s.slot()];
        let of_class = |class: ToolClass| instance.machines_of(class).collect::<Vec<_>>();
        let (cedb, ced, ce, ed, ovens) = (
            of_class(ToolClass::CEDB),
            of_class(ToolClass::CED),
            of_class(ToolClass::CE),
            of_class(ToolClass::ED),
            of_class(ToolClass::B),
        );

        // Per-job rows.
        for k in 0..n {
            let id = jid[k];
            let job = &instance.jobs[k];
            b.row(2, format!("e2_{id}"), vec![(c(k, Stage::SINK), 1)], Sense::Ge, p(k, Stage::SINK) + job.ready);
            for s in &Stage::ALL[1..] {
                let prev = Stage::from_slot(s.slot() - 1);
                b.row(3, format!("e3_{}_{id}", s.number()), vec![(c(k, *s), 1), (c(k, prev), -1)], Sense::Ge, p(k, *s));
            }
            b.row(6, format!("e6_{id}"), vec![(c(k, Stage::BAKE_POST), 1), (cmax, -1)], Sense::Le, 0);
            for s in Stage::ALL {
                let terms = eligible[s.slot()].iter().map(|&j| (xv(k, s, j), 1)).collect();
                let (eq, rhs) = if job.needs(s) { (7, 1) } else { (8, 0) };
                b.row(eq, format!("e{eq}_{}_{id}", s.number()), terms, Sense::Eq, rhs);
            }
            for &j in &cedb {
                let terms = vec![
                    (xv(k, Stage::EXPOSE, j), 1),
                    (xv(k, Stage::DEVELOP, j), 1),
                    (xv(k, Stage::BAKE_POST, j), 1),
                    (xv(k, Stage::COAT, j), -3),
                ];
                b.row(9, format!("e9_{}_{id}", mids[j]), terms, Sense::Eq, 0);
            }
            for &j in cedb.iter().chain(&ced) {
                for &o in &ovens {
                    let terms = vec![(xv(k, Stage::BAKE_PRE, o), 1), (xv(k, Stage::COAT, j), 1)];
                    b.row(10, format!("e10_{}_{}_{id}", mids[j], mids[o]), terms, Sense::Le, 1);
                }
            }
            for &j in &ced {
                let terms =
                    vec![(xv(k, Stage::EXPOSE, j), 1), (xv(k, Stage::DEVELOP, j), 1), (xv(k, Stage::COAT, j), -2)];
                b.row(13, format!("e13_{}_{id}", mids[j]), terms, Sense::Eq, 0);
            }
            for &j in &ce {
                let terms = vec![(xv(k, Stage::EXPOSE, j), 1), (xv(k, Stage::COAT, j), -1)];
                b.row(16, format!("e16_{}_{id}", mids[j]), terms, Sense::Eq, 0);
            }
            for &j in &ed {
                let terms = vec![(xv(k, Stage::DEVELOP, j), 1), (xv(k, Stage::EXPOSE, j), -1)];
                b.row(19, format!("e19_{}_{id}", mids[j]), terms, Sense::Eq, 0);
            }
            let terms = vec![(c(k, Stage::BAKE_POST), 1), (t_base + k, -1)];
            b.row(31, format!("e31_{id}"), terms, Sense::Le, job.due);
        }

        // Pairwise disjunctive rows for l > k, active when both jobs sit on
        // the same machine: y = 0 puts k after l, y = 1 puts l after k.
        for k in 0..n {
            for l in k + 1..n {
                let pair = format!("{}_{}", jid[k], jid[l]);
                for s in Stage::ALL {
                    for &j in &eligible[s.slot()] {
                        let tag = format!("{}_{}_{pair}", s.number(), mids[j]);
                        let (xk, xl) = (xv(k, s, j), xv(l, s, j));
                        b.row(
                            4,
                            format!("e4_{tag}"),
                            vec![(c(k, s), 1), (c(l, s), -1), (y(k, l), m), (xk, -m), (xl, -m)],
                            Sense::Ge,
                            p(k, s) - 2 * m,
                        );
                        b.row(
                            5,
                            format!("e5_{tag}"),
                            vec![(c(l, s), 1), (c(k, s), -1), (y(k, l), -m), (xk, -m), (xl, -m)],
                            Sense::Ge,
                            p(l, s) - 3 * m,
                        );
                    }
                }
                // Cluster spans: entry stage, exit stage.
                let spans: [(u8, &[usize], Stage, Stage); 4] = [
                    (11, &cedb, Stage::COAT, Stage::BAKE_POST),
                    (14, &ced, Stage::COAT, Stage::DEVELOP),
                    (17, &ce, Stage::COAT, Stage::EXPOSE),
                    (20, &ed, Stage::EXPOSE, Stage::DEVELOP),
                ];
                for (eq, machines, entry, exit) in spans {
                    for &j in machines {
                        let tag = format!("{}_{pair}", mids[j]);
                        let (xk, xl) = (xv(k, entry, j), xv(l, entry, j));
                        b.row(
                            eq,
                            format!("e{eq}_{tag}"),
                            vec![(c(k, entry), 1), (c(l, exit), -1), (y(k, l), m), (xk, -m), (xl, -m)],
                            Sense::Ge,
                            p(k, entry) - 2 * m,
                        );
                        b.row(
                            eq + 1,
                            format!("e{}_{tag}", eq + 1),
                            vec![(c(l, entry), 1), (c(k, exit), -1), (y(k, l), -m), (xk, -m), (xl, -m)],
                            Sense::Ge,
                            p(l, entry) - 3 * m,
                        );
                    }
                }
                // Shared ovens across the two bake stages.
                let (b4, b6) = (Stage::BAKE_PRE, Stage::BAKE_POST);
                for &o in &ovens {
                    let tag = format!("{}_{pair}", mids[o]);
                    let rows = [
                        (22, (k, b4), (l, b6), m, 2),
                        (23, (l, b6), (k, b4), -m, 3),
                        (24, (k, b6), (l, b4), m, 2),
                        (25, (l, b4), (k, b6), -m, 3),
                    ];
                    for (eq, (ja, sa), (jb, sb), ycoef, factor) in rows {
                        // C_a - C_b + ycoef*y - M x_k - M x_l >= P_a - factor*M
                        let (xa, xb) = if ja == k { (xv(k, sa, o), xv(l, sb, o)) } else { (xv(k, sb, o), xv(l, sa, o)) };
                        b.row(
                            eq,
                            format!("e{eq}_{tag}"),
                            vec![(c(ja, sa), 1), (c(jb, sb), -1), (y(k, l), ycoef), (xa, -m), (xb, -m)],
                            Sense::Ge,
                            p(ja, sa) - factor * m,
                        );
                    }
                }
            }
        }

        let objective = match kind {
            Objective::Cmax => vec![(cmax, 1)],
            Objective::Wct => (0..n).map(|k| (c(k, Stage::BAKE_POST), instance.jobs[k].weight)).collect(),
            Objective::Twt => (0..n).map(|k| (t_base + k, instance.jobs[k].weight)).collect(),
        };
        MilpModel {
            kind,
            big_m: m,
            variables: b.variables,
            constraints: b.constraints,
            objective,
            n,
            x,
            y_base,
            t_base,
            cmax,
        }
    }

    pub fn counts(&self) -> ModelCounts {
        let binary = self.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
        ModelCounts {
            constraints: self.constraints.len(),
            continuous: self.variables.len() - binary,
            binary,
            total: self.variables.len(),
        }
    }

    /// Writes the model in CPLEX LP format.
    pub fn write_lp<W: Write>(&self, label: &str, mut out: W) -> Result<()> {
        out.write_all(self.to_lp(label).as_bytes())?;
        Ok(())
    }

    pub fn to_lp(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\\ {} objective, {label}", self.kind);
        s.push_str("Minimize\n obj:");
        self.push_terms(&mut s, &self.objective);
        s.push_str("\nSubject To\n");
        for row in &self.constraints {
            let _ = write!(s, " {}:", row.name);
            self.push_terms(&mut s, &row.terms);
            let _ = writeln!(s, " {} {}", row.sense.symbol(), row.rhs);
        }
        // Nonnegativity is the LP-format default for every variable.
        s.push_str("Binaries\n");
        for v in self.variables.iter().filter(|v| v.kind == VarKind::Binary) {
            let _ = writeln!(s, " {}", v.name);
        }
        s.push_str("End\n");
        s
    }

    fn push_terms(&self, s: &mut String, terms: &[(usize, i64)]) {
        if terms.is_empty() {
            s.push_str(" 0 Cmax");
            return;
        }
        for (i, &(var, coef)) in terms.iter().enumerate() {
            let name = &self.variables[var].name;
            let sign = if coef < 0 { " -" } else if i > 0 { " +" } else { "" };
            match coef.abs() {
                1 => {
                    let _ = write!(s, "{sign} {name}");
                }
                a => {
                    let _ = write!(s, "{sign} {a} {name}");
                }
            }
        }
    }

    /// Variable values encoding `schedule`: completions, assignments, the
    /// precedence of every job pair that shares a machine, makespan and
    /// tardiness.
    pub fn values_from_schedule(&self, instance: &Instance, schedule: &Schedule) -> Vec<i64> {
        let n = self.n;
        let mut v = vec![0i64; self.variables.len()];
        for k in 0..n {
            for slot in 0..STAGE_COUNT {
                v[k * STAGE_COUNT + slot] = schedule.completion[k][slot];
                if let Some(j) = schedule.assign[k][slot] {
                    if let Some(idx) = self.x[k][slot].get(j).copied().flatten() {
                        v[idx] = 1;
                    }
                }
            }
            v[self.t_base + k] = (schedule.finish(k) - instance.jobs[k].due).max(0);
        }
        v[self.cmax] = (0..n).map(|k| schedule.finish(k)).max().unwrap_or(0);
        for seq in &schedule.sequences {
            for (a, &(k, _)) in seq.iter().enumerate() {
                for &(l, _) in &seq[a + 1..] {
                    if k < l {
                        v[self.y_base + k * n + l] = 1;
                    }
                }
            }
        }
        v
    }

    /// Rows violated by `values`.
    pub fn check(&self, values: &[i64]) -> Vec<RowViolation> {
        self.constraints
            .iter()
            .filter_map(|row| {
                let lhs: i128 = row.terms.iter().map(|&(var, coef)| coef as i128 * values[var] as i128).sum();
                let rhs = row.rhs as i128;
                let ok = match row.sense {
                    Sense::Ge => lhs >= rhs,
                    Sense::Le => lhs <= rhs,
                    Sense::Eq => lhs == rhs,
                };
                (!ok).then(|| RowViolation { name: row.name.clone(), group: row.group, lhs, rhs: row.rhs })
            })
            .collect()
    }

    pub fn objective_value(&self, values: &[i64]) -> i64 {
        self.objective.iter().map(|&(var, coef)| coef * values[var]).sum()
    }
}

/// Builds the model of `instance` for `kind`.
pub fn export_milp(instance: &Instance, kind: Objective) -> MilpModel {
    MilpModel::build(instance, kind)
}
