//! Brute-force optimum for tiny instances, written independently of the
//! library's decoder, timing and branch and bound.
//!
//! Enumerates every route, every machine per visit and every orientation of
//! every job pair, times each combination by fixed-point relaxation, and
//! keeps the best value per objective. Eligibility is re-derived here from
//! the routing rules rather than taken from the library.

use photolith::{Instance, Objective, Time};

// Stage slots 0..6: sink, coat, expose, bake-pre, develop, bake-post.
const SINK: usize = 0;
const COAT: usize = 1;
const EXPOSE: usize = 2;
const BAKE_PRE: usize = 3;
const DEVELOP: usize = 4;
const BAKE_POST: usize = 5;

#[derive(Clone, Debug)]
struct Visit {
    machine: usize,
    /// Stage slots processed during this stay, ascending.
    stages: Vec<usize>,
}

fn machines_named(inst: &Instance, class: &str) -> Vec<usize> {
    (0..inst.machines.len()).filter(|&j| inst.machines[j].class.name() == class).collect()
}

fn individual_class(slot: usize) -> &'static str {
    match slot {
        SINK => "S",
        COAT => "C",
        EXPOSE => "E",
        DEVELOP => "D",
        _ => "B",
    }
}

/// Every way to route job `k`: a list of visits with concrete machines.
fn job_routings(inst: &Instance, k: usize) -> Vec<Vec<Visit>> {
    let p = inst.jobs[k].p;
    let needs = |s: usize| p[s] > 0;
    // (cluster name, covered slots); None = all individual tools.
    let mut families: Vec<Option<(&str, Vec<usize>)>> = vec![None];
    let clusters: [(&str, &[usize]); 4] = [
        ("CE", &[COAT, EXPOSE]),
        ("CED", &[COAT, EXPOSE, DEVELOP]),
        ("CEDB", &[COAT, EXPOSE, DEVELOP, BAKE_POST]),
        ("ED", &[EXPOSE, DEVELOP]),
    ];
    for (name, covered) in clusters {
        if !covered.iter().all(|&s| needs(s)) {
            continue;
        }
        // A pre-develop bake cannot happen inside CED or CEDB.
        if needs(BAKE_PRE) && (name == "CED" || name == "CEDB") {
            continue;
        }
        families.push(Some((name, covered.to_vec())));
    }

    let mut out = Vec::new();
    for fam in families {
        // Visit skeleton: (candidate machines, stages).
        let mut skeleton: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut cluster_done = false;
        for s in 0..6 {
            if !needs(s) {
                continue;
            }
            match &fam {
                Some((name, covered)) if covered.contains(&s) => {
                    if !cluster_done {
                        skeleton.push((machines_named(inst, name), covered.clone()));
                        cluster_done = true;
                    }
                }
                _ => skeleton.push((machines_named(inst, individual_class(s)), vec![s])),
            }
        }
        if skeleton.iter().any(|(m, _)| m.is_empty()) {
            continue;
        }
        // Cartesian product of machine choices.
        let mut partial: Vec<Vec<Visit>> = vec![Vec::new()];
        for (machines, stages) in &skeleton {
            let mut next = Vec::new();
            for route in &partial {
                for &j in machines {
                    let mut r = route.clone();
                    r.push(Visit { machine: j, stages: stages.clone() });
                    next.push(r);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out
}

/// Earliest completions for fixed routes and pair orientation, or `None`
/// when the orientation is contradictory (times diverge).
fn time_schedule(inst: &Instance, routes: &[&Vec<Visit>], first: &dyn Fn(usize, usize) -> bool) -> Option<Vec<[Time; 6]>> {
    let n = routes.len();
    let horizon: Time =
        inst.jobs.iter().map(|j| j.ready).max().unwrap_or(0) + inst.jobs.iter().flat_map(|j| j.p).sum::<Time>();
    let mut completion = vec![[0; 6]; n];
    // End of each stay: completion of its last stage.
    let mut span_end: Vec<Vec<Time>> = routes.iter().map(|r| vec![0; r.len()]).collect();
    loop {
        let mut changed = false;
        for k in 0..n {
            let mut t = inst.jobs[k].ready;
            for s in 0..6 {
                let p = inst.jobs[k].p[s];
                if p == 0 {
                    completion[k][s] = t;
                    continue;
                }
                let v = routes[k].iter().position(|v| v.stages.contains(&s)).expect("stage routed");
                let visit = &routes[k][v];
                if visit.stages[0] == s {
                    // Entering the machine: wait for every stay of a job
                    // oriented before this one.
                    for l in (0..n).filter(|&l| l != k && first(l, k)) {
                        for (w, other) in routes[l].iter().enumerate() {
                            if other.machine == visit.machine {
                                t = t.max(span_end[l][w]);
                            }
                        }
                    }
                }
                // Inside a stay the job moves on without waiting; an ED stay
                // resumes when the job's own oven visit ends.
                t += p;
                if t > horizon {
                    return None;
                }
                if completion[k][s] != t {
                    completion[k][s] = t;
                    changed = true;
                }
                if visit.stages.last() == Some(&s) {
                    span_end[k][v] = t;
                }
            }
        }
        if !changed {
            return Some(completion);
        }
    }
}

fn objective_value(inst: &Instance, completion: &[[Time; 6]], kind: Objective) -> Time {
    let finish = |k: usize| completion[k][BAKE_POST];
    match kind {
        Objective::Cmax => (0..inst.n()).map(finish).max().unwrap_or(0),
        Objective::Wct => (0..inst.n()).map(|k| inst.jobs[k].weight * finish(k)).sum(),
        Objective::Twt => (0..inst.n()).map(|k| inst.jobs[k].weight * (finish(k) - inst.jobs[k].due).max(0)).sum(),
    }
}

/// Optimal values in `Objective::ALL` order.
pub fn brute_force(inst: &Instance) -> [Time; 3] {
    let n = inst.n();
    assert!(n <= 4, "oracle is exponential");
    let options: Vec<Vec<Vec<Visit>>> = (0..n).map(|k| job_routings(inst, k)).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect();
    let mut best = [Time::MAX; 3];
    let mut pick = vec![0usize; n];
    loop {
        let routes: Vec<&Vec<Visit>> = (0..n).map(|k| &options[k][pick[k]]).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let first = |a: usize, b: usize| {
                let (lo, hi, flip) = if a < b { (a, b, false) } else { (b, a, true) };
                let i = pairs.iter().position(|&p| p == (lo, hi)).unwrap();
                (mask >> i & 1 == 1) != flip
            };
            if let Some(c) = time_schedule(inst, &routes, &first) {
                for (i, kind) in Objective::ALL.into_iter().enumerate() {
                    best[i] = best[i].min(objective_value(inst, &c, kind));
                }
            }
        }
        // Odometer over route choices.
        let mut k = 0;
        while k < n {
            pick[k] += 1;
            if pick[k] < options[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    best
}
