//! SVG Gantt charts: one lane per machine, one bar per machine occupation.
//! Stages a job spends on a cluster tool share a single bar.

use std::fmt::Write;

use photolith::evaluator::{check_feasibility, Schedule};
use photolith::{Error, Instance, Result, Time};

const LANE: i64 = 28;
const LABEL_W: i64 = 70;
const TOP: i64 = 30;
const WIDTH: i64 = 900;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

// Deterministic pastel per job id.
fn color(job_id: u32) -> String {
    let hue = (job_id as u64 * 137) % 360;
    format!("hsl({hue},60%,75%)")
}

/// Renders `schedule` after checking it is feasible.
pub fn render(instance: &Instance, schedule: &Schedule) -> Result<String> {
    let violations = check_feasibility(instance, schedule);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let lanes = schedule.occupations(instance);
    let horizon: Time = lanes.iter().flatten().map(|o| o.end).max().unwrap_or(0).max(1);
    let scale = (WIDTH - LABEL_W - 10) as f64 / horizon as f64;
    let x = |t: Time| LABEL_W as f64 + t as f64 * scale;
    let height = TOP + LANE * instance.machines.len() as i64 + 10;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="monospace" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="4" y="16">{} (horizon {horizon})</text>"#, escape(&instance.label));
    for (j, machine) in instance.machines.iter().enumerate() {
        let y = TOP + LANE * j as i64;
        let _ = writeln!(
            s,
            r##"<g class="lane" data-machine="{id}"><line x1="{LABEL_W}" y1="{y2}" x2="{WIDTH}" y2="{y2}" stroke="#ddd"/><text x="4" y="{ty}">{id}</text>"##,
            id = escape(&machine.id),
            y2 = y + LANE,
            ty = y + LANE / 2 + 4,
        );
        for o in &lanes[j] {
            let job = &instance.jobs[o.job];
            let stages: Vec<String> = o.stages.iter().map(|st| st.number().to_string()).collect();
            let label = format!("J{} S{}", job.id, stages.join(","));
            let _ = writeln!(
                s,
                r##"<rect class="bar" data-job="{}" data-start="{}" data-end="{}" x="{:.2}" y="{}" width="{:.2}" height="{}" fill="{}" stroke="#333"><title>{label} [{}, {}]</title></rect><text x="{:.2}" y="{}">{label}</text>"##,
                job.id,
                o.start,
                o.end,
                x(o.start),
                y + 3,
                x(o.end) - x(o.start),
                LANE - 6,
                color(job.id),
                o.start,
                o.end,
                x(o.start) + 2.0,
                y + LANE / 2 + 4,
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
