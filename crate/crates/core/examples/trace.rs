//! Print a compact per-step timeline of a scenario file in both modes.

use std::env;
use std::fs;

use riskshadow::{run, Mode, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = env::args()
        .nth(1)
        .ok_or("usage: trace <scenario.toml> [every]")?;
    let every: usize = env::args().nth(2).map_or(Ok(5), |s| s.parse())?;
    let scenario = Scenario::from_toml(&fs::read_to_string(path)?)?;
    for mode in Mode::ALL {
        let t0 = std::time::Instant::now();
        let trace = run(&scenario, mode)?;
        println!("== {mode} ({:.2?})", t0.elapsed());
        for r in trace.records.iter().step_by(every) {
            let ego = r.agent(scenario.ego).unwrap();
            print!(
                "t={:5.2} a={:+.2} v={:5.2} l={:6.1} |",
                r.time, ego.a, ego.v, ego.l
            );
            for (id, d) in &r.ego_distances {
                let o = r.agent(*id).unwrap();
                let f =
                    r.filter
                        .as_ref()
                        .and_then(|f| f.decision(*id))
                        .map_or("-".to_string(), |d| {
                            format!(
                                "{}{}",
                                d.reason,
                                d.other_area
                                    .interval
                                    .limiting_agent
                                    .map_or(String::new(), |a| format!("@{a}"))
                            )
                        });
                print!(" {id}: d={d:5.1} v={:4.1} {f} |", o.v);
            }
            println!(
                " cost={:.2} [{:.2},{:.2}]",
                r.plan.cost.total, r.plan.min_cost, r.plan.max_cost
            );
        }
        println!(
            "min gap {:.2}, max|a| {:.3}",
            trace.min_ego_distance(),
            trace.max_abs_ego_accel()
        );
    }
    Ok(())
}
