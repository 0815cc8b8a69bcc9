//! Sweeps the comfort weight and risk length scale over a grid and reports
//! which settings keep every catalog scenario passing. The shipped defaults
//! were picked from the passing region of this sweep.
//!
//! cargo run --release --example calibrate

use riskshadow::{catalog, check};

const W_COMFORT: [f64; 5] = [0.02, 0.1, 0.2, 0.3, 0.5];
const D0: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

fn main() {
    let cat = catalog();
    println!("{:>9} {:>5}  result", "w_comfort", "d0");
    for w in W_COMFORT {
        for d0 in D0 {
            let mut failed = Vec::new();
            for s in cat.iter() {
                let mut s = s.clone();
                s.planner.w_comfort = w;
                s.planner.risk_scale_d0 = d0;
                match check(&s) {
                    Ok(o) if o.passed() => {}
                    Ok(_) | Err(_) => failed.push(s.name.clone()),
                }
            }
            let verdict = if failed.is_empty() {
                "all pass".to_string()
            } else {
                failed.join(",")
            };
            println!("{w:>9} {d0:>5}  {verdict}");
        }
    }
}
