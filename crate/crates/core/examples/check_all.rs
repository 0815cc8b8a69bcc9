use riskshadow::{catalog, check};

fn main() {
    for s in catalog().iter() {
        let t0 = std::time::Instant::now();
        let out = check(s).unwrap();
        println!(
            "{:28} {} {:.2?} {:?}",
            out.name,
            if out.passed() { "PASS" } else { "FAIL" },
            t0.elapsed(),
            out.failures
        );
    }
}
