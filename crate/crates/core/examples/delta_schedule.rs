//! Which earlier frames each frame may chain from, for K = 1..5, next to the
//! consecutive and direct baselines.
//!
//! ```bash
//! cargo run --example delta_schedule
//! ```

use std::fmt::Write;

use mft::chain::{delta_schedule, Schedule};

pub fn run_example() -> mft::Result<String> {
    let mut out = String::from("   j |");
    for k in 1..=5 {
        write!(out, " {:<w$}", format!("K={k}"), w = 2 * k + 1).unwrap();
    }
    out.truncate(out.trim_end().len());
    out.push('\n');
    for j in 2..=12 {
        write!(out, "{j:>4} |").unwrap();
        for k in 1..=5 {
            let deltas = delta_schedule(j, k)?;
            let cell = deltas.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
            write!(out, " {cell:<k$}", k = 2 * k + 1).unwrap();
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    for s in [Schedule::Consecutive, Schedule::Direct] {
        writeln!(out, "{s:>6} at j=9: {:?}", s.deltas(9, 5)?).unwrap();
    }
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
