//! A small noise sweep: NC against noise level, printed as CSV.

use std::path::Path;

use sigma::sweep::{rows_to_csv, run_sweep, SweepConfig};

fn main() -> sigma::Result<()> {
    let cfg = SweepConfig::parse(
        "nodes = 50\n\
         edge_prob = 0.1\n\
         graph_seed = 3\n\
         q = 0, 0.02, 0.05, 0.1\n\
         seeds = 1, 2, 3\n\
         init = degree\n\
         extract = bijection\n",
        Path::new("."),
    )?;
    let rows = run_sweep(&cfg)?;
    print!("{}", rows_to_csv(&rows));
    for q in &cfg.q {
        let cell: Vec<f64> = rows.iter().filter(|r| r.q == *q).map(|r| r.nc).collect();
        eprintln!(
            "q = {q:<5} mean NC {:.3}",
            cell.iter().sum::<f64>() / cell.len() as f64
        );
    }
    Ok(())
}
