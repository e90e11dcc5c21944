//! Matches a random graph against a noisy, permuted copy and writes the JSON
//! report to standard output.

use sigma::graph::{self, NoiseSpec, Permutation};
use sigma::matcher::{sigma_match, Extraction, InitStrategy, MatchConfig};
use sigma::report::{self, EvalReport, Format};

fn main() -> sigma::Result<()> {
    let g = graph::erdos_renyi(40, 0.12, 5)?;
    let noisy = graph::inject_noise(&g, &NoiseSpec::new(0.02, 8)?)?;
    let (h, truth) = graph::permute(&noisy, &Permutation::random(g.n(), 8))?;
    let truth_pairs: Vec<(String, String)> = (0..g.n())
        .map(|i| (g.label(i).to_string(), h.label(truth.apply(i)).to_string()))
        .collect();

    for init in [
        InitStrategy::Uniform,
        InitStrategy::DegreeSoftmax { temperature: 1.0 },
    ] {
        let cfg = MatchConfig {
            init,
            extraction: Extraction::GreedyBijection,
            ..MatchConfig::default()
        };
        let result = sigma_match(&cfg, &g, &h)?;
        let nc = report::node_correctness(&result.label_pairs(), &truth_pairs)?;
        eprintln!(
            "{:<10} NC {nc:.3}, objective {:.4e} after {} iterations",
            cfg.init.describe(),
            result.final_objective(),
            result.iterations_run
        );
        if let InitStrategy::DegreeSoftmax { .. } = cfg.init {
            let eval = EvalReport::new(&result, &g, &h, Some(&truth_pairs))?;
            let json = report::serialize_report(&cfg, &result, &eval, Format::Json)?;
            println!("{}", String::from_utf8_lossy(&json));
        }
    }
    Ok(())
}
