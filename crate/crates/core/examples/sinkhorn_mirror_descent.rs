//! Sinkhorn projection and KL mirror-descent steps on the GW objective.

use ndarray::array;
use sigma::diffusion::{DissimilarityPair, WaveletParams};
use sigma::graph::{self, Graph, Permutation};
use sigma::matcher::blended_truth_plan;
use sigma::transport::{gw_gradient, gw_objective, mirror_step, sinkhorn_project, StepSchedule};

fn main() -> sigma::Result<()> {
    let m = array![[4.0, 1.0, 1.0], [1.0, 2.0, 5.0], [2.0, 2.0, 1.0]];
    let p = sinkhorn_project(&m, 1e-12, 500)?;
    println!(
        "Sinkhorn: {} sweeps, marginal error {:.1e}\n{:.6}",
        p.sweeps,
        p.marginal_error,
        p.plan.matrix()
    );

    let g = Graph::unweighted(
        7,
        &[
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 6),
            (1, 5),
            (2, 6),
        ],
    )?;
    let (h, truth) = graph::permute(&g, &Permutation::random(7, 3))?;
    let d = DissimilarityPair::from_graphs(&g, &h, &WaveletParams::default())?;
    let ones = ndarray::Array1::ones(7);

    let mut plan = blended_truth_plan(&truth, 0.05)?;
    let eta = StepSchedule::default().resolve(&gw_gradient(&d, &plan, &ones, &ones)?);
    println!("\nstep size eta = {eta:.4}");
    for step in 0..8 {
        let grad = gw_gradient(&d, &plan, &ones, &ones)?;
        let next = mirror_step(&plan, &grad, eta, 1e-10, 500)?;
        let mass_on_truth: f64 = (0..7)
            .map(|i| next.plan.get(i, truth.apply(i)))
            .sum::<f64>()
            / 7.0;
        println!(
            "step {step}: objective {:.3e}, displacement {:.3e}, mass on truth {:.6}",
            gw_objective(&d, &next.plan)?,
            next.plan.max_abs_diff(&plan),
            mass_on_truth
        );
        plan = next.plan;
    }
    Ok(())
}
