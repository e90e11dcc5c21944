//! Structural inconsistency of candidate pairs, its one-hop closed form and
//! the edge-perturbation bound on CSI.

use sigma::diffusion::{DissimilarityPair, WaveletParams};
use sigma::graph::{self, Graph, NoiseSpec, Permutation};
use sigma::inconsistency::{csi, mnc, perturbation_report, si_matrix, si_one_hop_form};
use sigma::transport::TransportPlan;

fn main() -> sigma::Result<()> {
    let g = Graph::unweighted(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 4), (1, 5), (4, 5)])?;
    let noisy = graph::inject_noise(&g, &NoiseSpec::new(0.3, 9)?)?;
    let (h, truth) = graph::permute(&noisy, &Permutation::random(6, 9))?;

    // With K = 1, SI of a matched pair counts the neighbours it disagrees on.
    let t = 0.2;
    let d = DissimilarityPair::from_graphs(&g, &h, &WaveletParams::new(t, 1, 1.0)?)?;
    let plan = TransportPlan::from_permutation(&truth);
    let s = si_matrix(&d, &plan)?;
    println!("node  SI(i, truth(i))  t^2 |sym diff|  MNC");
    for i in 0..6 {
        let j = truth.apply(i);
        println!(
            "{i:>4}  {:>15.6}  {:>14.6}  {:.3}",
            s.get(i, j),
            si_one_hop_form(&g, &h, &truth, t, i, j)?,
            mnc(&g, &h, &truth, i, j)?
        );
    }

    // CSI under a uniform plan versus the true plan.
    let uniform = TransportPlan::uniform(6);
    println!("\nCSI, uniform plan: {:.4}", csi(&d, &uniform, &truth)?);
    println!("CSI, true plan:    {:.4}", csi(&d, &plan, &truth)?);

    for k in 1..=3 {
        let params = WaveletParams::new(0.5, k, 1.0)?;
        let r = perturbation_report(&g, &h, &truth, &params)?;
        let worst = r.csi.iter().cloned().fold(0.0, f64::max);
        println!(
            "K = {k}: eps = {:?}, bound = {:.4}, max CSI = {:.4}",
            r.eps
                .iter()
                .map(|e| (e * 1e3).round() / 1e3)
                .collect::<Vec<_>>(),
            r.bound[0],
            worst
        );
    }
    Ok(())
}
