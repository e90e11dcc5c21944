//! Exhaustive references: the unique optimum of an asymmetric pair, and the
//! indistinguishable peripherals of a star.

use sigma::diffusion::{DissimilarityPair, WaveletParams};
use sigma::graph::{self, Graph, Permutation};
use sigma::inconsistency::si_pair;
use sigma::oracle::{brute_force_gw, neighborhoods_isomorphic};
use sigma::transport::TransportPlan;

fn main() -> sigma::Result<()> {
    let g = Graph::unweighted(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 4), (1, 5), (4, 5)])?;
    let (h, truth) = graph::permute(&g, &Permutation::new(vec![3, 0, 5, 1, 4, 2])?)?;
    let r = brute_force_gw(&DissimilarityPair::from_graphs(
        &g,
        &h,
        &WaveletParams::default(),
    )?)?;
    println!(
        "asymmetric pair: {} permutations, optimum {:?} (objective {:.1e}, unique {}), truth {:?}",
        r.evaluated_count,
        r.best_perm.as_slice(),
        r.best_objective,
        r.unique,
        truth.as_slice()
    );

    let star = Graph::unweighted(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)])?;
    let d = DissimilarityPair::from_graphs(&star, &star, &WaveletParams::default())?;
    let r = brute_force_gw(&d)?;
    println!(
        "\nstar: optimum {:.1e}, unique {}",
        r.best_objective, r.unique
    );

    // Swapping two leaves is as good as the identity.
    let swap = Permutation::new(vec![0, 2, 1, 3, 4, 5])?;
    let plan = TransportPlan::from_permutation(&swap);
    for i in 1..6 {
        println!(
            "  SI({i}, {}) = {:.1e}",
            swap.apply(i),
            si_pair(&d, &plan, i, swap.apply(i))?
        );
    }
    println!(
        "  leaves 1 and 2 have isomorphic 1-hop neighbourhoods: {}",
        neighborhoods_isomorphic(&star, 1, &star, 2, 1)?
    );
    println!(
        "  leaf 1 and the centre: {}",
        neighborhoods_isomorphic(&star, 1, &star, 0, 1)?
    );
    Ok(())
}
