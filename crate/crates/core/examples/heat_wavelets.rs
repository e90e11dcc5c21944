//! Truncated heat-diffusion wavelets and the dissimilarity matrices built
//! from them.

use sigma::diffusion::{heat_wavelet, DissimilarityPair, WaveletParams};
use sigma::graph::{self, Graph};

fn main() -> sigma::Result<()> {
    let path = Graph::unweighted(4, &[(0, 1), (1, 2), (2, 3)])?;
    println!("Laplacian of P4:\n{}", graph::laplacian(&path));

    // Order K reaches K hops: the (0, 3) entry first appears at K = 3.
    for order in 1..=3 {
        let params = WaveletParams::new(0.5, order, 1.0)?;
        let psi = heat_wavelet(&path, &params)?;
        println!("\nK = {order}, t = 0.5:\n{:.4}", psi.psi());
    }

    let star = Graph::unweighted(4, &[(0, 1), (0, 2), (0, 3)])?;
    let d = DissimilarityPair::from_graphs(&path, &star, &WaveletParams::default())?;
    println!("\nshared offset psi_bar = {:.6}", d.psi_bar);
    println!("B for P4:\n{:.6}", d.b_s);
    println!("B for the star:\n{:.6}", d.b_t);
    Ok(())
}
