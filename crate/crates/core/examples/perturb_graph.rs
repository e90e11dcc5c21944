//! Builds a noisy, relabelled copy of a small graph and prints both edge
//! lists with the ground-truth correspondence.

use sigma::graph::{self, NoiseSpec, Permutation};

fn main() -> sigma::Result<()> {
    let source = graph::parse_edge_list(
        "# a ring with two chords\n\
         a b\nb c\nc d\nd e\ne f\nf a\na d\nb e\n",
    )?;
    println!(
        "source: {} nodes, {} edges",
        source.n(),
        source.edge_count()
    );

    let noise = NoiseSpec::new(0.25, 42)?;
    let noisy = graph::inject_noise(&source, &noise)?;
    println!(
        "noise q = {} adds {} edges -> {} edges",
        noise.q,
        noise.added_edges(source.edge_count()),
        noisy.edge_count()
    );

    let (target, truth) = graph::permute(&noisy, &Permutation::random(source.n(), 42))?;
    println!("\ntarget edge list:\n{}", target.to_edge_list());
    println!("truth (source -> target):");
    for i in 0..source.n() {
        println!("  {} -> {}", source.label(i), target.label(truth.apply(i)));
    }
    Ok(())
}
