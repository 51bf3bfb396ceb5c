// Explicit forest families, the graphical resolvent and group inverse, and
// the exact tree-swap identity.

use mjp_poisson::forest::{self, FamilyDescriptor, ForestWeights, RationalGraph};
use mjp_poisson::graph::RateGraph;
use mjp_poisson::spectral;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = RateGraph::with_numbered_states(
        4,
        [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (3, 0, 1.0), (1, 0, 0.5), (3, 1, 2.0)],
    )?;
    for d in [
        FamilyDescriptor::InTrees { root: 0 },
        FamilyDescriptor::TwoTreeJoined { x: 2, y: 0 },
        FamilyDescriptor::TwoTreeSeparated { x: 2, y: 0 },
        FamilyDescriptor::Graded { m: 1 },
    ] {
        let e = forest::enumerate_family(&g, d, 8)?;
        println!("{d:?}: {} forests, weight {}", e.count(), e.total_weight);
    }
    let trees = forest::enumerate_in_trees(&g, 0, 8)?;
    let mut out = Vec::new();
    trees.write_jsonl(&g, &mut out)?;
    println!("first in-tree: {}", String::from_utf8(out)?.lines().next().unwrap_or(""));

    let t = forest::forest_tables(&g, 8)?;
    let l = g.generator();
    let alpha = 0.7;
    let by_forests = forest::resolvent_by_forests(&t, alpha);
    let direct = spectral::resolvent(&l, alpha)?;
    println!("resolvent difference {:.1e}", (by_forests - direct).amax());
    let gi = spectral::group_inverse(&l)?;
    let graphical = ForestWeights::from_tables(&t).group_inverse();
    println!("group inverse difference {:.1e}", (graphical - gi.matrix()).amax());

    let rg = RationalGraph::from_rate_graph(&g);
    for x in 0..g.n() {
        let r = forest::check_tree_swap(&rg, x);
        println!("tree swap at {x}: {} pairs, passed {}", r.pairs, r.passed());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("forest example");
}
