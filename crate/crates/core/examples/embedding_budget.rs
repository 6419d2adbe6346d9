//! Fitting the coupling matrix into a coupler budget by banding.

use qapca::embedding::{compute_kappa_for, coupler_count, CouplerBudget, DiagonalScale, EmbeddingCache, EmbeddingLayout};

fn main() -> qapca::Result<()> {
    let budget = CouplerBudget::default();
    println!("default budget: {} couplers", budget.c_limit);

    for (n, k) in [(150, 1), (300, 1), (60, 2), (40, 3)] {
        match compute_kappa_for(n, k, budget.c_limit) {
            Ok(kappa) => {
                let layout = EmbeddingLayout::build(n, k, kappa)?;
                println!(
                    "N={n:>3} K={k}: full {:>6}, banded kappa={kappa:>3} uses {:>5}",
                    coupler_count(n, k),
                    layout.coupler_count()
                );
            }
            Err(e) => println!("N={n:>3} K={k}: {e}"),
        }
    }

    // coefficients of a small layout applied to an all-ones J
    let layout = EmbeddingLayout::build(3, 2, 1)?;
    let template = layout.template(2.0, DiagonalScale::ComponentCount)?;
    for c in template.couplings.iter().take(8) {
        println!("  ({}, {}) -> {}", c.i, c.j, c.weight);
    }

    let cache = EmbeddingCache::new();
    for _ in 0..3 {
        cache.get_or_build(300, 1, &budget)?;
    }
    println!("cache built {} layout(s) for 3 requests", cache.builds());
    Ok(())
}
