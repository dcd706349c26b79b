//! Runs the standard desk experiment for a few seeds and prints accuracies.

use thinktank_core::simulation::{run_desk, DeskConfig};

fn main() {
    let config = DeskConfig::standard();
    let seeds: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    for seed in if seeds.is_empty() { vec![0, 1, 2, 3, 4] } else { seeds } {
        let t = std::time::Instant::now();
        let out = run_desk(&config, seed).expect("desk run");
        let fmt = |c: &thinktank_core::evaluation::KSweepCurve| {
            c.points.iter().map(|p| format!("{:.3}", p.micro)).collect::<Vec<_>>().join(" ")
        };
        println!(
            "seed {seed}: routing {:.3} mv {:.3} vbon {:.3} wbon {:.3} | queries {} | {:?}",
            out.routing.scores.micro,
            out.majority.scores.micro,
            out.vanilla_bon.scores.micro,
            out.weighted_bon.scores.micro,
            out.routing.query_count,
            t.elapsed()
        );
        println!("  trained   {}", fmt(&out.sweep_trained));
        println!("  untrained {}", fmt(&out.sweep_untrained));
    }
}
