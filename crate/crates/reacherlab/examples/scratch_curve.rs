use reacherlab::xlab::{self, config::*};

fn main() {
    let cycle: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(80);
    let episodes: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let seed: u64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut cfg = ExperimentConfig::default();
    cfg.action_cycle_ms = cycle;
    cfg.seed = seed;
    let steps_per_ep = 4000 / cycle;
    cfg.total_steps = episodes * steps_per_ep;
    let r = xlab::runner::execute(&cfg).unwrap();
    let n = r.rows.len();
    print!("cycle {cycle} seed {seed} ({n} batches) norm-returns by tenth:");
    for chunk in r.rows.chunks((n / 10).max(1)) {
        let m: f64 = chunk.iter().map(|x| x.mean_return).sum::<f64>() / chunk.len() as f64;
        print!(" {:.4}", m / r.steps_per_episode as f64);
    }
    println!();
    let fq = (n / 4).max(1);
    let fq_norm: f64 = r.rows.iter().rev().take(fq).map(|x| x.mean_return).sum::<f64>() / fq as f64 / r.steps_per_episode as f64;
    let fq_dist: f64 = r.rows.iter().rev().take(fq).map(|x| x.mean_final_distance).sum::<f64>() / fq as f64;
    println!("  fq_norm {fq_norm:.5} fq_dist {fq_dist:.4}");
}
