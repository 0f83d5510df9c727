use reacherlab::xlab::{self, config::*};
use reacherlab::harness::ActionSpace;

fn variant(name: &str, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    match name {
        "baseline" => {}
        "wireless" => cfg.medium = Medium::Wireless,
        "delay80" => cfg.action_delay_ms = Some(80.0),
        "delay2" => cfg.actuation_delay_ms = Some(2.0),
        "cycle8" => cfg.action_cycle_ms = 8,
        "cycle80" => cfg.action_cycle_ms = 80,
        "cycle160" => cfg.action_cycle_ms = 160,
        "smooth40" => cfg.action_space = ActionSpace::SmoothedPosition,
        "smooth8" => { cfg.action_space = ActionSpace::SmoothedPosition; cfg.action_cycle_ms = 8; }
        _ => panic!(),
    }
    cfg
}

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let steps: u64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(150_000);
    let mut cfg = variant(&name, seed);
    cfg.total_steps = steps;
    let t0 = std::time::Instant::now();
    let r = xlab::runner::execute(&cfg).unwrap();
    let n = r.rows.len();
    let quarter = (n / 4).max(1);
    let fq_raw: f64 = r.rows.iter().rev().take(quarter).map(|x| x.mean_return).sum::<f64>() / quarter as f64;
    let fq_norm = fq_raw / r.steps_per_episode as f64;
    let fq_dist: f64 = r.rows.iter().rev().take(quarter).map(|x| x.mean_final_distance).sum::<f64>() / quarter as f64;
    println!("{name} seed {seed}: batches {n} fq_raw {fq_raw:.3} fq_norm {fq_norm:.5} fq_dist {fq_dist:.4} trips {} wd_drop {} regress {} safety {} wall {:?}",
        r.audit.watchdog_trips, r.audit.watchdog_dropped, r.audit.action_order_regressions, r.audit.safety_stops, t0.elapsed());
}
