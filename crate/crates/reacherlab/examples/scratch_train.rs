use reacherlab::xlab::{self, config::*};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let steps: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(150_000);
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    cfg.total_steps = steps;
    let t0 = std::time::Instant::now();
    let r = xlab::runner::execute(&cfg).unwrap();
    println!("seed {seed}: {} batches, {} episodes, wall {:?}, sim {:?}", r.rows.len(), r.episodes, t0.elapsed(), r.sim_elapsed);
    println!("audit: {:?}", r.audit);
    let n = r.rows.len();
    for row in r.rows.iter().step_by((n/15).max(1)) {
        println!("  batch {:3}  steps {:6}  ret {:8.3} +- {:6.3}  final_dist {:.4}", row.batch, row.steps, row.mean_return, row.std_return, row.mean_final_distance);
    }
    let first10: f64 = r.rows.iter().take(10).map(|x| x.mean_return).sum::<f64>() / 10.0;
    let last10: f64 = r.rows.iter().rev().take(10).map(|x| x.mean_return).sum::<f64>() / 10.0;
    let fd_first: f64 = r.rows.iter().take(10).map(|x| x.mean_final_distance).sum::<f64>() / 10.0;
    let fd_last: f64 = r.rows.iter().rev().take(10).map(|x| x.mean_final_distance).sum::<f64>() / 10.0;
    println!("first10 ret {first10:.3} last10 ret {last10:.3} | final dist {fd_first:.4} -> {fd_last:.4} (ratio {:.3})", fd_last/fd_first);
    let accepted = r.update_reports.iter().filter(|u| u.accepted).count();
    println!("updates accepted {}/{}", accepted, r.update_reports.len());
}
