use reacherlab::xlab::{self, config::*, analysis::*};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.agent = AgentKind::Random;
    cfg.action_cycle_ms = 8;
    cfg.probe_ticks = Some(50_000);
    cfg.seed = 0;
    let t0 = std::time::Instant::now();
    let result = xlab::runner::execute(&cfg).unwrap();
    let probe = result.probe.as_ref().unwrap();
    println!("probe took {:?}, actions {}, ticks {}", t0.elapsed(), probe.actions.len(), probe.qdd.len());
    for sig in ["qdd", "torque", "current"] {
        let mut grams = Vec::new();
        for j in 0..probe.n_act {
            let (x, y) = probe.aligned(sig, j);
            let g = cross_correlation(&x, &y, 10).unwrap();
            let (lag, v) = g.argmax().unwrap();
            println!("  {sig} joint {j}: argmax lag {lag} (corr {v:.3})");
            grams.push(g);
        }
        let avg = average_correlograms(&grams);
        let (lag, v) = avg.argmax().unwrap();
        println!("  {sig} averaged: argmax lag {lag} (corr {v:.3})");
        let vals: Vec<String> = avg.lags.iter().zip(&avg.values).filter(|(l, _)| **l >= 0 && **l <= 6)
            .map(|(l, v)| format!("{l}:{:.3}", v.unwrap_or(f64::NAN))).collect();
        println!("    {}", vals.join(" "));
    }
}
