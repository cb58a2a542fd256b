use torsion_pinn::parametric1d::*;

fn main() {
    let epochs: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let lr: f64 = std::env::args().nth(2).unwrap().parse().unwrap();
    let seed: u64 = std::env::args().nth(3).unwrap().parse().unwrap();
    let problem = ParametricProblem::new().unwrap();
    let mut config = ParametricTrainConfig::new(seed);
    config.epochs = epochs;
    config.learning_rate = lr;
    config.oracle_stride = 100;
    let t0 = std::time::Instant::now();
    let run = train_parametric(&problem, &config).unwrap();
    let errs: Vec<String> = run.train.records.iter()
        .filter_map(|r| r.rel_l2.map(|e| format!("{}:{:.2e}", r.epoch, e)))
        .collect();
    println!("epochs={epochs} lr={lr} seed={seed}: final rel={:.3e} ({:.0}s)", run.rel_l2, t0.elapsed().as_secs_f64());
    println!("  trajectory: {}", errs.join(" "));
}
