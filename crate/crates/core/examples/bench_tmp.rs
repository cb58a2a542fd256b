use std::time::Instant;
use torsion_pinn::network::{init_params, loss_and_grad, GroupId, JetBatch, NetworkSpec};

fn bench(label: &str, input_dim: usize, hidden: Vec<usize>, n_pts: usize, d: usize, iters: usize) {
    let spec = NetworkSpec::new(input_dim, hidden).unwrap();
    let params = init_params(&spec, 1);
    let seeds: Vec<usize> = (0..d).collect();
    let mut batch = JetBatch::new(input_dim, seeds);
    let cd1 = vec![0.0; d];
    let cd2 = vec![1.0; d];
    for p in 0..n_pts {
        let x: Vec<f64> = (0..input_dim).map(|i| ((p * 31 + i * 7) % 100) as f64 / 100.0 - 0.5).collect();
        batch.push(&x, 0.0, &cd1, &cd2, 2.0, if p % 10 == 0 { GroupId::Boundary } else { GroupId::Residual });
    }
    batch.set_group_weights(1e-3, 1.0);
    // warmup
    let _ = loss_and_grad(&spec, &params, &batch);
    let t0 = Instant::now();
    for _ in 0..iters {
        let (stats, grad) = loss_and_grad(&spec, &params, &batch);
        std::hint::black_box((stats, grad));
    }
    let dt = t0.elapsed().as_secs_f64() / iters as f64;
    println!("{label}: {:.1} ms/epoch -> {:.1} s per 10k epochs", dt * 1e3, dt * 1e4);
}

fn main() {
    bench("2D torsion (3x64, 1700 pts, d=2)", 2, vec![64, 64, 64], 1700, 2, 20);
    bench("1D VS (2x32, 102 pts, d=1)", 1, vec![32, 32], 102, 1, 200);
    bench("parametric (4x64, 102000 pts, d=1)", 4, vec![64, 64, 64, 64], 102000, 1, 3);
}
