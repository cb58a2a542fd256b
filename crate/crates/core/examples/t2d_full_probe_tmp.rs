use torsion_pinn::geometry::shapes;
use torsion_pinn::torsion2d::*;

fn main() {
    let shape = std::env::args().nth(1).unwrap();
    let seed: u64 = std::env::args().nth(2).unwrap().parse().unwrap();
    let problem = Torsion2DProblem::new(shapes::by_name(&shape).unwrap());
    let config = CaseConfig::new(seed);
    let t0 = std::time::Instant::now();
    let report = run_case(&problem, &config).unwrap();
    let last = report.train.final_loss().unwrap();
    println!(
        "{shape} seed={seed}: J={:.6e} ref={:.6e} rel={:.5} L_r={:.2e} L_b={:.2e} ({:.0}s)",
        report.j_pinn, report.j_reference, report.rel_error, last.loss_r, last.loss_b,
        t0.elapsed().as_secs_f64()
    );
}
