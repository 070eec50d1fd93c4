use phasepack::oracle::{minimize_matrix, MatrixProblem};

fn main() {
    for (dim, mu) in [(8usize, 1.0f64), (12, 2.0 / 3.0), (12, 0.5)] {
        let problem = MatrixProblem::new(dim, mu).unwrap();
        let t0 = std::time::Instant::now();
        let sol = minimize_matrix(&problem, 5).unwrap();
        println!(
            "dim={dim} mu={mu:.4}: obj={:.8} offdiag={:.3e} rho00={:.6} elapsed={:?}",
            sol.objective,
            sol.off_diagonal_norm,
            sol.rho[(0, 0)],
            t0.elapsed()
        );
    }
}
