//! Independent numerical verification of the closed-form results.
//!
//! Nothing in this module uses the analytic weight profile; the closed form
//! is recovered, not assumed. Two minimizers are provided:
//!
//! * [`minimize_shell`] searches over nonnegative per-shell weights under the
//!   trace and purity constraints, for any dimension;
//! * [`minimize_matrix`] searches over full symmetric positive-semidefinite
//!   trace-one matrices in the one-dimensional oscillator basis, so the
//!   diagonality of the optimum is itself put under test.
//!
//! [`random_mixture_audit`] samples random mixtures and checks that none of
//! them falls below the strict boundary.
//!
//! All randomized procedures derive their streams from an explicit 64-bit
//! seed and reduce restarts deterministically, so results are reproducible
//! regardless of the thread schedule.

use crate::bounds::strict_bound;
use crate::error::{Error, Result};
use crate::kahan_sum;
use crate::shells::{mode_count, shell_degeneracies};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const RESTARTS: usize = 16;
const FEASIBILITY_TOL: f64 = 1e-8;

/// SplitMix64 step; used to derive independent per-restart streams.
fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; kept local so the stream layout never depends on an
    // external sampler implementation.
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > 0.0 {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Shell-weight minimization problem: dimension, purity target
/// `mu = 1 / N_eff`, and the shell truncation `M`.
#[derive(Debug, Clone, Copy)]
pub struct ShellProblem {
    pub s: u32,
    pub mu: f64,
    /// Number of tabulated shells; must exceed the expected support.
    pub shells: usize,
}

/// Result of [`minimize_shell`].
#[derive(Debug, Clone)]
pub struct ShellSolution {
    /// Per-mode weight of each shell, feasible to within 1e-8.
    pub weights: Vec<f64>,
    /// Minimized spread product `dx dq`.
    pub objective: f64,
}

/// Projection onto the weighted simplex `{w >= 0, sum g_m w_m = 1}`.
///
/// Exact active-set solve: the solution is `w_m = max(0, v_m - theta g_m)`
/// and the correct `theta` is found by scanning the breakpoints `v_m / g_m`
/// in decreasing order.
fn project_weighted_simplex(v: &[f64], g: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        (v[b] / g[b])
            .partial_cmp(&(v[a] / g[a]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut acc_gv = 0.0;
    let mut acc_g2 = 0.0;
    let mut theta = 0.0;
    for (rank, &m) in order.iter().enumerate() {
        acc_gv += g[m] * v[m];
        acc_g2 += g[m] * g[m];
        let candidate = (acc_gv - 1.0) / acc_g2;
        if v[m] - candidate * g[m] > 0.0 {
            theta = candidate;
        } else if rank > 0 {
            break;
        } else {
            theta = candidate;
            break;
        }
    }
    v.iter()
        .zip(g)
        .map(|(&vm, &gm)| (vm - theta * gm).max(0.0))
        .collect()
}

/// Restore `sum g w = 1` and `sum g w^2 = mu` exactly while keeping the
/// profile shape: affine rescale on the support, clamping any weight driven
/// negative and repeating. Returns false only if `mu` is unreachable.
fn restore_feasibility(w: &mut [f64], g: &[f64], mu: f64) -> bool {
    let m_total = w.len();
    for round in 0..(2 * m_total + 4) {
        for x in w.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let support: Vec<usize> = (0..m_total).filter(|&m| w[m] > 0.0).collect();
        if support.is_empty() {
            w[0] = 1.0;
            continue;
        }
        let g_sum: f64 = support.iter().map(|&m| g[m]).sum();
        let t1: f64 = support.iter().map(|&m| g[m] * w[m]).sum();
        let t2: f64 = support.iter().map(|&m| g[m] * w[m] * w[m]).sum();
        let need = mu - 1.0 / g_sum;

        if need < -1e-14 {
            // The support holds too few modes for a purity this low.
            if support.len() == m_total {
                return false;
            }
            let floor = 1e-6 / g_sum;
            for x in w.iter_mut() {
                if *x <= 0.0 {
                    *x = floor;
                }
            }
            continue;
        }
        if need <= 1e-15 {
            for &m in &support {
                w[m] = 1.0 / g_sum;
            }
            return true;
        }
        let variance = t2 - t1 * t1 / g_sum;
        if variance <= 1e-30 {
            // Uniform profile but a non-uniform target: tilt toward the low
            // shells so the affine rescale has a direction to work with.
            let mean_index: f64 =
                support.iter().map(|&m| g[m] * m as f64).sum::<f64>() / g_sum;
            for &m in &support {
                w[m] *= 1.0 + 0.05 * (mean_index - m as f64) / (m_total as f64);
            }
            continue;
        }
        let a = (need / variance).sqrt();
        let b = (1.0 - a * t1) / g_sum;
        let mut clamped = false;
        for &m in &support {
            let updated = a * w[m] + b;
            if updated < 0.0 {
                clamped = true;
            }
            w[m] = updated.max(0.0);
        }
        if !clamped {
            return true;
        }
        let _ = round;
    }
    false
}

fn shell_objective(w: &[f64], g: &[f64], cost: &[f64]) -> f64 {
    kahan_sum((0..w.len()).map(|m| g[m] * w[m] * cost[m]))
}

fn shell_purity(w: &[f64], g: &[f64]) -> f64 {
    kahan_sum((0..w.len()).map(|m| g[m] * w[m] * w[m]))
}

fn minimize_shell_once(
    g: &[f64],
    cost: &[f64],
    mu: f64,
    seed: u64,
) -> (Vec<f64>, f64) {
    let m_total = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Dirichlet start over shell probabilities.
    let mut probs: Vec<f64> = (0..m_total)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in probs.iter_mut() {
            *p /= total;
        }
    } else {
        probs.fill(1.0 / m_total as f64);
    }
    let mut w: Vec<f64> = probs.iter().zip(g).map(|(p, gm)| p / gm).collect();

    for &penalty in &[1e2, 1e3, 1e4, 1e6, 1e8] {
        let mut step = 1e-2;
        let mut value = {
            let r = shell_purity(&w, g) - mu;
            shell_objective(&w, g, cost) + penalty * r * r
        };
        for _ in 0..2000 {
            let residual = shell_purity(&w, g) - mu;
            let grad: Vec<f64> = (0..m_total)
                .map(|m| g[m] * cost[m] + 4.0 * penalty * residual * g[m] * w[m])
                .collect();
            let mut accepted = false;
            for _ in 0..45 {
                let trial: Vec<f64> = (0..m_total).map(|m| w[m] - step * grad[m]).collect();
                let candidate = project_weighted_simplex(&trial, g);
                let r = shell_purity(&candidate, g) - mu;
                let candidate_value = shell_objective(&candidate, g, cost) + penalty * r * r;
                if candidate_value < value {
                    let moved = candidate
                        .iter()
                        .zip(&w)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    w = candidate;
                    value = candidate_value;
                    step *= 1.5;
                    accepted = true;
                    if moved < 1e-14 {
                        accepted = false; // converged for this stage
                    }
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    break;
                }
            }
            if !accepted {
                break;
            }
        }
    }

    restore_feasibility(&mut w, g, mu);
    let objective = shell_objective(&w, g, cost);
    (w, objective)
}

/// Minimize the spread product `dx dq = sum_m g_m w_m (m/s + 1/2)` over
/// nonnegative shell weights with `sum g w = 1` and `sum g w^2 = mu`.
///
/// Penalty formulation with projected-gradient descent, a rising penalty
/// ladder, an exact feasibility polish, and the best of 16 seeded restarts.
/// The analytic weight profile is never consulted.
pub fn minimize_shell(problem: &ShellProblem, seed: u64) -> Result<ShellSolution> {
    if problem.s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    if problem.shells == 0 {
        return Err(Error::Domain("at least one shell is required".into()));
    }
    if !(problem.mu > 0.0) || problem.mu > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "purity target must lie in (0, 1], got {}",
            problem.mu
        )));
    }
    let modes = mode_count(problem.s, problem.shells as u32)? as f64;
    if problem.mu < 1.0 / modes - 1e-12 {
        return Err(Error::Domain(format!(
            "purity target {} is below 1/{modes}, unreachable with {} shells",
            problem.mu, problem.shells
        )));
    }

    let g: Vec<f64> = shell_degeneracies(problem.s, problem.shells)?
        .into_iter()
        .map(|v| v as f64)
        .collect();
    let cost: Vec<f64> = (0..problem.shells)
        .map(|m| m as f64 / problem.s as f64 + 0.5)
        .collect();

    let runs: Vec<(Vec<f64>, f64)> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| minimize_shell_once(&g, &cost, problem.mu, derive_seed(seed, r as u64)))
        .collect();
    let (weights, objective) = runs
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least one restart");

    let trace_residual = (kahan_sum((0..g.len()).map(|m| g[m] * weights[m])) - 1.0).abs();
    let purity_residual = (shell_purity(&weights, &g) - problem.mu).abs();
    if trace_residual > FEASIBILITY_TOL || purity_residual > FEASIBILITY_TOL {
        return Err(Error::Convergence {
            trace_residual,
            purity_residual,
        });
    }
    if weights[problem.shells - 1] > 1e-9 {
        return Err(Error::Truncation {
            shell: problem.shells - 1,
        });
    }

    Ok(ShellSolution { weights, objective })
}

/// Full-matrix minimization problem in the one-dimensional oscillator basis.
#[derive(Debug, Clone)]
pub struct MatrixProblem {
    pub dim: usize,
    pub mu: f64,
    /// Position-squared operator at scale 1.
    pub x2_op: DMatrix<f64>,
    /// Momentum-squared operator at scale 1.
    pub p2_op: DMatrix<f64>,
}

/// Matrix elements of `X^2` in the oscillator basis at `k = 1`:
/// diagonal `(2n + 1)/2`, second off-diagonal `sqrt((n+1)(n+2))/2`.
pub fn position_squared_matrix(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = (2.0 * n as f64 + 1.0) / 2.0;
        if n + 2 < dim {
            let v = (((n + 1) * (n + 2)) as f64).sqrt() / 2.0;
            m[(n, n + 2)] = v;
            m[(n + 2, n)] = v;
        }
    }
    m
}

/// `P^2` matches `X^2` on the diagonal with the off-diagonal negated.
pub fn momentum_squared_matrix(dim: usize) -> DMatrix<f64> {
    let mut m = position_squared_matrix(dim);
    for n in 0..dim {
        if n + 2 < dim {
            m[(n, n + 2)] = -m[(n, n + 2)];
            m[(n + 2, n)] = -m[(n + 2, n)];
        }
    }
    m
}

impl MatrixProblem {
    pub fn new(dim: usize, mu: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(
                "matrix truncation must be at least 2".into(),
            ));
        }
        if !(mu > 0.0) || mu > 1.0 + 1e-12 || mu < 1.0 / dim as f64 - 1e-12 {
            return Err(Error::Domain(format!(
                "purity target must lie in [1/{dim}, 1], got {mu}"
            )));
        }
        Ok(Self {
            dim,
            mu,
            x2_op: position_squared_matrix(dim),
            p2_op: momentum_squared_matrix(dim),
        })
    }
}

/// Result of [`minimize_matrix`].
#[derive(Debug, Clone)]
pub struct MatrixSolution {
    /// Minimizing density matrix: symmetric, positive semidefinite,
    /// unit trace, purity `mu` (within solver tolerance).
    pub rho: DMatrix<f64>,
    /// Minimized spread product `dx dq = sqrt(tr(rho X^2) tr(rho P^2))`.
    pub objective: f64,
    /// Frobenius norm of the off-diagonal part of `rho`.
    pub off_diagonal_norm: f64,
}

struct MatrixRun {
    rho: DMatrix<f64>,
    objective: f64,
    /// Balanced functional `tr(rho (X^2 + P^2))`; strictly ranks candidates
    /// that the scale-degenerate product cannot separate.
    energy: f64,
}

/// One gradient-descent stage on the penalized balanced functional
/// `tr(rho (X^2 + P^2))`.
///
/// The spread product alone is flat along squeeze directions (rescaling `x`
/// while keeping `x q` fixed), so its minimizer is only determined up to the
/// oscillator scale. The balanced functional removes that degeneracy: its
/// constrained minimum is attained exactly where the two spreads are equal,
/// which is also where the product is minimal, and there it equals twice the
/// product. With `tangent` set, the gradient component along the purity
/// constraint is projected out; combined with periodic exact feasibility
/// restoration this sidesteps the stiffness a large penalty would otherwise
/// impose on the step size.
fn matrix_descent_stage(
    problem: &MatrixProblem,
    energy_op: &DMatrix<f64>,
    factor: &mut DMatrix<f64>,
    penalty: f64,
    iterations: usize,
    tangent: bool,
) {
    let evaluate = |g_mat: &DMatrix<f64>| -> f64 {
        let s_mat = g_mat * g_mat.transpose();
        let t = s_mat.trace();
        let energy = s_mat.dot(energy_op) / t;
        let purity = s_mat.dot(&s_mat) / (t * t);
        energy + penalty * (purity - problem.mu).powi(2)
    };

    let mut step = 1e-3;
    let mut value = evaluate(factor);
    for _ in 0..iterations {
        let s_mat = &*factor * factor.transpose();
        let t = s_mat.trace();
        let energy = s_mat.dot(energy_op) / t;
        let purity = s_mat.dot(&s_mat) / (t * t);

        let grad_energy = (energy_op * &*factor - &*factor * energy) * (2.0 / t);
        let grad_purity = (&s_mat * &*factor - &*factor * (purity * t)) * (4.0 / (t * t));
        let mut grad = grad_energy + &grad_purity * (2.0 * penalty * (purity - problem.mu));
        if tangent {
            let stiffness = grad_purity.dot(&grad_purity);
            if stiffness > 1e-30 {
                let along = grad.dot(&grad_purity) / stiffness;
                grad -= &grad_purity * along;
            }
        }

        if grad.norm() < 1e-12 * (1.0 + value.abs()) {
            break;
        }
        let mut accepted = false;
        for _ in 0..50 {
            let candidate = &*factor - &grad * step;
            let candidate_value = evaluate(&candidate);
            if candidate_value < value {
                *factor = candidate;
                value = candidate_value;
                step *= 1.4;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
}

/// Eigen-decompose the current iterate, restore the trace and purity
/// constraints exactly on the eigenvalues, and return the feasible density
/// matrix together with a factor reproducing it.
///
/// A small eigenvalue floor keeps the factor full rank so later descent
/// stages can regrow support that the polish collapsed.
fn polish_to_feasible(
    problem: &MatrixProblem,
    factor: &DMatrix<f64>,
    floor: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = problem.dim;
    let s_mat = factor * factor.transpose();
    let rho = &s_mat / s_mat.trace();
    let eigen = nalgebra::SymmetricEigen::new(rho);
    let mut weights: Vec<f64> = eigen
        .eigenvalues
        .iter()
        .map(|&v| v.max(floor))
        .collect();
    let ones = vec![1.0; dim];
    restore_feasibility(&mut weights, &ones, problem.mu);
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(weights.clone()));
    let rho = &eigen.eigenvectors * lambda * eigen.eigenvectors.transpose();
    let rho = (&rho + rho.transpose()) * 0.5;
    let sqrt_lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        weights.iter().map(|&w| w.sqrt()).collect(),
    ));
    let new_factor = &eigen.eigenvectors * sqrt_lambda;
    (rho, new_factor)
}

/// `R rho R^T` for a rotation by `theta` in the `(i, j)` coordinate plane.
fn rotate_plane(rho: &DMatrix<f64>, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut out = rho.clone();
    let (c, s) = (theta.cos(), theta.sin());
    let n = rho.nrows();
    for col in 0..n {
        let a = out[(i, col)];
        let b = out[(j, col)];
        out[(i, col)] = c * a - s * b;
        out[(j, col)] = s * a + c * b;
    }
    for row in 0..n {
        let a = out[(row, i)];
        let b = out[(row, j)];
        out[(row, i)] = c * a - s * b;
        out[(row, j)] = s * a + c * b;
    }
    out
}

/// Jacobi-style sweeps over coordinate planes: each step minimizes the
/// balanced functional over a single rotation angle. Rotations preserve the
/// spectrum, trace and purity exactly, so the iterate stays feasible while
/// the directions the gradient feels only weakly are optimized directly.
fn rotation_sweeps(
    problem: &MatrixProblem,
    energy_op: &DMatrix<f64>,
    mut rho: DMatrix<f64>,
    sweeps: usize,
) -> DMatrix<f64> {
    let dim = problem.dim;
    let product = |m: &DMatrix<f64>| m.dot(energy_op);
    let mut current = product(&rho);
    for _ in 0..sweeps {
        let mut improved = false;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let eval = |theta: f64| product(&rotate_plane(&rho, i, j, theta));
                // Coarse scan; the objective is a low-order trig polynomial
                // in 2 theta, so this cannot miss the basin.
                let mut best_theta = 0.0;
                let mut best_value = current;
                let scan = 48;
                for t in 0..scan {
                    let theta = -std::f64::consts::FRAC_PI_2
                        + std::f64::consts::PI * (t as f64 + 0.5) / scan as f64;
                    let value = eval(theta);
                    if value < best_value {
                        best_value = value;
                        best_theta = theta;
                    }
                }
                // Golden-section refinement around the best sample.
                let width = std::f64::consts::PI / scan as f64;
                let (mut lo, mut hi) = (best_theta - width, best_theta + width);
                let phi = 0.5 * (5f64.sqrt() - 1.0);
                let mut m1 = hi - phi * (hi - lo);
                let mut m2 = lo + phi * (hi - lo);
                let mut v1 = eval(m1);
                let mut v2 = eval(m2);
                for _ in 0..60 {
                    if v1 <= v2 {
                        hi = m2;
                        m2 = m1;
                        v2 = v1;
                        m1 = hi - phi * (hi - lo);
                        v1 = eval(m1);
                    } else {
                        lo = m1;
                        m1 = m2;
                        v1 = v2;
                        m2 = lo + phi * (hi - lo);
                        v2 = eval(m2);
                    }
                }
                let theta = 0.5 * (lo + hi);
                let value = eval(theta);
                if value < current * (1.0 - 1e-15) {
                    rho = rotate_plane(&rho, i, j, theta);
                    current = value;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    rho
}

fn factor_of(rho: &DMatrix<f64>) -> DMatrix<f64> {
    let eigen = nalgebra::SymmetricEigen::new(rho.clone());
    let sqrt_lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        eigen.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()).collect(),
    ));
    &eigen.eigenvectors * sqrt_lambda
}

fn minimize_matrix_once(problem: &MatrixProblem, seed: u64) -> MatrixRun {
    let dim = problem.dim;
    let energy_op = &problem.x2_op + &problem.p2_op;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factor = DMatrix::from_fn(dim, dim, |_, _| 0.35 * standard_normal(&mut rng));
    for i in 0..dim {
        factor[(i, i)] += 1.0;
    }

    // Rising penalty ladder gets close to the constrained optimum.
    for &penalty in &[1e2, 1e4, 1e6] {
        matrix_descent_stage(problem, &energy_op, &mut factor, penalty, 1500, false);
    }
    // Refinement: exact feasibility restoration, rotation sweeps for the
    // directions descent feels only weakly, tangent-projected descent for
    // the spectrum directions.
    for _ in 0..4 {
        let (rho, _) = polish_to_feasible(problem, &factor, 1e-8);
        let rho = rotation_sweeps(problem, &energy_op, rho, 2);
        factor = factor_of(&rho);
        matrix_descent_stage(problem, &energy_op, &mut factor, 1e6, 400, true);
    }

    let (rho, _) = polish_to_feasible(problem, &factor, 0.0);
    let rho = rotation_sweeps(problem, &energy_op, rho, 4);
    let f1 = rho.dot(&problem.x2_op);
    let f2 = rho.dot(&problem.p2_op);
    MatrixRun {
        objective: (f1 * f2).sqrt(),
        energy: rho.dot(&energy_op),
        rho,
    }
}

/// Minimize `dx dq = sqrt(tr(rho X^2) tr(rho P^2))` over symmetric PSD
/// trace-one matrices with purity `mu`, without assuming anything about the
/// structure of the minimizer.
///
/// The density matrix is parameterized as `G G^T / tr(G G^T)`, which is PSD
/// and trace-one by construction, and the purity constraint is penalized on
/// a rising ladder. The descent itself runs on the balanced functional
/// `tr(rho (X^2 + P^2))`: the product is invariant under rescaling `x`, so
/// its minimizers form a squeeze family, and the balanced functional selects
/// the member whose spreads are equal, where it coincides with twice the
/// product. The best of 16 seeded restarts is returned together with the
/// off-diagonal Frobenius norm of the minimizer.
pub fn minimize_matrix(problem: &MatrixProblem, seed: u64) -> Result<MatrixSolution> {
    MatrixProblem::new(problem.dim, problem.mu)?; // revalidate bounds

    let runs: Vec<MatrixRun> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| minimize_matrix_once(problem, derive_seed(seed, r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one restart");

    let trace_residual = (best.rho.trace() - 1.0).abs();
    let purity_residual = (best.rho.dot(&best.rho) - problem.mu).abs();
    if trace_residual > 1e-6 || purity_residual > 1e-6 {
        return Err(Error::Convergence {
            trace_residual,
            purity_residual,
        });
    }

    let mut off = 0.0;
    for i in 0..problem.dim {
        for j in 0..problem.dim {
            if i != j {
                off += best.rho[(i, j)] * best.rho[(i, j)];
            }
        }
    }

    Ok(MatrixSolution {
        objective: best.objective,
        off_diagonal_norm: off.sqrt(),
        rho: best.rho,
    })
}

/// One sampled mixture from [`random_mixture_audit`].
#[derive(Debug, Clone)]
pub struct AuditSample {
    /// Per-mode shell weights of the sample.
    pub weights: Vec<f64>,
    pub n_eff: f64,
    /// Spread product of the sample.
    pub product: f64,
    /// `product - strict_bound(s, n_eff)`; negative would violate the bound.
    pub margin: f64,
}

/// Outcome of a randomized region audit.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub samples: usize,
    /// Samples whose margin fell below `-1e-10`. Empty on a passing run.
    pub violations: Vec<AuditSample>,
    pub min_margin: f64,
    /// The sample attaining the minimum margin.
    pub min_margin_sample: AuditSample,
}

/// Sample `count` random normalized shell mixtures and check each against
/// the strict boundary at its own `N_eff`.
pub fn random_mixture_audit(s: u32, count: usize, seed: u64) -> Result<AuditReport> {
    if s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    if count == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let max_shells = 10usize;
    let g: Vec<f64> = shell_degeneracies(s, max_shells)?
        .into_iter()
        .map(|v| v as f64)
        .collect();

    let samples: Vec<Result<AuditSample>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let shells = rng.random_range(1..=max_shells);
            let mut probs: Vec<f64> = (0..shells)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = probs.iter().sum();
            if total > 0.0 {
                for p in probs.iter_mut() {
                    *p /= total;
                }
            } else {
                probs.fill(1.0 / shells as f64);
            }
            let weights: Vec<f64> = probs.iter().zip(&g).map(|(p, gm)| p / gm).collect();
            let product: f64 = probs
                .iter()
                .enumerate()
                .map(|(m, p)| p * (m as f64 + s as f64 / 2.0) / s as f64)
                .sum();
            let purity: f64 = weights
                .iter()
                .zip(&g)
                .map(|(w, gm)| w * w * gm)
                .sum();
            let n_eff = (1.0 / purity).max(1.0);
            let bound = strict_bound(s, n_eff)?.bound;
            Ok(AuditSample {
                weights,
                n_eff,
                product,
                margin: product - bound,
            })
        })
        .collect();

    let mut min_margin = f64::INFINITY;
    let mut min_sample = None;
    let mut violations = Vec::new();
    for sample in samples {
        let sample = sample?;
        if sample.margin < min_margin {
            min_margin = sample.margin;
            min_sample = Some(sample.clone());
        }
        if sample.margin < -1e-10 {
            violations.push(sample);
        }
    }

    Ok(AuditReport {
        samples: count,
        violations,
        min_margin,
        min_margin_sample: min_sample.expect("count >= 1"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_is_feasible_and_idempotent() {
        let g = [1.0, 2.0, 3.0];
        let v = [0.9, -0.2, 0.4];
        let w = project_weighted_simplex(&v, &g);
        let trace: f64 = w.iter().zip(&g).map(|(w, g)| w * g).sum();
        assert!((trace - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.0));
        let again = project_weighted_simplex(&w, &g);
        for (a, b) in w.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn feasibility_polish_hits_both_constraints() {
        let g = [1.0, 1.0, 1.0, 1.0];
        let mut w = vec![0.5, 0.3, 0.15, 0.05];
        assert!(restore_feasibility(&mut w, &g, 0.4));
        let trace: f64 = w.iter().sum();
        let purity: f64 = w.iter().map(|x| x * x).sum();
        assert!((trace - 1.0).abs() < 1e-12);
        assert!((purity - 0.4).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn pure_state_shell_minimization() {
        let problem = ShellProblem {
            s: 1,
            mu: 1.0,
            shells: 6,
        };
        let sol = minimize_shell(&problem, 7).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-6, "{}", sol.objective);
        assert!((sol.weights[0] - 1.0).abs() < 1e-6);
        assert!(sol.weights[1..].iter().all(|&w| w < 1e-6));
    }

    #[test]
    fn shell_minimizer_recovers_the_two_shell_golden() {
        let problem = ShellProblem {
            s: 1,
            mu: 2.0 / 3.0,
            shells: 8,
        };
        let sol = minimize_shell(&problem, 42).unwrap();
        let golden = 1.0 - 1.0 / (2.0 * 3f64.sqrt());
        assert!(
            (sol.objective - golden).abs() / golden < 1e-5,
            "objective {} vs {}",
            sol.objective,
            golden
        );
        assert!((sol.weights[0] - 0.788_675_134_594_813).abs() < 1e-4);
        assert!((sol.weights[1] - 0.211_324_865_405_187).abs() < 1e-4);
    }

    #[test]
    fn shell_minimizer_domain_errors() {
        let infeasible = ShellProblem {
            s: 1,
            mu: 0.2,
            shells: 3,
        };
        assert!(matches!(
            minimize_shell(&infeasible, 1),
            Err(Error::Domain(_))
        ));
        let too_pure = ShellProblem {
            s: 1,
            mu: 1.5,
            shells: 3,
        };
        assert!(matches!(minimize_shell(&too_pure, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn shell_minimizer_reports_truncation_pressure() {
        // mu = 1/N(M) forces the uniform mixture over every tabulated shell.
        let problem = ShellProblem {
            s: 1,
            mu: 1.0 / 3.0,
            shells: 3,
        };
        assert!(matches!(
            minimize_shell(&problem, 3),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn shell_minimizer_is_reproducible() {
        let problem = ShellProblem {
            s: 2,
            mu: 1.0 / 3.0,
            shells: 8,
        };
        let a = minimize_shell(&problem, 11).unwrap();
        let b = minimize_shell(&problem, 11).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn operator_matrices_match_the_stated_elements() {
        let x2 = position_squared_matrix(6);
        let p2 = momentum_squared_matrix(6);
        for n in 0..6 {
            assert!((x2[(n, n)] - (2.0 * n as f64 + 1.0) / 2.0).abs() < 1e-15);
            assert!((p2[(n, n)] - x2[(n, n)]).abs() < 1e-15);
        }
        assert!((x2[(0, 2)] - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((p2[(0, 2)] + 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_minimizer_pure_state() {
        let problem = MatrixProblem::new(8, 1.0).unwrap();
        let sol = minimize_matrix(&problem, 5).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-4, "{}", sol.objective);
        assert!(sol.off_diagonal_norm < 1e-5, "{}", sol.off_diagonal_norm);
        assert!((sol.rho[(0, 0)] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn matrix_problem_validation() {
        assert!(MatrixProblem::new(1, 0.5).is_err());
        assert!(MatrixProblem::new(8, 0.05).is_err());
        assert!(MatrixProblem::new(8, 1.5).is_err());
    }

    #[test]
    fn audit_single_degenerate_sample() {
        // Any single-shell draw is the pure ground state: margin exactly 0.
        let report = random_mixture_audit(1, 64, 123).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.min_margin >= -1e-10);
    }

    #[test]
    fn audit_rejects_bad_arguments() {
        assert!(random_mixture_audit(0, 5, 1).is_err());
        assert!(random_mixture_audit(1, 0, 1).is_err());
    }
}
