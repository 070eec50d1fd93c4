//! Runnable invariant suites behind the CLI `verify` command.
//!
//! Each suite re-derives expectations by an independent route (dynamic-
//! programming counts, brute-force minimizers, quadrature) and compares them
//! against the closed-form implementations, returning one [`Check`] per
//! property.

use crate::bounds::strict_bound;
use crate::oracle::{self, MatrixProblem, ShellProblem};
use crate::oscillator::{
    build_density_grid, orthonormality_defect, quadrature_moments, OscillatorBasis, UniformGrid,
};
use crate::shells::{degeneracy, log_gamma, mode_count};
use crate::spectrum::{admissible_layers, build_spectrum, select_layer, spectrum_moments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Shells,
    Spectrum,
    Oracle,
    Quadrature,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(value: &str) -> Result<Self, Self::Err> {
        match value {
            "shells" => Ok(Self::Shells),
            "spectrum" => Ok(Self::Spectrum),
            "oracle" => Ok(Self::Oracle),
            "quadrature" => Ok(Self::Quadrature),
            "all" => Ok(Self::All),
            other => Err(format!(
                "unknown suite '{other}' (expected shells|spectrum|oracle|quadrature|all)"
            )),
        }
    }
}

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl Check {
    fn new(name: &str, passed: bool, details: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            details,
        }
    }
}

/// Run a suite and return its checks. `seed` drives every randomized check.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Shells => shells_suite(),
        Suite::Spectrum => spectrum_suite(seed),
        Suite::Oracle => oracle_suite(seed),
        Suite::Quadrature => quadrature_suite(),
        Suite::All => {
            let mut checks = shells_suite();
            checks.extend(spectrum_suite(seed));
            checks.extend(oracle_suite(seed));
            checks.extend(quadrature_suite());
            checks
        }
    }
}

/// Mode count by dynamic programming over dimensions: no factorials, only
/// the additive shell recurrence.
fn dp_mode_count(s: usize, layers: usize) -> u64 {
    let mut per_shell = vec![0u64; layers];
    per_shell[0] = 1;
    for _ in 0..s {
        for m in 1..layers {
            per_shell[m] += per_shell[m - 1];
        }
    }
    per_shell.iter().sum()
}

fn shells_suite() -> Vec<Check> {
    let mut checks = Vec::new();

    let mut worst: Option<(u32, u32, u64, u64)> = None;
    'outer: for s in 1..=10u32 {
        for layers in 1..=40u32 {
            let closed = mode_count(s, layers).unwrap();
            let brute = dp_mode_count(s as usize, layers as usize);
            if closed != brute {
                worst = Some((s, layers, closed, brute));
                break 'outer;
            }
        }
    }
    checks.push(Check::new(
        "shells/mode-count-brute-force",
        worst.is_none(),
        match worst {
            None => "closed form equals the dimension-recurrence count for s in 1..=10, L in 1..=40".into(),
            Some((s, l, c, b)) => format!("mismatch at s={s}, L={l}: closed {c} vs brute {b}"),
        },
    ));

    let mut identity_ok = true;
    let mut detail = String::new();
    for s in 1..=10u32 {
        for layers in 1..=40u32 {
            let nn = mode_count(s, layers).unwrap() as u128;
            let g = degeneracy(s, layers).unwrap() as u128;
            if (s as u128) * nn != (layers as u128) * g {
                identity_ok = false;
                detail = format!("s N(L) != L g_s(L) at s={s}, L={layers}");
            }
        }
    }
    checks.push(Check::new(
        "shells/cumulative-identity",
        identity_ok,
        if identity_ok {
            "s N(L) = L g_s(L) holds exactly on the tabulated range".into()
        } else {
            detail
        },
    ));

    let mut factorial = 1.0f64;
    let mut max_rel = 0.0f64;
    for n in 1..=20u32 {
        factorial *= n as f64;
        let rel = (log_gamma(n as f64 + 1.0).unwrap().exp() - factorial).abs() / factorial;
        max_rel = max_rel.max(rel);
    }
    checks.push(Check::new(
        "shells/log-gamma-factorials",
        max_rel < 1e-12,
        format!("max relative error vs exact factorials: {max_rel:.3e}"),
    ));

    checks
}

fn spectrum_suite(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();

    let mut worst_trace = 0.0f64;
    let mut worst_purity = 0.0f64;
    let mut worst_product_gap = 0.0f64;
    let mut worst_recovered = 0.0f64;
    let mut shape_ok = true;
    let mut k_invariance = 0.0f64;
    for s in [1u32, 2, 3] {
        for i in 0..100 {
            let n_eff = (1.0f64.ln() + (200.0f64.ln()) * i as f64 / 99.0).exp();
            let spec = build_spectrum(s, n_eff, 1.0).unwrap();
            let g = spec.shell_degeneracies();
            let w = spec.shell_weights();
            let trace: f64 = w.iter().zip(g).map(|(w, g)| w * g).sum();
            let purity: f64 = w.iter().zip(g).map(|(w, g)| w * w * g).sum();
            worst_trace = worst_trace.max((trace - 1.0).abs());
            worst_purity = worst_purity.max((purity - 1.0 / n_eff).abs());
            for m in 1..w.len() {
                if w[m] > w[m - 1] + 1e-14 || !(0.0..=1.0).contains(&w[m]) {
                    shape_ok = false;
                }
            }
            for m in 2..w.len() {
                if (w[m] - 2.0 * w[m - 1] + w[m - 2]).abs() > 1e-12 {
                    shape_ok = false;
                }
            }
            let moments = spectrum_moments(&spec);
            worst_recovered = worst_recovered.max((moments.n_eff - n_eff).abs() / n_eff);
            let bound = strict_bound(s, n_eff).unwrap().bound;
            worst_product_gap =
                worst_product_gap.max((moments.delta_x * moments.delta_q - bound).abs());
            let products: Vec<f64> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&k| {
                    let m = spectrum_moments(&build_spectrum(s, n_eff, k).unwrap());
                    m.delta_x * m.delta_q
                })
                .collect();
            k_invariance = k_invariance
                .max((products[0] - products[1]).abs() / products[1])
                .max((products[2] - products[1]).abs() / products[1]);
        }
    }
    checks.push(Check::new(
        "spectrum/constraint-residuals",
        worst_trace < 1e-10 && worst_purity < 1e-10,
        format!("max trace residual {worst_trace:.3e}, max purity residual {worst_purity:.3e}"),
    ));
    checks.push(Check::new(
        "spectrum/affine-non-increasing-weights",
        shape_ok,
        "weights in [0,1], affine and non-increasing in the shell index".into(),
    ));
    checks.push(Check::new(
        "spectrum/moments-recover-n-eff",
        worst_recovered < 1e-10,
        format!("max relative error {worst_recovered:.3e}"),
    ));
    checks.push(Check::new(
        "spectrum/product-saturates-bound",
        worst_product_gap < 1e-12,
        format!("max |dx dq - B| = {worst_product_gap:.3e}"),
    ));
    checks.push(Check::new(
        "spectrum/scale-invariance",
        k_invariance < 1e-14,
        format!("max relative spread-product change over k in {{1/2, 1, 2}}: {k_invariance:.3e}"),
    ));

    // The bound-minimizing layer must be the largest admissible one.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatch = None;
    for _ in 0..1000 {
        let s = rng.random_range(1..=3u32);
        let n_eff = 1.0 + rng.random::<f64>() * 199.0;
        let selected = select_layer(s, n_eff).unwrap();
        let interval = admissible_layers(s, n_eff).unwrap();
        if selected != interval.max {
            mismatch = Some((s, n_eff, selected, interval.max));
            break;
        }
    }
    checks.push(Check::new(
        "spectrum/argmin-is-largest-admissible",
        mismatch.is_none(),
        match mismatch {
            None => "1000 random draws: minimizing layer equals the largest admissible".into(),
            Some((s, n, sel, max)) => {
                format!("mismatch at s={s}, n_eff={n}: selected {sel}, largest {max}")
            }
        },
    ));

    checks
}

fn oracle_suite(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();

    let mut worst_rel = 0.0f64;
    let mut worst_case = String::new();
    for s in [1u32, 2, 3] {
        for n_eff in [1.2, 1.5, 2.0, 2.5, 4.0, 7.0] {
            let reference = strict_bound(s, n_eff).unwrap();
            let problem = ShellProblem {
                s,
                mu: 1.0 / n_eff,
                shells: reference.layers as usize + 4,
            };
            let sol = oracle::minimize_shell(&problem, seed).unwrap();
            let rel = (sol.objective - reference.bound).abs() / reference.bound;
            if rel > worst_rel {
                worst_rel = rel;
                worst_case = format!("s={s}, n_eff={n_eff}");
            }
        }
    }
    checks.push(Check::new(
        "oracle/shell-agreement",
        worst_rel < 1e-5,
        format!("max relative objective gap {worst_rel:.3e} at {worst_case}"),
    ));

    let mut matrix_ok = true;
    let mut matrix_detail = String::new();
    for mu in [1.0, 2.0 / 3.0, 0.5] {
        let reference = strict_bound(1, 1.0 / mu).unwrap();
        let problem = MatrixProblem::new(12, mu).unwrap();
        let sol = oracle::minimize_matrix(&problem, seed).unwrap();
        let gap = (sol.objective - reference.bound).abs();
        let expected = build_spectrum(1, 1.0 / mu, 1.0).unwrap();
        let mut diag_gap = 0.0f64;
        for (m, &w) in expected.shell_weights().iter().enumerate() {
            diag_gap = diag_gap.max((sol.rho[(m, m)] - w).abs());
        }
        if gap > 1e-4 || sol.off_diagonal_norm > 1e-5 || diag_gap > 1e-4 {
            matrix_ok = false;
        }
        matrix_detail.push_str(&format!(
            "mu={mu:.4}: |obj-B|={gap:.2e}, off-diag={:.2e}, diag gap={diag_gap:.2e}; ",
            sol.off_diagonal_norm
        ));
    }
    checks.push(Check::new(
        "oracle/matrix-diagonality-and-bound",
        matrix_ok,
        matrix_detail.trim_end_matches("; ").to_string(),
    ));

    // Equal-weight mixtures sit strictly above the boundary whenever a
    // larger layer count is admissible.
    let mut uniform_ok = true;
    let mut uniform_detail = String::new();
    for (s, layers) in [(1u32, 2u32), (1, 3), (2, 2), (3, 2)] {
        let nn = mode_count(s, layers).unwrap() as f64;
        let product = (2.0 * layers as f64 + s as f64 - 1.0) / (2.0 * (s as f64 + 1.0));
        let eval = strict_bound(s, nn).unwrap();
        let exceeds = product > eval.bound + 1e-12;
        let larger_admissible = eval.admissible.max > layers;
        if larger_admissible && !exceeds {
            uniform_ok = false;
        }
        uniform_detail.push_str(&format!(
            "s={s},L={layers}: uniform {product:.6} vs bound {:.6}; ",
            eval.bound
        ));
    }
    checks.push(Check::new(
        "oracle/equal-weight-suboptimality",
        uniform_ok,
        uniform_detail.trim_end_matches("; ").to_string(),
    ));

    for s in [1u32, 2, 3] {
        let report = oracle::random_mixture_audit(s, 10_000, seed).unwrap();
        checks.push(Check::new(
            &format!("oracle/random-mixture-audit-s{s}"),
            report.violations.is_empty(),
            format!(
                "{} samples, {} violations, min margin {:.3e} at n_eff {:.4}",
                report.samples,
                report.violations.len(),
                report.min_margin,
                report.min_margin_sample.n_eff
            ),
        ));
    }

    checks
}

fn quadrature_suite() -> Vec<Check> {
    let mut checks = Vec::new();

    let basis = OscillatorBasis::new(1.0, 12).unwrap();
    let grid = UniformGrid::default_for_scale(1.0);
    let defect = orthonormality_defect(&basis, &grid, 12).unwrap();
    checks.push(Check::new(
        "quadrature/orthonormality",
        defect < 1e-8,
        format!("max deviation from identity over modes 0..=12: {defect:.3e}"),
    ));

    let mut cross_ok = true;
    let mut fd_gap_max = 0.0f64;
    let mut detail = String::new();
    for n_eff in [1.0, 1.5, 2.0, 3.7, 10.0] {
        let spec = build_spectrum(1, n_eff, 1.0).unwrap();
        let axes = [UniformGrid::default_for_scale(1.0)];
        let sampled = build_density_grid(&spec, &axes).unwrap();
        let q = quadrature_moments(&sampled);
        let a = spectrum_moments(&spec);
        let dx_gap = (q.delta_x - a.delta_x).abs();
        let dq_gap = (q.delta_q - a.delta_q).abs();
        let neff_gap = (q.n_eff - a.n_eff).abs() / a.n_eff;
        let trace_gap = (q.trace - 1.0).abs();
        if dx_gap > 1e-6 || dq_gap > 1e-6 || neff_gap > 1e-5 || trace_gap > 1e-6 {
            cross_ok = false;
        }
        fd_gap_max = fd_gap_max.max((q.delta_q_second_diff - q.delta_q).abs());
        detail.push_str(&format!(
            "n_eff={n_eff}: dx {dx_gap:.1e}, dq {dq_gap:.1e}, n_eff {neff_gap:.1e}; "
        ));
    }
    checks.push(Check::new(
        "quadrature/analytic-cross-check",
        cross_ok,
        detail.trim_end_matches("; ").to_string(),
    ));
    checks.push(Check::new(
        "quadrature/second-difference-route",
        fd_gap_max < 1e-4,
        format!("max |dq(spectral) - dq(second difference)| = {fd_gap_max:.3e}"),
    ));

    let spec = build_spectrum(2, 3.0, 1.0).unwrap();
    let axis = UniformGrid::new(-8.0, 8.0, 41).unwrap();
    let sampled = build_density_grid(&spec, &[axis, axis]).unwrap();
    let q = quadrature_moments(&sampled);
    let swap = sampled.swap_symmetry_defect().unwrap();
    checks.push(Check::new(
        "quadrature/two-dimensional-grid",
        (q.trace - 1.0).abs() < 1e-6 && swap < 1e-10,
        format!("trace residual {:.3e}, swap defect {swap:.3e}", (q.trace - 1.0).abs()),
    ));

    checks
}
