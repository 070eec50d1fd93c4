//! Admissible layer counts and the minimal-uncertainty eigenvalue spectrum.
//!
//! For a requested effective number of pure states `N_eff`, the minimizing
//! density operator occupies the first `L` oscillator shells, with one shared
//! weight per shell that is affine and non-increasing in the shell index. The
//! integer `L` is constrained to an interval: the mode count of `L` shells
//! must reach `N_eff` (all weights real), and the affine profile must stay
//! nonnegative on the last occupied shell. Among the admissible values the
//! spectrum uses the one minimizing the strict bound, which coincides with
//! the largest admissible `L`.

use crate::error::{Error, Result};
use crate::kahan_sum;
use crate::shells::{binomial, mode_count, shell_degeneracies};

/// Relative tolerance used on admissibility inequality boundaries.
const BOUNDARY_REL_TOL: f64 = 1e-12;

/// Residual tolerance for the trace and purity checks after construction.
const CONSTRUCTION_RESIDUAL_TOL: f64 = 1e-10;

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_REL_TOL * a.abs().max(b.abs())
}

fn validate_dimension(s: u32) -> Result<()> {
    if s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    Ok(())
}

fn validate_n_eff(n_eff: f64) -> Result<f64> {
    if !n_eff.is_finite() {
        return Err(Error::Domain(format!(
            "effective state number must be finite, got {n_eff}"
        )));
    }
    if n_eff >= 1.0 {
        return Ok(n_eff);
    }
    if approx_eq(n_eff, 1.0) {
        return Ok(1.0);
    }
    Err(Error::Domain(format!(
        "effective state number must be >= 1, got {n_eff}"
    )))
}

/// Validated request for a spectrum: dimension plus target `N_eff`.
///
/// The reciprocal of `N_eff` is the global degree of coherence `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRequest {
    s: u32,
    n_eff: f64,
}

impl SpectrumRequest {
    pub fn new(s: u32, n_eff: f64) -> Result<Self> {
        validate_dimension(s)?;
        let n_eff = validate_n_eff(n_eff)?;
        Ok(Self { s, n_eff })
    }

    /// Build a request from the degree of coherence `mu = 1 / N_eff`.
    pub fn from_coherence(s: u32, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0 + BOUNDARY_REL_TOL) {
            return Err(Error::Domain(format!(
                "degree of coherence must lie in (0, 1], got {mu}"
            )));
        }
        Self::new(s, 1.0 / mu)
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    pub fn mu(&self) -> f64 {
        1.0 / self.n_eff
    }
}

/// Contiguous inclusive interval of admissible layer counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerInterval {
    pub min: u32,
    pub max: u32,
}

impl LayerInterval {
    pub fn contains(&self, layers: u32) -> bool {
        self.min <= layers && layers <= self.max
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.min..=self.max
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees min <= max
    }
}

impl std::fmt::Display for LayerInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.min, self.max)
    }
}

/// Does `N_eff <= N(L)` hold, treating boundary equality as satisfied?
fn meets_mode_count(s: u32, n_eff: f64, layers: u32) -> Result<bool> {
    match mode_count(s, layers) {
        Ok(nn) => {
            let nn = nn as f64;
            Ok(n_eff <= nn || approx_eq(n_eff, nn))
        }
        // The count exceeds u64 while n_eff is representable in it, so the
        // inequality holds regardless of the exact value.
        Err(Error::Overflow { .. }) if n_eff < u64::MAX as f64 => Ok(true),
        Err(e) => Err(e),
    }
}

/// Does `N_eff` strictly exceed the nonnegativity bound for `layers`
/// occupied shells? Boundary equality counts as *not* exceeded.
///
/// The bound is the exact rational
/// `C(L + s - 1, s + 1) (s + 2) / (s + 2(L - 1))`, compared in cross-
/// multiplied form so the only rounding is in the final f64 comparison.
fn exceeds_weight_positivity_bound(s: u32, n_eff: f64, layers: u32) -> Result<bool> {
    debug_assert!(layers >= 2);
    let c = binomial(layers as u64 + s as u64 - 1, s as u64 + 1)?;
    let numerator = (c as u128 * (s as u128 + 2)) as f64;
    let denominator = (s as u64 + 2 * (layers as u64 - 1)) as f64;
    let lhs = n_eff * denominator;
    Ok(lhs > numerator && !approx_eq(lhs, numerator))
}

/// Every layer count `L` for which the minimizing spectrum with exactly `L`
/// occupied shells is realizable at the requested `N_eff`.
///
/// The result is always a non-empty contiguous interval; `L = 1` is
/// admissible only for a pure state (`N_eff = 1`).
pub fn admissible_layers(s: u32, n_eff: f64) -> Result<LayerInterval> {
    validate_dimension(s)?;
    let n_eff = validate_n_eff(n_eff)?;
    if n_eff == 1.0 {
        return Ok(LayerInterval { min: 1, max: 1 });
    }

    // Smallest L with N(L) >= N_eff. The mode count is strictly increasing
    // in L, so an exponential probe plus bisection suffices.
    let mut lo = 1u32;
    let mut hi = 2u32;
    while !meets_mode_count(s, n_eff, hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or(Error::Overflow {
            context: "layer search",
        })?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if meets_mode_count(s, n_eff, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let min_layers = hi;

    if !exceeds_weight_positivity_bound(s, n_eff, min_layers)? {
        return Err(Error::Internal(format!(
            "admissible interval empty at s={s}, n_eff={n_eff}"
        )));
    }

    // Largest L whose positivity bound is still strictly exceeded; the bound
    // is increasing in L.
    let mut last_good = min_layers;
    let mut step = 1u32;
    let first_bad = loop {
        let candidate = last_good.checked_add(step).ok_or(Error::Overflow {
            context: "layer search",
        })?;
        if exceeds_weight_positivity_bound(s, n_eff, candidate)? {
            last_good = candidate;
            step = step.saturating_mul(2);
        } else {
            break candidate;
        }
    };
    let mut bad = first_bad;
    while bad - last_good > 1 {
        let mid = last_good + (bad - last_good) / 2;
        if exceeds_weight_positivity_bound(s, n_eff, mid)? {
            last_good = mid;
        } else {
            bad = mid;
        }
    }

    Ok(LayerInterval {
        min: min_layers,
        max: last_good,
    })
}

/// Select the admissible layer count minimizing the strict bound, breaking
/// ties toward the larger count.
pub fn select_layer(s: u32, n_eff: f64) -> Result<u32> {
    Ok(select_layer_impl(s, n_eff)?.0)
}

pub(crate) fn select_layer_impl(s: u32, n_eff: f64) -> Result<(u32, f64, LayerInterval)> {
    let interval = admissible_layers(s, n_eff)?;
    let n_eff = validate_n_eff(n_eff)?;
    let mut best_layers = interval.min;
    let mut best_bound = f64::INFINITY;
    for layers in interval.iter() {
        let bound = crate::bounds::layer_bound(s, n_eff, layers)?;
        if bound <= best_bound {
            best_bound = bound;
            best_layers = layers;
        }
    }
    Ok((best_layers, best_bound, interval))
}

/// Diagonal eigenvalue spectrum of the minimal-uncertainty state.
///
/// One weight per occupied shell; every mode in shell `m` carries
/// `shell_weights[m]`. The oscillator scale `k` fixes the basis in which the
/// weights are eigenvalues; the spread product is independent of it.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    s: u32,
    layers: u32,
    shell_weights: Vec<f64>,
    shell_degeneracy: Vec<f64>,
    k: f64,
}

impl ModeSpectrum {
    pub fn s(&self) -> u32 {
        self.s
    }

    /// Number of occupied shells.
    pub fn layers(&self) -> u32 {
        self.layers
    }

    /// Per-shell mode weights, shell `0..layers`.
    pub fn shell_weights(&self) -> &[f64] {
        &self.shell_weights
    }

    /// Exact shell degeneracies as floats, aligned with `shell_weights`.
    pub fn shell_degeneracies(&self) -> &[f64] {
        &self.shell_degeneracy
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Total number of modes carrying nonzero weight in exact arithmetic,
    /// i.e. the mode count of the occupied shells.
    pub fn occupied_modes(&self) -> u64 {
        mode_count(self.s, self.layers).expect("counted during construction")
    }
}

/// Analytic moments of a shell spectrum in its oscillator basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumMoments {
    pub delta_x: f64,
    pub delta_q: f64,
    pub n_eff: f64,
}

/// Construct the minimal-uncertainty spectrum for `(s, n_eff)` at scale `k`.
///
/// The shell weights follow the affine profile
/// `w_m = [1 + ((L-1)s - m(s+1)) f] / N(L)` with
/// `f = sqrt((N(L) - N_eff)(s + 2)) / sqrt(N_eff s (L + s)(L - 1))`,
/// which meets the trace and purity constraints identically. `L = 1` is the
/// pure state and takes `f = 0`. Trace and purity residuals above 1e-10
/// indicate a library bug and are reported as internal errors, never
/// returned silently.
pub fn build_spectrum(s: u32, n_eff: f64, k: f64) -> Result<ModeSpectrum> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!(
            "oscillator scale k must be positive and finite, got {k}"
        )));
    }
    let n_eff = validate_n_eff(n_eff)?;
    let (layers, _, _) = select_layer_impl(s, n_eff)?;
    spectrum_for_layers(s, n_eff, layers, k)
}

/// Spectrum with an explicitly chosen admissible layer count.
pub(crate) fn spectrum_for_layers(
    s: u32,
    n_eff: f64,
    layers: u32,
    k: f64,
) -> Result<ModeSpectrum> {
    let nn = mode_count(s, layers)? as f64;
    let degeneracy: Vec<f64> = shell_degeneracies(s, layers as usize)?
        .into_iter()
        .map(|g| g as f64)
        .collect();

    let factor = if layers == 1 {
        0.0
    } else {
        let excess = (nn - n_eff).max(0.0);
        let sf = s as f64;
        let lf = layers as f64;
        (excess * (sf + 2.0)).sqrt() / (n_eff * sf * (lf + sf) * (lf - 1.0)).sqrt()
    };

    let sf = s as f64;
    let mut weights = Vec::with_capacity(layers as usize);
    for m in 0..layers {
        let slope = (layers as f64 - 1.0) * sf - m as f64 * (sf + 1.0);
        let w = (1.0 + slope * factor) / nn;
        if !(-1e-12..=1.0 + 1e-12).contains(&w) {
            return Err(Error::Internal(format!(
                "shell weight out of range at s={s}, n_eff={n_eff}, L={layers}, m={m}: {w}"
            )));
        }
        weights.push(w.clamp(0.0, 1.0));
    }

    let trace = kahan_sum(weights.iter().zip(&degeneracy).map(|(w, g)| w * g));
    let purity = kahan_sum(weights.iter().zip(&degeneracy).map(|(w, g)| w * w * g));
    let trace_residual = (trace - 1.0).abs();
    let purity_residual = (purity - 1.0 / n_eff).abs();
    if trace_residual > CONSTRUCTION_RESIDUAL_TOL || purity_residual > CONSTRUCTION_RESIDUAL_TOL {
        return Err(Error::Internal(format!(
            "constraint residuals too large at s={s}, n_eff={n_eff}, L={layers}: \
             trace {trace_residual:e}, purity {purity_residual:e}"
        )));
    }

    Ok(ModeSpectrum {
        s,
        layers,
        shell_weights: weights,
        shell_degeneracy: degeneracy,
        k,
    })
}

/// Analytic spread widths and effective state number of a shell spectrum.
///
/// `(dx)^2 = sum_m g w_m (m + s/2) / (s k^2)` and `(dq)^2` is the same sum
/// times `k^2 / s`, so the product `dx dq` does not depend on `k`.
pub fn spectrum_moments(spec: &ModeSpectrum) -> SpectrumMoments {
    let sf = spec.s as f64;
    let weighted_index = kahan_sum(
        spec.shell_weights
            .iter()
            .zip(&spec.shell_degeneracy)
            .enumerate()
            .map(|(m, (w, g))| w * g * (m as f64 + sf / 2.0)),
    );
    let purity = kahan_sum(
        spec.shell_weights
            .iter()
            .zip(&spec.shell_degeneracy)
            .map(|(w, g)| w * w * g),
    );
    let dx2 = weighted_index / (sf * spec.k * spec.k);
    let dq2 = weighted_index * spec.k * spec.k / sf;
    SpectrumMoments {
        delta_x: dx2.sqrt(),
        delta_q: dq2.sqrt(),
        n_eff: 1.0 / purity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_examples() {
        assert_eq!(
            admissible_layers(1, 1.0).unwrap(),
            LayerInterval { min: 1, max: 1 }
        );
        assert_eq!(
            admissible_layers(1, 1.5).unwrap(),
            LayerInterval { min: 2, max: 2 }
        );
        assert_eq!(
            admissible_layers(1, 2.0).unwrap(),
            LayerInterval { min: 2, max: 3 }
        );
    }

    #[test]
    fn positivity_bound_boundary_is_exclusive() {
        // The s=1, L=3 bound sits exactly at N_eff = C(3,2)*3/5 = 1.8.
        assert_eq!(admissible_layers(1, 1.8).unwrap().max, 2);
        assert_eq!(admissible_layers(1, 1.8 + 1e-9).unwrap().max, 3);
        // Mode-count boundary is inclusive: N_eff = N(2) = 2 admits L = 2.
        assert!(admissible_layers(1, 2.0).unwrap().contains(2));
    }

    #[test]
    fn select_layer_examples() {
        assert_eq!(select_layer(1, 2.0).unwrap(), 3);
        assert_eq!(select_layer(1, 1.5).unwrap(), 2);
        // s = 2, n_eff = 3: admissible {2, 3}, bound smaller at 3.
        let interval = admissible_layers(2, 3.0).unwrap();
        assert!(interval.contains(2));
        assert_eq!(select_layer(2, 3.0).unwrap(), 3);
    }

    #[test]
    fn pure_state_spectrum() {
        let spec = build_spectrum(1, 1.0, 1.0).unwrap();
        assert_eq!(spec.layers(), 1);
        assert_eq!(spec.shell_weights(), &[1.0]);
    }

    #[test]
    fn two_shell_spectrum_golden() {
        // Closed form at s=1, N_eff = 3/2: w = (1 +/- 1/sqrt(3)) / 2.
        let spec = build_spectrum(1, 1.5, 1.0).unwrap();
        assert_eq!(spec.layers(), 2);
        let w0 = 0.5 * (1.0 + 1.0 / 3f64.sqrt());
        let w1 = 0.5 * (1.0 - 1.0 / 3f64.sqrt());
        assert!((spec.shell_weights()[0] - w0).abs() < 1e-15);
        assert!((spec.shell_weights()[1] - w1).abs() < 1e-15);
        let sums: f64 = spec.shell_weights().iter().sum();
        assert!((sums - 1.0).abs() < 1e-15);
        let purity: f64 = spec.shell_weights().iter().map(|w| w * w).sum();
        assert!((purity - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weights_become_uniform_at_the_mode_count_boundary() {
        // With N_eff = N(L) the affine correction vanishes.
        let spec = spectrum_for_layers(1, 3.0, 3, 1.0).unwrap();
        for &w in spec.shell_weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        let spec = spectrum_for_layers(2, 6.0, 3, 1.0).unwrap();
        for &w in spec.shell_weights() {
            assert!((w - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn moments_examples() {
        // Uniform two-shell mixture in one dimension: dx dq = 1, N_eff = 2.
        let uniform = spectrum_for_layers(1, 2.0, 2, 1.0).unwrap();
        let m = spectrum_moments(&uniform);
        assert!((m.delta_x * m.delta_q - 1.0).abs() < 1e-14);
        assert!((m.n_eff - 2.0).abs() < 1e-12);

        // Pure ground state at s = 3, k = 2.
        let pure = build_spectrum(3, 1.0, 2.0).unwrap();
        let m = spectrum_moments(&pure);
        assert!((m.delta_x * m.delta_x - 0.125).abs() < 1e-15);
        assert!((m.delta_q * m.delta_q - 2.0).abs() < 1e-15);
        assert!((m.delta_x * m.delta_q - 0.5).abs() < 1e-15);

        // Minimal two-shell state reproduces the strict bound.
        let spec = build_spectrum(1, 1.5, 1.0).unwrap();
        let m = spectrum_moments(&spec);
        let golden = 1.0 - 1.0 / (2.0 * 3f64.sqrt());
        assert!((m.delta_x * m.delta_q - golden).abs() < 1e-12);
        assert!((m.n_eff - 1.5).abs() < 1e-12);
    }

    #[test]
    fn product_is_scale_invariant() {
        for n_eff in [1.0, 1.5, 3.7, 42.0] {
            let products: Vec<f64> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&k| {
                    let m = spectrum_moments(&build_spectrum(2, n_eff, k).unwrap());
                    m.delta_x * m.delta_q
                })
                .collect();
            assert!((products[0] - products[1]).abs() <= 1e-14 * products[1]);
            assert!((products[2] - products[1]).abs() <= 1e-14 * products[1]);
        }
    }

    #[test]
    fn request_validation() {
        assert!(SpectrumRequest::new(1, 0.5).is_err());
        assert!(SpectrumRequest::new(0, 2.0).is_err());
        let req = SpectrumRequest::from_coherence(2, 0.25).unwrap();
        assert!((req.n_eff() - 4.0).abs() < 1e-12);
        assert!((req.mu() - 0.25).abs() < 1e-15);
        assert!(build_spectrum(1, 0.99, 1.0).is_err());
        assert!(build_spectrum(1, 2.0, 0.0).is_err());
        assert!(build_spectrum(1, 2.0, -1.0).is_err());
    }

    #[test]
    fn spectrum_invariants_on_a_grid() {
        for s in [1u32, 2, 3] {
            for i in 0..60 {
                let n_eff = 1.0 + (200.0f64 - 1.0) * (i as f64 / 59.0);
                let spec = build_spectrum(s, n_eff, 1.0).unwrap();
                let w = spec.shell_weights();
                // non-increasing and affine in the shell index
                for m in 1..w.len() {
                    assert!(w[m] <= w[m - 1] + 1e-14);
                }
                for m in 2..w.len() {
                    let second_diff = w[m] - 2.0 * w[m - 1] + w[m - 2];
                    assert!(second_diff.abs() < 1e-12, "s={s}, n_eff={n_eff}, m={m}");
                }
                let m = spectrum_moments(&spec);
                assert!(
                    (m.n_eff - n_eff).abs() <= 1e-10 * n_eff,
                    "s={s}, n_eff={n_eff}: moments give {}",
                    m.n_eff
                );
            }
        }
    }
}
