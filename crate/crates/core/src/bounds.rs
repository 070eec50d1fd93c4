//! The uncertainty boundary and the packing coefficients.
//!
//! Three views of the same physical-region boundary are provided:
//!
//! * the strict bound `B(s, N_eff)` from the exact layer construction,
//! * a smooth approximation obtained by letting the layer count take
//!   continuous values, solved from a monotone transcendental equation,
//! * the inverse map: the largest `N_eff` compatible with a given spread
//!   product.
//!
//! The packing coefficient `C(s, N_eff) = (2 B)^s / N_eff` rescales the bound
//! so that a pure state sits at exactly 1 and the large-mixture limit tends
//! to the closed asymptote `C(s) = 2^{s+1} (s+1)! / (s+2)^{s+1}`.

use crate::error::{Error, Result};
use crate::shells::{log_gamma, mode_count};
use crate::spectrum::{self, LayerInterval};
use rayon::prelude::*;

/// Ceiling for the continuous layer-parameter search.
const LAYER_PARAMETER_CEILING: f64 = 1e12;

/// Relative residual at which the transcendental solve is converged.
const ROOT_RESIDUAL_TOL: f64 = 1e-12;

/// Strict bound evaluated at an explicit layer count.
///
/// `B = (2L + s - 1) / (2(s+1)) - sqrt((N(L) - N_eff)(L+s)(L-1))
///      / ((s+1) sqrt(N_eff s (s+2)))`,
/// with the square-root term taken as zero for `L = 1`.
pub fn layer_bound(s: u32, n_eff: f64, layers: u32) -> Result<f64> {
    if s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    if layers == 0 {
        return Err(Error::Domain("layer count L must be at least 1".into()));
    }
    let sf = s as f64;
    let lf = layers as f64;
    let first = (2.0 * lf + sf - 1.0) / (2.0 * (sf + 1.0));
    if layers == 1 {
        return Ok(first);
    }
    let nn = mode_count(s, layers)? as f64;
    let mut excess = nn - n_eff;
    if excess < 0.0 {
        if spectrum::approx_eq(n_eff, nn) {
            excess = 0.0;
        } else {
            return Err(Error::Domain(format!(
                "layer count {layers} holds only {nn} modes, fewer than n_eff = {n_eff}"
            )));
        }
    }
    let second =
        (excess * (lf + sf) * (lf - 1.0)).sqrt() / ((sf + 1.0) * (n_eff * sf * (sf + 2.0)).sqrt());
    Ok(first - second)
}

/// Strict boundary evaluation: selected layer count, admissible interval,
/// bound and packing coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEvaluation {
    pub s: u32,
    pub n_eff: f64,
    /// Layer count minimizing the bound (the largest admissible one).
    pub layers: u32,
    pub admissible: LayerInterval,
    /// Strict lower bound on the spread product `dx dq`.
    pub bound: f64,
    /// `C(s, N_eff) = (2 bound)^s / n_eff`.
    pub packing: f64,
}

/// Evaluate the strict boundary at `(s, n_eff)`.
pub fn strict_bound(s: u32, n_eff: f64) -> Result<BoundEvaluation> {
    let (layers, bound, admissible) = spectrum::select_layer_impl(s, n_eff)?;
    let packing = (2.0 * bound).powi(s as i32) / n_eff;
    Ok(BoundEvaluation {
        s,
        n_eff,
        layers,
        admissible,
        bound,
        packing,
    })
}

/// Smooth boundary: continuous layer parameter and the bound it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBound {
    pub s: u32,
    pub n_eff: f64,
    /// Continuous layer parameter solving the mode-count equation.
    pub l_tilde: f64,
    /// `(s + 2 l_tilde) / (2 (s + 2))`.
    pub bound: f64,
}

/// `N_eff` implied by a continuous layer parameter: the vanishing-weight
/// condition gives
/// `N_eff = (s + 2) Gamma(lt + s + 1) / ((s + 2 lt) (s + 1)! Gamma(lt))`.
fn log_n_eff_of_parameter(s: u32, l_tilde: f64) -> f64 {
    let sf = s as f64;
    let lg = |x: f64| log_gamma(x).expect("argument positive by construction");
    (sf + 2.0).ln() + lg(l_tilde + sf + 1.0) - (sf + 2.0 * l_tilde).ln() - lg(sf + 2.0)
        - lg(l_tilde)
}

/// Solve the smooth boundary at `(s, n_eff)`.
///
/// The left-hand side is strictly increasing in the layer parameter, so a
/// bracketed bisection is unconditionally safe; the bracket endpoints are
/// checked at run time. Converges when the reconstructed `N_eff` matches the
/// request to a relative residual below 1e-12.
pub fn approx_bound(s: u32, n_eff: f64) -> Result<ApproxBound> {
    if s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    if !(n_eff >= 1.0) {
        if spectrum::approx_eq(n_eff, 1.0) {
            // fall through with the exact endpoint
        } else {
            return Err(Error::Domain(format!(
                "effective state number must be >= 1, got {n_eff}"
            )));
        }
    }
    let sf = s as f64;
    if n_eff <= 1.0 || spectrum::approx_eq(n_eff, 1.0) {
        return Ok(ApproxBound {
            s,
            n_eff: 1.0,
            l_tilde: 1.0,
            bound: 0.5,
        });
    }

    let target = n_eff.ln();
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    while log_n_eff_of_parameter(s, hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > LAYER_PARAMETER_CEILING {
            return Err(Error::BracketExceeded {
                limit: LAYER_PARAMETER_CEILING,
            });
        }
    }
    // Monotonicity assertion on the bracket.
    if !(log_n_eff_of_parameter(s, lo) <= target && log_n_eff_of_parameter(s, hi) >= target) {
        return Err(Error::Internal(format!(
            "bracket endpoints not ordered for s={s}, n_eff={n_eff}"
        )));
    }

    for _ in 0..200 {
        let l_tilde = 0.5 * (lo + hi);
        let log_value = log_n_eff_of_parameter(s, l_tilde);
        let residual = (log_value.exp() - n_eff).abs() / n_eff;
        if residual < ROOT_RESIDUAL_TOL {
            return Ok(ApproxBound {
                s,
                n_eff,
                l_tilde,
                bound: (sf + 2.0 * l_tilde) / (2.0 * (sf + 2.0)),
            });
        }
        if log_value < target {
            lo = l_tilde;
        } else {
            hi = l_tilde;
        }
    }
    Err(Error::Internal(format!(
        "bisection for the layer parameter did not converge at s={s}, n_eff={n_eff}"
    )))
}

/// Largest effective state number compatible with a spread product `uv`:
/// `N_eff^max = Gamma((s+2) uv + s/2 + 1) / (2 uv (s+1)! Gamma((s+2) uv - s/2))`.
pub fn max_neff(s: u32, uv: f64) -> Result<f64> {
    if s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    if !(uv >= 0.5) {
        return Err(Error::Domain(format!(
            "spread product must be at least 1/2, got {uv}"
        )));
    }
    let sf = s as f64;
    let upper = (sf + 2.0) * uv + sf / 2.0 + 1.0;
    let lower = (sf + 2.0) * uv - sf / 2.0;
    if lower <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma argument (s+2)uv - s/2 = {lower} must be positive"
        )));
    }
    let log_ratio = log_gamma(upper)? - log_gamma(lower)? - log_gamma(sf + 2.0)?;
    Ok(log_ratio.exp() / (2.0 * uv))
}

/// Large-mixture packing asymptote `C(s) = 2^{s+1} (s+1)! / (s+2)^{s+1}`.
pub fn asymptotic_packing(s: u32) -> f64 {
    assert!(s >= 1, "dimension s must be at least 1");
    let sf = s as f64;
    let mut factorial = 1.0f64;
    for i in 2..=(s as u64 + 1) {
        factorial *= i as f64;
    }
    let direct = (2.0 / (sf + 2.0)).powi(s as i32 + 1) * factorial;
    if direct.is_finite() && direct > 0.0 {
        direct
    } else {
        // Log-space fallback for dimensions far beyond physical interest.
        let lg = log_gamma(sf + 2.0).expect("positive argument");
        ((sf + 1.0) * (2.0 / (sf + 2.0)).ln() + lg).exp()
    }
}

/// Request for a boundary-curve table.
#[derive(Debug, Clone)]
pub struct CurveRequest {
    /// Dimensions to tabulate, in output order.
    pub dims: Vec<u32>,
    pub n_eff_min: f64,
    pub n_eff_max: f64,
    pub points: usize,
    /// Logarithmic instead of linear spacing.
    pub log_spacing: bool,
}

/// Per-dimension entries of one curve row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub s: u32,
    pub layers: u32,
    pub b_strict: f64,
    pub b_approx: f64,
    pub c_strict: f64,
    pub c_approx: f64,
    pub c_asymptotic: f64,
}

/// One sampled `n_eff` with entries for every requested dimension.
#[derive(Debug, Clone)]
pub struct CurveRow {
    pub n_eff: f64,
    pub per_dim: Vec<CurvePoint>,
}

/// Tabulate strict, approximate and asymptotic packing data on an `n_eff`
/// grid. Rows are ordered by the input grid regardless of the evaluation
/// schedule.
pub fn packing_curve(request: &CurveRequest) -> Result<Vec<CurveRow>> {
    if request.dims.is_empty() {
        return Err(Error::Domain("at least one dimension is required".into()));
    }
    for &s in &request.dims {
        if s == 0 {
            return Err(Error::Domain("dimension s must be at least 1".into()));
        }
    }
    let (min, max, points) = (request.n_eff_min, request.n_eff_max, request.points);
    if !(min >= 1.0) || !max.is_finite() {
        return Err(Error::Domain(format!(
            "n_eff range [{min}, {max}] must start at 1 or above"
        )));
    }
    if max < min {
        return Err(Error::Domain(format!(
            "n_eff range [{min}, {max}] is reversed"
        )));
    }
    if points == 0 {
        return Err(Error::Domain("at least one grid point is required".into()));
    }
    if points == 1 && max > min {
        return Err(Error::Domain(
            "a single grid point needs n_eff_min = n_eff_max".into(),
        ));
    }

    let grid: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                return min;
            }
            let t = i as f64 / (points - 1) as f64;
            if i == 0 {
                min
            } else if i == points - 1 {
                max
            } else if request.log_spacing {
                (min.ln() + t * (max.ln() - min.ln())).exp()
            } else {
                min + t * (max - min)
            }
        })
        .collect();

    grid.par_iter()
        .map(|&n_eff| {
            let per_dim = request
                .dims
                .iter()
                .map(|&s| {
                    let strict = strict_bound(s, n_eff)?;
                    let approx = approx_bound(s, n_eff)?;
                    Ok(CurvePoint {
                        s,
                        layers: strict.layers,
                        b_strict: strict.bound,
                        b_approx: approx.bound,
                        c_strict: strict.packing,
                        c_approx: (2.0 * approx.bound).powi(s as i32) / n_eff,
                        c_asymptotic: asymptotic_packing(s),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Domain(format!("at n_eff = {n_eff}: {e}")))?;
            Ok(CurveRow { n_eff, per_dim })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_endpoint_for_every_dimension() {
        for s in [1u32, 2, 3, 5, 10] {
            let eval = strict_bound(s, 1.0).unwrap();
            assert!((eval.bound - 0.5).abs() < 1e-14, "s={s}");
            assert!((eval.packing - 1.0).abs() < 1e-14, "s={s}");
            assert_eq!(eval.layers, 1);
        }
    }

    #[test]
    fn strict_bound_goldens() {
        // Closed forms, confirmed against the shell and matrix minimizers.
        let b15 = strict_bound(1, 1.5).unwrap();
        let golden15 = 1.0 - 1.0 / (2.0 * 3f64.sqrt());
        assert_eq!(b15.layers, 2);
        assert!((b15.bound - golden15).abs() < 1e-12);

        let b2 = strict_bound(1, 2.0).unwrap();
        let golden2 = 1.5 - 8f64.sqrt() / (2.0 * 6f64.sqrt());
        assert_eq!(b2.layers, 3);
        assert_eq!(b2.admissible, LayerInterval { min: 2, max: 3 });
        assert!((b2.bound - golden2).abs() < 1e-12);

        // A two-layer evaluation at n_eff = 2 gives exactly 1.
        assert!((layer_bound(1, 2.0, 2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn approx_bound_goldens() {
        let a = approx_bound(1, 1.0).unwrap();
        assert_eq!(a.l_tilde, 1.0);
        assert_eq!(a.bound, 0.5);

        // s = 1, N_eff = 3/2 reduces to lt^2 - lt - 1 = 0.
        let a = approx_bound(1, 1.5).unwrap();
        let golden = 0.5 * (1.0 + 5f64.sqrt());
        assert!((a.l_tilde - golden).abs() < 1e-9, "{}", a.l_tilde);
        assert!((a.bound - (1.0 + 2.0 * golden) / 6.0).abs() < 1e-9);

        // s = 1, N_eff = 2 reduces to 3 lt^2 - 5 lt - 4 = 0.
        let a = approx_bound(1, 2.0).unwrap();
        let golden = (5.0 + 73f64.sqrt()) / 6.0;
        assert!((a.l_tilde - golden).abs() < 1e-9);
        assert!((a.bound - (1.0 + 2.0 * golden) / 6.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_map_consistency() {
        assert!((max_neff(1, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((max_neff(3, 0.5).unwrap() - 1.0).abs() < 1e-12);
        for s in [1u32, 2, 3] {
            for i in 0..25 {
                let n_eff = 1.0 + 499.0 * (i as f64 / 24.0);
                let approx = approx_bound(s, n_eff).unwrap();
                let recovered = max_neff(s, approx.bound).unwrap();
                assert!(
                    (recovered - n_eff).abs() <= 1e-9 * n_eff,
                    "s={s}, n_eff={n_eff}: recovered {recovered}"
                );
            }
        }
        let approx = approx_bound(2, 4.0).unwrap();
        assert!((max_neff(2, approx.bound).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn asymptotic_packing_values() {
        assert!((asymptotic_packing(1) - 8.0 / 9.0).abs() < 1e-15);
        assert!((asymptotic_packing(2) - 0.75).abs() < 1e-15);
        assert!((asymptotic_packing(3) - 0.6144).abs() < 1e-15);
    }

    #[test]
    fn packing_is_bracketed_and_monotone() {
        for s in [1u32, 2, 3] {
            let request = CurveRequest {
                dims: vec![s],
                n_eff_min: 1.0,
                n_eff_max: 100.0,
                points: 200,
                log_spacing: true,
            };
            let rows = packing_curve(&request).unwrap();
            let asymptote = asymptotic_packing(s);
            let mut previous = f64::INFINITY;
            for row in &rows {
                let c = row.per_dim[0].c_strict;
                assert!(c <= previous + 1e-12, "s={s}, n_eff={}", row.n_eff);
                assert!(c <= 1.0 + 1e-12);
                assert!(c > asymptote, "s={s}, n_eff={}", row.n_eff);
                previous = c;
            }
            assert!((rows[0].per_dim[0].c_strict - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_curve() {
        let request = CurveRequest {
            dims: vec![1],
            n_eff_min: 1.0,
            n_eff_max: 1.0,
            points: 1,
            log_spacing: false,
        };
        let rows = packing_curve(&request).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].per_dim[0].c_strict - 1.0).abs() < 1e-14);
        assert!((rows[0].per_dim[0].c_approx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn domain_and_range_errors() {
        assert!(matches!(strict_bound(1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(approx_bound(1, 0.3), Err(Error::Domain(_))));
        assert!(matches!(max_neff(1, 0.25), Err(Error::Domain(_))));
        assert!(matches!(
            approx_bound(1, 1e30),
            Err(Error::BracketExceeded { .. })
        ));
        let request = CurveRequest {
            dims: vec![1],
            n_eff_min: 2.0,
            n_eff_max: 1.0,
            points: 10,
            log_spacing: false,
        };
        assert!(matches!(packing_curve(&request), Err(Error::Domain(_))));
    }

    #[test]
    fn strict_bound_matches_spectrum_product() {
        for s in [1u32, 2, 3] {
            for i in 0..40 {
                let n_eff = 1.0 + 199.0 * (i as f64 / 39.0);
                let eval = strict_bound(s, n_eff).unwrap();
                let spec = crate::spectrum::build_spectrum(s, n_eff, 1.0).unwrap();
                let m = crate::spectrum::spectrum_moments(&spec);
                assert!(
                    (m.delta_x * m.delta_q - eval.bound).abs() < 1e-12,
                    "s={s}, n_eff={n_eff}"
                );
            }
        }
    }
}
