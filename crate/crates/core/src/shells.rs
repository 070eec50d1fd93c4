//! Shell combinatorics and the special-function kernel.
//!
//! Oscillator modes in dimension `s` are indexed by a vector of nonnegative
//! integers; all modes with the same total index `m = n_1 + ... + n_s` form a
//! *shell*. The shell degeneracy and the cumulative mode count are computed in
//! exact integer arithmetic with explicit overflow detection, because the
//! layer-admissibility comparisons downstream need exact integer right-hand
//! sides. Floating point enters only through [`log_gamma`], which serves the
//! smooth-boundary formulas where the layer count is non-integer.

use crate::error::{Error, Result};

/// Default number of shells tabulated by [`ShellTable`].
pub const DEFAULT_MAX_SHELL: u32 = 64;

/// Exact binomial coefficient C(n, k), or an overflow error if the result
/// does not fit in `u64`.
pub(crate) fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc is C(n-k+i-1, i-1) entering the step; the multiply-then-divide
        // order keeps every intermediate an exact integer.
        acc = acc
            .checked_mul((n - k + i) as u128)
            .ok_or(Error::Overflow {
                context: "binomial coefficient",
            })?;
        acc /= i as u128;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow {
        context: "binomial coefficient",
    })
}

fn require_dimension(s: u32) -> Result<()> {
    if s == 0 {
        return Err(Error::Domain("dimension s must be at least 1".into()));
    }
    Ok(())
}

/// Number of modes in shell `m` for dimension `s`:
/// `g_s(m) = (m + s - 1)! / (m! (s - 1)!)`.
///
/// Exact integer arithmetic; overflow of `u64` is reported, never wrapped.
pub fn degeneracy(s: u32, m: u32) -> Result<u64> {
    require_dimension(s)?;
    binomial(m as u64 + s as u64 - 1, s as u64 - 1)
}

/// Total number of modes in the first `layers` shells:
/// `N(L) = sum_{m < L} g_s(m) = (L + s - 1)! / ((L - 1)! s!)`.
pub fn mode_count(s: u32, layers: u32) -> Result<u64> {
    require_dimension(s)?;
    if layers == 0 {
        return Err(Error::Domain("layer count L must be at least 1".into()));
    }
    binomial(layers as u64 + s as u64 - 1, s as u64)
}

/// Degeneracies `g_s(0), ..., g_s(count - 1)` computed by the exact integer
/// recurrence `g(m + 1) = g(m) (m + s) / (m + 1)`.
pub fn shell_degeneracies(s: u32, count: usize) -> Result<Vec<u64>> {
    require_dimension(s)?;
    let mut out = Vec::with_capacity(count);
    let mut g: u128 = 1;
    for m in 0..count {
        out.push(u64::try_from(g).map_err(|_| Error::Overflow {
            context: "shell degeneracy",
        })?);
        g = g
            .checked_mul(m as u128 + s as u128)
            .ok_or(Error::Overflow {
                context: "shell degeneracy",
            })?
            / (m as u128 + 1);
    }
    Ok(out)
}

// Lanczos approximation, g = 7, 9 terms. Relative error below 1e-14 on the
// whole positive axis, comfortably inside the 1e-13 contract.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_74;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "log_gamma requires a positive argument, got {x}"
        )));
    }
    if x < 0.5 {
        // Reflection keeps the direct series in its accurate range.
        let s = (std::f64::consts::PI * x).sin();
        return Ok((std::f64::consts::PI / s).ln() - log_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(HALF_LOG_TWO_PI + (z + 0.5) * t.ln() - t + series.ln())
}

/// Precomputed shell degeneracies and cumulative mode counts for one
/// dimension.
///
/// Construction cross-checks the running sum of degeneracies against the
/// closed-form cumulative count and the identity `s N(L) = L g_s(L)`, so a
/// table that exists is internally consistent. Immutable afterwards; safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct ShellTable {
    s: u32,
    degeneracy: Vec<u64>,
    cumulative: Vec<u64>,
}

impl ShellTable {
    /// Tabulate shells `0..=max_shell` for dimension `s`.
    pub fn new(s: u32, max_shell: u32) -> Result<Self> {
        require_dimension(s)?;
        let degeneracy = shell_degeneracies(s, max_shell as usize + 1)?;
        let mut cumulative = Vec::with_capacity(max_shell as usize + 2);
        cumulative.push(0u64);
        let mut running: u64 = 0;
        for (m, &g) in degeneracy.iter().enumerate() {
            running = running.checked_add(g).ok_or(Error::Overflow {
                context: "cumulative mode count",
            })?;
            let layers = m as u32 + 1;
            let closed_form = mode_count(s, layers)?;
            if closed_form != running {
                return Err(Error::Internal(format!(
                    "cumulative mode count mismatch at s={s}, L={layers}: \
                     running sum {running} vs closed form {closed_form}"
                )));
            }
            // s N(L) = L g_s(L), checked in integer form.
            let g_l = degeneracy
                .get(layers as usize)
                .copied()
                .map(Ok)
                .unwrap_or_else(|| degeneracy_checked(s, layers))?;
            if (s as u128) * (running as u128) != (layers as u128) * (g_l as u128) {
                return Err(Error::Internal(format!(
                    "mode-count identity failed at s={s}, L={layers}"
                )));
            }
            cumulative.push(running);
        }
        Ok(Self {
            s,
            degeneracy,
            cumulative,
        })
    }

    /// Table with the default depth of [`DEFAULT_MAX_SHELL`] shells.
    pub fn with_default_depth(s: u32) -> Result<Self> {
        Self::new(s, DEFAULT_MAX_SHELL)
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn max_shell(&self) -> u32 {
        self.degeneracy.len() as u32 - 1
    }

    /// `g_s(m)`; panics if `m` is beyond the tabulated depth.
    pub fn degeneracy(&self, m: u32) -> u64 {
        self.degeneracy[m as usize]
    }

    /// `N(L)` for `0 <= L <= max_shell + 1`; `N(0) = 0`.
    pub fn cumulative(&self, layers: u32) -> u64 {
        self.cumulative[layers as usize]
    }

    pub fn degeneracies(&self) -> &[u64] {
        &self.degeneracy
    }
}

fn degeneracy_checked(s: u32, m: u32) -> Result<u64> {
    degeneracy(s, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: literally enumerate every vector in N^s with the
    /// given total, independent of any factorial formula.
    fn enumerate_shell(s: usize, total: u32) -> u64 {
        fn rec(dims_left: usize, remaining: u32) -> u64 {
            if dims_left == 1 {
                return 1; // last coordinate is forced
            }
            (0..=remaining)
                .map(|first| rec(dims_left - 1, remaining - first))
                .sum()
        }
        rec(s, total)
    }

    #[test]
    fn degeneracy_examples() {
        assert_eq!(degeneracy(1, 7).unwrap(), 1);
        // expected values frozen from the enumeration oracle
        assert_eq!(enumerate_shell(2, 3), 4);
        assert_eq!(degeneracy(2, 3).unwrap(), 4);
        assert_eq!(enumerate_shell(3, 2), 6);
        assert_eq!(degeneracy(3, 2).unwrap(), 6);
    }

    #[test]
    fn degeneracy_matches_enumeration_on_a_grid() {
        for s in 1..=4usize {
            for m in 0..=8u32 {
                assert_eq!(
                    degeneracy(s as u32, m).unwrap(),
                    enumerate_shell(s, m),
                    "s={s}, m={m}"
                );
            }
        }
    }

    #[test]
    fn mode_count_examples() {
        assert_eq!(mode_count(1, 5).unwrap(), 5);
        let brute_2_3: u64 = (0..3).map(|m| enumerate_shell(2, m)).sum();
        assert_eq!(brute_2_3, 6);
        assert_eq!(mode_count(2, 3).unwrap(), 6);
        let brute_3_2: u64 = (0..2).map(|m| enumerate_shell(3, m)).sum();
        assert_eq!(brute_3_2, 4);
        assert_eq!(mode_count(3, 2).unwrap(), 4);
    }

    #[test]
    fn mode_count_is_the_shell_sum() {
        for s in 1..=6u32 {
            for layers in 1..=12u32 {
                let sum: u64 = (0..layers).map(|m| degeneracy(s, m).unwrap()).sum();
                assert_eq!(mode_count(s, layers).unwrap(), sum, "s={s}, L={layers}");
            }
        }
    }

    #[test]
    fn overflow_is_an_error_not_a_wrap() {
        assert!(matches!(
            degeneracy(60, 80),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(
            mode_count(40, 1_000_000),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(degeneracy(0, 3), Err(Error::Domain(_))));
        assert!(matches!(mode_count(2, 0), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn shell_table_identities() {
        for s in [1u32, 2, 3, 5, 10] {
            let table = ShellTable::new(s, 40).unwrap();
            assert_eq!(table.degeneracy(0), 1);
            assert_eq!(table.cumulative(1), 1);
            for layers in 1..=40u32 {
                assert_eq!(table.cumulative(layers), mode_count(s, layers).unwrap());
            }
            if s >= 2 {
                for m in 0..40u32 {
                    assert!(table.degeneracy(m + 1) > table.degeneracy(m));
                }
            } else {
                assert!(table.degeneracies().iter().all(|&g| g == 1));
            }
        }
    }

    #[test]
    fn log_gamma_trivial_points() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-14);
        let ln24 = 24.0f64.ln();
        assert!((log_gamma(5.0).unwrap() - ln24).abs() / ln24 < 1e-14);
    }

    #[test]
    fn log_gamma_reference_values() {
        // Frozen from a 40-digit evaluation of ln Gamma(x).
        let reference: &[(f64, f64)] = &[
            (0.5, 0.572_364_942_924_700_087_07),
            (1.5, -0.120_782_237_635_245_222_35),
            (2.5, 0.284_682_870_472_919_159_63),
            (3.7, 1.428_072_326_665_387_921_9),
            (5.0, 3.178_053_830_347_945_619_6),
            (10.123, 13.079_585_174_192_375_444),
            (17.25, 31.374_622_313_677_686_48),
            (20.0, 39.339_884_187_199_494_036),
            (42.5, 115.900_070_470_414_530_12),
            (100.5, 361.435_540_467_777_621_56),
            (1000.0, 5_905.220_423_209_181_211_8),
            (12_345.678, 103_959.919_905_546_060_92),
            (100_000.0, 1_051_287.708_973_656_894_9),
            (1_000_000.0, 12_815_504.569_147_611_66),
        ];
        for &(x, expected) in reference {
            let got = log_gamma(x).unwrap();
            let rel = (got - expected).abs() / expected.abs().max(1.0);
            assert!(rel < 1e-13, "x={x}: got {got}, expected {expected}, rel {rel:e}");
        }
    }

    #[test]
    fn log_gamma_matches_exact_factorials() {
        let mut factorial: f64 = 1.0;
        for n in 1..=20u32 {
            factorial *= n as f64;
            let got = log_gamma(n as f64 + 1.0).unwrap().exp();
            assert!(
                (got - factorial).abs() / factorial < 1e-12,
                "n={n}: {got} vs {factorial}"
            );
        }
    }
}
