//! Locale-independent number formatting for CSV and JSON output.

/// Format `value` with `digits` significant digits, `.` decimal separator.
///
/// Small and moderate magnitudes are written in plain decimal, everything
/// else in `e` notation, so output files are stable byte-for-byte across
/// runs and platforms.
pub fn fmt_sig(value: f64, digits: usize) -> String {
    assert!(digits >= 1, "need at least one significant digit");
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    // Round in scientific form first so the decimal exponent is the one the
    // rounded value actually has (e.g. 0.99999... -> 1.0000...).
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    if exp >= -4 && exp < digits as i32 {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, value)
    } else {
        format!("{mantissa}e{exp}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_decimal_range() {
        assert_eq!(fmt_sig(0.5, 12), "0.500000000000");
        assert_eq!(fmt_sig(1.0, 12), "1.00000000000");
        assert_eq!(fmt_sig(-2.0, 12), "-2.00000000000");
        assert_eq!(fmt_sig(10_000.0, 12), "10000.0000000");
        assert_eq!(fmt_sig(0.922_649_730_810_374, 12), "0.922649730810");
    }

    #[test]
    fn exponent_range() {
        assert_eq!(fmt_sig(1e15, 12), "1.00000000000e15");
        assert_eq!(fmt_sig(1e-5, 12), "1.00000000000e-5");
        assert_eq!(fmt_sig(0.0, 12), "0");
    }

    #[test]
    fn rounding_across_a_power_of_ten() {
        assert_eq!(fmt_sig(0.999_999_999_999_99, 12), "1.00000000000");
    }
}
