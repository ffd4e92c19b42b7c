//! Fixed-precision number formatting shared by every text output.

/// Formats `x` like C's `%.{sig}g`: `sig` significant digits, trailing
/// zeros removed, scientific notation outside `[1e-5, 10^sig)`.
pub fn format_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_g;

    #[test]
    fn matches_printf_g() {
        assert_eq!(format_g(0.5, 12), "0.5");
        assert_eq!(format_g(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_g(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_g(123456.0, 12), "123456");
        assert_eq!(format_g(1e-7, 12), "1e-07");
        assert_eq!(format_g(-2.5e15, 12), "-2.5e+15");
        assert_eq!(format_g(0.0001, 12), "0.0001");
        assert_eq!(format_g(99.99999999999999, 12), "100");
        assert_eq!(format_g(0.0, 12), "0");
    }
}
