//! Number formatting for reports and CSV.

/// `x` rounded to `digits` significant digits, trailing zeros dropped.
/// Falls back to scientific notation outside `1e-5 ≤ |x| < 10^digits`.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn rounds_and_trims() {
        assert_eq!(sig(2.264811403, 6), "2.26481");
        assert_eq!(sig(0.5, 10), "0.5");
        assert_eq!(sig(18.4, 10), "18.4");
        assert_eq!(sig(45.0, 10), "45");
        assert_eq!(sig(-0.0001234, 3), "-0.000123");
        assert_eq!(sig(1.0e-9, 10), "1e-9");
        assert_eq!(sig(0.0, 10), "0");
        assert_eq!(sig(1234567.0, 3), "1.23e6");
    }

    #[test]
    fn rounding_carry_moves_exponent() {
        assert_eq!(sig(9.9999999999, 3), "10");
        assert_eq!(sig(0.99999, 2), "1");
    }
}
