//! Shared helpers for CSV/JSON report emission.

use crate::scalar::Scalar;

/// Significant digits used for every real number written to CSV.
pub const CSV_DIGITS: usize = 6;

/// Formats like C's `%.{digits}g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn format_sig<T: Scalar>(x: T, digits: usize) -> String {
    let x = x.to_f64_lossy();
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// [`format_sig`] at [`CSV_DIGITS`].
pub fn csv_num<T: Scalar>(x: T) -> String {
    format_sig(x, CSV_DIGITS)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serialises rows with a header into a CSV string.
pub fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases: [(f64, &str); 12] = [
            (0.0, "0"),
            (1.0, "1"),
            (0.890, "0.89"),
            (0.663294, "0.663294"),
            (0.6632942, "0.663294"),
            (-11.24, "-11.24"),
            (1.3124e-5, "1.3124e-05"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (999999.5, "1e+06"),
            (-0.5, "-0.5"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig(x, 6), want, "{x}");
        }
        assert_eq!(format_sig(f64::NAN, 6), "NaN");
        assert_eq!(format_sig(0.25_f32, 6), "0.25");
    }
}
