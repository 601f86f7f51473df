//! Byte-stable number formatting for CSV output.

/// Shortest representation that parses back to the same `f64`: plain
/// decimal for magnitudes in `[1e-4, 1e15)`, scientific otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Formats an optional value; `None` becomes an empty field.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for &v in &[
            0.0,
            1.0,
            0.1,
            1.0 / 3.0,
            2.5e-7,
            1e300,
            -4.2e-12,
            123456.789,
            1e15,
            9.99e14,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(2.5e-7), "2.5e-7");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_opt(None), "");
    }
}
