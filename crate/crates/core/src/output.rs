//! Shared formatting for emitted tables.

/// Full-precision (17 significant digits) rendering used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0" noise in regression files
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
    }
}
