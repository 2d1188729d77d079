//! Byte-stable numeric formatting for CSV and summary output: six
//! significant digits, fixed-point for moderate magnitudes and scientific
//! notation outside them.

pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{x:.prec$}", prec = (5 - exp) as usize)
    } else {
        format!("{x:.5e}")
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn fixed_point_keeps_six_significant_digits() {
        assert_eq!(sig6(4.957616747181965), "4.95762");
        assert_eq!(sig6(891.0900000000001), "891.090");
        assert_eq!(sig6(0.3), "0.300000");
        assert_eq!(sig6(12.856754130223518), "12.8568");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.00012345649), "0.000123456");
    }

    #[test]
    fn extremes_fall_back_to_scientific() {
        assert_eq!(sig6(1.0e-7), "1.00000e-7");
        assert_eq!(sig6(2.5e8), "2.50000e8");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(-42.5), "-42.5000");
    }
}
