//! Empirical age estimators over one class's ordered departure records.
//!
//! A record is `(sojourn, exit time)`; records must be sorted by exit time,
//! which the engine guarantees. All averages are taken over the window from
//! the first to the last recorded exit.

use super::SimError;
use crate::scalar::{two, Scalar};

/// Exit times must be non-decreasing with a positive overall span. Ties are
/// tolerated: coarse clock types can quantize two exits to the same instant,
/// and a zero-width interval contributes nothing to the averages.
fn check_window<T: Scalar>(departures: &[(T, T)]) -> Result<(), SimError> {
    for w in departures.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(SimError::UnorderedExits);
        }
    }
    if departures[departures.len() - 1].1 <= departures[0].1 {
        return Err(SimError::UnorderedExits);
    }
    Ok(())
}

/// Sawtooth age averages `(h_left, h, h_right)`.
///
/// Between consecutive exits the delivered-data age climbs from the previous
/// packet's sojourn; integrating the sawtooth and its corner values over the
/// window gives the time average and the two one-sided limits.
pub fn estimate_age_sawtooth<T: Scalar>(departures: &[(T, T)]) -> Result<(T, T, T), SimError> {
    if departures.len() < 2 {
        return Err(SimError::TooFewSamples {
            have: departures.len(),
            need: 2,
        });
    }
    check_window(departures)?;
    let mut s_d = T::zero();
    let mut d_sq = T::zero();
    for w in departures.windows(2) {
        let (sojourn, exit) = w[0];
        let gap = w[1].1 - exit;
        s_d = s_d + sojourn * gap;
        d_sq = d_sq + gap * gap;
    }
    let span = departures[departures.len() - 1].1 - departures[0].1;
    let h_left = s_d / span;
    let h = h_left + d_sq / (two::<T>() * span);
    let h_right = h_left + d_sq / span;
    Ok((h_left, h, h_right))
}

/// Mean and second moment of the inter-departure gaps.
pub fn interdeparture_stats<T: Scalar>(departures: &[(T, T)]) -> Result<(T, T), SimError> {
    if departures.len() < 2 {
        return Err(SimError::TooFewSamples {
            have: departures.len(),
            need: 2,
        });
    }
    check_window(departures)?;
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    for w in departures.windows(2) {
        let gap = w[1].1 - w[0].1;
        sum = sum + gap;
        sum_sq = sum_sq + gap * gap;
    }
    let n = T::from_usize(departures.len() - 1).expect("gap count fits in scalar");
    Ok((sum / n, sum_sq / n))
}

/// Mean end-to-end sojourn time.
pub fn sojourn_stats<T: Scalar>(departures: &[(T, T)]) -> Result<T, SimError> {
    if departures.is_empty() {
        return Err(SimError::TooFewSamples { have: 0, need: 1 });
    }
    let sum: T = departures.iter().map(|&(s, _)| s).sum();
    Ok(sum / T::from_usize(departures.len()).expect("sample count fits in scalar"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sawtooth_on_a_hand_worked_trace() {
        // Exits at 1, 3, 4 with sojourns 0.5, 1.0, 0.25.
        let d = [(0.5_f64, 1.0), (1.0, 3.0), (0.25, 4.0)];
        let (h_left, h, h_right) = estimate_age_sawtooth(&d).unwrap();
        // Window length 3; sum S*D = 0.5*2 + 1*1 = 2; sum D^2 = 4 + 1 = 5.
        assert_relative_eq!(h_left, 2.0 / 3.0);
        assert_relative_eq!(h, 2.0 / 3.0 + 5.0 / 6.0);
        assert_relative_eq!(h_right, 2.0 / 3.0 + 5.0 / 3.0);
    }

    #[test]
    fn interdeparture_moments_on_a_trace() {
        let d = [(0.1_f64, 1.0), (0.1, 3.0), (0.1, 4.0)];
        let (mean, m2) = interdeparture_stats(&d).unwrap();
        assert_relative_eq!(mean, 1.5);
        assert_relative_eq!(m2, 2.5);
    }

    #[test]
    fn sojourn_mean_on_a_trace() {
        let d = [(0.5_f64, 1.0), (1.5, 3.0)];
        assert_relative_eq!(sojourn_stats(&d).unwrap(), 1.0);
        assert!(matches!(
            sojourn_stats::<f64>(&[]),
            Err(SimError::TooFewSamples { have: 0, need: 1 })
        ));
    }

    #[test]
    fn too_few_departures_is_an_error() {
        assert!(matches!(
            estimate_age_sawtooth(&[(0.5_f64, 1.0)]),
            Err(SimError::TooFewSamples { have: 1, need: 2 })
        ));
        assert!(matches!(
            interdeparture_stats(&[(0.5_f64, 1.0)]),
            Err(SimError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn unordered_exits_are_rejected() {
        let d = [(0.5_f64, 2.0), (0.5, 1.0)];
        assert!(matches!(
            estimate_age_sawtooth(&d),
            Err(SimError::UnorderedExits)
        ));
        // A fully degenerate window has no usable time axis.
        let flat = [(0.5_f64, 2.0), (0.5, 2.0)];
        assert!(matches!(
            interdeparture_stats(&flat),
            Err(SimError::UnorderedExits)
        ));
    }

    #[test]
    fn tied_exits_inside_the_window_are_tolerated() {
        // Quantized clocks can collapse two exits onto one instant; the
        // zero-width interval must drop out of the averages.
        let tied = [(0.5_f64, 1.0), (1.0, 3.0), (0.25, 3.0), (0.5, 4.0)];
        let plain = [(0.5_f64, 1.0), (0.25, 3.0), (0.5, 4.0)];
        let (hl_t, h_t, hr_t) = estimate_age_sawtooth(&tied).unwrap();
        let (hl_p, h_p, hr_p) = estimate_age_sawtooth(&plain).unwrap();
        assert_relative_eq!(hl_t, hl_p);
        assert_relative_eq!(h_t, h_p);
        assert_relative_eq!(hr_t, hr_p);
    }

    #[test]
    fn sawtooth_identities_hold_on_any_trace() {
        let d = [
            (0.3_f64, 0.9),
            (1.2, 2.0),
            (0.4, 2.3),
            (2.0, 5.0),
            (0.7, 5.5),
        ];
        let (h_left, h, h_right) = estimate_age_sawtooth(&d).unwrap();
        assert!(h_left < h && h < h_right);
        assert_relative_eq!(h_right - h_left, 2.0 * (h - h_left), max_relative = 1e-12);
    }
}
