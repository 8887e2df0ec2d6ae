use num_complex::Complex64;
use rustfft::FftPlanner;

use super::series::TimeSeries;
use crate::ehrenfest::MomentKey;

/// Minimum trace length accepted by [`dominant_frequency`].
pub const MIN_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooShort(usize),
    #[error("trace has no oscillating component")]
    ZeroTrace,
    #[error("sample spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("moment <{0}> is not in the series")]
    Untracked(String),
}

/// Angular frequency of the strongest spectral peak of a real trace sampled every `dt`.
///
/// The trace is mean-subtracted and Hann windowed; the DC bin is excluded,
/// ties go to the lower bin and the peak is refined by a parabola through
/// the magnitudes of the three bins around it.
pub fn dominant_frequency(trace: &[f64], dt: f64) -> Result<f64, SpectrumError> {
    let n = trace.len();
    if n < MIN_SAMPLES {
        return Err(SpectrumError::TooShort(n));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SpectrumError::BadSpacing(dt));
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let scale = trace.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if trace.iter().all(|x| (x - mean).abs() <= 1e-14 * scale) {
        return Err(SpectrumError::ZeroTrace);
    }
    let mut buf: Vec<Complex64> = trace
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            Complex64::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..=n / 2].iter().map(|z| z.norm()).collect();
    let mut peak = 1;
    for k in 2..mag.len() {
        if mag[k] > mag[peak] {
            peak = k;
        }
    }
    if !(mag[peak] > 0.0) {
        return Err(SpectrumError::ZeroTrace);
    }
    let mut offset = 0.0;
    if peak + 1 < mag.len() {
        let (l, c, r) = (mag[peak - 1], mag[peak], mag[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        }
    }
    let omega = 2.0 * std::f64::consts::PI * (peak as f64 + offset) / (n as f64 * dt);
    Ok(omega.clamp(0.0, std::f64::consts::PI / dt))
}

/// [`dominant_frequency`] of `Re⟨key⟩(t)`, proportional to the position
/// trace when `key` is an annihilator.
pub fn dominant_frequency_of(series: &TimeSeries, key: &MomentKey) -> Result<f64, SpectrumError> {
    let col = series.column(key).ok_or_else(|| SpectrumError::Untracked(key.to_string()))?;
    let trace: Vec<f64> = col.iter().map(|z| z.re).collect();
    dominant_frequency(&trace, series.grid().dt.abs())
}

/// Magnitude of the analytic signal of a real trace (FFT-based Hilbert transform).
pub fn hilbert_envelope(trace: &[f64]) -> Vec<f64> {
    let n = trace.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = trace.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    // keep DC (and Nyquist for even n), double positive frequencies, drop negative ones
    for (k, z) in buf.iter_mut().enumerate() {
        let weight = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= weight;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.norm() / n as f64).collect()
}

/// First time the envelope, having fallen below `decay · envelope[0]`,
/// climbs back above `revive · envelope[0]`.
pub fn revival_time(times: &[f64], envelope: &[f64], decay: f64, revive: f64) -> Option<f64> {
    let reference = *envelope.first()?;
    let fell = envelope.iter().position(|&e| e < decay * reference)?;
    let back = envelope[fell..].iter().position(|&e| e > revive * reference)?;
    times.get(fell + back).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tone() {
        let w0 = 1.0;
        let n = 4096;
        let dt = 100.0 * 2.0 * std::f64::consts::PI / w0 / n as f64;
        let trace: Vec<f64> = (0..n).map(|k| (w0 * k as f64 * dt).cos()).collect();
        let w = dominant_frequency(&trace, dt).unwrap();
        let bin = 2.0 * std::f64::consts::PI / (n as f64 * dt);
        assert!((w - w0).abs() < 0.05 * bin, "{w}");
    }

    #[test]
    fn off_bin_tone_is_refined() {
        let n = 1000;
        let dt = 0.3;
        let w0 = 1.2345;
        let trace: Vec<f64> = (0..n).map(|k| (w0 * k as f64 * dt + 0.4).sin() + 0.5).collect();
        let w = dominant_frequency(&trace, dt).unwrap();
        let bin = 2.0 * std::f64::consts::PI / (n as f64 * dt);
        assert!((w - w0).abs() < 0.2 * bin, "{w} vs {w0}");
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(dominant_frequency(&[1.0; 10], 0.1), Err(SpectrumError::TooShort(10)));
        assert_eq!(dominant_frequency(&[2.0; 300], 0.1), Err(SpectrumError::ZeroTrace));
        assert!(matches!(dominant_frequency(&[0.0; 300], -1.0), Err(SpectrumError::BadSpacing(_))));
    }

    #[test]
    fn envelope_of_modulated_tone() {
        let n = 2000;
        let dt = 0.05;
        let trace: Vec<f64> =
            (0..n).map(|k| k as f64 * dt).map(|t| (1.0 + 0.5 * (0.05 * t).cos()) * (3.0 * t).cos()).collect();
        let env = hilbert_envelope(&trace);
        for k in n / 10..9 * n / 10 {
            let t = k as f64 * dt;
            assert!((env[k] - (1.0 + 0.5 * (0.05 * t).cos())).abs() < 0.02, "t = {t}: {}", env[k]);
        }
    }

    #[test]
    fn revival_needs_decay_first() {
        let t: Vec<f64> = (0..6).map(f64::from).collect();
        assert_eq!(revival_time(&t, &[1.0, 0.6, 0.2, 0.4, 0.7, 0.9], 0.25, 0.5), Some(4.0));
        assert_eq!(revival_time(&t, &[1.0, 0.9, 0.8, 0.7, 0.6, 0.5], 0.25, 0.5), None);
    }
}
