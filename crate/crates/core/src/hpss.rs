//! Harmonic–percussive separation by median filtering.
//!
//! Sustained tones form horizontal ridges in a magnitude spectrogram and
//! survive a median filter that runs along time; transients form vertical
//! ridges and survive one that runs along frequency. Comparing the two
//! filtered copies yields complementary masks that split the original
//! spectrogram into harmonic and percussive parts.

use ndarray::{Array2, Axis};

use crate::audio_io::AudioBuffer;
use crate::spectral::{istft, ComplexSpectrogram};
use crate::{Error, Result};

/// How the two median-enhanced copies are turned into masks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskMode {
    /// Wiener-style soft masks `H^p / (H^p + P^p)`; the two component
    /// magnitudes sum exactly to the input magnitude.
    Soft { power: f64 },
    /// Winner-takes-all masks (ties go harmonic). Components no longer sum
    /// to the input; kept behind a config flag for inspection renders.
    Binary,
}

/// Output of the separation: component magnitudes plus the masks that
/// produced them (same shape as the input spectrogram).
#[derive(Debug, Clone)]
pub struct HpssResult {
    pub harmonic_mag: Array2<f64>,
    pub percussive_mag: Array2<f64>,
    pub harmonic_mask: Array2<f64>,
    pub percussive_mask: Array2<f64>,
}

fn check_kernel(k: usize, name: &str) -> Result<()> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidParam(format!(
            "{name} must be odd and >= 3, got {k}"
        )));
    }
    Ok(())
}

/// Sliding median along `axis` with the window clipped at the edges.
fn median_filter(mag: &Array2<f64>, kernel: usize, axis: Axis) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(mag.raw_dim());
    let half = kernel / 2;
    let mut scratch: Vec<f64> = Vec::with_capacity(kernel);

    for (lane_idx, lane) in mag.lanes(axis).into_iter().enumerate() {
        let n = lane.len();
        for i in 0..n {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            scratch.clear();
            scratch.extend((lo..=hi).map(|j| lane[j]));
            let mid = scratch.len() / 2;
            let (_, med, _) = scratch.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
            let med = *med;
            match axis {
                Axis(1) => out[(lane_idx, i)] = med,
                _ => out[(i, lane_idx)] = med,
            }
        }
    }
    out
}

/// Separate an arbitrary magnitude matrix (rows = frequency bins, columns =
/// time frames). `kernel_harm` runs along time, `kernel_perc` along
/// frequency.
pub fn separate_magnitude(
    mag: &Array2<f64>,
    kernel_harm: usize,
    kernel_perc: usize,
    mode: MaskMode,
) -> Result<HpssResult> {
    if mag.is_empty() {
        return Err(Error::EmptySpectrogram);
    }
    check_kernel(kernel_harm, "kernel_harm")?;
    check_kernel(kernel_perc, "kernel_perc")?;
    if let MaskMode::Soft { power } = mode {
        if !(power > 0.0) {
            return Err(Error::InvalidParam(format!(
                "mask power must be > 0, got {power}"
            )));
        }
    }

    let harm_enh = median_filter(mag, kernel_harm, Axis(1));
    let perc_enh = median_filter(mag, kernel_perc, Axis(0));

    let mut harmonic_mask = Array2::<f64>::zeros(mag.raw_dim());
    for ((idx, h), p) in harm_enh.indexed_iter().zip(perc_enh.iter()) {
        harmonic_mask[idx] = match mode {
            MaskMode::Soft { power } => {
                let hp = h.powf(power);
                let pp = p.powf(power);
                let denom = hp + pp;
                if denom > 0.0 {
                    hp / denom
                } else {
                    0.5
                }
            }
            MaskMode::Binary => {
                if h >= p {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
    let percussive_mask = harmonic_mask.mapv(|m| 1.0 - m);
    let harmonic_mag = mag * &harmonic_mask;
    let percussive_mag = mag * &percussive_mask;

    Ok(HpssResult {
        harmonic_mag,
        percussive_mag,
        harmonic_mask,
        percussive_mask,
    })
}

/// Harmonic–percussive separation of a complex spectrogram with soft masks.
pub fn hpss(
    spec: &ComplexSpectrogram,
    kernel_harm: usize,
    kernel_perc: usize,
    power: f64,
) -> Result<HpssResult> {
    separate_magnitude(
        &spec.magnitude(),
        kernel_harm,
        kernel_perc,
        MaskMode::Soft { power },
    )
}

/// Resynthesize one component as audio: weight the complex bins by the mask
/// and invert. Output length equals the analyzed signal's length.
pub fn component_audio(spec: &ComplexSpectrogram, mask: &Array2<f64>) -> Result<AudioBuffer> {
    if mask.raw_dim() != spec.bins.raw_dim() {
        return Err(Error::ShapeMismatch(format!(
            "mask is {:?}, spectrogram is {:?}",
            mask.shape(),
            spec.bins.shape()
        )));
    }
    let mut weighted = spec.clone();
    for (idx, w) in mask.indexed_iter() {
        weighted.bins[idx] *= *w;
    }
    istft(&weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{stft, Window};
    use proptest::prelude::*;

    const KERNEL: usize = 31;
    const POWER: f64 = 2.0;

    fn tone(freq: f64, sr: u32, secs: f64) -> Vec<f64> {
        let n = (sr as f64 * secs) as usize;
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin() * 0.5)
            .collect()
    }

    /// 10 ms noise bursts at the given rate (Hz).
    fn click_train(rate_hz: f64, sr: u32, secs: f64) -> Vec<f64> {
        let n = (sr as f64 * secs) as usize;
        let burst = (0.01 * sr as f64) as usize;
        let period = (sr as f64 / rate_hz) as usize;
        let mut state = 0x853C49E6748FEA9Bu64;
        let mut s = vec![0.0; n];
        let mut pos = 0;
        while pos + burst < n {
            for v in s.iter_mut().skip(pos).take(burst) {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                *v = 0.9 * (((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5) * 2.0;
            }
            pos += period;
        }
        s
    }

    fn spec_of(samples: Vec<f64>) -> ComplexSpectrogram {
        let buf = AudioBuffer::new(samples, 22050).unwrap();
        stft(&buf, 2048, 512, Window::Hann).unwrap()
    }

    fn energy(m: &Array2<f64>) -> f64 {
        m.iter().map(|v| v * v).sum()
    }

    fn harmonic_fraction(r: &HpssResult) -> f64 {
        let h = energy(&r.harmonic_mag);
        let p = energy(&r.percussive_mag);
        h / (h + p)
    }

    #[test]
    fn sine_separates_harmonic() {
        let r = hpss(&spec_of(tone(440.0, 22050, 3.0)), KERNEL, KERNEL, POWER).unwrap();
        let frac = harmonic_fraction(&r);
        assert!(frac >= 0.90, "harmonic fraction {frac}");
    }

    #[test]
    fn clicks_separate_percussive() {
        let r = hpss(
            &spec_of(click_train(2.0, 22050, 3.0)),
            KERNEL,
            KERNEL,
            POWER,
        )
        .unwrap();
        let frac = 1.0 - harmonic_fraction(&r);
        assert!(frac >= 0.80, "percussive fraction {frac}");
    }

    #[test]
    fn silence_splits_half_half() {
        let r = hpss(&spec_of(vec![0.0; 3 * 22050]), KERNEL, KERNEL, POWER).unwrap();
        assert!(r.harmonic_mag.iter().all(|&v| v == 0.0));
        assert!(r.percussive_mag.iter().all(|&v| v == 0.0));
        assert!(r.harmonic_mask.iter().all(|&m| m == 0.5));
        assert!(r.percussive_mask.iter().all(|&m| m == 0.5));
    }

    #[test]
    fn masks_complementary_and_magnitudes_sum() {
        let spec = spec_of(
            tone(440.0, 22050, 2.0)
                .iter()
                .zip(click_train(2.0, 22050, 2.0))
                .map(|(a, b)| a + b)
                .collect(),
        );
        let mag = spec.magnitude();
        let r = hpss(&spec, KERNEL, KERNEL, POWER).unwrap();
        for (idx, m) in r.harmonic_mask.indexed_iter() {
            let sum = m + r.percussive_mask[idx];
            assert!((sum - 1.0).abs() < 1e-6);
            assert!((0.0..=1.0).contains(m));
            let mag_sum = r.harmonic_mag[idx] + r.percussive_mag[idx];
            assert!((mag_sum - mag[idx]).abs() < 1e-5);
        }
    }

    #[test]
    fn swapped_kernel_roles_invert_ratios() {
        let mixture: Vec<f64> = tone(440.0, 22050, 2.0)
            .iter()
            .zip(click_train(2.0, 22050, 2.0))
            .map(|(a, b)| a + b)
            .collect();
        let mag = spec_of(mixture).magnitude();
        let normal =
            separate_magnitude(&mag, KERNEL, KERNEL, MaskMode::Soft { power: POWER }).unwrap();
        // Transposing the spectrogram swaps which axis each median filter
        // runs along, i.e. swaps the kernel roles.
        let swapped = separate_magnitude(
            &mag.t().to_owned(),
            KERNEL,
            KERNEL,
            MaskMode::Soft { power: POWER },
        )
        .unwrap();
        let f_normal = harmonic_fraction(&normal);
        let f_swapped = harmonic_fraction(&swapped);
        assert!(
            f_normal > 0.5 && f_swapped < 0.5,
            "expected ratio inversion, got {f_normal} vs {f_swapped}"
        );
    }

    #[test]
    fn separation_idempotent_on_harmonic_component() {
        let r = hpss(&spec_of(tone(440.0, 22050, 2.0)), KERNEL, KERNEL, POWER).unwrap();
        let again = separate_magnitude(
            &r.harmonic_mag,
            KERNEL,
            KERNEL,
            MaskMode::Soft { power: POWER },
        )
        .unwrap();
        let frac = harmonic_fraction(&again);
        assert!(frac >= 0.90, "second-pass harmonic fraction {frac}");
    }

    #[test]
    fn binary_masks_are_zero_or_one() {
        let spec = spec_of(click_train(2.0, 22050, 1.0));
        let r = separate_magnitude(&spec.magnitude(), KERNEL, KERNEL, MaskMode::Binary).unwrap();
        assert!(r.harmonic_mask.iter().all(|&m| m == 0.0 || m == 1.0));
    }

    #[test]
    fn rejects_even_or_tiny_kernels() {
        let spec = spec_of(vec![0.1; 22050]);
        assert!(hpss(&spec, 30, 31, 2.0).is_err());
        assert!(hpss(&spec, 31, 1, 2.0).is_err());
        assert!(hpss(&spec, 31, 31, 0.0).is_err());
    }

    #[test]
    fn identity_mask_reconstructs_audio() {
        let buf = AudioBuffer::new(tone(440.0, 22050, 1.0), 22050).unwrap();
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        let ones = Array2::from_elem((spec.n_bins(), spec.n_frames()), 1.0);
        let back = component_audio(&spec, &ones).unwrap();
        assert_eq!(back.samples.len(), buf.samples.len());
        let rms = (buf
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / buf.samples.len() as f64)
            .sqrt();
        assert!(rms < 1e-3, "identity-mask RMS error {rms}");
    }

    #[test]
    fn zero_mask_gives_silence() {
        let buf = AudioBuffer::new(tone(440.0, 22050, 1.0), 22050).unwrap();
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        let zeros = Array2::zeros((spec.n_bins(), spec.n_frames()));
        let back = component_audio(&spec, &zeros).unwrap();
        assert!(back.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn component_audio_rejects_shape_mismatch() {
        let buf = AudioBuffer::new(tone(440.0, 22050, 1.0), 22050).unwrap();
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        let bad = Array2::zeros((3, 3));
        assert!(matches!(
            component_audio(&spec, &bad),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn harmonic_component_tracks_clean_sine() {
        let sr = 22050;
        let clean = tone(440.0, sr, 2.0);
        let mixture: Vec<f64> = clean
            .iter()
            .zip(click_train(2.0, sr, 2.0))
            .map(|(a, b)| a + b)
            .collect();
        let buf = AudioBuffer::new(
            mixture.iter().map(|s| s * 0.45).collect(), // keep in range
            sr,
        )
        .unwrap();
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        let r = hpss(&spec, KERNEL, KERNEL, POWER).unwrap();
        let harm = component_audio(&spec, &r.harmonic_mask).unwrap();

        let n = clean.len();
        let mean_a = harm.samples.iter().sum::<f64>() / n as f64;
        let mean_b = clean.iter().sum::<f64>() / n as f64;
        let mut cov = 0.0;
        let mut var_a = 0.0;
        let mut var_b = 0.0;
        for (a, b) in harm.samples.iter().zip(&clean) {
            cov += (a - mean_a) * (b - mean_b);
            var_a += (a - mean_a).powi(2);
            var_b += (b - mean_b).powi(2);
        }
        let corr = cov / (var_a.sqrt() * var_b.sqrt());
        assert!(corr > 0.9, "correlation with clean sine {corr}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn masks_complementary_on_random_input(seed in 0u64..10_000) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(99);
            let mut next = || {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let mag = Array2::from_shape_fn((64, 50), |_| next());
            let r = separate_magnitude(&mag, 5, 5, MaskMode::Soft { power: 2.0 }).unwrap();
            for (idx, m) in r.harmonic_mask.indexed_iter() {
                prop_assert!((m + r.percussive_mask[idx] - 1.0).abs() < 1e-6);
                prop_assert!((0.0..=1.0).contains(m));
            }
        }
    }
}
