//! Short-time Fourier analysis: STFT/ISTFT, mel spectrograms and the onset
//! strength envelope that drives event detection.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio_io::AudioBuffer;
use crate::{Error, Result};

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Periodic Hann window; satisfies the overlap-add constraint at
    /// hop = n_fft/4.
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }
}

/// One-sided complex STFT. `bins` is (n_fft/2 + 1) rows by n_frames columns;
/// frame `k` is centred on sample `k * hop`.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub bins: Array2<Complex64>,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
    /// Length of the signal the spectrogram was computed from; needed to
    /// reconstruct exactly that many samples.
    pub n_samples: usize,
    pub window: Window,
}

impl ComplexSpectrogram {
    pub fn n_bins(&self) -> usize {
        self.bins.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.bins.ncols()
    }

    /// Time (seconds) of frame `k`'s centre.
    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 * self.hop as f64 / self.sample_rate as f64
    }

    /// Width of one FFT bin in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.n_fft as f64
    }

    /// Magnitude matrix |bins|.
    pub fn magnitude(&self) -> Array2<f64> {
        self.bins.mapv(|c| c.norm())
    }
}

fn check_stft_params(n_fft: usize, hop: usize) -> Result<()> {
    if !n_fft.is_power_of_two() || n_fft < 2 {
        return Err(Error::InvalidParam(format!(
            "n_fft must be a power of two >= 2, got {n_fft}"
        )));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::InvalidParam(format!(
            "hop must satisfy 0 < hop <= n_fft, got {hop}"
        )));
    }
    Ok(())
}

/// Symmetric reflection (no edge repeat) of index `i` into `0..n`.
fn reflect(i: isize, n: usize) -> usize {
    debug_assert!(n > 1);
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Centred STFT with reflect padding. Frame count is `1 + floor(n / hop)`.
pub fn stft(
    buf: &AudioBuffer,
    n_fft: usize,
    hop: usize,
    window: Window,
) -> Result<ComplexSpectrogram> {
    check_stft_params(n_fft, hop)?;
    let n = buf.samples.len();
    if n < n_fft {
        return Err(Error::TooShort {
            needed: n_fft,
            got: n,
        });
    }

    let coeffs = window.coefficients(n_fft);
    let n_bins = n_fft / 2 + 1;
    let n_frames = 1 + n / hop;
    let half = (n_fft / 2) as isize;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut bins = Array2::<Complex64>::zeros((n_bins, n_frames));
    let mut scratch = vec![Complex64::new(0.0, 0.0); n_fft];

    for frame in 0..n_frames {
        let start = frame as isize * hop as isize - half;
        for (i, slot) in scratch.iter_mut().enumerate() {
            let idx = reflect(start + i as isize, n);
            *slot = Complex64::new(buf.samples[idx] * coeffs[i], 0.0);
        }
        fft.process(&mut scratch);
        for (b, &v) in scratch.iter().take(n_bins).enumerate() {
            bins[(b, frame)] = v;
        }
    }

    Ok(ComplexSpectrogram {
        bins,
        n_fft,
        hop,
        sample_rate: buf.sample_rate,
        n_samples: n,
        window,
    })
}

/// Inverse STFT by weighted overlap-add; with an unmodified spectrogram this
/// reconstructs the original samples to near machine precision.
pub fn istft(spec: &ComplexSpectrogram) -> Result<AudioBuffer> {
    if spec.bins.is_empty() {
        return Err(Error::EmptySpectrogram);
    }
    let n_fft = spec.n_fft;
    check_stft_params(n_fft, spec.hop)?;
    if spec.n_bins() != n_fft / 2 + 1 {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram has {} rows, expected {}",
            spec.n_bins(),
            n_fft / 2 + 1
        )));
    }

    let coeffs = spec.window.coefficients(n_fft);
    let half = n_fft / 2;
    let padded_len = spec.n_samples + n_fft + spec.hop * spec.n_frames();
    let mut acc = vec![0.0f64; padded_len];
    let mut norm = vec![0.0f64; padded_len];

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n_fft);
    let mut scratch = vec![Complex64::new(0.0, 0.0); n_fft];

    for frame in 0..spec.n_frames() {
        // Rebuild the full spectrum from the one-sided half via Hermitian
        // symmetry.
        for (b, s) in scratch.iter_mut().enumerate() {
            *s = if b <= half {
                spec.bins[(b, frame)]
            } else {
                spec.bins[(n_fft - b, frame)].conj()
            };
        }
        ifft.process(&mut scratch);
        let start = frame * spec.hop;
        for i in 0..n_fft {
            let t = scratch[i].re / n_fft as f64;
            acc[start + i] += t * coeffs[i];
            norm[start + i] += coeffs[i] * coeffs[i];
        }
    }

    let samples = (0..spec.n_samples)
        .map(|i| {
            let j = i + half;
            if norm[j] > 1e-12 {
                acc[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect();

    AudioBuffer::new(samples, spec.sample_rate)
}

/// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
fn hz_to_mel(f: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;
    if f >= MIN_LOG_HZ {
        MIN_LOG_MEL + (f / MIN_LOG_HZ).ln() / (6.4f64.ln() / 27.0)
    } else {
        f / F_SP
    }
}

fn mel_to_hz(m: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;
    if m >= MIN_LOG_MEL {
        MIN_LOG_HZ * ((6.4f64.ln() / 27.0) * (m - MIN_LOG_MEL)).exp()
    } else {
        m * F_SP
    }
}

/// Triangular mel filterbank, shape (n_mels, n_fft/2 + 1), with each filter
/// scaled to unit area over its band.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<Array2<f64>> {
    check_stft_params(n_fft, 1)?;
    if n_mels == 0 {
        return Err(Error::InvalidParam("n_mels must be > 0".into()));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(0.0..nyquist).contains(&fmin) || fmax <= fmin || fmax > nyquist {
        return Err(Error::InvalidParam(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got fmin={fmin} fmax={fmax}"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate as f64 / n_fft as f64)
        .collect();

    let mut fb = Array2::<f64>::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let enorm = 2.0 / (hi - lo);
        for (k, &f) in bin_hz.iter().enumerate() {
            let up = (f - lo) / (mid - lo);
            let down = (hi - f) / (hi - mid);
            let w = up.min(down).max(0.0);
            fb[(m, k)] = w * enorm;
        }
    }

    for m in 0..n_mels {
        if fb.row(m).sum() <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "mel filter {m} covers no FFT bin; lower n_mels or raise n_fft"
            )));
        }
    }
    Ok(fb)
}

/// Mel power spectrogram, optionally normalised by its global maximum
/// (silence stays all-zero). `bands` is (n_mels, n_frames).
#[derive(Debug, Clone)]
pub struct MelSpectrogram {
    pub bands: Array2<f64>,
    pub hop: usize,
    pub sample_rate: u32,
    pub normalized: bool,
}

impl MelSpectrogram {
    pub fn n_mels(&self) -> usize {
        self.bands.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.bands.ncols()
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 * self.hop as f64 / self.sample_rate as f64
    }

    pub fn frame_times_s(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|k| self.frame_time(k)).collect()
    }
}

/// Project a power spectrogram (|X|^2, bins x frames) onto a mel filterbank.
pub fn mel_from_power(
    power: &Array2<f64>,
    fb: &Array2<f64>,
    hop: usize,
    sample_rate: u32,
    normalize: bool,
) -> Result<MelSpectrogram> {
    if fb.ncols() != power.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "filterbank expects {} bins, spectrogram has {}",
            fb.ncols(),
            power.nrows()
        )));
    }
    let mut bands = fb.dot(power);
    if normalize {
        let max = bands.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 {
            bands.mapv_inplace(|v| v / max);
        }
    }
    Ok(MelSpectrogram {
        bands,
        hop,
        sample_rate,
        normalized: normalize,
    })
}

/// Mel spectrogram of a complex STFT (power domain).
pub fn mel_spectrogram(
    spec: &ComplexSpectrogram,
    fb: &Array2<f64>,
    normalize: bool,
) -> Result<MelSpectrogram> {
    let power = spec.bins.mapv(|c| c.norm_sqr());
    mel_from_power(&power, fb, spec.hop, spec.sample_rate, normalize)
}

/// Per-frame onset strength, aligned with the spectrogram frames.
#[derive(Debug, Clone)]
pub struct OnsetEnvelope {
    pub strength: Vec<f64>,
    pub hop: usize,
    pub sample_rate: u32,
}

impl OnsetEnvelope {
    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 * self.hop as f64 / self.sample_rate as f64
    }

    pub fn frame_times_s(&self) -> Vec<f64> {
        (0..self.strength.len())
            .map(|k| self.frame_time(k))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.strength.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strength.is_empty()
    }
}

/// Spectral flux on the log-compressed mel spectrogram: the mean positive
/// band-wise increase between consecutive frames. The first frame has no
/// predecessor and is defined as 0.
pub fn onset_strength(mel: &MelSpectrogram) -> Result<OnsetEnvelope> {
    if mel.n_frames() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: mel.n_frames(),
        });
    }
    let log = mel.bands.mapv(f64::ln_1p);
    let n_mels = log.nrows() as f64;
    let mut strength = Vec::with_capacity(log.ncols());
    strength.push(0.0);
    for t in 1..log.ncols() {
        let flux: f64 = log
            .column(t)
            .iter()
            .zip(log.column(t - 1).iter())
            .map(|(cur, prev)| (cur - prev).max(0.0))
            .sum();
        strength.push(flux / n_mels);
    }
    Ok(OnsetEnvelope {
        strength,
        hop: mel.hop,
        sample_rate: mel.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(freq: f64, sr: u32, secs: f64, amp: f64) -> AudioBuffer {
        let n = (sr as f64 * secs) as usize;
        let samples = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin() * amp)
            .collect();
        AudioBuffer::new(samples, sr).unwrap()
    }

    /// Deterministic pseudo-random signal (LCG) for round-trip tests.
    fn noise(n: usize, sr: u32) -> AudioBuffer {
        let mut state = 0x2545F4914F6CDD1Du64;
        let samples = (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        AudioBuffer::new(samples, sr).unwrap()
    }

    fn full_mel(buf: &AudioBuffer, n_fft: usize, hop: usize, n_mels: usize) -> MelSpectrogram {
        let spec = stft(buf, n_fft, hop, Window::Hann).unwrap();
        let fb = mel_filterbank(
            n_mels,
            n_fft,
            buf.sample_rate,
            0.0,
            buf.sample_rate as f64 / 2.0,
        )
        .unwrap();
        mel_spectrogram(&spec, &fb, true).unwrap()
    }

    #[test]
    fn stft_frame_count() {
        let buf = AudioBuffer::new(vec![0.1; 22050], 22050).unwrap();
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        assert_eq!(spec.n_frames(), 1 + 22050 / 512); // 44
        assert_eq!(spec.n_bins(), 1025);
    }

    #[test]
    fn stft_rejects_short_buffer() {
        let buf = AudioBuffer::new(vec![0.1; 100], 22050).unwrap();
        assert!(matches!(
            stft(&buf, 2048, 512, Window::Hann),
            Err(Error::TooShort {
                needed: 2048,
                got: 100
            })
        ));
    }

    #[test]
    fn stft_dc_magnitude_is_window_sum() {
        let buf = AudioBuffer::new(vec![1.0; 8192], 22050).unwrap();
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        // Interior frame: DC bin magnitude equals the window sum (1024 for
        // a periodic Hann of length 2048).
        let mid = spec.n_frames() / 2;
        assert!((spec.bins[(0, mid)].norm() - 1024.0).abs() < 1e-6);
        // A constant frame sees the window's own DFT: a periodic Hann has
        // exactly three nonzero bins, N/2 at DC and N/4 at bin 1.
        assert!((spec.bins[(1, mid)].norm() - 512.0).abs() < 1e-6);
        let rest: f64 = (2..spec.n_bins())
            .map(|b| spec.bins[(b, mid)].norm())
            .fold(0.0, f64::max);
        assert!(rest < 1e-6);
    }

    #[test]
    fn stft_peak_bin_matches_tone() {
        let buf = tone(440.0, 22050, 1.0, 0.5);
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        for frame in [spec.n_frames() / 3, spec.n_frames() / 2] {
            let peak = spec
                .bins
                .column(frame)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                .unwrap()
                .0;
            assert_eq!(peak, (440.0 / spec.bin_hz()).round() as usize); // bin 41
        }
    }

    #[test]
    fn stft_energy_scales_with_gain_squared() {
        let base = noise(8192, 22050);
        let doubled =
            AudioBuffer::new(base.samples.iter().map(|s| s * 2.0).collect(), 22050).unwrap();
        let e1: f64 = stft(&base, 1024, 256, Window::Hann)
            .unwrap()
            .bins
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        let e2: f64 = stft(&doubled, 1024, 256, Window::Hann)
            .unwrap()
            .bins
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        assert!(((e2 / e1) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn istft_round_trip() {
        let buf = noise(10_000, 22050);
        let spec = stft(&buf, 1024, 256, Window::Hann).unwrap();
        let back = istft(&spec).unwrap();
        assert_eq!(back.samples.len(), buf.samples.len());
        let max_err = buf
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-9, "round-trip error {max_err}");
    }

    #[test]
    fn mel_filterbank_shape_and_positivity() {
        let fb = mel_filterbank(128, 2048, 22050, 0.0, 11025.0).unwrap();
        assert_eq!(fb.shape(), &[128, 1025]);
        for m in 0..128 {
            assert!(fb.row(m).sum() > 0.0, "filter {m} is empty");
        }
        assert!(fb.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn mel_filterbank_rows_unimodal() {
        let fb = mel_filterbank(64, 2048, 22050, 0.0, 11025.0).unwrap();
        for m in 0..64 {
            let row: Vec<f64> = fb.row(m).to_vec();
            let peak = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            // Nondecreasing up to the peak, nonincreasing after.
            assert!(row[..=peak].windows(2).all(|w| w[0] <= w[1] + 1e-12));
            assert!(row[peak..].windows(2).all(|w| w[0] + 1e-12 >= w[1]));
        }
    }

    #[test]
    fn mel_filterbank_rejects_bad_range() {
        assert!(mel_filterbank(128, 2048, 22050, 500.0, 400.0).is_err());
        assert!(mel_filterbank(128, 2048, 22050, 0.0, 20000.0).is_err());
    }

    #[test]
    fn mel_spectrogram_unit_peak() {
        let mel = full_mel(&tone(440.0, 22050, 1.0, 0.5), 2048, 512, 128);
        let max = mel.bands.iter().cloned().fold(0.0f64, f64::max);
        assert_eq!(max, 1.0);
        assert!(mel.bands.iter().all(|&v| v >= 0.0));
        assert!(mel.normalized);
    }

    #[test]
    fn mel_spectrogram_of_silence_is_zero() {
        let buf = AudioBuffer::new(vec![0.0; 22050], 22050).unwrap();
        let mel = full_mel(&buf, 2048, 512, 128);
        assert!(mel.bands.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mel_spectrogram_rejects_mismatched_filterbank() {
        let buf = tone(440.0, 22050, 0.5, 0.5);
        let spec = stft(&buf, 2048, 512, Window::Hann).unwrap();
        let fb = mel_filterbank(32, 1024, 22050, 0.0, 11025.0).unwrap();
        assert!(matches!(
            mel_spectrogram(&spec, &fb, true),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn mel_white_noise_all_bands_positive() {
        let mel = full_mel(&noise(22050, 22050), 2048, 512, 128);
        for m in 0..mel.n_mels() {
            assert!(mel.bands.row(m).sum() > 0.0, "band {m} silent on noise");
        }
    }

    #[test]
    fn mel_sweep_band_argmax_nondecreasing() {
        // Linear frequency sweep 200 Hz -> 8 kHz over 2 s.
        let sr = 22050u32;
        let n = 2 * sr as usize;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / sr as f64;
                let f0 = 200.0;
                let f1 = 8000.0;
                let phase = 2.0 * std::f64::consts::PI * (f0 * t + (f1 - f0) * t * t / 4.0);
                0.5 * phase.sin()
            })
            .collect();
        let mel = full_mel(&AudioBuffer::new(samples, sr).unwrap(), 2048, 512, 64);
        let argmax: Vec<usize> = (0..mel.n_frames())
            .map(|t| {
                mel.bands
                    .column(t)
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0
            })
            .collect();
        // Ignore the reflected boundary frames at both ends.
        let interior = &argmax[2..argmax.len() - 2];
        assert!(
            interior.windows(2).all(|w| w[1] + 2 >= w[0]),
            "sweep argmax should be (loosely) nondecreasing: {interior:?}"
        );
        assert!(interior.last().unwrap() > interior.first().unwrap());
    }

    #[test]
    fn onset_silence_is_flat() {
        let buf = AudioBuffer::new(vec![0.0; 22050], 22050).unwrap();
        let onset = onset_strength(&full_mel(&buf, 2048, 512, 128)).unwrap();
        assert!(onset.strength.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn onset_rejects_single_frame() {
        let mel = MelSpectrogram {
            bands: Array2::zeros((4, 1)),
            hop: 512,
            sample_rate: 22050,
            normalized: true,
        };
        assert!(matches!(
            onset_strength(&mel),
            Err(Error::TooShort { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn onset_detects_click() {
        // One click in the middle of a second of silence.
        let mut samples = vec![0.0; 22050];
        samples[11025] = 1.0;
        let buf = AudioBuffer::new(samples, 22050).unwrap();
        let onset = onset_strength(&full_mel(&buf, 2048, 512, 128)).unwrap();
        let peak_frame = onset
            .strength
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let click_frame = 11025 / 512; // 21
        assert!(
            (peak_frame as i64 - click_frame as i64).abs() <= 2,
            "onset peak at frame {peak_frame}, click at {click_frame}"
        );
        assert_eq!(onset.strength[0], 0.0);
    }

    #[test]
    fn onset_steady_tone_is_quiet() {
        // Interior flux of a sustained tone stays below 1% of a click's peak.
        let steady =
            onset_strength(&full_mel(&tone(440.0, 22050, 1.0, 0.5), 2048, 512, 128)).unwrap();
        let mut clicky = vec![0.0; 22050];
        clicky[11025] = 1.0;
        let click = onset_strength(&full_mel(
            &AudioBuffer::new(clicky, 22050).unwrap(),
            2048,
            512,
            128,
        ))
        .unwrap();
        let click_peak = click.strength.iter().cloned().fold(0.0f64, f64::max);
        let steady_interior = steady.strength[5..steady.len() - 5]
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        assert!(
            steady_interior < 0.01 * click_peak,
            "steady {steady_interior} vs click {click_peak}"
        );
    }

    #[test]
    fn onset_peak_location_gain_invariant() {
        let mut samples = vec![0.0; 22050];
        samples[8000] = 0.4;
        let buf = AudioBuffer::new(samples.clone(), 22050).unwrap();
        let gained = AudioBuffer::new(samples.iter().map(|s| s * 2.0).collect(), 22050).unwrap();
        let argmax = |b: &AudioBuffer| {
            onset_strength(&full_mel(b, 2048, 512, 128))
                .unwrap()
                .strength
                .iter()
                .enumerate()
                .max_by(|a, c| a.1.partial_cmp(c.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(&buf), argmax(&gained));
    }

    proptest! {
        #[test]
        fn frame_count_formula(n in 2048usize..30_000, hop_pow in 6u32..10) {
            let hop = 1usize << hop_pow;
            let buf = AudioBuffer::new(vec![0.01; n], 22050).unwrap();
            let spec = stft(&buf, 2048, hop, Window::Hann).unwrap();
            prop_assert_eq!(spec.n_frames(), 1 + n / hop);
        }

        #[test]
        fn onset_values_never_negative(seed in 0u64..1000) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let samples: Vec<f64> = (0..4096)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            let buf = AudioBuffer::new(samples, 22050).unwrap();
            let spec = stft(&buf, 1024, 256, Window::Hann).unwrap();
            let fb = mel_filterbank(64, 1024, 22050, 0.0, 11025.0).unwrap();
            let mel = mel_spectrogram(&spec, &fb, true).unwrap();
            let onset = onset_strength(&mel).unwrap();
            prop_assert_eq!(onset.strength[0], 0.0);
            prop_assert!(onset.strength.iter().all(|&v| v >= 0.0));
            prop_assert_eq!(onset.strength.len(), spec.n_frames());
        }
    }
}
