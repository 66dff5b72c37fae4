//! Low-level numeric primitives: zero-phase IIR filtering, FFT-based
//! resampling, and standard scaling.
//!
//! All functions are pure and safe to call concurrently.

use std::cell::RefCell;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default powerline interference frequency (Hz). European grid.
pub const DEFAULT_POWERLINE_HZ: f64 = 50.0;

/// Quality factor of the powerline notch.
pub const NOTCH_Q: f64 = 30.0;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One normalized second-order section: `b` numerator, `a = [a1, a2]`
/// denominator with `a0 = 1`.
#[derive(Debug, Clone, Copy)]
struct Sos {
    b: [f64; 3],
    a: [f64; 2],
}

impl Sos {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }
}

/// Butterworth high-pass as cascaded second-order sections.
///
/// Analog prototype poles are placed analytically, transformed low-pass to
/// high-pass at the pre-warped cutoff, and mapped with the bilinear
/// transform. Gain is matched to 1 at Nyquist.
fn butter_highpass_sos(order: usize, cutoff: f64, fs: f64) -> Vec<Sos> {
    let n = order;
    let w0 = 2.0 * fs * (std::f64::consts::PI * cutoff / fs).tan();
    let two_fs = Complex::new(2.0 * fs, 0.0);

    // prototype poles -> high-pass poles -> z-plane
    let mut zpoles = Vec::with_capacity(n);
    for k in 0..n {
        let theta = std::f64::consts::PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let proto = Complex::from_polar(1.0, theta);
        let hp = Complex::new(w0, 0.0) / proto;
        zpoles.push((two_fs + hp) / (two_fs - hp));
    }

    // all n zeros sit at z = 1; match |H| = 1 at z = -1
    let mut g = Complex::new(1.0, 0.0);
    for p in &zpoles {
        g *= Complex::new(-1.0, 0.0) - p;
    }
    let gain = (g / Complex::new((-2.0f64).powi(n as i32), 0.0)).re;

    let mut sections = Vec::new();
    for p in zpoles.iter().filter(|p| p.im.abs() < 1e-12) {
        sections.push(Sos {
            b: [1.0, -1.0, 0.0],
            a: [-p.re, 0.0],
        });
    }
    for p in zpoles.iter().filter(|p| p.im > 1e-12) {
        sections.push(Sos {
            b: [1.0, -2.0, 1.0],
            a: [-2.0 * p.re, p.norm_sqr()],
        });
    }
    for b in sections[0].b.iter_mut() {
        *b *= gain;
    }
    sections
}

/// Second-order notch with zeros on the unit circle at `f0` and bandwidth
/// `f0 / q` (pre-warped).
fn notch_sos(f0: f64, fs: f64, q: f64) -> Sos {
    let w0 = 2.0 * std::f64::consts::PI * f0 / fs;
    let beta = (w0 / (2.0 * q)).tan();
    let gain = 1.0 / (1.0 + beta);
    let c = w0.cos();
    Sos {
        b: [gain, -2.0 * gain * c, gain],
        a: [-2.0 * gain * c, 2.0 * gain - 1.0],
    }
}

/// Run one section over `x` (direct form II transposed) with initial state.
fn sosfilt_section(sec: &Sos, x: &mut [f64], zi: [f64; 2]) {
    let [b0, b1, b2] = sec.b;
    let [a1, a2] = sec.a;
    let (mut s1, mut s2) = (zi[0], zi[1]);
    for v in x.iter_mut() {
        let xi = *v;
        let y = b0 * xi + s1;
        s1 = b1 * xi - a1 * y + s2;
        s2 = b2 * xi - a2 * y;
        *v = y;
    }
}

/// Per-section steady state for a constant input `x0`, cascading DC gains
/// so each section starts settled.
fn cascade_steady_state(sections: &[Sos], x0: f64) -> Vec<[f64; 2]> {
    let mut states = Vec::with_capacity(sections.len());
    let mut level = x0;
    for sec in sections {
        let y = sec.dc_gain() * level;
        states.push([y - sec.b[0] * level, sec.b[2] * level - sec.a[1] * y]);
        level = y;
    }
    states
}

fn run_cascade(sections: &[Sos], x: &mut [f64]) {
    let states = cascade_steady_state(sections, x[0]);
    for (sec, zi) in sections.iter().zip(states) {
        sosfilt_section(sec, x, zi);
    }
}

/// Forward-backward application of an SOS cascade with odd-reflection
/// padding, so the net filter has zero phase.
fn filtfilt(sections: &[Sos], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pad = (3 * (2 * sections.len() + 1)).min(n - 1);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in (n - pad - 1..n - 1).rev() {
        ext.push(2.0 * x[n - 1] - x[i]);
    }

    run_cascade(sections, &mut ext);
    ext.reverse();
    run_cascade(sections, &mut ext);
    ext.reverse();

    ext[pad..pad + n].to_vec()
}

/// Zero-phase Butterworth high-pass filter.
///
/// The sequence must be at least `3 * order` samples long and the cutoff
/// must lie strictly inside `(0, fs/2)`.
pub fn butterworth_highpass(x: &[f64], fs: f64, cutoff: f64, order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::InvalidParameter("filter order must be >= 1".into()));
    }
    if !(cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff} Hz outside (0, {})",
            fs / 2.0
        )));
    }
    if x.len() < 3 * order {
        return Err(Error::InvalidInput(format!(
            "sequence of {} samples is too short for order {order}",
            x.len()
        )));
    }
    Ok(filtfilt(&butter_highpass_sos(order, cutoff, fs), x))
}

/// Zero-phase powerline notch (second-order, Q = 30).
pub fn powerline_notch(x: &[f64], fs: f64, notch_hz: f64) -> Result<Vec<f64>> {
    if !(notch_hz > 0.0 && notch_hz < fs / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "notch frequency {notch_hz} Hz outside (0, {})",
            fs / 2.0
        )));
    }
    if x.len() < 4 {
        return Err(Error::InvalidInput("sequence too short for notch".into()));
    }
    Ok(filtfilt(&[notch_sos(notch_hz, fs, NOTCH_Q)], x))
}

fn fft_forward(buf: &mut [Complex<f64>]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

fn fft_inverse(buf: &mut [Complex<f64>]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Fourier-domain resampling of `x` to `target_len` samples.
///
/// The spectrum is truncated or zero-padded with the Nyquist bin folded on
/// downsampling and split on upsampling, then inverse transformed and
/// rescaled by `target_len / x.len()`. Deterministic and exact for
/// bin-aligned content.
pub fn fft_resample(x: &[f64], target_len: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let m = target_len;
    if n < 2 || m < 2 {
        return Err(Error::InvalidInput(format!(
            "resampling needs at least 2 samples on both sides, got {n} -> {m}"
        )));
    }

    let mut spec: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_forward(&mut spec);

    let mut out = vec![Complex::new(0.0, 0.0); m];
    let keep = n.min(m);
    let nyq = keep / 2 + 1;
    out[..nyq].copy_from_slice(&spec[..nyq]);
    if keep > 2 {
        let neg = keep - nyq;
        out[m - neg..].copy_from_slice(&spec[n - neg..]);
    }
    if keep % 2 == 0 {
        if m < n {
            out[keep / 2] += spec[n - keep / 2];
        } else if m > n {
            out[keep / 2] *= 0.5;
            out[m - keep / 2] = out[keep / 2];
        }
    }

    fft_inverse(&mut out);
    let scale = 1.0 / n as f64;
    Ok(out.into_iter().map(|c| c.re * scale).collect())
}

/// Center each column to mean 0 and scale to unit population standard
/// deviation. Zero-variance columns are centered and left unscaled.
///
/// Returns the scaled matrix together with the per-column means and the
/// effective divisors (1 for constant columns).
pub fn standard_scale(x: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Vec<f64>)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(
            "standard scaling needs at least 2 samples".into(),
        ));
    }
    let mut out = x.clone();
    let mut means = Vec::with_capacity(x.ncols());
    let mut stds = Vec::with_capacity(x.ncols());
    for mut col in out.columns_mut() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        let div = if std > 0.0 { std } else { 1.0 };
        col.mapv_inplace(|v| (v - mean) / div);
        means.push(mean);
        stds.push(div);
    }
    Ok((out, means, stds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    /// Complex response of the cascade at angular frequency `w` (rad/sample).
    fn cascade_response(sections: &[Sos], w: f64) -> Complex<f64> {
        let z = Complex::from_polar(1.0, w);
        let mut h = Complex::new(1.0, 0.0);
        for s in sections {
            let num = Complex::new(s.b[0], 0.0) + s.b[1] / z + s.b[2] / (z * z);
            let den = Complex::new(1.0, 0.0) + s.a[0] / z + s.a[1] / (z * z);
            h *= num / den;
        }
        h
    }

    fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn mid_amplitude(x: &[f64]) -> f64 {
        let n = x.len();
        x[n / 4..3 * n / 4].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn highpass_zeros_stay_zero() {
        let y = butterworth_highpass(&vec![0.0; 5000], 500.0, 0.5, 5).unwrap();
        assert_eq!(y.len(), 5000);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn highpass_removes_dc() {
        // analytic gain at 0 Hz is exactly 0
        let sos = butter_highpass_sos(5, 0.5, 500.0);
        assert!(cascade_response(&sos, 0.0).norm() < 1e-12);

        let y = butterworth_highpass(&vec![1.0; 5000], 500.0, 0.5, 5).unwrap();
        let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 0.05, "residual {max}");
    }

    #[test]
    fn highpass_passband_gain_near_unity() {
        let fs = 500.0;
        let sos = butter_highpass_sos(5, 0.5, fs);
        let w = 2.0 * std::f64::consts::PI * 10.0 / fs;
        // forward-backward application squares the magnitude response
        let analytic = cascade_response(&sos, w).norm().powi(2);
        assert!((analytic - 1.0).abs() < 1e-6);

        let y = butterworth_highpass(&sine(10.0, fs, 5000), fs, 0.5, 5).unwrap();
        let amp = mid_amplitude(&y);
        assert!((amp - 1.0).abs() < 0.01, "amplitude {amp}");
        assert!((amp - analytic).abs() < 0.01);
    }

    #[test]
    fn highpass_parameter_errors() {
        let x = vec![0.0; 100];
        assert!(butterworth_highpass(&x, 500.0, 0.0, 5).is_err());
        assert!(butterworth_highpass(&x, 500.0, 250.0, 5).is_err());
        assert!(butterworth_highpass(&x, 500.0, 0.5, 0).is_err());
        assert!(butterworth_highpass(&x[..10], 500.0, 0.5, 5).is_err());
    }

    #[test]
    fn notch_kills_powerline_tone() {
        let fs = 500.0;
        let sec = notch_sos(50.0, fs, NOTCH_Q);
        let w = 2.0 * std::f64::consts::PI * 50.0 / fs;
        assert!(cascade_response(&[sec], w).norm() < 1e-12);

        let y = powerline_notch(&sine(50.0, fs, 5000), fs, 50.0).unwrap();
        assert!(mid_amplitude(&y) < 0.05);
    }

    #[test]
    fn notch_zeros_stay_zero() {
        let y = powerline_notch(&vec![0.0; 1000], 500.0, 50.0).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn notch_leaves_low_frequencies() {
        let fs = 500.0;
        let sec = notch_sos(50.0, fs, NOTCH_Q);
        let w = 2.0 * std::f64::consts::PI * 5.0 / fs;
        let analytic = cascade_response(&[sec], w).norm().powi(2);
        assert!((analytic - 1.0).abs() < 0.02);

        let y = powerline_notch(&sine(5.0, fs, 5000), fs, 50.0).unwrap();
        let amp = mid_amplitude(&y);
        assert!((amp - 1.0).abs() < 0.02, "amplitude {amp}");
    }

    #[test]
    fn notch_rejects_bad_frequency() {
        let x = vec![0.0; 100];
        assert!(powerline_notch(&x, 500.0, 0.0).is_err());
        assert!(powerline_notch(&x, 500.0, 250.0).is_err());
    }

    #[test]
    fn zero_phase_no_lag_on_spike_train() {
        // train of narrow bumps; cross-correlation of input and output must
        // peak at lag 0
        let fs = 500.0;
        let n = 5000;
        let mut x = vec![0.0; n];
        for c in (250..n).step_by(500) {
            for i in c.saturating_sub(20)..(c + 20).min(n) {
                let d = i as f64 - c as f64;
                x[i] += (-d * d / (2.0 * 36.0)).exp();
            }
        }
        let y = butterworth_highpass(&x, fs, 0.5, 5).unwrap();
        let y = powerline_notch(&y, fs, 50.0).unwrap();
        let mut best = (0i64, f64::NEG_INFINITY);
        for lag in -50i64..=50 {
            let mut acc = 0.0;
            for i in 0..n as i64 {
                let j = i + lag;
                if j >= 0 && j < n as i64 {
                    acc += x[i as usize] * y[j as usize];
                }
            }
            if acc > best.1 {
                best = (lag, acc);
            }
        }
        assert_eq!(best.0, 0);
    }

    #[test]
    fn resample_constant_preserved() {
        let y = fft_resample(&vec![1.0; 100], 50).unwrap();
        assert_eq!(y.len(), 50);
        for v in y {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn resample_bin_aligned_sine_is_exact() {
        let x: Vec<f64> = (0..128)
            .map(|i| (2.0 * std::f64::consts::PI * 4.0 * i as f64 / 128.0).sin())
            .collect();
        let y = fft_resample(&x, 256).unwrap();
        for (i, v) in y.iter().enumerate() {
            let want = (2.0 * std::f64::consts::PI * 4.0 * i as f64 / 256.0).sin();
            assert_abs_diff_eq!(*v, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn resample_round_trip_band_limited() {
        // synthesize from known Fourier coefficients below bin 25, so both
        // legs of the trip are exact sampling of the same trig polynomial
        let n = 100;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let mut v = 0.3;
                for k in 1..25 {
                    let kf = k as f64;
                    v += (0.7 / kf) * (2.0 * std::f64::consts::PI * kf * t).sin()
                        + (0.2 / kf) * (2.0 * std::f64::consts::PI * kf * t).cos();
                }
                v
            })
            .collect();
        let up = fft_resample(&x, 400).unwrap();
        let back = fft_resample(&up, 100).unwrap();
        for (a, b) in x.iter().zip(back.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn resample_identity() {
        let x: Vec<f64> = (0..101).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = fft_resample(&x, 101).unwrap();
        for (a, b) in x.iter().zip(y.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_rejects_short_inputs() {
        assert!(fft_resample(&[1.0], 10).is_err());
        assert!(fft_resample(&[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn scale_two_point_column() {
        let x = array![[1.0], [3.0]];
        let (s, means, stds) = standard_scale(&x).unwrap();
        assert_abs_diff_eq!(s[[0, 0]], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[[1, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(means[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stds[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scale_constant_column_centered_only() {
        let x = array![[5.0], [5.0], [5.0]];
        let (s, _, stds) = standard_scale(&x).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
        assert_eq!(stds[0], 1.0);
    }

    #[test]
    fn scale_idempotent_on_standardized_input() {
        let x = array![[-1.0, 2.0], [1.0, -2.0]];
        let (s1, _, _) = standard_scale(&x).unwrap();
        let (s2, _, _) = standard_scale(&s1).unwrap();
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn scale_rejects_single_row() {
        let x = array![[1.0, 2.0]];
        assert!(standard_scale(&x).is_err());
    }

    #[test]
    fn scale_postconditions() {
        let x = array![
            [0.3, -1.0, 7.0],
            [2.1, 4.0, 7.0],
            [-0.4, 0.5, 7.0],
            [1.9, -2.5, 7.0]
        ];
        let (s, _, _) = standard_scale(&x).unwrap();
        for (j, col) in s.columns().into_iter().enumerate() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            assert!(mean.abs() < 1e-10);
            if j < 2 {
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                assert!((var.sqrt() - 1.0).abs() < 1e-10);
            }
        }
    }
}
