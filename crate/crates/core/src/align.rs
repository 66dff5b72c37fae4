//! Mapping ECGs onto a uniform R-peak template and computing median beats.
//!
//! Two resampling strategies are provided. `linear` stretches each R-to-R
//! cycle as a whole onto the template grid. `hrc` (heart-rate-corrected)
//! splits every cycle into three segments bounded by the P-onset and
//! T-offset intervals predicted from the heart rate, and resamples each
//! segment independently, so wave positions inside the beat track the
//! physiological shortening of the PQ and QT intervals at higher rates.

use ndarray::Array2;

use crate::dsp::fft_resample;
use crate::error::{Error, Result};
use crate::record::EcgRecord;
use crate::rpeak::RPeakAnnotation;

/// Column at which the R-peak sits inside a median beat, as a fraction of
/// the cycle length. Leaves room for the P-wave before and the T-wave after.
pub const DEFAULT_MEDIAN_R_FRAC: f64 = 0.35;

/// The target grid of R-peak positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub duration_s: f64,
    pub fs: f64,
    pub target_bpm: f64,
    /// Position of the first R-peak, samples.
    pub initial_offset: usize,
    /// Samples per target cycle: `round(60 * fs / target_bpm)`.
    pub rr_samples: usize,
    pub r_peak_positions: Vec<usize>,
    /// Total length of a full aligned signal: `duration_s * fs`.
    pub n_samples: usize,
}

/// Construct the template for the given duration, sampling rate, target
/// heart rate, and first-beat offset.
pub fn design_template(
    duration_s: f64,
    fs: f64,
    target_bpm: f64,
    initial_offset: usize,
) -> Result<Template> {
    if !(duration_s > 0.0) || !(fs > 0.0) || !(target_bpm > 0.0) {
        return Err(Error::InvalidParameter(
            "duration, fs and bpm must be positive".into(),
        ));
    }
    let n_exact = duration_s * fs;
    if (n_exact - n_exact.round()).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "duration * fs must be an integer sample count, got {n_exact}"
        )));
    }
    let n_samples = n_exact.round() as usize;
    let rr_samples = (60.0 * fs / target_bpm).round() as usize;
    if rr_samples < 20 {
        return Err(Error::InvalidParameter(format!(
            "target bpm {target_bpm} gives only {rr_samples} samples per cycle (need >= 20)"
        )));
    }
    if initial_offset >= rr_samples {
        return Err(Error::InvalidParameter(format!(
            "initial offset {initial_offset} must be smaller than the cycle length {rr_samples}"
        )));
    }
    let r_peak_positions: Vec<usize> = (0..)
        .map(|k| initial_offset + k * rr_samples)
        .take_while(|&p| p < n_samples)
        .collect();
    Ok(Template {
        duration_s,
        fs,
        target_bpm,
        initial_offset,
        rr_samples,
        r_peak_positions,
        n_samples,
    })
}

/// Coefficients of the heart-rate-dependent P-onset and T-offset intervals,
/// read as fractions of the RR interval: `f_p = hr * a_p + b_p` and
/// `f_t = hr * a_t + b_t`, capped so `f_p + f_t <= f_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrcCoefficients {
    pub a_p: f64,
    pub b_p: f64,
    pub a_t: f64,
    pub b_t: f64,
    pub f_max: f64,
}

impl Default for HrcCoefficients {
    fn default() -> Self {
        Self {
            a_p: 1.0 / 280.0,
            b_p: 0.14,
            a_t: 1.0 / 330.0,
            b_t: 0.96,
            f_max: 0.9,
        }
    }
}

impl HrcCoefficients {
    pub fn validate(&self) -> Result<()> {
        if self.a_p <= 0.0 || self.b_p <= 0.0 || self.a_t <= 0.0 || self.b_t <= 0.0 {
            return Err(Error::InvalidParameter(
                "hrc coefficients must be positive".into(),
            ));
        }
        if !(self.f_max > 0.0 && self.f_max < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "f_max must lie in (0, 1), got {}",
                self.f_max
            )));
        }
        Ok(())
    }
}

/// Lengths in samples of the P-onset -> R-peak and R-peak -> T-offset
/// intervals at heart rate `hr` for a cycle of `rr` samples.
///
/// When the raw fractions together exceed `f_max`, both are rescaled
/// proportionally so the three-segment split always leaves room for the
/// remainder of the cycle.
pub fn hrc_segment_bounds(
    hr: f64,
    rr: usize,
    coeffs: &HrcCoefficients,
) -> Result<(usize, usize)> {
    if !(hr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heart rate must be positive, got {hr}"
        )));
    }
    if rr < 20 {
        return Err(Error::InvalidParameter(format!(
            "cycle of {rr} samples is too short (need >= 20)"
        )));
    }
    coeffs.validate()?;
    let mut f_p = hr * coeffs.a_p + coeffs.b_p;
    let mut f_t = hr * coeffs.a_t + coeffs.b_t;
    let sum = f_p + f_t;
    if sum > coeffs.f_max {
        f_p *= coeffs.f_max / sum;
        f_t *= coeffs.f_max / sum;
    }
    Ok(((f_p * rr as f64).round() as usize, (f_t * rr as f64).round() as usize))
}

/// Which resampling strategy produced an aligned signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    None,
    Linear,
    Hrc,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::Linear => "linear",
            Strategy::Hrc => "hrc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Full,
    Median,
}

/// A resampled full signal or median beat, tagged with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedEcg {
    /// `[n_leads x n_samples]` for full outputs, `[n_leads x beat_len]` for
    /// median beats.
    pub signal: Array2<f64>,
    pub strategy: Strategy,
    pub output_kind: OutputKind,
    /// Absent for the native-sampling median (`Strategy::None`).
    pub template: Option<Template>,
    pub source_annotation: RPeakAnnotation,
}

/// One source range mapped onto one destination range; identical across
/// leads by construction.
struct SegmentMap {
    src: (usize, usize),
    dst: (usize, usize),
}

/// Resample a source segment to `len` samples. Degenerate sources fall back
/// to their spectral DC limit: a one-sample segment extends as a constant
/// and an empty segment takes the caller's anchor value.
///
/// The line through the segment endpoints is removed before the spectral
/// step and restored on the target grid. The residual then wraps without a
/// jump, which suppresses the boundary ringing that would otherwise distort
/// peaks adjacent to a cut, and the endpoint samples map over exactly.
fn resample_segment(seg: &[f64], len: usize, fallback: f64) -> Result<Vec<f64>> {
    Ok(match (seg.len(), len) {
        (_, 0) => Vec::new(),
        (0, _) => vec![fallback; len],
        (1, _) => vec![seg[0]; len],
        (_, 1) => vec![seg.iter().sum::<f64>() / seg.len() as f64; 1],
        (n, m) => {
            let a = seg[0];
            let slope_in = (seg[n - 1] - a) / (n - 1) as f64;
            let residual: Vec<f64> = seg
                .iter()
                .enumerate()
                .map(|(i, &v)| v - a - slope_in * i as f64)
                .collect();
            let mut out = fft_resample(&residual, m)?;
            let slope_out = (seg[n - 1] - a) / (m - 1) as f64;
            for (j, v) in out.iter_mut().enumerate() {
                *v += a + slope_out * j as f64;
            }
            out
        }
    })
}

fn apply_segment_maps(
    record: &EcgRecord,
    template: &Template,
    maps: &[SegmentMap],
) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((record.n_leads(), template.n_samples));
    for li in 0..record.n_leads() {
        let lead = record.signal.row(li);
        for m in maps {
            let seg: Vec<f64> = lead.slice(ndarray::s![m.src.0..m.src.1]).to_vec();
            let anchor = lead[m.src.0.min(record.n_samples() - 1)];
            let res = resample_segment(&seg, m.dst.1 - m.dst.0, anchor)?;
            for (j, v) in res.into_iter().enumerate() {
                out[[li, m.dst.0 + j]] = v;
            }
        }
    }
    Ok(out)
}

fn check_align_inputs(
    record: &EcgRecord,
    ann: &RPeakAnnotation,
    template: &Template,
) -> Result<()> {
    if ann.peaks.len() < 2 {
        return Err(Error::AlignmentFailed(format!(
            "need at least 2 detected peaks, got {}",
            ann.peaks.len()
        )));
    }
    if (record.fs - template.fs).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "record sampling rate {} does not match template {}",
            record.fs, template.fs
        )));
    }
    if template.r_peak_positions.len() < 2 {
        return Err(Error::InvalidParameter(
            "template must contain at least 2 beats".into(),
        ));
    }
    if *ann.peaks.last().unwrap() >= record.n_samples() {
        return Err(Error::InvalidInput(
            "annotation indices exceed record length".into(),
        ));
    }
    Ok(())
}

/// Leading and trailing partial cycles, anchored at the template's first and
/// last R positions.
fn edge_maps(
    ann: &RPeakAnnotation,
    template: &Template,
    n_samples: usize,
) -> (SegmentMap, SegmentMap) {
    let first_r = template.r_peak_positions[0];
    let last_r = *template.r_peak_positions.last().unwrap();
    let p0 = ann.peaks[0];
    let p_last = *ann.peaks.last().unwrap();
    (
        SegmentMap { src: (0, p0), dst: (0, first_r) },
        SegmentMap { src: (p_last, n_samples), dst: (last_r, template.n_samples) },
    )
}

/// Source cycle index feeding template cycle `k`: surplus source beats are
/// dropped, a shortfall repeats the last complete source cycle.
fn source_cycle_for(k: usize, n_source_cycles: usize) -> usize {
    k.min(n_source_cycles - 1)
}

fn linear_plan(ann: &RPeakAnnotation, template: &Template, n_samples: usize) -> Vec<SegmentMap> {
    let n_cycles = ann.peaks.len() - 1;
    let rr = template.rr_samples;
    let mut maps = Vec::new();
    let (lead_in, lead_out) = edge_maps(ann, template, n_samples);
    maps.push(lead_in);
    for (k, win) in template.r_peak_positions.windows(2).enumerate() {
        let i = source_cycle_for(k, n_cycles);
        maps.push(SegmentMap {
            src: (ann.peaks[i], ann.peaks[i + 1]),
            dst: (win[0], win[0] + rr),
        });
    }
    maps.push(lead_out);
    maps
}

/// Align a record onto the template by resampling each detected R-to-R
/// cycle as a whole to the template cycle length.
pub fn align_linear(
    record: &EcgRecord,
    ann: &RPeakAnnotation,
    template: &Template,
) -> Result<AlignedEcg> {
    check_align_inputs(record, ann, template)?;
    let maps = linear_plan(ann, template, record.n_samples());
    let signal = apply_segment_maps(record, template, &maps)?;
    Ok(AlignedEcg {
        signal,
        strategy: Strategy::Linear,
        output_kind: OutputKind::Full,
        template: Some(template.clone()),
        source_annotation: ann.clone(),
    })
}

/// Align a record onto the template with heart-rate-corrected three-segment
/// resampling.
///
/// Each cycle is split at the predicted T-offset and the following P-onset:
/// `[R, T-offset)`, `[T-offset, next P-onset)` and `[next P-onset, next R)`
/// are resampled independently. Source bounds are evaluated at the record's
/// measured heart rate with the actual cycle length; target bounds at the
/// template heart rate with the template cycle length. The middle segment
/// absorbs the rounding remainder, so segments tile each cycle exactly.
pub fn align_hrc(
    record: &EcgRecord,
    ann: &RPeakAnnotation,
    template: &Template,
    coeffs: &HrcCoefficients,
) -> Result<AlignedEcg> {
    check_align_inputs(record, ann, template)?;
    let maps = hrc_plan(ann, template, coeffs, record.n_samples())?;
    let signal = apply_segment_maps(record, template, &maps)?;
    Ok(AlignedEcg {
        signal,
        strategy: Strategy::Hrc,
        output_kind: OutputKind::Full,
        template: Some(template.clone()),
        source_annotation: ann.clone(),
    })
}

fn hrc_plan(
    ann: &RPeakAnnotation,
    template: &Template,
    coeffs: &HrcCoefficients,
    n_samples: usize,
) -> Result<Vec<SegmentMap>> {
    let n_cycles = ann.peaks.len() - 1;
    let rr_t = template.rr_samples;

    let (p_tgt, t_tgt) = hrc_segment_bounds(template.target_bpm, rr_t, coeffs)?;
    let mid_tgt = rr_t
        .checked_sub(p_tgt + t_tgt)
        .ok_or_else(|| Error::AlignmentFailed("template cycle shorter than its hrc intervals".into()))?;
    for (name, len) in [("T", t_tgt), ("middle", mid_tgt), ("P", p_tgt)] {
        if len < 2 {
            return Err(Error::AlignmentFailed(format!(
                "template {name} segment has fewer than 2 samples"
            )));
        }
    }

    let mut maps = Vec::new();
    let (lead_in, lead_out) = edge_maps(ann, template, n_samples);
    maps.push(lead_in);
    for (k, win) in template.r_peak_positions.windows(2).enumerate() {
        let i = source_cycle_for(k, n_cycles);
        let (src_r, src_next) = (ann.peaks[i], ann.peaks[i + 1]);
        let rr_s = src_next - src_r;
        let (p_src, t_src) = hrc_segment_bounds(ann.heart_rate_bpm, rr_s, coeffs)
            .map_err(|e| Error::AlignmentFailed(format!("cycle {k}: {e}")))?;
        let mid_src = rr_s.checked_sub(p_src + t_src).ok_or_else(|| {
            Error::AlignmentFailed(format!("cycle {k}: intervals exceed its {rr_s} samples"))
        })?;
        for (name, len) in [("T", t_src), ("middle", mid_src), ("P", p_src)] {
            if len < 2 {
                return Err(Error::AlignmentFailed(format!(
                    "cycle {k}: {name} segment has fewer than 2 samples"
                )));
            }
        }
        let t0 = win[0];
        maps.push(SegmentMap {
            src: (src_r, src_r + t_src),
            dst: (t0, t0 + t_tgt),
        });
        maps.push(SegmentMap {
            src: (src_r + t_src, src_next - p_src),
            dst: (t0 + t_tgt, t0 + t_tgt + mid_tgt),
        });
        maps.push(SegmentMap {
            src: (src_next - p_src, src_next),
            dst: (t0 + t_tgt + mid_tgt, t0 + rr_t),
        });
    }
    maps.push(lead_out);
    Ok(maps)
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Pointwise median over all complete template cycles of a full aligned
/// signal, with the R-peak placed at `DEFAULT_MEDIAN_R_FRAC` of the beat.
pub fn median_beat(aligned: &AlignedEcg) -> Result<AlignedEcg> {
    median_beat_with(aligned, DEFAULT_MEDIAN_R_FRAC)
}

/// Pointwise median beat with the R-peak at column
/// `round(r_frac * rr_samples)`.
pub fn median_beat_with(aligned: &AlignedEcg, r_frac: f64) -> Result<AlignedEcg> {
    if aligned.output_kind != OutputKind::Full {
        return Err(Error::InvalidInput(
            "median beat needs a full aligned signal".into(),
        ));
    }
    let template = aligned
        .template
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("aligned signal carries no template".into()))?;
    if !(0.0..1.0).contains(&r_frac) {
        return Err(Error::InvalidParameter(format!(
            "median R fraction must lie in [0, 1), got {r_frac}"
        )));
    }
    let rr = template.rr_samples;
    let r_col = (r_frac * rr as f64).round() as usize;
    let n = template.n_samples;

    let starts: Vec<usize> = template
        .r_peak_positions
        .iter()
        .filter_map(|&r| {
            let start = r.checked_sub(r_col)?;
            (start + rr <= n).then_some(start)
        })
        .collect();
    if starts.is_empty() {
        return Err(Error::InvalidInput(
            "no complete template cycle fits the signal".into(),
        ));
    }

    let n_leads = aligned.signal.nrows();
    let mut out = Array2::zeros((n_leads, rr));
    for li in 0..n_leads {
        for col in 0..rr {
            let vals: Vec<f64> = starts
                .iter()
                .map(|&s| aligned.signal[[li, s + col]])
                .collect();
            out[[li, col]] = median_of(vals);
        }
    }
    Ok(AlignedEcg {
        signal: out,
        strategy: aligned.strategy,
        output_kind: OutputKind::Median,
        template: Some(template.clone()),
        source_annotation: aligned.source_annotation.clone(),
    })
}

/// Median beat at native sampling: windows of the raw signal centered on
/// the detected R-peaks, half-width `round(0.5 * median RR)`. Incomplete
/// edge windows are dropped.
pub fn align_none_median(record: &EcgRecord, ann: &RPeakAnnotation) -> Result<AlignedEcg> {
    if ann.peaks.len() < 2 {
        return Err(Error::AlignmentFailed(format!(
            "need at least 2 detected peaks, got {}",
            ann.peaks.len()
        )));
    }
    let rrs: Vec<f64> = ann.peaks.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let half = (0.5 * median_of(rrs)).round() as usize;
    if half == 0 {
        return Err(Error::AlignmentFailed("median RR too short".into()));
    }
    let width = 2 * half;
    let n = record.n_samples();

    let starts: Vec<usize> = ann
        .peaks
        .iter()
        .filter_map(|&p| {
            let start = p.checked_sub(half)?;
            (start + width <= n).then_some(start)
        })
        .collect();
    if starts.is_empty() {
        return Err(Error::InvalidInput(
            "no complete beat window fits the record".into(),
        ));
    }

    let mut out = Array2::zeros((record.n_leads(), width));
    for li in 0..record.n_leads() {
        for col in 0..width {
            let vals: Vec<f64> = starts
                .iter()
                .map(|&s| record.signal[[li, s + col]])
                .collect();
            out[[li, col]] = median_of(vals);
        }
    }
    Ok(AlignedEcg {
        signal: out,
        strategy: Strategy::None,
        output_kind: OutputKind::Median,
        template: None,
        source_annotation: ann.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpeak::{annotate_record, DetectorConfig};
    use crate::synth::{generate_ecg, SynthSpec, FIRST_BEAT_RR_FRAC};
    use approx::assert_abs_diff_eq;

    fn default_template() -> Template {
        let offset = (FIRST_BEAT_RR_FRAC * 500.0).round() as usize;
        design_template(10.0, 500.0, 60.0, offset).unwrap()
    }

    fn annotate(record: &crate::record::EcgRecord) -> RPeakAnnotation {
        annotate_record(record, None, &DetectorConfig::default()).unwrap()
    }

    #[test]
    fn template_examples() {
        let t = design_template(10.0, 500.0, 60.0, 250).unwrap();
        assert_eq!(t.rr_samples, 500);
        assert_eq!(t.r_peak_positions.len(), 10);
        assert_eq!(t.r_peak_positions[0], 250);
        assert_eq!(*t.r_peak_positions.last().unwrap(), 4750);

        let t = design_template(10.0, 500.0, 120.0, 0).unwrap();
        assert_eq!(t.rr_samples, 250);
        assert_eq!(t.r_peak_positions.len(), 20);

        assert!(design_template(2.0, 100.0, 60.0, 150).is_err());
        assert!(design_template(10.0, 500.0, 2000.0, 0).is_err());
        assert!(design_template(0.0101, 100.0, 60.0, 0).is_err());
    }

    #[test]
    fn hrc_bounds_worked_example() {
        // hr 60, rr 500 with defaults: raw fractions (0.354286, 1.141818)
        // exceed the cap, rescale to sum 0.9, round to samples
        let (p, t) = hrc_segment_bounds(60.0, 500, &HrcCoefficients::default()).unwrap();
        assert_eq!((p, t), (107, 343));
    }

    #[test]
    fn hrc_bounds_constant_fractions_below_cap() {
        let coeffs = HrcCoefficients {
            a_p: 1e-12,
            b_p: 0.2,
            a_t: 1e-12,
            b_t: 0.4,
            f_max: 0.9,
        };
        let (p, t) = hrc_segment_bounds(60.0, 500, &coeffs).unwrap();
        assert_eq!((p, t), (100, 200));
    }

    #[test]
    fn hrc_p_share_grows_with_heart_rate() {
        // both heart rates exceed the cap; the P share of the capped span is
        // larger at 120 bpm (0.300480 vs 0.236806 by direct arithmetic)
        let share = |hr: f64| {
            let f_p = hr / 280.0 + 0.14;
            let f_t = hr / 330.0 + 0.96;
            f_p / (f_p + f_t)
        };
        assert_abs_diff_eq!(share(60.0), 0.236806, epsilon = 1e-6);
        assert_abs_diff_eq!(share(120.0), 0.300480, epsilon = 1e-6);
        assert!(share(120.0) > share(60.0));

        let c = HrcCoefficients::default();
        let (p60, t60) = hrc_segment_bounds(60.0, 500, &c).unwrap();
        let (p120, t120) = hrc_segment_bounds(120.0, 500, &c).unwrap();
        assert_eq!(p60 + t60, 450); // capped at 0.9 * rr
        assert_eq!(p120 + t120, 450);
        assert!(p120 > p60);
    }

    #[test]
    fn hrc_bounds_rejects_bad_inputs() {
        let c = HrcCoefficients::default();
        assert!(hrc_segment_bounds(0.0, 500, &c).is_err());
        assert!(hrc_segment_bounds(60.0, 10, &c).is_err());
        assert!(hrc_segment_bounds(60.0, 500, &HrcCoefficients { f_max: 1.5, ..c }).is_err());
    }

    #[test]
    fn linear_identity_when_input_sits_on_grid() {
        let (rec, truth) = generate_ecg(&SynthSpec::default()).unwrap();
        let template = default_template();
        assert_eq!(truth.r_peaks, template.r_peak_positions);
        let ann = annotate(&rec);
        assert_eq!(ann.peaks, template.r_peak_positions);
        let aligned = align_linear(&rec, &ann, &template).unwrap();
        let max_err = aligned
            .signal
            .iter()
            .zip(rec.signal.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(max_err < 1e-6, "max error {max_err}");
    }

    #[test]
    fn linear_places_cycle_maxima_on_template_positions() {
        let (rec, _) = generate_ecg(&SynthSpec {
            bpm: 90.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let template = default_template();
        let ann = annotate(&rec);
        let aligned = align_linear(&rec, &ann, &template).unwrap();
        let lead = aligned.signal.row(1);
        for &r in &template.r_peak_positions {
            let lo = r.saturating_sub(template.rr_samples / 2);
            let hi = (r + template.rr_samples / 2).min(template.n_samples);
            let mut best = lo;
            for j in lo..hi {
                if lead[j] > lead[best] {
                    best = j;
                }
            }
            assert!(
                (best as i64 - r as i64).unsigned_abs() <= 2,
                "cycle max at {best}, template R at {r}"
            );
        }
    }

    #[test]
    fn linear_mean_of_two_rates_has_single_peak_per_cycle() {
        let template = default_template();
        let mut mean = Array2::<f64>::zeros((1, template.n_samples));
        for bpm in [50.0, 140.0] {
            let (rec, _) = generate_ecg(&SynthSpec { bpm, ..SynthSpec::default() }).unwrap();
            let ann = annotate(&rec);
            let aligned = align_linear(&rec, &ann, &template).unwrap();
            for (j, v) in aligned.signal.row(1).iter().enumerate() {
                mean[[0, j]] += v / 2.0;
            }
        }
        // count prominent maxima per cycle window by brute force
        for &r in &template.r_peak_positions {
            let lo = r.saturating_sub(template.rr_samples / 2);
            let hi = (r + template.rr_samples / 2).min(template.n_samples);
            let window: Vec<f64> = (lo..hi).map(|j| mean[[0, j]]).collect();
            let max = window.iter().cloned().fold(f64::MIN, f64::max);
            let prominent: Vec<usize> = (0..window.len())
                .filter(|&j| window[j] > 0.5 * max)
                .collect();
            // all samples above half maximum must be contiguous: one peak
            let spread = prominent.last().unwrap() - prominent[0];
            assert!(
                spread + 1 == prominent.len() && spread < 40,
                "double peak in cycle at {r}"
            );
            let argmax = lo + window
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!((argmax as i64 - r as i64).unsigned_abs() <= 2);
        }
    }

    #[test]
    fn hrc_identity_when_rates_and_grid_match() {
        let (rec, _) = generate_ecg(&SynthSpec::default()).unwrap();
        let template = default_template();
        let mut ann = annotate(&rec);
        ann.heart_rate_bpm = 60.0;
        let aligned = align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap();
        let max_err = aligned
            .signal
            .iter()
            .zip(rec.signal.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(max_err < 1e-6, "max error {max_err}");
    }

    #[test]
    fn hrc_r_positions_do_not_depend_on_interior_split() {
        let (rec, _) = generate_ecg(&SynthSpec {
            bpm: 120.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let template = default_template();
        let ann = annotate(&rec);
        let a = align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap();
        let b = align_hrc(
            &rec,
            &ann,
            &template,
            &HrcCoefficients { f_max: 0.5, ..HrcCoefficients::default() },
        )
        .unwrap();
        assert_ne!(a.signal, b.signal);
        // different interior split, identical R anchors: every cycle of both
        // plans starts at the same template position from the same source R
        let plan_a = hrc_plan(&ann, &template, &HrcCoefficients::default(), 5000).unwrap();
        let plan_b = hrc_plan(
            &ann,
            &template,
            &HrcCoefficients { f_max: 0.5, ..HrcCoefficients::default() },
            5000,
        )
        .unwrap();
        let anchors = |plan: &[SegmentMap]| -> Vec<(usize, usize)> {
            template
                .r_peak_positions
                .iter()
                .map(|&r| {
                    let m = plan.iter().find(|m| m.dst.0 == r).unwrap();
                    (m.src.0, m.dst.0)
                })
                .collect()
        };
        assert_eq!(anchors(&plan_a), anchors(&plan_b));
    }

    #[test]
    fn strategies_place_r_peaks_identically() {
        let (rec, _) = generate_ecg(&SynthSpec {
            bpm: 97.0,
            rr_jitter: 0.02,
            seed: 5,
            ..SynthSpec::default()
        })
        .unwrap();
        let template = default_template();
        let ann = annotate(&rec);
        let lin = align_linear(&rec, &ann, &template).unwrap();
        let hrc = align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap();
        // both strategies anchor every cycle at the same template position
        // from the same source R
        let lp = linear_plan(&ann, &template, 5000);
        let hp = hrc_plan(&ann, &template, &HrcCoefficients::default(), 5000).unwrap();
        for &r in &template.r_peak_positions {
            let la = lp.iter().find(|m| m.dst.0 == r).unwrap();
            let ha = hp.iter().find(|m| m.dst.0 == r).unwrap();
            assert_eq!(la.src.0, ha.src.0, "anchor at template position {r}");
        }
        // re-detected peaks agree with the grid to within resampler ringing
        for aligned in [&lin, &hrc] {
            let lead: Vec<f64> = aligned.signal.row(1).to_vec();
            let peaks = crate::rpeak::detect_r_peaks(&lead, 500.0).unwrap().peaks;
            assert_eq!(peaks.len(), template.r_peak_positions.len());
            for (p, r) in peaks.iter().zip(template.r_peak_positions.iter()) {
                assert!(
                    (*p as i64 - *r as i64).unsigned_abs() <= 2,
                    "peak {p} vs template {r}"
                );
            }
        }
    }

    #[test]
    fn full_output_length_is_exact() {
        for bpm in [48.0, 75.0, 133.0] {
            let (rec, _) = generate_ecg(&SynthSpec { bpm, ..SynthSpec::default() }).unwrap();
            let template = default_template();
            let ann = annotate(&rec);
            for aligned in [
                align_linear(&rec, &ann, &template).unwrap(),
                align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap(),
            ] {
                assert_eq!(aligned.signal.ncols(), template.n_samples);
                assert_eq!(aligned.signal.nrows(), 12);
            }
        }
    }

    #[test]
    fn leads_share_cut_points() {
        // every lead is a scaled copy of lead II in the synthetic record, so
        // the aligned leads must stay exact scaled copies
        let (rec, _) = generate_ecg(&SynthSpec {
            bpm: 85.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let template = default_template();
        let ann = annotate(&rec);
        let aligned = align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap();
        let ii = aligned.signal.row(1);
        let avr = aligned.signal.row(3); // gain -0.5
        for (a, b) in ii.iter().zip(avr.iter()) {
            assert_abs_diff_eq!(*b, -0.5 * a, epsilon = 1e-9);
        }
    }

    #[test]
    fn median_of_identical_cycles_is_the_cycle() {
        let (rec, _) = generate_ecg(&SynthSpec::default()).unwrap();
        let template = default_template();
        let ann = annotate(&rec);
        let aligned = align_linear(&rec, &ann, &template).unwrap();
        let med = median_beat(&aligned).unwrap();
        assert_eq!(med.signal.ncols(), template.rr_samples);
        assert_eq!(med.output_kind, OutputKind::Median);

        // compare against one interior cycle window
        let r_col = (DEFAULT_MEDIAN_R_FRAC * 500.0).round() as usize;
        let start = template.r_peak_positions[4] - r_col;
        for li in [0usize, 1, 3] {
            for col in 0..template.rr_samples {
                assert_abs_diff_eq!(
                    med.signal[[li, col]],
                    aligned.signal[[li, start + col]],
                    epsilon = 1e-6
                );
            }
        }
        // R-peak sits at the configured intra-beat column
        let lead = med.signal.row(1);
        let argmax = (0..lead.len())
            .max_by(|&a, &b| lead[a].abs().total_cmp(&lead[b].abs()))
            .unwrap();
        assert_eq!(argmax, r_col);
    }

    #[test]
    fn median_rejects_one_noisy_cycle() {
        let (rec, _) = generate_ecg(&SynthSpec::default()).unwrap();
        let template = default_template();
        let ann = annotate(&rec);
        let mut aligned = align_linear(&rec, &ann, &template).unwrap();
        let clean = median_beat(&aligned).unwrap();
        // 9 complete windows stack; corrupt one interior cycle hard
        let start = template.r_peak_positions[3];
        for li in 0..12 {
            for j in start..start + template.rr_samples {
                aligned.signal[[li, j]] += 50.0;
            }
        }
        let med = median_beat(&aligned).unwrap();
        for (a, b) in med.signal.iter().zip(clean.signal.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
    }

    #[test]
    fn median_even_count_averages_central_values() {
        // 3 template beats -> 2 complete windows with distinct content
        let template = design_template(2.0, 100.0, 60.0, 35).unwrap();
        let mut signal = Array2::zeros((1, 200));
        for j in 0..200 {
            signal[[0, j]] = j as f64;
        }
        let rec = EcgRecordFixture::new(signal);
        let ann = RPeakAnnotation {
            peaks: vec![35, 135],
            heart_rate_bpm: 60.0,
            lead_used: "x".into(),
        };
        let aligned = AlignedEcg {
            signal: rec.0.signal.clone(),
            strategy: Strategy::Linear,
            output_kind: OutputKind::Full,
            template: Some(template),
            source_annotation: ann,
        };
        let med = median_beat(&aligned).unwrap();
        // windows start at 0 and 100; median of {c, c+100} = c + 50
        for col in 0..100 {
            assert_abs_diff_eq!(med.signal[[0, col]], col as f64 + 50.0, epsilon = 1e-12);
        }
    }

    struct EcgRecordFixture(crate::record::EcgRecord);
    impl EcgRecordFixture {
        fn new(signal: Array2<f64>) -> Self {
            Self(crate::record::EcgRecord::new(signal, 100.0, vec![], "fixture").unwrap())
        }
    }

    #[test]
    fn none_median_on_periodic_signal_recovers_native_cycle() {
        let (rec, truth) = generate_ecg(&SynthSpec::default()).unwrap();
        let ann = annotate(&rec);
        let med = align_none_median(&rec, &ann).unwrap();
        assert_eq!(med.signal.ncols(), 500);
        assert_eq!(med.strategy, Strategy::None);
        assert!(med.template.is_none());
        // compare to one native cycle around an interior truth peak
        let half = 250;
        let start = truth.r_peaks[4] - half;
        for li in 0..12 {
            for col in 0..500 {
                assert_abs_diff_eq!(
                    med.signal[[li, col]],
                    rec.signal[[li, start + col]],
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn none_median_drops_incomplete_edge_windows() {
        // first beat at 0.35 * rr = 175 < half-width 250: window clipped
        let (rec, _) = generate_ecg(&SynthSpec::default()).unwrap();
        let ann = annotate(&rec);
        let half = 250usize;
        let complete = ann
            .peaks
            .iter()
            .filter(|&&p| p >= half && p + half <= rec.n_samples())
            .count();
        assert_eq!(complete, ann.peaks.len() - 1);
        let med = align_none_median(&rec, &ann).unwrap();
        assert_eq!(med.signal.ncols(), 2 * half);
    }

    #[test]
    fn none_median_width_follows_median_rr() {
        let rec = {
            let (r, _) = generate_ecg(&SynthSpec::default()).unwrap();
            r
        };
        // drifting RR list: 60 -> 75 bpm equivalents at 500 Hz
        let peaks = vec![300, 800, 1290, 1750, 2190, 2610, 3010, 3410];
        let rrs: Vec<f64> = peaks.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        let mut sorted = rrs.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = (sorted[2] + sorted[3]) / 2.0; // 7 intervals -> index 3; even check below
        let _ = median;
        let ann = RPeakAnnotation {
            peaks,
            heart_rate_bpm: 66.0,
            lead_used: "II".into(),
        };
        let med = align_none_median(&rec, &ann).unwrap();
        // brute-force median of the RR list
        let expect_half = (0.5 * sorted[3]).round() as usize; // odd count: middle element
        assert_eq!(med.signal.ncols(), 2 * expect_half);
    }

    #[test]
    fn beat_count_mismatch_truncates_and_repeats() {
        let template = default_template();
        // more source beats than template slots: 150 bpm -> ~24 beats
        let (fast, _) = generate_ecg(&SynthSpec { bpm: 150.0, ..SynthSpec::default() }).unwrap();
        let ann = annotate(&fast);
        assert!(ann.peaks.len() - 1 > template.r_peak_positions.len() - 1);
        let out = align_linear(&fast, &ann, &template).unwrap();
        assert_eq!(out.signal.ncols(), 5000);

        // fewer source beats: 45 bpm -> ~7 beats, the last cycle repeats
        let (slow, _) = generate_ecg(&SynthSpec { bpm: 45.0, ..SynthSpec::default() }).unwrap();
        let ann = annotate(&slow);
        let n_src_cycles = ann.peaks.len() - 1;
        assert!(n_src_cycles < template.r_peak_positions.len() - 1);
        let out = align_linear(&slow, &ann, &template).unwrap();
        // last two template cycles hold identical content (repeated source)
        let k = template.r_peak_positions.len() - 2;
        let a = template.r_peak_positions[k - 1];
        let b = template.r_peak_positions[k];
        for j in 0..template.rr_samples {
            assert_abs_diff_eq!(
                out.signal[[1, a + j]],
                out.signal[[1, b + j]],
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn alignment_requires_two_peaks() {
        let (rec, _) = generate_ecg(&SynthSpec::default()).unwrap();
        let template = default_template();
        let ann = RPeakAnnotation {
            peaks: vec![400],
            heart_rate_bpm: 0.0,
            lead_used: "II".into(),
        };
        assert!(matches!(
            align_linear(&rec, &ann, &template),
            Err(Error::AlignmentFailed(_))
        ));
        assert!(align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).is_err());
    }

    #[test]
    fn hrc_degenerate_cycle_names_the_cycle() {
        let (rec, _) = generate_ecg(&SynthSpec::default()).unwrap();
        let template = default_template();
        let ann = RPeakAnnotation {
            peaks: vec![100, 110, 600], // 10-sample cycle
            heart_rate_bpm: 60.0,
            lead_used: "II".into(),
        };
        match align_hrc(&rec, &ann, &template, &HrcCoefficients::default()) {
            Err(Error::AlignmentFailed(msg)) => assert!(msg.contains("cycle 0"), "{msg}"),
            other => panic!("expected alignment failure, got {other:?}"),
        }
    }
}
