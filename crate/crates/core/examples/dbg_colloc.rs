use ecgalign::align::{align_hrc, align_linear, design_template, HrcCoefficients};
use ecgalign::rpeak::{annotate_record, detect_r_peaks, DetectorConfig};
use ecgalign::synth::{generate_ecg, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let template = design_template(10.0, 500.0, 60.0, 175).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut det_err = vec![0usize; 8]; // histogram of |source detection error|
    let (mut lin_ok, mut lin_tot, mut hrc_ok, mut hrc_tot) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..60 {
        let bpm = 45.0 + rng.random::<f64>() * 105.0;
        let (rec, truth) = generate_ecg(&SynthSpec {
            bpm, seed: 5000 + i, rr_jitter: 0.02, noise_snr_db: Some(20.0),
            ..SynthSpec::default()
        }).unwrap();
        let ann = annotate_record(&rec, None, &DetectorConfig::default()).unwrap();
        for &p in &ann.peaks {
            if let Some(&t) = truth.r_peaks.iter().min_by_key(|&&t| (t as i64 - p as i64).abs()) {
                let e = (p as i64 - t as i64).unsigned_abs() as usize;
                det_err[e.min(7)] += 1;
            }
        }
        for (strategy, ok, tot) in [(0, &mut lin_ok, &mut lin_tot), (1, &mut hrc_ok, &mut hrc_tot)] {
            let aligned = if strategy == 0 {
                align_linear(&rec, &ann, &template).unwrap()
            } else {
                align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap()
            };
            let lead: Vec<f64> = aligned.signal.row(1).to_vec();
            let peaks = detect_r_peaks(&lead, 500.0).unwrap().peaks;
            for &p in &peaks {
                *tot += 1;
                if template.r_peak_positions.iter().any(|&r| (p as i64 - r as i64).abs() <= 2) {
                    *ok += 1;
                }
            }
        }
    }
    println!("source |err| histogram 0..7+: {det_err:?}");
    println!("linear collocation: {}/{} = {:.4}", lin_ok, lin_tot, lin_ok as f64 / lin_tot as f64);
    println!("hrc    collocation: {}/{} = {:.4}", hrc_ok, hrc_tot, hrc_ok as f64 / hrc_tot as f64);
}
