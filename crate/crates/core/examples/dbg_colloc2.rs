use ecgalign::align::{align_hrc, align_linear, design_template, HrcCoefficients};
use ecgalign::rpeak::{annotate_record, detect_r_peaks, DetectorConfig};
use ecgalign::synth::{generate_ecg, SynthSpec};

fn main() {
    let template = design_template(10.0, 500.0, 60.0, 175).unwrap();
    for bpm in [50.0, 90.0, 140.0] {
        let (rec, _) = generate_ecg(&SynthSpec {
            bpm, seed: 42, rr_jitter: 0.02, noise_snr_db: Some(20.0),
            ..SynthSpec::default()
        }).unwrap();
        let ann = annotate_record(&rec, None, &DetectorConfig::default()).unwrap();
        for (name, aligned) in [
            ("lin", align_linear(&rec, &ann, &template).unwrap()),
            ("hrc", align_hrc(&rec, &ann, &template, &HrcCoefficients::default()).unwrap()),
        ] {
            let lead: Vec<f64> = aligned.signal.row(1).to_vec();
            let peaks = detect_r_peaks(&lead, 500.0).unwrap().peaks;
            let errs: Vec<i64> = peaks.iter().map(|&p| {
                template.r_peak_positions.iter().map(|&r| p as i64 - r as i64)
                    .min_by_key(|d| d.abs()).unwrap()
            }).collect();
            println!("bpm {bpm} {name}: errors {errs:?}");
            // where is the true max near each template R?
            let apex: Vec<i64> = template.r_peak_positions.iter().map(|&r| {
                let lo = r.saturating_sub(10); let hi = (r+11).min(lead.len());
                let m = (lo..hi).max_by(|&a,&b| lead[a].total_cmp(&lead[b])).unwrap();
                m as i64 - r as i64
            }).collect();
            println!("            апex {apex:?}");
        }
    }
}
