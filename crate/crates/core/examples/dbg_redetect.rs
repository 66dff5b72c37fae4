use ecgalign::align::{align_linear, design_template};
use ecgalign::rpeak::{annotate_record, DetectorConfig};
use ecgalign::synth::{generate_ecg, SynthSpec};

fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    let mut prefix = vec![0.0];
    let mut acc = 0.0;
    for &v in x { acc += v; prefix.push(acc); }
    (0..n).map(|i| {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        (prefix[hi] - prefix[lo]) / (hi - lo) as f64
    }).collect()
}

fn main() {
    let template = design_template(10.0, 500.0, 60.0, 175).unwrap();
    let (rec, _) = generate_ecg(&SynthSpec {
        bpm: 140.0, seed: 42, rr_jitter: 0.02, noise_snr_db: Some(20.0),
        ..SynthSpec::default()
    }).unwrap();
    let ann = annotate_record(&rec, None, &DetectorConfig::default()).unwrap();
    let aligned = align_linear(&rec, &ann, &template).unwrap();
    // re-run the clean+threshold steps manually on aligned lead II
    let raw: Vec<f64> = aligned.signal.row(1).to_vec();
    let hp = ecgalign::dsp::butterworth_highpass(&raw, 500.0, 0.5, 5).unwrap();
    let x = ecgalign::dsp::powerline_notch(&hp, 500.0, 50.0).unwrap();
    let n = x.len();
    let grad: Vec<f64> = (0..n).map(|i| {
        if i == 0 { x[1]-x[0] } else if i == n-1 { x[n-1]-x[n-2] } else { (x[i+1]-x[i-1])/2.0 }
    }).map(|v: f64| v.abs()).collect();
    let smooth = moving_average(&grad, 50);
    let base = moving_average(&smooth, 375);
    let floor = 0.2 * smooth.iter().cloned().fold(0.0f64, f64::max);
    let mask: Vec<bool> = (0..n).map(|i| smooth[i] > 1.5 * base[i].max(floor)).collect();
    let mut regions = vec![];
    let mut start = None;
    for i in 0..n {
        match (mask[i], start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => { regions.push((s, i)); start = None; }
            _ => {}
        }
    }
    println!("floor {floor:.5}");
    for (s, e) in &regions {
        let peak = (*s..*e).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap();
        println!("region ({s:4}, {e:4}) width {:3} peak {peak} |x| {:.3}", e - s, x[peak].abs());
    }
}
