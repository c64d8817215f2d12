use std::collections::BTreeSet;
use std::f64::consts::TAU;

use sqrs::channel::{
    detector_reading, intercept_resend, ChannelParams, EveBasis, Fiber, InterceptResend, Path,
};
use sqrs::protocol::{Encoding, Simulator};
use sqrs::qubit::{Basis, PreparedStateLabel, TableCell};

fn three_sigma(observed: u64, p: f64, n: u64) -> bool {
    let expected = p * n as f64;
    (observed as f64 - expected).abs() <= 3.0 * (n as f64 * p * (1.0 - p)).sqrt() + 1e-9
}

/// Independent statement of the σy outcome probabilities, row by row.
fn table_oracle(cell: TableCell, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    match cell.index() {
        1 => (1.0 + s) / 2.0,
        2 => (1.0 - s) / 2.0,
        3 => (1.0 - s) / 2.0,
        4 => (1.0 + s) / 2.0,
        5 => (1.0 + c) / 2.0,
        6 => (1.0 - c) / 2.0,
        7 => (1.0 - c) / 2.0,
        _ => (1.0 + c) / 2.0,
    }
}

#[test]
fn source_picks_labels_uniformly() {
    let run = Simulator::new(ChannelParams::ideal())
        .unwrap()
        .run(Encoding::Fixed(0.7), 100_000, 1, 0)
        .unwrap();
    let n = run.alice_log.len() as u64;
    assert_eq!(n, 100_000);
    for label in PreparedStateLabel::ALL {
        let k = run.alice_log.iter().filter(|r| r.label == label).count() as u64;
        assert!(three_sigma(k, 0.25, n), "{label}: {k}");
    }
}

#[test]
fn noiseless_frequencies_follow_the_table() {
    let params = ChannelParams::field_50km();
    let sim = Simulator::new(params).unwrap();
    let pulses = params.pulses_for_sensing_events(40_000);
    for k in 0..9 {
        let phi = TAU * k as f64 / 9.0;
        let counts = sim
            .run(Encoding::Fixed(phi), pulses, 30 + k, 0)
            .unwrap()
            .counts[0];
        for cell in TableCell::ALL {
            let m = counts.label_total(cell.label);
            let p = table_oracle(cell, phi);
            assert!(
                three_sigma(counts.get(cell), p, m),
                "φ={phi:.3} {cell}: {} of {m}, p={p}",
                counts.get(cell)
            );
        }
    }
}

#[test]
fn counts_are_conserved() {
    for params in [ChannelParams::ideal(), ChannelParams::field_noise()] {
        let sim = Simulator::new(params).unwrap();
        for encoding in [Encoding::Fixed(2.0), Encoding::Calibration] {
            let run = sim.run_sharded(encoding, 3_000_000, 5, 0, 4).unwrap();
            let sensing = run.eve_view.sensing_clicks().count() as u64;
            assert_eq!(run.sensing_events(), sensing);
            assert_eq!(
                run.total_counts().detector1_total(),
                run.eve_view
                    .events
                    .iter()
                    .filter(|e| e.detector_id == 1)
                    .count() as u64
            );
            assert_eq!(
                run.sensing_events() + run.check_events + run.lost(),
                run.pulses
            );
            assert_eq!(run.alice_log.len(), run.eve_view.events.len());
        }
    }
}

/// Plug-in mutual information in nats of a contingency table.
fn mutual_information(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    let n = n as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] * cols[j])).ln();
            }
        }
    }
    mi
}

#[test]
fn eve_view_carries_no_phase_information() {
    let sim = Simulator::new(ChannelParams::ideal()).unwrap();
    // rows: phase, columns: sensing detector 1 / 2
    let table: Vec<Vec<u64>> = (0..9)
        .map(|k| {
            let run = sim
                .run(Encoding::Fixed(TAU * k as f64 / 9.0), 200_000, 40 + k, 0)
                .unwrap();
            let ones = run
                .eve_view
                .sensing_clicks()
                .filter(|e| e.detector_id == 1)
                .count() as u64;
            vec![ones, run.eve_view.sensing_clicks().count() as u64 - ones]
        })
        .collect();
    let n: u64 = table.iter().flatten().sum();
    // Under independence 2·N·MI is χ² with 8 degrees of freedom; 26.1 is
    // its 0.999 quantile.
    let g = 2.0 * n as f64 * mutual_information(&table);
    assert!(g < 26.1, "G statistic {g}");
}

#[test]
fn eve_records_hold_only_slot_detector_path() {
    let run = Simulator::new(ChannelParams::ideal())
        .unwrap()
        .run(Encoding::Fixed(1.0), 50, 2, 0)
        .unwrap();
    let mut buf = Vec::new();
    run.eve_view.write_jsonl(&mut buf).unwrap();
    for line in String::from_utf8(buf).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let keys: BTreeSet<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            BTreeSet::from(["slot".into(), "detector".into(), "path".into()])
        );
    }
}

fn attacked_qber(channel: InterceptResend<Fiber>, seed: u64) -> (f64, u64) {
    let params = ChannelParams::ideal();
    let report = Simulator::with_channel(params, channel)
        .unwrap()
        .run(Encoding::Fixed(0.0), 400_000, seed, 0)
        .unwrap()
        .check;
    (report.qber().unwrap(), report.sifted_count)
}

#[test]
fn intercept_resend_error_rates() {
    let (q, n) = attacked_qber(intercept_resend(EveBasis::Uniform), 50);
    assert!(
        three_sigma((q * n as f64).round() as u64, 0.25, n),
        "uniform: {q}"
    );

    // Measuring everything in σx leaves X states alone and randomizes Y.
    let (q, n) = attacked_qber(intercept_resend(EveBasis::Fixed(Basis::SigmaX)), 51);
    assert!(
        three_sigma((q * n as f64).round() as u64, 0.25, n),
        "fixed: {q}"
    );

    let half = intercept_resend(EveBasis::Uniform)
        .with_fraction(0.5)
        .unwrap();
    let (q, n) = attacked_qber(half, 52);
    assert!(
        three_sigma((q * n as f64).round() as u64, 0.125, n),
        "half: {q}"
    );
}

#[test]
fn check_arm_errors_come_only_from_matched_bases() {
    let run = Simulator::new(ChannelParams::ideal())
        .unwrap()
        .run(Encoding::Fixed(0.4), 100_000, 9, 0)
        .unwrap();
    let check: Vec<_> = run
        .alice_log
        .iter()
        .filter(|r| r.detector >= Path::Check.first_detector())
        .collect();
    assert_eq!(check.len() as u64, run.check_events);
    let sifted = check
        .iter()
        .filter(|r| detector_reading(Path::Check, r.detector).0 == r.label.basis())
        .count() as u64;
    assert_eq!(sifted, run.check.sifted_count);
    assert!(three_sigma(sifted, 0.5, run.check_events));
}
