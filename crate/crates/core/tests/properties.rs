use proptest::prelude::*;

use emg_core::dsp::{preprocess, FilterConfig};
use emg_core::features::{feature_vector, moments};
use emg_core::mlp::argmax;
use emg_core::model::{parse_recording, write_recording};
use emg_core::transport::{decode_frame, encode_frame, EmgFrame, FrameDecoder, FRAME_LEN};
use emg_core::wavelet::{dwt_decompose, idwt_reconstruct, WaveletSpec};
use emg_core::{EmgRecording, EmgSample, Gesture, CHANNELS};

fn gesture() -> impl Strategy<Value = Gesture> {
    prop::sample::select(Gesture::ALL.to_vec())
}

fn recording() -> impl Strategy<Value = EmgRecording> {
    (1u32..2000, prop::collection::vec(any::<[i8; CHANNELS]>(), 1..60), any::<bool>(), 0u64..1_000_000)
        .prop_flat_map(|(fs, rows, labelled, first)| {
            let labels = if labelled {
                prop::collection::vec(gesture(), rows.len()).prop_map(Some).boxed()
            } else {
                Just(None).boxed()
            };
            (Just(fs), Just(rows), Just(first), labels)
        })
        .prop_map(|(fs, rows, first, labels)| {
            let samples = rows
                .into_iter()
                .enumerate()
                .map(|(i, ch)| EmgSample { t: first + i as u64, ch })
                .collect();
            EmgRecording::new(fs, samples, labels).unwrap()
        })
}

fn spec() -> impl Strategy<Value = WaveletSpec> {
    prop::sample::select(vec![WaveletSpec::haar(), WaveletSpec::db2(), WaveletSpec::db4()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recording_text_roundtrips(rec in recording()) {
        let text = write_recording(&rec);
        let back = parse_recording(&text).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(write_recording(&back), text);
    }

    #[test]
    fn moments_under_affine_maps(
        x in prop::collection::vec(-100.0f64..100.0, 8..200),
        shift in -1e3f64..1e3,
        scale in 0.01f64..100.0,
    ) {
        let m = moments(&x).unwrap();
        prop_assume!(m.sigma > 1e-3);
        let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let n = moments(&y).unwrap();
        prop_assert!((n.mean - (scale * m.mean + shift)).abs() <= 1e-9 * (1.0 + n.mean.abs()));
        prop_assert!((n.sigma - scale * m.sigma).abs() <= 1e-9 * n.sigma);
        prop_assert!((n.skewness - m.skewness).abs() <= 1e-7 * (1.0 + m.skewness.abs()));
        prop_assert!((n.kurtosis - m.kurtosis).abs() <= 1e-7 * m.kurtosis);
        prop_assert!(m.kurtosis >= 1.0 - 1e-12);
    }

    #[test]
    fn wavelet_reconstructs(spec in spec(), levels in 1usize..=3, x in prop::collection::vec(-50.0f64..50.0, 64)) {
        let sb = dwt_decompose(&x, &spec, levels).unwrap();
        let back = idwt_reconstruct(&sb, &spec).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let e: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((sb.energy() - e).abs() <= 1e-9 * e.max(1.0));
    }

    #[test]
    fn preprocess_is_linear(
        a in prop::collection::vec(-100.0f64..100.0, 200),
        b in prop::collection::vec(-100.0f64..100.0, 200),
        alpha in -3.0f64..3.0,
    ) {
        let cfg = FilterConfig::default();
        let block = |x: &[f64]| vec![x.to_vec(); CHANNELS];
        let mix: Vec<f64> = a.iter().zip(&b).map(|(p, q)| alpha * p + q).collect();
        let ya = preprocess(&block(&a), &cfg).unwrap();
        let yb = preprocess(&block(&b), &cfg).unwrap();
        let ym = preprocess(&block(&mix), &cfg).unwrap();
        for i in 0..200 {
            let want = alpha * ya[0][i] + yb[0][i];
            prop_assert!((ym[0][i] - want).abs() < 1e-9 * (1.0 + want.abs()));
            prop_assert!(ym[0][i].is_finite());
        }
    }

    #[test]
    fn feature_layout_follows_channels(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 64), CHANNELS),
        rot in 1usize..CHANNELS,
    ) {
        let spec = WaveletSpec::db2();
        let f = feature_vector(&rows, &spec, 2).unwrap();
        let mut rotated = rows.clone();
        rotated.rotate_left(rot);
        let g = feature_vector(&rotated, &spec, 2).unwrap();
        let per = f.len() / CHANNELS;
        for c in 0..CHANNELS {
            let src = (c + rot) % CHANNELS;
            prop_assert_eq!(&g.0[c * per..(c + 1) * per], &f.0[src * per..(src + 1) * per]);
        }
    }

    #[test]
    fn argmax_ignores_monotone_maps(v in prop::collection::vec(-10.0f64..10.0, 1..12), k in 0.1f64..5.0) {
        let (i, _) = argmax(&v);
        let mapped: Vec<f64> = v.iter().map(|x| (k * x).exp()).collect();
        prop_assert_eq!(argmax(&mapped).0, i);
        prop_assert!(v.iter().all(|&x| x <= v[i]));
    }

    #[test]
    fn frames_roundtrip(seq in any::<u16>(), ch in any::<[i8; CHANNELS]>()) {
        let f = EmgFrame { seq, ch };
        let bytes = encode_frame(&f);
        prop_assert_eq!(bytes.len(), FRAME_LEN);
        prop_assert_eq!(decode_frame(&bytes).unwrap(), f);
        let sum = bytes.iter().fold(0u8, |s, &b| s.wrapping_add(b));
        prop_assert_eq!(sum, 0);
    }

    #[test]
    fn resync_recovers_after_noise(
        noise in prop::collection::vec(any::<u8>().prop_filter("no magic", |b| *b != 0xA5), 0..200),
        seqs in prop::collection::vec(any::<u16>(), 1..10)) {
        let frames: Vec<EmgFrame> = seqs.iter().map(|&s| EmgFrame { seq: s, ch: [s as i8; CHANNELS] }).collect();
        let mut stream = noise.clone();
        for f in &frames {
            stream.extend_from_slice(&encode_frame(f));
        }
        let mut dec = FrameDecoder::new();
        dec.push(&stream);
        let mut out = Vec::new();
        while let Some(f) = dec.next_frame() {
            let bytes = encode_frame(&f);
            prop_assert_eq!(decode_frame(&bytes).unwrap(), f);
            out.push(f);
        }
        prop_assert_eq!(out, frames);
        prop_assert_eq!(dec.stats().skipped_bytes, noise.len() as u64);
    }
}
