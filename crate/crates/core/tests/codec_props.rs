mod common;

use lcvs::codec::{decode, deserialize, encode, estimate_motion, read_raw_video, serialize, write_raw_video, EncoderConfig};
use lcvs::rng::SplitMix64;
use proptest::prelude::*;

use common::{oracle_motion, random_video};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lossless_roundtrip(seed in any::<u64>(), w in 16usize..44, h in 16usize..44, n in 1usize..9, gop in 2usize..6, sr in 1u8..5) {
        let v = random_video(seed, w, h, n);
        let cfg = EncoderConfig { gop_size: gop, search_range: sr, quant_step: None };
        let s = encode(&v, &cfg).unwrap();
        prop_assert_eq!(decode(&s).unwrap(), v);
    }

    #[test]
    fn raw_file_roundtrip(seed in any::<u64>(), w in 1usize..30, h in 1usize..30, n in 1usize..4) {
        let v = random_video(seed, w, h, n);
        prop_assert_eq!(read_raw_video(&write_raw_video(&v)).unwrap(), v);
    }
}

#[test]
fn serialization_roundtrip_1000_streams() {
    let mut rng = SplitMix64::new(11);
    for i in 0..1000 {
        let w = rng.range_inclusive(16, 40) as usize;
        let h = rng.range_inclusive(16, 40) as usize;
        let n = rng.range_inclusive(1, 7) as usize;
        let cfg = EncoderConfig {
            gop_size: rng.range_inclusive(2, 5) as usize,
            search_range: rng.range_inclusive(1, 4) as u8,
            quant_step: (i % 3 == 0).then(|| rng.range_inclusive(1, 16) as u16),
        };
        let s = encode(&random_video(rng.next_u64(), w, h, n), &cfg).unwrap();
        let bytes = serialize(&s);
        let back = deserialize(&bytes).unwrap();
        assert_eq!(back, s, "stream {i}");
        assert_eq!(serialize(&back), bytes);
    }
}

#[test]
fn every_truncation_is_rejected() {
    // 6 frames in GOPs of 3: no partial tail
    let s = encode(&random_video(5, 20, 18, 6), &EncoderConfig { gop_size: 3, ..Default::default() }).unwrap();
    assert!(!s.header.partial_tail());
    let bytes = serialize(&s);
    for cut in 0..bytes.len() {
        let err = deserialize(&bytes[..cut]).unwrap_err();
        assert!(err.is_stream_corruption(), "cut {cut}: {err}");
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(deserialize(&extra).unwrap_err().is_stream_corruption());
}

#[test]
fn partial_tail_truncation_is_rejected_unless_frame_aligned() {
    // The tail GOP's P-frame count is implied by its length, so a cut that
    // drops whole tail P-frames still parses; every other cut must not.
    let s = encode(&random_video(5, 20, 18, 5), &EncoderConfig { gop_size: 3, ..Default::default() }).unwrap();
    assert!(s.header.partial_tail());
    let bytes = serialize(&s);
    let pframe_len = 2 * 2 * 2 + 2 * 3 * 20 * 18;
    let tail_start = bytes.len() - pframe_len;
    for cut in 0..bytes.len() {
        match deserialize(&bytes[..cut]) {
            Err(e) => assert!(e.is_stream_corruption(), "cut {cut}: {e}"),
            Ok(short) => {
                assert_eq!(cut, tail_start, "cut {cut} parsed");
                assert_eq!(short.gops[1].pframes.len(), 0);
            }
        }
    }
}

#[test]
fn bad_magic_is_rejected() {
    let s = encode(&random_video(1, 16, 16, 2), &EncoderConfig::default()).unwrap();
    let mut bytes = serialize(&s);
    bytes[0] = b'X';
    assert!(deserialize(&bytes).unwrap_err().is_stream_corruption());
}

#[test]
fn motion_search_matches_exhaustive_oracle() {
    for seed in 0..40u64 {
        let mut rng = SplitMix64::new(seed);
        let w = rng.range_inclusive(16, 48) as usize;
        let h = rng.range_inclusive(16, 48) as usize;
        let sr = rng.range_inclusive(0, 5) as u8;
        let v = random_video(seed, w, h, 2);
        let got = estimate_motion(&v.frames[0], &v.frames[1], sr);
        assert_eq!(got, oracle_motion(&v.frames[0], &v.frames[1], sr as i32), "seed {seed}");
    }
}

#[test]
fn lossy_mode_stays_close() {
    let v = random_video(3, 32, 32, 6);
    let s = encode(&v, &EncoderConfig { quant_step: Some(4), ..Default::default() }).unwrap();
    let d = decode(&s).unwrap();
    assert!(s.header.lossy());
    for (a, b) in d.frames.iter().zip(&v.frames) {
        let mad = a.data.iter().zip(&b.data).map(|(x, y)| x.abs_diff(*y) as f64).sum::<f64>() / a.data.len() as f64;
        assert!(mad < 4.0, "mean abs error {mad}");
    }
}
