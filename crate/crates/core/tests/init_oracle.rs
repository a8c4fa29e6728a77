use lcvs::model::{ModelConfig, ModelParams, Stage, WeightsFile};
use lcvs::rng::SplitMix64;
use lcvs::Error;

// First outputs of the reference SplitMix64 for seed 42, computed with an
// independent big-integer implementation.
const SEED_42: [u64; 3] = [0xBDD7_3226_2FEB_6E95, 0x28EF_E333_B266_F103, 0x4752_6757_130F_9F52];

fn unit(u: u64) -> f64 {
    (u >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn splitmix_seed_42() {
    let mut rng = SplitMix64::new(42);
    for want in SEED_42 {
        assert_eq!(rng.next_u64(), want);
    }
}

#[test]
fn first_weights_follow_the_generator() {
    let cfg = ModelConfig { seed: 42, ..ModelConfig::tiny() };
    let params = ModelParams::init(&cfg).unwrap();
    let named = params.named_params();
    assert_eq!(named[0].name, "backbone_I.conv0.weight");
    assert_eq!(named.last().unwrap().name, "classifier.conv1.bias");
    let first = named[0].param;
    let bound = 1.0 / (first.shape[1..].iter().product::<usize>() as f64).sqrt();
    for (v, u) in first.data.iter().zip(SEED_42) {
        assert_eq!(*v, (2.0 * unit(u) - 1.0) * bound);
    }
    for p in &named {
        if p.param.shape.len() == 1 {
            assert!(p.param.data.iter().all(|&v| v == 0.0), "{} not zero", p.name);
        } else {
            let bound = 1.0 / (p.param.shape[1..].iter().product::<usize>() as f64).sqrt();
            assert!(p.param.data.iter().all(|v| v.abs() <= bound), "{}", p.name);
        }
    }
}

#[test]
fn init_is_seeded() {
    let a = ModelParams::init(&ModelConfig::tiny()).unwrap();
    assert_eq!(a, ModelParams::init(&ModelConfig::tiny()).unwrap());
    assert_ne!(a, ModelParams::init(&ModelConfig { seed: 1, ..ModelConfig::tiny() }).unwrap());
}

#[test]
fn tiny_head_fits_the_budget() {
    let p = ModelParams::init(&ModelConfig::tiny()).unwrap();
    assert!(p.count(&[Stage::Fcn, Stage::Classifier]) <= 2000);
    assert!(p.count(&[Stage::Lstm, Stage::Fcn, Stage::Classifier]) <= 2000);
}

#[test]
fn weights_file_roundtrip_and_mismatch() {
    let cfg = ModelConfig { seed: 5, ..ModelConfig::tiny() };
    let p = ModelParams::init(&cfg).unwrap();
    let json = WeightsFile::from_model(&p, &cfg).to_json().unwrap();
    let (back, back_cfg) = WeightsFile::from_json(&json).unwrap().into_model().unwrap();
    assert_eq!(back, p);
    assert_eq!(back_cfg, cfg);

    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["tensors"]["lstm.l0.w_ii"]["shape"] = serde_json::json!([2, 2]);
    let err = WeightsFile::from_json(&v.to_string()).and_then(WeightsFile::into_model).unwrap_err();
    assert!(matches!(err, Error::Shape(_)), "{err}");
}
