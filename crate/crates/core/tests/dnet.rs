use dwl::bdr::BdrConfig;
use dwl::datasets::{make_bars_with_noise, make_blobs, split, BlobsSpec, Dataset, SplitSpec};
use dwl::dnet::{
    dnet_forward, dnet_init, dnet_predict, dnet_train, Aggregation, AugmentConfig, DNetConfig, Head, LdSource, Prediction, TrainConfig,
};
use dwl::metrics::accuracy;
use dwl::nn::{forward, LayerSpec, Padding};
use dwl::numerics::{Matrix, SeededRng};

fn blobs(seed: u64) -> (Dataset<f64>, Dataset<f64>, Dataset<f64>) {
    let spec = BlobsSpec {
        k: 3,
        dim: 4,
        n_per_class: 40,
        spread: 1.5,
        distractor_dims: 4,
        distractor_std: 1.0,
        center_box: 8.0,
    };
    let ds = make_blobs(&mut SeededRng::new(seed), &spec).unwrap();
    split(&ds, &SplitSpec { seed, ..SplitSpec::default() }).unwrap()
}

fn config(ld: LdSource) -> DNetConfig {
    DNetConfig {
        hd_layers: vec![LayerSpec::Dense { in_dim: 8, out_dim: 6 }, LayerSpec::Relu],
        ld_source: ld,
        aggregation: Aggregation::Concat,
        fusion_width: 8,
        fusion_relu: true,
        head: Head::Classification { k: 3 },
        ld_standardize: true,
        input_standardize: true,
    }
}

fn train_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 30,
        seed,
        ..TrainConfig::default()
    }
}

fn classes(p: Prediction<f64>) -> Vec<usize> {
    match p {
        Prediction::Classes(c) => c,
        Prediction::Values(_) => panic!("expected classes"),
    }
}

#[test]
fn single_channel_matches_plain_stack() {
    let (train, _, test) = blobs(1);
    let (model, _) = dnet_init(&config(LdSource::None), &train, 4).unwrap();
    let x = model.prepare_input(&test.x).unwrap();
    let out = dnet_forward(&model, &x, &Matrix::zeros(test.n_samples(), 0)).unwrap();
    let (h, _) = forward(&model.config.hd_layers, model.hd_params(), &x).unwrap();
    let (direct, _) = forward(&model.tail_specs().unwrap(), model.tail_params(), &h).unwrap();
    let same = out.as_slice().iter().zip(direct.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    assert!(same);
}

#[test]
fn best_epoch_is_kept() {
    let (train, val, _) = blobs(2);
    let (model, hist) = dnet_train(&config(LdSource::Bdr(BdrConfig { r: 3, ..BdrConfig::default() })), &train_cfg(2), &train, &val).unwrap();
    let best = hist.epochs.iter().map(|e| e.val_acc).fold(f64::MIN, f64::max);
    assert_eq!(hist.epochs[hist.best_epoch - 1].val_acc, best);
    let pred = classes(dnet_predict(&model, &val.x).unwrap());
    assert_eq!(accuracy(&pred, &val.labels).unwrap(), best);
}

#[test]
fn ld_cache_is_fixed_by_the_fit() {
    let (train, val, _) = blobs(3);
    let cfg = config(LdSource::Bdr(BdrConfig { r: 3, ..BdrConfig::default() }));
    let (_, cache) = dnet_init(&cfg, &train, 3).unwrap();
    let (model, _) = dnet_train(&cfg, &train_cfg(3), &train, &val).unwrap();
    let again = model.ld_features(&train.x).unwrap();
    assert_eq!(cache.as_slice(), again.as_slice());
}

#[test]
fn training_is_deterministic() {
    let (train, val, _) = blobs(4);
    let cfg = config(LdSource::Pca { r: 2 });
    let (a, ha) = dnet_train(&cfg, &train_cfg(9), &train, &val).unwrap();
    let (b, hb) = dnet_train(&cfg, &train_cfg(9), &train, &val).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let (c, _) = dnet_train(&cfg, &train_cfg(10), &train, &val).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn sum_aggregation_needs_matching_widths() {
    let (train, val, _) = blobs(5);
    let mut cfg = config(LdSource::Pca { r: 6 });
    cfg.aggregation = Aggregation::Sum;
    let (model, _) = dnet_train(&cfg, &train_cfg(5), &train, &val).unwrap();
    assert_eq!(model.fused_width().unwrap(), 6);
    cfg.ld_source = LdSource::Pca { r: 3 };
    assert!(dnet_init(&cfg, &train, 5).is_err());
}

#[test]
fn conv_model_learns_bars_with_augmentation() {
    let ds = make_bars_with_noise::<f64>(&mut SeededRng::new(6), 8, 60, 0.1).unwrap();
    let (train, val, test) = split(&ds, &SplitSpec { seed: 6, ..SplitSpec::default() }).unwrap();
    let cfg = DNetConfig {
        hd_layers: vec![
            LayerSpec::Conv2d { in_ch: 1, out_ch: 4, pad: Padding::Same },
            LayerSpec::Relu,
            LayerSpec::MaxPool2,
            LayerSpec::Flatten,
        ],
        ld_source: LdSource::Bdr(BdrConfig { r: 4, ..BdrConfig::default() }),
        aggregation: Aggregation::Concat,
        fusion_width: 16,
        fusion_relu: true,
        head: Head::Classification { k: 2 },
        ld_standardize: true,
        input_standardize: false,
    };
    let tcfg = TrainConfig {
        max_epochs: 25,
        augmentation: Some(AugmentConfig::default()),
        ..train_cfg(6)
    };
    let (model, hist) = dnet_train(&cfg, &tcfg, &train, &val).unwrap();
    assert!(!hist.epochs.is_empty());
    let acc = accuracy(&classes(dnet_predict(&model, &test.x).unwrap()), &test.labels).unwrap();
    assert!(acc >= 0.9, "test accuracy {acc}");
}
