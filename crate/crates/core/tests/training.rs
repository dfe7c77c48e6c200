use milrec::data::synthetic::low_rank_corpus;
use milrec::data::{split, SplitDataset};
use milrec::numeric::RngState;
use milrec::train::{init_params, mean_objective, train, write_checkpoint, TrainConfig, PRESETS};

fn data() -> SplitDataset {
    let corpus = low_rank_corpus(200, 150, 3, 0.06, &mut RngState::new(17)).unwrap();
    split(&corpus, 0.1, 0.1, &mut RngState::new(2)).unwrap()
}

fn small(preset: &str) -> TrainConfig {
    let mut cfg = TrainConfig::preset(preset).unwrap();
    cfg.dim = 16;
    cfg.iterations = 2000;
    cfg.eval_every = Some(0);
    cfg.seed = 4;
    cfg
}

#[test]
fn every_preset_lowers_its_objective() {
    let d = data();
    for preset in PRESETS.iter().copied() {
        let cfg = small(preset);
        let init = init_params(&cfg, d.n_users(), d.n_items(), &mut RngState::new(cfg.seed).fork(0)).unwrap();
        // same batches before and after training
        let before = mean_objective(&init, &cfg, &d, 20, &mut RngState::new(99)).unwrap();
        let (ckpt, _) = train(&cfg, &d).unwrap();
        let after = mean_objective(&ckpt.params, &cfg, &d, 20, &mut RngState::new(99)).unwrap();
        assert!(after < 0.9 * before, "{preset}: objective {before:.6} -> {after:.6}");
    }
}

#[test]
fn training_is_a_function_of_config_and_data() {
    let d = data();
    let mut cfg = small("ce-pair-lin-sig");
    cfg.iterations = 300;
    cfg.eval_every = Some(100);
    cfg.threads = 1;
    let (a, la) = train(&cfg, &d).unwrap();
    cfg.threads = 4;
    let (b, lb) = train(&cfg, &d).unwrap();
    assert_eq!(write_checkpoint(&a.params, a.n_users).unwrap(), write_checkpoint(&b.params, b.n_users).unwrap());
    assert_eq!(a.params.to_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.params.to_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    let strip = |l: &milrec::train::TrainLog| l.records.iter().map(|r| (r.iteration, r.train_loss.to_bits(), r.valid_ndcg.to_bits())).collect::<Vec<_>>();
    assert_eq!(strip(&la), strip(&lb));
    assert_eq!(la.records.len(), 3);

    cfg.seed = 5;
    let (c, _) = train(&cfg, &d).unwrap();
    assert_ne!(a.params.to_flat(), c.params.to_flat());
}
