use milrec::data::{popularity, Interactions, SplitDataset, Vocabulary};
use milrec::eval::{evaluate, EvalOptions, NovIdeal, UndefinedNovelty};
use milrec::Result;
use proptest::prelude::*;

/// Role of each (user, item) cell: 0 unobserved, 1 train, 2 valid, 3 test.
fn build(n_items: usize, cells: &[Vec<u8>]) -> SplitDataset {
    let part = |role: u8| {
        Interactions::from_lists(n_items, cells.iter().map(|row| (0..n_items as u32).filter(|&i| row[i as usize] == role).collect()).collect())
    };
    let mut users = Vocabulary::default();
    let mut items = Vocabulary::default();
    for u in 0..cells.len() {
        users.intern(&format!("u{u}"));
    }
    for i in 0..n_items {
        items.intern(&format!("i{i}"));
    }
    SplitDataset::new(part(1), part(2), part(3), users, items).unwrap()
}

struct Reference {
    recall: f64,
    ndcg: f64,
    nov: f64,
}

/// Full sort of unseen items; every metric accumulated term by term.
fn reference(cells: &[Vec<u8>], scores: &[Vec<f64>], k: usize, ideal: NovIdeal) -> (Vec<Reference>, usize) {
    let n_items = cells[0].len();
    let mut counts = vec![0u64; n_items];
    for row in cells {
        for (i, &r) in row.iter().enumerate() {
            counts[i] += (r == 1) as u64;
        }
    }
    let total: u64 = counts.iter().sum();
    let nov = |i: usize| -((counts[i] as f64) / (total as f64)).ln();
    let disc = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let mut out = Vec::new();
    let mut excluded = 0;
    for (u, row) in cells.iter().enumerate() {
        let test: Vec<usize> = (0..n_items).filter(|&i| row[i] == 3).collect();
        if test.is_empty() {
            continue;
        }
        let mut cand: Vec<usize> = (0..n_items).filter(|&i| row[i] == 0 || row[i] == 3).collect();
        cand.sort_by(|&a, &b| scores[u][b].partial_cmp(&scores[u][a]).unwrap().then(a.cmp(&b)));
        cand.truncate(k);
        let n = k.min(test.len());
        let hits: Vec<usize> = (0..cand.len()).filter(|&s| row[cand[s]] == 3).collect();
        let recall = hits.len() as f64 / n as f64;
        let ndcg = hits.iter().map(|&s| disc(s + 1)).sum::<f64>() / (1..=n).map(disc).sum::<f64>();

        let defined: Vec<usize> = test.iter().copied().filter(|&i| counts[i] > 0).collect();
        excluded += test.len() - defined.len();
        let nv = if defined.is_empty() {
            0.0
        } else {
            let dcg: f64 = hits.iter().filter(|&&s| counts[cand[s]] > 0).map(|&s| nov(cand[s]) * disc(s + 1)).sum();
            let m = k.min(defined.len());
            let mut vals: Vec<f64> = defined.iter().map(|&i| nov(i)).collect();
            vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let idcg: f64 = match ideal {
                NovIdeal::MaxNovelty => (1..=m).map(|s| vals[0] * disc(s)).sum(),
                NovIdeal::Sorted => (0..m).map(|s| vals[s] * disc(s + 1)).sum(),
            };
            if idcg > 0.0 {
                dcg / idcg
            } else {
                0.0
            }
        };
        out.push(Reference { recall, ndcg, nov: nv });
    }
    (out, excluded)
}

fn case() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<Vec<f64>>)> {
    (1usize..7, 4usize..14).prop_flat_map(|(nu, ni)| {
        (
            prop::collection::vec(prop::collection::vec(prop::sample::select(vec![0u8, 0, 1, 1, 2, 3]), ni), nu),
            // small integer scores make ties common
            prop::collection::vec(prop::collection::vec((0u8..5).prop_map(f64::from), ni), nu),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn evaluate_matches_a_brute_force_reference(
        (mut cells, scores) in case(),
        k in 1usize..8,
        sorted in any::<bool>(),
        threads in 1usize..4,
    ) {
        // guarantee a non-empty training set
        cells[0][0] = 1;
        let data = build(cells[0].len(), &cells);
        let pop = popularity(&data.train).unwrap();
        let ideal = if sorted { NovIdeal::Sorted } else { NovIdeal::MaxNovelty };
        let opts = EvalOptions { ks: vec![k], nov_ideal: ideal, undefined_novelty: UndefinedNovelty::Exclude, threads };
        let scorer = |u: usize| -> Result<Vec<f64>> { Ok(scores[u].clone()) };
        let report = evaluate(&scorer, &data, &pop, &opts).unwrap();

        let (refs, excluded) = reference(&cells, &scores, k, ideal);
        prop_assert_eq!(report.users, refs.len());
        prop_assert_eq!(report.nov_excluded, excluded);
        let mean = |f: fn(&Reference) -> f64| if refs.is_empty() { 0.0 } else { refs.iter().map(f).sum::<f64>() / refs.len() as f64 };
        prop_assert!((report.recall[&k] - mean(|r| r.recall)).abs() < 1e-12);
        prop_assert!((report.ndcg[&k] - mean(|r| r.ndcg)).abs() < 1e-12);
        prop_assert!((report.nov_ndcg[&k] - mean(|r| r.nov)).abs() < 1e-12);
    }

    #[test]
    fn strict_novelty_fails_exactly_when_an_item_is_excluded((mut cells, scores) in case()) {
        cells[0][0] = 1;
        let data = build(cells[0].len(), &cells);
        let pop = popularity(&data.train).unwrap();
        let scorer = |u: usize| -> Result<Vec<f64>> { Ok(scores[u].clone()) };
        let strict = EvalOptions { ks: vec![3], undefined_novelty: UndefinedNovelty::Error, ..EvalOptions::default() };
        let (_, excluded) = reference(&cells, &scores, 3, NovIdeal::MaxNovelty);
        prop_assert_eq!(evaluate(&scorer, &data, &pop, &strict).is_err(), excluded > 0);
    }
}
