use std::collections::BTreeMap;

use pagforge_adjudication::labels::replay;
use pagforge_adjudication::network::similarity_edges;
use pagforge_adjudication::*;
use pagforge_core::descriptors::{dice_distance, Fingerprint};
use proptest::prelude::*;

fn store() -> Store {
    let rows = [
        ("a", "C[S+]1CCCC1"),
        ("b", "C[S+]1CCCCC1"),
        ("c", "c1ccc(cc1)[S+](c1ccccc1)c1ccccc1"),
        ("d", "C[S+]1c2ccccc2-c2ccccc21"),
    ];
    Store::from_inputs(
        rows.iter()
            .map(|(id, s)| CandidateInput {
                id: id.to_string(),
                smiles: s.to_string(),
                classifier_score: 0.5,
                max_ref_similarity: 0.2,
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_replay_matches_live_state(ops in prop::collection::vec((0usize..4, 0usize..3, 0usize..2), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.ndjson");
        let svc = Service::with_store(store(), &path).unwrap();
        let ids: Vec<String> = svc.store().scaffolds().iter().map(|s| s.id.clone()).collect();
        let mut expected = BTreeMap::new();
        let mut last_len = 0;
        for (s, d, who) in ops {
            let id = ids[s % ids.len()].clone();
            let decision = Decision::ALL[d];
            svc.submit(LabelSubmission {
                scaffold_id: id.clone(),
                decision: decision.as_str().into(),
                annotator: Some(format!("expert{who}")),
                note: None,
            }).unwrap();
            expected.insert(id, decision);
            let len = std::fs::metadata(&path).unwrap().len();
            prop_assert!(len > last_len);
            last_len = len;
        }
        prop_assert_eq!(svc.effective_labels(), expected.clone());
        let (state, report) = replay(&std::fs::read_to_string(&path).unwrap());
        prop_assert!(report.skipped_lines.is_empty());
        prop_assert_eq!(&state, &*svc.labels());
        drop(svc);
        let again = Service::with_store(store(), &path).unwrap();
        prop_assert_eq!(again.effective_labels(), expected);
    }

    #[test]
    fn edges_iff_below_threshold(
        sets in prop::collection::vec(prop::collection::btree_set(0usize..64, 1..20), 2..8),
        t in 0.0f64..1.0,
    ) {
        let fps: Vec<Fingerprint> = sets.iter().map(|s| Fingerprint::from_bits(64, &s.iter().copied().collect::<Vec<_>>()).unwrap()).collect();
        let names: Vec<String> = (0..fps.len()).map(|i| format!("n{i}")).collect();
        let pairs: Vec<(&str, &Fingerprint)> = names.iter().map(String::as_str).zip(&fps).collect();
        let edges = similarity_edges(&pairs, t);
        for i in 0..fps.len() {
            for j in 0..fps.len() {
                if i == j { continue; }
                let linked = edges.iter().any(|e| (e.source == names[i] && e.target == names[j]) || (e.source == names[j] && e.target == names[i]));
                prop_assert_eq!(linked, dice_distance(&fps[i], &fps[j]).unwrap() < t);
            }
        }
        prop_assert!(edges.iter().all(|e| e.source != e.target));
    }
}
