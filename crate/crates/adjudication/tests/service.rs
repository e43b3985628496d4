use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use pagforge_adjudication::depict::{depict_svg, layout};
use pagforge_adjudication::network::{similarity_edges, EdgeKind};
use pagforge_adjudication::*;
use pagforge_core::chem::parse_smiles;
use pagforge_core::descriptors::Fingerprint;
use serde_json::{json, Value};
use tower::ServiceExt;

fn input(id: &str, smiles: &str, score: f64) -> CandidateInput {
    CandidateInput {
        id: id.into(),
        smiles: smiles.into(),
        classifier_score: score,
        max_ref_similarity: 0.4,
    }
}

fn inputs() -> Vec<CandidateInput> {
    vec![
        input("g1", "C[S+]1CCCC1", 0.9),
        input("g2", "c1ccc(cc1)[S+](c1ccccc1)c1ccccc1", 0.7),
        input("g3", "C[S+]1c2ccccc2-c2ccccc21", 0.8),
        input("g4", "CC[S+]1CCCC1", 0.6),
        input("g5", "C[S+]1CCC(CC1)C(=O)OCC1CC[S+](C)C1", 0.55),
        input("g6", "CCCC", 0.3),
    ]
}

fn service(dir: &tempfile::TempDir) -> Arc<Service> {
    let store = Store::from_inputs(inputs()).unwrap();
    Arc::new(Service::with_store(store, &dir.path().join("labels.ndjson")).unwrap())
}

async fn call(svc: &Arc<Service>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = api::router(svc.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn label(svc: &Arc<Service>, scaffold: &str, decision: &str) -> StatusCode {
    call(svc, "POST", "/api/v1/labels", Some(json!({ "scaffold_id": scaffold, "decision": decision }))).await.0
}

#[test]
fn store_derives_sulfonium_scaffolds() {
    let store = Store::from_inputs(inputs()).unwrap();
    for c in store.candidates() {
        for s in &c.scaffold_ids {
            assert!(store.scaffold(s).unwrap().parents.contains(&c.id));
        }
    }
    assert_eq!(store.candidate("g5").unwrap().scaffold_ids.len(), 2);
    assert!(store.candidate("g6").unwrap().scaffold_ids.is_empty());
    let g1 = &store.candidate("g1").unwrap().scaffold_ids;
    assert_eq!(g1, &store.candidate("g4").unwrap().scaffold_ids);
    assert_eq!(store.scaffold(&g1[0]).unwrap().parents, ["g1", "g4", "g5"]);
    assert_eq!(store.queue_order()[0].id, "g1");

    let mut bad = inputs();
    bad[0].classifier_score = 1.0;
    assert!(Store::from_inputs(bad).is_err());
    let mut dup = inputs();
    dup[1].id = "g1".into();
    assert!(Store::from_inputs(dup).is_err());
}

#[tokio::test]
async fn labels_last_write_wins_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(&dir);
    let s = svc.store().scaffolds()[0].id.clone();
    assert_eq!(label(&svc, &s, "accept").await, StatusCode::CREATED);
    assert_eq!(label(&svc, &s, "reject").await, StatusCode::CREATED);
    assert_eq!(svc.effective_labels()[&s], Decision::Reject);
    assert_eq!(label(&svc, "S9999", "accept").await, StatusCode::NOT_FOUND);
    assert_eq!(label(&svc, &s, "maybe").await, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(svc.labels().history().len(), 2);

    let (status, body) = call(&svc, "GET", "/api/v1/labels", None).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["effective"][&s], "reject");
    assert_eq!(v["counts"]["reject"], 1);

    let (_, body) = call(&svc, "GET", &format!("/api/v1/scaffolds/{s}"), None).await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["history"].as_array().unwrap().len(), 2);
    assert_eq!(call(&svc, "GET", "/api/v1/scaffolds/nope", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn replay_after_kill_restores_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.ndjson");
    let ids: Vec<String> = Store::from_inputs(inputs()).unwrap().scaffolds().iter().map(|s| s.id.clone()).collect();
    let before = {
        let svc = service(&dir);
        for (i, d) in ["accept", "uncertain", "reject", "accept", "reject"].iter().enumerate() {
            label(&svc, &ids[i % ids.len()], d).await;
        }
        svc.effective_labels()
    };
    let len = std::fs::metadata(&path).unwrap().len();
    {
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"seq":6,"scaffold_id":"S00"#).unwrap();
    }
    let svc = service(&dir);
    assert_eq!(svc.effective_labels(), before);
    assert_eq!(svc.replay_report().records, 5);
    assert_eq!(svc.replay_report().skipped_lines, [6]);
    assert!(std::fs::metadata(&path).unwrap().len() > len);

    label(&svc, &ids[0], "uncertain").await;
    let after = svc.effective_labels();
    drop(svc);
    let svc = service(&dir);
    assert_eq!(svc.effective_labels(), after);
    assert_eq!(svc.labels().history().last().unwrap().seq, 6);
}

fn fp_with(bits: impl Iterator<Item = usize>) -> Fingerprint {
    Fingerprint::from_bits(4096, &bits.collect::<Vec<_>>()).unwrap()
}

#[test]
fn network_threshold_is_exact() {
    let a = fp_with(0..1000);
    let near = fp_with((0..351).chain(2000..2649));
    let far = fp_with((0..349).chain(2000..2651));
    let edge = fp_with((0..350).chain(2000..2650));
    let fps = [("a", &a), ("near", &near), ("far", &far), ("edge", &edge)];
    let edges = similarity_edges(&fps, 0.65);
    let pairs: Vec<(&str, &str)> = edges.iter().filter(|e| e.source == "a").map(|e| (e.source.as_str(), e.target.as_str())).collect();
    assert_eq!(pairs, [("a", "near")]);
    let d = edges.iter().find(|e| e.target == "near").unwrap().dice_distance.unwrap();
    assert!((d - 0.649).abs() < 1e-12);
    assert!(edges.iter().all(|e| e.source != e.target));
}

#[tokio::test]
async fn network_payload() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(&dir);
    let g = svc.network(DEFAULT_THRESHOLD);
    let derivations: Vec<_> = g.derivation_edges().filter(|e| e.source == "g5").collect();
    assert_eq!(derivations.len(), 2);
    let total: usize = svc.store().candidates().iter().map(|c| c.scaffold_ids.len()).sum();
    assert_eq!(g.derivation_edges().count(), total);
    assert!(g.similarity_edges().all(|e| e.dice_distance.unwrap() < 0.65 && e.kind == EdgeKind::Similarity));
    assert!(svc.network(1.0).similarity_edges().count() >= g.similarity_edges().count());

    let s = svc.store().candidate("g1").unwrap().scaffold_ids[0].clone();
    label(&svc, &s, "accept").await;
    let (status, body) = call(&svc, "GET", "/api/v1/network?threshold=0.5", None).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["threshold"], 0.5);
    let node = |id: &str| v["nodes"].as_array().unwrap().iter().find(|n| n["id"] == id).unwrap().clone();
    assert_eq!(node("g4")["decision"], "accept");
    assert_eq!(node("g4")["kind"], "molecule");
    assert_eq!(node(&s)["kind"], "scaffold");
    assert_eq!(call(&svc, "GET", "/api/v1/network?threshold=2", None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn export_groups_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(&dir);
    assert_eq!(call(&svc, "GET", "/api/v1/export", None).await.0, StatusCode::CONFLICT);
    let ids: Vec<String> = svc.store().scaffolds().iter().take(3).map(|s| s.id.clone()).collect();
    for (s, d) in ids.iter().zip(["accept", "uncertain", "reject"]) {
        label(&svc, s, d).await;
    }
    let (status, first) = call(&svc, "GET", "/api/v1/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = call(&svc, "GET", "/api/v1/export", None).await;
    assert_eq!(first, second);
    let v: Value = serde_json::from_slice(&first).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 3);
    for g in groups {
        assert_eq!(g["scaffolds"].as_array().unwrap().len(), 1);
        assert!(g["mean_classifier_probability"].as_f64().unwrap() > 0.0);
    }
    let (_, text) = call(&svc, "GET", "/api/v1/export?format=text", None).await;
    let text = String::from_utf8(text).unwrap();
    assert!(text.starts_with("== accept (1 scaffolds"));
    assert!(text.contains("p(low LUMO) = "));

    drop(svc);
    let svc = service(&dir);
    assert_eq!(call(&svc, "GET", "/api/v1/export", None).await.1, first);
}

#[tokio::test]
async fn candidates_are_paged_by_score() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(&dir);
    let (_, body) = call(&svc, "GET", "/api/v1/candidates?page=2&per_page=4", None).await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["total"], 6);
    let ids: Vec<&str> = v["items"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["g5", "g6"]);
    assert_eq!(call(&svc, "GET", "/api/v1/candidates?per_page=0", None).await.0, StatusCode::BAD_REQUEST);
    let (_, body) = call(&svc, "GET", "/api/v1/scaffolds", None).await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["items"].as_array().unwrap().len(), svc.store().scaffolds().len());
}

#[tokio::test]
async fn depiction() {
    let benzene = parse_smiles("c1ccccc1").unwrap();
    let p = layout(&benzene);
    let cx = p.iter().map(|q| q[0]).sum::<f64>() / 6.0;
    let cy = p.iter().map(|q| q[1]).sum::<f64>() / 6.0;
    for (i, q) in p.iter().enumerate() {
        let r = (q[0] - cx).hypot(q[1] - cy);
        assert!((r - 1.0).abs() < 1e-9, "radius {r}");
        let n = p[(i + 1) % 6];
        assert!(((q[0] - n[0]).hypot(q[1] - n[1]) - 1.0).abs() < 1e-9);
    }
    let naph = parse_smiles("c1ccc2ccccc2c1").unwrap();
    let p = layout(&naph);
    for b in &naph.bonds {
        let d = (p[b.a][0] - p[b.b][0]).hypot(p[b.a][1] - p[b.b][1]);
        assert!((d - 1.0).abs() < 1e-9);
    }

    let dir = tempfile::tempdir().unwrap();
    let svc = service(&dir);
    let (status, a) = call(&svc, "GET", "/api/v1/depict/g2", None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = call(&svc, "GET", "/api/v1/depict/g2", None).await;
    assert_eq!(a, b);
    let svg = String::from_utf8(a).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("S<tspan dy=\"-7\" font-size=\"11\">+</tspan>"));
    assert_eq!(call(&svc, "GET", "/api/v1/depict/zzz", None).await.0, StatusCode::NOT_FOUND);
    let s = &svc.store().scaffolds()[0].id;
    assert_eq!(call(&svc, "GET", &format!("/api/v1/depict/{s}"), None).await.0, StatusCode::OK);
}

#[test]
fn corpus_layouts_are_finite_and_spread() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/pag_reference.csv")).unwrap();
    for line in text.lines().skip(1) {
        let smiles = line.split(',').next().unwrap();
        let mol = parse_smiles(smiles).unwrap();
        let p = layout(&mol);
        assert!(p.iter().all(|q| q[0].is_finite() && q[1].is_finite()));
        for b in &mol.bonds {
            let d = (p[b.a][0] - p[b.b][0]).hypot(p[b.a][1] - p[b.b][1]);
            assert!(d > 0.3 && d < 2.5, "{smiles}: bond length {d}");
        }
        assert_eq!(depict_svg(&mol, smiles), depict_svg(&mol, smiles));
    }
}
