use fedring_crypto::{decrypt_model_with, Level};
use fedring_incentive::{
    AccessDecision, IncentiveCenter, IncentiveConfig, IncentiveError, LedgerEvent, ModelTag,
};

fn tag(task: &str) -> ModelTag {
    ModelTag {
        task: task.into(),
        accuracy: 0.9,
    }
}

/// Raises `user` to `level` the way the protocol does: the user is a
/// participant of a D-level model and that model gets accessed.
fn raise_to(c: &mut IncentiveCenter, user: &str, level: Level) {
    let id = c
        .publish_bytes(format!("lift {user}").as_bytes(), Level::D, tag("lift"), &[user.to_string()])
        .unwrap()
        .model_id
        .clone();
    while c.record(user).unwrap().level() != Some(level) {
        c.record_access(&id, user).unwrap();
        assert!(c.record(user).unwrap().level().unwrap() <= level, "overshot {level}");
    }
}

fn center_with_level_users() -> IncentiveCenter {
    let mut c = IncentiveCenter::new(IncentiveConfig::default(), 11).unwrap();
    for l in Level::ALL {
        let u = format!("user-{l}");
        c.register(&u, 1.0).unwrap();
        raise_to(&mut c, &u, l);
    }
    c
}

#[test]
fn sixteen_case_access_matrix() {
    let mut c = center_with_level_users();
    let mut ids = Vec::new();
    for l in Level::ALL {
        let bytes = format!("model at {l}").into_bytes();
        ids.push((l, c.publish_bytes(&bytes, l, tag("matrix"), &[]).unwrap().model_id.clone(), bytes));
    }
    for user_level in Level::ALL {
        let user = format!("user-{user_level}");
        let cred = c.credential(&user);
        for (model_level, id, bytes) in &ids {
            let result = c.open_model(id, &user, &cred);
            if user_level >= *model_level {
                assert_eq!(&result.unwrap(), bytes, "{user_level} on {model_level}");
            } else {
                assert!(matches!(result, Err(IncentiveError::Denied { .. })), "{user_level} on {model_level}");
            }
        }
    }
}

#[test]
fn granted_keys_stop_at_their_level() {
    let mut c = center_with_level_users();
    let b_id = c.publish_bytes(b"b-model", Level::B, tag("t"), &[]).unwrap().model_id.clone();
    let a_id = c.publish_bytes(b"a-model", Level::A, tag("t"), &[]).unwrap().model_id.clone();
    let key = c
        .request_access("user-B", Level::B)
        .unwrap()
        .granted()
        .unwrap()
        .unwrap_key(&c.credential("user-B"))
        .unwrap();
    assert_eq!(decrypt_model_with(c.entry(&b_id).unwrap().ciphertext(), &key).unwrap(), b"b-model");
    assert!(decrypt_model_with(c.entry(&a_id).unwrap().ciphertext(), &key).is_err());
}

#[test]
fn same_level_users_get_distinct_working_keys() {
    let mut c = IncentiveCenter::new(IncentiveConfig::default(), 3).unwrap();
    for u in ["b1", "b2"] {
        c.register(u, 1.0).unwrap();
        raise_to(&mut c, u, Level::B);
    }
    let id = c.publish_bytes(b"shared", Level::B, tag("t"), &[]).unwrap().model_id.clone();
    let k1 = c.request_access("b1", Level::B).unwrap().granted().unwrap();
    let k2 = c.request_access("b2", Level::B).unwrap().granted().unwrap();
    assert_ne!(k1.to_bytes(), k2.to_bytes());
    let ct = c.entry(&id).unwrap().ciphertext().clone();
    for (k, u) in [(&k1, "b1"), (&k2, "b2")] {
        let key = k.unwrap_key(&c.credential(u)).unwrap();
        assert_eq!(decrypt_model_with(&ct, &key).unwrap(), b"shared");
    }
    // a key only unwraps for the user it was issued to
    assert!(k1.unwrap_key(&c.credential("b2")).is_err());
}

#[test]
fn credits_are_linear_and_monotone() {
    let mut c = IncentiveCenter::new(IncentiveConfig::default(), 4).unwrap();
    c.register("p", 0.3).unwrap();
    c.register("reader", 1.0).unwrap();
    let id = c.publish_bytes(b"m", Level::D, tag("t"), &["p".into()]).unwrap().model_id.clone();
    c.record_access(&id, "reader").unwrap();
    let one = c.record("p").unwrap().credits();
    assert!((one - 0.3).abs() < 1e-12);
    let mut last = one;
    for k in 2..=20 {
        c.record_access(&id, "reader").unwrap();
        let now = c.record("p").unwrap().credits();
        assert!(now >= last);
        assert!((now - k as f64 * one).abs() < 1e-9, "after {k} accesses");
        last = now;
    }
}

#[test]
fn incremental_level_matches_recomputation() {
    let cfg = IncentiveConfig::default();
    let mut c = IncentiveCenter::new(cfg.clone(), 5).unwrap();
    let users = ["u0", "u1", "u2", "u3"];
    for (i, u) in users.iter().enumerate() {
        c.register(u, 0.25 * i as f64 + 0.1).unwrap();
    }
    c.register("reader", 1.0).unwrap();
    raise_to(&mut c, "reader", Level::A);
    let ids: Vec<String> = Level::ALL
        .iter()
        .map(|&l| {
            c.publish_bytes(b"x", l, tag("t"), &users.iter().map(|s| s.to_string()).collect::<Vec<_>>())
                .unwrap()
                .model_id
                .clone()
        })
        .collect();
    let mut level_changes = 0;
    for step in 0..60 {
        let before: Vec<_> = users.iter().map(|u| c.record(u).unwrap().level()).collect();
        let credits_before: Vec<_> = users.iter().map(|u| c.record(u).unwrap().credits()).collect();
        c.record_access(&ids[step % 4], "reader").unwrap();
        for (i, u) in users.iter().enumerate() {
            let r = c.record(u).unwrap();
            assert_eq!(r.level(), cfg.credit_thresholds.level_for(r.credits()));
            if r.level() != before[i] {
                level_changes += 1;
                let crossed = [40.0, 15.0, 5.0]
                    .iter()
                    .any(|&t| credits_before[i] < t && r.credits() >= t);
                assert!(crossed, "{u} changed level without crossing a threshold");
            }
        }
    }
    assert!(level_changes > 0);
}

#[test]
fn ledger_replays_to_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = IncentiveConfig::default();
    let mut c = IncentiveCenter::create(cfg.clone(), 9, dir.path(), "exp-1").unwrap();
    c.register("a", 0.8).unwrap();
    c.register("b", 0.4).unwrap();
    raise_to(&mut c, "a", Level::C);
    let id = c.publish_bytes(b"final model", Level::C, tag("synthetic"), &["a".into(), "b".into()]).unwrap().model_id.clone();
    assert!(matches!(c.request_access("b", Level::C).unwrap(), AccessDecision::Denied { .. }));
    let cred = c.credential("a");
    assert_eq!(c.open_model(&id, "a", &cred).unwrap(), b"final model");
    c.flush().unwrap();

    let reopened = IncentiveCenter::open(cfg.clone(), dir.path(), "exp-1").unwrap();
    assert_eq!(reopened.records().cloned().collect::<Vec<_>>(), c.records().cloned().collect::<Vec<_>>());
    assert_eq!(reopened.entries(), c.entries());

    let ledger = std::fs::read_to_string(dir.path().join("exp-1/ledger.jsonl")).unwrap();
    let events: Vec<LedgerEvent> = ledger.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(events.iter().any(|e| matches!(e, LedgerEvent::Deny { .. })));
    let blob = &c.entry(&id).unwrap().blob;
    assert!(dir.path().join(format!("exp-1/blobs/{blob}.bin")).exists());

    // a tampered blob is caught on reopen
    std::fs::write(dir.path().join(format!("exp-1/blobs/{blob}.bin")), b"junk").unwrap();
    assert!(matches!(
        IncentiveCenter::open(cfg, dir.path(), "exp-1"),
        Err(IncentiveError::BlobCorrupt(_))
    ));
}
