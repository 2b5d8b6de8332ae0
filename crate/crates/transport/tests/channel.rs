use fedring_crypto::{
    digest_params, hh_commit, hh_verify_sum, keygen, ring_sign, ring_verify, FixedPoint, GroupParams, KeyPair,
    PublicKey, QuantizedParams,
};
use fedring_transport::{
    apply_dropout, codec, decode, encode, CommitmentEntry, DecodeError, DropoutPlan, GlobalSum, Message, Pseudonym,
    RoundMailbox, SignedUpdate,
};
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

struct Setup {
    group: GroupParams,
    keys: Vec<KeyPair>,
    ring: Vec<PublicKey>,
    codec: FixedPoint,
}

fn setup(n: usize, seed: u64) -> Setup {
    let group = GroupParams::new(8);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let keys: Vec<_> = (0..n).map(|_| keygen(&group, &mut rng)).collect();
    let mut ring: Vec<_> = keys.iter().map(|k| *k.public()).collect();
    ring.sort();
    Setup {
        group,
        keys,
        ring,
        codec: FixedPoint::default(),
    }
}

fn local_params(owner_data: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(owner_data);
    (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn upload(s: &Setup, who: usize, params: &[f64], round: u64, rng: &mut ChaCha20Rng) -> (SignedUpdate, CommitmentEntry) {
    let qp = s.codec.quantize(params).unwrap();
    let idx = s.ring.iter().position(|pk| pk == s.keys[who].public()).unwrap();
    let sig = ring_sign(&s.group, &digest_params(&qp, round), &s.ring, idx, &s.keys[who], rng).unwrap();
    let pseudonym = Pseudonym::random(rng);
    let commitment = hh_commit(&s.group, &qp);
    (
        SignedUpdate {
            round,
            pseudonym,
            params: qp,
            ring: s.ring.clone(),
            signature: sig,
        },
        CommitmentEntry {
            round,
            pseudonym,
            commitment,
        },
    )
}

/// Server-visible view of one delivered envelope with the per-signature
/// randomness reduced to its length.
fn server_view(u: &SignedUpdate) -> (u64, Vec<u8>, Vec<[u8; 32]>, usize) {
    (
        u.round,
        u.params.to_bytes(),
        u.ring.iter().map(|pk| pk.to_bytes()).collect(),
        u.signature.to_bytes().len(),
    )
}

#[test]
fn anonymity_set_invariant_under_data_swap() {
    let s = setup(5, 1);
    let data: Vec<Vec<f64>> = (0..5).map(|i| local_params(100 + i, 20)).collect();
    let run = |assignment: &[usize]| {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let mut mb = RoundMailbox::new(0);
        for (who, &d) in assignment.iter().enumerate() {
            let (u, c) = upload(&s, who, &data[d], 0, &mut rng);
            mb.submit_anonymous(u).unwrap();
            mb.multicast_commitment(c).unwrap();
        }
        let delivery = mb.flush_round(9);
        for u in &delivery.updates {
            assert!(ring_verify(&s.group, &u.digest(), &u.ring, &u.signature));
        }
        let mut view: Vec<_> = delivery.updates.iter().map(server_view).collect();
        view.sort();
        view
    };
    let base = run(&[0, 1, 2, 3, 4]);
    assert_eq!(base, run(&[4, 3, 2, 1, 0]));
    assert_eq!(base, run(&[1, 0, 3, 4, 2]));
}

#[test]
fn conservation_and_end_to_end_sum_check() {
    let s = setup(10, 2);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut mb = RoundMailbox::new(4);
    for r in 4..7u64 {
        for who in 0..10 {
            let (u, c) = upload(&s, who, &local_params(who as u64 * 31 + r, 40), r, &mut rng);
            mb.submit_anonymous(u).unwrap();
            mb.multicast_commitment(c).unwrap();
        }
        let d = mb.flush_round(r);
        assert_eq!(d.updates.len(), 10);
        assert_eq!(d.board.len(), 10);
        let mut sum = QuantizedParams::zeros(s.codec.scale(), 40);
        for u in &d.updates {
            sum.add_assign(&u.params);
        }
        let included: Vec<_> = d.updates.iter().map(|u| u.pseudonym).collect();
        assert!(hh_verify_sum(&s.group, &sum, d.board.select(&included).unwrap()));
    }
}

#[test]
fn dropout_of_two_still_verifies_over_survivors() {
    let s = setup(10, 4);
    let plan = (0..)
        .map(|seed| DropoutPlan::new(0.2, seed))
        .find(|p| p.dropped(0, 10).iter().filter(|d| **d).count() == 2)
        .unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let submissions: Vec<_> = (0..10)
        .map(|who| upload(&s, who, &local_params(who as u64, 30), 0, &mut rng))
        .collect();
    let survivors = apply_dropout(&plan, 0, submissions);
    assert_eq!(survivors.len(), 8);

    let mut mb = RoundMailbox::new(0);
    for (u, c) in survivors {
        mb.submit_anonymous(u).unwrap();
        mb.multicast_commitment(c).unwrap();
    }
    let d = mb.flush_round(0);
    let mut sum = QuantizedParams::zeros(s.codec.scale(), 30);
    for u in &d.updates {
        sum.add_assign(&u.params);
    }
    let global = GlobalSum {
        round: 0,
        count: d.updates.len() as u32,
        included: d.updates.iter().map(|u| u.pseudonym).collect(),
        sum,
    };
    let cs = d.board.select(&global.included).unwrap();
    assert_eq!(cs.len(), 8);
    assert!(hh_verify_sum(&s.group, &global.sum, cs));
}

#[test]
fn decode_is_total_on_random_frames() {
    let s = setup(3, 6);
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let (u, c) = upload(&s, 1, &local_params(1, 12), 2, &mut rng);
    let seeds = [
        encode(&Message::SignedUpdate(u)),
        encode(&Message::Commitment(c)),
    ];
    let mut accepted = 0usize;
    for i in 0..100_000u32 {
        let bytes = match i % 3 {
            0 => {
                let len = rng.gen_range(0..64);
                let mut b = vec![0u8; len];
                rng.fill_bytes(&mut b);
                b
            }
            1 => {
                // plausible header, random tag and body
                let body_len = rng.gen_range(0..200usize);
                let mut b = ((body_len + 1) as u32).to_be_bytes().to_vec();
                b.push(rng.gen_range(0..6));
                b.extend((0..body_len).map(|_| rng.gen::<u8>()));
                b
            }
            _ => {
                let mut b = seeds[(i as usize / 3) % 2].clone();
                for _ in 0..rng.gen_range(1..4) {
                    let at = rng.gen_range(0..b.len());
                    b[at] ^= 1 << rng.gen_range(0..8);
                }
                if rng.gen_bool(0.3) {
                    let cut = rng.gen_range(0..b.len());
                    b.truncate(cut);
                }
                b
            }
        };
        if let Ok((msg, used)) = decode(&bytes) {
            assert!(used <= bytes.len());
            assert_eq!(decode(&encode(&msg)).unwrap().0, msg);
            accepted += 1;
        }
    }
    assert!(accepted < 100_000);
}

#[test]
fn distinct_decode_errors() {
    assert!(matches!(decode(&[0, 0]), Err(DecodeError::Truncated { .. })));
    assert_eq!(decode(&[0, 0, 0, 1, 0xFF]).unwrap_err(), DecodeError::UnknownTag(0xFF));
    let over = ((codec::MAX_FRAME_LEN + 1) as u32).to_be_bytes();
    assert!(matches!(decode(&over), Err(DecodeError::TooLarge(_))));
}

proptest! {
    #[test]
    fn global_sum_roundtrip(values in proptest::collection::vec(-1000.0f64..1000.0, 0..50), round in any::<u64>(), k in 0usize..5) {
        let sum = FixedPoint::default().quantize(&values).unwrap();
        let msg = Message::GlobalSum(GlobalSum {
            round,
            count: k as u32,
            included: (0..k).map(|i| Pseudonym([i as u8; 16])).collect(),
            sum,
        });
        let bytes = encode(&msg);
        let (back, used) = decode(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(back, msg);
    }
}
