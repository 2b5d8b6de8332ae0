use fedring_crypto::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::sync::OnceLock;

fn group() -> &'static GroupParams {
    static G: OnceLock<GroupParams> = OnceLock::new();
    G.get_or_init(GroupParams::default)
}

fn random_field_vec(rng: &mut ChaCha20Rng, len: usize) -> QuantizedParams {
    QuantizedParams::from_scalars(DEFAULT_SCALE, (0..len).map(|_| Scalar::random(rng)).collect())
}

fn sum(parts: &[QuantizedParams]) -> QuantizedParams {
    let mut acc = QuantizedParams::zeros(parts[0].scale(), parts[0].len());
    for p in parts {
        acc.add_assign(p);
    }
    acc
}

#[test]
fn homomorphism_over_random_field_vectors() {
    let g = group();
    let m = g.chunk_width();
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let lengths = [1, 7, m, m + 1, 1000];
    for case in 0..100 {
        let len = lengths[case % lengths.len()];
        let a = random_field_vec(&mut rng, len);
        let b = random_field_vec(&mut rng, len);
        let lhs = hh_combine([&hh_commit(g, &a), &hh_commit(g, &b)]).unwrap();
        let rhs = hh_commit(g, &sum(&[a, b]));
        assert_eq!(lhs, rhs, "case {case}, length {len}");
    }
}

#[test]
fn homomorphism_over_quantized_models() {
    let g = group();
    let fp = FixedPoint::default();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for len in [1, 300, 1000] {
        let xs: Vec<f64> = (0..len).map(|_| rng.gen_range(-1024.0..=1024.0)).collect();
        let ys: Vec<f64> = (0..len).map(|_| rng.gen_range(-1024.0..=1024.0)).collect();
        let a = fp.quantize(&xs).unwrap();
        let b = fp.quantize(&ys).unwrap();
        let lhs = hh_combine([&hh_commit(g, &a), &hh_commit(g, &b)]).unwrap();
        assert_eq!(lhs, hh_commit(g, &sum(&[a, b])));
    }
}

#[test]
fn exact_sum_verification_and_single_coordinate_perturbation() {
    let g = group();
    let fp = FixedPoint::default();
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    for n in [1usize, 2, 5, 16, 64] {
        let len = rng.gen_range(1..400);
        let parts: Vec<QuantizedParams> = (0..n)
            .map(|_| {
                let xs: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
                fp.quantize(&xs).unwrap()
            })
            .collect();
        let cs: Vec<HashCommitment> = parts.iter().map(|p| hh_commit(g, p)).collect();
        let total = sum(&parts);
        assert!(hh_verify_sum(g, &total, &cs), "n = {n}");
        for _ in 0..5 {
            let mut bad = total.clone();
            let i = rng.gen_range(0..len);
            let delta = Scalar::from(rng.gen_range(1u64..1 << 20));
            bad.values_mut()[i] += delta;
            assert!(!hh_verify_sum(g, &bad, &cs), "n = {n}, perturbed index {i}");
        }
    }
}

#[test]
fn ring_correctness_for_every_position() {
    let g = group();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for size in [2usize, 3, 10] {
        let keys: Vec<KeyPair> = (0..size).map(|_| keygen(g, &mut rng)).collect();
        let ring: Vec<PublicKey> = keys.iter().map(|k| *k.public()).collect();
        let mut digest = [0u8; 32];
        rng.fill(&mut digest);
        for (i, k) in keys.iter().enumerate() {
            let sig = ring_sign(g, &digest, &ring, i, k, &mut rng).unwrap();
            assert!(ring_verify(g, &digest, &ring, &sig), "size {size} position {i}");
        }
    }
}

#[test]
fn signer_position_is_opaque_at_the_api() {
    let g = group();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for size in [2usize, 3, 10] {
        let keys: Vec<KeyPair> = (0..size).map(|_| keygen(g, &mut rng)).collect();
        let ring: Vec<PublicKey> = keys.iter().map(|k| *k.public()).collect();
        let digest = [5u8; 32];
        let encodings: Vec<Vec<u8>> = keys
            .iter()
            .enumerate()
            .map(|(i, k)| ring_sign(g, &digest, &ring, i, k, &mut rng).unwrap().to_bytes())
            .collect();
        for enc in &encodings {
            assert_eq!(enc.len(), RingSignature::encoded_len_for(size));
            let sig = RingSignature::from_bytes(enc).unwrap();
            assert!(ring_verify(g, &digest, &ring, &sig));
        }
    }
}

#[test]
fn tampered_params_digest_is_rejected() {
    let g = group();
    let fp = FixedPoint::default();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let keys: Vec<KeyPair> = (0..3).map(|_| keygen(g, &mut rng)).collect();
    let ring: Vec<PublicKey> = keys.iter().map(|k| *k.public()).collect();
    let qp = fp.quantize(&[0.5, -0.25, 1.0, 0.0]).unwrap();
    let digest = digest_params(&qp, 4);
    let sig = ring_sign(g, &digest, &ring, 1, &keys[1], &mut rng).unwrap();
    let mut tampered = qp.clone();
    tampered.values_mut()[2] += Scalar::ONE;
    assert!(ring_verify(g, &digest, &ring, &sig));
    assert!(!ring_verify(g, &digest_params(&tampered, 4), &ring, &sig));
}

#[test]
fn level_lattice_is_exact() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let master = LevelKey::generate_master(&mut rng);
    for model_level in Level::ALL {
        let key = derive_level_key(&master, model_level).unwrap();
        let ct = encrypt_model(b"model", &key, &mut rng);
        for user_level in Level::ALL {
            let user_key = derive_level_key(&master, user_level).unwrap();
            let opened = decrypt_model_with(&ct, &user_key);
            assert_eq!(
                opened.is_ok(),
                user_level >= model_level,
                "user {user_level} model {model_level}"
            );
            // the raw key of a different level never authenticates
            if user_level != model_level {
                assert_eq!(decrypt_model(&ct, &user_key), Err(CryptoError::Authentication));
            }
        }
    }
}

struct Fixture {
    keys: Vec<KeyPair>,
    ring: Vec<PublicKey>,
}

fn fixture(size: usize) -> Fixture {
    let mut rng = ChaCha20Rng::seed_from_u64(size as u64 * 31);
    let keys: Vec<KeyPair> = (0..size).map(|_| keygen(group(), &mut rng)).collect();
    let ring = keys.iter().map(|k| *k.public()).collect();
    Fixture { keys, ring }
}

fn flip(bytes: &mut [u8], bit: usize) {
    bytes[bit / 8] ^= 1 << (bit % 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tamper_rejection(size_idx in 0usize..3, signer in 0usize..10, seed: u64, target in 0usize..3, bit in 0usize..256, slot in 0usize..10) {
        let size = [2usize, 3, 10][size_idx];
        let signer = signer % size;
        let slot = slot % size;
        let fx = fixture(size);
        let g = group();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut digest = [0u8; 32];
        rng.fill(&mut digest);
        let sig = ring_sign(g, &digest, &fx.ring, signer, &fx.keys[signer], &mut rng).unwrap();
        prop_assert!(ring_verify(g, &digest, &fx.ring, &sig));
        match target {
            0 => {
                let mut d = digest;
                flip(&mut d, bit);
                prop_assert!(!ring_verify(g, &d, &fx.ring, &sig));
            }
            1 => {
                // flip a bit of one response scalar; non-canonical encodings are rejected at decode
                let mut bytes = sig.to_bytes();
                let offset = 4 + 32 * (1 + slot);
                flip(&mut bytes[offset..offset + 32], bit);
                match RingSignature::from_bytes(&bytes) {
                    Ok(bad) => prop_assert!(!ring_verify(g, &digest, &fx.ring, &bad)),
                    Err(_) => {}
                }
            }
            _ => {
                let mut pk = fx.ring[slot].to_bytes();
                flip(&mut pk, bit);
                if let Some(bad_pk) = PublicKey::from_bytes(&pk) {
                    let mut ring = fx.ring.clone();
                    ring[slot] = bad_pk;
                    prop_assert!(!ring_verify(g, &digest, &ring, &sig));
                }
            }
        }
    }

    #[test]
    fn quantization_roundtrip_bound(xs in prop::collection::vec(-1024.0f64..=1024.0, 1..200)) {
        let fp = FixedPoint::default();
        let back = fp.dequantize(&fp.quantize(&xs).unwrap(), 1).unwrap();
        let tol = 1.0 / (2.0 * fp.scale() as f64);
        for (x, y) in xs.iter().zip(&back) {
            prop_assert!((x - y).abs() <= tol);
        }
    }
}
