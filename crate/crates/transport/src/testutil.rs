use crate::envelope::{Pseudonym, SignedUpdate};
use fedring_crypto::{FixedPoint, GroupParams, KeyPair, PublicKey, RingSignature, Scalar};

/// An envelope with an unsigned (all-zero) signature, for mailbox plumbing tests.
pub(crate) fn dummy_update(round: u64, tag: u8) -> SignedUpdate {
    let group = GroupParams::new(1);
    let ring: Vec<PublicKey> = (1..=2u64)
        .map(|s| *KeyPair::from_secret(&group, Scalar::from(s)).unwrap().public())
        .collect();
    let mut sig = vec![2u8, 0, 0, 0];
    sig.extend_from_slice(&[0u8; 96]);
    SignedUpdate {
        round,
        pseudonym: Pseudonym([tag; 16]),
        params: FixedPoint::default().quantize(&[tag as f64, -0.5]).unwrap(),
        ring,
        signature: RingSignature::from_bytes(&sig).unwrap(),
    }
}
