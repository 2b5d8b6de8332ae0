//! Paillier encryption, kept only as the cost baseline that per-parameter
//! homomorphic encryption would impose on a participant.

use crate::error::{CryptoError, Result};
use num_bigint::{BigUint, ModInverse, RandBigInt, RandPrime};
use num_integer::Integer;
use num_traits::One;
use rand::{CryptoRng, RngCore};
use std::time::Instant;

pub const MIN_MODULUS_BITS: usize = 2048;

#[derive(Debug, Clone)]
pub struct PaillierPublicKey {
    n: BigUint,
    n_squared: BigUint,
    /// Generator `g = n + 1`.
    g: BigUint,
}

#[derive(Debug, Clone)]
pub struct PaillierKey {
    public: PaillierPublicKey,
    lambda: BigUint,
    mu: BigUint,
}

impl PaillierPublicKey {
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn generator(&self) -> &BigUint {
        &self.g
    }

    /// `c = g^m · r^n mod n²` with `g = n + 1`, i.e. `(1 + m·n) · r^n`.
    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &BigUint, rng: &mut R) -> Result<BigUint> {
        if m >= &self.n {
            return Err(CryptoError::PlaintextTooLarge);
        }
        let r = loop {
            let r = rng.gen_biguint_range(&BigUint::one(), &self.n);
            if r.gcd(&self.n).is_one() {
                break r;
            }
        };
        let gm = (BigUint::one() + m * &self.n) % &self.n_squared;
        Ok(gm * r.modpow(&self.n, &self.n_squared) % &self.n_squared)
    }

    /// Homomorphic addition: `E(a)·E(b) = E(a + b mod n)`.
    pub fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.n_squared
    }
}

impl PaillierKey {
    /// Generates a key with a modulus of exactly `bits` bits (two `bits/2` primes).
    pub fn generate<R: RngCore + CryptoRng>(bits: usize, rng: &mut R) -> Result<Self> {
        if bits < MIN_MODULUS_BITS {
            return Err(CryptoError::ModulusTooSmall {
                min: MIN_MODULUS_BITS,
                got: bits,
            });
        }
        Ok(Self::generate_unchecked(bits, rng))
    }

    /// Same as [`generate`](Self::generate) without the size floor; for tests.
    pub fn generate_unchecked<R: RngCore + CryptoRng>(bits: usize, rng: &mut R) -> Self {
        loop {
            let p = rng.gen_prime(bits / 2);
            let q = rng.gen_prime(bits - bits / 2);
            if p == q {
                continue;
            }
            let n = &p * &q;
            if n.bits() != bits {
                continue;
            }
            let one = BigUint::one();
            let lambda = (&p - &one).lcm(&(&q - &one));
            // with g = n + 1, L(g^λ mod n²) = λ mod n
            let Some(mu) = (&lambda % &n).mod_inverse(&n).and_then(|m| m.to_biguint()) else {
                continue;
            };
            let n_squared = &n * &n;
            let g = &n + &one;
            return Self {
                public: PaillierPublicKey { n, n_squared, g },
                lambda,
                mu,
            };
        }
    }

    pub fn public(&self) -> &PaillierPublicKey {
        &self.public
    }

    pub fn modulus_bits(&self) -> usize {
        self.public.n.bits()
    }

    pub fn decrypt(&self, c: &BigUint) -> BigUint {
        let pk = &self.public;
        let u = c.modpow(&self.lambda, &pk.n_squared);
        let l = (u - BigUint::one()) / &pk.n;
        l * &self.mu % &pk.n
    }
}

/// Per-element Paillier encryption timing.
#[derive(Debug, Clone, PartialEq)]
pub struct PaillierBench {
    pub modulus_bits: usize,
    pub samples: usize,
    pub mean_seconds: f64,
    pub homomorphic_check: bool,
}

impl PaillierBench {
    /// Projected cost of encrypting `count` elements one by one.
    pub fn extrapolate(&self, count: u64) -> f64 {
        self.mean_seconds * count as f64
    }
}

/// Encrypts every value independently, timing each, then spot-checks
/// `E(a)·E(b) → a + b` on the first two values.
pub fn paillier_encrypt_bench<R: RngCore + CryptoRng>(
    key: &PaillierKey,
    values: &[BigUint],
    rng: &mut R,
) -> Result<PaillierBench> {
    let pk = key.public();
    let mut total = 0.0;
    let mut cts = Vec::with_capacity(values.len().min(2));
    for v in values {
        let start = Instant::now();
        let c = pk.encrypt(v, rng)?;
        total += start.elapsed().as_secs_f64();
        if cts.len() < 2 {
            cts.push(c);
        }
    }
    let homomorphic_check = match (values, cts.as_slice()) {
        ([a, b, ..], [ca, cb]) => key.decrypt(&pk.add(ca, cb)) == (a + b) % pk.modulus(),
        _ => true,
    };
    Ok(PaillierBench {
        modulus_bits: key.modulus_bits(),
        samples: values.len(),
        mean_seconds: if values.is_empty() { 0.0 } else { total / values.len() as f64 },
        homomorphic_check,
    })
}
