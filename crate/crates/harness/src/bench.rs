//! Cost of authenticating one update: ring signing over the parameter
//! digest versus encrypting every parameter under Paillier.

use fedring_crypto::{
    digest_params, keygen, paillier_encrypt_bench, ring_sign, ring_verify, FixedPoint, GroupParams, PaillierBench,
    PaillierKey,
};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub elements: usize,
    pub ring_sizes: Vec<usize>,
    /// Signatures timed per ring size; the median is reported.
    pub ring_repeats: usize,
    pub paillier_bits: usize,
    pub paillier_samples: usize,
    pub extrapolate: Vec<u64>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            elements: 330_100,
            ring_sizes: vec![2, 10, 100],
            ring_repeats: 9,
            paillier_bits: 2048,
            paillier_samples: 20,
            extrapolate: vec![10, 330_100],
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingTiming {
    pub ring_size: usize,
    pub elements: usize,
    /// Median digest time plus median signing time.
    pub sign_seconds: f64,
    pub verify_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub ring: Vec<RingTiming>,
    pub paillier: PaillierBench,
    pub paillier_keygen_seconds: f64,
    pub extrapolate: Vec<u64>,
    pub elements: usize,
}

impl BenchReport {
    pub fn ring_for(&self, size: usize) -> Option<&RingTiming> {
        self.ring.iter().find(|r| r.ring_size == size)
    }

    /// Ring-sign time for the update at `ring_size` over the projected
    /// Paillier time for the same number of elements.
    pub fn ratio(&self, ring_size: usize) -> Option<f64> {
        let r = self.ring_for(ring_size)?;
        Some(r.sign_seconds / self.paillier.extrapolate(self.elements as u64))
    }

    /// `operation,ring_size,elements,seconds`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["operation", "ring_size", "elements", "seconds"]).expect("in-memory write");
        for r in &self.ring {
            for (op, s) in [("ring_sign", r.sign_seconds), ("ring_verify", r.verify_seconds)] {
                w.write_record([op.to_string(), r.ring_size.to_string(), r.elements.to_string(), format!("{s:.9}")])
                    .expect("in-memory write");
            }
        }
        w.write_record([
            "paillier_encrypt_mean".to_string(),
            String::new(),
            "1".into(),
            format!("{:.9}", self.paillier.mean_seconds),
        ])
        .expect("in-memory write");
        for &n in &self.extrapolate {
            w.write_record([
                "paillier_encrypt_extrapolated".to_string(),
                String::new(),
                n.to_string(),
                format!("{:.6}", self.paillier.extrapolate(n)),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }
}

pub fn bench_crypto(cfg: &BenchConfig) -> Result<BenchReport, fedring_crypto::CryptoError> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let group = GroupParams::default();
    let codec = FixedPoint::default();
    let values: Vec<f64> = (0..cfg.elements).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let params = codec.quantize(&values)?;

    let max_ring = cfg.ring_sizes.iter().copied().max().unwrap_or(2);
    let keys: Vec<_> = (0..max_ring).map(|_| keygen(&group, &mut rng)).collect();
    // the digest is the same work at every ring size, so it is timed once
    let reps = cfg.ring_repeats.max(1);
    let mut digest_times = Vec::with_capacity(reps);
    let mut timed = Vec::new();
    for &size in &cfg.ring_sizes {
        let ring: Vec<_> = keys[..size].iter().map(|k| *k.public()).collect();
        let signer = size / 2;
        let mut sign_times = Vec::with_capacity(reps);
        let mut verify_times = Vec::with_capacity(reps);
        for rep in 0..reps {
            let start = Instant::now();
            let digest = digest_params(&params, rep as u64);
            digest_times.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            let sig = ring_sign(&group, &digest, &ring, signer, &keys[signer], &mut rng)?;
            sign_times.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            let ok = ring_verify(&group, &digest, &ring, &sig);
            verify_times.push(start.elapsed().as_secs_f64());
            assert!(ok, "benchmark signature failed to verify");
        }
        timed.push((size, median(sign_times), median(verify_times)));
    }
    let digest = median(digest_times);
    let ring_rows = timed
        .into_iter()
        .map(|(ring_size, sign, verify)| RingTiming {
            ring_size,
            elements: cfg.elements,
            sign_seconds: digest + sign,
            verify_seconds: digest + verify,
        })
        .collect();

    let start = Instant::now();
    let key = PaillierKey::generate(cfg.paillier_bits, &mut rng)?;
    let paillier_keygen_seconds = start.elapsed().as_secs_f64();
    let window = codec.window();
    let plain: Vec<BigUint> = (0..cfg.paillier_samples.max(2))
        .map(|_| BigUint::from(rng.gen_range(0..window)))
        .collect();
    let paillier = paillier_encrypt_bench(&key, &plain, &mut rng)?;

    Ok(BenchReport {
        ring: ring_rows,
        paillier,
        paillier_keygen_seconds,
        extrapolate: cfg.extrapolate.clone(),
        elements: cfg.elements,
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}
