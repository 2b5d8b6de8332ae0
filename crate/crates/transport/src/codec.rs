//! Wire framing for socket mode.
//!
//! ```text
//! frame   = length (u32 BE, counts tag + body) ‖ tag (u8) ‖ body
//! tag     = 0x01 SignedUpdate | 0x02 CommitmentEntry | 0x03 GlobalSum | 0x04 ModelDownload
//! ```
//!
//! Bodies use fixed-width little-endian fields:
//!
//! * `SignedUpdate`: round u64 ‖ pseudonym [16] ‖ ring size u32 ‖ ring keys [32]·r ‖
//!   signature ‖ quantized params
//! * `CommitmentEntry`: round u64 ‖ pseudonym [16] ‖ commitment
//! * `GlobalSum`: round u64 ‖ count u32 ‖ included u32 ‖ pseudonyms [16]·k ‖ quantized params
//! * `ModelDownload`: round u64 ‖ model
//!
//! Signatures, commitments, quantized vectors and models use the canonical
//! encodings of their own types.

use crate::envelope::{CommitmentEntry, GlobalSum, Pseudonym, SignedUpdate};
use crate::error::DecodeError;
use fedring_crypto::{HashCommitment, PublicKey, QuantizedParams, RingSignature};
use fedring_flcore::ModelParams;

pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;
pub const HEADER_LEN: usize = 5;

pub const TAG_SIGNED_UPDATE: u8 = 0x01;
pub const TAG_COMMITMENT: u8 = 0x02;
pub const TAG_GLOBAL_SUM: u8 = 0x03;
pub const TAG_MODEL_DOWNLOAD: u8 = 0x04;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    SignedUpdate(SignedUpdate),
    Commitment(CommitmentEntry),
    GlobalSum(GlobalSum),
    ModelDownload { round: u64, model: ModelParams },
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::SignedUpdate(_) => TAG_SIGNED_UPDATE,
            Message::Commitment(_) => TAG_COMMITMENT,
            Message::GlobalSum(_) => TAG_GLOBAL_SUM,
            Message::ModelDownload { .. } => TAG_MODEL_DOWNLOAD,
        }
    }
}

pub fn encode(msg: &Message) -> Vec<u8> {
    let mut body = Vec::new();
    match msg {
        Message::SignedUpdate(u) => {
            body.extend_from_slice(&u.round.to_le_bytes());
            body.extend_from_slice(&u.pseudonym.0);
            body.extend_from_slice(&(u.ring.len() as u32).to_le_bytes());
            for pk in &u.ring {
                body.extend_from_slice(pk.as_bytes());
            }
            u.signature.write_to(&mut body);
            u.params.write_to(&mut body);
        }
        Message::Commitment(c) => {
            body.extend_from_slice(&c.round.to_le_bytes());
            body.extend_from_slice(&c.pseudonym.0);
            c.commitment.write_to(&mut body);
        }
        Message::GlobalSum(g) => {
            body.extend_from_slice(&g.round.to_le_bytes());
            body.extend_from_slice(&g.count.to_le_bytes());
            body.extend_from_slice(&(g.included.len() as u32).to_le_bytes());
            for p in &g.included {
                body.extend_from_slice(&p.0);
            }
            g.sum.write_to(&mut body);
        }
        Message::ModelDownload { round, model } => {
            body.extend_from_slice(&round.to_le_bytes());
            body.extend_from_slice(&model.to_bytes());
        }
    }
    let mut frame = Vec::with_capacity(HEADER_LEN + body.len());
    frame.extend_from_slice(&((body.len() + 1) as u32).to_be_bytes());
    frame.push(msg.tag());
    frame.extend_from_slice(&body);
    frame
}

/// Parses the 4-byte length prefix, returning the frame payload length
/// (tag + body).
pub fn frame_len(header: [u8; 4]) -> Result<usize, DecodeError> {
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_FRAME_LEN {
        return Err(DecodeError::TooLarge(len));
    }
    if len == 0 {
        return Err(DecodeError::EmptyFrame);
    }
    Ok(len)
}

/// Decodes one frame from the front of `bytes`, returning the message and
/// the number of bytes consumed.
pub fn decode(bytes: &[u8]) -> Result<(Message, usize), DecodeError> {
    if bytes.len() < 4 {
        return Err(DecodeError::Truncated {
            needed: 4,
            available: bytes.len(),
        });
    }
    let len = frame_len(bytes[..4].try_into().unwrap())?;
    let total = 4 + len;
    if bytes.len() < total {
        return Err(DecodeError::Truncated {
            needed: total,
            available: bytes.len(),
        });
    }
    let msg = decode_payload(bytes[4], &bytes[5..total])?;
    Ok((msg, total))
}

/// Decodes a tag and body that have already been split from the length prefix.
pub fn decode_payload(tag: u8, body: &[u8]) -> Result<Message, DecodeError> {
    let mut r = Reader { buf: body, pos: 0 };
    let msg = match tag {
        TAG_SIGNED_UPDATE => {
            let round = r.u64()?;
            let pseudonym = r.pseudonym()?;
            let n = r.u32()? as usize;
            r.ensure(n.saturating_mul(32))?;
            let ring = (0..n)
                .map(|_| {
                    let b: [u8; 32] = r.take(32)?.try_into().unwrap();
                    PublicKey::from_bytes(&b).ok_or_else(|| malformed("ring key", "invalid group element"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let signature = r.nested("signature", RingSignature::read_from)?;
            let params = r.nested("quantized params", QuantizedParams::read_from)?;
            Message::SignedUpdate(SignedUpdate {
                round,
                pseudonym,
                params,
                ring,
                signature,
            })
        }
        TAG_COMMITMENT => {
            let round = r.u64()?;
            let pseudonym = r.pseudonym()?;
            let commitment = r.nested("commitment", HashCommitment::read_from)?;
            Message::Commitment(CommitmentEntry {
                round,
                pseudonym,
                commitment,
            })
        }
        TAG_GLOBAL_SUM => {
            let round = r.u64()?;
            let count = r.u32()?;
            let k = r.u32()? as usize;
            r.ensure(k.saturating_mul(16))?;
            let included = (0..k).map(|_| r.pseudonym()).collect::<Result<Vec<_>, _>>()?;
            let sum = r.nested("quantized params", QuantizedParams::read_from)?;
            Message::GlobalSum(GlobalSum {
                round,
                count,
                included,
                sum,
            })
        }
        TAG_MODEL_DOWNLOAD => {
            let round = r.u64()?;
            let rest = r.take(r.remaining())?;
            let model = ModelParams::from_bytes(rest).map_err(|e| malformed("model", e))?;
            Message::ModelDownload { round, model }
        }
        other => return Err(DecodeError::UnknownTag(other)),
    };
    if r.remaining() != 0 {
        return Err(DecodeError::TrailingBytes(r.remaining()));
    }
    Ok(msg)
}

fn malformed(what: &'static str, detail: impl ToString) -> DecodeError {
    DecodeError::Malformed {
        what,
        detail: detail.to_string(),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn ensure(&self, n: usize) -> Result<(), DecodeError> {
        if self.remaining() < n {
            Err(DecodeError::Truncated {
                needed: HEADER_LEN + self.pos + n,
                available: HEADER_LEN + self.buf.len(),
            })
        } else {
            Ok(())
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        self.ensure(n)?;
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn pseudonym(&mut self) -> Result<Pseudonym, DecodeError> {
        Ok(Pseudonym(self.take(16)?.try_into().unwrap()))
    }

    fn nested<T>(
        &mut self,
        what: &'static str,
        read: impl FnOnce(&[u8]) -> fedring_crypto::Result<(T, usize)>,
    ) -> Result<T, DecodeError> {
        let (value, used) = read(&self.buf[self.pos..]).map_err(|e| malformed(what, e))?;
        self.pos += used;
        Ok(value)
    }
}
