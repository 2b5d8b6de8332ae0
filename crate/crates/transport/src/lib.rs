//! Simulated anonymous channel between participants and the aggregation
//! server, the frame codec for socket mode, and the JSON-lines transcript.

pub mod codec;
pub mod dropout;
pub mod envelope;
pub mod error;
pub mod mailbox;
pub mod socket;
pub mod transcript;

#[cfg(test)]
mod testutil;

pub use codec::{decode, encode, Message, MAX_FRAME_LEN};
pub use dropout::{apply_dropout, DropoutPlan};
pub use envelope::{CommitmentEntry, GlobalSum, Pseudonym, SignedUpdate};
pub use error::{DecodeError, SocketError, TranscriptError, TransportError};
pub use mailbox::{CommitmentBoard, RoundDelivery, RoundMailbox, SharedMailbox};
pub use transcript::{verify_transcript, Event, TranscriptReport, TranscriptWriter};
