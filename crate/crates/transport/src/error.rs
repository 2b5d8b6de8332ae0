use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("envelope for round {got} submitted to mailbox at round {expected}")]
    WrongRound { expected: u64, got: u64 },
    #[error("pseudonym {0} already used this round")]
    DuplicatePseudonym(String),
    #[error("pseudonym {0} has no upload this round")]
    UnknownPseudonym(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("frame truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("frame length {0} exceeds the 64 MiB limit")]
    TooLarge(usize),
    #[error("frame length must cover at least the tag byte")]
    EmptyFrame,
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("{0} trailing bytes after message body")]
    TrailingBytes(usize),
}

#[derive(Debug, Error)]
pub enum SocketError {
    #[error("socket i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad frame: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Rejected(#[from] TransportError),
    #[error("unexpected message tag 0x{0:02x} on upload channel")]
    Unexpected(u8),
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: bad {what}")]
    Field { line: usize, what: &'static str },
    #[error("transcript has no setup record before line {0}")]
    MissingSetup(usize),
}
