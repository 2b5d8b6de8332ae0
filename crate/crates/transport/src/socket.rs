//! Optional TCP mode: clients push frames to a collector that feeds the
//! same [`SharedMailbox`] the in-process simulation uses.

use crate::codec::{self, Message, HEADER_LEN};
use crate::error::SocketError;
use crate::mailbox::SharedMailbox;
use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> std::io::Result<()> {
    w.write_all(&codec::encode(msg))?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any header byte.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Message>, SocketError> {
    let mut header = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => {
                return Err(crate::error::DecodeError::Truncated {
                    needed: 4,
                    available: got,
                }
                .into())
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = codec::frame_len(header)?;
    let mut payload = vec![0u8; len];
    let mut filled = 0;
    while filled < len {
        match r.read(&mut payload[filled..]) {
            Ok(0) => {
                return Err(crate::error::DecodeError::Truncated {
                    needed: HEADER_LEN - 1 + len,
                    available: 4 + filled,
                }
                .into())
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(codec::decode_payload(payload[0], &payload[1..])?))
}

/// Drains one client connection into the mailbox.
pub fn handle_upload_connection(stream: &mut TcpStream, mailbox: &SharedMailbox) -> Result<usize, SocketError> {
    let mut n = 0;
    while let Some(msg) = read_frame(stream)? {
        match msg {
            Message::SignedUpdate(u) => mailbox.submit_anonymous(u)?,
            Message::Commitment(c) => mailbox.multicast_commitment(c)?,
            other => return Err(SocketError::Unexpected(other.tag())),
        }
        n += 1;
    }
    Ok(n)
}

/// Accepts exactly `connections` clients, handling each on its own thread.
/// Returns the per-connection results in accept order.
pub fn collect_round(
    listener: &TcpListener,
    mailbox: &SharedMailbox,
    connections: usize,
) -> std::io::Result<Vec<Result<usize, SocketError>>> {
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(connections);
        for _ in 0..connections {
            let (mut stream, peer) = listener.accept()?;
            log::debug!("upload connection from {peer}");
            handles.push(scope.spawn(move || handle_upload_connection(&mut stream, mailbox)));
        }
        Ok(handles.into_iter().map(|h| h.join().expect("connection handler panicked")).collect())
    })
}

/// Client side: sends the given messages on one connection and closes it.
pub fn send_messages<A: ToSocketAddrs>(addr: A, msgs: &[Message]) -> std::io::Result<()> {
    let mut stream = TcpStream::connect(addr)?;
    for m in msgs {
        write_frame(&mut stream, m)?;
    }
    stream.shutdown(std::net::Shutdown::Write)
}
