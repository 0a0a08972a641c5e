//! Framed byte stream standing in for the armband radio link.
//!
//! Wire frame, 13 bytes:
//!
//! ```text
//! A5 5A | seq (u16, big-endian) | ch1..ch8 (i8) | checksum
//! ```
//!
//! The checksum is the two's complement of the low byte of the sum of the
//! first 12 bytes, so all 13 bytes sum to zero mod 256.

use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::model::{EmgRecording, CHANNELS};

pub const FRAME_LEN: usize = 13;
pub const MAGIC: [u8; 2] = [0xA5, 0x5A];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmgFrame {
    pub seq: u16,
    pub ch: [i8; CHANNELS],
}

fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0u8, |acc, b| acc.wrapping_add(*b)).wrapping_neg()
}

pub fn encode_frame(f: &EmgFrame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[..2].copy_from_slice(&MAGIC);
    out[2..4].copy_from_slice(&f.seq.to_be_bytes());
    for (dst, v) in out[4..12].iter_mut().zip(f.ch) {
        *dst = v as u8;
    }
    out[12] = checksum(&out[..12]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    /// Fewer than 13 bytes available.
    NeedMore,
    /// No magic at the current position.
    BadMagic,
    /// Magic found but the checksum does not match.
    Checksum,
}

/// Decode one frame from the front of `bytes`. On success the frame occupies
/// exactly the first [`FRAME_LEN`] bytes.
pub fn decode_frame(bytes: &[u8]) -> Result<EmgFrame, DecodeError> {
    if bytes.len() >= 2 && bytes[..2] != MAGIC {
        return Err(DecodeError::BadMagic);
    }
    if bytes.len() == 1 && bytes[0] != MAGIC[0] {
        return Err(DecodeError::BadMagic);
    }
    if bytes.len() < FRAME_LEN {
        return Err(DecodeError::NeedMore);
    }
    if checksum(&bytes[..12]) != bytes[12] {
        return Err(DecodeError::Checksum);
    }
    let mut ch = [0i8; CHANNELS];
    for (dst, b) in ch.iter_mut().zip(&bytes[4..12]) {
        *dst = *b as i8;
    }
    Ok(EmgFrame {
        seq: u16::from_be_bytes([bytes[2], bytes[3]]),
        ch,
    })
}

/// A discontinuity in the sequence counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqGap {
    pub expected: u16,
    pub found: u16,
}

impl SeqGap {
    /// Frames missing between the two, modulo 2^16.
    pub fn missing(&self) -> u16 {
        self.found.wrapping_sub(self.expected)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub frames: u64,
    /// Frames discarded for a checksum mismatch.
    pub dropped: u64,
    /// Bytes skipped while hunting for magic.
    pub skipped_bytes: u64,
    pub gaps: Vec<SeqGap>,
}

/// Incremental decoder over an arbitrary chunking of the byte stream.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    pos: usize,
    expected: Option<u16>,
    stats: DecoderStats,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.pos > 4096 {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    /// Next valid frame, or `None` once the buffered bytes are exhausted.
    pub fn next_frame(&mut self) -> Option<EmgFrame> {
        loop {
            match decode_frame(&self.buf[self.pos..]) {
                Ok(frame) => {
                    self.pos += FRAME_LEN;
                    self.stats.frames += 1;
                    if let Some(expected) = self.expected {
                        if frame.seq != expected {
                            self.stats.gaps.push(SeqGap {
                                expected,
                                found: frame.seq,
                            });
                        }
                    }
                    self.expected = Some(frame.seq.wrapping_add(1));
                    return Some(frame);
                }
                Err(DecodeError::BadMagic) => {
                    self.pos += 1;
                    self.stats.skipped_bytes += 1;
                }
                Err(DecodeError::Checksum) => {
                    self.pos += FRAME_LEN;
                    self.stats.dropped += 1;
                }
                Err(DecodeError::NeedMore) => return None,
            }
        }
    }

    pub fn pending(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn stats(&self) -> &DecoderStats {
        &self.stats
    }
}

/// Frames of a recording, one per sample, optionally paced in real time.
#[derive(Debug)]
pub struct Replay<'a> {
    rec: &'a EmgRecording,
    next: usize,
    interval: Option<Duration>,
    started: Instant,
}

/// Replay `rec` at `rate_multiplier` times its sampling rate. A multiplier of
/// zero emits frames as fast as they are pulled.
pub fn replay(rec: &EmgRecording, rate_multiplier: f64) -> Replay<'_> {
    let interval = (rate_multiplier > 0.0)
        .then(|| Duration::from_secs_f64(1.0 / (f64::from(rec.fs()) * rate_multiplier)));
    Replay {
        rec,
        next: 0,
        interval,
        started: Instant::now(),
    }
}

impl Iterator for Replay<'_> {
    type Item = EmgFrame;

    fn next(&mut self) -> Option<EmgFrame> {
        let sample = self.rec.samples().get(self.next)?;
        if let Some(step) = self.interval {
            let due = self.started + step * self.next as u32;
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        let frame = EmgFrame {
            seq: self.next as u16,
            ch: sample.ch,
        };
        self.next += 1;
        Some(frame)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.rec.len() - self.next;
        (left, Some(left))
    }
}

// frames per chunk handed to the queue
const CHUNK_FRAMES: usize = 50;

/// Replay a recording on a producer thread into a bounded queue of encoded
/// byte chunks. The producer blocks while the queue holds `capacity` chunks.
pub fn spawn_replay(rec: EmgRecording, rate_multiplier: f64, capacity: usize) -> (Receiver<Vec<u8>>, JoinHandle<()>) {
    let (tx, rx) = mpsc::sync_channel(capacity.max(1));
    let handle = thread::spawn(move || {
        let mut chunk = Vec::with_capacity(CHUNK_FRAMES * FRAME_LEN);
        for frame in replay(&rec, rate_multiplier) {
            chunk.extend_from_slice(&encode_frame(&frame));
            // paced replay forwards every frame as it is produced
            if chunk.len() >= CHUNK_FRAMES * FRAME_LEN || rate_multiplier > 0.0 {
                if tx.send(std::mem::take(&mut chunk)).is_err() {
                    return;
                }
            }
        }
        if !chunk.is_empty() {
            let _ = tx.send(chunk);
        }
    });
    (rx, handle)
}

/// Replay a recording over a loopback TCP connection. Returns the reading end
/// and the writer thread.
pub fn tcp_replay(rec: EmgRecording, rate_multiplier: f64) -> io::Result<(TcpStream, JoinHandle<io::Result<()>>)> {
    let listener = TcpListener::bind((Ipv4Addr::LOCALHOST, 0))?;
    let addr = listener.local_addr()?;
    let handle = thread::spawn(move || {
        let mut out = io::BufWriter::new(TcpStream::connect(addr)?);
        for frame in replay(&rec, rate_multiplier) {
            out.write_all(&encode_frame(&frame))?;
            if rate_multiplier > 0.0 {
                out.flush()?;
            }
        }
        out.flush()
    });
    let (reader, _) = listener.accept()?;
    Ok((reader, handle))
}

/// Drain a byte stream through a [`FrameDecoder`], calling `on_frame` for
/// every valid frame.
pub fn read_frames<R: Read>(
    mut source: R,
    mut on_frame: impl FnMut(EmgFrame) -> io::Result<()>,
) -> io::Result<DecoderStats> {
    let mut decoder = FrameDecoder::new();
    let mut buf = [0u8; 4096];
    loop {
        let n = source.read(&mut buf)?;
        if n == 0 {
            break;
        }
        decoder.push(&buf[..n]);
        while let Some(frame) = decoder.next_frame() {
            on_frame(frame)?;
        }
    }
    Ok(decoder.stats().clone())
}
