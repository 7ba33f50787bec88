//! Time-tag stream container and its binary file format.
//!
//! Layout: a little-endian u32 header length, a JSON header, then packed
//! 9-byte records of one u8 channel index followed by a little-endian u64
//! tick count. Ticks must be non-decreasing; equal ticks are allowed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};

/// Channel index to name mapping used by the simulator.
pub const CHANNEL_NAMES: [&str; 2] = ["C", "D"];

const FORMAT_VERSION: u32 = 1;
const MAX_HEADER_BYTES: u32 = 1 << 20;
const RECORD_BYTES: usize = 9;

/// One detector click, quantized to the acquisition clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeTag {
    pub tick: u64,
    /// Index into the stream's channel name table.
    pub channel: u8,
}

impl TimeTag {
    /// Absolute time in seconds for a given clock tick length.
    pub fn time(&self, tick_seconds: f64) -> f64 {
        self.tick as f64 * tick_seconds
    }
}

/// Metadata stored ahead of the packed records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagHeader {
    pub version: u32,
    /// Clock tick length in seconds.
    pub tick_seconds: f64,
    pub channel_names: Vec<String>,
    /// Acquisition duration in seconds.
    pub duration_seconds: f64,
    /// Seed the stream was generated with.
    pub seed: u64,
    /// Digest of the generating configuration, for provenance checks.
    pub config_digest: String,
}

/// A complete tag stream held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    pub header: TagHeader,
    pub tags: Vec<TimeTag>,
}

impl TimeTagStream {
    /// Count of tags on each of the first two channels.
    pub fn channel_counts(&self) -> [u64; 2] {
        let mut counts = [0u64; 2];
        for tag in &self.tags {
            if let Some(c) = counts.get_mut(tag.channel as usize) {
                *c += 1;
            }
        }
        counts
    }

    /// Tick values of one channel, in stream order.
    pub fn channel_ticks(&self, channel: u8) -> Vec<u64> {
        self.tags
            .iter()
            .filter(|t| t.channel == channel)
            .map(|t| t.tick)
            .collect()
    }
}

/// Serialize a stream to the binary format.
pub fn write_tags<W: Write>(mut w: W, stream: &TimeTagStream) -> Result<()> {
    let header = serde_json::to_vec(&stream.header)
        .map_err(|e| AhcError::parse(format!("cannot encode header: {e}"), None))?;
    if header.len() as u64 > MAX_HEADER_BYTES as u64 {
        return Err(AhcError::parse("header too large", None));
    }
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = [0u8; RECORD_BYTES];
    for tag in &stream.tags {
        buf[0] = tag.channel;
        buf[1..].copy_from_slice(&tag.tick.to_le_bytes());
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Deserialize a stream, validating structure and tick order.
pub fn read_tags<R: Read>(mut r: R) -> Result<TimeTagStream> {
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)
        .map_err(|_| AhcError::parse("file too short for a header length", Some(0)))?;
    let header_len = u32::from_le_bytes(len_bytes);
    if header_len == 0 || header_len > MAX_HEADER_BYTES {
        return Err(AhcError::parse(
            format!("implausible header length {header_len}"),
            Some(0),
        ));
    }
    let mut header_bytes = vec![0u8; header_len as usize];
    r.read_exact(&mut header_bytes)
        .map_err(|_| AhcError::parse("truncated header", Some(4)))?;
    let header: TagHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| AhcError::parse(format!("bad header: {e}"), Some(4)))?;
    if header.version != FORMAT_VERSION {
        return Err(AhcError::parse(
            format!("unsupported format version {}", header.version),
            Some(4),
        ));
    }
    let n_channels = header.channel_names.len();
    if n_channels == 0 || n_channels > u8::MAX as usize {
        return Err(AhcError::parse("header lists no channels", Some(4)));
    }

    let base = 4 + header_len as u64;
    let mut tags = Vec::new();
    let mut buf = [0u8; RECORD_BYTES];
    let mut last_tick = 0u64;
    loop {
        let filled = read_full(&mut r, &mut buf)?;
        if filled == 0 {
            break;
        }
        let index = tags.len();
        if filled < RECORD_BYTES {
            return Err(AhcError::parse(
                format!("record {index} truncated ({filled} of {RECORD_BYTES} bytes)"),
                Some(base + (index * RECORD_BYTES) as u64),
            ));
        }
        let channel = buf[0];
        let tick = u64::from_le_bytes(buf[1..].try_into().unwrap());
        if channel as usize >= n_channels {
            return Err(AhcError::parse(
                format!("record {index}: channel {channel} not in header"),
                Some(base + (index * RECORD_BYTES) as u64),
            ));
        }
        if tick < last_tick {
            return Err(AhcError::parse(
                format!("record {index}: tick {tick} goes backwards (previous {last_tick})"),
                Some(base + (index * RECORD_BYTES) as u64),
            ));
        }
        last_tick = tick;
        tags.push(TimeTag { tick, channel });
    }
    Ok(TimeTagStream { header, tags })
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

/// Write a stream to a file.
pub fn write_tags_file<P: AsRef<Path>>(path: P, stream: &TimeTagStream) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tags(&mut w, stream)?;
    w.flush()?;
    Ok(())
}

/// Read a stream from a file.
pub fn read_tags_file<P: AsRef<Path>>(path: P) -> Result<TimeTagStream> {
    read_tags(BufReader::new(File::open(path)?))
}

/// Dump a stream as CSV with resolved times, for eyeballing.
pub fn write_tags_csv<W: Write>(mut w: W, stream: &TimeTagStream) -> Result<()> {
    writeln!(w, "channel,tick")?;
    for tag in &stream.tags {
        writeln!(w, "{},{}", tag.channel, tag.tick)?;
    }
    Ok(())
}
