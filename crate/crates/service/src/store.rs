//! Append-only record log.
//!
//! Each record is framed as `{len:08x} {crc32:08x} {json}\n`, where `len`
//! is the byte length of the JSON payload and `crc32` its checksum. A
//! record is acknowledged only after the file has been synced. On open, a
//! torn record at the end of the file (an interrupted append) is cut off;
//! a damaged record followed by valid ones is reported as corruption.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

const HEADER_LEN: usize = 18;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("record store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record store {path} is corrupt at byte {offset}: {reason}")]
    Corrupt {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("record could not be encoded: {0}")]
    Encode(#[from] serde_json::Error),
}

#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    file: File,
    len: u64,
    records: u64,
}

/// Outcome of reading one frame.
enum Frame<'a> {
    Record(&'a [u8], usize),
    Bad(String),
}

fn read_frame(buf: &[u8]) -> Frame<'_> {
    if buf.len() < HEADER_LEN {
        return Frame::Bad("truncated header".into());
    }
    let header = match std::str::from_utf8(&buf[..HEADER_LEN]) {
        Ok(h) => h,
        Err(_) => return Frame::Bad("header is not text".into()),
    };
    let (len, rest) = header.split_at(8);
    if !rest.starts_with(' ') || !rest.ends_with(' ') {
        return Frame::Bad("malformed header".into());
    }
    let (Ok(len), Ok(crc)) = (
        usize::from_str_radix(len, 16),
        u32::from_str_radix(&rest[1..9], 16),
    ) else {
        return Frame::Bad("malformed header".into());
    };
    let end = HEADER_LEN + len;
    if buf.len() < end + 1 {
        return Frame::Bad("truncated payload".into());
    }
    let payload = &buf[HEADER_LEN..end];
    if buf[end] != b'\n' {
        return Frame::Bad("missing record terminator".into());
    }
    if crc32fast::hash(payload) != crc {
        return Frame::Bad("checksum mismatch".into());
    }
    Frame::Record(payload, end + 1)
}

/// True if a valid frame starts anywhere in `buf` at a line start.
fn has_later_record(buf: &[u8]) -> bool {
    buf.iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .any(|(i, _)| matches!(read_frame(&buf[i + 1..]), Frame::Record(..)))
}

impl RecordStore {
    /// Opens (creating if needed) the store and replays every record.
    pub fn open<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<(Self, Vec<T>), StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf).map_err(io)?;

        let mut records = Vec::new();
        let mut offset = 0usize;
        while offset < buf.len() {
            match read_frame(&buf[offset..]) {
                Frame::Record(payload, used) => {
                    let record = serde_json::from_slice(payload).map_err(|e| StoreError::Corrupt {
                        path: path.clone(),
                        offset: offset as u64,
                        reason: format!("undecodable record: {e}"),
                    })?;
                    records.push(record);
                    offset += used;
                }
                Frame::Bad(reason) => {
                    if has_later_record(&buf[offset..]) {
                        return Err(StoreError::Corrupt {
                            path,
                            offset: offset as u64,
                            reason,
                        });
                    }
                    tracing::warn!(offset, reason, "discarding torn record at end of store");
                    file.set_len(offset as u64).map_err(io)?;
                    file.sync_all().map_err(io)?;
                    break;
                }
            }
        }
        let len = offset as u64;
        file.seek(SeekFrom::End(0)).map_err(io)?;
        let count = records.len() as u64;
        Ok((
            Self {
                path,
                file,
                len,
                records: count,
            },
            records,
        ))
    }

    /// Appends one record and syncs it to disk before returning.
    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<(), StoreError> {
        let payload = serde_json::to_vec(record)?;
        let mut frame = format!("{:08x} {:08x} ", payload.len(), crc32fast::hash(&payload)).into_bytes();
        frame.extend_from_slice(&payload);
        frame.push(b'\n');
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        if let Err(e) = self.file.write_all(&frame).and_then(|_| self.file.sync_data()) {
            // leave no partial frame behind for the next append
            let _ = self.file.set_len(self.len);
            return Err(io(e));
        }
        self.len += frame.len() as u64;
        self.records += 1;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len_bytes(&self) -> u64 {
        self.len
    }

    pub fn record_count(&self) -> u64 {
        self.records
    }
}
