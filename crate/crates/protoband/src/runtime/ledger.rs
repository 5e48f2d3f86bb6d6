//! Append-only run ledger.
//!
//! Every run writes newline-delimited JSON records of the form
//! `{"seq":N,"crc":C,"event":{...}}`. `seq` increases by one per record and
//! `crc` is the CRC32 (IEEE) of the canonical serialization of `event`, so a
//! reader can detect truncation, reordering, and bit rot. The first record is
//! always the run header. Replaying the events reconstructs scheduler state;
//! resuming appends to the same file.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hpspace::{ParamValue, SpaceVariant};
use crate::kde::SamplerConfig;
use crate::scheduler::{BudgetLadder, Origin};
use crate::{Error, Result};

/// Ledger schema version; bump on incompatible record changes.
pub const SCHEMA_VERSION: &str = "1";

/// Bitwise CRC32 (IEEE 802.3, reflected polynomial 0xEDB88320).
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc: u32 = 0xffff_ffff;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

/// First record of every ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema_version: String,
    pub run_seed: u64,
    pub space: SpaceVariant,
    pub ladder: BudgetLadder,
    pub n_sh_iterations: u32,
    pub sampler: SamplerConfig,
    /// Content hashes of the datasets the run was launched with, keyed by
    /// role (`train`, `val:<name>`, `test:<name>`).
    pub dataset_hashes: BTreeMap<String, String>,
    /// The full launch configuration, kept opaque here so a resume can
    /// rebuild the objective without external files.
    pub run_config: serde_json::Value,
}

/// One ledger event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LedgerEvent {
    Header {
        header: RunHeader,
    },
    TrialSampled {
        trial_id: u64,
        iteration: u32,
        stage: u32,
        origin: Origin,
        budget: u64,
        seed: u64,
        parent: Option<u64>,
        values: BTreeMap<String, ParamValue>,
        checksum: String,
    },
    TrialStarted {
        trial_id: u64,
    },
    TrialFinished {
        trial_id: u64,
        val_accuracy: f64,
        train_loss_final: f64,
        wall_seconds: f64,
        diverged: bool,
    },
    TrialFailed {
        trial_id: u64,
        message: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct LedgerRecord {
    seq: u64,
    crc: u32,
    event: LedgerEvent,
}

/// Append-only writer; one flushed line per event.
pub struct LedgerWriter {
    file: File,
    path: PathBuf,
    next_seq: u64,
}

impl LedgerWriter {
    /// Create a fresh ledger. Fails if the file already exists.
    pub fn create(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().write(true).create_new(true).open(path).map_err(|e| {
            Error::Runtime(format!("cannot create ledger {}: {e}", path.display()))
        })?;
        Ok(LedgerWriter { file, path: path.to_path_buf(), next_seq: 0 })
    }

    /// Open an existing ledger for appending after `existing` records.
    pub fn append(path: &Path, existing: u64) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(path).map_err(|e| {
            Error::Runtime(format!("cannot open ledger {}: {e}", path.display()))
        })?;
        Ok(LedgerWriter { file, path: path.to_path_buf(), next_seq: existing })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Append one event and flush it to the OS.
    pub fn write(&mut self, event: &LedgerEvent) -> Result<u64> {
        let payload = serde_json::to_string(event)?;
        let crc = crc32(payload.as_bytes());
        let line = format!("{{\"seq\":{},\"crc\":{},\"event\":{}}}\n", self.next_seq, crc, payload);
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        let seq = self.next_seq;
        self.next_seq += 1;
        Ok(seq)
    }
}

/// Read and verify a ledger.
///
/// Every line is checked for sequence continuity and CRC integrity; a bad
/// interior line is a hard error naming its sequence number. A torn final
/// line without a newline terminator is treated as an interrupted append and
/// dropped with a warning.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerEvent>> {
    let file = File::open(path)
        .map_err(|e| Error::Runtime(format!("cannot open ledger {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut events = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        if !buf.ends_with('\n') {
            eprintln!(
                "ledger {}: dropping torn final record after seq {}",
                path.display(),
                line_no.saturating_sub(1)
            );
            break;
        }
        let record: LedgerRecord = serde_json::from_str(buf.trim_end()).map_err(|e| {
            Error::Runtime(format!("ledger record {line_no} is corrupt: {e}"))
        })?;
        if record.seq != line_no {
            return Err(Error::Runtime(format!(
                "ledger record {line_no} carries sequence {}",
                record.seq
            )));
        }
        let payload = serde_json::to_string(&record.event)?;
        let crc = crc32(payload.as_bytes());
        if crc != record.crc {
            return Err(Error::Runtime(format!(
                "ledger record {} fails its CRC check (stored {}, computed {crc})",
                record.seq, record.crc
            )));
        }
        events.push(record.event);
        line_no += 1;
    }
    if let Some(LedgerEvent::Header { header }) = events.first() {
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::Runtime(format!(
                "ledger schema version {} does not match this binary's {}",
                header.schema_version, SCHEMA_VERSION
            )));
        }
    } else if !events.is_empty() {
        return Err(Error::Runtime("ledger does not start with a header".into()));
    }
    Ok(events)
}

/// The header of a ledger, or an error if it has none.
pub fn header_of(events: &[LedgerEvent]) -> Result<&RunHeader> {
    match events.first() {
        Some(LedgerEvent::Header { header }) => Ok(header),
        _ => Err(Error::Runtime("ledger has no header".into())),
    }
}
