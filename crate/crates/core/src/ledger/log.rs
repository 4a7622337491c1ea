use std::io::Write;

use serde::{Deserialize, Serialize};

use super::tx::PublicTx;
use super::Rejection;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
}

/// One line of the transaction log: the public transaction and its outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub ledger: String,
    pub kind: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    pub tx: serde_json::Value,
    /// Hex of the canonical byte encoding, used for leakage scans.
    pub bytes: String,
}

#[derive(Clone, Debug, Default)]
pub struct TxLog {
    pub records: Vec<LogRecord>,
}

impl TxLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record<T: PublicTx, R>(&mut self, ledger: &str, tx: &T, outcome: &Result<R, Rejection>) {
        let (verdict, reason) = match outcome {
            Ok(_) => (Verdict::Accepted, None),
            Err(e) => (Verdict::Rejected, Some(e.code().to_string())),
        };
        self.records.push(LogRecord {
            seq: self.records.len() as u64,
            ledger: ledger.to_string(),
            kind: tx.kind().to_string(),
            verdict,
            reason,
            tx: serde_json::to_value(tx).expect("transactions serialise"),
            bytes: hex::encode(tx.to_bytes()),
        });
    }

    /// An off-chain step whose outcome belongs in the log, such as a registration attempt.
    pub fn record_event(&mut self, ledger: &str, kind: &str, public: &[u8], outcome: &Result<(), Rejection>) {
        let (verdict, reason) = match outcome {
            Ok(()) => (Verdict::Accepted, None),
            Err(e) => (Verdict::Rejected, Some(e.code().to_string())),
        };
        self.records.push(LogRecord {
            seq: self.records.len() as u64,
            ledger: ledger.to_string(),
            kind: kind.to_string(),
            verdict,
            reason,
            tx: serde_json::Value::String(hex::encode(public)),
            bytes: hex::encode(public),
        });
    }

    pub fn accepted(&self) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Accepted)
    }

    pub fn rejected(&self) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Rejected)
    }

    /// Concatenation of every logged transaction's canonical bytes.
    pub fn public_bytes(&self) -> Vec<u8> {
        self.records.iter().flat_map(|r| hex::decode(&r.bytes).expect("own hex")).collect()
    }

    /// Line-delimited JSON.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> serde_json::Result<Vec<LogRecord>> {
        text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
    }
}
