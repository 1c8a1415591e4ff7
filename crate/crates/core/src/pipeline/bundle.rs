//! Self-describing binary model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes   "SFBUNDLE"
//! version      u32       BUNDLE_VERSION
//! sections     u32       number of sections
//! repeated per section:
//!   name_len   u16
//!   name       name_len bytes, UTF-8
//!   len        u64
//!   payload    len bytes, UTF-8 JSON
//! checksum     32 bytes  SHA-256 of every preceding byte
//! ```
//!
//! Known section names: `config`, `variant`, `vectorizer`, `forest`,
//! `scaler`, `network`. Only `config` is mandatory. Sections are written in
//! that order; unknown sections are rejected on load.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::commands::Variant;
use super::config::PipelineConfig;
use super::{PipelineError, Result};
use crate::data::Scaler;
use crate::forest::RandomForest;
use crate::nn::FusionNetwork;
use crate::text::{TfIdfModel, IDF_LOG_BASE};

pub const BUNDLE_MAGIC: &[u8; 8] = b"SFBUNDLE";
pub const BUNDLE_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: PipelineConfig,
    pub variant: Option<Variant>,
    pub vectorizer: Option<TfIdfModel>,
    pub forest: Option<RandomForest>,
    pub scaler: Option<Scaler>,
    pub network: Option<FusionNetwork>,
}

fn bundle_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Bundle(msg.into())
}

fn push_section<T: Serialize>(out: &mut Vec<u8>, name: &str, value: &T) -> Result<()> {
    let payload = serde_json::to_vec(value)?;
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| bundle_err("truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn parse<T: DeserializeOwned>(name: &str, payload: &[u8]) -> Result<T> {
    serde_json::from_slice(payload).map_err(|e| bundle_err(format!("section {name}: {e}")))
}

impl ModelBundle {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            config,
            variant: None,
            vectorizer: None,
            forest: None,
            scaler: None,
            network: None,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut body = Vec::new();
        let mut count = 0u32;
        push_section(&mut body, "config", &self.config)?;
        count += 1;
        if let Some(v) = &self.variant {
            push_section(&mut body, "variant", v)?;
            count += 1;
        }
        if let Some(v) = &self.vectorizer {
            push_section(&mut body, "vectorizer", v)?;
            count += 1;
        }
        if let Some(v) = &self.forest {
            push_section(&mut body, "forest", v)?;
            count += 1;
        }
        if let Some(v) = &self.scaler {
            push_section(&mut body, "scaler", v)?;
            count += 1;
        }
        if let Some(v) = &self.network {
            push_section(&mut body, "network", v)?;
            count += 1;
        }

        let mut out = Vec::with_capacity(16 + body.len() + CHECKSUM_LEN);
        out.extend_from_slice(BUNDLE_MAGIC);
        out.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        out.extend_from_slice(&body);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < BUNDLE_MAGIC.len() + 8 + CHECKSUM_LEN {
            return Err(bundle_err("truncated"));
        }
        if &bytes[..BUNDLE_MAGIC.len()] != BUNDLE_MAGIC {
            return Err(bundle_err("bad magic"));
        }
        let (content, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(content).as_slice() != stored {
            return Err(bundle_err("checksum mismatch"));
        }

        let mut cur = Cursor {
            bytes: content,
            pos: BUNDLE_MAGIC.len(),
        };
        let version = cur.u32()?;
        if version != BUNDLE_VERSION {
            return Err(bundle_err(format!(
                "unsupported version {version} (expected {BUNDLE_VERSION})"
            )));
        }
        let count = cur.u32()?;
        let mut config = None;
        let mut bundle = Self::new(PipelineConfig::default());
        for _ in 0..count {
            let name_len = cur.u16()? as usize;
            let name = std::str::from_utf8(cur.take(name_len)?)
                .map_err(|_| bundle_err("section name is not UTF-8"))?
                .to_owned();
            let len = usize::try_from(cur.u64()?).map_err(|_| bundle_err("section too large"))?;
            let payload = cur.take(len)?;
            match name.as_str() {
                "config" => config = Some(parse::<PipelineConfig>(&name, payload)?),
                "variant" => bundle.variant = Some(parse(&name, payload)?),
                "vectorizer" => {
                    let mut m: TfIdfModel = parse(&name, payload)?;
                    if m.log_base() != IDF_LOG_BASE {
                        return Err(bundle_err(format!("unsupported IDF log base {:?}", m.log_base())));
                    }
                    m.reindex();
                    bundle.vectorizer = Some(m);
                }
                "forest" => bundle.forest = Some(parse(&name, payload)?),
                "scaler" => bundle.scaler = Some(parse(&name, payload)?),
                "network" => {
                    let net: FusionNetwork = parse(&name, payload)?;
                    net.check()?;
                    bundle.network = Some(net);
                }
                other => return Err(bundle_err(format!("unknown section {other:?}"))),
            }
        }
        if cur.pos != content.len() {
            return Err(bundle_err("trailing bytes before checksum"));
        }
        bundle.config = config.ok_or_else(|| bundle_err("missing config section"))?;
        Ok(bundle)
    }

    /// Hex SHA-256 of the serialized bundle body (the stored trailer).
    pub fn checksum(&self) -> Result<String> {
        let bytes = self.to_bytes()?;
        Ok(hex_digest(&bytes[bytes.len() - CHECKSUM_LEN..]))
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes)?;
        Ok(hex_digest(&bytes[bytes.len() - CHECKSUM_LEN..]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn sentiment_model(&self) -> Result<(&TfIdfModel, &RandomForest)> {
        match (&self.vectorizer, &self.forest) {
            (Some(v), Some(f)) => Ok((v, f)),
            _ => Err(bundle_err("bundle has no sentiment model")),
        }
    }

    pub fn forecaster(&self) -> Result<(&Scaler, &FusionNetwork)> {
        match (&self.scaler, &self.network) {
            (Some(s), Some(n)) => Ok((s, n)),
            _ => Err(bundle_err("bundle has no forecaster")),
        }
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
