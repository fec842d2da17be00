//! JSON kernel files.
//!
//! ```json
//! {"version":1,"d1":1,"d2":1,"N1":2,"N2":2,"ordering":"graded-lex",
//!  "entries":[...], "metadata":{"generator":"semigroup:t=0.5"}}
//! ```
//!
//! `entries` is row-major with rows indexed by the output multi-index.
//! Floats are written in shortest round-trip form, so reading a written
//! file gives back the same bits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_ops::KernelMatrix;
use crate::multiindex::count;

pub const FORMAT_VERSION: u32 = 1;
pub const ORDERING: &str = "graded-lex";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub version: u32,
    pub d1: usize,
    pub d2: usize,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub ordering: String,
    pub entries: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl KernelFile {
    pub fn from_kernel(k: &KernelMatrix, metadata: Option<Metadata>) -> Self {
        Self {
            version: FORMAT_VERSION,
            d1: k.d_in(),
            d2: k.d_out(),
            n1: k.n_in(),
            n2: k.n_out(),
            ordering: ORDERING.to_string(),
            entries: k.entries().to_vec(),
            metadata,
        }
    }

    /// Checks the file invariants and builds the kernel.
    pub fn to_kernel(&self) -> Result<KernelMatrix> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "version must be {FORMAT_VERSION}, got {}",
                self.version
            )));
        }
        if self.ordering != ORDERING {
            return Err(Error::Format(format!(
                "ordering must be {ORDERING:?}, got {:?}",
                self.ordering
            )));
        }
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::Format("d1 and d2 must be at least 1".into()));
        }
        let want = count(self.d2, self.n2)?
            .checked_mul(count(self.d1, self.n1)?)
            .ok_or_else(|| Error::Overflow("entry count".into()))?;
        if self.entries.len() != want {
            return Err(Error::Format(format!(
                "entries length {} != count(d2,N2) x count(d1,N1) = {want}",
                self.entries.len()
            )));
        }
        KernelMatrix::from_row_major(self.d1, self.n1, self.d2, self.n2, self.entries.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn write_kernel(path: &Path, k: &KernelMatrix, metadata: Option<Metadata>) -> Result<()> {
    let mut text = KernelFile::from_kernel(k, metadata).to_json();
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn read_kernel_file(path: &Path) -> Result<KernelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    KernelFile::from_json(&text)
}

pub fn read_kernel(path: &Path) -> Result<KernelMatrix> {
    read_kernel_file(path)?.to_kernel()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> KernelMatrix {
        KernelMatrix::from_fn(1, 2, 2, 1, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) * 1e-7).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let k = sample();
        let text = KernelFile::from_kernel(&k, None).to_json();
        let back = KernelFile::from_json(&text).unwrap().to_kernel().unwrap();
        for (a, b) in k.entries().iter().zip(back.entries()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.d_out(), 2);
        assert_eq!(back.n_in(), 2);
    }

    #[test]
    fn rejects_bad_ordering_and_length() {
        let mut f = KernelFile::from_kernel(&sample(), None);
        f.ordering = "lex".into();
        assert!(matches!(f.to_kernel(), Err(Error::Format(m)) if m.contains("ordering")));
        let mut f = KernelFile::from_kernel(&sample(), None);
        f.entries.pop();
        assert!(matches!(f.to_kernel(), Err(Error::Format(m)) if m.contains("entries length")));
        assert!(KernelFile::from_json("{\"version\":1}").is_err());
    }

    #[test]
    fn metadata_survives() {
        let meta = Metadata {
            generator: Some("semigroup:t=0.5".into()),
            seed: Some(3),
            rng: None,
        };
        let f = KernelFile::from_kernel(&sample(), Some(meta.clone()));
        let back = KernelFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back.metadata, Some(meta));
    }
}
