//! Artifact manifest with content hashes.

use std::io::{self, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest { entries: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Hash a produced artifact and record it.
    pub fn add(&mut self, dir: &Path, name: &str) -> io::Result<()> {
        let mut f = std::fs::File::open(dir.join(name))?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 8192];
        loop {
            let n = f.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
        }
        self.entries.push((name.to_string(), hex::encode(hasher.finalize())));
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let mut sorted = self.entries.clone();
        sorted.sort();
        for (name, hash) in &sorted {
            writeln!(w, "{hash}  {name}")?;
        }
        Ok(())
    }
}
