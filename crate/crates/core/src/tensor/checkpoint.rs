//! Parameter checkpoints: a text manifest followed by a little-endian `f64` payload.
//!
//! ```text
//! laplace-control checkpoint v1
//! meta <key> <value>
//! param <name> <dim,dim,...> f64
//! end
//! <payload: every parameter's values in manifest order>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::array::Array;
use super::params::Params;
use crate::error::{Error, Result};

const MAGIC: &str = "laplace-control checkpoint v1";

/// Parameters plus free-form string metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub params: Params,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn meta_required(&self, key: &str) -> Result<&str> {
        self.meta(key).ok_or_else(|| Error::Format(format!("checkpoint lacks `{key}`")))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        for (k, v) in &self.meta {
            if k.contains(char::is_whitespace) || v.contains('\n') {
                return Err(Error::Format(format!("unwritable metadata `{k}`")));
            }
            writeln!(w, "meta {k} {v}")?;
        }
        for (name, a) in self.params.names().iter().zip(self.params.values()) {
            let dims: Vec<String> = a.shape().iter().map(|d| d.to_string()).collect();
            let dims = if dims.is_empty() { "scalar".to_string() } else { dims.join(",") };
            writeln!(w, "param {name} {dims} f64")?;
        }
        writeln!(w, "end")?;
        for a in self.params.values() {
            for v in a.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut meta = Vec::new();
        let mut manifest = Vec::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("manifest not terminated".into()));
            }
            let l = line.trim_end_matches('\n');
            if l == "end" {
                break;
            }
            if let Some(rest) = l.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                meta.push((k.to_string(), v.to_string()));
            } else if let Some(rest) = l.strip_prefix("param ") {
                let parts: Vec<&str> = rest.split(' ').collect();
                let [name, dims, dtype] = parts[..] else {
                    return Err(Error::Format(format!("bad manifest line `{l}`")));
                };
                if dtype != "f64" {
                    return Err(Error::Format(format!("unsupported dtype `{dtype}`")));
                }
                let shape: Vec<usize> = if dims == "scalar" {
                    vec![]
                } else {
                    dims.split(',')
                        .map(|d| d.parse().map_err(|_| Error::Format(format!("bad shape `{dims}`"))))
                        .collect::<Result<_>>()?
                };
                manifest.push((name.to_string(), shape));
            } else {
                return Err(Error::Format(format!("bad manifest line `{l}`")));
            }
        }
        let mut params = Params::new();
        let mut buf = [0u8; 8];
        for (name, shape) in manifest {
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut buf).map_err(|_| Error::Format(format!("payload truncated in `{name}`")))?;
                data.push(f64::from_le_bytes(buf));
            }
            params.add(name, Array::new(&shape, data)?);
        }
        Ok(Self { meta, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
