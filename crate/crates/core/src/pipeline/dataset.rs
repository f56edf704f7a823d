//! Offline datasets of irregularly sampled trajectories.
//!
//! Binary layout: a text header of `key = value` lines terminated by `end`,
//! then one fixed-width record per sample, `(k, t, x…, a…)`, every field a
//! little-endian `f64`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::envs::{EnvKind, EnvSpec, Sampling};
use crate::error::{Error, Result};

const MAGIC: &str = "laplace-control dataset v1";

/// One observation record.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub trajectory: u64,
    pub t: f64,
    pub x: Vec<f64>,
    pub a: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub env: EnvKind,
    pub tau: f64,
    pub delta_bar: f64,
    pub omega: f64,
    pub seed: u64,
    /// Standard deviation of the expert's action noise, as a multiple of `a_max`.
    pub action_noise_scale: f64,
    pub obs_noise_std: f64,
    pub sampling: Sampling,
    pub state_dim: usize,
    pub action_dim: usize,
    /// Representation of the physical zero action in this dataset's units.
    pub zero_action: Vec<f64>,
}

impl DatasetManifest {
    pub fn for_spec(spec: &EnvSpec, seed: u64, action_noise_scale: f64, sampling: Sampling) -> Self {
        Self {
            env: spec.kind(),
            tau: spec.tau,
            delta_bar: spec.delta_bar,
            omega: spec.omega,
            seed,
            action_noise_scale,
            obs_noise_std: spec.obs_noise_std,
            sampling,
            state_dim: spec.obs_dim(),
            action_dim: spec.action_dim(),
            zero_action: vec![0.0; spec.action_dim()],
        }
    }

    /// Environment constants the data were collected under.
    pub fn env_spec(&self) -> EnvSpec {
        let mut s = EnvSpec::new(self.env);
        s.tau = self.tau;
        s.delta_bar = self.delta_bar;
        s.omega = self.omega;
        s.obs_noise_std = self.obs_noise_std;
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<TrajectorySample>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

impl Dataset {
    pub fn new(manifest: DatasetManifest) -> Self {
        Self { manifest, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records grouped by trajectory, in file order.
    pub fn trajectories(&self) -> Vec<&[TrajectorySample]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.records.len() {
            if i == self.records.len() || self.records[i].trajectory != self.records[start].trajectory {
                if i > start {
                    out.push(&self.records[start..i]);
                }
                start = i;
            }
        }
        out
    }

    /// Checks per-trajectory time ordering and record widths.
    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        for r in &self.records {
            if r.x.len() != m.state_dim || r.a.len() != m.action_dim {
                return Err(Error::Format(format!("record width mismatch in trajectory {}", r.trajectory)));
            }
        }
        for tr in self.trajectories() {
            if tr.windows(2).any(|w| !(w[1].t > w[0].t)) {
                return Err(Error::Format(format!("times not strictly increasing in trajectory {}", tr[0].trajectory)));
            }
        }
        Ok(())
    }

    fn header(&self) -> Vec<(String, String)> {
        let m = &self.manifest;
        vec![
            ("env".into(), m.env.name().into()),
            ("tau".into(), fmt_f(m.tau)),
            ("delta_bar".into(), fmt_f(m.delta_bar)),
            ("omega".into(), fmt_f(m.omega)),
            ("count".into(), self.records.len().to_string()),
            ("seed".into(), m.seed.to_string()),
            ("action_noise".into(), format!("std {}", fmt_f(m.action_noise_scale))),
            ("obs_noise_std".into(), fmt_f(m.obs_noise_std)),
            ("sampling".into(), match m.sampling {
                Sampling::Irregular => "irregular".into(),
                Sampling::Regular => "regular".into(),
            }),
            ("state_dim".into(), m.state_dim.to_string()),
            ("action_dim".into(), m.action_dim.to_string()),
            ("zero_action".into(), m.zero_action.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(" ")),
        ]
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        for (k, v) in self.header() {
            writeln!(w, "{k} = {v}")?;
        }
        writeln!(w, "end")?;
        for r in &self.records {
            w.write_all(&(r.trajectory as f64).to_le_bytes())?;
            w.write_all(&r.t.to_le_bytes())?;
            for v in r.x.iter().chain(&r.a) {
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
            return Err(Error::Format("not a dataset file".into()));
        }
        let mut kv = std::collections::HashMap::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("dataset header not terminated".into()));
            }
            let l = line.trim_end();
            if l == "end" {
                break;
            }
            let (k, v) = l.split_once(" = ").ok_or_else(|| Error::Format(format!("bad header line `{l}`")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| kv.get(k).cloned().ok_or_else(|| Error::Format(format!("dataset header lacks `{k}`")));
        let f = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Format(format!("bad `{k}`"))) };
        let u = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| Error::Format(format!("bad `{k}`"))) };
        let noise = get("action_noise")?;
        let noise_scale = noise
            .strip_prefix("std ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad action_noise `{noise}`")))?;
        let manifest = DatasetManifest {
            env: get("env")?.parse()?,
            tau: f("tau")?,
            delta_bar: f("delta_bar")?,
            omega: f("omega")?,
            seed: u("seed")?,
            action_noise_scale: noise_scale,
            obs_noise_std: f("obs_noise_std")?,
            sampling: match get("sampling")?.as_str() {
                "irregular" => Sampling::Irregular,
                "regular" => Sampling::Regular,
                s => return Err(Error::Format(format!("unknown sampling `{s}`"))),
            },
            state_dim: u("state_dim")? as usize,
            action_dim: u("action_dim")? as usize,
            zero_action: get("zero_action")?
                .split(' ')
                .map(|v| v.parse().map_err(|_| Error::Format("bad zero_action".into())))
                .collect::<Result<_>>()?,
        };
        let count = u("count")? as usize;
        let width = 2 + manifest.state_dim + manifest.action_dim;
        let mut buf = vec![0u8; width * 8];
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf).map_err(|_| Error::Format("dataset payload truncated".into()))?;
            let v: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            records.push(TrajectorySample {
                trajectory: v[0] as u64,
                t: v[1],
                x: v[2..2 + manifest.state_dim].to_vec(),
                a: v[2 + manifest.state_dim..].to_vec(),
            });
        }
        let d = Self { manifest, records };
        d.validate()?;
        Ok(d)
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

    /// Comma-separated export, one record per line after `#`-prefixed header lines.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in self.header() {
            writeln!(w, "# {k} = {v}")?;
        }
        let m = &self.manifest;
        let mut cols = vec!["k".to_string(), "t".to_string()];
        cols.extend((0..m.state_dim).map(|i| format!("x{i}")));
        cols.extend((0..m.action_dim).map(|i| format!("a{i}")));
        writeln!(w, "{}", cols.join(","))?;
        for r in &self.records {
            let mut f = vec![r.trajectory.to_string(), format!("{:.17e}", r.t)];
            f.extend(r.x.iter().chain(&r.a).map(|v| format!("{v:.17e}")));
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }
}
