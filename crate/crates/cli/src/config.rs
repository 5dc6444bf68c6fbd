//! Run configuration: a flat sectioned key-value file plus command-line
//! overrides.
//!
//! ```text
//! # comment
//! [space]
//! preset = valley
//! k = 3.0517578125e-5
//! K = 16
//!
//! [grid]
//! nx = 128
//! nu = 32
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cdlab::defaults;
use cdlab::profiles::ProfileFn;

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    /// `(section, key) -> (value, line number)`.
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    bail!("line {}: unterminated section header", lineno + 1);
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            entries.insert(
                (section.clone(), key.trim().to_string()),
                (value.trim().to_string(), lineno + 1),
            );
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    fn get(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    pub fn string(&self, section: &str, key: &str) -> Option<String> {
        self.get(section, key).map(|(v, _)| v.clone())
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| anyhow!("line {line}: `{key}` must be a number, got `{v}`")),
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| anyhow!("line {line}: `{key}` must be a count, got `{v}`")),
        }
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| anyhow!("line {line}: `{key}` must be an integer, got `{v}`")),
        }
    }

    /// Whitespace- or comma-separated list of numbers.
    pub fn f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| anyhow!("line {line}: `{key}` has non-number `{s}`"))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    pub fn string_list(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get(section, key).map(|(v, _)| {
            v.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string())
                .collect()
        })
    }
}

/// Resolved run parameters; all fields carry their defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: String,
    pub profile_source: Option<String>,
    pub k: f64,
    pub big_k: f64,
    pub n_prime: f64,
    pub nx: usize,
    pub nu: usize,
    pub seed: u64,
    pub audit_n: usize,
    pub depth: u32,
    /// Marginal blocks in x for the verification run.
    pub src_block: (f64, f64),
    pub dst_block: (f64, f64),
    /// Fiber range of the target block.
    pub dst_u: (f64, f64),
    /// Shifts for the convergence harness (decreasing).
    pub mgh_eps: Vec<f64>,
    /// Profile scale used by the convergence harness; the shift list must
    /// stay inside the admissible height bound.
    pub mgh_k: f64,
    /// Scales for the box-counting estimate; derived from `k` by default.
    pub dimension_eps: Option<Vec<f64>>,
    /// Branching / no-map demo geometry.
    pub demo_src_range: (f64, f64),
    pub demo_dst_x: f64,
    pub demo_sources: usize,
    pub demo_targets: usize,
    pub nomap_src_xs: Vec<f64>,
    pub nomap_src_masses: Vec<f64>,
    pub restrictions: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: "valley".to_string(),
            profile_source: None,
            k: defaults::PROFILE_SCALE,
            big_k: defaults::CONCENTRATION,
            n_prime: defaults::N_PRIME,
            nx: defaults::GRID_NX,
            nu: defaults::GRID_NU,
            seed: 0,
            audit_n: defaults::AUDIT_SAMPLES,
            depth: defaults::GEODESIC_DEPTH,
            src_block: (-0.9, -0.1),
            dst_block: (0.1, 0.9),
            dst_u: (0.0, 1.0),
            mgh_eps: (4..=9).map(|j| 2f64.powi(-j)).collect(),
            mgh_k: defaults::MGH_PROFILE_SCALE,
            dimension_eps: None,
            demo_src_range: (-0.6, -0.4),
            demo_dst_x: 0.5,
            demo_sources: 5,
            demo_targets: 8,
            nomap_src_xs: vec![-0.7, -0.55, -0.4, -0.25],
            nomap_src_masses: vec![0.3, 0.3, 0.2, 0.2],
            restrictions: vec![
                "all".to_string(),
                "upper-endpoint".to_string(),
                "lower-endpoint".to_string(),
                "random-probes".to_string(),
            ],
        }
    }
}

impl RunConfig {
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(p) = file.string("space", "preset") {
            cfg.preset = p;
        }
        cfg.profile_source = file.string("space", "profile");
        if let Some(v) = file.f64("space", "k")? {
            cfg.k = v;
        }
        if let Some(v) = file.f64("space", "K")? {
            cfg.big_k = v;
        }
        if let Some(v) = file.f64("verify", "nprime")? {
            cfg.n_prime = v;
        }
        if let Some(v) = file.usize("grid", "nx")? {
            cfg.nx = v;
        }
        if let Some(v) = file.usize("grid", "nu")? {
            cfg.nu = v;
        }
        if let Some(v) = file.u64("run", "seed")? {
            cfg.seed = v;
        }
        if let Some(v) = file.usize("space", "audit-samples")? {
            cfg.audit_n = v;
        }
        if let Some(v) = file.usize("verify", "depth")? {
            cfg.depth = v as u32;
        }
        if let Some(b) = file.f64_list("verify", "src")? {
            if b.len() != 2 {
                bail!("`src` wants two numbers");
            }
            cfg.src_block = (b[0], b[1]);
        }
        if let Some(b) = file.f64_list("verify", "dst")? {
            if b.len() != 2 {
                bail!("`dst` wants two numbers");
            }
            cfg.dst_block = (b[0], b[1]);
        }
        if let Some(b) = file.f64_list("verify", "dst-u")? {
            if b.len() != 2 {
                bail!("`dst-u` wants two numbers");
            }
            cfg.dst_u = (b[0], b[1]);
        }
        if let Some(v) = file.f64_list("mgh", "eps")? {
            cfg.mgh_eps = v;
        }
        if let Some(v) = file.f64("mgh", "k")? {
            cfg.mgh_k = v;
        }
        cfg.dimension_eps = file.f64_list("dimension", "eps")?;
        if let Some(b) = file.f64_list("counterexample", "src-range")? {
            if b.len() != 2 {
                bail!("`src-range` wants two numbers");
            }
            cfg.demo_src_range = (b[0], b[1]);
        }
        if let Some(v) = file.f64("counterexample", "dst-x")? {
            cfg.demo_dst_x = v;
        }
        if let Some(v) = file.usize("counterexample", "sources")? {
            cfg.demo_sources = v;
        }
        if let Some(v) = file.usize("counterexample", "targets")? {
            cfg.demo_targets = v;
        }
        if let Some(v) = file.f64_list("counterexample", "nomap-src-x")? {
            cfg.nomap_src_xs = v;
        }
        if let Some(v) = file.f64_list("counterexample", "nomap-src-mass")? {
            cfg.nomap_src_masses = v;
        }
        if let Some(v) = file.string_list("counterexample", "restrictions") {
            cfg.restrictions = v;
        }
        Ok(cfg)
    }

    /// Compile the configured profile at the configured scale.
    pub fn profile(&self) -> Result<ProfileFn> {
        if let Some(src) = &self.profile_source {
            return ProfileFn::parse_with_k(src, self.k)
                .map_err(|e| anyhow!("profile expression: {e}"));
        }
        ProfileFn::preset(&self.preset, self.k)
            .ok_or_else(|| anyhow!("unknown preset `{}`", self.preset))
    }

    /// Flat echo of the effective configuration for the report.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("preset", self.preset.clone());
        if let Some(src) = &self.profile_source {
            put("profile", src.clone());
        }
        put("k", format!("{}", self.k));
        put("K", format!("{}", self.big_k));
        put("nprime", format!("{}", self.n_prime));
        put("nx", format!("{}", self.nx));
        put("nu", format!("{}", self.nu));
        put("seed", format!("{}", self.seed));
        put("depth", format!("{}", self.depth));
        put(
            "src",
            format!("{} {}", self.src_block.0, self.src_block.1),
        );
        put(
            "dst",
            format!("{} {}", self.dst_block.0, self.dst_block.1),
        );
        put("dst-u", format!("{} {}", self.dst_u.0, self.dst_u.1));
        let mut eps = String::new();
        for e in &self.mgh_eps {
            let _ = write!(eps, "{e} ");
        }
        put("mgh-eps", eps.trim().to_string());
        put("mgh-k", format!("{}", self.mgh_k));
        put("restrictions", self.restrictions.join(","));
        map
    }
}
