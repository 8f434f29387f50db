//! Run configuration: TOML sections with defaults for every parameter,
//! patched by `section.key=value` overrides before typing.
//!
//! ```toml
//! seed = 0
//!
//! [synth]
//! curve_count = [80, 150]
//!
//! [detect]
//! variant = "black"
//! se = "disk2"
//!
//! [inpaint]
//! method = "ad"
//!
//! [refine]
//! provider = "passthrough"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inpaint::{DiffusionConfig, FillMethod};
use crate::morph::{DetectorConfig, StructuringElement, Variant};
use crate::synth::CrackSpec;

/// Structuring element as named in config files: `square3` or `disk<r>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeName {
    Square3,
    Disk(usize),
}

impl SeName {
    pub fn build(self) -> StructuringElement {
        match self {
            SeName::Square3 => StructuringElement::square3(),
            SeName::Disk(2) => StructuringElement::disk2(),
            SeName::Disk(r) => StructuringElement::disk(r),
        }
    }
}

impl FromStr for SeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "square3" {
            return Ok(SeName::Square3);
        }
        match s.strip_prefix("disk").map(str::parse::<usize>) {
            Some(Ok(r)) if r >= 1 => Ok(SeName::Disk(r)),
            _ => {
                Err(Error::Config(format!("unknown structuring element '{s}' (expected square3 or disk<r>)")))
            }
        }
    }
}

impl fmt::Display for SeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeName::Square3 => f.write_str("square3"),
            SeName::Disk(r) => write!(f, "disk{r}"),
        }
    }
}

impl Serialize for SeName {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    pub variant: Variant,
    pub se: SeName,
    pub threshold: u8,
    pub dilation_iters: usize,
    pub min_component: usize,
}

impl Default for DetectSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            variant: d.variant,
            se: SeName::Disk(2),
            threshold: d.threshold,
            dilation_iters: d.dilation_iters,
            min_component: d.min_component,
        }
    }
}

impl DetectSection {
    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            variant: self.variant,
            se: self.se.build(),
            threshold: self.threshold,
            dilation_iters: self.dilation_iters,
            min_component: self.min_component,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InpaintSection {
    pub method: FillMethod,
    pub lambda: f64,
    pub kappa: f64,
    pub iterations: usize,
    /// Wall-clock budget per image; exceeding it only logs a warning.
    pub budget_secs: f64,
}

impl Default for InpaintSection {
    fn default() -> Self {
        let d = DiffusionConfig::default();
        Self {
            method: FillMethod::Ad,
            lambda: d.lambda,
            kappa: d.kappa,
            iterations: d.iterations,
            budget_secs: 30.0,
        }
    }
}

impl InpaintSection {
    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig { lambda: self.lambda, kappa: self.kappa, iterations: self.iterations }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    /// The detector mask is used unchanged.
    #[default]
    Passthrough,
    /// An external command writes the refined mask.
    External,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    pub provider: Provider,
    /// Argument template for the external provider. Whitespace separates
    /// arguments; `{image}`, `{mask}` and `{out}` are replaced by paths.
    pub command: String,
}

/// Settings for `generate` when no source scans are given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    /// Procedural paintings to render; 0 means read source images.
    pub procedural: usize,
    /// `[width, height]` of procedural paintings before resizing.
    pub source_size: [usize; 2],
}

impl Default for GenerateSection {
    fn default() -> Self {
        Self { procedural: 0, source_size: [1794, 1125] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; per-image seeds are derived from it.
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads for batch commands; 0 uses all cores.
    pub jobs: usize,
    pub generate: GenerateSection,
    pub synth: CrackSpec,
    pub detect: DetectSection,
    pub inpaint: InpaintSection,
    pub refine: RefineSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            jobs: 0,
            generate: GenerateSection::default(),
            synth: CrackSpec::default(),
            detect: DetectSection::default(),
            inpaint: InpaintSection::default(),
            refine: RefineSection::default(),
        }
    }
}

/// Parses an override value as a TOML value, falling back to a bare string
/// so `detect.variant=both` needs no quoting.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let (last, parents) = path.split_last().expect("split yields one item");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{p}' in '{key}' is not a section")))?;
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Builds a config from optional TOML text plus overrides, applied in
    /// order so later ones win.
    pub fn from_toml_with(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = match text {
            Some(t) => toml::from_str(t).map_err(|e| Error::Config(e.to_string()))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path` if given, then applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
            None => None,
        };
        Self::from_toml_with(text.as_deref(), overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.inpaint.diffusion().validate()?;
        if self.refine.provider == Provider::External && self.refine.command.trim().is_empty() {
            return Err(Error::Config("refine.provider = external needs refine.command".into()));
        }
        if self.generate.source_size.contains(&0) {
            return Err(Error::Config("generate.source_size must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical TOML dump, truncated to 16 digits.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults_and_round_trips() {
        let cfg = RunConfig::from_toml_with(None, &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        let again = RunConfig::from_toml_with(Some(&cfg.to_toml()), &[]).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn overrides_win_over_file() {
        let text = "seed = 3\n[detect]\nthreshold = 150\nvariant = \"white\"\n";
        let cfg = RunConfig::from_toml_with(
            Some(text),
            &["detect.threshold=170".into(), "detect.variant=both".into(), "synth.curve_count=[1, 2]".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.detect.threshold, 170);
        assert_eq!(cfg.detect.variant, Variant::Both);
        assert_eq!((cfg.synth.curve_count.low, cfg.synth.curve_count.high), (1, 2));
        assert_eq!(cfg.synth.taper_alpha, 2.0);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(RunConfig::from_toml_with(Some("[detect]\nbogus = 1\n"), &[]).is_err());
        assert!(RunConfig::from_toml_with(None, &["detect.se=hexagon".into()]).is_err());
        assert!(RunConfig::from_toml_with(None, &["inpaint.lambda=0.3".into()]).is_err());
        assert!(RunConfig::from_toml_with(None, &["refine.provider=external".into()]).is_err());
        assert!(RunConfig::from_toml_with(None, &["noequals".into()]).is_err());
        assert!(RunConfig::from_toml_with(None, &["seed.x=1".into()]).is_err());
    }

    #[test]
    fn se_names() {
        assert_eq!("disk2".parse::<SeName>().unwrap().build(), StructuringElement::disk2());
        assert_eq!("square3".parse::<SeName>().unwrap().build(), StructuringElement::square3());
        assert_eq!("disk3".parse::<SeName>().unwrap().build().width(), 7);
        assert!("disk0".parse::<SeName>().is_err());
        assert_eq!(SeName::Disk(4).to_string(), "disk4");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.detect.threshold = 181;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
