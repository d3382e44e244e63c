//! Scene configuration: a `[cost]` block in the cost expression text form,
//! followed by flat `key = value` sections.
//!
//! ```text
//! [cost]
//! (ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))
//!
//! [grid]
//! lower = -12        ; one value for every axis, or one per axis
//! upper = 16
//! points = 256
//!
//! [density]
//! family = gamma-product
//! shapes = 2 2
//! rates = 1 1
//!
//! [kernel]
//! kind = two-exponential
//!
//! [plane]
//! c = 0.9 0.9
//! r = inf
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::ScanSettings;
use crate::error::{Error, Result};
use crate::inversion::{InversionOptions, DEFAULT_EPSILON};
use crate::mellin_engine::{GridAxis, GridFunction, KernelSpec, LogGrid};
use crate::transforms::{NormOrder, Synthetic};
use crate::CostExpr;

const SECTIONS: [&str; 7] = ["cost", "grid", "density", "kernel", "plane", "inversion", "diagnose"];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DensitySource {
    Synthetic(Synthetic),
    Csv { path: PathBuf },
}

impl DensitySource {
    /// Samples on `grid`; a CSV density must carry exactly that grid.
    pub fn load(&self, grid: &LogGrid) -> Result<GridFunction> {
        match self {
            DensitySource::Synthetic(s) => s.sample(grid.clone()),
            DensitySource::Csv { path } => {
                let f = read_grid_csv(path)?;
                if f.grid() != grid {
                    return Err(Error::Shape(format!(
                        "density file {} does not carry the configured grid",
                        path.display()
                    )));
                }
                Ok(f)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Exponential,
    TwoExponential,
    Profit,
}

#[derive(Clone, Debug)]
pub struct SceneConfig {
    pub cost: CostExpr,
    pub grid: Option<LogGrid>,
    pub density: Option<DensitySource>,
    pub kernel: Option<KernelChoice>,
    pub p0: f64,
    pub c: Vec<f64>,
    pub r: NormOrder,
    pub inversion: InversionOptions,
    /// Data file for `invert`.
    pub data: Option<PathBuf>,
    pub scan: ScanSettings,
    pub heatmap: Option<PathBuf>,
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw = split_sections(text)?;
        let (cost_text, cost_line) = raw
            .cost
            .ok_or_else(|| Error::parse(1, 1, "missing [cost] section"))?;
        let cost = CostExpr::parse(&cost_text).map_err(|e| shift_lines(e, cost_line))?;
        let dim = cost.dim();
        let mut s = Sections { map: raw.map, dim };

        let grid = if s.has("grid") {
            let lower = s.vec_or_scalar("grid", "lower")?;
            let upper = s.vec_or_scalar("grid", "upper")?;
            let points = s.usize("grid", "points")?;
            let axes = lower
                .iter()
                .zip(&upper)
                .map(|(lo, hi)| GridAxis::spanning(*lo, *hi, points))
                .collect::<Result<Vec<_>>>()?;
            Some(LogGrid::new(axes)?)
        } else {
            None
        };

        let density = if s.has("density") {
            if let Some(p) = s.take_str("density", "path") {
                Some(DensitySource::Csv { path: base.join(p.0) })
            } else {
                let (family, line) = s.require_str("density", "family")?;
                let syn = match family.as_str() {
                    "gamma-product" => Synthetic::GammaProduct {
                        shapes: s.vec_or_scalar("density", "shapes")?,
                        rates: s.vec_or_scalar("density", "rates")?,
                    },
                    "lognormal-bump" => Synthetic::LognormalBump {
                        mu: s.vec_or_scalar("density", "mu")?,
                        sigma: s.vec_or_scalar("density", "sigma")?,
                    },
                    "power-times-exponential" => Synthetic::PowerTimesExponential {
                        powers: s.vec_or_scalar("density", "powers")?,
                    },
                    other => {
                        return Err(Error::parse(
                            line,
                            1,
                            format!("unknown density family {other:?}; expected gamma-product, lognormal-bump or power-times-exponential"),
                        ))
                    }
                };
                syn.validate()?;
                Some(DensitySource::Synthetic(syn))
            }
        } else {
            None
        };

        let kernel = match s.take_str("kernel", "kind") {
            None => None,
            Some((k, line)) => Some(match k.as_str() {
                "exponential" => KernelChoice::Exponential,
                "two-exponential" => KernelChoice::TwoExponential,
                "profit" => KernelChoice::Profit,
                other => {
                    return Err(Error::parse(
                        line,
                        1,
                        format!("unknown kernel {other:?}; expected exponential, two-exponential or profit"),
                    ))
                }
            }),
        };
        let p0 = s.f64_or("kernel", "p0", 1.0)?;
        if !(p0.is_finite() && p0 > 0.0) {
            return Err(Error::Domain(format!("p0 must be positive, got {p0}")));
        }

        let c = if s.present("plane", "c") { s.vec_or_scalar("plane", "c")? } else { vec![0.5; dim] };
        let r = match s.take_str("plane", "r") {
            None => NormOrder::Infinity,
            Some((t, line)) => NormOrder::parse(&t).map_err(|e| Error::parse(line, 1, e.to_string()))?,
        };

        let inversion = InversionOptions {
            c: c.clone(),
            epsilon: s.f64_or("inversion", "epsilon", DEFAULT_EPSILON)?,
            taper: s.bool_or("inversion", "taper", false)?,
            cutoff: if s.present("inversion", "cutoff") { Some(s.f64("inversion", "cutoff")?) } else { None },
        };
        inversion.validate()?;
        let data = s.take_str("inversion", "data").map(|(p, _)| base.join(p));

        let defaults = ScanSettings::default();
        let scan = ScanSettings {
            radius: s.f64_or("diagnose", "radius", defaults.radius)?,
            resolution: s.usize_or("diagnose", "resolution", defaults.resolution)?,
            kernel_radius: s.f64_or("diagnose", "kernel_radius", defaults.kernel_radius)?,
            kernel_resolution: s.usize_or("diagnose", "kernel_resolution", defaults.kernel_resolution)?,
        };
        let heatmap = s.take_str("diagnose", "heatmap").map(|(p, _)| base.join(p));

        s.reject_leftovers()?;
        if let Some(DensitySource::Synthetic(syn)) = &density {
            if syn.dim() != dim {
                return Err(Error::Shape(format!(
                    "density has {} coordinates but the cost has {dim}",
                    syn.dim()
                )));
            }
        }
        Ok(Self {
            cost,
            grid,
            density,
            kernel,
            p0,
            c,
            r,
            inversion,
            data,
            scan,
            heatmap,
        })
    }

    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    pub fn require_grid(&self) -> Result<&LogGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Argument("config has no [grid] section".into()))
    }

    pub fn require_density(&self) -> Result<&DensitySource> {
        self.density
            .as_ref()
            .ok_or_else(|| Error::Argument("config has no [density] section".into()))
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.kernel {
            Some(KernelChoice::Exponential) => Ok(KernelSpec::Exponential),
            Some(KernelChoice::TwoExponential) => Ok(KernelSpec::two_exponential()),
            Some(KernelChoice::Profit) => Ok(KernelSpec::Profit { p0: self.p0 }),
            None => Err(Error::Argument("mode kernel needs [kernel] kind".into())),
        }
    }
}

pub fn read_grid_csv(path: &Path) -> Result<GridFunction> {
    let file = std::fs::File::open(path)?;
    GridFunction::read_csv(std::io::BufReader::new(file))
}

fn shift_lines(e: Error, offset: usize) -> Error {
    match e {
        Error::Parse { line, column, message } => Error::Parse {
            line: line + offset,
            column,
            message,
        },
        other => other,
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find([';', '#']).unwrap_or(line.len());
    &line[..cut]
}

/// `(value, line)` keyed by `(section, key)`.
type Entries = BTreeMap<(String, String), (String, usize)>;

struct RawSections {
    /// Cost text and the number of lines preceding it.
    cost: Option<(String, usize)>,
    map: Entries,
    seen: Vec<String>,
}

fn split_sections(text: &str) -> Result<RawSections> {
    let mut raw = RawSections {
        cost: None,
        map: BTreeMap::new(),
        seen: Vec::new(),
    };
    let mut current: Option<String> = None;
    let mut cost_lines: Vec<&str> = Vec::new();
    let mut cost_start = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let t = line.trim();
        if t.starts_with('[') {
            let body = strip_comment(t).trim();
            let name = body
                .strip_prefix('[')
                .and_then(|b| b.strip_suffix(']'))
                .ok_or_else(|| Error::parse(lineno, 1, "malformed section header"))?
                .trim()
                .to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(Error::parse(lineno, 2, format!("unknown section [{name}]")));
            }
            if raw.seen.contains(&name) {
                return Err(Error::parse(lineno, 2, format!("section [{name}] appears twice")));
            }
            if name == "cost" {
                cost_start = lineno;
            }
            raw.seen.push(name.clone());
            current = Some(name);
            continue;
        }
        match current.as_deref() {
            Some("cost") => cost_lines.push(line),
            Some(section) => {
                let body = strip_comment(line);
                if body.trim().is_empty() {
                    continue;
                }
                let (k, v) = body
                    .split_once('=')
                    .ok_or_else(|| Error::parse(lineno, 1, "expected 'key = value'"))?;
                let key = (section.to_string(), k.trim().to_string());
                if raw.map.contains_key(&key) {
                    return Err(Error::parse(lineno, 1, format!("key {:?} repeated in [{section}]", key.1)));
                }
                raw.map.insert(key, (v.trim().to_string(), lineno));
            }
            None => {
                if !strip_comment(t).trim().is_empty() {
                    return Err(Error::parse(lineno, 1, "content before the first section"));
                }
            }
        }
    }
    if raw.seen.iter().any(|s| s == "cost") {
        raw.cost = Some((cost_lines.join("\n"), cost_start));
    }
    Ok(raw)
}

struct Sections {
    map: Entries,
    dim: usize,
}

impl Sections {
    fn has(&self, section: &str) -> bool {
        self.map.keys().any(|(s, _)| s == section)
    }

    fn present(&self, section: &str, key: &str) -> bool {
        self.map.contains_key(&(section.to_string(), key.to_string()))
    }

    fn take_str(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.map.remove(&(section.to_string(), key.to_string()))
    }

    fn require_str(&mut self, section: &str, key: &str) -> Result<(String, usize)> {
        self.take_str(section, key)
            .ok_or_else(|| Error::Argument(format!("[{section}] needs key {key:?}")))
    }

    fn f64(&mut self, section: &str, key: &str) -> Result<f64> {
        let (v, line) = self.require_str(section, key)?;
        v.parse()
            .map_err(|_| Error::parse(line, 1, format!("{key}: expected a number, got {v:?}")))
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> Result<f64> {
        if self.present(section, key) { self.f64(section, key) } else { Ok(default) }
    }

    fn usize(&mut self, section: &str, key: &str) -> Result<usize> {
        let (v, line) = self.require_str(section, key)?;
        v.parse()
            .map_err(|_| Error::parse(line, 1, format!("{key}: expected a count, got {v:?}")))
    }

    fn usize_or(&mut self, section: &str, key: &str, default: usize) -> Result<usize> {
        if self.present(section, key) { self.usize(section, key) } else { Ok(default) }
    }

    fn bool_or(&mut self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.take_str(section, key) {
            None => Ok(default),
            Some((v, line)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::parse(line, 1, format!("{key}: expected true or false, got {v:?}"))),
            },
        }
    }

    /// One value broadcast to every axis, or exactly one per axis.
    fn vec_or_scalar(&mut self, section: &str, key: &str) -> Result<Vec<f64>> {
        let (v, line) = self.require_str(section, key)?;
        let vals = v
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse(line, 1, format!("{key}: expected numbers, got {v:?}")))?;
        match vals.len() {
            1 => Ok(vec![vals[0]; self.dim]),
            n if n == self.dim => Ok(vals),
            n => Err(Error::parse(
                line,
                1,
                format!("{key}: {n} values given but the cost has {} coordinates", self.dim),
            )),
        }
    }

    fn reject_leftovers(&self) -> Result<()> {
        match self.map.iter().next() {
            None => Ok(()),
            Some(((section, key), (_, line))) => {
                Err(Error::parse(*line, 1, format!("unknown key {key:?} in [{section}]")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = "\
; demo scene
[cost]
(ces :alpha 0.5 :C 1 :a (0.5 0.5)
  (axis 1) (axis 2))

[grid]
lower = -12
upper = 16 16
points = 64

[density]
family = gamma-product
shapes = 2
rates = 1 1.5

[plane]
c = 0.9
r = 2
";

    fn parse(text: &str) -> Result<SceneConfig> {
        SceneConfig::parse(text, Path::new("/base"))
    }

    #[test]
    fn parses_full_scene() {
        let cfg = parse(SCENE).unwrap();
        assert_eq!(cfg.dim(), 2);
        assert_eq!(cfg.require_grid().unwrap().shape(), vec![64, 64]);
        assert_eq!(cfg.c, vec![0.9, 0.9]);
        assert_eq!(cfg.inversion.c, vec![0.9, 0.9]);
        assert_eq!(cfg.r, NormOrder::Two);
        assert_eq!(
            cfg.density,
            Some(DensitySource::Synthetic(Synthetic::GammaProduct {
                shapes: vec![2.0, 2.0],
                rates: vec![1.0, 1.5]
            }))
        );
        assert!(cfg.kernel.is_none());
    }

    #[test]
    fn defaults_to_self_dual_plane() {
        let cfg = parse("[cost]\n(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n").unwrap();
        assert_eq!(cfg.c, vec![0.5, 0.5]);
        assert_eq!(cfg.r, NormOrder::Infinity);
        assert!(cfg.grid.is_none());
    }

    #[test]
    fn alpha_rule_reported_at_file_line() {
        let text = "[grid]\nlower = 0\nupper = 1\npoints = 8\n[cost]\n(ces :alpha 1.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n";
        match parse(text).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 6);
                assert!(message.contains("(0, 1]"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_axis_rejected() {
        let err = parse("[cost]\n(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 1))\n").unwrap_err();
        assert!(err.to_string().contains("more than once"), "{err}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let text = SCENE.replace("c = 0.9", "c = 0.9 0.9 0.9");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("3 values"), "{err}");
    }

    #[test]
    fn unknown_key_and_section_rejected() {
        let err = parse(&format!("{SCENE}colour = red\n")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err = parse(&format!("{SCENE}[extras]\n")).unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{err}");
    }

    #[test]
    fn csv_density_path_is_relative_to_config() {
        let text = "[cost]\n(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n[density]\npath = f.csv\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.density, Some(DensitySource::Csv { path: PathBuf::from("/base/f.csv") }));
    }

    #[test]
    fn kernel_choices() {
        let text = "[cost]\n(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n[kernel]\nkind = profit\np0 = 2\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.kernel_spec().unwrap(), KernelSpec::Profit { p0: 2.0 });
        let bad = text.replace("profit", "boxcar");
        assert!(parse(&bad).unwrap_err().to_string().contains("boxcar"));
    }
}
