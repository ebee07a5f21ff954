//! Run configuration: command-line flags over the cost preset over a
//! `key = value` file over built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use encrep_core::channels::{NoiseParams, SourceParams};
use encrep_core::rates::{nesting_from_stations, LinkParams, NestingRange, SwapExponent, T0Mode};

/// Values installed by `--paper-fig8-defaults`.
pub const PRESET_FIDELITY: f64 = 0.99995;
pub const PRESET_GATE_QUALITY: f64 = 0.9999;
pub const PRESET_T0: f64 = 1.0;

/// Every key accepted in a config file, with its built-in default.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("distance", Some("600")),
    ("fidelity", Some("0.995")),
    ("gate-quality", Some("0.998")),
    ("beta", None),
    ("nesting", None),
    ("stations", None),
    ("optimize", None),
    ("min-nesting", Some("1")),
    ("max-nesting", Some("10")),
    ("alpha", Some("0.17")),
    ("speed", Some("200000")),
    ("t0", Some("physical")),
    ("swap-exponent", Some("stations")),
    ("paper-fig8-defaults", Some("false")),
    ("output", None),
    ("seed", Some("42")),
    ("trials", Some("1000000")),
    ("distance-min", Some("100")),
    ("distance-max", Some("2000")),
    ("distance-step", Some("100")),
    ("fidelity-min", Some("0.95")),
    ("fidelity-max", Some("1")),
    ("fidelity-step", Some("0.005")),
    ("gate-quality-min", Some("0.98")),
    ("gate-quality-max", Some("1")),
    ("gate-quality-step", Some("0.002")),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    CommandLine,
    Preset,
    File(PathBuf),
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::CommandLine => write!(f, "command line"),
            Source::Preset => write!(f, "--paper-fig8-defaults"),
            Source::File(p) => write!(f, "config file {}", p.display()),
            Source::Default => write!(f, "default"),
        }
    }
}

pub type Layer = BTreeMap<String, String>;

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

/// Parses a `key = value` file; `#` starts a comment.
pub fn parse_config_text(text: &str, origin: &Path) -> Result<Layer> {
    let mut layer = Layer::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            anyhow!("{}:{}: expected `key = value`, got `{line}`", origin.display(), i + 1)
        })?;
        let key = normalize_key(key);
        if !KEYS.iter().any(|(k, _)| *k == key) {
            bail!("{}:{}: unknown key `{key}`", origin.display(), i + 1);
        }
        layer.insert(key, value.trim().to_string());
    }
    Ok(layer)
}

pub fn load_config_file(path: &Path) -> Result<Layer> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config_text(&text, path)
}

fn defaults() -> Layer {
    KEYS.iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v.to_string())))
        .collect()
}

fn preset() -> Layer {
    [
        ("fidelity", PRESET_FIDELITY.to_string()),
        ("gate-quality", PRESET_GATE_QUALITY.to_string()),
        ("t0", PRESET_T0.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Ordered layers, highest precedence first.
pub struct Layers {
    layers: Vec<(Source, Layer)>,
}

impl Layers {
    /// Builds the stack; the preset is enabled from the command line or the file.
    pub fn new(cli: Layer, file: Option<(PathBuf, Layer)>) -> Result<Self> {
        let mut layers = vec![(Source::CommandLine, cli)];
        let file = file.map(|(p, l)| (Source::File(p), l));
        let probe = Layers {
            layers: layers
                .iter()
                .cloned()
                .chain(file.iter().cloned())
                .chain([(Source::Default, defaults())])
                .collect(),
        };
        if probe.parse::<bool>("paper-fig8-defaults")? {
            layers.push((Source::Preset, preset()));
        }
        layers.extend(file);
        layers.push((Source::Default, defaults()));
        Ok(Layers { layers })
    }

    fn lookup(&self, key: &str) -> Option<(&str, &Source)> {
        self.layers
            .iter()
            .find_map(|(src, l)| l.get(key).map(|v| (v.as_str(), src)))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let (v, src) = self
            .lookup(key)
            .ok_or_else(|| anyhow!("missing value for `{key}`"))?;
        v.parse::<T>()
            .map_err(|e| anyhow!("invalid value `{v}` for `{key}` ({src}): {e}"))
    }

    fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.lookup(key) {
            Some(_) => self.parse(key).map(Some),
            None => Ok(None),
        }
    }

    /// The highest layer mentioning any key of a mutually exclusive group, and the keys it sets.
    fn group(&self, keys: &[&str]) -> Result<Option<String>> {
        for (src, layer) in &self.layers {
            let set: Vec<&str> = keys.iter().copied().filter(|k| layer.contains_key(*k)).collect();
            match set.len() {
                0 => continue,
                1 => return Ok(Some(set[0].to_string())),
                _ => bail!("conflicting keys {} set together ({src})", set.join(", ")),
            }
        }
        Ok(None)
    }

    fn source(&self, key: &str) -> String {
        self.lookup(key).map(|(_, s)| s.to_string()).unwrap_or_default()
    }
}

/// Inclusive scan grid `min, min + step, ..., <= max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(name: &str, min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            bail!("{name}: grid bounds must be finite");
        }
        if step <= 0.0 {
            bail!("{name}-step must be > 0, got {step}");
        }
        if max < min {
            bail!("{name}: empty range, max {max} < min {min}");
        }
        Ok(Grid { min, max, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// How the nesting level is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NestingChoice {
    Fixed(u32),
    Optimize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub beta: f64,
    pub fidelity: f64,
    pub distance_km: f64,
    pub nesting: NestingChoice,
    pub range: NestingRange,
    pub link: LinkParams,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub trials: u64,
    pub distances: Grid,
    pub fidelities: Grid,
    pub gate_qualities: Grid,
}

impl RunConfig {
    pub fn gate_quality(&self) -> f64 {
        1.0 - self.beta
    }

    /// Nesting range honoring a fixed `--nesting`.
    pub fn effective_range(&self) -> Result<NestingRange> {
        match self.nesting {
            NestingChoice::Fixed(n) => Ok(NestingRange::new(n, n)?),
            NestingChoice::Optimize => Ok(self.range),
        }
    }

    /// Resolves and validates every field.
    pub fn resolve(layers: &Layers) -> Result<Self> {
        let field = |key: &str, e: encrep_core::Error| anyhow!("{key} ({}): {e}", layers.source(key));

        let beta = match layers.group(&["beta", "gate-quality"])?.as_deref() {
            Some("beta") => {
                let b: f64 = layers.parse("beta")?;
                NoiseParams::new(b).map_err(|e| field("beta", e))?.beta()
            }
            _ => {
                let g: f64 = layers.parse("gate-quality")?;
                NoiseParams::from_gate_quality(g)
                    .map_err(|e| field("gate-quality", e))?
                    .beta()
            }
        };
        let fidelity: f64 = layers.parse("fidelity")?;
        SourceParams::new(fidelity).map_err(|e| field("fidelity", e))?;

        let distance_km: f64 = layers.parse("distance")?;
        if !(distance_km.is_finite() && distance_km > 0.0) {
            bail!("distance ({}): must be a positive number of km, got {distance_km}", layers.source("distance"));
        }

        let nesting = match layers.group(&["nesting", "stations", "optimize"])?.as_deref() {
            Some("nesting") => NestingChoice::Fixed(layers.parse("nesting")?),
            Some("stations") => {
                let r: u64 = layers.parse("stations")?;
                NestingChoice::Fixed(nesting_from_stations(r).map_err(|e| field("stations", e))?)
            }
            Some(_) if !layers.parse::<bool>("optimize")? => {
                bail!("optimize = false requires `nesting` or `stations`")
            }
            _ => NestingChoice::Optimize,
        };
        let range = NestingRange::new(layers.parse("min-nesting")?, layers.parse("max-nesting")?)
            .map_err(|e| field("max-nesting", e))?;
        if let NestingChoice::Fixed(n) = nesting {
            NestingRange::new(n, n).map_err(|e| field("nesting", e))?;
        }

        let t0 = match layers.parse::<String>("t0")?.to_ascii_lowercase().as_str() {
            "physical" => T0Mode::Physical,
            other => T0Mode::Fixed(other.parse().map_err(|e| {
                anyhow!("invalid value `{other}` for `t0` ({}): {e}", layers.source("t0"))
            })?),
        };
        let exponent = match layers.parse::<String>("swap-exponent")?.as_str() {
            "stations" => SwapExponent::Stations,
            "nesting-level" => SwapExponent::NestingLevel,
            other => bail!(
                "invalid value `{other}` for `swap-exponent` ({}): expected stations or nesting-level",
                layers.source("swap-exponent")
            ),
        };
        let link = LinkParams {
            alpha_db_per_km: layers.parse("alpha")?,
            speed_km_per_s: layers.parse("speed")?,
            t0,
            exponent,
        };
        link.validate().map_err(|e| anyhow!("link parameters: {e}"))?;

        let trials: u64 = layers.parse("trials")?;
        if trials < 2 {
            bail!("trials ({}): need at least 2, got {trials}", layers.source("trials"));
        }

        let grid = |name: &str| -> Result<Grid> {
            Grid::new(
                name,
                layers.parse(&format!("{name}-min"))?,
                layers.parse(&format!("{name}-max"))?,
                layers.parse(&format!("{name}-step"))?,
            )
        };
        let distances = grid("distance")?;
        if distances.min <= 0.0 {
            bail!("distance-min must be > 0, got {}", distances.min);
        }
        let fidelities = grid("fidelity")?;
        SourceParams::new(fidelities.min).map_err(|e| field("fidelity-min", e))?;
        SourceParams::new(fidelities.max).map_err(|e| field("fidelity-max", e))?;
        let gate_qualities = grid("gate-quality")?;
        NoiseParams::from_gate_quality(gate_qualities.min).map_err(|e| field("gate-quality-min", e))?;
        NoiseParams::from_gate_quality(gate_qualities.max).map_err(|e| field("gate-quality-max", e))?;

        Ok(RunConfig {
            beta,
            fidelity,
            distance_km,
            nesting,
            range,
            link,
            output: layers.parse_opt::<PathBuf>("output")?,
            seed: layers.parse("seed")?,
            trials,
            distances,
            fidelities,
            gate_qualities,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use encrep_core::rates::{DEFAULT_ALPHA_DB_PER_KM, DEFAULT_SPEED_KM_PER_S};

    fn layer(pairs: &[(&str, &str)]) -> Layer {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn resolve(cli: &[(&str, &str)], file: &[(&str, &str)]) -> Result<RunConfig> {
        let file = (!file.is_empty()).then(|| (PathBuf::from("test.conf"), layer(file)));
        RunConfig::resolve(&Layers::new(layer(cli), file)?)
    }

    #[test]
    fn defaults_resolve() {
        let c = resolve(&[], &[]).unwrap();
        assert_eq!(c.distance_km, 600.0);
        assert_eq!(c.fidelity, 0.995);
        assert!((c.gate_quality() - 0.998).abs() < 1e-15);
        assert_eq!(c.nesting, NestingChoice::Optimize);
        assert_eq!(c.range, NestingRange::default());
        assert_eq!(c.seed, 42);
        assert_eq!(c.trials, 1_000_000);
        assert_eq!(c.link.alpha_db_per_km, DEFAULT_ALPHA_DB_PER_KM);
        assert_eq!(c.link.speed_km_per_s, DEFAULT_SPEED_KM_PER_S);
        assert_eq!(c.link.t0, T0Mode::Physical);
    }

    #[test]
    fn command_line_beats_file_beats_default() {
        let c = resolve(&[("distance", "300")], &[("distance", "400"), ("fidelity", "0.97")]).unwrap();
        assert_eq!(c.distance_km, 300.0);
        assert_eq!(c.fidelity, 0.97);
    }

    #[test]
    fn beta_in_a_higher_layer_overrides_gate_quality() {
        let c = resolve(&[("beta", "0.01")], &[("gate-quality", "0.95")]).unwrap();
        assert_eq!(c.beta, 0.01);
        assert!(resolve(&[("beta", "0.01"), ("gate-quality", "0.99")], &[]).is_err());
    }

    #[test]
    fn stations_map_to_nesting() {
        let c = resolve(&[("stations", "7")], &[]).unwrap();
        assert_eq!(c.nesting, NestingChoice::Fixed(3));
        let e = resolve(&[("stations", "2")], &[]).unwrap_err().to_string();
        assert!(e.contains("stations"), "{e}");
    }

    #[test]
    fn command_line_optimize_beats_file_nesting() {
        let c = resolve(&[("optimize", "true")], &[("nesting", "2")]).unwrap();
        assert_eq!(c.nesting, NestingChoice::Optimize);
    }

    #[test]
    fn preset_sits_between_command_line_and_file() {
        let c = resolve(&[("paper-fig8-defaults", "true")], &[("fidelity", "0.9")]).unwrap();
        assert_eq!(c.fidelity, PRESET_FIDELITY);
        assert!((c.gate_quality() - PRESET_GATE_QUALITY).abs() < 1e-15);
        assert_eq!(c.link.t0, T0Mode::Fixed(PRESET_T0));
        let c = resolve(&[("paper-fig8-defaults", "true"), ("fidelity", "0.99")], &[]).unwrap();
        assert_eq!(c.fidelity, 0.99);
        let c = resolve(&[], &[("paper-fig8-defaults", "true")]).unwrap();
        assert_eq!(c.fidelity, PRESET_FIDELITY);
    }

    #[test]
    fn errors_name_the_field() {
        for (key, value) in [
            ("fidelity", "1.2"),
            ("gate-quality", "-0.1"),
            ("distance", "-5"),
            ("alpha", "0"),
            ("t0", "fast"),
            ("distance-step", "0"),
        ] {
            let e = format!("{:#}", resolve(&[(key, value)], &[]).unwrap_err());
            let stem = key.split('-').next().unwrap();
            assert!(e.to_lowercase().contains(stem), "{key}: {e}");
        }
    }

    #[test]
    fn grid_points_are_inclusive() {
        let g = Grid::new("x", 0.95, 1.0, 0.005).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 11);
        assert!((p[10] - 1.0).abs() < 1e-12);
        assert!(Grid::new("x", 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn config_text_parsing() {
        let l = parse_config_text("# c\nDistance = 800\n max_nesting=4 # trailing\n\n", Path::new("f")).unwrap();
        assert_eq!(l.get("distance").unwrap(), "800");
        assert_eq!(l.get("max-nesting").unwrap(), "4");
        assert!(parse_config_text("bogus = 1", Path::new("f")).is_err());
        assert!(parse_config_text("distance 800", Path::new("f")).is_err());
    }
}
