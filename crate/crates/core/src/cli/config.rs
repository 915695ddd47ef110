//! Flat `key = value` configuration shared by all subcommands.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::enumerate::{CongruenceWindow, DEFAULT_CAPACITY};
use crate::equidist::TestFunction;
use crate::error::{Error, Result};
use crate::exact_arith::{ArchPrecision, ExactScalar, Prime, SymbolicReal};
use crate::linalg::{NormKind, Radius};
use crate::volume::Orientation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Enumerate,
    Volume,
    Orbit,
    Asymptotics,
    Report,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] =
        [Subcommand::Enumerate, Subcommand::Volume, Subcommand::Orbit, Subcommand::Asymptotics, Subcommand::Report];
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcommand::Enumerate => "enumerate",
            Subcommand::Volume => "volume",
            Subcommand::Orbit => "orbit",
            Subcommand::Asymptotics => "asymptotics",
            Subcommand::Report => "report",
        })
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    UInt,
    Float,
    Bool,
    Prime,
    Radius,
    RadiusList,
    UIntList,
    SymbolicList,
    RationalList,
    Path,
    PathList,
    Choice(&'static [&'static str]),
    Test,
}

impl Kind {
    fn check(self, v: &str) -> std::result::Result<(), String> {
        fn list<T: FromStr>(v: &str) -> std::result::Result<(), String> {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.iter().any(|s| s.is_empty()) {
                return Err("empty list entry".into());
            }
            parts
                .iter()
                .try_for_each(|s| s.parse::<T>().map(drop).map_err(|_| format!("bad list entry {s:?}")))
        }
        match self {
            Kind::UInt => v.parse::<u64>().map(drop).map_err(|_| "expected a non-negative integer".into()),
            Kind::Float => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(()),
                _ => Err("expected a finite number".into()),
            },
            Kind::Bool => v.parse::<bool>().map(drop).map_err(|_| "expected true or false".into()),
            Kind::Prime => v
                .parse::<u64>()
                .map_err(|_| "expected a prime".to_string())
                .and_then(|p| Prime::new(p).map(drop).map_err(|e| e.to_string())),
            Kind::Radius => v.parse::<Radius>().map(drop).map_err(|e| e.to_string()),
            Kind::RadiusList => list::<Radius>(v),
            Kind::UIntList => list::<u64>(v),
            Kind::SymbolicList => list::<SymbolicReal>(v),
            Kind::RationalList => list::<ExactScalar>(v),
            Kind::Path | Kind::PathList => {
                if v.trim().is_empty() {
                    Err("expected a path".into())
                } else {
                    Ok(())
                }
            }
            Kind::Choice(opts) => {
                if opts.contains(&v) {
                    Ok(())
                } else {
                    Err(format!("expected one of {}", opts.join(", ")))
                }
            }
            Kind::Test => v.parse::<TestFunction>().map(drop).map_err(|e| e.to_string()),
        }
    }
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: Option<&'static str>,
}

const fn key(name: &'static str, kind: Kind, default: Option<&'static str>) -> Key {
    Key { name, kind, default }
}

const NORMS: &[&str] = &["frobenius", "max"];

fn common_keys() -> Vec<Key> {
    vec![
        key("json", Kind::Path, None),
        key("csv", Kind::Path, None),
        key("threads", Kind::UInt, None),
        key("capacity", Kind::UInt, None),
        key("precision", Kind::Choice(&["double", "extended"]), Some("double")),
        key("seed", Kind::UInt, Some("0")),
    ]
}

fn keys(sub: Subcommand) -> Vec<Key> {
    let mut k = common_keys();
    k.extend(match sub {
        Subcommand::Enumerate => vec![
            key("lattice", Kind::Choice(&["sl2z", "sl2zp", "slnz"]), Some("sl2z")),
            key("n", Kind::UInt, Some("3")),
            key("p", Kind::Prime, None),
            key("t", Kind::Radius, None),
            key("t_p", Kind::Radius, Some("1")),
            key("norm", Kind::Choice(NORMS), Some("frobenius")),
            key("window", Kind::Path, None),
            key("window_level", Kind::UInt, None),
            key("list", Kind::Bool, Some("false")),
        ],
        Subcommand::Volume => vec![
            key("group", Kind::Choice(&["sym2_unipotent", "stab2", "padic_sl2"]), Some("sym2_unipotent")),
            key("p", Kind::Prime, Some("2")),
            key("n_max", Kind::UInt, Some("12")),
            key("v", Kind::SymbolicList, Some("1,sqrt(2)")),
            key("t", Kind::RadiusList, Some("1,2,4,8,16")),
            key("norm", Kind::Choice(NORMS), Some("frobenius")),
            key("orientation", Kind::Choice(&["right", "right_inverse"]), Some("right_inverse")),
            key("samples", Kind::UInt, Some("0")),
        ],
        Subcommand::Orbit => vec![
            key("application", Kind::Choice(&["ledrappier", "window", "padic_product", "wedge"]), Some("ledrappier")),
            key("p", Kind::Prime, None),
            key("n", Kind::UInt, Some("3")),
            key("k", Kind::UInt, Some("1")),
            key("v", Kind::SymbolicList, None),
            key("v_p", Kind::RationalList, None),
            key("t", Kind::RadiusList, None),
            key("norm", Kind::Choice(NORMS), Some("frobenius")),
            key("window", Kind::Path, None),
            key("window_level", Kind::UInt, None),
            key("wedge_exponent", Kind::Float, Some("1")),
            key("cf_depth", Kind::UInt, Some("40")),
            key("calibrate", Kind::Bool, Some("false")),
            key("calibrate_t", Kind::Radius, Some("400")),
        ],
        Subcommand::Asymptotics => vec![
            key("input", Kind::Path, None),
            key("t_column", Kind::Path, Some("t")),
            key("column", Kind::Path, Some("volume")),
            key("p", Kind::Prime, None),
            key("moduli", Kind::UIntList, Some("1,2,3,4")),
            key("tolerance", Kind::Float, Some("1e-6")),
            key("min_samples", Kind::UInt, Some("8")),
        ],
        Subcommand::Report => vec![key("inputs", Kind::PathList, None)],
    });
    k
}

/// Keys that must be present after merging file, flags and defaults.
fn required(sub: Subcommand, s: &BTreeMap<String, String>) -> Vec<&'static str> {
    let get = |k: &str| s.get(k).map(String::as_str);
    let mut r = Vec::new();
    match sub {
        Subcommand::Enumerate => {
            r.push("t");
            if get("lattice") == Some("sl2zp") || get("window").is_some() || get("window_level").is_some() {
                r.push("p");
            }
        }
        Subcommand::Volume => {}
        Subcommand::Orbit => {
            r.extend(["v", "t"]);
            match get("application") {
                Some("window") => r.push("p"),
                Some("padic_product") => r.extend(["p", "v_p"]),
                _ => {}
            }
        }
        Subcommand::Asymptotics => r.extend(["input", "p"]),
        Subcommand::Report => r.push("inputs"),
    }
    r
}

const TEST_PREFIX: &str = "test.";

/// Validated settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    /// Every setting, defaults included, as validated strings.
    pub settings: BTreeMap<String, String>,
    pub json_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub capacity: u64,
    pub precision: ArchPrecision,
    pub seed: u64,
    /// Non-fatal notes, such as flags overriding file values.
    pub warnings: Vec<String>,
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_kv_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(vec![format!("line {}: expected key = value", i + 1)]))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Merge config-file and flag settings (flags win), fill defaults and
/// validate. Every violation is reported at once.
pub fn parse_config(sub: Subcommand, flags: &[(String, String)], file: Option<&Path>) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut settings = BTreeMap::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read config {}: {e}", path.display())]))?;
        for (k, v) in parse_kv_file(&text)? {
            if settings.insert(k.clone(), v).is_some() {
                errors.push(format!("key {k:?} repeated in config file"));
            }
        }
    }
    for (k, v) in flags {
        if let Some(old) = settings.insert(k.clone(), v.clone()) {
            if &old != v {
                warnings.push(format!("flag {k}={v} overrides config file value {old:?}"));
            }
        }
    }
    let schema = keys(sub);
    for (k, v) in &settings {
        if sub == Subcommand::Orbit && k.starts_with(TEST_PREFIX) {
            if k.len() == TEST_PREFIX.len() {
                errors.push("test key needs an id, as in test.a = ...".into());
            } else if let Err(e) = Kind::Test.check(v) {
                errors.push(format!("{k}: {e}"));
            }
            continue;
        }
        match schema.iter().find(|s| s.name == k) {
            None => errors.push(format!("unknown key {k:?} for {sub}")),
            Some(s) => {
                if let Err(e) = s.kind.check(v) {
                    errors.push(format!("{k}: {e} (got {v:?})"));
                }
            }
        }
    }
    for s in &schema {
        if let Some(d) = s.default {
            settings.entry(s.name.to_string()).or_insert_with(|| d.to_string());
        }
    }
    for r in required(sub, &settings) {
        if !settings.contains_key(r) {
            errors.push(format!("missing required key {r:?}"));
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let get = |k: &str| settings.get(k);
    Ok(RunConfig {
        subcommand: sub,
        json_out: get("json").map(PathBuf::from),
        csv_out: get("csv").map(PathBuf::from),
        threads: get("threads").map(|t| t.parse().expect("validated")),
        capacity: get("capacity").map_or(DEFAULT_CAPACITY, |c| c.parse().expect("validated")),
        precision: if get("precision").map(String::as_str) == Some("extended") {
            ArchPrecision::Extended
        } else {
            ArchPrecision::Double
        },
        seed: get("seed").map_or(0, |s| s.parse().expect("validated")),
        settings,
        warnings,
    })
}

impl RunConfig {
    /// Config-file text that parses back to the same settings.
    pub fn echo(&self) -> String {
        let mut out = format!("# orbitlab {}\n", self.subcommand);
        for (k, v) in &self.settings {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn has(&self, k: &str) -> bool {
        self.settings.contains_key(k)
    }

    pub fn str(&self, k: &str) -> &str {
        self.settings.get(k).map(String::as_str).unwrap_or("")
    }

    fn parsed<T: FromStr>(&self, k: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.settings.get(k).ok_or_else(|| Error::Config(vec![format!("missing key {k:?}")]))?;
        v.parse().map_err(|e| Error::Config(vec![format!("{k}: {e}")]))
    }

    fn list<T: FromStr>(&self, k: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.str(k)
            .split(',')
            .map(|s| s.trim().parse().map_err(|e| Error::Config(vec![format!("{k}: {e}")])))
            .collect()
    }

    pub fn uint(&self, k: &str) -> Result<u64> {
        self.parsed(k)
    }

    pub fn float(&self, k: &str) -> Result<f64> {
        self.parsed(k)
    }

    pub fn bool(&self, k: &str) -> Result<bool> {
        self.parsed(k)
    }

    pub fn prime(&self, k: &str) -> Result<Prime> {
        Prime::new(self.parsed(k)?)
    }

    pub fn radius(&self, k: &str) -> Result<Radius> {
        self.parsed(k)
    }

    pub fn radii(&self, k: &str) -> Result<Vec<Radius>> {
        self.list(k)
    }

    pub fn uints(&self, k: &str) -> Result<Vec<u64>> {
        self.list(k)
    }

    pub fn symbolic(&self, k: &str) -> Result<Vec<SymbolicReal>> {
        self.list(k)
    }

    pub fn rationals(&self, k: &str) -> Result<Vec<ExactScalar>> {
        self.list(k)
    }

    pub fn paths(&self, k: &str) -> Vec<PathBuf> {
        self.str(k).split(',').map(|s| PathBuf::from(s.trim())).collect()
    }

    pub fn norm(&self) -> Result<NormKind> {
        self.parsed("norm")
    }

    pub fn orientation(&self) -> Result<Orientation> {
        self.parsed("orientation")
    }

    /// `window` file, or the principal window of `window_level`.
    pub fn window(&self, n: usize) -> Result<Option<CongruenceWindow>> {
        if self.has("window") {
            let path = self.str("window");
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(vec![format!("cannot read window {path}: {e}")]))?;
            let w: CongruenceWindow = text.parse()?;
            if self.has("p") && w.prime() != self.prime("p")? {
                return Err(Error::Config(vec![format!("window prime {} differs from p", w.prime())]));
            }
            return Ok(Some(w));
        }
        if self.has("window_level") {
            let m = self.uint("window_level")? as u32;
            return Ok(Some(CongruenceWindow::principal(self.prime("p")?, m, n)?));
        }
        Ok(None)
    }

    /// `test.<id>` entries in id order.
    pub fn tests(&self) -> Result<Vec<(String, TestFunction)>> {
        self.settings
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(TEST_PREFIX).map(|id| (id, v)))
            .map(|(id, v)| Ok((id.to_string(), v.parse()?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn minimal_enumerate_gets_defaults() {
        let c = parse_config(Subcommand::Enumerate, &kv(&[("t", "8")]), None).unwrap();
        assert_eq!(c.str("lattice"), "sl2z");
        assert_eq!(c.str("norm"), "frobenius");
        assert_eq!(c.capacity, DEFAULT_CAPACITY);
        assert_eq!(c.precision, ArchPrecision::Double);
        assert!(c.json_out.is_none() && c.warnings.is_empty());
    }

    #[test]
    fn every_violation_is_listed() {
        let err = parse_config(Subcommand::Enumerate, &kv(&[("bogus", "1"), ("norm", "l7"), ("n", "-1")]), None)
            .unwrap_err();
        let Error::Config(msgs) = err else { panic!("expected a config error") };
        assert_eq!(msgs.len(), 4, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("\"bogus\"")));
        assert!(msgs.iter().any(|m| m.contains("missing required key \"t\"")));
    }

    #[test]
    fn flags_override_file_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "t = 4  # radius\nnorm = max\n").unwrap();
        let c = parse_config(Subcommand::Enumerate, &kv(&[("t", "6")]), Some(&path)).unwrap();
        assert_eq!(c.str("t"), "6");
        assert_eq!(c.str("norm"), "max");
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn orbit_requirements_follow_application() {
        let base = [("v", "1,sqrt(2)"), ("t", "10,20")];
        assert!(parse_config(Subcommand::Orbit, &kv(&base), None).is_ok());
        let mut pad = base.to_vec();
        pad.push(("application", "padic_product"));
        let Error::Config(msgs) = parse_config(Subcommand::Orbit, &kv(&pad), None).unwrap_err() else { panic!() };
        assert_eq!(msgs.len(), 2);
        pad.extend([("p", "2"), ("v_p", "1,3"), ("test.x", "sector:1:2:0:1*shell:2:0")]);
        let c = parse_config(Subcommand::Orbit, &kv(&pad), None).unwrap();
        assert_eq!(c.tests().unwrap().len(), 1);
        pad.push(("test.y", "shell:2"));
        assert!(parse_config(Subcommand::Orbit, &kv(&pad), None).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config(
            Subcommand::Orbit,
            &kv(&[("v", "1, sqrt(2)"), ("t", "10,20"), ("test.a", "sector:1:2:0:0.5"), ("threads", "2")]),
            None,
        )
        .unwrap();
        let path = dir.path().join("echo.cfg");
        std::fs::write(&path, c.echo()).unwrap();
        assert_eq!(parse_config(Subcommand::Orbit, &[], Some(&path)).unwrap(), c);
    }
}
