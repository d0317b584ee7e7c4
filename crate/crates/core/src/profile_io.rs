//! Text format for cached ground-state profiles.
//!
//! ```text
//! # yamabe ground-state profile
//! format_version 1
//! m 2
//! n 2
//! equation yamabe
//! beta 2.2062008646509437e0
//! ...
//! data
//! <f(t_0)> <f'(t_0)>
//! ...
//! ```
//!
//! Every real is written with 17 significant digits, which round-trips `f64`
//! (and `f32`) bit for bit.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::dims::make_dims;
use crate::error::{Error, Result};
use crate::ground_state::{Equation, ProfileDiagnostics, RadialProfile, ShootingSettings};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

fn real<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64().unwrap_or(f64::NAN))
}

/// Writes `profile` in the cache format.
pub fn write_profile<T: Scalar>(
    profile: &RadialProfile<T>,
    mut out: impl Write,
) -> std::io::Result<()> {
    let d = &profile.diagnostics;
    writeln!(out, "# yamabe ground-state profile")?;
    writeln!(out, "format_version {FORMAT_VERSION}")?;
    writeln!(out, "m {}", profile.dims.m)?;
    writeln!(out, "n {}", profile.dims.n)?;
    writeln!(out, "equation {}", profile.equation.name())?;
    writeln!(out, "beta {}", real(profile.beta))?;
    writeln!(out, "spacing {}", real(profile.spacing))?;
    writeln!(out, "t_grid {}", real(profile.t_grid()))?;
    writeln!(out, "intervals {}", profile.intervals())?;
    writeln!(out, "tail_rate {}", real(profile.tail_rate))?;
    writeln!(out, "tail_amplitude {}", real(profile.tail_amplitude))?;
    writeln!(out, "fitted_tail_rate {}", real(d.fitted_tail_rate))?;
    writeln!(out, "beta_lo {}", real(d.beta_bracket.0))?;
    writeln!(out, "beta_hi {}", real(d.beta_bracket.1))?;
    writeln!(out, "bisection_iterations {}", d.bisection_iterations)?;
    writeln!(out, "continuation_segments {}", d.continuation_segments)?;
    writeln!(out, "tol_beta {}", real(d.tol_beta))?;
    writeln!(out, "rtol {}", real(d.rtol))?;
    writeln!(out, "atol {}", real(d.atol))?;
    writeln!(out, "data")?;
    for (v, dv) in profile.values.iter().zip(&profile.derivs) {
        writeln!(out, "{} {}", real(*v), real(*dv))?;
    }
    Ok(())
}

pub fn profile_to_string<T: Scalar>(profile: &RadialProfile<T>) -> String {
    let mut buf = Vec::new();
    write_profile(profile, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

struct Header {
    fields: Vec<(String, String)>,
}

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("missing header field `{key}`")))
    }

    fn parse<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("bad value `{raw}` for `{key}`")))
    }

    fn real<T: Scalar>(&self, key: &str) -> Result<T> {
        let x: f64 = self.parse(key)?;
        T::from_f64(x).ok_or_else(|| Error::Format(format!("`{key}` out of range")))
    }
}

/// Parses a profile written by [`write_profile`].
pub fn read_profile<T: Scalar>(input: impl BufRead) -> Result<RadialProfile<T>> {
    let mut header = Header { fields: Vec::new() };
    let mut lines = input.lines();
    loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format("missing `data` section".into()))?
            .map_err(|e| Error::Format(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "data" {
            break;
        }
        let (key, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Format(format!("malformed header line `{line}`")))?;
        header
            .fields
            .push((key.to_string(), value.trim().to_string()));
    }
    let version: u32 = header.parse("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let dims = make_dims::<T>(header.parse("m")?, header.parse("n")?)?;
    let equation = match header.get("equation")? {
        "yamabe" => Equation::Yamabe,
        "unit" => Equation::Unit,
        other => return Err(Error::Format(format!("unknown equation `{other}`"))),
    };
    let intervals: usize = header.parse("intervals")?;
    let mut values = Vec::with_capacity(intervals + 1);
    let mut derivs = Vec::with_capacity(intervals + 1);
    for line in lines {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<T> {
            let raw = parts
                .next()
                .ok_or_else(|| Error::Format(format!("short data line `{line}`")))?;
            let x: f64 = raw
                .parse()
                .map_err(|_| Error::Format(format!("bad number `{raw}`")))?;
            T::from_f64(x).ok_or_else(|| Error::Format("value out of range".into()))
        };
        values.push(next()?);
        derivs.push(next()?);
    }
    if values.len() != intervals + 1 {
        return Err(Error::Format(format!(
            "expected {} samples, found {}",
            intervals + 1,
            values.len()
        )));
    }
    Ok(RadialProfile {
        dims,
        equation,
        spacing: header.real("spacing")?,
        values,
        derivs,
        tail_rate: header.real("tail_rate")?,
        tail_amplitude: header.real("tail_amplitude")?,
        beta: header.real("beta")?,
        diagnostics: ProfileDiagnostics {
            beta_bracket: (header.real("beta_lo")?, header.real("beta_hi")?),
            bisection_iterations: header.parse("bisection_iterations")?,
            continuation_segments: header.parse("continuation_segments")?,
            fitted_tail_rate: header.real("fitted_tail_rate")?,
            tol_beta: header.real("tol_beta")?,
            rtol: header.real("rtol")?,
            atol: header.real("atol")?,
        },
    })
}

/// File name identifying a profile by every parameter that affects it.
pub fn cache_key<T: Scalar>(
    m: u32,
    n: u32,
    equation: Equation,
    settings: &ShootingSettings<T>,
) -> String {
    format!(
        "profile-v{FORMAT_VERSION}-{}-m{m}-n{n}-M{}-tb{}-rt{}-at{}.txt",
        equation.name(),
        settings.grid_nodes,
        real(settings.tol_beta),
        real(settings.tolerances.rtol),
        real(settings.tolerances.atol),
    )
}

pub fn load_profile<T: Scalar>(path: &Path) -> Result<RadialProfile<T>> {
    let file =
        fs::File::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    read_profile(std::io::BufReader::new(file))
}

/// Writes to a temporary file in the same directory, then renames it into place.
pub fn save_profile_atomic<T: Scalar>(
    profile: &RadialProfile<T>,
    path: &Path,
) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp: PathBuf = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("profile"),
        std::process::id()
    ));
    {
        let mut file = std::io::BufWriter::new(fs::File::create(&tmp)?);
        write_profile(profile, &mut file)?;
        file.flush()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::shoot_ground_state;
    use proptest::prelude::*;

    fn small_profile() -> RadialProfile<f64> {
        let dims = make_dims::<f64>(3, 2).unwrap();
        shoot_ground_state(
            &dims,
            &ShootingSettings {
                grid_nodes: 256,
                ..ShootingSettings::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = small_profile();
        let text = profile_to_string(&p);
        let q: RadialProfile<f64> = read_profile(text.as_bytes()).unwrap();
        assert_eq!(p, q);
        assert_eq!(text, profile_to_string(&q));
    }

    #[test]
    fn rejects_wrong_version_and_truncation() {
        let text = profile_to_string(&small_profile());
        let bad = text.replace("format_version 1", "format_version 7");
        assert!(matches!(
            read_profile::<f64>(bad.as_bytes()),
            Err(Error::Format(_))
        ));
        let cut: String = text.lines().take(40).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            read_profile::<f64>(cut.as_bytes()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn cache_key_tracks_settings() {
        let s = ShootingSettings::<f64>::default();
        let a = cache_key(2, 2, Equation::Yamabe, &s);
        let b = cache_key(
            2,
            2,
            Equation::Yamabe,
            &ShootingSettings {
                grid_nodes: 8192,
                ..s
            },
        );
        let c = cache_key(
            2,
            2,
            Equation::Yamabe,
            &ShootingSettings {
                tol_beta: 1e-10,
                ..s
            },
        );
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, cache_key(2, 2, Equation::Yamabe, &s));
    }

    proptest! {
        #[test]
        fn reals_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let back: f64 = real(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
