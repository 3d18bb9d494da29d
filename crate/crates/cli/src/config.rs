//! Flat `key = value` config files, spliced into the argument list.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", n + 1);
        };
        let k = k.trim().replace('_', "-");
        if k.is_empty() || k == "config" {
            bail!("config line {}: invalid key {k:?}", n + 1);
        }
        out.push((k, v.trim().to_owned()));
    }
    Ok(out)
}

/// Replaces `--config <path>` with the flags it holds. They go right after
/// the subcommand, ahead of anything typed on the command line, so explicit
/// flags win. `key = true` becomes a bare switch; `key = false` is dropped.
pub fn expand(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read config {}", path.to_string_lossy()))?;
    let mut flags = Vec::new();
    for (k, v) in parse(&text)? {
        match v.as_str() {
            "true" => flags.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{k}").into());
                flags.push(v.into());
            }
        }
    }
    let at = rest.iter().skip(1).position(|a| subcommands.iter().any(|s| a == s)).map_or(rest.len(), |p| p + 2);
    rest.splice(at..at, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs() {
        let kv = parse("# run\nseed = 7\nmax_leaves=64 # budget\n\ntime-rotate = true\n").unwrap();
        assert_eq!(
            kv,
            [("seed", "7"), ("max-leaves", "64"), ("time-rotate", "true")].map(|(a, b)| (a.to_owned(), b.to_owned()))
        );
        assert!(parse("seed 7").is_err());
        assert!(parse("config = x").is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        fs::write(&p, "seed = 3\ntime_rotate = true\nquiet = false\n").unwrap();
        let args: Vec<OsString> =
            ["omnitree", "--threads", "2", "refine", "--config", p.to_str().unwrap(), "--seed", "9"]
                .iter()
                .map(Into::into)
                .collect();
        let out = expand(args, &["refine"]).unwrap();
        let out: Vec<_> = out.iter().map(|s| s.to_str().unwrap()).collect();
        assert_eq!(out, ["omnitree", "--threads", "2", "refine", "--seed", "3", "--time-rotate", "--seed", "9"]);
    }
}
