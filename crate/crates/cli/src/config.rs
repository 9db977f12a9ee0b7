//! `key = value` config files.
//!
//! Keys are long flag names of the subcommand (`epochs`, `lambda-range`,
//! `query_subset` ...). Values are split on whitespace; `true`/`false` toggle
//! switches. Blank lines and `#` comments are ignored. Anything given on the
//! command line wins.

use crate::CliError;
use std::ffi::OsString;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: bad key '{}'", i + 1, k.trim())));
        }
        out.push(Entry {
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

/// Position of the config file argument and its path, if any.
fn find_config(args: &[OsString]) -> Result<Option<String>, CliError> {
    for (i, a) in args.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            return match args.get(i + 1).and_then(|v| v.to_str()) {
                Some(p) => Ok(Some(p.to_string())),
                None => Err(CliError::Usage("--config needs a file".into())),
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(p.to_string()));
        }
    }
    Ok(None)
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter()
        .filter_map(|a| a.to_str())
        .any(|s| s == flag || s.starts_with(&with_eq))
}

/// Inserts flags from the config file right after the subcommand name,
/// skipping keys already present on the command line.
pub fn expand(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>, CliError> {
    let Some(path) = find_config(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
    let entries = parse(&text)?;
    let Some(pos) = args
        .iter()
        .position(|a| a.to_str().is_some_and(|s| subcommands.contains(&s)))
    else {
        return Ok(args);
    };
    let mut extra: Vec<OsString> = Vec::new();
    for e in entries {
        if given(&args, &e.key) {
            continue;
        }
        match e.value.as_str() {
            "true" => extra.push(format!("--{}", e.key).into()),
            "false" => {}
            v => {
                extra.push(format!("--{}", e.key).into());
                extra.extend(v.split_whitespace().map(OsString::from));
            }
        }
    }
    let mut out = args;
    out.splice(pos + 1..pos + 1, extra);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_comments_and_normalizes_keys() {
        let e = parse("# budget\nepochs = 10\n\nquery_subset=512 # fewer\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].key, "query-subset");
        assert_eq!(e[1].value, "512");
        assert!(parse("epochs 10").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "epochs=10\nlr=0.01\nlambda-range=3 6\nconstant-lr=true\n").unwrap();
        let args = os(&["ufo", "--config", p.to_str().unwrap(), "train", "--epochs", "2"]);
        let got = expand(args, &["train"]).unwrap();
        let got: Vec<&str> = got.iter().map(|s| s.to_str().unwrap()).collect();
        assert_eq!(
            &got[4..],
            &["--lr", "0.01", "--lambda-range", "3", "6", "--constant-lr", "--epochs", "2"]
        );
    }
}
