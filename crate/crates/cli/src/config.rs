//! `--config FILE` support: each `key = value` line becomes `--key value`
//! unless that flag was already given on the command line.

use std::ffi::OsString;

use crate::commands::CliError;

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn has_flag(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_eq = format!("--{key}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_eq)
    })
}

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn merged_args(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    for (key, value) in parse_config(&text)? {
        if key == "config" || has_flag(&argv, &key) {
            continue;
        }
        match value.as_str() {
            "true" => argv.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                argv.push(format!("--{key}").into());
                argv.push(value.into());
            }
        }
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_lines() {
        let kv = parse_config("# c\nL = 5\n\n--W=40\n").unwrap();
        assert_eq!(kv, vec![("L".into(), "5".into()), ("W".into(), "40".into())]);
        assert!(parse_config("nonsense").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("fxvol-config-{}", std::process::id()));
        std::fs::write(&dir, "L = 5\nW = 40\ntick = true\n").unwrap();
        let argv = os(&["fxvol", "ssa", "forecast", "--L", "7", "--config", dir.to_str().unwrap()]);
        let merged = merged_args(argv).unwrap();
        std::fs::remove_file(&dir).unwrap();
        let tail: Vec<_> = merged[7..].iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(tail, vec!["--W", "40", "--tick"]);
    }
}
