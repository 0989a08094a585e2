//! Config files hold one `key = value` pair per line, where `key` is a long
//! flag name without the dashes. Blank lines and `#` comments are ignored, and
//! a value may be wrapped in double quotes. A key may repeat only for flags
//! that repeat on the command line. Switches take `true` or `false`.

use std::ffi::OsString;
use std::path::Path;

use crate::args::{REPEATABLE, SWITCHES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError { line, message: format!("expected `key = value`, got `{trimmed}`") });
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(ConfigError { line, message: format!("invalid key `{key}`") });
        }
        let value = strip_comment(value.trim());
        let value = match value.strip_prefix('"') {
            Some(rest) => {
                rest.strip_suffix('"').ok_or_else(|| ConfigError { line, message: "unterminated quote".into() })?
            }
            None => value,
        };
        if !REPEATABLE.contains(&key) && entries.iter().any(|(k, _)| k == key) {
            return Err(ConfigError { line, message: format!("duplicate key `{key}`") });
        }
        entries.push((key.to_string(), value.to_string()));
    }
    Ok(entries)
}

/// Trailing `# comment` outside double quotes.
fn strip_comment(value: &str) -> &str {
    let mut quoted = false;
    for (i, c) in value.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return value[..i].trim_end(),
            _ => {}
        }
    }
    value
}

fn flag_present(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().any(|a| a.to_str().map(|s| s == flag || s.starts_with(&with_value)).unwrap_or(false))
}

/// Value of `--config`, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        match a.to_str() {
            Some("--config") => return iter.next().cloned(),
            Some(s) if s.starts_with("--config=") => return Some(OsString::from(&s["--config=".len()..])),
            _ => {}
        }
    }
    None
}

/// Index of the subcommand: the first bare word not consumed by `--config`.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        match args[i].to_str() {
            Some("--config") => i += 2,
            Some(s) if s.starts_with('-') => i += 1,
            _ => return Some(i),
        }
    }
    None
}

/// Insert file entries after the subcommand for every key not already given.
pub fn merge(args: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let Some(at) = subcommand_index(&args) else {
        return args;
    };
    let mut extra = Vec::new();
    for (key, value) in entries {
        if flag_present(&args, key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            if value == "true" {
                extra.push(OsString::from(format!("--{key}")));
            } else if value != "false" {
                // Let clap reject it with its usual message.
                extra.push(OsString::from(format!("--{key}={value}")));
            }
            continue;
        }
        extra.push(OsString::from(format!("--{key}={value}")));
    }
    let mut merged = args;
    let tail = merged.split_off(at + 1);
    merged.extend(extra);
    merged.extend(tail);
    merged
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_entries_and_comments() {
        let text = "# defaults\nrho = 1\n  mu=2 # classical\nq = \"1 + t\"\nh = y\nh = 0.1*y\n\n";
        let entries = parse(text).unwrap();
        assert_eq!(
            entries,
            vec![
                ("rho".into(), "1".into()),
                ("mu".into(), "2".into()),
                ("q".into(), "1 + t".into()),
                ("h".into(), "y".into()),
                ("h".into(), "0.1*y".into()),
            ]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(parse("rho 1").unwrap_err().line, 1);
        assert_eq!(parse("a = 1\na = 2").unwrap_err().line, 2);
        assert!(parse("q = \"1 + t").is_err());
        assert!(parse("bad key = 1").is_err());
    }

    #[test]
    fn command_line_wins() {
        let args = os(&["prabhakar", "--config", "c.txt", "solve", "--mu", "1.5", "--h", "y"]);
        let entries = vec![
            ("mu".to_string(), "2".to_string()),
            ("rho".to_string(), "1".to_string()),
            ("h".to_string(), "0".to_string()),
            ("round-trip".to_string(), "true".to_string()),
        ];
        let merged = merge(args, &entries);
        assert_eq!(
            merged,
            os(&["prabhakar", "--config", "c.txt", "solve", "--rho=1", "--round-trip", "--mu", "1.5", "--h", "y"])
        );
        assert_eq!(config_path(&merged), Some(OsString::from("c.txt")));
    }
}
