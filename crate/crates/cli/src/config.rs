//! `key = value` config files, spliced into the argument list. Flags given
//! explicitly on the command line win over the file.

use std::fs;

/// Reads `path` into `--key value` pairs. Blank lines and `#` comments are skipped.
pub fn file_args(path: &str) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config file `{path}`: {e}"))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected `key = value`, found `{line}`", n + 1))?;
        let key = key.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("{path}:{}: invalid key `{key}`", n + 1));
        }
        out.push(format!("--{key}"));
        out.push(value.trim().to_string());
    }
    Ok(out)
}

/// Expands `--config <path>` (or `--config=<path>`): the file's flags are inserted
/// right after the subcommand, minus any key also given on the command line.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("`--config` needs a file path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let given: Vec<&str> = rest
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split_once('=').map_or(a, |(k, _)| k))
        .collect();
    let extra: Vec<String> = file_args(&path)?
        .chunks(2)
        .filter(|kv| !given.contains(&&kv[0][2..]))
        .flatten()
        .cloned()
        .collect();
    // program name, then the subcommand if present
    let at = match rest.get(1) {
        Some(s) if !s.starts_with('-') => 2,
        _ => 1.min(rest.len()),
    };
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn command_line_flags_win() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# sweep\nepsilon = 0.4\n\nomega-step=0.5").unwrap();
        let args = ["cvtele", "spectrum", "--config", f.path().to_str().unwrap(), "--epsilon", "0.6"]
            .map(String::from)
            .to_vec();
        let out = expand(args).unwrap();
        assert_eq!(
            out,
            ["cvtele", "spectrum", "--omega-step", "0.5", "--epsilon", "0.6"]
        );
    }

    #[test]
    fn malformed_lines_are_reported() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "epsilon 0.4").unwrap();
        let err = file_args(f.path().to_str().unwrap()).unwrap_err();
        assert!(err.contains(":1:"), "{err}");
        assert!(expand(vec!["cvtele".into(), "point".into(), "--config".into()]).is_err());
    }
}
