//! Value parsers shared by the flag definitions, plus the reader for the
//! `#` configuration header that every command echoes.

use irk_core::experiments::ProblemId;
use irk_core::irk::GammaMode;
use irk_core::linop::InnerKind;
use irk_core::tableaux::Family;

/// Smallest grid the spatial module accepts.
pub const MIN_GRID: usize = 4;

/// Keys of the header that are boolean switches rather than valued flags.
pub const SWITCH_KEYS: [&str; 1] = ["csv"];

pub fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>().map_err(|e| e.to_string())
}

pub fn parse_inner_spec(s: &str) -> Result<InnerKind, String> {
    s.parse::<InnerKind>().map_err(|e| e.to_string())
}

pub fn parse_problem(s: &str) -> Result<ProblemId, String> {
    s.parse::<ProblemId>().map_err(|e| e.to_string())
}

pub fn parse_gamma_mode(s: &str) -> Result<GammaMode, String> {
    s.parse::<GammaMode>().map_err(|e| e.to_string())
}

pub fn parse_fd_order(s: &str) -> Result<usize, String> {
    match s.trim() {
        "2" => Ok(2),
        "4" => Ok(4),
        other => Err(format!("finite-difference order must be 2 or 4, got {other:?}")),
    }
}

/// Comma-separated, strictly increasing grid sizes, each at least [`MIN_GRID`].
pub fn parse_grid_list(s: &str) -> Result<Vec<usize>, String> {
    let grids = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            match p.parse::<usize>() {
                Ok(n) if n >= MIN_GRID => Ok(n),
                Ok(n) => Err(format!("grid size {n} is below the minimum {MIN_GRID}")),
                Err(_) => Err(format!("bad grid size {p:?}")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err("grid sizes must be strictly increasing".into());
    }
    Ok(grids)
}

/// Comma-separated positive counts, strictly increasing.
pub fn parse_count_list(s: &str) -> Result<Vec<usize>, String> {
    let counts = s
        .split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(format!("bad count {:?}", p.trim())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err("counts must be strictly increasing".into());
    }
    Ok(counts)
}

pub fn parse_positive(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

pub fn parse_nonnegative(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a nonnegative number, got {s:?}")),
    }
}

/// Turns the leading `# key=value` lines of an output back into an argument
/// vector: `# command=run` becomes the subcommand, every other key a
/// `--key value` pair (switches become `--key` when `true`).
///
/// Reading stops at the first line that is not a comment.
pub fn parse_config_header(text: &str) -> Result<Vec<String>, String> {
    let mut command = None;
    let mut args = Vec::new();
    for line in text.lines() {
        let Some(body) = line.strip_prefix('#') else {
            break;
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| format!("header line without '=': {line:?}"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(format!("bad header key {key:?}"));
        }
        if key == "command" {
            if command.is_some() {
                return Err("header names two commands".into());
            }
            command = Some(value.to_string());
        } else if SWITCH_KEYS.contains(&key) {
            match value {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("switch {key} needs true or false, got {value:?}")),
            }
        } else {
            args.push(format!("--{key}"));
            args.push(value.to_string());
        }
    }
    let command = command.ok_or("header has no command line")?;
    let mut argv = vec![command];
    argv.extend(args);
    Ok(argv)
}
