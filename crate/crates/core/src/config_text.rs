//! Key-value text format for a single network description.
//!
//! ```text
//! # two identical children behind fast links
//! root_speed = 100      # GFLOPS/s
//! load_gb = 1
//! child = 100, 1000     # speed GFLOPS/s, bandwidth MB/s
//! child = 100, 1000
//! ```
//!
//! `child` lines are taken in order. An optional `n = <count>` line is
//! checked against the number of children.

use crate::dlt::SltnConfig;
use crate::error::{Error, Result};

fn parse_number(key: &str, raw: &str, lineno: usize) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("line {lineno}: `{key}` expects a number, got `{}`", raw.trim())))
}

pub fn parse_config(text: &str) -> Result<SltnConfig> {
    let mut root_speed = None;
    let mut load_gb = None;
    let mut declared_n = None;
    let mut speeds = Vec::new();
    let mut bandwidths = Vec::new();

    for (i, raw_line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("line {lineno}: expected `key = value`")))?;
        let key = key.trim();
        match key {
            "root_speed" => root_speed = Some(parse_number(key, value, lineno)?),
            "load_gb" => load_gb = Some(parse_number(key, value, lineno)?),
            "n" => {
                declared_n = Some(value.trim().parse::<usize>().map_err(|_| {
                    Error::invalid(format!("line {lineno}: `n` expects a count"))
                })?)
            }
            "child" => {
                let (s, b) = value.split_once(',').ok_or_else(|| {
                    Error::invalid(format!("line {lineno}: `child` expects `speed, bandwidth`"))
                })?;
                speeds.push(parse_number("child speed", s, lineno)?);
                bandwidths.push(parse_number("child bandwidth", b, lineno)?);
            }
            other => return Err(Error::invalid(format!("line {lineno}: unknown key `{other}`"))),
        }
    }

    let root_speed = root_speed.ok_or_else(|| Error::invalid("missing `root_speed`"))?;
    let load_gb = load_gb.ok_or_else(|| Error::invalid("missing `load_gb`"))?;
    if let Some(n) = declared_n {
        if n != speeds.len() {
            return Err(Error::invalid(format!(
                "`n = {n}` but {} child lines were given",
                speeds.len()
            )));
        }
    }
    SltnConfig::new(root_speed, speeds, bandwidths, load_gb)
}

pub fn format_config(config: &SltnConfig) -> String {
    let mut out = format!(
        "root_speed = {}\nload_gb = {}\nn = {}\n",
        config.root_speed,
        config.load_gb,
        config.n()
    );
    for (s, b) in config.child_speeds.iter().zip(&config.link_bandwidths) {
        out.push_str(&format!("child = {s}, {b}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = "# two identical children behind fast links\nroot_speed = 100 # GFLOPS/s\nload_gb = 1\nchild = 100, 1000\nchild = 100, 1000\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.root_speed, 100.0);
        assert_eq!(c.child_speeds, vec![100.0, 100.0]);
        assert_eq!(c.link_bandwidths, vec![1000.0, 1000.0]);
        assert_eq!(parse_config(&format_config(&c)).unwrap(), c);
    }

    #[test]
    fn errors() {
        assert!(parse_config("load_gb = 1\nchild = 1, 2").is_err());
        assert!(parse_config("root_speed = 1\nload_gb = 1").is_err());
        assert!(parse_config("root_speed = x\nload_gb = 1\nchild = 1, 2").is_err());
        assert!(parse_config("root_speed = 1\nload_gb = 1\nchild = 1").is_err());
        assert!(parse_config("root_speed = 1\nload_gb = 1\nn = 2\nchild = 1, 2").is_err());
        assert!(parse_config("root_speed = 1\nload_gb = 1\nspeed = 3\nchild = 1, 2").is_err());
    }
}
