//! Plain-text parameter checkpoints.
//!
//! ```text
//! cacrl-params 1
//! name policy
//! layers 56x64,64x64,64x3
//! len 8003
//! sha256 <hex digest of the values>
//! <one value per line, as 16 hex digits of the f64 bit pattern>
//! ```
//!
//! Storing raw bit patterns keeps round trips exact.

use std::fs;
use std::path::Path;

use super::params::{LayerShape, ParamVector};
use crate::error::{Error, Result};

const MAGIC: &str = "cacrl-params 1";

pub fn encode(name: &str, params: &ParamVector) -> String {
    let layers: Vec<String> = params
        .layers()
        .iter()
        .map(|l| format!("{}x{}", l.fan_in, l.fan_out))
        .collect();
    let mut out = String::with_capacity(32 * params.len() + 128);
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("name {name}\n"));
    out.push_str(&format!("layers {}\n", layers.join(",")));
    out.push_str(&format!("len {}\n", params.len()));
    out.push_str(&format!("sha256 {}\n", params.checksum()));
    for v in params.as_slice() {
        out.push_str(&format!("{:016x}\n", v.to_bits()));
    }
    out
}

fn header<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Checkpoint(format!("missing `{key}` header")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Checkpoint(format!("expected `{key}`, found `{line}`")))
}

fn parse_layers(spec: &str) -> Result<Vec<LayerShape>> {
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|s| {
            let (a, b) = s
                .split_once('x')
                .ok_or_else(|| Error::Checkpoint(format!("bad layer `{s}`")))?;
            let parse = |t: &str| t.parse::<usize>().map_err(|e| Error::Checkpoint(format!("bad layer `{s}`: {e}")));
            Ok(LayerShape::new(parse(a)?, parse(b)?))
        })
        .collect()
}

/// Parses a checkpoint, returning its name and parameters. The layout and the
/// checksum are both verified.
pub fn decode(text: &str) -> Result<(String, ParamVector)> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::Checkpoint("unrecognised header".into()));
    }
    let name = header(&mut lines, "name")?.to_string();
    let layers = parse_layers(header(&mut lines, "layers")?)?;
    let len: usize = header(&mut lines, "len")?
        .parse()
        .map_err(|e| Error::Checkpoint(format!("bad len: {e}")))?;
    let digest = header(&mut lines, "sha256")?.to_string();
    let values = lines
        .by_ref()
        .take(len)
        .map(|l| {
            u64::from_str_radix(l.trim(), 16)
                .map(f64::from_bits)
                .map_err(|e| Error::Checkpoint(format!("bad value `{l}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != len {
        return Err(Error::Checkpoint(format!("expected {len} values, found {}", values.len())));
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::Checkpoint("trailing data after values".into()));
    }
    let params = ParamVector::new(layers, values)?;
    if params.checksum() != digest {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }
    Ok((name, params))
}

pub fn save(path: &Path, name: &str, params: &ParamVector) -> Result<()> {
    fs::write(path, encode(name, params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(String, ParamVector)> {
    decode(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = ParamVector::glorot(vec![LayerShape::new(3, 4), LayerShape::new(4, 2)], &mut rng);
        p.as_mut_slice()[0] = -0.0;
        p.as_mut_slice()[1] = f64::MIN_POSITIVE / 3.0;
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = sample();
        let (name, q) = decode(&encode("critic_1", &p)).unwrap();
        assert_eq!(name, "critic_1");
        assert_eq!(q.layers(), p.layers());
        let a: Vec<u64> = p.as_slice().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = q.as_slice().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        let p = sample();
        save(&path, "policy", &p).unwrap();
        assert_eq!(load(&path).unwrap().1, p);
    }

    #[test]
    fn corrupted_value_fails_checksum() {
        let text = encode("policy", &sample());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let last = lines.len() - 1;
        lines[last] = format!("{:016x}", 1.5f64.to_bits());
        let err = decode(&lines.join("\n")).unwrap_err();
        assert!(err.to_string().contains("checksum"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = encode("policy", &sample());
        let cut: Vec<&str> = text.lines().take(8).collect();
        assert!(decode(&cut.join("\n")).is_err());
    }
}
