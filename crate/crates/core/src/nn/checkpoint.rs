//! Plain-text model checkpoints.
//!
//! ```text
//! nneq-checkpoint 1 cnn 6,12,24,12,6,1 3
//! layer0.weight 6,1,3 0.12 -1.5 ...
//! layer0.bias 6 ...
//! ```
//!
//! Values use Rust's shortest round-trip decimal formatting, so a save/load
//! cycle reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::network::{Network, NetworkKind};
use super::tensor::Tensor;

pub const FORMAT_TAG: &str = "nneq-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode(net: &Network) -> String {
    let structure = join(&net.structure());
    let mut out = format!(
        "{FORMAT_TAG} {FORMAT_VERSION} {} {structure} {}\n",
        net.kind(),
        net.kernel()
    );
    for (i, p) in net.params().iter().enumerate() {
        let name = if i % 2 == 0 { "weight" } else { "bias" };
        let _ = write!(out, "layer{}.{name} {}", i / 2, join(p.shape()));
        for v in p.data() {
            let _ = write!(out, " {v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn decode(text: &str) -> Result<Network> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty checkpoint".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [tag, version, kind, structure, kernel] = fields[..] else {
        return Err(Error::Parse(format!("bad checkpoint header `{header}`")));
    };
    if tag != FORMAT_TAG {
        return Err(Error::Parse(format!("not a checkpoint (tag `{tag}`)")));
    }
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::Parse(format!("unsupported checkpoint version {version}")));
    }
    let structure = parse_list(structure)?;
    let kernel: usize = kernel
        .parse()
        .map_err(|_| Error::Parse(format!("bad kernel `{kernel}`")))?;
    let mut net = match kind {
        "cnn" => Network::conv_stack(&structure, kernel)?,
        "dnn" => Network::dense_stack(&structure)?,
        other => return Err(Error::Parse(format!("unknown network kind `{other}`"))),
    };
    let expected = net.params().len();
    let mut count = 0;
    for (i, (line, param)) in lines.zip(net.params_mut()).enumerate() {
        let mut it = line.split_whitespace();
        let name = it.next().unwrap_or_default();
        let want = format!("layer{}.{}", i / 2, if i % 2 == 0 { "weight" } else { "bias" });
        if name != want {
            return Err(Error::Parse(format!("expected `{want}`, found `{name}`")));
        }
        let shape = parse_list(it.next().unwrap_or_default())?;
        let data = it
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad value `{v}` in {name}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let tensor = Tensor::new(shape, data).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
        if tensor.shape() != param.shape() {
            return Err(Error::Parse(format!(
                "{name}: shape {:?} does not match architecture {:?}",
                tensor.shape(),
                param.shape()
            )));
        }
        *param = tensor;
        count += 1;
    }
    if count != expected {
        return Err(Error::Parse(format!(
            "checkpoint has {count} parameter tensors, architecture needs {expected}"
        )));
    }
    debug_assert!(matches!(net.kind(), NetworkKind::Cnn | NetworkKind::Dnn));
    Ok(net)
}

/// Writes the checkpoint, creating parent directories as needed.
pub fn save(net: &Network, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, encode(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text)
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer list `{s}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Init;

    #[test]
    fn round_trip_is_bit_exact() {
        for mut net in [
            Network::conv_stack(&[6, 12, 24, 12, 6, 1], 3).unwrap(),
            Network::dense_stack(&[16, 128, 64, 32, 8]).unwrap(),
        ] {
            net.init(99, Init::StandardNormal);
            let back = decode(&encode(&net)).unwrap();
            let a: Vec<u64> = net.flat_params().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.flat_params().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
            assert_eq!(back.structure(), net.structure());
        }
    }

    #[test]
    fn header_is_first_line() {
        let net = Network::conv_stack(&[2, 1], 3).unwrap();
        let text = encode(&net);
        assert_eq!(text.lines().next().unwrap(), "nneq-checkpoint 1 cnn 2,1 3");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn rejects_corrupt_input() {
        let net = Network::conv_stack(&[2, 1], 3).unwrap();
        let text = encode(&net);
        assert!(decode(&text.replace("cnn", "rnn")).is_err());
        assert!(decode(&text.replace("checkpoint 1", "checkpoint 2")).is_err());
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(decode(&truncated).is_err());
        assert!(decode("").is_err());
    }
}
