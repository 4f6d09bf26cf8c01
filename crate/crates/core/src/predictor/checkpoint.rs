use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{DropMode, GcnPredictor, MinMaxScaler};
use crate::error::{Error, Result};

const MAGIC: &str = "diffattack-checkpoint v1";

/// Everything needed to rebuild a [`super::TrainedModel`].
///
/// Serialized as versioned line-oriented text. Floats use Rust's shortest
/// round-trip formatting, so save/load is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: GcnPredictor,
    pub scaler: MinMaxScaler,
    pub graph_hash: String,
    pub drop_mode: DropMode,
}

fn write_matrix(out: &mut String, tag: &str, m: &Array2<f64>) {
    let _ = writeln!(out, "{tag} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "graph_hash {}", self.graph_hash);
        let _ = writeln!(out, "drop_mode {}", self.drop_mode);
        let _ = writeln!(out, "scaler {} {}", self.scaler.min, self.scaler.max);
        let _ = writeln!(out, "layers {}", self.net.n_layers());
        for w in self.net.layers() {
            write_matrix(&mut out, "weight", w);
        }
        write_matrix(&mut out, "readout", self.net.readout());
        let bias: Vec<String> = self.net.readout_bias().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "bias {}", self.net.horizon());
        let _ = writeln!(out, "{}", bias.join(" "));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Parser::new(text).checkpoint()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path, message),
            other => other,
        })
    }
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
        }
    }

    fn err(line: usize, msg: impl std::fmt::Display) -> Error {
        Error::parse("<checkpoint>", format!("line {}: {msg}", line + 1))
    }

    fn line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .ok_or_else(|| Error::parse("<checkpoint>", "unexpected end of checkpoint"))
    }

    fn tagged(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        let (no, line) = self.line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(Self::err(no, format!("expected `{tag}`")));
        }
        Ok((no, parts.collect()))
    }

    fn floats(no: usize, parts: &[&str], expected: usize) -> Result<Vec<f64>> {
        if parts.len() != expected {
            return Err(Self::err(no, format!("expected {expected} values, found {}", parts.len())));
        }
        parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| Self::err(no, format!("{p:?}: {e}"))))
            .collect()
    }

    fn usize_fields(no: usize, parts: &[&str], expected: usize) -> Result<Vec<usize>> {
        if parts.len() != expected {
            return Err(Self::err(no, "wrong number of fields"));
        }
        parts
            .iter()
            .map(|p| p.parse::<usize>().map_err(|e| Self::err(no, e)))
            .collect()
    }

    fn matrix(&mut self, tag: &str) -> Result<Array2<f64>> {
        let (no, dims) = self.tagged(tag)?;
        let dims = Self::usize_fields(no, &dims, 2)?;
        let (rows, cols) = (dims[0], dims[1]);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, line) = self.line()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            data.extend(Self::floats(no, &parts, cols)?);
        }
        Array2::from_shape_vec((rows, cols), data).map_err(|e| Self::err(no, e))
    }

    fn checkpoint(mut self) -> Result<Checkpoint> {
        let (no, magic) = self.line()?;
        if magic.trim() != MAGIC {
            return Err(Self::err(no, format!("not a checkpoint (expected `{MAGIC}`)")));
        }
        let (no, hash) = self.tagged("graph_hash")?;
        let graph_hash = match hash.as_slice() {
            [h] => h.to_string(),
            _ => return Err(Self::err(no, "missing graph hash")),
        };
        let (no, mode) = self.tagged("drop_mode")?;
        let drop_mode = match mode.as_slice() {
            [m] => m.parse()?,
            _ => return Err(Self::err(no, "missing drop mode")),
        };
        let (no, sc) = self.tagged("scaler")?;
        let sc = Self::floats(no, &sc, 2)?;
        let (no, layers) = self.tagged("layers")?;
        let n_layers = Self::usize_fields(no, &layers, 1)?[0];
        let weights = (0..n_layers)
            .map(|_| self.matrix("weight"))
            .collect::<Result<Vec<_>>>()?;
        let readout = self.matrix("readout")?;
        let (no, len) = self.tagged("bias")?;
        let len = Self::usize_fields(no, &len, 1)?[0];
        let (no, line) = self.line()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bias = Array1::from(Self::floats(no, &parts, len)?);
        Ok(Checkpoint {
            net: GcnPredictor::from_weights(weights, readout, bias)?,
            scaler: MinMaxScaler { min: sc[0], max: sc[1] },
            graph_hash,
            drop_mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn bits(c: &Checkpoint) -> Vec<u64> {
        c.net
            .layers()
            .iter()
            .flat_map(|w| w.iter())
            .chain(c.net.readout().iter())
            .chain(c.net.readout_bias().iter())
            .map(|v| v.to_bits())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn text_round_trip_is_bit_exact(seed in any::<u64>(), s in 1usize..6, h in 1usize..5, lo in -100.0f64..100.0) {
            let net = GcnPredictor::new(s, &[h, h + 1], 2, seed).unwrap();
            let ckpt = Checkpoint {
                net,
                scaler: MinMaxScaler { min: lo, max: lo + 1.0 / 3.0 },
                graph_hash: "ab12".into(),
                drop_mode: DropMode::DropEdge,
            };
            let back = Checkpoint::from_text(&ckpt.to_text()).unwrap();
            prop_assert_eq!(bits(&ckpt), bits(&back));
            prop_assert_eq!(ckpt.scaler.max.to_bits(), back.scaler.max.to_bits());
            prop_assert_eq!(&back, &ckpt);
        }
    }

    #[test]
    fn rejects_foreign_text() {
        assert!(Checkpoint::from_text("hello\n").is_err());
        let net = GcnPredictor::new(2, &[3], 1, 0).unwrap();
        let ckpt = Checkpoint {
            net,
            scaler: MinMaxScaler { min: 0.0, max: 1.0 },
            graph_hash: "00".into(),
            drop_mode: DropMode::None,
        };
        let text = ckpt.to_text();
        let truncated: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(Checkpoint::from_text(&truncated).is_err());
    }
}
