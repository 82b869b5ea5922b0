//! NNet text format.
//!
//! Layout after any leading `//` comment lines:
//!
//! ```text
//! numLayers,inputSize,outputSize,maxLayerSize,
//! size_0,size_1,...,size_L,
//! 0,                         (unused flag)
//! input minima (d values)
//! input maxima (d values)
//! means (d + 1 values)
//! ranges (d + 1 values)
//! per layer k: size_{k+1} weight rows of size_k values, then size_{k+1} bias rows
//! ```
//!
//! Every hidden layer is followed by ReLU; the output layer is affine.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, Layer, Matrix, Network, Normalization};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut inner = text.lines().enumerate().peekable();
        while let Some((_, l)) = inner.peek() {
            if l.trim_start().starts_with("//") {
                inner.next();
            } else {
                break;
            }
        }
        Self {
            inner,
            last_line: 0,
        }
    }

    /// Next non-blank line, with its 1-based line number.
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last_line = i + 1;
            if !l.trim().is_empty() {
                return Ok((i + 1, l));
            }
        }
        Err(Error::Parse {
            line: self.last_line + 1,
            msg: format!("truncated file: expected {what}"),
        })
    }

    fn values<T: Scalar>(&mut self, what: &str, expected: usize) -> Result<Vec<T>> {
        let (line, text) = self.next_line(what)?;
        let vals = split_values::<T>(line, text)?;
        if vals.len() != expected {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "dimension mismatch in {what}: found {} values, expected {expected}",
                    vals.len()
                ),
            });
        }
        Ok(vals)
    }
}

fn split_values<T: Scalar>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse number {t:?}"),
            })
        })
        .collect()
}

fn split_ints(line: usize, text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("malformed {what}: {t:?} is not a non-negative integer"),
            })
        })
        .collect()
}

pub fn parse_nnet<T: Scalar>(text: &str) -> Result<Network<T>> {
    let mut lines = Lines::new(text);

    let (hline, htext) = lines.next_line("header")?;
    let header = split_ints(hline, htext, "header")?;
    if header.len() < 4 {
        return Err(Error::Parse {
            line: hline,
            msg: format!(
                "malformed header: expected numLayers,inputSize,outputSize,maxLayerSize, got {} fields",
                header.len()
            ),
        });
    }
    let (num_layers, input_size, output_size) = (header[0], header[1], header[2]);
    if num_layers == 0 {
        return Err(Error::Parse {
            line: hline,
            msg: "malformed header: numLayers must be positive".into(),
        });
    }

    let (sline, stext) = lines.next_line("layer sizes")?;
    let sizes = split_ints(sline, stext, "layer sizes")?;
    if sizes.len() != num_layers + 1 {
        return Err(Error::Parse {
            line: sline,
            msg: format!(
                "dimension mismatch: {} layer sizes for {num_layers} layers",
                sizes.len()
            ),
        });
    }
    if sizes[0] != input_size || sizes[num_layers] != output_size {
        return Err(Error::Parse {
            line: sline,
            msg: format!(
                "dimension mismatch: layer sizes {sizes:?} disagree with header input {input_size} / output {output_size}"
            ),
        });
    }
    if let Some(k) = sizes.iter().position(|s| *s == 0) {
        return Err(Error::Parse {
            line: sline,
            msg: format!("layer size {k} is zero"),
        });
    }

    lines.next_line("flag line")?;
    let input_mins = lines.values::<T>("input minima", input_size)?;
    let input_maxes = lines.values::<T>("input maxima", input_size)?;
    let means = lines.values::<T>("means", input_size + 1)?;
    let (rline, rtext) = lines.next_line("ranges")?;
    let ranges = split_values::<T>(rline, rtext)?;
    if ranges.len() != input_size + 1 {
        return Err(Error::Parse {
            line: rline,
            msg: format!(
                "dimension mismatch in ranges: found {} values, expected {}",
                ranges.len(),
                input_size + 1
            ),
        });
    }
    if let Some(i) = ranges.iter().position(|r| !(*r > T::zero())) {
        return Err(Error::Parse {
            line: rline,
            msg: format!("range entry {i} is not strictly positive"),
        });
    }

    let mut layers = Vec::with_capacity(num_layers);
    for k in 0..num_layers {
        let (cols, rows) = (sizes[k], sizes[k + 1]);
        let mut w = Vec::with_capacity(rows);
        for r in 0..rows {
            w.push(lines.values::<T>(&format!("layer {k} weight row {r}"), cols)?);
        }
        let mut b = Vec::with_capacity(rows);
        for r in 0..rows {
            b.extend(lines.values::<T>(&format!("layer {k} bias row {r}"), 1)?);
        }
        let act = if k + 1 == num_layers {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(Layer::new(Matrix::from_rows(w)?, b, act)?);
    }
    if let Ok((line, _)) = lines.next_line("") {
        return Err(Error::Parse {
            line,
            msg: "dimension mismatch: trailing data after the last layer".into(),
        });
    }

    Network::new(
        layers,
        Normalization {
            input_mins,
            input_maxes,
            means,
            ranges,
        },
    )
}

fn push_row<T: Scalar>(out: &mut String, vals: &[T]) {
    for v in vals {
        // 17 significant digits round-trips every f64.
        let _ = write!(out, "{v:.16e},");
    }
    out.push('\n');
}

pub fn serialize_nnet<T: Scalar>(net: &Network<T>) -> String {
    let sizes = net.layer_sizes();
    let mut out = String::new();
    out.push_str("// Feed-forward ReLU network, NNet format\n");
    let max = sizes.iter().copied().max().unwrap_or(0);
    let _ = writeln!(
        out,
        "{},{},{},{max},",
        net.layers().len(),
        net.input_dim(),
        net.output_dim()
    );
    for s in &sizes {
        let _ = write!(out, "{s},");
    }
    out.push('\n');
    out.push_str("0,\n");
    let norm = net.normalization();
    push_row(&mut out, &norm.input_mins);
    push_row(&mut out, &norm.input_maxes);
    push_row(&mut out, &norm.means);
    push_row(&mut out, &norm.ranges);
    for layer in net.layers() {
        for row in layer.weights.iter_rows() {
            push_row(&mut out, row);
        }
        for b in &layer.biases {
            push_row(&mut out, std::slice::from_ref(b));
        }
    }
    out
}

pub fn load_nnet<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_nnet(&text)
}

pub fn save_nnet<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_nnet(net)).map_err(|e| Error::io(path, e))
}
