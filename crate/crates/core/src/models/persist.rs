//! Plain-text model files.
//!
//! ```text
//! wxcast-model 1
//! arch LSTM_PC
//! testing 3
//! norm <t_min> <t_max> <h_min> <h_max>
//! hidden 4                 # LSTM / LSTM_PC
//! widths 6 3 3 1           # ANN / DNN
//! members 3 hidden 20      # ELM
//! tensor <name> <len>
//! <len whitespace-separated values>
//! ...
//! end
//! ```
//!
//! Values are written with 17 significant digits, so a save/load cycle is
//! bit-exact. Tensors appear in the model's canonical parameter order.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::{NormalizationParams, WindowSpec};
use crate::math::Matrix;

use super::{ElmEnsemble, ElmParams, FeedforwardParams, Layer, LstmParams, LstmPcParams, ModelKind, ModelParams, Params};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "wxcast-model";

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A trained model with everything needed to predict in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub spec: WindowSpec,
    pub norm: NormalizationParams,
}

impl Params for ElmParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("input_weights", self.input_weights.as_slice()),
            ("biases", &self.biases),
            ("output_weights", &self.output_weights),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.input_weights.as_mut_slice(), &mut self.biases, &mut self.output_weights]
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_tensors<P: Params>(out: &mut String, params: &P) {
    for (name, values) in params.tensors() {
        let _ = writeln!(out, "tensor {name} {}", values.len());
        let line: Vec<String> = values.iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

pub fn to_text(model: &SavedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "arch {}", model.params.kind());
    let _ = writeln!(out, "testing {}", model.spec.testing_id());
    let n = &model.norm;
    let _ = writeln!(out, "norm {} {} {} {}", num(n.t_min), num(n.t_max), num(n.h_min), num(n.h_max));
    match &model.params {
        ModelParams::Feedforward(p) => {
            let mut widths = vec![p.input_width()];
            widths.extend(p.layers().iter().map(|l| l.weights.rows()));
            let widths: Vec<String> = widths.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "widths {}", widths.join(" "));
            write_tensors(&mut out, p);
        }
        ModelParams::Elm(e) => {
            let hidden = e.members.first().map_or(0, ElmParams::hidden_count);
            let _ = writeln!(out, "members {} hidden {hidden}", e.members.len());
            for m in &e.members {
                write_tensors(&mut out, m);
            }
        }
        ModelParams::Lstm(p) => {
            let _ = writeln!(out, "hidden {}", p.hidden_size());
            write_tensors(&mut out, p);
        }
        ModelParams::LstmPc(p) => {
            let _ = writeln!(out, "hidden {}", p.hidden_size());
            write_tensors(&mut out, p);
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> PersistError {
        PersistError::Parse { line: self.line, message: message.into() }
    }

    fn next_fields(&mut self) -> Result<Vec<&'a str>, PersistError> {
        for (i, raw) in self.inner.by_ref() {
            self.line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok(content.split_whitespace().collect());
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, PersistError> {
        let fields = self.next_fields()?;
        if fields.first() != Some(&key) {
            return Err(self.err(format!("expected `{key}`, found `{}`", fields.join(" "))));
        }
        Ok(fields[1..].to_vec())
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, PersistError> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn fill<P: Params>(&mut self, params: &mut P) -> Result<(), PersistError> {
        let expected: Vec<(&'static str, usize)> = params.tensors().iter().map(|(n, t)| (*n, t.len())).collect();
        for ((name, len), slot) in expected.into_iter().zip(params.tensors_mut()) {
            let header = self.keyed("tensor")?;
            if header.len() != 2 || header[0] != name || self.parse::<usize>(header[1])? != len {
                return Err(self.err(format!("expected tensor {name} {len}, found `{}`", header.join(" "))));
            }
            let values = self.next_fields()?;
            if values.len() != len {
                return Err(self.err(format!("tensor {name}: expected {len} values, found {}", values.len())));
            }
            for (dst, v) in slot.iter_mut().zip(values) {
                *dst = self.parse(v)?;
            }
        }
        Ok(())
    }
}

pub fn from_text(text: &str) -> Result<SavedModel, PersistError> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let version = lines.keyed(MAGIC)?;
    if version != [FORMAT_VERSION.to_string().as_str()] {
        return Err(lines.err(format!("unsupported format version `{}`", version.join(" "))));
    }
    let arch = lines.keyed("arch")?;
    let kind: ModelKind = arch
        .first()
        .ok_or_else(|| lines.err("missing arch"))?
        .parse()
        .map_err(|e: super::UnknownModelKind| lines.err(e.to_string()))?;
    let testing = lines.keyed("testing")?;
    let testing: u8 = lines.parse(testing.first().copied().unwrap_or(""))?;
    let spec = WindowSpec::new(testing).map_err(|e| lines.err(e.to_string()))?;
    let norm = lines.keyed("norm")?;
    if norm.len() != 4 {
        return Err(lines.err("norm needs four values"));
    }
    let norm = NormalizationParams {
        t_min: lines.parse(norm[0])?,
        t_max: lines.parse(norm[1])?,
        h_min: lines.parse(norm[2])?,
        h_max: lines.parse(norm[3])?,
    };

    let params = match kind {
        ModelKind::Ann | ModelKind::Dnn => {
            let widths = lines.keyed("widths")?;
            let widths = widths.iter().map(|w| lines.parse::<usize>(w)).collect::<Result<Vec<_>, _>>()?;
            if widths.len() < 2 || widths.contains(&0) {
                return Err(lines.err("widths must list at least two positive layer sizes"));
            }
            let layers = widths
                .windows(2)
                .map(|w| Layer { weights: Matrix::zeros(w[1], w[0]), biases: vec![0.0; w[1]] })
                .collect();
            let mut p = FeedforwardParams::new(kind, layers).map_err(|e| lines.err(e.to_string()))?;
            lines.fill(&mut p)?;
            ModelParams::Feedforward(p)
        }
        ModelKind::Elm => {
            let header = lines.keyed("members")?;
            if header.len() != 3 || header[1] != "hidden" {
                return Err(lines.err("expected `members <k> hidden <n>`"));
            }
            let count: usize = lines.parse(header[0])?;
            let hidden: usize = lines.parse(header[2])?;
            if count == 0 || hidden == 0 {
                return Err(lines.err("ELM needs at least one member and one hidden node"));
            }
            let mut members = Vec::with_capacity(count);
            for _ in 0..count {
                let mut m = ElmParams {
                    input_weights: Matrix::zeros(hidden, spec.input_width()),
                    biases: vec![0.0; hidden],
                    output_weights: vec![0.0; hidden],
                };
                lines.fill(&mut m)?;
                members.push(m);
            }
            ModelParams::Elm(ElmEnsemble { members })
        }
        ModelKind::Lstm | ModelKind::LstmPc => {
            let hidden = lines.keyed("hidden")?;
            let hidden: usize = lines.parse(hidden.first().copied().unwrap_or(""))?;
            if hidden == 0 {
                return Err(lines.err("hidden size must be positive"));
            }
            if kind == ModelKind::Lstm {
                let mut p = LstmParams::zeros(hidden);
                lines.fill(&mut p)?;
                ModelParams::Lstm(p)
            } else {
                let mut p = LstmPcParams::zeros(hidden);
                lines.fill(&mut p)?;
                ModelParams::LstmPc(p)
            }
        }
    };
    lines.keyed("end")?;
    Ok(SavedModel { params, spec, norm })
}

pub fn save(model: &SavedModel, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let path = path.as_ref();
    std::fs::write(path, to_text(model)).map_err(|source| PersistError::Io { path: path.display().to_string(), source })
}

pub fn load(path: impl AsRef<Path>) -> Result<SavedModel, PersistError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PersistError::Io { path: path.display().to_string(), source })?;
    from_text(&text)
}
