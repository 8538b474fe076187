//! Deterministic JSON output: fixed field order (struct declaration order)
//! and every float written with 17 significant digits, which round-trips
//! exactly through any correct parser.

use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::Result;
use crate::model::{HugoniotCurve, HugoniotPoint, Orientation, State, SystemModel};

/// Serde adapter writing a `DVector<f64>` as a plain array.
pub mod dvector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, ser: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DVector<f64>, D::Error> {
        Vec::<f64>::deserialize(de).map(DVector::from_vec)
    }
}

fn write_sig17<W: ?Sized + io::Write>(writer: &mut W, value: f64) -> io::Result<()> {
    if value.is_finite() {
        write!(writer, "{value:.16e}")
    } else {
        writer.write_all(b"null")
    }
}

/// Wraps a serde_json formatter, replacing float output with 17 significant digits.
struct Sig17<F>(F);

macro_rules! delegate {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
                self.0.$name(writer)
            }
        )*
    };
}

macro_rules! delegate_first {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
                self.0.$name(writer, first)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_sig17(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_sig17(writer, value as f64)
    }

    delegate!(
        begin_array,
        end_array,
        end_array_value,
        begin_object,
        end_object,
        end_object_key,
        begin_object_value,
        end_object_value,
    );
    delegate_first!(begin_array_value, begin_object_key);
}

/// Single-document (indented) JSON.
pub fn to_document<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// One-line JSON record.
pub fn to_record<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(CompactFormatter));
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn from_document<T: DeserializeOwned>(text: &str) -> serde_json::Result<T> {
    serde_json::from_str(text)
}

/// First line of the line-delimited curve format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveHeader {
    #[serde(with = "dvector")]
    pub left_state: State,
    pub family: usize,
    pub orientation: Orientation,
    pub degenerate: bool,
}

/// One line per curve point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub s: f64,
    #[serde(with = "dvector")]
    pub state: State,
    pub speed: f64,
    #[serde(with = "dvector")]
    pub state_tangent: State,
    pub speed_tangent: f64,
    pub rh_residual: f64,
}

impl CurveRecord {
    pub fn new(model: &dyn SystemModel, left: &State, p: &HugoniotPoint) -> Result<Self> {
        Ok(CurveRecord {
            s: p.s,
            state: p.state.clone(),
            speed: p.speed,
            state_tangent: p.state_tangent.clone(),
            speed_tangent: p.speed_tangent,
            rh_residual: p.rh_residual(model, left)?,
        })
    }

    pub fn point(&self) -> HugoniotPoint {
        HugoniotPoint {
            s: self.s,
            state: self.state.clone(),
            speed: self.speed,
            state_tangent: self.state_tangent.clone(),
            speed_tangent: self.speed_tangent,
        }
    }
}

/// Line-delimited curve: a header record followed by one record per point.
pub fn curve_to_lines(model: &dyn SystemModel, curve: &HugoniotCurve) -> Result<String> {
    let header = CurveHeader {
        left_state: curve.left_state.clone(),
        family: curve.family,
        orientation: curve.orientation,
        degenerate: curve.degenerate,
    };
    let mut out = to_record(&header);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&to_record(&CurveRecord::new(model, &curve.left_state, p)?));
        out.push('\n');
    }
    Ok(out)
}

/// Inverse of [`curve_to_lines`] (residual columns are dropped).
pub fn curve_from_lines(text: &str) -> serde_json::Result<HugoniotCurve> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: CurveHeader = match lines.next() {
        Some(l) => serde_json::from_str(l)?,
        None => serde_json::from_str("")?,
    };
    let points = lines
        .map(|l| serde_json::from_str::<CurveRecord>(l).map(|r| r.point()))
        .collect::<serde_json::Result<Vec<_>>>()?;
    Ok(HugoniotCurve {
        left_state: header.left_state,
        family: header.family,
        orientation: header.orientation,
        degenerate: header.degenerate,
        points,
    })
}
