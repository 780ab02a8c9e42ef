//! Canonical text encoding for signed and hashed documents.
//!
//! Documents are `serde_json::Value` trees. The encoding is compact JSON with
//! object keys in bytewise order, integers in minimal decimal form and floats
//! in their shortest round-trip form (`1e-7`, `0.1`, `2.0`). Because
//! `serde_json`'s default map is a `BTreeMap<String, _>` and it formats floats
//! with `ryu`, serializing a `Value` already produces exactly this form; the
//! functions here pin that contract and reject what it cannot express.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use super::LedgerError;

/// Structured document accepted by [`canonical_encode`].
pub type Document = Value;

/// Encodes a document to its canonical UTF-8 bytes.
pub fn canonical_encode(doc: &Document) -> Result<Vec<u8>, LedgerError> {
    // `Value` cannot hold a non-finite number, so serialization only fails on
    // allocation problems; the error arm is kept for signature stability.
    serde_json::to_vec(doc).map_err(|e| LedgerError::Encoding(e.to_string()))
}

/// Encodes a document to a canonical `String`.
pub fn canonical_string(doc: &Document) -> Result<String, LedgerError> {
    serde_json::to_string(doc).map_err(|e| LedgerError::Encoding(e.to_string()))
}

/// Parses canonical (or any JSON) bytes back into a document.
pub fn parse_document(bytes: &[u8]) -> Result<Document, LedgerError> {
    serde_json::from_slice(bytes).map_err(|e| LedgerError::Encoding(e.to_string()))
}

/// Builds a float node, rejecting NaN and infinities.
pub fn float(x: f64) -> Result<Document, LedgerError> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| LedgerError::Encoding(format!("non-finite float {x}")))
}

/// Converts any serializable value into a document.
///
/// `serde_json` silently maps non-finite floats to `null`; this walks the
/// value with a finiteness probe first so such inputs become encoding errors.
pub fn to_document<T: Serialize + ?Sized>(value: &T) -> Result<Document, LedgerError> {
    value
        .serialize(FiniteProbe)
        .map_err(|e| LedgerError::Encoding(e.0))?;
    serde_json::to_value(value).map_err(|e| LedgerError::Encoding(e.to_string()))
}

/// Canonical bytes of any serializable value.
pub fn encode_value<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, LedgerError> {
    canonical_encode(&to_document(value)?)
}

/// Decodes a document into a typed value.
pub fn from_document<T: DeserializeOwned>(doc: &Document) -> Result<T, LedgerError> {
    T::deserialize(doc).map_err(|e| LedgerError::Encoding(e.to_string()))
}

// ---------------------------------------------------------------------------
// Finiteness probe: a serializer that discards everything except floats.
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct ProbeError(String);

impl std::fmt::Display for ProbeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ProbeError {}

impl serde::ser::Error for ProbeError {
    fn custom<T: std::fmt::Display>(msg: T) -> Self {
        ProbeError(msg.to_string())
    }
}

#[derive(Clone, Copy)]
struct FiniteProbe;

type ProbeResult = Result<(), ProbeError>;

impl serde::Serializer for FiniteProbe {
    type Ok = ();
    type Error = ProbeError;
    type SerializeSeq = Self;
    type SerializeTuple = Self;
    type SerializeTupleStruct = Self;
    type SerializeTupleVariant = Self;
    type SerializeMap = Self;
    type SerializeStruct = Self;
    type SerializeStructVariant = Self;

    fn serialize_bool(self, _: bool) -> ProbeResult {
        Ok(())
    }
    fn serialize_i8(self, _: i8) -> ProbeResult {
        Ok(())
    }
    fn serialize_i16(self, _: i16) -> ProbeResult {
        Ok(())
    }
    fn serialize_i32(self, _: i32) -> ProbeResult {
        Ok(())
    }
    fn serialize_i64(self, _: i64) -> ProbeResult {
        Ok(())
    }
    fn serialize_u8(self, _: u8) -> ProbeResult {
        Ok(())
    }
    fn serialize_u16(self, _: u16) -> ProbeResult {
        Ok(())
    }
    fn serialize_u32(self, _: u32) -> ProbeResult {
        Ok(())
    }
    fn serialize_u64(self, _: u64) -> ProbeResult {
        Ok(())
    }
    fn serialize_f32(self, v: f32) -> ProbeResult {
        self.serialize_f64(f64::from(v))
    }
    fn serialize_f64(self, v: f64) -> ProbeResult {
        if v.is_finite() {
            Ok(())
        } else {
            Err(ProbeError(format!("non-finite float {v}")))
        }
    }
    fn serialize_char(self, _: char) -> ProbeResult {
        Ok(())
    }
    fn serialize_str(self, _: &str) -> ProbeResult {
        Ok(())
    }
    fn serialize_bytes(self, _: &[u8]) -> ProbeResult {
        Ok(())
    }
    fn serialize_none(self) -> ProbeResult {
        Ok(())
    }
    fn serialize_some<T: ?Sized + Serialize>(self, v: &T) -> ProbeResult {
        v.serialize(self)
    }
    fn serialize_unit(self) -> ProbeResult {
        Ok(())
    }
    fn serialize_unit_struct(self, _: &'static str) -> ProbeResult {
        Ok(())
    }
    fn serialize_unit_variant(self, _: &'static str, _: u32, _: &'static str) -> ProbeResult {
        Ok(())
    }
    fn serialize_newtype_struct<T: ?Sized + Serialize>(self, _: &'static str, v: &T) -> ProbeResult {
        v.serialize(self)
    }
    fn serialize_newtype_variant<T: ?Sized + Serialize>(
        self,
        _: &'static str,
        _: u32,
        _: &'static str,
        v: &T,
    ) -> ProbeResult {
        v.serialize(self)
    }
    fn serialize_seq(self, _: Option<usize>) -> Result<Self, ProbeError> {
        Ok(self)
    }
    fn serialize_tuple(self, _: usize) -> Result<Self, ProbeError> {
        Ok(self)
    }
    fn serialize_tuple_struct(self, _: &'static str, _: usize) -> Result<Self, ProbeError> {
        Ok(self)
    }
    fn serialize_tuple_variant(
        self,
        _: &'static str,
        _: u32,
        _: &'static str,
        _: usize,
    ) -> Result<Self, ProbeError> {
        Ok(self)
    }
    fn serialize_map(self, _: Option<usize>) -> Result<Self, ProbeError> {
        Ok(self)
    }
    fn serialize_struct(self, _: &'static str, _: usize) -> Result<Self, ProbeError> {
        Ok(self)
    }
    fn serialize_struct_variant(
        self,
        _: &'static str,
        _: u32,
        _: &'static str,
        _: usize,
    ) -> Result<Self, ProbeError> {
        Ok(self)
    }
}

macro_rules! probe_compound {
    ($($tr:ident :: $method:ident),*) => {
        $(
            impl serde::ser::$tr for FiniteProbe {
                type Ok = ();
                type Error = ProbeError;
                fn $method<T: ?Sized + Serialize>(&mut self, v: &T) -> ProbeResult {
                    v.serialize(*self)
                }
                fn end(self) -> ProbeResult {
                    Ok(())
                }
            }
        )*
    };
}

probe_compound!(
    SerializeSeq::serialize_element,
    SerializeTuple::serialize_element,
    SerializeTupleStruct::serialize_field,
    SerializeTupleVariant::serialize_field
);

impl serde::ser::SerializeMap for FiniteProbe {
    type Ok = ();
    type Error = ProbeError;
    fn serialize_key<T: ?Sized + Serialize>(&mut self, k: &T) -> ProbeResult {
        k.serialize(*self)
    }
    fn serialize_value<T: ?Sized + Serialize>(&mut self, v: &T) -> ProbeResult {
        v.serialize(*self)
    }
    fn end(self) -> ProbeResult {
        Ok(())
    }
}

impl serde::ser::SerializeStruct for FiniteProbe {
    type Ok = ();
    type Error = ProbeError;
    fn serialize_field<T: ?Sized + Serialize>(&mut self, _: &'static str, v: &T) -> ProbeResult {
        v.serialize(*self)
    }
    fn end(self) -> ProbeResult {
        Ok(())
    }
}

impl serde::ser::SerializeStructVariant for FiniteProbe {
    type Ok = ();
    type Error = ProbeError;
    fn serialize_field<T: ?Sized + Serialize>(&mut self, _: &'static str, v: &T) -> ProbeResult {
        v.serialize(*self)
    }
    fn end(self) -> ProbeResult {
        Ok(())
    }
}
