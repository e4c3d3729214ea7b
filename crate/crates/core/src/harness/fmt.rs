//! Floats written with 17 significant digits, in CSV cells and JSON numbers.

use serde::ser::{SerializeSeq, Serializer};
use serde_json::value::RawValue;

pub fn f17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // JSON has no non-finite numbers
        "null".to_string()
    }
}

fn raw(v: f64) -> Box<RawValue> {
    RawValue::from_string(f17(v)).expect("formatted float is valid JSON")
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_some(&raw(*v))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            seq.serialize_element(&raw(x))?;
        }
        seq.end()
    }
}

pub mod opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&raw(*x)),
            None => s.serialize_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize)]
    struct Row {
        #[serde(serialize_with = "super::serialize")]
        a: f64,
        #[serde(serialize_with = "super::vec::serialize")]
        b: Vec<f64>,
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, 0.0] {
            let s = f17(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
            let mant = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mant.len(), 17);
        }
        let j = serde_json::to_string(&Row { a: 0.5, b: vec![0.25, f64::NAN] }).unwrap();
        assert_eq!(j, r#"{"a":5.0000000000000000e-1,"b":[2.5000000000000000e-1,null]}"#);
    }
}
