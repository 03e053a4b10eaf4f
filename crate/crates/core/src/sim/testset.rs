use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bv;
use crate::frontend::ElaboratedDesign;

/// Input values for one clock cycle; missing inputs read as zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestVector {
    pub cycle: u32,
    pub inputs: BTreeMap<String, u64>,
}

/// Vectors for cycles `1..=len`, contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSet {
    pub vectors: Vec<TestVector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestSetError {
    #[error("malformed test set: {0}")]
    Parse(String),
    #[error("test set cycles must run 1, 2, 3, ...; found cycle {found} at position {position}")]
    Cycles { position: usize, found: u32 },
    #[error("cycle {cycle}: `{name}` is not a data input of the design")]
    UnknownInput { cycle: u32, name: String },
    #[error("cycle {cycle}: value {value} does not fit `{name}` ({width} bits)")]
    Width { cycle: u32, name: String, value: String, width: u32 },
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    cycle: u32,
    inputs: BTreeMap<String, String>,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Value driven on `input` at `cycle`, zero beyond the end.
    pub fn value(&self, cycle: u32, input: &str) -> u64 {
        self.vectors.get(cycle as usize - 1).and_then(|v| v.inputs.get(input).copied()).unwrap_or(0)
    }

    /// All-zero vectors for `cycles` cycles over the design's data inputs.
    pub fn zeros(d: &ElaboratedDesign, cycles: u32) -> TestSet {
        let mut t = TestSet::default();
        t.pad_to(d, cycles);
        t
    }

    /// Appends zero vectors until the set covers `cycles` cycles.
    pub fn pad_to(&mut self, d: &ElaboratedDesign, cycles: u32) {
        while (self.vectors.len() as u32) < cycles {
            let cycle = self.vectors.len() as u32 + 1;
            let inputs = d.data_inputs().iter().map(|s| (s.name.clone(), 0)).collect();
            self.vectors.push(TestVector { cycle, inputs });
        }
    }

    /// The first `cycles` vectors.
    pub fn truncated(&self, cycles: u32) -> TestSet {
        TestSet { vectors: self.vectors.iter().take(cycles as usize).cloned().collect() }
    }

    /// Vectors for cycles `from..=to`, renumbered from 1.
    pub fn slice(&self, from: u32, to: u32) -> TestSet {
        let vectors = self
            .vectors
            .iter()
            .filter(|v| v.cycle >= from && v.cycle <= to)
            .enumerate()
            .map(|(i, v)| TestVector { cycle: i as u32 + 1, inputs: v.inputs.clone() })
            .collect();
        TestSet { vectors }
    }

    /// Concatenation with cycles renumbered.
    pub fn concat(parts: &[TestSet]) -> TestSet {
        let mut vectors = Vec::new();
        for p in parts {
            for v in &p.vectors {
                vectors.push(TestVector { cycle: vectors.len() as u32 + 1, inputs: v.inputs.clone() });
            }
        }
        TestSet { vectors }
    }

    /// Checks cycle numbering, input names and value widths.
    pub fn validate(&self, d: &ElaboratedDesign) -> Result<(), TestSetError> {
        for (i, v) in self.vectors.iter().enumerate() {
            if v.cycle != i as u32 + 1 {
                return Err(TestSetError::Cycles { position: i, found: v.cycle });
            }
            for (name, &value) in &v.inputs {
                let Some(info) = d.signal(name).filter(|s| s.is_data_input()) else {
                    return Err(TestSetError::UnknownInput { cycle: v.cycle, name: name.clone() });
                };
                if !bv::fits(value, info.width) {
                    return Err(TestSetError::Width {
                        cycle: v.cycle,
                        name: name.clone(),
                        value: bv::to_hex(value),
                        width: info.width,
                    });
                }
            }
        }
        Ok(())
    }

    /// `[{"cycle":1,"inputs":{"addr":"0x4",...}}, ...]`
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("test set serializes")
    }

    pub fn from_json(text: &str) -> Result<TestSet, TestSetError> {
        let rows: Vec<VectorJson> = serde_json::from_str(text).map_err(|e| TestSetError::Parse(e.to_string()))?;
        let mut vectors = Vec::new();
        for (i, r) in rows.into_iter().enumerate() {
            if r.cycle != i as u32 + 1 {
                return Err(TestSetError::Cycles { position: i, found: r.cycle });
            }
            let mut inputs = BTreeMap::new();
            for (k, s) in r.inputs {
                let v = bv::parse_hex(&s)
                    .ok_or_else(|| TestSetError::Parse(format!("cycle {}: bad value `{s}` for `{k}`", r.cycle)))?;
                inputs.insert(k, v);
            }
            vectors.push(TestVector { cycle: r.cycle, inputs });
        }
        Ok(TestSet { vectors })
    }
}

impl Serialize for TestSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<VectorJson> = self
            .vectors
            .iter()
            .map(|v| VectorJson {
                cycle: v.cycle,
                inputs: v.inputs.iter().map(|(k, &x)| (k.clone(), bv::to_hex(x))).collect(),
            })
            .collect();
        rows.serialize(s)
    }
}
