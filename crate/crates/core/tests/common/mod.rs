#![allow(dead_code)]

use std::collections::BTreeMap;

use rtlic_core::frontend::{load_design, ElaboratedDesign, SourceDesign};

pub const RAM: &str = include_str!("../../fixtures/ram.v");

pub fn ram_params() -> BTreeMap<String, i64> {
    [("ADDR_W", 4), ("DATA_W", 8), ("ADDR", 4), ("DATA", 0xAB)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn ram() -> ElaboratedDesign {
    load_design(&SourceDesign::new("ram.v", RAM), &ram_params()).unwrap()
}

pub fn design(text: &str) -> ElaboratedDesign {
    load_design(&SourceDesign::new("t.v", text), &BTreeMap::new()).unwrap()
}
