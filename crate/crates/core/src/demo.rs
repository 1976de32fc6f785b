//! The bundled demo portfolio: four pains of a machine operator and its
//! manufacturer, valued by a condition-monitoring service.

use crate::domain::Portfolio;
use crate::io::json::parse_json;

pub const DEMO_JSON: &str = include_str!("../fixtures/demo.json");
pub const DEMO_CSV: &str = include_str!("../fixtures/demo.csv");

pub fn portfolio() -> Portfolio {
    parse_json(DEMO_JSON.as_bytes()).expect("bundled demo fixture is valid")
}
