//! Flat `key=value` run manifests.
//!
//! Keys starting with `timing_` hold wall-clock measurements and
//! timestamps; every other value is a pure function of the inputs and the
//! echoed configuration.

use std::fmt::{Display, Write as _};
use std::time::{SystemTime, UNIX_EPOCH};

pub const TIMING_PREFIX: &str = "timing_";

#[derive(Debug, Default, Clone)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn timing(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.set(&format!("{TIMING_PREFIX}{key}"), value)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_keeps_order_and_overwrites() {
        let mut m = Manifest::new();
        m.set("b", 1).set("a", "x").set("b", 2).timing("wall_s", 0.5);
        assert_eq!(m.render(), "b=2\na=x\ntiming_wall_s=0.5\n");
    }
}
