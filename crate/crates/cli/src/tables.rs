//! The `thresholds` and `catalog` listings.

use std::fmt::Write;

use configlab::geometry::{catalog, threshold_for, Side, MAP_NAMES};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub map: String,
    pub d1: usize,
    pub d2: usize,
    pub k: usize,
    pub alpha: String,
    pub beta: String,
    pub threshold: String,
}

/// One row per cataloged map instance.
pub fn cmd_thresholds() -> Vec<ThresholdRow> {
    catalog()
        .into_iter()
        .map(|m| ThresholdRow {
            map: m.label(),
            d1: m.d1(),
            d2: m.d2(),
            k: m.k(),
            alpha: m.alpha().to_string(),
            beta: m.beta().to_string(),
            threshold: threshold_for(&m)
                .expect("cataloged maps have thresholds")
                .to_string(),
        })
        .collect()
}

pub fn render_thresholds(rows: &[ThresholdRow]) -> String {
    let header = ["map", "d1", "d2", "k", "alpha", "beta", "threshold"];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.map.clone(),
                r.d1.to_string(),
                r.d2.to_string(),
                r.k.to_string(),
                r.alpha.clone(),
                r.beta.clone(),
                r.threshold.clone(),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let cols: Vec<String> = row
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", cols.join("  ").trim_end()).unwrap();
    };
    line(&mut out, &header);
    for row in &cells {
        line(&mut out, &row.each_ref().map(String::as_str));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub map: String,
    pub x_space: String,
    pub y_space: String,
    pub k: usize,
    pub evaluable: bool,
    pub translation_invariant: bool,
}

pub fn cmd_catalog() -> Vec<CatalogEntry> {
    catalog()
        .into_iter()
        .map(|m| {
            let space = |side| {
                let s = m.space(side);
                format!("{} of R^{}", s.name(), s.ambient())
            };
            CatalogEntry {
                map: m.label(),
                x_space: space(Side::X),
                y_space: space(Side::Y),
                k: m.k(),
                evaluable: m.is_evaluable(),
                translation_invariant: m.is_translation_invariant(),
            }
        })
        .collect()
}

pub fn render_catalog(entries: &[CatalogEntry]) -> String {
    let mut out = format!("map names: {}\n\n", MAP_NAMES.join(", "));
    for e in entries {
        let mut flags = Vec::new();
        if !e.evaluable {
            flags.push("threshold only");
        }
        if e.translation_invariant {
            flags.push("translation invariant");
        }
        let flags = if flags.is_empty() {
            String::new()
        } else {
            format!("  [{}]", flags.join(", "))
        };
        writeln!(
            out,
            "{}: {} x {} -> R^{}{}",
            e.map, e.x_space, e.y_space, e.k, flags
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rows() {
        let rows = cmd_thresholds();
        let heis = rows.iter().find(|r| r.map == "heisenberg").unwrap();
        assert_eq!(
            (heis.k, heis.beta.as_str(), heis.threshold.as_str()),
            (2, "1/6", "16/3")
        );
        let sp = rows.iter().find(|r| r.map == "sphere_point(d=3)").unwrap();
        assert_eq!((sp.d1, sp.k, sp.threshold.as_str()), (4, 1, "5"));
        let mc = rows.iter().find(|r| r.map == "moment_curve(d=3)").unwrap();
        assert_eq!((mc.k, mc.threshold.as_str()), (2, "16/3"));
    }

    #[test]
    fn rendering_is_aligned() {
        let text = render_thresholds(&cmd_thresholds());
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("map "));
        assert_eq!(lines.count(), cmd_thresholds().len());
        assert!(render_catalog(&cmd_catalog())
            .contains("heisenberg: points of R^3 x points of R^3 -> R^2"));
    }
}
