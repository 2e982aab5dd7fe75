//! CSV data behind the two flow figures.

use std::io::Write;

use periclock::classical_dynamics::figure_data;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
}

#[derive(Serialize)]
struct StepRow {
    s: f64,
    value: f64,
}

#[derive(Serialize)]
struct MarkedRow {
    s: f64,
    #[serde(rename = "F_value")]
    f_value: f64,
    gauge_fix_marker: u8,
}

pub fn write_csv<W: Write>(fig: Figure, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in figure_data() {
        match fig {
            Figure::Fig1 => w.serialize(StepRow { s: p.s, value: p.value })?,
            Figure::Fig2 => w.serialize(MarkedRow { s: p.s, f_value: p.value, gauge_fix_marker: p.marker as u8 })?,
        }
    }
    w.flush()?;
    Ok(())
}
