//! Debug serialization: a JSON header next to a flat CSV of components.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chart::FlatChart;
use super::field::{Slot, TensorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub chart: FlatChart,
    pub variance: Vec<Slot>,
    pub num_points: usize,
    pub ncomp: usize,
}

impl FieldHeader {
    pub fn of(field: &TensorField) -> Self {
        Self {
            format: "ocs-field/1".into(),
            chart: (**field.chart()).clone(),
            variance: field.variance().to_vec(),
            num_points: field.num_points(),
            ncomp: field.ncomp(),
        }
    }
}

/// Write the header as pretty JSON.
pub fn write_header<W: Write>(field: &TensorField, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &FieldHeader::of(field)).map_err(|e| Error::InvalidSpec(e.to_string()))
}

/// Write one CSV row per grid point: `point, i_1..i_m, c_0..c_{ncomp-1}`.
pub fn write_values<W: Write>(field: &TensorField, out: W) -> Result<()> {
    let chart = field.chart();
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidSpec(e.to_string());
    let mut header = vec!["point".to_string()];
    header.extend((0..chart.active_axes().len()).map(|s| format!("i{}", chart.active_axes()[s])));
    header.extend((0..field.ncomp()).map(|c| format!("c{c}")));
    w.write_record(&header).map_err(io)?;
    for p in 0..field.num_points() {
        let mut row = vec![p.to_string()];
        row.extend(chart.grid_index(p).iter().map(|i| i.to_string()));
        row.extend(field.at(p).iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidSpec(e.to_string()))
}

/// Rebuild a field from a header and its CSV body.
pub fn read_field<R: Read, S: Read>(header: R, values: S) -> Result<TensorField> {
    let h: FieldHeader = serde_json::from_reader(header).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let chart = FlatChart::new(h.chart.basis().clone(), h.chart.active_axes().to_vec(), h.chart.resolution())?
        .with_phase(h.chart.phase());
    let skip = 1 + chart.active_axes().len();
    let mut data = Vec::with_capacity(h.num_points * h.ncomp);
    let mut r = csv::Reader::from_reader(values);
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::InvalidSpec(e.to_string()))?;
        for s in rec.iter().skip(skip) {
            data.push(s.parse::<f64>().map_err(|e| Error::InvalidSpec(e.to_string()))?);
        }
    }
    TensorField::new(Arc::new(chart), h.variance, data)
}
