//! Delimited-text datasets with unit-suffixed headers.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::VisibilityScan;
use crate::propagation::PulseWaveform;
use crate::relaxation::{HoleDecaySeries, ProbeRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    Waveform,
    OrbachLifetimes,
    DirectLifetimes,
    InterleavedScans,
    HoleDecay,
    EfficiencyCurve,
    VisibilityScan,
    Spectrum,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Waveform => &["time_s", "re", "im"],
            Schema::OrbachLifetimes => &["temperature_K", "lifetime_s", "sigma_s"],
            Schema::DirectLifetimes => &["field_T", "lifetime_s", "sigma_s"],
            Schema::InterleavedScans => &["delay_s", "freq_Hz", "signal_counts", "repetition", "probe_index"],
            Schema::HoleDecay => &["delay_s", "area", "sigma"],
            Schema::EfficiencyCurve => &["storage_time_s", "efficiency", "sigma"],
            Schema::VisibilityScan => &["phase_rad", "counts", "sigma"],
            Schema::Spectrum => &["freq_Hz", "power"],
        }
    }

    /// Schemas keyed on their first column: repeated keys are averaged.
    fn merges_duplicates(self) -> bool {
        matches!(
            self,
            Schema::OrbachLifetimes
                | Schema::DirectLifetimes
                | Schema::HoleDecay
                | Schema::EfficiencyCurve
                | Schema::VisibilityScan
        )
    }
}

/// Column-major numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub columns: Vec<Vec<f64>>,
    /// Rows folded into an earlier row with the same key.
    pub merged_duplicates: usize,
}

impl Table {
    pub fn new(schema: Schema, columns: Vec<Vec<f64>>) -> Result<Self> {
        let width = schema.columns().len();
        if columns.len() != width {
            return Err(Error::domain(format!("{schema:?} needs {width} columns, got {}", columns.len())));
        }
        if columns.iter().any(|c| c.len() != columns[0].len()) {
            return Err(Error::domain("columns have different lengths"));
        }
        Ok(Self {
            schema,
            columns,
            merged_duplicates: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> &[f64] {
        let i = self
            .schema
            .columns()
            .iter()
            .position(|c| *c == name)
            .unwrap_or_else(|| panic!("{:?} has no column `{name}`", self.schema));
        &self.columns[i]
    }

    /// Averages rows sharing a key (`sigma` combined as `√Σσ² / n`) and
    /// sorts by key.
    fn merge_duplicates(&mut self) {
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &k) in self.columns[0].iter().enumerate() {
            groups.entry(ordered_key(k)).or_default().push(i);
        }
        let merged = self.len() - groups.len();
        let sigma_col = self.columns.len() - 1;
        let mut out = vec![Vec::with_capacity(groups.len()); self.columns.len()];
        for rows in groups.values() {
            let n = rows.len() as f64;
            for (c, col) in self.columns.iter().enumerate() {
                let v = if c == sigma_col {
                    rows.iter().map(|&r| col[r] * col[r]).sum::<f64>().sqrt() / n
                } else {
                    rows.iter().map(|&r| col[r]).sum::<f64>() / n
                };
                out[c].push(v);
            }
        }
        self.columns = out;
        self.merged_duplicates = merged;
    }
}

fn ordered_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if v.is_sign_negative() {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message: message.into(),
    }
}

/// Reads a dataset. The header must name exactly the schema's columns (in
/// any order); every cell must be a finite number.
pub fn read_table(path: &Path, schema: Schema) -> Result<Table> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let expected = schema.columns();
    let mut index = Vec::with_capacity(expected.len());
    for name in expected {
        match header.iter().position(|h| h == *name) {
            Some(i) => index.push(i),
            None => return Err(parse_error(path, 1, format!("missing column `{name}`"))),
        }
    }
    if let Some(extra) = header.iter().find(|h| !expected.contains(h)) {
        return Err(parse_error(path, 1, format!("unexpected column `{extra}`")));
    }
    let mut columns = vec![Vec::new(); expected.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (c, &i) in index.iter().enumerate() {
            let cell = &record[i];
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, line, format!("`{}`: `{cell}` is not a number", expected[c])))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("`{}`: non-finite value `{cell}`", expected[c])));
            }
            columns[c].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    let mut table = Table {
        schema,
        columns,
        merged_duplicates: 0,
    };
    if schema.merges_duplicates() {
        table.merge_duplicates();
    }
    Ok(table)
}

/// Formats with the shortest representation that parses back exactly.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v:e}")
}

pub fn table_to_string(table: &Table) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::Io(std::io::Error::other(e));
    writer.write_record(table.schema.columns()).map_err(map)?;
    for r in 0..table.len() {
        writer
            .write_record(table.columns.iter().map(|c| format_value(c[r])))
            .map_err(map)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    std::fs::write(path, table_to_string(table)?)?;
    Ok(())
}

pub fn waveform_table(pulse: &PulseWaveform) -> Table {
    let t = (0..pulse.len()).map(|i| pulse.time(i)).collect();
    let re = pulse.samples.iter().map(|s| s.re).collect();
    let im = pulse.samples.iter().map(|s| s.im).collect();
    Table::new(Schema::Waveform, vec![t, re, im]).expect("three columns")
}

/// Waveform from a table with a uniform time column.
pub fn waveform_from_table(table: &Table, carrier_detuning_hz: f64) -> Result<PulseWaveform> {
    let t = table.column("time_s");
    if t.len() < 2 {
        return Err(Error::validation("time_s", "need at least two samples"));
    }
    let dt = t[1] - t[0];
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs()) {
        return Err(Error::validation("time_s", "samples must be uniformly spaced"));
    }
    let samples = table
        .column("re")
        .iter()
        .zip(table.column("im"))
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    PulseWaveform::from_samples(dt, t[0], samples, carrier_detuning_hz)
}

pub fn hole_decay_from_table(table: &Table) -> HoleDecaySeries {
    HoleDecaySeries {
        delays: table.column("delay_s").to_vec(),
        areas: table.column("area").to_vec(),
        area_uncertainties: table.column("sigma").to_vec(),
    }
}

pub fn hole_decay_table(series: &HoleDecaySeries) -> Table {
    Table::new(
        Schema::HoleDecay,
        vec![series.delays.clone(), series.areas.clone(), series.area_uncertainties.clone()],
    )
    .expect("three columns")
}

pub fn probe_records_from_table(table: &Table) -> Result<Vec<ProbeRecord>> {
    let as_index = |v: f64, name: &str| {
        if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
            Ok(v as u32)
        } else {
            Err(Error::validation(name, format!("`{v}` is not a non-negative integer")))
        }
    };
    (0..table.len())
        .map(|i| {
            Ok(ProbeRecord {
                delay_s: table.columns[0][i],
                freq_hz: table.columns[1][i],
                signal_counts: table.columns[2][i],
                repetition: as_index(table.columns[3][i], "repetition")?,
                probe_index: as_index(table.columns[4][i], "probe_index")?,
            })
        })
        .collect()
}

pub fn visibility_from_table(table: &Table) -> VisibilityScan {
    let sigma = table.column("sigma");
    VisibilityScan {
        phases: table.column("phase_rad").to_vec(),
        integrated_counts: table.column("counts").to_vec(),
        // an all-zero sigma column means "unweighted"
        count_sigmas: if sigma.iter().all(|s| *s == 0.0) {
            Vec::new()
        } else {
            sigma.to_vec()
        },
    }
}

/// `None` when every sigma is zero.
pub fn optional_sigmas(sigma: &[f64]) -> Option<&[f64]> {
    (!sigma.iter().all(|s| *s == 0.0)).then_some(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_columns_in_any_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "sigma_s,temperature_K,lifetime_s\n0.1,5,1.0\n0.2,6,0.5\n");
        let t = read_table(&p, Schema::OrbachLifetimes).unwrap();
        assert_eq!(t.column("temperature_K"), &[5.0, 6.0]);
        assert_eq!(t.column("sigma_s"), &[0.1, 0.2]);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "temperature_K,lifetime_s\n5,1\n");
        let err = read_table(&p, Schema::OrbachLifetimes).unwrap_err();
        assert!(err.to_string().contains("sigma_s"), "{err}");
    }

    #[test]
    fn bad_cells_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "phase_rad,counts,sigma\n0,1,1\n1,abc,1\n");
        match read_table(&p, Schema::VisibilityScan) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("counts"));
            }
            other => panic!("{other:?}"),
        }
        let p = write(&dir, "b.csv", "phase_rad,counts,sigma\n0,1,1\n1,NaN,1\n");
        assert!(matches!(read_table(&p, Schema::VisibilityScan), Err(Error::Parse { line: 3, .. })));
        let p = write(&dir, "c.csv", "phase_rad,counts,sigma\n0,1\n");
        assert!(matches!(read_table(&p, Schema::VisibilityScan), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn duplicate_keys_are_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "delay_s,area,sigma\n0.002,1,0.3\n0.001,2,0.1\n0.002,3,0.4\n");
        let t = read_table(&p, Schema::HoleDecay).unwrap();
        assert_eq!(t.merged_duplicates, 1);
        assert_eq!(t.column("delay_s"), &[0.001, 0.002]);
        assert_eq!(t.column("area"), &[2.0, 2.0]);
        assert!((t.column("sigma")[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn interleaved_rows_are_not_merged() {
        let dir = tempfile::tempdir().unwrap();
        let body = "delay_s,freq_Hz,signal_counts,repetition,probe_index\n0.1,5,10,0,0\n0.1,5,12,1,3\n";
        let t = read_table(&write(&dir, "a.csv", body), Schema::InterleavedScans).unwrap();
        assert_eq!(t.len(), 2);
        let recs = probe_records_from_table(&t).unwrap();
        assert_eq!(recs[1].probe_index, 3);
    }
}
