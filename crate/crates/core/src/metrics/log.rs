//! Round logs: CSV (`round,acc,lA_0..lA_{g-1},n_selected,n_stragglers,bytes_up,bytes_down`)
//! and JSON.

use std::io::{Read, Write};

use super::RoundReport;
use crate::error::{Error, Result};

pub fn round_csv_header(num_labels: usize) -> Vec<String> {
    let mut h = vec!["round".to_string(), "acc".to_string()];
    h.extend((0..num_labels).map(|l| format!("lA_{l}")));
    h.extend(
        ["n_selected", "n_stragglers", "bytes_up", "bytes_down"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn ser(e: impl std::fmt::Display) -> Error {
    Error::Serialization(e.to_string())
}

pub fn write_round_csv<W: Write>(out: W, reports: &[RoundReport], num_labels: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(round_csv_header(num_labels)).map_err(ser)?;
    for r in reports {
        let mut row = vec![r.round.to_string(), r.balanced_accuracy.to_string()];
        row.extend(
            r.per_label_accuracy
                .iter()
                .map(|a| a.map(|v| v.to_string()).unwrap_or_default()),
        );
        row.push(r.selected.len().to_string());
        row.push(r.stragglers.len().to_string());
        row.push(r.bytes_up.to_string());
        row.push(r.bytes_down.to_string());
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(ser)
}

pub fn write_round_json<W: Write>(out: W, reports: &[RoundReport]) -> Result<()> {
    serde_json::to_writer_pretty(out, reports).map_err(ser)
}

/// One parsed CSV log row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRound {
    pub round: usize,
    pub acc: f64,
    /// Raw accuracy cell, exactly as written.
    pub acc_text: String,
    pub n_selected: usize,
    pub n_stragglers: usize,
    pub bytes_up: u64,
    pub bytes_down: u64,
}

pub fn read_round_csv<R: Read>(input: R) -> Result<Vec<CsvRound>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(ser)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Serialization(format!("round log lacks column {name}")))
    };
    let (c_round, c_acc) = (col("round")?, col("acc")?);
    let (c_sel, c_str) = (col("n_selected")?, col("n_stragglers")?);
    let (c_up, c_down) = (col("bytes_up")?, col("bytes_down")?);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(ser)?;
        let num = |c: usize| -> Result<u64> { rec[c].parse().map_err(ser) };
        rows.push(CsvRound {
            round: num(c_round)? as usize,
            acc: rec[c_acc].parse().map_err(ser)?,
            acc_text: rec[c_acc].to_string(),
            n_selected: num(c_sel)? as usize,
            n_stragglers: num(c_str)? as usize,
            bytes_up: num(c_up)?,
            bytes_down: num(c_down)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::report;

    #[test]
    fn csv_layout() {
        let mut r = report(1, 0.75);
        r.per_label_accuracy = vec![Some(1.0), Some(0.5), None];
        r.stragglers = vec![1];
        let mut buf = Vec::new();
        write_round_csv(&mut buf, &[r], 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "round,acc,lA_0,lA_1,lA_2,n_selected,n_stragglers,bytes_up,bytes_down\n1,0.75,1,0.5,,2,1,16,16\n"
        );
        let rows = read_round_csv(text.as_bytes()).unwrap();
        assert_eq!(rows[0].acc, 0.75);
        assert_eq!(rows[0].n_stragglers, 1);
    }

    #[test]
    fn json_omits_wall_time() {
        let mut r = report(2, 0.5);
        r.wall_ms = 1234;
        let mut buf = Vec::new();
        write_round_json(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("wall_ms"));
        assert!(text.contains("\"balanced_accuracy\": 0.5"));
    }
}
