use std::io::Write;

use thiserror::Error;

use crate::invert::SurvivalCurve;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("cannot write output: {0}")]
    SinkError(#[from] std::io::Error),
}

/// `v` to 10 significant digits: fixed notation for `1e-5 ≤ |v| < 1e15`,
/// scientific otherwise.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.9e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("exponent in {:e} output");
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let rounded: f64 = sci.parse().expect("round-trip of {:e} output");
    format!("{:.*}", (9 - exp).max(0) as usize, rounded)
}

/// Rows of preformatted cells under `header`.
pub fn write_records<W: Write + ?Sized>(
    sink: &mut W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CsvError> {
    writeln!(sink, "{}", header.join(","))?;
    for row in rows {
        writeln!(sink, "{}", row.join(","))?;
    }
    sink.flush()?;
    Ok(())
}

/// Numeric rows, each value through [`format_value`].
pub fn write_rows<W: Write + ?Sized>(
    sink: &mut W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), CsvError> {
    write_records(
        sink,
        header,
        rows.into_iter()
            .map(|r| r.into_iter().map(format_value).collect()),
    )
}

/// `t,survival` or `t,survival,density`.
pub fn write_csv<W: Write + ?Sized>(curve: &SurvivalCurve, sink: &mut W) -> Result<(), CsvError> {
    match &curve.density {
        None => write_rows(
            sink,
            &["t", "survival"],
            curve
                .times
                .iter()
                .zip(&curve.survival)
                .map(|(&t, &s)| vec![t, s]),
        ),
        Some(d) => write_rows(
            sink,
            &["t", "survival", "density"],
            curve
                .times
                .iter()
                .zip(&curve.survival)
                .zip(d)
                .map(|((&t, &s), &f)| vec![t, s, f]),
        ),
    }
}
