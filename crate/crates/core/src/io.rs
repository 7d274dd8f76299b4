//! File ingestion and emission: ratings CSV in; curve CSV, worst-case report
//! JSON, and SVG line charts out.

use std::io::Write;
use std::path::Path;

use crate::error::Error;
use crate::model::{ObservedHistogram, RatingScale};
use crate::regret::WorstCaseRecord;

/// Regret values at or below this are floating-point noise around zero; the
/// log column stays empty for them (the log of roundoff is meaningless).
const LN_FLOOR: f64 = 1e-15;

/// One ingested rating, with an optional provenance tag (e.g. "survey").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub rating: u32,
    pub source: Option<String>,
}

/// One row of a regret-vs-q curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    pub aggregator: String,
    pub regret: f64,
    /// `ln(regret)` when the regret clears the noise floor; absent otherwise.
    pub ln_regret: Option<f64>,
}

impl CurvePoint {
    pub fn new(q: f64, aggregator: impl Into<String>, regret: f64) -> Self {
        let ln_regret = (regret > LN_FLOOR).then(|| regret.ln());
        Self {
            q,
            aggregator: aggregator.into(),
            regret,
            ln_regret,
        }
    }
}

/// Compress a 1–10 rating onto the 1–7 scale: 1..=4 collapse to 1, the rest
/// shift down by 3.
pub fn remap_rating(s: i64) -> Result<u32, Error> {
    match s {
        1..=4 => Ok(1),
        5..=10 => Ok((s - 3) as u32),
        other => Err(Error::OutOfRange {
            value: other,
            line: None,
        }),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            msg: format!("{other:?}"),
        },
    }
}

/// Read ratings from a headered CSV file. A value of 0 (or an empty field)
/// marks an unobserved rating and is skipped — silent raters enter later via
/// an explicit total. With `remap`, raw 1–10 ratings are compressed to 1–7
/// on ingest. A `source` column, when present, is carried along.
pub fn read_ratings_csv(
    path: &Path,
    rating_column: &str,
    remap: bool,
) -> Result<Vec<RatingRecord>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let rating_idx = headers
        .iter()
        .position(|h| h == rating_column)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("missing rating column '{rating_column}'"),
        })?;
    let source_idx = headers.iter().position(|h| h == "source");

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 2; // the header occupies line 1
        let row = row.map_err(csv_error)?;
        let field = row.get(rating_idx).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        let value: i64 = field.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("'{field}' is not an integer rating"),
        })?;
        if value == 0 {
            continue; // unobserved
        }
        let rating = if remap {
            remap_rating(value).map_err(|e| match e {
                Error::OutOfRange { value, .. } => Error::OutOfRange {
                    value,
                    line: Some(line),
                },
                other => other,
            })?
        } else {
            u32::try_from(value).map_err(|_| Error::OutOfRange {
                value,
                line: Some(line),
            })?
        };
        let source = source_idx
            .and_then(|j| row.get(j))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from);
        records.push(RatingRecord { rating, source });
    }
    Ok(records)
}

/// Count records into an observed histogram. When the true rater total is
/// known, the silent-rater count is the difference; otherwise it is 0.
pub fn build_histogram(
    records: &[RatingRecord],
    scale: RatingScale,
    n_known: Option<u64>,
) -> Result<ObservedHistogram, Error> {
    let m = scale.m();
    let mut counts = vec![0u64; m];
    for record in records {
        if record.rating < 1 || record.rating as usize > m {
            return Err(Error::BadScale {
                rating: record.rating,
                m,
            });
        }
        counts[record.rating as usize - 1] += 1;
    }
    let total = records.len() as u64;
    let n_u = match n_known {
        Some(n) if n < total => return Err(Error::BadTotal { n, count: total }),
        Some(n) => n - total,
        None => 0,
    };
    Ok(ObservedHistogram { counts, n_u })
}

/// Emit curve points as CSV: header `q,aggregator,regret,ln_regret`, full
/// float precision, empty log field when the regret sits at or below zero.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut w: W) -> Result<(), Error> {
    writeln!(w, "q,aggregator,regret,ln_regret")?;
    for pt in points {
        let ln = pt.ln_regret.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", pt.q, pt.aggregator, pt.regret, ln)?;
    }
    Ok(())
}

/// Emit a worst-case record as pretty JSON.
pub fn write_report_json<W: Write>(record: &WorstCaseRecord, mut w: W) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut w, record)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

const SVG_PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Series<'a> {
    name: &'a str,
    points: Vec<(f64, f64)>,
}

/// Render the curve points as an 800×600 SVG line chart of `ln regret`
/// against `q`, one polyline per aggregator. Points without a log value are
/// skipped; with no drawable point at all the chart is just the axes.
pub fn render_svg_line_chart<W: Write>(points: &[CurvePoint], mut w: W) -> Result<(), Error> {
    let mut series: Vec<Series> = Vec::new();
    for pt in points {
        let Some(ln) = pt.ln_regret else { continue };
        match series.iter_mut().find(|s| s.name == pt.aggregator) {
            Some(s) => s.points.push((pt.q, ln)),
            None => series.push(Series {
                name: &pt.aggregator,
                points: vec![(pt.q, ln)],
            }),
        }
    }

    let (left, right, top, bottom) = (70.0, 780.0, 20.0, 550.0);
    let flat: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();
    let (mut x0, mut x1) = min_max(flat.iter().map(|p| p.0));
    let (mut y0, mut y1) = min_max(flat.iter().map(|p| p.1));
    if x1 - x0 < 1e-12 {
        x0 -= 0.05;
        x1 += 0.05;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">"
    )?;
    writeln!(
        w,
        "  <g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" stroke=\"none\">"
    )?;
    // axes
    writeln!(
        w,
        "    <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"#333\"/>"
    )?;
    writeln!(
        w,
        "    <line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"#333\"/>"
    )?;
    // ticks and labels
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let xp = sx(xv);
        writeln!(
            w,
            "    <line x1=\"{xp:.2}\" y1=\"{bottom}\" x2=\"{xp:.2}\" y2=\"{}\" stroke=\"#333\"/>",
            bottom + 5.0
        )?;
        writeln!(
            w,
            "    <text x=\"{xp:.2}\" y=\"{}\" text-anchor=\"middle\">{xv:.2}</text>",
            bottom + 20.0
        )?;
        let yv = y0 + f * (y1 - y0);
        let yp = sy(yv);
        writeln!(
            w,
            "    <line x1=\"{}\" y1=\"{yp:.2}\" x2=\"{left}\" y2=\"{yp:.2}\" stroke=\"#333\"/>",
            left - 5.0
        )?;
        writeln!(
            w,
            "    <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{yv:.2}</text>",
            left - 9.0,
            yp + 4.0
        )?;
    }
    // axis titles
    writeln!(
        w,
        "    <text x=\"{:.2}\" y=\"588\" text-anchor=\"middle\">q</text>",
        0.5 * (left + right)
    )?;
    writeln!(
        w,
        "    <text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">ln regret</text>",
        0.5 * (top + bottom),
        0.5 * (top + bottom)
    )?;
    writeln!(w, "  </g>")?;

    for (i, s) in series.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            w,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            coords.join(" ")
        )?;
        // legend entry
        let ly = top + 16.0 + 18.0 * i as f64;
        writeln!(
            w,
            "  <line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            right - 140.0,
            right - 115.0
        )?;
        writeln!(
            w,
            "  <text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">{}</text>",
            right - 108.0,
            ly + 4.0,
            s.name
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale(m: usize) -> RatingScale {
        RatingScale::new(m).unwrap()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn remap_matches_the_published_mapping() {
        let expected = [1, 1, 1, 1, 2, 3, 4, 5, 6, 7];
        for (s, want) in (1..=10).zip(expected) {
            assert_eq!(remap_rating(s).unwrap(), want);
        }
        assert!(matches!(
            remap_rating(0),
            Err(Error::OutOfRange { value: 0, .. })
        ));
        assert!(matches!(
            remap_rating(11),
            Err(Error::OutOfRange { value: 11, .. })
        ));
        assert!(matches!(
            remap_rating(-2),
            Err(Error::OutOfRange { value: -2, .. })
        ));
    }

    #[test]
    fn csv_ingest_with_remap() {
        let f = write_temp("rating,source\n4,survey\n5,posted\n10,survey\n");
        let records = read_ratings_csv(f.path(), "rating", true).unwrap();
        let ratings: Vec<u32> = records.iter().map(|r| r.rating).collect();
        assert_eq!(ratings, vec![1, 2, 7]);
        assert_eq!(records[0].source.as_deref(), Some("survey"));
    }

    #[test]
    fn csv_ingest_skips_unobserved_markers() {
        let f = write_temp("rating\n3\n0\n\n2\n");
        let records = read_ratings_csv(f.path(), "rating", false).unwrap();
        let ratings: Vec<u32> = records.iter().map(|r| r.rating).collect();
        assert_eq!(ratings, vec![3, 2]);
    }

    #[test]
    fn csv_ingest_empty_data_section() {
        let f = write_temp("rating,source\n");
        let records = read_ratings_csv(f.path(), "rating", true).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn csv_ingest_flags_out_of_range_rows() {
        let f = write_temp("rating\n4\n11\n");
        match read_ratings_csv(f.path(), "rating", true) {
            Err(Error::OutOfRange {
                value: 11,
                line: Some(3),
            }) => {}
            other => panic!("expected OutOfRange at line 3, got {other:?}"),
        }
    }

    #[test]
    fn csv_ingest_flags_garbage_and_missing_columns() {
        let f = write_temp("rating\nfour\n");
        assert!(matches!(
            read_ratings_csv(f.path(), "rating", false),
            Err(Error::Parse { line: 2, .. })
        ));
        let f = write_temp("score\n4\n");
        assert!(matches!(
            read_ratings_csv(f.path(), "rating", false),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_roundtrip_is_lossless_for_ratings() {
        let ratings = [3u32, 1, 7, 7, 2, 5];
        let mut body = String::from("rating\n");
        for r in ratings {
            body.push_str(&format!("{r}\n"));
        }
        let f = write_temp(&body);
        let records = read_ratings_csv(f.path(), "rating", false).unwrap();
        let back: Vec<u32> = records.iter().map(|r| r.rating).collect();
        assert_eq!(back, ratings);
    }

    #[test]
    fn histogram_construction() {
        let records: Vec<RatingRecord> = [1u32, 1, 2]
            .iter()
            .map(|&rating| RatingRecord {
                rating,
                source: None,
            })
            .collect();
        let h = build_histogram(&records, scale(2), Some(5)).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.n_u, 2);

        let h = build_histogram(&records, scale(2), None).unwrap();
        assert_eq!(h.n_u, 0);

        let bad = [RatingRecord {
            rating: 3,
            source: None,
        }];
        assert!(matches!(
            build_histogram(&bad, scale(2), None),
            Err(Error::BadScale { rating: 3, m: 2 })
        ));

        assert!(matches!(
            build_histogram(&records, scale(2), Some(2)),
            Err(Error::BadTotal { n: 2, count: 3 })
        ));
    }

    #[test]
    fn curve_csv_format() {
        let points = vec![
            CurvePoint::new(0.3, "avg", 0.5),
            CurvePoint::new(0.3, "bea", 0.0),
            CurvePoint::new(1.0, "avg", -2e-17),
        ];
        let mut buf = Vec::new();
        write_curve_csv(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "q,aggregator,regret,ln_regret");
        assert_eq!(lines[1], format!("0.3,avg,0.5,{}", 0.5f64.ln()));
        // zero and sub-noise regrets leave the log column empty
        assert_eq!(lines[2], "0.3,bea,0,");
        assert_eq!(lines[3], "1,avg,-0.00000000000000002,");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn curve_csv_empty_is_header_only() {
        let mut buf = Vec::new();
        write_curve_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "q,aggregator,regret,ln_regret\n"
        );
    }

    #[test]
    fn tiny_positive_regret_keeps_its_log() {
        let pt = CurvePoint::new(0.5, "avg", 1e-12);
        assert!(pt.ln_regret.is_some());
        let pt = CurvePoint::new(0.5, "avg", 1e-16);
        assert!(pt.ln_regret.is_none());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let points = vec![
            CurvePoint::new(0.1, "avg", 0.9),
            CurvePoint::new(0.5, "avg", 0.5),
            CurvePoint::new(0.1, "bea", 0.4),
            CurvePoint::new(0.5, "bea", 0.2),
        ];
        let mut buf = Vec::new();
        render_svg_line_chart(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("viewBox=\"0 0 800 600\""));
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(text.contains(">ln regret</text>"));
        assert!(text.contains(">q</text>"));
        assert!(text.contains(">avg</text>"));
        assert!(text.contains(">bea</text>"));
    }

    #[test]
    fn svg_without_drawable_points_has_no_series() {
        let points = vec![CurvePoint::new(0.5, "avg", 0.0)];
        let mut buf = Vec::new();
        render_svg_line_chart(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("<svg"));
        assert_eq!(text.matches("<polyline").count(), 0);
    }
}
