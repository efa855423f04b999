//! CSV formats for datasets, score curves, intervals and rating tables.
//!
//! Datasets use `time,item_i,item_j,outcome` or, for multi-season data,
//! `season,day,item_i,item_j,outcome`. The scheme is chosen from the header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use krc_core::baselines::EloTable;
use krc_core::inference::IntervalEstimate;
use krc_core::{
    ComparisonDataset, ComparisonRecord, DatasetBuilder, GroundTruth, KrcError, RosterPolicy,
    ScoreVector, TimeEncoding,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    UnitInterval,
    SeasonDay,
}

const TIME_HEADER: [&str; 4] = ["time", "item_i", "item_j", "outcome"];
const SEASON_HEADER: [&str; 5] = ["season", "day", "item_i", "item_j", "outcome"];

#[derive(Debug, Clone, Default)]
pub struct ReadOptions {
    pub roster: RosterPolicy,
    /// Map unit-interval times linearly onto `[0, 1]`.
    pub rescale: bool,
    /// Game days per season; the day column is then used as the index.
    pub season_day_counts: Option<Vec<usize>>,
}

pub fn scheme_of(header: &csv::StringRecord) -> Result<Scheme> {
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols == TIME_HEADER {
        Ok(Scheme::UnitInterval)
    } else if cols == SEASON_HEADER {
        Ok(Scheme::SeasonDay)
    } else {
        Err(Error::Malformed {
            row: 1,
            message: format!(
                "header must be `{}` or `{}`, found `{}`",
                TIME_HEADER.join(","),
                SEASON_HEADER.join(","),
                cols.join(",")
            ),
        })
    }
}

/// `1` or `0`; draws are rejected because outcomes are binary.
pub fn parse_outcome(s: &str) -> std::result::Result<u8, KrcError> {
    match s.trim() {
        "1" => Ok(1),
        "0" => Ok(0),
        "0.5" | "tie" | "draw" | "T" | "D" => Err(KrcError::Tie),
        other => Err(KrcError::InvalidOutcome(other.to_string())),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, row: u64) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Malformed {
        row,
        message: format!("cannot parse {what} `{s}`"),
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Reads a dataset; row numbers in errors count the header as row 1.
pub fn read_dataset_from<R: Read>(reader: R, options: &ReadOptions) -> Result<ComparisonDataset> {
    let mut rdr = csv_reader(reader);
    let scheme = scheme_of(rdr.headers()?)?;
    let mut builder = DatasetBuilder::new(options.roster.clone());
    for (k, row) in rdr.records().enumerate() {
        let row_no = k as u64 + 2;
        let row = row.map_err(|e| Error::Malformed {
            row: row_no,
            message: e.to_string(),
        })?;
        let at = |e: KrcError| Error::Row {
            row: row_no,
            source: e,
        };
        match scheme {
            Scheme::UnitInterval => {
                let t: f64 = parse_num(&row[0], "time", row_no)?;
                let y = parse_outcome(&row[3]).map_err(at)?;
                builder.push(t, &row[1], &row[2], y).map_err(at)?;
            }
            Scheme::SeasonDay => {
                let season: u32 = parse_num(&row[0], "season", row_no)?;
                let day: u32 = parse_num(&row[1], "day", row_no)?;
                let y = parse_outcome(&row[4]).map_err(at)?;
                builder
                    .push_season_day(season, day, &row[2], &row[3], y)
                    .map_err(at)?;
            }
        }
    }
    if builder.is_empty() {
        return Err(KrcError::EmptyDataset.into());
    }
    let encoding = match scheme {
        Scheme::UnitInterval => TimeEncoding::UnitInterval {
            rescale: options.rescale,
        },
        Scheme::SeasonDay => TimeEncoding::SeasonDay {
            season_day_counts: options.season_day_counts.clone(),
        },
    };
    Ok(builder.build(&encoding)?)
}

pub fn read_dataset(path: impl AsRef<Path>, options: &ReadOptions) -> Result<ComparisonDataset> {
    read_dataset_from(BufReader::new(File::open(path)?), options)
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(writer)
}

/// Writes the dataset in the scheme it was read with. Season-day datasets
/// need every record stamped.
pub fn write_dataset<W: Write>(writer: W, dataset: &ComparisonDataset) -> Result<()> {
    let mut w = csv_writer(writer);
    let season_day = dataset.encoding().is_season_day();
    if season_day {
        w.write_record(SEASON_HEADER)?;
    } else {
        w.write_record(TIME_HEADER)?;
    }
    for r in dataset.records() {
        let li = dataset.label(r.item_i());
        let lj = dataset.label(r.item_j());
        let y = r.outcome().to_string();
        if season_day {
            let stamp = r.stamp().ok_or_else(|| {
                Error::Invalid("season-day dataset has a record without season and day".into())
            })?;
            w.write_record([&stamp.season.to_string(), &stamp.day.to_string(), li, lj, &y])?;
        } else {
            w.write_record([&r.time().to_string(), li, lj, &y])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: impl AsRef<Path>, dataset: &ComparisonDataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), dataset)
}

/// Parses one streamed `time,item_i,item_j,outcome` line against a fixed
/// roster.
pub fn parse_stream_line(line: &str, dataset: &ComparisonDataset, row: u64) -> Result<ComparisonRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(Error::Malformed {
            row,
            message: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let at = |e: KrcError| Error::Row { row, source: e };
    let t: f64 = parse_num(fields[0], "time", row)?;
    let lookup = |label: &str| {
        dataset
            .item_index(label)
            .ok_or_else(|| at(KrcError::UnknownLabel(label.to_string())))
    };
    let i = lookup(fields[1])?;
    let j = lookup(fields[2])?;
    let y = parse_outcome(fields[3]).map_err(at)?;
    ComparisonRecord::new(i, j, t, y).map_err(at)
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn curve_header(n: usize, first: &str) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((0..n).map(|i| format!("item_{i}")))
        .collect()
}

/// `item,label,score`.
pub fn write_scores<W: Write>(writer: W, scores: &ScoreVector, labels: &[String]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["item", "label", "score"])?;
    for (i, s) in scores.scores().iter().enumerate() {
        let label = labels.get(i).map_or("", String::as_str);
        w.write_record([&i.to_string(), label, &fmt(*s)])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,item_0,…,item_{n−1}`, one row per grid point.
pub fn write_curve<W: Write>(writer: W, curve: &[ScoreVector]) -> Result<()> {
    let n = curve.first().map_or(0, ScoreVector::len);
    let mut w = csv_writer(writer);
    w.write_record(curve_header(n, "t"))?;
    for s in curve {
        let t = s
            .t()
            .ok_or_else(|| Error::Invalid("curve point without a time".into()))?;
        let row: Vec<String> = std::iter::once(fmt(t))
            .chain(s.scores().iter().map(|&x| fmt(x)))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_curve`].
pub fn read_curve<R: Read>(reader: R) -> Result<Vec<ScoreVector>> {
    let mut rdr = csv_reader(reader);
    let n = rdr.headers()?.len().saturating_sub(1);
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row_no = k as u64 + 2;
        let row = row?;
        if row.len() != n + 1 {
            return Err(Error::Malformed {
                row: row_no,
                message: format!("expected {} columns", n + 1),
            });
        }
        let t: f64 = parse_num(&row[0], "t", row_no)?;
        let scores = (1..=n)
            .map(|c| parse_num(&row[c], "score", row_no))
            .collect::<Result<Vec<f64>>>()?;
        let s = ScoreVector::from_weights(scores).map_err(|e| Error::Row {
            row: row_no,
            source: e,
        })?;
        out.push(s.at(t));
    }
    Ok(out)
}

/// Normalized true scores on `grid`, same layout as a curve.
pub fn write_truth<W: Write>(writer: W, truth: &GroundTruth, grid: &[f64], normalized: bool) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(curve_header(truth.n(), "t"))?;
    for &t in grid {
        let v = if normalized {
            truth.normalized_skill(t)
        } else {
            truth.skill(t)
        };
        let row: Vec<String> = std::iter::once(fmt(t))
            .chain(v.into_iter().map(fmt))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `item,point,lower,upper,level`.
pub fn write_score_cis<W: Write>(writer: W, cis: &[(usize, IntervalEstimate)]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["item", "point", "lower", "upper", "level"])?;
    for (i, ci) in cis {
        w.write_record([
            i.to_string(),
            fmt(ci.point),
            fmt(ci.lower),
            fmt(ci.upper),
            fmt(ci.level),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `item_i,item_j,point,lower,upper,level`; the point is `P(j beats i)`.
pub fn write_pairwise_cis<W: Write>(writer: W, cis: &[(usize, usize, IntervalEstimate)]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["item_i", "item_j", "point", "lower", "upper", "level"])?;
    for (i, j, ci) in cis {
        w.write_record([
            i.to_string(),
            j.to_string(),
            fmt(ci.point),
            fmt(ci.lower),
            fmt(ci.upper),
            fmt(ci.level),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `time,item,rating`, one row per rating change.
pub fn write_elo<W: Write>(writer: W, table: &EloTable) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["time", "item", "rating"])?;
    for row in table.rows() {
        w.write_record([fmt(row.time), row.item.to_string(), fmt(row.rating)])?;
    }
    w.flush()?;
    Ok(())
}
