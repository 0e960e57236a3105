//! Listening-history ingestion, instance documents and CSV helpers.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn format_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (11 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One `(user, artist, count)` line of a listening history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub user_id: String,
    pub artist_id: String,
    pub count: f64,
}

impl TripleRecord {
    pub fn new(user_id: impl Into<String>, artist_id: impl Into<String>, count: f64) -> Self {
        TripleRecord { user_id: user_id.into(), artist_id: artist_id.into(), count }
    }
}

/// Reads tab- or comma-separated triples; a first line whose count is not a number is a header.
pub fn parse_triples(mut reader: impl Read) -> Result<Vec<TripleRecord>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { line: k + 1, message: e.to_string() })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", rec.len()) });
        }
        let count = match rec[2].parse::<f64>() {
            Ok(c) => c,
            Err(_) if out.is_empty() && k == 0 => continue,
            Err(_) => return Err(Error::Parse { line, message: format!("count '{}' is not a number", &rec[2]) }),
        };
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::Parse { line, message: format!("count must be finite and nonnegative, got {count}") });
        }
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::Parse { line, message: "empty user or artist id".into() });
        }
        out.push(TripleRecord::new(&rec[0], &rec[1], count));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub alpha: f64,
    /// Users whose total after artist filtering is below this are dropped.
    pub min_user_total: Option<f64>,
    /// Keep only this many artists with the largest total count.
    pub top_artists: Option<usize>,
    /// Densification refuses matrices with more cells than this.
    pub max_cells: usize,
}

impl IngestOptions {
    pub fn new(alpha: f64) -> Self {
        IngestOptions { alpha, min_user_total: None, top_artists: None, max_cells: 50_000_000 }
    }
}

/// Counts describing what ingestion did, kept with the output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records: usize,
    pub merged_duplicates: usize,
    pub artists_dropped: usize,
    pub users_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub instance: Instance,
    pub user_ids: Vec<String>,
    pub artist_ids: Vec<String>,
    pub stats: IngestStats,
}

impl Ingested {
    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument::from_instance(&self.instance, Some(self.user_ids.clone()), Some(self.artist_ids.clone()))
    }
}

/// Aggregates triples into an instance. Users and artists keep their first-appearance order.
pub fn ingest_triples(records: impl IntoIterator<Item = TripleRecord>, options: &IngestOptions) -> Result<Ingested> {
    if !(options.alpha > 0.0 && options.alpha <= 1.0) {
        return Err(Error::BadAlpha(options.alpha));
    }
    let mut user_index: HashMap<String, usize> = HashMap::new();
    let mut artist_index: HashMap<String, usize> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut artist_ids = Vec::new();
    let mut rows: Vec<HashMap<usize, f64>> = Vec::new();
    let mut stats = IngestStats::default();
    for r in records {
        stats.records += 1;
        let u = *user_index.entry(r.user_id.clone()).or_insert_with(|| {
            user_ids.push(r.user_id.clone());
            rows.push(HashMap::new());
            user_ids.len() - 1
        });
        let a = *artist_index.entry(r.artist_id.clone()).or_insert_with(|| {
            artist_ids.push(r.artist_id.clone());
            artist_ids.len() - 1
        });
        let cell = rows[u].entry(a);
        if matches!(cell, std::collections::hash_map::Entry::Occupied(_)) {
            stats.merged_duplicates += 1;
        }
        *cell.or_insert(0.0) += r.count;
    }

    let mut artist_totals = vec![0.0; artist_ids.len()];
    for row in &rows {
        for (&a, &w) in row {
            artist_totals[a] += w;
        }
    }
    let mut keep: Vec<bool> = artist_totals.iter().map(|&t| t > 0.0).collect();
    if let Some(top) = options.top_artists {
        let mut order: Vec<usize> = (0..artist_ids.len()).collect();
        order.sort_by(|&a, &b| artist_totals[b].total_cmp(&artist_totals[a]).then(a.cmp(&b)));
        for &a in order.iter().skip(top) {
            keep[a] = false;
        }
    }
    let min_total = options.min_user_total.unwrap_or(0.0);
    let kept_users: Vec<usize> = (0..rows.len())
        .filter(|&u| {
            let t: f64 = rows[u].iter().filter(|(a, _)| keep[**a]).map(|(_, w)| w).sum();
            t > 0.0 && t >= min_total
        })
        .collect();
    // artists whose every stream came from a dropped user go too
    let mut final_totals = vec![0.0; artist_ids.len()];
    for &u in &kept_users {
        for (&a, &w) in &rows[u] {
            if keep[a] {
                final_totals[a] += w;
            }
        }
    }
    let kept_artists: Vec<usize> = (0..artist_ids.len()).filter(|&a| keep[a] && final_totals[a] > 0.0).collect();
    stats.artists_dropped = artist_ids.len() - kept_artists.len();
    stats.users_dropped = rows.len() - kept_users.len();
    if kept_users.is_empty() || kept_artists.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    let cells = kept_users.len().saturating_mul(kept_artists.len());
    if cells > options.max_cells {
        return Err(Error::TooLarge(format!("{cells} cells exceed the budget of {}", options.max_cells)));
    }
    let column: HashMap<usize, usize> = kept_artists.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let m = kept_artists.len();
    let mut weights = vec![0.0; cells];
    for (i, &u) in kept_users.iter().enumerate() {
        for (a, &w) in &rows[u] {
            if let Some(&k) = column.get(a) {
                weights[i * m + k] = w;
            }
        }
    }
    let instance = Instance::from_flat(kept_users.len(), m, weights, options.alpha)?;
    Ok(Ingested {
        instance,
        user_ids: kept_users.iter().map(|&u| user_ids[u].clone()).collect(),
        artist_ids: kept_artists.iter().map(|&a| artist_ids[a].clone()).collect(),
        stats,
    })
}

pub const DOCUMENT_VERSION: u32 = 1;

/// Self-describing JSON form of an instance with user and artist names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub alpha: f64,
    #[serde(default)]
    pub user_ids: Vec<String>,
    #[serde(default)]
    pub artist_ids: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    /// Free-form notes such as ingestion settings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

fn default_version() -> u32 {
    DOCUMENT_VERSION
}

impl InstanceDocument {
    /// Ids default to `u0, u1, ..` and `a0, a1, ..`.
    pub fn from_instance(instance: &Instance, user_ids: Option<Vec<String>>, artist_ids: Option<Vec<String>>) -> Self {
        InstanceDocument {
            version: DOCUMENT_VERSION,
            alpha: instance.alpha(),
            user_ids: user_ids.unwrap_or_else(|| (0..instance.n_users()).map(|i| format!("u{i}")).collect()),
            artist_ids: artist_ids.unwrap_or_else(|| (0..instance.n_artists()).map(|j| format!("a{j}")).collect()),
            weights: instance.to_rows(),
            metadata: None,
        }
    }

    /// Validates the document and builds the instance.
    pub fn to_instance(&self) -> Result<Instance> {
        if self.version > DOCUMENT_VERSION {
            return Err(Error::Schema(format!("unsupported document version {}", self.version)));
        }
        let n = self.weights.len();
        let m = self.weights.first().map_or(0, Vec::len);
        if !self.user_ids.is_empty() && self.user_ids.len() != n {
            return Err(Error::Schema(format!("{} user ids for {n} rows", self.user_ids.len())));
        }
        if !self.artist_ids.is_empty() && self.artist_ids.len() != m {
            return Err(Error::Schema(format!("{} artist ids for {m} columns", self.artist_ids.len())));
        }
        Instance::new(self.weights.clone(), self.alpha).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Artist names, falling back to `a0, a1, ..`.
    pub fn artist_names(&self) -> Vec<String> {
        if self.artist_ids.is_empty() {
            let m = self.weights.first().map_or(0, Vec::len);
            (0..m).map(|j| format!("a{j}")).collect()
        } else {
            self.artist_ids.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        doc.to_instance()?;
        Ok(doc)
    }
}

pub fn load_document(path: &std::path::Path) -> Result<InstanceDocument> {
    InstanceDocument::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_document(path: &std::path::Path, doc: &InstanceDocument) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(doc.to_json().as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// A CSV writer with LF line endings.
pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Writes `header` and then each row, formatting numbers with [`format_g12`].
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// `artist_id,payment` table.
pub fn payments_csv(artist_ids: &[String], payments: &[f64]) -> Result<String> {
    let rows: Vec<Vec<String>> =
        artist_ids.iter().zip(payments).map(|(a, p)| vec![a.clone(), format_g12(*p)]).collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, &["artist_id", "payment"], &rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (3.0, "3"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (0.0, "0"),
            (999999999999.9, "1e+12"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g12(x), s, "{x}");
        }
    }

    #[test]
    fn duplicate_triples_are_summed() {
        let out = ingest_triples(
            vec![TripleRecord::new("u1", "a1", 2.0), TripleRecord::new("u1", "a1", 1.0)],
            &IngestOptions::new(1.0),
        )
        .unwrap();
        assert_eq!(out.instance.weights(), &[3.0]);
        assert_eq!(out.stats.merged_duplicates, 1);
    }

    #[test]
    fn zero_history_is_empty() {
        let r = ingest_triples(vec![TripleRecord::new("u1", "a1", 0.0)], &IngestOptions::new(1.0));
        assert_eq!(r, Err(Error::EmptyAfterFilter));
    }

    #[test]
    fn top_artist_filter_retotals_users() {
        let recs = vec![
            TripleRecord::new("u1", "a1", 5.0),
            TripleRecord::new("u1", "a3", 1.0),
            TripleRecord::new("u2", "a2", 4.0),
            TripleRecord::new("u3", "a3", 1.0),
            TripleRecord::new("u3", "a1", 1.0),
        ];
        let mut opts = IngestOptions::new(0.5);
        opts.top_artists = Some(2);
        let out = ingest_triples(recs, &opts).unwrap();
        assert_eq!(out.artist_ids, vec!["a1", "a2"]);
        assert_eq!(out.user_ids, vec!["u1", "u2", "u3"]);
        assert_eq!(out.instance.user_totals(), vec![5.0, 4.0, 1.0]);

        opts.min_user_total = Some(2.0);
        let recs = vec![TripleRecord::new("u1", "a1", 5.0), TripleRecord::new("u3", "a1", 1.0)];
        let out = ingest_triples(recs, &opts).unwrap();
        assert_eq!(out.user_ids, vec!["u1"]);
        assert_eq!(out.stats.users_dropped, 1);
    }

    #[test]
    fn parses_headers_and_tabs() {
        let text = "user\tartist\tcount\nu1\ta1\t2\nu2\ta1\t1.5\n";
        let recs = parse_triples(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1], TripleRecord::new("u2", "a1", 1.5));
        let recs = parse_triples("u1,a1,3\n".as_bytes()).unwrap();
        assert_eq!(recs, vec![TripleRecord::new("u1", "a1", 3.0)]);
        let err = parse_triples("u1,a1,3\nu2,a2,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        assert!(matches!(parse_triples("u1,a1,-1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn document_round_trip_and_schema_errors() {
        let inst = Instance::new(vec![vec![80.0, 19.0, 1.0]], 0.7).unwrap();
        let doc = InstanceDocument::from_instance(&inst, None, None);
        let back = InstanceDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_instance().unwrap(), inst);

        let missing = r#"{"weights": [[1.0]]}"#;
        assert!(matches!(InstanceDocument::from_json(missing), Err(Error::Schema(_))));
        let nan = r#"{"alpha": 1.0, "weights": [[NaN]]}"#;
        assert!(matches!(InstanceDocument::from_json(nan), Err(Error::Schema(_))));
        let zero = r#"{"alpha": 1.0, "weights": [[0.0]]}"#;
        assert!(matches!(InstanceDocument::from_json(zero), Err(Error::Schema(_))));
    }

    #[test]
    fn payment_table() {
        let s = payments_csv(&["a".into(), "b,c".into()], &[1.0 / 3.0, 2.0]).unwrap();
        assert_eq!(s, "artist_id,payment\na,0.333333333333\n\"b,c\",2\n");
    }
}
