//! Report tables: per-document rows, an unweighted-mean aggregate row, and
//! CSV / Markdown / JSON rendering.
//!
//! Values are kept at full precision and rounded only when rendered as
//! text. JSON output keeps full precision so it round-trips exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    condition_similarity, core_completeness, edit_stats, frame_diversity, time_report, CompletenessRow, Condition,
    ConditionLabel, DiversityRow, EditStatsRow, MetricsError, SimilarityRow, TimeRow,
};
use crate::corpus::Document;
use crate::framebank::FrameBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Integer in document rows; the aggregate row uses `aggregate_precision`.
    Count,
    Real,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub precision: usize,
}

impl Column {
    pub fn count(name: impl Into<String>) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Count,
            precision: 2,
        }
    }

    pub fn real(name: impl Into<String>, precision: usize) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Real,
            precision,
        }
    }
}

/// One document's row. `None` marks a metric undefined for that document
/// (for instance a document with no annotated sentence in that condition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub doc_id: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    /// File stem, e.g. `table1_diversity`.
    pub name: String,
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<ReportRow>,
    pub aggregate: Option<Vec<Option<f64>>>,
}

impl ReportTable {
    pub fn new(name: impl Into<String>, title: impl Into<String>, columns: Vec<Column>) -> ReportTable {
        ReportTable {
            name: name.into(),
            title: title.into(),
            columns,
            rows: Vec::new(),
            aggregate: None,
        }
    }

    pub fn push_row(&mut self, doc_id: impl Into<String>, values: Vec<Option<f64>>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(ReportRow {
            doc_id: doc_id.into(),
            values,
        });
    }

    /// Fills the aggregate row with column means over defined values.
    /// Tables without rows get no aggregate.
    pub fn with_aggregate(mut self) -> ReportTable {
        self.aggregate = aggregate_columns(&self.rows).ok();
        self
    }

    /// Overrides the printed precision of every real-valued column.
    pub fn set_precision(&mut self, precision: usize) {
        for c in self.columns.iter_mut().filter(|c| c.kind == ColumnKind::Real) {
            c.precision = precision;
        }
    }
}

/// Typed per-document metric rows that can be laid out as table columns.
pub trait TableRow {
    fn columns() -> Vec<Column>;
    fn doc_id(&self) -> &str;
    fn values(&self) -> Vec<f64>;
}

impl TableRow for DiversityRow {
    fn columns() -> Vec<Column> {
        vec![Column::count("Sent"), Column::count("Frames"), Column::real("AvgF/S", 2)]
    }
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn values(&self) -> Vec<f64> {
        vec![
            self.sentences_with_as as f64,
            self.unique_frames as f64,
            self.avg_frames_per_sentence,
        ]
    }
}

impl TableRow for SimilarityRow {
    fn columns() -> Vec<Column> {
        vec![Column::real("Cosine", 4)]
    }
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn values(&self) -> Vec<f64> {
        vec![self.mean_cosine]
    }
}

impl TableRow for CompletenessRow {
    fn columns() -> Vec<Column> {
        vec![Column::count("Core"), Column::count("Min"), Column::real("%", 2)]
    }
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn values(&self) -> Vec<f64> {
        vec![self.core_annotated as f64, self.min_required as f64, self.pct]
    }
}

impl TableRow for TimeRow {
    fn columns() -> Vec<Column> {
        vec![
            Column::count("Sent"),
            Column::real("Avg Length", 2),
            Column::real("Human Anno", 2),
            Column::real("Machine +Human Anno", 2),
            Column::real("Diff", 2),
        ]
    }
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn values(&self) -> Vec<f64> {
        vec![
            self.sentences as f64,
            self.avg_sentence_length,
            self.human_avg_min,
            self.mh_avg_min,
            self.diff,
        ]
    }
}

impl TableRow for EditStatsRow {
    fn columns() -> Vec<Column> {
        vec![
            Column::count("Total"),
            Column::count("ACCEPTED"),
            Column::real("%", 2),
            Column::count("CREATED"),
            Column::real("%", 2),
            Column::count("DELETED"),
            Column::real("%", 2),
            Column::count("UPDATED"),
            Column::real("%", 2),
        ]
    }
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn values(&self) -> Vec<f64> {
        vec![
            self.total as f64,
            self.accepted as f64,
            self.pct_accepted,
            self.created as f64,
            self.pct_created,
            self.deleted as f64,
            self.pct_deleted,
            self.updated as f64,
            self.pct_updated,
        ]
    }
}

/// Unweighted arithmetic mean of each column across document rows.
pub fn aggregate<R: TableRow>(rows: &[R]) -> Result<Vec<f64>, MetricsError> {
    let first = rows.first().ok_or(MetricsError::EmptyInput)?;
    let mut sums = vec![0.0; first.values().len()];
    for row in rows {
        for (sum, v) in sums.iter_mut().zip(row.values()) {
            *sum += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / rows.len() as f64).collect())
}

/// Column means over the defined cells of each column.
pub fn aggregate_columns(rows: &[ReportRow]) -> Result<Vec<Option<f64>>, MetricsError> {
    let first = rows.first().ok_or(MetricsError::EmptyInput)?;
    Ok((0..first.values.len())
        .map(|col| {
            let defined: Vec<f64> = rows.iter().filter_map(|r| r.values[col]).collect();
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
        })
        .collect())
}

/// Lays out typed rows as a single-condition table.
pub fn table_from_rows<R: TableRow>(name: &str, title: &str, rows: &[R]) -> ReportTable {
    let mut table = ReportTable::new(name, title, R::columns());
    for row in rows {
        table.push_row(row.doc_id(), row.values().into_iter().map(Some).collect());
    }
    table.with_aggregate()
}

fn grouped_columns<R: TableRow>(labels: &[ConditionLabel]) -> Vec<Column> {
    if labels.len() == 1 {
        return R::columns();
    }
    labels
        .iter()
        .flat_map(|l| {
            R::columns().into_iter().map(move |mut c| {
                c.name = format!("{} {}", l.display_name(), c.name);
                c
            })
        })
        .collect()
}

/// Metric failures that leave a cell empty rather than failing the table.
fn soft<R: TableRow>(result: Result<R, MetricsError>, width: usize) -> Result<Vec<Option<f64>>, MetricsError> {
    match result {
        Ok(row) => Ok(row.values().into_iter().map(Some).collect()),
        Err(
            MetricsError::NoAnnotatedSentences(_)
            | MetricsError::NoComparableSentences(_)
            | MetricsError::NoTimingData(_),
        ) => Ok(vec![None; width]),
        Err(e) => Err(e),
    }
}

fn grouped_table<R, F>(
    name: &str,
    title: &str,
    conditions: &[&Condition],
    corpus: &[Document],
    metric: F,
) -> Result<ReportTable, MetricsError>
where
    R: TableRow,
    F: Fn(&Condition, &Document) -> Result<R, MetricsError>,
{
    let labels: Vec<ConditionLabel> = conditions.iter().map(|c| c.label).collect();
    let width = R::columns().len();
    let mut table = ReportTable::new(name, title, grouped_columns::<R>(&labels));
    for doc in corpus {
        let mut values = Vec::with_capacity(width * conditions.len());
        for c in conditions {
            values.extend(soft(metric(c, doc), width)?);
        }
        if values.iter().any(Option::is_some) {
            table.push_row(doc.id.clone(), values);
        }
    }
    Ok(table.with_aggregate())
}

/// Frame diversity, one column group per condition.
pub fn diversity_table(conditions: &[&Condition], corpus: &[Document]) -> Result<ReportTable, MetricsError> {
    grouped_table(
        "table1_diversity",
        "Frame diversity across documents",
        conditions,
        corpus,
        frame_diversity,
    )
}

/// Core-FE completeness, one column group per condition.
pub fn completeness_table(
    conditions: &[&Condition],
    corpus: &[Document],
    bank: &FrameBank,
) -> Result<ReportTable, MetricsError> {
    grouped_table(
        "table3_completeness",
        "Percentage of core FEs annotated",
        conditions,
        corpus,
        |c, d| core_completeness(c, d, bank),
    )
}

/// Pairwise cosine similarity over every combination of the given
/// conditions, in label order (symmetric pairs appear once).
pub fn similarity_table(conditions: &[&Condition], corpus: &[Document]) -> Result<ReportTable, MetricsError> {
    let mut sorted: Vec<&Condition> = conditions.to_vec();
    sorted.sort_by_key(|c| c.label);
    sorted.dedup_by_key(|c| c.label);
    let pairs: Vec<(&Condition, &Condition)> = sorted
        .iter()
        .enumerate()
        .flat_map(|(i, a)| sorted[i + 1..].iter().map(move |b| (*a, *b)))
        .collect();
    let columns = pairs
        .iter()
        .map(|(a, b)| Column::real(format!("{} vs {}", a.label.display_name(), b.label.display_name()), 4))
        .collect();
    let mut table = ReportTable::new("table2_similarity", "Cosine similarity between annotation methods", columns);
    for doc in corpus {
        let mut values = Vec::with_capacity(pairs.len());
        for (a, b) in &pairs {
            values.extend(soft(condition_similarity(a, b, doc), 1)?);
        }
        if values.iter().any(Option::is_some) {
            table.push_row(doc.id.clone(), values);
        }
    }
    Ok(table.with_aggregate())
}

pub fn time_table(human: &Condition, mh: &Condition, corpus: &[Document]) -> Result<ReportTable, MetricsError> {
    let mut table = ReportTable::new(
        "table4_time",
        "Average annotation time per sentence in minutes",
        TimeRow::columns(),
    );
    let width = table.columns.len();
    for doc in corpus {
        let values = soft(time_report(human, mh, doc), width)?;
        if values.iter().any(Option::is_some) {
            table.push_row(doc.id.clone(), values);
        }
    }
    Ok(table.with_aggregate())
}

/// Verdict statistics. Fails with `UNFINALIZED_AS` while any set is pending.
pub fn edit_table(mh: &Condition, corpus: &[Document]) -> Result<ReportTable, MetricsError> {
    if let Some(id) = super::first_unfinalized(mh) {
        return Err(MetricsError::UnfinalizedAs(id));
    }
    let mut rows = Vec::new();
    for doc in corpus {
        let row = edit_stats(mh, doc)?;
        if row.total > 0 {
            rows.push(row);
        }
    }
    Ok(table_from_rows("table5_edits", "Human edits on pre-annotations", &rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn format_number(v: f64, precision: usize) -> String {
    let s = format!("{v:.precision$}");
    // Avoid printing "-0.00".
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

fn render_cell(value: Option<f64>, column: &Column, is_aggregate: bool) -> String {
    match value {
        None => String::new(),
        Some(v) if column.kind == ColumnKind::Count && !is_aggregate => format_number(v, 0),
        Some(v) => format_number(v, column.precision),
    }
}

fn text_rows(table: &ReportTable) -> Vec<Vec<String>> {
    let mut out = Vec::with_capacity(table.rows.len() + 2);
    out.push(
        std::iter::once("Doc".to_owned())
            .chain(table.columns.iter().map(|c| c.name.clone()))
            .collect(),
    );
    for row in &table.rows {
        out.push(
            std::iter::once(row.doc_id.clone())
                .chain(row.values.iter().zip(&table.columns).map(|(v, c)| render_cell(*v, c, false)))
                .collect(),
        );
    }
    if let Some(agg) = &table.aggregate {
        out.push(
            std::iter::once("Avg".to_owned())
                .chain(agg.iter().zip(&table.columns).map(|(v, c)| render_cell(*v, c, true)))
                .collect(),
        );
    }
    out
}

/// Renders a table. Output is a pure function of the table.
pub fn emit_report(table: &ReportTable, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for record in text_rows(table) {
                writer.write_record(&record).expect("writing to memory");
            }
            writer.into_inner().expect("flushing to memory")
        }
        ReportFormat::Markdown => {
            let rows = text_rows(table);
            let mut out = String::new();
            let _ = writeln!(out, "**{}**\n", table.title);
            for (i, row) in rows.iter().enumerate() {
                let _ = writeln!(out, "| {} |", row.join(" | "));
                if i == 0 {
                    let _ = writeln!(out, "|{}", "---|".repeat(row.len()));
                }
            }
            out.into_bytes()
        }
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(table).expect("table serializes");
            bytes.push(b'\n');
            bytes
        }
    }
}
