//! Dataset model: labeled experiments, feature subsets and CSV ingestion.
//!
//! Each experiment records the transfer duration (ETA) of a file sent by the
//! access point together with the transmit power, the AP-receiver distance,
//! the WiFi channel and the time of day. The label is the number of nodes
//! simultaneously receiving data.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transmit power levels of the measurement campaign, in dBm.
pub const TX_POWERS_DBM: [u8; 5] = [0, 5, 10, 15, 20];
/// AP to receiver distances of the measurement campaign, in meters.
pub const DISTANCES_M: [u8; 3] = [1, 5, 10];

pub const CSV_HEADER: [&str; 6] = [
    "eta_s",
    "tx_power_dbm",
    "distance_m",
    "channel",
    "time_of_day",
    "n_nodes",
];

/// Number of nodes simultaneously receiving from the access point (1..=4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct NodeCount(u8);

impl NodeCount {
    pub const COUNT: usize = 4;
    pub const ALL: [NodeCount; 4] = [NodeCount(1), NodeCount(2), NodeCount(3), NodeCount(4)];

    pub fn new(n: u8) -> Option<Self> {
        (1..=4).contains(&n).then_some(NodeCount(n))
    }

    /// Builds the class from a zero-based index. Panics if `index >= 4`.
    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, suitable for indexing 4-element arrays.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl TryFrom<u8> for NodeCount {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, String> {
        NodeCount::new(n).ok_or_else(|| format!("node count {n} outside 1..=4"))
    }
}

impl From<NodeCount> for u8 {
    fn from(n: NodeCount) -> u8 {
        n.0
    }
}

impl fmt::Display for NodeCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Channel {
    Ch1,
    Ch6,
    Ch11,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Ch1, Channel::Ch6, Channel::Ch11];

    pub fn number(self) -> u8 {
        match self {
            Channel::Ch1 => 1,
            Channel::Ch6 => 6,
            Channel::Ch11 => 11,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Channel {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, String> {
        match n {
            1 => Ok(Channel::Ch1),
            6 => Ok(Channel::Ch6),
            11 => Ok(Channel::Ch11),
            _ => Err(format!("channel {n} not in {{1, 6, 11}}")),
        }
    }
}

impl From<Channel> for u8 {
    fn from(c: Channel) -> u8 {
        c.number()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeOfDay {
    Morning,
    Afternoon,
    Night,
}

impl TimeOfDay {
    pub const ALL: [TimeOfDay; 3] = [TimeOfDay::Morning, TimeOfDay::Afternoon, TimeOfDay::Night];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeOfDay::Morning => "morning",
            TimeOfDay::Afternoon => "afternoon",
            TimeOfDay::Night => "night",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for TimeOfDay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "morning" => Ok(TimeOfDay::Morning),
            "afternoon" => Ok(TimeOfDay::Afternoon),
            "night" => Ok(TimeOfDay::Night),
            _ => Err(format!("unknown time of day `{s}`")),
        }
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One measured transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub eta_s: f64,
    pub tx_power_dbm: u8,
    pub distance_m: u8,
    pub channel: Channel,
    pub time_of_day: TimeOfDay,
    pub label: NodeCount,
}

impl LabeledExample {
    pub fn new(
        eta_s: f64,
        tx_power_dbm: u8,
        distance_m: u8,
        channel: Channel,
        time_of_day: TimeOfDay,
        label: NodeCount,
    ) -> Result<Self> {
        if !(eta_s > 0.0 && eta_s.is_finite()) {
            return Err(Error::NonPositiveEta {
                line: 0,
                value: eta_s,
            });
        }
        if !TX_POWERS_DBM.contains(&tx_power_dbm) {
            return Err(Error::OutOfDomain {
                line: 0,
                field: "tx_power_dbm",
                value: tx_power_dbm.to_string(),
            });
        }
        if !DISTANCES_M.contains(&distance_m) {
            return Err(Error::OutOfDomain {
                line: 0,
                field: "distance_m",
                value: distance_m.to_string(),
            });
        }
        Ok(LabeledExample {
            eta_s,
            tx_power_dbm,
            distance_m,
            channel,
            time_of_day,
            label,
        })
    }

    pub fn feature(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Eta => self.eta_s,
            Feature::TxPower => f64::from(self.tx_power_dbm),
            Feature::Distance => f64::from(self.distance_m),
        }
    }
}

/// A model input column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Eta,
    TxPower,
    Distance,
}

impl Feature {
    /// Power and distance take a handful of discrete values.
    pub fn is_categorical(self) -> bool {
        !matches!(self, Feature::Eta)
    }
}

/// Which observables are handed to the classifiers. ETA is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    #[serde(rename = "eta", alias = "eta_only")]
    EtaOnly,
    EtaPower,
    EtaDistance,
    EtaPowerDistance,
}

impl FeatureSubset {
    pub const ALL: [FeatureSubset; 4] = [
        FeatureSubset::EtaOnly,
        FeatureSubset::EtaDistance,
        FeatureSubset::EtaPower,
        FeatureSubset::EtaPowerDistance,
    ];

    pub fn features(self) -> &'static [Feature] {
        match self {
            FeatureSubset::EtaOnly => &[Feature::Eta],
            FeatureSubset::EtaPower => &[Feature::Eta, Feature::TxPower],
            FeatureSubset::EtaDistance => &[Feature::Eta, Feature::Distance],
            FeatureSubset::EtaPowerDistance => &[Feature::Eta, Feature::TxPower, Feature::Distance],
        }
    }

    pub fn dimension(self) -> usize {
        self.features().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSubset::EtaOnly => "eta",
            FeatureSubset::EtaPower => "eta_power",
            FeatureSubset::EtaDistance => "eta_distance",
            FeatureSubset::EtaPowerDistance => "eta_power_distance",
        }
    }
}

impl FromStr for FeatureSubset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eta" | "eta_only" => Ok(FeatureSubset::EtaOnly),
            "eta_power" => Ok(FeatureSubset::EtaPower),
            "eta_distance" => Ok(FeatureSubset::EtaDistance),
            "eta_power_distance" => Ok(FeatureSubset::EtaPowerDistance),
            _ => Err(format!("unknown feature subset `{s}`")),
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The experiment table together with the active feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    subset: FeatureSubset,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, subset: FeatureSubset) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset { examples, subset })
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn subset(&self) -> FeatureSubset {
        self.subset
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.subset.dimension()
    }

    pub fn labels(&self) -> Vec<NodeCount> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for e in &self.examples {
            counts[e.label.index()] += 1;
        }
        counts
    }

    /// Same examples, different visible features.
    pub fn project(&self, subset: FeatureSubset) -> Dataset {
        Dataset {
            examples: self.examples.clone(),
            subset,
        }
    }

    pub fn feature_row(&self, i: usize) -> Vec<f64> {
        let e = &self.examples[i];
        self.subset
            .features()
            .iter()
            .map(|&f| e.feature(f))
            .collect()
    }

    /// Row-major M x n feature matrix.
    pub fn feature_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.feature_row(i)).collect()
    }

    pub fn samples(&self) -> Samples {
        self.samples_at(&(0..self.len()).collect::<Vec<_>>())
    }

    /// Feature view of the examples at `indices`, in that order.
    pub fn samples_at(&self, indices: &[usize]) -> Samples {
        let columns = self.subset.features().to_vec();
        let mut values = Vec::with_capacity(indices.len() * columns.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let e = &self.examples[i];
            values.extend(columns.iter().map(|&f| e.feature(f)));
            labels.push(e.label);
        }
        Samples {
            columns,
            values,
            labels,
        }
    }

    /// New dataset holding the examples at `indices`.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            indices.iter().map(|&i| self.examples[i]).collect(),
            self.subset,
        )
    }
}

/// Numeric training/evaluation matrix with labels.
///
/// This is what the classifiers consume. Unlike [`Dataset`] the values may
/// be standardized and therefore negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub columns: Vec<Feature>,
    pub values: Vec<f64>,
    pub labels: Vec<NodeCount>,
}

impl Samples {
    pub fn new(columns: Vec<Feature>, rows: Vec<Vec<f64>>, labels: Vec<NodeCount>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let mut values = Vec::with_capacity(rows.len() * columns.len());
        for row in &rows {
            if row.len() != columns.len() {
                return Err(Error::DimensionMismatch {
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Samples {
            columns,
            values,
            labels,
        })
    }

    /// Convenience constructor for single-feature (ETA) data.
    pub fn from_eta(values: &[f64], labels: &[NodeCount]) -> Result<Self> {
        Samples::new(
            vec![Feature::Eta],
            values.iter().map(|&v| vec![v]).collect(),
            labels.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim().max(1))
    }

    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn select(&self, indices: &[usize]) -> Samples {
        let mut values = Vec::with_capacity(indices.len() * self.dim());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Samples {
            columns: self.columns.clone(),
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: CSV_HEADER.join(","),
        });
    }

    let mut examples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        examples.push(parse_row(&record, line)?);
    }
    Dataset::new(examples, FeatureSubset::EtaPowerDistance)
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<LabeledExample> {
    let field = |i: usize| record.get(i).unwrap_or("");
    let malformed = |field: &'static str, message: String| Error::MalformedRow {
        line,
        field,
        message,
    };

    let eta_s: f64 = field(0)
        .parse()
        .map_err(|e| malformed("eta_s", format!("{e}")))?;
    if !(eta_s > 0.0 && eta_s.is_finite()) {
        return Err(Error::NonPositiveEta { line, value: eta_s });
    }

    let tx_power_dbm: u8 = field(1)
        .parse()
        .map_err(|e| malformed("tx_power_dbm", format!("{e}")))?;
    if !TX_POWERS_DBM.contains(&tx_power_dbm) {
        return Err(Error::OutOfDomain {
            line,
            field: "tx_power_dbm",
            value: field(1).to_string(),
        });
    }

    let distance_m: u8 = field(2)
        .parse()
        .map_err(|e| malformed("distance_m", format!("{e}")))?;
    if !DISTANCES_M.contains(&distance_m) {
        return Err(Error::OutOfDomain {
            line,
            field: "distance_m",
            value: field(2).to_string(),
        });
    }

    let channel = field(3)
        .parse::<u8>()
        .map_err(|e| malformed("channel", format!("{e}")))
        .and_then(|n| {
            Channel::try_from(n).map_err(|_| Error::OutOfDomain {
                line,
                field: "channel",
                value: field(3).to_string(),
            })
        })?;

    let time_of_day: TimeOfDay = field(4).parse().map_err(|_| Error::OutOfDomain {
        line,
        field: "time_of_day",
        value: field(4).to_string(),
    })?;

    let raw_label: i64 = field(5)
        .parse()
        .map_err(|e| malformed("n_nodes", format!("{e}")))?;
    let label = u8::try_from(raw_label)
        .ok()
        .and_then(NodeCount::new)
        .ok_or(Error::LabelOutOfRange {
            line,
            value: raw_label,
        })?;

    Ok(LabeledExample {
        eta_s,
        tx_power_dbm,
        distance_m,
        channel,
        time_of_day,
        label,
    })
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for e in dataset.examples() {
        wtr.write_record([
            e.eta_s.to_string(),
            e.tx_power_dbm.to_string(),
            e.distance_m.to_string(),
            e.channel.number().to_string(),
            e.time_of_day.as_str().to_string(),
            e.label.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}
