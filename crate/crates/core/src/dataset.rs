//! The solution dataset: nine binary features and six application-area
//! labels per NoSQL solution, plus a per-row provenance ledger.
//!
//! The on-disk format is a plain comma-delimited file with a fixed header
//! (see [`CSV_HEADER`]). Parsing is strict: every cell must be `0` or `1`,
//! names must be unique and the column count must match the header.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FEATURE_COUNT: usize = 9;
pub const AREA_COUNT: usize = 6;
pub const CANONICAL_RECORD_COUNT: usize = 80;

/// The curated dataset shipped with the crate.
pub const CANONICAL_CSV: &str = include_str!("../data/nosql_solutions.csv");
/// Provenance ledger matching [`CANONICAL_CSV`].
pub const CANONICAL_PROVENANCE: &str = include_str!("../data/provenance.tsv");

pub const CSV_HEADER: &str = "name,document_oriented,graph,key_value,wide_column,consistent,available,partition_tolerant,free,proprietary,smart_cities,social_network_analysis,geospatial,life_sciences,healthcare,business_intelligence";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}, column `{column}`: {message}")]
    Cell { line: usize, column: String, message: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },
    #[error("line {line}, column `name`: duplicate solution name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("provenance line {line}: {message}")]
    Provenance { line: usize, message: String },
    #[error("unknown feature subset `{0}` (expected ALL, DMCAP, CAPFP or DMFP)")]
    UnknownSubset(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    DocumentOriented,
    Graph,
    KeyValue,
    WideColumn,
    Consistent,
    Available,
    PartitionTolerant,
    Free,
    Proprietary,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::DocumentOriented,
        Feature::Graph,
        Feature::KeyValue,
        Feature::WideColumn,
        Feature::Consistent,
        Feature::Available,
        Feature::PartitionTolerant,
        Feature::Free,
        Feature::Proprietary,
    ];
    pub const DATA_MODELS: [Feature; 4] =
        [Feature::DocumentOriented, Feature::Graph, Feature::KeyValue, Feature::WideColumn];
    pub const CAP: [Feature; 3] = [Feature::Consistent, Feature::Available, Feature::PartitionTolerant];
    pub const OWNERSHIP: [Feature; 2] = [Feature::Free, Feature::Proprietary];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::DocumentOriented => "document_oriented",
            Feature::Graph => "graph",
            Feature::KeyValue => "key_value",
            Feature::WideColumn => "wide_column",
            Feature::Consistent => "consistent",
            Feature::Available => "available",
            Feature::PartitionTolerant => "partition_tolerant",
            Feature::Free => "free",
            Feature::Proprietary => "proprietary",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Application areas with a dedicated suitability model. The catch-all
/// "others" category is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Area {
    SmartCities,
    SocialNetworkAnalysis,
    Geospatial,
    LifeSciences,
    Healthcare,
    BusinessIntelligence,
}

impl Area {
    pub const ALL: [Area; AREA_COUNT] = [
        Area::SmartCities,
        Area::SocialNetworkAnalysis,
        Area::Geospatial,
        Area::LifeSciences,
        Area::Healthcare,
        Area::BusinessIntelligence,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Area::SmartCities => "smart_cities",
            Area::SocialNetworkAnalysis => "social_network_analysis",
            Area::Geospatial => "geospatial",
            Area::LifeSciences => "life_sciences",
            Area::Healthcare => "healthcare",
            Area::BusinessIntelligence => "business_intelligence",
        }
    }

    pub fn from_name(name: &str) -> Option<Area> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl fmt::Display for Area {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Nine feature flags in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [bool; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, f: Feature) -> bool {
        self.0[f.index()]
    }

    pub fn set(&mut self, f: Feature, value: bool) {
        self.0[f.index()] = value;
    }

    pub fn toggled(mut self, f: Feature) -> Self {
        self.0[f.index()] = !self.0[f.index()];
        self
    }

    pub fn count_of(&self, group: &[Feature]) -> usize {
        group.iter().filter(|f| self.get(**f)).count()
    }

    pub fn as_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&b| b as u8).collect()
    }

    /// Vector whose bit `i` (feature index `i`) is taken from bit `i` of `code`.
    pub fn from_code(code: u16) -> Self {
        let mut out = [false; FEATURE_COUNT];
        for (i, flag) in out.iter_mut().enumerate() {
            *flag = code >> i & 1 == 1;
        }
        FeatureVector(out)
    }

    /// All 512 possible feature vectors.
    pub fn domain() -> impl Iterator<Item = FeatureVector> {
        (0..1u16 << FEATURE_COUNT).map(FeatureVector::from_code)
    }

    pub fn from_slice(bits: &[u8]) -> Option<Self> {
        if bits.len() != FEATURE_COUNT || bits.iter().any(|&b| b > 1) {
            return None;
        }
        let mut out = [false; FEATURE_COUNT];
        for (o, b) in out.iter_mut().zip(bits) {
            *o = *b == 1;
        }
        Some(FeatureVector(out))
    }
}

impl FromStr for FeatureVector {
    type Err = String;

    /// Parses a 9-character bit string such as `100110010`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.chars().count() != FEATURE_COUNT {
            return Err(format!("expected {FEATURE_COUNT} feature bits, got {} in `{s}`", s.chars().count()));
        }
        let mut out = [false; FEATURE_COUNT];
        for (i, c) in s.chars().enumerate() {
            out[i] = match c {
                '0' => false,
                '1' => true,
                other => return Err(format!("feature bit {i} is `{other}`, expected 0 or 1")),
            };
        }
        Ok(FeatureVector(out))
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceNote {
    pub field: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub name: String,
    pub features: FeatureVector,
    pub areas: [bool; AREA_COUNT],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<ProvenanceNote>,
}

impl SolutionRecord {
    pub fn has_area(&self, area: Area) -> bool {
        self.areas[area.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    records: Vec<SolutionRecord>,
    version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubsetId {
    #[serde(rename = "ALL")]
    All,
    #[serde(rename = "DMCAP")]
    Dmcap,
    #[serde(rename = "CAPFP")]
    Capfp,
    #[serde(rename = "DMFP")]
    Dmfp,
}

impl SubsetId {
    pub const ALL: [SubsetId; 4] = [SubsetId::All, SubsetId::Dmcap, SubsetId::Capfp, SubsetId::Dmfp];

    pub fn label(self) -> &'static str {
        match self {
            SubsetId::All => "All",
            SubsetId::Dmcap => "DMCAP",
            SubsetId::Capfp => "CAPFP",
            SubsetId::Dmfp => "DMFP",
        }
    }

    pub fn columns(self) -> Vec<Feature> {
        match self {
            SubsetId::All => Feature::ALL.to_vec(),
            SubsetId::Dmcap => [&Feature::DATA_MODELS[..], &Feature::CAP[..]].concat(),
            SubsetId::Capfp => [&Feature::CAP[..], &Feature::OWNERSHIP[..]].concat(),
            SubsetId::Dmfp => [&Feature::DATA_MODELS[..], &Feature::OWNERSHIP[..]].concat(),
        }
    }

    pub fn subset(self) -> FeatureSubset {
        FeatureSubset { id: self, columns: self.columns() }
    }
}

impl FromStr for SubsetId {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ALL" => Ok(SubsetId::All),
            "DMCAP" => Ok(SubsetId::Dmcap),
            "CAPFP" => Ok(SubsetId::Capfp),
            "DMFP" => Ok(SubsetId::Dmfp),
            _ => Err(DatasetError::UnknownSubset(s.to_string())),
        }
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSubset {
    pub id: SubsetId,
    pub columns: Vec<Feature>,
}

/// Feature columns restricted to a subset, one categorical row per record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedMatrix {
    pub subset: SubsetId,
    pub columns: Vec<Feature>,
    pub rows: Vec<Vec<u8>>,
}

impl ProjectedMatrix {
    pub fn column_names(&self) -> Vec<&'static str> {
        self.columns.iter().map(|f| f.name()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NoDataModel,
    CapCount,
    NoOwnership,
    EmptyName,
    DuplicateName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub record: String,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Frequencies {
    pub records: usize,
    pub features: [usize; FEATURE_COUNT],
    pub areas: [usize; AREA_COUNT],
}

impl FeatureMatrix {
    pub fn new(records: Vec<SolutionRecord>) -> Self {
        let mut m = FeatureMatrix { records, version: String::new() };
        m.version = m.compute_version();
        m
    }

    /// The curated dataset with its provenance notes attached.
    pub fn canonical() -> Self {
        let mut m = parse_csv(CANONICAL_CSV).expect("embedded dataset parses");
        m.attach_provenance(CANONICAL_PROVENANCE).expect("embedded provenance ledger parses");
        m
    }

    pub fn records(&self) -> &[SolutionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn feature_names(&self) -> [&'static str; FEATURE_COUNT] {
        Feature::ALL.map(Feature::name)
    }

    pub fn area_names(&self) -> [&'static str; AREA_COUNT] {
        Area::ALL.map(Area::name)
    }

    pub fn get(&self, name: &str) -> Option<&SolutionRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.records.iter().position(|r| r.name == name)
    }

    pub fn feature_column(&self, f: Feature) -> Vec<u8> {
        self.records.iter().map(|r| r.features.get(f) as u8).collect()
    }

    pub fn area_column(&self, a: Area) -> Vec<bool> {
        self.records.iter().map(|r| r.has_area(a)).collect()
    }

    pub fn feature_rows(&self) -> Vec<FeatureVector> {
        self.records.iter().map(|r| r.features).collect()
    }

    /// True for the 80-record dataset that passes validation.
    pub fn is_canonical(&self) -> bool {
        self.records.len() == CANONICAL_RECORD_COUNT && validate_dataset(self).is_empty()
    }

    pub fn filter(&self, keep: impl Fn(&SolutionRecord) -> bool) -> FeatureMatrix {
        FeatureMatrix::new(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.name);
            for b in r.features.0.iter().chain(r.areas.iter()) {
                out.push(',');
                out.push(if *b { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn provenance_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            for p in &r.provenance {
                out.push_str(&format!("{}\t{}\t{}\n", r.name, p.field, p.note));
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    /// Reads a `name<TAB>field<TAB>note` ledger and attaches each note to its record.
    pub fn attach_provenance(&mut self, ledger: &str) -> Result<()> {
        for (i, line) in ledger.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(name), Some(field), Some(note)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(DatasetError::Provenance {
                    line: i + 1,
                    message: "expected name<TAB>field<TAB>note".into(),
                });
            };
            let known_field = field == "areas"
                || field == "features"
                || Feature::from_name(field).is_some()
                || Area::from_name(field).is_some();
            if !known_field {
                return Err(DatasetError::Provenance { line: i + 1, message: format!("unknown field `{field}`") });
            }
            let record = self.records.iter_mut().find(|r| r.name == name).ok_or_else(|| DatasetError::Provenance {
                line: i + 1,
                message: format!("no record named `{name}`"),
            })?;
            record.provenance.push(ProvenanceNote { field: field.to_string(), note: note.to_string() });
        }
        Ok(())
    }

    fn compute_version(&self) -> String {
        let digest = Sha256::digest(self.to_csv().as_bytes());
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!("ds-{hex}")
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_csv(&text)
}

pub fn load_provenance(m: &mut FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    m.attach_provenance(&text)
}

pub fn parse_csv(text: &str) -> Result<FeatureMatrix> {
    let columns: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == CSV_HEADER => {}
        Some((i, _)) => {
            return Err(DatasetError::Header { line: i + 1, message: format!("header must be `{CSV_HEADER}`") })
        }
        None => return Err(DatasetError::Header { line: 1, message: "file is empty".into() }),
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(DatasetError::ColumnCount { line: lineno, expected: columns.len(), found: cells.len() });
        }
        let name = cells[0].trim();
        if name.is_empty() {
            return Err(DatasetError::Cell { line: lineno, column: "name".into(), message: "empty name".into() });
        }
        if !seen.insert(name.to_string()) {
            return Err(DatasetError::DuplicateName { line: lineno, name: name.to_string() });
        }
        let mut bits = [false; FEATURE_COUNT + AREA_COUNT];
        for (j, cell) in cells[1..].iter().enumerate() {
            bits[j] = match cell.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(DatasetError::Cell {
                        line: lineno,
                        column: columns[j + 1].to_string(),
                        message: format!("`{other}` is not 0 or 1"),
                    })
                }
            };
        }
        let mut features = [false; FEATURE_COUNT];
        features.copy_from_slice(&bits[..FEATURE_COUNT]);
        let mut areas = [false; AREA_COUNT];
        areas.copy_from_slice(&bits[FEATURE_COUNT..]);
        records.push(SolutionRecord {
            name: name.to_string(),
            features: FeatureVector(features),
            areas,
            provenance: Vec::new(),
        });
    }
    Ok(FeatureMatrix::new(records))
}

/// Every invariant violation, one entry each. An empty report means the
/// dataset is valid. More than three CAP flags cannot be represented, so the
/// CAP check only ever fires for zero flags.
pub fn validate_dataset(m: &FeatureMatrix) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for r in m.records() {
        let mut push = |kind, message: String| out.push(Violation { record: r.name.clone(), kind, message });
        if r.name.trim().is_empty() {
            push(ViolationKind::EmptyName, "name is empty".into());
        } else if !seen.insert(r.name.as_str()) {
            push(ViolationKind::DuplicateName, format!("`{}` appears more than once", r.name));
        }
        if r.features.count_of(&Feature::DATA_MODELS) == 0 {
            push(ViolationKind::NoDataModel, "no data-model flag set".into());
        }
        let cap = r.features.count_of(&Feature::CAP);
        if !(1..=3).contains(&cap) {
            push(ViolationKind::CapCount, format!("{cap} CAP flags set, expected 1 to 3"));
        }
        if r.features.count_of(&Feature::OWNERSHIP) == 0 {
            push(ViolationKind::NoOwnership, "neither free nor proprietary".into());
        }
    }
    out
}

pub fn feature_frequencies(m: &FeatureMatrix) -> Frequencies {
    let mut features = [0; FEATURE_COUNT];
    let mut areas = [0; AREA_COUNT];
    for r in m.records() {
        for (c, b) in features.iter_mut().zip(r.features.0) {
            *c += b as usize;
        }
        for (c, b) in areas.iter_mut().zip(r.areas) {
            *c += b as usize;
        }
    }
    Frequencies { records: m.len(), features, areas }
}

pub fn project(m: &FeatureMatrix, subset: SubsetId) -> ProjectedMatrix {
    let columns = subset.columns();
    let rows = m.records().iter().map(|r| columns.iter().map(|f| r.features.get(*f) as u8).collect()).collect();
    ProjectedMatrix { subset, columns, rows }
}
