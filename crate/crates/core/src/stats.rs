//! Pairwise association between binary feature columns.
//!
//! Spearman's rho is computed the long way (midranks, then Pearson) rather
//! than with the `1 - 6Σd²/(n(n²-1))` shortcut, which is wrong under ties and
//! binary columns are nothing but ties. The chi-square test is the plain
//! Pearson statistic on a 2x2 table, no continuity correction, with the
//! one-degree-of-freedom tail `erfc(sqrt(x / 2))`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::dataset::{Feature, FeatureMatrix};

pub const MODERATE_CORRELATION: f64 = 0.4;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: column is constant")]
    ConstantColumn,
    #[error("chi-square undefined: table has a zero row or column margin")]
    DegenerateTable,
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("failed to write {path}: {message}")]
    Write { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Observed counts of two binary variables. Rows index `x`, columns `y`:
/// `a = #(0,0)`, `b = #(0,1)`, `c = #(1,0)`, `d = #(1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Contingency2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Contingency2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Contingency2x2 { a, b, c, d }
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Row and column margins: `[x=0, x=1, y=0, y=1]`.
    pub fn margins(&self) -> [u64; 4] {
        [self.a + self.b, self.c + self.d, self.a + self.c, self.b + self.d]
    }

    pub fn transposed(&self) -> Self {
        Contingency2x2::new(self.a, self.c, self.b, self.d)
    }

    /// Phi coefficient, the Pearson correlation of the two binary variables.
    pub fn phi(&self) -> Option<f64> {
        let [r0, r1, c0, c1] = self.margins();
        let denom = (r0 as f64) * (r1 as f64) * (c0 as f64) * (c1 as f64);
        if denom == 0.0 {
            return None;
        }
        let num = self.a as f64 * self.d as f64 - self.b as f64 * self.c as f64;
        Some(num / denom.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

pub fn contingency(x: &[u8], y: &[u8]) -> Result<Contingency2x2> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let mut t = Contingency2x2::new(0, 0, 0, 0);
    for (&xi, &yi) in x.iter().zip(y) {
        match (xi != 0, yi != 0) {
            (false, false) => t.a += 1,
            (false, true) => t.b += 1,
            (true, false) => t.c += 1,
            (true, true) => t.d += 1,
        }
    }
    Ok(t)
}

/// Survival function of the chi-square distribution with one degree of freedom.
pub fn chi2_sf_1dof(statistic: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0)
}

pub fn chi_square_test(t: &Contingency2x2) -> Result<ChiSquareResult> {
    let n = t.n();
    if n == 0 {
        return Err(StatsError::EmptyTable);
    }
    let margins = t.margins();
    if margins.contains(&0) {
        return Err(StatsError::DegenerateTable);
    }
    let diff = t.a as f64 * t.d as f64 - t.b as f64 * t.c as f64;
    let denom: f64 = margins.iter().map(|&m| m as f64).product();
    let statistic = n as f64 * diff * diff / denom;
    Ok(ChiSquareResult { statistic, dof: 1, p_value: chi2_sf_1dof(statistic) })
}

/// Average ranks (1-based), tied values sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantColumn);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman_rho(x: &[u8], y: &[u8]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort(x.len()));
    }
    let to_f = |v: &[u8]| v.iter().map(|&b| b as f64).collect::<Vec<_>>();
    pearson(&midranks(&to_f(x)), &midranks(&to_f(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationKind {
    SpearmanRho,
    ChiSquareP,
    ChiSquareStat,
}

/// Symmetric grid of pairwise values. `None` marks a pair where the measure
/// is undefined (constant column or zero margin); such cells are never filled
/// with a placeholder number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationMatrix {
    pub kind: AssociationKind,
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairValue {
    pub first: String,
    pub second: String,
    pub value: f64,
}

impl AssociationMatrix {
    pub fn from_columns(columns: &[(String, Vec<u8>)], kind: AssociationKind) -> Self {
        let k = columns.len();
        let mut values = vec![vec![None; k]; k];
        for i in 0..k {
            for j in i..k {
                let (x, y) = (&columns[i].1, &columns[j].1);
                let v = match kind {
                    AssociationKind::SpearmanRho => spearman_rho(x, y).ok(),
                    AssociationKind::ChiSquareP | AssociationKind::ChiSquareStat => {
                        contingency(x, y).and_then(|t| chi_square_test(&t)).ok().map(|r| match kind {
                            AssociationKind::ChiSquareP => r.p_value,
                            _ => r.statistic,
                        })
                    }
                };
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        AssociationMatrix { kind, feature_names: columns.iter().map(|(n, _)| n.clone()).collect(), values }
    }

    pub fn size(&self) -> usize {
        self.feature_names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Off-diagonal pairs (upper triangle) satisfying `keep`.
    pub fn pairs_where(&self, keep: impl Fn(f64) -> bool) -> Vec<PairValue> {
        let mut out = Vec::new();
        for i in 0..self.size() {
            for j in i + 1..self.size() {
                if let Some(v) = self.values[i][j] {
                    if keep(v) {
                        out.push(PairValue {
                            first: self.feature_names[i].clone(),
                            second: self.feature_names[j].clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn undefined_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for i in 0..self.size() {
            for j in i + 1..self.size() {
                if self.values[i][j].is_none() {
                    out.push((self.feature_names[i].clone(), self.feature_names[j].clone()));
                }
            }
        }
        out
    }

    /// Comma-delimited grid: header row and first column hold feature names,
    /// cells use 6 significant digits, undefined cells are `NA`.
    pub fn to_grid_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("feature");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, name) in self.feature_names.iter().enumerate() {
            out.push_str(name);
            for v in &self.values[i] {
                out.push(',');
                match v {
                    Some(x) => out.push_str(&format_sig(*x, 6)),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Static heatmap. Colour ramp:
    /// * rho: linear from `#2166ac` (-1) through `#f7f7f7` (0) to `#b2182b` (+1);
    /// * p-value: `#f7f7f7` at p = 1 to `#b2182b` at p = 0;
    /// * statistic: `#f7f7f7` at 0 to `#b2182b` at the grid maximum;
    /// * undefined cells: `#bdbdbd`.
    pub fn to_svg(&self) -> String {
        const CELL: usize = 56;
        const LABEL: usize = 150;
        let k = self.size();
        let side = LABEL + CELL * k;
        let max_stat = self.values.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(*v));
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" font-family="sans-serif" font-size="11">"#
        );
        for (i, name) in self.feature_names.iter().enumerate() {
            let y = LABEL + i * CELL + CELL / 2;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{name}</text>"#,
                LABEL - 4
            );
            let x = LABEL + i * CELL + CELL / 2;
            let _ = writeln!(
                svg,
                r#"<text x="{x}" y="{}" text-anchor="start" transform="rotate(-60 {x} {})">{name}</text>"#,
                LABEL - 4,
                LABEL - 4
            );
        }
        for i in 0..k {
            for j in 0..k {
                let (fill, text) = match self.values[i][j] {
                    None => ("#bdbdbd".to_string(), "NA".to_string()),
                    Some(v) => {
                        let fill = match self.kind {
                            AssociationKind::SpearmanRho => diverging(v),
                            AssociationKind::ChiSquareP => sequential(1.0 - v),
                            AssociationKind::ChiSquareStat => {
                                sequential(if max_stat > 0.0 { v / max_stat } else { 0.0 })
                            }
                        };
                        (fill, format_sig(v, 3))
                    }
                };
                let (x, y) = (LABEL + j * CELL, LABEL + i * CELL);
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white"/><text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle">{text}</text>"#,
                    x + CELL / 2,
                    y + CELL / 2
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

const LOW: [f64; 3] = [0x21 as f64, 0x66 as f64, 0xac as f64];
const MID: [f64; 3] = [0xf7 as f64, 0xf7 as f64, 0xf7 as f64];
const HIGH: [f64; 3] = [0xb2 as f64, 0x18 as f64, 0x2b as f64];

fn mix(from: [f64; 3], to: [f64; 3], t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c: Vec<u8> = (0..3).map(|i| (from[i] + (to[i] - from[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn diverging(v: f64) -> String {
    if v < 0.0 {
        mix(MID, LOW, -v)
    } else {
        mix(MID, HIGH, v)
    }
}

fn sequential(t: f64) -> String {
    mix(MID, HIGH, t)
}

/// `%g`-style formatting with `sig` significant digits.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn pairwise_matrix(m: &FeatureMatrix, kind: AssociationKind) -> AssociationMatrix {
    let columns: Vec<(String, Vec<u8>)> =
        Feature::ALL.iter().map(|f| (f.name().to_string(), m.feature_column(*f))).collect();
    AssociationMatrix::from_columns(&columns, kind)
}

/// Writes the grid file and, when `svg` is set, an SVG next to it.
pub fn export_heatmap(a: &AssociationMatrix, path: &Path, svg: Option<&Path>) -> Result<()> {
    let write = |p: &Path, body: String| {
        std::fs::write(p, body).map_err(|e| StatsError::Write { path: p.display().to_string(), message: e.to_string() })
    };
    write(path, a.to_grid_csv())?;
    if let Some(svg_path) = svg {
        write(svg_path, a.to_svg())?;
    }
    Ok(())
}
