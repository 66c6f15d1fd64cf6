//! Tabular data ingestion, sensitive/non-sensitive split and the canonical
//! field serialization used for commitment.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crypto::Commitment;
use crate::error::{Error, Result};
use crate::field::Fe;
use crate::fixed::FixedPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnKind {
    Categorical,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Sensitive,
    NonSensitive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    /// Labels per categorical column; the label's position is its index.
    pub category_maps: BTreeMap<String, Vec<String>>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::SchemaError(format!("duplicate column {}", c.name)));
            }
        }
        let n = columns.iter().filter(|c| c.role == Role::Sensitive).count();
        if n == 0 || n == columns.len() {
            return Err(Error::SchemaError(
                "need at least one sensitive and one non-sensitive column".into(),
            ));
        }
        Ok(Schema { columns, category_maps: BTreeMap::new() })
    }

    /// `n` sensitive columns `s0..` followed by `m` non-sensitive `x0..`, all
    /// continuous.
    pub fn synthetic(n: usize, m: usize) -> Self {
        let cols = (0..n)
            .map(|i| Column { name: format!("s{i}"), kind: ColumnKind::Continuous, role: Role::Sensitive })
            .chain((0..m).map(|i| Column {
                name: format!("x{i}"),
                kind: ColumnKind::Continuous,
                role: Role::NonSensitive,
            }))
            .collect();
        Schema::new(cols).expect("synthetic schema is valid")
    }

    pub fn n(&self) -> usize {
        self.columns.iter().filter(|c| c.role == Role::Sensitive).count()
    }

    pub fn m(&self) -> usize {
        self.columns.len() - self.n()
    }

    pub fn sensitive_names(&self) -> Vec<&str> {
        self.columns.iter().filter(|c| c.role == Role::Sensitive).map(|c| c.name.as_str()).collect()
    }
}

/// Column name to (role, kind), parsed from `name = role,kind` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoleConfig {
    pub entries: Vec<(String, Role, ColumnKind)>,
}

impl RoleConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::ParseError(format!("role config line {}: {line:?}", lineno + 1));
            let (name, rest) = line.split_once('=').ok_or_else(bad)?;
            let mut role = None;
            let mut kind = None;
            for tok in rest.split(',').map(|t| t.trim().to_ascii_lowercase()) {
                match tok.as_str() {
                    "sensitive" | "s" => role = Some(Role::Sensitive),
                    "non_sensitive" | "non-sensitive" | "nonsensitive" | "ns" => {
                        role = Some(Role::NonSensitive)
                    }
                    "categorical" => kind = Some(ColumnKind::Categorical),
                    "continuous" => kind = Some(ColumnKind::Continuous),
                    _ => return Err(bad()),
                }
            }
            entries.push((name.trim().to_string(), role.ok_or_else(bad)?, kind.ok_or_else(bad)?));
        }
        Ok(RoleConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn lookup(&self, name: &str) -> Option<(Role, ColumnKind)> {
        self.entries.iter().find(|e| e.0 == name).map(|e| (e.1, e.2))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Vec<FixedPoint>>,
}

pub type Matrix = Vec<Vec<FixedPoint>>;

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Vec<FixedPoint>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::EmptyDataset);
        }
        let w = schema.columns.len();
        if let Some(i) = rows.iter().position(|r| r.len() != w) {
            return Err(Error::ShapeMismatch(format!("row {i} has {} values, expected {w}", rows[i].len())));
        }
        Ok(Dataset { schema, rows })
    }

    /// Rebuilds a dataset from its sensitive and non-sensitive parts.
    pub fn from_parts(schema: Schema, xs: &Matrix, xns: &Matrix) -> Result<Self> {
        if xs.len() != xns.len() {
            return Err(Error::ShapeMismatch("part row counts differ".into()));
        }
        let (n, m) = (schema.n(), schema.m());
        let mut rows = Vec::with_capacity(xs.len());
        for (s, ns) in xs.iter().zip(xns) {
            if s.len() != n || ns.len() != m {
                return Err(Error::ShapeMismatch("part width differs from schema".into()));
            }
            let (mut si, mut nsi) = (s.iter(), ns.iter());
            rows.push(
                schema
                    .columns
                    .iter()
                    .map(|c| *match c.role {
                        Role::Sensitive => si.next().unwrap(),
                        Role::NonSensitive => nsi.next().unwrap(),
                    })
                    .collect(),
            );
        }
        Dataset::new(schema, rows)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.schema.n()
    }

    pub fn m(&self) -> usize {
        self.schema.m()
    }

    pub fn commitment(&self) -> Commitment {
        Commitment::of(&canonical_serialize(self))
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Parsed dataset plus the number of rows dropped for missing cells.
pub struct Ingested {
    pub dataset: Dataset,
    pub skipped_rows: usize,
}

pub fn ingest_reader<R: Read>(reader: R, cfg: &RoleConfig) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::ParseError(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    for (name, _, _) in &cfg.entries {
        if !header.contains(name) {
            return Err(Error::SchemaError(format!("role config names unknown column {name}")));
        }
    }
    let mut columns = Vec::with_capacity(header.len());
    for name in &header {
        let (role, kind) = cfg
            .lookup(name)
            .ok_or_else(|| Error::SchemaError(format!("column {name} has no role")))?;
        columns.push(Column { name: name.clone(), kind, role });
    }
    let mut schema = Schema::new(columns)?;
    let mut index: Vec<HashMap<String, i64>> = vec![HashMap::new(); header.len()];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    let mut rows = Vec::new();
    let mut skipped = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::ParseError(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::ParseError(format!("record {} has {} fields", i + 1, rec.len())));
        }
        if rec.iter().any(is_missing) {
            skipped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            let v = match schema.columns[j].kind {
                ColumnKind::Categorical => {
                    let next = index[j].len() as i64;
                    let idx = *index[j].entry(cell.to_string()).or_insert_with(|| {
                        labels[j].push(cell.to_string());
                        next
                    });
                    FixedPoint::from_int(idx)?
                }
                ColumnKind::Continuous => {
                    let x: f64 = cell.parse().map_err(|_| {
                        Error::ParseError(format!("record {}: {cell:?} is not a number", i + 1))
                    })?;
                    FixedPoint::encode(x)?
                }
            };
            row.push(v);
        }
        rows.push(row);
    }
    for (j, c) in schema.columns.iter().enumerate() {
        if c.kind == ColumnKind::Categorical {
            schema.category_maps.insert(c.name.clone(), std::mem::take(&mut labels[j]));
        }
    }
    Ok(Ingested { dataset: Dataset::new(schema, rows)?, skipped_rows: skipped })
}

pub fn ingest_csv(path: &Path, cfg: &RoleConfig) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    Ok(ingest_reader(f, cfg)?.dataset)
}

/// Writes `d` as CSV; continuous values round-trip exactly through
/// `ingest_reader`, categorical columns are written as their labels.
pub fn write_csv<W: std::io::Write>(d: &Dataset, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(d.schema.columns.iter().map(|c| c.name.as_str())).map_err(io)?;
    for row in &d.rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&d.schema.columns)
            .map(|(v, c)| match (c.kind, d.schema.category_maps.get(&c.name)) {
                (ColumnKind::Categorical, Some(labels)) => labels
                    .get((v.raw() >> crate::fixed::SCALE_BITS) as usize)
                    .cloned()
                    .unwrap_or_else(|| v.decode().to_string()),
                _ => v.decode().to_string(),
            })
            .collect();
        wr.write_record(&cells).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

/// Role file matching `Schema::synthetic(n, m)`.
pub fn synthetic_roles(n: usize, m: usize) -> String {
    let mut s = String::new();
    for i in 0..n {
        s.push_str(&format!("s{i} = sensitive, continuous\n"));
    }
    for i in 0..m {
        s.push_str(&format!("x{i} = non_sensitive, continuous\n"));
    }
    s
}

/// Random dataset with `n` sensitive and `m` non-sensitive columns.
/// Non-sensitive column `j` carries sensitive feature `j mod n` plus an
/// independent component whose scale decays by 0.55 per column, which keeps
/// the leading covariance eigenvalues well separated.
pub fn synthetic_correlated<R: rand::Rng + ?Sized>(rows: usize, n: usize, m: usize, rng: &mut R) -> Result<Dataset> {
    let unit = |rng: &mut R| rng.gen_range(-1.0f64..1.0) * 3f64.sqrt();
    let data = (0..rows)
        .map(|_| {
            let s: Vec<f64> = (0..n).map(|_| unit(rng)).collect();
            let mut row: Vec<f64> = s.clone();
            for j in 0..m {
                let own = 3.0 * 0.55f64.powi(j as i32) * unit(rng);
                row.push(own + 0.5 * s.get(j % n.max(1)).copied().unwrap_or(0.0) + 0.05 * unit(rng));
            }
            row.into_iter().map(|v| FixedPoint::encode((v * 1e4).round() / 1e4)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(Schema::synthetic(n, m), data)
}

/// Sensitive and non-sensitive parts, each in schema column order.
pub fn split(d: &Dataset) -> (Matrix, Matrix) {
    let roles: Vec<Role> = d.schema.columns.iter().map(|c| c.role).collect();
    let mut xs = Vec::with_capacity(d.rows.len());
    let mut xns = Vec::with_capacity(d.rows.len());
    for row in &d.rows {
        let (mut s, mut ns) = (Vec::new(), Vec::new());
        for (v, r) in row.iter().zip(&roles) {
            match r {
                Role::Sensitive => s.push(*v),
                Role::NonSensitive => ns.push(*v),
            }
        }
        xs.push(s);
        xns.push(ns);
    }
    (xs, xns)
}

/// `[N, n, m]`, then row-major X_s, then row-major X_ns.
pub fn canonical_serialize(d: &Dataset) -> Vec<Fe> {
    let (xs, xns) = split(d);
    let mut out = Vec::with_capacity(3 + d.rows.len() * d.schema.columns.len());
    out.push(Fe::from(d.num_rows() as u64));
    out.push(Fe::from(d.n() as u64));
    out.push(Fe::from(d.m() as u64));
    out.extend(xs.iter().flatten().map(FixedPoint::field));
    out.extend(xns.iter().flatten().map(FixedPoint::field));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = "color = sensitive, categorical\nsize = non_sensitive, continuous\nshape = ns, categorical\n";

    fn ingest(csv: &str) -> Result<Ingested> {
        ingest_reader(csv.as_bytes(), &RoleConfig::parse(CFG).unwrap())
    }

    #[test]
    fn categorical_first_appearance() {
        let d = ingest("color,size,shape\nred,1.5,sq\nblue,2,sq\nred,0.25,sq\n").unwrap().dataset;
        let (xs, xns) = split(&d);
        let col: Vec<i64> = xs.iter().map(|r| r[0].raw() >> 20).collect();
        assert_eq!(col, vec![0, 1, 0]);
        assert!(xns.iter().all(|r| r[1].raw() == 0));
        assert_eq!(d.schema.category_maps["color"], vec!["red", "blue"]);
        assert_eq!(xns[0][0].decode(), 1.5);
    }

    #[test]
    fn missing_rows_skipped() {
        let r = ingest("color,size,shape\nred,1,a\n?,2,b\nblue,,c\ngreen,3,d\n").unwrap();
        assert_eq!(r.skipped_rows, 2);
        assert_eq!(r.dataset.num_rows(), 2);
    }

    #[test]
    fn schema_errors() {
        let cfg = RoleConfig::parse("a = s, continuous\nb = ns, continuous\nzz = ns, continuous").unwrap();
        assert!(matches!(ingest_reader("a,b\n1,2\n3,4\n".as_bytes(), &cfg), Err(Error::SchemaError(_))));
        let cfg = RoleConfig::parse("a = s, continuous\nb = s, continuous").unwrap();
        assert!(matches!(ingest_reader("a,b\n1,2\n3,4\n".as_bytes(), &cfg), Err(Error::SchemaError(_))));
        let cfg = RoleConfig::parse("a = s, continuous").unwrap();
        assert!(matches!(ingest_reader("a,b\n1,2\n3,4\n".as_bytes(), &cfg), Err(Error::SchemaError(_))));
        assert!(RoleConfig::parse("a sensitive").is_err());
        assert!(matches!(ingest("color,size,shape\nred,1,a\n"), Err(Error::EmptyDataset)));
        assert!(matches!(ingest("color,size,shape\nred,x,a\nred,1,a\n"), Err(Error::ParseError(_))));
        assert!(matches!(ingest("color,size,shape\nred,1\nred,1,a\n"), Err(Error::ParseError(_))));
    }

    #[test]
    fn serialization_layout() {
        let schema = Schema::synthetic(1, 2);
        let f = |v: i64| FixedPoint::from_int(v).unwrap();
        let d = Dataset { schema, rows: vec![vec![f(2), f(3), f(5)]] };
        let s = canonical_serialize(&d);
        let e = |v: u64| Fe::from(v);
        assert_eq!(s, vec![e(1), e(1), e(2), e(2 << 20), e(3 << 20), e(5 << 20)]);
    }

    #[test]
    fn split_roundtrip_interleaved() {
        let d = ingest("size,color,shape\n1,red,a\n2,blue,b\n").unwrap().dataset;
        let (xs, xns) = split(&d);
        assert_eq!(Dataset::from_parts(d.schema.clone(), &xs, &xns).unwrap(), d);
    }

    #[test]
    fn csv_round_trip() {
        let d = ingest("size,color,shape\n1.5,red,a\n-2.25,blue,b\n0.1,red,b\n").unwrap().dataset;
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        assert_eq!(ingest(std::str::from_utf8(&buf).unwrap()).unwrap().dataset, d);

        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let s = synthetic_correlated(30, 2, 3, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let cfg = RoleConfig::parse(&synthetic_roles(2, 3)).unwrap();
        assert_eq!(ingest_reader(buf.as_slice(), &cfg).unwrap().dataset, s);
    }
}
