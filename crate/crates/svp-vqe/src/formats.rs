//! File formats: bracketed basis text, the Hamiltonian interchange JSON,
//! VQE run records, and CSV tables with a JSON sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use svp_vqe_core::encoding::{CoordinateLayout, IntegerEncoding, IsingHamiltonian, QuboProblem, Scheme};
use svp_vqe_core::vqe::VqeRunResult;
use svp_vqe_core::Basis;

use crate::error::{io_err, Error, Result};

/// Parse `[[a b c][d e f]]`; any whitespace (and commas) may separate tokens.
pub fn parse_basis(text: &str) -> Result<Basis> {
    let spaced = text.replace('[', " [ ").replace(']', " ] ").replace(',', " ");
    let mut tokens = spaced.split_whitespace();
    if tokens.next() != Some("[") {
        return Err(Error::Parse("basis must start with '['".into()));
    }
    let mut rows = Vec::new();
    loop {
        match tokens.next() {
            Some("[") => {
                let mut row = Vec::new();
                loop {
                    match tokens.next() {
                        Some("]") => break,
                        Some(t) => row.push(
                            t.parse::<BigInt>()
                                .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))?,
                        ),
                        None => return Err(Error::Parse("unterminated row".into())),
                    }
                }
                rows.push(row);
            }
            Some("]") => break,
            Some(t) => return Err(Error::Parse(format!("unexpected token {t:?}"))),
            None => return Err(Error::Parse("unterminated basis".into())),
        }
    }
    if let Some(t) = tokens.next() {
        return Err(Error::Parse(format!("trailing input {t:?}")));
    }
    Ok(Basis::new(rows)?)
}

/// Write `[[a b c]\n[d e f]]\n`.
pub fn format_basis(b: &Basis) -> String {
    let rows: Vec<String> = b
        .rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            format!("[{}]", cells.join(" "))
        })
        .collect();
    format!("[{}]\n", rows.join("\n"))
}

pub fn read_basis(path: &Path) -> Result<Basis> {
    parse_basis(&fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn ratio_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let r = match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
            let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            BigRational::new(p, q)
        }
        None => BigRational::from_integer(s.trim().parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?),
    };
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub i: usize,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTerm {
    pub i: usize,
    pub j: usize,
    pub c: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    Qubo,
    Ising,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateFile {
    pub bound: u64,
    #[serde(default)]
    pub one_sided: bool,
    pub offset: i64,
    /// `[bit index, weight]` pairs.
    pub bits: Vec<(usize, i64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingFile {
    /// `"plain"` or `"penalty"`.
    pub scheme: String,
    pub num_bits: usize,
    pub coords: Vec<CoordinateFile>,
    #[serde(default)]
    pub aux: Vec<usize>,
}

impl From<&IntegerEncoding> for EncodingFile {
    fn from(e: &IntegerEncoding) -> Self {
        EncodingFile {
            scheme: match e.scheme {
                Scheme::Plain => "plain",
                Scheme::Penalty => "penalty",
            }
            .into(),
            num_bits: e.num_bits,
            coords: e
                .coords
                .iter()
                .map(|c| CoordinateFile {
                    bound: c.bound,
                    one_sided: c.one_sided,
                    offset: c.offset,
                    bits: c.bits.clone(),
                    zeta: c.zeta,
                    omega: c.omega,
                })
                .collect(),
            aux: e.aux.clone(),
        }
    }
}

impl TryFrom<&EncodingFile> for IntegerEncoding {
    type Error = Error;

    fn try_from(f: &EncodingFile) -> Result<Self> {
        let scheme = match f.scheme.as_str() {
            "plain" => Scheme::Plain,
            "penalty" => Scheme::Penalty,
            s => return Err(Error::Parse(format!("unknown encoding scheme {s:?}"))),
        };
        let in_range = |t: usize| t < f.num_bits;
        let ok = f.coords.iter().all(|c| {
            c.bits.iter().all(|&(t, _)| in_range(t)) && c.zeta.map_or(true, in_range) && c.omega.map_or(true, in_range)
        }) && f.aux.iter().all(|&t| in_range(t));
        if !ok {
            return Err(Error::Parse("encoding refers to a bit beyond num_bits".into()));
        }
        Ok(IntegerEncoding {
            scheme,
            coords: f
                .coords
                .iter()
                .map(|c| CoordinateLayout {
                    bound: c.bound,
                    one_sided: c.one_sided,
                    offset: c.offset,
                    bits: c.bits.clone(),
                    zeta: c.zeta,
                    omega: c.omega,
                })
                .collect(),
            aux: f.aux.clone(),
            num_bits: f.num_bits,
        })
    }
}

/// The Hamiltonian interchange file. Rationals are `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub n_vars: usize,
    pub constant: String,
    pub linear: Vec<LinearTerm>,
    pub quadratic: Vec<QuadraticTerm>,
    pub kind: HamiltonianKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<EncodingFile>,
}

fn linear_terms(v: &[BigRational]) -> Vec<LinearTerm> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| LinearTerm {
            i,
            c: ratio_to_string(c),
        })
        .collect()
}

fn quadratic_terms(m: &BTreeMap<(usize, usize), BigRational>) -> Vec<QuadraticTerm> {
    m.iter()
        .map(|(&(i, j), c)| QuadraticTerm {
            i,
            j,
            c: ratio_to_string(c),
        })
        .collect()
}

impl HamiltonianFile {
    pub fn from_qubo(q: &QuboProblem, enc: Option<&IntegerEncoding>) -> Self {
        HamiltonianFile {
            n_vars: q.num_vars,
            constant: ratio_to_string(&q.constant),
            linear: linear_terms(&q.linear),
            quadratic: quadratic_terms(&q.quadratic),
            kind: HamiltonianKind::Qubo,
            encoding: enc.map(EncodingFile::from),
        }
    }

    pub fn from_ising(h: &IsingHamiltonian, enc: Option<&IntegerEncoding>) -> Self {
        HamiltonianFile {
            n_vars: h.num_qubits,
            constant: ratio_to_string(&h.constant),
            linear: linear_terms(&h.h),
            quadratic: quadratic_terms(&h.j),
            kind: HamiltonianKind::Ising,
            encoding: enc.map(EncodingFile::from),
        }
    }

    fn coefficients(&self) -> Result<(BigRational, Vec<BigRational>, BTreeMap<(usize, usize), BigRational>)> {
        let mut linear = vec![BigRational::zero(); self.n_vars];
        for t in &self.linear {
            let slot = linear
                .get_mut(t.i)
                .ok_or_else(|| Error::Parse(format!("linear index {} out of range", t.i)))?;
            *slot += parse_ratio(&t.c)?;
        }
        let mut quadratic = BTreeMap::new();
        for t in &self.quadratic {
            if t.i >= self.n_vars || t.j >= self.n_vars || t.i == t.j {
                return Err(Error::Parse(format!("bad quadratic index ({}, {})", t.i, t.j)));
            }
            let key = (t.i.min(t.j), t.i.max(t.j));
            *quadratic.entry(key).or_insert_with(BigRational::zero) += parse_ratio(&t.c)?;
        }
        quadratic.retain(|_, c: &mut BigRational| !c.is_zero());
        Ok((parse_ratio(&self.constant)?, linear, quadratic))
    }

    pub fn to_qubo(&self) -> Result<QuboProblem> {
        if self.kind != HamiltonianKind::Qubo {
            return Err(Error::Parse("file holds an Ising Hamiltonian, not a QUBO".into()));
        }
        let (constant, linear, quadratic) = self.coefficients()?;
        Ok(QuboProblem {
            num_vars: self.n_vars,
            constant,
            linear,
            quadratic,
        })
    }

    /// The Ising form, converting a QUBO file if necessary.
    pub fn to_ising(&self) -> Result<IsingHamiltonian> {
        match self.kind {
            HamiltonianKind::Qubo => Ok(svp_vqe_core::encoding::qubo_to_ising(&self.to_qubo()?)),
            HamiltonianKind::Ising => {
                let (constant, h, j) = self.coefficients()?;
                Ok(IsingHamiltonian {
                    num_qubits: self.n_vars,
                    constant,
                    h,
                    j,
                })
            }
        }
    }

    pub fn encoding(&self) -> Result<Option<IntegerEncoding>> {
        self.encoding.as_ref().map(IntegerEncoding::try_from).transpose()
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// JSON record of one VQE run; fields mirror [`VqeRunResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeRecord {
    pub seed: u64,
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub final_cost: f64,
    pub trace: Vec<f64>,
    pub overlap: f64,
    pub best_coeffs: Option<Vec<String>>,
    pub best_norm_sq: Option<String>,
    pub success: bool,
}

impl From<&VqeRunResult> for VqeRecord {
    fn from(r: &VqeRunResult) -> Self {
        VqeRecord {
            seed: r.seed,
            theta: r.theta.clone(),
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged,
            final_cost: r.final_cost,
            trace: r.trace.clone(),
            overlap: r.overlap,
            best_coeffs: r.best.as_ref().map(|b| b.coeffs.iter().map(|c| c.to_string()).collect()),
            best_norm_sq: r.best.as_ref().map(|b| b.norm_sq.to_string()),
            success: r.success,
        }
    }
}

/// A table with a fixed column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { columns, rows })
    }
}

/// Write `table` as CSV at `path` and a sidecar `path.json` holding the
/// column list and the fully resolved configuration. Returns the sidecar path.
pub fn write_table<C: Serialize>(path: &Path, table: &Table, config: &C) -> Result<PathBuf> {
    write_text(path, &table.to_csv()?)?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".json");
    let sidecar = PathBuf::from(sidecar);
    let meta = serde_json::json!({
        "columns": table.columns,
        "rows": table.rows.len(),
        "config": config,
    });
    write_json(&sidecar, &meta)?;
    Ok(sidecar)
}

/// Format a float for CSV output with full round-trip precision.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use svp_vqe_core::encoding::{build_qubo, encode_integers, qubo_to_ising, BoundsVector, Provenance};

    #[test]
    fn basis_text_round_trip() {
        let b = parse_basis("[[1 2 3]\n [4 5  6]\n[7 8 10]]").unwrap();
        assert_eq!(b.rank(), 3);
        assert_eq!(format_basis(&b), "[[1 2 3]\n[4 5 6]\n[7 8 10]]\n");
        assert_eq!(parse_basis(&format_basis(&b)).unwrap(), b);
        let big = parse_basis("[[123456789012345678901234567890 0][0 1]]").unwrap();
        assert_eq!(parse_basis(&format_basis(&big)).unwrap(), big);
        assert!(parse_basis("[[1 2][3 x]]").is_err());
        assert!(parse_basis("[[1 2][3 4]").is_err());
        assert!(parse_basis("[[1 2][2 4]]").is_err());
    }

    #[test]
    fn rationals_round_trip() {
        for s in ["0", "-3", "7/2", "-1/4"] {
            assert_eq!(ratio_to_string(&parse_ratio(s).unwrap()), s);
        }
        assert_eq!(ratio_to_string(&parse_ratio("4/2").unwrap()), "2");
        assert!(parse_ratio("1/0").is_err());
    }

    #[test]
    fn hamiltonian_file_round_trip() {
        let b = Basis::from_i64(&[vec![2, 1], vec![1, 3]]).unwrap();
        let enc = encode_integers(&BoundsVector::new(vec![1, 2], Provenance::Custom), Scheme::Plain).unwrap();
        let q = build_qubo(&b.gram(), &enc).unwrap();
        let f = HamiltonianFile::from_qubo(&q, Some(&enc));
        let text = serde_json::to_string(&f).unwrap();
        let back: HamiltonianFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_qubo().unwrap(), q);
        assert_eq!(back.encoding().unwrap().unwrap(), enc);
        let h = qubo_to_ising(&q);
        assert_eq!(back.to_ising().unwrap(), h);
        let hf = HamiltonianFile::from_ising(&h, None);
        assert_eq!(hf.to_ising().unwrap(), h);
        assert!(hf.to_qubo().is_err());
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(Table::from_csv(&t.to_csv().unwrap()).unwrap(), t);
    }
}
