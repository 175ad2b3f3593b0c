//! JSON codecs for operators, channels, families, and bottleneck problems,
//! plus CSV emission and parsing for run traces and sweeps.
//!
//! Operators serialize as `{"dims", "re", "im"}` with row-major square
//! blocks; channels as `{"in_dims", "out_dims", "kraus": [...]}` whose
//! Kraus entries are rectangular re/im blocks (the channel object carries
//! the shape); families as `{"dims", "constraints": [{"H", "a"}]}`;
//! bottleneck problems as `{"rho_X", "channel", "alpha", "beta",
//! "dim_T"}`. Every float round-trips bit-exactly: JSON numbers use
//! shortest-exact decimal form, CSV cells use 17 significant digits.
//! CSV lines end with LF so equal runs produce byte-equal files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bottleneck::{IbDecomposition, IbProblem};
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::experiment::SweepRow;
use crate::linop::{CMatrix, DensityMatrix, OperatorMatrix};
use crate::mixture::MixtureFamily;
use crate::solver::RunTrace;

/// Entropic quantities are natural-log valued; emitted atop every
/// experiment CSV so downstream units are unambiguous.
const NATS_NOTE: &str = "units: nats (divide entropic columns by ln 2 = 0.6931471805599453 for bits)";

fn split_blocks(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

fn join_blocks(re: &[Vec<f64>], im: &[Vec<f64>], context: &str) -> Result<CMatrix> {
    let rows = re.len();
    if rows == 0 || im.len() != rows {
        return Err(Error::Format {
            context: context.into(),
            message: format!("re has {} rows, im has {}", rows, im.len()),
        });
    }
    let cols = re[0].len();
    for (i, (r, c)) in re.iter().zip(im).enumerate() {
        if r.len() != cols || c.len() != cols {
            return Err(Error::Format {
                context: context.into(),
                message: format!("row {i} is ragged: expected {cols} entries"),
            });
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        num_complex::Complex64::new(re[i][j], im[i][j])
    }))
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl OperatorJson {
    fn pack(op: &OperatorMatrix) -> Self {
        let (re, im) = split_blocks(op.matrix());
        OperatorJson {
            dims: op.dims().to_vec(),
            re,
            im,
        }
    }

    fn unpack(&self, context: &str) -> Result<OperatorMatrix> {
        OperatorMatrix::new(self.dims.clone(), join_blocks(&self.re, &self.im, context)?)
    }
}

#[derive(Serialize, Deserialize)]
struct KrausJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    kraus: Vec<KrausJson>,
}

impl ChannelJson {
    fn pack(ch: &KrausChannel) -> Self {
        ChannelJson {
            in_dims: ch.in_dims().to_vec(),
            out_dims: ch.out_dims().to_vec(),
            kraus: ch
                .kraus_ops()
                .iter()
                .map(|k| {
                    let (re, im) = split_blocks(k);
                    KrausJson { re, im }
                })
                .collect(),
        }
    }

    fn unpack(&self) -> Result<KrausChannel> {
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(i, k)| join_blocks(&k.re, &k.im, &format!("kraus operator {i}")))
            .collect::<Result<Vec<CMatrix>>>()?;
        KrausChannel::new(self.in_dims.clone(), self.out_dims.clone(), kraus)
    }
}

#[derive(Serialize, Deserialize)]
struct ConstraintJson {
    #[serde(rename = "H")]
    h: OperatorJson,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    dims: Vec<usize>,
    constraints: Vec<ConstraintJson>,
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    #[serde(rename = "rho_X")]
    rho_x: OperatorJson,
    channel: ChannelJson,
    alpha: f64,
    beta: f64,
    #[serde(rename = "dim_T")]
    dim_t: usize,
}

pub fn operator_to_json(op: &OperatorMatrix) -> String {
    serde_json::to_string_pretty(&OperatorJson::pack(op)).expect("serializable")
}

pub fn operator_from_json(text: &str) -> Result<OperatorMatrix> {
    let parsed: OperatorJson =
        serde_json::from_str(text).map_err(|e| Error::json("operator", e))?;
    parsed.unpack("operator")
}

pub fn density_to_json(rho: &DensityMatrix) -> String {
    operator_to_json(rho.as_operator())
}

/// Parses and validates: the operator must be Hermitian, positive
/// semidefinite, and unit trace.
pub fn density_from_json(text: &str) -> Result<DensityMatrix> {
    DensityMatrix::try_new(operator_from_json(text)?)
}

pub fn channel_to_json(ch: &KrausChannel) -> String {
    serde_json::to_string_pretty(&ChannelJson::pack(ch)).expect("serializable")
}

pub fn channel_from_json(text: &str) -> Result<KrausChannel> {
    let parsed: ChannelJson = serde_json::from_str(text).map_err(|e| Error::json("channel", e))?;
    parsed.unpack()
}

pub fn family_to_json(fam: &MixtureFamily) -> String {
    let packed = FamilyJson {
        dims: fam.dims().to_vec(),
        constraints: fam
            .constraints()
            .iter()
            .map(|(h, a)| ConstraintJson {
                h: OperatorJson::pack(h),
                a: *a,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&packed).expect("serializable")
}

pub fn family_from_json(text: &str) -> Result<MixtureFamily> {
    let parsed: FamilyJson = serde_json::from_str(text).map_err(|e| Error::json("family", e))?;
    let constraints = parsed
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| Ok((c.h.unpack(&format!("constraint {i}"))?, c.a)))
        .collect::<Result<Vec<_>>>()?;
    MixtureFamily::new(parsed.dims, constraints)
}

pub fn problem_to_json(p: &IbProblem) -> String {
    let packed = ProblemJson {
        rho_x: OperatorJson::pack(p.rho_x().as_operator()),
        channel: ChannelJson::pack(p.channel()),
        alpha: p.alpha(),
        beta: p.beta(),
        dim_t: p.dim_t(),
    };
    serde_json::to_string_pretty(&packed).expect("serializable")
}

pub fn problem_from_json(text: &str) -> Result<IbProblem> {
    let parsed: ProblemJson = serde_json::from_str(text).map_err(|e| Error::json("problem", e))?;
    let rho_x = DensityMatrix::try_new(parsed.rho_x.unpack("rho_X")?)?;
    IbProblem::new(
        rho_x,
        parsed.channel.unpack()?,
        parsed.alpha,
        parsed.beta,
        parsed.dim_t,
    )
}

/// 17 significant digits: enough to reconstruct any f64 exactly, so equal
/// runs give byte-equal files and parsed files give bit-equal numbers.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pinned base trace format: `iter,objective,residual,step_relent,proj_iters`.
pub fn run_trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from("iter,objective,residual,step_relent,proj_iters\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iter,
            csv_float(r.objective),
            csv_float(r.residual),
            csv_float(r.step_relent),
            r.proj_iters
        ));
    }
    out
}

/// Experiment trace with the entropic split of every iterate. Comment
/// lines carry the configuration; a units note is always prepended.
pub fn ib_trace_csv(
    trace: &RunTrace,
    decompositions: &[IbDecomposition],
    comments: &[String],
) -> Result<String> {
    if decompositions.len() != trace.records.len() {
        return Err(Error::Format {
            context: "trace csv".into(),
            message: format!(
                "{} decompositions for {} records",
                decompositions.len(),
                trace.records.len()
            ),
        });
    }
    let mut out = String::new();
    out.push_str(&format!("# {NATS_NOTE}\n"));
    for line in comments {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("iter,objective,i_tx,h_t,i_ty,residual,step_relent,proj_iters\n");
    for (r, d) in trace.records.iter().zip(decompositions) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iter,
            csv_float(r.objective),
            csv_float(d.i_tx),
            csv_float(d.h_t),
            csv_float(d.i_ty),
            csv_float(r.residual),
            csv_float(r.step_relent),
            r.proj_iters
        ));
    }
    Ok(out)
}

/// Sweep table: `param,objective,iters,monotone,fixpoint_residual`.
pub fn sweep_csv(rows: &[SweepRow], comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {NATS_NOTE}\n"));
    for line in comments {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("param,objective,iters,monotone,fixpoint_residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_float(r.param),
            csv_float(r.objective),
            r.iters,
            r.monotone,
            csv_float(r.fixpoint_residual)
        ));
    }
    out
}

/// A parsed numeric CSV. Boolean cells are admitted as 0/1 so sweep
/// tables plot directly.
pub struct CsvTable {
    pub columns: Vec<String>,
    /// Row-major cells, one inner vector per data row.
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn parse_cell(cell: &str, line: usize) -> Result<f64> {
    match cell.trim() {
        "true" => Ok(1.0),
        "false" => Ok(0.0),
        other => other.parse::<f64>().map_err(|_| Error::CsvParse {
            line,
            message: format!("cell {other:?} is not numeric"),
        }),
    }
}

/// Parses a trace or sweep CSV: `#` comments and blank lines are skipped,
/// the first remaining line is the header. Errors carry 1-based line
/// numbers counted over the whole input.
pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match &columns {
            None => {
                columns = Some(trimmed.split(',').map(|c| c.trim().to_string()).collect());
            }
            Some(cols) => {
                let cells: Vec<&str> = trimmed.split(',').collect();
                if cells.len() != cols.len() {
                    return Err(Error::CsvParse {
                        line,
                        message: format!(
                            "expected {} cells, found {}",
                            cols.len(),
                            cells.len()
                        ),
                    });
                }
                rows.push(
                    cells
                        .iter()
                        .map(|c| parse_cell(c, line))
                        .collect::<Result<Vec<f64>>>()?,
                );
            }
        }
    }
    match columns {
        None => Err(Error::EmptyCsv),
        Some(_) if rows.is_empty() => Err(Error::EmptyCsv),
        Some(columns) => Ok(CsvTable { columns, rows }),
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}
