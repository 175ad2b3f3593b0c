use thiserror::Error;

/// Errors surfaced by the solver and its supporting numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("subsystem dimensions {0:?} are invalid: list must be non-empty with every entry >= 1")]
    BadDims(Vec<usize>),
    #[error("matrix side {side} does not match the product {expected} of subsystem dimensions {dims:?}")]
    ShapeMismatch {
        side: usize,
        expected: usize,
        dims: Vec<usize>,
    },
    #[error("operand dimensions differ: {left:?} vs {right:?}")]
    DimMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("matrix is not Hermitian: max |A - A^dag| entry {max_asymmetry:.3e} exceeds {tol:.1e}")]
    NotHermitian { max_asymmetry: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: minimum eigenvalue {0:.6e}")]
    NotPositiveSemidefinite(f64),
    #[error("density matrix trace deviates from one by {0:.3e}")]
    NotUnitTrace(f64),
    #[error("state vector has zero norm")]
    ZeroVector,
    #[error("scalar function undefined at eigenvalue {0:.6e}")]
    UndefinedAtEigenvalue(f64),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    BadSubsystemIndex { index: usize, count: usize },
    #[error("subsystem selection must be non-empty")]
    EmptySelection,
    #[error("subsystem split must leave both groups non-empty")]
    EmptySplit,
    #[error("index list {0:?} is not a permutation of the subsystems")]
    NotPermutation(Vec<usize>),
    #[error("matrix is not unitary: max |U^dag U - I| entry {0:.3e}")]
    NotUnitary(f64),
    #[error("Kraus set is not trace preserving: max |sum K^dag K - I| entry {0:.3e}")]
    NotTracePreserving(f64),
    #[error("Kraus operator {index} has shape {rows}x{cols}, expected {out}x{inp}")]
    BadKrausShape {
        index: usize,
        rows: usize,
        cols: usize,
        out: usize,
        inp: usize,
    },
    #[error("constraint operators are linearly dependent: Gram condition number {0:.3e}")]
    DependentConstraints(f64),
    #[error(
        "e-projection stopped after {iterations} iterations with gradient norm {grad_norm:.3e} \
         (tolerance {tol:.1e}); the target moments may be infeasible for this family"
    )]
    ProjectionDidNotConverge {
        iterations: usize,
        grad_norm: f64,
        tol: f64,
        best_tau: Vec<f64>,
    },
    #[error("state violates the family constraints: residual {residual:.3e} exceeds {tol:.1e}")]
    OutsideFamily { residual: f64, tol: f64 },
    #[error("trace functional returned imaginary residue {0:.3e}")]
    ImaginaryResidue(f64),
    #[error("objective increased by {increase:.3e} at iteration {iteration} while the descent condition held")]
    MonotonicityViolated { iteration: usize, increase: f64 },
    #[error("parameter {name} = {value} outside valid range {range}")]
    BadParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error("csv contains no data rows")]
    EmptyCsv,
    #[error("column {0:?} not present in csv header")]
    UnknownColumn(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wrap an I/O error with the path or action that produced it.
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Wrap a JSON error with the document being read or written.
    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
