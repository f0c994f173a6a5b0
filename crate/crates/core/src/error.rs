use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot differentiate `{expr}`: {reason}")]
pub struct DiffError {
    pub expr: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("component {component} of field `{field}` is not holomorphic: {expr}")]
    NotHolomorphic { field: String, component: usize, expr: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} violates constraint {constraint}")]
    Violation { name: String, value: String, constraint: String },
    #[error("parameter `{0}` is not declared")]
    Undeclared(String),
    #[error("parameter `{0}` has no value")]
    Missing(String),
    #[error("requirement `{0}` fails")]
    Requirement(String),
    #[error("could not draw a parameter sample satisfying all constraints after {0} attempts")]
    Exhausted(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("degenerate point: gradient vanishes at {0}")]
    DegenerateGradient(String),
    #[error("point is off the surface: |rho| = {0:e}")]
    OffSurface(f64),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("algebra `{name}` violates the Jacobi identity at (i,j,k,l) = {indices:?}: residual {residual}")]
    Jacobi { name: String, indices: (usize, usize, usize, usize), residual: String },
    #[error("structure constants of `{0}` are not rational at this binding")]
    NotRational(String),
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{file}:{line}: {message}")]
pub struct CatalogError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("item {0} is outside 1..=17")]
    NoSuchItem(usize),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}
