//! Scale functions, symbols of processes with independent increments, and
//! audits of their structural conditions.

mod audit;
mod bernstein;
mod piecewise;
mod symbol;

pub use audit::{verify_symbol_conditions, SymbolAuditConfig, SymbolAuditReport, SymbolAuditRow, SymbolAuditSummary};
pub use bernstein::{
    eval_phi, eval_phi_derivative, geometric_grid, phi_inverse, verify_bernstein_conditions, BernsteinKind,
    BernsteinReport, BernsteinSpec, DerivativeOrderCap, Scaling,
};
pub use piecewise::PiecewiseConstant;
pub use symbol::{CustomSymbol, SecondPart, SmoothPart, SymbolFn, SymbolSpec};
