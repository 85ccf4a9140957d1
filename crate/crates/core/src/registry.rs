//! Named model instances, so experiments and tests can refer to them by id.

use crate::error::{Error, Result};
use crate::stochastic::ProcessSpec;
use crate::symbols::{BernsteinKind, BernsteinSpec, PiecewiseConstant, SecondPart, SymbolSpec};

/// `1` on `[0, 1)`, `2` afterwards.
fn one_two() -> PiecewiseConstant {
    PiecewiseConstant::new(vec![0.0, 1.0], vec![1.0, 2.0]).expect("valid knots")
}

pub const SYMBOL_IDS: &[&str] = &[
    "ex2.3-sbm-alpha05-sigma12",
    "ex2.3-sbm-alpha075-sigma12",
    "ex2.3-sbm-alpha05",
    "ex2.3-sbm-alpha075",
    "ex2.4-clock",
    "ex2.4-clock-alpha075",
    "ex2.5-sum-drift",
    "ex2.5-sum-poisson",
    "remark-anisotropic",
    "heat",
    "frac-1.0",
    "frac-1.5",
    "clock-frac-1.5",
];

pub const PHI_IDS: &[&str] = &["r", "r^0.5", "r^1.5", "r^2", "bounded", "stable-0.5", "stable-0.75", "relativistic", "log-plus"];

/// Symbol by id. `dim` is ignored by `remark-anisotropic`, which is planar.
pub fn symbol(id: &str, dim: usize) -> Result<SymbolSpec> {
    let stable = BernsteinSpec::stable;
    let sym = match id {
        "ex2.3-sbm-alpha05-sigma12" => SymbolSpec::sbm(dim, stable(0.5)?, one_two())?,
        "ex2.3-sbm-alpha075-sigma12" => SymbolSpec::sbm(dim, stable(0.75)?, one_two())?,
        "ex2.3-sbm-alpha05" => SymbolSpec::sbm(dim, stable(0.5)?, PiecewiseConstant::constant(1.0))?,
        "ex2.3-sbm-alpha075" => SymbolSpec::sbm(dim, stable(0.75)?, PiecewiseConstant::constant(1.0))?,
        "ex2.4-clock" => SymbolSpec::clock(dim, stable(0.5)?, one_two())?,
        "ex2.4-clock-alpha075" => SymbolSpec::clock(dim, stable(0.75)?, one_two())?,
        "ex2.5-sum-drift" => {
            let mut dir = vec![0.0; dim];
            dir[0] = 1.0;
            let speed = PiecewiseConstant::new(vec![0.0, 0.5], vec![1.0, -0.5])?;
            SymbolSpec::sbm(dim, stable(0.75)?, PiecewiseConstant::constant(1.0))?
                .with_second(SecondPart::Drift { direction: dir, speed })?
        }
        "ex2.5-sum-poisson" => SymbolSpec::sbm(dim, stable(0.75)?, PiecewiseConstant::constant(1.0))?
            .with_second(SecondPart::CompoundPoisson { rate: 2.0, half_width: 0.5 })?,
        "remark-anisotropic" => SymbolSpec::anisotropic(2, 0.5, PiecewiseConstant::constant(1.0))?,
        "heat" => SymbolSpec::clock(dim, BernsteinSpec::linear(), PiecewiseConstant::constant(1.0))?,
        "frac-1.0" => SymbolSpec::sbm(dim, stable(0.5)?, PiecewiseConstant::constant(1.0))?,
        "frac-1.5" => SymbolSpec::sbm(dim, stable(0.75)?, PiecewiseConstant::constant(1.0))?,
        "clock-frac-1.5" => {
            let a = PiecewiseConstant::new(vec![0.0, 0.5], vec![1.0, 2.0])?;
            SymbolSpec::clock(dim, stable(0.75)?, a)?
        }
        _ => return Err(Error::Configuration(format!("unknown symbol id '{id}'"))),
    };
    Ok(sym.with_id(id))
}

/// Process whose exponent is the registry symbol `id`.
pub fn process(id: &str, dim: usize) -> Result<ProcessSpec> {
    ProcessSpec::from_symbol(&symbol(id, dim)?)
}

/// `min(r, 1)` sampled on `[1e-8, 1e8]`.
fn bounded() -> BernsteinSpec {
    let lambdas: Vec<f64> = (-8..=8).map(|k| 10f64.powi(k)).collect();
    let values = lambdas.iter().map(|&r: &f64| r.min(1.0)).collect();
    BernsteinSpec::new(BernsteinKind::Tabulated { lambdas, values }).expect("valid table")
}

/// Scale function by id.
pub fn phi(id: &str) -> Result<BernsteinSpec> {
    match id {
        "r" => Ok(BernsteinSpec::linear()),
        "r^0.5" => BernsteinSpec::power(0.5),
        "r^1.5" => BernsteinSpec::power(1.5),
        "r^2" => BernsteinSpec::power(2.0),
        "bounded" => Ok(bounded()),
        "stable-0.5" => BernsteinSpec::stable(0.5),
        "stable-0.75" => BernsteinSpec::stable(0.75),
        "relativistic" => BernsteinSpec::new(BernsteinKind::Relativistic { alpha: 0.5, m: 1.0 }),
        "log-plus" => BernsteinSpec::new(BernsteinKind::LogPlus { alpha: 0.5, beta: 0.25 }),
        _ => Err(Error::Configuration(format!("unknown scale function id '{id}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_resolves() {
        for id in SYMBOL_IDS {
            let s = symbol(id, 1).unwrap();
            assert_eq!(s.id(), *id);
        }
        for id in PHI_IDS {
            phi(id).unwrap();
        }
        assert!(symbol("nope", 1).is_err());
    }

    #[test]
    fn samplers_exist_except_anisotropic() {
        for id in SYMBOL_IDS {
            assert_eq!(process(id, 1).is_ok(), *id != "remark-anisotropic", "{id}");
        }
    }
}
