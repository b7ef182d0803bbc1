use std::fmt;
use std::str::FromStr;

use crate::directions::{B0Convention, DirectionRule};
use crate::quadmodel::{ProblemSpec, DEFAULT_CONDITION_TARGET};
use crate::solver::MethodConfig;
use crate::Error;

use super::BenchmarkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Table4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Table1, Preset::Table2, Preset::Table3, Preset::Table4];

    /// Dimensions run by default.
    pub fn dims(self) -> &'static [usize] {
        match self {
            Preset::Table1 => &[100, 500, 1000, 5000],
            Preset::Table2 => &[100, 200, 300],
            Preset::Table3 => &[100, 500, 1000, 5000, 10000],
            Preset::Table4 => &[100, 500, 1000],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Table4 => "table4",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            "table3" => Ok(Preset::Table3),
            "table4" => Ok(Preset::Table4),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOptions {
    /// Seeds per seeded problem (tables 2 and 3).
    pub repeats: usize,
    pub base_seed: u64,
    /// Restricts the dimensions; `None` runs the full table.
    pub dims: Option<Vec<usize>>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            base_seed: 0,
            dims: None,
        }
    }
}

/// Initial matrices of the quasi-Newton table: `B0(1..3)` with scales
/// 1000, 1 and 0.001 applied to the inverse approximation.
pub const TABLE4_B0: [(&str, f64); 3] = [("B0(1)", 1000.0), ("B0(2)", 1.0), ("B0(3)", 0.001)];

pub fn preset(which: Preset, opts: &PresetOptions) -> BenchmarkSpec {
    let dims: Vec<usize> = opts.dims.clone().unwrap_or_else(|| which.dims().to_vec());
    let seed = opts.base_seed;
    let gradient_pair = || vec![MethodConfig::bb1(), MethodConfig::cg_aos()];
    let mut spec = match which {
        Preset::Table1 => BenchmarkSpec::new(
            "table1",
            dims.iter().map(|&n| ProblemSpec::p1(n)).collect(),
            gradient_pair(),
        ),
        Preset::Table2 => BenchmarkSpec::new(
            "table2",
            dims.iter().map(|&n| ProblemSpec::p2(n, seed)).collect(),
            gradient_pair(),
        ),
        Preset::Table3 => BenchmarkSpec::new(
            "table3",
            dims.iter()
                .map(|&n| ProblemSpec::p3(n, seed).with_condition_target(DEFAULT_CONDITION_TARGET))
                .collect(),
            gradient_pair(),
        ),
        Preset::Table4 => {
            let mut methods = Vec::new();
            for (tag, scale) in TABLE4_B0 {
                let direction = DirectionRule::QuasiNewton {
                    theta: 0.0,
                    b0_scale: scale,
                    b0_convention: B0Convention::Inverse,
                };
                let mut unit = MethodConfig::bfgs_1(scale).with_variant(tag);
                unit.direction = direction;
                let mut aos = MethodConfig::bfgs_aos(scale).with_variant(tag);
                aos.direction = direction;
                methods.push(unit);
                methods.push(aos);
            }
            BenchmarkSpec::new("table4", dims.iter().map(|&n| ProblemSpec::p1(n)).collect(), methods)
        }
    };
    if matches!(which, Preset::Table2 | Preset::Table3) {
        spec.repeats = opts.repeats.max(1);
        spec.notes.push(format!(
            "seeded instances use seeds {}..{} of the built-in ChaCha8 generator; counts are comparable as trends only, medians per dimension are reported",
            seed,
            seed + spec.repeats as u64 - 1
        ));
    }
    if which == Preset::Table4 {
        spec.notes
            .push("B0(j) scales set the inverse Hessian approximation: B0(1) = 1000 I means B_0^{-1} = 1000 I".into());
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadmodel::Family;

    #[test]
    fn table1_runs_its_dimension_list() {
        let spec = preset(Preset::Table1, &PresetOptions::default());
        let dims: Vec<_> = spec.problems.iter().map(|p| p.dim).collect();
        assert_eq!(dims, [100, 500, 1000, 5000]);
        assert!(spec.problems.iter().all(|p| p.family == Family::P1));
        let labels: Vec<_> = spec.methods.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, ["BB1", "CG_AOS"]);
        assert_eq!((spec.cfg.tol, spec.cfg.max_iter), (1e-6, 50_000));
    }

    #[test]
    fn table3_uses_condition_target() {
        let spec = preset(Preset::Table3, &PresetOptions::default());
        assert!(spec.problems.iter().all(|p| p.condition_target == 1e5 && p.family == Family::P3));
        assert_eq!(spec.repeats, 5);
        assert_eq!(spec.problems.len(), 5);
    }

    #[test]
    fn table4_grid() {
        let spec = preset(Preset::Table4, &PresetOptions { dims: Some(vec![100]), ..Default::default() });
        assert_eq!(spec.methods.len(), 6);
        let m = &spec.methods[0];
        assert_eq!((m.label.as_str(), m.variant.as_deref(), m.baseline), ("BFGS_1", Some("B0(1)"), true));
        assert_eq!(m.direction.initial_diagonal(), Some(1e-3));
        assert_eq!(spec.methods[5].direction.initial_diagonal(), Some(1000.0));
    }

    #[test]
    fn preset_names_parse() {
        for p in Preset::ALL {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("table5".parse::<Preset>().is_err());
    }
}
