use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::potential_model::{make_saddle, SaddlePotential};
use crate::reduced_model::{ConfigFamily, FamilyKind, KernelMode};

/// Run configuration, read from TOML. Every section and key is optional and
/// falls back to the defaults below; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub problem: ProblemSection,
    pub ladder: LadderSection,
    pub family: FamilySection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub reduce: ReduceSection,
    pub maxmin: MaxminSection,
    pub lemma: LemmaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub dim: usize,
    pub p: f64,
    pub lambdas: Vec<f64>,
    pub profile_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    pub eps: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySection {
    pub kind: FamilyKind,
    pub h: usize,
    pub k: usize,
}

/// Either `kappa = h/ε` (box sized per configuration) or a fixed `(half_width, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub kappa: f64,
    pub half_width: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub gtol: f64,
    pub kernel: KernelMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceSection {
    /// Points per parameter axis of the landscape sweep.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaxminSection {
    /// Overrides `ladder.beta` for the max-min sampling.
    pub beta: Option<f64>,
    pub directions: usize,
    pub radial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSection {
    pub ell_min: usize,
    pub ell_max: usize,
    pub dim: usize,
    pub trials: usize,
    pub tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            problem: ProblemSection::default(),
            ladder: LadderSection::default(),
            family: FamilySection::default(),
            grid: GridSection::default(),
            solver: SolverSection::default(),
            reduce: ReduceSection::default(),
            maxmin: MaxminSection::default(),
            lemma: LemmaSection::default(),
        }
    }
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { dim: 2, p: 3.0, lambdas: vec![1.0, -1.0], profile_tol: 1e-9 }
    }
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection { eps: vec![0.1, 0.07, 0.05, 0.035], beta: 0.5 }
    }
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection { kind: FamilyKind::LinearChain, h: 1, k: 1 }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { kappa: 0.125, half_width: None, n: None }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { newton_tol: 1e-9, max_iter: 30, gtol: 1e-9, kernel: KernelMode::XiExact }
    }
}

impl Default for ReduceSection {
    fn default() -> Self {
        ReduceSection { samples: 21 }
    }
}

impl Default for MaxminSection {
    fn default() -> Self {
        MaxminSection { beta: Some(0.1), directions: 64, radial: 8 }
    }
}

impl Default for LemmaSection {
    fn default() -> Self {
        LemmaSection { ell_min: 2, ell_max: 7, dim: 2, trials: 10_000, tol: 1e-6 }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    /// Reads a TOML config, or the `config` echo of a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = if path.extension().is_some_and(|x| x == "json") {
            let manifest: super::RunManifest =
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            manifest.config
        } else {
            toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The saddle potential; `Validation` when `dim = 1`.
    pub fn potential(&self) -> Result<SaddlePotential, CliError> {
        if self.problem.dim < 2 {
            return Err(invalid("this command needs problem.dim ≥ 2 (a saddle potential)"));
        }
        make_saddle(&self.problem.lambdas).map_err(|e| invalid(format!("problem.lambdas: {e}")))
    }

    pub fn family(&self, beta: f64) -> Result<ConfigFamily, CliError> {
        let pot = self.potential()?;
        ConfigFamily::new(self.family.kind, self.family.h, self.family.k, beta, &pot)
            .map_err(|e| invalid(format!("family: {e}")))
    }

    pub fn maxmin_beta(&self) -> f64 {
        self.maxmin.beta.unwrap_or(self.ladder.beta)
    }

    /// Re-checks the preconditions of every module the config feeds.
    pub fn validate(&self) -> Result<(), CliError> {
        let pb = &self.problem;
        if !(1..=3).contains(&pb.dim) {
            return Err(invalid(format!("problem.dim = {} not in 1..=3", pb.dim)));
        }
        let critical = if pb.dim >= 3 { 2.0 * pb.dim as f64 / (pb.dim as f64 - 2.0) } else { f64::INFINITY };
        if !(pb.p > 2.0 && pb.p < critical) {
            return Err(invalid(format!("problem.p = {} outside (2, {critical})", pb.p)));
        }
        if !(pb.profile_tol > 0.0 && pb.profile_tol < 1e-3) {
            return Err(invalid("problem.profile_tol must lie in (0, 1e-3)"));
        }
        // A one-dimensional saddle does not exist; dim = 1 only drives the
        // profile commands and leaves `lambdas`/`family` unchecked.
        let pot = if pb.dim >= 2 {
            let pot = make_saddle(&pb.lambdas).map_err(|e| invalid(format!("problem.lambdas: {e}")))?;
            if pot.dim() != pb.dim {
                return Err(invalid(format!("problem.lambdas has {} entries, dim = {}", pot.dim(), pb.dim)));
            }
            Some(pot)
        } else {
            None
        };

        let eps = &self.ladder.eps;
        if eps.is_empty() {
            return Err(invalid("ladder.eps is empty"));
        }
        if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(invalid("ladder.eps entries must lie in (0, 1)"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("ladder.eps must be strictly decreasing"));
        }
        for beta in [self.ladder.beta, self.maxmin_beta()] {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(invalid(format!("β = {beta} outside (0, 1)")));
            }
        }
        if let Some(pot) = &pot {
            for beta in [self.ladder.beta, self.maxmin_beta()] {
                ConfigFamily::new(self.family.kind, self.family.h, self.family.k, beta, pot)
                    .map_err(|e| invalid(format!("family: {e}")))?;
            }
        }

        let g = &self.grid;
        if !(g.kappa > 0.0 && g.kappa <= 0.125) {
            return Err(invalid(format!("grid.kappa = {} outside (0, 1/8]", g.kappa)));
        }
        match (g.half_width, g.n) {
            (None, None) => {}
            (Some(l), Some(n)) => {
                if !(l > 0.0) || n < 3 || n % 2 == 0 {
                    return Err(invalid("grid: need half_width > 0 and odd n ≥ 3"));
                }
                let h = 2.0 * l / (n - 1) as f64;
                if let Some(&e) = eps.iter().find(|&&e| h > e / 8.0) {
                    return Err(invalid(format!("grid spacing {h} exceeds ε/8 at ε = {e}")));
                }
            }
            _ => return Err(invalid("grid: half_width and n must be given together")),
        }

        let s = &self.solver;
        if !(s.newton_tol > 0.0 && s.gtol > 0.0) || s.max_iter == 0 {
            return Err(invalid("solver tolerances must be positive and max_iter ≥ 1"));
        }
        if self.reduce.samples < 2 {
            return Err(invalid("reduce.samples must be ≥ 2"));
        }
        if self.maxmin.directions == 0 || self.maxmin.radial == 0 {
            return Err(invalid("maxmin.directions and maxmin.radial must be ≥ 1"));
        }
        let l = &self.lemma;
        if !(2 <= l.ell_min && l.ell_min <= l.ell_max && l.ell_max <= 7) {
            return Err(invalid("lemma: need 2 ≤ ell_min ≤ ell_max ≤ 7"));
        }
        if !(2..=3).contains(&l.dim) {
            return Err(invalid("lemma.dim must be 2 or 3"));
        }
        if !(l.tol > 0.0 && l.tol < 0.1) {
            return Err(invalid("lemma.tol must lie in (0, 0.1)"));
        }
        Ok(())
    }
}
