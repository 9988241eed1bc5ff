//! TOML run configuration.
//!
//! ```toml
//! [model]
//! drift = 1.0
//! sigma = 1.0
//! jumps = [{ lambda = 0.2, eta = 1.0 }]
//!
//! [cost]
//! c_u = 200.0
//! c_d = 200.0
//! q = 0.05
//! r = 0.1                    # or a list: r = [0.1, 1.0, 10.0]
//! breakpoints = []
//! pieces = [[0.0, 0.0, 1.0]] # ascending coefficients, one list per piece
//! ```
//!
//! Optional blocks: `[solver]`, `[sim]`, `[value]`, `[verify]`, `[output]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::KernelContext;
use crate::levy::{JumpPhase, LevyModel};
use crate::numerics::{PiecewisePoly, Poly};
use crate::simulator::{default_horizon, SimCost};
use crate::solver::SolverSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub drift: f64,
    pub sigma: f64,
    #[serde(default)]
    pub jumps: Vec<JumpPhase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    One(f64),
    Many(Vec<f64>),
}

impl Rates {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Rates::One(r) => vec![*r],
            Rates::Many(rs) => rs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBlock {
    pub c_u: f64,
    pub c_d: f64,
    pub q: f64,
    pub r: Rates,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    /// Start points; empty means `a*, (a*+b*)/2, b*, b*+2`.
    pub x0: Vec<f64>,
    pub n_paths: usize,
    pub dt: f64,
    /// Defaults to `ln(10^4)/q`.
    pub horizon: Option<f64>,
    pub seed: u64,
    pub antithetic: bool,
    /// Pair to simulate; defaults to the solved pair.
    pub pair: Option<[f64; 2]>,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self { x0: Vec::new(), n_paths: 100_000, dt: 1e-3, horizon: None, seed: 0, antithetic: true, pair: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueBlock {
    /// Explicit pairs `[a, b]`.
    pub pairs: Vec<[f64; 2]>,
    /// Also evaluate the solved pair and its shifts by these offsets.
    pub include_optimal: bool,
    pub offsets_a: Vec<f64>,
    pub offsets_b: Vec<f64>,
    /// Grid `[lo, hi]` with `n` nodes; defaults to `[a - 5, b + 10]`, 401 nodes.
    pub grid: Option<[f64; 2]>,
    pub n: usize,
    /// Emit `v_lr` and `v_f` columns.
    pub components: bool,
}

impl Default for ValueBlock {
    fn default() -> Self {
        Self {
            pairs: Vec::new(),
            include_optimal: true,
            offsets_a: Vec::new(),
            offsets_b: Vec::new(),
            grid: None,
            n: 401,
            components: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBlock {
    /// Pair to audit; defaults to the solved pair.
    pub pair: Option<[f64; 2]>,
    pub grid: Option<[f64; 2]>,
    pub n: usize,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self { pair: None, grid: None, n: 401 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub execution: Execution,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv], execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub cost: CostBlock,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub value: ValueBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Builds every model object once, so assumption violations surface at
    /// load time.
    pub fn validate(&self) -> Result<()> {
        let model = self.levy_model()?;
        let rs = self.rates();
        if rs.is_empty() {
            return Err(Error::Config("cost.r must contain at least one rate".into()));
        }
        for r in rs {
            KernelContext::new(model.clone(), self.cost_spec(r)?)?;
        }
        for [a, b] in self.value.pairs.iter().chain(&self.sim.pair).chain(&self.verify.pair) {
            if !(a.is_finite() && *a < *b) {
                return Err(Error::Config(format!("pair ({a}, {b}) must satisfy a < b")));
            }
        }
        if self.value.n < 2 || self.verify.n < 2 {
            return Err(Error::Config("grids need at least 2 nodes".into()));
        }
        for [lo, hi] in self.value.grid.iter().chain(&self.verify.grid) {
            if !(lo < hi) {
                return Err(Error::Config(format!("grid [{lo}, {hi}] is empty")));
            }
        }
        self.path_config(0.0)?.validate()?;
        Ok(())
    }

    pub fn levy_model(&self) -> Result<LevyModel> {
        LevyModel::new(self.model.drift, self.model.sigma, self.model.jumps.clone())
    }

    pub fn rates(&self) -> Vec<f64> {
        self.cost.r.to_vec()
    }

    pub fn running_cost(&self) -> Result<PiecewisePoly> {
        PiecewisePoly::new(
            self.cost.breakpoints.clone(),
            self.cost.pieces.iter().map(|c| Poly::new(c.clone())).collect(),
        )
        .map_err(|e| Error::Config(format!("running cost: {e}")))
    }

    pub fn cost_spec(&self, r: f64) -> Result<CostSpec> {
        CostSpec::new(self.running_cost()?, self.cost.c_u, self.cost.c_d, self.cost.q, r)
    }

    /// Kernel context at the first listed rate.
    pub fn context(&self) -> Result<KernelContext> {
        KernelContext::new(self.levy_model()?, self.cost_spec(self.rates()[0])?)
    }

    pub fn sim_cost(&self) -> Result<SimCost> {
        Ok((&self.cost_spec(self.rates()[0])?).into())
    }

    pub fn path_config(&self, x0: f64) -> Result<crate::simulator::PathConfig> {
        Ok(crate::simulator::PathConfig {
            x0,
            horizon: self.sim.horizon.unwrap_or_else(|| default_horizon(self.cost.q)),
            dt: self.sim.dt,
            n_paths: self.sim.n_paths,
            seed: self.sim.seed,
            antithetic: self.sim.antithetic,
        })
    }

    /// The worked example: `ψ(s) = s + s²/2 + 0.2(1/(1+s) - 1)`, `f = x²`,
    /// `C_U = C_D = 200`, `q = 0.05`, `r = 0.1`.
    pub fn example() -> Self {
        Self {
            model: ModelBlock { drift: 1.0, sigma: 1.0, jumps: vec![JumpPhase { lambda: 0.2, eta: 1.0 }] },
            cost: CostBlock {
                c_u: 200.0,
                c_d: 200.0,
                q: 0.05,
                r: Rates::One(0.1),
                breakpoints: Vec::new(),
                pieces: vec![vec![0.0, 0.0, 1.0]],
            },
            solver: SolverSettings::default(),
            sim: SimBlock::default(),
            value: ValueBlock::default(),
            verify: VerifyBlock::default(),
            output: OutputBlock::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
