use ndarray::{Array1, Array2, ArrayRef1, ArrayRef2};
use serde::{Deserialize, Serialize};

use super::rng::SampleRng;
use crate::constraints::{Edge, EdgeSign, FeatureGraph};
use crate::error::{check_dim, Error, Result};

/// Genes attached to each regulator in the reference regressors.
pub const EXAMPLE_GENES_PER_REGULATOR: usize = 10;

/// Leading regulator coefficients of the four active blocks.
const BLOCK_LEADS: [f64; 4] = [5.0, -5.0, 3.0, -3.0];

/// Regulatory network layout: `n_reg` blocks, each a regulator column
/// followed by its `n_g` gene columns, so `d = n_reg (n_g + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub m: usize,
    pub n_reg: usize,
    pub n_g: usize,
    /// Correlation between a gene and its regulator.
    pub correlation: f64,
    /// Standard deviation of the response noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self { m: 200, n_reg: 10, n_g: 10, correlation: 0.7, noise_sigma: 2.0, seed: 0 }
    }
}

impl NetworkParams {
    pub fn dim(&self) -> usize {
        self.n_reg * (self.n_g + 1)
    }

    /// 0-based column of regulator `r` (also 0-based); the 1-based form is
    /// `r(N_g + 1) - N_g`.
    pub fn regulator_index(&self, r: usize) -> usize {
        r * (self.n_g + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n_reg == 0 {
            return Err(Error::InvalidConfig("network needs m >= 1 and n_reg >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::InvalidConfig(format!(
                "correlation {} outside [0, 1)",
                self.correlation
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Regulator–gene star graph with all signs `+1`.
pub fn star_graph(n_reg: usize, n_g: usize) -> Result<FeatureGraph> {
    let block = n_g + 1;
    FeatureGraph::unsigned(
        n_reg * block,
        (0..n_reg).flat_map(|r| (1..=n_g).map(move |k| (r * block, r * block + k))),
    )
}

/// Samples the design matrix row by row.
///
/// Regulators are `N(0, 1)`; each gene is `ϱ·regulator + sqrt(1 - ϱ²)·N(0, 1)`,
/// giving unit variance and correlation `ϱ` with its regulator. Within a row
/// the draws follow column order.
pub fn generate_network(params: &NetworkParams) -> Result<(Array2<f64>, FeatureGraph)> {
    params.validate()?;
    let d = params.dim();
    let rho = params.correlation;
    let gene_sd = (1.0 - rho * rho).sqrt();
    let mut rng = SampleRng::new(params.seed);
    let mut x = Array2::zeros((params.m, d));
    for mut row in x.rows_mut() {
        for r in 0..params.n_reg {
            let base = params.regulator_index(r);
            let regulator = rng.standard_normal();
            row[base] = regulator;
            for k in 1..=params.n_g {
                row[base + k] = rng.normal(rho * regulator, gene_sd);
            }
        }
    }
    Ok((x, star_graph(params.n_reg, params.n_g)?))
}

/// `y = X w + ε` with `ε ~ N(0, σ²)` i.i.d.
pub fn generate_response(
    x: &ArrayRef2<f64>,
    w: &ArrayRef1<f64>,
    sigma: f64,
    seed: u64,
) -> Result<Array1<f64>> {
    check_dim(x.ncols(), w.len())?;
    let mut rng = SampleRng::new(seed);
    let mut y = x.dot(w);
    if sigma > 0.0 {
        y.mapv_inplace(|v| v + sigma * rng.standard_normal());
    }
    Ok(y)
}

/// The three reference regressors, differing in how many of the ten genes
/// per regulator are activated (share the regulator's sign) or inhibited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example {
    Ex1,
    Ex2,
    Ex3,
}

impl Example {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Example::Ex1),
            2 => Ok(Example::Ex2),
            3 => Ok(Example::Ex3),
            _ => Err(Error::InvalidConfig(format!("example must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Example::Ex1 => 1,
            Example::Ex2 => 2,
            Example::Ex3 => 3,
        }
    }

    pub fn activated(self) -> usize {
        match self {
            Example::Ex1 => 9,
            Example::Ex2 => 8,
            Example::Ex3 => 7,
        }
    }
}

/// Four active blocks with leading values `(5, -5, 3, -3)`; genes carry
/// `±lead / sqrt(10)`, activated ones first. Everything else is zero.
pub fn true_regressor(example: Example, d: usize) -> Result<Array1<f64>> {
    let block = EXAMPLE_GENES_PER_REGULATOR + 1;
    let needed = BLOCK_LEADS.len() * block;
    if d < needed {
        return Err(Error::InvalidConfig(format!("example regressors need d >= {needed}, got {d}")));
    }
    let scale = (EXAMPLE_GENES_PER_REGULATOR as f64).sqrt();
    let mut w = Array1::zeros(d);
    for (b, &lead) in BLOCK_LEADS.iter().enumerate() {
        let base = b * block;
        w[base] = lead;
        for k in 0..EXAMPLE_GENES_PER_REGULATOR {
            let sign = if k < example.activated() { 1.0 } else { -1.0 };
            w[base + 1 + k] = sign * lead / scale;
        }
    }
    Ok(w)
}

/// Star graph whose edge signs record whether each gene's true coefficient
/// agrees in sign with its regulator's.
pub fn signed_graph_for_example(example: Example, d: usize) -> Result<FeatureGraph> {
    let block = EXAMPLE_GENES_PER_REGULATOR + 1;
    if !d.is_multiple_of(block) {
        return Err(Error::InvalidConfig(format!("d = {d} is not a multiple of {block}")));
    }
    let w = true_regressor(example, d)?;
    let mut edges = Vec::with_capacity(d / block * EXAMPLE_GENES_PER_REGULATOR);
    for r in 0..d / block {
        let reg = r * block;
        for k in 1..block {
            let sign = if w[reg] * w[reg + k] < 0.0 { EdgeSign::Negative } else { EdgeSign::Positive };
            edges.push(Edge { i: reg, j: reg + k, sign });
        }
    }
    FeatureGraph::new(d, edges)
}
