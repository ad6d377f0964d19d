//! Single-user hybrid transceiver design.
//!
//! The transmitter's analog precoder maximizes
//! `log2 det(I + c·V_RFᴴ F₁ V_RF)` over unit-modulus entries, where `F₁` is
//! the channel covariance averaged over subcarriers; per-subcarrier digital
//! precoders then follow in closed form. The receiver repeats the analog
//! step on the covariance of the received signal and closes with MMSE
//! digital combiners.

mod analog;
mod asymptotic;
mod digital;

pub use analog::{
    analog_objective, average_covariance, combiner_covariance, design_analog,
    design_analog_combiner, refine_analog, AnalogDesign, AnalogDesignOptions,
};
pub use asymptotic::{asymptotic_design, asymptotic_design_with_rf};
pub use digital::{digital_precoder, mmse_combiner, mmse_combiner_min_norm};

use std::fmt;
use std::str::FromStr;

use crate::error::{BeamError, Result};
use crate::numerics::{CMatrix, PhaseResolution, C64};

/// Analog network connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    /// Every RF chain drives every antenna.
    FullyConnected,
    /// RF chain `j` drives the `j`-th contiguous sub-array of `N / N_RF` antennas.
    PartiallyConnected,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::FullyConnected => "fully_connected",
            Structure::PartiallyConnected => "partially_connected",
        })
    }
}

impl FromStr for Structure {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fully_connected" | "full" => Ok(Structure::FullyConnected),
            "partially_connected" | "partial" => Ok(Structure::PartiallyConnected),
            other => Err(BeamError::InvalidParameter(format!(
                "unknown analog structure `{other}`"
            ))),
        }
    }
}

/// Set of entries an analog matrix may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureMask {
    pub rows: usize,
    pub cols: usize,
    pub structure: Structure,
}

impl StructureMask {
    pub fn new(rows: usize, cols: usize, structure: Structure) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(BeamError::InvalidParameter(
                "analog matrix dimensions must be positive".into(),
            ));
        }
        if cols > rows {
            return Err(BeamError::InvalidParameter(format!(
                "{cols} RF chains exceed {rows} antennas"
            )));
        }
        if structure == Structure::PartiallyConnected && rows % cols != 0 {
            return Err(BeamError::InvalidParameter(format!(
                "partially-connected structure needs N_RF ({cols}) to divide N ({rows})"
            )));
        }
        Ok(Self { rows, cols, structure })
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        match self.structure {
            Structure::FullyConnected => row < self.rows && col < self.cols,
            Structure::PartiallyConnected => row < self.rows && row / (self.rows / self.cols) == col,
        }
    }

    /// Rows allowed in column `col`, ascending.
    pub fn rows_of(&self, col: usize) -> std::ops::Range<usize> {
        match self.structure {
            Structure::FullyConnected => 0..self.rows,
            Structure::PartiallyConnected => {
                let block = self.rows / self.cols;
                col * block..(col + 1) * block
            }
        }
    }

    /// Allowed entries in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.cols).flat_map(move |j| self.rows_of(j).map(move |i| (i, j)))
    }

    /// `τ` of the receive-side objective: N for fully connected, N/N_RF otherwise.
    pub fn column_weight(&self) -> f64 {
        match self.structure {
            Structure::FullyConnected => self.rows as f64,
            Structure::PartiallyConnected => (self.rows / self.cols) as f64,
        }
    }

    /// True when `m` is zero off the mask and unit-modulus (within `tol`) on it.
    pub fn is_satisfied_by(&self, m: &CMatrix, tol: f64) -> bool {
        if m.shape() != (self.rows, self.cols) {
            return false;
        }
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let z = m[(i, j)];
                if self.allows(i, j) {
                    (z.norm() - 1.0).abs() <= tol
                } else {
                    z == C64::new(0.0, 0.0)
                }
            })
        })
    }
}

/// Antenna, RF-chain, stream and subcarrier counts plus power settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchitectureSpec {
    pub nt: usize,
    pub nr: usize,
    pub num_rf: usize,
    pub num_streams: usize,
    pub num_subcarriers: usize,
    pub structure: Structure,
    pub phase: PhaseResolution,
    /// Transmit power per subcarrier (linear).
    pub power: f64,
    /// Noise power per subcarrier (linear).
    pub noise_power: f64,
}

impl ArchitectureSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("Nt", self.nt),
            ("Nr", self.nr),
            ("N_RF", self.num_rf),
            ("Ns", self.num_streams),
            ("K", self.num_subcarriers),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(BeamError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.num_streams > self.num_rf {
            return Err(BeamError::InvalidParameter(format!(
                "Ns ({}) exceeds N_RF ({})",
                self.num_streams, self.num_rf
            )));
        }
        if self.num_rf > self.nt.min(self.nr) {
            return Err(BeamError::InvalidParameter(format!(
                "N_RF ({}) exceeds min(Nt, Nr) ({})",
                self.num_rf,
                self.nt.min(self.nr)
            )));
        }
        if self.structure == Structure::PartiallyConnected
            && (self.nt % self.num_rf != 0 || self.nr % self.num_rf != 0)
        {
            return Err(BeamError::InvalidParameter(format!(
                "partially-connected structure needs N_RF ({}) to divide Nt ({}) and Nr ({})",
                self.num_rf, self.nt, self.nr
            )));
        }
        self.phase.validate()?;
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(BeamError::InvalidParameter("power must be positive".into()));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(BeamError::InvalidParameter("noise power must be positive".into()));
        }
        Ok(())
    }

    pub fn transmit_mask(&self) -> Result<StructureMask> {
        StructureMask::new(self.nt, self.num_rf, self.structure)
    }

    pub fn receive_mask(&self) -> Result<StructureMask> {
        StructureMask::new(self.nr, self.num_rf, self.structure)
    }

    /// Digital-precoder scale `γ`: √(P/(Nt·N_RF)) fully connected, √(P/Nt) partially.
    pub fn gamma(&self) -> f64 {
        match self.structure {
            Structure::FullyConnected => (self.power / (self.nt * self.num_rf) as f64).sqrt(),
            Structure::PartiallyConnected => (self.power / self.nt as f64).sqrt(),
        }
    }
}

/// Analog and per-subcarrier digital stages of a hybrid transceiver.
#[derive(Debug, Clone)]
pub struct HybridBeamformer {
    /// V_RF, Nt × N_RF.
    pub analog_precoder: CMatrix,
    /// V_D[k], N_RF × Ns.
    pub digital_precoders: Vec<CMatrix>,
    /// W_RF, Nr × N_RF.
    pub analog_combiner: CMatrix,
    /// W_D[k], N_RF × Ns.
    pub digital_combiners: Vec<CMatrix>,
    pub gamma: f64,
}

impl HybridBeamformer {
    /// V_t[k] = V_RF V_D[k].
    pub fn precoder(&self, k: usize) -> CMatrix {
        &self.analog_precoder * &self.digital_precoders[k]
    }

    /// W_t[k] = W_RF W_D[k].
    pub fn combiner(&self, k: usize) -> CMatrix {
        &self.analog_combiner * &self.digital_combiners[k]
    }

    pub fn num_subcarriers(&self) -> usize {
        self.digital_precoders.len()
    }

    /// Tr(V_t[k] V_t[k]ᴴ) for every subcarrier.
    pub fn transmit_powers(&self) -> Vec<f64> {
        (0..self.num_subcarriers())
            .map(|k| self.precoder(k).norm_squared())
            .collect()
    }
}

/// Settings of the full transceiver pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesignOptions {
    pub analog: AnalogDesignOptions,
    /// Uniform stream powers instead of water-filling.
    pub equal_power: bool,
}

/// Transmitter-then-receiver hybrid design:
/// analog precoder on F₁, closed-form digital precoders, analog combiner on
/// F₂, MMSE digital combiners.
pub fn design_transceiver(
    channels: &[CMatrix],
    spec: &ArchitectureSpec,
    opts: &DesignOptions,
) -> Result<HybridBeamformer> {
    spec.validate()?;
    if channels.len() != spec.num_subcarriers {
        return Err(BeamError::Dimension(format!(
            "expected {} subcarrier channels, got {}",
            spec.num_subcarriers,
            channels.len()
        )));
    }
    let tx_mask = spec.transmit_mask()?;
    let rx_mask = spec.receive_mask()?;
    let sigma2 = spec.noise_power;
    let gamma = spec.gamma();

    let f1 = average_covariance(channels)?;
    if f1.nrows() != spec.nt {
        return Err(BeamError::Dimension(format!(
            "channels have {} transmit antennas, spec has {}",
            f1.nrows(),
            spec.nt
        )));
    }
    let v_rf = design_analog(&f1, &tx_mask, gamma * gamma / sigma2, spec.phase, &opts.analog)?
        .matrix;

    let digital_precoders = channels
        .iter()
        .map(|h| {
            digital_precoder(h, &v_rf, spec.num_streams, spec.power, sigma2, opts.equal_power)
        })
        .collect::<Result<Vec<_>>>()?;
    let transmit: Vec<CMatrix> = digital_precoders.iter().map(|vd| &v_rf * vd).collect();

    let f2 = combiner_covariance(channels, &transmit)?;
    let rx_opts = AnalogDesignOptions {
        init_seed: opts.analog.init_seed.wrapping_add(1),
        ..opts.analog
    };
    let w_rf = design_analog_combiner(&f2, &rx_mask, sigma2, spec.phase, &rx_opts)?.matrix;

    let digital_combiners = channels
        .iter()
        .zip(&transmit)
        .map(|(h, vt)| mmse_combiner_min_norm(h, vt, &w_rf, sigma2))
        .collect::<Result<Vec<_>>>()?;

    Ok(HybridBeamformer {
        analog_precoder: v_rf,
        digital_precoders,
        analog_combiner: w_rf,
        digital_combiners,
        gamma,
    })
}
